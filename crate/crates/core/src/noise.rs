//! Seedable random streams and the per-step noise samplers: Brownian
//! increments, Poisson event counts and categorical mark selection.
//!
//! A stream is ChaCha8 keyed from the run seed, with the ChaCha stream
//! selector set to a splitmix64 mix of `(seed, stream_id)`. The mix is a
//! bijection in `stream_id` for a fixed seed, so distinct path indices always
//! select distinct ChaCha streams.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Poisson, StandardNormal};

use crate::error::{Result, SicaError};
use crate::model::LevyMeasure;

/// Recorded in output metadata so runs can be reproduced.
pub const GENERATOR: &str = "ChaCha8 (rand_chacha 0.9); key = seed_from_u64(seed); stream = splitmix64(stream_id + splitmix64(seed))";

/// splitmix64 output function (Steele, Lea, Flood), full avalanche.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix_stream(seed: u64, stream_id: u64) -> u64 {
    splitmix64(stream_id.wrapping_add(splitmix64(seed)))
}

/// A deterministic random stream owned by exactly one path.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(mix_stream(seed, stream_id));
        RngStream { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    #[inline]
    pub(crate) fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Indices of the marks that fired during one step, in sampled order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct JumpBatch {
    pub count: usize,
    pub mark_indices: Vec<usize>,
}

/// One `Normal(0, dt)` draw.
pub fn gaussian_increment(rng: &mut RngStream, dt: f64) -> Result<f64> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SicaError::domain(format!("dt must be finite and > 0, got {dt}")));
    }
    Ok(rng.standard_normal() * dt.sqrt())
}

/// One `Poisson(rate_dt)` draw.
pub fn poisson_count(rng: &mut RngStream, rate_dt: f64) -> Result<u64> {
    if !(rate_dt >= 0.0 && rate_dt.is_finite()) {
        return Err(SicaError::domain(format!(
            "Poisson mean must be finite and >= 0, got {rate_dt}"
        )));
    }
    if rate_dt == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(rate_dt).map_err(|e| SicaError::domain(e.to_string()))?;
    Ok(dist.sample(rng) as u64)
}

/// Draws `count` i.i.d. mark indices, mark `k` with probability `λ_k / Σλ`.
pub fn sample_marks(rng: &mut RngStream, levy: &LevyMeasure, count: usize) -> Result<JumpBatch> {
    if count == 0 {
        return Ok(JumpBatch::default());
    }
    let picker = MarkPicker::new(levy)?
        .ok_or_else(|| SicaError::domain("cannot sample marks from an empty jump measure"))?;
    let mark_indices = (0..count).map(|_| picker.pick(rng)).collect();
    Ok(JumpBatch { count, mark_indices })
}

enum MarkPicker {
    Single,
    Weighted(WeightedIndex<f64>),
}

impl MarkPicker {
    fn new(levy: &LevyMeasure) -> Result<Option<Self>> {
        Ok(match levy.marks.len() {
            0 => None,
            1 => Some(MarkPicker::Single),
            _ => {
                let w = WeightedIndex::new(levy.marks.iter().map(|m| m.rate))
                    .map_err(|e| SicaError::domain(format!("mark rates: {e}")))?;
                Some(MarkPicker::Weighted(w))
            }
        })
    }

    #[inline]
    fn pick(&self, rng: &mut RngStream) -> usize {
        match self {
            MarkPicker::Single => 0,
            MarkPicker::Weighted(w) => w.sample(rng),
        }
    }
}

/// Per-path sampler with the step-size dependent distributions built once.
/// Draw order per step is: one Gaussian, one Poisson count, then one mark
/// index per event. It consumes the stream exactly like the free functions.
pub(crate) struct StepNoise {
    sqrt_dt: f64,
    count: Option<Poisson<f64>>,
    picker: Option<MarkPicker>,
}

impl StepNoise {
    pub(crate) fn new(levy: &LevyMeasure, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SicaError::domain(format!("dt must be finite and > 0, got {dt}")));
        }
        let rate_dt = levy.total_rate() * dt;
        let count = if rate_dt > 0.0 {
            Some(Poisson::new(rate_dt).map_err(|e| SicaError::domain(e.to_string()))?)
        } else {
            None
        };
        Ok(StepNoise {
            sqrt_dt: dt.sqrt(),
            count,
            picker: MarkPicker::new(levy)?,
        })
    }

    #[inline]
    pub(crate) fn brownian(&self, rng: &mut RngStream) -> f64 {
        rng.standard_normal() * self.sqrt_dt
    }

    /// Appends the mark indices fired in this step to `out`.
    #[inline]
    pub(crate) fn jumps(&self, rng: &mut RngStream, out: &mut Vec<usize>) {
        out.clear();
        if let (Some(count), Some(picker)) = (&self.count, &self.picker) {
            let n = count.sample(rng) as usize;
            out.extend((0..n).map(|_| picker.pick(rng)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::JumpMark;

    #[test]
    fn replay_is_bit_exact() {
        let mut a = RngStream::new(42, 7);
        let mut b = RngStream::new(42, 7);
        for _ in 0..1000 {
            let x = gaussian_increment(&mut a, 0.01).unwrap();
            let y = gaussian_increment(&mut b, 0.01).unwrap();
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = RngStream::new(42, 0);
        let mut b = RngStream::new(42, 1);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn stream_mix_is_injective_on_small_range() {
        let mut seen = std::collections::HashSet::new();
        for k in 0..10_000 {
            assert!(seen.insert(mix_stream(1, k)));
        }
    }

    #[test]
    fn domain_errors() {
        let mut r = RngStream::new(0, 0);
        assert!(gaussian_increment(&mut r, 0.0).is_err());
        assert!(gaussian_increment(&mut r, -1.0).is_err());
        assert!(poisson_count(&mut r, -0.1).is_err());
        assert!(poisson_count(&mut r, f64::INFINITY).is_err());
        assert!(sample_marks(&mut r, &LevyMeasure::empty(), 3).is_err());
    }

    #[test]
    fn degenerate_cases() {
        let mut r = RngStream::new(3, 0);
        assert!((0..100).all(|_| poisson_count(&mut r, 0.0).unwrap() == 0));
        let one = LevyMeasure::single(1e-4, 2.0).unwrap();
        assert_eq!(sample_marks(&mut r, &one, 5).unwrap().mark_indices, vec![0; 5]);
        assert_eq!(sample_marks(&mut r, &one, 0).unwrap(), JumpBatch::default());
    }

    #[test]
    fn step_noise_matches_free_functions() {
        let levy = LevyMeasure::new(vec![
            JumpMark { jump_size: 1e-4, rate: 40.0 },
            JumpMark { jump_size: 2e-4, rate: 60.0 },
        ])
        .unwrap();
        let dt = 0.01;
        let noise = StepNoise::new(&levy, dt).unwrap();
        let mut a = RngStream::new(9, 2);
        let mut b = RngStream::new(9, 2);
        let mut buf = Vec::new();
        for _ in 0..500 {
            let w = noise.brownian(&mut a);
            noise.jumps(&mut a, &mut buf);
            let w2 = gaussian_increment(&mut b, dt).unwrap();
            let n = poisson_count(&mut b, levy.total_rate() * dt).unwrap() as usize;
            let batch = sample_marks(&mut b, &levy, n).unwrap();
            assert_eq!(w.to_bits(), w2.to_bits());
            assert_eq!(buf, batch.mark_indices);
        }
    }
}
