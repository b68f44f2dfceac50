//! Built-in invariant suite behind `sica verify`: mass balance per step,
//! population bounds, the noise-free limit against RK4, the linear C/A
//! oracle and sampler moments.

use serde::Serialize;

use crate::error::Result;
use crate::integrator::{
    em_step_with_noise, exact_linear_ca, positivity_step_bound, simulate, simulate_ode, GridSpec,
    Trajectory,
};
use crate::model::{JumpMark, LevyMeasure, SicaParams, SicaState};
use crate::noise::{gaussian_increment, poisson_count, sample_marks, RngStream};

pub const MASS_RESIDUAL_TOL: f64 = 1e-12;
pub const BOUND_REL_TOL: f64 = 1e-3;
pub const ODE_AGREEMENT_TOL: f64 = 5e-3;
pub const LINEAR_CA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Largest pointwise `|a − b| / |b|` over all recorded compartments, skipping
/// entries where both are zero.
pub fn max_relative_gap(a: &Trajectory, b: &Trajectory) -> f64 {
    a.states
        .iter()
        .zip(&b.states)
        .flat_map(|(x, y)| x.as_array().into_iter().zip(y.as_array()))
        .filter(|(u, v)| *u != 0.0 || *v != 0.0)
        .map(|(u, v)| (u - v).abs() / v.abs())
        .fold(0.0, f64::max)
}

/// Relative jump measure of size `fraction·μ/Λ` at `rate`.
pub fn scaled_levy(p: &SicaParams, fraction: f64, rate: f64) -> LevyMeasure {
    LevyMeasure {
        marks: vec![JumpMark {
            jump_size: fraction * p.mu / p.lambda,
            rate,
        }],
    }
}

fn mass_balance(seed: u64) -> Result<Check> {
    let mut worst: f64 = 0.0;
    let mut clamps = 0;
    for (k, p) in [SicaParams::extinction_regime(), SicaParams::persistence_regime()]
        .into_iter()
        .enumerate()
    {
        let levy = scaled_levy(&p, 0.4, 20.0);
        let dt = positivity_step_bound(&p).min(1e-3);
        let grid = GridSpec::new(50.0, dt, 1000)?;
        let tr = simulate(&SicaState::default_initial(&p), &p, &levy, &grid, &mut RngStream::new(seed, k as u64))?;
        worst = worst.max(tr.diagnostics.max_mass_residual);
        clamps += tr.diagnostics.clamp_count;
    }
    Ok(Check::new(
        "per-step mass balance",
        worst <= MASS_RESIDUAL_TOL && clamps == 0,
        format!("max residual {worst:.3e} (tol {MASS_RESIDUAL_TOL:e}), clamps {clamps}"),
    ))
}

fn population_bounds(seed: u64) -> Result<Check> {
    let p = SicaParams::extinction_regime();
    let levy = scaled_levy(&p, 0.4, 1.0);
    let burn_in = 10.0 / p.mu;
    let grid = GridSpec::new(burn_in + 200.0, 1e-4, 1000)?;
    let tr = simulate(&SicaState::default_initial(&p), &p, &levy, &grid, &mut RngStream::new(seed, 100))?;
    let (lo, hi) = (p.n_lower() * (1.0 - BOUND_REL_TOL), p.n_upper() * (1.0 + BOUND_REL_TOL));
    let tail: Vec<f64> = tr
        .times
        .iter()
        .zip(&tr.states)
        .filter(|(t, _)| **t >= burn_in)
        .map(|(_, x)| x.total())
        .collect();
    let ok = !tail.is_empty() && tail.iter().all(|n| (lo..=hi).contains(n));
    let d = &tr.diagnostics;
    Ok(Check::new(
        "population bounds after burn-in",
        ok && d.clamp_count == 0 && d.jump_overflow_count == 0,
        format!(
            "{} points after t = {burn_in}, N in [{:.4}, {:.4}], allowed [{lo:.4}, {hi:.4}]",
            tail.len(),
            tail.iter().copied().fold(f64::INFINITY, f64::min),
            tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ),
    ))
}

fn noise_free_limit() -> Result<Check> {
    let p = SicaParams::extinction_regime().with_sigma(0.0);
    let x0 = SicaState::new(400.0, 10.0, 5.0, 5.0);
    let grid = GridSpec::new(100.0, 1e-3, 1000)?;
    let em = simulate(&x0, &p, &LevyMeasure::empty(), &grid, &mut RngStream::new(0, 0))?;
    let rk = simulate_ode(&x0, &p, &grid)?;
    let gap = max_relative_gap(&em, &rk);
    Ok(Check::new(
        "noise-free Euler-Maruyama vs RK4",
        gap <= ODE_AGREEMENT_TOL,
        format!("max relative gap {gap:.3e} (tol {ODE_AGREEMENT_TOL:e})"),
    ))
}

fn linear_ca_oracle() -> Result<Check> {
    let p = SicaParams::extinction_regime();
    // Closed form against a fine RK4 of the frozen-I linear rows.
    let (i, c0, a0, t_end) = (2.0, 1.5, 0.5, 10.0);
    let h = 1e-3;
    let n = (t_end / h) as usize;
    let f = |c: f64, a: f64| (p.phi * i - (p.omega + p.mu) * c, p.rho * i - (p.alpha + p.mu + p.d) * a);
    let (mut c, mut a) = (c0, a0);
    for _ in 0..n {
        let k1 = f(c, a);
        let k2 = f(c + 0.5 * h * k1.0, a + 0.5 * h * k1.1);
        let k3 = f(c + 0.5 * h * k2.0, a + 0.5 * h * k2.1);
        let k4 = f(c + h * k3.0, a + h * k3.1);
        c += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        a += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    let (ce, ae) = exact_linear_ca(i, c0, a0, &p, t_end);
    let err = (ce - c).abs().max((ae - a).abs());

    // One Euler step agrees with the closed form to second order.
    let x = SicaState::new(0.0, i, c0, a0);
    let local = |dt: f64| -> Result<f64> {
        let y = em_step_with_noise(&x, &p.with_sigma(0.0), &LevyMeasure::empty(), dt, 0.0, &[])?.state;
        let (cx, ax) = exact_linear_ca(i, c0, a0, &p, dt);
        Ok((y.c - cx).abs().max((y.a - ax).abs()))
    };
    let ratio = local(1e-2)? / local(5e-3)?;
    Ok(Check::new(
        "closed-form C/A oracle",
        err <= LINEAR_CA_TOL && (3.6..=4.4).contains(&ratio),
        format!("closed form vs RK4 {err:.3e}; local error ratio on halving dt {ratio:.3}"),
    ))
}

fn sampler_moments(seed: u64) -> Result<Vec<Check>> {
    const N: usize = 1_000_000;
    let mut rng = RngStream::new(seed, 1_000);
    let dt = 0.01;
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..N {
        let x = gaussian_increment(&mut rng, dt)?;
        sum += x;
        sq += x * x;
    }
    let mean = sum / N as f64;
    let var = sq / N as f64 - mean * mean;
    let gauss = Check::new(
        "Brownian increment moments",
        mean.abs() <= 4e-4 && (var / dt - 1.0).abs() <= 0.01,
        format!("mean {mean:.3e}, variance {var:.6e}"),
    );

    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..N {
        let k = poisson_count(&mut rng, 0.5)? as f64;
        sum += k;
        sq += k * k;
    }
    let mean = sum / N as f64;
    let var = sq / N as f64 - mean * mean;
    let pois = Check::new(
        "Poisson count moments",
        (mean / 0.5 - 1.0).abs() <= 0.01 && (var / 0.5 - 1.0).abs() <= 0.02,
        format!("mean {mean:.6}, variance {var:.6}"),
    );

    let levy = LevyMeasure::new(vec![
        JumpMark { jump_size: 1e-4, rate: 1.0 },
        JumpMark { jump_size: 1e-4, rate: 3.0 },
    ])?;
    let batch = sample_marks(&mut rng, &levy, N)?;
    let freq = batch.mark_indices.iter().filter(|&&k| k == 1).count() as f64 / N as f64;
    let cat = Check::new(
        "categorical mark frequencies",
        (freq / 0.75 - 1.0).abs() <= 0.01,
        format!("frequency of mark 1: {freq:.5} (expected 0.75)"),
    );
    Ok(vec![gauss, pois, cat])
}

fn replay(seed: u64) -> Result<Check> {
    let p = SicaParams::extinction_regime();
    let levy = scaled_levy(&p, 0.4, 5.0);
    let grid = GridSpec::new(5.0, 1e-3, 10)?;
    let x0 = SicaState::default_initial(&p);
    let a = simulate(&x0, &p, &levy, &grid, &mut RngStream::new(seed, 3))?;
    let b = simulate(&x0, &p, &levy, &grid, &mut RngStream::new(seed, 3))?;
    Ok(Check::new("replay determinism", a == b, format!("{} recorded points", a.len())))
}

/// Runs every check. Errors from the simulations themselves are reported as
/// failed checks.
pub fn run_all(seed: u64) -> Vec<Check> {
    let wrap = |name: &str, r: Result<Check>| r.unwrap_or_else(|e| Check::new(name, false, e.to_string()));
    let mut checks = vec![
        wrap("per-step mass balance", mass_balance(seed)),
        wrap("population bounds after burn-in", population_bounds(seed)),
        wrap("noise-free Euler-Maruyama vs RK4", noise_free_limit()),
        wrap("closed-form C/A oracle", linear_ca_oracle()),
    ];
    match sampler_moments(seed) {
        Ok(cs) => checks.extend(cs),
        Err(e) => checks.push(Check::new("sampler moments", false, e.to_string())),
    }
    checks.push(wrap("replay determinism", replay(seed)));
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_gap() {
        let t = |v: f64| Trajectory::from_samples(vec![0.0], vec![SicaState::new(v, 0.0, 1.0, 2.0)]).unwrap();
        assert_eq!(max_relative_gap(&t(1.0), &t(1.0)), 0.0);
        assert!((max_relative_gap(&t(1.1), &t(1.0)) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn oracle_check_passes() {
        let c = linear_ca_oracle().unwrap();
        assert!(c.passed, "{c:?}");
    }
}
