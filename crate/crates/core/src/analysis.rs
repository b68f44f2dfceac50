//! Post-processing of trajectories: running time averages, the empirical
//! Lyapunov exponent of I, persistence checks against the mean lower bounds,
//! martingale diagnostics and ensemble statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Result, SicaError};
use crate::integrator::{simulate, Trajectory};
use crate::model::{compute_thresholds, Compartment, SicaParams, ThresholdReport};
use crate::noise::RngStream;

/// Points below this are dropped from the log-linear fit.
pub const LOG_FLOOR: f64 = 1e-300;
pub const MIN_FIT_POINTS: usize = 10;
/// Relative slack on the quadratic-variation bound.
pub const QV_BOUND_SLACK: f64 = 1e-6;

/// Running trapezoid average `⟨x(t)⟩ = (1/t)∫₀ᵗ x ds` on the sample grid.
/// The first entry is `x(t₀)`.
pub fn running_average(times: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    if times.is_empty() || times.len() != values.len() {
        return Err(SicaError::domain("running average needs matching, nonempty series"));
    }
    let t0 = times[0];
    let mut out = Vec::with_capacity(values.len());
    out.push(values[0]);
    let mut integral = 0.0;
    for k in 1..times.len() {
        integral += 0.5 * (values[k] + values[k - 1]) * (times[k] - times[k - 1]);
        out.push(integral / (times[k] - t0));
    }
    Ok(out)
}

pub fn time_average(traj: &Trajectory, component: Compartment) -> Result<Vec<f64>> {
    running_average(&traj.times, &traj.component(component))
}

/// Index of the first sample in the last `tail_fraction` of the time span.
fn tail_start(times: &[f64], tail_fraction: f64) -> usize {
    let (t0, t1) = (times[0], times[times.len() - 1]);
    let cut = t1 - tail_fraction * (t1 - t0);
    times.partition_point(|&t| t < cut)
}

fn check_fraction(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(SicaError::domain(format!("{name} must lie in (0, 1), got {x}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionVerdict {
    /// Least-squares slope of `log I` against t over the tail window.
    pub lyapunov_slope: f64,
    pub final_i: f64,
    pub classified_extinct: bool,
    pub points_used: usize,
    /// Set when the fit stopped early at an I value below [`LOG_FLOOR`].
    pub truncated_at_floor: bool,
}

/// Ordinary least-squares slope, with the coefficient of determination.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Fits `log I(t)` over the last `tail_fraction` of the run. A path is
/// classified extinct when the slope is negative and the final I is below
/// `eps_extinct`.
pub fn lyapunov_estimate(
    traj: &Trajectory,
    tail_fraction: f64,
    eps_extinct: f64,
) -> Result<ExtinctionVerdict> {
    check_fraction("tail_fraction", tail_fraction)?;
    if traj.is_empty() {
        return Err(SicaError::InsufficientData { usable: 0, required: MIN_FIT_POINTS });
    }
    let start = tail_start(&traj.times, tail_fraction);
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    let mut truncated = false;
    for (t, x) in traj.times[start..].iter().zip(&traj.states[start..]) {
        if x.i.is_nan() || x.i < LOG_FLOOR {
            truncated = true;
            break;
        }
        ts.push(*t);
        logs.push(x.i.ln());
    }
    if ts.len() < MIN_FIT_POINTS {
        return Err(SicaError::InsufficientData {
            usable: ts.len(),
            required: MIN_FIT_POINTS,
        });
    }
    let (slope, _) = linear_fit(&ts, &logs);
    let final_i = traj.states[traj.len() - 1].i;
    Ok(ExtinctionVerdict {
        lyapunov_slope: slope,
        final_i,
        classified_extinct: slope < 0.0 && final_i < eps_extinct,
        points_used: ts.len(),
        truncated_at_floor: truncated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceVerdict {
    /// Mean of `⟨I(t)⟩` over the tail window.
    pub i_time_avg_tail: f64,
    pub s_time_avg_tail: f64,
    pub i_bound: f64,
    pub s_bound: f64,
    pub i_satisfied: bool,
    pub s_satisfied: bool,
    /// The persistence criterion does not hold for these parameters, so the
    /// bounds carry no guarantee.
    pub informational: bool,
}

pub fn verify_persistence(
    traj: &Trajectory,
    report: &ThresholdReport,
    tail_fraction: f64,
    margin: f64,
) -> Result<PersistenceVerdict> {
    check_fraction("tail_fraction", tail_fraction)?;
    let i_avg = time_average(traj, Compartment::I)?;
    let s_avg = time_average(traj, Compartment::S)?;
    let start = tail_start(&traj.times, tail_fraction);
    let tail_mean = |xs: &[f64]| xs[start..].iter().sum::<f64>() / (xs.len() - start) as f64;
    let i_tail = tail_mean(&i_avg);
    let s_tail = tail_mean(&s_avg);
    Ok(PersistenceVerdict {
        i_time_avg_tail: i_tail,
        s_time_avg_tail: s_tail,
        i_bound: report.i_mean_lower_bound,
        s_bound: report.s_mean_lower_bound,
        i_satisfied: i_tail >= margin * report.i_mean_lower_bound,
        s_satisfied: s_tail >= margin * report.s_mean_lower_bound,
        informational: !report.persistence_holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleDiagnostic {
    /// `M_T / T`.
    pub m_over_t_final: f64,
    /// `(1/T) Σ σ²S²Δt`.
    pub qv_over_t_final: f64,
    /// `σ²(Λ/μ)²`.
    pub qv_bound: f64,
    pub stayed_in_region: bool,
    /// `qv_over_t_final ≤ qv_bound·(1 + 1e-6)`; the bound is only guaranteed
    /// when the path stayed in the feasible region.
    pub bound_respected: bool,
}

pub fn martingale_diagnostic(traj: &Trajectory, p: &SicaParams) -> MartingaleDiagnostic {
    let t_end = traj.final_time().unwrap_or(0.0);
    let d = &traj.diagnostics;
    let per_t = |x: f64| if t_end > 0.0 { x / t_end } else { 0.0 };
    let m_final = d.martingale_path.last().copied().unwrap_or(0.0);
    let qv_over_t = per_t(d.quadratic_variation);
    let qv_bound = p.sigma * p.sigma * p.n_upper() * p.n_upper();
    MartingaleDiagnostic {
        m_over_t_final: per_t(m_final),
        qv_over_t_final: qv_over_t,
        qv_bound,
        stayed_in_region: d.stayed_in_region(p, 0.0),
        bound_respected: qv_over_t <= qv_bound * (1.0 + QV_BOUND_SLACK),
    }
}

/// Per-time statistics of one compartment across paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompartmentStats {
    pub compartment: Compartment,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub q025: Vec<f64>,
    pub q50: Vec<f64>,
    pub q975: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub path_count: usize,
    /// In S, I, C, A order.
    pub compartments: Vec<CompartmentStats>,
}

impl EnsembleStats {
    pub fn get(&self, c: Compartment) -> &CompartmentStats {
        &self.compartments[Compartment::ALL.iter().position(|&x| x == c).unwrap()]
    }
}

/// Quantile of sorted data by linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Reduces paths in index order. All paths must share one time grid.
pub fn ensemble_stats(trajs: &[Trajectory]) -> Result<EnsembleStats> {
    let first = trajs
        .first()
        .ok_or_else(|| SicaError::domain("ensemble needs at least one path"))?;
    if trajs.iter().any(|t| t.times != first.times) {
        return Err(SicaError::domain("ensemble paths do not share a time grid"));
    }
    let n_t = first.len();
    let mut compartments = Vec::with_capacity(4);
    let mut column = vec![0.0; trajs.len()];
    for c in Compartment::ALL {
        let mut st = CompartmentStats {
            compartment: c,
            mean: Vec::with_capacity(n_t),
            variance: Vec::with_capacity(n_t),
            q025: Vec::with_capacity(n_t),
            q50: Vec::with_capacity(n_t),
            q975: Vec::with_capacity(n_t),
        };
        for k in 0..n_t {
            // Welford: identical inputs give exactly that mean and zero variance.
            let (mut mean, mut m2) = (0.0, 0.0);
            for (j, t) in trajs.iter().enumerate() {
                let x = t.states[k].get(c);
                column[j] = x;
                let delta = x - mean;
                mean += delta / (j + 1) as f64;
                m2 += delta * (x - mean);
            }
            column.sort_by(f64::total_cmp);
            st.mean.push(mean);
            st.variance.push((m2 / trajs.len() as f64).max(0.0));
            st.q025.push(quantile_sorted(&column, 0.025));
            st.q50.push(quantile_sorted(&column, 0.5));
            st.q975.push(quantile_sorted(&column, 0.975));
        }
        compartments.push(st);
    }
    Ok(EnsembleStats {
        times: first.times.clone(),
        path_count: trajs.len(),
        compartments,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub path_index: u64,
    /// `None` when the log-linear fit had too few usable points.
    pub extinction: Option<ExtinctionVerdict>,
    pub persistence: PersistenceVerdict,
    pub martingale: MartingaleDiagnostic,
    pub clamp_count: u64,
    pub jump_count: u64,
    pub jump_overflow_count: u64,
    pub max_mass_residual: f64,
    pub final_state: crate::model::SicaState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRates {
    pub path_count: usize,
    pub extinct_rate: f64,
    pub persistence_i_rate: f64,
    pub persistence_s_rate: f64,
    pub paths_in_region: usize,
    pub total_clamps: u64,
    pub total_jump_overflows: u64,
    pub total_jumps: u64,
    pub max_mass_residual: f64,
}

#[derive(Debug, Clone)]
pub struct EnsembleOutcome {
    pub stats: EnsembleStats,
    pub thresholds: ThresholdReport,
    pub paths: Vec<PathSummary>,
    pub rates: VerdictRates,
    pub trajectories: Vec<Trajectory>,
}

pub fn summarize_path(
    path_index: u64,
    traj: &Trajectory,
    config: &RunConfig,
    report: &ThresholdReport,
) -> Result<PathSummary> {
    let knobs = &config.analysis;
    let extinction = match lyapunov_estimate(traj, knobs.tail_fraction, knobs.eps_extinct) {
        Ok(v) => Some(v),
        Err(SicaError::InsufficientData { .. }) => None,
        Err(e) => return Err(e),
    };
    let d = &traj.diagnostics;
    Ok(PathSummary {
        path_index,
        extinction,
        persistence: verify_persistence(traj, report, knobs.tail_fraction, knobs.margin)?,
        martingale: martingale_diagnostic(traj, &config.params),
        clamp_count: d.clamp_count,
        jump_count: d.jump_count,
        jump_overflow_count: d.jump_overflow_count,
        max_mass_residual: d.max_mass_residual,
        final_state: *traj.final_state().expect("nonempty trajectory"),
    })
}

fn rates(paths: &[PathSummary]) -> VerdictRates {
    let n = paths.len();
    let frac = |k: usize| k as f64 / n as f64;
    VerdictRates {
        path_count: n,
        extinct_rate: frac(paths
            .iter()
            .filter(|p| p.extinction.as_ref().is_some_and(|e| e.classified_extinct))
            .count()),
        persistence_i_rate: frac(paths.iter().filter(|p| p.persistence.i_satisfied).count()),
        persistence_s_rate: frac(paths.iter().filter(|p| p.persistence.s_satisfied).count()),
        paths_in_region: paths.iter().filter(|p| p.martingale.stayed_in_region).count(),
        total_clamps: paths.iter().map(|p| p.clamp_count).sum(),
        total_jump_overflows: paths.iter().map(|p| p.jump_overflow_count).sum(),
        total_jumps: paths.iter().map(|p| p.jump_count).sum(),
        max_mass_residual: paths.iter().map(|p| p.max_mass_residual).fold(0.0, f64::max),
    }
}

/// Simulates `config.path_count` paths, path `k` on stream `(seed, k)`, and
/// reduces them in path order. Output is a deterministic function of the
/// config.
pub fn ensemble_run(config: &RunConfig) -> Result<EnsembleOutcome> {
    config.validate()?;
    let initial = config.initial_state();
    let report = compute_thresholds(&config.params, &config.levy);
    let trajectories = (0..config.path_count as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = RngStream::new(config.seed, k);
            simulate(&initial, &config.params, &config.levy, &config.grid, &mut rng).map_err(|e| {
                SicaError::PathFailed {
                    path_index: k,
                    source: Box::new(e),
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let paths = trajectories
        .par_iter()
        .enumerate()
        .map(|(k, t)| summarize_path(k as u64, t, config, &report))
        .collect::<Result<Vec<_>>>()?;
    let stats = ensemble_stats(&trajectories)?;
    let rates = rates(&paths);
    Ok(EnsembleOutcome {
        stats,
        thresholds: report,
        paths,
        rates,
        trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SicaState;

    fn synthetic(times: &[f64], f: impl Fn(f64) -> f64) -> Trajectory {
        let states = times.iter().map(|&t| SicaState::new(f(t), f(t), 0.0, 0.0)).collect();
        Trajectory::from_samples(times.to_vec(), states).unwrap()
    }

    fn grid(t_end: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
    }

    #[test]
    fn average_of_constant() {
        let tr = synthetic(&grid(10.0, 100), |_| 3.25);
        assert!(time_average(&tr, Compartment::I).unwrap().iter().all(|&x| (x - 3.25).abs() < 1e-14));
    }

    #[test]
    fn average_of_linear_is_exact() {
        let ts = grid(7.0, 70);
        let avg = running_average(&ts, &ts).unwrap();
        assert!((avg[70] - 3.5).abs() < 1e-13);
        assert_eq!(avg[0], 0.0);
    }

    #[test]
    fn average_of_exponential() {
        let ts = grid(10.0, 10_000);
        let xs: Vec<f64> = ts.iter().map(|t| (-t).exp()).collect();
        let avg = running_average(&ts, &xs).unwrap();
        let exact = (1.0 - (-10.0f64).exp()) / 10.0;
        assert!((avg[10_000] - exact).abs() < 1e-6);
        assert!((exact - 0.099_995_5).abs() < 1e-7);
    }

    #[test]
    fn average_rejects_empty() {
        assert!(running_average(&[], &[]).is_err());
    }

    #[test]
    fn slope_of_exponential() {
        let tr = synthetic(&grid(40.0, 400), |t| (-0.5 * t).exp());
        let v = lyapunov_estimate(&tr, 0.5, 1e-3).unwrap();
        assert!((v.lyapunov_slope + 0.5).abs() < 1e-6, "{}", v.lyapunov_slope);
        assert!(v.classified_extinct);
        assert!(!v.truncated_at_floor);
    }

    #[test]
    fn slope_of_constant() {
        let tr = synthetic(&grid(40.0, 400), |_| 5.0);
        let v = lyapunov_estimate(&tr, 0.5, 1e-3).unwrap();
        assert!(v.lyapunov_slope.abs() < 1e-12);
        assert!(!v.classified_extinct);
    }

    #[test]
    fn fit_stops_at_floor() {
        let tr = synthetic(&grid(40.0, 400), |t| if t > 35.0 { 0.0 } else { (-t).exp() });
        let v = lyapunov_estimate(&tr, 0.5, 1e-3).unwrap();
        assert!(v.truncated_at_floor);
        assert!((v.lyapunov_slope + 1.0).abs() < 1e-6);
        assert!(v.points_used < 201);

        let short = synthetic(&grid(40.0, 10), |t| (-t).exp());
        assert!(matches!(
            lyapunov_estimate(&short, 0.5, 1e-3),
            Err(SicaError::InsufficientData { .. })
        ));
    }

    #[test]
    fn persistence_gating() {
        let p = SicaParams::extinction_regime();
        let report = compute_thresholds(&p, &crate::model::LevyMeasure::empty());
        assert!(!report.persistence_holds);
        let tr = synthetic(&grid(10.0, 100), |_| 1.0);
        let v = verify_persistence(&tr, &report, 0.5, 0.9).unwrap();
        assert!(v.informational);
    }

    #[test]
    fn persistence_margin() {
        let report = compute_thresholds(&SicaParams::persistence_regime(), &crate::model::LevyMeasure::empty());
        let tr = synthetic(&grid(10.0, 100), |_| 0.91 * report.i_mean_lower_bound);
        let v = verify_persistence(&tr, &report, 0.5, 0.9).unwrap();
        assert!(v.i_satisfied && !v.informational);
        let v = verify_persistence(&tr, &report, 0.5, 0.95).unwrap();
        assert!(!v.i_satisfied);
    }

    #[test]
    fn quantiles_interpolate() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&xs, 0.5), 3.0);
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 5.0);
        assert!((quantile_sorted(&xs, 0.025) - 1.1).abs() < 1e-12);
        assert_eq!(quantile_sorted(&[7.0], 0.975), 7.0);
    }

    #[test]
    fn single_path_stats() {
        let tr = synthetic(&grid(1.0, 10), |t| 1.0 + t);
        let st = ensemble_stats(std::slice::from_ref(&tr)).unwrap();
        let s = st.get(Compartment::S);
        assert_eq!(s.mean, tr.component(Compartment::S));
        assert!(s.variance.iter().all(|&v| v == 0.0));
        assert_eq!(s.q025, s.q975);
    }

    #[test]
    fn identical_paths_have_zero_variance() {
        let tr = synthetic(&grid(1.0, 10), |t| 0.1 + t / 3.0);
        let st = ensemble_stats(&vec![tr.clone(); 7]).unwrap();
        for c in &st.compartments {
            assert!(c.variance.iter().all(|&v| v == 0.0));
            assert_eq!(c.mean, tr.component(c.compartment));
        }
    }

    #[test]
    fn zero_sigma_martingale_is_zero() {
        let p = SicaParams::extinction_regime().with_sigma(0.0);
        let grid = crate::integrator::GridSpec::new(5.0, 0.01, 10).unwrap();
        let x0 = SicaState::default_initial(&p);
        let tr = simulate(&x0, &p, &crate::model::LevyMeasure::empty(), &grid, &mut RngStream::new(1, 0)).unwrap();
        let m = martingale_diagnostic(&tr, &p);
        assert_eq!((m.m_over_t_final, m.qv_over_t_final, m.qv_bound), (0.0, 0.0, 0.0));
        assert!(m.bound_respected && m.stayed_in_region);
    }

    #[test]
    fn qv_bound_value() {
        let p = SicaParams::extinction_regime();
        let tr = synthetic(&grid(1.0, 10), |_| 1.0);
        assert!((martingale_diagnostic(&tr, &p).qv_bound - 64.0).abs() < 1e-12);
    }
}
