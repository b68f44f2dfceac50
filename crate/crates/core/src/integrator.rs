//! Time stepping: fixed-step Euler–Maruyama with per-step Poisson jump
//! counts for the stochastic system, classical RK4 for the deterministic
//! baseline, and the closed-form solution of the linear C/A rows.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SicaError};
use crate::model::{
    apply_jump, drift_with_compensator, in_feasible_region, Compartment, LevyMeasure, SicaParams,
    SicaState,
};
use crate::noise::{RngStream, StepNoise};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_RECORD_EVERY: usize = 100;

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_record_every() -> usize {
    DEFAULT_RECORD_EVERY
}

/// Time grid of a run. Every `record_every`-th step is stored, and the final
/// time is always stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

impl GridSpec {
    pub fn new(t_end: f64, dt: f64, record_every: usize) -> Result<Self> {
        let g = GridSpec { t_end, dt, record_every };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| SicaError::Config {
            path: format!("grid.{field}"),
            message,
        };
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(bad("t_end", format!("must be finite and > 0, got {}", self.t_end)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(bad("dt", format!("must be finite and > 0, got {}", self.dt)));
        }
        if self.dt > self.t_end {
            return Err(bad("dt", format!("dt = {} exceeds t_end = {}", self.dt, self.t_end)));
        }
        if self.record_every == 0 {
            return Err(bad("record_every", "must be >= 1".to_string()));
        }
        if self.n_steps() > u32::MAX as usize * 16 {
            return Err(bad("dt", "too many steps".to_string()));
        }
        Ok(())
    }

    /// `ceil(t_end/dt)`, ignoring representation noise in the ratio.
    pub fn n_steps(&self) -> usize {
        let r = self.t_end / self.dt;
        let n = r.round();
        if (r - n).abs() <= 1e-9 * r.max(1.0) {
            n as usize
        } else {
            r.ceil() as usize
        }
    }

    /// Time after step `k`; the last step is shortened to land on `t_end`.
    #[inline]
    pub fn time_at(&self, k: usize) -> f64 {
        if k >= self.n_steps() {
            self.t_end
        } else {
            k as f64 * self.dt
        }
    }

    #[inline]
    fn records(&self, k: usize) -> bool {
        k.is_multiple_of(self.record_every) || k == self.n_steps()
    }
}

/// Largest step at which Euler–Maruyama is expected to keep every component
/// positive, from two worst-case requirements inside the feasible region:
///
/// * the relative I increment `σ·S·ΔW` with `S ≤ Λ/μ` stays above −1 with an
///   eight standard deviation margin, `dt ≤ (8σΛ/μ)⁻²`;
/// * linear outflows lose at most half a compartment per step,
///   `dt ≤ 0.5 / max(ρ+φ+μ, ω+μ, α+μ+d)`.
///
/// The infection term βI is state dependent and is not included; its effect
/// shows up in `clamp_count`.
pub fn positivity_step_bound(p: &SicaParams) -> f64 {
    let outflow = p.i_outflow().max(p.omega + p.mu).max(p.alpha + p.mu + p.d);
    let linear = 0.5 / outflow;
    let vol = 8.0 * p.sigma * p.n_upper();
    if vol > 0.0 {
        linear.min(1.0 / (vol * vol))
    } else {
        linear
    }
}

/// Counters accumulated over one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub steps: u64,
    /// Components reset to zero by the positivity guard.
    pub clamp_count: u64,
    pub jump_count: u64,
    /// Jumps skipped because `1 − J·I ≤ 0`.
    pub jump_overflow_count: u64,
    /// Running `M_t = Σ σ·S·ΔW`, one entry per recorded time.
    pub martingale_path: Vec<f64>,
    /// `Σ σ²·S²·Δt` over the whole run.
    pub quadratic_variation: f64,
    /// Largest per-step `|N' − N − Δt(Λ − μN − dA)| / max(1, N)`.
    pub max_mass_residual: f64,
    /// Extremes of `N` and `S` over every step, not only recorded ones.
    pub min_total: f64,
    pub max_total: f64,
    pub max_s: f64,
    pub started_in_region: bool,
}

impl Diagnostics {
    fn new(initial: &SicaState, p: &SicaParams, capacity: usize) -> Self {
        let mut martingale_path = Vec::with_capacity(capacity);
        martingale_path.push(0.0);
        Diagnostics {
            steps: 0,
            clamp_count: 0,
            jump_count: 0,
            jump_overflow_count: 0,
            martingale_path,
            quadratic_variation: 0.0,
            max_mass_residual: 0.0,
            min_total: initial.total(),
            max_total: initial.total(),
            max_s: initial.s,
            started_in_region: in_feasible_region(initial, p, 0.0),
        }
    }

    /// Whether every step stayed in the feasible region with relative slack.
    pub fn stayed_in_region(&self, p: &SicaParams, rel_tol: f64) -> bool {
        self.started_in_region
            && self.clamp_count == 0
            && self.min_total >= p.n_lower() * (1.0 - rel_tol)
            && self.max_total <= p.n_upper() * (1.0 + rel_tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SicaState>,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    /// Wraps externally produced samples (synthetic or loaded data) with
    /// empty diagnostics.
    pub fn from_samples(times: Vec<f64>, states: Vec<SicaState>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(SicaError::domain(format!(
                "{} times but {} states",
                times.len(),
                states.len()
            )));
        }
        if !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(SicaError::domain("times must be strictly increasing"));
        }
        let totals = states.iter().map(SicaState::total);
        let diagnostics = Diagnostics {
            steps: times.len().saturating_sub(1) as u64,
            clamp_count: 0,
            jump_count: 0,
            jump_overflow_count: 0,
            martingale_path: vec![0.0; times.len()],
            quadratic_variation: 0.0,
            max_mass_residual: 0.0,
            min_total: totals.clone().fold(f64::INFINITY, f64::min),
            max_total: totals.fold(f64::NEG_INFINITY, f64::max),
            max_s: states.iter().map(|x| x.s).fold(f64::NEG_INFINITY, f64::max),
            // Unknown without parameters.
            started_in_region: false,
        };
        Ok(Trajectory {
            times,
            states,
            diagnostics,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&SicaState> {
        self.states.last()
    }

    pub fn final_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    pub fn component(&self, c: Compartment) -> Vec<f64> {
        self.states.iter().map(|x| x.get(c)).collect()
    }

    pub fn totals(&self) -> Vec<f64> {
        self.states.iter().map(SicaState::total).collect()
    }
}

/// Result of a single Euler–Maruyama step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: SicaState,
    pub clamps: u32,
    pub jumps: u32,
    pub overflows: u32,
}

#[inline]
fn step_kernel(
    x: &SicaState,
    p: &SicaParams,
    kappa: f64,
    dt: f64,
    dw: f64,
    jumps: impl Iterator<Item = f64>,
) -> StepOutcome {
    let f = drift_with_compensator(x, p, kappa);
    let g = p.sigma * x.i * x.s;
    let mut y = SicaState {
        s: x.s + f[0] * dt - g * dw,
        i: x.i + f[1] * dt + g * dw,
        c: x.c + f[2] * dt,
        a: x.a + f[3] * dt,
    };
    let mut n_jumps = 0;
    let mut overflows = 0;
    for j in jumps {
        n_jumps += 1;
        match apply_jump(&y, j) {
            Ok(z) => y = z,
            Err(_) => overflows += 1,
        }
    }
    let mut clamps = 0;
    for v in [&mut y.s, &mut y.i, &mut y.c, &mut y.a] {
        if *v < 0.0 {
            *v = 0.0;
            clamps += 1;
        }
    }
    StepOutcome {
        state: y,
        clamps,
        jumps: n_jumps,
        overflows,
    }
}

/// One step with externally supplied noise: a Brownian increment `dw` and the
/// indices of marks firing during the step, applied in order.
pub fn em_step_with_noise(
    state: &SicaState,
    p: &SicaParams,
    levy: &LevyMeasure,
    dt: f64,
    dw: f64,
    marks: &[usize],
) -> Result<StepOutcome> {
    if !(dt > 0.0 && dt.is_finite()) || !dw.is_finite() {
        return Err(SicaError::domain(format!("invalid step inputs dt = {dt}, dw = {dw}")));
    }
    if !state.is_finite() {
        return Err(SicaError::domain(format!("non-finite state {state:?}")));
    }
    let sizes = marks
        .iter()
        .map(|&k| {
            levy.marks
                .get(k)
                .map(|m| m.jump_size)
                .ok_or_else(|| SicaError::domain(format!("mark index {k} out of range")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let out = step_kernel(state, p, levy.compensator(), dt, dw, sizes.into_iter());
    if !out.state.is_finite() {
        return Err(SicaError::NonFinite {
            time: f64::NAN,
            detail: format!("{:?}", out.state),
        });
    }
    Ok(out)
}

/// One compensated Euler–Maruyama step drawing its noise from `rng`.
pub fn em_step(
    state: &SicaState,
    p: &SicaParams,
    levy: &LevyMeasure,
    dt: f64,
    rng: &mut RngStream,
) -> Result<StepOutcome> {
    let noise = StepNoise::new(levy, dt)?;
    let dw = noise.brownian(rng);
    let mut marks = Vec::new();
    noise.jumps(rng, &mut marks);
    em_step_with_noise(state, p, levy, dt, dw, &marks)
}

fn check_inputs(initial: &SicaState, p: &SicaParams, grid: &GridSpec) -> Result<()> {
    p.validate()?;
    grid.validate()?;
    if !initial.is_finite() || initial.as_array().iter().any(|&v| v < 0.0) {
        return Err(SicaError::Config {
            path: "initial".to_string(),
            message: format!("must be finite and nonnegative, got {initial:?}"),
        });
    }
    Ok(())
}

/// Simulates one path on `grid`. A start outside the feasible region is
/// allowed and flagged in `diagnostics.started_in_region`.
pub fn simulate(
    initial: &SicaState,
    p: &SicaParams,
    levy: &LevyMeasure,
    grid: &GridSpec,
    rng: &mut RngStream,
) -> Result<Trajectory> {
    check_inputs(initial, p, grid)?;
    levy.validate()?;

    let n = grid.n_steps();
    let capacity = n / grid.record_every + 2;
    let noise = StepNoise::new(levy, grid.dt)?;
    let last = grid.t_end - (n - 1) as f64 * grid.dt;
    let noise_last = if (last - grid.dt).abs() <= 1e-9 * grid.dt {
        None
    } else {
        Some((last, StepNoise::new(levy, last)?))
    };
    let kappa = levy.compensator();
    let sizes: Vec<f64> = levy.marks.iter().map(|m| m.jump_size).collect();

    let mut times = Vec::with_capacity(capacity);
    let mut states = Vec::with_capacity(capacity);
    let mut diag = Diagnostics::new(initial, p, capacity);
    times.push(0.0);
    states.push(*initial);

    let mut x = *initial;
    let mut m = 0.0;
    let mut qv = 0.0;
    let mut marks = Vec::new();
    for k in 1..=n {
        let (dt, nz) = match &noise_last {
            Some((last, nz)) if k == n => (*last, nz),
            _ => (grid.dt, &noise),
        };
        let dw = nz.brownian(rng);
        nz.jumps(rng, &mut marks);
        let out = step_kernel(&x, p, kappa, dt, dw, marks.iter().map(|&j| sizes[j]));
        let y = out.state;
        if !y.is_finite() {
            return Err(SicaError::NonFinite {
                time: grid.time_at(k),
                detail: format!("{y:?} after step from {x:?}"),
            });
        }

        let n_old = x.total();
        let residual = (y.total() - n_old - dt * (p.lambda - p.mu * n_old - p.d * x.a)).abs()
            / n_old.max(1.0);
        diag.max_mass_residual = diag.max_mass_residual.max(residual);
        let vol = p.sigma * x.s;
        m += vol * dw;
        qv += vol * vol * dt;
        diag.clamp_count += u64::from(out.clamps);
        diag.jump_count += u64::from(out.jumps);
        diag.jump_overflow_count += u64::from(out.overflows);
        let total = y.total();
        diag.min_total = diag.min_total.min(total);
        diag.max_total = diag.max_total.max(total);
        diag.max_s = diag.max_s.max(y.s);

        x = y;
        if grid.records(k) {
            times.push(grid.time_at(k));
            states.push(x);
            diag.martingale_path.push(m);
        }
    }
    diag.steps = n as u64;
    diag.quadratic_variation = qv;
    Ok(Trajectory {
        times,
        states,
        diagnostics: diag,
    })
}

#[inline]
fn axpy(x: &SicaState, h: f64, k: &[f64; 4]) -> SicaState {
    SicaState {
        s: x.s + h * k[0],
        i: x.i + h * k[1],
        c: x.c + h * k[2],
        a: x.a + h * k[3],
    }
}

/// Classical RK4 on the noise-free system (σ = 0, no jumps).
pub fn simulate_ode(initial: &SicaState, p: &SicaParams, grid: &GridSpec) -> Result<Trajectory> {
    check_inputs(initial, p, grid)?;
    let n = grid.n_steps();
    let capacity = n / grid.record_every + 2;
    let mut times = Vec::with_capacity(capacity);
    let mut states = Vec::with_capacity(capacity);
    times.push(0.0);
    states.push(*initial);
    let f = |x: &SicaState| drift_with_compensator(x, p, 0.0);

    let mut x = *initial;
    for k in 1..=n {
        let h = grid.time_at(k) - grid.time_at(k - 1);
        let k1 = f(&x);
        let k2 = f(&axpy(&x, 0.5 * h, &k1));
        let k3 = f(&axpy(&x, 0.5 * h, &k2));
        let k4 = f(&axpy(&x, h, &k3));
        let incr = [
            (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]) / 6.0,
            (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]) / 6.0,
            (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]) / 6.0,
            (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]) / 6.0,
        ];
        x = axpy(&x, h, &incr);
        if !x.is_finite() {
            return Err(SicaError::NonFinite {
                time: grid.time_at(k),
                detail: format!("{x:?}"),
            });
        }
        if grid.records(k) {
            times.push(grid.time_at(k));
            states.push(x);
        }
    }
    let mut diagnostics = Diagnostics::new(initial, p, times.len());
    diagnostics.martingale_path.resize(times.len(), 0.0);
    diagnostics.steps = n as u64;
    let totals = states.iter().map(SicaState::total);
    diagnostics.min_total = totals.clone().fold(f64::INFINITY, f64::min);
    diagnostics.max_total = totals.fold(f64::NEG_INFINITY, f64::max);
    diagnostics.max_s = states.iter().map(|x| x.s).fold(f64::NEG_INFINITY, f64::max);
    Ok(Trajectory {
        times,
        states,
        diagnostics,
    })
}

/// Closed-form `(C(t), A(t))` with I frozen at `i_const`.
pub fn exact_linear_ca(i_const: f64, c0: f64, a0: f64, p: &SicaParams, t: f64) -> (f64, f64) {
    let relax = |source: f64, rate: f64, x0: f64| {
        let eq = source / rate;
        eq + (x0 - eq) * (-rate * t).exp()
    };
    (
        relax(p.phi * i_const, p.omega + p.mu, c0),
        relax(p.rho * i_const, p.alpha + p.mu + p.d, a0),
    )
}
