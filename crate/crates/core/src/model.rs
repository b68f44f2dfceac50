//! SICA parameterization, compartment state, the coefficient functions of the
//! jump-diffusion system and the closed-form threshold calculators.
//!
//! The system, with `Ñ` the compensated Poisson measure over the mark space:
//!
//! ```text
//! dS = (Λ − βIS − μS) dt − σIS dW − ∫ J(u) I S Ñ(dt, du)
//! dI = (βIS − (ρ+φ+μ)I + αA + ωC) dt + σIS dW + ∫ J(u) I S Ñ(dt, du)
//! dC = (φI − (ω+μ)C) dt
//! dA = (ρI − (α+μ+d)A) dt
//! ```
//!
//! Simulation works with the uncompensated measure, so the compensator
//! `κ·I·S` with `κ = Σ J_k λ_k` moves into the drift (`+` on S, `−` on I).

use serde::{Deserialize, Serialize};

use crate::error::{Result, SicaError};

/// Epidemiological rates plus the Brownian intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SicaParams {
    /// Recruitment rate Λ.
    pub lambda: f64,
    /// Natural death rate μ.
    pub mu: f64,
    /// Transmission rate β.
    pub beta: f64,
    /// HIV treatment rate for I.
    pub phi: f64,
    /// Default treatment rate for I.
    pub rho: f64,
    /// AIDS treatment rate.
    pub alpha: f64,
    /// Default treatment rate for C.
    pub omega: f64,
    /// AIDS-induced death rate.
    pub d: f64,
    /// Intensity of the Brownian perturbation.
    pub sigma: f64,
}

impl SicaParams {
    /// Reference rates for the extinction regime; σ = 0.01 is a modelling
    /// choice.
    pub fn extinction_regime() -> Self {
        SicaParams {
            lambda: 10.0,
            mu: 0.0125,
            beta: 0.0001,
            phi: 1.0,
            rho: 0.1,
            alpha: 0.33,
            omega: 0.09,
            d: 1.0,
            sigma: 0.01,
        }
    }

    /// Reference rates for the persistence regime, with σ = 1e-5.
    pub fn persistence_regime() -> Self {
        SicaParams {
            lambda: 100.0,
            mu: 0.0013,
            beta: 0.1,
            phi: 1.0,
            rho: 0.1,
            alpha: 0.33,
            omega: 0.09,
            d: 1.0,
            sigma: 1e-5,
        }
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        SicaParams { sigma, ..self }
    }

    /// Checks finiteness and signs. Errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("lambda", self.lambda, true),
            ("mu", self.mu, true),
            ("beta", self.beta, false),
            ("phi", self.phi, false),
            ("rho", self.rho, false),
            ("alpha", self.alpha, false),
            ("omega", self.omega, false),
            ("d", self.d, false),
            ("sigma", self.sigma, false),
        ];
        for (name, value, strict) in fields {
            let ok = value.is_finite() && if strict { value > 0.0 } else { value >= 0.0 };
            if !ok {
                let bound = if strict { "> 0" } else { ">= 0" };
                return Err(SicaError::Config {
                    path: format!("params.{name}"),
                    message: format!("must be finite and {bound}, got {value}"),
                });
            }
        }
        Ok(())
    }

    /// Total outflow rate of I, `ρ + φ + μ`.
    #[inline]
    pub fn i_outflow(&self) -> f64 {
        self.rho + self.phi + self.mu
    }

    /// Upper edge of the feasible region, `Λ/μ`.
    #[inline]
    pub fn n_upper(&self) -> f64 {
        self.lambda / self.mu
    }

    /// Lower edge of the feasible region, `Λ/(μ+d)`.
    #[inline]
    pub fn n_lower(&self) -> f64 {
        self.lambda / (self.mu + self.d)
    }
}

/// Compartment values at one time point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SicaState {
    pub s: f64,
    pub i: f64,
    pub c: f64,
    pub a: f64,
}

impl SicaState {
    pub const fn new(s: f64, i: f64, c: f64, a: f64) -> Self {
        SicaState { s, i, c, a }
    }

    /// Default initial condition: (0.9, 0.1, 0, 0) of the lower edge of the
    /// feasible region, so the start lies inside it.
    pub fn default_initial(p: &SicaParams) -> Self {
        let n0 = p.n_lower();
        SicaState::new(0.9 * n0, 0.1 * n0, 0.0, 0.0)
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.s + self.i + self.c + self.a
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.s, self.i, self.c, self.a]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|x| x.is_finite())
    }

    pub fn get(&self, compartment: Compartment) -> f64 {
        match compartment {
            Compartment::S => self.s,
            Compartment::I => self.i,
            Compartment::C => self.c,
            Compartment::A => self.a,
        }
    }
}

/// Selector for one compartment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Compartment {
    S,
    I,
    C,
    A,
}

impl Compartment {
    pub const ALL: [Compartment; 4] = [Compartment::S, Compartment::I, Compartment::C, Compartment::A];

    pub fn label(self) -> &'static str {
        match self {
            Compartment::S => "S",
            Compartment::I => "I",
            Compartment::C => "C",
            Compartment::A => "A",
        }
    }
}

/// One atom of the finite jump measure: relative jump intensity `J_k` firing
/// at rate `λ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpMark {
    pub jump_size: f64,
    pub rate: f64,
}

/// Finite-activity jump measure, a finite list of marks.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LevyMeasure {
    pub marks: Vec<JumpMark>,
}

impl LevyMeasure {
    pub fn new(marks: Vec<JumpMark>) -> Result<Self> {
        let levy = LevyMeasure { marks };
        levy.validate()?;
        Ok(levy)
    }

    /// No jumps: pure diffusion model.
    pub fn empty() -> Self {
        LevyMeasure::default()
    }

    pub fn single(jump_size: f64, rate: f64) -> Result<Self> {
        LevyMeasure::new(vec![JumpMark { jump_size, rate }])
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    /// Every mark needs a finite positive size and rate.
    pub fn validate(&self) -> Result<()> {
        for (k, m) in self.marks.iter().enumerate() {
            if !(m.jump_size.is_finite() && m.jump_size > 0.0) {
                return Err(SicaError::Config {
                    path: format!("levy.marks[{k}].jump_size"),
                    message: format!("must be finite and > 0, got {}", m.jump_size),
                });
            }
            if !(m.rate.is_finite() && m.rate > 0.0) {
                return Err(SicaError::Config {
                    path: format!("levy.marks[{k}].rate"),
                    message: format!("must be finite and > 0, got {}", m.rate),
                });
            }
        }
        Ok(())
    }

    /// Total mass ν(U) = Σ λ_k.
    pub fn total_rate(&self) -> f64 {
        self.marks.iter().map(|m| m.rate).sum()
    }

    /// Compensator coefficient κ = Σ J_k λ_k.
    pub fn compensator(&self) -> f64 {
        self.marks.iter().map(|m| m.jump_size * m.rate).sum()
    }
}

fn check_finite(state: &SicaState, p: &SicaParams) -> Result<()> {
    if !state.is_finite() {
        return Err(SicaError::domain(format!("non-finite state {state:?}")));
    }
    let ps = [p.lambda, p.mu, p.beta, p.phi, p.rho, p.alpha, p.omega, p.d, p.sigma];
    if ps.iter().any(|x| !x.is_finite()) {
        return Err(SicaError::domain(format!("non-finite parameters {p:?}")));
    }
    Ok(())
}

/// Deterministic rates `(dS, dI, dC, dA)/dt` with the jump compensator
/// `κ` folded in. Unchecked; see [`drift`].
#[inline]
pub(crate) fn drift_with_compensator(state: &SicaState, p: &SicaParams, kappa: f64) -> [f64; 4] {
    let SicaState { s, i, c, a } = *state;
    let is = i * s;
    let comp = kappa * is;
    [
        p.lambda - p.beta * is - p.mu * s + comp,
        p.beta * is - p.i_outflow() * i + p.alpha * a + p.omega * c - comp,
        p.phi * i - (p.omega + p.mu) * c,
        p.rho * i - (p.alpha + p.mu + p.d) * a,
    ]
}

/// Drift of the simulated (uncompensated-jump) system.
pub fn drift(state: &SicaState, p: &SicaParams, levy: &LevyMeasure) -> Result<[f64; 4]> {
    check_finite(state, p)?;
    Ok(drift_with_compensator(state, p, levy.compensator()))
}

/// Diffusion coefficients `(−σIS, σIS, 0, 0)`.
pub fn diffusion(state: &SicaState, p: &SicaParams) -> Result<[f64; 4]> {
    check_finite(state, p)?;
    let g = p.sigma * state.i * state.s;
    Ok([-g, g, 0.0, 0.0])
}

/// Applies one jump of relative size `jump_size` using the left limits of S
/// and I: `S ← S(1 − J·I)`, `I ← I + J·I·S`. C and A are untouched.
pub fn apply_jump(state: &SicaState, jump_size: f64) -> Result<SicaState> {
    let margin = 1.0 - jump_size * state.i;
    if margin <= 0.0 || !margin.is_finite() {
        return Err(SicaError::JumpOverflow {
            jump_size,
            infected: state.i,
            margin,
        });
    }
    let transfer = jump_size * state.i * state.s;
    Ok(SicaState {
        s: state.s - transfer,
        i: state.i + transfer,
        ..*state
    })
}

/// Whether `state` lies in the feasible region
/// `{x ≥ 0 : Λ/(μ+d) ≤ S+I+C+A ≤ Λ/μ}`, with slack `tol`.
pub fn in_feasible_region(state: &SicaState, p: &SicaParams, tol: f64) -> bool {
    let nonneg = state.as_array().iter().all(|&x| x >= -tol);
    let n = state.total();
    nonneg && n >= p.n_lower() - tol && n <= p.n_upper() + tol
}

/// Checks `0 < J_k ≤ h_cap·μ/Λ` for every mark. `h_cap < 1` keeps
/// `1 − J·I` bounded away from zero inside the feasible region.
pub fn validate_hypothesis_h(levy: &LevyMeasure, p: &SicaParams, h_cap: f64) -> Result<()> {
    if !(h_cap > 0.0 && h_cap <= 1.0) {
        return Err(SicaError::domain(format!("h_cap must lie in (0, 1], got {h_cap}")));
    }
    let cap = h_cap * p.mu / p.lambda;
    let offending: Vec<(usize, f64)> = levy
        .marks
        .iter()
        .enumerate()
        .filter(|(_, m)| !(m.jump_size > 0.0 && m.jump_size <= cap))
        .map(|(k, m)| (k, m.jump_size))
        .collect();
    if offending.is_empty() {
        Ok(())
    } else {
        Err(SicaError::Hypothesis { cap, offending })
    }
}

/// Both sides of the extinction and persistence criteria plus the derived
/// bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// `β²/(2σ²)`; `+∞` when σ = 0.
    #[serde(with = "float_or_inf")]
    pub ext_lhs: f64,
    /// `(ρ+φ+μ) + (α+ω)Λ/μ`.
    pub ext_rhs: f64,
    pub extinction_holds: bool,
    /// `βΛ/(μ+d)`.
    pub pers_lhs: f64,
    /// `(ρ+φ+μ) + σ²Λ²/(2μ²)`.
    pub pers_rhs: f64,
    pub persistence_holds: bool,
    /// `(pers_lhs − pers_rhs)/(ρ+φ+μ)`, lower bound on liminf ⟨I⟩.
    pub i_mean_lower_bound: f64,
    /// `Λμ/(Λβ+μ²)`, lower bound on liminf ⟨S⟩.
    pub s_mean_lower_bound: f64,
    pub n_upper: f64,
    pub n_lower: f64,
    /// `κ = Σ J_k λ_k`, the drift shift between S and I from compensation.
    pub jump_compensator: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

pub fn compute_thresholds(p: &SicaParams, levy: &LevyMeasure) -> ThresholdReport {
    let mut notes = Vec::new();
    let ext_lhs = if p.sigma == 0.0 {
        notes.push(
            "sigma = 0: ext_lhs reported as +inf, extinction cannot follow from the diffusion criterion"
                .to_string(),
        );
        f64::INFINITY
    } else {
        p.beta * p.beta / (2.0 * p.sigma * p.sigma)
    };
    let ext_rhs = p.i_outflow() + (p.alpha + p.omega) * p.lambda / p.mu;
    let pers_lhs = p.beta * p.lambda / (p.mu + p.d);
    let pers_rhs = p.i_outflow() + p.sigma * p.sigma * p.lambda * p.lambda / (2.0 * p.mu * p.mu);
    let persistence_holds = pers_lhs > pers_rhs;
    if !persistence_holds {
        notes.push("persistence criterion not met: mean lower bounds are informational".to_string());
    }
    ThresholdReport {
        ext_lhs,
        ext_rhs,
        extinction_holds: ext_lhs < ext_rhs,
        pers_lhs,
        pers_rhs,
        persistence_holds,
        i_mean_lower_bound: (pers_lhs - pers_rhs) / p.i_outflow(),
        s_mean_lower_bound: p.lambda * p.mu / (p.lambda * p.beta + p.mu * p.mu),
        n_upper: p.n_upper(),
        n_lower: p.n_lower(),
        jump_compensator: levy.compensator(),
        notes,
    }
}

/// JSON has no infinity literal; `+∞` travels as the string `"+inf"`.
mod float_or_inf {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, ser: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            ser.serialize_f64(*x)
        } else if *x > 0.0 {
            ser.serialize_str("+inf")
        } else if *x < 0.0 {
            ser.serialize_str("-inf")
        } else {
            ser.serialize_str("nan")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(de)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "+inf" | "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("expected number or +inf, got {other:?}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn drift_at_origin_is_recruitment_only() {
        let p = SicaParams::extinction_regime();
        let r = drift(&SicaState::default(), &p, &LevyMeasure::empty()).unwrap();
        assert_eq!(r, [p.lambda, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn drift_hand_values() {
        let p = SicaParams::extinction_regime();
        let x = SicaState::new(800.0, 1.0, 0.0, 0.0);
        let r = drift(&x, &p, &LevyMeasure::empty()).unwrap();
        assert!(close(r[0], -0.08, 1e-12), "{r:?}");
        assert!(close(r[1], -1.0325, 1e-12), "{r:?}");
        assert!(close(r[2], 1.0, 1e-12));
        assert!(close(r[3], 0.1, 1e-12));

        let levy = LevyMeasure::single(0.001, 1.0).unwrap();
        let rj = drift(&x, &p, &levy).unwrap();
        assert!(close(rj[0] - r[0], 0.8, 1e-12));
        assert!(close(rj[1] - r[1], -0.8, 1e-12));
        assert_eq!(rj[2], r[2]);
        assert_eq!(rj[3], r[3]);
    }

    #[test]
    fn drift_rejects_non_finite() {
        let p = SicaParams::extinction_regime();
        let x = SicaState::new(f64::NAN, 1.0, 0.0, 0.0);
        assert!(matches!(drift(&x, &p, &LevyMeasure::empty()), Err(SicaError::Domain(_))));
        assert!(diffusion(&x, &p).is_err());
    }

    #[test]
    fn diffusion_hand_values() {
        let p = SicaParams::extinction_regime();
        let x = SicaState::new(800.0, 1.0, 0.0, 0.0);
        let g = diffusion(&x, &p).unwrap();
        assert!(close(g[1], 8.0, 1e-12));
        assert_eq!(g[0], -g[1]);
        assert_eq!(&g[2..], &[0.0, 0.0]);
        let g0 = diffusion(&x, &p.with_sigma(0.0)).unwrap();
        assert!(g0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn jump_moves_mass_from_s_to_i() {
        let x = SicaState::new(100.0, 10.0, 5.0, 2.0);
        let y = apply_jump(&x, 0.001).unwrap();
        assert!(close(y.s, 99.0, 1e-12));
        assert!(close(y.i, 11.0, 1e-12));
        assert_eq!((y.c, y.a), (5.0, 2.0));

        let z = SicaState::new(100.0, 0.0, 5.0, 2.0);
        assert_eq!(apply_jump(&z, 0.001).unwrap(), z);
    }

    #[test]
    fn jump_overflow_is_reported() {
        let x = SicaState::new(100.0, 1000.0, 0.0, 0.0);
        assert!(matches!(apply_jump(&x, 0.001), Err(SicaError::JumpOverflow { .. })));
    }

    #[test]
    fn thresholds_extinction_regime() {
        let r = compute_thresholds(&SicaParams::extinction_regime(), &LevyMeasure::empty());
        assert!(close(r.ext_lhs, 5.0e-5, 1e-12));
        assert!(close(r.ext_rhs, 337.1125, 1e-12));
        assert!(r.extinction_holds);
        assert!(close(r.n_upper, 800.0, 1e-12));
        assert!(close(r.n_lower, 9.876_543_209_876_543, 1e-12));
        assert!((r.s_mean_lower_bound - 108.108).abs() < 1e-3);
    }

    #[test]
    fn thresholds_persistence_regime() {
        let r = compute_thresholds(&SicaParams::persistence_regime(), &LevyMeasure::empty());
        assert!((r.pers_lhs - 9.98702).abs() < 1e-5, "{}", r.pers_lhs);
        assert!((r.pers_rhs - 1.39716).abs() < 1e-5, "{}", r.pers_rhs);
        assert!(r.persistence_holds);
        assert!((r.i_mean_lower_bound - 7.7998).abs() < 1e-4, "{}", r.i_mean_lower_bound);
        assert!((r.s_mean_lower_bound - 0.013).abs() < 1e-5);
    }

    #[test]
    fn zero_sigma_reports_infinite_lhs() {
        let p = SicaParams::extinction_regime().with_sigma(0.0);
        let r = compute_thresholds(&p, &LevyMeasure::empty());
        assert_eq!(r.ext_lhs, f64::INFINITY);
        assert!(!r.extinction_holds);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"ext_lhs\":\"+inf\""));
        let back: ThresholdReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.ext_lhs, f64::INFINITY);
    }

    #[test]
    fn feasible_region_checks() {
        let p = SicaParams::extinction_regime();
        assert!(in_feasible_region(&SicaState::new(400.0, 10.0, 5.0, 5.0), &p, 0.0));
        assert!(!in_feasible_region(&SicaState::new(900.0, 0.0, 0.0, 0.0), &p, 0.0));
        assert!(!in_feasible_region(&SicaState::new(400.0, -1e-9, 5.0, 5.0), &p, 0.0));
        assert!(in_feasible_region(&SicaState::default_initial(&p), &p, 0.0));
    }

    #[test]
    fn hypothesis_h_validation() {
        let p = SicaParams::extinction_regime();
        let ok = LevyMeasure::single(0.001, 1.0).unwrap();
        assert!(validate_hypothesis_h(&ok, &p, 1.0).is_ok());
        let bad = LevyMeasure::single(0.002, 1.0).unwrap();
        match validate_hypothesis_h(&bad, &p, 1.0) {
            Err(SicaError::Hypothesis { offending, .. }) => assert_eq!(offending, vec![(0, 0.002)]),
            other => panic!("{other:?}"),
        }
        assert!(validate_hypothesis_h(&LevyMeasure::empty(), &p, 1.0).is_ok());
        assert!(validate_hypothesis_h(&ok, &p, 0.0).is_err());
    }

    #[test]
    fn params_validation_names_field() {
        let mut p = SicaParams::extinction_regime();
        p.mu = 0.0;
        match p.validate() {
            Err(SicaError::Config { path, .. }) => assert_eq!(path, "params.mu"),
            other => panic!("{other:?}"),
        }
    }

    fn any_state() -> impl Strategy<Value = SicaState> {
        (0.0..1e4f64, 0.0..1e4f64, 0.0..1e4f64, 0.0..1e4f64)
            .prop_map(|(s, i, c, a)| SicaState::new(s, i, c, a))
    }

    proptest! {
        #[test]
        fn diffusion_sums_to_zero(x in any_state(), sigma in 0.0..1.0f64) {
            let p = SicaParams::extinction_regime().with_sigma(sigma);
            let g = diffusion(&x, &p).unwrap();
            prop_assert_eq!(g.iter().sum::<f64>(), 0.0);
        }

        #[test]
        fn drift_sum_is_population_balance(x in any_state(), j in 1e-6..1e-3f64, rate in 0.01..10.0f64) {
            let p = SicaParams::extinction_regime();
            let levy = LevyMeasure::single(j, rate).unwrap();
            let r = drift(&x, &p, &levy).unwrap();
            let expected = p.lambda - p.mu * x.total() - p.d * x.a;
            let scale = p.lambda + p.mu * x.total() + p.d * x.a + p.beta * x.i * x.s + j * rate * x.i * x.s + 10.0 * x.total();
            prop_assert!((r.iter().sum::<f64>() - expected).abs() <= 1e-12 * scale);
        }

        #[test]
        fn jump_conserves_total(x in any_state(), j in 0.0..1e-4f64) {
            prop_assume!(j * x.i < 1.0);
            let y = apply_jump(&x, j).unwrap();
            prop_assert!(((y.s + y.i) - (x.s + x.i)).abs() <= 1e-12 * (x.s + x.i).max(1.0));
            prop_assert_eq!((y.c, y.a), (x.c, x.a));
        }

        #[test]
        fn thresholds_monotone_in_sigma(s1 in 1e-6..1.0f64, bump in 1e-3..1.0f64) {
            let s2 = s1 * (1.0 + bump);
            let p = SicaParams::persistence_regime();
            let lo = compute_thresholds(&p.with_sigma(s1), &LevyMeasure::empty());
            let hi = compute_thresholds(&p.with_sigma(s2), &LevyMeasure::empty());
            prop_assert!(hi.ext_lhs < lo.ext_lhs);
            prop_assert!(hi.pers_rhs > lo.pers_rhs);
            prop_assert!(hi.i_mean_lower_bound < lo.i_mean_lower_bound);
            prop_assert!(lo.n_lower <= lo.n_upper);
        }
    }
}
