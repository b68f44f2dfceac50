//! Run configuration: JSON with a versioned `schema` field.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SicaError};
use crate::integrator::GridSpec;
use crate::model::{validate_hypothesis_h, LevyMeasure, SicaParams, SicaState};

pub const SCHEMA_VERSION: u32 = 1;

fn default_tail_fraction() -> f64 {
    0.5
}
fn default_margin() -> f64 {
    0.9
}
fn default_eps_extinct() -> f64 {
    1e-3
}
fn default_h_cap() -> f64 {
    0.99
}
fn default_path_count() -> usize {
    1
}

/// Finite-horizon surrogates for liminf/limsup and the jump-size margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisKnobs {
    #[serde(default = "default_tail_fraction")]
    pub tail_fraction: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_eps_extinct")]
    pub eps_extinct: f64,
    #[serde(default = "default_h_cap")]
    pub h_cap: f64,
}

impl Default for AnalysisKnobs {
    fn default() -> Self {
        AnalysisKnobs {
            tail_fraction: default_tail_fraction(),
            margin: default_margin(),
            eps_extinct: default_eps_extinct(),
            h_cap: default_h_cap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    /// Free-form remarks carried through unchanged.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub params: SicaParams,
    #[serde(default)]
    pub levy: LevyMeasure,
    /// Defaults to [`SicaState::default_initial`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<SicaState>,
    pub grid: GridSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_path_count")]
    pub path_count: usize,
    #[serde(default)]
    pub analysis: AnalysisKnobs,
}

fn config_err(path: &str, message: impl Into<String>) -> SicaError {
    SicaError::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn new(params: SicaParams, levy: LevyMeasure, grid: GridSpec) -> Self {
        RunConfig {
            schema: SCHEMA_VERSION,
            notes: Vec::new(),
            params,
            levy,
            initial: None,
            grid,
            seed: 0,
            path_count: 1,
            analysis: AnalysisKnobs::default(),
        }
    }

    /// Parses and validates. Errors carry the JSON path of the bad field.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_err(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SicaError::io(path, e))?;
        RunConfig::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn initial_state(&self) -> SicaState {
        self.initial
            .unwrap_or_else(|| SicaState::default_initial(&self.params))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(config_err(
                "schema",
                format!("unsupported schema {}, expected {SCHEMA_VERSION}", self.schema),
            ));
        }
        self.params.validate()?;
        self.levy.validate()?;
        let k = &self.analysis;
        if !(k.h_cap > 0.0 && k.h_cap <= 1.0) {
            return Err(config_err("analysis.h_cap", format!("must lie in (0, 1], got {}", k.h_cap)));
        }
        if let Err(SicaError::Hypothesis { cap, offending }) =
            validate_hypothesis_h(&self.levy, &self.params, k.h_cap)
        {
            let (idx, j) = offending[0];
            return Err(config_err(
                &format!("levy.marks[{idx}].jump_size"),
                format!("jump size {j:e} exceeds h_cap*mu/lambda = {cap:e}"),
            ));
        }
        self.grid.validate()?;
        if let Some(x) = &self.initial {
            for (name, v) in [("s", x.s), ("i", x.i), ("c", x.c), ("a", x.a)] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(config_err(
                        &format!("initial.{name}"),
                        format!("must be finite and >= 0, got {v}"),
                    ));
                }
            }
        }
        if self.path_count == 0 {
            return Err(config_err("path_count", "must be >= 1"));
        }
        if !(k.tail_fraction > 0.0 && k.tail_fraction < 1.0) {
            return Err(config_err(
                "analysis.tail_fraction",
                format!("must lie in (0, 1), got {}", k.tail_fraction),
            ));
        }
        if !(k.margin.is_finite() && k.margin > 0.0) {
            return Err(config_err("analysis.margin", format!("must be > 0, got {}", k.margin)));
        }
        if !(k.eps_extinct.is_finite() && k.eps_extinct > 0.0) {
            return Err(config_err(
                "analysis.eps_extinct",
                format!("must be > 0, got {}", k.eps_extinct),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = r#"{
        "schema": 1,
        "params": {"lambda": 10, "mu": 0.0125, "beta": 0.0001, "phi": 1, "rho": 0.1,
                   "alpha": 0.33, "omega": 0.09, "d": 1, "sigma": 0.01},
        "grid": {"t_end": 10}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_json_str(MINIMAL).unwrap();
        assert_eq!(c.grid.dt, 1e-3);
        assert_eq!(c.grid.record_every, 100);
        assert_eq!(c.analysis, AnalysisKnobs::default());
        assert_eq!(c.path_count, 1);
        assert!(c.levy.is_empty());
        let x0 = c.initial_state();
        assert!((x0.total() - c.params.n_lower()).abs() < 1e-12);
    }

    #[test]
    fn parse_errors_carry_field_path() {
        let bad = MINIMAL.replace("\"mu\": 0.0125", "\"mu\": \"fast\"");
        match RunConfig::from_json_str(&bad) {
            Err(SicaError::Config { path, .. }) => assert_eq!(path, "params.mu"),
            other => panic!("{other:?}"),
        }
        let unknown = MINIMAL.replace("\"schema\": 1,", "\"schema\": 1, \"sedd\": 4,");
        assert!(matches!(RunConfig::from_json_str(&unknown), Err(SicaError::Config { .. })));
    }

    #[test]
    fn validation_errors_carry_field_path() {
        let cases = [
            (MINIMAL.replace("\"schema\": 1", "\"schema\": 2"), "schema"),
            (MINIMAL.replace("\"mu\": 0.0125", "\"mu\": -1"), "params.mu"),
            (MINIMAL.replace("\"t_end\": 10", "\"t_end\": 10, \"dt\": 0"), "grid.dt"),
            (
                MINIMAL.replace("\"grid\"", "\"levy\": {\"marks\": [{\"jump_size\": 0.002, \"rate\": 1}]}, \"grid\""),
                "levy.marks[0].jump_size",
            ),
            (
                MINIMAL.replace("\"grid\"", "\"initial\": {\"s\": 1, \"i\": -1, \"c\": 0, \"a\": 0}, \"grid\""),
                "initial.i",
            ),
        ];
        for (text, expected) in cases {
            match RunConfig::from_json_str(&text) {
                Err(SicaError::Config { path, .. }) => assert_eq!(path, expected),
                other => panic!("{expected}: {other:?}"),
            }
        }
    }

    #[test]
    fn hypothesis_margin_respected() {
        // 0.00125 = mu/lambda is admissible only with h_cap = 1.
        let at_cap = MINIMAL.replace(
            "\"grid\"",
            "\"levy\": {\"marks\": [{\"jump_size\": 0.00125, \"rate\": 1}]}, \"grid\"",
        );
        assert!(RunConfig::from_json_str(&at_cap).is_err());
        let relaxed = at_cap.replace("\"grid\"", "\"analysis\": {\"h_cap\": 1.0}, \"grid\"");
        assert!(RunConfig::from_json_str(&relaxed).is_ok());
    }

    proptest! {
        #[test]
        fn round_trip(seed in any::<u64>(), sigma in 0.0..1.0f64, j in 1e-7..1e-3f64, rate in 1e-3..10.0f64,
                      t_end in 1.0..1e3f64, paths in 1usize..1000, s in 0.0..100.0f64, with_initial in any::<bool>()) {
            let mut c = RunConfig::new(
                SicaParams::extinction_regime().with_sigma(sigma),
                LevyMeasure::single(j, rate).unwrap(),
                GridSpec::new(t_end, 1e-3, 7).unwrap(),
            );
            c.seed = seed;
            c.path_count = paths;
            c.notes = vec!["artifact choice".into()];
            if with_initial {
                c.initial = Some(SicaState::new(s, 1.0, 0.5, 0.25));
            }
            let text = c.to_json_pretty();
            let back = RunConfig::from_json_str(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.to_json_pretty(), text);
        }
    }
}
