//! Stochastic SICA HIV/AIDS model driven by Brownian motion and compensated
//! Lévy jump noise.
//!
//! | Module         | Contents                                                      |
//! |----------------|---------------------------------------------------------------|
//! | [`model`]      | parameters, state, coefficients, feasible region, thresholds  |
//! | [`noise`]      | seeded ChaCha8 streams, Brownian / Poisson / mark samplers    |
//! | [`integrator`] | Euler–Maruyama with jumps, RK4 baseline, closed-form C/A      |
//! | [`analysis`]   | time averages, Lyapunov slope, persistence, ensembles         |
//! | [`config`]     | JSON run configuration                                        |
//! | [`output`]     | CSV / JSON writers                                            |
//! | [`svg`]        | static SVG line charts                                        |
//! | [`verify`]     | built-in invariant suite                                      |
//! | [`cli`]        | the `sica` command line                                       |
//!
//! ```
//! use sica::prelude::*;
//!
//! let p = SicaParams::extinction_regime();
//! let report = compute_thresholds(&p, &LevyMeasure::empty());
//! assert!(report.extinction_holds);
//! ```

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod integrator;
pub mod model;
pub mod noise;
pub mod output;
pub mod svg;
pub mod verify;

pub use error::{Result, SicaError};

pub mod prelude {
    pub use crate::analysis::{
        ensemble_run, lyapunov_estimate, martingale_diagnostic, time_average, verify_persistence,
        EnsembleOutcome, EnsembleStats, ExtinctionVerdict, PersistenceVerdict,
    };
    pub use crate::config::{AnalysisKnobs, RunConfig};
    pub use crate::error::{Result, SicaError};
    pub use crate::integrator::{
        em_step, em_step_with_noise, exact_linear_ca, positivity_step_bound, simulate,
        simulate_ode, GridSpec, Trajectory,
    };
    pub use crate::model::{
        apply_jump, compute_thresholds, diffusion, drift, in_feasible_region,
        validate_hypothesis_h, Compartment, JumpMark, LevyMeasure, SicaParams, SicaState,
        ThresholdReport,
    };
    pub use crate::noise::RngStream;
}
