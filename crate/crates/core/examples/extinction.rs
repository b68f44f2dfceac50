//! A small ensemble in the extinction regime: every path loses its infected
//! class while S climbs to Λ/μ. Writes the mean and 95% band as SVG.
//!
//! ```text
//! cargo run --release --example extinction [out_dir]
//! ```

use std::path::PathBuf;

use sica::prelude::*;
use sica::svg::{emit_svg_plot, Panel, Series, Styling};

fn out_dir() -> PathBuf {
    std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("sica-examples"))
}

pub fn run_example() -> Result<EnsembleOutcome> {
    let p = SicaParams::extinction_regime();
    let levy = LevyMeasure::single(0.4 * p.mu / p.lambda, 1.0)?;
    let grid = GridSpec::new(300.0, 2e-4, 1000)?;
    let mut cfg = RunConfig::new(p, levy, grid);
    cfg.path_count = 8;
    cfg.seed = 3;

    let out = ensemble_run(&cfg)?;
    for s in &out.paths {
        let e = s.extinction.as_ref().expect("enough points for a fit");
        println!(
            "path {}: slope {:+.4}, I(T) {:.3e}, extinct {}",
            s.path_index, e.lyapunov_slope, e.final_i, e.classified_extinct
        );
    }
    println!("extinct rate {:.2}, clamps {}", out.rates.extinct_rate, out.rates.total_clamps);

    let st = &out.stats;
    let panels: Vec<Panel> = [Compartment::S, Compartment::I]
        .into_iter()
        .map(|c| {
            let cs = st.get(c);
            Panel::new(
                format!("{}(t)", c.label()),
                vec![Series::new(format!("mean {}", c.label()), st.times.clone(), cs.mean.clone())
                    .with_band(cs.q025.clone(), cs.q975.clone())],
            )
        })
        .collect();
    let dir = out_dir();
    std::fs::create_dir_all(&dir).map_err(|e| SicaError::io(&dir, e))?;
    let path = dir.join("extinction.svg");
    let style = Styling {
        title: "extinction regime".to_string(),
        ..Styling::default()
    };
    emit_svg_plot(&panels, &style, &path)?;
    println!("wrote {}", path.display());
    Ok(out)
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
