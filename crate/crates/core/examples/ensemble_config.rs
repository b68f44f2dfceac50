//! Config-driven batch run: load a JSON config, shorten it, run the ensemble
//! and write the same files the `ensemble` subcommand produces.
//!
//! ```text
//! cargo run --release --example ensemble_config -- crates/core/configs/fig2.json /tmp/out
//! ```

use std::path::PathBuf;

use sica::output::{write_json, write_stats_csv};
use sica::prelude::*;

pub fn run_example() -> Result<EnsembleOutcome> {
    let mut args = std::env::args_os().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/fig2.json")));
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("sica-examples"));

    let mut cfg = RunConfig::load(&config)?;
    cfg.path_count = cfg.path_count.min(16);
    cfg.grid.t_end = cfg.grid.t_end.min(100.0);
    cfg.validate()?;

    let out = ensemble_run(&cfg)?;
    std::fs::create_dir_all(&dir).map_err(|e| SicaError::io(&dir, e))?;
    write_stats_csv(&out.stats, dir.join("stats.csv"))?;
    write_json(&out.rates, dir.join("rates.json"))?;

    let i = out.stats.get(Compartment::I);
    let last = out.stats.times.len() - 1;
    println!("{} paths to t = {}", out.rates.path_count, out.stats.times[last]);
    println!("I(T): mean {:.3}, 95% band [{:.3}, {:.3}]", i.mean[last], i.q025[last], i.q975[last]);
    println!("persistence rates: I {:.2}, S {:.2}", out.rates.persistence_i_rate, out.rates.persistence_s_rate);
    println!("wrote {}", dir.display());
    Ok(out)
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
