// Extinction and persistence criteria for the two shipped parameter sets,
// plus a sweep showing how Brownian intensity moves each side.
// Run with `cargo run --example thresholds`.

use sica::prelude::*;

pub fn run_example() -> Result<Vec<ThresholdReport>> {
    let levy = LevyMeasure::empty();
    let mut reports = Vec::new();
    for (name, p) in [
        ("extinction set", SicaParams::extinction_regime()),
        ("persistence set", SicaParams::persistence_regime()),
    ] {
        let r = compute_thresholds(&p, &levy);
        println!("{name} (sigma = {:e})", p.sigma);
        println!("  extinction:  {:>14.6} < {:<14.6} -> {}", r.ext_lhs, r.ext_rhs, r.extinction_holds);
        println!("  persistence: {:>14.6} > {:<14.6} -> {}", r.pers_lhs, r.pers_rhs, r.persistence_holds);
        println!("  mean bounds: I >= {:.6}, S >= {:.6}", r.i_mean_lower_bound, r.s_mean_lower_bound);
        println!("  population:  [{:.4}, {:.4}]", r.n_lower, r.n_upper);
        reports.push(r);
    }

    println!("\nsigma sweep on the persistence set");
    println!("{:>10} {:>14} {:>14} {:>12}", "sigma", "pers_rhs", "I bound", "persists");
    let base = SicaParams::persistence_regime();
    for sigma in [0.0, 1e-5, 2e-5, 3e-5, 4e-5, 5e-5] {
        let r = compute_thresholds(&base.with_sigma(sigma), &levy);
        println!(
            "{sigma:>10.1e} {:>14.6} {:>14.6} {:>12}",
            r.pers_rhs, r.i_mean_lower_bound, r.persistence_holds
        );
        reports.push(r);
    }
    Ok(reports)
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
