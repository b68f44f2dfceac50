// With the noise switched off the stochastic scheme is forward Euler. This
// prints its first-order convergence towards the RK4 baseline.

use sica::prelude::*;
use sica::verify::max_relative_gap;

pub fn run_example() -> Result<Vec<(f64, f64)>> {
    let p = SicaParams::extinction_regime().with_sigma(0.0);
    let x0 = SicaState::new(400.0, 10.0, 5.0, 5.0);
    let grid = |dt: f64| GridSpec::new(100.0, dt, (1.0 / dt).round() as usize);
    let reference = simulate_ode(&x0, &p, &grid(1e-3)?)?;

    let mut rows = Vec::new();
    let mut prev: Option<f64> = None;
    println!("{:>10} {:>12} {:>8}", "dt", "max rel gap", "ratio");
    for dt in [8e-3, 4e-3, 2e-3, 1e-3, 5e-4] {
        let em = simulate(&x0, &p, &LevyMeasure::empty(), &grid(dt)?, &mut RngStream::new(0, 0))?;
        let gap = max_relative_gap(&em, &reference);
        let ratio = prev.map(|g| format!("{:.3}", g / gap)).unwrap_or_default();
        println!("{dt:>10.1e} {gap:>12.4e} {ratio:>8}");
        prev = Some(gap);
        rows.push((dt, gap));
    }
    Ok(rows)
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
