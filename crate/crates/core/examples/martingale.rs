// The Brownian martingale M_t = ∫ σ S dW along extinction-regime paths:
// M_T/T shrinks while the quadratic variation rate stays below σ²(Λ/μ)².

use sica::prelude::*;

pub fn run_example() -> Result<Vec<f64>> {
    let p = SicaParams::extinction_regime();
    let levy = LevyMeasure::single(0.4 * p.mu / p.lambda, 1.0)?;
    let x0 = SicaState::default_initial(&p);
    let mut rates = Vec::new();
    for t_end in [10.0, 100.0, 400.0] {
        let grid = GridSpec::new(t_end, 2e-4, 1000)?;
        let traj = simulate(&x0, &p, &levy, &grid, &mut RngStream::new(11, 0))?;
        let m = martingale_diagnostic(&traj, &p);
        println!(
            "T = {t_end:>5}: M_T/T = {:+.5}, qv/T = {:>8.4} (bound {:.1}), in region {}",
            m.m_over_t_final, m.qv_over_t_final, m.qv_bound, m.stayed_in_region
        );
        rates.push(m.m_over_t_final);
    }
    Ok(rates)
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
