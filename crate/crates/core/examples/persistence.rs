// One path in the persistence regime. Running time averages of I and S are
// compared with their guaranteed lower bounds.

use sica::prelude::*;

pub fn run_example() -> Result<PersistenceVerdict> {
    let p = SicaParams::persistence_regime();
    let levy = LevyMeasure::single(0.4 * p.mu / p.lambda, 1.0)?;
    validate_hypothesis_h(&levy, &p, 0.99)?;
    let report = compute_thresholds(&p, &levy);

    let grid = GridSpec::new(400.0, 1e-3, 1000)?;
    let traj = simulate(&SicaState::default_initial(&p), &p, &levy, &grid, &mut RngStream::new(1, 0))?;
    let i_avg = time_average(&traj, Compartment::I)?;
    let s_avg = time_average(&traj, Compartment::S)?;
    for k in (0..traj.len()).step_by(traj.len() / 8) {
        println!("t = {:>6.1}  <I> = {:>10.4}  <S> = {:>8.5}", traj.times[k], i_avg[k], s_avg[k]);
    }

    let v = verify_persistence(&traj, &report, 0.5, 0.9)?;
    println!("tail <I> {:.4} vs bound {:.4}: {}", v.i_time_avg_tail, v.i_bound, v.i_satisfied);
    println!("tail <S> {:.5} vs bound {:.5}: {}", v.s_time_avg_tail, v.s_bound, v.s_satisfied);
    Ok(v)
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
