// The random building blocks: seeded streams, Brownian increments, Poisson
// counts and categorical mark selection.

use sica::model::JumpMark;
use sica::noise::{gaussian_increment, mix_stream, poisson_count, sample_marks, GENERATOR};
use sica::prelude::*;

pub fn run_example() -> Result<()> {
    println!("generator: {GENERATOR}");
    for k in 0..3 {
        println!("stream (42, {k}) -> {:#018x}", mix_stream(42, k));
    }

    let n = 200_000;
    let mut rng = RngStream::new(42, 0);
    let dws: Vec<f64> = (0..n).map(|_| gaussian_increment(&mut rng, 0.01)).collect::<Result<_>>()?;
    let mean = dws.iter().sum::<f64>() / n as f64;
    let var = dws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    println!("dW at dt = 0.01: mean {mean:+.2e}, variance {var:.5}");

    let mut rng = RngStream::new(42, 1);
    let counts: Vec<u64> = (0..n).map(|_| poisson_count(&mut rng, 0.5)).collect::<Result<_>>()?;
    let mean = counts.iter().sum::<u64>() as f64 / n as f64;
    println!("Poisson(0.5): mean {mean:.4}, max {}", counts.iter().max().unwrap());

    let levy = LevyMeasure::new(vec![
        JumpMark { jump_size: 1e-4, rate: 1.0 },
        JumpMark { jump_size: 2e-4, rate: 3.0 },
    ])?;
    let batch = sample_marks(&mut RngStream::new(42, 2), &levy, n)?;
    let second = batch.mark_indices.iter().filter(|&&k| k == 1).count();
    println!("mark 1 frequency {:.4} (rate share 0.75)", second as f64 / n as f64);

    let a = em_step(&SicaState::new(400.0, 10.0, 0.0, 0.0), &SicaParams::extinction_regime(), &levy, 1e-3, &mut RngStream::new(7, 7))?;
    let b = em_step(&SicaState::new(400.0, 10.0, 0.0, 0.0), &SicaParams::extinction_regime(), &levy, 1e-3, &mut RngStream::new(7, 7))?;
    assert_eq!(a, b);
    println!("replayed step: {:?}", a.state);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
