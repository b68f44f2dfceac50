macro_rules! example {
    ($name:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }
    };
}

example!(thresholds, "thresholds.rs");
example!(deterministic_baseline, "deterministic_baseline.rs");
example!(noise_kernels, "noise_kernels.rs");
example!(persistence, "persistence.rs");
example!(martingale, "martingale.rs");

#[test]
fn thresholds_example_runs() {
    let reports = thresholds::run_example().unwrap();
    assert!(reports[0].extinction_holds);
    assert!(reports[1].persistence_holds);
    let rhs: Vec<f64> = reports[2..].iter().map(|r| r.pers_rhs).collect();
    assert!(rhs.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn deterministic_baseline_example_shows_first_order() {
    let rows = deterministic_baseline::run_example().unwrap();
    for w in rows.windows(2) {
        let ratio = w[0].1 / w[1].1;
        assert!((1.9..2.1).contains(&ratio), "{ratio}");
    }
}

#[test]
fn noise_kernels_example_runs() {
    noise_kernels::run_example().unwrap();
}

#[test]
fn persistence_example_meets_bounds() {
    let v = persistence::run_example().unwrap();
    assert!(v.i_satisfied && v.s_satisfied && !v.informational);
}

#[test]
fn martingale_example_decays() {
    let rates = martingale::run_example().unwrap();
    assert!(rates.last().unwrap().abs() < 0.5);
}
