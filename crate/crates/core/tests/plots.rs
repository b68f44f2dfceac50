use sica::analysis::ensemble_run;
use sica::config::RunConfig;
use sica::integrator::GridSpec;
use sica::model::Compartment;
use sica::svg::{render_svg, Panel, Series, Styling};

fn polyline_points(svg: &str) -> Vec<Vec<(f64, f64)>> {
    svg.match_indices("<polyline class=\"series\"")
        .map(|(at, _)| {
            let rest = &svg[at..];
            let start = rest.find("points=\"").unwrap() + 8;
            let end = start + rest[start..].find('"').unwrap();
            rest[start..end]
                .split_whitespace()
                .map(|pt| {
                    let (x, y) = pt.split_once(',').unwrap();
                    (x.parse().unwrap(), y.parse().unwrap())
                })
                .collect()
        })
        .collect()
}

#[test]
fn extinction_plot_has_rising_s_and_decaying_i() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/fig1.json")).unwrap();
    let mut cfg = RunConfig::from_json_str(&text).unwrap();
    cfg.path_count = 4;
    cfg.grid = GridSpec::new(200.0, 2e-4, 5000).unwrap();
    let out = ensemble_run(&cfg).unwrap();
    let st = &out.stats;
    let panels: Vec<Panel> = [Compartment::S, Compartment::I]
        .into_iter()
        .map(|c| Panel::new(c.label(), vec![Series::new(c.label(), st.times.clone(), st.get(c).mean.clone())]))
        .collect();
    let svg = render_svg(&panels, &Styling::default()).unwrap();
    let lines = polyline_points(&svg);
    assert_eq!(lines.len(), 2);

    // Screen y grows downward.
    let s = &lines[0];
    assert!(s.last().unwrap().1 < s[0].1);
    let i = &lines[1];
    assert!(i.last().unwrap().1 > i[0].1);

    let s_mean = &st.get(Compartment::S).mean;
    assert!(s_mean.windows(2).all(|w| w[1] >= w[0] - 1.0));
    assert!(s_mean.last().unwrap() > &600.0);
    assert!(st.get(Compartment::I).mean.last().unwrap() < &1e-3);
}

#[test]
fn band_is_drawn_under_its_series() {
    let t: Vec<f64> = (0..20).map(|k| k as f64).collect();
    let y: Vec<f64> = t.iter().map(|x| x.sin()).collect();
    let lo: Vec<f64> = y.iter().map(|v| v - 0.2).collect();
    let hi: Vec<f64> = y.iter().map(|v| v + 0.2).collect();
    let svg = render_svg(
        &[Panel::new("y", vec![Series::new("sin", t, y).with_band(lo, hi)])],
        &Styling::default(),
    )
    .unwrap();
    let band = svg.find("<polygon class=\"band\"").unwrap();
    let line = svg.find("<polyline class=\"series\"").unwrap();
    assert!(band < line);
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.trim_end().ends_with("</svg>"));
}
