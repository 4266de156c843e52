mod common;

use deit::analytic_models::{eat_cross_dipole, EatConfig, ProjectionMode};
use deit::cli_runner::experiments::{self, Setup, XpmReport};
use deit::cli_runner::{Preset, RunConfig, Tier};
use deit::scheme_builder::{build_eat_hamiltonian, Field, State5Diagonal};

use common::truncation_gap;

fn fig2(overrides: &[(&str, toml::Value)]) -> RunConfig {
    let mut c = RunConfig::from_preset(Preset::Fig2).unwrap();
    for (k, v) in overrides {
        c = c.with_override(k, v).unwrap();
    }
    c
}

fn tiers(names: &[&str]) -> toml::Value {
    toml::Value::Array(
        names
            .iter()
            .map(|s| toml::Value::String(s.to_string()))
            .collect(),
    )
}

fn phase(r: &XpmReport, t: Tier, f: Field) -> f64 {
    r.get(t, f).unwrap().xpm.phase
}

fn run(c: &RunConfig) -> XpmReport {
    experiments::run_xpm(&Setup::new(c).unwrap(), c).unwrap()
}

#[test]
fn higher_orders_converge_to_untruncated() {
    let gaps: Vec<f64> = [3, 5, 7].iter().map(|&o| truncation_gap(o)).collect();
    println!(
        "truncation gaps for orders 3, 5, 7: {:.2e} {:.2e} {:.2e}",
        gaps[0], gaps[1], gaps[2]
    );
    assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1]);
}

#[test]
fn xpm_dipole_is_third_order_in_signals() {
    let c = fig2(&[]);
    let s = Setup::new(&c).unwrap();
    let times: Vec<f64> = (1..=100).map(|k| k as f64 * 2e-8).collect();
    let cfg = experiments::eat_config(&c);
    let d = |scale: f64| {
        let f = s.fields.scale_signals(scale, scale);
        let on = build_eat_hamiltonian(&f, c.gamma, State5Diagonal::Tilde);
        let off = build_eat_hamiltonian(&f.without(Field::Signal2), c.gamma, State5Diagonal::Tilde);
        let amp = f.amplitude(Field::Signal1);
        let series = eat_cross_dipole(
            &on,
            &off,
            &[(0, c.p1), (1, c.p2)],
            &times,
            Field::Signal1,
            amp,
            c.model.projection,
            &cfg,
        )
        .unwrap();
        let dx = series.d_xpm();
        dx[80..].iter().sum::<f64>() / 20.0
    };
    let (a, b, e) = (d(0.5), d(1.0), d(2.0));
    let slope = ((e / a).abs()).ln() / 4f64.ln();
    println!("d_XPM at 0.5/1/2: {a:e} {b:e} {e:e}; exponent {slope:.3}");
    assert!((slope - 3.0).abs() < 0.3, "{slope}");
}

#[test]
fn cross_dipole_vanishes_without_partner() {
    let c = fig2(&[]);
    let s = Setup::new(&c).unwrap();
    let f = s.fields.without(Field::Signal2);
    let h = build_eat_hamiltonian(&f, c.gamma, State5Diagonal::Tilde);
    let times = [1e-7, 5e-7, 1e-6];
    let series = eat_cross_dipole(
        &h,
        &h,
        &[(0, 0.4), (1, 0.6)],
        &times,
        Field::Signal1,
        f.amplitude(Field::Signal1),
        ProjectionMode::Scheme,
        &EatConfig::default(),
    )
    .unwrap();
    assert!(series.d_xpm().iter().all(|&x| x == 0.0));
}

#[test]
fn phases_are_linear_in_density() {
    let base = run(&fig2(&[("model.tiers", tiers(&["sat", "eat"]))]));
    let dense = run(&fig2(&[
        ("model.tiers", tiers(&["sat", "eat"])),
        ("atom.density", "2.5e14 cm^-3".into()),
    ]));
    for t in [Tier::Sat, Tier::Eat] {
        for f in [Field::Signal1, Field::Signal2] {
            let r = phase(&dense, t, f) / phase(&base, t, f);
            assert!((r - 2.5).abs() < 1e-9, "{t:?} {f}: {r}");
        }
    }
}
