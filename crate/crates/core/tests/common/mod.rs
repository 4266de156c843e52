//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use deit::atomic_structure::{dipole_between, D1Structure, Manifold, SpectroscopicConstants};
use deit::master_equation::{evolve, DensityMatrix, EvolveOptions};
use deit::ode::Tolerances;
use deit::scheme_builder::{DecayChannel, FieldSet, SchemeHamiltonian, TransitChannel};
use deit::units::mhz;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn bare_scheme(matrix: DMatrix<Complex64>, excited: Vec<bool>) -> SchemeHamiltonian {
    let dim = matrix.nrows();
    SchemeHamiltonian {
        dim,
        matrix,
        couplings: Vec::new(),
        decay_channels: Vec::new(),
        dephasing_channels: Vec::new(),
        transit: None,
        frame_note: String::new(),
        labels: (0..dim).map(|i| format!("s{i}")).collect(),
        is_excited: excited,
        roles: BTreeMap::new(),
    }
}

/// Lindblad generator on column-stacked ρ, built from vec(AρB) = (Bᵀ⊗A) vec ρ.
pub fn superoperator(s: &SchemeHamiltonian) -> DMatrix<Complex64> {
    let n = s.dim;
    let id = DMatrix::<Complex64>::identity(n, n);
    let h = &s.matrix;
    let i = c(0.0, 1.0);
    let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * (-i);
    let mut jumps: Vec<DMatrix<Complex64>> = Vec::new();
    let mut lossy: Vec<DMatrix<Complex64>> = Vec::new();
    for ch in &s.decay_channels {
        let mut a = DMatrix::from_element(n, n, ZERO);
        match ch.to {
            Some(to) => {
                a[(to, ch.from)] = c(ch.rate.sqrt(), 0.0);
                jumps.push(a);
            }
            None => {
                a[(ch.from, ch.from)] = c(ch.rate.sqrt(), 0.0);
                lossy.push(a);
            }
        }
    }
    for d in &s.dephasing_channels {
        let mut a = DMatrix::from_element(n, n, ZERO);
        a[(d.state, d.state)] = c((2.0 * d.rate).sqrt(), 0.0);
        jumps.push(a);
    }
    for a in &jumps {
        let ad = a.adjoint();
        let ada = &ad * a;
        l += a.conjugate().kronecker(a);
        l -= id.kronecker(&ada) * c(0.5, 0.0);
        l -= ada.transpose().kronecker(&id) * c(0.5, 0.0);
    }
    // loss out of the space: only the anticommutator part
    for a in &lossy {
        let ada = a.adjoint() * a;
        l -= id.kronecker(&ada) * c(0.5, 0.0);
        l -= ada.transpose().kronecker(&id) * c(0.5, 0.0);
    }
    if let Some(TransitChannel { rate, target }) = &s.transit {
        for k in 0..n * n {
            l[(k, k)] -= c(*rate, 0.0);
        }
        for j in 0..n {
            for m in 0..n {
                l[(j + j * n, m + m * n)] += c(rate * target[j], 0.0);
            }
        }
    }
    l
}

/// Largest entry difference between the integrator and exp(𝓛t) applied to ρ0.
pub fn oracle_error(s: &SchemeHamiltonian, rho0: &DensityMatrix, t: f64) -> f64 {
    let prop = (superoperator(s) * c(t, 0.0)).exp();
    let want = prop * DVector::from_column_slice(rho0.entries.as_slice());
    let tol = Tolerances {
        rtol: 1e-11,
        atol: 1e-14,
    };
    let got = evolve(
        rho0,
        s,
        &[t],
        &EvolveOptions {
            tol,
            ..Default::default()
        },
    )
    .unwrap();
    got.states[0]
        .entries
        .as_slice()
        .iter()
        .zip(want.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

/// A Λ system plus a detuned fourth level, with decay and transit.
pub fn four_level_test_scheme(gamma: f64) -> SchemeHamiltonian {
    let mut h = DMatrix::from_element(4, 4, ZERO);
    h[(1, 1)] = c(0.4 * gamma, 0.0);
    h[(3, 3)] = c(-1.5 * gamma, 0.0);
    for (a, b, v) in [
        (2, 0, c(0.6, 0.1)),
        (2, 1, c(-0.8, 0.0)),
        (3, 0, c(0.0, 0.4)),
    ] {
        h[(a, b)] = v * gamma;
        h[(b, a)] = v.conj() * gamma;
    }
    let mut s = bare_scheme(h, vec![false, false, true, true]);
    s.decay_channels = vec![
        DecayChannel {
            from: 2,
            to: Some(0),
            rate: 0.6 * gamma,
        },
        DecayChannel {
            from: 2,
            to: Some(1),
            rate: 0.4 * gamma,
        },
        DecayChannel {
            from: 3,
            to: Some(0),
            rate: gamma,
        },
    ];
    s.transit = Some(TransitChannel {
        rate: 0.05 * gamma,
        target: vec![0.5, 0.5, 0.0, 0.0],
    });
    s
}

/// Peak excited population of a resonant Λ system started in its dark state, over 10/γ.
pub fn dark_state_leak() -> f64 {
    let gamma = mhz(5.746);
    let (o1, op) = (mhz(0.68), mhz(4.06));
    let mut h = DMatrix::from_element(3, 3, ZERO);
    for (a, v) in [(0, o1), (1, op)] {
        h[(2, a)] = c(v, 0.0);
        h[(a, 2)] = c(v, 0.0);
    }
    let mut s = bare_scheme(h, vec![false, false, true]);
    s.decay_channels = vec![
        DecayChannel {
            from: 2,
            to: Some(0),
            rate: 0.5 * gamma,
        },
        DecayChannel {
            from: 2,
            to: Some(1),
            rate: 0.5 * gamma,
        },
    ];
    let norm = o1.hypot(op);
    let rho0 = DensityMatrix::from_amplitudes(&[c(op / norm, 0.0), c(-o1 / norm, 0.0), ZERO]);
    let times: Vec<f64> = (1..=100).map(|k| k as f64 * 0.1 / gamma).collect();
    let tr = evolve(&rho0, &s, &times, &EvolveOptions::default()).unwrap();
    tr.observables["pop s2"].iter().cloned().fold(0.0, f64::max)
}

/// The 7×7 matrix written out entry by entry in the scheme's row order, with
/// Δ̃ = −Δ − iγ/2 on the three far-detuned diagonals.
pub fn seven_level_by_hand(f: &FieldSet, gamma: f64) -> DMatrix<Complex64> {
    let g = c(0.0, -gamma / 2.0);
    let t = |d: f64| c(-d, 0.0) + g;
    let (o1, o2, op) = (f.omega1, f.omega2, f.omega_p);
    let (o2a, o1b, o2b, opb, o2c) = (f.omega2_5, f.omega1_6, f.omega2_6, f.omega_p_6, f.omega2_7);
    let z = ZERO;
    let rows = [
        [c(f.delta1, 0.0), z, z, o1.conj(), z, o1b.conj(), z],
        [z, c(f.delta2, 0.0), z, o2.conj(), z, o2b.conj(), z],
        [
            z,
            z,
            c(f.delta_p, 0.0),
            op.conj(),
            o2a.conj(),
            opb.conj(),
            o2c.conj(),
        ],
        [o1, o2, op, g, z, z, z],
        [z, z, o2a, z, t(f.far.state5), z, z],
        [o1b, o2b, opb, z, z, t(f.far.state6), z],
        [z, z, o2c, z, z, z, t(f.far.state7)],
    ];
    DMatrix::from_fn(7, 7, |i, j| rows[i][j])
}

/// Ground-state Zeeman combination E(2,+2) + E(2,−2) − 2E(2,0) from the Breit–Rabi formula, MHz.
pub fn breit_rabi_mismatch_mhz(b_gauss: f64) -> f64 {
    let a = 3417.341305452145;
    let (gj, gi, mu_b) = (2.00233113, -0.0009951414, 1.39962449361);
    let hfs = 2.0 * a;
    let x = (gj - gi) * mu_b * b_gauss / hfs;
    // the gI·m terms cancel in this combination; so does the common offset
    let upper = |m: f64| {
        0.5 * hfs
            * if m == -2.0 {
                1.0 - x
            } else {
                (1.0 + m * x + x * x).sqrt()
            }
    };
    upper(2.0) + upper(-2.0) - 2.0 * upper(0.0)
}

/// Exhaustive selection-rule and sum-rule check at field `b`. Returns the largest relative
/// spread of Σ|d|² across levels, the largest forbidden amplitude found and the mean Σ|d|².
pub fn dipole_rules(b: f64) -> (f64, f64, f64) {
    let consts = SpectroscopicConstants::rb87_d1();
    let s = D1Structure::compute(&consts, b).unwrap();
    let mut forbidden: f64 = 0.0;
    let mut from_ground = Vec::new();
    let mut from_excited = vec![0.0; s.excited.len()];
    for g in &s.ground {
        assert_eq!(g.manifold, Manifold::Ground);
        let mut sum = 0.0;
        for (k, e) in s.excited.iter().enumerate() {
            let d = dipole_between(&consts, g, e);
            if (e.mf.0 - g.mf.0).abs() > 2 {
                forbidden = forbidden.max(d.amplitude.abs());
            }
            sum += d.amplitude * d.amplitude;
            from_excited[k] += d.amplitude * d.amplitude;
        }
        from_ground.push(sum);
    }
    let all: Vec<f64> = from_ground.into_iter().chain(from_excited).collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let spread = all
        .iter()
        .map(|v| (v / mean - 1.0).abs())
        .fold(0.0, f64::max);
    (spread, forbidden, mean)
}

pub fn fig2_config(overrides: &[(&str, toml::Value)]) -> deit::cli_runner::RunConfig {
    let mut c = deit::cli_runner::RunConfig::from_preset(deit::cli_runner::Preset::Fig2).unwrap();
    for (k, v) in overrides {
        c = c.with_override(k, v).unwrap();
    }
    c
}

/// Largest relative gap over the last 20% of 2 µs between the order-tagged and the full
/// amplitude integration, for the |4⟩ and |6⟩ coherences with |1⟩ and |2⟩.
pub fn truncation_gap(order: usize) -> f64 {
    use deit::analytic_models::{eat_series, truncated_coherence, EatConfig};
    use deit::scheme_builder::{build_eat_hamiltonian, State5Diagonal};
    let c = fig2_config(&[]);
    let f = deit::cli_runner::experiments::Setup::new(&c)
        .unwrap()
        .fields;
    let h = build_eat_hamiltonian(&f, c.gamma, State5Diagonal::Tilde);
    let times: Vec<f64> = (0..=40).map(|k| 1.6e-6 + k as f64 * 1e-8).collect();
    let tol = Tolerances {
        rtol: 1e-12,
        atol: 1e-16,
    };
    let mut worst: f64 = 0.0;
    for start in [0, 1] {
        let cut = eat_series(
            &h,
            start,
            &times,
            &EatConfig {
                order: Some(order),
                tol,
            },
            &mut |_| true,
        )
        .unwrap();
        let full = eat_series(
            &h,
            start,
            &times,
            &EatConfig { order: None, tol },
            &mut |_| true,
        )
        .unwrap();
        for (a, b) in cut.iter().zip(&full) {
            for upper in [3, 5] {
                let x = truncated_coherence(a, upper, start, Some(order));
                let y = truncated_coherence(b, upper, start, None);
                worst = worst.max((x - y).norm() / y.norm());
            }
        }
    }
    worst
}

/// RMS of d_XPM minus its 41-sample running mean over the last 20% of the window,
/// relative to the mean there: the fast part of the signal only.
pub fn ripple(d: &[f64]) -> f64 {
    let h = 20;
    let start = d.len() * 4 / 5;
    let (mut acc, mut level, mut count) = (0.0, 0.0, 0.0);
    for k in start..d.len() - h {
        let avg = d[k - h..=k + h].iter().sum::<f64>() / (2 * h + 1) as f64;
        acc += (d[k] - avg).powi(2);
        level += avg;
        count += 1.0;
    }
    (acc / count).sqrt() / (level / count).abs()
}

/// Fast ripple of the field-1 d_XPM on a 1 ns grid: (16-level Lindblad, 7-level scheme).
pub fn ripple_16_vs_7() -> (f64, f64) {
    use deit::analytic_models::DipoleProjection;
    use deit::atomic_structure::Role;
    use deit::cli_runner::experiments::{full_scheme, Setup};
    use deit::master_equation::dipole_series;
    use deit::scheme_builder::{build_eat_hamiltonian, Field, State5Diagonal};

    let c = fig2_config(&[]);
    let s = Setup::new(&c).unwrap();
    let times: Vec<f64> = (1..=2000).map(|k| k as f64 * 1e-9).collect();
    let opts = EvolveOptions {
        tol: c.tol,
        check: false,
        keep_states: false,
    };
    let field = Field::Signal1;
    let amp = s.fields.amplitude(field);
    let series =
        |on: &SchemeHamiltonian, off: &SchemeHamiltonian, rho: &DensityMatrix| -> Vec<f64> {
            let p = DipoleProjection::from_scheme(on, field, amp, c.model.projection).unwrap();
            let a = dipole_series(
                rho,
                on,
                &times,
                std::slice::from_ref(&p),
                &opts,
                &mut |_| true,
            )
            .unwrap()
            .0;
            let b = dipole_series(
                rho,
                off,
                &times,
                std::slice::from_ref(&p),
                &opts,
                &mut |_| true,
            )
            .unwrap()
            .0;
            a[0].iter()
                .zip(&b[0])
                .map(|(x, y)| x.norm() - y.norm())
                .collect()
        };

    let on = full_scheme(&s, &c, &s.fields).unwrap();
    let off = full_scheme(&s, &c, &s.fields.without(Field::Signal2)).unwrap();
    let mut pops = vec![0.0; on.dim];
    pops[on.role(Role::One).unwrap()] = c.p1;
    pops[on.role(Role::Two).unwrap()] = c.p2;
    let full = ripple(&series(&on, &off, &DensityMatrix::diagonal(&pops)));

    let on7 = build_eat_hamiltonian(&s.fields, c.gamma, State5Diagonal::Tilde);
    let off7 = build_eat_hamiltonian(
        &s.fields.without(Field::Signal2),
        c.gamma,
        State5Diagonal::Tilde,
    );
    let mut pops7 = vec![0.0; 7];
    pops7[0] = c.p1;
    pops7[1] = c.p2;
    (
        full,
        ripple(&series(&on7, &off7, &DensityMatrix::diagonal(&pops7))),
    )
}
