//! What each preset computes: XPM across the model tiers, state preparation,
//! the single-photon estimate and the warm-gas scenario.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::analytic_models::{
    eat_cross_dipole, eta, field_xpm, sat_cross_dipole, sat_indices, steady_mean, xpm_phase,
    DipoleProjection, EatConfig, FieldSeries, FieldXpm, MediumParams, XpmGeometry,
};
use crate::atomic_structure::{
    far_detunings, mismatch_from, D1Structure, FarDetunings, Role, SpectroscopicConstants,
};
use crate::error::{DeitError, Result};
use crate::master_equation::{
    add_motion_channels, dipole_series, prepare_mixture, DensityMatrix, EvolveOptions,
    InvariantReport, PrepConfig,
};
use crate::ode::Tolerances;
use crate::pulse_propagation::{
    doppler_window, e_max, group_velocity, max_phase_shift, min_pulse_duration, phase_pipeline,
    transparency_window, velocity_mismatch, PipelineInputs, PulseSpec,
};
use crate::scheme_builder::{
    build_eat_hamiltonian, build_full_d1, rabi_from_amplitude, scheme_lasers, Field, FieldSet,
    FullModelOptions, SchemeDipoles, SchemeHamiltonian,
};
use crate::units::{intensity, m2_to_cm2, to_mhz, SPEED_OF_LIGHT};

use super::config::{Preset, RunConfig, Tier};
use super::table::{num, Table};

/// Everything derived from a configuration before any tier runs.
#[derive(Debug, Clone)]
pub struct Setup {
    pub consts: SpectroscopicConstants,
    pub energies: D1Structure,
    pub dipole_levels: D1Structure,
    pub fields: FieldSet,
    pub delta_mag: f64,
    /// Laser angular frequency, rad/s.
    pub omega: f64,
    pub length: f64,
}

impl Setup {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        let consts = SpectroscopicConstants::rb87_d1();
        let energies = D1Structure::compute(&consts, cfg.field)?;
        let dipole_levels = D1Structure::compute(&consts, cfg.dipole_field)?;
        let dipoles = SchemeDipoles::from_structure(&consts, &dipole_levels, &cfg.levels)?;
        let [d1, d2, dp] = cfg.fields.detunings;
        let far = match cfg.fields.far {
            Some(f) => f,
            None => FieldSet::structural_far(far_detunings(&energies, &cfg.levels)?, d2, dp),
        };
        let fields = FieldSet::from_dipoles(
            cfg.fields.omega1.into(),
            cfg.fields.omega2.into(),
            cfg.fields.omega_p.into(),
            [d1, d2, dp],
            far,
            dipoles,
            cfg.model.signs,
        );
        Ok(Setup {
            delta_mag: mismatch_from(&energies, &cfg.levels)?,
            omega: consts.line_frequency,
            consts,
            energies,
            dipole_levels,
            fields,
            length: cfg.length,
        })
    }

    pub fn medium(&self, cfg: &RunConfig) -> MediumParams {
        let d = &self.fields.dipoles;
        MediumParams {
            density: cfg.density,
            p1: cfg.p1,
            p2: cfg.p2,
            d41: d.d41.abs(),
            d42: d.d42.abs(),
            d53: d.d53.abs(),
            omega_p: self.fields.omega_p,
            gamma: cfg.gamma,
            big_delta: self.fields.far.state5,
        }
    }

    pub fn intensity(&self, f: Field) -> f64 {
        intensity(self.fields.amplitude(f).norm())
    }

    fn geometry(&self, cfg: &RunConfig, partner: Field) -> XpmGeometry {
        XpmGeometry {
            density: cfg.density,
            length: self.length,
            omega: self.omega,
            partner_intensity: self.intensity(partner),
            window: cfg.steady_fraction,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TierResult {
    pub tier: Tier,
    pub xpm: FieldXpm,
    /// d_XPM on the common time grid (constant for the closed-form tier).
    pub d_series: Vec<f64>,
    /// Time after which d_XPM stays within 5% of its steady value.
    pub onset: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leakage {
    /// Steady populations of |X⟩ and |3⟩.
    pub x: f64,
    pub three: f64,
}

impl Leakage {
    pub fn ratio(&self) -> f64 {
        self.x / self.three
    }
}

#[derive(Debug, Clone)]
pub struct XpmReport {
    pub times: Vec<f64>,
    pub results: Vec<TierResult>,
    pub delta_mag: f64,
    pub far: FarDetunings,
    pub leakage: Option<Leakage>,
    pub invariants: Option<InvariantReport>,
}

impl XpmReport {
    pub fn get(&self, tier: Tier, field: Field) -> Option<&TierResult> {
        self.results
            .iter()
            .find(|r| r.tier == tier && r.xpm.field == field)
    }
}

/// First time after which |v − steady| ≤ frac·|steady| for every later sample.
pub fn onset_time(times: &[f64], values: &[f64], steady: f64, frac: f64) -> Option<f64> {
    let band = frac * steady.abs();
    match values.iter().rposition(|v| (v - steady).abs() > band) {
        None => times.first().copied(),
        Some(k) if k + 1 < times.len() => Some(times[k + 1]),
        Some(_) => None,
    }
}

fn sat_tier(s: &Setup, cfg: &RunConfig, n: usize) -> Result<Vec<TierResult>> {
    let m = s.medium(cfg);
    let [d1, d2, dp] = cfg.fields.detunings;
    let (i1, i2) = (s.intensity(Field::Signal1), s.intensity(Field::Signal2));
    let on = sat_indices(&m, cfg.model.sat_branch, d1, d2, dp, i1, i2)?;
    let no2 = sat_indices(&m, cfg.model.sat_branch, d1, d2, dp, i1, 0.0)?;
    let no1 = sat_indices(&m, cfg.model.sat_branch, d1, d2, dp, 0.0, i2)?;
    let k = s.omega / SPEED_OF_LIGHT;
    let mut out = Vec::new();
    for (field, n_on, n_off, partner) in [
        (Field::Signal1, on.n1, no2.n1, i2),
        (Field::Signal2, on.n2, no1.n2, i1),
    ] {
        let ph = xpm_phase(n_on, n_off, s.length, s.omega)?;
        let d = sat_cross_dipole(n_on, n_off, s.fields.amplitude(field), cfg.density);
        out.push(TierResult {
            tier: Tier::Sat,
            xpm: FieldXpm {
                field,
                phase: ph.phase,
                attenuation_on: ph.attenuation_on,
                attenuation_off: ph.attenuation_off,
                coefficient: if partner > 0.0 {
                    ph.phase / (k * s.length * partner)
                } else {
                    0.0
                },
                d_xpm: d,
                drift: 0.0,
                n_on,
                n_off,
            },
            d_series: vec![d; n],
            onset: None,
        });
    }
    Ok(out)
}

fn finish(tier: Tier, series: &FieldSeries, s: &Setup, cfg: &RunConfig) -> Result<TierResult> {
    let xpm = field_xpm(series, &s.geometry(cfg, series.field.partner()))?;
    let d = series.d_xpm();
    let onset = onset_time(&series.times, &d, xpm.d_xpm, 0.05);
    Ok(TierResult {
        tier,
        xpm,
        d_series: d,
        onset,
    })
}

pub fn eat_config(cfg: &RunConfig) -> EatConfig {
    EatConfig {
        order: cfg.model.eat_order,
        tol: Tolerances {
            rtol: cfg.tol.rtol.min(1e-10),
            atol: cfg.tol.atol.min(1e-14),
        },
    }
}

fn eat_tier(s: &Setup, cfg: &RunConfig, times: &[f64]) -> Result<Vec<TierResult>> {
    let h = |f: &FieldSet| build_eat_hamiltonian(f, cfg.gamma, cfg.model.state5);
    let on = h(&s.fields);
    let mixture = [(0, cfg.p1), (1, cfg.p2)];
    let ecfg = eat_config(cfg);
    [Field::Signal1, Field::Signal2]
        .par_iter()
        .map(|&field| {
            let off = h(&s.fields.without(field.partner()));
            let series = eat_cross_dipole(
                &on,
                &off,
                &mixture,
                times,
                field,
                s.fields.amplitude(field),
                cfg.model.projection,
                &ecfg,
            )?;
            finish(Tier::Eat, &series, s, cfg)
        })
        .collect()
}

/// The 16-state scheme for the given field set, with motional channels when configured.
pub fn full_scheme(s: &Setup, cfg: &RunConfig, fields: &FieldSet) -> Result<SchemeHamiltonian> {
    let lasers = scheme_lasers(&s.energies, &cfg.levels, fields, cfg.fields.polarizations)?;
    let opts = FullModelOptions {
        rwa_cutoff: cfg.model.rwa_cutoff,
        gamma: cfg.gamma,
        signs: cfg.model.signs,
    };
    let scheme = build_full_d1(
        &s.consts,
        &s.energies,
        &s.dipole_levels,
        &lasers,
        &cfg.levels,
        &opts,
    )?;
    if cfg.dephasing > 0.0 || cfg.transit > 0.0 {
        let target = mixture_populations(&scheme, cfg)?;
        return add_motion_channels(&scheme, cfg.dephasing, cfg.transit, &target);
    }
    Ok(scheme)
}

fn mixture_populations(scheme: &SchemeHamiltonian, cfg: &RunConfig) -> Result<Vec<f64>> {
    let mut p = vec![0.0; scheme.dim];
    p[scheme.role(Role::One)?] += cfg.p1;
    p[scheme.role(Role::Two)?] += cfg.p2;
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return Err(DeitError::Config("initial mixture is empty".into()));
    }
    Ok(p.into_iter().map(|x| x / total).collect())
}

struct NumOutput {
    results: Vec<TierResult>,
    leakage: Leakage,
    invariants: InvariantReport,
}

fn num_tier(s: &Setup, cfg: &RunConfig, times: &[f64]) -> Result<NumOutput> {
    let on = full_scheme(s, cfg, &s.fields)?;
    let off2 = full_scheme(s, cfg, &s.fields.without(Field::Signal2))?;
    let off1 = full_scheme(s, cfg, &s.fields.without(Field::Signal1))?;
    let rho0 = DensityMatrix::diagonal(&mixture_populations(&on, cfg)?);
    let proj = |f: Field| {
        DipoleProjection::from_scheme(&on, f, s.fields.amplitude(f), cfg.model.projection)
    };
    let (p1, p2) = (proj(Field::Signal1)?, proj(Field::Signal2)?);
    let opts = EvolveOptions {
        tol: cfg.tol,
        check: true,
        keep_states: false,
    };
    let both = [p1.clone(), p2.clone()];
    let (r_on, (r_off2, r_off1)) = rayon::join(
        || dipole_series(&rho0, &on, times, &both, &opts, &mut |_| true),
        || {
            rayon::join(
                || {
                    dipole_series(
                        &rho0,
                        &off2,
                        times,
                        std::slice::from_ref(&p1),
                        &opts,
                        &mut |_| true,
                    )
                },
                || {
                    dipole_series(
                        &rho0,
                        &off1,
                        times,
                        std::slice::from_ref(&p2),
                        &opts,
                        &mut |_| true,
                    )
                },
            )
        },
    );
    let (mut on_p, traj) = r_on?;
    let (off2_p, t2) = r_off2?;
    let (off1_p, t1) = r_off1?;
    let mut invariants = traj.invariants;
    invariants.merge(&t2.invariants);
    invariants.merge(&t1.invariants);
    let p_on2 = on_p.pop().unwrap();
    let p_on1 = on_p.pop().unwrap();
    let mk = |field, p_on, p_off: Vec<Complex64>| FieldSeries {
        field,
        times: times.to_vec(),
        p_on,
        p_off,
        amplitude: s.fields.amplitude(field),
    };
    let s1 = mk(Field::Signal1, p_on1, off2_p.into_iter().next().unwrap());
    let s2 = mk(Field::Signal2, p_on2, off1_p.into_iter().next().unwrap());
    let pop = |r: Role| -> Result<f64> {
        let label = &on.labels[on.role(r)?];
        let series: Vec<Complex64> = traj.observables[&format!("pop {label}")]
            .iter()
            .map(|&x| x.into())
            .collect();
        Ok(steady_mean(times, &series, cfg.steady_fraction).value.re)
    };
    Ok(NumOutput {
        results: vec![
            finish(Tier::Num, &s1, s, cfg)?,
            finish(Tier::Num, &s2, s, cfg)?,
        ],
        leakage: Leakage {
            x: pop(Role::X)?,
            three: pop(Role::Three)?,
        },
        invariants,
    })
}

/// Runs the configured tiers for both signal fields.
pub fn run_xpm(s: &Setup, cfg: &RunConfig) -> Result<XpmReport> {
    let times = cfg.times();
    let mut report = XpmReport {
        times: times.clone(),
        results: Vec::new(),
        delta_mag: s.delta_mag,
        far: s.fields.far,
        leakage: None,
        invariants: None,
    };
    let mut tiers = cfg.model.tiers.clone();
    tiers.sort();
    tiers.dedup();
    for tier in tiers {
        match tier {
            Tier::Sat => report.results.extend(sat_tier(s, cfg, times.len())?),
            Tier::Eat => report.results.extend(eat_tier(s, cfg, &times)?),
            Tier::Num => {
                let n = num_tier(s, cfg, &times)?;
                report.results.extend(n.results);
                report.leakage = Some(n.leakage);
                report.invariants = Some(n.invariants);
            }
        }
    }
    Ok(report)
}

pub fn xpm_tables(r: &XpmReport) -> (Table, Table) {
    let mut series = Table::new(["t_us"]);
    for res in &r.results {
        series
            .columns
            .push(format!("{}_{}", res.tier.name(), res.xpm.field));
    }
    for (k, t) in r.times.iter().enumerate() {
        let mut row = vec![num(t * 1e6)];
        row.extend(r.results.iter().map(|res| num(res.d_series[k])));
        series.rows.push(row);
    }
    (series, xpm_summary(r))
}

pub fn xpm_summary(r: &XpmReport) -> Table {
    let mut t = Table::new([
        "tier",
        "field",
        "phase_rad",
        "attenuation_on",
        "attenuation_off",
        "coefficient_cm2_per_W",
        "d_xpm",
        "drift",
        "onset_us",
        "delta_mag_MHz",
        "leakage_x_over_3",
    ]);
    for res in &r.results {
        let x = &res.xpm;
        t.rows.push(vec![
            res.tier.name().to_string(),
            x.field.to_string(),
            num(x.phase),
            num(x.attenuation_on),
            num(x.attenuation_off),
            num(m2_to_cm2(x.coefficient)),
            num(x.d_xpm),
            num(x.drift),
            res.onset
                .map(|o| num(o * 1e6))
                .unwrap_or_else(|| "nan".into()),
            num(to_mhz(r.delta_mag)),
            match (res.tier, r.leakage) {
                (Tier::Num, Some(l)) => num(l.ratio()),
                _ => "nan".into(),
            },
        ]);
    }
    if r.results.is_empty() {
        let mut row = vec!["none".into(), "none".into()];
        row.extend(std::iter::repeat_n("nan".to_string(), 7));
        row.push(num(to_mhz(r.delta_mag)));
        row.push("nan".into());
        t.rows.push(row);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrepRow {
    pub efficiency: f64,
    pub p1: f64,
    pub p2: f64,
    pub v1: f64,
    pub v2: f64,
    pub mismatch: f64,
    /// Branching-ratio prediction γ41/(γ41+γ42).
    pub branching_p1: f64,
}

/// Pump/repump then swap, for every configured efficiency; group velocities use dipoles at
/// the same field as the decay branching.
pub fn run_state_prep(s: &Setup, cfg: &RunConfig) -> Result<Vec<PrepRow>> {
    let d = &s.fields.dipoles;
    let g1 = d.d41 * d.d41;
    let g2 = d.d42 * d.d42;
    cfg.prep
        .efficiencies
        .iter()
        .map(|&eps| {
            let prep = PrepConfig {
                pump_rate: cfg.prep.pump_rate,
                pump_duration: cfg.prep.pump_duration,
                max_pulses: cfg.prep.max_pulses,
                repump_set: cfg.prep.repump.clone(),
                raman_efficiency: eps,
                threshold: cfg.prep.threshold,
                b: cfg.dipole_field,
                gamma: cfg.gamma,
            };
            let mix = prepare_mixture(&s.consts, &cfg.levels, &prep)?;
            let m = MediumParams {
                p1: mix.p1,
                p2: mix.p2,
                ..s.medium(cfg)
            };
            let v1 = group_velocity(eta(1, &m)?, s.omega)?;
            let v2 = group_velocity(eta(2, &m)?, s.omega)?;
            Ok(PrepRow {
                efficiency: eps,
                p1: mix.p1,
                p2: mix.p2,
                v1,
                v2,
                mismatch: velocity_mismatch(v1, v2),
                branching_p1: g1 / (g1 + g2),
            })
        })
        .collect()
}

pub fn prep_table(rows: &[PrepRow]) -> Table {
    let mut t = Table::new([
        "epsilon",
        "p1",
        "p2",
        "v1_m_per_s",
        "v2_m_per_s",
        "velocity_mismatch",
        "branching_p1",
    ]);
    for r in rows {
        t.rows.push(vec![
            num(r.efficiency),
            num(r.p1),
            num(r.p2),
            num(r.v1),
            num(r.v2),
            num(r.mismatch),
            num(r.branching_p1),
        ]);
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// (quantity, value, unit)
    pub rows: Vec<(String, f64, String)>,
    pub warnings: Vec<String>,
}

impl Estimate {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.0 == name).map(|r| r.1)
    }
}

/// Pulse geometry at the minimum duration and the resulting phase estimates.
pub fn estimate(s: &Setup, cfg: &RunConfig) -> Result<Estimate> {
    let m = s.medium(cfg);
    let op = s.fields.omega_p.norm();
    let e1 = eta(1, &m)?;
    let tau = e1 * cfg.gamma / (2.0 * op * op);
    let lambda = cfg.pulse.wavelength;
    let k = 2.0 * std::f64::consts::PI / lambda;
    let w0 = cfg.pulse.waist;
    let z_r = k * w0 * w0;
    let timing = min_pulse_duration(tau, k, z_r)?;
    let pulse = PulseSpec {
        w0,
        duration: timing.duration,
        wavelength: lambda,
        photon_number: cfg.pulse.photons,
    };
    let emax = e_max(&pulse);
    let delta = s.fields.far.state5;
    let closed = max_phase_shift(lambda, w0, cfg.gamma, delta, cfg.density);
    let pipeline = phase_pipeline(&PipelineInputs {
        wavelength: lambda,
        w0,
        gamma: cfg.gamma,
        delta,
        density: cfg.density,
        omega_p: op,
        d_signal: m.d41,
        d_shift: m.d53,
        population: cfg.p1,
    })?;
    let h = &cfg.headline;
    let headline = max_phase_shift(
        lambda,
        lambda / h.wavelength_over_waist,
        h.linewidth_over_detuning,
        1.0,
        h.packing * k.powi(3),
    );
    let window = transparency_window(s.fields.omega_p_6.norm(), cfg.gamma);
    let doppler = doppler_window(op, cfg.pulse.doppler_width)?;
    let rows = vec![
        ("dispersion_tau".into(), tau, "s^2".into()),
        ("rayleigh_length".into(), z_r, "m".into()),
        ("interaction_length".into(), timing.length, "m".into()),
        ("min_duration".into(), timing.duration, "s".into()),
        ("e_max".into(), emax, "V/m".into()),
        ("phi_max_closed_form".into(), closed.phase, "rad".into()),
        (
            "phi_pipeline_scheme_dipoles".into(),
            pipeline.phase,
            "rad".into(),
        ),
        ("phi_headline".into(), headline.phase, "rad".into()),
        ("transparency_window".into(), to_mhz(window), "MHz".into()),
        ("doppler_window".into(), to_mhz(doppler), "MHz".into()),
        ("delta_mag".into(), to_mhz(s.delta_mag), "MHz".into()),
    ];
    let mut warnings = closed.warnings;
    warnings.extend(
        headline
            .warnings
            .into_iter()
            .map(|w| format!("headline: {w}")),
    );
    Ok(Estimate { rows, warnings })
}

pub fn estimate_table(e: &Estimate) -> Table {
    let mut t = Table::new(["quantity", "value", "unit"]);
    for (q, v, u) in &e.rows {
        t.rows.push(vec![q.clone(), num(*v), u.clone()]);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseGeometry {
    pub duration: f64,
    pub length: f64,
    pub amplitude: f64,
}

/// Replaces the signal Rabi frequencies and the length by those of N-photon pulses at the
/// minimum duration, keeping the configured signs.
pub fn pulsed_setup(s: &Setup, cfg: &RunConfig) -> Result<(Setup, PulseGeometry)> {
    let m = s.medium(cfg);
    let op = s.fields.omega_p.norm();
    let tau = eta(1, &m)? * cfg.gamma / (2.0 * op * op);
    let lambda = cfg.pulse.wavelength;
    let k = 2.0 * std::f64::consts::PI / lambda;
    let z_r = k * cfg.pulse.waist * cfg.pulse.waist;
    let timing = min_pulse_duration(tau, k, z_r)?;
    let pulse = PulseSpec {
        w0: cfg.pulse.waist,
        duration: timing.duration,
        wavelength: lambda,
        photon_number: cfg.pulse.photons,
    };
    pulse.validate()?;
    let amp = e_max(&pulse) * cfg.pulse.photons.sqrt();
    let d = s.fields.dipoles;
    let sign = |x: f64| if x < 0.0 { -1.0 } else { 1.0 };
    let o1 = rabi_from_amplitude(amp.into(), d.d41).norm() * sign(cfg.fields.omega1);
    let o2 = rabi_from_amplitude(amp.into(), d.d42).norm() * sign(cfg.fields.omega2);
    let f = &s.fields;
    let fields = FieldSet::from_dipoles(
        o1.into(),
        o2.into(),
        f.omega_p,
        [f.delta1, f.delta2, f.delta_p],
        f.far,
        d,
        cfg.model.signs,
    );
    let mut out = s.clone();
    out.fields = fields;
    out.length = timing.length;
    Ok((
        out,
        PulseGeometry {
            duration: timing.duration,
            length: timing.length,
            amplitude: amp,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Note,
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub severity: Severity,
    pub message: String,
}

/// Physical sanity checks without running any tier.
pub fn validate(cfg: &RunConfig) -> Vec<Issue> {
    let mut out = Vec::new();
    let mut push = |severity, message: String| out.push(Issue { severity, message });
    let s = match Setup::new(cfg) {
        Ok(s) => s,
        Err(e) => {
            push(Severity::Error, e.to_string());
            return out;
        }
    };
    let f = &s.fields;
    if f.far.state5 == 0.0 {
        push(
            Severity::Error,
            "far detuning of |5> is zero: Kerr coefficient diverges".into(),
        );
    }
    if cfg.model.sat_branch == crate::analytic_models::SatBranch::Rigorous && f.delta_p != 0.0 {
        push(
            Severity::Error,
            "rigorous closed form needs a resonant pump (delta_p = 0)".into(),
        );
    }
    let op = f.omega_p.norm();
    if op == 0.0 {
        push(Severity::Error, "pump Rabi frequency is zero".into());
    }
    for (name, o) in [("omega1", f.omega1.norm()), ("omega2", f.omega2.norm())] {
        if o > 0.3 * op {
            push(
                Severity::Warning,
                format!("{name} = {:.3} MHz is not small against omega_p = {:.3} MHz; perturbative tiers unreliable", to_mhz(o), to_mhz(op)),
            );
        }
    }
    let window = transparency_window(f.omega_p_6.norm(), cfg.gamma);
    let ratio = s.delta_mag.abs() / window;
    if ratio < 3.0 {
        push(
            Severity::Warning,
            format!("|delta_mag| = {:.3} MHz is within 3x the transparency window {:.3} MHz; |X> leakage expected", to_mhz(s.delta_mag.abs()), to_mhz(window)),
        );
    } else {
        push(
            Severity::Note,
            format!("|delta_mag| / transparency window = {ratio:.2}"),
        );
    }
    if let Some(want) = cfg.mismatch_check {
        let rel = (s.delta_mag - want).abs() / want.abs();
        if rel > 0.01 {
            push(
                Severity::Warning,
                format!(
                    "delta_mag = {:.4} MHz differs from the reference {:.4} MHz by {:.2}%",
                    to_mhz(s.delta_mag),
                    to_mhz(want),
                    100.0 * rel
                ),
            );
        }
    }
    if cfg.model.tiers.contains(&Tier::Num) {
        for (name, d) in [
            ("|5>", f.far.state5),
            ("|6>", f.far.state6),
            ("|7>", f.far.state7),
        ] {
            if d.abs() > cfg.model.rwa_cutoff {
                push(
                    Severity::Warning,
                    format!("far detuning of {name} ({:.1} MHz) exceeds the RWA cutoff; its couplings are dropped", to_mhz(d)),
                );
            }
        }
    }
    if cfg.p1 + cfg.p2 < 1.0 - 1e-9 {
        push(
            Severity::Note,
            format!(
                "mixture holds only {:.3} of the population",
                cfg.p1 + cfg.p2
            ),
        );
    }
    out
}

/// Every sweep point of the configuration (a single point when there are no axes).
pub fn sweep_points(cfg: &RunConfig) -> Result<Vec<(Vec<String>, RunConfig)>> {
    let mut points = vec![(Vec::new(), cfg.clone())];
    for axis in &cfg.sweep {
        let mut next = Vec::new();
        for (labels, c) in &points {
            for v in &axis.values {
                let mut l: Vec<String> = labels.clone();
                l.push(match v {
                    toml::Value::String(s) => s.clone(),
                    other => other.to_string(),
                });
                next.push((l, c.with_override(&axis.parameter, v)?));
            }
        }
        points = next;
    }
    Ok(points)
}

/// The summary table of one configuration point.
pub fn summary(cfg: &RunConfig) -> Result<Table> {
    let s = Setup::new(cfg)?;
    Ok(match cfg.preset {
        Preset::StatePrep => prep_table(&run_state_prep(&s, cfg)?),
        Preset::MaxPhase => estimate_table(&estimate(&s, cfg)?),
        Preset::HotGas => {
            let (p, geo) = pulsed_setup(&s, cfg)?;
            hot_gas_summary(&run_xpm(&p, cfg)?, &geo)
        }
        Preset::Fig2 | Preset::PhaseShift | Preset::Custom => xpm_summary(&run_xpm(&s, cfg)?),
    })
}

pub fn hot_gas_summary(r: &XpmReport, g: &PulseGeometry) -> Table {
    let mut t = xpm_summary(r);
    for c in ["pulse_duration_us", "length_mm", "signal_amplitude_V_per_m"] {
        t.columns.push(c.into());
    }
    for row in &mut t.rows {
        row.extend([num(g.duration * 1e6), num(g.length * 1e3), num(g.amplitude)]);
    }
    t
}

/// Sweep over all points in parallel; rows keep the point order.
pub fn sweep(cfg: &RunConfig) -> Result<Table> {
    let points = sweep_points(cfg)?;
    let tables: Vec<Result<Table>> = points.par_iter().map(|(_, c)| summary(c)).collect();
    let mut out: Option<Table> = None;
    for ((labels, _), t) in points.iter().zip(tables) {
        let t = t?;
        let o = out.get_or_insert_with(|| {
            let mut cols: Vec<String> = cfg.sweep.iter().map(|a| a.parameter.clone()).collect();
            cols.extend(t.columns.iter().cloned());
            Table {
                columns: cols,
                rows: Vec::new(),
            }
        });
        for row in t.rows {
            let mut r = labels.clone();
            r.extend(row);
            o.rows.push(r);
        }
    }
    Ok(out.unwrap_or_else(|| Table::new(["empty"])))
}
