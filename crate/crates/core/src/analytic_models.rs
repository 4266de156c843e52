//! Closed-form susceptibilities and the order-truncated amplitude integration.
//!
//! The closed-form tier gives n1 = 1 + η1(δ1 − χI2) and n2 = 1 + η2(δ2 − χI2) − η1χI1.
//! The perturbative tier integrates iψ' = Hψ for the 7-level matrix with every amplitude
//! split into signal-field orders, ψ = Σ ψ⁽ⁿ⁾, so that
//! iψ⁽ⁿ⁾' = H0 ψ⁽ⁿ⁾ + V ψ⁽ⁿ⁻¹⁾ with V the signal couplings.

use num_complex::Complex64;

use crate::error::{DeitError, Result};
use crate::ode::{Dopri5, Tolerances};
use crate::scheme_builder::{Field, SchemeHamiltonian};
use crate::units::{ATOMIC_DIPOLE, EPSILON_0, HBAR, SPEED_OF_LIGHT};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    /// Number density, m⁻³.
    pub density: f64,
    pub p1: f64,
    pub p2: f64,
    pub d41: f64,
    pub d42: f64,
    pub d53: f64,
    pub omega_p: Complex64,
    pub gamma: f64,
    /// Detuning of field 2 from |3⟩ ↔ |5⟩, rad/s.
    pub big_delta: f64,
}

impl MediumParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p1 >= 0.0 && self.p2 >= 0.0 && self.p1 + self.p2 <= 1.0 + 1e-12) {
            return Err(DeitError::InvalidMedium(format!(
                "populations must be nonnegative with p1 + p2 <= 1 (p1 = {}, p2 = {})",
                self.p1, self.p2
            )));
        }
        if !(self.density > 0.0) {
            return Err(DeitError::InvalidMedium(format!(
                "density must be positive, got {}",
                self.density
            )));
        }
        Ok(())
    }
}

/// η_i = ρ̄ p_i |d_4i|² / (2ħε0|Ωp|²), seconds (index change per rad/s of detuning).
pub fn eta(i: usize, m: &MediumParams) -> Result<f64> {
    m.validate()?;
    let op2 = m.omega_p.norm_sqr();
    if op2 == 0.0 {
        return Err(DeitError::InvalidMedium(
            "pump Rabi frequency is zero".into(),
        ));
    }
    let (p, d) = match i {
        1 => (m.p1, m.d41),
        2 => (m.p2, m.d42),
        _ => return Err(DeitError::InvalidMedium(format!("no signal field {i}"))),
    };
    Ok(m.density * p * d * d / (2.0 * HBAR * EPSILON_0 * op2))
}

/// ΔE3 = ħ|Ω2′|²/Δ, joules.
pub fn ac_stark_shift(omega2_5: Complex64, delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Err(DeitError::Singularity(
            "AC Stark shift at zero detuning".into(),
        ));
    }
    Ok(HBAR * omega2_5.norm_sqr() / delta)
}

/// χ = |d53/ħ|²/(cε0Δ), so that χI2 = |Ω2′|²/Δ.
pub fn kerr_chi(d53: f64, delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Err(DeitError::Singularity(
            "Kerr coefficient at zero detuning".into(),
        ));
    }
    Ok((d53 / HBAR).powi(2) / (SPEED_OF_LIGHT * EPSILON_0 * delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatBranch {
    /// Third-order result for a resonant pump; requires δp = 0.
    Rigorous,
    /// Stark-shifted dispersion n_i = 1 + η_i(δ_i − δp − χI2); any δp.
    Phenomenological,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefractiveResult {
    pub n1: Complex64,
    pub n2: Complex64,
    /// m²/W, coefficient of the partner intensity.
    pub xpm_coeff: f64,
    /// m²/W, coefficient of field 2's own intensity in n2.
    pub spm_coeff: f64,
}

pub fn sat_indices(
    m: &MediumParams,
    branch: SatBranch,
    delta1: f64,
    delta2: f64,
    delta_p: f64,
    i1: f64,
    i2: f64,
) -> Result<RefractiveResult> {
    let e1 = eta(1, m)?;
    let e2 = eta(2, m)?;
    let chi = kerr_chi(m.d53, m.big_delta)?;
    match branch {
        SatBranch::Rigorous => {
            if delta_p != 0.0 {
                return Err(DeitError::Mode(format!(
                    "rigorous closed form assumes a resonant pump, got δp = {delta_p} rad/s"
                )));
            }
            Ok(RefractiveResult {
                n1: (1.0 + e1 * (delta1 - chi * i2)).into(),
                n2: (1.0 + e2 * (delta2 - chi * i2) - e1 * chi * i1).into(),
                xpm_coeff: e1 * chi,
                spm_coeff: e2 * chi,
            })
        }
        SatBranch::Phenomenological => Ok(RefractiveResult {
            n1: (1.0 + e1 * (delta1 - delta_p - chi * i2)).into(),
            n2: (1.0 + e2 * (delta2 - delta_p - chi * i2)).into(),
            xpm_coeff: e1 * chi,
            spm_coeff: e2 * chi,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XpmPhase {
    pub phase: f64,
    pub attenuation_on: f64,
    pub attenuation_off: f64,
}

/// φ = (ω/c)L Re(n_on − n_off); attenuation 1 − exp(−2(ω/c)L Im n).
pub fn xpm_phase(n_on: Complex64, n_off: Complex64, length: f64, omega: f64) -> Result<XpmPhase> {
    if !(length > 0.0) {
        return Err(DeitError::Domain(format!(
            "propagation length must be positive, got {length}"
        )));
    }
    let k = omega / SPEED_OF_LIGHT;
    let att = |n: Complex64| 1.0 - (-2.0 * k * length * n.im).exp();
    Ok(XpmPhase {
        phase: k * length * (n_on - n_off).re,
        attenuation_on: att(n_on),
        attenuation_off: att(n_off),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EitEta {
    /// η̃1 = η1|Ωp|²/(|Ωp|² − δ1(δ1 + iγ/2))
    pub value: Complex64,
    /// η1 + iτδ1
    pub linear: Complex64,
    /// τ = η1γ/(2|Ωp|²)
    pub tau: f64,
}

pub fn eit_eta_with_decay(m: &MediumParams, delta1: f64) -> Result<EitEta> {
    let e1 = eta(1, m)?;
    let op2 = m.omega_p.norm_sqr();
    let den = Complex64::new(1.0, 0.0) - delta1 * Complex64::new(delta1, m.gamma / 2.0) / op2;
    if den.norm() <= 1e-12 {
        return Err(DeitError::Singularity(format!(
            "dressed-state pole at δ1 = {delta1} rad/s"
        )));
    }
    let tau = e1 * m.gamma / (2.0 * op2);
    Ok(EitEta {
        value: e1 / den,
        linear: Complex64::new(e1, tau * delta1),
        tau,
    })
}

/// Cross dipole of the closed-form tier: the modulus change of the dipole component
/// radiating into `field` when the partner turns on, in units of e·a0.
pub fn sat_cross_dipole(
    n_on: Complex64,
    n_off: Complex64,
    amplitude: Complex64,
    density: f64,
) -> f64 {
    let p = |n: Complex64| 2.0 * EPSILON_0 * amplitude * (n - 1.0) / density;
    (p(n_on).norm() - p(n_off).norm()) / ATOMIC_DIPOLE
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EatConfig {
    /// Highest signal-field order kept; `None` integrates the untruncated equation.
    pub order: Option<usize>,
    pub tol: Tolerances,
}

impl Default for EatConfig {
    fn default() -> Self {
        EatConfig {
            order: Some(3),
            tol: Tolerances {
                rtol: 1e-10,
                atol: 1e-14,
            },
        }
    }
}

type Sparse = Vec<(usize, usize, Complex64)>;

fn sparse(m: &nalgebra::DMatrix<Complex64>) -> Sparse {
    let mut out = Vec::new();
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if m[(r, c)] != ZERO {
                out.push((r, c, m[(r, c)]));
            }
        }
    }
    out
}

/// Amplitudes split by signal order: `[order][state]`.
pub type OrderedAmplitudes = Vec<Vec<Complex64>>;

/// Integrates from basis state `initial` and records the ordered amplitudes at each
/// time in `times` (ascending, starting at or after 0).
pub fn eat_series(
    scheme: &SchemeHamiltonian,
    initial: usize,
    times: &[f64],
    cfg: &EatConfig,
    keep_going: &mut dyn FnMut(f64) -> bool,
) -> Result<Vec<OrderedAmplitudes>> {
    let n = scheme.dim;
    if initial >= n {
        return Err(DeitError::Dimension {
            expected: n,
            got: initial,
        });
    }
    let (blocks, h0, v) = match cfg.order {
        Some(order) => {
            let v = scheme.signal_part();
            let h0 = &scheme.matrix - &v;
            (order + 1, sparse(&h0), sparse(&v))
        }
        None => (1, sparse(&scheme.matrix), Vec::new()),
    };
    let mut rhs = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        dy.iter_mut().for_each(|x| *x = ZERO);
        for b in 0..blocks {
            let off = b * n;
            for &(r, c, h) in &h0 {
                dy[off + r] += h * y[off + c];
            }
            if b > 0 {
                let prev = off - n;
                for &(r, c, h) in &v {
                    dy[off + r] += h * y[prev + c];
                }
            }
        }
        for x in dy.iter_mut() {
            *x = Complex64::new(x.im, -x.re);
        }
    };
    let mut y = vec![ZERO; blocks * n];
    y[initial] = Complex64::new(1.0, 0.0);
    let mut stepper = Dopri5::new(y.len(), cfg.tol);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &ts in times {
        stepper.advance(&mut rhs, &mut t, &mut y, ts, keep_going)?;
        out.push(
            (0..blocks)
                .map(|b| y[b * n..(b + 1) * n].to_vec())
                .collect(),
        );
    }
    Ok(out)
}

/// Summed amplitudes at time `t`.
pub fn eat_amplitudes(
    scheme: &SchemeHamiltonian,
    initial: usize,
    t: f64,
    cfg: &EatConfig,
) -> Result<Vec<Complex64>> {
    let s = eat_series(scheme, initial, &[t], cfg, &mut |_| true)?;
    let mut sum = vec![ZERO; scheme.dim];
    for block in &s[0] {
        for (a, b) in sum.iter_mut().zip(block) {
            *a += b;
        }
    }
    Ok(sum)
}

/// ρ_eg = Σ_{a+b≤N} c_e⁽ᵃ⁾ c_g⁽ᵇ⁾*.
pub fn truncated_coherence(
    amps: &OrderedAmplitudes,
    upper: usize,
    lower: usize,
    order: Option<usize>,
) -> Complex64 {
    let blocks = amps.len();
    let max = order.unwrap_or(usize::MAX);
    let mut acc = ZERO;
    for a in 0..blocks {
        for b in 0..blocks {
            if a + b <= max {
                acc += amps[a][upper] * amps[b][lower].conj();
            }
        }
    }
    acc
}

/// Which transitions count as radiating into a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionMode {
    /// Only transitions between the seven scheme states.
    #[default]
    Scheme,
    /// Every transition the laser drives.
    All,
}

/// Dipole component radiating into one field: P = Σ w·ρ_upper,lower.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleProjection {
    pub field: Field,
    /// Field amplitude E (V/m).
    pub amplitude: Complex64,
    /// (upper, lower, weight in C·m); the weight is the dipole in the scheme's coupling convention.
    pub terms: Vec<(usize, usize, f64)>,
}

impl DipoleProjection {
    pub fn from_scheme(
        scheme: &SchemeHamiltonian,
        field: Field,
        amplitude: Complex64,
        mode: ProjectionMode,
    ) -> Result<Self> {
        if amplitude == ZERO {
            return Err(DeitError::InvalidMedium(format!(
                "{field} has zero amplitude; nothing to project"
            )));
        }
        let in_scheme: Vec<usize> = crate::atomic_structure::Role::SCHEME
            .iter()
            .filter_map(|r| scheme.roles.get(r).copied())
            .collect();
        let terms = scheme
            .couplings
            .iter()
            .filter(|c| c.field == field)
            .filter(|c| {
                mode == ProjectionMode::All
                    || (in_scheme.contains(&c.upper) && in_scheme.contains(&c.lower))
            })
            .map(|c| {
                let w = (-c.rabi * HBAR / amplitude).re;
                (c.upper, c.lower, w)
            })
            .collect();
        Ok(DipoleProjection {
            field,
            amplitude,
            terms,
        })
    }

    pub fn evaluate(&self, coherence: impl Fn(usize, usize) -> Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|&(u, l, w)| coherence(u, l) * w)
            .sum()
    }
}

/// Dipole components for one field with the partner on and off, on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSeries {
    pub field: Field,
    pub times: Vec<f64>,
    pub p_on: Vec<Complex64>,
    pub p_off: Vec<Complex64>,
    pub amplitude: Complex64,
}

impl FieldSeries {
    /// Dimensionless cross dipole (|P_on| − |P_off|)/(e a0).
    pub fn d_xpm(&self) -> Vec<f64> {
        self.p_on
            .iter()
            .zip(&self.p_off)
            .map(|(a, b)| (a.norm() - b.norm()) / ATOMIC_DIPOLE)
            .collect()
    }

    /// n − 1 from linear response, n − 1 = ρ̄P/(2ε0E).
    pub fn index_shift(&self, p: &[Complex64], density: f64) -> Vec<Complex64> {
        p.iter()
            .map(|x| density * x / (2.0 * EPSILON_0 * self.amplitude))
            .collect()
    }
}

/// Mixture-averaged dipole series for one field from the perturbative tier.
pub fn eat_cross_dipole(
    scheme_on: &SchemeHamiltonian,
    scheme_off: &SchemeHamiltonian,
    mixture: &[(usize, f64)],
    times: &[f64],
    field: Field,
    amplitude: Complex64,
    mode: ProjectionMode,
    cfg: &EatConfig,
) -> Result<FieldSeries> {
    let proj = DipoleProjection::from_scheme(scheme_on, field, amplitude, mode)?;
    let run = |scheme: &SchemeHamiltonian| -> Result<Vec<Complex64>> {
        let mut acc = vec![ZERO; times.len()];
        for &(init, p) in mixture {
            if p == 0.0 {
                continue;
            }
            let s = eat_series(scheme, init, times, cfg, &mut |_| true)?;
            for (k, amps) in s.iter().enumerate() {
                acc[k] += p * proj.evaluate(|u, l| truncated_coherence(amps, u, l, cfg.order));
            }
        }
        Ok(acc)
    };
    Ok(FieldSeries {
        field,
        times: times.to_vec(),
        p_on: run(scheme_on)?,
        p_off: run(scheme_off)?,
        amplitude,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyValue<T> {
    pub value: T,
    /// |mean(first half) − mean(second half)| / |mean| over the averaging window.
    pub drift: f64,
}

/// Mean over samples with t ≥ (1 − fraction)·t_last.
pub fn steady_mean(times: &[f64], values: &[Complex64], fraction: f64) -> SteadyValue<Complex64> {
    let t_last = *times.last().unwrap_or(&0.0);
    let start = (1.0 - fraction) * t_last;
    let idx: Vec<usize> = (0..times.len()).filter(|&k| times[k] >= start).collect();
    let mean = |ix: &[usize]| -> Complex64 {
        if ix.is_empty() {
            return ZERO;
        }
        ix.iter().map(|&k| values[k]).sum::<Complex64>() / ix.len() as f64
    };
    let all = mean(&idx);
    let (a, b) = idx.split_at(idx.len() / 2);
    let drift = if all.norm() > 0.0 {
        (mean(a) - mean(b)).norm() / all.norm()
    } else {
        0.0
    };
    SteadyValue { value: all, drift }
}

/// Steady-state XPM result for one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldXpm {
    pub field: Field,
    pub phase: f64,
    pub attenuation_on: f64,
    pub attenuation_off: f64,
    /// φ/((ω/c)L·I_partner), m²/W.
    pub coefficient: f64,
    pub d_xpm: f64,
    pub drift: f64,
    pub n_on: Complex64,
    pub n_off: Complex64,
}

pub struct XpmGeometry {
    pub density: f64,
    pub length: f64,
    pub omega: f64,
    pub partner_intensity: f64,
    /// Fraction of the time window averaged for the steady state.
    pub window: f64,
}

pub fn field_xpm(series: &FieldSeries, g: &XpmGeometry) -> Result<FieldXpm> {
    let n_on = series.index_shift(&series.p_on, g.density);
    let n_off = series.index_shift(&series.p_off, g.density);
    let s_on = steady_mean(&series.times, &n_on, g.window);
    let s_off = steady_mean(&series.times, &n_off, g.window);
    let diff: Vec<Complex64> = n_on.iter().zip(&n_off).map(|(a, b)| a - b).collect();
    let s_diff = steady_mean(&series.times, &diff, g.window);
    let on = Complex64::new(1.0, 0.0) + s_on.value;
    let off = Complex64::new(1.0, 0.0) + s_off.value;
    let ph = xpm_phase(on, off, g.length, g.omega)?;
    let k = g.omega / SPEED_OF_LIGHT;
    let dx = series.d_xpm();
    let dx_c: Vec<Complex64> = dx.iter().map(|&x| x.into()).collect();
    let d_ss = steady_mean(&series.times, &dx_c, g.window);
    Ok(FieldXpm {
        field: series.field,
        phase: ph.phase,
        attenuation_on: ph.attenuation_on,
        attenuation_off: ph.attenuation_off,
        coefficient: if g.partner_intensity > 0.0 {
            ph.phase / (k * g.length * g.partner_intensity)
        } else {
            0.0
        },
        d_xpm: d_ss.value.re,
        drift: s_diff.drift,
        n_on: on,
        n_off: off,
    })
}
