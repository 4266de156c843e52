//! Gaussian slow-light pulses: closed-form envelope, group velocity, the
//! transparency and Doppler windows, and the single-photon phase estimate.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{DeitError, Result};
use crate::units::{EPSILON_0, HBAR, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    /// Minimum 1/e intensity waist, m.
    pub w0: f64,
    /// Duration T, s.
    pub duration: f64,
    pub wavelength: f64,
    pub photon_number: f64,
}

impl PulseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.w0 > 0.0
            && self.duration > 0.0
            && self.wavelength > 0.0
            && self.photon_number > 0.0)
        {
            return Err(DeitError::Domain(format!(
                "pulse parameters must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn k(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn omega(&self) -> f64 {
        SPEED_OF_LIGHT * self.k()
    }

    pub fn rayleigh_length(&self) -> f64 {
        self.k() * self.w0 * self.w0
    }
}

/// Peak single-photon amplitude √(ħω / (√(2π³) ε0 c T w0²)), V/m.
pub fn e_max(p: &PulseSpec) -> f64 {
    (HBAR * p.omega()
        / ((2.0 * PI.powi(3)).sqrt() * EPSILON_0 * SPEED_OF_LIGHT * p.duration * p.w0 * p.w0))
        .sqrt()
}

/// Slowly varying envelope at (x, y, z, t) in a medium with absorption slope `tau` and group
/// velocity `v_gr`. Scaled by √N for N photons.
pub fn gaussian_field(
    p: &PulseSpec,
    tau: f64,
    v_gr: f64,
    x: f64,
    y: f64,
    z: f64,
    t: f64,
) -> Result<Complex64> {
    p.validate()?;
    let k = p.k();
    let xi2 = p.duration * p.duration + 4.0 * k * z * tau;
    if !(xi2 > 0.0) {
        return Err(DeitError::Domain(format!(
            "T² + 4kzτ = {xi2:e} is not positive at z = {z:e} m"
        )));
    }
    if !(v_gr > 0.0) {
        return Err(DeitError::Domain(format!(
            "group velocity {v_gr} must be positive"
        )));
    }
    let xi = xi2.sqrt();
    let theta = Complex64::new(p.w0 * p.w0, z / k);
    let lag = z / v_gr - t;
    let arg = -Complex64::from(x * x + y * y) / (2.0 * theta) - lag * lag / xi2;
    Ok(e_max(p) * p.photon_number.sqrt() * (p.w0 * p.w0 / theta) * (p.duration / xi) * arg.exp())
}

/// v_g = c / (1 + ω η) from n = 1 + η δ.
pub fn group_velocity(eta: f64, omega: f64) -> Result<f64> {
    if !(eta >= 0.0) {
        return Err(DeitError::Domain(format!(
            "dispersion slope {eta} must be nonnegative"
        )));
    }
    Ok(SPEED_OF_LIGHT / (1.0 + omega * eta))
}

/// Relative group-velocity mismatch max/min − 1.
pub fn velocity_mismatch(v1: f64, v2: f64) -> f64 {
    v1.max(v2) / v1.min(v2) - 1.0
}

/// min{Ω, Ω²/γ} for the pump coupling Ω.
pub fn transparency_window(omega_p: f64, gamma: f64) -> f64 {
    let o = omega_p.abs();
    if gamma <= 0.0 {
        return o;
    }
    o.min(o * o / gamma)
}

/// Ω²/Δ_D, the motion-narrowed window.
pub fn doppler_window(omega_p: f64, doppler: f64) -> Result<f64> {
    if !(doppler > 0.0) {
        return Err(DeitError::Domain(format!(
            "Doppler width {doppler} must be positive"
        )));
    }
    Ok(omega_p * omega_p / doppler)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseTiming {
    pub duration: f64,
    /// Interaction length 2 z_R.
    pub length: f64,
}

/// T = 2√(τ k z_R): the envelope broadens by at most √2 over one Rayleigh length.
pub fn min_pulse_duration(tau: f64, k: f64, z_r: f64) -> Result<PulseTiming> {
    if !(tau >= 0.0 && k > 0.0 && z_r > 0.0) {
        return Err(DeitError::Domain("τ, k and z_R must be positive".into()));
    }
    Ok(PulseTiming {
        duration: 2.0 * (tau * k * z_r).sqrt(),
        length: 2.0 * z_r,
    })
}

/// 3√6 / 4π.
pub fn max_phase_coefficient() -> f64 {
    3.0 * 6f64.sqrt() / (4.0 * PI)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxPhase {
    /// Signed estimate (negative for positive Δ).
    pub phase: f64,
    pub magnitude: f64,
    pub warnings: Vec<String>,
}

/// −(3√6/4π)(λ/w0)(γ/Δ)√(ρ̄k⁻³), with warnings outside the estimate's validity range.
pub fn max_phase_shift(wavelength: f64, w0: f64, gamma: f64, delta: f64, density: f64) -> MaxPhase {
    let k = 2.0 * PI / wavelength;
    let ratio = wavelength / w0;
    let decay = gamma / delta;
    let packing = density / k.powi(3);
    let phase = -max_phase_coefficient() * ratio * decay * packing.sqrt();
    let mut warnings = Vec::new();
    if decay.abs() >= 0.5 {
        warnings.push(format!(
            "gamma/Delta = {decay:.3} is not small; decoherence dominates"
        ));
    }
    if ratio >= 1.0 {
        warnings.push(format!(
            "lambda/w0 = {ratio:.3} violates the diffraction limit"
        ));
    }
    if packing >= 1.0 {
        warnings.push(format!(
            "rho k^-3 = {packing:.3}; resonant dipole-dipole interaction is not negligible"
        ));
    }
    MaxPhase {
        phase,
        magnitude: phase.abs(),
        warnings,
    }
}

/// Dipole moment whose spontaneous emission rate is γ: d² = 3πε0ħγ/k³.
pub fn radiative_dipole(gamma: f64, k: f64) -> f64 {
    (3.0 * PI * EPSILON_0 * HBAR * gamma / k.powi(3)).sqrt()
}

/// Inputs of the step-by-step estimate: every quantity the closed form eliminates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineInputs {
    pub wavelength: f64,
    pub w0: f64,
    pub gamma: f64,
    pub delta: f64,
    pub density: f64,
    pub omega_p: f64,
    /// Signal and shift transition dipoles, C·m.
    pub d_signal: f64,
    pub d_shift: f64,
    pub population: f64,
}

impl PipelineInputs {
    /// All dipoles radiative, full population, the given pump.
    pub fn radiative(
        wavelength: f64,
        w0: f64,
        gamma: f64,
        delta: f64,
        density: f64,
        omega_p: f64,
    ) -> Self {
        let d = radiative_dipole(gamma, 2.0 * PI / wavelength);
        PipelineInputs {
            wavelength,
            w0,
            gamma,
            delta,
            density,
            omega_p,
            d_signal: d,
            d_shift: d,
            population: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineResult {
    pub eta: f64,
    pub tau: f64,
    pub chi: f64,
    pub timing: PulseTiming,
    pub e_max: f64,
    pub phase: f64,
}

/// φ = L (ω/c) Δn with Δn = −η χ cε0 E_max², L = 2z_R and T at its minimum.
pub fn phase_pipeline(i: &PipelineInputs) -> Result<PipelineResult> {
    if i.delta == 0.0 {
        return Err(DeitError::Singularity("far detuning is zero".into()));
    }
    if i.omega_p == 0.0 {
        return Err(DeitError::InvalidMedium(
            "pump Rabi frequency is zero".into(),
        ));
    }
    let k = 2.0 * PI / i.wavelength;
    let omega = SPEED_OF_LIGHT * k;
    let eta = i.density * i.population * i.d_signal.powi(2)
        / (2.0 * HBAR * EPSILON_0 * i.omega_p.powi(2));
    let tau = eta * i.gamma / (2.0 * i.omega_p.powi(2));
    let chi = (i.d_shift / HBAR).powi(2) / (SPEED_OF_LIGHT * EPSILON_0 * i.delta);
    let z_r = k * i.w0 * i.w0;
    let timing = min_pulse_duration(tau, k, z_r)?;
    let pulse = PulseSpec {
        w0: i.w0,
        duration: timing.duration,
        wavelength: i.wavelength,
        photon_number: 1.0,
    };
    let e = e_max(&pulse);
    let dn = -eta * chi * SPEED_OF_LIGHT * EPSILON_0 * e * e;
    Ok(PipelineResult {
        eta,
        tau,
        chi,
        timing,
        e_max: e,
        phase: timing.length * omega / SPEED_OF_LIGHT * dn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz;

    fn pulse() -> PulseSpec {
        PulseSpec {
            w0: 5.0 * 795e-9,
            duration: 1e-6,
            wavelength: 795e-9,
            photon_number: 1.0,
        }
    }

    #[test]
    fn e_max_scaling() {
        let p = pulse();
        let e = e_max(&p);
        let e_t = e_max(&PulseSpec {
            duration: 2.0 * p.duration,
            ..p
        });
        let e_w = e_max(&PulseSpec {
            w0: 2.0 * p.w0,
            ..p
        });
        assert!((e * e / (e_t * e_t) - 2.0).abs() < 1e-12);
        assert!((e * e / (e_w * e_w) - 4.0).abs() < 1e-12);
        // energy bookkeeping: ∫ cε0|E|² dA dt with 1/e² widths w0, T gives ħω up to the geometry factor
        let energy = SPEED_OF_LIGHT * EPSILON_0 * e * e * p.duration * PI * p.w0 * p.w0;
        let ratio = energy / (HBAR * p.omega());
        assert!((ratio - PI / (2.0 * PI.powi(3)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn field_at_origin_and_on_axis() {
        let p = pulse();
        let tau = 3e-13;
        let v = 1e3;
        let f0 = gaussian_field(&p, tau, v, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert!((f0 - e_max(&p)).norm() < 1e-12 * e_max(&p));
        let zr = p.rayleigh_length();
        let f = gaussian_field(&p, tau, v, 0.0, 0.0, zr, zr / v).unwrap();
        let theta = Complex64::new(p.w0 * p.w0, zr / p.k());
        let xi = (p.duration.powi(2) + 4.0 * p.k() * zr * tau).sqrt();
        let want = e_max(&p) * p.w0 * p.w0 / theta.norm() * p.duration / xi;
        assert!((f.norm() - want).abs() < 1e-12 * want);
        // no EIT broadening without τ: the temporal width stays T
        let lag = 0.7 * p.duration;
        let g = gaussian_field(&p, 0.0, v, 0.0, 0.0, 3.0 * zr, 3.0 * zr / v - lag).unwrap();
        let g0 = gaussian_field(&p, 0.0, v, 0.0, 0.0, 3.0 * zr, 3.0 * zr / v).unwrap();
        assert!(((g / g0).norm() - (-(lag / p.duration).powi(2)).exp()).abs() < 1e-12);
        assert!(gaussian_field(&p, -1.0, v, 0.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn group_velocity_limits() {
        let w = pulse().omega();
        assert_eq!(group_velocity(0.0, w).unwrap(), SPEED_OF_LIGHT);
        let a = group_velocity(1e-12, w).unwrap();
        let b = group_velocity(2e-12, w).unwrap();
        assert!(b < a && a < SPEED_OF_LIGHT);
        assert!(group_velocity(-1.0, w).is_err());
        assert!((velocity_mismatch(1.1, 1.0) - 0.1).abs() < 1e-12);
        assert_eq!(velocity_mismatch(2.0, 1.0), velocity_mismatch(1.0, 2.0));
    }

    #[test]
    fn windows() {
        let g = mhz(5.73);
        assert_eq!(transparency_window(mhz(1.0), g), mhz(1.0).powi(2) / g);
        assert!((transparency_window(g, g) - g).abs() < 1e-6);
        assert_eq!(transparency_window(10.0 * g, g), 10.0 * g);
        let cold = transparency_window(mhz(4.06), g);
        let hot = doppler_window(mhz(4.06), mhz(500.0)).unwrap();
        let drop = (cold / hot).log10();
        assert!((1.5..=2.5).contains(&drop), "{drop}");
        assert!(doppler_window(1.0, 0.0).is_err());
        assert!(
            doppler_window(mhz(2.0), mhz(500.0)).unwrap()
                > doppler_window(mhz(1.0), mhz(500.0)).unwrap()
        );
    }

    #[test]
    fn minimum_duration() {
        let (tau, k) = (2e-13, 7.9e6);
        let a = min_pulse_duration(tau, k, 1e-3).unwrap();
        let b = min_pulse_duration(tau, k, 4e-3).unwrap();
        assert!((b.duration / a.duration - 2.0).abs() < 1e-12);
        assert_eq!(a.length, 2e-3);
        assert_eq!(min_pulse_duration(0.0, k, 1e-3).unwrap().duration, 0.0);
        let xi = (a.duration.powi(2) + 4.0 * k * 1e-3 * tau).sqrt();
        assert!((xi / a.duration - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_estimate() {
        assert!((max_phase_coefficient() - 0.584_772_600_925_257_1).abs() < 1e-15);
        let lambda = 795e-9;
        let k = 2.0 * PI / lambda;
        let m = max_phase_shift(lambda, lambda, 0.17, 1.0, k.powi(3));
        assert!((m.magnitude - 0.17 * max_phase_coefficient()).abs() < 1e-12);
        assert!(m.phase < 0.0);
        assert_eq!(m.warnings.len(), 2);
        assert!(max_phase_shift(lambda, 5.0 * lambda, 0.1, 1.0, 1e18)
            .warnings
            .is_empty());
    }

    #[test]
    fn pipeline_reproduces_closed_form() {
        for (w0, delta, rho, op) in [
            (4e-6, mhz(60.0), 1e20, mhz(4.06)),
            (1e-5, mhz(-300.0), 3e19, mhz(10.0)),
        ] {
            let lambda = 794.978851156e-9;
            let gamma = mhz(5.746);
            let p = phase_pipeline(&PipelineInputs::radiative(
                lambda, w0, gamma, delta, rho, op,
            ))
            .unwrap();
            let closed = max_phase_shift(lambda, w0, gamma, delta, rho).phase;
            assert!(
                (p.phase / closed - 1.0).abs() < 1e-10,
                "{} {}",
                p.phase,
                closed
            );
        }
    }

    #[test]
    fn scale_invariance() {
        let a = max_phase_shift(795e-9, 4e-6, 1.0, 8.0, 1e20).phase;
        let s = 3.0;
        let b = max_phase_shift(s * 795e-9, s * 4e-6, 1.0, 8.0, 1e20 / s.powi(3)).phase;
        assert!((a / b - 1.0).abs() < 1e-12);
    }
}
