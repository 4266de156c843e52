//! Physical constants (CODATA 2018) and conversions between the ordinary-frequency
//! values used in configs and the angular frequencies used internally.

use std::f64::consts::PI;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;

/// Atomic unit of dipole moment, e·a0.
pub const ATOMIC_DIPOLE: f64 = ELEMENTARY_CHARGE * BOHR_RADIUS;

/// Ordinary frequency in MHz to angular frequency in rad/s.
#[inline]
pub fn mhz(f: f64) -> f64 {
    2.0 * PI * f * 1e6
}

/// Angular frequency in rad/s to ordinary frequency in MHz.
#[inline]
pub fn to_mhz(w: f64) -> f64 {
    w / (2.0 * PI * 1e6)
}

#[inline]
pub fn khz(f: f64) -> f64 {
    2.0 * PI * f * 1e3
}

/// Intensity I = c ε0 |E|² (W/m²) of a field with amplitude `e` (V/m).
#[inline]
pub fn intensity(e: f64) -> f64 {
    SPEED_OF_LIGHT * EPSILON_0 * e * e
}

/// W/m² to W/cm².
#[inline]
pub fn per_m2_to_per_cm2(x: f64) -> f64 {
    x * 1e-4
}

/// m²/W to cm²/W.
#[inline]
pub fn m2_to_cm2(x: f64) -> f64 {
    x * 1e4
}
