//! Adaptive Dormand-Prince 5(4) integrator for complex state vectors.

use num_complex::Complex64;

use crate::error::{DeitError, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-8,
            atol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Stateful stepper: keeps the last accepted step size between calls to [`Dopri5::advance`],
/// so integrating over a sampling grid costs the same as one long call.
pub struct Dopri5 {
    pub tol: Tolerances,
    pub max_steps: usize,
    pub h_max: f64,
    h: Option<f64>,
    pub stats: Stats,
    k: [Vec<Complex64>; 7],
    tmp: Vec<Complex64>,
    fsal_valid: bool,
}

impl Dopri5 {
    pub fn new(n: usize, tol: Tolerances) -> Self {
        let z = || vec![Complex64::new(0.0, 0.0); n];
        Dopri5 {
            tol,
            max_steps: 50_000_000,
            h_max: f64::INFINITY,
            h: None,
            stats: Stats::default(),
            k: [z(), z(), z(), z(), z(), z(), z()],
            tmp: z(),
            fsal_valid: false,
        }
    }

    pub fn with_initial_step(mut self, h: f64) -> Self {
        self.h = Some(h);
        self
    }

    fn initial_step<F>(&mut self, rhs: &mut F, t: f64, y: &[Complex64], span: f64) -> f64
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        // Hairer-Wanner starting step heuristic
        let n = y.len() as f64;
        rhs(t, y, &mut self.k[0]);
        self.stats.evaluations += 1;
        let sc = |v: &Complex64| self.tol.atol + self.tol.rtol * v.norm();
        let d0 = (y.iter().map(|v| (v.norm() / sc(v)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (y
            .iter()
            .zip(&self.k[0])
            .map(|(v, f)| (f.norm() / sc(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6 * span
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(span);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k[0][i] * h0;
        }
        rhs(t + h0, &self.tmp, &mut self.k[1]);
        self.stats.evaluations += 1;
        let d2 = (y
            .iter()
            .zip(self.k[1].iter().zip(&self.k[0]))
            .map(|(v, (a, b))| ((a - b).norm() / sc(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6 * span)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        self.fsal_valid = true;
        (100.0 * h0).min(h1).min(span)
    }

    /// Integrates `y` from `t` to `t_end` in place. `keep_going` is polled after every
    /// accepted step; returning false aborts with [`DeitError::Cancelled`].
    pub fn advance<F>(
        &mut self,
        rhs: &mut F,
        t: &mut f64,
        y: &mut [Complex64],
        t_end: f64,
        keep_going: &mut dyn FnMut(f64) -> bool,
    ) -> Result<()>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let n = y.len();
        let span = t_end - *t;
        if span <= 0.0 {
            return Ok(());
        }
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(rhs, *t, y, span),
        };
        if !self.fsal_valid {
            rhs(*t, y, &mut self.k[0]);
            self.stats.evaluations += 1;
            self.fsal_valid = true;
        }
        let mut ynew = vec![Complex64::new(0.0, 0.0); n];
        let mut steps = 0usize;
        loop {
            let remaining = t_end - *t;
            if remaining <= 1e-15 * t_end.abs().max(1e-300) {
                break;
            }
            let last = h >= remaining;
            let hs = if last { remaining } else { h.min(self.h_max) };
            if hs <= 1e-14 * t.abs().max(1e-300) || !hs.is_finite() {
                return Err(DeitError::Integration {
                    t: *t,
                    step: hs,
                    steps: self.stats.accepted,
                    reason: "step size underflow".into(),
                });
            }
            steps += 1;
            if steps > self.max_steps {
                return Err(DeitError::Integration {
                    t: *t,
                    step: hs,
                    steps: self.stats.accepted,
                    reason: format!("exceeded {} steps", self.max_steps),
                });
            }

            let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
            let tmp = &mut self.tmp;
            for i in 0..n {
                tmp[i] = y[i] + k1[i] * (hs * A21);
            }
            rhs(*t + C2 * hs, tmp, k2);
            for i in 0..n {
                tmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * hs;
            }
            rhs(*t + C3 * hs, tmp, k3);
            for i in 0..n {
                tmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * hs;
            }
            rhs(*t + C4 * hs, tmp, k4);
            for i in 0..n {
                tmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * hs;
            }
            rhs(*t + C5 * hs, tmp, k5);
            for i in 0..n {
                tmp[i] = y[i]
                    + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * hs;
            }
            rhs(*t + hs, tmp, k6);
            for i in 0..n {
                ynew[i] = y[i]
                    + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * hs;
            }
            rhs(*t + hs, &ynew, k7);
            self.stats.evaluations += 6;

            let mut err2 = 0.0;
            for i in 0..n {
                let e =
                    (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                        * hs;
                let sc = self.tol.atol + self.tol.rtol * y[i].norm().max(ynew[i].norm());
                err2 += (e.norm() / sc).powi(2);
            }
            let err = (err2 / n as f64).sqrt();
            if !err.is_finite() {
                return Err(DeitError::Integration {
                    t: *t,
                    step: hs,
                    steps: self.stats.accepted,
                    reason: "non-finite error estimate".into(),
                });
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                *t = if last { t_end } else { *t + hs };
                y.copy_from_slice(&ynew);
                std::mem::swap(k1, k7);
                self.stats.accepted += 1;
                if !last || fac < 1.0 {
                    h = hs * fac;
                } else {
                    h = h.max(hs * fac);
                }
                if !keep_going(*t) {
                    self.h = Some(h);
                    return Err(DeitError::Cancelled);
                }
            } else {
                self.stats.rejected += 1;
                h = hs * fac.min(1.0);
            }
        }
        self.h = Some(h);
        Ok(())
    }
}

/// One-shot integration from `t0` to `t1`.
pub fn integrate<F>(
    mut rhs: F,
    t0: f64,
    y: &mut [Complex64],
    t1: f64,
    tol: Tolerances,
) -> Result<Stats>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let mut s = Dopri5::new(y.len(), tol);
    let mut t = t0;
    s.advance(&mut rhs, &mut t, y, t1, &mut |_| true)?;
    Ok(s.stats)
}
