//! Lindblad evolution of the density matrix, dipole observables, the state
//! preparation sequence and the motional relaxation channels for warm gases.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::analytic_models::{DipoleProjection, FieldSeries, ProjectionMode};
use crate::atomic_structure::{
    branching_ratios, D1Structure, LevelLabel, LevelMap, Role, SpectroscopicConstants,
};
use crate::error::{DeitError, Result};
use crate::ode::{Dopri5, Tolerances};
use crate::scheme_builder::{DephasingChannel, Field, SchemeHamiltonian, TransitChannel};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub entries: DMatrix<Complex64>,
}

/// Worst-case invariant deviations of one or more density matrices.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InvariantReport {
    pub trace_error: f64,
    pub hermiticity: f64,
    /// Most negative eigenvalue (0 when all are nonnegative).
    pub min_eigenvalue: f64,
}

impl InvariantReport {
    pub fn merge(&mut self, o: &InvariantReport) {
        self.trace_error = self.trace_error.max(o.trace_error);
        self.hermiticity = self.hermiticity.max(o.hermiticity);
        self.min_eigenvalue = self.min_eigenvalue.min(o.min_eigenvalue);
    }
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn pure(dim: usize, state: usize) -> Self {
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        m[(state, state)] = Complex64::new(1.0, 0.0);
        DensityMatrix { entries: m }
    }

    /// |ψ⟩⟨ψ| for a normalized amplitude vector.
    pub fn from_amplitudes(psi: &[Complex64]) -> Self {
        let n = psi.len();
        DensityMatrix {
            entries: DMatrix::from_fn(n, n, |r, c| psi[r] * psi[c].conj()),
        }
    }

    pub fn diagonal(populations: &[f64]) -> Self {
        let n = populations.len();
        DensityMatrix {
            entries: DMatrix::from_fn(
                n,
                n,
                |r, c| if r == c { populations[r].into() } else { ZERO },
            ),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::diagonal(&vec![1.0 / dim as f64; dim])
    }

    /// Checks the state invariants with the given slack and returns the matrix.
    pub fn new(entries: DMatrix<Complex64>, slack: f64) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(DeitError::Dimension {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        let rho = DensityMatrix { entries };
        let r = rho.invariants();
        if r.trace_error > slack || r.hermiticity > slack || r.min_eigenvalue < -slack {
            return Err(DeitError::InvariantBreach {
                what: "initial density matrix".into(),
                magnitude: r.trace_error.max(r.hermiticity).max(-r.min_eigenvalue),
                t: 0.0,
            });
        }
        Ok(rho)
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }

    pub fn invariants(&self) -> InvariantReport {
        let m = &self.entries;
        let herm = (m - m.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let min_ev = sym
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        InvariantReport {
            trace_error: (self.trace() - 1.0).norm(),
            hermiticity: herm,
            min_eigenvalue: min_ev.min(0.0),
        }
    }

    fn from_slice(n: usize, y: &[Complex64]) -> Self {
        DensityMatrix {
            entries: DMatrix::from_column_slice(n, n, y),
        }
    }
}

/// Precomputed generator: effective non-Hermitian Hamiltonian in sparse form plus jump terms.
struct Generator {
    n: usize,
    heff: Vec<(usize, usize, Complex64)>,
    /// Population feeding: (to, from, rate) adds rate·ρ_from,from to ρ_to,to.
    feed: Vec<(usize, usize, f64)>,
    transit: Option<TransitChannel>,
}

impl Generator {
    fn new(scheme: &SchemeHamiltonian) -> Result<Self> {
        scheme.check_channels()?;
        let n = scheme.dim;
        let mut h = scheme.matrix.clone();
        let mut feed = Vec::new();
        for c in &scheme.decay_channels {
            h[(c.from, c.from)] -= Complex64::new(0.0, 0.5 * c.rate);
            if let Some(to) = c.to {
                feed.push((to, c.from, c.rate));
            }
        }
        // L = √(2r)|s⟩⟨s| damps coherences of s at r
        for d in &scheme.dephasing_channels {
            let k = 2.0 * d.rate;
            h[(d.state, d.state)] -= Complex64::new(0.0, 0.5 * k);
            feed.push((d.state, d.state, k));
        }
        let mut heff = Vec::new();
        for c in 0..n {
            for r in 0..n {
                if h[(r, c)] != ZERO {
                    heff.push((r, c, h[(r, c)]));
                }
            }
        }
        Ok(Generator {
            n,
            heff,
            feed,
            transit: scheme.transit.clone(),
        })
    }

    /// dρ = K + K† + Σ jumps + transit with K = −i·Heff·ρ. Column-major slices.
    fn apply(&self, y: &[Complex64], k: &mut [Complex64], dy: &mut [Complex64]) {
        let n = self.n;
        k.iter_mut().for_each(|x| *x = ZERO);
        for &(r, m, h) in &self.heff {
            let hi = Complex64::new(h.im, -h.re);
            for c in 0..n {
                k[r + c * n] += hi * y[m + c * n];
            }
        }
        for c in 0..n {
            for r in 0..n {
                dy[r + c * n] = k[r + c * n] + k[c + r * n].conj();
            }
        }
        for &(to, from, rate) in &self.feed {
            dy[to + to * n] += rate * y[from + from * n];
        }
        if let Some(t) = &self.transit {
            let tr: Complex64 = (0..n).map(|i| y[i + i * n]).sum();
            for (i, v) in y.iter().enumerate() {
                dy[i] -= t.rate * v;
            }
            for i in 0..n {
                dy[i + i * n] += t.rate * t.target[i] * tr;
            }
        }
    }
}

/// dρ/dt for the scheme's Hamiltonian and relaxation channels.
pub fn lindblad_rhs(rho: &DensityMatrix, scheme: &SchemeHamiltonian) -> Result<DMatrix<Complex64>> {
    if rho.dim() != scheme.dim {
        return Err(DeitError::Dimension {
            expected: scheme.dim,
            got: rho.dim(),
        });
    }
    let g = Generator::new(scheme)?;
    let n = scheme.dim;
    let mut k = vec![ZERO; n * n];
    let mut dy = vec![ZERO; n * n];
    g.apply(rho.entries.as_slice(), &mut k, &mut dy);
    Ok(DMatrix::from_column_slice(n, n, &dy))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub tol: Tolerances,
    /// Check invariants at every snapshot and fail beyond 10× the relative tolerance.
    pub check: bool,
    /// Keep the full matrices in the trajectory (populations are always recorded).
    pub keep_states: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            tol: Tolerances::default(),
            check: true,
            keep_states: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Named real series, one value per time.
    pub observables: BTreeMap<String, Vec<f64>>,
    pub invariants: InvariantReport,
}

/// Integrates the master equation, sampling at `times` (strictly increasing, ≥ 0).
/// `probe` is called with every snapshot.
pub fn evolve_with(
    rho0: &DensityMatrix,
    scheme: &SchemeHamiltonian,
    times: &[f64],
    opts: &EvolveOptions,
    probe: &mut dyn FnMut(f64, &DensityMatrix),
    keep_going: &mut dyn FnMut(f64) -> bool,
) -> Result<Trajectory> {
    let n = scheme.dim;
    if rho0.dim() != n {
        return Err(DeitError::Dimension {
            expected: n,
            got: rho0.dim(),
        });
    }
    if times.windows(2).any(|w| w[1] <= w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(DeitError::Config(
            "snapshot times must be nonnegative and strictly increasing".into(),
        ));
    }
    let g = Generator::new(scheme)?;
    let mut k = vec![ZERO; n * n];
    let mut rhs = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| g.apply(y, &mut k, dy);
    let mut y = rho0.entries.as_slice().to_vec();
    let mut stepper = Dopri5::new(n * n, opts.tol);
    let mut t = 0.0;
    let limit = 10.0 * opts.tol.rtol;
    // Effective Hamiltonians with built-in loss leak population by design.
    let closed = scheme.is_closed()
        && (&scheme.matrix - scheme.matrix.adjoint()).norm() < 1e-9 * (1.0 + scheme.matrix.norm());
    let mut traj = Trajectory::default();
    let mut pops: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len()); n];
    for &ts in times {
        stepper.advance(&mut rhs, &mut t, &mut y, ts, keep_going)?;
        let rho = DensityMatrix::from_slice(n, &y);
        if opts.check {
            let mut r = rho.invariants();
            if !closed {
                r.trace_error = 0.0;
            }
            let worst = [
                ("trace", r.trace_error),
                ("hermiticity", r.hermiticity),
                ("positivity", -r.min_eigenvalue),
            ]
            .into_iter()
            .find(|(_, v)| *v > limit);
            if let Some((what, magnitude)) = worst {
                return Err(DeitError::InvariantBreach {
                    what: what.into(),
                    magnitude,
                    t: ts,
                });
            }
            traj.invariants.merge(&r);
        }
        for (i, p) in pops.iter_mut().enumerate() {
            p.push(y[i + i * n].re);
        }
        probe(ts, &rho);
        traj.times.push(ts);
        if opts.keep_states {
            traj.states.push(rho);
        }
    }
    for (i, p) in pops.into_iter().enumerate() {
        let name = scheme
            .labels
            .get(i)
            .cloned()
            .unwrap_or_else(|| i.to_string());
        traj.observables.insert(format!("pop {name}"), p);
    }
    Ok(traj)
}

pub fn evolve(
    rho0: &DensityMatrix,
    scheme: &SchemeHamiltonian,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    evolve_with(rho0, scheme, times, opts, &mut |_, _| {}, &mut |_| true)
}

/// Dipole components P = Σ w·ρ_upper,lower for several projections along one trajectory.
pub fn dipole_series(
    rho0: &DensityMatrix,
    scheme: &SchemeHamiltonian,
    times: &[f64],
    projections: &[DipoleProjection],
    opts: &EvolveOptions,
    keep_going: &mut dyn FnMut(f64) -> bool,
) -> Result<(Vec<Vec<Complex64>>, Trajectory)> {
    let mut out = vec![Vec::with_capacity(times.len()); projections.len()];
    let opts = EvolveOptions {
        keep_states: false,
        ..*opts
    };
    let traj = evolve_with(
        rho0,
        scheme,
        times,
        &opts,
        &mut |_, rho| {
            for (p, acc) in projections.iter().zip(out.iter_mut()) {
                acc.push(p.evaluate(|u, l| rho.entries[(u, l)]));
            }
        },
        keep_going,
    )?;
    Ok((out, traj))
}

/// Cross dipole series for `field`: the same initial state evolved under `scheme_on` and
/// `scheme_off`, which differ only in the partner field.
pub fn cross_dipole_num(
    scheme_on: &SchemeHamiltonian,
    scheme_off: &SchemeHamiltonian,
    rho0: &DensityMatrix,
    times: &[f64],
    field: Field,
    amplitude: Complex64,
    mode: ProjectionMode,
    opts: &EvolveOptions,
) -> Result<FieldSeries> {
    let proj = DipoleProjection::from_scheme(scheme_on, field, amplitude, mode)?;
    let (on, _) = dipole_series(
        rho0,
        scheme_on,
        times,
        std::slice::from_ref(&proj),
        opts,
        &mut |_| true,
    )?;
    let (off, _) = dipole_series(
        rho0,
        scheme_off,
        times,
        std::slice::from_ref(&proj),
        opts,
        &mut |_| true,
    )?;
    Ok(FieldSeries {
        field,
        times: times.to_vec(),
        p_on: on.into_iter().next().unwrap(),
        p_off: off.into_iter().next().unwrap(),
        amplitude,
    })
}

/// Optical pumping into |4⟩ with recycling, followed by a Raman population swap.
#[derive(Debug, Clone, PartialEq)]
pub struct PrepConfig {
    /// Pump rate out of every recycled ground state into |4⟩, rad/s.
    pub pump_rate: f64,
    /// Length of one pump pulse; pulses repeat until converged.
    pub pump_duration: f64,
    pub max_pulses: usize,
    /// Ground states pumped back to |4⟩. Empty means every ground state except |1⟩ and |2⟩.
    pub repump_set: Vec<LevelLabel>,
    pub raman_efficiency: f64,
    /// Population allowed outside {|1⟩, |2⟩} when pumping stops.
    pub threshold: f64,
    /// Field (G) at which decay branching is evaluated.
    pub b: f64,
    /// Excited-state decay rate, rad/s.
    pub gamma: f64,
}

impl PrepConfig {
    pub fn new(raman_efficiency: f64, gamma: f64) -> Self {
        PrepConfig {
            pump_rate: gamma / 10.0,
            pump_duration: 2e-6,
            max_pulses: 50,
            repump_set: Vec::new(),
            raman_efficiency,
            threshold: 1e-4,
            b: 0.0,
            gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedMixture {
    /// Ground-state populations after pumping and the swap, by label.
    pub populations: Vec<(LevelLabel, f64)>,
    pub p1: f64,
    pub p2: f64,
    /// Populations before the Raman swap.
    pub pumped: (f64, f64),
    /// Pumping time used.
    pub duration: f64,
}

impl PreparedMixture {
    /// Diagonal ρ_mix over the states of `scheme`: |1⟩ and |2⟩ plus any other populated
    /// ground state the scheme contains.
    pub fn density_for(&self, scheme: &SchemeHamiltonian, map: &LevelMap) -> Result<DensityMatrix> {
        let mut p = vec![0.0; scheme.dim];
        for (label, pop) in &self.populations {
            let role = map.roles.iter().find(|(_, l)| *l == label).map(|(r, _)| *r);
            let idx = match role.and_then(|r| scheme.roles.get(&r).copied()) {
                Some(i) => Some(i),
                None => scheme
                    .labels
                    .iter()
                    .position(|s| s.starts_with(&label.to_string())),
            };
            match idx {
                Some(i) => p[i] += pop,
                None if *pop > 1e-12 => {
                    return Err(DeitError::Config(format!(
                        "prepared population in {label} has no state in the scheme"
                    )));
                }
                None => {}
            }
        }
        Ok(DensityMatrix::diagonal(&p))
    }
}

/// Simulates pump + repump rate equations until at most `threshold` of the population is
/// outside {|1⟩, |2⟩}, then swaps p1 and p2 with efficiency ε.
pub fn prepare_mixture(
    consts: &SpectroscopicConstants,
    map: &LevelMap,
    prep: &PrepConfig,
) -> Result<PreparedMixture> {
    if !(0.0..=1.0).contains(&prep.raman_efficiency) {
        return Err(DeitError::Config(format!(
            "raman efficiency {} outside [0, 1]",
            prep.raman_efficiency
        )));
    }
    if !(prep.pump_rate > 0.0 && prep.pump_duration > 0.0 && prep.gamma > 0.0) {
        return Err(DeitError::Config(
            "pump rate, pump duration and linewidth must be positive".into(),
        ));
    }
    let s = D1Structure::compute(consts, prep.b)?;
    let l1 = map.label(Role::One)?;
    let l2 = map.label(Role::Two)?;
    let excited = s.find(map.label(Role::Four)?)?;
    let branch = branching_ratios(consts, excited, &s.ground);
    let ground: Vec<LevelLabel> = s.ground.iter().map(|l| l.label()).collect();
    let ng = ground.len();
    let repump: Vec<bool> = ground
        .iter()
        .map(|l| {
            if prep.repump_set.is_empty() {
                *l != l1 && *l != l2
            } else {
                prep.repump_set.contains(l)
            }
        })
        .collect();
    let fraction: Vec<f64> = ground
        .iter()
        .map(|l| {
            branch
                .iter()
                .find(|(b, _)| b == l)
                .map(|(_, f)| *f)
                .unwrap_or(0.0)
        })
        .collect();
    let i1 = ground.iter().position(|l| *l == l1).unwrap();
    let i2 = ground.iter().position(|l| *l == l2).unwrap();

    // unknowns: ground populations then |4⟩; the first pump stage is taken as a complete
    // transfer of every atom to |4⟩, so recycling starts from there
    let mut y = vec![ZERO; ng + 1];
    y[ng] = Complex64::new(1.0, 0.0);
    let pumping = std::cell::Cell::new(true);
    let mut rhs = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let e = y[ng].re;
        let mut into = 0.0;
        for g in 0..ng {
            let out = if pumping.get() && repump[g] {
                prep.pump_rate * y[g].re
            } else {
                0.0
            };
            into += out;
            dy[g] = (prep.gamma * fraction[g] * e - out).into();
        }
        dy[ng] = (into - prep.gamma * e).into();
    };
    let tol = Tolerances {
        rtol: 1e-10,
        atol: 1e-14,
    };
    let mut t = 0.0;
    let mut converged = false;
    for _ in 0..prep.max_pulses {
        let mut st = Dopri5::new(ng + 1, tol);
        let end = t + prep.pump_duration;
        st.advance(&mut rhs, &mut t, &mut y, end, &mut |_| true)?;
        // let |4⟩ empty with the pump off before judging convergence
        pumping.set(false);
        let mut probe = y.clone();
        let mut tp = 0.0;
        let mut st = Dopri5::new(ng + 1, tol);
        st.advance(
            &mut rhs,
            &mut tp,
            &mut probe,
            40.0 / prep.gamma,
            &mut |_| true,
        )?;
        pumping.set(true);
        let outside: f64 = (0..=ng)
            .filter(|&i| i != i1 && i != i2)
            .map(|i| probe[i].re)
            .sum();
        if outside < prep.threshold {
            y = probe;
            converged = true;
            break;
        }
    }
    if !converged {
        let (trap, pop) = (0..ng)
            .filter(|&i| i != i1 && i != i2)
            .map(|i| (ground[i], y[i].re))
            .fold((ground[0], f64::NEG_INFINITY), |a, b| {
                if b.1 > a.1 {
                    b
                } else {
                    a
                }
            });
        return Err(DeitError::PrepTrap {
            trap: format!("{trap} holds {pop:.3e} after {:.3e} s of pumping", t),
        });
    }
    let (a, b) = (y[i1].re, y[i2].re);
    let eps = prep.raman_efficiency;
    let (p1, p2) = ((1.0 - eps) * a + eps * b, (1.0 - eps) * b + eps * a);
    let populations = (0..ng)
        .map(|i| {
            let p = if i == i1 {
                p1
            } else if i == i2 {
                p2
            } else {
                y[i].re
            };
            (ground[i], p)
        })
        .collect();
    Ok(PreparedMixture {
        populations,
        p1,
        p2,
        pumped: (a, b),
        duration: t,
    })
}

/// Adds ground-state dephasing at `dephasing_rate` on every ground state and relaxation
/// toward `target` populations at `transit_rate`. Zero rates leave the scheme unchanged.
pub fn add_motion_channels(
    scheme: &SchemeHamiltonian,
    dephasing_rate: f64,
    transit_rate: f64,
    target: &[f64],
) -> Result<SchemeHamiltonian> {
    if !(dephasing_rate >= 0.0 && transit_rate >= 0.0) {
        return Err(DeitError::Config("motion rates must be nonnegative".into()));
    }
    let mut out = scheme.clone();
    if dephasing_rate > 0.0 {
        for s in (0..scheme.dim).filter(|&i| !scheme.is_excited[i]) {
            out.dephasing_channels.push(DephasingChannel {
                state: s,
                rate: dephasing_rate,
            });
        }
    }
    if transit_rate > 0.0 {
        if target.len() != scheme.dim {
            return Err(DeitError::Dimension {
                expected: scheme.dim,
                got: target.len(),
            });
        }
        let tr: f64 = target.iter().sum();
        if (tr - 1.0).abs() > 1e-9 || target.iter().any(|&p| p < 0.0) {
            return Err(DeitError::Config(
                "transit target must be a probability distribution".into(),
            ));
        }
        out.transit = Some(TransitChannel {
            rate: transit_rate,
            target: target.to_vec(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic_structure::Manifold;
    use crate::scheme_builder::DecayChannel;

    fn bare(h: DMatrix<Complex64>, excited: Vec<bool>) -> SchemeHamiltonian {
        let n = h.nrows();
        SchemeHamiltonian {
            dim: n,
            matrix: h,
            couplings: Vec::new(),
            decay_channels: Vec::new(),
            dephasing_channels: Vec::new(),
            transit: None,
            frame_note: String::new(),
            labels: (0..n).map(|i| format!("s{i}")).collect(),
            is_excited: excited,
            roles: BTreeMap::new(),
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Vectorized generator from Kronecker products, vec(AρB) = (Bᵀ ⊗ A) vec(ρ).
    fn superoperator(s: &SchemeHamiltonian) -> DMatrix<Complex64> {
        let n = s.dim;
        let id = DMatrix::<Complex64>::identity(n, n);
        let ket_bra = |i: usize, j: usize| {
            let mut m = DMatrix::from_element(n, n, ZERO);
            m[(i, j)] = c(1.0, 0.0);
            m
        };
        let mut ops: Vec<DMatrix<Complex64>> = Vec::new();
        for d in &s.decay_channels {
            ops.push(ket_bra(d.to.unwrap(), d.from) * c(d.rate.sqrt(), 0.0));
        }
        for d in &s.dephasing_channels {
            ops.push(ket_bra(d.state, d.state) * c((2.0 * d.rate).sqrt(), 0.0));
        }
        let mi = c(0.0, -1.0);
        let h = &s.matrix;
        let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * mi;
        for op in &ops {
            let ll = op.adjoint() * op;
            l += op.conjugate().kronecker(op)
                - (id.kronecker(&ll) + ll.transpose().kronecker(&id)) * c(0.5, 0.0);
        }
        if let Some(t) = &s.transit {
            for i in 0..n {
                for j in 0..n {
                    // ρ_ii target·tr: column of ρ_jj feeds row of ρ_ii
                    l[(i + i * n, j + j * n)] += c(t.rate * t.target[i], 0.0);
                }
            }
            for k in 0..n * n {
                l[(k, k)] -= c(t.rate, 0.0);
            }
        }
        l
    }

    fn lambda(gamma: f64) -> SchemeHamiltonian {
        // ground 0, 1; excited 2
        let mut h = DMatrix::from_element(3, 3, ZERO);
        h[(0, 0)] = c(0.3 * gamma, 0.0);
        h[(2, 0)] = c(0.8 * gamma, 0.0);
        h[(0, 2)] = c(0.8 * gamma, 0.0);
        h[(2, 1)] = c(0.0, 1.3 * gamma);
        h[(1, 2)] = c(0.0, -1.3 * gamma);
        let mut s = bare(h, vec![false, false, true]);
        s.decay_channels = vec![
            DecayChannel {
                from: 2,
                to: Some(0),
                rate: 0.4 * gamma,
            },
            DecayChannel {
                from: 2,
                to: Some(1),
                rate: 0.6 * gamma,
            },
        ];
        s.dephasing_channels = vec![DephasingChannel {
            state: 0,
            rate: 0.05 * gamma,
        }];
        s
    }

    #[test]
    fn mixed_state_is_stationary_without_channels() {
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.0, 0.0),
            c(-2.0, 0.0),
            c(5.0, 0.0),
        ]));
        let s = bare(h, vec![false; 3]);
        let d = lindblad_rhs(&DensityMatrix::maximally_mixed(3), &s).unwrap();
        assert!(d.iter().all(|z| z.norm() == 0.0));
        let tr = evolve(
            &DensityMatrix::maximally_mixed(3),
            &s,
            &[1.0, 2.0],
            &EvolveOptions::default(),
        )
        .unwrap();
        assert_eq!(tr.states[1], DensityMatrix::maximally_mixed(3));
    }

    #[test]
    fn derivative_is_traceless_and_hermitian() {
        let s = lambda(1.0);
        let psi = [c(0.6, 0.1), c(0.2, -0.5), c(0.3, 0.4)];
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        let d = lindblad_rhs(&DensityMatrix::from_amplitudes(&psi), &s).unwrap();
        assert!(d.trace().norm() < 1e-15);
        assert!((&d - d.adjoint()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let s = lambda(1.0);
        assert!(matches!(
            lindblad_rhs(&DensityMatrix::pure(4, 0), &s),
            Err(DeitError::Dimension { .. })
        ));
    }

    #[test]
    fn two_level_decay_is_exponential() {
        let gamma = 3.7e7;
        let mut s = bare(DMatrix::from_element(2, 2, ZERO), vec![false, true]);
        s.decay_channels = vec![DecayChannel {
            from: 1,
            to: Some(0),
            rate: gamma,
        }];
        let times: Vec<f64> = (1..=20).map(|k| k as f64 * 0.25 / gamma).collect();
        let tol = Tolerances {
            rtol: 1e-10,
            atol: 1e-14,
        };
        let tr = evolve(
            &DensityMatrix::pure(2, 1),
            &s,
            &times,
            &EvolveOptions {
                tol,
                ..Default::default()
            },
        )
        .unwrap();
        for (t, rho) in times.iter().zip(&tr.states) {
            assert!((rho.entries[(1, 1)].re - (-gamma * t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn matches_superoperator_exponential() {
        let gamma = 1.0e7;
        for s in [lambda(gamma), {
            // four levels with transit and a second excited state
            let mut h = DMatrix::from_element(4, 4, ZERO);
            h[(1, 1)] = c(-0.7 * gamma, 0.0);
            h[(3, 3)] = c(2.0 * gamma, 0.0);
            for (a, b, v) in [
                (2, 0, c(0.5, 0.2)),
                (3, 1, c(-0.9, 0.0)),
                (2, 1, c(0.0, 0.3)),
            ] {
                h[(a, b)] = v * gamma;
                h[(b, a)] = v.conj() * gamma;
            }
            let mut s = bare(h, vec![false, false, true, true]);
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
                DecayChannel {
                    from: 3,
                    to: Some(1),
                    rate: gamma,
                },
            ];
            s.transit = Some(TransitChannel {
                rate: 0.02 * gamma,
                target: vec![0.3, 0.7, 0.0, 0.0],
            });
            s
        }] {
            let n = s.dim;
            let t = 5.0 / gamma;
            let l = superoperator(&s);
            let prop = (l * c(t, 0.0)).exp();
            let rho0 = DensityMatrix::pure(n, 0);
            let v = nalgebra::DVector::from_column_slice(rho0.entries.as_slice());
            let want = prop * v;
            let tol = Tolerances {
                rtol: 1e-11,
                atol: 1e-14,
            };
            let got = evolve(
                &rho0,
                &s,
                &[t],
                &EvolveOptions {
                    tol,
                    ..Default::default()
                },
            )
            .unwrap();
            let diff = got.states[0]
                .entries
                .as_slice()
                .iter()
                .zip(want.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-8, "n={n} diff={diff:e}");
        }
    }

    #[test]
    fn dark_state_is_stationary() {
        let gamma = crate::units::mhz(5.746);
        let (o1, op) = (crate::units::mhz(0.68), crate::units::mhz(4.06));
        let mut h = DMatrix::from_element(3, 3, ZERO);
        h[(2, 0)] = c(o1, 0.0);
        h[(0, 2)] = c(o1, 0.0);
        h[(2, 1)] = c(op, 0.0);
        h[(1, 2)] = c(op, 0.0);
        let mut s = bare(h, vec![false, false, true]);
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
        let norm = (o1 * o1 + op * op).sqrt();
        let rho0 = DensityMatrix::from_amplitudes(&[c(op / norm, 0.0), c(-o1 / norm, 0.0), ZERO]);
        let times: Vec<f64> = (1..=50).map(|k| k as f64 * 0.2 / gamma).collect();
        let tr = evolve(&rho0, &s, &times, &EvolveOptions::default()).unwrap();
        let worst = tr.observables["pop s2"].iter().cloned().fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst:e}");
    }

    #[test]
    fn linear_in_initial_state() {
        let s = lambda(1e7);
        let t = [3e-7];
        let tol = Tolerances {
            rtol: 1e-11,
            atol: 1e-15,
        };
        let o = EvolveOptions {
            tol,
            ..Default::default()
        };
        let a = evolve(&DensityMatrix::pure(3, 0), &s, &t, &o)
            .unwrap()
            .states
            .remove(0);
        let b = evolve(&DensityMatrix::pure(3, 1), &s, &t, &o)
            .unwrap()
            .states
            .remove(0);
        let mix = DensityMatrix::diagonal(&[0.4, 0.6, 0.0]);
        let m = evolve(&mix, &s, &t, &o).unwrap().states.remove(0);
        let lin = a.entries * c(0.4, 0.0) + b.entries * c(0.6, 0.0);
        assert!((m.entries - lin).iter().all(|z| z.norm() < 1e-9));
    }

    #[test]
    fn invariants_are_tracked() {
        let s = lambda(1e7);
        let times: Vec<f64> = (1..=30).map(|k| k as f64 * 2e-8).collect();
        let tr = evolve(
            &DensityMatrix::pure(3, 0),
            &s,
            &times,
            &EvolveOptions::default(),
        )
        .unwrap();
        assert!(tr.invariants.trace_error < 1e-9);
        assert!(tr.invariants.hermiticity < 1e-12);
        assert!(tr.invariants.min_eigenvalue > -1e-9);
    }

    #[test]
    fn non_physical_start_breaches() {
        let s = lambda(1e7);
        let rho = DensityMatrix::diagonal(&[1.5, -0.5, 0.0]);
        let e = evolve(&rho, &s, &[1e-8], &EvolveOptions::default());
        assert!(matches!(e, Err(DeitError::InvariantBreach { .. })));
        assert!(DensityMatrix::new(rho.entries, 1e-9).is_err());
    }

    #[test]
    fn motion_channels() {
        let s = lambda(1e7);
        let same = add_motion_channels(&s, 0.0, 0.0, &[]).unwrap();
        assert_eq!(same, s);
        let m = add_motion_channels(&s, 1e3, 2e3, &[0.4, 0.6, 0.0]).unwrap();
        assert_eq!(m.dephasing_channels.len(), s.dephasing_channels.len() + 2);
        assert!(add_motion_channels(&s, -1.0, 0.0, &[]).is_err());
        assert!(add_motion_channels(&s, 0.0, 1.0, &[0.5, 0.6, 0.0]).is_err());
    }

    #[test]
    fn transit_relaxes_to_target() {
        let s = bare(DMatrix::from_element(2, 2, ZERO), vec![false, false]);
        let s = add_motion_channels(&s, 0.0, 1e3, &[0.25, 0.75]).unwrap();
        let tr = evolve(
            &DensityMatrix::pure(2, 0),
            &s,
            &[2e-3],
            &EvolveOptions::default(),
        )
        .unwrap();
        let want = 0.25 + 0.75 * (-2.0f64).exp();
        assert!((tr.states[0].entries[(0, 0)].re - want).abs() < 1e-7);
    }

    fn prep_consts() -> (SpectroscopicConstants, LevelMap) {
        (SpectroscopicConstants::rb87_d1(), LevelMap::standard())
    }

    #[test]
    fn pumping_reaches_branching_ratios() {
        let (c, map) = prep_consts();
        let gamma = crate::units::mhz(5.746);
        let mix = prepare_mixture(&c, &map, &PrepConfig::new(0.0, gamma)).unwrap();
        let br =
            crate::atomic_structure::branching_ratios_at(&c, map.label(Role::Four).unwrap(), 0.0)
                .unwrap();
        let g = |r: Role| {
            br.iter()
                .find(|(l, _)| *l == map.label(r).unwrap())
                .unwrap()
                .1
        };
        let (g1, g2) = (g(Role::One), g(Role::Two));
        assert!(
            (mix.p1 - g1 / (g1 + g2)).abs() < 1e-3,
            "{} {} {:?}",
            mix.p1,
            g1 / (g1 + g2),
            mix.populations
        );
        assert!((mix.p2 - g2 / (g1 + g2)).abs() < 1e-3);
        let swapped = prepare_mixture(&c, &map, &PrepConfig::new(1.0, gamma)).unwrap();
        assert!((swapped.p1 - mix.p2).abs() < 1e-15 && (swapped.p2 - mix.p1).abs() < 1e-15);
    }

    #[test]
    fn missing_repump_names_trap() {
        let (c, map) = prep_consts();
        let mut p = PrepConfig::new(0.0, crate::units::mhz(5.746));
        p.max_pulses = 3;
        p.repump_set = vec![LevelLabel::new(Manifold::Ground, 2, 0)];
        match prepare_mixture(&c, &map, &p) {
            Err(DeitError::PrepTrap { trap }) => assert!(trap.contains("mF")),
            other => panic!("{other:?}"),
        }
        p.raman_efficiency = 1.5;
        assert!(prepare_mixture(&c, &map, &p).unwrap_err().is_config());
    }
}
