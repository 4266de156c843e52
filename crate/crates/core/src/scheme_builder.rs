//! Hamiltonians and relaxation channels for the three model tiers:
//! the idealized 5-level scheme, the 7-level non-Hermitian matrix and the
//! full 16-state D1 manifold in a multi-frequency rotating frame.
//!
//! All matrix entries are angular frequencies (H/ħ). Couplings enter the
//! matrix without a factor 1/2: the entry for a transition driven by a field
//! of amplitude E is Ω = −|d|E/ħ.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::atomic_structure::{
    dipole_between, D1Structure, FarDetunings, LevelMap, Role, SpectroscopicConstants,
};
use crate::error::{DeitError, Result};
use crate::units::HBAR;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Field {
    Signal1,
    Signal2,
    Pump,
}

impl Field {
    pub fn is_signal(self) -> bool {
        !matches!(self, Field::Pump)
    }
    /// The other signal field.
    pub fn partner(self) -> Field {
        match self {
            Field::Signal1 => Field::Signal2,
            Field::Signal2 => Field::Signal1,
            Field::Pump => Field::Pump,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Signal1 => "field1",
            Field::Signal2 => "field2",
            Field::Pump => "pump",
        })
    }
}

/// How the off-resonant couplings inherit their sign from the primary ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingSigns {
    /// Ω' = −|d'|E/ħ for every transition.
    #[default]
    Magnitude,
    /// Ω' carries the relative sign of the Condon-Shortley dipoles.
    Signed,
}

/// Diagonal entry used for state |5⟩ in the 7-level matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum State5Diagonal {
    /// −Δ − iγ/2, by analogy with states |6⟩ and |7⟩.
    #[default]
    Tilde,
    /// +Δ − iγ/2.
    Literal,
}

/// Signed transition dipoles (C·m) of the scheme, ⟨upper|d|lower⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeDipoles {
    pub d41: f64,
    pub d42: f64,
    pub d43: f64,
    pub d53: f64,
    pub d61: f64,
    pub d62: f64,
    pub d63: f64,
    pub d73: f64,
}

impl SchemeDipoles {
    /// Dipoles between the mapped states of `structure`.
    pub fn from_structure(
        consts: &SpectroscopicConstants,
        structure: &D1Structure,
        map: &LevelMap,
    ) -> Result<Self> {
        let d = |lo: Role, up: Role| -> Result<f64> {
            let l = structure.level(map.resolve(structure, lo)?);
            let u = structure.level(map.resolve(structure, up)?);
            Ok(dipole_between(consts, l, u).amplitude)
        };
        Ok(SchemeDipoles {
            d41: d(Role::One, Role::Four)?,
            d42: d(Role::Two, Role::Four)?,
            d43: d(Role::Three, Role::Four)?,
            d53: d(Role::Three, Role::Five)?,
            d61: d(Role::One, Role::Six)?,
            d62: d(Role::Two, Role::Six)?,
            d63: d(Role::Three, Role::Six)?,
            d73: d(Role::Three, Role::Seven)?,
        })
    }

    pub fn primary(&self, f: Field) -> f64 {
        match f {
            Field::Signal1 => self.d41,
            Field::Signal2 => self.d42,
            Field::Pump => self.d43,
        }
    }
}

/// Ω = −|d|E/ħ.
pub fn rabi_from_amplitude(e: Complex64, d: f64) -> Complex64 {
    -e * d.abs() / HBAR
}

/// Field amplitude that produces Rabi frequency `omega` on a transition with dipole `d`.
pub fn amplitude_from_rabi(omega: Complex64, d: f64) -> Complex64 {
    -omega * HBAR / d.abs()
}

fn derived(omega: Complex64, d_new: f64, d_ref: f64, signs: CouplingSigns) -> Complex64 {
    match signs {
        CouplingSigns::Magnitude => omega * (d_new.abs() / d_ref.abs()),
        CouplingSigns::Signed => omega * (d_new / d_ref),
    }
}

/// Rabi frequencies and detunings of Fig. 1(b), rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSet {
    pub omega1: Complex64,
    pub omega2: Complex64,
    pub omega_p: Complex64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta_p: f64,
    pub far: FarDetunings,
    /// Ω1′ (|1⟩↔|6⟩)
    pub omega1_6: Complex64,
    /// Ω2′ (|3⟩↔|5⟩)
    pub omega2_5: Complex64,
    /// Ω2″ (|2⟩↔|6⟩)
    pub omega2_6: Complex64,
    /// Ω2‴ (|3⟩↔|7⟩)
    pub omega2_7: Complex64,
    /// Ωp′ (|3⟩↔|6⟩)
    pub omega_p_6: Complex64,
    pub dipoles: SchemeDipoles,
}

impl FieldSet {
    /// Builds derived couplings from dipole ratios, Ω2′ = Ω2·d53/d42 and so on.
    #[allow(clippy::too_many_arguments)]
    pub fn from_dipoles(
        omega1: Complex64,
        omega2: Complex64,
        omega_p: Complex64,
        detunings: [f64; 3],
        far: FarDetunings,
        dipoles: SchemeDipoles,
        signs: CouplingSigns,
    ) -> Self {
        let d = dipoles;
        FieldSet {
            omega1,
            omega2,
            omega_p,
            delta1: detunings[0],
            delta2: detunings[1],
            delta_p: detunings[2],
            far,
            omega1_6: derived(omega1, d.d61, d.d41, signs),
            omega2_5: derived(omega2, d.d53, d.d42, signs),
            omega2_6: derived(omega2, d.d62, d.d42, signs),
            omega2_7: derived(omega2, d.d73, d.d42, signs),
            omega_p_6: derived(omega_p, d.d63, d.d43, signs),
            dipoles,
        }
    }

    /// Far detunings seen in the 7-level frame when the two-photon detunings are nonzero:
    /// states |5⟩ and |7⟩ are reached from |3⟩ by field 2, so they pick up δ2 − δp.
    pub fn structural_far(level: FarDetunings, delta2: f64, delta_p: f64) -> FarDetunings {
        FarDetunings {
            state5: level.state5 + delta2 - delta_p,
            state6: level.state6,
            state7: level.state7 + delta2 - delta_p,
        }
    }

    /// Scales the signal fields (and their derived couplings) by s1, s2.
    pub fn scale_signals(&self, s1: f64, s2: f64) -> Self {
        let mut f = *self;
        f.omega1 *= s1;
        f.omega1_6 *= s1;
        f.omega2 *= s2;
        f.omega2_5 *= s2;
        f.omega2_6 *= s2;
        f.omega2_7 *= s2;
        f
    }

    pub fn without(&self, field: Field) -> Self {
        match field {
            Field::Signal1 => self.scale_signals(0.0, 1.0),
            Field::Signal2 => self.scale_signals(1.0, 0.0),
            Field::Pump => {
                let mut f = *self;
                f.omega_p = ZERO;
                f.omega_p_6 = ZERO;
                f
            }
        }
    }

    pub fn rabi(&self, field: Field) -> Complex64 {
        match field {
            Field::Signal1 => self.omega1,
            Field::Signal2 => self.omega2,
            Field::Pump => self.omega_p,
        }
    }

    /// Field amplitude E (V/m) from the primary Rabi frequency on the |4⟩ transition.
    pub fn amplitude(&self, field: Field) -> Complex64 {
        amplitude_from_rabi(self.rabi(field), self.dipoles.primary(field))
    }
}

/// One laser-driven transition in a scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub lower: usize,
    pub upper: usize,
    pub field: Field,
    /// Matrix entry H[upper, lower] (rad/s).
    pub rabi: Complex64,
    /// Transition dipole ⟨upper|d|lower⟩, C·m.
    pub dipole: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayChannel {
    pub from: usize,
    /// `None` is a loss out of the modeled state space.
    pub to: Option<usize>,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingChannel {
    pub state: usize,
    pub rate: f64,
}

/// Uniform relaxation toward a fixed diagonal state.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitChannel {
    pub rate: f64,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeHamiltonian {
    pub dim: usize,
    /// H/ħ in rad/s.
    pub matrix: DMatrix<Complex64>,
    pub couplings: Vec<Coupling>,
    pub decay_channels: Vec<DecayChannel>,
    pub dephasing_channels: Vec<DephasingChannel>,
    pub transit: Option<TransitChannel>,
    pub frame_note: String,
    pub labels: Vec<String>,
    pub is_excited: Vec<bool>,
    pub roles: BTreeMap<Role, usize>,
}

impl SchemeHamiltonian {
    pub fn role(&self, r: Role) -> Result<usize> {
        self.roles
            .get(&r)
            .copied()
            .ok_or_else(|| DeitError::Config(format!("scheme has no state {r}")))
    }

    /// True when every decay channel stays inside the state space.
    pub fn is_closed(&self) -> bool {
        self.decay_channels.iter().all(|c| c.to.is_some())
    }

    /// Part of the matrix from signal-field couplings.
    pub fn signal_part(&self) -> DMatrix<Complex64> {
        let mut v = DMatrix::from_element(self.dim, self.dim, ZERO);
        for c in self.couplings.iter().filter(|c| c.field.is_signal()) {
            v[(c.upper, c.lower)] += c.rabi;
            v[(c.lower, c.upper)] += c.rabi.conj();
        }
        v
    }

    pub fn check_channels(&self) -> Result<()> {
        for c in &self.decay_channels {
            if !(c.rate >= 0.0) {
                return Err(DeitError::InvalidMedium(format!(
                    "negative decay rate {}",
                    c.rate
                )));
            }
            if let Some(to) = c.to {
                if !self.is_excited[c.from] || self.is_excited[to] {
                    return Err(DeitError::InvalidMedium(format!(
                        "decay channel {} -> {} does not run from an excited to a ground state",
                        self.labels[c.from], self.labels[to]
                    )));
                }
            }
        }
        for d in &self.dephasing_channels {
            if !(d.rate >= 0.0) {
                return Err(DeitError::InvalidMedium(format!(
                    "negative dephasing rate {}",
                    d.rate
                )));
            }
        }
        if let Some(t) = &self.transit {
            if !(t.rate >= 0.0) || t.target.len() != self.dim {
                return Err(DeitError::InvalidMedium("malformed transit channel".into()));
            }
        }
        Ok(())
    }
}

fn seven_labels() -> Vec<String> {
    Role::SCHEME.iter().map(|r| r.to_string()).collect()
}

/// The 7×7 matrix with diagonal (δ1, δ2, δp, −iγ/2, Δ̃, Δ̃1, Δ̃2) and couplings
/// Ω1, Ω2, Ωp to |4⟩, Ω2′ between |3⟩ and |5⟩, Ω1′, Ω2″, Ωp′ to |6⟩ and Ω2‴ between |3⟩ and |7⟩.
pub fn build_eat_hamiltonian(
    fields: &FieldSet,
    gamma: f64,
    state5: State5Diagonal,
) -> SchemeHamiltonian {
    let half = Complex64::new(0.0, -gamma / 2.0);
    let mut m = DMatrix::from_element(7, 7, ZERO);
    m[(0, 0)] = fields.delta1.into();
    m[(1, 1)] = fields.delta2.into();
    m[(2, 2)] = fields.delta_p.into();
    m[(3, 3)] = half;
    m[(4, 4)] = match state5 {
        State5Diagonal::Tilde => Complex64::from(-fields.far.state5) + half,
        State5Diagonal::Literal => Complex64::from(fields.far.state5) + half,
    };
    m[(5, 5)] = Complex64::from(-fields.far.state6) + half;
    m[(6, 6)] = Complex64::from(-fields.far.state7) + half;

    let d = &fields.dipoles;
    let couplings = vec![
        Coupling {
            lower: 0,
            upper: 3,
            field: Field::Signal1,
            rabi: fields.omega1,
            dipole: d.d41,
        },
        Coupling {
            lower: 1,
            upper: 3,
            field: Field::Signal2,
            rabi: fields.omega2,
            dipole: d.d42,
        },
        Coupling {
            lower: 2,
            upper: 3,
            field: Field::Pump,
            rabi: fields.omega_p,
            dipole: d.d43,
        },
        Coupling {
            lower: 2,
            upper: 4,
            field: Field::Signal2,
            rabi: fields.omega2_5,
            dipole: d.d53,
        },
        Coupling {
            lower: 0,
            upper: 5,
            field: Field::Signal1,
            rabi: fields.omega1_6,
            dipole: d.d61,
        },
        Coupling {
            lower: 1,
            upper: 5,
            field: Field::Signal2,
            rabi: fields.omega2_6,
            dipole: d.d62,
        },
        Coupling {
            lower: 2,
            upper: 5,
            field: Field::Pump,
            rabi: fields.omega_p_6,
            dipole: d.d63,
        },
        Coupling {
            lower: 2,
            upper: 6,
            field: Field::Signal2,
            rabi: fields.omega2_7,
            dipole: d.d73,
        },
    ];
    for c in &couplings {
        m[(c.upper, c.lower)] += c.rabi;
        m[(c.lower, c.upper)] += c.rabi.conj();
    }
    SchemeHamiltonian {
        dim: 7,
        matrix: m,
        couplings,
        decay_channels: Vec::new(),
        dephasing_channels: Vec::new(),
        transit: None,
        frame_note: "7-level frame: |4> at rest, ground states rotate with their lasers; decay as -i*gamma/2 on excited diagonals"
            .into(),
        labels: seven_labels(),
        is_excited: vec![false, false, false, true, true, true, true],
        roles: Role::SCHEME.iter().enumerate().map(|(i, r)| (*r, i)).collect(),
    }
}

/// Branching of the two excited states of the 5-level scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayAssignment {
    /// Fractions of |4⟩ decay into |1⟩, |2⟩, |3⟩.
    pub from4: [f64; 3],
    /// Fraction of |5⟩ decay into |3⟩; the remainder leaves the scheme.
    pub from5_to3: f64,
}

/// Tripod |1⟩,|2⟩,|3⟩ ↔ |4⟩ plus the shifting transition |3⟩ ↔ |5⟩ at detuning Δ.
/// The matrix is Hermitian; decay is carried by the channel list.
pub fn build_five_level(
    fields: &FieldSet,
    gamma: f64,
    decay: &DecayAssignment,
) -> Result<SchemeHamiltonian> {
    let sum4: f64 = decay.from4.iter().sum();
    let all = decay.from4.iter().chain(std::iter::once(&decay.from5_to3));
    if all.clone().any(|b| !(*b >= 0.0)) || sum4 > 1.0 + 1e-12 || decay.from5_to3 > 1.0 + 1e-12 {
        return Err(DeitError::InvalidMedium(format!(
            "branching fractions must be nonnegative and sum to at most 1 (|4>: {sum4}, |5>: {})",
            decay.from5_to3
        )));
    }
    let mut m = DMatrix::from_element(5, 5, ZERO);
    m[(0, 0)] = fields.delta1.into();
    m[(1, 1)] = fields.delta2.into();
    m[(2, 2)] = fields.delta_p.into();
    m[(4, 4)] = (-fields.far.state5).into();
    let d = &fields.dipoles;
    let couplings = vec![
        Coupling {
            lower: 0,
            upper: 3,
            field: Field::Signal1,
            rabi: fields.omega1,
            dipole: d.d41,
        },
        Coupling {
            lower: 1,
            upper: 3,
            field: Field::Signal2,
            rabi: fields.omega2,
            dipole: d.d42,
        },
        Coupling {
            lower: 2,
            upper: 3,
            field: Field::Pump,
            rabi: fields.omega_p,
            dipole: d.d43,
        },
        Coupling {
            lower: 2,
            upper: 4,
            field: Field::Signal2,
            rabi: fields.omega2_5,
            dipole: d.d53,
        },
    ];
    for c in &couplings {
        m[(c.upper, c.lower)] += c.rabi;
        m[(c.lower, c.upper)] += c.rabi.conj();
    }
    let mut decay_channels = Vec::new();
    for (to, b) in decay.from4.iter().enumerate() {
        if *b > 0.0 {
            decay_channels.push(DecayChannel {
                from: 3,
                to: Some(to),
                rate: gamma * b,
            });
        }
    }
    if 1.0 - sum4 > 1e-12 {
        decay_channels.push(DecayChannel {
            from: 3,
            to: None,
            rate: gamma * (1.0 - sum4),
        });
    }
    if decay.from5_to3 > 0.0 {
        decay_channels.push(DecayChannel {
            from: 4,
            to: Some(2),
            rate: gamma * decay.from5_to3,
        });
    }
    if 1.0 - decay.from5_to3 > 1e-12 {
        decay_channels.push(DecayChannel {
            from: 4,
            to: None,
            rate: gamma * (1.0 - decay.from5_to3),
        });
    }
    let roles = [Role::One, Role::Two, Role::Three, Role::Four, Role::Five];
    Ok(SchemeHamiltonian {
        dim: 5,
        matrix: m,
        couplings,
        decay_channels,
        dephasing_channels: Vec::new(),
        transit: None,
        frame_note: "5-level frame: |4> at rest, |5> at -Delta".into(),
        labels: roles.iter().map(|r| r.to_string()).collect(),
        is_excited: vec![false, false, false, true, true],
        roles: roles.iter().enumerate().map(|(i, r)| (*r, i)).collect(),
    })
}

/// A laser of the 16-level model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Laser {
    pub field: Field,
    /// Polarization q = mF(upper) − mF(lower).
    pub q: i32,
    /// Amplitude E (V/m).
    pub amplitude: Complex64,
    /// Angular frequency measured from the D1 line centroid, rad/s.
    pub frequency: f64,
    /// Sign applied in the `Signed` convention so the reference transition keeps Ω = −|d|E/ħ.
    pub reference_sign: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullModelOptions {
    /// Couplings whose residual oscillation exceeds this (rad/s) are dropped.
    pub rwa_cutoff: f64,
    pub gamma: f64,
    pub signs: CouplingSigns,
}

/// Lasers for the scheme: frequencies put |1⟩,|2⟩,|3⟩ ↔ |4⟩ at detunings δ1, δ2, δp and
/// amplitudes reproduce the primary Rabi frequencies on the |4⟩ transitions.
pub fn scheme_lasers(
    energies: &D1Structure,
    map: &LevelMap,
    fields: &FieldSet,
    polarizations: [i32; 3],
) -> Result<[Laser; 3]> {
    let e = |r| map.energy(energies, r);
    let e4 = e(Role::Four)?;
    let mk = |field: Field, lower: Role, det: f64, q: i32| -> Result<Laser> {
        let d = fields.dipoles.primary(field);
        Ok(Laser {
            field,
            q,
            amplitude: fields.amplitude(field),
            frequency: e4 - e(lower)? + det,
            reference_sign: d.signum(),
        })
    };
    Ok([
        mk(Field::Signal1, Role::One, fields.delta1, polarizations[0])?,
        mk(Field::Signal2, Role::Two, fields.delta2, polarizations[1])?,
        mk(Field::Pump, Role::Three, fields.delta_p, polarizations[2])?,
    ])
}

/// The 16-state D1 Hamiltonian. Energies come from `energies`, dipoles and decay branching
/// from `dipoles` (the two may be evaluated at different fields). States are indexed as in
/// [`D1Structure`]; excited energies are measured from the line centroid, so laser
/// frequencies are offsets from it too.
pub fn build_full_d1(
    consts: &SpectroscopicConstants,
    energies: &D1Structure,
    dipoles: &D1Structure,
    lasers: &[Laser],
    map: &LevelMap,
    opts: &FullModelOptions,
) -> Result<SchemeHamiltonian> {
    if energies.len() != dipoles.len() {
        return Err(DeitError::Dimension {
            expected: energies.len(),
            got: dipoles.len(),
        });
    }
    let n = energies.len();
    let ng = energies.ground.len();
    let bare: Vec<f64> = energies.levels().map(|l| l.energy).collect();
    // dipole levels matched by label: index order follows energy and differs between fields
    let mut twin = Vec::with_capacity(n);
    for l in energies.levels() {
        twin.push(dipoles.index_of(l.label()).ok_or_else(|| {
            DeitError::Config(format!("dipole structure lacks level {}", l.label()))
        })?);
    }
    let dip = |g: usize, e: usize| {
        dipole_between(consts, dipoles.level(twin[g]), dipoles.level(twin[e])).amplitude
    };
    let d_floor = 1e-9 * consts.reduced_dipole;

    let mut couplings = Vec::new();
    for g in 0..ng {
        for e in ng..n {
            let dq = (energies.level(e).mf.0 - energies.level(g).mf.0) / 2;
            for laser in lasers {
                if dq != laser.q {
                    continue;
                }
                let d = dip(g, e);
                if d.abs() < d_floor {
                    continue;
                }
                let residual = laser.frequency - (bare[e] - bare[g]);
                if residual.abs() > opts.rwa_cutoff {
                    continue;
                }
                let rabi = match opts.signs {
                    CouplingSigns::Magnitude => rabi_from_amplitude(laser.amplitude, d),
                    CouplingSigns::Signed => {
                        rabi_from_amplitude(laser.amplitude, d) * d.signum() * laser.reference_sign
                    }
                };
                couplings.push(Coupling {
                    lower: g,
                    upper: e,
                    field: laser.field,
                    rabi,
                    dipole: d,
                });
            }
        }
    }

    // rotating frame: θ_upper − θ_lower = ω_laser on every retained coupling
    let freq = |f: Field| {
        lasers
            .iter()
            .find(|l| l.field == f)
            .map(|l| l.frequency)
            .unwrap()
    };
    let root = map.resolve(energies, Role::Four)?;
    let mut theta: Vec<Option<f64>> = vec![None; n];
    let mut order = vec![root];
    order.extend((0..n).filter(|&i| i != root));
    for &seed in &order {
        if theta[seed].is_some() {
            continue;
        }
        theta[seed] = Some(bare[seed]);
        let mut queue = VecDeque::from([seed]);
        while let Some(s) = queue.pop_front() {
            let ts = theta[s].unwrap();
            for c in &couplings {
                let w = freq(c.field);
                let (other, want) = if c.lower == s {
                    (c.upper, ts + w)
                } else if c.upper == s {
                    (c.lower, ts - w)
                } else {
                    continue;
                };
                match theta[other] {
                    None => {
                        theta[other] = Some(want);
                        queue.push_back(other);
                    }
                    Some(t) if (t - want).abs() > 1e-6 * opts.rwa_cutoff.max(1.0) => {
                        return Err(DeitError::Mode(format!(
                            "no time-independent frame: state {} reached with inconsistent rotation ({:.3} vs {:.3} MHz)",
                            energies.level(other).label(),
                            crate::units::to_mhz(t),
                            crate::units::to_mhz(want)
                        )));
                    }
                    _ => {}
                }
            }
        }
    }
    let theta: Vec<f64> = theta.into_iter().map(|t| t.unwrap()).collect();

    let mut m = DMatrix::from_element(n, n, ZERO);
    for i in 0..n {
        m[(i, i)] = (bare[i] - theta[i]).into();
    }
    for c in &couplings {
        m[(c.upper, c.lower)] += c.rabi;
        m[(c.lower, c.upper)] += c.rabi.conj();
    }

    let mut decay_channels = Vec::new();
    for e in ng..n {
        let weights: Vec<(usize, f64)> = (0..ng)
            .map(|g| (g, dip(g, e).powi(2)))
            .filter(|(_, w)| *w > 0.0)
            .collect();
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        for (g, w) in weights {
            let rate = opts.gamma * w / total;
            if rate > 1e-12 * opts.gamma {
                decay_channels.push(DecayChannel {
                    from: e,
                    to: Some(g),
                    rate,
                });
            }
        }
    }

    let mut roles = BTreeMap::new();
    for r in Role::ALL {
        roles.insert(r, map.resolve(energies, r)?);
    }
    let labels = energies
        .levels()
        .enumerate()
        .map(|(i, l)| {
            let tag = roles
                .iter()
                .find(|(_, &v)| v == i)
                .map(|(r, _)| format!(" {r}"))
                .unwrap_or_default();
            format!("{}{}", l.label(), tag)
        })
        .collect();
    Ok(SchemeHamiltonian {
        dim: n,
        matrix: m,
        couplings,
        decay_channels,
        dephasing_channels: Vec::new(),
        transit: None,
        frame_note: format!(
            "16-level multi-frequency frame rooted at {} (B = {} G, RWA cutoff {:.3} MHz)",
            energies.level(root).label(),
            energies.b,
            crate::units::to_mhz(opts.rwa_cutoff)
        ),
        labels,
        is_excited: (0..n).map(|i| i >= ng).collect(),
        roles,
    })
}
