//! Hyperfine and Zeeman structure of the 87Rb D1 line.
//!
//! Both manifolds have J = 1/2 and I = 3/2. The Hamiltonian A I·J + μB B (gJ mJ + gI mI)
//! is block diagonal in mF, so each block (dimension at most 2) is diagonalized on its own.
//! Eigenstates carry the F label they continue from at B = 0, not an energy rank.
//! Energies are angular frequencies in rad/s relative to each manifold's centroid.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Deserialize;

use crate::angular::{clebsch_gordan, wigner_3j, wigner_6j, HalfInt};
use crate::error::{DeitError, Result};
use crate::units::{mhz, EPSILON_0, HBAR, SPEED_OF_LIGHT};

const TABLE: &str = include_str!("../data/rb87_d1.toml");

// Continuation step for labeling eigenstates, in gauss.
const CONTINUATION_STEP: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Manifold {
    Ground,
    Excited,
}

impl Manifold {
    pub fn label(self) -> &'static str {
        match self {
            Manifold::Ground => "5S1/2",
            Manifold::Excited => "5P1/2",
        }
    }
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Manifold {
    type Err = DeitError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "5S1/2" | "5S½" | "ground" | "g" => Ok(Manifold::Ground),
            "5P1/2" | "5P½" | "excited" | "e" => Ok(Manifold::Excited),
            other => Err(DeitError::Config(format!("unknown manifold '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldConstants {
    pub label: String,
    pub j: HalfInt,
    /// Magnetic dipole hyperfine constant, rad/s.
    pub hyperfine_a: f64,
    pub g_j: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectroscopicConstants {
    pub format_version: u32,
    pub nuclear_spin: HalfInt,
    pub nuclear_g: f64,
    /// μB/h expressed as angular frequency per gauss.
    pub bohr_magneton: f64,
    /// Γ, rad/s.
    pub natural_linewidth: f64,
    /// Vacuum wavelength, m.
    pub wavelength: f64,
    /// Line centroid, rad/s.
    pub line_frequency: f64,
    /// Reduced dipole ⟨J||er||J'⟩, C·m.
    pub reduced_dipole: f64,
    pub ground: ManifoldConstants,
    pub excited: ManifoldConstants,
}

#[derive(Deserialize)]
struct RawManifold {
    label: String,
    j: f64,
    hyperfine_a_mhz: f64,
    g_j: f64,
}

#[derive(Deserialize)]
struct RawTable {
    format_version: u32,
    nuclear_spin: f64,
    nuclear_g: f64,
    bohr_magneton_mhz_per_gauss: f64,
    natural_linewidth_mhz: f64,
    reduced_dipole_cm: f64,
    wavelength_nm: f64,
    line_frequency_mhz: f64,
    ground: RawManifold,
    excited: RawManifold,
}

impl SpectroscopicConstants {
    /// The table shipped in `data/rb87_d1.toml`.
    pub fn rb87_d1() -> Self {
        Self::from_toml_str(TABLE).expect("bundled constants table is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawTable =
            toml::from_str(text).map_err(|e| DeitError::Config(format!("constants table: {e}")))?;
        let conv = |m: RawManifold| ManifoldConstants {
            label: m.label,
            j: HalfInt::from_f64(m.j),
            hyperfine_a: mhz(m.hyperfine_a_mhz),
            g_j: m.g_j,
        };
        let c = SpectroscopicConstants {
            format_version: raw.format_version,
            nuclear_spin: HalfInt::from_f64(raw.nuclear_spin),
            nuclear_g: raw.nuclear_g,
            bohr_magneton: mhz(raw.bohr_magneton_mhz_per_gauss),
            natural_linewidth: mhz(raw.natural_linewidth_mhz),
            wavelength: raw.wavelength_nm * 1e-9,
            line_frequency: mhz(raw.line_frequency_mhz),
            reduced_dipole: raw.reduced_dipole_cm,
            ground: conv(raw.ground),
            excited: conv(raw.excited),
        };
        c.check()?;
        Ok(c)
    }

    fn check(&self) -> Result<()> {
        let positive = [
            ("nuclear_spin", self.nuclear_spin.value()),
            ("bohr_magneton", self.bohr_magneton),
            ("natural_linewidth", self.natural_linewidth),
            ("wavelength", self.wavelength),
            ("line_frequency", self.line_frequency),
            ("reduced_dipole", self.reduced_dipole),
            ("ground.hyperfine_a", self.ground.hyperfine_a),
            ("excited.hyperfine_a", self.excited.hyperfine_a),
            ("ground.j", self.ground.j.value()),
            ("excited.j", self.excited.j.value()),
        ];
        for (k, v) in positive {
            if !(v > 0.0) {
                return Err(DeitError::Config(format!(
                    "constant {k} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn manifold(&self, m: Manifold) -> &ManifoldConstants {
        match m {
            Manifold::Ground => &self.ground,
            Manifold::Excited => &self.excited,
        }
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength
    }

    /// Spontaneous decay rate implied by the reduced dipole, ω³d²/(3πε0ħc³), for J = J'.
    pub fn linewidth_from_dipole(&self) -> f64 {
        let w = self.line_frequency;
        let d = self.reduced_dipole;
        w.powi(3) * d * d / (3.0 * std::f64::consts::PI * EPSILON_0 * HBAR * SPEED_OF_LIGHT.powi(3))
    }

    /// Allowed total angular momenta F of a manifold.
    pub fn f_values(&self, m: Manifold) -> Vec<HalfInt> {
        let j = self.manifold(m).j.0;
        let i = self.nuclear_spin.0;
        let mut out = Vec::new();
        let mut f = (i - j).abs();
        while f <= i + j {
            out.push(HalfInt(f));
            f += 2;
        }
        out
    }

    /// |mI, mJ⟩ product basis, mI outer (descending), mJ inner (descending).
    pub fn product_basis(&self, m: Manifold) -> Vec<(HalfInt, HalfInt)> {
        let j = self.manifold(m).j;
        let mut out = Vec::new();
        for mi in self.nuclear_spin.projections() {
            for mj in j.projections() {
                out.push((mi, mj));
            }
        }
        out
    }

    /// Full hyperfine + Zeeman Hamiltonian in the product basis, rad/s.
    pub fn hamiltonian(&self, m: Manifold, b: f64) -> DMatrix<f64> {
        let mc = self.manifold(m);
        let basis = self.product_basis(m);
        let n = basis.len();
        let (i, j) = (self.nuclear_spin.value(), mc.j.value());
        let mut h = DMatrix::zeros(n, n);
        for (a, &(mi, mj)) in basis.iter().enumerate() {
            let (mi, mj) = (mi.value(), mj.value());
            h[(a, a)] = mc.hyperfine_a * mi * mj
                + self.bohr_magneton * b * (mc.g_j * mj + self.nuclear_g * mi);
            for (c, &(mi2, mj2)) in basis.iter().enumerate() {
                let (mi2, mj2) = (mi2.value(), mj2.value());
                // ⟨mi2 mj2| I+ J- |mi mj⟩ and its transpose
                if mi2 == mi + 1.0 && mj2 == mj - 1.0 {
                    let v = 0.5
                        * mc.hyperfine_a
                        * (i * (i + 1.0) - mi * (mi + 1.0)).sqrt()
                        * (j * (j + 1.0) - mj * (mj - 1.0)).sqrt();
                    h[(c, a)] += v;
                    h[(a, c)] += v;
                }
            }
        }
        h
    }
}

/// Identifies a Zeeman eigenstate by its manifold and zero-field quantum numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LevelLabel {
    pub manifold: Manifold,
    pub f: HalfInt,
    pub mf: HalfInt,
}

impl LevelLabel {
    pub fn new(manifold: Manifold, f: i32, mf: i32) -> Self {
        LevelLabel {
            manifold,
            f: HalfInt::int(f),
            mf: HalfInt::int(mf),
        }
    }
}

impl fmt::Display for LevelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prime = if self.manifold == Manifold::Excited {
            "'"
        } else {
            ""
        };
        write!(
            f,
            "{}(F{}={}, mF={})",
            self.manifold, prime, self.f, self.mf
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeemanLevel {
    pub manifold: Manifold,
    /// F at B = 0 reached by adiabatic continuation.
    pub f: HalfInt,
    pub mf: HalfInt,
    /// rad/s, relative to the manifold centroid.
    pub energy: f64,
    /// Coefficients over [`SpectroscopicConstants::product_basis`].
    pub composition: Vec<Complex64>,
}

impl ZeemanLevel {
    pub fn label(&self) -> LevelLabel {
        LevelLabel {
            manifold: self.manifold,
            f: self.f,
            mf: self.mf,
        }
    }

    /// Expansion over |F mF⟩ states, coupling order |(J I) F⟩.
    pub fn f_components(&self, consts: &SpectroscopicConstants) -> Vec<(HalfInt, Complex64)> {
        let j = consts.manifold(self.manifold).j;
        let i = consts.nuclear_spin;
        let basis = consts.product_basis(self.manifold);
        consts
            .f_values(self.manifold)
            .into_iter()
            .filter(|f| self.mf.0.abs() <= f.0)
            .map(|f| {
                let c: Complex64 = basis
                    .iter()
                    .zip(&self.composition)
                    .map(|(&(mi, mj), &c)| c * clebsch_gordan(j, mj, i, mi, f, self.mf))
                    .sum();
                (f, c)
            })
            .collect()
    }
}

fn ambiguity(manifold: Manifold, mf: HalfInt, b: f64, detail: &str) -> DeitError {
    DeitError::AmbiguousLevel(format!(
        "{manifold} mF={mf} block near B={b:.4} G: {detail}"
    ))
}

fn block_eigen(h: &DMatrix<f64>, idx: &[usize]) -> (Vec<f64>, DMatrix<f64>) {
    let n = idx.len();
    let sub = DMatrix::from_fn(n, n, |r, c| h[(idx[r], idx[c])]);
    let eig = SymmetricEigen::new(sub);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// All eigenstates of one manifold at field `b` (gauss), sorted by energy.
pub fn zeeman_spectrum(
    consts: &SpectroscopicConstants,
    manifold: Manifold,
    b: f64,
) -> Result<Vec<ZeemanLevel>> {
    if !(b >= 0.0) || !b.is_finite() {
        return Err(DeitError::Domain(format!(
            "magnetic field must be finite and >= 0, got {b}"
        )));
    }
    let mc = consts.manifold(manifold);
    let basis = consts.product_basis(manifold);
    let fmax = consts.nuclear_spin + mc.j;
    let mut levels = Vec::with_capacity(basis.len());

    for mf in fmax.projections() {
        let idx: Vec<usize> = (0..basis.len())
            .filter(|&k| basis[k].0 + basis[k].1 == mf)
            .collect();
        let fs: Vec<HalfInt> = consts
            .f_values(manifold)
            .into_iter()
            .filter(|f| mf.0.abs() <= f.0)
            .collect();
        // zero-field references |F mF⟩ restricted to the block
        let mut refs: Vec<Vec<f64>> = fs
            .iter()
            .map(|&f| {
                idx.iter()
                    .map(|&k| {
                        clebsch_gordan(mc.j, basis[k].1, consts.nuclear_spin, basis[k].0, f, mf)
                    })
                    .collect()
            })
            .collect();
        let mut energies = vec![0.0; fs.len()];

        let steps = ((b / CONTINUATION_STEP).ceil() as usize).max(1);
        for s in 1..=steps {
            let bs = b * s as f64 / steps as f64;
            let h = consts.hamiltonian(manifold, bs);
            let (vals, vecs) = block_eigen(&h, &idx);
            let mut taken = vec![false; vals.len()];
            let mut next = refs.clone();
            for (r, reference) in refs.iter().enumerate() {
                let mut best = None;
                let mut best_ov = 0.0;
                let mut second = 0.0;
                for col in 0..vals.len() {
                    let ov: f64 = (0..idx.len()).map(|k| vecs[(k, col)] * reference[k]).sum();
                    if ov.abs() > best_ov {
                        second = best_ov;
                        best_ov = ov.abs();
                        best = Some(col);
                    } else if ov.abs() > second {
                        second = ov.abs();
                    }
                }
                let col = best.ok_or_else(|| ambiguity(manifold, mf, bs, "empty block"))?;
                if taken[col] || best_ov * best_ov < 0.5 || (best_ov - second) < 1e-6 {
                    return Err(ambiguity(
                        manifold,
                        mf,
                        bs,
                        &format!("state continuing from F={} has overlap {best_ov:.3} (runner-up {second:.3})", fs[r]),
                    ));
                }
                taken[col] = true;
                let ov: f64 = (0..idx.len()).map(|k| vecs[(k, col)] * reference[k]).sum();
                let sgn = ov.signum();
                next[r] = (0..idx.len()).map(|k| sgn * vecs[(k, col)]).collect();
                energies[r] = vals[col];
            }
            refs = next;
        }

        for (r, &f) in fs.iter().enumerate() {
            let mut composition = vec![Complex64::new(0.0, 0.0); basis.len()];
            for (k, &bi) in idx.iter().enumerate() {
                composition[bi] = Complex64::new(refs[r][k], 0.0);
            }
            levels.push(ZeemanLevel {
                manifold,
                f,
                mf,
                energy: energies[r],
                composition,
            });
        }
    }
    levels.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap());
    Ok(levels)
}

/// Ground and excited spectra at one field value. Index order: ground levels
/// (by energy) then excited levels (by energy), 16 states in total.
#[derive(Debug, Clone)]
pub struct D1Structure {
    pub b: f64,
    pub ground: Vec<ZeemanLevel>,
    pub excited: Vec<ZeemanLevel>,
}

impl D1Structure {
    pub fn compute(consts: &SpectroscopicConstants, b: f64) -> Result<Self> {
        Ok(D1Structure {
            b,
            ground: zeeman_spectrum(consts, Manifold::Ground, b)?,
            excited: zeeman_spectrum(consts, Manifold::Excited, b)?,
        })
    }

    pub fn len(&self) -> usize {
        self.ground.len() + self.excited.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn level(&self, idx: usize) -> &ZeemanLevel {
        if idx < self.ground.len() {
            &self.ground[idx]
        } else {
            &self.excited[idx - self.ground.len()]
        }
    }

    pub fn levels(&self) -> impl Iterator<Item = &ZeemanLevel> {
        self.ground.iter().chain(self.excited.iter())
    }

    pub fn index_of(&self, label: LevelLabel) -> Option<usize> {
        self.levels().position(|l| l.label() == label)
    }

    pub fn find(&self, label: LevelLabel) -> Result<&ZeemanLevel> {
        self.index_of(label)
            .map(|i| self.level(i))
            .ok_or_else(|| DeitError::Config(format!("no Zeeman level {label}")))
    }
}

/// Roles of Fig. 1(b): |1⟩..|7⟩ and the leakage state |X⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    One,
    Two,
    Three,
    Four,
    Five,
    Six,
    Seven,
    X,
}

impl Role {
    pub const ALL: [Role; 8] = [
        Role::One,
        Role::Two,
        Role::Three,
        Role::Four,
        Role::Five,
        Role::Six,
        Role::Seven,
        Role::X,
    ];
    /// The seven states of the perturbative model, in matrix order.
    pub const SCHEME: [Role; 7] = [
        Role::One,
        Role::Two,
        Role::Three,
        Role::Four,
        Role::Five,
        Role::Six,
        Role::Seven,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Role::One => "one",
            Role::Two => "two",
            Role::Three => "three",
            Role::Four => "four",
            Role::Five => "five",
            Role::Six => "six",
            Role::Seven => "seven",
            Role::X => "x",
        }
    }

    pub fn from_key(k: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.key() == k)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Role::One => "|1>",
            Role::Two => "|2>",
            Role::Three => "|3>",
            Role::Four => "|4>",
            Role::Five => "|5>",
            Role::Six => "|6>",
            Role::Seven => "|7>",
            Role::X => "|X>",
        };
        f.write_str(s)
    }
}

/// Explicit role → (manifold, F, mF) assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelMap {
    pub roles: BTreeMap<Role, LevelLabel>,
}

impl LevelMap {
    /// Assignment used throughout: ground F=1 mF=0, F=2 mF=+2, F=2 mF=0, F=2 mF=-2 and
    /// excited F'=2 mF=±1, F'=1 mF=±1.
    pub fn standard() -> Self {
        use Manifold::*;
        let roles = [
            (Role::One, LevelLabel::new(Ground, 1, 0)),
            (Role::Two, LevelLabel::new(Ground, 2, 2)),
            (Role::Three, LevelLabel::new(Ground, 2, 0)),
            (Role::X, LevelLabel::new(Ground, 2, -2)),
            (Role::Four, LevelLabel::new(Excited, 2, 1)),
            (Role::Five, LevelLabel::new(Excited, 2, -1)),
            (Role::Six, LevelLabel::new(Excited, 1, 1)),
            (Role::Seven, LevelLabel::new(Excited, 1, -1)),
        ];
        LevelMap {
            roles: roles.into_iter().collect(),
        }
    }

    pub fn label(&self, role: Role) -> Result<LevelLabel> {
        self.roles
            .get(&role)
            .copied()
            .ok_or_else(|| DeitError::Config(format!("level map has no entry for {role}")))
    }

    /// Index of each role's state in `structure`; checks that the mapped state exists and
    /// is not degenerate with another state of the same mF block.
    pub fn resolve(&self, structure: &D1Structure, role: Role) -> Result<usize> {
        let label = self.label(role)?;
        let idx = structure.index_of(label).ok_or_else(|| {
            DeitError::Config(format!("{role} mapped to {label}, which does not exist"))
        })?;
        let lvl = structure.level(idx);
        let scale = 1e-9 * lvl.energy.abs().max(1.0);
        for other in structure.levels() {
            if other.manifold == lvl.manifold
                && other.mf == lvl.mf
                && other.f != lvl.f
                && (other.energy - lvl.energy).abs() < scale
            {
                return Err(DeitError::AmbiguousLevel(format!(
                    "{role} = {label} crosses {} at B={} G",
                    other.label(),
                    structure.b
                )));
            }
        }
        Ok(idx)
    }

    pub fn energy(&self, structure: &D1Structure, role: Role) -> Result<f64> {
        Ok(structure.level(self.resolve(structure, role)?).energy)
    }
}

/// δ_mag = (E2 − E3) − (E3 − EX) in rad/s: mismatch of the two Raman resonances |2⟩↔|3⟩ and |3⟩↔|X⟩.
pub fn magnetic_mismatch(consts: &SpectroscopicConstants, b: f64, map: &LevelMap) -> Result<f64> {
    let s = D1Structure::compute(consts, b)?;
    mismatch_from(&s, map)
}

pub fn mismatch_from(s: &D1Structure, map: &LevelMap) -> Result<f64> {
    let e2 = map.energy(s, Role::Two)?;
    let e3 = map.energy(s, Role::Three)?;
    let ex = map.energy(s, Role::X)?;
    Ok((e2 - e3) - (e3 - ex))
}

/// Far detunings of the off-resonant excited states, fixed by the level structure (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarDetunings {
    /// Δ = (E4 − E5) − (E2 − E3)
    pub state5: f64,
    /// Δ1 = E4 − E6
    pub state6: f64,
    /// Δ2 = (E4 − E7) − (E2 − E3)
    pub state7: f64,
}

pub fn far_detunings(s: &D1Structure, map: &LevelMap) -> Result<FarDetunings> {
    let e = |r| map.energy(s, r);
    let (e2, e3, e4, e5, e6, e7) = (
        e(Role::Two)?,
        e(Role::Three)?,
        e(Role::Four)?,
        e(Role::Five)?,
        e(Role::Six)?,
        e(Role::Seven)?,
    );
    Ok(FarDetunings {
        state5: (e4 - e5) - (e2 - e3),
        state6: e4 - e6,
        state7: (e4 - e7) - (e2 - e3),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleElement {
    pub lower: LevelLabel,
    pub upper: LevelLabel,
    pub q: i32,
    /// ⟨upper| d_q |lower⟩, C·m (real in the Condon-Shortley convention).
    pub amplitude: f64,
}

// ⟨F' m'| d_q |F m⟩ in units of ⟨J'||d||J⟩ (Wigner-Eckart, 3-j form)
fn f_basis_element(
    consts: &SpectroscopicConstants,
    f_up: HalfInt,
    m_up: HalfInt,
    f_lo: HalfInt,
    m_lo: HalfInt,
    q: HalfInt,
) -> f64 {
    let ju = consts.excited.j;
    let jl = consts.ground.j;
    let i = consts.nuclear_spin;
    let one = HalfInt::int(1);
    let phase_3j = if ((f_up.0 - m_up.0) / 2).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    };
    let three = wigner_3j(f_up, one, f_lo, -m_up, q, m_lo);
    if three == 0.0 {
        return 0.0;
    }
    let e = ju.0 + i.0 + f_lo.0 + 2;
    let phase_red = if (e / 2).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    };
    let six = wigner_6j(ju, f_up, i, f_lo, jl, one);
    let reduced = phase_red * (((f_up.0 + 1) * (f_lo.0 + 1)) as f64).sqrt() * six;
    phase_3j * three * reduced
}

/// Reduced element ⟨J'||d||J⟩ in the 3-j normalization, from the tabulated Clebsch-Gordan-convention value.
fn reduced_j(consts: &SpectroscopicConstants) -> f64 {
    ((consts.ground.j.0 + 1) as f64).sqrt() * consts.reduced_dipole
}

/// Transition dipole ⟨upper| d_q |lower⟩ between two Zeeman eigenstates.
pub fn dipole_element(
    consts: &SpectroscopicConstants,
    lower: &ZeemanLevel,
    upper: &ZeemanLevel,
    q: i32,
) -> DipoleElement {
    let mut out = DipoleElement {
        lower: lower.label(),
        upper: upper.label(),
        q,
        amplitude: 0.0,
    };
    if lower.manifold != Manifold::Ground || upper.manifold != Manifold::Excited {
        return out;
    }
    if upper.mf.0 - lower.mf.0 != 2 * q || q.abs() > 1 {
        return out;
    }
    let qh = HalfInt::int(q);
    let lo = lower.f_components(consts);
    let up = upper.f_components(consts);
    let mut acc = Complex64::new(0.0, 0.0);
    for &(fu, cu) in &up {
        for &(fl, cl) in &lo {
            acc += cu.conj() * cl * f_basis_element(consts, fu, upper.mf, fl, lower.mf, qh);
        }
    }
    out.amplitude = acc.re * reduced_j(consts);
    out
}

/// Dipole connecting two states with whichever polarization their mF difference requires.
pub fn dipole_between(
    consts: &SpectroscopicConstants,
    lower: &ZeemanLevel,
    upper: &ZeemanLevel,
) -> DipoleElement {
    let q = (upper.mf.0 - lower.mf.0) / 2;
    dipole_element(consts, lower, upper, q)
}

/// Decay branching fractions of an excited state into the supplied ground states.
pub fn branching_ratios(
    consts: &SpectroscopicConstants,
    excited: &ZeemanLevel,
    ground: &[ZeemanLevel],
) -> Vec<(LevelLabel, f64)> {
    let weights: Vec<(LevelLabel, f64)> = ground
        .iter()
        .map(|g| {
            (
                g.label(),
                dipole_between(consts, g, excited).amplitude.powi(2),
            )
        })
        .filter(|(_, w)| *w > 0.0)
        .collect();
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    weights.into_iter().map(|(l, w)| (l, w / total)).collect()
}

/// Branching fractions of the excited state `label` with all levels computed at field `b`.
pub fn branching_ratios_at(
    consts: &SpectroscopicConstants,
    label: LevelLabel,
    b: f64,
) -> Result<Vec<(LevelLabel, f64)>> {
    let s = D1Structure::compute(consts, b)?;
    let e = s.find(label)?;
    Ok(branching_ratios(consts, e, &s.ground))
}
