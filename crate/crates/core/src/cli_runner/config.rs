//! Layered run configuration: built-in defaults, then a preset, then a user file.
//! Every physical quantity is a string with an explicit unit, e.g. "0.68 MHz".

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use toml::{Table, Value};

use crate::analytic_models::{ProjectionMode, SatBranch};
use crate::atomic_structure::{FarDetunings, LevelLabel, LevelMap, Manifold, Role};
use crate::error::{DeitError, Result};
use crate::ode::Tolerances;
use crate::scheme_builder::{CouplingSigns, State5Diagonal};

const DEFAULTS: &str = include_str!("../../presets/defaults.cfg");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig2,
    PhaseShift,
    StatePrep,
    MaxPhase,
    HotGas,
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Fig2,
        Preset::PhaseShift,
        Preset::StatePrep,
        Preset::MaxPhase,
        Preset::HotGas,
        Preset::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::PhaseShift => "phase-shift",
            Preset::StatePrep => "state-prep",
            Preset::MaxPhase => "max-phase",
            Preset::HotGas => "hot-gas",
            Preset::Custom => "custom",
        }
    }

    /// Text of the preset file layered over the defaults.
    pub fn source(self) -> &'static str {
        match self {
            Preset::Fig2 => include_str!("../../presets/fig2.cfg"),
            Preset::PhaseShift => include_str!("../../presets/phase-shift.cfg"),
            Preset::StatePrep => include_str!("../../presets/state-prep.cfg"),
            Preset::MaxPhase => include_str!("../../presets/max-phase.cfg"),
            Preset::HotGas => include_str!("../../presets/hot-gas.cfg"),
            Preset::Custom => "preset = \"custom\"\n",
        }
    }
}

impl FromStr for Preset {
    type Err = DeitError;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| DeitError::Config(format!("unknown preset `{s}`")))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Tier {
    Sat,
    Eat,
    Num,
}

impl Tier {
    pub fn name(self) -> &'static str {
        match self {
            Tier::Sat => "sat",
            Tier::Eat => "eat",
            Tier::Num => "num",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Frequency,
    MagneticField,
    Density,
    Length,
    Time,
}

fn unit_scale(dim: Dim, unit: &str) -> Option<f64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    Some(match (dim, unit) {
        (Dim::Frequency, "Hz") => two_pi,
        (Dim::Frequency, "kHz") => two_pi * 1e3,
        (Dim::Frequency, "MHz") => two_pi * 1e6,
        (Dim::Frequency, "GHz") => two_pi * 1e9,
        (Dim::Frequency, "rad/s") => 1.0,
        (Dim::MagneticField, "G") => 1.0,
        (Dim::MagneticField, "mT") => 10.0,
        (Dim::MagneticField, "T") => 1e4,
        (Dim::Density, "cm^-3") => 1e6,
        (Dim::Density, "m^-3") => 1.0,
        (Dim::Length, "nm") => 1e-9,
        (Dim::Length, "um") => 1e-6,
        (Dim::Length, "mm") => 1e-3,
        (Dim::Length, "cm") => 1e-2,
        (Dim::Length, "m") => 1.0,
        (Dim::Time, "ns") => 1e-9,
        (Dim::Time, "us") => 1e-6,
        (Dim::Time, "ms") => 1e-3,
        (Dim::Time, "s") => 1.0,
        _ => return None,
    })
}

fn example(dim: Dim) -> &'static str {
    match dim {
        Dim::Frequency => "\"0.68 MHz\" (Hz, kHz, MHz, GHz, rad/s)",
        Dim::MagneticField => "\"150 G\" (G, mT, T)",
        Dim::Density => "\"1e14 cm^-3\" (cm^-3, m^-3)",
        Dim::Length => "\"1.6 mm\" (nm, um, mm, cm, m)",
        Dim::Time => "\"2 us\" (ns, us, ms, s)",
    }
}

/// Parses "<number> <unit>" into SI (frequencies become angular, fields stay in gauss).
pub fn parse_quantity(text: &str, dim: Dim) -> std::result::Result<f64, String> {
    let t = text.trim();
    let (num, unit) = t
        .split_once(char::is_whitespace)
        .ok_or_else(|| format!("`{t}` lacks a unit; expected e.g. {}", example(dim)))?;
    let x: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("`{num}` is not a number"))?;
    let s = unit_scale(dim, unit.trim()).ok_or_else(|| {
        format!(
            "unit `{}` not accepted here; expected e.g. {}",
            unit.trim(),
            example(dim)
        )
    })?;
    if !x.is_finite() {
        return Err(format!("`{num}` is not finite"));
    }
    Ok(x * s)
}

/// Lookup helpers over the merged table, producing errors that name the key and its line.
struct Reader<'a> {
    root: &'a Table,
    texts: &'a [(String, String)],
}

impl<'a> Reader<'a> {
    fn raw(&self, path: &str) -> Result<&'a Value> {
        let mut cur: &Value = self
            .root
            .get(path.split('.').next().unwrap())
            .ok_or_else(|| self.err(path, "missing"))?;
        for part in path.split('.').skip(1) {
            cur = cur.get(part).ok_or_else(|| self.err(path, "missing"))?;
        }
        Ok(cur)
    }

    fn opt(&self, path: &str) -> Option<&'a Value> {
        self.raw(path).ok()
    }

    fn err(&self, path: &str, msg: impl fmt::Display) -> DeitError {
        DeitError::Config(format!("{}`{path}`: {msg}", locate(self.texts, path)))
    }

    fn quantity_of(&self, path: &str, v: &Value, dim: Dim) -> Result<f64> {
        match v {
            Value::String(s) => parse_quantity(s, dim).map_err(|e| self.err(path, e)),
            other => Err(self.err(
                path,
                format!(
                    "expected a string with a unit like {}, got {other}",
                    example(dim)
                ),
            )),
        }
    }

    fn quantity(&self, path: &str, dim: Dim) -> Result<f64> {
        self.quantity_of(path, self.raw(path)?, dim)
    }

    fn number(&self, path: &str) -> Result<f64> {
        match self.raw(path)? {
            Value::Float(x) => Ok(*x),
            Value::Integer(i) => Ok(*i as f64),
            other => Err(self.err(path, format!("expected a number, got {other}"))),
        }
    }

    fn string(&self, path: &str) -> Result<&'a str> {
        self.raw(path)?
            .as_str()
            .ok_or_else(|| self.err(path, "expected a string"))
    }

    fn array(&self, path: &str) -> Result<&'a Vec<Value>> {
        self.raw(path)?
            .as_array()
            .ok_or_else(|| self.err(path, "expected an array"))
    }

    fn choice<T: Copy>(&self, path: &str, options: &[(&str, T)]) -> Result<T> {
        let s = self.string(path)?;
        options
            .iter()
            .find(|(k, _)| *k == s)
            .map(|(_, v)| *v)
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(k, _)| *k).collect();
                self.err(path, format!("`{s}` is not one of {}", names.join(", ")))
            })
    }
}

/// "(file:line) " prefix for the last layer that mentions the key's leaf name.
fn locate(texts: &[(String, String)], path: &str) -> String {
    let leaf = path.rsplit('.').next().unwrap_or(path);
    for (name, text) in texts.iter().rev() {
        for (i, line) in text.lines().enumerate() {
            let l = line.trim_start();
            if l.starts_with(leaf) && l[leaf.len()..].trim_start().starts_with('=') {
                return format!("{name}:{}: ", i + 1);
            }
        }
    }
    String::new()
}

fn merge(base: &mut Table, over: &Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

/// Keys of `over` that do not exist in `schema` (dotted paths).
fn unknown_keys(schema: &Table, over: &Table, prefix: &str, out: &mut Vec<String>) {
    for (k, v) in over {
        let path = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match (schema.get(k), v) {
            (Some(Value::Table(s)), Value::Table(o)) => unknown_keys(s, o, &path, out),
            (Some(_), _) => {}
            // optional keys documented in the defaults but left unset there
            (None, _) if path == "atom.mismatch_check" => {}
            (None, _) => out.push(path),
        }
    }
}

fn parse_layer(name: &str, text: &str) -> Result<Table> {
    text.parse::<Table>()
        .map_err(|e| DeitError::Config(format!("{name}: {e}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub parameter: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfig {
    pub omega1: f64,
    pub omega2: f64,
    pub omega_p: f64,
    pub detunings: [f64; 3],
    /// Explicit far detunings; `None` derives them from the level structure.
    pub far: Option<FarDetunings>,
    pub polarizations: [i32; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub tiers: Vec<Tier>,
    pub eat_order: Option<usize>,
    pub state5: State5Diagonal,
    pub signs: CouplingSigns,
    pub projection: ProjectionMode,
    pub rwa_cutoff: f64,
    pub sat_branch: SatBranch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepSettings {
    pub efficiencies: Vec<f64>,
    pub pump_rate: f64,
    pub pump_duration: f64,
    pub max_pulses: usize,
    pub threshold: f64,
    pub repump: Vec<LevelLabel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSettings {
    pub wavelength: f64,
    pub waist: f64,
    pub photons: f64,
    pub doppler_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Headline {
    pub wavelength_over_waist: f64,
    pub linewidth_over_detuning: f64,
    pub packing: f64,
}

/// Fully resolved configuration, SI units, angular frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    /// The merged key-value table the run was resolved from.
    pub resolved: Table,
    pub field: f64,
    pub dipole_field: f64,
    pub gamma: f64,
    pub density: f64,
    pub mismatch_check: Option<f64>,
    pub levels: LevelMap,
    pub fields: FieldConfig,
    pub p1: f64,
    pub p2: f64,
    pub length: f64,
    pub model: ModelConfig,
    pub t_end: f64,
    pub samples: usize,
    pub steady_fraction: f64,
    pub tol: Tolerances,
    pub prep: PrepSettings,
    pub pulse: PulseSettings,
    pub headline: Headline,
    pub dephasing: f64,
    pub transit: f64,
    pub sweep: Vec<SweepAxis>,
}

fn parse_level(s: &str) -> std::result::Result<LevelLabel, String> {
    // "ground F=1 mF=0"
    let mut parts = s.split_whitespace();
    let manifold: Manifold = parts
        .next()
        .ok_or("empty level")?
        .parse()
        .map_err(|e: DeitError| e.to_string())?;
    let mut f = None;
    let mut mf = None;
    for p in parts {
        if let Some(v) = p.strip_prefix("F=") {
            f = Some(v.parse::<i32>().map_err(|_| format!("bad F in `{s}`"))?);
        } else if let Some(v) = p.strip_prefix("mF=") {
            mf = Some(v.parse::<i32>().map_err(|_| format!("bad mF in `{s}`"))?);
        } else {
            return Err(format!(
                "unexpected `{p}` in level `{s}`; write e.g. \"ground F=2 mF=-2\""
            ));
        }
    }
    match (f, mf) {
        (Some(f), Some(mf)) if mf.abs() <= f => Ok(LevelLabel::new(manifold, f, mf)),
        _ => Err(format!(
            "level `{s}` needs F=<int> and mF=<int> with |mF| <= F"
        )),
    }
}

impl RunConfig {
    /// Defaults, then `preset` (or the preset named in the file), then the file, then `rtol`.
    pub fn load(preset: Option<Preset>, file: Option<&Path>, rtol: Option<f64>) -> Result<Self> {
        let user = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| DeitError::Config(format!("cannot read {}: {e}", p.display())))?;
                Some((p.display().to_string(), text))
            }
            None => None,
        };
        Self::from_layers(
            preset,
            user.as_ref().map(|(n, t)| (n.as_str(), t.as_str())),
            rtol,
        )
    }

    pub fn from_preset(preset: Preset) -> Result<Self> {
        Self::from_layers(Some(preset), None, None)
    }

    /// `user` is (name, text) of a configuration file.
    pub fn from_layers(
        preset: Option<Preset>,
        user: Option<(&str, &str)>,
        rtol: Option<f64>,
    ) -> Result<Self> {
        let schema = parse_layer("defaults", DEFAULTS)?;
        let user_table = match user {
            Some((name, text)) => Some(parse_layer(name, text)?),
            None => None,
        };
        let preset = match (preset, user_table.as_ref().and_then(|t| t.get("preset"))) {
            (Some(p), _) => p,
            (None, Some(Value::String(s))) => s.parse()?,
            (None, Some(other)) => {
                return Err(DeitError::Config(format!(
                    "`preset` must be a string, got {other}"
                )))
            }
            (None, None) => Preset::Custom,
        };
        let mut texts = vec![("defaults".to_string(), DEFAULTS.to_string())];
        let mut merged = schema.clone();
        let preset_table = parse_layer(preset.name(), preset.source())?;
        let mut unknown = Vec::new();
        unknown_keys(&schema, &preset_table, "", &mut unknown);
        merge(&mut merged, &preset_table);
        texts.push((
            format!("preset {}", preset.name()),
            preset.source().to_string(),
        ));
        if let (Some(t), Some((name, text))) = (user_table.as_ref(), user) {
            unknown_keys(&schema, t, "", &mut unknown);
            merge(&mut merged, t);
            texts.push((name.to_string(), text.to_string()));
        }
        if let Some(k) = unknown.first() {
            return Err(DeitError::Config(format!(
                "{}unknown key `{k}`",
                locate(&texts, k)
            )));
        }
        merged.insert("preset".into(), Value::String(preset.name().into()));
        if let Some(r) = rtol {
            let integ = merged
                .entry("integrator")
                .or_insert_with(|| Value::Table(Table::new()));
            if let Value::Table(t) = integ {
                t.insert("rtol".into(), Value::Float(r));
            }
        }
        let mut cfg = Self::resolve(&merged, &texts)?;
        cfg.preset = preset;
        Ok(cfg)
    }

    /// Re-resolves after replacing the dotted `path` with `value` (sweep points).
    pub fn with_override(&self, path: &str, value: &Value) -> Result<Self> {
        let mut t = self.resolved.clone();
        set_path(&mut t, path, value.clone())?;
        let mut c = Self::resolve(&t, &[])?;
        c.preset = self.preset;
        Ok(c)
    }

    fn resolve(merged: &Table, texts: &[(String, String)]) -> Result<Self> {
        let r = Reader {
            root: merged,
            texts,
        };
        let q = |p: &str, d: Dim| r.quantity(p, d);

        let mut roles = std::collections::BTreeMap::new();
        for role in Role::ALL {
            let path = format!("levels.{}", role.key());
            let label = parse_level(r.string(&path)?).map_err(|e| r.err(&path, e))?;
            roles.insert(role, label);
        }

        let far = match r.raw("fields.far")? {
            Value::String(s) if s == "structure" => None,
            Value::Array(a) if a.len() == 3 => {
                let v: Vec<f64> = a
                    .iter()
                    .map(|x| r.quantity_of("fields.far", x, Dim::Frequency))
                    .collect::<Result<_>>()?;
                Some(FarDetunings {
                    state5: v[0],
                    state6: v[1],
                    state7: v[2],
                })
            }
            _ => {
                return Err(r.err(
                    "fields.far",
                    "expected \"structure\" or three frequencies for |5>, |6>, |7>",
                ))
            }
        };
        let pol = r.array("fields.polarizations")?;
        let pol: Vec<i32> = pol
            .iter()
            .map(|v| v.as_integer().filter(|q| q.abs() <= 1).map(|q| q as i32))
            .collect::<Option<_>>()
            .filter(|v: &Vec<i32>| v.len() == 3)
            .ok_or_else(|| {
                r.err(
                    "fields.polarizations",
                    "expected three integers in {-1, 0, 1}",
                )
            })?;

        let tiers = r
            .array("model.tiers")?
            .iter()
            .map(|v| match v.as_str() {
                Some("sat") => Ok(Tier::Sat),
                Some("eat") => Ok(Tier::Eat),
                Some("num") => Ok(Tier::Num),
                _ => Err(r.err("model.tiers", format!("`{v}` is not one of sat, eat, num"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let eat_order = match r.raw("model.eat_order")? {
            Value::Integer(n) if *n >= 0 => Some(*n as usize),
            Value::String(s) if s == "full" => None,
            _ => {
                return Err(r.err(
                    "model.eat_order",
                    "expected a nonnegative integer or \"full\"",
                ))
            }
        };

        let p1 = r.number("mixture.p1")?;
        let p2 = r.number("mixture.p2")?;
        if !(p1 >= 0.0 && p2 >= 0.0 && p1 + p2 <= 1.0 + 1e-12) {
            return Err(r.err(
                "mixture",
                format!(
                    "populations must be nonnegative and sum to at most 1 (p1 = {p1}, p2 = {p2})"
                ),
            ));
        }
        let samples = r.number("time.samples")?;
        if !(samples >= 2.0 && samples.fract() == 0.0) {
            return Err(r.err("time.samples", "expected an integer >= 2"));
        }
        let steady_fraction = r.number("time.steady_fraction")?;
        if !(steady_fraction > 0.0 && steady_fraction <= 1.0) {
            return Err(r.err("time.steady_fraction", "expected a fraction in (0, 1]"));
        }
        let tol = Tolerances {
            rtol: r.number("integrator.rtol")?,
            atol: r.number("integrator.atol")?,
        };
        if !(tol.rtol > 0.0 && tol.atol > 0.0) {
            return Err(r.err("integrator", "tolerances must be positive"));
        }

        let efficiencies = r
            .array("prep.efficiencies")?
            .iter()
            .map(|v| match v {
                Value::Float(x) if (0.0..=1.0).contains(x) => Ok(*x),
                Value::Integer(i) if (0..=1).contains(i) => Ok(*i as f64),
                _ => Err(r.err(
                    "prep.efficiencies",
                    format!("`{v}` is not an efficiency in [0, 1]"),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        let repump = r
            .array("prep.repump")?
            .iter()
            .map(|v| {
                v.as_str()
                    .ok_or_else(|| r.err("prep.repump", "expected level strings"))
                    .and_then(|s| parse_level(s).map_err(|e| r.err("prep.repump", e)))
            })
            .collect::<Result<Vec<_>>>()?;
        let max_pulses = r.number("prep.max_pulses")?;

        let mut sweep = Vec::new();
        for axis in r.array("sweep.axes")? {
            let t = axis.as_table().ok_or_else(|| {
                r.err(
                    "sweep.axes",
                    "each axis is { parameter = \"...\", values = [...] }",
                )
            })?;
            let parameter = t
                .get("parameter")
                .and_then(|v| v.as_str())
                .ok_or_else(|| r.err("sweep.axes", "axis lacks `parameter`"))?
                .to_string();
            let values = t
                .get("values")
                .and_then(|v| v.as_array())
                .ok_or_else(|| r.err("sweep.axes", format!("axis `{parameter}` lacks `values`")))?
                .clone();
            if values.is_empty() {
                return Err(r.err(
                    "sweep.axes",
                    format!("axis `{parameter}` has an empty range"),
                ));
            }
            if parameter.starts_with("sweep")
                || parameter == "preset"
                || r.opt(&parameter).is_none()
            {
                return Err(r.err(
                    "sweep.axes",
                    format!("`{parameter}` is not a configuration key"),
                ));
            }
            sweep.push(SweepAxis { parameter, values });
        }

        let nonneg = |p: &str, v: f64| {
            if v >= 0.0 {
                Ok(v)
            } else {
                Err(r.err(p, "must be nonnegative"))
            }
        };
        Ok(RunConfig {
            preset: Preset::Custom,
            resolved: merged.clone(),
            field: nonneg("atom.field", q("atom.field", Dim::MagneticField)?)?,
            dipole_field: nonneg(
                "atom.dipole_field",
                q("atom.dipole_field", Dim::MagneticField)?,
            )?,
            gamma: nonneg("atom.linewidth", q("atom.linewidth", Dim::Frequency)?)?,
            density: q("atom.density", Dim::Density)?,
            mismatch_check: match r.opt("atom.mismatch_check") {
                Some(v) => Some(r.quantity_of("atom.mismatch_check", v, Dim::Frequency)?),
                None => None,
            },
            levels: LevelMap { roles },
            fields: FieldConfig {
                omega1: q("fields.omega1", Dim::Frequency)?,
                omega2: q("fields.omega2", Dim::Frequency)?,
                omega_p: q("fields.omega_p", Dim::Frequency)?,
                detunings: [
                    q("fields.delta1", Dim::Frequency)?,
                    q("fields.delta2", Dim::Frequency)?,
                    q("fields.delta_p", Dim::Frequency)?,
                ],
                far,
                polarizations: [pol[0], pol[1], pol[2]],
            },
            p1,
            p2,
            length: q("propagation.length", Dim::Length)?,
            model: ModelConfig {
                tiers,
                eat_order,
                state5: r.choice(
                    "model.state5",
                    &[
                        ("tilde", State5Diagonal::Tilde),
                        ("literal", State5Diagonal::Literal),
                    ],
                )?,
                signs: r.choice(
                    "model.coupling_signs",
                    &[
                        ("magnitude", CouplingSigns::Magnitude),
                        ("signed", CouplingSigns::Signed),
                    ],
                )?,
                projection: r.choice(
                    "model.projection",
                    &[
                        ("scheme", ProjectionMode::Scheme),
                        ("all", ProjectionMode::All),
                    ],
                )?,
                rwa_cutoff: q("model.rwa_cutoff", Dim::Frequency)?,
                sat_branch: r.choice(
                    "model.sat_branch",
                    &[
                        ("rigorous", SatBranch::Rigorous),
                        ("phenomenological", SatBranch::Phenomenological),
                    ],
                )?,
            },
            t_end: q("time.end", Dim::Time)?,
            samples: samples as usize,
            steady_fraction,
            tol,
            prep: PrepSettings {
                efficiencies,
                pump_rate: q("prep.pump_rate", Dim::Frequency)?,
                pump_duration: q("prep.pump_duration", Dim::Time)?,
                max_pulses: if max_pulses >= 1.0 {
                    max_pulses as usize
                } else {
                    return Err(r.err("prep.max_pulses", "must be >= 1"));
                },
                threshold: r.number("prep.threshold")?,
                repump,
            },
            pulse: PulseSettings {
                wavelength: q("pulse.wavelength", Dim::Length)?,
                waist: q("pulse.waist", Dim::Length)?,
                photons: r.number("pulse.photons")?,
                doppler_width: q("pulse.doppler_width", Dim::Frequency)?,
            },
            headline: Headline {
                wavelength_over_waist: r.number("headline.wavelength_over_waist")?,
                linewidth_over_detuning: r.number("headline.linewidth_over_detuning")?,
                packing: r.number("headline.packing")?,
            },
            dephasing: nonneg("motion.dephasing", q("motion.dephasing", Dim::Frequency)?)?,
            transit: nonneg("motion.transit", q("motion.transit", Dim::Frequency)?)?,
            sweep,
        })
    }

    /// Sample times (0, t_end] on a uniform grid.
    pub fn times(&self) -> Vec<f64> {
        (1..=self.samples)
            .map(|k| self.t_end * k as f64 / self.samples as f64)
            .collect()
    }

    /// The resolved configuration as `# `-prefixed lines for CSV headers.
    pub fn header_lines(&self) -> Vec<String> {
        let text = toml::to_string(&self.resolved).unwrap_or_default();
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| format!("# {l}"))
            .collect()
    }
}

fn set_path(t: &mut Table, path: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    let mut cur = t;
    for p in &parts[..parts.len() - 1] {
        cur = cur
            .get_mut(*p)
            .and_then(|v| v.as_table_mut())
            .ok_or_else(|| DeitError::Config(format!("`{path}` is not a configuration key")))?;
    }
    let leaf = parts[parts.len() - 1];
    if !cur.contains_key(leaf) {
        return Err(DeitError::Config(format!(
            "`{path}` is not a configuration key"
        )));
    }
    cur.insert(leaf.into(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz;

    #[test]
    fn quantities_need_units() {
        assert!((parse_quantity("0.68 MHz", Dim::Frequency).unwrap() - mhz(0.68)).abs() < 1e-9);
        assert_eq!(parse_quantity("1.6 mm", Dim::Length).unwrap(), 1.6e-3);
        assert_eq!(parse_quantity("1e14 cm^-3", Dim::Density).unwrap(), 1e20);
        assert!(parse_quantity("0.68", Dim::Frequency).is_err());
        assert!(parse_quantity("0.68 mm", Dim::Frequency).is_err());
    }

    #[test]
    fn every_preset_resolves() {
        for p in Preset::ALL {
            let c = RunConfig::from_preset(p).unwrap();
            assert_eq!(c.preset, p);
        }
        let f = RunConfig::from_preset(Preset::Fig2).unwrap();
        assert_eq!(f.field, 150.0);
        assert!((f.gamma - mhz(5.73)).abs() < 1e-6);
        assert_eq!(f.model.tiers, vec![Tier::Sat, Tier::Eat, Tier::Num]);
        assert!((f.fields.far.unwrap().state6 - mhz(894.93)).abs() < 1e-6);
        assert_eq!((f.p1, f.p2), (0.4, 0.6));
        assert!((f.mismatch_check.unwrap() - mhz(-12.93)).abs() < 1e-6);
    }

    #[test]
    fn user_layer_overrides_and_reports_lines() {
        let text = "preset = \"fig2\"\n[fields]\nomega1 = \"0.5 MHz\"\n";
        let c = RunConfig::from_layers(None, Some(("mine.cfg", text)), Some(1e-9)).unwrap();
        assert_eq!(c.preset, Preset::Fig2);
        assert!((c.fields.omega1 - mhz(0.5)).abs() < 1e-9);
        assert_eq!(c.tol.rtol, 1e-9);
        let bad = "[fields]\nomega1 = \"0.5\"\n";
        let e = RunConfig::from_layers(None, Some(("mine.cfg", bad)), None)
            .unwrap_err()
            .to_string();
        assert!(
            e.contains("mine.cfg:2") && e.contains("fields.omega1"),
            "{e}"
        );
        let unknown = "[fields]\nomega9 = \"0.5 MHz\"\n";
        let e = RunConfig::from_layers(None, Some(("mine.cfg", unknown)), None)
            .unwrap_err()
            .to_string();
        assert!(e.contains("omega9") && e.contains("mine.cfg:2"), "{e}");
        let syntax = "[fields\n";
        assert!(
            RunConfig::from_layers(None, Some(("mine.cfg", syntax)), None)
                .unwrap_err()
                .is_config()
        );
    }

    #[test]
    fn sweep_axes_are_checked() {
        let ok = "[sweep]\naxes = [{ parameter = \"atom.field\", values = [\"0 G\", \"50 G\"] }]\n";
        let c = RunConfig::from_layers(None, Some(("s.cfg", ok)), None).unwrap();
        assert_eq!(c.sweep[0].values.len(), 2);
        let p = c
            .with_override("atom.field", &c.sweep[0].values[1])
            .unwrap();
        assert_eq!(p.field, 50.0);
        let empty = "[sweep]\naxes = [{ parameter = \"atom.field\", values = [] }]\n";
        assert!(RunConfig::from_layers(None, Some(("s.cfg", empty)), None).is_err());
        let unknown = "[sweep]\naxes = [{ parameter = \"atom.colour\", values = [1] }]\n";
        assert!(RunConfig::from_layers(None, Some(("s.cfg", unknown)), None).is_err());
    }

    #[test]
    fn header_embeds_resolved_values() {
        let c = RunConfig::from_preset(Preset::Fig2).unwrap();
        let h = c.header_lines().join("\n");
        assert!(
            h.contains("omega1 = \"0.68 MHz\"") && h.contains("preset = \"fig2\""),
            "{h}"
        );
    }
}
