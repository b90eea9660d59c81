//! Flat `key = value` run configuration.
//!
//! Sources are layered as preset, then config file, then `--set` overrides.
//! Keys inside one exclusive group (for example `r` and `eta`) replace each
//! other across layers, but naming two of them in the same layer is an error.

use std::collections::BTreeMap;
use std::fmt;

use qarray::dynamics::{LatticeStepper, EG, GE};
use qarray::fockcheck::{FockStepper, DEFAULT_NNZ_CAP};
use qarray::interaction::CouplingVariant;
use qarray::model::{band_edge_detuning, squeezed_frame, SqueezedFrame, SystemParams, DEFAULT_RATIO_MIN};

use crate::error::CliError;
use crate::presets;

/// Every accepted key, in the order used when echoing a resolved config.
pub const KEYS: &[&str] = &[
    "r",
    "eta",
    "delta_a",
    "delta_s",
    "delta_q",
    "Delta",
    "atom_offset",
    "J",
    "phi",
    "G",
    "gamma",
    "N",
    "j",
    "l",
    "kappa_edge",
    "d",
    "variant",
    "oracle",
    "engine",
    "stepper",
    "initial",
    "t_max",
    "t_max_ent",
    "samples",
    "n_sites",
    "n_max",
    "fock_atoms",
    "fock_stepper",
    "ratio_min",
    "max_dev_limit",
    "nnz_cap",
    "digits",
];

const GROUPS: &[&[&str]] = &[
    &["r", "eta"],
    &["delta_a", "delta_s"],
    &["delta_q", "Delta", "atom_offset"],
    &["t_max", "t_max_ent"],
];

const MAX_SWEEP: usize = 1_000_000;

/// One source of `key = value` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub source: String,
    pub entries: Vec<(String, String)>,
}

impl Layer {
    pub fn parse(source: &str, text: &str) -> Result<Self, CliError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = split_pair(line).ok_or_else(|| CliError::usage(format!("{source}:{}: expected key = value", i + 1)))?;
            entries.push((k, v));
        }
        let layer = Self { source: source.to_string(), entries };
        layer.check_keys()?;
        Ok(layer)
    }

    pub fn from_overrides(sets: &[String]) -> Result<Self, CliError> {
        let entries = sets
            .iter()
            .map(|s| split_pair(s).ok_or_else(|| CliError::usage(format!("--set {s}: expected key=value"))))
            .collect::<Result<Vec<_>, _>>()?;
        let layer = Self { source: "--set".to_string(), entries };
        layer.check_keys()?;
        Ok(layer)
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        let text = presets::text(name)
            .ok_or_else(|| CliError::usage(format!("unknown preset `{name}` (known: {})", presets::NAMES.join(", "))))?;
        Self::parse(&format!("preset {name}"), &text)
    }

    fn check_keys(&self) -> Result<(), CliError> {
        for (k, _) in &self.entries {
            if !KEYS.contains(&k.as_str()) {
                return Err(CliError::usage(format!("{}: unknown key `{k}`", self.source)));
            }
        }
        for group in GROUPS {
            let named: Vec<&str> = group.iter().copied().filter(|g| self.entries.iter().any(|(k, _)| k == g)).collect();
            if named.len() > 1 {
                return Err(CliError::usage(format!("{}: keys {} are mutually exclusive", self.source, named.join(", "))));
            }
        }
        Ok(())
    }
}

fn split_pair(s: &str) -> Option<(String, String)> {
    let (k, v) = s.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    (!k.is_empty() && !v.is_empty()).then(|| (k.to_string(), v.to_string()))
}

/// Later layers win; a key replaces every other member of its group.
pub fn merge(layers: &[Layer]) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    for layer in layers {
        for (k, v) in &layer.entries {
            if let Some(group) = GROUPS.iter().find(|g| g.contains(&k.as_str())) {
                for other in group.iter() {
                    map.remove(*other);
                }
            }
            map.insert(k.clone(), v.clone());
        }
    }
    map
}

/// Real-valued sweep: `a,b,c` or inclusive `start:stop:step`.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Sweep {
    pub fn single(x: f64) -> Self {
        Self::List(vec![x])
    }

    pub fn parse(key: &str, s: &str) -> Result<Self, CliError> {
        if s.contains(':') {
            let parts: Vec<f64> = s.split(':').map(|p| parse_f64(key, p)).collect::<Result<_, _>>()?;
            let [start, stop, step] = parts[..] else {
                return Err(CliError::usage(format!("{key}: range must be start:stop:step")));
            };
            if step <= 0.0 || stop < start {
                return Err(CliError::usage(format!("{key}: range needs step > 0 and stop >= start")));
            }
            if (stop - start) / step >= MAX_SWEEP as f64 {
                return Err(CliError::usage(format!("{key}: range exceeds {MAX_SWEEP} points")));
            }
            return Ok(Self::Range { start, stop, step });
        }
        let values: Vec<f64> = s.split(',').map(|p| parse_f64(key, p)).collect::<Result<_, _>>()?;
        Ok(Self::List(values))
    }

    pub fn values(&self) -> Vec<f64> {
        match *self {
            Self::List(ref v) => v.clone(),
            Self::Range { start, stop, step } => {
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..n).map(|k| start + k as f64 * step).collect()
            }
        }
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::List(v) => write!(f, "{}", v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")),
            Self::Range { start, stop, step } => write!(f, "{start}:{stop}:{step}"),
        }
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64, CliError> {
    let x: f64 = s.trim().parse().map_err(|_| CliError::usage(format!("{key}: `{s}` is not a number")))?;
    if !x.is_finite() {
        return Err(CliError::usage(format!("{key}: `{s}` is not finite")));
    }
    Ok(x)
}

fn parse_int<T: std::str::FromStr>(key: &str, s: &str) -> Result<T, CliError> {
    s.trim().parse().map_err(|_| CliError::usage(format!("{key}: `{s}` is not an integer")))
}

fn parse_bool(key: &str, s: &str) -> Result<bool, CliError> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::usage(format!("{key}: `{s}` is not a boolean"))),
    }
}

/// `a,b,c` or inclusive `start:stop[:step]`.
fn parse_int_list<T>(key: &str, s: &str) -> Result<Vec<T>, CliError>
where
    T: std::str::FromStr + Copy + Into<i64> + TryFrom<i64>,
{
    if s.contains(':') {
        let parts: Vec<i64> = s.split(':').map(|p| parse_int(key, p)).collect::<Result<_, _>>()?;
        let (start, stop, step) = match parts[..] {
            [a, b] => (a, b, 1),
            [a, b, c] => (a, b, c),
            _ => return Err(CliError::usage(format!("{key}: range must be start:stop[:step]"))),
        };
        if step < 1 || stop < start || (stop - start) / step >= MAX_SWEEP as i64 {
            return Err(CliError::usage(format!("{key}: range needs step >= 1 and stop >= start")));
        }
        return (start..=stop)
            .step_by(step as usize)
            .map(|x| T::try_from(x).map_err(|_| CliError::usage(format!("{key}: {x} out of range"))))
            .collect();
    }
    s.split(',').map(|p| parse_int(key, p)).collect()
}

fn choice<T: Copy>(key: &str, s: &str, options: &[(&str, T)]) -> Result<T, CliError> {
    options.iter().find(|(name, _)| *name == s).map(|(_, v)| *v).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        CliError::usage(format!("{key}: `{s}` is not one of {}", names.join(", ")))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Drive {
    /// Squeezing given directly; `η` follows from `Δ_a`.
    Squeezing(Sweep),
    /// `η` taken from the parameters.
    Amplitude,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cavity {
    /// `Δ_a` taken from the parameters.
    Fixed,
    /// Frame detuning `Δ_s`, so `Δ_a = Δ_s cosh 2r`.
    FromFrame(Sweep),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomLevel {
    /// `Δ_q` taken from the parameters.
    Absolute,
    /// `Δ` above the upper band edge.
    AboveBand(f64),
    /// Offset from the frame cavity detuning `Δ_s`.
    FromCavity(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Effective,
    Lattice,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    Default,
    Absolute(f64),
    /// Multiple of the entangling time.
    Entangle(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockSettings {
    pub n_sites: usize,
    /// `None` picks the smallest cutoff meeting the truncation bound.
    pub n_max: Option<usize>,
    pub atoms: Vec<usize>,
    pub stepper: FockStepper,
    pub ratio_min: f64,
    pub max_dev_limit: f64,
    pub nnz_cap: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    /// Physical parameters before the sweep and atom placement are applied.
    pub base: SystemParams<f64>,
    pub drive: Drive,
    pub cavity: Cavity,
    pub atoms: AtomLevel,
    pub separations: Option<Vec<i64>>,
    pub variant: CouplingVariant,
    pub oracle: bool,
    pub engine: Engine,
    pub stepper: LatticeStepper,
    /// Initially excited basis state, [`EG`] or [`GE`].
    pub initial: usize,
    pub window: Window,
    pub samples: Option<usize>,
    pub fock: FockSettings,
    pub digits: usize,
}

/// One fully resolved parameter point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub r: f64,
    pub params: SystemParams<f64>,
    pub frame: SqueezedFrame<f64>,
    /// Atomic detuning above the band edge.
    pub big_delta: f64,
}

impl RunConfig {
    pub fn load(preset: Option<&str>, file: Option<(&str, &str)>, sets: &[String]) -> Result<Self, CliError> {
        let mut layers = Vec::new();
        if let Some(name) = preset {
            layers.push(Layer::preset(name)?);
        }
        if let Some((source, text)) = file {
            layers.push(Layer::parse(source, text)?);
        }
        layers.push(Layer::from_overrides(sets)?);
        let mut cfg = Self::from_map(&merge(&layers))?;
        cfg.preset = preset.map(str::to_string);
        Ok(cfg)
    }

    pub fn from_preset(name: &str) -> Result<Self, CliError> {
        Self::load(Some(name), None, &[])
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let get = |k: &str| map.get(k).map(String::as_str);
        let num = |k: &str, default: f64| get(k).map_or(Ok(default), |s| parse_f64(k, s));

        let defaults = SystemParams::<f64>::default();
        let base = SystemParams {
            delta_a: num("delta_a", defaults.delta_a)?,
            delta_q: num("delta_q", defaults.delta_q)?,
            hopping: num("J", defaults.hopping)?,
            eta: num("eta", defaults.eta)?,
            phi: num("phi", defaults.phi)?,
            coupling: num("G", defaults.coupling)?,
            gamma: num("gamma", defaults.gamma)?,
            half_size: get("N").map_or(Ok(defaults.half_size), |s| parse_int("N", s))?,
            atom_a: get("j").map_or(Ok(defaults.atom_a), |s| parse_int("j", s))?,
            atom_b: get("l").map_or(Ok(defaults.atom_b), |s| parse_int("l", s))?,
            kappa_edge: num("kappa_edge", defaults.kappa_edge)?,
        };

        let drive = match (get("r"), get("eta")) {
            (Some(s), _) => Drive::Squeezing(Sweep::parse("r", s)?),
            (None, Some(_)) => Drive::Amplitude,
            (None, None) => return Err(CliError::usage("exactly one of `r` or `eta` must be given")),
        };
        let cavity = match get("delta_s") {
            Some(s) => {
                if drive == Drive::Amplitude {
                    return Err(CliError::usage("`delta_s` needs `r`; with `eta` give `delta_a`"));
                }
                Cavity::FromFrame(Sweep::parse("delta_s", s)?)
            }
            None => Cavity::Fixed,
        };
        let atoms = match (get("Delta"), get("atom_offset")) {
            (Some(s), _) => AtomLevel::AboveBand(parse_f64("Delta", s)?),
            (None, Some(s)) => AtomLevel::FromCavity(parse_f64("atom_offset", s)?),
            (None, None) => AtomLevel::Absolute,
        };
        let window = match (get("t_max"), get("t_max_ent")) {
            (Some(s), _) => Window::Absolute(parse_f64("t_max", s)?),
            (None, Some(s)) => Window::Entangle(parse_f64("t_max_ent", s)?),
            (None, None) => Window::Default,
        };
        if let Window::Absolute(t) | Window::Entangle(t) = window {
            if t <= 0.0 {
                return Err(CliError::usage("time window must be > 0"));
            }
        }

        let samples = get("samples").map(|s| parse_int::<usize>("samples", s)).transpose()?;
        if samples == Some(0) {
            return Err(CliError::usage("samples must be >= 1"));
        }
        let digits = get("digits").map_or(Ok(17), |s| parse_int::<usize>("digits", s))?;
        if !(1..=17).contains(&digits) {
            return Err(CliError::usage("digits must lie in 1..=17"));
        }

        let fock_atoms = get("fock_atoms").map_or(Ok(vec![1, 2]), |s| parse_int_list::<u32>("fock_atoms", s))?;
        if fock_atoms.is_empty() || fock_atoms.len() > 2 {
            return Err(CliError::usage("fock_atoms takes one or two site indices"));
        }
        let fock = FockSettings {
            n_sites: get("n_sites").map_or(Ok(3), |s| parse_int("n_sites", s))?,
            n_max: get("n_max").map(|s| parse_int("n_max", s)).transpose()?,
            atoms: fock_atoms.into_iter().map(|a| a as usize).collect(),
            stepper: get("fock_stepper").map_or(Ok(FockStepper::Krylov), |s| {
                choice("fock_stepper", s, &[("krylov", FockStepper::Krylov), ("rk4", FockStepper::Rk4)])
            })?,
            ratio_min: num("ratio_min", DEFAULT_RATIO_MIN)?,
            max_dev_limit: num("max_dev_limit", 0.05)?,
            nnz_cap: get("nnz_cap").map_or(Ok(DEFAULT_NNZ_CAP), |s| parse_int("nnz_cap", s))?,
        };

        let separations = get("d").map(|s| parse_int_list::<i64>("d", s)).transpose()?;
        if separations.as_ref().is_some_and(|d| d.iter().any(|&x| x < 0)) {
            return Err(CliError::usage("d must be >= 0"));
        }

        Ok(Self {
            preset: None,
            base,
            drive,
            cavity,
            atoms,
            separations,
            variant: get("variant").map_or(Ok(CouplingVariant::Dispersive), |s| {
                choice("variant", s, &[("dispersive", CouplingVariant::Dispersive), ("exact", CouplingVariant::ExactDelta)])
            })?,
            oracle: get("oracle").map_or(Ok(true), |s| parse_bool("oracle", s))?,
            engine: get("engine").map_or(Ok(Engine::Effective), |s| {
                choice("engine", s, &[("effective", Engine::Effective), ("lattice", Engine::Lattice), ("both", Engine::Both)])
            })?,
            stepper: get("stepper").map_or(Ok(LatticeStepper::Propagator), |s| {
                choice("stepper", s, &[("propagator", LatticeStepper::Propagator), ("rk4", LatticeStepper::Rk4)])
            })?,
            initial: get("initial").map_or(Ok(EG), |s| choice("initial", s, &[("eg", EG), ("ge", GE)]))?,
            window,
            samples,
            fock,
            digits,
        })
    }

    /// Sweep points in grid order: `r` outer, `Δ_s` inner.
    pub fn points(&self) -> Result<Vec<Point>, CliError> {
        let rs: Vec<Option<f64>> = match &self.drive {
            Drive::Squeezing(s) => s.values().into_iter().map(Some).collect(),
            Drive::Amplitude => vec![None],
        };
        let cavities: Vec<Option<f64>> = match &self.cavity {
            Cavity::Fixed => vec![None],
            Cavity::FromFrame(s) => s.values().into_iter().map(Some).collect(),
        };
        let mut out = Vec::with_capacity(rs.len() * cavities.len());
        for &r in &rs {
            for &ds in &cavities {
                out.push(self.point(r, ds)?);
            }
        }
        Ok(out)
    }

    fn point(&self, r: Option<f64>, delta_s: Option<f64>) -> Result<Point, CliError> {
        let mut p = self.base;
        if let Some(r) = r {
            if r < 0.0 {
                return Err(CliError::Param(format!("r = {r} must be >= 0")));
            }
            if let Some(ds) = delta_s {
                p.delta_a = ds * (2.0 * r).cosh();
            }
            p = p.with_squeezing(r);
        }
        p.validate()?;
        let frame = squeezed_frame(&p)?;
        match self.atoms {
            AtomLevel::Absolute => {}
            AtomLevel::AboveBand(d) => p.delta_q = frame.band_edge() + d,
            AtomLevel::FromCavity(o) => p.delta_q = frame.delta_s + o,
        }
        p.validate()?;
        let big_delta = match self.atoms {
            AtomLevel::AboveBand(d) => d,
            _ => band_edge_detuning(p.delta_q, &frame),
        };
        Ok(Point { r: r.unwrap_or(frame.r), big_delta, params: p, frame })
    }

    /// Separations for coupling sweeps; defaults to `|l − j|`.
    pub fn separation_list(&self) -> Vec<i64> {
        self.separations.clone().unwrap_or_else(|| vec![self.base.separation()])
    }

    /// Space-separated `key=value` list of the resolved configuration.
    pub fn describe(&self) -> String {
        let b = &self.base;
        let mut kv: Vec<(&str, String)> = Vec::new();
        match &self.drive {
            Drive::Squeezing(s) => kv.push(("r", s.to_string())),
            Drive::Amplitude => kv.push(("eta", b.eta.to_string())),
        }
        match &self.cavity {
            Cavity::Fixed => kv.push(("delta_a", b.delta_a.to_string())),
            Cavity::FromFrame(s) => kv.push(("delta_s", s.to_string())),
        }
        match self.atoms {
            AtomLevel::Absolute => kv.push(("delta_q", b.delta_q.to_string())),
            AtomLevel::AboveBand(d) => kv.push(("Delta", d.to_string())),
            AtomLevel::FromCavity(o) => kv.push(("atom_offset", o.to_string())),
        }
        kv.extend([
            ("J", b.hopping.to_string()),
            ("phi", b.phi.to_string()),
            ("G", b.coupling.to_string()),
            ("gamma", b.gamma.to_string()),
            ("N", b.half_size.to_string()),
            ("j", b.atom_a.to_string()),
            ("l", b.atom_b.to_string()),
            ("kappa_edge", b.kappa_edge.to_string()),
            ("d", join(&self.separation_list())),
            ("variant", match self.variant {
                CouplingVariant::Dispersive => "dispersive",
                CouplingVariant::ExactDelta => "exact",
            }
            .into()),
            ("oracle", self.oracle.to_string()),
            ("engine", match self.engine {
                Engine::Effective => "effective",
                Engine::Lattice => "lattice",
                Engine::Both => "both",
            }
            .into()),
            ("stepper", match self.stepper {
                LatticeStepper::Propagator => "propagator",
                LatticeStepper::Rk4 => "rk4",
            }
            .into()),
            ("initial", if self.initial == GE { "ge" } else { "eg" }.into()),
        ]);
        match self.window {
            Window::Default => {}
            Window::Absolute(t) => kv.push(("t_max", t.to_string())),
            Window::Entangle(k) => kv.push(("t_max_ent", k.to_string())),
        }
        if let Some(s) = self.samples {
            kv.push(("samples", s.to_string()));
        }
        let f = &self.fock;
        kv.push(("n_sites", f.n_sites.to_string()));
        if let Some(n) = f.n_max {
            kv.push(("n_max", n.to_string()));
        }
        kv.extend([
            ("fock_atoms", join(&f.atoms)),
            ("fock_stepper", match f.stepper {
                FockStepper::Krylov => "krylov",
                FockStepper::Rk4 => "rk4",
            }
            .into()),
            ("ratio_min", f.ratio_min.to_string()),
            ("max_dev_limit", f.max_dev_limit.to_string()),
            ("nnz_cap", f.nnz_cap.to_string()),
            ("digits", self.digits.to_string()),
        ]);
        let preset = self.preset.as_deref().unwrap_or("none");
        let body: Vec<String> = kv.into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("preset={preset} {}", body.join(" "))
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}
