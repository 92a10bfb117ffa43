//! Experiment configuration: a TOML file with `[section]` headers and flat
//! `key = value` entries, plus `section.key=value` overrides from the CLI.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::scene::{AmplitudeLaw, AngleDensity, Lattice, SphereDensity};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Coherence,
    Recovery,
    Stability,
    Dt,
    Reciprocity,
    Resonance,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        Self::Coherence,
        Self::Recovery,
        Self::Stability,
        Self::Dt,
        Self::Reciprocity,
        Self::Resonance,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Coherence => "mc-coherence",
            Self::Recovery => "mc-recovery",
            Self::Stability => "mc-stability",
            Self::Dt => "mc-dt",
            Self::Reciprocity => "reciprocity",
            Self::Resonance => "resonance",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind `{s}`")))
    }
}

/// Forward model used to synthesise data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForwardModel {
    /// Single-scattering data `Y = Φν`.
    Born,
    /// Foldy-Lax data with `X = νu`.
    Exact,
}

impl ForwardModel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Born => "born",
            Self::Exact => "exact",
        }
    }
}

impl FromStr for ForwardModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "born" => Ok(Self::Born),
            "exact" => Ok(Self::Exact),
            _ => Err(Error::Config(format!("unknown forward model `{s}` (born | exact)"))),
        }
    }
}

/// Textual angle density. Planar forms: `uniform`, `uniform:a:b`,
/// `bump:a:b:k`, `narrow:theta0:width`. Spherical forms: `uniform`,
/// `tilted:a` for `(1 + a cos θ cos φ)/(4π)` with `|a| < 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum DensitySpec {
    Uniform,
    UniformOn(f64, f64),
    Bump(f64, f64, u32),
    Narrow(f64, f64),
    Tilted(f64),
}

impl DensitySpec {
    pub fn planar(&self) -> Result<AngleDensity> {
        match *self {
            Self::Uniform => Ok(AngleDensity::uniform()),
            Self::UniformOn(a, b) => AngleDensity::uniform_on(a, b),
            Self::Bump(a, b, k) => AngleDensity::bump(a, b, k),
            Self::Narrow(t, w) => AngleDensity::narrow(t, w),
            Self::Tilted(_) => Err(Error::Config("`tilted` is a spherical density".into())),
        }
        .map_err(|e| Error::Config(format!("density {self}: {e}")))
    }

    pub fn sphere(&self) -> Result<SphereDensity> {
        match *self {
            Self::Uniform => Ok(SphereDensity::uniform()),
            Self::Tilted(a) => {
                if !(a.abs() < 1.0) {
                    return Err(Error::Config(format!("tilt {a} must satisfy |a| < 1")));
                }
                SphereDensity::new(
                    move |t, p| (1.0 + a * t.cos() * p.cos()) / (4.0 * PI),
                    (1.0 + a.abs()) / (4.0 * PI),
                    1,
                )
                .map_err(|e| Error::Config(format!("density {self}: {e}")))
            }
            _ => Err(Error::Config(format!("density {self} is planar only"))),
        }
    }
}

impl fmt::Display for DensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform => write!(f, "uniform"),
            Self::UniformOn(a, b) => write!(f, "uniform:{a}:{b}"),
            Self::Bump(a, b, k) => write!(f, "bump:{a}:{b}:{k}"),
            Self::Narrow(t, w) => write!(f, "narrow:{t}:{w}"),
            Self::Tilted(a) => write!(f, "tilted:{a}"),
        }
    }
}

fn parse_fields<const N: usize>(spec: &str, parts: &[&str]) -> Result<[f64; N]> {
    if parts.len() != N {
        return Err(Error::Config(format!("`{spec}` expects {N} numeric fields")));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("`{p}` in `{spec}` is not a number")))?;
    }
    Ok(out)
}

impl FromStr for DensitySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut it = s.split(':');
        let head = it.next().unwrap_or_default().trim();
        let rest: Vec<&str> = it.collect();
        match head {
            "uniform" if rest.is_empty() => Ok(Self::Uniform),
            "uniform" => {
                let [a, b] = parse_fields(s, &rest)?;
                Ok(Self::UniformOn(a, b))
            }
            "bump" => {
                let [a, b, k] = parse_fields(s, &rest)?;
                if k < 0.0 || k.fract() != 0.0 {
                    return Err(Error::Config(format!("bump order in `{s}` must be a nonnegative integer")));
                }
                Ok(Self::Bump(a, b, k as u32))
            }
            "narrow" => {
                let [t, w] = parse_fields(s, &rest)?;
                Ok(Self::Narrow(t, w))
            }
            "tilted" => {
                let [a] = parse_fields(s, &rest)?;
                Ok(Self::Tilted(a))
            }
            _ => Err(Error::Config(format!("unknown density `{s}`"))),
        }
    }
}

/// Target sparsity: an explicit sweep, or per trial the largest `s` allowed
/// by the measured coherence, `⌊½(1 + 1/μ)⌋`.
#[derive(Clone, Debug, PartialEq)]
pub enum SparsitySpec {
    Fixed(Vec<usize>),
    Spark,
}

impl SparsitySpec {
    pub fn label(&self, s: Option<usize>) -> String {
        match (self, s) {
            (Self::Spark, _) => "spark".into(),
            (Self::Fixed(_), Some(s)) => s.to_string(),
            (Self::Fixed(v), None) => format!("{v:?}"),
        }
    }

    /// Sweep points; `Spark` yields a single `None` entry.
    pub fn points(&self) -> Vec<Option<usize>> {
        match self {
            Self::Fixed(v) => v.iter().map(|&s| Some(s)).collect(),
            Self::Spark => vec![None],
        }
    }
}

pub fn parse_amplitude(s: &str) -> Result<AmplitudeLaw<f64>> {
    let mut it = s.split(':');
    let head = it.next().unwrap_or_default().trim();
    let rest: Vec<&str> = it.collect();
    let law = match head {
        "constant" => {
            let [a] = parse_fields(s, &rest)?;
            AmplitudeLaw::Constant(a)
        }
        "uniform" => {
            let [lo, hi] = parse_fields(s, &rest)?;
            AmplitudeLaw::Uniform { lo, hi }
        }
        _ => return Err(Error::Config(format!("unknown amplitude law `{s}`"))),
    };
    let ok = match law {
        AmplitudeLaw::Constant(a) => a > 0.0 && a.is_finite(),
        AmplitudeLaw::Uniform { lo, hi } => lo > 0.0 && hi >= lo && hi.is_finite(),
    };
    if !ok {
        return Err(Error::Config(format!("amplitude law `{s}` needs positive finite magnitudes")));
    }
    Ok(law)
}

pub fn amplitude_string(law: &AmplitudeLaw<f64>) -> String {
    match law {
        AmplitudeLaw::Constant(a) => format!("constant:{a}"),
        AmplitudeLaw::Uniform { lo, hi } => format!("uniform:{lo}:{hi}"),
    }
}

/// Full description of one experiment run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub model: ForwardModel,
    pub trials: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub ell: f64,
    pub side: usize,
    pub dim: usize,
    /// Sampling directions or near-field sensors.
    pub n: usize,
    /// Incident waves.
    pub p: usize,
    pub incident: DensitySpec,
    pub sampling: DensitySpec,
    /// Near-field aperture `L`.
    pub aperture: f64,
    /// Near-field standoff `Δ_min`.
    pub standoff: f64,
    pub omega: Vec<f64>,
    pub sparsity: SparsitySpec,
    pub amplitude: AmplitudeLaw<f64>,
    pub noise: Vec<f64>,
    pub delta: f64,
    pub tau: f64,
    /// Failure level `ε` of the sparsity bound and the exponent `q`.
    pub epsilon: f64,
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut cfg = Self {
            kind,
            model: ForwardModel::Born,
            trials: 100,
            seed: 0,
            output: None,
            ell: 1.0,
            side: 8,
            dim: 2,
            n: 30,
            p: 30,
            incident: DensitySpec::Uniform,
            sampling: DensitySpec::Uniform,
            aperture: 4.0,
            standoff: 1.0,
            omega: vec![20.0],
            sparsity: SparsitySpec::Fixed(vec![1]),
            amplitude: AmplitudeLaw::Constant(1.0),
            noise: vec![0.0],
            delta: 0.1,
            tau: 0.05,
            epsilon: 0.05,
        };
        match kind {
            ExperimentKind::Coherence => cfg.trials = 200,
            ExperimentKind::Recovery => {}
            ExperimentKind::Stability => {
                cfg.model = ForwardModel::Exact;
                cfg.p = 1;
                cfg.n = 40;
                cfg.sparsity = SparsitySpec::Fixed(vec![3]);
                cfg.amplitude = AmplitudeLaw::Constant(0.01);
                cfg.noise = vec![1e-4, 1e-3];
            }
            ExperimentKind::Dt => {
                cfg.side = 4;
                cfg.omega = vec![2.5, 5.0, 10.0, 17.5, 25.0];
                cfg.trials = 50;
            }
            ExperimentKind::Reciprocity => {
                cfg.model = ForwardModel::Exact;
                cfg.sparsity = SparsitySpec::Fixed(vec![1, 2, 3, 4, 5]);
                cfg.amplitude = AmplitudeLaw::Uniform { lo: 0.01, hi: 0.1 };
                cfg.trials = 20;
            }
            ExperimentKind::Resonance => {
                cfg.model = ForwardModel::Exact;
                cfg.side = 4;
                cfg.amplitude = AmplitudeLaw::Uniform { lo: 0.5, hi: 2.0 };
                cfg.trials = 10;
            }
        }
        cfg
    }

    /// Parses a config file; keys absent from the file keep the defaults of
    /// the experiment kind (`experiment.kind`, or `fallback` when missing).
    pub fn from_toml(text: &str, fallback: ExperimentKind) -> Result<Self> {
        Self::from_toml_with(text, fallback, &[])
    }

    /// Like [`Self::from_toml`], with `section.key=value` overrides applied
    /// on top of the file. Override values are read as TOML scalars or
    /// arrays, falling back to a bare string.
    pub fn from_toml_with(text: &str, fallback: ExperimentKind, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(format!("invalid config: {}", e.message())))?;
        for (key, value) in overrides {
            set_path(&mut table, key, parse_override(value))?;
        }
        Self::from_table(&table, fallback)
    }

    fn from_table(table: &Table, fallback: ExperimentKind) -> Result<Self> {
        for (name, v) in table {
            let Value::Table(sec) = v else {
                return Err(Error::Config(format!("top-level key `{name}` must be a [section]")));
            };
            let known: &[&str] = match name.as_str() {
                "experiment" => &["kind", "model", "trials", "seed", "output"],
                "lattice" => &["ell", "side", "dim"],
                "sensors" => &["n", "p", "incident", "sampling", "aperture", "standoff"],
                "target" => &["sparsity", "amplitude"],
                "physics" => &["omega", "noise"],
                "theory" => &["delta", "tau", "epsilon"],
                _ => return Err(Error::Config(format!("unknown section [{name}]"))),
            };
            if let Some(k) = sec.keys().find(|k| !known.contains(&k.as_str())) {
                return Err(Error::Config(format!("unknown key `{k}` in [{name}]")));
            }
        }
        let get = |sec: &str, key: &str| table.get(sec).and_then(|s| s.get(key));
        let kind = match get("experiment", "kind") {
            Some(v) => as_str(v, "experiment.kind")?.parse()?,
            None => fallback,
        };
        let mut cfg = Self::defaults(kind);
        if let Some(v) = get("experiment", "model") {
            cfg.model = as_str(v, "experiment.model")?.parse()?;
        }
        if let Some(v) = get("experiment", "trials") {
            cfg.trials = as_count(v, "experiment.trials")?;
        }
        if let Some(v) = get("experiment", "seed") {
            cfg.seed = as_seed(v)?;
        }
        if let Some(v) = get("experiment", "output") {
            cfg.output = Some(PathBuf::from(as_str(v, "experiment.output")?));
        }
        if let Some(v) = get("lattice", "ell") {
            cfg.ell = as_f64(v, "lattice.ell")?;
        }
        if let Some(v) = get("lattice", "side") {
            cfg.side = as_count(v, "lattice.side")?;
        }
        if let Some(v) = get("lattice", "dim") {
            cfg.dim = as_count(v, "lattice.dim")?;
        }
        if let Some(v) = get("sensors", "n") {
            cfg.n = as_count(v, "sensors.n")?;
        }
        if let Some(v) = get("sensors", "p") {
            cfg.p = as_count(v, "sensors.p")?;
        }
        if let Some(v) = get("sensors", "incident") {
            cfg.incident = as_str(v, "sensors.incident")?.parse()?;
        }
        if let Some(v) = get("sensors", "sampling") {
            cfg.sampling = as_str(v, "sensors.sampling")?.parse()?;
        }
        if let Some(v) = get("sensors", "aperture") {
            cfg.aperture = as_f64(v, "sensors.aperture")?;
        }
        if let Some(v) = get("sensors", "standoff") {
            cfg.standoff = as_f64(v, "sensors.standoff")?;
        }
        if let Some(v) = get("target", "sparsity") {
            cfg.sparsity = match v {
                Value::String(s) if s == "spark" => SparsitySpec::Spark,
                _ => SparsitySpec::Fixed(
                    as_list(v, "target.sparsity")?
                        .iter()
                        .map(|x| as_count(x, "target.sparsity"))
                        .collect::<Result<_>>()?,
                ),
            };
        }
        if let Some(v) = get("target", "amplitude") {
            cfg.amplitude = parse_amplitude(as_str(v, "target.amplitude")?)?;
        }
        if let Some(v) = get("physics", "omega") {
            cfg.omega = as_f64_list(v, "physics.omega")?;
        }
        if let Some(v) = get("physics", "noise") {
            cfg.noise = as_f64_list(v, "physics.noise")?;
        }
        if let Some(v) = get("theory", "delta") {
            cfg.delta = as_f64(v, "theory.delta")?;
        }
        if let Some(v) = get("theory", "tau") {
            cfg.tau = as_f64(v, "theory.tau")?;
        }
        if let Some(v) = get("theory", "epsilon") {
            cfg.epsilon = as_f64(v, "theory.epsilon")?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks counts, ranges and sweep monotonicity.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 || self.side == 0 || self.n == 0 {
            return bad("trials, lattice side and n must be at least 1".into());
        }
        if self.dim != 2 && self.dim != 3 {
            return bad(format!("dimension {} must be 2 or 3", self.dim));
        }
        if !(self.ell > 0.0 && self.ell.is_finite()) {
            return bad(format!("lattice spacing {} must be positive", self.ell));
        }
        if !(self.aperture > 0.0 && self.standoff > 0.0) {
            return bad("aperture and standoff must be positive".into());
        }
        if ![self.delta, self.tau, self.epsilon].iter().all(|&x| x > 0.0 && x < 1.0) {
            return bad("delta, tau and epsilon must lie in (0, 1)".into());
        }
        check_sweep("physics.omega", &self.omega, |w| w > 0.0)?;
        check_sweep("physics.noise", &self.noise, |e| e >= 0.0)?;
        let m = self.m();
        match &self.sparsity {
            SparsitySpec::Fixed(v) => {
                if v.is_empty() || v.iter().any(|&s| s == 0 || s > m) {
                    return bad(format!("sparsity sweep {v:?} must be nonempty with entries in 1..={m}"));
                }
                let f: Vec<f64> = v.iter().map(|&s| s as f64).collect();
                check_sweep("target.sparsity", &f, |_| true)?;
            }
            SparsitySpec::Spark => {}
        }
        let planar = self.dim == 2;
        for d in [&self.incident, &self.sampling] {
            if planar {
                d.planar()?;
            } else {
                d.sphere()?;
            }
        }
        match self.kind {
            ExperimentKind::Coherence if self.p == 0 => bad("mc-coherence needs p >= 1".into()),
            ExperimentKind::Recovery | ExperimentKind::Stability
                if self.model == ForwardModel::Exact && self.p != 1 =>
            {
                bad("the exact model uses a single incident wave (p = 1)".into())
            }
            ExperimentKind::Recovery if self.model == ForwardModel::Born && self.p == 0 => {
                bad("the Born model needs p >= 1".into())
            }
            ExperimentKind::Stability if self.model != ForwardModel::Exact => {
                bad("mc-stability needs the exact model".into())
            }
            ExperimentKind::Stability | ExperimentKind::Reciprocity
                if self.sparsity == SparsitySpec::Spark =>
            {
                bad(format!("{} needs an explicit sparsity sweep", self.kind))
            }
            ExperimentKind::Resonance if m < 2 => bad("resonance needs at least two lattice sites".into()),
            _ => Ok(()),
        }
    }

    /// Number of lattice sites.
    pub fn m(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    pub fn lattice(&self) -> Result<Lattice<f64>> {
        Lattice::new(self.ell, self.side, self.dim)
    }

    /// Renders the config in the file format accepted by [`Self::from_toml`].
    pub fn to_toml(&self) -> String {
        let sparsity = match &self.sparsity {
            SparsitySpec::Fixed(v) => format!("{v:?}"),
            SparsitySpec::Spark => "\"spark\"".into(),
        };
        let list = |v: &[f64]| format!("[{}]", v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", "));
        let mut out = String::new();
        out.push_str("[experiment]\n");
        out.push_str(&format!("kind = \"{}\"\nmodel = \"{}\"\n", self.kind, self.model.as_str()));
        if self.seed > i64::MAX as u64 {
            out.push_str(&format!("trials = {}\nseed = \"{}\"\n", self.trials, self.seed));
        } else {
            out.push_str(&format!("trials = {}\nseed = {}\n", self.trials, self.seed));
        }
        if let Some(p) = &self.output {
            out.push_str(&format!("output = {:?}\n", p.display().to_string()));
        }
        out.push_str(&format!("\n[lattice]\nell = {:?}\nside = {}\ndim = {}\n", self.ell, self.side, self.dim));
        out.push_str(&format!(
            "\n[sensors]\nn = {}\np = {}\nincident = \"{}\"\nsampling = \"{}\"\naperture = {:?}\nstandoff = {:?}\n",
            self.n, self.p, self.incident, self.sampling, self.aperture, self.standoff
        ));
        out.push_str(&format!(
            "\n[target]\nsparsity = {sparsity}\namplitude = \"{}\"\n",
            amplitude_string(&self.amplitude)
        ));
        out.push_str(&format!("\n[physics]\nomega = {}\nnoise = {}\n", list(&self.omega), list(&self.noise)));
        out.push_str(&format!(
            "\n[theory]\ndelta = {:?}\ntau = {:?}\nepsilon = {:?}\n",
            self.delta, self.tau, self.epsilon
        ));
        out
    }
}

fn check_sweep(name: &str, v: &[f64], ok: impl Fn(f64) -> bool) -> Result<()> {
    if v.is_empty() || v.iter().any(|&x| !x.is_finite() || !ok(x)) {
        return Err(Error::Config(format!("{name} must be a nonempty list of admissible finite values")));
    }
    let up = v.windows(2).all(|w| w[0] <= w[1]);
    let down = v.windows(2).all(|w| w[0] >= w[1]);
    if !(up || down) {
        return Err(Error::Config(format!("{name} sweep must be monotone")));
    }
    Ok(())
}

fn parse_override(value: &str) -> Value {
    format!("v = {value}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(value.to_string()))
}

fn set_path(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let Some((sec, k)) = key.split_once('.') else {
        return Err(Error::Config(format!("override `{key}` must have the form section.key")));
    };
    let entry = table
        .entry(sec.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    match entry {
        Value::Table(t) => {
            t.insert(k.to_string(), value);
            Ok(())
        }
        _ => Err(Error::Config(format!("`{sec}` is not a section"))),
    }
}

fn as_str<'a>(v: &'a Value, key: &str) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| Error::Config(format!("{key} must be a string")))
}

fn as_f64(v: &Value, key: &str) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Config(format!("{key} must be a number"))),
    }
}

fn as_count(v: &Value, key: &str) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(Error::Config(format!("{key} must be a nonnegative integer"))),
    }
}

fn as_seed(v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        // Seeds above i64::MAX do not fit a TOML integer.
        Value::String(s) => s
            .parse()
            .map_err(|_| Error::Config(format!("seed `{s}` is not a u64"))),
        _ => Err(Error::Config("experiment.seed must be a nonnegative integer".into())),
    }
}

fn as_list<'a>(v: &'a Value, key: &str) -> Result<Vec<&'a Value>> {
    match v {
        Value::Array(a) => Ok(a.iter().collect()),
        Value::Integer(_) | Value::Float(_) => Ok(vec![v]),
        _ => Err(Error::Config(format!("{key} must be a number or a list of numbers"))),
    }
}

fn as_f64_list(v: &Value, key: &str) -> Result<Vec<f64>> {
    as_list(v, key)?.into_iter().map(|x| as_f64(x, key)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_for_every_kind() {
        for kind in ExperimentKind::ALL {
            let cfg = ExperimentConfig::defaults(kind);
            cfg.validate().unwrap();
            assert_eq!(kind.as_str().parse::<ExperimentKind>().unwrap(), kind);
        }
    }

    #[test]
    fn parses_sections_and_sweeps() {
        let text = r#"
[experiment]
kind = "mc-recovery"
model = "exact"
trials = 7
seed = 42

[lattice]
side = 6

[sensors]
p = 1
n = 25
sampling = "bump:0.5:2.5:3"

[target]
sparsity = [1, 2, 3]
amplitude = "uniform:0.01:0.02"

[physics]
omega = 15
"#;
        let cfg = ExperimentConfig::from_toml(text, ExperimentKind::Coherence).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Recovery);
        assert_eq!(cfg.model, ForwardModel::Exact);
        assert_eq!((cfg.trials, cfg.seed, cfg.side, cfg.n, cfg.p), (7, 42, 6, 25, 1));
        assert_eq!(cfg.sampling, DensitySpec::Bump(0.5, 2.5, 3));
        assert_eq!(cfg.sparsity, SparsitySpec::Fixed(vec![1, 2, 3]));
        assert_eq!(cfg.amplitude, AmplitudeLaw::Uniform { lo: 0.01, hi: 0.02 });
        assert_eq!(cfg.omega, vec![15.0]);
    }

    #[test]
    fn overrides_take_precedence() {
        let text = "[experiment]\ntrials = 5\n";
        let ov = vec![
            ("experiment.trials".to_string(), "9".to_string()),
            ("physics.omega".to_string(), "[10, 30, 100]".to_string()),
            ("sensors.incident".to_string(), "narrow:1.0:0.5".to_string()),
        ];
        let cfg = ExperimentConfig::from_toml_with(text, ExperimentKind::Coherence, &ov).unwrap();
        assert_eq!(cfg.trials, 9);
        assert_eq!(cfg.omega, vec![10.0, 30.0, 100.0]);
        assert_eq!(cfg.incident, DensitySpec::Narrow(1.0, 0.5));
    }

    #[test]
    fn rejects_invalid_configs() {
        let cases = [
            "[experiment]\ntrials = 0\n",
            "[physics]\nomega = [10, 5, 20]\n",
            "[physics]\nomega = -1.0\n",
            "[lattice]\ndim = 4\n",
            "[bogus]\nx = 1\n",
            "[lattice]\nspacing = 1\n",
            "[target]\nsparsity = [100]\n",
            "[sensors]\nincident = \"tilted:0.3\"\n",
            "[experiment]\nkind = \"mc-stability\"\nmodel = \"born\"\n",
            "not toml at all [",
        ];
        for text in cases {
            let err = ExperimentConfig::from_toml(text, ExperimentKind::Coherence).unwrap_err();
            assert!(err.is_config(), "{text}: {err}");
        }
    }

    #[test]
    fn round_trips_through_text() {
        for kind in ExperimentKind::ALL {
            let mut cfg = ExperimentConfig::defaults(kind);
            cfg.seed = u64::MAX - 1;
            cfg.output = Some(PathBuf::from("out/run.csv"));
            let back = ExperimentConfig::from_toml(&cfg.to_toml(), ExperimentKind::Coherence).unwrap();
            assert_eq!(back, cfg);
        }
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::Recovery);
        cfg.sparsity = SparsitySpec::Spark;
        cfg.dim = 3;
        cfg.side = 3;
        cfg.incident = DensitySpec::Tilted(0.5);
        let back = ExperimentConfig::from_toml(&cfg.to_toml(), ExperimentKind::Coherence).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn density_specs_parse_and_print() {
        for s in ["uniform", "uniform:0:3.14", "bump:0.5:2:2", "narrow:1.5:0.25", "tilted:0.5"] {
            let d: DensitySpec = s.parse().unwrap();
            assert_eq!(d.to_string().parse::<DensitySpec>().unwrap(), d);
        }
        assert!("bump:0:1:1.5".parse::<DensitySpec>().is_err());
        assert!("gauss:1".parse::<DensitySpec>().is_err());
        assert!(DensitySpec::Tilted(1.5).sphere().is_err());
    }
}
