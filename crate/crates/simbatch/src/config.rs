//! Experiment configuration: a flat TOML table.

use std::fmt;
use std::path::{Path, PathBuf};

use ldvote::dominance::{Bias, MetricKind, Radius};
use ldvote::dynamics::{Scheduler, SchedulerKind};
use ldvote::prefgen::Distribution;
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("not valid TOML: {0}")]
    Syntax(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("key `{key}`: expected {expected}")]
    Type { key: String, expected: &'static str },
    #[error("key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason: reason.into() }
}

fn type_err(key: &str, expected: &'static str) -> ConfigError {
    ConfigError::Type { key: key.to_string(), expected }
}

/// A radius entry: a fixed value, or `max` for the electorate size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RadiusSpec {
    Value(Radius),
    Max,
}

impl RadiusSpec {
    pub fn resolve(self, n: usize) -> Radius {
        match self {
            RadiusSpec::Value(r) => r,
            RadiusSpec::Max => Radius::integer(n as u64),
        }
    }
}

impl fmt::Display for RadiusSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadiusSpec::Value(r) => write!(f, "{r}"),
            RadiusSpec::Max => f.write_str("max"),
        }
    }
}

/// The keep radius of biased voters: absolute, or `a*r + b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeepSpec {
    Absolute(Radius),
    Affine { times: u64, plus: u64 },
}

impl KeepSpec {
    pub fn resolve(self, r: Radius) -> Option<Radius> {
        match self {
            KeepSpec::Absolute(k) => Some(k),
            KeepSpec::Affine { times, plus } => r.checked_mul(Radius::integer(times))?.checked_add(Radius::integer(plus)),
        }
    }
}

impl fmt::Display for KeepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeepSpec::Absolute(k) => write!(f, "{k}"),
            KeepSpec::Affine { times: 1, plus } => write!(f, "r+{plus}"),
            KeepSpec::Affine { times, plus } => write!(f, "{times}r+{plus}"),
        }
    }
}

fn parse_keep(key: &str, s: &str) -> Result<KeepSpec, ConfigError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some(idx) = t.find('r') {
        let times = match &t[..idx] {
            "" => 1,
            a => a.trim_end_matches('*').parse().map_err(|_| invalid(key, format!("bad expression `{s}`")))?,
        };
        let plus = match &t[idx + 1..] {
            "" => 0,
            b => b
                .strip_prefix('+')
                .and_then(|b| b.parse().ok())
                .ok_or_else(|| invalid(key, format!("bad expression `{s}`")))?,
        };
        return Ok(KeepSpec::Affine { times, plus });
    }
    t.parse().map(KeepSpec::Absolute).map_err(|e| invalid(key, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialState {
    Truthful,
    Random,
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitialState::Truthful => "truthful",
            InitialState::Random => "random",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub distribution: Distribution,
    pub metric: MetricKind,
    pub r: Vec<RadiusSpec>,
    pub k: Option<KeepSpec>,
    pub bias: Bias,
    /// Per-voter radii drawn from `0..=n/m` each run; replaces `r`.
    pub diverse: bool,
    pub scheduler: Scheduler,
    pub initial_state: InitialState,
    pub profiles_per_cell: usize,
    pub repetitions: usize,
    pub master_seed: u64,
    pub output_path: PathBuf,
    pub max_steps: Option<usize>,
    pub trace_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// A config with the defaults and the given grid.
    pub fn new(n: Vec<usize>, m: Vec<usize>, distribution: Distribution, metric: MetricKind, r: Vec<RadiusSpec>) -> Self {
        ExperimentConfig {
            n,
            m,
            distribution,
            metric,
            r,
            k: None,
            bias: Bias::None,
            diverse: false,
            scheduler: Scheduler::singleton(),
            initial_state: InitialState::Truthful,
            profiles_per_cell: 200,
            repetitions: 100,
            master_seed: 0,
            output_path: PathBuf::from("results.csv"),
            max_steps: None,
            trace_dir: None,
        }
    }

    /// Checks cross-key constraints.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(invalid("n", "needs at least one voter"));
        }
        if self.m.is_empty() || self.m.contains(&0) {
            return Err(invalid("m", "needs at least one candidate"));
        }
        if self.r.is_empty() && !self.diverse {
            return Err(invalid("r", "empty radius list"));
        }
        if self.profiles_per_cell == 0 {
            return Err(invalid("profiles_per_cell", "must be at least 1"));
        }
        if self.repetitions == 0 {
            return Err(invalid("repetitions", "must be at least 1"));
        }
        if self.max_steps == Some(0) {
            return Err(invalid("max_steps", "must be at least 1"));
        }
        if self.scheduler.group_cap == Some(0) {
            return Err(invalid("group_cap", "must be at least 1"));
        }
        if self.metric != MetricKind::Multiplicative {
            if let Some(bad) = self.r.iter().find(|r| matches!(r, RadiusSpec::Value(x) if !x.is_integer())) {
                return Err(invalid("r", format!("{bad} is not an integer, which only the multiplicative metric allows")));
            }
        }
        match (self.bias, self.k) {
            (Bias::None, Some(_)) => return Err(invalid("k", "set without a truth or lazy bias")),
            (Bias::Truth | Bias::Lazy, None) => return Err(ConfigError::Missing("k")),
            _ => {}
        }
        if let Some(k) = self.k {
            for &n in &self.n {
                for &m in &self.m {
                    for r in self.radii(n, m) {
                        match k.resolve(r) {
                            Some(kv) if kv > r => {}
                            _ => return Err(invalid("k", format!("k = {k} must exceed r = {r}"))),
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Every radius a voter can have in an `(n, m)` cell.
    fn radii(&self, n: usize, m: usize) -> Vec<Radius> {
        if self.diverse {
            (0..=(n / m) as u64).map(Radius::integer).collect()
        } else {
            self.r.iter().map(|r| r.resolve(n)).collect()
        }
    }
}

fn as_usize(key: &str, v: &Value) -> Result<usize, ConfigError> {
    v.as_integer().and_then(|i| usize::try_from(i).ok()).ok_or_else(|| type_err(key, "a non-negative integer"))
}

fn usize_list(key: &str, v: &Value) -> Result<Vec<usize>, ConfigError> {
    match v {
        Value::Array(a) => a.iter().map(|x| as_usize(key, x)).collect(),
        _ => Ok(vec![as_usize(key, v)?]),
    }
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str, ConfigError> {
    v.as_str().ok_or_else(|| type_err(key, "a string"))
}

fn as_bool(key: &str, v: &Value) -> Result<bool, ConfigError> {
    v.as_bool().ok_or_else(|| type_err(key, "a boolean"))
}

fn radius_spec(key: &str, v: &Value) -> Result<RadiusSpec, ConfigError> {
    match v {
        Value::Integer(i) => u64::try_from(*i)
            .map(|x| RadiusSpec::Value(Radius::integer(x)))
            .map_err(|_| invalid(key, "negative radius")),
        Value::Float(f) => f.to_string().parse().map(RadiusSpec::Value).map_err(|e| invalid(key, e)),
        Value::String(s) if s.trim().eq_ignore_ascii_case("max") || s.trim() == "n" => Ok(RadiusSpec::Max),
        Value::String(s) => s.parse().map(RadiusSpec::Value).map_err(|e| invalid(key, e)),
        _ => Err(type_err(key, "a radius (integer, fraction string, or \"max\")")),
    }
}

const KEYS: &[&str] = &[
    "n",
    "m",
    "distribution",
    "urn_k",
    "metric",
    "r",
    "k",
    "bias",
    "diverse",
    "scheduler",
    "group_cap",
    "opportunity_priority",
    "p_singleton",
    "initial_state",
    "profiles_per_cell",
    "repetitions",
    "master_seed",
    "output_path",
    "max_steps",
    "trace_dir",
];

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
    if let Some(k) = table.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(k.clone()));
    }
    let get = |k: &'static str| table.get(k);
    let req = |k: &'static str| get(k).ok_or(ConfigError::Missing(k));

    let n = usize_list("n", req("n")?)?;
    let m = usize_list("m", req("m")?)?;
    let mut distribution: Distribution =
        as_str("distribution", req("distribution")?)?.parse().map_err(|e| invalid("distribution", e))?;
    if let Some(v) = get("urn_k") {
        let k = as_usize("urn_k", v)?;
        match distribution {
            Distribution::Urn { .. } if (2..=3).contains(&k) => distribution = Distribution::Urn { k },
            Distribution::Urn { .. } => return Err(invalid("urn_k", "must be 2 or 3")),
            _ => return Err(invalid("urn_k", "only applies to the urn distribution")),
        }
    }
    let metric: MetricKind = match get("metric") {
        Some(v) => as_str("metric", v)?.parse().map_err(|e| invalid("metric", e))?,
        None => MetricKind::L1,
    };
    let diverse = get("diverse").map(|v| as_bool("diverse", v)).transpose()?.unwrap_or(false);
    let r = match get("r") {
        Some(Value::Array(a)) => a.iter().map(|x| radius_spec("r", x)).collect::<Result<_, _>>()?,
        Some(v) => vec![radius_spec("r", v)?],
        None if diverse => Vec::new(),
        None => return Err(ConfigError::Missing("r")),
    };

    let mut cfg = ExperimentConfig::new(n, m, distribution, metric, r);
    cfg.diverse = diverse;
    if let Some(v) = get("k") {
        cfg.k = Some(match v {
            Value::String(s) => parse_keep("k", s)?,
            other => match radius_spec("k", other)? {
                RadiusSpec::Value(x) => KeepSpec::Absolute(x),
                RadiusSpec::Max => return Err(invalid("k", "use an explicit value")),
            },
        });
    }
    if let Some(v) = get("bias") {
        cfg.bias = as_str("bias", v)?.parse().map_err(|e| invalid("bias", e))?;
    }
    if let Some(v) = get("scheduler") {
        cfg.scheduler = match as_str("scheduler", v)?.trim().to_ascii_lowercase().as_str() {
            "singleton" | "singleton_uniform" => Scheduler::singleton(),
            "group" | "group_random" => Scheduler::group(None, false),
            other => return Err(invalid("scheduler", format!("unknown scheduler `{other}`"))),
        };
    }
    let group_only = |key: &str, cfg: &ExperimentConfig| {
        if cfg.scheduler.kind == SchedulerKind::GroupRandom {
            Ok(())
        } else {
            Err(invalid(key, "only applies to the group scheduler"))
        }
    };
    if let Some(v) = get("group_cap") {
        group_only("group_cap", &cfg)?;
        cfg.scheduler.group_cap = Some(as_usize("group_cap", v)?);
    }
    if let Some(v) = get("opportunity_priority") {
        group_only("opportunity_priority", &cfg)?;
        cfg.scheduler.opportunity_priority = as_bool("opportunity_priority", v)?;
    }
    if let Some(v) = get("p_singleton") {
        group_only("p_singleton", &cfg)?;
        let p = v
            .as_float()
            .or_else(|| v.as_integer().map(|i| i as f64))
            .ok_or_else(|| type_err("p_singleton", "a number"))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid("p_singleton", "must lie in [0, 1]"));
        }
        cfg.scheduler.p_singleton = p;
    }
    if let Some(v) = get("initial_state") {
        cfg.initial_state = match as_str("initial_state", v)?.trim().to_ascii_lowercase().as_str() {
            "truthful" => InitialState::Truthful,
            "random" => InitialState::Random,
            other => return Err(invalid("initial_state", format!("unknown initial state `{other}`"))),
        };
    }
    if let Some(v) = get("profiles_per_cell") {
        cfg.profiles_per_cell = as_usize("profiles_per_cell", v)?;
    }
    if let Some(v) = get("repetitions") {
        cfg.repetitions = as_usize("repetitions", v)?;
    }
    if let Some(v) = get("master_seed") {
        cfg.master_seed = v
            .as_integer()
            .and_then(|i| u64::try_from(i).ok())
            .ok_or_else(|| type_err("master_seed", "a non-negative integer"))?;
    }
    if let Some(v) = get("output_path") {
        cfg.output_path = PathBuf::from(as_str("output_path", v)?);
    }
    if let Some(v) = get("max_steps") {
        cfg.max_steps = Some(as_usize("max_steps", v)?);
    }
    if let Some(v) = get("trace_dir") {
        cfg.trace_dir = Some(PathBuf::from(as_str("trace_dir", v)?));
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}
