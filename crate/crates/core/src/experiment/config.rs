//! Flat `key = value` experiment description.
//!
//! ```text
//! # comments start with '#'
//! sweep = alpha_sq            # alpha_sq | stages | eta_det
//! sweep_start = 0.25
//! sweep_stop = 4.0
//! sweep_step = 0.25
//! stages = 10
//! visibility = 0.994
//! methods = adaptive_exact, adaptive_mc, heterodyne_matched
//! ```
//!
//! Every key except the four `sweep*` keys is optional:
//!
//! | key | default |
//! |---|---|
//! | `alpha_sq` | 1.0 (ignored when swept) |
//! | `stages` | 10 |
//! | `eta_path` | 0.91 |
//! | `eta_det` | 0.73 |
//! | `visibility` | 0.994 |
//! | `dark_rate` | 1.5e-3 |
//! | `priors` | 0.25, 0.25, 0.25, 0.25 |
//! | `timing` | on |
//! | `signal_duration` | 60 |
//! | `gap_duration` | 0.3 |
//! | `cycle_rule` | rotate |
//! | `methods` | adaptive_exact, adaptive_mc |
//! | `heterodyne_eta` | eta_path |
//! | `heterodyne_region` | cross |
//! | `seed` | 1 |
//! | `trials` | 24000 (per batch) |
//! | `batches` | 5 |
//! | `output` | none (stdout) |

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use crate::engine::{DEFAULT_BATCHES, DEFAULT_TRIALS_PER_BATCH};
use crate::error::{Error, Result};
use crate::heterodyne::{HeterodyneModel, Region};
use crate::physics::{ChannelParams, TimingModel};
use crate::receivers::{CycleRule, ReceiverConfig, DEFAULT_ENUMERATION_CAP};

/// Upper bound on the number of points in one sweep.
pub const MAX_SWEEP_POINTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line number, when the problem belongs to a single line.
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn global(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    AlphaSq,
    Stages,
    EtaDet,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::AlphaSq => "alpha_sq",
            SweepVariable::Stages => "stages",
            SweepVariable::EtaDet => "eta_det",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "alpha_sq" => Some(SweepVariable::AlphaSq),
            "stages" => Some(SweepVariable::Stages),
            "eta_det" => Some(SweepVariable::EtaDet),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    /// Optimal conclusive probability over all measurements.
    OptimalBound,
    /// Four-stage receiver, closed form.
    StaticExact,
    StaticMc,
    /// `stages`-stage adaptive receiver by exact enumeration.
    AdaptiveExact,
    AdaptiveMc,
    /// Heterodyne error at the adaptive receiver's exact conclusive probability.
    HeterodyneMatched,
    /// Adaptive error divided by the matched heterodyne error.
    ErrorRatio,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::OptimalBound,
        Method::StaticExact,
        Method::StaticMc,
        Method::AdaptiveExact,
        Method::AdaptiveMc,
        Method::HeterodyneMatched,
        Method::ErrorRatio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::OptimalBound => "optimal_bound",
            Method::StaticExact => "static_exact",
            Method::StaticMc => "static_mc",
            Method::AdaptiveExact => "adaptive_exact",
            Method::AdaptiveMc => "adaptive_mc",
            Method::HeterodyneMatched => "heterodyne_matched",
            Method::ErrorRatio => "error_ratio",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Methods that run the exact enumeration at `stages`.
    fn needs_enumeration(self) -> bool {
        matches!(
            self,
            Method::AdaptiveExact | Method::HeterodyneMatched | Method::ErrorRatio
        )
    }

    fn uses_heterodyne(self) -> bool {
        matches!(self, Method::HeterodyneMatched | Method::ErrorRatio)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Sweep {
    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sweep values `start + i · step`, inclusive of `stop` up to rounding.
    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sweep: Sweep,
    /// Fixed values; the swept field is overwritten per point.
    pub params: ChannelParams,
    pub stages: usize,
    pub timing: Option<TimingModel>,
    pub cycle_rule: CycleRule,
    pub methods: Vec<Method>,
    /// `None` uses the photon receiver's `eta_path`.
    pub heterodyne_eta: Option<f64>,
    pub heterodyne_region: Region,
    pub seed: u64,
    pub trials: usize,
    pub batches: usize,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// A config with every optional key at its default.
    pub fn new(sweep: Sweep) -> Self {
        Self {
            sweep,
            params: ChannelParams::default(),
            stages: 10,
            timing: Some(TimingModel::default()),
            cycle_rule: CycleRule::default(),
            methods: vec![Method::AdaptiveExact, Method::AdaptiveMc],
            heterodyne_eta: None,
            heterodyne_region: Region::default(),
            seed: 1,
            trials: DEFAULT_TRIALS_PER_BATCH,
            batches: DEFAULT_BATCHES,
            output: None,
        }
    }

    /// Parameters and stage count at one sweep value.
    pub fn at(&self, value: f64) -> (ChannelParams, usize) {
        let mut params = self.params;
        let mut stages = self.stages;
        match self.sweep.variable {
            SweepVariable::AlphaSq => params.alpha_sq = value,
            SweepVariable::EtaDet => params.eta_det = value,
            SweepVariable::Stages => stages = value.round() as usize,
        }
        (params, stages)
    }

    pub fn receiver(&self, stages: usize) -> ReceiverConfig {
        ReceiverConfig::adaptive(stages)
            .with_timing(self.timing)
            .with_rule(self.cycle_rule)
    }

    pub fn heterodyne_eta_for(&self, params: &ChannelParams) -> f64 {
        self.heterodyne_eta.unwrap_or(params.eta_path)
    }

    /// Checks that don't belong to a single line.
    pub fn validate(&self) -> std::result::Result<(), Vec<ConfigError>> {
        let mut errors = Vec::new();
        let s = &self.sweep;
        if !(s.start.is_finite() && s.stop.is_finite() && s.step.is_finite()) {
            errors.push(ConfigError::global("sweep range must be finite"));
        } else if s.step <= 0.0 {
            errors.push(ConfigError::global(format!("sweep_step = {} must be > 0", s.step)));
        } else if s.stop < s.start {
            errors.push(ConfigError::global(format!(
                "empty sweep range: sweep_stop {} < sweep_start {}",
                s.stop, s.start
            )));
        } else if (s.stop - s.start) / s.step >= MAX_SWEEP_POINTS as f64 {
            errors.push(ConfigError::global(format!(
                "sweep has more than {MAX_SWEEP_POINTS} points"
            )));
        } else {
            if s.variable == SweepVariable::Stages && s.points().iter().any(|v| (v - v.round()).abs() > 1e-9) {
                errors.push(ConfigError::global("stage sweep must visit whole numbers"));
            }
            let points = s.points();
            let probes = [points[0], points[points.len() - 1]];
            for value in probes {
                self.validate_point(value, &mut errors);
            }
        }
        if self.methods.is_empty() {
            errors.push(ConfigError::global("methods must list at least one method"));
        }
        if self.trials < 1 {
            errors.push(ConfigError::global("trials must be >= 1"));
        }
        if self.batches < 2 {
            errors.push(ConfigError::global("batches must be >= 2"));
        }
        if let Some(eta) = self.heterodyne_eta {
            if let Err(e) = HeterodyneModel::new(0.0, eta, self.heterodyne_region).validate() {
                errors.push(ConfigError::global(e.to_string()));
            }
        }
        if self.methods.iter().any(|m| m.uses_heterodyne()) && self.params.priors != [0.25; 4] {
            errors.push(ConfigError::global("heterodyne methods require uniform priors"));
        }
        errors.dedup();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    fn validate_point(&self, value: f64, errors: &mut Vec<ConfigError>) {
        let (params, stages) = self.at(value);
        if let Err(e) = params.validate() {
            errors.push(ConfigError::global(e.to_string()));
        }
        if let Err(e) = self.receiver(stages).validate() {
            errors.push(ConfigError::global(e.to_string()));
        }
        if stages > DEFAULT_ENUMERATION_CAP && self.methods.iter().any(|m| m.needs_enumeration()) {
            errors.push(ConfigError::global(format!(
                "methods needing exact enumeration support at most {DEFAULT_ENUMERATION_CAP} stages, got {stages}"
            )));
        }
    }

    /// Renders every key, so that `parse_config(&c.serialize()) == c`.
    pub fn serialize(&self) -> String {
        let p = &self.params;
        let timing = self.timing.unwrap_or_default();
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("sweep", self.sweep.variable.name().into());
        put("sweep_start", self.sweep.start.to_string());
        put("sweep_stop", self.sweep.stop.to_string());
        put("sweep_step", self.sweep.step.to_string());
        put("alpha_sq", p.alpha_sq.to_string());
        put("stages", self.stages.to_string());
        put("eta_path", p.eta_path.to_string());
        put("eta_det", p.eta_det.to_string());
        put("visibility", p.visibility.to_string());
        put("dark_rate", p.dark_rate.to_string());
        put("priors", p.priors.map(|v| v.to_string()).join(", "));
        put("timing", if self.timing.is_some() { "on" } else { "off" }.into());
        put("signal_duration", timing.signal_duration.to_string());
        put("gap_duration", timing.gap_duration.to_string());
        put("cycle_rule", self.cycle_rule.name().into());
        put(
            "methods",
            self.methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(", "),
        );
        if let Some(eta) = self.heterodyne_eta {
            put("heterodyne_eta", eta.to_string());
        }
        put("heterodyne_region", self.heterodyne_region.name().into());
        put("seed", self.seed.to_string());
        put("trials", self.trials.to_string());
        put("batches", self.batches.to_string());
        if let Some(path) = &self.output {
            put("output", path.display().to_string());
        }
        out
    }
}

const KEYS: [&str; 22] = [
    "sweep",
    "sweep_start",
    "sweep_stop",
    "sweep_step",
    "alpha_sq",
    "stages",
    "eta_path",
    "eta_det",
    "visibility",
    "dark_rate",
    "priors",
    "timing",
    "signal_duration",
    "gap_duration",
    "cycle_rule",
    "methods",
    "heterodyne_eta",
    "heterodyne_region",
    "seed",
    "trials",
    "batches",
    "output",
];

/// Parses and validates a config, reporting every problem found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut errors = Vec::new();
    let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(ConfigError::at(
                line_no,
                format!("expected `key = value`, got `{line}`"),
            ));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            errors.push(ConfigError::at(line_no, format!("unknown key `{key}`")));
            continue;
        }
        if let Some((first, _)) = entries.insert(key, (line_no, value)) {
            errors.push(ConfigError::at(
                line_no,
                format!("duplicate key `{key}` (first on line {first})"),
            ));
        }
    }

    let mut reader = Reader {
        entries: &entries,
        errors: &mut errors,
    };
    let variable = reader.required("sweep", |s| {
        SweepVariable::parse(s).ok_or("expected alpha_sq, stages or eta_det")
    });
    let start = reader.required("sweep_start", number);
    let stop = reader.required("sweep_stop", number);
    let step = reader.required("sweep_step", number);

    let mut config = ExperimentConfig::new(Sweep {
        variable: variable.unwrap_or(SweepVariable::AlphaSq),
        start: start.unwrap_or(0.0),
        stop: stop.unwrap_or(0.0),
        step: step.unwrap_or(1.0),
    });
    let p = &mut config.params;
    reader.optional("alpha_sq", number, &mut p.alpha_sq);
    reader.optional("eta_path", unit_interval, &mut p.eta_path);
    reader.optional("eta_det", unit_interval, &mut p.eta_det);
    reader.optional("visibility", unit_interval, &mut p.visibility);
    reader.optional("dark_rate", non_negative, &mut p.dark_rate);
    reader.optional("priors", priors, &mut p.priors);
    reader.optional("stages", stage_count, &mut config.stages);

    let mut timing_on = true;
    reader.optional("timing", on_off, &mut timing_on);
    let mut timing = TimingModel::default();
    reader.optional("signal_duration", positive, &mut timing.signal_duration);
    reader.optional("gap_duration", non_negative, &mut timing.gap_duration);
    config.timing = timing_on.then_some(timing);

    reader.optional(
        "cycle_rule",
        |s| CycleRule::parse(s).ok_or("expected rotate or restart"),
        &mut config.cycle_rule,
    );
    reader.optional("methods", methods, &mut config.methods);
    let mut het_eta = None;
    reader.optional("heterodyne_eta", |s| unit_interval(s).map(Some), &mut het_eta);
    config.heterodyne_eta = het_eta;
    reader.optional(
        "heterodyne_region",
        |s| Region::parse(s).ok_or("expected cross or square"),
        &mut config.heterodyne_region,
    );
    reader.optional(
        "seed",
        |s| s.parse::<u64>().map_err(|_| "expected an unsigned integer"),
        &mut config.seed,
    );
    reader.optional("trials", count, &mut config.trials);
    reader.optional("batches", count, &mut config.batches);
    let mut output = None;
    reader.optional(
        "output",
        |s| {
            if s.is_empty() {
                Err("empty path")
            } else {
                Ok(Some(PathBuf::from(s)))
            }
        },
        &mut output,
    );
    config.output = output;

    if errors.is_empty() {
        if let Err(mut more) = config.validate() {
            errors.append(&mut more);
        }
    }
    if errors.is_empty() {
        Ok(config)
    } else {
        errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
        Err(Error::Config(errors))
    }
}

struct Reader<'a, 'e> {
    entries: &'a BTreeMap<&'a str, (usize, &'a str)>,
    errors: &'e mut Vec<ConfigError>,
}

impl Reader<'_, '_> {
    fn required<T>(&mut self, key: &str, parse: impl Fn(&str) -> std::result::Result<T, &'static str>) -> Option<T> {
        match self.entries.get(key) {
            Some(&(line, value)) => self.convert(key, line, value, parse),
            None => {
                self.errors
                    .push(ConfigError::global(format!("missing required key `{key}`")));
                None
            }
        }
    }

    fn optional<T>(&mut self, key: &str, parse: impl Fn(&str) -> std::result::Result<T, &'static str>, slot: &mut T) {
        if let Some(&(line, value)) = self.entries.get(key) {
            if let Some(v) = self.convert(key, line, value, parse) {
                *slot = v;
            }
        }
    }

    fn convert<T>(
        &mut self,
        key: &str,
        line: usize,
        value: &str,
        parse: impl Fn(&str) -> std::result::Result<T, &'static str>,
    ) -> Option<T> {
        match parse(value) {
            Ok(v) => Some(v),
            Err(why) => {
                self.errors
                    .push(ConfigError::at(line, format!("{key} = `{value}`: {why}")));
                None
            }
        }
    }
}

fn number(s: &str) -> std::result::Result<f64, &'static str> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err("must be finite"),
        Err(_) => Err("expected a number"),
    }
}

fn non_negative(s: &str) -> std::result::Result<f64, &'static str> {
    number(s).and_then(|v| if v >= 0.0 { Ok(v) } else { Err("must be >= 0") })
}

fn positive(s: &str) -> std::result::Result<f64, &'static str> {
    number(s).and_then(|v| if v > 0.0 { Ok(v) } else { Err("must be > 0") })
}

fn unit_interval(s: &str) -> std::result::Result<f64, &'static str> {
    number(s).and_then(|v| {
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err("must lie in [0, 1]")
        }
    })
}

fn count(s: &str) -> std::result::Result<usize, &'static str> {
    s.parse::<usize>().map_err(|_| "expected a positive integer")
}

fn stage_count(s: &str) -> std::result::Result<usize, &'static str> {
    count(s).and_then(|m| if m >= 4 { Ok(m) } else { Err("stage count must be >= 4") })
}

fn on_off(s: &str) -> std::result::Result<bool, &'static str> {
    match s {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        _ => Err("expected on or off"),
    }
}

fn priors(s: &str) -> std::result::Result<[f64; 4], &'static str> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| unit_interval(v.trim()))
        .collect::<std::result::Result<_, _>>()?;
    let arr: [f64; 4] = values.try_into().map_err(|_| "expected four comma-separated values")?;
    if (arr.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err("priors must sum to 1");
    }
    Ok(arr)
}

fn methods(s: &str) -> std::result::Result<Vec<Method>, &'static str> {
    let mut out = Vec::new();
    for name in s.split(',').map(str::trim) {
        let m = Method::parse(name).ok_or("unknown method")?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err("at least one method required");
    }
    Ok(out)
}
