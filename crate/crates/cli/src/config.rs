//! Flat `key=value` experiment files.
//!
//! One dotted key per line, `#` starts a comment line. Parsing resolves every
//! default against the scenario catalog, so rendering a parsed config and
//! parsing it again gives the same value.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use girsanov_core::diagnostic::FellerPreset;
use girsanov_core::engine::grid_index;
use girsanov_core::scenarios::{build_scenario, override_keys, Overrides, Scenario};
use girsanov_core::Error as CoreError;

use crate::error::CliError;

pub const WORKERS_ENV: &str = "GG_WORKERS";

/// Override keys that the config exposes under `mc.` instead of `scenario.`.
const MC_KEYS: [&str; 4] = ["h", "n", "k_max", "n_max"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Operation {
    Verdict,
    Expectation,
    FiniteQv,
    Consistency,
    Feller,
    Convergence,
}

impl Operation {
    pub const ALL: [Operation; 6] = [
        Operation::Verdict,
        Operation::Expectation,
        Operation::FiniteQv,
        Operation::Consistency,
        Operation::Feller,
        Operation::Convergence,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Operation::Verdict => "verdict",
            Operation::Expectation => "expectation",
            Operation::FiniteQv => "finite-qv",
            Operation::Consistency => "consistency",
            Operation::Feller => "feller",
            Operation::Convergence => "convergence",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.as_str() == s)
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

impl OutputFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
            OutputFormat::Text => "text",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [OutputFormat::Json, OutputFormat::Csv, OutputFormat::Text]
            .into_iter()
            .find(|f| f.as_str() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct McConfig {
    pub n: usize,
    pub h: f64,
    pub k_max: f64,
    pub n_max: u32,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceConfig {
    /// Strictly decreasing step sizes.
    pub h: Vec<f64>,
    pub n: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub operation: Operation,
    pub times: Vec<f64>,
    pub mc: McConfig,
    /// Resolved scenario parameters other than the `mc.` ones.
    pub parameters: Overrides,
    pub feller_preset: Option<FellerPreset>,
    pub convergence: Option<ConvergenceConfig>,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
}

impl ExperimentConfig {
    /// Override map for `build_scenario`.
    pub fn scenario_overrides(&self) -> Overrides {
        let mut o = self.parameters.clone();
        o.insert("h".into(), self.mc.h.to_string());
        o.insert("n".into(), self.mc.n.to_string());
        o.insert("k_max".into(), self.mc.k_max.to_string());
        o.insert("n_max".into(), self.mc.n_max.to_string());
        o
    }

    pub fn build_scenario(&self) -> Result<Scenario<f64>, CliError> {
        build_scenario(&self.scenario, &self.scenario_overrides()).map_err(CliError::from)
    }

    /// Every key with its resolved value, in a stable order.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("scenario".into(), self.scenario.clone());
        m.insert("operation".into(), self.operation.as_str().into());
        m.insert("times".into(), join(&self.times));
        m.insert("mc.n".into(), self.mc.n.to_string());
        m.insert("mc.h".into(), self.mc.h.to_string());
        m.insert("mc.k_max".into(), self.mc.k_max.to_string());
        m.insert("mc.n_max".into(), self.mc.n_max.to_string());
        m.insert("mc.seed".into(), self.mc.seed.to_string());
        m.insert("mc.workers".into(), self.mc.workers.to_string());
        for (k, v) in &self.parameters {
            m.insert(format!("scenario.{k}"), v.clone());
        }
        if let Some(p) = self.feller_preset {
            m.insert("feller.preset".into(), p.as_str().into());
        }
        if let Some(c) = &self.convergence {
            m.insert("convergence.h".into(), join(&c.h));
            m.insert("convergence.n".into(), join(&c.n));
        }
        m.insert("output.format".into(), self.output_format.as_str().into());
        if let Some(p) = &self.output_path {
            m.insert("output.path".into(), p.display().to_string());
        }
        m
    }
}

fn join<V: ToString>(v: &[V]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Renders the config in the file format, one resolved key per line.
pub fn render_config(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    for (k, v) in cfg.echo() {
        out.push_str(&k);
        out.push('=');
        out.push_str(&v);
        out.push('\n');
    }
    out
}

struct Entry {
    line: usize,
    value: String,
}

struct Raw {
    entries: BTreeMap<String, Entry>,
}

impl Raw {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }
}

fn at(line: usize, message: impl Into<String>) -> CliError {
    CliError::Config {
        line: Some(line),
        message: message.into(),
    }
}

fn general(message: impl Into<String>) -> CliError {
    CliError::Config {
        line: None,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Raw, CliError> {
    let mut entries = BTreeMap::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| at(line, format!("expected `key=value`, found `{trimmed}`")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(at(line, "empty key"));
        }
        let value = value.trim().to_string();
        if let Some(prev) = entries.insert(key.to_string(), Entry { line, value }) {
            return Err(at(line, format!("duplicate key `{key}` (first set on line {})", prev.line)));
        }
    }
    Ok(Raw { entries })
}

fn number(e: &Entry, key: &str) -> Result<f64, CliError> {
    e.value
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| at(e.line, format!("`{key}`: `{}` is not a finite number", e.value)))
}

fn positive(e: &Entry, key: &str) -> Result<f64, CliError> {
    let x = number(e, key)?;
    if x <= 0.0 {
        return Err(at(e.line, format!("`{key}` must be positive, got {}", e.value)));
    }
    Ok(x)
}

fn integer(e: &Entry, key: &str) -> Result<u64, CliError> {
    e.value
        .parse::<u64>()
        .map_err(|_| at(e.line, format!("`{key}`: `{}` is not a non-negative integer", e.value)))
}

fn list<V>(e: &Entry, key: &str, item: impl Fn(&str) -> Option<V>) -> Result<Vec<V>, CliError> {
    let parts: Vec<&str> = e.value.split(',').map(str::trim).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(at(e.line, format!("`{key}`: empty list entry in `{}`", e.value)));
    }
    parts
        .iter()
        .map(|p| item(p).ok_or_else(|| at(e.line, format!("`{key}`: bad entry `{p}`"))))
        .collect()
}

fn finite_positive(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite() && *x > 0.0)
}

fn ascending(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Parses and validates a config file body. `GG_WORKERS` is not consulted;
/// see [`apply_env`].
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, CliError> {
    let mut raw = lex(text)?;

    let scenario_entry = raw.take("scenario").ok_or_else(|| general("missing required key `scenario`"))?;
    let scenario = scenario_entry.value.clone();
    let allowed = override_keys(&scenario);
    if !girsanov_core::scenarios::list_scenarios().iter().any(|e| e.name == scenario) {
        return Err(at(scenario_entry.line, format!("unknown scenario `{scenario}`")));
    }

    let operation = match raw.take("operation") {
        Some(e) => Operation::parse(&e.value).ok_or_else(|| {
            let all: Vec<_> = Operation::ALL.iter().map(|o| o.as_str()).collect();
            at(e.line, format!("unknown operation `{}` (expected one of {})", e.value, all.join(", ")))
        })?,
        None => Operation::Verdict,
    };

    let seed = raw.take("mc.seed").ok_or_else(|| general("missing required key `mc.seed`"))?;
    let seed = integer(&seed, "mc.seed")?;

    // Scenario overrides first, so the catalog can resolve everything else.
    let mut overrides = Overrides::new();
    let mut lines: BTreeMap<String, usize> = BTreeMap::new();
    let scenario_keys: Vec<String> = raw
        .entries
        .keys()
        .filter(|k| k.starts_with("scenario."))
        .cloned()
        .collect();
    for key in scenario_keys {
        let e = raw.take(&key).expect("key listed");
        let short = &key["scenario.".len()..];
        if MC_KEYS.contains(&short) {
            return Err(at(e.line, format!("`{key}` is set through `mc.{short}`")));
        }
        if !allowed.contains(&short) {
            let own: Vec<_> = allowed.iter().filter(|k| !MC_KEYS.contains(k)).collect();
            return Err(at(
                e.line,
                format!(
                    "scenario `{scenario}` has no parameter `{short}` (allowed: {})",
                    own.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", ")
                ),
            ));
        }
        lines.insert(short.to_string(), e.line);
        overrides.insert(short.to_string(), e.value);
    }

    if let Some(e) = raw.take("mc.n") {
        let n = integer(&e, "mc.n")?;
        if n < 100 {
            return Err(at(e.line, format!("`mc.n` must be at least 100, got {n}")));
        }
        lines.insert("n".into(), e.line);
        overrides.insert("n".into(), n.to_string());
    }
    if let Some(e) = raw.take("mc.h") {
        let h = positive(&e, "mc.h")?;
        lines.insert("h".into(), e.line);
        overrides.insert("h".into(), h.to_string());
    }
    if let Some(e) = raw.take("mc.k_max") {
        let k = positive(&e, "mc.k_max")?;
        lines.insert("k_max".into(), e.line);
        overrides.insert("k_max".into(), k.to_string());
    }
    if let Some(e) = raw.take("mc.n_max") {
        let n = integer(&e, "mc.n_max")?;
        if n == 0 || n > u64::from(u32::MAX) {
            return Err(at(e.line, format!("`mc.n_max` must be in 1..=4294967295, got {n}")));
        }
        lines.insert("n_max".into(), e.line);
        overrides.insert("n_max".into(), n.to_string());
    }

    let built = build_scenario::<f64>(&scenario, &overrides).map_err(|err| {
        let line = lines
            .iter()
            .find(|(k, _)| err.to_string().contains(&format!("`{k}`")))
            .map(|(_, &l)| l);
        CliError::Config {
            line,
            message: err.to_string(),
        }
    })?;
    let p = &built.parameters;
    let resolved = |k: &str| p.get(k).cloned().expect("catalog resolves every key");
    let mc = McConfig {
        n: built.n_paths,
        h: built.engine.step,
        k_max: built.engine.qv_cap,
        n_max: built.engine.max_level,
        seed,
        workers: 1,
    };
    if mc.n < 100 {
        return Err(general(format!("`mc.n` must be at least 100, got {}", mc.n)));
    }
    let parameters: Overrides = p
        .keys()
        .filter(|k| !MC_KEYS.contains(&k.as_str()))
        .map(|k| (k.clone(), resolved(k)))
        .collect();

    let mut mc = mc;
    if let Some(e) = raw.take("mc.workers") {
        mc.workers = integer(&e, "mc.workers")? as usize;
    }

    let times = match raw.take("times") {
        Some(e) => {
            let t = list(&e, "times", finite_positive)?;
            if !ascending(&t) {
                return Err(at(e.line, "`times` must be strictly ascending"));
            }
            check_grid(&t, mc.h).map_err(|m| at(e.line, m))?;
            t
        }
        None => built.times.clone(),
    };
    if times.is_empty() {
        return Err(general("`times` must not be empty"));
    }

    let feller_preset = match raw.take("feller.preset") {
        Some(e) => {
            if operation != Operation::Feller {
                return Err(at(e.line, "`feller.preset` only applies to operation=feller"));
            }
            Some(FellerPreset::parse(&e.value).ok_or_else(|| {
                let all: Vec<_> = FellerPreset::ALL.iter().map(|p| p.as_str()).collect();
                at(e.line, format!("unknown Feller preset `{}` (expected one of {})", e.value, all.join(", ")))
            })?)
        }
        None if operation == Operation::Feller => Some(built.metadata.feller.ok_or_else(|| {
            general(format!("scenario `{scenario}` has no Feller preset; set `feller.preset`"))
        })?),
        None => None,
    };

    let conv_h = raw.take("convergence.h");
    let conv_n = raw.take("convergence.n");
    let convergence = if operation == Operation::Convergence {
        let h = match conv_h {
            Some(e) => {
                let h = list(&e, "convergence.h", finite_positive)?;
                if !h.windows(2).all(|w| w[0] > w[1]) {
                    return Err(at(e.line, "`convergence.h` must be strictly descending"));
                }
                for &hh in &h {
                    check_grid(&times, hh).map_err(|m| at(e.line, m))?;
                }
                h
            }
            None => {
                let h = vec![mc.h * 10.0, mc.h];
                check_grid(&times, h[0]).map_err(|m| general(format!("default `convergence.h`: {m}")))?;
                h
            }
        };
        let n = match conv_n {
            Some(e) => {
                let n = list(&e, "convergence.n", |s| s.parse::<usize>().ok())?;
                if let Some(bad) = n.iter().find(|&&n| n < 100) {
                    return Err(at(e.line, format!("`convergence.n` entries must be at least 100, got {bad}")));
                }
                n
            }
            None => vec![mc.n],
        };
        Some(ConvergenceConfig { h, n })
    } else {
        if let Some(e) = conv_h.or(conv_n) {
            return Err(at(e.line, "`convergence.*` keys only apply to operation=convergence"));
        }
        None
    };

    let output_format = match raw.take("output.format") {
        Some(e) => OutputFormat::parse(&e.value)
            .ok_or_else(|| at(e.line, format!("unknown output format `{}` (json, csv, text)", e.value)))?,
        None => OutputFormat::Json,
    };
    let output_path = match raw.take("output.path") {
        Some(e) if e.value.is_empty() => return Err(at(e.line, "`output.path` is empty")),
        Some(e) => Some(PathBuf::from(e.value)),
        None => None,
    };

    if let Some((key, e)) = raw.entries.iter().min_by_key(|(_, e)| e.line) {
        return Err(at(e.line, format!("unknown key `{key}`")));
    }

    Ok(ExperimentConfig {
        scenario,
        operation,
        times,
        mc,
        parameters,
        feller_preset,
        convergence,
        output_path,
        output_format,
    })
}

fn check_grid(times: &[f64], h: f64) -> Result<(), String> {
    for &t in times {
        grid_index(t, h).map_err(|e| match e {
            CoreError::Config(m) => m,
            other => other.to_string(),
        })?;
    }
    Ok(())
}

/// Applies the `GG_WORKERS` override.
pub fn apply_env(mut cfg: ExperimentConfig) -> Result<ExperimentConfig, CliError> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        cfg.mc.workers = v
            .trim()
            .parse()
            .map_err(|_| general(format!("{WORKERS_ENV}: `{v}` is not a non-negative integer")))?;
    }
    Ok(cfg)
}

/// Reads, parses and validates a config file, then applies `GG_WORKERS`.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    apply_env(parse_config_str(&text)?)
}
