//! Experiment configuration: a flat `key = value` file overridden by flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use coarse_core::instances::{instance_spec, InstanceSpec};
use serde::Serialize;

use crate::CliError;

/// Every accepted key, in the order reports list them.
pub const KEYS: &[(&str, &str)] = &[
    ("instance", "bundled theorem instance; fills group, qm, codomain, approx and lambda"),
    ("group", "domain group: free:N, lattice:N, bs12 or product(G,H)"),
    ("qm", "quasimorphism spec, e.g. brooks:w=ab or floordiv:q=2,coord=1"),
    ("codomain", "codomain group of qm (default lattice:1)"),
    ("approx", "approximate subgroup of the domain: whole, bs12-pattern or cutproject:c=P/Q"),
    ("lambda", "approximate subgroup of the codomain (default whole)"),
    ("F", "Tao witness as ';'-separated words; searched for when absent"),
    ("search-radius", "radius of the ball searched for a Tao witness"),
    ("window", "window radius ρ (alias: radius)"),
    ("defect-window", "window radius for defect sets"),
    ("scales", "comma-separated scale list r (alias: r)"),
    ("t-values", "comma-separated distances for the Lipschitz scan"),
    ("max-colors", "color limit for cover searches"),
    ("D", "cluster diameter budget for the color command"),
    ("budget-factor", "diameter budget per unit of scale in hurewicz and all"),
    ("budget", "element budget for a single ball enumeration"),
    ("seed", "seed for greedy orderings"),
    ("workers", "worker threads"),
    ("out", "output directory, or a .json or .csv file path"),
];

/// Help text for a key; empty for unknown keys.
pub fn key_help(key: &str) -> &'static str {
    KEYS.iter().find(|(k, _)| *k == key).map_or("", |(_, h)| *h)
}

const ALIASES: &[(&str, &str)] = &[("radius", "window"), ("r", "scales")];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Ball,
    Defect,
    ApproxCheck,
    Lipschitz,
    Containment,
    Kernel,
    Color,
    Hurewicz,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ball => "ball",
            Command::Defect => "defect",
            Command::ApproxCheck => "approx-check",
            Command::Lipschitz => "lipschitz",
            Command::Containment => "containment",
            Command::Kernel => "kernel",
            Command::Color => "color",
            Command::Hurewicz => "hurewicz",
            Command::All => "all",
        }
    }

    fn default_window(self) -> u32 {
        match self {
            Command::Ball => 8,
            Command::Defect | Command::Lipschitz => 4,
            Command::ApproxCheck => 6,
            Command::Containment | Command::Kernel => 12,
            Command::Color | Command::Hurewicz | Command::All => 60,
        }
    }

    fn default_scales(self) -> Vec<u32> {
        match self {
            Command::Containment | Command::Kernel => vec![2],
            Command::Color => vec![4],
            Command::Hurewicz | Command::All => vec![2, 4, 8],
            _ => Vec::new(),
        }
    }

    fn needs_defect_window(self) -> bool {
        matches!(
            self,
            Command::Lipschitz | Command::Containment | Command::Kernel | Command::Hurewicz | Command::All
        )
    }

    fn uses_scales(self) -> bool {
        !self.default_scales().is_empty()
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Raw key/value pairs before resolution.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

fn canonical_key(key: &str) -> Result<&'static str, CliError> {
    let key = key.trim();
    let key = ALIASES.iter().find(|(a, _)| *a == key).map_or(key, |(_, k)| k);
    KEYS.iter()
        .find(|(k, _)| *k == key)
        .map(|(k, _)| *k)
        .ok_or_else(|| CliError::Config(format!("unknown config key {key:?}")))
}

impl RawConfig {
    /// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut out = RawConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            out.set(k, v.trim())?;
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), CliError> {
        let k = canonical_key(key)?;
        self.values.insert(k.to_string(), value.into());
        Ok(())
    }

    /// Entries of `other` replace ours.
    pub fn overlay(&mut self, other: RawConfig) {
        self.values.extend(other.values);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<u32>, CliError> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

/// The resolved configuration embedded in every report.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub command: Command,
    pub instance: Option<String>,
    pub group: Option<String>,
    pub qm: Option<String>,
    pub codomain: Option<String>,
    pub approx: Option<String>,
    pub lambda: Option<String>,
    #[serde(rename = "F")]
    pub witness: Option<Vec<String>>,
    pub search_radius: u32,
    pub window: u32,
    pub defect_window: Option<u32>,
    pub scales: Vec<u32>,
    pub t_values: Vec<u32>,
    pub max_colors: Option<usize>,
    #[serde(rename = "D")]
    pub d: Option<u32>,
    pub budget_factor: u32,
    pub budget: usize,
    pub seed: u64,
    /// Not part of the experiment: never changes report content.
    #[serde(skip)]
    pub workers: Option<usize>,
    #[serde(skip)]
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn resolve(command: Command, raw: &RawConfig) -> Result<Self, CliError> {
        let text = |k: &str| raw.get(k).map(str::to_string);
        let num = |k: &str| raw.get(k).map(|v| parse_value::<u32>(k, v)).transpose();
        let spec = match raw.get("instance") {
            Some(name) => Some(instance_spec(name).map_err(|e| CliError::Config(e.to_string()))?),
            None => None,
        };
        let from_spec = |k: &str, pick: fn(&InstanceSpec) -> &'static str| {
            text(k).or_else(|| spec.map(|s| pick(s).to_string()))
        };
        let window = match num("window")? {
            Some(w) => w,
            None => match (command, spec) {
                (Command::Defect | Command::Lipschitz, Some(s)) => s.defect_window,
                _ => command.default_window(),
            },
        };
        let defect_window = match (num("defect-window")?, spec) {
            (Some(w), _) => Some(w),
            (None, Some(s)) if command != Command::Defect => Some(s.defect_window),
            (None, None) if command.needs_defect_window() => Some(4),
            _ => None,
        };
        let scales = match raw.get("scales") {
            Some(v) => parse_list("scales", v)?,
            None => command.default_scales(),
        };
        let t_values = match raw.get("t-values") {
            Some(v) => parse_list("t-values", v)?,
            None => (1..=6).collect(),
        };
        let witness = raw.get("F").map(|v| {
            v.split(';')
                .map(|w| w.trim().to_string())
                .filter(|w| !w.is_empty())
                .collect()
        });
        let cfg = ExperimentConfig {
            command,
            instance: text("instance"),
            group: from_spec("group", |s| s.domain),
            qm: from_spec("qm", |s| s.quasimorphism),
            codomain: from_spec("codomain", |s| s.codomain),
            approx: from_spec("approx", |s| s.xi),
            lambda: from_spec("lambda", |s| s.lambda),
            witness,
            search_radius: num("search-radius")?.unwrap_or(4),
            window,
            defect_window,
            scales,
            t_values,
            max_colors: raw.get("max-colors").map(|v| parse_value("max-colors", v)).transpose()?,
            d: num("D")?,
            budget_factor: num("budget-factor")?.unwrap_or(8),
            budget: raw
                .get("budget")
                .map(|v| parse_value("budget", v))
                .transpose()?
                .unwrap_or(coarse_core::metric::DEFAULT_BUDGET),
            seed: raw.get("seed").map(|v| parse_value("seed", v)).transpose()?.unwrap_or(0),
            workers: raw.get("workers").map(|v| parse_value("workers", v)).transpose()?,
            out: PathBuf::from(raw.get("out").unwrap_or("coarse-forge-out")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.budget == 0 || self.budget_factor == 0 || self.workers == Some(0) {
            return Err(CliError::Config("budget, budget-factor and workers must be positive".into()));
        }
        if self.max_colors == Some(0) {
            return Err(CliError::Config("max-colors must be positive".into()));
        }
        if self.scales.contains(&0) {
            return Err(CliError::Config("scales must be positive".into()));
        }
        if self.command.uses_scales() {
            if self.scales.is_empty() {
                return Err(CliError::Config(format!("{} needs at least one scale", self.command)));
            }
            let top = self.scales.iter().max().copied().unwrap_or(0);
            if u64::from(self.window) < 4 * u64::from(top) {
                return Err(CliError::Config(format!(
                    "window {} is smaller than 4 × largest scale {top}",
                    self.window
                )));
            }
        }
        if self.group.is_none() {
            return Err(CliError::Config("either instance or group is required".into()));
        }
        Ok(())
    }
}
