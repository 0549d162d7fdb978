//! Flat key-value run configuration.
//!
//! The format is one `key = value` pair per line, `#` comment lines, and
//! blank lines. Unknown keys are rejected so typos fail loudly. The
//! canonical serialization emits every set key in a fixed order, which is
//! what the config hash in every report is computed over.

use std::collections::BTreeSet;
use std::path::PathBuf;

use ccrt_misclass::sampler::{RateRedraw, RateSharing};

use crate::error::{CliError, CliResult};
use crate::grid::RLabel;

/// Grid selection for the analyze and elicit-only modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GridSpec {
    /// The full 3x3 grid of (control, intervention) rate labels.
    All,
    /// A single cell.
    Single(RLabel, RLabel),
}

impl GridSpec {
    /// Cells in deterministic report order (control label major).
    pub fn cells(&self) -> Vec<(RLabel, RLabel)> {
        match self {
            GridSpec::All => {
                let labels = [RLabel::Low, RLabel::Medium, RLabel::High];
                let mut out = Vec::with_capacity(9);
                for uc in labels {
                    for mi in labels {
                        out.push((uc, mi));
                    }
                }
                out
            }
            GridSpec::Single(uc, mi) => vec![(*uc, *mi)],
        }
    }

    fn parse(text: &str) -> CliResult<Self> {
        if text == "all" {
            return Ok(GridSpec::All);
        }
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(CliError::input(format!(
                "grid must be `all` or `<LABEL>,<LABEL>`, got `{text}`"
            )));
        }
        Ok(GridSpec::Single(RLabel::parse(parts[0])?, RLabel::parse(parts[1])?))
    }

    fn serialize(&self) -> String {
        match self {
            GridSpec::All => "all".into(),
            GridSpec::Single(uc, mi) => format!("{},{}", uc.name(), mi.name()),
        }
    }
}

/// Simulation-scenario settings (`scenario_*` keys).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub sites: usize,
    pub groups: usize,
    pub n_obs_min: u64,
    pub n_obs_max: u64,
    /// Optional per-site roster sizes, one integer per line.
    pub n_obs_file: Option<PathBuf>,
    pub obs_rate_control: f64,
    pub obs_rate_intervention: f64,
    pub rho1_control: f64,
    pub rho1_intervention: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub sigma2_site: f64,
    pub sigma2_group: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            sites: 90,
            groups: 10,
            n_obs_min: 150,
            n_obs_max: 400,
            n_obs_file: None,
            obs_rate_control: 0.30,
            obs_rate_intervention: 0.33,
            rho1_control: 0.07,
            rho1_intervention: 0.07,
            rho2: 0.04,
            rho3: 0.04,
            sigma2_site: 0.25,
            sigma2_group: 0.07,
        }
    }
}

/// Full run configuration shared by all CLI verbs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    /// Chains per grid cell.
    pub chains: usize,
    /// Worker threads (0 = library default).
    pub threads: usize,
    pub rate_sharing: RateSharing,
    pub rate_redraw: RateRedraw,
    pub dump_draws: bool,
    pub sites_file: Option<PathBuf>,
    pub registry_file: Option<PathBuf>,
    /// Optional per-site eligibility-misclassification prior overrides.
    pub eligibility_file: Option<PathBuf>,
    pub grid: GridSpec,
    /// Odds-ratio tail-probability thresholds for the analyze report.
    pub or_thresholds: Vec<f64>,
    pub replications: usize,
    /// Model-assumption labels for simulate mode.
    pub model_specs: Vec<String>,
    pub scenario: ScenarioConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            output_dir: PathBuf::from("out"),
            seed: 42,
            iterations: 2500,
            burn_in: 500,
            chains: 1,
            threads: 0,
            rate_sharing: RateSharing::Site,
            rate_redraw: RateRedraw::EverySweep,
            dump_draws: false,
            sites_file: None,
            registry_file: None,
            eligibility_file: None,
            grid: GridSpec::All,
            or_thresholds: vec![1.0],
            replications: 20,
            model_specs: vec![],
            scenario: ScenarioConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut config = RunConfig::default();
        let mut seen = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::input(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(CliError::input(format!("duplicate key `{key}`")));
            }
            config.apply(key, value).map_err(|e| {
                CliError::input(format!("line {}: {e}", lineno + 1))
            })?;
        }
        config.validate()?;
        Ok(config)
    }

    fn apply(&mut self, key: &str, value: &str) -> CliResult<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse()
                .map_err(|e| CliError::input(format!("{key}: {e}")))
        }
        match key {
            "output_dir" => self.output_dir = PathBuf::from(value),
            "seed" => self.seed = num(key, value)?,
            "iterations" => self.iterations = num(key, value)?,
            "burn_in" => self.burn_in = num(key, value)?,
            "chains" => self.chains = num(key, value)?,
            "threads" => self.threads = num(key, value)?,
            "rate_sharing" => {
                self.rate_sharing = match value {
                    "site" => RateSharing::Site,
                    "arm" => RateSharing::Arm,
                    other => {
                        return Err(CliError::input(format!(
                            "rate_sharing must be `site` or `arm`, got `{other}`"
                        )))
                    }
                }
            }
            "rate_redraw" => {
                self.rate_redraw = match value {
                    "sweep" => RateRedraw::EverySweep,
                    "chain" => RateRedraw::OncePerChain,
                    other => {
                        return Err(CliError::input(format!(
                            "rate_redraw must be `sweep` or `chain`, got `{other}`"
                        )))
                    }
                }
            }
            "dump_draws" => self.dump_draws = num(key, value)?,
            "sites_file" => self.sites_file = Some(PathBuf::from(value)),
            "registry_file" => self.registry_file = Some(PathBuf::from(value)),
            "eligibility_file" => self.eligibility_file = Some(PathBuf::from(value)),
            "grid" => self.grid = GridSpec::parse(value)?,
            "or_thresholds" => {
                self.or_thresholds = value
                    .split(',')
                    .map(|t| num("or_thresholds", t.trim()))
                    .collect::<CliResult<Vec<f64>>>()?;
            }
            "replications" => self.replications = num(key, value)?,
            "model_specs" => {
                self.model_specs = value.split(',').map(|s| s.trim().to_string()).collect();
            }
            "scenario_sites" => self.scenario.sites = num(key, value)?,
            "scenario_groups" => self.scenario.groups = num(key, value)?,
            "scenario_n_obs_min" => self.scenario.n_obs_min = num(key, value)?,
            "scenario_n_obs_max" => self.scenario.n_obs_max = num(key, value)?,
            "scenario_n_obs_file" => self.scenario.n_obs_file = Some(PathBuf::from(value)),
            "scenario_obs_rate_control" => self.scenario.obs_rate_control = num(key, value)?,
            "scenario_obs_rate_intervention" => {
                self.scenario.obs_rate_intervention = num(key, value)?
            }
            "scenario_rho1_control" => self.scenario.rho1_control = num(key, value)?,
            "scenario_rho1_intervention" => self.scenario.rho1_intervention = num(key, value)?,
            "scenario_rho2" => self.scenario.rho2 = num(key, value)?,
            "scenario_rho3" => self.scenario.rho3 = num(key, value)?,
            "scenario_sigma2_site" => self.scenario.sigma2_site = num(key, value)?,
            "scenario_sigma2_group" => self.scenario.sigma2_group = num(key, value)?,
            other => return Err(CliError::input(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.iterations == 0 || self.iterations <= self.burn_in {
            return Err(CliError::input(format!(
                "iterations ({}) must exceed burn_in ({})",
                self.iterations, self.burn_in
            )));
        }
        if self.chains == 0 {
            return Err(CliError::input("chains must be at least 1"));
        }
        if self.or_thresholds.iter().any(|t| *t <= 0.0) {
            return Err(CliError::input("or_thresholds must be positive"));
        }
        if self.scenario.n_obs_min == 0 || self.scenario.n_obs_min > self.scenario.n_obs_max {
            return Err(CliError::input("scenario roster bounds must satisfy 0 < min <= max"));
        }
        Ok(())
    }

    /// Canonical serialization: every set key, fixed order.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("output_dir", self.output_dir.display().to_string());
        push("seed", self.seed.to_string());
        push("iterations", self.iterations.to_string());
        push("burn_in", self.burn_in.to_string());
        push("chains", self.chains.to_string());
        push("threads", self.threads.to_string());
        push(
            "rate_sharing",
            match self.rate_sharing {
                RateSharing::Site => "site".into(),
                RateSharing::Arm => "arm".into(),
            },
        );
        push(
            "rate_redraw",
            match self.rate_redraw {
                RateRedraw::EverySweep => "sweep".into(),
                RateRedraw::OncePerChain => "chain".into(),
            },
        );
        push("dump_draws", self.dump_draws.to_string());
        if let Some(p) = &self.sites_file {
            push("sites_file", p.display().to_string());
        }
        if let Some(p) = &self.registry_file {
            push("registry_file", p.display().to_string());
        }
        if let Some(p) = &self.eligibility_file {
            push("eligibility_file", p.display().to_string());
        }
        push("grid", self.grid.serialize());
        push(
            "or_thresholds",
            self.or_thresholds
                .iter()
                .map(|t| t.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        push("replications", self.replications.to_string());
        if !self.model_specs.is_empty() {
            push("model_specs", self.model_specs.join(","));
        }
        let s = &self.scenario;
        push("scenario_sites", s.sites.to_string());
        push("scenario_groups", s.groups.to_string());
        push("scenario_n_obs_min", s.n_obs_min.to_string());
        push("scenario_n_obs_max", s.n_obs_max.to_string());
        if let Some(p) = &s.n_obs_file {
            push("scenario_n_obs_file", p.display().to_string());
        }
        push("scenario_obs_rate_control", s.obs_rate_control.to_string());
        push(
            "scenario_obs_rate_intervention",
            s.obs_rate_intervention.to_string(),
        );
        push("scenario_rho1_control", s.rho1_control.to_string());
        push("scenario_rho1_intervention", s.rho1_intervention.to_string());
        push("scenario_rho2", s.rho2.to_string());
        push("scenario_rho3", s.rho3.to_string());
        push("scenario_sigma2_site", s.sigma2_site.to_string());
        push("scenario_sigma2_group", s.sigma2_group.to_string());
        out
    }
}
