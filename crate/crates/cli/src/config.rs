use std::path::Path;

use geoasian_core::laplace::ContourConfig;
use geoasian_core::mc::{Scheme, SimConfig};
use geoasian_core::{ContractSpec, Error, ModelSpec, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Table,
    Csv,
    Jsonl,
}

/// `[sim]` section. Every field is optional except `seed`, which `validate`
/// requires so that runs are reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SimSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antithetic: Option<bool>,
}

impl SimSection {
    pub fn resolve(&self, model: &ModelSpec) -> Result<SimConfig, CliError> {
        let seed = self
            .seed
            .ok_or_else(|| CliError::Config("[sim] seed: an explicit seed is required".into()))?;
        let d = SimConfig::default();
        let sim = SimConfig {
            n_paths: self.n_paths.unwrap_or(d.n_paths),
            n_steps: self.n_steps.unwrap_or(d.n_steps),
            seed,
            scheme: self.scheme.unwrap_or(Scheme::for_model(model)),
            antithetic: self.antithetic.unwrap_or(d.antithetic),
        };
        sim.validate().map_err(|e| section_error("sim", e))?;
        Ok(sim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strikes: Option<Vec<f64>>,
    #[serde(default)]
    pub output: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_path: Option<String>,
    pub model: ModelSpec,
    pub contract: ContractSpec,
    #[serde(default)]
    pub contour: ContourConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sim: SimSection,
}

pub(crate) fn section_error(section: &str, e: Error) -> CliError {
    let detail = match &e {
        Error::InvalidParameter { name, reason } => format!("{name}: {reason}"),
        other => other.to_string(),
    };
    CliError::Config(format!("[{section}] {detail}"))
}

impl JobConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: JobConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model.validate().map_err(|e| section_error("model", e))?;
        if let Some(strikes) = &self.strikes {
            if strikes.is_empty() {
                return Err(CliError::Config("strikes: must be nonempty when present".into()));
            }
            if let Some(k) = strikes.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
                return Err(CliError::Config(format!("strikes: {k} is not a positive strike")));
            }
        }
        for c in self.contracts() {
            c.validate().map_err(|e| section_error("contract", e))?;
        }
        self.contour
            .validate(self.contract.payoff)
            .map_err(|e| section_error("contour", e))?;
        self.solver.validate().map_err(|e| section_error("solver", e))?;
        Ok(())
    }

    /// One contract per strike, sorted by strike.
    pub fn contracts(&self) -> Vec<ContractSpec> {
        let mut strikes = self.strikes.clone().unwrap_or_else(|| vec![self.contract.strike]);
        strikes.sort_by(f64::total_cmp);
        strikes.into_iter().map(|k| self.contract.with_strike(k)).collect()
    }
}
