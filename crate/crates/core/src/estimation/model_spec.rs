//! Model-specification files (TOML).
//!
//! ```toml
//! model = "mixl"
//! preset = "mixl"                 # optional starting layout
//! random = ["B_cost", "ASC_ab"]   # mixed logit: means that get an sd
//! estimate_sigma_s = false        # hybrid model only
//!
//! [draws]
//! n = 1000
//! seed = 42
//! kind = "quasi_random"
//!
//! [convergence]
//! gradient_tol = 1e-5
//! max_iter = 500
//!
//! [start]
//! B_cost = -1.0
//!
//! [fixed]
//! B_errands = 0.0
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::draws::{LatentDrawPlan, SequenceKind};
use super::engine::ModelKind;
use super::estimate::EstimationConfig;
use crate::attributes::CostBook;
use crate::error::{Error, Result};
use crate::params::names::{RANDOM_COEFFICIENTS, SIGMA_S};
use crate::params::ParameterSet;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrawsSection {
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub kind: Option<SequenceKind>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    pub gradient_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub newton_polish: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub model: ModelKind,
    pub preset: Option<String>,
    pub estimate_sigma_s: Option<bool>,
    pub random: Option<Vec<String>>,
    #[serde(default)]
    pub weighted: bool,
    #[serde(default)]
    pub draws: DrawsSection,
    #[serde(default)]
    pub convergence: ConvergenceSection,
    #[serde(default)]
    pub start: BTreeMap<String, f64>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    #[serde(default)]
    pub free: Vec<String>,
    pub costs: Option<CostBook>,
}

impl ModelSpec {
    pub fn for_kind(model: ModelKind) -> Self {
        ModelSpec {
            model,
            preset: None,
            estimate_sigma_s: None,
            random: None,
            weighted: false,
            draws: DrawsSection::default(),
            convergence: ConvergenceSection::default(),
            start: BTreeMap::new(),
            fixed: BTreeMap::new(),
            free: Vec::new(),
            costs: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Starting parameter set with overrides applied.
    pub fn start_parameters(&self) -> Result<ParameterSet> {
        let mut set = match (&self.preset, self.model) {
            (Some(p), ModelKind::Binary) if p == "bikeability" || p == "published" => {
                crate::bikeability::published_parameters()
            }
            (Some(p), _) => ParameterSet::preset(p)?,
            (None, ModelKind::Mnl) => ParameterSet::mnl_start(),
            (None, ModelKind::Mixl) => ParameterSet::mixl_start(),
            (None, ModelKind::Hcm) => ParameterSet::hcm_start(self.estimate_sigma_s.unwrap_or(false)),
            (None, ModelKind::Binary) => crate::bikeability::start_parameters(),
        };
        if self.model == ModelKind::Hcm {
            if let Some(est) = self.estimate_sigma_s {
                let v = set.value(SIGMA_S)?;
                if est {
                    set.free(SIGMA_S)?;
                } else {
                    set.fix(SIGMA_S, v)?;
                }
            }
        }
        if let Some(random) = &self.random {
            if self.model != ModelKind::Mixl {
                return Err(Error::config("`random` applies to mixed logit only"));
            }
            for name in random {
                if !RANDOM_COEFFICIENTS.iter().any(|(m, _)| m == name) {
                    return Err(Error::config(format!("`{name}` cannot be random")));
                }
            }
            for (mean, sd) in RANDOM_COEFFICIENTS {
                if !random.iter().any(|r| r == mean) {
                    set.fix(sd, 0.0).map_err(|e| Error::config(e.to_string()))?;
                }
            }
        }
        for (name, v) in &self.start {
            set.set_value(name, *v).map_err(|e| Error::config(e.to_string()))?;
        }
        for (name, v) in &self.fixed {
            set.fix(name, *v).map_err(|e| Error::config(e.to_string()))?;
        }
        for name in &self.free {
            set.free(name).map_err(|e| Error::config(e.to_string()))?;
        }
        Ok(set)
    }

    pub fn estimation_config(&self) -> Result<EstimationConfig> {
        let d = EstimationConfig::default();
        let plan = LatentDrawPlan::new(
            self.draws.n.unwrap_or(d.plan.n_draws),
            self.draws.seed.unwrap_or(d.plan.seed),
            self.draws.kind.unwrap_or(d.plan.sequence_kind),
        );
        let cfg = EstimationConfig {
            plan,
            gradient_tol: self.convergence.gradient_tol.unwrap_or(d.gradient_tol),
            max_iter: self.convergence.max_iter.unwrap_or(d.max_iter),
            weighted: self.weighted,
            newton_polish: self.convergence.newton_polish.unwrap_or(d.newton_polish),
            book: self.costs.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
