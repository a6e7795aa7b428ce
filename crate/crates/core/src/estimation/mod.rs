//! Likelihoods and maximum-likelihood estimation for logit, panel mixed logit
//! and hybrid choice models.

pub mod draws;
pub mod engine;
pub mod estimate;
pub mod latent;
pub mod mnl;
pub mod model_spec;
pub mod numdiff;
pub mod optim;

pub use draws::{LatentDrawPlan, SequenceKind};
pub use engine::{ModelKind, ModelStructure, Problem};
pub use estimate::{
    build_problem, estimate, estimate_problem, fit_statistics, hcm_loglik, mixl_loglik, mnl_loglik,
    ConvergenceReport, EstimationConfig, EstimationResult, FitStatistics,
};
pub use latent::{lv_effect, ordered_probit_prob, structural_lv};
pub use mnl::mnl_prob;
pub use model_spec::ModelSpec;
pub use numdiff::numeric_gradient;
