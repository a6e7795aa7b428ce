//! Maximum-likelihood driver: optimization, robust covariance and fit statistics.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::draws::LatentDrawPlan;
use super::engine::{compile_observations, ModelKind, ModelStructure, Problem};
use super::numdiff::hessian_from_gradient;
use super::optim::{bfgs, inf_norm, BfgsOptions};
use crate::attributes::{ChoiceObservation, CostBook};
use crate::error::{Error, Result};
use crate::params::ParameterSet;

/// Smallest eigenvalue of the per-observation information matrix below which
/// the optimum is treated as unidentified (e.g. a diverging constant).
pub const MIN_INFORMATION_PER_OBS: f64 = 1e-6;

const HESSIAN_STEP: f64 = 1e-5;
const NEWTON_STEPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfig {
    pub plan: LatentDrawPlan,
    pub gradient_tol: f64,
    pub max_iter: usize,
    /// Multiply log-likelihood contributions by observation weights.
    pub weighted: bool,
    /// Finish with Newton steps on the numeric Hessian when BFGS stalls.
    pub newton_polish: bool,
    pub book: CostBook,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            plan: LatentDrawPlan::default(),
            gradient_tol: 1e-5,
            max_iter: 500,
            weighted: false,
            newton_polish: true,
            book: CostBook::default(),
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_tol > 0.0) {
            return Err(Error::config("gradient tolerance must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter must be positive"));
        }
        self.plan.validate()?;
        self.book.validate().map_err(|e| Error::config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitStatistics {
    pub aic: f64,
    pub bic: f64,
    pub rho_bar_sq: f64,
}

/// AIC, BIC and adjusted McFadden ρ̄² for `k` free parameters and `n_obs` observations.
pub fn fit_statistics(k: usize, ll: f64, ll0: f64, n_obs: usize) -> Result<FitStatistics> {
    if ll0 >= 0.0 || !ll0.is_finite() {
        return Err(Error::domain("null log-likelihood must be negative"));
    }
    if n_obs == 0 {
        return Err(Error::domain("no observations"));
    }
    let k = k as f64;
    Ok(FitStatistics {
        aic: 2.0 * k - 2.0 * ll,
        bic: k * (n_obs as f64).ln() - 2.0 * ll,
        rho_bar_sq: 1.0 - (ll - k) / ll0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    /// Infinity norm of the log-likelihood gradient in working space.
    pub gradient_norm: f64,
    pub iterations: usize,
    pub min_information_eigenvalue: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub model: ModelKind,
    pub params: ParameterSet,
    pub ll0: f64,
    pub ll_final: f64,
    pub k: usize,
    pub n_obs: usize,
    pub n_individuals: usize,
    pub rho_bar_sq: f64,
    pub aic: f64,
    pub bic: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<LatentDrawPlan>,
    pub convergence: ConvergenceReport,
}

/// Compiles SP observations for a mode-choice model of `kind`.
pub fn build_problem(
    kind: ModelKind,
    data: &[ChoiceObservation],
    params: &ParameterSet,
    config: &EstimationConfig,
) -> Result<Problem> {
    if kind == ModelKind::Binary {
        return Err(Error::spec("binary models are built from bikeability records"));
    }
    let structure = ModelStructure::for_mode_choice(kind, params)?;
    let individuals = compile_observations(data, params, &structure, &config.book, config.weighted)?;
    Problem::new(structure, individuals, Some(config.plan))
}

/// Unweighted multinomial-logit log-likelihood.
pub fn mnl_loglik(data: &[ChoiceObservation], params: &ParameterSet) -> Result<f64> {
    let problem = build_problem(ModelKind::Mnl, data, params, &EstimationConfig::default())?;
    problem.loglik(&params.values())
}

/// Unweighted simulated panel mixed-logit log-likelihood.
pub fn mixl_loglik(data: &[ChoiceObservation], params: &ParameterSet, plan: &LatentDrawPlan) -> Result<f64> {
    let config = EstimationConfig {
        plan: *plan,
        ..Default::default()
    };
    build_problem(ModelKind::Mixl, data, params, &config)?.loglik(&params.values())
}

/// Unweighted simulated joint log-likelihood of choices and indicators.
pub fn hcm_loglik(data: &[ChoiceObservation], params: &ParameterSet, plan: &LatentDrawPlan) -> Result<f64> {
    let config = EstimationConfig {
        plan: *plan,
        ..Default::default()
    };
    build_problem(ModelKind::Hcm, data, params, &config)?.loglik(&params.values())
}

/// Estimates a mode-choice model from SP observations.
pub fn estimate(
    kind: ModelKind,
    data: &[ChoiceObservation],
    start: &ParameterSet,
    config: &EstimationConfig,
) -> Result<EstimationResult> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::data(0, "no observations"));
    }
    let problem = build_problem(kind, data, start, config)?;
    estimate_problem(&problem, start, config)
}

struct Objective<'a> {
    problem: &'a Problem,
    start: &'a ParameterSet,
    free: Vec<usize>,
}

impl Objective<'_> {
    fn theta(&self, x: &[f64]) -> Vec<f64> {
        self.start.values_from_working(x)
    }

    fn jacobian(&self, theta: &[f64]) -> Vec<f64> {
        self.free
            .iter()
            .map(|i| if self.start.param(*i).role.is_positive() { theta[*i] } else { 1.0 })
            .collect()
    }

    /// Negative log-likelihood and its working-space gradient.
    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let theta = self.theta(x);
        let ev = self.problem.evaluate(&theta, true)?;
        let jac = self.jacobian(&theta);
        let g = self
            .free
            .iter()
            .zip(&jac)
            .map(|(i, j)| -ev.gradient[*i] * j)
            .collect();
        Ok((-ev.loglik, g))
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let h = hessian_from_gradient(
            |y| {
                self.value_grad(y)
                    .map(|(_, g)| g)
                    .unwrap_or_else(|_| vec![f64::NAN; n])
            },
            x,
            HESSIAN_STEP,
        );
        DMatrix::from_row_slice(n, n, &h)
    }
}

fn newton_polish(obj: &Objective, x: &mut Vec<f64>, f: &mut f64, g: &mut Vec<f64>, tol: f64) -> Result<()> {
    for _ in 0..NEWTON_STEPS {
        if inf_norm(g) < tol {
            break;
        }
        let h = obj.hessian(x);
        let Some(chol) = h.cholesky() else { break };
        let d = chol.solve(&DVector::from_column_slice(g));
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let trial: Vec<f64> = x.iter().zip(d.iter()).map(|(xi, di)| xi - t * di).collect();
            let (ft, gt) = obj.value_grad(&trial)?;
            if ft.is_finite() && ft <= *f + 1e-10 * f.abs().max(1.0) && inf_norm(&gt) < inf_norm(g) {
                *x = trial;
                *f = ft;
                *g = gt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(())
}

/// Inverse of a symmetric matrix through its eigendecomposition; `None` if not positive definite.
fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().cholesky().map(|c| c.inverse())
}

/// Maximizes the likelihood of an already compiled problem.
pub fn estimate_problem(problem: &Problem, start: &ParameterSet, config: &EstimationConfig) -> Result<EstimationResult> {
    config.validate()?;
    let obj = Objective {
        problem,
        start,
        free: start.free_indices(),
    };
    let theta0 = start.values();
    let ll_start = problem.loglik(&theta0)?;
    if !ll_start.is_finite() {
        let row = problem.first_nonfinite_row(&theta0).unwrap_or(0);
        return Err(Error::data(row, "log-likelihood is not finite at the starting values"));
    }
    let x0 = start.working_vector();
    let opts = BfgsOptions {
        gradient_tol: config.gradient_tol,
        max_iter: config.max_iter,
    };
    let out = bfgs(|x| obj.value_grad(x), &x0, &opts)?;
    let (mut x, mut f, mut g) = (out.x, out.f, out.gradient);
    let mut message = out.message;
    if !out.converged && config.newton_polish && !x.is_empty() {
        newton_polish(&obj, &mut x, &mut f, &mut g, config.gradient_tol)?;
        if inf_norm(&g) < config.gradient_tol {
            message = "gradient tolerance reached after Newton refinement".into();
        }
    }
    let mut converged = inf_norm(&g) < config.gradient_tol;

    let theta = obj.theta(&x);
    let jac = obj.jacobian(&theta);
    let n = x.len();
    let n_obs = problem.n_obs();
    let mut min_eig = f64::NAN;
    let mut se = vec![None; n];
    if n > 0 {
        // information matrix in working space (Hessian of the negative log-likelihood)
        let a = obj.hessian(&x);
        let mut a_nat = a.clone();
        for i in 0..n {
            for j in 0..n {
                a_nat[(i, j)] /= jac[i] * jac[j];
            }
        }
        min_eig = if a_nat.iter().all(|v| v.is_finite()) {
            SymmetricEigen::new(a_nat).eigenvalues.min()
        } else {
            f64::NAN
        };
        if !(min_eig / n_obs as f64 >= MIN_INFORMATION_PER_OBS) {
            converged = false;
            message = format!(
                "information matrix is near singular (smallest eigenvalue {min_eig:.3e}); a parameter is not identified or diverges"
            );
        }
        let ev = problem.evaluate(&theta, true)?;
        let mut b = DMatrix::<f64>::zeros(n, n);
        for s in &ev.scores {
            let sw = DVector::from_iterator(n, obj.free.iter().zip(&jac).map(|(i, j)| s[*i] * j));
            b += &sw * sw.transpose();
        }
        if let Some(ainv) = spd_inverse(&a) {
            let cov = &ainv * b * &ainv;
            for k in 0..n {
                let v = cov[(k, k)];
                if v.is_finite() && v >= 0.0 {
                    se[k] = Some(jac[k] * v.sqrt());
                }
            }
        }
    }

    let mut params = start.clone();
    params.set_values(&theta);
    for (k, i) in obj.free.iter().enumerate() {
        params.set_robust_se(*i, se[k]);
    }
    let ll_final = -f;
    let ll0 = problem.null_loglik();
    let k = n;
    let stats = fit_statistics(k, ll_final, ll0, n_obs)?;
    Ok(EstimationResult {
        model: problem.structure.kind,
        params,
        ll0,
        ll_final,
        k,
        n_obs,
        n_individuals: problem.individuals.len(),
        rho_bar_sq: stats.rho_bar_sq,
        aic: stats.aic,
        bic: stats.bic,
        draws: problem.plan(),
        convergence: ConvergenceReport {
            converged,
            gradient_norm: inf_norm(&g),
            iterations: out.iterations,
            min_information_eigenvalue: min_eig,
            message,
        },
    })
}
