//! Compiled log-likelihood with analytic gradients.
//!
//! Observations are compiled into sparse linear utility terms indexed by
//! parameter position. One evaluation routine covers all model kinds:
//! without random dimensions it is a plain logit; with random coefficients
//! and/or a latent attitude the per-individual likelihood is the average over
//! that individual's draws of the product of task probabilities (and, for the
//! latent model, indicator probabilities).
//!
//! Individuals are evaluated in parallel and reduced in a fixed order, so
//! results are bit-identical for any thread count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::draws::LatentDrawPlan;
use super::latent::{ordered_probit_terms, N_LIKERT};
use super::mnl::softmax_masked;
use crate::attributes::{ChoiceObservation, CostBook, Sociodemographics};
use crate::error::{Error, Result};
use crate::mode::ModeId;
use crate::params::names::*;
use crate::params::ParameterSet;
use crate::utility::utility_terms;

pub const MAX_ALTERNATIVES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mnl,
    Mixl,
    Hcm,
    Binary,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mnl" => Ok(ModelKind::Mnl),
            "mixl" => Ok(ModelKind::Mixl),
            "hcm" => Ok(ModelKind::Hcm),
            "binary" | "bikeability" => Ok(ModelKind::Binary),
            other => Err(Error::config(format!("unknown model kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Mnl => "mnl",
            ModelKind::Mixl => "mixl",
            ModelKind::Hcm => "hcm",
            ModelKind::Binary => "binary",
        })
    }
}

/// Normally distributed coefficient: mean parameter plus sd × draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomCoefficient {
    pub mean: usize,
    pub sd: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndicatorParams {
    pub loading: usize,
    pub intercept: usize,
    pub scale: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatentSpec {
    pub b_lv: usize,
    pub intercept: usize,
    pub sigma_s: usize,
    /// (coefficient index, sociodemographic flag name)
    pub structural: Vec<(usize, &'static str)>,
    /// Bitmask of alternatives receiving the latent effect.
    pub lv_alts: u8,
    pub indicators: Vec<IndicatorParams>,
    pub delta1: usize,
    pub delta2: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelStructure {
    pub kind: ModelKind,
    pub n_params: usize,
    pub random: Vec<RandomCoefficient>,
    pub latent: Option<LatentSpec>,
}

impl ModelStructure {
    /// Plain logit over all parameters of `params`.
    pub fn logit(kind: ModelKind, params: &ParameterSet) -> Self {
        ModelStructure {
            kind,
            n_params: params.len(),
            random: Vec::new(),
            latent: None,
        }
    }

    /// Structure of the SP mode-choice models. Mixed logit uses every
    /// (mean, sd) pair of the standard random-coefficient list present in
    /// `params`; the hybrid model wires the latent attitude into AB and ABPT.
    pub fn for_mode_choice(kind: ModelKind, params: &ParameterSet) -> Result<Self> {
        let mut s = Self::logit(kind, params);
        match kind {
            ModelKind::Mnl | ModelKind::Binary => {}
            ModelKind::Mixl => {
                for (mean, sd) in RANDOM_COEFFICIENTS {
                    if let Some(sd_idx) = params.index_of(sd) {
                        s.random.push(RandomCoefficient {
                            mean: params.require(mean)?,
                            sd: sd_idx,
                        });
                    }
                }
                if s.random.is_empty() {
                    return Err(Error::spec("mixed logit needs at least one sd parameter"));
                }
            }
            ModelKind::Hcm => {
                let mut structural = Vec::new();
                for (coef, flag) in STRUCTURAL {
                    structural.push((params.require(coef)?, flag));
                }
                let indicators = vec![
                    IndicatorParams {
                        loading: params.require(B_I10)?,
                        intercept: params.require(INTER_I10)?,
                        scale: params.require(SIGMA_I10)?,
                    },
                    IndicatorParams {
                        loading: params.require(B_I11)?,
                        intercept: params.require(INTER_I11)?,
                        scale: params.require(SIGMA_I11)?,
                    },
                ];
                s.latent = Some(LatentSpec {
                    b_lv: params.require(B_LV)?,
                    intercept: params.require(COEF_INTERCEPT)?,
                    sigma_s: params.require(SIGMA_S)?,
                    structural,
                    lv_alts: (1 << ModeId::AB.index()) | (1 << ModeId::ABPT.index()),
                    indicators,
                    delta1: params.require(DELTA_1)?,
                    delta2: params.require(DELTA_2)?,
                });
            }
        }
        Ok(s)
    }

    /// Number of standard-normal draws needed per simulation replication.
    pub fn dims(&self) -> usize {
        self.random.len() + usize::from(self.latent.is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub param: u32,
    pub alt: u8,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledTask {
    pub n_alt: usize,
    pub avail: u8,
    pub chosen: usize,
    pub weight: f64,
    pub terms: Vec<Term>,
    /// Zero-based row of the source record, for error reporting.
    pub source_row: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledIndividual {
    pub id: String,
    pub tasks: Vec<CompiledTask>,
    /// Structural-equation regressors, intercept included as z = 1.
    pub structural: Vec<(usize, f64)>,
    pub indicators: Vec<u8>,
    pub weight: f64,
}

/// Compiles one observation into sparse utility terms.
pub fn compile_task(
    obs: &ChoiceObservation,
    params: &ParameterSet,
    book: &CostBook,
    source_row: usize,
    weight: f64,
) -> Result<CompiledTask> {
    let mut terms = Vec::with_capacity(48);
    for t in utility_terms(obs, book) {
        let idx = params.require(t.param)?;
        if t.x != 0.0 {
            terms.push(Term {
                param: idx as u32,
                alt: t.alt.index() as u8,
                x: t.x,
            });
        }
    }
    Ok(CompiledTask {
        n_alt: crate::mode::N_MODES,
        avail: obs.availability.bits(),
        chosen: obs.chosen.index(),
        weight,
        terms,
        source_row,
    })
}

pub fn compile_structural(socio: &Sociodemographics, latent: &LatentSpec) -> Vec<(usize, f64)> {
    let mut z = vec![(latent.intercept, 1.0)];
    for (idx, flag) in &latent.structural {
        if socio.flag(flag).expect("known flag") {
            z.push((*idx, 1.0));
        }
    }
    z
}

/// Groups SP observations by individual (sorted by id) and compiles them.
/// Tasks within an individual are ordered by task index, then source row.
pub fn compile_observations(
    data: &[ChoiceObservation],
    params: &ParameterSet,
    structure: &ModelStructure,
    book: &CostBook,
    weighted: bool,
) -> Result<Vec<CompiledIndividual>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (row, obs) in data.iter().enumerate() {
        obs.validate().map_err(|e| Error::data(row, e.to_string()))?;
        groups.entry(obs.individual_id.as_str()).or_default().push(row);
    }
    let mut out = Vec::with_capacity(groups.len());
    for (id, mut rows) in groups {
        rows.sort_by_key(|r| (data[*r].task_index, *r));
        let mut tasks = Vec::with_capacity(rows.len());
        let mut wsum = 0.0;
        for r in &rows {
            let w = if weighted { data[*r].weight } else { 1.0 };
            wsum += w;
            tasks.push(compile_task(&data[*r], params, book, *r, w)?);
        }
        let first = &data[rows[0]];
        let (structural, indicators) = match &structure.latent {
            Some(lat) => {
                let ind = first.indicators.ok_or_else(|| {
                    Error::data(rows[0], format!("individual `{id}` has no indicator responses"))
                })?;
                (compile_structural(&first.socio, lat), ind.to_vec())
            }
            None => (Vec::new(), Vec::new()),
        };
        out.push(CompiledIndividual {
            id: id.to_string(),
            tasks,
            structural,
            indicators,
            weight: wsum / rows.len() as f64,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loglik: f64,
    /// Gradient with respect to every parameter (natural space).
    pub gradient: Vec<f64>,
    /// Per-individual gradient contributions, in individual order.
    pub scores: Vec<Vec<f64>>,
}

/// A compiled estimation problem: structure, data and fixed draws.
#[derive(Debug, Clone)]
pub struct Problem {
    pub structure: ModelStructure,
    pub individuals: Vec<CompiledIndividual>,
    plan: Option<LatentDrawPlan>,
    draws: Vec<Vec<f64>>,
}

impl Problem {
    pub fn new(
        structure: ModelStructure,
        individuals: Vec<CompiledIndividual>,
        plan: Option<LatentDrawPlan>,
    ) -> Result<Self> {
        if individuals.is_empty() {
            return Err(Error::data(0, "no observations"));
        }
        for ind in &individuals {
            for t in &ind.tasks {
                if t.n_alt > MAX_ALTERNATIVES {
                    return Err(Error::spec("too many alternatives"));
                }
                if t.avail & (1 << t.chosen) == 0 {
                    return Err(Error::data(t.source_row, "chosen alternative is not available"));
                }
            }
            if let Some(lat) = &structure.latent {
                if ind.indicators.len() != lat.indicators.len() {
                    let row = ind.tasks.first().map_or(0, |t| t.source_row);
                    return Err(Error::data(row, format!("individual `{}` lacks indicator responses", ind.id)));
                }
                if ind.indicators.iter().any(|y| !(1..=N_LIKERT).contains(y)) {
                    let row = ind.tasks.first().map_or(0, |t| t.source_row);
                    return Err(Error::data(row, "indicator response outside 1..=5"));
                }
            }
        }
        let dims = structure.dims();
        let draws = if dims > 0 {
            let plan = plan.ok_or_else(|| Error::config("a draw plan is required for simulated likelihood"))?;
            plan.validate()?;
            individuals
                .par_iter()
                .map(|ind| plan.draws_for(&ind.id, dims))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok(Problem {
            structure,
            individuals,
            plan: if dims > 0 { plan } else { None },
            draws,
        })
    }

    pub fn plan(&self) -> Option<LatentDrawPlan> {
        self.plan
    }

    pub fn n_obs(&self) -> usize {
        self.individuals.iter().map(|i| i.tasks.len()).sum()
    }

    /// Log-likelihood of the equal-probability model (indicators uniform over the five categories).
    pub fn null_loglik(&self) -> f64 {
        let per_ind: Vec<f64> = self
            .individuals
            .iter()
            .map(|ind| {
                let mut ll = 0.0;
                for t in &ind.tasks {
                    let w = if self.structure.dims() > 0 { 1.0 } else { t.weight };
                    ll += w * -(t.avail.count_ones() as f64).ln();
                }
                if self.structure.latent.is_some() {
                    ll += ind.indicators.len() as f64 * -(N_LIKERT as f64).ln();
                }
                if self.structure.dims() > 0 {
                    ll *= ind.weight;
                }
                ll
            })
            .collect();
        per_ind.iter().sum()
    }

    pub fn loglik(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.evaluate(theta, false)?.loglik)
    }

    /// Evaluates the log-likelihood and, when requested, the gradient and per-individual scores.
    pub fn evaluate(&self, theta: &[f64], with_gradient: bool) -> Result<Evaluation> {
        if theta.len() != self.structure.n_params {
            return Err(Error::spec(format!(
                "expected {} parameter values, got {}",
                self.structure.n_params,
                theta.len()
            )));
        }
        let parts: Vec<(f64, Vec<f64>)> = self
            .individuals
            .par_iter()
            .enumerate()
            .map(|(n, ind)| self.individual(n, ind, theta, with_gradient))
            .collect();
        let mut loglik = 0.0;
        let mut gradient = vec![0.0; theta.len()];
        for (ll, g) in &parts {
            loglik += ll;
            for (acc, v) in gradient.iter_mut().zip(g) {
                *acc += v;
            }
        }
        let scores = if with_gradient {
            parts.into_iter().map(|(_, g)| g).collect()
        } else {
            Vec::new()
        };
        Ok(Evaluation {
            loglik,
            gradient,
            scores,
        })
    }

    /// Per-task log-probabilities of the chosen alternative at `theta`
    /// (no draws: exact; with draws: log of the simulated marginal).
    pub fn first_nonfinite_row(&self, theta: &[f64]) -> Option<usize> {
        for (n, ind) in self.individuals.iter().enumerate() {
            let (ll, _) = self.individual(n, ind, theta, false);
            if !ll.is_finite() {
                return ind.tasks.first().map(|t| t.source_row);
            }
        }
        None
    }

    fn individual(&self, n: usize, ind: &CompiledIndividual, theta: &[f64], grad: bool) -> (f64, Vec<f64>) {
        if self.structure.dims() == 0 {
            logit_individual(ind, theta, grad)
        } else {
            self.simulated_individual(ind, &self.draws[n], theta, grad)
        }
    }

    fn simulated_individual(
        &self,
        ind: &CompiledIndividual,
        draws: &[f64],
        theta: &[f64],
        want_grad: bool,
    ) -> (f64, Vec<f64>) {
        let s = &self.structure;
        let dims = s.dims();
        let k_rand = s.random.len();
        let n_draws = draws.len() / dims;
        let n_tasks = ind.tasks.len();

        // draw-invariant parts of each task
        let a = MAX_ALTERNATIVES;
        let mut v0 = vec![0.0; n_tasks * a];
        let mut xk = vec![0.0; n_tasks * k_rand * a];
        for (t, task) in ind.tasks.iter().enumerate() {
            for term in &task.terms {
                let p = term.param as usize;
                v0[t * a + term.alt as usize] += theta[p] * term.x;
                for (k, rc) in s.random.iter().enumerate() {
                    if rc.mean == p {
                        xk[(t * k_rand + k) * a + term.alt as usize] += term.x;
                    }
                }
            }
        }
        let sd: Vec<f64> = s.random.iter().map(|rc| theta[rc.sd]).collect();
        let lat = s.latent.as_ref();
        let structural_mean: f64 = ind.structural.iter().map(|(p, z)| theta[*p] * z).sum();

        let mut ell = vec![0.0; n_draws];
        let stride = n_tasks * a;
        let mut probs = if want_grad { vec![0.0; n_draws * stride] } else { Vec::new() };
        let mut probit = if want_grad && lat.is_some() {
            vec![Default::default(); n_draws * ind.indicators.len()]
        } else {
            Vec::new()
        };
        let mut v = [0.0; MAX_ALTERNATIVES];
        let mut p = [0.0; MAX_ALTERNATIVES];

        for r in 0..n_draws {
            let row = &draws[r * dims..(r + 1) * dims];
            let lv_eff = lat.map(|l| {
                let lv = structural_mean + theta[l.sigma_s] * row[k_rand];
                (lv, -theta[l.b_lv] * lv.tanh())
            });
            let mut ll_r = 0.0;
            for (t, task) in ind.tasks.iter().enumerate() {
                for alt in 0..task.n_alt {
                    let mut u = v0[t * a + alt];
                    for k in 0..k_rand {
                        u += sd[k] * row[k] * xk[(t * k_rand + k) * a + alt];
                    }
                    if let (Some(l), Some((_, e))) = (lat, lv_eff) {
                        if l.lv_alts & (1 << alt) != 0 {
                            u += e;
                        }
                    }
                    v[alt] = u;
                }
                let (max, lse) = softmax_masked(&v[..task.n_alt], task.avail, &mut p[..task.n_alt]);
                ll_r += v[task.chosen] - max - lse;
                if want_grad {
                    probs[r * stride + t * a..r * stride + t * a + task.n_alt].copy_from_slice(&p[..task.n_alt]);
                }
            }
            if let (Some(l), Some((lv, _))) = (lat, lv_eff) {
                for (i, (ip, y)) in l.indicators.iter().zip(&ind.indicators).enumerate() {
                    let terms = ordered_probit_terms(
                        *y,
                        lv,
                        theta[ip.loading],
                        theta[ip.intercept],
                        theta[ip.scale],
                        theta[l.delta1],
                        theta[l.delta2],
                    );
                    ll_r += terms.log_p;
                    if want_grad {
                        probit[r * ind.indicators.len() + i] = terms;
                    }
                }
            }
            ell[r] = ll_r;
        }

        let max = ell.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return (f64::NEG_INFINITY, vec![0.0; theta.len()]);
        }
        let sum: f64 = ell.iter().map(|l| (l - max).exp()).sum();
        let log_l = max + (sum.ln() - (n_draws as f64).ln());
        let w = ind.weight;
        if !want_grad {
            return (w * log_l, Vec::new());
        }

        let mut g = vec![0.0; theta.len()];
        let mut resid = vec![0.0; stride];
        let mut g_lv = 0.0;
        let mut g_lv_omega = 0.0;
        for r in 0..n_draws {
            let pi = (ell[r] - max).exp() / sum;
            if pi == 0.0 {
                continue;
            }
            let row = &draws[r * dims..(r + 1) * dims];
            let mut lv_alt_resid = 0.0;
            for (t, task) in ind.tasks.iter().enumerate() {
                for alt in 0..task.n_alt {
                    if task.avail & (1 << alt) == 0 {
                        continue;
                    }
                    let e = f64::from(u8::from(alt == task.chosen)) - probs[r * stride + t * a + alt];
                    resid[t * a + alt] += pi * e;
                    for k in 0..k_rand {
                        g[s.random[k].sd] += pi * e * row[k] * xk[(t * k_rand + k) * a + alt];
                    }
                    if let Some(l) = lat {
                        if l.lv_alts & (1 << alt) != 0 {
                            lv_alt_resid += e;
                        }
                    }
                }
            }
            if let Some(l) = lat {
                let omega = row[k_rand];
                let lv = structural_mean + theta[l.sigma_s] * omega;
                let th = lv.tanh();
                g[l.b_lv] += pi * lv_alt_resid * -th;
                let mut d_lv = lv_alt_resid * (-theta[l.b_lv] * (1.0 - th * th));
                let n_ind = ind.indicators.len();
                for (i, ip) in l.indicators.iter().enumerate() {
                    let tm = &probit[r * n_ind + i];
                    d_lv += tm.d_lv;
                    g[ip.loading] += pi * tm.d_loading;
                    g[ip.intercept] += pi * tm.d_intercept;
                    g[ip.scale] += pi * tm.d_scale;
                    g[l.delta1] += pi * tm.d_delta1;
                    g[l.delta2] += pi * tm.d_delta2;
                }
                g_lv += pi * d_lv;
                g_lv_omega += pi * d_lv * omega;
            }
        }
        for (t, task) in ind.tasks.iter().enumerate() {
            for term in &task.terms {
                g[term.param as usize] += term.x * resid[t * a + term.alt as usize];
            }
        }
        if let Some(l) = lat {
            for (p_idx, z) in &ind.structural {
                g[*p_idx] += z * g_lv;
            }
            g[l.sigma_s] += g_lv_omega;
        }
        if w != 1.0 {
            for x in g.iter_mut() {
                *x *= w;
            }
        }
        (w * log_l, g)
    }

    /// Simulated choice probabilities for one task (indicators are not used).
    pub fn predict_task(
        structure: &ModelStructure,
        theta: &[f64],
        task: &CompiledTask,
        structural: &[(usize, f64)],
        draws: Option<&[f64]>,
    ) -> Vec<f64> {
        let n_alt = task.n_alt;
        let mut v = vec![0.0; n_alt];
        for term in &task.terms {
            v[term.alt as usize] += theta[term.param as usize] * term.x;
        }
        let mut p = vec![0.0; n_alt];
        let dims = structure.dims();
        let draws = match draws {
            Some(d) if dims > 0 => d,
            _ => {
                softmax_masked(&v, task.avail, &mut p);
                return p;
            }
        };
        let k_rand = structure.random.len();
        let mut xk = vec![0.0; k_rand * n_alt];
        for term in &task.terms {
            for (k, rc) in structure.random.iter().enumerate() {
                if rc.mean == term.param as usize {
                    xk[k * n_alt + term.alt as usize] += term.x;
                }
            }
        }
        let lat = structure.latent.as_ref();
        let structural_mean: f64 = structural.iter().map(|(i, z)| theta[*i] * z).sum();
        let n_draws = draws.len() / dims;
        let mut acc = vec![0.0; n_alt];
        let mut u = vec![0.0; n_alt];
        for r in 0..n_draws {
            let row = &draws[r * dims..(r + 1) * dims];
            let lv_eff = lat.map(|l| -theta[l.b_lv] * (structural_mean + theta[l.sigma_s] * row[k_rand]).tanh());
            for alt in 0..n_alt {
                let mut x = v[alt];
                for k in 0..k_rand {
                    x += theta[structure.random[k].sd] * row[k] * xk[k * n_alt + alt];
                }
                if let (Some(l), Some(e)) = (lat, lv_eff) {
                    if l.lv_alts & (1 << alt) != 0 {
                        x += e;
                    }
                }
                u[alt] = x;
            }
            softmax_masked(&u, task.avail, &mut p);
            for (a, pr) in acc.iter_mut().zip(&p) {
                *a += pr;
            }
        }
        for a in acc.iter_mut() {
            *a /= n_draws as f64;
        }
        acc
    }
}

fn logit_individual(ind: &CompiledIndividual, theta: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
    let mut g = if want_grad { vec![0.0; theta.len()] } else { Vec::new() };
    let mut ll = 0.0;
    let mut v = [0.0; MAX_ALTERNATIVES];
    let mut p = [0.0; MAX_ALTERNATIVES];
    for task in &ind.tasks {
        v[..task.n_alt].iter_mut().for_each(|x| *x = 0.0);
        for term in &task.terms {
            v[term.alt as usize] += theta[term.param as usize] * term.x;
        }
        let (max, lse) = softmax_masked(&v[..task.n_alt], task.avail, &mut p[..task.n_alt]);
        ll += task.weight * (v[task.chosen] - max - lse);
        if want_grad {
            for term in &task.terms {
                let alt = term.alt as usize;
                let e = f64::from(u8::from(alt == task.chosen)) - p[alt];
                g[term.param as usize] += task.weight * term.x * e;
            }
        }
    }
    (ll, g)
}
