//! Cross-validated predictive accuracy, mode-share error and value-of-time ratios.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attributes::ChoiceObservation;
use crate::error::{Error, Result};
use crate::estimation::engine::{compile_observations, ModelKind, ModelStructure, Problem};
use crate::estimation::{estimate, EstimationConfig};
use crate::mode::{ModeId, N_MODES};
use crate::params::{names, ParameterSet};

/// Assignment of individuals to folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
}

impl Default for FoldPlan {
    fn default() -> Self {
        FoldPlan { k: 5, seed: 42 }
    }
}

impl FoldPlan {
    pub fn new(k: usize, seed: u64) -> Self {
        FoldPlan { k, seed }
    }

    /// Fold of every individual. Depends only on the set of ids, not on row order.
    pub fn assign(&self, data: &[ChoiceObservation]) -> Result<BTreeMap<String, usize>> {
        if self.k < 2 {
            return Err(Error::config("cross-validation needs at least 2 folds"));
        }
        let ids: BTreeSet<&str> = data.iter().map(|o| o.individual_id.as_str()).collect();
        if ids.len() < self.k {
            return Err(Error::domain(format!("{} individuals cannot fill {} folds", ids.len(), self.k)));
        }
        let mut ids: Vec<&str> = ids.into_iter().collect();
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));
        Ok(ids.into_iter().enumerate().map(|(i, id)| (id.to_string(), i % self.k)).collect())
    }
}

/// How a predicted distribution is scored against the observed choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scoring {
    /// Highest-probability available alternative; ties go to the lower mode index.
    #[default]
    Argmax,
    /// Probability assigned to the chosen alternative.
    Expected,
}

/// Scores of one held-out fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    /// Recall per chosen mode; `None` when the mode is never chosen in the fold.
    pub accuracy: [Option<f64>; N_MODES],
    /// Share of all tasks classified correctly.
    pub overall: f64,
    /// Mean over modes of |predicted share − actual share|, percentage points.
    pub share_mad: f64,
    pub n_tasks: usize,
}

impl FoldScore {
    /// Mean of the defined per-mode accuracies.
    pub fn mean_mode_accuracy(&self) -> Option<f64> {
        let v: Vec<f64> = self.accuracy.iter().flatten().copied().collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

fn argmax(p: &[f64; N_MODES], avail: crate::mode::Availability) -> usize {
    let mut best = None::<usize>;
    for m in avail.iter() {
        let i = m.index();
        if best.is_none_or(|b| p[i] > p[b]) {
            best = Some(i);
        }
    }
    best.unwrap_or(0)
}

/// Scores predicted probabilities against observed choices.
pub fn score_predictions(data: &[ChoiceObservation], probabilities: &[[f64; N_MODES]], scoring: Scoring) -> Result<FoldScore> {
    if data.len() != probabilities.len() {
        return Err(Error::spec("predictions are not aligned with observations"));
    }
    if data.is_empty() {
        return Err(Error::domain("no tasks to score"));
    }
    let mut hits = [0.0; N_MODES];
    let mut counts = [0usize; N_MODES];
    let mut predicted = [0.0; N_MODES];
    let mut actual = [0.0; N_MODES];
    let mut correct = 0.0;
    for (obs, p) in data.iter().zip(probabilities) {
        let c = obs.chosen.index();
        let score = match scoring {
            Scoring::Argmax => f64::from(u8::from(argmax(p, obs.availability) == c)),
            Scoring::Expected => p[c],
        };
        hits[c] += score;
        counts[c] += 1;
        correct += score;
        actual[c] += 1.0;
        for m in 0..N_MODES {
            predicted[m] += p[m];
        }
    }
    let n = data.len() as f64;
    let mut accuracy = [None; N_MODES];
    for m in 0..N_MODES {
        if counts[m] > 0 {
            accuracy[m] = Some(hits[m] / counts[m] as f64);
        }
    }
    let share_mad = (0..N_MODES).map(|m| (predicted[m] - actual[m]).abs() / n).sum::<f64>() / N_MODES as f64 * 100.0;
    Ok(FoldScore {
        accuracy,
        overall: correct / n,
        share_mad,
        n_tasks: data.len(),
    })
}

/// Simulated choice probabilities of every observation under fixed parameters.
/// Draws are keyed by individual id, as in estimation.
pub fn predict_observations(
    kind: ModelKind,
    params: &ParameterSet,
    data: &[ChoiceObservation],
    config: &EstimationConfig,
) -> Result<Vec<[f64; N_MODES]>> {
    let structure = ModelStructure::for_mode_choice(kind, params)?;
    let individuals = compile_observations(data, params, &structure, &config.book, false)?;
    let theta = params.values();
    let dims = structure.dims();
    let per_ind: Vec<Vec<(usize, [f64; N_MODES])>> = individuals
        .par_iter()
        .map(|ind| {
            let draws = if dims > 0 { Some(config.plan.draws_for(&ind.id, dims)?) } else { None };
            let mut out = Vec::with_capacity(ind.tasks.len());
            for task in &ind.tasks {
                let p = Problem::predict_task(&structure, &theta, task, &ind.structural, draws.as_deref());
                let mut a = [0.0; N_MODES];
                a.copy_from_slice(&p[..N_MODES]);
                out.push((task.source_row, a));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut probs = vec![[0.0; N_MODES]; data.len()];
    for (row, p) in per_ind.into_iter().flatten() {
        probs[row] = p;
    }
    Ok(probs)
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(MeanSd { mean, sd, n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub model: ModelKind,
    pub plan: FoldPlan,
    pub scoring: Scoring,
    pub folds: Vec<FoldScore>,
    /// Per mode, over folds where the mode was chosen.
    pub accuracy: [Option<MeanSd>; N_MODES],
    /// Mean of the per-mode accuracies, over folds.
    pub mean_mode_accuracy: Option<MeanSd>,
    pub overall: MeanSd,
    pub share_mad: MeanSd,
    /// Folds whose training estimate did not converge.
    pub nonconverged_folds: Vec<usize>,
}

/// Summarizes fold scores.
pub fn summarize_folds(model: ModelKind, plan: FoldPlan, scoring: Scoring, folds: Vec<FoldScore>, nonconverged_folds: Vec<usize>) -> Result<CvReport> {
    let mut accuracy = [None; N_MODES];
    for (m, slot) in accuracy.iter_mut().enumerate() {
        let v: Vec<f64> = folds.iter().filter_map(|f| f.accuracy[m]).collect();
        *slot = MeanSd::of(&v);
    }
    let mma: Vec<f64> = folds.iter().filter_map(FoldScore::mean_mode_accuracy).collect();
    let overall: Vec<f64> = folds.iter().map(|f| f.overall).collect();
    let mad: Vec<f64> = folds.iter().map(|f| f.share_mad).collect();
    Ok(CvReport {
        model,
        plan,
        scoring,
        accuracy,
        mean_mode_accuracy: MeanSd::of(&mma),
        overall: MeanSd::of(&overall).ok_or_else(|| Error::domain("no folds"))?,
        share_mad: MeanSd::of(&mad).ok_or_else(|| Error::domain("no folds"))?,
        folds,
        nonconverged_folds,
    })
}

/// k-fold cross-validation: estimate on k−1 folds, score the held-out fold.
pub fn cv_evaluate(
    data: &[ChoiceObservation],
    kind: ModelKind,
    start: &ParameterSet,
    config: &EstimationConfig,
    plan: FoldPlan,
    scoring: Scoring,
) -> Result<CvReport> {
    let assignment = plan.assign(data)?;
    let fold_of: Vec<usize> = data.iter().map(|o| assignment[&o.individual_id]).collect();
    let results: Vec<(FoldScore, bool)> = (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let train: Vec<ChoiceObservation> =
                data.iter().zip(&fold_of).filter(|(_, k)| **k != f).map(|(o, _)| o.clone()).collect();
            let test: Vec<ChoiceObservation> =
                data.iter().zip(&fold_of).filter(|(_, k)| **k == f).map(|(o, _)| o.clone()).collect();
            let fit = estimate(kind, &train, start, config)?;
            let probs = predict_observations(kind, &fit.params, &test, config)?;
            Ok((score_predictions(&test, &probs, scoring)?, fit.convergence.converged))
        })
        .collect::<Result<_>>()?;
    let nonconverged = results.iter().enumerate().filter(|(_, r)| !r.1).map(|(i, _)| i).collect();
    summarize_folds(kind, plan, scoring, results.into_iter().map(|r| r.0).collect(), nonconverged)
}

/// Writes `metric,mode,model,mean,sd`; modes never chosen are written with empty cells.
pub fn write_cv_csv<W: std::io::Write>(writer: W, reports: &[(&str, &CvReport)]) -> Result<()> {
    let fmt = |m: Option<MeanSd>| match m {
        Some(s) => (s.mean.to_string(), s.sd.to_string()),
        None => (String::new(), String::new()),
    };
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["metric", "mode", "model", "mean", "sd"])?;
    for (name, r) in reports {
        for m in ModeId::ALL {
            let (mean, sd) = fmt(r.accuracy[m.index()]);
            w.write_record(["accuracy", m.name(), name, &mean, &sd])?;
        }
        let (mean, sd) = fmt(r.mean_mode_accuracy);
        w.write_record(["accuracy", "mean", name, &mean, &sd])?;
        let (mean, sd) = fmt(Some(r.overall));
        w.write_record(["accuracy", "overall", name, &mean, &sd])?;
        let (mean, sd) = fmt(Some(r.share_mad));
        w.write_record(["share_mad", "all", name, &mean, &sd])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VotComponent {
    Time,
    Active,
    Wait,
}

impl VotComponent {
    pub const ALL: [VotComponent; 3] = [VotComponent::Time, VotComponent::Active, VotComponent::Wait];

    pub fn coefficient(self) -> &'static str {
        match self {
            VotComponent::Time => names::B_TIME,
            VotComponent::Active => names::B_ACTIVETIME,
            VotComponent::Wait => names::B_WAIT,
        }
    }
}

/// Value of time in USD per hour: 10·B_component / B_cost.
pub fn vot_ratio(b_component: f64, b_cost: f64) -> Result<f64> {
    if b_cost == 0.0 || !b_cost.is_finite() {
        return Err(Error::domain("B_cost must be nonzero and finite"));
    }
    Ok(10.0 * b_component / b_cost)
}

pub fn vot(params: &ParameterSet, component: VotComponent) -> Result<f64> {
    vot_ratio(params.value(component.coefficient())?, params.value(names::B_COST)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vot_examples() {
        assert!((vot_ratio(-1.84, -1.17).unwrap() - 15.726).abs() < 1e-3);
        assert!((vot_ratio(-4.64, -1.17).unwrap() - 39.658).abs() < 1e-3);
        assert!((vot_ratio(-3.75, -1.17).unwrap() - 32.051).abs() < 1e-3);
        assert!(vot_ratio(-1.0, 0.0).is_err());
    }

    #[test]
    fn mean_sd() {
        let s = MeanSd::of(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert!((s.sd - 1.0).abs() < 1e-15);
        assert!(MeanSd::of(&[]).is_none());
    }
}
