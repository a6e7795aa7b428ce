//! Shared test oracles: Gauss–Hermite quadrature, brute-force likelihoods and
//! random parameter points.
#![allow(dead_code)]

use choicekit::attributes::{ChoiceObservation, CostBook};
use choicekit::estimation::latent::ordered_probit_prob;
use choicekit::estimation::{lv_effect, numeric_gradient, structural_lv, ModelKind, Problem};
use choicekit::params::names::*;
use choicekit::params::{Parameter, ParameterSet};
use choicekit::synth::{synth_survey, SurveyDesign};
use choicekit::utility::assemble_utilities;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Nodes and weights integrating against the standard normal density (Golub–Welsch).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Probability of the chosen alternative, from the library's utilities and a hand softmax.
pub fn chosen_prob(obs: &ChoiceObservation, p: &ParameterSet, effect: f64) -> f64 {
    let v = assemble_utilities(obs, p, effect).unwrap();
    let max = v.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let denom: f64 = v.iter().flatten().map(|u| (u - max).exp()).sum();
    (v[obs.chosen.index()].unwrap() - max).exp() / denom
}

/// Mixed-logit parameters with only the two constant sds random.
pub fn two_sd_mixl() -> ParameterSet {
    let all: Vec<Parameter> = ParameterSet::published_model2().iter().cloned().collect();
    let kept: Vec<Parameter> = all
        .into_iter()
        .filter(|p| p.name != B_COST_SD && p.name != B_ACTIVETIME_SD)
        .collect();
    let mut p = ParameterSet::try_from(kept).unwrap();
    p.set_value(ASC_AB_SD, 1.3).unwrap();
    p.set_value(ASC_ABPT_SD, 0.8).unwrap();
    p
}

/// Panel log-likelihood of one individual with random ASC_ab and ASC_abpt, on a tensor grid.
pub fn mixl_quadrature(data: &[ChoiceObservation], p: &ParameterSet, nodes: usize) -> f64 {
    let (z, w) = gauss_hermite(nodes);
    let (m_ab, s_ab) = (p.value(ASC_AB).unwrap(), p.value(ASC_AB_SD).unwrap());
    let (m_abpt, s_abpt) = (p.value(ASC_ABPT).unwrap(), p.value(ASC_ABPT_SD).unwrap());
    let mut q = p.clone();
    let mut total = 0.0;
    for (z1, w1) in z.iter().zip(&w) {
        for (z2, w2) in z.iter().zip(&w) {
            q.set_value(ASC_AB, m_ab + s_ab * z1).unwrap();
            q.set_value(ASC_ABPT, m_abpt + s_abpt * z2).unwrap();
            let prod: f64 = data.iter().map(|o| chosen_prob(o, &q, 0.0)).product();
            total += w1 * w2 * prod;
        }
    }
    total.ln()
}

/// Joint log-likelihood of one individual's choices and indicators, integrating ω.
pub fn hcm_quadrature(data: &[ChoiceObservation], p: &ParameterSet, nodes: usize) -> f64 {
    let (z, w) = gauss_hermite(nodes);
    let socio = data[0].socio;
    let y = data[0].indicators.unwrap();
    let v = |n: &str| p.value(n).unwrap();
    let mut total = 0.0;
    for (omega, wt) in z.iter().zip(&w) {
        let lv = structural_lv(&socio, p, *omega).unwrap();
        let eff = lv_effect(lv, v(B_LV));
        let mut prod: f64 = data.iter().map(|o| chosen_prob(o, p, eff)).product();
        prod *= ordered_probit_prob(y[0], lv, v(B_I10), v(INTER_I10), v(SIGMA_I10), v(DELTA_1), v(DELTA_2)).unwrap();
        prod *= ordered_probit_prob(y[1], lv, v(B_I11), v(INTER_I11), v(SIGMA_I11), v(DELTA_1), v(DELTA_2)).unwrap();
        total += wt * prod;
    }
    total.ln()
}

/// Tasks of the first respondent of a seeded survey.
pub fn one_individual(truth: &ParameterSet, kind: ModelKind, seed: u64) -> Vec<ChoiceObservation> {
    let data = synth_survey(&SurveyDesign::new(1, seed), truth, kind, &CostBook::default()).unwrap();
    assert_eq!(data.len(), 6);
    data
}

/// `base` with every free value moved at random: additive for unbounded
/// parameters, multiplicative for positive ones.
pub fn random_point(base: &ParameterSet, seed: u64, spread: f64) -> ParameterSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = base.clone();
    for i in base.free_indices() {
        let q = base.param(i);
        let u: f64 = rng.random_range(-spread..spread);
        let v = if q.role.is_positive() { q.value * u.exp() } else { q.value + u };
        p.set_value(&q.name.clone(), v).unwrap();
    }
    p
}

/// Largest relative gap between the analytic gradient and central differences over
/// free parameters; the denominator is floored at 1.
pub fn gradient_gap(problem: &Problem, params: &ParameterSet) -> f64 {
    let theta = params.values();
    let analytic = problem.evaluate(&theta, true).unwrap().gradient;
    let free = params.free_indices();
    let sub: Vec<f64> = free.iter().map(|i| theta[*i]).collect();
    let numeric = numeric_gradient(
        |y| {
            let mut full = theta.clone();
            for (k, i) in free.iter().enumerate() {
                full[*i] = y[k];
            }
            problem.loglik(&full).unwrap()
        },
        &sub,
        1e-6,
    );
    free.iter()
        .zip(&numeric)
        .map(|(i, n)| (analytic[*i] - n).abs() / n.abs().max(analytic[*i].abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// Conservation and monotonicity of a simulated grid: largest |Σ shares − 1|,
/// largest |shift row sum − baseline origin share|, and whether AB+ABPT is
/// weakly decreasing along cost and along wait.
pub struct Conservation {
    pub share_sum_gap: f64,
    pub row_sum_gap: f64,
    pub decreasing_in_cost: bool,
    pub decreasing_in_wait: bool,
}

pub fn conservation(
    cells: &[choicekit::simulation::ScenarioCell],
    trips: &[choicekit::attributes::PopulationTrip],
    weights: &[f64],
    grid: &choicekit::simulation::ScenarioGrid,
) -> Conservation {
    use choicekit::mode::ORIGIN_MODES;
    let total: f64 = weights.iter().sum();
    let mut origin = [0.0; 5];
    for (t, w) in trips.iter().zip(weights) {
        let r = ORIGIN_MODES.iter().position(|m| *m == t.original_mode).unwrap();
        origin[r] += w / total;
    }
    let mut share_sum_gap = 0.0f64;
    let mut row_sum_gap = 0.0f64;
    for c in cells {
        share_sum_gap = share_sum_gap.max((c.shares.iter().sum::<f64>() - 1.0).abs());
        for r in 0..5 {
            row_sum_gap = row_sum_gap.max((c.shift[r].iter().sum::<f64>() - origin[r]).abs());
        }
    }
    let nw = grid.waits.len();
    let adopt = |i: usize, j: usize| cells[i * nw + j].adoption();
    let mut decreasing_in_cost = true;
    let mut decreasing_in_wait = true;
    for i in 0..grid.costs.len() {
        for j in 0..nw {
            if i + 1 < grid.costs.len() && adopt(i + 1, j) > adopt(i, j) {
                decreasing_in_cost = false;
            }
            if j + 1 < nw && adopt(i, j + 1) > adopt(i, j) {
                decreasing_in_wait = false;
            }
        }
    }
    Conservation {
        share_sum_gap,
        row_sum_gap,
        decreasing_in_cost,
        decreasing_in_wait,
    }
}

/// Trip weights in (0.5, 2).
pub fn random_weights(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(0.5..2.0)).collect()
}

/// Per-km life-cycle factor of an autonomous bike at a listed wait, typed from the published table.
pub fn ab_factor(variant: choicekit::impacts::AbVariant, wait: f64) -> f64 {
    use choicekit::impacts::AbVariant::*;
    let waits = [1.0, 3.0, 5.0, 7.0, 10.0, 15.0];
    let row: [f64; 6] = match variant {
        Baseline => [83.5, 57.5, 45.2, 42.5, 40.0, 38.1],
        LongLifespan => [63.9, 48.3, 40.9, 39.3, 37.8, 36.7],
        ShortLifespan => [181.8, 103.7, 66.9, 58.6, 51.2, 45.6],
        HighInfrastructure => [104.6, 78.6, 66.4, 63.6, 61.2, 59.3],
    };
    row[waits.iter().position(|w| *w == wait).expect("listed wait")]
}

/// Brute-force weighted grams for one cell: loops over trips and modes with hand-written factors.
pub fn brute_force_total(
    trips: &[choicekit::attributes::PopulationTrip],
    weights: &[f64],
    model: &choicekit::simulation::FittedModel,
    cell: &choicekit::simulation::GridPoint,
    scenario: &choicekit::impacts::EmissionScenario,
    variant: choicekit::impacts::AbVariant,
) -> f64 {
    use choicekit::mode::ModeId;
    let ab = ab_factor(variant, cell.wait_min);
    let mut total = 0.0;
    for (t, w) in trips.iter().zip(weights) {
        let p = choicekit::simulation::predict_trip(t, cell, model).unwrap();
        let a = &t.attributes;
        let bike_share = a.abpt_bike_time_h / a.abpt_total_time_h;
        let km = a.distance_mi * 1.60934;
        let mut g = 0.0;
        for m in ModeId::ALL {
            let f = match m {
                ModeId::Walk => scenario.walk,
                ModeId::Bike => scenario.bike,
                ModeId::Car => scenario.car,
                ModeId::Transit => scenario.transit,
                ModeId::Taxi => scenario.taxi,
                ModeId::AB => ab,
                ModeId::ABPT => bike_share * ab + (1.0 - bike_share) * scenario.transit,
            };
            g += p[m.index()] * f * km;
        }
        total += w * g;
    }
    total
}
