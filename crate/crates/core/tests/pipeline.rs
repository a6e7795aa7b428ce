mod common;

use choicekit::attributes::{ChoiceObservation, CostBook};
use choicekit::estimation::{EstimationConfig, LatentDrawPlan, ModelKind, SequenceKind};
use choicekit::impacts::{impact_grid, relative_change, scenario_total, baseline_total, AbVariant, EmissionConfig, EmissionScenario};
use choicekit::metrics::{cv_evaluate, score_predictions, FoldPlan, Scoring};
use choicekit::mode::ModeId;
use choicekit::params::ParameterSet;
use choicekit::simulation::{simulate_grid, AdoptionPolicy, FittedModel, ScenarioGrid};
use choicekit::synth::{synth_population, synth_raking_sample, synth_survey, SurveyDesign};
use choicekit::weighting::{bikeable_reference_targets, ipf_fit, margin_report, weighted_proportions, IpfOptions, MarginTargets, Sample};
use common::*;

fn plan() -> LatentDrawPlan {
    LatentDrawPlan::new(200, 5, SequenceKind::QuasiRandom)
}

#[test]
fn raking_reaches_reference_margins() {
    let sample = synth_raking_sample(2000, 13).unwrap();
    let targets = bikeable_reference_targets();
    let fit = ipf_fit(&sample, &targets, &IpfOptions::default()).unwrap();
    assert!(fit.converged);
    assert!(fit.iterations <= 200);
    assert!(fit.max_deviation < 1e-6);
    // independent check of every margin
    let total: f64 = fit.weights.iter().sum();
    for (var, cats) in targets.variables() {
        let col = sample.column(var).unwrap();
        for (cat, target) in cats {
            let got: f64 = col.iter().zip(&fit.weights).filter(|(c, _)| *c == cat).map(|(_, w)| w).sum::<f64>() / total;
            assert!((got - target).abs() < 1e-6, "{var}={cat}: {got} vs {target}");
        }
    }
    let report = margin_report(&sample, &fit.weights, &targets).unwrap();
    assert!(report.iter().all(|r| r.max_abs_deviation < 1e-6));
    assert!((total / fit.weights.len() as f64 - 1.0).abs() < 1e-12);
}

#[test]
fn raking_two_by_two_by_hand() {
    let s = Sample::new(
        vec!["a".into(), "b".into(), "c".into(), "d".into()],
        vec![
            ("g".into(), vec!["A".into(), "A".into(), "B".into(), "B".into()]),
            ("h".into(), vec!["X".into(), "Y".into(), "X".into(), "Y".into()]),
        ],
    )
    .unwrap();
    let mut t = MarginTargets::new();
    t.insert("g", &[("A", 0.75), ("B", 0.25)]).unwrap();
    t.insert("h", &[("X", 0.5), ("Y", 0.5)]).unwrap();
    let fit = ipf_fit(&s, &t, &IpfOptions::default()).unwrap();
    assert_eq!(fit.weights, vec![1.5, 1.5, 0.5, 0.5]);
    let props = weighted_proportions(&s, &fit.weights, "g").unwrap();
    assert!(props.contains(&("A".to_string(), 0.75)));
}

fn check_grid(kind: ModelKind, params: ParameterSet, monotone_cost: bool) {
    let trips = synth_population(400, 21);
    let weights = random_weights(trips.len(), 22);
    let grid = ScenarioGrid::default();
    let model = FittedModel::new(kind, params, plan()).unwrap();
    let cells = simulate_grid(&trips, &weights, &grid, &model).unwrap();
    assert_eq!(cells.len(), 30);
    let c = conservation(&cells, &trips, &weights, &grid);
    assert!(c.share_sum_gap < 1e-9, "{kind:?}: {}", c.share_sum_gap);
    assert!(c.row_sum_gap < 1e-9, "{kind:?}: {}", c.row_sum_gap);
    assert!(c.decreasing_in_wait, "{kind:?}");
    if monotone_cost {
        assert!(c.decreasing_in_cost, "{kind:?}");
    }
}

#[test]
fn mnl_simulation_conserves_shares() {
    check_grid(ModelKind::Mnl, ParameterSet::published_model1(), true);
}

#[test]
fn hcm_simulation_conserves_shares() {
    check_grid(ModelKind::Hcm, ParameterSet::published_model3(), true);
}

#[test]
fn mixl_simulation_conserves_shares() {
    // a normal cost coefficient puts mass on positive values, so only the wait direction is guaranteed
    check_grid(ModelKind::Mixl, ParameterSet::published_model2(), false);
}

#[test]
fn disabled_adoption_reproduces_baseline() {
    let trips = synth_population(100, 2);
    let weights = random_weights(trips.len(), 3);
    let model = FittedModel::new(ModelKind::Mnl, ParameterSet::published_model1(), plan())
        .unwrap()
        .with_adoption(AdoptionPolicy::Disabled);
    let cells = simulate_grid(&trips, &weights, &ScenarioGrid::default(), &model).unwrap();
    for c in &cells {
        assert_eq!(c.adoption(), 0.0);
    }
    let rows = impact_grid(&trips, &weights, &model, &ScenarioGrid::default(), &EmissionConfig::default()).unwrap();
    assert!(rows.iter().all(|r| r.percent_change == 0.0));
}

#[test]
fn impact_totals_match_brute_force() {
    let trips = synth_population(300, 31);
    let weights = random_weights(trips.len(), 32);
    let grid = ScenarioGrid::default();
    let config = EmissionConfig::default();
    for (kind, params) in [
        (ModelKind::Mnl, ParameterSet::published_model1()),
        (ModelKind::Hcm, ParameterSet::published_model3()),
    ] {
        let model = FittedModel::new(kind, params, plan()).unwrap();
        let rows = impact_grid(&trips, &weights, &model, &grid, &config).unwrap();
        assert_eq!(rows.len(), config.scenarios.len() * config.variants.len() * 30);
        let cells = grid.cells();
        let mut k = 0;
        for scenario in &config.scenarios {
            let base: f64 = trips
                .iter()
                .zip(&weights)
                .map(|(t, w)| w * scenario.factor(t.original_mode).unwrap() * t.attributes.distance_mi * 1.60934)
                .sum();
            let lib_base = baseline_total(&trips, &weights, scenario).unwrap();
            assert!((lib_base - base).abs() <= 1e-9 * base);
            for variant in &config.variants {
                for cell in &cells {
                    let slow = brute_force_total(&trips, &weights, &model, cell, scenario, *variant);
                    let fast = scenario_total(&trips, &weights, cell, &model, scenario, &config.ab_table, *variant).unwrap();
                    assert!((fast - slow).abs() <= 1e-9 * slow, "{fast} vs {slow}");
                    let pct = 100.0 * (slow - base) / base;
                    assert!((rows[k].percent_change - pct).abs() <= 1e-9 * pct.abs().max(1.0));
                    k += 1;
                }
            }
        }
    }
}

#[test]
fn cleaner_fleet_shrinks_the_baseline() {
    let trips = synth_population(50, 4);
    let w = vec![1.0; trips.len()];
    let high = baseline_total(&trips, &w, &EmissionScenario::high(100.0)).unwrap();
    let low = baseline_total(&trips, &w, &EmissionScenario::low(30.0)).unwrap();
    assert!(low < high);
    assert!(relative_change(1.0, 0.0).is_err());
    assert!(AbVariant::ALL.len() == 4);
}

fn small_survey(n: usize, seed: u64) -> Vec<ChoiceObservation> {
    synth_survey(&SurveyDesign::new(n, seed), &ParameterSet::published_model1(), ModelKind::Mnl, &CostBook::default()).unwrap()
}

#[test]
fn perfect_predictions_score_one() {
    let data = small_survey(50, 1);
    let probs: Vec<[f64; 7]> = data
        .iter()
        .map(|o| {
            let mut p = [0.0; 7];
            p[o.chosen.index()] = 1.0;
            p
        })
        .collect();
    for scoring in [Scoring::Argmax, Scoring::Expected] {
        let s = score_predictions(&data, &probs, scoring).unwrap();
        assert_eq!(s.overall, 1.0);
        assert!(s.share_mad.abs() < 1e-12);
        assert!(s.accuracy.iter().flatten().all(|a| *a == 1.0));
    }
}

#[test]
fn uniform_predictions_score_one_third() {
    let data = small_survey(50, 2);
    let probs: Vec<[f64; 7]> = data
        .iter()
        .map(|o| {
            let mut p = [0.0; 7];
            for m in o.availability.iter() {
                p[m.index()] = 1.0 / 3.0;
            }
            p
        })
        .collect();
    let s = score_predictions(&data, &probs, Scoring::Expected).unwrap();
    assert!((s.overall - 1.0 / 3.0).abs() < 1e-12);
    // argmax ties resolve to the original mode, the lowest index offered
    let s = score_predictions(&data, &probs, Scoring::Argmax).unwrap();
    let originals = data.iter().filter(|o| !o.chosen.is_autonomous()).count() as f64;
    assert!((s.overall - originals / data.len() as f64).abs() < 1e-12);
    assert_eq!(s.accuracy[ModeId::AB.index()], data.iter().any(|o| o.chosen == ModeId::AB).then_some(0.0));
}

#[test]
fn folds_partition_individuals_regardless_of_row_order() {
    let data = small_survey(53, 3);
    let plan = FoldPlan::new(5, 42);
    let a = plan.assign(&data).unwrap();
    let mut reversed = data.clone();
    reversed.reverse();
    assert_eq!(a, plan.assign(&reversed).unwrap());
    let mut sizes = [0usize; 5];
    for f in a.values() {
        sizes[*f] += 1;
    }
    assert_eq!(sizes.iter().sum::<usize>(), 53);
    assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    assert!(FoldPlan::new(1, 0).assign(&data).is_err());
}

#[test]
fn cross_validation_is_deterministic() {
    let data = small_survey(200, 4);
    let config = EstimationConfig::default();
    let run = || cv_evaluate(&data, ModelKind::Mnl, &ParameterSet::mnl_start(), &config, FoldPlan::new(5, 7), Scoring::Argmax).unwrap();
    let a = run();
    let b = run();
    assert_eq!(a, b);
    assert_eq!(a.folds.len(), 5);
    assert_eq!(a.folds.iter().map(|f| f.n_tasks).sum::<usize>(), data.len());
    assert!(a.overall.mean > 0.4 && a.overall.mean <= 1.0);
    assert!(a.nonconverged_folds.is_empty());
}
