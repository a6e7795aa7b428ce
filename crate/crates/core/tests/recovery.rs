use choicekit::attributes::CostBook;
use choicekit::estimation::{estimate, EstimationConfig, ModelKind};
use choicekit::synth::{recovery_start, recovery_truth, synth_survey, SurveyDesign};

pub fn recovery_design() -> SurveyDesign {
    SurveyDesign {
        trip_per_task: true,
        full_choice_set: true,
        ..SurveyDesign::new(2000, 2024)
    }
}

#[test]
fn mnl_recovers_known_parameters() {
    let truth = recovery_truth();
    let data = synth_survey(&recovery_design(), &truth, ModelKind::Mnl, &CostBook::default()).unwrap();
    assert_eq!(data.len(), 12_000);
    let fit = estimate(ModelKind::Mnl, &data, &recovery_start(), &EstimationConfig::default()).unwrap();
    assert!(fit.convergence.converged, "{:?}", fit.convergence);
    assert_eq!(fit.k, 12);
    for i in truth.free_indices() {
        let t = truth.param(i);
        let e = fit.params.param(i);
        let se = e.robust_se.unwrap();
        assert!(((e.value - t.value) / se).abs() < 3.0, "{} est {} truth {} se {se}", t.name, e.value, t.value);
        assert!((e.value - t.value).abs() < 0.10 * t.value.abs(), "{} est {} truth {}", t.name, e.value, t.value);
    }
}

#[test]
fn binary_logit_recovers_published_coefficients() {
    use choicekit::bikeability::{estimate_bikeability, published_parameters, start_parameters};
    use choicekit::synth::synth_bikeability;
    let truth = published_parameters();
    let records = synth_bikeability(20_000, 11, &truth).unwrap();
    let fit = estimate_bikeability(&records, &start_parameters(), &EstimationConfig::default()).unwrap();
    assert!(fit.convergence.converged);
    for i in truth.free_indices() {
        let t = truth.param(i);
        let e = fit.params.param(i);
        let z = (e.value - t.value) / e.robust_se.unwrap();
        assert!(z.abs() < 3.0, "{} est {} truth {} z {z}", t.name, e.value, t.value);
    }
}
