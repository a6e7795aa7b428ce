//! Binary logit for whether a trip is perceived as bikeable.
//!
//! Car is the reference mode and work the reference purpose. Time is in hours.

use serde::{Deserialize, Serialize};

use crate::attributes::Purpose;
use crate::error::{Error, Result};
use crate::estimation::engine::{CompiledIndividual, CompiledTask, ModelKind, ModelStructure, Problem, Term};
use crate::estimation::{estimate_problem, EstimationConfig, EstimationResult};
use crate::mode::ModeId;
use crate::params::{Parameter, ParameterSet, Role};

pub mod names {
    pub const ASC: &str = "ASC";
    pub const B_PT: &str = "B_PT";
    pub const B_CHILDREN: &str = "B_children";
    pub const B_FULLTIME: &str = "B_fulltime";
    pub const B_HARSHWINTER: &str = "B_harshwinter";
    pub const B_HIGHER_ED: &str = "B_higher_ed";
    pub const B_OLDER: &str = "B_older";
    pub const B_STUDENT: &str = "B_student";
    pub const B_TAXI: &str = "B_taxi";
    pub const B_TIME: &str = "B_time";
    pub const B_TIME_LEISURE: &str = "B_time_leisure";
    pub const B_WALK: &str = "B_walk";
    pub const B_WOMAN: &str = "B_woman";

    pub const ALL: [&str; 13] = [
        ASC,
        B_PT,
        B_CHILDREN,
        B_FULLTIME,
        B_HARSHWINTER,
        B_HIGHER_ED,
        B_OLDER,
        B_STUDENT,
        B_TAXI,
        B_TIME,
        B_TIME_LEISURE,
        B_WALK,
        B_WOMAN,
    ];
}

use names::*;

const PUBLISHED: [(&str, f64); 13] = [
    (ASC, 1.370),
    (B_PT, 0.691),
    (B_CHILDREN, 0.100),
    (B_FULLTIME, 0.147),
    (B_HARSHWINTER, 0.154),
    (B_HIGHER_ED, -0.123),
    (B_OLDER, -0.262),
    (B_STUDENT, 0.239),
    (B_TAXI, 0.389),
    (B_TIME, -0.540),
    (B_TIME_LEISURE, 0.164),
    (B_WALK, 0.649),
    (B_WOMAN, -0.271),
];

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BikeabilityRecord {
    pub trip_id: String,
    /// Observed mode; walk, transit and taxi carry dummies, every other mode is treated as the car reference.
    pub mode: ModeId,
    pub time_h: f64,
    pub purpose: Purpose,
    pub full_time: bool,
    pub woman: bool,
    pub older: bool,
    pub student: bool,
    pub higher_ed: bool,
    pub children: bool,
    pub harsh_winter: bool,
    /// Observed bikeable answer, present in estimation data.
    pub label: Option<bool>,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

impl BikeabilityRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.time_h >= 0.0) || !self.time_h.is_finite() {
            return Err(Error::domain("trip time must be finite and nonnegative"));
        }
        if !(self.weight >= 0.0) {
            return Err(Error::domain("weight must be nonnegative"));
        }
        Ok(())
    }
}

/// Published coefficients.
pub fn published_parameters() -> ParameterSet {
    let mut set = ParameterSet::new();
    for (name, v) in PUBLISHED {
        let role = if name == ASC { Role::Asc } else { Role::Beta };
        set.push(Parameter::free(name, v, role)).expect("unique names");
    }
    set
}

/// All coefficients free at zero.
pub fn start_parameters() -> ParameterSet {
    let mut set = published_parameters();
    for name in ALL {
        set.set_value(name, 0.0).expect("known name");
    }
    set
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Linear terms (coefficient name, regressor) of the bikeable utility.
pub fn bikeability_terms(r: &BikeabilityRecord) -> [(&'static str, f64); 13] {
    [
        (ASC, 1.0),
        (B_WALK, flag(r.mode == ModeId::Walk)),
        (B_PT, flag(r.mode == ModeId::Transit)),
        (B_TAXI, flag(r.mode == ModeId::Taxi)),
        (B_TIME, r.time_h),
        (B_FULLTIME, flag(r.full_time)),
        (B_WOMAN, flag(r.woman)),
        (B_OLDER, flag(r.older)),
        (B_STUDENT, flag(r.student)),
        (B_HIGHER_ED, flag(r.higher_ed)),
        (B_CHILDREN, flag(r.children)),
        (B_TIME_LEISURE, r.time_h * flag(r.purpose == Purpose::Leisure)),
        (B_HARSHWINTER, flag(r.harsh_winter)),
    ]
}

pub fn bikeability_utility(record: &BikeabilityRecord, params: &ParameterSet) -> Result<f64> {
    let mut v = 0.0;
    for (name, x) in bikeability_terms(record) {
        v += params.value(name)? * x;
    }
    Ok(v)
}

pub fn logistic(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn bikeability_prob(record: &BikeabilityRecord, params: &ParameterSet) -> Result<f64> {
    Ok(logistic(bikeability_utility(record, params)?))
}

fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("threshold {threshold} must lie in (0, 1)")))
    }
}

/// Bikeable iff the probability reaches `threshold` (inclusive).
pub fn classify_prob(prob: f64, threshold: f64) -> Result<bool> {
    check_threshold(threshold)?;
    Ok(prob >= threshold)
}

pub fn classify(record: &BikeabilityRecord, params: &ParameterSet, threshold: f64) -> Result<bool> {
    classify_prob(bikeability_prob(record, params)?, threshold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classified {
    pub trip_id: String,
    pub prob: f64,
    pub bikeable: bool,
}

/// Scores a batch. The probability doubles as an expected weight for sensitivity runs.
pub fn classify_all(records: &[BikeabilityRecord], params: &ParameterSet, threshold: f64) -> Result<Vec<Classified>> {
    check_threshold(threshold)?;
    records
        .iter()
        .enumerate()
        .map(|(row, r)| {
            r.validate().map_err(|e| Error::data(row, e.to_string()))?;
            let prob = bikeability_prob(r, params)?;
            Ok(Classified {
                trip_id: r.trip_id.clone(),
                prob,
                bikeable: prob >= threshold,
            })
        })
        .collect()
}

/// Share of labeled records whose classification matches the label.
pub fn accuracy(records: &[BikeabilityRecord], params: &ParameterSet, threshold: f64) -> Result<f64> {
    let mut hits = 0usize;
    let mut n = 0usize;
    for r in records {
        if let Some(label) = r.label {
            n += 1;
            if classify(r, params, threshold)? == label {
                hits += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::domain("no labeled records"));
    }
    Ok(hits as f64 / n as f64)
}

/// Compiles labeled records into a two-alternative problem (0 = not bikeable, 1 = bikeable).
pub fn build_binary_problem(records: &[BikeabilityRecord], params: &ParameterSet, weighted: bool) -> Result<Problem> {
    let structure = ModelStructure::logit(ModelKind::Binary, params);
    let mut individuals = Vec::with_capacity(records.len());
    for (row, r) in records.iter().enumerate() {
        r.validate().map_err(|e| Error::data(row, e.to_string()))?;
        let label = r.label.ok_or_else(|| Error::data(row, "missing bikeable label"))?;
        let mut terms = Vec::new();
        for (name, x) in bikeability_terms(r) {
            if x != 0.0 {
                terms.push(Term {
                    param: params.require(name)? as u32,
                    alt: 1,
                    x,
                });
            }
        }
        let weight = if weighted { r.weight } else { 1.0 };
        individuals.push(CompiledIndividual {
            id: format!("{row:012}"),
            tasks: vec![CompiledTask {
                n_alt: 2,
                avail: 0b11,
                chosen: usize::from(label),
                weight,
                terms,
                source_row: row,
            }],
            structural: Vec::new(),
            indicators: Vec::new(),
            weight,
        });
    }
    Problem::new(structure, individuals, None)
}

pub fn bikeability_loglik(records: &[BikeabilityRecord], params: &ParameterSet) -> Result<f64> {
    build_binary_problem(records, params, false)?.loglik(&params.values())
}

pub fn estimate_bikeability(
    records: &[BikeabilityRecord],
    start: &ParameterSet,
    config: &EstimationConfig,
) -> Result<EstimationResult> {
    let problem = build_binary_problem(records, start, config.weighted)?;
    estimate_problem(&problem, start, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> BikeabilityRecord {
        BikeabilityRecord {
            trip_id: "t".into(),
            mode: ModeId::Car,
            time_h: 0.0,
            purpose: Purpose::Work,
            full_time: false,
            woman: false,
            older: false,
            student: false,
            higher_ed: false,
            children: false,
            harsh_winter: false,
            label: None,
            weight: 1.0,
        }
    }

    #[test]
    fn intercept_only() {
        let v = bikeability_utility(&record(), &published_parameters()).unwrap();
        assert!((v - 1.370).abs() < 1e-12);
        let p = bikeability_prob(&record(), &published_parameters()).unwrap();
        assert!((p - 1.0 / (1.0 + (-1.37f64).exp())).abs() < 1e-12);
        assert!((p - 0.79738).abs() < 1e-5);
    }

    #[test]
    fn one_hour_car_work_trip() {
        let r = BikeabilityRecord {
            time_h: 1.0,
            ..record()
        };
        let v = bikeability_utility(&r, &published_parameters()).unwrap();
        assert!((v - 0.830).abs() < 1e-12);
        let leisure = BikeabilityRecord {
            purpose: Purpose::Leisure,
            ..r
        };
        let vl = bikeability_utility(&leisure, &published_parameters()).unwrap();
        assert!((vl - v - 0.164).abs() < 1e-12);
    }

    #[test]
    fn threshold_is_inclusive() {
        assert!(classify_prob(0.5, 0.5).unwrap());
        assert!(!classify_prob(0.49, 0.5).unwrap());
        assert!(classify_prob(0.5, 1.0).is_err());
    }

    #[test]
    fn logistic_extremes() {
        assert_eq!(logistic(0.0), 0.5);
        assert!(logistic(-800.0) >= 0.0 && logistic(-800.0) < 1e-300);
        assert_eq!(logistic(800.0), 1.0);
    }

    #[test]
    fn missing_coefficient_is_named() {
        let mut p = ParameterSet::new();
        p.push(Parameter::free(ASC, 1.0, Role::Asc)).unwrap();
        match bikeability_utility(&record(), &p) {
            Err(Error::Specification(m)) => assert!(m.contains("B_walk")),
            other => panic!("{other:?}"),
        }
    }
}
