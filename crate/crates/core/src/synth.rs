//! Seeded synthetic fixtures: stated-preference surveys drawn from known
//! parameters, reference populations, raking samples and bikeability records.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::attributes::{minutes_to_hours, ChoiceObservation, CostBook, PopulationTrip, Purpose, Sociodemographics, TripAttributes};
use crate::bikeability::BikeabilityRecord;
use crate::error::{Error, Result};
use crate::estimation::engine::ModelKind;
use crate::estimation::latent::{lv_effect, structural_lv, thresholds};
use crate::mode::{Availability, ModeId, N_MODES, ORIGIN_MODES};
use crate::params::names::*;
use crate::params::ParameterSet;
use crate::simulation::{DEFAULT_COSTS, DEFAULT_WAITS_MIN};
use crate::utility::assemble_utilities_with;
use crate::weighting::Sample;

/// Shares of the respondents' own modes (walk, bike, car, transit, taxi).
const ORIGIN_SHARES: [f64; 5] = [0.2; 5];

/// Stated-preference layout: each respondent answers `tasks` distinct
/// (AB cost, AB wait) cells of the full factorial.
#[derive(Debug, Clone, PartialEq)]
pub struct SurveyDesign {
    pub n_individuals: usize,
    pub tasks: usize,
    pub costs: Vec<f64>,
    pub waits_min: Vec<f64>,
    /// Draw a new trip context for every task instead of one per respondent.
    pub trip_per_task: bool,
    /// Offer all seven modes in every task instead of original + AB + ABPT.
    pub full_choice_set: bool,
    pub seed: u64,
}

impl SurveyDesign {
    pub fn new(n_individuals: usize, seed: u64) -> Self {
        SurveyDesign {
            n_individuals,
            tasks: 6,
            costs: DEFAULT_COSTS.to_vec(),
            waits_min: DEFAULT_WAITS_MIN.to_vec(),
            trip_per_task: false,
            full_choice_set: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_individuals == 0 || self.tasks == 0 {
            return Err(Error::config("survey needs at least one individual and one task"));
        }
        if self.tasks > self.costs.len() * self.waits_min.len() {
            return Err(Error::config("more tasks than factorial cells"));
        }
        Ok(())
    }
}

fn coin(rng: &mut ChaCha8Rng, p: f64) -> bool {
    rng.random::<f64>() < p
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, items: &[T], shares: &[f64]) -> T {
    let u = rng.random::<f64>() * shares.iter().sum::<f64>();
    let mut acc = 0.0;
    for (item, s) in items.iter().zip(shares) {
        acc += s;
        if u < acc {
            return *item;
        }
    }
    *items.last().expect("nonempty")
}

/// Respondent traits with exactly one trip purpose and at most one income band.
pub fn random_socio(rng: &mut ChaCha8Rng) -> Sociodemographics {
    let income = pick(rng, &[0u8, 1, 2], &[0.25, 0.35, 0.40]);
    let age = pick(rng, &[0u8, 1, 2], &[0.30, 0.50, 0.20]);
    let purpose = pick(rng, &[Purpose::Work, Purpose::Leisure, Purpose::Errands], &[0.4, 0.3, 0.3]);
    Sociodemographics {
        low_income: income == 0,
        high_income: income == 2,
        full_time: coin(rng, 0.55),
        higher_ed: coin(rng, 0.45),
        children: coin(rng, 0.30),
        car_owner: coin(rng, 0.70),
        white: coin(rng, 0.60),
        woman: coin(rng, 0.50),
        young: age == 0,
        older: age == 2,
        student: coin(rng, 0.15),
        hot_summer: coin(rng, 0.35),
        harsh_winter: coin(rng, 0.30),
        work_trip: purpose == Purpose::Work,
        leisure_trip: purpose == Purpose::Leisure,
        errands_trip: purpose == Purpose::Errands,
    }
}

/// Level of service of a trip of random length in miles.
pub fn random_trip(rng: &mut ChaCha8Rng) -> TripAttributes {
    let d = rng.random_range(0.3..10.0);
    let jitter = |rng: &mut ChaCha8Rng| rng.random_range(0.6..1.4);
    let abpt_total = (d / 11.0 + 0.12) * jitter(rng);
    TripAttributes {
        walk_time_h: d / 3.0 * jitter(rng),
        bike_time_h: d / 9.5 * jitter(rng),
        car_time_h: (d / 18.0 + 0.05) * jitter(rng),
        transit_time_h: (d / 10.0 + 0.2) * jitter(rng),
        abpt_bike_time_h: abpt_total * rng.random_range(0.2..0.5),
        abpt_total_time_h: abpt_total,
        distance_mi: d,
        taxi_wait_h: minutes_to_hours(rng.random_range(2.0..12.0)),
        pt_short_wait: coin(rng, 0.5),
    }
}

fn random_origin(rng: &mut ChaCha8Rng) -> ModeId {
    pick(rng, &ORIGIN_MODES, &ORIGIN_SHARES)
}

/// Individual-specific coefficients: each random mean shifted by sd·z.
fn individual_params(truth: &ParameterSet, rng: &mut ChaCha8Rng) -> Result<ParameterSet> {
    let mut p = truth.clone();
    for (mean, sd) in RANDOM_COEFFICIENTS {
        if let Some(s) = truth.get(sd) {
            let z: f64 = rng.sample(StandardNormal);
            p.set_value(mean, truth.value(mean)? + s.value * z)?;
        }
    }
    Ok(p)
}

fn draw_likert(rng: &mut ChaCha8Rng, lv: f64, loading: f64, intercept: f64, scale: f64, d1: f64, d2: f64) -> u8 {
    let eps: f64 = rng.sample(StandardNormal);
    let y = intercept + loading * lv + scale * eps;
    1 + thresholds(d1, d2).iter().filter(|t| y > **t).count() as u8
}

fn draw_choice(rng: &mut ChaCha8Rng, v: &[Option<f64>; N_MODES]) -> ModeId {
    let max = v.iter().flatten().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
    let e: Vec<f64> = v.iter().map(|x| x.map_or(0.0, |x| (x - max).exp())).collect();
    let idx: Vec<usize> = (0..N_MODES).collect();
    ModeId::from_index(pick(rng, &idx, &e)).expect("mode index")
}

/// Simulates an SP survey: every respondent reports on their own trip under
/// `tasks` distinct AB cost/wait cells, choosing among the original mode, AB
/// and ABPT according to `truth`.
pub fn synth_survey(design: &SurveyDesign, truth: &ParameterSet, kind: ModelKind, book: &CostBook) -> Result<Vec<ChoiceObservation>> {
    design.validate()?;
    if kind == ModelKind::Binary {
        return Err(Error::spec("binary data comes from synth_bikeability"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    let mut cells: Vec<(f64, f64)> = Vec::new();
    for c in &design.costs {
        for w in &design.waits_min {
            cells.push((*c, *w));
        }
    }
    let width = design.n_individuals.to_string().len().max(4);
    let mut out = Vec::with_capacity(design.n_individuals * design.tasks);
    for i in 0..design.n_individuals {
        let id = format!("r{:0width$}", i + 1);
        let socio = random_socio(&mut rng);
        let own_trip = random_trip(&mut rng);
        let origin = random_origin(&mut rng);
        let params = if kind == ModelKind::Mixl { individual_params(truth, &mut rng)? } else { truth.clone() };
        let (effect, indicators) = if kind == ModelKind::Hcm {
            let omega: f64 = rng.sample(StandardNormal);
            let lv = structural_lv(&socio, truth, omega)?;
            let (d1, d2) = (truth.value(DELTA_1)?, truth.value(DELTA_2)?);
            let i10 = draw_likert(&mut rng, lv, truth.value(B_I10)?, truth.value(INTER_I10)?, truth.value(SIGMA_I10)?, d1, d2);
            let i11 = draw_likert(&mut rng, lv, truth.value(B_I11)?, truth.value(INTER_I11)?, truth.value(SIGMA_I11)?, d1, d2);
            (lv_effect(lv, truth.value(B_LV)?), Some([i10, i11]))
        } else {
            (0.0, None)
        };
        let chosen_cells: Vec<(f64, f64)> = cells.choose_multiple(&mut rng, design.tasks).copied().collect();
        for (t, (cost, wait)) in chosen_cells.into_iter().enumerate() {
            let attributes = if design.trip_per_task && t > 0 { random_trip(&mut rng) } else { own_trip };
            let mut obs = ChoiceObservation {
                individual_id: id.clone(),
                task_index: t as u32 + 1,
                attributes,
                socio,
                ab_cost_rate: cost,
                ab_wait_h: minutes_to_hours(wait),
                availability: if design.full_choice_set { Availability::all() } else { Availability::sp_task(origin) },
                chosen: origin,
                indicators,
                weight: 1.0,
            };
            let v = assemble_utilities_with(&obs, &params, effect, book)?;
            obs.chosen = draw_choice(&mut rng, &v);
            out.push(obs);
        }
    }
    Ok(out)
}

/// Known parameters for recovery studies: six ASCs and six coefficients free,
/// every other coefficient fixed at zero.
pub fn recovery_truth() -> ParameterSet {
    let free = [
        (ASC_WALK, 5.00),
        (ASC_BIKE, -3.60),
        (ASC_PT, -3.00),
        (ASC_TAXI, 3.00),
        (ASC_AB, 4.60),
        (ASC_ABPT, 2.80),
        (B_COST, -2.40),
        (B_TIME, -5.00),
        (B_ACTIVETIME, -6.00),
        (B_WAIT, -12.00),
        (B_PTSHORTWAIT, 3.00),
        (B_WORK, 3.00),
    ];
    let mut set = ParameterSet::mnl_start();
    for name in ASCS.iter().chain(BETAS.iter()) {
        set.fix(name, 0.0).expect("known name");
    }
    for (name, v) in free {
        set.free(name).expect("known name");
        set.set_value(name, v).expect("known name");
    }
    set
}

/// The recovery layout with every free value reset to zero.
pub fn recovery_start() -> ParameterSet {
    let mut set = recovery_truth();
    for i in set.free_indices() {
        let name = set.param(i).name.clone();
        set.set_value(&name, 0.0).expect("own name");
    }
    set
}

/// Reference-population trips with random traits and original modes.
pub fn synth_population(n: usize, seed: u64) -> Vec<PopulationTrip> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = n.to_string().len().max(4);
    (0..n)
        .map(|i| PopulationTrip {
            trip_id: format!("p{:0width$}", i + 1),
            socio: random_socio(&mut rng),
            attributes: random_trip(&mut rng),
            original_mode: random_origin(&mut rng),
        })
        .collect()
}

/// Survey respondents labeled with the raking variables of the bikeable reference margins.
pub fn synth_raking_sample(n: usize, seed: u64) -> Result<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<(String, Vec<String>)> = ["purpose", "mode", "sex", "young", "older", "higher_ed", "low_income", "high_income"]
        .iter()
        .map(|v| (v.to_string(), Vec::with_capacity(n)))
        .collect();
    let bit = |b: bool| if b { "1" } else { "0" }.to_string();
    let mut ids = Vec::with_capacity(n);
    for i in 0..n {
        ids.push(format!("s{:05}", i + 1));
        let s = random_socio(&mut rng);
        let mode = pick(&mut rng, &["car", "walk", "bike", "transit", "taxi"], &[0.35, 0.10, 0.30, 0.15, 0.10]);
        let purpose = s.purpose().expect("one purpose").name().to_string();
        let values = [
            purpose,
            mode.to_string(),
            if s.woman { "female" } else { "male" }.to_string(),
            bit(s.young),
            bit(s.older),
            bit(s.higher_ed),
            bit(s.low_income),
            bit(s.high_income),
        ];
        for (col, v) in cols.iter_mut().zip(values) {
            col.1.push(v);
        }
    }
    Sample::new(ids, cols)
}

/// Bikeability records with labels drawn from the binary logit under `truth`.
pub fn synth_bikeability(n: usize, seed: u64, truth: &ParameterSet) -> Result<Vec<BikeabilityRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let s = random_socio(&mut rng);
        let mode = pick(&mut rng, &[ModeId::Car, ModeId::Walk, ModeId::Transit, ModeId::Taxi], &[0.6, 0.12, 0.2, 0.08]);
        let mut r = BikeabilityRecord {
            trip_id: format!("b{:05}", i + 1),
            mode,
            time_h: rng.random_range(0.05..1.5),
            purpose: s.purpose().expect("one purpose"),
            full_time: s.full_time,
            woman: s.woman,
            older: s.older,
            student: s.student,
            higher_ed: s.higher_ed,
            children: s.children,
            harsh_winter: s.harsh_winter,
            label: None,
            weight: 1.0,
        };
        let p = crate::bikeability::bikeability_prob(&r, truth)?;
        r.label = Some(rng.random::<f64>() < p);
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn survey_layout() {
        let design = SurveyDesign::new(50, 7);
        let data = synth_survey(&design, &ParameterSet::published_model1(), ModelKind::Mnl, &CostBook::default()).unwrap();
        assert_eq!(data.len(), 300);
        for obs in &data {
            obs.validate().unwrap();
            obs.validate_sp_layout().unwrap();
        }
        let again = synth_survey(&design, &ParameterSet::published_model1(), ModelKind::Mnl, &CostBook::default()).unwrap();
        assert_eq!(data, again);
    }

    #[test]
    fn hcm_survey_has_indicators() {
        let data = synth_survey(&SurveyDesign::new(20, 3), &ParameterSet::published_model3(), ModelKind::Hcm, &CostBook::default()).unwrap();
        assert!(data.iter().all(|o| o.indicators.is_some_and(|i| i.iter().all(|y| (1..=5).contains(y)))));
    }

    #[test]
    fn recovery_layout_has_twelve_free() {
        assert_eq!(recovery_truth().n_free(), 12);
        assert!(recovery_start().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn population_is_valid() {
        for t in synth_population(200, 1) {
            t.attributes.validate().unwrap();
            t.socio.validate().unwrap();
        }
    }
}
