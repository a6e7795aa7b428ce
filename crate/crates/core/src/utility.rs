//! The seven systematic utilities.
//!
//! Each utility is a signed sum of coefficient × attribute terms. Signs follow
//! the printed specification term by term (e.g. walk carries `-B_children`),
//! and coefficients are stored as the positively named quantities.

use crate::attributes::{mode_costs, usd_to_tens, ChoiceObservation, CostBook};
use crate::error::Result;
use crate::mode::{ModeId, N_MODES};
use crate::params::names::*;
use crate::params::ParameterSet;

/// `x` multiplies the coefficient named `param` in the utility of `alt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityTerm {
    pub alt: ModeId,
    pub param: &'static str,
    pub x: f64,
}

#[inline]
fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// All linear terms of V0..V6 for one observation (every alternative, available or not).
pub fn utility_terms(obs: &ChoiceObservation, book: &CostBook) -> Vec<UtilityTerm> {
    let a = &obs.attributes;
    let s = &obs.socio;
    let cost = mode_costs(a, book, obs.ab_cost_rate).map(usd_to_tens);
    let mut terms = Vec::with_capacity(64);
    let mut push = |alt: ModeId, param: &'static str, x: f64| terms.push(UtilityTerm { alt, param, x });

    use ModeId::*;
    push(Walk, ASC_WALK, 1.0);
    push(Walk, B_ACTIVETIME, a.walk_time_h);
    push(Walk, B_WHITE, flag(s.white));
    push(Walk, B_HIGHER_ED, flag(s.higher_ed));
    push(Walk, B_CHILDREN, -flag(s.children));
    push(Walk, B_HOTSUMMER, -flag(s.hot_summer));

    push(Bike, ASC_BIKE, 1.0);
    push(Bike, B_ACTIVETIME, a.bike_time_h);
    push(Bike, B_CAROWNER, -flag(s.car_owner));
    push(Bike, B_HIGHINCOME, -flag(s.high_income));
    push(Bike, B_FULLTIME, -flag(s.full_time));
    push(Bike, B_HIGHER_ED, flag(s.higher_ed));
    push(Bike, B_LEISURE, -flag(s.leisure_trip));
    push(Bike, B_WORK, flag(s.work_trip));

    push(Car, ASC_CAR, 1.0);
    push(Car, B_COST, cost[Car.index()]);
    push(Car, B_TIME, a.car_time_h);
    push(Car, B_CAROWNER, flag(s.car_owner));
    push(Car, B_WHITE, -flag(s.white));
    push(Car, B_OLDER, flag(s.older));
    push(Car, B_LEISURE, -flag(s.leisure_trip));
    push(Car, B_WORK, -flag(s.work_trip));
    push(Car, B_ERRANDS, flag(s.errands_trip));

    push(Transit, ASC_PT, 1.0);
    push(Transit, B_COST, cost[Transit.index()]);
    push(Transit, B_TIME, a.transit_time_h);
    push(Transit, B_FULLTIME, flag(s.full_time));
    push(Transit, B_HIGHER_ED, flag(s.higher_ed));
    push(Transit, B_CHILDREN, -flag(s.children));
    push(Transit, B_LEISURE, -flag(s.leisure_trip));
    push(Transit, B_WORK, flag(s.work_trip));
    push(Transit, B_HOTSUMMER, -flag(s.hot_summer));
    push(Transit, B_PTSHORTWAIT, flag(a.pt_short_wait));

    push(Taxi, ASC_TAXI, 1.0);
    push(Taxi, B_COST, cost[Taxi.index()]);
    push(Taxi, B_TIME, a.car_time_h);
    push(Taxi, B_WAIT, a.taxi_wait_h);
    push(Taxi, B_HIGHINCOME, flag(s.high_income));
    push(Taxi, B_LEISURE, flag(s.leisure_trip));
    push(Taxi, B_HOTSUMMER, flag(s.hot_summer));

    push(AB, ASC_AB, 1.0);
    push(AB, B_COST, cost[AB.index()]);
    push(AB, B_ACTIVETIME, a.bike_time_h);
    push(AB, B_WAIT, obs.ab_wait_h);
    push(AB, B_FULLTIME, -flag(s.full_time));
    push(AB, B_OLDER, -flag(s.older));
    push(AB, B_HIGHER_ED, -flag(s.higher_ed));
    push(AB, B_WORK, -flag(s.work_trip));

    push(ABPT, ASC_ABPT, 1.0);
    push(ABPT, B_COST, cost[ABPT.index()]);
    push(ABPT, B_ACTIVETIME, a.abpt_bike_time_h);
    push(ABPT, B_TIME, a.abpt_total_time_h - a.abpt_bike_time_h);
    push(ABPT, B_WAIT, obs.ab_wait_h);
    push(ABPT, B_CAROWNER, -flag(s.car_owner));
    push(ABPT, B_HIGHER_ED, -flag(s.higher_ed));
    push(ABPT, B_HOTSUMMER, flag(s.hot_summer));
    push(ABPT, B_PTSHORTWAIT, flag(a.pt_short_wait));

    terms
}

/// Systematic utilities V0..V6 with the default cost book. `None` marks an
/// unavailable alternative. `lv_effect` is added to AB and ABPT only.
pub fn assemble_utilities(
    obs: &ChoiceObservation,
    params: &ParameterSet,
    lv_effect: f64,
) -> Result<[Option<f64>; N_MODES]> {
    assemble_utilities_with(obs, params, lv_effect, &CostBook::default())
}

pub fn assemble_utilities_with(
    obs: &ChoiceObservation,
    params: &ParameterSet,
    lv_effect: f64,
    book: &CostBook,
) -> Result<[Option<f64>; N_MODES]> {
    let mut v = [0.0; N_MODES];
    for t in utility_terms(obs, book) {
        v[t.alt.index()] += params.value(t.param)? * t.x;
    }
    v[ModeId::AB.index()] += lv_effect;
    v[ModeId::ABPT.index()] += lv_effect;
    let mut out = [None; N_MODES];
    for m in obs.availability.iter() {
        out[m.index()] = Some(v[m.index()]);
    }
    Ok(out)
}
