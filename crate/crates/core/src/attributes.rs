//! Trips, respondents and the cost conventions used to build alternative attributes.
//!
//! Times are carried in hours and costs are produced in USD; the utility
//! assembly divides costs by ten so coefficients stay on the tens-of-dollars
//! scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mode::{Availability, ModeId, N_MODES};

pub const MIN_DISTANCE_MI: f64 = 0.1;
pub const MAX_DISTANCE_MI: f64 = 30.0;
pub const KM_PER_MILE: f64 = 1.60934;

/// Converts raw minutes and dollars into hours and tens of dollars.
pub fn scale_inputs(raw_minutes: f64, raw_usd: f64) -> Result<(f64, f64)> {
    if !raw_minutes.is_finite() || !raw_usd.is_finite() {
        return Err(Error::domain("scale_inputs requires finite inputs"));
    }
    if raw_minutes < 0.0 || raw_usd < 0.0 {
        return Err(Error::domain(format!(
            "scale_inputs requires nonnegative inputs, got {raw_minutes} min and {raw_usd} USD"
        )));
    }
    Ok((minutes_to_hours(raw_minutes), usd_to_tens(raw_usd)))
}

#[inline]
pub fn minutes_to_hours(minutes: f64) -> f64 {
    minutes / 60.0
}

#[inline]
pub fn usd_to_tens(usd: f64) -> f64 {
    usd / 10.0
}

/// Level-of-service attributes of a single trip. Times are in hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripAttributes {
    pub walk_time_h: f64,
    pub bike_time_h: f64,
    pub car_time_h: f64,
    pub transit_time_h: f64,
    pub abpt_bike_time_h: f64,
    pub abpt_total_time_h: f64,
    pub distance_mi: f64,
    pub taxi_wait_h: f64,
    pub pt_short_wait: bool,
}

impl TripAttributes {
    pub fn validate(&self) -> Result<()> {
        let times = [
            ("walk_time", self.walk_time_h),
            ("bike_time", self.bike_time_h),
            ("car_time", self.car_time_h),
            ("transit_time", self.transit_time_h),
            ("abpt_bike_time", self.abpt_bike_time_h),
            ("abpt_total_time", self.abpt_total_time_h),
            ("taxi_wait", self.taxi_wait_h),
        ];
        for (name, t) in times {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::domain(format!("{name} must be finite and nonnegative, got {t}")));
            }
        }
        if self.abpt_bike_time_h > self.abpt_total_time_h {
            return Err(Error::domain(format!(
                "abpt bike time {} h exceeds abpt total time {} h",
                self.abpt_bike_time_h, self.abpt_total_time_h
            )));
        }
        if !(MIN_DISTANCE_MI..=MAX_DISTANCE_MI).contains(&self.distance_mi) {
            return Err(Error::domain(format!(
                "distance {} mi outside [{MIN_DISTANCE_MI}, {MAX_DISTANCE_MI}]",
                self.distance_mi
            )));
        }
        Ok(())
    }

    pub fn distance_km(&self) -> f64 {
        self.distance_mi * KM_PER_MILE
    }

    /// Share of the combined autonomous-bike + transit trip spent on the bike legs.
    pub fn abpt_bike_fraction(&self) -> f64 {
        if self.abpt_total_time_h > 0.0 {
            self.abpt_bike_time_h / self.abpt_total_time_h
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Purpose {
    Work,
    Leisure,
    Errands,
}

impl Purpose {
    pub fn name(self) -> &'static str {
        match self {
            Purpose::Work => "work",
            Purpose::Leisure => "leisure",
            Purpose::Errands => "errands",
        }
    }
}

/// Respondent and trip-purpose dummies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Sociodemographics {
    pub high_income: bool,
    pub low_income: bool,
    pub full_time: bool,
    pub higher_ed: bool,
    pub children: bool,
    pub car_owner: bool,
    pub white: bool,
    pub woman: bool,
    pub older: bool,
    pub young: bool,
    pub student: bool,
    pub hot_summer: bool,
    pub harsh_winter: bool,
    pub work_trip: bool,
    pub leisure_trip: bool,
    pub errands_trip: bool,
}

impl Sociodemographics {
    /// Column names, in CSV order.
    pub const FLAG_NAMES: [&'static str; 16] = [
        "high_income",
        "low_income",
        "full_time",
        "higher_ed",
        "children",
        "car_owner",
        "white",
        "woman",
        "older",
        "young",
        "student",
        "hot_summer",
        "harsh_winter",
        "work_trip",
        "leisure_trip",
        "errands_trip",
    ];

    pub fn flag(&self, name: &str) -> Option<bool> {
        let v = match name {
            "high_income" => self.high_income,
            "low_income" => self.low_income,
            "full_time" => self.full_time,
            "higher_ed" => self.higher_ed,
            "children" => self.children,
            "car_owner" => self.car_owner,
            "white" => self.white,
            "woman" => self.woman,
            "older" => self.older,
            "young" => self.young,
            "student" => self.student,
            "hot_summer" => self.hot_summer,
            "harsh_winter" => self.harsh_winter,
            "work_trip" => self.work_trip,
            "leisure_trip" => self.leisure_trip,
            "errands_trip" => self.errands_trip,
            _ => return None,
        };
        Some(v)
    }

    pub fn set_flag(&mut self, name: &str, value: bool) -> Result<()> {
        let slot = match name {
            "high_income" => &mut self.high_income,
            "low_income" => &mut self.low_income,
            "full_time" => &mut self.full_time,
            "higher_ed" => &mut self.higher_ed,
            "children" => &mut self.children,
            "car_owner" => &mut self.car_owner,
            "white" => &mut self.white,
            "woman" => &mut self.woman,
            "older" => &mut self.older,
            "young" => &mut self.young,
            "student" => &mut self.student,
            "hot_summer" => &mut self.hot_summer,
            "harsh_winter" => &mut self.harsh_winter,
            "work_trip" => &mut self.work_trip,
            "leisure_trip" => &mut self.leisure_trip,
            "errands_trip" => &mut self.errands_trip,
            other => return Err(Error::spec(format!("unknown sociodemographic flag `{other}`"))),
        };
        *slot = value;
        Ok(())
    }

    pub fn purpose(&self) -> Option<Purpose> {
        match (self.work_trip, self.leisure_trip, self.errands_trip) {
            (true, false, false) => Some(Purpose::Work),
            (false, true, false) => Some(Purpose::Leisure),
            (false, false, true) => Some(Purpose::Errands),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = [self.work_trip, self.leisure_trip, self.errands_trip]
            .iter()
            .filter(|f| **f)
            .count();
        if n > 1 {
            return Err(Error::domain("work, leisure and errands trip flags are mutually exclusive"));
        }
        Ok(())
    }
}

/// Per-trip cost assumptions for the existing modes, in USD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostBook {
    pub car_usd_per_mile: f64,
    pub pt_usd_per_trip: f64,
    pub taxi_fixed: f64,
    pub taxi_usd_per_mile: f64,
    pub taxi_usd_per_min: f64,
}

impl Default for CostBook {
    fn default() -> Self {
        CostBook {
            car_usd_per_mile: 0.72,
            pt_usd_per_trip: 1.5,
            taxi_fixed: 1.23,
            taxi_usd_per_mile: 0.97,
            taxi_usd_per_min: 0.28,
        }
    }
}

impl CostBook {
    pub fn validate(&self) -> Result<()> {
        let entries = [
            self.car_usd_per_mile,
            self.pt_usd_per_trip,
            self.taxi_fixed,
            self.taxi_usd_per_mile,
            self.taxi_usd_per_min,
        ];
        if entries.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::domain("cost book entries must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Cost of every mode in USD, indexed by [`ModeId::index`].
pub fn mode_costs(attrs: &TripAttributes, book: &CostBook, ab_cost_rate: f64) -> [f64; N_MODES] {
    let car_minutes = attrs.car_time_h * 60.0;
    let bike_minutes = attrs.bike_time_h * 60.0;
    let abpt_bike_minutes = attrs.abpt_bike_time_h * 60.0;
    let mut c = [0.0; N_MODES];
    c[ModeId::Car.index()] = attrs.distance_mi * book.car_usd_per_mile;
    c[ModeId::Transit.index()] = book.pt_usd_per_trip;
    c[ModeId::Taxi.index()] = book.taxi_fixed
        + book.taxi_usd_per_mile * attrs.distance_mi
        + book.taxi_usd_per_min * car_minutes;
    c[ModeId::AB.index()] = ab_cost_rate * bike_minutes;
    c[ModeId::ABPT.index()] = ab_cost_rate * abpt_bike_minutes + book.pt_usd_per_trip;
    c
}

/// One stated-preference choice task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceObservation {
    pub individual_id: String,
    pub task_index: u32,
    pub attributes: TripAttributes,
    pub socio: Sociodemographics,
    /// USD per minute of autonomous-bike riding.
    pub ab_cost_rate: f64,
    pub ab_wait_h: f64,
    pub availability: Availability,
    pub chosen: ModeId,
    /// Likert responses to the two attitude indicators (I10, I11).
    pub indicators: Option<[u8; 2]>,
    pub weight: f64,
}

impl ChoiceObservation {
    /// The respondent's own (non-autonomous) mode in an SP task, if exactly one is offered.
    pub fn original_mode(&self) -> Option<ModeId> {
        let mut originals = self.availability.iter().filter(|m| !m.is_autonomous());
        let first = originals.next()?;
        if originals.next().is_some() {
            None
        } else {
            Some(first)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.attributes.validate()?;
        self.socio.validate()?;
        if !(self.ab_cost_rate.is_finite() && self.ab_cost_rate >= 0.0) {
            return Err(Error::domain("ab_cost_rate must be finite and nonnegative"));
        }
        if !(self.ab_wait_h.is_finite() && self.ab_wait_h >= 0.0) {
            return Err(Error::domain("ab_wait must be finite and nonnegative"));
        }
        if !(self.weight.is_finite() && self.weight >= 0.0) {
            return Err(Error::domain("weight must be finite and nonnegative"));
        }
        if !self.availability.contains(self.chosen) {
            return Err(Error::domain(format!("chosen mode {} is not available", self.chosen)));
        }
        if let Some(ind) = self.indicators {
            if ind.iter().any(|v| !(1..=5).contains(v)) {
                return Err(Error::domain("indicator responses must lie in 1..=5"));
            }
        }
        Ok(())
    }

    /// Checks the three-alternative SP layout: AB, ABPT and exactly one original mode.
    pub fn validate_sp_layout(&self) -> Result<()> {
        if !self.availability.contains(ModeId::AB) || !self.availability.contains(ModeId::ABPT) {
            return Err(Error::domain("SP tasks must offer both AB and ABPT"));
        }
        if self.original_mode().is_none() {
            return Err(Error::domain("SP tasks must offer exactly one non-autonomous mode"));
        }
        Ok(())
    }
}

/// A reference-population trip used for scenario simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationTrip {
    pub trip_id: String,
    pub original_mode: ModeId,
    pub attributes: TripAttributes,
    pub socio: Sociodemographics,
}

impl PopulationTrip {
    /// Builds the SP-style observation this trip would face in a scenario cell.
    pub fn scenario_observation(&self, ab_cost_rate: f64, ab_wait_h: f64) -> ChoiceObservation {
        ChoiceObservation {
            individual_id: self.trip_id.clone(),
            task_index: 1,
            attributes: self.attributes,
            socio: self.socio,
            ab_cost_rate,
            ab_wait_h,
            availability: Availability::sp_task(self.original_mode),
            chosen: self.original_mode,
            indicators: None,
            weight: 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trip(bike_min: f64, car_min: f64, distance_mi: f64) -> TripAttributes {
        TripAttributes {
            walk_time_h: 0.5,
            bike_time_h: bike_min / 60.0,
            car_time_h: car_min / 60.0,
            transit_time_h: 0.4,
            abpt_bike_time_h: 0.1,
            abpt_total_time_h: 0.3,
            distance_mi,
            taxi_wait_h: 0.1,
            pt_short_wait: false,
        }
    }

    #[test]
    fn scale_inputs_examples() {
        assert_eq!(scale_inputs(60.0, 10.0).unwrap(), (1.0, 1.0));
        assert_eq!(scale_inputs(0.0, 0.0).unwrap(), (0.0, 0.0));
        let (h, c) = scale_inputs(15.0, 22.5).unwrap();
        assert!((h - 0.25).abs() < 1e-15 && (c - 2.25).abs() < 1e-15);
        assert!(matches!(scale_inputs(-1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(scale_inputs(1.0, -0.5), Err(Error::Domain(_))));
        assert!(scale_inputs(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn ab_cost_for_fifteen_minute_ride() {
        let c = mode_costs(&trip(15.0, 10.0, 3.0), &CostBook::default(), 0.1);
        assert!((c[ModeId::AB.index()] - 1.5).abs() < 1e-12);
        let c = mode_costs(&trip(15.0, 10.0, 3.0), &CostBook::default(), 1.5);
        assert!((c[ModeId::AB.index()] - 22.5).abs() < 1e-12);
    }

    #[test]
    fn taxi_cost_formula() {
        let c = mode_costs(&trip(20.0, 15.0, 5.0), &CostBook::default(), 0.1);
        assert!((c[ModeId::Taxi.index()] - 10.28).abs() < 1e-12);
        assert!((c[ModeId::Car.index()] - 3.6).abs() < 1e-12);
        assert_eq!(c[ModeId::Transit.index()], 1.5);
        assert_eq!(c[ModeId::Walk.index()], 0.0);
        assert_eq!(c[ModeId::Bike.index()], 0.0);
        // 6 bike minutes at 0.1/min plus the transit fare
        assert!((c[ModeId::ABPT.index()] - 2.1).abs() < 1e-12);
    }

    #[test]
    fn attribute_validation() {
        assert!(trip(10.0, 10.0, 2.0).validate().is_ok());
        assert!(trip(10.0, 10.0, 0.05).validate().is_err());
        assert!(trip(10.0, 10.0, 31.0).validate().is_err());
        let mut t = trip(10.0, 10.0, 2.0);
        t.abpt_bike_time_h = 0.5;
        assert!(t.validate().is_err());
        let mut t = trip(10.0, 10.0, 2.0);
        t.walk_time_h = -0.1;
        assert!(t.validate().is_err());
    }

    #[test]
    fn purpose_flags_are_exclusive() {
        let mut s = Sociodemographics::default();
        s.work_trip = true;
        assert_eq!(s.purpose(), Some(Purpose::Work));
        s.leisure_trip = true;
        assert!(s.validate().is_err());
        for name in Sociodemographics::FLAG_NAMES {
            let mut s = Sociodemographics::default();
            s.set_flag(name, true).unwrap();
            assert_eq!(s.flag(name), Some(true));
        }
    }
}
