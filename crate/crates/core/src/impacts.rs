//! Expected emissions of population trips and relative change against the no-AB baseline.
//!
//! Factors are grams CO₂e per passenger-km. AB always uses the lifecycle
//! table, whatever the background fleet; the ABPT trip splits its distance
//! between the AB factor and the transit factor in proportion to bike time.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attributes::PopulationTrip;
use crate::error::{Error, Result};
use crate::mode::{ModeId, N_MODES};
use crate::simulation::{trip_cell_probabilities, FittedModel, ScenarioGrid};

/// Toolkit default transit factors (not published values); override in config.
pub const TRANSIT_ICE_BUS: f64 = 100.0;
pub const TRANSIT_METRO: f64 = 30.0;
pub const TRANSIT_MIXED: f64 = 65.0;

pub fn transit_preset(name: &str) -> Result<f64> {
    match name {
        "ice_bus" => Ok(TRANSIT_ICE_BUS),
        "metro" => Ok(TRANSIT_METRO),
        "mixed" => Ok(TRANSIT_MIXED),
        other => Err(Error::config(format!("unknown transit preset `{other}` (ice_bus, metro, mixed)"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionScenario {
    pub name: String,
    pub car: f64,
    pub taxi: f64,
    pub bike: f64,
    pub walk: f64,
    pub transit: f64,
}

impl EmissionScenario {
    pub fn high(transit: f64) -> Self {
        Self::named("high", 162.0, 91.0, 24.0, 0.0, transit)
    }

    pub fn low(transit: f64) -> Self {
        Self::named("low", 108.0, 52.0, 0.0, 0.0, transit)
    }

    pub fn mixed(transit: f64) -> Self {
        Self::named("mixed", 135.0, 72.0, 12.0, 0.0, transit)
    }

    fn named(name: &str, car: f64, taxi: f64, bike: f64, walk: f64, transit: f64) -> Self {
        EmissionScenario {
            name: name.to_string(),
            car,
            taxi,
            bike,
            walk,
            transit,
        }
    }

    /// Built-in background fleet by name with an explicit transit factor.
    pub fn builtin(name: &str, transit: f64) -> Result<Self> {
        match name {
            "high" => Ok(Self::high(transit)),
            "low" => Ok(Self::low(transit)),
            "mixed" => Ok(Self::mixed(transit)),
            other => Err(Error::config(format!("unknown emission scenario `{other}`"))),
        }
    }

    /// The three built-in fleets, each with its matching toolkit transit default.
    pub fn builtins_with_default_transit() -> Vec<Self> {
        vec![
            Self::high(TRANSIT_ICE_BUS),
            Self::low(TRANSIT_METRO),
            Self::mixed(TRANSIT_MIXED),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (n, v) in [
            ("car", self.car),
            ("taxi", self.taxi),
            ("bike", self.bike),
            ("walk", self.walk),
            ("transit", self.transit),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(format!("{n} factor of `{}` must be finite and nonnegative", self.name)));
            }
        }
        Ok(())
    }

    /// Factor of a non-autonomous mode.
    pub fn factor(&self, mode: ModeId) -> Option<f64> {
        match mode {
            ModeId::Walk => Some(self.walk),
            ModeId::Bike => Some(self.bike),
            ModeId::Car => Some(self.car),
            ModeId::Transit => Some(self.transit),
            ModeId::Taxi => Some(self.taxi),
            ModeId::AB | ModeId::ABPT => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbVariant {
    Baseline,
    LongLifespan,
    ShortLifespan,
    HighInfrastructure,
}

impl AbVariant {
    pub const ALL: [AbVariant; 4] = [
        AbVariant::Baseline,
        AbVariant::LongLifespan,
        AbVariant::ShortLifespan,
        AbVariant::HighInfrastructure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AbVariant::Baseline => "baseline",
            AbVariant::LongLifespan => "long_lifespan",
            AbVariant::ShortLifespan => "short_lifespan",
            AbVariant::HighInfrastructure => "high_infrastructure",
        }
    }
}

/// AB lifecycle factors by variant and wait level (minutes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ABLifecycleTable {
    pub waits: Vec<f64>,
    pub variants: BTreeMap<AbVariant, Vec<f64>>,
    /// Linear interpolation between listed waits; off means only listed waits are accepted.
    #[serde(default = "yes")]
    pub interpolate: bool,
}

fn yes() -> bool {
    true
}

impl Default for ABLifecycleTable {
    fn default() -> Self {
        let mut variants = BTreeMap::new();
        variants.insert(AbVariant::Baseline, vec![83.5, 57.5, 45.2, 42.5, 40.0, 38.1]);
        variants.insert(AbVariant::LongLifespan, vec![63.9, 48.3, 40.9, 39.3, 37.8, 36.7]);
        variants.insert(AbVariant::ShortLifespan, vec![181.8, 103.7, 66.9, 58.6, 51.2, 45.6]);
        variants.insert(AbVariant::HighInfrastructure, vec![104.6, 78.6, 66.4, 63.6, 61.2, 59.3]);
        ABLifecycleTable {
            waits: vec![1.0, 3.0, 5.0, 7.0, 10.0, 15.0],
            variants,
            interpolate: true,
        }
    }
}

impl ABLifecycleTable {
    pub fn validate(&self) -> Result<()> {
        if self.waits.is_empty() || self.waits.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config("AB table waits must be strictly increasing"));
        }
        for (v, row) in &self.variants {
            if row.len() != self.waits.len() {
                return Err(Error::config(format!("AB variant {} has {} values for {} waits", v.name(), row.len(), self.waits.len())));
            }
            if row.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::config(format!("AB variant {} has a negative factor", v.name())));
            }
        }
        Ok(())
    }

    /// True when every variant is non-increasing in wait.
    pub fn is_monotone(&self) -> bool {
        self.variants.values().all(|r| r.windows(2).all(|w| w[1] <= w[0]))
    }

    pub fn factor(&self, variant: AbVariant, wait_min: f64) -> Result<f64> {
        let row = self
            .variants
            .get(&variant)
            .ok_or_else(|| Error::config(format!("AB table has no `{}` variant", variant.name())))?;
        if let Some(i) = self.waits.iter().position(|w| *w == wait_min) {
            return Ok(row[i]);
        }
        let (lo, hi) = (self.waits[0], *self.waits.last().expect("nonempty"));
        if !self.interpolate {
            return Err(Error::domain(format!("wait {wait_min} min is not a table level and interpolation is off")));
        }
        if !(wait_min >= lo && wait_min <= hi) {
            return Err(Error::domain(format!("wait {wait_min} min outside the table range [{lo}, {hi}]")));
        }
        let j = self.waits.iter().position(|w| *w > wait_min).expect("inside range");
        let (w0, w1) = (self.waits[j - 1], self.waits[j]);
        let t = (wait_min - w0) / (w1 - w0);
        Ok(row[j - 1] + t * (row[j] - row[j - 1]))
    }
}

/// Background fleets, AB table and variants read from an emission config file.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionConfig {
    pub scenarios: Vec<EmissionScenario>,
    pub ab_table: ABLifecycleTable,
    pub variants: Vec<AbVariant>,
}

impl Default for EmissionConfig {
    /// Built-in fleets with the toolkit transit defaults, every AB variant.
    fn default() -> Self {
        EmissionConfig {
            scenarios: EmissionScenario::builtins_with_default_transit(),
            ab_table: ABLifecycleTable::default(),
            variants: AbVariant::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TransitSpec {
    Value(f64),
    Preset(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioEntry {
    name: String,
    preset: Option<String>,
    car: Option<f64>,
    taxi: Option<f64>,
    bike: Option<f64>,
    walk: Option<f64>,
    transit: TransitSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmissionFile {
    scenario: Vec<ScenarioEntry>,
    variants: Option<Vec<AbVariant>>,
    ab_table: Option<ABLifecycleTable>,
}

impl EmissionConfig {
    /// Parses TOML such as
    ///
    /// ```toml
    /// variants = ["baseline", "short_lifespan"]
    /// [[scenario]]
    /// name = "mixed"
    /// preset = "mixed"
    /// transit = "mixed"      # or a number in g/pkm
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let f: EmissionFile = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        if f.scenario.is_empty() {
            return Err(Error::config("at least one [[scenario]] is required"));
        }
        let mut scenarios = Vec::new();
        for e in f.scenario {
            let transit = match e.transit {
                TransitSpec::Value(v) => v,
                TransitSpec::Preset(p) => transit_preset(&p)?,
            };
            let mut s = match &e.preset {
                Some(p) => EmissionScenario::builtin(p, transit)?,
                None => {
                    let need = |v: Option<f64>, n: &str| {
                        v.ok_or_else(|| Error::config(format!("scenario `{}` needs `{n}` or a preset", e.name)))
                    };
                    EmissionScenario::named(&e.name, need(e.car, "car")?, need(e.taxi, "taxi")?, need(e.bike, "bike")?, e.walk.unwrap_or(0.0), transit)
                }
            };
            s.name = e.name;
            if let Some(v) = e.car {
                s.car = v;
            }
            if let Some(v) = e.taxi {
                s.taxi = v;
            }
            if let Some(v) = e.bike {
                s.bike = v;
            }
            if let Some(v) = e.walk {
                s.walk = v;
            }
            s.validate()?;
            scenarios.push(s);
        }
        let ab_table = f.ab_table.unwrap_or_default();
        ab_table.validate()?;
        let variants = f.variants.unwrap_or_else(|| AbVariant::ALL.to_vec());
        for v in &variants {
            if !ab_table.variants.contains_key(v) {
                return Err(Error::config(format!("AB table has no `{}` variant", v.name())));
            }
        }
        Ok(EmissionConfig {
            scenarios,
            ab_table,
            variants,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Per-km factor of every mode for one trip (ABPT already blended).
fn mode_factors(trip: &PopulationTrip, scenario: &EmissionScenario, ab: f64) -> [f64; N_MODES] {
    let mut f = [0.0; N_MODES];
    for m in ModeId::ALL {
        f[m.index()] = match scenario.factor(m) {
            Some(v) => v,
            None if m == ModeId::AB => ab,
            None => {
                let share = trip.attributes.abpt_bike_fraction();
                share * ab + (1.0 - share) * scenario.transit
            }
        };
    }
    f
}

/// Expected grams CO₂e of one trip: Σ_m P(m)·factor(m)·km.
pub fn trip_emissions(
    trip: &PopulationTrip,
    probabilities: &[f64; N_MODES],
    wait_min: f64,
    scenario: &EmissionScenario,
    ab_table: &ABLifecycleTable,
    variant: AbVariant,
) -> Result<f64> {
    let uses_ab = probabilities[ModeId::AB.index()] > 0.0 || probabilities[ModeId::ABPT.index()] > 0.0;
    let ab = if uses_ab { ab_table.factor(variant, wait_min)? } else { 0.0 };
    let f = mode_factors(trip, scenario, ab);
    let km = trip.attributes.distance_km();
    Ok((0..N_MODES).map(|m| probabilities[m] * f[m]).sum::<f64>() * km)
}

/// Weighted total when every trip keeps its original mode.
pub fn baseline_total(trips: &[PopulationTrip], weights: &[f64], scenario: &EmissionScenario) -> Result<f64> {
    if trips.len() != weights.len() {
        return Err(Error::spec("weights are not aligned with trips"));
    }
    let mut total = 0.0;
    for (t, w) in trips.iter().zip(weights) {
        let f = scenario
            .factor(t.original_mode)
            .ok_or_else(|| Error::data(0, format!("trip `{}` has an autonomous original mode", t.trip_id)))?;
        total += w * (f * t.attributes.distance_km());
    }
    Ok(total)
}

/// Weighted total under given per-trip probabilities.
pub fn total_with_probabilities(
    trips: &[PopulationTrip],
    weights: &[f64],
    probabilities: &[[f64; N_MODES]],
    wait_min: f64,
    scenario: &EmissionScenario,
    ab_table: &ABLifecycleTable,
    variant: AbVariant,
) -> Result<f64> {
    if trips.len() != weights.len() || trips.len() != probabilities.len() {
        return Err(Error::spec("trips, weights and probabilities must align"));
    }
    let mut total = 0.0;
    for ((t, w), p) in trips.iter().zip(weights).zip(probabilities) {
        total += w * trip_emissions(t, p, wait_min, scenario, ab_table, variant)?;
    }
    Ok(total)
}

/// Weighted total of model-predicted emissions in one cell.
pub fn scenario_total(
    trips: &[PopulationTrip],
    weights: &[f64],
    cell: &crate::simulation::GridPoint,
    model: &FittedModel,
    scenario: &EmissionScenario,
    ab_table: &ABLifecycleTable,
    variant: AbVariant,
) -> Result<f64> {
    let probs = trip_cell_probabilities(trips, std::slice::from_ref(cell), model)?;
    let flat: Vec<[f64; N_MODES]> = probs.into_iter().map(|p| p[0]).collect();
    total_with_probabilities(trips, weights, &flat, cell.wait_min, scenario, ab_table, variant)
}

/// Percent change; negative is a reduction.
pub fn relative_change(total_with_ab: f64, total_baseline: f64) -> Result<f64> {
    if !(total_baseline > 0.0) {
        return Err(Error::domain("baseline total must be positive"));
    }
    Ok(100.0 * (total_with_ab - total_baseline) / total_baseline)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactRow {
    pub scenario: String,
    pub variant: AbVariant,
    pub cell_id: usize,
    pub cost: f64,
    pub wait: f64,
    pub percent_change: f64,
}

/// Percent change for every (scenario, variant, cell).
pub fn impact_grid(
    trips: &[PopulationTrip],
    weights: &[f64],
    model: &FittedModel,
    grid: &ScenarioGrid,
    config: &EmissionConfig,
) -> Result<Vec<ImpactRow>> {
    grid.validate()?;
    config.ab_table.validate()?;
    let cells = grid.cells();
    let probs = trip_cell_probabilities(trips, &cells, model)?;
    let mut rows = Vec::new();
    for scenario in &config.scenarios {
        let base = baseline_total(trips, weights, scenario)?;
        for variant in &config.variants {
            for (k, c) in cells.iter().enumerate() {
                let cell_probs: Vec<[f64; N_MODES]> = probs.iter().map(|p| p[k]).collect();
                let total =
                    total_with_probabilities(trips, weights, &cell_probs, c.wait_min, scenario, &config.ab_table, *variant)?;
                rows.push(ImpactRow {
                    scenario: scenario.name.clone(),
                    variant: *variant,
                    cell_id: c.cell_id,
                    cost: c.cost_rate,
                    wait: c.wait_min,
                    percent_change: relative_change(total, base)?,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_impacts_csv<W: std::io::Write>(writer: W, rows: &[ImpactRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["scenario", "variant", "cost", "wait", "percent_change"])?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.variant.name().to_string(),
            r.cost.to_string(),
            r.wait.to_string(),
            r.percent_change.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
