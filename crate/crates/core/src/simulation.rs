//! Scenario simulation over the cost × wait grid.
//!
//! Each population trip faces its original mode plus AB and ABPT. Probabilities
//! of simulated models are averaged over the trip's own draws, which stay the
//! same in every cell so that differences between cells are not sampling noise.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attributes::{minutes_to_hours, CostBook, PopulationTrip};
use crate::error::{Error, Result};
use crate::estimation::engine::{compile_structural, compile_task, ModelKind, ModelStructure, Problem};
use crate::estimation::LatentDrawPlan;
use crate::mode::{ModeId, N_MODES, ORIGIN_MODES};
use crate::params::ParameterSet;

pub const N_ORIGINS: usize = 5;

pub const DEFAULT_COSTS: [f64; 5] = [0.1, 0.2, 0.4, 0.7, 1.5];
pub const DEFAULT_WAITS_MIN: [f64; 6] = [1.0, 3.0, 5.0, 7.0, 10.0, 15.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioGrid {
    /// AB cost levels in USD per minute.
    pub costs: Vec<f64>,
    /// AB wait levels in minutes.
    pub waits: Vec<f64>,
}

impl Default for ScenarioGrid {
    fn default() -> Self {
        ScenarioGrid {
            costs: DEFAULT_COSTS.to_vec(),
            waits: DEFAULT_WAITS_MIN.to_vec(),
        }
    }
}

impl ScenarioGrid {
    pub fn validate(&self) -> Result<()> {
        if self.costs.is_empty() || self.waits.is_empty() {
            return Err(Error::config("grid needs at least one cost and one wait level"));
        }
        if self
            .costs
            .iter()
            .chain(&self.waits)
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(Error::config("grid levels must be finite and nonnegative"));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let g: ScenarioGrid = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Cells in cost-major order.
    pub fn cells(&self) -> Vec<GridPoint> {
        let mut out = Vec::with_capacity(self.costs.len() * self.waits.len());
        for c in &self.costs {
            for w in &self.waits {
                out.push(GridPoint {
                    cell_id: out.len(),
                    cost_rate: *c,
                    wait_min: *w,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub cell_id: usize,
    pub cost_rate: f64,
    pub wait_min: f64,
}

/// How random components are handled at prediction time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentMode {
    /// Average over the draw plan.
    #[default]
    Integrate,
    /// Evaluate once at the mean of every random component.
    PointEstimate,
}

/// Which alternatives a population trip may choose in a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdoptionPolicy {
    /// Original mode, AB and ABPT.
    #[default]
    SpDesign,
    /// AB and ABPT removed: every trip keeps its original mode.
    Disabled,
}

/// An estimated model ready for prediction.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub kind: ModelKind,
    pub params: ParameterSet,
    pub plan: LatentDrawPlan,
    pub book: CostBook,
    pub latent_mode: LatentMode,
    pub adoption: AdoptionPolicy,
    structure: ModelStructure,
    theta: Vec<f64>,
}

impl FittedModel {
    pub fn new(kind: ModelKind, params: ParameterSet, plan: LatentDrawPlan) -> Result<Self> {
        let structure = ModelStructure::for_mode_choice(kind, &params)?;
        if structure.dims() > 0 {
            plan.validate()?;
        }
        let theta = params.values();
        Ok(FittedModel {
            kind,
            params,
            plan,
            book: CostBook::default(),
            latent_mode: LatentMode::Integrate,
            adoption: AdoptionPolicy::SpDesign,
            structure,
            theta,
        })
    }

    pub fn with_book(mut self, book: CostBook) -> Self {
        self.book = book;
        self
    }

    pub fn with_latent_mode(mut self, mode: LatentMode) -> Self {
        self.latent_mode = mode;
        self
    }

    pub fn with_adoption(mut self, adoption: AdoptionPolicy) -> Self {
        self.adoption = adoption;
        self
    }

    pub fn structure(&self) -> &ModelStructure {
        &self.structure
    }

    /// Draws for one trip, or `None` for models without random components.
    pub fn trip_draws(&self, trip_id: &str) -> Result<Option<Vec<f64>>> {
        let dims = self.structure.dims();
        if dims == 0 {
            return Ok(None);
        }
        Ok(Some(match self.latent_mode {
            LatentMode::Integrate => self.plan.draws_for(trip_id, dims)?,
            LatentMode::PointEstimate => vec![0.0; dims],
        }))
    }

    /// Probabilities for a trip in one cell using pre-generated draws.
    pub fn predict_with_draws(&self, trip: &PopulationTrip, cell: &GridPoint, draws: Option<&[f64]>) -> Result<[f64; N_MODES]> {
        if trip.original_mode.is_autonomous() {
            return Err(Error::data(0, format!("trip `{}` has no valid original mode", trip.trip_id)));
        }
        let mut out = [0.0; N_MODES];
        if self.adoption == AdoptionPolicy::Disabled {
            out[trip.original_mode.index()] = 1.0;
            return Ok(out);
        }
        let obs = trip.scenario_observation(cell.cost_rate, minutes_to_hours(cell.wait_min));
        let task = compile_task(&obs, &self.params, &self.book, 0, 1.0)?;
        let structural = match &self.structure.latent {
            Some(l) => compile_structural(&trip.socio, l),
            None => Vec::new(),
        };
        let p = Problem::predict_task(&self.structure, &self.theta, &task, &structural, draws);
        out.copy_from_slice(&p[..N_MODES]);
        Ok(out)
    }
}

/// Probability vector of one trip in one cell.
pub fn predict_trip(trip: &PopulationTrip, cell: &GridPoint, model: &FittedModel) -> Result<[f64; N_MODES]> {
    trip.attributes.validate()?;
    let draws = model.trip_draws(&trip.trip_id)?;
    model.predict_with_draws(trip, cell, draws.as_deref())
}

fn check_weights(trips: &[PopulationTrip], weights: &[f64]) -> Result<f64> {
    if trips.len() != weights.len() {
        return Err(Error::spec("weights are not aligned with trips"));
    }
    if trips.is_empty() {
        return Err(Error::data(0, "no trips"));
    }
    if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::data(i, "weights must be finite and nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::domain("weights sum to zero"));
    }
    Ok(total)
}

/// Per-trip probabilities in every cell, indexed `[trip][cell]`.
pub fn trip_cell_probabilities(
    trips: &[PopulationTrip],
    cells: &[GridPoint],
    model: &FittedModel,
) -> Result<Vec<Vec<[f64; N_MODES]>>> {
    trips
        .par_iter()
        .enumerate()
        .map(|(row, trip)| {
            trip.attributes.validate().map_err(|e| Error::data(row, e.to_string()))?;
            let draws = model.trip_draws(&trip.trip_id)?;
            cells
                .iter()
                .map(|c| model.predict_with_draws(trip, c, draws.as_deref()).map_err(|e| match e {
                    Error::Data { message, .. } => Error::data(row, message),
                    other => other,
                }))
                .collect()
        })
        .collect()
}

/// Weighted mean probability vector: Σ w·P / Σ w.
pub fn aggregate_shares(
    trips: &[PopulationTrip],
    weights: &[f64],
    cell: &GridPoint,
    model: &FittedModel,
) -> Result<[f64; N_MODES]> {
    let total = check_weights(trips, weights)?;
    let probs = trip_cell_probabilities(trips, std::slice::from_ref(cell), model)?;
    let mut acc = [0.0; N_MODES];
    for (p, w) in probs.iter().zip(weights) {
        for m in 0..N_MODES {
            acc[m] += w * p[0][m];
        }
    }
    Ok(acc.map(|v| v / total))
}

/// Weighted flows from each origin mode (rows, `ORIGIN_MODES` order) to each mode, as shares of total weight.
pub fn shift_matrix(
    trips: &[PopulationTrip],
    weights: &[f64],
    cell: &GridPoint,
    model: &FittedModel,
) -> Result<[[f64; N_MODES]; N_ORIGINS]> {
    let total = check_weights(trips, weights)?;
    let probs = trip_cell_probabilities(trips, std::slice::from_ref(cell), model)?;
    Ok(flows(trips, weights, total, probs.iter().map(|p| &p[0])))
}

fn origin_row(m: ModeId) -> usize {
    ORIGIN_MODES.iter().position(|o| *o == m).expect("origin mode")
}

fn flows<'a>(
    trips: &[PopulationTrip],
    weights: &[f64],
    total: f64,
    probs: impl Iterator<Item = &'a [f64; N_MODES]>,
) -> [[f64; N_MODES]; N_ORIGINS] {
    let mut out = [[0.0; N_MODES]; N_ORIGINS];
    for ((trip, w), p) in trips.iter().zip(weights).zip(probs) {
        let row = origin_row(trip.original_mode);
        for m in 0..N_MODES {
            out[row][m] += w * p[m];
        }
    }
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

/// Weighted shares of the original modes.
pub fn baseline_shares(trips: &[PopulationTrip], weights: &[f64]) -> Result<[f64; N_MODES]> {
    let total = check_weights(trips, weights)?;
    let mut acc = [0.0; N_MODES];
    for (t, w) in trips.iter().zip(weights) {
        acc[t.original_mode.index()] += w;
    }
    Ok(acc.map(|v| v / total))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioCell {
    pub cell_id: usize,
    pub cost_rate: f64,
    pub wait_min: f64,
    pub shares: [f64; N_MODES],
    /// Rows follow walk, bike, car, transit, taxi.
    pub shift: [[f64; N_MODES]; N_ORIGINS],
}

impl ScenarioCell {
    pub fn adoption(&self) -> f64 {
        self.shares[ModeId::AB.index()] + self.shares[ModeId::ABPT.index()]
    }
}

/// Shares and shift matrices for every grid cell.
pub fn simulate_grid(
    trips: &[PopulationTrip],
    weights: &[f64],
    grid: &ScenarioGrid,
    model: &FittedModel,
) -> Result<Vec<ScenarioCell>> {
    grid.validate()?;
    let total = check_weights(trips, weights)?;
    let cells = grid.cells();
    let probs = trip_cell_probabilities(trips, &cells, model)?;
    Ok(cells
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let shift = flows(trips, weights, total, probs.iter().map(|p| &p[k]));
            let mut shares = [0.0; N_MODES];
            for (p, w) in probs.iter().zip(weights) {
                for m in 0..N_MODES {
                    shares[m] += w * p[k][m];
                }
            }
            ScenarioCell {
                cell_id: c.cell_id,
                cost_rate: c.cost_rate,
                wait_min: c.wait_min,
                shares: shares.map(|v| v / total),
                shift,
            }
        })
        .collect())
}

/// Convex combination of bikeable-trip shares and the unchanged non-bikeable baseline.
pub fn combine_population(
    bikeable_shares: &[f64; N_MODES],
    bikeable_fraction: f64,
    nonbikeable_baseline: &[f64; N_MODES],
) -> Result<[f64; N_MODES]> {
    if !(0.0..=1.0).contains(&bikeable_fraction) {
        return Err(Error::domain("bikeable fraction must lie in [0, 1]"));
    }
    for (name, v) in [("bikeable", bikeable_shares), ("non-bikeable", nonbikeable_baseline)] {
        let s: f64 = v.iter().sum();
        if (s - 1.0).abs() > 1e-9 || v.iter().any(|x| *x < 0.0) {
            return Err(Error::domain(format!("{name} shares must be nonnegative and sum to 1, got {s}")));
        }
    }
    let f = bikeable_fraction;
    let mut out = [0.0; N_MODES];
    for m in 0..N_MODES {
        out[m] = f * bikeable_shares[m] + (1.0 - f) * nonbikeable_baseline[m];
    }
    Ok(out)
}

pub fn write_shares_csv<W: std::io::Write>(writer: W, cells: &[ScenarioCell]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["cell_id", "cost", "wait"];
    header.extend(ModeId::ALL.iter().map(|m| m.name()));
    w.write_record(&header)?;
    for c in cells {
        let mut rec = vec![c.cell_id.to_string(), c.cost_rate.to_string(), c.wait_min.to_string()];
        rec.extend(c.shares.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_shifts_csv<W: std::io::Write>(writer: W, cells: &[ScenarioCell]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["cell_id", "origin", "destination", "flow"])?;
    for c in cells {
        for (r, o) in ORIGIN_MODES.iter().enumerate() {
            for d in ModeId::ALL {
                w.write_record([
                    c.cell_id.to_string(),
                    o.name().to_string(),
                    d.name().to_string(),
                    c.shift[r][d.index()].to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attributes::{Sociodemographics, TripAttributes};
    use crate::params::names::*;

    fn trip(id: &str, mode: ModeId) -> PopulationTrip {
        PopulationTrip {
            trip_id: id.into(),
            original_mode: mode,
            attributes: TripAttributes {
                walk_time_h: 0.6,
                bike_time_h: 0.2,
                car_time_h: 0.15,
                transit_time_h: 0.4,
                abpt_bike_time_h: 0.1,
                abpt_total_time_h: 0.35,
                distance_mi: 2.5,
                taxi_wait_h: 0.1,
                pt_short_wait: false,
            },
            socio: Sociodemographics::default(),
        }
    }

    #[test]
    fn default_grid_has_thirty_cells() {
        assert_eq!(ScenarioGrid::default().cells().len(), 30);
    }

    #[test]
    fn zero_coefficients_split_evenly() {
        let model = FittedModel::new(ModelKind::Mnl, ParameterSet::mnl_start(), LatentDrawPlan::default()).unwrap();
        let cell = ScenarioGrid::default().cells()[7];
        let p = predict_trip(&trip("a", ModeId::Car), &cell, &model).unwrap();
        for m in [ModeId::Car, ModeId::AB, ModeId::ABPT] {
            assert!((p[m.index()] - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(p[ModeId::Walk.index()], 0.0);
    }

    #[test]
    fn cost_raises_lower_ab_probability() {
        let mut params = ParameterSet::mnl_start();
        params.set_value(B_COST, -1.17).unwrap();
        let model = FittedModel::new(ModelKind::Mnl, params, LatentDrawPlan::default()).unwrap();
        let t = trip("a", ModeId::Transit);
        let lo = GridPoint { cell_id: 0, cost_rate: 0.1, wait_min: 5.0 };
        let hi = GridPoint { cell_id: 1, cost_rate: 0.7, wait_min: 5.0 };
        let p_lo = predict_trip(&t, &lo, &model).unwrap();
        let p_hi = predict_trip(&t, &hi, &model).unwrap();
        assert!(p_hi[ModeId::AB.index()] < p_lo[ModeId::AB.index()]);
    }

    #[test]
    fn combine_examples() {
        let mut bikeable = [0.0; N_MODES];
        bikeable[ModeId::AB.index()] = 0.2;
        bikeable[ModeId::Car.index()] = 0.8;
        let mut base = [0.0; N_MODES];
        base[ModeId::Car.index()] = 1.0;
        let half = combine_population(&bikeable, 0.5, &base).unwrap();
        assert!((half[ModeId::AB.index()] - 0.1).abs() < 1e-15);
        assert_eq!(combine_population(&bikeable, 1.0, &base).unwrap(), bikeable);
        assert_eq!(combine_population(&bikeable, 0.0, &base).unwrap(), base);
        assert!(combine_population(&[0.5; N_MODES], 0.5, &base).is_err());
    }

    #[test]
    fn disabled_adoption_keeps_original_modes() {
        let model = FittedModel::new(ModelKind::Mnl, ParameterSet::published_model1(), LatentDrawPlan::default())
            .unwrap()
            .with_adoption(AdoptionPolicy::Disabled);
        let trips = vec![trip("a", ModeId::Car), trip("b", ModeId::Walk)];
        let cell = ScenarioGrid::default().cells()[0];
        let m = shift_matrix(&trips, &[1.0, 1.0], &cell, &model).unwrap();
        assert_eq!(m[2][ModeId::Car.index()], 0.5);
        assert_eq!(m[0][ModeId::Walk.index()], 0.5);
    }
}
