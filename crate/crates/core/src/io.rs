//! CSV readers and writers.
//!
//! Every reader looks columns up by header name, so column order is free.
//! Errors carry the zero-based data row and the column name.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use crate::attributes::{
    minutes_to_hours, ChoiceObservation, PopulationTrip, Purpose, Sociodemographics, TripAttributes, MAX_DISTANCE_MI,
    MIN_DISTANCE_MI,
};
use crate::bikeability::{BikeabilityRecord, Classified};
use crate::error::{Error, Result};
use crate::mode::{Availability, ModeId};
use crate::weighting::Sample;

/// Transit waits below this many minutes set the short-wait flag.
pub const SHORT_WAIT_MIN: f64 = 10.0;

pub const AVAIL_COLUMNS: [&str; 7] = [
    "avail_walk",
    "avail_bike",
    "avail_car",
    "avail_transit",
    "avail_taxi",
    "avail_ab",
    "avail_abpt",
];

pub const TRIP_TIME_COLUMNS: [&str; 6] = [
    "walk_min",
    "bike_min",
    "car_min",
    "transit_min",
    "abpt_bike_min",
    "abpt_total_min",
];

struct Sheet {
    source: String,
    columns: HashMap<String, usize>,
    rows: Vec<StringRecord>,
}

impl Sheet {
    fn read<R: Read>(reader: R, source: &str) -> Result<Self> {
        let mut rdr = ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let columns = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim_start_matches('\u{feff}').to_string(), i))
            .collect();
        let rows = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Sheet {
            source: source.to_string(),
            columns,
            rows,
        })
    }

    fn open(path: &Path) -> Result<Self> {
        Self::read(File::open(path)?, &path.display().to_string())
    }

    fn has(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    fn require(&self, names: &[&str]) -> Result<()> {
        for n in names {
            if !self.has(n) {
                return Err(Error::MissingColumn {
                    column: (*n).to_string(),
                    source_name: self.source.clone(),
                });
            }
        }
        Ok(())
    }

    fn cell<'a>(&self, rec: &'a StringRecord, name: &str) -> Option<&'a str> {
        self.columns.get(name).and_then(|i| rec.get(*i))
    }

    fn str(&self, rec: &StringRecord, row: usize, name: &str) -> Result<String> {
        match self.cell(rec, name) {
            Some(s) if !s.is_empty() => Ok(s.to_string()),
            _ => Err(parse_err(row, name, "empty value")),
        }
    }

    fn f64(&self, rec: &StringRecord, row: usize, name: &str) -> Result<f64> {
        let s = self.str(rec, row, name)?;
        let v: f64 = s.parse().map_err(|_| parse_err(row, name, format!("`{s}` is not a number")))?;
        if !v.is_finite() {
            return Err(parse_err(row, name, "value is not finite"));
        }
        Ok(v)
    }

    fn opt_f64(&self, rec: &StringRecord, row: usize, name: &str) -> Result<Option<f64>> {
        match self.cell(rec, name) {
            None | Some("") => Ok(None),
            Some(_) => self.f64(rec, row, name).map(Some),
        }
    }

    fn nonneg(&self, rec: &StringRecord, row: usize, name: &str) -> Result<f64> {
        let v = self.f64(rec, row, name)?;
        if v < 0.0 {
            return Err(parse_err(row, name, "value must be nonnegative"));
        }
        Ok(v)
    }

    fn bool(&self, rec: &StringRecord, row: usize, name: &str) -> Result<bool> {
        let s = self.str(rec, row, name)?;
        match s.to_ascii_lowercase().as_str() {
            "1" | "true" | "yes" => Ok(true),
            "0" | "false" | "no" => Ok(false),
            _ => Err(parse_err(row, name, format!("`{s}` is not 0/1"))),
        }
    }

    fn mode(&self, rec: &StringRecord, row: usize, name: &str) -> Result<ModeId> {
        let s = self.str(rec, row, name)?;
        s.parse().map_err(|_| parse_err(row, name, format!("unknown mode `{s}`")))
    }
}

fn parse_err(row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

fn socio_from(sheet: &Sheet, rec: &StringRecord, row: usize) -> Result<Sociodemographics> {
    let mut s = Sociodemographics::default();
    for name in Sociodemographics::FLAG_NAMES {
        s.set_flag(name, sheet.bool(rec, row, name)?)?;
    }
    s.validate().map_err(|e| Error::data(row, e.to_string()))?;
    Ok(s)
}

fn trip_from(sheet: &Sheet, rec: &StringRecord, row: usize) -> Result<TripAttributes> {
    let pt_short_wait = if sheet.has("transit_wait_min") {
        sheet.nonneg(rec, row, "transit_wait_min")? < SHORT_WAIT_MIN
    } else {
        sheet.bool(rec, row, "pt_short_wait")?
    };
    Ok(TripAttributes {
        walk_time_h: minutes_to_hours(sheet.nonneg(rec, row, "walk_min")?),
        bike_time_h: minutes_to_hours(sheet.nonneg(rec, row, "bike_min")?),
        car_time_h: minutes_to_hours(sheet.nonneg(rec, row, "car_min")?),
        transit_time_h: minutes_to_hours(sheet.nonneg(rec, row, "transit_min")?),
        abpt_bike_time_h: minutes_to_hours(sheet.nonneg(rec, row, "abpt_bike_min")?),
        abpt_total_time_h: minutes_to_hours(sheet.nonneg(rec, row, "abpt_total_min")?),
        distance_mi: sheet.nonneg(rec, row, "distance_mi")?,
        taxi_wait_h: minutes_to_hours(sheet.nonneg(rec, row, "taxi_wait_min")?),
        pt_short_wait,
    })
}

fn require_trip_columns(sheet: &Sheet) -> Result<()> {
    sheet.require(&TRIP_TIME_COLUMNS)?;
    sheet.require(&["distance_mi", "taxi_wait_min"])?;
    if !sheet.has("transit_wait_min") {
        sheet.require(&["pt_short_wait"])?;
    }
    sheet.require(&Sociodemographics::FLAG_NAMES)
}

fn likert(sheet: &Sheet, rec: &StringRecord, row: usize, name: &str) -> Result<Option<u8>> {
    match sheet.opt_f64(rec, row, name)? {
        None => Ok(None),
        Some(v) if v.fract() == 0.0 && (1.0..=5.0).contains(&v) => Ok(Some(v as u8)),
        Some(v) => Err(parse_err(row, name, format!("Likert response {v} outside 1..=5"))),
    }
}

pub fn read_observations_from<R: Read>(reader: R, source: &str) -> Result<Vec<ChoiceObservation>> {
    let sheet = Sheet::read(reader, source)?;
    sheet.require(&["individual_id", "task_index", "chosen"])?;
    sheet.require(&AVAIL_COLUMNS)?;
    require_trip_columns(&sheet)?;
    sheet.require(&["ab_cost_rate", "ab_wait_min"])?;
    let mut out = Vec::with_capacity(sheet.rows.len());
    for (row, rec) in sheet.rows.iter().enumerate() {
        let mut availability = Availability::NONE;
        for (i, col) in AVAIL_COLUMNS.iter().enumerate() {
            if sheet.bool(rec, row, col)? {
                availability.insert(ModeId::from_index(i).expect("seven modes"));
            }
        }
        let task = sheet.f64(rec, row, "task_index")?;
        if task.fract() != 0.0 || task < 1.0 {
            return Err(parse_err(row, "task_index", "must be a positive integer"));
        }
        let indicators = match (likert(&sheet, rec, row, "I10")?, likert(&sheet, rec, row, "I11")?) {
            (Some(a), Some(b)) => Some([a, b]),
            (None, None) => None,
            _ => return Err(Error::data(row, "indicators I10 and I11 must both be present or both absent")),
        };
        let obs = ChoiceObservation {
            individual_id: sheet.str(rec, row, "individual_id")?,
            task_index: task as u32,
            attributes: trip_from(&sheet, rec, row)?,
            socio: socio_from(&sheet, rec, row)?,
            ab_cost_rate: sheet.nonneg(rec, row, "ab_cost_rate")?,
            ab_wait_h: minutes_to_hours(sheet.nonneg(rec, row, "ab_wait_min")?),
            availability,
            chosen: sheet.mode(rec, row, "chosen")?,
            indicators,
            weight: sheet.opt_f64(rec, row, "weight")?.unwrap_or(1.0),
        };
        obs.validate().map_err(|e| Error::data(row, e.to_string()))?;
        out.push(obs);
    }
    Ok(out)
}

pub fn read_observations(path: &Path) -> Result<Vec<ChoiceObservation>> {
    read_observations_from(File::open(path)?, &path.display().to_string())
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn b(v: bool) -> &'static str {
    if v {
        "1"
    } else {
        "0"
    }
}

fn trip_cells(a: &TripAttributes) -> Vec<String> {
    vec![
        fmt(a.walk_time_h * 60.0),
        fmt(a.bike_time_h * 60.0),
        fmt(a.car_time_h * 60.0),
        fmt(a.transit_time_h * 60.0),
        fmt(a.abpt_bike_time_h * 60.0),
        fmt(a.abpt_total_time_h * 60.0),
        fmt(a.distance_mi),
        fmt(a.taxi_wait_h * 60.0),
        b(a.pt_short_wait).into(),
    ]
}

fn trip_header() -> Vec<&'static str> {
    let mut h = TRIP_TIME_COLUMNS.to_vec();
    h.extend(["distance_mi", "taxi_wait_min", "pt_short_wait"]);
    h
}

fn socio_cells(s: &Sociodemographics) -> Vec<String> {
    Sociodemographics::FLAG_NAMES
        .iter()
        .map(|n| b(s.flag(n).expect("known flag")).to_string())
        .collect()
}

pub fn write_observations_to<W: Write>(writer: W, data: &[ChoiceObservation]) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    let mut header = vec!["individual_id", "task_index", "chosen"];
    header.extend(AVAIL_COLUMNS);
    header.extend(trip_header());
    header.extend(["ab_cost_rate", "ab_wait_min", "I10", "I11"]);
    header.extend(Sociodemographics::FLAG_NAMES);
    header.push("weight");
    w.write_record(&header)?;
    for o in data {
        let mut rec = vec![o.individual_id.clone(), o.task_index.to_string(), o.chosen.name().to_string()];
        for m in ModeId::ALL {
            rec.push(b(o.availability.contains(m)).into());
        }
        rec.extend(trip_cells(&o.attributes));
        rec.push(fmt(o.ab_cost_rate));
        rec.push(fmt(o.ab_wait_h * 60.0));
        match o.indicators {
            Some([a, c]) => {
                rec.push(a.to_string());
                rec.push(c.to_string());
            }
            None => {
                rec.push(String::new());
                rec.push(String::new());
            }
        }
        rec.extend(socio_cells(&o.socio));
        rec.push(fmt(o.weight));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_observations(path: &Path, data: &[ChoiceObservation]) -> Result<()> {
    write_observations_to(File::create(path)?, data)
}

/// Reference-population trips with their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub trips: Vec<PopulationTrip>,
    pub weights: Vec<f64>,
    /// Rows dropped by the distance filter.
    pub n_filtered: usize,
}

pub fn read_population_from<R: Read>(reader: R, source: &str) -> Result<Population> {
    let sheet = Sheet::read(reader, source)?;
    sheet.require(&["trip_id", "original_mode"])?;
    require_trip_columns(&sheet)?;
    let mut trips = Vec::with_capacity(sheet.rows.len());
    let mut weights = Vec::with_capacity(sheet.rows.len());
    let mut n_filtered = 0;
    for (row, rec) in sheet.rows.iter().enumerate() {
        let attributes = trip_from(&sheet, rec, row)?;
        if !(MIN_DISTANCE_MI..=MAX_DISTANCE_MI).contains(&attributes.distance_mi) {
            n_filtered += 1;
            continue;
        }
        attributes.validate().map_err(|e| Error::data(row, e.to_string()))?;
        let original_mode = sheet.mode(rec, row, "original_mode")?;
        if original_mode.is_autonomous() {
            return Err(Error::data(row, "original mode must be one of walk, bike, car, transit, taxi"));
        }
        let w = sheet.opt_f64(rec, row, "weight")?.unwrap_or(1.0);
        if w < 0.0 {
            return Err(parse_err(row, "weight", "must be nonnegative"));
        }
        trips.push(PopulationTrip {
            trip_id: sheet.str(rec, row, "trip_id")?,
            original_mode,
            attributes,
            socio: socio_from(&sheet, rec, row)?,
        });
        weights.push(w);
    }
    Ok(Population {
        trips,
        weights,
        n_filtered,
    })
}

pub fn read_population(path: &Path) -> Result<Population> {
    read_population_from(File::open(path)?, &path.display().to_string())
}

pub fn write_population_to<W: Write>(writer: W, trips: &[PopulationTrip], weights: &[f64]) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    let mut header = vec!["trip_id", "original_mode"];
    header.extend(trip_header());
    header.extend(Sociodemographics::FLAG_NAMES);
    header.push("weight");
    w.write_record(&header)?;
    for (t, wt) in trips.iter().zip(weights) {
        let mut rec = vec![t.trip_id.clone(), t.original_mode.name().to_string()];
        rec.extend(trip_cells(&t.attributes));
        rec.extend(socio_cells(&t.socio));
        rec.push(fmt(*wt));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_population(path: &Path, trips: &[PopulationTrip], weights: &[f64]) -> Result<()> {
    write_population_to(File::create(path)?, trips, weights)
}

const BIKE_FLAGS: [&str; 7] = [
    "full_time",
    "woman",
    "older",
    "student",
    "higher_ed",
    "children",
    "harsh_winter",
];

fn parse_purpose(s: &str) -> Option<Purpose> {
    match s.to_ascii_lowercase().as_str() {
        "work" => Some(Purpose::Work),
        "leisure" => Some(Purpose::Leisure),
        "errands" => Some(Purpose::Errands),
        _ => None,
    }
}

/// Bikeability records: `trip_id, mode, time_min, purpose`, seven socio flags,
/// optional `bikeable` label and `weight`.
pub fn read_bikeability_from<R: Read>(reader: R, source: &str) -> Result<Vec<BikeabilityRecord>> {
    let sheet = Sheet::read(reader, source)?;
    sheet.require(&["trip_id", "mode", "time_min", "purpose"])?;
    sheet.require(&BIKE_FLAGS)?;
    let mut out = Vec::with_capacity(sheet.rows.len());
    for (row, rec) in sheet.rows.iter().enumerate() {
        let purpose_s = sheet.str(rec, row, "purpose")?;
        let purpose =
            parse_purpose(&purpose_s).ok_or_else(|| parse_err(row, "purpose", format!("unknown purpose `{purpose_s}`")))?;
        let flag = |n: &str| sheet.bool(rec, row, n);
        let label = match sheet.cell(rec, "bikeable") {
            None | Some("") => None,
            Some(_) => Some(sheet.bool(rec, row, "bikeable")?),
        };
        out.push(BikeabilityRecord {
            trip_id: sheet.str(rec, row, "trip_id")?,
            mode: sheet.mode(rec, row, "mode")?,
            time_h: minutes_to_hours(sheet.nonneg(rec, row, "time_min")?),
            purpose,
            full_time: flag("full_time")?,
            woman: flag("woman")?,
            older: flag("older")?,
            student: flag("student")?,
            higher_ed: flag("higher_ed")?,
            children: flag("children")?,
            harsh_winter: flag("harsh_winter")?,
            label,
            weight: sheet.opt_f64(rec, row, "weight")?.unwrap_or(1.0),
        });
    }
    Ok(out)
}

pub fn read_bikeability(path: &Path) -> Result<Vec<BikeabilityRecord>> {
    read_bikeability_from(File::open(path)?, &path.display().to_string())
}

/// Writes the input records with `prob` and `bikeable` columns appended.
pub fn write_classified_to<W: Write>(writer: W, records: &[BikeabilityRecord], scored: &[Classified]) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    let mut header = vec!["trip_id", "mode", "time_min", "purpose"];
    header.extend(BIKE_FLAGS);
    header.extend(["weight", "prob", "bikeable"]);
    w.write_record(&header)?;
    for (r, c) in records.iter().zip(scored) {
        let rec = vec![
            r.trip_id.clone(),
            r.mode.name().to_string(),
            fmt(r.time_h * 60.0),
            r.purpose.name().to_string(),
            b(r.full_time).into(),
            b(r.woman).into(),
            b(r.older).into(),
            b(r.student).into(),
            b(r.higher_ed).into(),
            b(r.children).into(),
            b(r.harsh_winter).into(),
            fmt(r.weight),
            fmt(c.prob),
            b(c.bikeable).into(),
        ];
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bikeability_to<W: Write>(writer: W, records: &[BikeabilityRecord]) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    let mut header = vec!["trip_id", "mode", "time_min", "purpose"];
    header.extend(BIKE_FLAGS);
    header.extend(["bikeable", "weight"]);
    w.write_record(&header)?;
    for r in records {
        w.write_record([
            r.trip_id.clone(),
            r.mode.name().to_string(),
            fmt(r.time_h * 60.0),
            r.purpose.name().to_string(),
            b(r.full_time).into(),
            b(r.woman).into(),
            b(r.older).into(),
            b(r.student).into(),
            b(r.higher_ed).into(),
            b(r.children).into(),
            b(r.harsh_winter).into(),
            r.label.map(|l| b(l).to_string()).unwrap_or_default(),
            fmt(r.weight),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `individual_id, weight` pairs.
pub fn read_weights_from<R: Read>(reader: R, source: &str) -> Result<Vec<(String, f64)>> {
    let sheet = Sheet::read(reader, source)?;
    sheet.require(&["individual_id", "weight"])?;
    sheet
        .rows
        .iter()
        .enumerate()
        .map(|(row, rec)| Ok((sheet.str(rec, row, "individual_id")?, sheet.nonneg(rec, row, "weight")?)))
        .collect()
}

pub fn read_weights(path: &Path) -> Result<Vec<(String, f64)>> {
    read_weights_from(File::open(path)?, &path.display().to_string())
}

pub fn write_weights_to<W: Write>(writer: W, ids: &[String], weights: &[f64]) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    w.write_record(["individual_id", "weight"])?;
    for (id, v) in ids.iter().zip(weights) {
        w.write_record([id.as_str(), &fmt(*v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_weights(path: &Path, ids: &[String], weights: &[f64]) -> Result<()> {
    write_weights_to(File::create(path)?, ids, weights)
}

/// Raking sample: an `individual_id` column plus one categorical column per variable.
pub fn read_sample_from<R: Read>(reader: R, source: &str) -> Result<Sample> {
    let sheet = Sheet::read(reader, source)?;
    sheet.require(&["individual_id"])?;
    let mut names: Vec<(usize, String)> = sheet
        .columns
        .iter()
        .filter(|(n, _)| n.as_str() != "individual_id")
        .map(|(n, i)| (*i, n.clone()))
        .collect();
    names.sort();
    let mut ids = Vec::with_capacity(sheet.rows.len());
    let mut columns: Vec<Vec<String>> = vec![Vec::with_capacity(sheet.rows.len()); names.len()];
    for (row, rec) in sheet.rows.iter().enumerate() {
        ids.push(sheet.str(rec, row, "individual_id")?);
        for (k, (_, n)) in names.iter().enumerate() {
            columns[k].push(sheet.str(rec, row, n)?);
        }
    }
    Sample::new(ids, names.into_iter().map(|(_, n)| n).zip(columns).collect())
}

pub fn read_sample(path: &Path) -> Result<Sample> {
    read_sample_from(File::open(path)?, &path.display().to_string())
}

pub fn write_sample_to<W: Write>(writer: W, sample: &Sample) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    let mut header = vec!["individual_id".to_string()];
    header.extend(sample.variables().iter().map(|(n, _)| n.clone()));
    w.write_record(&header)?;
    for (i, id) in sample.ids().iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(sample.variables().iter().map(|(_, c)| c[i].clone()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sample(path: &Path, sample: &Sample) -> Result<()> {
    write_sample_to(File::create(path)?, sample)
}

/// Loads a CSV for inspection of its header only.
pub fn csv_header(path: &Path) -> Result<Vec<String>> {
    Ok(Sheet::open(path)?.columns.into_iter().map(|(k, _)| k).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "individual_id,task_index,chosen,avail_walk,avail_bike,avail_car,avail_transit,avail_taxi,avail_ab,avail_abpt,walk_min,bike_min,car_min,transit_min,abpt_bike_min,abpt_total_min,distance_mi,taxi_wait_min,pt_short_wait,ab_cost_rate,ab_wait_min,I10,I11,high_income,low_income,full_time,higher_ed,children,car_owner,white,woman,older,young,student,hot_summer,harsh_winter,work_trip,leisure_trip,errands_trip";

    fn row(chosen: &str) -> String {
        format!("r1,1,{chosen},0,0,1,0,0,1,1,40,15,10,25,6,20,3,5,1,0.2,7,2,4,1,0,1,1,0,1,1,0,0,0,0,1,0,1,0,0")
    }

    #[test]
    fn reads_one_observation() {
        let text = format!("{HEADER}\n{}\n", row("ab"));
        let obs = read_observations_from(text.as_bytes(), "mem").unwrap();
        assert_eq!(obs.len(), 1);
        let o = &obs[0];
        assert_eq!(o.chosen, ModeId::AB);
        assert_eq!(o.original_mode(), Some(ModeId::Car));
        assert!((o.attributes.bike_time_h - 0.25).abs() < 1e-15);
        assert_eq!(o.indicators, Some([2, 4]));
        assert!(o.socio.work_trip && o.socio.high_income && !o.socio.woman);
        assert_eq!(o.weight, 1.0);
    }

    #[test]
    fn round_trip() {
        let text = format!("{HEADER}\n{}\n", row("car"));
        let obs = read_observations_from(text.as_bytes(), "mem").unwrap();
        let mut buf = Vec::new();
        write_observations_to(&mut buf, &obs).unwrap();
        let again = read_observations_from(buf.as_slice(), "mem").unwrap();
        assert_eq!(obs, again);
    }

    #[test]
    fn missing_column_is_named() {
        let header = HEADER.replace(",distance_mi", "");
        let text = format!("{header}\n");
        match read_observations_from(text.as_bytes(), "mem") {
            Err(Error::MissingColumn { column, .. }) => assert_eq!(column, "distance_mi"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_cell_reports_row_and_column() {
        let bad = row("ab").replacen(",40,", ",forty,", 1);
        let text = format!("{HEADER}\n{}\n{bad}\n", row("ab"));
        match read_observations_from(text.as_bytes(), "mem") {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "walk_min");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unavailable_choice_is_a_data_error() {
        let text = format!("{HEADER}\n{}\n", row("walk"));
        assert!(matches!(
            read_observations_from(text.as_bytes(), "mem"),
            Err(Error::Data { row: 0, .. })
        ));
    }

    #[test]
    fn transit_wait_column_sets_short_wait_flag() {
        let header = HEADER.replace("pt_short_wait", "transit_wait_min");
        let text = format!("{header}\n{}\n", row("ab").replacen(",3,5,1,", ",3,5,12,", 1));
        let obs = read_observations_from(text.as_bytes(), "mem").unwrap();
        assert!(!obs[0].attributes.pt_short_wait);
    }

    #[test]
    fn weights_round_trip() {
        let mut buf = Vec::new();
        write_weights_to(&mut buf, &["a".into(), "b".into()], &[1.5, 0.5]).unwrap();
        let w = read_weights_from(buf.as_slice(), "mem").unwrap();
        assert_eq!(w, vec![("a".to_string(), 1.5), ("b".to_string(), 0.5)]);
    }
}
