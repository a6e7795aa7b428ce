//! Raking (iterative proportional fitting) of respondent weights to one-way margins.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Respondents with one categorical label per raking variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    ids: Vec<String>,
    variables: Vec<(String, Vec<String>)>,
}

impl Sample {
    pub fn new(ids: Vec<String>, variables: Vec<(String, Vec<String>)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (name, col) in &variables {
            if col.len() != ids.len() {
                return Err(Error::spec(format!("variable `{name}` has {} values for {} respondents", col.len(), ids.len())));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::spec(format!("duplicate variable `{name}`")));
            }
        }
        Ok(Sample { ids, variables })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn variables(&self) -> &[(String, Vec<String>)] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn column(&self, variable: &str) -> Option<&[String]> {
        self.variables
            .iter()
            .find(|(n, _)| n == variable)
            .map(|(_, c)| c.as_slice())
    }
}

const SUM_TOL: f64 = 1e-9;

/// Target proportions per variable. Variables are kept sorted by name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MarginTargets {
    variables: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Deserialize)]
struct TargetsFile {
    #[serde(default)]
    normalize: bool,
    #[serde(flatten)]
    variables: BTreeMap<String, BTreeMap<String, f64>>,
}

impl MarginTargets {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable whose proportions must sum to 1 within 1e-9.
    pub fn insert(&mut self, variable: &str, proportions: &[(&str, f64)]) -> Result<()> {
        let map: BTreeMap<String, f64> = proportions.iter().map(|(c, p)| (c.to_string(), *p)).collect();
        self.insert_map(variable, map, false)
    }

    /// Adds a variable after rescaling its proportions to sum to 1.
    pub fn insert_normalized(&mut self, variable: &str, proportions: &[(&str, f64)]) -> Result<()> {
        let map: BTreeMap<String, f64> = proportions.iter().map(|(c, p)| (c.to_string(), *p)).collect();
        self.insert_map(variable, map, true)
    }

    fn insert_map(&mut self, variable: &str, mut map: BTreeMap<String, f64>, normalize: bool) -> Result<()> {
        if map.is_empty() {
            return Err(Error::config(format!("variable `{variable}` has no categories")));
        }
        if map.values().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::config(format!("variable `{variable}` has a negative or non-finite target")));
        }
        let sum: f64 = map.values().sum();
        if normalize {
            if sum <= 0.0 {
                return Err(Error::config(format!("variable `{variable}` targets sum to zero")));
            }
            map.values_mut().for_each(|p| *p /= sum);
        } else if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::config(format!("targets of `{variable}` sum to {sum}, not 1")));
        }
        if self.variables.insert(variable.to_string(), map).is_some() {
            return Err(Error::config(format!("duplicate variable `{variable}`")));
        }
        Ok(())
    }

    /// Parses a TOML targets file: one table per variable of `category = proportion`.
    /// A top-level `normalize = true` rescales each variable to sum to 1.
    pub fn parse(text: &str) -> Result<Self> {
        let file: TargetsFile = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        let mut t = MarginTargets::new();
        for (var, cats) in file.variables {
            t.insert_map(&var, cats, file.normalize)?;
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn variables(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, f64>)> {
        self.variables.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn get(&self, variable: &str) -> Option<&BTreeMap<String, f64>> {
        self.variables.get(variable)
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }
}

/// Published one-way margins of bikeable reference trips, as printed
/// (rounded to three decimals, so some variables do not sum exactly to 1).
pub const BIKEABLE_REFERENCE_MARGINS: [(&str, &[(&str, f64)]); 8] = [
    ("purpose", &[("work", 0.327), ("leisure", 0.317), ("errands", 0.357)]),
    (
        "mode",
        &[("car", 0.134), ("walk", 0.012), ("bike", 0.785), ("transit", 0.060), ("taxi", 0.007)],
    ),
    ("sex", &[("male", 0.596), ("female", 0.404)]),
    ("young", &[("1", 0.391), ("0", 0.609)]),
    ("older", &[("1", 0.211), ("0", 0.789)]),
    ("higher_ed", &[("1", 0.310), ("0", 0.690)]),
    ("low_income", &[("1", 0.222), ("0", 0.778)]),
    ("high_income", &[("1", 0.518), ("0", 0.482)]),
];

/// The reference margins with each variable rescaled to sum to 1.
pub fn bikeable_reference_targets() -> MarginTargets {
    let mut t = MarginTargets::new();
    for (var, cats) in BIKEABLE_REFERENCE_MARGINS {
        t.insert_normalized(var, cats).expect("valid preset");
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IpfOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Cap weights at this percentile (e.g. 0.99) after fitting, then renormalize.
    pub trim_quantile: Option<f64>,
}

impl Default for IpfOptions {
    fn default() -> Self {
        IpfOptions {
            tol: 1e-6,
            max_iter: 200,
            trim_quantile: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpfResult {
    /// Mean-one weights aligned with the sample.
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub max_deviation: f64,
    /// Largest margin deviation before the first sweep and after each sweep.
    pub history: Vec<f64>,
}

struct Indexed {
    /// per variable: category index per respondent, targets per category
    codes: Vec<Vec<usize>>,
    targets: Vec<Vec<f64>>,
}

fn index_sample(sample: &Sample, targets: &MarginTargets) -> Result<Indexed> {
    let mut codes = Vec::new();
    let mut tvals = Vec::new();
    for (var, cats) in targets.variables() {
        let col = sample
            .column(var)
            .ok_or_else(|| Error::config(format!("sample has no variable `{var}`")))?;
        let names: Vec<&String> = cats.keys().collect();
        let mut counts = vec![0usize; names.len()];
        let mut code = Vec::with_capacity(col.len());
        for value in col {
            let k = names.iter().position(|n| *n == value).ok_or_else(|| {
                Error::config(format!("sample category `{value}` of `{var}` has no target"))
            })?;
            counts[k] += 1;
            code.push(k);
        }
        for (k, name) in names.iter().enumerate() {
            let t = cats[*name];
            if counts[k] == 0 && t > 0.0 {
                return Err(Error::Infeasible {
                    variable: var.to_string(),
                    category: name.to_string(),
                });
            }
            if counts[k] > 0 && t == 0.0 {
                return Err(Error::config(format!(
                    "category `{name}` of `{var}` has respondents but a zero target"
                )));
            }
        }
        codes.push(code);
        tvals.push(cats.values().copied().collect());
    }
    Ok(Indexed { codes, targets: tvals })
}

fn totals(codes: &[usize], n_cat: usize, w: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; n_cat];
    for (c, wi) in codes.iter().zip(w) {
        t[*c] += wi;
    }
    t
}

fn max_deviation(ix: &Indexed, w: &[f64]) -> f64 {
    let total: f64 = w.iter().sum();
    let mut worst: f64 = 0.0;
    for (codes, targets) in ix.codes.iter().zip(&ix.targets) {
        for (got, want) in totals(codes, targets.len(), w).iter().zip(targets) {
            worst = worst.max((got / total - want).abs());
        }
    }
    worst
}

fn normalize_mean_one(w: &mut [f64]) {
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    w.iter_mut().for_each(|v| *v /= mean);
}

/// Rakes unit starting weights until every weighted margin is within `tol` of its target.
pub fn ipf_fit(sample: &Sample, targets: &MarginTargets, options: &IpfOptions) -> Result<IpfResult> {
    if sample.is_empty() {
        return Err(Error::data(0, "empty sample"));
    }
    if !(options.tol > 0.0) || options.max_iter == 0 {
        return Err(Error::config("IPF needs tol > 0 and max_iter > 0"));
    }
    if let Some(q) = options.trim_quantile {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::config("trim quantile must lie in (0, 1)"));
        }
    }
    let ix = index_sample(sample, targets)?;
    let n = sample.len();
    let mut w = vec![1.0; n];
    let mut history = vec![max_deviation(&ix, &w)];
    let mut iterations = 0;
    let mut converged = history[0] < options.tol;
    while !converged && iterations < options.max_iter {
        for (codes, tv) in ix.codes.iter().zip(&ix.targets) {
            let total: f64 = w.iter().sum();
            let got = totals(codes, tv.len(), &w);
            let factors: Vec<f64> = got
                .iter()
                .zip(tv)
                .map(|(g, t)| if *g > 0.0 { t * total / g } else { 1.0 })
                .collect();
            for (wi, c) in w.iter_mut().zip(codes) {
                *wi *= factors[*c];
            }
        }
        normalize_mean_one(&mut w);
        iterations += 1;
        let dev = max_deviation(&ix, &w);
        history.push(dev);
        converged = dev < options.tol;
    }
    normalize_mean_one(&mut w);
    if let Some(q) = options.trim_quantile {
        let mut sorted = w.clone();
        sorted.sort_by(f64::total_cmp);
        let pos = ((n - 1) as f64 * q).round() as usize;
        let cap = sorted[pos];
        w.iter_mut().for_each(|v| *v = v.min(cap));
        normalize_mean_one(&mut w);
    }
    let max_dev = max_deviation(&ix, &w);
    Ok(IpfResult {
        weights: w,
        iterations,
        converged: converged && max_dev < options.tol,
        max_deviation: max_dev,
        history,
    })
}

/// Weighted share of each category of `variable`, sorted by category.
pub fn weighted_proportions(sample: &Sample, weights: &[f64], variable: &str) -> Result<Vec<(String, f64)>> {
    if weights.len() != sample.len() {
        return Err(Error::spec("weights are not aligned with the sample"));
    }
    let col = sample
        .column(variable)
        .ok_or_else(|| Error::spec(format!("sample has no variable `{variable}`")))?;
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::domain("weights sum to zero"));
    }
    let mut acc: BTreeMap<&str, f64> = BTreeMap::new();
    for (c, w) in col.iter().zip(weights) {
        *acc.entry(c.as_str()).or_default() += w;
    }
    Ok(acc.into_iter().map(|(c, w)| (c.to_string(), w / total)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMargin {
    pub category: String,
    pub target: f64,
    pub achieved: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginDeviation {
    pub variable: String,
    pub max_abs_deviation: f64,
    pub categories: Vec<CategoryMargin>,
}

/// Achieved versus target share for every targeted category.
pub fn margin_report(sample: &Sample, weights: &[f64], targets: &MarginTargets) -> Result<Vec<MarginDeviation>> {
    let mut out = Vec::new();
    for (var, cats) in targets.variables() {
        let props: BTreeMap<String, f64> = weighted_proportions(sample, weights, var)?.into_iter().collect();
        let mut categories = Vec::new();
        let mut worst: f64 = 0.0;
        let all: BTreeSet<&String> = cats.keys().chain(props.keys()).collect();
        for c in all {
            let target = cats.get(c).copied().unwrap_or(0.0);
            let achieved = props.get(c).copied().unwrap_or(0.0);
            worst = worst.max((achieved - target).abs());
            categories.push(CategoryMargin {
                category: c.clone(),
                target,
                achieved,
            });
        }
        out.push(MarginDeviation {
            variable: var.to_string(),
            max_abs_deviation: worst,
            categories,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> (Sample, MarginTargets) {
        let s = Sample::new(
            vec!["1".into(), "2".into(), "3".into(), "4".into()],
            vec![
                ("v1".into(), vec!["A".into(), "A".into(), "B".into(), "B".into()]),
                ("v2".into(), vec!["X".into(), "Y".into(), "X".into(), "Y".into()]),
            ],
        )
        .unwrap();
        let mut t = MarginTargets::new();
        t.insert("v1", &[("A", 0.75), ("B", 0.25)]).unwrap();
        t.insert("v2", &[("X", 0.5), ("Y", 0.5)]).unwrap();
        (s, t)
    }

    #[test]
    fn hand_derived_example() {
        let (s, t) = two_by_two();
        let r = ipf_fit(&s, &t, &IpfOptions::default()).unwrap();
        assert_eq!(r.weights, vec![1.5, 1.5, 0.5, 0.5]);
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert!(r.history[0] > r.history[1]);
    }

    #[test]
    fn fixed_point() {
        let (s, _) = two_by_two();
        let mut t = MarginTargets::new();
        t.insert("v1", &[("A", 0.5), ("B", 0.5)]).unwrap();
        t.insert("v2", &[("X", 0.5), ("Y", 0.5)]).unwrap();
        let r = ipf_fit(&s, &t, &IpfOptions::default()).unwrap();
        assert_eq!(r.weights, vec![1.0; 4]);
    }

    #[test]
    fn empty_cell_is_infeasible() {
        let (s, _) = two_by_two();
        let mut t = MarginTargets::new();
        t.insert("v1", &[("A", 0.5), ("B", 0.25), ("C", 0.25)]).unwrap();
        match ipf_fit(&s, &t, &IpfOptions::default()) {
            Err(Error::Infeasible { variable, category }) => {
                assert_eq!(variable, "v1");
                assert_eq!(category, "C");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn targets_must_sum_to_one() {
        let mut t = MarginTargets::new();
        assert!(t.insert("m", &[("a", 0.5), ("b", 0.49)]).is_err());
        let parsed = MarginTargets::parse("normalize = true\n[m]\na = 0.5\nb = 0.49\n").unwrap();
        let m = parsed.get("m").unwrap();
        assert!((m["a"] + m["b"] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn report_before_fitting() {
        let (s, t) = two_by_two();
        let rep = margin_report(&s, &[1.0; 4], &t).unwrap();
        assert!((rep[0].max_abs_deviation - 0.25).abs() < 1e-15);
        assert_eq!(rep[1].max_abs_deviation, 0.0);
    }

    #[test]
    fn reference_margins_are_normalized() {
        let t = bikeable_reference_targets();
        assert_eq!(t.len(), 8);
        for (_, cats) in t.variables() {
            assert!((cats.values().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
