//! Named model parameters with fixed/free flags.
//!
//! Parameters whose role is [`Role::Sd`], [`Role::Scale`] or [`Role::Threshold`]
//! are strictly positive; the optimizer works with their logarithm.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Asc,
    Beta,
    Sd,
    Structural,
    Loading,
    Intercept,
    Scale,
    Threshold,
}

impl Role {
    pub fn is_positive(self) -> bool {
        matches!(self, Role::Sd | Role::Scale | Role::Threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub value: f64,
    pub fixed: bool,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robust_se: Option<f64>,
}

impl Parameter {
    pub fn free(name: &str, value: f64, role: Role) -> Self {
        Parameter {
            name: name.to_string(),
            value,
            fixed: false,
            role,
            robust_se: None,
        }
    }

    pub fn fixed(name: &str, value: f64, role: Role) -> Self {
        Parameter {
            fixed: true,
            ..Parameter::free(name, value, role)
        }
    }

    /// Value in the optimizer's unconstrained space.
    pub fn working_value(&self) -> f64 {
        if self.role.is_positive() {
            self.value.ln()
        } else {
            self.value
        }
    }

    /// d(value)/d(working value).
    pub fn working_jacobian(&self) -> f64 {
        if self.role.is_positive() {
            self.value
        } else {
            1.0
        }
    }
}

/// Ordered, uniquely named parameter collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Parameter>", into = "Vec<Parameter>")]
pub struct ParameterSet {
    params: Vec<Parameter>,
    index: HashMap<String, usize>,
}

impl TryFrom<Vec<Parameter>> for ParameterSet {
    type Error = Error;

    fn try_from(params: Vec<Parameter>) -> Result<Self> {
        let mut set = ParameterSet::default();
        for p in params {
            set.push(p)?;
        }
        Ok(set)
    }
}

impl From<ParameterSet> for Vec<Parameter> {
    fn from(set: ParameterSet) -> Self {
        set.params
    }
}

impl Default for ParameterSet {
    fn default() -> Self {
        ParameterSet {
            params: Vec::new(),
            index: HashMap::new(),
        }
    }
}

impl ParameterSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, p: Parameter) -> Result<()> {
        if self.index.contains_key(&p.name) {
            return Err(Error::spec(format!("duplicate parameter `{}`", p.name)));
        }
        if !p.value.is_finite() {
            return Err(Error::spec(format!("parameter `{}` has non-finite value", p.name)));
        }
        if p.role.is_positive() && p.value < 0.0 {
            return Err(Error::spec(format!("parameter `{}` must be nonnegative", p.name)));
        }
        if p.role.is_positive() && !p.fixed && p.value <= 0.0 {
            return Err(Error::spec(format!("free parameter `{}` must be strictly positive", p.name)));
        }
        self.index.insert(p.name.clone(), self.params.len());
        self.params.push(p);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Parameter> {
        self.params.iter()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::spec(format!("missing parameter `{name}`")))
    }

    pub fn get(&self, name: &str) -> Option<&Parameter> {
        self.index_of(name).map(|i| &self.params[i])
    }

    pub fn value(&self, name: &str) -> Result<f64> {
        Ok(self.params[self.require(name)?].value)
    }

    pub fn param(&self, i: usize) -> &Parameter {
        &self.params[i]
    }

    pub fn set_value(&mut self, name: &str, value: f64) -> Result<()> {
        let i = self.require(name)?;
        let p = &mut self.params[i];
        if !value.is_finite() || (p.role.is_positive() && value < 0.0) {
            return Err(Error::spec(format!("invalid value {value} for `{name}`")));
        }
        p.value = value;
        Ok(())
    }

    pub fn fix(&mut self, name: &str, value: f64) -> Result<()> {
        self.set_value(name, value)?;
        let i = self.require(name)?;
        self.params[i].fixed = true;
        Ok(())
    }

    pub fn free(&mut self, name: &str) -> Result<()> {
        let i = self.require(name)?;
        let p = &mut self.params[i];
        if p.role.is_positive() && p.value <= 0.0 {
            return Err(Error::spec(format!("cannot free `{name}` at a non-positive value")));
        }
        p.fixed = false;
        Ok(())
    }

    /// Fixes every parameter (used when a set is loaded as pure input).
    pub fn fix_all(&mut self) {
        for p in &mut self.params {
            p.fixed = true;
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.value).collect()
    }

    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.params.len()).filter(|i| !self.params[*i].fixed).collect()
    }

    pub fn n_free(&self) -> usize {
        self.params.iter().filter(|p| !p.fixed).count()
    }

    pub fn working_vector(&self) -> Vec<f64> {
        self.params
            .iter()
            .filter(|p| !p.fixed)
            .map(Parameter::working_value)
            .collect()
    }

    /// Natural-space values with the free entries replaced from a working vector.
    pub fn values_from_working(&self, working: &[f64]) -> Vec<f64> {
        let mut out = self.values();
        let mut k = 0;
        for (i, p) in self.params.iter().enumerate() {
            if p.fixed {
                continue;
            }
            out[i] = if p.role.is_positive() {
                working[k].exp()
            } else {
                working[k]
            };
            k += 1;
        }
        out
    }

    pub fn set_values(&mut self, values: &[f64]) {
        for (p, v) in self.params.iter_mut().zip(values) {
            p.value = *v;
        }
    }

    pub fn set_robust_se(&mut self, i: usize, se: Option<f64>) {
        self.params[i].robust_se = se;
    }

    /// Returns a copy with every value multiplied by `alpha`. Positive-role
    /// parameters are scaled by `|alpha|`.
    pub fn scaled(&self, alpha: f64) -> ParameterSet {
        let mut out = self.clone();
        for p in &mut out.params {
            p.value *= if p.role.is_positive() { alpha.abs() } else { alpha };
        }
        out
    }
}

/// Parameter names used by the seven utility functions and the latent-variable model.
pub mod names {
    pub const ASC_WALK: &str = "ASC_walk";
    pub const ASC_BIKE: &str = "ASC_bike";
    pub const ASC_CAR: &str = "ASC_car";
    pub const ASC_PT: &str = "ASC_pt";
    pub const ASC_TAXI: &str = "ASC_taxi";
    pub const ASC_AB: &str = "ASC_ab";
    pub const ASC_ABPT: &str = "ASC_abpt";

    pub const B_ACTIVETIME: &str = "B_activetime";
    pub const B_CAROWNER: &str = "B_carowner";
    pub const B_CHILDREN: &str = "B_children";
    pub const B_COST: &str = "B_cost";
    pub const B_ERRANDS: &str = "B_errands";
    pub const B_FULLTIME: &str = "B_fulltime";
    pub const B_HIGHER_ED: &str = "B_higher_ed";
    pub const B_HIGHINCOME: &str = "B_highincome";
    pub const B_HOTSUMMER: &str = "B_hotsummer";
    pub const B_LEISURE: &str = "B_leisure";
    pub const B_OLDER: &str = "B_older";
    pub const B_PTSHORTWAIT: &str = "B_ptshortwait";
    pub const B_TIME: &str = "B_time";
    pub const B_WAIT: &str = "B_wait";
    pub const B_WHITE: &str = "B_white";
    pub const B_WORK: &str = "B_work";

    pub const ASC_AB_SD: &str = "ASC_ab_sd";
    pub const ASC_ABPT_SD: &str = "ASC_abpt_sd";
    pub const B_COST_SD: &str = "B_cost_sd";
    pub const B_ACTIVETIME_SD: &str = "B_activetime_sd";

    pub const B_LV: &str = "B_lv";
    pub const COEF_INTERCEPT: &str = "coef_intercept";
    pub const COEF_CHILDREN: &str = "coef_children";
    pub const COEF_HIGHER_ED: &str = "coef_higher_ed";
    pub const COEF_HIGHINCOME: &str = "coef_highincome";
    pub const COEF_HOTSUMMER: &str = "coef_hotsummer";
    pub const COEF_WHITE: &str = "coef_white";
    pub const COEF_WOMAN: &str = "coef_woman";
    pub const COEF_YOUNG: &str = "coef_young";
    pub const SIGMA_S: &str = "sigma_s";

    pub const B_I10: &str = "B_I10";
    pub const INTER_I10: &str = "INTER_I10";
    pub const SIGMA_I10: &str = "SIGMA_I10";
    pub const B_I11: &str = "B_I11";
    pub const INTER_I11: &str = "INTER_I11";
    pub const SIGMA_I11: &str = "SIGMA_I11";
    pub const DELTA_1: &str = "delta_1";
    pub const DELTA_2: &str = "delta_2";

    pub const ASCS: [&str; 7] = [ASC_WALK, ASC_BIKE, ASC_CAR, ASC_PT, ASC_TAXI, ASC_AB, ASC_ABPT];

    pub const BETAS: [&str; 16] = [
        B_ACTIVETIME,
        B_CAROWNER,
        B_CHILDREN,
        B_COST,
        B_ERRANDS,
        B_FULLTIME,
        B_HIGHER_ED,
        B_HIGHINCOME,
        B_HOTSUMMER,
        B_LEISURE,
        B_OLDER,
        B_PTSHORTWAIT,
        B_TIME,
        B_WAIT,
        B_WHITE,
        B_WORK,
    ];

    /// Coefficients that only enter the final (hybrid) specification.
    pub const MODEL3_ONLY_BETAS: [&str; 4] = [B_ERRANDS, B_HIGHINCOME, B_HOTSUMMER, B_PTSHORTWAIT];

    /// (mean, sd) pairs of the mixed-logit random coefficients.
    pub const RANDOM_COEFFICIENTS: [(&str, &str); 4] = [
        (ASC_AB, ASC_AB_SD),
        (ASC_ABPT, ASC_ABPT_SD),
        (B_COST, B_COST_SD),
        (B_ACTIVETIME, B_ACTIVETIME_SD),
    ];

    /// Structural-equation regressors and the sociodemographic flag each one reads.
    pub const STRUCTURAL: [(&str, &str); 7] = [
        (COEF_CHILDREN, "children"),
        (COEF_HIGHER_ED, "higher_ed"),
        (COEF_HIGHINCOME, "high_income"),
        (COEF_HOTSUMMER, "hot_summer"),
        (COEF_WHITE, "white"),
        (COEF_WOMAN, "woman"),
        (COEF_YOUNG, "young"),
    ];
}

use names::*;

const MODEL1: [(&str, f64); 18] = [
    (ASC_AB, 0.983),
    (ASC_ABPT, -0.106),
    (ASC_BIKE, 0.84),
    (ASC_PT, -1.03),
    (ASC_TAXI, -0.594),
    (ASC_WALK, 1.23),
    (B_ACTIVETIME, -4.35),
    (B_CAROWNER, 0.152),
    (B_CHILDREN, 0.555),
    (B_COST, -1.13),
    (B_FULLTIME, 0.346),
    (B_HIGHER_ED, 0.259),
    (B_LEISURE, 0.191),
    (B_OLDER, 0.822),
    (B_TIME, -1.79),
    (B_WAIT, -3.31),
    (B_WHITE, 0.491),
    (B_WORK, 0.385),
];

const MODEL2: [(&str, f64); 22] = [
    (ASC_AB, 4.12),
    (ASC_AB_SD, 4.8),
    (ASC_ABPT, -1.33),
    (ASC_ABPT_SD, 7.18),
    (ASC_BIKE, 3.05),
    (ASC_PT, -2.73),
    (ASC_TAXI, -0.161),
    (ASC_WALK, 3.57),
    (B_ACTIVETIME, -18.9),
    (B_ACTIVETIME_SD, 10.8),
    (B_CAROWNER, 0.874),
    (B_CHILDREN, 0.978),
    (B_COST, -7.95),
    (B_COST_SD, 6.13),
    (B_FULLTIME, 0.432),
    (B_HIGHER_ED, 0.71),
    (B_LEISURE, 0.806),
    (B_OLDER, 3.04),
    (B_TIME, -6.52),
    (B_WAIT, -9.52),
    (B_WHITE, 1.56),
    (B_WORK, 0.599),
];

const MODEL3_CHOICE: [(&str, f64); 23] = [
    (ASC_AB, 0.712),
    (ASC_ABPT, -0.695),
    (ASC_BIKE, 1.6),
    (ASC_PT, -0.785),
    (ASC_TAXI, 0.591),
    (ASC_WALK, 1.87),
    (B_ACTIVETIME, -4.64),
    (B_CAROWNER, 0.124),
    (B_CHILDREN, 0.328),
    (B_COST, -1.17),
    (B_ERRANDS, 0.36),
    (B_FULLTIME, 0.315),
    (B_HIGHER_ED, 0.22),
    (B_HIGHINCOME, -0.0873),
    (B_HOTSUMMER, 0.284),
    (B_LEISURE, 0.0353),
    (B_OLDER, 0.878),
    (B_PTSHORTWAIT, 0.374),
    (B_TIME, -1.84),
    (B_WAIT, -3.75),
    (B_WHITE, 0.477),
    (B_WORK, 0.363),
    (B_LV, 1.59),
];

const MODEL3_STRUCTURAL: [(&str, f64); 8] = [
    (COEF_CHILDREN, -0.494),
    (COEF_HIGHER_ED, 0.395),
    (COEF_HIGHINCOME, -0.198),
    (COEF_HOTSUMMER, -0.517),
    (COEF_INTERCEPT, -1.88),
    (COEF_WHITE, 0.271),
    (COEF_WOMAN, 0.31),
    (COEF_YOUNG, 0.0372),
];

const MODEL3_MEASUREMENT: [(&str, f64); 3] = [(B_I11, 0.934), (INTER_I11, 1.17), (SIGMA_I11, 1.75)];

/// Starting value of a positive parameter: 0.5 in log space.
pub fn positive_start() -> f64 {
    0.5f64.exp()
}

impl ParameterSet {
    /// Utility coefficients of the baseline specification. Coefficients that
    /// only appear in the hybrid model are present but fixed at zero.
    pub fn mnl_start() -> Self {
        let mut set = ParameterSet::new();
        for name in ASCS {
            let p = if name == ASC_CAR {
                Parameter::fixed(name, 0.0, Role::Asc)
            } else {
                Parameter::free(name, 0.0, Role::Asc)
            };
            set.push(p).expect("unique preset names");
        }
        for name in BETAS {
            let p = if MODEL3_ONLY_BETAS.contains(&name) {
                Parameter::fixed(name, 0.0, Role::Beta)
            } else {
                Parameter::free(name, 0.0, Role::Beta)
            };
            set.push(p).expect("unique preset names");
        }
        set
    }

    /// Baseline layout plus normally distributed ASC_ab, ASC_abpt, B_cost and B_activetime.
    pub fn mixl_start() -> Self {
        let mut set = Self::mnl_start();
        for (_, sd) in RANDOM_COEFFICIENTS {
            set.push(Parameter::free(sd, positive_start(), Role::Sd))
                .expect("unique preset names");
        }
        set
    }

    /// Full hybrid-choice layout: 23 utility coefficients, structural equation
    /// and ordered-probit measurement model with I10 as reference indicator.
    /// With `estimate_sigma_s` the structural error sd is free (37 free
    /// parameters); otherwise it is fixed at 1 (36).
    pub fn hcm_start(estimate_sigma_s: bool) -> Self {
        let mut set = ParameterSet::new();
        for name in ASCS {
            let p = if name == ASC_CAR {
                Parameter::fixed(name, 0.0, Role::Asc)
            } else {
                Parameter::free(name, 0.0, Role::Asc)
            };
            set.push(p).expect("unique preset names");
        }
        for name in BETAS {
            set.push(Parameter::free(name, 0.0, Role::Beta)).expect("unique preset names");
        }
        set.push(Parameter::free(B_LV, 0.0, Role::Beta)).expect("unique");
        set.push(Parameter::free(COEF_INTERCEPT, 0.0, Role::Structural)).expect("unique");
        for (name, _) in STRUCTURAL {
            set.push(Parameter::free(name, 0.0, Role::Structural)).expect("unique");
        }
        let sigma_s = if estimate_sigma_s {
            Parameter::free(SIGMA_S, 1.0, Role::Scale)
        } else {
            Parameter::fixed(SIGMA_S, 1.0, Role::Scale)
        };
        set.push(sigma_s).expect("unique");
        set.push(Parameter::fixed(B_I10, -1.0, Role::Loading)).expect("unique");
        set.push(Parameter::fixed(INTER_I10, 0.0, Role::Intercept)).expect("unique");
        set.push(Parameter::fixed(SIGMA_I10, 1.0, Role::Scale)).expect("unique");
        set.push(Parameter::free(B_I11, 0.0, Role::Loading)).expect("unique");
        set.push(Parameter::free(INTER_I11, 0.0, Role::Intercept)).expect("unique");
        set.push(Parameter::free(SIGMA_I11, positive_start(), Role::Scale)).expect("unique");
        set.push(Parameter::free(DELTA_1, positive_start(), Role::Threshold)).expect("unique");
        set.push(Parameter::free(DELTA_2, positive_start(), Role::Threshold)).expect("unique");
        set
    }

    /// Published baseline-logit estimates.
    pub fn published_model1() -> Self {
        let mut set = Self::mnl_start();
        for (name, v) in MODEL1 {
            set.set_value(name, v).expect("preset name");
        }
        set
    }

    /// Published mixed-logit estimates.
    pub fn published_model2() -> Self {
        let mut set = Self::mixl_start();
        for (name, v) in MODEL2 {
            set.set_value(name, v).expect("preset name");
        }
        set
    }

    /// Published hybrid-model estimates (choice, structural and measurement parts).
    /// The structural error sd and the two threshold parameters are not
    /// reported; they are left at 1.
    pub fn published_model3() -> Self {
        let mut set = Self::hcm_start(true);
        for (name, v) in MODEL3_CHOICE
            .iter()
            .chain(MODEL3_STRUCTURAL.iter())
            .chain(MODEL3_MEASUREMENT.iter())
        {
            set.set_value(name, *v).expect("preset name");
        }
        set.set_value(DELTA_1, 1.0).expect("preset name");
        set.set_value(DELTA_2, 1.0).expect("preset name");
        set
    }

    /// Looks up a named preset: `model1`..`model3` (published values) or
    /// `mnl`/`mixl`/`hcm` (starting layouts).
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "mnl" => Ok(Self::mnl_start()),
            "mixl" => Ok(Self::mixl_start()),
            "hcm" => Ok(Self::hcm_start(true)),
            "model1" => Ok(Self::published_model1()),
            "model2" => Ok(Self::published_model2()),
            "model3" => Ok(Self::published_model3()),
            other => Err(Error::config(format!("unknown parameter preset `{other}`"))),
        }
    }
}
