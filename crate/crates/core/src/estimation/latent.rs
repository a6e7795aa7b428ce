//! Latent attitude: structural equation, bounded utility effect and the
//! ordered-probit measurement model.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::erfc;

use crate::attributes::Sociodemographics;
use crate::error::{Error, Result};
use crate::params::names::*;
use crate::params::ParameterSet;

pub const N_LIKERT: u8 = 5;

#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// LV = coef_intercept + Σ coef_j z_j + σ_s ω.
pub fn structural_lv(socio: &Sociodemographics, params: &ParameterSet, omega: f64) -> Result<f64> {
    let mut lv = params.value(COEF_INTERCEPT)?;
    for (coef, flag) in STRUCTURAL {
        if socio.flag(flag).expect("known flag") {
            lv += params.value(coef)?;
        }
    }
    Ok(lv + params.value(SIGMA_S)? * omega)
}

/// Bounded effect of the latent attitude on the autonomous-bike utilities.
#[inline]
pub fn lv_effect(lv: f64, b_lv: f64) -> f64 {
    -b_lv * lv.tanh()
}

/// Thresholds (τ1..τ4) of the symmetric five-point scale.
#[inline]
pub fn thresholds(delta1: f64, delta2: f64) -> [f64; 4] {
    [-delta1 - delta2, -delta1, delta1, delta1 + delta2]
}

/// Φ(a) - Φ(b) for a ≥ b, evaluated in whichever tail keeps precision.
#[inline]
fn cdf_diff(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        norm_cdf(-b) - norm_cdf(-a)
    } else {
        norm_cdf(a) - norm_cdf(b)
    }
}

/// P(y = k | LV) for a Likert response `y` in 1..=5.
pub fn ordered_probit_prob(
    y: u8,
    lv: f64,
    loading: f64,
    intercept: f64,
    scale: f64,
    delta1: f64,
    delta2: f64,
) -> Result<f64> {
    if !(1..=N_LIKERT).contains(&y) {
        return Err(Error::domain(format!("Likert response {y} outside 1..=5")));
    }
    if !(scale > 0.0) {
        return Err(Error::domain("ordered probit scale must be positive"));
    }
    if !(delta1 > 0.0 && delta2 > 0.0) {
        return Err(Error::domain("threshold parameters must be positive"));
    }
    let (upper, lower) = bounds(y, lv, loading, intercept, scale, delta1, delta2);
    Ok(cdf_diff(upper, lower))
}

#[inline]
fn bounds(y: u8, lv: f64, loading: f64, intercept: f64, scale: f64, d1: f64, d2: f64) -> (f64, f64) {
    let tau = thresholds(d1, d2);
    let mean = intercept + loading * lv;
    let k = y as usize;
    let upper = if k == 5 { f64::INFINITY } else { (tau[k - 1] - mean) / scale };
    let lower = if k == 1 { f64::NEG_INFINITY } else { (tau[k - 2] - mean) / scale };
    (upper, lower)
}

/// Log-probability of a response and its partial derivatives.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct ProbitTerms {
    pub log_p: f64,
    pub d_lv: f64,
    pub d_loading: f64,
    pub d_intercept: f64,
    pub d_scale: f64,
    pub d_delta1: f64,
    pub d_delta2: f64,
}

/// ∂τ_k/∂(δ1, δ2) for k = 1..4.
const DTAU: [(f64, f64); 4] = [(-1.0, -1.0), (-1.0, 0.0), (1.0, 0.0), (1.0, 1.0)];

/// Smallest probability used inside a logarithm.
const P_FLOOR: f64 = 1e-300;

pub(crate) fn ordered_probit_terms(
    y: u8,
    lv: f64,
    loading: f64,
    intercept: f64,
    scale: f64,
    d1: f64,
    d2: f64,
) -> ProbitTerms {
    let (a, b) = bounds(y, lv, loading, intercept, scale, d1, d2);
    let p = cdf_diff(a, b).max(P_FLOOR);
    let k = y as usize;
    let fa = if a.is_finite() { norm_pdf(a) } else { 0.0 };
    let fb = if b.is_finite() { norm_pdf(b) } else { 0.0 };
    let za = if a.is_finite() { a } else { 0.0 };
    let zb = if b.is_finite() { b } else { 0.0 };
    // d a / d mean = -1/σ for both bounds
    let d_mean = -(fa - fb) / (scale * p);
    let d_scale = -(fa * za - fb * zb) / (scale * p);
    let (mut dd1, mut dd2) = (0.0, 0.0);
    if k < 5 {
        let (t1, t2) = DTAU[k - 1];
        dd1 += fa * t1 / (scale * p);
        dd2 += fa * t2 / (scale * p);
    }
    if k > 1 {
        let (t1, t2) = DTAU[k - 2];
        dd1 -= fb * t1 / (scale * p);
        dd2 -= fb * t2 / (scale * p);
    }
    ProbitTerms {
        log_p: p.ln(),
        d_lv: d_mean * loading,
        d_loading: d_mean * lv,
        d_intercept: d_mean,
        d_scale,
        d_delta1: dd1,
        d_delta2: dd2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structural_examples() {
        let p = ParameterSet::published_model3();
        let none = Sociodemographics::default();
        assert!((structural_lv(&none, &p, 0.0).unwrap() + 1.88).abs() < 1e-12);
        let woman = Sociodemographics {
            woman: true,
            ..Default::default()
        };
        assert!((structural_lv(&woman, &p, 0.0).unwrap() + 1.57).abs() < 1e-12);
        let mut p2 = p.clone();
        p2.set_value(SIGMA_S, 2.0).unwrap();
        assert!((structural_lv(&none, &p2, 1.0).unwrap() - 0.12).abs() < 1e-12);
    }

    #[test]
    fn lv_effect_examples() {
        assert_eq!(lv_effect(0.0, 1.59), 0.0);
        assert!((lv_effect(50.0, 1.59) + 1.59).abs() < 1e-12);
        assert!((lv_effect(1.0, 1.59) - (-1.59 * 1f64.tanh())).abs() < 1e-15);
        assert!((lv_effect(1.0, 1.59) + 1.2109).abs() < 1e-4);
    }

    #[test]
    fn probit_partition_and_table_value() {
        let p3 = ordered_probit_prob(3, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        // Φ(1) - Φ(-1)
        assert!((p3 - 0.682_689_492_137_086).abs() < 1e-12, "{p3:.17}");
        let total: f64 = (1..=5)
            .map(|y| ordered_probit_prob(y, 0.3, 0.9, 1.1, 1.7, 0.4, 0.8).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-14);
        let p1 = ordered_probit_prob(1, 0.0, 0.0, -40.0, 1.0, 1.0, 1.0).unwrap();
        assert!((p1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn probit_rejects_bad_parameters() {
        assert!(ordered_probit_prob(3, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(ordered_probit_prob(3, 0.0, 0.0, 0.0, 1.0, 1.0, -1.0).is_err());
        assert!(ordered_probit_prob(3, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(ordered_probit_prob(0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(ordered_probit_prob(6, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn probit_derivatives_match_differences() {
        let base = [0.4, -0.9, 0.7, 1.3, 0.6, 0.9];
        let f = |x: &[f64], y: u8| {
            ordered_probit_prob(y, x[0], x[1], x[2], x[3], x[4], x[5])
                .unwrap()
                .ln()
        };
        for y in 1..=5u8 {
            let t = ordered_probit_terms(y, base[0], base[1], base[2], base[3], base[4], base[5]);
            let analytic = [t.d_lv, t.d_loading, t.d_intercept, t.d_scale, t.d_delta1, t.d_delta2];
            for j in 0..6 {
                let h = 1e-6;
                let mut up = base;
                let mut dn = base;
                up[j] += h;
                dn[j] -= h;
                let fd = (f(&up, y) - f(&dn, y)) / (2.0 * h);
                assert!((fd - analytic[j]).abs() < 1e-6 * fd.abs().max(1.0), "y={y} j={j}: {fd} vs {}", analytic[j]);
            }
        }
    }
}
