//! Multinomial logit choice kernel.

use crate::error::{Error, Result};
use crate::mode::{Availability, N_MODES};

/// Softmax over the entries flagged by `avail` (bit `i` = alternative `i`),
/// written into `out`. Returns the log of the normalizing sum after
/// max-subtraction together with the max, so `ln P_i = v_i - max - log_sum`.
#[inline]
pub(crate) fn softmax_masked(v: &[f64], avail: u8, out: &mut [f64]) -> (f64, f64) {
    let mut max = f64::NEG_INFINITY;
    for (i, x) in v.iter().enumerate() {
        if avail & (1 << i) != 0 && *x > max {
            max = *x;
        }
    }
    let mut sum = 0.0;
    for (i, x) in v.iter().enumerate() {
        if avail & (1 << i) != 0 {
            let e = (x - max).exp();
            out[i] = e;
            sum += e;
        } else {
            out[i] = 0.0;
        }
    }
    for (i, o) in out.iter_mut().enumerate().take(v.len()) {
        if avail & (1 << i) != 0 {
            *o /= sum;
        }
    }
    (max, sum.ln())
}

/// Choice probabilities over the available alternatives. Unavailable entries are exactly zero.
pub fn mnl_prob(utilities: &[f64; N_MODES], availability: Availability) -> Result<[f64; N_MODES]> {
    if availability.is_empty() {
        return Err(Error::domain("mnl_prob needs at least one available alternative"));
    }
    if availability.iter().any(|m| !utilities[m.index()].is_finite()) {
        return Err(Error::domain("available utilities must be finite"));
    }
    let mut out = [0.0; N_MODES];
    softmax_masked(utilities, availability.bits(), &mut out);
    Ok(out)
}

/// Same as [`mnl_prob`] with availability encoded by `None` entries.
pub fn mnl_prob_opt(utilities: &[Option<f64>; N_MODES]) -> Result<[f64; N_MODES]> {
    let mut avail = Availability::NONE;
    let mut v = [0.0; N_MODES];
    for (i, u) in utilities.iter().enumerate() {
        if let Some(x) = u {
            avail.insert(crate::mode::ModeId::from_index(i).expect("index < 7"));
            v[i] = *x;
        }
    }
    mnl_prob(&v, avail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode::ModeId;

    #[test]
    fn symmetric_pair() {
        let a = Availability::from_modes(&[ModeId::Car, ModeId::AB]);
        let p = mnl_prob(&[0.0; 7], a).unwrap();
        assert_eq!(p[ModeId::Car.index()], 0.5);
        assert_eq!(p[ModeId::AB.index()], 0.5);
        assert_eq!(p.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn analytic_softmax() {
        let a = Availability::from_modes(&[ModeId::Walk, ModeId::Bike]);
        let mut v = [0.0; 7];
        v[1] = 3f64.ln();
        let p = mnl_prob(&v, a).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15);
        assert!((p[1] - 0.75).abs() < 1e-15);
        assert!(p[2..].iter().all(|x| *x == 0.0));
    }

    #[test]
    fn extreme_magnitudes_do_not_overflow() {
        let a = Availability::sp_task(ModeId::Taxi);
        let p = mnl_prob(&[800.0; 7], a).unwrap();
        for m in a.iter() {
            assert!((p[m.index()] - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = mnl_prob(&[-800.0; 7], a).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_availability_is_domain_error() {
        assert!(matches!(mnl_prob(&[0.0; 7], Availability::NONE), Err(Error::Domain(_))));
    }
}
