//! Central finite differences.

use crate::params::ParameterSet;

/// Default relative step.
pub const DEFAULT_STEP: f64 = 1e-6;

fn step(h: f64, x: f64) -> f64 {
    h * x.abs().max(1.0)
}

/// Central-difference gradient of `f` at `x` with relative step `h`.
pub fn numeric_gradient<F>(f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let hi = step(h, x[i]);
            probe[i] = x[i] + hi;
            let up = f(&probe);
            probe[i] = x[i] - hi;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * hi)
        })
        .collect()
}

/// Central-difference gradient of a function of the full natural-space
/// parameter vector, taken with respect to the free parameters of `params`.
pub fn numeric_gradient_free<F>(f: F, params: &ParameterSet, h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let base = params.values();
    let free = params.free_indices();
    let sub: Vec<f64> = free.iter().map(|i| base[*i]).collect();
    numeric_gradient(
        |y| {
            let mut full = base.clone();
            for (k, i) in free.iter().enumerate() {
                full[*i] = y[k];
            }
            f(&full)
        },
        &sub,
        h,
    )
}

/// Symmetrized Jacobian of a gradient function, i.e. a Hessian from first derivatives.
/// Returned row-major, `n × n`.
pub fn hessian_from_gradient<G>(g: G, x: &[f64], h: f64) -> Vec<f64>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let mut out = vec![0.0; n * n];
    let mut probe = x.to_vec();
    for j in 0..n {
        let hj = step(h, x[j]);
        probe[j] = x[j] + hj;
        let up = g(&probe);
        probe[j] = x[j] - hj;
        let down = g(&probe);
        probe[j] = x[j];
        for i in 0..n {
            out[i * n + j] = (up[i] - down[i]) / (2.0 * hj);
        }
    }
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (out[i * n + j] + out[j * n + i]);
            out[i * n + j] = m;
            out[j * n + i] = m;
        }
    }
    out
}
