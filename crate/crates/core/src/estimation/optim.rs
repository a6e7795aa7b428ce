//! BFGS minimization with a strong-Wolfe line search.
//!
//! Close to a minimum the objective can stop resolving differences in double
//! precision before the gradient is small enough; the line search then falls
//! back to the approximate Wolfe test of Hager and Zhang, which only relies on
//! directional derivatives.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub gradient_tol: f64,
    pub max_iter: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            gradient_tol: 1e-5,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub message: String,
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LS: usize = 40;

struct Point {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
    dphi: f64,
}

struct LineSearch<'a, F> {
    fg: &'a mut F,
    x: &'a [f64],
    d: &'a [f64],
    f0: f64,
    dphi0: f64,
    evals: usize,
}

impl<F> LineSearch<'_, F>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    fn eval(&mut self, alpha: f64) -> Result<Point> {
        self.evals += 1;
        let xt: Vec<f64> = self.x.iter().zip(self.d).map(|(x, d)| x + alpha * d).collect();
        let (f, g) = (self.fg)(&xt)?;
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Ok(Point {
                alpha,
                f: f64::INFINITY,
                g,
                dphi: f64::NAN,
            });
        }
        let dphi = dot(&g, self.d);
        Ok(Point { alpha, f, g, dphi })
    }

    fn armijo(&self, p: &Point) -> bool {
        p.f <= self.f0 + C1 * p.alpha * self.dphi0
    }

    fn curvature(&self, p: &Point) -> bool {
        p.dphi.abs() <= -C2 * self.dphi0
    }

    /// Approximate Wolfe conditions (Hager–Zhang), valid when `f` is flat to rounding.
    fn approx_wolfe(&self, p: &Point) -> bool {
        let eps = 1e-10 * self.f0.abs().max(1.0);
        p.f.is_finite()
            && p.f <= self.f0 + eps
            && (2.0 * C1 - 1.0) * self.dphi0 >= p.dphi
            && p.dphi >= C2 * self.dphi0
    }

    fn accept(&self, p: &Point) -> bool {
        (self.armijo(p) && self.curvature(p)) || self.approx_wolfe(p)
    }

    fn search(&mut self, alpha0: f64) -> Result<Option<Point>> {
        let mut prev = Point {
            alpha: 0.0,
            f: self.f0,
            g: Vec::new(),
            dphi: self.dphi0,
        };
        let mut alpha = alpha0;
        for i in 0..MAX_LS {
            let p = self.eval(alpha)?;
            if !p.f.is_finite() || !self.armijo(&p) || (i > 0 && p.f >= prev.f) {
                if self.approx_wolfe(&p) {
                    return Ok(Some(p));
                }
                return self.zoom(prev, p);
            }
            if self.curvature(&p) {
                return Ok(Some(p));
            }
            if p.dphi >= 0.0 {
                return self.zoom(p, prev);
            }
            alpha *= 2.0;
            prev = p;
        }
        Ok(None)
    }

    fn zoom(&mut self, mut lo: Point, mut hi: Point) -> Result<Option<Point>> {
        let mut best: Option<Point> = None;
        for _ in 0..MAX_LS {
            let width = hi.alpha - lo.alpha;
            if width.abs() < 1e-16 * lo.alpha.abs().max(1.0) {
                break;
            }
            // safeguarded quadratic interpolation from lo's value and slope and hi's value
            let mut a = lo.alpha + 0.5 * width;
            if hi.f.is_finite() {
                let denom = 2.0 * (hi.f - lo.f - lo.dphi * width);
                if denom > 0.0 {
                    let cand = lo.alpha - lo.dphi * width * width / denom;
                    let (l, h) = if lo.alpha < hi.alpha {
                        (lo.alpha + 0.1 * width.abs(), hi.alpha - 0.1 * width.abs())
                    } else {
                        (hi.alpha + 0.1 * width.abs(), lo.alpha - 0.1 * width.abs())
                    };
                    if cand.is_finite() {
                        a = cand.clamp(l, h);
                    }
                }
            }
            let p = self.eval(a)?;
            if self.accept(&p) {
                return Ok(Some(p));
            }
            if !p.f.is_finite() || !self.armijo(&p) || p.f >= lo.f {
                hi = p;
            } else {
                if p.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = std::mem::replace(&mut lo, p);
                } else {
                    lo = p;
                }
                if best.as_ref().is_none_or(|b| lo.f < b.f) {
                    best = Some(Point {
                        alpha: lo.alpha,
                        f: lo.f,
                        g: lo.g.clone(),
                        dphi: lo.dphi,
                    });
                }
            }
        }
        // accept a sufficient-decrease point even without the curvature condition
        Ok(best.filter(|b| b.alpha > 0.0 && b.f < self.f0))
    }
}

/// Minimizes `f` given a closure returning `(f(x), ∇f(x))`.
pub fn bfgs<F>(mut fg: F, x0: &[f64], opts: &BfgsOptions) -> Result<BfgsOutcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g) = fg(&x)?;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("objective is not finite at the starting point"));
    }
    if n == 0 {
        return Ok(BfgsOutcome {
            x,
            f,
            gradient: g,
            iterations: 0,
            converged: true,
            message: "no free parameters".into(),
        });
    }
    let identity = |h: &mut Vec<f64>, scale: f64| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            h[i * n + i] = scale;
        }
    };
    let mut h = vec![0.0; n * n];
    identity(&mut h, 1.0);
    let mut fresh = true;
    let mut iterations = 0;
    let mut message = String::from("maximum iterations reached");
    let mut converged = false;

    while iterations < opts.max_iter {
        if inf_norm(&g) < opts.gradient_tol {
            converged = true;
            message = "gradient tolerance reached".into();
            break;
        }
        let mut d: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &g)).collect();
        let mut dphi0 = dot(&g, &d);
        if !(dphi0 < 0.0) {
            identity(&mut h, 1.0);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
            dphi0 = dot(&g, &d);
        }
        let alpha0 = if fresh {
            (1.0 / dot(&d, &d).sqrt()).min(1.0)
        } else {
            1.0
        };
        let mut ls = LineSearch {
            fg: &mut fg,
            x: &x,
            d: &d,
            f0: f,
            dphi0,
            evals: 0,
        };
        let found = ls.search(alpha0)?;
        let Some(p) = found else {
            if fresh {
                message = "line search failed".into();
                break;
            }
            identity(&mut h, 1.0);
            fresh = true;
            continue;
        };
        iterations += 1;
        let s: Vec<f64> = d.iter().map(|v| p.alpha * v).collect();
        let y: Vec<f64> = p.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += si;
        }
        f = p.f;
        g = p.g;
        let sy = dot(&s, &y);
        let yy = dot(&y, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * yy.sqrt() && sy > 0.0 {
            if fresh {
                identity(&mut h, sy / yy);
                fresh = false;
            }
            // H <- (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
    }
    if !converged && inf_norm(&g) < opts.gradient_tol {
        converged = true;
        message = "gradient tolerance reached".into();
    }
    Ok(BfgsOutcome {
        x,
        f,
        gradient: g,
        iterations,
        converged,
        message,
    })
}
