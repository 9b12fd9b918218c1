//! Gauss–Jacobi rules on `[-1, 1]` with weight `(1 − x)^a (1 + x)^b`.
//!
//! Nodes start from the Golub–Welsch eigenvalues of the Jacobi matrix and are
//! polished by Newton's method on the three-term recurrence; weights come from
//! the closed form in terms of `P_n'`. Rules are cached per `(n, a, b)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Affine map of the rule from `[-1, 1]` onto `[lo, hi]` (weight function
    /// ignored; only valid for Legendre rules).
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

type Key = (usize, u64, u64);

fn cache() -> &'static Mutex<HashMap<Key, Arc<GaussRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<GaussRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub fn gauss_legendre(n: usize) -> Result<Arc<GaussRule>> {
    gauss_jacobi(n, 0.0, 0.0)
}

pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Result<Arc<GaussRule>> {
    if n == 0 {
        return Err(Error::invalid("quadrature needs at least one node"));
    }
    if !(a > -1.0 && b > -1.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid("Jacobi exponents must exceed -1"));
    }
    let key = (n, a.to_bits(), b.to_bits());
    if let Some(rule) = cache().lock().expect("quadrature cache").get(&key) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(build(n, a, b)?);
    cache()
        .lock()
        .expect("quadrature cache")
        .insert(key, rule.clone());
    Ok(rule)
}

fn build(n: usize, a: f64, b: f64) -> Result<GaussRule> {
    let ab = a + b;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jac[(k, k)] = diag;
        if k + 1 < n {
            let m = (k + 1) as f64;
            let s = 2.0 * m + ab;
            let off2 = if k == 0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * m * (m + a) * (m + b) * (m + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
            jac[(k, k + 1)] = off2.sqrt();
            jac[(k + 1, k)] = off2.sqrt();
        }
    }
    let mut nodes: Vec<f64> = jac.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(f64::total_cmp);

    let log_const = ln_gamma(n as f64 + a + 1.0) + ln_gamma(n as f64 + b + 1.0)
        - ln_gamma(n as f64 + ab + 1.0)
        - ln_gamma(n as f64 + 1.0)
        + (ab + 1.0) * std::f64::consts::LN_2;

    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..8 {
            let (p, dp) = jacobi_with_derivative(n, a, b, *x);
            let step = p / dp;
            *x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1e-300) {
                break;
            }
        }
        let (_, dp) = jacobi_with_derivative(n, a, b, *x);
        let w = (log_const - (1.0 - *x * *x).ln() - 2.0 * dp.abs().ln()).exp();
        if !w.is_finite() {
            return Err(Error::Numerical("non-finite Gauss-Jacobi weight".into()));
        }
        weights.push(w);
    }
    Ok(GaussRule { nodes, weights })
}

/// `P_n^{(a,b)}(x)` and its derivative via the three-term recurrence.
fn jacobi_with_derivative(n: usize, a: f64, b: f64, x: f64) -> (f64, f64) {
    let ab = a + b;
    let mut p_prev = 1.0;
    let mut p = 0.5 * (a - b) + 0.5 * (ab + 2.0) * x;
    if n == 1 {
        return (p, 0.5 * (ab + 2.0));
    }
    for k in 2..=n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        let c1 = 2.0 * kf * (kf + ab) * (s - 2.0);
        let c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
        let c3 = 2.0 * (kf + a - 1.0) * (kf + b - 1.0) * s;
        let next = (c2 * p - c3 * p_prev) / c1;
        p_prev = p;
        p = next;
    }
    let nf = n as f64;
    let s = 2.0 * nf + ab;
    let dp =
        (nf * ((a - b) - s * x) * p + 2.0 * (nf + a) * (nf + b) * p_prev) / (s * (1.0 - x * x));
    (p, dp)
}
