//! Structural signatures: a two-component Gaussian mixture on off-diagonal
//! magnitudes picks a threshold, and entries above it form the edge set.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::WeightedGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmFit {
    /// Components ordered by increasing mean.
    pub weights: [f64; 2],
    pub means: [f64; 2],
    pub variances: [f64; 2],
    pub log_likelihood: f64,
    /// Log-likelihood before each M-step, then at the returned parameters.
    pub ll_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmmConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            max_iter: 500,
            tol: 1e-10,
            seed: 0,
        }
    }
}

fn log_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (x - mean).powi(2) / var)
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

struct Params {
    w: [f64; 2],
    mu: [f64; 2],
    var: [f64; 2],
}

/// E-step: responsibilities of component 1 and the log-likelihood.
fn e_step(values: &[f64], p: &Params) -> (Vec<f64>, f64) {
    let mut ll = 0.0;
    let resp = values
        .iter()
        .map(|&x| {
            let a = p.w[0].ln() + log_normal(x, p.mu[0], p.var[0]);
            let b = p.w[1].ln() + log_normal(x, p.mu[1], p.var[1]);
            let lse = log_sum_exp(a, b);
            ll += lse;
            (b - lse).exp()
        })
        .collect();
    (resp, ll)
}

/// Two-component EM. Initial means come from k-means++ seeding (first centre
/// uniform, second drawn with probability proportional to squared distance);
/// initial variances equal the sample variance and weights are 1/2.
/// Variances are floored at `1e−8·var(values)`.
pub fn fit_gmm_1d(values: &[f64], max_iter: usize, tol: f64, seed: u64) -> Result<GmmFit> {
    let n = values.len();
    if n < 4 {
        return Err(Error::InsufficientData(
            "GMM needs at least four values".into(),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if !(var > 0.0) {
        return Err(Error::invalid("GMM input has no spread"));
    }
    let floor = 1e-8 * var;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c0 = values[rng.random_range(0..n)];
    let d2: Vec<f64> = values.iter().map(|v| (v - c0).powi(2)).collect();
    let total: f64 = d2.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut c1 = values[n - 1];
    for (v, d) in values.iter().zip(&d2) {
        if u < *d {
            c1 = *v;
            break;
        }
        u -= d;
    }
    let mut p = Params {
        w: [0.5, 0.5],
        mu: [c0.min(c1), c0.max(c1)],
        var: [var, var],
    };

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let (mut resp, mut ll) = e_step(values, &p);
    trace.push(ll);
    while iterations < max_iter {
        iterations += 1;
        let n1: f64 = resp.iter().sum();
        let nk = [n as f64 - n1, n1];
        for (k, &mass) in nk.iter().enumerate() {
            let r = |i: usize| if k == 1 { resp[i] } else { 1.0 - resp[i] };
            if mass <= 0.0 {
                continue;
            }
            let mu = (0..n).map(|i| r(i) * values[i]).sum::<f64>() / mass;
            let v = (0..n).map(|i| r(i) * (values[i] - mu).powi(2)).sum::<f64>() / mass;
            p.mu[k] = mu;
            p.var[k] = v.max(floor);
            p.w[k] = (mass / n as f64).clamp(1e-300, 1.0);
        }
        let s = p.w[0] + p.w[1];
        p.w = [p.w[0] / s, p.w[1] / s];
        let (r2, ll2) = e_step(values, &p);
        trace.push(ll2);
        let change = (ll2 - ll).abs();
        resp = r2;
        let prev = ll;
        ll = ll2;
        if change <= tol * prev.abs().max(1e-300) {
            converged = true;
            break;
        }
    }
    let (w, mu, v) = if p.mu[0] <= p.mu[1] {
        (p.w, p.mu, p.var)
    } else {
        ([p.w[1], p.w[0]], [p.mu[1], p.mu[0]], [p.var[1], p.var[0]])
    };
    Ok(GmmFit {
        weights: w,
        means: mu,
        variances: v,
        log_likelihood: ll,
        ll_trace: trace,
        iterations,
        converged,
    })
}

/// Point between the means where the weighted component densities are
/// equal (the smallest such root). Without a root between the means the
/// real root nearest the midpoint is returned, and the midpoint itself when
/// the densities never cross.
pub fn gmm_threshold(fit: &GmmFit) -> Result<f64> {
    let ([w1, w2], [m1, m2], [v1, v2]) = (fit.weights, fit.means, fit.variances);
    if m1 == m2 {
        return Err(Error::invalid("GMM components have equal means"));
    }
    // f(x) = log(w1 N1) − log(w2 N2) = a x² + b x + c
    let a = 0.5 / v2 - 0.5 / v1;
    let b = m1 / v1 - m2 / v2;
    let c = -0.5 * m1 * m1 / v1 + 0.5 * m2 * m2 / v2 + w1.ln() - w2.ln() - 0.5 * v1.ln()
        + 0.5 * v2.ln();
    let roots: Vec<f64> = if a.abs() <= 1e-14 * (0.5 / v1).max(0.5 / v2) {
        if b == 0.0 {
            vec![]
        } else {
            vec![-c / b]
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            vec![]
        } else {
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            let mut r = vec![q / a];
            if q != 0.0 {
                r.push(c / q);
            }
            r
        }
    };
    let (lo, hi) = (m1.min(m2), m1.max(m2));
    let mid = 0.5 * (lo + hi);
    let inside = roots
        .iter()
        .copied()
        .filter(|&r| r > lo && r < hi)
        .fold(f64::INFINITY, f64::min);
    if inside.is_finite() {
        return Ok(inside);
    }
    Ok(roots
        .iter()
        .copied()
        .min_by(|x, y| (x - mid).abs().total_cmp(&(y - mid).abs()))
        .unwrap_or(mid))
}

/// `|F_ij|` for `i < j`, row by row.
pub fn off_diagonal_magnitudes(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(m[(i, j)].abs());
        }
    }
    out
}

/// Unit-weight graph with an edge wherever `|F_ij| ≥ threshold`, `i ≠ j`.
pub fn extract_signature(f: &DMatrix<f64>, threshold: f64) -> Result<WeightedGraph> {
    if !(threshold >= 0.0) {
        return Err(Error::invalid("threshold must be nonnegative"));
    }
    let n = f.nrows();
    if f.ncols() != n {
        return Err(Error::invalid("feature matrix must be square"));
    }
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if f[(i, j)].abs().max(f[(j, i)].abs()) >= threshold {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    WeightedGraph::new(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportMetrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    /// Fraction of off-diagonal pairs that disagree.
    pub hamming: f64,
}

pub fn support_recovery_metrics(
    est: &WeightedGraph,
    truth: &WeightedGraph,
) -> Result<SupportMetrics> {
    let n = truth.n();
    if est.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: est.n(),
        });
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for i in 0..n {
        for j in (i + 1)..n {
            match (est.has_edge(i, j), truth.has_edge(i, j)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
    }
    let precision = (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64);
    let recall = (tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    let pairs = n * n.saturating_sub(1) / 2;
    Ok(SupportMetrics {
        tp,
        fp,
        fn_,
        precision,
        recall,
        f1,
        hamming: if pairs == 0 {
            0.0
        } else {
            (fp + fn_) as f64 / pairs as f64
        },
    })
}

/// Whether signatures come from each class's mean feature matrix or from
/// every matrix separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignatureMode {
    #[default]
    ClassMean,
    PerMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    pub label: u8,
    /// `class-<label>-mean` or `feature-<index>`.
    pub source: String,
    pub n: usize,
    pub threshold: f64,
    pub gmm: GmmFit,
    /// `(i, j, |F_ij|)` for retained pairs, `i < j`.
    pub edges: Vec<(usize, usize, f64)>,
}

impl Signature {
    pub fn graph(&self) -> Result<WeightedGraph> {
        let e: Vec<(usize, usize, f64)> = self.edges.iter().map(|&(i, j, _)| (i, j, 1.0)).collect();
        WeightedGraph::from_edges(self.n, &e)
    }

    /// `src,dst,magnitude` rows with a header.
    pub fn edge_csv(&self) -> String {
        let mut out = String::from("src,dst,magnitude\n");
        for (i, j, w) in &self.edges {
            out.push_str(&format!("{i},{j},{w}\n"));
        }
        out
    }
}

/// Fits the mixture to the off-diagonal magnitudes of `f` and thresholds.
pub fn signature_of(
    f: &DMatrix<f64>,
    label: u8,
    source: String,
    cfg: &GmmConfig,
) -> Result<Signature> {
    let mags = off_diagonal_magnitudes(f);
    let gmm = fit_gmm_1d(&mags, cfg.max_iter, cfg.tol, cfg.seed)?;
    let threshold = gmm_threshold(&gmm)?;
    let g = extract_signature(f, threshold)?;
    let edges = g
        .edges()
        .into_iter()
        .map(|(i, j, _)| (i, j, f[(i, j)].abs()))
        .collect();
    Ok(Signature {
        label,
        source,
        n: f.nrows(),
        threshold,
        gmm,
        edges,
    })
}

pub fn class_signatures(
    features: &[FeatureMatrix],
    mode: SignatureMode,
    cfg: &GmmConfig,
) -> Result<Vec<Signature>> {
    match mode {
        SignatureMode::PerMatrix => features
            .iter()
            .enumerate()
            .map(|(i, f)| signature_of(f.matrix.matrix(), f.label, format!("feature-{i}"), cfg))
            .collect(),
        SignatureMode::ClassMean => {
            let mut out = Vec::new();
            for c in [0u8, 1] {
                let members: Vec<&FeatureMatrix> =
                    features.iter().filter(|f| f.label == c).collect();
                let Some(first) = members.first() else {
                    continue;
                };
                let mut mean = DMatrix::zeros(first.matrix.dim(), first.matrix.dim());
                for m in &members {
                    mean += m.matrix.matrix();
                }
                mean /= members.len() as f64;
                out.push(signature_of(&mean, c, format!("class-{c}-mean"), cfg)?);
            }
            Ok(out)
        }
    }
}
