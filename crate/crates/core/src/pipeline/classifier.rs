use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub l2: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            l2: 1e-2,
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::invalid("l2 must be finite and nonnegative"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol must be positive"));
        }
        Ok(())
    }
}

/// Upper triangle including the diagonal, row by row, with off-diagonal
/// entries scaled by `√2` so dot products equal Frobenius inner products.
pub fn vectorize(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        out.push(m[(i, i)]);
        for j in (i + 1)..n {
            out.push(SQRT_2 * m[(i, j)]);
        }
    }
    out
}

/// Logistic model on standardized vectorized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Split tokens of every set the model (or its selection) has seen.
    pub seen_tokens: Vec<String>,
}

impl LinearClassifier {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .zip(&self.weights)
            .map(|(((v, m), s), w)| w * (v - m) / s)
            .sum::<f64>()
            + self.bias)
    }

    /// Class 1 when the decision value is `≥ 0`.
    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        Ok(u8::from(self.decision(x)? >= 0.0))
    }

    pub fn predict_features(&self, features: &[FeatureMatrix]) -> Result<Vec<u8>> {
        features
            .iter()
            .map(|f| self.predict(&vectorize(f.matrix.matrix())))
            .collect()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Class-weighted, L2-penalized logistic loss and its gradient at `theta`
/// (weights followed by the bias). `design` holds one example per row;
/// `sample_weights` are normalized internally.
///
/// `f(θ) = Σ cᵢ [log(1 + e^{zᵢ}) − yᵢ zᵢ] / Σ cᵢ + (l2/2)‖w‖²`.
pub fn logistic_objective(
    theta: &DVector<f64>,
    design: &DMatrix<f64>,
    labels: &[u8],
    sample_weights: &[f64],
    l2: f64,
) -> (f64, DVector<f64>) {
    let d = design.ncols();
    let total: f64 = sample_weights.iter().sum();
    let w = theta.rows(0, d);
    let b = theta[d];
    let z = design * w + DVector::from_element(design.nrows(), b);
    let mut loss = 0.0;
    let mut resid = DVector::zeros(design.nrows());
    for i in 0..design.nrows() {
        let y = f64::from(labels[i]);
        let c = sample_weights[i] / total;
        loss += c * (softplus(z[i]) - y * z[i]);
        resid[i] = c * (sigmoid(z[i]) - y);
    }
    loss += 0.5 * l2 * w.norm_squared();
    let mut grad = DVector::zeros(d + 1);
    grad.rows_mut(0, d)
        .copy_from(&(design.transpose() * &resid + w * l2));
    grad[d] = resid.sum();
    (loss, grad)
}

fn hessian(
    theta: &DVector<f64>,
    design: &DMatrix<f64>,
    sample_weights: &[f64],
    l2: f64,
) -> DMatrix<f64> {
    let (n, d) = (design.nrows(), design.ncols());
    let total: f64 = sample_weights.iter().sum();
    let mut aug = DMatrix::zeros(n, d + 1);
    aug.columns_mut(0, d).copy_from(design);
    aug.column_mut(d).fill(1.0);
    let z = &aug * theta;
    let mut scaled = aug.clone();
    for i in 0..n {
        let p = sigmoid(z[i]);
        let c = sample_weights[i] / total * p * (1.0 - p);
        scaled.row_mut(i).scale_mut(c);
    }
    let mut h = aug.transpose() * scaled;
    for k in 0..d {
        h[(k, k)] += l2;
    }
    h
}

/// Fits the model on raw feature vectors. Class weights are `n/(2·n_c)`.
/// Optimization is damped Newton with Armijo backtracking.
pub fn train_on_vectors(
    x: &[Vec<f64>],
    y: &[u8],
    cfg: &ClassifierConfig,
) -> Result<LinearClassifier> {
    cfg.validate()?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            found: x.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData("need at least two examples".into()));
    }
    let n1 = y.iter().filter(|&&v| v == 1).count();
    let n0 = y.iter().filter(|&&v| v == 0).count();
    if n1 == 0 || n0 == 0 || n0 + n1 != y.len() {
        return Err(Error::InsufficientData(
            "both classes 0 and 1 must be present".into(),
        ));
    }
    let d = x[0].len();
    if d == 0 || x.iter().any(|r| r.len() != d) {
        return Err(Error::invalid(
            "feature vectors must share a positive length",
        ));
    }
    let n = x.len() as f64;
    let mut mean = vec![0.0; d];
    for r in x {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n;
        }
    }
    let mut scale = vec![0.0; d];
    for r in x {
        for k in 0..d {
            scale[k] += (r[k] - mean[k]).powi(2) / n;
        }
    }
    for s in scale.iter_mut() {
        *s = if *s > 1e-24 { s.sqrt() } else { 1.0 };
    }
    let design = DMatrix::from_fn(x.len(), d, |i, k| (x[i][k] - mean[k]) / scale[k]);
    let weights: Vec<f64> = y
        .iter()
        .map(|&v| n / (2.0 * if v == 1 { n1 } else { n0 } as f64))
        .collect();

    let mut theta = DVector::zeros(d + 1);
    let (mut f, mut g) = logistic_objective(&theta, &design, y, &weights, cfg.l2);
    let mut iterations = 0;
    let mut converged = g.norm() <= cfg.tol;
    while !converged && iterations < cfg.max_iter {
        iterations += 1;
        let mut h = hessian(&theta, &design, &weights, cfg.l2);
        let mut damping = 0.0;
        let dir = loop {
            if let Some(ch) = h.clone().cholesky() {
                break -ch.solve(&g);
            }
            let add = if damping == 0.0 { 1e-10 } else { damping * 9.0 };
            for k in 0..=d {
                h[(k, k)] += add;
            }
            damping += add;
            if damping > 1e6 {
                break -g.clone();
            }
        };
        let slope = g.dot(&dir);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &theta + &dir * step;
            let (fc, gc) = logistic_objective(&cand, &design, y, &weights, cfg.l2);
            if fc <= f + 1e-4 * step * slope {
                theta = cand;
                f = fc;
                g = gc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        converged = g.norm() <= cfg.tol;
        if !accepted {
            break;
        }
    }
    Ok(LinearClassifier {
        mean,
        scale,
        weights: theta.rows(0, d).iter().copied().collect(),
        bias: theta[d],
        iterations,
        converged,
        gradient_norm: g.norm(),
        seen_tokens: Vec::new(),
    })
}

pub fn train_linear_classifier(
    features: &[FeatureMatrix],
    cfg: &ClassifierConfig,
) -> Result<LinearClassifier> {
    let x: Vec<Vec<f64>> = features
        .iter()
        .map(|f| vectorize(f.matrix.matrix()))
        .collect();
    let y: Vec<u8> = features.iter().map(|f| f.label).collect();
    train_on_vectors(&x, &y, cfg)
}
