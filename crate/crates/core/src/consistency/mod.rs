//! Commutation error between powering and restricting a covariance, the Osc
//! map, structural-consistency checks and the sufficient gates on the
//! observed/latent coupling.

mod gates;
mod verify;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodePartition, WeightedGraph};
use crate::linalg::{
    spd_power_contour, spd_power_eig, spd_power_stieltjes, ContourRule, ContourSpec, SpdMatrix,
    SymMatrix,
};
use crate::matern::observed_covariance;

pub use gates::{
    best_contour_gate, beta_integral_factor, consistency_threshold, contour_gate,
    default_epsilon_grid, delta_norm_bound_contour, delta_norm_bound_fractional,
    fractional_bound_h, fractional_gate, spectral_interval, ContourGate, FractionalGate,
    SpectralInterval,
};
pub use verify::{
    parse_summary_csv, sample_gated_instance, summary_csv, verify_batch, verify_instance,
    ConsistencyReport, CovarianceSource, GatedInstance, ScenarioSpec, SummaryRow, VerifyOptions,
};

/// `max_{i≠j} M_ij − min_{i≠j} M_ij`.
pub fn osc(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    if n < 2 || m.ncols() != n {
        return Err(Error::invalid(
            "osc needs a square matrix of dimension >= 2",
        ));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..n {
        for i in 0..n {
            if i != j {
                lo = lo.min(m[(i, j)]);
                hi = hi.max(m[(i, j)]);
            }
        }
    }
    Ok(hi - lo)
}

/// How matrix powers are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PowerMethod {
    #[default]
    Eig,
    /// Only for `β ∈ (0, 1)`.
    Stieltjes { nodes: usize },
    /// Circle around each matrix's spectrum at distance `λ_min/2`.
    Contour {
        nodes: usize,
        #[serde(default)]
        rule: ContourRule,
    },
}

/// `X^{−β}` with the selected method.
pub fn inverse_power(x: &SpdMatrix, beta: f64, method: PowerMethod) -> Result<SpdMatrix> {
    match method {
        PowerMethod::Eig => spd_power_eig(x, -beta),
        PowerMethod::Stieltjes { nodes } => spd_power_stieltjes(x, beta, nodes),
        PowerMethod::Contour { nodes, rule } => {
            let mut spec = ContourSpec::for_matrix(x, nodes)?;
            spec.rule = rule;
            spd_power_contour(x, beta, &spec)
        }
    }
}

/// `Δ₋β = (C_S)^{−β} − [C^{−β}]_S`.
pub fn commutation_error(
    c: &SpdMatrix,
    p: &NodePartition,
    beta: f64,
    method: PowerMethod,
) -> Result<SymMatrix> {
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::invalid(
            "commutation error needs a finite nonzero beta",
        ));
    }
    let cs = observed_covariance(c, p)?;
    if p.is_full() {
        return Ok(SymMatrix::symmetrize(DMatrix::zeros(cs.dim(), cs.dim())));
    }
    let left = inverse_power(&cs, beta, method)?;
    let right = inverse_power(c, beta, method)?.principal_submatrix(p.observed())?;
    Ok(SymMatrix::symmetrize(left.matrix() - right.matrix()))
}

/// Whether off-diagonals of `C^{−β}` carry `−A` (so must be negated before
/// reading structure). This holds when `αβ > 0`.
pub fn negates_off_diagonal(alpha: f64, beta: f64) -> bool {
    alpha * beta > 0.0
}

/// Outcome of comparing an estimate's off-diagonal entries against a graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Consistency {
    /// `margin = min over connected − max over disconnected`; consistent iff
    /// `margin > 0`.
    Applicable {
        consistent: bool,
        margin: f64,
    },
    NotApplicable,
}

impl Consistency {
    pub fn consistent(&self) -> Option<bool> {
        match self {
            Consistency::Applicable { consistent, .. } => Some(*consistent),
            Consistency::NotApplicable => None,
        }
    }

    pub fn margin(&self) -> Option<f64> {
        match self {
            Consistency::Applicable { margin, .. } => Some(*margin),
            Consistency::NotApplicable => None,
        }
    }
}

/// Every disconnected pair of `truth` must score strictly below every
/// connected pair. With `negate`, scores are `−est_ij`.
pub fn is_structurally_consistent(
    est: &DMatrix<f64>,
    truth: &WeightedGraph,
    negate: bool,
) -> Result<Consistency> {
    let n = truth.n();
    if est.nrows() != n || est.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: est.nrows(),
        });
    }
    let sign = if negate { -1.0 } else { 1.0 };
    let (mut min_conn, mut max_disc) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = sign * est[(i, j)];
            if truth.has_edge(i, j) {
                min_conn = min_conn.min(v);
            } else {
                max_disc = max_disc.max(v);
            }
        }
    }
    if !min_conn.is_finite() || !max_disc.is_finite() {
        return Ok(Consistency::NotApplicable);
    }
    let margin = min_conn - max_disc;
    Ok(Consistency::Applicable {
        consistent: margin > 0.0,
        margin,
    })
}
