//! Graph Matérn random fields `y = 𝓛^{−α/2} x`, `x ∼ N(0, σ²I)`, with
//! `𝓛 = κ²D + L`, and their population covariance `σ²𝓛^{−α}`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{abar, interaction_operator, Abar, NodePartition, WeightedGraph};
use crate::linalg::{spd_power_eig, SpdMatrix, SPD_TOL};

/// Rows generated per RNG substream.
pub const SHARD_ROWS: usize = 1024;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MaternRecord", into = "MaternRecord")]
pub struct MaternModel {
    graph: WeightedGraph,
    kappa: f64,
    alpha: f64,
    sigma: f64,
    operator: SpdMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaternRecord {
    pub graph: WeightedGraph,
    pub kappa: f64,
    pub alpha: f64,
    pub sigma: f64,
}

impl TryFrom<MaternRecord> for MaternModel {
    type Error = Error;
    fn try_from(r: MaternRecord) -> Result<Self> {
        MaternModel::new(r.graph, r.kappa, r.alpha, r.sigma)
    }
}

impl From<MaternModel> for MaternRecord {
    fn from(m: MaternModel) -> Self {
        MaternRecord {
            graph: m.graph,
            kappa: m.kappa,
            alpha: m.alpha,
            sigma: m.sigma,
        }
    }
}

impl PartialEq for MaternModel {
    fn eq(&self, other: &Self) -> bool {
        self.graph == other.graph
            && self.kappa == other.kappa
            && self.alpha == other.alpha
            && self.sigma == other.sigma
    }
}

impl MaternModel {
    pub fn new(graph: WeightedGraph, kappa: f64, alpha: f64, sigma: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "kappa must be positive, got {kappa}"
            )));
        }
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(Error::InvalidModel(format!(
                "alpha must be finite and nonzero, got {alpha}"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        let op = interaction_operator(&graph, kappa)?;
        let operator = SpdMatrix::new(op).map_err(|e| match e {
            Error::NotPositiveDefinite { lambda_min } => Error::InvalidModel(format!(
                "interaction operator is singular (lambda_min = {lambda_min:e}, needs > {SPD_TOL:e})"
            )),
            other => other,
        })?;
        Ok(MaternModel {
            graph,
            kappa,
            alpha,
            sigma,
            operator,
        })
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// `𝓛 = κ²D + L`.
    pub fn operator(&self) -> &SpdMatrix {
        &self.operator
    }

    pub fn abar(&self) -> Result<Abar> {
        abar(&self.graph, self.kappa)
    }

    /// Errors unless `ρ(Ā) < 1`.
    pub fn require_contractive(&self) -> Result<Abar> {
        let ab = self.abar()?;
        if !ab.valid {
            return Err(Error::InvalidModel(format!(
                "spectral radius of I - kappa^2 D - L is {} (needs < 1)",
                ab.spectrum.rho
            )));
        }
        Ok(ab)
    }

    /// `C = σ²𝓛^{−α}`.
    pub fn population_covariance(&self) -> Result<SpdMatrix> {
        spd_power_eig(&self.operator, -self.alpha)?.scale(self.sigma * self.sigma)
    }

    /// `n_samples × n` matrix whose rows are independent field draws.
    ///
    /// Rows are produced in shards of [`SHARD_ROWS`]; shard `k` draws from the
    /// ChaCha8 stream `k` keyed by `seed`, so the output does not depend on how
    /// shards are scheduled. Normals use the ziggurat sampler of `rand_distr`.
    pub fn sample_field(&self, n_samples: usize, seed: u64) -> Result<DMatrix<f64>> {
        if n_samples == 0 {
            return Err(Error::invalid("n_samples must be at least 1"));
        }
        let n = self.n();
        let transform = self.operator.eigen().map(|l| l.powf(-0.5 * self.alpha)) * self.sigma;
        let shards = n_samples.div_ceil(SHARD_ROWS);
        let blocks: Vec<DMatrix<f64>> = (0..shards)
            .into_par_iter()
            .map(|k| {
                let rows = SHARD_ROWS.min(n_samples - k * SHARD_ROWS);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                let x = DMatrix::from_fn(n, rows, |_, _| StandardNormal.sample(&mut rng));
                // Column-major fill: each column is one draw.
                (&transform * x).transpose()
            })
            .collect();
        let mut out = DMatrix::zeros(n_samples, n);
        for (k, b) in blocks.iter().enumerate() {
            out.rows_mut(k * SHARD_ROWS, b.nrows()).copy_from(b);
        }
        Ok(out)
    }
}

/// `C_S = Π_S C Π_Sᵀ`.
pub fn observed_covariance(c: &SpdMatrix, p: &NodePartition) -> Result<SpdMatrix> {
    if c.dim() != p.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            found: c.dim(),
        });
    }
    if p.is_full() {
        return Ok(c.clone());
    }
    c.principal_submatrix(p.observed())
}
