//! Weighted interaction graphs, their Laplacian-type operators, node
//! partitions into observed and latent sets, and a seeded inhomogeneous
//! Erdős–Rényi generator.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, SymMatrix};

/// Undirected graph given by a symmetric nonnegative adjacency matrix with zero
/// diagonal. Serializes as `{n, edges: [[i, j, w], ...]}` with `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphRecord", into = "GraphRecord")]
pub struct WeightedGraph {
    adjacency: DMatrix<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphRecord {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl TryFrom<GraphRecord> for WeightedGraph {
    type Error = Error;
    fn try_from(r: GraphRecord) -> Result<Self> {
        if r.edges.iter().any(|&(i, j, _)| i >= j) {
            return Err(Error::invalid("edge records must satisfy i < j"));
        }
        WeightedGraph::from_edges(r.n, &r.edges)
    }
}

impl From<WeightedGraph> for GraphRecord {
    fn from(g: WeightedGraph) -> Self {
        GraphRecord {
            n: g.n(),
            edges: g.edges(),
        }
    }
}

impl WeightedGraph {
    pub fn new(adjacency: DMatrix<f64>) -> Result<Self> {
        let n = adjacency.nrows();
        if n == 0 || adjacency.ncols() != n {
            return Err(Error::invalid(
                "adjacency must be a non-empty square matrix",
            ));
        }
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("nonzero diagonal at node {i}")));
            }
            for j in 0..n {
                let w = adjacency[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::invalid(format!(
                        "weight ({i},{j}) = {w} is not a finite nonnegative number"
                    )));
                }
                if w != adjacency[(j, i)] {
                    return Err(Error::invalid(format!("adjacency asymmetric at ({i},{j})")));
                }
            }
        }
        Ok(WeightedGraph { adjacency })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(n, n))
    }

    /// Builds a graph from `(i, j, w)` triples; each unordered pair may appear
    /// at most once.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut a = DMatrix::zeros(n, n);
        for &(i, j, w) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::invalid(format!("bad edge ({i},{j}) for n = {n}")));
            }
            if a[(i, j)] != 0.0 {
                return Err(Error::invalid(format!("duplicate edge ({i},{j})")));
            }
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
        Self::new(a)
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn degrees(&self) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.adjacency.row_iter().map(|r| r.sum()))
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[(i, j)] > 0.0
    }

    /// Edges `(i, j, w)` with `i < j` in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.adjacency[(i, j)];
                if w > 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// Subgraph induced by `nodes`, relabelled `0..nodes.len()`.
    pub fn induced(&self, nodes: &[usize]) -> Result<WeightedGraph> {
        if nodes.iter().any(|&i| i >= self.n()) {
            return Err(Error::invalid("induced subgraph index out of range"));
        }
        let k = nodes.len();
        Self::new(DMatrix::from_fn(k, k, |i, j| {
            self.adjacency[(nodes[i], nodes[j])]
        }))
    }

    pub fn scaled(&self, factor: f64) -> Result<WeightedGraph> {
        if !(factor >= 0.0) || !factor.is_finite() {
            return Err(Error::invalid(
                "scale factor must be finite and nonnegative",
            ));
        }
        Self::new(&self.adjacency * factor)
    }

    /// Smallest strictly positive weight among pairs inside `nodes`; `None`
    /// when the induced subgraph has no edges.
    pub fn a_min(&self, nodes: &[usize]) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (a, &i) in nodes.iter().enumerate() {
            for &j in &nodes[a + 1..] {
                let w = self.adjacency[(i, j)];
                if w > 0.0 {
                    best = Some(best.map_or(w, |b: f64| b.min(w)));
                }
            }
        }
        best
    }
}

/// `L = D − A`.
pub fn laplacian(g: &WeightedGraph) -> SymMatrix {
    let d = DMatrix::from_diagonal(&g.degrees());
    SymMatrix::symmetrize(d - g.adjacency())
}

/// The interaction operator `κ²D + L`. `κ = 0` returns `L`.
pub fn interaction_operator(g: &WeightedGraph, kappa: f64) -> Result<SymMatrix> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::invalid(format!(
            "kappa must be finite and >= 0, got {kappa}"
        )));
    }
    let d = DMatrix::from_diagonal(&g.degrees());
    Ok(SymMatrix::symmetrize(
        &d * (kappa * kappa) + laplacian(g).matrix(),
    ))
}

/// `Ā = I − κ²D − L` together with the spectral data every downstream bound
/// needs. `valid` records whether `ρ(Ā) < 1`.
#[derive(Debug, Clone)]
pub struct Abar {
    pub matrix: SymMatrix,
    pub spectrum: AbarSpectrum,
    pub valid: bool,
}

/// Spectral radius and extreme eigenvalues of `Ā`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbarSpectrum {
    pub rho: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl AbarSpectrum {
    pub fn of(m: &SymMatrix) -> Result<Self> {
        let e = sym_eigen(m)?;
        let (lambda_min, lambda_max) = (e.lambda_min(), e.lambda_max());
        Ok(AbarSpectrum {
            rho: lambda_min.abs().max(lambda_max.abs()),
            lambda_min,
            lambda_max,
        })
    }

    pub fn is_contractive(&self) -> bool {
        self.rho < 1.0
    }
}

pub fn abar(g: &WeightedGraph, kappa: f64) -> Result<Abar> {
    let op = interaction_operator(g, kappa)?;
    let n = g.n();
    let matrix = SymMatrix::symmetrize(DMatrix::identity(n, n) - op.matrix());
    let spectrum = AbarSpectrum::of(&matrix)?;
    Ok(Abar {
        valid: spectrum.is_contractive(),
        matrix,
        spectrum,
    })
}

/// Observed node set `S` and its latent complement `S′`, both sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PartitionRecord", into = "PartitionRecord")]
pub struct NodePartition {
    n: usize,
    observed: Vec<usize>,
    latent: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct PartitionRecord {
    n: usize,
    observed: Vec<usize>,
}

impl TryFrom<PartitionRecord> for NodePartition {
    type Error = Error;
    fn try_from(r: PartitionRecord) -> Result<Self> {
        NodePartition::new(r.n, r.observed)
    }
}

impl From<NodePartition> for PartitionRecord {
    fn from(p: NodePartition) -> Self {
        PartitionRecord {
            n: p.n,
            observed: p.observed,
        }
    }
}

impl NodePartition {
    pub fn new(n: usize, mut observed: Vec<usize>) -> Result<Self> {
        observed.sort_unstable();
        if observed.is_empty() {
            return Err(Error::invalid("observed set must be non-empty"));
        }
        if observed.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("observed set has duplicate indices"));
        }
        if observed.last().is_some_and(|&i| i >= n) {
            return Err(Error::invalid("observed index out of range"));
        }
        let latent = (0..n)
            .filter(|i| observed.binary_search(i).is_err())
            .collect();
        Ok(NodePartition {
            n,
            observed,
            latent,
        })
    }

    pub fn full(n: usize) -> Result<Self> {
        Self::new(n, (0..n).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn latent(&self) -> &[usize] {
        &self.latent
    }

    pub fn is_full(&self) -> bool {
        self.latent.is_empty()
    }
}

/// The four blocks of a square matrix under an `(S, S′)` partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks {
    pub s: DMatrix<f64>,
    pub s_sp: DMatrix<f64>,
    pub sp_s: DMatrix<f64>,
    pub sp: DMatrix<f64>,
}

fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn partition_blocks(m: &DMatrix<f64>, p: &NodePartition) -> Result<Blocks> {
    if m.nrows() != p.n() || m.ncols() != p.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            found: m.nrows().max(m.ncols()),
        });
    }
    let (s, sp) = (p.observed(), p.latent());
    Ok(Blocks {
        s: select(m, s, s),
        s_sp: select(m, s, sp),
        sp_s: select(m, sp, s),
        sp: select(m, sp, sp),
    })
}

impl Blocks {
    /// Inverse of [`partition_blocks`].
    pub fn reassemble(&self, p: &NodePartition) -> DMatrix<f64> {
        let (s, sp) = (p.observed(), p.latent());
        let mut m = DMatrix::zeros(p.n(), p.n());
        for (a, &i) in s.iter().enumerate() {
            for (b, &j) in s.iter().enumerate() {
                m[(i, j)] = self.s[(a, b)];
            }
            for (b, &j) in sp.iter().enumerate() {
                m[(i, j)] = self.s_sp[(a, b)];
                m[(j, i)] = self.sp_s[(b, a)];
            }
        }
        for (a, &i) in sp.iter().enumerate() {
            for (b, &j) in sp.iter().enumerate() {
                m[(i, j)] = self.sp[(a, b)];
            }
        }
        m
    }
}

/// Parameters of the three-block inhomogeneous Erdős–Rényi model. Observed
/// nodes are `0..n_obs`, latent nodes `n_obs..n_obs + n_lat`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErParams {
    pub n_obs: usize,
    pub n_lat: usize,
    pub p_obs: f64,
    pub p_lat: f64,
    pub p_cross: f64,
    pub weight_low: f64,
    pub weight_high: f64,
    pub target_rho: f64,
}

impl ErParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_obs == 0 {
            return Err(Error::invalid("n_obs must be at least 1"));
        }
        if self.n_obs + self.n_lat < 2 {
            return Err(Error::invalid("graph needs at least two nodes"));
        }
        for (name, p) in [
            ("p_obs", self.p_obs),
            ("p_lat", self.p_lat),
            ("p_cross", self.p_cross),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} = {p} is not a probability")));
            }
        }
        if !(self.weight_low > 0.0 && self.weight_low <= self.weight_high)
            || !self.weight_high.is_finite()
        {
            return Err(Error::invalid("weights must satisfy 0 < low <= high < inf"));
        }
        if !(self.target_rho > 0.0 && self.target_rho < 1.0) {
            return Err(Error::invalid("target_rho must lie in (0,1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ErSample {
    pub graph: WeightedGraph,
    pub partition: NodePartition,
    /// Global factor applied to the raw weights (1 when no rescale was needed).
    pub scale: f64,
}

/// Draws each pair independently with the probability of its block, weights
/// uniform on `[weight_low, weight_high]`, then applies one global factor so
/// that `ρ(Ā)` at `κ = 1` does not exceed `target_rho`.
///
/// When no single factor can reach the target (for instance when a node is
/// isolated) the factor minimising `ρ(Ā)` is used instead and the caller sees
/// the outcome through [`abar`].
pub fn sample_inhomogeneous_er(params: &ErParams, seed: u64) -> Result<ErSample> {
    params.validate()?;
    let n = params.n_obs + params.n_lat;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let p = match (i < params.n_obs, j < params.n_obs) {
                (true, true) => params.p_obs,
                (false, false) => params.p_lat,
                _ => params.p_cross,
            };
            let u: f64 = rng.random();
            if u < p {
                let w = params.weight_low
                    + (params.weight_high - params.weight_low) * rng.random::<f64>();
                a[(i, j)] = w;
                a[(j, i)] = w;
            }
        }
    }
    let raw = WeightedGraph::new(a)?;
    let scale = rescale_factor(&raw, params.target_rho)?;
    let graph = if scale == 1.0 {
        raw
    } else {
        raw.scaled(scale)?
    };
    let partition = NodePartition::new(n, (0..params.n_obs).collect())?;
    Ok(ErSample {
        graph,
        partition,
        scale,
    })
}

fn rescale_factor(g: &WeightedGraph, target: f64) -> Result<f64> {
    // Ā(tA) = I − t(2D − A) at κ = 1, so its spectrum is 1 − t·spec(2D − A).
    let op = interaction_operator(g, 1.0)?;
    let e = sym_eigen(&op)?;
    let (lo, hi) = (e.lambda_min(), e.lambda_max());
    let rho = (1.0 - lo).abs().max((1.0 - hi).abs());
    if rho <= target || lo <= 0.0 {
        return Ok(1.0);
    }
    let t_lo = (1.0 - target) / lo;
    let t_hi = (1.0 + target) / hi;
    if t_lo <= t_hi {
        Ok(1.0f64.clamp(t_lo, t_hi))
    } else {
        Ok(2.0 / (lo + hi))
    }
}
