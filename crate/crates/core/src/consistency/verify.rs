//! Empirical-versus-theoretical verification of single instances and seeded
//! batches of random partially observed Matérn models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gates::{
    best_contour_gate, default_epsilon_grid, delta_norm_bound_contour, delta_norm_bound_fractional,
    fractional_gate, spectral_interval, ContourGate, FractionalGate,
};
use super::{
    commutation_error, consistency_threshold, inverse_power, is_structurally_consistent,
    negates_off_diagonal, osc, PowerMethod,
};
use crate::error::{Error, Result};
use crate::graph::{
    abar, partition_blocks, sample_inhomogeneous_er, AbarSpectrum, ErParams, NodePartition,
    WeightedGraph,
};
use crate::linalg::{operator_norm, spectral_norm, SpdMatrix, SymMatrix};
use crate::matern::{observed_covariance, MaternModel};

/// `αβ` must be within this of 1 for the gates to apply.
const RECIPROCAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovarianceSource {
    #[default]
    Population,
    /// Zero-mean sample covariance of `n_samples` field draws.
    Sampled { n_samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    pub method: PowerMethod,
    /// Contour-gate ε values; `None` uses [`default_epsilon_grid`].
    pub epsilon_grid: Option<Vec<f64>>,
    pub covariance: CovarianceSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub n_observed: usize,
    pub n_latent: usize,
    /// `‖A_SS′‖`.
    pub cross_norm: f64,
    pub a_min: Option<f64>,
    pub abar: AbarSpectrum,
    pub delta_spectral_norm: f64,
    pub delta_osc: f64,
    pub threshold: Option<f64>,
    /// `None` when the observed subgraph lacks connected or disconnected pairs.
    pub empirically_consistent: Option<bool>,
    pub margin: Option<f64>,
    pub gate_fractional: Option<FractionalGate>,
    pub gate_contour: Option<ContourGate>,
    pub bound_fractional: Option<f64>,
    pub bound_contour: Option<f64>,
    pub notes: String,
}

impl ConsistencyReport {
    pub fn gate_satisfied(&self) -> bool {
        self.gate_fractional.is_some_and(|g| g.satisfied)
            || self.gate_contour.is_some_and(|g| g.satisfied)
    }

    /// Largest admissible `‖A_SS′‖` among the computed gates.
    pub fn best_gate(&self) -> Option<f64> {
        let f = self.gate_fractional.map(|g| g.g);
        let c = self.gate_contour.map(|g| g.g_eps);
        match (f, c) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    /// Tightest available bound on `‖Δ₋β‖`.
    pub fn best_bound(&self) -> Option<f64> {
        match (self.bound_fractional, self.bound_contour) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

fn covariance(model: &MaternModel, source: CovarianceSource) -> Result<SpdMatrix> {
    match source {
        CovarianceSource::Population => model.population_covariance(),
        CovarianceSource::Sampled { n_samples, seed } => {
            let y = model.sample_field(n_samples, seed)?;
            SpdMatrix::new(SymMatrix::symmetrize(y.transpose() * &y / n_samples as f64))
        }
    }
}

/// `‖A_SS′‖`, zero without latent nodes.
pub fn cross_block_norm(g: &WeightedGraph, p: &NodePartition) -> Result<f64> {
    if p.is_full() {
        return Ok(0.0);
    }
    Ok(operator_norm(&partition_blocks(g.adjacency(), p)?.s_sp))
}

struct Gates {
    fractional: Option<FractionalGate>,
    contour: Option<ContourGate>,
    notes: Vec<String>,
}

fn evaluate_gates(
    spec: &AbarSpectrum,
    alpha: f64,
    beta: f64,
    sigma: f64,
    a_min: Option<f64>,
    cross_norm: f64,
    grid: Option<&[f64]>,
) -> Result<Gates> {
    let mut out = Gates {
        fractional: None,
        contour: None,
        notes: Vec::new(),
    };
    if (alpha * beta - 1.0).abs() > RECIPROCAL_TOL {
        out.notes.push("gates apply only at beta = 1/alpha".into());
        return Ok(out);
    }
    let Some(a_min) = a_min else {
        out.notes
            .push("a_min undefined: observed block has no edges".into());
        return Ok(out);
    };
    if !spec.is_contractive() {
        out.notes.push("rho(Abar) >= 1: no gate applies".into());
        return Ok(out);
    }
    if beta > 0.0 && beta < 1.0 {
        out.fractional = Some(fractional_gate(spec, beta, a_min, cross_norm)?);
    }
    if alpha > 0.0 {
        let owned;
        let grid = match grid {
            Some(g) => g,
            None => {
                owned = default_epsilon_grid(spectral_interval(spec, alpha, sigma)?.m);
                &owned
            }
        };
        out.contour = Some(best_contour_gate(
            spec, alpha, beta, sigma, grid, a_min, cross_norm,
        )?);
    } else {
        out.notes.push("no applicable gate for alpha < 0".into());
    }
    Ok(out)
}

pub fn verify_instance(
    model: &MaternModel,
    p: &NodePartition,
    beta: f64,
    opts: &VerifyOptions,
) -> Result<ConsistencyReport> {
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::invalid("beta must be finite and nonzero"));
    }
    if p.n() != model.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            found: p.n(),
        });
    }
    let (alpha, sigma) = (model.alpha(), model.sigma());
    let ab = model.abar()?;
    let c = covariance(model, opts.covariance)?;
    let delta = commutation_error(&c, p, beta, opts.method)?;
    let delta_osc = if p.observed().len() >= 2 {
        osc(delta.matrix())?
    } else {
        0.0
    };
    let cs = observed_covariance(&c, p)?;
    let est = inverse_power(&cs, beta, opts.method)?;
    let truth = model.graph().induced(p.observed())?;
    let check =
        is_structurally_consistent(est.matrix(), &truth, negates_off_diagonal(alpha, beta))?;
    let a_min = model.graph().a_min(p.observed());
    let threshold = a_min
        .map(|a| consistency_threshold(a, sigma, beta))
        .transpose()?;
    let cross_norm = cross_block_norm(model.graph(), p)?;
    let gates = evaluate_gates(
        &ab.spectrum,
        alpha,
        beta,
        sigma,
        a_min,
        cross_norm,
        opts.epsilon_grid.as_deref(),
    )?;
    let mut notes = gates.notes;
    let bound_fractional = gates.fractional.and_then(|g| {
        delta_norm_bound_fractional(&ab.spectrum, beta, sigma, cross_norm)
            .ok()
            .filter(|_| g.theta < 1.0)
    });
    let bound_contour = gates
        .contour
        .and_then(|g| delta_norm_bound_contour(&g).ok());
    if check.consistent().is_none() {
        notes.push("observed subgraph lacks connected or disconnected pairs".into());
    }
    Ok(ConsistencyReport {
        alpha,
        beta,
        sigma,
        n_observed: p.observed().len(),
        n_latent: p.latent().len(),
        cross_norm,
        a_min,
        abar: ab.spectrum,
        delta_spectral_norm: spectral_norm(&delta)?,
        delta_osc,
        threshold,
        empirically_consistent: check.consistent(),
        margin: check.margin(),
        gate_fractional: gates.fractional,
        gate_contour: gates.contour,
        bound_fractional,
        bound_contour,
        notes: notes.join("; "),
    })
}

/// Random partially observed Matérn scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub er: ErParams,
    pub kappa: f64,
    pub alpha: f64,
    pub sigma: f64,
    /// Defaults to `1/α`.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Shrink the observed/latent coupling until a gate holds.
    #[serde(default = "yes")]
    pub gated: bool,
}

fn yes() -> bool {
    true
}

impl ScenarioSpec {
    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(1.0 / self.alpha)
    }
}

#[derive(Debug, Clone)]
pub struct GatedInstance {
    pub model: MaternModel,
    pub partition: NodePartition,
    /// Factor applied to the sampled cross-block weights.
    pub cross_scale: f64,
}

fn scale_cross(g: &WeightedGraph, p: &NodePartition, gamma: f64) -> Result<WeightedGraph> {
    let mut a = g.adjacency().clone();
    for &i in p.observed() {
        for &j in p.latent() {
            a[(i, j)] *= gamma;
            a[(j, i)] *= gamma;
        }
    }
    WeightedGraph::new(a)
}

fn gate_holds(spec: &ScenarioSpec, g: &WeightedGraph, p: &NodePartition) -> Result<bool> {
    let ab = abar(g, spec.kappa)?;
    if !ab.valid {
        return Ok(false);
    }
    let gates = evaluate_gates(
        &ab.spectrum,
        spec.alpha,
        spec.beta(),
        spec.sigma,
        g.a_min(p.observed()),
        cross_block_norm(g, p)?,
        None,
    )?;
    Ok(gates.fractional.is_some_and(|f| f.satisfied) || gates.contour.is_some_and(|c| c.satisfied))
}

fn has_both_pair_kinds(g: &WeightedGraph, nodes: &[usize]) -> bool {
    let (mut conn, mut disc) = (false, false);
    for (a, &i) in nodes.iter().enumerate() {
        for &j in &nodes[a + 1..] {
            if g.has_edge(i, j) {
                conn = true;
            } else {
                disc = true;
            }
        }
    }
    conn && disc
}

/// Draws an ER graph whose observed block has both connected and
/// disconnected pairs and whose model is valid; when `spec.gated`, the
/// cross-block is then multiplied by a factor `γ ∈ (0, 1]` chosen so that a
/// gate holds. `γ` is found by geometric descent from 1 and then jittered
/// downwards by a uniform factor in `[0.5, 1)` so instances do not all sit on
/// the gate boundary.
pub fn sample_gated_instance(spec: &ScenarioSpec, seed: u64) -> Result<GatedInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..64 {
        let er = sample_inhomogeneous_er(&spec.er, rng.random())?;
        let (g, p) = (er.graph, er.partition);
        if !has_both_pair_kinds(&g, p.observed()) || !abar(&g, spec.kappa)?.valid {
            continue;
        }
        if !spec.gated {
            let model = MaternModel::new(g, spec.kappa, spec.alpha, spec.sigma)?;
            return Ok(GatedInstance {
                model,
                partition: p,
                cross_scale: 1.0,
            });
        }
        let mut gamma = 1.0;
        let mut found = None;
        while gamma > 1e-12 {
            if gate_holds(spec, &scale_cross(&g, &p, gamma)?, &p)? {
                let jittered = gamma * rng.random_range(0.5..1.0);
                let candidate = scale_cross(&g, &p, jittered)?;
                if gate_holds(spec, &candidate, &p)? {
                    found = Some((jittered, candidate));
                    break;
                }
            }
            gamma *= 0.8;
        }
        if let Some((cross_scale, graph)) = found {
            let model = MaternModel::new(graph, spec.kappa, spec.alpha, spec.sigma)?;
            return Ok(GatedInstance {
                model,
                partition: p,
                cross_scale,
            });
        }
    }
    Err(Error::InsufficientData(format!(
        "no admissible instance found for seed {seed} after 64 draws"
    )))
}

/// One report per seed, in seed order.
pub fn verify_batch(
    spec: &ScenarioSpec,
    seeds: &[u64],
    opts: &VerifyOptions,
) -> Result<Vec<(u64, ConsistencyReport)>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let inst = sample_gated_instance(spec, seed)?;
            let report = verify_instance(&inst.model, &inst.partition, spec.beta(), opts)?;
            Ok((seed, report))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub seed: u64,
    pub beta: f64,
    pub cross_norm: f64,
    pub g: Option<f64>,
    pub bound: Option<f64>,
    pub empirical_norm: f64,
    pub consistent: Option<bool>,
}

impl SummaryRow {
    pub fn new(seed: u64, r: &ConsistencyReport) -> Self {
        SummaryRow {
            seed,
            beta: r.beta,
            cross_norm: r.cross_norm,
            g: r.best_gate(),
            bound: r.best_bound(),
            empirical_norm: r.delta_spectral_norm,
            consistent: r.empirically_consistent,
        }
    }
}

/// CSV with header `seed,beta,cross_norm,g,bound,empirical_norm,consistent`;
/// undefined values are empty fields.
pub fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record([
            "seed",
            "beta",
            "cross_norm",
            "g",
            "bound",
            "empirical_norm",
            "consistent",
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Numerical(format!("csv flush failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Numerical(e.to_string()))
}

/// Inverse of [`summary_csv`].
pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header
        != [
            "seed",
            "beta",
            "cross_norm",
            "g",
            "bound",
            "empirical_norm",
            "consistent",
        ]
    {
        return Err(Error::invalid("not a consistency summary CSV"));
    }
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(alpha: f64, p_cross: f64) -> ScenarioSpec {
        ScenarioSpec {
            er: ErParams {
                n_obs: 6,
                n_lat: 4,
                p_obs: 0.5,
                p_lat: 0.5,
                p_cross,
                weight_low: 0.2,
                weight_high: 1.0,
                target_rho: 0.6,
            },
            kappa: 1.0,
            alpha,
            sigma: 1.2,
            beta: None,
            gated: true,
        }
    }

    #[test]
    fn full_observability_is_exact() {
        let inst = sample_gated_instance(&scenario(2.0, 0.3), 4).unwrap();
        let full = NodePartition::full(inst.model.n()).unwrap();
        let r = verify_instance(&inst.model, &full, 0.5, &VerifyOptions::default()).unwrap();
        assert_eq!(r.delta_spectral_norm, 0.0);
        assert_eq!(r.cross_norm, 0.0);
        assert_eq!(r.empirically_consistent, Some(true));
    }

    #[test]
    fn uncoupled_instances_have_no_commutation_error() {
        let mut spec = scenario(1.5, 0.0);
        spec.gated = false;
        for seed in 0..5 {
            let inst = sample_gated_instance(&spec, seed).unwrap();
            let r = verify_instance(
                &inst.model,
                &inst.partition,
                spec.beta(),
                &VerifyOptions::default(),
            )
            .unwrap();
            assert!(r.delta_spectral_norm <= 1e-10, "{}", r.delta_spectral_norm);
        }
    }

    #[test]
    fn gated_instances_are_consistent_and_bounded() {
        for &alpha in &[0.7, 1.0, 2.0, 3.0] {
            let spec = scenario(alpha, 0.4);
            let seeds: Vec<u64> = (0..10).collect();
            for (_, r) in verify_batch(&spec, &seeds, &VerifyOptions::default()).unwrap() {
                assert!(r.gate_satisfied());
                assert_eq!(r.empirically_consistent, Some(true));
                assert!(r.delta_osc <= 2.0 * r.delta_spectral_norm + 1e-15);
                let bound = r.best_bound().unwrap();
                assert!(
                    r.delta_spectral_norm <= bound,
                    "alpha={alpha}: {} > {bound}",
                    r.delta_spectral_norm
                );
            }
        }
    }

    #[test]
    fn gates_skip_off_reciprocal_exponents() {
        let inst = sample_gated_instance(&scenario(2.0, 0.3), 1).unwrap();
        let r =
            verify_instance(&inst.model, &inst.partition, 0.3, &VerifyOptions::default()).unwrap();
        assert!(r.gate_fractional.is_none() && r.gate_contour.is_none());
        assert!(r.notes.contains("1/alpha"));
    }

    #[test]
    fn summary_has_one_row_per_seed() {
        let spec = scenario(2.0, 0.3);
        let seeds: Vec<u64> = (0..3).collect();
        let reports = verify_batch(&spec, &seeds, &VerifyOptions::default()).unwrap();
        let rows: Vec<SummaryRow> = reports
            .iter()
            .map(|(s, r)| SummaryRow::new(*s, r))
            .collect();
        let text = summary_csv(&rows).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "seed,beta,cross_norm,g,bound,empirical_norm,consistent"
        );
        assert_eq!(lines.count(), 3);
        assert_eq!(parse_summary_csv(&text).unwrap(), rows);
        assert!(parse_summary_csv("a,b\n1,2\n").is_err());
    }
}
