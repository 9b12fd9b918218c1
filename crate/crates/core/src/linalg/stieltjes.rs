use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::quadrature::gauss_jacobi;
use super::{SpdMatrix, SymMatrix};
use crate::error::{Error, Result};

/// `X^{−β}` for `β ∈ (0, 1)` from the Stieltjes representation
///
/// `X^{−β} = sin(πβ)/π ∫₀^∞ λ^{−β} (X + λI)^{−1} dλ`.
///
/// The substitution `λ = λ_min(X)·t/(1−t)` maps the half line onto `(0, 1)`
/// and leaves the algebraic endpoint factors `t^{−β}(1−t)^{β−1}`, which are
/// absorbed exactly into a Gauss–Jacobi weight. Each node costs one Cholesky
/// solve; no eigendecomposition enters the sum.
pub fn spd_power_stieltjes(x: &SpdMatrix, beta: f64, n_quad: usize) -> Result<SpdMatrix> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid(format!(
            "Stieltjes representation needs beta in (0,1), got {beta}"
        )));
    }
    if n_quad < 16 {
        return Err(Error::invalid(
            "Stieltjes quadrature needs at least 16 nodes",
        ));
    }
    let n = x.dim();
    let s = x.lambda_min();
    let rule = gauss_jacobi(n_quad, beta - 1.0, -beta)?;
    let ident = DMatrix::<f64>::identity(n, n);
    let mut acc = DMatrix::<f64>::zeros(n, n);
    for (&node, &w) in rule.nodes.iter().zip(&rule.weights) {
        let t = 0.5 * (1.0 + node);
        let shifted = x.matrix() * (1.0 - t) + &ident * (s * t);
        let chol = shifted
            .cholesky()
            .ok_or_else(|| Error::Numerical("shifted resolvent lost definiteness".into()))?;
        acc += chol.inverse() * w;
    }
    acc *= (PI * beta).sin() / PI * s.powf(1.0 - beta);
    SpdMatrix::new(SymMatrix::symmetrize(acc))
}
