//! Sufficient conditions on `‖A_SS′‖` under which `(C_S)^{−1/α}` stays
//! structurally consistent, and the matching norm bounds on `Δ₋β`.
//!
//! Fractional gate (`β ∈ (0, 1)`):
//!
//! ```text
//! H = sin(πβ)/π · Γ(1−β)Γ(2+β) (1−λ_min)^{2/β+1} / (2β²(1−ρ)^{2/β+2})
//! s = β(1−ρ)^{1+1/β} / (1−λ_min)^{1/β}
//! c = s·sqrt(a_min / (4s²H + a_min)),   g = min(s, c)
//! ```
//!
//! Contour gate (`α > 0`), on the circle of radius `(M−m)/2 + ε` centred at
//! `(m+M)/2` where `spec(C) ⊂ [m, M]`:
//!
//! ```text
//! K = R ε^{−3} Z,   L = σ²α(1−ρ)^{−α−1},   s_ε = ε/L
//! c_ε = s_ε·sqrt(a_min / (4ε²σ^{2β}K + a_min)),   g_ε = min(s_ε, c_ε)
//! ```
//!
//! Here `ρ`, `λ_min` refer to `Ā = I − κ²D − L`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::graph::AbarSpectrum;

/// `a_min / (2σ^{2β})`.
pub fn consistency_threshold(a_min: f64, sigma: f64, beta: f64) -> Result<f64> {
    if !(a_min > 0.0 && a_min.is_finite()) {
        return Err(Error::NotApplicable(
            "a_min is undefined (observed block has no edges)".into(),
        ));
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    Ok(a_min / (2.0 * sigma.powf(2.0 * beta)))
}

/// `∫₀^∞ t^{−β}(1+t)^{−3} dt = Γ(1−β)Γ(2+β)/2` for `β ∈ (−2, 1)`.
pub fn beta_integral_factor(beta: f64) -> Result<f64> {
    if !(beta > -2.0 && beta < 1.0) {
        return Err(Error::invalid(format!(
            "integral diverges for beta = {beta}"
        )));
    }
    Ok(gamma(1.0 - beta) * gamma(2.0 + beta) / 2.0)
}

fn check_fractional(spec: &AbarSpectrum, beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid(format!(
            "fractional gate needs beta in (0,1), got {beta}"
        )));
    }
    if !spec.is_contractive() {
        return Err(Error::InvalidModel(format!(
            "spectral radius {} of Abar is not below 1",
            spec.rho
        )));
    }
    Ok(())
}

pub fn fractional_bound_h(spec: &AbarSpectrum, beta: f64) -> Result<f64> {
    check_fractional(spec, beta)?;
    let top = 1.0 - spec.lambda_min;
    let gap = 1.0 - spec.rho;
    Ok(
        (PI * beta).sin() / PI * beta_integral_factor(beta)? * top.powf(2.0 / beta + 1.0)
            / (beta * beta * gap.powf(2.0 / beta + 2.0)),
    )
}

fn fractional_stability(spec: &AbarSpectrum, beta: f64) -> f64 {
    beta * (1.0 - spec.rho).powf(1.0 + 1.0 / beta) / (1.0 - spec.lambda_min).powf(1.0 / beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalGate {
    /// Upper bound `‖A_SS′‖²/s²` on the contraction factor `θ`.
    pub theta: f64,
    pub h: f64,
    pub s: f64,
    pub c: f64,
    pub g: f64,
    pub satisfied: bool,
}

pub fn fractional_gate(
    spec: &AbarSpectrum,
    beta: f64,
    a_min: f64,
    cross_norm: f64,
) -> Result<FractionalGate> {
    check_fractional(spec, beta)?;
    if !(a_min > 0.0) {
        return Err(Error::NotApplicable("a_min is undefined".into()));
    }
    let h = fractional_bound_h(spec, beta)?;
    let s = fractional_stability(spec, beta);
    let c = s * (a_min / (4.0 * s * s * h + a_min)).sqrt();
    let g = s.min(c);
    Ok(FractionalGate {
        theta: cross_norm * cross_norm / (s * s),
        h,
        s,
        c,
        g,
        satisfied: cross_norm < g,
    })
}

/// `H‖A_SS′‖² / (σ^{2β}(1 − ‖A_SS′‖²/s²))`.
pub fn delta_norm_bound_fractional(
    spec: &AbarSpectrum,
    beta: f64,
    sigma: f64,
    cross_norm: f64,
) -> Result<f64> {
    let h = fractional_bound_h(spec, beta)?;
    let s = fractional_stability(spec, beta);
    if cross_norm >= s {
        return Err(Error::NotApplicable(format!(
            "cross-block norm {cross_norm} is not below the stability radius {s}"
        )));
    }
    let x2 = cross_norm * cross_norm;
    Ok(h * x2 / (sigma.powf(2.0 * beta) * (1.0 - x2 / (s * s))))
}

/// Bounds `m ≤ spec(C) ≤ M` for `C = σ²(I − Ā)^{−α}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralInterval {
    pub m: f64,
    pub m_up: f64,
}

/// For `α > 0`, `m = σ²(1 − λ_min(Ā))^{−α}` and `M = σ²(1 − ρ(Ā))^{−α}`; for
/// `α < 0` the roles of the two endpoints swap.
pub fn spectral_interval(spec: &AbarSpectrum, alpha: f64, sigma: f64) -> Result<SpectralInterval> {
    if !spec.is_contractive() {
        return Err(Error::InvalidModel(
            "spectral radius of Abar is not below 1".into(),
        ));
    }
    let s2 = sigma * sigma;
    let a = s2 * (1.0 - spec.lambda_min).powf(-alpha);
    let b = s2 * (1.0 - spec.rho).powf(-alpha);
    Ok(SpectralInterval {
        m: a.min(b),
        m_up: a.max(b),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourGate {
    pub epsilon: f64,
    pub m: f64,
    pub m_up: f64,
    pub radius: f64,
    /// Upper bound `(L‖A_SS′‖)²/ε²` on `Θ`.
    pub theta_bound: f64,
    pub z: f64,
    pub k: f64,
    pub l_amp: f64,
    pub s_eps: f64,
    pub c_eps: f64,
    pub g_eps: f64,
    pub satisfied: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn contour_gate(
    spec: &AbarSpectrum,
    alpha: f64,
    beta: f64,
    sigma: f64,
    epsilon: f64,
    a_min: f64,
    cross_norm: f64,
) -> Result<ContourGate> {
    if !(alpha > 0.0) {
        return Err(Error::NotApplicable(
            "contour gate amplification bound needs alpha > 0".into(),
        ));
    }
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::invalid("contour gate needs a finite nonzero beta"));
    }
    if !(a_min > 0.0) {
        return Err(Error::NotApplicable("a_min is undefined".into()));
    }
    let SpectralInterval { m, m_up } = spectral_interval(spec, alpha, sigma)?;
    if !(epsilon > 0.0 && epsilon < m) {
        return Err(Error::invalid(format!(
            "epsilon {epsilon} outside (0, {m})"
        )));
    }
    let radius = 0.5 * (m_up - m) + epsilon;
    let z = if beta >= 0.0 {
        (m - epsilon).powf(-beta)
    } else {
        (m_up + epsilon).powf(-beta)
    };
    let k = radius * epsilon.powi(-3) * z;
    let l_amp = sigma * sigma * alpha * (1.0 - spec.rho).powf(-alpha - 1.0);
    let s_eps = epsilon / l_amp;
    let sig2b = sigma.powf(2.0 * beta);
    let c_eps = s_eps * (a_min / (4.0 * epsilon * epsilon * sig2b * k + a_min)).sqrt();
    let g_eps = s_eps.min(c_eps);
    let lx = l_amp * cross_norm;
    Ok(ContourGate {
        epsilon,
        m,
        m_up,
        radius,
        theta_bound: lx * lx / (epsilon * epsilon),
        z,
        k,
        l_amp,
        s_eps,
        c_eps,
        g_eps,
        satisfied: cross_norm < g_eps,
    })
}

/// `K(L‖A_SS′‖)² / (1 − Θ)` for the circle of `gate`; requires `Θ < 1`.
pub fn delta_norm_bound_contour(gate: &ContourGate) -> Result<f64> {
    if gate.theta_bound >= 1.0 {
        return Err(Error::NotApplicable(
            "contour stability bound not below 1".into(),
        ));
    }
    let y = gate.theta_bound * gate.epsilon * gate.epsilon;
    Ok(gate.k * y / (1.0 - gate.theta_bound))
}

/// 20 log-spaced values from `0.01m` to `0.99m`.
pub fn default_epsilon_grid(m: f64) -> Vec<f64> {
    let (lo, hi) = ((0.01 * m).ln(), (0.99 * m).ln());
    (0..20)
        .map(|i| (lo + (hi - lo) * i as f64 / 19.0).exp())
        .collect()
}

/// The gate with the largest `g_ε` over `grid` (first index on ties).
#[allow(clippy::too_many_arguments)]
pub fn best_contour_gate(
    spec: &AbarSpectrum,
    alpha: f64,
    beta: f64,
    sigma: f64,
    grid: &[f64],
    a_min: f64,
    cross_norm: f64,
) -> Result<ContourGate> {
    let mut best: Option<ContourGate> = None;
    for &eps in grid {
        let gate = contour_gate(spec, alpha, beta, sigma, eps, a_min, cross_norm)?;
        if best.is_none_or(|b| gate.g_eps > b.g_eps) {
            best = Some(gate);
        }
    }
    best.ok_or_else(|| Error::invalid("epsilon grid is empty"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(rho: f64, lmin: f64) -> AbarSpectrum {
        AbarSpectrum {
            rho,
            lambda_min: lmin,
            lambda_max: rho,
        }
    }

    #[test]
    fn thresholds() {
        assert_eq!(consistency_threshold(1.0, 1.0, 3.7).unwrap(), 0.5);
        assert!((consistency_threshold(0.4, 1.0, 0.5).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(consistency_threshold(1.0, 2.0, 1.0).unwrap(), 0.125);
        assert!(consistency_threshold(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn h_at_zero_abar() {
        for &b in &[0.2, 0.5, 0.9] {
            let h = fractional_bound_h(&spec(0.0, 0.0), b).unwrap();
            let expect = (PI * b).sin() * gamma(1.0 - b) * gamma(2.0 + b) / (2.0 * PI * b * b);
            assert!((h - expect).abs() < 1e-13 * expect);
        }
        assert!((beta_integral_factor(0.5).unwrap() - 3.0 * PI / 8.0).abs() < 1e-14);
    }

    #[test]
    fn h_grows_with_rho() {
        let mut prev = 0.0;
        for i in 0..20 {
            let rho = 0.05 * i as f64;
            let h = fractional_bound_h(&spec(rho, -0.1), 0.5).unwrap();
            assert!(h > prev);
            prev = h;
        }
    }

    #[test]
    fn fractional_gate_basics() {
        let sp = spec(0.4, -0.3);
        let g = fractional_gate(&sp, 0.5, 0.2, 0.0).unwrap();
        assert!(g.satisfied && g.g > 0.0 && g.c <= g.s);
        assert!(fractional_gate(&sp, 1.0, 0.2, 0.0).is_err());
        assert!(fractional_gate(&spec(1.0, 0.0), 0.5, 0.2, 0.0).is_err());
        assert_eq!(
            delta_norm_bound_fractional(&sp, 0.5, 1.0, 0.0).unwrap(),
            0.0
        );
        let mut prev = -1.0;
        for i in 0..50 {
            let x = g.s * i as f64 / 50.0;
            let b = delta_norm_bound_fractional(&sp, 0.5, 1.0, x).unwrap();
            assert!(b > prev);
            prev = b;
        }
        assert!(delta_norm_bound_fractional(&sp, 0.5, 1.0, g.s).is_err());
    }

    #[test]
    fn contour_gate_basics() {
        let sp = spec(0.5, -0.4);
        let iv = spectral_interval(&sp, 2.0, 1.0).unwrap();
        assert!((iv.m - 1.4f64.powi(-2)).abs() < 1e-15);
        assert!((iv.m_up - 4.0).abs() < 1e-15);
        let g = contour_gate(&sp, 2.0, 0.5, 1.0, 0.5 * iv.m, 0.1, 0.0).unwrap();
        assert!(g.satisfied && g.g_eps > 0.0 && g.c_eps <= g.s_eps);
        assert_eq!(g.theta_bound, 0.0);
        assert_eq!(delta_norm_bound_contour(&g).unwrap(), 0.0);
        assert!(contour_gate(&sp, -1.0, 0.5, 1.0, 0.1, 0.1, 0.0).is_err());
        assert!(contour_gate(&sp, 2.0, 0.5, 1.0, iv.m, 0.1, 0.0).is_err());

        let grid = default_epsilon_grid(iv.m);
        assert_eq!(grid.len(), 20);
        assert!(grid.iter().all(|&e| e > 0.0 && e < iv.m));
        let best = best_contour_gate(&sp, 2.0, 0.5, 1.0, &grid, 0.1, 0.0).unwrap();
        for &e in &grid {
            let g = contour_gate(&sp, 2.0, 0.5, 1.0, e, 0.1, 0.0).unwrap();
            assert!(g.g_eps <= best.g_eps);
        }
    }
}
