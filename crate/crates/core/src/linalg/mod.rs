//! Dense symmetric linear algebra and real matrix powers.
//!
//! [`spd_power_eig`] is the production path. [`spd_power_stieltjes`] and
//! [`spd_power_contour`] evaluate the same powers through integral
//! representations of the resolvent and exist to cross-check it.

mod contour;
pub mod quadrature;
mod stieltjes;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use contour::{spd_power_contour, ContourRule, ContourSpec};
pub use stieltjes::spd_power_stieltjes;

/// Relative asymmetry tolerated by [`SymMatrix::new`] before symmetrizing.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Smallest eigenvalue accepted by [`SpdMatrix::new`].
pub const SPD_TOL: f64 = 1e-12;

/// A dense real symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DMatrix<f64>", into = "DMatrix<f64>")]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Validates squareness, finiteness and symmetry (to `SYMMETRY_TOL`
    /// relative to the largest entry), then stores `(M + Mᵀ)/2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::invalid("empty matrix"));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = m.amax().max(1.0);
        let n = m.nrows();
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::invalid(format!(
                "matrix is not symmetric (max asymmetry {asym:e})"
            )));
        }
        Ok(Self::symmetrize(m))
    }

    /// Symmetrizes without the tolerance check. Callers guarantee the input is
    /// symmetric up to rounding.
    pub(crate) fn symmetrize(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        SymMatrix((m + t) * 0.5)
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_row_slice(d)))
    }

    pub fn from_row_slice(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, n, data))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl TryFrom<DMatrix<f64>> for SymMatrix {
    type Error = Error;
    fn try_from(m: DMatrix<f64>) -> Result<Self> {
        SymMatrix::new(m)
    }
}

impl From<SymMatrix> for DMatrix<f64> {
    fn from(s: SymMatrix) -> Self {
        s.0
    }
}

impl std::ops::Deref for SymMatrix {
    type Target = DMatrix<f64>;
    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigen {
    pub fn lambda_min(&self) -> f64 {
        self.values[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `Q f(Λ) Qᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let q = &self.vectors;
        let mut scaled = q.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let fl = f(lam);
            scaled.column_mut(j).scale_mut(fl);
        }
        &scaled * q.transpose()
    }
}

/// Symmetric eigendecomposition `X = QΛQᵀ` with ascending eigenvalues.
pub fn sym_eigen(x: &SymMatrix) -> Result<Eigen> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let se = SymmetricEigen::new(x.0.clone());
    let n = x.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| se.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Ok(Eigen { values, vectors })
}

pub fn lambda_min(m: &SymMatrix) -> Result<f64> {
    Ok(sym_eigen(m)?.lambda_min())
}

pub fn spectral_radius(m: &SymMatrix) -> Result<f64> {
    let e = sym_eigen(m)?;
    Ok(e.lambda_min().abs().max(e.lambda_max().abs()))
}

/// Spectral norm of a symmetric matrix (equals its spectral radius).
pub fn spectral_norm(m: &SymMatrix) -> Result<f64> {
    spectral_radius(m)
}

/// Largest singular value of an arbitrary (possibly rectangular) matrix.
/// Empty matrices have norm zero.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().max()
}

/// A symmetric positive-definite matrix with its eigendecomposition cached at
/// construction. Serializes as the plain matrix; deserializing re-validates.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SymMatrix", into = "SymMatrix")]
pub struct SpdMatrix {
    base: SymMatrix,
    eig: Eigen,
}

impl PartialEq for SpdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base
    }
}

impl TryFrom<SymMatrix> for SpdMatrix {
    type Error = Error;
    fn try_from(m: SymMatrix) -> Result<Self> {
        SpdMatrix::new(m)
    }
}

impl From<SpdMatrix> for SymMatrix {
    fn from(m: SpdMatrix) -> Self {
        m.base
    }
}

impl SpdMatrix {
    pub fn new(base: SymMatrix) -> Result<Self> {
        let eig = sym_eigen(&base)?;
        Self::with_eigen(base, eig)
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        Self::new(SymMatrix::new(m)?)
    }

    fn with_eigen(base: SymMatrix, eig: Eigen) -> Result<Self> {
        let lmin = eig.lambda_min();
        if !(lmin > SPD_TOL) {
            return Err(Error::NotPositiveDefinite { lambda_min: lmin });
        }
        Ok(SpdMatrix { base, eig })
    }

    /// For spectra that are positive by construction (powers and positive
    /// multiples of a validated matrix): only positivity and finiteness are
    /// checked, not the [`SPD_TOL`] floor.
    fn from_exact_spectrum(base: SymMatrix, eig: Eigen) -> Result<Self> {
        let lmin = eig.lambda_min();
        if !(lmin > 0.0) || !eig.lambda_max().is_finite() {
            return Err(Error::NotPositiveDefinite { lambda_min: lmin });
        }
        Ok(SpdMatrix { base, eig })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn sym(&self) -> &SymMatrix {
        &self.base
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.base.0
    }

    pub fn eigen(&self) -> &Eigen {
        &self.eig
    }

    pub fn lambda_min(&self) -> f64 {
        self.eig.lambda_min()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eig.lambda_max()
    }

    pub fn condition_number(&self) -> f64 {
        self.lambda_max() / self.lambda_min()
    }

    /// Principal submatrix on the given indices.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Result<SpdMatrix> {
        let n = self.dim();
        if idx.is_empty() || idx.iter().any(|&i| i >= n) {
            return Err(Error::invalid("principal submatrix indices out of range"));
        }
        let m = self.matrix();
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])]);
        SpdMatrix::new(SymMatrix::symmetrize(sub))
    }

    pub fn scale(&self, factor: f64) -> Result<SpdMatrix> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::invalid("scale factor must be positive and finite"));
        }
        let eig = Eigen {
            values: &self.eig.values * factor,
            vectors: self.eig.vectors.clone(),
        };
        Self::from_exact_spectrum(SymMatrix(self.matrix() * factor), eig)
    }
}

/// `X^β = Q Λ^β Qᵀ`. `β = 0` returns the identity.
pub fn spd_power_eig(x: &SpdMatrix, beta: f64) -> Result<SpdMatrix> {
    if !beta.is_finite() {
        return Err(Error::invalid("exponent must be finite"));
    }
    let n = x.dim();
    if beta == 0.0 {
        return SpdMatrix::with_eigen(
            SymMatrix::identity(n),
            Eigen {
                values: DVector::from_element(n, 1.0),
                vectors: DMatrix::identity(n, n),
            },
        );
    }
    let e = x.eigen();
    let powered = SymMatrix::symmetrize(e.map(|l| l.powf(beta)));
    // Reorder so the cached spectrum stays ascending (β < 0 reverses it).
    let mut values: Vec<(f64, usize)> = e
        .values
        .iter()
        .enumerate()
        .map(|(i, &l)| (l.powf(beta), i))
        .collect();
    values.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &(_, src)) in values.iter().enumerate() {
        vectors.set_column(dst, &e.vectors.column(src));
    }
    let eig = Eigen {
        values: DVector::from_iterator(n, values.iter().map(|v| v.0)),
        vectors,
    };
    SpdMatrix::from_exact_spectrum(powered, eig)
}

/// Relative spectral-norm distance `‖a − b‖ / ‖b‖` between two symmetric matrices.
pub fn relative_spectral_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let diff = SymMatrix::new(a - b)?;
    let nb = spectral_norm(&SymMatrix::new(b.clone())?)?;
    Ok(spectral_norm(&diff)? / nb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sym(n: usize, d: &[f64]) -> SymMatrix {
        SymMatrix::from_row_slice(n, d).unwrap()
    }

    #[test]
    fn eigen_of_small_matrices() {
        let e = sym_eigen(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 1.0, 1.0]);

        let e = sym_eigen(&SymMatrix::from_diagonal(&[4.0, 1.0]).unwrap()).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 4.0]);

        let e = sym_eigen(&sym(2, &[1.0, -0.5, -0.5, 1.0])).unwrap();
        assert_abs_diff_eq!(e.values[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 1.5, epsilon = 1e-14);
        let qqt = &e.vectors * e.vectors.transpose();
        assert!((qqt - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn non_finite_entries_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, f64::NAN, 1.0]);
        assert!(matches!(SymMatrix::new(m), Err(Error::NonFinite)));
    }

    #[test]
    fn asymmetric_input_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(SymMatrix::new(m).is_err());
    }

    #[test]
    fn norms_radius_and_lambda_min() {
        let i = SymMatrix::identity(3);
        assert_eq!(spectral_norm(&i).unwrap(), 1.0);
        assert_eq!(spectral_radius(&i).unwrap(), 1.0);
        assert_eq!(lambda_min(&i).unwrap(), 1.0);

        let d = SymMatrix::from_diagonal(&[-3.0, 2.0]).unwrap();
        assert_eq!(spectral_norm(&d).unwrap(), 3.0);
        assert_eq!(spectral_radius(&d).unwrap(), 3.0);
        assert_eq!(lambda_min(&d).unwrap(), -3.0);

        let a = sym(2, &[0.0, 0.5, 0.5, 0.0]);
        assert_abs_diff_eq!(spectral_norm(&a).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(lambda_min(&a).unwrap(), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn spd_rejects_small_eigenvalues() {
        let d = SymMatrix::from_diagonal(&[1.0, 1e-13]).unwrap();
        assert!(matches!(
            SpdMatrix::new(d),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn powers_by_eigendecomposition() {
        let i = SpdMatrix::new(SymMatrix::identity(3)).unwrap();
        for b in [-2.5, 0.0, 0.3, 7.0] {
            let p = spd_power_eig(&i, b).unwrap();
            assert!((p.matrix() - DMatrix::<f64>::identity(3, 3)).amax() < 1e-14);
        }

        let d = SpdMatrix::new(SymMatrix::from_diagonal(&[4.0, 9.0]).unwrap()).unwrap();
        let r = spd_power_eig(&d, 0.5).unwrap();
        assert_abs_diff_eq!(r.matrix()[(0, 0)], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.matrix()[(1, 1)], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.matrix()[(0, 1)], 0.0, epsilon = 1e-14);

        let c = SpdMatrix::new(sym(2, &[4.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0])).unwrap();
        let inv = spd_power_eig(&c, -1.0).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 1.0]);
        assert!((inv.matrix() - expect).amax() < 1e-14);
    }

    #[test]
    fn cached_spectrum_stays_ascending_for_negative_powers() {
        let d = SpdMatrix::new(SymMatrix::from_diagonal(&[1.0, 2.0, 5.0]).unwrap()).unwrap();
        let p = spd_power_eig(&d, -1.0).unwrap();
        assert_abs_diff_eq!(p.lambda_min(), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(p.lambda_max(), 1.0, epsilon = 1e-15);
        let fresh = sym_eigen(p.sym()).unwrap();
        assert!((fresh.values - &p.eigen().values).amax() < 1e-14);
    }
}
