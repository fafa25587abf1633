//! Dense complex linear algebra substrate: Haar-distributed unitaries,
//! Hermitian eigendecomposition, singular values and tolerance-based rank.
//!
//! Everything here is deterministic given its inputs; randomness only enters
//! through an explicit [`rand::Rng`].

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub type Complex64 = Complex<f64>;
/// Dense complex matrix, row/column indexed.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = DVector<Complex64>;
/// Dense real matrix.
pub type RMatrix = DMatrix<f64>;
/// Dense real column vector.
pub type RVector = DVector<f64>;

/// Relative singular-value threshold used for rank decisions unless a caller
/// overrides it. Sits well inside the gap between genuine singular values at
/// desk scale and the numerical noise floor.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Entrywise tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max |H - H*| entry = {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    #[error("eigensolver failed to converge")]
    EigFailed,
}

/// Draw a complex matrix with iid standard complex Gaussian entries.
pub fn complex_ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(
            rng.sample::<f64, _>(StandardNormal) * inv_sqrt2,
            rng.sample::<f64, _>(StandardNormal) * inv_sqrt2,
        )
    })
}

/// Draw an `n x n` unitary from the Haar distribution.
///
/// QR of a complex Ginibre matrix, with each column of Q rephased by the
/// corresponding diagonal entry of R. The rephasing makes the factorization
/// unique (positive-real R diagonal convention) so the law is exactly Haar
/// rather than merely approximately so.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    assert!(n >= 1, "haar_unitary requires n >= 1");
    let g = complex_ginibre(n, n, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Draw a random complex vector with iid standard complex Gaussian entries.
pub fn complex_gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_fn(n, |_, _| {
        Complex64::new(
            rng.sample::<f64, _>(StandardNormal) * inv_sqrt2,
            rng.sample::<f64, _>(StandardNormal) * inv_sqrt2,
        )
    })
}

/// Draw a uniformly random unit vector in `C^n`.
pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    loop {
        let v = complex_gaussian_vector(n, rng);
        let norm = v.norm();
        if norm > 1e-8 {
            return v / Complex64::new(norm, 0.0);
        }
    }
}

/// `|| U* U - I ||_F`, the deviation of `u` from unitarity.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let n = u.ncols();
    (u.adjoint() * u - CMatrix::identity(n, n)).norm()
}

/// Max entrywise deviation `|H - H*|`.
pub fn hermitian_deviation(h: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            dev = dev.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Rank-1 projector `x x*`.
pub fn outer(x: &CVector) -> CMatrix {
    x * x.adjoint()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Real eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub eigenvectors: CMatrix,
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Rejects non-square or non-Hermitian inputs (entrywise deviation above
/// [`HERMITIAN_TOL`] relative to the largest entry). The input is
/// symmetrized before factorization so that roundoff dust in the
/// off-diagonal parts cannot leak into the result.
pub fn hermitian_eig(h: &CMatrix) -> Result<HermitianEig, LinalgError> {
    if h.nrows() != h.ncols() {
        return Err(LinalgError::NotSquare {
            rows: h.nrows(),
            cols: h.ncols(),
        });
    }
    let scale = h.iter().map(|z| z.norm()).fold(0.0_f64, f64::max).max(1.0);
    let dev = hermitian_deviation(h);
    if dev > HERMITIAN_TOL * scale {
        return Err(LinalgError::NotHermitian { deviation: dev });
    }
    Ok(hermitian_eig_unchecked(h))
}

/// Same as [`hermitian_eig`] but skips the Hermiticity check. For inner
/// loops operating on matrices that are Hermitian by construction.
pub fn hermitian_eig_unchecked(h: &CMatrix) -> HermitianEig {
    let n = h.nrows();
    let sym = (h + h.adjoint()).scale(0.5);
    let se = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].partial_cmp(&se.eigenvalues[a]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &se.eigenvectors.column(src));
    }
    HermitianEig {
        eigenvalues,
        eigenvectors,
    }
}

/// Singular values of a real or complex matrix, sorted descending.
pub fn singular_values<T>(m: &DMatrix<T>) -> Vec<f64>
where
    T: ComplexField<RealField = f64>,
{
    let svd = m.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Numerical rank of a matrix together with its singular-value diagnostics.
#[derive(Debug, Clone)]
pub struct RankReport {
    pub rank: usize,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
    /// Absolute cutoff that was applied (`rel_tol * sigma_1`).
    pub threshold: f64,
}

impl RankReport {
    /// Ratio `sigma_rank / sigma_1`; 0 when rank is 0, infinity-free.
    pub fn spectral_gap(&self) -> f64 {
        if self.rank == 0 || self.singular_values.is_empty() {
            return 0.0;
        }
        let s1 = self.singular_values[0];
        if s1 == 0.0 {
            0.0
        } else {
            self.singular_values[self.rank - 1] / s1
        }
    }
}

/// Count singular values above `rel_tol * sigma_1`.
///
/// An all-zero matrix has rank 0; this is a result, not an error.
pub fn rank_with_tol<T>(m: &DMatrix<T>, rel_tol: f64) -> RankReport
where
    T: ComplexField<RealField = f64>,
{
    let sv = singular_values(m);
    let sigma1 = sv.first().copied().unwrap_or(0.0);
    let threshold = rel_tol * sigma1;
    let rank = if sigma1 == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > threshold).count()
    };
    RankReport {
        rank,
        singular_values: sv,
        threshold,
    }
}
