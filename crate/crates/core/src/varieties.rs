//! Samplers and Jacobian audits for the auxiliary real-algebraic varieties
//! that control the failure set of phaseless measurements.
//!
//! The ambient space is `R^{4n}` with coordinates `(v, w, x, y)`. The
//! variety `X` is cut out by
//!
//! ```text
//! f_i = x_i^2 + y_i^2 - 1          (i = 1..n)
//! g   = sum_j (v_j^2 + w_j^2) - 1
//! h_1 = sum_j (v_j^2 + w_j^2) x_j
//! h_2 = sum_j (v_j^2 + w_j^2) y_j
//! ```
//!
//! and `Y` is its slice `w_1 = w_2 = 0`. Points are produced constructively
//! (unit phases for `x + iy`, a feasible probability vector for the moduli
//! of `v + iw`), so all defining residuals vanish to machine precision by
//! construction. Smoothness and dimension are audited numerically: the full
//! Jacobian at general sampled points must have rank `n+3` on `X` and `n+5`
//! on `Y`, with corank `3n-3` and `3n-5`.
//!
//! The map `S: (v,w,x,y) -> (v+iw, (v+iw) o (x+iy))` carries `X` into the
//! set `W` of orthonormal 2-frames with componentwise equal moduli; the
//! index swap `phi_j` is the linear bijection between the chart slices
//! `W_ij` and `W'_ij`. Both are exercised here, along with the ledger of
//! dimension bounds they imply.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{rank_with_tol, CVector, Complex64, RMatrix, RVector, DEFAULT_RANK_TOL};

/// Residual tolerance a point must satisfy before Jacobian analysis.
pub const POINT_RESIDUAL_TOL: f64 = 1e-10;

/// Default tolerance for the `W`-membership predicate.
pub const W_MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum VarietyError {
    #[error("variety sampling requires n >= 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("no feasible moduli vector found after {0} phase resamples")]
    SamplerInfeasible(usize),
    #[error("point violates the defining equations: max residual {0:.3e}")]
    ResidualTooLarge(f64),
    #[error("component index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
}

/// Which variety a point lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum VarietyKind {
    X,
    Y,
}

/// A point `(v, w, x, y)` in `R^{4n}` on the variety of its kind.
#[derive(Debug, Clone)]
pub struct VarietyPoint {
    pub kind: VarietyKind,
    pub v: RVector,
    pub w: RVector,
    pub x: RVector,
    pub y: RVector,
}

/// Values of the defining equations at a point.
#[derive(Debug, Clone, Serialize)]
pub struct VarietyResiduals {
    /// `max_i |x_i^2 + y_i^2 - 1|`
    pub f_max: f64,
    pub g: f64,
    pub h1: f64,
    pub h2: f64,
}

impl VarietyResiduals {
    pub fn max_abs(&self) -> f64 {
        self.f_max
            .abs()
            .max(self.g.abs())
            .max(self.h1.abs())
            .max(self.h2.abs())
    }
}

impl VarietyPoint {
    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn residuals(&self) -> VarietyResiduals {
        let n = self.n();
        let mut f_max = 0.0f64;
        let mut g = -1.0;
        let mut h1 = 0.0;
        let mut h2 = 0.0;
        for j in 0..n {
            let f = self.x[j] * self.x[j] + self.y[j] * self.y[j] - 1.0;
            f_max = f_max.max(f.abs());
            let p = self.v[j] * self.v[j] + self.w[j] * self.w[j];
            g += p;
            h1 += p * self.x[j];
            h2 += p * self.y[j];
        }
        VarietyResiduals { f_max, g, h1, h2 }
    }

    /// Flattened `(v, w, x, y)` coordinates.
    pub fn coordinates(&self) -> RVector {
        let n = self.n();
        let mut out = RVector::zeros(4 * n);
        for j in 0..n {
            out[j] = self.v[j];
            out[n + j] = self.w[j];
            out[2 * n + j] = self.x[j];
            out[3 * n + j] = self.y[j];
        }
        out
    }

    pub fn from_coordinates(kind: VarietyKind, coords: &RVector) -> Self {
        let n = coords.len() / 4;
        Self {
            kind,
            v: coords.rows(0, n).into_owned(),
            w: coords.rows(n, n).into_owned(),
            x: coords.rows(2 * n, n).into_owned(),
            y: coords.rows(3 * n, n).into_owned(),
        }
    }
}

/// Solve for a probability vector satisfying `sum p = 1`,
/// `sum p cos(theta) = 0`, `sum p sin(theta) = 0` by least-squares
/// projection of the uniform vector onto the constraint subspace. Returns
/// `None` when the projection leaves the positive orthant (treated as an
/// infeasible phase draw by the caller).
fn feasible_moduli(cos: &RVector, sin: &RVector) -> Option<RVector> {
    let n = cos.len();
    let mut a = RMatrix::zeros(3, n);
    for j in 0..n {
        a[(0, j)] = 1.0;
        a[(1, j)] = cos[j];
        a[(2, j)] = sin[j];
    }
    let p0 = RVector::from_element(n, 1.0 / n as f64);
    let b = RVector::from_vec(vec![1.0, 0.0, 0.0]);
    let gram = &a * a.transpose();
    let rhs = &b - &a * &p0;
    let correction = gram.lu().solve(&rhs)?;
    let p = p0 + a.transpose() * correction;
    let min = p.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < 1e-4 {
        return None;
    }
    // The 3x3 solve can lose accuracy when the phases nearly align.
    let res = (&a * &p - &b).amax();
    if res > 1e-12 {
        return None;
    }
    Some(p)
}

/// Draw a point on `X` (or its slice `Y`).
///
/// Phases `theta_j` put `x_j + i y_j` on the unit circle; a feasible
/// probability vector `p` balances the two linear constraints; phases
/// `phi_j` distribute the moduli as `v_j + i w_j = sqrt(p_j) e^{i phi_j}`.
/// For kind `Y`, `phi_1 = phi_2 = 0`, which pins `w_1 = w_2 = 0` exactly.
/// Phases are resampled on infeasibility, up to 100 attempts.
pub fn sample_variety_point<R: Rng + ?Sized>(
    kind: VarietyKind,
    n: usize,
    rng: &mut R,
) -> Result<VarietyPoint, VarietyError> {
    if n < 2 {
        return Err(VarietyError::DimensionTooSmall(n));
    }
    const MAX_RESAMPLES: usize = 100;
    for _ in 0..MAX_RESAMPLES {
        let mut theta = RVector::from_fn(n, |_, _| rng.gen_range(0.0..std::f64::consts::TAU));
        let p = if n == 2 {
            // Two points on the circle balance only when antipodal.
            theta[1] = theta[0] + std::f64::consts::PI;
            if theta[1] >= std::f64::consts::TAU {
                theta[1] -= std::f64::consts::TAU;
            }
            Some(RVector::from_element(2, 0.5))
        } else {
            let cos = theta.map(f64::cos);
            let sin = theta.map(f64::sin);
            feasible_moduli(&cos, &sin)
        };
        let Some(p) = p else { continue };

        let mut phi = RVector::from_fn(n, |_, _| rng.gen_range(0.0..std::f64::consts::TAU));
        if kind == VarietyKind::Y {
            phi[0] = 0.0;
            phi[1] = 0.0;
        }
        let x = theta.map(f64::cos);
        let y = theta.map(f64::sin);
        let mut v = RVector::zeros(n);
        let mut w = RVector::zeros(n);
        for j in 0..n {
            let r = p[j].sqrt();
            v[j] = r * phi[j].cos();
            w[j] = r * phi[j].sin();
        }
        let point = VarietyPoint { kind, v, w, x, y };
        if point.residuals().max_abs() < 1e-12 {
            return Ok(point);
        }
    }
    Err(VarietyError::SamplerInfeasible(MAX_RESAMPLES))
}

/// Analytic Jacobian of the defining equations at `p`, with respect to all
/// `4n` coordinates in `(v, w, x, y)` order. Shape `(n+3) x 4n` for kind
/// `X`; kind `Y` appends the rows `d/dw_1`, `d/dw_2`.
pub fn jacobian(p: &VarietyPoint) -> RMatrix {
    let n = p.n();
    let rows = match p.kind {
        VarietyKind::X => n + 3,
        VarietyKind::Y => n + 5,
    };
    let mut jac = RMatrix::zeros(rows, 4 * n);
    for i in 0..n {
        jac[(i, 2 * n + i)] = 2.0 * p.x[i];
        jac[(i, 3 * n + i)] = 2.0 * p.y[i];
    }
    for j in 0..n {
        let pv = 2.0 * p.v[j];
        let pw = 2.0 * p.w[j];
        let modulus = p.v[j] * p.v[j] + p.w[j] * p.w[j];
        jac[(n, j)] = pv;
        jac[(n, n + j)] = pw;
        jac[(n + 1, j)] = pv * p.x[j];
        jac[(n + 1, n + j)] = pw * p.x[j];
        jac[(n + 1, 2 * n + j)] = modulus;
        jac[(n + 2, j)] = pv * p.y[j];
        jac[(n + 2, n + j)] = pw * p.y[j];
        jac[(n + 2, 3 * n + j)] = modulus;
    }
    if p.kind == VarietyKind::Y {
        jac[(n + 3, n)] = 1.0;
        jac[(n + 4, n + 1)] = 1.0;
    }
    jac
}

/// Rank audit of the Jacobian at one sampled point.
#[derive(Debug, Clone, Serialize)]
pub struct JacobianReport {
    pub kind: VarietyKind,
    pub n: usize,
    pub residuals: VarietyResiduals,
    pub rank: usize,
    /// `4n - rank`: the dimension the variety has at this point if smooth.
    pub corank_dimension: usize,
    /// `sigma_rank / sigma_1` of the Jacobian.
    pub spectral_gap: f64,
    pub singular_values: Vec<f64>,
}

/// Assemble the full Jacobian at `p` and report its rank under the default
/// tolerance policy. Fails when `p` does not satisfy the defining equations.
pub fn jacobian_rank_report(p: &VarietyPoint) -> Result<JacobianReport, VarietyError> {
    let residuals = p.residuals();
    if residuals.max_abs() > POINT_RESIDUAL_TOL {
        return Err(VarietyError::ResidualTooLarge(residuals.max_abs()));
    }
    let jac = jacobian(p);
    let report = rank_with_tol(&jac, DEFAULT_RANK_TOL);
    Ok(JacobianReport {
        kind: p.kind,
        n: p.n(),
        residuals,
        rank: report.rank,
        corank_dimension: 4 * p.n() - report.rank,
        spectral_gap: report.spectral_gap(),
        singular_values: report.singular_values,
    })
}

/// A pair of complex n-vectors; the frame predicates are applied by the
/// operations rather than enforced by the type.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePair {
    pub u1: CVector,
    pub u2: CVector,
}

/// `(v, w, x, y) -> (v + iw, (v + iw) o (x + iy))` with `o` the Hadamard
/// product. Carries `X` into `W`.
pub fn s_map(p: &VarietyPoint) -> FramePair {
    let n = p.n();
    let u1 = CVector::from_fn(n, |j, _| Complex64::new(p.v[j], p.w[j]));
    let u2 = CVector::from_fn(n, |j, _| u1[j] * Complex64::new(p.x[j], p.y[j]));
    FramePair { u1, u2 }
}

/// Diagnostics for the `W`-membership predicate: unit norms, orthogonality
/// and componentwise equal moduli.
#[derive(Debug, Clone, Serialize)]
pub struct WMembership {
    pub passed: bool,
    pub norm_u1_error: f64,
    pub norm_u2_error: f64,
    pub orthogonality_error: f64,
    pub max_moduli_error: f64,
}

pub fn w_membership(f: &FramePair, tol: f64) -> WMembership {
    let norm_u1_error = (f.u1.norm() - 1.0).abs();
    let norm_u2_error = (f.u2.norm() - 1.0).abs();
    let orthogonality_error = f.u1.dotc(&f.u2).norm();
    let max_moduli_error = f
        .u1
        .iter()
        .zip(f.u2.iter())
        .map(|(a, b)| (a.norm() - b.norm()).abs())
        .fold(0.0, f64::max);
    let passed = norm_u1_error < tol
        && norm_u2_error < tol
        && orthogonality_error < tol
        && max_moduli_error < tol;
    WMembership {
        passed,
        norm_u1_error,
        norm_u2_error,
        orthogonality_error,
        max_moduli_error,
    }
}

/// Component swap at index `j` (0-based): sends `(u1_j, u2_j)` to
/// `(u2_j, conj(u1_j))`, identity elsewhere. A linear bijection of
/// `R^{4n}`; see [`swap_map_phi_inverse`] for its exact inverse.
pub fn swap_map_phi(j: usize, f: &FramePair) -> Result<FramePair, VarietyError> {
    let n = f.u1.len();
    if j >= n {
        return Err(VarietyError::IndexOutOfRange { index: j, n });
    }
    let mut out = f.clone();
    out.u1[j] = f.u2[j];
    out.u2[j] = f.u1[j].conj();
    Ok(out)
}

/// Exact inverse of [`swap_map_phi`]: sends `(u1_j, u2_j)` to
/// `(conj(u2_j), u1_j)`.
pub fn swap_map_phi_inverse(j: usize, f: &FramePair) -> Result<FramePair, VarietyError> {
    let n = f.u1.len();
    if j >= n {
        return Err(VarietyError::IndexOutOfRange { index: j, n });
    }
    let mut out = f.clone();
    out.u1[j] = f.u2[j].conj();
    out.u2[j] = f.u1[j];
    Ok(out)
}

/// Is `f` in the chart slice `W_ij`: in `W`, with `u1_i != 0`, `u2_j != 0`
/// and both of those components real.
pub fn in_wij(f: &FramePair, i: usize, j: usize, tol: f64) -> bool {
    w_membership(f, tol).passed
        && f.u1[i].norm() > tol
        && f.u2[j].norm() > tol
        && f.u1[i].im.abs() < tol
        && f.u2[j].im.abs() < tol
}

/// Is `f` in the swapped slice `W'_ij`: in `W`, with `u1_i != 0`,
/// `u1_j != 0` and both of those components real.
pub fn in_wij_prime(f: &FramePair, i: usize, j: usize, tol: f64) -> bool {
    w_membership(f, tol).passed
        && f.u1[i].norm() > tol
        && f.u1[j].norm() > tol
        && f.u1[i].im.abs() < tol
        && f.u1[j].im.abs() < tol
}

/// Sample a point of `W_ij` by pushing an `X`-sample through the `S` map
/// and rotating each vector by a global phase so that `u1_i` and `u2_j`
/// become real. Global phases preserve membership in `W`.
pub fn sample_wij<R: Rng + ?Sized>(
    n: usize,
    i: usize,
    j: usize,
    rng: &mut R,
) -> Result<FramePair, VarietyError> {
    if i >= n || j >= n {
        return Err(VarietyError::IndexOutOfRange {
            index: i.max(j),
            n,
        });
    }
    const MAX_DRAWS: usize = 100;
    for _ in 0..MAX_DRAWS {
        let p = sample_variety_point(VarietyKind::X, n, rng)?;
        let frame = s_map(&p);
        if frame.u1[i].norm() < 1e-3 || frame.u2[j].norm() < 1e-3 {
            continue;
        }
        let phase1 = frame.u1[i] / frame.u1[i].norm();
        let phase2 = frame.u2[j] / frame.u2[j].norm();
        let u1 = frame.u1.map(|z| z * phase1.conj());
        let u2 = frame.u2.map(|z| z * phase2.conj());
        return Ok(FramePair { u1, u2 });
    }
    Err(VarietyError::SamplerInfeasible(MAX_DRAWS))
}

/// The ledger of dimension bounds, all integer arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DimensionLedger {
    pub n: i64,
    /// `dim W <= 3n - 3`
    pub dim_w_bound: i64,
    /// `dim W_ij <= 3n - 5`
    pub dim_wij_bound: i64,
    /// `dim P'_a <= 4(3n-3) - 2`
    pub dim_p_alpha_prime_bound: i64,
    /// `dim P_a <= 4(3n-3) + 4(n-2)^2`
    pub dim_p_alpha_bound: i64,
    /// `dim P_a / G' <= 3n^2 - 2`
    pub dim_p_alpha_mod_gprime: i64,
    /// `dim M / G = 3n^2`
    pub dim_m_mod_g: i64,
    /// `4(3n-3) + 4(n-2)^2 - (2 + (n-2)^2) = 3n^2 - 2`
    pub identity_holds: bool,
    /// `3n^2 - 2 < 3n^2`
    pub strictly_below_ambient: bool,
}

/// Evaluate every dimension bound at `n`, check the reduction identity
/// `4(3n-3) + 4(n-2)^2 - (2 + (n-2)^2) = 3n^2 - 2` and the strict
/// comparison against the ambient quotient dimension `3n^2`.
pub fn dimension_ledger(n: usize) -> Result<DimensionLedger, VarietyError> {
    if n < 2 {
        return Err(VarietyError::DimensionTooSmall(n));
    }
    let n = n as i64;
    let dim_w_bound = 3 * n - 3;
    let dim_wij_bound = 3 * n - 5;
    let dim_p_alpha_prime_bound = 4 * (3 * n - 3) - 2;
    let fiber = (n - 2) * (n - 2);
    let dim_p_alpha_bound = 4 * (3 * n - 3) + 4 * fiber;
    let dim_p_alpha_mod_gprime = 3 * n * n - 2;
    let dim_m_mod_g = 3 * n * n;
    let identity_holds = dim_p_alpha_bound - (2 + fiber) == dim_p_alpha_mod_gprime;
    let strictly_below_ambient = dim_p_alpha_mod_gprime < dim_m_mod_g;
    Ok(DimensionLedger {
        n,
        dim_w_bound,
        dim_wij_bound,
        dim_p_alpha_prime_bound,
        dim_p_alpha_bound,
        dim_p_alpha_mod_gprime,
        dim_m_mod_g,
        identity_holds,
        strictly_below_ambient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn constraints(kind: VarietyKind, coords: &RVector) -> RVector {
        let p = VarietyPoint::from_coordinates(kind, coords);
        let n = p.n();
        let rows = match kind {
            VarietyKind::X => n + 3,
            VarietyKind::Y => n + 5,
        };
        let mut out = RVector::zeros(rows);
        for i in 0..n {
            out[i] = p.x[i] * p.x[i] + p.y[i] * p.y[i] - 1.0;
        }
        let r = p.residuals();
        out[n] = r.g;
        out[n + 1] = r.h1;
        out[n + 2] = r.h2;
        if kind == VarietyKind::Y {
            out[n + 3] = p.w[0];
            out[n + 4] = p.w[1];
        }
        out
    }

    #[test]
    fn sampler_respects_defining_equations() {
        let mut rng = SeededRng::new(31, 0);
        for n in [2usize, 3, 5, 8] {
            for _ in 0..20 {
                let p = sample_variety_point(VarietyKind::X, n, &mut rng).unwrap();
                assert!(p.residuals().max_abs() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn sampler_forces_structure_at_n2() {
        let mut rng = SeededRng::new(32, 0);
        let p = sample_variety_point(VarietyKind::X, 2, &mut rng).unwrap();
        // Antipodal phases and balanced moduli are the only option.
        assert!((p.x[0] + p.x[1]).abs() < 1e-12);
        assert!((p.y[0] + p.y[1]).abs() < 1e-12);
        let p0 = p.v[0] * p.v[0] + p.w[0] * p.w[0];
        let p1 = p.v[1] * p.v[1] + p.w[1] * p.w[1];
        assert!((p0 - 0.5).abs() < 1e-12 && (p1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn y_sampler_pins_first_two_imaginary_parts() {
        let mut rng = SeededRng::new(33, 0);
        for n in [2usize, 4, 6] {
            let p = sample_variety_point(VarietyKind::Y, n, &mut rng).unwrap();
            assert_eq!(p.w[0], 0.0);
            assert_eq!(p.w[1], 0.0);
            assert!(p.residuals().max_abs() < 1e-10);
        }
    }

    #[test]
    fn sampler_rejects_n1() {
        let mut rng = SeededRng::new(34, 0);
        assert!(matches!(
            sample_variety_point(VarietyKind::X, 1, &mut rng),
            Err(VarietyError::DimensionTooSmall(1))
        ));
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let mut rng = SeededRng::new(35, 0);
        for kind in [VarietyKind::X, VarietyKind::Y] {
            for n in [3usize, 5] {
                let p = sample_variety_point(kind, n, &mut rng).unwrap();
                let jac = jacobian(&p);
                let coords = p.coordinates();
                let h = 1e-6;
                for col in 0..4 * n {
                    let mut plus = coords.clone();
                    let mut minus = coords.clone();
                    plus[col] += h;
                    minus[col] -= h;
                    let fd = (constraints(kind, &plus) - constraints(kind, &minus)) / (2.0 * h);
                    for row in 0..jac.nrows() {
                        let a = jac[(row, col)];
                        let b = fd[row];
                        let scale = a.abs().max(b.abs()).max(1.0);
                        assert!(
                            (a - b).abs() / scale < 1e-6,
                            "kind={kind:?} n={n} row={row} col={col}: {a} vs {b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn jacobian_ranks_match_expected_dimensions() {
        let mut rng = SeededRng::new(36, 0);
        // Corank 3n-3 on X, 3n-5 on Y.
        let px = sample_variety_point(VarietyKind::X, 4, &mut rng).unwrap();
        let rx = jacobian_rank_report(&px).unwrap();
        assert_eq!(rx.rank, 7);
        assert_eq!(rx.corank_dimension, 9);

        let py = sample_variety_point(VarietyKind::Y, 4, &mut rng).unwrap();
        let ry = jacobian_rank_report(&py).unwrap();
        assert_eq!(ry.rank, 9);
        assert_eq!(ry.corank_dimension, 7);

        let p2 = sample_variety_point(VarietyKind::X, 2, &mut rng).unwrap();
        let r2 = jacobian_rank_report(&p2).unwrap();
        assert_eq!(r2.rank, 5);
        assert_eq!(r2.corank_dimension, 3);
    }

    #[test]
    fn rank_report_rejects_off_variety_points() {
        let mut rng = SeededRng::new(37, 0);
        let mut p = sample_variety_point(VarietyKind::X, 3, &mut rng).unwrap();
        p.x[0] += 0.1;
        assert!(matches!(
            jacobian_rank_report(&p),
            Err(VarietyError::ResidualTooLarge(_))
        ));
    }

    #[test]
    fn s_map_lands_in_w() {
        let mut rng = SeededRng::new(38, 0);
        for n in [2usize, 4, 7] {
            for _ in 0..10 {
                let p = sample_variety_point(VarietyKind::X, n, &mut rng).unwrap();
                let f = s_map(&p);
                let wm = w_membership(&f, W_MEMBERSHIP_TOL);
                assert!(wm.passed, "n={n}: {wm:?}");
                assert!((f.u1.norm() - 1.0).abs() < 1e-10);
                assert!((f.u2.norm() - 1.0).abs() < 1e-10);
                for j in 0..n {
                    assert!((f.u1[j].norm() - f.u2[j].norm()).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn w_membership_cases() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = CVector::from_vec(vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)]);
        let minus = CVector::from_vec(vec![Complex64::new(s, 0.0), Complex64::new(-s, 0.0)]);
        assert!(w_membership(
            &FramePair {
                u1: plus.clone(),
                u2: minus.clone()
            },
            W_MEMBERSHIP_TOL
        )
        .passed);

        let e1 = CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let e2 = CVector::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert!(!w_membership(
            &FramePair {
                u1: e1.clone(),
                u2: e2
            },
            W_MEMBERSHIP_TOL
        )
        .passed);
        // Same unit vector twice: moduli match but not orthogonal.
        assert!(!w_membership(
            &FramePair {
                u1: plus.clone(),
                u2: plus
            },
            W_MEMBERSHIP_TOL
        )
        .passed);
    }

    #[test]
    fn swap_map_round_trip_is_exact() {
        let mut rng = SeededRng::new(39, 0);
        let p = sample_variety_point(VarietyKind::X, 5, &mut rng).unwrap();
        let f = s_map(&p);
        for j in 0..5 {
            let fwd = swap_map_phi(j, &f).unwrap();
            let back = swap_map_phi_inverse(j, &fwd).unwrap();
            assert_eq!(back.u1, f.u1);
            assert_eq!(back.u2, f.u2);
            // Moduli at j swap exactly.
            assert_eq!(fwd.u1[j].norm(), f.u2[j].norm());
            assert_eq!(fwd.u2[j].norm(), f.u1[j].norm());
        }
        assert!(matches!(
            swap_map_phi(9, &f),
            Err(VarietyError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn swap_map_sends_wij_to_wij_prime() {
        let mut rng = SeededRng::new(40, 0);
        for _ in 0..20 {
            let (i, j) = (0usize, 2usize);
            let f = sample_wij(4, i, j, &mut rng).unwrap();
            assert!(in_wij(&f, i, j, W_MEMBERSHIP_TOL));
            let image = swap_map_phi(j, &f).unwrap();
            assert!(in_wij_prime(&image, i, j, W_MEMBERSHIP_TOL));
        }
    }

    #[test]
    fn ledger_matches_frozen_rows() {
        let l6 = dimension_ledger(6).unwrap();
        assert_eq!(
            (
                l6.dim_w_bound,
                l6.dim_wij_bound,
                l6.dim_p_alpha_prime_bound,
                l6.dim_p_alpha_bound,
                l6.dim_p_alpha_mod_gprime,
                l6.dim_m_mod_g
            ),
            (15, 13, 58, 124, 106, 108)
        );
        let l2 = dimension_ledger(2).unwrap();
        assert_eq!(
            (
                l2.dim_w_bound,
                l2.dim_wij_bound,
                l2.dim_p_alpha_prime_bound,
                l2.dim_p_alpha_bound,
                l2.dim_p_alpha_mod_gprime,
                l2.dim_m_mod_g
            ),
            (3, 1, 10, 12, 10, 12)
        );
        assert!(l2.strictly_below_ambient);
        for n in 2..=50 {
            let l = dimension_ledger(n).unwrap();
            assert!(l.identity_holds, "n={n}");
            assert!(l.strictly_below_ambient, "n={n}");
        }
    }
}
