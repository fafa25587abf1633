//! Certification of injectivity modulo phase.
//!
//! An ensemble fails to separate some pair of states exactly when the
//! nullspace of its measurement map contains a traceless rank-2 Hermitian
//! matrix with eigenvalues `(1, -1)` (after Frobenius normalization to
//! `sqrt(2)`). The certifier attacks this from two independent directions:
//!
//! * a multistart search for a rank-2 indefinite element inside the
//!   numerical nullspace of the realified measurement operator, and
//! * a direct multistart search for a state pair `(x, y)` with equal
//!   measurements, kept apart by a separation barrier.
//!
//! Any candidate from either route is polished with a barrier-free descent
//! on the measurement mismatch and then revalidated from scratch. A found
//! collision is therefore checkable; absence of one is evidence, not proof,
//! and the report says so through the verdict semantics. For `n = 2` an
//! exact oracle based on the measurement geometry of qubits cross-checks
//! every verdict.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::linalg::{
    hermitian_eig, hermitian_eig_unchecked, outer, rank_with_tol, unitarity_error, CMatrix,
    CVector, Complex64, LinalgError, RMatrix, RVector, DEFAULT_RANK_TOL,
};
use crate::measurement::{unrealify, MeasurementError, UnitaryEnsemble};
use crate::rng::SeededRng;

#[derive(Debug, Error)]
pub enum InjectivityError {
    #[error("the exact oracle is only defined for n = 2, got n = {0}")]
    BlochRequiresN2(usize),
    #[error("witness matrix does not have the (1, -1) eigenvalue shape: {0:?}")]
    MalformedWitness(Vec<f64>),
    #[error("certifier verdict {verdict:?} contradicts the exact n=2 oracle {oracle:?}")]
    OracleMismatch {
        verdict: Verdict,
        oracle: OracleVerdict,
    },
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Search hyperparameters shared by the nullspace and direct searches.
#[derive(Debug, Clone, Serialize)]
pub struct SearchParams {
    /// Number of independent random starts.
    pub multistarts: usize,
    /// Iteration cap for each projected-gradient descent.
    pub max_iterations: usize,
    /// Stop when the tangential gradient norm falls below this.
    pub gradient_tol: f64,
    /// A rank-2 objective below this counts as a detection.
    pub success_threshold: f64,
    /// Strength of the separation barrier in the direct search.
    pub barrier_mu: f64,
    /// Direct-search residual below which the barrier-free polish runs.
    pub polish_trigger: f64,
    /// Max infinity-norm measurement mismatch of a validated witness.
    pub witness_residual_tol: f64,
    /// Tolerance on the `(1, -1)` spectrum of a validated witness.
    pub eigenvalue_tol: f64,
    /// Minimum Frobenius distance between the lifted states of a witness.
    pub min_lift_distance: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            multistarts: 64,
            max_iterations: 2000,
            gradient_tol: 1e-12,
            success_threshold: 1e-12,
            barrier_mu: 1e-8,
            polish_trigger: 1e-6,
            witness_residual_tol: 1e-10,
            eigenvalue_tol: 1e-8,
            min_lift_distance: 1e-6,
        }
    }
}

/// Certifier configuration.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CertifyConfig {
    pub search: SearchParams,
    /// Relative singular-value tolerance for the nullspace dimension.
    #[serde(skip)]
    pub rank_rel_tol: Option<f64>,
}

impl CertifyConfig {
    pub fn rank_tol(&self) -> f64 {
        self.rank_rel_tol.unwrap_or(DEFAULT_RANK_TOL)
    }
}

/// Orthonormal (Frobenius) basis of the Hermitian nullspace of the
/// measurement map. Every element is traceless: each measurement block of a
/// nullspace element sums to its trace, and all blocks vanish.
#[derive(Debug, Clone)]
pub struct NullspaceBasis {
    n: usize,
    elements: Vec<CMatrix>,
}

impl NullspaceBasis {
    pub fn dimension(&self) -> usize {
        self.elements.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }
}

/// Compute the Hermitian nullspace of the realified measurement operator.
///
/// The dimension is `n^2 - rank`, with rank determined by the relative
/// singular-value threshold `rank_rel_tol`. The operator matrix is padded
/// with zero rows to a square shape so the SVD returns the complete set of
/// right singular vectors.
pub fn nullspace_basis(e: &UnitaryEnsemble, rank_rel_tol: f64) -> NullspaceBasis {
    let n = e.n();
    let dim_h = n * n;
    let op = e.realified();
    let rank = rank_with_tol(&op.matrix, rank_rel_tol).rank;
    let dim = dim_h - rank;
    if dim == 0 {
        return NullspaceBasis {
            n,
            elements: Vec::new(),
        };
    }
    let rows = op.matrix.nrows();
    let square = if rows >= dim_h {
        op.matrix.clone()
    } else {
        let mut padded = RMatrix::zeros(dim_h, dim_h);
        padded.view_mut((0, 0), (rows, dim_h)).copy_from(&op.matrix);
        padded
    };
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("svd requested v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[a]
            .partial_cmp(&svd.singular_values[b])
            .unwrap()
    });
    let elements = order[..dim]
        .iter()
        .map(|&k| {
            let row = RVector::from_iterator(dim_h, v_t.row(k).iter().copied());
            unrealify(&row, n)
        })
        .collect();
    NullspaceBasis { n, elements }
}

/// Outcome of the rank-2 nullspace search.
#[derive(Debug, Clone)]
pub struct Rank2Search {
    /// A traceless Hermitian matrix with `||X||_F = sqrt(2)` and spectrum
    /// `(1, 0, ..., 0, -1)`, when one was found.
    pub candidate: Option<CMatrix>,
    /// Smallest objective value across all multistarts; `+inf` when the
    /// basis is empty.
    pub objective_floor: f64,
}

fn combination(basis: &NullspaceBasis, c: &RVector) -> CMatrix {
    let n = basis.n;
    let mut x = CMatrix::zeros(n, n);
    for (j, b) in basis.elements.iter().enumerate() {
        x += b.scale(c[j]);
    }
    x
}

/// Objective: sum of squared middle eigenvalues of the unit-Frobenius
/// combination. Zero exactly on combinations with spectrum `(t, 0, .., -t)`.
fn rank2_objective(basis: &NullspaceBasis, c: &RVector) -> (f64, RVector) {
    let n = basis.n;
    let x = combination(basis, c);
    let eig = hermitian_eig_unchecked(&x);
    let mut obj = 0.0;
    let mut grad = RVector::zeros(c.len());
    for k in 1..n.saturating_sub(1) {
        let lam = eig.eigenvalues[k];
        obj += lam * lam;
        let vec = eig.eigenvectors.column(k);
        for (j, b) in basis.elements.iter().enumerate() {
            // d lambda_k / d c_j = u_k* B_j u_k for simple eigenvalues.
            let deriv = (vec.adjoint() * b * vec)[(0, 0)].re;
            grad[j] += 2.0 * lam * deriv;
        }
    }
    (obj, grad)
}

fn rank2_objective_only(basis: &NullspaceBasis, c: &RVector) -> f64 {
    let n = basis.n;
    let x = combination(basis, c);
    let eig = hermitian_eig_unchecked(&x);
    (1..n.saturating_sub(1))
        .map(|k| eig.eigenvalues[k] * eig.eigenvalues[k])
        .sum()
}

fn random_sphere_point(dim: usize, rng: &mut SeededRng) -> RVector {
    use rand::Rng;
    use rand_distr::StandardNormal;
    loop {
        let v = RVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// Multistart projected-gradient search for a rank-2 indefinite element of
/// the nullspace span.
///
/// Minimizes the middle-eigenvalue objective over unit coefficient vectors.
/// On success returns the combination rescaled to `||X||_F = sqrt(2)`; the
/// tracelessness of the basis then forces the spectrum to `(1, -1)` up to
/// the residual objective. With an empty basis the result is immediately
/// "absent" with floor `+inf`.
pub fn find_rank2_indefinite(
    basis: &NullspaceBasis,
    params: &SearchParams,
    rng: &SeededRng,
) -> Rank2Search {
    let dim = basis.dimension();
    if dim == 0 {
        return Rank2Search {
            candidate: None,
            objective_floor: f64::INFINITY,
        };
    }
    // In dimension 2 there are no middle eigenvalues: every traceless
    // nullspace element already has the (t, -t) shape.
    if basis.n <= 2 {
        let mut c = RVector::zeros(dim);
        c[0] = 1.0;
        let x = combination(basis, &c).scale(std::f64::consts::SQRT_2);
        return Rank2Search {
            candidate: Some(x),
            objective_floor: 0.0,
        };
    }

    let results: Vec<(f64, Option<RVector>)> = (0..params.multistarts)
        .into_par_iter()
        .map(|start| {
            let mut local_rng = rng.substream(start as u64);
            let mut c = random_sphere_point(dim, &mut local_rng);
            let mut t = 1.0f64;
            let (mut obj, mut grad) = rank2_objective(basis, &c);
            for _ in 0..params.max_iterations {
                let radial = grad.dot(&c);
                let g_tan = &grad - c.scale(radial);
                let g_norm = g_tan.norm();
                if g_norm < params.gradient_tol {
                    break;
                }
                t = (t * 2.0).min(1e3);
                let mut accepted = false;
                while t > 1e-18 {
                    let stepped = (&c - g_tan.scale(t)).normalize();
                    let new_obj = rank2_objective_only(basis, &stepped);
                    if new_obj <= obj - 1e-4 * t * g_norm * g_norm {
                        c = stepped;
                        let eval = rank2_objective(basis, &c);
                        obj = eval.0;
                        grad = eval.1;
                        accepted = true;
                        break;
                    }
                    t *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
            let found = if obj < params.success_threshold {
                Some(c)
            } else {
                None
            };
            (obj, found)
        })
        .collect();

    let objective_floor = results
        .iter()
        .map(|(obj, _)| *obj)
        .fold(f64::INFINITY, f64::min);
    let candidate = results
        .iter()
        .find_map(|(_, c)| c.as_ref())
        .map(|c| combination(basis, c).scale(std::f64::consts::SQRT_2));
    Rank2Search {
        candidate,
        objective_floor,
    }
}

/// A checkable non-injectivity certificate: two unit states with equal
/// measurements, plus the normalized rank-2 nullspace matrix built from
/// their lifts.
#[derive(Debug, Clone, Serialize)]
pub struct CollisionWitness {
    #[serde(serialize_with = "serialize_cvector")]
    pub x: CVector,
    #[serde(serialize_with = "serialize_cvector")]
    pub y: CVector,
    /// `sqrt(2) / ||xx* - yy*||_F * (xx* - yy*)`; spectrum `(1, 0, .., -1)`.
    #[serde(skip)]
    pub matrix: CMatrix,
    /// `|| A(xx*) - A(yy*) ||_inf`.
    pub residual: f64,
    /// `|| xx* - yy* ||_F`.
    pub lift_distance: f64,
    /// Spectrum of `matrix`, descending.
    pub eigenvalues: Vec<f64>,
}

fn serialize_cvector<S: Serializer>(v: &CVector, s: S) -> Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Parts {
        re: Vec<f64>,
        im: Vec<f64>,
    }
    Parts {
        re: v.iter().map(|z| z.re).collect(),
        im: v.iter().map(|z| z.im).collect(),
    }
    .serialize(s)
}

/// Projected-gradient descent on the measurement mismatch
/// `||A(xx*) - A(yy*)||_2^2 + mu / ||xx* - yy*||_F^2` over the product of
/// unit spheres. With `mu = 0` this is the barrier-free polish.
fn mismatch_descent(
    e: &UnitaryEnsemble,
    mut x: CVector,
    mut y: CVector,
    mu: f64,
    params: &SearchParams,
) -> (CVector, CVector) {
    let eval = |x: &CVector, y: &CVector| -> (f64, CVector, CVector) {
        let mx = e.measure_state(x).expect("dimensions fixed");
        let my = e.measure_state(y).expect("dimensions fixed");
        let r: Vec<f64> = mx
            .values
            .iter()
            .zip(&my.values)
            .map(|(a, b)| a - b)
            .collect();
        let mut obj: f64 = r.iter().map(|v| v * v).sum();
        let mut gx = CVector::zeros(x.len());
        let mut gy = CVector::zeros(y.len());
        let n = e.n();
        for (k, u) in e.members().iter().enumerate() {
            let wx = u * &*x;
            let wy = u * &*y;
            let rk = &r[k * n..(k + 1) * n];
            let rx = CVector::from_iterator(n, rk.iter().zip(wx.iter()).map(|(&ri, wi)| wi * ri));
            let ry = CVector::from_iterator(n, rk.iter().zip(wy.iter()).map(|(&ri, wi)| wi * ri));
            gx += u.adjoint() * rx * Complex64::new(4.0, 0.0);
            gy -= u.adjoint() * ry * Complex64::new(4.0, 0.0);
        }
        if mu > 0.0 {
            let xx = x.norm_squared();
            let yy = y.norm_squared();
            let xy = x.dotc(y); // x* y
            let dist_sq = (xx * xx + yy * yy - 2.0 * xy.norm_sqr()).max(1e-300);
            obj += mu / dist_sq;
            let scale = -mu / (dist_sq * dist_sq);
            // grad_x of dist_sq = 4 ||x||^2 x - 4 y (y* x)
            let gx_d = x.scale(4.0 * xx) - y * (xy.conj() * Complex64::new(4.0, 0.0));
            let gy_d = y.scale(4.0 * yy) - &*x * (xy * Complex64::new(4.0, 0.0));
            gx += gx_d * Complex64::new(scale, 0.0);
            gy += gy_d * Complex64::new(scale, 0.0);
        }
        (obj, gx, gy)
    };

    let tangential = |v: &CVector, g: &CVector| -> CVector {
        let radial: f64 = g.iter().zip(v.iter()).map(|(gi, vi)| (gi.conj() * vi).re).sum();
        g - v.scale(radial)
    };

    let mut t = 1.0f64;
    let (mut obj, mut gx, mut gy) = eval(&x, &y);
    for _ in 0..params.max_iterations {
        let gx_tan = tangential(&x, &gx);
        let gy_tan = tangential(&y, &gy);
        let g_sq = gx_tan.norm_squared() + gy_tan.norm_squared();
        if g_sq.sqrt() < params.gradient_tol {
            break;
        }
        t = (t * 2.0).min(1e3);
        let mut accepted = false;
        while t > 1e-18 {
            let xs = (&x - gx_tan.scale(t)).normalize();
            let ys = (&y - gy_tan.scale(t)).normalize();
            let (new_obj, new_gx, new_gy) = eval(&xs, &ys);
            if new_obj <= obj - 1e-4 * t * g_sq {
                x = xs;
                y = ys;
                obj = new_obj;
                gx = new_gx;
                gy = new_gy;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (x, y)
}

/// Build and validate the canonical witness for a state pair.
///
/// Normalizes the lifted difference to Frobenius norm `sqrt(2)` (forcing
/// the `(1, -1)` spectrum), extracts the orthonormal eigenvector pair, and
/// checks every witness invariant from scratch. Returns `None` when the
/// pair does not certify a genuine collision.
pub fn build_witness(
    e: &UnitaryEnsemble,
    x: &CVector,
    y: &CVector,
    params: &SearchParams,
) -> Option<CollisionWitness> {
    let x = x.normalize();
    let y = y.normalize();
    let lift = outer(&x) - outer(&y);
    let lift_distance = lift.norm();
    if lift_distance < params.min_lift_distance {
        return None;
    }
    let matrix = lift.scale(std::f64::consts::SQRT_2 / lift_distance);
    let eig = hermitian_eig_unchecked(&matrix);
    let n = e.n();
    if (eig.eigenvalues[0] - 1.0).abs() > params.eigenvalue_tol
        || (eig.eigenvalues[n - 1] + 1.0).abs() > params.eigenvalue_tol
        || eig.eigenvalues[1..n - 1]
            .iter()
            .any(|l| l.abs() > params.eigenvalue_tol)
    {
        return None;
    }
    let mx = e.measure_state(&x).expect("dimensions fixed");
    let my = e.measure_state(&y).expect("dimensions fixed");
    let residual = mx.inf_distance(&my);
    if residual > params.witness_residual_tol {
        return None;
    }
    Some(CollisionWitness {
        x,
        y,
        matrix,
        residual,
        lift_distance,
        eigenvalues: eig.eigenvalues,
    })
}

/// Outcome of the direct collision search.
#[derive(Debug, Clone)]
pub struct DirectSearch {
    pub witness: Option<CollisionWitness>,
    /// Best (smallest) infinity-norm measurement mismatch reached by any
    /// start while keeping a genuine lift separation.
    pub residual_floor: f64,
}

/// Multistart descent on `||A(xx*) - A(yy*)||^2` over unit-norm pairs with
/// a separation barrier. A start whose barrier phase lands below the polish
/// trigger is polished without the barrier and validated as a witness.
pub fn collision_search_direct(
    e: &UnitaryEnsemble,
    params: &SearchParams,
    rng: &SeededRng,
) -> DirectSearch {
    let n = e.n();
    let results: Vec<(f64, Option<CollisionWitness>)> = (0..params.multistarts)
        .into_par_iter()
        .map(|start| {
            let mut local_rng = rng.substream(start as u64);
            let x0 = crate::linalg::random_unit_vector(n, &mut local_rng);
            let y0 = crate::linalg::random_unit_vector(n, &mut local_rng);
            let (x1, y1) = mismatch_descent(e, x0, y0, params.barrier_mu, params);
            let r1 = measurement_gap(e, &x1, &y1);
            if r1 >= params.polish_trigger {
                return (r1, None);
            }
            let (x2, y2) = mismatch_descent(e, x1.clone(), y1.clone(), 0.0, params);
            let sep = (outer(&x2) - outer(&y2)).norm();
            if sep < params.min_lift_distance {
                // Polish collapsed the pair; the barrier-phase iterate is
                // the honest floor for this start.
                return (r1, None);
            }
            let r2 = measurement_gap(e, &x2, &y2);
            let witness = build_witness(e, &x2, &y2, params);
            (r2.min(r1), witness)
        })
        .collect();

    let residual_floor = results
        .iter()
        .map(|(r, _)| *r)
        .fold(f64::INFINITY, f64::min);
    let witness = results.into_iter().find_map(|(_, w)| w);
    DirectSearch {
        witness,
        residual_floor,
    }
}

fn measurement_gap(e: &UnitaryEnsemble, x: &CVector, y: &CVector) -> f64 {
    let mx = e.measure_state(x).expect("dimensions fixed");
    let my = e.measure_state(y).expect("dimensions fixed");
    mx.inf_distance(&my)
}

/// Exact injectivity oracle for `n = 2`.
///
/// Each observable row maps to the real 3-vector
/// `(2 Re(conj(z1) z2), 2 Im(conj(z1) z2), |z1|^2 - |z2|^2)`; measurements
/// of a qubit state are affine in its corresponding vector, so the ensemble
/// separates all states exactly when these vectors span R^3.
pub fn bloch_oracle_n2(e: &UnitaryEnsemble) -> Result<OracleVerdict, InjectivityError> {
    if e.n() != 2 {
        return Err(InjectivityError::BlochRequiresN2(e.n()));
    }
    let rows = e.m() * 2;
    let mut stacked = RMatrix::zeros(rows, 3);
    for r in 0..rows {
        let z = e.observable(r);
        let cross = z[0].conj() * z[1];
        stacked[(r, 0)] = 2.0 * cross.re;
        stacked[(r, 1)] = 2.0 * cross.im;
        stacked[(r, 2)] = z[0].norm_sqr() - z[1].norm_sqr();
    }
    let rank = rank_with_tol(&stacked, DEFAULT_RANK_TOL).rank;
    Ok(if rank == 3 {
        OracleVerdict::Injective
    } else {
        OracleVerdict::NotInjective
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleVerdict {
    Injective,
    NotInjective,
}

/// Build the unitary sending `e1, e2` to the witness eigenvector pair and
/// move the ensemble onto the canonical non-injective slice: the reduced
/// ensemble annihilates `e1 e1* - e2 e2*`.
pub fn orbit_reduce(
    e: &UnitaryEnsemble,
    witness: &CollisionWitness,
) -> Result<(CMatrix, UnitaryEnsemble), InjectivityError> {
    let eig = hermitian_eig(&witness.matrix)?;
    let n = e.n();
    if (eig.eigenvalues[0] - 1.0).abs() > 1e-6 || (eig.eigenvalues[n - 1] + 1.0).abs() > 1e-6 {
        return Err(InjectivityError::MalformedWitness(eig.eigenvalues));
    }
    let u = eig.eigenvectors.column(0).into_owned();
    let v = eig.eigenvectors.column(n - 1).into_owned();
    let reducer = complete_unitary(&[u, v]);
    debug_assert!(unitarity_error(&reducer) < 1e-12);
    let reduced = e.right_multiply(&reducer)?;
    Ok((reducer, reduced))
}

/// Extend orthonormal columns to a full unitary by greedy Gram-Schmidt over
/// the standard basis.
pub fn complete_unitary(columns: &[CVector]) -> CMatrix {
    let n = columns[0].len();
    let mut cols: Vec<CVector> = columns.to_vec();
    while cols.len() < n {
        let mut best: Option<(f64, CVector)> = None;
        for j in 0..n {
            let mut cand = CVector::zeros(n);
            cand[j] = Complex64::new(1.0, 0.0);
            for c in &cols {
                let coeff = c.dotc(&cand);
                cand -= c * coeff;
            }
            let norm = cand.norm();
            if best.as_ref().map_or(true, |(b, _)| norm > *b) {
                best = Some((norm, cand));
            }
        }
        let (norm, mut vec) = best.expect("n >= 1");
        vec /= Complex64::new(norm, 0.0);
        // Re-orthogonalize once against accumulated roundoff.
        for c in &cols {
            let coeff = c.dotc(&vec);
            vec -= c * coeff;
        }
        vec /= Complex64::new(vec.norm(), 0.0);
        cols.push(vec);
    }
    let mut out = CMatrix::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CollisionFound,
    NoCollisionFound,
}

/// One certification run: verdict, diagnostics, seeds and tolerances.
#[derive(Debug, Clone, Serialize)]
pub struct CertificationReport {
    pub verdict: Verdict,
    pub nullspace_dimension: usize,
    /// Smallest rank-2 objective over all multistarts; absent when the
    /// nullspace is trivial and the search was skipped.
    pub search_floor: Option<f64>,
    /// Best separated measurement mismatch seen by the direct search.
    pub direct_search_floor: Option<f64>,
    pub witness: Option<CollisionWitness>,
    /// Exact verdict from the n=2 oracle, when applicable.
    pub oracle_verdict: Option<OracleVerdict>,
    pub seed: u64,
    pub stream: u64,
    pub tolerances: SearchParams,
    pub rank_rel_tol: f64,
    pub wall_time_ms: f64,
}

/// Run the full certification pipeline.
///
/// Computes the nullspace, runs both searches when it is nontrivial,
/// polishes and revalidates any candidate, and cross-checks against the
/// exact oracle at `n = 2`. A validated witness contradicting the oracle is
/// an internal error and must never occur.
pub fn certify(
    e: &UnitaryEnsemble,
    config: &CertifyConfig,
    rng: &SeededRng,
) -> Result<CertificationReport, InjectivityError> {
    let started = Instant::now();
    let params = &config.search;
    let basis = nullspace_basis(e, config.rank_tol());
    let nullspace_dimension = basis.dimension();

    let mut search_floor = None;
    let mut direct_search_floor = None;
    let mut witness: Option<CollisionWitness> = None;

    if nullspace_dimension > 0 {
        let rank2 = find_rank2_indefinite(&basis, params, &rng.substream(1));
        search_floor = Some(rank2.objective_floor);
        if let Some(candidate) = rank2.candidate {
            let eig = hermitian_eig_unchecked(&candidate);
            let u = eig.eigenvectors.column(0).into_owned();
            let v = eig.eigenvectors.column(e.n() - 1).into_owned();
            let (xp, yp) = mismatch_descent(e, u, v, 0.0, params);
            witness = build_witness(e, &xp, &yp, params);
        }

        let direct = collision_search_direct(e, params, &rng.substream(2));
        direct_search_floor = Some(direct.residual_floor);
        if witness.is_none() {
            witness = direct.witness;
        }
    }

    let verdict = if witness.is_some() {
        Verdict::CollisionFound
    } else {
        Verdict::NoCollisionFound
    };

    let oracle_verdict = if e.n() == 2 {
        Some(bloch_oracle_n2(e)?)
    } else {
        None
    };
    if let Some(oracle) = oracle_verdict {
        let consistent = match (verdict, oracle) {
            (Verdict::CollisionFound, OracleVerdict::NotInjective) => true,
            (Verdict::NoCollisionFound, OracleVerdict::Injective) => true,
            _ => false,
        };
        if !consistent {
            return Err(InjectivityError::OracleMismatch {
                verdict,
                oracle,
            });
        }
    }

    Ok(CertificationReport {
        verdict,
        nullspace_dimension,
        search_floor,
        direct_search_floor,
        witness,
        oracle_verdict,
        seed: rng.seed(),
        stream: rng.stream(),
        tolerances: params.clone(),
        rank_rel_tol: config.rank_tol(),
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}
