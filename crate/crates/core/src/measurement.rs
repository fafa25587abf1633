//! Phaseless measurements of Hermitian matrices under ensembles of unitaries.
//!
//! An ensemble is an ordered list of `m` unitary `n x n` matrices. Each row
//! of each member acts as a rank-1 observable: measuring a Hermitian `X`
//! yields, for ensemble member `U`, the diagonal of `U X U*`; measuring a
//! state `x` yields the componentwise squared moduli of `U x`. The two agree
//! on `X = x x*`.
//!
//! The module also provides the realified matrix of the measurement map (for
//! nullspace work), the projective embedding obtained by dropping one row
//! per member, structured ensemble families that break injectivity, and the
//! dimension-count lower bound for phaseless measurements.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    haar_unitary, rank_with_tol, unitarity_error, CMatrix, CVector, Complex64, RMatrix, RVector,
    RankReport, DEFAULT_RANK_TOL,
};

/// Acceptance threshold on `||U*U - I||_F` for ensemble members.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Values in `(-1e-12, 0)` coming from measurements of positive
/// semidefinite inputs are floating-point dust and get clamped in reports.
pub const PSD_DUST_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeasurementError {
    #[error("ensemble must contain at least one unitary")]
    EmptyEnsemble,
    #[error("ensemble member {index} is {rows}x{cols}, expected {n}x{n}")]
    MemberShape {
        index: usize,
        rows: usize,
        cols: usize,
        n: usize,
    },
    #[error("ensemble member {index} is not unitary: ||U*U - I||_F = {error:.3e}")]
    MemberNotUnitary { index: usize, error: f64 },
    #[error("dimension mismatch: ensemble has n={expected}, input has n={got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("input vector is zero")]
    ZeroVector,
    #[error("partial sum {partial_sum} exceeds norm_sq {norm_sq} beyond tolerance")]
    InconsistentPartialSum { partial_sum: f64, norm_sq: f64 },
    #[error("n must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("negative block entry {0} outside tolerance")]
    NegativeEntry(f64),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// How an ensemble was constructed. Recorded in the file format so that
/// reports stay traceable to the generating family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Haar,
    Diagonal,
    SharedEigenbasis,
    FourierMasked,
    Explicit,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::Haar => "haar",
            Provenance::Diagonal => "diagonal",
            Provenance::SharedEigenbasis => "shared-eigenbasis",
            Provenance::FourierMasked => "fourier-masked",
            Provenance::Explicit => "explicit",
        };
        f.write_str(s)
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "haar" => Ok(Provenance::Haar),
            "diagonal" => Ok(Provenance::Diagonal),
            "shared-eigenbasis" => Ok(Provenance::SharedEigenbasis),
            "fourier-masked" => Ok(Provenance::FourierMasked),
            "explicit" => Ok(Provenance::Explicit),
            other => Err(format!("unknown provenance `{other}`")),
        }
    }
}

/// Structured (non-generic) ensemble families. Each breaks injectivity in a
/// characteristic way and is used to exercise the certifier's failure paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructuredKind {
    /// Every member diagonal: measurements see only componentwise moduli.
    Diagonal,
    /// All members share one eigenbasis: every block repeats the same data.
    SharedEigenbasis,
    /// Discrete-Fourier matrix times a random diagonal phase mask.
    FourierMasked,
}

impl StructuredKind {
    pub fn provenance(self) -> Provenance {
        match self {
            StructuredKind::Diagonal => Provenance::Diagonal,
            StructuredKind::SharedEigenbasis => Provenance::SharedEigenbasis,
            StructuredKind::FourierMasked => Provenance::FourierMasked,
        }
    }
}

/// An ordered list of `m` unitary `n x n` matrices whose rows act as rank-1
/// observables. Global row index `(k-1)*n + i` addresses row `i` of member `k`.
#[derive(Debug, Clone)]
pub struct UnitaryEnsemble {
    n: usize,
    unitaries: Vec<CMatrix>,
    provenance: Provenance,
}

impl UnitaryEnsemble {
    /// Validates shapes and unitarity of every member.
    pub fn new(
        unitaries: Vec<CMatrix>,
        provenance: Provenance,
    ) -> Result<Self, MeasurementError> {
        if unitaries.is_empty() {
            return Err(MeasurementError::EmptyEnsemble);
        }
        let n = unitaries[0].nrows();
        for (index, u) in unitaries.iter().enumerate() {
            if u.nrows() != n || u.ncols() != n {
                return Err(MeasurementError::MemberShape {
                    index,
                    rows: u.nrows(),
                    cols: u.ncols(),
                    n,
                });
            }
            let error = unitarity_error(u);
            if error > UNITARITY_TOL {
                return Err(MeasurementError::MemberNotUnitary { index, error });
            }
        }
        Ok(Self {
            n,
            unitaries,
            provenance,
        })
    }

    /// `m` Haar-distributed members.
    pub fn haar<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Self {
        assert!(n >= 1 && m >= 1);
        let unitaries = (0..m).map(|_| haar_unitary(n, rng)).collect();
        Self {
            n,
            unitaries,
            provenance: Provenance::Haar,
        }
    }

    /// Members are diagonals of random unit-modulus phases.
    pub fn diagonal<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Self {
        assert!(n >= 1 && m >= 1);
        let unitaries = (0..m).map(|_| random_phase_diagonal(n, rng)).collect();
        Self {
            n,
            unitaries,
            provenance: Provenance::Diagonal,
        }
    }

    /// One Haar basis shared by all members, premultiplied by random
    /// diagonal phases: `U_k = D_k V`. All observables commute.
    pub fn shared_eigenbasis<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Self {
        assert!(n >= 1 && m >= 1);
        let v = haar_unitary(n, rng);
        let unitaries = (0..m)
            .map(|_| random_phase_diagonal(n, rng) * &v)
            .collect();
        Self {
            n,
            unitaries,
            provenance: Provenance::SharedEigenbasis,
        }
    }

    /// `U_k = F D_k` with `F` the unitary discrete-Fourier matrix and `D_k`
    /// random diagonal phase masks.
    pub fn fourier_masked<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Self {
        assert!(n >= 1 && m >= 1);
        let f = dft_matrix(n);
        let unitaries = (0..m)
            .map(|_| &f * random_phase_diagonal(n, rng))
            .collect();
        Self {
            n,
            unitaries,
            provenance: Provenance::FourierMasked,
        }
    }

    pub fn structured<R: Rng + ?Sized>(
        kind: StructuredKind,
        n: usize,
        m: usize,
        rng: &mut R,
    ) -> Self {
        match kind {
            StructuredKind::Diagonal => Self::diagonal(n, m, rng),
            StructuredKind::SharedEigenbasis => Self::shared_eigenbasis(n, m, rng),
            StructuredKind::FourierMasked => Self::fourier_masked(n, m, rng),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of members.
    pub fn m(&self) -> usize {
        self.unitaries.len()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn members(&self) -> &[CMatrix] {
        &self.unitaries
    }

    pub fn member(&self, k: usize) -> &CMatrix {
        &self.unitaries[k]
    }

    /// Observable vector for global row index `r`: the conjugated row, as a
    /// column. The measurement of `X` at this index is `z* X z`.
    pub fn observable(&self, r: usize) -> CVector {
        let (k, i) = (r / self.n, r % self.n);
        self.unitaries[k].row(i).adjoint()
    }

    /// Every member right-multiplied by the same unitary. The measurement
    /// map transforms covariantly: measuring `X` under the product ensemble
    /// equals measuring `U X U*` under the original.
    pub fn right_multiply(&self, u: &CMatrix) -> Result<Self, MeasurementError> {
        if u.nrows() != self.n || u.ncols() != self.n {
            return Err(MeasurementError::DimensionMismatch {
                expected: self.n,
                got: u.nrows(),
            });
        }
        let unitaries = self.unitaries.iter().map(|w| w * u).collect();
        Self::new(unitaries, Provenance::Explicit)
    }

    /// Diagonal readout of `U_k X U_k*` for every member, concatenated.
    pub fn apply(&self, x: &CMatrix) -> Result<MeasurementVector, MeasurementError> {
        if x.nrows() != self.n || x.ncols() != self.n {
            return Err(MeasurementError::DimensionMismatch {
                expected: self.n,
                got: x.nrows(),
            });
        }
        let mut values = Vec::with_capacity(self.m() * self.n);
        for u in &self.unitaries {
            let t = u * x;
            for i in 0..self.n {
                let mut acc = 0.0;
                for j in 0..self.n {
                    acc += (t[(i, j)] * u[(i, j)].conj()).re;
                }
                values.push(acc);
            }
        }
        Ok(MeasurementVector {
            n: self.n,
            m: self.m(),
            values,
        })
    }

    /// Squared moduli of `U_k x` for every member; equals `apply(x x*)`.
    pub fn measure_state(&self, x: &CVector) -> Result<MeasurementVector, MeasurementError> {
        if x.len() != self.n {
            return Err(MeasurementError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut values = Vec::with_capacity(self.m() * self.n);
        for u in &self.unitaries {
            let w = u * x;
            values.extend(w.iter().map(|z| z.norm_sqr()));
        }
        Ok(MeasurementVector {
            n: self.n,
            m: self.m(),
            values,
        })
    }

    /// The measurement map as a real `(m n) x n^2` matrix acting on
    /// realified Hermitian matrices.
    pub fn realified(&self) -> RealifiedOperator {
        let n = self.n;
        let mut matrix = RMatrix::zeros(self.m() * n, n * n);
        for r in 0..self.m() * n {
            let z = self.observable(r);
            // Row r is the realification of the rank-1 observable z z*.
            let mut col = 0usize;
            for j in 0..n {
                matrix[(r, col)] = z[j].norm_sqr();
                col += 1;
            }
            let sqrt2 = std::f64::consts::SQRT_2;
            for j in 0..n {
                for l in (j + 1)..n {
                    let e = z[j] * z[l].conj();
                    matrix[(r, col)] = sqrt2 * e.re;
                    matrix[(r, col + 1)] = sqrt2 * e.im;
                    col += 2;
                }
            }
        }
        RealifiedOperator { n, matrix }
    }

    /// Projective embedding: for each member drop the last row and report
    /// `|<row_i, x>|^2 / ||x||^2` for the remaining rows. Invariant under
    /// rescaling of `x` by any nonzero complex scalar. Empty when `n = 1`.
    pub fn embedding(&self, x: &CVector) -> Result<RVector, MeasurementError> {
        if x.len() != self.n {
            return Err(MeasurementError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let norm_sq = x.norm_squared();
        if norm_sq == 0.0 {
            return Err(MeasurementError::ZeroVector);
        }
        let mut values = Vec::with_capacity(self.m() * (self.n.saturating_sub(1)));
        for u in &self.unitaries {
            let w = u * x;
            for i in 0..self.n.saturating_sub(1) {
                values.push(w[i].norm_sqr() / norm_sq);
            }
        }
        Ok(RVector::from_vec(values))
    }

    /// Central-difference Jacobian of [`UnitaryEnsemble::embedding`] at `x`
    /// with respect to the `2n` real coordinates of `x`.
    ///
    /// Scale and phase invariance make two directions exactly flat, so at a
    /// generic point the rank is `2(n-1)`.
    pub fn embedding_differential(
        &self,
        x: &CVector,
        step: f64,
    ) -> Result<RMatrix, MeasurementError> {
        let n = self.n;
        let rows = self.m() * n.saturating_sub(1);
        let mut jac = RMatrix::zeros(rows, 2 * n);
        for j in 0..n {
            for part in 0..2 {
                let delta = if part == 0 {
                    Complex64::new(step, 0.0)
                } else {
                    Complex64::new(0.0, step)
                };
                let mut plus = x.clone();
                let mut minus = x.clone();
                plus[j] += delta;
                minus[j] -= delta;
                let diff = (self.embedding(&plus)? - self.embedding(&minus)?) / (2.0 * step);
                jac.set_column(2 * j + part, &diff);
            }
        }
        Ok(jac)
    }

    /// Write in the ensemble text format: header `n m provenance`, then
    /// `m*n` lines of `n` complex entries as `re,im` pairs at 17 significant
    /// digits (lossless for f64).
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), MeasurementError> {
        writeln!(w, "{} {} {}", self.n, self.m(), self.provenance)?;
        for u in &self.unitaries {
            for i in 0..self.n {
                let mut line = String::new();
                for j in 0..self.n {
                    if j > 0 {
                        line.push(' ');
                    }
                    let z = u[(i, j)];
                    line.push_str(&format!("{:.16e},{:.16e}", z.re, z.im));
                }
                writeln!(w, "{line}")?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self, MeasurementError> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines().enumerate();
        let (_, header) = lines.next().ok_or(MeasurementError::Parse {
            line: 1,
            message: "empty file".into(),
        })?;
        let header = header?;
        let mut parts = header.split_whitespace();
        let parse_usize = |tok: Option<&str>, what: &str| -> Result<usize, MeasurementError> {
            tok.ok_or_else(|| MeasurementError::Parse {
                line: 1,
                message: format!("missing {what}"),
            })?
            .parse()
            .map_err(|e| MeasurementError::Parse {
                line: 1,
                message: format!("bad {what}: {e}"),
            })
        };
        let n = parse_usize(parts.next(), "n")?;
        let m = parse_usize(parts.next(), "m")?;
        let provenance: Provenance = parts
            .next()
            .ok_or_else(|| MeasurementError::Parse {
                line: 1,
                message: "missing provenance".into(),
            })?
            .parse()
            .map_err(|message| MeasurementError::Parse { line: 1, message })?;
        if n == 0 || m == 0 {
            return Err(MeasurementError::Parse {
                line: 1,
                message: "n and m must be positive".into(),
            });
        }
        let mut unitaries = Vec::with_capacity(m);
        let mut current = CMatrix::zeros(n, n);
        let mut row = 0usize;
        for (lineno, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if unitaries.len() == m {
                return Err(MeasurementError::Parse {
                    line: lineno + 1,
                    message: "extra data after final matrix".into(),
                });
            }
            let entries: Vec<&str> = line.split_whitespace().collect();
            if entries.len() != n {
                return Err(MeasurementError::Parse {
                    line: lineno + 1,
                    message: format!("expected {n} entries, found {}", entries.len()),
                });
            }
            for (j, tok) in entries.iter().enumerate() {
                let (re, im) = tok.split_once(',').ok_or_else(|| MeasurementError::Parse {
                    line: lineno + 1,
                    message: format!("entry `{tok}` is not re,im"),
                })?;
                let re: f64 = re.parse().map_err(|e| MeasurementError::Parse {
                    line: lineno + 1,
                    message: format!("bad real part: {e}"),
                })?;
                let im: f64 = im.parse().map_err(|e| MeasurementError::Parse {
                    line: lineno + 1,
                    message: format!("bad imaginary part: {e}"),
                })?;
                current[(row, j)] = Complex64::new(re, im);
            }
            row += 1;
            if row == n {
                unitaries.push(std::mem::replace(&mut current, CMatrix::zeros(n, n)));
                row = 0;
            }
        }
        if unitaries.len() != m || row != 0 {
            return Err(MeasurementError::Parse {
                line: 0,
                message: format!("expected {m} matrices of {n} rows, file ended early"),
            });
        }
        Self::new(unitaries, provenance)
    }

    pub fn save(&self, path: &Path) -> Result<(), MeasurementError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)
    }

    pub fn load(path: &Path) -> Result<Self, MeasurementError> {
        Self::read_from(File::open(path)?)
    }
}

fn random_phase_diagonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            Complex64::new(theta.cos(), theta.sin())
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Unitary discrete-Fourier matrix, `F[j,k] = exp(-2 pi i j k / n) / sqrt(n)`.
pub fn dft_matrix(n: usize) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |j, k| {
        let angle = -std::f64::consts::TAU * ((j * k) % n) as f64 / n as f64;
        Complex64::new(angle.cos() * scale, angle.sin() * scale)
    })
}

/// `m*n` reals grouped into `m` blocks of `n`; each block of a measurement
/// of `X` sums to `Tr X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementVector {
    pub n: usize,
    pub m: usize,
    pub values: Vec<f64>,
}

impl MeasurementVector {
    pub fn block(&self, k: usize) -> &[f64] {
        &self.values[k * self.n..(k + 1) * self.n]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Copy with negative dust from PSD inputs clamped to zero. Entries
    /// below `-PSD_DUST_TOL` are genuine negatives and are left alone.
    pub fn clamped(&self) -> Self {
        let values = self
            .values
            .iter()
            .map(|&v| if v < 0.0 && v > -PSD_DUST_TOL { 0.0 } else { v })
            .collect();
        Self {
            n: self.n,
            m: self.m,
            values,
        }
    }

    pub fn as_vector(&self) -> RVector {
        RVector::from_column_slice(&self.values)
    }

    /// Max absolute difference against another measurement vector.
    pub fn inf_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn inf_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Real matrix of the measurement map with respect to an orthonormal basis
/// of Hermitian space (diagonal entries, then sqrt(2)-scaled real and
/// imaginary parts of the upper triangle, row-major).
#[derive(Debug, Clone)]
pub struct RealifiedOperator {
    n: usize,
    pub matrix: RMatrix,
}

impl RealifiedOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Numerical rank under the default tolerance policy.
    pub fn rank(&self) -> RankReport {
        rank_with_tol(&self.matrix, DEFAULT_RANK_TOL)
    }

    pub fn rank_with_tol(&self, rel_tol: f64) -> RankReport {
        rank_with_tol(&self.matrix, rel_tol)
    }
}

/// Isometric encoding of a Hermitian matrix as a real `n^2` vector:
/// `<realify(X), realify(Y)> = Re Tr(X Y)`.
pub fn realify(x: &CMatrix) -> RVector {
    let n = x.nrows();
    debug_assert_eq!(n, x.ncols());
    let mut out = RVector::zeros(n * n);
    let mut col = 0usize;
    for j in 0..n {
        out[col] = x[(j, j)].re;
        col += 1;
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    for j in 0..n {
        for l in (j + 1)..n {
            out[col] = sqrt2 * x[(j, l)].re;
            out[col + 1] = sqrt2 * x[(j, l)].im;
            col += 2;
        }
    }
    out
}

/// Inverse of [`realify`]; always produces an exactly Hermitian matrix.
pub fn unrealify(v: &RVector, n: usize) -> CMatrix {
    debug_assert_eq!(v.len(), n * n);
    let mut out = CMatrix::zeros(n, n);
    let mut col = 0usize;
    for j in 0..n {
        out[(j, j)] = Complex64::new(v[col], 0.0);
        col += 1;
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..n {
        for l in (j + 1)..n {
            let re = v[col] * inv_sqrt2;
            let im = v[col + 1] * inv_sqrt2;
            out[(j, l)] = Complex64::new(re, im);
            out[(l, j)] = Complex64::new(re, -im);
            col += 2;
        }
    }
    out
}

/// Complete a measurement block whose last entry was dropped: append
/// `norm_sq - sum(partial)`. Fails when the partial sum already exceeds
/// `norm_sq` beyond tolerance.
pub fn complete_dropped_block(
    partial: &[f64],
    norm_sq: f64,
) -> Result<Vec<f64>, MeasurementError> {
    for &v in partial {
        if v < -PSD_DUST_TOL {
            return Err(MeasurementError::NegativeEntry(v));
        }
    }
    let partial_sum: f64 = partial.iter().sum();
    if partial_sum > norm_sq + 1e-10 {
        return Err(MeasurementError::InconsistentPartialSum {
            partial_sum,
            norm_sq,
        });
    }
    let mut out = partial.to_vec();
    out.push((norm_sq - partial_sum).max(0.0));
    Ok(out)
}

/// Lower bound on the number of phaseless quadratic measurements that can
/// determine every state in dimension `n`: `4n - 2 alpha(n-1) - 4` where
/// `alpha` counts ones in the binary expansion.
pub fn min_measurement_lower_bound(n: usize) -> Result<usize, MeasurementError> {
    if n < 2 {
        return Err(MeasurementError::DimensionTooSmall(n));
    }
    let alpha = (n - 1).count_ones() as usize;
    Ok(4 * n - 2 * alpha - 4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_ginibre, outer, random_unit_vector};
    use crate::rng::SeededRng;

    fn basis_state(n: usize, i: usize) -> CVector {
        let mut v = CVector::zeros(n);
        v[i] = Complex64::new(1.0, 0.0);
        v
    }

    fn ensemble_with_identity_first<R: Rng>(n: usize, m: usize, rng: &mut R) -> UnitaryEnsemble {
        let mut members = vec![CMatrix::identity(n, n)];
        for _ in 1..m {
            members.push(haar_unitary(n, rng));
        }
        UnitaryEnsemble::new(members, Provenance::Explicit).unwrap()
    }

    fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
        let g = complex_ginibre(n, n, rng);
        (&g + g.adjoint()).scale(0.5)
    }

    #[test]
    fn identity_member_reads_diagonal() {
        let mut rng = SeededRng::new(10, 0);
        let n = 4;
        let e = ensemble_with_identity_first(n, 4, &mut rng);
        let x = outer(&basis_state(n, 0));
        let meas = e.apply(&x).unwrap();
        let block = meas.block(0);
        assert!((block[0] - 1.0).abs() < 1e-12);
        for &v in &block[1..] {
            assert!(v.abs() < 1e-12);
        }

        // Indefinite diagonal readout: e1 e1* - e2 e2*.
        let y = &x - outer(&basis_state(n, 1));
        let meas = e.apply(&y).unwrap();
        let block = meas.block(0);
        assert!((block[0] - 1.0).abs() < 1e-12);
        assert!((block[1] + 1.0).abs() < 1e-12);
        assert!(block[2].abs() < 1e-12 && block[3].abs() < 1e-12);
    }

    #[test]
    fn blocks_sum_to_trace() {
        let mut rng = SeededRng::new(11, 0);
        let n = 5;
        let e = UnitaryEnsemble::haar(n, 4, &mut rng);
        let x = random_unit_vector(n, &mut rng);
        let meas = e.measure_state(&x).unwrap();
        for k in 0..e.m() {
            let s: f64 = meas.block(k).iter().sum();
            assert!((s - x.norm_squared()).abs() < 1e-10);
        }
        let h = random_hermitian(n, &mut rng);
        let tr: f64 = (0..n).map(|i| h[(i, i)].re).sum();
        let meas = e.apply(&h).unwrap();
        for k in 0..e.m() {
            let s: f64 = meas.block(k).iter().sum();
            assert!((s - tr).abs() < 1e-10 * h.norm().max(1.0));
        }
    }

    #[test]
    fn apply_is_linear_and_matches_state_measurement() {
        let mut rng = SeededRng::new(12, 0);
        let n = 4;
        let e = UnitaryEnsemble::haar(n, 4, &mut rng);
        let x = random_hermitian(n, &mut rng);
        let y = random_hermitian(n, &mut rng);
        let (a, b) = (0.7, -1.3);
        let combo = e
            .apply(&(x.scale(a) + y.scale(b)))
            .unwrap();
        let ax = e.apply(&x).unwrap();
        let ay = e.apply(&y).unwrap();
        for i in 0..combo.len() {
            let expect = a * ax.values[i] + b * ay.values[i];
            assert!((combo.values[i] - expect).abs() < 1e-10);
        }

        let v = random_unit_vector(n, &mut rng);
        let from_state = e.measure_state(&v).unwrap();
        let from_lift = e.apply(&outer(&v)).unwrap();
        assert!(from_state.inf_distance(&from_lift) < 1e-12);
    }

    #[test]
    fn psd_measurements_nonnegative() {
        let mut rng = SeededRng::new(13, 0);
        let e = UnitaryEnsemble::haar(6, 4, &mut rng);
        for _ in 0..50 {
            let x = random_unit_vector(6, &mut rng);
            let meas = e.apply(&outer(&x)).unwrap();
            for &v in &meas.values {
                assert!(v >= -PSD_DUST_TOL);
            }
            let clamped = meas.clamped();
            for &v in &clamped.values {
                assert!(v >= 0.0);
            }
        }
    }

    #[test]
    fn realified_isometry_and_consistency() {
        let mut rng = SeededRng::new(14, 0);
        let n = 4;
        let x = random_hermitian(n, &mut rng);
        let y = random_hermitian(n, &mut rng);
        let ip = realify(&x).dot(&realify(&y));
        let tr_xy: f64 = (&x * &y).diagonal().iter().map(|z| z.re).sum();
        assert!((ip - tr_xy).abs() < 1e-12 * x.norm() * y.norm());

        let rt = unrealify(&realify(&x), n);
        assert!((&rt - &x).norm() < 1e-14);

        let e = UnitaryEnsemble::haar(n, 4, &mut rng);
        let op = e.realified();
        let via_matrix = &op.matrix * realify(&x);
        let direct = e.apply(&x).unwrap();
        for i in 0..direct.len() {
            assert!((via_matrix[i] - direct.values[i]).abs() < 1e-10);
        }
    }

    // Oracle for the rank law: count singular values directly, no shared
    // rank policy. The per-block sum identities force m-1 dependencies, so
    // a Haar 4-tuple has rank min(n^2, 4n-3).
    #[test]
    fn realified_rank_of_haar_four_tuples() {
        let mut rng = SeededRng::new(15, 0);
        for n in [2usize, 4, 6] {
            let expected = (n * n).min(4 * n - 3);
            for _ in 0..5 {
                let e = UnitaryEnsemble::haar(n, 4, &mut rng);
                let sv = crate::linalg::singular_values(&e.realified().matrix);
                let count = sv.iter().filter(|&&s| s > 1e-10 * sv[0]).count();
                assert_eq!(count, expected, "n={n}");
            }
        }
    }

    #[test]
    fn realified_rank_of_diagonal_ensemble() {
        // Diagonal rows only see the diagonal coordinates, so rank = n.
        let mut rng = SeededRng::new(16, 0);
        let e = UnitaryEnsemble::diagonal(3, 4, &mut rng);
        assert_eq!(e.realified().rank().rank, 3);
    }

    #[test]
    fn embedding_mod_phase_and_scale() {
        let mut rng = SeededRng::new(17, 0);
        let n = 3;
        let e = UnitaryEnsemble::haar(n, 4, &mut rng);
        let x = random_unit_vector(n, &mut rng);
        let phase = Complex64::new(0.6, 0.8);
        let scaled = x.map(|z| z * phase * Complex64::new(2.5, 0.0));
        let a = e.embedding(&x).unwrap();
        let b = e.embedding(&scaled).unwrap();
        assert_eq!(a.len(), 4 * (n - 1));
        assert!((a - b).amax() < 1e-12);
    }

    #[test]
    fn embedding_separates_projective_points_n2() {
        let mut rng = SeededRng::new(18, 0);
        let e = UnitaryEnsemble::haar(2, 4, &mut rng);
        let mut min_dist = f64::INFINITY;
        for _ in 0..1000 {
            let x = random_unit_vector(2, &mut rng);
            let y = random_unit_vector(2, &mut rng);
            let lift_gap = (outer(&x) - outer(&y)).norm();
            if lift_gap < 1e-3 {
                continue;
            }
            let d = (e.embedding(&x).unwrap() - e.embedding(&y).unwrap()).norm();
            min_dist = min_dist.min(d);
        }
        assert!(min_dist > 0.0);
    }

    #[test]
    fn embedding_differential_rank_is_projective_dimension() {
        let mut rng = SeededRng::new(26, 0);
        for n in [2usize, 4] {
            let e = UnitaryEnsemble::haar(n, 4, &mut rng);
            for _ in 0..5 {
                let x = random_unit_vector(n, &mut rng);
                let jac = e.embedding_differential(&x, 1e-5).unwrap();
                let rank = crate::linalg::rank_with_tol(&jac, 1e-10).rank;
                assert_eq!(rank, 2 * (n - 1), "n={n}");
            }
        }
    }

    #[test]
    fn embedding_degenerate_and_error_cases() {
        let mut rng = SeededRng::new(19, 0);
        let e = UnitaryEnsemble::haar(1, 4, &mut rng);
        let x = CVector::from_vec(vec![Complex64::new(0.3, -0.4)]);
        assert_eq!(e.embedding(&x).unwrap().len(), 0);

        let e2 = UnitaryEnsemble::haar(3, 4, &mut rng);
        let zero = CVector::zeros(3);
        assert!(matches!(
            e2.embedding(&zero),
            Err(MeasurementError::ZeroVector)
        ));
    }

    #[test]
    fn dropped_block_completion() {
        assert_eq!(complete_dropped_block(&[1.0], 1.0).unwrap(), vec![1.0, 0.0]);
        assert_eq!(
            complete_dropped_block(&[0.25, 0.25], 1.0).unwrap(),
            vec![0.25, 0.25, 0.5]
        );
        assert!(matches!(
            complete_dropped_block(&[0.9, 0.2], 1.0),
            Err(MeasurementError::InconsistentPartialSum { .. })
        ));

        // Round trip against a real measured block.
        let mut rng = SeededRng::new(20, 0);
        let n = 5;
        let e = UnitaryEnsemble::haar(n, 4, &mut rng);
        let x = random_unit_vector(n, &mut rng);
        let meas = e.measure_state(&x).unwrap();
        let block = meas.block(2);
        let completed = complete_dropped_block(&block[..n - 1], x.norm_squared()).unwrap();
        for (a, b) in completed.iter().zip(block) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn measurement_count_lower_bound() {
        assert_eq!(min_measurement_lower_bound(6).unwrap(), 16);
        assert_eq!(min_measurement_lower_bound(2).unwrap(), 2);
        assert_eq!(min_measurement_lower_bound(9).unwrap(), 30);
        assert!(min_measurement_lower_bound(1).is_err());
    }

    #[test]
    fn diagonal_ensemble_sees_only_moduli() {
        let mut rng = SeededRng::new(21, 0);
        let e = UnitaryEnsemble::diagonal(2, 4, &mut rng);
        let x = CVector::from_vec(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]);
        let y = CVector::from_vec(vec![Complex64::new(0.0, 0.6), Complex64::new(0.8, 0.0)]);
        let mx = e.measure_state(&x).unwrap();
        let my = e.measure_state(&y).unwrap();
        assert!(mx.inf_distance(&my) < 1e-12);
    }

    #[test]
    fn shared_eigenbasis_blocks_coincide() {
        let mut rng = SeededRng::new(22, 0);
        let e = UnitaryEnsemble::shared_eigenbasis(3, 4, &mut rng);
        let x = random_unit_vector(3, &mut rng);
        let meas = e.measure_state(&x).unwrap();
        for k in 1..e.m() {
            for i in 0..3 {
                assert!((meas.block(k)[i] - meas.block(0)[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fourier_masked_members_are_unitary() {
        let mut rng = SeededRng::new(23, 0);
        let e = UnitaryEnsemble::fourier_masked(4, 4, &mut rng);
        for u in e.members() {
            assert!(unitarity_error(u) < 1e-10);
        }
    }

    #[test]
    fn right_orbit_covariance() {
        let mut rng = SeededRng::new(24, 0);
        let n = 4;
        let e = UnitaryEnsemble::haar(n, 4, &mut rng);
        let u = haar_unitary(n, &mut rng);
        let x = random_hermitian(n, &mut rng);
        let lhs = e.right_multiply(&u).unwrap().apply(&x).unwrap();
        let rhs = e.apply(&(&u * &x * u.adjoint())).unwrap();
        assert!(lhs.inf_distance(&rhs) < 1e-10);
    }

    #[test]
    fn ensemble_file_round_trip_is_exact() {
        let mut rng = SeededRng::new(25, 0);
        let e = UnitaryEnsemble::haar(3, 4, &mut rng);
        let mut buf = Vec::new();
        e.write_to(&mut buf).unwrap();
        let back = UnitaryEnsemble::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.n(), e.n());
        assert_eq!(back.m(), e.m());
        assert_eq!(back.provenance(), e.provenance());
        for (a, b) in e.members().iter().zip(back.members()) {
            assert_eq!(a.as_slice(), b.as_slice(), "round trip must be bitwise");
        }
    }

    #[test]
    fn rejects_non_unitary_member() {
        let mut m = CMatrix::identity(3, 3);
        m[(0, 0)] = Complex64::new(1.5, 0.0);
        assert!(matches!(
            UnitaryEnsemble::new(vec![m], Provenance::Explicit),
            Err(MeasurementError::MemberNotUnitary { .. })
        ));
    }
}
