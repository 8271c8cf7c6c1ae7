//! Dense complex linear algebra for dimensions up to 8.
//!
//! Everything a three-qubit state analysis needs: Kronecker products,
//! partial transpose/trace, a cyclic Jacobi eigensolver for complex
//! Hermitian matrices, PSD square roots and Uhlmann fidelity. All
//! operations are pure functions; nothing here holds shared state.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Entrywise Hermiticity tolerance for density-matrix invariants.
pub const STATE_HERM_TOL: f64 = 1e-12;
/// Hermiticity gate for eigendecomposition entry points.
pub const EIG_HERM_TOL: f64 = 1e-10;
/// Allowed deviation of a density-matrix trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues of a state may undershoot zero by this much (solver noise).
pub const PSD_TOL: f64 = 1e-9;
/// Norm tolerance for pure-state vectors.
pub const NORM_TOL: f64 = 1e-12;

/// Jacobi sweep convergence threshold on the off-diagonal Frobenius norm.
const JACOBI_OFF_TOL: f64 = 1e-14;
/// Maximum number of Jacobi sweeps.
const JACOBI_MAX_SWEEPS: usize = 100;

// ---------------------------------------------------------------------------
// ComplexMatrix
// ---------------------------------------------------------------------------

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Complex64>(dim: usize, mut f: F) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m.data[r * dim + c] = f(r, c);
            }
        }
        m
    }

    /// Diagonal matrix from real entries.
    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m.data[i * entries.len() + i] = Complex64::new(x, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.dim + c] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r))
    }

    pub fn scale(&mut self, factor: f64) {
        for z in &mut self.data {
            *z *= factor;
        }
    }

    /// self += factor * other
    pub fn add_scaled(&mut self, other: &Self, factor: Complex64) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.data[i * n + k];
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += aik * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(self.dim, v.len());
        let n = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += self.data[i * n + j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry of |M - M^dagger|.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                let d = (self.get(r, c) - self.get(c, r).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// (M + M^dagger) / 2
    pub fn symmetrized(&self) -> Self {
        Self::from_fn(self.dim, |r, c| {
            (self.get(r, c) + self.get(c, r).conj()) * 0.5
        })
    }
}

impl std::ops::Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

// ---------------------------------------------------------------------------
// PureState
// ---------------------------------------------------------------------------

/// Normalized complex state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Build from amplitudes; the Euclidean norm must be 1 within 1e-12.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Computational basis state |index> on `n_qubits` qubits.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let dim = 1usize << n_qubits;
        assert!(index < dim, "basis index out of range");
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// |psi><psi|
    pub fn projector(&self) -> ComplexMatrix {
        let n = self.dim();
        ComplexMatrix::from_fn(n, |r, c| self.amplitudes[r] * self.amplitudes[c].conj())
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Self { amplitudes }
    }
}

// ---------------------------------------------------------------------------
// DensityMatrix
// ---------------------------------------------------------------------------

/// Hermitian, unit-trace, positive-semidefinite matrix over 1..=3 qubits.
///
/// Basis ordering is normative for the whole crate: |000>, |001>, ..., |111>
/// with qubit A the most significant bit of the basis label.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Validating constructor; reports which invariant failed.
    pub fn new(n_qubits: usize, mat: ComplexMatrix) -> Result<Self> {
        if !(1..=3).contains(&n_qubits) {
            return Err(Error::InvalidState(format!(
                "n_qubits must be 1, 2 or 3, got {n_qubits}"
            )));
        }
        let dim = 1usize << n_qubits;
        if mat.dim() != dim {
            return Err(Error::InvalidState(format!(
                "matrix dimension {} does not match 2^{n_qubits}",
                mat.dim()
            )));
        }
        if !mat.is_finite() {
            return Err(Error::InvalidState("entries must be finite".into()));
        }
        let defect = mat.hermiticity_defect();
        if defect > STATE_HERM_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian: max |M - M\u{2020}| entry {defect:.3e} exceeds {STATE_HERM_TOL:.0e}"
            )));
        }
        let tr = mat.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "trace {tr} differs from 1 by more than {TRACE_TOL:.0e}"
            )));
        }
        let state = Self { n_qubits, mat };
        let lowest = min_eig(state.mat())?;
        if lowest < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite: lowest eigenvalue {lowest:.3e}"
            )));
        }
        Ok(state)
    }

    /// Internal constructor for matrices valid by construction.
    pub(crate) fn new_unchecked(n_qubits: usize, mat: ComplexMatrix) -> Self {
        debug_assert_eq!(mat.dim(), 1usize << n_qubits);
        Self { n_qubits, mat }
    }

    pub fn from_pure(psi: &PureState) -> Result<Self> {
        let n_qubits = match psi.dim() {
            2 => 1,
            4 => 2,
            8 => 3,
            d => {
                return Err(Error::InvalidState(format!(
                    "pure state dimension {d} is not 2, 4 or 8"
                )))
            }
        };
        Ok(Self::new_unchecked(n_qubits, psi.projector()))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut mat = ComplexMatrix::identity(dim);
        mat.scale(1.0 / dim as f64);
        Self::new_unchecked(n_qubits, mat)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_mat(self) -> ComplexMatrix {
        self.mat
    }
}

#[derive(Serialize, Deserialize)]
struct DensityMatrixJson {
    n_qubits: usize,
    entries: Vec<Vec<[f64; 2]>>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let dim = self.dim();
        let entries = (0..dim)
            .map(|r| {
                (0..dim)
                    .map(|c| {
                        let z = self.mat.get(r, c);
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect();
        DensityMatrixJson {
            n_qubits: self.n_qubits,
            entries,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = DensityMatrixJson::deserialize(deserializer)?;
        if !(1..=3).contains(&raw.n_qubits) {
            return Err(D::Error::custom(format!(
                "n_qubits must be 1, 2 or 3, got {}",
                raw.n_qubits
            )));
        }
        let dim = 1usize << raw.n_qubits;
        if raw.entries.len() != dim || raw.entries.iter().any(|row| row.len() != dim) {
            return Err(D::Error::custom(format!("entries must be {dim}x{dim}")));
        }
        let mat = ComplexMatrix::from_fn(dim, |r, c| {
            Complex64::new(raw.entries[r][c][0], raw.entries[r][c][1])
        });
        DensityMatrix::new(raw.n_qubits, mat).map_err(D::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Qubit index helpers
// ---------------------------------------------------------------------------

/// Bit shift of `qubit` in a basis index (qubit 0 = A = most significant).
#[inline]
pub(crate) fn bit_shift(n_qubits: usize, qubit: usize) -> usize {
    n_qubits - 1 - qubit
}

/// Insert `bit` at the position of `qubit`, mapping a reduced basis index
/// on n-1 qubits to a full index on n qubits.
#[inline]
pub(crate) fn insert_bit(reduced: usize, shift: usize, bit: usize) -> usize {
    let low = reduced & ((1 << shift) - 1);
    let high = reduced >> shift;
    (high << (shift + 1)) | (bit << shift) | low
}

fn check_qubit(rho: &DensityMatrix, qubit: usize) -> Result<()> {
    if qubit >= rho.n_qubits() {
        return Err(Error::QubitOutOfRange {
            index: qubit,
            n_qubits: rho.n_qubits(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Kronecker product a (x) b.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (da, db) = (a.dim(), b.dim());
    ComplexMatrix::from_fn(da * db, |r, c| {
        a.get(r / db, c / db) * b.get(r % db, c % db)
    })
}

/// Transpose the tensor factor of `qubit` only.
pub fn partial_transpose(rho: &DensityMatrix, qubit: usize) -> Result<ComplexMatrix> {
    check_qubit(rho, qubit)?;
    let shift = bit_shift(rho.n_qubits(), qubit);
    let mask = 1usize << shift;
    let dim = rho.dim();
    Ok(ComplexMatrix::from_fn(dim, |r, c| {
        // swap the qubit's bit between the row and column index
        let r2 = (r & !mask) | (c & mask);
        let c2 = (c & !mask) | (r & mask);
        rho.mat().get(r2, c2)
    }))
}

/// Trace out one qubit, keeping the remaining qubits in order.
pub fn partial_trace(rho: &DensityMatrix, qubit: usize) -> Result<DensityMatrix> {
    check_qubit(rho, qubit)?;
    if rho.n_qubits() < 2 {
        return Err(Error::WrongQubitCount {
            expected: 2,
            actual: rho.n_qubits(),
        });
    }
    let shift = bit_shift(rho.n_qubits(), qubit);
    let dim_out = rho.dim() / 2;
    let mat = ComplexMatrix::from_fn(dim_out, |r, c| {
        (0..2)
            .map(|b| {
                rho.mat()
                    .get(insert_bit(r, shift, b), insert_bit(c, shift, b))
            })
            .sum()
    });
    Ok(DensityMatrix::new_unchecked(rho.n_qubits() - 1, mat))
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues ascending and the matching orthonormal
/// eigenvectors as columns.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let defect = m.hermiticity_defect();
    if defect > EIG_HERM_TOL {
        return Err(Error::NotHermitian { max_dev: defect });
    }
    let n = m.dim();
    let mut a = m.symmetrized();
    let mut v = ComplexMatrix::identity(n);

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0f64;
        for r in 0..n {
            for c in (r + 1)..n {
                off += 2.0 * a.get(r, c).norm_sqr();
            }
        }
        if off.sqrt() < JACOBI_OFF_TOL {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let d = apq.norm();
                if d < 1e-300 {
                    continue;
                }
                let u = apq / d;
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let tau = (aqq - app) / (2.0 * d);
                // stable root of t^2 + 2 tau t - 1 = 0
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let su = s * u;
                let su_conj = s * u.conj();

                // columns: A <- A J with J = [[c, s u], [-s conj(u), c]]
                for k in 0..n {
                    let kp = a.get(k, p);
                    let kq = a.get(k, q);
                    a.set(k, p, c * kp - su_conj * kq);
                    a.set(k, q, su * kp + c * kq);
                }
                // rows: A <- J^dagger A
                for k in 0..n {
                    let pk = a.get(p, k);
                    let qk = a.get(q, k);
                    a.set(p, k, c * pk - su * qk);
                    a.set(q, k, su_conj * pk + c * qk);
                }
                // exact pivot values, free of rotation round-off
                a.set(p, p, Complex64::new(app - t * d, 0.0));
                a.set(q, q, Complex64::new(aqq + t * d, 0.0));
                a.set(p, q, Complex64::new(0.0, 0.0));
                a.set(q, p, Complex64::new(0.0, 0.0));

                for k in 0..n {
                    let kp = v.get(k, p);
                    let kq = v.get(k, q);
                    v.set(k, p, c * kp - su_conj * kq);
                    v.set(k, q, su * kp + c * kq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(i, i)
            .re
            .partial_cmp(&a.get(j, j).re)
            .expect("finite eigenvalues")
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a.get(i, i).re).collect();
    let vectors = ComplexMatrix::from_fn(n, |r, c| v.get(r, order[c]));
    Ok((eigenvalues, vectors))
}

/// Lowest eigenvalue of a Hermitian matrix.
pub fn min_eig(m: &ComplexMatrix) -> Result<f64> {
    Ok(eig_hermitian(m)?.0[0])
}

/// Determinant of a Hermitian matrix via LU with partial pivoting.
///
/// Independent of the Jacobi eigensolver, so the identity
/// det = prod(eigenvalues) is a genuine cross-check between two routes.
pub fn det_hermitian(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let defect = m.hermiticity_defect();
    if defect > EIG_HERM_TOL {
        return Err(Error::NotHermitian { max_dev: defect });
    }
    let n = m.dim();
    let mut a = m.symmetrized();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let (pivot_row, pivot_mag) = (col..n)
            .map(|r| (r, a.get(r, col).norm()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).expect("finite"))
            .expect("non-empty range");
        if pivot_mag == 0.0 {
            return Ok(0.0);
        }
        if pivot_row != col {
            for k in 0..n {
                let tmp = a.get(col, k);
                a.set(col, k, a.get(pivot_row, k));
                a.set(pivot_row, k, tmp);
            }
            det = -det;
        }
        let pivot = a.get(col, col);
        det *= pivot;
        for r in (col + 1)..n {
            let factor = a.get(r, col) / pivot;
            if factor.norm_sqr() == 0.0 {
                continue;
            }
            for k in col..n {
                let val = a.get(r, k) - factor * a.get(col, k);
                a.set(r, k, val);
            }
        }
    }
    // Hermitian determinants are real; the residual imaginary part is noise.
    Ok(det.re)
}

/// Square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues in [-1e-9, 0) are clamped to zero; anything lower is an error.
pub fn sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (vals, vecs) = eig_hermitian(m)?;
    if vals[0] < -PSD_TOL {
        return Err(Error::NotPositive {
            eigenvalue: vals[0],
        });
    }
    let n = m.dim();
    let mut out = ComplexMatrix::zeros(n);
    for (i, &lambda) in vals.iter().enumerate() {
        let root = lambda.max(0.0).sqrt();
        if root == 0.0 {
            continue;
        }
        for r in 0..n {
            let vr = vecs.get(r, i) * root;
            for c in 0..n {
                let val = out.get(r, c) + vr * vecs.get(c, i).conj();
                out.set(r, c, val);
            }
        }
    }
    Ok(out)
}

/// Uhlmann fidelity F(rho, sigma) = (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    let root = sqrt_psd(rho.mat())?;
    let inner = (&(&root * sigma.mat()) * &root).symmetrized();
    let (vals, _) = eig_hermitian(&inner)?;
    let tr: f64 = vals.iter().map(|&l| l.max(0.0).sqrt()).sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}
