//! Dense symmetric-matrix kernel.
//!
//! Storage and validation for symmetric and symmetric-positive-definite
//! matrices, plus the numerical primitives everything else is built on:
//! Cholesky factorization, a cyclic Jacobi eigensolver, spectral matrix
//! functions `V f(Λ) Vᵀ`, norms, and the log-determinant.
//!
//! Design notes:
//! - Matrices are symmetrized (averaged with their transpose) at
//!   construction; asymmetry beyond a relative tolerance is rejected as a
//!   hard error rather than silently averaged away.
//! - The eigensolver is cyclic Jacobi: deterministic, branch-predictable,
//!   and accurate for the moderate dimensions (p up to a few hundred) this
//!   crate targets. Eigenvalues are returned ascending and eigenvector
//!   columns follow a fixed sign convention so outputs are bit-comparable
//!   across runs.
//! - All types are immutable after construction and freely shareable
//!   across threads.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Relative tolerance for accepting a nearly-symmetric input matrix:
/// `|a[i][j] - a[j][i]| <= SYMMETRY_REL_TOL * max(1, |a[i][j]|)`.
///
/// Accumulated floating-point asymmetry from arithmetic chains is expected
/// and is averaged away; anything larger signals a logic error upstream.
pub const SYMMETRY_REL_TOL: f64 = 1e-12;

/// Jacobi convergence threshold: the sweep loop stops once the off-diagonal
/// Frobenius mass falls to `JACOBI_OFFDIAG_REL_TOL * ||A||_F`.
pub const JACOBI_OFFDIAG_REL_TOL: f64 = 1e-13;

/// Hard cap on Jacobi sweeps. Convergence is quadratic once rotations lock
/// in; well-formed inputs converge in well under 20 sweeps even at p = 500.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// A dense p×p real symmetric matrix.
///
/// Construction validates finiteness and symmetry (within
/// [`SYMMETRY_REL_TOL`]) and stores the symmetrized average, so every
/// `SymmetricMatrix` in circulation is exactly symmetric entrywise.
#[derive(Debug, Clone)]
pub struct SymmetricMatrix {
    entries: Array2<f64>,
}

impl SymmetricMatrix {
    /// Validates and symmetrizes a square array.
    ///
    /// Errors with [`Error::NonFinite`] on NaN/infinite entries,
    /// [`Error::DimMismatch`] on non-square input, and
    /// [`Error::NotSymmetric`] when the asymmetry exceeds tolerance.
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        let (rows, cols) = entries.dim();
        if rows != cols {
            return Err(Error::DimMismatch {
                expected: rows,
                actual: cols,
            });
        }
        for ((i, j), &x) in entries.indexed_iter() {
            if !x.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
        for i in 0..rows {
            for j in (i + 1)..cols {
                let a = entries[(i, j)];
                let b = entries[(j, i)];
                let dev = (a - b).abs();
                if dev > SYMMETRY_REL_TOL * f64::max(1.0, a.abs()) {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        deviation: dev,
                    });
                }
            }
        }
        Ok(Self::symmetrize(entries))
    }

    /// Builds from a row-major slice of length `p * p`.
    pub fn from_slice(p: usize, data: &[f64]) -> Result<Self> {
        if data.len() != p * p {
            return Err(Error::DimMismatch {
                expected: p * p,
                actual: data.len(),
            });
        }
        let arr = Array2::from_shape_vec((p, p), data.to_vec())
            .expect("shape checked above");
        Self::new(arr)
    }

    /// Averages a square array with its transpose without the tolerance
    /// check. Used internally where symmetry holds by construction and
    /// only rounding noise needs removing.
    pub(crate) fn symmetrize(entries: Array2<f64>) -> Self {
        let p = entries.nrows();
        let mut m = entries;
        for i in 0..p {
            for j in (i + 1)..p {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        Self { entries: m }
    }

    /// The p×p identity.
    pub fn identity(p: usize) -> Self {
        Self {
            entries: Array2::eye(p),
        }
    }

    /// The p×p zero matrix.
    pub fn zeros(p: usize) -> Self {
        Self {
            entries: Array2::zeros((p, p)),
        }
    }

    /// Diagonal matrix from the given entries.
    pub fn from_diag(diag: &[f64]) -> Self {
        let p = diag.len();
        let mut m = Array2::zeros((p, p));
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        Self { entries: m }
    }

    /// Dimension p.
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Read-only view of the entries.
    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    /// Single entry access.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Trace.
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.entries[(i, i)]).sum()
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self {
            entries: &self.entries - &other.entries,
        })
    }

    /// Entrywise sum `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self {
            entries: &self.entries + &other.entries,
        })
    }

    /// Scalar multiple `c * self`.
    pub fn scale(&self, c: f64) -> Self {
        Self {
            entries: &self.entries * c,
        }
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(())
    }

    /// Frobenius norm `(Σ a_ij²)^(1/2)`.
    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Spectral norm: for symmetric input, the largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        let decomp = self
            .eigh()
            .expect("Jacobi converges for finite symmetric input");
        decomp
            .eigenvalues
            .iter()
            .fold(0.0_f64, |acc, &l| acc.max(l.abs()))
    }

    /// Symmetric eigendecomposition by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues in ascending order with matching orthonormal
    /// eigenvector columns. Each column's first nonzero component is made
    /// positive so the output is deterministic down to the bit level.
    pub fn eigh(&self) -> Result<EigenDecomp> {
        jacobi_eigh(&self.entries)
    }

    /// Spectral matrix function `V diag(f(λ_i)) Vᵀ`.
    ///
    /// Errors with [`Error::Domain`] when `f` returns a non-finite value at
    /// some eigenvalue.
    pub fn matrix_function(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let decomp = self.eigh()?;
        let p = self.dim();
        let mut fvals = Vec::with_capacity(p);
        for &l in &decomp.eigenvalues {
            let y = f(l);
            if !y.is_finite() {
                return Err(Error::Domain {
                    what: "matrix_function scalar map",
                    value: l,
                });
            }
            fvals.push(y);
        }
        Ok(decomp.assemble(&fvals))
    }

    /// Matrix logarithm; requires all eigenvalues strictly positive.
    pub fn matrix_log(&self) -> Result<Self> {
        let decomp = self.eigh()?;
        if let Some(&l) = decomp.eigenvalues.iter().find(|&&l| l <= 0.0) {
            return Err(Error::Domain {
                what: "matrix_log eigenvalue",
                value: l,
            });
        }
        let fvals: Vec<f64> = decomp.eigenvalues.iter().map(|&l| l.ln()).collect();
        Ok(decomp.assemble(&fvals))
    }

    /// Matrix inverse through the spectral route; requires all eigenvalues
    /// nonzero.
    pub fn matrix_inverse(&self) -> Result<Self> {
        let decomp = self.eigh()?;
        if let Some(&l) = decomp.eigenvalues.iter().find(|&&l| l == 0.0) {
            return Err(Error::Domain {
                what: "matrix_inverse eigenvalue",
                value: l,
            });
        }
        let fvals: Vec<f64> = decomp.eigenvalues.iter().map(|&l| 1.0 / l).collect();
        Ok(decomp.assemble(&fvals))
    }

    /// Largest absolute difference to another matrix (test/diagnostic aid).
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(self
            .entries
            .iter()
            .zip(other.entries.iter())
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs())))
    }
}

/// A symmetric positive-definite matrix, witnessed by a successful Cholesky
/// factorization with strictly positive pivots. The lower factor is cached
/// because the log-determinant, linear solves, and Gaussian sampling all
/// reuse it.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    sym: SymmetricMatrix,
    chol: Array2<f64>,
}

impl SpdMatrix {
    /// Validates positive-definiteness constructively via Cholesky.
    pub fn new(sym: SymmetricMatrix) -> Result<Self> {
        let chol = cholesky_lower(sym.entries())?;
        Ok(Self { sym, chol })
    }

    /// Builds `L Lᵀ` from a lower-triangular factor with strictly positive
    /// diagonal. Used by samplers that construct the factor directly; skips
    /// the redundant re-factorization.
    pub(crate) fn from_lower_factor(l: Array2<f64>) -> Result<Self> {
        let p = l.nrows();
        if p != l.ncols() {
            return Err(Error::DimMismatch {
                expected: p,
                actual: l.ncols(),
            });
        }
        for i in 0..p {
            let d = l[(i, i)];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { index: i, pivot: d });
            }
        }
        let prod = l.dot(&l.t());
        Ok(Self {
            sym: SymmetricMatrix::symmetrize(prod),
            chol: l,
        })
    }

    /// The p×p identity, trivially SPD.
    pub fn identity(p: usize) -> Self {
        Self {
            sym: SymmetricMatrix::identity(p),
            chol: Array2::eye(p),
        }
    }

    /// Dimension p.
    pub fn dim(&self) -> usize {
        self.sym.dim()
    }

    /// The underlying symmetric matrix.
    pub fn sym(&self) -> &SymmetricMatrix {
        &self.sym
    }

    /// Consumes self, returning the underlying symmetric matrix.
    pub fn into_sym(self) -> SymmetricMatrix {
        self.sym
    }

    /// Read-only view of the entries.
    pub fn entries(&self) -> &Array2<f64> {
        self.sym.entries()
    }

    /// The cached lower Cholesky factor L with `self = L Lᵀ`.
    pub fn cholesky_lower(&self) -> &Array2<f64> {
        &self.chol
    }

    /// Log-determinant `2 Σ log L_ii` from the Cholesky factor.
    pub fn log_det(&self) -> f64 {
        (0..self.dim()).map(|i| self.chol[(i, i)].ln()).sum::<f64>() * 2.0
    }

    /// Solves `self * x = b` for one right-hand side via the cached factor.
    pub fn solve_vec(&self, b: &Array1<f64>) -> Result<Array1<f64>> {
        let p = self.dim();
        if b.len() != p {
            return Err(Error::DimMismatch {
                expected: p,
                actual: b.len(),
            });
        }
        // Forward substitution L y = b, then back substitution Lᵀ x = y.
        let mut y = b.clone();
        for i in 0..p {
            let mut acc = y[i];
            for k in 0..i {
                acc -= self.chol[(i, k)] * y[k];
            }
            y[i] = acc / self.chol[(i, i)];
        }
        for i in (0..p).rev() {
            let mut acc = y[i];
            for k in (i + 1)..p {
                acc -= self.chol[(k, i)] * y[k];
            }
            y[i] = acc / self.chol[(i, i)];
        }
        Ok(y)
    }

    /// Solves `self * X = B` column by column.
    pub fn solve_matrix(&self, b: &Array2<f64>) -> Result<Array2<f64>> {
        let p = self.dim();
        if b.nrows() != p {
            return Err(Error::DimMismatch {
                expected: p,
                actual: b.nrows(),
            });
        }
        let mut out = Array2::zeros((p, b.ncols()));
        for j in 0..b.ncols() {
            let col = b.column(j).to_owned();
            let x = self.solve_vec(&col)?;
            out.column_mut(j).assign(&x);
        }
        Ok(out)
    }

    /// Inverse, SPD by construction, computed from Cholesky solves.
    pub fn inverse(&self) -> Result<SpdMatrix> {
        let p = self.dim();
        let inv = self.solve_matrix(&Array2::eye(p))?;
        SpdMatrix::new(SymmetricMatrix::symmetrize(inv))
    }

    /// Delegates to [`SymmetricMatrix::frobenius_norm`].
    pub fn frobenius_norm(&self) -> f64 {
        self.sym.frobenius_norm()
    }

    /// Delegates to [`SymmetricMatrix::spectral_norm`].
    pub fn spectral_norm(&self) -> f64 {
        self.sym.spectral_norm()
    }

    /// Delegates to [`SymmetricMatrix::eigh`].
    pub fn eigh(&self) -> Result<EigenDecomp> {
        self.sym.eigh()
    }
}

/// Result of a symmetric eigendecomposition: `A = V diag(λ) Vᵀ` with the
/// eigenvalues ascending and column k of `vectors` paired with
/// `eigenvalues[k]`.
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, one per column.
    pub vectors: Array2<f64>,
}

impl EigenDecomp {
    /// Rebuilds `V diag(vals) Vᵀ` for arbitrary spectral values, producing
    /// an exactly symmetric matrix (each pair (i, j) is computed once).
    pub fn assemble(&self, vals: &[f64]) -> SymmetricMatrix {
        let p = self.vectors.nrows();
        debug_assert_eq!(vals.len(), p);
        let mut out = Array2::zeros((p, p));
        for i in 0..p {
            for j in 0..=i {
                let mut acc = 0.0;
                for (k, &fv) in vals.iter().enumerate() {
                    acc += fv * self.vectors[(i, k)] * self.vectors[(j, k)];
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc;
            }
        }
        SymmetricMatrix { entries: out }
    }

    /// Reconstructs the original matrix `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> SymmetricMatrix {
        self.assemble(&self.eigenvalues)
    }

    /// Smallest eigenvalue.
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Largest eigenvalue.
    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }
}

/// Lower Cholesky factor of a symmetric matrix; the constructive SPD test.
pub(crate) fn cholesky_lower(a: &Array2<f64>) -> Result<Array2<f64>> {
    let p = a.nrows();
    let mut l: Array2<f64> = Array2::zeros((p, p));
    for j in 0..p {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        // A strictly positive pivot is not enough: an exactly singular
        // matrix assembled in floating point leaves a pivot of order
        // ε·a_jj, so the floor is relative to the original diagonal
        // (which bounds the pivot from above for any PSD matrix).
        let floor = p as f64 * f64::EPSILON * a[(j, j)].abs();
        if !(d > floor) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..p {
            let mut acc = a[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = acc / dj;
        }
    }
    Ok(l)
}

/// Frobenius norm of the strict upper triangle, doubled for symmetry:
/// the quantity driven to zero by the Jacobi sweeps.
fn offdiag_frobenius(m: &Array2<f64>) -> f64 {
    let p = m.nrows();
    let mut acc = 0.0;
    for i in 0..p {
        for j in (i + 1)..p {
            acc += 2.0 * m[(i, j)] * m[(i, j)];
        }
    }
    acc.sqrt()
}

/// Cyclic Jacobi eigensolver.
///
/// Sweeps the strict upper triangle in a fixed row-major order, annihilating
/// each off-diagonal entry with a Givens rotation. Stops when the
/// off-diagonal Frobenius mass drops below
/// `JACOBI_OFFDIAG_REL_TOL * ||A||_F`, and errors with
/// [`Error::NonConvergence`] after [`JACOBI_MAX_SWEEPS`] sweeps.
fn jacobi_eigh(a: &Array2<f64>) -> Result<EigenDecomp> {
    let p = a.nrows();
    let mut m = a.clone();
    let mut v: Array2<f64> = Array2::eye(p);
    let threshold = JACOBI_OFFDIAG_REL_TOL * {
        let mut acc = 0.0;
        for x in a.iter() {
            acc += x * x;
        }
        acc.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = offdiag_frobenius(&m);
        if off <= threshold {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NonConvergence {
                sweeps,
                offdiag: off,
            });
        }
        for i in 0..p {
            for j in (i + 1)..p {
                let aij = m[(i, j)];
                if aij == 0.0 {
                    continue;
                }
                // Rotation angle: tan(2θ) = 2 a_ij / (a_jj - a_ii), solved
                // for the smaller-angle root t = tan(θ) for stability.
                let theta = (m[(j, j)] - m[(i, i)]) / (2.0 * aij);
                let t = if theta.abs() > 1e150 {
                    // Avoid overflow in theta²; the root collapses to 1/(2θ).
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                m[(i, i)] -= t * aij;
                m[(j, j)] += t * aij;
                m[(i, j)] = 0.0;
                m[(j, i)] = 0.0;
                for r in 0..p {
                    if r == i || r == j {
                        continue;
                    }
                    let mri = m[(r, i)];
                    let mrj = m[(r, j)];
                    let new_ri = mri - s * (mrj + tau * mri);
                    let new_rj = mrj + s * (mri - tau * mrj);
                    m[(r, i)] = new_ri;
                    m[(i, r)] = new_ri;
                    m[(r, j)] = new_rj;
                    m[(j, r)] = new_rj;
                }
                for r in 0..p {
                    let vri = v[(r, i)];
                    let vrj = v[(r, j)];
                    v[(r, i)] = vri - s * (vrj + tau * vri);
                    v[(r, j)] = vrj + s * (vri - tau * vrj);
                }
            }
        }
        sweeps += 1;
    }

    // Sort ascending; a stable sort keeps tie order deterministic.
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| {
        m[(x, x)]
            .partial_cmp(&m[(y, y)])
            .expect("eigenvalues are finite")
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&k| m[(k, k)]).collect();
    let mut vectors = Array2::zeros((p, p));
    for (new_col, &old_col) in order.iter().enumerate() {
        // Sign convention: first nonzero component positive.
        let mut sign = 1.0;
        for r in 0..p {
            let x = v[(r, old_col)];
            if x != 0.0 {
                if x < 0.0 {
                    sign = -1.0;
                }
                break;
            }
        }
        for r in 0..p {
            vectors[(r, new_col)] = sign * v[(r, old_col)];
        }
    }

    Ok(EigenDecomp {
        eigenvalues,
        vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sym(rows: &[&[f64]]) -> SymmetricMatrix {
        let p = rows.len();
        let mut flat = Vec::with_capacity(p * p);
        for r in rows {
            assert_eq!(r.len(), p);
            flat.extend_from_slice(r);
        }
        SymmetricMatrix::from_slice(p, &flat).expect("valid test matrix")
    }

    /// Deterministic pseudo-random entries for tests that need fixed
    /// matrices without depending on the sampling module.
    fn lcg_values(seed: u64, count: usize) -> Vec<f64> {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            out.push(((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0);
        }
        out
    }

    fn random_symmetric(p: usize, seed: u64) -> SymmetricMatrix {
        let vals = lcg_values(seed, p * p);
        let mut m = Array2::zeros((p, p));
        let mut k = 0;
        for i in 0..p {
            for j in 0..=i {
                m[(i, j)] = 3.0 * vals[k];
                m[(j, i)] = 3.0 * vals[k];
                k += 1;
            }
        }
        SymmetricMatrix::new(m).unwrap()
    }

    fn random_spd(p: usize, seed: u64) -> SpdMatrix {
        let vals = lcg_values(seed, p * p);
        let mut g = Array2::zeros((p, p));
        let mut k = 0;
        for i in 0..p {
            for j in 0..p {
                g[(i, j)] = vals[k];
                k += 1;
            }
        }
        let gtg = g.t().dot(&g) + Array2::<f64>::eye(p) * 0.5;
        SpdMatrix::new(SymmetricMatrix::new(gtg).unwrap()).unwrap()
    }

    #[test]
    fn construction_rejects_asymmetry_beyond_tolerance() {
        let m = Array2::from_shape_vec((2, 2), vec![1.0, 2.0, 2.5, 1.0]).unwrap();
        assert!(matches!(
            SymmetricMatrix::new(m),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn construction_symmetrizes_rounding_noise() {
        let m = Array2::from_shape_vec((2, 2), vec![1.0, 2.0, 2.0 + 1e-13, 1.0]).unwrap();
        let s = SymmetricMatrix::new(m).unwrap();
        assert_eq!(s.get(0, 1), s.get(1, 0));
    }

    #[test]
    fn construction_rejects_non_finite() {
        let m = Array2::from_shape_vec((2, 2), vec![1.0, f64::NAN, f64::NAN, 1.0]).unwrap();
        assert!(matches!(
            SymmetricMatrix::new(m),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn eigh_two_by_two_analytic() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3 with eigenvectors
        // (1,-1)/sqrt(2) and (1,1)/sqrt(2).
        let d = sym(&[&[2.0, 1.0], &[1.0, 2.0]]).eigh().unwrap();
        assert_relative_eq!(d.eigenvalues[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(d.eigenvalues[1], 3.0, max_relative = 1e-12);
        let r = 0.5_f64.sqrt();
        assert_relative_eq!(d.vectors[(0, 0)], r, max_relative = 1e-10);
        assert_relative_eq!(d.vectors[(1, 0)], -r, max_relative = 1e-10);
        assert_relative_eq!(d.vectors[(0, 1)], r, max_relative = 1e-10);
        assert_relative_eq!(d.vectors[(1, 1)], r, max_relative = 1e-10);
    }

    #[test]
    fn eigh_diagonal_is_sorted_permutation() {
        let d = SymmetricMatrix::from_diag(&[5.0, 2.0, 7.0]).eigh().unwrap();
        assert_eq!(d.eigenvalues, vec![2.0, 5.0, 7.0]);
        // Eigenvectors are permuted identity columns.
        let expected = [(1, 0), (0, 1), (2, 2)];
        for &(r, c) in &expected {
            assert_relative_eq!(d.vectors[(r, c)], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn eigh_reconstruction_is_tight() {
        let a = random_symmetric(6, 42);
        let d = a.eigh().unwrap();
        let rec = d.reconstruct();
        let err = a.max_abs_diff(&rec).unwrap() * (6.0 * 6.0_f64).sqrt();
        assert!(
            err <= 1e-10 * a.frobenius_norm().max(1.0),
            "reconstruction error {err:.3e}"
        );
    }

    #[test]
    fn eigh_orthonormality() {
        let a = random_symmetric(8, 7);
        let d = a.eigh().unwrap();
        let vt_v = d.vectors.t().dot(&d.vectors);
        let mut err = 0.0_f64;
        for ((i, j), &x) in vt_v.indexed_iter() {
            let target = if i == j { 1.0 } else { 0.0 };
            err += (x - target) * (x - target);
        }
        assert!(err.sqrt() <= 1e-10 * (8.0_f64).sqrt());
    }

    #[test]
    fn eigh_is_deterministic() {
        let a = random_symmetric(10, 3);
        let d1 = a.eigh().unwrap();
        let d2 = a.eigh().unwrap();
        assert_eq!(d1.eigenvalues, d2.eigenvalues);
        assert_eq!(d1.vectors, d2.vectors);
    }

    #[test]
    fn cholesky_identity_and_diagonal() {
        let i3 = SpdMatrix::new(SymmetricMatrix::identity(3)).unwrap();
        assert_eq!(i3.cholesky_lower(), &Array2::<f64>::eye(3));

        let d = SpdMatrix::new(SymmetricMatrix::from_diag(&[4.0, 9.0])).unwrap();
        assert_eq!(d.cholesky_lower()[(0, 0)], 2.0);
        assert_eq!(d.cholesky_lower()[(1, 1)], 3.0);
        assert_eq!(d.cholesky_lower()[(0, 1)], 0.0);
    }

    #[test]
    fn cholesky_round_trip_recovers_factor() {
        // Build L, form L Lᵀ, refactor, and compare.
        let p = 5;
        let vals = lcg_values(11, p * p);
        let mut l = Array2::zeros((p, p));
        let mut k = 0;
        for i in 0..p {
            for j in 0..=i {
                l[(i, j)] = if i == j { 1.0 + vals[k].abs() } else { vals[k] };
                k += 1;
            }
        }
        let a = SymmetricMatrix::symmetrize(l.dot(&l.t()));
        let spd = SpdMatrix::new(a).unwrap();
        let mut err = 0.0_f64;
        for ((i, j), &x) in spd.cholesky_lower().indexed_iter() {
            err = err.max((x - l[(i, j)]).abs());
        }
        assert!(err <= 1e-10, "factor recovery error {err:.3e}");
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = SymmetricMatrix::from_diag(&[1.0, -2.0]);
        assert!(matches!(
            SpdMatrix::new(m),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
    }

    #[test]
    fn spectral_norm_examples() {
        assert_relative_eq!(SymmetricMatrix::identity(4).spectral_norm(), 1.0);
        assert_relative_eq!(
            SymmetricMatrix::from_diag(&[-4.0, 3.0]).spectral_norm(),
            4.0
        );
        assert_relative_eq!(
            sym(&[&[0.0, 1.0], &[1.0, 0.0]]).spectral_norm(),
            1.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn spectral_norm_agrees_with_power_iteration() {
        // 50 power-iteration steps on a seeded start vector provide an
        // independent estimate of max |eigenvalue|.
        let a = random_symmetric(7, 19);
        let mut x = Array1::from(lcg_values(5, 7));
        let mut estimate = 0.0;
        for _ in 0..50 {
            let y = a.entries().dot(&x);
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            estimate = norm / x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x = y / norm;
        }
        assert_relative_eq!(a.spectral_norm(), estimate, max_relative = 1e-8);
    }

    #[test]
    fn frobenius_norm_examples() {
        assert_relative_eq!(SymmetricMatrix::identity(2).frobenius_norm(), 2.0_f64.sqrt());
        assert_eq!(SymmetricMatrix::zeros(3).frobenius_norm(), 0.0);
        assert_relative_eq!(SymmetricMatrix::from_diag(&[3.0, 4.0]).frobenius_norm(), 5.0);
    }

    #[test]
    fn log_det_examples_and_dual_route() {
        assert_eq!(SpdMatrix::identity(6).log_det(), 0.0);
        let d = SpdMatrix::new(SymmetricMatrix::from_diag(&[2.0, 3.0])).unwrap();
        assert_relative_eq!(d.log_det(), 6.0_f64.ln(), max_relative = 1e-14);

        // Cholesky-based log-det against the eigenvalue route.
        let a = random_spd(6, 23);
        let via_chol = a.log_det();
        let via_eig: f64 = a.eigh().unwrap().eigenvalues.iter().map(|l| l.ln()).sum();
        assert_relative_eq!(via_chol, via_eig, max_relative = 1e-9);
    }

    #[test]
    fn matrix_function_examples() {
        let zero = SymmetricMatrix::identity(4).matrix_log().unwrap();
        assert!(zero.frobenius_norm() <= 1e-12);

        let inv = SymmetricMatrix::from_diag(&[2.0, 4.0]).matrix_inverse().unwrap();
        assert_relative_eq!(inv.get(0, 0), 0.5, max_relative = 1e-12);
        assert_relative_eq!(inv.get(1, 1), 0.25, max_relative = 1e-12);
    }

    #[test]
    fn matrix_exp_log_round_trip() {
        let base = random_symmetric(5, 31).scale(0.3);
        let expd = base.matrix_function(f64::exp).unwrap();
        let back = expd.matrix_log().unwrap();
        let err = base.max_abs_diff(&back).unwrap();
        assert!(err <= 1e-9, "exp/log round-trip error {err:.3e}");
    }

    #[test]
    fn matrix_log_rejects_nonpositive_spectrum() {
        let m = SymmetricMatrix::from_diag(&[1.0, -1.0]);
        assert!(matches!(m.matrix_log(), Err(Error::Domain { .. })));
    }

    #[test]
    fn solve_vec_round_trip() {
        let a = random_spd(6, 3);
        let b = Array1::from(lcg_values(17, 6));
        let x = a.solve_vec(&b).unwrap();
        let back = a.entries().dot(&x);
        for i in 0..6 {
            assert_relative_eq!(back[i], b[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn inverse_log_det_cancels() {
        let a = random_spd(5, 9);
        let inv = a.inverse().unwrap();
        assert!(
            (a.log_det() + inv.log_det()).abs() <= 1e-8,
            "log dets should cancel"
        );
    }

    #[test]
    fn identity_function_is_identity_map() {
        let a = random_symmetric(6, 77);
        let same = a.matrix_function(|x| x).unwrap();
        let err = a.max_abs_diff(&same).unwrap();
        assert!(err <= 1e-12 * a.frobenius_norm().max(1.0));
    }

    proptest! {
        #[test]
        fn norm_sandwich(seed in 0u64..500, p in 2usize..8) {
            let a = random_symmetric(p, seed.wrapping_add(1));
            let spec = a.spectral_norm();
            let fro = a.frobenius_norm();
            prop_assert!(spec <= fro * (1.0 + 1e-12));
            prop_assert!(fro <= (p as f64).sqrt() * spec * (1.0 + 1e-12));
        }

        #[test]
        fn eigh_round_trip_idempotent(seed in 0u64..200, p in 2usize..7) {
            let a = random_symmetric(p, seed.wrapping_add(1000));
            let d1 = a.eigh().unwrap();
            let d2 = d1.reconstruct().eigh().unwrap();
            for (l1, l2) in d1.eigenvalues.iter().zip(d2.eigenvalues.iter()) {
                let scale = l1.abs().max(1.0);
                prop_assert!((l1 - l2).abs() <= 1e-9 * scale);
            }
        }
    }
}
