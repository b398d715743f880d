use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative Hermiticity tolerance for operator inputs.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative reconstruction tolerance for eigendecompositions.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;
/// Condition-number ceiling above which a system is reported singular.
pub const SINGULAR_CONDITION: f64 = 1e14;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Truncated bosonic lowering operator on `n` Fock states.
pub fn annihilation(n: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = c((k as f64).sqrt(), 0.0);
    }
    a
}

/// Projector-like outer product |i><j| in dimension n.
pub fn ket_bra(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = C1;
    m
}

pub fn basis_ket(n: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[i] = C1;
    v
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// max|A − A†|.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut d = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            d = d.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    d
}

pub fn ensure_hermitian(a: &CMatrix, rel_tol: f64) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = max_abs(a);
    let defect = hermiticity_defect(a);
    if defect > rel_tol * scale || !defect.is_finite() {
        return Err(Error::NotHermitian { defect, scale });
    }
    Ok(())
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().sum()
}

/// Tr(A B) without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let mut s = C0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Sorted eigenvalues with orthonormal eigenvector columns.
///
/// Phase convention: in every column the entry of largest magnitude is real
/// and positive; near-ties (within 1e-10 relative) go to the lowest index.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    /// V f(Λ) V†.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (k, &v) in self.values.iter().enumerate() {
            let fk = f(v);
            for i in 0..n {
                scaled[(i, k)] *= fk;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }

    /// ⟨i|A|j⟩ in the eigenbasis for the first `n` states.
    pub fn project(&self, a: &CMatrix, n: usize) -> CMatrix {
        let v = self.vectors.columns(0, n);
        v.adjoint() * a * v
    }
}

pub fn apply_phase_convention(vectors: &mut CMatrix) {
    for k in 0..vectors.ncols() {
        let mut col = vectors.column_mut(k);
        let max = col.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        if max == 0.0 {
            continue;
        }
        let pivot = col
            .iter()
            .position(|z| z.norm() >= max * (1.0 - 1e-10))
            .unwrap_or(0);
        let p = col[pivot];
        let phase = p.conj() / p.norm();
        for z in col.iter_mut() {
            *z *= phase;
        }
        col[pivot] = c(col[pivot].re, 0.0);
    }
}

pub fn hermitian_eig(a: &CMatrix) -> Result<EigenSystem> {
    ensure_hermitian(a, HERMITIAN_TOL)?;
    let n = a.nrows();
    if n == 0 {
        return Err(Error::DimensionMismatch("empty matrix".into()));
    }
    let sym = (a + a.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::try_new(sym, 1e-15, 100 * n.max(10)).ok_or(Error::NoConvergence {
        dim: n,
        residual: f64::INFINITY,
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    apply_phase_convention(&mut vectors);
    let out = EigenSystem { values, vectors };
    let norm = a.norm();
    let residual = (out.reconstruct() - a).norm();
    if !(residual <= RECONSTRUCTION_TOL * norm.max(f64::MIN_POSITIVE)) {
        return Err(Error::NoConvergence { dim: n, residual });
    }
    Ok(out)
}

/// Spectral calculus: V f(Λ) V† for Hermitian `a`.
pub fn operator_function(a: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    Ok(hermitian_eig(a)?.map(f))
}

#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub x: CVector,
    /// 1-norm condition estimate ‖A‖₁‖A⁻¹‖₁.
    pub condition: f64,
    /// ‖Ax − b‖ / ‖b‖.
    pub relative_residual: f64,
}

fn norm1(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn solve_linear(a: &CMatrix, b: &CVector) -> Result<LinearSolution> {
    if !a.is_square() || a.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "system {}x{} with rhs of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let lu = a.clone().lu();
    let inv = lu
        .try_inverse()
        .ok_or(Error::Singular { condition: f64::INFINITY })?;
    let condition = norm1(a) * norm1(&inv);
    if !(condition < SINGULAR_CONDITION) {
        return Err(Error::Singular { condition });
    }
    let mut x = lu.solve(b).ok_or(Error::Singular { condition })?;
    // one sweep of iterative refinement
    let r = b - a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    let bnorm = b.norm();
    let rnorm = (b - a * &x).norm();
    let relative_residual = if bnorm > 0.0 { rnorm / bnorm } else { rnorm };
    Ok(LinearSolution { x, condition, relative_residual })
}

/// Column-stacking vectorization.
pub fn vectorize(a: &CMatrix) -> CVector {
    CVector::from_column_slice(a.as_slice())
}

pub fn unvectorize(v: &CVector, n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, v.as_slice())
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[C0, C1, C1, C0])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[C0, c(0.0, -1.0), c(0.0, 1.0), C0])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[C1, C0, C0, -C1])
}
