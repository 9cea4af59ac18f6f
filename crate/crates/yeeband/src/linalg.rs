//! Small shared helpers for complex vectors and dense matrices.

use ndarray::Array2;
use num_complex::Complex64;

/// e^{ı2π·turns}.
pub fn unit_phase(turns: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * turns)
}

/// Conjugated inner product ⟨a, b⟩ = Σ conj(aᵢ)·bᵢ.
pub fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Euclidean norm of a complex vector.
pub fn nrm2(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// y ← y + alpha·x.
pub fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Conjugate transpose of a dense matrix.
pub fn adjoint(m: &Array2<Complex64>) -> Array2<Complex64> {
    m.t().mapv(|z| z.conj())
}

/// Frobenius norm of a dense matrix.
pub fn fro_norm(m: &Array2<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Max-distance of a square matrix from the identity, in Frobenius norm.
pub fn identity_defect(m: &Array2<Complex64>) -> f64 {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::ZERO };
            acc += (m[(i, j)] - target).norm_sqr();
        }
    }
    acc.sqrt()
}
