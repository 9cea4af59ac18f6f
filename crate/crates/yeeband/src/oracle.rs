//! Dense reference path: explicit matrices and a self-contained Hermitian
//! eigensolver, for cross-checking the matrix-free production code at
//! small sizes.
//!
//! The eigensolver is cyclic Jacobi with complex rotations. It is slow and
//! simple on purpose: its only job is to be an independent source of truth,
//! validated by internal identities (residual, orthonormality, positive
//! semidefiniteness) rather than by the code it checks. The generalized
//! problem A x = λ B x with diagonal B reduces to the Hermitian problem
//! B^{−1/2}·A·B^{−1/2} y = λ y, y = B^{1/2} x.

use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

use crate::material::PermittivityField;
use crate::spectral::{SpectralBasis, SvdBlocks};
use crate::yee::DiscreteCurl;

/// Largest grid cell count the dense path will materialize (3n×3n blocks).
pub const DENSE_POINT_CAP: usize = 1000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("dense path supports at most {cap} grid points, got {n}")]
    CapExceeded { n: usize, cap: usize },
}

/// All operators of one k-point materialized as dense matrices.
pub struct DenseBundle {
    /// 3n×3n curl.
    pub c: Array2<Complex64>,
    /// n×n diagonalizing unitary.
    pub t: Array2<Complex64>,
    /// 3n×3n right singular vectors, columns [Q1 Q2 Q0].
    pub q: Array2<Complex64>,
    /// 3n×3n left singular vectors, columns [P1 P2 P0].
    pub p: Array2<Complex64>,
    /// 3n×3n double curl C*C.
    pub a: Array2<Complex64>,
    /// Diagonal of B, stacked [b1; b2; b3].
    pub b_diag: Vec<f64>,
}

fn matmul(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    assert_eq!(ca, rb);
    let mut out = Array2::default((ra, cb));
    for r in 0..ra {
        for t in 0..ca {
            let art = a[[r, t]];
            if art == Complex64::default() {
                continue;
            }
            for c in 0..cb {
                out[[r, c]] += art * b[[t, c]];
            }
        }
    }
    out
}

fn adjoint(a: &Array2<Complex64>) -> Array2<Complex64> {
    let (r, c) = a.dim();
    Array2::from_shape_fn((c, r), |(i, j)| a[[j, i]].conj())
}

/// (I₃⊗T)·diag-stack: column block b of the result is T·diag(d_b).
fn expand_stack(t: &Array2<Complex64>, stacks: [[&Vec<Complex64>; 3]; 3]) -> Array2<Complex64> {
    let n = t.dim().0;
    let mut out = Array2::default((3 * n, 3 * n));
    for (col_block, diags) in stacks.iter().enumerate() {
        for (row_block, diag) in diags.iter().enumerate() {
            for r in 0..n {
                for q in 0..n {
                    out[[row_block * n + r, col_block * n + q]] = t[[r, q]] * diag[q];
                }
            }
        }
    }
    out
}

pub fn dense_assemble(
    curl: &DiscreteCurl,
    basis: &SpectralBasis,
    svd: &SvdBlocks,
    field: &PermittivityField,
) -> Result<DenseBundle, OracleError> {
    let n = curl.n();
    if n > DENSE_POINT_CAP {
        return Err(OracleError::CapExceeded { n, cap: DENSE_POINT_CAP });
    }
    let c = curl.assemble_curl();
    let t = basis.build_t_dense().expect("dense cap already checked");
    let a = matmul(&adjoint(&c), &c);

    let q = expand_stack(
        &t,
        [
            [&svd.pi1.a, &svd.pi1.b, &svd.pi1.c],
            [&svd.pi2.a, &svd.pi2.b, &svd.pi2.c],
            [&svd.pi0.a, &svd.pi0.b, &svd.pi0.c],
        ],
    );
    let conj_neg = |v: &Vec<Complex64>| -> Vec<Complex64> { v.iter().map(|x| -x.conj()).collect() };
    let conj_pos = |v: &Vec<Complex64>| -> Vec<Complex64> { v.iter().map(|x| x.conj()).collect() };
    let p2n = [conj_neg(&svd.pi2.a), conj_neg(&svd.pi2.b), conj_neg(&svd.pi2.c)];
    let p1c = [conj_pos(&svd.pi1.a), conj_pos(&svd.pi1.b), conj_pos(&svd.pi1.c)];
    let p0c = [conj_pos(&svd.pi0.a), conj_pos(&svd.pi0.b), conj_pos(&svd.pi0.c)];
    let p = expand_stack(
        &t,
        [
            [&p2n[0], &p2n[1], &p2n[2]],
            [&p1c[0], &p1c[1], &p1c[2]],
            [&p0c[0], &p0c[1], &p0c[2]],
        ],
    );

    let mut b_diag = Vec::with_capacity(3 * n);
    b_diag.extend_from_slice(&field.b1);
    b_diag.extend_from_slice(&field.b2);
    b_diag.extend_from_slice(&field.b3);

    Ok(DenseBundle { c, t, q, p, a, b_diag })
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
/// Returns eigenvalues ascending and the matching eigenvector columns.
pub fn hermitian_eig(a: &Array2<Complex64>) -> (Vec<f64>, Array2<Complex64>) {
    let n = a.dim().0;
    assert_eq!(a.dim().1, n);
    let mut m = a.clone();
    for r in 0..n {
        for c in 0..r {
            let sym = 0.5 * (m[[r, c]] + m[[c, r]].conj());
            m[[r, c]] = sym;
            m[[c, r]] = sym.conj();
        }
        m[[r, r]] = Complex64::new(m[[r, r]].re, 0.0);
    }
    let mut v = Array2::<Complex64>::eye(n);
    let norm: f64 = m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (vec![0.0; n], v);
    }
    let tol = 1e-15 * norm;

    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * m[[p, q]].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-14 * norm {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                let mag = apq.norm();
                if mag <= tol {
                    continue;
                }
                let phase = apq / mag;
                let app = m[[p, p]].re;
                let aqq = m[[q, q]].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cos = 1.0 / (1.0 + t * t).sqrt();
                let sin = t * cos;
                // Columns transform as [p q] ← [p q]·[[c, s·φ], [−s·φ̄, c]].
                let gpq = sin * phase;
                for r in 0..n {
                    let mp = m[[r, p]];
                    let mq = m[[r, q]];
                    m[[r, p]] = mp * cos - mq * gpq.conj();
                    m[[r, q]] = mp * gpq + mq * cos;
                    let vp = v[[r, p]];
                    let vq = v[[r, q]];
                    v[[r, p]] = vp * cos - vq * gpq.conj();
                    v[[r, q]] = vp * gpq + vq * cos;
                }
                for cidx in 0..n {
                    let mp = m[[p, cidx]];
                    let mq = m[[q, cidx]];
                    m[[p, cidx]] = mp * cos - mq * gpq;
                    m[[q, cidx]] = mp * gpq.conj() + mq * cos;
                }
                m[[p, q]] = Complex64::default();
                m[[q, p]] = Complex64::default();
                m[[p, p]] = Complex64::new(m[[p, p]].re, 0.0);
                m[[q, q]] = Complex64::new(m[[q, q]].re, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[i, i]].re.total_cmp(&m[[j, j]].re));
    let vals = order.iter().map(|&i| m[[i, i]].re).collect();
    let vecs = Array2::from_shape_fn((n, n), |(r, c)| v[[r, order[c]]]);
    (vals, vecs)
}

/// All eigenpairs of A x = λ B x with diagonal positive B, λ ascending.
/// Eigenvectors are returned in the original coordinates (B-orthonormal).
pub fn dense_gep(a: &Array2<Complex64>, b_diag: &[f64]) -> (Vec<f64>, Array2<Complex64>) {
    let n = a.dim().0;
    assert_eq!(b_diag.len(), n);
    let scale: Vec<f64> = b_diag.iter().map(|x| 1.0 / x.sqrt()).collect();
    let s = Array2::from_shape_fn((n, n), |(r, c)| a[[r, c]] * scale[r] * scale[c]);
    let (vals, y) = hermitian_eig(&s);
    let x = Array2::from_shape_fn((n, n), |(r, c)| y[[r, c]] * scale[r]);
    (vals, x)
}

/// The `count` smallest generalized eigenvalues, ascending.
pub fn dense_gep_eigs(a: &Array2<Complex64>, b_diag: &[f64], count: usize) -> Vec<f64> {
    let (vals, _) = dense_gep(a, b_diag);
    vals.into_iter().take(count).collect()
}
