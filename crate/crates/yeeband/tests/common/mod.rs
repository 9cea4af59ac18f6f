//! Shared helpers for the integration test targets.
#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use yeeband::lattice::{BravaisClass, CorrectedLattice, LatticeSpec};

pub fn deg(d: f64) -> f64 {
    d.to_radians()
}

pub fn corrected(
    class: BravaisClass,
    lengths: [f64; 3],
    angles_deg: [f64; 3],
    grid: [usize; 3],
) -> CorrectedLattice {
    let spec = LatticeSpec::new(
        class,
        lengths,
        [deg(angles_deg[0]), deg(angles_deg[1]), deg(angles_deg[2])],
        grid,
    )
    .unwrap();
    CorrectedLattice::from_spec(spec).unwrap()
}

/// Random triclinic cells that pass both raw and snapped admissibility,
/// kept a healthy distance from the alignment boundary so that acos/cos
/// round-trips cannot flip the strict inequality.
pub fn random_cells(seed: u64, count: usize) -> Vec<CorrectedLattice> {
    random_cells_sized(seed, count, 3, 9)
}

/// Same sampler with the per-axis grid range [lo, hi) under caller control.
pub fn random_cells_sized(seed: u64, count: usize, lo: usize, hi: usize) -> Vec<CorrectedLattice> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count && attempts < 100_000 {
        attempts += 1;
        let l2 = rng.random_range(0.55..1.0);
        let l3 = rng.random_range(0.55..1.0);
        let a = rng.random_range(50.0..130.0);
        let b = rng.random_range(50.0..130.0);
        let g = rng.random_range(50.0..130.0);
        let n1 = rng.random_range(lo..hi);
        let n2 = rng.random_range(lo..hi);
        let n3 = rng.random_range(lo..hi);
        let spec = match LatticeSpec::new(
            BravaisClass::Triclinic,
            [1.0, l2, l3],
            [deg(a), deg(b), deg(g)],
            [n1, n2, n3],
        ) {
            Ok(s) => s,
            Err(_) => continue,
        };
        if let Ok(c) = CorrectedLattice::from_spec(spec) {
            let lhs = c.spec.len_a2 * c.sin_gamma;
            let rhs = c.spec.len_a3 * (c.cos_alpha - c.cos_gamma * c.cos_beta).abs() / c.sin_gamma;
            if lhs - rhs > 1e-6 * lhs {
                out.push(c);
            }
        }
    }
    assert_eq!(out.len(), count, "sampler starved");
    out
}

pub fn matmul(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (m, k) = a.dim();
    let (k2, n) = b.dim();
    assert_eq!(k, k2);
    let mut c = Array2::zeros((m, n));
    for i in 0..m {
        for l in 0..k {
            let ail = a[(i, l)];
            if ail.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..n {
                c[(i, j)] += ail * b[(l, j)];
            }
        }
    }
    c
}

/// Frobenius norm of a − b.
pub fn fro_diff(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Deterministic pseudo-random complex vector for matvec comparisons.
pub fn test_vector(len: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}
