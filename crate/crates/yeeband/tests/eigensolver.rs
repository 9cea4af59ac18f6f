mod common;

use common::{corrected, random_cells_sized, test_vector};
use ndarray::Array2;
use num_complex::Complex64;
use yeeband::eigensolver::{ReducedSystem, SolverConfig};
use yeeband::fftmv::TransformPlan;
use yeeband::lattice::BravaisClass;
use yeeband::linalg::nrm2;
use yeeband::material::{sample_b, Geometry, PermittivityField, Shape};
use yeeband::oracle::{dense_assemble, dense_gep, hermitian_eig, DenseBundle};
use yeeband::spectral::{build_svd_blocks, eigen_angles};
use yeeband::yee::DiscreteCurl;

fn k_for(seed: u64) -> [f64; 3] {
    let t = seed as f64;
    [0.16 + 0.2 * (t * 0.8).sin(), -0.22 + 0.2 * (t * 0.6).cos(), 0.27 + 0.2 * (t * 1.2).sin()]
}

fn sphere_geometry(eps_in: f64) -> Geometry {
    Geometry {
        shapes: vec![Shape::Sphere { center: [0.5, 0.5, 0.5], radius: 0.3, eps_in }],
        eps_out: 1.0,
    }
}

/// Dense M = Qr*·B⁻¹·Qr from the oracle bundle.
fn dense_m(bundle: &DenseBundle, field: &PermittivityField) -> Array2<Complex64> {
    let n = field.n();
    let mut b_inv = Vec::with_capacity(3 * n);
    for arr in [&field.b1, &field.b2, &field.b3] {
        b_inv.extend(arr.iter().map(|&v| 1.0 / v));
    }
    let mut m = Array2::<Complex64>::default((2 * n, 2 * n));
    for r in 0..2 * n {
        for c in 0..2 * n {
            let mut acc = Complex64::default();
            for t in 0..3 * n {
                acc += bundle.q[[t, r]].conj() * b_inv[t] * bundle.q[[t, c]];
            }
            m[[r, c]] = acc;
        }
    }
    m
}

#[test]
fn reduced_operator_matches_its_dense_form() {
    for (idx, cell) in random_cells_sized(83, 5, 2, 4).iter().enumerate() {
        let k = k_for(idx as u64);
        let curl = DiscreteCurl::new(cell, k);
        let basis = eigen_angles(cell, k);
        let svd = build_svd_blocks(&basis).unwrap();
        let field = sample_b(&sphere_geometry(5.0), cell).unwrap();
        let bundle = dense_assemble(&curl, &basis, &svd, &field).unwrap();
        let m = dense_m(&bundle, &field);
        let n = cell.n();

        let mut plan = TransformPlan::new(&basis);
        let mut sys = ReducedSystem::new(&mut plan, &svd, &field);
        let y = test_vector(2 * n, 11 + idx as u64);
        let mut got = vec![Complex64::default(); 2 * n];
        sys.apply_ar(&y, &mut got).unwrap();

        let mut want = vec![Complex64::default(); 2 * n];
        for r in 0..2 * n {
            let mut acc = Complex64::default();
            for c in 0..2 * n {
                acc += m[[r, c]] * y[c] * svd.sigma_r[c];
            }
            want[r] = acc * svd.sigma_r[r];
        }
        let err: f64 = (0..2 * n).map(|s| (got[s] - want[s]).norm_sqr()).sum::<f64>().sqrt();
        let scale: f64 = want.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(err <= 1e-12 * scale, "cell {idx}: {:.2e}", err / scale);
    }
}

#[test]
fn inner_solve_matches_a_dense_inverse() {
    let cell = corrected(BravaisClass::Orthorhombic, [1.0, 0.9, 0.8], [90.0; 3], [3, 3, 2]);
    let k = [0.19, -0.23, 0.19];
    let curl = DiscreteCurl::new(&cell, k);
    let basis = eigen_angles(&cell, k);
    let svd = build_svd_blocks(&basis).unwrap();
    let n = cell.n();

    let noise = |seed: u64, len: usize| -> Vec<f64> {
        (0..len).map(|s| 1.5 + 0.5 * ((s as f64 + seed as f64) * 0.77).sin()).collect()
    };
    let field = PermittivityField {
        b1: noise(1, n),
        b2: noise(2, n),
        b3: noise(3, n),
        eps_min: 1.0,
        eps_max: 2.0,
    };
    let bundle = dense_assemble(&curl, &basis, &svd, &field).unwrap();
    let m = dense_m(&bundle, &field);
    let (vals, vecs) = hermitian_eig(&m);

    let rhs = test_vector(2 * n, 55);
    let mut want = vec![Complex64::default(); 2 * n];
    for c in 0..2 * n {
        let mut proj = Complex64::default();
        for r in 0..2 * n {
            proj += vecs[[r, c]].conj() * rhs[r];
        }
        proj /= vals[c];
        for r in 0..2 * n {
            want[r] += vecs[[r, c]] * proj;
        }
    }

    let mut plan = TransformPlan::new(&basis);
    let mut sys = ReducedSystem::new(&mut plan, &svd, &field);
    let mut got = vec![Complex64::default(); 2 * n];
    sys.solve_inner(&rhs, &mut got, 1e-13, 500).unwrap();
    let err: f64 = (0..2 * n).map(|s| (got[s] - want[s]).norm_sqr()).sum::<f64>().sqrt();
    assert!(err <= 1e-10 * nrm2(&want), "{:.2e}", err / nrm2(&want));
}

#[test]
fn lanczos_matches_the_dense_generalized_solve() {
    let cell = corrected(BravaisClass::Orthorhombic, [1.0, 0.9, 0.8], [90.0; 3], [4, 3, 3]);
    let k = [0.23, -0.17, 0.21];
    let curl = DiscreteCurl::new(&cell, k);
    let basis = eigen_angles(&cell, k);
    let svd = build_svd_blocks(&basis).unwrap();
    let field = sample_b(&sphere_geometry(13.0), &cell).unwrap();
    let bundle = dense_assemble(&curl, &basis, &svd, &field).unwrap();
    let n = cell.n();

    let (gep_vals, _) = dense_gep(&bundle.a, &bundle.b_diag);
    let positive: Vec<f64> = gep_vals[n..n + 10].to_vec();

    let mut plan = TransformPlan::new(&basis);
    let mut sys = ReducedSystem::new(&mut plan, &svd, &field);
    let result = sys.inverse_lanczos(&SolverConfig::default(), true).unwrap();
    assert!(result.diagnostics.converged);
    for (got, want) in result.eigenvalues.iter().zip(&positive) {
        assert!((got - want).abs() <= 1e-8 * want, "got {got}, want {want}");
    }

    let vectors = result.eigenvectors.as_ref().unwrap();
    for (idx, e) in vectors.iter().enumerate() {
        let lambda = result.eigenvalues[idx];
        let mut curl_e = vec![Complex64::default(); 3 * n];
        curl.apply_curl(e, &mut curl_e);
        let mut a_e = vec![Complex64::default(); 3 * n];
        curl.apply_curl_adjoint(&curl_e, &mut a_e);
        let mut b_e = vec![Complex64::default(); 3 * n];
        field.apply_b(e, &mut b_e);
        let num: f64 = (0..3 * n)
            .map(|s| (a_e[s] - lambda * b_e[s]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den: f64 = lambda * b_e.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(num <= 1e-8 * den, "eigenpair {idx} residual {:.2e}", num / den);
        let defect = sys.divergence_defect(e).unwrap();
        assert!(defect <= 1e-8, "eigenpair {idx} divergence {defect:.2e}");
    }
}

#[test]
fn recovered_vacuum_mode_is_a_reduced_basis_column() {
    let cell = corrected(BravaisClass::Orthorhombic, [1.0, 0.9, 0.8], [90.0; 3], [3, 2, 2]);
    let k = [0.31, 0.17, -0.13];
    let basis = eigen_angles(&cell, k);
    let svd = build_svd_blocks(&basis).unwrap();
    let n = cell.n();
    let field = PermittivityField::vacuum(n);
    let mut plan = TransformPlan::new(&basis);

    let mut y = vec![Complex64::default(); 2 * n];
    y[0] = Complex64::new(1.0, 0.0);
    let mut column = vec![Complex64::default(); 3 * n];
    plan.apply_qr(&svd, &y, &mut column).unwrap();

    let mut sys = ReducedSystem::new(&mut plan, &svd, &field);
    let e = sys.recover_field(&y).unwrap();
    assert!((nrm2(&e) - 1.0).abs() < 1e-13);
    let col_norm = nrm2(&column);
    let overlap = yeeband::linalg::cdot(&column, &e).norm();
    assert!((overlap - col_norm).abs() <= 1e-12 * col_norm);
}

#[test]
fn inner_iterations_respect_the_conditioning_bound() {
    let cell = corrected(BravaisClass::Cubic, [1.0, 1.0, 1.0], [90.0; 3], [8, 8, 8]);
    let geom = Geometry {
        shapes: vec![Shape::Sphere { center: [0.5, 0.5, 0.5], radius: 0.15, eps_in: 13.0 }],
        eps_out: 1.0,
    };
    let field = sample_b(&geom, &cell).unwrap();
    let k = [0.21, 0.13, -0.17];
    let basis = eigen_angles(&cell, k);
    let svd = build_svd_blocks(&basis).unwrap();
    let mut plan = TransformPlan::new(&basis);
    let mut sys = ReducedSystem::new(&mut plan, &svd, &field);
    let n = cell.n();
    let rhs = test_vector(2 * n, 99);
    let mut x = vec![Complex64::default(); 2 * n];
    let iters = sys.solve_inner(&rhs, &mut x, 1e-13, 500).unwrap();
    // κ(M) ≤ 13 ⇒ error shrinks by ((√13−1)/(√13+1)) ≈ 0.566 per step;
    // 1e-13 needs about log(2e13)/log(1/0.566) ≈ 54 steps.
    assert!(iters <= 60, "CG took {iters} iterations");
}

#[test]
fn measured_conditioning_stays_under_the_material_bound() {
    let cell = corrected(BravaisClass::Orthorhombic, [1.0, 0.9, 0.8], [90.0; 3], [3, 3, 2]);
    let k = [0.23, 0.19, -0.27];
    let curl = DiscreteCurl::new(&cell, k);
    let basis = eigen_angles(&cell, k);
    let svd = build_svd_blocks(&basis).unwrap();
    let field = sample_b(&sphere_geometry(13.0), &cell).unwrap();
    let bundle = dense_assemble(&curl, &basis, &svd, &field).unwrap();
    let m = dense_m(&bundle, &field);
    let (vals, _) = hermitian_eig(&m);
    let kappa = vals.last().unwrap() / vals.first().unwrap();
    assert!(
        kappa <= field.condition_number() + 1e-6,
        "κ(M) = {kappa:.6} exceeds κ(B⁻¹) = {}",
        field.condition_number()
    );
    assert!(vals[0] > 0.0);
}
