mod common;

use common::corrected;
use yeeband::bandstructure::{csv_string, run_bands, sweep_permittivity};
use yeeband::eigensolver::SolverConfig;
use yeeband::lattice::{build_reciprocal, kpath_samples, BravaisClass, KPath, KSample};
use yeeband::material::{Geometry, Shape};
use yeeband::spectral::eigen_angles;

const TAU: f64 = 2.0 * std::f64::consts::PI;

fn sphere(eps_in: f64, radius: f64) -> Geometry {
    Geometry {
        shapes: vec![Shape::Sphere { center: [0.5, 0.5, 0.5], radius, eps_in }],
        eps_out: 1.0,
    }
}

/// Doubled √λq/2π, ascending, truncated to the requested band count.
fn vacuum_bands(corr: &yeeband::lattice::CorrectedLattice, k: [f64; 3], count: usize) -> Vec<f64> {
    let basis = eigen_angles(corr, k);
    let mut omegas: Vec<f64> =
        basis.lambda_q.iter().flat_map(|&v| [v.sqrt() / TAU; 2]).collect();
    omegas.sort_by(f64::total_cmp);
    omegas.truncate(count);
    omegas
}

#[test]
fn vacuum_rows_match_the_closed_form_along_a_path() {
    let corr = corrected(BravaisClass::Cubic, [1.0; 3], [90.0; 3], [4, 4, 3]);
    let cell = build_reciprocal(&corr).unwrap();
    let path = KPath::parse("Γ→X→M", 4).unwrap();
    let samples = kpath_samples(&path, &cell).unwrap();
    let cfg = SolverConfig::default();
    let result = run_bands(&corr, &Geometry::vacuum(), &samples, &cfg, 1).unwrap();

    assert_eq!(result.rows.len(), samples.len());
    assert_eq!(result.metadata.shift_notices.len(), 1);
    for row in &result.rows {
        assert!(row.status.is_ok(), "row {} failed", row.index);
        // The row reports the k it was actually solved at, so the closed
        // form is evaluated there too; the nudged Γ sample is FP-limited
        // by its ~1e13 eigenvalue spread, every other sample is exact to
        // solver tolerance.
        let expected = vacuum_bands(&corr, row.k, cfg.num_eigs);
        let tol = if row.index == 0 { 1e-3 } else { 1e-10 };
        for (got, want) in row.omegas.iter().zip(&expected) {
            assert!(
                (got - want).abs() <= tol * want.max(1e-9),
                "row {}: got {got}, want {want}",
                row.index
            );
        }
    }
}

#[test]
fn bands_stay_continuous_across_a_dielectric_path() {
    let corr = corrected(BravaisClass::Cubic, [1.0; 3], [90.0; 3], [16, 16, 16]);
    let cell = build_reciprocal(&corr).unwrap();
    let path = KPath::parse("Γ→X", 10).unwrap();
    let samples = kpath_samples(&path, &cell).unwrap();
    let cfg = SolverConfig::default();
    let result = run_bands(&corr, &sphere(13.0, 0.15), &samples, &cfg, 0).unwrap();

    for row in &result.rows {
        assert!(row.status.is_ok(), "row {} failed", row.index);
        assert!(row.omegas.is_sorted());
    }
    let first = &result.rows[0];
    let spacing = (first.omegas[cfg.num_eigs - 1] - first.omegas[0]) / (cfg.num_eigs - 1) as f64;
    for pair in result.rows.windows(2) {
        // Group velocity is capped by the vacuum light line, which in these
        // units is |dω/ds| ≤ 1; flat bands instead stay within a fraction
        // of the mean band spacing.
        let ds = pair[1].s - pair[0].s;
        let allowed = (1.05 * ds).max(0.2 * spacing);
        for (band, (a, b)) in pair[0].omegas.iter().zip(&pair[1].omegas).enumerate() {
            assert!(
                (a - b).abs() <= allowed,
                "band {band} jump {:.3e} ({a:.6} → {b:.6}) over Δs {ds:.3e} between rows {} and {}",
                (a - b).abs(),
                pair[0].index,
                pair[1].index
            );
        }
    }
}

#[test]
fn doubling_the_cell_halves_every_frequency() {
    // Shape coordinates are absolute, so the dielectric scales with the
    // cell; the Bloch phases match when k shrinks by the same factor.
    let grid = [6, 6, 6];
    let small = corrected(BravaisClass::Cubic, [1.0; 3], [90.0; 3], grid);
    let large = corrected(BravaisClass::Cubic, [2.0; 3], [90.0; 3], grid);
    let geom1 = sphere(13.0, 0.3);
    let geom2 = Geometry {
        shapes: vec![Shape::Sphere { center: [1.0, 1.0, 1.0], radius: 0.6, eps_in: 13.0 }],
        eps_out: 1.0,
    };
    let cfg = SolverConfig { num_eigs: 6, ..SolverConfig::default() };
    let k1 = [0.23, 0.11, 0.07];
    let k2 = [k1[0] / 2.0, k1[1] / 2.0, k1[2] / 2.0];
    let row1 = KSample { s: 0.0, k: k1, label: None };
    let row2 = KSample { s: 0.0, k: k2, label: None };

    let r1 = run_bands(&small, &geom1, &[row1], &cfg, 1).unwrap();
    let r2 = run_bands(&large, &geom2, &[row2], &cfg, 1).unwrap();
    for (a, b) in r1.rows[0].omegas.iter().zip(&r2.rows[0].omegas) {
        assert!((a - 2.0 * b).abs() <= 1e-10 * a, "ω {a} vs doubled {b}");
    }
}

#[test]
fn thread_count_does_not_change_the_serialized_result() {
    let corr = corrected(BravaisClass::Cubic, [1.0; 3], [90.0; 3], [4, 3, 3]);
    let cell = build_reciprocal(&corr).unwrap();
    let path = KPath::parse("Γ→X→M→Γ", 3).unwrap();
    let samples = kpath_samples(&path, &cell).unwrap();
    let cfg = SolverConfig { num_eigs: 6, ..SolverConfig::default() };

    let sequential = run_bands(&corr, &Geometry::vacuum(), &samples, &cfg, 1).unwrap();
    let pooled = run_bands(&corr, &Geometry::vacuum(), &samples, &cfg, 4).unwrap();
    let global = run_bands(&corr, &Geometry::vacuum(), &samples, &cfg, 0).unwrap();
    assert_eq!(csv_string(&sequential), csv_string(&pooled));
    assert_eq!(csv_string(&sequential), csv_string(&global));
}

#[test]
fn raising_the_permittivity_lowers_every_band() {
    let corr = corrected(BravaisClass::Cubic, [1.0; 3], [90.0; 3], [4, 4, 4]);
    let samples = [KSample { s: 0.0, k: [0.31, 0.17, 0.11], label: None }];
    let cfg = SolverConfig { num_eigs: 6, ..SolverConfig::default() };
    let results =
        sweep_permittivity(&corr, &sphere(13.0, 0.3), &samples, &cfg, 1, &[2.0, 8.0]).unwrap();

    assert_eq!(results.len(), 2);
    for (lo, hi) in results[0].rows[0].omegas.iter().zip(&results[1].rows[0].omegas) {
        assert!(hi < lo, "ε=8 band {hi} should sit below ε=2 band {lo}");
    }

    let twice =
        sweep_permittivity(&corr, &sphere(13.0, 0.3), &samples, &cfg, 1, &[5.0, 5.0]).unwrap();
    assert_eq!(csv_string(&twice[0]), csv_string(&twice[1]));
}

#[test]
fn the_gamma_row_is_nudged_toward_the_next_corner() {
    let corr = corrected(BravaisClass::Cubic, [1.0; 3], [90.0; 3], [4, 3, 3]);
    let cell = build_reciprocal(&corr).unwrap();
    let path = KPath::parse("Γ→X", 3).unwrap();
    let samples = kpath_samples(&path, &cell).unwrap();
    let towards = samples[1].k;
    let cfg = SolverConfig { num_eigs: 4, ..SolverConfig::default() };
    let result = run_bands(&corr, &Geometry::vacuum(), &samples, &cfg, 1).unwrap();

    let gamma = &result.rows[0];
    assert!(gamma.status.is_ok());
    let norm: f64 = gamma.k.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(norm > 0.0 && norm < 1e-5, "nudge magnitude {norm:.3e}");
    // Collinear with the first path step.
    let dot: f64 = gamma.k.iter().zip(&towards).map(|(a, b)| a * b).sum();
    let towards_norm: f64 = towards.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(dot / (norm * towards_norm) > 1.0 - 1e-12);
    assert!(gamma.omegas[0] < 1e-4);
    assert_eq!(result.metadata.shift_notices.len(), 1);
    assert!(result.metadata.shift_notices[0].contains('Γ'));
}
