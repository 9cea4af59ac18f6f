//! Corrected-lattice geometry: snapping, flags, reciprocal cells, k-paths.

use yeeband::lattice::{
    build_reciprocal, kpath_samples, standard_kpath, BravaisClass, CorrectedLattice, KPath,
    LatticeError, LatticeSpec,
};

mod common;
use common::{corrected, random_cells};

#[test]
fn fcc_worked_example() {
    let c = corrected(BravaisClass::Fcc, [1.0, 1.0, 1.0], [60.0, 60.0, 60.0], [12, 12, 12]);
    assert_eq!((c.m1, c.m2, c.m3), (6, 6, 4));
    for v in [c.cos_gamma, c.cos_beta, c.cos_alpha] {
        assert!((v - 0.5).abs() < 1e-15);
    }
    let want_a2 = [0.5, 0.8660254037844386, 0.0];
    let want_a3 = [0.5, 0.28867513459481292, 0.81649658092772615];
    for i in 0..3 {
        assert!((c.a1[i] - [1.0, 0.0, 0.0][i]).abs() < 1e-15);
        assert!((c.a2[i] - want_a2[i]).abs() < 1e-15);
        assert!((c.a3[i] - want_a3[i]).abs() < 1e-14);
    }
    assert_eq!((c.rho1, c.rho2, c.rho3, c.rho4, c.rho5), (0, 0, 0, 0, 1));
    assert_eq!((c.psi1, c.psi2), (0, 0));
}

#[test]
fn rhombohedral_70_degrees_snaps_to_thirds() {
    let c =
        corrected(BravaisClass::Rhombohedral, [1.0, 1.0, 1.0], [70.0, 70.0, 70.0], [12, 12, 12]);
    assert_eq!((c.m1, c.m2, c.m3), (4, 4, 3));
    for v in [c.cos_gamma, c.cos_beta, c.cos_alpha] {
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }
}

#[test]
fn bcc_reciprocal_matches_standard_table() {
    let len = 3.0f64.sqrt() / 2.0;
    let ang = (-1.0f64 / 3.0).acos().to_degrees();
    let c = corrected(BravaisClass::Bcc, [len, len, len], [ang, ang, ang], [6, 4, 4]);
    assert_eq!((c.m1, c.m2, c.m3), (4, 4, 2));
    let cell = build_reciprocal(&c).unwrap();

    // [b]ᵀ[a] = 2πI
    let a = c.a_matrix();
    let b = [cell.b1, cell.b2, cell.b3];
    for i in 0..3 {
        for j in 0..3 {
            let dot = b[i][0] * a[j][0] + b[i][1] * a[j][1] + b[i][2] * a[j][2];
            let want = if i == j { 2.0 * std::f64::consts::PI } else { 0.0 };
            assert!((dot - want).abs() < 1e-12, "bᵀa[{i}{j}] = {dot}");
        }
    }

    // Ω orthogonal
    let om = cell.omega;
    for i in 0..3 {
        for j in 0..3 {
            let dot = om[0][i] * om[0][j] + om[1][i] * om[1][j] + om[2][i] * om[2][j];
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((dot - want).abs() < 1e-12, "ΩᵀΩ[{i}{j}] = {dot}");
        }
    }

    // Ωᵀ·corner lands on the standard positions, in units of 2π/a with a = 1.
    let tau = 2.0 * std::f64::consts::PI;
    let std_frame = |v: [f64; 3]| {
        [
            (om[0][0] * v[0] + om[1][0] * v[1] + om[2][0] * v[2]) / tau,
            (om[0][1] * v[0] + om[1][1] * v[1] + om[2][1] * v[2]) / tau,
            (om[0][2] * v[0] + om[1][2] * v[1] + om[2][2] * v[2]) / tau,
        ]
    };
    let cases = [
        ("Γ", [0.0, 0.0, 0.0]),
        ("H", [0.0, 1.0, 0.0]),
        ("N", [0.5, 0.5, 0.0]),
        ("P", [0.5, 0.5, 0.5]),
    ];
    for (label, want) in cases {
        let got = std_frame(cell.corner(label).unwrap());
        for i in 0..3 {
            assert!((got[i] - want[i]).abs() < 1e-12, "{label}[{i}] = {}", got[i]);
        }
    }
}

#[test]
fn hexagonal_accepts_cyclically_rotated_input() {
    // c-axis supplied first (it is the longest vector), so the class
    // pattern only matches after rotating the standard frame.
    let c = corrected(BravaisClass::Hexagonal, [1.4, 1.0, 1.0], [120.0, 90.0, 90.0], [8, 8, 8]);
    let cell = build_reciprocal(&c).unwrap();
    let om = cell.omega;
    for i in 0..3 {
        for j in 0..3 {
            let dot = om[0][i] * om[0][j] + om[1][i] * om[1][j] + om[2][i] * om[2][j];
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((dot - want).abs() < 1e-12);
        }
    }
    // A sits halfway up the c* axis: standard frame (0, 0, π/c).
    let tau = 2.0 * std::f64::consts::PI;
    let v = cell.corner("A").unwrap();
    let std_a = [
        (om[0][0] * v[0] + om[1][0] * v[1] + om[2][0] * v[2]),
        (om[0][1] * v[0] + om[1][1] * v[1] + om[2][1] * v[2]),
        (om[0][2] * v[0] + om[1][2] * v[1] + om[2][2] * v[2]),
    ];
    assert!(std_a[0].abs() < 1e-12);
    assert!(std_a[1].abs() < 1e-12);
    assert!((std_a[2] - tau / (2.0 * 1.4)).abs() < 1e-12);
}

#[test]
fn class_mismatch_is_reported() {
    let c = corrected(BravaisClass::Fcc, [1.0, 1.0, 1.0], [90.0, 90.0, 90.0], [4, 4, 4]);
    match build_reciprocal(&c) {
        Err(LatticeError::ClassMismatch { .. }) => {}
        other => panic!("expected class mismatch, got {other:?}"),
    }
}

#[test]
fn reciprocal_duality_on_random_cells() {
    for c in random_cells(11, 200) {
        let cell = build_reciprocal(&c).unwrap();
        let a = c.a_matrix();
        let b = [cell.b1, cell.b2, cell.b3];
        for i in 0..3 {
            for j in 0..3 {
                let dot = b[i][0] * a[j][0] + b[i][1] * a[j][1] + b[i][2] * a[j][2];
                let want = if i == j { 2.0 * std::f64::consts::PI } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn wrap_flags_satisfy_category_identities() {
    for c in random_cells(17, 500) {
        for f in [c.rho1, c.rho2, c.rho3, c.rho4, c.rho5, c.psi1, c.psi2] {
            assert!(f == 0 || f == 1, "flag out of range in {c:?}");
        }
        assert!(c.m1 <= c.spec.n1 && c.m2 <= c.spec.n1 && c.m3 <= c.spec.n2);
        let n1 = c.spec.n1;
        // The identities glue the wrap phases of the two shift routes; they
        // are statements about nonempty wrap blocks. Two snapped boundary
        // configurations void them: m3 = 0 (the y-wrapped block is empty, its
        // phase never multiplies anything) and, for the oblique branch,
        // m1 + m2 = n1 (the x-offset of the wrap is exactly one period, whose
        // phase bookkeeping the flag forms do not resolve).
        if (c.rho3 == 0 && c.m3 == 0) || (c.rho3 == 1 && c.m1 + c.m2 == n1) {
            continue;
        }
        let (lhs, rhs) = if c.rho3 == 0 {
            if c.m1 <= c.m2 {
                (-c.rho1 * c.rho4 + c.psi1 + c.rho1, c.rho2)
            } else {
                (c.rho1 - 1 + c.rho2 * c.rho4 + c.psi1, c.rho2)
            }
        } else if c.m1 + c.m2 <= n1 {
            (c.rho1 + c.rho2, c.rho1 * c.rho4 + c.psi2)
        } else {
            (c.rho1 + c.rho2, c.psi2 - c.rho5 * c.rho4 + 1)
        };
        assert_eq!(lhs, rhs, "flag identity failed for {c:?}");
    }
}

#[test]
fn snapping_is_idempotent_on_aligned_cells() {
    for c in random_cells(23, 200) {
        let respec = LatticeSpec::new(
            BravaisClass::Triclinic,
            [c.spec.len_a1, c.spec.len_a2, c.spec.len_a3],
            [c.cos_alpha.acos(), c.cos_beta.acos(), c.cos_gamma.acos()],
            [c.spec.n1, c.spec.n2, c.spec.n3],
        )
        .unwrap();
        let c2 = CorrectedLattice::from_spec(respec).unwrap();
        assert_eq!((c.m1, c.m2, c.m3), (c2.m1, c2.m2, c2.m3));
        assert!((c.cos_gamma - c2.cos_gamma).abs() < 1e-12);
        assert!((c.cos_beta - c2.cos_beta).abs() < 1e-12);
        assert!((c.cos_alpha - c2.cos_alpha).abs() < 1e-12);
    }
}

#[test]
fn kpath_sampling_counts_and_arc_length() {
    let c = corrected(BravaisClass::Cubic, [1.0, 1.0, 1.0], [90.0, 90.0, 90.0], [8, 8, 8]);
    let cell = build_reciprocal(&c).unwrap();

    let single = KPath::parse("Γ→X", 10).unwrap();
    let pts = kpath_samples(&single, &cell).unwrap();
    assert_eq!(pts.len(), 11);
    assert_eq!(pts[0].label.as_deref(), Some("Γ"));
    assert_eq!(pts[10].label.as_deref(), Some("X"));
    assert!((pts[10].s - 0.5).abs() < 1e-12);
    assert!((pts[10].k[1] - 0.5).abs() < 1e-15 && pts[10].k[0].abs() < 1e-15);

    let full = KPath::parse(standard_kpath(BravaisClass::Cubic), 2).unwrap();
    let pts = kpath_samples(&full, &cell).unwrap();
    // 4 contiguous segments share nodes (3 + 2·3 samples), the break
    // re-emits both corners (3 more): 12 total.
    assert_eq!(pts.len(), 12);
    for w in pts.windows(2) {
        assert!(w[1].s >= w[0].s - 1e-15);
    }
    // Break: M appears again with no arc-length advance.
    let m_positions: Vec<usize> = pts
        .iter()
        .enumerate()
        .filter(|(_, p)| p.label.as_deref() == Some("M"))
        .map(|(i, _)| i)
        .collect();
    assert_eq!(m_positions.len(), 2);
    assert!((pts[m_positions[1]].s - pts[m_positions[1] - 1].s).abs() < 1e-15);
}

#[test]
fn gamma_label_aliases_resolve() {
    let c = corrected(BravaisClass::Cubic, [1.0, 1.0, 1.0], [90.0, 90.0, 90.0], [8, 8, 8]);
    let cell = build_reciprocal(&c).unwrap();
    let p = KPath::parse("G→X", 1).unwrap();
    let pts = kpath_samples(&p, &cell).unwrap();
    assert_eq!(pts.len(), 2);
    assert!(pts[0].k.iter().all(|&x| x.abs() < 1e-15));
}

#[test]
fn all_class_tables_resolve_their_standard_paths() {
    use BravaisClass::*;
    let third = (-1.0f64 / 3.0).acos().to_degrees();
    let checks: Vec<(BravaisClass, [f64; 3], [f64; 3], [usize; 3])> = vec![
        (Cubic, [1.0, 1.0, 1.0], [90.0, 90.0, 90.0], [6, 6, 6]),
        (Fcc, [1.0, 1.0, 1.0], [60.0, 60.0, 60.0], [6, 6, 6]),
        (Bcc, [1.0, 1.0, 1.0], [third, third, third], [6, 6, 6]),
        (Tetragonal, [1.3, 1.0, 1.0], [90.0, 90.0, 90.0], [6, 6, 6]),
        (Hexagonal, [1.4, 1.0, 1.0], [120.0, 90.0, 90.0], [6, 6, 6]),
        (Rhombohedral, [1.0, 1.0, 1.0], [70.0, 70.0, 70.0], [6, 6, 6]),
        (Triclinic, [1.0, 0.9, 0.8], [75.0, 85.0, 95.0], [6, 6, 6]),
    ];
    for (class, lengths, angles, grid) in checks {
        let c = corrected(class, lengths, angles, grid);
        let cell = build_reciprocal(&c).unwrap();
        let path = KPath::parse(standard_kpath(class), 3).unwrap();
        let pts = kpath_samples(&path, &cell)
            .unwrap_or_else(|e| panic!("{class:?}: {e}"));
        assert!(pts.len() > 3);
    }
}
