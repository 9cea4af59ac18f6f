//! Lattice validation, mesh-aligned angle snapping, reciprocal cells and
//! k-point paths.
//!
//! A primitive cell is described by the lengths of its three translation
//! vectors and the three angles between them (γ between a1 and a2, β between
//! a1 and a3, α between a2 and a3). Before discretization the two angles
//! that tilt a2 and a3 against the grid axes are snapped so that the oblique
//! components of the translation vectors land on whole grid steps. The
//! snapped integers m1, m2, m3 are what make the quasi-periodic corner
//! blocks of the curl exact permutations instead of interpolations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod bravais;

pub use bravais::standard_kpath;

/// The 14 three-dimensional Bravais lattice classes.
///
/// The class only selects the high-symmetry corner table of the Brillouin
/// zone; all geometry comes from the six lattice constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BravaisClass {
    #[serde(alias = "sc")]
    Cubic,
    Fcc,
    Bcc,
    Tetragonal,
    #[serde(alias = "bct")]
    BodyCenteredTetragonal,
    Orthorhombic,
    #[serde(alias = "orcc")]
    BaseCenteredOrthorhombic,
    #[serde(alias = "orcf")]
    FaceCenteredOrthorhombic,
    #[serde(alias = "orci")]
    BodyCenteredOrthorhombic,
    Hexagonal,
    Rhombohedral,
    Monoclinic,
    #[serde(alias = "mclc")]
    BaseCenteredMonoclinic,
    Triclinic,
}

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("lattice lengths must be positive, got ({0}, {1}, {2})")]
    NonPositiveLength(f64, f64, f64),
    #[error("‖a1‖ must be the longest translation vector: ‖a1‖ = {0} < {1}")]
    LongestFirst(f64, f64),
    #[error("angles must lie strictly inside (0, π) radians")]
    AngleRange,
    #[error("grid counts must be positive, got ({0}, {1}, {2})")]
    ZeroGrid(usize, usize, usize),
    #[error(
        "alignment inequality ‖a2‖·sinθγ > ‖a3‖·|cosθα − cosθγ·cosθβ|/sinθγ violated: {lhs} ≤ {rhs} ({stage})"
    )]
    Admissibility { lhs: f64, rhs: f64, stage: &'static str },
    #[error("corrected cos θ{which} = {value} leaves (−1, 1); cell is degenerate on this grid")]
    DegenerateAngle { which: char, value: f64 },
    #[error("snapped m{which} = {m} outside [0, {max}]")]
    SnapRange { which: char, m: i64, max: usize },
    #[error("translation matrix is singular")]
    SingularCell,
    #[error("lengths/angles do not match Bravais class {class:?} in any cyclic ordering")]
    ClassMismatch { class: BravaisClass },
    #[error("unknown corner label `{0}`")]
    UnknownLabel(String),
    #[error("empty k-path")]
    EmptyPath,
}

/// Raw, user-supplied lattice constants plus grid resolution.
///
/// Angles are radians in the open interval (0, π). The constants must put
/// the longest translation vector first and satisfy the alignment
/// inequality below; inputs violating either are rejected, not permuted.
#[derive(Debug, Clone, Copy)]
pub struct LatticeSpec {
    pub class: BravaisClass,
    pub len_a1: f64,
    pub len_a2: f64,
    pub len_a3: f64,
    /// Angle between a2 and a3.
    pub theta_alpha_raw: f64,
    /// Angle between a1 and a3.
    pub theta_beta_raw: f64,
    /// Angle between a1 and a2.
    pub theta_gamma_raw: f64,
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
}

impl LatticeSpec {
    /// Validates constants. `angles` is `[α, β, γ]` in radians.
    pub fn new(
        class: BravaisClass,
        lengths: [f64; 3],
        angles: [f64; 3],
        grid: [usize; 3],
    ) -> Result<Self, LatticeError> {
        let [l1, l2, l3] = lengths;
        let [alpha, beta, gamma] = angles;
        let [n1, n2, n3] = grid;
        if !(l1 > 0.0 && l2 > 0.0 && l3 > 0.0) {
            return Err(LatticeError::NonPositiveLength(l1, l2, l3));
        }
        if l1 < l2 || l1 < l3 {
            return Err(LatticeError::LongestFirst(l1, l2.max(l3)));
        }
        for &t in &[alpha, beta, gamma] {
            if !(t > 0.0 && t < std::f64::consts::PI) {
                return Err(LatticeError::AngleRange);
            }
        }
        if n1 == 0 || n2 == 0 || n3 == 0 {
            return Err(LatticeError::ZeroGrid(n1, n2, n3));
        }
        let spec = LatticeSpec {
            class,
            len_a1: l1,
            len_a2: l2,
            len_a3: l3,
            theta_alpha_raw: alpha,
            theta_beta_raw: beta,
            theta_gamma_raw: gamma,
            n1,
            n2,
            n3,
        };
        spec.check_alignment(alpha.cos(), beta.cos(), gamma.cos(), gamma.sin(), "raw input")?;
        Ok(spec)
    }

    fn check_alignment(
        &self,
        cos_a: f64,
        cos_b: f64,
        cos_g: f64,
        sin_g: f64,
        stage: &'static str,
    ) -> Result<(), LatticeError> {
        let lhs = self.len_a2 * sin_g;
        let rhs = self.len_a3 * (cos_a - cos_g * cos_b).abs() / sin_g;
        if lhs <= rhs {
            return Err(LatticeError::Admissibility { lhs, rhs, stage });
        }
        Ok(())
    }

    fn dx(&self) -> f64 {
        self.len_a1 / self.n1 as f64
    }
}

/// Round half-up: a fraction of exactly 1/2 goes to the larger integer.
fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

fn check_cos(which: char, value: f64) -> Result<(), LatticeError> {
    if value.abs() >= 1.0 {
        return Err(LatticeError::DegenerateAngle { which, value });
    }
    Ok(())
}

fn check_snap(which: char, m: i64, max: usize) -> Result<usize, LatticeError> {
    if m < 0 || m as usize > max {
        return Err(LatticeError::SnapRange { which, m, max });
    }
    Ok(m as usize)
}

/// Snaps θγ so that the x-component of a2 is a whole number of grid steps.
///
/// Returns `(m1, cos θγ, sin θγ)`. For θ′γ ≤ π/2 the snapped component is
/// m1·δx; for obtuse θ′γ it is m1·δx − l1.
pub fn snap_angle_gamma(spec: &LatticeSpec) -> Result<(usize, f64, f64), LatticeError> {
    let dx = spec.dx();
    let cos_raw = spec.theta_gamma_raw.cos();
    let (m1, cos_g) = if spec.theta_gamma_raw <= std::f64::consts::FRAC_PI_2 {
        let m = round_half_up(spec.len_a2 * cos_raw / dx);
        (m, m as f64 * dx / spec.len_a2)
    } else {
        let m = round_half_up((spec.len_a1 + spec.len_a2 * cos_raw) / dx);
        (m, (m as f64 * dx - spec.len_a1) / spec.len_a2)
    };
    let m1 = check_snap('1', m1, spec.n1)?;
    check_cos('γ', cos_g)?;
    // A full wrap (only reachable when an obtuse angle snaps to exactly
    // π/2) is the same geometry as no wrap; use the m = 0 representation
    // so the wrap flags stay consistent.
    let (m1, cos_g) = if m1 == spec.n1 { (0, 0.0) } else { (m1, cos_g) };
    Ok((m1, cos_g, (1.0 - cos_g * cos_g).sqrt()))
}

/// Snaps θβ so that the x-component of a3 is a whole number of grid steps.
pub fn snap_angle_beta(spec: &LatticeSpec) -> Result<(usize, f64), LatticeError> {
    let dx = spec.dx();
    let cos_raw = spec.theta_beta_raw.cos();
    let (m2, cos_b) = if spec.theta_beta_raw <= std::f64::consts::FRAC_PI_2 {
        let m = round_half_up(spec.len_a3 * cos_raw / dx);
        (m, m as f64 * dx / spec.len_a3)
    } else {
        let m = round_half_up((spec.len_a1 + spec.len_a3 * cos_raw) / dx);
        (m, (m as f64 * dx - spec.len_a1) / spec.len_a3)
    };
    let m2 = check_snap('2', m2, spec.n1)?;
    check_cos('β', cos_b)?;
    let (m2, cos_b) = if m2 == spec.n1 { (0, 0.0) } else { (m2, cos_b) };
    Ok((m2, cos_b))
}

/// Snaps θα so that the y-component of a3 is a whole number of grid steps.
///
/// Uses the already corrected θγ and θβ; the case split is on the sign of
/// cos θ′α − cos θγ·cos θβ.
pub fn snap_angle_alpha(
    spec: &LatticeSpec,
    cos_g: f64,
    sin_g: f64,
    cos_b: f64,
) -> Result<(usize, f64), LatticeError> {
    let dy = spec.len_a2 * sin_g / spec.n2 as f64;
    let t = spec.theta_alpha_raw.cos() - cos_g * cos_b;
    let (m3, cos_a) = if t >= 0.0 {
        let m = round_half_up(spec.len_a3 * t / (dy * sin_g));
        (m, (m as f64 * dy / spec.len_a3) * sin_g + cos_g * cos_b)
    } else {
        let m = round_half_up((spec.len_a2 * sin_g * sin_g + spec.len_a3 * t) / (dy * sin_g));
        (m, (m as f64 * dy * sin_g - spec.len_a2 * sin_g * sin_g) / spec.len_a3 + cos_g * cos_b)
    };
    let m3 = check_snap('3', m3, spec.n2)?;
    check_cos('α', cos_a)?;
    let (m3, cos_a) = if m3 == spec.n2 { (0, cos_g * cos_b) } else { (m3, cos_a) };
    Ok((m3, cos_a))
}

/// Columns a1, a2, a3 of the upper-triangular translation matrix built from
/// corrected trigonometric values.
pub fn build_translation_vectors(
    lengths: [f64; 3],
    cos_a: f64,
    cos_b: f64,
    cos_g: f64,
    sin_g: f64,
) -> Result<[[f64; 3]; 3], LatticeError> {
    let [l1, l2, l3] = lengths;
    let volume_arg =
        1.0 - cos_g * cos_g - cos_b * cos_b - cos_a * cos_a + 2.0 * cos_g * cos_b * cos_a;
    if volume_arg <= 0.0 {
        return Err(LatticeError::SingularCell);
    }
    let a1 = [l1, 0.0, 0.0];
    let a2 = [l2 * cos_g, l2 * sin_g, 0.0];
    let a3 = [l3 * cos_b, l3 * (cos_a - cos_g * cos_b) / sin_g, l3 * volume_arg.sqrt() / sin_g];
    Ok([a1, a2, a3])
}

/// A lattice whose angles have been snapped to the grid, together with the
/// derived flags that select the quasi-periodic corner-block layout.
///
/// All binary flags are 0/1 integers. ρ1/ρ2 mark obtuse θγ/θβ, ρ3 marks
/// cos θγ·cos θβ > cos θα, ρ4 and ρ5 are the auxiliary ceilings, and ψ1/ψ2
/// (only one of which is active, per ρ3) compare the wrapped offsets
/// ρℓ·n1 − mℓ.
#[derive(Debug, Clone)]
pub struct CorrectedLattice {
    pub spec: LatticeSpec,
    pub m1: usize,
    pub m2: usize,
    pub m3: usize,
    pub cos_gamma: f64,
    pub sin_gamma: f64,
    pub cos_beta: f64,
    pub cos_alpha: f64,
    pub rho1: i32,
    pub rho2: i32,
    pub rho3: i32,
    pub rho4: i32,
    pub rho5: i32,
    pub psi1: i32,
    pub psi2: i32,
    pub a1: [f64; 3],
    pub a2: [f64; 3],
    pub a3: [f64; 3],
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl CorrectedLattice {
    pub fn from_spec(spec: LatticeSpec) -> Result<Self, LatticeError> {
        let (m1, cos_g, sin_g) = snap_angle_gamma(&spec)?;
        let (m2, cos_b) = snap_angle_beta(&spec)?;
        let (m3, cos_a) = snap_angle_alpha(&spec, cos_g, sin_g, cos_b)?;
        spec.check_alignment(cos_a, cos_b, cos_g, sin_g, "after snapping")?;

        let [a1, a2, a3] = build_translation_vectors(
            [spec.len_a1, spec.len_a2, spec.len_a3],
            cos_a,
            cos_b,
            cos_g,
            sin_g,
        )?;
        let (l1, l2, l3) = (spec.len_a1, a2[1], a3[2]);

        let b01 = |c: bool| i32::from(c);
        let rho1 = b01(cos_g < 0.0);
        let rho2 = b01(cos_b < 0.0);
        let gb = cos_g * cos_b;
        let rho3 = b01(gb - cos_a > 0.0);
        let rho4 = b01(gb * (gb - cos_a) > 0.0);
        let rho5 = b01(cos_b > 0.0);
        let n1 = spec.n1 as i64;
        let off1 = rho1 as i64 * n1 - m1 as i64;
        let off2 = rho2 as i64 * n1 - m2 as i64;
        let (psi1, psi2) = if rho3 == 0 {
            (b01(off2 - off1 > 0), 0)
        } else {
            (0, b01(off1 + off2 > 0))
        };

        Ok(CorrectedLattice {
            spec,
            m1,
            m2,
            m3,
            cos_gamma: cos_g,
            sin_gamma: sin_g,
            cos_beta: cos_b,
            cos_alpha: cos_a,
            rho1,
            rho2,
            rho3,
            rho4,
            rho5,
            psi1,
            psi2,
            a1,
            a2,
            a3,
            l1,
            l2,
            l3,
            dx: l1 / spec.n1 as f64,
            dy: l2 / spec.n2 as f64,
            dz: l3 / spec.n3 as f64,
        })
    }

    /// Number of grid points n1·n2·n3.
    pub fn n(&self) -> usize {
        self.spec.n1 * self.spec.n2 * self.spec.n3
    }

    pub fn grid(&self) -> (usize, usize, usize) {
        (self.spec.n1, self.spec.n2, self.spec.n3)
    }

    /// Translation matrix with columns a1, a2, a3.
    pub fn a_matrix(&self) -> [[f64; 3]; 3] {
        [self.a1, self.a2, self.a3]
    }

    /// The three dot products k·a1, k·a2, k·a3 that every Bloch phase in the
    /// solver is derived from.
    pub fn k_dots(&self, k: [f64; 3]) -> (f64, f64, f64) {
        let d = |a: [f64; 3]| k[0] * a[0] + k[1] * a[1] + k[2] * a[2];
        (d(self.a1), d(self.a2), d(self.a3))
    }
}

/// Reciprocal cell: dual vectors, the rotation Ω into the computational
/// frame, and the class's high-symmetry corners (Cartesian, computational
/// frame, carrying the 2π factor).
#[derive(Debug, Clone)]
pub struct ReciprocalCell {
    pub b1: [f64; 3],
    pub b2: [f64; 3],
    pub b3: [f64; 3],
    pub omega: [[f64; 3]; 3],
    pub corners: Vec<(String, [f64; 3])>,
}

impl ReciprocalCell {
    pub fn corner(&self, label: &str) -> Option<[f64; 3]> {
        self.corners.iter().find(|(l, _)| l == label).map(|(_, v)| *v)
    }
}

fn mat_inv(m: &[[f64; 3]; 3]) -> Result<[[f64; 3]; 3], LatticeError> {
    // m is stored as columns: m[j] is the j-th column vector.
    let a = m[0];
    let b = m[1];
    let c = m[2];
    let cross = |u: [f64; 3], v: [f64; 3]| {
        [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
    };
    let bc = cross(b, c);
    let det = a[0] * bc[0] + a[1] * bc[1] + a[2] * bc[2];
    if det.abs() < 1e-300 {
        return Err(LatticeError::SingularCell);
    }
    let ca = cross(c, a);
    let ab = cross(a, b);
    // Rows of the inverse are the scaled duals.
    Ok([
        [bc[0] / det, bc[1] / det, bc[2] / det],
        [ca[0] / det, ca[1] / det, ca[2] / det],
        [ab[0] / det, ab[1] / det, ab[2] / det],
    ])
}

/// Builds the reciprocal cell of a corrected lattice.
///
/// `[b1 b2 b3] = 2π·[a1 a2 a3]⁻ᵀ`, Ω maps the class's standard frame onto
/// the computational frame, and the corners are the class table expressed
/// in the computational frame.
pub fn build_reciprocal(corr: &CorrectedLattice) -> Result<ReciprocalCell, LatticeError> {
    let inv = mat_inv(&corr.a_matrix())?;
    let tau = 2.0 * std::f64::consts::PI;
    // Row i of inv is the i-th dual vector; scale by 2π.
    let b1 = [tau * inv[0][0], tau * inv[0][1], tau * inv[0][2]];
    let b2 = [tau * inv[1][0], tau * inv[1][1], tau * inv[1][2]];
    let b3 = [tau * inv[2][0], tau * inv[2][1], tau * inv[2][2]];

    let table = bravais::class_table(corr)?;

    // Ω = [a]⁻ᵀ·[ã]ᵀ, i.e. Ω·ãᵢ carries the standard primitive vectors onto
    // the computational ones (exactly so when the snap left the class
    // geometry intact).
    let at = table.a_std;
    let mut omega = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            // ([a]⁻ᵀ)_{rc} = inv[c][r];  ([ã]ᵀ)_{cj}: row c of ãᵀ is column c... (ãᵀ)_{c j} = ã_{j c}
            let mut s = 0.0;
            for t in 0..3 {
                s += inv[t][r] * at[t][c];
            }
            omega[r][c] = s;
        }
    }

    let corners = table
        .corners
        .into_iter()
        .map(|(label, f)| {
            let v = [
                f[0] * b1[0] + f[1] * b2[0] + f[2] * b3[0],
                f[0] * b1[1] + f[1] * b2[1] + f[2] * b3[1],
                f[0] * b1[2] + f[1] * b2[2] + f[2] * b3[2],
            ];
            (label, v)
        })
        .collect();

    Ok(ReciprocalCell { b1, b2, b3, omega, corners })
}

/// One leg of a k-path. `break_before` marks the paper's "|" separators:
/// the sweep jumps to `start` without traversing the gap.
#[derive(Debug, Clone)]
pub struct Segment {
    pub start: String,
    pub end: String,
    pub break_before: bool,
}

/// A walk through the Brillouin zone along corner-to-corner segments.
#[derive(Debug, Clone)]
pub struct KPath {
    pub segments: Vec<Segment>,
    pub samples_per_segment: usize,
}

impl KPath {
    /// Parses e.g. `"Γ→X→M→Γ→R|M→R"`. Both `→` and `->` separate corners;
    /// `|` starts a disconnected piece.
    pub fn parse(path: &str, samples_per_segment: usize) -> Result<Self, LatticeError> {
        let mut segments = Vec::new();
        for (ci, chain) in path.split('|').enumerate() {
            let labels: Vec<String> = chain
                .replace("->", "→")
                .split('→')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            labels_check(&labels)?;
            for (i, pair) in labels.windows(2).enumerate() {
                segments.push(Segment {
                    start: pair[0].clone(),
                    end: pair[1].clone(),
                    break_before: ci > 0 && i == 0,
                });
            }
        }
        if segments.is_empty() {
            return Err(LatticeError::EmptyPath);
        }
        Ok(KPath { segments, samples_per_segment: samples_per_segment.max(1) })
    }
}

fn labels_check(labels: &[String]) -> Result<(), LatticeError> {
    if labels.len() < 2 {
        return Err(LatticeError::EmptyPath);
    }
    Ok(())
}

/// One sampled k-point. `k` uses the convention in which the Bloch phase
/// along aℓ is e^{ı2π k·aℓ}, i.e. `k` = (corner vector)/2π.
#[derive(Debug, Clone)]
pub struct KSample {
    /// Cumulative arc length along the traversed path (no advance across breaks).
    pub s: f64,
    pub k: [f64; 3],
    /// Corner label when the sample sits on a path node.
    pub label: Option<String>,
}

/// Samples a k-path against a reciprocal cell.
///
/// Every segment contributes `samples_per_segment` equal steps; the shared
/// node of two contiguous segments appears once, while "|" breaks duplicate
/// the flanking corners without advancing the arc length.
pub fn kpath_samples(path: &KPath, cell: &ReciprocalCell) -> Result<Vec<KSample>, LatticeError> {
    let tau = 2.0 * std::f64::consts::PI;
    let resolve = |label: &str| -> Result<[f64; 3], LatticeError> {
        let v = cell
            .corner(label)
            .or_else(|| cell.corner(&normalize_gamma_label(label)))
            .ok_or_else(|| LatticeError::UnknownLabel(label.to_string()))?;
        Ok([v[0] / tau, v[1] / tau, v[2] / tau])
    };

    let mut out: Vec<KSample> = Vec::new();
    let mut s = 0.0;
    for (si, seg) in path.segments.iter().enumerate() {
        let ks = resolve(&seg.start)?;
        let ke = resolve(&seg.end)?;
        let contiguous = si > 0 && !seg.break_before && path.segments[si - 1].end == seg.start;
        let steps = path.samples_per_segment;
        let seg_len = ((ke[0] - ks[0]).powi(2) + (ke[1] - ks[1]).powi(2) + (ke[2] - ks[2]).powi(2))
            .sqrt();
        for j in 0..=steps {
            if j == 0 && contiguous {
                continue;
            }
            let t = j as f64 / steps as f64;
            let k = [
                ks[0] + t * (ke[0] - ks[0]),
                ks[1] + t * (ke[1] - ks[1]),
                ks[2] + t * (ke[2] - ks[2]),
            ];
            if j > 0 {
                s += seg_len / steps as f64;
            }
            let label = if j == 0 {
                Some(seg.start.clone())
            } else if j == steps {
                Some(seg.end.clone())
            } else {
                None
            };
            out.push(KSample { s, k, label });
        }
    }
    Ok(out)
}

fn normalize_gamma_label(label: &str) -> String {
    match label {
        "G" | "Gamma" | "GAMMA" => "Γ".to_string(),
        other => other.to_string(),
    }
}
