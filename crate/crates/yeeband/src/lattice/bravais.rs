//! High-symmetry corner tables for the 14 Bravais classes.
//!
//! Corners are stored as fractional coordinates of the reciprocal basis in
//! the crystallographic convention of Setyawan & Curtarolo (Comput. Mater.
//! Sci. 49, 299 (2010)), so a corner's Cartesian position is [b]·frac. The
//! user's primitive vectors may be any cyclic rotation of the standard
//! ones; the matching rotation is detected from the raw lattice constants
//! and the table is permuted onto the user's ordering. Variant-split
//! classes ship one representative table (BCT₂, ORCF₁, RHL₁, MCLC₃); the
//! monoclinic families expect the cell with α < 90°.

use super::{BravaisClass, CorrectedLattice, LatticeError};

pub(crate) struct ClassTable {
    /// Standard primitive vectors (columns), permuted to the user's ordering.
    pub a_std: [[f64; 3]; 3],
    /// Corner label → fractional coordinates in the user's ordering.
    pub corners: Vec<(String, [f64; 3])>,
}

/// The conventional walk through the corner table for a class, with "|"
/// marking discontinuous jumps.
pub fn standard_kpath(class: BravaisClass) -> &'static str {
    use BravaisClass::*;
    match class {
        Cubic => "Γ→X→M→Γ→R|M→R",
        Fcc => "X→U→L→Γ→X→W→K",
        Bcc => "Γ→H→N→Γ→P→H|P→N",
        Tetragonal => "Γ→X→M→Γ→Z→R→A→Z|X→R|M→A",
        BodyCenteredTetragonal => "Γ→X→Y→S→Γ→Z→S1→N→P→Y1→Z|X→P",
        Orthorhombic => "Γ→X→S→Y→Γ→Z→U→R→T→Z|Y→T|U→X|S→R",
        BaseCenteredOrthorhombic => "Γ→X→S→R→A→Z→Γ→Y→X1→A1→T→Y|Z→T",
        FaceCenteredOrthorhombic => "Γ→Y→T→Z→Γ→X→A1→Y|T→X1|X→A→Z|L→Γ",
        BodyCenteredOrthorhombic => "Γ→X→L→T→W→R→X1→Z→Γ→Y→S→W|L1→Y|Y1→Z",
        Hexagonal => "Γ→M→K→Γ→A→L→H→A|L→M|K→H",
        Rhombohedral => "Γ→L→B1|B→Z→Γ→X|Q→F→P1→Z|L→P",
        Monoclinic => "Γ→Y→H→C→E→M1→A→X→H1|M→D→Z|Y→D",
        BaseCenteredMonoclinic => "Γ→Y→F→H→Z→I→F1|H1→Y1→X→Γ→N|M→Γ",
        Triclinic => "X→Γ→Y|L→Γ→Z|N→Γ→M|R→Γ",
    }
}

/// Lattice constants in standard order: `l[s]` is the length of the s-th
/// standard vector, `cos[t]` the cosine of the angle excluding vector t
/// (so cos[0] = α, cos[1] = β, cos[2] = γ in standard order).
#[derive(Clone, Copy)]
struct StdConsts {
    l: [f64; 3],
    cos: [f64; 3],
}

impl StdConsts {
    /// Pairwise dot products, keyed by the excluded index.
    fn dots(&self) -> [f64; 3] {
        [
            self.l[1] * self.l[2] * self.cos[0],
            self.l[0] * self.l[2] * self.cos[1],
            self.l[0] * self.l[1] * self.cos[2],
        ]
    }
}

/// Reads the user's constants as standard index s = (input index + r) mod 3.
fn rotate_consts(l: [f64; 3], cos: [f64; 3], r: usize) -> StdConsts {
    let idx = |s: usize| (s + 3 - r) % 3;
    StdConsts {
        l: [l[idx(0)], l[idx(1)], l[idx(2)]],
        cos: [cos[idx(0)], cos[idx(1)], cos[idx(2)]],
    }
}

const TOL_LEN: f64 = 1e-4;
const TOL_COS: f64 = 1e-4;

fn len_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL_LEN * a.abs().max(b.abs())
}

fn cos_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL_COS
}

fn matches_class(class: BravaisClass, c: &StdConsts) -> bool {
    use BravaisClass::*;
    let l = c.l;
    let cs = c.cos;
    let all_len_eq = len_eq(l[0], l[1]) && len_eq(l[1], l[2]);
    match class {
        Cubic => all_len_eq && cs.iter().all(|&x| cos_eq(x, 0.0)),
        Fcc => all_len_eq && cs.iter().all(|&x| cos_eq(x, 0.5)),
        Bcc => all_len_eq && cs.iter().all(|&x| cos_eq(x, -1.0 / 3.0)),
        Tetragonal => len_eq(l[0], l[1]) && cs.iter().all(|&x| cos_eq(x, 0.0)),
        BodyCenteredTetragonal => {
            all_len_eq
                && cos_eq(cs[0], cs[1])
                && cs[0] < 0.0
                && cos_eq(cs[2] + 2.0 * cs[1], -1.0)
        }
        Orthorhombic => cs.iter().all(|&x| cos_eq(x, 0.0)),
        BaseCenteredOrthorhombic => {
            len_eq(l[0], l[1]) && cos_eq(cs[0], 0.0) && cos_eq(cs[1], 0.0)
        }
        FaceCenteredOrthorhombic => {
            let d = c.dots();
            d.iter().all(|&x| x > 0.0) && {
                // Lengths must close: ‖ã1‖² = (b² + c²)/4 = d[1] + d[2], cyclically.
                len_eq(l[0] * l[0], d[1] + d[2])
                    && len_eq(l[1] * l[1], d[0] + d[2])
                    && len_eq(l[2] * l[2], d[0] + d[1])
            }
        }
        BodyCenteredOrthorhombic => {
            let d = c.dots();
            let a2 = -2.0 * (d[2] + d[1]);
            let b2 = -2.0 * (d[2] + d[0]);
            let c2 = -2.0 * (d[1] + d[0]);
            all_len_eq
                && a2 > 0.0
                && b2 > 0.0
                && c2 > 0.0
                && len_eq(l[0] * l[0], (a2 + b2 + c2) / 4.0)
        }
        Hexagonal => {
            len_eq(l[0], l[1])
                && cos_eq(cs[2], -0.5)
                && cos_eq(cs[0], 0.0)
                && cos_eq(cs[1], 0.0)
        }
        Rhombohedral => {
            all_len_eq && cos_eq(cs[0], cs[1]) && cos_eq(cs[1], cs[2]) && cs[0] > TOL_COS
        }
        Monoclinic => cos_eq(cs[1], 0.0) && cos_eq(cs[2], 0.0) && cs[0] > TOL_COS,
        BaseCenteredMonoclinic => {
            len_eq(l[0], l[1]) && cos_eq(cs[0], cs[1]) && cs[0] > TOL_COS
        }
        Triclinic => true,
    }
}

fn frac(label: &str, f: [f64; 3]) -> (String, [f64; 3]) {
    (label.to_string(), f)
}

struct StdGeometry {
    vectors: [[f64; 3]; 3],
    corners: Vec<(String, [f64; 3])>,
}

fn synthesize(class: BravaisClass, c: &StdConsts) -> Result<StdGeometry, LatticeError> {
    use BravaisClass::*;
    let mismatch = || LatticeError::ClassMismatch { class };
    let sqrt_pos = |x: f64| if x > 0.0 { Ok(x.sqrt()) } else { Err(mismatch()) };
    let d = c.dots();
    let mean_l = (c.l[0] + c.l[1] + c.l[2]) / 3.0;

    let geo = match class {
        Cubic => {
            let a = mean_l;
            StdGeometry {
                vectors: [[a, 0.0, 0.0], [0.0, a, 0.0], [0.0, 0.0, a]],
                corners: vec![
                    frac("Γ", [0.0, 0.0, 0.0]),
                    frac("X", [0.0, 0.5, 0.0]),
                    frac("M", [0.5, 0.5, 0.0]),
                    frac("R", [0.5, 0.5, 0.5]),
                ],
            }
        }
        Fcc => {
            let a = mean_l * std::f64::consts::SQRT_2;
            let h = a / 2.0;
            StdGeometry {
                vectors: [[0.0, h, h], [h, 0.0, h], [h, h, 0.0]],
                corners: vec![
                    frac("Γ", [0.0, 0.0, 0.0]),
                    frac("K", [0.375, 0.375, 0.75]),
                    frac("L", [0.5, 0.5, 0.5]),
                    frac("U", [0.625, 0.25, 0.625]),
                    frac("W", [0.5, 0.25, 0.75]),
                    frac("X", [0.5, 0.0, 0.5]),
                ],
            }
        }
        Bcc => {
            let a = 2.0 * mean_l / 3.0f64.sqrt();
            let h = a / 2.0;
            StdGeometry {
                vectors: [[-h, h, h], [h, -h, h], [h, h, -h]],
                corners: vec![
                    frac("Γ", [0.0, 0.0, 0.0]),
                    frac("H", [0.5, -0.5, 0.5]),
                    frac("P", [0.25, 0.25, 0.25]),
                    frac("N", [0.0, 0.0, 0.5]),
                ],
            }
        }
        Tetragonal => {
            let a = (c.l[0] + c.l[1]) / 2.0;
            let cc = c.l[2];
            StdGeometry {
                vectors: [[a, 0.0, 0.0], [0.0, a, 0.0], [0.0, 0.0, cc]],
                corners: vec![
                    frac("Γ", [0.0, 0.0, 0.0]),
                    frac("A", [0.5, 0.5, 0.5]),
                    frac("M", [0.5, 0.5, 0.0]),
                    frac("R", [0.0, 0.5, 0.5]),
                    frac("X", [0.0, 0.5, 0.0]),
                    frac("Z", [0.0, 0.0, 0.5]),
                ],
            }
        }
        BodyCenteredTetragonal => {
            let c2 = -2.0 * (d[1] + d[0]);
            let a2 = (c2 - 4.0 * d[2]) / 2.0;
            let cc = sqrt_pos(c2)?;
            let a = sqrt_pos(a2)?;
            let (ha, hc) = (a / 2.0, cc / 2.0);
            let eta = (1.0 + a2 / c2) / 4.0;
            let zeta = a2 / (2.0 * c2);
            StdGeometry {
                vectors: [[-ha, ha, hc], [ha, -ha, hc], [ha, ha, -hc]],
                corners: vec![
                    frac("Γ", [0.0, 0.0, 0.0]),
                    frac("N", [0.0, 0.5, 0.0]),
                    frac("P", [0.25, 0.25, 0.25]),
                    frac("S", [-eta, eta, eta]),
                    frac("S1", [eta, 1.0 - eta, -eta]),
                    frac("X", [0.0, 0.0, 0.5]),
                    frac("Y", [-zeta, zeta, 0.5]),
                    frac("Y1", [0.5, 0.5, -zeta]),
                    frac("Z", [0.5, 0.5, -0.5]),
                ],
            }
        }
        Orthorhombic => {
            let (a, b, cc) = (c.l[0], c.l[1], c.l[2]);
            StdGeometry {
                vectors: [[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, cc]],
                corners: vec![
                    frac("Γ", [0.0, 0.0, 0.0]),
                    frac("R", [0.5, 0.5, 0.5]),
                    frac("S", [0.5, 0.5, 0.0]),
                    frac("T", [0.0, 0.5, 0.5]),
                    frac("U", [0.5, 0.0, 0.5]),
                    frac("X", [0.5, 0.0, 0.0]),
                    frac("Y", [0.0, 0.5, 0.0]),
                    frac("Z", [0.0, 0.0, 0.5]),
                ],
            }
        }
        BaseCenteredOrthorhombic => {
            let mean01 = (c.l[0] * c.l[0] + c.l[1] * c.l[1]) / 2.0;
            let a2 = 2.0 * (mean01 + d[2]);
            let b2 = 2.0 * (mean01 - d[2]);
            let a = sqrt_pos(a2)?;
            let b = sqrt_pos(b2)?;
            let cc = c.l[2];
            let zeta = (1.0 + a2 / b2) / 4.0;
            StdGeometry {
                vectors: [[a / 2.0, -b / 2.0, 0.0], [a / 2.0, b / 2.0, 0.0], [0.0, 0.0, cc]],
                corners: vec![
                    frac("Γ", [0.0, 0.0, 0.0]),
                    frac("A", [zeta, zeta, 0.5]),
                    frac("A1", [-zeta, 1.0 - zeta, 0.5]),
                    frac("R", [0.0, 0.5, 0.5]),
                    frac("S", [0.0, 0.5, 0.0]),
                    frac("T", [-0.5, 0.5, 0.5]),
                    frac("X", [zeta, zeta, 0.0]),
                    frac("X1", [-zeta, 1.0 - zeta, 0.0]),
                    frac("Y", [-0.5, 0.5, 0.0]),
                    frac("Z", [0.0, 0.0, 0.5]),
                ],
            }
        }
        FaceCenteredOrthorhombic => {
            let a = 2.0 * sqrt_pos(d[0])?;
            let b = 2.0 * sqrt_pos(d[1])?;
            let cc = 2.0 * sqrt_pos(d[2])?;
            let (a2, b2, c2) = (a * a, b * b, cc * cc);
            let zeta = (1.0 + a2 / b2 - a2 / c2) / 4.0;
            let eta = (1.0 + a2 / b2 + a2 / c2) / 4.0;
            StdGeometry {
                vectors: [
                    [0.0, b / 2.0, cc / 2.0],
                    [a / 2.0, 0.0, cc / 2.0],
                    [a / 2.0, b / 2.0, 0.0],
                ],
                corners: vec![
                    frac("Γ", [0.0, 0.0, 0.0]),
                    frac("A", [0.5, 0.5 + zeta, zeta]),
                    frac("A1", [0.5, 0.5 - zeta, 1.0 - zeta]),
                    frac("L", [0.5, 0.5, 0.5]),
                    frac("T", [1.0, 0.5, 0.5]),
                    frac("X", [0.0, eta, eta]),
                    frac("X1", [1.0, 1.0 - eta, 1.0 - eta]),
                    frac("Y", [0.5, 0.0, 0.5]),
                    frac("Z", [0.5, 0.5, 0.0]),
                ],
            }
        }
        BodyCenteredOrthorhombic => {
            let a2 = -2.0 * (d[2] + d[1]);
            let b2 = -2.0 * (d[2] + d[0]);
            let c2 = -2.0 * (d[1] + d[0]);
            let a = sqrt_pos(a2)?;
            let b = sqrt_pos(b2)?;
            let cc = sqrt_pos(c2)?;
            let zeta = (1.0 + a2 / c2) / 4.0;
            let eta = (1.0 + b2 / c2) / 4.0;
            let delta = (b2 - a2) / (4.0 * c2);
            let mu = (a2 + b2) / (4.0 * c2);
            StdGeometry {
                vectors: [
                    [-a / 2.0, b / 2.0, cc / 2.0],
                    [a / 2.0, -b / 2.0, cc / 2.0],
                    [a / 2.0, b / 2.0, -cc / 2.0],
                ],
                corners: vec![
                    frac("Γ", [0.0, 0.0, 0.0]),
                    frac("L", [-mu, mu, 0.5 - delta]),
                    frac("L1", [mu, -mu, 0.5 + delta]),
                    frac("L2", [0.5 - delta, 0.5 + delta, -mu]),
                    frac("R", [0.0, 0.5, 0.0]),
                    frac("S", [0.5, 0.0, 0.0]),
                    frac("T", [0.0, 0.0, 0.5]),
                    frac("W", [0.25, 0.25, 0.25]),
                    frac("X", [-zeta, zeta, zeta]),
                    frac("X1", [zeta, 1.0 - zeta, -zeta]),
                    frac("Y", [eta, -eta, eta]),
                    frac("Y1", [1.0 - eta, eta, -eta]),
                    frac("Z", [0.5, 0.5, -0.5]),
                ],
            }
        }
        Hexagonal => {
            let a = (c.l[0] + c.l[1]) / 2.0;
            let cc = c.l[2];
            let s3 = 3.0f64.sqrt() / 2.0;
            StdGeometry {
                vectors: [[a / 2.0, -a * s3, 0.0], [a / 2.0, a * s3, 0.0], [0.0, 0.0, cc]],
                corners: vec![
                    frac("Γ", [0.0, 0.0, 0.0]),
                    frac("A", [0.0, 0.0, 0.5]),
                    frac("H", [1.0 / 3.0, 1.0 / 3.0, 0.5]),
                    frac("K", [1.0 / 3.0, 1.0 / 3.0, 0.0]),
                    frac("L", [0.5, 0.0, 0.5]),
                    frac("M", [0.5, 0.0, 0.0]),
                ],
            }
        }
        Rhombohedral => {
            let a = mean_l;
            let cos_a = (c.cos[0] + c.cos[1] + c.cos[2]) / 3.0;
            if cos_a <= 0.0 || cos_a >= 1.0 {
                return Err(mismatch());
            }
            let alpha = cos_a.acos();
            let (ch, sh) = ((alpha / 2.0).cos(), (alpha / 2.0).sin());
            let zz = sqrt_pos(1.0 - cos_a * cos_a / (ch * ch))?;
            let eta = (1.0 + 4.0 * cos_a) / (2.0 + 4.0 * cos_a);
            let nu = 0.75 - eta / 2.0;
            StdGeometry {
                vectors: [
                    [a * ch, -a * sh, 0.0],
                    [a * ch, a * sh, 0.0],
                    [a * cos_a / ch, 0.0, a * zz],
                ],
                corners: vec![
                    frac("Γ", [0.0, 0.0, 0.0]),
                    frac("B", [eta, 0.5, 1.0 - eta]),
                    frac("B1", [0.5, 1.0 - eta, eta - 1.0]),
                    frac("F", [0.5, 0.5, 0.0]),
                    frac("L", [0.5, 0.0, 0.0]),
                    frac("L1", [0.0, 0.0, -0.5]),
                    frac("P", [eta, nu, nu]),
                    frac("P1", [1.0 - nu, 1.0 - nu, 1.0 - eta]),
                    frac("P2", [nu, nu, eta - 1.0]),
                    frac("Q", [1.0 - nu, nu, 0.0]),
                    frac("X", [nu, -nu, 0.0]),
                    frac("Z", [0.5, 0.5, 0.5]),
                ],
            }
        }
        Monoclinic => {
            let (a, b, cc) = (c.l[0], c.l[1], c.l[2]);
            let cos_a = d[0] / (b * cc);
            if cos_a <= 0.0 || cos_a >= 1.0 {
                return Err(mismatch());
            }
            let sin_a = (1.0 - cos_a * cos_a).sqrt();
            let eta = (1.0 - b * cos_a / cc) / (2.0 * sin_a * sin_a);
            let nu = 0.5 - eta * cc * cos_a / b;
            StdGeometry {
                vectors: [[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, cc * cos_a, cc * sin_a]],
                corners: vec![
                    frac("Γ", [0.0, 0.0, 0.0]),
                    frac("A", [0.5, 0.5, 0.0]),
                    frac("C", [0.0, 0.5, 0.5]),
                    frac("D", [0.5, 0.0, 0.5]),
                    frac("D1", [0.5, 0.0, -0.5]),
                    frac("E", [0.5, 0.5, 0.5]),
                    frac("H", [0.0, eta, 1.0 - nu]),
                    frac("H1", [0.0, 1.0 - eta, nu]),
                    frac("H2", [0.0, eta, -nu]),
                    frac("M", [0.5, eta, 1.0 - nu]),
                    frac("M1", [0.5, 1.0 - eta, nu]),
                    frac("M2", [0.5, eta, -nu]),
                    frac("X", [0.0, 0.5, 0.0]),
                    frac("Y", [0.0, 0.0, 0.5]),
                    frac("Y1", [0.0, 0.0, -0.5]),
                    frac("Z", [0.5, 0.0, 0.0]),
                ],
            }
        }
        BaseCenteredMonoclinic => {
            let mean01 = (c.l[0] * c.l[0] + c.l[1] * c.l[1]) / 2.0;
            let b2 = 2.0 * (mean01 + d[2]);
            let a2 = 2.0 * (mean01 - d[2]);
            let a = sqrt_pos(a2)?;
            let b = sqrt_pos(b2)?;
            let cc = c.l[2];
            let cos_a = (d[1] + d[0]) / (b * cc);
            if cos_a <= 0.0 || cos_a >= 1.0 {
                return Err(mismatch());
            }
            let sin_a = (1.0 - cos_a * cos_a).sqrt();
            let mu = (1.0 + b2 / a2) / 4.0;
            let delta = b * cc * cos_a / (2.0 * a2);
            let zeta = mu - 0.25 + (1.0 - b * cos_a / cc) / (4.0 * sin_a * sin_a);
            let eta = 0.5 + 2.0 * zeta * cc * cos_a / b;
            let phi = 1.0 + zeta - 2.0 * mu;
            let psi = eta - 2.0 * delta;
            StdGeometry {
                vectors: [
                    [a / 2.0, b / 2.0, 0.0],
                    [-a / 2.0, b / 2.0, 0.0],
                    [0.0, cc * cos_a, cc * sin_a],
                ],
                corners: vec![
                    frac("Γ", [0.0, 0.0, 0.0]),
                    frac("F", [1.0 - phi, 1.0 - phi, 1.0 - psi]),
                    frac("F1", [phi, phi - 1.0, psi]),
                    frac("F2", [1.0 - phi, -phi, 1.0 - psi]),
                    frac("H", [zeta, zeta, eta]),
                    frac("H1", [1.0 - zeta, -zeta, 1.0 - eta]),
                    frac("H2", [zeta, zeta - 1.0, eta]),
                    frac("I", [0.5, -0.5, 0.5]),
                    frac("M", [0.5, 0.0, 0.5]),
                    frac("N", [0.5, 0.0, 0.0]),
                    frac("N1", [0.0, -0.5, 0.0]),
                    frac("X", [0.5, -0.5, 0.0]),
                    frac("Y", [mu, mu, delta]),
                    frac("Y1", [1.0 - mu, -mu, -delta]),
                    frac("Y2", [-mu, -mu, -delta]),
                    frac("Y3", [mu, mu - 1.0, delta]),
                    frac("Z", [0.0, 0.0, 0.5]),
                ],
            }
        }
        Triclinic => {
            let vs = super::build_translation_vectors(
                c.l,
                c.cos[0],
                c.cos[1],
                c.cos[2],
                (1.0 - c.cos[2] * c.cos[2]).sqrt(),
            )?;
            StdGeometry {
                vectors: vs,
                corners: vec![
                    frac("Γ", [0.0, 0.0, 0.0]),
                    frac("L", [0.5, 0.5, 0.0]),
                    frac("M", [0.0, 0.5, 0.5]),
                    frac("N", [0.5, 0.0, 0.5]),
                    frac("R", [0.5, 0.5, 0.5]),
                    frac("X", [0.5, 0.0, 0.0]),
                    frac("Y", [0.0, 0.5, 0.0]),
                    frac("Z", [0.0, 0.0, 0.5]),
                ],
            }
        }
    };
    Ok(geo)
}

pub(crate) fn class_table(corr: &CorrectedLattice) -> Result<ClassTable, LatticeError> {
    let spec = &corr.spec;
    let raw_l = [spec.len_a1, spec.len_a2, spec.len_a3];
    let raw_cos =
        [spec.theta_alpha_raw.cos(), spec.theta_beta_raw.cos(), spec.theta_gamma_raw.cos()];
    let corrected_l = raw_l;
    let corrected_cos = [corr.cos_alpha, corr.cos_beta, corr.cos_gamma];

    let rotation = (0..3)
        .find(|&r| matches_class(spec.class, &rotate_consts(raw_l, raw_cos, r)))
        .ok_or(LatticeError::ClassMismatch { class: spec.class })?;

    let std_consts = rotate_consts(corrected_l, corrected_cos, rotation);
    let geo = synthesize(spec.class, &std_consts)?;

    // Input-order column j is standard column (j + rotation) mod 3; the
    // fractional coordinates permute the same way.
    let perm = |j: usize| (j + rotation) % 3;
    let a_std = [geo.vectors[perm(0)], geo.vectors[perm(1)], geo.vectors[perm(2)]];
    let corners = geo
        .corners
        .into_iter()
        .map(|(label, f)| (label, [f[perm(0)], f[perm(1)], f[perm(2)]]))
        .collect();

    Ok(ClassTable { a_std, corners })
}
