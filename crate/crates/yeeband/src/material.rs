//! Dielectric sampling onto the staggered grid.
//!
//! The three electric field components live on edge midpoints of the Yee
//! cell, so the permittivity is point-sampled at ((i+½)δx, jδy, kδz) and
//! its cyclic analogues, giving the diagonal operator B = diag(B1, B2, B3)
//! of the generalized eigenproblem C*C e = λ B e. No sub-cell averaging is
//! applied at dielectric interfaces.
//!
//! Shapes are described in Cartesian coordinates of the computational
//! frame, in the same length units as the lattice vectors. Sample points
//! are reduced into the primitive cell and tested against the 27 neighbor
//! translates of each shape, so geometry that crosses a cell boundary
//! tiles correctly. The gyroid level set is evaluated in the conventional
//! cubic frame of the lattice class (rotating the sample point back via
//! the class's standard orientation); for non-cubic classes it falls back
//! to the computational frame with period l1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use num_complex::Complex64;

use crate::lattice::{build_reciprocal, BravaisClass, CorrectedLattice, LatticeError};

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("geometry.shapes[{index}]: radius must be positive, got {value}")]
    BadRadius { index: usize, value: f64 },
    #[error("geometry.shapes[{index}]: permittivity must be at least 1, got {value}")]
    BadShapeEps { index: usize, value: f64 },
    #[error("geometry.eps_out: background permittivity must be at least 1, got {value}")]
    BadBackground { value: f64 },
    #[error("geometry.shapes[{index}]: level must be finite")]
    BadLevel { index: usize },
    #[error("geometry.shapes[{index}]: cylinder endpoints coincide")]
    DegenerateCylinder { index: usize },
}

fn default_eps_in() -> f64 {
    13.0
}

fn default_eps_out() -> f64 {
    1.0
}

/// A dielectric primitive. First shape containing a point wins.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Sphere {
        center: [f64; 3],
        radius: f64,
        #[serde(default = "default_eps_in")]
        eps_in: f64,
    },
    /// Finite segment with flat caps.
    Cylinder {
        endpoint_a: [f64; 3],
        endpoint_b: [f64; 3],
        radius: f64,
        #[serde(default = "default_eps_in")]
        eps_in: f64,
    },
    /// Single-gyroid region sin(2πx/a)cos(2πy/a) + sin(2πy/a)cos(2πz/a)
    /// + sin(2πz/a)cos(2πx/a) > level, in the conventional cubic frame.
    Gyroid {
        level: f64,
        #[serde(default = "default_eps_in")]
        eps_in: f64,
    },
}

impl Shape {
    pub fn eps_in(&self) -> f64 {
        match self {
            Shape::Sphere { eps_in, .. }
            | Shape::Cylinder { eps_in, .. }
            | Shape::Gyroid { eps_in, .. } => *eps_in,
        }
    }

    pub fn eps_in_mut(&mut self) -> &mut f64 {
        match self {
            Shape::Sphere { eps_in, .. }
            | Shape::Cylinder { eps_in, .. }
            | Shape::Gyroid { eps_in, .. } => eps_in,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    #[serde(default)]
    pub shapes: Vec<Shape>,
    #[serde(default = "default_eps_out")]
    pub eps_out: f64,
}

impl Geometry {
    pub fn vacuum() -> Self {
        Geometry { shapes: Vec::new(), eps_out: 1.0 }
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        if self.eps_out < 1.0 {
            return Err(MaterialError::BadBackground { value: self.eps_out });
        }
        for (index, shape) in self.shapes.iter().enumerate() {
            if shape.eps_in() < 1.0 {
                return Err(MaterialError::BadShapeEps { index, value: shape.eps_in() });
            }
            match shape {
                Shape::Sphere { radius, .. } => {
                    if !(*radius > 0.0) {
                        return Err(MaterialError::BadRadius { index, value: *radius });
                    }
                }
                Shape::Cylinder { endpoint_a, endpoint_b, radius, .. } => {
                    if !(*radius > 0.0) {
                        return Err(MaterialError::BadRadius { index, value: *radius });
                    }
                    let len2: f64 =
                        (0..3).map(|d| (endpoint_b[d] - endpoint_a[d]).powi(2)).sum();
                    if len2 == 0.0 {
                        return Err(MaterialError::DegenerateCylinder { index });
                    }
                }
                Shape::Gyroid { level, .. } => {
                    if !level.is_finite() {
                        return Err(MaterialError::BadLevel { index });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Edge-sampled permittivity: the diagonal of B, one array per edge family.
#[derive(Debug, Clone)]
pub struct PermittivityField {
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub b3: Vec<f64>,
    pub eps_min: f64,
    pub eps_max: f64,
}

impl PermittivityField {
    pub fn n(&self) -> usize {
        self.b1.len()
    }

    pub fn vacuum(n: usize) -> Self {
        PermittivityField {
            b1: vec![1.0; n],
            b2: vec![1.0; n],
            b3: vec![1.0; n],
            eps_min: 1.0,
            eps_max: 1.0,
        }
    }

    /// κ(B⁻¹) = max(ε)/min(ε); a diagonal matrix's condition number exactly.
    pub fn condition_number(&self) -> f64 {
        self.eps_max / self.eps_min
    }

    pub fn apply_b(&self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.n();
        for s in 0..n {
            out[s] = v[s] * self.b1[s];
            out[n + s] = v[n + s] * self.b2[s];
            out[2 * n + s] = v[2 * n + s] * self.b3[s];
        }
    }

    pub fn apply_b_inverse(&self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.n();
        for s in 0..n {
            out[s] = v[s] / self.b1[s];
            out[n + s] = v[n + s] / self.b2[s];
            out[2 * n + s] = v[2 * n + s] / self.b3[s];
        }
    }
}

struct SampleFrame {
    a: [[f64; 3]; 3],
    omega: [[f64; 3]; 3],
    conv_a: f64,
}

impl SampleFrame {
    fn new(corr: &CorrectedLattice) -> Result<Self, LatticeError> {
        let recip = build_reciprocal(corr)?;
        let conv_a = match corr.spec.class {
            BravaisClass::Cubic => corr.l1,
            BravaisClass::Bcc => 2.0 * corr.l1 / 3.0f64.sqrt(),
            BravaisClass::Fcc => corr.l1 * 2.0f64.sqrt(),
            _ => corr.l1,
        };
        Ok(SampleFrame { a: [corr.a1, corr.a2, corr.a3], omega: recip.omega, conv_a })
    }

    /// Cartesian point of the fractional coordinate u, computational frame.
    fn point(&self, u: [f64; 3]) -> [f64; 3] {
        let mut p = [0.0; 3];
        for d in 0..3 {
            p[d] = u[0] * self.a[0][d] + u[1] * self.a[1][d] + u[2] * self.a[2][d];
        }
        p
    }

    /// Rotate a computational-frame point into the conventional frame.
    fn to_conventional(&self, p: [f64; 3]) -> [f64; 3] {
        let mut q = [0.0; 3];
        for d in 0..3 {
            q[d] = self.omega[0][d] * p[0] + self.omega[1][d] * p[1] + self.omega[2][d] * p[2];
        }
        q
    }
}

fn inside_sphere(p: [f64; 3], center: &[f64; 3], radius: f64) -> bool {
    let d2: f64 = (0..3).map(|d| (p[d] - center[d]).powi(2)).sum();
    d2 <= radius * radius
}

fn inside_cylinder(p: [f64; 3], a: &[f64; 3], b: &[f64; 3], radius: f64) -> bool {
    let axis = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let len2: f64 = axis.iter().map(|x| x * x).sum();
    let t: f64 = (0..3).map(|d| (p[d] - a[d]) * axis[d]).sum::<f64>() / len2;
    if !(0.0..=1.0).contains(&t) {
        return false;
    }
    let r2: f64 = (0..3).map(|d| (p[d] - a[d] - t * axis[d]).powi(2)).sum();
    r2 <= radius * radius
}

fn gyroid_value(p: [f64; 3], conv_a: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI / conv_a;
    let (x, y, z) = (w * p[0], w * p[1], w * p[2]);
    x.sin() * y.cos() + y.sin() * z.cos() + z.sin() * x.cos()
}

/// ε at the fractional coordinate u, reduced into the primitive cell.
fn eps_at(geom: &Geometry, frame: &SampleFrame, u: [f64; 3]) -> f64 {
    let u0 = [u[0] - u[0].floor(), u[1] - u[1].floor(), u[2] - u[2].floor()];
    let p0 = frame.point(u0);
    for shape in &geom.shapes {
        let hit = match shape {
            Shape::Gyroid { level, .. } => {
                gyroid_value(frame.to_conventional(p0), frame.conv_a) > *level
            }
            _ => 'translated: {
                for s3 in -1i32..=1 {
                    for s2 in -1i32..=1 {
                        for s1 in -1i32..=1 {
                            let p = [
                                p0[0]
                                    + s1 as f64 * frame.a[0][0]
                                    + s2 as f64 * frame.a[1][0]
                                    + s3 as f64 * frame.a[2][0],
                                p0[1]
                                    + s1 as f64 * frame.a[0][1]
                                    + s2 as f64 * frame.a[1][1]
                                    + s3 as f64 * frame.a[2][1],
                                p0[2]
                                    + s1 as f64 * frame.a[0][2]
                                    + s2 as f64 * frame.a[1][2]
                                    + s3 as f64 * frame.a[2][2],
                            ];
                            let inside = match shape {
                                Shape::Sphere { center, radius, .. } => {
                                    inside_sphere(p, center, *radius)
                                }
                                Shape::Cylinder { endpoint_a, endpoint_b, radius, .. } => {
                                    inside_cylinder(p, endpoint_a, endpoint_b, *radius)
                                }
                                Shape::Gyroid { .. } => unreachable!(),
                            };
                            if inside {
                                break 'translated true;
                            }
                        }
                    }
                }
                false
            }
        };
        if hit {
            return shape.eps_in();
        }
    }
    geom.eps_out
}

/// Samples ε onto the three Yee edge families.
pub fn sample_b(
    geom: &Geometry,
    corr: &CorrectedLattice,
) -> Result<PermittivityField, LatticeError> {
    let frame = SampleFrame::new(corr)?;
    let (n1, n2, n3) = corr.grid();
    let n = n1 * n2 * n3;
    let mut field = PermittivityField {
        b1: vec![0.0; n],
        b2: vec![0.0; n],
        b3: vec![0.0; n],
        eps_min: f64::INFINITY,
        eps_max: f64::NEG_INFINITY,
    };
    let (f1, f2, f3) = (n1 as f64, n2 as f64, n3 as f64);
    for iz in 0..n3 {
        for iy in 0..n2 {
            for ix in 0..n1 {
                let s = ix + n1 * (iy + n2 * iz);
                let (x, y, z) = (ix as f64, iy as f64, iz as f64);
                field.b1[s] = eps_at(geom, &frame, [(x + 0.5) / f1, y / f2, z / f3]);
                field.b2[s] = eps_at(geom, &frame, [x / f1, (y + 0.5) / f2, z / f3]);
                field.b3[s] = eps_at(geom, &frame, [x / f1, y / f2, (z + 0.5) / f3]);
            }
        }
    }
    for v in field.b1.iter().chain(&field.b2).chain(&field.b3) {
        field.eps_min = field.eps_min.min(*v);
        field.eps_max = field.eps_max.max(*v);
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;

    fn cube(n: usize) -> CorrectedLattice {
        let spec = LatticeSpec::new(
            BravaisClass::Cubic,
            [1.0, 1.0, 1.0],
            [std::f64::consts::FRAC_PI_2; 3],
            [n, n, n],
        )
        .unwrap();
        CorrectedLattice::from_spec(spec).unwrap()
    }

    #[test]
    fn empty_geometry_gives_the_identity() {
        let field = sample_b(&Geometry::vacuum(), &cube(4)).unwrap();
        assert!(field.b1.iter().chain(&field.b2).chain(&field.b3).all(|&v| v == 1.0));
        assert_eq!(field.condition_number(), 1.0);
    }

    #[test]
    fn b_and_its_inverse_round_trip() {
        let geom = Geometry {
            shapes: vec![Shape::Sphere { center: [0.3, 0.4, 0.5], radius: 0.3, eps_in: 13.0 }],
            eps_out: 2.0,
        };
        let field = sample_b(&geom, &cube(4)).unwrap();
        let n = field.n();
        let v: Vec<Complex64> =
            (0..3 * n).map(|s| Complex64::new((s as f64).sin(), (s as f64).cos())).collect();
        let mut mid = vec![Complex64::default(); 3 * n];
        let mut back = vec![Complex64::default(); 3 * n];
        field.apply_b_inverse(&v, &mut mid);
        field.apply_b(&mid, &mut back);
        for s in 0..3 * n {
            assert!((back[s] - v[s]).norm() < 1e-15 * v[s].norm());
        }
        let stacked: Vec<Complex64> = field
            .b1
            .iter()
            .chain(&field.b2)
            .chain(&field.b3)
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        field.apply_b_inverse(&stacked, &mut mid);
        for s in 0..3 * n {
            assert!((mid[s] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn sampling_is_lattice_periodic() {
        let geom = Geometry {
            shapes: vec![
                Shape::Sphere { center: [0.9, 0.1, 0.2], radius: 0.25, eps_in: 7.0 },
                Shape::Cylinder {
                    endpoint_a: [0.0, 0.0, 0.0],
                    endpoint_b: [0.5, 0.5, 0.5],
                    radius: 0.1,
                    eps_in: 4.0,
                },
            ],
            eps_out: 1.0,
        };
        let corr = cube(5);
        let frame = SampleFrame::new(&corr).unwrap();
        for t in 0..60 {
            let u = [
                1.7 * (t as f64 * 0.71).sin(),
                1.3 * (t as f64 * 0.37).cos(),
                2.1 * (t as f64 * 0.53).sin(),
            ];
            let base = eps_at(&geom, &frame, u);
            for shift in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
                let moved = [u[0] + shift[0], u[1] + shift[1], u[2] + shift[2]];
                assert_eq!(eps_at(&geom, &frame, moved), base);
            }
        }
    }

    #[test]
    fn growing_a_sphere_never_lowers_entries() {
        let corr = cube(6);
        let mk = |radius| Geometry {
            shapes: vec![Shape::Sphere { center: [0.2, 0.8, 0.4], radius, eps_in: 13.0 }],
            eps_out: 1.0,
        };
        let small = sample_b(&mk(0.2), &corr).unwrap();
        let large = sample_b(&mk(0.35), &corr).unwrap();
        for (a, b) in small
            .b1
            .iter()
            .chain(&small.b2)
            .chain(&small.b3)
            .zip(large.b1.iter().chain(&large.b2).chain(&large.b3))
        {
            assert!(b >= a);
        }
    }

    #[test]
    fn first_listed_shape_wins_overlaps() {
        let geom = Geometry {
            shapes: vec![
                Shape::Sphere { center: [0.5, 0.5, 0.5], radius: 0.2, eps_in: 5.0 },
                Shape::Sphere { center: [0.5, 0.5, 0.5], radius: 0.4, eps_in: 9.0 },
            ],
            eps_out: 1.0,
        };
        let corr = cube(4);
        let frame = SampleFrame::new(&corr).unwrap();
        assert_eq!(eps_at(&geom, &frame, [0.5, 0.5, 0.5]), 5.0);
        assert_eq!(eps_at(&geom, &frame, [0.5, 0.5, 0.8]), 9.0);
        assert_eq!(eps_at(&geom, &frame, [0.05, 0.05, 0.05]), 1.0);
    }

    #[test]
    fn gyroid_matches_its_level_set_formula_on_a_cube() {
        let geom = Geometry {
            shapes: vec![Shape::Gyroid { level: 1.1, eps_in: 16.0 }],
            eps_out: 1.0,
        };
        let corr = cube(4);
        let frame = SampleFrame::new(&corr).unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        for t in 0..120 {
            let u = [
                (t as f64 * 0.17).fract(),
                (t as f64 * 0.29).fract(),
                (t as f64 * 0.41).fract(),
            ];
            let g = (tau * u[0]).sin() * (tau * u[1]).cos()
                + (tau * u[1]).sin() * (tau * u[2]).cos()
                + (tau * u[2]).sin() * (tau * u[0]).cos();
            let expected = if g > 1.1 { 16.0 } else { 1.0 };
            assert_eq!(eps_at(&geom, &frame, u), expected);
        }
    }

    #[test]
    fn invalid_geometry_is_rejected_with_the_field_named() {
        let bad_radius = Geometry {
            shapes: vec![Shape::Sphere { center: [0.0; 3], radius: 0.0, eps_in: 13.0 }],
            eps_out: 1.0,
        };
        assert!(matches!(bad_radius.validate(), Err(MaterialError::BadRadius { index: 0, .. })));
        let bad_eps = Geometry { shapes: vec![], eps_out: 0.5 };
        assert!(matches!(bad_eps.validate(), Err(MaterialError::BadBackground { .. })));
        let bad_cyl = Geometry {
            shapes: vec![Shape::Cylinder {
                endpoint_a: [0.1, 0.2, 0.3],
                endpoint_b: [0.1, 0.2, 0.3],
                radius: 0.1,
                eps_in: 2.0,
            }],
            eps_out: 1.0,
        };
        assert!(matches!(
            bad_cyl.validate(),
            Err(MaterialError::DegenerateCylinder { index: 0 })
        ));
    }
}
