//! Discrete curl on the mesh-aligned staggered grid.
//!
//! Each partial derivative is a forward difference that wraps
//! quasi-periodically: crossing the cell boundary along aℓ multiplies by the
//! Bloch phase e^{ı2πk·aℓ}. Because the angles were snapped, the oblique
//! translations a2 and a3 also carry whole-cell offsets in x (and y), so the
//! wrap rows of K2 and K3 are permutations with unit-modulus phases: J2 and
//! J3. Both operators are built here from the exact integer wrap geometry
//! (offset in grid cells plus the number of periods crossed), which
//! reproduces the familiar block forms for all lattice cases, including the
//! degenerate full-wrap offsets.
//!
//! Index convention: x fastest, so a field value at (ix, iy, iz) lives at
//! flat index ix + n1·(iy + n2·iz), matching C1 = I⊗I⊗K1, C2 = I⊗K2,
//! C3 = K3.

use ndarray::Array2;
use num_complex::Complex64;

use crate::lattice::CorrectedLattice;
use crate::linalg::unit_phase;

/// The three Bloch factors e^{ı2πk·aℓ}.
#[derive(Debug, Clone, Copy)]
pub struct BlochPhases {
    pub phi1: Complex64,
    pub phi2: Complex64,
    pub phi3: Complex64,
}

impl BlochPhases {
    pub fn new(k_dots: (f64, f64, f64)) -> Self {
        BlochPhases {
            phi1: unit_phase(k_dots.0),
            phi2: unit_phase(k_dots.1),
            phi3: unit_phase(k_dots.2),
        }
    }
}

/// Column index and phase of row `ix` in the unit-modulus block that shifts
/// a periodic x-line down by `w` grid cells; every period crossed while
/// folding back into [0, n1) contributes one factor of e^{±ı2πk·a1}.
fn xshift_entry(n1: usize, w: i64, ka1: f64, ix: usize) -> (usize, Complex64) {
    let u = ix as i64 - w;
    let col = u.rem_euclid(n1 as i64);
    let periods = (u - col) / n1 as i64;
    (col as usize, unit_phase(ka1 * periods as f64))
}

/// Wrap block of K2: the x-permutation induced by translating one y-period
/// by a2 (x-offset m1 − ρ1·n1 cells).
pub fn assemble_j2(n1: usize, m1: usize, rho1: i32, ka1: f64) -> Array2<Complex64> {
    let w = m1 as i64 - rho1 as i64 * n1 as i64;
    let mut j = Array2::zeros((n1, n1));
    for ix in 0..n1 {
        let (col, phase) = xshift_entry(n1, w, ka1, ix);
        j[(ix, col)] = phase;
    }
    j
}

/// Wrap block of K3: the (x, y)-permutation induced by translating one
/// z-period by a3 (x-offset m2 − ρ2·n1, y-offset m3 − ρ3·n2 cells). Rows
/// whose y-index folds across the cell pick up e^{∓ı2πk·a2} and the
/// additional x-offset of a2.
#[allow(clippy::too_many_arguments)]
pub fn assemble_j3(
    n1: usize,
    n2: usize,
    m1: usize,
    m2: usize,
    m3: usize,
    rho1: i32,
    rho2: i32,
    rho3: i32,
    ka1: f64,
    ka2: f64,
) -> Array2<Complex64> {
    let mut j = Array2::zeros((n1 * n2, n1 * n2));
    for iy in 0..n2 {
        for ix in 0..n1 {
            let (col, phase) = j3_entry(n1, n2, m1, m2, m3, rho1, rho2, rho3, ka1, ka2, ix, iy);
            j[(ix + n1 * iy, col)] = phase;
        }
    }
    j
}

#[allow(clippy::too_many_arguments)]
fn j3_entry(
    n1: usize,
    n2: usize,
    m1: usize,
    m2: usize,
    m3: usize,
    rho1: i32,
    rho2: i32,
    rho3: i32,
    ka1: f64,
    ka2: f64,
    ix: usize,
    iy: usize,
) -> (usize, Complex64) {
    let w1 = m2 as i64 - rho2 as i64 * n1 as i64;
    let w2 = m1 as i64 - rho1 as i64 * n1 as i64;
    let (col_y, y_periods) = {
        let v = iy as i64 - (m3 as i64 - rho3 as i64 * n2 as i64);
        let col = v.rem_euclid(n2 as i64);
        (col as usize, (v - col) / n2 as i64)
    };
    let w = w1 + y_periods * w2;
    let (col_x, xphase) = xshift_entry(n1, w, ka1, ix);
    (col_x + n1 * col_y, xphase * unit_phase(ka2 * y_periods as f64))
}

/// Matrix-free discrete curl for one corrected lattice and one k-point.
///
/// The wrap flags are carried verbatim from the lattice; only one of
/// ψ1/ψ2 may be active, matching ρ3.
#[derive(Debug, Clone)]
pub struct DiscreteCurl {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub m1: usize,
    pub m2: usize,
    pub m3: usize,
    pub rho1: i32,
    pub rho2: i32,
    pub rho3: i32,
    pub rho4: i32,
    pub rho5: i32,
    pub psi1: i32,
    pub psi2: i32,
    /// (k·a1, k·a2, k·a3)
    pub k_dots: (f64, f64, f64),
    pub phases: BlochPhases,
    /// Per-row (source column, phase) of J2 and of J3.
    j2_map: Vec<(usize, Complex64)>,
    j3_map: Vec<(usize, Complex64)>,
}

impl DiscreteCurl {
    pub fn new(corr: &CorrectedLattice, k: [f64; 3]) -> Self {
        let (n1, n2, n3) = corr.grid();
        let k_dots = corr.k_dots(k);
        debug_assert!(
            (corr.rho3 == 0 && corr.psi2 == 0) || (corr.rho3 == 1 && corr.psi1 == 0),
            "inactive wrap flag must be zero"
        );
        let j2_map = (0..n1)
            .map(|ix| {
                xshift_entry(n1, corr.m1 as i64 - corr.rho1 as i64 * n1 as i64, k_dots.0, ix)
            })
            .collect();
        let j3_map = (0..n1 * n2)
            .map(|s| {
                j3_entry(
                    n1,
                    n2,
                    corr.m1,
                    corr.m2,
                    corr.m3,
                    corr.rho1,
                    corr.rho2,
                    corr.rho3,
                    k_dots.0,
                    k_dots.1,
                    s % n1,
                    s / n1,
                )
            })
            .collect();
        DiscreteCurl {
            n1,
            n2,
            n3,
            dx: corr.dx,
            dy: corr.dy,
            dz: corr.dz,
            m1: corr.m1,
            m2: corr.m2,
            m3: corr.m3,
            rho1: corr.rho1,
            rho2: corr.rho2,
            rho3: corr.rho3,
            rho4: corr.rho4,
            rho5: corr.rho5,
            psi1: corr.psi1,
            psi2: corr.psi2,
            k_dots,
            phases: BlochPhases::new(k_dots),
            j2_map,
            j3_map,
        }
    }

    pub fn n(&self) -> usize {
        self.n1 * self.n2 * self.n3
    }

    /// ∂x: forward difference along x, wrapping with phase φ1.
    pub fn apply_c1(&self, v: &[Complex64], out: &mut [Complex64]) {
        let (n1, plane) = (self.n1, self.n1 * self.n2);
        let inv = 1.0 / self.dx;
        for iz in 0..self.n3 {
            for iy in 0..self.n2 {
                let base = iy * n1 + iz * plane;
                for ix in 0..n1 - 1 {
                    out[base + ix] = (v[base + ix + 1] - v[base + ix]) * inv;
                }
                out[base + n1 - 1] = (self.phases.phi1 * v[base] - v[base + n1 - 1]) * inv;
            }
        }
    }

    /// ∂y: forward difference along y; the wrap row applies φ2·J2.
    pub fn apply_c2(&self, v: &[Complex64], out: &mut [Complex64]) {
        let (n1, n2, plane) = (self.n1, self.n2, self.n1 * self.n2);
        let inv = 1.0 / self.dy;
        for iz in 0..self.n3 {
            let zoff = iz * plane;
            for iy in 0..n2 - 1 {
                let base = zoff + iy * n1;
                for ix in 0..n1 {
                    out[base + ix] = (v[base + n1 + ix] - v[base + ix]) * inv;
                }
            }
            let base = zoff + (n2 - 1) * n1;
            for ix in 0..n1 {
                let (col, phase) = self.j2_map[ix];
                out[base + ix] = (self.phases.phi2 * phase * v[zoff + col] - v[base + ix]) * inv;
            }
        }
    }

    /// ∂z: forward difference along z; the wrap plane applies φ3·J3.
    pub fn apply_c3(&self, v: &[Complex64], out: &mut [Complex64]) {
        let (n3, plane) = (self.n3, self.n1 * self.n2);
        let inv = 1.0 / self.dz;
        for iz in 0..n3 - 1 {
            let base = iz * plane;
            for s in 0..plane {
                out[base + s] = (v[base + plane + s] - v[base + s]) * inv;
            }
        }
        let base = (n3 - 1) * plane;
        for s in 0..plane {
            let (col, phase) = self.j3_map[s];
            out[base + s] = (self.phases.phi3 * phase * v[col] - v[base + s]) * inv;
        }
    }

    pub fn apply_c1_adjoint(&self, v: &[Complex64], out: &mut [Complex64]) {
        let (n1, plane) = (self.n1, self.n1 * self.n2);
        let inv = 1.0 / self.dx;
        for iz in 0..self.n3 {
            for iy in 0..self.n2 {
                let base = iy * n1 + iz * plane;
                for ix in 1..n1 {
                    out[base + ix] = (v[base + ix - 1] - v[base + ix]) * inv;
                }
                out[base] = (self.phases.phi1.conj() * v[base + n1 - 1] - v[base]) * inv;
            }
        }
    }

    pub fn apply_c2_adjoint(&self, v: &[Complex64], out: &mut [Complex64]) {
        let (n1, n2, plane) = (self.n1, self.n2, self.n1 * self.n2);
        let inv = 1.0 / self.dy;
        for iz in 0..self.n3 {
            let zoff = iz * plane;
            for iy in 1..n2 {
                let base = zoff + iy * n1;
                for ix in 0..n1 {
                    out[base + ix] = (v[base - n1 + ix] - v[base + ix]) * inv;
                }
            }
            let wrap = zoff + (n2 - 1) * n1;
            for ix in 0..n1 {
                out[zoff + ix] = -v[zoff + ix] * inv;
            }
            for ix in 0..n1 {
                let (col, phase) = self.j2_map[ix];
                out[zoff + col] += (self.phases.phi2 * phase).conj() * v[wrap + ix] * inv;
            }
        }
    }

    pub fn apply_c3_adjoint(&self, v: &[Complex64], out: &mut [Complex64]) {
        let (n3, plane) = (self.n3, self.n1 * self.n2);
        let inv = 1.0 / self.dz;
        for iz in 1..n3 {
            let base = iz * plane;
            for s in 0..plane {
                out[base + s] = (v[base - plane + s] - v[base + s]) * inv;
            }
        }
        let wrap = (n3 - 1) * plane;
        for s in 0..plane {
            out[s] = -v[s] * inv;
        }
        for s in 0..plane {
            let (col, phase) = self.j3_map[s];
            out[col] += (self.phases.phi3 * phase).conj() * v[wrap + s] * inv;
        }
    }

    /// h = C e for e = [e1; e2; e3], with C = [0 −C3 C2; C3 0 −C1; −C2 C1 0].
    pub fn apply_curl(&self, e: &[Complex64], out: &mut [Complex64]) {
        let n = self.n();
        assert_eq!(e.len(), 3 * n);
        assert_eq!(out.len(), 3 * n);
        let (e1, e2, e3) = (&e[..n], &e[n..2 * n], &e[2 * n..]);
        let mut tmp = vec![Complex64::default(); n];

        self.apply_c2(e3, &mut out[..n]);
        self.apply_c3(e2, &mut tmp);
        for (o, t) in out[..n].iter_mut().zip(&tmp) {
            *o -= t;
        }
        self.apply_c3(e1, &mut out[n..2 * n]);
        self.apply_c1(e3, &mut tmp);
        for (o, t) in out[n..2 * n].iter_mut().zip(&tmp) {
            *o -= t;
        }
        self.apply_c1(e2, &mut out[2 * n..]);
        self.apply_c2(e1, &mut tmp);
        for (o, t) in out[2 * n..].iter_mut().zip(&tmp) {
            *o -= t;
        }
    }

    /// e = C* h.
    pub fn apply_curl_adjoint(&self, h: &[Complex64], out: &mut [Complex64]) {
        let n = self.n();
        assert_eq!(h.len(), 3 * n);
        assert_eq!(out.len(), 3 * n);
        let (h1, h2, h3) = (&h[..n], &h[n..2 * n], &h[2 * n..]);
        let mut tmp = vec![Complex64::default(); n];

        self.apply_c3_adjoint(h2, &mut out[..n]);
        self.apply_c2_adjoint(h3, &mut tmp);
        for (o, t) in out[..n].iter_mut().zip(&tmp) {
            *o -= t;
        }
        self.apply_c1_adjoint(h3, &mut out[n..2 * n]);
        self.apply_c3_adjoint(h1, &mut tmp);
        for (o, t) in out[n..2 * n].iter_mut().zip(&tmp) {
            *o -= t;
        }
        self.apply_c2_adjoint(h1, &mut out[2 * n..]);
        self.apply_c1_adjoint(h2, &mut tmp);
        for (o, t) in out[2 * n..].iter_mut().zip(&tmp) {
            *o -= t;
        }
    }

    fn assemble_from(&self, f: impl Fn(&Self, &[Complex64], &mut [Complex64])) -> Array2<Complex64> {
        let n = self.n();
        let mut m = Array2::zeros((n, n));
        let mut basis = vec![Complex64::default(); n];
        let mut col = vec![Complex64::default(); n];
        for j in 0..n {
            basis[j] = Complex64::new(1.0, 0.0);
            f(self, &basis, &mut col);
            basis[j] = Complex64::default();
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        m
    }

    pub fn assemble_c1(&self) -> Array2<Complex64> {
        self.assemble_from(Self::apply_c1)
    }

    pub fn assemble_c2(&self) -> Array2<Complex64> {
        self.assemble_from(Self::apply_c2)
    }

    pub fn assemble_c3(&self) -> Array2<Complex64> {
        self.assemble_from(Self::apply_c3)
    }

    /// Dense 3n×3n curl, for oracle-sized problems only.
    pub fn assemble_curl(&self) -> Array2<Complex64> {
        let n = self.n();
        let c1 = self.assemble_c1();
        let c2 = self.assemble_c2();
        let c3 = self.assemble_c3();
        let mut c = Array2::zeros((3 * n, 3 * n));
        for i in 0..n {
            for j in 0..n {
                c[(i, n + j)] = -c3[(i, j)];
                c[(i, 2 * n + j)] = c2[(i, j)];
                c[(n + i, j)] = c3[(i, j)];
                c[(n + i, 2 * n + j)] = -c1[(i, j)];
                c[(2 * n + i, j)] = -c2[(i, j)];
                c[(2 * n + i, n + j)] = c1[(i, j)];
            }
        }
        c
    }

    /// The J2 wrap block as a dense matrix.
    pub fn j2_matrix(&self) -> Array2<Complex64> {
        let mut j = Array2::zeros((self.n1, self.n1));
        for (row, &(col, phase)) in self.j2_map.iter().enumerate() {
            j[(row, col)] = phase;
        }
        j
    }

    /// The J3 wrap block as a dense matrix.
    pub fn j3_matrix(&self) -> Array2<Complex64> {
        let plane = self.n1 * self.n2;
        let mut j = Array2::zeros((plane, plane));
        for (row, &(col, phase)) in self.j3_map.iter().enumerate() {
            j[(row, col)] = phase;
        }
        j
    }
}
