//! FFT application of the diagonalizing unitary T and the reduced basis Qr.
//!
//! Every column of T is a phase ramp times a 3D Fourier mode, so T*p is
//! three forward-FFT sweeps (x, then y, then z), each preceded by the
//! conjugated ramp for that axis, and Tq is the mirror image: inverse-FFT
//! sweeps in z, y, x order, each followed by the ramp. The 1/√n of the
//! unitary normalization is applied exactly once per direction, never
//! delegated to the FFT backend; the unnormalized backend transforms
//! compose to n, so a single 1/√n on each of T and T* round-trips to the
//! identity.
//!
//! Qr = (I₃⊗T)[Π1 Π2] is applied as a diagonal combine in T-coordinates
//! followed by three independent T applications (reversed for the adjoint).

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use thiserror::Error;

use crate::linalg::unit_phase;
use crate::spectral::{SpectralBasis, SvdBlocks};

#[derive(Debug, Error)]
pub enum FftError {
    #[error("vector length {got} does not match the plan size {expected}")]
    SizeMismatch { expected: usize, got: usize },
}

struct Axis {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Axis {
    fn new(planner: &mut FftPlanner<f64>, len: usize) -> Self {
        let forward = planner.plan_fft(len, FftDirection::Forward);
        let inverse = planner.plan_fft(len, FftDirection::Inverse);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Axis { forward, inverse, scratch: vec![Complex64::default(); scratch_len] }
    }
}

/// Per-k-point FFT plan with the precomputed phase ramps of T.
pub struct TransformPlan {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    /// Ramp along x: e^{ı2π·φ1·ix/n1}.
    d1: Vec<Complex64>,
    /// Ramp along y per x-mode i: e^{ı2π·φ2(i)·iy/n2}, indexed i·n2 + iy.
    d2: Vec<Complex64>,
    /// Ramp along z per (i,j): e^{ı2π·φ3(i,j)·iz/n3}, indexed (i·n2+j)·n3 + iz.
    d3: Vec<Complex64>,
    axis1: Axis,
    axis2: Axis,
    axis3: Axis,
    line: Vec<Complex64>,
    work_a: Vec<Complex64>,
    work_b: Vec<Complex64>,
}

impl TransformPlan {
    pub fn new(basis: &SpectralBasis) -> Self {
        let (n1, n2, n3) = (basis.n1, basis.n2, basis.n3);
        let n = n1 * n2 * n3;
        let d1 = (0..n1).map(|ix| unit_phase(basis.phi1 * ix as f64 / n1 as f64)).collect();
        let d2 = (0..n1 * n2)
            .map(|s| unit_phase(basis.phi2[s / n2] * (s % n2) as f64 / n2 as f64))
            .collect();
        let d3 = (0..n)
            .map(|s| unit_phase(basis.phi3[s / n3] * (s % n3) as f64 / n3 as f64))
            .collect();
        let mut planner = FftPlanner::new();
        TransformPlan {
            n1,
            n2,
            n3,
            d1,
            d2,
            d3,
            axis1: Axis::new(&mut planner, n1),
            axis2: Axis::new(&mut planner, n2),
            axis3: Axis::new(&mut planner, n3),
            line: vec![Complex64::default(); n1.max(n2).max(n3)],
            work_a: vec![Complex64::default(); n],
            work_b: vec![Complex64::default(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.n1 * self.n2 * self.n3
    }

    fn check(&self, len: usize, factor: usize) -> Result<(), FftError> {
        let expected = factor * self.n();
        if len != expected {
            return Err(FftError::SizeMismatch { expected, got: len });
        }
        Ok(())
    }

    /// out = T*·p: conjugate-ramp + forward FFT along x, y, z in turn.
    /// Input is grid-ordered (x fastest), output is mode-ordered
    /// q = (i·n2 + j)·n3 + k.
    pub fn apply_t_adjoint(&mut self, p: &[Complex64], out: &mut [Complex64]) -> Result<(), FftError> {
        self.check(p.len(), 1)?;
        self.check(out.len(), 1)?;
        let (n1, n2, n3) = (self.n1, self.n2, self.n3);
        let scale = 1.0 / (self.n() as f64).sqrt();

        for iz in 0..n3 {
            for iy in 0..n2 {
                let base = n1 * (iy + n2 * iz);
                for ix in 0..n1 {
                    self.line[ix] = self.d1[ix].conj() * p[base + ix];
                }
                self.axis1.forward.process_with_scratch(&mut self.line[..n1], &mut self.axis1.scratch);
                self.work_a[base..base + n1].copy_from_slice(&self.line[..n1]);
            }
        }
        for iz in 0..n3 {
            for i in 0..n1 {
                for iy in 0..n2 {
                    self.line[iy] = self.d2[i * n2 + iy].conj() * self.work_a[i + n1 * (iy + n2 * iz)];
                }
                self.axis2.forward.process_with_scratch(&mut self.line[..n2], &mut self.axis2.scratch);
                for j in 0..n2 {
                    self.work_b[i + n1 * (j + n2 * iz)] = self.line[j];
                }
            }
        }
        for i in 0..n1 {
            for j in 0..n2 {
                let mode = (i * n2 + j) * n3;
                for iz in 0..n3 {
                    self.line[iz] = self.d3[mode + iz].conj() * self.work_b[i + n1 * (j + n2 * iz)];
                }
                self.axis3.forward.process_with_scratch(&mut self.line[..n3], &mut self.axis3.scratch);
                for kk in 0..n3 {
                    out[mode + kk] = self.line[kk] * scale;
                }
            }
        }
        Ok(())
    }

    /// out = T·q: inverse FFT + ramp along z, y, x in turn. Input is
    /// mode-ordered, output grid-ordered.
    pub fn apply_t(&mut self, q: &[Complex64], out: &mut [Complex64]) -> Result<(), FftError> {
        self.check(q.len(), 1)?;
        self.check(out.len(), 1)?;
        let (n1, n2, n3) = (self.n1, self.n2, self.n3);
        let scale = 1.0 / (self.n() as f64).sqrt();

        for i in 0..n1 {
            for j in 0..n2 {
                let mode = (i * n2 + j) * n3;
                self.line[..n3].copy_from_slice(&q[mode..mode + n3]);
                self.axis3.inverse.process_with_scratch(&mut self.line[..n3], &mut self.axis3.scratch);
                for iz in 0..n3 {
                    self.work_a[i + n1 * (j + n2 * iz)] = self.d3[mode + iz] * self.line[iz];
                }
            }
        }
        for iz in 0..n3 {
            for i in 0..n1 {
                for j in 0..n2 {
                    self.line[j] = self.work_a[i + n1 * (j + n2 * iz)];
                }
                self.axis2.inverse.process_with_scratch(&mut self.line[..n2], &mut self.axis2.scratch);
                for iy in 0..n2 {
                    self.work_b[i + n1 * (iy + n2 * iz)] = self.d2[i * n2 + iy] * self.line[iy];
                }
            }
        }
        for iz in 0..n3 {
            for iy in 0..n2 {
                let base = n1 * (iy + n2 * iz);
                for i in 0..n1 {
                    self.line[i] = self.work_b[base + i];
                }
                self.axis1.inverse.process_with_scratch(&mut self.line[..n1], &mut self.axis1.scratch);
                for ix in 0..n1 {
                    out[base + ix] = self.d1[ix] * self.line[ix] * scale;
                }
            }
        }
        Ok(())
    }

    /// out = Qr·y = (I₃⊗T)[Π1 Π2]·y, with y of length 2n, out 3n.
    pub fn apply_qr(
        &mut self,
        blocks: &SvdBlocks,
        y: &[Complex64],
        out: &mut [Complex64],
    ) -> Result<(), FftError> {
        let n = self.n();
        self.check(y.len() * 3, 6)?;
        self.check(out.len(), 3)?;
        let mut combined = vec![Complex64::default(); 3 * n];
        blocks.apply_pi_r(y, &mut combined);
        for b in 0..3 {
            let (src, dst) = (&combined[b * n..(b + 1) * n], &mut out[b * n..(b + 1) * n]);
            let src = src.to_vec();
            self.apply_t(&src, dst)?;
        }
        Ok(())
    }

    /// out = Qr*·v, with v of length 3n, out 2n.
    pub fn apply_qr_adjoint(
        &mut self,
        blocks: &SvdBlocks,
        v: &[Complex64],
        out: &mut [Complex64],
    ) -> Result<(), FftError> {
        let n = self.n();
        self.check(v.len(), 3)?;
        self.check(out.len() * 3, 6)?;
        let mut modes = vec![Complex64::default(); 3 * n];
        for b in 0..3 {
            let src = v[b * n..(b + 1) * n].to_vec();
            self.apply_t_adjoint(&src, &mut modes[b * n..(b + 1) * n])?;
        }
        blocks.apply_pi_r_adjoint(&modes, out);
        Ok(())
    }

    /// out = Q0*·v: the divergence coordinates of v.
    pub fn apply_q0_adjoint(
        &mut self,
        blocks: &SvdBlocks,
        v: &[Complex64],
        out: &mut [Complex64],
    ) -> Result<(), FftError> {
        let n = self.n();
        self.check(v.len(), 3)?;
        self.check(out.len(), 1)?;
        let mut modes = vec![Complex64::default(); 3 * n];
        for b in 0..3 {
            let src = v[b * n..(b + 1) * n].to_vec();
            self.apply_t_adjoint(&src, &mut modes[b * n..(b + 1) * n])?;
        }
        blocks.apply_pi0_adjoint(&modes, out);
        Ok(())
    }
}
