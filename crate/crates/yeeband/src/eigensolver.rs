//! Inverse Lanczos on the null-space-free reduced eigenproblem.
//!
//! Substituting x = B⁻¹QrΣr·y into C*C x = λBx turns the 3n generalized
//! problem into the 2n standard one A_r y = λy with A_r = ΣrQr*B⁻¹QrΣr,
//! whose spectrum is exactly the nonzero part of the original: the null
//! space never enters, so the smallest computed eigenvalue is the smallest
//! physical one. The smallest eigenvalues are extracted by Lanczos on
//! A_r⁻¹; each application solves M b = c with M = Qr*B⁻¹Qr by plain
//! conjugate gradients, which needs no preconditioner because
//! κ(M) ≤ κ(B⁻¹) = max ε / min ε.
//!
//! The Lanczos basis is kept fully reorthogonalized (two classical
//! Gram-Schmidt passes per step); bases stay small enough (≲ 200) that
//! robustness is worth the quadratic cost. Eigenvalue multiplicity, the
//! rule rather than the exception here, is handled by locking: each round
//! runs a fresh recurrence deflated against the certified pairs found so
//! far, and rounds continue until one of them leaves the reported window
//! unchanged.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fftmv::{FftError, TransformPlan};
use crate::linalg::{axpy, cdot, nrm2};
use crate::material::PermittivityField;
use crate::spectral::SvdBlocks;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("solver config: {field} {requirement}")]
    BadConfig { field: &'static str, requirement: &'static str },
    #[error("inner CG stalled after {iterations} iterations, relative residual {residual:.3e}")]
    InnerStall { iterations: usize, residual: f64 },
    #[error(transparent)]
    Fft(#[from] FftError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub num_eigs: usize,
    pub tol_outer: f64,
    pub tol_inner: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            num_eigs: 10,
            tol_outer: 1e-12,
            tol_inner: 1e-13,
            max_outer: 600,
            max_inner: 5000,
            seed: 0x5EED,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.num_eigs < 1 {
            return Err(SolverError::BadConfig { field: "num_eigs", requirement: "must be at least 1" });
        }
        for (field, value) in [("tol_outer", self.tol_outer), ("tol_inner", self.tol_inner)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(SolverError::BadConfig { field, requirement: "must lie in (0, 1)" });
            }
        }
        if self.max_outer < 1 {
            return Err(SolverError::BadConfig { field: "max_outer", requirement: "must be at least 1" });
        }
        if self.max_inner < 1 {
            return Err(SolverError::BadConfig { field: "max_inner", requirement: "must be at least 1" });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SolverDiagnostics {
    pub outer_iterations: usize,
    pub total_inner_iterations: usize,
    /// Measured ‖A_r·y − λy‖/λ per returned pair, from a direct apply.
    pub final_residuals: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct EigResult {
    /// Ascending positive eigenvalues λ of the generalized problem.
    pub eigenvalues: Vec<f64>,
    /// Electric fields e = B⁻¹QrΣr·y, each normalized, when requested.
    pub eigenvectors: Option<Vec<Vec<Complex64>>>,
    pub diagnostics: SolverDiagnostics,
}

/// One k-point's reduced operator stack: everything needed to apply A_r.
pub struct ReducedSystem<'a> {
    plan: &'a mut TransformPlan,
    svd: &'a SvdBlocks,
    field: &'a PermittivityField,
    buf3a: Vec<Complex64>,
    buf3b: Vec<Complex64>,
}

impl<'a> ReducedSystem<'a> {
    pub fn new(
        plan: &'a mut TransformPlan,
        svd: &'a SvdBlocks,
        field: &'a PermittivityField,
    ) -> Self {
        let n = plan.n();
        assert_eq!(svd.n(), n);
        assert_eq!(field.n(), n);
        ReducedSystem {
            plan,
            svd,
            field,
            buf3a: vec![Complex64::default(); 3 * n],
            buf3b: vec![Complex64::default(); 3 * n],
        }
    }

    pub fn n(&self) -> usize {
        self.field.n()
    }

    /// out = M·y with M = Qr*·B⁻¹·Qr (Hermitian positive definite, 2n).
    pub fn apply_m(&mut self, y: &[Complex64], out: &mut [Complex64]) -> Result<(), SolverError> {
        self.plan.apply_qr(self.svd, y, &mut self.buf3a)?;
        self.field.apply_b_inverse(&self.buf3a, &mut self.buf3b);
        self.plan.apply_qr_adjoint(self.svd, &self.buf3b, out)?;
        Ok(())
    }

    /// out = A_r·y = Σr·M·Σr·y.
    pub fn apply_ar(&mut self, y: &[Complex64], out: &mut [Complex64]) -> Result<(), SolverError> {
        let scaled: Vec<Complex64> =
            y.iter().zip(&self.svd.sigma_r).map(|(v, s)| v * s).collect();
        self.apply_m(&scaled, out)?;
        for (v, s) in out.iter_mut().zip(&self.svd.sigma_r) {
            *v *= s;
        }
        Ok(())
    }

    /// Conjugate gradients for M x = rhs to ‖r‖ ≤ tol·‖rhs‖.
    /// Returns the iteration count.
    pub fn solve_inner(
        &mut self,
        rhs: &[Complex64],
        x: &mut [Complex64],
        tol: f64,
        max_inner: usize,
    ) -> Result<usize, SolverError> {
        let rhs_norm = nrm2(rhs);
        x.fill(Complex64::default());
        if rhs_norm == 0.0 {
            return Ok(0);
        }
        let mut r = rhs.to_vec();
        let mut p = rhs.to_vec();
        let mut mp = vec![Complex64::default(); rhs.len()];
        let mut rs = cdot(&r, &r).re;
        for it in 1..=max_inner {
            self.apply_m(&p, &mut mp)?;
            let denom = cdot(&p, &mp).re;
            let alpha = rs / denom;
            axpy(Complex64::new(alpha, 0.0), &p, x);
            axpy(Complex64::new(-alpha, 0.0), &mp, &mut r);
            let rs_next = cdot(&r, &r).re;
            if rs_next.sqrt() <= tol * rhs_norm {
                return Ok(it);
            }
            let ratio = rs_next / rs;
            for (pv, rv) in p.iter_mut().zip(&r) {
                *pv = rv + ratio * *pv;
            }
            rs = rs_next;
        }
        Err(SolverError::InnerStall {
            iterations: max_inner,
            residual: rs.sqrt() / rhs_norm,
        })
    }

    /// out = A_r⁻¹·v = Σr⁻¹·M⁻¹·Σr⁻¹·v. Returns inner iterations used.
    fn apply_ar_inverse(
        &mut self,
        v: &[Complex64],
        out: &mut [Complex64],
        tol: f64,
        max_inner: usize,
    ) -> Result<usize, SolverError> {
        let rhs: Vec<Complex64> =
            v.iter().zip(&self.svd.sigma_r).map(|(x, s)| x / s).collect();
        let mut sol = vec![Complex64::default(); v.len()];
        let iters = self.solve_inner(&rhs, &mut sol, tol, max_inner)?;
        for ((o, s), w) in out.iter_mut().zip(&self.svd.sigma_r).zip(&sol) {
            *o = w / s;
        }
        Ok(iters)
    }

    /// e = B⁻¹·Qr·Σr·y, normalized to unit length.
    pub fn recover_field(&mut self, y: &[Complex64]) -> Result<Vec<Complex64>, SolverError> {
        let scaled: Vec<Complex64> =
            y.iter().zip(&self.svd.sigma_r).map(|(v, s)| v * s).collect();
        self.plan.apply_qr(self.svd, &scaled, &mut self.buf3a)?;
        let mut e = vec![Complex64::default(); 3 * self.n()];
        self.field.apply_b_inverse(&self.buf3a, &mut e);
        let norm = nrm2(&e);
        for v in &mut e {
            *v /= norm;
        }
        Ok(e)
    }

    /// ‖Q0*·(B·e)‖: distance of εE from the discrete divergence-free space.
    pub fn divergence_defect(&mut self, e: &[Complex64]) -> Result<f64, SolverError> {
        self.field.apply_b(e, &mut self.buf3a);
        let mut coords = vec![Complex64::default(); self.n()];
        let be = self.buf3a.clone();
        self.plan.apply_q0_adjoint(self.svd, &be, &mut coords)?;
        Ok(nrm2(&coords))
    }

    /// Smallest `cfg.num_eigs` eigenvalues of A_r by Lanczos on A_r⁻¹.
    ///
    /// A single Krylov sequence reaches each eigenspace in only one
    /// direction, so multiple eigenvalues (the rule rather than the
    /// exception here: vacuum bands come doubled, symmetry points carry
    /// extra degeneracy) would silently appear once. The solver therefore
    /// works in rounds: each round runs a fresh recurrence deflated
    /// against every pair locked so far and locks whatever it certifies;
    /// rounds continue until one of them leaves the reported window
    /// unchanged, so hidden copies always get a fresh random direction to
    /// surface through. Deflating only certified near-invariant vectors
    /// keeps the bias they induce on later rounds at the square of the
    /// certification tolerance, which an abandoned open recurrence would
    /// not.
    pub fn inverse_lanczos(
        &mut self,
        cfg: &SolverConfig,
        want_vectors: bool,
    ) -> Result<EigResult, SolverError> {
        cfg.validate()?;
        let dim = 2 * self.n();
        if cfg.num_eigs > dim {
            return Err(SolverError::BadConfig {
                field: "num_eigs",
                requirement: "exceeds the reduced problem dimension 2n",
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut locked: Vec<(f64, Vec<Complex64>)> = Vec::new();
        let mut leftovers: Vec<(f64, Vec<Complex64>)> = Vec::new();
        let mut total_steps = 0usize;
        let mut total_inner = 0usize;
        let mut confirmed = false;

        while total_steps < cfg.max_outer {
            let window_before = window_values(&locked, cfg.num_eigs);
            let budget = cfg.max_outer - total_steps;
            let round = self.lanczos_round(cfg, &locked, &mut rng, budget)?;
            total_steps += round.steps;
            total_inner += round.inner;
            locked.extend(round.certified);
            leftovers = round.uncertified;
            // Keep one pair beyond the window so an edge duplicate found
            // later can displace it; pairs pruned here re-enter future
            // rounds' reach, where they are re-certified and re-pruned
            // without changing the window.
            locked.sort_by(|a, b| b.0.total_cmp(&a.0));
            locked.truncate(cfg.num_eigs + 1);
            let window_after = window_values(&locked, cfg.num_eigs);
            if round.exhausted {
                // The deflated complement is spanned: everything reachable
                // was certified, so no further round can change the window.
                confirmed = locked.len() >= cfg.num_eigs;
                break;
            }
            if locked.len() >= cfg.num_eigs && lists_agree(&window_before, &window_after) {
                confirmed = true;
                break;
            }
        }

        locked.truncate(cfg.num_eigs);
        if locked.len() < cfg.num_eigs {
            confirmed = false;
            for pair in leftovers {
                if locked.len() == cfg.num_eigs {
                    break;
                }
                locked.push(pair);
            }
            locked.sort_by(|a, b| b.0.total_cmp(&a.0));
        }

        // The reported residuals are measured, not bounded: one forward
        // apply per pair (no inner solve involved) gives ‖A_r·y − λy‖/λ
        // directly, which also catches drift the recurrence cannot see.
        // The convergence verdict allows each pair the larger of the
        // requested tolerance and its floating-point floor, since rounding
        // in the apply accumulates to ~√dim·ε·‖A_r‖ and no measured
        // residual can land below that.
        let op_bound = self.svd.sigma_r.iter().fold(0.0f64, |m, s| m.max(*s)).powi(2)
            / self.field.eps_min;
        let fp_scale = 16.0 * (dim as f64).sqrt() * f64::EPSILON * op_bound;
        let mut converged = confirmed;
        let mut eigenvalues = Vec::with_capacity(locked.len());
        let mut final_residuals = Vec::with_capacity(locked.len());
        let mut eigenvectors =
            if want_vectors { Some(Vec::with_capacity(locked.len())) } else { None };
        let mut ay = vec![Complex64::default(); dim];
        for (mu, y) in &locked {
            let lambda = 1.0 / mu;
            self.apply_ar(y, &mut ay)?;
            axpy(Complex64::new(-lambda, 0.0), y, &mut ay);
            let resid = nrm2(&ay) / lambda.abs();
            let fp_floor = fp_scale / lambda.abs();
            converged &= resid <= (100.0 * cfg.tol_outer).max(fp_floor);
            eigenvalues.push(lambda);
            final_residuals.push(resid);
            if let Some(vecs) = eigenvectors.as_mut() {
                vecs.push(self.recover_field(y)?);
            }
        }

        Ok(EigResult {
            eigenvalues,
            eigenvectors,
            diagnostics: SolverDiagnostics {
                outer_iterations: total_steps,
                total_inner_iterations: total_inner,
                final_residuals,
                converged,
            },
        })
    }

    /// One locked-deflated Lanczos round on A_r⁻¹.
    ///
    /// Runs the recurrence, fully reorthogonalized against `locked` and its
    /// own basis, until it breaks down, spans the free complement, exhausts
    /// `budget`, or goes `CONFIRM_STEPS` steps without certifying a new
    /// pair after the first certification. Returns the pairs whose honest
    /// residual bound β·|s_last| cleared tol_outer·µ, plus the best
    /// uncertified pairs for shortfall reporting, both in descending µ.
    fn lanczos_round(
        &mut self,
        cfg: &SolverConfig,
        locked: &[(f64, Vec<Complex64>)],
        rng: &mut ChaCha8Rng,
        budget: usize,
    ) -> Result<LanczosRound, SolverError> {
        const CONFIRM_STEPS: usize = 12;
        let dim = 2 * self.n();
        let free = dim - locked.len();
        let mut block: Vec<Vec<Complex64>> = Vec::new();
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut inner = 0usize;
        let mut q = deflated_direction(dim, locked, rng);
        let mut certified_high = 0usize;
        let mut stall = 0usize;
        let mut best: Option<Vec<(f64, f64, Vec<f64>)>> = None;

        loop {
            block.push(q.clone());
            let j = block.len() - 1;
            let mut w = vec![Complex64::default(); dim];
            inner += self.apply_ar_inverse(&block[j], &mut w, cfg.tol_inner, cfg.max_inner)?;
            if j > 0 {
                axpy(Complex64::new(-beta[j - 1], 0.0), &block[j - 1], &mut w);
            }
            let a_j = cdot(&block[j], &w).re;
            alpha.push(a_j);
            axpy(Complex64::new(-a_j, 0.0), &block[j], &mut w);
            for _ in 0..2 {
                for (_, y) in locked {
                    let overlap = cdot(y, &w);
                    axpy(-overlap, y, &mut w);
                }
                for qi in &block {
                    let overlap = cdot(qi, &w);
                    axpy(-overlap, qi, &mut w);
                }
            }
            let b_j = nrm2(&w);
            // Breakdown is judged against the local recurrence scale, not a
            // running maximum: after the dominant modes converge, valid β
            // values can sit many orders below the largest Ritz value.
            let local_scale = if j > 0 { a_j.abs().max(beta[j - 1]) } else { a_j.abs() };
            let breakdown = b_j <= 1e-14 * local_scale;
            let exhausted = block.len() == free;

            // The recurrence defect is exactly b_j whether or not this step
            // is the last, so the residual bound always uses it.
            let ritz = extract_ritz(&alpha, &beta, b_j, alpha.len());
            let certify =
                |mu: f64, resid: f64| mu > 0.0 && resid <= cfg.tol_outer * mu;
            let certified = ritz.iter().filter(|(mu, r, _)| certify(*mu, *r)).count();
            if certified > certified_high {
                certified_high = certified;
                stall = 0;
                best = Some(ritz.clone());
            } else if certified_high > 0 {
                stall += 1;
            }

            if breakdown || exhausted || stall >= CONFIRM_STEPS || block.len() == budget {
                // Residual bounds of clustered pairs breathe while a later
                // copy emerges, so the final step may certify fewer pairs
                // than the round already achieved; assembly then rolls back
                // to the best step, whose weights span a block prefix.
                let source = match &best {
                    Some(b) if certified < certified_high => b,
                    _ => &ritz,
                };
                let mut out = LanczosRound {
                    certified: Vec::new(),
                    uncertified: Vec::new(),
                    steps: block.len(),
                    inner,
                    exhausted,
                };
                for (mu, resid, weights) in source {
                    if out.certified.len() + out.uncertified.len() > cfg.num_eigs {
                        break;
                    }
                    if *mu <= 0.0 {
                        continue;
                    }
                    let mut y = vec![Complex64::default(); dim];
                    for (qi, wi) in block.iter().zip(weights) {
                        axpy(Complex64::new(*wi, 0.0), qi, &mut y);
                    }
                    for (_, l) in locked {
                        let overlap = cdot(l, &y);
                        axpy(-overlap, l, &mut y);
                    }
                    let norm = nrm2(&y);
                    if norm < 0.5 {
                        continue;
                    }
                    for v in &mut y {
                        *v /= norm;
                    }
                    if certify(*mu, *resid) {
                        out.certified.push((*mu, y));
                    } else {
                        out.uncertified.push((*mu, y));
                    }
                }
                return Ok(out);
            }
            beta.push(b_j);
            q = w;
            let inv = 1.0 / b_j;
            for v in &mut q {
                *v *= inv;
            }
        }
    }
}

struct LanczosRound {
    certified: Vec<(f64, Vec<Complex64>)>,
    uncertified: Vec<(f64, Vec<Complex64>)>,
    steps: usize,
    inner: usize,
    exhausted: bool,
}

/// The µ values of the `count` best locked pairs, assuming `locked` is
/// sorted descending.
fn window_values(locked: &[(f64, Vec<Complex64>)], count: usize) -> Vec<f64> {
    locked.iter().take(count).map(|(mu, _)| *mu).collect()
}

fn random_direction(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = nrm2(&v);
    for x in &mut v {
        *x /= norm;
    }
    v
}

fn deflated_direction(
    dim: usize,
    locked: &[(f64, Vec<Complex64>)],
    rng: &mut ChaCha8Rng,
) -> Vec<Complex64> {
    loop {
        let mut v = random_direction(dim, rng);
        for _ in 0..2 {
            for (_, y) in locked {
                let overlap = cdot(y, &v);
                axpy(-overlap, y, &mut v);
            }
        }
        let norm = nrm2(&v);
        if norm > 1e-8 {
            for x in &mut v {
                *x /= norm;
            }
            return v;
        }
    }
}

/// The `count` largest Ritz values of the Lanczos tridiagonal, descending,
/// as (µ, absolute residual bound, basis weights). `tail` is the recurrence
/// norm β beyond the last basis vector, which scales every residual bound.
fn extract_ritz(alpha: &[f64], beta: &[f64], tail: f64, count: usize) -> Vec<(f64, f64, Vec<f64>)> {
    let m = alpha.len();
    // The recurrence is fed to QL in reverse: convergence order puts the
    // dominant values in the leading entries, while QL resolves the small
    // eigenvalues of a graded matrix best when the large entries sit in
    // the lower-right corner.
    let rd: Vec<f64> = alpha.iter().rev().copied().collect();
    let ro: Vec<f64> = beta[..m - 1].iter().rev().copied().collect();
    let (vals, vecs) = tridiag_eigen(&rd, &ro);
    let take = count.min(m);
    let mut out = Vec::with_capacity(take);
    for i in (m - take..m).rev() {
        let weights: Vec<f64> = (0..m).map(|r| vecs[(m - 1 - r) * m + i]).collect();
        let resid = (tail * weights[m - 1]).abs();
        out.push((vals[i], resid, weights));
    }
    out
}

fn lists_agree(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= 1e-10 * x.abs().max(y.abs()).max(f64::MIN_POSITIVE))
}

/// Eigen-decomposition of a symmetric tridiagonal matrix by the implicit
/// QL method with Wilkinson shifts. Returns eigenvalues ascending and a
/// row-major eigenvector matrix (column c is the c-th eigenvector).
fn tridiag_eigen(diag: &[f64], off: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = diag.len();
    assert_eq!(off.len() + 1, m);
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = vec![0.0f64; m * m];
    for i in 0..m {
        z[i * m + i] = 1.0;
    }

    for l in 0..m {
        let mut iter = 0;
        loop {
            let mut seg = l;
            while seg + 1 < m {
                let dd = d[seg].abs() + d[seg + 1].abs();
                if e[seg].abs() <= f64::EPSILON * dd {
                    break;
                }
                seg += 1;
            }
            if seg == l {
                break;
            }
            iter += 1;
            assert!(iter < 50, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[seg] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut degenerate = false;
            for i in (l..seg).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[seg] = 0.0;
                    degenerate = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..m {
                    f = z[k * m + i + 1];
                    z[k * m + i + 1] = s * z[k * m + i] + c * f;
                    z[k * m + i] = c * z[k * m + i] - s * f;
                }
            }
            if degenerate {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[seg] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let vals: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut sorted = vec![0.0f64; m * m];
    for (c, &src) in order.iter().enumerate() {
        for r in 0..m {
            sorted[r * m + c] = z[r * m + src];
        }
    }
    (vals, sorted)
}
