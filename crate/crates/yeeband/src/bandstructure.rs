//! Band-structure orchestration: solve every k-sample, extract gaps, and
//! serialize CSV/JSON/SVG artifacts.
//!
//! Each sample is independent: the worker builds the eigen-angle basis, the
//! reduced SVD blocks, and an FFT plan for its own k, then runs the inverse
//! Lanczos solver. Results are gathered by sample index, so the serialized
//! output does not depend on scheduling order. A sample whose solve fails is
//! kept as a row with an explicit status instead of poisoning the run; the
//! run as a whole fails only when every sample does.
//!
//! Degenerate samples (Γ, and zone corners where a reduced-basis diagonal
//! vanishes) are nudged by 1e-6/‖b1‖ toward the next path corner and the
//! substitution is recorded in the metadata; the perturbation is far below
//! plotting resolution.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::eigensolver::{ReducedSystem, SolverConfig, SolverDiagnostics, SolverError};
use crate::fftmv::TransformPlan;
use crate::lattice::{build_reciprocal, CorrectedLattice, KSample, LatticeError};
use crate::material::{sample_b, Geometry, MaterialError};
use crate::spectral::{build_svd_blocks, build_svd_blocks_floored, eigen_angles, SpectralError, SvdBlocks};

#[derive(Debug, Error)]
pub enum BandError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("no k-samples to solve")]
    EmptyPath,
    #[error("every k-point failed; first failure: {first}")]
    AllPointsFailed { first: String },
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Outcome of one k-sample.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Failed(String),
}

impl RowStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, RowStatus::Ok)
    }

    /// Single-cell CSV token; commas and newlines are squashed.
    fn csv_token(&self) -> String {
        match self {
            RowStatus::Ok => "ok".to_string(),
            RowStatus::Failed(msg) => {
                let safe: String = msg
                    .chars()
                    .map(|c| if c == ',' || c == '\n' || c == '\r' { ';' } else { c })
                    .collect();
                format!("failed: {safe}")
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BandRow {
    pub index: usize,
    /// Cumulative arc length along the path.
    pub s: f64,
    /// The k actually solved (after any degeneracy shift).
    pub k: [f64; 3],
    pub label: Option<String>,
    pub status: RowStatus,
    /// Sorted mode frequencies ω = √λ/(2π); empty when the solve failed.
    pub omegas: Vec<f64>,
    pub diagnostics: Option<SolverDiagnostics>,
    pub seconds: f64,
}

/// A photonic band gap: band `below` tops out under band `below + 1`.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    /// 1-based index of the band under the gap.
    pub below: usize,
    /// Max over k of the band under the gap.
    pub lower: f64,
    /// Min over k of the band over the gap.
    pub upper: f64,
    pub width: f64,
    pub midgap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeEcho {
    pub class: crate::lattice::BravaisClass,
    pub lengths: [f64; 3],
    pub angles_deg: [f64; 3],
    pub grid: [usize; 3],
}

impl LatticeEcho {
    pub fn from_lattice(corr: &CorrectedLattice) -> Self {
        let spec = &corr.spec;
        LatticeEcho {
            class: spec.class,
            lengths: [spec.len_a1, spec.len_a2, spec.len_a3],
            angles_deg: [
                spec.theta_alpha_raw.to_degrees(),
                spec.theta_beta_raw.to_degrees(),
                spec.theta_gamma_raw.to_degrees(),
            ],
            grid: [spec.n1, spec.n2, spec.n3],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub lattice: LatticeEcho,
    pub geometry: Geometry,
    pub num_bands: usize,
    /// One notice per sample that had to be nudged off a degenerate point.
    pub shift_notices: Vec<String>,
    pub gaps: Vec<GapReport>,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BandResult {
    pub rows: Vec<BandRow>,
    pub metadata: RunMetadata,
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn unit3(v: [f64; 3]) -> [f64; 3] {
    let n = norm3(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Direction toward the neighboring sample ahead, falling back to the one
/// behind, then to `fallback` for a single isolated point.
fn shift_direction(samples: &[KSample], i: usize, fallback: [f64; 3]) -> [f64; 3] {
    let diff = |j: usize| -> [f64; 3] {
        [
            samples[j].k[0] - samples[i].k[0],
            samples[j].k[1] - samples[i].k[1],
            samples[j].k[2] - samples[i].k[2],
        ]
    };
    for j in i + 1..samples.len() {
        let d = diff(j);
        if norm3(d) > 1e-12 {
            return unit3(d);
        }
    }
    for j in (0..i).rev() {
        let d = diff(j);
        if norm3(d) > 1e-12 {
            return unit3(d);
        }
    }
    unit3(fallback)
}

fn build_blocks(
    corr: &CorrectedLattice,
    k: [f64; 3],
    shifted: bool,
) -> Result<(crate::spectral::SpectralBasis, SvdBlocks), SpectralError> {
    let basis = eigen_angles(corr, k);
    // The replacement point sits below the default degeneracy floor by
    // construction, so the retry only rejects exact zeros.
    let svd = if shifted {
        build_svd_blocks_floored(&basis, 0.0)?
    } else {
        build_svd_blocks(&basis)?
    };
    Ok((basis, svd))
}

fn solve_sample(
    corr: &CorrectedLattice,
    field: &crate::material::PermittivityField,
    cfg: &SolverConfig,
    samples: &[KSample],
    index: usize,
    eta: f64,
    fallback_dir: [f64; 3],
) -> (BandRow, Option<String>) {
    let clock = Instant::now();
    let sample = &samples[index];
    let mut k = sample.k;
    let mut notice = None;

    let mut blocks = build_blocks(corr, k, false);
    if let Err(SpectralError::DegenerateKPoint { .. }) = blocks {
        let dir = shift_direction(samples, index, fallback_dir);
        let shifted = [k[0] + eta * dir[0], k[1] + eta * dir[1], k[2] + eta * dir[2]];
        notice = Some(format!(
            "sample {index}{}: k = ({:.6}, {:.6}, {:.6}) is degenerate; solved at \
             k + {eta:.3e}·({:.4}, {:.4}, {:.4}) instead",
            sample.label.as_deref().map(|l| format!(" ({l})")).unwrap_or_default(),
            k[0], k[1], k[2], dir[0], dir[1], dir[2],
        ));
        k = shifted;
        blocks = build_blocks(corr, k, true);
    }

    let solved: Result<crate::eigensolver::EigResult, String> = match blocks {
        Ok((basis, svd)) => {
            let mut plan = TransformPlan::new(&basis);
            let mut sys = ReducedSystem::new(&mut plan, &svd, field);
            sys.inverse_lanczos(cfg, false).map_err(|e: SolverError| e.to_string())
        }
        Err(e) => Err(e.to_string()),
    };

    let row = match solved {
        Ok(result) => {
            let tau = 2.0 * std::f64::consts::PI;
            let omegas: Vec<f64> =
                result.eigenvalues.iter().map(|&l| l.max(0.0).sqrt() / tau).collect();
            BandRow {
                index,
                s: sample.s,
                k,
                label: sample.label.clone(),
                status: RowStatus::Ok,
                omegas,
                diagnostics: Some(result.diagnostics),
                seconds: clock.elapsed().as_secs_f64(),
            }
        }
        Err(message) => BandRow {
            index,
            s: sample.s,
            k,
            label: sample.label.clone(),
            status: RowStatus::Failed(message),
            omegas: Vec::new(),
            diagnostics: None,
            seconds: clock.elapsed().as_secs_f64(),
        },
    };
    (row, notice)
}

/// Solves every sample of a k-path and assembles the band structure.
///
/// `threads` = 0 uses the process-default pool, 1 runs sequentially, any
/// other value builds a dedicated pool of that size. Output is identical
/// for every setting because samples are gathered by index and each solve
/// is internally deterministic.
pub fn run_bands(
    corr: &CorrectedLattice,
    geometry: &Geometry,
    samples: &[KSample],
    cfg: &SolverConfig,
    threads: usize,
) -> Result<BandResult, BandError> {
    let clock = Instant::now();
    geometry.validate()?;
    if samples.is_empty() {
        return Err(BandError::EmptyPath);
    }
    let cell = build_reciprocal(corr)?;
    let field = sample_b(geometry, corr)?;
    let b1_norm = norm3(cell.b1);
    let eta = 1e-6 / b1_norm;
    let fallback_dir = cell.b1;

    let solve = |index: usize| solve_sample(corr, &field, cfg, samples, index, eta, fallback_dir);
    let pairs: Vec<(BandRow, Option<String>)> = if threads == 1 {
        (0..samples.len()).map(solve).collect()
    } else if threads == 0 {
        (0..samples.len()).into_par_iter().map(solve).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| BandError::Pool(e.to_string()))?;
        pool.install(|| (0..samples.len()).into_par_iter().map(solve).collect())
    };

    let mut rows = Vec::with_capacity(pairs.len());
    let mut shift_notices = Vec::new();
    for (row, notice) in pairs {
        rows.push(row);
        shift_notices.extend(notice);
    }

    if rows.iter().all(|r| !r.status.is_ok()) {
        let first = rows
            .iter()
            .find_map(|r| match &r.status {
                RowStatus::Failed(m) => Some(m.clone()),
                RowStatus::Ok => None,
            })
            .unwrap_or_default();
        return Err(BandError::AllPointsFailed { first });
    }

    let gaps = extract_gaps(&rows);
    let metadata = RunMetadata {
        lattice: LatticeEcho::from_lattice(corr),
        geometry: geometry.clone(),
        num_bands: cfg.num_eigs,
        shift_notices,
        gaps,
        total_seconds: clock.elapsed().as_secs_f64(),
    };
    Ok(BandResult { rows, metadata })
}

/// Reruns the same problem with every shape's interior permittivity set to
/// each value in `eps_values`, in order.
pub fn sweep_permittivity(
    corr: &CorrectedLattice,
    geometry: &Geometry,
    samples: &[KSample],
    cfg: &SolverConfig,
    threads: usize,
    eps_values: &[f64],
) -> Result<Vec<BandResult>, BandError> {
    let mut results = Vec::with_capacity(eps_values.len());
    for &eps in eps_values {
        let mut geom = geometry.clone();
        for shape in &mut geom.shapes {
            *shape.eps_in_mut() = eps;
        }
        results.push(run_bands(corr, &geom, samples, cfg, threads)?);
    }
    Ok(results)
}

/// Gaps by the min/max convention: a gap sits between bands m and m+1 when
/// the minimum of band m+1 over all solved samples exceeds the maximum of
/// band m.
pub fn extract_gaps(rows: &[BandRow]) -> Vec<GapReport> {
    let solved: Vec<&BandRow> = rows.iter().filter(|r| r.status.is_ok()).collect();
    let num_bands = solved.iter().map(|r| r.omegas.len()).min().unwrap_or(0);
    let mut gaps = Vec::new();
    for m in 1..num_bands {
        let lower = solved.iter().map(|r| r.omegas[m - 1]).fold(f64::MIN, f64::max);
        let upper = solved.iter().map(|r| r.omegas[m]).fold(f64::MAX, f64::min);
        if upper > lower {
            gaps.push(GapReport {
                below: m,
                lower,
                upper,
                width: upper - lower,
                midgap: 0.5 * (lower + upper),
            });
        }
    }
    gaps
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV rendering: `index,s,kx,ky,kz,status,omega_1..omega_m` with floats at
/// 17 significant digits. Failed rows leave their omega cells empty.
pub fn csv_string(result: &BandResult) -> String {
    let m = result.metadata.num_bands;
    let mut out = String::from("index,s,kx,ky,kz,status");
    for b in 1..=m {
        out.push_str(&format!(",omega_{b}"));
    }
    out.push('\n');
    for row in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            row.index,
            fmt17(row.s),
            fmt17(row.k[0]),
            fmt17(row.k[1]),
            fmt17(row.k[2]),
            row.status.csv_token(),
        ));
        for b in 0..m {
            out.push(',');
            if let Some(&w) = row.omegas.get(b) {
                out.push_str(&fmt17(w));
            }
        }
        out.push('\n');
    }
    out
}

pub fn json_string(result: &BandResult) -> String {
    let mut s = serde_json::to_string_pretty(result).expect("band result serializes");
    s.push('\n');
    s
}

/// Writes through a temp file in the target directory, then renames.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), BandError> {
    let io_err = |source: std::io::Error| BandError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let stem = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let tmp = dir.join(format!(".{stem}.{}.tmp", std::process::id()));
    fs::write(&tmp, bytes).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(e)
    })
}

pub fn write_csv(result: &BandResult, path: &Path) -> Result<(), BandError> {
    atomic_write(path, csv_string(result).as_bytes())
}

pub fn write_json(result: &BandResult, path: &Path) -> Result<(), BandError> {
    atomic_write(path, json_string(result).as_bytes())
}

const SVG_COLORS: [&str; 8] = [
    "#4165c0", "#d5622d", "#4f9d4e", "#c34b4c", "#8a6bb8", "#84584e", "#c883c0", "#6f7275",
];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Polyline band plot: arc length on x, ω on y, corner labels as ticks.
pub fn svg_string(result: &BandResult) -> String {
    let (w, h) = (900.0, 600.0);
    let (left, right, top, bottom) = (70.0, 30.0, 30.0, 50.0);
    let plot_w = w - left - right;
    let plot_h = h - top - bottom;

    let solved: Vec<&BandRow> = result.rows.iter().filter(|r| r.status.is_ok()).collect();
    let s_max = result.rows.iter().map(|r| r.s).fold(0.0, f64::max).max(1e-30);
    let w_max = solved
        .iter()
        .flat_map(|r| r.omegas.iter().copied())
        .fold(0.0, f64::max)
        .max(1e-30)
        * 1.05;
    let x = |s: f64| left + plot_w * s / s_max;
    let y = |omega: f64| top + plot_h * (1.0 - omega / w_max);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));

    for t in 0..=5 {
        let omega = w_max * t as f64 / 5.0;
        let yy = y(omega);
        svg.push_str(&format!(
            "<line x1=\"{left}\" y1=\"{yy:.2}\" x2=\"{:.2}\" y2=\"{yy:.2}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\" \
             font-family=\"sans-serif\">{omega:.3}</text>\n",
            left + plot_w,
            left - 6.0,
            yy + 4.0,
        ));
    }

    let mut seen_ticks: Vec<(f64, String)> = Vec::new();
    for row in &result.rows {
        if let Some(label) = &row.label {
            match seen_ticks.last_mut() {
                Some((s, l)) if (*s - row.s).abs() < 1e-12 => {
                    if !l.split('|').any(|part| part == label) {
                        l.push('|');
                        l.push_str(label);
                    }
                }
                _ => seen_ticks.push((row.s, label.clone())),
            }
        }
    }
    for (s, label) in &seen_ticks {
        let xx = x(*s);
        svg.push_str(&format!(
            "<line x1=\"{xx:.2}\" y1=\"{top}\" x2=\"{xx:.2}\" y2=\"{:.2}\" \
             stroke=\"#bbbbbb\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n\
             <text x=\"{xx:.2}\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\" \
             font-family=\"sans-serif\">{}</text>\n",
            top + plot_h,
            top + plot_h + 18.0,
            xml_escape(label),
        ));
    }

    let num_bands = solved.iter().map(|r| r.omegas.len()).min().unwrap_or(0);
    for b in 0..num_bands {
        let color = SVG_COLORS[b % SVG_COLORS.len()];
        let points: Vec<String> = solved
            .iter()
            .map(|r| format!("{:.2},{:.2}", x(r.s), y(r.omegas[b])))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" "),
        ));
    }

    svg.push_str(&format!(
        "<rect x=\"{left}\" y=\"{top}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n\
         <text x=\"18\" y=\"{:.2}\" font-size=\"13\" font-family=\"sans-serif\" \
         transform=\"rotate(-90 18 {:.2})\" text-anchor=\"middle\">frequency ωa/2πc</text>\n\
         </svg>\n",
        top + plot_h / 2.0,
        top + plot_h / 2.0,
    ));
    svg
}

pub fn write_svg(result: &BandResult, path: &Path) -> Result<(), BandError> {
    atomic_write(path, svg_string(result).as_bytes())
}
