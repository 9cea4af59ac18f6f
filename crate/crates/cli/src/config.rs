//! JSON run configuration: schema, defaults, and semantic validation.
//!
//! A run file holds up to six blocks. `lattice` and `kpath` are required;
//! `geometry` defaults to vacuum, `solver` to the library defaults, and
//! `output` to writing nothing. Unknown fields anywhere are rejected with
//! the offending name, and every semantic failure names the field path it
//! belongs to, so a config error is always attributable. Angles are given
//! in degrees here and converted to radians at the lattice boundary.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use yeeband::eigensolver::{SolverConfig, SolverError};
use yeeband::lattice::{
    build_reciprocal, kpath_samples, BravaisClass, CorrectedLattice, KPath, KSample, LatticeError,
    LatticeSpec,
};
use yeeband::material::{Geometry, MaterialError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("lattice: {0}")]
    Lattice(#[from] LatticeError),
    #[error("{0}")]
    Material(#[from] MaterialError),
    #[error("{0}")]
    Solver(#[from] SolverError),
    #[error("kpath: exactly one of `labels` and `points` must be given")]
    PathChoice,
    #[error("kpath.points: a path needs at least 2 points")]
    ShortPointList,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeBlock,
    #[serde(default = "Geometry::vacuum")]
    pub geometry: Geometry,
    pub kpath: KPathBlock,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputBlock,
    /// 0 = one worker per core, 1 = sequential (the determinism contract).
    #[serde(default)]
    pub threads: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeBlock {
    pub class: BravaisClass,
    pub lengths: [f64; 3],
    pub angles_deg: [f64; 3],
    pub grid: [usize; 3],
}

/// Either a corner-label walk like `"Γ→X→M→Γ|R→X"` or explicit points in
/// fractional reciprocal coordinates (units of b1, b2, b3).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KPathBlock {
    #[serde(default)]
    pub labels: Option<String>,
    #[serde(default)]
    pub points: Option<Vec<[f64; 3]>>,
    #[serde(default = "default_samples")]
    pub samples_per_segment: usize,
}

fn default_samples() -> usize {
    10
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

/// A fully validated run: lattice built, path sampled, nothing left to
/// fail except the solves themselves and output I/O.
pub struct ResolvedRun {
    pub corr: CorrectedLattice,
    pub geometry: Geometry,
    pub samples: Vec<KSample>,
    pub solver: SolverConfig,
    pub output: OutputBlock,
    pub threads: usize,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn resolve(self) -> Result<ResolvedRun, ConfigError> {
        self.solver.validate()?;
        self.geometry.validate()?;
        let deg = std::f64::consts::PI / 180.0;
        let angles = [
            self.lattice.angles_deg[0] * deg,
            self.lattice.angles_deg[1] * deg,
            self.lattice.angles_deg[2] * deg,
        ];
        let spec = LatticeSpec::new(
            self.lattice.class,
            self.lattice.lengths,
            angles,
            self.lattice.grid,
        )?;
        let corr = CorrectedLattice::from_spec(spec)?;
        let mut cell = build_reciprocal(&corr)?;

        let sps = self.kpath.samples_per_segment;
        let path = match (&self.kpath.labels, &self.kpath.points) {
            (Some(labels), None) => KPath::parse(labels, sps)?,
            (None, Some(points)) => {
                if points.len() < 2 {
                    return Err(ConfigError::ShortPointList);
                }
                let mut names = Vec::with_capacity(points.len());
                for (i, f) in points.iter().enumerate() {
                    let v = [
                        f[0] * cell.b1[0] + f[1] * cell.b2[0] + f[2] * cell.b3[0],
                        f[0] * cell.b1[1] + f[1] * cell.b2[1] + f[2] * cell.b3[1],
                        f[0] * cell.b1[2] + f[1] * cell.b2[2] + f[2] * cell.b3[2],
                    ];
                    let name = format!("k{i}");
                    cell.corners.push((name.clone(), v));
                    names.push(name);
                }
                KPath::parse(&names.join("→"), sps)?
            }
            _ => return Err(ConfigError::PathChoice),
        };
        let samples = kpath_samples(&path, &cell)?;

        Ok(ResolvedRun {
            corr,
            geometry: self.geometry,
            samples,
            solver: self.solver,
            output: self.output,
            threads: self.threads,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> serde_json::Value {
        serde_json::json!({
            "lattice": {
                "class": "cubic",
                "lengths": [1.0, 1.0, 1.0],
                "angles_deg": [90.0, 90.0, 90.0],
                "grid": [4, 4, 4]
            },
            "kpath": { "labels": "Γ→X" }
        })
    }

    fn resolve(value: serde_json::Value) -> Result<ResolvedRun, ConfigError> {
        let cfg: RunConfig = serde_json::from_value(value).map_err(ConfigError::Parse)?;
        cfg.resolve()
    }

    #[test]
    fn minimal_config_resolves_with_defaults() {
        let run = resolve(minimal()).unwrap();
        assert_eq!(run.solver.num_eigs, 10);
        assert_eq!(run.samples.len(), 11);
        assert!(run.geometry.shapes.is_empty());
        assert_eq!(run.threads, 0);
        assert!(run.output.csv.is_none());
    }

    #[test]
    fn unknown_fields_are_named() {
        let mut v = minimal();
        v["lattice"]["grd"] = serde_json::json!([4, 4, 4]);
        let err = resolve(v).unwrap_err().to_string();
        assert!(err.contains("grd"), "{err}");
    }

    #[test]
    fn missing_lattice_block_is_named() {
        let mut v = minimal();
        v.as_object_mut().unwrap().remove("lattice");
        let err = resolve(v).unwrap_err().to_string();
        assert!(err.contains("lattice"), "{err}");
    }

    #[test]
    fn labels_and_points_together_are_rejected() {
        let mut v = minimal();
        v["kpath"]["points"] = serde_json::json!([[0.0, 0.0, 0.0], [0.5, 0.0, 0.0]]);
        let err = resolve(v).unwrap_err().to_string();
        assert!(err.contains("kpath"), "{err}");
    }

    #[test]
    fn explicit_points_walk_the_reciprocal_basis() {
        let mut v = minimal();
        v["kpath"] = serde_json::json!({
            "points": [[0.0, 0.0, 0.0], [0.5, 0.0, 0.0]],
            "samples_per_segment": 4
        });
        let run = resolve(v).unwrap();
        assert_eq!(run.samples.len(), 5);
        let last = run.samples.last().unwrap();
        // Fractional (0.5, 0, 0) on the simple cubic cell is the X corner,
        // which in storage units (corner / 2π) is 0.5/a along x.
        assert!((last.k[0] - 0.5).abs() < 1e-12);
        assert!(last.k[1].abs() < 1e-12 && last.k[2].abs() < 1e-12);
    }

    #[test]
    fn degrees_convert_to_radians() {
        let mut v = minimal();
        v["lattice"]["class"] = serde_json::json!("hexagonal");
        v["lattice"]["angles_deg"] = serde_json::json!([90.0, 90.0, 120.0]);
        v["kpath"]["labels"] = serde_json::json!("Γ→M");
        let run = resolve(v).unwrap();
        let (a1, a2) = (run.corr.a1, run.corr.a2);
        let dot: f64 = (0..3).map(|r| a1[r] * a2[r]).sum();
        assert!((dot + 0.5).abs() < 1e-12, "a1·a2 = {dot}");
    }

    #[test]
    fn bad_solver_field_is_named() {
        let mut v = minimal();
        v["solver"] = serde_json::json!({ "num_eigs": 0 });
        let err = resolve(v).unwrap_err().to_string();
        assert!(err.contains("num_eigs"), "{err}");
    }
}
