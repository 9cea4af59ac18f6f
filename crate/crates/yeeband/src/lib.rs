//! Frequency-domain Maxwell eigensolver for 3-D photonic crystals.
//!
//! Computes band structures ω(k) of periodic dielectric media on any of the
//! 14 Bravais lattices. The electric-field generalized eigenvalue problem
//!
//! ```text
//! (∇×)ᴴ (∇×) E = ω² ε E,      E(x + aℓ) = e^{ı2πk·aℓ} E(x)
//! ```
//!
//! is discretized on a staggered (Yee) grid whose mesh is aligned with the
//! lattice by snapping the cell angles to grid-commensurate values. The
//! aligned curl operator factors into circulant-like shift operators with a
//! closed-form eigen-decomposition, giving an explicit singular value
//! decomposition of the curl. Projecting onto the row space removes the
//! null space exactly, and the reduced problem is solved matrix-free with
//! inverse Lanczos iteration; every operator application is a handful of
//! mixed-radix FFTs and diagonal scalings.
//!
//! Module map:
//! - [`lattice`]: lattice validation, angle snapping, reciprocal cell,
//!   high-symmetry corner tables and k-paths.
//! - [`yee`]: the discrete curl and its quasi-periodic corner blocks.
//! - [`spectral`]: closed-form eigenbasis of the shift operators and the
//!   diagonal blocks of the curl's SVD.
//! - [`fftmv`]: FFT application of the eigenbasis and row-space maps.
//! - [`material`]: dielectric geometry sampling on edge midpoints.
//! - [`eigensolver`]: inverse Lanczos with CG inner solves on the reduced
//!   (null-space-free) problem.
//! - [`oracle`]: dense reference assembly and dense eigensolvers used by the
//!   test suite; no external linear-algebra backend.
//! - [`bandstructure`]: sweeps over k-paths, gap analysis, CSV/JSON/SVG
//!   output.

pub mod bandstructure;
pub mod eigensolver;
pub mod fftmv;
pub mod material;
pub mod oracle;
pub mod lattice;
pub mod linalg;
pub mod spectral;
pub mod yee;

pub use num_complex::Complex64;
