//! Computational Fourier analysis on bounded Vilenkin groups.
//!
//! The group G_m is the product of cyclic groups Z_{m_k} with the product
//! topology and normalized Haar measure; its characters are the Vilenkin
//! functions psi_n.  This crate provides exact finite models at resolution
//! N (cylinder functions on M_N cells), the character transform with a
//! separable fast path, Dirichlet kernels by three cross-checked routes,
//! martingale Hardy-space machinery (conditional expectations, p-atoms,
//! the sharpness counterexample construction), restricted and weighted
//! maximal operators with operator-norm probes, and the verification /
//! experiment harness behind the `vilenkin-lab` CLI.
//!
//! The `parallel` feature (on by default) runs transforms, kernel scans,
//! and probe trials data-parallel; `*_seq` routes are always available and
//! are compared against the parallel routes by the benchmark suite.

pub mod error;
pub mod group;
pub mod hardy;
pub mod harness;
pub mod kernels;
pub mod maximal;
pub mod report;
pub mod system;
pub mod transform;

pub use error::{Error, Result};
pub use group::{expand, DigitExpansion, GroupPoint, Interval, Radix, RadixSequence};
pub use transform::{forward, inverse, partial_sum, CylinderFunction, Spectrum};
