//! Calderón–Zygmund decomposition for finite atomic measures of polynomial
//! growth `μ(B(x, r)) ≤ C0 rⁿ`, with truncated singular integrals and weak
//! (1,1) experiments built on top.
//!
//! The pipeline for a density `f` and level `λ` is
//! [`czdecomp::select_cubes`] → [`czdecomp::attach_r`] →
//! [`czdecomp::build_phi`] → [`czdecomp::decompose`], and every output can be
//! re-checked independently with [`verify::verify_decomposition`].
//!
//! ```
//! use czlab::{decompose, verify_decomposition, AtomicMeasure, CzOptions, DensityVector, GrowthProfile};
//!
//! let mu = AtomicMeasure::from_points(
//!     1,
//!     &[(vec![0.0], 1.0), (vec![1.0], 2.0), (vec![3.0], 4.0)],
//!     GrowthProfile::new(1.0, 8.0, 0.5)?,
//! )?;
//! let f = DensityVector::from_real(&[10.0, 0.0, 0.0]);
//! let dec = decompose(&mu, &f, 8.0, &CzOptions::default())?;
//! assert_eq!(dec.parts.len(), 1);
//! assert!(verify_decomposition(&mu, &f, 8.0, &dec)?.all_passed());
//! # Ok::<(), czlab::Error>(())
//! ```

pub mod covering;
pub mod czdecomp;
pub mod doubling;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod measure;
pub mod operators;
pub mod scalar;
pub mod verify;

pub use covering::{besicovich_select, AnnulusConfig, Candidate, CandidateFamily, Selection};
pub use czdecomp::{decompose, CzDecomposition, CzOptions, CzPart};
pub use doubling::{DerivedConstants, DoublingParams};
pub use error::{Error, Result};
pub use geometry::Cube;
pub use measure::{verify_growth, AtomicMeasure, DensityVector, GrowthProfile, GrowthReport};
pub use scalar::Scalar;
pub use verify::{verify_decomposition, InvariantReport};
pub use operators::{kernel_eval, truncated_transform, verify_kernel_conditions, Kernel, KernelKind, WeakSweep};
pub use harness::{gen_density, gen_measure, run_weak11_experiment, DensitySpec, ExperimentConfig, ExperimentReport, GeneratorKind, GeneratorSpec};
