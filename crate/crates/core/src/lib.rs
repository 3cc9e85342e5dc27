//! Core algorithms for the `cuebias` toolkit.
//!
//! The crate generates datasets that decouple shape cues from texture cues in
//! semantic segmentation imagery, and scores model predictions on them:
//!
//! * [`stylize`] — Voronoi-cell style transfer: the image plane is split into
//!   random Voronoi cells and a subset of cells is re-textured by matching
//!   per-channel pixel statistics to a style image, leaving labels untouched.
//! * [`eed`] — edge-enhancing anisotropic diffusion, which removes texture
//!   while preserving (and sharpening) region contours.
//! * [`shuffle`] — Voronoi patch shuffling, which destroys global shape while
//!   keeping local texture statistics intact.
//! * [`corrupt`] — a suite of parametric common corruptions (contrast
//!   reduction, uniform noise, low-pass / high-pass filtering, phase noise).
//! * [`metrics`] — confusion-matrix segmentation metrics plus the cue-decision
//!   shape bias score, a multi-corruption robustness score, and relative
//!   accuracy.
//!
//! Everything is deterministic: all randomness flows through [`seed::SeedStream`],
//! and batch runs derive one independent stream per (image, purpose) pair so
//! results are identical regardless of worker count.

pub mod corrupt;
pub mod eed;
pub mod error;
pub mod image;
pub mod manifest;
pub mod metrics;
pub mod pipeline;
pub mod seed;
pub mod shuffle;
pub mod stylize;
pub mod voronoi;

pub use crate::error::{Error, Result};
pub use crate::image::{GaussianSpec, ImageBuffer, LabelMask};
pub use crate::seed::{derive_seed, SeedStream};
