//! Exact experiments with characterized and statistically characterized
//! subgroups of the circle group `𝕋 = ℝ/ℤ`.
//!
//! Elements are mixed-radix digit expansions over an arithmetic sequence
//! ([`radix`]); arithmetic-type sequences come from per-level selection
//! schedules ([`seqgen`]); [`density`] profiles natural densities at finite
//! truncations and implements the lifting function; [`classify`] tests the
//! invariance properties of sequences; [`membership`] profiles the sets
//! `{j : ‖e_j x‖ ≥ ε}` and builds witness elements.
//!
//! All arithmetic is exact. Nothing here claims a limit: densities are
//! reported as samples along a ladder of truncations.

pub mod classify;
pub mod density;
pub mod error;
pub mod membership;
pub mod presets;
pub mod radix;
pub mod rational;
pub mod seqgen;

pub use density::{
    count_density, density_profile, geometric_ladder, lift, translate, BClass, DensityProfile, Extent,
    IndexMap, IndexSet, ZeroDensityCertificate,
};
pub use error::{Error, Result};
pub use radix::{DigitExpansion, DigitRecord, RatioGrowth, RatioSequence};
pub use rational::{frac, norm_int, parse_rational, rat, Rational};
pub use seqgen::{EnumeratedSequence, SelectionSchedule, Thm39Variant};
