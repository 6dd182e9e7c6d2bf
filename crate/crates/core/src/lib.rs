//! Multifractal analysis of dominated planar self-affine systems.
//!
//! The symbolic side (pressure, `L^q`-spectrum, Legendre spectrum, Lyapunov
//! dimensions) is computed exactly at finite word depth; the geometric side
//! (separation, local dimensions, coarse spectra) is checked on samples.

// negated comparisons are how NaN inputs get rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cones;
pub mod empirical;
pub mod error;
pub mod geometry;
pub mod matrix2;
pub mod numeric;
pub mod pressure;
pub mod spectrum;
pub mod symbolic;
pub mod systems;

use serde::{Deserialize, Serialize};

pub use cones::{DominationReport, FurstenbergCover, Multicone};
pub use error::{Error, Result};
pub use geometry::{AffineIFS, Enclosure, SeparationReport};
pub use matrix2::{AngleInterval, Mat2, Vec2};
pub use pressure::{EquilibriumFunctionals, PotentialKind, PotentialSpec, PressureEstimate};
pub use spectrum::{Regime, SpectrumPoint, SpectrumTable};
pub use symbolic::{Bernoulli, CylinderWeightModel, LevelMeasure, Word};

/// Three-valued outcome of a check that can fail to decide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
