//! Conformal welding, Grunsky coefficients and the dispersionless Toda
//! hierarchy on pairs of univalent maps, computed with truncated Laurent series.

// `!(x < tol)` is how NaN fails a check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coords;
pub mod error;
pub mod family;
pub mod grunsky;
pub mod pair;
pub mod series;
pub mod tau;
pub mod toda;
pub mod welding;

pub use coords::{CauchyData, Chart, CoordinateVector, GeneratingPotentials};
pub use error::{Error, Result};
pub use family::{chart_invert, ChartFamily, FamilyPoint, InvertOptions};
pub use grunsky::{FaberSet, GrunskyMatrix};
pub use pair::{MobiusTriple, Role, UnivalentPair};
pub use series::{CircleGrid, Expansion, Part, TruncatedSeries, C64};
pub use welding::{CircleHomeo, HomeoSpec, MobiusParams, WeldingSolution};
