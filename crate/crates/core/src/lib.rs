//! Covering-based rough set approximations through boolean characteristic
//! matrices, with incremental updates when coverings are added or removed,
//! reduct enumeration for covering decision systems, and a benchmark harness.

pub mod approximation;
pub mod bench;
pub mod bitmatrix;
pub mod characteristic;
pub mod incremental;
pub mod model;
pub mod reduct;

#[cfg(test)]
mod testutil;

pub use approximation::{ApproxKind, ApproxPair, SubsetVector};
pub use bitmatrix::{BoolMatrix, MatrixError};
pub use characteristic::{CharKind, CharMatrix};
pub use model::{Covering, CoveringSystem, DecisionSystem, Universe};
