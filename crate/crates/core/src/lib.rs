//! Single-electron transistor driven by a measurement-and-feedback demon:
//! coarse-grained rates, stroboscopic full counting statistics, entropy
//! bookkeeping, the Zeno limit and an exact free-fermion reference solver.

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod feedback;
pub mod kernel;
pub mod mat2;
pub mod model;
pub mod quadrature;
pub mod reference;
pub mod thermo;
pub mod zeno;

pub use error::{DemonError, Result};
pub use kernel::{CountingFields, TransitionRates};
pub use model::{
    DotSpec, FeedbackProtocol, OccupationVector, Outcome, PerReservoir, Reservoir, ReservoirSpec, SystemConfig,
};
pub use quadrature::QuadSettings;
