//! Design and simulation toolkit for a millimetre-scale flapping-wing
//! actuator: magnet-and-coil drive on a torsion spring, a passively pitching
//! wing on a polymer flexure, and the mass and power bookkeeping around it.

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuator;
pub mod aero;
pub mod budget;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod materials;
pub mod optimize;
pub mod spring;
pub mod units;
pub mod wing;

pub use error::{DesignError, DynamicsError, UnitError};
pub use units::{Dimension, DisplayUnit, Quantity};
