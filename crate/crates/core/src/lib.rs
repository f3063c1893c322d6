// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod complex;
pub mod error;
pub mod identities;
pub mod linalg;
pub mod partition;
pub mod precision;
pub mod probability;
pub mod quadrature;
pub mod series;
pub mod spectral;
pub mod transfer;
pub mod verify;
