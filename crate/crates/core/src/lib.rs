//! Two-mode (normal/drift) reactive trajectory generation for multirotor
//! vehicles in strong wind, with the flight controller, wind field and
//! multi-vehicle simulator needed to exercise it.

// Negated comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod driftframe;
pub mod dynamics;
pub mod geom;
pub mod sim;
pub mod windfield;
pub mod trajgen;
