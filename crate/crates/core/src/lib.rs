//! Atom–photon bound states and photon-mediated atom–atom interactions in a
//! two-photon driven coupled-cavity array.
//!
//! The closed-form layers ([`model`], [`boundstate`], [`interaction`]) are
//! generic over [`scalar::Real`]; the numerical engines ([`dynamics`],
//! [`fockcheck`]) work in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod boundstate;
mod cmat;
pub mod dynamics;
pub mod error;
pub mod fockcheck;
pub mod interaction;
pub mod krylov;
pub mod model;
pub mod ode;
pub mod scalar;
pub mod sparse;

pub use error::{Error, Result};
pub use scalar::Real;

pub type SystemParams64 = model::SystemParams<f64>;
pub type SystemParams32 = model::SystemParams<f32>;
pub type SqueezedFrame64 = model::SqueezedFrame<f64>;
pub type SqueezedFrame32 = model::SqueezedFrame<f32>;
pub type BoundState64 = boundstate::BoundState<f64>;
pub type BoundState32 = boundstate::BoundState<f32>;
pub type EffectiveCoupling64 = interaction::EffectiveCoupling<f64>;
pub type EffectiveCoupling32 = interaction::EffectiveCoupling<f32>;
pub type CouplingTable64 = interaction::CouplingTable<f64>;
