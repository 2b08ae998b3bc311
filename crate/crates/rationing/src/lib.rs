//! Stock-rationing queue with two demand classes.
//!
//! A warehouse holds up to N units, replenished at rate λ. Class-1 demand
//! (rate μ₁) is always served while stock lasts; Class-2 demand (rate μ₂) is
//! served at stock level i ≤ K only when the policy says d_i = 1, and always
//! above K. Every policy induces a birth-death chain whose long-run profit is
//! linear in the low-stock penalty P.
//!
//! The crate computes that profit in closed form, solves the Poisson
//! equation for the performance potential, derives realization factors and
//! penalty roots, and uses them to find optimal dynamic and static policies.
//! Exhaustive enumeration and simulation are provided as independent oracles.

#![forbid(unsafe_code)]

pub mod chain;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod poisson;
pub mod sensitivity;
pub mod sim;
pub mod staticpol;

pub use error::{Error, Result};
pub use model::{Policy, SystemParams};
