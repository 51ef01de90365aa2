//! The guide's chapters as module docs, so `cargo test` runs every snippet.

#![doc = include_str!("../../../book/src/introduction.md")]

#[doc = include_str!("../../../book/src/profiles.md")]
pub mod profiles {}
#[doc = include_str!("../../../book/src/solver.md")]
pub mod solver {}
#[doc = include_str!("../../../book/src/functionals.md")]
pub mod functionals {}
#[doc = include_str!("../../../book/src/multipliers.md")]
pub mod multipliers {}
#[doc = include_str!("../../../book/src/rates.md")]
pub mod rates {}
#[doc = include_str!("../../../book/src/scenarios.md")]
pub mod scenarios {}
