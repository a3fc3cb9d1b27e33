//! Concrete split problems.

pub mod brusselator;
pub mod kdv;
pub mod toy;

pub use brusselator::{brusselator_initial, Brusselator, BrusselatorParams};
pub use kdv::{kdv_initial, kdv_soliton_exact, KdV, KdVConfig, KdVInitial};
pub use toy::ToyOde;
