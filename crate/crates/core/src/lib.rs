pub mod error;
pub mod field;
pub mod phi;
pub mod problems;
pub mod rk;
pub mod scheme;
pub mod study;
pub mod verify;
