#![allow(clippy::needless_range_loop)]

pub mod adapt;
pub mod cli;
pub mod construct;
pub mod linalg;
pub mod model;
pub mod optimize;
pub mod random;
