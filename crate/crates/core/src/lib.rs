pub mod exponent;
pub mod laws;
pub mod processes;
pub mod verify;
pub mod cli;
