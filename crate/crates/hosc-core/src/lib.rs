// Temporary module list while the crate is being built up.
pub mod activations;
pub mod numerics;
