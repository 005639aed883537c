//! Reference schemes the proposed joint optimization is compared with.

pub mod analog;
pub mod exhaustive;
pub mod qam16;

pub use analog::{solve_only_5g, solve_only_wifi};
pub use exhaustive::solve_exhaustive;
pub use qam16::{evaluate_digital, quantize_iva, solve_digital_16qam, DigitalSolution, QuantizerSpec};
