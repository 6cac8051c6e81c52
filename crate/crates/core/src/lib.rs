//! Clock, dwell and post-selected average tunneling times for Gaussian wave
//! packets scattered by one-dimensional static barriers.

pub mod average;
pub mod clock;
pub mod error;
pub mod experiments;
pub mod model;
pub mod propagate;
pub mod quadrature;
pub mod resonance;
pub mod scatter;

pub use clock::{clock_times, ClockTimes};
pub use error::{Error, Result};
pub use model::{ClockWindow, DeltaBarrier, GaussianPacket, PhysicalParams, Potential, Segment};
pub use quadrature::QuadratureOptions;
pub use scatter::{amplitudes, ScatteringResult, TransferMatrix};
