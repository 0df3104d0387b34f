//! Linear Taylor attention kernels with a brute-force oracle, analytic
//! operation counting for softmax vs. Taylor attention, and a deterministic
//! cycle-level model of a chunked systolic-array accelerator comparing the
//! G-stationary and down-forward accumulation dataflows.
//!
//! Modules:
//! - [`linalg`]: dense row-major matrix/vector primitives
//! - [`attention`]: softmax, mean-centered softmax, and Taylor attention kernels
//! - [`opcount`]: closed-form operation counters and the model comparison table
//! - [`archmodel`]: accelerator configuration and energy table
//! - [`simulator`]: systolic timing, intra-layer pipeline schedule, energy accounting
//!
//! Built with the `parallel` feature (default), the dense kernels fan rows and
//! heads out over rayon; without it everything runs on the calling thread.
//! Both paths produce bit-identical results.

pub mod archmodel;
pub mod attention;
pub mod linalg;
pub mod opcount;
pub mod simulator;
