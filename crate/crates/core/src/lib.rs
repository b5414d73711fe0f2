//! Stability certificates for discrete-time switched linear systems
//! `x(t+1) = A_{σ(t)} x(t)` whose switching obeys given minimum and maximum
//! dwell times, built from commutators between stable and unstable
//! subsystem matrices. Certificates can be cross-checked by simulation and
//! by exhaustive enumeration of short admissible products.

pub mod builtin;
pub mod certifier;
pub mod config;
pub mod error;
pub mod family;
pub mod linalg;
pub mod simulator;
pub mod switching;

pub use certifier::{certify, Certificate, Verdict};
pub use config::Config;
pub use error::{Error, Result};
pub use family::{classify, DerivedParams, IndexPartition, PairTable, SwitchedFamily};
pub use linalg::Matrix;
pub use switching::{Segment, SignalClass, SwitchingSignal};
