//! Simulation and optimization of a multiuser downlink assisted by a
//! reconfigurable intelligent surface (RIS) whose reflection response may be
//! switched several times within one channel coherence block.
//!
//! The crate is organized bottom-up:
//!
//! * [`channel`] draws geometry and block-fading channels.
//! * [`reflection`] holds the discrete phase alphabet, reflection schedules and
//!   the overall per-slot channel gain.
//! * [`power`] solves slot water-filling and evaluates SINR and rates.
//! * [`phase`] maximizes a user's gain over the discrete phase grid by
//!   block-coordinate ascent, with an exhaustive reference solver.
//! * [`schedulers`] runs the end-to-end schemes (optimized slowly-varying RIS,
//!   randomized rapidly-varying RIS, their proportional-fair variants and a
//!   no-RIS baseline).
//! * [`asymptotics`] gives the extreme-value predictions for the randomized
//!   scheme with homogeneous users.
//! * [`harness`] orchestrates Monte Carlo runs and sweeps and writes CSV.

pub mod asymptotics;
pub mod channel;
pub mod config;
mod error;
pub mod harness;
pub mod phase;
pub mod power;
pub mod quadrature;
pub mod reflection;
pub mod rng;
pub mod schedulers;
pub mod stats;
pub mod validation;

pub use num_complex::Complex64;

pub use crate::asymptotics::{GumbelConstants, HomogeneousModel};
pub use crate::channel::{ChannelParams, ChannelRealization, Geometry, Point, SpatialSignatureParams};
pub use crate::config::{Scheme, SystemConfig};
pub use crate::error::{Error, Result};
pub use crate::harness::{RunRecord, SweepAxis, SweepRow};
pub use crate::phase::{OptimizerOptions, PhaseIterate, PhaseStart, QuadraticFormTerms};
pub use crate::power::{SlotAllocation, WaterfillResult};
pub use crate::reflection::{PhaseAlphabet, ReflectionSchedule};
pub use crate::schedulers::{EwmaState, OverheadParams, SchemeResult};
