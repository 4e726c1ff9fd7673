//! Hierarchical footprint memory.
//!
//! Inputs are activation vectors. A [`memory::Cell`] averages similar inputs
//! into footprints, a [`cluster::Cluster`] stacks cells into a tree of
//! increasingly specific thresholds, a [`metacluster::Metacluster`] wires
//! clusters over several input channels so missing channels can be completed
//! from the others, and [`episodic::DeclarativeMemory`] clusters windows of
//! consecutive frames. [`cognition::SyntheticCognition`] puts these together
//! into an agent that maps sensor states to motor outputs.

pub mod cluster;
pub mod codec;
pub mod cognition;
pub mod episodic;
pub mod error;
pub mod memory;
pub mod metacluster;
pub mod persist;
pub mod repr;

pub use cluster::{Cluster, ClusterPolicy, Trace};
pub use codec::{CategoricalCodecSpec, CodecBinding, ImageCodecSpec};
pub use cognition::{Mode, StepResult, SyntheticCognition};
pub use episodic::DeclarativeMemory;
pub use error::{Error, Result};
pub use memory::{Cell, CellOutcome, Footprint};
pub use metacluster::{ChannelInputs, MCResult, Metacluster, MetaclusterSpec};
pub use persist::{load_model, save_model, Model, ModelFile};
pub use repr::{ActivationVector, Mask, SegmentLayout};
