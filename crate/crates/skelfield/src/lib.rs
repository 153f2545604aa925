//! Turn a watertight 3D shape plus skeletal probability fields into a rigged,
//! animatable model.
//!
//! The crate covers the full path from raw geometry to an animatable rig:
//!
//! - [`geometry`] — meshes, occupancy grids, sampling, symmetry detection,
//!   chamfer / IoU metrics.
//! - [`fields`] — ground-truth joint / root / bone probability fields and
//!   instance labels built from an annotated skeleton.
//! - [`losses`] — the training objectives (dice, L1 field, symmetry,
//!   discriminative), each with analytic gradients.
//! - [`neural`] — a small multi-head implicit decoder over a gated
//!   convolutional feature volume, trained with a gradient-verified loop.
//! - [`extract`] — modulated mean-shift joint extraction, root selection,
//!   Prim MST kinematic trees, and the CD-J2J / J2B / B2B metrics.
//! - [`rig`] — skinning weights, forward kinematics, linear blend skinning.
//! - [`synth`] — procedural rigged test shapes (table, chair, lamp, cross).
//! - [`pipeline`] — configuration, the end-to-end pipeline, and evaluation.

pub mod error;
pub mod extract;
pub mod fields;
pub mod geometry;
pub mod losses;
pub mod neural;
pub mod pipeline;
pub mod rig;
pub mod synth;

pub use error::{Error, Result};
pub use extract::{CandidatePoint, FieldEval, MeanShiftConfig, OracleField, WeightedGraph};
pub use fields::{FieldTargets, Joint, Skeleton};
pub use geometry::{Mesh, OccupancyGrid, SampleBatch, SimilarityTransform, SymmetryPlane};
pub use neural::{FeatureGrid, NetConfig, SkelNet, TrainConfig};
pub use pipeline::PipelineConfig;
pub use rig::{Pose, RigModel};
