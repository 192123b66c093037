//! Device → edge → cloud hierarchical training of splat models.
//!
//! Devices fit their local sub-scene with gradient descent, edges merge the
//! pose-aligned local models by union, and the cloud merges the edge models the
//! same way. Rounds are synchronous; latency of a round is the slowest node.

mod aggregate;
mod align;
mod run;
pub mod scene;

use nalgebra::Vector3;
use thiserror::Error;

pub use aggregate::{cloud_aggregate, edge_aggregate, merge_aligned};
pub use align::{align_pose, AlignError};
pub use run::{global_loss, local_train, run_hier_fed, FedConfig, FedHistory, LocalUpdate, NodeUsage, ResourceLedger, RoundRecord};

use crate::geometry::RigidTransform;
use crate::image::Image;
use crate::splat::{CameraPose, FitError, SplatModel};

#[derive(Debug, Error, PartialEq)]
pub enum FedError {
    #[error("topology has no devices or no edges")]
    EmptyTopology,
    #[error("edge {edge} references unknown device {device}")]
    UnknownDevice { edge: usize, device: usize },
    #[error("device {0} is associated with more than one edge")]
    SharedDevice(usize),
    #[error("device {0} is not associated with any edge")]
    UnassignedDevice(usize),
    #[error("device {0} has an empty dataset")]
    EmptyDataset(usize),
    #[error("duplicate device id {0}")]
    DuplicateDevice(usize),
    #[error("schedule entries must all be at least 1")]
    BadSchedule,
    #[error("pose alignment failed: {0}")]
    Align(#[from] AlignError),
    #[error("local training on device {device} failed: {source}")]
    Fit { device: usize, source: FitError },
    #[error("global loss evaluation failed: {0}")]
    Evaluate(FitError),
}

/// How a node's coordinate frame maps into its parent's frame.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameLink {
    Known(RigidTransform),
    /// Estimated with [`align_pose`] from corresponding points (e.g. gaussian centers).
    Estimate { local_points: Vec<Vector3<f64>>, parent_points: Vec<Vector3<f64>> },
}

impl FrameLink {
    pub fn resolve(&self) -> Result<RigidTransform, AlignError> {
        match self {
            FrameLink::Known(t) => Ok(*t),
            FrameLink::Estimate { local_points, parent_points } => align_pose(local_points, parent_points),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DeviceNode {
    pub id: usize,
    /// Local dataset of images with cameras in the device frame.
    pub dataset: Vec<(Image, CameraPose)>,
    pub model: SplatModel,
    pub to_edge: FrameLink,
    /// Work units per second.
    pub compute_rate: f64,
    /// Bits per second.
    pub uplink_rate: f64,
}

#[derive(Debug, Clone)]
pub struct EdgeNode {
    pub id: usize,
    pub device_ids: Vec<usize>,
    pub model: SplatModel,
    pub to_cloud: FrameLink,
    pub uplink_rate: f64,
}

#[derive(Debug, Clone)]
pub struct Topology {
    pub devices: Vec<DeviceNode>,
    pub edges: Vec<EdgeNode>,
}

impl Topology {
    /// Checks disjoint, complete device↔edge association and non-empty datasets.
    pub fn validate(&self) -> Result<(), FedError> {
        if self.devices.is_empty() || self.edges.is_empty() {
            return Err(FedError::EmptyTopology);
        }
        let mut seen = std::collections::BTreeSet::new();
        for d in &self.devices {
            if !seen.insert(d.id) {
                return Err(FedError::DuplicateDevice(d.id));
            }
            if d.dataset.is_empty() {
                return Err(FedError::EmptyDataset(d.id));
            }
        }
        let mut owner = std::collections::BTreeMap::new();
        for e in &self.edges {
            for &k in &e.device_ids {
                if !seen.contains(&k) {
                    return Err(FedError::UnknownDevice { edge: e.id, device: k });
                }
                if owner.insert(k, e.id).is_some() {
                    return Err(FedError::SharedDevice(k));
                }
            }
        }
        if let Some(d) = self.devices.iter().find(|d| !owner.contains_key(&d.id)) {
            return Err(FedError::UnassignedDevice(d.id));
        }
        Ok(())
    }
}

/// Nested iteration counts: SGD steps per inner round, inner rounds per outer round,
/// and outer rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FedSchedule {
    pub sgd_steps_per_inner: usize,
    pub inner_iters_per_outer: usize,
    pub outer_iters: usize,
}

impl FedSchedule {
    pub fn new(sgd_steps_per_inner: usize, inner_iters_per_outer: usize, outer_iters: usize) -> Result<Self, FedError> {
        if sgd_steps_per_inner == 0 || inner_iters_per_outer == 0 || outer_iters == 0 {
            return Err(FedError::BadSchedule);
        }
        Ok(Self { sgd_steps_per_inner, inner_iters_per_outer, outer_iters })
    }
}
