use rayon::prelude::*;

use super::aggregate::merge_aligned;
use super::{DeviceNode, FedError, FedSchedule, Topology};
use crate::geometry::RigidTransform;
use crate::image::Image;
use crate::splat::{fit_model, loss, model_size_bytes, prune_by_opacity, CameraPose, FitError, SplatModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FedConfig {
    /// Global gradient-descent step size for local training.
    pub step_size: f64,
    /// When set, `prune_by_opacity` runs after every edge and cloud merge.
    pub prune_threshold: Option<f64>,
}

impl Default for FedConfig {
    fn default() -> Self {
        Self { step_size: 3.0, prune_threshold: None }
    }
}

#[derive(Debug, Clone)]
pub struct LocalUpdate {
    pub model: SplatModel,
    /// `steps × gaussians × Σ pixels over the dataset`.
    pub work_units: u64,
    pub loss_trace: Vec<f64>,
}

/// Runs `steps` of gradient descent on the device's own dataset.
pub fn local_train(node: &DeviceNode, steps: usize, step_size: f64) -> Result<LocalUpdate, FitError> {
    train_on(&node.model, &node.dataset, steps, step_size)
}

fn train_on(
    model: &SplatModel,
    dataset: &[(Image, CameraPose)],
    steps: usize,
    step_size: f64,
) -> Result<LocalUpdate, FitError> {
    let pixels: usize = dataset.iter().map(|(img, _)| img.pixel_count()).sum();
    let work_units = (steps * model.size() * pixels) as u64;
    let fit = fit_model(model, dataset, steps, step_size)?;
    Ok(LocalUpdate { model: fit.model, work_units, loss_trace: fit.trace })
}

/// Cumulative traffic and work of one node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeUsage {
    pub uplink_bits: u64,
    /// Bits received from children (edges and cloud) or from the parent (devices).
    pub downlink_bits: u64,
    pub compute_units: u64,
}

/// Per-node cumulative resource use plus per-round totals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResourceLedger {
    pub devices: Vec<NodeUsage>,
    pub edges: Vec<NodeUsage>,
    pub cloud: NodeUsage,
    pub round_latency_s: Vec<f64>,
    /// Device→edge bits uploaded in each outer round.
    pub round_device_uplink_bits: Vec<u64>,
    /// Edge→cloud bits uploaded in each outer round.
    pub round_edge_uplink_bits: Vec<u64>,
    /// Bits received by the cloud in each outer round.
    pub round_cloud_received_bits: Vec<u64>,
}

impl ResourceLedger {
    pub fn total_uplink_bits(&self) -> u64 {
        self.devices.iter().chain(&self.edges).map(|u| u.uplink_bits).sum()
    }

    pub fn total_compute_units(&self) -> u64 {
        self.devices.iter().chain(&self.edges).map(|u| u.compute_units).sum::<u64>() + self.cloud.compute_units
    }
}

/// One row of the training history; round 0 is the state before training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub outer_round: usize,
    pub global_loss: f64,
    pub total_uplink_bits: u64,
    pub total_compute_units: u64,
    pub round_latency_s: f64,
}

#[derive(Debug, Clone)]
pub struct FedHistory {
    pub rounds: Vec<RoundRecord>,
    pub ledger: ResourceLedger,
    pub global_model: SplatModel,
    pub devices: Vec<SplatModel>,
    pub edges: Vec<SplatModel>,
}

fn upload_bits(model: &SplatModel) -> u64 {
    model_size_bytes(model.size()) as u64 * 8
}

fn transfer_time(bits: u64, rate: f64) -> f64 {
    if bits == 0 {
        0.0
    } else {
        bits as f64 / rate
    }
}

/// Mean over devices of the loss of `global` (cloud frame) on each device dataset.
pub fn global_loss(
    global: &SplatModel,
    datasets: &[(&[(Image, CameraPose)], RigidTransform)],
) -> Result<f64, FitError> {
    let mut total = 0.0;
    for (data, device_to_cloud) in datasets {
        let views: Vec<(Image, CameraPose)> =
            data.iter().map(|(img, cam)| (img.clone(), cam.to_world(device_to_cloud))).collect();
        total += loss(global, &views)?;
    }
    Ok(total / datasets.len() as f64)
}

struct Resolved {
    /// device position → edge position
    edge_of: Vec<usize>,
    /// per edge, device positions sorted by device id
    members: Vec<Vec<usize>>,
    device_to_edge: Vec<RigidTransform>,
    edge_to_cloud: Vec<RigidTransform>,
}

fn resolve(topology: &Topology) -> Result<Resolved, FedError> {
    topology.validate()?;
    let pos_of = |id: usize| topology.devices.iter().position(|d| d.id == id).expect("validated");
    let mut edge_of = vec![0; topology.devices.len()];
    let mut members = Vec::with_capacity(topology.edges.len());
    for (l, e) in topology.edges.iter().enumerate() {
        let mut ids = e.device_ids.clone();
        ids.sort_unstable();
        let pos: Vec<usize> = ids.into_iter().map(pos_of).collect();
        for &p in &pos {
            edge_of[p] = l;
        }
        members.push(pos);
    }
    let device_to_edge = topology.devices.iter().map(|d| d.to_edge.resolve()).collect::<Result<_, _>>()?;
    let edge_to_cloud = topology.edges.iter().map(|e| e.to_cloud.resolve()).collect::<Result<_, _>>()?;
    Ok(Resolved { edge_of, members, device_to_edge, edge_to_cloud })
}

fn maybe_prune(model: SplatModel, cfg: &FedConfig) -> SplatModel {
    match cfg.prune_threshold {
        Some(t) => prune_by_opacity(&model, t),
        None => model,
    }
}

/// Synchronous hierarchical training.
///
/// Each outer round runs `inner_iters_per_outer` × (local training on every device,
/// device→edge upload, edge union) followed by edge→cloud upload and cloud union.
/// Uploads are the full-precision model file, `8 × file bytes` bits. A round's
/// latency adds, per inner iteration, the slowest device's compute + upload time,
/// then the slowest edge upload.
pub fn run_hier_fed(topology: &Topology, schedule: FedSchedule, cfg: &FedConfig) -> Result<FedHistory, FedError> {
    if schedule.sgd_steps_per_inner == 0 || schedule.inner_iters_per_outer == 0 || schedule.outer_iters == 0 {
        return Err(FedError::BadSchedule);
    }
    let r = resolve(topology)?;
    let mut devices: Vec<SplatModel> = topology.devices.iter().map(|d| d.model.clone()).collect();
    let edge_model = |devices: &[SplatModel], l: usize| {
        maybe_prune(merge_aligned(r.members[l].iter().map(|&k| (&devices[k], &r.device_to_edge[k])), "edge"), cfg)
    };
    let cloud_model = |edges: &[SplatModel]| {
        maybe_prune(merge_aligned(edges.iter().zip(&r.edge_to_cloud), "cloud"), cfg)
    };
    let mut edges: Vec<SplatModel> = (0..topology.edges.len()).map(|l| edge_model(&devices, l)).collect();
    let mut global = cloud_model(&edges);

    let device_to_cloud: Vec<RigidTransform> =
        (0..devices.len()).map(|k| r.edge_to_cloud[r.edge_of[k]].compose(&r.device_to_edge[k])).collect();
    let datasets: Vec<(&[(Image, CameraPose)], RigidTransform)> =
        topology.devices.iter().zip(&device_to_cloud).map(|(d, t)| (d.dataset.as_slice(), *t)).collect();
    let eval = |m: &SplatModel| global_loss(m, &datasets).map_err(FedError::Evaluate);

    let mut ledger = ResourceLedger {
        devices: vec![NodeUsage::default(); devices.len()],
        edges: vec![NodeUsage::default(); edges.len()],
        ..Default::default()
    };
    let mut rounds = vec![RoundRecord {
        outer_round: 0,
        global_loss: eval(&global)?,
        total_uplink_bits: 0,
        total_compute_units: 0,
        round_latency_s: 0.0,
    }];

    for outer in 1..=schedule.outer_iters {
        let mut latency = 0.0;
        let mut device_bits_round = 0;
        for _ in 0..schedule.inner_iters_per_outer {
            let updates: Vec<Result<LocalUpdate, FedError>> = topology
                .devices
                .par_iter()
                .zip(devices.par_iter())
                .map(|(node, current)| {
                    train_on(current, &node.dataset, schedule.sgd_steps_per_inner, cfg.step_size)
                        .map_err(|source| FedError::Fit { device: node.id, source })
                })
                .collect();
            let mut slowest: f64 = 0.0;
            for (k, update) in updates.into_iter().enumerate() {
                let update = update?;
                let node = &topology.devices[k];
                let bits = upload_bits(&update.model);
                let usage = &mut ledger.devices[k];
                usage.uplink_bits += bits;
                usage.compute_units += update.work_units;
                ledger.edges[r.edge_of[k]].downlink_bits += bits;
                device_bits_round += bits;
                let t = update.work_units as f64 / node.compute_rate + transfer_time(bits, node.uplink_rate);
                slowest = slowest.max(t);
                devices[k] = update.model;
            }
            latency += slowest;
            for (l, edge) in edges.iter_mut().enumerate() {
                *edge = edge_model(&devices, l);
            }
        }
        let mut slowest_edge: f64 = 0.0;
        let mut edge_bits_round = 0;
        for (l, edge) in edges.iter().enumerate() {
            let bits = upload_bits(edge);
            ledger.edges[l].uplink_bits += bits;
            ledger.cloud.downlink_bits += bits;
            edge_bits_round += bits;
            slowest_edge = slowest_edge.max(transfer_time(bits, topology.edges[l].uplink_rate));
        }
        latency += slowest_edge;
        global = cloud_model(&edges);

        ledger.round_latency_s.push(latency);
        ledger.round_device_uplink_bits.push(device_bits_round);
        ledger.round_edge_uplink_bits.push(edge_bits_round);
        ledger.round_cloud_received_bits.push(edge_bits_round);
        rounds.push(RoundRecord {
            outer_round: outer,
            global_loss: eval(&global)?,
            total_uplink_bits: ledger.total_uplink_bits(),
            total_compute_units: ledger.total_compute_units(),
            round_latency_s: latency,
        });
    }
    Ok(FedHistory { rounds, ledger, global_model: global, devices, edges })
}
