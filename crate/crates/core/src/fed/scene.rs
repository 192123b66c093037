//! Synthetic multi-device scene: one square region of gaussians per device,
//! each device and edge with its own coordinate frame.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DeviceNode, EdgeNode, FrameLink, Topology};
use crate::geometry::RigidTransform;
use crate::splat::{render, CameraPose, Gaussian3D, SplatModel, FIT_BACKGROUND};

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub seed: u64,
    pub devices: usize,
    pub edges: usize,
    pub gaussians_per_device: usize,
    pub image_size: usize,
    pub views_per_device: usize,
    /// Distance between neighbouring region centers.
    pub spacing: f64,
    pub device_compute_rate: f64,
    pub device_uplink_rate: f64,
    pub edge_uplink_rate: f64,
    /// When set, device→edge transforms are marked unknown and estimated from
    /// gaussian-center correspondences.
    pub estimate_transforms: bool,
    /// Edge index of every device; [`contiguous_association`] when unset.
    /// Must have `devices` entries, each below `edges`.
    pub edge_of: Option<Vec<usize>>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            devices: 4,
            edges: 2,
            gaussians_per_device: 6,
            image_size: 32,
            views_per_device: 2,
            spacing: 2.0,
            device_compute_rate: 1e8,
            device_uplink_rate: 1e6,
            edge_uplink_rate: 1e7,
            estimate_transforms: false,
            edge_of: None,
        }
    }
}

/// Edge `l` of `edges` owns devices `k` with `k * edges / devices == l`.
pub fn contiguous_association(devices: usize, edges: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); edges];
    for k in 0..devices {
        out[k * edges / devices].push(k);
    }
    out
}

fn random_transform(rng: &mut ChaCha8Rng, max_shift: f64) -> RigidTransform {
    let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.2..1.0));
    let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let shift = Vector3::new(
        rng.random_range(-max_shift..max_shift),
        rng.random_range(-max_shift..max_shift),
        rng.random_range(-max_shift..max_shift),
    );
    RigidTransform::from_axis_angle(axis, angle, shift)
}

fn region_center(k: usize, count: usize, spacing: f64) -> Vector3<f64> {
    let cols = (count as f64).sqrt().ceil() as usize;
    let rows = count.div_ceil(cols);
    let (r, c) = (k / cols, k % cols);
    Vector3::new(
        (c as f64 - (cols as f64 - 1.0) / 2.0) * spacing,
        (r as f64 - (rows as f64 - 1.0) / 2.0) * spacing,
        0.0,
    )
}

/// Builds the topology and the world-frame ground-truth model.
///
/// Device targets are rendered from the full ground truth; initial local models are
/// the device's own region with perturbed positions, opacities and colors.
pub fn quadrant_scene(cfg: &SceneConfig) -> (Topology, SplatModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let assoc = match &cfg.edge_of {
        Some(edge_of) => {
            let mut assoc = vec![Vec::new(); cfg.edges.max(1)];
            for (k, &l) in edge_of.iter().enumerate() {
                assoc[l].push(k);
            }
            assoc
        }
        None => contiguous_association(cfg.devices, cfg.edges.max(1)),
    };
    let edge_to_cloud: Vec<RigidTransform> = (0..assoc.len()).map(|_| random_transform(&mut rng, 2.0)).collect();
    let mut edge_of = vec![0; cfg.devices];
    for (l, members) in assoc.iter().enumerate() {
        for &k in members {
            edge_of[k] = l;
        }
    }
    let device_to_edge: Vec<RigidTransform> = (0..cfg.devices).map(|_| random_transform(&mut rng, 2.0)).collect();

    let mut regions: Vec<Vec<Gaussian3D>> = Vec::with_capacity(cfg.devices);
    for k in 0..cfg.devices {
        let center = region_center(k, cfg.devices, cfg.spacing);
        let gs = (0..cfg.gaussians_per_device)
            .map(|_| {
                let offset = Vector3::new(
                    rng.random_range(-0.45..0.45),
                    rng.random_range(-0.45..0.45),
                    rng.random_range(-0.2..0.2),
                );
                Gaussian3D::new(
                    center + offset,
                    Vector3::new(rng.random_range(0.08..0.2), rng.random_range(0.08..0.2), rng.random_range(0.08..0.2)),
                    [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 1.0],
                    rng.random_range(0.6..0.95),
                    [rng.random(), rng.random(), rng.random()],
                )
                .expect("valid by construction")
            })
            .collect();
        regions.push(gs);
    }
    let truth = SplatModel::new(regions.concat()).with_frame("world");

    let mut devices = Vec::with_capacity(cfg.devices);
    for k in 0..cfg.devices {
        let to_world = edge_to_cloud[edge_of[k]].compose(&device_to_edge[k]);
        let from_world = to_world.inverse();
        let center = region_center(k, cfg.devices, cfg.spacing);
        let dataset = (0..cfg.views_per_device)
            .map(|v| {
                let a = 2.0 * std::f64::consts::PI * v as f64 / cfg.views_per_device as f64;
                let eye = center + Vector3::new(0.6 * a.cos(), 0.6 * a.sin(), -2.5);
                let world_cam =
                    CameraPose::look_at(eye, center, Vector3::new(0.0, 1.0, 0.0), cfg.image_size as f64, cfg.image_size, cfg.image_size)
                        .expect("valid camera");
                let img = render(&truth, &world_cam, FIT_BACKGROUND).expect("non-empty image");
                (img, world_cam.in_frame(&to_world))
            })
            .collect();
        let local: Vec<Gaussian3D> = regions[k]
            .iter()
            .map(|g| {
                let mut p = g.transformed(&from_world).to_params();
                for v in p.iter_mut().take(3) {
                    *v += rng.random_range(-0.06..0.06);
                }
                p[10] = 0.5;
                for v in p.iter_mut().skip(11) {
                    *v = (*v + rng.random_range(-0.3..0.3)).clamp(0.0, 1.0);
                }
                Gaussian3D::from_params(&p).sanitized()
            })
            .collect();
        let to_edge = if cfg.estimate_transforms {
            let local_points: Vec<Vector3<f64>> = regions[k].iter().map(|g| from_world.apply(&g.position)).collect();
            let parent_points = local_points.iter().map(|p| device_to_edge[k].apply(p)).collect();
            FrameLink::Estimate { local_points, parent_points }
        } else {
            FrameLink::Known(device_to_edge[k])
        };
        devices.push(DeviceNode {
            id: k,
            dataset,
            model: SplatModel::new(local).with_frame(format!("device-{k}")),
            to_edge,
            compute_rate: cfg.device_compute_rate,
            uplink_rate: cfg.device_uplink_rate,
        });
    }
    let edges = assoc
        .into_iter()
        .enumerate()
        .map(|(l, device_ids)| EdgeNode {
            id: l,
            device_ids,
            model: SplatModel::default().with_frame(format!("edge-{l}")),
            to_cloud: FrameLink::Known(edge_to_cloud[l]),
            uplink_rate: cfg.edge_uplink_rate,
        })
        .collect();
    (Topology { devices, edges }, truth)
}
