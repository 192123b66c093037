//! Runs the reference oracles against the production code paths and reports one
//! line per check.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use secom_core::codec::{decode_chunk, encode_chunk, max_frames};
use secom_core::face::{gen_trajectory, ExpressionChunk, ExpressionFrame};
use secom_core::fed::align_pose;
use secom_core::geometry::RigidTransform;
use secom_core::oracle::{central_difference, dense_render, max_frames_scan, max_relative_error};
use secom_core::predictor::{loss_and_gradient as predictor_gradient, windows, FrameStats, PredictorModel};
use secom_core::splat::{loss, loss_and_gradient, render, render_with_tile_size, CameraPose, Gaussian3D, SplatModel};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub fn random_gaussian(rng: &mut ChaCha8Rng, spread: f64) -> Gaussian3D {
    let mut v = |lo: f64, hi: f64| rng.random_range(lo..hi);
    Gaussian3D::new(
        Vector3::new(v(-spread, spread), v(-spread, spread), v(-spread, spread)),
        Vector3::new(v(0.05, 0.3), v(0.05, 0.3), v(0.05, 0.3)),
        [v(-1.0, 1.0), v(-1.0, 1.0), v(-1.0, 1.0), v(-1.0, 1.0)],
        v(0.1, 0.95),
        [v(0.0, 1.0), v(0.0, 1.0), v(0.0, 1.0)],
    )
    .expect("valid random gaussian")
}

pub fn random_scene(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> SplatModel {
    SplatModel::new((0..n).map(|_| random_gaussian(rng, spread)).collect())
}

pub fn orbit_camera(angle: f64, distance: f64, focal: f64, size: usize) -> CameraPose {
    let eye = Vector3::new(distance * angle.sin(), 0.3 * distance, -distance * angle.cos());
    CameraPose::look_at(eye, Vector3::zeros(), Vector3::new(0.0, 1.0, 0.0), focal, size, size).expect("valid camera")
}

/// Worst per-channel difference between the tiled renderer and the dense oracle, and
/// whether all tile sizes agree bitwise.
pub fn renderer_vs_oracle(scenes: usize, seed: u64) -> (f64, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut invariant = true;
    for _ in 0..scenes {
        let n = rng.random_range(1..=10);
        let model = random_scene(&mut rng, n, 0.8);
        let cam = orbit_camera(rng.random_range(0.0..std::f64::consts::TAU), 3.0, 60.0, 64);
        let bg = [rng.random(), rng.random(), rng.random()];
        let tiled = render(&model, &cam, bg).expect("render");
        worst = worst.max(tiled.max_abs_diff(&dense_render(&model, &cam, bg)).expect("same shape"));
        for tile in [1, 7, 64] {
            invariant &= render_with_tile_size(&model, &cam, bg, tile).expect("render") == tiled;
        }
    }
    (worst, invariant)
}

/// Worst relative error of the splat fit gradient on small instances.
pub fn splat_gradient_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = random_scene(&mut rng, 5, 0.5);
    let model = random_scene(&mut rng, 5, 0.5);
    let views: Vec<_> = (0..2)
        .map(|k| {
            let cam = orbit_camera(0.4 + k as f64, 3.0, 40.0, 32);
            (render(&target, &cam, [0.0; 3]).expect("render"), cam)
        })
        .collect();
    let (_, analytic) = loss_and_gradient(&model, &views).expect("gradient");
    let numeric = central_difference(|p| loss(&model.with_params(p), &views).expect("loss"), &model.to_params(), 1e-4);
    let scale = numeric.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    max_relative_error(&analytic, &numeric, 1e-3 * scale)
}

/// Worst relative error of the predictor gradient on an (M=2, h=4, w=3) instance.
pub fn predictor_gradient_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seqs: Vec<ExpressionChunk> = (0..2)
        .map(|_| {
            let frames = (0..7).map(|_| ExpressionFrame(vec![rng.random(), rng.random()])).collect();
            ExpressionChunk::new(frames).expect("frames")
        })
        .collect();
    let stats = FrameStats::from_sequences(&seqs).expect("sequences");
    let mut model = PredictorModel::init(4, 3, stats, &mut rng);
    let perturbed: Vec<f64> = model.params().iter().map(|p| p + rng.random_range(-0.3..0.3)).collect();
    model.set_params(&perturbed);
    let ws = windows(&model, &seqs);
    let (_, analytic) = predictor_gradient(&model, &ws);
    let numeric = central_difference(
        |p| {
            let mut m = model.clone();
            m.set_params(p);
            predictor_gradient(&m, &ws).0
        },
        model.params(),
        1e-5,
    );
    let scale = analytic.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    max_relative_error(&analytic, &numeric, 1e-3 * scale)
}

/// Number of fuzzed tuples where the closed form disagrees with the linear scan.
pub fn budget_mismatches(cases: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..cases)
        .filter(|_| {
            let m = rng.random_range(1..=64usize);
            let m_dyn = rng.random_range(0..=m);
            let q = rng.random_range(1..=16u32);
            let n = rng.random_range(1..=200usize);
            let budget = rng.random_range(0.0..(q as f64 * m as f64 * n as f64 * 1.2 + 1.0));
            let nf = max_frames(m, m_dyn, q, budget, n);
            nf as u64 != max_frames_scan(m as u64, m_dyn as u64, q as u64, budget, n as u64)
        })
        .count()
}

/// Worst (decoded − original) / (step/2) over fuzzed chunks; ≤ 1 passes.
pub fn codec_error_ratio(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let m = rng.random_range(1..=24usize);
        let n = rng.random_range(2..=80usize);
        let dims: Vec<usize> = (0..m).filter(|_| rng.random_bool(0.4)).collect();
        let q = rng.random_range(2..=16u32);
        let chunk = gen_trajectory(rng.random(), m, n, &dims, 0.01).expect("dims in range");
        let budget = rng.random_range((q as usize * m) as f64..(q as usize * m * n) as f64 + 1.0);
        let enc = encode_chunk(&chunk, &dims, q, budget).expect("feasible");
        let dec = decode_chunk(&enc.to_bytes()).expect("well formed");
        for &d in &dims {
            let half = dec.step(d) / 2.0;
            for (f, frame) in dec.frames.iter().enumerate() {
                let err = (frame.0[d] - chunk.frames()[f].0[d]).abs();
                if half > 0.0 {
                    worst = worst.max(err / half);
                } else if err > 0.0 {
                    worst = f64::INFINITY;
                }
            }
        }
    }
    worst
}

/// Worst rotation angle and translation error of the rigid alignment over seeds.
pub fn alignment_error(seeds: u64, noise: f64) -> f64 {
    let mut worst = 0.0f64;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = RigidTransform::from_axis_angle(
            Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.1..1.0)),
            rng.random_range(-3.0..3.0),
            Vector3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
        );
        let src: Vec<Vector3<f64>> = (0..30)
            .map(|_| Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let dst: Vec<Vector3<f64>> = src
            .iter()
            .map(|p| {
                let jitter = if noise > 0.0 {
                    Vector3::new(gauss(&mut rng), gauss(&mut rng), gauss(&mut rng)) * noise
                } else {
                    Vector3::zeros()
                };
                truth.apply(p) + jitter
            })
            .collect();
        let est = align_pose(&src, &dst).expect("well conditioned");
        worst = worst
            .max(est.rotation_angle_to(&truth))
            .max((est.translation - truth.translation).norm());
    }
    worst
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn run_all() -> Vec<Check> {
    let mut checks = Vec::new();
    let (diff, invariant) = renderer_vs_oracle(10, 1);
    checks.push(Check {
        name: "render-oracle",
        passed: diff <= 1e-6 && invariant,
        detail: format!("max |tiled - dense| = {diff:.3e}, tile-size invariant = {invariant}"),
    });
    let pinned = max_frames(20, 5, 8, 560.0, 100);
    let mismatches = budget_mismatches(2000, 2);
    checks.push(Check {
        name: "budget-scan",
        passed: pinned == 11 && mismatches == 0,
        detail: format!("max_frames(20, 5, 8, 560, 100) = {pinned}, {mismatches} mismatches in 2000 tuples"),
    });
    let ratio = codec_error_ratio(50, 3);
    checks.push(Check {
        name: "codec-roundtrip",
        passed: ratio <= 1.0 + 1e-9,
        detail: format!("worst error / (step/2) = {ratio:.6}"),
    });
    let e = splat_gradient_error(4);
    checks.push(Check { name: "splat-gradient", passed: e <= 1e-3, detail: format!("max relative error {e:.3e}") });
    let e = predictor_gradient_error(5);
    checks.push(Check { name: "predictor-gradient", passed: e <= 1e-3, detail: format!("max relative error {e:.3e}") });
    let clean = alignment_error(5, 0.0);
    let noisy = alignment_error(5, 1e-3);
    checks.push(Check {
        name: "rigid-alignment",
        passed: clean <= 1e-9 && noisy <= 1e-2,
        detail: format!("noiseless error {clean:.3e}, sigma=1e-3 error {noisy:.3e}"),
    });
    checks
}
