mod common;

use common::{orbit_camera, random_scene, rng};
use nalgebra::{Matrix2, Matrix3, Vector3};
use proptest::prelude::*;
use secom_core::oracle::{central_difference, dense_render, max_relative_error};
use secom_core::splat::{
    encode_model, encode_quantized, fit_model, loss, loss_and_gradient, prune_by_opacity, quantize_model,
    quantized_size_bytes, render, render_with_tile_size, CameraPose, Gaussian3D, SplatModel,
    COV2D_REGULARIZATION,
};

#[test]
fn projected_covariance_matches_numeric_jacobian() {
    let cam = CameraPose::new(Matrix3::identity(), Vector3::zeros(), 100.0, 100.0, 32.0, 32.0, 64, 64).unwrap();
    let g = Gaussian3D::isotropic(Vector3::new(0.0, 0.0, 2.0), 0.1, 0.5, [1.0; 3]).unwrap();
    let s = secom_core::splat::project_gaussian(&g, &cam).unwrap();
    let proj = |p: &[f64]| [cam.fx * p[0] / p[2] + cam.cx, cam.fy * p[1] / p[2] + cam.cy];
    let h = 1e-6;
    let base = [0.0, 0.0, 2.0];
    let mut j = nalgebra::Matrix2x3::zeros();
    for k in 0..3 {
        let mut up = base;
        let mut down = base;
        up[k] += h;
        down[k] -= h;
        let (a, b) = (proj(&up), proj(&down));
        for r in 0..2 {
            j[(r, k)] = (a[r] - b[r]) / (2.0 * h);
        }
    }
    let expected = j * g.covariance() * j.transpose();
    assert!((expected - Matrix2::new(25.0, 0.0, 0.0, 25.0)).norm() < 1e-3);
    let raw = s.cov2d - Matrix2::identity() * COV2D_REGULARIZATION;
    for (a, b) in raw.iter().zip(expected.iter()) {
        assert!((a - b).abs() <= 1e-3 * b.abs().max(1e-9), "{raw} vs {expected}");
    }
}

#[test]
fn single_centered_gaussian_matches_dense_oracle() {
    let cam = CameraPose::identity(64.0, 64, 64).unwrap();
    let g = Gaussian3D::isotropic(Vector3::new(0.0, 0.0, 3.0), 0.4, 0.8, [0.9, 0.4, 0.1]).unwrap();
    let m = SplatModel::new(vec![g]);
    let a = render(&m, &cam, [0.1, 0.1, 0.1]).unwrap();
    let b = dense_render(&m, &cam, [0.1, 0.1, 0.1]);
    assert!(a.max_abs_diff(&b).unwrap() <= 1e-6);
}

#[test]
fn random_scenes_match_dense_oracle_for_any_tile_size() {
    let mut r = rng(7);
    for i in 0..10 {
        let m = random_scene(&mut r, 1 + i % 10, 0.8);
        let cam = orbit_camera(i as f64 * 0.6, 3.0, 60.0, 48);
        let reference = dense_render(&m, &cam, [0.2, 0.3, 0.4]);
        let tiled = render(&m, &cam, [0.2, 0.3, 0.4]).unwrap();
        assert!(tiled.max_abs_diff(&reference).unwrap() <= 1e-6);
        for t in [3, 8, 32] {
            assert_eq!(render_with_tile_size(&m, &cam, [0.2, 0.3, 0.4], t).unwrap(), tiled);
        }
    }
}

fn gradient_instance(seed: u64, n: usize) -> (SplatModel, Vec<(secom_core::Image, CameraPose)>) {
    let mut r = rng(seed);
    let target_model = random_scene(&mut r, n, 0.5);
    let model = random_scene(&mut r, n, 0.5);
    let views = (0..2)
        .map(|k| {
            let cam = orbit_camera(0.4 + k as f64, 3.0, 40.0, 32);
            (render(&target_model, &cam, [0.0; 3]).unwrap(), cam)
        })
        .collect();
    (model, views)
}

#[test]
fn analytic_gradient_matches_central_differences() {
    for seed in [1, 2, 3] {
        let (model, views) = gradient_instance(seed, 5);
        let (_, analytic) = loss_and_gradient(&model, &views).unwrap();
        let params = model.to_params();
        let numeric =
            central_difference(|p| loss(&model.with_params(p), &views).unwrap(), &params, 1e-4);
        let scale = numeric.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let err = max_relative_error(&analytic, &numeric, 1e-3 * scale);
        assert!(err <= 1e-3, "seed {seed}: max relative error {err}");
    }
}

#[test]
fn self_supervised_fit_stays_optimal() {
    let (model, _) = gradient_instance(11, 3);
    let cam = orbit_camera(0.2, 3.0, 40.0, 32);
    let views = vec![(render(&model, &cam, [0.0; 3]).unwrap(), cam)];
    let r = fit_model(&model, &views, 5, 1.0).unwrap();
    assert_eq!(r.trace.len(), 6);
    assert!(*r.trace.last().unwrap() <= r.trace[0]);
    assert!(*r.trace.last().unwrap() <= 1e-8);
}

#[test]
fn perturbed_fit_halves_loss() {
    let mut r = rng(5);
    let truth = random_scene(&mut r, 5, 0.5);
    let init = SplatModel::new(
        truth
            .gaussians
            .iter()
            .map(|g| {
                let mut p = g.to_params();
                for v in p.iter_mut().take(3) {
                    *v += 0.08 * (rand::Rng::random::<f64>(&mut r) - 0.5);
                }
                for v in p.iter_mut().skip(11) {
                    *v = (*v + 0.3 * (rand::Rng::random::<f64>(&mut r) - 0.5)).clamp(0.0, 1.0);
                }
                Gaussian3D::from_params(&p).sanitized()
            })
            .collect(),
    );
    let views: Vec<_> = [0.3, 1.4]
        .iter()
        .map(|&a| {
            let cam = orbit_camera(a, 3.0, 40.0, 32);
            (render(&truth, &cam, [0.0; 3]).unwrap(), cam)
        })
        .collect();
    let fit = fit_model(&init, &views, 200, 3.0).unwrap();
    assert_eq!(fit.trace.len(), 201);
    let (first, last) = (fit.trace[0], *fit.trace.last().unwrap());
    assert!(last < 0.5 * first, "loss {first} -> {last}");
}

#[test]
fn quantized_size_matches_format() {
    let m = random_scene(&mut rng(3), 100, 1.0);
    let (q, size) = quantize_model(&m, 8).unwrap();
    // 4 magic + 2 version + 4 count + 1 bits + 14*8 ranges + 100 * 14 bytes
    assert_eq!(size, 1523);
    assert_eq!(size, quantized_size_bytes(100, 8));
    assert_eq!(encode_quantized(&q).len(), 1523);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantization_error_bound(seed in 0u64..1000, n in 1usize..20, bits in 2u32..=16) {
        let m = random_scene(&mut rng(seed), n, 2.0);
        let (q, _) = quantize_model(&m, bits).unwrap();
        let stored = m.snapped_f32();
        for (orig, deq) in stored.gaussians.iter().zip(&q.model.gaussians) {
            let (a, b) = (orig.to_params(), deq.to_params());
            for k in 0..14 {
                let (lo, hi) = q.ranges[k];
                let bound = (hi as f64 - lo as f64) / ((1u64 << bits) - 1) as f64 / 2.0 + 1e-12;
                prop_assert!((a[k] - b[k]).abs() <= bound, "param {} err {} bound {}", k, (a[k] - b[k]).abs(), bound);
            }
        }
    }

    #[test]
    fn pruning_is_monotone(seed in 0u64..1000, t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let m = random_scene(&mut rng(seed), 12, 1.0);
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(prune_by_opacity(&m, hi).size() <= prune_by_opacity(&m, lo).size());
        prop_assert_eq!(prune_by_opacity(&m, 0.0), m);
    }

    #[test]
    fn model_file_round_trip(seed in 0u64..1000, n in 0usize..16) {
        let m = random_scene(&mut rng(seed), n, 3.0);
        let bytes = encode_model(&m);
        let back = secom_core::splat::decode_model(&bytes).unwrap();
        prop_assert_eq!(&back.gaussians, &m.snapped_f32().gaussians);
        prop_assert_eq!(encode_model(&back), bytes);
    }
}

#[test]
fn sixteen_bit_bound_instantiation() {
    let m = random_scene(&mut rng(9), 30, 1.0);
    let (q, _) = quantize_model(&m, 16).unwrap();
    for k in 0..14 {
        let (lo, hi) = q.ranges[k];
        assert!((q.step(k) / 2.0 - (hi as f64 - lo as f64) / 131070.0).abs() < 1e-15);
    }
}
