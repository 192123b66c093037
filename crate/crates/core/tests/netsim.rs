use std::sync::OnceLock;

use secom_core::face::{gen_synthetic_kb, gen_trajectory, ExpressionChunk};
use secom_core::netsim::{
    latency, simulate_stream, sweep_rate, write_frames_csv, write_sweep_csv, Architecture, BenchmarkConfig,
    LinkProfile, NetsimError, RenderWorkload, Scheme, StreamConfig,
};
use secom_core::predictor::{HoldLast, PredictorConfig, PredictorModel};
use secom_core::stats::mean;

fn small_bench() -> BenchmarkConfig {
    BenchmarkConfig {
        chunks: 2,
        train_sequences: 12,
        predictor: PredictorConfig { hidden: 16, epochs: 15, ..PredictorConfig::default() },
        ..BenchmarkConfig::default()
    }
}

fn predictor() -> &'static PredictorModel {
    static MODEL: OnceLock<PredictorModel> = OnceLock::new();
    MODEL.get_or_init(|| small_bench().train(9).unwrap().0)
}

fn stream_cfg(q: u32) -> StreamConfig {
    StreamConfig { q, m_dyn: 5, tau: 0.1, count_header_bits: false, scheme: Scheme::Full }
}

#[test]
fn latency_additivity_and_fast_links() {
    let w = RenderWorkload::splat(500, 64, 64);
    for rate in [1e3, 1e6, 1e9] {
        let link = LinkProfile::new(rate, rate * 3.0, 0.002).unwrap();
        for arch in Architecture::ALL {
            for deployed in [false, true] {
                let b = latency(arch, &w, &link, deployed).unwrap();
                let parts = [b.deploy_s, b.uplink_s, b.compute_s, b.downlink_s];
                assert!(parts.iter().all(|p| *p >= 0.0));
                assert_eq!(b.total_s, parts.iter().sum::<f64>());
            }
        }
    }
    let fast = LinkProfile::new(1e15, 1e15, 0.0).unwrap();
    for arch in Architecture::ALL {
        let b = latency(arch, &w, &fast, false).unwrap();
        assert!(b.deploy_s < 1e-9 && b.uplink_s < 1e-9 && b.downlink_s < 1e-9, "{arch}: {b:?}");
    }
    let local = latency(Architecture::Local, &RenderWorkload::blendshape(20, 32, 32), &fast, true).unwrap();
    assert_eq!(local.compute_s, 21.0 * 1024.0 / 1e8);
}

#[test]
fn full_budget_q16_is_high_fidelity() {
    let cfg = small_bench();
    let (kb, chunks) = cfg.scenario(4).unwrap();
    let budget = 16.0 * (20.0 + 99.0 * 5.0);
    let link = LinkProfile::symmetric(budget / 0.1).unwrap();
    let run = simulate_stream(&kb, &chunks, &link, &stream_cfg(16), predictor()).unwrap();
    assert!(run.chunks.iter().all(|c| c.nf == 100));
    assert!(run.mean_psnr() >= 50.0, "mean PSNR {}", run.mean_psnr());
}

#[test]
fn prediction_starts_after_the_last_transmitted_frame() {
    let cfg = small_bench();
    let (kb, chunks) = cfg.scenario(2).unwrap();
    let budget = 8.0 * 20.0 + 8.0 * 59.0 * 5.0;
    let link = LinkProfile::symmetric(budget / 0.1).unwrap();
    let run = simulate_stream(&kb, &chunks, &link, &stream_cfg(8), predictor()).unwrap();
    for c in &run.chunks {
        assert_eq!(c.nf, 60);
        assert_eq!(c.payload_bits, 8 * 20 + 8 * 59 * 5);
        assert_eq!(c.wire_bytes, 13 + 3 + 160 + (c.payload_bits as usize).div_ceil(8));
        assert_eq!(c.dynamic_dims, vec![0, 1, 2, 3, 4]);
    }
    let first_predicted = run.frames.iter().find(|f| !f.transmitted).unwrap();
    assert_eq!((first_predicted.chunk, first_predicted.frame), (0, 61));
    assert_eq!(run.frames.len(), 200);
}

#[test]
fn transmitted_frames_beat_predicted_frames() {
    let cfg = small_bench();
    let link = LinkProfile::symmetric(15000.0).unwrap();
    for seed in 0..5 {
        let (kb, chunks) = cfg.scenario(seed).unwrap();
        let run = simulate_stream(&kb, &chunks, &link, &stream_cfg(8), predictor()).unwrap();
        for c in 0..chunks.len() {
            let pick = |t: bool| -> Vec<f64> {
                run.frames.iter().filter(|f| f.chunk == c && f.transmitted == t).map(|f| f.psnr_db).collect()
            };
            assert!(mean(&pick(true)) >= mean(&pick(false)), "seed {seed} chunk {c}");
        }
    }
}

#[test]
fn infeasible_chunk_is_skipped_not_fatal() {
    let cfg = small_bench();
    let (kb, chunks) = cfg.scenario(1).unwrap();
    // 2000 bits for chunk 0, then 100 bits (below Q·M = 160) from t = 0.1 on
    let link = LinkProfile::symmetric(20000.0).unwrap().with_trace(vec![(0.05, 1000.0)]).unwrap();
    let run = simulate_stream(&kb, &chunks, &link, &stream_cfg(8), &HoldLast).unwrap();
    assert_eq!(run.chunks[0].budget_bits, 2000.0);
    assert_eq!(run.chunks[1].budget_bits, 100.0);
    assert_eq!(run.chunks[1].nf, 0);
    assert!(run.chunks[1].diagnostic.as_deref().unwrap().contains("160"));
    assert!(run.frames.iter().filter(|f| f.chunk == 1).all(|f| !f.transmitted && f.psnr_db.is_finite()));
}

#[test]
fn header_accounting_reduces_frames() {
    let cfg = small_bench();
    let (kb, chunks) = cfg.scenario(3).unwrap();
    let link = LinkProfile::symmetric(30000.0).unwrap();
    let plain = simulate_stream(&kb, &chunks, &link, &stream_cfg(8), &HoldLast).unwrap();
    let strict = StreamConfig { count_header_bits: true, ..stream_cfg(8) };
    let charged = simulate_stream(&kb, &chunks, &link, &strict, &HoldLast).unwrap();
    assert_eq!(plain.chunks[0].nf, (3000 - 160) / 40 + 1);
    assert_eq!(charged.chunks[0].nf, (3000 - 1408 - 160) / 40 + 1);
}

#[test]
fn predictor_dimension_mismatch_is_reported() {
    let cfg = small_bench();
    let (kb, chunks) = cfg.scenario(3).unwrap();
    let link = LinkProfile::symmetric(15000.0).unwrap();
    let err = simulate_stream(&kb, &chunks, &link, &StreamConfig { m_dyn: 4, ..stream_cfg(8) }, predictor());
    assert_eq!(err.unwrap_err(), NetsimError::PredictorDims { chunk: 0, predictor: 5, dynamic: 4 });
    let ragged = vec![chunks[0].clone(), gen_trajectory(0, 19, 100, &[0], 0.0).unwrap()];
    assert!(matches!(
        simulate_stream(&kb, &ragged, &link, &stream_cfg(8), &HoldLast),
        Err(NetsimError::ChunkShape { chunk: 1, .. })
    ));
}

#[test]
fn sweep_shape_and_determinism() {
    let kb = gen_synthetic_kb(5, 8, 16, 16).unwrap();
    let chunks: Vec<ExpressionChunk> = (0..2).map(|s| gen_trajectory(s, 8, 40, &[0, 1], 0.001).unwrap()).collect();
    let cfg = StreamConfig { q: 8, m_dyn: 2, ..StreamConfig::default() };
    let rates: Vec<f64> = (1..=8).map(|k| 700.0 * k as f64).collect();
    let rows = sweep_rate(&kb, &chunks, &rates, &cfg, &HoldLast).unwrap();
    assert_eq!(rows.len(), 24);
    for scheme in Scheme::ALL {
        let nfs: Vec<usize> = rows.iter().filter(|r| r.scheme == scheme).map(|r| r.nf).collect();
        assert!(nfs.windows(2).all(|w| w[0] <= w[1]), "{scheme}: {nfs:?}");
    }
    let again = sweep_rate(&kb, &chunks, &rates, &cfg, &HoldLast).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    write_sweep_csv(&mut a, &rows).unwrap();
    write_sweep_csv(&mut b, &again).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 25);
    assert_eq!(sweep_rate(&kb, &chunks, &rates[..1], &cfg, &HoldLast), Err(NetsimError::TooFewRates));

    let run = simulate_stream(&kb, &chunks, &LinkProfile::symmetric(3000.0).unwrap(), &cfg, &HoldLast).unwrap();
    let mut csv = Vec::new();
    write_frames_csv(&mut csv, &run.frames).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 81);
}
