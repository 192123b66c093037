use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use secom_core::face::{gen_trajectory, ExpressionChunk, ExpressionFrame};
use secom_core::oracle::{central_difference, max_relative_error};
use secom_core::predictor::{
    baseline_hold_last, decode_predictor, encode_predictor, loss_and_gradient, one_step_mse, train_predictor,
    windows, FramePredictor, FrameStats, PredictorConfig, PredictorError, PredictorModel,
};
use secom_core::stats::spearman;

const DYN: [usize; 5] = [0, 1, 2, 3, 4];

fn sinusoids(seeds: std::ops::Range<u64>) -> Vec<ExpressionChunk> {
    seeds.map(|s| gen_trajectory(s, 20, 100, &DYN, 0.001).unwrap().select(&DYN)).collect()
}

fn bench_config() -> PredictorConfig {
    PredictorConfig { hidden: 32, window: 10, epochs: 40, step_size: 0.01, batch_size: 32, seed: 5 }
}

fn frame_mse(a: &ExpressionFrame, b: &ExpressionFrame) -> f64 {
    a.0.iter().zip(&b.0).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.0.len() as f64
}

fn rollout_errors(p: &dyn FramePredictor, chunk: &ExpressionChunk, nf: usize) -> Vec<f64> {
    let frames = chunk.frames();
    let out = p.predict(&frames[..nf], frames.len() - nf);
    out.iter().zip(&frames[nf..]).map(|(a, b)| frame_mse(a, b)).collect()
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let seqs: Vec<ExpressionChunk> = (0..2)
        .map(|_| {
            let frames = (0..7).map(|_| ExpressionFrame(vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])).collect();
            ExpressionChunk::new(frames).unwrap()
        })
        .collect();
    let stats = FrameStats::from_sequences(&seqs).unwrap();
    let mut model = PredictorModel::init(4, 3, stats, &mut rng);
    // move biases and read-out away from their special initial values
    let perturbed: Vec<f64> = model.params().iter().map(|p| p + rng.random_range(-0.3..0.3)).collect();
    model.set_params(&perturbed);
    let ws = windows(&model, &seqs);
    assert_eq!(ws.len(), 8);
    let (_, analytic) = loss_and_gradient(&model, &ws);
    let numeric = central_difference(
        |p| {
            let mut m = model.clone();
            m.set_params(p);
            loss_and_gradient(&m, &ws).0
        },
        model.params(),
        1e-5,
    );
    let scale = analytic.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let err = max_relative_error(&analytic, &numeric, 1e-3 * scale);
    assert!(err <= 1e-3, "relative error {err}");
}

#[test]
fn zero_epochs_returns_initial_model() {
    let seqs = sinusoids(0..2);
    let cfg = PredictorConfig { epochs: 0, hidden: 4, window: 3, ..PredictorConfig::default() };
    let out = train_predictor(&seqs, &cfg).unwrap();
    assert_eq!(out.trace.len(), 1);
    assert!(out.trace[0].is_finite());
}

#[test]
fn constant_sequences_are_learned() {
    let seqs: Vec<ExpressionChunk> = [0.2, 0.5, 0.8]
        .iter()
        .map(|&c| ExpressionChunk::new(vec![ExpressionFrame(vec![c, 1.0 - c]); 30]).unwrap())
        .collect();
    let cfg = PredictorConfig { hidden: 8, window: 5, epochs: 60, ..PredictorConfig::default() };
    let out = train_predictor(&seqs, &cfg).unwrap();
    assert!(one_step_mse(&out.model, &seqs) <= 1e-4);
    let seed = vec![ExpressionFrame(vec![0.5, 0.5]); 5];
    for f in out.model.predict(&seed, 20) {
        assert!((f.0[0] - 0.5).abs() <= 1e-3 && (f.0[1] - 0.5).abs() <= 1e-3, "{:?}", f.0);
    }
    assert!(out.model.predict(&seed, 0).is_empty());
}

#[test]
fn training_faults() {
    let seqs = sinusoids(0..1);
    let cfg = PredictorConfig { window: 100, ..PredictorConfig::default() };
    assert_eq!(
        train_predictor(&seqs, &cfg).unwrap_err(),
        PredictorError::SequenceTooShort { index: 0, len: 100, window: 100 }
    );
    assert_eq!(train_predictor(&[], &PredictorConfig::default()).unwrap_err(), PredictorError::NoSequences);
    let mut frames = seqs[0].frames().to_vec();
    frames[40].0[2] = f64::NAN;
    let bad = [ExpressionChunk::new(frames).unwrap()];
    let cfg = PredictorConfig { hidden: 4, window: 3, ..PredictorConfig::default() };
    assert_eq!(train_predictor(&bad, &cfg).unwrap_err(), PredictorError::NonFiniteLoss { epoch: 0 });
}

#[test]
fn training_is_deterministic_and_round_trips() {
    let seqs = sinusoids(0..3);
    let cfg = PredictorConfig { hidden: 8, epochs: 3, ..bench_config() };
    let a = train_predictor(&seqs, &cfg).unwrap();
    let b = train_predictor(&seqs, &cfg).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.trace, b.trace);
    assert!(a.trace.last().unwrap() < &a.trace[0]);
    let bytes = encode_predictor(&a.model).unwrap();
    assert_eq!(&bytes[..4], b"RNNP");
    assert_eq!(bytes.len(), 12 + 4 * (4 * 5 + PredictorModel::param_count(5, 8)));
    let back = decode_predictor(&bytes).unwrap();
    assert_eq!(encode_predictor(&back).unwrap(), bytes);
    assert!(decode_predictor(&bytes[..bytes.len() - 2]).is_err());
}

#[test]
fn beats_hold_last_and_error_accumulates() {
    let out = train_predictor(&sinusoids(100..124), &bench_config()).unwrap();
    let test = sinusoids(0..20);
    let mut lstm_curve = vec![0.0; 40];
    let mut hold_curve = vec![0.0; 40];
    for chunk in &test {
        let seed = &chunk.frames()[..60];
        let l = rollout_errors(&out.model, chunk, 60);
        let h: Vec<f64> = baseline_hold_last(seed, 40).iter().zip(&chunk.frames()[60..]).map(|(a, b)| frame_mse(a, b)).collect();
        for k in 0..40 {
            lstm_curve[k] += l[k] / test.len() as f64;
            hold_curve[k] += h[k] / test.len() as f64;
        }
    }
    for horizon in [1, 5, 10, 20, 40] {
        let l: f64 = lstm_curve[..horizon].iter().sum::<f64>() / horizon as f64;
        let h: f64 = hold_curve[..horizon].iter().sum::<f64>() / horizon as f64;
        println!("horizon {horizon}: lstm {l:.3e} hold {h:.3e}");
        assert!(l <= h, "horizon {horizon}: lstm {l} > hold-last {h}");
    }
    let idx: Vec<f64> = (0..40).map(|k| k as f64).collect();
    let rho = spearman(&idx, &lstm_curve);
    println!("trace {:?}\nspearman {rho}", out.trace);
    assert!(rho > 0.0);
}
