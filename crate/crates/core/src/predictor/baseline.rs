use super::FramePredictor;
use crate::face::ExpressionFrame;

/// Repeats the last received frame.
pub fn baseline_hold_last(seed_frames: &[ExpressionFrame], horizon: usize) -> Vec<ExpressionFrame> {
    match seed_frames.last() {
        Some(last) => vec![last.clone(); horizon],
        None => Vec::new(),
    }
}

/// Extrapolates each dimension along the line through the last two frames; with a
/// single frame this is [`baseline_hold_last`].
pub fn baseline_linear(seed_frames: &[ExpressionFrame], horizon: usize) -> Vec<ExpressionFrame> {
    let [.., prev, last] = seed_frames else {
        return baseline_hold_last(seed_frames, horizon);
    };
    (1..=horizon)
        .map(|k| {
            let k = k as f64;
            ExpressionFrame(last.0.iter().zip(&prev.0).map(|(l, p)| l + k * (l - p)).collect())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HoldLast;

impl FramePredictor for HoldLast {
    fn predict(&self, seed_frames: &[ExpressionFrame], horizon: usize) -> Vec<ExpressionFrame> {
        baseline_hold_last(seed_frames, horizon)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LinearExtrapolation;

impl FramePredictor for LinearExtrapolation {
    fn predict(&self, seed_frames: &[ExpressionFrame], horizon: usize) -> Vec<ExpressionFrame> {
        baseline_linear(seed_frames, horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> Vec<ExpressionFrame> {
        (0..n).map(|i| ExpressionFrame(vec![0.1 * i as f64, 1.0 - 0.05 * i as f64])).collect()
    }

    #[test]
    fn hold_last_examples() {
        let constant = vec![ExpressionFrame(vec![0.3, 0.7]); 4];
        assert!(baseline_hold_last(&constant, 5).iter().all(|f| f.0 == vec![0.3, 0.7]));
        assert!(baseline_hold_last(&constant, 0).is_empty());
        let out = baseline_hold_last(&ramp(3), 4);
        for (k, f) in out.iter().enumerate() {
            let err = (f.0[0] - 0.1 * (3 + k) as f64).abs();
            assert!((err - 0.1 * (k + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_examples() {
        let out = baseline_linear(&ramp(5), 6);
        for (k, f) in out.iter().enumerate() {
            let i = (5 + k) as f64;
            assert!((f.0[0] - 0.1 * i).abs() < 1e-12 && (f.0[1] - (1.0 - 0.05 * i)).abs() < 1e-12);
        }
        let constant = vec![ExpressionFrame(vec![0.4]); 3];
        assert!(baseline_linear(&constant, 3).iter().all(|f| f.0 == vec![0.4]));
        let single = vec![ExpressionFrame(vec![0.2, 0.9])];
        assert_eq!(baseline_linear(&single, 2), baseline_hold_last(&single, 2));
        assert!(baseline_linear(&[], 2).is_empty());
    }
}
