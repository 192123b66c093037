//! Chunk text files: one frame per line, coefficients separated by commas. Blank
//! lines and lines starting with `#` are ignored.

use secom_core::face::{ExpressionChunk, ExpressionFrame};

pub fn parse_chunk(text: &str) -> Result<ExpressionChunk, String> {
    let mut frames = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let values = s
            .split(',')
            .map(|v| {
                let v = v.trim();
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| format!("line {}: `{v}` is not a finite number", i + 1))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = frames.first().map(|f: &ExpressionFrame| f.dims()) {
            if values.len() != first {
                return Err(format!("line {}: {} values, expected {first}", i + 1, values.len()));
            }
        }
        frames.push(ExpressionFrame(values));
    }
    ExpressionChunk::new(frames).map_err(|e| e.to_string())
}

pub fn format_frames(frames: &[ExpressionFrame]) -> String {
    let mut out = String::new();
    for f in frames {
        let line: Vec<String> = f.0.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
