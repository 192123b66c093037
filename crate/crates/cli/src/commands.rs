use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use secom_core::codec::{classify_features, coefficient_budget, decode_chunk, encode_chunk};
use secom_core::fed::scene::quadrant_scene;
use secom_core::fed::{run_hier_fed, FedHistory};
use secom_core::netsim::{
    latency, simulate_stream, sweep_rate, write_frames_csv, write_latency_csv, write_sweep_csv, Architecture,
    Benchmark, StreamConfig,
};
use secom_core::splat::{encode_model, load_model, render, CameraPose};

use crate::chunkfile::{format_frames, parse_chunk};
use crate::config::ConfigError;
use crate::experiment::ExperimentConfig;
use crate::output::Outputs;
use crate::CliError;

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))
}

fn history_csv(h: &FedHistory) -> String {
    let mut s = String::from("outer_round,global_loss,total_uplink_bits,total_compute_units,round_latency_s\n");
    for r in &h.rounds {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.outer_round, r.global_loss, r.total_uplink_bits, r.total_compute_units, r.round_latency_s
        );
    }
    s
}

fn ledger_csv(h: &FedHistory) -> String {
    let mut s = String::from("node,uplink_bits,downlink_bits,compute_units\n");
    let rows = h
        .ledger
        .devices
        .iter()
        .enumerate()
        .map(|(i, u)| (format!("device{i}"), u))
        .chain(h.ledger.edges.iter().enumerate().map(|(i, u)| (format!("edge{i}"), u)))
        .chain(std::iter::once(("cloud".to_string(), &h.ledger.cloud)));
    for (name, u) in rows {
        let _ = writeln!(s, "{name},{},{},{}", u.uplink_bits, u.downlink_bits, u.compute_units);
    }
    s
}

/// Hierarchical federated training on the synthetic quadrant scene.
pub fn train_fed(exp: &ExperimentConfig) -> Result<String, CliError> {
    let (topology, _) = quadrant_scene(&exp.scene);
    let history = run_hier_fed(&topology, exp.schedule, &exp.fed).map_err(runtime)?;
    Outputs::run(|o| {
        o.write(exp.out.join("history.csv"), history_csv(&history).as_bytes())?;
        o.write(exp.out.join("ledger.csv"), ledger_csv(&history).as_bytes())?;
        o.write(exp.out.join("global_model.splt"), &encode_model(&history.global_model))?;
        Ok(())
    })?;
    let first = history.rounds.first().map_or(f64::NAN, |r| r.global_loss);
    let last = history.rounds.last().map_or(f64::NAN, |r| r.global_loss);
    Ok(format!(
        "trained {} outer rounds: global loss {first} -> {last}, {} gaussians, {} uplink bits\n",
        exp.schedule.outer_iters,
        history.global_model.size(),
        history.ledger.total_uplink_bits()
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderArgs {
    pub model: PathBuf,
    pub eye: [f64; 3],
    pub target: [f64; 3],
    pub up: [f64; 3],
    pub focal: f64,
    pub height: usize,
    pub width: usize,
    pub output: PathBuf,
}

/// Renders one view of a model file to a binary PPM.
pub fn render_view(args: &RenderArgs) -> Result<String, CliError> {
    let model = load_model(&args.model).map_err(|e| CliError::Runtime(format!("{}: {e}", args.model.display())))?;
    let v = |a: [f64; 3]| Vector3::new(a[0], a[1], a[2]);
    let cam = CameraPose::look_at(v(args.eye), v(args.target), v(args.up), args.focal, args.height, args.width)
        .map_err(|e| CliError::Config(ConfigError::general(format!("camera: {e}"))))?;
    let img = render(&model, &cam, [0.0; 3]).map_err(runtime)?;
    let mut bytes = Vec::new();
    img.write_ppm(&mut bytes).map_err(runtime)?;
    Outputs::run(|o| o.write(&args.output, &bytes))?;
    Ok(format!("rendered {} gaussians to {}\n", model.size(), args.output.display()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodeArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    pub q: Option<u32>,
    pub m_dyn: Option<usize>,
    pub budget_bits: Option<f64>,
}

/// Chunk text file to wire bytes.
pub fn encode(exp: &ExperimentConfig, args: &EncodeArgs) -> Result<String, CliError> {
    let text = String::from_utf8(read(&args.input)?).map_err(|_| runtime("chunk file is not UTF-8"))?;
    let chunk = parse_chunk(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", args.input.display())))?;
    let q = args.q.unwrap_or(exp.bench.q);
    let m_dyn = args.m_dyn.unwrap_or(exp.bench.m_dyn);
    if m_dyn > chunk.dims() {
        return Err(CliError::Config(ConfigError::general(format!(
            "m_dyn = {m_dyn} exceeds the chunk's {} dimensions",
            chunk.dims()
        ))));
    }
    let budget = match (args.budget_bits, exp.rate) {
        (Some(b), _) => b,
        (None, Some(rate)) => exp.bench.tau * rate,
        (None, None) => {
            return Err(CliError::Config(ConfigError::general(
                "missing required key `rate` in [stream] (or pass --budget-bits)",
            )))
        }
    };
    let budget = coefficient_budget(budget, chunk.dims(), exp.count_header_bits);
    let dims = classify_features(&chunk, m_dyn);
    let enc = encode_chunk(&chunk, &dims, q, budget).map_err(runtime)?;
    let bytes = enc.to_bytes();
    Outputs::run(|o| o.write(&args.output, &bytes))?;
    Ok(format!(
        "encoded N = {}, Nf = {}, M = {}, M_dyn = {}, Q = {q}: {} payload bits, {} bytes\n",
        enc.plan.n,
        enc.plan.nf,
        enc.plan.m,
        enc.plan.m_dyn(),
        enc.payload_bits,
        bytes.len()
    ))
}

/// Wire bytes to the decoded frames as a chunk text file.
pub fn decode(input: &Path, output: &Path) -> Result<String, CliError> {
    let dec = decode_chunk(&read(input)?).map_err(|e| CliError::Runtime(format!("{}: {e}", input.display())))?;
    Outputs::run(|o| o.write(output, format_frames(&dec.frames).as_bytes()))?;
    Ok(format!("decoded {} of {} frames\n", dec.nf(), dec.n))
}

fn stream_config(exp: &ExperimentConfig) -> StreamConfig {
    StreamConfig { count_header_bits: exp.count_header_bits, ..exp.bench.stream_config() }
}

/// One streaming run of the synthetic benchmark.
pub fn simulate(exp: &ExperimentConfig) -> Result<String, CliError> {
    let link = exp.stream_link()?;
    let bench = Benchmark::build(&exp.bench, exp.seed).map_err(runtime)?;
    let run = simulate_stream(&bench.kb, &bench.chunks, &link, &stream_config(exp), &bench.predictor).map_err(runtime)?;
    let mut frames = Vec::new();
    write_frames_csv(&mut frames, &run.frames).map_err(runtime)?;
    let mut chunks = String::from("chunk,budget_bits,Nf,payload_bits,wire_bytes,diagnostic\n");
    for c in &run.chunks {
        let _ = writeln!(
            chunks,
            "{},{},{},{},{},{}",
            c.chunk,
            c.budget_bits,
            c.nf,
            c.payload_bits,
            c.wire_bytes,
            c.diagnostic.as_deref().unwrap_or("").replace(',', ";")
        );
    }
    Outputs::run(|o| {
        o.write(exp.out.join("frames.csv"), &frames)?;
        o.write(exp.out.join("chunks.csv"), chunks.as_bytes())
    })?;
    let skipped = run.chunks.iter().filter(|c| c.nf == 0).count();
    Ok(format!(
        "streamed {} chunks ({skipped} skipped): mean PSNR {:.4} dB\n",
        run.chunks.len(),
        run.mean_psnr()
    ))
}

/// PSNR-versus-rate sweep over all schemes.
pub fn sweep(exp: &ExperimentConfig) -> Result<String, CliError> {
    let rates = exp.sweep_rates()?;
    let bench = Benchmark::build(&exp.bench, exp.seed).map_err(runtime)?;
    let rows = sweep_rate(&bench.kb, &bench.chunks, rates, &stream_config(exp), &bench.predictor).map_err(runtime)?;
    let mut csv = Vec::new();
    write_sweep_csv(&mut csv, &rows).map_err(runtime)?;
    Outputs::run(|o| o.write(exp.out.join("sweep.csv"), &csv))?;
    let mut s = String::new();
    for r in &rows {
        let _ = writeln!(s, "{:>14} rate {:>10} Nf {:>3} PSNR {:.3} dB", r.scheme.name(), r.rate_bps, r.nf, r.mean_psnr_db);
    }
    Ok(s)
}

/// Latency breakdown of every rendering architecture.
pub fn latency_table(exp: &ExperimentConfig) -> Result<String, CliError> {
    let rows = Architecture::ALL
        .iter()
        .map(|&a| latency(a, &exp.workload, &exp.link, exp.model_deployed).map(|b| (a, b)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(runtime)?;
    let mut csv = Vec::new();
    write_latency_csv(&mut csv, &rows).map_err(runtime)?;
    Outputs::run(|o| o.write(exp.out.join("latency.csv"), &csv))?;
    let mut s = String::new();
    for (a, b) in &rows {
        let _ = writeln!(s, "{:>5}: {:.6} s", a.name(), b.total_s);
    }
    Ok(s)
}
