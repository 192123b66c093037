//! Typed experiment configuration assembled from a [`Config`].

use std::path::PathBuf;

use secom_core::fed::scene::SceneConfig;
use secom_core::fed::{FedConfig, FedSchedule};
use secom_core::netsim::{BenchmarkConfig, LinkProfile, RenderWorkload};
use secom_core::predictor::PredictorConfig;

use crate::config::{Config, ConfigError};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub scene: SceneConfig,
    pub schedule: FedSchedule,
    pub fed: FedConfig,
    pub bench: BenchmarkConfig,
    pub count_header_bits: bool,
    /// Constant streaming rate for `simulate`, bits/s.
    pub rate: Option<f64>,
    /// `(time s, rate bits/s)` steps applied on top of `rate`.
    pub trace: Vec<(f64, f64)>,
    pub rates: Option<Vec<f64>>,
    pub link: LinkProfile,
    pub workload: RenderWorkload,
    pub model_deployed: bool,
}

struct Checker<'a> {
    cfg: &'a Config,
}

impl Checker<'_> {
    fn check(&self, ok: bool, section: &str, key: &str, message: impl Into<String>) -> Result<(), ConfigError> {
        if ok {
            return Ok(());
        }
        let message = message.into();
        Err(match self.cfg.line_of(section, key) {
            Some(line) => ConfigError::at(line, message),
            None => ConfigError::general(message),
        })
    }
}

fn parse_trace(cfg: &mut Config) -> Result<Vec<(f64, f64)>, ConfigError> {
    let Some((raw, line)) = cfg.raw("stream", "trace") else {
        return Ok(Vec::new());
    };
    raw.split(',')
        .map(|item| {
            let (t, r) = item.trim().split_once(':').ok_or_else(|| {
                ConfigError::at(line, format!("`trace` in [stream]: expected `time:rate`, got `{}`", item.trim()))
            })?;
            match (t.trim().parse::<f64>(), r.trim().parse::<f64>()) {
                (Ok(t), Ok(r)) => Ok((t, r)),
                _ => Err(ConfigError::at(line, format!("`trace` in [stream]: cannot parse `{}`", item.trim()))),
            }
        })
        .collect()
}

impl ExperimentConfig {
    pub fn from_text(text: &str, seed_override: Option<u64>) -> Result<Self, ConfigError> {
        let mut cfg = Config::parse(text)?;
        let exp = Self::from_config(&mut cfg, seed_override)?;
        cfg.reject_unused()?;
        Ok(exp)
    }

    /// Defaults for every key.
    pub fn defaults() -> Self {
        Self::from_text("", None).expect("defaults are valid")
    }

    fn from_config(cfg: &mut Config, seed_override: Option<u64>) -> Result<Self, ConfigError> {
        let seed = match seed_override {
            Some(s) => {
                cfg.get::<u64>("", "seed")?;
                s
            }
            None => cfg.get_or("", "seed", 0u64)?,
        };
        let out = PathBuf::from(cfg.get_or("", "out", String::from("out"))?);

        let d = SceneConfig::default();
        let devices = cfg.get_or("scene", "devices", d.devices)?;
        let edges = cfg.get_or("scene", "edges", d.edges)?;
        let edge_of = cfg.get_list::<usize>("scene", "association")?;
        let scene = SceneConfig {
            seed,
            devices,
            edges,
            gaussians_per_device: cfg.get_or("scene", "gaussians_per_device", d.gaussians_per_device)?,
            image_size: cfg.get_or("scene", "image_size", d.image_size)?,
            views_per_device: cfg.get_or("scene", "views_per_device", d.views_per_device)?,
            spacing: cfg.get_or("scene", "spacing", d.spacing)?,
            device_compute_rate: cfg.get_or("scene", "device_compute_rate", d.device_compute_rate)?,
            device_uplink_rate: cfg.get_or("scene", "device_uplink_rate", d.device_uplink_rate)?,
            edge_uplink_rate: cfg.get_or("scene", "edge_uplink_rate", d.edge_uplink_rate)?,
            estimate_transforms: cfg.get_or("scene", "estimate_transforms", d.estimate_transforms)?,
            edge_of: edge_of.clone(),
        };

        let steps = cfg.get_or("schedule", "local_steps", 20usize)?;
        let inner = cfg.get_or("schedule", "inner_rounds", 2usize)?;
        let outer = cfg.get_or("schedule", "outer_rounds", 3usize)?;
        let fd = FedConfig::default();
        let fed = FedConfig {
            step_size: cfg.get_or("fed", "step_size", fd.step_size)?,
            prune_threshold: cfg.get("fed", "prune_threshold")?,
        };

        let b = BenchmarkConfig::default();
        let p = PredictorConfig::default();
        let bench = BenchmarkConfig {
            m: cfg.get_or("stream", "m", b.m)?,
            m_dyn: cfg.get_or("stream", "m_dyn", b.m_dyn)?,
            q: cfg.get_or("stream", "q", b.q)?,
            n: cfg.get_or("stream", "n", b.n)?,
            chunks: cfg.get_or("stream", "chunks", b.chunks)?,
            noise_std: cfg.get_or("stream", "noise_std", b.noise_std)?,
            height: cfg.get_or("stream", "height", b.height)?,
            width: cfg.get_or("stream", "width", b.width)?,
            tau: cfg.get_or("stream", "tau", b.tau)?,
            train_sequences: cfg.get_or("stream", "train_sequences", b.train_sequences)?,
            predictor: PredictorConfig {
                hidden: cfg.get_or("predictor", "hidden", p.hidden)?,
                window: cfg.get_or("predictor", "window", p.window)?,
                epochs: cfg.get_or("predictor", "epochs", p.epochs)?,
                step_size: cfg.get_or("predictor", "step_size", p.step_size)?,
                batch_size: cfg.get_or("predictor", "batch_size", p.batch_size)?,
                seed,
            },
        };
        let count_header_bits = cfg.get_or("stream", "count_header_bits", false)?;
        let rate = cfg.get::<f64>("stream", "rate")?;
        let rates = cfg.get_list::<f64>("stream", "rates")?;
        let trace = parse_trace(cfg)?;

        let uplink = cfg.get_or("link", "uplink_rate", 1e6)?;
        let downlink = cfg.get_or("link", "downlink_rate", 1e7)?;
        let prop = cfg.get_or("link", "propagation_delay", 0.005)?;

        let kind = cfg.get_or("latency", "model", String::from("splat"))?;
        let lat_h = cfg.get_or("latency", "height", 64usize)?;
        let lat_w = cfg.get_or("latency", "width", 64usize)?;
        let mut workload = match kind.as_str() {
            "splat" => RenderWorkload::splat(cfg.get_or("latency", "gaussians", 1000usize)?, lat_h, lat_w),
            "blendshape" => RenderWorkload::blendshape(cfg.get_or("latency", "m", bench.m)?, lat_h, lat_w),
            other => {
                let line = cfg.line_of("latency", "model").unwrap_or(0);
                return Err(ConfigError::at(line, format!("`model` in [latency]: expected splat or blendshape, got `{other}`")));
            }
        };
        workload.device_compute_rate = cfg.get_or("latency", "device_compute_rate", workload.device_compute_rate)?;
        workload.server_compute_rate = cfg.get_or("latency", "server_compute_rate", workload.server_compute_rate)?;
        workload.intermediate_bits = cfg.get_or("latency", "intermediate_bits", workload.intermediate_bits)?;
        workload.co_device_share = cfg.get_or("latency", "co_device_share", workload.co_device_share)?;
        let model_deployed = cfg.get_or("latency", "model_deployed", false)?;

        let c = Checker { cfg };
        c.check(devices >= 1, "scene", "devices", "`devices` in [scene] must be at least 1")?;
        c.check(edges >= 1 && edges <= devices, "scene", "edges", "`edges` in [scene] must be in [1, devices]")?;
        if let Some(map) = &edge_of {
            c.check(map.len() == devices, "scene", "association", format!("`association` in [scene] needs {devices} entries"))?;
            c.check(map.iter().all(|&l| l < edges), "scene", "association", "`association` in [scene] names an edge out of range")?;
            c.check((0..edges).all(|l| map.contains(&l)), "scene", "association", "`association` in [scene] leaves an edge without devices")?;
        }
        c.check(scene.gaussians_per_device >= 1, "scene", "gaussians_per_device", "`gaussians_per_device` in [scene] must be at least 1")?;
        c.check(scene.image_size >= 1 && scene.views_per_device >= 1, "scene", "image_size", "image size and views per device must be at least 1")?;
        let schedule = FedSchedule::new(steps, inner, outer)
            .map_err(|e| ConfigError::general(format!("[schedule]: {e}")))?;
        c.check(fed.step_size.is_finite() && fed.step_size > 0.0, "fed", "step_size", "`step_size` in [fed] must be positive")?;

        c.check(bench.m >= 1, "stream", "m", "`m` in [stream] must be at least 1")?;
        c.check(bench.m_dyn <= bench.m, "stream", "m_dyn", format!("`m_dyn` in [stream] must not exceed m = {}", bench.m))?;
        c.check((2..=16).contains(&bench.q), "stream", "q", "`q` in [stream] must be in [2, 16]")?;
        c.check(bench.n > bench.predictor.window, "stream", "n", "`n` in [stream] must exceed the predictor window")?;
        c.check(bench.chunks >= 1, "stream", "chunks", "`chunks` in [stream] must be at least 1")?;
        c.check(bench.tau.is_finite() && bench.tau > 0.0, "stream", "tau", "`tau` in [stream] must be positive")?;
        c.check(bench.noise_std.is_finite() && bench.noise_std >= 0.0, "stream", "noise_std", "`noise_std` in [stream] must be non-negative")?;
        c.check(bench.height >= 1 && bench.width >= 1, "stream", "height", "image dimensions must be at least 1")?;
        c.check(bench.train_sequences >= 1, "stream", "train_sequences", "`train_sequences` in [stream] must be at least 1")?;
        c.check(bench.predictor.hidden >= 1 && bench.predictor.window >= 1 && bench.predictor.batch_size >= 1, "predictor", "hidden", "[predictor] sizes must be at least 1")?;
        c.check(bench.predictor.step_size.is_finite() && bench.predictor.step_size > 0.0, "predictor", "step_size", "`step_size` in [predictor] must be positive")?;
        if let Some(r) = rate {
            c.check(r.is_finite() && r > 0.0, "stream", "rate", "`rate` in [stream] must be positive")?;
        }
        if let Some(rs) = &rates {
            c.check(rs.len() >= 2, "stream", "rates", "`rates` in [stream] needs at least two values")?;
            c.check(rs.iter().all(|r| r.is_finite() && *r > 0.0), "stream", "rates", "`rates` in [stream] must be positive")?;
        }
        if let Err(e) = LinkProfile::symmetric(rate.unwrap_or(1.0)).and_then(|l| l.with_trace(trace.clone())) {
            c.check(false, "stream", "trace", format!("`trace` in [stream]: {e}"))?;
        }
        let link = LinkProfile::new(uplink, downlink, prop).map_err(|e| {
            let line = ["uplink_rate", "downlink_rate", "propagation_delay"].iter().find_map(|k| cfg.line_of("link", k));
            ConfigError { line, message: format!("[link]: {e}") }
        })?;
        c.check((0.0..=1.0).contains(&workload.co_device_share), "latency", "co_device_share", "`co_device_share` in [latency] must be in [0, 1]")?;

        Ok(Self {
            seed,
            out,
            scene,
            schedule,
            fed,
            bench,
            count_header_bits,
            rate,
            trace,
            rates,
            link,
            workload,
            model_deployed,
        })
    }

    /// Streaming link for `simulate`; fails when no rate is configured.
    pub fn stream_link(&self) -> Result<LinkProfile, ConfigError> {
        let rate = self.rate.ok_or_else(|| ConfigError::general("missing required key `rate` in [stream]"))?;
        LinkProfile::symmetric(rate)
            .and_then(|l| l.with_trace(self.trace.clone()))
            .map_err(|e| ConfigError::general(format!("[stream]: {e}")))
    }

    pub fn sweep_rates(&self) -> Result<&[f64], ConfigError> {
        self.rates.as_deref().ok_or_else(|| ConfigError::general("missing required key `rates` in [stream]"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let d = ExperimentConfig::defaults();
        assert_eq!(d.seed, 0);
        assert_eq!(d.bench.m, 20);
        assert!(d.sweep_rates().is_err());
        let e = ExperimentConfig::from_text("seed = 4\n[stream]\nq = 16\nrates = 1000, 2000\n", Some(9)).unwrap();
        assert_eq!(e.seed, 9);
        assert_eq!(e.scene.seed, 9);
        assert_eq!(e.bench.q, 16);
        assert_eq!(e.sweep_rates().unwrap(), &[1000.0, 2000.0]);
    }

    #[test]
    fn validation_points_at_lines() {
        let e = ExperimentConfig::from_text("[stream]\nm = 4\nm_dyn = 6\n", None).unwrap_err();
        assert_eq!(e.line, Some(3));
        let e = ExperimentConfig::from_text("[scene]\ndevices = 4\nedges = 2\nassociation = 0, 0, 0, 0\n", None).unwrap_err();
        assert_eq!(e.line, Some(4));
        let e = ExperimentConfig::from_text("[stream]\ntrace = 0:100, 0:200\n", None).unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = ExperimentConfig::from_text("[stream]\nrates = 1000\n", None).unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = ExperimentConfig::from_text("\n\n[bogus]\nx = 1\n", None).unwrap_err();
        assert_eq!(e.line, Some(4));
    }
}
