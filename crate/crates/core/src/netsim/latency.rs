use std::fmt;
use std::str::FromStr;

use super::{LinkProfile, NetsimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    /// Everything rendered on the end device.
    Local,
    /// View information goes up, the rendered image comes back.
    Edge,
    /// The device renders a share, intermediate features go up, the image comes back.
    Co,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [Architecture::Local, Architecture::Edge, Architecture::Co];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Local => "local",
            Architecture::Edge => "edge",
            Architecture::Co => "co",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| format!("unknown architecture `{s}`"))
    }
}

/// Cost-model inputs. Work is in abstract units, rates in units/s and bits/s.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderWorkload {
    pub model_bits: f64,
    pub viewinfo_bits: f64,
    pub image_bits: f64,
    pub intermediate_bits: f64,
    pub device_compute_rate: f64,
    pub server_compute_rate: f64,
    pub render_work_device: f64,
    pub render_work_server: f64,
    /// Fraction of the rendering done on the device under co-rendering.
    pub co_device_share: f64,
}

impl RenderWorkload {
    /// Splat rendering proxy: work = gaussians × pixels on either side.
    pub fn splat(gaussians: usize, height: usize, width: usize) -> Self {
        let pixels = (height * width) as f64;
        let work = gaussians as f64 * pixels;
        Self {
            model_bits: crate::splat::model_size_bytes(gaussians) as f64 * 8.0,
            viewinfo_bits: 12.0 * 32.0,
            image_bits: pixels * 24.0,
            intermediate_bits: pixels * 24.0,
            device_compute_rate: 1e8,
            server_compute_rate: 1e10,
            render_work_device: work,
            render_work_server: work,
            co_device_share: 0.5,
        }
    }

    /// Blendshape rendering proxy: work = (M + 1) × pixels.
    pub fn blendshape(m: usize, height: usize, width: usize) -> Self {
        let pixels = (height * width) as f64;
        let work = (m + 1) as f64 * pixels;
        Self {
            model_bits: (m + 1) as f64 * pixels * 3.0 * 32.0,
            viewinfo_bits: m as f64 * 32.0,
            render_work_device: work,
            render_work_server: work,
            ..Self::splat(0, height, width)
        }
    }

    fn validate(&self) -> Result<(), NetsimError> {
        let fields = [
            ("model_bits", self.model_bits),
            ("viewinfo_bits", self.viewinfo_bits),
            ("image_bits", self.image_bits),
            ("intermediate_bits", self.intermediate_bits),
            ("device_compute_rate", self.device_compute_rate),
            ("server_compute_rate", self.server_compute_rate),
            ("render_work_device", self.render_work_device),
            ("render_work_server", self.render_work_server),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(NetsimError::Workload(format!("{name} must be finite and non-negative, got {v}")));
        }
        if !(0.0..=1.0).contains(&self.co_device_share) {
            return Err(NetsimError::Workload(format!("co_device_share must be in [0, 1], got {}", self.co_device_share)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyBreakdown {
    pub deploy_s: f64,
    pub uplink_s: f64,
    pub compute_s: f64,
    pub downlink_s: f64,
    pub total_s: f64,
}

impl LatencyBreakdown {
    fn new(deploy_s: f64, uplink_s: f64, compute_s: f64, downlink_s: f64) -> Self {
        Self { deploy_s, uplink_s, compute_s, downlink_s, total_s: deploy_s + uplink_s + compute_s + downlink_s }
    }
}

fn compute_time(which: &'static str, work: f64, rate: f64) -> Result<f64, NetsimError> {
    match (work, rate) {
        (w, _) if w == 0.0 => Ok(0.0),
        (w, r) if r == 0.0 => Err(NetsimError::ZeroComputeRate { which, work: w }),
        (w, r) => Ok(w / r),
    }
}

/// Per-frame latency of an architecture. Each link crossing pays one propagation
/// delay, booked with the uplink or downlink term it belongs to.
pub fn latency(
    arch: Architecture,
    w: &RenderWorkload,
    link: &LinkProfile,
    model_deployed: bool,
) -> Result<LatencyBreakdown, NetsimError> {
    w.validate()?;
    let (up, down, prop) = (link.uplink_rate(), link.downlink_rate(), link.propagation_delay());
    let deploy = |bits: f64| if model_deployed { 0.0 } else { bits / down };
    Ok(match arch {
        Architecture::Local => LatencyBreakdown::new(
            deploy(w.model_bits),
            0.0,
            compute_time("device", w.render_work_device, w.device_compute_rate)?,
            0.0,
        ),
        Architecture::Edge => LatencyBreakdown::new(
            0.0,
            w.viewinfo_bits / up + prop,
            compute_time("server", w.render_work_server, w.server_compute_rate)?,
            w.image_bits / down + prop,
        ),
        Architecture::Co => {
            let s = w.co_device_share;
            let device = compute_time("device", s * w.render_work_device, w.device_compute_rate)?;
            let server = compute_time("server", (1.0 - s) * w.render_work_server, w.server_compute_rate)?;
            LatencyBreakdown::new(
                deploy(s * w.model_bits),
                w.intermediate_bits / up + prop,
                device + server,
                w.image_bits / down + prop,
            )
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn workload() -> RenderWorkload {
        RenderWorkload {
            model_bits: 8e6,
            viewinfo_bits: 384.0,
            image_bits: 24.0 * 4096.0,
            intermediate_bits: 5e4,
            device_compute_rate: 1e6,
            server_compute_rate: 1e9,
            render_work_device: 1e6,
            render_work_server: 1e6,
            co_device_share: 0.3,
        }
    }

    #[test]
    fn local_deployed_is_pure_compute() {
        let link = LinkProfile::new(1e6, 1e7, 0.01).unwrap();
        let b = latency(Architecture::Local, &workload(), &link, true).unwrap();
        assert_eq!(b, LatencyBreakdown { deploy_s: 0.0, uplink_s: 0.0, compute_s: 1.0, downlink_s: 0.0, total_s: 1.0 });
        let b = latency(Architecture::Local, &workload(), &link, false).unwrap();
        assert!((b.deploy_s - 0.8).abs() < 1e-15);
    }

    #[test]
    fn edge_without_work_is_communication_only() {
        let link = LinkProfile::new(1e6, 1e7, 0.01).unwrap();
        let w = RenderWorkload { render_work_server: 0.0, server_compute_rate: 0.0, ..workload() };
        let b = latency(Architecture::Edge, &w, &link, true).unwrap();
        assert_eq!(b.compute_s, 0.0);
        let comm = 384.0 / 1e6 + 24.0 * 4096.0 / 1e7 + 0.02;
        assert!((b.total_s - comm).abs() < 1e-15);
    }

    #[test]
    fn co_with_no_device_share_matches_edge() {
        let link = LinkProfile::new(2e6, 3e7, 0.005).unwrap();
        let w = RenderWorkload { co_device_share: 0.0, intermediate_bits: 384.0, ..workload() };
        let co = latency(Architecture::Co, &w, &link, false).unwrap();
        let edge = latency(Architecture::Edge, &w, &link, false).unwrap();
        assert_eq!(co.total_s, edge.total_s);
    }

    #[test]
    fn zero_rate_with_work_is_a_fault() {
        let link = LinkProfile::symmetric(1e6).unwrap();
        let w = RenderWorkload { device_compute_rate: 0.0, ..workload() };
        assert_eq!(
            latency(Architecture::Local, &w, &link, true),
            Err(NetsimError::ZeroComputeRate { which: "device", work: 1e6 })
        );
        let w = RenderWorkload { image_bits: -1.0, ..workload() };
        assert!(matches!(latency(Architecture::Edge, &w, &link, true), Err(NetsimError::Workload(_))));
    }

    #[test]
    fn names_round_trip() {
        for a in Architecture::ALL {
            assert_eq!(a.name().parse::<Architecture>(), Ok(a));
        }
        assert!("cloud".parse::<Architecture>().is_err());
    }
}
