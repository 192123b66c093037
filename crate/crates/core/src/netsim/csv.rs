use std::io::{self, Write};

use super::{Architecture, FrameRecord, LatencyBreakdown, SweepRow};

pub fn write_sweep_csv(mut out: impl Write, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(out, "scheme,rate_bps,budget_bits,Nf,mean_psnr_db")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.scheme, r.rate_bps, r.budget_bits, r.nf, r.mean_psnr_db)?;
    }
    Ok(())
}

pub fn write_frames_csv(mut out: impl Write, frames: &[FrameRecord]) -> io::Result<()> {
    writeln!(out, "chunk,frame,transmitted,psnr_db")?;
    for f in frames {
        writeln!(out, "{},{},{},{}", f.chunk, f.frame, u8::from(f.transmitted), f.psnr_db)?;
    }
    Ok(())
}

pub fn write_latency_csv(mut out: impl Write, rows: &[(Architecture, LatencyBreakdown)]) -> io::Result<()> {
    writeln!(out, "arch,deploy_s,uplink_s,compute_s,downlink_s,total_s")?;
    for (arch, b) in rows {
        writeln!(out, "{arch},{},{},{},{},{}", b.deploy_s, b.uplink_s, b.compute_s, b.downlink_s, b.total_s)?;
    }
    Ok(())
}
