//! Link-level formulas and the per-step performance measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signal-to-noise ratio `g·P / (N0·w)`.
pub fn snr(gain: f64, tx_power_w: f64, noise_psd_w_per_hz: f64, bandwidth_hz: f64) -> f64 {
    debug_assert!(bandwidth_hz > 0.0);
    gain * tx_power_w / (noise_psd_w_per_hz * bandwidth_hz)
}

/// Shannon rate in bits/s, `w·log2(1 + SNR)`.
pub fn link_rate(bandwidth_hz: f64, snr: f64) -> f64 {
    if bandwidth_hz <= 0.0 {
        return 0.0;
    }
    bandwidth_hz * snr.ln_1p() / std::f64::consts::LN_2
}

/// Time average over slots of `(sum of active users' rates) / W`.
///
/// `slot_rate_sums[k]` is the summed instantaneous rate of every user served in slot `k`.
pub fn spectrum_efficiency(slot_rate_sums: &[f64], total_bandwidth_hz: f64) -> f64 {
    if slot_rate_sums.is_empty() {
        return 0.0;
    }
    slot_rate_sums.iter().sum::<f64>() / slot_rate_sums.len() as f64 / total_bandwidth_hz
}

/// Fraction of packets that met their SLA; 1.0 when nothing was due.
pub fn slice_ssr(delivered_ok: u64, total: u64) -> Result<f64> {
    if delivered_ok > total {
        return Err(Error::config(format!("{delivered_ok} successes out of {total} packets")));
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(delivered_ok as f64 / total as f64)
}

/// `alpha·se + Σ beta_n·ssr_n`.
pub fn system_utility(se: f64, ssr: &[f64], alpha: f64, beta: &[f64]) -> Result<f64> {
    if ssr.len() != beta.len() {
        return Err(Error::shape(format!("{} SSR values vs {} weights", ssr.len(), beta.len())));
    }
    Ok(alpha * se + ssr.iter().zip(beta).map(|(s, b)| s * b).sum::<f64>())
}

/// Packet accounting for one slice over one decision step.
///
/// `queued_start + arrived = delivered_ok + delivered_failed + dropped + queued_end`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SliceCounts {
    pub arrived: u64,
    pub delivered_ok: u64,
    /// Delivered but late, or served in a slot below the SLA rate.
    pub delivered_failed: u64,
    pub dropped: u64,
    pub queued_start: u64,
    pub queued_end: u64,
}

impl SliceCounts {
    /// Packets whose outcome was decided during the step.
    pub fn resolved(&self) -> u64 {
        self.delivered_ok + self.delivered_failed + self.dropped
    }

    pub fn is_conserved(&self) -> bool {
        self.queued_start + self.arrived == self.resolved() + self.queued_end
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub se: f64,
    pub ssr: Vec<f64>,
    pub utility: f64,
    pub delivered_bits: f64,
    pub dropped_packets: Vec<u64>,
    pub counts: Vec<SliceCounts>,
}
