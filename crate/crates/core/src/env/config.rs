use serde::{Deserialize, Serialize};

use super::traffic::TrafficDistribution;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceId {
    #[serde(alias = "VoLTE")]
    Volte,
    #[serde(alias = "Video")]
    Video,
    #[serde(alias = "URLLC")]
    Urllc,
}

impl SliceId {
    pub fn name(self) -> &'static str {
        match self {
            SliceId::Volte => "volte",
            SliceId::Video => "video",
            SliceId::Urllc => "urllc",
        }
    }
}

/// One slice: its users, traffic models (milliseconds, bytes) and SLA.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub id: SliceId,
    pub users: usize,
    pub interarrival: TrafficDistribution,
    pub packet_size: TrafficDistribution,
    pub sla_rate_bps: f64,
    pub sla_latency_ms: f64,
    pub beta: f64,
}

impl SliceSpec {
    fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::config(format!("slice {} has no users", self.id.name())));
        }
        if !(self.sla_rate_bps > 0.0 && self.sla_latency_ms > 0.0) {
            return Err(Error::config(format!("slice {} needs positive SLA rate and latency", self.id.name())));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::config(format!("slice {} has negative beta", self.id.name())));
        }
        if self.interarrival.bounds().1 <= 0.0 {
            return Err(Error::config(format!("slice {} never advances time", self.id.name())));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelParams {
    pub cell_radius_m: f64,
    pub min_distance_m: f64,
    pub pathloss_exponent: f64,
    pub pathloss_ref_db: f64,
    pub shadowing_sigma_db: f64,
    pub tx_power_w: f64,
    pub noise_psd_w_per_hz: f64,
    pub rayleigh: bool,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            cell_radius_m: 40.0,
            min_distance_m: 1.0,
            pathloss_exponent: 3.0,
            pathloss_ref_db: 30.0,
            shadowing_sigma_db: 8.0,
            tx_power_w: 0.1,
            // -174 dBm/Hz
            noise_psd_w_per_hz: 10f64.powf(-17.4) * 1e-3,
            rayleigh: true,
        }
    }
}

impl ChannelParams {
    fn validate(&self) -> Result<()> {
        if !(self.noise_psd_w_per_hz > 0.0 && self.tx_power_w > 0.0 && self.cell_radius_m > 0.0) {
            return Err(Error::config("channel needs positive noise PSD, tx power and cell radius"));
        }
        if !(self.min_distance_m > 0.0 && self.min_distance_m <= self.cell_radius_m) {
            return Err(Error::config("min_distance_m must lie in (0, cell_radius_m]"));
        }
        Ok(())
    }
}

/// URLLC packet-size regime.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UrllcRegime {
    /// {6.4, 12.8, 19.2, 25.6, 32} KByte
    Small,
    /// {0.3, 0.4, 0.5, 0.6, 0.7} MByte
    Large,
}

fn default_warmup() -> usize {
    200
}

/// Environment configuration, the `env` document of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub total_bandwidth_hz: u64,
    pub resolution_hz: u64,
    pub alpha: f64,
    pub slot_ms: f64,
    pub slots_per_step: usize,
    pub seed: u64,
    #[serde(default)]
    pub channel: ChannelParams,
    pub slices: Vec<SliceSpec>,
    /// Per-slice divisor for the normalised observation. Measured by a
    /// hard-slicing warm-up when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obs_scale: Option<Vec<f64>>,
    #[serde(default = "default_warmup")]
    pub warmup_steps: usize,
    /// Keep a per-packet outcome log.
    #[serde(default)]
    pub audit: bool,
}

impl EnvConfig {
    /// Three slices with the standard traffic mix, 10 MHz at 1 MHz resolution,
    /// alpha = 0.01 and unit SSR weights.
    pub fn standard(regime: UrllcRegime) -> Self {
        let urllc_sizes = match regime {
            UrllcRegime::Small => vec![6.4e3, 12.8e3, 19.2e3, 25.6e3, 32e3],
            UrllcRegime::Large => vec![0.3e6, 0.4e6, 0.5e6, 0.6e6, 0.7e6],
        };
        let slices = vec![
            SliceSpec {
                id: SliceId::Volte,
                users: 46,
                interarrival: TrafficDistribution::uniform(0.0, 160.0).unwrap(),
                packet_size: TrafficDistribution::constant(40.0).unwrap(),
                sla_rate_bps: 51e3,
                sla_latency_ms: 10.0,
                beta: 1.0,
            },
            SliceSpec {
                id: SliceId::Video,
                users: 46,
                interarrival: TrafficDistribution::truncated_pareto(1.2, 6.0, 12.5).unwrap(),
                packet_size: TrafficDistribution::truncated_pareto(1.2, 100.0, 250.0).unwrap(),
                sla_rate_bps: 100e6,
                sla_latency_ms: 10.0,
                beta: 1.0,
            },
            SliceSpec {
                id: SliceId::Urllc,
                users: 8,
                interarrival: TrafficDistribution::truncated_exponential(180.0, 1800.0).unwrap(),
                packet_size: TrafficDistribution::discrete_set(urllc_sizes).unwrap(),
                sla_rate_bps: 10e6,
                sla_latency_ms: 1.0,
                beta: 1.0,
            },
        ];
        EnvConfig {
            total_bandwidth_hz: 10_000_000,
            resolution_hz: 1_000_000,
            alpha: 0.01,
            slot_ms: 0.5,
            slots_per_step: 2000,
            seed: 0,
            channel: ChannelParams::default(),
            slices,
            obs_scale: None,
            warmup_steps: default_warmup(),
            audit: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.slices.is_empty() {
            return Err(Error::config("slice list is empty"));
        }
        if self.resolution_hz == 0 || self.total_bandwidth_hz % self.resolution_hz != 0 {
            return Err(Error::config(format!(
                "total bandwidth {} Hz is not divisible by resolution {} Hz",
                self.total_bandwidth_hz, self.resolution_hz
            )));
        }
        if !(self.slot_ms > 0.0) || self.slots_per_step == 0 {
            return Err(Error::config("slot duration and slots per step must be positive"));
        }
        if !self.alpha.is_finite() {
            return Err(Error::config("alpha must be finite"));
        }
        if let Some(scale) = &self.obs_scale {
            if scale.len() != self.slices.len() || scale.iter().any(|s| !(*s > 0.0)) {
                return Err(Error::config("obs_scale needs one positive entry per slice"));
            }
        }
        self.channel.validate()?;
        self.slices.iter().try_for_each(SliceSpec::validate)
    }

    pub fn betas(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.beta).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_of_standard_config() {
        let cfg = EnvConfig::standard(UrllcRegime::Small);
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        for key in ["total_bandwidth_hz", "resolution_hz", "slot_ms", "sla_rate_bps", "sla_latency_ms", "interarrival"] {
            assert!(text.contains(key), "{key}");
        }
        let back: EnvConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation() {
        let mut cfg = EnvConfig::standard(UrllcRegime::Small);
        assert!(cfg.validate().is_ok());
        cfg.resolution_hz = 3_000_000;
        assert!(cfg.validate().is_err());
        let mut cfg = EnvConfig::standard(UrllcRegime::Small);
        cfg.slices.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = EnvConfig::standard(UrllcRegime::Small);
        cfg.slices[0].users = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = EnvConfig::standard(UrllcRegime::Small);
        cfg.channel.noise_psd_w_per_hz = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn slice_ids_accept_display_names() {
        let id: SliceId = serde_json::from_str("\"URLLC\"").unwrap();
        assert_eq!(id, SliceId::Urllc);
        let id: SliceId = serde_json::from_str("\"video\"").unwrap();
        assert_eq!(id, SliceId::Video);
    }
}
