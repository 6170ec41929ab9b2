//! Packet-level simulation of one base station serving several slices.
//!
//! Time advances in fixed scheduling slots. In every slot each slice's
//! bandwidth serves exactly one backlogged user, chosen round-robin, whose
//! queue is drained FIFO at the instantaneous Shannon rate of that slot. A
//! decision step groups `slots_per_step` slots under one bandwidth split.
//!
//! A packet counts as successful when every slot that served it ran at or
//! above the slice's SLA rate and it finished no later than its deadline.
//! Packets still queued at their deadline are dropped.

mod action;
mod channel;
mod config;
mod metrics;
mod traffic;

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use action::{enumerate_actions, near_equal_split, Action};
pub use config::{ChannelParams, EnvConfig, SliceId, SliceSpec, UrllcRegime};
pub use metrics::{link_rate, slice_ssr, snr, spectrum_efficiency, system_utility, SliceCounts, StepMetrics};
pub use traffic::TrafficDistribution;

use crate::error::{Error, Result};
use crate::rng::{stream, SimRng, Stream};

/// Arrivals per slice during the last decision step: the RL state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub arrived_packets: Vec<u64>,
    /// `arrived_packets[n] / scale[n]`, clamped to `[0, 1]`.
    pub normalized: Vec<f64>,
}

impl Observation {
    pub fn new(arrived_packets: Vec<u64>, scale: &[f64]) -> Self {
        let normalized = arrived_packets
            .iter()
            .zip(scale)
            .map(|(&d, &s)| (d as f64 / s).clamp(0.0, 1.0))
            .collect();
        Observation { arrived_packets, normalized }
    }

    pub fn len(&self) -> usize {
        self.arrived_packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrived_packets.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Delivered,
    /// Delivered after its deadline or through a slot below the SLA rate.
    Failed,
    Dropped,
}

/// One line of the per-packet audit log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub slice: usize,
    pub user: usize,
    pub size_bits: f64,
    pub arrival: f64,
    pub deadline: f64,
    pub completion: Option<f64>,
    pub min_service_rate: f64,
    pub outcome: Outcome,
}

#[derive(Clone, Debug)]
struct Packet {
    size_bits: f64,
    remaining: f64,
    arrival: f64,
    deadline: f64,
    rate_ok: bool,
    min_rate: f64,
}

#[derive(Clone, Debug)]
struct User {
    gain: f64,
    queue: VecDeque<Packet>,
}

#[derive(Clone, Copy, Debug)]
struct NextArrival {
    time: f64,
    user: usize,
}

impl PartialEq for NextArrival {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for NextArrival {}

impl PartialOrd for NextArrival {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for NextArrival {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.user.cmp(&other.user))
    }
}

#[derive(Clone, Debug)]
struct SliceState {
    spec: SliceSpec,
    first_user: usize,
    rr_next: usize,
    queued: u64,
    sla_latency_s: f64,
    arrivals: BinaryHeap<Reverse<NextArrival>>,
    rng: SimRng,
}

impl SliceState {
    fn n_users(&self) -> usize {
        self.spec.users
    }
}

#[derive(Clone, Debug)]
pub struct Environment {
    cfg: EnvConfig,
    actions: Vec<Action>,
    hard_action: usize,
    users: Vec<User>,
    slices: Vec<SliceState>,
    fading: SimRng,
    slot: u64,
    slot_s: f64,
    obs_scale: Vec<f64>,
    audit: Vec<PacketRecord>,
}

impl Environment {
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        let actions = enumerate_actions(cfg.total_bandwidth_hz, cfg.resolution_hz, cfg.slices.len())?;
        let units = cfg.total_bandwidth_hz / cfg.resolution_hz;
        let split = near_equal_split(units, cfg.slices.len());
        let hard_action = actions
            .iter()
            .position(|a| a.units == split)
            .expect("near-equal split is a positive composition");

        let mut placement = stream(cfg.seed, Stream::Placement);
        let mut shadowing = stream(cfg.seed, Stream::Shadowing);
        let mut users = Vec::new();
        let mut slices = Vec::with_capacity(cfg.slices.len());
        for (n, spec) in cfg.slices.iter().enumerate() {
            let mut rng = stream(cfg.seed, Stream::Traffic(n));
            let first_user = users.len();
            let mut arrivals = BinaryHeap::with_capacity(spec.users);
            for k in 0..spec.users {
                let d = cfg.channel.sample_distance(&mut placement);
                let sh = cfg.channel.sample_shadowing_db(&mut shadowing);
                users.push(User { gain: cfg.channel.large_scale_gain(d, sh), queue: VecDeque::new() });
                let t = spec.interarrival.sample(&mut rng) * 1e-3;
                arrivals.push(Reverse(NextArrival { time: t, user: first_user + k }));
            }
            slices.push(SliceState {
                spec: spec.clone(),
                first_user,
                rr_next: 0,
                queued: 0,
                sla_latency_s: spec.sla_latency_ms * 1e-3,
                arrivals,
                rng,
            });
        }

        let obs_scale = match &cfg.obs_scale {
            Some(s) => s.clone(),
            None => measure_obs_scale(&cfg)?,
        };

        Ok(Environment {
            fading: stream(cfg.seed, Stream::Fading),
            slot_s: cfg.slot_ms * 1e-3,
            cfg,
            actions,
            hard_action,
            users,
            slices,
            slot: 0,
            obs_scale,
            audit: Vec::new(),
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn n_slices(&self) -> usize {
        self.slices.len()
    }

    /// Index of the near-equal split used by hard slicing.
    pub fn hard_action_index(&self) -> usize {
        self.hard_action
    }

    pub fn obs_scale(&self) -> &[f64] {
        &self.obs_scale
    }

    /// State before any traffic has been observed.
    pub fn initial_observation(&self) -> Observation {
        Observation::new(vec![0; self.n_slices()], &self.obs_scale)
    }

    pub fn audit_log(&self) -> &[PacketRecord] {
        &self.audit
    }

    pub fn take_audit_log(&mut self) -> Vec<PacketRecord> {
        std::mem::take(&mut self.audit)
    }

    /// Simulated time at the start of the next slot, in seconds.
    pub fn now(&self) -> f64 {
        self.slot as f64 * self.slot_s
    }

    pub fn large_scale_gain(&self, user: usize) -> f64 {
        self.users[user].gain
    }

    /// SNR of `user` on `bandwidth_hz` with the given small-scale power gain.
    pub fn user_snr(&self, user: usize, bandwidth_hz: f64, slot_gain: f64) -> f64 {
        let ch = &self.cfg.channel;
        snr(self.users[user].gain * slot_gain, ch.tx_power_w, ch.noise_psd_w_per_hz, bandwidth_hz)
    }

    /// Runs one decision step under the bandwidth split `action_index`.
    pub fn step(&mut self, action_index: usize) -> Result<(Observation, StepMetrics)> {
        let action = self
            .actions
            .get(action_index)
            .ok_or(Error::UnknownAction { index: action_index, len: self.actions.len() })?;
        assert_eq!(action.total_hz(), self.cfg.total_bandwidth_hz);
        assert!(action.units.iter().all(|&u| u >= 1));
        let bandwidth: Vec<f64> = action.allocation_hz().into_iter().map(|hz| hz as f64).collect();

        let mut counts: Vec<SliceCounts> = self
            .slices
            .iter()
            .map(|s| SliceCounts { queued_start: s.queued, ..Default::default() })
            .collect();
        let mut slot_rates = Vec::with_capacity(self.cfg.slots_per_step);
        let mut delivered_bits = 0.0;

        for _ in 0..self.cfg.slots_per_step {
            let t = self.now();
            self.drop_expired(t, &mut counts);
            let mut rate_sum = 0.0;
            for n in 0..self.slices.len() {
                let fade = self.cfg.channel.sample_fading(&mut self.fading);
                let Some(user) = self.next_backlogged(n) else { continue };
                let rate = link_rate(bandwidth[n], self.user_snr(user, bandwidth[n], fade));
                rate_sum += rate;
                delivered_bits += self.serve(n, user, rate, t, &mut counts[n]);
            }
            slot_rates.push(rate_sum);
            self.slot += 1;
            let t_end = self.now();
            self.admit_arrivals(t_end, &mut counts);
        }

        for (c, s) in counts.iter_mut().zip(&self.slices) {
            c.queued_end = s.queued;
            debug_assert!(c.is_conserved());
        }

        let se = spectrum_efficiency(&slot_rates, self.cfg.total_bandwidth_hz as f64);
        let ssr = counts
            .iter()
            .map(|c| slice_ssr(c.delivered_ok, c.resolved()))
            .collect::<Result<Vec<_>>>()?;
        let utility = system_utility(se, &ssr, self.cfg.alpha, &self.cfg.betas())?;
        let obs = Observation::new(counts.iter().map(|c| c.arrived).collect(), &self.obs_scale);
        let metrics = StepMetrics {
            se,
            ssr,
            utility,
            delivered_bits,
            dropped_packets: counts.iter().map(|c| c.dropped).collect(),
            counts,
        };
        Ok((obs, metrics))
    }

    fn next_backlogged(&mut self, n: usize) -> Option<usize> {
        let slice = &mut self.slices[n];
        if slice.queued == 0 {
            return None;
        }
        let n_users = slice.n_users();
        for k in 0..n_users {
            let offset = (slice.rr_next + k) % n_users;
            let user = slice.first_user + offset;
            if !self.users[user].queue.is_empty() {
                slice.rr_next = (offset + 1) % n_users;
                return Some(user);
            }
        }
        unreachable!("slice has queued packets but no backlogged user")
    }

    /// Drains `user`'s queue for one slot; returns the bits transmitted.
    fn serve(&mut self, n: usize, user: usize, rate: f64, t: f64, counts: &mut SliceCounts) -> f64 {
        if rate <= 0.0 {
            return 0.0;
        }
        let slice = &mut self.slices[n];
        let sla_rate = slice.spec.sla_rate_bps;
        let capacity = rate * self.slot_s;
        let mut used = 0.0;
        while let Some(pkt) = self.users[user].queue.front_mut() {
            pkt.min_rate = pkt.min_rate.min(rate);
            if rate < sla_rate {
                pkt.rate_ok = false;
            }
            let room = capacity - used;
            if pkt.remaining > room {
                pkt.remaining -= room;
                used = capacity;
                break;
            }
            used += pkt.remaining;
            let pkt = self.users[user].queue.pop_front().expect("front exists");
            slice.queued -= 1;
            let completion = t + used / rate;
            let on_time = completion <= pkt.deadline + 1e-12;
            let outcome = if pkt.rate_ok && on_time {
                counts.delivered_ok += 1;
                Outcome::Delivered
            } else {
                counts.delivered_failed += 1;
                Outcome::Failed
            };
            if self.cfg.audit {
                self.audit.push(PacketRecord {
                    slice: n,
                    user,
                    size_bits: pkt.size_bits,
                    arrival: pkt.arrival,
                    deadline: pkt.deadline,
                    completion: Some(completion),
                    min_service_rate: pkt.min_rate,
                    outcome,
                });
            }
        }
        used
    }

    fn drop_expired(&mut self, t: f64, counts: &mut [SliceCounts]) {
        for (n, slice) in self.slices.iter_mut().enumerate() {
            if slice.queued == 0 {
                continue;
            }
            for user in slice.first_user..slice.first_user + slice.spec.users {
                let queue = &mut self.users[user].queue;
                while queue.front().is_some_and(|p| p.deadline <= t) {
                    let pkt = queue.pop_front().expect("front exists");
                    slice.queued -= 1;
                    counts[n].dropped += 1;
                    if self.cfg.audit {
                        self.audit.push(PacketRecord {
                            slice: n,
                            user,
                            size_bits: pkt.size_bits,
                            arrival: pkt.arrival,
                            deadline: pkt.deadline,
                            completion: None,
                            min_service_rate: pkt.min_rate,
                            outcome: Outcome::Dropped,
                        });
                    }
                }
            }
        }
    }

    /// Enqueues every packet generated before `t_end`.
    fn admit_arrivals(&mut self, t_end: f64, counts: &mut [SliceCounts]) {
        for (n, slice) in self.slices.iter_mut().enumerate() {
            while let Some(&Reverse(next)) = slice.arrivals.peek() {
                if next.time >= t_end {
                    break;
                }
                slice.arrivals.pop();
                let size_bits = slice.spec.packet_size.sample(&mut slice.rng) * 8.0;
                self.users[next.user].queue.push_back(Packet {
                    size_bits,
                    remaining: size_bits,
                    arrival: next.time,
                    deadline: next.time + slice.sla_latency_s,
                    rate_ok: true,
                    min_rate: f64::INFINITY,
                });
                slice.queued += 1;
                counts[n].arrived += 1;
                let gap = slice.spec.interarrival.sample(&mut slice.rng) * 1e-3;
                slice.arrivals.push(Reverse(NextArrival { time: next.time + gap, user: next.user }));
            }
        }
    }
}

/// Per-slice 99th percentile of arrivals over a hard-slicing warm-up run on
/// an independent seed; at least 1.
fn measure_obs_scale(cfg: &EnvConfig) -> Result<Vec<f64>> {
    let n = cfg.slices.len();
    if cfg.warmup_steps == 0 {
        return Ok(vec![1.0; n]);
    }
    let mut warm = cfg.clone();
    warm.seed = stream(cfg.seed, Stream::Warmup).gen();
    warm.obs_scale = Some(vec![1.0; n]);
    warm.audit = false;
    let mut env = Environment::new(warm)?;
    let hard = env.hard_action_index();
    let mut samples = vec![Vec::with_capacity(cfg.warmup_steps); n];
    for _ in 0..cfg.warmup_steps {
        let (obs, _) = env.step(hard)?;
        for (s, d) in samples.iter_mut().zip(&obs.arrived_packets) {
            s.push(*d);
        }
    }
    Ok(samples
        .into_iter()
        .map(|mut s| {
            s.sort_unstable();
            let rank = ((0.99 * s.len() as f64).ceil() as usize).clamp(1, s.len());
            (s[rank - 1] as f64).max(1.0)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> EnvConfig {
        let mut cfg = EnvConfig::standard(UrllcRegime::Small);
        cfg.slots_per_step = 200;
        cfg.warmup_steps = 0;
        cfg.seed = 5;
        cfg
    }

    #[test]
    fn standard_env_builds_with_36_actions() {
        let mut cfg = EnvConfig::standard(UrllcRegime::Small);
        cfg.warmup_steps = 3;
        let env = Environment::new(cfg).unwrap();
        assert_eq!(env.n_actions(), 36);
        assert_eq!(env.actions()[env.hard_action_index()].units, vec![4, 3, 3]);
        assert!(env.obs_scale().iter().all(|s| *s >= 1.0));
    }

    #[test]
    fn build_errors() {
        let mut cfg = small_cfg();
        cfg.resolution_hz = 3_000_000;
        assert!(matches!(Environment::new(cfg), Err(Error::Config(_))));
        let mut cfg = small_cfg();
        cfg.slices.clear();
        assert!(Environment::new(cfg).is_err());
    }

    #[test]
    fn tiny_bandwidth_has_single_action() {
        let mut cfg = small_cfg();
        cfg.total_bandwidth_hz = 3;
        cfg.resolution_hz = 1;
        let env = Environment::new(cfg).unwrap();
        assert_eq!(env.n_actions(), 1);
        assert_eq!(env.actions()[0].units, vec![1, 1, 1]);
    }

    #[test]
    fn unknown_action_rejected() {
        let mut env = Environment::new(small_cfg()).unwrap();
        assert!(matches!(env.step(36), Err(Error::UnknownAction { index: 36, len: 36 })));
    }

    #[test]
    fn no_traffic_gives_unit_ssr_and_zero_se() {
        let mut cfg = small_cfg();
        for s in &mut cfg.slices {
            s.interarrival = TrafficDistribution::constant(1e9).unwrap();
        }
        let mut env = Environment::new(cfg).unwrap();
        let (obs, m) = env.step(0).unwrap();
        assert_eq!(obs.arrived_packets, vec![0, 0, 0]);
        assert_eq!(m.ssr, vec![1.0, 1.0, 1.0]);
        assert_eq!(m.se, 0.0);
        assert!((m.utility - 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_small_packet_succeeds() {
        let mut cfg = small_cfg();
        cfg.slices.truncate(1);
        cfg.slices[0].users = 1;
        cfg.slices[0].interarrival = TrafficDistribution::constant(0.4).unwrap();
        cfg.slots_per_step = 1;
        cfg.total_bandwidth_hz = 1_000_000;
        cfg.audit = true;
        let mut env = Environment::new(cfg).unwrap();
        // first step admits the packet generated at 0.4 ms, second serves it
        let (obs, _) = env.step(0).unwrap();
        assert_eq!(obs.arrived_packets, vec![1]);
        let (_, m) = env.step(0).unwrap();
        assert_eq!(m.ssr, vec![1.0]);
        let rec = &env.audit_log()[0];
        assert_eq!(rec.outcome, Outcome::Delivered);
        assert_eq!(rec.size_bits, 320.0);
    }

    #[test]
    fn determinism_and_accounting() {
        let run = || {
            let mut env = Environment::new(small_cfg()).unwrap();
            (0..20).map(|k| env.step(k % 36).unwrap()).collect::<Vec<_>>()
        };
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        for (_, m) in &a {
            for (c, s) in m.counts.iter().zip(&m.ssr) {
                assert!(c.is_conserved());
                assert!((0.0..=1.0).contains(s));
            }
            let j = system_utility(m.se, &m.ssr, 0.01, &[1.0; 3]).unwrap();
            assert_eq!(j, m.utility);
        }
    }

    #[test]
    fn audited_successes_meet_both_constraints() {
        let mut cfg = small_cfg();
        cfg.audit = true;
        let mut env = Environment::new(cfg.clone()).unwrap();
        for k in 0..10 {
            env.step((k * 7) % 36).unwrap();
        }
        let log = env.audit_log();
        assert!(log.iter().any(|r| r.outcome == Outcome::Delivered));
        for r in log {
            if r.outcome == Outcome::Delivered {
                let sla = &cfg.slices[r.slice];
                assert!(r.min_service_rate >= sla.sla_rate_bps);
                assert!(r.completion.unwrap() <= r.deadline + 1e-12);
            }
        }
    }
}
