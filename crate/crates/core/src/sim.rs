//! Discrete-event simulation of one cell.
//!
//! Four event kinds drive the loop: new arrival, handover arrival, call
//! completion and dwell expiry. Admission follows the configured scheme;
//! whenever the active set changes, allocations are rebalanced to a single
//! common degradation fraction and elastic completions are reprojected from
//! their remaining work. Completion events carry a version counter so that a
//! rebalance invalidates the previously scheduled completion.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::chain::SchemePolicy;
use crate::traffic::{CellParameters, TrafficMix};

/// Full configuration of one simulation experiment.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub mix: TrafficMix<f64>,
    pub cell: CellParameters<f64>,
    pub policy: SchemePolicy,
    /// Simulated horizon, seconds.
    pub horizon: f64,
    /// Statistics ignore events before this instant.
    pub warmup: f64,
    pub replications: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("rebalance required degradation {theta} beyond the per-call caps at t={time}; admission logic violated")]
    OverDegradation { theta: f64, time: f64 },
}

/// Point estimate with an optional two-sided 95% confidence halfwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub ci_halfwidth: Option<f64>,
}

/// Aggregated empirical results.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    pub p_block: Estimate,
    pub p_drop: Estimate,
    pub utilization: Estimate,
    /// Mean lifetime in the cell of calls admitted after warmup.
    pub mean_call_duration: f64,
    /// Fraction of admitted calls that left by dwell expiry (handover-out).
    pub handover_out_fraction: f64,
    pub offered_new: u64,
    pub blocked_new: u64,
    pub offered_handover: u64,
    pub dropped_handover: u64,
    pub replications: usize,
}

/// Raw counters from a single replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationStats {
    pub p_block: f64,
    pub p_drop: f64,
    pub utilization: f64,
    pub mean_call_duration: f64,
    pub handover_out_fraction: f64,
    pub offered_new: u64,
    pub blocked_new: u64,
    pub offered_handover: u64,
    pub dropped_handover: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Origin {
    New,
    Handover,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    Arrival(Origin),
    Completion { call: u64, version: u64 },
    DwellExpiry { call: u64 },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // min-heap: earliest time first, seq breaks ties deterministically
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone)]
struct ActiveCall {
    class: usize,
    origin: Origin,
    admitted_at: f64,
    /// kbit left to transfer; meaningful for elastic calls only.
    remaining_work: f64,
    /// Instant at which remaining_work was last brought up to date.
    updated_at: f64,
    current_gamma: f64,
    allocated_bw: f64,
    /// Bumped on every reprojection; stale completion events are ignored.
    version: u64,
    elastic: bool,
}

/// Optional per-event trace line for debugging and invariant checks.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub time: f64,
    pub kind: String,
    pub class: Option<usize>,
    pub active_calls: usize,
    pub total_allocated: f64,
    /// Sum of requested bandwidths of the active calls.
    pub total_demand: f64,
    /// True iff every call's degradation is within its class cap.
    pub gamma_within_caps: bool,
}

impl TraceRecord {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.time,
            self.kind,
            self.class.map(|c| c.to_string()).unwrap_or_default(),
            self.active_calls,
            self.total_allocated
        )
    }
}

/// Admission test for one arriving call under `policy`.
///
/// `active` lists the class indices of the calls currently in the cell.
pub fn admission_decision(
    active: &[usize],
    arriving_class: usize,
    origin_is_handover: bool,
    policy: SchemePolicy,
    mix: &TrafficMix<f64>,
    capacity: f64,
) -> bool {
    let cap = |class: usize| -> f64 {
        match policy {
            SchemePolicy::Proposed => {
                if origin_is_handover {
                    mix.classes[class].gamma_handover
                } else {
                    mix.classes[class].gamma_new
                }
            }
            SchemePolicy::NonPrioritizedAdaptive => mix.classes[class].gamma_handover,
            SchemePolicy::HardNoGuard | SchemePolicy::HardGuard { .. } => 0.0,
        }
    };
    let demand: f64 = active
        .iter()
        .map(|&c| (1.0 - cap(c)) * mix.classes[c].bandwidth_req)
        .sum::<f64>()
        + (1.0 - cap(arriving_class)) * mix.classes[arriving_class].bandwidth_req;
    let limit = match policy {
        SchemePolicy::HardGuard { guard_fraction } if !origin_is_handover => {
            (1.0 - guard_fraction) * capacity
        }
        _ => capacity,
    };
    // tolerance for accumulated float error at exact-fit boundaries
    demand <= limit + 1e-9
}

struct Replication<'a> {
    config: &'a SimConfig,
    queue: BinaryHeap<Event>,
    seq: u64,
    calls: BTreeMap<u64, ActiveCall>,
    next_call_id: u64,
    total_allocated: f64,
    // independent substreams per purpose
    rng_new: ChaCha8Rng,
    rng_handover: ChaCha8Rng,
    rng_class: ChaCha8Rng,
    rng_work: ChaCha8Rng,
    rng_dwell: ChaCha8Rng,
    trace: Option<Vec<TraceRecord>>,
}

fn substream(seed: u64, replication: u64, purpose: u64) -> ChaCha8Rng {
    // splitmix64 over (seed, replication, purpose)
    let mut z = seed
        .wrapping_add(replication.wrapping_mul(0x9E3779B97F4A7C15))
        .wrapping_add(purpose.wrapping_mul(0xBF58476D1CE4E5B9));
    let mut next = || {
        z = z.wrapping_add(0x9E3779B97F4A7C15);
        let mut x = z;
        x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
        x ^ (x >> 31)
    };
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&next().to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

fn sample_exp(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    Exp::new(rate).unwrap().sample(rng)
}

impl<'a> Replication<'a> {
    fn new(config: &'a SimConfig, replication: u64, trace: bool) -> Self {
        let seed = config.seed;
        Self {
            config,
            queue: BinaryHeap::new(),
            seq: 0,
            calls: BTreeMap::new(),
            next_call_id: 0,
            total_allocated: 0.0,
            rng_new: substream(seed, replication, 0),
            rng_handover: substream(seed, replication, 1),
            rng_class: substream(seed, replication, 2),
            rng_work: substream(seed, replication, 3),
            rng_dwell: substream(seed, replication, 4),
            trace: trace.then(Vec::new),
        }
    }

    fn push(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Event { time, seq: self.seq, kind });
    }

    fn pick_class(&mut self) -> usize {
        let u: f64 = self.rng_class.gen();
        let mut acc = 0.0;
        for (m, c) in self.config.mix.classes.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                return m;
            }
        }
        self.config.mix.classes.len() - 1
    }

    /// Recomputes the common degradation fraction and every allocation;
    /// reprojects elastic completions from their remaining work.
    fn rebalance(&mut self, now: f64) -> Result<(), SimError> {
        let mix = &self.config.mix;
        let capacity = self.config.cell.capacity;
        let total_demand: f64 = self
            .calls
            .values()
            .map(|c| mix.classes[c.class].bandwidth_req)
            .sum();
        let theta = if total_demand <= capacity {
            0.0
        } else {
            let pool: f64 = self
                .calls
                .values()
                .map(|c| mix.classes[c.class].gamma_handover * mix.classes[c.class].bandwidth_req)
                .sum();
            let theta = (total_demand - capacity) / pool;
            if theta > 1.0 + 1e-9 {
                return Err(SimError::OverDegradation { theta, time: now });
            }
            theta.min(1.0)
        };

        let mut completions = Vec::new();
        let mut total_allocated = 0.0;
        for (&id, call) in self.calls.iter_mut() {
            let class = &mix.classes[call.class];
            let gamma = theta * class.gamma_handover;
            let alloc = (1.0 - gamma) * class.bandwidth_req;
            if call.elastic {
                call.remaining_work -= call.allocated_bw * (now - call.updated_at);
                call.remaining_work = call.remaining_work.max(0.0);
                call.updated_at = now;
                call.version += 1;
                completions.push((now + call.remaining_work / alloc, id, call.version));
            }
            call.current_gamma = gamma;
            call.allocated_bw = alloc;
            total_allocated += alloc;
        }
        // deterministic event insertion order regardless of map iteration
        completions.sort_by(|a, b| a.1.cmp(&b.1));
        for (time, call, version) in completions {
            self.push(time, EventKind::Completion { call, version });
        }
        self.total_allocated = total_allocated;
        debug_assert!(self.total_allocated <= capacity * (1.0 + 1e-9));
        debug_assert!(
            total_demand <= capacity || (self.total_allocated - capacity).abs() < 1e-6 * capacity
        );
        Ok(())
    }

    fn record(&mut self, time: f64, kind: &str, class: Option<usize>) {
        if self.trace.is_none() {
            return;
        }
        let mix = &self.config.mix;
        let total_demand: f64 = self
            .calls
            .values()
            .map(|c| mix.classes[c.class].bandwidth_req)
            .sum();
        let gamma_within_caps = self
            .calls
            .values()
            .all(|c| c.current_gamma <= mix.classes[c.class].gamma_handover + 1e-12);
        let rec = TraceRecord {
            time,
            kind: kind.into(),
            class,
            active_calls: self.calls.len(),
            total_allocated: self.total_allocated,
            total_demand,
            gamma_within_caps,
        };
        self.trace.as_mut().unwrap().push(rec);
    }

    fn run(mut self) -> Result<(ReplicationStats, Option<Vec<TraceRecord>>), SimError> {
        let cfg = self.config;
        let horizon = cfg.horizon;
        let warmup = cfg.warmup;

        if cfg.cell.lambda_new > 0.0 {
            let t = sample_exp(&mut self.rng_new, cfg.cell.lambda_new);
            self.push(t, EventKind::Arrival(Origin::New));
        }
        if cfg.cell.lambda_handover > 0.0 {
            let t = sample_exp(&mut self.rng_handover, cfg.cell.lambda_handover);
            self.push(t, EventKind::Arrival(Origin::Handover));
        }

        let mut offered_new = 0u64;
        let mut blocked_new = 0u64;
        let mut offered_handover = 0u64;
        let mut dropped_handover = 0u64;
        let mut util_area = 0.0;
        let mut last_time = 0.0f64;
        let mut duration_sum = 0.0;
        let mut departures = 0u64;
        let mut handover_out = 0u64;

        while let Some(ev) = self.queue.pop() {
            if ev.time > horizon {
                break;
            }
            if ev.time > warmup {
                let from = last_time.max(warmup);
                util_area +=
                    (self.total_allocated.min(cfg.cell.capacity) / cfg.cell.capacity) * (ev.time - from);
            }
            last_time = last_time.max(ev.time);

            match ev.kind {
                EventKind::Arrival(origin) => {
                    let rate = match origin {
                        Origin::New => cfg.cell.lambda_new,
                        Origin::Handover => cfg.cell.lambda_handover,
                    };
                    let rng = match origin {
                        Origin::New => &mut self.rng_new,
                        Origin::Handover => &mut self.rng_handover,
                    };
                    let next = ev.time + sample_exp(rng, rate);
                    self.push(next, EventKind::Arrival(origin));

                    let class = self.pick_class();
                    let active: Vec<usize> = self.calls.values().map(|c| c.class).collect();
                    let admit = admission_decision(
                        &active,
                        class,
                        origin == Origin::Handover,
                        cfg.policy,
                        &cfg.mix,
                        cfg.cell.capacity,
                    );
                    if ev.time > warmup {
                        match origin {
                            Origin::New => {
                                offered_new += 1;
                                if !admit {
                                    blocked_new += 1;
                                }
                            }
                            Origin::Handover => {
                                offered_handover += 1;
                                if !admit {
                                    dropped_handover += 1;
                                }
                            }
                        }
                    }
                    if admit {
                        let spec = &cfg.mix.classes[class];
                        let elastic = !spec.is_real_time();
                        self.next_call_id += 1;
                        let id = self.next_call_id;
                        let remaining_work = if elastic {
                            // mean transfer size at full bandwidth: beta / mu kbit
                            sample_exp(&mut self.rng_work, cfg.cell.completion_rate)
                                * spec.bandwidth_req
                        } else {
                            0.0
                        };
                        self.calls.insert(
                            id,
                            ActiveCall {
                                class,
                                origin,
                                admitted_at: ev.time,
                                remaining_work,
                                updated_at: ev.time,
                                current_gamma: 0.0,
                                allocated_bw: spec.bandwidth_req,
                                version: 0,
                                elastic,
                            },
                        );
                        if !elastic {
                            let d = sample_exp(&mut self.rng_work, cfg.cell.completion_rate);
                            self.push(ev.time + d, EventKind::Completion { call: id, version: 0 });
                        }
                        let dwell = sample_exp(&mut self.rng_dwell, cfg.cell.dwell_rate);
                        self.push(ev.time + dwell, EventKind::DwellExpiry { call: id });
                        self.rebalance(ev.time)?;
                    }
                    let kind = match (origin, admit) {
                        (Origin::New, true) => "new_admit",
                        (Origin::New, false) => "new_block",
                        (Origin::Handover, true) => "handover_admit",
                        (Origin::Handover, false) => "handover_drop",
                    };
                    self.record(ev.time, kind, Some(class));
                }
                EventKind::Completion { call, version } => {
                    let stale = self
                        .calls
                        .get(&call)
                        .map_or(true, |c| c.version != version);
                    if stale {
                        continue;
                    }
                    let c = self.calls.remove(&call).unwrap();
                    if c.admitted_at >= warmup {
                        duration_sum += ev.time - c.admitted_at;
                        departures += 1;
                    }
                    self.rebalance(ev.time)?;
                    let kind = match c.origin {
                        Origin::New => "completion_new",
                        Origin::Handover => "completion_handover",
                    };
                    self.record(ev.time, kind, Some(c.class));
                }
                EventKind::DwellExpiry { call } => {
                    if let Some(c) = self.calls.remove(&call) {
                        if c.admitted_at >= warmup {
                            duration_sum += ev.time - c.admitted_at;
                            departures += 1;
                            handover_out += 1;
                        }
                        self.rebalance(ev.time)?;
                        self.record(ev.time, "dwell_expiry", Some(c.class));
                    }
                }
            }
        }
        // integrate the tail of the observation window
        if horizon > warmup && last_time < horizon {
            let from = last_time.max(warmup);
            util_area +=
                (self.total_allocated.min(cfg.cell.capacity) / cfg.cell.capacity) * (horizon - from);
        }

        let window = (horizon - warmup).max(f64::MIN_POSITIVE);
        let stats = ReplicationStats {
            p_block: ratio(blocked_new, offered_new),
            p_drop: ratio(dropped_handover, offered_handover),
            utilization: util_area / window,
            mean_call_duration: if departures > 0 {
                duration_sum / departures as f64
            } else {
                0.0
            },
            handover_out_fraction: ratio(handover_out, departures),
            offered_new,
            blocked_new,
            offered_handover,
            dropped_handover,
        };
        Ok((stats, self.trace))
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Runs one replication; deterministic for a fixed (config, replication) pair.
pub fn run_replication(config: &SimConfig, replication: u64) -> Result<ReplicationStats, SimError> {
    validate_config(config)?;
    Replication::new(config, replication, false)
        .run()
        .map(|(s, _)| s)
}

/// Like [`run_replication`] but also returns the event trace.
pub fn run_replication_traced(
    config: &SimConfig,
    replication: u64,
) -> Result<(ReplicationStats, Vec<TraceRecord>), SimError> {
    validate_config(config)?;
    Replication::new(config, replication, true)
        .run()
        .map(|(s, t)| (s, t.unwrap()))
}

fn validate_config(config: &SimConfig) -> Result<(), SimError> {
    if !(config.warmup < config.horizon) {
        return Err(SimError::InvalidConfig(format!(
            "warmup ({}) must be below the horizon ({})",
            config.warmup, config.horizon
        )));
    }
    if config.replications == 0 {
        return Err(SimError::InvalidConfig("replications must be >= 1".into()));
    }
    let report = crate::traffic::validate(&config.mix, &config.cell);
    if !report.is_valid() {
        return Err(SimError::InvalidConfig(report.to_string()));
    }
    Ok(())
}

/// Runs all replications (in parallel) and aggregates them.
pub fn run(config: &SimConfig) -> Result<SimStats, SimError> {
    validate_config(config)?;
    let reps: Result<Vec<ReplicationStats>, SimError> = (0..config.replications as u64)
        .into_par_iter()
        .map(|r| run_replication(config, r))
        .collect();
    Ok(aggregate(&reps?))
}

/// Mean and 95% t-interval across replications.
pub fn aggregate(reps: &[ReplicationStats]) -> SimStats {
    assert!(!reps.is_empty(), "at least one replication required");
    let estimate = |f: &dyn Fn(&ReplicationStats) -> f64| -> Estimate {
        let values: Vec<f64> = reps.iter().map(f).collect();
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let ci_halfwidth = (n >= 2).then(|| {
            let var =
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let t = StudentsT::new(0.0, 1.0, n as f64 - 1.0)
                .unwrap()
                .inverse_cdf(0.975);
            t * (var / n as f64).sqrt()
        });
        Estimate { mean, ci_halfwidth }
    };
    SimStats {
        p_block: estimate(&|r| r.p_block),
        p_drop: estimate(&|r| r.p_drop),
        utilization: estimate(&|r| r.utilization),
        mean_call_duration: reps.iter().map(|r| r.mean_call_duration).sum::<f64>()
            / reps.len() as f64,
        handover_out_fraction: reps.iter().map(|r| r.handover_out_fraction).sum::<f64>()
            / reps.len() as f64,
        offered_new: reps.iter().map(|r| r.offered_new).sum(),
        blocked_new: reps.iter().map(|r| r.blocked_new).sum(),
        offered_handover: reps.iter().map(|r| r.offered_handover).sum(),
        dropped_handover: reps.iter().map(|r| r.dropped_handover).sum(),
        replications: reps.len(),
    }
}
