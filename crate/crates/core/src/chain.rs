//! Birth-death chain of the adaptive-bandwidth admission schemes.
//!
//! State `i` counts active calls. Up to `N = floor(C/mean_demand)` calls fit
//! at full allocation; the adaptive schemes add `S` degraded states reachable
//! by handover calls, of which the first `L` also accept new calls. Death
//! rates shrink above `N` because degraded elastic calls take longer to
//! finish. The stationary distribution is the usual product form, evaluated
//! in log domain so chains with hundreds of states stay finite.

use crate::scalar::Scalar;
use crate::traffic::{CellParameters, MixAggregates, TrafficMix};

/// Admission scheme shaping the chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemePolicy {
    /// Handover-prioritized adaptive allocation: deeper degradation for
    /// handover calls than for new calls.
    Proposed,
    /// Adaptive allocation with the same (handover-level) degradation cap for
    /// both arrival types.
    NonPrioritizedAdaptive,
    /// Fixed full-bandwidth allocation, no reservation.
    HardNoGuard,
    /// Fixed allocation with a fraction of capacity reserved for handovers.
    HardGuard { guard_fraction: f64 },
}

impl SchemePolicy {
    /// Stable identifier used in CSV output and config files.
    pub fn label(&self) -> String {
        match self {
            SchemePolicy::Proposed => "proposed".into(),
            SchemePolicy::NonPrioritizedAdaptive => "non_prioritized_adaptive".into(),
            SchemePolicy::HardNoGuard => "hard_no_guard".into(),
            SchemePolicy::HardGuard { guard_fraction } => format!("hard_guard_{guard_fraction}"),
        }
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum ChainError {
    #[error("guard fraction {guard_fraction} reserves more than the whole capacity (N={n_hard})")]
    GuardTooLarge { guard_fraction: f64, n_hard: usize },
    #[error("degenerate chain: no state can hold a single call (capacity below mean demand)")]
    DegenerateChain,
    #[error("state {state} exceeds hard capacity {n_hard} but the mix has no degradable bandwidth")]
    InfeasibleState { state: usize, n_hard: usize },
    #[error("invalid inputs: {0}")]
    InvalidInput(String),
}

/// Built chain for one scheme: sizes, rates and stationary distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel<F> {
    /// N, calls that fit at full allocation.
    pub n_hard: usize,
    /// L, extra degraded states that still accept new calls.
    pub extra_new: usize,
    /// S, extra degraded states that accept handover calls.
    pub extra_handover: usize,
    /// First state at or above which new calls are rejected.
    pub new_cutoff: usize,
    /// birth_rates[i] is the arrival rate out of state i, i = 0..K-1.
    pub birth_rates: Vec<F>,
    /// death_rates[i] is the total release rate out of state i+1, i = 0..K-1.
    pub death_rates: Vec<F>,
    /// Stationary probabilities P(0..K).
    pub stationary: Vec<F>,
}

/// Closed-form performance figures read off a built chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainResults<F> {
    pub p_block: F,
    pub p_drop: F,
    pub utilization: F,
    pub mean_occupancy: F,
}

/// N: calls that fit at full allocation under the hard scheme.
pub fn hard_capacity<F: Scalar>(agg: &MixAggregates<F>, cell: &CellParameters<F>) -> usize {
    (cell.capacity / agg.mean_demand)
        .floor()
        .to_usize()
        .unwrap_or(0)
}

/// S: additional degraded states reachable via handover-level degradation.
pub fn extra_states_handover<F: Scalar>(agg: &MixAggregates<F>, cell: &CellParameters<F>) -> usize {
    extra_states(agg.degradable_handover, agg.mean_demand, cell.capacity)
}

/// L: additional states in which new calls are still accepted.
pub fn extra_states_new<F: Scalar>(agg: &MixAggregates<F>, cell: &CellParameters<F>) -> usize {
    extra_states(agg.degradable_new, agg.mean_demand, cell.capacity)
}

fn extra_states<F: Scalar>(degradable: F, mean_demand: F, capacity: F) -> usize {
    if degradable <= F::zero() {
        return 0;
    }
    (capacity * degradable / ((mean_demand - degradable) * mean_demand))
        .floor()
        .to_usize()
        .unwrap_or(0)
}

/// Common degradation fraction in state `i`: zero up to N, then the bandwidth
/// deficit spread over the mix's degradable pool.
pub fn degradation_level<F: Scalar>(
    i: usize,
    agg: &MixAggregates<F>,
    cell: &CellParameters<F>,
) -> Result<F, ChainError> {
    let n_hard = hard_capacity(agg, cell);
    if i <= n_hard {
        return Ok(F::zero());
    }
    if agg.degradable_handover <= F::zero() {
        return Err(ChainError::InfeasibleState { state: i, n_hard });
    }
    let calls = F::from_usize(i).unwrap();
    let deficit = calls * agg.mean_demand - cell.capacity;
    let theta = deficit / (calls * agg.degradable_handover);
    Ok(theta.max(F::zero()).min(F::one()))
}

/// Per-call channel release rate in state `i`. Degradation slows elastic
/// completions in proportion to the withheld bandwidth fraction.
pub fn release_rate<F: Scalar>(
    i: usize,
    agg: &MixAggregates<F>,
    cell: &CellParameters<F>,
) -> Result<F, ChainError> {
    let theta = degradation_level(i, agg, cell)?;
    Ok(cell.dwell_rate + cell.completion_rate * (F::one() - theta * agg.mean_gamma_handover))
}

/// Builds the chain for `policy` and solves its stationary distribution.
pub fn build_chain<F: Scalar>(
    mix: &TrafficMix<F>,
    cell: &CellParameters<F>,
    policy: SchemePolicy,
) -> Result<ChainModel<F>, ChainError> {
    let agg = mix
        .aggregates()
        .map_err(|e| ChainError::InvalidInput(e.to_string()))?;
    let n_hard = hard_capacity(&agg, cell);
    let lam_total = cell.lambda_new + cell.lambda_handover;
    let mu_full = cell.release_rate_full();

    let (extra_new, extra_handover, new_cutoff, max_state) = match policy {
        SchemePolicy::Proposed => {
            let s = extra_states_handover(&agg, cell);
            let l = extra_states_new(&agg, cell);
            (l, s, n_hard + l, n_hard + s)
        }
        SchemePolicy::NonPrioritizedAdaptive => {
            // Same caps for both arrival types: L coincides with S.
            let s = extra_states_handover(&agg, cell);
            (s, s, n_hard + s, n_hard + s)
        }
        SchemePolicy::HardNoGuard => (0, 0, n_hard, n_hard),
        SchemePolicy::HardGuard { guard_fraction } => {
            let g = F::of(guard_fraction);
            let reserved = (g * cell.capacity / agg.mean_demand)
                .ceil()
                .to_usize()
                .unwrap_or(usize::MAX);
            if reserved > n_hard {
                return Err(ChainError::GuardTooLarge {
                    guard_fraction,
                    n_hard,
                });
            }
            (0, 0, n_hard - reserved, n_hard)
        }
    };
    if max_state == 0 {
        return Err(ChainError::DegenerateChain);
    }

    let mut birth_rates = Vec::with_capacity(max_state);
    let mut death_rates = Vec::with_capacity(max_state);
    for i in 0..max_state {
        birth_rates.push(if i < new_cutoff {
            lam_total
        } else {
            cell.lambda_handover
        });
        let state = i + 1;
        let per_call = if state <= n_hard {
            mu_full
        } else {
            release_rate(state, &agg, cell)?
        };
        death_rates.push(F::from_usize(state).unwrap() * per_call);
    }

    let stationary = stationary_log_product(&birth_rates, &death_rates);
    Ok(ChainModel {
        n_hard,
        extra_new,
        extra_handover,
        new_cutoff,
        birth_rates,
        death_rates,
        stationary,
    })
}

/// Product-form stationary distribution, accumulated and normalized in log
/// domain (log-sum-exp). A zero birth rate truncates the chain there.
fn stationary_log_product<F: Scalar>(birth: &[F], death: &[F]) -> Vec<F> {
    let k = birth.len();
    let mut log_w = Vec::with_capacity(k + 1);
    log_w.push(F::zero());
    for i in 0..k {
        let step = if birth[i] > F::zero() {
            birth[i].ln() - death[i].ln()
        } else {
            F::neg_infinity()
        };
        let prev = *log_w.last().unwrap();
        log_w.push(prev + step);
    }
    let max = log_w.iter().cloned().fold(F::neg_infinity(), F::max);
    let total: F = log_w.iter().map(|&lw| (lw - max).exp()).sum();
    let log_norm = max + total.ln();
    log_w.iter().map(|&lw| (lw - log_norm).exp()).collect()
}

impl<F: Scalar> ChainModel<F> {
    /// K = N + S, the highest state.
    pub fn max_state(&self) -> usize {
        self.birth_rates.len()
    }

    /// New-call blocking probability: mass at and above the new-call cutoff.
    pub fn blocking_probability(&self) -> F {
        self.stationary[self.new_cutoff..].iter().cloned().sum()
    }

    /// Handover dropping probability: mass in the top state.
    pub fn dropping_probability(&self) -> F {
        *self.stationary.last().unwrap()
    }

    /// Expected occupied fraction of capacity; degraded states occupy all of it.
    pub fn utilization(&self, agg: &MixAggregates<F>, cell: &CellParameters<F>) -> F {
        self.stationary
            .iter()
            .enumerate()
            .map(|(i, &p)| p * (F::from_usize(i).unwrap() * agg.mean_demand).min(cell.capacity))
            .sum::<F>()
            / cell.capacity
    }

    /// Mean number of active calls.
    pub fn mean_occupancy(&self) -> F {
        self.stationary
            .iter()
            .enumerate()
            .map(|(i, &p)| p * F::from_usize(i).unwrap())
            .sum()
    }

    pub fn results(&self, agg: &MixAggregates<F>, cell: &CellParameters<F>) -> ChainResults<F> {
        ChainResults {
            p_block: self.blocking_probability(),
            p_drop: self.dropping_probability(),
            utilization: self.utilization(agg, cell),
            mean_occupancy: self.mean_occupancy(),
        }
    }
}
