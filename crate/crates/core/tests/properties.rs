//! Property tests: chain/oracle equivalence on random mixes, reduction to
//! Erlang-B, aggregate linearity, monotonicity and simulator physics.

use proptest::prelude::*;

use cac_core::chain::{self, SchemePolicy};
use cac_core::oracle::{self, BirthDeathSpec};
use cac_core::sim::{self, SimConfig};
use cac_core::traffic::{CellParameters, TrafficClass, TrafficMix};

fn class_strategy() -> impl Strategy<Value = TrafficClass<f64>> {
    (1.0f64..200.0, 0.0f64..0.6, 0.0f64..0.35).prop_map(|(bw, gh, extra)| {
        let gn = (gh - extra).max(0.0);
        TrafficClass {
            name: String::new(),
            weight: 1.0,
            bandwidth_req: bw,
            gamma_new: gn,
            gamma_handover: gh,
        }
    })
}

fn mix_strategy() -> impl Strategy<Value = TrafficMix<f64>> {
    prop::collection::vec((class_strategy(), 0.05f64..1.0), 1..8).prop_map(|pairs| {
        let classes = pairs
            .into_iter()
            .map(|(mut c, w)| {
                c.weight = w;
                c
            })
            .collect();
        TrafficMix::from_ratios(classes).unwrap()
    })
}

/// Cell with load spanning roughly 0.1x to 3x the hard capacity.
fn cell_strategy() -> impl Strategy<Value = CellParameters<f64>> {
    (500.0f64..5000.0, 0.1f64..3.0, 0.0f64..1.0).prop_map(|(capacity, load_factor, split)| {
        let mu1 = 1.0 / 120.0 + 1.0 / 240.0;
        // calls-per-second scale set against a nominal 66 kbit/s demand
        let total = load_factor * (capacity / 66.0) * mu1;
        CellParameters {
            capacity,
            lambda_new: total * split,
            lambda_handover: total * (1.0 - split),
            completion_rate: 1.0 / 120.0,
            dwell_rate: 1.0 / 240.0,
        }
    })
}

fn policy_strategy() -> impl Strategy<Value = SchemePolicy> {
    prop_oneof![
        Just(SchemePolicy::Proposed),
        Just(SchemePolicy::NonPrioritizedAdaptive),
        Just(SchemePolicy::HardNoGuard),
        (0.01f64..0.2).prop_map(|g| SchemePolicy::HardGuard { guard_fraction: g }),
    ]
}

proptest! {
    #[test]
    fn chain_matches_oracle(mix in mix_strategy(), cell in cell_strategy(), policy in policy_strategy()) {
        let chain = match chain::build_chain(&mix, &cell, policy) {
            Ok(c) => c,
            Err(_) => return Ok(()), // degenerate or guard-too-large inputs
        };
        let spec = BirthDeathSpec { birth: chain.birth_rates.clone(), death: chain.death_rates.clone() };
        let reference = oracle::solve_stationary(&spec).unwrap();
        for (i, (&a, &b)) in chain.stationary.iter().zip(&reference).enumerate() {
            let scale = a.abs().max(b.abs()).max(1e-290);
            prop_assert!((a - b).abs() / scale <= 1e-9, "state {i}: {a} vs {b}");
        }
        let total: f64 = chain.stationary.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aggregates_linear_in_weights(mix_a in mix_strategy(), t in 0.0f64..1.0) {
        // convex combination of a mix with a reweighted copy of itself
        let mut mix_b = mix_a.clone();
        let n = mix_b.classes.len() as f64;
        for c in &mut mix_b.classes {
            c.weight = 1.0 / n;
        }
        let mut blended = mix_a.clone();
        for (c, b) in blended.classes.iter_mut().zip(&mix_b.classes) {
            c.weight = t * c.weight + (1.0 - t) * b.weight;
        }
        let (a, b, ab) = (
            mix_a.aggregates().unwrap(),
            mix_b.aggregates().unwrap(),
            blended.aggregates().unwrap(),
        );
        let lerp = |x: f64, y: f64| t * x + (1.0 - t) * y;
        prop_assert!((ab.mean_demand - lerp(a.mean_demand, b.mean_demand)).abs() < 1e-9);
        prop_assert!((ab.degradable_new - lerp(a.degradable_new, b.degradable_new)).abs() < 1e-9);
        prop_assert!((ab.degradable_handover - lerp(a.degradable_handover, b.degradable_handover)).abs() < 1e-9);
        prop_assert!((ab.mean_gamma_handover - lerp(a.mean_gamma_handover, b.mean_gamma_handover)).abs() < 1e-9);
    }

    #[test]
    fn degradable_pools_ordered(mix in mix_strategy()) {
        let agg = mix.aggregates().unwrap();
        prop_assert!(agg.degradable_new <= agg.degradable_handover + 1e-12);
        prop_assert!(agg.degradable_handover < agg.mean_demand);
        prop_assert!((0.0..1.0).contains(&agg.mean_gamma_handover));
    }

    #[test]
    fn top_state_degradation_bounded(mix in mix_strategy(), cell in cell_strategy()) {
        let agg = mix.aggregates().unwrap();
        let n = chain::hard_capacity(&agg, &cell);
        let s = chain::extra_states_handover(&agg, &cell);
        if s > 0 {
            let theta = chain::degradation_level(n + s, &agg, &cell).unwrap();
            prop_assert!(theta <= 1.0);
        }
    }

    #[test]
    fn drop_never_exceeds_block(mix in mix_strategy(), cell in cell_strategy()) {
        for policy in [SchemePolicy::Proposed, SchemePolicy::HardGuard { guard_fraction: 0.05 }] {
            let chain = match chain::build_chain(&mix, &cell, policy) {
                Ok(c) => c,
                Err(_) => continue,
            };
            prop_assert!(chain.dropping_probability() <= chain.blocking_probability() + 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Simulator physics over randomized configs and seeds: capacity safety,
    // work conservation under overload, per-call caps, determinism.
    #[test]
    fn simulator_physics(mix in mix_strategy(), cell in cell_strategy(),
                         policy in policy_strategy(), seed in any::<u64>()) {
        let config = SimConfig {
            mix,
            cell,
            policy,
            horizon: 4000.0,
            warmup: 400.0,
            replications: 1,
            seed,
        };
        let (stats_a, trace_a) = sim::run_replication_traced(&config, 0).unwrap();
        for rec in &trace_a {
            prop_assert!(rec.total_allocated <= config.cell.capacity * (1.0 + 1e-9),
                "capacity violated at t={}", rec.time);
            if rec.total_demand > config.cell.capacity {
                prop_assert!((rec.total_allocated - config.cell.capacity).abs()
                    <= 1e-6 * config.cell.capacity,
                    "work conservation violated at t={}: alloc {} vs C {}",
                    rec.time, rec.total_allocated, config.cell.capacity);
            }
            prop_assert!(rec.gamma_within_caps, "per-call cap violated at t={}", rec.time);
        }
        let (stats_b, trace_b) = sim::run_replication_traced(&config, 0).unwrap();
        prop_assert_eq!(stats_a, stats_b);
        prop_assert_eq!(trace_a.len(), trace_b.len());
        for (x, y) in trace_a.iter().zip(&trace_b) {
            prop_assert_eq!(x.to_csv_line(), y.to_csv_line());
        }
    }
}

#[test]
fn erlang_b_reduction_at_zero_gamma() {
    // with no degradable bandwidth every scheme without a guard collapses to
    // an M/M/N/N loss system
    let mix = TrafficMix {
        classes: vec![TrafficClass {
            name: "rt".into(),
            weight: 1.0,
            bandwidth_req: 100.0,
            gamma_new: 0.0,
            gamma_handover: 0.0,
        }],
    };
    let cell = CellParameters {
        capacity: 1000.0,
        lambda_new: 0.05,
        lambda_handover: 0.0125,
        completion_rate: 1.0 / 120.0,
        dwell_rate: 1.0 / 240.0,
    };
    let offered = (cell.lambda_new + cell.lambda_handover) / 0.0125;
    let b: f64 = oracle::erlang_b(10, offered);
    for policy in [
        SchemePolicy::Proposed,
        SchemePolicy::NonPrioritizedAdaptive,
        SchemePolicy::HardNoGuard,
    ] {
        let chain = chain::build_chain(&mix, &cell, policy).unwrap();
        assert!((chain.blocking_probability() - b).abs() < 1e-12, "{policy:?}");
        assert!((chain.dropping_probability() - b).abs() < 1e-12, "{policy:?}");
    }
}

#[test]
fn monotone_in_arrival_rates() {
    let mix = cac_core::reference::reference_mix();
    for policy in [
        SchemePolicy::Proposed,
        SchemePolicy::NonPrioritizedAdaptive,
        SchemePolicy::HardNoGuard,
        SchemePolicy::HardGuard { guard_fraction: 0.05 },
    ] {
        let mut prev: Option<(f64, f64)> = None;
        for step in 1..=20 {
            let cell = cac_core::reference::reference_cell(0.06 * step as f64, 0.03 * step as f64);
            let chain = chain::build_chain(&mix, &cell, policy).unwrap();
            let pb = chain.blocking_probability();
            let pd = chain.dropping_probability();
            if let Some((pb0, pd0)) = prev {
                assert!(pb >= pb0 - 1e-12, "{policy:?} blocking not monotone at step {step}");
                assert!(pd >= pd0 - 1e-12, "{policy:?} dropping not monotone at step {step}");
            }
            prev = Some((pb, pd));
        }
    }
}

#[test]
fn proposed_orders_against_non_prioritized() {
    // fewer new-call states means strictly less dropping and at least as much
    // blocking for the prioritized scheme
    let mix = cac_core::reference::reference_mix();
    let cell = cac_core::reference::reference_cell(0.6, 0.3);
    let proposed = chain::build_chain(&mix, &cell, SchemePolicy::Proposed).unwrap();
    let non_prio = chain::build_chain(&mix, &cell, SchemePolicy::NonPrioritizedAdaptive).unwrap();
    assert!(proposed.extra_new < proposed.extra_handover);
    assert!(proposed.dropping_probability() < non_prio.dropping_probability());
    assert!(proposed.blocking_probability() >= non_prio.blocking_probability());
}
