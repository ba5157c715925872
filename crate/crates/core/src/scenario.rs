//! Scenario files, sweeps and result emission.
//!
//! A scenario is one JSON document: the class mix (unnormalized ratios), cell
//! capacity, mean durations, the arrival-rate sweep, the schemes to compare
//! and optional simulation settings. `run_sweep` evaluates every (policy,
//! grid point) pair analytically and/or by simulation; `emit` writes the
//! fixed-header CSV and per-figure plot data.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chain::{self, SchemePolicy};
use crate::sim::{self, SimConfig};
use crate::traffic::{self, CellParameters, TrafficClass, TrafficMix};

pub const CSV_HEADER: &str =
    "scheme,lambda_new,lambda_handover,N,L,S,p_block,p_drop,utilization,source,ci_block,ci_drop,ci_util";

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassConfig {
    pub name: String,
    /// Unnormalized mix ratio; normalized on load.
    pub ratio: f64,
    pub bandwidth_kbps: f64,
    pub gamma_new: f64,
    pub gamma_handover: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Vary the new-call rate, holding the handover rate at its base value.
    New,
    /// Vary the handover rate, holding the new-call rate at its base value.
    Handover,
    /// Vary the new-call rate with the handover rate locked to a fixed ratio.
    BothFixedRatio,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub vary: SweepVariable,
    /// Grid of arrival rates, calls/s.
    pub values: Vec<f64>,
    /// lambda_handover / lambda_new for `both_fixed_ratio`.
    #[serde(default)]
    pub handover_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimSettings {
    pub horizon_s: f64,
    #[serde(default)]
    pub warmup_s: Option<f64>,
    pub replications: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyConfig {
    Proposed,
    NonPrioritizedAdaptive,
    HardNoGuard,
    HardGuard { guard_fraction: f64 },
}

impl From<PolicyConfig> for SchemePolicy {
    fn from(p: PolicyConfig) -> Self {
        match p {
            PolicyConfig::Proposed => SchemePolicy::Proposed,
            PolicyConfig::NonPrioritizedAdaptive => SchemePolicy::NonPrioritizedAdaptive,
            PolicyConfig::HardNoGuard => SchemePolicy::HardNoGuard,
            PolicyConfig::HardGuard { guard_fraction } => SchemePolicy::HardGuard { guard_fraction },
        }
    }
}

/// On-disk scenario schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub capacity_kbps: f64,
    pub classes: Vec<ClassConfig>,
    /// Defaults to 120 s.
    #[serde(default)]
    pub mean_call_duration_s: Option<f64>,
    /// Defaults to 240 s.
    #[serde(default)]
    pub mean_dwell_time_s: Option<f64>,
    /// Base arrival rates; the sweep overrides the varied one.
    #[serde(default)]
    pub lambda_new_per_s: Option<f64>,
    #[serde(default)]
    pub lambda_handover_per_s: Option<f64>,
    pub sweep: SweepConfig,
    pub policies: Vec<PolicyConfig>,
    #[serde(default)]
    pub sim: Option<SimSettings>,
}

/// Loaded and validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub mix: TrafficMix<f64>,
    pub capacity: f64,
    pub completion_rate: f64,
    pub dwell_rate: f64,
    pub base_lambda_new: f64,
    pub base_lambda_handover: f64,
    pub sweep: SweepConfig,
    pub policies: Vec<SchemePolicy>,
    pub sim: Option<SimSettings>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Analytic,
    Sim,
    Both,
}

/// One output row; `ci_*` are present for simulation rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scheme: String,
    pub lambda_new: f64,
    pub lambda_handover: f64,
    pub n_hard: usize,
    pub extra_new: usize,
    pub extra_handover: usize,
    pub p_block: f64,
    pub p_drop: f64,
    pub utilization: f64,
    pub source: String,
    pub ci_block: Option<f64>,
    pub ci_drop: Option<f64>,
    pub ci_util: Option<f64>,
}

/// A grid point that failed, kept alongside the good rows.
#[derive(Debug, Clone)]
pub struct RowFailure {
    pub scheme: String,
    pub lambda_new: f64,
    pub lambda_handover: f64,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<RowFailure>,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    scenario_from_file(file)
}

fn scenario_from_file(file: ScenarioFile) -> Result<Scenario, ScenarioError> {
    if file.sweep.values.is_empty() {
        return Err(ScenarioError::Invalid("sweep grid must be nonempty".into()));
    }
    if file.policies.is_empty() {
        return Err(ScenarioError::Invalid(
            "at least one policy must be listed".into(),
        ));
    }
    if file.sweep.vary == SweepVariable::BothFixedRatio && file.sweep.handover_ratio.is_none() {
        return Err(ScenarioError::Invalid(
            "sweep.handover_ratio is required when vary = both_fixed_ratio".into(),
        ));
    }
    let classes = file
        .classes
        .iter()
        .map(|c| TrafficClass {
            name: c.name.clone(),
            weight: c.ratio,
            bandwidth_req: c.bandwidth_kbps,
            gamma_new: c.gamma_new,
            gamma_handover: c.gamma_handover,
        })
        .collect();
    let mix = TrafficMix::from_ratios(classes)
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    let completion_rate = 1.0 / file.mean_call_duration_s.unwrap_or(crate::reference::DEFAULT_CALL_DURATION_S);
    let dwell_rate = 1.0 / file.mean_dwell_time_s.unwrap_or(crate::reference::DEFAULT_DWELL_TIME_S);
    let scenario = Scenario {
        mix,
        capacity: file.capacity_kbps,
        completion_rate,
        dwell_rate,
        base_lambda_new: file.lambda_new_per_s.unwrap_or(0.0),
        base_lambda_handover: file.lambda_handover_per_s.unwrap_or(0.0),
        sweep: file.sweep,
        policies: file.policies.into_iter().map(Into::into).collect(),
        sim: file.sim,
    };
    let cell = scenario.cell_at(scenario.sweep.values[0]);
    let report = traffic::validate(&scenario.mix, &cell);
    if !report.is_valid() {
        return Err(ScenarioError::Invalid(report.to_string()));
    }
    Ok(scenario)
}

impl Scenario {
    /// Cell parameters at one sweep grid value.
    pub fn cell_at(&self, value: f64) -> CellParameters<f64> {
        let (lambda_new, lambda_handover) = match self.sweep.vary {
            SweepVariable::New => (value, self.base_lambda_handover),
            SweepVariable::Handover => (self.base_lambda_new, value),
            SweepVariable::BothFixedRatio => {
                (value, value * self.sweep.handover_ratio.unwrap_or(0.0))
            }
        };
        CellParameters {
            capacity: self.capacity,
            lambda_new,
            lambda_handover,
            completion_rate: self.completion_rate,
            dwell_rate: self.dwell_rate,
        }
    }
}

/// Evaluates every (policy, grid point) pair; failures become markers rather
/// than aborting the sweep. Rows are ordered by policy, then rate, then source.
pub fn run_sweep(scenario: &Scenario, mode: RunMode) -> SweepOutcome {
    let mut outcome = SweepOutcome::default();
    for &policy in &scenario.policies {
        for &value in &scenario.sweep.values {
            let cell = scenario.cell_at(value);
            if matches!(mode, RunMode::Analytic | RunMode::Both) {
                match analytic_row(scenario, &cell, policy) {
                    Ok(row) => outcome.rows.push(row),
                    Err(e) => outcome.failures.push(RowFailure {
                        scheme: policy.label(),
                        lambda_new: cell.lambda_new,
                        lambda_handover: cell.lambda_handover,
                        error: e,
                    }),
                }
            }
            if matches!(mode, RunMode::Sim | RunMode::Both) {
                match sim_row(scenario, &cell, policy) {
                    Ok(row) => outcome.rows.push(row),
                    Err(e) => outcome.failures.push(RowFailure {
                        scheme: policy.label(),
                        lambda_new: cell.lambda_new,
                        lambda_handover: cell.lambda_handover,
                        error: e,
                    }),
                }
            }
        }
    }
    outcome
}

fn analytic_row(
    scenario: &Scenario,
    cell: &CellParameters<f64>,
    policy: SchemePolicy,
) -> Result<ResultRow, String> {
    let agg = scenario.mix.aggregates().map_err(|e| e.to_string())?;
    let chain = chain::build_chain(&scenario.mix, cell, policy).map_err(|e| e.to_string())?;
    let results = chain.results(&agg, cell);
    let row = ResultRow {
        scheme: policy.label(),
        lambda_new: cell.lambda_new,
        lambda_handover: cell.lambda_handover,
        n_hard: chain.n_hard,
        extra_new: chain.extra_new,
        extra_handover: chain.extra_handover,
        p_block: results.p_block,
        p_drop: results.p_drop,
        utilization: results.utilization,
        source: "analytic".into(),
        ci_block: None,
        ci_drop: None,
        ci_util: None,
    };
    check_row(&row)?;
    Ok(row)
}

fn sim_row(
    scenario: &Scenario,
    cell: &CellParameters<f64>,
    policy: SchemePolicy,
) -> Result<ResultRow, String> {
    let settings = scenario
        .sim
        .ok_or_else(|| "scenario has no sim settings".to_string())?;
    let agg = scenario.mix.aggregates().map_err(|e| e.to_string())?;
    let config = SimConfig {
        mix: scenario.mix.clone(),
        cell: *cell,
        policy,
        horizon: settings.horizon_s,
        warmup: settings.warmup_s.unwrap_or(settings.horizon_s * 0.1),
        replications: settings.replications,
        seed: settings.seed,
    };
    let stats = sim::run(&config).map_err(|e| e.to_string())?;
    // chain sizes reported alongside for comparison with analytic rows
    let n_hard = chain::hard_capacity(&agg, cell);
    let row = ResultRow {
        scheme: policy.label(),
        lambda_new: cell.lambda_new,
        lambda_handover: cell.lambda_handover,
        n_hard,
        extra_new: chain::extra_states_new(&agg, cell),
        extra_handover: chain::extra_states_handover(&agg, cell),
        p_block: stats.p_block.mean,
        p_drop: stats.p_drop.mean,
        utilization: stats.utilization.mean,
        source: "sim".into(),
        ci_block: stats.p_block.ci_halfwidth,
        ci_drop: stats.p_drop.ci_halfwidth,
        ci_util: stats.utilization.ci_halfwidth,
    };
    check_row(&row)?;
    Ok(row)
}

fn check_row(row: &ResultRow) -> Result<(), String> {
    for (name, v) in [
        ("p_block", row.p_block),
        ("p_drop", row.p_drop),
        ("utilization", row.utilization),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(format!("{name} = {v} out of [0,1]"));
        }
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Serializes rows under the fixed CSV header.
pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{:e},{:e},{},{},{},{:e},{:e},{:e},{},{},{},{}\n",
            r.scheme,
            r.lambda_new,
            r.lambda_handover,
            r.n_hard,
            r.extra_new,
            r.extra_handover,
            r.p_block,
            r.p_drop,
            r.utilization,
            r.source,
            fmt_opt(r.ci_block),
            fmt_opt(r.ci_drop),
            fmt_opt(r.ci_util),
        ));
    }
    out
}

/// Parses CSV produced by [`to_csv`] back into rows.
pub fn from_csv(text: &str) -> Result<Vec<ResultRow>, ScenarioError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| ScenarioError::Invalid("empty CSV".into()))?;
    if header != CSV_HEADER {
        return Err(ScenarioError::Invalid(format!("unexpected header: {header}")));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 13 {
            return Err(ScenarioError::Invalid(format!(
                "line {}: expected 13 fields, got {}",
                lineno + 2,
                f.len()
            )));
        }
        let num = |s: &str, field: &str| -> Result<f64, ScenarioError> {
            s.parse().map_err(|_| {
                ScenarioError::Invalid(format!("line {}: bad {field}: {s}", lineno + 2))
            })
        };
        let opt = |s: &str, field: &str| -> Result<Option<f64>, ScenarioError> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s, field).map(Some)
            }
        };
        rows.push(ResultRow {
            scheme: f[0].into(),
            lambda_new: num(f[1], "lambda_new")?,
            lambda_handover: num(f[2], "lambda_handover")?,
            n_hard: num(f[3], "N")? as usize,
            extra_new: num(f[4], "L")? as usize,
            extra_handover: num(f[5], "S")? as usize,
            p_block: num(f[6], "p_block")?,
            p_drop: num(f[7], "p_drop")?,
            utilization: num(f[8], "utilization")?,
            source: f[9].into(),
            ci_block: opt(f[10], "ci_block")?,
            ci_drop: opt(f[11], "ci_drop")?,
            ci_util: opt(f[12], "ci_util")?,
        });
    }
    Ok(rows)
}

/// Plot-ready series: one column per scheme over the shared rate grid.
/// Produces one table for dropping probability and one for utilization.
pub fn to_plot_data(rows: &[ResultRow]) -> (String, String) {
    let mut schemes: Vec<String> = Vec::new();
    for r in rows {
        if !schemes.contains(&r.scheme) {
            schemes.push(r.scheme.clone());
        }
    }
    let mut by_rate: BTreeMap<u64, BTreeMap<String, (f64, f64)>> = BTreeMap::new();
    for r in rows {
        by_rate
            .entry(r.lambda_new.to_bits())
            .or_default()
            .insert(r.scheme.clone(), (r.p_drop, r.utilization));
    }
    let render = |which: usize| -> String {
        let mut out = String::from("lambda_new");
        for s in &schemes {
            out.push(',');
            out.push_str(s);
        }
        out.push('\n');
        for (&bits, per_scheme) in &by_rate {
            out.push_str(&format!("{:e}", f64::from_bits(bits)));
            for s in &schemes {
                out.push(',');
                if let Some(&(pd, util)) = per_scheme.get(s) {
                    let v = if which == 0 { pd } else { util };
                    out.push_str(&format!("{v:e}"));
                }
            }
            out.push('\n');
        }
        out
    };
    (render(0), render(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_mix_json() -> String {
        serde_json::json!({
            "capacity_kbps": 5000.0,
            "classes": [
                {"name": "conversational-voice", "ratio": 1, "bandwidth_kbps": 25.0, "gamma_new": 0.0, "gamma_handover": 0.0},
                {"name": "conversational-video", "ratio": 1, "bandwidth_kbps": 128.0, "gamma_new": 0.0, "gamma_handover": 0.0},
                {"name": "real-time-gaming", "ratio": 1, "bandwidth_kbps": 56.0, "gamma_new": 0.0, "gamma_handover": 0.0},
                {"name": "buffered-streaming", "ratio": 1, "bandwidth_kbps": 128.0, "gamma_new": 0.2, "gamma_handover": 0.6},
                {"name": "voice-messaging", "ratio": 1, "bandwidth_kbps": 13.0, "gamma_new": 0.2, "gamma_handover": 0.3},
                {"name": "web-browsing", "ratio": 1, "bandwidth_kbps": 56.0, "gamma_new": 0.2, "gamma_handover": 0.5},
                {"name": "background", "ratio": 1, "bandwidth_kbps": 56.0, "gamma_new": 0.5, "gamma_handover": 0.9}
            ],
            "sweep": {"vary": "both_fixed_ratio", "values": [0.1, 0.5], "handover_ratio": 0.5},
            "policies": ["proposed", "hard_no_guard"]
        })
        .to_string()
    }

    #[test]
    fn reference_mix_loads_with_defaults() {
        let sc = parse_scenario(&reference_mix_json()).unwrap();
        assert_eq!(sc.mix.len(), 7);
        let agg = sc.mix.aggregates().unwrap();
        assert!((agg.mean_demand - 66.0).abs() < 1e-12);
        assert!((sc.completion_rate - 1.0 / 120.0).abs() < 1e-15);
        assert!((sc.dwell_rate - 1.0 / 240.0).abs() < 1e-15);
        let cell = sc.cell_at(0.5);
        assert_eq!(cell.lambda_new, 0.5);
        assert_eq!(cell.lambda_handover, 0.25);
    }

    #[test]
    fn zero_ratio_sum_is_invalid() {
        let text = reference_mix_json().replace("\"ratio\":1", "\"ratio\":0");
        assert!(matches!(parse_scenario(&text), Err(ScenarioError::Invalid(_))));
    }

    #[test]
    fn empty_grid_is_invalid() {
        let text = reference_mix_json().replace("[0.1,0.5]", "[]");
        assert!(matches!(parse_scenario(&text), Err(ScenarioError::Invalid(_))));
    }

    #[test]
    fn analytic_sweep_rows_ordered_and_bounded() {
        let sc = parse_scenario(&reference_mix_json()).unwrap();
        let outcome = run_sweep(&sc, RunMode::Analytic);
        assert!(outcome.failures.is_empty());
        assert_eq!(outcome.rows.len(), 4); // 2 policies x 2 rates
        assert_eq!(outcome.rows[0].scheme, "proposed");
        assert_eq!(outcome.rows[2].scheme, "hard_no_guard");
        assert!(outcome.rows[0].lambda_new < outcome.rows[1].lambda_new);
        for r in &outcome.rows {
            assert!((0.0..=1.0).contains(&r.p_block));
            assert!(r.ci_block.is_none());
        }
    }

    #[test]
    fn csv_round_trip() {
        let sc = parse_scenario(&reference_mix_json()).unwrap();
        let outcome = run_sweep(&sc, RunMode::Analytic);
        let csv = to_csv(&outcome.rows);
        assert!(csv.starts_with(CSV_HEADER));
        let parsed = from_csv(&csv).unwrap();
        assert_eq!(parsed.len(), outcome.rows.len());
        for (a, b) in parsed.iter().zip(&outcome.rows) {
            assert_eq!(a.scheme, b.scheme);
            assert!((a.p_block - b.p_block).abs() < 1e-15);
            assert_eq!(a.ci_block, b.ci_block);
        }
    }

    #[test]
    fn analytic_ci_cells_are_empty_not_zero() {
        let sc = parse_scenario(&reference_mix_json()).unwrap();
        let outcome = run_sweep(&sc, RunMode::Analytic);
        let csv = to_csv(&outcome.rows);
        let first = csv.lines().nth(1).unwrap();
        assert!(first.ends_with("analytic,,,"));
    }

    #[test]
    fn plot_data_has_one_column_per_scheme() {
        let sc = parse_scenario(&reference_mix_json()).unwrap();
        let outcome = run_sweep(&sc, RunMode::Analytic);
        let (pd, util) = to_plot_data(&outcome.rows);
        assert_eq!(pd.lines().next().unwrap(), "lambda_new,proposed,hard_no_guard");
        assert_eq!(pd.lines().count(), 3); // header + 2 rates
        assert_eq!(util.lines().count(), 3);
    }
}
