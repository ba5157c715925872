//! Traffic classes, mixes and cell parameters.
//!
//! A class is described by its requested bandwidth and by the two degradation
//! caps: the fraction of that bandwidth the system may take away to admit a
//! new call and (a larger fraction) to admit a handover call. Real-time
//! classes are exactly the classes with a zero handover cap.

use crate::scalar::Scalar;

/// One service class in the mix.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficClass<F> {
    pub name: String,
    /// Mix weight `a_m`, a normalized fraction.
    pub weight: F,
    /// Requested bandwidth per call, kbit/s.
    pub bandwidth_req: F,
    /// Maximum degradation fraction applied to admit a new call.
    pub gamma_new: F,
    /// Maximum degradation fraction applied to admit a handover call.
    pub gamma_handover: F,
}

impl<F: Scalar> TrafficClass<F> {
    /// Minimum allocated bandwidth per call at which a new call is still accepted.
    pub fn bandwidth_new(&self) -> F {
        (F::one() - self.gamma_new) * self.bandwidth_req
    }

    /// Minimum allocated bandwidth per call at which a handover call is still accepted.
    pub fn bandwidth_handover(&self) -> F {
        (F::one() - self.gamma_handover) * self.bandwidth_req
    }

    /// Real-time classes are the classes that cannot be degraded at all.
    pub fn is_real_time(&self) -> bool {
        self.gamma_handover == F::zero()
    }
}

/// The M-class population, weights normalized to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficMix<F> {
    pub classes: Vec<TrafficClass<F>>,
}

/// Weighted sums over the mix that the chain model consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixAggregates<F> {
    /// Mean per-call demand, `Σ a_m β_{m,r}` (kbit/s).
    pub mean_demand: F,
    /// Degradable pool for new-call admission, `Σ a_m γ_{m,n} β_{m,r}` (kbit/s).
    pub degradable_new: F,
    /// Degradable pool for handover admission, `Σ a_m γ_{m,h} β_{m,r}` (kbit/s).
    pub degradable_handover: F,
    /// Mean handover degradation cap, `Σ a_m γ_{m,h}`.
    pub mean_gamma_handover: F,
}

/// Cell-level rates. Arrival streams are Poisson; durations exponential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellParameters<F> {
    /// Cell capacity, kbit/s.
    pub capacity: F,
    /// New call arrival rate, calls/s.
    pub lambda_new: F,
    /// Handover call arrival rate, calls/s.
    pub lambda_handover: F,
    /// Reciprocal of the mean call duration at full allocation, 1/s.
    pub completion_rate: F,
    /// Reciprocal of the mean cell dwell time, 1/s.
    pub dwell_rate: F,
}

impl<F: Scalar> CellParameters<F> {
    /// Undegraded channel release rate: completion plus handover-out.
    pub fn release_rate_full(&self) -> F {
        self.completion_rate + self.dwell_rate
    }
}

/// One violated invariant, with the class it names when class-specific.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub class_index: Option<usize>,
    pub message: String,
}

/// Outcome of [`validate`]; empty iff the inputs satisfy every invariant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for v in &self.violations {
            match v.class_index {
                Some(m) => writeln!(f, "class {}: {}", m, v.message)?,
                None => writeln!(f, "{}", v.message)?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum TrafficError {
    #[error("invalid traffic mix: {0}")]
    InvalidMix(String),
}

const WEIGHT_TOL: f64 = 1e-9;

impl<F: Scalar> TrafficMix<F> {
    /// Builds a mix from unnormalized class ratios, normalizing the weights.
    pub fn from_ratios(mut classes: Vec<TrafficClass<F>>) -> Result<Self, TrafficError> {
        let total: F = classes.iter().map(|c| c.weight).sum();
        if classes.is_empty() {
            return Err(TrafficError::InvalidMix("mix has no classes".into()));
        }
        if !(total > F::zero()) {
            return Err(TrafficError::InvalidMix(
                "class ratios must sum to a positive value".into(),
            ));
        }
        for c in &mut classes {
            c.weight = c.weight / total;
        }
        Ok(Self { classes })
    }

    /// Number of classes M.
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Weighted sums used by the chain builder and the admission rules.
    ///
    /// Fails if the mix violates its invariants, naming the offending class.
    pub fn aggregates(&self) -> Result<MixAggregates<F>, TrafficError> {
        let report = validate_mix(self);
        if let Some(v) = report.violations.first() {
            let ctx = match v.class_index {
                Some(m) => format!("class {}: {}", m, v.message),
                None => v.message.clone(),
            };
            return Err(TrafficError::InvalidMix(ctx));
        }
        let mut mean_demand = F::zero();
        let mut degradable_new = F::zero();
        let mut degradable_handover = F::zero();
        let mut mean_gamma_handover = F::zero();
        for c in &self.classes {
            mean_demand = mean_demand + c.weight * c.bandwidth_req;
            degradable_new = degradable_new + c.weight * c.gamma_new * c.bandwidth_req;
            degradable_handover = degradable_handover + c.weight * c.gamma_handover * c.bandwidth_req;
            mean_gamma_handover = mean_gamma_handover + c.weight * c.gamma_handover;
        }
        Ok(MixAggregates {
            mean_demand,
            degradable_new,
            degradable_handover,
            mean_gamma_handover,
        })
    }
}

fn validate_mix<F: Scalar>(mix: &TrafficMix<F>) -> ValidationReport {
    let mut report = ValidationReport::default();
    if mix.classes.is_empty() {
        report.violations.push(Violation {
            class_index: None,
            message: "mix must contain at least one class".into(),
        });
        return report;
    }
    let total: F = mix.classes.iter().map(|c| c.weight).sum();
    if (total - F::one()).abs() > F::of(WEIGHT_TOL) {
        report.violations.push(Violation {
            class_index: None,
            message: format!("class weights sum to {total}, must be normalized to 1"),
        });
    }
    for (m, c) in mix.classes.iter().enumerate() {
        if !(c.bandwidth_req > F::zero()) {
            report.violations.push(Violation {
                class_index: Some(m),
                message: format!("requested bandwidth must be positive, got {}", c.bandwidth_req),
            });
        }
        if c.weight < F::zero() {
            report.violations.push(Violation {
                class_index: Some(m),
                message: format!("weight must be nonnegative, got {}", c.weight),
            });
        }
        if c.gamma_new < F::zero() || c.gamma_handover >= F::one() || c.gamma_new > c.gamma_handover
        {
            report.violations.push(Violation {
                class_index: Some(m),
                message: format!(
                    "degradation caps must satisfy 0 <= gamma_new <= gamma_handover < 1, got gamma_new={} gamma_handover={}",
                    c.gamma_new, c.gamma_handover
                ),
            });
        }
    }
    report
}

/// Total validation of a mix and cell pair; returns every violation.
pub fn validate<F: Scalar>(mix: &TrafficMix<F>, cell: &CellParameters<F>) -> ValidationReport {
    let mut report = validate_mix(mix);
    if !(cell.capacity > F::zero()) {
        report.violations.push(Violation {
            class_index: None,
            message: format!("cell capacity must be positive, got {}", cell.capacity),
        });
    }
    for (name, rate) in [
        ("lambda_new", cell.lambda_new),
        ("lambda_handover", cell.lambda_handover),
        ("completion_rate", cell.completion_rate),
        ("dwell_rate", cell.dwell_rate),
    ] {
        if rate < F::zero() || !rate.is_finite() {
            report.violations.push(Violation {
                class_index: None,
                message: format!("{name} must be a finite nonnegative rate, got {rate}"),
            });
        }
    }
    if !(cell.completion_rate > F::zero()) && !(cell.dwell_rate > F::zero()) {
        report.violations.push(Violation {
            class_index: None,
            message: "at least one of completion_rate and dwell_rate must be positive".into(),
        });
    }
    report
}
