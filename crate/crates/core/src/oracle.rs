//! Independent verification backends.
//!
//! `solve_stationary` walks the detailed-balance recursion directly in linear
//! domain with periodic rescaling; it deliberately shares no code with the
//! log-domain product form in `chain`, so the two act as independent routes
//! to the same distribution. `erlang_b` is the classical loss recursion, the
//! reduction target when every degradation cap is zero.

use crate::scalar::Scalar;

/// A generic birth-death chain: `death[i]` is the downward rate out of state
/// `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthDeathSpec<F> {
    pub birth: Vec<F>,
    pub death: Vec<F>,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum OracleError {
    #[error("birth and death rate lists must have equal length ({birth} vs {death})")]
    LengthMismatch { birth: usize, death: usize },
    #[error("death rate out of state {0} must be strictly positive")]
    NonPositiveDeath(usize),
}

/// Stationary distribution of `spec` by direct recursion and renormalization.
pub fn solve_stationary<F: Scalar>(spec: &BirthDeathSpec<F>) -> Result<Vec<F>, OracleError> {
    if spec.birth.len() != spec.death.len() {
        return Err(OracleError::LengthMismatch {
            birth: spec.birth.len(),
            death: spec.death.len(),
        });
    }
    for (i, &d) in spec.death.iter().enumerate() {
        if !(d > F::zero()) {
            return Err(OracleError::NonPositiveDeath(i + 1));
        }
    }

    // Unnormalized weights kept as (value, k) with weight = value * R^k for an
    // exact power-of-two rescale factor R, so deep tails neither overflow nor
    // underflow before normalization.
    let rescale = F::of(2.0).powi(600);
    let inv_rescale = F::of(2.0).powi(-600);
    let lo = F::of(2.0).powi(-300);
    let hi = F::of(2.0).powi(300);

    let mut values = vec![F::one()];
    let mut scales = vec![0i64];
    let mut current = F::one();
    let mut scale = 0i64;
    for i in 0..spec.birth.len() {
        current = current * spec.birth[i] / spec.death[i];
        if current > F::zero() {
            while current < lo {
                current = current * rescale;
                scale -= 1;
            }
            while current > hi {
                current = current * inv_rescale;
                scale += 1;
            }
        }
        values.push(current);
        scales.push(scale);
    }

    let top = values
        .iter()
        .zip(&scales)
        .filter(|(v, _)| **v > F::zero())
        .map(|(_, &k)| k)
        .max()
        .unwrap_or(0);
    let mut total = F::zero();
    for (&v, &k) in values.iter().zip(&scales) {
        let mut term = v;
        for _ in 0..(top - k).min(3) {
            term = term * inv_rescale;
        }
        if top - k <= 3 {
            total = total + term;
        }
    }
    Ok(values
        .into_iter()
        .zip(scales)
        .map(|(v, k)| {
            let mut p = v / total;
            for _ in 0..(top - k) {
                p = p * inv_rescale;
                if p == F::zero() {
                    break;
                }
            }
            p
        })
        .collect())
}

/// Erlang-B blocking probability for `servers` circuits at `offered_load`
/// Erlangs, via the recursion `B(n) = A B(n-1) / (n + A B(n-1))`.
pub fn erlang_b<F: Scalar>(servers: usize, offered_load: F) -> F {
    let mut b = F::one();
    for n in 1..=servers {
        let an = offered_load * b;
        b = an / (F::from_usize(n).unwrap() + an);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_chain() {
        let spec = BirthDeathSpec::<f64> { birth: vec![0.3], death: vec![0.6] };
        let p = solve_stationary(&spec).unwrap();
        assert!((p[1] / p[0] - 0.5).abs() < 1e-15);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn three_state_hand_solve() {
        let spec = BirthDeathSpec::<f64> { birth: vec![1.0, 1.0], death: vec![1.0, 2.0] };
        let p = solve_stationary(&spec).unwrap();
        assert!((p[0] - 0.4).abs() < 1e-15);
        assert!((p[1] - 0.4).abs() < 1e-15);
        assert!((p[2] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn zero_births_degenerate() {
        let spec = BirthDeathSpec { birth: vec![0.0, 0.0], death: vec![1.0, 1.0] };
        let p = solve_stationary(&spec).unwrap();
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn rescaling_survives_huge_chains() {
        // ratios of 10 per step for 400 steps would overflow naive products
        let spec = BirthDeathSpec { birth: vec![10.0; 400], death: vec![1.0; 400] };
        let p = solve_stationary(&spec).unwrap();
        let total: f64 = p.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(p[400] > 0.89); // mass concentrates at the top
    }

    #[test]
    fn invalid_specs_rejected() {
        let spec = BirthDeathSpec { birth: vec![1.0], death: vec![] };
        assert!(matches!(
            solve_stationary(&spec),
            Err(OracleError::LengthMismatch { .. })
        ));
        let spec = BirthDeathSpec { birth: vec![1.0], death: vec![0.0] };
        assert_eq!(solve_stationary(&spec), Err(OracleError::NonPositiveDeath(1)));
    }

    #[test]
    fn erlang_b_values() {
        assert_eq!(erlang_b(0, 5.0), 1.0);
        assert_eq!(erlang_b(10, 0.0), 0.0);
        assert!((erlang_b::<f64>(10, 5.0) - 0.018385).abs() < 1e-6);
        assert!((erlang_b::<f64>(1, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn erlang_b_monotone() {
        for n in 1..30usize {
            assert!(erlang_b(n, 8.0) > erlang_b(n + 1, 8.0));
        }
        let mut prev = 0.0;
        for k in 1..40 {
            let b = erlang_b(12, k as f64 * 0.5);
            assert!(b > prev);
            prev = b;
        }
    }
}
