//! Correlation statistics and effect size: Kendall tau-a, Pearson r with
//! p-values, and Vargha-Delaney A12. Test statistics are computed
//! generically; p-values go through statrs distribution CDFs in `f64`.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

use crate::num::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("a coordinate has zero variance; r is undefined")]
    DegenerateVariance,
    #[error("samples must be non-empty")]
    EmptySample,
}

/// Kendall tau-a: `(concordant - discordant) / (n(n-1)/2)`. Ties count in
/// the denominator but in neither pair tally.
pub fn kendall_tau_a<F: Real>(pairs: &[(F, F)]) -> Result<F, StatsError> {
    let n = pairs.len();
    if n < 2 {
        return Err(StatsError::TooFew { needed: 2, got: n });
    }
    let (mut concordant, mut discordant) = (0u64, 0u64);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = pairs[i].0.partial_cmp(&pairs[j].0);
            let dy = pairs[i].1.partial_cmp(&pairs[j].1);
            match (dx, dy) {
                (Some(a), Some(b))
                    if a != std::cmp::Ordering::Equal && b != std::cmp::Ordering::Equal =>
                {
                    if a == b {
                        concordant += 1;
                    } else {
                        discordant += 1;
                    }
                }
                _ => {}
            }
        }
    }
    let total = F::from_count(n * (n - 1) / 2);
    Ok((F::from_u64(concordant).unwrap() - F::from_u64(discordant).unwrap()) / total)
}

/// Two-sided p-value for tau under the normal approximation
/// `var(C - D) = n(n-1)(2n+5)/18`.
pub fn kendall_tau_a_with_p<F: Real>(pairs: &[(F, F)]) -> Result<(F, F), StatsError> {
    let tau = kendall_tau_a(pairs)?;
    let n = pairs.len() as f64;
    // tau * n(n-1)/2 recovers C - D.
    let s = tau.to_f64().unwrap() * n * (n - 1.0) / 2.0;
    let var = n * (n - 1.0) * (2.0 * n + 5.0) / 18.0;
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = s / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        2.0 * (1.0 - normal.cdf(z.abs()))
    };
    Ok((tau, F::from_f64(p.clamp(0.0, 1.0)).unwrap()))
}

/// Pearson product-moment correlation. Errors with
/// [`StatsError::DegenerateVariance`] when a coordinate is constant (r is
/// undefined there, not zero).
pub fn pearson_r<F: Real>(pairs: &[(F, F)]) -> Result<F, StatsError> {
    let n = pairs.len();
    if n < 3 {
        return Err(StatsError::TooFew { needed: 3, got: n });
    }
    let count = F::from_count(n);
    let mean_x = pairs.iter().fold(F::zero(), |a, p| a + p.0) / count;
    let mean_y = pairs.iter().fold(F::zero(), |a, p| a + p.1) / count;
    let mut cov = F::zero();
    let mut var_x = F::zero();
    let mut var_y = F::zero();
    for (x, y) in pairs {
        let dx = *x - mean_x;
        let dy = *y - mean_y;
        cov = cov + dx * dy;
        var_x = var_x + dx * dx;
        var_y = var_y + dy * dy;
    }
    if var_x == F::zero() || var_y == F::zero() {
        return Err(StatsError::DegenerateVariance);
    }
    Ok(cov / (var_x * var_y).sqrt())
}

/// Pearson r with its two-sided p-value from the t-distribution with
/// `n - 2` degrees of freedom.
pub fn pearson_r_with_p<F: Real>(pairs: &[(F, F)]) -> Result<(F, F), StatsError> {
    let r = pearson_r(pairs)?;
    let n = pairs.len() as f64;
    let rf = r.to_f64().unwrap();
    let p = if (1.0 - rf * rf) <= 0.0 {
        0.0
    } else {
        let t = rf * ((n - 2.0) / (1.0 - rf * rf)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, n - 2.0).expect("t distribution");
        2.0 * (1.0 - dist.cdf(t.abs()))
    };
    Ok((r, F::from_f64(p.clamp(0.0, 1.0)).unwrap()))
}

/// Vargha-Delaney effect size:
/// `(#pairs x > y + 0.5 * #ties) / (|X| * |Y|)`.
pub fn a12<F: Real>(sample_x: &[F], sample_y: &[F]) -> Result<F, StatsError> {
    if sample_x.is_empty() || sample_y.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut wins = 0u64;
    let mut ties = 0u64;
    for x in sample_x {
        for y in sample_y {
            match x.partial_cmp(y) {
                Some(std::cmp::Ordering::Greater) => wins += 1,
                Some(std::cmp::Ordering::Equal) => ties += 1,
                _ => {}
            }
        }
    }
    let half = F::from_f64(0.5).unwrap();
    let numer = F::from_u64(wins).unwrap() + half * F::from_u64(ties).unwrap();
    Ok(numer / F::from_count(sample_x.len() * sample_y.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tau_identical_orderings() {
        let pairs: Vec<(f64, f64)> = (0..5).map(|i| (i as f64 / 10.0, i as f64 / 7.0)).collect();
        assert_eq!(kendall_tau_a(&pairs).unwrap(), 1.0);
    }

    #[test]
    fn tau_reversed_orderings() {
        let pairs: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 1.0 - i as f64)).collect();
        assert_eq!(kendall_tau_a(&pairs).unwrap(), -1.0);
    }

    #[test]
    fn tau_hand_example() {
        // (0.1,0.5),(0.2,0.4),(0.3,0.9): 2 concordant, 1 discordant.
        let pairs = vec![(0.1, 0.5), (0.2, 0.4), (0.3, 0.9)];
        let tau: f64 = kendall_tau_a(&pairs).unwrap();
        assert!((tau - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn tau_invariant_under_cubing() {
        let pairs = vec![(0.1, 0.5), (0.4, 0.2), (0.7, 0.9), (0.9, 0.3), (0.2, 0.2)];
        let tau: f64 = kendall_tau_a(&pairs).unwrap();
        let cubed: Vec<(f64, f64)> = pairs.iter().map(|(x, y)| (x.powi(3), *y)).collect();
        assert_eq!(tau, kendall_tau_a(&cubed).unwrap());
    }

    #[test]
    fn pearson_perfect_lines() {
        let up: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        assert!((pearson_r(&up).unwrap() - 1.0).abs() < 1e-12);
        let down: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, -3.0 * i as f64)).collect();
        assert!((pearson_r(&down).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_degenerate_variance_is_an_error() {
        let flat = vec![(1.0, 2.0), (2.0, 2.0), (3.0, 2.0)];
        assert_eq!(pearson_r(&flat), Err(StatsError::DegenerateVariance));
    }

    #[test]
    fn p_values_in_range_and_small_for_strong_correlation() {
        let pairs: Vec<(f64, f64)> = (0..30).map(|i| (i as f64, i as f64 * 1.5)).collect();
        let (tau, pt) = kendall_tau_a_with_p(&pairs).unwrap();
        assert_eq!(tau, 1.0);
        assert!(pt < 0.05);
        let noisy: Vec<(f64, f64)> = (0..30)
            .map(|i| (i as f64, i as f64 + ((i * 37 % 11) as f64)))
            .collect();
        let (_, pr) = pearson_r_with_p(&noisy).unwrap();
        assert!((0.0..=1.0).contains(&pr));
    }

    #[test]
    fn a12_examples() {
        let same = vec![1.0, 2.0, 3.0];
        assert_eq!(a12::<f64>(&same, &same).unwrap(), 0.5);
        let hi = vec![5.0, 6.0];
        let lo = vec![1.0, 2.0];
        assert_eq!(a12::<f64>(&hi, &lo).unwrap(), 1.0);
        // X={1,2}, Y={1,3}: one win (2>1), one tie (1=1) -> 1.5/4.
        let x = vec![1.0, 2.0];
        let y = vec![1.0, 3.0];
        assert_eq!(a12::<f64>(&x, &y).unwrap(), 0.375);
    }

    #[test]
    fn a12_empty_sample_rejected() {
        assert_eq!(a12::<f64>(&[], &[1.0]), Err(StatsError::EmptySample));
    }

    proptest! {
        // a12(x,y) + a12(y,x) = 1 (ties contribute half to each side).
        #[test]
        fn a12_complement(
            x in proptest::collection::vec(0..10i32, 1..12),
            y in proptest::collection::vec(0..10i32, 1..12),
        ) {
            let xf: Vec<f64> = x.iter().map(|v| *v as f64).collect();
            let yf: Vec<f64> = y.iter().map(|v| *v as f64).collect();
            let fwd: f64 = a12(&xf, &yf).unwrap();
            let rev: f64 = a12(&yf, &xf).unwrap();
            prop_assert!((fwd + rev - 1.0).abs() < 1e-12);
        }

        // tau-a is invariant under strictly increasing transforms.
        #[test]
        fn tau_monotone_invariance(
            pairs in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..20)
        ) {
            let tau: f64 = kendall_tau_a(&pairs).unwrap();
            let mapped: Vec<(f64, f64)> =
                pairs.iter().map(|(x, y)| (x * x * x, *y)).collect();
            prop_assert_eq!(tau, kendall_tau_a(&mapped).unwrap());
        }
    }
}
