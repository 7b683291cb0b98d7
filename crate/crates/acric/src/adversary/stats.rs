//! Kolmogorov-Smirnov machinery and small statistical helpers for the
//! forgery experiments.

/// P(success within `attempts` tries) when each try succeeds with
/// probability `p` independently.
pub fn geometric_cdf(p: f64, attempts: u64) -> f64 {
    1.0 - (1.0 - p).powf(attempts as f64)
}

/// One-sample KS statistic of `samples` against a reference CDF, evaluating
/// the empirical step from both sides of every sample point.
pub fn ks_statistic(samples: &[u64], cdf: impl Fn(u64) -> f64) -> f64 {
    assert!(!samples.is_empty(), "KS statistic of an empty sample");
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((i as f64 / n - f).abs());
    }
    d
}

/// Two-sample KS statistic; ties are stepped over jointly.
pub fn ks_statistic_two_sample(a: &[u64], b: &[u64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "KS statistic of an empty sample");
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic one-sample critical value at significance 0.05.
pub fn ks_critical_value(n: usize) -> f64 {
    1.358 / (n as f64).sqrt()
}

/// Asymptotic two-sample critical value at significance 0.05.
pub fn ks_critical_value_two_sample(n: usize, m: usize) -> f64 {
    1.358 * (((n + m) as f64) / ((n * m) as f64)).sqrt()
}

/// Three standard deviations of a binomial proportion estimate.
pub fn binomial_three_sigma(p: f64, trials: u64) -> f64 {
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_cdf_basics() {
        assert!((geometric_cdf(0.5, 1) - 0.5).abs() < 1e-12);
        assert!((geometric_cdf(0.5, 2) - 0.75).abs() < 1e-12);
        assert!(geometric_cdf(1.0 / 256.0, 0) == 0.0);
        assert!(geometric_cdf(1.0 / 256.0, 1_000_000) > 0.999);
    }

    #[test]
    fn one_sample_ks_hand_computed() {
        // Samples {1, 2} against the CDF of a fair coin-flip count:
        // F(1) = 0.5, F(2) = 0.75. Steps: sup at x=1 is |1/2 - 1/2| or
        // |0 - 1/2| = 0.5; at x=2 it is |1 - 3/4| = 0.25.
        let d = ks_statistic(&[1, 2], |k| geometric_cdf(0.5, k));
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_sample_ks_hand_computed() {
        // Identical samples: distance zero.
        assert_eq!(ks_statistic_two_sample(&[1, 2, 3], &[1, 2, 3]), 0.0);
        // Disjoint samples: distance one.
        assert_eq!(ks_statistic_two_sample(&[1, 2], &[10, 20]), 1.0);
        // {1,2} vs {2,3}: after x=1, |1/2 - 0| = 0.5; after x=2, |1 - 1/2| = 0.5.
        assert!((ks_statistic_two_sample(&[1, 2], &[2, 3]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn critical_values_match_published_table() {
        assert!((ks_critical_value(1000) - 0.0429).abs() < 5e-4);
        assert!((ks_critical_value_two_sample(1000, 1000) - 0.0607).abs() < 5e-4);
    }

    #[test]
    fn ks_accepts_data_from_the_null() {
        // A seeded geometric sample must pass its own law comfortably.
        use rand::{RngCore, SeedableRng};
        let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(404);
        let p = 1.0 / 256.0;
        let samples: Vec<u64> = (0..1000)
            .map(|_| {
                let mut attempts = 0u64;
                loop {
                    attempts += 1;
                    if (rng.next_u64() & 0xFF) == 0 {
                        break attempts;
                    }
                }
            })
            .collect();
        let d = ks_statistic(&samples, |k| geometric_cdf(p, k));
        assert!(d < ks_critical_value(1000), "D = {d}");
    }
}
