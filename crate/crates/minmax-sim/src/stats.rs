//! Small statistics toolbox shared by the harness and the test suites:
//! Wilson score intervals, chi-square uniformity tests, ordinary least
//! squares, and binomial majority-vote error.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Wilson score interval for a binomial proportion at critical value `z`
/// (1.96 for 95%).
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (
        ((center - spread) / denom).max(0.0),
        ((center + spread) / denom).min(1.0),
    )
}

/// P-value of a chi-square goodness-of-fit test of `counts` against the
/// uniform distribution over its categories.
pub fn chi_square_uniform_p(counts: &[u64]) -> f64 {
    let k = counts.len();
    if k <= 1 {
        return 1.0;
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 1.0;
    }
    let expected = total as f64 / k as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dist = ChiSquared::new((k - 1) as f64).expect("valid dof");
    1.0 - dist.cdf(stat)
}

/// Ordinary least squares fit `y = slope * x + intercept`.
#[derive(Clone, Debug)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    pub residuals: Vec<f64>,
}

impl LinearFit {
    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Fits a line by least squares. Panics if fewer than two points or
/// mismatched lengths; standard errors are 0 when the fit is exact or
/// under-determined (n == 2).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len(), "mismatched fit inputs");
    assert!(xs.len() >= 2, "need at least two points");
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    assert!(sxx > 0.0, "degenerate fit: all x values equal");
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residuals: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| y - (slope * x + intercept))
        .collect();
    let dof = xs.len().saturating_sub(2);
    let (slope_stderr, intercept_stderr) = if dof > 0 {
        let ssr: f64 = residuals.iter().map(|r| r * r).sum();
        let sigma2 = ssr / dof as f64;
        (
            (sigma2 / sxx).sqrt(),
            (sigma2 * (1.0 / n + mean_x * mean_x / sxx)).sqrt(),
        )
    } else {
        (0.0, 0.0)
    };
    LinearFit {
        slope,
        intercept,
        slope_stderr,
        intercept_stderr,
        residuals,
    }
}

/// Probability that a majority vote of `reps` independent answers, each
/// wrong with probability `epsilon`, is wrong. `reps` must be odd.
pub fn majority_error(epsilon: f64, reps: u32) -> f64 {
    assert!(!reps.is_multiple_of(2), "majority vote needs an odd repetition count");
    let r = reps as u64;
    let mut total = 0.0;
    for wrong in (r / 2 + 1)..=r {
        total += binomial_pmf(r, wrong, epsilon);
    }
    total
}

fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    // Multiplicative form keeps intermediate terms in range for small n.
    let mut acc = 1.0;
    for i in 0..k {
        acc *= (n - i) as f64 / (i + 1) as f64;
    }
    acc * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
