//! Sample summaries and confidence intervals.

use statrs::distribution::{Beta, ContinuousCDF};

use crate::scalar::Scalar;

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Mean, unbiased variance and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary<T: Scalar> {
    pub n: usize,
    pub mean: T,
    pub variance: T,
    pub se: T,
}

impl<T: Scalar> Summary<T> {
    pub fn of(values: &[T]) -> Self {
        let n = values.len();
        if n == 0 {
            return Summary { n, mean: T::nan(), variance: T::nan(), se: T::nan() };
        }
        let nf = T::of(n as f64);
        let mean = values.iter().copied().sum::<T>() / nf;
        let variance = if n > 1 {
            values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / T::of((n - 1) as f64)
        } else {
            T::zero()
        };
        Summary { n, mean, variance, se: (variance / nf).sqrt() }
    }

    pub fn of_ints(values: &[u64]) -> Self {
        let v: Vec<T> = values.iter().map(|&x| T::of(x as f64)).collect();
        Self::of(&v)
    }

    /// Normal-approximation 95% interval for the mean.
    pub fn ci95(&self) -> (T, T) {
        let half = T::of(Z95) * self.se;
        (self.mean - half, self.mean + half)
    }

    /// Standard error of the unbiased variance estimate under a normal model.
    pub fn variance_se(&self) -> T {
        if self.n < 2 {
            return T::nan();
        }
        self.variance * T::of((2.0 / (self.n as f64 - 1.0)).sqrt())
    }
}

/// Exact (Clopper-Pearson) two-sided interval for a binomial proportion.
pub fn clopper_pearson(successes: usize, trials: usize, level: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let alpha = 1.0 - level;
    let k = successes as f64;
    let n = trials as f64;
    let low = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).map(|b| b.inverse_cdf(alpha / 2.0)).unwrap_or(0.0)
    };
    let high = if successes == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).map(|b| b.inverse_cdf(1.0 - alpha / 2.0)).unwrap_or(1.0)
    };
    (low, high)
}

/// Nearest-rank quantile of an ascending slice.
pub fn quantile_sorted<T: Copy>(sorted: &[T], q: f64) -> Option<T> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_basic() {
        let s = Summary::<f64>::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-12);
        let s32 = Summary::<f32>::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s32.mean, 2.5f32);
    }

    #[test]
    fn constant_sample_has_zero_variance() {
        let s = Summary::<f64>::of_ints(&[7, 7, 7]);
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.ci95(), (7.0, 7.0));
    }

    #[test]
    fn clopper_pearson_known_values() {
        // Reference values: k = 0, n = 10 gives upper 1 - 0.025^(1/10).
        let (lo, hi) = clopper_pearson(0, 10, 0.95);
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.025f64.powf(0.1))).abs() < 1e-9);
        let (lo, hi) = clopper_pearson(10, 10, 0.95);
        assert!((lo - 0.025f64.powf(0.1)).abs() < 1e-9);
        assert_eq!(hi, 1.0);
        let (lo, hi) = clopper_pearson(5, 10, 0.95);
        assert!(lo < 0.5 && hi > 0.5 && (lo + hi - 1.0).abs() < 1e-9);
    }

    #[test]
    fn quantiles() {
        let v: Vec<i32> = (1..=1000).collect();
        assert_eq!(quantile_sorted(&v, 0.999), Some(999));
        assert_eq!(quantile_sorted(&v, 1.0), Some(1000));
        assert_eq!(quantile_sorted::<i32>(&[], 0.5), None);
    }
}
