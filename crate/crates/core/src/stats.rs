//! Small sample statistics.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Median of the means of `batches` contiguous, equal-size blocks.
///
/// Trailing samples that do not fill a block are dropped.
pub fn median_of_means(xs: &[f64], batches: usize) -> f64 {
    let b = batches.max(1).min(xs.len().max(1));
    let size = xs.len() / b;
    if size == 0 {
        return mean(xs);
    }
    let means: Vec<f64> = (0..b).map(|i| mean(&xs[i * size..(i + 1) * size])).collect();
    median(&means)
}

/// Running sums of a stream of samples.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
    pub sum_4: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
        self.sum_4 += x * x * x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.sum_4 += other.sum_4;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Unbiased variance.
    pub fn variance(&self) -> f64 {
        let n = self.count as f64;
        (self.sum_sq - self.sum * self.sum / n) / (n - 1.0)
    }

    pub fn standard_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }

    /// Standard error of the sample second moment E[x²].
    pub fn second_moment_se(&self) -> f64 {
        let n = self.count as f64;
        let m2 = self.sum_sq / n;
        let m4 = self.sum_4 / n;
        ((m4 - m2 * m2).max(0.0) / n).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_means_basic() {
        let xs = [1.0, 1.0, 2.0, 2.0, 100.0, 100.0, 3.0];
        assert_eq!(median_of_means(&xs, 3), 2.0);
        assert_eq!(median(&[3.0, 1.0, 2.0, 4.0]), 2.5);
    }

    #[test]
    fn moments_match_direct() {
        let xs = [0.5, -1.0, 2.0, 3.5];
        let mut m = Moments::default();
        xs.iter().for_each(|x| m.push(*x));
        assert!((m.mean() - mean(&xs)).abs() < 1e-15);
        assert!((m.variance() - variance(&xs)).abs() < 1e-14);
    }
}
