//! Streaming moments, standard errors and the Kolmogorov–Smirnov statistic.

use serde::{Deserialize, Serialize};

/// Running mean and second central moment (Welford), mergeable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut m = Self::new();
        xs.iter().for_each(|&x| m.push(x));
        m
    }

    /// Chan et al. pairwise merge. Merging in a fixed order gives
    /// reproducible results.
    pub fn merge(&self, other: &Moments) -> Moments {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        Moments { n, mean, m2 }
    }

    pub fn merge_all<'a>(parts: impl IntoIterator<Item = &'a Moments>) -> Moments {
        parts.into_iter().fold(Moments::new(), |acc, m| acc.merge(m))
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Product of two independent means with its delta-method standard error.
pub fn product_with_se(a: &Moments, b: &Moments) -> (f64, f64) {
    let p = a.mean * b.mean;
    let ra = if a.mean != 0.0 { a.std_error() / a.mean } else { 0.0 };
    let rb = if b.mean != 0.0 { b.std_error() / b.mean } else { 0.0 };
    (p, p.abs() * (ra * ra + rb * rb).sqrt())
}

/// Binomial proportion with its standard error.
pub fn proportion(hits: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// One-sample KS statistic `sup |F_n − F|`; `samples` is sorted in place.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (f - lo).abs().max((hi - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at level `alpha`: `√(−ln(α/2)/2) / √n`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let whole = Moments::from_slice(&xs);
        let parts: Vec<Moments> = xs.chunks(77).map(Moments::from_slice).collect();
        let merged = Moments::merge_all(&parts);
        assert_eq!(merged.n, whole.n);
        assert!((merged.mean - whole.mean).abs() < 1e-12);
        assert!((merged.variance() - whole.variance()).abs() < 1e-10);
    }

    #[test]
    fn ks_critical_value_at_1e_minus_3() {
        assert!((ks_critical(1, 1e-3) - 1.94947).abs() < 1e-4);
    }

    #[test]
    fn ks_of_perfect_grid_is_half_step() {
        let mut xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_statistic(&mut xs, |x| x);
        assert!((d - 0.005).abs() < 1e-12);
    }
}
