//! Uniform 1D grids and extended-real sampled functions.
//!
//! `+∞` is represented by `f64::INFINITY` and propagates through IEEE
//! arithmetic (`∞ + finite = ∞`, `min(∞, a) = a`). `−∞` and NaN are rejected
//! at construction so that sums never produce NaN.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TauError};

/// A uniform grid `lo, lo + h, …, lo + (n_points − 1)·h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    lo: f64,
    step: f64,
    n_points: usize,
}

impl GridSpec {
    /// Grid with `n_points` points spanning `[lo, hi]`.
    pub fn new(lo: f64, hi: f64, n_points: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(TauError::InvalidGrid(format!("non-finite bounds [{lo}, {hi}]")));
        }
        if lo >= hi {
            return Err(TauError::InvalidGrid(format!("lo = {lo} must be below hi = {hi}")));
        }
        if n_points < 2 {
            return Err(TauError::InvalidGrid(format!("n_points = {n_points} < 2")));
        }
        let step = (hi - lo) / (n_points - 1) as f64;
        Ok(Self { lo, step, n_points })
    }

    /// Grid starting at `lo` with an explicit step.
    pub fn with_step(lo: f64, step: f64, n_points: usize) -> Result<Self> {
        if !(lo.is_finite() && step.is_finite() && step > 0.0) {
            return Err(TauError::InvalidGrid(format!("lo = {lo}, step = {step}")));
        }
        if n_points < 2 {
            return Err(TauError::InvalidGrid(format!("n_points = {n_points} < 2")));
        }
        Ok(Self { lo, step, n_points })
    }

    /// Grid `{k·step : −half ≤ k ≤ half}`; the origin is the centre point.
    pub fn symmetric(half: usize, step: f64) -> Result<Self> {
        Self::with_step(-(half as f64) * step, step, 2 * half + 1)
    }

    /// Smallest origin-aligned grid with the given step covering `[lo, hi]`.
    pub fn aligned_covering(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo < hi) || !(step > 0.0) {
            return Err(TauError::InvalidGrid(format!("[{lo}, {hi}] step {step}")));
        }
        let k_lo = (lo / step).floor();
        let k_hi = (hi / step).ceil();
        let n = (k_hi - k_lo) as usize + 1;
        Self::with_step(k_lo * step, step, n.max(2))
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.point(self.n_points - 1)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.point(i))
    }

    /// Nearest grid index to `x`, clamped to the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let k = ((x - self.lo) / self.step).round();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.n_points - 1)
        }
    }

    /// `lo / step` as an integer when the grid is aligned with the origin.
    pub fn origin_offset(&self) -> Option<i64> {
        let k = self.lo / self.step;
        let r = k.round();
        ((k - r).abs() <= 1e-6).then_some(r as i64)
    }

    /// Whether `other` has the same step (relative 1e-12).
    pub fn same_step(&self, other: &GridSpec) -> bool {
        (self.step - other.step).abs() <= 1e-12 * self.step.max(other.step)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi()
    }
}

/// Extended-real function sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(TauError::InvalidValues(format!(
                "{} values for a grid of {} points",
                values.len(),
                spec.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(TauError::InvalidValues(format!(
                "value {} at index {i} (NaN and -inf are not allowed)",
                values[i]
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = spec.points().map(f).collect();
        Self::new(spec, values)
    }

    /// Constant function `c` on the grid.
    pub fn constant(spec: GridSpec, c: f64) -> Result<Self> {
        Self::new(spec, vec![c; spec.len()])
    }

    /// `0` at the grid point nearest the origin, `+∞` elsewhere.
    pub fn origin_indicator(spec: GridSpec) -> Result<Self> {
        let mut values = vec![f64::INFINITY; spec.len()];
        values[spec.nearest_index(0.0)] = 0.0;
        Self::new(spec, values)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest absolute slope between adjacent finite samples.
    pub fn max_slope(&self) -> f64 {
        let h = self.spec.step();
        self.values
            .windows(2)
            .filter(|w| w[0].is_finite() && w[1].is_finite())
            .map(|w| (w[1] - w[0]).abs() / h)
            .fold(0.0, f64::max)
    }

    /// Minimum and maximum over the finite samples, if any.
    pub fn finite_range(&self) -> Option<(f64, f64)> {
        let mut it = self.values.iter().copied().filter(|v| v.is_finite());
        let first = it.next()?;
        Some(it.fold((first, first), |(a, b), v| (a.min(v), b.max(v))))
    }

    /// Values shifted by `k` cells: `out[i] = self[i − k]`, `+∞` where undefined.
    pub fn shifted(&self, k: isize) -> GridFunction {
        let n = self.values.len() as isize;
        let values = (0..n)
            .map(|i| {
                let j = i - k;
                if (0..n).contains(&j) {
                    self.values[j as usize]
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        GridFunction { spec: self.spec, values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec::new(1.0, 1.0, 10).is_err());
        assert!(GridSpec::new(0.0, 1.0, 1).is_err());
        assert!(GridSpec::new(f64::NAN, 1.0, 3).is_err());
        assert!(GridSpec::with_step(0.0, 0.0, 3).is_err());
    }

    #[test]
    fn symmetric_grid_has_exact_origin() {
        let g = GridSpec::symmetric(1000, 1e-3).unwrap();
        assert_eq!(g.point(1000), 0.0);
        assert_eq!(g.origin_offset(), Some(-1000));
        assert_eq!(g.len(), 2001);
    }

    #[test]
    fn rejects_nan_and_neg_inf() {
        let g = GridSpec::new(0.0, 1.0, 3).unwrap();
        assert!(GridFunction::new(g, vec![0.0, f64::NAN, 1.0]).is_err());
        assert!(GridFunction::new(g, vec![0.0, f64::NEG_INFINITY, 1.0]).is_err());
        assert!(GridFunction::new(g, vec![0.0, f64::INFINITY, 1.0]).is_ok());
        assert!(GridFunction::new(g, vec![0.0]).is_err());
    }

    #[test]
    fn aligned_covering_contains_interval() {
        let g = GridSpec::aligned_covering(-0.33, 2.71, 0.1).unwrap();
        assert!(g.lo() <= -0.33 && g.hi() >= 2.71);
        assert!(g.origin_offset().is_some());
    }
}
