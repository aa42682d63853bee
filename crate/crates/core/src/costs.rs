//! Cost functions `w` of (τ)-couples and the algebra on them.
//!
//! Every shipped cost is even, convex, vanishes at the origin and is
//! nondecreasing in `|x|`. Evaluation is always closed form; grids only enter
//! through [`infconv_costs`].

use std::fmt;

use crate::error::{Result, TauError};
use crate::grid::{GridFunction, GridSpec};
use crate::infconv;

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    /// `t²/18` on `|t| ≤ 2`, `(2/9)(|t| − 1)` beyond.
    W,
    /// `t²/36` on `|t| ≤ 4`, `(2/9)(|t| − 2)` beyond.
    U,
    Quadratic(f64),
    /// `0` at the origin, `+∞` elsewhere: the identity element of `□`.
    OriginIndicator,
    /// `outer · base(x / inner)`.
    Dilated {
        base: Box<CostFunction>,
        outer: f64,
        inner: f64,
    },
}

/// A one-dimensional cost function with its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct CostFunction {
    kind: Kind,
}

const TWO_NINTHS: f64 = 2.0 / 9.0;

/// The piecewise cost `W`.
pub fn cost_w() -> CostFunction {
    CostFunction { kind: Kind::W }
}

/// The piecewise cost `U = W □ W`, in closed form.
pub fn cost_u() -> CostFunction {
    CostFunction { kind: Kind::U }
}

/// `x ↦ c·x²`; rejects `c ≤ 0`.
pub fn cost_quadratic(c: f64) -> Result<CostFunction> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(TauError::InvalidParameter(format!("quadratic coefficient {c} must be > 0")));
    }
    Ok(CostFunction { kind: Kind::Quadratic(c) })
}

/// `0` at the origin and `+∞` elsewhere.
pub fn cost_origin_indicator() -> CostFunction {
    CostFunction { kind: Kind::OriginIndicator }
}

impl CostFunction {
    /// `x ↦ outer · self(x / inner)`; both factors must be positive.
    pub fn dilated(&self, outer: f64, inner: f64) -> Result<CostFunction> {
        if !(outer > 0.0 && inner > 0.0 && outer.is_finite() && inner.is_finite()) {
            return Err(TauError::InvalidParameter(format!(
                "dilation factors must be positive, got outer = {outer}, inner = {inner}"
            )));
        }
        Ok(CostFunction {
            kind: Kind::Dilated { base: Box::new(self.clone()), outer, inner },
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::W => {
                let a = x.abs();
                if a <= 2.0 {
                    x * x / 18.0
                } else {
                    TWO_NINTHS * (a - 1.0)
                }
            }
            Kind::U => {
                let a = x.abs();
                if a <= 4.0 {
                    x * x / 36.0
                } else {
                    TWO_NINTHS * (a - 2.0)
                }
            }
            Kind::Quadratic(c) => c * x * x,
            Kind::OriginIndicator => {
                if x == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Kind::Dilated { base, outer, inner } => outer * base.eval(x / inner),
        }
    }

    /// First derivative where it exists. At the knots of `W` and `U` the
    /// function is C¹ and the one-sided value `±2/9` is returned.
    pub fn derivative(&self, x: f64) -> Option<f64> {
        match &self.kind {
            Kind::W => Some(if x.abs() <= 2.0 { x / 9.0 } else { TWO_NINTHS * x.signum() }),
            Kind::U => Some(if x.abs() <= 4.0 { x / 18.0 } else { TWO_NINTHS * x.signum() }),
            Kind::Quadratic(c) => Some(2.0 * c * x),
            Kind::OriginIndicator => None,
            Kind::Dilated { base, outer, inner } => {
                base.derivative(x / inner).map(|d| outer / inner * d)
            }
        }
    }

    /// Second derivative; only exposed for quadratic costs.
    pub fn second_derivative(&self, _x: f64) -> Option<f64> {
        match &self.kind {
            Kind::Quadratic(c) => Some(2.0 * c),
            _ => None,
        }
    }

    pub fn is_even(&self) -> bool {
        true
    }

    pub fn is_convex(&self) -> bool {
        true
    }

    pub fn is_quadratic(&self) -> Option<f64> {
        match &self.kind {
            Kind::Quadratic(c) => Some(*c),
            Kind::Dilated { base, outer, inner } => {
                base.is_quadratic().map(|c| outer * c / (inner * inner))
            }
            _ => None,
        }
    }

    /// Interval on which the cost is finite.
    pub fn domain(&self) -> (f64, f64) {
        match &self.kind {
            Kind::OriginIndicator => (0.0, 0.0),
            Kind::Dilated { base, inner, .. } => {
                let (a, b) = base.domain();
                (a * inner, b * inner)
            }
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// `sup{|x| : w(x) ≤ level}` (the cost is even and nondecreasing in `|x|`).
    pub fn radius_at_level(&self, level: f64) -> f64 {
        if level < 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::W => {
                if level <= TWO_NINTHS {
                    (18.0 * level).sqrt()
                } else {
                    level / TWO_NINTHS + 1.0
                }
            }
            Kind::U => {
                if level <= 4.0 * TWO_NINTHS {
                    6.0 * level.sqrt()
                } else {
                    level / TWO_NINTHS + 2.0
                }
            }
            Kind::Quadratic(c) => (level / c).sqrt(),
            Kind::OriginIndicator => 0.0,
            Kind::Dilated { base, outer, inner } => inner * base.radius_at_level(level / outer),
        }
    }

    /// `max |w′|` over the sublevel set `{w ≤ level}`.
    pub fn lipschitz_within_level(&self, level: f64) -> f64 {
        let r = self.radius_at_level(level);
        if !r.is_finite() {
            return f64::INFINITY;
        }
        self.derivative(r).map(f64::abs).unwrap_or(0.0)
    }

    /// `max |w′|` on `[−r, r]`.
    pub fn lipschitz_on(&self, r: f64) -> f64 {
        self.derivative(r.abs()).map(f64::abs).unwrap_or(0.0)
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::W => write!(f, "W"),
            Kind::U => write!(f, "U"),
            Kind::Quadratic(c) => write!(f, "{c}*x^2"),
            Kind::OriginIndicator => write!(f, "delta0"),
            Kind::Dilated { base, outer, inner } => write!(f, "{outer}*{base}(x/{inner})"),
        }
    }
}

/// Coordinate-sum cost `w(x) = Σ wᵢ(xᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableCost {
    components: Vec<CostFunction>,
}

/// Tensorizes 1D costs into a separable cost; rejects an empty list.
pub fn tensorize(costs: Vec<CostFunction>) -> Result<SeparableCost> {
    if costs.is_empty() {
        return Err(TauError::InvalidParameter("cannot tensorize an empty cost list".into()));
    }
    Ok(SeparableCost { components: costs })
}

impl SeparableCost {
    /// `n` copies of the same cost.
    pub fn iid(cost: CostFunction, n: usize) -> Result<Self> {
        tensorize(vec![cost; n])
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[CostFunction] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &CostFunction {
        &self.components[i]
    }

    /// `Σ wᵢ(xᵢ)`; `+∞` as soon as one term is infinite.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.components.len(), "dimension mismatch");
        self.components.iter().zip(x).map(|(w, &xi)| w.eval(xi)).sum()
    }

    pub fn is_convex(&self) -> bool {
        self.components.iter().all(CostFunction::is_convex)
    }
}

/// Samples `w1 □ w2` on `grid`.
///
/// `w1` is sampled on `grid`, `w2` on the origin-centred grid of the same step
/// spanning the full width of `grid`. Fails with
/// [`TauError::BoundaryMinimizer`] when an argmin sits on the edge of either
/// grid away from the trivial split, which means the grid is too short.
pub fn infconv_costs(w1: &CostFunction, w2: &CostFunction, grid: &GridSpec) -> Result<GridFunction> {
    let f = GridFunction::from_fn(*grid, |x| w1.eval(x))?;
    let n = grid.len();
    let kernel_spec = GridSpec::symmetric(n - 1, grid.step())?;
    let (out, argmins) = if kernel_is_finite(w2, &kernel_spec) && w2.is_convex() {
        infconv::infconv_fast_convex_with_argmin(&f, w2)?
    } else {
        let g = GridFunction::from_fn(kernel_spec, |y| w2.eval(y))?;
        infconv::infconv_bruteforce_with_argmin(&f, &g)?
    };
    let last_f = n - 1;
    let last_g = kernel_spec.len() - 1;
    for (i, am) in argmins.iter().enumerate() {
        if let Some((m, j)) = *am {
            let f_edge = (m == 0 || m == last_f) && m != i;
            let g_edge = j == 0 || j == last_g;
            if f_edge || g_edge {
                return Err(TauError::BoundaryMinimizer { x: grid.point(i) });
            }
        }
    }
    Ok(out)
}

fn kernel_is_finite(w: &CostFunction, spec: &GridSpec) -> bool {
    let (a, b) = w.domain();
    a <= spec.lo() && b >= spec.hi()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w_examples() {
        let w = cost_w();
        assert_eq!(w.eval(0.0), 0.0);
        assert!((w.eval(2.0) - 2.0 / 9.0).abs() < 1e-15);
        assert!((w.eval(3.0) - 4.0 / 9.0).abs() < 1e-15);
        // knot continuity
        let left = 4.0 / 18.0;
        let right = TWO_NINTHS * (2.0 - 1.0);
        assert!((left - right).abs() <= 1e-15);
        assert!((w.eval(2.0 + 1e-12) - w.eval(2.0)).abs() < 1e-12);
        assert_eq!(w.derivative(2.0), Some(2.0 / 9.0));
        assert_eq!(w.derivative(-2.5), Some(-TWO_NINTHS));
    }

    #[test]
    fn u_examples() {
        let u = cost_u();
        assert_eq!(u.eval(0.0), 0.0);
        assert!((u.eval(4.0) - 4.0 / 9.0).abs() < 1e-15);
        assert!((u.eval(6.0) - 8.0 / 9.0).abs() < 1e-15);
        assert!((u.eval(4.0 + 1e-12) - u.eval(4.0)).abs() < 1e-12);
        let w = cost_w();
        for k in -2000..=2000 {
            let t = k as f64 * 0.0137;
            assert!((u.eval(t) - 2.0 * w.eval(t / 2.0)).abs() <= 1e-15 * (1.0 + u.eval(t)));
        }
        let dil = w.dilated(2.0, 2.0).unwrap();
        assert!((dil.eval(6.0) - u.eval(6.0)).abs() < 1e-15);
    }

    #[test]
    fn quadratic_examples() {
        assert_eq!(cost_quadratic(0.25).unwrap().eval(2.0), 1.0);
        let a = std::f64::consts::FRAC_PI_2;
        assert_eq!(cost_quadratic(a).unwrap().eval(1.0), a);
        assert_eq!(cost_quadratic(0.5).unwrap().eval(1.0), 0.5);
        assert!(cost_quadratic(0.0).is_err());
        assert!(cost_quadratic(-1.0).is_err());
        assert_eq!(cost_quadratic(0.5).unwrap().second_derivative(3.0), Some(1.0));
        assert_eq!(cost_w().second_derivative(0.0), None);
    }

    #[test]
    fn tensorize_examples() {
        assert!(tensorize(vec![]).is_err());
        let uu = tensorize(vec![cost_u(), cost_u()]).unwrap();
        assert_eq!(uu.eval(&[0.0, 0.0]), 0.0);
        assert!((uu.eval(&[4.0, 6.0]) - 4.0 / 3.0).abs() < 1e-15);
        let w1 = tensorize(vec![cost_w()]).unwrap();
        assert!((w1.eval(&[3.0]) - 4.0 / 9.0).abs() < 1e-15);
        let mixed = tensorize(vec![cost_w(), cost_origin_indicator()]).unwrap();
        assert_eq!(mixed.eval(&[1.0, 0.5]), f64::INFINITY);
    }

    #[test]
    fn derivative_bound_half() {
        let w = cost_w();
        for k in -100_000..=100_000 {
            let s = k as f64 * 1e-4;
            assert!(w.derivative(s).unwrap().abs() <= 0.5);
        }
    }

    #[test]
    fn radius_inverts_cost() {
        for w in [cost_w(), cost_u(), cost_quadratic(0.25).unwrap(), cost_w().dilated(3.0, 0.5).unwrap()] {
            for level in [0.01, 0.1, 0.3, 1.0, 7.5] {
                let r = w.radius_at_level(level);
                assert!((w.eval(r) - level).abs() < 1e-12, "{w} at level {level}");
            }
        }
    }

    #[test]
    fn w_box_w_is_u() {
        let grid = GridSpec::new(-20.0, 20.0, 40_001).unwrap();
        let h = grid.step();
        let out = infconv_costs(&cost_w(), &cost_w(), &grid).unwrap();
        let u = cost_u();
        let lip = TWO_NINTHS;
        for (i, v) in out.values().iter().enumerate() {
            let x = grid.point(i);
            assert!((v - u.eval(x)).abs() <= lip * h + 1e-12, "x = {x}");
        }
        // t = 2 → U(2) = 1/9
        let i2 = grid.nearest_index(2.0);
        assert!((out.values()[i2] - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn origin_indicator_is_identity() {
        let grid = GridSpec::symmetric(500, 0.01).unwrap();
        let out = infconv_costs(&cost_w(), &cost_origin_indicator(), &grid).unwrap();
        for (i, v) in out.values().iter().enumerate() {
            assert_eq!(*v, cost_w().eval(grid.point(i)));
        }
    }

    #[test]
    fn quadratic_infconv_closed_form() {
        let q = cost_quadratic(0.25).unwrap();
        let grid = GridSpec::symmetric(1000, 0.01).unwrap();
        let out = infconv_costs(&q, &q, &grid).unwrap();
        let span = 10.0;
        let lip = q.lipschitz_on(span);
        for (i, v) in out.values().iter().enumerate() {
            let t = grid.point(i);
            assert!((v - t * t / 8.0).abs() <= lip * grid.step(), "t = {t}");
        }
    }

    #[test]
    fn short_grid_is_signalled() {
        // the optimal split x/2 leaves [0.5, 3] for x < 1
        let grid = GridSpec::new(0.5, 3.0, 26).unwrap();
        let r = infconv_costs(&cost_w(), &cost_w(), &grid);
        assert!(matches!(r, Err(TauError::BoundaryMinimizer { .. })));
    }
}
