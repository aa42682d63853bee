//! Test functions `φ` for the (τ) functional and the deviation experiments.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, TauError};
use crate::rng::{tags, StreamRng};

/// Values of generated test functions are clamped to `[−CLAMP, CLAMP]`.
pub const CLAMP: f64 = 20.0;
/// Slopes of generated test functions lie in `[−MAX_SLOPE, MAX_SLOPE]`.
pub const MAX_SLOPE: f64 = 5.0;
/// Maximum number of knots or affine pieces in generated functions.
pub const MAX_PIECES: usize = 12;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Generator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestFamily {
    Constant,
    Linear,
    PiecewiseLinear,
    LipschitzSmooth,
    ConvexPiecewiseLinear,
    Indicator,
}

impl TestFamily {
    pub const ALL: [TestFamily; 6] = [
        TestFamily::Constant,
        TestFamily::Linear,
        TestFamily::PiecewiseLinear,
        TestFamily::LipschitzSmooth,
        TestFamily::ConvexPiecewiseLinear,
        TestFamily::Indicator,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            TestFamily::Constant => "constant",
            TestFamily::Linear => "linear",
            TestFamily::PiecewiseLinear => "piecewise-linear",
            TestFamily::LipschitzSmooth => "lipschitz-smooth",
            TestFamily::ConvexPiecewiseLinear => "convex-piecewise-linear",
            TestFamily::Indicator => "indicator",
        }
    }

    pub fn parse(label: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.label() == label)
            .ok_or_else(|| TauError::UnknownFamily(label.to_string()))
    }
}

impl fmt::Display for TestFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A bounded-below, extended-real test function on `Rⁿ`.
#[derive(Clone)]
pub enum TestFunction {
    Constant(f64),
    /// `coef · x + offset`.
    Linear { coef: Vec<f64>, offset: f64 },
    /// 1D interpolant through `(knots[i], values[i])`, constant outside.
    PiecewiseLinear { knots: Vec<f64>, values: Vec<f64> },
    /// `max_k (slopes[k] · x + intercepts[k])`.
    MaxAffine { slopes: Vec<Vec<f64>>, intercepts: Vec<f64> },
    /// 1D `amp · sin(freq · x + phase) + tilt · x`, clamped to `[−CLAMP, CLAMP]`.
    Sine { amp: f64, freq: f64, phase: f64, tilt: f64 },
    /// `0` on `[lo, hi]` (bounds may be infinite), `+∞` elsewhere; 1D.
    Interval { lo: f64, hi: f64 },
    /// `Σᵢ parts[i](xᵢ)`.
    Separable(Vec<TestFunction>),
    /// `min(scale · ‖x‖₁, cap)`.
    L1Capped { scale: f64, cap: f64 },
    /// `‖x‖₂`.
    L2Norm,
    /// Arbitrary closure with optional gradient and Lipschitz constant.
    Custom {
        name: String,
        f: ScalarFn,
        grad: Option<GradientFn>,
        lipschitz: Option<f64>,
        convex: bool,
    },
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl TestFunction {
    pub fn constant(c: f64) -> Self {
        TestFunction::Constant(c)
    }

    /// `λ · x` in 1D.
    pub fn linear_1d(lambda: f64) -> Self {
        TestFunction::Linear { coef: vec![lambda], offset: 0.0 }
    }

    /// `λ · x_axis` in `n` dimensions.
    pub fn coordinate(n: usize, axis: usize, lambda: f64) -> Self {
        let mut coef = vec![0.0; n];
        coef[axis] = lambda;
        TestFunction::Linear { coef, offset: 0.0 }
    }

    pub fn piecewise_linear(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(TauError::InvalidParameter("knots and values must be non-empty and equal length".into()));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(TauError::InvalidParameter("knots must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TauError::InvalidParameter("piecewise-linear values must be finite".into()));
        }
        Ok(TestFunction::PiecewiseLinear { knots, values })
    }

    pub fn max_affine(slopes: Vec<Vec<f64>>, intercepts: Vec<f64>) -> Result<Self> {
        if slopes.is_empty() || slopes.len() != intercepts.len() {
            return Err(TauError::InvalidParameter("need one intercept per affine piece".into()));
        }
        let d = slopes[0].len();
        if slopes.iter().any(|s| s.len() != d) {
            return Err(TauError::InvalidParameter("affine pieces of different dimension".into()));
        }
        Ok(TestFunction::MaxAffine { slopes, intercepts })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(TauError::InvalidParameter(format!("interval [{lo}, {hi}]")));
        }
        Ok(TestFunction::Interval { lo, hi })
    }

    pub fn separable(parts: Vec<TestFunction>) -> Self {
        TestFunction::Separable(parts)
    }

    pub fn custom(name: &str, f: ScalarFn) -> Self {
        TestFunction::Custom { name: name.to_string(), f, grad: None, lipschitz: None, convex: false }
    }

    pub fn with_gradient(self, g: GradientFn) -> Self {
        match self {
            TestFunction::Custom { name, f, lipschitz, convex, .. } => {
                TestFunction::Custom { name, f, grad: Some(g), lipschitz, convex }
            }
            other => other,
        }
    }

    pub fn with_lipschitz(self, l: f64) -> Self {
        match self {
            TestFunction::Custom { name, f, grad, convex, .. } => {
                TestFunction::Custom { name, f, grad, lipschitz: Some(l), convex }
            }
            other => other,
        }
    }

    pub fn family(&self) -> Option<TestFamily> {
        match self {
            TestFunction::Constant(_) => Some(TestFamily::Constant),
            TestFunction::Linear { .. } => Some(TestFamily::Linear),
            TestFunction::PiecewiseLinear { .. } => Some(TestFamily::PiecewiseLinear),
            TestFunction::MaxAffine { .. } => Some(TestFamily::ConvexPiecewiseLinear),
            TestFunction::Sine { .. } => Some(TestFamily::LipschitzSmooth),
            TestFunction::Interval { .. } => Some(TestFamily::Indicator),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            TestFunction::Constant(c) => format!("constant({c})"),
            TestFunction::Linear { coef, offset } => format!("linear({coef:?}, {offset})"),
            TestFunction::PiecewiseLinear { knots, .. } => format!("piecewise-linear({} knots)", knots.len()),
            TestFunction::MaxAffine { slopes, .. } => format!("max-affine({} pieces)", slopes.len()),
            TestFunction::Sine { amp, freq, phase, tilt } => format!("sine({amp}, {freq}, {phase}, {tilt})"),
            TestFunction::Interval { lo, hi } => format!("indicator[{lo}, {hi}]"),
            TestFunction::Separable(p) => {
                let parts: Vec<String> = p.iter().map(|t| t.label()).collect();
                format!("separable({})", parts.join(" + "))
            }
            TestFunction::L1Capped { scale, cap } => format!("min({scale}*|x|_1, {cap})"),
            TestFunction::L2Norm => "|x|_2".into(),
            TestFunction::Custom { name, .. } => name.clone(),
        }
    }

    /// Evaluates at an n-D point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Constant(c) => *c,
            TestFunction::Linear { coef, offset } => coef.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + offset,
            TestFunction::PiecewiseLinear { knots, values } => pl_eval(knots, values, x[0]),
            TestFunction::MaxAffine { slopes, intercepts } => slopes
                .iter()
                .zip(intercepts)
                .map(|(s, b)| s.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b)
                .fold(f64::NEG_INFINITY, f64::max),
            TestFunction::Sine { amp, freq, phase, tilt } => {
                (amp * (freq * x[0] + phase).sin() + tilt * x[0]).clamp(-CLAMP, CLAMP)
            }
            TestFunction::Interval { lo, hi } => {
                if x[0] >= *lo && x[0] <= *hi {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            TestFunction::Separable(parts) => parts.iter().zip(x).map(|(p, &v)| p.eval1(v)).sum(),
            TestFunction::L1Capped { scale, cap } => (scale * x.iter().map(|v| v.abs()).sum::<f64>()).min(*cap),
            TestFunction::L2Norm => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            TestFunction::Custom { f, .. } => f(x),
        }
    }

    pub fn eval1(&self, x: f64) -> f64 {
        self.eval(&[x])
    }

    /// Whether `φ(x) = Σ φᵢ(xᵢ)`, with the 1D parts when so.
    pub fn separable_parts(&self, dim: usize) -> Option<Vec<TestFunction>> {
        match self {
            TestFunction::Separable(p) if p.len() == dim => Some(p.clone()),
            TestFunction::Constant(c) => {
                let mut parts = vec![TestFunction::Constant(0.0); dim];
                parts[0] = TestFunction::Constant(*c);
                Some(parts)
            }
            TestFunction::Linear { coef, offset } if coef.len() == dim => Some(
                coef.iter()
                    .enumerate()
                    .map(|(i, &a)| TestFunction::Linear { coef: vec![a], offset: if i == 0 { *offset } else { 0.0 } })
                    .collect(),
            ),
            _ if dim == 1 => Some(vec![self.clone()]),
            _ => None,
        }
    }

    /// Known Lipschitz constant (Euclidean), if any.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            TestFunction::Constant(_) => Some(0.0),
            TestFunction::Linear { coef, .. } => Some(coef.iter().map(|a| a * a).sum::<f64>().sqrt()),
            TestFunction::PiecewiseLinear { knots, values } => Some(
                knots
                    .windows(2)
                    .zip(values.windows(2))
                    .map(|(k, v)| ((v[1] - v[0]) / (k[1] - k[0])).abs())
                    .fold(0.0, f64::max),
            ),
            TestFunction::MaxAffine { slopes, .. } => {
                Some(slopes.iter().map(|s| s.iter().map(|a| a * a).sum::<f64>().sqrt()).fold(0.0, f64::max))
            }
            TestFunction::Sine { amp, freq, tilt, .. } => Some((amp * freq).abs() + tilt.abs()),
            TestFunction::Separable(parts) => {
                let ls: Option<Vec<f64>> = parts.iter().map(|p| p.lipschitz()).collect();
                ls.map(|v| v.iter().map(|l| l * l).sum::<f64>().sqrt())
            }
            TestFunction::L2Norm => Some(1.0),
            TestFunction::Custom { lipschitz, .. } => *lipschitz,
            // depends on the dimension through ‖·‖₁ ≤ √n‖·‖₂
            TestFunction::L1Capped { .. } | TestFunction::Interval { .. } => None,
        }
    }

    /// A lower bound `inf φ`, when one is known.
    pub fn lower_bound(&self) -> Option<f64> {
        match self {
            TestFunction::Constant(c) => Some(*c),
            TestFunction::PiecewiseLinear { values, .. } => Some(values.iter().copied().fold(f64::INFINITY, f64::min)),
            TestFunction::Sine { .. } => Some(-CLAMP),
            TestFunction::Interval { .. } => Some(0.0),
            TestFunction::Separable(parts) => parts.iter().map(|p| p.lower_bound()).sum(),
            TestFunction::L1Capped { .. } | TestFunction::L2Norm => Some(0.0),
            TestFunction::MaxAffine { intercepts, slopes } => {
                // the generators always include a constant floor piece
                slopes
                    .iter()
                    .zip(intercepts)
                    .filter(|(s, _)| s.iter().all(|&a| a == 0.0))
                    .map(|(_, &b)| b)
                    .reduce(f64::max)
            }
            _ => None,
        }
    }

    /// Whether the function is convex by construction.
    pub fn is_convex(&self) -> bool {
        match self {
            TestFunction::Constant(_)
            | TestFunction::Linear { .. }
            | TestFunction::MaxAffine { .. }
            | TestFunction::Interval { .. }
            | TestFunction::L2Norm => true,
            TestFunction::PiecewiseLinear { knots, values } => {
                let slopes: Vec<f64> = knots
                    .windows(2)
                    .zip(values.windows(2))
                    .map(|(k, v)| (v[1] - v[0]) / (k[1] - k[0]))
                    .collect();
                // constant extension forces both end slopes to zero
                let mut all = vec![0.0];
                all.extend(slopes);
                all.push(0.0);
                all.windows(2).all(|w| w[1] >= w[0] - 1e-12)
            }
            TestFunction::Separable(parts) => parts.iter().all(|p| p.is_convex()),
            TestFunction::Custom { convex, .. } => *convex,
            _ => false,
        }
    }

    /// Analytic gradient where available.
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) -> bool {
        match self {
            TestFunction::Constant(_) => {
                out.iter_mut().for_each(|g| *g = 0.0);
                true
            }
            TestFunction::Linear { coef, .. } => {
                for (o, (i, _)) in out.iter_mut().zip(x.iter().enumerate()) {
                    *o = coef.get(i).copied().unwrap_or(0.0);
                }
                true
            }
            TestFunction::L2Norm => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                for (o, v) in out.iter_mut().zip(x) {
                    *o = if r > 0.0 { v / r } else { 0.0 };
                }
                true
            }
            TestFunction::Custom { grad: Some(g), .. } => {
                g(x, out);
                true
            }
            _ => false,
        }
    }

    /// Central finite-difference gradient with step `h`.
    pub fn gradient_fd(&self, x: &[f64], h: f64, out: &mut [f64]) {
        let mut p = x.to_vec();
        for i in 0..x.len() {
            p[i] = x[i] + h;
            let fp = self.eval(&p);
            p[i] = x[i] - h;
            let fm = self.eval(&p);
            p[i] = x[i];
            out[i] = (fp - fm) / (2.0 * h);
        }
    }
}

fn pl_eval(knots: &[f64], values: &[f64], x: f64) -> f64 {
    let n = knots.len();
    if x <= knots[0] {
        return values[0];
    }
    if x >= knots[n - 1] {
        return values[n - 1];
    }
    let k = knots.partition_point(|&t| t <= x);
    let (x0, x1) = (knots[k - 1], knots[k]);
    let (y0, y1) = (values[k - 1], values[k]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Parameters for [`random_test_functions`].
#[derive(Debug, Clone, Copy)]
pub struct TestFnParams {
    /// Span on which knots, breakpoints and intervals are drawn.
    pub span: (f64, f64),
    /// Dimension of linear and convex families.
    pub dim: usize,
}

impl Default for TestFnParams {
    fn default() -> Self {
        Self { span: (-5.0, 5.0), dim: 1 }
    }
}

/// `count` reproducible test functions of a family; function `i` depends
/// only on `(seed, family, i)`.
pub fn random_test_functions(family: &str, count: usize, seed: u64, params: TestFnParams) -> Result<Vec<TestFunction>> {
    let fam = TestFamily::parse(family)?;
    let (a, b) = params.span;
    if !(a.is_finite() && b.is_finite() && a < b) || params.dim == 0 {
        return Err(TauError::InvalidParameter(format!("span [{a}, {b}], dim {}", params.dim)));
    }
    let fam_id = TestFamily::ALL.iter().position(|f| *f == fam).unwrap() as u64;
    Ok((0..count)
        .map(|i| {
            let mut r = StreamRng::for_chunk(seed, tags::TEST_FUNCTIONS, (fam_id << 24) | i as u64);
            generate(fam, &mut r, params)
        })
        .collect())
}

fn generate(fam: TestFamily, r: &mut StreamRng, p: TestFnParams) -> TestFunction {
    let (a, b) = p.span;
    match fam {
        TestFamily::Constant => TestFunction::Constant(r.uniform_in(-CLAMP, CLAMP)),
        TestFamily::Linear => TestFunction::Linear {
            coef: (0..p.dim).map(|_| r.uniform_in(-MAX_SLOPE, MAX_SLOPE)).collect(),
            offset: 0.0,
        },
        TestFamily::PiecewiseLinear => {
            let n = 2 + r.below(MAX_PIECES as u64 - 1) as usize;
            let mut knots: Vec<f64> = (0..n).map(|_| r.uniform_in(a, b)).collect();
            knots.sort_by(|x, y| x.total_cmp(y));
            knots.dedup();
            let mut values = Vec::with_capacity(knots.len());
            let mut v = r.uniform_in(-CLAMP, CLAMP);
            values.push(v);
            for w in knots.windows(2) {
                v = (v + r.uniform_in(-MAX_SLOPE, MAX_SLOPE) * (w[1] - w[0])).clamp(-CLAMP, CLAMP);
                values.push(v);
            }
            TestFunction::PiecewiseLinear { knots, values }
        }
        TestFamily::LipschitzSmooth => {
            let freq = r.uniform_in(0.1, 3.0);
            let tilt = r.uniform_in(-1.0, 1.0);
            let amp_max = (MAX_SLOPE - tilt.abs()) / freq;
            TestFunction::Sine {
                amp: r.uniform_in(0.0, amp_max.min(CLAMP / 2.0)),
                freq,
                phase: r.uniform_in(0.0, std::f64::consts::TAU),
                tilt,
            }
        }
        TestFamily::ConvexPiecewiseLinear => {
            let m = 1 + r.below(MAX_PIECES as u64 - 1) as usize;
            let mut slopes: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
            let mut intercepts = Vec::with_capacity(m + 1);
            let centre: Vec<f64> = (0..p.dim).map(|_| r.uniform_in(a, b)).collect();
            for _ in 0..m {
                let s: Vec<f64> = (0..p.dim).map(|_| r.uniform_in(-MAX_SLOPE, MAX_SLOPE)).collect();
                let level = r.uniform_in(-CLAMP / 2.0, CLAMP / 2.0);
                let b0 = level - s.iter().zip(&centre).map(|(si, ci)| si * ci).sum::<f64>();
                slopes.push(s);
                intercepts.push(b0);
            }
            slopes.push(vec![0.0; p.dim]);
            intercepts.push(-CLAMP);
            TestFunction::MaxAffine { slopes, intercepts }
        }
        TestFamily::Indicator => {
            let x = r.uniform_in(a, b);
            let y = r.uniform_in(a, b);
            match r.below(3) {
                0 => TestFunction::Interval { lo: x.min(y), hi: x.max(y) },
                1 => TestFunction::Interval { lo: x, hi: f64::INFINITY },
                _ => TestFunction::Interval { lo: f64::NEG_INFINITY, hi: x },
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_are_reproducible() {
        let p = TestFnParams::default();
        for fam in TestFamily::ALL {
            let a = random_test_functions(fam.label(), 5, 42, p).unwrap();
            let b = random_test_functions(fam.label(), 5, 42, p).unwrap();
            for (x, y) in a.iter().zip(&b) {
                for &t in &[-3.0, -0.5, 0.0, 1.7, 4.2] {
                    let (u, v) = (x.eval1(t), y.eval1(t));
                    assert!(u == v || (u.is_infinite() && v.is_infinite()));
                }
            }
        }
    }

    #[test]
    fn constants_are_in_range() {
        let fs = random_test_functions("constant", 3, 1, TestFnParams::default()).unwrap();
        assert_eq!(fs.len(), 3);
        for f in fs {
            let v = f.eval1(0.0);
            assert!((-CLAMP..=CLAMP).contains(&v));
        }
    }

    #[test]
    fn linear_slopes_are_bounded() {
        for f in random_test_functions("linear", 50, 2, TestFnParams::default()).unwrap() {
            let l = f.eval1(1.0) - f.eval1(0.0);
            assert!(l.abs() <= MAX_SLOPE);
        }
    }

    #[test]
    fn piecewise_linear_respects_bounds() {
        let p = TestFnParams { span: (-10.0, 10.0), dim: 1 };
        for f in random_test_functions("piecewise-linear", 200, 3, p).unwrap() {
            assert!(f.lipschitz().unwrap() <= MAX_SLOPE + 1e-12);
            for i in 0..400 {
                let v = f.eval1(-20.0 + 0.1 * i as f64);
                assert!((-CLAMP..=CLAMP).contains(&v));
            }
        }
    }

    #[test]
    fn convex_family_is_midpoint_convex() {
        let p = TestFnParams { span: (0.0, 1.0), dim: 3 };
        let mut r = StreamRng::new(9, 0);
        for f in random_test_functions("convex-piecewise-linear", 50, 4, p).unwrap() {
            assert!(f.is_convex());
            for _ in 0..100 {
                let x: Vec<f64> = (0..3).map(|_| r.uniform_in(-2.0, 2.0)).collect();
                let y: Vec<f64> = (0..3).map(|_| r.uniform_in(-2.0, 2.0)).collect();
                let m: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
                assert!(f.eval(&m) <= 0.5 * (f.eval(&x) + f.eval(&y)) + 1e-12);
            }
            assert!(f.lower_bound().unwrap() >= -CLAMP);
        }
    }

    #[test]
    fn unknown_family_is_rejected() {
        let err = random_test_functions("quartic", 1, 0, TestFnParams::default()).unwrap_err();
        assert!(matches!(err, TauError::UnknownFamily(_)));
    }

    #[test]
    fn finite_difference_matches_analytic() {
        let f = TestFunction::L2Norm;
        let x = [0.3, -1.2, 2.0];
        let mut g = [0.0; 3];
        let mut fd = [0.0; 3];
        assert!(f.gradient(&x, &mut g));
        f.gradient_fd(&x, 1e-5, &mut fd);
        for i in 0..3 {
            assert!((g[i] - fd[i]).abs() < 1e-6);
        }
    }
}
