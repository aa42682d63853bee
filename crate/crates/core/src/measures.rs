//! One-dimensional laws, products, atoms and push-forwards.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use statrs::function::erf::{erfc, erfc_inv};

use crate::costs::SeparableCost;
use crate::error::{Result, TauError};
use crate::quadrature;
use crate::rng::{self, tags, StreamRng};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// A probability law on the real line.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure1D {
    /// Density `1_{(0,∞)} e^{−x}`.
    Exponential,
    /// The image of [`Measure1D::Exponential`] under `x ↦ −x`.
    ReflectedExponential,
    /// Density `½ e^{−|x|}`.
    Laplace,
    /// Standard normal.
    Gaussian,
    /// Uniform on `[0, 1]`.
    Uniform01,
    /// Dirac mass at a point.
    PointMass(f64),
    /// Law of `X + Y` for independent `X`, `Y`.
    Convolution(Box<Measure1D>, Box<Measure1D>),
}

pub fn measure_exponential() -> Measure1D {
    Measure1D::Exponential
}

pub fn measure_reflected_exponential() -> Measure1D {
    Measure1D::ReflectedExponential
}

pub fn measure_laplace() -> Measure1D {
    Measure1D::Laplace
}

pub fn measure_gaussian() -> Measure1D {
    Measure1D::Gaussian
}

pub fn measure_uniform01() -> Measure1D {
    Measure1D::Uniform01
}

pub fn measure_point_mass(a: f64) -> Result<Measure1D> {
    if !a.is_finite() {
        return Err(TauError::InvalidParameter(format!("point mass at {a}")));
    }
    Ok(Measure1D::PointMass(a))
}

pub fn convolve(mu1: &Measure1D, mu2: &Measure1D) -> Measure1D {
    Measure1D::Convolution(Box::new(mu1.clone()), Box::new(mu2.clone()))
}

/// Standard normal CDF.
pub fn gaussian_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal quantile, polished with one Newton step.
pub fn gaussian_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        return -gaussian_quantile(1.0 - p);
    }
    let mut x = -SQRT_2 * erfc_inv(2.0 * p);
    let d = INV_SQRT_2PI * (-0.5 * x * x).exp();
    if d > 0.0 {
        x -= (gaussian_cdf(x) - p) / d;
    }
    x
}

const CONV_TOL: f64 = 1e-14;

impl Measure1D {
    pub fn name(&self) -> String {
        match self {
            Measure1D::Exponential => "mu_e".into(),
            Measure1D::ReflectedExponential => "mu_e_reflected".into(),
            Measure1D::Laplace => "xi".into(),
            Measure1D::Gaussian => "gamma".into(),
            Measure1D::Uniform01 => "uniform01".into(),
            Measure1D::PointMass(a) => format!("delta({a})"),
            Measure1D::Convolution(a, b) => format!("{}*{}", a.name(), b.name()),
        }
    }

    /// Closed support `[lo, hi]`, possibly infinite.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Measure1D::Exponential => (0.0, f64::INFINITY),
            Measure1D::ReflectedExponential => (f64::NEG_INFINITY, 0.0),
            Measure1D::Laplace | Measure1D::Gaussian => (f64::NEG_INFINITY, f64::INFINITY),
            Measure1D::Uniform01 => (0.0, 1.0),
            Measure1D::PointMass(a) => (*a, *a),
            Measure1D::Convolution(a, b) => {
                let (a0, a1) = a.support();
                let (b0, b1) = b.support();
                (a0 + b0, a1 + b1)
            }
        }
    }

    pub fn has_density(&self) -> bool {
        match self {
            Measure1D::PointMass(_) => false,
            Measure1D::Convolution(a, b) => a.has_density() || b.has_density(),
            _ => true,
        }
    }

    /// Points where the density is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Measure1D::Exponential | Measure1D::ReflectedExponential | Measure1D::Laplace => vec![0.0],
            Measure1D::Gaussian => vec![],
            Measure1D::Uniform01 => vec![0.0, 1.0],
            Measure1D::PointMass(a) => vec![*a],
            Measure1D::Convolution(a, b) => {
                let mut out = Vec::new();
                for x in a.breakpoints() {
                    for y in b.breakpoints() {
                        out.push(x + y);
                    }
                }
                out
            }
        }
    }

    /// Density; `0` outside the support and for point masses.
    pub fn density(&self, x: f64) -> f64 {
        match self {
            Measure1D::Exponential => {
                if x > 0.0 {
                    (-x).exp()
                } else {
                    0.0
                }
            }
            Measure1D::ReflectedExponential => Measure1D::Exponential.density(-x),
            Measure1D::Laplace => 0.5 * (-x.abs()).exp(),
            Measure1D::Gaussian => INV_SQRT_2PI * (-0.5 * x * x).exp(),
            Measure1D::Uniform01 => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            Measure1D::PointMass(_) => 0.0,
            Measure1D::Convolution(a, b) => match (a.as_ref(), b.as_ref()) {
                (Measure1D::PointMass(s), m) | (m, Measure1D::PointMass(s)) => m.density(x - *s),
                (a, b) => conv_integral(a, b, x, true, |b, z| b.density(z)),
            },
        }
    }

    /// Density with one-sided limits at support endpoints (e.g. `1` at the
    /// origin for the exponential law).
    pub fn density_inner(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        match self {
            Measure1D::Exponential if x == lo => 1.0,
            Measure1D::ReflectedExponential if x == hi => 1.0,
            _ => self.density(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Measure1D::Exponential => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x).exp_m1()
                }
            }
            Measure1D::ReflectedExponential => {
                if x >= 0.0 {
                    1.0
                } else {
                    x.exp()
                }
            }
            Measure1D::Laplace => {
                if x < 0.0 {
                    0.5 * x.exp()
                } else {
                    1.0 - 0.5 * (-x).exp()
                }
            }
            Measure1D::Gaussian => gaussian_cdf(x),
            Measure1D::Uniform01 => x.clamp(0.0, 1.0),
            Measure1D::PointMass(a) => {
                if x >= *a {
                    1.0
                } else {
                    0.0
                }
            }
            Measure1D::Convolution(a, b) => match (a.as_ref(), b.as_ref()) {
                (Measure1D::PointMass(s), m) | (m, Measure1D::PointMass(s)) => m.cdf(x - *s),
                (a, b) => conv_integral(a, b, x, false, |b, z| b.cdf(z)).clamp(0.0, 1.0),
            },
        }
    }

    /// Survival function `1 − cdf`, accurate in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        match self {
            Measure1D::Exponential => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x).exp()
                }
            }
            Measure1D::ReflectedExponential => Measure1D::Exponential.cdf(-x),
            Measure1D::Laplace => Measure1D::Laplace.cdf(-x),
            Measure1D::Gaussian => gaussian_cdf(-x),
            Measure1D::Convolution(a, b) => match (a.as_ref(), b.as_ref()) {
                (Measure1D::PointMass(s), m) | (m, Measure1D::PointMass(s)) => m.sf(x - *s),
                (a, b) => conv_integral(a, b, x, false, |b, z| b.sf(z)).clamp(0.0, 1.0),
            },
            _ => 1.0 - self.cdf(x),
        }
    }

    /// Quantile function on `(0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        if p.is_nan() {
            return f64::NAN;
        }
        let p = p.clamp(0.0, 1.0);
        match self {
            Measure1D::Exponential => -(-p).ln_1p(),
            Measure1D::ReflectedExponential => -Measure1D::Exponential.quantile(1.0 - p),
            Measure1D::Laplace => {
                if p < 0.5 {
                    (2.0 * p).ln()
                } else {
                    -(2.0 * (1.0 - p)).ln()
                }
            }
            Measure1D::Gaussian => gaussian_quantile(p),
            Measure1D::Uniform01 => p,
            Measure1D::PointMass(a) => *a,
            Measure1D::Convolution(a, b) => match (a.as_ref(), b.as_ref()) {
                (Measure1D::PointMass(s), m) | (m, Measure1D::PointMass(s)) => m.quantile(p) + s,
                _ => self.quantile_bisect(p),
            },
        }
    }

    fn quantile_bisect(&self, p: f64) -> f64 {
        let (s_lo, s_hi) = self.support();
        let mut lo = if s_lo.is_finite() { s_lo } else { -1.0 };
        let mut hi = if s_hi.is_finite() { s_hi } else { 1.0 };
        while self.cdf(lo) > p {
            lo = 2.0 * lo - 1.0;
        }
        while self.cdf(hi) < p {
            hi = 2.0 * hi + 1.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// The interval `[quantile(ε), quantile(1 − ε)]`, snapped to finite
    /// support endpoints.
    pub fn quantile_span(&self, eps: f64) -> (f64, f64) {
        let (s_lo, s_hi) = self.support();
        let lo = if s_lo.is_finite() { s_lo } else { self.quantile(eps) };
        let hi = if s_hi.is_finite() {
            s_hi
        } else {
            match self {
                Measure1D::Exponential => -eps.ln(),
                Measure1D::Laplace => -(2.0 * eps).ln(),
                Measure1D::Gaussian => -gaussian_quantile(eps),
                _ => self.quantile(1.0 - eps),
            }
        };
        (lo, hi)
    }

    /// One draw by inversion of an open uniform.
    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        match self {
            Measure1D::Exponential => -rng.uniform_open().ln(),
            Measure1D::ReflectedExponential => rng.uniform_open().ln(),
            Measure1D::Convolution(a, b) => a.sample(rng) + b.sample(rng),
            Measure1D::PointMass(a) => *a,
            _ => self.quantile(rng.uniform_open()),
        }
    }

    /// `n` draws from chunked streams; identical for any thread count.
    pub fn sample_n(&self, n: usize, seed: u64, tag: u32) -> Vec<f64> {
        rng::chunked(n, seed, tag, |r, _, len| (0..len).map(|_| self.sample(r)).collect::<Vec<_>>())
            .into_iter()
            .flatten()
            .collect()
    }

    /// `∫ f dμ` over `[a, b]` against the density, by adaptive quadrature.
    pub fn integrate_density(&self, f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
        let (s_lo, s_hi) = self.support();
        let lo = a.max(s_lo);
        let hi = b.min(s_hi);
        if lo >= hi {
            return Ok((0.0, 0.0));
        }
        let g = |x: f64| {
            let d = self.density(x);
            // far tails: the density underflows before f overflows
            if d == 0.0 {
                0.0
            } else {
                f(x) * d
            }
        };
        quadrature::integrate_pieces(g, lo, hi, &self.breakpoints(), tol)
    }
}

/// `∫ density_a(y) · g(b, x − y) dy` over the support of `a`. With
/// `restrict`, `y` is further limited to where `x − y` lies in the support
/// of `b` (valid when `g` vanishes off that support).
fn conv_integral(a: &Measure1D, b: &Measure1D, x: f64, restrict: bool, g: impl Fn(&Measure1D, f64) -> f64) -> f64 {
    let (mut lo, mut hi) = a.support();
    if restrict {
        let (b_lo, b_hi) = b.support();
        lo = lo.max(x - b_hi);
        hi = hi.min(x - b_lo);
    }
    if lo >= hi {
        return 0.0;
    }
    let mut breaks = a.breakpoints();
    breaks.extend(b.breakpoints().into_iter().map(|t| x - t));
    let integrand = |y: f64| {
        let d = a.density(y);
        if d == 0.0 {
            0.0
        } else {
            d * g(b, x - y)
        }
    };
    quadrature::integrate_pieces(integrand, lo, hi, &breaks, CONV_TOL)
        .map(|(v, _)| v)
        .unwrap_or(f64::NAN)
}

impl fmt::Display for Measure1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Independent product of one-dimensional laws.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMeasure {
    factors: Vec<Measure1D>,
}

impl ProductMeasure {
    pub fn new(factors: Vec<Measure1D>) -> Result<Self> {
        if factors.is_empty() {
            return Err(TauError::InvalidParameter("product of zero factors".into()));
        }
        Ok(Self { factors })
    }

    pub fn iid(m: Measure1D, n: usize) -> Result<Self> {
        Self::new(vec![m; n])
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Measure1D] {
        &self.factors
    }

    /// Draws one point, coordinates in factor order.
    pub fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) {
        for (o, m) in out.iter_mut().zip(&self.factors) {
            *o = m.sample(rng);
        }
    }

    /// `n` points, row-major `n × dim`.
    pub fn sample_n(&self, n: usize, seed: u64, tag: u32) -> Vec<f64> {
        let d = self.dim();
        rng::chunked(n, seed, tag, |r, _, len| {
            let mut buf = vec![0.0; len * d];
            for row in buf.chunks_exact_mut(d) {
                self.sample_into(r, row);
            }
            buf
        })
        .into_iter()
        .flatten()
        .collect()
    }

    pub fn name(&self) -> String {
        let first = &self.factors[0];
        if self.factors.iter().all(|m| m == first) {
            format!("{}^{}", first.name(), self.dim())
        } else {
            let names: Vec<String> = self.factors.iter().map(|m| m.name()).collect();
            names.join("x")
        }
    }
}

/// A finitely supported law.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(TauError::InvalidParameter("no atoms".into()));
        }
        if atoms.iter().any(|&(x, w)| !x.is_finite() || !(w > 0.0)) {
            return Err(TauError::InvalidParameter("atoms need finite points and positive weights".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-15 {
            return Err(TauError::InvalidParameter(format!("weights sum to {total}")));
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.atoms.iter().filter(|a| a.0 <= x).map(|a| a.1).sum()
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        let u = rng.uniform_open();
        let mut acc = 0.0;
        for &(x, w) in &self.atoms {
            acc += w;
            if u < acc {
                return x;
            }
        }
        self.atoms[self.atoms.len() - 1].0
    }

    /// Smallest interval containing every atom.
    pub fn hull(&self) -> (f64, f64) {
        self.atoms
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| (lo.min(a.0), hi.max(a.0)))
    }
}

pub fn measure_bernoulli_half() -> DiscreteMeasure {
    DiscreteMeasure { atoms: vec![(0.0, 0.5), (1.0, 0.5)] }
}

/// Coordinatewise map `Rⁿ → Rⁿ`.
pub type PointMap = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// `Φ` applied to every coordinate; sends `γₙ` to the uniform law on the cube.
pub fn gaussian_cdf_map() -> PointMap {
    Arc::new(|x: &[f64], out: &mut [f64]| {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = gaussian_cdf(v);
        }
    })
}

pub fn identity_map() -> PointMap {
    Arc::new(|x: &[f64], out: &mut [f64]| out.copy_from_slice(x))
}

/// Image of a product law under a map carrying a contraction certificate
/// `w₂(Fx − Fy) ≤ w₁(x − y)`.
#[derive(Clone)]
pub struct Pushforward {
    base: ProductMeasure,
    map: PointMap,
    w1: SeparableCost,
    w2: SeparableCost,
    pairs_checked: usize,
}

impl fmt::Debug for Pushforward {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pushforward")
            .field("base", &self.base.name())
            .field("pairs_checked", &self.pairs_checked)
            .finish()
    }
}

/// Number of random pairs used to spot-check a contraction certificate.
pub const CERTIFICATE_PAIRS: usize = 100_000;

/// Builds `F ∘ base` after spot-checking the certificate on
/// [`CERTIFICATE_PAIRS`] pairs. Half the pairs are independent draws, half
/// are close pairs `(x, x + ε)` where a contraction is tightest.
pub fn pushforward(
    base: ProductMeasure,
    map: PointMap,
    w1: SeparableCost,
    w2: SeparableCost,
    seed: u64,
) -> Result<Pushforward> {
    let d = base.dim();
    if w1.dim() != d || w2.dim() != d {
        return Err(TauError::InvalidParameter(format!(
            "certificate dimensions {} / {} for a {d}-dimensional measure",
            w1.dim(),
            w2.dim()
        )));
    }
    let found = rng::chunked(CERTIFICATE_PAIRS, seed, tags::CERTIFICATE, |r, start, len| {
        let mut x = vec![0.0; d];
        let mut y = vec![0.0; d];
        let mut fx = vec![0.0; d];
        let mut fy = vec![0.0; d];
        let mut diff = vec![0.0; d];
        let mut fdiff = vec![0.0; d];
        for k in 0..len {
            base.sample_into(r, &mut x);
            if (start + k) % 2 == 0 {
                base.sample_into(r, &mut y);
            } else {
                let scale = 10f64.powf(-r.uniform_in(1.0, 6.0));
                for (yi, xi) in y.iter_mut().zip(&x) {
                    *yi = xi + scale * r.uniform_in(-1.0, 1.0);
                }
            }
            map(&x, &mut fx);
            map(&y, &mut fy);
            for i in 0..d {
                diff[i] = x[i] - y[i];
                fdiff[i] = fx[i] - fy[i];
            }
            let lhs = w2.eval(&fdiff);
            let rhs = w1.eval(&diff);
            if lhs > rhs * (1.0 + 1e-9) + 1e-300 {
                return Some((x.clone(), y.clone(), lhs, rhs));
            }
        }
        None
    });
    if let Some((x, y, lhs, rhs)) = found.into_iter().flatten().next() {
        return Err(TauError::CertificateViolation { x, y, lhs, rhs });
    }
    Ok(Pushforward { base, map, w1, w2, pairs_checked: CERTIFICATE_PAIRS })
}

impl Pushforward {
    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn base(&self) -> &ProductMeasure {
        &self.base
    }

    /// The certified pair `(w₁, w₂)`.
    pub fn certificate(&self) -> (&SeparableCost, &SeparableCost) {
        (&self.w1, &self.w2)
    }

    pub fn pairs_checked(&self) -> usize {
        self.pairs_checked
    }

    pub fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) {
        let mut x = vec![0.0; self.dim()];
        self.base.sample_into(rng, &mut x);
        (self.map)(&x, out);
    }

    pub fn sample_n(&self, n: usize, seed: u64, tag: u32) -> Vec<f64> {
        let d = self.dim();
        let raw = self.base.sample_n(n, seed, tag);
        let mut out = vec![0.0; raw.len()];
        for (src, dst) in raw.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
            (self.map)(src, dst);
        }
        out
    }
}

/// `1/√(2π)`, the Lipschitz constant of `Φ`.
pub fn gaussian_cdf_lipschitz() -> f64 {
    1.0 / (2.0 * PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::{cost_quadratic, SeparableCost};
    use std::f64::consts::LN_2;

    #[test]
    fn closed_form_values() {
        let e = measure_exponential();
        assert_eq!(e.cdf(0.0), 0.0);
        assert!((e.cdf(LN_2) - 0.5).abs() < 1e-15);
        assert!((e.density(1.0) - (-1.0f64).exp()).abs() < 1e-16);
        let l = measure_laplace();
        assert_eq!(l.density(0.0), 0.5);
        assert_eq!(l.cdf(0.0), 0.5);
        assert!((l.density(2.0) - 0.5 * (-2.0f64).exp()).abs() < 1e-16);
        let g = measure_gaussian();
        assert_eq!(g.cdf(0.0), 0.5);
        assert!((g.density(0.0) - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-16);
        assert!((g.quantile(g.cdf(1.0)) - 1.0).abs() < 1e-10);
        let u = measure_uniform01();
        assert_eq!(u.cdf(0.25), 0.25);
        assert_eq!(u.density(2.0), 0.0);
        assert_eq!(measure_bernoulli_half().atoms(), &[(0.0, 0.5), (1.0, 0.5)]);
    }

    #[test]
    fn gaussian_tail_quantiles_invert() {
        for &p in &[1e-12, 1e-8, 1e-3, 0.3, 0.5, 0.9, 1.0 - 1e-9] {
            let x = gaussian_quantile(p);
            let back = gaussian_cdf(x);
            assert!(((back - p) / p.min(1.0 - p)).abs() < 1e-9, "p = {p}: {back}");
        }
    }

    #[test]
    fn convolution_of_exponentials_is_laplace() {
        let xi = convolve(&measure_exponential(), &measure_reflected_exponential());
        assert!((xi.density(0.0) - 0.5).abs() < 1e-12);
        for &x in &[-3.0, -0.7, 0.0, 0.4, 2.5] {
            assert!((xi.density(x) - measure_laplace().density(x)).abs() < 1e-12, "x = {x}");
            assert!((xi.cdf(x) - measure_laplace().cdf(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn convolution_of_gaussians_has_variance_two() {
        let g2 = convolve(&measure_gaussian(), &measure_gaussian());
        assert!((g2.density(0.0) - 1.0 / (2.0 * PI.sqrt())).abs() < 1e-8);
    }

    #[test]
    fn point_mass_is_identity_for_convolution() {
        let m = convolve(&measure_point_mass(0.0).unwrap(), &measure_gaussian());
        assert_eq!(m.cdf(0.3), measure_gaussian().cdf(0.3));
        let mut r1 = StreamRng::new(5, 0);
        let mut r2 = StreamRng::new(5, 0);
        assert_eq!(m.sample(&mut r1), measure_gaussian().sample(&mut r2));
    }

    #[test]
    fn discrete_rejects_bad_weights() {
        assert!(DiscreteMeasure::new(vec![(0.0, 0.5), (1.0, 0.4)]).is_err());
        assert!(DiscreteMeasure::new(vec![(0.0, 1.0), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn identity_and_halving_certificates_hold() {
        let g = ProductMeasure::iid(measure_gaussian(), 2).unwrap();
        let q = SeparableCost::iid(cost_quadratic(0.25).unwrap(), 2).unwrap();
        assert!(pushforward(g.clone(), identity_map(), q.clone(), q.clone(), 1).is_ok());
        let half: PointMap = Arc::new(|x: &[f64], o: &mut [f64]| {
            for (oi, xi) in o.iter_mut().zip(x) {
                *oi = xi / 2.0;
            }
        });
        let q1 = SeparableCost::iid(cost_quadratic(1.0).unwrap(), 2).unwrap();
        assert!(pushforward(g.clone(), half, q, q1.clone(), 2).is_ok());
        // Doubling breaks the same certificate.
        let double: PointMap = Arc::new(|x: &[f64], o: &mut [f64]| {
            for (oi, xi) in o.iter_mut().zip(x) {
                *oi = 2.0 * xi;
            }
        });
        let err = pushforward(g, double, q1.clone(), q1, 3).unwrap_err();
        assert!(matches!(err, TauError::CertificateViolation { .. }));
    }
}
