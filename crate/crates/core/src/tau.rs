//! The (τ) functional `(∫ e^{φ□w} dμ)(∫ e^{−φ} dμ)`.
//!
//! * [`tau_eval_1d`]: trapezoid quadrature on a grid, `φ□w` by the grid engine.
//! * [`tau_eval_nd_mc`]: Monte Carlo on product measures with independent
//!   sample sets for the two integrals.
//! * [`tau_eval_discrete`]: exact sums over atoms.
//! * [`prekopa_leindler_check`]: the functional Brunn–Minkowski inequality on
//!   a grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costs::{cost_quadratic, cost_u, cost_w, CostFunction, SeparableCost};
use crate::error::{Result, TauError};
use crate::grid::{GridFunction, GridSpec};
use crate::infconv::{
    full_span_kernel, infconv_bruteforce, infconv_fast_convex, infconv_lattice, infconv_pointwise, LatticeFunction,
    PointwiseOptions, SearchStrategy,
};
use crate::measures::{
    measure_bernoulli_half, measure_exponential, measure_gaussian, measure_laplace, DiscreteMeasure, Measure1D,
    ProductMeasure, Pushforward,
};
use crate::quadrature::{trapezoid_error_proxy, trapezoid_runs};
use crate::rng::{self, tags, StreamRng};
use crate::stats::{product_with_se, Moments};
use crate::testfn::{TestFunction, CLAMP};

/// Quantile level defining the span a 1D grid must cover.
pub const QUANTILE_EPS: f64 = 1e-12;
/// Smallest Monte Carlo sample count accepted.
pub const MIN_MC_SAMPLES: usize = 10_000;
/// Largest number of atoms summed exactly.
pub const MAX_ATOMS: u128 = 1 << 20;

/// Outcome of a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    /// The bound is `+∞` (e.g. a null set), so it holds trivially.
    VacuousPass,
    Fail,
    /// The evaluation could not certify its own accuracy.
    Inconclusive,
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass | Verdict::VacuousPass)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::VacuousPass => "vacuous-pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// The measure of a couple.
#[derive(Debug, Clone)]
pub enum CoupleMeasure {
    Line(Measure1D),
    Product(ProductMeasure),
    Image(Pushforward),
    Atoms(DiscreteMeasure),
    AtomProduct(Vec<DiscreteMeasure>),
}

impl CoupleMeasure {
    pub fn dim(&self) -> usize {
        match self {
            CoupleMeasure::Line(_) | CoupleMeasure::Atoms(_) => 1,
            CoupleMeasure::Product(p) => p.dim(),
            CoupleMeasure::Image(p) => p.dim(),
            CoupleMeasure::AtomProduct(v) => v.len(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            CoupleMeasure::Line(m) => m.name(),
            CoupleMeasure::Product(p) => p.name(),
            CoupleMeasure::Image(p) => format!("F#{}", p.base().name()),
            CoupleMeasure::Atoms(_) => "bernoulli".into(),
            CoupleMeasure::AtomProduct(v) => format!("bernoulli^{}", v.len()),
        }
    }
}

/// The cost of a couple.
#[derive(Debug, Clone, PartialEq)]
pub enum CoupleCost {
    Line(CostFunction),
    Separable(SeparableCost),
}

impl CoupleCost {
    pub fn dim(&self) -> usize {
        match self {
            CoupleCost::Line(_) => 1,
            CoupleCost::Separable(s) => s.dim(),
        }
    }

    fn as_separable(&self) -> SeparableCost {
        match self {
            CoupleCost::Line(c) => SeparableCost::iid(c.clone(), 1).expect("one component"),
            CoupleCost::Separable(s) => s.clone(),
        }
    }

    fn component(&self, k: usize) -> &CostFunction {
        match self {
            CoupleCost::Line(c) => c,
            CoupleCost::Separable(s) => s.component(k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Every bounded measurable `φ`.
    Plain,
    /// Convex `φ` only.
    Convex,
}

/// A measure–cost pair together with the statement that certifies it.
#[derive(Debug, Clone)]
pub struct TauCouple {
    pub measure: CoupleMeasure,
    pub cost: CoupleCost,
    pub variant: Variant,
    pub provenance: String,
}

impl TauCouple {
    pub fn new(measure: CoupleMeasure, cost: CoupleCost, variant: Variant, provenance: &str) -> Result<Self> {
        if measure.dim() != cost.dim() {
            return Err(TauError::InvalidParameter(format!(
                "measure dimension {} vs cost dimension {}",
                measure.dim(),
                cost.dim()
            )));
        }
        for k in 0..cost.dim() {
            let c = cost.component(k);
            if c.eval(0.0) != 0.0 {
                return Err(TauError::InvalidParameter(format!("cost {c} is not zero at the origin")));
            }
            if variant == Variant::Convex && !c.is_convex() {
                return Err(TauError::NotConvex(c.label()));
            }
        }
        Ok(Self { measure, cost, variant, provenance: provenance.to_string() })
    }

    /// `(μ_e, W)`.
    pub fn exponential_w() -> Self {
        Self::new(CoupleMeasure::Line(measure_exponential()), CoupleCost::Line(cost_w()), Variant::Plain, "exponential-w")
            .expect("valid couple")
    }

    /// `(ξ, U)`.
    pub fn laplace_u() -> Self {
        Self::new(CoupleMeasure::Line(measure_laplace()), CoupleCost::Line(cost_u()), Variant::Plain, "laplace-u")
            .expect("valid couple")
    }

    /// `(γ, x²/4)`.
    pub fn gaussian_quarter() -> Self {
        Self::new(
            CoupleMeasure::Line(measure_gaussian()),
            CoupleCost::Line(cost_quadratic(0.25).expect("positive")),
            Variant::Plain,
            "gaussian-quarter",
        )
        .expect("valid couple")
    }

    /// `(β, x²/2)` in the convex variant.
    pub fn bernoulli_half_quadratic() -> Self {
        Self::new(
            CoupleMeasure::Atoms(measure_bernoulli_half()),
            CoupleCost::Line(cost_quadratic(0.5).expect("positive")),
            Variant::Convex,
            "bernoulli-half-quadratic",
        )
        .expect("valid couple")
    }

    /// `(ξₙ, Uₙ)`.
    pub fn laplace_product(n: usize) -> Result<Self> {
        Self::new(
            CoupleMeasure::Product(ProductMeasure::iid(measure_laplace(), n)?),
            CoupleCost::Separable(SeparableCost::iid(cost_u(), n)?),
            Variant::Plain,
            "laplace-product-u",
        )
    }

    /// `(γₙ, ‖x‖²/4)`.
    pub fn gaussian_product(n: usize) -> Result<Self> {
        Self::new(
            CoupleMeasure::Product(ProductMeasure::iid(measure_gaussian(), n)?),
            CoupleCost::Separable(SeparableCost::iid(cost_quadratic(0.25)?, n)?),
            Variant::Plain,
            "gaussian-product-quarter",
        )
    }

    /// `(βⁿ, Σ xᵢ²/2)` in the convex variant.
    pub fn bernoulli_product(n: usize) -> Result<Self> {
        Self::new(
            CoupleMeasure::AtomProduct(vec![measure_bernoulli_half(); n]),
            CoupleCost::Separable(SeparableCost::iid(cost_quadratic(0.5)?, n)?),
            Variant::Convex,
            "bernoulli-product-half",
        )
    }

    pub fn label(&self) -> String {
        let cost = match &self.cost {
            CoupleCost::Line(c) => c.label(),
            CoupleCost::Separable(s) => format!("sum({})", s.component(0).label()),
        };
        format!("({}, {})", self.measure.name(), cost)
    }
}

/// Components of an error budget, each relative to the product.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetBreakdown {
    pub quadrature: f64,
    pub discretization: f64,
    pub tails: f64,
    pub monte_carlo: f64,
    pub solver: f64,
}

impl BudgetBreakdown {
    pub fn total(&self) -> f64 {
        self.quadrature + self.discretization + self.tails + self.monte_carlo + self.solver
    }
}

/// Result of one (τ) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauCoupleReport {
    pub integral_pos: f64,
    pub integral_neg: f64,
    pub product: f64,
    pub error_budget: f64,
    pub verdict: Verdict,
    /// Standard error of the product (Monte Carlo only).
    pub std_error: Option<f64>,
    pub breakdown: BudgetBreakdown,
    /// Samples whose inner minimization touched its search boundary.
    pub boundary_hits: u64,
}

fn verdict_for(product: f64, budget: f64) -> Verdict {
    if product <= 1.0 + budget {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn finite_or_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

/// `φ □ w` on the grid of `phi`, with the convex fast path when it applies.
pub fn infconv_on_grid(phi: &GridFunction, w: &CostFunction) -> Result<GridFunction> {
    let kernel = full_span_kernel(phi.spec())?;
    let (a, b) = w.domain();
    if w.is_convex() && a <= kernel.lo() && b >= kernel.hi() {
        infconv_fast_convex(phi, w)
    } else {
        let g = GridFunction::from_fn(kernel, |y| w.eval(y))?;
        infconv_bruteforce(phi, &g)
    }
}

/// A 1D grid covering `[quantile(ε), quantile(1 − ε)]` of `mu` with step `h`.
pub fn quantile_grid(mu: &Measure1D, step: f64) -> Result<GridSpec> {
    let (lo, hi) = mu.quantile_span(QUANTILE_EPS);
    GridSpec::aligned_covering(lo, hi, step)
}

/// (τ) for a 1D couple by quadrature on `grid`.
///
/// `φ` is sampled on the grid and `φ □ w` uses only grid points, which can
/// only increase it; the budget combines the trapezoid error proxy, the
/// Lipschitz discretization bound `(L_φ + L_w)·h/2`, and the exactly
/// integrated mass of both integrands outside the grid.
pub fn tau_eval_1d(couple: &TauCouple, phi: &TestFunction, grid: &GridSpec) -> Result<TauCoupleReport> {
    let (mu, w) = match (&couple.measure, &couple.cost) {
        (CoupleMeasure::Line(m), CoupleCost::Line(w)) => (m, w),
        _ => return Err(TauError::Unsupported("tau_eval_1d needs a 1D measure and cost".into())),
    };
    let h = grid.step();
    let (qlo, qhi) = mu.quantile_span(QUANTILE_EPS);
    if grid.lo() > qlo + 0.5 * h || grid.hi() < qhi - 0.5 * h {
        return Err(TauError::InvalidGrid(format!(
            "grid [{}, {}] does not cover the quantile span [{qlo}, {qhi}]",
            grid.lo(),
            grid.hi()
        )));
    }
    let phi_vals: Vec<f64> = grid.points().map(|x| phi.eval1(x)).collect();
    if let Some(i) = phi_vals.iter().position(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
        return Err(TauError::InvalidValues(format!(
            "test function is {} at x = {} (must be bounded below)",
            phi_vals[i],
            grid.point(i)
        )));
    }
    let phi_gf = GridFunction::new(*grid, phi_vals)?;
    let psi = infconv_on_grid(&phi_gf, w)?;

    let (s_lo, s_hi) = mu.support();
    let mut rho = Vec::with_capacity(grid.len());
    let mut pos = Vec::with_capacity(grid.len());
    let mut neg = Vec::with_capacity(grid.len());
    for (i, x) in grid.points().enumerate() {
        if x < s_lo || x > s_hi {
            rho.push(None);
            pos.push(None);
            neg.push(None);
            continue;
        }
        let r = mu.density_inner(x);
        rho.push(Some(r));
        let p = psi.values()[i];
        pos.push(Some(if r == 0.0 { 0.0 } else { p.exp() * r }));
        let f = phi_gf.values()[i];
        neg.push(f.is_finite().then(|| (-f).exp() * r));
    }
    let norm = trapezoid_runs(&rho, h);
    if !(norm > 0.0) {
        return Err(TauError::InvalidGrid("grid carries no mass of the measure".into()));
    }
    let raw_pos = trapezoid_runs(&pos, h);
    let raw_neg = trapezoid_runs(&neg, h);
    let integral_pos = raw_pos / norm;
    let integral_neg = raw_neg / norm;

    let mut breakdown = BudgetBreakdown::default();
    if raw_pos > 0.0 && raw_pos.is_finite() {
        breakdown.quadrature += trapezoid_error_proxy(&pos, h) / raw_pos;
    }
    if raw_neg > 0.0 {
        breakdown.quadrature += trapezoid_error_proxy(&neg, h) / raw_neg;
    }
    let osc = phi_gf.finite_range().map(|(a, b)| b - a).unwrap_or(0.0);
    let delta = (phi_gf.max_slope() + w.lipschitz_within_level(osc)) * h / 2.0;
    breakdown.discretization = delta.exp_m1();
    breakdown.tails = tail_terms(mu, phi, w, &phi_gf, raw_pos, raw_neg)?;

    if integral_neg == 0.0 {
        // +∞ · 0 ≤ 1
        return Ok(TauCoupleReport {
            integral_pos,
            integral_neg,
            product: 0.0,
            error_budget: breakdown.total(),
            verdict: Verdict::Pass,
            std_error: None,
            breakdown,
            boundary_hits: 0,
        });
    }
    let product = finite_or_inf(integral_pos * integral_neg);
    let error_budget = breakdown.total();
    Ok(TauCoupleReport {
        integral_pos,
        integral_neg,
        product,
        error_budget,
        verdict: verdict_for(product, error_budget),
        std_error: None,
        breakdown,
        boundary_hits: 0,
    })
}

/// Relative mass of both integrands outside the grid. For `e^{φ□w}` the
/// integrand is bounded using `φ□w(x) ≤ min(φ(x), φ(z) + w(x − z))` with `z`
/// the outermost grid point where `φ` is finite.
fn tail_terms(
    mu: &Measure1D,
    phi: &TestFunction,
    w: &CostFunction,
    phi_gf: &GridFunction,
    raw_pos: f64,
    raw_neg: f64,
) -> Result<f64> {
    let spec = phi_gf.spec();
    let vals = phi_gf.values();
    let first = vals.iter().position(|v| v.is_finite());
    let last = vals.iter().rposition(|v| v.is_finite());
    let (lo, hi) = (spec.lo(), spec.hi());
    let tol = 1e-16;
    let quiet = |r: Result<(f64, f64)>| r.map(|(v, _)| v).unwrap_or(f64::INFINITY);
    let mut pos_tail = 0.0;
    let mut neg_tail = 0.0;
    if let (Some(i0), Some(i1)) = (first, last) {
        let (z0, f0) = (spec.point(i0), vals[i0]);
        let (z1, f1) = (spec.point(i1), vals[i1]);
        let bound_left = |x: f64| phi.eval1(x).min(f0 + w.eval(x - z0));
        let bound_right = |x: f64| phi.eval1(x).min(f1 + w.eval(x - z1));
        pos_tail += quiet(mu.integrate_density(|x| bound_left(x).exp(), f64::NEG_INFINITY, lo, tol));
        pos_tail += quiet(mu.integrate_density(|x| bound_right(x).exp(), hi, f64::INFINITY, tol));
    }
    neg_tail += quiet(mu.integrate_density(|x| (-phi.eval1(x)).exp(), f64::NEG_INFINITY, lo, tol));
    neg_tail += quiet(mu.integrate_density(|x| (-phi.eval1(x)).exp(), hi, f64::INFINITY, tol));
    let mut t = 0.0;
    if raw_pos > 0.0 {
        t += pos_tail / raw_pos;
    }
    if raw_neg > 0.0 {
        t += neg_tail / raw_neg;
    }
    Ok(t)
}

/// How `φ □ w` is evaluated inside [`tau_eval_nd_mc`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsiEvaluator {
    /// Separable `φ` on per-axis grids, otherwise pointwise search.
    Auto,
    /// `φ = Σ φᵢ(xᵢ)`: 1D grid inf-convolutions plus linear interpolation.
    Separable { step: f64 },
    /// Full n-D lattice inf-convolution plus multilinear interpolation.
    Lattice { step: f64 },
    /// Lattice search at every sample: coarse pass, then a fine pass around
    /// the coarse argmin.
    Pointwise { coarse: f64, fine: f64, strategy: Option<SearchStrategy> },
}

/// Options for [`tau_eval_nd_mc`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub seed: u64,
    pub evaluator: PsiEvaluator,
    /// Escalate a boundary argmin into an error.
    pub strict: bool,
}

impl Default for McOptions {
    fn default() -> Self {
        Self { seed: 0, evaluator: PsiEvaluator::Auto, strict: false }
    }
}

const DEFAULT_AXIS_STEP: f64 = 0.01;
const MAX_LATTICE_POINTS: usize = 50_000_000;

enum Psi {
    Axes { grids: Vec<GridFunction> },
    Lattice(LatticeFunction),
    Pointwise { coarse: f64, fine: f64, strategy: Option<SearchStrategy>, floor: f64 },
}

fn interp_1d(g: &GridFunction, x: f64) -> f64 {
    let s = g.spec();
    let t = ((x - s.lo()) / s.step()).clamp(0.0, (s.len() - 1) as f64);
    let i = (t.floor() as usize).min(s.len() - 2);
    let f = t - i as f64;
    let (a, b) = (g.values()[i], g.values()[i + 1]);
    if f == 0.0 {
        a
    } else if f == 1.0 {
        b
    } else {
        (1.0 - f) * a + f * b
    }
}

/// Sampler and per-axis span of a Monte Carlo couple.
enum McMeasure<'a> {
    Product(&'a ProductMeasure),
    Image(&'a Pushforward),
}

impl McMeasure<'_> {
    fn sample_into(&self, r: &mut StreamRng, out: &mut [f64]) {
        match self {
            McMeasure::Product(p) => p.sample_into(r, out),
            McMeasure::Image(p) => p.sample_into(r, out),
        }
    }

    fn span(&self, k: usize) -> (f64, f64) {
        match self {
            McMeasure::Product(p) => p.factors()[k].quantile_span(QUANTILE_EPS),
            // the image samples are only used through their own values
            McMeasure::Image(_) => (0.0, 1.0),
        }
    }
}

/// (τ) for a product couple by Monte Carlo.
///
/// The two integrals use independent streams; the budget is three standard
/// errors of the product (delta method) plus the discretization slack of the
/// `φ □ w` evaluator. Pointwise search that touches its boundary makes the
/// verdict inconclusive (or an error when `strict`).
pub fn tau_eval_nd_mc(
    couple: &TauCouple,
    phi: &TestFunction,
    n_samples: usize,
    opts: McOptions,
) -> Result<TauCoupleReport> {
    if n_samples < MIN_MC_SAMPLES {
        return Err(TauError::InvalidParameter(format!(
            "{n_samples} samples; at least {MIN_MC_SAMPLES} are required"
        )));
    }
    let mc = match &couple.measure {
        CoupleMeasure::Product(p) => McMeasure::Product(p),
        CoupleMeasure::Image(p) => McMeasure::Image(p),
        _ => return Err(TauError::Unsupported("tau_eval_nd_mc needs a product or image measure".into())),
    };
    let w = couple.cost.as_separable();
    let n = w.dim();
    if n > crate::infconv::MAX_POINTWISE_DIM {
        return Err(TauError::InvalidParameter(format!("dimension {n} > 16")));
    }
    let parts = phi.separable_parts(n);
    let evaluator = match opts.evaluator {
        PsiEvaluator::Auto if parts.is_some() => PsiEvaluator::Separable { step: DEFAULT_AXIS_STEP },
        PsiEvaluator::Auto => PsiEvaluator::Pointwise { coarse: 0.25, fine: 0.005, strategy: None },
        e => e,
    };
    let mut slack = 0.0;
    let psi = match evaluator {
        PsiEvaluator::Separable { step } => {
            let parts = parts.ok_or_else(|| TauError::Unsupported("test function is not separable".into()))?;
            let mut grids = Vec::with_capacity(n);
            for (k, part) in parts.iter().enumerate() {
                let (a, b) = mc.span(k);
                let spec = GridSpec::aligned_covering(a, b, step)?;
                let gf = GridFunction::from_fn(spec, |x| part.eval1(x))?;
                let osc = gf.finite_range().map(|(a, b)| b - a).unwrap_or(0.0);
                slack += (gf.max_slope() + w.component(k).lipschitz_within_level(osc)) * step;
                grids.push(infconv_on_grid(&gf, w.component(k))?);
            }
            Psi::Axes { grids }
        }
        PsiEvaluator::Lattice { step } => {
            let axes: Vec<GridSpec> = (0..n)
                .map(|k| {
                    let (a, b) = mc.span(k);
                    GridSpec::aligned_covering(a, b, step)
                })
                .collect::<Result<_>>()?;
            let total: usize = axes.iter().map(|a| a.len()).product();
            if total > MAX_LATTICE_POINTS {
                return Err(TauError::InvalidParameter(format!("lattice of {total} points is too large")));
            }
            let lat = LatticeFunction::from_fn(axes, |x| phi.eval(x))?;
            let l_phi = phi.lipschitz().unwrap_or(CLAMP);
            let l_w: f64 = (0..n).map(|k| w.component(k).lipschitz_within_level(2.0 * CLAMP)).sum();
            slack += (l_phi + l_w) * step;
            Psi::Lattice(infconv_lattice(&lat, &w)?)
        }
        PsiEvaluator::Pointwise { coarse, fine, strategy } => Psi::Pointwise {
            coarse,
            fine,
            strategy,
            floor: phi.lower_bound().unwrap_or(-CLAMP),
        },
        PsiEvaluator::Auto => unreachable!(),
    };

    let eval_psi = |x: &[f64]| -> Result<(f64, bool)> {
        match &psi {
            Psi::Axes { grids } => Ok((grids.iter().zip(x).map(|(g, &v)| interp_1d(g, v)).sum(), false)),
            Psi::Lattice(l) => Ok((l.interpolate(x), false)),
            Psi::Pointwise { coarse, fine, strategy, floor } => {
                let level = (phi.eval(x) - floor).max(0.0);
                let search: Vec<GridSpec> = (0..n)
                    .map(|k| {
                        let r = w.component(k).radius_at_level(level).min(1e6);
                        let half = ((r / coarse).ceil() as usize).max(1);
                        GridSpec::symmetric(half, *coarse)
                    })
                    .collect::<Result<_>>()?;
                let popts = PointwiseOptions { strategy: *strategy, strict: false };
                let first = infconv_pointwise(|z| phi.eval(z), &w, x, &search, popts)?;
                let refine: Vec<GridSpec> = first
                    .argmin
                    .iter()
                    .map(|&c| {
                        let half = (coarse / fine).ceil() as usize;
                        GridSpec::with_step(c - half as f64 * fine, *fine, 2 * half + 1)
                    })
                    .collect::<Result<_>>()?;
                let second = infconv_pointwise(|z| phi.eval(z), &w, x, &refine, popts)?;
                Ok((first.value.min(second.value), first.boundary_hit() && level > 0.0))
            }
        }
    };

    let pos_parts = rng::chunked(n_samples, opts.seed, tags::TAU_POS, |r, _, len| -> Result<(Moments, u64)> {
        let mut x = vec![0.0; n];
        let mut m = Moments::new();
        let mut hits = 0;
        for _ in 0..len {
            mc.sample_into(r, &mut x);
            let (v, hit) = eval_psi(&x)?;
            hits += hit as u64;
            m.push(v.exp());
        }
        Ok((m, hits))
    });
    let neg_parts = rng::chunked(n_samples, opts.seed, tags::TAU_NEG, |r, _, len| {
        let mut x = vec![0.0; n];
        let mut m = Moments::new();
        for _ in 0..len {
            mc.sample_into(r, &mut x);
            m.push((-phi.eval(&x)).exp());
        }
        m
    });
    let mut pos = Moments::new();
    let mut boundary_hits = 0;
    for part in pos_parts {
        let (m, h) = part?;
        pos = pos.merge(&m);
        boundary_hits += h;
    }
    let neg = Moments::merge_all(&neg_parts);
    let (product, se) = product_with_se(&pos, &neg);
    let breakdown = BudgetBreakdown {
        monte_carlo: 3.0 * se / product.max(f64::MIN_POSITIVE),
        discretization: f64::exp_m1(slack),
        ..Default::default()
    };
    let error_budget = 3.0 * se + product * breakdown.discretization;
    let mut verdict = verdict_for(product, error_budget);
    if neg.mean == 0.0 {
        verdict = Verdict::Pass;
    }
    if boundary_hits > 0 {
        if opts.strict {
            return Err(TauError::SearchBoundary { axis: 0 });
        }
        verdict = Verdict::Inconclusive;
    }
    Ok(TauCoupleReport {
        integral_pos: pos.mean,
        integral_neg: neg.mean,
        product,
        error_budget,
        verdict,
        std_error: Some(se),
        breakdown,
        boundary_hits,
    })
}

/// Golden-section refinement after a coarse scan; returns `(argmin, value)`.
/// Exact up to `1e−14` relative for convex `f`, an upper bound otherwise.
fn minimize_1d(f: impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    if a == b {
        return (a, f(a));
    }
    const SCAN: usize = 200;
    let step = (b - a) / SCAN as f64;
    let (mut best_x, mut best_v) = (a, f(a));
    for i in 1..=SCAN {
        let x = if i == SCAN { b } else { a + i as f64 * step };
        let v = f(x);
        if v < best_v {
            best_v = v;
            best_x = x;
        }
    }
    let (mut lo, mut hi) = ((best_x - step).max(a), (best_x + step).min(b));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-14 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    for (x, v) in [(x1, f1), (x2, f2), (lo, f(lo)), (hi, f(hi))] {
        if v < best_v {
            best_v = v;
            best_x = x;
        }
    }
    (best_x, best_v)
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// `min_{z ∈ box} max_k (a_k·z + b_k) + Σ cᵢ(xᵢ − zᵢ)²` by accelerated
/// projected gradient on the dual simplex. Returns `(primal value, gap)`;
/// the primal value is attained at a feasible point, hence an upper bound.
fn max_affine_moreau(slopes: &[Vec<f64>], intercepts: &[f64], c: &[f64], x: &[f64], bx: &[(f64, f64)]) -> (f64, f64) {
    let m = slopes.len();
    let n = x.len();
    let primal = |z: &[f64]| -> f64 {
        let phi = slopes
            .iter()
            .zip(intercepts)
            .map(|(a, b)| a.iter().zip(z).map(|(ai, zi)| ai * zi).sum::<f64>() + b)
            .fold(f64::NEG_INFINITY, f64::max);
        phi + (0..n).map(|i| c[i] * (x[i] - z[i]).powi(2)).sum::<f64>()
    };
    let z_of = |theta: &[f64], z: &mut [f64]| {
        for i in 0..n {
            let s: f64 = (0..m).map(|k| theta[k] * slopes[k][i]).sum();
            z[i] = (x[i] - s / (2.0 * c[i])).clamp(bx[i].0, bx[i].1);
        }
    };
    let dual = |theta: &[f64], z: &[f64]| -> f64 {
        let mut v = 0.0;
        for k in 0..m {
            v += theta[k] * (slopes[k].iter().zip(z).map(|(a, zi)| a * zi).sum::<f64>() + intercepts[k]);
        }
        v + (0..n).map(|i| c[i] * (x[i] - z[i]).powi(2)).sum::<f64>()
    };
    let frob: f64 = slopes.iter().flatten().map(|a| a * a).sum();
    let c_min = c.iter().copied().fold(f64::INFINITY, f64::min);
    let lip = (frob / (2.0 * c_min)).max(1e-12);

    let mut z = vec![0.0; n];
    let z0: Vec<f64> = (0..n).map(|i| x[i].clamp(bx[i].0, bx[i].1)).collect();
    let mut best_p = primal(&z0);
    let mut best_d = f64::NEG_INFINITY;
    let mut theta = vec![1.0 / m as f64; m];
    let mut yk = theta.clone();
    let mut t = 1.0f64;
    let mut grad = vec![0.0; m];
    for _ in 0..20_000 {
        z_of(&yk, &mut z);
        for k in 0..m {
            grad[k] = slopes[k].iter().zip(&z).map(|(a, zi)| a * zi).sum::<f64>() + intercepts[k];
        }
        let mut next: Vec<f64> = (0..m).map(|k| yk[k] + grad[k] / lip).collect();
        project_simplex(&mut next);
        z_of(&next, &mut z);
        best_d = best_d.max(dual(&next, &z));
        best_p = best_p.min(primal(&z));
        if best_p - best_d <= 1e-13 * (1.0 + best_p.abs()) {
            break;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        for k in 0..m {
            yk[k] = next[k] + beta * (next[k] - theta[k]);
        }
        theta = next;
        t = t_next;
    }
    (best_p, (best_p - best_d).max(0.0))
}

/// (τ) for atoms by exact summation.
///
/// `φ` is restricted to the box hull of the atoms (`+∞` outside), a valid
/// convex extension whose product dominates that of `φ` itself; the inner
/// infimum is then solved on the hull: per coordinate for separable `φ`, by
/// a dual method for a maximum of affine functions under quadratic costs.
pub fn tau_eval_discrete(couple: &TauCouple, phi: &TestFunction) -> Result<TauCoupleReport> {
    let factors: Vec<&DiscreteMeasure> = match &couple.measure {
        CoupleMeasure::Atoms(d) => vec![d],
        CoupleMeasure::AtomProduct(v) => v.iter().collect(),
        _ => return Err(TauError::Unsupported("tau_eval_discrete needs atoms".into())),
    };
    let n = factors.len();
    let total: u128 = factors.iter().map(|f| f.atoms().len() as u128).product();
    if total > MAX_ATOMS {
        return Err(TauError::AtomOverflow { count: total, limit: MAX_ATOMS });
    }
    let w = couple.cost.as_separable();
    let hull: Vec<(f64, f64)> = factors.iter().map(|f| f.hull()).collect();
    let parts = phi.separable_parts(n);
    let quad: Option<Vec<f64>> = (0..n).map(|k| w.component(k).is_quadratic()).collect();
    let affine = match phi {
        TestFunction::MaxAffine { slopes, intercepts } => Some((slopes, intercepts)),
        _ => None,
    };
    if parts.is_none() && (affine.is_none() || quad.is_none()) {
        return Err(TauError::Unsupported(format!(
            "inner minimization for {} with cost {}",
            phi.label(),
            w.component(0).label()
        )));
    }
    let sizes: Vec<usize> = factors.iter().map(|f| f.atoms().len()).collect();
    let total = total as usize;
    let results: Vec<(f64, f64, f64, f64)> = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut x = vec![0.0; n];
            let mut p = 1.0;
            for k in (0..n).rev() {
                let (xa, wa) = factors[k].atoms()[idx % sizes[k]];
                idx /= sizes[k];
                x[k] = xa;
                p *= wa;
            }
            let (psi, gap) = match &parts {
                Some(parts) => {
                    let mut s = 0.0;
                    for k in 0..n {
                        let wk = w.component(k);
                        let (_, v) = minimize_1d(|z| parts[k].eval1(z) + wk.eval(x[k] - z), hull[k].0, hull[k].1);
                        s += v;
                    }
                    (s, 0.0)
                }
                None => {
                    let (slopes, intercepts) = affine.unwrap();
                    max_affine_moreau(slopes, intercepts, quad.as_ref().unwrap(), &x, &hull)
                }
            };
            (p * psi.exp(), p * (-phi.eval(&x)).exp(), gap, p)
        })
        .collect();
    let mut integral_pos = 0.0;
    let mut integral_neg = 0.0;
    let mut max_gap: f64 = 0.0;
    for (a, b, g, _) in &results {
        integral_pos += a;
        integral_neg += b;
        max_gap = max_gap.max(*g);
    }
    let breakdown = BudgetBreakdown { solver: max_gap.exp_m1(), quadrature: 1e-14, ..Default::default() };
    let product = finite_or_inf(integral_pos * integral_neg);
    let error_budget = breakdown.total();
    let verdict = if integral_neg == 0.0 { Verdict::Pass } else { verdict_for(product, error_budget) };
    Ok(TauCoupleReport {
        integral_pos,
        integral_neg,
        product,
        error_budget,
        verdict,
        std_error: None,
        breakdown,
        boundary_hits: 0,
    })
}

/// Scans `φ = λx` over `lambdas` and returns the first report that fails
/// together with its `λ`.
pub fn negative_control_search(
    couple: &TauCouple,
    lambdas: &[f64],
    grid: &GridSpec,
) -> Result<Option<(f64, TauCoupleReport)>> {
    for &l in lambdas {
        let r = tau_eval_1d(couple, &TestFunction::linear_1d(l), grid)?;
        if r.verdict == Verdict::Fail {
            return Ok(Some((l, r)));
        }
    }
    Ok(None)
}

/// Result of [`prekopa_leindler_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrekopaReport {
    /// `(∫ e^{−f})(∫ e^{−g})`.
    pub lhs: f64,
    /// `(∫ e^{−h})²`.
    pub rhs: f64,
    /// `rhs − lhs`.
    pub margin: f64,
    pub holds: bool,
}

/// Builds `h(x) = inf_u ½(f(x + u) + g(x − u))` on the half-step grid
/// (`x = (x_j + x_k)/2` for all grid pairs) and checks
/// `(∫e^{−f})(∫e^{−g}) ≤ (∫e^{−h})²` up to the relative `tolerance`.
pub fn prekopa_leindler_check(f: &GridFunction, g: &GridFunction, tolerance: f64) -> Result<PrekopaReport> {
    if f.spec() != g.spec() {
        return Err(TauError::IncompatibleGrids("f and g must share a grid".into()));
    }
    let s = *f.spec();
    let n = s.len();
    let (fv, gv) = (f.values(), g.values());
    let hv: Vec<f64> = (0..2 * n - 1)
        .into_par_iter()
        .map(|m| {
            let lo = m.saturating_sub(n - 1);
            let hi = m.min(n - 1);
            (lo..=hi).map(|j| 0.5 * (fv[j] + gv[m - j])).fold(f64::INFINITY, f64::min)
        })
        .collect();
    let expneg = |v: &[f64]| -> Vec<Option<f64>> { v.iter().map(|&x| x.is_finite().then(|| (-x).exp())).collect() };
    let int_f = trapezoid_runs(&expneg(fv), s.step());
    let int_g = trapezoid_runs(&expneg(gv), s.step());
    let int_h = trapezoid_runs(&expneg(&hv), s.step() / 2.0);
    let lhs = int_f * int_g;
    let rhs = int_h * int_h;
    Ok(PrekopaReport { lhs, rhs, margin: rhs - lhs, holds: lhs <= rhs * (1.0 + tolerance) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_phi_saturates_exponential_w() {
        let c = TauCouple::exponential_w();
        let g = quantile_grid(&measure_exponential(), 0.01).unwrap();
        let r = tau_eval_1d(&c, &TestFunction::constant(0.0), &g).unwrap();
        assert!((r.product - 1.0).abs() < 1e-12, "{r:?}");
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn gaussian_linear_closed_form() {
        let c = TauCouple::gaussian_quarter();
        let g = GridSpec::aligned_covering(-10.0, 10.0, 0.01).unwrap();
        for &l in &[-2.0, -0.5, 1.0, 2.0] {
            let r = tau_eval_1d(&c, &TestFunction::linear_1d(l), &g).unwrap();
            let l2: f64 = l * l;
            assert!((r.integral_pos - (-l2 / 2.0).exp()).abs() < 1e-6 * (-l2 / 2.0).exp());
            assert!((r.integral_neg - (l2 / 2.0).exp()).abs() < 1e-6 * (l2 / 2.0).exp());
            assert!((r.product - 1.0).abs() < 1e-6, "λ = {l}: {}", r.product);
        }
    }

    #[test]
    fn short_grid_is_rejected() {
        let c = TauCouple::gaussian_quarter();
        let g = GridSpec::aligned_covering(-3.0, 3.0, 0.01).unwrap();
        assert!(matches!(tau_eval_1d(&c, &TestFunction::constant(0.0), &g), Err(TauError::InvalidGrid(_))));
    }

    #[test]
    fn too_strong_cost_is_caught() {
        let c = TauCouple::new(
            CoupleMeasure::Line(measure_gaussian()),
            CoupleCost::Line(cost_quadratic(1.0).unwrap()),
            Variant::Plain,
            "negative-control",
        )
        .unwrap();
        let g = GridSpec::aligned_covering(-10.0, 10.0, 0.01).unwrap();
        let found = negative_control_search(&c, &[0.5, 1.0, 2.0], &g).unwrap();
        let (l, r) = found.expect("a violator");
        assert!((r.product - (0.75 * l * l).exp()).abs() < 1e-3 * r.product);
    }

    #[test]
    fn bernoulli_linear_products() {
        let c = TauCouple::bernoulli_half_quadratic();
        for i in 0..=20 {
            let lam = -5.0 + 0.5 * i as f64;
            let r = tau_eval_discrete(&c, &TestFunction::linear_1d(lam)).unwrap();
            assert!(r.product <= 1.0 + 1e-12, "λ = {lam}: {}", r.product);
        }
        let r = tau_eval_discrete(&c, &TestFunction::constant(0.0)).unwrap();
        assert!((r.product - 1.0).abs() < 1e-15);
    }

    #[test]
    fn max_affine_solver_matches_separable_path() {
        // max of one affine piece and a low floor is just the affine piece
        let c = TauCouple::bernoulli_product(3).unwrap();
        let lin = TestFunction::Linear { coef: vec![1.5, -2.0, 0.7], offset: 0.3 };
        let aff = TestFunction::max_affine(vec![vec![1.5, -2.0, 0.7], vec![0.0; 3]], vec![0.3, -100.0]).unwrap();
        let a = tau_eval_discrete(&c, &lin).unwrap();
        let b = tau_eval_discrete(&c, &aff).unwrap();
        assert!((a.product - b.product).abs() < 1e-10, "{} vs {}", a.product, b.product);
    }

    #[test]
    fn simplex_projection() {
        let mut v = vec![0.5, 0.5, 0.5];
        project_simplex(&mut v);
        assert!(v.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        let mut v = vec![3.0, 0.0];
        project_simplex(&mut v);
        assert_eq!(v, vec![1.0, 0.0]);
    }

    #[test]
    fn prekopa_interval_case() {
        let s = GridSpec::aligned_covering(-1.0, 2.0, 0.01).unwrap();
        let ind = |x: f64| if (-1e-9..=1.0 + 1e-9).contains(&x) { 0.0 } else { f64::INFINITY };
        let f = GridFunction::from_fn(s, ind).unwrap();
        let r = prekopa_leindler_check(&f, &f, 1e-12).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-12 && (r.rhs - 1.0).abs() < 1e-12 && r.holds);
    }
}
