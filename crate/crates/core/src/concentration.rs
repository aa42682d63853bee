//! Deviation experiments: enlargement tails, the two-ball enlargement,
//! Lipschitz moment generating functions, the Gaussian Poincaré inequality
//! and the convex-hull distance integral on the cube.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costs::{cost_u, SeparableCost};
use crate::error::{Result, TauError};
use crate::measures::{measure_gaussian, measure_laplace, Measure1D, ProductMeasure};
use crate::rng::{self, tags, StreamRng};
use crate::stats::{proportion, Moments};
use crate::tau::Verdict;
use crate::testfn::TestFunction;

/// Sets with exact membership and enlargement tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetFamily {
    /// `{x : x[axis] ≤ threshold}` in `Rⁿ`.
    Halfspace { dim: usize, axis: usize, threshold: f64 },
    /// `Π [lo[i], hi[i]]`; bounds may be infinite.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// A finite set of points.
    VertexSet { points: Vec<Vec<f64>> },
}

impl SetFamily {
    pub fn halfspace(dim: usize, axis: usize, threshold: f64) -> Result<Self> {
        if axis >= dim || !threshold.is_finite() {
            return Err(TauError::InvalidParameter(format!("halfspace axis {axis} of {dim}, threshold {threshold}")));
        }
        Ok(SetFamily::Halfspace { dim, axis, threshold })
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(a <= b)) {
            return Err(TauError::InvalidParameter("box bounds must pair up with lo ≤ hi".into()));
        }
        Ok(SetFamily::Box { lo, hi })
    }

    /// All of `Rⁿ`.
    pub fn full_space(dim: usize) -> Self {
        SetFamily::Box { lo: vec![f64::NEG_INFINITY; dim], hi: vec![f64::INFINITY; dim] }
    }

    pub fn vertex_set(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(TauError::InvalidParameter("empty vertex set".into()));
        }
        let d = points[0].len();
        if d == 0 || points.iter().any(|p| p.len() != d || p.iter().any(|v| !v.is_finite())) {
            return Err(TauError::InvalidParameter("vertices must be finite points of equal dimension".into()));
        }
        Ok(SetFamily::VertexSet { points })
    }

    pub fn dim(&self) -> usize {
        match self {
            SetFamily::Halfspace { dim, .. } => *dim,
            SetFamily::Box { lo, .. } => lo.len(),
            SetFamily::VertexSet { points } => points[0].len(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            SetFamily::Halfspace { axis, threshold, .. } => x[*axis] <= *threshold,
            SetFamily::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a <= *v && *v <= *b),
            SetFamily::VertexSet { points } => points.iter().any(|p| p.as_slice() == x),
        }
    }

    /// Coordinatewise distance of `x` to the set: for halfspaces and boxes
    /// the nearest point is found axis by axis, so `x − a*` equals this
    /// residual up to signs.
    pub fn residual(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            SetFamily::Halfspace { axis, threshold, .. } => {
                out.iter_mut().for_each(|r| *r = 0.0);
                out[*axis] = (x[*axis] - threshold).max(0.0);
                Ok(())
            }
            SetFamily::Box { lo, hi } => {
                for i in 0..x.len() {
                    out[i] = (lo[i] - x[i]).max(x[i] - hi[i]).max(0.0);
                }
                Ok(())
            }
            SetFamily::VertexSet { .. } => Err(TauError::Unsupported("coordinate residual of a vertex set".into())),
        }
    }

    /// `μ(A)` for a product measure; `0` for vertex sets under laws with a
    /// density.
    pub fn measure(&self, mu: &ProductMeasure) -> Result<f64> {
        if mu.dim() != self.dim() {
            return Err(TauError::InvalidParameter(format!("set dimension {} vs measure {}", self.dim(), mu.dim())));
        }
        let f = mu.factors();
        Ok(match self {
            SetFamily::Halfspace { axis, threshold, .. } => f[*axis].cdf(*threshold),
            SetFamily::Box { lo, hi } => (0..lo.len())
                .map(|i| {
                    let a = if lo[i].is_finite() { f[i].cdf(lo[i]) } else { 0.0 };
                    let b = if hi[i].is_finite() { f[i].cdf(hi[i]) } else { 1.0 };
                    (b - a).max(0.0)
                })
                .product(),
            SetFamily::VertexSet { .. } => {
                if f.iter().all(|m| m.has_density()) {
                    0.0
                } else {
                    return Err(TauError::Unsupported("vertex set under a measure with atoms".into()));
                }
            }
        })
    }

    fn label(&self) -> String {
        match self {
            SetFamily::Halfspace { axis, threshold, .. } => format!("x{axis} <= {threshold}"),
            SetFamily::Box { .. } => "box".into(),
            SetFamily::VertexSet { points } => format!("{} vertices", points.len()),
        }
    }
}

/// `inf_{a ∈ A} w(x − a)`.
///
/// Closed form for halfspaces and boxes (the separable costs here are even
/// and nondecreasing on `[0, ∞)`, so the nearest point is coordinatewise),
/// a minimum over the points for vertex sets.
pub fn enlargement_distance(x: &[f64], set: &SetFamily, cost: &SeparableCost) -> Result<f64> {
    if cost.dim() != x.len() || set.dim() != x.len() {
        return Err(TauError::InvalidParameter("dimension mismatch".into()));
    }
    match set {
        SetFamily::VertexSet { points } => Ok(points
            .iter()
            .map(|p| {
                let d: Vec<f64> = x.iter().zip(p).map(|(a, b)| a - b).collect();
                cost.eval(&d)
            })
            .fold(f64::INFINITY, f64::min)),
        _ => {
            if !cost.components().iter().all(|c| c.is_even() && c.is_convex()) {
                return Err(TauError::Unsupported("closed-form enlargement needs even convex costs".into()));
            }
            let mut r = vec![0.0; x.len()];
            set.residual(x, &mut r)?;
            Ok(cost.eval(&r))
        }
    }
}

/// Configuration of a tail experiment.
#[derive(Debug, Clone)]
pub struct DeviationExperiment {
    pub measure: ProductMeasure,
    pub set: SetFamily,
    pub t_grid: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

/// One `t` of a tail experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub t: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub bound: f64,
    /// Exact tail by 1D quadrature, when available.
    pub exact: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationResults {
    pub set: String,
    pub measure_of_set: f64,
    pub rows: Vec<DeviationRow>,
}

impl DeviationResults {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.verdict.is_pass())
    }
}

/// Pass within 3 standard errors, fail beyond 5, inconclusive between.
pub fn bound_verdict(estimate: f64, se: f64, bound: f64) -> Verdict {
    if bound.is_infinite() {
        Verdict::VacuousPass
    } else if estimate <= bound + 3.0 * se {
        Verdict::Pass
    } else if estimate > bound + 5.0 * se {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

fn check_experiment(exp: &DeviationExperiment) -> Result<()> {
    if exp.set.dim() != exp.measure.dim() {
        return Err(TauError::InvalidParameter("set and measure dimensions differ".into()));
    }
    if exp.t_grid.is_empty() || exp.t_grid.iter().any(|t| !t.is_finite()) {
        return Err(TauError::InvalidParameter("t grid must be non-empty and finite".into()));
    }
    if exp.n_samples == 0 {
        return Err(TauError::InvalidParameter("no samples".into()));
    }
    Ok(())
}

/// Counts, for every `t`, the samples with `statistic(x) ≥ t`.
fn tail_counts(
    exp: &DeviationExperiment,
    tag: u32,
    statistic: impl Fn(&[f64]) -> Result<f64> + Sync,
    strict: bool,
) -> Result<Vec<u64>> {
    let n = exp.measure.dim();
    let k = exp.t_grid.len();
    let parts = rng::chunked(exp.n_samples, exp.seed, tag, |r, _, len| -> Result<Vec<u64>> {
        let mut x = vec![0.0; n];
        let mut c = vec![0u64; k];
        for _ in 0..len {
            exp.measure.sample_into(r, &mut x);
            let s = statistic(&x)?;
            for (j, &t) in exp.t_grid.iter().enumerate() {
                if if strict { s > t } else { s >= t } {
                    c[j] += 1;
                }
            }
        }
        Ok(c)
    });
    let mut total = vec![0u64; k];
    for p in parts {
        for (a, b) in total.iter_mut().zip(p?) {
            *a += b;
        }
    }
    Ok(total)
}

/// `μ(x ≥ a)` and `μ(x ≤ b)` by adaptive quadrature of the density.
fn upper_tail(m: &Measure1D, a: f64) -> Result<f64> {
    m.integrate_density(|_| 1.0, a, f64::INFINITY, 1e-15).map(|v| v.0)
}

fn lower_tail(m: &Measure1D, b: f64) -> Result<f64> {
    m.integrate_density(|_| 1.0, f64::NEG_INFINITY, b, 1e-15).map(|v| v.0)
}

/// 1D mass outside `A + [−ρ, ρ]` (`strict`: outside the closed enlargement).
fn exact_outside_1d(m: &Measure1D, set: &SetFamily, rho: f64) -> Result<Option<f64>> {
    Ok(match set {
        SetFamily::Halfspace { threshold, .. } => Some(upper_tail(m, threshold + rho)?),
        SetFamily::Box { lo, hi } => {
            let up = if hi[0].is_finite() { upper_tail(m, hi[0] + rho)? } else { 0.0 };
            let dn = if lo[0].is_finite() { lower_tail(m, lo[0] - rho)? } else { 0.0 };
            Some(up + dn)
        }
        SetFamily::VertexSet { .. } => None,
    })
}

/// `μ{x ∉ A + {w < t}}` against `μ(A)⁻¹ e^{−t}`.
pub fn enlargement_tail(exp: &DeviationExperiment, cost: &SeparableCost) -> Result<DeviationResults> {
    check_experiment(exp)?;
    let mu_a = exp.set.measure(&exp.measure)?;
    let counts = tail_counts(exp, tags::DEVIATION, |x| enlargement_distance(x, &exp.set, cost), false)?;
    let rows = exp
        .t_grid
        .iter()
        .zip(counts)
        .map(|(&t, c)| {
            let (p, se) = proportion(c, exp.n_samples as u64);
            let bound = if mu_a > 0.0 { (-t).exp() / mu_a } else { f64::INFINITY };
            let exact = if exp.measure.dim() == 1 {
                if t <= 0.0 {
                    Some(1.0)
                } else {
                    exact_outside_1d(&exp.measure.factors()[0], &exp.set, cost.component(0).radius_at_level(t))?
                }
            } else {
                None
            };
            Ok(DeviationRow { t, empirical: p, std_error: se, bound, exact, verdict: bound_verdict(p, se, bound) })
        })
        .collect::<Result<_>>()?;
    Ok(DeviationResults { set: exp.set.label(), measure_of_set: mu_a, rows })
}

/// `dist₂(r, ρ·B₁)`: distance from `r` to the ℓ₁ ball of radius `ρ`, by
/// soft-thresholding at the exact water level.
pub fn distance_to_l1_ball(r: &[f64], rho: f64) -> f64 {
    let mut a: Vec<f64> = r.iter().map(|v| v.abs()).collect();
    if a.iter().sum::<f64>() <= rho {
        return 0.0;
    }
    a.sort_by(|x, y| y.total_cmp(x));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (k, &v) in a.iter().enumerate() {
        cum += v;
        let t = (cum - rho) / (k + 1) as f64;
        if v > t {
            tau = t;
        } else {
            break;
        }
    }
    let tau = tau.max(0.0);
    a.iter().map(|v| v.min(tau).powi(2)).sum::<f64>().sqrt()
}

/// Whether `x ∈ A + 6√t B₂ + 9t B₁`, up to a relative tolerance `1e−12`.
pub fn talagrand_enlargement_member(x: &[f64], set: &SetFamily, t: f64) -> Result<bool> {
    if !(t >= 0.0) {
        return Err(TauError::InvalidParameter(format!("t = {t}")));
    }
    if x.len() != set.dim() {
        return Err(TauError::InvalidParameter("dimension mismatch".into()));
    }
    let r2 = 6.0 * t.sqrt();
    let r1 = 9.0 * t;
    let tol = 1e-12 * (1.0 + r1 + r2);
    match set {
        SetFamily::VertexSet { points } => Ok(points.iter().any(|p| {
            let r: Vec<f64> = x.iter().zip(p).map(|(a, b)| a - b).collect();
            distance_to_l1_ball(&r, r1) <= r2 + tol
        })),
        _ => {
            let mut r = vec![0.0; x.len()];
            set.residual(x, &mut r)?;
            Ok(distance_to_l1_ball(&r, r1) <= r2 + tol)
        }
    }
}

/// Two-ball enlargement tails under `ξₙ` against `ξₙ(A)⁻¹ e^{−t}`; for
/// `n = 1` each row also carries the exact tail by quadrature.
pub fn corollary1_experiment(
    n: usize,
    set: &SetFamily,
    t_grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<DeviationResults> {
    let exp = DeviationExperiment {
        measure: ProductMeasure::iid(measure_laplace(), n)?,
        set: set.clone(),
        t_grid: t_grid.to_vec(),
        n_samples,
        seed,
    };
    check_experiment(&exp)?;
    if t_grid.iter().any(|&t| t < 0.0) {
        return Err(TauError::InvalidParameter("t must be non-negative".into()));
    }
    if matches!(set, SetFamily::VertexSet { .. }) {
        return Err(TauError::Unsupported("corollary 1 needs a halfspace or a box".into()));
    }
    let mu_a = set.measure(&exp.measure)?;
    // statistic: the smallest t whose enlargement contains x is not monotone
    // to invert cheaply, so count non-members per t directly
    let k = t_grid.len();
    let parts = rng::chunked(n_samples, seed, tags::DEVIATION, |r, _, len| -> Result<Vec<u64>> {
        let mut x = vec![0.0; n];
        let mut res = vec![0.0; n];
        let mut c = vec![0u64; k];
        for _ in 0..len {
            exp.measure.sample_into(r, &mut x);
            set.residual(&x, &mut res)?;
            for (j, &t) in t_grid.iter().enumerate() {
                let tol = 1e-12 * (1.0 + 9.0 * t + 6.0 * t.sqrt());
                if distance_to_l1_ball(&res, 9.0 * t) > 6.0 * t.sqrt() + tol {
                    c[j] += 1;
                }
            }
        }
        Ok(c)
    });
    let mut counts = vec![0u64; k];
    for p in parts {
        for (a, b) in counts.iter_mut().zip(p?) {
            *a += b;
        }
    }
    let rows = t_grid
        .iter()
        .zip(counts)
        .map(|(&t, c)| {
            let (p, se) = proportion(c, n_samples as u64);
            let bound = if mu_a > 0.0 { (-t).exp() / mu_a } else { f64::INFINITY };
            let exact = if n == 1 {
                exact_outside_1d(&measure_laplace(), set, 6.0 * t.sqrt() + 9.0 * t)?
            } else {
                None
            };
            Ok(DeviationRow { t, empirical: p, std_error: se, bound, exact, verdict: bound_verdict(p, se, bound) })
        })
        .collect::<Result<_>>()?;
    Ok(DeviationResults { set: set.label(), measure_of_set: mu_a, rows })
}

/// How points of `{Uₙ < t}` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SublevelSampler {
    /// Uniform proposals on `[−(9t/2 + 4), 9t/2 + 4]ⁿ`, kept if `Uₙ < t`.
    Rejection,
    /// A uniform proposal `u` from the same box is scaled to `s·u` with
    /// `s = s_max(u)·V^{1/n}`, where `Uₙ(s_max u) = t` and `V ~ U(0, 1)`.
    /// Covers the whole sublevel set when rejection is too wasteful.
    RayScaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionReport {
    pub n: usize,
    pub t: f64,
    pub trials: usize,
    pub violations: usize,
    /// `max ‖y‖₂ / (6√t)` over trials.
    pub max_l2_ratio: f64,
    /// `max ‖z‖₁ / (9t)` over trials.
    pub max_l1_ratio: f64,
    pub sampler: SublevelSampler,
    /// Acceptance rate of a rejection pilot run.
    pub pilot_acceptance: f64,
}

/// Acceptance rate below which [`inclusion_check_un`] switches to
/// [`SublevelSampler::RayScaling`].
pub const MIN_REJECTION_RATE: f64 = 0.01;

/// Draws points with `Uₙ(x) < t`, splits them as `y = x·1{|x| ≤ 4}`,
/// `z = x − y`, and checks `‖y‖₂ ≤ 6√t` and `‖z‖₁ ≤ 9t`.
pub fn inclusion_check_un(n: usize, t: f64, trials: usize, seed: u64) -> Result<InclusionReport> {
    if n == 0 || !(t > 0.0) || trials == 0 {
        return Err(TauError::InvalidParameter(format!("n = {n}, t = {t}, trials = {trials}")));
    }
    let u = SeparableCost::iid(cost_u(), n)?;
    let half = 4.5 * t + 4.0;
    let pilot_n = 10_000;
    let mut pilot = StreamRng::for_chunk(seed, tags::INCLUSION, u32::MAX as u64);
    let mut x = vec![0.0; n];
    let mut acc = 0;
    for _ in 0..pilot_n {
        x.iter_mut().for_each(|v| *v = pilot.uniform_in(-half, half));
        acc += (u.eval(&x) < t) as usize;
    }
    let pilot_acceptance = acc as f64 / pilot_n as f64;
    let sampler =
        if pilot_acceptance >= MIN_REJECTION_RATE { SublevelSampler::Rejection } else { SublevelSampler::RayScaling };
    let b2 = 6.0 * t.sqrt();
    let b1 = 9.0 * t;
    let parts = rng::chunked(trials, seed, tags::INCLUSION, |r, _, len| {
        let mut x = vec![0.0; n];
        let mut out = (0usize, 0.0f64, 0.0f64);
        for _ in 0..len {
            match sampler {
                SublevelSampler::Rejection => loop {
                    x.iter_mut().for_each(|v| *v = r.uniform_in(-half, half));
                    if u.eval(&x) < t {
                        break;
                    }
                },
                SublevelSampler::RayScaling => {
                    let dir: Vec<f64> = (0..n).map(|_| r.uniform_in(-half, half)).collect();
                    let (mut lo, mut hi) = (0.0, 1.0);
                    while u.eval(&dir.iter().map(|d| d * hi).collect::<Vec<_>>()) < t {
                        hi *= 2.0;
                    }
                    for _ in 0..100 {
                        let mid = 0.5 * (lo + hi);
                        let p: Vec<f64> = dir.iter().map(|d| d * mid).collect();
                        if u.eval(&p) < t {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    let s = lo * r.uniform_open().powf(1.0 / n as f64);
                    for (xi, d) in x.iter_mut().zip(&dir) {
                        *xi = d * s;
                    }
                }
            }
            let mut y2 = 0.0;
            let mut z1 = 0.0;
            for &v in &x {
                if v.abs() <= 4.0 {
                    y2 += v * v;
                } else {
                    z1 += v.abs();
                }
            }
            let ry = y2.sqrt() / b2;
            let rz = z1 / b1;
            if ry > 1.0 + 1e-12 || rz > 1.0 + 1e-12 {
                out.0 += 1;
            }
            out.1 = out.1.max(ry);
            out.2 = out.2.max(rz);
        }
        out
    });
    let (violations, max_l2_ratio, max_l1_ratio) =
        parts.into_iter().fold((0, 0.0f64, 0.0f64), |a, b| (a.0 + b.0, a.1.max(b.1), a.2.max(b.2)));
    Ok(InclusionReport { n, t, trials, violations, max_l2_ratio, max_l1_ratio, sampler, pilot_acceptance })
}

/// Number of pairs used to certify a Lipschitz constant.
pub const LIPSCHITZ_PAIRS: usize = 100_000;

/// Checks `|φ(x) − φ(y)| ≤ L‖x − y‖₂` on random Gaussian pairs (half of them
/// close pairs). Returns the largest observed ratio.
pub fn certify_lipschitz(phi: &TestFunction, n: usize, l: f64, seed: u64) -> Result<f64> {
    let g = ProductMeasure::iid(measure_gaussian(), n)?;
    let parts = rng::chunked(LIPSCHITZ_PAIRS, seed, tags::LIPSCHITZ, |r, start, len| {
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut worst: (f64, Option<(Vec<f64>, Vec<f64>, f64, f64)>) = (0.0, None);
        for k in 0..len {
            g.sample_into(r, &mut x);
            if (start + k) % 2 == 0 {
                g.sample_into(r, &mut y);
            } else {
                let scale = 10f64.powf(-r.uniform_in(1.0, 5.0));
                for (yi, xi) in y.iter_mut().zip(&x) {
                    *yi = xi + scale * r.uniform_in(-1.0, 1.0);
                }
            }
            let d = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if d == 0.0 {
                continue;
            }
            let lhs = (phi.eval(&x) - phi.eval(&y)).abs();
            let ratio = lhs / d;
            if ratio > worst.0 {
                worst.0 = ratio;
            }
            if lhs > l * d * (1.0 + 1e-9) + 1e-15 && worst.1.is_none() {
                worst.1 = Some((x.clone(), y.clone(), lhs, l * d));
            }
        }
        worst
    });
    let mut max_ratio: f64 = 0.0;
    for (ratio, bad) in parts {
        if let Some((x, y, lhs, rhs)) = bad {
            return Err(TauError::CertificateViolation { x, y, lhs, rhs });
        }
        max_ratio = max_ratio.max(ratio);
    }
    Ok(max_ratio)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgfRow {
    pub lambda: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgfReport {
    pub max_lipschitz_ratio: f64,
    pub rows: Vec<MgfRow>,
}

/// `E exp(λ(φ(X) − φ(Y))/√2)` for independent `X, Y ~ γₙ` against
/// `e^{λ²/2}`, after certifying that `φ` is 1-Lipschitz.
pub fn lipschitz_mgf(phi: &TestFunction, lambda_grid: &[f64], n: usize, n_samples: usize, seed: u64) -> Result<MgfReport> {
    if n_samples == 0 || lambda_grid.iter().any(|l| !l.is_finite()) {
        return Err(TauError::InvalidParameter("need samples and finite λ".into()));
    }
    let max_lipschitz_ratio = certify_lipschitz(phi, n, 1.0, seed)?;
    let diffs = pair_differences(phi, n, n_samples, seed)?;
    let rows = lambda_grid
        .iter()
        .map(|&l| {
            let c = l / std::f64::consts::SQRT_2;
            let parts: Vec<Moments> =
                diffs.par_chunks(rng::CHUNK).map(|ch| Moments::from_slice(&ch.iter().map(|d| (c * d).exp()).collect::<Vec<_>>())).collect();
            let m = Moments::merge_all(&parts);
            let bound = (0.5 * l * l).exp();
            let se = m.std_error();
            MgfRow { lambda: l, estimate: m.mean, std_error: se, bound, verdict: bound_verdict(m.mean, se, bound) }
        })
        .collect();
    Ok(MgfReport { max_lipschitz_ratio, rows })
}

/// `φ(X_i) − φ(Y_i)` for independent Gaussian streams.
fn pair_differences(phi: &TestFunction, n: usize, n_samples: usize, seed: u64) -> Result<Vec<f64>> {
    let g = ProductMeasure::iid(measure_gaussian(), n)?;
    let xs = g.sample_n(n_samples, seed, tags::PAIRS_X);
    let ys = g.sample_n(n_samples, seed, tags::PAIRS_Y);
    Ok(xs.par_chunks(n).zip(ys.par_chunks(n)).map(|(x, y)| phi.eval(x) - phi.eval(y)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    /// `½ E(φ(X) − φ(Y))²`.
    pub lhs: f64,
    pub lhs_se: f64,
    /// `E ‖∇φ‖²`.
    pub rhs: f64,
    pub rhs_se: f64,
    /// `(rhs − lhs)` in units of the combined standard error.
    pub margin_se: f64,
    pub analytic_gradient: bool,
    /// Largest |analytic − finite-difference| gradient entry, when both exist.
    pub fd_max_error: Option<f64>,
    pub verdict: Verdict,
}

/// Finite-difference step for gradients.
pub const FD_STEP: f64 = 1e-5;

/// Poincaré inequality `½E(φ(X) − φ(Y))² ≤ E‖∇φ‖²` under a product law.
pub fn poincare_check(phi: &TestFunction, measure: &ProductMeasure, n_samples: usize, seed: u64) -> Result<PoincareReport> {
    if n_samples < 2 {
        return Err(TauError::InvalidParameter("need at least two samples".into()));
    }
    let n = measure.dim();
    let xs = measure.sample_n(n_samples, seed, tags::PAIRS_X);
    let ys = measure.sample_n(n_samples, seed, tags::PAIRS_Y);
    let zs = measure.sample_n(n_samples, seed, tags::POINCARE_RHS);
    let lhs_vals: Vec<f64> =
        xs.par_chunks(n).zip(ys.par_chunks(n)).map(|(x, y)| 0.5 * (phi.eval(x) - phi.eval(y)).powi(2)).collect();
    let mut probe = vec![0.0; n];
    let analytic = phi.gradient(&zs[..n], &mut probe);
    let rhs_vals: Vec<f64> = zs
        .par_chunks(n)
        .map(|z| {
            let mut g = vec![0.0; n];
            if analytic {
                phi.gradient(z, &mut g);
            } else {
                phi.gradient_fd(z, FD_STEP, &mut g);
            }
            g.iter().map(|v| v * v).sum()
        })
        .collect();
    let fd_max_error = analytic.then(|| {
        zs.chunks(n)
            .take(1000)
            .map(|z| {
                let mut a = vec![0.0; n];
                let mut f = vec![0.0; n];
                phi.gradient(z, &mut a);
                phi.gradient_fd(z, FD_STEP, &mut f);
                a.iter().zip(&f).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    });
    let lm = Moments::merge_all(&lhs_vals.chunks(rng::CHUNK).map(Moments::from_slice).collect::<Vec<_>>());
    let rm = Moments::merge_all(&rhs_vals.chunks(rng::CHUNK).map(Moments::from_slice).collect::<Vec<_>>());
    let se = (lm.std_error().powi(2) + rm.std_error().powi(2)).sqrt();
    let margin_se = if se > 0.0 { (rm.mean - lm.mean) / se } else if rm.mean >= lm.mean { f64::INFINITY } else { f64::NEG_INFINITY };
    let mut verdict = bound_verdict(lm.mean, se, rm.mean);
    if fd_max_error.is_some_and(|e| e > 1e-6) {
        verdict = Verdict::Inconclusive;
    }
    Ok(PoincareReport {
        lhs: lm.mean,
        lhs_se: lm.std_error(),
        rhs: rm.mean,
        rhs_se: rm.std_error(),
        margin_se,
        analytic_gradient: analytic,
        fd_max_error,
        verdict,
    })
}

/// Stopping tolerance on the Frank–Wolfe duality gap of `½‖x − p‖²`.
pub const HULL_GAP: f64 = 1e-10;
/// Largest vertex set accepted by [`convex_hull_distance`].
pub const MAX_HULL_VERTICES: usize = 4096;
const MAX_FW_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullProjection {
    pub distance: f64,
    /// Final duality gap of `½‖x − p‖²`; `distance²` exceeds the true value
    /// by at most twice this.
    pub gap: f64,
    pub iterations: usize,
}

/// Projection of `x` on the convex hull of `vertices` by pairwise
/// Frank–Wolfe (with away steps), warm-started at the nearest vertex.
pub fn hull_projection(x: &[f64], vertices: &[Vec<f64>]) -> Result<HullProjection> {
    let m = vertices.len();
    let n = x.len();
    if m == 0 || m > MAX_HULL_VERTICES {
        return Err(TauError::InvalidParameter(format!("{m} vertices (1..={MAX_HULL_VERTICES} supported)")));
    }
    if n == 0 || n > 16 || vertices.iter().any(|v| v.len() != n) {
        return Err(TauError::InvalidParameter("dimension must be 1..=16 and shared by all vertices".into()));
    }
    let dist2 = |v: &[f64]| v.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let start = (0..m).min_by(|&a, &b| dist2(&vertices[a]).total_cmp(&dist2(&vertices[b]))).unwrap();
    let mut theta = vec![0.0; m];
    theta[start] = 1.0;
    let mut active = vec![start];
    let mut p = vertices[start].clone();
    let mut r = vec![0.0; n];
    let mut g = vec![0.0; m];
    for it in 0..MAX_FW_ITERATIONS {
        for i in 0..n {
            r[i] = p[i] - x[i];
        }
        for (gi, v) in g.iter_mut().zip(vertices) {
            *gi = v.iter().zip(&r).map(|(a, b)| a * b).sum();
        }
        let rp: f64 = r.iter().zip(&p).map(|(a, b)| a * b).sum();
        let s = (0..m).min_by(|&a, &b| g[a].total_cmp(&g[b])).unwrap();
        let gap = rp - g[s];
        if gap <= HULL_GAP {
            return Ok(HullProjection { distance: dist2(&p).sqrt(), gap: gap.max(0.0), iterations: it });
        }
        let a = *active.iter().max_by(|&&a, &&b| g[a].total_cmp(&g[b])).unwrap();
        let d: Vec<f64> = (0..n).map(|i| vertices[s][i] - vertices[a][i]).collect();
        let dd: f64 = d.iter().map(|v| v * v).sum();
        if dd == 0.0 {
            return Ok(HullProjection { distance: dist2(&p).sqrt(), gap, iterations: it });
        }
        let gamma_max = theta[a];
        let gamma = (-(r.iter().zip(&d).map(|(u, v)| u * v).sum::<f64>()) / dd).clamp(0.0, gamma_max);
        for i in 0..n {
            p[i] += gamma * d[i];
        }
        if theta[s] == 0.0 && gamma > 0.0 {
            active.push(s);
        }
        theta[s] += gamma;
        if gamma >= gamma_max {
            theta[a] = 0.0;
            active.retain(|&k| k != a);
        } else {
            theta[a] -= gamma;
        }
    }
    let rp: f64 = r.iter().zip(&p).map(|(a, b)| a * b).sum();
    let gmin = g.iter().copied().fold(f64::INFINITY, f64::min);
    Err(TauError::NoConvergence(format!("hull projection gap {} after {MAX_FW_ITERATIONS} iterations", rp - gmin)))
}

/// Euclidean distance from `x` to the convex hull of `vertices`.
pub fn convex_hull_distance(x: &[f64], vertices: &[Vec<f64>]) -> Result<f64> {
    hull_projection(x, vertices).map(|h| h.distance)
}

/// Law on `[0, 1]ⁿ` for the hull-distance integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CubeMeasure {
    /// Product of fair coins on `{0, 1}`.
    Bernoulli,
    /// Uniform on the cube.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HullMode {
    /// Exhaustive sum over `{0, 1}ⁿ` under the Bernoulli product (n ≤ 14).
    Exact,
    MonteCarlo { measure: CubeMeasure, n_samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corollary5Report {
    pub n: usize,
    pub vertices: usize,
    pub mode: String,
    /// `∫ e^{d²/4} dμ`.
    pub lhs: f64,
    pub std_error: f64,
    pub measure_of_set: f64,
    /// `μ(A)⁻¹`.
    pub bound: f64,
    pub max_gap: f64,
    pub verdict: Verdict,
}

/// Largest dimension for exhaustive enumeration.
pub const MAX_EXACT_DIM: usize = 14;

fn cube_point(idx: u64, n: usize) -> Vec<f64> {
    (0..n).map(|i| ((idx >> (n - 1 - i)) & 1) as f64).collect()
}

/// `∫ e^{d_B²/4} dμ ≤ μ(A)⁻¹` with `B` the convex hull of `A ⊂ [0, 1]ⁿ`.
pub fn corollary5_experiment(vertices: &[Vec<f64>], mode: HullMode) -> Result<Corollary5Report> {
    let set = SetFamily::vertex_set(vertices.to_vec())?;
    let n = set.dim();
    if vertices.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(TauError::InvalidParameter("A is not contained in [0,1]^n".into()));
    }
    let on_cube: std::collections::BTreeSet<u64> = vertices
        .iter()
        .filter(|v| v.iter().all(|&c| c == 0.0 || c == 1.0))
        .map(|v| v.iter().fold(0u64, |acc, &c| (acc << 1) | c as u64))
        .collect();
    let bern_mass = on_cube.len() as f64 / (1u64 << n) as f64;
    let gap_cell = std::sync::Mutex::new(0.0f64);
    let dist2 = |x: &[f64]| -> Result<f64> {
        let h = hull_projection(x, vertices)?;
        let mut g = gap_cell.lock().unwrap();
        *g = g.max(h.gap);
        Ok(h.distance * h.distance)
    };
    let (lhs, se, mu_a, mode_label) = match mode {
        HullMode::Exact => {
            if n > MAX_EXACT_DIM {
                return Err(TauError::InvalidParameter(format!("exact mode needs n ≤ {MAX_EXACT_DIM}")));
            }
            let total = 1u64 << n;
            let vals: Vec<f64> = (0..total)
                .into_par_iter()
                .map(|i| dist2(&cube_point(i, n)).map(|d2| (0.25 * d2).exp()))
                .collect::<Result<_>>()?;
            (vals.iter().sum::<f64>() / total as f64, 0.0, bern_mass, "exact".to_string())
        }
        HullMode::MonteCarlo { measure, n_samples, seed } => {
            if n_samples < 2 {
                return Err(TauError::InvalidParameter("need at least two samples".into()));
            }
            let m = match measure {
                CubeMeasure::Bernoulli => {
                    if n > 63 {
                        return Err(TauError::InvalidParameter("dimension too large".into()));
                    }
                    let idx: Vec<u64> = rng::chunked(n_samples, seed, tags::HULL, |r, _, len| {
                        (0..len).map(|_| r.next_u64() >> (64 - n)).collect::<Vec<_>>()
                    })
                    .into_iter()
                    .flatten()
                    .collect();
                    let unique: Vec<u64> = idx.iter().copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
                    let table: BTreeMap<u64, f64> = unique
                        .par_iter()
                        .map(|&i| dist2(&cube_point(i, n)).map(|d2| (i, (0.25 * d2).exp())))
                        .collect::<Result<_>>()?;
                    let vals: Vec<f64> = idx.iter().map(|i| table[i]).collect();
                    Moments::merge_all(&vals.chunks(rng::CHUNK).map(Moments::from_slice).collect::<Vec<_>>())
                }
                CubeMeasure::Uniform => {
                    let parts = rng::chunked(n_samples, seed, tags::HULL, |r, _, len| -> Result<Moments> {
                        let mut m = Moments::new();
                        let mut x = vec![0.0; n];
                        for _ in 0..len {
                            x.iter_mut().for_each(|v| *v = r.uniform_open());
                            m.push((0.25 * dist2(&x)?).exp());
                        }
                        Ok(m)
                    });
                    let parts: Vec<Moments> = parts.into_iter().collect::<Result<_>>()?;
                    Moments::merge_all(&parts)
                }
            };
            let mu_a = match measure {
                CubeMeasure::Bernoulli => bern_mass,
                CubeMeasure::Uniform => 0.0,
            };
            let label = match measure {
                CubeMeasure::Bernoulli => "mc-bernoulli",
                CubeMeasure::Uniform => "mc-uniform",
            };
            (m.mean, m.std_error(), mu_a, label.to_string())
        }
    };
    let max_gap = *gap_cell.lock().unwrap();
    let bound = if mu_a > 0.0 { 1.0 / mu_a } else { f64::INFINITY };
    let verdict = if bound.is_infinite() {
        Verdict::VacuousPass
    } else if se == 0.0 {
        // exact sum: only the projection gap is tolerated
        if lhs <= bound * (0.5 * max_gap).exp() {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    } else {
        bound_verdict(lhs, se, bound)
    };
    Ok(Corollary5Report {
        n,
        vertices: vertices.len(),
        mode: mode_label,
        lhs,
        std_error: se,
        measure_of_set: mu_a,
        bound,
        max_gap,
        verdict,
    })
}

/// The vertices of the face `{x ∈ {0,1}ⁿ : x_0 = … = x_{codim−1} = 0}`.
pub fn subcube_face(n: usize, codim: usize) -> Result<Vec<Vec<f64>>> {
    if codim > n || n > 20 {
        return Err(TauError::InvalidParameter(format!("codimension {codim} in dimension {n}")));
    }
    let free = n - codim;
    Ok((0..1u64 << free)
        .map(|i| {
            let mut v = vec![0.0; codim];
            v.extend(cube_point(i, free));
            v
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l1_ball_distance_cases() {
        assert_eq!(distance_to_l1_ball(&[1.0, -1.0], 3.0), 0.0);
        assert!((distance_to_l1_ball(&[5.0, 0.0], 2.25) - 2.75).abs() < 1e-15);
        // equal coordinates: the water level splits evenly
        let d = distance_to_l1_ball(&[2.0, 2.0], 2.0);
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn halfspace_boundary_membership() {
        let a = SetFamily::halfspace(3, 0, 0.0).unwrap();
        let t: f64 = 0.7;
        let edge = 6.0 * t.sqrt() + 9.0 * t;
        assert!(talagrand_enlargement_member(&[edge, 0.0, 0.0], &a, t).unwrap());
        assert!(!talagrand_enlargement_member(&[edge + 1e-6, 0.0, 0.0], &a, t).unwrap());
        assert!(talagrand_enlargement_member(&[-3.0, 9.0, 9.0], &a, 0.0).unwrap());
    }

    #[test]
    fn box_residual_of_five_at_a_quarter_is_inside() {
        // ‖u‖₂ ≤ 3 and ‖v‖₁ ≤ 2.25 cover a single-axis residual of 5 ≤ 5.25
        let b = SetFamily::boxed(vec![0.0; 3], vec![0.0; 3]).unwrap();
        assert!(talagrand_enlargement_member(&[5.0, 0.0, 0.0], &b, 0.25).unwrap());
        assert!(!talagrand_enlargement_member(&[5.25 + 1e-6, 0.0, 0.0], &b, 0.25).unwrap());
    }

    #[test]
    fn hull_distance_to_segment() {
        let a = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        assert!((convex_hull_distance(&[0.5, 1.0], &a).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(convex_hull_distance(&[1.0, 0.0], &a).unwrap(), 0.0);
    }

    #[test]
    fn hull_of_full_cube_contains_interior() {
        let cube = subcube_face(3, 0).unwrap();
        let d = convex_hull_distance(&[0.3, 0.9, 0.5], &cube).unwrap();
        assert!(d < 1e-4, "{d}");
    }

    #[test]
    fn full_cube_gives_equality() {
        let r = corollary5_experiment(&subcube_face(4, 0).unwrap(), HullMode::Exact).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-9);
        assert_eq!(r.bound, 1.0);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn vertex_outside_cube_is_rejected() {
        assert!(corollary5_experiment(&[vec![0.0, 1.5]], HullMode::Exact).is_err());
    }

    #[test]
    fn enlargement_of_full_space_is_empty_tail() {
        let exp = DeviationExperiment {
            measure: ProductMeasure::iid(measure_laplace(), 2).unwrap(),
            set: SetFamily::full_space(2),
            t_grid: vec![0.5, 2.0],
            n_samples: 1000,
            seed: 1,
        };
        let r = enlargement_tail(&exp, &SeparableCost::iid(cost_u(), 2).unwrap()).unwrap();
        assert!(r.rows.iter().all(|row| row.empirical == 0.0 && row.verdict == Verdict::Pass));
    }

    #[test]
    fn inclusion_at_origin_and_knot() {
        let r = inclusion_check_un(2, 0.1, 2000, 3).unwrap();
        assert_eq!(r.violations, 0);
        let r = inclusion_check_un(32, 0.1, 2000, 3).unwrap();
        assert_eq!(r.sampler, SublevelSampler::RayScaling);
        assert_eq!(r.violations, 0);
    }
}
