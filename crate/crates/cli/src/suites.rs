//! Invariant suites behind `taukit verify`.
//!
//! Each suite is a plain function with explicit sizes so tests can run it at
//! any scale; [`run_suite`] picks the sizes from a [`RunConfig`].

use std::time::Instant;

use taukit_core::claims::{claim_exp_linear, claim_k_function, claim_w_derivative, cosh_identity_max_error, ClaimReport};
use taukit_core::concentration::{distance_to_l1_ball, hull_projection, subcube_face};
use taukit_core::infconv::full_span_kernel;
use taukit_core::measures::gaussian_cdf_map;
use taukit_core::rng::{tags, StreamRng};
use taukit_core::stats::{ks_critical, ks_statistic};
use taukit_core::tau::{negative_control_search, quantile_grid, CoupleCost, CoupleMeasure, Variant};
use taukit_core::*;

use crate::config::{RunConfig, UsageError};
use crate::output::{Json, Record};

pub const SUITES: [&str; 8] = ["costs", "infconv", "measures", "tau-1d", "tau-nd", "convex-tau", "concentration", "claims"];

/// Runs `f` and stamps the elapsed time on every record it returns.
pub fn timed(f: impl FnOnce() -> Result<Vec<Record>>) -> Result<Vec<Record>> {
    let start = Instant::now();
    let mut recs = f()?;
    let ms = start.elapsed().as_secs_f64() * 1e3 / recs.len().max(1) as f64;
    for r in &mut recs {
        r.wall_time_ms = ms;
    }
    Ok(recs)
}

fn ok_if(cond: bool) -> Verdict {
    if cond {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

pub fn run_suite(cfg: &RunConfig) -> anyhow::Result<Vec<Record>> {
    let seed = cfg.seed;
    let recs = match cfg.name.as_str() {
        "claims" => timed(|| Ok(claims_suite(cfg.samples.unwrap_or(1_000_000)))),
        "costs" => timed(costs_suite),
        "infconv" => timed(|| infconv_suite(cfg.samples.unwrap_or(1000), seed)),
        "measures" => timed(|| measures_suite(cfg.samples.unwrap_or(1_000_000), seed)),
        "tau-1d" => timed(|| tau_1d_suite(cfg.samples.unwrap_or(1000), seed)),
        "tau-nd" => timed(|| tau_nd_suite(5, cfg.samples.unwrap_or(200_000), seed)),
        "convex-tau" => {
            let dims = cfg.dims.clone().unwrap_or_else(|| vec![1, 2, 3, 4, 6]);
            timed(|| convex_tau_suite(&dims, cfg.samples.unwrap_or(50), seed))
        }
        "concentration" => timed(|| concentration_suite(cfg.samples.unwrap_or(100_000), seed)),
        other => {
            return Err(UsageError(format!("unknown suite `{other}` (expected one of {})", SUITES.join(", "))).into())
        }
    }?;
    Ok(recs)
}

fn claim_record(r: &ClaimReport) -> Record {
    // estimate is the negated worst margin, so the bound 0 reads "margin ≥ 0"
    Record::new("claims", r.name.clone(), -r.worst_margin, 0.0, ok_if(r.holds())).inputs(Json::obj([
        ("points", Json::Int(r.points as i128)),
        ("violations", Json::Int(r.violations as i128)),
        ("worst_at", Json::Num(r.worst_at)),
    ]))
}

/// The scalar inequalities behind the one-dimensional couples, on `points`
/// grid points each.
pub fn claims_suite(points: usize) -> Vec<Record> {
    let points = points.max(2);
    let mut out = vec![
        claim_record(&claim_w_derivative(points, 10.0)),
        claim_record(&claim_exp_linear(points)),
        claim_record(&claim_k_function(points, 10.0)),
    ];
    let err = cosh_identity_max_error(points, 10.0);
    out.push(
        Record::new("claims", "cosh identity", err, 1e-12, ok_if(err <= 1e-12))
            .inputs(Json::obj([("points", Json::Int(points as i128))])),
    );
    out
}

/// Closed forms and algebra of the costs.
pub fn costs_suite() -> Result<Vec<Record>> {
    let w = cost_w();
    let u = cost_u();
    let mut out = Vec::new();

    let knots = [(0.0, 0.0), (2.0, 2.0 / 9.0), (-2.0, 2.0 / 9.0), (3.0, 4.0 / 9.0), (11.0, 20.0 / 9.0)];
    let err = knots.iter().map(|&(x, v)| (w.eval(x) - v).abs()).fold(0.0, f64::max);
    out.push(Record::new("costs", "W closed form", err, 1e-15, ok_if(err <= 1e-15)));

    let jump = (w.eval(2.0 + 1e-12) - w.eval(2.0 - 1e-12)).abs();
    out.push(Record::new("costs", "W continuous at the knot", jump, 1e-12, ok_if(jump <= 1e-12)));

    let err = (-4000..=4000)
        .map(|i| i as f64 * 0.01)
        .map(|t| (u.eval(t) - 2.0 * w.eval(t / 2.0)).abs())
        .fold(0.0, f64::max);
    out.push(Record::new("costs", "U(t) = 2W(t/2)", err, 1e-15, ok_if(err <= 1e-15)));

    let grid = GridSpec::new(-20.0, 20.0, 40_001)?;
    let ww = infconv_costs(&w, &w, &grid)?;
    let err = grid.points().zip(ww.values()).map(|(x, v)| (v - u.eval(x)).abs()).fold(0.0, f64::max);
    let bound = w.lipschitz_on(20.0) * grid.step();
    out.push(
        Record::new("costs", "W □ W = U on [-20,20]", err, bound, ok_if(err <= bound))
            .inputs(Json::obj([("step", Json::Num(grid.step()))])),
    );

    let grid = GridSpec::new(-5.0, 5.0, 1001)?;
    let q = cost_quadratic(0.25)?;
    let qq = infconv_costs(&q, &q, &grid)?;
    let err = grid.points().zip(qq.values()).map(|(x, v)| (v - x * x / 8.0).abs()).fold(0.0, f64::max);
    let bound = 0.5 * grid.step() * grid.step();
    out.push(Record::new("costs", "x²/4 □ x²/4 = x²/8", err, bound, ok_if(err <= bound)));

    let shapes = [w.clone(), u.clone(), q.clone(), cost_quadratic(std::f64::consts::FRAC_PI_2)?, cost_quadratic(0.5)?];
    let bad = shapes.iter().filter(|c| !(c.is_convex() && c.is_even() && c.eval(0.0) == 0.0)).count();
    out.push(Record::new("costs", "shipped costs convex, even, zero at 0", bad as f64, 0.0, ok_if(bad == 0)));

    let sep = tensorize(vec![w.clone(), u.clone(), q.clone()])?;
    let x = [1.5, -3.0, 0.7];
    let err = (sep.eval(&x) - (w.eval(1.5) + u.eval(-3.0) + q.eval(0.7))).abs();
    out.push(Record::new("costs", "tensorized cost is the coordinate sum", err, 1e-15, ok_if(err <= 1e-15)));
    Ok(out)
}

fn random_grid_function(rng: &mut StreamRng, n: usize) -> Result<GridFunction> {
    let step = 10f64.powf(rng.uniform_in(-3.0, -1.0));
    let spec = GridSpec::with_step(-(n as f64 - 1.0) * step / 2.0, step, n)?;
    // mix of rough values and a smooth trend
    let a = rng.uniform_in(-3.0, 3.0);
    let vals: Vec<f64> = (0..n).map(|i| a * spec.point(i) + rng.uniform_in(-5.0, 5.0)).collect();
    GridFunction::new(spec, vals)
}

/// Fast convex inf-convolution against the brute force on random cases split
/// 60/30/10 over `N = 64, 1024, 8192`, plus `W □ W = U`.
pub fn infconv_suite(cases: usize, seed: u64) -> Result<Vec<Record>> {
    let costs = [cost_w(), cost_u(), cost_quadratic(0.25)?, cost_quadratic(std::f64::consts::FRAC_PI_2)?, cost_quadratic(0.5)?];
    let split = [(64usize, cases * 6 / 10), (1024, cases * 3 / 10), (8192, cases - cases * 6 / 10 - cases * 3 / 10)];
    let mut out = Vec::new();
    let mut case = 0u64;
    for (n, count) in split {
        let mut worst: f64 = 0.0;
        for _ in 0..count {
            let mut rng = StreamRng::for_chunk(seed, tags::GRID_CASES, case);
            let w = &costs[(case % costs.len() as u64) as usize];
            case += 1;
            let f = random_grid_function(&mut rng, n)?;
            let fast = infconv_fast_convex(&f, w)?;
            let kernel = GridFunction::from_fn(full_span_kernel(f.spec())?, |y| w.eval(y))?;
            let brute = infconv_bruteforce(&f, &kernel)?;
            for (a, b) in fast.values().iter().zip(brute.values()) {
                worst = worst.max((a - b).abs() / b.abs().max(1.0));
            }
        }
        out.push(
            Record::new("infconv", format!("fast = brute, N = {n}"), worst, 1e-12, ok_if(worst <= 1e-12)).inputs(
                Json::obj([("n", Json::Int(n as i128)), ("cases", Json::Int(count as i128)), ("seed", Json::Int(seed as i128))]),
            ),
        );
    }
    let mut recs = costs_suite()?;
    recs.retain(|r| r.case_id.starts_with("W □ W"));
    for r in &mut recs {
        r.suite = "infconv".into();
    }
    out.extend(recs);

    let spec = GridSpec::new(-2.0, 2.0, 41)?;
    let f = GridFunction::from_fn(spec, |x| (3.0 * x).cos())?;
    let k = GridFunction::origin_indicator(full_span_kernel(&spec)?)?;
    let same = infconv_bruteforce(&f, &k)?.values() == f.values();
    out.push(Record::new("infconv", "origin indicator is the identity", (!same) as u8 as f64, 0.0, ok_if(same)));
    Ok(out)
}

/// Mass, quantile inversion and KS checks for the base laws and `ξ`, plus
/// the Gaussian-CDF pushforward certificate.
pub fn measures_suite(samples: usize, seed: u64) -> Result<Vec<Record>> {
    let bases = [
        measure_exponential(),
        measure_reflected_exponential(),
        measure_laplace(),
        measure_gaussian(),
        measure_uniform01(),
    ];
    let mut out = Vec::new();
    let alpha = 1e-3;
    for (i, m) in bases.iter().enumerate() {
        let name = m.name();
        let (mass, _) = m.integrate_density(|_| 1.0, f64::NEG_INFINITY, f64::INFINITY, 1e-14)?;
        let err = (mass - 1.0).abs();
        out.push(Record::new("measures", format!("{name}: total mass"), err, 1e-9, ok_if(err <= 1e-9)));

        let mut worst: f64 = 0.0;
        for k in 1..1000 {
            let p = k as f64 / 1000.0;
            worst = worst.max((m.cdf(m.quantile(p)) - p).abs());
        }
        for p in [1e-12, 1e-6, 1.0 - 1e-6] {
            worst = worst.max((m.cdf(m.quantile(p)) - p).abs());
        }
        out.push(Record::new("measures", format!("{name}: cdf(quantile(p)) = p"), worst, 1e-12, ok_if(worst <= 1e-12)));

        let mut xs = m.sample_n(samples, seed.wrapping_add(i as u64), tags::MEASURE);
        let d = ks_statistic(&mut xs, |x| m.cdf(x));
        let crit = ks_critical(samples, alpha);
        out.push(
            Record::new("measures", format!("{name}: KS"), d, crit, ok_if(d <= crit))
                .inputs(Json::obj([("samples", Json::Int(samples as i128)), ("alpha", Json::Num(alpha))])),
        );
    }

    let xi = convolve(&measure_exponential(), &measure_reflected_exponential());
    let lap = measure_laplace();
    let err = [-6.0, -1.0, -0.2, 0.3, 2.0, 9.0].iter().map(|&x| (xi.density(x) - lap.density(x)).abs()).fold(0.0, f64::max);
    out.push(Record::new("measures", "exp * reflected exp: density is Laplace", err, 1e-10, ok_if(err <= 1e-10)));
    let mut xs = xi.sample_n(samples, seed.wrapping_add(100), tags::MEASURE);
    let d = ks_statistic(&mut xs, |x| lap.cdf(x));
    let crit = ks_critical(samples, alpha);
    out.push(
        Record::new("measures", "exp * reflected exp: KS against Laplace", d, crit, ok_if(d <= crit))
            .inputs(Json::obj([("samples", Json::Int(samples as i128)), ("alpha", Json::Num(alpha))])),
    );

    // Φ is 1/√(2π)-Lipschitz, so (π/2)(Φ(x) − Φ(y))² ≤ (x − y)²/4
    let a = std::f64::consts::FRAC_PI_2;
    let cert = pushforward(
        ProductMeasure::iid(measure_gaussian(), 1)?,
        gaussian_cdf_map(),
        SeparableCost::iid(cost_quadratic(0.25)?, 1)?,
        SeparableCost::iid(cost_quadratic(a)?, 1)?,
        seed,
    );
    let holds = cert.is_ok();
    out.push(
        Record::new("measures", "Gaussian CDF pushforward certificate, a = π/2", a / std::f64::consts::TAU, 0.25, ok_if(holds))
            .inputs(Json::obj([("pairs", Json::Int(taukit_core::measures::CERTIFICATE_PAIRS as i128))])),
    );
    Ok(out)
}

fn line_measure(c: &TauCouple) -> &Measure1D {
    match &c.measure {
        CoupleMeasure::Line(m) => m,
        _ => unreachable!("one-dimensional couple"),
    }
}

/// Grid step of the one-dimensional (τ) evaluations.
pub const TAU_1D_STEP: f64 = 0.01;

/// The step used for the tensorization comparison.
pub const TAU_ND_STEP: f64 = 0.02;

/// Saturation, Gaussian equality, `count` random bounded piecewise-linear
/// test functions per couple, and the `(γ, x²)` negative control.
pub fn tau_1d_suite(count: usize, seed: u64) -> Result<Vec<Record>> {
    let mut out = tau_equality_records()?;
    out.extend(tau_positive_records(count, seed)?);
    out.push(negative_control()?);
    Ok(out)
}

fn line_couples() -> [TauCouple; 3] {
    [TauCouple::exponential_w(), TauCouple::laplace_u(), TauCouple::gaussian_quarter()]
}

/// Constant `φ` saturates every couple; `φ = λx` saturates `(γ, x²/4)`.
pub fn tau_equality_records() -> Result<Vec<Record>> {
    let line = line_couples();
    let beta = TauCouple::bernoulli_half_quadratic();
    let mut out = Vec::new();
    for c in &line {
        let grid = quantile_grid(line_measure(c), TAU_1D_STEP)?;
        let r = tau_eval_1d(c, &TestFunction::constant(0.7), &grid)?;
        let err = (r.product - 1.0).abs();
        out.push(Record::new("tau-1d", format!("{}: constant saturates", c.label()), err, 1e-9, ok_if(err <= 1e-9)));
    }
    let r = tau_eval_discrete(&beta, &TestFunction::constant(0.7))?;
    let err = (r.product - 1.0).abs();
    out.push(Record::new("tau-1d", format!("{}: constant saturates", beta.label()), err, 1e-9, ok_if(err <= 1e-9)));

    let g = &line[2];
    let grid = quantile_grid(line_measure(g), TAU_1D_STEP)?;
    for l in [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] {
        let r = tau_eval_1d(g, &TestFunction::linear_1d(l), &grid)?;
        let err = (r.product - 1.0).abs();
        out.push(
            Record::new("tau-1d", format!("{}: linear equality", g.label()), err, 1e-6, ok_if(err <= 1e-6)).param(l),
        );
    }
    Ok(out)
}

/// `count` random test functions per couple: bounded piecewise-linear for
/// the line couples, convex piecewise-linear for the Bernoulli couple.
pub fn tau_positive_records(count: usize, seed: u64) -> Result<Vec<Record>> {
    let beta = TauCouple::bernoulli_half_quadratic();
    let mut out = Vec::new();
    let fns = random_test_functions("piecewise-linear", count, seed, TestFnParams::default())?;
    for c in &line_couples() {
        let grid = quantile_grid(line_measure(c), TAU_1D_STEP)?;
        out.push(positive_record(c, "piecewise-linear", seed, &fns, |phi| tau_eval_1d(c, phi, &grid))?);
    }
    let convex = random_test_functions("convex-piecewise-linear", count, seed, TestFnParams::default())?;
    out.push(positive_record(&beta, "convex-piecewise-linear", seed, &convex, |phi| tau_eval_discrete(&beta, phi))?);
    Ok(out)
}

/// One record summarizing many (τ) evaluations: the estimate is the worst
/// `product − 1 − budget`, checked against `0`.
fn positive_record(
    c: &TauCouple,
    family: &str,
    seed: u64,
    fns: &[TestFunction],
    eval: impl Fn(&TestFunction) -> Result<TauCoupleReport>,
) -> Result<Record> {
    let mut worst = f64::NEG_INFINITY;
    let mut worst_i = 0;
    let mut fails = 0;
    let mut inconclusive = 0;
    for (i, phi) in fns.iter().enumerate() {
        let r = eval(phi)?;
        let excess = r.product - 1.0 - r.error_budget;
        if excess > worst {
            worst = excess;
            worst_i = i;
        }
        match r.verdict {
            Verdict::Fail => fails += 1,
            Verdict::Inconclusive => inconclusive += 1,
            _ => {}
        }
    }
    let verdict = if fails > 0 {
        Verdict::Fail
    } else if inconclusive > 0 {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(Record::new("tau-1d", format!("{}: random {family}", c.label()), worst, 0.0, verdict).inputs(Json::obj([
        ("family", Json::Str(family.into())),
        ("count", Json::Int(fns.len() as i128)),
        ("seed", Json::Int(seed as i128)),
        ("fails", Json::Int(fails as i128)),
        ("worst_index", Json::Int(worst_i as i128)),
    ])))
}

/// `(γ, x²)` does not have (τ): `φ = λx` gives `e^{3λ²/4}`. The record
/// passes when the search exhibits a violator.
pub fn negative_control() -> Result<Record> {
    let c = TauCouple::new(
        CoupleMeasure::Line(measure_gaussian()),
        CoupleCost::Line(cost_quadratic(1.0)?),
        Variant::Plain,
        "gaussian-square",
    )?;
    let grid = quantile_grid(&measure_gaussian(), TAU_1D_STEP)?;
    let lambdas: Vec<f64> = (1..=12).map(|k| k as f64 * 0.25).collect();
    let found = negative_control_search(&c, &lambdas, &grid)?;
    Ok(match found {
        Some((l, r)) => Record::new("tau-1d", format!("{}: violator exhibited", c.label()), r.product, 1.0 + r.error_budget, Verdict::Pass)
            .param(l)
            .exact(Some((0.75 * l * l).exp()))
            .inputs(Json::obj([("phi", Json::Str(format!("{l} x")))])),
        None => Record::new("tau-1d", format!("{}: violator exhibited", c.label()), f64::NAN, 1.0, Verdict::Fail),
    })
}

/// `(ξ², U ⊕ U)` with separable `φ = φ₁ ⊕ φ₂`: the Monte Carlo product on a
/// full 2D lattice inf-convolution against the product of the two 1D
/// quadrature products, within 3 standard errors.
pub fn tau_nd_suite(pairs: usize, samples: usize, seed: u64) -> Result<Vec<Record>> {
    let c1 = TauCouple::laplace_u();
    let c2 = TauCouple::laplace_product(2)?;
    let grid = quantile_grid(&measure_laplace(), TAU_ND_STEP)?;
    let fns = random_test_functions("piecewise-linear", 2 * pairs, seed, TestFnParams::default())?;
    let mut out = Vec::new();
    for k in 0..pairs {
        let (f1, f2) = (&fns[2 * k], &fns[2 * k + 1]);
        let q = tau_eval_1d(&c1, f1, &grid)?.product * tau_eval_1d(&c1, f2, &grid)?.product;
        let phi = TestFunction::separable(vec![f1.clone(), f2.clone()]);
        let opts = McOptions { seed: seed.wrapping_add(k as u64), evaluator: PsiEvaluator::Lattice { step: TAU_ND_STEP }, strict: false };
        let r = tau_eval_nd_mc(&c2, &phi, samples, opts)?;
        let se = r.std_error.unwrap_or(0.0);
        let agree = (r.product - q).abs() <= 3.0 * se;
        out.push(
            Record::new("tau-nd", format!("{}: pair {k}", c2.label()), r.product, 1.0 + r.error_budget, ok_if(agree))
                .se(se)
                .exact(Some(q))
                .inputs(Json::obj([
                    ("pair", Json::Int(k as i128)),
                    ("seed", Json::Int(seed as i128)),
                    ("samples", Json::Int(samples as i128)),
                    ("step", Json::Num(TAU_ND_STEP)),
                ])),
        );
    }
    Ok(out)
}

/// Convex (τ) for `(βⁿ, Σ xᵢ²/2)` on random convex max-affine `φ`, and the
/// Prékopa–Leindler inequality on random grid functions.
pub fn convex_tau_suite(dims: &[usize], count: usize, seed: u64) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for &n in dims {
        let c = TauCouple::bernoulli_product(n)?;
        let params = TestFnParams { dim: n, ..Default::default() };
        let fns = random_test_functions("convex-piecewise-linear", count, seed, params)?;
        let mut rec = positive_record(&c, "convex-piecewise-linear", seed, &fns, |phi| tau_eval_discrete(&c, phi))?;
        rec.suite = "convex-tau".into();
        out.push(rec);
    }
    let spec = GridSpec::new(-6.0, 6.0, 601)?;
    let mut worst = f64::INFINITY;
    let mut fails = 0;
    for k in 0..count {
        let mut rng = StreamRng::for_chunk(seed, tags::GRID_CASES, (1 << 31) | k as u64);
        let (a, b, s) = (rng.uniform_in(-2.0, 2.0), rng.uniform_in(0.2, 3.0), rng.uniform_in(-1.0, 1.0));
        let f = GridFunction::from_fn(spec, |x| b * (x - a).powi(2) + s * (3.0 * x).sin())?;
        let (a, b) = (rng.uniform_in(-2.0, 2.0), rng.uniform_in(0.2, 3.0));
        let g = GridFunction::from_fn(spec, |x| b * (x - a).abs() + 0.1 * x * x)?;
        let r = prekopa_leindler_check(&f, &g, 1e-9)?;
        worst = worst.min(r.margin / r.rhs);
        fails += (!r.holds) as usize;
    }
    out.push(
        Record::new("convex-tau", "Prékopa–Leindler on random grid functions", -worst, 1e-9, ok_if(fails == 0))
            .inputs(Json::obj([("count", Json::Int(count as i128)), ("seed", Json::Int(seed as i128))])),
    );
    Ok(out)
}

/// Inclusion `{Uₙ < t} ⊂ 6√t B₂ + 9t B₁`, membership edge cases, hull
/// projections, a 1D enlargement tail against quadrature and the Gaussian
/// Poincaré equality case.
pub fn concentration_suite(samples: usize, seed: u64) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for n in [2, 8, 32] {
        for t in [0.1, 1.0, 10.0] {
            out.push(inclusion_record(n, t, samples, seed)?);
        }
    }

    let a = SetFamily::halfspace(3, 0, 0.0)?;
    let t: f64 = 0.7;
    let edge = 6.0 * t.sqrt() + 9.0 * t;
    let inside = talagrand_enlargement_member(&[edge, 0.0, 0.0], &a, t)?;
    let outside = talagrand_enlargement_member(&[edge * (1.0 + 1e-9), 0.0, 0.0], &a, t)?;
    out.push(Record::new("concentration", "two-ball enlargement boundary", edge, edge, ok_if(inside && !outside)).param(t));
    let d = distance_to_l1_ball(&[5.0, 0.0], 2.25);
    out.push(Record::new("concentration", "distance to the l1 ball", d, 3.0, ok_if((d - 2.75).abs() < 1e-15)).exact(Some(2.75)));

    let seg = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
    let h = hull_projection(&[0.5, 1.0], &seg)?;
    out.push(
        Record::new("concentration", "hull projection onto a segment", h.distance, 1.0, ok_if((h.distance - 1.0).abs() < 1e-9))
            .exact(Some(1.0)),
    );

    let exp = DeviationExperiment {
        measure: ProductMeasure::iid(measure_laplace(), 1)?,
        set: SetFamily::halfspace(1, 0, 0.0)?,
        t_grid: vec![0.5, 1.0, 2.0, 4.0],
        n_samples: samples,
        seed,
    };
    let res = enlargement_tail(&exp, &SeparableCost::iid(cost_u(), 1)?)?;
    for row in &res.rows {
        let exact = row.exact.unwrap_or(f64::NAN);
        let agree = (row.empirical - exact).abs() <= 3.0 * row.std_error.max(1.0 / samples as f64);
        let verdict = if agree { row.verdict } else { Verdict::Fail };
        out.push(
            Record::new("concentration", "laplace-u halfspace tail: MC vs quadrature", row.empirical, row.bound, verdict)
                .param(row.t)
                .se(row.std_error)
                .exact(row.exact),
        );
    }

    let p = poincare_check(&TestFunction::coordinate(4, 0, 1.0), &ProductMeasure::iid(measure_gaussian(), 4)?, samples, seed)?;
    let se = (p.lhs_se.powi(2) + p.rhs_se.powi(2)).sqrt();
    out.push(
        Record::new("concentration", "Poincaré equality for x1", p.lhs, p.rhs, ok_if((p.lhs - p.rhs).abs() <= 3.0 * se)).se(se),
    );

    let r = corollary5_experiment(&subcube_face(6, 2)?, HullMode::Exact)?;
    out.push(Record::new("concentration", "cube hull integral, n = 6, codim 2", r.lhs, r.bound, r.verdict));
    Ok(out)
}

pub fn inclusion_record(n: usize, t: f64, trials: usize, seed: u64) -> Result<Record> {
    let r = inclusion_check_un(n, t, trials, seed)?;
    let worst = r.max_l2_ratio.max(r.max_l1_ratio);
    Ok(Record::new("concentration", format!("{{U_n < t}} inclusion, n = {n}"), worst, 1.0, ok_if(r.violations == 0))
        .param(t)
        .inputs(Json::obj([
            ("n", Json::Int(n as i128)),
            ("t", Json::Num(t)),
            ("trials", Json::Int(trials as i128)),
            ("violations", Json::Int(r.violations as i128)),
            ("max_l2_ratio", Json::Num(r.max_l2_ratio)),
            ("max_l1_ratio", Json::Num(r.max_l1_ratio)),
            ("sampler", Json::Str(format!("{:?}", r.sampler).to_lowercase())),
            ("seed", Json::Int(seed as i128)),
        ])))
}
