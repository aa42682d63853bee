//! Quadrature: composite trapezoid on grids and adaptive Gauss–Kronrod.

use crate::error::{Result, TauError};

/// Composite trapezoid over maximal runs of finite samples.
///
/// Samples equal to `None` (e.g. where a test function is `+∞`) split the
/// grid; each run of consecutive finite nodes is integrated on its own, so a
/// function supported on `[a, b]` integrates to exactly its integral over
/// `[a, b]` without a ramp to zero at the ends.
pub fn trapezoid_runs(values: &[Option<f64>], step: f64) -> f64 {
    let mut total = 0.0;
    let mut i = 0;
    while i < values.len() {
        if values[i].is_none() {
            i += 1;
            continue;
        }
        let start = i;
        while i < values.len() && values[i].is_some() {
            i += 1;
        }
        let run = &values[start..i];
        if run.len() >= 2 {
            let inner: f64 = run[1..run.len() - 1].iter().map(|v| v.unwrap()).sum();
            total += step * (0.5 * run[0].unwrap() + inner + 0.5 * run[run.len() - 1].unwrap());
        }
    }
    total
}

/// Plain composite trapezoid.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => step * (0.5 * values[0] + values[1..n - 1].iter().sum::<f64>() + 0.5 * values[n - 1]),
    }
}

/// Trapezoid error proxy `(h/12)·Σ|Δ²g|` from the second differences.
pub fn trapezoid_error_proxy(values: &[Option<f64>], step: f64) -> f64 {
    values
        .windows(3)
        .filter_map(|w| match (w[0], w[1], w[2]) {
            (Some(a), Some(b), Some(c)) => Some((a - 2.0 * b + c).abs()),
            _ => None,
        })
        .sum::<f64>()
        * step
        / 12.0
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let dx = h * XGK[k];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) on `[a, b]`; infinite ends are mapped to a
/// finite interval. Returns `(integral, error estimate)`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    integrate_dyn(&f, a, b, tol)
}

fn integrate_dyn(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    if a.is_nan() || b.is_nan() {
        return Err(TauError::InvalidParameter("NaN integration bound".into()));
    }
    if a == b {
        return Ok((0.0, 0.0));
    }
    if a > b {
        return integrate_dyn(f, b, a, tol).map(|(v, e)| (-v, e));
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(f, a, b, tol),
        (true, false) => adaptive(
            &|t: f64| {
                let u = 1.0 - t;
                if u <= 0.0 {
                    return 0.0;
                }
                f(a + t / u) / (u * u)
            },
            0.0,
            1.0,
            tol,
        ),
        (false, true) => adaptive(
            &|t: f64| {
                let u = 1.0 - t;
                if u <= 0.0 {
                    return 0.0;
                }
                f(b - t / u) / (u * u)
            },
            0.0,
            1.0,
            tol,
        ),
        (false, false) => {
            let (l, el) = integrate_dyn(f, f64::NEG_INFINITY, 0.0, tol / 2.0)?;
            let (r, er) = integrate_dyn(f, 0.0, f64::INFINITY, tol / 2.0)?;
            Ok((l + r, el + er))
        }
    }
}

/// Integrates over `[a, b]` split at the given interior breakpoints.
pub fn integrate_pieces(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<(f64, f64)> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let mut edges = vec![a];
    edges.extend(pts);
    edges.push(b);
    let per = tol / (edges.len() - 1) as f64;
    let mut total = 0.0;
    let mut err = 0.0;
    for w in edges.windows(2) {
        let (v, e) = integrate_dyn(&f, w[0], w[1], per)?;
        total += v;
        err += e;
    }
    Ok((total, err))
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    const MAX_INTERVALS: usize = 2000;
    let (v0, e0) = gk15(f, a, b);
    let mut intervals = vec![(a, b, v0, e0)];
    loop {
        let total: f64 = intervals.iter().map(|iv| iv.2).sum();
        let err: f64 = intervals.iter().map(|iv| iv.3).sum();
        if !err.is_finite() || !total.is_finite() {
            return Err(TauError::NoConvergence(format!("adaptive quadrature on [{a}, {b}]: non-finite integrand")));
        }
        if err <= tol.max(1e-15 * total.abs()) {
            return Ok((total, err));
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(TauError::NoConvergence(format!(
                "adaptive quadrature on [{a}, {b}]: error {err} after {MAX_INTERVALS} intervals"
            )));
        }
        let (k, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, _, _) = intervals.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        let (vl, el) = gk15(f, lo, mid);
        let (vr, er) = gk15(f, mid, hi);
        intervals.push((lo, mid, vl, el));
        intervals.push((mid, hi, vr, er));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_integrates_gaussian_and_exponential() {
        let (v, _) = integrate(|x| (-x * x / 2.0).exp(), f64::NEG_INFINITY, f64::INFINITY, 1e-13).unwrap();
        assert!((v - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-11);
        let (v, _) = integrate(|x| (-x).exp(), 0.0, f64::INFINITY, 1e-13).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let (v, _) = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-13).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pieces_handle_kinks() {
        let (v, _) = integrate_pieces(|x| 0.5 * (-x.abs()).exp(), -50.0, 50.0, &[0.0], 1e-13).unwrap();
        assert!((v - (1.0 - (-50.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_runs_respect_support() {
        let h = 0.01;
        let vals: Vec<Option<f64>> = (0..301)
            .map(|i| {
                let x = -1.0 + i as f64 * h;
                ((-1e-9..=1.0 + 1e-9).contains(&x)).then_some(1.0)
            })
            .collect();
        assert!((trapezoid_runs(&vals, h) - 1.0).abs() < 1e-12);
    }
}
