//! Numerical inf-convolution `(f □ g)(x) = inf_y f(x − y) + g(y)`.
//!
//! * [`infconv_bruteforce`]: O(N²) reference on grids, no interpolation.
//! * [`infconv_fast_convex`]: convex kernels; lower envelope of parabolas in
//!   O(N) for quadratics, divide and conquer over the Monge matrix in
//!   O(N log N) otherwise.
//! * [`infconv_pointwise`]: n-D evaluation at a single point by lattice search.
//! * [`infconv_lattice`]: n-D grid inf-convolution with a separable cost by
//!   axis-wise 1D sweeps.
//!
//! Outputs live on the grid of `f`. `y` only ranges over grid points.

use rayon::prelude::*;

use crate::costs::{CostFunction, SeparableCost};
use crate::error::{Result, TauError};
use crate::grid::{GridFunction, GridSpec};

/// Argmin of one output sample: `(index into f, index into g)`.
pub type Argmin = Option<(usize, usize)>;

fn kernel_offset(f: &GridFunction, g: &GridFunction) -> Result<i64> {
    if !f.spec().same_step(g.spec()) {
        return Err(TauError::IncompatibleGrids(format!(
            "steps differ: {} vs {}",
            f.spec().step(),
            g.spec().step()
        )));
    }
    g.spec().origin_offset().ok_or_else(|| {
        TauError::IncompatibleGrids(format!(
            "kernel grid starting at {} is not aligned with the origin",
            g.spec().lo()
        ))
    })
}

/// Range of kernel indices `j` such that `m = i − j − kg` indexes `f`.
#[inline]
fn j_range(i: usize, kg: i64, nf: usize, ng: usize) -> Option<(usize, usize)> {
    let i = i as i64;
    let lo = (i - kg - (nf as i64 - 1)).max(0);
    let hi = (i - kg).min(ng as i64 - 1);
    (lo <= hi).then_some((lo as usize, hi as usize))
}

/// Brute-force `f □ g` on the grid of `f`.
///
/// Both grids must share the step and `g`'s grid must be aligned with the
/// origin, so that `x − y` lands exactly on `f`'s grid.
pub fn infconv_bruteforce(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    let kg = kernel_offset(f, g)?;
    let fv = f.values();
    let gv = g.values();
    let nf = fv.len();
    let ng = gv.len();
    let f_rev: Vec<f64> = fv.iter().rev().copied().collect();
    let out: Vec<f64> = (0..nf)
        .into_par_iter()
        .with_min_len(64)
        .map(|i| match j_range(i, kg, nf, ng) {
            None => f64::INFINITY,
            Some((jlo, jhi)) => {
                // m = i − j − kg runs backwards as j increases; in f_rev it runs forwards
                let k0 = (nf as i64 - 1 - (i as i64 - jlo as i64 - kg)) as usize;
                let len = jhi - jlo + 1;
                min_plus_dot(&f_rev[k0..k0 + len], &gv[jlo..jlo + len])
            }
        })
        .collect();
    GridFunction::new(*f.spec(), out)
}

#[inline]
fn min_plus_dot(a: &[f64], b: &[f64]) -> f64 {
    const LANES: usize = 8;
    let mut acc = [f64::INFINITY; LANES];
    let chunks = a.len() / LANES;
    for c in 0..chunks {
        let aa = &a[c * LANES..c * LANES + LANES];
        let bb = &b[c * LANES..c * LANES + LANES];
        for l in 0..LANES {
            let s = aa[l] + bb[l];
            acc[l] = if s < acc[l] { s } else { acc[l] };
        }
    }
    let mut best = acc.iter().copied().fold(f64::INFINITY, f64::min);
    for k in chunks * LANES..a.len() {
        best = best.min(a[k] + b[k]);
    }
    best
}

/// Brute force that also reports the leftmost argmin `(m, j)` of every sample.
pub fn infconv_bruteforce_with_argmin(
    f: &GridFunction,
    g: &GridFunction,
) -> Result<(GridFunction, Vec<Argmin>)> {
    let kg = kernel_offset(f, g)?;
    let fv = f.values();
    let gv = g.values();
    let nf = fv.len();
    let ng = gv.len();
    let rows: Vec<(f64, Argmin)> = (0..nf)
        .into_par_iter()
        .with_min_len(64)
        .map(|i| {
            let mut best = f64::INFINITY;
            let mut arg = None;
            if let Some((jlo, jhi)) = j_range(i, kg, nf, ng) {
                for j in jlo..=jhi {
                    let m = (i as i64 - j as i64 - kg) as usize;
                    let s = fv[m] + gv[j];
                    if s < best {
                        best = s;
                        arg = Some((m, j));
                    }
                }
            }
            (best, arg)
        })
        .collect();
    let (vals, args): (Vec<f64>, Vec<Argmin>) = rows.into_iter().unzip();
    Ok((GridFunction::new(*f.spec(), vals)?, args))
}

/// Kernel grid used by the convex fast path: origin-centred, same step as
/// `f`, spanning the full width of `f`'s grid.
pub fn full_span_kernel(f_spec: &GridSpec) -> Result<GridSpec> {
    GridSpec::symmetric(f_spec.len() - 1, f_spec.step())
}

/// `f □ g` for a convex cost `g`, matching [`infconv_bruteforce`] against
/// `g` sampled on [`full_span_kernel`].
pub fn infconv_fast_convex(f: &GridFunction, g: &CostFunction) -> Result<GridFunction> {
    infconv_fast_convex_with_argmin(f, g).map(|(out, _)| out)
}

/// [`infconv_fast_convex`] with the argmin `(m, j)` of every sample.
pub fn infconv_fast_convex_with_argmin(
    f: &GridFunction,
    g: &CostFunction,
) -> Result<(GridFunction, Vec<Argmin>)> {
    let spec = *f.spec();
    let kernel = full_span_kernel(&spec)?;
    let kv: Vec<f64> = kernel.points().map(|y| g.eval(y)).collect();
    if let Some(j) = kv.iter().position(|v| !v.is_finite()) {
        return Err(TauError::InvalidParameter(format!(
            "cost {g} is not finite at y = {} inside the needed span",
            kernel.point(j)
        )));
    }
    if !g.is_convex() || !sampled_midpoint_convex(&kv) {
        return Err(TauError::NotConvex(g.label()));
    }
    let (vals, args) = match g.is_quadratic() {
        Some(c) => lower_envelope(f.values(), c * spec.step() * spec.step()),
        None => monotone_minima(f.values(), &kv),
    };
    let half = spec.len() - 1;
    let args = args
        .into_iter()
        .enumerate()
        .map(|(i, m)| m.map(|m| (m, i + half - m)))
        .collect();
    Ok((GridFunction::new(spec, vals)?, args))
}

/// Midpoint convexity on consecutive triples of a uniformly sampled function.
pub fn sampled_midpoint_convex(values: &[f64]) -> bool {
    values.windows(3).all(|w| {
        let slack = 1e-12 * (w[0].abs() + w[2].abs() + 1.0);
        w[1] <= 0.5 * (w[0] + w[2]) + slack
    })
}

/// `out[i] = min_m f[m] + a·(i − m)²` by the lower envelope of parabolas.
fn lower_envelope(f: &[f64], a: f64) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = f.len();
    let finite: Vec<usize> = (0..n).filter(|&m| f[m].is_finite()).collect();
    if finite.is_empty() {
        return (vec![f64::INFINITY; n], vec![None; n]);
    }
    let key = |m: usize| f[m] + a * (m as f64) * (m as f64);
    // vertices of the envelope and the left boundaries of their cells
    let mut v: Vec<usize> = Vec::with_capacity(finite.len());
    let mut z: Vec<f64> = Vec::with_capacity(finite.len() + 1);
    v.push(finite[0]);
    z.push(f64::NEG_INFINITY);
    for &q in &finite[1..] {
        loop {
            let p = *v.last().unwrap();
            let s = (key(q) - key(p)) / (2.0 * a * (q as f64 - p as f64));
            if s <= *z.last().unwrap() {
                v.pop();
                z.pop();
            } else {
                v.push(q);
                z.push(s);
                break;
            }
        }
    }
    let mut out = vec![0.0; n];
    let mut arg = vec![None; n];
    let mut k = 0;
    for i in 0..n {
        let x = i as f64;
        while k + 1 < v.len() && z[k + 1] < x {
            k += 1;
        }
        // the envelope boundary is exact only up to rounding: check the neighbour
        let mut best_m = v[k];
        let d = x - best_m as f64;
        let mut best = f[best_m] + a * d * d;
        if k + 1 < v.len() {
            let m2 = v[k + 1];
            let d2 = x - m2 as f64;
            let c2 = f[m2] + a * d2 * d2;
            if c2 < best {
                best = c2;
                best_m = m2;
            }
        }
        out[i] = best;
        arg[i] = Some(best_m);
    }
    (out, arg)
}

/// `out[i] = min_m f[m] + kv[i − m + half]` for convex `kv`, using the
/// monotonicity of leftmost argmins in Monge matrices.
fn monotone_minima(f: &[f64], kv: &[f64]) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = f.len();
    let half = n - 1;
    let cols: Vec<usize> = (0..n).filter(|&m| f[m].is_finite()).collect();
    let mut out = vec![f64::INFINITY; n];
    let mut arg = vec![None; n];
    if cols.is_empty() {
        return (out, arg);
    }
    let cost = |i: usize, m: usize| f[m] + kv[i + half - m];
    let mut stack = vec![(0usize, n - 1, 0usize, cols.len() - 1)];
    while let Some((rlo, rhi, clo, chi)) = stack.pop() {
        let mid = rlo + (rhi - rlo) / 2;
        let mut best = f64::INFINITY;
        let mut best_c = clo;
        for (c, &m) in cols.iter().enumerate().take(chi + 1).skip(clo) {
            let s = cost(mid, m);
            if s < best {
                best = s;
                best_c = c;
            }
        }
        out[mid] = best;
        arg[mid] = Some(cols[best_c]);
        if mid > rlo {
            stack.push((rlo, mid - 1, clo, best_c));
        }
        if mid < rhi {
            stack.push((mid + 1, rhi, best_c, chi));
        }
    }
    (out, arg)
}

/// Search strategy for [`infconv_pointwise`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStrategy {
    /// Every point of the product lattice (n ≤ 3).
    Exhaustive,
    /// Per-axis exhaustive sweeps; optimality is not certified.
    CoordinateDescent { sweeps: usize },
}

impl SearchStrategy {
    pub fn default_for(dim: usize) -> Self {
        if dim <= 3 {
            SearchStrategy::Exhaustive
        } else {
            SearchStrategy::CoordinateDescent { sweeps: 5 }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointwiseOptions {
    pub strategy: Option<SearchStrategy>,
    /// Escalate a boundary argmin into [`TauError::SearchBoundary`].
    pub strict: bool,
}

impl Default for PointwiseOptions {
    fn default() -> Self {
        Self { strategy: None, strict: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseResult {
    pub value: f64,
    pub argmin: Vec<f64>,
    /// First axis whose argmin touched the edge of its search grid.
    pub boundary_axis: Option<usize>,
}

impl PointwiseResult {
    pub fn boundary_hit(&self) -> bool {
        self.boundary_axis.is_some()
    }
}

/// Maximum dimension handled by [`infconv_pointwise`].
pub const MAX_POINTWISE_DIM: usize = 16;

/// `min_y φ(x − y) + w(y)` over the lattice `search[0] × … × search[n−1]`.
pub fn infconv_pointwise<F>(
    phi: F,
    w: &SeparableCost,
    x: &[f64],
    search: &[GridSpec],
    opts: PointwiseOptions,
) -> Result<PointwiseResult>
where
    F: Fn(&[f64]) -> f64,
{
    let n = x.len();
    if n == 0 || n > MAX_POINTWISE_DIM {
        return Err(TauError::InvalidParameter(format!("dimension {n} outside 1..=16")));
    }
    if w.dim() != n || search.len() != n {
        return Err(TauError::InvalidParameter(format!(
            "dimension mismatch: point {n}, cost {}, search {}",
            w.dim(),
            search.len()
        )));
    }
    let strategy = opts.strategy.unwrap_or_else(|| SearchStrategy::default_for(n));
    if strategy == SearchStrategy::Exhaustive && n > 3 {
        return Err(TauError::InvalidParameter(format!("exhaustive search needs n ≤ 3, got {n}")));
    }
    let costs: Vec<Vec<f64>> = (0..n)
        .map(|k| search[k].points().map(|y| w.component(k).eval(y)).collect())
        .collect();
    let mut idx: Vec<usize> = search.iter().map(|s| s.nearest_index(0.0)).collect();
    let mut z = vec![0.0; n];
    let eval = |idx: &[usize], z: &mut [f64]| -> f64 {
        let mut c = 0.0;
        for k in 0..n {
            z[k] = x[k] - search[k].point(idx[k]);
            c += costs[k][idx[k]];
        }
        if c == f64::INFINITY {
            return c;
        }
        c + phi(z)
    };
    let mut best = eval(&idx, &mut z);
    match strategy {
        SearchStrategy::Exhaustive => {
            let mut cur = vec![0usize; n];
            let mut best_idx = idx.clone();
            'outer: loop {
                let v = eval(&cur, &mut z);
                if v < best {
                    best = v;
                    best_idx.copy_from_slice(&cur);
                }
                for k in (0..n).rev() {
                    cur[k] += 1;
                    if cur[k] < search[k].len() {
                        continue 'outer;
                    }
                    cur[k] = 0;
                }
                break;
            }
            idx = best_idx;
        }
        SearchStrategy::CoordinateDescent { sweeps } => {
            for _ in 0..sweeps.max(1) {
                let mut improved = false;
                for k in 0..n {
                    let keep = idx[k];
                    let mut arg = keep;
                    for j in 0..search[k].len() {
                        idx[k] = j;
                        let v = eval(&idx, &mut z);
                        if v < best {
                            best = v;
                            arg = j;
                        }
                    }
                    idx[k] = arg;
                    improved |= arg != keep;
                }
                if !improved {
                    break;
                }
            }
        }
    }
    let boundary_axis = (0..n).find(|&k| idx[k] == 0 || idx[k] + 1 == search[k].len());
    if opts.strict {
        if let Some(axis) = boundary_axis {
            return Err(TauError::SearchBoundary { axis });
        }
    }
    Ok(PointwiseResult {
        value: best,
        argmin: (0..n).map(|k| search[k].point(idx[k])).collect(),
        boundary_axis,
    })
}

/// A function sampled on a product of 1D grids, row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction {
    axes: Vec<GridSpec>,
    values: Vec<f64>,
}

impl LatticeFunction {
    pub fn new(axes: Vec<GridSpec>, values: Vec<f64>) -> Result<Self> {
        let total: usize = axes.iter().map(GridSpec::len).product();
        if axes.is_empty() || values.len() != total {
            return Err(TauError::InvalidValues(format!(
                "{} values for a lattice of {total} points",
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(TauError::InvalidValues("NaN or -inf in lattice".into()));
        }
        Ok(Self { axes, values })
    }

    /// Samples `f` at every lattice point.
    pub fn from_fn<F>(axes: Vec<GridSpec>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let total: usize = axes.iter().map(GridSpec::len).product();
        let n = axes.len();
        let values: Vec<f64> = (0..total)
            .into_par_iter()
            .with_min_len(1024)
            .map_init(
                || vec![0.0; n],
                |x, flat| {
                    let mut r = flat;
                    for k in (0..n).rev() {
                        let len = axes[k].len();
                        x[k] = axes[k].point(r % len);
                        r /= len;
                    }
                    f(x)
                },
            )
            .collect();
        Self::new(axes, values)
    }

    pub fn axes(&self) -> &[GridSpec] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    fn strides(&self) -> Vec<usize> {
        let n = self.axes.len();
        let mut s = vec![1; n];
        for k in (0..n.saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.axes[k + 1].len();
        }
        s
    }

    /// Multilinear interpolation; coordinates outside are clamped to the lattice.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let n = self.axes.len();
        assert_eq!(x.len(), n);
        let strides = self.strides();
        let mut base = 0usize;
        let mut frac = [0.0f64; 8];
        let mut offs = [0usize; 8];
        assert!(n <= 8, "interpolation supports up to 8 axes");
        for k in 0..n {
            let ax = &self.axes[k];
            let t = ((x[k] - ax.lo()) / ax.step()).clamp(0.0, (ax.len() - 1) as f64);
            let i0 = (t.floor() as usize).min(ax.len() - 2);
            frac[k] = t - i0 as f64;
            base += i0 * strides[k];
            offs[k] = strides[k];
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut wgt = 1.0;
            let mut at = base;
            for k in 0..n {
                if corner >> k & 1 == 1 {
                    wgt *= frac[k];
                    at += offs[k];
                } else {
                    wgt *= 1.0 - frac[k];
                }
            }
            if wgt != 0.0 {
                acc += wgt * self.values[at];
            }
        }
        acc
    }
}

/// `φ □ w` on the lattice of `phi` by one 1D inf-convolution sweep per axis.
///
/// Exact on the lattice for separable `w` (the infimum over `y` factorizes
/// into nested per-axis infima). Convex components use the fast path.
pub fn infconv_lattice(phi: &LatticeFunction, w: &SeparableCost) -> Result<LatticeFunction> {
    let n = phi.dim();
    if w.dim() != n {
        return Err(TauError::InvalidParameter(format!(
            "cost dimension {} vs lattice dimension {n}",
            w.dim()
        )));
    }
    let strides = phi.strides();
    let mut cur = phi.values.clone();
    for k in 0..n {
        let ax = phi.axes[k];
        let len = ax.len();
        let stride = strides[k];
        let total = cur.len();
        let n_lines = total / len;
        let line_starts: Vec<usize> = (0..n_lines)
            .map(|l| {
                let outer = l / stride;
                let inner = l % stride;
                outer * stride * len + inner
            })
            .collect();
        let cost = w.component(k);
        let lines: Vec<Vec<f64>> = line_starts
            .par_iter()
            .map(|&start| {
                let line: Vec<f64> = (0..len).map(|t| cur[start + t * stride]).collect();
                let gf = GridFunction::new(ax, line)?;
                let kernel = full_span_kernel(&ax)?;
                let finite = {
                    let (a, b) = cost.domain();
                    a <= kernel.lo() && b >= kernel.hi()
                };
                let out = if finite && cost.is_convex() {
                    infconv_fast_convex(&gf, cost)?
                } else {
                    let g = GridFunction::from_fn(kernel, |y| cost.eval(y))?;
                    infconv_bruteforce(&gf, &g)?
                };
                Ok(out.into_values())
            })
            .collect::<Result<_>>()?;
        for (start, line) in line_starts.iter().zip(lines) {
            for (t, v) in line.into_iter().enumerate() {
                cur[start + t * stride] = v;
            }
        }
    }
    LatticeFunction::new(phi.axes.clone(), cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::{cost_quadratic, cost_u, cost_w, tensorize};

    fn grid(n: usize, h: f64) -> GridSpec {
        GridSpec::symmetric(n, h).unwrap()
    }

    #[test]
    fn identity_kernel_returns_f() {
        let s = grid(50, 0.1);
        let f = GridFunction::from_fn(s, |x| (3.0 * x).sin() + 0.1 * x).unwrap();
        let g = GridFunction::origin_indicator(s).unwrap();
        let out = infconv_bruteforce(&f, &g).unwrap();
        assert_eq!(out.values(), f.values());
    }

    #[test]
    fn zero_f_gives_zero() {
        let s = grid(40, 0.25);
        let f = GridFunction::constant(s, 0.0).unwrap();
        let g = GridFunction::from_fn(s, |y| (y * y).min(4.0)).unwrap();
        let out = infconv_bruteforce(&f, &g).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quadratic_bruteforce_oracle() {
        // x²□x² = x²/2; y ranges over the grid so the error is at most L·h
        let s = GridSpec::new(-5.0, 5.0, 1001).unwrap();
        let f = GridFunction::from_fn(s, |x| x * x).unwrap();
        let k = full_span_kernel(&s).unwrap();
        let g = GridFunction::from_fn(k, |y| y * y).unwrap();
        let out = infconv_bruteforce(&f, &g).unwrap();
        let lip = 2.0 * 5.0;
        for (i, v) in out.values().iter().enumerate() {
            let x = s.point(i);
            if x.abs() < 4.5 {
                assert!((v - x * x / 2.0).abs() <= lip * s.step(), "x = {x}");
            }
        }
    }

    #[test]
    fn rejects_incompatible_steps() {
        let f = GridFunction::constant(grid(10, 0.1), 0.0).unwrap();
        let g = GridFunction::constant(grid(10, 0.2), 0.0).unwrap();
        assert!(matches!(infconv_bruteforce(&f, &g), Err(TauError::IncompatibleGrids(_))));
        let g = GridFunction::constant(GridSpec::with_step(0.05, 0.1, 5).unwrap(), 0.0).unwrap();
        assert!(infconv_bruteforce(&f, &g).is_err());
    }

    #[test]
    fn fast_constant_input() {
        let s = GridSpec::new(-3.0, 7.0, 301).unwrap();
        let f = GridFunction::constant(s, 2.5).unwrap();
        for g in [cost_quadratic(0.25).unwrap(), cost_w()] {
            let out = infconv_fast_convex(&f, &g).unwrap();
            assert!(out.values().iter().all(|&v| v == 2.5));
        }
    }

    #[test]
    fn fast_matches_bruteforce_with_infinities() {
        let s = GridSpec::new(-2.0, 2.0, 201).unwrap();
        let f = GridFunction::from_fn(s, |x| if x > 0.3 && x < 0.9 { f64::INFINITY } else { (5.0 * x).cos() })
            .unwrap();
        for g in [cost_quadratic(0.7).unwrap(), cost_w(), cost_u()] {
            let k = full_span_kernel(&s).unwrap();
            let gg = GridFunction::from_fn(k, |y| g.eval(y)).unwrap();
            let a = infconv_fast_convex(&f, &g).unwrap();
            let b = infconv_bruteforce(&f, &gg).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() <= 1e-12, "{g}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn all_infinite_input() {
        let s = GridSpec::new(0.0, 1.0, 11).unwrap();
        let f = GridFunction::constant(s, f64::INFINITY).unwrap();
        let out = infconv_fast_convex(&f, &cost_w()).unwrap();
        assert!(out.values().iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn pointwise_examples() {
        let u1 = tensorize(vec![cost_u()]).unwrap();
        let search = [grid(800, 0.01)];
        let r = infconv_pointwise(|_: &[f64]| 0.0, &u1, &[1.3], &search, Default::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.argmin, vec![0.0]);

        let q = tensorize(vec![cost_quadratic(0.25).unwrap()]).unwrap();
        let lam = 1.5;
        for x in [-1.0, 0.2, 2.0] {
            let r = infconv_pointwise(|z: &[f64]| lam * z[0], &q, &[x], &search, Default::default()).unwrap();
            assert!((r.value - (lam * x - lam * lam)).abs() < 1e-12);
            assert!(!r.boundary_hit());
        }

        // indicator of [0, ∞) with U at x = −2: U(2) = 1/9
        let ind = |z: &[f64]| if z[0] >= -1e-12 { 0.0 } else { f64::INFINITY };
        let r = infconv_pointwise(ind, &u1, &[-2.0], &search, Default::default()).unwrap();
        assert!((r.value - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn pointwise_boundary_flag_and_strict() {
        let q = tensorize(vec![cost_quadratic(0.25).unwrap()]).unwrap();
        let search = [grid(10, 0.1)];
        let phi = |z: &[f64]| 3.0 * z[0];
        let r = infconv_pointwise(phi, &q, &[0.0], &search, Default::default()).unwrap();
        assert_eq!(r.boundary_axis, Some(0));
        let strict = PointwiseOptions { strict: true, ..Default::default() };
        assert!(matches!(
            infconv_pointwise(phi, &q, &[0.0], &search, strict),
            Err(TauError::SearchBoundary { axis: 0 })
        ));
    }

    #[test]
    fn pointwise_2d_exhaustive_and_cd_agree_on_separable() {
        let w = tensorize(vec![cost_u(), cost_u()]).unwrap();
        let search = [grid(150, 0.1), grid(150, 0.1)];
        let phi = |z: &[f64]| (z[0] - 1.0).abs().min(3.0) + 0.5 * z[1].clamp(-2.0, 2.0);
        let x = [2.2, -0.7];
        let ex = infconv_pointwise(phi, &w, &x, &search, Default::default()).unwrap();
        let cd = infconv_pointwise(
            phi,
            &w,
            &x,
            &search,
            PointwiseOptions { strategy: Some(SearchStrategy::CoordinateDescent { sweeps: 5 }), strict: false },
        )
        .unwrap();
        assert!((ex.value - cd.value).abs() < 1e-12);
    }

    #[test]
    fn lattice_sweeps_match_pointwise_on_lattice() {
        let ax = GridSpec::symmetric(20, 0.25).unwrap();
        let w = tensorize(vec![cost_quadratic(0.25).unwrap(), cost_w()]).unwrap();
        let phi = |z: &[f64]| (z[0] * z[1]).sin() * 2.0 + 0.3 * z[0];
        let lat = LatticeFunction::from_fn(vec![ax, ax], phi).unwrap();
        let out = infconv_lattice(&lat, &w).unwrap();
        // direct double minimum restricted to the lattice
        for i in (0..ax.len()).step_by(3) {
            for j in (0..ax.len()).step_by(4) {
                let x = [ax.point(i), ax.point(j)];
                let mut best = f64::INFINITY;
                for a in 0..ax.len() {
                    for b in 0..ax.len() {
                        let z = [ax.point(a), ax.point(b)];
                        let v = phi(&z) + w.eval(&[x[0] - z[0], x[1] - z[1]]);
                        best = best.min(v);
                    }
                }
                let got = out.values()[i * ax.len() + j];
                assert!((got - best).abs() < 1e-12, "{got} vs {best}");
            }
        }
    }

    #[test]
    fn interpolation_is_exact_for_multilinear() {
        let ax = GridSpec::new(-1.0, 2.0, 7).unwrap();
        let f = |z: &[f64]| 1.0 + 2.0 * z[0] - z[1] + 0.5 * z[0] * z[1];
        let lat = LatticeFunction::from_fn(vec![ax, ax], f).unwrap();
        for p in [[0.13, -0.77], [1.9, 1.1], [-1.0, 2.0]] {
            assert!((lat.interpolate(&p) - f(&p)).abs() < 1e-12);
        }
    }
}
