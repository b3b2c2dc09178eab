//! Numerical checks of the nonsmooth interpolation inequality
//! `|f(y) - f(x) - <g, y - x>| <= L/2 ||y - x||^2 + delta ||y - x||` for some
//! `g` in the Clarke subdifferential at `x`, plus the tools used to audit the
//! declared `(L, delta)`: Clarke directional derivative estimates and
//! kink scans along segments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{NormKind, Vector};
use crate::oracles::{Objective, SelectionRule};
use crate::scalar::Scalar;

/// Estimate of the Clarke upper directional derivative
/// `limsup_{x' -> x, a -> 0} (f(x' + a h) - f(x')) / a`.
///
/// For each radius `r` the difference quotient with `a = r` is maximized over
/// base points `x' in {x, x +- r/2 h_hat, x +- r/2 e_i}`; points outside the
/// objective's domain are skipped. The last two radii are combined by
/// Richardson extrapolation to `r = 0`.
pub fn clarke_dd_estimate<S: Scalar>(f: &dyn Objective<S>, x: &Vector<S>, h: &Vector<S>, radii: &[S]) -> Result<S> {
    if radii.is_empty() {
        return Err(Error::InvalidInput("at least one radius is required".into()));
    }
    if radii.iter().any(|r| !(r.is_finite() && *r > S::zero())) {
        return Err(Error::InvalidInput("radii must be positive".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("radii must be strictly decreasing".into()));
    }
    x.check_dim(f.dim())?;
    h.check_dim(f.dim())?;
    let h_norm = h.norm(NormKind::Euclidean);
    let h_hat = if h_norm > S::zero() { h.scaled(S::one() / h_norm) } else { h.clone() };

    let quotient_max = |r: S| -> Result<S> {
        let half = r * S::lit(0.5);
        let mut offsets = vec![Vector::zeros(x.dim()), h_hat.scaled(half), h_hat.scaled(-half)];
        for i in 0..x.dim() {
            let e = Vector::basis(x.dim(), i);
            offsets.push(e.scaled(half));
            offsets.push(e.scaled(-half));
        }
        let mut best: Option<S> = None;
        for off in offsets {
            let base = x + &off;
            let (Ok(a), Ok(b)) = (f.value(&base), f.value(&base.axpy(r, h))) else {
                continue;
            };
            let q = (b - a) / r;
            best = Some(best.map_or(q, |m| m.max(q)));
        }
        best.ok_or_else(|| Error::OutOfDomain("no sample point lies in the domain".into()))
    };

    let n = radii.len();
    let last = quotient_max(radii[n - 1])?;
    if n == 1 {
        return Ok(last);
    }
    let prev = quotient_max(radii[n - 2])?;
    let (r1, r2) = (radii[n - 2], radii[n - 1]);
    Ok(last + (last - prev) * r2 / (r1 - r2))
}

/// Default radii for [`clarke_dd_estimate`].
pub fn default_radii<S: Scalar>() -> Vec<S> {
    vec![S::lit(1e-4), S::lit(1e-5), S::lit(1e-6)]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ScanOptions<S> {
    /// Number of initial grid cells.
    pub grid: usize,
    /// Smallest reported jump, in dual-norm units.
    pub jump_tol: S,
    /// Bisection stops at cells of this parameter width.
    pub min_width: S,
    pub max_kinks: usize,
    /// Norm used for `||y - x||`.
    pub norm: NormKind,
}

impl<S: Scalar> Default for ScanOptions<S> {
    fn default() -> Self {
        Self { grid: 1024, jump_tol: S::lit(1e-6), min_width: S::lit(1e-12), max_kinks: 52, norm: NormKind::Euclidean }
    }
}

impl<S: Scalar> ScanOptions<S> {
    pub fn with_grid(grid: usize) -> Self {
        Self { grid, ..Self::default() }
    }
}

/// Kinks of `t -> f((1 - t) x + t y)` on `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SegmentScan<S> {
    pub x: Vector<S>,
    pub y: Vector<S>,
    /// Increasing kink parameters.
    pub kink_params: Vec<S>,
    /// One-sided derivative gap at each kink divided by `||y - x||`.
    pub jump_sizes: Vec<S>,
    pub declared_l: S,
    pub declared_delta: S,
}

impl<S: Scalar> SegmentScan<S> {
    pub fn total_jump(&self) -> S {
        self.jump_sizes.iter().copied().sum()
    }

    /// Whether the observed jumps fit in the declared budget (1e-9 slack).
    pub fn within_budget(&self) -> bool {
        self.total_jump() <= self.declared_delta + S::lit(1e-9)
    }
}

/// Restriction of `f` to the segment, with one-sided derivative estimates.
struct Line<'a, S: Scalar> {
    f: &'a dyn Objective<S>,
    x: &'a Vector<S>,
    dir: Vector<S>,
}

impl<S: Scalar> Line<'_, S> {
    fn phi(&self, t: S) -> Result<S> {
        self.f.value(&self.x.axpy(t, &self.dir))
    }

    /// Richardson-corrected one-sided derivative, forward when `sign > 0`.
    /// Exact up to rounding when `phi` is quadratic on `[t, t + sign * step]`.
    fn one_sided(&self, t: S, step: S, sign: S) -> Result<S> {
        let p0 = self.phi(t)?;
        let d1 = (self.phi(t + sign * step)? - p0) / (sign * step);
        let half = step * S::lit(0.5);
        let d2 = (self.phi(t + sign * half)? - p0) / (sign * half);
        Ok(S::lit(2.0) * d2 - d1)
    }

    fn jump(&self, t: S, left_step: S, right_step: S) -> Result<S> {
        Ok(self.one_sided(t, right_step, S::one())? - self.one_sided(t, left_step, -S::one())?)
    }
}

/// Locates the kinks of `f` on the open segment `(x, y)` and measures their jumps.
///
/// Interior grid nodes are tested by comparing one-sided derivatives. Each
/// cell is tested for consistency with a single quadratic (trapezoid and
/// second-difference identities); inconsistent cells are bisected down to
/// `min_width`. Candidate sites are then re-measured with steps bounded by
/// the distance to neighbouring sites, and sites whose jump is below
/// `jump_tol` or the rounding floor are dropped.
pub fn scan_segment<S: Scalar>(
    f: &dyn Objective<S>,
    x: &Vector<S>,
    y: &Vector<S>,
    options: &ScanOptions<S>,
) -> Result<SegmentScan<S>> {
    if options.grid < 2 {
        return Err(Error::InvalidInput("scan grid must have at least 2 cells".into()));
    }
    x.check_dim(f.dim())?;
    y.check_dim(f.dim())?;
    let dir = y - x;
    let length = dir.norm(options.norm);
    if length == S::zero() {
        return Err(Error::InvalidInput("segment endpoints coincide".into()));
    }
    let line = Line { f, x, dir };
    let grid = options.grid;
    let w0 = S::one() / S::from_count(grid);
    let nodes: Vec<S> = (0..=grid).map(|i| S::from_count(i) * w0).collect();
    let values: Vec<S> = nodes.iter().map(|&t| line.phi(t)).collect::<Result<_>>()?;
    let scale = S::one() + values.iter().fold(S::zero(), |m, v| m.max(v.abs()));
    let eps = S::epsilon() * scale;
    let tiny = S::lit(1e-4);

    let mut sites: Vec<S> = Vec::new();
    let node_flag = |t: S, step: S| -> Result<bool> {
        let j = line.jump(t, step, step)?.abs();
        Ok(j > (options.jump_tol * length).max(S::lit(100.0) * eps / step))
    };

    for &t in &nodes[1..grid] {
        if node_flag(t, tiny.min(w0 * S::lit(0.25)))? {
            sites.push(t);
        }
    }

    let mut budget = 200_000usize;
    let mut stack: Vec<(S, S, S, S)> = (0..grid).map(|i| (nodes[i], nodes[i + 1], values[i], values[i + 1])).collect();
    while let Some((a, b, pa, pb)) = stack.pop() {
        if budget == 0 {
            break;
        }
        budget -= 1;
        let w = b - a;
        let m = a + w * S::lit(0.5);
        let pm = line.phi(m)?;
        let step = tiny.min(w * S::lit(0.25));
        let da = line.one_sided(a, step, S::one())?;
        let db = line.one_sided(b, step, -S::one())?;
        let trapezoid = (pb - pa - (da + db) * w * S::lit(0.5)).abs();
        let second = ((db - da) * w * S::lit(0.25) - (pa + pb - S::lit(2.0) * pm)).abs();
        let residual = trapezoid.max(second) / w;
        let noise = S::lit(100.0) * eps * (S::one() / w + S::one() / step);
        if residual <= (options.jump_tol * length * S::lit(0.125)).max(noise) {
            continue;
        }
        if w <= options.min_width {
            sites.push(m);
            continue;
        }
        if node_flag(m, w * S::lit(0.25))? {
            sites.push(m);
        }
        stack.push((a, m, pa, pm));
        stack.push((m, b, pm, pb));
    }

    sites.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sites.dedup_by(|a, b| (*a - *b).abs() <= options.min_width);
    sites.retain(|&t| t > S::zero() && t < S::one());

    // re-measure with steps that cannot reach a neighbouring site, dropping
    // sub-threshold sites until the set is stable
    let mut jumps: Vec<S> = Vec::new();
    for _ in 0..8 {
        jumps.clear();
        let mut keep = Vec::with_capacity(sites.len());
        for (i, &t) in sites.iter().enumerate() {
            let left = if i == 0 { t } else { t - sites[i - 1] };
            let right = if i + 1 == sites.len() { S::one() - t } else { sites[i + 1] - t };
            let (ls, rs) = (tiny.min(left * S::lit(0.25)), tiny.min(right * S::lit(0.25)));
            let j = line.jump(t, ls, rs)?.abs();
            let floor = S::lit(100.0) * eps / ls.min(rs);
            if j > (options.jump_tol * length).max(floor) {
                keep.push(t);
                jumps.push(j / length);
            }
        }
        let stable = keep.len() == sites.len();
        sites = keep;
        if stable {
            break;
        }
    }

    if sites.len() > options.max_kinks {
        let mut order: Vec<usize> = (0..sites.len()).collect();
        order.sort_by(|&a, &b| jumps[b].partial_cmp(&jumps[a]).unwrap().then(a.cmp(&b)));
        order.truncate(options.max_kinks);
        order.sort_unstable();
        sites = order.iter().map(|&i| sites[i]).collect();
        jumps = order.iter().map(|&i| jumps[i]).collect();
    }

    let s = f.smoothness();
    Ok(SegmentScan {
        x: x.clone(),
        y: y.clone(),
        kink_params: sites,
        jump_sizes: jumps,
        declared_l: s.lipschitz_gradient,
        declared_delta: s.jump_budget,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct InterpolationReport<S> {
    /// `|f(y) - f(x) - <g, y - x>| - (L/2 ||y - x||^2 + delta ||y - x||)`, minimized over `g`.
    pub residual: S,
    pub chosen_subgradient: Vector<S>,
    pub bound: S,
    pub tolerance: S,
    pub holds: bool,
}

/// Relative tolerance of [`check_interpolation`].
pub const INTERPOLATION_REL_TOL: f64 = 1e-8;

/// Checks the interpolation inequality at `(x, y)` for the declared `(L, delta)`.
///
/// The residual is affine in `g`, so its minimum over the subdifferential is
/// attained at an extreme point; a grid over each edge is searched as well.
pub fn check_interpolation<S: Scalar>(
    f: &dyn Objective<S>,
    x: &Vector<S>,
    y: &Vector<S>,
    l: S,
    delta: S,
    norm: NormKind,
) -> Result<InterpolationReport<S>> {
    let fx = f.value(x)?;
    let fy = f.value(y)?;
    let set = f.subdifferential(x)?;
    let step = y - x;
    let d = step.norm(norm);
    let bound = l * S::lit(0.5) * d * d + delta * d;
    let increment = fy - fx;
    let (residual, chosen_subgradient) = set
        .interpolation_candidates()
        .into_iter()
        .map(|g| ((increment - g.dot(&step)).abs() - bound, g))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .expect("subgradient sets are nonempty");
    let tolerance = S::lit(INTERPOLATION_REL_TOL) * (S::one() + fx.abs() + fy.abs() + bound);
    Ok(InterpolationReport { residual, chosen_subgradient, bound, tolerance, holds: residual <= tolerance })
}

/// Lower and upper quadratic models `f(x) + <g, y - x> -+ L/2 ||y - x||^2`
/// with `g` the minimal-norm subgradient at `x`.
pub fn quadratic_envelope<S: Scalar>(
    f: &dyn Objective<S>,
    x: &Vector<S>,
    y: &Vector<S>,
    l: S,
    norm: NormKind,
) -> Result<(S, S)> {
    let fx = f.value(x)?;
    let g = f.subdifferential(x)?.select(SelectionRule::MinDualNorm(norm));
    let step = y - x;
    let linear = fx + g.dot(&step);
    let d = step.norm(norm);
    let quad = l * S::lit(0.5) * d * d;
    Ok((linear - quad, linear + quad))
}

/// `f(x) + (max ||g||_* + delta) ||y - x|| + L/2 ||y - x||^2`, an upper bound on `f(y)`.
pub fn growth_upper_bound<S: Scalar>(
    f: &dyn Objective<S>,
    x: &Vector<S>,
    y: &Vector<S>,
    l: S,
    delta: S,
    norm: NormKind,
) -> Result<S> {
    let fx = f.value(x)?;
    let g_max = f.subdifferential(x)?.max_dual_norm(norm);
    let d = (y - x).norm(norm);
    Ok(fx + (g_max + delta) * d + l * S::lit(0.5) * d * d)
}
