//! Middle-(1-2λ) Cantor sets, finite-generation approximants, and the
//! self-similar probability measure, together with the distance, ball-mass
//! and neighbourhood-volume estimates the energy constructions rest on.
//!
//! All sets live on the unit interval `[-1/2, 1/2]`; product sets are
//! Cartesian powers of the one-dimensional construction.

use crate::error::{GapError, Result};
use serde::Serialize;

/// Default cap on the number of stored generation intervals (2^k per axis).
pub const DEFAULT_INTERVAL_CAP: usize = 1 << 22;

/// Tolerance used by distance queries when none is supplied explicitly.
pub const DEFAULT_DISTANCE_TOL: f64 = 1e-12;

/// Parameters of the product Cantor set `C_λ^m` truncated at a generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FractalParams {
    lambda: f64,
    m: usize,
    generation: u32,
}

impl FractalParams {
    pub fn new(lambda: f64, m: usize, generation: u32) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 0.5) {
            return Err(GapError::InvalidParameter(format!(
                "lambda must lie strictly in (0, 1/2), got {lambda}"
            )));
        }
        if m == 0 {
            return Err(GapError::InvalidParameter("m must be >= 1".into()));
        }
        if generation > 63 || (1usize << generation.min(63)) > DEFAULT_INTERVAL_CAP {
            return Err(GapError::ResourceLimit(format!(
                "generation {generation} exceeds the interval storage cap of {DEFAULT_INTERVAL_CAP}"
            )));
        }
        Ok(Self { lambda, m, generation })
    }

    /// Solve `dim = m log 2 / log(1/λ)` for λ.
    pub fn from_dimension(dim: f64, m: usize, generation: u32) -> Result<Self> {
        if !(dim > 0.0 && dim < m as f64) {
            return Err(GapError::InvalidParameter(format!(
                "dimension must lie in (0, {m}), got {dim}"
            )));
        }
        let lambda = 2f64.powf(-(m as f64) / dim);
        Self::new(lambda, m, generation)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    /// Fractal dimension `m log 2 / log(1/λ)`, always in `(0, m)`.
    pub fn dimension(&self) -> f64 {
        self.m as f64 * std::f64::consts::LN_2 / (1.0 / self.lambda).ln()
    }

    pub fn with_generation(&self, generation: u32) -> Result<Self> {
        Self::new(self.lambda, self.m, generation)
    }
}

/// Distance from a point on the line to the *limit* set `C_λ`.
///
/// Exact except when the query descends past intervals of length `tol`;
/// there the set is within `tol` of every point of the enclosing interval.
/// Generation endpoints report distance zero exactly.
pub fn distance_to_cantor(x: f64, params: &FractalParams, tol: f64) -> f64 {
    distance_to_limit_1d(x, params.lambda, tol.max(f64::MIN_POSITIVE))
}

fn distance_to_limit_1d(x: f64, lambda: f64, tol: f64) -> f64 {
    let mut a = -0.5f64;
    let mut b = 0.5f64;
    loop {
        if x <= a {
            return a - x;
        }
        if x >= b {
            return x - b;
        }
        let len = b - a;
        if len <= tol {
            // x sits inside an interval shorter than tol; the set fills it
            // to within tol, so 0 is an admissible answer.
            return 0.0;
        }
        let left_hi = a + lambda * len;
        let right_lo = b - lambda * len;
        if x <= left_hi {
            b = left_hi;
        } else if x >= right_lo {
            a = right_lo;
        } else {
            // In the open middle gap: both gap endpoints belong to the set.
            return (x - left_hi).min(right_lo - x);
        }
    }
}

/// Euclidean distance to the Cartesian product `C_λ^m`.
///
/// Exact for products of closed sets: the square distance is the sum of the
/// per-coordinate square distances.
pub fn distance_to_cantor_product(x: &[f64], params: &FractalParams, tol: f64) -> Result<f64> {
    if x.len() != params.m {
        return Err(GapError::DimensionMismatch { expected: params.m, got: x.len() });
    }
    let per_coord_tol = tol / (params.m as f64).sqrt();
    let sq: f64 = x
        .iter()
        .map(|&xi| {
            let d = distance_to_cantor(xi, params, per_coord_tol);
            d * d
        })
        .sum();
    Ok(sq.sqrt())
}

/// One generation of the middle-(1-2λ) construction: `2^k` closed intervals.
#[derive(Debug, Clone)]
pub struct CantorGeneration {
    intervals: Vec<[f64; 2]>,
    level: u32,
    lambda: f64,
}

/// Build the generation-`k` approximant `C_{λ,k}`.
pub fn build_generation(params: &FractalParams) -> Result<CantorGeneration> {
    let mut intervals = vec![[-0.5f64, 0.5f64]];
    for _ in 0..params.generation {
        if intervals.len() * 2 > DEFAULT_INTERVAL_CAP {
            return Err(GapError::ResourceLimit(format!(
                "interval storage cap of {DEFAULT_INTERVAL_CAP} reached"
            )));
        }
        let mut next = Vec::with_capacity(intervals.len() * 2);
        for [a, b] in &intervals {
            let len = b - a;
            next.push([*a, a + params.lambda * len]);
            next.push([b - params.lambda * len, *b]);
        }
        intervals = next;
    }
    Ok(CantorGeneration { intervals, level: params.generation, lambda: params.lambda })
}

impl CantorGeneration {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn intervals(&self) -> &[[f64; 2]] {
        &self.intervals
    }

    /// Exact interval length `λ^k` as constructed.
    pub fn interval_length(&self) -> f64 {
        let [a, b] = self.intervals[0];
        b - a
    }

    /// Exact distance from `x` to the union of the stored intervals.
    pub fn distance(&self, x: f64) -> f64 {
        let idx = self.intervals.partition_point(|iv| iv[1] < x);
        let mut best = f64::INFINITY;
        if idx < self.intervals.len() {
            let [a, b] = self.intervals[idx];
            best = best.min(if x < a { a - x } else if x > b { x - b } else { 0.0 });
        }
        if idx > 0 {
            let [a, b] = self.intervals[idx - 1];
            best = best.min(if x < a { a - x } else if x > b { x - b } else { 0.0 });
        }
        best
    }

    /// All interval endpoints (each belongs to the limit set).
    pub fn endpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.intervals.iter().flat_map(|iv| [iv[0], iv[1]])
    }

    pub fn midpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.intervals.iter().map(|iv| 0.5 * (iv[0] + iv[1]))
    }

    /// The open gaps between consecutive intervals, left to right.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.intervals.windows(2).map(|w| (w[0][1], w[1][0])).collect()
    }

    /// Total length of the union of the stored intervals fattened by `r`,
    /// intersected with the computation domain `[-2, 2]`.
    pub fn fattened_length(&self, r: f64) -> f64 {
        let mut total = 0.0;
        let mut cur: Option<[f64; 2]> = None;
        for [a, b] in &self.intervals {
            let lo = (a - r).max(-2.0);
            let hi = (b + r).min(2.0);
            match cur {
                Some([ca, cb]) if lo <= cb => cur = Some([ca, cb.max(hi)]),
                Some([ca, cb]) => {
                    total += cb - ca;
                    cur = Some([lo, hi]);
                }
                None => cur = Some([lo, hi]),
            }
        }
        if let Some([ca, cb]) = cur {
            total += cb - ca;
        }
        total
    }

    /// The union length as an exact piecewise-linear function of the
    /// fattening radius.
    pub fn union_length_fn(&self) -> UnionLength {
        let mut gaps: Vec<f64> = self.gaps().iter().map(|(a, b)| b - a).collect();
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut prefix = Vec::with_capacity(gaps.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for g in &gaps {
            acc += g;
            prefix.push(acc);
        }
        let set_len: f64 = self.intervals.iter().map(|iv| iv[1] - iv[0]).sum();
        UnionLength { gaps, prefix, set_len, n: self.intervals.len() }
    }
}

/// Exact length of the union of the fattened generation intervals,
/// `s ↦ |∪ [a_i - s, b_i + s] ∩ [-2, 2]|`, as a piecewise-linear function.
#[derive(Debug, Clone)]
pub struct UnionLength {
    gaps: Vec<f64>,
    prefix: Vec<f64>,
    set_len: f64,
    n: usize,
}

impl UnionLength {
    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return self.set_len;
        }
        // Count gaps already swallowed (g <= 2s) and subtract the overlap.
        let cnt = self.gaps.partition_point(|&g| g <= 2.0 * s);
        let overlap = 2.0 * s * cnt as f64 - self.prefix[cnt];
        let clip = 2.0 * (s - 1.5).max(0.0);
        self.set_len + 2.0 * self.n as f64 * s - overlap - clip
    }

    /// Radii at which the slope changes: half-gap widths and the domain clip.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut bps: Vec<f64> = self.gaps.iter().map(|g| 0.5 * g).collect();
        bps.push(1.5);
        bps.dedup();
        bps
    }

    /// Slope of the piecewise-linear function just above `s`.
    pub fn slope_at(&self, s: f64) -> f64 {
        let cnt = self.gaps.partition_point(|&g| g <= 2.0 * s);
        let clip = if s > 1.5 { 2.0 } else { 0.0 };
        2.0 * self.n as f64 - 2.0 * cnt as f64 - clip
    }
}

/// The uniform self-similar measure `μ_{λ,k}^m` at a finite generation:
/// `2^{mk}` product boxes of equal mass `2^{-mk}`, uniform density inside.
#[derive(Debug, Clone)]
pub struct CantorMeasure {
    axis: CantorGeneration,
    m: usize,
}

impl CantorMeasure {
    pub fn new(params: &FractalParams) -> Result<Self> {
        if params.m as u32 * params.generation > 26 {
            return Err(GapError::ResourceLimit(format!(
                "2^{} product boxes exceed the enumeration cap",
                params.m as u32 * params.generation
            )));
        }
        Ok(Self { axis: build_generation(params)?, m: params.m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn generation(&self) -> &CantorGeneration {
        &self.axis
    }

    /// Mass of each product box, `2^{-mk}` exactly.
    pub fn box_mass(&self) -> f64 {
        0.5f64.powi((self.m as u32 * self.axis.level) as i32)
    }

    /// Total mass: the compensated sum of all box masses.
    pub fn total_mass(&self) -> f64 {
        let n_boxes = self.axis.intervals.len().pow(self.m as u32);
        let mass = self.box_mass();
        let mut acc = KahanSum::default();
        for _ in 0..n_boxes {
            acc.add(mass);
        }
        acc.value()
    }

    /// Exact μ-mass of the closed Euclidean ball `B_r(center)`.
    ///
    /// Boxes are treated with uniform density `2^{-mk} / λ^{mk}`; overlaps are
    /// resolved by exact interval (m=1) or disc-box (m=2) geometry.
    pub fn measure_ball(&self, center: &[f64], r: f64) -> Result<f64> {
        if center.len() != self.m {
            return Err(GapError::DimensionMismatch { expected: self.m, got: center.len() });
        }
        if r < 0.0 {
            return Err(GapError::InvalidParameter("ball radius must be >= 0".into()));
        }
        match self.m {
            1 => {
                let lo = center[0] - r;
                let hi = center[0] + r;
                let density = self.box_mass() / self.axis.interval_length();
                let mut mass = 0.0;
                for [a, b] in self.axis.intervals() {
                    let ov = (hi.min(*b) - lo.max(*a)).max(0.0);
                    mass += ov * density;
                }
                Ok(mass.min(1.0))
            }
            2 => Ok(self.measure_disc_2d(center[0], center[1], r)),
            m => Err(GapError::InvalidParameter(format!(
                "measure_ball supports m <= 2, got {m}"
            ))),
        }
    }

    fn measure_disc_2d(&self, cx: f64, cy: f64, r: f64) -> f64 {
        // Recursive descent over the product construction with ball/box
        // pruning; exact disc-box overlap at the leaves.
        let k = self.axis.level;
        let lam = self.axis.lambda;
        let leaf_vol = self.axis.interval_length().powi(2);
        let density = self.box_mass() / leaf_vol;
        fn recurse(
            ax: [f64; 2],
            ay: [f64; 2],
            depth: u32,
            k: u32,
            lam: f64,
            cx: f64,
            cy: f64,
            r: f64,
            density: f64,
        ) -> f64 {
            // Min/max distance from the ball centre to the box.
            let dx_min = (ax[0] - cx).max(cx - ax[1]).max(0.0);
            let dy_min = (ay[0] - cy).max(cy - ay[1]).max(0.0);
            if dx_min * dx_min + dy_min * dy_min > r * r {
                return 0.0;
            }
            let dx_max = (cx - ax[0]).abs().max((cx - ax[1]).abs());
            let dy_max = (cy - ay[0]).abs().max((cy - ay[1]).abs());
            let fully_inside = dx_max * dx_max + dy_max * dy_max <= r * r;
            if depth == k {
                if fully_inside {
                    return (ax[1] - ax[0]) * (ay[1] - ay[0]) * density;
                }
                return disc_box_overlap(cx, cy, r, ax, ay) * density;
            }
            if fully_inside {
                // Mass of the measure inside this box at generation `depth`.
                return 0.25f64.powi(depth as i32);
            }
            let mut total = 0.0;
            for sub_x in split(ax, lam) {
                for sub_y in split(ay, lam) {
                    total += recurse(sub_x, sub_y, depth + 1, k, lam, cx, cy, r, density);
                }
            }
            total
        }
        fn split(iv: [f64; 2], lam: f64) -> [[f64; 2]; 2] {
            let len = iv[1] - iv[0];
            [[iv[0], iv[0] + lam * len], [iv[1] - lam * len, iv[1]]]
        }
        recurse([-0.5, 0.5], [-0.5, 0.5], 0, k, lam, cx, cy, r, density)
    }

    /// Midpoint-rule integral of `f` against the measure: the sum of
    /// `2^{-mk} f(box midpoint)` over all product boxes.
    pub fn integrate(&self, f: &dyn Fn(&[f64]) -> f64) -> f64 {
        let mass = self.box_mass();
        let mids: Vec<f64> = self.axis.midpoints().collect();
        let mut point = vec![0.0; self.m];
        let mut acc = KahanSum::default();
        let mut index = vec![0usize; self.m];
        loop {
            for (dim, &i) in index.iter().enumerate() {
                point[dim] = mids[i];
            }
            acc.add(mass * f(&point));
            // Odometer increment over the product boxes.
            let mut dim = 0;
            loop {
                if dim == self.m {
                    return acc.value();
                }
                index[dim] += 1;
                if index[dim] < mids.len() {
                    break;
                }
                index[dim] = 0;
                dim += 1;
            }
        }
    }
}

/// Lebesgue measure of the r-neighbourhood of `C_{λ,k}^m` (Euclidean),
/// clipped to the computation domain `[-2, 2]^m`. Supports m <= 2.
pub fn neighborhood_volume(r: f64, params: &FractalParams) -> Result<f64> {
    if r <= 0.0 {
        return Err(GapError::InvalidParameter("radius must be > 0".into()));
    }
    let gen = build_generation(params)?;
    match params.m {
        1 => Ok(gen.fattened_length(r)),
        2 => Ok(neighborhood_volume_2d(r, &gen)),
        m => Err(GapError::InvalidParameter(format!(
            "neighborhood_volume supports m <= 2, got {m}"
        ))),
    }
}

/// vol{(x,y): d1(x)^2 + d2(y)^2 <= r^2} computed by integrating the exact
/// union length of the y-sections over the piecewise-linear distance d1.
fn neighborhood_volume_2d(r: f64, gen: &CantorGeneration) -> f64 {
    // Segments of [-2,2] on which x ↦ d(x, C_{λ,k}) is linear with slope
    // in {-1, 0, +1}: inside intervals (d=0), gap halves, outer rays.
    // On each, substitute u = d(x) and integrate U(sqrt(r^2-u^2)) du exactly
    // against the piecewise-linear union-length function U.
    let union = gen.union_length_fn();
    let bps = union.breakpoints();
    let mut vol = KahanSum::default();

    // d == 0 on the intervals themselves: section length U(r).
    let set_len: f64 = gen.intervals().iter().map(|iv| iv[1] - iv[0]).sum();
    vol.add(set_len * union.eval(r));

    // Sloped pieces as u-ranges (|dx/du| = 1): two per gap, two outer rays.
    let mut u_ranges: Vec<f64> = Vec::new();
    for (a, b) in gen.gaps() {
        let half = 0.5 * (b - a);
        u_ranges.push(half.min(r));
        u_ranges.push(half.min(r));
    }
    u_ranges.push(1.5f64.min(r));
    u_ranges.push(1.5f64.min(r));

    // Shared cut set: u where s = sqrt(r^2-u^2) crosses a breakpoint of U.
    let mut all_cuts: Vec<f64> = bps
        .iter()
        .filter(|&&bp| bp < r)
        .map(|&bp| (r * r - bp * bp).sqrt())
        .collect();
    all_cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());

    for u1 in u_ranges {
        if u1 <= 0.0 {
            continue;
        }
        let mut cuts: Vec<f64> = vec![0.0];
        cuts.extend(all_cuts.iter().copied().filter(|&c| c > 0.0 && c < u1));
        cuts.push(u1);
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi - lo < 1e-15 {
                continue;
            }
            // On this piece U(s) = c0 + c1 * s.
            let s_mid = (r * r - (0.5 * (lo + hi)).powi(2)).max(0.0).sqrt();
            let c1 = union.slope_at(s_mid);
            let c0 = union.eval(s_mid) - c1 * s_mid;
            // ∫ (c0 + c1 sqrt(r^2-u^2)) du in closed form.
            let anti = |u: f64| {
                let s = (r * r - u * u).max(0.0).sqrt();
                c0 * u + c1 * 0.5 * (u * s + r * r * (u / r).clamp(-1.0, 1.0).asin())
            };
            vol.add(anti(hi) - anti(lo));
        }
    }
    vol.value()
}

/// Exact area of `disc(c, r) ∩ [x0,x1]×[y0,y1]`.
pub fn disc_box_overlap(cx: f64, cy: f64, r: f64, bx: [f64; 2], by: [f64; 2]) -> f64 {
    // Shift the disc to the origin.
    let (x0, x1) = (bx[0] - cx, bx[1] - cx);
    let (y0, y1) = (by[0] - cy, by[1] - cy);
    let lo = x0.max(-r);
    let hi = x1.min(r);
    if hi <= lo || y0 >= r || y1 <= -r {
        return 0.0;
    }
    // Breakpoints where the section formula changes.
    let mut cuts = vec![lo, hi];
    for y in [y0, y1] {
        if y.abs() < r {
            let x_star = (r * r - y * y).sqrt();
            for c in [-x_star, x_star] {
                if c > lo && c < hi {
                    cuts.push(c);
                }
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Antiderivative of h(x) = sqrt(r^2 - x^2).
    let anti_h = |x: f64| {
        let s = (r * r - x * x).max(0.0).sqrt();
        0.5 * (x * s + r * r * (x / r).clamp(-1.0, 1.0).asin())
    };
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-300 {
            continue;
        }
        let xm = 0.5 * (a + b);
        let h = (r * r - xm * xm).max(0.0).sqrt();
        let top = y1.min(h);
        let bot = y0.max(-h);
        if top <= bot {
            continue;
        }
        // Identify which of {const, ±h} bound this piece and integrate exactly.
        let top_is_h = h < y1;
        let bot_is_h = -h > y0;
        let mut piece = 0.0;
        piece += if top_is_h { anti_h(b) - anti_h(a) } else { y1 * (b - a) };
        piece -= if bot_is_h { -(anti_h(b) - anti_h(a)) } else { y0 * (b - a) };
        area += piece;
    }
    area
}

/// Compensated (Kahan) accumulator used for all deterministic reductions.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn add(&mut self, value: f64) {
        let y = value - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Least-squares slope of `log2(value)` against `log2(x)`; used by the
/// scaling regressions.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.log2(), y.log2()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: f64, m: usize, k: u32) -> FractalParams {
        FractalParams::new(lambda, m, k).unwrap()
    }

    #[test]
    fn rejects_degenerate_lambda() {
        assert!(FractalParams::new(0.0, 1, 4).is_err());
        assert!(FractalParams::new(0.5, 1, 4).is_err());
        assert!(FractalParams::new(0.6, 1, 4).is_err());
        assert!(FractalParams::new(-0.1, 1, 4).is_err());
    }

    #[test]
    fn rejects_oversized_generation() {
        assert!(FractalParams::new(1.0 / 3.0, 1, 40).is_err());
    }

    #[test]
    fn generation_base_case() {
        let gen = build_generation(&params(1.0 / 3.0, 1, 0)).unwrap();
        assert_eq!(gen.intervals(), &[[-0.5, 0.5]]);
    }

    #[test]
    fn generation_first_subdivision_third() {
        let gen = build_generation(&params(1.0 / 3.0, 1, 1)).unwrap();
        assert_eq!(gen.intervals().len(), 2);
        let [a0, b0] = gen.intervals()[0];
        let [a1, b1] = gen.intervals()[1];
        assert!((a0 + 0.5).abs() < 1e-15 && (b0 + 1.0 / 6.0).abs() < 1e-15);
        assert!((a1 - 1.0 / 6.0).abs() < 1e-15 && (b1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn generation_two_levels_quarter() {
        let gen = build_generation(&params(0.25, 1, 2)).unwrap();
        assert_eq!(gen.intervals().len(), 4);
        for iv in gen.intervals() {
            assert!((iv[1] - iv[0] - 1.0 / 16.0).abs() < 1e-15);
        }
        assert_eq!(gen.intervals()[0], [-0.5, -7.0 / 16.0]);
    }

    #[test]
    fn generation_is_symmetric_and_nested() {
        for lambda in [1.0 / 3.0, 0.25, 0.4] {
            let coarse = build_generation(&params(lambda, 1, 5)).unwrap();
            let fine = build_generation(&params(lambda, 1, 6)).unwrap();
            // symmetry under x -> -x
            let n = coarse.intervals().len();
            for (i, iv) in coarse.intervals().iter().enumerate() {
                let mirror = coarse.intervals()[n - 1 - i];
                assert!((iv[0] + mirror[1]).abs() < 1e-14);
                assert!((iv[1] + mirror[0]).abs() < 1e-14);
            }
            // nesting: every fine interval inside one coarse interval
            for f in fine.intervals() {
                assert!(
                    coarse
                        .intervals()
                        .iter()
                        .any(|c| c[0] <= f[0] + 1e-15 && f[1] <= c[1] + 1e-15),
                    "fine interval {f:?} not nested"
                );
            }
            // endpoints persist into the next generation
            for e in coarse.endpoints() {
                assert!(
                    fine.endpoints().any(|fe| (fe - e).abs() < 1e-14),
                    "endpoint {e} lost at the next generation"
                );
            }
        }
    }

    #[test]
    fn dimension_values() {
        assert!((params(0.25, 1, 0).dimension() - 0.5).abs() < 1e-15);
        let d2 = params(1.0 / 3.0, 2, 0).dimension();
        assert!((d2 - 2.0 * std::f64::consts::LN_2 / 3f64.ln()).abs() < 1e-14);
        assert!((d2 - 1.2618595071429148).abs() < 1e-12);
        // λ → 1/2⁻ pushes the dimension to m
        assert!((params(0.4999999, 1, 0).dimension() - 1.0).abs() < 1e-6);
        let p = FractalParams::from_dimension(0.5, 1, 0).unwrap();
        assert!((p.lambda() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn distance_examples() {
        let p = params(1.0 / 3.0, 1, 0);
        assert_eq!(distance_to_cantor(0.5, &p, 1e-12), 0.0);
        assert!((distance_to_cantor(0.7, &p, 1e-12) - 0.2).abs() < 1e-15);
        assert!((distance_to_cantor(0.0, &p, 1e-12) - 1.0 / 6.0).abs() < 1e-15);
        // computed generation endpoints are exact zeros of the distance
        let gen = build_generation(&params(1.0 / 3.0, 1, 3)).unwrap();
        for e in gen.endpoints() {
            assert_eq!(distance_to_cantor(e, &p, 1e-12), 0.0, "endpoint {e}");
        }
        // the unrepresentable real endpoint 1/6 is off by at most one ulp
        assert!(distance_to_cantor(1.0 / 6.0, &p, 1e-12).abs() < 1e-15);
    }

    #[test]
    fn distance_matches_brute_force_endpoints() {
        for lambda in [1.0 / 3.0, 0.25] {
            let p = params(lambda, 1, 10);
            let gen = build_generation(&p).unwrap();
            let endpoints: Vec<f64> = gen.endpoints().collect();
            let tol = gen.interval_length();
            for i in 0..200 {
                let x = -0.9 + 1.8 * (i as f64) / 199.0;
                let brute = endpoints.iter().map(|e| (x - e).abs()).fold(f64::INFINITY, f64::min);
                let fast = distance_to_cantor(x, &p, 1e-14);
                assert!(
                    (brute - fast).abs() <= tol,
                    "x={x}: brute={brute}, fast={fast}"
                );
            }
        }
    }

    #[test]
    fn product_distance() {
        let p = params(1.0 / 3.0, 2, 0);
        assert_eq!(distance_to_cantor_product(&[0.5, 0.5], &p, 1e-12).unwrap(), 0.0);
        let d = distance_to_cantor_product(&[0.0, 0.0], &p, 1e-12).unwrap();
        assert!((d - 2f64.sqrt() / 6.0).abs() < 1e-12);
        let p1 = params(1.0 / 3.0, 2, 0);
        let d2 = distance_to_cantor_product(&[0.7, 0.5], &p1, 1e-12).unwrap();
        assert!((d2 - 0.2).abs() < 1e-12);
        assert!(distance_to_cantor_product(&[0.0], &p, 1e-12).is_err());
    }

    #[test]
    fn measure_total_mass_is_one() {
        for lambda in [1.0 / 3.0, 0.25] {
            for m in [1usize, 2] {
                for k in [0u32, 3, 8, 12] {
                    if m == 2 && k > 10 {
                        continue;
                    }
                    let mu = CantorMeasure::new(&params(lambda, m, k)).unwrap();
                    assert!(
                        (mu.total_mass() - 1.0).abs() <= 1e-12,
                        "mass off at λ={lambda}, m={m}, k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn measure_ball_gap_is_empty() {
        for k in [1u32, 4, 8] {
            let mu = CantorMeasure::new(&params(1.0 / 3.0, 1, k)).unwrap();
            assert_eq!(mu.measure_ball(&[0.0], 1.0 / 6.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn measure_ball_rightmost_interval() {
        for k in [2u32, 3, 6] {
            let mu = CantorMeasure::new(&params(1.0 / 3.0, 1, k)).unwrap();
            let mass = mu.measure_ball(&[0.5], 1.0 / 9.0).unwrap();
            assert!((mass - 0.25).abs() < 1e-14, "k={k}: {mass}");
        }
    }

    #[test]
    fn measure_ball_covers_everything() {
        let mu = CantorMeasure::new(&params(1.0 / 3.0, 1, 6)).unwrap();
        assert!((mu.measure_ball(&[0.3], 2.0).unwrap() - 1.0).abs() < 1e-12);
        let mu2 = CantorMeasure::new(&params(0.25, 2, 5)).unwrap();
        assert!((mu2.measure_ball(&[0.1, -0.2], 2.0).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn measure_ball_zero_when_far() {
        // μ(B_r(x)) = 0 whenever dist(x, C_{λ,k}) > r.
        let p = params(1.0 / 3.0, 1, 8);
        let mu = CantorMeasure::new(&p).unwrap();
        let gen = mu.generation().clone();
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..200 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let r = ((state >> 11) as f64 / (1u64 << 53) as f64) * 0.3;
            let d = gen.distance(x);
            if d > r + 1e-12 {
                assert_eq!(mu.measure_ball(&[x], r).unwrap(), 0.0, "x={x}, r={r}, d={d}");
            }
        }
    }

    #[test]
    fn disc_box_overlap_basics() {
        // disc inside box
        let a = disc_box_overlap(0.0, 0.0, 1.0, [-2.0, 2.0], [-2.0, 2.0]);
        assert!((a - std::f64::consts::PI).abs() < 1e-12);
        // box inside disc
        let b = disc_box_overlap(0.0, 0.0, 10.0, [0.0, 1.0], [0.0, 2.0]);
        assert!((b - 2.0).abs() < 1e-12);
        // half disc
        let c = disc_box_overlap(0.0, 0.0, 1.0, [0.0, 5.0], [-5.0, 5.0]);
        assert!((c - std::f64::consts::PI / 2.0).abs() < 1e-12);
        // quarter disc
        let d = disc_box_overlap(0.0, 0.0, 1.0, [0.0, 5.0], [0.0, 5.0]);
        assert!((d - std::f64::consts::PI / 4.0).abs() < 1e-12);
        // disjoint
        assert_eq!(disc_box_overlap(0.0, 0.0, 1.0, [2.0, 3.0], [2.0, 3.0]), 0.0);
    }

    #[test]
    fn disc_box_overlap_matches_grid_oracle() {
        // brute-force pixel counting oracle on an awkward configuration
        let (cx, cy, r) = (0.13, -0.21, 0.57);
        let bx = [-0.1, 0.62];
        let by = [-0.55, 0.05];
        let n = 4000;
        let (dx, dy) = ((bx[1] - bx[0]) / n as f64, (by[1] - by[0]) / n as f64);
        let mut count = 0u64;
        for i in 0..n {
            for j in 0..n {
                let x = bx[0] + (i as f64 + 0.5) * dx;
                let y = by[0] + (j as f64 + 0.5) * dy;
                if (x - cx).powi(2) + (y - cy).powi(2) <= r * r {
                    count += 1;
                }
            }
        }
        let brute = count as f64 * dx * dy;
        let exact = disc_box_overlap(cx, cy, r, bx, by);
        assert!((brute - exact).abs() < 5e-4, "brute={brute}, exact={exact}");
    }

    #[test]
    fn measure_ball_endpoint_scaling() {
        // log-log slope of r ↦ μ(B_r(x)) at set points approaches D.
        for lambda in [1.0 / 3.0, 0.25] {
            let p = params(lambda, 1, 12);
            let d_frac = p.dimension();
            let mu = CantorMeasure::new(&p).unwrap();
            let gen = build_generation(&p).unwrap();
            let endpoints: Vec<f64> = gen.endpoints().collect();
            for &x in [endpoints[0], endpoints[endpoints.len() / 3], endpoints[7]].iter() {
                let r0 = gen.interval_length();
                let mut pts = Vec::new();
                let mut r = r0;
                while r <= 1.0 {
                    pts.push((r, mu.measure_ball(&[x], r).unwrap()));
                    r *= 2.0;
                }
                let slope = loglog_slope(&pts);
                assert!(
                    (slope - d_frac).abs() < 0.05,
                    "λ={lambda}, x={x}: slope {slope} vs D {d_frac}"
                );
            }
        }
    }

    #[test]
    fn neighborhood_volume_examples() {
        let p = params(1.0 / 3.0, 1, 6);
        // hull fattening: 1 + 2r for moderate r >= 1
        let v = neighborhood_volume(1.0, &p).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
        // clipped at the computation domain [-2, 2]
        let v_clip = neighborhood_volume(10.0, &p).unwrap();
        assert!((v_clip - 4.0).abs() < 1e-12);
        // r = λ^k/2: disjoint fattened boxes of length 2 λ^k each
        for k in [3u32, 5] {
            let pk = params(1.0 / 3.0, 1, k);
            let lk = (1.0f64 / 3.0).powi(k as i32);
            let v = neighborhood_volume(lk / 2.0, &pk).unwrap();
            let expect = 2f64.powi(k as i32) * 2.0 * lk;
            assert!((v - expect).abs() < 1e-12, "k={k}: {v} vs {expect}");
        }
    }

    #[test]
    fn neighborhood_volume_scaling_slope() {
        for (lambda, m) in [(1.0 / 3.0, 1usize), (0.25, 1), (1.0 / 3.0, 2)] {
            let k = if m == 1 { 12 } else { 9 };
            let p = params(lambda, m, k);
            let d_frac = p.dimension();
            let mut pts = Vec::new();
            let mut j = 1;
            while j < k {
                let r = lambda.powi(j as i32);
                pts.push((r, neighborhood_volume(r, &p).unwrap()));
                j += 1;
            }
            let slope = loglog_slope(&pts);
            assert!(
                (slope - (m as f64 - d_frac)).abs() < 0.1,
                "λ={lambda}, m={m}: slope {slope} vs {}",
                m as f64 - d_frac
            );
        }
    }

    #[test]
    fn integrate_normalization_and_symmetry() {
        let mu = CantorMeasure::new(&params(1.0 / 3.0, 1, 8)).unwrap();
        assert!((mu.integrate(&|_| 1.0) - 1.0).abs() < 1e-12);
        assert!(mu.integrate(&|x| x[0]).abs() < 1e-13);
        let mu2 = CantorMeasure::new(&params(0.3, 2, 6)).unwrap();
        assert!((mu2.integrate(&|_| 1.0) - 1.0).abs() < 1e-11);
        assert!(mu2.integrate(&|x| x[0] * x[1] * x[1]).abs() < 1e-12);
    }

    #[test]
    fn integrate_second_moment_fixed_point() {
        // Self-similarity fixed point: M2 = λ² M2 + ((1-λ)/2)², i.e.
        // M2 = (1-λ) / (4 (1+λ)); independent of the quadrature path.
        for lambda in [1.0 / 3.0, 0.25, 0.4] {
            let k = 8u32;
            let mu = CantorMeasure::new(&params(lambda, 1, k)).unwrap();
            let m2 = mu.integrate(&|x| x[0] * x[0]);
            let exact = (1.0 - lambda) / (4.0 * (1.0 + lambda));
            // midpoint rule error is bounded by the f-modulus at scale λ^k
            let tol = lambda.powi(k as i32);
            assert!(
                (m2 - exact).abs() < tol,
                "λ={lambda}: quadrature {m2} vs fixed point {exact}"
            );
        }
        // frozen oracle value for the spec's λ=1/3 case
        let mu = CantorMeasure::new(&params(1.0 / 3.0, 1, 8)).unwrap();
        assert!((mu.integrate(&|x| x[0] * x[0]) - 0.125).abs() < 2e-4);
    }
}
