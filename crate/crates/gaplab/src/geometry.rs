//! Barrier sets, cones, the Cantor necklace, and the smooth cutoff
//! functions shared by the competitor and weight constructions.
//!
//! Points are slices `x = (x̄, x_d)` with `x̄ = x[..d-1]` and `x_d` the last
//! coordinate. In the transverse orientation the fractal lives in the first
//! `d-1` coordinates (product set, `m = d-1`); in the axial orientation a
//! one-dimensional Cantor set sits on the `x_d`-axis and `x̄` is transverse.

use crate::error::{GapError, Result};
use crate::fractal::{build_generation, distance_to_cantor, CantorGeneration, FractalParams};

pub const DIST_TOL: f64 = 1e-12;

/// C¹ transition profile: 1 below `r0`, 0 above `r1`, cubic smoothstep in
/// between. `|ψ'| <= 1.5/(r1-r0) <= 2/(r1-r0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    pub r0: f64,
    pub r1: f64,
}

impl CutoffSpec {
    pub fn new(r0: f64, r1: f64) -> Result<Self> {
        if !(r0.is_finite() && r1.is_finite() && r0 < r1) {
            return Err(GapError::InvalidParameter(format!(
                "cutoff thresholds must satisfy r0 < r1, got ({r0}, {r1})"
            )));
        }
        Ok(Self { r0, r1 })
    }

    /// The competitor cutoff ρ: 1 on {ratio <= 2}, 0 on {ratio >= 4}.
    pub fn rho() -> Self {
        Self { r0: 2.0, r1: 4.0 }
    }

    /// The one-sided weight cutoffs ρ±: 1 on {ratio <= 1/2}, 0 on {ratio >= 2}.
    pub fn rho_pm() -> Self {
        Self { r0: 0.5, r1: 2.0 }
    }

    pub fn eval(&self, ratio: f64) -> f64 {
        let u = (ratio - self.r0) / (self.r1 - self.r0);
        if u <= 0.0 {
            1.0
        } else if u >= 1.0 {
            0.0
        } else {
            1.0 - u * u * (3.0 - 2.0 * u)
        }
    }

    /// dψ/dratio; zero outside the transition band.
    pub fn derivative(&self, ratio: f64) -> f64 {
        let w = self.r1 - self.r0;
        let u = (ratio - self.r0) / w;
        if u <= 0.0 || u >= 1.0 {
            0.0
        } else {
            -6.0 * u * (1.0 - u) / w
        }
    }
}

/// Which side of the barrier a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierClass {
    MPlus,
    MMinus,
    Outside,
}

/// How the fractal sits in the ambient space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Fractal `C^{d-1}` in the first d-1 coordinates (subcritical setup).
    Transverse,
    /// Fractal `C^1` on the x_d-axis (supercritical setup).
    Axial,
}

/// Barrier geometry `M_τ^±` over a fractal trace.
#[derive(Debug, Clone)]
pub struct BarrierGeometry {
    fractal: FractalParams,
    tau: f64,
    d: usize,
    orientation: Orientation,
}

impl BarrierGeometry {
    pub fn transverse(fractal: FractalParams, tau: f64, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(GapError::InvalidParameter("ambient dimension must be >= 2".into()));
        }
        if fractal.m() != d - 1 {
            return Err(GapError::DimensionMismatch { expected: d - 1, got: fractal.m() });
        }
        if tau <= 0.0 {
            return Err(GapError::InvalidParameter("tau must be > 0".into()));
        }
        Ok(Self { fractal, tau, d, orientation: Orientation::Transverse })
    }

    pub fn axial(fractal: FractalParams, tau: f64, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(GapError::InvalidParameter("ambient dimension must be >= 2".into()));
        }
        if fractal.m() != 1 {
            return Err(GapError::DimensionMismatch { expected: 1, got: fractal.m() });
        }
        if tau <= 0.0 {
            return Err(GapError::InvalidParameter("tau must be > 0".into()));
        }
        Ok(Self { fractal, tau, d, orientation: Orientation::Axial })
    }

    pub fn fractal(&self) -> &FractalParams {
        &self.fractal
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        Self { tau, ..self.clone() }
    }

    /// Distance from the appropriate trace coordinate(s) to the fractal:
    /// `dis(x̄, C^{d-1})` transverse, `dis(x_d, C)` axial.
    pub fn trace_distance(&self, x: &[f64]) -> f64 {
        match self.orientation {
            Orientation::Transverse => {
                let xbar = &x[..self.d - 1];
                let per = DIST_TOL / (self.fractal.m() as f64).sqrt();
                let sq: f64 = xbar
                    .iter()
                    .map(|&t| {
                        let dd = distance_to_cantor(t, &self.fractal, per);
                        dd * dd
                    })
                    .sum();
                sq.sqrt()
            }
            Orientation::Axial => distance_to_cantor(x[self.d - 1], &self.fractal, DIST_TOL),
        }
    }

    /// The complementary coordinate scale: `|x_d|` transverse, `|x̄|` axial.
    pub fn height(&self, x: &[f64]) -> f64 {
        match self.orientation {
            Orientation::Transverse => x[self.d - 1].abs(),
            Orientation::Axial => {
                x[..self.d - 1].iter().map(|t| t * t).sum::<f64>().sqrt()
            }
        }
    }

    /// Membership in `M_τ^+ / M_τ^- / outside` (points of Ω only).
    pub fn in_barrier(&self, x: &[f64]) -> BarrierClass {
        if x.len() != self.d || x.iter().any(|t| t.abs() >= 1.0) {
            return BarrierClass::Outside;
        }
        let dis = self.trace_distance(x);
        let h = self.height(x);
        if h == 0.0 || dis > self.tau * h {
            return BarrierClass::Outside;
        }
        if x[self.d - 1] > 0.0 {
            BarrierClass::MPlus
        } else if x[self.d - 1] < 0.0 {
            BarrierClass::MMinus
        } else {
            BarrierClass::Outside
        }
    }

    /// Distance together with its a.e. gradient with respect to the trace
    /// coordinates (unit vector toward the far side of the nearest point).
    pub fn trace_distance_with_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        match self.orientation {
            Orientation::Transverse => {
                let xbar = &x[..self.d - 1];
                let per = DIST_TOL / (self.fractal.m() as f64).sqrt();
                let mut sq = 0.0;
                let mut comps = [0.0f64; 8];
                for (i, &t) in xbar.iter().enumerate() {
                    let (dd, sgn) = distance_and_sign_1d(t, &self.fractal, per);
                    comps[i] = dd * sgn;
                    sq += dd * dd;
                }
                let dis = sq.sqrt();
                for (i, g) in grad.iter_mut().enumerate().take(xbar.len()) {
                    *g = if dis > 0.0 { comps[i] / dis } else { 0.0 };
                }
                dis
            }
            Orientation::Axial => {
                let (dd, sgn) = distance_and_sign_1d(x[self.d - 1], &self.fractal, DIST_TOL);
                grad[0] = sgn;
                dd
            }
        }
    }
}

/// 1-D distance to the limit set together with the derivative sign
/// (+1 if the nearest set point lies to the left of x).
fn distance_and_sign_1d(x: f64, params: &FractalParams, tol: f64) -> (f64, f64) {
    let lambda = params.lambda();
    let mut a = -0.5f64;
    let mut b = 0.5f64;
    loop {
        if x <= a {
            return (a - x, -1.0);
        }
        if x >= b {
            return (x - b, 1.0);
        }
        let len = b - a;
        if len <= tol {
            return (0.0, 0.0);
        }
        let left_hi = a + lambda * len;
        let right_lo = b - lambda * len;
        if x <= left_hi {
            b = left_hi;
        } else if x >= right_lo {
            a = right_lo;
        } else {
            let dl = x - left_hi;
            let dr = right_lo - x;
            return if dl <= dr { (dl, 1.0) } else { (dr, -1.0) };
        }
    }
}

/// ρ cutoff of the competitor: ψ(dis(x̄,C)/|x_d|) with thresholds (2, 4).
///
/// Signals a singular input on the apex set `S = C^{d-1} × {0}`.
pub fn eval_rho(x: &[f64], geom: &BarrierGeometry, cutoff: &CutoffSpec) -> Result<f64> {
    let dis = geom.trace_distance(x);
    let h = geom.height(x);
    if h == 0.0 {
        if dis == 0.0 {
            return Err(GapError::SingularInput(format!("point {x:?} lies on the apex set")));
        }
        return Ok(0.0);
    }
    Ok(cutoff.eval(dis / h))
}

/// One-sided cutoffs ρ± with thresholds (1/2, 2); zero on the wrong
/// half-space (no error on the apex set).
pub fn eval_rho_pm(x: &[f64], geom: &BarrierGeometry, positive_side: bool) -> f64 {
    let xd = x[x.len() - 1];
    if (positive_side && xd <= 0.0) || (!positive_side && xd >= 0.0) {
        return 0.0;
    }
    let dis = geom.trace_distance(x);
    CutoffSpec::rho_pm().eval(dis / xd.abs())
}

/// Per-axis profile of the boundary cutoff η: 1 on |t| <= 4/6, 0 on |t| >= 5/6.
pub fn eta_axis(t: f64) -> f64 {
    CutoffSpec { r0: 4.0 / 6.0, r1: 5.0 / 6.0 }.eval(t.abs())
}

/// Separable cutoff η: product of the per-axis profiles.
pub fn eval_eta(x: &[f64]) -> f64 {
    x.iter().map(|&t| eta_axis(t)).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeOrientation {
    Up,
    Down,
    Both,
}

/// Cone `K = {w : |w̄| <= opening * w_d, 0 < w_d <= extent}` and variants.
#[derive(Debug, Clone, Copy)]
pub struct ConeSpec {
    pub opening: f64,
    pub extent: f64,
    pub orientation: ConeOrientation,
}

impl ConeSpec {
    pub fn standard(orientation: ConeOrientation) -> Self {
        Self { opening: 0.25, extent: 2.0, orientation }
    }

    /// Is `y - x` inside the cone anchored at `x`?
    pub fn contains(&self, x: &[f64], y: &[f64]) -> bool {
        let d = x.len();
        let wd = y[d - 1] - x[d - 1];
        let axial = match self.orientation {
            ConeOrientation::Up => {
                if wd <= 0.0 || wd > self.extent {
                    return false;
                }
                wd
            }
            ConeOrientation::Down => {
                if wd >= 0.0 || -wd > self.extent {
                    return false;
                }
                -wd
            }
            ConeOrientation::Both => {
                if wd == 0.0 || wd.abs() > self.extent {
                    return false;
                }
                wd.abs()
            }
        };
        let trans_sq: f64 = (0..d - 1).map(|i| (y[i] - x[i]).powi(2)).sum();
        trans_sq.sqrt() <= self.opening * axial
    }

    /// The dyadic slab `K_j = {w in K : 2^{-j} <= w_d <= 2^{-j+1}}`.
    pub fn slab(&self, j: i32) -> (f64, f64) {
        (2f64.powi(-j), 2f64.powi(-j + 1))
    }
}

/// One diamond element of the Cantor necklace over a removed gap.
#[derive(Debug, Clone, PartialEq)]
pub struct NecklaceElement {
    pub level: i32,
    pub index: usize,
    pub gap: (f64, f64),
}

impl NecklaceElement {
    /// Vertex at the top of the gap: `(0, …, 0, b)`.
    pub fn upper_vertex(&self, d: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[d - 1] = self.gap.1;
        v
    }

    /// Vertex at the bottom of the gap: `(0, …, 0, a)`.
    pub fn lower_vertex(&self, d: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[d - 1] = self.gap.0;
        v
    }

    /// Diamond body: `|x̄| <= 1/4 * min(x_d - a, b - x_d)` (open in x_d).
    pub fn contains(&self, x: &[f64]) -> bool {
        let d = x.len();
        let xd = x[d - 1];
        if xd <= self.gap.0 || xd >= self.gap.1 {
            return false;
        }
        let reach = 0.25 * (xd - self.gap.0).min(self.gap.1 - xd);
        let trans_sq: f64 = (0..d - 1).map(|i| x[i] * x[i]).sum();
        trans_sq.sqrt() < reach
    }

    pub fn diameter(&self) -> f64 {
        self.gap.1 - self.gap.0
    }
}

/// Enumerate the necklace elements down to `max_level`, topmost index first
/// per level. Level -1 holds the two outer rays toward ±1 as half-diamonds
/// (gaps (1/2, 3/2) and (-3/2, -1/2)) so vertex chains reach the boundary.
pub fn necklace_enumerate(lambda: f64, max_level: i32) -> Result<Vec<NecklaceElement>> {
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(GapError::InvalidParameter(format!("lambda out of range: {lambda}")));
    }
    let mut out = vec![
        NecklaceElement { level: -1, index: 1, gap: (0.5, 1.5) },
        NecklaceElement { level: -1, index: 2, gap: (-1.5, -0.5) },
    ];
    if max_level < 0 {
        return Ok(out);
    }
    let params = FractalParams::new(lambda, 1, max_level as u32)?;
    let mut gen = build_generation(&params.with_generation(0)?)?;
    for level in 0..=max_level {
        // Each generation-`level` interval contributes its removed middle gap.
        let mut gaps: Vec<(f64, f64)> = gen
            .intervals()
            .iter()
            .map(|[a, b]| {
                let len = b - a;
                (a + lambda * len, b - lambda * len)
            })
            .collect();
        gaps.sort_by(|u, v| v.0.partial_cmp(&u.0).unwrap());
        for (j, gap) in gaps.into_iter().enumerate() {
            out.push(NecklaceElement { level, index: j + 1, gap });
        }
        gen = build_generation(&params.with_generation(level as u32 + 1)?)?;
    }
    Ok(out)
}

/// Exact complement test for the supercritical geometry: every point of Ω is
/// either in M_4 (with respect to the generation-k set) or in exactly one
/// necklace element of level <= k-1.
pub fn classify_point_axial(
    x: &[f64],
    gen: &CantorGeneration,
    necklace: &[NecklaceElement],
) -> (bool, Vec<usize>) {
    let d = x.len();
    let dis = gen.distance(x[d - 1]);
    let h: f64 = x[..d - 1].iter().map(|t| t * t).sum::<f64>().sqrt();
    let in_m4 = dis <= 4.0 * h;
    let hits: Vec<usize> =
        necklace.iter().enumerate().filter(|(_, n)| n.contains(x)).map(|(i, _)| i).collect();
    (in_m4, hits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom_sub(lambda: f64, tau: f64) -> BarrierGeometry {
        BarrierGeometry::transverse(FractalParams::new(lambda, 1, 12).unwrap(), tau, 2).unwrap()
    }

    #[test]
    fn cutoff_is_sandwiched_and_c1() {
        let c = CutoffSpec::rho();
        assert_eq!(c.eval(1.0), 1.0);
        assert_eq!(c.eval(2.0), 1.0);
        assert_eq!(c.eval(4.0), 0.0);
        assert_eq!(c.eval(5.0), 0.0);
        assert!((c.eval(3.0) - 0.5).abs() < 1e-15);
        // |ψ'| <= 2/(r1-r0)
        for i in 0..=100 {
            let r = 1.5 + 3.0 * i as f64 / 100.0;
            assert!(c.derivative(r).abs() <= 2.0 / (c.r1 - c.r0) + 1e-12);
            let v = c.eval(r);
            assert!((0.0..=1.0).contains(&v));
        }
        // derivative matches finite differences
        for r in [2.3, 2.9, 3.5, 3.9] {
            let h = 1e-6;
            let fd = (c.eval(r + h) - c.eval(r - h)) / (2.0 * h);
            assert!((fd - c.derivative(r)).abs() < 1e-6);
        }
    }

    #[test]
    fn barrier_membership_examples() {
        let g = geom_sub(1.0 / 3.0, 4.0);
        assert_eq!(g.in_barrier(&[0.5, 0.1]), BarrierClass::MPlus);
        assert_eq!(g.in_barrier(&[0.0, 0.01]), BarrierClass::Outside);
        assert_eq!(g.in_barrier(&[0.5, -0.1]), BarrierClass::MMinus);
        assert_eq!(g.in_barrier(&[0.5, 0.0]), BarrierClass::Outside);
        assert_eq!(g.in_barrier(&[1.2, 0.1]), BarrierClass::Outside);
    }

    #[test]
    fn barrier_monotone_in_tau() {
        let g4 = geom_sub(1.0 / 3.0, 4.0);
        let g8 = g4.with_tau(8.0);
        let mut state = 7u64;
        for _ in 0..500 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let x = ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let y = ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
            let p = [x * 0.999, y * 0.999];
            if g4.in_barrier(&p) != BarrierClass::Outside {
                assert_ne!(g8.in_barrier(&p), BarrierClass::Outside, "M_4 ⊄ M_8 at {p:?}");
            }
        }
    }

    #[test]
    fn rho_examples() {
        let g = geom_sub(1.0 / 3.0, 4.0);
        let c = CutoffSpec::rho();
        // dis/|x_d| = 1 at a fractal column
        assert_eq!(eval_rho(&[0.5, 0.3], &g, &c).unwrap(), 1.0);
        // far outside: dis/|x_d| = (1/6)/0.01 >> 4
        assert_eq!(eval_rho(&[0.0, 0.01], &g, &c).unwrap(), 0.0);
        // midpoint of the transition band
        let x = [0.5 + 3.0 * 0.1, 0.1];
        let dis = g.trace_distance(&x);
        assert!((dis / 0.1 - 3.0).abs() < 1e-9);
        assert!((eval_rho(&x, &g, &c).unwrap() - 0.5).abs() < 1e-9);
        // apex set is singular
        assert!(matches!(eval_rho(&[0.5, 0.0], &g, &c), Err(GapError::SingularInput(_))));
        // x_d = 0 off the trace is fine
        assert_eq!(eval_rho(&[0.0, 0.0], &g, &c).unwrap(), 0.0);
    }

    #[test]
    fn rho_pm_examples() {
        let g = geom_sub(1.0 / 3.0, 4.0);
        assert_eq!(eval_rho_pm(&[0.5, -0.3], &g, true), 0.0);
        assert_eq!(eval_rho_pm(&[0.5, 0.3], &g, true), 1.0);
        assert_eq!(eval_rho_pm(&[0.5, 0.3], &g, false), 0.0);
        assert_eq!(eval_rho_pm(&[0.5, -0.3], &g, false), 1.0);
        // ratio 1.25 sits at the midpoint of the (1/2, 2) band
        let x = [0.5 + 1.25 * 0.2, 0.2];
        assert!((eval_rho_pm(&x, &g, true) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eval_eta(&[0.0, 0.0]), 1.0);
        assert_eq!(eval_eta(&[0.9, 0.0]), 0.0);
        assert!((eval_eta(&[0.75, 0.0]) - 0.5).abs() < 1e-12);
        assert!((eval_eta(&[0.75, 0.75]) - 0.25).abs() < 1e-12);
        // sandwich between the two box indicators
        for t in [0.0, 0.2, 0.5, 0.66, 0.7, 0.8, 0.85, 0.99] {
            let v = eta_axis(t);
            if t <= 4.0 / 6.0 {
                assert_eq!(v, 1.0);
            }
            if t >= 5.0 / 6.0 {
                assert_eq!(v, 0.0);
            }
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn cone_membership() {
        let k_up = ConeSpec::standard(ConeOrientation::Up);
        let x = [0.0, 0.0];
        assert!(!k_up.contains(&x, &x), "apex excluded by 0 < w_d");
        assert!(k_up.contains(&x, &[0.1, 1.0]));
        assert!(!k_up.contains(&x, &[0.3, 1.0]));
        assert!(!k_up.contains(&x, &[0.1, 2.5]), "beyond the axial extent");
        let bow = ConeSpec::standard(ConeOrientation::Both);
        assert!(bow.contains(&x, &[0.1, -1.0]));
        assert!(bow.contains(&x, &[0.1, 1.0]));
    }

    #[test]
    fn necklace_counts_and_central_element() {
        let lam = 1.0 / 3.0;
        let neck = necklace_enumerate(lam, 4).unwrap();
        for l in 0..=4i32 {
            let count = neck.iter().filter(|n| n.level == l).count();
            assert_eq!(count, 1usize << l, "level {l}");
        }
        assert_eq!(neck.iter().filter(|n| n.level == -1).count(), 2);
        let central = neck.iter().find(|n| n.level == 0).unwrap();
        assert!((central.gap.0 + 1.0 / 6.0).abs() < 1e-15);
        assert!((central.gap.1 - 1.0 / 6.0).abs() < 1e-15);
        let up = central.upper_vertex(2);
        assert_eq!(up[0], 0.0);
        assert!((up[1] - 1.0 / 6.0).abs() < 1e-15);
        let lo = central.lower_vertex(2);
        assert!((lo[1] + 1.0 / 6.0).abs() < 1e-15);
        // level-l diameters scale like λ^l
        for n in &neck {
            if n.level >= 0 {
                let expect = lam.powi(n.level) * (1.0 - 2.0 * lam);
                assert!((n.diameter() - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn necklace_diamonds_are_disjoint() {
        let neck = necklace_enumerate(0.3, 5).unwrap();
        let mut state = 99u64;
        for _ in 0..2000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let x = ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let y = ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
            let hits = neck.iter().filter(|n| n.contains(&[x * 0.3, y])).count();
            assert!(hits <= 1, "point in {hits} diamonds");
        }
    }

    #[test]
    fn necklace_complements_barrier() {
        // M_4^∁ = N within Ω, exactly, at matched truncation.
        let lam = 1.0 / 3.0;
        let k = 7u32;
        let gen = build_generation(&FractalParams::new(lam, 1, k).unwrap()).unwrap();
        let neck = necklace_enumerate(lam, k as i32 - 1).unwrap();
        let mut state = 1234u64;
        for _ in 0..3000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let xb = ((state >> 11) as f64 / (1u64 << 53) as f64) * 1.98 - 0.99;
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let xd = ((state >> 11) as f64 / (1u64 << 53) as f64) * 1.98 - 0.99;
            let (in_m4, hits) = classify_point_axial(&[xb, xd], &gen, &neck);
            let in_necklace = !hits.is_empty();
            assert!(
                in_m4 ^ in_necklace,
                "point ({xb}, {xd}) classified as m4={in_m4}, necklace hits={hits:?}"
            );
        }
    }

    #[test]
    fn rho_gradient_bound_and_support() {
        let g = geom_sub(1.0 / 3.0, 4.0);
        let c = CutoffSpec::rho();
        let h = 1e-7;
        let mut state = 5555u64;
        let mut rnd = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..300 {
            let x = [rnd() * 2.0 - 1.0, (rnd() * 2.0 - 1.0) * 0.8];
            if x[1].abs() < 1e-3 {
                continue;
            }
            let dis = g.trace_distance(&x);
            let ratio = dis / x[1].abs();
            let fx = |p: &[f64]| eval_rho(p, &g, &c).unwrap();
            let gx = (fx(&[x[0] + h, x[1]]) - fx(&[x[0] - h, x[1]])) / (2.0 * h);
            let gy = (fx(&[x[0], x[1] + h]) - fx(&[x[0], x[1] - h])) / (2.0 * h);
            let mag = (gx * gx + gy * gy).sqrt();
            // |∇ρ| <= (3/2)/(r1-r0) * sqrt(1+ratio²)/|x_d| <= 3.1/|x_d| on the band
            assert!(
                mag <= 3.2 / x[1].abs() + 1e-3,
                "gradient bound violated at {x:?}: {mag}"
            );
            if !(2.0 - 1e-3..=4.0 + 1e-3).contains(&ratio) {
                assert!(mag < 1e-3, "gradient outside the transition band at {x:?}");
            }
        }
    }

    #[test]
    fn trace_distance_grad_is_unit() {
        let g = geom_sub(0.25, 4.0);
        let mut grad = [0.0f64; 1];
        for x in [0.31, -0.44, 0.05, 0.77, -0.9] {
            let d = g.trace_distance_with_grad(&[x, 0.2], &mut grad);
            if d > 1e-9 {
                assert!((grad[0].abs() - 1.0).abs() < 1e-12);
                let h = 1e-7;
                let d1 = g.trace_distance(&[x + h, 0.2]);
                let d0 = g.trace_distance(&[x - h, 0.2]);
                assert!(((d1 - d0) / (2.0 * h) - grad[0]).abs() < 1e-5, "at {x}");
            }
        }
    }
}
