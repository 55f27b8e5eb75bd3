//! Competitor fields, the boundary datum, transition weights, and the
//! mollifier producing smooth approximants.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{GapError, Result};
use crate::field::{Field, PairWeight, UniWeight};
use crate::fractal::{build_generation, distance_to_cantor, FractalParams, KahanSum};
use crate::geometry::{BarrierGeometry, CutoffSpec, NecklaceElement, Orientation};

fn support_box(half_width: f64, d: usize) -> Vec<[f64; 2]> {
    vec![[-half_width, half_width]; d]
}

/// Subcritical competitor `u_C(x) = 1/2 sgn(x_d) ρ(x)` with the (2, 4)
/// distance-cone cutoff. Constant ±1/2 on `M_2^±`, zero outside `M_4`,
/// truncated to 3Ω.
pub struct SubCompetitor {
    geom: BarrierGeometry,
    cutoff: CutoffSpec,
}

impl SubCompetitor {
    pub fn new(geom: BarrierGeometry) -> Result<Self> {
        if geom.orientation() != Orientation::Transverse {
            return Err(GapError::InvalidParameter(
                "subcritical competitor needs the transverse orientation".into(),
            ));
        }
        Ok(Self { geom, cutoff: CutoffSpec::rho() })
    }

    pub fn geometry(&self) -> &BarrierGeometry {
        &self.geom
    }

    /// `u_C` with the apex set treated as a singular input.
    pub fn eval_checked(&self, x: &[f64]) -> Result<f64> {
        let xd = x[x.len() - 1];
        if xd == 0.0 && self.geom.trace_distance(x) == 0.0 {
            return Err(GapError::SingularInput(format!("{x:?} lies on the apex set")));
        }
        Ok(self.eval(x))
    }

    /// A.e. gradient; the apex set is a singular input.
    pub fn grad_checked(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let xd = x[x.len() - 1];
        if xd == 0.0 && self.geom.trace_distance(x) == 0.0 {
            return Err(GapError::SingularInput(format!("{x:?} lies on the apex set")));
        }
        self.gradient(x, out)
    }
}

impl Field for SubCompetitor {
    fn dim(&self) -> usize {
        self.geom.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        if !crate::field::in_box(x, &support_box(3.0, self.dim())) {
            return 0.0;
        }
        let xd = x[x.len() - 1];
        if xd == 0.0 {
            return 0.0; // sgn(0) := 0
        }
        let dis = self.geom.trace_distance(x);
        0.5 * xd.signum() * self.cutoff.eval(dis / xd.abs())
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        if !crate::field::in_box(x, &support_box(3.0, self.dim())) {
            return Ok(());
        }
        let d = self.dim();
        let xd = x[d - 1];
        if xd == 0.0 {
            return Ok(());
        }
        let mut dgrad = [0.0f64; 8];
        let dis = self.geom.trace_distance_with_grad(x, &mut dgrad[..d - 1]);
        let ratio = dis / xd.abs();
        let slope = self.cutoff.derivative(ratio);
        if slope == 0.0 {
            return Ok(());
        }
        let half_sgn = 0.5 * xd.signum();
        for i in 0..d - 1 {
            out[i] = half_sgn * slope * dgrad[i] / xd.abs();
        }
        out[d - 1] = half_sgn * slope * (-dis * xd.signum() / (xd * xd));
        Ok(())
    }

    fn support(&self) -> Option<Vec<[f64; 2]>> {
        Some(support_box(3.0, self.dim()))
    }
}

/// Supercritical competitor: the measure convolution
/// `u_C = (δ_0^{d-1} × μ_λ) * w` evaluated as an atomic sum over the
/// generation-k interval midpoints, with the saddle profile
/// `w(x̄, h) = 1/2 sgn(h) ψ(|x̄|/|h|)` and ψ the (1, 2)-smoothstep.
pub struct SuperCompetitor {
    atoms: Vec<f64>,
    atom_mass: f64,
    profile: CutoffSpec,
    params: FractalParams,
    d: usize,
}

impl SuperCompetitor {
    pub fn new(params: FractalParams, d: usize) -> Result<Self> {
        if params.m() != 1 {
            return Err(GapError::DimensionMismatch { expected: 1, got: params.m() });
        }
        if d < 2 {
            return Err(GapError::InvalidParameter("ambient dimension must be >= 2".into()));
        }
        let gen = build_generation(&params)?;
        let atoms: Vec<f64> = gen.midpoints().collect();
        let atom_mass = 0.5f64.powi(params.generation() as i32);
        Ok(Self { atoms, atom_mass, profile: CutoffSpec { r0: 1.0, r1: 2.0 }, params, d })
    }

    pub fn params(&self) -> &FractalParams {
        &self.params
    }

    fn split(&self, x: &[f64]) -> (f64, f64) {
        let rbar = x[..self.d - 1].iter().map(|t| t * t).sum::<f64>().sqrt();
        (rbar, x[self.d - 1])
    }

    /// Atomic sum at axial height `xd > 0`. Atoms with `|xd - τ| >= rbar`
    /// are saturated at ±1/2; only the window `(xd - rbar, xd + rbar)`
    /// needs the profile.
    fn eval_upper(&self, rbar: f64, xd: f64) -> f64 {
        let lo_cnt = self.atoms.partition_point(|&t| t <= xd - rbar);
        let first_above = self.atoms.partition_point(|&t| t < xd + rbar);
        let hi_cnt = self.atoms.len() - first_above;
        let mut acc = 0.5 * self.atom_mass * (lo_cnt as f64 - hi_cnt as f64);
        for &tau in &self.atoms[lo_cnt..first_above] {
            let h = xd - tau;
            if h == 0.0 {
                continue;
            }
            acc += 0.5 * h.signum() * self.profile.eval(rbar / h.abs()) * self.atom_mass;
        }
        acc
    }

    /// Radial and axial derivative components at `xd > 0`.
    fn grad_upper(&self, rbar: f64, xd: f64) -> (f64, f64) {
        let lo_cnt = self.atoms.partition_point(|&t| t <= xd - rbar);
        let first_above = self.atoms.partition_point(|&t| t < xd + rbar);
        let mut g_rbar = 0.0;
        let mut g_xd = 0.0;
        for &tau in &self.atoms[lo_cnt..first_above] {
            let h = xd - tau;
            if h == 0.0 {
                continue;
            }
            let slope = self.profile.derivative(rbar / h.abs());
            if slope == 0.0 {
                continue;
            }
            let half_sgn = 0.5 * h.signum() * self.atom_mass;
            g_rbar += half_sgn * slope / h.abs();
            g_xd += half_sgn * slope * (-rbar * h.signum() / (h * h));
        }
        (g_rbar, g_xd)
    }
}

impl Field for SuperCompetitor {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, x: &[f64]) -> f64 {
        if !crate::field::in_box(x, &support_box(3.0, self.d)) {
            return 0.0;
        }
        let (rbar, xd) = self.split(x);
        // Odd in x_d bitwise: canonicalize to the upper half-space.
        if xd == 0.0 {
            return 0.0;
        }
        if xd < 0.0 {
            return -self.eval_upper(rbar, -xd);
        }
        self.eval_upper(rbar, xd)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        if !crate::field::in_box(x, &support_box(3.0, self.d)) {
            return Ok(());
        }
        let (rbar, xd) = self.split(x);
        if rbar == 0.0 {
            return Ok(()); // axis: a.e. zero between the profile cones
        }
        // ∂u/∂x̄ is odd in x_d, ∂u/∂x_d even; mirror accordingly.
        let (g_rbar, g_xd) = if xd < 0.0 {
            let (gr, gx) = self.grad_upper(rbar, -xd);
            (-gr, gx)
        } else {
            self.grad_upper(rbar, xd)
        };
        for i in 0..self.d - 1 {
            out[i] = g_rbar * x[i] / rbar;
        }
        out[self.d - 1] = g_xd;
        Ok(())
    }

    fn support(&self) -> Option<Vec<[f64; 2]>> {
        Some(support_box(3.0, self.d))
    }
}

/// Boundary datum `u_D = η · u_C`, supported in `(-5/6, 5/6)^d`.
pub struct BoundaryField<F: Field> {
    inner: F,
}

impl<F: Field> BoundaryField<F> {
    pub fn new(inner: F) -> Self {
        Self { inner }
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }
}

impl<F: Field> Field for BoundaryField<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let eta = crate::geometry::eval_eta(x);
        if eta == 0.0 {
            return 0.0;
        }
        eta * self.inner.eval(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let d = self.dim();
        let eta = crate::geometry::eval_eta(x);
        if eta == 0.0 {
            // grad η also vanishes outside the closed 5/6-box interior band
            let outside = x.iter().any(|t| t.abs() >= 5.0 / 6.0);
            if outside {
                out.fill(0.0);
                return Ok(());
            }
        }
        self.inner.gradient(x, out)?;
        let u = self.inner.eval(x);
        let profile = CutoffSpec { r0: 4.0 / 6.0, r1: 5.0 / 6.0 };
        let factors: Vec<f64> = x.iter().map(|&t| profile.eval(t.abs())).collect();
        for i in 0..d {
            let mut deta = profile.derivative(x[i].abs()) * x[i].signum();
            for (j, f) in factors.iter().enumerate() {
                if j != i {
                    deta *= f;
                }
            }
            out[i] = eta * out[i] + u * deta;
        }
        Ok(())
    }

    fn support(&self) -> Option<Vec<[f64; 2]>> {
        Some(support_box(5.0 / 6.0, self.dim()))
    }
}

/// Subcritical transition weight
/// `a(y,z) = (ρ⁺(y)ρ⁺(z) + ρ⁻(y)ρ⁻(z)) (|y_d|^α + |z_d|^α)`, zero outside 3Ω.
pub struct SubWeight {
    geom: BarrierGeometry,
    alpha: f64,
}

impl SubWeight {
    pub fn new(geom: BarrierGeometry, alpha: f64) -> Result<Self> {
        if alpha < 0.0 {
            return Err(GapError::InvalidParameter("alpha must be >= 0".into()));
        }
        if geom.orientation() != Orientation::Transverse {
            return Err(GapError::InvalidParameter(
                "subcritical weight needs the transverse orientation".into(),
            ));
        }
        Ok(Self { geom, alpha })
    }
}

impl PairWeight for SubWeight {
    fn dim(&self) -> usize {
        self.geom.dim()
    }

    fn eval(&self, y: &[f64], z: &[f64]) -> f64 {
        let d = self.dim();
        let box3 = support_box(3.0, d);
        if !crate::field::in_box(y, &box3) || !crate::field::in_box(z, &box3) {
            return 0.0;
        }
        let same_side = y[d - 1] * z[d - 1] > 0.0;
        if !same_side {
            return 0.0;
        }
        let plus = y[d - 1] > 0.0;
        let ry = crate::geometry::eval_rho_pm(y, &self.geom, plus);
        if ry == 0.0 {
            return 0.0;
        }
        let rz = crate::geometry::eval_rho_pm(z, &self.geom, plus);
        if rz == 0.0 {
            return 0.0;
        }
        ry * rz * (y[d - 1].abs().powf(self.alpha) + z[d - 1].abs().powf(self.alpha))
    }
}

/// Supercritical transition weight, supported on pairs that sit jointly in
/// the saturation core of one necklace diamond:
/// `a(y,z) = Σ_j ρ_j(y) ρ_j(z) (|ȳ|^α + |z̄|^α)` with ρ_j the per-gap cutoff
/// equal to 1 on {|x̄| <= dis/4} and 0 beyond {|x̄| >= 3 dis/8}. The competitor
/// is exactly constant on each ρ_j support, which forces
/// `a(y,z) |u_C(y) - u_C(z)| = 0` everywhere.
pub struct SuperWeight {
    gap_starts: Vec<f64>,
    gaps: Vec<(f64, f64)>,
    params: FractalParams,
    alpha: f64,
    d: usize,
    core: CutoffSpec,
}

impl SuperWeight {
    pub fn new(
        params: FractalParams,
        elements: &[NecklaceElement],
        alpha: f64,
        d: usize,
    ) -> Result<Self> {
        if alpha < 0.0 {
            return Err(GapError::InvalidParameter("alpha must be >= 0".into()));
        }
        let mut gaps: Vec<(f64, f64)> = elements.iter().map(|e| e.gap).collect();
        gaps.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let gap_starts = gaps.iter().map(|g| g.0).collect();
        Ok(Self { gap_starts, gaps, params, alpha, d, core: CutoffSpec { r0: 0.25, r1: 0.375 } })
    }

    fn gap_index(&self, t: f64) -> Option<usize> {
        let i = self.gap_starts.partition_point(|&s| s < t);
        if i == 0 {
            return None;
        }
        let (a, b) = self.gaps[i - 1];
        (t > a && t < b).then_some(i - 1)
    }

    /// ρ_j at a point already known to have its axial coordinate in gap j.
    fn rho_core(&self, x: &[f64]) -> f64 {
        let rbar = x[..self.d - 1].iter().map(|t| t * t).sum::<f64>().sqrt();
        let dis = distance_to_cantor(x[self.d - 1], &self.params, 1e-14);
        if dis == 0.0 {
            return 0.0;
        }
        self.core.eval(rbar / dis)
    }
}

impl PairWeight for SuperWeight {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, y: &[f64], z: &[f64]) -> f64 {
        let box3 = support_box(3.0, self.d);
        if !crate::field::in_box(y, &box3) || !crate::field::in_box(z, &box3) {
            return 0.0;
        }
        let (gy, gz) = (self.gap_index(y[self.d - 1]), self.gap_index(z[self.d - 1]));
        let (Some(gy), Some(gz)) = (gy, gz) else { return 0.0 };
        if gy != gz {
            return 0.0;
        }
        let ry = self.rho_core(y);
        if ry == 0.0 {
            return 0.0;
        }
        let rz = self.rho_core(z);
        if rz == 0.0 {
            return 0.0;
        }
        let ybar: f64 = y[..self.d - 1].iter().map(|t| t * t).sum::<f64>().sqrt();
        let zbar: f64 = z[..self.d - 1].iter().map(|t| t * t).sum::<f64>().sqrt();
        ry * rz * (ybar.powf(self.alpha) + zbar.powf(self.alpha))
    }
}

/// Univariate weight for the local second phase (models I and II):
/// `a(x) = |x_d|^α (1 - χ(dis/|x_d|))` with χ a smoothed indicator of the
/// shell {1 <= dis/|x_d| <= 5}. Vanishes on a neighbourhood of the
/// competitor's gradient shell {2 <= dis/|x_d| <= 4} and equals |x_d|^α on
/// the Riesz cone {dis <= |x_d|/4}.
pub struct LocalShellWeight {
    geom: BarrierGeometry,
    alpha: f64,
    rise: CutoffSpec,
    fall: CutoffSpec,
}

impl LocalShellWeight {
    pub fn new(geom: BarrierGeometry, alpha: f64) -> Result<Self> {
        if alpha < 0.0 {
            return Err(GapError::InvalidParameter("alpha must be >= 0".into()));
        }
        Ok(Self {
            geom,
            alpha,
            rise: CutoffSpec { r0: 1.0, r1: 1.5 },
            fall: CutoffSpec { r0: 4.5, r1: 5.0 },
        })
    }
}

impl UniWeight for LocalShellWeight {
    fn dim(&self) -> usize {
        self.geom.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        if !crate::field::in_box(x, &support_box(3.0, d)) {
            return 0.0;
        }
        let xd = x[d - 1];
        if xd == 0.0 {
            return 0.0;
        }
        let ratio = self.geom.trace_distance(x) / xd.abs();
        let chi = (1.0 - self.rise.eval(ratio)) * self.fall.eval(ratio);
        xd.abs().powf(self.alpha) * (1.0 - chi)
    }
}

/// Mollification kernel: radius ε, polynomial bump `(1 - |z/ε|²)²`,
/// tensor midpoint quadrature at resolution ε/8, weights normalized to
/// unit mass exactly.
#[derive(Debug, Clone, Copy)]
pub struct MollifierSpec {
    pub eps: f64,
    pub nodes_per_axis: usize,
}

impl MollifierSpec {
    pub fn new(eps: f64) -> Result<Self> {
        if eps <= 0.0 {
            return Err(GapError::InvalidParameter("mollifier radius must be > 0".into()));
        }
        Ok(Self { eps, nodes_per_axis: 16 })
    }

    pub fn with_nodes(eps: f64, nodes_per_axis: usize) -> Result<Self> {
        if eps <= 0.0 || nodes_per_axis < 2 || nodes_per_axis % 2 != 0 {
            return Err(GapError::InvalidParameter(
                "mollifier needs eps > 0 and an even node count >= 2".into(),
            ));
        }
        Ok(Self { eps, nodes_per_axis })
    }
}

/// `v_ε = field * kernel_ε`; evaluation memoizes on exact coordinates.
pub struct MollifiedField {
    inner: Arc<dyn Field>,
    eps: f64,
    offsets: Vec<f64>,
    weights: Vec<f64>,
    memo: Mutex<HashMap<[u64; 4], f64>>,
}

const MEMO_CAP: usize = 6_000_000;

/// Build the smooth approximant `v_ε` of a field.
pub fn mollify(field: Arc<dyn Field>, spec: &MollifierSpec) -> Result<MollifiedField> {
    let d = field.dim();
    if d > 4 {
        return Err(GapError::InvalidParameter("mollify supports d <= 4".into()));
    }
    let n = spec.nodes_per_axis;
    let eps = spec.eps;
    let step = 2.0 * eps / n as f64;
    // Symmetric by construction so odd integrands cancel bitwise.
    let mut offsets = vec![0.0f64; n];
    for i in 0..n / 2 {
        let off = (0.5 + (n / 2 - 1 - i) as f64) * step;
        offsets[i] = -off;
        offsets[n - 1 - i] = off;
    }
    // Tensor kernel weights, normalized to unit mass exactly.
    let mut weights = Vec::with_capacity(n.pow(d as u32));
    let mut index = vec![0usize; d];
    let mut total = KahanSum::default();
    loop {
        let r2: f64 = index.iter().map(|&i| offsets[i] * offsets[i]).sum();
        let t = 1.0 - r2 / (eps * eps);
        let w = if t > 0.0 { t * t } else { 0.0 };
        weights.push(w);
        total.add(w);
        let mut dim = 0;
        loop {
            if dim == d {
                let norm = total.value();
                for w in &mut weights {
                    *w /= norm;
                }
                return Ok(MollifiedField {
                    inner: field,
                    eps,
                    offsets,
                    weights,
                    memo: Mutex::new(HashMap::new()),
                });
            }
            index[dim] += 1;
            if index[dim] < n {
                break;
            }
            index[dim] = 0;
            dim += 1;
        }
    }
}

impl MollifiedField {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn eval_uncached(&self, x: &[f64]) -> f64 {
        let d = self.inner.dim();
        let n = self.offsets.len();
        let mut acc = KahanSum::default();
        let mut index = vec![0usize; d - 1];
        let mut point = vec![0.0; d];
        loop {
            for (dim, &i) in index.iter().enumerate() {
                point[dim] = x[dim] - self.offsets[i];
            }
            // Pair the axial nodes symmetrically so odd fields cancel exactly.
            for i_ax in 0..n / 2 {
                let off = self.offsets[n - 1 - i_ax];
                debug_assert!((self.offsets[i_ax] + off).abs() < 1e-15 * self.eps.max(1.0));
                let mut widx = 0usize;
                let mut stride = 1usize;
                for &i in index.iter() {
                    widx += i * stride;
                    stride *= n;
                }
                let w_hi = self.weights[widx + (n - 1 - i_ax) * stride];
                let w_lo = self.weights[widx + i_ax * stride];
                debug_assert!((w_hi - w_lo).abs() <= 1e-15);
                point[d - 1] = x[d - 1] - off;
                let f_hi = self.inner.eval(&point);
                point[d - 1] = x[d - 1] + off;
                let f_lo = self.inner.eval(&point);
                acc.add(w_hi * (f_hi + f_lo));
            }
            let mut dim = 0;
            loop {
                if dim == d - 1 {
                    return acc.value();
                }
                index[dim] += 1;
                if index[dim] < n {
                    break;
                }
                index[dim] = 0;
                dim += 1;
            }
        }
    }
}

impl Field for MollifiedField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        if let Some(s) = self.support() {
            if !crate::field::in_box(x, &s) {
                return 0.0;
            }
        }
        let mut key = [0u64; 4];
        for (k, &t) in key.iter_mut().zip(x.iter()) {
            *k = t.to_bits();
        }
        {
            let memo = self.memo.lock().unwrap();
            if let Some(v) = memo.get(&key) {
                return *v;
            }
        }
        let v = self.eval_uncached(x);
        let mut memo = self.memo.lock().unwrap();
        if memo.len() < MEMO_CAP {
            memo.insert(key, v);
        }
        v
    }

    fn support(&self) -> Option<Vec<[f64; 2]>> {
        self.inner
            .support()
            .map(|s| s.iter().map(|iv| [iv[0] - self.eps, iv[1] + self.eps]).collect())
    }
}
