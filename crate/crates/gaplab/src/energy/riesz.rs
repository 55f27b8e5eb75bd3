//! Restricted Riesz potential `I_1^K(g)(x) = ∫_K g(x+w) / |w|^{d-1} dw`
//! over upward/downward cones, by dyadic axial slabs with midpoint
//! subgrids and geometric tail extrapolation toward the apex.

use crate::error::{GapError, Result};
use crate::field::Field;
use crate::fractal::KahanSum;
use crate::geometry::{ConeOrientation, ConeSpec};

const SLABS: usize = 30;
const AXIAL_NODES: usize = 6;
const TRANSVERSE_NODES: usize = 10;

/// The two one-sided potentials (upward, downward); the bow-tie value is
/// their sum.
pub fn restricted_riesz_split(
    g: &dyn Field,
    x: &[f64],
    cone: &ConeSpec,
    _seed: u64,
) -> Result<(f64, f64)> {
    let up = match cone.orientation {
        ConeOrientation::Down => 0.0,
        _ => one_sided(g, x, cone, 1.0)?,
    };
    let down = match cone.orientation {
        ConeOrientation::Up => 0.0,
        _ => one_sided(g, x, cone, -1.0)?,
    };
    Ok((up, down))
}

/// `∫ g(x+w)/|w|^{d-1}` over the specified cone.
pub fn restricted_riesz(g: &dyn Field, x: &[f64], cone: &ConeSpec) -> Result<f64> {
    let (up, down) = restricted_riesz_split(g, x, cone, 0)?;
    Ok(up + down)
}

fn one_sided(g: &dyn Field, x: &[f64], cone: &ConeSpec, sign: f64) -> Result<f64> {
    let d = x.len();
    if d > 2 {
        return Err(GapError::InvalidParameter("restricted_riesz supports d <= 2".into()));
    }
    let mut total = KahanSum::default();
    let mut slab_masses = Vec::with_capacity(SLABS);
    let mut w = [0.0f64; 2];
    for j in 0..SLABS {
        let hi = cone.extent * 0.5f64.powi(j as i32);
        let lo = 0.5 * hi;
        let da = (hi - lo) / AXIAL_NODES as f64;
        let mut slab = KahanSum::default();
        for ia in 0..AXIAL_NODES {
            let ax = lo + (ia as f64 + 0.5) * da;
            let half_width = cone.opening * ax;
            if d == 1 {
                w[0] = sign * ax;
                let val = g.eval(&[x[0] + w[0]]);
                if !val.is_finite() {
                    return Err(GapError::NonFiniteField(format!("{:?}", [x[0] + w[0]])));
                }
                // d=1 kernel |w|^{1-d} = 1
                slab.add(val * da);
            } else {
                let dt = 2.0 * half_width / TRANSVERSE_NODES as f64;
                for it in 0..TRANSVERSE_NODES {
                    let tr = -half_width + (it as f64 + 0.5) * dt;
                    w[0] = tr;
                    w[1] = sign * ax;
                    let y = [x[0] + w[0], x[1] + w[1]];
                    let val = g.eval(&y);
                    if !val.is_finite() {
                        return Err(GapError::NonFiniteField(format!("{y:?}")));
                    }
                    let norm = (tr * tr + ax * ax).sqrt();
                    slab.add(val / norm * dt * da);
                }
            }
        }
        slab_masses.push(slab.value());
        total.add(slab.value());
    }
    // Geometric apex tail when the trailing slabs decay cleanly.
    let n = slab_masses.len();
    if n >= 4 {
        let (a, b) = (slab_masses[n - 4].abs(), slab_masses[n - 1].abs());
        if a > 0.0 && b > 0.0 {
            let ratio = (b / a).powf(1.0 / 3.0);
            if ratio < 0.95 {
                total.add(slab_masses[n - 1] * ratio / (1.0 - ratio));
            }
        }
    }
    Ok(total.value())
}
