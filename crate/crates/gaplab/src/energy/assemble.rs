//! Model assembly (phase pairs for models I-IV) and the Luxemburg norm.

use super::{
    gagliardo_phase, local_phase, weighted_local_phase, weighted_nonlocal_phase, EnergyValue,
    QuadratureSpec,
};
use crate::error::{GapError, Result};
use crate::field::{Field, PairWeight, UniWeight};
use crate::regimes::{Model, ModelParams};
use serde::Serialize;

/// The degenerate second-phase coefficient: bivariate for the nonlocal
/// phase (models III/IV), univariate for the local one (models I/II).
pub enum SecondPhaseWeight<'a> {
    Pair(&'a dyn PairWeight),
    Uni(&'a dyn UniWeight),
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelEnergy {
    pub model: Model,
    pub first: EnergyValue,
    pub second: EnergyValue,
    pub total: f64,
}

/// Evaluate both phases of the tagged model and their sum.
pub fn assemble_model(
    params: &ModelParams,
    v: &dyn Field,
    weight: &SecondPhaseWeight,
    spec: &QuadratureSpec,
) -> Result<ModelEnergy> {
    let first = if params.model.first_phase_local() {
        local_phase(v, params.p, spec)?
    } else {
        gagliardo_phase(v, params.s, params.p, spec)?
    };
    let second = match (params.model.second_phase_local(), weight) {
        (true, SecondPhaseWeight::Uni(a)) => weighted_local_phase(v, *a, params.q, spec)?,
        (false, SecondPhaseWeight::Pair(a)) => {
            weighted_nonlocal_phase(v, *a, params.t, params.q, spec)?
        }
        (true, SecondPhaseWeight::Pair(_)) => {
            return Err(GapError::InvalidParameter(format!(
                "model {} takes a univariate weight",
                params.model
            )))
        }
        (false, SecondPhaseWeight::Uni(_)) => {
            return Err(GapError::InvalidParameter(format!(
                "model {} takes a bivariate weight",
                params.model
            )))
        }
    };
    let total = first.best_estimate() + second.best_estimate();
    Ok(ModelEnergy { model: params.model, first, second, total })
}

/// Solve `j1 λ^{-p} + j2 λ^{-q} = 1` for λ by bisection; this is the
/// Luxemburg norm `inf{λ > 0 : J(v/λ) <= 1}` expressed through the phase
/// homogeneities.
pub fn luxemburg_from_phases(j1: f64, p: f64, j2: f64, q: f64, tol: f64) -> Result<f64> {
    if !(j1.is_finite() && j2.is_finite()) || j1 < 0.0 || j2 < 0.0 {
        return Err(GapError::Divergent(format!("phase values ({j1}, {j2})")));
    }
    if !(tol > 0.0) {
        return Err(GapError::InvalidParameter("tolerance must be > 0".into()));
    }
    if j1 == 0.0 && j2 == 0.0 {
        return Ok(0.0);
    }
    let modular = |lam: f64| j1 * lam.powf(-p) + j2 * lam.powf(-q);
    let mut hi = 1.0;
    while modular(hi) > 1.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(GapError::Divergent("Luxemburg bracketing failed".into()));
        }
    }
    let mut lo = hi;
    while modular(lo) <= 1.0 && lo > 1e-300 {
        lo *= 0.5;
    }
    while hi - lo > tol * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if modular(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Luxemburg norm of a field under the tagged model's energy.
pub fn luxemburg_norm(
    params: &ModelParams,
    v: &dyn Field,
    weight: &SecondPhaseWeight,
    spec: &QuadratureSpec,
    tol: f64,
) -> Result<f64> {
    let energy = assemble_model(params, v, weight, spec)?;
    luxemburg_from_phases(
        energy.first.best_estimate(),
        params.p,
        energy.second.best_estimate(),
        params.q,
        tol,
    )
}
