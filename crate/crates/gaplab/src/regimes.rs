//! Parameter regimes: the Sobolev index, the gap conditions for the four
//! double-phase models, the admissible fractal-dimension windows, and the
//! brute-force consistency oracle tying them together.

use crate::error::{GapError, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Model {
    I,
    II,
    III,
    IV,
}

impl Model {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "1" | "i" => Ok(Model::I),
            "II" | "2" | "ii" => Ok(Model::II),
            "III" | "3" | "iii" => Ok(Model::III),
            "IV" | "4" | "iv" => Ok(Model::IV),
            other => Err(GapError::InvalidParameter(format!("unknown model tag: {other}"))),
        }
    }

    /// Is the first phase local (s pinned to 1)?
    pub fn first_phase_local(&self) -> bool {
        matches!(self, Model::I | Model::III)
    }

    /// Is the weighted second phase local (t pinned to 1)?
    pub fn second_phase_local(&self) -> bool {
        matches!(self, Model::I | Model::II)
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Model::I => "I",
            Model::II => "II",
            Model::III => "III",
            Model::IV => "IV",
        };
        write!(f, "{s}")
    }
}

/// The full symbol table (model, d, s, t, p, q, α) with the model-tag
/// consistency rules enforced at construction: s = 1 encodes a local first
/// phase (models I/III), t = 1 a local second phase (models I/II), and
/// model IV requires 0 < s <= t < 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub model: Model,
    pub d: usize,
    pub s: f64,
    pub t: f64,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
}

impl ModelParams {
    pub fn new(model: Model, d: usize, s: f64, t: f64, p: f64, q: f64, alpha: f64) -> Result<Self> {
        if d < 2 {
            return Err(GapError::InvalidParameter(format!("d must be >= 2, got {d}")));
        }
        for (name, v) in [("p", p), ("q", q)] {
            if !(v > 1.0 && v.is_finite()) {
                return Err(GapError::InvalidParameter(format!(
                    "{name} must lie in (1, ∞), got {v}"
                )));
            }
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(GapError::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
        }
        for (name, v) in [("s", s), ("t", t)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(GapError::InvalidParameter(format!(
                    "{name} must lie in (0, 1], got {v}"
                )));
            }
        }
        let tag_ok = match model {
            Model::I => s == 1.0 && t == 1.0,
            Model::II => s < 1.0 && t == 1.0,
            Model::III => s == 1.0 && t < 1.0,
            Model::IV => s < 1.0 && t < 1.0 && s <= t,
        };
        if !tag_ok {
            return Err(GapError::InvalidParameter(format!(
                "model {model} is inconsistent with (s, t) = ({s}, {t})"
            )));
        }
        Ok(Self { model, d, s, t, p, q, alpha })
    }
}

/// Sobolev index `ind(W^{s,p}) = s - d/p`.
pub fn sobolev_index(s: f64, d: usize, p: f64) -> f64 {
    s - d as f64 / p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeClass {
    Subcritical,
    Critical,
    Supercritical,
}

impl std::fmt::Display for RegimeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RegimeClass::Subcritical => "subcritical",
            RegimeClass::Critical => "critical",
            RegimeClass::Supercritical => "supercritical",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime {
    pub class: RegimeClass,
    pub index: f64,
}

/// Sign partition of the Sobolev index; an exactly-zero index is Critical.
pub fn classify_regime(params: &ModelParams) -> Regime {
    let index = sobolev_index(params.s, params.d, params.p);
    let class = if index < 0.0 {
        RegimeClass::Subcritical
    } else if index > 0.0 {
        RegimeClass::Supercritical
    } else {
        RegimeClass::Critical
    };
    Regime { class, index }
}

/// One evaluated inequality with both sides retained.
#[derive(Debug, Clone, Serialize)]
pub struct Inequality {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Inequality {
    fn strict_gt(label: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self { label: label.into(), lhs, rhs, holds: lhs > rhs }
    }
}

/// The evaluated gap condition: one regime row applied to the parameters.
#[derive(Debug, Clone, Serialize)]
pub struct GapCondition {
    pub model: Model,
    pub regime: RegimeClass,
    pub holds: bool,
    pub inequalities: Vec<Inequality>,
}

/// Evaluate the gap-condition row for the regime the parameters classify to.
/// A critical index routes to the critical row, which exists for model IV
/// only; for models I-III it is refused as not stated.
pub fn gap_condition(params: &ModelParams) -> Result<GapCondition> {
    gap_condition_in(params, classify_regime(params).class)
}

/// Evaluate a specific regime row regardless of the classification.
///
/// Subcritical row: `t q > s p + α` (with s, t pinned to 1 by the model
/// tag where the phase is local). Supercritical row:
/// `q/(q-1) (t - (d+α)/q) > p/(p-1) (s - d/p)`. Critical row (model IV):
/// `s p + α < d < t q`.
pub fn gap_condition_in(params: &ModelParams, regime: RegimeClass) -> Result<GapCondition> {
    let ModelParams { model, d, s, t, p, q, alpha } = *params;
    let d = d as f64;
    match regime {
        RegimeClass::Subcritical => {
            let ineq = Inequality::strict_gt("t*q > s*p + alpha", t * q, s * p + alpha);
            Ok(GapCondition { model, regime, holds: ineq.holds, inequalities: vec![ineq] })
        }
        RegimeClass::Supercritical => {
            let lhs = q / (q - 1.0) * (t - (d + alpha) / q);
            let rhs = p / (p - 1.0) * (s - d / p);
            let ineq = Inequality::strict_gt("q'(t - (d+alpha)/q) > p'(s - d/p)", lhs, rhs);
            Ok(GapCondition { model, regime, holds: ineq.holds, inequalities: vec![ineq] })
        }
        RegimeClass::Critical => {
            if model != Model::IV {
                return Err(GapError::NotStated { model: model.to_string() });
            }
            let left = Inequality::strict_gt("d > s*p + alpha", d, s * p + alpha);
            let right = Inequality::strict_gt("t*q > d", t * q, d);
            Ok(GapCondition {
                model,
                regime,
                holds: left.holds && right.holds,
                inequalities: vec![left, right],
            })
        }
    }
}

/// Open interval of admissible fractal dimensions, already clipped.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DimensionWindow {
    pub lo: f64,
    pub hi: f64,
}

impl DimensionWindow {
    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    pub fn midpoint(&self) -> Option<f64> {
        (!self.is_empty()).then(|| 0.5 * (self.lo + self.hi))
    }

    pub fn contains(&self, d_frac: f64) -> bool {
        self.lo < d_frac && d_frac < self.hi
    }
}

/// Subcritical window `(d - tq + α, d - sp) ∩ (0, d-1)`: the transverse
/// fractal dimensions for which the competitor energy is finite and the
/// smooth second phase stays bounded below.
pub fn dimension_window_sub(params: &ModelParams) -> Result<DimensionWindow> {
    let regime = classify_regime(params);
    if regime.class != RegimeClass::Subcritical {
        return Err(GapError::WrongRegime {
            required: "subcritical".into(),
            actual: regime.class.to_string(),
        });
    }
    let ModelParams { d, s, t, p, q, alpha, .. } = *params;
    let d = d as f64;
    let lo = (d - t * q + alpha).max(0.0);
    let hi = (d - s * p).min(d - 1.0);
    Ok(DimensionWindow { lo, hi })
}

/// Supercritical window `((sp-d)/(p-1), q'(t-(d+α)/q)) ∩ (0, 1)` for the
/// axial (one-dimensional) fractal.
pub fn dimension_window_super(params: &ModelParams) -> Result<DimensionWindow> {
    let regime = classify_regime(params);
    if regime.class != RegimeClass::Supercritical {
        return Err(GapError::WrongRegime {
            required: "supercritical".into(),
            actual: regime.class.to_string(),
        });
    }
    let ModelParams { d, s, t, p, q, alpha, .. } = *params;
    let d = d as f64;
    let lo = ((s * p - d) / (p - 1.0)).max(0.0);
    let hi = (q / (q - 1.0) * (t - (d + alpha) / q)).min(1.0);
    Ok(DimensionWindow { lo, hi })
}

/// Window for whichever regime the parameters classify to.
pub fn dimension_window(params: &ModelParams) -> Result<DimensionWindow> {
    match classify_regime(params).class {
        RegimeClass::Subcritical => dimension_window_sub(params),
        RegimeClass::Supercritical => dimension_window_super(params),
        RegimeClass::Critical => Err(GapError::WrongRegime {
            required: "subcritical or supercritical".into(),
            actual: "critical".into(),
        }),
    }
}

/// The per-dimension lemma conditions behind the windows, at fractal
/// dimension `d_frac`: competitor energy finite and second phase bounded
/// below.
pub fn lemma_conditions_at(params: &ModelParams, d_frac: f64) -> Result<bool> {
    let ModelParams { d, s, t, p, q, alpha, .. } = *params;
    let d = d as f64;
    match classify_regime(params).class {
        RegimeClass::Subcritical => {
            let finite = s - (d - d_frac) / p < 0.0;
            let floor = t - (d - d_frac) / q - alpha / q > 0.0;
            Ok(finite && floor)
        }
        RegimeClass::Supercritical => {
            let finite = p * (s - d_frac) < d - d_frac;
            let floor = q / (q - 1.0) * (t - (d + alpha) / q) > d_frac;
            Ok(finite && floor)
        }
        RegimeClass::Critical => Err(GapError::WrongRegime {
            required: "subcritical or supercritical".into(),
            actual: "critical".into(),
        }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowConsistency {
    pub gap_holds: bool,
    pub window: DimensionWindow,
    pub scan_found: Option<f64>,
    pub consistent: bool,
}

/// Brute-force oracle: scan the admissible dimension range on a fine grid,
/// test the lemma conditions pointwise, and confirm
/// `∃D ⟺ window nonempty ⟺ gap condition`.
pub fn window_consistency(params: &ModelParams, grid: usize) -> Result<WindowConsistency> {
    let regime = classify_regime(params).class;
    let m = match regime {
        RegimeClass::Subcritical => params.d as f64 - 1.0,
        RegimeClass::Supercritical => 1.0,
        RegimeClass::Critical => {
            return Err(GapError::WrongRegime {
                required: "subcritical or supercritical".into(),
                actual: "critical".into(),
            })
        }
    };
    let window = dimension_window(params)?;
    let gap = gap_condition(params)?;
    let mut scan_found = None;
    for i in 0..grid {
        let d_frac = m * (i as f64 + 0.5) / grid as f64;
        if lemma_conditions_at(params, d_frac)? {
            scan_found = Some(d_frac);
            break;
        }
    }
    if scan_found.is_none() {
        // A window narrower than the grid step can slip between nodes;
        // probe its midpoint directly.
        if let Some(mid) = window.midpoint() {
            if mid > 0.0 && mid < m && lemma_conditions_at(params, mid)? {
                scan_found = Some(mid);
            }
        }
    }
    let consistent =
        (scan_found.is_some() == !window.is_empty()) && (!window.is_empty() == gap.holds);
    Ok(WindowConsistency { gap_holds: gap.holds, window, scan_found, consistent })
}
