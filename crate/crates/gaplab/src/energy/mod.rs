//! Energy evaluation: nonlocal Gagliardo phases, weighted local phases,
//! model assembly, Luxemburg norms, restricted Riesz potentials, and
//! dyadic-shell convergence diagnostics.

mod assemble;
mod local;
mod montecarlo;
mod nonlocal;
mod riesz;

pub use assemble::{
    assemble_model, luxemburg_from_phases, luxemburg_norm, ModelEnergy, SecondPhaseWeight,
};
pub use local::{local_phase, weighted_local_phase};
pub use montecarlo::mc_nonlocal_phase;
pub use nonlocal::{gagliardo_phase, nonlocal_phase, weighted_nonlocal_phase};
pub use riesz::{restricted_riesz, restricted_riesz_split};

use crate::error::{GapError, Result};
use serde::Serialize;

/// Quadrature backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QuadMode {
    TensorShell,
    MonteCarlo,
}

/// Quadrature policy: domain, shell decomposition, node counts, refinement
/// floors and budgets, Monte Carlo sampling parameters. A fixed spec (seed
/// included) determines every output byte.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureSpec {
    pub mode: QuadMode,
    /// Integration domain for nonlocal phases; the 3Ω truncation box.
    pub domain: Vec<[f64; 2]>,
    /// Integration domain for local phases; the Ω box.
    pub local_domain: Vec<[f64; 2]>,
    /// Cells per axis of the top-level grid (even, so x_d = 0 is a face).
    pub base_cells: usize,
    /// Number of dyadic shells in |y - z|.
    pub shells: usize,
    /// Radial u-nodes per shell.
    pub nodes_radial: usize,
    /// Angular u-nodes per shell (d = 2).
    pub nodes_angular: usize,
    /// Refinement floor: cells are not split below `factor * shell radius`.
    pub min_cell_factor: f64,
    /// Hard cap on dyadic subdivision depth.
    pub max_depth: u32,
    /// Visited-cell budget per (shell, u-node).
    pub cell_budget: usize,
    /// Integrate half the u-directions and double (exact for the symmetric
    /// phase integrands).
    pub use_symmetry: bool,
    pub seed: u64,
    pub mc_samples: usize,
}

fn sym_box(half_width: f64, d: usize) -> Vec<[f64; 2]> {
    vec![[-half_width, half_width]; d]
}

impl QuadratureSpec {
    /// Desk-scale default for d = 2: nonlocal domain 3Ω, local domain Ω.
    pub fn default_2d() -> Self {
        Self {
            mode: QuadMode::TensorShell,
            domain: sym_box(3.0, 2),
            local_domain: sym_box(1.0, 2),
            base_cells: 48,
            shells: 14,
            nodes_radial: 4,
            nodes_angular: 12,
            min_cell_factor: 0.25,
            max_depth: 26,
            cell_budget: 30_000,
            use_symmetry: true,
            seed: 17,
            mc_samples: 200_000,
        }
    }

    /// High-accuracy 1-D spec for the closed-form oracle cases.
    pub fn oracle_1d(domain: [f64; 2]) -> Self {
        Self {
            mode: QuadMode::TensorShell,
            domain: vec![domain],
            local_domain: vec![domain],
            base_cells: 64,
            shells: 16,
            nodes_radial: 16,
            nodes_angular: 1,
            min_cell_factor: 1e-3,
            max_depth: 40,
            cell_budget: 200_000,
            use_symmetry: true,
            seed: 17,
            mc_samples: 200_000,
        }
    }

    /// Reduced-budget spec for mollified-field sweeps.
    pub fn sweep_2d() -> Self {
        Self {
            base_cells: 24,
            shells: 12,
            nodes_radial: 3,
            nodes_angular: 8,
            cell_budget: 8_000,
            ..Self::default_2d()
        }
    }

    /// Halve every resolution scale `levels` times.
    pub fn refine(&self, levels: u32) -> Self {
        let f = 1usize << levels;
        Self {
            base_cells: self.base_cells * f,
            shells: self.shells + 2 * levels as usize,
            min_cell_factor: self.min_cell_factor / f as f64,
            cell_budget: self.cell_budget * (f * f),
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.domain.len() != d {
            return Err(GapError::DimensionMismatch { expected: d, got: self.domain.len() });
        }
        if self.base_cells == 0 || self.base_cells % 2 != 0 {
            return Err(GapError::InvalidParameter(
                "base_cells must be a positive even number".into(),
            ));
        }
        if self.shells < 2 || self.nodes_radial == 0 {
            return Err(GapError::InvalidParameter("need shells >= 2 and radial nodes".into()));
        }
        if !(self.min_cell_factor > 0.0) {
            return Err(GapError::InvalidParameter("min_cell_factor must be > 0".into()));
        }
        for iv in self.domain.iter().chain(self.local_domain.iter()) {
            if !(iv[0] < iv[1]) {
                return Err(GapError::InvalidParameter("degenerate domain box".into()));
            }
        }
        Ok(())
    }
}

/// Number of dyadic |y_d| buckets in the height spectrum.
pub const HEIGHT_BUCKETS: usize = 18;

/// An energy estimate with its dyadic-scale decomposition.
///
/// `value` is exactly the sum of `shell_contributions`; the excluded
/// diagonal band below the innermost shell is reported separately through
/// `tail_estimate` (geometric extrapolation of the trailing shells) and
/// folded into `best_estimate()`.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyValue {
    pub value: f64,
    /// Outer radius of each dyadic |y-z| shell, largest first.
    pub shell_scales: Vec<f64>,
    pub shell_contributions: Vec<f64>,
    /// Dyadic |y_d| buckets (fraction of the axis half-width, powers of 2).
    pub height_contributions: Vec<f64>,
    pub tail_estimate: Option<f64>,
    pub error_estimate: f64,
    pub node_count: u64,
    pub budget_exhausted: bool,
}

impl EnergyValue {
    pub fn best_estimate(&self) -> f64 {
        self.value + self.tail_estimate.unwrap_or(0.0)
    }

    pub(crate) fn assemble(
        shell_scales: Vec<f64>,
        shell_contributions: Vec<f64>,
        height_contributions: Vec<f64>,
        rough_mass: f64,
        node_count: u64,
        budget_exhausted: bool,
    ) -> Self {
        let mut acc = crate::fractal::KahanSum::default();
        for &c in &shell_contributions {
            acc.add(c);
        }
        let value = acc.value();
        let tail_estimate = extrapolate_tail(&shell_contributions);
        let error_estimate = tail_estimate
            .unwrap_or_else(|| shell_contributions.last().copied().unwrap_or(0.0).abs() * 3.0)
            + 0.5 * rough_mass;
        Self {
            value,
            shell_scales,
            shell_contributions,
            height_contributions,
            tail_estimate,
            error_estimate,
            node_count,
            budget_exhausted,
        }
    }
}

/// Geometric extrapolation of the sub-resolution tail from the trailing
/// shells; `None` when the spectrum does not clearly decay.
fn extrapolate_tail(shells: &[f64]) -> Option<f64> {
    let nz: Vec<f64> = shells.iter().copied().filter(|&m| m > 0.0).collect();
    if nz.len() < 3 {
        return if nz.is_empty() { Some(0.0) } else { None };
    }
    if shells.last().map_or(false, |&m| m == 0.0) {
        // Nothing left at the smallest resolved scales.
        return Some(0.0);
    }
    let k = nz.len().min(4);
    let tail = &nz[nz.len() - k..];
    let ratio = (tail[k - 1] / tail[0]).powf(1.0 / (k as f64 - 1.0));
    if !(ratio > 0.0) || ratio >= 0.95 {
        return None;
    }
    Some(tail[k - 1] * ratio / (1.0 - ratio))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Converges,
    Diverges,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Converges => "converges",
            Verdict::Diverges => "diverges",
            Verdict::Inconclusive => "inconclusive",
        };
        write!(f, "{s}")
    }
}

/// Result of the geometric-decay fit of a shell spectrum.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShellFit {
    /// Fitted per-shell ratio (contribution at scale r/2 over scale r).
    pub ratio: f64,
    /// Fitted decay exponent: contribution ∝ scale^exponent.
    pub exponent: f64,
    pub verdict: Verdict,
    pub scales_used: usize,
}

/// Fit a geometric decay to the trailing shells and classify:
/// ratio < 0.9 converges, ratio > 1.1 diverges, else inconclusive.
pub fn shell_diagnostic(ev: &EnergyValue) -> Result<ShellFit> {
    shell_fit(&ev.shell_contributions)
}

pub fn shell_fit(contributions: &[f64]) -> Result<ShellFit> {
    let floor = contributions.iter().cloned().fold(0.0f64, f64::max) * 1e-14;
    let nz: Vec<(usize, f64)> = contributions
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > floor && m > 0.0)
        .map(|(i, &m)| (i, m))
        .collect();
    if nz.is_empty() {
        // An identically-zero spectrum belongs to a zero energy.
        return Ok(ShellFit {
            ratio: 0.0,
            exponent: f64::INFINITY,
            verdict: Verdict::Converges,
            scales_used: 0,
        });
    }
    if nz.len() < 6 {
        return Err(GapError::InvalidParameter(format!(
            "shell spectrum has only {} populated dyadic scales; need >= 6",
            nz.len()
        )));
    }
    let window = &nz[nz.len().saturating_sub(8)..];
    // Least-squares slope of log2(m) against the shell index.
    let n = window.len() as f64;
    let sx: f64 = window.iter().map(|(i, _)| *i as f64).sum();
    let sy: f64 = window.iter().map(|(_, m)| m.log2()).sum();
    let sxx: f64 = window.iter().map(|(i, _)| (*i as f64).powi(2)).sum();
    let sxy: f64 = window.iter().map(|(i, m)| *i as f64 * m.log2()).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let ratio = slope.exp2();
    let verdict = if ratio < 0.9 {
        Verdict::Converges
    } else if ratio > 1.1 {
        Verdict::Diverges
    } else {
        Verdict::Inconclusive
    };
    Ok(ShellFit { ratio, exponent: -slope, verdict, scales_used: window.len() })
}
