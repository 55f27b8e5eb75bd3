//! Plain `key = value` run configuration: parsing with per-line errors,
//! validated ranges, and builders for the typed specs.

use std::collections::BTreeMap;

use crate::energy::{QuadMode, QuadratureSpec};
use crate::error::{GapError, Result};
use crate::experiments::SweepSpec;
use crate::fractal::FractalParams;
use crate::regimes::{classify_regime, Model, ModelParams, RegimeClass};

/// Every tunable of the laboratory as scalar entries. Unknown keys are
/// rejected at parse time with their line number.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: Model,
    pub d: usize,
    pub s: f64,
    pub t: f64,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,

    pub lambda: f64,
    pub m: Option<usize>,
    pub dimension: Option<f64>,
    pub generation: u32,
    pub tau: f64,
    pub necklace_levels: i32,

    pub quad_mode: QuadMode,
    pub base_cells: usize,
    pub shells: usize,
    pub nodes_radial: usize,
    pub nodes_angular: usize,
    pub min_cell_factor: f64,
    pub max_depth: u32,
    pub cell_budget: usize,
    pub domain_half_width: f64,
    pub mc_samples: usize,

    pub eps_start: f64,
    pub eps_factor: f64,
    pub eps_count: usize,
    pub mollifier_nodes: usize,
    pub weight_scale: f64,

    pub scan_lo: f64,
    pub scan_hi: f64,
    pub scan_step: f64,

    pub seed: u64,
    pub refine: u32,
    pub out_dir: String,
    pub samples: usize,
    pub grid: usize,
    pub tol: f64,

    set_keys: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: Model::IV,
            d: 2,
            s: 0.4,
            t: 0.8,
            p: 2.0,
            q: 2.0,
            alpha: 0.1,
            lambda: 1.0 / 3.0,
            m: None,
            dimension: None,
            generation: 12,
            tau: 4.0,
            necklace_levels: 8,
            quad_mode: QuadMode::TensorShell,
            base_cells: 48,
            shells: 14,
            nodes_radial: 4,
            nodes_angular: 12,
            min_cell_factor: 0.25,
            max_depth: 26,
            cell_budget: 30_000,
            domain_half_width: 3.0,
            mc_samples: 200_000,
            eps_start: 0.125,
            eps_factor: 0.5,
            eps_count: 5,
            mollifier_nodes: 8,
            weight_scale: 1.0,
            scan_lo: 0.55,
            scan_hi: 0.95,
            scan_step: 0.05,
            seed: 17,
            refine: 0,
            out_dir: "out".to_string(),
            samples: 20,
            grid: 40,
            tol: 1e-9,
            set_keys: Vec::new(),
        }
    }
}

fn cfg_err(line: usize, message: impl Into<String>) -> GapError {
    GapError::Config { line, message: message.into() }
}

macro_rules! parse_num {
    ($value:expr, $line:expr, $ty:ty) => {
        $value
            .parse::<$ty>()
            .map_err(|e| cfg_err($line, format!("cannot parse '{}': {e}", $value)))?
    };
}

/// Parse `key = value` lines (UTF-8, `#` comments). The first error is
/// reported with its line number; model-tag consistency is validated at
/// the end via the ModelParams invariants.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(cfg_err(line_no, format!("expected 'key = value', got '{line}'")));
        };
        let key = key.trim();
        let value = value.trim();
        cfg.apply(key, value, line_no)?;
        cfg.set_keys.push(key.to_string());
    }
    cfg.finalize()?;
    Ok(cfg)
}

impl RunConfig {
    fn apply(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        match key {
            "model" => self.model = Model::parse(value).map_err(|e| cfg_err(line, e.to_string()))?,
            "d" => {
                self.d = parse_num!(value, line, usize);
                if self.d < 2 {
                    return Err(cfg_err(line, "d must be >= 2"));
                }
            }
            "s" => {
                self.s = parse_num!(value, line, f64);
                if !(self.s > 0.0 && self.s <= 1.0) {
                    return Err(cfg_err(line, "s must lie in (0, 1]"));
                }
            }
            "t" => {
                self.t = parse_num!(value, line, f64);
                if !(self.t > 0.0 && self.t <= 1.0) {
                    return Err(cfg_err(line, "t must lie in (0, 1]"));
                }
            }
            "p" => {
                self.p = parse_num!(value, line, f64);
                if !(self.p > 1.0) {
                    return Err(cfg_err(line, "p must lie in (1, ∞)"));
                }
            }
            "q" => {
                self.q = parse_num!(value, line, f64);
                if !(self.q > 1.0) {
                    return Err(cfg_err(line, "q must lie in (1, ∞)"));
                }
            }
            "alpha" => {
                self.alpha = parse_num!(value, line, f64);
                if self.alpha < 0.0 {
                    return Err(cfg_err(line, "alpha must be >= 0"));
                }
            }
            "lambda" => {
                self.lambda = parse_num!(value, line, f64);
                if !(self.lambda > 0.0 && self.lambda < 0.5) {
                    return Err(cfg_err(line, "lambda must lie strictly in (0, 1/2)"));
                }
            }
            "m" => self.m = Some(parse_num!(value, line, usize)),
            "dimension" => {
                let dim = parse_num!(value, line, f64);
                if !(dim > 0.0) {
                    return Err(cfg_err(line, "dimension must be > 0"));
                }
                self.dimension = Some(dim);
            }
            "generation" => self.generation = parse_num!(value, line, u32),
            "tau" => {
                self.tau = parse_num!(value, line, f64);
                if !(self.tau > 0.0) {
                    return Err(cfg_err(line, "tau must be > 0"));
                }
            }
            "necklace_levels" => self.necklace_levels = parse_num!(value, line, i32),
            "quad_mode" => {
                self.quad_mode = match value {
                    "tensor-shell" => QuadMode::TensorShell,
                    "monte-carlo" => QuadMode::MonteCarlo,
                    other => {
                        return Err(cfg_err(line, format!("unknown quad_mode '{other}'")))
                    }
                }
            }
            "base_cells" => self.base_cells = parse_num!(value, line, usize),
            "shells" => self.shells = parse_num!(value, line, usize),
            "nodes_radial" => self.nodes_radial = parse_num!(value, line, usize),
            "nodes_angular" => self.nodes_angular = parse_num!(value, line, usize),
            "min_cell_factor" => self.min_cell_factor = parse_num!(value, line, f64),
            "max_depth" => self.max_depth = parse_num!(value, line, u32),
            "cell_budget" => self.cell_budget = parse_num!(value, line, usize),
            "domain_half_width" => {
                self.domain_half_width = parse_num!(value, line, f64);
                if !(self.domain_half_width > 0.0) {
                    return Err(cfg_err(line, "domain_half_width must be > 0"));
                }
            }
            "mc_samples" => self.mc_samples = parse_num!(value, line, usize),
            "eps_start" => {
                self.eps_start = parse_num!(value, line, f64);
                if !(self.eps_start > 0.0) {
                    return Err(cfg_err(line, "eps_start must be > 0"));
                }
            }
            "eps_factor" => {
                self.eps_factor = parse_num!(value, line, f64);
                if !(self.eps_factor > 0.0 && self.eps_factor < 1.0) {
                    return Err(cfg_err(line, "eps_factor must lie in (0, 1)"));
                }
            }
            "eps_count" => self.eps_count = parse_num!(value, line, usize),
            "mollifier_nodes" => self.mollifier_nodes = parse_num!(value, line, usize),
            "weight_scale" => {
                self.weight_scale = parse_num!(value, line, f64);
                if self.weight_scale < 0.0 {
                    return Err(cfg_err(line, "weight_scale must be >= 0"));
                }
            }
            "scan_lo" => self.scan_lo = parse_num!(value, line, f64),
            "scan_hi" => self.scan_hi = parse_num!(value, line, f64),
            "scan_step" => {
                self.scan_step = parse_num!(value, line, f64);
                if !(self.scan_step > 0.0) {
                    return Err(cfg_err(line, "scan_step must be > 0"));
                }
            }
            "seed" => self.seed = parse_num!(value, line, u64),
            "refine" => self.refine = parse_num!(value, line, u32),
            "out_dir" => self.out_dir = value.to_string(),
            "samples" => self.samples = parse_num!(value, line, usize),
            "grid" => self.grid = parse_num!(value, line, usize),
            "tol" => {
                self.tol = parse_num!(value, line, f64);
                if !(self.tol > 0.0) {
                    return Err(cfg_err(line, "tol must be > 0"));
                }
            }
            other => return Err(cfg_err(line, format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    fn was_set(&self, key: &str) -> bool {
        self.set_keys.iter().any(|k| k == key)
    }

    fn finalize(&mut self) -> Result<()> {
        // Pin s/t to 1 for the local phases unless set explicitly, so
        // `model = I` alone is a valid config.
        if self.model.first_phase_local() && !self.was_set("s") {
            self.s = 1.0;
        }
        if self.model.second_phase_local() && !self.was_set("t") {
            self.t = 1.0;
        }
        self.model_params().map_err(|e| cfg_err(0, e.to_string()))?;
        Ok(())
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::new(self.model, self.d, self.s, self.t, self.p, self.q, self.alpha)
    }

    /// The fractal the current regime calls for: transverse product set for
    /// the subcritical/critical setup, the axial line set supercritically.
    pub fn fractal_params(&self) -> Result<FractalParams> {
        let params = self.model_params()?;
        let m_default = match classify_regime(&params).class {
            RegimeClass::Supercritical => 1,
            _ => self.d - 1,
        };
        let m = self.m.unwrap_or(m_default);
        match self.dimension {
            Some(dim) => FractalParams::from_dimension(dim, m, self.generation),
            None => FractalParams::new(self.lambda, m, self.generation),
        }
    }

    /// The fractal dimension the sweep/scan should realize.
    pub fn target_dimension(&self) -> Result<f64> {
        Ok(self.fractal_params()?.dimension())
    }

    pub fn quadrature_spec(&self) -> Result<QuadratureSpec> {
        let w = self.domain_half_width;
        let spec = QuadratureSpec {
            mode: self.quad_mode,
            domain: vec![[-w, w]; self.d],
            local_domain: vec![[-1.0, 1.0]; self.d],
            base_cells: self.base_cells,
            shells: self.shells,
            nodes_radial: self.nodes_radial,
            nodes_angular: self.nodes_angular,
            min_cell_factor: self.min_cell_factor,
            max_depth: self.max_depth,
            cell_budget: self.cell_budget,
            use_symmetry: true,
            seed: self.seed,
            mc_samples: self.mc_samples,
        };
        spec.validate(self.d)?;
        Ok(spec.refine(self.refine))
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let params = self.model_params()?;
        let mut spec = SweepSpec::new(params, self.target_dimension()?)?;
        spec.quad = self.quadrature_spec()?;
        spec.generation = self.generation;
        spec.necklace_levels = self.necklace_levels;
        spec.mollifier_nodes = self.mollifier_nodes;
        spec.weight_scale = self.weight_scale;
        let mut eps = self.eps_start;
        spec.eps_schedule.clear();
        for _ in 0..self.eps_count.max(1) {
            spec.eps_schedule.push(eps);
            eps *= self.eps_factor;
        }
        Ok(spec)
    }

    /// Full resolved echo, one key per line, stable order.
    pub fn resolved_text(&self) -> String {
        let mut map = BTreeMap::new();
        map.insert("model", self.model.to_string());
        map.insert("d", self.d.to_string());
        map.insert("s", self.s.to_string());
        map.insert("t", self.t.to_string());
        map.insert("p", self.p.to_string());
        map.insert("q", self.q.to_string());
        map.insert("alpha", self.alpha.to_string());
        map.insert("lambda", self.lambda.to_string());
        if let Some(m) = self.m {
            map.insert("m", m.to_string());
        }
        if let Some(dim) = self.dimension {
            map.insert("dimension", dim.to_string());
        }
        map.insert("generation", self.generation.to_string());
        map.insert("tau", self.tau.to_string());
        map.insert("necklace_levels", self.necklace_levels.to_string());
        map.insert(
            "quad_mode",
            match self.quad_mode {
                QuadMode::TensorShell => "tensor-shell".to_string(),
                QuadMode::MonteCarlo => "monte-carlo".to_string(),
            },
        );
        map.insert("base_cells", self.base_cells.to_string());
        map.insert("shells", self.shells.to_string());
        map.insert("nodes_radial", self.nodes_radial.to_string());
        map.insert("nodes_angular", self.nodes_angular.to_string());
        map.insert("min_cell_factor", self.min_cell_factor.to_string());
        map.insert("max_depth", self.max_depth.to_string());
        map.insert("cell_budget", self.cell_budget.to_string());
        map.insert("domain_half_width", self.domain_half_width.to_string());
        map.insert("mc_samples", self.mc_samples.to_string());
        map.insert("eps_start", self.eps_start.to_string());
        map.insert("eps_factor", self.eps_factor.to_string());
        map.insert("eps_count", self.eps_count.to_string());
        map.insert("mollifier_nodes", self.mollifier_nodes.to_string());
        map.insert("weight_scale", self.weight_scale.to_string());
        map.insert("scan_lo", self.scan_lo.to_string());
        map.insert("scan_hi", self.scan_hi.to_string());
        map.insert("scan_step", self.scan_step.to_string());
        map.insert("seed", self.seed.to_string());
        map.insert("refine", self.refine.to_string());
        map.insert("out_dir", self.out_dir.clone());
        map.insert("samples", self.samples.to_string());
        map.insert("grid", self.grid.to_string());
        map.insert("tol", self.tol.to_string());
        map.iter().map(|(k, v)| format!("{k} = {v}")).collect::<Vec<_>>().join("\n")
    }

    /// Compact single-line echo for output-file headers.
    pub fn one_line(&self) -> String {
        self.resolved_text().replace('\n', "; ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_all_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.model, Model::IV);
        assert_eq!(cfg.d, 2);
        assert_eq!(cfg.generation, 12);
        assert!(cfg.model_params().is_ok());
    }

    #[test]
    fn comments_and_values_parse() {
        let text = "# a comment\nmodel = II\nq = 3.5   # trailing comment\nlambda = 0.25\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.model, Model::II);
        assert_eq!(cfg.q, 3.5);
        assert_eq!(cfg.lambda, 0.25);
        // t pinned to 1 for the local second phase
        assert_eq!(cfg.t, 1.0);
    }

    #[test]
    fn out_of_range_value_reports_line() {
        let text = "model = IV\nlambda = 0.6\n";
        match parse_config(text) {
            Err(GapError::Config { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("lambda"));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        match parse_config("lambada = 0.3\n") {
            Err(GapError::Config { line, message }) => {
                assert_eq!(line, 1);
                assert!(message.contains("unknown key"));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn model_tag_inconsistency_rejected() {
        let err = parse_config("model = IV\nt = 1.0\n");
        assert!(matches!(err, Err(GapError::Config { .. })));
        // while model II with t = 1 is fine
        assert!(parse_config("model = II\nt = 1.0\n").is_ok());
    }

    #[test]
    fn resolved_echo_is_stable() {
        let a = parse_config("model = IV\nseed = 5\n").unwrap().resolved_text();
        let b = parse_config("seed = 5\nmodel = IV\n").unwrap().resolved_text();
        assert_eq!(a, b);
        assert!(a.contains("seed = 5"));
    }

    #[test]
    fn dimension_overrides_lambda() {
        let cfg = parse_config("dimension = 0.65\n").unwrap();
        let f = cfg.fractal_params().unwrap();
        assert!((f.dimension() - 0.65).abs() < 1e-12);
    }
}
