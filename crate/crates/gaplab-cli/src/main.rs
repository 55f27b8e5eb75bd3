//! Batch front-end: subcommand dispatch over the gaplab laboratory with
//! reproducible CSV/JSON outputs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gaplab::competitor::{SubCompetitor, SubWeight, SuperCompetitor, SuperWeight};
use gaplab::config::{parse_config, RunConfig};
use gaplab::energy::{assemble_model, shell_diagnostic, SecondPhaseWeight};
use gaplab::experiments::{
    finiteness_scan, necklace_telescope_check, riesz_local_check, riesz_telescope_check,
    run_gap_sweep, SaddleField, TrigField,
};
use gaplab::field::Field;
use gaplab::fractal::{build_generation, loglog_slope, neighborhood_volume, CantorMeasure};
use gaplab::geometry::{necklace_enumerate, BarrierGeometry};
use gaplab::output::{fmt_f64, OutputWriter};
use gaplab::regimes::{
    classify_regime, dimension_window, gap_condition_in, window_consistency, Model, RegimeClass,
};
use gaplab::{GapError, Result};

#[derive(Parser)]
#[command(name = "gaplab", version, about = "Double-phase energy gap laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to a `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's out_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Refinement levels applied to the quadrature spec.
    #[arg(long, global = true)]
    refine: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Cantor generation intervals and scaling regressions as CSV.
    Cantor {
        /// Also dump the necklace elements.
        #[arg(long)]
        necklace: bool,
    },
    /// Regime classification and all four Table rows as JSON.
    Classify,
    /// Dimension window with both sides of each inequality.
    Window,
    /// Sample the competitor field on a grid (CSV).
    Competitor,
    /// Evaluate the model's two phases on the competitor.
    Energy,
    /// Mollification ε-sweep with the gap certificate.
    Sweep,
    /// Riesz-type inequality checks over randomized smooth fields.
    RieszCheck,
    /// Competitor finiteness scan across fractal dimensions.
    Scan,
    /// Parameter-regime report for the configured parameters.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let payload = serde_json::json!({
                "error": err.to_string(),
                "exit_code": err.exit_code(),
            });
            eprintln!("{payload}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
        None => parse_config("")?,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(refine) = cli.refine {
        cfg.refine = refine;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.display().to_string();
    }
    let writer = OutputWriter::new(
        &PathBuf::from(&cfg.out_dir),
        &cfg.resolved_text(),
        &cfg.one_line(),
    )?;

    match cli.command {
        Command::Cantor { necklace } => cmd_cantor(&cfg, &writer, necklace),
        Command::Classify => cmd_classify(&cfg, &writer),
        Command::Window => cmd_window(&cfg, &writer),
        Command::Competitor => cmd_competitor(&cfg, &writer),
        Command::Energy => cmd_energy(&cfg, &writer),
        Command::Sweep => cmd_sweep(&cfg, &writer),
        Command::RieszCheck => cmd_riesz_check(&cfg, &writer),
        Command::Scan => cmd_scan(&cfg, &writer),
        Command::Report => cmd_report(&cfg, &writer),
    }
}

fn cmd_cantor(cfg: &RunConfig, w: &OutputWriter, necklace: bool) -> Result<()> {
    let fractal = cfg.fractal_params()?;
    let gen = build_generation(&fractal)?;
    let rows: Vec<Vec<String>> = gen
        .intervals()
        .iter()
        .enumerate()
        .map(|(i, iv)| {
            vec![gen.level().to_string(), i.to_string(), fmt_f64(iv[0]), fmt_f64(iv[1])]
        })
        .collect();
    w.write_csv("intervals.csv", &["level", "index", "a", "b"], &rows)?;

    // Scaling regressions: ball mass at a set point over dyadic radii and
    // the fattened-volume law over powers of λ.
    let mu = CantorMeasure::new(&fractal)?;
    let x0 = 0.5;
    let mut ball_pts = Vec::new();
    let mut r = gen.interval_length();
    while r <= 1.0 {
        let center = vec![x0; fractal.m()];
        ball_pts.push((r, mu.measure_ball(&center, r)?));
        r *= 2.0;
    }
    let mut vol_pts = Vec::new();
    for j in 1..fractal.generation() {
        let rj = fractal.lambda().powi(j as i32);
        vol_pts.push((rj, neighborhood_volume(rj, &fractal)?));
    }
    let mut rows = Vec::new();
    for (r, v) in &ball_pts {
        rows.push(vec!["ball_mass".to_string(), fmt_f64(*r), fmt_f64(*v)]);
    }
    for (r, v) in &vol_pts {
        rows.push(vec!["neighborhood_volume".to_string(), fmt_f64(*r), fmt_f64(*v)]);
    }
    w.write_csv("scaling.csv", &["quantity", "r", "value"], &rows)?;
    let summary = serde_json::json!({
        "lambda": fractal.lambda(),
        "m": fractal.m(),
        "generation": fractal.generation(),
        "dimension": fractal.dimension(),
        "total_mass": mu.total_mass(),
        "ball_slope": loglog_slope(&ball_pts),
        "volume_slope": loglog_slope(&vol_pts),
        "expected_ball_slope": fractal.dimension(),
        "expected_volume_slope": fractal.m() as f64 - fractal.dimension(),
    });
    w.write_json("cantor_summary.json", &summary)?;

    if necklace {
        let elems = necklace_enumerate(fractal.lambda(), cfg.necklace_levels)?;
        let rows: Vec<Vec<String>> = elems
            .iter()
            .map(|e| {
                let up = e.upper_vertex(cfg.d);
                let lo = e.lower_vertex(cfg.d);
                vec![
                    e.level.to_string(),
                    e.index.to_string(),
                    fmt_f64(e.gap.0),
                    fmt_f64(e.gap.1),
                    fmt_f64(lo[cfg.d - 1]),
                    fmt_f64(up[cfg.d - 1]),
                ]
            })
            .collect();
        w.write_csv(
            "necklace.csv",
            &["level", "j", "a", "b", "lower_vertex_xd", "upper_vertex_xd"],
            &rows,
        )?;
    }
    Ok(())
}

/// All four Table rows evaluated at the configured (d, s, t, p, q, α), with
/// s and t pinned to 1 where the model's phase is local.
fn table_rows(cfg: &RunConfig) -> Vec<serde_json::Value> {
    let mut rows = Vec::new();
    for model in [Model::I, Model::II, Model::III, Model::IV] {
        let s_eff = if model.first_phase_local() { 1.0 } else { cfg.s.min(0.999_999_999) };
        let mut t_eff = if model.second_phase_local() { 1.0 } else { cfg.t.min(0.999_999_999) };
        if model == Model::IV && t_eff < s_eff {
            t_eff = s_eff;
        }
        let params = match gaplab::regimes::ModelParams::new(
            model, cfg.d, s_eff, t_eff, cfg.p, cfg.q, cfg.alpha,
        ) {
            Ok(p) => p,
            Err(e) => {
                rows.push(
                    serde_json::json!({ "model": model.to_string(), "error": e.to_string() }),
                );
                continue;
            }
        };
        let sub = gap_condition_in(&params, RegimeClass::Subcritical).ok();
        let sup = gap_condition_in(&params, RegimeClass::Supercritical).ok();
        rows.push(serde_json::json!({
            "model": model.to_string(),
            "s": params.s,
            "t": params.t,
            "subcritical": sub,
            "supercritical": sup,
        }));
    }
    rows
}

fn cmd_classify(cfg: &RunConfig, w: &OutputWriter) -> Result<()> {
    let params = cfg.model_params()?;
    let regime = classify_regime(&params);
    let payload = serde_json::json!({
        "params": params,
        "regime": regime,
        "rows": table_rows(cfg),
    });
    w.write_json("classify.json", &payload)?;
    println!("{}", serde_json::to_string_pretty(&payload).unwrap());
    Ok(())
}

fn cmd_window(cfg: &RunConfig, w: &OutputWriter) -> Result<()> {
    let params = cfg.model_params()?;
    let regime = classify_regime(&params);
    let gap = gaplab::regimes::gap_condition(&params)?;
    let window = dimension_window(&params)?;
    let consistency = window_consistency(&params, 4000)?;
    let payload = serde_json::json!({
        "params": params,
        "regime": regime,
        "gap_condition": gap,
        "window": window,
        "consistency": consistency,
    });
    w.write_json("window.json", &payload)?;
    println!("{}", serde_json::to_string_pretty(&payload).unwrap());
    Ok(())
}

fn competitor_field(cfg: &RunConfig) -> Result<Box<dyn Field>> {
    let params = cfg.model_params()?;
    let fractal = cfg.fractal_params()?;
    match classify_regime(&params).class {
        RegimeClass::Supercritical => Ok(Box::new(SuperCompetitor::new(fractal, cfg.d)?)),
        _ => {
            let geom = BarrierGeometry::transverse(fractal, cfg.tau, cfg.d)?;
            Ok(Box::new(SubCompetitor::new(geom)?))
        }
    }
}

fn cmd_competitor(cfg: &RunConfig, w: &OutputWriter) -> Result<()> {
    let field = competitor_field(cfg)?;
    let n = cfg.grid.max(2);
    let mut rows = Vec::new();
    let mut grad = vec![0.0f64; cfg.d];
    let mut x = vec![0.0f64; cfg.d];
    let mut index = vec![0usize; cfg.d];
    loop {
        for i in 0..cfg.d {
            x[i] = -1.0 + 2.0 * (index[i] as f64 + 0.5) / n as f64;
        }
        let value = field.eval(&x);
        let grad_norm = match field.gradient(&x, &mut grad) {
            Ok(()) => grad.iter().map(|t| t * t).sum::<f64>().sqrt(),
            Err(_) => f64::NAN,
        };
        let mut row: Vec<String> = x.iter().map(|t| fmt_f64(*t)).collect();
        row.push(fmt_f64(value));
        row.push(fmt_f64(grad_norm));
        rows.push(row);
        let mut dim = 0;
        loop {
            if dim == cfg.d {
                let mut cols: Vec<String> = (0..cfg.d).map(|i| format!("x{i}")).collect();
                cols.push("value".to_string());
                cols.push("grad_norm".to_string());
                let cols_ref: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
                w.write_csv("competitor.csv", &cols_ref, &rows)?;
                return Ok(());
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

fn cmd_energy(cfg: &RunConfig, w: &OutputWriter) -> Result<()> {
    let params = cfg.model_params()?;
    let spec = cfg.quadrature_spec()?;
    let fractal = cfg.fractal_params()?;
    let field = competitor_field(cfg)?;
    let regime = classify_regime(&params).class;

    // Regime- and model-appropriate second-phase weight.
    let energy = match (params.model.second_phase_local(), regime) {
        (true, RegimeClass::Supercritical) => {
            let weight = gaplab::experiments::AxialShellWeight::new(fractal, cfg.alpha, cfg.d)?;
            assemble_model(&params, field.as_ref(), &SecondPhaseWeight::Uni(&weight), &spec)?
        }
        (true, _) => {
            let geom = BarrierGeometry::transverse(fractal, cfg.tau, cfg.d)?;
            let weight = gaplab::competitor::LocalShellWeight::new(geom, cfg.alpha)?;
            assemble_model(&params, field.as_ref(), &SecondPhaseWeight::Uni(&weight), &spec)?
        }
        (false, RegimeClass::Supercritical) => {
            let neck = necklace_enumerate(fractal.lambda(), cfg.necklace_levels)?;
            let weight = SuperWeight::new(fractal, &neck, cfg.alpha, cfg.d)?;
            assemble_model(&params, field.as_ref(), &SecondPhaseWeight::Pair(&weight), &spec)?
        }
        (false, _) => {
            let geom = BarrierGeometry::transverse(fractal, cfg.tau, cfg.d)?;
            let weight = SubWeight::new(geom, cfg.alpha)?;
            assemble_model(&params, field.as_ref(), &SecondPhaseWeight::Pair(&weight), &spec)?
        }
    };

    let h = (spec.domain[0][1] - spec.domain[0][0]) / spec.base_cells as f64;
    let mut rows = Vec::new();
    for (phase, ev) in [("first", &energy.first), ("second", &energy.second)] {
        let verdict = shell_diagnostic(ev)
            .map(|f| f.verdict.to_string())
            .unwrap_or_else(|_| "n/a".into());
        rows.push(vec![
            params.model.to_string(),
            phase.to_string(),
            fmt_f64(params.s),
            fmt_f64(params.t),
            fmt_f64(params.p),
            fmt_f64(params.q),
            fmt_f64(params.alpha),
            fmt_f64(h),
            fmt_f64(ev.best_estimate()),
            fmt_f64(ev.error_estimate),
            verdict,
        ]);
    }
    w.write_csv(
        "energy.csv",
        &["model", "phase", "s", "t", "p", "q", "alpha", "h", "value", "error", "verdict"],
        &rows,
    )?;
    w.write_json("energy.json", &energy)?;
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig, w: &OutputWriter) -> Result<()> {
    let spec = cfg.sweep_spec()?;
    let report = run_gap_sweep(&spec)?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| vec![fmt_f64(r.eps), fmt_f64(r.first_phase), fmt_f64(r.second_phase)])
        .collect();
    w.write_csv("sweep_rows.csv", &["eps", "first_phase", "second_phase"], &rows)?;
    w.write_json("gap_report.json", &report)?;
    println!(
        "certificate: {} (c0 = {}, nu* = {})",
        report.certificate, report.c0, report.nu_star
    );
    Ok(())
}

fn cmd_riesz_check(cfg: &RunConfig, w: &OutputWriter) -> Result<()> {
    let mut rows = Vec::new();
    let mut max_cone = 0.0f64;
    let mut max_neck = 0.0f64;
    let mut min_saddle = f64::INFINITY;
    // cone-pair telescoping over random trigonometric fields
    for i in 0..cfg.samples {
        let v = TrigField::random(cfg.seed.wrapping_add(i as u64), 2);
        let xbar = -0.45 + 0.9 * (i as f64 + 0.5) / cfg.samples as f64;
        let s = riesz_telescope_check(&v, &[xbar, 0.0])?;
        max_cone = max_cone.max(s.ratio);
        rows.push(vec![
            "cone_pair".into(),
            i.to_string(),
            fmt_f64(s.lhs),
            fmt_f64(s.rhs),
            fmt_f64(s.ratio),
        ]);
    }
    // necklace vertex telescoping on the central diamond
    let neck = necklace_enumerate(cfg.lambda, 4)?;
    let central = neck
        .iter()
        .find(|n| n.level == 0)
        .ok_or_else(|| GapError::InvalidParameter("no central element".into()))?;
    for i in 0..cfg.samples {
        let v = TrigField::random(cfg.seed.wrapping_add(1000 + i as u64), 2);
        let s = necklace_telescope_check(&v, central, cfg.lambda)?;
        max_neck = max_neck.max(s.ratio);
        rows.push(vec![
            "necklace".into(),
            i.to_string(),
            fmt_f64(s.lhs),
            fmt_f64(s.rhs),
            fmt_f64(s.ratio),
        ]);
    }
    // saddle-point Riesz potential lower bound
    let geom = BarrierGeometry::transverse(
        gaplab::fractal::FractalParams::new(cfg.lambda, cfg.d - 1, cfg.generation)?,
        cfg.tau,
        cfg.d,
    )?;
    let u_c = SubCompetitor::new(geom)?;
    for i in 0..cfg.samples {
        let v = SaddleField::random(cfg.seed.wrapping_add(2000 + i as u64));
        let vals = riesz_local_check(&v, &u_c, &[0.0])?;
        min_saddle = min_saddle.min(vals[0]);
        rows.push(vec![
            "saddle_riesz".into(),
            i.to_string(),
            "1".into(),
            fmt_f64(vals[0]),
            fmt_f64(1.0 / vals[0]),
        ]);
    }
    w.write_csv("riesz_check.csv", &["lemma", "sample", "lhs", "rhs", "ratio"], &rows)?;
    w.write_json(
        "riesz_check.json",
        &serde_json::json!({
            "cone_pair_max_ratio": max_cone,
            "necklace_max_ratio": max_neck,
            "saddle_min_potential": min_saddle,
            "samples": cfg.samples,
        }),
    )?;
    Ok(())
}

fn cmd_scan(cfg: &RunConfig, w: &OutputWriter) -> Result<()> {
    let params = cfg.model_params()?;
    let spec = cfg.quadrature_spec()?;
    let mut grid = Vec::new();
    let mut d_frac = cfg.scan_lo;
    while d_frac <= cfg.scan_hi + 1e-12 {
        grid.push(d_frac);
        d_frac += cfg.scan_step;
    }
    let report = finiteness_scan(&params, &grid, &spec, cfg.generation)?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.d_frac),
                fmt_f64(r.lambda),
                fmt_f64(r.value),
                fmt_f64(r.ratio),
                fmt_f64(r.exponent),
                r.verdict.to_string(),
            ]
        })
        .collect();
    w.write_csv(
        "scan.csv",
        &["d_frac", "lambda", "value", "ratio", "exponent", "verdict"],
        &rows,
    )?;
    w.write_json("scan.json", &report)?;
    Ok(())
}

fn cmd_report(cfg: &RunConfig, w: &OutputWriter) -> Result<()> {
    let params = cfg.model_params()?;
    let regime = classify_regime(&params);
    let gap = gaplab::regimes::gap_condition(&params).ok();
    let window = dimension_window(&params).ok();
    let payload = serde_json::json!({
        "params": params,
        "regime": regime,
        "gap_condition": gap,
        "window": window,
        "rows": table_rows(cfg),
    });
    w.write_json("report.json", &payload)?;
    println!("{}", serde_json::to_string_pretty(&payload).unwrap());
    Ok(())
}
