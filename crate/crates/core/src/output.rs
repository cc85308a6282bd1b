//! Running configured experiments and writing their results.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use crate::config::{DiagnosticsLevel, Reference, RunConfig};
use crate::diagnostics::{symmetry_report, uip_check, verify_solution_characterization};
use crate::discretization::{build_grid, Discretization};
use crate::driver::{run, NashSummary, Outcome, OutcomeKind};
use crate::error::Result;
use crate::matrix::{check_a0_doubleprime_sampled, Index};

pub const SOLUTION_HEADER: &str = "x,v,in_intervention,delta_star,impulse_target,residual";

/// Strategy pairs sampled by the full diagnostics.
pub const A0_SAMPLES: usize = 100;

/// Relative tolerance for counting tied impulses in the UIP check.
pub const UIP_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub h: f64,
    pub nodes: usize,
    pub kind: OutcomeKind,
    pub iters: usize,
    pub last_diff: Option<f64>,
    pub max_res: f64,
    pub max_res_excluding_spikes: f64,
    pub nash: NashSummary,
    pub alternated: usize,
    pub one_sided: usize,
    pub max_norm: f64,
    pub inner_failures: usize,
    pub uip: Option<bool>,
    pub characterization_gap: Option<f64>,
    pub symmetric_consistent: Option<bool>,
    pub a0_max_con: Option<(bool, Index)>,
    /// Largest outer-relation residual over the iterates.
    pub relation_residual: Option<f64>,
    pub boundary_error: Option<f64>,
    pub target_error: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub disc: Discretization,
    pub outcome: Outcome,
    pub summary: RunSummary,
}

pub fn discretize(cfg: &RunConfig, h: f64) -> Result<Discretization> {
    let grid = build_grid(cfg.grid.x_max, h)?;
    Discretization::new(cfg.game.clone(), grid, cfg.boundary(), cfg.grid.impulse_mode)
}

fn reference_error(reference: Option<&Reference>, pick: fn(&Reference) -> Option<f64>, got: Option<f64>) -> Option<f64> {
    Some((pick(reference?)? - got?).abs())
}

pub fn summarize(cfg: &RunConfig, disc: &Discretization, outcome: &Outcome, seed: u64) -> Result<RunSummary> {
    let level = cfg.output.diagnostics;
    let mut warnings = Vec::new();
    if cfg.boundary_is_heuristic() {
        warnings.push("boundary slopes default to zero for a non-affine game".to_string());
    }
    if !disc.nonpositive_costs.is_empty() {
        warnings.push(format!(
            "cost is nonpositive for {} impulse sizes",
            disc.nonpositive_costs.len()
        ));
    }
    if outcome.inner_failures > 0 {
        warnings.push(format!("{} inner solves hit their iteration cap", outcome.inner_failures));
    }
    if let OutcomeKind::Cycled(_) = outcome.kind {
        warnings.push("iteration cycles; a symmetric equilibrium may not exist".to_string());
    }
    if outcome.kind == OutcomeKind::ConvergedExact && outcome.residual.max_excluding_spikes > 1e-10 {
        warnings.push(format!(
            "converged payoff leaves a residual of {:e} away from spike nodes",
            outcome.residual.max_excluding_spikes
        ));
    }
    if !outcome.degenerate.is_clean() {
        warnings.push("degenerate intervention pattern detected".to_string());
    }
    let diag = level != DiagnosticsLevel::Off;
    let full = level == DiagnosticsLevel::Full;
    let characterization_gap = if full {
        Some(verify_solution_characterization(disc, &outcome.v)?.gap)
    } else {
        None
    };
    let relation_residual = outcome
        .history
        .iter()
        .filter_map(|r| r.invariants.map(|c| c.relation_residual))
        .reduce(f64::max);
    Ok(RunSummary {
        h: disc.grid.h(),
        nodes: disc.len(),
        kind: outcome.kind,
        iters: outcome.iters,
        last_diff: outcome.history.last().map(|r| r.diff),
        max_res: outcome.residual.max,
        max_res_excluding_spikes: outcome.residual.max_excluding_spikes,
        nash: outcome.nash,
        alternated: outcome.degenerate.alternated.len(),
        one_sided: outcome.degenerate.one_sided.len(),
        max_norm: outcome.max_norm,
        inner_failures: outcome.inner_failures,
        uip: diag.then(|| uip_check(disc, &outcome.v, UIP_REL_TOL).holds),
        characterization_gap,
        symmetric_consistent: full.then(|| symmetry_report(disc, &outcome.v, &outcome.policy).consistent),
        a0_max_con: full.then(|| {
            let r = check_a0_doubleprime_sampled(disc, A0_SAMPLES, seed);
            (r.holds, r.max_con)
        }),
        relation_residual,
        boundary_error: reference_error(cfg.reference.as_ref(), |r| r.boundary, outcome.nash.boundary),
        target_error: reference_error(cfg.reference.as_ref(), |r| r.target, outcome.nash.target),
        warnings,
    })
}

/// Runs the configured game at step `h`.
pub fn execute(cfg: &RunConfig, h: f64, seed: u64) -> Result<RunArtifacts> {
    let disc = discretize(cfg, h)?;
    let mut params = cfg.driver.clone();
    params.check_invariants |= cfg.output.diagnostics == DiagnosticsLevel::Full;
    let outcome = run(&disc, &cfg.solver, &params)?;
    let summary = summarize(cfg, &disc, &outcome, seed)?;
    Ok(RunArtifacts {
        disc,
        outcome,
        summary,
    })
}

/// Runs every step size in parallel; results keep the order of `hs`.
pub fn sweep(cfg: &RunConfig, hs: &[f64], seed: u64) -> Vec<Result<RunArtifacts>> {
    hs.par_iter().map(|&h| execute(cfg, h, seed)).collect()
}

/// Scientific notation with `precision` significant digits.
pub fn format_real(x: f64, precision: usize) -> String {
    format!("{:.*e}", precision.saturating_sub(1), x)
}

pub fn write_solution_csv<W: Write>(
    mut w: W,
    disc: &Discretization,
    outcome: &Outcome,
    precision: usize,
) -> Result<()> {
    let grid = &disc.grid;
    let spec = &disc.spec;
    let (_, steps) = disc.loss_operator(&outcome.v);
    writeln!(w, "{SOLUTION_HEADER}")?;
    for i in 0..disc.len() {
        let delta = disc.impulse_value(steps[i]);
        writeln!(
            w,
            "{},{},{},{},{},{}",
            format_real(spec.unshift(grid.x(i)), precision),
            format_real(outcome.v[i], precision),
            u8::from(outcome.policy.intervene[i]),
            format_real(delta, precision),
            format_real(spec.unshift(grid.x(i + steps[i])), precision),
            format_real(outcome.residual.residual[i], precision),
        )?;
    }
    Ok(())
}

pub fn solution_csv(disc: &Discretization, outcome: &Outcome, precision: usize) -> String {
    let mut buf = Vec::new();
    write_solution_csv(&mut buf, disc, outcome, precision).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Shortest round-trip form; scientific notation for tiny or huge magnitudes.
fn real(x: f64) -> String {
    if x != 0.0 && !(1e-4..1e7).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), real)
}

fn flag(x: Option<bool>) -> &'static str {
    match x {
        None => "skipped",
        Some(true) => "holds",
        Some(false) => "fails",
    }
}

/// `key=value` lines describing one run.
pub fn report(s: &RunSummary) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| writeln!(out, "{k}={v}").expect("writing to string");
    kv("h", real(s.h));
    kv("nodes", s.nodes.to_string());
    kv("outcome", s.kind.to_string());
    kv("iterations", s.iters.to_string());
    kv("last_diff", opt(s.last_diff));
    kv("max_residual", real(s.max_res));
    kv("max_residual_excluding_spikes", real(s.max_res_excluding_spikes));
    kv("boundary", opt(s.nash.boundary));
    kv("target", opt(s.nash.target));
    kv("target_min", opt(s.nash.target_range.map(|r| r.0)));
    kv("target_max", opt(s.nash.target_range.map(|r| r.1)));
    kv("opponent_boundary", opt(s.nash.opponent_boundary));
    kv("opponent_target", opt(s.nash.opponent_target));
    kv("boundary_error", opt(s.boundary_error));
    kv("target_error", opt(s.target_error));
    kv("alternated_interventions", s.alternated.to_string());
    kv("one_sided_chains", s.one_sided.to_string());
    kv("max_norm", real(s.max_norm));
    kv("inner_failures", s.inner_failures.to_string());
    kv("unique_impulse", flag(s.uip).to_string());
    kv("characterization_gap", opt(s.characterization_gap));
    kv("symmetry", flag(s.symmetric_consistent).to_string());
    if let Some((holds, con)) = s.a0_max_con {
        kv("sampled_connectivity_max", con.to_string());
        kv("sampled_connectivity_bound", flag(Some(holds)).to_string());
    }
    kv("relation_residual", opt(s.relation_residual));
    for w in &s.warnings {
        kv("warning", w.clone());
    }
    out
}

pub const SWEEP_HEADER: &str =
    "h,outcome,iterations,boundary,target,boundary_error,target_error,max_residual,max_residual_excluding_spikes";

pub fn sweep_table(rows: &[RunSummary]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for s in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            real(s.h),
            s.kind,
            s.iters,
            opt(s.nash.boundary),
            opt(s.nash.target),
            opt(s.boundary_error),
            opt(s.target_error),
            real(s.max_res),
            real(s.max_res_excluding_spikes)
        )
        .expect("writing to string");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    const CFG: &str = "
[game]
sigma0 = 0.15
rho = 0.02
f_poly = 3, 1
c0 = 100
c1 = 15
g1 = 15
[grid]
x_max = 4
h = 1
[solver]
tol = 0
[reference]
boundary = -3
";

    #[test]
    fn csv_has_one_row_per_node() {
        let cfg = parse_config(CFG).unwrap();
        let art = execute(&cfg, 1.0, 0).unwrap();
        let csv = solution_csv(&art.disc, &art.outcome, 17);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SOLUTION_HEADER);
        assert_eq!(lines.len(), 10);
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(first.len(), 6);
        assert_eq!(first[0].parse::<f64>().unwrap(), -4.0);
        assert_eq!(first[1].parse::<f64>().unwrap(), art.outcome.v[0]);
    }

    #[test]
    fn report_lists_outcome_and_errors() {
        let cfg = parse_config(CFG).unwrap();
        let art = execute(&cfg, 1.0, 0).unwrap();
        let r = report(&art.summary);
        assert!(r.contains("outcome=ConvergedExact\n"));
        assert!(r.contains("boundary=-3\n"));
        assert!(r.contains("boundary_error=0\n"));
        assert!(r.contains("target_error=none\n"));
        assert!(r.contains("unique_impulse=holds\n"));
    }

    #[test]
    fn sweep_keeps_order() {
        let cfg = parse_config(CFG).unwrap();
        let rows: Vec<RunSummary> = sweep(&cfg, &[1.0, 0.5], 0)
            .into_iter()
            .map(|r| r.unwrap().summary)
            .collect();
        assert_eq!((rows[0].h, rows[1].h), (1.0, 0.5));
        let table = sweep_table(&rows);
        assert_eq!(table.lines().count(), 3);
        assert!(table.lines().nth(2).unwrap().starts_with("0.5,ConvergedExact,13,"));
    }

    #[test]
    fn real_formatting_round_trips() {
        let x = 0.1 + 0.2;
        assert_eq!(format_real(x, 17).parse::<f64>().unwrap(), x);
        assert_eq!(format_real(1.5, 3), "1.50e0");
    }
}
