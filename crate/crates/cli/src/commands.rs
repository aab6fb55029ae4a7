//! The subcommands. Each one reads a [`RunConfig`], writes its artifacts
//! under the output directory and leaves a manifest next to them.

use std::path::{Path, PathBuf};
use std::time::Instant;

use optdiv::hjb2d::{DiscreteHjb, ValueField};
use optdiv::model::{GridSpec, Regime, SurplusPoint};
use optdiv::simulate::{
    estimate_gap, simulate_policy, trace_policy_path, PolicyTable, SimResult, StrategySpec, TraceKind,
};
use optdiv::solver1d::{make_auxiliary_problem, merger_compare, solve_1d, AuxKind, BandLabel, OneDimSolution};
use optdiv::solver2d::{
    bound_violations, check_d1_identity, check_tilde_suboptimality, extract_regions, residual_check, solve,
    PolicyField, Region, RegionMap, Solution, SolveReport, TildeOutcome, DEFAULT_REL_TOL,
};
use optdiv::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{self, LabelStats, Manifest, PointOut, SegmentOut, Summary1d, Summary2d};

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or missing inputs.
    Usage(String),
    /// The iteration did not reach its tolerance.
    NoConvergence(String),
    /// `validate` ran and at least one check failed.
    ChecksFailed(usize),
    Other(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::ChecksFailed(_) => 1,
            Failure::Usage(_) => 2,
            Failure::NoConvergence(_) => 3,
            Failure::Other(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::NoConvergence(m) | Failure::Other(m) => f.write_str(m),
            Failure::ChecksFailed(k) => write!(f, "{k} check(s) failed"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParams(_) | Error::TruncationTooSmall(_) => Failure::Usage(e.to_string()),
            Error::NoConvergence { .. } | Error::ResidualTooLarge { .. } => Failure::NoConvergence(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

pub type CmdResult<T> = std::result::Result<T, Failure>;

/// Options shared by every subcommand after merging flags into the config.
pub struct Context {
    pub cfg: RunConfig,
    pub config_path: PathBuf,
    pub out: PathBuf,
    pub threads: usize,
    pub started: Instant,
}

impl Context {
    fn finish(&self, command: &str, artifacts: Vec<PathBuf>) -> CmdResult<()> {
        let manifest = Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.cfg.source.clone(),
            config_path: self.config_path.display().to_string(),
            mode: format!("{:?}", self.cfg.mode).to_lowercase(),
            threads: self.threads,
            seed: self.cfg.seed,
            wall_seconds: self.started.elapsed().as_secs_f64(),
            artifacts: artifacts
                .iter()
                .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
                .collect(),
        };
        output::write_json(&self.out, &Manifest::file_name(command), &manifest)?;
        Ok(())
    }
}

fn hjb(cfg: &RunConfig, grid: GridSpec) -> Result<DiscreteHjb> {
    Ok(DiscreteHjb::new(cfg.params, cfg.law, grid)?.with_eps_tie(cfg.eps_tie))
}

fn segments(map: &RegionMap, r: Region, slope: f64) -> Vec<SegmentOut> {
    map.diagonal_segments(r)
        .into_iter()
        .take(5)
        .map(|s| SegmentOut {
            start: [s.start.0, s.start.1],
            end: [s.end.0, s.end.1],
            nodes: s.nodes,
            horizontal_extent: s.horizontal_extent,
            slope,
        })
        .collect()
}

pub fn summarize_2d(cfg: &RunConfig, sol: &Solution, map: &RegionMap) -> Summary2d {
    let g = sol.value.grid;
    let labels = Region::ALL
        .iter()
        .map(|&r| LabelStats {
            label: r.name().to_string(),
            count: map.count(r),
            components: map.components(r, false).len(),
        })
        .collect();
    let c_components_in_d2 = map
        .components(Region::C, false)
        .into_iter()
        .filter(|c| map.component_in_d2(&cfg.params, c))
        .map(|c| c.len())
        .collect();
    Summary2d {
        a0_points: map
            .a0_points()
            .into_iter()
            .map(|a| PointOut {
                x1: a.x1,
                x2: a.x2,
                nodes: a.nodes,
            })
            .collect(),
        b0_components: map.components(Region::B0, false).len(),
        residual_max: sol.report.residual_max,
        iterations: sol.report.iterations,
        breakpoints: Vec::new(),
        grid: g,
        report: sol.report.clone(),
        labels,
        c_components_in_d2,
        a1_segments: segments(map, Region::A1, g.dx2 / g.dx1),
        a2_segments: segments(map, Region::A2, g.dx2 / g.dx1),
    }
}

pub fn solve2d(ctx: &Context) -> CmdResult<()> {
    let cfg = &ctx.cfg;
    let h = hjb(cfg, cfg.grid())?;
    let sol = solve(&h, &cfg.solve_options())?;
    let map = extract_regions(&sol.policy, &sol.value);
    let summary = summarize_2d(cfg, &sol, &map);
    let out = &ctx.out;
    let artifacts = vec![
        output::write(out, output::VALUE_CSV, &output::value_csv(&sol.value))?,
        output::write(out, output::POLICY_CSV, &output::policy_csv(&sol.policy, &map))?,
        output::write(out, output::REGIONS_DAT, &output::regions_dat(&map))?,
        output::write(out, output::REGIONS_GP, &output::regions_gp(&cfg.name))?,
        output::write_json(out, output::SUMMARY_2D, &summary)?,
    ];
    println!(
        "solve2d {}: {} sweeps, increment {:.3e}, residual {:.3e}, {:.1} s",
        cfg.name, sol.report.iterations, sol.report.final_increment, sol.report.residual_max, sol.report.wall_seconds
    );
    for a in &summary.a0_points {
        println!("  A0 point ({:.3}, {:.3})", a.x1, a.x2);
    }
    println!("  B0 components: {}", summary.b0_components);
    ctx.finish("solve2d", artifacts)
}

fn aux_name(kind: AuxKind) -> String {
    match kind {
        AuxKind::Wbar => "wbar".into(),
        AuxKind::Merger { cost } => format!("merger(cost={cost})"),
    }
}

pub fn solve_one_dim(cfg: &RunConfig, kind: AuxKind, delta: f64, x_max: f64) -> Result<OneDimSolution> {
    let prob = make_auxiliary_problem(&cfg.params, &cfg.law, kind)?;
    solve_1d(&prob, delta, x_max, &cfg.solve_options())
}

pub fn summarize_1d(kind: AuxKind, sol: &OneDimSolution) -> Summary1d {
    let b = &sol.bands;
    Summary1d {
        a0_points: b.a_points.clone(),
        b0_components: b.intervals.iter().filter(|i| i.label == BandLabel::B).count(),
        residual_max: sol.report.residual_max,
        iterations: sol.report.iterations,
        breakpoints: b.breakpoints.clone(),
        kind: aux_name(kind),
        delta: sol.delta,
        dx: sol.dx,
        c_bar: b.c_bar.iter().map(|&(a, b)| [a, b]).collect(),
        intervals: b.intervals.iter().map(|i| (i.label.name().to_string(), i.lo, i.hi)).collect(),
        report: sol.report.clone(),
    }
}

pub fn solve1d(ctx: &Context, kind: AuxKind) -> CmdResult<()> {
    let cfg = &ctx.cfg;
    let sol = solve_one_dim(cfg, kind, cfg.delta_1d, cfg.x_max_1d)?;
    let summary = summarize_1d(kind, &sol);
    let artifacts = vec![
        output::write(&ctx.out, output::VALUE_1D_CSV, &output::value_1d_csv(&sol))?,
        output::write_json(&ctx.out, output::BANDS_JSON, &summary)?,
    ];
    println!(
        "solve1d {} {}: {} sweeps, residual {:.3e}, breakpoints {:?}",
        cfg.name,
        summary.kind,
        sol.report.iterations,
        sol.report.residual_max,
        summary.breakpoints
    );
    ctx.finish("solve1d", artifacts)
}

/// Converged two-dimensional artifacts of an earlier `solve2d`.
pub struct Artifacts {
    pub value: ValueField,
    pub policy: PolicyField,
    pub summary: Summary2d,
}

pub fn load_artifacts(cfg: &RunConfig, dir: &Path) -> CmdResult<Artifacts> {
    let grid = cfg.grid();
    let need = [output::VALUE_CSV, output::POLICY_CSV, output::SUMMARY_2D];
    if let Some(missing) = need.iter().find(|f| !dir.join(f).is_file()) {
        return Err(Failure::Usage(format!(
            "missing artifact {} in {}; run solve2d with the same config first",
            missing,
            dir.display()
        )));
    }
    let summary: Summary2d = output::read_json(&dir.join(output::SUMMARY_2D)).map_err(|e| Failure::Usage(e.to_string()))?;
    if summary.grid != grid {
        return Err(Failure::Usage(format!("artifacts in {} were written for a different grid", dir.display())));
    }
    let value = output::read_value_csv(&dir.join(output::VALUE_CSV), grid).map_err(|e| Failure::Usage(e.to_string()))?;
    let policy =
        output::read_policy_csv(&dir.join(output::POLICY_CSV), grid).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(Artifacts { value, policy, summary })
}

/// Configured starting points, or five drawn from the seed in the lower
/// part of the window where the solver values do not depend on truncation.
pub fn sim_points(cfg: &RunConfig) -> Vec<SurplusPoint> {
    if !cfg.sim_points.is_empty() {
        return cfg.sim_points.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    (0..5)
        .map(|_| SurplusPoint {
            x1: rng.random::<f64>() * 0.6 * cfg.x1_max,
            x2: rng.random::<f64>() * 0.6 * cfg.x2_max,
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PointCheck {
    pub x1: f64,
    pub x2: f64,
    pub solver_value: f64,
    pub policy: SimResult,
    pub z: f64,
    pub take_and_run: SimResult,
    pub take_and_run_exact: f64,
    pub take_and_run_z: f64,
}

pub fn cross_check(cfg: &RunConfig, art: &Artifacts, paths: usize) -> CmdResult<Vec<PointCheck>> {
    let p = cfg.params;
    let table = PolicyTable::new(&p, &art.policy, &art.summary.report)?;
    let strat = StrategySpec::PolicyTable(Box::new(table));
    let mut out = Vec::new();
    // Separate seeds per point: starts above the band collapse onto the same
    // paths after the first lump and would otherwise give identical errors.
    for (i, x0) in sim_points(cfg).into_iter().enumerate() {
        let seed = cfg.seed.wrapping_add(i as u64);
        let v = art.value.extend_value(x0)?;
        let sim = simulate_policy(&p, &cfg.law, &strat, x0, paths, seed)?;
        let tr = simulate_policy(&p, &cfg.law, &StrategySpec::TakeAndRun, x0, paths, seed)?;
        let exact = x0.x1 + x0.x2 + p.take_and_run_offset();
        out.push(PointCheck {
            x1: x0.x1,
            x2: x0.x2,
            solver_value: v,
            z: estimate_gap(&sim, v)?,
            take_and_run_z: estimate_gap(&tr, exact)?,
            policy: sim,
            take_and_run: tr,
            take_and_run_exact: exact,
        });
    }
    Ok(out)
}

pub fn simulate(ctx: &Context, trace: Option<u64>) -> CmdResult<()> {
    let cfg = &ctx.cfg;
    let art = load_artifacts(cfg, &ctx.out)?;
    let checks = cross_check(cfg, &art, cfg.paths)?;
    for c in &checks {
        println!(
            "  x0 = ({:.3}, {:.3}): solver {:.5}, simulated {:.5} ± {:.5}, z = {:+.2}",
            c.x1, c.x2, c.solver_value, c.policy.mean, c.policy.std_error, c.z
        );
    }
    let mut artifacts = vec![output::write_json(&ctx.out, "simulate.json", &checks)?];
    if let Some(path) = trace {
        let table = PolicyTable::new(&cfg.params, &art.policy, &art.summary.report)?;
        let x0 = sim_points(cfg)[0];
        let horizon = checks[0].policy.horizon;
        let (total, events) = trace_policy_path(&cfg.params, &cfg.law, &table, x0, horizon, cfg.seed, path)?;
        let mut s = String::from("t,kind,x1,x2,dividend\n");
        for e in &events {
            s.push_str(&format!("{},{:?},{},{},{}\n", e.t, e.kind, e.x1, e.x2, e.dividend));
        }
        println!("  trace of path {path}: {} events, discounted dividends {total:.5}", events.len());
        artifacts.push(output::write(&ctx.out, &format!("trace-{path}.csv"), &s)?);
    }
    ctx.finish("simulate", artifacts)
}

#[derive(Debug, Clone, Serialize)]
pub struct MergerOut {
    pub cost: f64,
    pub samples: usize,
    pub undefined: usize,
    /// Smallest `V_M - V` over defined samples.
    pub min_difference: f64,
    /// Mean `|x1 - x2|` over samples where the merger is worse, and better.
    pub mean_gap_where_worse: Option<f64>,
    pub mean_gap_where_better: Option<f64>,
}

/// Samples every `stride`-th node where the pooled surplus stays inside the
/// merger window.
pub fn merger_table(cfg: &RunConfig, value: &ValueField, cost: f64) -> Result<(String, MergerOut)> {
    let g = value.grid;
    let merger = solve_one_dim(
        cfg,
        AuxKind::Merger { cost },
        cfg.delta,
        1.05 * (g.x1_max() + g.x2_max()) + cfg.params.upper_bound_offset().min(10.0),
    )?;
    let stride = (g.rows().max(g.cols()) / 60).max(1);
    let mut samples = Vec::new();
    for n in (0..g.rows()).step_by(stride) {
        for m in (0..g.cols()).step_by(stride) {
            samples.push(SurplusPoint { x1: g.x1(n), x2: g.x2(m) });
        }
    }
    let rows = merger_compare(&cfg.params, &merger, cost, &samples, value)?;
    let mut s = String::from("x1,x2,merger_reduced,two_branch_reduced,difference\n");
    let (mut worse, mut better) = (Vec::new(), Vec::new());
    let mut min_difference = f64::INFINITY;
    let mut undefined = 0;
    for r in &rows {
        match r.difference() {
            Some(d) => {
                s.push_str(&format!(
                    "{},{},{},{},{d}\n",
                    r.x1,
                    r.x2,
                    r.merger_reduced().unwrap_or(f64::NAN),
                    r.two_branch_reduced()
                ));
                min_difference = min_difference.min(d);
                let gap = (r.x1 - r.x2).abs();
                if d < 0.0 {
                    worse.push(gap);
                } else {
                    better.push(gap);
                }
            }
            None => {
                undefined += 1;
                s.push_str(&format!("{},{},,{},\n", r.x1, r.x2, r.two_branch_reduced()));
            }
        }
    }
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    Ok((
        s,
        MergerOut {
            cost,
            samples: rows.len(),
            undefined,
            min_difference,
            mean_gap_where_worse: mean(&worse),
            mean_gap_where_better: mean(&better),
        },
    ))
}

pub fn merger(ctx: &Context, cost: Option<f64>) -> CmdResult<()> {
    let cfg = &ctx.cfg;
    let art = load_artifacts(cfg, &ctx.out)?;
    let cost = cost.unwrap_or(cfg.merger_cost);
    let (csv, summary) = merger_table(cfg, &art.value, cost)?;
    println!(
        "merger-compare cost {cost}: min V_M - V = {:.4e}, mean |x1 - x2| where merger worse {:?}, better {:?}",
        summary.min_difference, summary.mean_gap_where_worse, summary.mean_gap_where_better
    );
    let artifacts = vec![
        output::write(&ctx.out, "merger.csv", &csv)?,
        output::write_json(&ctx.out, "merger.json", &summary)?,
    ];
    ctx.finish("merger-compare", artifacts)
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

struct Checks(Vec<CheckLine>);

impl Checks {
    fn add(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.0.push(CheckLine {
            name: name.to_string(),
            pass,
            detail,
        });
    }

    /// Records an error from a check as a failure instead of aborting.
    fn attempt(&mut self, name: &str, f: impl FnOnce() -> CmdResult<(bool, String)>) {
        match f() {
            Ok((pass, detail)) => self.add(name, pass, detail),
            Err(e) => self.add(name, false, format!("error: {e}")),
        }
    }
}

/// Tolerance of the default stopping rule for a field.
fn default_tol(v: &ValueField) -> f64 {
    DEFAULT_REL_TOL * (1.0 + v.sup())
}

pub fn validate(ctx: &Context) -> CmdResult<()> {
    let cfg = &ctx.cfg;
    let art = load_artifacts(cfg, &ctx.out)?;
    let p = cfg.params;
    let g = cfg.grid();
    let h = hjb(cfg, g)?;
    let v = &art.value;
    let tol = default_tol(v);
    let report: &SolveReport = &art.summary.report;
    let mut c = Checks(Vec::new());

    let res = residual_check(&h, v);
    c.add("residual", res <= 10.0 * tol, format!("max |T(v) - v| = {res:.3e}, bound {:.3e}", 10.0 * tol));
    c.add(
        "converged",
        report.final_increment < report.tol,
        format!("last increment {:.3e} below tolerance {:.3e}", report.final_increment, report.tol),
    );
    c.add(
        "monotone-iterates",
        report.min_increment >= 0.0,
        format!("smallest change over all sweeps {:.3e}", report.min_increment),
    );
    let b = bound_violations(&p, v);
    c.add("lower-bound", b.lower <= 1e-12 * (1.0 + v.sup()), format!("max (x1 + x2 - v) = {:.3e}", b.lower));
    c.add("upper-bound", b.upper <= 1e-12 * (1.0 + v.sup()), format!("max (v - x1 - x2 - (c1+c2)/q) = {:.3e}", b.upper));
    c.add(
        "lump-increments",
        b.increment1.max(b.increment2) <= 10.0 * tol,
        format!("max (dx - step increment) = {:.3e}", b.increment1.max(b.increment2)),
    );
    c.attempt("d1-identity", || {
        let r = check_d1_identity(&p, v, 100, cfg.seed)?;
        Ok((r.passes(), format!("max deviation {:.3e} over {} samples, bound {:.3e}", r.max_deviation, r.samples, r.bound)))
    });

    // one-dimensional problem on the line
    let wbar = solve_one_dim(cfg, AuxKind::Wbar, cfg.delta_1d, cfg.x_max_1d);
    c.attempt("wbar-solve", || {
        let w = wbar.as_ref().map_err(|e| Failure::from(e.clone()))?;
        let last = w.bands.intervals.last().map(|i| i.label);
        Ok((
            last == Some(BandLabel::B) && w.report.min_increment >= 0.0,
            format!(
                "{} sweeps, breakpoints {:?}, {} pay-the-premium nodes, top band {:?}",
                w.report.iterations,
                w.bands.breakpoints,
                w.bands.a_points.len(),
                last
            ),
        ))
    });
    c.attempt("wbar-bounds", || {
        let w = wbar.as_ref().map_err(|e| Failure::from(e.clone()))?;
        let prob = &w.problem;
        let mut worst_inc = f64::NEG_INFINITY;
        let mut worst_up = f64::NEG_INFINITY;
        for k in 0..=w.k_max() {
            worst_up = worst_up.max(w.values[k] - prob.upper_bound(w.x(k)));
            if k > 0 {
                worst_inc = worst_inc.max(prob.rho * w.dx - (w.values[k] - w.values[k - 1]));
            }
        }
        Ok((
            worst_up <= 0.0 && worst_inc <= 10.0 * w.report.tol,
            format!("upper-bound excess {worst_up:.3e}, lump-increment shortfall {worst_inc:.3e}"),
        ))
    });
    match p.regime() {
        Regime::Strict => c.attempt("tilde-witness", || {
            let w = wbar.as_ref().map_err(|e| Failure::from(e.clone()))?;
            match check_tilde_suboptimality(&p, &cfg.law, w)? {
                TildeOutcome::Witness(t) => Ok((
                    true,
                    format!("generator {:.4e} > 0 at ({:.4}, {:.4})", t.generator, t.point.x1, t.point.x2),
                )),
                TildeOutcome::NotFound(t) => Ok((false, format!("largest generator {:.4e}", t.generator))),
                TildeOutcome::EmptyNoPayBand => Ok((true, "no no-pay band: paying everything is optimal on the line".into())),
            }
        }),
        Regime::Symmetric => {
            c.attempt("tilde-refused", || {
                let w = wbar.as_ref().map_err(|e| Failure::from(e.clone()))?;
                let refused = matches!(check_tilde_suboptimality(&p, &cfg.law, w), Err(Error::NotApplicable(_)));
                Ok((refused, "line strategy is optimal here; the check must refuse".into()))
            });
            c.attempt("line-equality", || {
                let w = wbar.as_ref().map_err(|e| Failure::from(e.clone()))?;
                let d = line_deviation(&p, v, w)?;
                Ok((d <= 1e-2, format!("max relative gap between the 2D field on the line and W̄: {d:.3e}")))
            });
        }
    }
    c.attempt("merger-dominance", || {
        let (_, m) = merger_table(cfg, v, 0.0)?;
        let slack = 100.0 * tol;
        Ok((m.min_difference >= -slack, format!("min V_M(x1+x2) - V = {:.4e}, slack {slack:.1e}", m.min_difference)))
    });
    if cfg.validate_doubling {
        c.attempt("window-doubling", || {
            let wide = GridSpec { n_max: 2 * g.n_max, m_max: 2 * g.m_max, ..g };
            let sol = solve(&hjb(cfg, wide)?, &cfg.solve_options())?;
            let mut d = 0.0f64;
            for n in 0..g.rows() {
                for m in 0..g.cols() {
                    d = d.max((sol.value.get(n, m) - v.get(n, m)).abs());
                }
            }
            Ok((d < 100.0 * tol, format!("max change on the original window {d:.3e}, bound {:.3e}", 100.0 * tol)))
        });
    }

    // simulation
    c.attempt("sim-reproducible", || {
        let table = PolicyTable::new(&p, &art.policy, report)?;
        let strat = StrategySpec::PolicyTable(Box::new(table));
        let x0 = sim_points(cfg)[0];
        let a = simulate_policy(&p, &cfg.law, &strat, x0, 2000, cfg.seed)?;
        let b = simulate_policy(&p, &cfg.law, &strat, x0, 2000, cfg.seed)?;
        Ok((a == b, format!("two runs with seed {} agree bit for bit: {}", cfg.seed, a == b)))
    });
    c.attempt("sim-paths", || {
        let table = PolicyTable::new(&p, &art.policy, report)?;
        let mut bad = 0;
        let mut events = 0;
        for (i, x0) in sim_points(cfg).into_iter().enumerate() {
            for path in 0..20 {
                let (_, ev) = trace_policy_path(&p, &cfg.law, &table, x0, 200.0, cfg.seed, (i * 20 + path) as u64)?;
                events += ev.len();
                bad += ev
                    .iter()
                    .filter(|e| match e.kind {
                        TraceKind::Ruin => false,
                        TraceKind::LumpE1 => e.dividend != g.dx1 || e.x1 < 0.0 || e.x2 < 0.0,
                        TraceKind::LumpE2 => e.dividend != g.dx2 || e.x1 < 0.0 || e.x2 < 0.0,
                        _ => e.dividend < 0.0 || e.x1 < 0.0 || e.x2 < 0.0,
                    })
                    .count();
            }
        }
        Ok((bad == 0, format!("{bad} bad events out of {events}")))
    });
    match cross_check(cfg, &art, cfg.paths) {
        Ok(points) => {
            for pc in &points {
                let at = format!("({:.3}, {:.3})", pc.x1, pc.x2);
                c.add(
                    &format!("sim-policy {at}"),
                    pc.z.abs() <= 3.0,
                    format!("solver {:.5}, simulated {:.5} ± {:.5}, z = {:+.2}", pc.solver_value, pc.policy.mean, pc.policy.std_error, pc.z),
                );
                c.add(
                    &format!("sim-take-and-run {at}"),
                    pc.take_and_run_z.abs() <= 3.0,
                    format!("exact {:.5}, simulated {:.5}, z = {:+.2}", pc.take_and_run_exact, pc.take_and_run.mean, pc.take_and_run_z),
                );
            }
        }
        Err(e) => c.add("sim-policy", false, format!("error: {e}")),
    }

    let failed = c.0.iter().filter(|l| !l.pass).count();
    let mut text = String::new();
    for l in &c.0 {
        text.push_str(&format!("{} {}: {}\n", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail));
    }
    let artifacts = vec![
        output::write(&ctx.out, "validate.txt", &text)?,
        output::write_json(&ctx.out, "validate.json", &c.0)?,
    ];
    ctx.finish("validate", artifacts)?;
    if failed > 0 {
        Err(Failure::ChecksFailed(failed))
    } else {
        Ok(())
    }
}

/// Largest relative gap between the two-dimensional field on the line and
/// `W̄`, over line points inside the window.
pub fn line_deviation(p: &optdiv::model::ModelParams, v: &ValueField, w: &OneDimSolution) -> Result<f64> {
    let g = v.grid;
    let ratio = p.b1 / p.b2;
    let mut worst = 0.0f64;
    for m in 0..g.cols() {
        let x2 = g.x2(m);
        let x1 = ratio * x2;
        if x1 > g.x1_max() || x2 > w.x_max() {
            break;
        }
        let a = v.extend_value(SurplusPoint { x1, x2 })?;
        let b = w.value_at(x2)?;
        worst = worst.max((a - b).abs() / b.abs().max(1e-300));
    }
    Ok(worst)
}
