//! Monte Carlo evaluation of dividend strategies.
//!
//! Paths draw exponential inter-arrival times and claim sizes; dividends paid
//! as premium streams between events are discounted in closed form, so the
//! only discretisation is the one built into the strategy itself.
//!
//! Every path `i` uses its own ChaCha8 stream `(seed, i)`, which keeps results
//! bit-identical regardless of the number of threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hjb2d::{floor_cell, Action};
use crate::model::{ClaimLaw, GridSpec, ModelParams, SurplusPoint};
use crate::solver1d::{BandStructure, OneDimProblem};
use crate::solver2d::{PolicyField, SolveReport};

pub const RNG_NAME: &str = "ChaCha8Rng(seed_from_u64(seed), stream = path index)";

/// Paths used to estimate the spread before the horizon is fixed.
const PILOT_PATHS: usize = 1000;
/// Streams of pilot paths start here so they never overlap the main run.
const PILOT_STREAM: u64 = 1 << 62;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub mean: f64,
    pub std_error: f64,
    pub paths: usize,
    /// Paths are stopped at this time; the discounted value of anything later
    /// is below a tenth of `std_error`.
    pub horizon: f64,
    pub seed: u64,
    pub rng: String,
}

/// δ-optimal grid strategy of a converged solve, prepared for fast
/// simulation.
#[derive(Debug, Clone)]
pub struct PolicyTable {
    params: ModelParams,
    grid: GridSpec,
    /// Action taken at each node; lumps are preferred over waiting on ties.
    choice: Vec<Action>,
    /// Node where the lump chain started at each node stops, and its total.
    settle: Vec<(u32, f64)>,
    /// `jumps[k][i]`: waiting node reached after `2^k` claim-free periods.
    jumps: Vec<Vec<u32>>,
    /// Dividends of those periods, discounted to the first period's start.
    pays: Vec<Vec<f64>>,
}

impl PolicyTable {
    /// Rejects policies whose solve did not meet its tolerance.
    pub fn new(params: &ModelParams, policy: &PolicyField, report: &SolveReport) -> Result<Self> {
        let params = params.validate()?;
        if !(report.final_increment < report.tol) || !(report.residual_max <= 10.0 * report.tol) {
            return Err(Error::InvalidArgument(format!(
                "policy comes from an unconverged solve (increment {:e}, tolerance {:e})",
                report.final_increment, report.tol
            )));
        }
        let g = policy.grid;
        if (g.dx1 - params.c1 * g.delta).abs() > 1e-12 * g.dx1 || (g.dx2 - params.c2 * g.delta).abs() > 1e-12 * g.dx2 {
            return Err(Error::InvalidArgument("policy grid does not match the premium rates".into()));
        }
        let choice: Vec<Action> = policy
            .actions()
            .iter()
            .map(|s| {
                if s.contains(Action::E1) {
                    Action::E1
                } else if s.contains(Action::E2) {
                    Action::E2
                } else {
                    Action::E0
                }
            })
            .collect();
        let mut settle = vec![(0u32, 0.0); g.len()];
        for n in 0..g.rows() {
            for m in 0..g.cols() {
                let i = g.index(n, m);
                settle[i] = match choice[i] {
                    Action::E1 => {
                        let (j, p) = settle[g.index(n - 1, m)];
                        (j, p + g.dx1)
                    }
                    Action::E2 => {
                        let (j, p) = settle[g.index(n, m - 1)];
                        (j, p + g.dx2)
                    }
                    _ => (i as u32, 0.0),
                };
            }
        }
        let mut table = Self {
            params,
            grid: g,
            choice,
            settle,
            jumps: Vec::new(),
            pays: Vec::new(),
        };
        let disc = (-params.q * g.delta).exp();
        let mut jump0 = vec![0u32; g.len()];
        let mut pay0 = vec![0.0; g.len()];
        for n in 0..g.rows() {
            for m in 0..g.cols() {
                let (j, p) = table.enter(n + 1, m + 1);
                jump0[g.index(n, m)] = j;
                pay0[g.index(n, m)] = disc * p;
            }
        }
        table.jumps.push(jump0);
        table.pays.push(pay0);
        // enough levels for the longest horizon the pilot rule can ask for
        let periods = (1e12f64.ln() / params.q / g.delta).ceil().max(1.0);
        let levels = (periods.log2().ceil() as usize).clamp(1, 40);
        for k in 1..levels {
            let step = (-params.q * g.delta * (1u64 << (k - 1)) as f64).exp();
            let (pj, pp) = (&table.jumps[k - 1], &table.pays[k - 1]);
            let mut nj = vec![0u32; g.len()];
            let mut np = vec![0.0; g.len()];
            for i in 0..g.len() {
                let mid = pj[i] as usize;
                nj[i] = pj[mid];
                np[i] = pp[i] + step * pp[mid];
            }
            table.jumps.push(nj);
            table.pays.push(np);
        }
        Ok(table)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Lands on node `(k1, k2)`, possibly outside the window, and follows the
    /// lumps from there: the waiting node reached and the amount paid.
    #[inline]
    fn enter(&self, k1: usize, k2: usize) -> (u32, f64) {
        let g = &self.grid;
        let n = k1.min(g.n_max);
        let m = k2.min(g.m_max);
        let excess = (k1 - n) as f64 * g.dx1 + (k2 - m) as f64 * g.dx2;
        let (j, p) = self.settle[g.index(n, m)];
        (j, p + excess)
    }

    /// Advances `periods` claim-free periods from waiting node `node`.
    #[inline]
    fn jump(&self, mut node: u32, mut periods: u64, t: &mut f64, total: &mut f64) -> u32 {
        let q = self.params.q;
        let delta = self.grid.delta;
        for k in (0..self.jumps.len()).rev() {
            let len = 1u64 << k;
            while periods >= len {
                *total += (-q * *t).exp() * self.pays[k][node as usize];
                node = self.jumps[k][node as usize];
                *t += len as f64 * delta;
                periods -= len;
            }
        }
        node
    }
}

/// Strategy on the simultaneous-ruin line: pay the excess of the branch
/// ahead, then follow the band strategy of `W̄` along the line.
#[derive(Debug, Clone)]
pub struct LineBands {
    problem: OneDimProblem,
    /// No-pay intervals `(lo, hi)`, open at `lo` unless `lo = 0`.
    waits: Vec<(f64, f64)>,
    /// Levels where the incoming premium is paid.
    holds: Vec<f64>,
}

impl LineBands {
    pub fn new(problem: &OneDimProblem, bands: &BandStructure) -> Result<Self> {
        let problem = problem.validate()?;
        let waits = bands.c_bar.clone();
        let mut holds: Vec<f64> = waits.iter().map(|&(_, hi)| hi).collect();
        if !waits.iter().any(|&(lo, _)| lo == 0.0) {
            holds.push(0.0);
        }
        holds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        holds.dedup();
        Ok(Self { problem, waits, holds })
    }

    /// After any lump: `(level, lump paid, top of the current no-pay run)`.
    /// `top = None` means the level is a holding point.
    fn settle(&self, y: f64) -> (f64, f64, Option<f64>) {
        for &(lo, hi) in &self.waits {
            if (y > lo || (lo == 0.0 && y == 0.0)) && y < hi {
                return (y, 0.0, Some(hi));
            }
        }
        let target = self.holds.iter().copied().filter(|&h| h <= y).fold(0.0, f64::max);
        (target, y - target, None)
    }
}

#[derive(Debug, Clone)]
pub enum StrategySpec {
    PolicyTable(Box<PolicyTable>),
    /// Pay everything now and the premiums until the first claim.
    TakeAndRun,
    MReflection(LineBands),
}

fn check_x0(x0: SurplusPoint) -> Result<SurplusPoint> {
    SurplusPoint::new(x0.x1, x0.x2)
}

/// `∫_a^b e^{-qs} ds`
#[inline]
fn disc_integral(q: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    (-q * a).exp() * (-(-q * (b - a)).exp_m1()) / q
}

struct Sampler {
    wait: Option<Exp<f64>>,
    law: ClaimLaw,
    size: Option<Exp<f64>>,
}

impl Sampler {
    fn new(params: &ModelParams, law: &ClaimLaw) -> Result<Self> {
        let law = law.validate()?;
        let wait = if params.lambda > 0.0 {
            Some(Exp::new(params.lambda).map_err(|e| Error::InvalidParams(e.to_string()))?)
        } else {
            None
        };
        let size = match law {
            ClaimLaw::Exponential { rate } | ClaimLaw::Erlang2 { rate } => {
                Some(Exp::new(rate).map_err(|e| Error::InvalidParams(e.to_string()))?)
            }
            ClaimLaw::Deterministic { .. } => None,
        };
        Ok(Self { wait, law, size })
    }

    #[inline]
    fn wait<R: Rng>(&self, rng: &mut R) -> f64 {
        self.wait.map_or(f64::INFINITY, |d| d.sample(rng))
    }

    #[inline]
    fn claim<R: Rng>(&self, rng: &mut R) -> f64 {
        match (self.law, self.size) {
            (ClaimLaw::Exponential { .. }, Some(d)) => d.sample(rng),
            (ClaimLaw::Erlang2 { .. }, Some(d)) => d.sample(rng) + d.sample(rng),
            (ClaimLaw::Deterministic { atom }, _) => atom,
            _ => unreachable!("sampler built from a validated law"),
        }
    }
}

fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Discounted dividends of one path.
fn run_path(
    p: &ModelParams,
    sampler: &Sampler,
    strat: &StrategySpec,
    x0: SurplusPoint,
    horizon: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    match strat {
        StrategySpec::TakeAndRun => {
            let tau = sampler.wait(rng).min(horizon);
            x0.x1 + x0.x2 + (p.c1 + p.c2) * disc_integral(p.q, 0.0, tau)
        }
        StrategySpec::PolicyTable(table) => policy_path(p, sampler, table, x0, horizon, rng),
        StrategySpec::MReflection(lb) => line_path(p, sampler, lb, x0, horizon, rng),
    }
}

fn policy_path(
    p: &ModelParams,
    sampler: &Sampler,
    table: &PolicyTable,
    x0: SurplusPoint,
    horizon: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let g = &table.grid;
    let (k1, r1) = floor_cell(x0.x1, g.dx1);
    let (k2, r2) = floor_cell(x0.x2, g.dx2);
    let (mut node, pay) = table.enter(k1, k2);
    let mut total = r1 + r2 + pay;
    let mut t = 0.0;
    while t < horizon {
        let tau = sampler.wait(rng);
        let left = ((horizon - t) / g.delta).ceil() as u64;
        let whole = (tau / g.delta).floor();
        if !whole.is_finite() || whole >= left as f64 {
            table.jump(node, left, &mut t, &mut total);
            break;
        }
        node = table.jump(node, whole as u64, &mut t, &mut total);
        let s = tau - whole * g.delta;
        t += s;
        let u = sampler.claim(rng);
        let (n, m) = (node as usize / g.cols(), node as usize % g.cols());
        let y1 = g.x1(n) + p.c1 * s - p.b1 * u;
        let y2 = g.x2(m) + p.c2 * s - p.b2 * u;
        if y1 < 0.0 || y2 < 0.0 {
            break;
        }
        let (k1, r1) = floor_cell(y1, g.dx1);
        let (k2, r2) = floor_cell(y2, g.dx2);
        let (next, pay) = table.enter(k1, k2);
        total += (-p.q * t).exp() * (r1 + r2 + pay);
        node = next;
    }
    total
}

fn line_path(
    p: &ModelParams,
    sampler: &Sampler,
    lb: &LineBands,
    x0: SurplusPoint,
    horizon: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let prob = &lb.problem;
    let proj = x0.projection(p);
    let mut total = x0.x1 - proj.x1 + x0.x2 - proj.x2;
    let (mut y, lump, mut top) = lb.settle(proj.x2);
    total += prob.rho * lump;
    let mut t = 0.0;
    let stream = prob.rho * prob.kappa;
    loop {
        let tau = sampler.wait(rng);
        let end = (t + tau).min(horizon);
        total += stream * disc_integral(p.q, t, end);
        // premium-paying stretch once the current no-pay run is finished
        let hold_from = match top {
            Some(hi) => {
                let reach = t + (hi - y) / prob.c;
                if reach < end {
                    y = hi;
                    top = None;
                    reach
                } else {
                    y += prob.c * (end - t);
                    end
                }
            }
            None => t,
        };
        if top.is_none() {
            total += prob.rho * prob.c * disc_integral(p.q, hold_from, end);
        }
        if end >= horizon {
            break;
        }
        t = end;
        y -= prob.b * sampler.claim(rng);
        if y < 0.0 {
            break;
        }
        let (ny, lump, ntop) = lb.settle(y);
        total += (-p.q * t).exp() * prob.rho * lump;
        y = ny;
        top = ntop;
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn run_batch(
    p: &ModelParams,
    sampler: &Sampler,
    strat: &StrategySpec,
    x0: SurplusPoint,
    paths: usize,
    horizon: f64,
    seed: u64,
    stream0: u64,
) -> (f64, f64) {
    let vals: Vec<f64> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, stream0 + i as u64);
            run_path(p, sampler, strat, x0, horizon, &mut rng)
        })
        .collect();
    let k = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / k;
    let var = if vals.len() > 1 {
        vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    (mean, (var / k).sqrt())
}

/// Horizon `T` with `e^{-qT} · bound < 0.1 · se`.
fn horizon_for(q: f64, bound: f64, se: f64) -> f64 {
    if se > 0.0 {
        ((bound / (0.1 * se)).ln() / q).max(0.0)
    } else {
        (bound.max(1.0) * 1e12).ln() / q
    }
}

/// Mean discounted dividends of `strat` started at `x0`.
pub fn simulate_policy(
    p: &ModelParams,
    law: &ClaimLaw,
    strat: &StrategySpec,
    x0: SurplusPoint,
    n_paths: usize,
    seed: u64,
) -> Result<SimResult> {
    let p = p.validate()?;
    let x0 = check_x0(x0)?;
    if n_paths == 0 {
        return Err(Error::InvalidArgument("need at least one path".into()));
    }
    if let StrategySpec::PolicyTable(t) = strat {
        if t.params != p {
            return Err(Error::InvalidArgument("policy table was built for other parameters".into()));
        }
    }
    let sampler = Sampler::new(&p, law)?;
    let bound = x0.x1 + x0.x2 + (p.c1 + p.c2) / p.q;
    // a pilot run with a generous horizon sizes the spread
    let pilot_horizon = horizon_for(p.q, bound, bound * 1e-6);
    let pilot = n_paths.min(PILOT_PATHS);
    let (_, pilot_se) = run_batch(&p, &sampler, strat, x0, pilot, pilot_horizon, seed, PILOT_STREAM);
    let mut target = pilot_se * (pilot as f64 / n_paths as f64).sqrt();
    let mut last = None;
    for _ in 0..3 {
        let horizon = horizon_for(p.q, bound, target);
        let (mean, se) = run_batch(&p, &sampler, strat, x0, n_paths, horizon, seed, 0);
        let ok = (-p.q * horizon).exp() * bound < 0.1 * se || se == 0.0;
        last = Some(SimResult {
            mean,
            std_error: se,
            paths: n_paths,
            horizon,
            seed,
            rng: RNG_NAME.to_string(),
        });
        if ok {
            break;
        }
        // the pilot overestimated the spread; lengthen and rerun
        target = 0.5 * se;
    }
    Ok(last.expect("at least one run"))
}

/// `(solver_value - mean) / std_error`.
pub fn estimate_gap(sim: &SimResult, solver_value: f64) -> Result<f64> {
    let diff = solver_value - sim.mean;
    if sim.std_error > 0.0 {
        return Ok(diff / sim.std_error);
    }
    if diff.abs() <= 1e-12 * (1.0 + solver_value.abs()) {
        Ok(0.0)
    } else {
        Err(Error::InvalidArgument(format!(
            "simulation has no spread but misses the solver value by {diff:e}"
        )))
    }
}

/// One event of a traced path. Dividends are undiscounted; `(x1, x2)` is
/// the surplus after the event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub t: f64,
    pub kind: TraceKind,
    pub x1: f64,
    pub x2: f64,
    pub dividend: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    /// Remainders above the floor node paid at the start.
    Start,
    LumpE1,
    LumpE2,
    /// A claim-free period of length δ.
    Wait,
    /// A claim followed by the rounding payout.
    Claim,
    Ruin,
    Horizon,
}

/// Steps one path of a grid strategy period by period, recording every
/// event. Uses the same stream as path `path` of [`simulate_policy`].
pub fn trace_policy_path(
    p: &ModelParams,
    law: &ClaimLaw,
    table: &PolicyTable,
    x0: SurplusPoint,
    horizon: f64,
    seed: u64,
    path: u64,
) -> Result<(f64, Vec<TraceEvent>)> {
    let p = p.validate()?;
    let x0 = check_x0(x0)?;
    let sampler = Sampler::new(&p, law)?;
    let mut rng = path_rng(seed, path);
    let g = table.grid;
    let mut ev = Vec::new();
    let mut total = 0.0;
    let mut t = 0.0;
    let (k1, r1) = floor_cell(x0.x1, g.dx1);
    let (k2, r2) = floor_cell(x0.x2, g.dx2);
    let (mut n, mut m) = (k1, k2);
    total += r1 + r2;
    ev.push(TraceEvent {
        t,
        kind: TraceKind::Start,
        x1: g.x1(n),
        x2: g.x2(m),
        dividend: r1 + r2,
    });
    // lumps until a waiting node, discounted at time t
    let settle = |n: &mut usize, m: &mut usize, t: f64, total: &mut f64, ev: &mut Vec<TraceEvent>| loop {
        let (a, d) = if *n > g.n_max {
            (Action::E1, g.dx1)
        } else if *m > g.m_max {
            (Action::E2, g.dx2)
        } else {
            match table.choice[g.index(*n, *m)] {
                Action::E1 => (Action::E1, g.dx1),
                Action::E2 => (Action::E2, g.dx2),
                _ => return,
            }
        };
        if a == Action::E1 {
            *n -= 1;
        } else {
            *m -= 1;
        }
        *total += (-p.q * t).exp() * d;
        ev.push(TraceEvent {
            t,
            kind: if a == Action::E1 { TraceKind::LumpE1 } else { TraceKind::LumpE2 },
            x1: *n as f64 * g.dx1,
            x2: *m as f64 * g.dx2,
            dividend: d,
        });
    };
    settle(&mut n, &mut m, t, &mut total, &mut ev);
    'outer: while t < horizon {
        let tau = sampler.wait(&mut rng);
        let left = ((horizon - t) / g.delta).ceil() as u64;
        let whole = (tau / g.delta).floor();
        let steps = if whole.is_finite() && whole < left as f64 { whole as u64 } else { left };
        for _ in 0..steps {
            n += 1;
            m += 1;
            t += g.delta;
            ev.push(TraceEvent {
                t,
                kind: TraceKind::Wait,
                x1: g.x1(n),
                x2: g.x2(m),
                dividend: 0.0,
            });
            settle(&mut n, &mut m, t, &mut total, &mut ev);
        }
        if steps == left {
            ev.push(TraceEvent {
                t,
                kind: TraceKind::Horizon,
                x1: g.x1(n),
                x2: g.x2(m),
                dividend: 0.0,
            });
            break 'outer;
        }
        let s = tau - whole * g.delta;
        t += s;
        let u = sampler.claim(&mut rng);
        let y1 = g.x1(n) + p.c1 * s - p.b1 * u;
        let y2 = g.x2(m) + p.c2 * s - p.b2 * u;
        if y1 < 0.0 || y2 < 0.0 {
            ev.push(TraceEvent {
                t,
                kind: TraceKind::Ruin,
                x1: y1,
                x2: y2,
                dividend: 0.0,
            });
            break;
        }
        let (k1, r1) = floor_cell(y1, g.dx1);
        let (k2, r2) = floor_cell(y2, g.dx2);
        n = k1;
        m = k2;
        total += (-p.q * t).exp() * (r1 + r2);
        ev.push(TraceEvent {
            t,
            kind: TraceKind::Claim,
            x1: g.x1(n),
            x2: g.x2(m),
            dividend: r1 + r2,
        });
        settle(&mut n, &mut m, t, &mut total, &mut ev);
    }
    Ok((total, ev))
}

/// Discounted dividends of path `path` of [`simulate_policy`] at a given
/// horizon, using the binary-lifting tables.
pub fn policy_path_value(
    p: &ModelParams,
    law: &ClaimLaw,
    table: &PolicyTable,
    x0: SurplusPoint,
    horizon: f64,
    seed: u64,
    path: u64,
) -> Result<f64> {
    let p = p.validate()?;
    let sampler = Sampler::new(&p, law)?;
    let mut rng = path_rng(seed, path);
    Ok(policy_path(&p, &sampler, table, check_x0(x0)?, horizon, &mut rng))
}
