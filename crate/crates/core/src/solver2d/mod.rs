//! Monotone value iteration for the two-branch problem.
//!
//! Starting from the zero field (the value of never paying again), the
//! iterates `v_{l+1} = T(v_l)` increase to the smallest solution of the
//! discrete HJB equation, which is the value of the δ-optimal strategy.

mod checks;
mod regions;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hjb2d::{ActionSet, DiscreteHjb, ValueField};
use crate::model::{GridSpec, SurplusPoint};

pub use checks::{
    bound_violations, check_d1_identity, check_tilde_suboptimality, d1_deviation, residual_check, residual_full,
    sample_d1_points, BoundReport, D1Report, TildeOutcome, TildeWitness,
};
pub use regions::{extract_regions, A0Point, DiagonalSegment, Region, RegionMap};

pub const DEFAULT_MAX_SWEEPS: usize = 200_000;
pub const DEFAULT_REL_TOL: f64 = 1e-8;
pub const DEFAULT_INNER_PASSES: usize = 16;

/// Order in which grid values are refreshed within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// Every node reads the previous sweep's field.
    Jacobi,
    /// The claim integral is evaluated once per sweep from the current
    /// field; the remaining local problem (shift along the diagonal or pay a
    /// lump) is then relaxed in place with alternating node orders. Each
    /// sweep dominates one application of `T` and never overshoots the
    /// smallest fixed point.
    InPlace,
}

impl std::str::FromStr for SweepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jacobi" => Ok(SweepMode::Jacobi),
            "inplace" | "in-place" => Ok(SweepMode::InPlace),
            other => Err(Error::InvalidArgument(format!("unknown sweep mode {other}"))),
        }
    }
}

/// Stopping tolerance on the sup-norm increment of one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Tolerance {
    Absolute(f64),
    /// `rel · (1 + sup |v|)`, re-evaluated every sweep.
    Relative(f64),
}

impl Tolerance {
    pub fn resolve(&self, sup: f64) -> f64 {
        match *self {
            Tolerance::Absolute(t) => t,
            Tolerance::Relative(r) => r * (1.0 + sup),
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::Relative(DEFAULT_REL_TOL)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: Tolerance,
    pub mode: SweepMode,
    pub max_sweeps: usize,
    /// Cap on local relaxation passes per in-place sweep.
    pub max_inner_passes: usize,
    /// Tie tolerance of the one-dimensional band extraction; the
    /// two-dimensional solver reads it from [`DiscreteHjb`].
    pub eps_tie: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: Tolerance::default(),
            mode: SweepMode::InPlace,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            max_inner_passes: DEFAULT_INNER_PASSES,
            eps_tie: crate::hjb2d::DEFAULT_EPS_TIE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_increment: f64,
    /// Stopping tolerance in effect when the loop ended.
    pub tol: f64,
    pub residual_max: f64,
    /// Smallest pointwise change observed over all sweeps; nonnegative when
    /// the iterates increase monotonically.
    pub min_increment: f64,
    pub mode: SweepMode,
    /// Local relaxation passes summed over all sweeps (zero in Jacobi mode).
    pub inner_passes: usize,
    pub wall_seconds: f64,
}

/// Argmax action sets on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyField {
    pub grid: GridSpec,
    actions: Vec<ActionSet>,
}

impl PolicyField {
    pub fn from_actions(grid: GridSpec, actions: Vec<ActionSet>) -> Result<Self> {
        if actions.len() != grid.len() {
            return Err(Error::InvalidArgument("policy table has the wrong size".into()));
        }
        for n in 0..grid.rows() {
            for m in 0..grid.cols() {
                let a = actions[grid.index(n, m)];
                let bad = a.is_empty()
                    || (n == 0 && a.contains(crate::hjb2d::Action::E1))
                    || (m == 0 && a.contains(crate::hjb2d::Action::E2));
                if bad {
                    return Err(Error::InvalidArgument(format!("inadmissible action set {a} at ({n}, {m})")));
                }
            }
        }
        Ok(Self { grid, actions })
    }

    /// Argmax sets of `T` at every node of a field.
    pub fn from_field(hjb: &DiscreteHjb, v: &ValueField) -> Self {
        let g = hjb.grid;
        let actions: Vec<ActionSet> = (0..g.len())
            .into_par_iter()
            .map(|i| hjb.op_t(v, i / g.cols(), i % g.cols()).1)
            .collect();
        Self { grid: g, actions }
    }

    #[inline]
    pub fn get(&self, n: usize, m: usize) -> ActionSet {
        self.actions[self.grid.index(n, m)]
    }

    pub fn actions(&self) -> &[ActionSet] {
        &self.actions
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub value: ValueField,
    pub policy: PolicyField,
    pub report: SolveReport,
}

/// Iterates `T` from the zero field until the sweep increment drops below
/// the tolerance, then verifies the fixed-point residual.
pub fn solve(hjb: &DiscreteHjb, opts: &SolveOptions) -> Result<Solution> {
    solve_observed(hjb, opts, |_, _| {})
}

/// As [`solve`], calling `observe(sweep, &field)` after every sweep.
pub fn solve_observed(
    hjb: &DiscreteHjb,
    opts: &SolveOptions,
    mut observe: impl FnMut(usize, &ValueField),
) -> Result<Solution> {
    let start = Instant::now();
    let g = hjb.grid;
    let mut v = ValueField::zeros(g);
    let mut scratch = vec![0.0; g.len()];
    let mut prev = vec![0.0; g.len()];
    let mut min_inc = f64::INFINITY;
    let mut last_inc = f64::INFINITY;
    let mut tol = opts.tol.resolve(0.0);
    let mut sweeps = 0;
    let mut inner_passes = 0;
    while sweeps < opts.max_sweeps {
        let (inc, lo) = match opts.mode {
            SweepMode::Jacobi => jacobi_sweep(hjb, &mut v, &mut scratch),
            SweepMode::InPlace => {
                let (hi, lo, passes) = split_sweep(hjb, &mut v, &mut scratch, &mut prev, 0.1 * tol, opts.max_inner_passes.max(1));
                inner_passes += passes;
                (hi, lo)
            }
        };
        sweeps += 1;
        min_inc = min_inc.min(lo);
        last_inc = inc;
        observe(sweeps, &v);
        tol = opts.tol.resolve(v.sup());
        if inc < tol {
            break;
        }
    }
    if last_inc >= tol {
        return Err(Error::NoConvergence {
            iterations: sweeps,
            last_increment: last_inc,
        });
    }
    let residual = residual_full(hjb, &v);
    if residual > 10.0 * tol {
        return Err(Error::ResidualTooLarge {
            residual,
            bound: 10.0 * tol,
        });
    }
    let policy = PolicyField::from_field(hjb, &v);
    Ok(Solution {
        value: v,
        policy,
        report: SolveReport {
            iterations: sweeps,
            final_increment: last_inc,
            tol,
            residual_max: residual,
            min_increment: min_inc,
            mode: opts.mode,
            inner_passes,
            wall_seconds: start.elapsed().as_secs_f64(),
        },
    })
}

/// Returns `(max increment, min increment)` of the sweep.
fn jacobi_sweep(hjb: &DiscreteHjb, v: &mut ValueField, scratch: &mut [f64]) -> (f64, f64) {
    let cols = hjb.grid.cols();
    let vals = v.values();
    scratch
        .par_chunks_mut(cols)
        .enumerate()
        .for_each(|(n, row)| {
            for (m, out) in row.iter_mut().enumerate() {
                *out = hjb.t_raw(vals, n, m);
            }
        });
    let (mut hi, mut lo) = (0.0f64, f64::INFINITY);
    for (old, new) in v.values_mut().iter_mut().zip(scratch.iter()) {
        let d = new - *old;
        hi = hi.max(d);
        lo = lo.min(d);
        *old = *new;
    }
    (hi, lo)
}


/// One outer sweep of [`SweepMode::InPlace`]; returns `(max increment, min
/// increment, passes)`.
///
/// With the claim integral `C` frozen at the incoming field `w`, the local
/// operator `S(v) = max(a v(n+1, m+1) + C, v(n-1, m) + dx1, v(n, m-1) + dx2)`
/// satisfies `T(w) = S(w)` and `S <= T` on fields above `w`. Starting from a
/// subsolution, every in-place update keeps `v <= S(v)` and `v <= v*`.
fn split_sweep(
    hjb: &DiscreteHjb,
    v: &mut ValueField,
    claims: &mut [f64],
    prev: &mut [f64],
    inner_tol: f64,
    max_passes: usize,
) -> (f64, f64, usize) {
    let g = hjb.grid;
    let cols = g.cols();
    {
        let vals = v.values();
        claims
            .par_chunks_mut(cols)
            .enumerate()
            .for_each(|(n, row)| hjb.claim_row(vals, n, row));
    }
    prev.copy_from_slice(v.values());
    let a = hjb.no_claim_factor();
    let (dx1, dx2) = (g.dx1, g.dx2);
    let (n_max, m_max) = (g.n_max, g.m_max);
    let vals = v.values_mut();
    let mut passes = 0;
    while passes < max_passes {
        let mut hi = 0.0f64;
        let mut update = |n: usize, m: usize, vals: &mut [f64]| {
            let i = n * cols + m;
            let nn = (n + 1).min(n_max);
            let mm = (m + 1).min(m_max);
            let up = vals[nn * cols + mm] + (n + 1 - nn) as f64 * dx1 + (m + 1 - mm) as f64 * dx2;
            let mut val = a * up + claims[i];
            if n > 0 {
                val = val.max(vals[i - cols] + dx1);
            }
            if m > 0 {
                val = val.max(vals[i - 1] + dx2);
            }
            if val > vals[i] {
                hi = hi.max(val - vals[i]);
                vals[i] = val;
            }
        };
        // E0 looks up and right, lumps look down or left: alternate all four orders
        let rows_down = passes % 2 == 0;
        let cols_down = (passes / 2) % 2 == 0;
        for r in 0..=n_max {
            let n = if rows_down { n_max - r } else { r };
            for c in 0..=m_max {
                let m = if cols_down { m_max - c } else { c };
                update(n, m, vals);
            }
        }
        passes += 1;
        if hi <= inner_tol {
            break;
        }
    }
    let (mut hi, mut lo) = (0.0f64, f64::INFINITY);
    for (new, old) in vals.iter().zip(prev.iter()) {
        hi = hi.max(new - old);
        lo = lo.min(new - old);
    }
    (hi, lo, passes)
}

/// Floor-plus-remainder extension of the grid values (see [`ValueField::extend_value`]).
pub fn extend_value(v: &ValueField, x: SurplusPoint) -> Result<f64> {
    v.extend_value(x)
}
