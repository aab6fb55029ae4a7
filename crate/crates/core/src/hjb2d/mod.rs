//! Discrete HJB operators of the grid scheme.
//!
//! At a grid node the controller may pay one grid step of dividends from
//! branch 1 ([`Action::E1`]) or branch 2 ([`Action::E2`]), or pay nothing
//! for one time step `δ` or until the next claim ([`Action::E0`]). The
//! operator `T = max(T0, T1, T2)` is monotone but not a contraction, which is
//! why the solver iterates it from the zero field.

mod generator;
pub mod kernel;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClaimLaw, GridSpec, ModelParams};
use crate::quadrature::GaussLegendre;

pub use generator::{continuous_generator, continuous_l, PiecewiseAffineSurface};
pub(crate) use generator::floor_cell;
use kernel::{ArrivalWeights, ClaimKernel, KernelGeometry, DEFAULT_GL_NODES};

/// Scaled absolute tolerance used to decide argmax ties.
pub const DEFAULT_EPS_TIE: f64 = 1e-9;

/// Tabulated values on the truncated grid, row-major in `n`.
///
/// Lookups past the window extend with unit slope along each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField {
    pub grid: GridSpec,
    values: Vec<f64>,
}

impl ValueField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for n in 0..grid.rows() {
            for m in 0..grid.cols() {
                values.push(f(n, m));
            }
        }
        Self { grid, values }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("value table has non-finite entries".into()));
        }
        Ok(Self { grid, values })
    }

    /// `n dx1 + m dx2 + offset`: the family on which lump payments are exact.
    pub fn unit_slope(grid: GridSpec, offset: f64) -> Self {
        Self::from_fn(grid, |n, m| grid.x1(n) + grid.x2(m) + offset)
    }

    #[inline]
    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.values[self.grid.index(n, m)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, m: usize, v: f64) {
        let i = self.grid.index(n, m);
        self.values[i] = v;
    }

    /// Value at any nonnegative index, extending linearly past the window.
    #[inline]
    pub fn extended(&self, n: usize, m: usize) -> f64 {
        let g = &self.grid;
        let nn = n.min(g.n_max);
        let mm = m.min(g.m_max);
        self.get(nn, mm) + (n - nn) as f64 * g.dx1 + (m - mm) as f64 * g.dx2
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    pub fn max_abs_diff(&self, other: &ValueField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()))
    }
}

/// Local control actions of the grid scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    /// Branch 1 pays `Δx1`.
    E1,
    /// Branch 2 pays `Δx2`.
    E2,
    /// No dividends until `δ ∧ τ`.
    E0,
    /// Stop paying forever.
    Es,
}

impl Action {
    fn bit(self) -> u8 {
        match self {
            Action::E1 => 1,
            Action::E2 => 2,
            Action::E0 => 4,
            Action::Es => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::E1 => "E1",
            Action::E2 => "E2",
            Action::E0 => "E0",
            Action::Es => "Es",
        }
    }
}

/// Set of optimal actions at a node.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ActionSet(u8);

impl ActionSet {
    pub const EMPTY: ActionSet = ActionSet(0);

    pub fn single(a: Action) -> Self {
        ActionSet(a.bit())
    }

    pub fn insert(&mut self, a: Action) {
        self.0 |= a.bit();
    }

    pub fn with(mut self, a: Action) -> Self {
        self.insert(a);
        self
    }

    pub fn contains(&self, a: Action) -> bool {
        self.0 & a.bit() != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Action> + '_ {
        [Action::E1, Action::E2, Action::E0, Action::Es]
            .into_iter()
            .filter(move |a| self.contains(*a))
    }

    /// Parses the `E0|E1` form written by [`Display`](fmt::Display).
    pub fn parse(s: &str) -> Result<Self> {
        let mut set = ActionSet::EMPTY;
        for tok in s.split('|').map(str::trim).filter(|t| !t.is_empty()) {
            let a = match tok {
                "E1" => Action::E1,
                "E2" => Action::E2,
                "E0" => Action::E0,
                "Es" => Action::Es,
                other => return Err(Error::InvalidArgument(format!("unknown action {other}"))),
            };
            set.insert(a);
        }
        Ok(set)
    }
}

impl fmt::Display for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.iter().map(Action::name).collect();
        f.write_str(&names.join("|"))
    }
}

impl fmt::Debug for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

/// Which branch pays a lump sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    One,
    Two,
}

/// The discrete operators `T0`, `T1`, `T2` and `T` for one parameter set
/// and grid, with the claim kernel precomputed.
#[derive(Debug, Clone)]
pub struct DiscreteHjb {
    pub params: ModelParams,
    pub law: ClaimLaw,
    pub grid: GridSpec,
    pub eps_tie: f64,
    kernel: ClaimKernel,
    /// `e^{-(q+λ)δ}`
    no_claim: f64,
    /// Expected discounted rounding dividends at each node.
    rounding: Vec<f64>,
}

impl DiscreteHjb {
    pub fn new(params: ModelParams, law: ClaimLaw, grid: GridSpec) -> Result<Self> {
        Self::with_nodes(params, law, grid, DEFAULT_GL_NODES)
    }

    /// As [`new`](Self::new) with a custom number of Gauss–Legendre nodes per piece.
    pub fn with_nodes(params: ModelParams, law: ClaimLaw, grid: GridSpec, gl_nodes: usize) -> Result<Self> {
        let params = params.validate()?;
        let law = law.validate()?;
        let expected = GridSpec::new(&params, grid.delta, grid.n_max, grid.m_max)?;
        if (expected.dx1 - grid.dx1).abs() > 1e-15 * expected.dx1
            || (expected.dx2 - grid.dx2).abs() > 1e-15 * expected.dx2
        {
            return Err(Error::InvalidArgument("grid spacing does not match c_i * delta".into()));
        }
        let arrival = ArrivalWeights {
            lambda: params.lambda,
            q: params.q,
            delta: grid.delta,
        };
        let geo = KernelGeometry {
            c1: params.c1,
            c2: params.c2,
            dx1: grid.dx1,
            dx2: grid.dx2,
            r1: params.b1 / grid.dx1,
            r2: params.b2 / grid.dx2,
        };
        let rule = GaussLegendre::new(gl_nodes);
        let kernel = ClaimKernel::build(&law, arrival, &geo, grid.n_max, grid.m_max, &rule);

        // rounding(n, m) = Σ_{j1 <= n, j2 <= m} ρ(j1, j2) as a 2D prefix sum.
        let (rows, cols) = (grid.rows(), grid.cols());
        let mut rounding = vec![0.0; grid.len()];
        for row in &kernel.rows {
            for (k, r) in row.rounding.iter().enumerate() {
                let j2 = row.j2_start + k;
                if j2 < cols {
                    rounding[row.j1 * cols + j2] += r;
                }
            }
        }
        for n in 0..rows {
            for m in 1..cols {
                rounding[n * cols + m] += rounding[n * cols + m - 1];
            }
        }
        for n in 1..rows {
            for m in 0..cols {
                rounding[n * cols + m] += rounding[(n - 1) * cols + m];
            }
        }

        Ok(Self {
            no_claim: (-(params.q + params.lambda) * grid.delta).exp(),
            params,
            law,
            grid,
            eps_tie: DEFAULT_EPS_TIE,
            kernel,
            rounding,
        })
    }

    pub fn with_eps_tie(mut self, eps: f64) -> Self {
        self.eps_tie = eps;
        self
    }

    pub fn kernel(&self) -> &ClaimKernel {
        &self.kernel
    }

    pub fn no_claim_factor(&self) -> f64 {
        self.no_claim
    }

    fn check_grid(&self, v: &ValueField) {
        debug_assert_eq!(v.grid.n_max, self.grid.n_max);
        debug_assert_eq!(v.grid.m_max, self.grid.m_max);
    }

    /// `T1` (axis one) or `T2` (axis two).
    pub fn op_lump(&self, v: &ValueField, n: usize, m: usize, axis: Axis) -> Result<f64> {
        self.check_grid(v);
        match axis {
            Axis::One if n > 0 => Ok(v.extended(n - 1, m) + self.grid.dx1),
            Axis::Two if m > 0 => Ok(v.extended(n, m - 1) + self.grid.dx2),
            _ => Err(Error::InvalidArgument(format!(
                "lump payment on {axis:?} is not available at ({n}, {m})"
            ))),
        }
    }

    /// Discounted value of continuing after a claim inside the first step,
    /// rounding dividends included.
    pub fn integral_i_delta(&self, v: &ValueField, n: usize, m: usize) -> f64 {
        self.check_grid(v);
        self.claim_part(v.values(), n, m)
    }

    #[inline]
    pub(crate) fn claim_part(&self, vals: &[f64], n: usize, m: usize) -> f64 {
        let cols = self.grid.cols();
        let mut acc = 0.0;
        for row in &self.kernel.rows {
            if row.j1 > n {
                break;
            }
            if row.j2_start > m {
                continue;
            }
            let len = row.weights.len().min(m - row.j2_start + 1);
            let base = (n - row.j1) * cols + m - row.j2_start;
            // v(n - j1, m - j2_start - k) sits at base - k
            let window = &vals[base + 1 - len..=base];
            acc += row.weights[..len]
                .iter()
                .zip(window.iter().rev())
                .map(|(w, x)| w * x)
                .sum::<f64>();
        }
        acc + self.rounding[self.grid.index(n, m)]
    }

    /// `claim_part` for every node of row `n` at once. Each kernel row adds
    /// a shifted, weighted copy of one value row, so the inner loop runs over
    /// contiguous memory.
    pub(crate) fn claim_row(&self, vals: &[f64], n: usize, out: &mut [f64]) {
        let cols = self.grid.cols();
        debug_assert_eq!(out.len(), cols);
        out.copy_from_slice(&self.rounding[n * cols..(n + 1) * cols]);
        for row in &self.kernel.rows {
            if row.j1 > n {
                break;
            }
            let src = &vals[(n - row.j1) * cols..(n - row.j1 + 1) * cols];
            for (k, &w) in row.weights.iter().enumerate() {
                let shift = row.j2_start + k;
                if shift >= cols {
                    break;
                }
                for (o, x) in out[shift..].iter_mut().zip(src.iter()) {
                    *o += w * x;
                }
            }
        }
    }

    #[inline]
    fn extended_raw(&self, vals: &[f64], n: usize, m: usize) -> f64 {
        let g = &self.grid;
        let nn = n.min(g.n_max);
        let mm = m.min(g.m_max);
        vals[g.index(nn, mm)] + (n - nn) as f64 * g.dx1 + (m - mm) as f64 * g.dx2
    }

    /// `T0`: no dividends over `δ ∧ τ`.
    pub fn op_t0(&self, v: &ValueField, n: usize, m: usize) -> f64 {
        self.check_grid(v);
        self.t0_raw(v.values(), n, m)
    }

    #[inline]
    pub(crate) fn t0_raw(&self, vals: &[f64], n: usize, m: usize) -> f64 {
        self.no_claim * self.extended_raw(vals, n + 1, m + 1) + self.claim_part(vals, n, m)
    }

    /// `max(T0, T1)` from a flat table; the solver adds `T2` row-sequentially.
    #[inline]
    pub(crate) fn t0_t1_raw(&self, vals: &[f64], n: usize, m: usize) -> f64 {
        let t0 = self.t0_raw(vals, n, m);
        if n > 0 {
            t0.max(vals[self.grid.index(n - 1, m)] + self.grid.dx1)
        } else {
            t0
        }
    }

    #[inline]
    pub(crate) fn t_raw(&self, vals: &[f64], n: usize, m: usize) -> f64 {
        let mut best = self.t0_t1_raw(vals, n, m);
        if m > 0 {
            best = best.max(vals[self.grid.index(n, m - 1)] + self.grid.dx2);
        }
        best
    }

    /// The three operator values at a node; lumps are `None` where unavailable.
    pub fn operator_values(&self, v: &ValueField, n: usize, m: usize) -> (f64, Option<f64>, Option<f64>) {
        let t0 = self.op_t0(v, n, m);
        let t1 = self.op_lump(v, n, m, Axis::One).ok();
        let t2 = self.op_lump(v, n, m, Axis::Two).ok();
        (t0, t1, t2)
    }

    /// `T = max(T0, T1, T2)` and every action within the tie tolerance of it.
    pub fn op_t(&self, v: &ValueField, n: usize, m: usize) -> (f64, ActionSet) {
        let (t0, t1, t2) = self.operator_values(v, n, m);
        let best = [Some(t0), t1, t2].into_iter().flatten().fold(f64::NEG_INFINITY, f64::max);
        let tol = self.eps_tie * (1.0 + best.abs());
        let mut set = ActionSet::EMPTY;
        if t1.is_some_and(|t| t >= best - tol) {
            set.insert(Action::E1);
        }
        if t2.is_some_and(|t| t >= best - tol) {
            set.insert(Action::E2);
        }
        if t0 >= best - tol {
            set.insert(Action::E0);
        }
        (best, set)
    }
}
