//! One-dimensional dividend problems with a constant reward rate.
//!
//! A single surplus `x` receives premiums at rate `c` and pays claims `b U`.
//! Every unit paid out is worth `rho`, and `rho * kappa` per unit time is
//! earned until ruin. Two instances matter for the two-branch model: the
//! problem whose value `W̄` describes strategies that keep the surplus on the
//! simultaneous-ruin line, and the merged company paying pooled premiums.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hjb2d::kernel::{ArrivalWeights, ClaimKernel1d, DEFAULT_GL_NODES};
use crate::hjb2d::{PiecewiseAffineSurface, ValueField};
use crate::model::{ClaimLaw, ModelParams, Side, SurplusPoint};
use crate::quadrature::GaussLegendre;
use crate::solver2d::{SolveOptions, SolveReport, SweepMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneDimProblem {
    pub c: f64,
    pub b: f64,
    pub law: ClaimLaw,
    pub lambda: f64,
    pub q: f64,
    pub kappa: f64,
    pub rho: f64,
}

impl OneDimProblem {
    pub fn validate(self) -> Result<Self> {
        let ok = self.c > 0.0
            && self.b > 0.0
            && self.rho >= 1.0
            && self.kappa >= 0.0
            && self.lambda >= 0.0
            && self.q > 0.0
            && [self.c, self.b, self.rho, self.kappa, self.lambda, self.q].iter().all(|v| v.is_finite());
        if !ok {
            return Err(Error::InvalidParams(format!("bad one-dimensional problem {self:?}")));
        }
        self.law.validate()?;
        Ok(self)
    }

    /// `rho x + rho (c + kappa) / q`: the value can never exceed paying the
    /// surplus now plus every future premium and reward without ruin.
    pub fn upper_bound(&self, x: f64) -> f64 {
        self.rho * x + self.rho * (self.c + self.kappa) / self.q
    }

    /// Value of paying everything at once and streaming premiums until the
    /// first claim.
    pub fn take_and_run(&self, x: f64) -> f64 {
        self.rho * x + self.rho * (self.c + self.kappa) / (self.lambda + self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuxKind {
    /// Strategies that keep the two-branch surplus on the simultaneous-ruin line.
    Wbar,
    /// The merged company; `cost` is subtracted from the pooled surplus by the caller.
    Merger { cost: f64 },
}

pub fn make_auxiliary_problem(p: &ModelParams, law: &ClaimLaw, kind: AuxKind) -> Result<OneDimProblem> {
    let p = p.validate()?;
    match kind {
        AuxKind::Wbar => {
            let ratio = p.b1 / p.b2;
            OneDimProblem {
                c: p.c2,
                b: p.b2,
                law: *law,
                lambda: p.lambda,
                q: p.q,
                kappa: ((p.c1 - ratio * p.c2) / (1.0 + ratio)).max(0.0),
                rho: 1.0 + ratio,
            }
            .validate()
        }
        AuxKind::Merger { cost } => {
            if !(cost >= 0.0) {
                return Err(Error::InvalidArgument(format!("merger cost must be nonnegative, got {cost}")));
            }
            OneDimProblem {
                c: p.c1 + p.c2,
                b: 1.0,
                law: *law,
                lambda: p.lambda,
                q: p.q,
                kappa: 0.0,
                rho: 1.0,
            }
            .validate()
        }
    }
}

/// Per-node classification of the one-dimensional δ-optimal strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandLabel {
    /// Pay the incoming premium: no-pay node whose upper neighbour pays a lump.
    A,
    /// Pay a lump sum.
    B,
    /// Pay nothing.
    C,
}

impl BandLabel {
    pub fn name(self) -> &'static str {
        match self {
            BandLabel::A => "A",
            BandLabel::B => "B",
            BandLabel::C => "C",
        }
    }
}

/// A maximal run of equally labelled nodes, `[lo, hi]` in surplus units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandInterval {
    pub label: BandLabel,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    pub intervals: Vec<BandInterval>,
    /// Isolated pay-the-premium points.
    pub a_points: Vec<f64>,
    /// No-pay intervals `(lo, hi)`: `lo` is the last lump node below the run
    /// (or its first node at the origin), `hi` the pay-the-premium node on top.
    pub c_bar: Vec<(f64, f64)>,
    /// Sorted endpoints of `c_bar`.
    pub breakpoints: Vec<f64>,
}

impl BandStructure {
    fn from_labels(labels: &[BandLabel], dx: f64) -> Self {
        let mut intervals: Vec<BandInterval> = Vec::new();
        for (k, &l) in labels.iter().enumerate() {
            let x = k as f64 * dx;
            match intervals.last_mut() {
                Some(iv) if iv.label == l => iv.hi = x,
                _ => intervals.push(BandInterval { label: l, lo: x, hi: x }),
            }
        }
        let a_points = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == BandLabel::A)
            .map(|(k, _)| k as f64 * dx)
            .collect();
        let mut c_bar = Vec::new();
        for (i, iv) in intervals.iter().enumerate() {
            if iv.label != BandLabel::C {
                continue;
            }
            let lo = if i > 0 { iv.lo - dx } else { iv.lo };
            let hi = match intervals.get(i + 1) {
                Some(next) if next.label == BandLabel::A => next.lo,
                _ => iv.hi,
            };
            c_bar.push((lo, hi));
        }
        let mut breakpoints: Vec<f64> = c_bar.iter().flat_map(|&(a, b)| [a, b]).collect();
        breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breakpoints.dedup();
        Self {
            intervals,
            a_points,
            c_bar,
            breakpoints,
        }
    }

    pub fn c_bar_is_empty(&self) -> bool {
        self.c_bar.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct OneDimSolution {
    pub problem: OneDimProblem,
    pub delta: f64,
    pub dx: f64,
    pub values: Vec<f64>,
    pub labels: Vec<BandLabel>,
    pub bands: BandStructure,
    pub report: SolveReport,
}

impl OneDimSolution {
    pub fn k_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn x_max(&self) -> f64 {
        self.k_max() as f64 * self.dx
    }

    pub fn x(&self, k: usize) -> f64 {
        k as f64 * self.dx
    }

    /// Floor-plus-remainder extension: the remainder above the node below is
    /// paid out at once, past the window the value grows with slope `rho`.
    pub fn value_at(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::InvalidArgument(format!("surplus {x} outside the half-line")));
        }
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: f64) -> f64 {
        let (k, rem) = crate::hjb2d::floor_cell(x.max(0.0), self.dx);
        let kk = k.min(self.k_max());
        self.values[kk] + self.problem.rho * ((k - kk) as f64 * self.dx + rem)
    }
}

struct Scheme1d {
    kernel: ClaimKernel1d,
    /// Prefix sums of the rounding dividends, already multiplied by `rho`.
    rounding: Vec<f64>,
    no_claim: f64,
    reward: f64,
    lump: f64,
}

impl Scheme1d {
    fn new(prob: &OneDimProblem, delta: f64, k_max: usize) -> Self {
        let dx = prob.c * delta;
        let arrival = ArrivalWeights {
            lambda: prob.lambda,
            q: prob.q,
            delta,
        };
        let rule = GaussLegendre::new(DEFAULT_GL_NODES);
        let kernel = ClaimKernel1d::build(&prob.law, arrival, prob.c, prob.b, dx, k_max, &rule);
        let mut rounding = Vec::with_capacity(k_max + 1);
        let mut acc = 0.0;
        for r in &kernel.rounding {
            acc += prob.rho * r;
            rounding.push(acc);
        }
        let qd = prob.q + prob.lambda;
        Self {
            kernel,
            rounding,
            no_claim: (-qd * delta).exp(),
            reward: prob.rho * prob.kappa * (-(-qd * delta).exp_m1()) / qd,
            lump: prob.rho * dx,
        }
    }

    /// Everything in `T0` except the no-claim continuation.
    #[inline]
    fn claim_part(&self, w: &[f64], k: usize) -> f64 {
        let claims: f64 = self.kernel.weights[..=k]
            .iter()
            .zip(w[..=k].iter().rev())
            .map(|(a, b)| a * b)
            .sum();
        claims + self.rounding[k] + self.reward
    }

    #[inline]
    fn up(&self, w: &[f64], k: usize) -> f64 {
        let k_max = w.len() - 1;
        if k < k_max {
            w[k + 1]
        } else {
            w[k_max] + self.lump
        }
    }

    #[inline]
    fn t0(&self, w: &[f64], k: usize) -> f64 {
        self.no_claim * self.up(w, k) + self.claim_part(w, k)
    }

    #[inline]
    fn t1(&self, w: &[f64], k: usize) -> Option<f64> {
        (k > 0).then(|| w[k - 1] + self.lump)
    }

    #[inline]
    fn t(&self, w: &[f64], k: usize) -> f64 {
        let t0 = self.t0(w, k);
        self.t1(w, k).map_or(t0, |t1| t0.max(t1))
    }
}

/// Value iteration of the one-dimensional scheme from the zero field.
pub fn solve_1d(prob: &OneDimProblem, delta: f64, x_max: f64, opts: &SolveOptions) -> Result<OneDimSolution> {
    let prob = prob.validate()?;
    if !(delta > 0.0) || !(x_max > 0.0) {
        return Err(Error::InvalidArgument(format!("need delta > 0 and x_max > 0, got {delta}, {x_max}")));
    }
    let start = Instant::now();
    let dx = prob.c * delta;
    let k_max = (x_max / dx).round() as usize;
    if k_max < 2 {
        return Err(Error::InvalidArgument("one-dimensional grid needs at least 3 nodes".into()));
    }
    let scheme = Scheme1d::new(&prob, delta, k_max);
    let mut w = vec![0.0; k_max + 1];
    let mut next = vec![0.0; k_max + 1];
    let mut prev = vec![0.0; k_max + 1];
    let mut inner_passes = 0;
    let mut min_inc = f64::INFINITY;
    let mut last_inc = f64::INFINITY;
    let mut tol = opts.tol.resolve(0.0);
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        let (mut hi, mut lo) = (0.0f64, f64::INFINITY);
        match opts.mode {
            SweepMode::Jacobi => {
                for (k, out) in next.iter_mut().enumerate() {
                    *out = scheme.t(&w, k);
                }
                for (old, new) in w.iter_mut().zip(&next) {
                    hi = hi.max(new - *old);
                    lo = lo.min(new - *old);
                    *old = *new;
                }
            }
            SweepMode::InPlace => {
                // same splitting as the two-dimensional solver
                for (k, c) in next.iter_mut().enumerate() {
                    *c = scheme.claim_part(&w, k);
                }
                prev.copy_from_slice(&w);
                for pass in 0..opts.max_inner_passes.max(1) {
                    let mut inner = 0.0f64;
                    for i in 0..=k_max {
                        let k = if pass % 2 == 0 { k_max - i } else { i };
                        let mut val = scheme.no_claim * scheme.up(&w, k) + next[k];
                        if k > 0 {
                            val = val.max(w[k - 1] + scheme.lump);
                        }
                        if val > w[k] {
                            inner = inner.max(val - w[k]);
                            w[k] = val;
                        }
                    }
                    inner_passes += 1;
                    if inner <= 0.1 * tol {
                        break;
                    }
                }
                for (new, old) in w.iter().zip(&prev) {
                    hi = hi.max(new - old);
                    lo = lo.min(new - old);
                }
            }
        }
        sweeps += 1;
        min_inc = min_inc.min(lo);
        last_inc = hi;
        tol = opts.tol.resolve(w.iter().fold(0.0f64, |a, b| a.max(b.abs())));
        if hi < tol {
            break;
        }
    }
    if last_inc >= tol {
        return Err(Error::NoConvergence {
            iterations: sweeps,
            last_increment: last_inc,
        });
    }
    let residual = (0..=k_max).map(|k| (scheme.t(&w, k) - w[k]).abs()).fold(0.0, f64::max);
    if residual > 10.0 * tol {
        return Err(Error::ResidualTooLarge {
            residual,
            bound: 10.0 * tol,
        });
    }

    let mut lumps = vec![false; k_max + 1];
    let mut waits = vec![false; k_max + 1];
    for k in 0..=k_max {
        let t0 = scheme.t0(&w, k);
        let t1 = scheme.t1(&w, k);
        let best = t1.map_or(t0, |t1| t0.max(t1));
        let eps = opts.eps_tie * (1.0 + best.abs());
        waits[k] = t0 >= best - eps;
        lumps[k] = t1.is_some_and(|t1| t1 >= best - eps);
    }
    let labels: Vec<BandLabel> = (0..=k_max)
        .map(|k| {
            if !waits[k] {
                BandLabel::B
            } else if lumps[k] || k == k_max || lumps[k + 1] {
                BandLabel::A
            } else {
                BandLabel::C
            }
        })
        .collect();
    if labels[k_max] != BandLabel::B || labels[k_max - 1] != BandLabel::B {
        return Err(Error::TruncationTooSmall(format!(
            "the top of the window x = {} is not in a lump-payment band",
            k_max as f64 * dx
        )));
    }
    let bands = BandStructure::from_labels(&labels, dx);
    Ok(OneDimSolution {
        problem: prob,
        delta,
        dx,
        values: w,
        labels,
        bands,
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

/// The two-branch value of keeping the surplus on the simultaneous-ruin
/// line: pay the excess of the branch that is ahead, then follow `W̄`.
#[derive(Debug, Clone, Copy)]
pub struct TildeV<'a> {
    pub params: ModelParams,
    pub wbar: &'a OneDimSolution,
}

impl<'a> TildeV<'a> {
    pub fn new(params: &ModelParams, wbar: &'a OneDimSolution) -> Result<Self> {
        let params = params.validate()?;
        let want = make_auxiliary_problem(&params, &wbar.problem.law, AuxKind::Wbar)?;
        if want != wbar.problem {
            return Err(Error::InvalidArgument("one-dimensional solution is not the W̄ problem of these parameters".into()));
        }
        Ok(Self { params, wbar })
    }

    /// Argument of `W̄` and the excess paid at once.
    #[inline]
    fn split(&self, x1: f64, x2: f64) -> (f64, f64) {
        let p = &self.params;
        match (SurplusPoint { x1, x2 }).side(p) {
            Side::D1 | Side::M => (x2, (x1 - p.b1 / p.b2 * x2).max(0.0)),
            Side::D2 => (p.b2 / p.b1 * x1, (x2 - p.b2 / p.b1 * x1).max(0.0)),
        }
    }

    pub fn eval(&self, x: SurplusPoint) -> Result<f64> {
        let (y, excess) = self.split(x.x1, x.x2);
        if y > self.wbar.x_max() * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "projection {y} lies beyond the solved range {}",
                self.wbar.x_max()
            )));
        }
        Ok(excess + self.wbar.value_unchecked(y))
    }
}

impl PiecewiseAffineSurface for TildeV<'_> {
    fn value(&self, x1: f64, x2: f64) -> f64 {
        let (y, excess) = self.split(x1, x2);
        excess + self.wbar.value_unchecked(y)
    }

    fn ray_breakpoints(&self, x1: f64, x2: f64, _b1: f64, b2: f64, alpha_max: f64) -> Vec<f64> {
        // claim rays run parallel to the line, so only the W̄ argument moves
        let (y, _) = self.split(x1, x2);
        let dx = self.wbar.dx;
        let top = ((y / dx).floor() as usize).min(self.wbar.k_max());
        let mut pts = Vec::new();
        for k in (0..=top).rev() {
            let a = (y - k as f64 * dx) / b2;
            if a >= alpha_max {
                break;
            }
            if a > 0.0 {
                pts.push(a);
            }
        }
        pts
    }
}

/// Evaluates `Ṽ` at a surplus point from a solved `W̄`.
pub fn tilde_v_eval(wbar: &OneDimSolution, p: &ModelParams, x: SurplusPoint) -> Result<f64> {
    TildeV::new(p, wbar)?.eval(x)
}

/// Merger and two-branch values at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergerRow {
    pub x1: f64,
    pub x2: f64,
    /// `V_M(x1 + x2 - cost)`, absent when the pooled surplus cannot cover the cost.
    pub merger: Option<f64>,
    pub two_branch: f64,
}

impl MergerRow {
    pub fn merger_reduced(&self) -> Option<f64> {
        self.merger.map(|v| v - self.x1 - self.x2)
    }

    pub fn two_branch_reduced(&self) -> f64 {
        self.two_branch - self.x1 - self.x2
    }

    pub fn difference(&self) -> Option<f64> {
        self.merger.map(|v| v - self.two_branch)
    }
}

/// Tabulates `V_M(x1 + x2 - cost)` next to the extended two-branch value.
pub fn merger_compare(
    p: &ModelParams,
    merger: &OneDimSolution,
    cost: f64,
    samples: &[SurplusPoint],
    v2d: &ValueField,
) -> Result<Vec<MergerRow>> {
    let want = make_auxiliary_problem(p, &merger.problem.law, AuxKind::Merger { cost })?;
    if want != merger.problem {
        return Err(Error::InvalidArgument("one-dimensional solution is not the merger problem of these parameters".into()));
    }
    samples
        .iter()
        .map(|x| {
            let pooled = x.x1 + x.x2 - cost;
            let merged = if pooled >= 0.0 {
                if pooled > merger.x_max() * (1.0 + 1e-12) {
                    return Err(Error::InvalidArgument(format!("pooled surplus {pooled} beyond the merger window")));
                }
                Some(merger.value_unchecked(pooled))
            } else {
                None
            };
            Ok(MergerRow {
                x1: x.x1,
                x2: x.x2,
                merger: merged,
                two_branch: v2d.extend_value(*x)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver2d::Tolerance;
    use approx::assert_relative_eq;

    fn ex1() -> ModelParams {
        ModelParams::new(2.0, 1.0, 0.5, 0.5, 1.0, 0.05)
    }

    #[test]
    fn auxiliary_problem_coefficients() {
        let law = ClaimLaw::Exponential { rate: 0.6 };
        let w = make_auxiliary_problem(&ex1(), &law, AuxKind::Wbar).unwrap();
        assert_relative_eq!(w.kappa, 0.5, max_relative = 1e-15);
        assert_eq!((w.rho, w.c, w.b), (2.0, 1.0, 0.5));
        let m = make_auxiliary_problem(&ex1(), &law, AuxKind::Merger { cost: 3.0 }).unwrap();
        assert_eq!((m.c, m.b, m.kappa, m.rho), (3.0, 1.0, 0.0, 1.0));
        let sym = ModelParams::new(21.4, 21.4, 0.5, 0.5, 10.0, 0.1);
        let s = make_auxiliary_problem(&sym, &ClaimLaw::Erlang2 { rate: 0.5 }, AuxKind::Wbar).unwrap();
        assert_eq!((s.kappa, s.rho), (0.0, 2.0));
        assert!(make_auxiliary_problem(&ex1(), &law, AuxKind::Merger { cost: -1.0 }).is_err());
    }

    fn quick(prob: &OneDimProblem, delta: f64, x_max: f64) -> OneDimSolution {
        let opts = SolveOptions {
            tol: Tolerance::Relative(1e-11),
            ..Default::default()
        };
        solve_1d(prob, delta, x_max, &opts).unwrap()
    }

    #[test]
    fn solution_respects_bounds_and_lump_residual() {
        let law = ClaimLaw::Exponential { rate: 0.6 };
        let prob = make_auxiliary_problem(&ex1(), &law, AuxKind::Wbar).unwrap();
        let s = quick(&prob, 0.02, 20.0);
        assert!(s.report.min_increment >= 0.0);
        for k in 0..=s.k_max() {
            let x = s.x(k);
            assert!(s.values[k] <= prob.upper_bound(x));
            assert!(s.values[k] >= prob.rho * x);
            if k > 0 {
                // descending sweeps may raise the lower node by at most the last increment
                assert!(s.values[k] - s.values[k - 1] >= prob.rho * s.dx - 10.0 * s.report.tol);
            }
        }
        assert_eq!(s.labels[s.k_max()], BandLabel::B);
        assert!(!s.bands.a_points.is_empty());
    }

    #[test]
    fn jacobi_and_inplace_agree() {
        let law = ClaimLaw::Erlang2 { rate: 1.0 };
        let prob = make_auxiliary_problem(&ex1(), &law, AuxKind::Merger { cost: 0.0 }).unwrap();
        let tight = |mode| SolveOptions {
            tol: Tolerance::Absolute(1e-10),
            mode,
            max_sweeps: 1_000_000,
            ..Default::default()
        };
        let a = solve_1d(&prob, 0.02, 12.0, &tight(SweepMode::Jacobi)).unwrap();
        let b = solve_1d(&prob, 0.02, 12.0, &tight(SweepMode::InPlace)).unwrap();
        let d = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(d < 1e-6, "{d}");
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn payout_multiplier_scales_the_value() {
        let law = ClaimLaw::Exponential { rate: 0.6 };
        let base = OneDimProblem {
            c: 1.5,
            b: 0.5,
            law,
            lambda: 1.0,
            q: 0.05,
            kappa: 0.3,
            rho: 1.0,
        };
        let doubled = OneDimProblem { rho: 2.0, ..base };
        let a = quick(&base, 0.02, 15.0);
        let b = quick(&doubled, 0.02, 15.0);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_relative_eq!(2.0 * x, *y, max_relative = 1e-8);
        }
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn extension_and_window_errors() {
        let law = ClaimLaw::Exponential { rate: 0.6 };
        let prob = make_auxiliary_problem(&ex1(), &law, AuxKind::Wbar).unwrap();
        let s = quick(&prob, 0.05, 15.0);
        assert_eq!(s.value_at(s.x(7)).unwrap(), s.values[7]);
        assert_relative_eq!(s.value_at(s.x(7) + 0.3 * s.dx).unwrap(), s.values[7] + 2.0 * 0.3 * s.dx, max_relative = 1e-14);
        assert!(s.value_at(-1.0).is_err());
        let tv = TildeV::new(&ex1(), &s).unwrap();
        // on the line both branches agree, off it the excess is paid
        let on = SurplusPoint::new(s.x(40), s.x(40)).unwrap();
        assert_relative_eq!(tv.eval(on).unwrap(), s.values[40], max_relative = 1e-12);
        let axis = SurplusPoint::new(2.5, 0.0).unwrap();
        assert_relative_eq!(tv.eval(axis).unwrap(), 2.5 + s.values[0], max_relative = 1e-12);
        assert!(tv.eval(SurplusPoint::new(40.0, 40.0).unwrap()).is_err());
    }

    #[test]
    fn tiny_window_is_rejected() {
        let law = ClaimLaw::Exponential { rate: 0.6 };
        let prob = make_auxiliary_problem(&ex1(), &law, AuxKind::Wbar).unwrap();
        match solve_1d(&prob, 0.05, 1.0, &SolveOptions::default()) {
            Err(Error::TruncationTooSmall(_)) => {}
            other => panic!("expected a truncation error, got {other:?}"),
        }
    }
}
