//! Structural diagnostics of a converged field.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hjb2d::{continuous_generator, DiscreteHjb, ValueField};
use crate::model::{ClaimLaw, ModelParams, Regime, SurplusPoint};
use crate::solver1d::{make_auxiliary_problem, AuxKind, BandLabel, OneDimSolution, TildeV};

/// `max |T(v) - v|` over nodes with both lumps available (`n, m >= 1`).
///
/// On the axes only some actions exist, so fields such as `x1 + x2 + K`
/// that solve the equation in the interior are not fixed points there.
pub fn residual_check(hjb: &DiscreteHjb, v: &ValueField) -> f64 {
    residual_over(hjb, v, 1)
}

/// `max |T(v) - v|` over every node of the window, axes included.
pub fn residual_full(hjb: &DiscreteHjb, v: &ValueField) -> f64 {
    residual_over(hjb, v, 0)
}

fn residual_over(hjb: &DiscreteHjb, v: &ValueField, first: usize) -> f64 {
    let g = hjb.grid;
    let vals = v.values();
    (0..g.len())
        .into_par_iter()
        .filter(|i| i / g.cols() >= first && i % g.cols() >= first)
        .map(|i| (hjb.t_raw(vals, i / g.cols(), i % g.cols()) - vals[i]).abs())
        .reduce(|| 0.0, f64::max)
}

/// Largest violations of the pointwise bounds; a value `<= 0` means the
/// bound holds everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// `max (n dx1 + m dx2 - v)`
    pub lower: f64,
    /// `max (v - n dx1 - m dx2 - (c1 + c2)/q)`
    pub upper: f64,
    /// `max (dx1 - (v(n, m) - v(n - 1, m)))`
    pub increment1: f64,
    /// `max (dx2 - (v(n, m) - v(n, m - 1)))`
    pub increment2: f64,
}

impl BoundReport {
    pub fn worst(&self) -> f64 {
        self.lower.max(self.upper).max(self.increment1).max(self.increment2)
    }

    /// All bounds hold up to `slack`.
    pub fn passes(&self, slack: f64) -> bool {
        self.worst() <= slack
    }
}

pub fn bound_violations(params: &ModelParams, v: &ValueField) -> BoundReport {
    let g = v.grid;
    let ub = params.upper_bound_offset();
    let mut r = BoundReport {
        lower: f64::NEG_INFINITY,
        upper: f64::NEG_INFINITY,
        increment1: f64::NEG_INFINITY,
        increment2: f64::NEG_INFINITY,
    };
    for n in 0..g.rows() {
        for m in 0..g.cols() {
            let base = g.x1(n) + g.x2(m);
            let val = v.get(n, m);
            r.lower = r.lower.max(base - val);
            r.upper = r.upper.max(val - base - ub);
            if n > 0 {
                r.increment1 = r.increment1.max(g.dx1 - (val - v.get(n - 1, m)));
            }
            if m > 0 {
                r.increment2 = r.increment2.max(g.dx2 - (val - v.get(n, m - 1)));
            }
        }
    }
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct D1Report {
    pub samples: usize,
    pub max_deviation: f64,
    pub worst: Option<SurplusPoint>,
    /// `2 (dx1 + dx2)`
    pub bound: f64,
}

impl D1Report {
    pub fn passes(&self) -> bool {
        self.max_deviation <= self.bound
    }
}

/// Deviation from "below the line, the first branch pays its excess at once".
pub fn d1_deviation(params: &ModelParams, v: &ValueField, x: SurplusPoint) -> Result<f64> {
    let proj = x.projection(params);
    let direct = v.extend_value(x)?;
    let via_line = x.x1 - proj.x1 + x.x2 - proj.x2 + v.extend_value(proj)?;
    Ok((direct - via_line).abs())
}

/// Samples `count` points below the simultaneous-ruin line inside the window.
pub fn sample_d1_points(params: &ModelParams, v: &ValueField, count: usize, seed: u64) -> Vec<SurplusPoint> {
    let g = v.grid;
    let ratio = params.b1 / params.b2;
    let x2_top = g.x2_max().min(g.x1_max() / ratio);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x2 = rng.random::<f64>() * x2_top;
            let lo = ratio * x2;
            let x1 = lo + (g.x1_max() - lo) * (1.0 - rng.random::<f64>());
            SurplusPoint { x1, x2 }
        })
        .collect()
}

pub fn check_d1_identity(params: &ModelParams, v: &ValueField, count: usize, seed: u64) -> Result<D1Report> {
    let g = v.grid;
    let mut rep = D1Report {
        samples: count,
        max_deviation: 0.0,
        worst: None,
        bound: 2.0 * (g.dx1 + g.dx2),
    };
    for x in sample_d1_points(params, v, count, seed) {
        let d = d1_deviation(params, v, x)?;
        if d >= rep.max_deviation {
            rep.max_deviation = d;
            rep.worst = Some(x);
        }
    }
    Ok(rep)
}

/// A point just above the line where the generator of `Ṽ` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TildeWitness {
    /// Point of the no-pay band on the line the probe starts from.
    pub base: SurplusPoint,
    pub point: SurplusPoint,
    pub generator: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TildeOutcome {
    /// The generator of `Ṽ` is positive at the witness, so `Ṽ` is not optimal.
    Witness(TildeWitness),
    /// No probe gave a positive value; the best one is reported.
    NotFound(TildeWitness),
    /// `W̄` has no no-pay band: paying everything at once is optimal on the line.
    EmptyNoPayBand,
}

/// Probes the generator of `Ṽ` slightly above the line, over the interior
/// of the no-pay band of `W̄`.
pub fn check_tilde_suboptimality(params: &ModelParams, law: &ClaimLaw, wbar: &OneDimSolution) -> Result<TildeOutcome> {
    let p = params.validate()?;
    if p.regime() == Regime::Symmetric {
        return Err(Error::NotApplicable(
            "with c1/b1 = c2/b2 the line strategy is optimal".into(),
        ));
    }
    if make_auxiliary_problem(&p, law, AuxKind::Wbar)? != wbar.problem {
        return Err(Error::InvalidArgument("one-dimensional solution does not match the parameters".into()));
    }
    if wbar.bands.c_bar_is_empty() {
        return Ok(TildeOutcome::EmptyNoPayBand);
    }
    let tv = TildeV::new(&p, wbar)?;
    let dx = wbar.dx;
    let ratio = p.b1 / p.b2;
    let mut best: Option<TildeWitness> = None;
    for k in 1..wbar.k_max().saturating_sub(2) {
        let interior = wbar.labels[k - 1] == BandLabel::C && wbar.labels[k] == BandLabel::C && wbar.labels[k + 1] == BandLabel::C;
        if !interior {
            continue;
        }
        let x20 = k as f64 * dx;
        let base = SurplusPoint { x1: ratio * x20, x2: x20 };
        let point = SurplusPoint { x1: base.x1, x2: x20 + 1.5 * dx };
        let l = continuous_generator(&p, law, &tv, point, ratio * dx, dx);
        if best.is_none_or(|b| l > b.generator) {
            best = Some(TildeWitness { base, point, generator: l });
        }
    }
    match best {
        Some(w) if w.generator > 0.0 => Ok(TildeOutcome::Witness(w)),
        Some(w) => Ok(TildeOutcome::NotFound(w)),
        None => Err(Error::NotApplicable("no-pay band has no interior nodes at this resolution".into())),
    }
}
