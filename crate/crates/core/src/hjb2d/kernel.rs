//! Exact-in-α, Gauss–Legendre-in-t quadrature of the claim integral.
//!
//! Write the claim time as `t = s δ` with `s ∈ [0, 1]`. For a claim of size
//! `α` hitting node `(n, m)` the post-claim surplus rounds down to
//! `(n - j1, m - j2)` with `j_i = ceil(r_i α - s)` and `r_i = b_i / Δx_i`.
//! The offsets `(j1, j2)` and the rounding dividend
//! `j1 Δx1 + j2 Δx2 + (c1 + c2) t - α` do not depend on the node, so the
//! whole integral reduces to a sparse correlation of the value table with a
//! fixed set of offset weights. Offsets with `j1 > n` or `j2 > m` are exactly
//! the ruinous claims.

use crate::model::ClaimLaw;
use crate::quadrature::GaussLegendre;

/// Default number of Gauss–Legendre nodes per smooth piece in `s`.
pub const DEFAULT_GL_NODES: usize = 8;

/// Linear function of `s` of the form `(s + offset) / rate`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Edge {
    pub offset: f64,
    pub rate: f64,
}

impl Edge {
    #[inline]
    fn at(&self, s: f64) -> f64 {
        (s + self.offset) / self.rate
    }
}

/// Claim arrival data shared by every cell integral.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ArrivalWeights {
    pub lambda: f64,
    pub q: f64,
    pub delta: f64,
}

impl ArrivalWeights {
    /// Density of a claim at `t = s δ` (in `s` units), discounted to time zero.
    #[inline]
    fn density(&self, s: f64) -> f64 {
        self.lambda * self.delta * (-(self.lambda + self.q) * s * self.delta).exp()
    }
}

/// Integrates, over `s ∈ [0, 1]`, the discounted arrival density times
///
/// * the claim-law mass of the cell `(max(0, lows), min(highs)]`, and
/// * `∫_cell (pay0 + pay_s · s - pay_alpha · α) dG(α)`.
///
/// The interval is split wherever two edges cross, an edge crosses zero or
/// an edge crosses an atom of the law, so each piece is smooth in `s`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn cell_integrals(
    law: &ClaimLaw,
    arrival: ArrivalWeights,
    lows: &[Edge],
    highs: &[Edge],
    pay0: f64,
    pay_s: f64,
    pay_alpha: f64,
    rule: &GaussLegendre,
) -> (f64, f64) {
    let mut cuts = vec![0.0, 1.0];
    let mut push = |s: f64| {
        if s > 0.0 && s < 1.0 && s.is_finite() {
            cuts.push(s);
        }
    };
    let all: Vec<&Edge> = lows.iter().chain(highs.iter()).collect();
    for (i, a) in all.iter().enumerate() {
        push(-a.offset);
        for &atom in law.atoms() {
            push(atom * a.rate - a.offset);
        }
        for b in &all[i + 1..] {
            let k = 1.0 / a.rate - 1.0 / b.rate;
            if k.abs() > 1e-14 * (1.0 / a.rate).abs() {
                push((b.offset / b.rate - a.offset / a.rate) / k);
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let mut mass_w = 0.0;
    let mut pay_w = 0.0;
    for piece in cuts.windows(2) {
        let (s0, s1) = (piece[0], piece[1]);
        if s1 - s0 <= 0.0 {
            continue;
        }
        for (s, w) in rule.points(s0, s1) {
            let lo = lows.iter().fold(0.0f64, |acc, e| acc.max(e.at(s)));
            let hi = highs.iter().fold(f64::INFINITY, |acc, e| acc.min(e.at(s)));
            if hi <= lo {
                continue;
            }
            let (mass, moment) = law.mass_and_moment(lo, hi);
            let dens = arrival.density(s) * w;
            mass_w += dens * mass;
            pay_w += dens * ((pay0 + pay_s * s) * mass - pay_alpha * moment);
        }
    }
    (mass_w, pay_w)
}

/// Weights of all post-claim offsets that share a first-axis offset `j1`.
#[derive(Debug, Clone)]
pub struct KernelRow {
    pub j1: usize,
    pub j2_start: usize,
    /// Discounted probability of landing at offset `(j1, j2_start + k)`.
    pub weights: Vec<f64>,
    /// Discounted expected rounding dividend paid when landing there.
    pub rounding: Vec<f64>,
}

/// Sparse claim kernel of the two-dimensional scheme.
#[derive(Debug, Clone)]
pub struct ClaimKernel {
    pub rows: Vec<KernelRow>,
}

pub(crate) struct KernelGeometry {
    pub c1: f64,
    pub c2: f64,
    pub dx1: f64,
    pub dx2: f64,
    pub r1: f64,
    pub r2: f64,
}

impl ClaimKernel {
    pub(crate) fn build(
        law: &ClaimLaw,
        arrival: ArrivalWeights,
        geo: &KernelGeometry,
        j1_max: usize,
        j2_max: usize,
        rule: &GaussLegendre,
    ) -> Self {
        let mut rows = Vec::new();
        if arrival.lambda == 0.0 {
            return Self { rows };
        }
        let t_scale = (geo.c1 + geo.c2) * arrival.delta;
        for j1 in 0..=j1_max {
            let a_lo = ((j1 as f64 - 1.0) / geo.r1).max(0.0);
            let a_hi = (j1 as f64 + 1.0) / geo.r1;
            let first = ((geo.r2 * a_lo).floor() - 1.0).max(0.0) as usize;
            let last = ((geo.r2 * a_hi).ceil() as usize + 1).min(j2_max);
            if first > last {
                continue;
            }
            let mut weights = Vec::with_capacity(last - first + 1);
            let mut rounding = Vec::with_capacity(last - first + 1);
            for j2 in first..=last {
                let lows = [
                    Edge { offset: j1 as f64 - 1.0, rate: geo.r1 },
                    Edge { offset: j2 as f64 - 1.0, rate: geo.r2 },
                ];
                let highs = [
                    Edge { offset: j1 as f64, rate: geo.r1 },
                    Edge { offset: j2 as f64, rate: geo.r2 },
                ];
                let pay0 = j1 as f64 * geo.dx1 + j2 as f64 * geo.dx2;
                let (w, r) = cell_integrals(law, arrival, &lows, &highs, pay0, t_scale, 1.0, rule);
                weights.push(w);
                rounding.push(r);
            }
            let keep_lo = weights.iter().position(|&w| w > 0.0);
            let keep_hi = weights.iter().rposition(|&w| w > 0.0);
            if let (Some(lo), Some(hi)) = (keep_lo, keep_hi) {
                rows.push(KernelRow {
                    j1,
                    j2_start: first + lo,
                    weights: weights[lo..=hi].to_vec(),
                    rounding: rounding[lo..=hi].to_vec(),
                });
            }
        }
        Self { rows }
    }

    /// Total discounted probability of a non-ruinous claim at node `(n, m)`.
    pub fn survival_weight(&self, n: usize, m: usize) -> f64 {
        let mut acc = 0.0;
        for row in self.rows.iter().take_while(|r| r.j1 <= n) {
            for (k, w) in row.weights.iter().enumerate() {
                if row.j2_start + k <= m {
                    acc += w;
                }
            }
        }
        acc
    }
}

/// One-dimensional analogue: offsets `j = ceil(r α - s)`.
#[derive(Debug, Clone)]
pub struct ClaimKernel1d {
    pub weights: Vec<f64>,
    pub rounding: Vec<f64>,
}

impl ClaimKernel1d {
    /// `rounding[j]` is the discounted expectation of `jΔx + c t - b α`
    /// (the caller scales it by the payout multiplier).
    pub(crate) fn build(
        law: &ClaimLaw,
        arrival: ArrivalWeights,
        c: f64,
        b: f64,
        dx: f64,
        j_max: usize,
        rule: &GaussLegendre,
    ) -> Self {
        let mut weights = vec![0.0; j_max + 1];
        let mut rounding = vec![0.0; j_max + 1];
        if arrival.lambda == 0.0 {
            return Self { weights, rounding };
        }
        let r = b / dx;
        for j in 0..=j_max {
            let lows = [Edge { offset: j as f64 - 1.0, rate: r }];
            let highs = [Edge { offset: j as f64, rate: r }];
            // payment jΔx + c s δ - b α
            let (w, p) = cell_integrals(
                law,
                arrival,
                &lows,
                &highs,
                j as f64 * dx,
                c * arrival.delta,
                b,
                rule,
            );
            weights[j] = w;
            rounding[j] = p;
        }
        Self { weights, rounding }
    }
}
