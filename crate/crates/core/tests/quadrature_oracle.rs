//! Independent checks of the claim integral against brute-force quadrature.
//!
//! The oracle integrates the definition directly: midpoint nodes in the
//! claim time, and in the claim size midpoint nodes inside each interval on
//! which both rounded-down post-claim nodes stay fixed. It shares no code
//! with the kernel tables beyond the claim-law density.

use optdiv::hjb2d::{DiscreteHjb, ValueField};
use optdiv::model::{ClaimLaw, GridSpec, ModelParams};
use optdiv::solver2d::{solve, SolveOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Case<'a> {
    p: ModelParams,
    law: ClaimLaw,
    grid: GridSpec,
    v: &'a ValueField,
}

impl Case<'_> {
    /// Post-claim nodes and rounding payout for a claim of size `a` at
    /// fraction `s` of the step, or `None` if the claim ruins a branch.
    fn after_claim(&self, n: usize, m: usize, s: f64, a: f64) -> Option<f64> {
        let g = &self.grid;
        let t = s * g.delta;
        let y1 = n as f64 * g.dx1 + self.p.c1 * t - self.p.b1 * a;
        let y2 = m as f64 * g.dx2 + self.p.c2 * t - self.p.b2 * a;
        if y1 < 0.0 || y2 < 0.0 {
            return None;
        }
        let k1 = ((y1 / g.dx1).floor() as usize).min(n + 1);
        let k2 = ((y2 / g.dx2).floor() as usize).min(m + 1);
        let payout = (y1 - k1 as f64 * g.dx1) + (y2 - k2 as f64 * g.dx2);
        Some(self.v.extended(k1, k2) + payout)
    }

    fn brute(&self, n: usize, m: usize, nt: usize, na: usize) -> f64 {
        let g = &self.grid;
        let (lambda, q) = (self.p.lambda, self.p.q);
        let r1 = self.p.b1 / g.dx1;
        let r2 = self.p.b2 / g.dx2;
        let mut total = 0.0;
        for i in 0..nt {
            let s = (i as f64 + 0.5) / nt as f64;
            let t = s * g.delta;
            let wt = lambda * (-(lambda + q) * t).exp() * g.delta / nt as f64;
            let a_max = ((n as f64 + s) / r1).min((m as f64 + s) / r2);
            let inner = match self.law {
                ClaimLaw::Deterministic { atom } => {
                    if atom <= a_max {
                        self.after_claim(n, m, s, atom).unwrap_or(0.0)
                    } else {
                        0.0
                    }
                }
                law => {
                    let mut cuts = vec![0.0, a_max];
                    for r in [r1, r2] {
                        let mut k = 0.0;
                        while (k + s) / r < a_max {
                            cuts.push((k + s) / r);
                            k += 1.0;
                        }
                    }
                    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    let mut acc = 0.0;
                    for w in cuts.windows(2) {
                        let (lo, hi) = (w[0], w[1]);
                        if hi <= lo {
                            continue;
                        }
                        let k = ((na as f64 * (hi - lo) / a_max).ceil() as usize).max(4);
                        let h = (hi - lo) / k as f64;
                        for j in 0..k {
                            let a = lo + (j as f64 + 0.5) * h;
                            let f = self.after_claim(n, m, s, a).unwrap_or(0.0);
                            acc += f * law.density(a).unwrap() * h;
                        }
                    }
                    acc
                }
            };
            total += wt * inner;
        }
        total
    }
}

fn example1() -> (ModelParams, ClaimLaw) {
    (ModelParams::new(2.0, 1.0, 0.5, 0.5, 1.0, 0.05), ClaimLaw::Exponential { rate: 0.6 })
}

#[test]
fn converged_example1_field_at_5_5() {
    let (p, law) = example1();
    let grid = GridSpec::from_extent(&p, 0.03, 3.0, 3.0).unwrap();
    let hjb = DiscreteHjb::new(p, law, grid).unwrap();
    let sol = solve(&hjb, &SolveOptions::default()).unwrap();
    let case = Case { p, law, grid, v: &sol.value };
    let got = hjb.integral_i_delta(&sol.value, 5, 5);
    let want = case.brute(5, 5, 4000, 4000);
    let rel = (got - want).abs() / want.abs();
    assert!(rel < 1e-6, "I = {got}, brute force {want}, relative {rel:.2e}");
}

#[test]
fn random_cell_fields_match_for_continuous_laws() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for law in [ClaimLaw::Exponential { rate: 0.6 }, ClaimLaw::Erlang2 { rate: 6.0 / 7.0 }] {
        let p = ModelParams::new(2.0, 1.0, 0.5, 0.5, 1.0, 0.05);
        let grid = GridSpec::new(&p, 0.05, 30, 40).unwrap();
        let v = ValueField::from_fn(grid, |_, _| rng.random_range(0.0..10.0));
        let hjb = DiscreteHjb::new(p, law, grid).unwrap();
        let case = Case { p, law, grid, v: &v };
        for (n, m) in [(3, 7), (12, 5), (20, 33)] {
            let got = hjb.integral_i_delta(&v, n, m);
            // the oracle's own error is second order in the claim-size spacing and
            // sits near 1e-9 at this resolution
            let want = case.brute(n, m, 10_000, 16_000);
            let rel = (got - want).abs() / want.abs();
            assert!(rel < 1e-8, "{law:?} at ({n}, {m}): {got} vs {want}, relative {rel:.2e}");
        }
    }
}

/// For a point-mass law the claim size is fixed, so the integral is a sum of
/// `∫ e^{-βt} (A + C t) dt` over the time intervals on which the rounded
/// post-claim node is constant.
fn atom_closed_form(p: &ModelParams, grid: &GridSpec, v: &ValueField, atom: f64, n: usize, m: usize) -> f64 {
    let beta = p.lambda + p.q;
    let r1 = p.b1 / grid.dx1;
    let r2 = p.b2 / grid.dx2;
    let mut cuts = vec![0.0, 1.0];
    for r in [r1, r2] {
        let x = r * atom;
        // s where r * atom - s crosses an integer
        let f = x - x.floor();
        if f > 0.0 && f < 1.0 {
            cuts.push(f);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        if s1 <= s0 {
            continue;
        }
        let sm = 0.5 * (s0 + s1);
        let j1 = (r1 * atom - sm).ceil();
        let j2 = (r2 * atom - sm).ceil();
        if j1 > n as f64 || j2 > m as f64 {
            continue;
        }
        let base = v.get(n - j1 as usize, m - j2 as usize) + j1 * grid.dx1 + j2 * grid.dx2 - atom;
        let c = p.c1 + p.c2;
        let (t0, t1) = (s0 * grid.delta, s1 * grid.delta);
        // ∫ λ e^{-βt} (base + c t) dt
        let e = |t: f64| -(-beta * t).exp() / beta;
        let te = |t: f64| -(-beta * t).exp() * (t / beta + 1.0 / (beta * beta));
        total += p.lambda * (base * (e(t1) - e(t0)) + c * (te(t1) - te(t0)));
    }
    total
}

#[test]
fn point_mass_matches_closed_form() {
    let p = ModelParams::new(2.0, 1.0, 0.5, 0.5, 1.0, 0.05);
    let atom = 29.0 / 12.0;
    let law = ClaimLaw::Deterministic { atom };
    let grid = GridSpec::new(&p, 0.02, 120, 200).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let v = ValueField::from_fn(grid, |_, _| rng.random_range(0.0..10.0));
    let hjb = DiscreteHjb::new(p, law, grid).unwrap();
    for (n, m) in [(0, 0), (30, 60), (31, 61), (60, 30), (100, 180), (40, 59)] {
        let got = hjb.integral_i_delta(&v, n, m);
        let want = atom_closed_form(&p, &grid, &v, atom, n, m);
        assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()), "({n}, {m}): {got} vs {want}");
    }
}
