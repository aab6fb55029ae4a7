//! The continuous operator `c1 V_x1 + c2 V_x2 - (q + λ) V + λ ∫ V(x - bα) dG(α)`,
//! evaluated as a diagnostic on piecewise-affine surfaces.

use super::ValueField;
use crate::error::{Error, Result};
use crate::model::{ClaimLaw, ModelParams, SurplusPoint};

/// A surface that is affine along claim rays between known breakpoints.
pub trait PiecewiseAffineSurface {
    fn value(&self, x1: f64, x2: f64) -> f64;

    /// Claim sizes in `(0, alpha_max)` where `α ↦ value(x1 - b1 α, x2 - b2 α)`
    /// may switch affine piece.
    fn ray_breakpoints(&self, x1: f64, x2: f64, b1: f64, b2: f64, alpha_max: f64) -> Vec<f64>;
}

impl ValueField {
    /// Floor-plus-remainder extension of the grid values to the quadrant:
    /// pay the remainders above the nearest lower-left node, then follow the
    /// grid strategy from there.
    pub fn extend_value(&self, x: SurplusPoint) -> Result<f64> {
        if !(x.x1 >= 0.0 && x.x2 >= 0.0) || !x.x1.is_finite() || !x.x2.is_finite() {
            return Err(Error::InvalidArgument(format!("point ({}, {}) outside the quadrant", x.x1, x.x2)));
        }
        Ok(self.extend_unchecked(x.x1, x.x2))
    }

    #[inline]
    pub(crate) fn extend_unchecked(&self, x1: f64, x2: f64) -> f64 {
        let g = &self.grid;
        let (k1, r1) = floor_cell(x1, g.dx1);
        let (k2, r2) = floor_cell(x2, g.dx2);
        self.extended(k1, k2) + r1 + r2
    }
}

/// Index of the node at or below `x` and the remainder, robust to `x` being
/// a node up to rounding.
pub(crate) fn floor_cell(x: f64, dx: f64) -> (usize, f64) {
    let z = x / dx;
    let mut k = z.floor();
    // snap values that are a node up to a few ulps
    if (z - (k + 1.0)).abs() <= 1e-9 * (1.0 + z.abs()) {
        k += 1.0;
    }
    let k = k.max(0.0);
    let rem = (x - k * dx).max(0.0);
    (k as usize, rem)
}

impl PiecewiseAffineSurface for ValueField {
    fn value(&self, x1: f64, x2: f64) -> f64 {
        self.extend_unchecked(x1, x2)
    }

    fn ray_breakpoints(&self, x1: f64, x2: f64, b1: f64, b2: f64, alpha_max: f64) -> Vec<f64> {
        let g = &self.grid;
        let mut pts = Vec::new();
        for (x, dx, b) in [(x1, g.dx1, b1), (x2, g.dx2, b2)] {
            let top = (x / dx).floor() as i64;
            for k in (0..=top).rev() {
                let a = (x - k as f64 * dx) / b;
                if a >= alpha_max {
                    break;
                }
                if a > 0.0 {
                    pts.push(a);
                }
            }
        }
        pts
    }
}

/// `∫_0^{min(x1/b1, x2/b2)} f(x - b α) dG(α)`, exact for piecewise-affine `f`.
pub(crate) fn claim_integral<S: PiecewiseAffineSurface + ?Sized>(
    params: &ModelParams,
    law: &ClaimLaw,
    surf: &S,
    x1: f64,
    x2: f64,
) -> f64 {
    let (b1, b2) = (params.b1, params.b2);
    let upper = (x1 / b1).min(x2 / b2);
    if upper <= 0.0 {
        return 0.0;
    }
    let mut cuts = surf.ray_breakpoints(x1, x2, b1, b2, upper);
    cuts.push(0.0);
    cuts.push(upper);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tiny = 1e-10 * (1.0 + upper);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= tiny);
    // the upper limit is inclusive, keep it exact
    if let Some(last) = cuts.last_mut() {
        *last = upper;
    }
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        if b - a <= 4.0 * tiny {
            // too short to fit a slope reliably; the surface is constant up to rounding
            let s = 0.5 * (a + b);
            let f = surf.value((x1 - b1 * s).max(0.0), (x2 - b2 * s).max(0.0));
            total += law.affine_unchecked(a, b, f, 0.0);
            continue;
        }
        // affine on (a, b]: fit from two interior points
        let (s1, s2) = (a + (b - a) / 3.0, a + 2.0 * (b - a) / 3.0);
        let f1 = surf.value((x1 - b1 * s1).max(0.0), (x2 - b2 * s1).max(0.0));
        let f2 = surf.value((x1 - b1 * s2).max(0.0), (x2 - b2 * s2).max(0.0));
        let slope = (f2 - f1) / (s2 - s1);
        let intercept = f1 - slope * s1;
        total += law.affine_unchecked(a, b, intercept, slope);
    }
    total
}

/// Continuous generator with forward differences of steps `h1`, `h2`.
pub fn continuous_generator<S: PiecewiseAffineSurface + ?Sized>(
    params: &ModelParams,
    law: &ClaimLaw,
    surf: &S,
    x: SurplusPoint,
    h1: f64,
    h2: f64,
) -> f64 {
    let v = surf.value(x.x1, x.x2);
    let v1 = (surf.value(x.x1 + h1, x.x2) - v) / h1;
    let v2 = (surf.value(x.x1, x.x2 + h2) - v) / h2;
    params.c1 * v1 + params.c2 * v2 - (params.q + params.lambda) * v
        + params.lambda * claim_integral(params, law, surf, x.x1, x.x2)
}

/// Continuous generator of the extended grid field, differencing with the
/// grid spacings.
pub fn continuous_l(params: &ModelParams, law: &ClaimLaw, v: &ValueField, x: SurplusPoint) -> Result<f64> {
    let g = &v.grid;
    let inside = x.x1 >= 0.0 && x.x2 >= 0.0 && x.x1 + g.dx1 <= g.x1_max() + 1e-12 && x.x2 + g.dx2 <= g.x2_max() + 1e-12;
    if !inside {
        return Err(Error::InvalidArgument(format!(
            "point ({}, {}) leaves no room for forward differences in the window",
            x.x1, x.x2
        )));
    }
    Ok(continuous_generator(params, law, v, x, g.dx1, g.dx2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GridSpec;
    use approx::assert_relative_eq;

    #[test]
    fn constant_field_without_claims() {
        let p = ModelParams::new(2.0, 1.0, 0.5, 0.5, 0.0, 0.05);
        let g = GridSpec::new(&p, 0.05, 40, 40).unwrap();
        let v = ValueField::from_fn(g, |_, _| 3.0);
        // the extension adds remainders, so sample at nodes and step to nodes
        let law = ClaimLaw::Exponential { rate: 1.0 };
        let x = SurplusPoint::new(g.x1(10), g.x2(7)).unwrap();
        let val = continuous_generator(&p, &law, &v, x, g.dx1, g.dx2);
        // forward differences across a node of a constant table: (3 - 3)/h = 0
        assert_relative_eq!(val, -0.05 * 3.0, max_relative = 1e-12);
    }

    #[test]
    fn unit_slope_field_is_strict_supersolution() {
        let p = ModelParams::new(2.0, 1.0, 0.5, 0.5, 1.0, 0.05);
        let g = GridSpec::new(&p, 0.03, 100, 250).unwrap();
        let k = 1.5 * (p.c1 + p.c2) / p.q;
        let u = ValueField::unit_slope(g, k);
        for law in [ClaimLaw::Exponential { rate: 0.6 }, ClaimLaw::Deterministic { atom: 29.0 / 12.0 }] {
            for (x1, x2) in [(0.3, 0.4), (2.0, 5.0), (5.4, 6.36), (4.1, 1.0)] {
                let x = SurplusPoint::new(x1, x2).unwrap();
                let l = continuous_l(&p, &law, &u, x).unwrap();
                assert!(l <= p.c1 + p.c2 - p.q * k + 1e-9, "{l}");
            }
        }
    }

    #[test]
    fn claim_integral_matches_direct_sum_for_atom() {
        let p = ModelParams::new(2.0, 1.0, 0.5, 0.5, 1.0, 0.05);
        let g = GridSpec::new(&p, 0.03, 100, 200).unwrap();
        let v = ValueField::from_fn(g, |n, m| ((n * 7 + m * 3) % 11) as f64 + 0.1 * n as f64);
        let a0 = 29.0 / 12.0;
        let law = ClaimLaw::Deterministic { atom: a0 };
        let (x1, x2) = (3.3, 2.2);
        let got = claim_integral(&p, &law, &v, x1, x2);
        let want = v.extend_value(SurplusPoint::new(x1 - 0.5 * a0, x2 - 0.5 * a0).unwrap()).unwrap();
        assert_relative_eq!(got, want, max_relative = 1e-12);
    }

    #[test]
    fn extension_rejects_negative_and_snaps_nodes() {
        let p = ModelParams::new(2.0, 1.0, 0.5, 0.5, 1.0, 0.05);
        let g = GridSpec::new(&p, 0.03, 10, 10).unwrap();
        let v = ValueField::from_fn(g, |n, m| (n * 100 + m) as f64);
        assert!(v.extend_value(SurplusPoint { x1: -0.1, x2: 0.0 }).is_err());
        let x = SurplusPoint::new(3.0 * g.dx1, 7.0 * g.dx2).unwrap();
        assert_eq!(v.extend_value(x).unwrap(), 307.0);
    }
}
