//! Risk-model parameters, claim-size laws and grid geometry.
//!
//! Two branches receive premiums at rates `c1`, `c2` and split every claim
//! `U` as `(b1 U, b2 U)`. Claims arrive as a Poisson process of intensity
//! `lambda`; dividends are discounted at rate `q`. Branch labels are
//! normalised so that `c1/b1 >= c2/b2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const REL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub c1: f64,
    pub c2: f64,
    pub b1: f64,
    pub b2: f64,
    pub lambda: f64,
    pub q: f64,
}

/// Whether the premium-per-claim ratios of the two branches coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `c1/b1 = c2/b2`
    Symmetric,
    /// `c1/b1 > c2/b2`
    Strict,
}

impl ModelParams {
    pub fn new(c1: f64, c2: f64, b1: f64, b2: f64, lambda: f64, q: f64) -> Self {
        Self {
            c1,
            c2,
            b1,
            b2,
            lambda,
            q,
        }
    }

    /// Checks every parameter invariant and returns the parameters unchanged.
    ///
    /// `lambda = 0` is accepted: it is the claim-free limit used by tests of
    /// the discrete operators. Premiums, proportions and `q` must be positive.
    pub fn validate(self) -> Result<Self> {
        let all = [self.c1, self.c2, self.b1, self.b2, self.lambda, self.q];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        if self.c1 <= 0.0 || self.c2 <= 0.0 {
            return Err(Error::InvalidParams("premium rates must be positive".into()));
        }
        if self.b1 <= 0.0 || self.b2 <= 0.0 {
            return Err(Error::InvalidParams("claim proportions must be positive".into()));
        }
        if (self.b1 + self.b2 - 1.0).abs() > REL_EPS {
            return Err(Error::InvalidParams(format!(
                "claim proportions must sum to one (b1 + b2 = {})",
                self.b1 + self.b2
            )));
        }
        if self.lambda < 0.0 {
            return Err(Error::InvalidParams("claim intensity must be nonnegative".into()));
        }
        if self.q <= 0.0 {
            return Err(Error::InvalidParams("discount rate must be positive".into()));
        }
        let r1 = self.c1 / self.b1;
        let r2 = self.c2 / self.b2;
        if r1 < r2 && !approx_eq(r1, r2) {
            return Err(Error::InvalidParams(format!(
                "branch labels violate c1/b1 >= c2/b2 ({r1} < {r2}); swap the branches"
            )));
        }
        Ok(self)
    }

    pub fn regime(&self) -> Regime {
        if approx_eq(self.c1 / self.b1, self.c2 / self.b2) {
            Regime::Symmetric
        } else {
            Regime::Strict
        }
    }

    /// Slope of the line where a large enough claim ruins both branches at once.
    pub fn diagonal_slope(&self) -> f64 {
        self.b2 / self.b1
    }

    /// The same parameters with a different claim intensity.
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    /// Offset of the a priori upper bound `V(x) <= x1 + x2 + (c1 + c2)/q`.
    pub fn upper_bound_offset(&self) -> f64 {
        (self.c1 + self.c2) / self.q
    }

    /// Value of paying everything now and streaming premiums until the first claim.
    pub fn take_and_run_offset(&self) -> f64 {
        (self.c1 + self.c2) / (self.q + self.lambda)
    }
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_EPS * a.abs().max(b.abs()).max(1.0)
}

/// Claim-size distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClaimLaw {
    /// cdf `1 - exp(-rate x)`.
    Exponential { rate: f64 },
    /// Gamma with shape 2, cdf `1 - (1 + rate x) exp(-rate x)`.
    Erlang2 { rate: f64 },
    /// Point mass at `atom`.
    Deterministic { atom: f64 },
}

impl ClaimLaw {
    pub fn validate(self) -> Result<Self> {
        let ok = match self {
            ClaimLaw::Exponential { rate } | ClaimLaw::Erlang2 { rate } => {
                rate.is_finite() && rate > 0.0
            }
            ClaimLaw::Deterministic { atom } => atom.is_finite() && atom > 0.0,
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidParams(format!("bad claim law {self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ClaimLaw::Exponential { rate } => 1.0 / rate,
            ClaimLaw::Erlang2 { rate } => 2.0 / rate,
            ClaimLaw::Deterministic { atom } => atom,
        }
    }

    /// Point masses of the law, if any.
    pub fn atoms(&self) -> &[f64] {
        match self {
            ClaimLaw::Deterministic { atom } => std::slice::from_ref(atom),
            _ => &[],
        }
    }

    /// Right-continuous distribution function.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::InvalidArgument(format!("cdf at negative size {x}")));
        }
        Ok(self.survival_free_cdf(x))
    }

    fn survival_free_cdf(&self, x: f64) -> f64 {
        match *self {
            ClaimLaw::Exponential { rate } => -(-rate * x).exp_m1(),
            ClaimLaw::Erlang2 { rate } => {
                let rx = rate * x;
                // 1 - (1 + rx) e^{-rx} = -expm1(-rx) - rx e^{-rx}
                (-(-rx).exp_m1() - rx * (-rx).exp()).max(0.0)
            }
            ClaimLaw::Deterministic { atom } => {
                if x >= atom {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `∫ (p + s α) dG(α)` over `(a, b]`, in closed form. `b` may be `+∞`.
    pub fn integrate_affine(&self, a: f64, b: f64, p: f64, s: f64) -> Result<f64> {
        if !(a >= 0.0) || !(a <= b) || a.is_infinite() {
            return Err(Error::InvalidArgument(format!(
                "integration bounds must satisfy 0 <= a <= b, got ({a}, {b})"
            )));
        }
        Ok(self.affine_unchecked(a, b, p, s))
    }

    /// Same as [`integrate_affine`](Self::integrate_affine) for callers that
    /// already guarantee `0 <= a <= b`.
    #[inline]
    pub(crate) fn affine_unchecked(&self, a: f64, b: f64, p: f64, s: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let (mass, moment) = self.mass_and_moment(a, b);
        p * mass + s * moment
    }

    /// Probability mass and first moment of the law restricted to `(a, b]`.
    #[inline]
    pub(crate) fn mass_and_moment(&self, a: f64, b: f64) -> (f64, f64) {
        match *self {
            ClaimLaw::Exponential { rate: d } => {
                let ea = (-d * a).exp();
                if b.is_infinite() {
                    return (ea, (a + 1.0 / d) * ea);
                }
                let h = b - a;
                let one_minus = -(-d * h).exp_m1();
                let eh = (-d * h).exp();
                let mass = ea * one_minus;
                let moment = ea * ((a + 1.0 / d) * one_minus - h * eh);
                (mass, moment)
            }
            ClaimLaw::Erlang2 { rate: r } => {
                let ea = (-r * a).exp();
                let pa = r * a * a + 2.0 * a + 2.0 / r;
                if b.is_infinite() {
                    return ((1.0 + r * a) * ea, pa * ea);
                }
                let h = b - a;
                let one_minus = -(-r * h).exp_m1();
                let eh = (-r * h).exp();
                let mass = ea * ((1.0 + r * a) * one_minus - r * h * eh);
                // F(α) = e^{-rα} (r α² + 2α + 2/r) is minus an antiderivative of α g(α).
                let moment = ea * (pa * one_minus - h * (r * (a + b) + 2.0) * eh);
                (mass.max(0.0), moment.max(0.0))
            }
            ClaimLaw::Deterministic { atom } => {
                if a < atom && atom <= b {
                    (1.0, atom)
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }

    /// Density for the continuous laws; `None` for point masses.
    pub fn density(&self, x: f64) -> Option<f64> {
        match *self {
            ClaimLaw::Exponential { rate } => Some(if x < 0.0 { 0.0 } else { rate * (-rate * x).exp() }),
            ClaimLaw::Erlang2 { rate } => {
                Some(if x < 0.0 { 0.0 } else { rate * rate * x * (-rate * x).exp() })
            }
            ClaimLaw::Deterministic { .. } => None,
        }
    }
}

/// Discretisation step and window of the computational grid.
///
/// Grid spacings are tied to the time step: one step of length `delta`
/// without claims moves the surplus exactly one node along each axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub delta: f64,
    pub n_max: usize,
    pub m_max: usize,
    pub dx1: f64,
    pub dx2: f64,
}

impl GridSpec {
    pub fn new(params: &ModelParams, delta: f64, n_max: usize, m_max: usize) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {delta}")));
        }
        if n_max < 2 || m_max < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 3 nodes per axis, got n_max={n_max}, m_max={m_max}"
            )));
        }
        Ok(Self {
            delta,
            n_max,
            m_max,
            dx1: params.c1 * delta,
            dx2: params.c2 * delta,
        })
    }

    /// Window given in currency units: `n_max = round(x1_max / dx1)`.
    pub fn from_extent(params: &ModelParams, delta: f64, x1_max: f64, x2_max: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {delta}")));
        }
        let n_max = (x1_max / (params.c1 * delta)).round();
        let m_max = (x2_max / (params.c2 * delta)).round();
        if !(n_max.is_finite() && m_max.is_finite()) || n_max < 0.0 || m_max < 0.0 {
            return Err(Error::InvalidArgument("bad grid extent".into()));
        }
        Self::new(params, delta, n_max as usize, m_max as usize)
    }

    pub fn x1(&self, n: usize) -> f64 {
        n as f64 * self.dx1
    }

    pub fn x2(&self, m: usize) -> f64 {
        m as f64 * self.dx2
    }

    pub fn rows(&self) -> usize {
        self.n_max + 1
    }

    pub fn cols(&self) -> usize {
        self.m_max + 1
    }

    pub fn len(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, n: usize, m: usize) -> usize {
        n * self.cols() + m
    }

    pub fn x1_max(&self) -> f64 {
        self.x1(self.n_max)
    }

    pub fn x2_max(&self) -> f64 {
        self.x2(self.m_max)
    }
}

/// Which side of the simultaneous-ruin line a surplus lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `(b2/b1) x1 > x2`: the first branch survives a ruinous claim.
    D1,
    /// On the line `x2 = (b2/b1) x1`.
    M,
    /// `(b2/b1) x1 < x2`.
    D2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurplusPoint {
    pub x1: f64,
    pub x2: f64,
}

impl SurplusPoint {
    pub fn new(x1: f64, x2: f64) -> Result<Self> {
        if !(x1.is_finite() && x2.is_finite()) || x1 < 0.0 || x2 < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "surplus must be finite and nonnegative, got ({x1}, {x2})"
            )));
        }
        Ok(Self { x1, x2 })
    }

    pub fn side(&self, params: &ModelParams) -> Side {
        let lhs = params.b2 * self.x1;
        let rhs = params.b1 * self.x2;
        if approx_eq(lhs, rhs) {
            Side::M
        } else if lhs > rhs {
            Side::D1
        } else {
            Side::D2
        }
    }

    /// Point of the simultaneous-ruin line reached by paying the excess of
    /// the branch that is ahead.
    pub fn projection(&self, params: &ModelParams) -> SurplusPoint {
        match self.side(params) {
            Side::D1 | Side::M => SurplusPoint {
                x1: params.b1 / params.b2 * self.x2,
                x2: self.x2,
            },
            Side::D2 => SurplusPoint {
                x1: self.x1,
                x2: params.b2 / params.b1 * self.x1,
            },
        }
    }
}
