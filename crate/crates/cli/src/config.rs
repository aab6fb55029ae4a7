//! Flat `key = value` run configuration.
//!
//! Blank lines and everything after `#` are ignored. Numbers may be written
//! as fractions (`claim.atom = 29/12`). Unknown and repeated keys are errors,
//! so a typo never silently falls back to a default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use optdiv::model::{ClaimLaw, GridSpec, ModelParams, SurplusPoint};
use optdiv::solver1d::AuxKind;
use optdiv::solver2d::{SolveOptions, SweepMode, Tolerance, DEFAULT_MAX_SWEEPS, DEFAULT_REL_TOL};
use optdiv::{Error, Result};

const KEYS: &[&str] = &[
    "name",
    "c1",
    "c2",
    "b1",
    "b2",
    "lambda",
    "q",
    "claim.kind",
    "claim.rate",
    "claim.atom",
    "delta",
    "x1_max",
    "x2_max",
    "tol",
    "tol_abs",
    "eps_tie",
    "max_sweeps",
    "mode",
    "paths",
    "seed",
    "sim.points",
    "delta_1d",
    "x_max_1d",
    "solve1d.kind",
    "merger.cost",
    "validate.doubling",
    "out",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// The file exactly as read, echoed into every manifest.
    pub source: String,
    pub name: String,
    pub params: ModelParams,
    pub law: ClaimLaw,
    pub delta: f64,
    pub x1_max: f64,
    pub x2_max: f64,
    pub tol: Tolerance,
    pub eps_tie: f64,
    pub max_sweeps: usize,
    pub mode: SweepMode,
    pub paths: usize,
    pub seed: u64,
    /// Starting points for Monte Carlo checks; sampled from the seed when empty.
    pub sim_points: Vec<SurplusPoint>,
    pub delta_1d: f64,
    pub x_max_1d: f64,
    pub kind_1d: AuxKind,
    pub merger_cost: f64,
    pub validate_doubling: bool,
    pub out: Option<PathBuf>,
}

fn number(key: &str, raw: &str) -> Result<f64> {
    let bad = || Error::Config(format!("{key}: cannot read '{raw}' as a number"));
    let v = match raw.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            a / b
        }
        None => raw.parse().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

fn integer(key: &str, raw: &str) -> Result<u64> {
    raw.replace('_', "")
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot read '{raw}' as a nonnegative integer")))
}

struct Entries(BTreeMap<String, String>);

impl Entries {
    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<f64> {
        let raw = self.take(key).ok_or_else(|| Error::Config(format!("missing required key {key}")))?;
        number(key, &raw)
    }

    fn optional(&mut self, key: &str, default: f64) -> Result<f64> {
        self.take(key).map_or(Ok(default), |raw| number(key, &raw))
    }
}

fn parse_points(raw: &str) -> Result<Vec<SurplusPoint>> {
    raw.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (a, b) = pair
                .split_once(',')
                .ok_or_else(|| Error::Config(format!("sim.points: expected 'x1,x2' in '{pair}'")))?;
            let p = SurplusPoint::new(number("sim.points", a.trim())?, number("sim.points", b.trim())?)
                .map_err(|e| Error::Config(format!("sim.points: {e}")))?;
            Ok(p)
        })
        .collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::Config(format!("line {}: unknown key {k}", no + 1)));
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: key {k} given twice", no + 1)));
            }
        }
        let mut e = Entries(map);
        let params = ModelParams::new(
            e.required("c1")?,
            e.required("c2")?,
            e.required("b1")?,
            e.required("b2")?,
            e.required("lambda")?,
            e.required("q")?,
        )
        .validate()
        .map_err(|err| Error::Config(err.to_string()))?;
        let law = match e.take("claim.kind").as_deref() {
            Some("exponential") => ClaimLaw::Exponential { rate: e.required("claim.rate")? },
            Some("erlang2") => ClaimLaw::Erlang2 { rate: e.required("claim.rate")? },
            Some("deterministic") => ClaimLaw::Deterministic { atom: e.required("claim.atom")? },
            Some(other) => {
                return Err(Error::Config(format!(
                    "claim.kind must be exponential, erlang2 or deterministic, got {other}"
                )))
            }
            None => return Err(Error::Config("missing required key claim.kind".into())),
        }
        .validate()
        .map_err(|err| Error::Config(err.to_string()))?;
        let delta = e.required("delta")?;
        let x1_max = e.required("x1_max")?;
        let x2_max = e.required("x2_max")?;
        GridSpec::from_extent(&params, delta, x1_max, x2_max).map_err(|err| Error::Config(err.to_string()))?;
        let tol = match (e.take("tol"), e.take("tol_abs")) {
            (Some(_), Some(_)) => return Err(Error::Config("give tol or tol_abs, not both".into())),
            (Some(r), None) => Tolerance::Relative(number("tol", &r)?),
            (None, Some(a)) => Tolerance::Absolute(number("tol_abs", &a)?),
            (None, None) => Tolerance::Relative(DEFAULT_REL_TOL),
        };
        let tol_value = match tol {
            Tolerance::Relative(t) | Tolerance::Absolute(t) => t,
        };
        if !(tol_value > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        let eps_tie = e.optional("eps_tie", optdiv::hjb2d::DEFAULT_EPS_TIE)?;
        if !(eps_tie >= 0.0) {
            return Err(Error::Config("eps_tie must be nonnegative".into()));
        }
        let max_sweeps = match e.take("max_sweeps") {
            Some(raw) => integer("max_sweeps", &raw)? as usize,
            None => DEFAULT_MAX_SWEEPS,
        };
        let mode = match e.take("mode") {
            Some(raw) => raw.parse().map_err(|err: Error| Error::Config(err.to_string()))?,
            None => SweepMode::InPlace,
        };
        let paths = match e.take("paths") {
            Some(raw) => integer("paths", &raw)? as usize,
            None => 100_000,
        };
        if paths == 0 {
            return Err(Error::Config("paths must be positive".into()));
        }
        let seed = match e.take("seed") {
            Some(raw) => integer("seed", &raw)?,
            None => 0,
        };
        let sim_points = match e.take("sim.points") {
            Some(raw) => parse_points(&raw)?,
            None => Vec::new(),
        };
        let delta_1d = e.optional("delta_1d", delta)?;
        let x_max_1d = e.optional("x_max_1d", x1_max.max(x2_max))?;
        if !(delta_1d > 0.0 && x_max_1d > 0.0) {
            return Err(Error::Config("delta_1d and x_max_1d must be positive".into()));
        }
        let merger_cost = e.optional("merger.cost", 0.0)?;
        if !(merger_cost >= 0.0) {
            return Err(Error::Config("merger.cost must be nonnegative".into()));
        }
        let kind_1d = match e.take("solve1d.kind").as_deref() {
            None | Some("wbar") => AuxKind::Wbar,
            Some("merger") => AuxKind::Merger { cost: merger_cost },
            Some(other) => return Err(Error::Config(format!("solve1d.kind must be wbar or merger, got {other}"))),
        };
        let validate_doubling = match e.take("validate.doubling").as_deref() {
            None | Some("true") => true,
            Some("false") => false,
            Some(other) => return Err(Error::Config(format!("validate.doubling must be true or false, got {other}"))),
        };
        let name = e.take("name").unwrap_or_else(|| "run".into());
        let out = e.take("out").map(PathBuf::from);
        debug_assert!(e.0.is_empty(), "every known key is consumed: {:?}", e.0.keys());
        Ok(Self {
            source: text.to_string(),
            name,
            params,
            law,
            delta,
            x1_max,
            x2_max,
            tol,
            eps_tie,
            max_sweeps,
            mode,
            paths,
            seed,
            sim_points,
            delta_1d,
            x_max_1d,
            kind_1d,
            merger_cost,
            validate_doubling,
            out,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec::from_extent(&self.params, self.delta, self.x1_max, self.x2_max).expect("checked while parsing")
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            mode: self.mode,
            max_sweeps: self.max_sweeps,
            eps_tie: self.eps_tie,
            ..Default::default()
        }
    }
}
