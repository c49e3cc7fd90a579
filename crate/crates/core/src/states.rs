//! Photon-number entangled states sum_n psi_n |n>|n> and their pure-state
//! measures.
//!
//! Built-in families:
//! - twin beam (two-mode squeezed vacuum), psi_n proportional to lambda^n, lambda = tanh r;
//! - photon-subtracted squeezed vacuum, psi_n proportional to (n + 1) x^(n + 1);
//! - the two-term state c0 |00> + c1 |11>.
//!
//! Energies are total mean photon numbers over both modes.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockCutoff, TwoModeState};

/// Upper end of the bisection bracket for lambda and x.
pub const PARAM_BRACKET_MAX: f64 = 1.0 - 1e-9;
const MAX_BISECTION_ITERS: usize = 200;
const MATCH_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Twb { lambda: f64 },
    Pssv { x: f64 },
    Psi01 { c1_sq: f64 },
    Custom,
}

impl Family {
    pub fn kind(&self) -> Option<FamilyKind> {
        match self {
            Family::Twb { .. } => Some(FamilyKind::Twb),
            Family::Pssv { .. } => Some(FamilyKind::Pssv),
            Family::Psi01 { .. } => Some(FamilyKind::Psi01),
            Family::Custom => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Twb,
    Pssv,
    Psi01,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::Twb => "twb",
            FamilyKind::Pssv => "pssv",
            FamilyKind::Psi01 => "psi01",
        })
    }
}

/// Schmidt coefficients of a pure PNES, normalized over the stored length.
#[derive(Clone, Debug, PartialEq)]
pub struct PnesCoefficients {
    coeffs: Vec<Complex64>,
    family: Family,
    /// Weight of the untruncated family state beyond the stored coefficients,
    /// removed by renormalization.
    truncation_loss: f64,
}

fn real_coeffs(v: impl IntoIterator<Item = f64>) -> Vec<Complex64> {
    v.into_iter().map(|x| Complex64::new(x, 0.0)).collect()
}

fn normalize(coeffs: &mut [Complex64]) -> f64 {
    let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in coeffs.iter_mut() {
        *c /= norm;
    }
    norm
}

/// Exact PSSV normalization, N = (1 - y)^3 / (y (1 + y)) with y = x^2.
pub fn pssv_normalization(x: f64) -> f64 {
    let y = x * x;
    (1.0 - y).powi(3) / (y * (1.0 + y))
}

fn pssv_tail(x: f64, from: usize) -> f64 {
    // N * sum_{n >= from} (n + 1)^2 y^(n + 1)
    let y = x * x;
    let norm = pssv_normalization(x);
    let mut n = from;
    let mut term = ((n + 1) as f64).powi(2) * y.powi(n as i32 + 1);
    let mut sum = 0.0;
    while term > 0.0 && term * norm > 1e-30 * (1.0 + sum) {
        sum += term;
        n += 1;
        term = ((n + 1) as f64).powi(2) * y.powi(n as i32 + 1);
        if n > 100_000 {
            break;
        }
    }
    norm * sum
}

impl PnesCoefficients {
    pub fn twb(lambda: f64, cutoff: FockCutoff) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!("twin-beam lambda must lie in [0, 1), got {lambda}")));
        }
        let d = cutoff.dim();
        let mut coeffs = real_coeffs((0..d).map(|n| lambda.powi(n as i32)));
        normalize(&mut coeffs);
        Ok(PnesCoefficients { coeffs, family: Family::Twb { lambda }, truncation_loss: lambda.powi(2 * d as i32) })
    }

    pub fn pssv(x: f64, cutoff: FockCutoff) -> Result<Self> {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::InvalidParameter(format!("PSSV x must lie in (0, 1), got {x}")));
        }
        let d = cutoff.dim();
        // psi_n / x = (n + 1) x^n keeps the leading terms O(1)
        let mut coeffs = real_coeffs((0..d).map(|n| (n + 1) as f64 * x.powi(n as i32)));
        normalize(&mut coeffs);
        Ok(PnesCoefficients { coeffs, family: Family::Pssv { x }, truncation_loss: pssv_tail(x, d) })
    }

    pub fn psi01(c1_sq: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c1_sq) {
            return Err(Error::InvalidParameter(format!("|c1|^2 must lie in [0, 1], got {c1_sq}")));
        }
        Ok(PnesCoefficients {
            coeffs: real_coeffs([(1.0 - c1_sq).sqrt(), c1_sq.sqrt()]),
            family: Family::Psi01 { c1_sq },
            truncation_loss: 0.0,
        })
    }

    /// Arbitrary (unnormalized) Schmidt coefficients, normalized on construction.
    pub fn custom(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidParameter("custom coefficients must be finite and non-empty".into()));
        }
        let mut coeffs = coeffs;
        if normalize(&mut coeffs) == 0.0 {
            return Err(Error::InvalidParameter("custom coefficients are all zero".into()));
        }
        Ok(PnesCoefficients { coeffs, family: Family::Custom, truncation_loss: 0.0 })
    }

    /// Same family state rebuilt (or, for custom states, truncated) at another cutoff.
    pub fn with_cutoff(&self, cutoff: FockCutoff) -> Result<Self> {
        match self.family {
            Family::Twb { lambda } => Self::twb(lambda, cutoff),
            Family::Pssv { x } => Self::pssv(x, cutoff),
            Family::Psi01 { .. } | Family::Custom => {
                let d = cutoff.dim();
                if self.coeffs.len() <= d {
                    return Ok(self.clone());
                }
                let dropped: f64 = self.coeffs[d..].iter().map(|c| c.norm_sqr()).sum();
                let mut coeffs = self.coeffs[..d].to_vec();
                normalize(&mut coeffs);
                Ok(PnesCoefficients {
                    coeffs,
                    family: self.family.clone(),
                    truncation_loss: self.truncation_loss + dropped,
                })
            }
        }
    }

    /// Smallest number of Fock levels leaving less than `tol` of the
    /// untruncated state's weight outside.
    pub fn required_dim(&self, tol: f64) -> usize {
        match self.family {
            Family::Twb { lambda } => {
                if lambda == 0.0 {
                    1
                } else {
                    (tol.ln() / (2.0 * lambda.ln())).ceil().max(1.0) as usize
                }
            }
            Family::Pssv { x } => {
                let mut d = 1;
                while pssv_tail(x, d) >= tol {
                    d += 1;
                }
                d
            }
            Family::Psi01 { .. } | Family::Custom => {
                let mut d = self.coeffs.len();
                while d > 1 && self.coeffs[d - 1].norm_sqr() == 0.0 {
                    d -= 1;
                }
                d
            }
        }
    }

    /// Smallest number of Fock levels whose omitted amplitudes |psi_n| of the
    /// untruncated state sum to less than `tol`. Pure-state negativity depends
    /// on sum_n |psi_n|, so this governs how well it survives truncation.
    pub fn amplitude_dim(&self, tol: f64) -> usize {
        match self.family {
            Family::Twb { lambda } => {
                if lambda == 0.0 {
                    1
                } else {
                    // sqrt(1 - l^2) l^d / (1 - l)
                    let scale = (1.0 - lambda * lambda).sqrt() / (1.0 - lambda);
                    ((tol / scale).ln() / lambda.ln()).ceil().max(1.0) as usize
                }
            }
            Family::Pssv { x } => {
                // sqrt(N) sum_{k > d} k x^k = sqrt(N) x^(d+1) ((d + 1) - d x) / (1 - x)^2
                let scale = pssv_normalization(x).sqrt() / (1.0 - x).powi(2);
                let mut d = 1;
                while scale * x.powi(d as i32 + 1) * ((d + 1) as f64 - d as f64 * x) >= tol {
                    d += 1;
                }
                d
            }
            Family::Psi01 { .. } | Family::Custom => self.required_dim(0.0),
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn truncation_loss(&self) -> f64 {
        self.truncation_loss
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Weight beyond the first `d` levels relative to the untruncated state.
    pub fn tail_beyond(&self, d: usize) -> f64 {
        let kept: f64 = self.coeffs.iter().skip(d).map(|c| c.norm_sqr()).sum();
        self.truncation_loss + kept * (1.0 - self.truncation_loss)
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.coeffs.iter().map(|c| c.norm_sqr())
    }

    /// Density matrix of the pure state at the given cutoff.
    pub fn to_state(&self, cutoff: FockCutoff) -> TwoModeState {
        TwoModeState::from_schmidt(&self.coeffs, cutoff, self.truncation_loss)
    }
}

/// Total mean photon number 2 sum_n n |psi_n|^2.
pub fn pnes_energy(coeffs: &PnesCoefficients) -> f64 {
    2.0 * coeffs.probabilities().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>()
}

/// Negativity of a pure Schmidt-form state, ((sum_n |psi_n|)^2 - 1) / 2.
pub fn pure_negativity(coeffs: &PnesCoefficients) -> f64 {
    let s: f64 = coeffs.coeffs().iter().map(|c| c.norm()).sum();
    ((s * s - 1.0) / 2.0).max(0.0)
}

/// Entanglement entropy in nats.
pub fn pure_entropy(coeffs: &PnesCoefficients) -> f64 {
    coeffs.probabilities().filter(|&p| p > 0.0).map(|p| -p * p.ln()).sum()
}

/// Entanglement entropy in bits.
pub fn pure_entropy_bits(coeffs: &PnesCoefficients) -> f64 {
    pure_entropy(coeffs) / std::f64::consts::LN_2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Energy,
    Negativity,
    Entropy,
}

impl MeasureKind {
    pub fn evaluate(self, coeffs: &PnesCoefficients) -> f64 {
        match self {
            MeasureKind::Energy => pnes_energy(coeffs),
            MeasureKind::Negativity => pure_negativity(coeffs),
            MeasureKind::Entropy => pure_entropy(coeffs),
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureKind::Energy => "energy",
            MeasureKind::Negativity => "negativity",
            MeasureKind::Entropy => "entropy",
        })
    }
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy" => Ok(MeasureKind::Energy),
            "negativity" => Ok(MeasureKind::Negativity),
            "entropy" => Ok(MeasureKind::Entropy),
            _ => Err(Error::parse("measure", s)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchTarget {
    pub kind: MeasureKind,
    pub value: f64,
}

impl MatchTarget {
    pub fn new(kind: MeasureKind, value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidParameter(format!("match target must be finite and >= 0, got {value}")));
        }
        Ok(MatchTarget { kind, value })
    }
}

/// Twin-beam squeezing parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwbParams {
    pub r: f64,
}

impl TwbParams {
    pub fn from_r(r: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidParameter(format!("squeezing r must be finite and >= 0, got {r}")));
        }
        Ok(TwbParams { r })
    }

    pub fn from_lambda(lambda: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!("lambda must lie in [0, 1), got {lambda}")));
        }
        Ok(TwbParams { r: lambda.atanh() })
    }

    pub fn lambda(&self) -> f64 {
        self.r.tanh()
    }

    /// Untruncated total energy 2 sinh^2 r.
    pub fn energy(&self) -> f64 {
        2.0 * self.r.sinh().powi(2)
    }

    /// Untruncated negativity lambda / (1 - lambda).
    pub fn negativity(&self) -> f64 {
        let l = self.lambda();
        l / (1.0 - l)
    }

    /// Untruncated entanglement entropy (nats).
    pub fn entropy(&self) -> f64 {
        let c2 = self.r.cosh().powi(2);
        let s2 = self.r.sinh().powi(2);
        if s2 == 0.0 {
            return 0.0;
        }
        c2 * c2.ln() - s2 * s2.ln()
    }

    /// Twin beam whose untruncated measure equals the target.
    pub fn matching(target: MatchTarget) -> Result<Self> {
        let v = target.value;
        match target.kind {
            MeasureKind::Energy => Self::from_r((v / 2.0).sqrt().asinh()),
            MeasureKind::Negativity => Self::from_lambda(v / (1.0 + v)),
            MeasureKind::Entropy => {
                let f = |lambda: f64| TwbParams { r: lambda.atanh() }.entropy();
                let lambda = bisect_increasing(f, 0.0, PARAM_BRACKET_MAX, v)?;
                Self::from_lambda(lambda)
            }
        }
    }
}

fn bisect_increasing(f: impl Fn(f64) -> f64, lo: f64, hi: f64, target: f64) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if target < flo - MATCH_TOL || target > fhi + MATCH_TOL {
        return Err(Error::UnattainableTarget { value: target, lo: flo, hi: fhi });
    }
    if (target - flo).abs() <= MATCH_TOL * 1e-2 {
        return Ok(lo);
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..MAX_BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm - target).abs() <= MATCH_TOL * 1e-2 || mid <= lo || mid >= hi {
            return if (fm - target).abs() <= MATCH_TOL {
                Ok(mid)
            } else {
                Err(Error::NoConvergence(MAX_BISECTION_ITERS))
            };
        }
        if fm < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    if (f(mid) - target).abs() <= MATCH_TOL {
        Ok(mid)
    } else {
        Err(Error::NoConvergence(MAX_BISECTION_ITERS))
    }
}

/// Build a member of `family` at its natural parameter value.
pub fn family_member(family: FamilyKind, param: f64, cutoff: FockCutoff) -> Result<PnesCoefficients> {
    match family {
        FamilyKind::Twb => PnesCoefficients::twb(param, cutoff),
        FamilyKind::Pssv => PnesCoefficients::pssv(param, cutoff),
        FamilyKind::Psi01 => PnesCoefficients::psi01(param),
    }
}

/// Bracket on the family parameter over which every measure is increasing.
pub fn family_bracket(family: FamilyKind, kind: MeasureKind) -> (f64, f64) {
    match (family, kind) {
        (FamilyKind::Psi01, MeasureKind::Energy) => (0.0, 1.0),
        (FamilyKind::Psi01, _) => (0.0, 0.5),
        _ => (0.0, PARAM_BRACKET_MAX),
    }
}

/// Solve for the family parameter (lambda, x or |c1|^2) whose truncated
/// state at `cutoff` has the target measure.
pub fn solve_family_param(family: FamilyKind, target: MatchTarget, cutoff: FockCutoff) -> Result<f64> {
    let (lo, hi) = family_bracket(family, target.kind);
    let f = |p: f64| {
        if p == 0.0 {
            // x -> 0 limit of PSSV is the vacuum, like the other families
            return 0.0;
        }
        family_member(family, p, cutoff).map(|c| target.kind.evaluate(&c)).unwrap_or(f64::NAN)
    };
    bisect_increasing(f, lo, hi, target.value)
}

/// Textual state description, e.g. `twb:lambda=0.5`, `pssv:energy=0.013`,
/// `psi01:c1sq=0.25` or `custom:0.8,0.6`.
#[derive(Clone, Debug, PartialEq)]
pub enum StateSpec {
    Param { family: FamilyKind, param: f64 },
    Target { family: FamilyKind, target: MatchTarget },
    Custom(Vec<f64>),
}

impl FromStr for StateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, body) = s.split_once(':').ok_or_else(|| Error::parse("state spec", s))?;
        if head == "custom" {
            let values = body
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| Error::parse("state spec", t.trim())))
                .collect::<Result<Vec<_>>>()?;
            return Ok(StateSpec::Custom(values));
        }
        let family = match head {
            "twb" => FamilyKind::Twb,
            "pssv" => FamilyKind::Pssv,
            "psi01" => FamilyKind::Psi01,
            other => return Err(Error::parse("state family", other)),
        };
        let (key, value) = body.split_once('=').ok_or_else(|| Error::parse("state spec", body))?;
        let value: f64 = value.trim().parse().map_err(|_| Error::parse("state spec value", value.trim()))?;
        let key = key.trim();
        let param = match (family, key) {
            (FamilyKind::Twb, "lambda") | (FamilyKind::Pssv, "x") | (FamilyKind::Psi01, "c1sq") => Some(value),
            (FamilyKind::Twb, "r") => Some(TwbParams::from_r(value)?.lambda()),
            _ => None,
        };
        if let Some(param) = param {
            return Ok(StateSpec::Param { family, param });
        }
        let kind: MeasureKind = key.parse().map_err(|_| Error::parse("state spec key", key))?;
        Ok(StateSpec::Target { family, target: MatchTarget::new(kind, value)? })
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Param { family, param } => {
                let key = match family {
                    FamilyKind::Twb => "lambda",
                    FamilyKind::Pssv => "x",
                    FamilyKind::Psi01 => "c1sq",
                };
                write!(f, "{family}:{key}={param}")
            }
            StateSpec::Target { family, target } => write!(f, "{family}:{}={}", target.kind, target.value),
            StateSpec::Custom(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "custom:{}", parts.join(","))
            }
        }
    }
}

/// Cutoff used when solving targets, large enough that truncation is
/// irrelevant for every parameter in the bracket that matters in practice.
pub const SOLVER_CUTOFF: usize = 400;

impl StateSpec {
    /// Resolve to coefficients. Family states are built at the smallest
    /// cutoff leaving less than `tail_tol` weight and `amplitude_tol` summed
    /// amplitude outside (at least `min_dim`).
    pub fn resolve(&self, tail_tol: f64, amplitude_tol: f64, min_dim: usize) -> Result<PnesCoefficients> {
        let (family, param) = match self {
            StateSpec::Custom(v) => return PnesCoefficients::custom(real_coeffs(v.iter().copied())),
            StateSpec::Param { family, param } => (*family, *param),
            StateSpec::Target { family, target } => {
                (*family, solve_family_param(*family, *target, FockCutoff::new(SOLVER_CUTOFF)?)?)
            }
        };
        let probe = family_member(family, param, FockCutoff::new(SOLVER_CUTOFF)?)?;
        let d = probe.required_dim(tail_tol).max(probe.amplitude_dim(amplitude_tol)).max(min_dim).max(2);
        family_member(family, param, FockCutoff::new(d)?)
    }
}
