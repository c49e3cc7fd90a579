use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{energy_closed_form, evolve_pnes_adaptive, ChannelParams, CutoffPolicy, MAX_CUTOFF_BUMPS};
use crate::entanglement::{sector_negativity, NEGATIVITY_THRESHOLD};
use crate::error::{Error, Result};
use crate::fock::{FockCutoff, TolProfile};
use crate::gaussian::{reference_ng, t_g_closed};
use crate::states::{pnes_energy, pure_negativity, MatchTarget, MeasureKind, PnesCoefficients, StateSpec, TwbParams};

/// Ratios with a denominator below this are reported as undefined.
pub const RATIO_DENOMINATOR_MIN: f64 = 1e-12;

/// What the twin-beam reference shares with the swept state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    Energy,
    Entanglement,
}

impl fmt::Display for MatchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchKind::Energy => "energy",
            MatchKind::Entanglement => "entanglement",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchSelection {
    Energy,
    Entanglement,
    Both,
}

impl MatchSelection {
    pub fn kinds(self) -> &'static [MatchKind] {
        match self {
            MatchSelection::Energy => &[MatchKind::Energy],
            MatchSelection::Entanglement => &[MatchKind::Entanglement],
            MatchSelection::Both => &[MatchKind::Energy, MatchKind::Entanglement],
        }
    }
}

impl FromStr for MatchSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy" => Ok(MatchSelection::Energy),
            "entanglement" => Ok(MatchSelection::Entanglement),
            "both" => Ok(MatchSelection::Both),
            _ => Err(Error::parse("match kind", s)),
        }
    }
}

/// Ten equally spaced B/A values from 0.05 to 0.50.
pub fn default_grid() -> Vec<f64> {
    (1..=10).map(|k| k as f64 * 0.05).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub state: String,
    #[serde(rename = "match")]
    pub match_kind: MatchSelection,
    /// Measure used for entanglement matching.
    pub entanglement_measure: MeasureKind,
    pub b_over_a: Vec<f64>,
    pub cutoff: CutoffPolicy,
    pub tolerances: TolProfile,
    /// Recompute every point at a larger cutoff and report the change.
    pub check: bool,
    pub output: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            state: "psi01:c1sq=0.5".into(),
            match_kind: MatchSelection::Both,
            entanglement_measure: MeasureKind::Entropy,
            b_over_a: default_grid(),
            cutoff: CutoffPolicy::default(),
            tolerances: TolProfile::default(),
            check: false,
            output: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.b_over_a.is_empty() {
            return Err(Error::InvalidParameter("empty B/A grid".into()));
        }
        if let Some(&bad) = self.b_over_a.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::InvalidParameter(format!("B/A value {bad} outside (0, 1)")));
        }
        if self.b_over_a.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("B/A grid must be strictly increasing".into()));
        }
        if self.entanglement_measure == MeasureKind::Energy {
            return Err(Error::InvalidParameter("entanglement measure cannot be energy".into()));
        }
        Ok(())
    }
}

/// One evaluated grid point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub r_matched: f64,
    pub t_g: f64,
    pub energy_at_tg: f64,
    pub n_0: f64,
    pub n_r: f64,
    pub n_g: f64,
    pub ratio_r0: Option<f64>,
    pub ratio_rg: Option<f64>,
    pub cutoff: usize,
    pub conv_delta: Option<f64>,
}

pub type PointOutcome = std::result::Result<SweepPoint, String>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub b_over_a: f64,
    pub n_t: f64,
    pub match_kind: MatchKind,
    pub outcome: PointOutcome,
}

impl SweepRecord {
    pub fn point(&self) -> Option<&SweepPoint> {
        self.outcome.as_ref().ok()
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > RATIO_DENOMINATOR_MIN).then(|| num / den)
}

/// Residual negativity at time `t`, raising the cutoff while the trace leaks.
fn residual_negativity(
    coeffs: &PnesCoefficients,
    params: &ChannelParams,
    t: f64,
    cutoff: FockCutoff,
    policy: &CutoffPolicy,
    tolerances: &TolProfile,
) -> Result<(f64, FockCutoff)> {
    let (rho, used) = evolve_pnes_adaptive(coeffs, params, t, cutoff, policy)?;
    let report = rho.sanity_check(tolerances);
    if !report.passed() {
        return Err(Error::InvalidParameter(format!("evolved state fails sanity check: {report:?}")));
    }
    Ok((sector_negativity(&rho, NEGATIVITY_THRESHOLD).value, used))
}

/// Evaluate one (B/A, matching) point of a sweep for an already resolved state.
pub fn evaluate_point(
    coeffs: &PnesCoefficients,
    b_over_a: f64,
    match_kind: MatchKind,
    config: &SweepConfig,
) -> Result<SweepPoint> {
    let params = ChannelParams::from_b_over_a(b_over_a)?;
    let e0 = pnes_energy(coeffs);
    let n_0 = pure_negativity(coeffs);
    let target = match match_kind {
        MatchKind::Energy => MatchTarget::new(MeasureKind::Energy, e0)?,
        MatchKind::Entanglement => {
            let kind = config.entanglement_measure;
            MatchTarget::new(kind, kind.evaluate(coeffs))?
        }
    };
    let twb = TwbParams::matching(target)?;
    let t_g = t_g_closed(twb.r, &params);
    if !t_g.is_finite() {
        return Err(Error::InvalidParameter("twin-beam reference never separates".into()));
    }
    let policy = &config.cutoff;
    let mut cutoff = policy.select(coeffs, &params, Some(t_g))?;
    let mut conv_delta = None;
    let mut n_r;
    let mut bumps = 0;
    loop {
        let (value, used) = residual_negativity(coeffs, &params, t_g, cutoff, policy, &config.tolerances)?;
        n_r = value;
        cutoff = used;
        if !config.check {
            break;
        }
        let larger = policy.bumped(cutoff);
        let (check, _) = residual_negativity(coeffs, &params, t_g, larger, policy, &config.tolerances)?;
        let delta = (check - n_r).abs();
        conv_delta = Some(delta);
        if delta < policy.convergence_tol {
            break;
        }
        bumps += 1;
        if policy.fixed.is_some() || bumps > MAX_CUTOFF_BUMPS {
            return Err(Error::Convergence { dim: cutoff.dim(), dim_check: larger.dim(), delta });
        }
        cutoff = larger;
    }
    let energy_at_tg = energy_closed_form(e0, &params, t_g);
    let n_g = reference_ng(energy_at_tg);
    Ok(SweepPoint {
        r_matched: twb.r,
        t_g,
        energy_at_tg,
        n_0,
        n_r,
        n_g,
        ratio_r0: ratio(n_r, n_0),
        ratio_rg: ratio(n_r, n_g),
        cutoff: cutoff.dim(),
        conv_delta,
    })
}

/// Evaluate every grid point; per-point failures are kept as error records.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let spec: StateSpec = config.state.parse()?;
    let coeffs = spec.resolve(config.cutoff.tail_tol, config.cutoff.amplitude_tol, config.cutoff.floor)?;
    let jobs: Vec<(f64, MatchKind)> =
        config.b_over_a.iter().flat_map(|&b| config.match_kind.kinds().iter().map(move |&k| (b, k))).collect();
    let records = jobs
        .par_iter()
        .map(|&(b_over_a, match_kind)| SweepRecord {
            b_over_a,
            n_t: b_over_a / (1.0 - b_over_a),
            match_kind,
            outcome: evaluate_point(&coeffs, b_over_a, match_kind, config).map_err(|e| e.to_string()),
        })
        .collect();
    Ok(records)
}
