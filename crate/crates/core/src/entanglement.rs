//! Partial transposition, negativity and separation times.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::channel::{evolve_pnes_sectors, ChannelParams, CutoffPolicy};
use crate::error::{Error, Result};
use crate::fock::{FockCutoff, SectorState, TwoModeState};
use crate::linalg;
use crate::states::PnesCoefficients;

/// States whose partial transpose has no eigenvalue below `-NEGATIVITY_THRESHOLD`
/// have zero negativity.
pub const NEGATIVITY_THRESHOLD: f64 = 1e-9;
/// Tolerance for the monotone-decay check along the time axis.
pub const MONOTONE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NegativityResult {
    pub value: f64,
    pub min_eigenvalue: f64,
    pub block_path_used: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NegativityPath {
    /// Blocks in total photon number whenever the state has sector structure.
    #[default]
    Auto,
    Dense,
}

/// rho^{T_2}: (n1, n2; m1, m2) -> (n1, m2; m1, n2).
pub fn partial_transpose(rho: &TwoModeState) -> DMatrix<Complex64> {
    let c = rho.cutoff();
    let n = c.joint_dim();
    let src = rho.matrix();
    DMatrix::from_fn(n, n, |i, j| {
        let (n1, n2) = c.unpack(i);
        let (m1, m2) = c.unpack(j);
        src[(c.pack(n1, m2), c.pack(m1, n2))]
    })
}

pub fn negativity(rho: &TwoModeState) -> NegativityResult {
    negativity_with(rho, NEGATIVITY_THRESHOLD, NegativityPath::Auto)
}

/// Sum of |negative eigenvalues| of rho^{T_2}, or zero when none lies below `-threshold`.
pub fn negativity_with(rho: &TwoModeState, threshold: f64, path: NegativityPath) -> NegativityResult {
    let pt = partial_transpose(rho);
    let cutoff = rho.cutoff();
    let blocked = path == NegativityPath::Auto && rho.has_sector_structure();
    let eigenvalues = if blocked {
        // n1 - m1 = n2 - m2 makes rho^{T_2} block diagonal in n1 + n2
        let blocks = linalg::partition_by(cutoff.joint_dim(), |i| {
            let (n1, n2) = cutoff.unpack(i);
            n1 + n2
        });
        linalg::block_eigenvalues(&pt, &blocks)
    } else {
        linalg::hermitian_eigenvalues(&pt)
    };
    from_spectrum(&eigenvalues, threshold, blocked)
}

fn from_spectrum(ascending: &[f64], threshold: f64, block_path_used: bool) -> NegativityResult {
    let min_eigenvalue = ascending.first().copied().unwrap_or(0.0);
    // all negative eigenvalues count once one of them clears the threshold
    let value = if min_eigenvalue < -threshold {
        ascending.iter().take_while(|&&l| l < 0.0).fold(0.0, |acc, l| acc - l)
    } else {
        0.0
    };
    NegativityResult { value, min_eigenvalue, block_path_used }
}

/// Blocks of rho^{T_2} by total photon number K = n1 + n2, for K = 0..=2D-2.
/// Block K spans |a, K - a> with a ascending.
pub fn partial_transpose_blocks(rho: &SectorState) -> Vec<DMatrix<Complex64>> {
    let d = rho.cutoff().dim();
    (0..2 * d - 1)
        .map(|total| {
            let lo = total.saturating_sub(d - 1);
            let hi = total.min(d - 1);
            DMatrix::from_fn(hi - lo + 1, hi - lo + 1, |i, j| {
                let (n1, n2) = (lo + i, total - lo - i);
                let (m1, m2) = (lo + j, total - lo - j);
                rho.element(n1, m2, m1, n2)
            })
        })
        .collect()
}

/// Negativity of a sector-structured state, one total-photon block at a time.
pub fn sector_negativity(rho: &SectorState, threshold: f64) -> NegativityResult {
    block_negativity(rho, threshold).0
}

/// Negativity together with the smallest eigenvalue of every block of rho^{T_2}.
fn block_negativity(rho: &SectorState, threshold: f64) -> (NegativityResult, Vec<f64>) {
    let mut eigenvalues = Vec::with_capacity(rho.cutoff().joint_dim());
    let mut minima = Vec::new();
    for block in partial_transpose_blocks(rho) {
        let ev = block.symmetric_eigenvalues();
        minima.push(ev.min());
        eigenvalues.extend(ev.iter().copied());
    }
    eigenvalues.sort_by(|a, b| a.total_cmp(b));
    (from_spectrum(&eigenvalues, threshold, true), minima)
}

#[derive(Clone, Copy, Debug)]
pub struct SeparationOptions {
    pub threshold: f64,
    pub t_max: f64,
    pub time_tol: f64,
    pub policy: CutoffPolicy,
    /// Overrides the policy-selected cutoff.
    pub cutoff: Option<FockCutoff>,
}

impl Default for SeparationOptions {
    fn default() -> Self {
        SeparationOptions {
            threshold: NEGATIVITY_THRESHOLD,
            t_max: 100.0,
            time_tol: 1e-8,
            policy: CutoffPolicy::default(),
            cutoff: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationTime {
    /// `f64::INFINITY` when the state stays entangled up to `t_max`.
    pub time: f64,
    pub cutoff: usize,
    /// Negativity at `t_max` when no separation was found.
    pub negativity_at_t_max: Option<f64>,
    /// Negativity samples taken during bracketing.
    pub profile: Vec<(f64, f64)>,
}

/// Earliest time at which the evolved negativity drops below the threshold.
/// Times are in units of 1/Gamma of `params`.
pub fn separation_time(
    coeffs: &PnesCoefficients,
    params: &ChannelParams,
    opts: &SeparationOptions,
) -> Result<SeparationTime> {
    let cutoff = match opts.cutoff {
        Some(c) => c,
        None => opts.policy.select(coeffs, params, None)?,
    };
    let coeffs = if coeffs.len() > cutoff.dim() { coeffs.with_cutoff(cutoff)? } else { coeffs.clone() };
    let sample = |t: f64| -> Result<Sample> {
        let rho = evolve_pnes_sectors(&coeffs, params, t, cutoff, &opts.policy)?;
        let (result, minima) = block_negativity(&rho, opts.threshold);
        Ok(Sample { t, result, minima })
    };
    let entangled = |s: &Sample| s.result.value >= opts.threshold;

    let first = sample(0.0)?;
    let mut profile = vec![(0.0, first.result.value)];
    if !entangled(&first) {
        return Ok(SeparationTime { time: 0.0, cutoff: cutoff.dim(), negativity_at_t_max: None, profile });
    }

    let unit = 1.0 / params.gamma();
    let t_max = opts.t_max * unit;
    let mut lo = first;
    let mut next = unit;
    let mut hi = loop {
        let s = sample(next.min(t_max))?;
        profile.push((s.t, s.result.value));
        if s.result.value > lo.result.value + MONOTONE_TOL {
            return Err(Error::NonMonotone { profile });
        }
        if !entangled(&s) {
            break s;
        }
        if s.t >= t_max {
            return Ok(SeparationTime {
                time: f64::INFINITY,
                cutoff: cutoff.dim(),
                negativity_at_t_max: Some(s.result.value),
                profile,
            });
        }
        lo = s;
        next *= 2.0;
    };

    // Illinois regula falsi on the smallest eigenvalue of the block that is
    // most negative at the left end. The global minimum is no use here: past
    // the root it sits on a floor of near-zero eigenvalues and gives no slope.
    let tol = opts.time_tol * unit;
    let guard = 0.25 * tol;
    let mut block = lo.most_negative_block();
    let (mut w_lo, mut w_hi) = (1.0, 1.0);
    let mut side = 0i8;
    while hi.t - lo.t > tol {
        let (g_lo, g_hi) = (w_lo * (lo.minima[block] + opts.threshold), w_hi * (hi.minima[block] + opts.threshold));
        let mut t = (lo.t * g_hi - hi.t * g_lo) / (g_hi - g_lo);
        if !(t > lo.t && t < hi.t) {
            t = 0.5 * (lo.t + hi.t);
        }
        t = t.clamp(lo.t + guard, hi.t - guard);
        let s = sample(t)?;
        if entangled(&s) {
            if s.result.value > lo.result.value + MONOTONE_TOL {
                profile.push((t, s.result.value));
                return Err(Error::NonMonotone { profile });
            }
            lo = s;
            let b = lo.most_negative_block();
            if b != block {
                // a different branch now decides; restart the weights
                (block, w_lo, w_hi, side) = (b, 1.0, 1.0, 0);
                continue;
            }
            if side == -1 {
                w_hi *= 0.5;
            }
            w_lo = 1.0;
            side = -1;
        } else {
            hi = s;
            if side == 1 {
                w_lo *= 0.5;
            }
            w_hi = 1.0;
            side = 1;
        }
    }
    Ok(SeparationTime { time: hi.t, cutoff: cutoff.dim(), negativity_at_t_max: None, profile })
}

struct Sample {
    t: f64,
    result: NegativityResult,
    minima: Vec<f64>,
}

impl Sample {
    fn most_negative_block(&self) -> usize {
        self.minima.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(k, _)| k)
    }
}
