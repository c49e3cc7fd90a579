//! Mode-local thermal/lossy channel
//!
//! `d rho/dt = A sum_j L[a_j] rho + B sum_j L[a_j^dag] rho` with
//! `L[O] rho = 2 O rho O^dag - O^dag O rho - rho O^dag O`,
//! `A = Gamma (1 + N_T) / 2` and `B = Gamma N_T / 2`.
//!
//! The generator conserves the single-mode coherence order `m - n`, so the
//! single-mode propagator splits into tridiagonal sectors. The two-mode map is
//! the tensor square of the single-mode one.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockCutoff, SectorState, TwoModeState};
use crate::linalg;
use crate::states::PnesCoefficients;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    gamma: f64,
    n_t: f64,
}

impl ChannelParams {
    pub fn new(gamma: f64, n_t: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("damping rate must be positive, got {gamma}")));
        }
        if !(n_t.is_finite() && n_t >= 0.0) {
            return Err(Error::InvalidParameter(format!("thermal occupation must be finite and >= 0, got {n_t}")));
        }
        Ok(ChannelParams { gamma, n_t })
    }

    /// Unit damping rate with thermal occupation `n_t`.
    pub fn with_thermal(n_t: f64) -> Result<Self> {
        Self::new(1.0, n_t)
    }

    /// Channel with Gamma = 1 and rate ratio B/A in (0, 1).
    pub fn from_b_over_a(b_over_a: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&b_over_a) {
            return Err(Error::InvalidParameter(format!("B/A must lie in [0, 1), got {b_over_a}")));
        }
        Self::new(1.0, b_over_a / (1.0 - b_over_a))
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n_t(&self) -> f64 {
        self.n_t
    }

    pub fn a_rate(&self) -> f64 {
        0.5 * self.gamma * (1.0 + self.n_t)
    }

    pub fn b_rate(&self) -> f64 {
        0.5 * self.gamma * self.n_t
    }

    pub fn b_over_a(&self) -> f64 {
        self.n_t / (1.0 + self.n_t)
    }
}

/// Generator of the coherences rho_{n, n+|d|} (or their conjugates for d < 0).
#[derive(Clone, Debug, PartialEq)]
pub struct SectorGenerator {
    pub d: i64,
    pub matrix: DMatrix<f64>,
}

pub fn liouvillian_sector(params: &ChannelParams, d: i64, cutoff: FockCutoff) -> Result<SectorGenerator> {
    let dim = cutoff.dim();
    let s = d.unsigned_abs() as usize;
    if s >= dim {
        return Err(Error::InvalidParameter(format!("sector {d} outside cutoff {dim}")));
    }
    let (a, b) = (params.a_rate(), params.b_rate());
    let len = dim - s;
    let sf = s as f64;
    let mut m = DMatrix::zeros(len, len);
    for n in 0..len {
        let nf = n as f64;
        m[(n, n)] = -a * (2.0 * nf + sf) - b * (2.0 * nf + sf + 2.0);
        // inflow from level n + 1 is absent on the top row
        if n + 1 < len {
            m[(n, n + 1)] = 2.0 * a * ((nf + 1.0) * (nf + sf + 1.0)).sqrt();
        }
        if n >= 1 {
            m[(n, n - 1)] = 2.0 * b * (nf * (nf + sf)).sqrt();
        }
    }
    Ok(SectorGenerator { d, matrix: m })
}

/// First moment of the master equation: total energy at time t.
pub fn energy_closed_form(e0: f64, params: &ChannelParams, t: f64) -> f64 {
    let eta = (-params.gamma * t).exp();
    eta * e0 + (1.0 - eta) * 2.0 * params.n_t
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PropagatorMethod {
    #[default]
    Pade,
    /// Dormand-Prince integration at relative tolerance 1e-12.
    Adaptive,
}

/// Single-mode channel at a fixed time, stored as one propagator per sector.
#[derive(Clone, Debug)]
pub struct TransferTensor {
    time: f64,
    cutoff: FockCutoff,
    /// `sectors[s]` maps rho_{n, n+s} at time 0 to rho_{k, k+s} at time t.
    sectors: Vec<DMatrix<f64>>,
}

pub fn propagator(params: &ChannelParams, t: f64, cutoff: FockCutoff) -> Result<TransferTensor> {
    propagator_with(params, t, cutoff, PropagatorMethod::Pade)
}

pub fn propagator_with(
    params: &ChannelParams,
    t: f64,
    cutoff: FockCutoff,
    method: PropagatorMethod,
) -> Result<TransferTensor> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("evolution time must be finite and >= 0, got {t}")));
    }
    let sectors = (0..cutoff.dim())
        .into_par_iter()
        .map(|s| {
            let gen = liouvillian_sector(params, s as i64, cutoff)?;
            let lt = gen.matrix * t;
            Ok(match method {
                PropagatorMethod::Pade => linalg::expm(&lt),
                PropagatorMethod::Adaptive => {
                    let n = lt.nrows();
                    let mut out = DMatrix::zeros(n, n);
                    for j in 0..n {
                        let mut e = DVector::zeros(n);
                        e[j] = 1.0;
                        let col = linalg::integrate_dopri(|_, v| &lt * v, 0.0, 1.0, &e, 1e-12, 1e-16);
                        out.set_column(j, &col);
                    }
                    out
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransferTensor { time: t, cutoff, sectors })
}

impl TransferTensor {
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn sector(&self, s: usize) -> &DMatrix<f64> {
        &self.sectors[s]
    }

    /// Nonzero support of Phi_t(|n><m|) as (offset s, values): entries sit at
    /// (k, k + s) for m >= n, and at (k + s, k) otherwise.
    #[inline]
    fn image_column(&self, n: usize, m: usize) -> (usize, nalgebra::DVectorView<'_, f64>) {
        if m >= n {
            let s = m - n;
            (s, self.sectors[s].column(n))
        } else {
            let s = n - m;
            (s, self.sectors[s].column(m))
        }
    }

    /// Phi_t(|n><m|) as a dense D x D matrix.
    pub fn image(&self, n: usize, m: usize) -> DMatrix<f64> {
        let d = self.cutoff.dim();
        let mut out = DMatrix::zeros(d, d);
        let (s, v) = self.image_column(n, m);
        for k in 0..v.len() {
            if m >= n {
                out[(k, k + s)] = v[k];
            } else {
                out[(k + s, k)] = v[k];
            }
        }
        out
    }

    /// Probability lost through the cutoff by Phi_t(|n><n|).
    pub fn trace_leak(&self, n: usize) -> f64 {
        1.0 - self.sectors[0].column(n).sum()
    }

    /// (Phi_t (x) Phi_t) applied to a pure PNES; coefficients beyond the
    /// cutoff are dropped into the tail bound.
    pub fn apply_pnes(&self, coeffs: &PnesCoefficients) -> TwoModeState {
        self.apply_pnes_sectors(coeffs).to_dense()
    }

    /// [`Self::apply_pnes`] without forming the dense matrix.
    pub fn apply_pnes_sectors(&self, coeffs: &PnesCoefficients) -> SectorState {
        let d = self.cutoff.dim();
        let c = coeffs.coeffs();
        let k = c.len().min(d);
        let dropped: f64 = c.iter().skip(d).map(|z| z.norm_sqr()).sum();
        let mut rho = SectorState::zeros(self.cutoff, coeffs.truncation_loss() + dropped);
        for n in 0..k {
            for m in 0..k {
                let w = c[n] * c[m].conj();
                if w == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let (s, v) = self.image_column(n, m);
                let len = v.len();
                for k1 in 0..len {
                    let wv1 = w * v[k1];
                    for k2 in 0..len {
                        let val = wv1 * v[k2];
                        if m >= n {
                            *rho.entry_mut(k1, k2, k1 + s, k2 + s) += val;
                        } else {
                            *rho.entry_mut(k1 + s, k2 + s, k1, k2) += val;
                        }
                    }
                }
            }
        }
        rho
    }

    /// (Phi_t (x) Phi_t) applied to an arbitrary two-mode state, one mode at a time.
    pub fn apply(&self, rho: &TwoModeState) -> Result<TwoModeState> {
        let cutoff = self.cutoff;
        if rho.cutoff() != cutoff {
            return Err(Error::InvalidParameter(format!(
                "state cutoff {} differs from propagator cutoff {}",
                rho.cutoff().dim(),
                cutoff.dim()
            )));
        }
        let d = cutoff.dim();
        let n = cutoff.joint_dim();
        let zero = Complex64::new(0.0, 0.0);
        let src = rho.matrix();
        // mode 1: (n1, n2; m1, m2) -> (k1, n2; l1, m2)
        let mut mid = DMatrix::from_element(n, n, zero);
        for col in 0..n {
            let (m1, m2) = cutoff.unpack(col);
            for row in 0..n {
                let w = src[(row, col)];
                if w == zero {
                    continue;
                }
                let (n1, n2) = cutoff.unpack(row);
                let (s, v) = self.image_column(n1, m1);
                for k in 0..v.len() {
                    let (r1, c1) = if m1 >= n1 { (k, k + s) } else { (k + s, k) };
                    mid[(cutoff.pack(r1, n2), cutoff.pack(c1, m2))] += w * v[k];
                }
            }
        }
        let mut out = DMatrix::from_element(n, n, zero);
        for col in 0..n {
            let (m1, m2) = cutoff.unpack(col);
            for row in 0..n {
                let w = mid[(row, col)];
                if w == zero {
                    continue;
                }
                let (n1, n2) = cutoff.unpack(row);
                let (s, v) = self.image_column(n2, m2);
                for k in 0..v.len() {
                    let (r2, c2) = if m2 >= n2 { (k, k + s) } else { (k + s, k) };
                    out[(cutoff.pack(n1, r2), cutoff.pack(m1, c2))] += w * v[k];
                }
            }
        }
        debug_assert!(d >= 2);
        TwoModeState::from_matrix(cutoff, out, rho.tail_bound())
    }
}

/// Fock cutoff selection and verification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CutoffPolicy {
    pub floor: usize,
    /// Admissible weight beyond the cutoff, for the initial state and for
    /// the thermal noise the channel adds.
    pub tail_tol: f64,
    /// Admissible summed amplitude |psi_n| of the initial state beyond the cutoff.
    pub amplitude_tol: f64,
    /// Admissible probability loss through the absorbing top level.
    pub leak_tol: f64,
    /// Increment used by the convergence check.
    pub check_step: usize,
    pub convergence_tol: f64,
    /// Fixed cutoff, bypassing selection.
    pub fixed: Option<usize>,
}

impl Default for CutoffPolicy {
    fn default() -> Self {
        CutoffPolicy {
            floor: 12,
            tail_tol: 1e-12,
            amplitude_tol: 1e-9,
            leak_tol: 1e-10,
            check_step: 4,
            convergence_tol: 1e-8,
            fixed: None,
        }
    }
}

/// Levels needed so a geometric distribution with mean `n_bar` has tail below `tol`.
pub fn thermal_tail_dim(n_bar: f64, tol: f64) -> usize {
    if n_bar <= 0.0 {
        return 1;
    }
    let q = n_bar / (1.0 + n_bar);
    (tol.ln() / q.ln()).ceil().max(1.0) as usize
}

impl CutoffPolicy {
    /// Cutoff covering the initial state and the thermal noise accumulated
    /// up to `horizon` (or the steady state when `horizon` is `None`).
    pub fn select(
        &self,
        coeffs: &PnesCoefficients,
        params: &ChannelParams,
        horizon: Option<f64>,
    ) -> Result<FockCutoff> {
        if let Some(d) = self.fixed {
            return FockCutoff::new(d);
        }
        let noise = match horizon {
            None => params.n_t(),
            Some(t) => params.n_t() * (1.0 - (-params.gamma() * t).exp()),
        };
        let d = self
            .floor
            .max(coeffs.required_dim(self.tail_tol))
            .max(coeffs.amplitude_dim(self.amplitude_tol))
            .max(thermal_tail_dim(noise, self.tail_tol));
        FockCutoff::new(d)
    }

    pub fn bumped(&self, cutoff: FockCutoff) -> FockCutoff {
        FockCutoff::new(cutoff.dim() + self.check_step).expect("larger than a valid cutoff")
    }
}

/// Evolve a pure PNES through the two-mode channel at the given cutoff,
/// rejecting cutoffs that leave too much initial weight or leak too much
/// probability.
pub fn evolve_pnes(
    coeffs: &PnesCoefficients,
    params: &ChannelParams,
    t: f64,
    cutoff: FockCutoff,
) -> Result<TwoModeState> {
    evolve_pnes_with(coeffs, params, t, cutoff, &CutoffPolicy::default())
}

pub fn evolve_pnes_with(
    coeffs: &PnesCoefficients,
    params: &ChannelParams,
    t: f64,
    cutoff: FockCutoff,
    policy: &CutoffPolicy,
) -> Result<TwoModeState> {
    Ok(evolve_pnes_sectors(coeffs, params, t, cutoff, policy)?.to_dense())
}

/// [`evolve_pnes_with`] returning the photon-number-difference blocks only.
pub fn evolve_pnes_sectors(
    coeffs: &PnesCoefficients,
    params: &ChannelParams,
    t: f64,
    cutoff: FockCutoff,
    policy: &CutoffPolicy,
) -> Result<SectorState> {
    let tail = coeffs.tail_beyond(cutoff.dim());
    if tail >= policy.tail_tol {
        return Err(Error::CutoffTooSmall { dim: cutoff.dim(), tail, required: coeffs.required_dim(policy.tail_tol) });
    }
    let coeffs = if coeffs.len() > cutoff.dim() { coeffs.with_cutoff(cutoff)? } else { coeffs.clone() };
    let tensor = propagator(params, t, cutoff)?;
    let rho = tensor.apply_pnes_sectors(&coeffs);
    let leak = 1.0 - rho.trace();
    if leak > policy.leak_tol {
        return Err(Error::TraceLeak { dim: cutoff.dim(), leak, limit: policy.leak_tol });
    }
    Ok(rho)
}

/// Cutoff increments tried by [`evolve_pnes_adaptive`] before giving up.
pub const MAX_CUTOFF_BUMPS: usize = 6;

/// [`evolve_pnes_sectors`] starting at `start`, raising the cutoff by the check
/// step while the trace leak exceeds the policy limit. Fixed cutoffs are
/// never raised. Returns the state and the cutoff that produced it.
pub fn evolve_pnes_adaptive(
    coeffs: &PnesCoefficients,
    params: &ChannelParams,
    t: f64,
    start: FockCutoff,
    policy: &CutoffPolicy,
) -> Result<(SectorState, FockCutoff)> {
    let mut cutoff = start;
    let mut bumps = 0;
    loop {
        match evolve_pnes_sectors(coeffs, params, t, cutoff, policy) {
            Ok(rho) => return Ok((rho, cutoff)),
            Err(Error::TraceLeak { .. }) if policy.fixed.is_none() && bumps < MAX_CUTOFF_BUMPS => {
                bumps += 1;
                cutoff = policy.bumped(cutoff);
            }
            Err(e) => return Err(e),
        }
    }
}

/// Evolve an arbitrary two-mode state at its own cutoff.
pub fn evolve_state(rho: &TwoModeState, params: &ChannelParams, t: f64) -> Result<TwoModeState> {
    propagator(params, t, rho.cutoff())?.apply(rho)
}
