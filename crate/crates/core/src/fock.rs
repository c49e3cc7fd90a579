//! Truncated two-mode Fock space.
//!
//! Basis states |n1, n2> with 0 <= n1, n2 < D are packed row-major into a
//! flat index `n1 * D + n2`. [`TwoModeState`] holds a dense D^2 x D^2
//! matrix; [`SectorState`] keeps only the blocks of fixed n1 - n2.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Number of Fock levels kept per mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FockCutoff(usize);

impl FockCutoff {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!("Fock cutoff must be >= 2, got {dim}")));
        }
        Ok(FockCutoff(dim))
    }

    #[inline]
    pub fn dim(self) -> usize {
        self.0
    }

    /// Dimension of the two-mode space, D^2.
    #[inline]
    pub fn joint_dim(self) -> usize {
        self.0 * self.0
    }

    pub fn index_pack(self, n1: usize, n2: usize) -> Result<usize> {
        if n1 >= self.0 || n2 >= self.0 {
            return Err(Error::IndexOutOfRange { n1, n2, dim: self.0 });
        }
        Ok(n1 * self.0 + n2)
    }

    pub fn index_unpack(self, index: usize) -> Result<(usize, usize)> {
        if index >= self.joint_dim() {
            return Err(Error::IndexOutOfRange { n1: index / self.0, n2: index % self.0, dim: self.0 });
        }
        Ok((index / self.0, index % self.0))
    }

    // unchecked variants for hot loops
    #[inline]
    pub(crate) fn pack(self, n1: usize, n2: usize) -> usize {
        n1 * self.0 + n2
    }

    #[inline]
    pub(crate) fn unpack(self, index: usize) -> (usize, usize) {
        (index / self.0, index % self.0)
    }
}

/// Tolerances used by [`TwoModeState::sanity_check`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TolProfile {
    pub hermiticity: f64,
    pub trace: f64,
    /// Smallest admissible eigenvalue (a negative number).
    pub min_eigenvalue: f64,
}

impl Default for TolProfile {
    fn default() -> Self {
        TolProfile { hermiticity: 1e-12, trace: 1e-10, min_eigenvalue: -1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SanityReport {
    pub trace_deviation: f64,
    pub hermiticity_deviation: f64,
    pub min_eigenvalue: f64,
    pub tail_bound: f64,
    pub trace_violation: bool,
    pub hermiticity_violation: bool,
    pub positivity_violation: bool,
}

impl SanityReport {
    fn new(trace: f64, hermiticity_deviation: f64, min_eigenvalue: f64, tail_bound: f64, tol: &TolProfile) -> Self {
        let trace_deviation = (trace - 1.0).abs();
        SanityReport {
            trace_deviation,
            hermiticity_deviation,
            min_eigenvalue,
            tail_bound,
            trace_violation: trace_deviation > tol.trace + tail_bound,
            hermiticity_violation: hermiticity_deviation > tol.hermiticity,
            positivity_violation: min_eigenvalue < tol.min_eigenvalue,
        }
    }

    pub fn passed(&self) -> bool {
        !(self.trace_violation || self.hermiticity_violation || self.positivity_violation)
    }
}

/// Two-mode density matrix in the truncated Fock basis.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeState {
    cutoff: FockCutoff,
    matrix: DMatrix<Complex64>,
    tail_bound: f64,
}

impl TwoModeState {
    pub fn from_matrix(cutoff: FockCutoff, matrix: DMatrix<Complex64>, tail_bound: f64) -> Result<Self> {
        let n = cutoff.joint_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::InvalidParameter(format!(
                "matrix is {}x{}, cutoff {} needs {n}x{n}",
                matrix.nrows(),
                matrix.ncols(),
                cutoff.dim()
            )));
        }
        Ok(TwoModeState { cutoff, matrix, tail_bound })
    }

    /// Pure state sum_n psi_n |n, n>. Coefficients beyond the cutoff are dropped
    /// without renormalizing; their weight is added to the tail bound.
    pub fn from_schmidt(coeffs: &[Complex64], cutoff: FockCutoff, tail_bound: f64) -> Self {
        let d = cutoff.dim();
        let dropped: f64 = coeffs.iter().skip(d).map(|c| c.norm_sqr()).sum();
        let k = coeffs.len().min(d);
        let mut matrix = DMatrix::from_element(cutoff.joint_dim(), cutoff.joint_dim(), ZERO);
        for n in 0..k {
            for m in 0..k {
                matrix[(cutoff.pack(n, n), cutoff.pack(m, m))] = coeffs[n] * coeffs[m].conj();
            }
        }
        TwoModeState { cutoff, matrix, tail_bound: tail_bound + dropped }
    }

    /// Product state rho_a (x) rho_b of two single-mode D x D matrices.
    pub fn product(rho_a: &DMatrix<Complex64>, rho_b: &DMatrix<Complex64>) -> Result<Self> {
        let d = rho_a.nrows();
        if rho_a.ncols() != d || rho_b.nrows() != d || rho_b.ncols() != d {
            return Err(Error::InvalidParameter("product factors must be square with equal size".into()));
        }
        let cutoff = FockCutoff::new(d)?;
        Ok(TwoModeState { cutoff, matrix: rho_a.kronecker(rho_b), tail_bound: 0.0 })
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn element(&self, n1: usize, n2: usize, m1: usize, m2: usize) -> Complex64 {
        let c = self.cutoff;
        self.matrix[(c.pack(n1, n2), c.pack(m1, m2))]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// <a1^dag a1 + a2^dag a2>.
    pub fn mean_total_photons(&self) -> f64 {
        let c = self.cutoff;
        (0..c.joint_dim())
            .map(|i| {
                let (n1, n2) = c.unpack(i);
                (n1 + n2) as f64 * self.matrix[(i, i)].re
            })
            .sum()
    }

    /// Whether rho_{(n1,n2),(m1,m2)} vanishes unless n1 - m1 = n2 - m2, the
    /// structure preserved by the phase-insensitive channel on PNES inputs.
    pub fn has_sector_structure(&self) -> bool {
        let c = self.cutoff;
        linalg::is_block_diagonal(&self.matrix, |i| {
            let (n1, n2) = c.unpack(i);
            n1 as i64 - n2 as i64
        })
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut dev = 0.0f64;
        for j in 0..n {
            for i in j..n {
                dev = dev.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Spectrum, using the photon-number-difference blocks when the state has
    /// sector structure.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.has_sector_structure() {
            let c = self.cutoff;
            let blocks = linalg::partition_by(c.joint_dim(), |i| {
                let (n1, n2) = c.unpack(i);
                n1 as i64 - n2 as i64
            });
            linalg::block_eigenvalues(&self.matrix, &blocks)
        } else {
            linalg::hermitian_eigenvalues(&self.matrix)
        }
    }

    pub fn sanity_check(&self, tol: &TolProfile) -> SanityReport {
        let min_eigenvalue = self.eigenvalues().first().copied().unwrap_or(0.0);
        SanityReport::new(self.trace(), self.hermiticity_deviation(), min_eigenvalue, self.tail_bound, tol)
    }
}

/// Read access to matrix elements rho_{(n1,n2),(m1,m2)}.
pub trait FockDensity {
    fn cutoff(&self) -> FockCutoff;
    fn element(&self, n1: usize, n2: usize, m1: usize, m2: usize) -> Complex64;
}

impl FockDensity for TwoModeState {
    fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    fn element(&self, n1: usize, n2: usize, m1: usize, m2: usize) -> Complex64 {
        TwoModeState::element(self, n1, n2, m1, m2)
    }
}

/// Two-mode state that is block diagonal in the photon-number difference
/// n1 - n2, stored block by block.
///
/// Block `delta` spans |k + delta^+, k + delta^->, k = 0..D-|delta|, so a
/// basis state is addressed locally by min(n1, n2). Storage grows as D^3
/// instead of D^4.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorState {
    cutoff: FockCutoff,
    /// `blocks[delta + D - 1]`
    blocks: Vec<DMatrix<Complex64>>,
    tail_bound: f64,
}

impl SectorState {
    pub fn zeros(cutoff: FockCutoff, tail_bound: f64) -> Self {
        let d = cutoff.dim() as i64;
        let blocks = (-(d - 1)..d)
            .map(|delta| {
                let len = (d - delta.abs()) as usize;
                DMatrix::from_element(len, len, ZERO)
            })
            .collect();
        SectorState { cutoff, blocks, tail_bound }
    }

    /// Blocks of a dense state, or `None` when it lacks sector structure.
    pub fn from_dense(rho: &TwoModeState) -> Option<Self> {
        if !rho.has_sector_structure() {
            return None;
        }
        let mut out = SectorState::zeros(rho.cutoff(), rho.tail_bound());
        let support: Vec<_> = out.support().collect();
        for (n1, n2, m1, m2) in support {
            *out.entry_mut(n1, n2, m1, m2) = rho.element(n1, n2, m1, m2);
        }
        Some(out)
    }

    pub fn to_dense(&self) -> TwoModeState {
        let c = self.cutoff;
        let mut m = DMatrix::from_element(c.joint_dim(), c.joint_dim(), ZERO);
        for (n1, n2, m1, m2) in self.support() {
            m[(c.pack(n1, n2), c.pack(m1, m2))] = self.element(n1, n2, m1, m2);
        }
        TwoModeState { cutoff: c, matrix: m, tail_bound: self.tail_bound }
    }

    fn support(&self) -> impl Iterator<Item = (usize, usize, usize, usize)> + '_ {
        let d = self.cutoff.dim() as i64;
        (-(d - 1)..d).flat_map(move |delta| {
            let len = (d - delta.abs()) as usize;
            let (p, q) = (delta.max(0) as usize, (-delta).max(0) as usize);
            (0..len).flat_map(move |k| (0..len).map(move |l| (k + p, k + q, l + p, l + q)))
        })
    }

    #[inline]
    fn block_index(&self, n1: usize, n2: usize) -> usize {
        n1 + self.cutoff.dim() - 1 - n2
    }

    /// Entry at (n1, n2; m1, m2), which must lie in one block.
    #[inline]
    pub(crate) fn entry_mut(&mut self, n1: usize, n2: usize, m1: usize, m2: usize) -> &mut Complex64 {
        debug_assert_eq!(n1 as i64 - n2 as i64, m1 as i64 - m2 as i64);
        let b = self.block_index(n1, n2);
        &mut self.blocks[b][(n1.min(n2), m1.min(m2))]
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Block of photon-number difference `delta`.
    pub fn block(&self, delta: i64) -> &DMatrix<Complex64> {
        &self.blocks[(delta + self.cutoff.dim() as i64 - 1) as usize]
    }

    pub fn element(&self, n1: usize, n2: usize, m1: usize, m2: usize) -> Complex64 {
        if n1 as i64 - n2 as i64 != m1 as i64 - m2 as i64 {
            return ZERO;
        }
        self.blocks[self.block_index(n1, n2)][(n1.min(n2), m1.min(m2))]
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.diagonal().iter().map(|z| z.re).sum::<f64>()).sum()
    }

    pub fn mean_total_photons(&self) -> f64 {
        let d = self.cutoff.dim() as i64;
        (-(d - 1)..d)
            .zip(&self.blocks)
            .map(|(delta, b)| {
                // n1 + n2 = 2k + |delta|
                (0..b.nrows()).map(|k| (2 * k + delta.unsigned_abs() as usize) as f64 * b[(k, k)].re).sum::<f64>()
            })
            .sum()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.blocks.iter().map(|b| (b - b.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)).fold(0.0, f64::max)
    }

    /// Spectrum, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut all = Vec::with_capacity(self.cutoff.joint_dim());
        for b in &self.blocks {
            all.extend(b.clone().symmetric_eigenvalues().iter().copied());
        }
        all.sort_by(|a, b| a.total_cmp(b));
        all
    }

    pub fn sanity_check(&self, tol: &TolProfile) -> SanityReport {
        let min_eigenvalue = self.eigenvalues().first().copied().unwrap_or(0.0);
        SanityReport::new(self.trace(), self.hermiticity_deviation(), min_eigenvalue, self.tail_bound, tol)
    }
}

impl FockDensity for SectorState {
    fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    fn element(&self, n1: usize, n2: usize, m1: usize, m2: usize) -> Complex64 {
        SectorState::element(self, n1, n2, m1, m2)
    }
}
