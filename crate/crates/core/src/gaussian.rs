//! Two-mode Gaussian states in the covariance-matrix picture.
//!
//! Quadratures are ordered (x1, p1, x2, p2) with x = (a + a^dag)/sqrt 2 and
//! p = (a - a^dag)/(i sqrt 2); the vacuum has covariance I/2. A two-mode
//! Gaussian state is separable iff the smallest symplectic eigenvalue of its
//! partial transpose is at least 1/2.

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use serde::Serialize;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::fock::FockDensity;

const FIRST_MOMENT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceMatrix(Matrix4<f64>);

impl CovarianceMatrix {
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        let asym = (m - m.transpose()).abs().max();
        if asym > 1e-14 {
            return Err(Error::InvalidParameter(format!("covariance matrix not symmetric ({asym:e})")));
        }
        Ok(CovarianceMatrix(m))
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    fn blocks(&self) -> (Matrix2<f64>, Matrix2<f64>, Matrix2<f64>) {
        let m = &self.0;
        (
            m.fixed_view::<2, 2>(0, 0).into_owned(),
            m.fixed_view::<2, 2>(2, 2).into_owned(),
            m.fixed_view::<2, 2>(0, 2).into_owned(),
        )
    }

    /// Symplectic eigenvalues (nu_minus, nu_plus).
    pub fn symplectic_eigenvalues(&self) -> (f64, f64) {
        williamson(&self.0)
    }

    /// Partially transposed seralian det A + det B - 2 det C, equal to
    /// nu~_-^2 + nu~_+^2.
    pub fn pt_seralian(&self) -> f64 {
        let (a, b, c) = self.blocks();
        a.determinant() + b.determinant() - 2.0 * c.determinant()
    }

    /// Symplectic eigenvalues of the partial transpose (nu~_minus, nu~_plus).
    pub fn pt_symplectic_eigenvalues(&self) -> (f64, f64) {
        let flip = Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, 1.0, -1.0));
        williamson(&(flip * self.0 * flip))
    }

    pub fn is_physical(&self) -> bool {
        self.symplectic_eigenvalues().0 >= 0.5 - 1e-12
    }

    /// Symmetric standard form `a I, c Z` when the matrix has that shape within `tol`.
    pub fn to_std_form(&self, tol: f64) -> Option<SymmetricStdForm> {
        let m = &self.0;
        let a = m[(0, 0)];
        let c = m[(0, 2)];
        let expected = SymmetricStdForm { a, c }.to_cm();
        if (expected.0 - m).abs().max() <= tol {
            Some(SymmetricStdForm { a, c })
        } else {
            None
        }
    }
}

/// Symplectic eigenvalues as the square roots of the spectrum of
/// S Omega^T sigma Omega S with S = sigma^(1/2). A symmetric eigenproblem keeps
/// the near-degenerate (pure-state) case accurate.
fn williamson(m: &Matrix4<f64>) -> (f64, f64) {
    let eig = m.symmetric_eigen();
    let sqrt = eig.eigenvectors
        * Matrix4::from_diagonal(&eig.eigenvalues.map(|x| x.max(0.0).sqrt()))
        * eig.eigenvectors.transpose();
    #[rustfmt::skip]
    let omega = Matrix4::new(
        0.0,  1.0, 0.0, 0.0,
        -1.0, 0.0, 0.0, 0.0,
        0.0,  0.0, 0.0, 1.0,
        0.0,  0.0, -1.0, 0.0,
    );
    let k = sqrt * omega.transpose() * m * omega * sqrt;
    let mut ev: Vec<f64> = k.symmetric_eigenvalues().iter().map(|x| x.max(0.0).sqrt()).collect();
    ev.sort_by(f64::total_cmp);
    // each value appears twice
    ((ev[0] + ev[1]) / 2.0, (ev[2] + ev[3]) / 2.0)
}

/// Covariance with diagonal blocks `a I` and cross block `c diag(1, -1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SymmetricStdForm {
    pub a: f64,
    pub c: f64,
}

impl SymmetricStdForm {
    pub fn new(a: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && c.is_finite()) || a < 0.5 - 1e-12 {
            return Err(Error::InvalidParameter(format!("standard form needs a >= 1/2, got a = {a}")));
        }
        Ok(SymmetricStdForm { a, c })
    }

    pub fn to_cm(&self) -> CovarianceMatrix {
        let (a, c) = (self.a, self.c);
        #[rustfmt::skip]
        let m = Matrix4::new(
            a,   0.0, c,   0.0,
            0.0, a,   0.0, -c,
            c,   0.0, a,   0.0,
            0.0, -c,  0.0, a,
        );
        CovarianceMatrix(m)
    }

    /// Total mean photon number 2a - 1.
    pub fn energy(&self) -> f64 {
        2.0 * self.a - 1.0
    }
}

pub fn twb_cm(r: f64) -> SymmetricStdForm {
    SymmetricStdForm { a: (2.0 * r).cosh() / 2.0, c: (2.0 * r).sinh() / 2.0 }
}

pub fn evolve_cm(form: &SymmetricStdForm, params: &ChannelParams, t: f64) -> SymmetricStdForm {
    let eta = (-params.gamma() * t).exp();
    SymmetricStdForm { a: eta * form.a + (1.0 - eta) * (params.n_t() + 0.5), c: eta * form.c }
}

pub fn nu_tilde_minus(form: &SymmetricStdForm) -> f64 {
    form.a - form.c.abs()
}

/// nu~_- from the block determinants; works for any two-mode covariance.
pub fn nu_tilde_minus_general(cm: &CovarianceMatrix) -> f64 {
    cm.pt_symplectic_eigenvalues().0
}

pub fn simon_separable(form: &SymmetricStdForm) -> bool {
    nu_tilde_minus(form) >= 0.5
}

/// Time at which an initial twin beam of squeezing `r` becomes separable,
/// `ln(1 + (1 - e^{-2r}) / (2 N_T)) / Gamma`.
pub fn t_g_closed(r: f64, params: &ChannelParams) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if params.n_t() == 0.0 {
        return f64::INFINITY;
    }
    (1.0 + (1.0 - (-2.0 * r).exp()) / (2.0 * params.n_t())).ln() / params.gamma()
}

/// Root of nu~_-(t) = 1/2 by bisection on the evolved covariance.
pub fn t_g_numeric(r: f64, params: &ChannelParams) -> f64 {
    let f = |t: f64| nu_tilde_minus(&evolve_cm(&twb_cm(r), params, t)) - 0.5;
    if f(0.0) >= 0.0 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0 / params.gamma();
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 / params.gamma() {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Negativity (||rho^T||_1 - 1)/2 of a two-mode Gaussian state with at most
/// one PT symplectic eigenvalue below 1/2.
pub fn gaussian_negativity(form: &SymmetricStdForm) -> Result<f64> {
    let (nu_minus, nu_plus) = (form.a - form.c.abs(), form.a + form.c.abs());
    if nu_plus < 0.5 {
        return Err(Error::GaussianRegime(nu_plus));
    }
    Ok(((1.0 / (2.0 * nu_minus) - 1.0) / 2.0).max(0.0))
}

/// Negativity of the pure twin beam of total energy `energy`.
pub fn reference_ng(energy: f64) -> f64 {
    let r = (energy.max(0.0) / 2.0).sqrt().asinh();
    let lambda = r.tanh();
    lambda / (1.0 - lambda)
}

fn expect(rho: &impl FockDensity, op: impl Fn(usize, usize) -> Option<(usize, usize, f64)>) -> Complex64 {
    // tr(rho O) with O |m> = w |m'>
    let d = rho.cutoff().dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for n1 in 0..d {
        for n2 in 0..d {
            if let Some((k1, k2, w)) = op(n1, n2) {
                if k1 < d && k2 < d {
                    acc += rho.element(n1, n2, k1, k2) * w;
                }
            }
        }
    }
    acc
}

/// Covariance matrix of a Fock-space state with vanishing first moments.
pub fn cm_from_fock(rho: &impl FockDensity) -> Result<CovarianceMatrix> {
    let sq = |n: usize| (n as f64).sqrt();
    let a1 = expect(rho, |n1, n2| (n1 >= 1).then(|| (n1 - 1, n2, sq(n1))));
    let a2 = expect(rho, |n1, n2| (n2 >= 1).then(|| (n1, n2 - 1, sq(n2))));
    let first = a1.norm().max(a2.norm());
    if first > FIRST_MOMENT_TOL {
        return Err(Error::FirstMoments(first));
    }
    let n1 = expect(rho, |n1, n2| Some((n1, n2, n1 as f64))).re;
    let n2 = expect(rho, |n1, n2| Some((n1, n2, n2 as f64))).re;
    let a1a1 = expect(rho, |n1, n2| (n1 >= 2).then(|| (n1 - 2, n2, sq(n1 * (n1 - 1)))));
    let a2a2 = expect(rho, |n1, n2| (n2 >= 2).then(|| (n1, n2 - 2, sq(n2 * (n2 - 1)))));
    let a1a2 = expect(rho, |n1, n2| (n1 >= 1 && n2 >= 1).then(|| (n1 - 1, n2 - 1, sq(n1 * n2))));
    let a1d_a2 = expect(rho, |n1, n2| (n2 >= 1).then(|| (n1 + 1, n2 - 1, sq((n1 + 1) * n2))));

    let mut m = Matrix4::zeros();
    m[(0, 0)] = a1a1.re + n1 + 0.5;
    m[(1, 1)] = -a1a1.re + n1 + 0.5;
    m[(0, 1)] = a1a1.im;
    m[(2, 2)] = a2a2.re + n2 + 0.5;
    m[(3, 3)] = -a2a2.re + n2 + 0.5;
    m[(2, 3)] = a2a2.im;
    m[(0, 2)] = a1a2.re + a1d_a2.re;
    m[(1, 3)] = -a1a2.re + a1d_a2.re;
    m[(0, 3)] = a1a2.im + a1d_a2.im;
    m[(1, 2)] = a1a2.im - a1d_a2.im;
    for i in 0..4 {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
    Ok(CovarianceMatrix(m))
}
