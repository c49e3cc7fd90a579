//! Reference implementations shared by the integration tests. Nothing here
//! calls into the sector decomposition or the Padé propagator.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Sparse operator with at most one nonzero per row: row i reads column
/// `src[i]` with weight `w[i]`.
pub struct RowSparse {
    src: Vec<Option<usize>>,
    w: Vec<f64>,
}

impl RowSparse {
    fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut src = vec![None; m.nrows()];
        let mut w = vec![0.0; m.nrows()];
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    assert!(src[i].is_none(), "more than one entry in row {i}");
                    src[i] = Some(j);
                    w[i] = m[(i, j)];
                }
            }
        }
        RowSparse { src, w }
    }

    /// X rho X^dag.
    fn sandwich(&self, rho: &CMat, out: &mut CMat, scale: f64) {
        let n = rho.nrows();
        for i in 0..n {
            let Some(k) = self.src[i] else { continue };
            for j in 0..n {
                let Some(l) = self.src[j] else { continue };
                out[(i, j)] += rho[(k, l)] * (scale * self.w[i] * self.w[j]);
            }
        }
    }
}

/// Full two-mode master equation on the D^2 x D^2 density matrix:
/// sum over modes of A L[a] + B L[a^dag], with L[O] rho = 2 O rho O^dag -
/// {O^dag O, rho}. The annihilator is the truncated ladder matrix; a a^dag
/// is taken as N + 1 on every level, so population at the top level leaks
/// out instead of being reflected.
pub struct FullLiouvillian {
    pub dim: usize,
    lower: [RowSparse; 2],
    raise: [RowSparse; 2],
    damping: Vec<f64>,
    a_rate: f64,
    b_rate: f64,
}

impl FullLiouvillian {
    pub fn new(dim: usize, gamma: f64, n_t: f64) -> Self {
        let a_rate = 0.5 * gamma * (1.0 + n_t);
        let b_rate = 0.5 * gamma * n_t;
        let mut a = DMatrix::<f64>::zeros(dim, dim);
        for n in 1..dim {
            a[(n - 1, n)] = (n as f64).sqrt();
        }
        let id = DMatrix::<f64>::identity(dim, dim);
        let a1 = a.kronecker(&id);
        let a2 = id.kronecker(&a);
        let number = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |n, _| n as f64));
        let n1 = number.kronecker(&id);
        let n2 = id.kronecker(&number);
        let joint = dim * dim;
        // {A a^dag a + B a a^dag, .} per mode, with a a^dag = N + 1
        let damping =
            (0..joint).map(|i| a_rate * (n1[(i, i)] + n2[(i, i)]) + b_rate * (n1[(i, i)] + n2[(i, i)] + 2.0)).collect();
        FullLiouvillian {
            dim,
            lower: [RowSparse::from_dense(&a1), RowSparse::from_dense(&a2)],
            raise: [RowSparse::from_dense(&a1.transpose()), RowSparse::from_dense(&a2.transpose())],
            damping,
            a_rate,
            b_rate,
        }
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let n = rho.nrows();
        let mut out = CMat::zeros(n, n);
        for mode in 0..2 {
            self.lower[mode].sandwich(rho, &mut out, 2.0 * self.a_rate);
            self.raise[mode].sandwich(rho, &mut out, 2.0 * self.b_rate);
        }
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] -= rho[(i, j)] * (self.damping[i] + self.damping[j]);
            }
        }
        out
    }

    /// Classical fourth-order Runge-Kutta with fixed step at most `h`.
    pub fn rk4(&self, rho0: &CMat, t: f64, h: f64) -> CMat {
        if t == 0.0 {
            return rho0.clone();
        }
        let steps = (t / h).ceil() as usize;
        let h = t / steps as f64;
        let mut rho = rho0.clone();
        for _ in 0..steps {
            let k1 = self.apply(&rho);
            let k2 = self.apply(&(&rho + &k1 * c(h / 2.0)));
            let k3 = self.apply(&(&rho + &k2 * c(h / 2.0)));
            let k4 = self.apply(&(&rho + &k3 * c(h)));
            rho += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(h / 6.0);
        }
        rho
    }
}

/// |psi><psi| for psi = sum_n coeffs[n] |n, n>, index n1 * dim + n2.
pub fn schmidt_density(coeffs: &[Complex64], dim: usize) -> CMat {
    let mut psi = nalgebra::DVector::<Complex64>::zeros(dim * dim);
    for (n, &z) in coeffs.iter().enumerate().take(dim) {
        psi[n * dim + n] = z;
    }
    &psi * psi.adjoint()
}

/// Partial transpose on the second mode, written out index by index.
pub fn partial_transpose_ref(rho: &CMat, dim: usize) -> CMat {
    let n = dim * dim;
    CMat::from_fn(n, n, |i, j| {
        let (n1, n2) = (i / dim, i % dim);
        let (m1, m2) = (j / dim, j % dim);
        rho[(n1 * dim + m2, m1 * dim + n2)]
    })
}

/// Negativity from a dense Hermitian eigendecomposition of the partial transpose:
/// every negative eigenvalue counts once the smallest is below -1e-9.
pub fn negativity_ref(rho: &CMat, dim: usize) -> f64 {
    let pt = partial_transpose_ref(rho, dim);
    let herm = (&pt + pt.adjoint()) * c(0.5);
    let ev = herm.symmetric_eigenvalues();
    if ev.min() >= -1e-9 {
        return 0.0;
    }
    ev.iter().filter(|&&l| l < 0.0).map(|l| -l).fold(0.0, |a, b| a + b)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unnormalized random real coefficients, length in [2, max_len].
pub fn random_coeffs(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<f64> {
    let len = rng.gen_range(2..=max_len);
    let mut v: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    if v.iter().all(|x| x.abs() < 1e-3) {
        v[0] = 1.0;
    }
    v
}

/// Energy of the closed-form per-mode law, written independently:
/// each mode relaxes as n(t) = n0 e^{-Gamma t} + N_T (1 - e^{-Gamma t}).
pub fn energy_law(e0: f64, gamma: f64, n_t: f64, t: f64) -> f64 {
    let eta = (-gamma * t).exp();
    e0 * eta + 2.0 * n_t * (1.0 - eta)
}

/// Root of f on [lo, hi] for a sign change, by plain bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "no sign change on [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}
