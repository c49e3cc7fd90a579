//! Dense numerical kernels: matrix exponential, an adaptive Runge-Kutta
//! integrator and Hermitian spectra of block-diagonal matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Padé coefficients b_0..b_m for the degrees used by scaling and squaring.
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] =
    [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// 1-norm thresholds below which the degree-m approximant is accurate to unit roundoff.
const THETA: [(usize, f64); 4] =
    [(3, 1.495585217958292e-2), (5, 2.53939833006323e-1), (7, 9.504178996162932e-1), (9, 2.097847961257068)];
const THETA13: f64 = 5.371920351148152;

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential of a real square matrix by scaling and squaring with a
/// diagonal Padé approximant of degree 3 to 13.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let norm = norm1(a);
    for &(m, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            return pade_low(a, coeffs);
        }
    }
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let scaled = a * 2f64.powi(-s);
    let mut x = pade13(&scaled);
    for _ in 0..s {
        x = &x * &x;
    }
    x
}

fn pade_solve(u: DMatrix<f64>, v: DMatrix<f64>) -> DMatrix<f64> {
    let p = &v + &u;
    let q = v - u;
    q.lu().solve(&p).expect("Padé denominator is singular")
}

fn pade_low(a: &DMatrix<f64>, b: &[f64]) -> DMatrix<f64> {
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    // even powers I, A^2, A^4, ...
    let mut pows = vec![ident.clone(), a2.clone()];
    while 2 * pows.len() < b.len() {
        let next = pows.last().unwrap() * &a2;
        pows.push(next);
    }
    let mut u = DMatrix::<f64>::zeros(n, n);
    let mut v = DMatrix::<f64>::zeros(n, n);
    for (k, p) in pows.iter().enumerate() {
        if 2 * k + 1 < b.len() {
            u += p * b[2 * k + 1];
        }
        v += p * b[2 * k];
    }
    pade_solve(a * u, v)
}

fn pade13(a: &DMatrix<f64>) -> DMatrix<f64> {
    let b = &PADE13;
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let w1 = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let w2 = &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1];
    let u = a * (&a6 * w1 + w2);
    let z1 = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let z2 = &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    let v = &a6 * z1 + z2;
    pade_solve(u, v)
}

/// Dormand-Prince 5(4) integration of `dy/dt = f(t, y)` from `t0` to `t1`
/// with mixed tolerance `atol + rtol * |y|` per component.
pub fn integrate_dopri<F>(f: F, t0: f64, t1: f64, y0: &DVector<f64>, rtol: f64, atol: f64) -> DVector<f64>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] =
        [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

    let mut t = t0;
    let mut y = y0.clone();
    if t1 <= t0 {
        return y;
    }
    let mut h = ((t1 - t0) * 1e-2).clamp(1e-12, 1e-2);
    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
        for stage in 0..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let aij = A[stage][j];
                if aij != 0.0 {
                    ys.axpy(h * aij, kj, 1.0);
                }
            }
            k.push(f(t + C[stage] * h, &ys));
        }
        let mut y5 = y.clone();
        let mut err = DVector::<f64>::zeros(y.len());
        for j in 0..7 {
            y5.axpy(h * B5[j], &k[j], 1.0);
            err.axpy(h * (B5[j] - B4[j]), &k[j], 1.0);
        }
        let mut err_norm = 0.0f64;
        for i in 0..y.len() {
            let scale = atol + rtol * y[i].abs().max(y5[i].abs());
            err_norm = err_norm.max(err[i].abs() / scale);
        }
        if err_norm <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if err_norm == 0.0 { 5.0 } else { (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    y
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Eigenvalues of a Hermitian matrix that is block diagonal on the given index
/// partition. Each block is diagonalized independently; the caller is
/// responsible for the off-block entries being zero.
pub fn block_eigenvalues(m: &DMatrix<Complex64>, blocks: &[Vec<usize>]) -> Vec<f64> {
    let mut all = Vec::with_capacity(m.nrows());
    for block in blocks {
        let k = block.len();
        if k == 0 {
            continue;
        }
        if k == 1 {
            all.push(m[(block[0], block[0])].re);
            continue;
        }
        let sub = DMatrix::from_fn(k, k, |i, j| m[(block[i], block[j])]);
        all.extend(sub.symmetric_eigenvalues().iter().copied());
    }
    all.sort_by(|a, b| a.total_cmp(b));
    all
}

/// Group indices `0..n` by a key; returns the groups ordered by key.
pub fn partition_by<K: Ord + Copy>(n: usize, key: impl Fn(usize) -> K) -> Vec<Vec<usize>> {
    let mut map = std::collections::BTreeMap::<K, Vec<usize>>::new();
    for i in 0..n {
        map.entry(key(i)).or_default().push(i);
    }
    map.into_values().collect()
}

/// True when every entry coupling two different blocks is exactly zero.
pub fn is_block_diagonal(m: &DMatrix<Complex64>, key: impl Fn(usize) -> i64) -> bool {
    let n = m.nrows();
    let keys: Vec<i64> = (0..n).map(key).collect();
    for j in 0..n {
        for i in 0..n {
            if keys[i] != keys[j] && m[(i, j)] != Complex64::new(0.0, 0.0) {
                return false;
            }
        }
    }
    true
}
