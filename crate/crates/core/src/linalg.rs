//! Dense complex matrices and Hermitian eigenvalue solvers.
//!
//! The main path reduces a Hermitian matrix to a real symmetric tridiagonal
//! one (Householder reflections followed by a diagonal phase change, which
//! only leaves the moduli of the off-diagonal entries) and then isolates
//! every eigenvalue by Sturm-count bisection. Implicit QL on the same
//! tridiagonal form is kept as an independent check.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Square complex matrix, row major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            data: vec![Complex::default(); n * n],
        }
    }

    pub fn from_real_rows(rows: &[Vec<T>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = Complex::new(*v, T::zero());
            }
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, v) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(*v, T::zero());
        }
        m
    }

    /// Real symmetric tridiagonal matrix from its diagonal and off-diagonal.
    pub fn tridiagonal(diag: &[T], off: &[T]) -> Self {
        let mut m = Self::from_diagonal(diag);
        for (i, v) in off.iter().enumerate() {
            m[(i, i + 1)] = Complex::new(*v, T::zero());
            m[(i + 1, i)] = Complex::new(*v, T::zero());
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(Complex::default(), |acc, (a, b)| acc + *a * *b)
            })
            .collect()
    }

    /// `A^* v`.
    pub fn adjoint_mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(v.len(), self.n);
        let mut out = vec![Complex::default(); self.n];
        for (i, vi) in v.iter().enumerate() {
            for (j, a) in self.row(i).iter().enumerate() {
                out[j] = out[j] + a.conj() * *vi;
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex::default() {
                    continue;
                }
                for j in 0..n {
                    m.data[i * n + j] = m.data[i * n + j] + a * other.data[k * n + j];
                }
            }
        }
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| *a + *b)
            .collect();
        CMatrix { n: self.n, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| *a - *b)
            .collect();
        CMatrix { n: self.n, data }
    }

    pub fn shift_diagonal(&self, c: T) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            m[(i, i)] = m[(i, i)] + Complex::new(c, T::zero());
        }
        m
    }

    /// `max |a_ij - conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|c| c.norm()).fold(T::zero(), T::max)
    }

    /// Largest absolute row sum, an upper bound on the spectral norm of a
    /// Hermitian matrix.
    pub fn max_row_sum(&self) -> T {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|c| c.norm()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt()
    }

    fn is_tridiagonal(&self) -> bool {
        (0..self.n).all(|i| {
            self.row(i)
                .iter()
                .enumerate()
                .all(|(j, c)| i.abs_diff(j) <= 1 || *c == Complex::default())
        })
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.n + j]
    }
}

pub fn vec_norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt()
}

/// Real symmetric tridiagonal matrix: `diag` of length `n`, `off` of length `n - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal<T> {
    pub diag: Vec<T>,
    pub off: Vec<T>,
}

/// Entrywise tolerance for accepting a matrix as Hermitian.
pub fn hermitian_tolerance<T: Real>(a: &CMatrix<T>) -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(16.0)) * a.max_abs().max(T::one())
}

fn check_hermitian<T: Real>(a: &CMatrix<T>) -> Result<()> {
    let defect = a.hermitian_defect();
    if defect > hermitian_tolerance(a) {
        return Err(Error::NotHermitian(defect.as_f64()));
    }
    Ok(())
}

/// Eigenvalues inside `[lo, hi]` of an `n x n` symmetric matrix given its
/// inertia count `count(x) = #{eigenvalues < x}`.
fn bisect_all<T: Real>(n: usize, lo: T, hi: T, count: impl Fn(T) -> usize) -> Vec<T> {
    if n == 0 {
        return Vec::new();
    }
    if lo == hi {
        return vec![lo; n];
    }
    let scale = lo.abs().max(hi.abs()).max(T::min_positive_value());
    let pad = scale * T::epsilon() * T::lit(4.0) + T::min_positive_value();
    let (lo, hi) = (lo - pad, hi + pad);
    let tol = scale * T::epsilon() * T::lit(2.0);
    let mut out = Vec::with_capacity(n);
    let mut stack = vec![(lo, hi, 0usize, n)];
    while let Some((a, b, ca, cb)) = stack.pop() {
        if ca == cb {
            continue;
        }
        let mid = (a + b) / T::lit(2.0);
        if b - a <= tol || mid <= a || mid >= b {
            out.extend(std::iter::repeat(mid).take(cb - ca));
            continue;
        }
        let cm = count(mid).clamp(ca, cb);
        // upper half first so the lower half is popped first
        stack.push((mid, b, cm, cb));
        stack.push((a, mid, ca, cm));
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Householder reduction of a dense real symmetric matrix (row major,
/// overwritten) to tridiagonal form with the same eigenvalues.
pub fn real_tridiagonalize<T: Real>(a: &mut [T], n: usize) -> Tridiagonal<T> {
    let two = T::lit(2.0);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    for k in 0..n.saturating_sub(1) {
        let m = k + 1;
        let xnorm = (m..n).map(|i| a[i * n + k] * a[i * n + k]).sum::<T>().sqrt();
        let x0 = a[m * n + k];
        if (m + 1..n).all(|i| a[i * n + k] == T::zero()) {
            off.push(x0);
            continue;
        }
        let alpha = if x0 >= T::zero() { -xnorm } else { xnorm };
        for i in m..n {
            v[i] = a[i * n + k];
        }
        v[m] = v[m] - alpha;
        let vtv: T = (m..n).map(|i| v[i] * v[i]).sum();
        let tau = two / vtv;
        // p = tau A v, w = p - (tau/2)(v.p) v, A -= v w^T + w v^T
        for i in m..n {
            p[i] = tau * (m..n).map(|j| a[i * n + j] * v[j]).sum::<T>();
        }
        let half = tau / two * (m..n).map(|i| v[i] * p[i]).sum::<T>();
        for i in m..n {
            p[i] = p[i] - half * v[i];
        }
        for i in m..n {
            for j in m..n {
                a[i * n + j] = a[i * n + j] - v[i] * p[j] - p[i] * v[j];
            }
        }
        off.push(alpha);
    }
    Tridiagonal {
        diag: (0..n).map(|i| a[i * n + i]).collect(),
        off,
    }
}

/// Real symmetric tridiagonal matrix closed into a cycle by `corner` at
/// `(0, n-1)` and `(n-1, 0)`; needs `n >= 3`.
#[derive(Clone, Debug, PartialEq)]
pub struct CyclicJacobi<T> {
    pub diag: Vec<T>,
    /// `off[i]` couples `i` and `i + 1`.
    pub off: Vec<T>,
    pub corner: T,
}

impl<T: Real> CyclicJacobi<T> {
    pub fn new(diag: Vec<T>, off: Vec<T>, corner: T) -> Result<Self> {
        if diag.len() < 3 || off.len() + 1 != diag.len() {
            return invalid("cyclic Jacobi matrix needs n >= 3 and n - 1 links");
        }
        Ok(CyclicJacobi { diag, off, corner })
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn bounds(&self) -> (T, T) {
        let n = self.size();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1] } else { self.corner };
            let right = if i + 1 < n { self.off[i] } else { self.corner };
            let r = left.abs() + right.abs();
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Eigenvalues, ascending: real Householder reduction to tridiagonal
    /// form followed by implicit QL.
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        let n = self.size();
        let mut a = vec![T::zero(); n * n];
        for i in 0..n {
            a[i * n + i] = self.diag[i];
            if i + 1 < n {
                a[i * n + i + 1] = self.off[i];
                a[(i + 1) * n + i] = self.off[i];
            }
        }
        a[n - 1] = self.corner;
        a[(n - 1) * n] = self.corner;
        real_tridiagonalize(&mut a, n).eigenvalues_ql()
    }

    pub fn to_dense(&self) -> CMatrix<T> {
        let n = self.size();
        let mut m = CMatrix::from_diagonal(&self.diag);
        let z = T::zero();
        for i in 0..n - 1 {
            m[(i, i + 1)] = Complex::new(self.off[i], z);
            m[(i + 1, i)] = Complex::new(self.off[i], z);
        }
        m[(0, n - 1)] = Complex::new(self.corner, z);
        m[(n - 1, 0)] = Complex::new(self.corner, z);
        m
    }
}

/// Unitarily similar real tridiagonal form of a Hermitian matrix.
pub fn tridiagonalize<T: Real>(a: &CMatrix<T>) -> Result<Tridiagonal<T>> {
    check_hermitian(a)?;
    let n = a.size();
    if a.is_tridiagonal() {
        return Ok(Tridiagonal {
            diag: (0..n).map(|i| a[(i, i)].re).collect(),
            off: (0..n.saturating_sub(1)).map(|i| a[(i + 1, i)].norm()).collect(),
        });
    }
    let mut m = a.clone();
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    let two = T::lit(2.0);
    for k in 0..n.saturating_sub(1) {
        let x: Vec<Complex<T>> = (k + 1..n).map(|i| m[(i, k)]).collect();
        let xnorm = vec_norm(&x);
        let tail = vec_norm(&x[1..]);
        off.push(xnorm);
        if tail == T::zero() {
            continue;
        }
        let phase = if x[0].norm() > T::zero() {
            x[0] / x[0].norm()
        } else {
            Complex::new(T::one(), T::zero())
        };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] = v[0] - alpha;
        let vn = vec_norm(&v);
        for c in v.iter_mut() {
            *c = *c / vn;
        }
        let m_len = n - k - 1;
        // p = B v on the trailing block
        let mut p = vec![Complex::default(); m_len];
        for (i, pi) in p.iter_mut().enumerate() {
            let row = &m.data[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            *pi = row
                .iter()
                .zip(&v)
                .fold(Complex::default(), |acc, (b, vj)| acc + *b * *vj);
        }
        let kappa: Complex<T> = v
            .iter()
            .zip(&p)
            .fold(Complex::default(), |acc, (vi, pi)| acc + vi.conj() * *pi);
        let w: Vec<Complex<T>> = p
            .iter()
            .zip(&v)
            .map(|(pi, vi)| (*pi - *vi * kappa.re) * two)
            .collect();
        // B <- B - v w^* - w v^*
        for i in 0..m_len {
            let (vi, wi) = (v[i], w[i]);
            let base = (k + 1 + i) * n + k + 1;
            for j in 0..m_len {
                let upd = vi * w[j].conj() + wi * v[j].conj();
                m.data[base + j] = m.data[base + j] - upd;
            }
        }
    }
    let diag = (0..n).map(|i| m[(i, i)].re).collect();
    Ok(Tridiagonal { diag, off })
}

impl<T: Real> Tridiagonal<T> {
    pub fn size(&self) -> usize {
        self.diag.len()
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn bounds(&self) -> (T, T) {
        let n = self.size();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { T::zero() }
                + if i + 1 < n { self.off[i].abs() } else { T::zero() };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: T) -> usize {
        let pivmin = T::min_positive_value() / T::epsilon();
        let mut count = 0;
        let mut q = T::one();
        for i in 0..self.size() {
            let e2 = if i == 0 {
                T::zero()
            } else {
                self.off[i - 1] * self.off[i - 1]
            };
            q = self.diag[i] - x - if i == 0 { T::zero() } else { e2 / q };
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }

    /// All eigenvalues, ascending, by recursive Sturm bisection.
    pub fn eigenvalues_bisection(&self) -> Vec<T> {
        let (lo, hi) = if self.size() == 0 {
            (T::zero(), T::zero())
        } else {
            self.bounds()
        };
        bisect_all(self.size(), lo, hi, |x| self.count_below(x))
    }

    /// All eigenvalues, ascending, by implicit QL with Wilkinson-type shifts.
    pub fn eigenvalues_ql(&self) -> Result<Vec<T>> {
        let n = self.size();
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(T::zero());
        let two = T::lit(2.0);
        for l in 0..n {
            let mut iter = 0;
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].abs() + d[m + 1].abs();
                    if e[m].abs() <= T::epsilon() * dd {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                iter += 1;
                if iter > 60 {
                    return Err(Error::InvalidArgument("QL iteration did not converge".into()));
                }
                let mut g = (d[l + 1] - d[l]) / (two * e[l]);
                let mut r = g.hypot(T::one());
                let signed = if g >= T::zero() { r.abs() } else { -r.abs() };
                g = d[m] - d[l] + e[l] / (g + signed);
                let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
                let mut deflated = false;
                let mut i = m;
                while i > l {
                    i -= 1;
                    let f = s * e[i];
                    let b = c * e[i];
                    r = f.hypot(g);
                    e[i + 1] = r;
                    if r == T::zero() {
                        d[i + 1] = d[i + 1] - p;
                        e[m] = T::zero();
                        deflated = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + two * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                }
                if deflated {
                    continue;
                }
                d[l] = d[l] - p;
                e[l] = g;
                e[m] = T::zero();
            }
        }
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(d)
    }
}

/// Eigenvalues of a Hermitian matrix, ascending (Sturm bisection).
pub fn eigenvalues<T: Real>(a: &CMatrix<T>) -> Result<Vec<T>> {
    Ok(tridiagonalize(a)?.eigenvalues_bisection())
}

/// Eigenvalues of a Hermitian matrix, ascending (QL).
pub fn eigenvalues_ql<T: Real>(a: &CMatrix<T>) -> Result<Vec<T>> {
    tridiagonalize(a)?.eigenvalues_ql()
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting; exactly
/// singular pivots are nudged to `eps * scale` so inverse iteration at an
/// eigenvalue still produces a usable direction.
fn solve_nudged<T: Real>(a: &CMatrix<T>, b: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = a.size();
    let mut m = a.data.clone();
    let mut x = b.to_vec();
    let floor = T::epsilon() * a.max_abs().max(T::one());
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i * n + col].norm().partial_cmp(&m[j * n + col].norm()).unwrap())
            .unwrap();
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        if m[col * n + col].norm() < floor {
            m[col * n + col] = Complex::new(floor, T::zero());
        }
        let p = m[col * n + col];
        for i in col + 1..n {
            let f = m[i * n + col] / p;
            if f == Complex::default() {
                continue;
            }
            for k in col..n {
                m[i * n + k] = m[i * n + k] - f * m[col * n + k];
            }
            x[i] = x[i] - f * x[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s = s - m[i * n + k] * x[k];
        }
        x[i] = s / m[i * n + i];
    }
    x
}

/// Unit eigenvector for the eigenvalue closest to `energy`, by inverse
/// iteration on the dense matrix.
pub fn eigenvector_near<T: Real>(a: &CMatrix<T>, energy: T, seed: u64) -> Result<Vec<Complex<T>>> {
    check_hermitian(a)?;
    let n = a.size();
    let shifted = a.shift_diagonal(-energy);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex<T>> = (0..n)
        .map(|_| Complex::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0))))
        .collect();
    for _ in 0..4 {
        v = solve_nudged(&shifted, &v);
        let nv = vec_norm(&v);
        if !(nv > T::zero()) || !nv.is_finite() {
            return Err(Error::InvalidArgument("inverse iteration broke down".into()));
        }
        for c in v.iter_mut() {
            *c = *c / nv;
        }
    }
    Ok(v)
}

/// Largest singular value, via the eigenvalues of `A^* A`.
pub fn spectral_norm<T: Real>(a: &CMatrix<T>) -> Result<T> {
    let ev = eigenvalues(&a.adjoint().matmul(a))?;
    Ok(ev.last().copied().unwrap_or_else(T::zero).max(T::zero()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest};

    #[test]
    fn cyclic_real_path_matches_complex_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [3usize, 4, 7, 20, 89] {
            for _ in 0..5 {
                let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let off: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.1..1.5)).collect();
                let corner = rng.gen_range(-1.5..1.5);
                let c = CyclicJacobi::new(diag, off, corner).unwrap();
                let fast = c.eigenvalues().unwrap();
                let dense = eigenvalues(&c.to_dense()).unwrap();
                for (a, b) in fast.iter().zip(&dense) {
                    assert!((a - b).abs() < 1e-12, "n={n} {a} {b}");
                }
            }
        }
        // free ring: 2 cos(2 pi k / 3) and the antiperiodic twist
        let ring = CyclicJacobi::new(vec![0.0; 3], vec![1.0, 1.0], 1.0).unwrap();
        let ev = ring.eigenvalues().unwrap();
        for (a, b) in ev.iter().zip([-1.0f64, -1.0, 2.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let twisted = CyclicJacobi::new(vec![0.0; 3], vec![1.0, 1.0], -1.0).unwrap();
        let ev = twisted.eigenvalues().unwrap();
        for (a, b) in ev.iter().zip([-2.0f64, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(CyclicJacobi::new(vec![0.0; 2], vec![1.0], 1.0).is_err());
    }

    fn random_hermitian(n: usize, seed: u64) -> CMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex::new(rng.gen_range(-1.0..1.0), 0.0);
            for j in i + 1..n {
                let c = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[(i, j)] = c;
                m[(j, i)] = c.conj();
            }
        }
        m
    }

    #[test]
    fn small_examples() {
        let d = CMatrix::from_diagonal(&[3.0, 1.0, 2.0]);
        let ev: Vec<f64> = eigenvalues(&d).unwrap();
        for (a, b) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let x = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let ev: Vec<f64> = eigenvalues(&x).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
        let mut bad = CMatrix::<f64>::zeros(2);
        bad[(0, 1)] = Complex::new(1.0, 0.0);
        assert!(matches!(eigenvalues(&bad), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn path_graph_closed_form() {
        for n in [1usize, 2, 7, 50, 200] {
            let m = CMatrix::tridiagonal(&vec![0.0; n], &vec![1.0; n - 1]);
            let ev = eigenvalues(&m).unwrap();
            let mut exact: Vec<f64> = (1..=n)
                .map(|k| 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
                .collect();
            exact.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in ev.iter().zip(&exact) {
                assert!((a - b).abs() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn householder_path_matches_ql_on_dense_inputs() {
        for (i, n) in [3usize, 10, 40, 90].into_iter().enumerate() {
            let m = random_hermitian(n, i as u64);
            let a = eigenvalues(&m).unwrap();
            let b = eigenvalues_ql(&m).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-10);
            }
            // trace is preserved by the reduction
            let tr: f64 = (0..n).map(|k| m[(k, k)].re).sum();
            assert!((a.iter().sum::<f64>() - tr).abs() < 1e-9);
            // so is the Frobenius norm
            let fro: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((fro - m.frobenius()).abs() < 1e-9);
        }
    }

    #[test]
    fn eigenvectors_have_small_residual() {
        let m = random_hermitian(30, 9);
        let ev = eigenvalues(&m).unwrap();
        for &e in &[ev[0], ev[13], ev[29]] {
            let v = eigenvector_near(&m, e, 1).unwrap();
            let r: Vec<Complex<f64>> = m
                .mul_vec(&v)
                .iter()
                .zip(&v)
                .map(|(a, b)| a - b * e)
                .collect();
            assert!(vec_norm(&r) < 1e-10);
        }
    }

    #[test]
    fn spectral_norm_of_hermitian_is_max_abs_eigenvalue() {
        let m = random_hermitian(12, 4);
        let ev = eigenvalues(&m).unwrap();
        let top = ev[0].abs().max(ev[11].abs());
        assert!((spectral_norm(&m).unwrap() - top).abs() < 1e-10);
    }

    #[test]
    fn f32_solver() {
        let m = CMatrix::<f32>::tridiagonal(&[0.0; 20], &[1.0; 19]);
        let ev = eigenvalues(&m).unwrap();
        assert!((ev[19] - 2.0 * (std::f32::consts::PI / 21.0).cos()).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn weyl_perturbation(seed in 0u64..1000, n in 2usize..25, scale in 1e-6f64..1.0) {
            let a = random_hermitian(n, seed);
            let mut e = random_hermitian(n, seed + 10_000);
            for i in 0..n { for j in 0..n { e[(i, j)] = e[(i, j)] * scale; } }
            let ea = eigenvalues(&a).unwrap();
            let eb = eigenvalues(&a.add(&e)).unwrap();
            let enorm = spectral_norm(&e).unwrap();
            for (x, y) in ea.iter().zip(&eb) {
                prop_assert!((x - y).abs() <= enorm + 1e-12);
            }
        }
    }
}
