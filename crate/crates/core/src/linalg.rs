//! Small dense complex linear algebra: row-major matrices, LU with partial
//! pivoting, pivoted Householder QR, condition estimates, eigenvalues and
//! least squares.
//!
//! Every system solved in this crate is small (support-sized Foldy-Lax
//! systems, active-set refits, Gram matrices of a few hundred rows), so the
//! routines favour clarity and deterministic operation order over blocking.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::real::Real;

/// Dense complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from a row-major buffer.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "buffer of length {} cannot form a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Sub-matrix made of the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.rows, cols.len(), |i, k| self[(i, cols[k])])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, a: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * a).collect(),
        }
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.cols, "dimension mismatch in mul_vec");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(Complex::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// `A^* x` without forming the adjoint.
    pub fn adjoint_mul_vec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.rows, "dimension mismatch in adjoint_mul_vec");
        let mut out = vec![Complex::zero(); self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * xi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Maximum absolute row sum (the operator norm induced by the sup norm).
    pub fn norm_inf(&self) -> T {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.norm()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn norm_fro(&self) -> T {
        self.data.iter().map(|v| v.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn column_norms(&self) -> Vec<T> {
        let mut acc = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            for (a, v) in acc.iter_mut().zip(self.row(i)) {
                *a += v.norm_sqr();
            }
        }
        acc.into_iter().map(|v| v.sqrt()).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Euclidean norm of a complex vector.
pub fn norm2<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

pub fn norm1<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm()).sum()
}

pub fn norm_max<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm()).fold(T::zero(), T::max)
}

/// `<a, b> = sum conj(a_i) b_i`.
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::zero(), |acc, (&x, &y)| acc + x.conj() * y)
}

/// LU factorization `P A = L U` with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<Complex<T>>,
    perm: Vec<usize>,
    norm_one: T,
}

impl<T: Real> Lu<T> {
    /// Factors a square matrix. Fails only when a pivot is exactly zero;
    /// near-singularity is reported through [`Lu::rcond`].
    pub fn new(a: &CMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidArgument(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let norm_one = a.norm_one();
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, T::neg_infinity()), |best, c| if c.1 > best.1 { c } else { best });
            if pmax.is_zero() || !pmax.is_finite() {
                return Err(Error::DegenerateMatrix(format!("zero pivot in column {k}")));
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= f * u;
                }
            }
        }
        Ok(Self { n, lu, perm, norm_one })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.n;
        assert_eq!(b.len(), n, "dimension mismatch in LU solve");
        let mut x: Vec<Complex<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        x
    }

    pub fn inverse(&self) -> CMatrix<T> {
        let n = self.n;
        let mut inv = CMatrix::zeros(n, n);
        let mut e = vec![Complex::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = Complex::zero());
            e[j] = Complex::one();
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }

    /// Reciprocal 1-norm condition number `1 / (|A|_1 |A^-1|_1)`, computed from
    /// the explicit inverse (exact rather than estimated; systems are small).
    pub fn rcond(&self) -> T {
        if self.n == 0 {
            return T::one();
        }
        let inv_norm = self.inverse().norm_one();
        let denom = self.norm_one * inv_norm;
        if !denom.is_finite() || denom.is_zero() {
            T::zero()
        } else {
            T::one() / denom
        }
    }

    pub fn determinant(&self) -> Complex<T> {
        let mut det = Complex::one();
        for i in 0..self.n {
            det *= self.lu[i * self.n + i];
        }
        // parity of the permutation
        let mut seen = vec![false; self.n];
        let mut swaps = 0usize;
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                k = self.perm[k];
                len += 1;
            }
            swaps += len - 1;
        }
        if swaps % 2 == 1 {
            -det
        } else {
            det
        }
    }
}

/// Reciprocal condition (of the Gram matrix `A*A`) below which a
/// least-squares problem counts as rank deficient.
pub const RANK_RCOND: f64 = 1e-13;

/// Relative size of a trailing column norm at which pivoted QR stops and
/// declares the remaining columns dependent.
pub const QR_RANK_TOL: f64 = 1e-12;

/// Householder QR with column pivoting, `A P = Q R`.
///
/// Only the leading `rank` reflectors are formed; `R11` is the leading
/// `rank × rank` triangle.
#[derive(Clone, Debug)]
pub struct Qr<T> {
    rows: usize,
    cols: usize,
    /// Householder vectors `v` with `H = I − β v v*`; reflector `k` acts on
    /// rows `k..`.
    reflectors: Vec<(Vec<Complex<T>>, T)>,
    /// `rank × cols` upper-trapezoidal factor in pivoted column order.
    r: CMatrix<T>,
    perm: Vec<usize>,
    rank: usize,
}

impl<T: Real> Qr<T> {
    pub fn new(a: &CMatrix<T>) -> Self {
        let (rows, cols) = (a.rows(), a.cols());
        let mut w = a.clone();
        let mut perm: Vec<usize> = (0..cols).collect();
        let mut reflectors = Vec::new();
        let tol = T::lit(QR_RANK_TOL);
        let mut first = T::zero();
        for k in 0..rows.min(cols) {
            // pivot on the largest trailing column
            let norms: Vec<T> = (k..cols)
                .map(|j| (k..rows).map(|i| w[(i, j)].norm_sqr()).sum::<T>().sqrt())
                .collect();
            let (off, &best) = norms
                .iter()
                .enumerate()
                .fold((0, &T::zero()), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
            if k == 0 {
                first = best;
            }
            if best.is_zero() || best <= tol * first {
                break;
            }
            let p = k + off;
            if p != k {
                perm.swap(k, p);
                for i in 0..rows {
                    let t = w[(i, k)];
                    w[(i, k)] = w[(i, p)];
                    w[(i, p)] = t;
                }
            }
            let x0 = w[(k, k)];
            let phase = if x0.norm().is_zero() { Complex::one() } else { x0 / x0.norm() };
            let alpha = -phase * best;
            let mut v: Vec<Complex<T>> = (k..rows).map(|i| w[(i, k)]).collect();
            v[0] -= alpha;
            let vn2: T = v.iter().map(|z| z.norm_sqr()).sum();
            let beta = if vn2.is_zero() { T::zero() } else { T::lit(2.0) / vn2 };
            for j in k + 1..cols {
                let mut d = Complex::zero();
                for (t, vi) in v.iter().enumerate() {
                    d += vi.conj() * w[(k + t, j)];
                }
                let db = d * beta;
                for (t, vi) in v.iter().enumerate() {
                    w[(k + t, j)] -= *vi * db;
                }
            }
            w[(k, k)] = alpha;
            for i in k + 1..rows {
                w[(i, k)] = Complex::zero();
            }
            reflectors.push((v, beta));
        }
        let rank = reflectors.len();
        let r = CMatrix::from_fn(rank, cols, |i, j| if j < i { Complex::zero() } else { w[(i, j)] });
        Self { rows, cols, reflectors, r, perm, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `perm[t]` is the original index of pivoted column `t`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn r(&self) -> &CMatrix<T> {
        &self.r
    }

    /// `Q* b` for `b` of length `rows`.
    pub fn apply_qh(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = b.to_vec();
        for (k, (v, beta)) in self.reflectors.iter().enumerate() {
            reflect(k, v, *beta, &mut out);
        }
        out
    }

    /// `Q b` for `b` of length `rows`.
    pub fn apply_q(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = b.to_vec();
        for (k, (v, beta)) in self.reflectors.iter().enumerate().rev() {
            reflect(k, v, *beta, &mut out);
        }
        out
    }

    /// `Q₁ c` where `Q₁` holds the first `rank` columns of `Q`.
    pub fn thin_q_mul(&self, c: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut full = vec![Complex::zero(); self.rows];
        full[..self.rank].copy_from_slice(&c[..self.rank]);
        self.apply_q(&full)
    }

    /// `Q₁* b`, the leading `rank` entries of `Q* b`.
    pub fn thin_qh_mul(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = self.apply_qh(b);
        out.truncate(self.rank);
        out
    }

    /// Solves `R11 x = b` by back substitution.
    pub fn r11_solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let k = self.rank;
        let mut x = b[..k].to_vec();
        for i in (0..k).rev() {
            let mut s = x[i];
            for j in i + 1..k {
                s -= self.r[(i, j)] * x[j];
            }
            x[i] = s / self.r[(i, i)];
        }
        x
    }

    /// Solves `R11* x = b` by forward substitution.
    pub fn r11_adjoint_solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let k = self.rank;
        let mut x = b[..k].to_vec();
        for i in 0..k {
            let mut s = x[i];
            for j in 0..i {
                s -= self.r[(j, i)].conj() * x[j];
            }
            x[i] = s / self.r[(i, i)].conj();
        }
        x
    }

    /// `1 / (‖R11‖₁ ‖R11⁻¹‖₁)` from the explicit triangular inverse.
    pub fn r11_rcond(&self) -> T {
        let k = self.rank;
        if k == 0 {
            return T::zero();
        }
        let mut inv_norm = T::zero();
        for j in 0..k {
            let mut e = vec![Complex::zero(); k];
            e[j] = Complex::one();
            inv_norm = inv_norm.max(norm1(&self.r11_solve(&e)));
        }
        let r_norm = (0..k)
            .map(|j| (0..=j).map(|i| self.r[(i, j)].norm()).sum::<T>())
            .fold(T::zero(), T::max);
        T::one() / (r_norm * inv_norm)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

fn reflect<T: Real>(k: usize, v: &[Complex<T>], beta: T, x: &mut [Complex<T>]) {
    let mut d = Complex::zero();
    for (t, vi) in v.iter().enumerate() {
        d += vi.conj() * x[k + t];
    }
    let db = d * beta;
    for (t, vi) in v.iter().enumerate() {
        x[k + t] -= *vi * db;
    }
}

/// Least-squares solution of `min |A x - b|_2` for a full-column-rank `A`,
/// via pivoted Householder QR. Returns [`Error::RankDeficient`] when `A` has
/// more columns than rows or `cond(A)² > 1 / RANK_RCOND`.
pub fn least_squares<T: Real>(a: &CMatrix<T>, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    if a.cols() == 0 {
        return Ok(Vec::new());
    }
    if a.cols() > a.rows() {
        return Err(Error::RankDeficient);
    }
    let qr = Qr::new(a);
    if qr.rank() < a.cols() {
        return Err(Error::RankDeficient);
    }
    let rc = qr.r11_rcond();
    if rc * rc < T::lit(RANK_RCOND) {
        return Err(Error::RankDeficient);
    }
    let c = qr.thin_qh_mul(b);
    let xp = qr.r11_solve(&c);
    let mut x = vec![Complex::zero(); a.cols()];
    for (t, &j) in qr.perm().iter().enumerate() {
        x[j] = xp[t];
    }
    Ok(x)
}

/// Reduces a square matrix to upper Hessenberg form by Householder
/// similarity transforms.
fn hessenberg<T: Real>(a: &mut CMatrix<T>) {
    let n = a.rows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let xnorm = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<T>().sqrt();
        if xnorm.is_zero() {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm().is_zero() {
            Complex::one()
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;
        let mut v: Vec<Complex<T>> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm = norm2(&v);
        if vnorm.is_zero() {
            continue;
        }
        v.iter_mut().for_each(|z| *z = *z / vnorm);
        // A <- (I - 2 v v^*) A
        for j in 0..n {
            let mut dot = Complex::zero();
            for (t, vi) in v.iter().enumerate() {
                dot += vi.conj() * a[(k + 1 + t, j)];
            }
            let two_dot = dot * T::lit(2.0);
            for (t, vi) in v.iter().enumerate() {
                a[(k + 1 + t, j)] -= *vi * two_dot;
            }
        }
        // A <- A (I - 2 v v^*)
        for i in 0..n {
            let mut dot = Complex::zero();
            for (t, vi) in v.iter().enumerate() {
                dot += a[(i, k + 1 + t)] * *vi;
            }
            let two_dot = dot * T::lit(2.0);
            for (t, vi) in v.iter().enumerate() {
                a[(i, k + 1 + t)] -= two_dot * vi.conj();
            }
        }
        for i in k + 2..n {
            a[(i, k)] = Complex::zero();
        }
    }
}

/// Eigenvalues of a general complex square matrix: Hessenberg reduction
/// followed by the single-shift complex QR algorithm with Wilkinson shifts.
/// Eigenvalues come out in deflation order (bottom of the matrix first).
pub fn eigenvalues<T: Real>(a: &CMatrix<T>) -> Result<Vec<Complex<T>>> {
    if !a.is_square() {
        return Err(Error::InvalidArgument("eigenvalues need a square matrix".into()));
    }
    let n = a.rows();
    let mut h = a.clone();
    hessenberg(&mut h);
    let eps = T::epsilon();
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return Ok(out);
    }
    let mut hi = n - 1;
    let mut iter = 0usize;
    let max_iter = 100 * n.max(1);
    loop {
        if hi == 0 {
            out.push(h[(0, 0)]);
            break;
        }
        // locate the start of the active unreduced block
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let scale = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            let scale = if scale.is_zero() { a.norm_fro() } else { scale };
            if sub <= eps * scale {
                h[(lo, lo - 1)] = Complex::zero();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            out.push(h[(hi, hi)]);
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > max_iter {
            return Err(Error::NonConvergence { iterations: iter });
        }
        let shift = if iter % 11 == 10 {
            // exceptional shift to break cycles
            h[(hi, hi)] + Complex::new(h[(hi, hi - 1)].norm(), T::zero()) * T::lit(0.75)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for i in lo..=hi {
            h[(i, i)] -= shift;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let x = h[(k, k)];
            let y = h[(k + 1, k)];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (c1, c2) = if r.is_zero() {
                (Complex::one(), Complex::zero())
            } else {
                (x / r, y / r)
            };
            for j in k..=hi {
                let u = h[(k, j)];
                let w = h[(k + 1, j)];
                h[(k, j)] = c1.conj() * u + c2.conj() * w;
                h[(k + 1, j)] = -c2 * u + c1 * w;
            }
            rots.push((c1, c2));
        }
        for (idx, k) in (lo..hi).enumerate() {
            let (c1, c2) = rots[idx];
            let top = (k + 2).min(hi);
            for i in lo..=top {
                let u = h[(i, k)];
                let w = h[(i, k + 1)];
                h[(i, k)] = u * c1 + w * c2;
                h[(i, k + 1)] = -u * c2.conj() + w * c1.conj();
            }
        }
        for i in lo..=hi {
            h[(i, i)] += shift;
        }
    }
    Ok(out)
}

fn wilkinson_shift<T: Real>(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Complex<T> {
    let half = T::lit(0.5);
    let m = (a + d) * half;
    let disc = ((a - d) * (a - d) * T::lit(0.25) + b * c).sqrt();
    let l1 = m + disc;
    let l2 = m - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Largest singular value of `A` by power iteration on `A^* A`.
///
/// Stops once the Rayleigh quotient changes by at most `rel_tol` relative and
/// the eigen-residual `|A^*A v - s^2 v|` is below `sqrt(rel_tol) s^2`.
pub fn power_iteration_norm<T: Real>(a: &CMatrix<T>, rel_tol: T, max_iter: usize) -> Result<T> {
    let n = a.cols();
    if n == 0 || a.rows() == 0 {
        return Err(Error::InvalidArgument("spectral norm of an empty matrix".into()));
    }
    // deterministic start with a mild index-dependent tilt
    let mut v: Vec<Complex<T>> = (0..n)
        .map(|j| Complex::new(T::one() + T::lit(1e-3) * T::of_usize(j % 7), T::lit(1e-3) * T::of_usize(j % 5)))
        .collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|z| *z = *z / nv);
    let mut lambda_prev = T::zero();
    for it in 1..=max_iter {
        let av = a.mul_vec(&v);
        let w = a.adjoint_mul_vec(&av);
        let lambda = inner(&v, &w).re;
        if lambda.is_zero() {
            // A v = 0 for a unit v in the start direction; A may still be nonzero
            if a.norm_fro().is_zero() {
                return Ok(T::zero());
            }
        }
        let resid = w
            .iter()
            .zip(&v)
            .map(|(&wi, &vi)| (wi - vi * lambda).norm_sqr())
            .sum::<T>()
            .sqrt();
        let wn = norm2(&w);
        if wn.is_zero() {
            return Ok(T::zero());
        }
        let changed = (lambda - lambda_prev).abs();
        if it > 1 && changed <= rel_tol * lambda && resid <= rel_tol.sqrt() * lambda {
            return Ok(lambda.sqrt());
        }
        lambda_prev = lambda;
        v = w.into_iter().map(|z| z / wn).collect();
    }
    Err(Error::NonConvergence { iterations: max_iter })
}
