use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{NclabError, Result};

pub type C64 = Complex64;

/// A dense `d x d` complex matrix, stored row-major.
///
/// Every norm derived from an `Operator` uses the normalized trace
/// `tau(x) = tr(x) / d`, so `tau(1) = 1` and `||1||_p = 1` for all `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<C64>,
}

impl Operator {
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(NclabError::InvalidParameter("dimension must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(NclabError::DimensionMismatch { expected: dim * dim, got: data.len() });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NclabError::NonFinite);
        }
        Ok(Self { dim, data })
    }

    /// Builds from separate real and imaginary row lists.
    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        let dim = re.len();
        if im.len() != dim {
            return Err(NclabError::DimensionMismatch { expected: dim, got: im.len() });
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (r, i) in re.iter().zip(im) {
            if r.len() != dim || i.len() != dim {
                return Err(NclabError::DimensionMismatch { expected: dim, got: r.len().min(i.len()) });
            }
            data.extend(r.iter().zip(i).map(|(&a, &b)| C64::new(a, b)));
        }
        Self::new(dim, data)
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * dim + i] = C64::new(v, 0.0);
        }
        m
    }

    /// The rank-one operator `u v*`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        let dim = u.len();
        debug_assert_eq!(dim, v.len());
        Self::from_fn(dim, |i, j| u[i] * v[j].conj())
    }

    /// Kronecker product `a ⊗ b`, with `a` on the most significant index.
    pub fn kron(a: &Operator, b: &Operator) -> Self {
        let (da, db) = (a.dim, b.dim);
        Self::from_fn(da * db, |i, j| a.get(i / db, j / db) * b.get(i % db, j % db))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn real_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(|r| r.iter().map(|z| z.re).collect()).collect()
    }

    pub fn imag_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(|r| r.iter().map(|z| z.im).collect()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, j)).collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn matmul(&self, rhs: &Operator) -> Self {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        let d = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            let row = &self.data[i * d..(i + 1) * d];
            let dst = &mut out[i * d..(i + 1) * d];
            for (k, &a) in row.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let src = &rhs.data[k * d..(k + 1) * d];
                for (o, &b) in dst.iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Self { dim: d, data: out }
    }

    /// `x* x`.
    pub fn abs_sq(&self) -> Self {
        self.adjoint().matmul(self)
    }

    /// `x x*`.
    pub fn abs_sq_row(&self) -> Self {
        self.matmul(&self.adjoint())
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let d = self.dim;
        (0..d).map(|i| self.data[i * d..(i + 1) * d].iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * c).collect() }
    }

    pub fn scale_c(&self, c: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * c).collect() }
    }

    /// Unnormalized trace.
    pub fn tr(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Normalized trace `tr(x) / d`.
    pub fn tau(&self) -> C64 {
        self.tr() / self.dim as f64
    }

    /// `tau(a* b)`.
    pub fn inner(&self, other: &Operator) -> C64 {
        let s: C64 = self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum();
        s / self.dim as f64
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `||x||_2 = tau(x* x)^{1/2}`.
    pub fn norm2(&self) -> f64 {
        self.frobenius() / (self.dim as f64).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let d = self.dim;
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol * self.max_abs().max(1.0)
    }

    /// `(x + x*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self.get(i, j) + self.get(j, i).conj()) * 0.5)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }

    /// Deviation `||e^2 - e||` entrywise, combined with Hermitian deviation.
    pub fn projection_deviation(&self) -> f64 {
        let sq = self.matmul(self);
        (&sq - self).max_abs().max(self.hermitian_deviation())
    }

    pub fn is_projection(&self, tol: f64) -> bool {
        self.projection_deviation() <= tol
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let d = self.dim;
        (0..d).all(|i| (0..d).all(|j| i == j || self.get(i, j).norm() <= tol))
    }
}

impl Add<&Operator> for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        Operator { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub<&Operator> for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        Operator { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul<&Operator> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-1.0)
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        self.matmul(&rhs)
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&Operator> for Operator {
    fn sub_assign(&mut self, rhs: &Operator) {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}
