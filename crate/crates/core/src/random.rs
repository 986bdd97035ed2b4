//! Seeded random operators. Entries are independent standard Gaussians in
//! both the real and imaginary parts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{Filtration, Operator, C64};

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the master `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn gaussian_vector(rng: &mut impl Rng, d: usize) -> Vec<C64> {
    (0..d).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect()
}

pub fn unit_vector(rng: &mut impl Rng, d: usize) -> Vec<C64> {
    let mut v = gaussian_vector(rng, d);
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= n;
    }
    v
}

pub fn gaussian(rng: &mut impl Rng, d: usize) -> Operator {
    let v = gaussian_vector(rng, d * d);
    Operator::from_fn(d, |i, j| v[i * d + j])
}

pub fn gaussian_real_diag(rng: &mut impl Rng, d: usize) -> Operator {
    let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    Operator::from_real_diag(&v)
}

pub fn hermitian(rng: &mut impl Rng, d: usize) -> Operator {
    gaussian(rng, d).hermitian_part()
}

/// `g* g` for a Gaussian `g`: positive and almost surely invertible.
pub fn positive(rng: &mut impl Rng, d: usize) -> Operator {
    gaussian(rng, d).abs_sq().hermitian_part()
}

/// A Gaussian element of `M_n`.
pub fn in_level(rng: &mut impl Rng, f: &Filtration, n: usize) -> Operator {
    f.expect(n, &gaussian(rng, f.dim()))
}

/// A Hermitian Gaussian element of `M_n`.
pub fn hermitian_in_level(rng: &mut impl Rng, f: &Filtration, n: usize) -> Operator {
    f.expect(n, &hermitian(rng, f.dim())).hermitian_part()
}

/// A positive element of `M_n`.
pub fn positive_in_level(rng: &mut impl Rng, f: &Filtration, n: usize) -> Operator {
    let g = in_level(rng, f, n);
    g.abs_sq().hermitian_part()
}

/// Mean-zero-after-`n` Gaussian element of `M_N` with `||y||_2 = 1`.
pub fn mean_zero_after(rng: &mut impl Rng, f: &Filtration, n: usize) -> Operator {
    let g = in_level(rng, f, f.levels());
    let y = &g - &f.expect(n, &g);
    let norm = y.norm2();
    if norm == 0.0 {
        y
    } else {
        y.scale(1.0 / norm)
    }
}

/// A random `(p,2)` column atom `(a, e)` at level `n < N`: `e` is a spectral
/// projection of a Hermitian element of `M_n` and `||a||_2 = tau(e)^{1/2-1/p}`.
pub fn p2c_atom(rng: &mut impl Rng, f: &Filtration, n: usize, p: f64) -> (Operator, Operator) {
    let h = hermitian_in_level(rng, f, n);
    let mut e = crate::algebra::spectral_projection(&h, 0.0, f64::INFINITY).expect("Hermitian probe");
    if e.tau().re == 0.0 {
        e = Operator::identity(f.dim());
    }
    let a = mean_zero_after(rng, f, n).matmul(&e);
    let a = &a - &f.expect(n, &a);
    let size = e.tau().re.powf(0.5 - 1.0 / p);
    let norm = a.norm2();
    (if norm == 0.0 { a } else { a.scale(size / norm) }, e)
}
