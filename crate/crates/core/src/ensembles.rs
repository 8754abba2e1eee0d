//! Seeded random states and operators for sweeps and property checks.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::linalg::{c, ComplexScalar, Ket, Operator, ZERO};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> ComplexScalar {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im)
}

/// Haar-random pure state.
pub fn random_ket<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Ket {
    loop {
        let amps: Vec<ComplexScalar> = (0..dim).map(|_| gaussian(rng)).collect();
        if let Ok(k) = Ket::normalized(amps) {
            return k;
        }
    }
}

pub fn random_ginibre<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    Operator::from_fn(dim, |_, _| gaussian(rng))
}

/// Hermitian matrix `(G + G†)/2` with Gaussian `G`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    let g = random_ginibre(rng, dim);
    (&g + &g.dagger()).scale_real(0.5)
}

/// Haar-random unitary via Gram-Schmidt on a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    let g = random_ginibre(rng, dim);
    let mut cols: Vec<Vec<ComplexScalar>> = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut v: Vec<ComplexScalar> = (0..dim).map(|r| g.get(r, k)).collect();
        // two passes of modified Gram-Schmidt for stability
        for _ in 0..2 {
            for u in &cols {
                let proj: ComplexScalar = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, ui) in v.iter_mut().zip(u) {
                    *x -= proj * ui;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in v.iter_mut() {
            *x /= norm;
        }
        cols.push(v);
    }
    Operator::from_fn(dim, |r, k| cols[k][r])
}

/// Random density operator of the given rank (Wishart construction).
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Operator {
    let rank = rank.clamp(1, dim);
    let mut rho = Operator::zeros(dim);
    for _ in 0..rank {
        let v = Ket::new((0..dim).map(|_| gaussian(rng)).collect()).expect("finite");
        rho = &rho + &v.projector();
    }
    let tr = rho.trace().re;
    rho.scale_real(1.0 / tr)
}

/// Random PSD effect with spectral norm `max_norm` or below.
pub fn random_effect<R: Rng + ?Sized>(rng: &mut R, dim: usize, max_norm: f64) -> Operator {
    let u = random_unitary(rng, dim);
    let spread = Uniform::new(0.0, max_norm).expect("valid range");
    let mut s: Vec<f64> = (0..dim).map(|_| spread.sample(rng)).collect();
    s[0] = max_norm;
    u.matmul(&Operator::diag_real(&s)).matmul(&u.dagger())
}

/// `U · diag(s) · V†` with singular values drawn from `[0, max_singular]`.
pub fn random_contraction<R: Rng + ?Sized>(rng: &mut R, dim: usize, max_singular: f64) -> Operator {
    let u = random_unitary(rng, dim);
    let v = random_unitary(rng, dim);
    let spread = Uniform::new_inclusive(0.0, max_singular).expect("valid range");
    let s: Vec<f64> = (0..dim).map(|_| spread.sample(rng)).collect();
    u.matmul(&Operator::diag_real(&s)).matmul(&v.dagger())
}

/// A random operator with no structure, scaled to Frobenius norm ≈ `scale`.
pub fn random_operator<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> Operator {
    let g = random_ginibre(rng, dim);
    let norm = g.frobenius_norm();
    if norm == 0.0 {
        return Operator::from_fn(dim, |_, _| ZERO);
    }
    g.scale_real(scale / norm)
}
