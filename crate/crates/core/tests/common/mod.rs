#![allow(dead_code)]

use funcoord_core::discretization::Grid;
use funcoord_core::spaces::CoordinateSpace;
use funcoord_core::{CMatrix, CVector, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cvec(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn cmat(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// `I + B Bᴴ / n`: SPD with condition number of order ten.
pub fn spd(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let b = cmat(rng, n);
    CMatrix::identity(n, n) + &b * b.adjoint() / C64::new(n as f64, 0.0)
}

/// Diagonally dominated random matrix, safely invertible.
pub fn invertible(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    cmat(rng, n) / C64::new((n as f64).sqrt(), 0.0) + CMatrix::identity(n, n) * C64::new(2.0, 0.0)
}

pub fn grid(n: usize) -> Grid {
    Grid::uniform(-1.0, 1.0, n, false).unwrap()
}

pub fn gram_space(rng: &mut ChaCha8Rng, id: &str, n: usize) -> CoordinateSpace {
    CoordinateSpace::with_gram(id, grid(n), spd(rng, n)).unwrap()
}

pub fn rel(a: C64, b: C64, scale: f64) -> f64 {
    (a - b).norm() / scale.max(f64::MIN_POSITIVE)
}
