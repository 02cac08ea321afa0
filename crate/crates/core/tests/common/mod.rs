#![allow(dead_code)]

use blepi_core::datum::{BlepDatum, Partition};
use blepi_core::BlockCovariance;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// `I + s·GGᵀ/r`: eigenvalues in `[1, 1 + O(s)]`.
pub fn spd<R: Rng>(r: usize, s: f64, rng: &mut R) -> DMatrix<f64> {
    let g = gaussian_matrix(r, r, rng);
    DMatrix::identity(r, r) + (&g * g.transpose()) * (s / r as f64)
}

/// Row-orthonormal `k × n` via QR of a Gaussian matrix.
pub fn row_orthonormal<R: Rng>(k: usize, n: usize, rng: &mut R) -> DMatrix<f64> {
    let q = gaussian_matrix(n, k, rng).qr().q();
    q.transpose()
}

pub fn random_partition<R: Rng>(n: usize, rng: &mut R) -> Partition {
    let mut blocks = Vec::new();
    let mut left = n;
    while left > 0 {
        let r = rng.random_range(1..=left.min(3));
        blocks.push(r);
        left -= r;
    }
    Partition::new(blocks).unwrap()
}

/// Random datum with Gaussian maps; not necessarily finite.
pub fn random_datum<R: Rng>(max_n: usize, rng: &mut R) -> BlepDatum {
    let n = rng.random_range(1..=max_n);
    let partition = random_partition(n, rng);
    let m = rng.random_range(1..=3);
    let maps: Vec<_> = (0..m)
        .map(|_| {
            let nj = rng.random_range(1..=n);
            gaussian_matrix(nj, n, rng)
        })
        .collect();
    let c = (0..m).map(|_| rng.random_range(0.2..1.5)).collect();
    let d = (0..partition.k()).map(|_| rng.random_range(0.2..1.5)).collect();
    BlepDatum::new(partition, maps, c, d)
}

pub fn random_sigma<R: Rng>(partition: &Partition, rng: &mut R) -> BlockCovariance {
    BlockCovariance::new(partition.blocks().iter().map(|&r| spd(r, 1.0, rng)).collect()).unwrap()
}

/// `½ log((2πe)^d det K)` via an LU determinant.
pub fn entropy_lu(k: &DMatrix<f64>) -> f64 {
    let d = k.nrows() as f64;
    0.5 * (d * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln() + k.clone().lu().determinant().ln())
}

/// Objective recomputed from scratch with dense matrices.
pub fn objective_oracle(datum: &BlepDatum, sigma: &BlockCovariance) -> f64 {
    let full = sigma.full();
    let blocks: f64 = sigma.blocks().iter().zip(&datum.d).map(|(b, &d)| d * entropy_lu(b)).sum();
    let images: f64 = datum
        .maps
        .iter()
        .zip(&datum.c)
        .map(|(a, &c)| c * entropy_lu(&(a * &full * a.transpose())))
        .sum();
    blocks - images
}
