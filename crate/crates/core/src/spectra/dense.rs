//! Dense matrix representation of lattice Hamiltonians for small lattices.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{Sector, SpectraError};
use crate::operators::{kinetic_symbol, Hamiltonian};

/// Largest configuration lattice accepted by the dense path.
pub const MAX_DENSE_POINTS: usize = 4096;

/// Full spectrum of a Hamiltonian within one sector.
#[derive(Debug, Clone)]
pub struct DenseSpectrum {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Euclidean-normalized eigenvectors in lattice order, one per column;
    /// empty when only eigenvalues were requested.
    pub vectors: DMatrix<f64>,
}

/// Real symmetric matrix of `T + V` on the configuration lattice.
///
/// The kinetic block is the lattice convolution kernel obtained by a direct
/// (non-FFT) inverse Fourier sum of the symbol.
pub fn dense_matrix(h: &Hamiltonian) -> Result<DMatrix<f64>, SpectraError> {
    let len = h.len();
    if len > MAX_DENSE_POINTS {
        return Err(SpectraError::Invalid(format!(
            "dense path limited to {MAX_DENSE_POINTS} lattice points, got {len}"
        )));
    }
    let grid = h.grid();
    let dim = grid.dim();
    let n = grid.points_per_axis();
    let single = grid.len();
    let symbol = kinetic_symbol(h.kinetic(), grid, 1)?;
    let mut k_idx = vec![0usize; dim];
    let mut d_idx = vec![0usize; dim];
    let kernel: Vec<f64> = (0..single)
        .map(|d| {
            grid.unflatten(d, dim, &mut d_idx);
            let s: f64 = (0..single)
                .map(|k| {
                    grid.unflatten(k, dim, &mut k_idx);
                    let phase: usize = k_idx.iter().zip(&d_idx).map(|(a, b)| a * b % n).sum::<usize>() % n;
                    symbol[k] * (2.0 * std::f64::consts::PI * phase as f64 / n as f64).cos()
                })
                .sum();
            s / single as f64
        })
        .collect();

    let particles = h.particles();
    let axes = dim * particles;
    let mut m = DMatrix::<f64>::zeros(len, len);
    let mut idx = vec![0usize; axes];
    let mut jdx = vec![0usize; axes];
    let mut diff = vec![0usize; dim];
    for i in 0..len {
        grid.unflatten(i, axes, &mut idx);
        m[(i, i)] += h.potential()[i];
        for p in 0..particles {
            jdx.copy_from_slice(&idx);
            for s in 0..single {
                grid.unflatten(s, dim, &mut jdx[p * dim..(p + 1) * dim]);
                for a in 0..dim {
                    diff[a] = (idx[p * dim + a] + n - jdx[p * dim + a]) % n;
                }
                let j = grid.flatten(&jdx);
                m[(i, j)] += kernel[grid.flatten(&diff)];
            }
        }
    }
    Ok(m)
}

/// Orthonormal sector basis as (site, coefficient) lists.
fn sector_basis(h: &Hamiltonian, sector: Sector) -> Result<Vec<Vec<(usize, f64)>>, SpectraError> {
    let len = h.len();
    let Some((op, sign)) = sector.operator(h.particles())? else {
        return Ok((0..len).map(|i| vec![(i, 1.0)]).collect());
    };
    let perm = op.permutation(h.grid(), h.particles())?;
    let s = sign.value();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::new();
    for (i, &j) in perm.iter().enumerate() {
        if j == i {
            if s > 0.0 {
                basis.push(vec![(i, 1.0)]);
            }
        } else if j > i {
            basis.push(vec![(i, r), (j, s * r)]);
        }
    }
    Ok(basis)
}

/// Complete spectrum of `h` in a sector by dense diagonalization.
pub fn solve_dense(h: &Hamiltonian, sector: Sector, with_vectors: bool) -> Result<DenseSpectrum, SpectraError> {
    let full = dense_matrix(h)?;
    let basis = sector_basis(h, sector)?;
    let ns = basis.len();
    let full = &full;
    let reduced = DMatrix::from_fn(ns, ns, |a, b| {
        basis[a]
            .iter()
            .flat_map(|&(i, ci)| basis[b].iter().map(move |&(j, cj)| ci * cj * full[(i, j)]))
            .sum()
    });
    // symmetrize away rounding in the kernel sum
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    if !with_vectors {
        let mut values: Vec<f64> = reduced.symmetric_eigenvalues().iter().cloned().collect();
        values.sort_by(f64::total_cmp);
        return Ok(DenseSpectrum { values, vectors: DMatrix::zeros(h.len(), 0) });
    }
    let eig = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..ns).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(h.len(), ns);
    for (col, &i) in order.iter().enumerate() {
        for (a, members) in basis.iter().enumerate() {
            let c = eig.eigenvectors[(a, i)];
            for &(site, w) in members {
                vectors[(site, col)] += c * w;
            }
        }
    }
    Ok(DenseSpectrum { values, vectors })
}
