//! Thick-restart Hermitian Lanczos with full reorthogonalization.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Maximal Krylov basis size per restart cycle.
    pub krylov_dim: usize,
    /// Required residual `‖Hv − λv‖` for unit `v`.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { krylov_dim: 48, tol: 1e-9, max_restarts: 400, seed: 20240611 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("eigensolver did not converge after {restarts} restarts (best residual {best_residual:e})")]
    NoConvergence { restarts: usize, best_residual: f64 },
    #[error("invalid solver request: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone)]
pub struct LanczosResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
    pub matvecs: usize,
}

/// Deterministic dot product `Σ conj(a) b`; the reduction order is fixed by
/// the chunk layout and independent of the thread count.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let partial: Vec<Complex64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p.conj() * q).sum())
        .collect();
    partial.into_iter().sum()
}

fn norm(a: &[Complex64]) -> f64 {
    dot(a, a).re.sqrt()
}

fn axpy(c: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    y.par_chunks_mut(CHUNK).zip(x.par_chunks(CHUNK)).for_each(|(ys, xs)| {
        for (q, p) in ys.iter_mut().zip(xs) {
            *q += c * p;
        }
    });
}

fn scale(c: f64, x: &mut [Complex64]) {
    x.par_chunks_mut(CHUNK).for_each(|xs| xs.iter_mut().for_each(|v| *v *= c));
}

/// Orthogonalizes `w` against `basis` twice; returns the accumulated coefficients.
fn orthogonalize(basis: &[Vec<Complex64>], w: &mut [Complex64]) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); basis.len()];
    for _ in 0..2 {
        for (c, v) in coeffs.iter_mut().zip(basis) {
            let h = dot(v, w);
            axpy(-h, v, w);
            *c += h;
        }
    }
    coeffs
}

/// Lowest `n_eig` eigenpairs of the Hermitian operator `apply` restricted to
/// the range of the orthogonal projector `project`.
pub fn lowest_eigenpairs(
    dim: usize,
    n_eig: usize,
    apply: &(dyn Fn(&[Complex64], &mut [Complex64]) + Sync),
    project: &(dyn Fn(&mut [Complex64]) + Sync),
    opts: &SolverOptions,
) -> Result<LanczosResult, SolverError> {
    lowest_eigenpairs_from(dim, n_eig, apply, project, opts, None)
}

/// As [`lowest_eigenpairs`], starting the Krylov space from `start` when it
/// has a nonzero component in the target sector.
pub fn lowest_eigenpairs_from(
    dim: usize,
    n_eig: usize,
    apply: &(dyn Fn(&[Complex64], &mut [Complex64]) + Sync),
    project: &(dyn Fn(&mut [Complex64]) + Sync),
    opts: &SolverOptions,
    start: Option<&[Complex64]>,
) -> Result<LanczosResult, SolverError> {
    if n_eig == 0 || n_eig >= dim {
        return Err(SolverError::Invalid(format!("cannot extract {n_eig} eigenpairs from dimension {dim}")));
    }
    let m = opts.krylov_dim.max(n_eig + 12).min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut random_vector = |basis: &[Vec<Complex64>]| -> Option<Vec<Complex64>> {
        for _ in 0..4 {
            let mut v: Vec<Complex64> =
                (0..dim).map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0)).collect();
            project(&mut v);
            orthogonalize(basis, &mut v);
            let nv = norm(&v);
            if nv > 1e-8 * (dim as f64).sqrt() {
                scale(1.0 / nv, &mut v);
                return Some(v);
            }
        }
        None
    };

    let initial = match start {
        Some(v) if v.len() != dim => {
            return Err(SolverError::Invalid(format!("start vector has length {}, expected {dim}", v.len())))
        }
        Some(v) => {
            let mut v = v.to_vec();
            project(&mut v);
            let nv = norm(&v);
            if nv > 0.0 && nv.is_finite() {
                scale(1.0 / nv, &mut v);
                Some(v)
            } else {
                None
            }
        }
        None => None,
    };
    let first = match initial {
        Some(v) => v,
        None => random_vector(&[]).ok_or_else(|| SolverError::Invalid("target sector is empty".into()))?,
    };
    let mut basis: Vec<Vec<Complex64>> = vec![first];
    let mut hm = DMatrix::<Complex64>::zeros(m, m);
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut matvecs = 0;
    let mut best_residual = f64::INFINITY;

    for restart in 0..opts.max_restarts {
        let f_norm = loop {
            let j = basis.len() - 1;
            apply(&basis[j], &mut w);
            project(&mut w);
            matvecs += 1;
            let coeffs = orthogonalize(&basis, &mut w);
            for (i, c) in coeffs.iter().enumerate() {
                hm[(i, j)] = *c;
                hm[(j, i)] = c.conj();
            }
            hm[(j, j)] = Complex64::new(coeffs[j].re, 0.0);
            let beta = norm(&w);
            if basis.len() == m {
                break beta;
            }
            if beta <= 1e-12 * hm[(j, j)].norm().max(1.0) {
                // invariant subspace: continue with a fresh orthogonal direction
                match random_vector(&basis) {
                    Some(v) => basis.push(v),
                    None => break 0.0,
                }
                continue;
            }
            let mut v = w.clone();
            scale(1.0 / beta, &mut v);
            hm[(j + 1, j)] = Complex64::new(beta, 0.0);
            hm[(j, j + 1)] = Complex64::new(beta, 0.0);
            basis.push(v);
        };
        let residual_vector = w.clone();
        let size = basis.len();
        let eig = SymmetricEigen::new(hm.view((0, 0), (size, size)).into_owned());
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let estimates: Vec<f64> =
            order.iter().take(n_eig).map(|&i| f_norm * eig.eigenvectors[(size - 1, i)].norm()).collect();
        let worst_estimate = estimates.iter().cloned().fold(0.0, f64::max);

        let ritz = |i: usize| -> Vec<Complex64> {
            let mut y = vec![Complex64::new(0.0, 0.0); dim];
            for (l, v) in basis.iter().enumerate() {
                axpy(eig.eigenvectors[(l, i)], v, &mut y);
            }
            let ny = norm(&y);
            scale(1.0 / ny, &mut y);
            y
        };

        if worst_estimate <= 0.1 * opts.tol || restart + 1 == opts.max_restarts {
            let mut values = Vec::with_capacity(n_eig);
            let mut vectors = Vec::with_capacity(n_eig);
            let mut residuals = Vec::with_capacity(n_eig);
            for &i in order.iter().take(n_eig) {
                let y = ritz(i);
                let lambda = eig.eigenvalues[i];
                apply(&y, &mut w);
                axpy(Complex64::new(-lambda, 0.0), &y, &mut w);
                residuals.push(norm(&w));
                values.push(lambda);
                vectors.push(y);
            }
            let worst = residuals.iter().cloned().fold(0.0, f64::max);
            best_residual = best_residual.min(worst);
            if worst <= opts.tol {
                return Ok(LanczosResult { values, vectors, residuals, matvecs });
            }
            if restart + 1 == opts.max_restarts {
                break;
            }
        } else {
            best_residual = best_residual.min(worst_estimate);
        }

        if f_norm == 0.0 {
            return Err(SolverError::NoConvergence { restarts: restart + 1, best_residual });
        }
        let keep = (n_eig + (size - n_eig) / 2).min(size - 2).max(n_eig);
        let mut kept: Vec<Vec<Complex64>> = order.iter().take(keep).map(|&i| ritz(i)).collect();
        let mut f = residual_vector;
        orthogonalize(&kept, &mut f);
        let nf = norm(&f);
        scale(1.0 / nf, &mut f);
        hm.fill(Complex64::new(0.0, 0.0));
        for (k, &i) in order.iter().take(keep).enumerate() {
            hm[(k, k)] = Complex64::new(eig.eigenvalues[i], 0.0);
        }
        kept.push(f);
        basis = kept;
    }
    Err(SolverError::NoConvergence { restarts: opts.max_restarts, best_residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diagonal_operator(d: Vec<f64>) -> impl Fn(&[Complex64], &mut [Complex64]) + Sync {
        move |x, y| {
            for ((yi, xi), di) in y.iter_mut().zip(x).zip(&d) {
                *yi = xi * di;
            }
        }
    }

    #[test]
    fn finds_lowest_eigenvalues_of_diagonal_operator() {
        let dim = 500;
        let d: Vec<f64> = (0..dim).map(|i| ((i * 37) % dim) as f64 * 0.01 - 1.0).collect();
        let mut sorted = d.clone();
        sorted.sort_by(f64::total_cmp);
        let op = diagonal_operator(d);
        let res = lowest_eigenpairs(dim, 4, &op, &|_| {}, &SolverOptions::default()).unwrap();
        for (got, want) in res.values.iter().zip(&sorted) {
            assert!((got - want).abs() < 1e-10);
        }
        assert!(res.residuals.iter().all(|r| *r <= 1e-9));
    }

    #[test]
    fn laplacian_chain_matches_closed_form() {
        let dim = 400;
        let op = |x: &[Complex64], y: &mut [Complex64]| {
            for i in 0..x.len() {
                let left = if i > 0 { x[i - 1] } else { Complex64::new(0.0, 0.0) };
                let right = if i + 1 < x.len() { x[i + 1] } else { Complex64::new(0.0, 0.0) };
                y[i] = 2.0 * x[i] - left - right;
            }
        };
        let res = lowest_eigenpairs(dim, 3, &op, &|_| {}, &SolverOptions::default()).unwrap();
        for (k, got) in res.values.iter().enumerate() {
            let theta = std::f64::consts::PI * (k + 1) as f64 / (dim + 1) as f64;
            let want = 2.0 - 2.0 * theta.cos();
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
        for a in 0..3 {
            for b in 0..3 {
                let d = dot(&res.vectors[a], &res.vectors[b]);
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((d - expected).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn projection_restricts_to_sector() {
        let dim = 300;
        let d: Vec<f64> = (0..dim).map(|i| i as f64).collect();
        let op = diagonal_operator(d);
        // keep only odd indices
        let project = |x: &mut [Complex64]| {
            for (i, v) in x.iter_mut().enumerate() {
                if i % 2 == 0 {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
        };
        let res = lowest_eigenpairs(dim, 2, &op, &project, &SolverOptions::default()).unwrap();
        assert!((res.values[0] - 1.0).abs() < 1e-10);
        assert!((res.values[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn reports_non_convergence() {
        let dim = 2000;
        let d: Vec<f64> = (0..dim).map(|i| (i as f64).sqrt()).collect();
        let op = diagonal_operator(d);
        let opts = SolverOptions { krylov_dim: 16, tol: 1e-14, max_restarts: 2, seed: 1 };
        match lowest_eigenpairs(dim, 3, &op, &|_| {}, &opts) {
            Err(SolverError::NoConvergence { best_residual, .. }) => assert!(best_residual.is_finite()),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn seeded_runs_are_bit_identical() {
        let dim = 300;
        let d: Vec<f64> = (0..dim).map(|i| ((i * 7) % dim) as f64).collect();
        let op = diagonal_operator(d);
        let a = lowest_eigenpairs(dim, 2, &op, &|_| {}, &SolverOptions::default()).unwrap();
        let b = lowest_eigenpairs(dim, 2, &op, &|_| {}, &SolverOptions::default()).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }
}
