//! Dense Rayleigh–Schrödinger perturbation theory on explicit product matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{ProductBasis, VdwError};
use crate::multipole::Vec3;

/// Second- or third-order energy correction of `H₀ + V` for the ground state.
///
/// Solves `(H₀ − E₀ + P₀)x = QVψ₀` densely; `E₂ = −⟨QVψ₀, x⟩` and
/// `E₃ = ⟨x, Vx⟩ − E₁⟨x, x⟩`.
pub fn rspt_oracle(order: usize, h0: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<f64, VdwError> {
    if !(order == 2 || order == 3) {
        return Err(VdwError::Invalid(format!("perturbation order must be 2 or 3, got {order}")));
    }
    let n = h0.nrows();
    if h0.ncols() != n || v.nrows() != n || v.ncols() != n || n < 2 {
        return Err(VdwError::Invalid("H0 and V must be square matrices of equal size".into()));
    }
    let eig = SymmetricEigen::new(h0.clone());
    let mut order_idx: Vec<usize> = (0..n).collect();
    order_idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (g, next) = (order_idx[0], order_idx[1]);
    let e0 = eig.eigenvalues[g];
    let gap = eig.eigenvalues[next] - e0;
    if gap <= 1e-10 * (1.0 + e0.abs()) {
        return Err(VdwError::Degenerate { atom: 0, gap });
    }
    let psi0: DVector<f64> = eig.eigenvectors.column(g).into_owned();
    let v_psi = v * &psi0;
    let e1 = psi0.dot(&v_psi);
    let b = &v_psi - &psi0 * e1;
    let p0 = &psi0 * psi0.transpose();
    let shifted = h0 - DMatrix::identity(n, n) * e0 + p0;
    let x = shifted
        .lu()
        .solve(&b)
        .ok_or_else(|| VdwError::Invalid("singular shifted Hamiltonian".into()))?;
    Ok(match order {
        2 => -b.dot(&x),
        _ => x.dot(&(v * &x)) - e1 * x.dot(&x),
    })
}

fn embed(basis: &ProductBasis, factors: &[(usize, DMatrix<f64>)]) -> DMatrix<f64> {
    let mut out = DMatrix::from_element(1, 1, 1.0);
    for (k, &n) in basis.dims().iter().enumerate() {
        let m = factors
            .iter()
            .find(|(a, _)| *a == k)
            .map(|(_, m)| m.clone())
            .unwrap_or_else(|| DMatrix::identity(n, n));
        out = out.kronecker(&m);
    }
    out
}

/// `Σ_k E_k` as an explicit diagonal matrix on the product space.
pub fn product_hamiltonian_matrix(basis: &ProductBasis) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(basis.len(), basis.len());
    for (k, atom) in basis.atoms().iter().enumerate() {
        let diag = DMatrix::from_diagonal(&DVector::from_column_slice(atom.energies()));
        h += embed(basis, &[(k, diag)]);
    }
    h
}

/// `−e²[3(x_k·e)(x_l·e) − x_k·x_l]` assembled from the dipole matrices.
pub fn dipole_coupling_matrix(
    basis: &ProductBasis,
    k: usize,
    l: usize,
    direction: &Vec3,
    e2: f64,
) -> Result<DMatrix<f64>, VdwError> {
    let atoms = basis.atoms();
    if k == l || k >= atoms.len() || l >= atoms.len() {
        return Err(VdwError::Invalid(format!("invalid atom pair ({k}, {l})")));
    }
    let mut v = DMatrix::zeros(basis.len(), basis.len());
    for a in 0..3 {
        for b in 0..3 {
            let w = 3.0 * direction[a] * direction[b] - if a == b { 1.0 } else { 0.0 };
            if w == 0.0 {
                continue;
            }
            v -= embed(basis, &[(k, atoms[k].dipole(a)), (l, atoms[l].dipole(b))]) * (e2 * w);
        }
    }
    Ok(v)
}
