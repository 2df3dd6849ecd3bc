//! Truncated one-electron atomic spectra with coordinate-moment matrices.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::VdwError;
use crate::lattice::GridSpec;
use crate::operators::{build_hamiltonian, AtomModel};
use crate::spectra::{solve_dense, Sector};

/// Exponents `(a, b, c)` of the monomial `xᵃ yᵇ zᶜ`.
pub type Powers = [u8; 3];

/// Highest monomial degree stored by the built-in constructors.
pub const DEFAULT_MAX_DEGREE: usize = 5;

/// Eigenbasis of a one-electron atom: ascending energies and the matrices of
/// coordinate monomials between the kept states. Missing monomials vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomBasis {
    label: String,
    energies: Vec<f64>,
    moments: BTreeMap<Powers, DMatrix<f64>>,
}

/// Descriptor of the built-in atom models, recorded in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ToyAtom {
    /// Two states with a z-dipole transition and no other moments.
    TwoLevel { gap: f64, dipole: f64 },
    /// Isotropic oscillator `ω(N + 3/2)` split by `λ·l(l+1)`.
    Spherical { omega: f64, lambda: f64 },
}

impl AtomBasis {
    /// Assembles a basis from energies and moments; the identity moment is added.
    pub fn new(
        label: impl Into<String>,
        energies: Vec<f64>,
        mut moments: BTreeMap<Powers, DMatrix<f64>>,
    ) -> Result<Self, VdwError> {
        let n = energies.len();
        if n == 0 {
            return Err(VdwError::Invalid("atom basis needs at least one state".into()));
        }
        if energies.iter().any(|e| !e.is_finite()) || energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(VdwError::Invalid("energies must be finite and ascending".into()));
        }
        for (p, m) in &moments {
            if m.nrows() != n || m.ncols() != n {
                return Err(VdwError::Invalid(format!("moment {p:?} has shape {}x{}", m.nrows(), m.ncols())));
            }
            let scale = m.amax().max(1.0);
            if (m - m.transpose()).amax() > 1e-10 * scale {
                return Err(VdwError::Invalid(format!("moment {p:?} is not symmetric")));
            }
        }
        moments.insert([0, 0, 0], DMatrix::identity(n, n));
        Ok(Self { label: label.into(), energies, moments })
    }

    pub fn two_level(gap: f64, dipole: f64) -> Result<Self, VdwError> {
        if !(gap.is_finite() && gap > 0.0 && dipole.is_finite()) {
            return Err(VdwError::Invalid(format!("two-level atom needs gap > 0, got {gap}")));
        }
        let mut moments = BTreeMap::new();
        moments.insert([0, 0, 1], DMatrix::from_row_slice(2, 2, &[0.0, dipole, dipole, 0.0]));
        Self::new("two-level", vec![0.0, gap], moments)
    }

    /// Lowest `n_keep` states of `ω(N + 3/2) + λ·L²` on the oscillator basis.
    ///
    /// Each oscillator shell is diagonalized separately, so every kept state
    /// has definite parity and the moments obey parity selection rules exactly.
    pub fn spherical(omega: f64, lambda: f64, n_keep: usize) -> Result<Self, VdwError> {
        if !(omega.is_finite() && omega > 0.0 && lambda.is_finite() && lambda >= 0.0) || n_keep == 0 {
            return Err(VdwError::Invalid(format!(
                "spherical toy needs ω > 0, λ ≥ 0, n_keep ≥ 1; got ω={omega}, λ={lambda}, n_keep={n_keep}"
            )));
        }
        let mut shells = 0;
        while (shells + 1) * (shells + 2) * (shells + 3) / 6 < n_keep {
            shells += 1;
        }
        let n_max = shells + 2;
        let states: Vec<[usize; 3]> = (0..=n_max)
            .flat_map(|n| {
                (0..=n).flat_map(move |a| (0..=n - a).map(move |b| [a, b, n - a - b]))
            })
            .collect();
        let index: BTreeMap<[usize; 3], usize> = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let dim = states.len();

        // L² = −Σ B_k² with B_x = a_y†a_z − a_z†a_y and cyclic permutations.
        let hop = |i: usize, j: usize| {
            let mut m = DMatrix::<f64>::zeros(dim, dim);
            for (col, s) in states.iter().enumerate() {
                if s[j] == 0 {
                    continue;
                }
                let mut t = *s;
                let mut amp = (t[j] as f64).sqrt();
                t[j] -= 1;
                t[i] += 1;
                amp *= (t[i] as f64).sqrt();
                m[(index[&t], col)] += amp;
            }
            m
        };
        let mut l2 = DMatrix::<f64>::zeros(dim, dim);
        for (i, j) in [(1, 2), (2, 0), (0, 1)] {
            let b = hop(i, j) - hop(j, i);
            l2 -= &b * &b;
        }

        let mut kept: Vec<(f64, usize, usize, Vec<f64>)> = Vec::new();
        for n in 0..=n_max {
            let members: Vec<usize> = (0..dim).filter(|&i| states[i].iter().sum::<usize>() == n).collect();
            let block = DMatrix::from_fn(members.len(), members.len(), |a, b| l2[(members[a], members[b])]);
            let eig = SymmetricEigen::new(block);
            for k in 0..members.len() {
                let ll = eig.eigenvalues[k].round();
                let energy = omega * (n as f64 + 1.5) + lambda * ll;
                let mut v = vec![0.0; dim];
                for (a, &site) in members.iter().enumerate() {
                    v[site] = eig.eigenvectors[(a, k)];
                }
                kept.push((energy, n, ll as usize, v));
            }
        }
        kept.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        kept.truncate(n_keep);
        let c = DMatrix::from_fn(dim, n_keep, |i, k| kept[k].3[i]);

        // 1D oscillator position powers, exact on the states up to n_max.
        let size = n_max + 1 + DEFAULT_MAX_DEGREE;
        let x = DMatrix::from_fn(size, size, |i, j| {
            if i + 1 == j {
                (j as f64 / (2.0 * omega)).sqrt()
            } else if j + 1 == i {
                (i as f64 / (2.0 * omega)).sqrt()
            } else {
                0.0
            }
        });
        let mut powers_1d = vec![DMatrix::<f64>::identity(size, size)];
        for k in 1..=DEFAULT_MAX_DEGREE {
            let next = &powers_1d[k - 1] * &x;
            powers_1d.push(next);
        }
        let mut moments = BTreeMap::new();
        for p in monomials(DEFAULT_MAX_DEGREE) {
            if p == [0, 0, 0] {
                continue;
            }
            let cart = DMatrix::from_fn(dim, dim, |i, j| {
                let (s, t) = (states[i], states[j]);
                (0..3).map(|a| powers_1d[p[a] as usize][(s[a], t[a])]).product()
            });
            let m = c.transpose() * cart * &c;
            moments.insert(p, (&m + m.transpose()) * 0.5);
        }
        let energies = kept.iter().map(|k| k.0).collect();
        Self::new(format!("spherical(omega={omega},lambda={lambda})"), energies, moments)
    }

    /// Spectrum of a one-electron 1D lattice atom from dense diagonalization;
    /// the atom is oriented along z. `n_keep = None` keeps every lattice state.
    pub fn lattice_1d(atom: &AtomModel, grid: &GridSpec, n_keep: Option<usize>) -> Result<Self, VdwError> {
        if atom.dim() != 1 || atom.n_electrons() != 1 {
            return Err(VdwError::Invalid("lattice atom basis needs a one-electron 1D model".into()));
        }
        let h = build_hamiltonian(atom, grid)?;
        let spectrum = solve_dense(&h, Sector::Full, true)?;
        let n = n_keep.unwrap_or(spectrum.values.len()).min(spectrum.values.len());
        let vectors = spectrum.vectors.columns(0, n).into_owned();
        let u: Vec<f64> = (0..grid.len()).map(|i| grid.coordinate(i)).collect();
        let mut moments = BTreeMap::new();
        let mut weighted = vectors.clone();
        for k in 1..=DEFAULT_MAX_DEGREE as u8 {
            for (i, ui) in u.iter().enumerate() {
                weighted.row_mut(i).scale_mut(*ui);
            }
            let m = vectors.transpose() * &weighted;
            moments.insert([0, 0, k], (&m + m.transpose()) * 0.5);
        }
        Self::new(
            format!("lattice-1d(z={},e2={},a={})", atom.z(), atom.e2(), atom.softening()),
            spectrum.values[..n].to_vec(),
            moments,
        )
    }

    pub fn from_toy(toy: &ToyAtom, n_keep: usize) -> Result<Self, VdwError> {
        match *toy {
            ToyAtom::TwoLevel { gap, dipole } => Self::two_level(gap, dipole),
            ToyAtom::Spherical { omega, lambda } => Self::spherical(omega, lambda, n_keep),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn moment(&self, powers: Powers) -> Option<&DMatrix<f64>> {
        self.moments.get(&powers)
    }

    /// Matrix of the position component `axis` between kept states.
    pub fn dipole(&self, axis: usize) -> DMatrix<f64> {
        let mut p = [0u8; 3];
        p[axis] = 1;
        self.moments.get(&p).cloned().unwrap_or_else(|| DMatrix::zeros(self.len(), self.len()))
    }

    /// Lowest `n_keep` states; nested in the original basis.
    pub fn truncated(&self, n_keep: usize) -> Result<Self, VdwError> {
        if n_keep == 0 || n_keep > self.len() {
            return Err(VdwError::Invalid(format!("cannot keep {n_keep} of {} states", self.len())));
        }
        Ok(Self {
            label: self.label.clone(),
            energies: self.energies[..n_keep].to_vec(),
            moments: self
                .moments
                .iter()
                .map(|(p, m)| (*p, m.view((0, 0), (n_keep, n_keep)).into_owned()))
                .collect(),
        })
    }

    /// Drops every moment of the given total degree.
    pub fn without_degree(&self, degree: usize) -> Self {
        let mut out = self.clone();
        out.moments.retain(|p, _| p.iter().map(|&a| a as usize).sum::<usize>() != degree);
        out
    }
}

/// All exponent triples with total degree at most `max_degree`.
pub fn monomials(max_degree: usize) -> Vec<Powers> {
    let mut out = Vec::new();
    for d in 0..=max_degree {
        for a in 0..=d {
            for b in 0..=d - a {
                out.push([a as u8, b as u8, (d - a - b) as u8]);
            }
        }
    }
    out
}
