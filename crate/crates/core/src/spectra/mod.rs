//! Atomic eigenpairs per symmetry sector, decay-rate fits and ionization checks.

mod dense;
mod lanczos;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::lattice::{inner, GridSpec, LatticeError, WaveFunction};
use crate::operators::{build_hamiltonian, AtomModel, Hamiltonian, ModelError, OperatorError};
use crate::special::fit_line;
use crate::symmetry::{project_values, Sign, SymmetryError, SymmetryOp};

pub use dense::{dense_matrix, solve_dense, DenseSpectrum, MAX_DENSE_POINTS};
pub use lanczos::{dot, lowest_eigenpairs, lowest_eigenpairs_from, LanczosResult, SolverError, SolverOptions};

#[derive(Debug, thiserror::Error)]
pub enum SpectraError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error("decay fit error: {0}")]
    Fit(String),
    #[error("invalid request: {0}")]
    Invalid(String),
}

impl From<LatticeError> for SpectraError {
    fn from(e: LatticeError) -> Self {
        SpectraError::Operator(e.into())
    }
}

impl From<ModelError> for SpectraError {
    fn from(e: ModelError) -> Self {
        SpectraError::Operator(e.into())
    }
}

/// Symmetry sector targeted by a solve. `Parity` reflects every electron
/// through the nucleus; `Exchange` swaps the two electrons of a two-electron atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Full,
    Parity(Sign),
    Exchange(Sign),
}

impl Sector {
    pub(crate) fn operator(&self, particles: usize) -> Result<Option<(SymmetryOp, Sign)>, SpectraError> {
        match *self {
            Sector::Full => Ok(None),
            Sector::Parity(s) => Ok(Some((SymmetryOp::ParityC1C2, s))),
            Sector::Exchange(s) if particles == 2 => Ok(Some((SymmetryOp::Exchange12, s))),
            Sector::Exchange(_) => Err(SpectraError::Invalid(format!(
                "exchange sectors need two electrons, atom has {particles}"
            ))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Sector::Full => "full".into(),
            Sector::Parity(Sign::Plus) => "parity-even".into(),
            Sector::Parity(Sign::Minus) => "parity-odd".into(),
            Sector::Exchange(Sign::Plus) => "exchange-symmetric".into(),
            Sector::Exchange(Sign::Minus) => "exchange-antisymmetric".into(),
        }
    }
}

/// Lowest eigenpairs of one atom within one sector.
#[derive(Debug, Clone)]
pub struct SpectrumSlice {
    pub atom: AtomModel,
    pub grid: GridSpec,
    pub sector: Sector,
    /// Ascending; exactly degenerate levels appear once per Krylov-visible copy.
    pub eigenvalues: Vec<f64>,
    /// L²-normalized eigenvectors.
    pub eigenvectors: Vec<WaveFunction>,
    /// Distance from the lowest eigenvalue to the next one in the sector.
    pub gap: f64,
    /// `‖(H − λ)v‖ / ‖v‖` per eigenpair.
    pub residuals: Vec<f64>,
    pub seed: u64,
    pub matvecs: usize,
}

/// Lowest `n_states` eigenpairs of an arbitrary lattice Hamiltonian in a sector.
pub fn solve_hamiltonian(
    h: &Hamiltonian,
    sector: Sector,
    n_states: usize,
    opts: &SolverOptions,
) -> Result<(LanczosResult, Vec<WaveFunction>), SpectraError> {
    solve_hamiltonian_from(h, sector, n_states, opts, None)
}

/// As [`solve_hamiltonian`], seeding the Krylov space with `start`.
pub fn solve_hamiltonian_from(
    h: &Hamiltonian,
    sector: Sector,
    n_states: usize,
    opts: &SolverOptions,
    start: Option<&WaveFunction>,
) -> Result<(LanczosResult, Vec<WaveFunction>), SpectraError> {
    let perm = match sector.operator(h.particles())? {
        Some((op, sign)) => Some((op.permutation(h.grid(), h.particles())?, sign)),
        None => None,
    };
    let project = |x: &mut [Complex64]| {
        if let Some((p, s)) = &perm {
            project_values(p, *s, x);
        }
    };
    let apply = |x: &[Complex64], y: &mut [Complex64]| h.apply_values(x, y);
    let result = lowest_eigenpairs_from(h.len(), n_states, &apply, &project, opts, start.map(|s| s.values()))?;
    let scale = 1.0 / h.grid().cell_volume(h.particles()).sqrt();
    let vectors = result
        .vectors
        .iter()
        .map(|v| WaveFunction::new(*h.grid(), h.particles(), v.iter().map(|c| c * scale).collect()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((result, vectors))
}

pub fn solve_sector(
    atom: &AtomModel,
    grid: &GridSpec,
    sector: Sector,
    n_states: usize,
) -> Result<SpectrumSlice, SpectraError> {
    solve_sector_with(atom, grid, sector, n_states, &SolverOptions::default())
}

pub fn solve_sector_with(
    atom: &AtomModel,
    grid: &GridSpec,
    sector: Sector,
    n_states: usize,
    opts: &SolverOptions,
) -> Result<SpectrumSlice, SpectraError> {
    if n_states == 0 {
        return Err(SpectraError::Invalid("n_states must be at least 1".into()));
    }
    let h = build_hamiltonian(atom, grid)?;
    let (result, mut vectors) = solve_hamiltonian(&h, sector, n_states + 1, opts)?;
    let gap = result.values[1] - result.values[0];
    if gap <= 0.0 {
        return Err(SpectraError::Invalid(format!("ground level is degenerate in sector {}", sector.label())));
    }
    vectors.truncate(n_states);
    Ok(SpectrumSlice {
        atom: *atom,
        grid: *grid,
        sector,
        eigenvalues: result.values[..n_states].to_vec(),
        eigenvectors: vectors,
        gap,
        residuals: result.residuals[..n_states].to_vec(),
        seed: opts.seed,
        matvecs: result.matvecs,
    })
}

/// Exponential decay fit of a bound state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub radii: Vec<f64>,
    pub log_amplitudes: Vec<f64>,
    pub rate_b: f64,
    pub fit_residual: f64,
}

/// Fraction of the box half-width where the decay fit window starts and ends.
pub const DECAY_WINDOW: (f64, f64) = (0.2, 0.6);

/// Amplitudes below this fraction of `max|φ|` are rounding noise and skipped.
pub const DECAY_NOISE_FLOOR: f64 = 1e-8;

/// Fits `log max|φ|` over radial shells of width one lattice spacing against
/// the radius, within `DECAY_WINDOW` of the largest inscribed radius `L/2`.
pub fn fit_decay(phi: &WaveFunction) -> Result<DecayFit, SpectraError> {
    if phi.particles() != 1 {
        return Err(SpectraError::Fit("decay fit needs a one-particle state".into()));
    }
    let grid = phi.grid();
    let h = grid.spacing();
    let half = 0.5 * grid.box_length();
    let (lo, hi) = (DECAY_WINDOW.0 * half, DECAY_WINDOW.1 * half);
    let bins = (half / h).ceil() as usize + 2;
    let floor = DECAY_NOISE_FLOOR * phi.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut best: Vec<Option<(f64, f64)>> = vec![None; bins];
    for (flat, v) in phi.values().iter().enumerate() {
        let r = phi.coordinates(flat).iter().map(|c| c * c).sum::<f64>().sqrt();
        if r < lo || r > hi {
            continue;
        }
        let b = (r / h).floor() as usize;
        let a = v.norm();
        match best[b] {
            Some((_, prev)) if prev >= a => {}
            _ => best[b] = Some((r, a)),
        }
    }
    let samples: Vec<(f64, f64)> = best.into_iter().flatten().filter(|&(_, a)| a > floor).collect();
    if samples.len() < 8 {
        return Err(SpectraError::Fit(format!(
            "only {} radial samples in the window [{lo}, {hi}]",
            samples.len()
        )));
    }
    let radii: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let log_amplitudes: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let (_, slope, fit_residual) = fit_line(&radii, &log_amplitudes);
    Ok(DecayFit { radii, log_amplitudes, rate_b: -slope, fit_residual })
}

/// Ground energy of the atom with `electrons` electrons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderStep {
    pub electrons: usize,
    pub energy: f64,
    /// `E_k − E_{k−1}`; absent for the one-electron ion.
    pub delta: Option<f64>,
    pub residual: f64,
}

/// Ground energies for 1..=Z electrons of the atom family.
pub fn ionization_ladder(
    family: &AtomModel,
    grid: &GridSpec,
    opts: &SolverOptions,
) -> Result<Vec<LadderStep>, SpectraError> {
    let z = family.z() as usize;
    if z > 2 {
        return Err(SpectraError::Invalid(format!(
            "ionization ladder supports at most two electrons, Z = {z}"
        )));
    }
    let mut steps: Vec<LadderStep> = Vec::with_capacity(z);
    for k in 1..=z {
        let atom = family.with_electrons(k)?;
        let slice = solve_sector_with(&atom, grid, Sector::Full, 1, opts)?;
        let energy = slice.eigenvalues[0];
        let delta = steps.last().map(|s| energy - s.energy);
        steps.push(LadderStep { electrons: k, energy, delta, residual: slice.residuals[0] });
    }
    Ok(steps)
}

/// Energy of a two-electron trial state built from the ion ground state and
/// a wave packet far from the nucleus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylPoint {
    pub separation: f64,
    pub width: f64,
    pub energy: f64,
}

/// Probes the two-electron ionization threshold: for each separation `s` the
/// ion ground state `φ` (one electron, same nucleus) is combined with a
/// Gaussian packet of width `√s/4` centered at `s`, symmetrized in the two
/// electrons, and the energy of the result is returned with the threshold.
pub fn weyl_probe(
    atom: &AtomModel,
    grid: &GridSpec,
    separations: &[f64],
    opts: &SolverOptions,
) -> Result<(f64, Vec<WeylPoint>), SpectraError> {
    if atom.n_electrons() != 2 || atom.dim() != 1 {
        return Err(SpectraError::Invalid("the threshold probe needs a two-electron 1D atom".into()));
    }
    let ion = atom.with_electrons(1)?;
    let ion_slice = solve_sector_with(&ion, grid, Sector::Parity(Sign::Plus), 1, opts)?;
    let threshold = ion_slice.eigenvalues[0];
    let phi = &ion_slice.eigenvectors[0];
    let h = build_hamiltonian(atom, grid)?;
    let n = grid.points_per_axis();
    let mut points = Vec::with_capacity(separations.len());
    for &s in separations {
        let width = s.sqrt() / 4.0;
        if s + 8.0 * width >= 0.5 * grid.box_length() {
            return Err(SpectraError::Invalid(format!("separation {s} does not fit in the box")));
        }
        let packet: Vec<f64> =
            (0..n).map(|i| (-(grid.coordinate(i) - s).powi(2) / (2.0 * width * width)).exp()).collect();
        let values: Vec<Complex64> = (0..n * n)
            .map(|flat| {
                let (i, j) = (flat / n, flat % n);
                phi.values()[i] * packet[j] + phi.values()[j] * packet[i]
            })
            .collect();
        let trial = WaveFunction::new(*grid, 2, values)?;
        let norm2 = inner(&trial, &trial)?.re;
        let energy = h.expectation(&trial)? / norm2;
        points.push(WeylPoint { separation: s, width, energy });
    }
    Ok((threshold, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::KineticKind;
    use crate::symmetry::apply_symmetry;

    fn hydrogen_1d(kinetic: KineticKind) -> AtomModel {
        AtomModel::new(1, 1.0, 1.0, kinetic, 1, 1).unwrap()
    }

    #[test]
    fn lanczos_matches_dense_in_both_parity_sectors() {
        let grid = GridSpec::new(1, 256, 40.0).unwrap();
        let atom = hydrogen_1d(KineticKind::NonRelativistic);
        let h = build_hamiltonian(&atom, &grid).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            let slice = solve_sector(&atom, &grid, Sector::Parity(sign), 3).unwrap();
            let dense = solve_dense(&h, Sector::Parity(sign), false).unwrap();
            for (a, b) in slice.eigenvalues.iter().zip(&dense.values) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
            assert!(slice.residuals.iter().all(|r| *r <= 1e-8));
            assert!((slice.gap - (dense.values[1] - dense.values[0])).abs() < 1e-9);
            for (i, u) in slice.eigenvectors.iter().enumerate() {
                for (j, v) in slice.eigenvectors.iter().enumerate() {
                    let d = inner(u, v).unwrap();
                    assert!((d.re - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8 && d.im.abs() < 1e-8);
                }
                let flipped = apply_symmetry(SymmetryOp::ParityC1, u).unwrap();
                let diff = flipped.axpy(Complex64::new(-sign.value(), 0.0), u).unwrap();
                assert!(diff.norm() < 1e-6);
            }
        }
    }

    #[test]
    fn sector_ordering_and_full_space_minimum() {
        let grid = GridSpec::new(1, 128, 30.0).unwrap();
        let atom = hydrogen_1d(KineticKind::PseudoRelativistic);
        let full = solve_sector(&atom, &grid, Sector::Full, 1).unwrap();
        let even = solve_sector(&atom, &grid, Sector::Parity(Sign::Plus), 1).unwrap();
        let odd = solve_sector(&atom, &grid, Sector::Parity(Sign::Minus), 1).unwrap();
        assert!(odd.eigenvalues[0] > even.eigenvalues[0]);
        assert!(full.eigenvalues[0] <= even.eigenvalues[0] + 1e-10);
        assert!(full.eigenvalues[0] <= odd.eigenvalues[0]);
        let nonrel = solve_sector(&hydrogen_1d(KineticKind::NonRelativistic), &grid, Sector::Full, 1).unwrap();
        assert!(full.eigenvalues[0] <= nonrel.eigenvalues[0]);
    }

    #[test]
    fn exchange_sector_rejected_for_one_electron() {
        let grid = GridSpec::new(1, 64, 20.0).unwrap();
        let atom = hydrogen_1d(KineticKind::NonRelativistic);
        assert!(solve_sector(&atom, &grid, Sector::Exchange(Sign::Plus), 1).is_err());
    }

    #[test]
    fn decay_fit_of_exact_exponential() {
        for (dim, n) in [(1, 256), (3, 64)] {
            let grid = GridSpec::new(dim, n, 40.0).unwrap();
            let phi = WaveFunction::from_fn(grid, |x| {
                Complex64::new((-0.7 * x.iter().map(|c| c * c).sum::<f64>().sqrt()).exp(), 0.0)
            })
            .unwrap();
            let fit = fit_decay(&phi).unwrap();
            assert!((fit.rate_b - 0.7).abs() < 1e-3, "dim {dim}: {}", fit.rate_b);
            assert!(fit.radii.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn decay_fit_needs_samples() {
        let grid = GridSpec::new(1, 16, 40.0).unwrap();
        let phi = WaveFunction::from_fn(grid, |x| Complex64::new((-x[0].abs()).exp(), 0.0)).unwrap();
        assert!(matches!(fit_decay(&phi), Err(SpectraError::Fit(_))));
    }

    #[test]
    fn ladder_and_threshold_probe() {
        let family = AtomModel::new(2, 1.0, 1.0, KineticKind::NonRelativistic, 2, 1).unwrap();
        let grid = GridSpec::new(1, 64, 24.0).unwrap();
        let steps = ionization_ladder(&family, &grid, &SolverOptions::default()).unwrap();
        assert!(steps[0].energy < 0.0);
        assert!(steps[1].energy < steps[0].energy);
        let probe_grid = GridSpec::new(1, 256, 80.0).unwrap();
        let (threshold, points) = weyl_probe(&family, &probe_grid, &[4.0, 8.0, 16.0], &SolverOptions::default()).unwrap();
        for w in points.windows(2) {
            assert!(w[1].energy < w[0].energy);
        }
        assert!(points.iter().all(|p| p.energy > threshold));
    }
}
