//! Kinetic operators, softened Coulomb potentials and atomic Hamiltonians.

mod cutoff;
mod kernel;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::lattice::{FourierPlan, GridSpec, LatticeError, WaveFunction};

pub use cutoff::{
    far_state, localization_error_1, localization_scan, partition_build, partition_check, shell_norm_sq, shell_state,
    split_state,
    CutoffFamily, LocalizationReport, LocalizationRow, PartitionOfUnity,
};
pub use kernel::{
    kernel_check, kinetic_form_kernel, kinetic_form_kernel_truncated, KernelCheck, DEFAULT_KERNEL_CUTOFF,
    KERNEL_CHECK_BOX_PER_WIDTH,
};

/// Critical coupling `Z·e²` of the unsoftened pseudo-relativistic atom.
pub const CRITICAL_COUPLING: f64 = 2.0 / std::f64::consts::PI;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("supercritical coupling: Z·e² = {coupling} exceeds 2/π for an unsoftened pseudo-relativistic atom")]
    Supercritical { coupling: f64 },
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, thiserror::Error)]
pub enum OperatorError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),
    #[error("geometry error: {0}")]
    Geometry(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KineticKind {
    PseudoRelativistic,
    NonRelativistic,
}

impl KineticKind {
    /// Multiplier of the operator in momentum space for `|k|² = k2`.
    pub fn symbol(self, k2: f64) -> f64 {
        match self {
            // √(k²+1) − 1 written without cancellation
            KineticKind::PseudoRelativistic => k2 / ((k2 + 1.0).sqrt() + 1.0),
            KineticKind::NonRelativistic => 0.5 * k2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            KineticKind::PseudoRelativistic => "pseudo-relativistic",
            KineticKind::NonRelativistic => "nonrelativistic",
        }
    }
}

impl std::str::FromStr for KineticKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pseudo-relativistic" | "relativistic" | "rel" => Ok(Self::PseudoRelativistic),
            "nonrelativistic" | "non-relativistic" | "nonrel" => Ok(Self::NonRelativistic),
            other => Err(ModelError::InvalidParameter(format!("unknown kinetic kind {other:?}"))),
        }
    }
}

/// One model atom: nucleus of charge `Z` at the origin with `n_electrons`
/// electrons interacting through softened Coulomb potentials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomModel {
    z: u32,
    e2: f64,
    softening: f64,
    kinetic: KineticKind,
    n_electrons: usize,
    dim: usize,
}

impl AtomModel {
    /// Validates the parameters.
    ///
    /// The subcriticality bound `Z·e² ≤ 2/π` is enforced for unsoftened
    /// pseudo-relativistic atoms only; a positive softening length bounds the
    /// potential and the operator is then bounded below for every coupling.
    pub fn new(
        z: u32,
        e2: f64,
        softening: f64,
        kinetic: KineticKind,
        n_electrons: usize,
        dim: usize,
    ) -> Result<Self, ModelError> {
        let bad = |m: String| Err(ModelError::InvalidParameter(m));
        if z == 0 {
            return bad("Z must be positive".into());
        }
        if !(e2.is_finite() && e2 > 0.0) {
            return bad(format!("e2 must be positive, got {e2}"));
        }
        if !(softening.is_finite() && softening >= 0.0) {
            return bad(format!("softening must be nonnegative, got {softening}"));
        }
        if dim != 1 && dim != 3 {
            return bad(format!("dim must be 1 or 3, got {dim}"));
        }
        if n_electrons == 0 || n_electrons > z as usize {
            return bad(format!("n_electrons must lie in 1..={z}, got {n_electrons}"));
        }
        if dim == 1 && softening == 0.0 {
            return bad("one-dimensional atoms need a positive softening".into());
        }
        let coupling = z as f64 * e2;
        if kinetic == KineticKind::PseudoRelativistic && softening == 0.0 && coupling > CRITICAL_COUPLING {
            return Err(ModelError::Supercritical { coupling });
        }
        Ok(Self { z, e2, softening, kinetic, n_electrons, dim })
    }

    /// Default softening length for a dimension.
    pub fn default_softening(dim: usize) -> f64 {
        if dim == 1 {
            1.0
        } else {
            0.1
        }
    }

    pub fn z(&self) -> u32 {
        self.z
    }

    pub fn e2(&self) -> f64 {
        self.e2
    }

    pub fn softening(&self) -> f64 {
        self.softening
    }

    pub fn kinetic(&self) -> KineticKind {
        self.kinetic
    }

    pub fn n_electrons(&self) -> usize {
        self.n_electrons
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same atom with another electron count.
    pub fn with_electrons(&self, n_electrons: usize) -> Result<Self, ModelError> {
        Self::new(self.z, self.e2, self.softening, self.kinetic, n_electrons, self.dim)
    }
}

/// Point charge fixed in space.
#[derive(Debug, Clone, PartialEq)]
pub struct Nucleus {
    pub position: Vec<f64>,
    pub charge: f64,
}

/// Potential-energy description of a fixed-nuclei system.
#[derive(Debug, Clone, PartialEq)]
pub struct CoulombSystem {
    pub e2: f64,
    pub softening: f64,
    pub nuclei: Vec<Nucleus>,
    pub particles: usize,
    /// Whether electrons repel each other.
    pub interacting: bool,
    /// Constant energy offset (e.g. internuclear repulsion).
    pub offset: f64,
}

impl CoulombSystem {
    /// Softened Coulomb energy `e²/√(r²+a²)` for unit charges at distance² `r2`.
    pub fn pair_energy(&self, r2: f64) -> f64 {
        self.e2 / (r2 + self.softening * self.softening).sqrt()
    }

    /// Potential on the configuration lattice, flattened in lattice order.
    pub fn sample(&self, grid: &GridSpec) -> Result<Vec<f64>, OperatorError> {
        let dim = grid.dim();
        for n in &self.nuclei {
            if n.position.len() != dim {
                return Err(OperatorError::Geometry(format!(
                    "nucleus position has {} components on a {dim}D grid",
                    n.position.len()
                )));
            }
        }
        let len = grid.config_len(self.particles)?;
        let axes = dim * self.particles;
        let mut idx = vec![0usize; axes];
        let mut x = vec![0.0; axes];
        let mut out = Vec::with_capacity(len);
        for flat in 0..len {
            grid.unflatten(flat, axes, &mut idx);
            for (xa, &ia) in x.iter_mut().zip(&idx) {
                *xa = grid.coordinate(ia);
            }
            out.push(self.evaluate(&x));
        }
        Ok(out)
    }

    /// Potential at one configuration (coordinates particle-major).
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let dim = x.len() / self.particles;
        // one-body terms are summed first so that relabeling two electrons
        // leaves the result bit-identical
        let mut attraction = 0.0;
        let mut repulsion = 0.0;
        for i in 0..self.particles {
            let xi = &x[i * dim..(i + 1) * dim];
            let mut a = 0.0;
            for n in &self.nuclei {
                let r2: f64 = xi.iter().zip(&n.position).map(|(a, b)| (a - b) * (a - b)).sum();
                a += n.charge * self.pair_energy(r2);
            }
            attraction += a;
            if self.interacting {
                for j in i + 1..self.particles {
                    let xj = &x[j * dim..(j + 1) * dim];
                    let r2: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
                    repulsion += self.pair_energy(r2);
                }
            }
        }
        repulsion - attraction + self.offset
    }
}

/// Kinetic symbol sampled on the momentum lattice of the configuration space.
pub fn kinetic_symbol(kind: KineticKind, grid: &GridSpec, particles: usize) -> Result<Vec<f64>, LatticeError> {
    let len = grid.config_len(particles)?;
    let dim = grid.dim();
    let axes = dim * particles;
    let k2_axis: Vec<f64> = (0..grid.points_per_axis()).map(|i| grid.wavenumber(i).powi(2)).collect();
    let mut idx = vec![0usize; axes];
    let mut out = Vec::with_capacity(len);
    for flat in 0..len {
        grid.unflatten(flat, axes, &mut idx);
        let t: f64 = idx
            .chunks(dim)
            .map(|p| kind.symbol(p.iter().map(|&i| k2_axis[i]).sum()))
            .sum();
        out.push(t);
    }
    Ok(out)
}

/// Immutable `T + V` on a configuration lattice.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    grid: GridSpec,
    particles: usize,
    kinetic: KineticKind,
    symbol: Vec<f64>,
    potential: Vec<f64>,
    plan: Arc<FourierPlan>,
}

impl Hamiltonian {
    pub fn new(
        grid: GridSpec,
        particles: usize,
        kinetic: KineticKind,
        potential: Vec<f64>,
    ) -> Result<Self, OperatorError> {
        let symbol = kinetic_symbol(kinetic, &grid, particles)?;
        if potential.len() != symbol.len() {
            return Err(LatticeError::Shape(format!(
                "potential has {} values, lattice has {}",
                potential.len(),
                symbol.len()
            ))
            .into());
        }
        let plan = FourierPlan::for_size(grid.points_per_axis());
        Ok(Self { grid, particles, kinetic, symbol, potential, plan })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn kinetic(&self) -> KineticKind {
        self.kinetic
    }

    pub fn len(&self) -> usize {
        self.symbol.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbol.is_empty()
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    /// `out = (T + V) x` on raw lattice values.
    pub fn apply_values(&self, x: &[Complex64], out: &mut [Complex64]) {
        let axes = self.grid.dim() * self.particles;
        out.copy_from_slice(x);
        self.plan.forward(out, axes);
        for (o, s) in out.iter_mut().zip(&self.symbol) {
            *o *= s;
        }
        self.plan.inverse(out, axes);
        for ((o, xi), v) in out.iter_mut().zip(x).zip(&self.potential) {
            *o += xi * v;
        }
    }

    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction, OperatorError> {
        self.check(psi)?;
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        self.apply_values(psi.values(), &mut out);
        Ok(psi.with_values(out))
    }

    /// `⟨ψ, Hψ⟩`.
    pub fn expectation(&self, psi: &WaveFunction) -> Result<f64, OperatorError> {
        self.check(psi)?;
        let kinetic = kinetic_form_fourier(self.kinetic, psi);
        let cell = self.grid.cell_volume(self.particles);
        let potential: f64 = psi
            .values()
            .iter()
            .zip(&self.potential)
            .map(|(v, p)| v.norm_sqr() * p)
            .sum::<f64>()
            * cell;
        Ok(kinetic + potential)
    }

    fn check(&self, psi: &WaveFunction) -> Result<(), OperatorError> {
        if *psi.grid() != self.grid || psi.particles() != self.particles {
            return Err(LatticeError::Shape(format!(
                "state on {:?}x{} but operator on {:?}x{}",
                psi.grid(),
                psi.particles(),
                self.grid,
                self.particles
            ))
            .into());
        }
        Ok(())
    }
}

/// Applies the kinetic operator through its momentum-space symbol.
pub fn apply_kinetic(kind: KineticKind, psi: &WaveFunction) -> WaveFunction {
    let symbol = kinetic_symbol(kind, psi.grid(), psi.particles())
        .expect("lattice size already validated by the wavefunction");
    let plan = FourierPlan::for_size(psi.grid().points_per_axis());
    let mut values = psi.values().to_vec();
    plan.forward(&mut values, psi.axes());
    for (v, s) in values.iter_mut().zip(&symbol) {
        *v *= s;
    }
    plan.inverse(&mut values, psi.axes());
    psi.with_values(values)
}

/// `⟨ψ, Tψ⟩` evaluated as a weighted sum of momentum-space intensities.
pub fn kinetic_form_fourier(kind: KineticKind, psi: &WaveFunction) -> f64 {
    let symbol = kinetic_symbol(kind, psi.grid(), psi.particles())
        .expect("lattice size already validated by the wavefunction");
    let mom = crate::lattice::to_momentum(psi);
    let cell = psi.grid().cell_volume(psi.particles());
    mom.values().iter().zip(&symbol).map(|(v, s)| v.norm_sqr() * s).sum::<f64>() * cell
}

/// Hamiltonian of an atom with its nucleus at the origin.
pub fn build_hamiltonian(atom: &AtomModel, grid: &GridSpec) -> Result<Hamiltonian, OperatorError> {
    if grid.dim() != atom.dim() {
        return Err(OperatorError::UnsupportedDimension(format!(
            "{}D atom on a {}D grid",
            atom.dim(),
            grid.dim()
        )));
    }
    if atom.softening() == 0.0 {
        return Err(ModelError::InvalidParameter(
            "lattice Hamiltonians need a positive softening length".into(),
        )
        .into());
    }
    grid.config_len(atom.n_electrons())?;
    let system = CoulombSystem {
        e2: atom.e2(),
        softening: atom.softening(),
        nuclei: vec![Nucleus { position: vec![0.0; grid.dim()], charge: atom.z() as f64 }],
        particles: atom.n_electrons(),
        interacting: true,
        offset: 0.0,
    };
    let potential = system.sample(grid)?;
    Hamiltonian::new(*grid, atom.n_electrons(), atom.kinetic(), potential)
}
