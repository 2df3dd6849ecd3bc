//! Direct two-atom, two-electron solves of the 1D model and power-law fits of
//! the interaction energy.
//!
//! Nuclei sit at `∓D/2` on the lattice, `D` rounded to a multiple of two
//! lattice spacings so that both atoms are lattice translates of the free
//! atom. `μ∞` is twice the free-atom energy on the same lattice.
//!
//! Besides the dispersion attraction the 1D model has a static first-order
//! interaction `⟨φ⊗φ, I φ⊗φ⟩` between the undistorted atomic charge clouds:
//! in one dimension every atom carries a quadrupole moment `⟨u²⟩`, giving a
//! repulsive `+6e²⟨u²⟩²/D⁵` leading term. The scan reports this static
//! energy separately and fits both the raw gap `μ∞ − E` and the dispersion
//! gap `μ∞ − E + E_static`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lattice::{GridSpec, WaveFunction};
use crate::operators::{build_hamiltonian, AtomModel, CoulombSystem, Hamiltonian, KineticKind, Nucleus};
use crate::special::{fit_line, pairwise_sum};
use crate::spectra::{solve_dense, solve_hamiltonian_from, Sector, SolverOptions, SpectraError};
use crate::symmetry::Sign;

#[derive(Debug, thiserror::Error)]
pub enum DimerError {
    #[error("invalid dimer configuration: {0}")]
    Invalid(String),
    #[error("insufficient dynamic range; usable separations: {usable:?}")]
    Range { usable: Vec<f64> },
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

impl From<crate::operators::OperatorError> for DimerError {
    fn from(e: crate::operators::OperatorError) -> Self {
        DimerError::Spectra(e.into())
    }
}

impl From<crate::lattice::LatticeError> for DimerError {
    fn from(e: crate::lattice::LatticeError) -> Self {
        DimerError::Spectra(e.into())
    }
}

/// Decay lengths of box padding beyond the largest separation.
pub const BOX_PADDING_DECAY_LENGTHS: f64 = 40.0;

/// Smallest separation in units of the atomic decay length.
pub const MIN_SEPARATION_DECAY_LENGTHS: f64 = 10.0;

/// Smallest gap `|μ∞ − E|` usable in a log-log fit.
pub const MIN_FIT_GAP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimerConfig {
    /// Neutral one-electron 1D atom.
    pub atom: AtomModel,
    /// Ascending internuclear distances.
    pub separations: Vec<f64>,
    pub exchange: Sign,
    pub points_per_axis: usize,
    /// Box length; `None` chooses `max D + 40` decay lengths.
    pub box_length: Option<f64>,
    pub solver: SolverOptions,
}

impl DimerConfig {
    pub fn new(atom: AtomModel, separations: Vec<f64>, exchange: Sign) -> Result<Self, DimerError> {
        let config = Self {
            atom,
            separations,
            exchange,
            points_per_axis: 512,
            box_length: None,
            solver: SolverOptions { krylov_dim: 24, ..SolverOptions::default() },
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), DimerError> {
        let a = &self.atom;
        if a.dim() != 1 || a.n_electrons() != 1 || a.z() != 1 {
            return Err(DimerError::Invalid("dimer atoms must be neutral one-electron 1D atoms".into()));
        }
        if self.separations.is_empty() || self.separations.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(DimerError::Invalid("separations must be positive".into()));
        }
        if self.separations.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DimerError::Invalid("separations must be strictly ascending".into()));
        }
        Ok(())
    }
}

/// `κ` with `E = −κ²/2` (nonrelativistic) or `E = √(1 − κ²) − 1`.
pub fn decay_constant(kinetic: KineticKind, energy: f64) -> f64 {
    match kinetic {
        KineticKind::NonRelativistic => (-2.0 * energy).max(0.0).sqrt(),
        KineticKind::PseudoRelativistic => (1.0 - (1.0 + energy).powi(2)).max(0.0).sqrt(),
    }
}

/// Free-atom data shared by every separation of a scan.
#[derive(Debug, Clone)]
pub struct DimerSetup {
    config: DimerConfig,
    grid: GridSpec,
    atom_energy: f64,
    /// Euclidean-normalized free-atom ground state on the 1D lattice.
    orbital: Vec<f64>,
    decay_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimerPoint {
    /// Separation actually used (rounded to the lattice).
    pub separation: f64,
    pub energy: f64,
    pub static_energy: f64,
    pub residual: f64,
    pub matvecs: usize,
}

impl DimerSetup {
    pub fn prepare(config: &DimerConfig) -> Result<Self, DimerError> {
        config.validate()?;
        let d_max = *config.separations.last().unwrap_or(&0.0);
        let box_length = match config.box_length {
            Some(l) => l,
            None => {
                let probe = GridSpec::new(1, 256, 40.0)?;
                let e = solve_dense(&build_hamiltonian(&config.atom, &probe)?, Sector::Full, false)?.values[0];
                let kappa = decay_constant(config.atom.kinetic(), e);
                if kappa <= 0.0 {
                    return Err(DimerError::Invalid("atom has no bound ground state".into()));
                }
                d_max + BOX_PADDING_DECAY_LENGTHS / kappa
            }
        };
        let grid = GridSpec::new(1, config.points_per_axis, box_length)?;
        let spectrum = solve_dense(&build_hamiltonian(&config.atom, &grid)?, Sector::Full, true)?;
        let atom_energy = spectrum.values[0];
        let mut orbital: Vec<f64> = spectrum.vectors.column(0).iter().cloned().collect();
        if orbital.iter().sum::<f64>() < 0.0 {
            orbital.iter_mut().for_each(|v| *v = -*v);
        }
        let kappa = decay_constant(config.atom.kinetic(), atom_energy);
        if kappa <= 0.0 {
            return Err(DimerError::Invalid("atom has no bound ground state".into()));
        }
        let decay_length = 1.0 / kappa;
        let d_min = config.separations[0];
        if d_min < MIN_SEPARATION_DECAY_LENGTHS * decay_length {
            return Err(DimerError::Invalid(format!(
                "smallest separation {d_min} is below {MIN_SEPARATION_DECAY_LENGTHS} decay lengths ({decay_length})"
            )));
        }
        if d_max + 2.0 * grid.spacing() >= box_length {
            return Err(DimerError::Invalid(format!("separation {d_max} does not fit in the box {box_length}")));
        }
        Ok(Self { config: config.clone(), grid, atom_energy, orbital, decay_length })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Twice the free-atom ground energy on the same lattice.
    pub fn mu_infinity(&self) -> f64 {
        2.0 * self.atom_energy
    }

    pub fn decay_length(&self) -> f64 {
        self.decay_length
    }

    /// Half-separation in lattice steps.
    fn half_steps(&self, d: f64) -> usize {
        (d / (2.0 * self.grid.spacing())).round().max(1.0) as usize
    }

    pub fn snap(&self, d: f64) -> f64 {
        2.0 * self.half_steps(d) as f64 * self.grid.spacing()
    }

    fn system(&self, d: f64) -> CoulombSystem {
        let a = &self.config.atom;
        let z = a.z() as f64;
        let sys = CoulombSystem {
            e2: a.e2(),
            softening: a.softening(),
            nuclei: vec![
                Nucleus { position: vec![-0.5 * d], charge: z },
                Nucleus { position: vec![0.5 * d], charge: z },
            ],
            particles: 2,
            interacting: true,
            offset: 0.0,
        };
        let offset = z * z * sys.pair_energy(d * d);
        CoulombSystem { offset, ..sys }
    }

    /// Two-electron Hamiltonian at the lattice-rounded separation.
    pub fn hamiltonian(&self, d: f64) -> Result<Hamiltonian, DimerError> {
        let d = self.snap(d);
        let potential = self.system(d).sample(&self.grid)?;
        Ok(Hamiltonian::new(self.grid, 2, self.config.atom.kinetic(), potential)?)
    }

    /// Orbitals centered on the left and right nucleus.
    fn shifted_orbitals(&self, d: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.points_per_axis();
        let s = self.half_steps(d) % n;
        let left = (0..n).map(|i| self.orbital[(i + s) % n]).collect();
        let right = (0..n).map(|i| self.orbital[(i + n - s) % n]).collect();
        (left, right)
    }

    /// `⟨φ_L⊗φ_R, I φ_L⊗φ_R⟩` with `I` the interatomic part of the potential.
    pub fn static_energy(&self, d: f64) -> f64 {
        let d = self.snap(d);
        let sys = self.system(d);
        let z = self.config.atom.z() as f64;
        let n = self.grid.points_per_axis();
        let (left, right) = self.shifted_orbitals(d);
        let x: Vec<f64> = (0..n).map(|i| self.grid.coordinate(i)).collect();
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let rho1 = left[i] * left[i];
                if rho1 == 0.0 {
                    return 0.0;
                }
                let a1 = z * sys.pair_energy((x[i] - 0.5 * d).powi(2));
                let terms: Vec<f64> = (0..n)
                    .map(|j| {
                        let a2 = z * sys.pair_energy((x[j] + 0.5 * d).powi(2));
                        let ee = sys.pair_energy((x[i] - x[j]).powi(2));
                        right[j] * right[j] * ((sys.offset - a1) + (ee - a2))
                    })
                    .collect();
                rho1 * pairwise_sum(&terms)
            })
            .collect();
        pairwise_sum(&rows)
    }

    /// Ground energy of the dimer in the configured exchange sector.
    pub fn solve(&self, d: f64) -> Result<DimerPoint, DimerError> {
        let separation = self.snap(d);
        let h = self.hamiltonian(separation)?;
        let (left, right) = self.shifted_orbitals(separation);
        let n = self.grid.points_per_axis();
        let sign = self.config.exchange.value();
        let start: Vec<Complex64> = (0..n * n)
            .map(|flat| {
                let (i, j) = (flat / n, flat % n);
                Complex64::new(left[i] * right[j] + sign * right[i] * left[j], 0.0)
            })
            .collect();
        let start = WaveFunction::new(self.grid, 2, start)?;
        let sector = Sector::Exchange(self.config.exchange);
        let (result, _) = solve_hamiltonian_from(&h, sector, 1, &self.config.solver, Some(&start))?;
        Ok(DimerPoint {
            separation,
            energy: result.values[0],
            static_energy: self.static_energy(separation),
            residual: result.residuals[0],
            matvecs: result.matvecs,
        })
    }
}

/// Ground energy of the dimer at one separation.
pub fn dimer_solve(config: &DimerConfig, d: f64) -> Result<DimerPoint, DimerError> {
    DimerSetup::prepare(config)?.solve(d)
}

/// Power-law analysis of a positive gap `g(D)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    /// Coefficients of `g = C6/D⁶ + C8/D⁸` by relative least squares.
    pub c6: f64,
    pub c8: f64,
    /// Log-log slopes between neighboring separations.
    pub local_slopes: Vec<f64>,
    /// Log-log slope over the whole range.
    pub slope: f64,
    /// Local slopes of `g − C6/D⁶`.
    pub residual_slopes: Vec<f64>,
    pub residual_slope: f64,
}

fn log_slopes(d: &[f64], g: &[f64]) -> Vec<f64> {
    d.windows(2)
        .zip(g.windows(2))
        .map(|(dw, gw)| (gw[1].ln() - gw[0].ln()) / (dw[1].ln() - dw[0].ln()))
        .collect()
}

/// Fits `g(D) = C6/D⁶ + C8/D⁸` and the log-log slopes of `g` and of `g − C6/D⁶`.
pub fn fit_power_law(d: &[f64], g: &[f64]) -> Result<PowerFit, DimerError> {
    if d.len() != g.len() || d.len() < 3 {
        return Err(DimerError::Invalid("need at least three (D, gap) samples".into()));
    }
    if g.iter().any(|v| !(*v >= MIN_FIT_GAP)) {
        let usable = d.iter().zip(g).filter(|(_, v)| **v >= MIN_FIT_GAP).map(|(x, _)| *x).collect();
        return Err(DimerError::Range { usable });
    }
    let a = DMatrix::from_fn(d.len(), 2, |i, k| d[i].powi(-(6 + 2 * k as i32)) / g[i]);
    let b = DVector::from_element(d.len(), 1.0);
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| DimerError::Invalid(format!("power-law fit failed: {e}")))?;
    let (c6, c8) = (coef[0], coef[1]);
    let logd: Vec<f64> = d.iter().map(|x| x.ln()).collect();
    let logg: Vec<f64> = g.iter().map(|x| x.ln()).collect();
    let (_, slope, _) = fit_line(&logd, &logg);
    let residual: Vec<f64> = d.iter().zip(g).map(|(x, v)| (v - c6 / x.powi(6)).abs()).collect();
    let residual_slopes = log_slopes(d, &residual);
    let logr: Vec<f64> = residual.iter().map(|x| x.ln()).collect();
    let (_, residual_slope, _) = fit_line(&logd, &logr);
    Ok(PowerFit { c6, c8, local_slopes: log_slopes(d, g), slope, residual_slopes, residual_slope })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimerScan {
    pub points: Vec<DimerPoint>,
    pub mu_infinity: f64,
    pub box_length: f64,
    pub points_per_axis: usize,
    pub decay_length: f64,
    /// Fit of `μ∞ − E`, or the reason it is impossible.
    pub raw_fit: Result<PowerFit, String>,
    /// Fit of the dispersion gap `μ∞ − E + E_static`.
    pub dispersion_fit: Result<PowerFit, String>,
}

impl DimerScan {
    pub fn separations(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.separation).collect()
    }

    pub fn raw_gaps(&self) -> Vec<f64> {
        self.points.iter().map(|p| self.mu_infinity - p.energy).collect()
    }

    pub fn dispersion_gaps(&self) -> Vec<f64> {
        self.points.iter().map(|p| self.mu_infinity - p.energy + p.static_energy).collect()
    }
}

/// Solves every separation of the configuration and fits the gaps.
pub fn scan_and_fit(config: &DimerConfig) -> Result<DimerScan, DimerError> {
    if config.separations.len() < 8 {
        return Err(DimerError::Invalid(format!(
            "a scan needs at least 8 separations, got {}",
            config.separations.len()
        )));
    }
    let setup = DimerSetup::prepare(config)?;
    let snapped: Vec<f64> = config.separations.iter().map(|&d| setup.snap(d)).collect();
    if snapped.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DimerError::Invalid("separations collide after rounding to the lattice".into()));
    }
    let points = snapped.par_iter().map(|&d| setup.solve(d)).collect::<Result<Vec<_>, _>>()?;
    let mut scan = DimerScan {
        points,
        mu_infinity: setup.mu_infinity(),
        box_length: setup.grid().box_length(),
        points_per_axis: setup.grid().points_per_axis(),
        decay_length: setup.decay_length(),
        raw_fit: Err(String::new()),
        dispersion_fit: Err(String::new()),
    };
    let d = scan.separations();
    scan.raw_fit = fit_power_law(&d, &scan.raw_gaps()).map_err(|e| e.to_string());
    scan.dispersion_fit = fit_power_law(&d, &scan.dispersion_gaps()).map_err(|e| e.to_string());
    Ok(scan)
}

/// `n` log-spaced separations in `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}
