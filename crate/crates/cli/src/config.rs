//! Run configuration: a flat JSON file, command-line overrides and
//! per-command defaults resolved into one concrete [`RunConfig`].

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use vdwlab::lattice::GridSpec;
use vdwlab::operators::{AtomModel, KineticKind};
use vdwlab::spectra::{Sector, SolverOptions};
use vdwlab::symmetry::Sign;

use crate::CliError;

pub const DEFAULT_SEED: u64 = 20240611;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    AtomSolve,
    VdwC6,
    VdwC8,
    VdwC9,
    DimerScan,
    VerifyKernel,
    VerifyLocalization,
    VerifyMultipole,
    VerifyOrthogonality,
    VerifyDecay,
    VerifyIonization,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::AtomSolve => "atom-solve",
            Command::VdwC6 => "vdw-c6",
            Command::VdwC8 => "vdw-c8",
            Command::VdwC9 => "vdw-c9",
            Command::DimerScan => "dimer-scan",
            Command::VerifyKernel => "verify-kernel",
            Command::VerifyLocalization => "verify-localization",
            Command::VerifyMultipole => "verify-multipole",
            Command::VerifyOrthogonality => "verify-orthogonality",
            Command::VerifyDecay => "verify-decay",
            Command::VerifyIonization => "verify-ionization",
        }
    }

    /// Verification commands turn failed checks into a nonzero exit status.
    pub fn is_verification(self) -> bool {
        self.name().starts_with("verify-")
    }
}

/// Atom family used by the dispersion commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// One-electron lattice atom with the softened Coulomb potential.
    SoftCore,
    /// Two levels coupled by a z dipole.
    TwoLevel,
    /// Isotropic oscillator shells split by an `L²` term.
    Spherical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SectorName {
    Full,
    ParityEven,
    ParityOdd,
    ExchangeSymmetric,
    ExchangeAntisymmetric,
}

impl SectorName {
    pub fn sector(self) -> Sector {
        match self {
            SectorName::Full => Sector::Full,
            SectorName::ParityEven => Sector::Parity(Sign::Plus),
            SectorName::ParityOdd => Sector::Parity(Sign::Minus),
            SectorName::ExchangeSymmetric => Sector::Exchange(Sign::Plus),
            SectorName::ExchangeAntisymmetric => Sector::Exchange(Sign::Minus),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum KineticName {
    PseudoRelativistic,
    NonRelativistic,
}

impl From<KineticName> for KineticKind {
    fn from(k: KineticName) -> Self {
        match k {
            KineticName::PseudoRelativistic => KineticKind::PseudoRelativistic,
            KineticName::NonRelativistic => KineticKind::NonRelativistic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExchangeName {
    Symmetric,
    Antisymmetric,
}

impl ExchangeName {
    pub fn sign(self) -> Sign {
        match self {
            ExchangeName::Symmetric => Sign::Plus,
            ExchangeName::Antisymmetric => Sign::Minus,
        }
    }
}

/// Partially specified configuration, as read from a file or the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[arg(skip)]
    pub command: Option<Command>,
    /// Base name of the output files.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub rng_seed: Option<u64>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Nuclear charge.
    #[arg(long)]
    pub z: Option<u32>,
    #[arg(long)]
    pub e2: Option<f64>,
    /// Softening length `a` of the Coulomb potentials.
    #[arg(long)]
    pub softening: Option<f64>,
    #[arg(long, value_enum)]
    pub kinetic: Option<KineticName>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub electrons: Option<usize>,
    /// Excitation energy of the two-level atom.
    #[arg(long)]
    pub gap: Option<f64>,
    /// Transition dipole of the two-level atom.
    #[arg(long)]
    pub dipole: Option<f64>,
    /// Oscillator frequency of the spherical atom.
    #[arg(long)]
    pub omega: Option<f64>,
    /// `L²` splitting of the spherical atom.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Atomic states kept per atom; 0 keeps all.
    #[arg(long)]
    pub n_keep: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub truncation: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub direction: Option<Vec<f64>>,
    /// Pair coupling factors of the triangle sides (0,1), (1,2), (2,0).
    #[arg(long, value_delimiter = ',')]
    pub couplings: Option<Vec<f64>>,
    #[arg(long = "points")]
    pub points_per_axis: Option<usize>,
    #[arg(long)]
    pub box_length: Option<f64>,
    #[arg(long)]
    pub n_states: Option<usize>,
    #[arg(long, value_enum)]
    pub sector: Option<SectorName>,
    #[arg(long)]
    pub krylov_dim: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_restarts: Option<usize>,
    #[arg(long)]
    pub d_min: Option<f64>,
    #[arg(long)]
    pub d_max: Option<f64>,
    #[arg(long)]
    pub n_points: Option<usize>,
    #[arg(long, value_enum)]
    pub exchange: Option<ExchangeName>,
    /// Remainder orders `k` of the multipole check.
    #[arg(long, value_delimiter = ',')]
    pub orders: Option<Vec<usize>>,
    #[arg(long)]
    pub n_configs: Option<usize>,
    #[arg(long)]
    pub remainder_configs: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub rhos: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub widths: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub probe_separations: Option<Vec<f64>>,
    /// Write eigenvectors as lattice dumps.
    #[arg(long)]
    pub dump: Option<bool>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),* $(,)?) => {
        RawConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RawConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config file: {e}")))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fields set in `top` win over those in `self`.
    pub fn overlaid(self, top: RawConfig) -> RawConfig {
        overlay!(
            self, top, command, name, output_dir, rng_seed, model, z, e2, softening, kinetic, dim, electrons, gap,
            dipole, omega, lambda, n_keep, truncation, direction, couplings, points_per_axis, box_length, n_states,
            sector, krylov_dim, tol, max_restarts, d_min, d_max, n_points, exchange, orders, n_configs,
            remainder_configs, rhos, widths, probe_separations, dump,
        )
    }
}

/// Fully resolved configuration; embedded verbatim in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub name: String,
    pub output_dir: PathBuf,
    pub rng_seed: u64,
    pub model: ModelKind,
    pub z: u32,
    pub e2: f64,
    pub softening: f64,
    pub kinetic: KineticName,
    pub dim: usize,
    pub electrons: usize,
    pub gap: f64,
    pub dipole: f64,
    pub omega: f64,
    pub lambda: f64,
    pub n_keep: usize,
    pub truncation: Vec<usize>,
    pub direction: [f64; 3],
    pub couplings: [f64; 3],
    pub points_per_axis: usize,
    /// `None` lets the dimer scan choose its box.
    pub box_length: Option<f64>,
    pub n_states: usize,
    pub sector: SectorName,
    pub krylov_dim: usize,
    pub tol: f64,
    pub max_restarts: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub n_points: usize,
    pub exchange: ExchangeName,
    pub orders: Vec<usize>,
    pub n_configs: usize,
    pub remainder_configs: usize,
    pub rhos: Vec<f64>,
    pub widths: Vec<f64>,
    pub probe_separations: Vec<f64>,
    pub dump: bool,
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn array3(name: &str, v: Option<Vec<f64>>, default: [f64; 3]) -> Result<[f64; 3], CliError> {
    match v {
        None => Ok(default),
        Some(v) if v.len() == 3 => Ok([v[0], v[1], v[2]]),
        Some(v) => usage(format!("{name} needs three components, got {}", v.len())),
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        usage(format!("{name} must be positive, got {v}"))
    }
}

impl RunConfig {
    /// Fills every unset field with the default of `command`.
    pub fn resolve(command: Command, raw: RawConfig) -> Result<Self, CliError> {
        use Command::*;
        if let Some(c) = raw.command {
            if c != command {
                return usage(format!("config file is for {}, not {}", c.name(), command.name()));
            }
        }
        let dim = raw.dim.unwrap_or(1);
        let z = raw.z.unwrap_or(if command == VerifyIonization { 2 } else { 1 });
        let (points, box_length) = match (command, dim) {
            (AtomSolve | VerifyDecay, 3) => (64, Some(24.0)),
            (AtomSolve | VerifyDecay, _) => (1024, Some(160.0)),
            (VdwC6 | VdwC8 | VdwC9, _) => (512, Some(80.0)),
            (DimerScan, _) => (512, None),
            (VerifyKernel, _) => (64, None),
            (VerifyLocalization, _) => (128, None),
            (VerifyIonization, _) => (256, Some(128.0)),
            _ => (512, None),
        };
        let (d_min, d_max, n_points) = match command {
            VerifyMultipole => (50.0, 500.0, 8),
            _ => (20.0, 50.0, 10),
        };
        let config = RunConfig {
            command,
            name: raw.name.unwrap_or_else(|| command.name().to_string()),
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from(".")),
            rng_seed: raw.rng_seed.unwrap_or(DEFAULT_SEED),
            model: raw.model.unwrap_or(match command {
                VdwC6 | VdwC8 => ModelKind::Spherical,
                VdwC9 => ModelKind::TwoLevel,
                _ => ModelKind::SoftCore,
            }),
            z,
            e2: raw.e2.unwrap_or(1.0),
            softening: raw.softening.unwrap_or_else(|| AtomModel::default_softening(dim)),
            kinetic: raw.kinetic.unwrap_or(KineticName::PseudoRelativistic),
            dim,
            electrons: raw.electrons.unwrap_or(z as usize),
            gap: raw.gap.unwrap_or(1.0),
            dipole: raw.dipole.unwrap_or(1.0),
            omega: raw.omega.unwrap_or(1.0),
            lambda: raw.lambda.unwrap_or(0.05),
            n_keep: raw.n_keep.unwrap_or(20),
            truncation: raw.truncation.unwrap_or_else(|| vec![5, 10, 20, 40]),
            direction: array3("direction", raw.direction, [0.0, 0.0, 1.0])?,
            couplings: array3("couplings", raw.couplings, [1.0, 1.0, 1.0])?,
            points_per_axis: raw.points_per_axis.unwrap_or(points),
            box_length: raw.box_length.or(box_length),
            n_states: raw.n_states.unwrap_or(match command {
                AtomSolve => 3,
                VerifyDecay => 2,
                _ => 1,
            }),
            sector: raw.sector.unwrap_or(SectorName::Full),
            krylov_dim: raw.krylov_dim.unwrap_or(if command == DimerScan { 24 } else { 48 }),
            tol: raw.tol.unwrap_or(SolverOptions::default().tol),
            max_restarts: raw.max_restarts.unwrap_or(SolverOptions::default().max_restarts),
            d_min: raw.d_min.unwrap_or(d_min),
            d_max: raw.d_max.unwrap_or(d_max),
            n_points: raw.n_points.unwrap_or(n_points),
            exchange: raw.exchange.unwrap_or(ExchangeName::Symmetric),
            orders: raw.orders.unwrap_or_else(|| vec![2, 3, 4, 5]),
            n_configs: raw.n_configs.unwrap_or(100),
            remainder_configs: raw.remainder_configs.unwrap_or(30),
            rhos: raw.rhos.unwrap_or_else(|| vec![64.0, 128.0, 256.0]),
            widths: raw.widths.unwrap_or_else(|| vec![0.5, 1.0, 2.0]),
            probe_separations: raw.probe_separations.unwrap_or_else(|| vec![4.0, 8.0, 16.0, 32.0]),
            dump: raw.dump.unwrap_or(false),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return usage(format!("name must be a plain file stem, got {:?}", self.name));
        }
        self.atom_model()?;
        GridSpec::new(self.dim, self.points_per_axis, self.box_length.unwrap_or(1.0))
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if let Some(l) = self.box_length {
            positive("box_length", l)?;
        }
        for (n, v) in [("gap", self.gap), ("dipole", self.dipole), ("omega", self.omega), ("tol", self.tol)] {
            positive(n, v)?;
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return usage(format!("lambda must be nonnegative, got {}", self.lambda));
        }
        if self.truncation.windows(2).any(|w| w[1] <= w[0]) || self.truncation.first() == Some(&0) {
            return usage("truncation levels must be positive and strictly increasing");
        }
        let norm = self.direction.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm.is_finite() && (norm - 1.0).abs() <= 1e-12) {
            return usage(format!("direction must be a unit vector, got {:?}", self.direction));
        }
        if self.couplings.iter().any(|c| !c.is_finite()) {
            return usage("couplings must be finite");
        }
        if self.n_states == 0 || self.krylov_dim < 4 || self.max_restarts == 0 {
            return usage("n_states ≥ 1, krylov_dim ≥ 4 and max_restarts ≥ 1 are required");
        }
        positive("d_min", self.d_min)?;
        if !(self.d_max > self.d_min) || self.n_points < 2 {
            return usage("need d_min < d_max and n_points ≥ 2");
        }
        if self.orders.is_empty() || self.orders.iter().any(|&k| k < 2) {
            return usage("remainder orders must be at least 2");
        }
        if self.n_configs == 0 || self.remainder_configs == 0 {
            return usage("n_configs and remainder_configs must be positive");
        }
        for (name, list) in [("rhos", &self.rhos), ("widths", &self.widths), ("probe_separations", &self.probe_separations)] {
            if list.is_empty() {
                return usage(format!("{name} must not be empty"));
            }
            for &v in list.iter() {
                positive(name, v)?;
            }
        }
        Ok(())
    }

    pub fn atom_model(&self) -> Result<AtomModel, CliError> {
        AtomModel::new(self.z, self.e2, self.softening, self.kinetic.into(), self.electrons, self.dim)
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn grid(&self) -> Result<GridSpec, CliError> {
        let l = self
            .box_length
            .ok_or_else(|| CliError::Usage(format!("{} needs box_length", self.command.name())))?;
        GridSpec::new(self.dim, self.points_per_axis, l).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions { krylov_dim: self.krylov_dim, tol: self.tol, max_restarts: self.max_restarts, seed: self.rng_seed }
    }
}
