//! Uniform periodic lattices, complex wavefunctions and Fourier plumbing.
//!
//! A [`GridSpec`] describes one particle's lattice: `points_per_axis` sites per
//! Cartesian axis, periodic with period `box_length`. Site `i` along an axis sits
//! at the signed coordinate `i·h` for `i < n/2` and `(i - n)·h` otherwise, so the
//! origin is index 0 and index reflection `i -> (n - i) mod n` is an exact parity.
//!
//! A [`WaveFunction`] lives on the configuration lattice of `particles` copies of
//! the grid. Values are stored row-major over the axis list
//! `[p0.x0, p0.x1, .., p1.x0, ..]`, the first axis varying slowest.

use std::collections::HashMap;
use std::io::{BufRead, Read, Write};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

/// Largest configuration lattice the crate will allocate.
pub const MAX_POINTS: usize = 1 << 22;

const DUMP_MAGIC: &str = "vdwlab-wf v1";

#[derive(Debug, thiserror::Error)]
pub enum LatticeError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("configuration lattice of {points} points exceeds the limit of {limit}")]
    Capacity { points: usize, limit: usize },
    #[error("malformed wavefunction dump: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    points_per_axis: usize,
    box_length: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points_per_axis: usize, box_length: f64) -> Result<Self, LatticeError> {
        if dim != 1 && dim != 3 {
            return Err(LatticeError::InvalidGrid(format!("dim must be 1 or 3, got {dim}")));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(LatticeError::InvalidGrid(format!(
                "points_per_axis must be a power of two >= 8, got {points_per_axis}"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(LatticeError::InvalidGrid(format!(
                "box_length must be positive, got {box_length}"
            )));
        }
        Ok(Self { dim, points_per_axis, box_length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.points_per_axis as f64
    }

    /// Number of sites of the single-particle lattice.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of sites of the `particles`-particle configuration lattice.
    pub fn config_len(&self, particles: usize) -> Result<usize, LatticeError> {
        let axes = (self.dim * particles) as u32;
        let points = self
            .points_per_axis
            .checked_pow(axes)
            .ok_or(LatticeError::Capacity { points: usize::MAX, limit: MAX_POINTS })?;
        if points > MAX_POINTS {
            return Err(LatticeError::Capacity { points, limit: MAX_POINTS });
        }
        Ok(points)
    }

    /// Signed lattice index of site `i` along one axis.
    pub fn signed_index(&self, i: usize) -> i64 {
        let n = self.points_per_axis as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        self.signed_index(i) as f64 * self.spacing()
    }

    /// Angular wavenumber of Fourier index `i` along one axis.
    pub fn wavenumber(&self, i: usize) -> f64 {
        2.0 * std::f64::consts::PI / self.box_length * self.signed_index(i) as f64
    }

    /// Volume element of the configuration lattice.
    pub fn cell_volume(&self, particles: usize) -> f64 {
        self.spacing().powi((self.dim * particles) as i32)
    }

    /// Index of the site at signed lattice offset `offset` along one axis.
    pub fn wrap_index(&self, offset: i64) -> usize {
        offset.rem_euclid(self.points_per_axis as i64) as usize
    }

    /// Splits a flat configuration index into per-axis indices.
    pub fn unflatten(&self, mut index: usize, axes: usize, out: &mut [usize]) {
        let n = self.points_per_axis;
        for a in (0..axes).rev() {
            out[a] = index % n;
            index /= n;
        }
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.points_per_axis + i)
    }
}

/// Complex state on a configuration lattice with cached discrete L² norm.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: GridSpec,
    particles: usize,
    values: Vec<Complex64>,
    norm_cache: f64,
}

impl WaveFunction {
    pub fn new(grid: GridSpec, particles: usize, values: Vec<Complex64>) -> Result<Self, LatticeError> {
        if particles == 0 {
            return Err(LatticeError::Shape("particles must be >= 1".into()));
        }
        let len = grid.config_len(particles)?;
        if values.len() != len {
            return Err(LatticeError::Shape(format!(
                "expected {len} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(LatticeError::NonFinite(i));
        }
        let norm_cache = discrete_norm(&values, grid.cell_volume(particles));
        Ok(Self { grid, particles, values, norm_cache })
    }

    pub fn zeros(grid: GridSpec, particles: usize) -> Result<Self, LatticeError> {
        let len = grid.config_len(particles)?;
        Self::new(grid, particles, vec![Complex64::new(0.0, 0.0); len])
    }

    /// Samples `f` at every site of a one-particle lattice.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> Complex64) -> Result<Self, LatticeError> {
        Self::from_fn_particles(grid, 1, f)
    }

    /// Samples `f` on the configuration lattice; `f` receives all coordinates,
    /// particle-major.
    pub fn from_fn_particles(
        grid: GridSpec,
        particles: usize,
        f: impl Fn(&[f64]) -> Complex64,
    ) -> Result<Self, LatticeError> {
        let len = grid.config_len(particles)?;
        let axes = grid.dim() * particles;
        let mut idx = vec![0usize; axes];
        let mut x = vec![0.0; axes];
        let mut values = Vec::with_capacity(len);
        for flat in 0..len {
            grid.unflatten(flat, axes, &mut idx);
            for (xa, &ia) in x.iter_mut().zip(&idx) {
                *xa = grid.coordinate(ia);
            }
            values.push(f(&x));
        }
        Self::new(grid, particles, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn axes(&self) -> usize {
        self.grid.dim() * self.particles
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.norm_cache
    }

    /// Coordinates (particle-major) of the site with flat index `flat`.
    pub fn coordinates(&self, flat: usize) -> Vec<f64> {
        let axes = self.axes();
        let mut idx = vec![0usize; axes];
        self.grid.unflatten(flat, axes, &mut idx);
        idx.iter().map(|&i| self.grid.coordinate(i)).collect()
    }

    pub fn normalized(&self) -> Self {
        self.scaled(Complex64::new(1.0 / self.norm_cache, 0.0))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let values: Vec<_> = self.values.iter().map(|v| v * c).collect();
        self.with_values(values)
    }

    /// Pointwise product with a real function of the configuration.
    pub fn multiplied(&self, f: impl Fn(&[f64]) -> f64) -> Self {
        let axes = self.axes();
        let mut idx = vec![0usize; axes];
        let mut x = vec![0.0; axes];
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(flat, v)| {
                self.grid.unflatten(flat, axes, &mut idx);
                for (xa, &ia) in x.iter_mut().zip(&idx) {
                    *xa = self.grid.coordinate(ia);
                }
                v * f(&x)
            })
            .collect();
        self.with_values(values)
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: Complex64, other: &Self) -> Result<Self, LatticeError> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        Ok(self.with_values(values))
    }

    /// Rebuilds a state on the same lattice; values must already be finite.
    pub(crate) fn with_values(&self, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        let norm_cache = discrete_norm(&values, self.grid.cell_volume(self.particles));
        Self { grid: self.grid, particles: self.particles, values, norm_cache }
    }

    pub(crate) fn check_same(&self, other: &Self) -> Result<(), LatticeError> {
        if self.grid != other.grid || self.particles != other.particles {
            return Err(LatticeError::Shape(format!(
                "lattices differ: {:?}x{} vs {:?}x{}",
                self.grid, self.particles, other.grid, other.particles
            )));
        }
        Ok(())
    }

    /// Writes the binary dump: one header line followed by little-endian
    /// `(re, im)` f64 pairs in flattened order.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<(), LatticeError> {
        let mut header = format!(
            "{DUMP_MAGIC} dim={} n={} L={}",
            self.grid.dim(),
            self.grid.points_per_axis(),
            self.grid.box_length()
        );
        if self.particles > 1 {
            header.push_str(&format!(" particles={}", self.particles));
        }
        header.push('\n');
        w.write_all(header.as_bytes())?;
        let mut buf = Vec::with_capacity(16 * self.values.len());
        for v in &self.values {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_dump<R: Read>(r: R) -> Result<Self, LatticeError> {
        let mut reader = std::io::BufReader::new(r);
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let header = header
            .strip_suffix('\n')
            .ok_or_else(|| LatticeError::Format("missing header newline".into()))?;
        let rest = header
            .strip_prefix(DUMP_MAGIC)
            .ok_or_else(|| LatticeError::Format(format!("bad magic in {header:?}")))?;
        let mut dim = None;
        let mut n = None;
        let mut length = None;
        let mut particles = 1usize;
        for field in rest.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| LatticeError::Format(format!("bad field {field:?}")))?;
            let bad = || LatticeError::Format(format!("bad value in {field:?}"));
            match key {
                "dim" => dim = Some(value.parse::<usize>().map_err(|_| bad())?),
                "n" => n = Some(value.parse::<usize>().map_err(|_| bad())?),
                "L" => length = Some(value.parse::<f64>().map_err(|_| bad())?),
                "particles" => particles = value.parse::<usize>().map_err(|_| bad())?,
                _ => return Err(LatticeError::Format(format!("unknown field {key:?}"))),
            }
        }
        let missing = |k: &str| LatticeError::Format(format!("missing {k}"));
        let grid = GridSpec::new(
            dim.ok_or_else(|| missing("dim"))?,
            n.ok_or_else(|| missing("n"))?,
            length.ok_or_else(|| missing("L"))?,
        )?;
        let len = grid.config_len(particles)?;
        let mut bytes = Vec::with_capacity(16 * len);
        reader.read_to_end(&mut bytes)?;
        if bytes.len() != 16 * len {
            return Err(LatticeError::Format(format!(
                "expected {} payload bytes, got {}",
                16 * len,
                bytes.len()
            )));
        }
        let values = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Self::new(grid, particles, values)
    }
}

fn discrete_norm(values: &[Complex64], cell: f64) -> f64 {
    (values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell).sqrt()
}

/// Discrete L² inner product, conjugate-linear in `a`.
pub fn inner(a: &WaveFunction, b: &WaveFunction) -> Result<Complex64, LatticeError> {
    a.check_same(b)?;
    let cell = a.grid.cell_volume(a.particles);
    let s: Complex64 = a.values.iter().zip(&b.values).map(|(x, y)| x.conj() * y).sum();
    Ok(s * cell)
}

/// Unitary discrete Fourier transform of every axis.
pub fn to_momentum(psi: &WaveFunction) -> WaveFunction {
    let mut values = psi.values.clone();
    FourierPlan::for_size(psi.grid.points_per_axis()).forward(&mut values, psi.axes());
    psi.with_values(values)
}

pub fn from_momentum(psi: &WaveFunction) -> WaveFunction {
    let mut values = psi.values.clone();
    FourierPlan::for_size(psi.grid.points_per_axis()).inverse(&mut values, psi.axes());
    psi.with_values(values)
}

/// Cached forward/inverse transforms of one axis length.
pub struct FourierPlan {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FourierPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierPlan").field("n", &self.n).finish()
    }
}

impl FourierPlan {
    pub fn for_size(n: usize) -> Arc<FourierPlan> {
        static PLANS: OnceLock<Mutex<HashMap<usize, Arc<FourierPlan>>>> = OnceLock::new();
        let mut plans = PLANS.get_or_init(Default::default).lock().unwrap();
        plans
            .entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                Arc::new(FourierPlan {
                    n,
                    forward: planner.plan_fft_forward(n),
                    inverse: planner.plan_fft_inverse(n),
                })
            })
            .clone()
    }

    pub fn forward(&self, data: &mut [Complex64], axes: usize) {
        self.run(&*self.forward, data, axes);
    }

    pub fn inverse(&self, data: &mut [Complex64], axes: usize) {
        self.run(&*self.inverse, data, axes);
    }

    fn run(&self, fft: &dyn Fft<f64>, data: &mut [Complex64], axes: usize) {
        let n = self.n;
        debug_assert_eq!(data.len(), n.pow(axes as u32));
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        // last axis is contiguous
        fft.process_with_scratch(data, &mut scratch);
        if axes > 1 {
            let mut lines = vec![Complex64::new(0.0, 0.0); data.len()];
            for a in 0..axes - 1 {
                let stride = n.pow((axes - 1 - a) as u32);
                let block = n * stride;
                for (o, chunk) in data.chunks_exact(block).enumerate() {
                    for j in 0..n {
                        for s in 0..stride {
                            lines[(o * stride + s) * n + j] = chunk[j * stride + s];
                        }
                    }
                }
                fft.process_with_scratch(&mut lines, &mut scratch);
                for (o, chunk) in data.chunks_exact_mut(block).enumerate() {
                    for j in 0..n {
                        for s in 0..stride {
                            chunk[j * stride + s] = lines[(o * stride + s) * n + j];
                        }
                    }
                }
            }
        }
        let scale = (n as f64).powf(-0.5 * axes as f64);
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}
