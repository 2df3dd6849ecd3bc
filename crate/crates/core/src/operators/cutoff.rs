//! Smooth cutoff pairs `(u_ρ, v_ρ)`, the cluster partition of unity and the
//! kinetic localization error.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{kinetic_symbol, KineticKind, OperatorError};
use crate::lattice::{to_momentum, GridSpec, WaveFunction};

/// Radial cutoff pair with `u = 1` on `|z| ≤ ρ/8`, `u = 0` on `|z| > ρ/4` and
/// `u² + v² = 1` everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffFamily {
    rho: f64,
}

impl CutoffFamily {
    pub fn new(rho: f64) -> Result<Self, OperatorError> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(OperatorError::Geometry(format!("rho must be positive, got {rho}")));
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn inner_radius(&self) -> f64 {
        self.rho / 8.0
    }

    pub fn outer_radius(&self) -> f64 {
        self.rho / 4.0
    }

    /// `(u, v)` at distance `r` from the center.
    pub fn profile(&self, r: f64) -> (f64, f64) {
        let (inner, outer) = (self.inner_radius(), self.outer_radius());
        if r <= inner {
            return (1.0, 0.0);
        }
        if r >= outer {
            return (0.0, 1.0);
        }
        let s = smooth_step((outer - r) / (outer - inner));
        let angle = 0.5 * std::f64::consts::PI * s;
        (angle.sin(), angle.cos())
    }

    pub fn u(&self, z: &[f64]) -> f64 {
        self.profile(norm(z)).0
    }

    pub fn v(&self, z: &[f64]) -> f64 {
        self.profile(norm(z)).1
    }
}

/// C^∞ transition from 0 (t ≤ 0) to 1 (t ≥ 1) glued from `exp(−1/t)`.
fn smooth_step(t: f64) -> f64 {
    let g = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
    let a = g(t);
    let b = g(1.0 - t);
    a / (a + b)
}

fn norm(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `⟨u h, T u h⟩ + ⟨v h, T v h⟩ − ⟨h, T h⟩` for the pseudo-relativistic `T`.
pub fn localization_error_1(h: &WaveFunction, cut: &CutoffFamily) -> Result<f64, OperatorError> {
    if h.particles() != 1 {
        return Err(OperatorError::Geometry("localization error needs a one-particle state".into()));
    }
    let grid = h.grid();
    if 0.5 * grid.box_length() <= cut.outer_radius() {
        return Err(OperatorError::Geometry(format!(
            "box half-width {} does not contain the cutoff support radius {}",
            0.5 * grid.box_length(),
            cut.outer_radius()
        )));
    }
    let uh = to_momentum(&h.multiplied(|z| cut.u(z)));
    let vh = to_momentum(&h.multiplied(|z| cut.v(z)));
    let hh = to_momentum(h);
    let symbol = kinetic_symbol(KineticKind::PseudoRelativistic, grid, 1)?;
    let total: f64 = symbol
        .iter()
        .zip(uh.values().iter().zip(vh.values()).zip(hh.values()))
        .map(|(s, ((a, b), c))| s * (a.norm_sqr() + b.norm_sqr() - c.norm_sqr()))
        .sum();
    Ok(total * grid.cell_volume(1))
}

/// `‖χ_ρ h‖²` for the shell indicator of `3ρ/32 < |z| ≤ 9ρ/32`.
pub fn shell_norm_sq(h: &WaveFunction, rho: f64) -> f64 {
    let (lo, hi) = (3.0 * rho / 32.0, 9.0 * rho / 32.0);
    let shell = h.multiplied(|z| {
        let r = norm(z);
        if r > lo && r <= hi {
            1.0
        } else {
            0.0
        }
    });
    shell.norm().powi(2)
}

/// Partition of the electron configuration space into "near nucleus `l`" and
/// "far from every nucleus" regions, built from one cutoff pair per nucleus.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOfUnity {
    nuclei: Vec<[f64; 3]>,
    cutoff: CutoffFamily,
}

impl PartitionOfUnity {
    /// Nuclei must be separated by more than `2·ρ/4` so the supports of the
    /// per-nucleus cutoffs are disjoint.
    pub fn new(nuclei: Vec<[f64; 3]>, rho: f64) -> Result<Self, OperatorError> {
        let cutoff = CutoffFamily::new(rho)?;
        if nuclei.is_empty() {
            return Err(OperatorError::Geometry("at least one nucleus required".into()));
        }
        for (k, a) in nuclei.iter().enumerate() {
            for b in &nuclei[k + 1..] {
                let d = norm(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]]);
                if d <= 2.0 * cutoff.outer_radius() {
                    return Err(OperatorError::Geometry(format!(
                        "nuclei {a:?} and {b:?} are {d} apart, need more than {}",
                        2.0 * cutoff.outer_radius()
                    )));
                }
            }
        }
        Ok(Self { nuclei, cutoff })
    }

    pub fn nuclei(&self) -> &[[f64; 3]] {
        &self.nuclei
    }

    pub fn cutoff(&self) -> &CutoffFamily {
        &self.cutoff
    }

    /// One-electron weights: index 0 is the far region, `l ≥ 1` nucleus `l−1`.
    pub fn weights(&self, z: [f64; 3]) -> Vec<f64> {
        let mut w = vec![1.0; self.nuclei.len() + 1];
        for (l, x) in self.nuclei.iter().enumerate() {
            let r = norm(&[z[0] - x[0], z[1] - x[1], z[2] - x[2]]);
            let (u, v) = self.cutoff.profile(r);
            w[l + 1] = u;
            if r < self.cutoff.outer_radius() {
                // supports are disjoint, so at most one nucleus reaches here
                w[0] = v;
            }
        }
        w
    }

    /// Every decomposition of the electrons, as a per-electron region label,
    /// with its cutoff value `J_β(x)`.
    pub fn members(&self, x: &[[f64; 3]]) -> Vec<(Vec<usize>, f64)> {
        let weights: Vec<Vec<f64>> = x.iter().map(|&z| self.weights(z)).collect();
        let regions = self.nuclei.len() + 1;
        let count = regions.pow(x.len() as u32);
        (0..count)
            .map(|mut code| {
                let mut labels = vec![0usize; x.len()];
                for label in labels.iter_mut().rev() {
                    *label = code % regions;
                    code /= regions;
                }
                let j = labels.iter().zip(&weights).map(|(&l, w)| w[l]).product();
                (labels, j)
            })
            .collect()
    }

    /// Largest deviation of `Σ_β J_β²` from one over the samples.
    pub fn check(&self, samples: &[Vec<[f64; 3]>]) -> f64 {
        samples
            .iter()
            .map(|x| {
                let s: f64 = self.members(x).iter().map(|(_, j)| j * j).sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

pub fn partition_build(nuclei: Vec<[f64; 3]>, rho: f64) -> Result<PartitionOfUnity, OperatorError> {
    PartitionOfUnity::new(nuclei, rho)
}

pub fn partition_check(p: &PartitionOfUnity, samples: &[Vec<[f64; 3]>]) -> f64 {
    p.check(samples)
}

/// Localization errors of two test states at one cutoff scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRow {
    pub rho: f64,
    /// `LE₁` of the Gaussian straddling the transition shell.
    pub shell_error: f64,
    /// `‖χ_ρ h‖²` of that Gaussian.
    pub shell_norm_sq: f64,
    /// `|LE₁| ρ² / ‖χ_ρ h‖²`.
    pub shell_ratio: f64,
    /// `LE₁` of the bump kept at distance `≥ ρ` from the shell.
    pub far_error: f64,
    pub far_norm_sq: f64,
    /// `|LE₁| e^{ρ/64} / ‖h‖²`.
    pub far_ratio: f64,
    /// `LE₁` of the far bump plus a core bump inside `|z| ≤ ρ/16`; only the
    /// nonlocal cross term between the two pieces survives.
    pub split_error: f64,
    pub split_norm_sq: f64,
    pub split_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub points_per_axis: usize,
    pub rows: Vec<LocalizationRow>,
    /// Smallest `C` with `|LE₁| ≤ C ρ⁻² ‖χ_ρ h‖²` on every row.
    pub shell_constant: f64,
    /// Smallest `C′` with `|LE₁| ≤ C′ e^{−ρ/64} ‖h‖²` on every row.
    pub far_constant: f64,
    /// Smallest `C′` with the exponential bound on the split state.
    pub split_constant: f64,
    /// Largest over smallest shell ratio; stays near one when `LE₁ ∝ ρ⁻²`.
    pub shell_spread: f64,
}

/// Box side per unit ρ for the shell state and the far state.
const SHELL_BOX: f64 = 1.0;
const FAR_BOX: f64 = 3.25;

/// Gaussian of width `ρ/32` centered at `(3ρ/16, 0, 0)`, on a box of side `ρ`.
pub fn shell_state(rho: f64, points_per_axis: usize) -> Result<WaveFunction, OperatorError> {
    let grid = GridSpec::new(3, points_per_axis, SHELL_BOX * rho)?;
    let (c, s) = (3.0 * rho / 16.0, rho / 32.0);
    Ok(WaveFunction::from_fn(grid, |z| {
        let r2 = (z[0] - c).powi(2) + z[1] * z[1] + z[2] * z[2];
        Complex64::new((-0.5 * r2 / (s * s)).exp(), 0.0)
    })?)
}

/// Compact bump `(1 − |z−c|²/w²)³` with `w = ρ/8` whose support starts a
/// distance `ρ` beyond the outer edge `9ρ/32` of the shell, on a box of side
/// `3.25ρ` so that periodic images keep the same distance.
pub fn far_state(rho: f64, points_per_axis: usize) -> Result<WaveFunction, OperatorError> {
    let grid = GridSpec::new(3, points_per_axis, FAR_BOX * rho)?;
    let w = rho / 8.0;
    let c = 9.0 * rho / 32.0 + rho + w;
    Ok(WaveFunction::from_fn(grid, |z| {
        let t = ((z[0] - c).powi(2) + z[1] * z[1] + z[2] * z[2]) / (w * w);
        Complex64::new(if t < 1.0 { (1.0 - t).powi(3) } else { 0.0 }, 0.0)
    })?)
}

/// [`far_state`] plus the bump `(1 − 256|z|²/ρ²)³` centered at the origin.
pub fn split_state(rho: f64, points_per_axis: usize) -> Result<WaveFunction, OperatorError> {
    let far = far_state(rho, points_per_axis)?;
    let w = rho / 16.0;
    let core = WaveFunction::from_fn(*far.grid(), |z| {
        let t = z.iter().map(|c| c * c).sum::<f64>() / (w * w);
        Complex64::new(if t < 1.0 { (1.0 - t).powi(3) } else { 0.0 }, 0.0)
    })?;
    Ok(far.axpy(Complex64::new(1.0, 0.0), &core)?)
}

/// Evaluates `LE₁` for the shell and far states at every `ρ`, with both
/// states and lattices scaled with `ρ`.
pub fn localization_scan(rhos: &[f64], points_per_axis: usize) -> Result<LocalizationReport, OperatorError> {
    if rhos.is_empty() {
        return Err(OperatorError::Geometry("localization scan needs at least one rho".into()));
    }
    let mut rows = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let cut = CutoffFamily::new(rho)?;
        let shell = shell_state(rho, points_per_axis)?;
        let shell_error = localization_error_1(&shell, &cut)?;
        let shell_norm_sq = shell_norm_sq(&shell, rho);
        let far = far_state(rho, points_per_axis)?;
        let far_error = localization_error_1(&far, &cut)?;
        let far_norm_sq = far.norm().powi(2);
        let split = split_state(rho, points_per_axis)?;
        let split_error = localization_error_1(&split, &cut)?;
        let split_norm_sq = split.norm().powi(2);
        let decay = (rho / 64.0).exp();
        rows.push(LocalizationRow {
            rho,
            shell_error,
            shell_norm_sq,
            shell_ratio: shell_error.abs() * rho * rho / shell_norm_sq,
            far_error,
            far_norm_sq,
            far_ratio: far_error.abs() * decay / far_norm_sq,
            split_error,
            split_norm_sq,
            split_ratio: split_error.abs() * decay / split_norm_sq,
        });
    }
    let max = |f: fn(&LocalizationRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let shell_constant = max(|r| r.shell_ratio);
    let far_constant = max(|r| r.far_ratio);
    let split_constant = max(|r| r.split_ratio);
    let shell_min = rows.iter().map(|r| r.shell_ratio).fold(f64::INFINITY, f64::min);
    Ok(LocalizationReport {
        points_per_axis,
        shell_constant,
        far_constant,
        split_constant,
        shell_spread: shell_constant / shell_min,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::kinetic_form_kernel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn profile_support_and_unit_circle() {
        let cut = CutoffFamily::new(64.0).unwrap();
        assert_eq!(cut.profile(0.0), (1.0, 0.0));
        assert_eq!(cut.profile(8.0), (1.0, 0.0));
        assert_eq!(cut.profile(16.0), (0.0, 1.0));
        assert_eq!(cut.profile(100.0), (0.0, 1.0));
        let mut prev = 1.0;
        for i in 0..=1000 {
            let r = 7.0 + i as f64 * 0.01;
            let (u, v) = cut.profile(r);
            assert!((u * u + v * v - 1.0).abs() <= 1e-12);
            assert!(u <= prev);
            prev = u;
        }
    }

    #[test]
    fn profile_is_continuous_at_inner_radius() {
        let cut = CutoffFamily::new(32.0).unwrap();
        let r = cut.inner_radius();
        let step = 1e-6;
        let (a, _) = cut.profile(r);
        let (b, _) = cut.profile(r + step);
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn partition_at_nuclei_and_random_points() {
        let nuclei = vec![[0.0, 0.0, 0.0], [0.0, 0.0, 20.0]];
        let p = PartitionOfUnity::new(nuclei.clone(), 32.0).unwrap();
        let members = p.members(&[nuclei[0], nuclei[1]]);
        for (labels, j) in &members {
            if labels == &vec![1, 2] {
                assert_eq!(*j, 1.0);
            } else {
                assert_eq!(*j, 0.0);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<Vec<[f64; 3]>> = (0..10_000)
            .map(|_| {
                (0..2)
                    .map(|_| {
                        [
                            rng.random_range(-12.0..12.0),
                            rng.random_range(-12.0..12.0),
                            rng.random_range(-12.0..32.0),
                        ]
                    })
                    .collect()
            })
            .collect();
        assert!(p.check(&samples) <= 1e-12);
    }

    #[test]
    fn partition_continuous_across_inner_shell() {
        let p = PartitionOfUnity::new(vec![[0.0; 3], [0.0, 0.0, 40.0]], 32.0).unwrap();
        let r = p.cutoff().inner_radius();
        let h = 1e-4;
        let a = p.members(&[[r, 0.0, 0.0]]);
        let b = p.members(&[[r + h, 0.0, 0.0]]);
        for ((_, ja), (_, jb)) in a.iter().zip(&b) {
            assert!((ja - jb).abs() <= h);
        }
    }

    #[test]
    fn partition_rejects_overlapping_supports() {
        assert!(PartitionOfUnity::new(vec![[0.0; 3], [0.0, 0.0, 15.0]], 32.0).is_err());
        assert!(PartitionOfUnity::new(vec![[0.0; 3], [0.0, 0.0, 16.5]], 32.0).is_ok());
    }

    #[test]
    fn localization_error_vanishes_inside_inner_ball() {
        let grid = GridSpec::new(3, 32, 40.0).unwrap();
        let cut = CutoffFamily::new(48.0).unwrap();
        let h = WaveFunction::from_fn(grid, |z| {
            let r = norm(z);
            if r < 5.0 {
                Complex64::new((1.0 - (r / 5.0).powi(2)).powi(3), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .unwrap();
        assert!(localization_error_1(&h, &cut).unwrap().abs() <= 1e-10);
        let far = h.multiplied(|_| 0.0);
        assert_eq!(localization_error_1(&far, &cut).unwrap(), 0.0);
    }

    #[test]
    fn shell_error_matches_kernel_form() {
        let rho = 32.0;
        let h = shell_state(rho, 32).unwrap();
        let cut = CutoffFamily::new(rho).unwrap();
        let le = localization_error_1(&h, &cut).unwrap();
        let k = |f: &WaveFunction| kinetic_form_kernel(f).unwrap();
        let oracle = k(&h.multiplied(|z| cut.u(z))) + k(&h.multiplied(|z| cut.v(z))) - k(&h);
        assert!(le > 0.0);
        assert!((le - oracle).abs() <= 1e-6 * le, "{le} vs {oracle}");
    }

    #[test]
    fn localization_scan_shapes() {
        let report = localization_scan(&[64.0, 128.0], 128).unwrap();
        assert_eq!(report.rows.len(), 2);
        for row in &report.rows {
            assert!(row.shell_ratio <= report.shell_constant);
            assert_eq!(row.far_error, 0.0);
            assert!(row.split_error.abs() <= 1e-6 * row.shell_error.abs(), "{row:?}");
        }
        assert!(report.shell_spread >= 1.0);
        assert!(localization_scan(&[], 32).is_err());
    }

    #[test]
    fn localization_error_requires_room() {
        let grid = GridSpec::new(3, 8, 10.0).unwrap();
        let h = WaveFunction::zeros(grid, 1).unwrap();
        assert!(localization_error_1(&h, &CutoffFamily::new(40.0).unwrap()).is_err());
    }
}
