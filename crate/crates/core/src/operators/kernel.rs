//! Real-space Bessel-kernel form of the pseudo-relativistic kinetic energy,
//! kept for cross-validation of the momentum-space operator.
//!
//! `⟨ψ, Tψ⟩ = (1/4π²) ∬ K₂(|x−y|)/|x−y|² |ψ(x)−ψ(y)|² dx dy`. Writing
//! `y = x + rω`, the `x` and `ω` integrals of `|ψ(x)−ψ(x+rω)|²` reduce for a
//! band-limited lattice state to `8π Σ_k |ψ̂_k|² (1 − sinc(|k|r))`, leaving a
//! one-dimensional radial quadrature of `K₂(r)` over `0 < r ≤ R_cut`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{kinetic_form_fourier, KineticKind, OperatorError};
use crate::lattice::{to_momentum, GridSpec, WaveFunction};
use crate::special::{bessel_k, composite_gauss};

/// Radial truncation of the kernel quadrature; `K₂(40) < 10·e^{-40}`.
pub const DEFAULT_KERNEL_CUTOFF: f64 = 40.0;

const PANEL_WIDTH: f64 = 0.25;
const PANEL_ORDER: usize = 16;

pub fn kinetic_form_kernel(psi: &WaveFunction) -> Result<f64, OperatorError> {
    kinetic_form_kernel_truncated(psi, DEFAULT_KERNEL_CUTOFF)
}

pub fn kinetic_form_kernel_truncated(psi: &WaveFunction, r_cut: f64) -> Result<f64, OperatorError> {
    let grid = psi.grid();
    if grid.dim() != 3 || psi.particles() != 1 {
        return Err(OperatorError::UnsupportedDimension(format!(
            "kernel form needs one particle in 3D, got {} particle(s) in {}D",
            psi.particles(),
            grid.dim()
        )));
    }
    let mom = to_momentum(psi);
    let mut shells: BTreeMap<i64, f64> = BTreeMap::new();
    let mut idx = [0usize; 3];
    for (flat, v) in mom.values().iter().enumerate() {
        grid.unflatten(flat, 3, &mut idx);
        let m: i64 = idx.iter().map(|&i| grid.signed_index(i).pow(2)).sum();
        *shells.entry(m).or_insert(0.0) += v.norm_sqr();
    }
    let nodes: Vec<(f64, f64)> =
        composite_gauss(0.0, r_cut, (r_cut / PANEL_WIDTH).ceil() as usize, PANEL_ORDER)
            .into_iter()
            .map(|(r, w)| (r, w * bessel_k(2.0, r)))
            .collect();
    let k_unit = 2.0 * std::f64::consts::PI / grid.box_length();
    let total: f64 = shells
        .iter()
        .map(|(&m, &weight)| weight * radial_multiplier(k_unit * (m as f64).sqrt(), &nodes))
        .sum();
    Ok(total * grid.cell_volume(1))
}

/// `(2/π) ∫ K₂(r)(1 − sinc(kr)) dr` over the prepared nodes.
fn radial_multiplier(k: f64, nodes: &[(f64, f64)]) -> f64 {
    if k == 0.0 {
        return 0.0;
    }
    let s: f64 = nodes.iter().map(|&(r, w)| w * one_minus_sinc(k * r)).sum();
    2.0 / std::f64::consts::PI * s
}

fn one_minus_sinc(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
    } else {
        1.0 - x.sin() / x
    }
}

/// Box length per unit Gaussian width used by [`kernel_check`].
pub const KERNEL_CHECK_BOX_PER_WIDTH: f64 = 16.0;

/// Momentum-space and kernel-quadrature kinetic forms of one Gaussian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCheck {
    pub width: f64,
    pub points_per_axis: usize,
    pub box_length: f64,
    pub fourier: f64,
    pub kernel: f64,
    pub relative: f64,
}

/// Compares both kinetic forms on the normalized Gaussian `exp(−|x|²/2w²)`
/// sampled on a 3D lattice of side `16w`.
pub fn kernel_check(width: f64, points_per_axis: usize) -> Result<KernelCheck, OperatorError> {
    if !(width.is_finite() && width > 0.0) {
        return Err(OperatorError::Geometry(format!("Gaussian width must be positive, got {width}")));
    }
    let box_length = KERNEL_CHECK_BOX_PER_WIDTH * width;
    let grid = GridSpec::new(3, points_per_axis, box_length)?;
    let psi = WaveFunction::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        Complex64::new((-0.5 * r2 / (width * width)).exp(), 0.0)
    })?
    .normalized();
    let fourier = kinetic_form_fourier(KineticKind::PseudoRelativistic, &psi);
    let kernel = kinetic_form_kernel(&psi)?;
    Ok(KernelCheck {
        width,
        points_per_axis,
        box_length,
        fourier,
        kernel,
        relative: (kernel - fourier).abs() / fourier.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nodes(r_cut: f64) -> Vec<(f64, f64)> {
        composite_gauss(0.0, r_cut, (r_cut / PANEL_WIDTH).ceil() as usize, PANEL_ORDER)
            .into_iter()
            .map(|(r, w)| (r, w * bessel_k(2.0, r)))
            .collect()
    }

    #[test]
    fn radial_multiplier_reproduces_symbol() {
        let nodes = nodes(DEFAULT_KERNEL_CUTOFF);
        for &k in &[1e-3, 0.1, 0.5, 1.0, 3.0, 10.0, 30.0] {
            let expected = KineticKind::PseudoRelativistic.symbol(k * k);
            let got = radial_multiplier(k, &nodes);
            assert!((got - expected).abs() <= 1e-10 * expected, "k={k}: {got} vs {expected}");
        }
    }

    #[test]
    fn one_minus_sinc_continuous_at_switch() {
        let x = 0.1 - 1e-12;
        let a = one_minus_sinc(x);
        let b = 1.0 - x.sin() / x;
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn constant_state_has_zero_form() {
        let grid = GridSpec::new(3, 8, 4.0).unwrap();
        let psi = WaveFunction::from_fn(grid, |_| Complex64::new(0.7, 0.0)).unwrap();
        assert_eq!(kinetic_form_kernel(&psi).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_matches_fourier_form() {
        let grid = GridSpec::new(3, 32, 12.0).unwrap();
        let psi = WaveFunction::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            Complex64::new((-0.5 * r2).exp(), 0.0)
        })
        .unwrap()
        .normalized();
        let kernel = kinetic_form_kernel(&psi).unwrap();
        let fourier = kinetic_form_fourier(KineticKind::PseudoRelativistic, &psi);
        assert!((kernel - fourier).abs() <= 1e-3 * fourier);
    }

    #[test]
    fn truncation_change_is_within_tail_bound() {
        let grid = GridSpec::new(3, 16, 10.0).unwrap();
        let psi = WaveFunction::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            Complex64::new((-r2).exp(), 0.0)
        })
        .unwrap();
        let norm2 = psi.norm().powi(2);
        for r_cut in [5.0, 10.0, 20.0] {
            let a = kinetic_form_kernel_truncated(&psi, r_cut).unwrap();
            let b = kinetic_form_kernel_truncated(&psi, 2.0 * r_cut).unwrap();
            assert!((a - b).abs() < 10.0 * (-r_cut).exp() * norm2, "R_cut={r_cut}");
        }
    }

    #[test]
    fn kernel_check_suite_agrees() {
        for w in [0.5, 1.0, 2.0] {
            let c = kernel_check(w, 32).unwrap();
            assert!(c.relative <= 1e-3, "width {w}: {c:?}");
        }
        assert!(kernel_check(0.0, 32).is_err());
    }

    #[test]
    fn one_dimensional_grid_rejected() {
        let psi = WaveFunction::zeros(GridSpec::new(1, 16, 4.0).unwrap(), 1).unwrap();
        assert!(matches!(
            kinetic_form_kernel(&psi),
            Err(OperatorError::UnsupportedDimension(_))
        ));
    }
}
