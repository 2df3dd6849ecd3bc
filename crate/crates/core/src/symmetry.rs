//! Lattice parities, two-electron exchange and quarter-turn rotations.
//!
//! Every operation is a permutation of lattice sites, so involutions and
//! isometries hold exactly rather than up to interpolation error. Parity
//! reflects through the origin by the index map `i -> (n - i) mod n`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::lattice::{GridSpec, WaveFunction};

#[derive(Debug, thiserror::Error)]
pub enum SymmetryError {
    #[error("unsupported symmetry operation: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryOp {
    /// Reflects the coordinates of the first particle.
    ParityC1,
    /// Reflects the coordinates of the second particle.
    ParityC2,
    /// Reflects every coordinate.
    ParityC1C2,
    /// Swaps the first two particles.
    Exchange12,
    /// Rotation about the z axis by `quarter_turns · π/2`, applied to every particle.
    RotationZ { quarter_turns: u8 },
}

impl SymmetryOp {
    /// Rotation by `angle` radians; only lattice-preserving multiples of π/2
    /// are representable.
    pub fn rotation_z(angle: f64) -> Result<Self, SymmetryError> {
        let turns = angle / std::f64::consts::FRAC_PI_2;
        let rounded = turns.round();
        if !turns.is_finite() || (turns - rounded).abs() > 1e-12 {
            return Err(SymmetryError::Unsupported(format!(
                "rotation angle {angle} is not a multiple of π/2"
            )));
        }
        Ok(SymmetryOp::RotationZ { quarter_turns: (rounded as i64).rem_euclid(4) as u8 })
    }

    /// Site permutation: the transformed state takes value `values[perm[i]]` at site `i`.
    pub fn permutation(&self, grid: &GridSpec, particles: usize) -> Result<Vec<usize>, SymmetryError> {
        let dim = grid.dim();
        let n = grid.points_per_axis();
        let len = grid
            .config_len(particles)
            .map_err(|e| SymmetryError::Unsupported(e.to_string()))?;
        let axes = dim * particles;
        let reflect = |i: usize| (n - i) % n;
        let needs = |k: usize, what: &str| {
            if particles < k {
                Err(SymmetryError::Unsupported(format!("{what} needs {k} particles, state has {particles}")))
            } else {
                Ok(())
            }
        };
        match self {
            SymmetryOp::ParityC2 => needs(2, "ParityC2")?,
            SymmetryOp::Exchange12 => needs(2, "Exchange12")?,
            SymmetryOp::RotationZ { .. } if dim != 3 => {
                return Err(SymmetryError::Unsupported("rotation needs a 3D lattice".into()))
            }
            _ => {}
        }
        let mut idx = vec![0usize; axes];
        let mut src = vec![0usize; axes];
        let mut perm = Vec::with_capacity(len);
        for flat in 0..len {
            grid.unflatten(flat, axes, &mut idx);
            src.copy_from_slice(&idx);
            match *self {
                SymmetryOp::ParityC1 => src[..dim].iter_mut().for_each(|i| *i = reflect(*i)),
                SymmetryOp::ParityC2 => src[dim..2 * dim].iter_mut().for_each(|i| *i = reflect(*i)),
                SymmetryOp::ParityC1C2 => src.iter_mut().for_each(|i| *i = reflect(*i)),
                SymmetryOp::Exchange12 => {
                    src[..dim].copy_from_slice(&idx[dim..2 * dim]);
                    src[dim..2 * dim].copy_from_slice(&idx[..dim]);
                }
                SymmetryOp::RotationZ { quarter_turns } => {
                    // ψ'(x) = ψ(R⁻¹x); R⁻¹ by one quarter turn maps (x, y) to (y, −x)
                    for p in 0..particles {
                        for _ in 0..quarter_turns {
                            let (x, y) = (src[p * 3], src[p * 3 + 1]);
                            src[p * 3] = y;
                            src[p * 3 + 1] = reflect(x);
                        }
                    }
                }
            }
            perm.push(grid.flatten(&src));
        }
        Ok(perm)
    }
}

pub fn apply_symmetry(op: SymmetryOp, psi: &WaveFunction) -> Result<WaveFunction, SymmetryError> {
    let perm = op.permutation(psi.grid(), psi.particles())?;
    let values = psi.values();
    Ok(psi.with_values(perm.iter().map(|&p| values[p]).collect()))
}

/// `(ψ + sign·op ψ) / 2`.
pub fn sector_project(psi: &WaveFunction, op: SymmetryOp, sign: Sign) -> Result<WaveFunction, SymmetryError> {
    let perm = op.permutation(psi.grid(), psi.particles())?;
    let mut values = psi.values().to_vec();
    project_values(&perm, sign, &mut values);
    Ok(psi.with_values(values))
}

/// In-place `(x + sign·Px) / 2` for a site permutation `P` that is an involution.
pub fn project_values(perm: &[usize], sign: Sign, values: &mut [Complex64]) {
    let s = sign.value();
    for i in 0..perm.len() {
        let j = perm[i];
        if j > i {
            let (a, b) = (values[i], values[j]);
            values[i] = 0.5 * (a + s * b);
            values[j] = 0.5 * (b + s * a);
        } else if j == i {
            values[i] *= 0.5 * (1.0 + s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::inner;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(grid: GridSpec, particles: usize, seed: u64) -> WaveFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = grid.config_len(particles).unwrap();
        let values = (0..len)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        WaveFunction::new(grid, particles, values).unwrap()
    }

    fn distance(a: &WaveFunction, b: &WaveFunction) -> f64 {
        a.axpy(Complex64::new(-1.0, 0.0), b).unwrap().norm()
    }

    #[test]
    fn parity_of_even_and_odd_functions() {
        let grid = GridSpec::new(3, 16, 10.0).unwrap();
        let even = WaveFunction::from_fn(grid, |x| {
            Complex64::new((-2.0 * x.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0)
        })
        .unwrap();
        assert!(distance(&apply_symmetry(SymmetryOp::ParityC1, &even).unwrap(), &even) <= 1e-12);
        let odd = even.multiplied(|x| x[2]);
        let flipped = apply_symmetry(SymmetryOp::ParityC1, &odd).unwrap();
        assert!(distance(&flipped, &odd.scaled(Complex64::new(-1.0, 0.0))) <= 1e-12);
    }

    #[test]
    fn exchange_swaps_product_factors() {
        let grid = GridSpec::new(1, 32, 12.0).unwrap();
        let a = |x: f64| (-(x - 1.0).powi(2)).exp();
        let b = |x: f64| x * (-x * x / 3.0).exp();
        let ab = WaveFunction::from_fn_particles(grid, 2, |x| Complex64::new(a(x[0]) * b(x[1]), 0.0)).unwrap();
        let ba = WaveFunction::from_fn_particles(grid, 2, |x| Complex64::new(b(x[0]) * a(x[1]), 0.0)).unwrap();
        assert_eq!(apply_symmetry(SymmetryOp::Exchange12, &ab).unwrap(), ba);
    }

    #[test]
    fn rotation_quarter_turn_maps_x_to_y() {
        let grid = GridSpec::new(3, 16, 10.0).unwrap();
        let f = |x: &[f64]| Complex64::new(x[0] * (-x.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0);
        let g = |x: &[f64]| Complex64::new(x[1] * (-x.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0);
        let px = WaveFunction::from_fn(grid, f).unwrap();
        let py = WaveFunction::from_fn(grid, g).unwrap();
        let rotated = apply_symmetry(SymmetryOp::rotation_z(std::f64::consts::FRAC_PI_2).unwrap(), &px).unwrap();
        assert!(distance(&rotated, &py) <= 1e-12);
        let full = SymmetryOp::rotation_z(2.0 * std::f64::consts::PI).unwrap();
        assert_eq!(apply_symmetry(full, &px).unwrap(), px);
        assert!(SymmetryOp::rotation_z(0.3).is_err());
        let one_d = WaveFunction::zeros(GridSpec::new(1, 16, 4.0).unwrap(), 1).unwrap();
        assert!(apply_symmetry(SymmetryOp::RotationZ { quarter_turns: 1 }, &one_d).is_err());
    }

    #[test]
    fn exchange_needs_two_particles() {
        let psi = WaveFunction::zeros(GridSpec::new(1, 16, 4.0).unwrap(), 1).unwrap();
        assert!(apply_symmetry(SymmetryOp::Exchange12, &psi).is_err());
        assert!(apply_symmetry(SymmetryOp::ParityC2, &psi).is_err());
    }

    #[test]
    fn projector_properties() {
        let grid = GridSpec::new(1, 16, 5.0).unwrap();
        let psi = random_state(grid, 2, 9);
        for op in [SymmetryOp::Exchange12, SymmetryOp::ParityC1C2, SymmetryOp::ParityC1] {
            let plus = sector_project(&psi, op, Sign::Plus).unwrap();
            let minus = sector_project(&psi, op, Sign::Minus).unwrap();
            assert!(distance(&sector_project(&plus, op, Sign::Plus).unwrap(), &plus) <= 1e-14);
            assert!(distance(&plus.axpy(Complex64::new(1.0, 0.0), &minus).unwrap(), &psi) <= 1e-14);
            assert!(sector_project(&minus, op, Sign::Plus).unwrap().norm() <= 1e-14);
        }
    }

    proptest::proptest! {
        #[test]
        fn parities_are_unitary_involutions(seed in 0u64..300) {
            let grid = GridSpec::new(1, 16, 5.0).unwrap();
            let psi = random_state(grid, 2, seed);
            for op in [SymmetryOp::ParityC1, SymmetryOp::ParityC2, SymmetryOp::ParityC1C2, SymmetryOp::Exchange12] {
                let once = apply_symmetry(op, &psi).unwrap();
                proptest::prop_assert!((once.norm() - psi.norm()).abs() <= 1e-12 * psi.norm());
                proptest::prop_assert_eq!(apply_symmetry(op, &once).unwrap(), psi.clone());
            }
            let composed = apply_symmetry(SymmetryOp::ParityC1, &apply_symmetry(SymmetryOp::ParityC2, &psi).unwrap()).unwrap();
            proptest::prop_assert_eq!(composed, apply_symmetry(SymmetryOp::ParityC1C2, &psi).unwrap());
            let other = random_state(grid, 2, seed + 1);
            let a = inner(&apply_symmetry(SymmetryOp::Exchange12, &psi).unwrap(), &apply_symmetry(SymmetryOp::Exchange12, &other).unwrap()).unwrap();
            let b = inner(&psi, &other).unwrap();
            proptest::prop_assert!((a - b).norm() <= 1e-12 * psi.norm() * other.norm());
        }
    }
}
