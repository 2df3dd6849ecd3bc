//! Multipole expansion of the Coulomb interaction between two neutral clusters.
//!
//! Electrons of cluster 1 sit at `X₁ + xᵢ`, those of cluster 2 at `X₂ + xⱼ`,
//! with `X₂ − X₁ = |D|·e_D`. Expanding `1/|D − h| = Σ |h|ⁿ Pₙ(ĥ·e_D)/|D|ⁿ⁺¹`
//! for the electron–nucleus and electron–electron distances gives the terms
//! `f_n` of the interaction in inverse powers of `|D|`.

mod poly;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::special::fit_line;

pub use poly::{pair_term_poly, Poly};

#[derive(Debug, thiserror::Error)]
pub enum MultipoleError {
    #[error("Legendre argument {0} outside [-1, 1]")]
    Domain(f64),
    #[error("invalid cluster pair: {0}")]
    InvalidPair(String),
    #[error("configuration outside the convergence region: d = {d}, |D| = {separation}")]
    OutsideConvergence { d: f64, separation: f64 },
}

pub type Vec3 = [f64; 3];

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn neg(a: &Vec3) -> Vec3 {
    [-a[0], -a[1], -a[2]]
}

/// `Pₙ(z)` by the three-term recurrence.
pub fn legendre(n: usize, z: f64) -> Result<f64, MultipoleError> {
    if !(z.abs() <= 1.0 + 1e-12) {
        return Err(MultipoleError::Domain(z));
    }
    Ok(legendre_unchecked(n, z.clamp(-1.0, 1.0)))
}

fn legendre_unchecked(n: usize, z: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return 1.0;
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `|h|ⁿ Pₙ(ĥ·e)`, continued by zero at `h = 0` for `n ≥ 1`.
pub fn solid_term(n: usize, h: &Vec3, e: &Vec3) -> f64 {
    let r = dot(h, h).sqrt();
    if n == 0 {
        return 1.0;
    }
    if r == 0.0 {
        return 0.0;
    }
    let z = (dot(h, e) / r).clamp(-1.0, 1.0);
    r.powi(n as i32) * legendre_unchecked(n, z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPair {
    positions_1: Vec<Vec3>,
    positions_2: Vec<Vec3>,
    z1: u32,
    z2: u32,
    e2: f64,
    direction: Vec3,
    separation: f64,
}

/// Cluster(s) whose coordinates a parity flips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParityKind {
    C1,
    C2,
    C1C2,
}

impl ClusterPair {
    pub fn new(
        positions_1: Vec<Vec3>,
        positions_2: Vec<Vec3>,
        z1: u32,
        z2: u32,
        e2: f64,
        direction: Vec3,
        separation: f64,
    ) -> Result<Self, MultipoleError> {
        if ((dot(&direction, &direction)).sqrt() - 1.0).abs() > 1e-12 {
            return Err(MultipoleError::InvalidPair(format!("direction {direction:?} is not a unit vector")));
        }
        if !(separation.is_finite() && separation > 0.0) {
            return Err(MultipoleError::InvalidPair(format!("separation must be positive, got {separation}")));
        }
        if !(e2.is_finite() && e2 >= 0.0) {
            return Err(MultipoleError::InvalidPair(format!("e2 must be nonnegative, got {e2}")));
        }
        Ok(Self { positions_1, positions_2, z1, z2, e2, direction, separation })
    }

    /// Neutral pair: one cluster charge per electron.
    pub fn neutral(
        positions_1: Vec<Vec3>,
        positions_2: Vec<Vec3>,
        e2: f64,
        direction: Vec3,
        separation: f64,
    ) -> Result<Self, MultipoleError> {
        let (z1, z2) = (positions_1.len() as u32, positions_2.len() as u32);
        Self::new(positions_1, positions_2, z1, z2, e2, direction, separation)
    }

    pub fn positions_1(&self) -> &[Vec3] {
        &self.positions_1
    }

    pub fn positions_2(&self) -> &[Vec3] {
        &self.positions_2
    }

    pub fn z1(&self) -> u32 {
        self.z1
    }

    pub fn z2(&self) -> u32 {
        self.z2
    }

    pub fn e2(&self) -> f64 {
        self.e2
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn is_neutral(&self) -> bool {
        self.positions_1.len() == self.z1 as usize && self.positions_2.len() == self.z2 as usize
    }

    pub fn with_separation(&self, separation: f64) -> Result<Self, MultipoleError> {
        let mut p = self.clone();
        if !(separation.is_finite() && separation > 0.0) {
            return Err(MultipoleError::InvalidPair(format!("separation must be positive, got {separation}")));
        }
        p.separation = separation;
        Ok(p)
    }

    /// Flips the sign of the coordinates in the chosen cluster(s).
    pub fn parity(&self, which: ParityKind) -> Self {
        let mut p = self.clone();
        if matches!(which, ParityKind::C1 | ParityKind::C1C2) {
            p.positions_1.iter_mut().for_each(|x| *x = neg(x));
        }
        if matches!(which, ParityKind::C2 | ParityKind::C1C2) {
            p.positions_2.iter_mut().for_each(|x| *x = neg(x));
        }
        p
    }

    /// `d_β = (Σ |xᵢ|²)^{1/2}` over both clusters.
    pub fn d_beta(&self) -> f64 {
        self.positions_1.iter().chain(&self.positions_2).map(|x| dot(x, x)).sum::<f64>().sqrt()
    }

    /// Exact Coulomb intercluster interaction including the nuclear repulsion.
    ///
    /// Each `1/|D e − h|` is evaluated as `1/|D| + g(h)` with the difference
    /// `g` computed without cancellation; the `1/|D|` parts are collected
    /// separately and vanish identically for neutral pairs.
    pub fn interaction(&self) -> f64 {
        let d = self.separation;
        let e = self.direction;
        let g = |h: &Vec3| {
            let dh = 2.0 * d * dot(h, &e) - dot(h, h);
            let s = {
                let v = [d * e[0] - h[0], d * e[1] - h[1], d * e[2] - h[2]];
                dot(&v, &v).sqrt()
            };
            dh / (d * s * (d + s))
        };
        let (z1, z2) = (self.z1 as f64, self.z2 as f64);
        let (n1, n2) = (self.positions_1.len() as f64, self.positions_2.len() as f64);
        let mut total = 0.0;
        for xi in &self.positions_1 {
            total -= z2 * g(xi);
        }
        for xj in &self.positions_2 {
            total -= z1 * g(&neg(xj));
        }
        for xi in &self.positions_1 {
            for xj in &self.positions_2 {
                total += g(&sub(xi, xj));
            }
        }
        let monopole = z1 * z2 - z2 * n1 - z1 * n2 + n1 * n2;
        self.e2 * (total + monopole / d)
    }
}

/// `f_n = −e²Z₂F⁽¹⁾ₙ − e²Z₁F⁽²⁾ₙ + e²F⁽³⁾ₙ` from Legendre polynomials.
pub fn f_n(pair: &ClusterPair, n: usize) -> f64 {
    let e = pair.direction;
    let f1: f64 = pair.positions_1.iter().map(|x| solid_term(n, x, &e)).sum();
    let f2: f64 = pair.positions_2.iter().map(|x| solid_term(n, &neg(x), &e)).sum();
    let f3: f64 = pair
        .positions_1
        .iter()
        .flat_map(|xi| pair.positions_2.iter().map(move |xj| solid_term(n, &sub(xi, xj), &e)))
        .sum();
    pair.e2 * (-(pair.z2 as f64) * f1 - (pair.z1 as f64) * f2 + f3)
}

/// Dipole–dipole term written out; equals `f_n(·, 2)` for neutral pairs.
pub fn f2_closed(pair: &ClusterPair) -> f64 {
    let e = pair.direction;
    let mut s = 0.0;
    for xi in &pair.positions_1 {
        for xj in &pair.positions_2 {
            s -= 3.0 * dot(xi, &e) * dot(xj, &e) - dot(xi, xj);
        }
    }
    pair.e2 * s
}

/// Dipole–quadrupole term written out; equals `f_n(·, 3)` for neutral pairs.
pub fn f3_closed(pair: &ClusterPair) -> f64 {
    let e = pair.direction;
    let mut s = 0.0;
    for xi in &pair.positions_1 {
        for xj in &pair.positions_2 {
            let (ai, aj) = (dot(xi, &e), dot(xj, &e));
            s += 3.0 * (ai - aj) * (2.0 * dot(xi, xj) - 5.0 * ai * aj) + 3.0 * dot(xi, xi) * aj
                - 3.0 * dot(xj, xj) * ai;
        }
    }
    0.5 * pair.e2 * s
}

/// Expansion terms of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipoleSet {
    pub orders: Vec<usize>,
    pub values: Vec<f64>,
    pub d_beta: f64,
    pub separation: f64,
}

pub fn multipole_set(pair: &ClusterPair, orders: &[usize]) -> MultipoleSet {
    MultipoleSet {
        orders: orders.to_vec(),
        values: orders.iter().map(|&n| f_n(pair, n)).collect(),
        d_beta: pair.d_beta(),
        separation: pair.separation,
    }
}

/// `|I_β − Σ_{n=2}^{k−1} f_n/|D|ⁿ⁺¹|`.
pub fn remainder(pair: &ClusterPair, k: usize) -> f64 {
    let d = pair.separation;
    let partial: f64 = (2..k).map(|n| f_n(pair, n) / d.powi(n as i32 + 1)).sum();
    (pair.interaction() - partial).abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderRow {
    pub separation: f64,
    pub max_remainder: f64,
    /// `C·max d_β^k / |D|^{k+1}` with the fitted `C`.
    pub bound_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderReport {
    pub k: usize,
    pub rows: Vec<RemainderRow>,
    /// Log-log slope of the maximal remainder against `|D|`.
    pub slope: f64,
    /// Smallest `C` with `R_k ≤ C d_β^k / |D|^{k+1}` on all samples.
    pub constant: f64,
}

/// Remainder scaling over a family of configurations and separations.
pub fn remainder_check(
    configs: &[ClusterPair],
    k: usize,
    separations: &[f64],
) -> Result<RemainderReport, MultipoleError> {
    if k < 2 || separations.len() < 2 || configs.is_empty() {
        return Err(MultipoleError::InvalidPair("need k ≥ 2, two separations and one configuration".into()));
    }
    let d_min = separations.iter().cloned().fold(f64::INFINITY, f64::min);
    for c in configs {
        if c.d_beta() > d_min / 4.0 {
            return Err(MultipoleError::OutsideConvergence { d: c.d_beta(), separation: d_min });
        }
    }
    let d_max_beta = configs.iter().map(|c| c.d_beta()).fold(0.0, f64::max);
    let mut constant: f64 = 0.0;
    let mut maxima = Vec::with_capacity(separations.len());
    for &d in separations {
        let mut max_r: f64 = 0.0;
        for c in configs {
            let r = remainder(&c.with_separation(d)?, k);
            max_r = max_r.max(r);
            let db = c.d_beta();
            if db > 0.0 {
                constant = constant.max(r * d.powi(k as i32 + 1) / db.powi(k as i32));
            }
        }
        maxima.push(max_r);
    }
    let rows = separations
        .iter()
        .zip(&maxima)
        .map(|(&d, &m)| RemainderRow {
            separation: d,
            max_remainder: m,
            bound_value: constant * d_max_beta.powi(k as i32) / d.powi(k as i32 + 1),
        })
        .collect();
    let x: Vec<f64> = separations.iter().map(|d| d.ln()).collect();
    let y: Vec<f64> = maxima.iter().map(|m| m.ln()).collect();
    let (_, slope, _) = fit_line(&x, &y);
    Ok(RemainderReport { k, rows, slope, constant })
}

/// `f ∘ P`, where `P` flips the coordinates of the chosen cluster(s).
pub fn parity_apply<F>(which: ParityKind, f: F) -> impl Fn(&ClusterPair) -> f64
where
    F: Fn(&ClusterPair) -> f64,
{
    move |pair| f(&pair.parity(which))
}

/// `e²(Z₂Σ|xᵢ|ⁿ + Z₁Σ|xⱼ|ⁿ + Σ|xᵢ−xⱼ|ⁿ)`, a bound on `|f_n|` since `|Pₙ| ≤ 1`.
pub fn term_scale(pair: &ClusterPair, n: usize) -> f64 {
    let p = |v: &Vec3| dot(v, v).sqrt().powi(n as i32);
    let s1: f64 = pair.positions_1.iter().map(p).sum();
    let s2: f64 = pair.positions_2.iter().map(p).sum();
    let s3: f64 =
        pair.positions_1.iter().flat_map(|xi| pair.positions_2.iter().map(move |xj| p(&sub(xi, xj)))).sum();
    pair.e2 * (pair.z2 as f64 * s1 + pair.z1 as f64 * s2 + s3)
}

/// Seeded random neutral pairs: `1..=max_electrons` electrons per cluster,
/// coordinates uniform in `[−radius, radius]³`, uniformly random axis.
pub fn random_neutral_pairs(
    seed: u64,
    count: usize,
    max_electrons: usize,
    radius: f64,
    e2: f64,
    separation: f64,
) -> Result<Vec<ClusterPair>, MultipoleError> {
    if max_electrons == 0 || !(radius.is_finite() && radius > 0.0) {
        return Err(MultipoleError::InvalidPair("need at least one electron and a positive radius".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng, r: f64| -> Vec3 {
        [rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r)]
    };
    (0..count)
        .map(|_| {
            let n1 = rng.random_range(1..=max_electrons);
            let n2 = rng.random_range(1..=max_electrons);
            let p1 = (0..n1).map(|_| point(&mut rng, radius)).collect();
            let p2 = (0..n2).map(|_| point(&mut rng, radius)).collect();
            let axis = loop {
                let v = point(&mut rng, 1.0);
                let n = dot(&v, &v).sqrt();
                if n > 0.1 && n < 1.0 {
                    break [v[0] / n, v[1] / n, v[2] / n];
                }
            };
            ClusterPair::neutral(p1, p2, e2, axis, separation)
        })
        .collect()
}

/// Worst relative violations of the low-order expansion identities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub configurations: usize,
    /// `|f₀ + e²Z₁Z₂| / e²Z₁Z₂`: the monopole term cancels the nuclear repulsion.
    pub monopole_cancellation: f64,
    /// `|f₁| / term_scale(1)`.
    pub dipole_term: f64,
    /// `|f2_closed − f₂| / term_scale(2)`.
    pub f2_closed_form: f64,
    /// `|f3_closed − f₃| / term_scale(3)`.
    pub f3_closed_form: f64,
}

pub fn identity_check(configs: &[ClusterPair]) -> Result<IdentityReport, MultipoleError> {
    let mut report = IdentityReport {
        configurations: configs.len(),
        monopole_cancellation: 0.0,
        dipole_term: 0.0,
        f2_closed_form: 0.0,
        f3_closed_form: 0.0,
    };
    for p in configs {
        if !p.is_neutral() || p.e2 == 0.0 {
            return Err(MultipoleError::InvalidPair("identity check needs neutral pairs with e2 > 0".into()));
        }
        let nuclear = p.e2 * (p.z1 * p.z2) as f64;
        let worst = |a: &mut f64, v: f64| *a = a.max(v);
        worst(&mut report.monopole_cancellation, (f_n(p, 0) + nuclear).abs() / nuclear);
        worst(&mut report.dipole_term, f_n(p, 1).abs() / term_scale(p, 1));
        worst(&mut report.f2_closed_form, (f2_closed(p) - f_n(p, 2)).abs() / term_scale(p, 2));
        worst(&mut report.f3_closed_form, (f3_closed(p) - f_n(p, 3)).abs() / term_scale(p, 3));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const Z: Vec3 = [0.0, 0.0, 1.0];

    fn random_point(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
        [
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
        ]
    }

    fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
        loop {
            let v = random_point(rng, 1.0);
            let n = dot(&v, &v).sqrt();
            if n > 0.1 && n < 1.0 {
                return [v[0] / n, v[1] / n, v[2] / n];
            }
        }
    }

    fn random_pair(rng: &mut ChaCha8Rng) -> ClusterPair {
        let n1 = rng.random_range(1..4);
        let n2 = rng.random_range(1..4);
        let p1 = (0..n1).map(|_| random_point(rng, 1.0)).collect();
        let p2 = (0..n2).map(|_| random_point(rng, 1.0)).collect();
        let e = random_unit(rng);
        ClusterPair::neutral(p1, p2, 0.7, e, 50.0).unwrap()
    }

    #[test]
    fn legendre_values() {
        assert_eq!(legendre(2, 1.0).unwrap(), 1.0);
        assert_eq!(legendre(2, 0.0).unwrap(), -0.5);
        assert!(legendre(3, 1.5).is_err());
        for i in 0..=200 {
            let z = -1.0 + i as f64 * 0.01;
            let closed = [
                1.0,
                z,
                0.5 * (3.0 * z * z - 1.0),
                0.5 * (5.0 * z * z * z - 3.0 * z),
                (35.0 * z.powi(4) - 30.0 * z * z + 3.0) / 8.0,
            ];
            for (n, c) in closed.iter().enumerate() {
                assert!((legendre(n, z).unwrap() - c).abs() <= 1e-14);
            }
            for n in 0..12 {
                assert!(legendre(n, z).unwrap().abs() <= 1.0 + 1e-14);
            }
        }
    }

    #[test]
    fn generating_function() {
        for &t in &[0.1, 0.3, 0.5] {
            for i in 0..=20 {
                let z = -1.0 + i as f64 * 0.1;
                let exact = 1.0 / (1.0 - 2.0 * z * t + t * t).sqrt();
                for big_n in [4usize, 8, 16] {
                    let s: f64 = (0..=big_n).map(|n| legendre(n, z).unwrap() * t.powi(n as i32)).sum();
                    assert!((s - exact).abs() <= t.powi(big_n as i32 + 1) / (1.0 - t) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn worked_examples() {
        let p = ClusterPair::neutral(vec![[1.0, 0.0, 0.0]], vec![[1.0, 0.0, 0.0]], 1.0, Z, 10.0).unwrap();
        assert!((f2_closed(&p) - 1.0).abs() < 1e-15);
        assert!((f_n(&p, 2) - 1.0).abs() < 1e-14);
        let p = ClusterPair::neutral(vec![[0.0, 0.0, 1.0]], vec![[0.0, 0.0, -1.0]], 1.0, Z, 10.0).unwrap();
        assert!((f3_closed(&p) - 6.0).abs() < 1e-14);
        assert!((f_n(&p, 3) - 6.0).abs() < 1e-13);
        let p = ClusterPair::neutral(vec![[0.0, 0.0, 1.0]], vec![[0.0, 0.0, 0.0]], 1.0, Z, 10.0).unwrap();
        assert_eq!(f3_closed(&p), 0.0);
        let p = ClusterPair::neutral(vec![[0.0; 3]; 2], vec![[0.0; 3]], 1.0, Z, 10.0).unwrap();
        assert_eq!(p.interaction(), 0.0);
        for n in 1..6 {
            assert_eq!(f_n(&p, n), 0.0);
        }
        assert_eq!(remainder(&p, 4), 0.0);
    }

    #[test]
    fn neutrality_and_closed_forms_on_random_configurations() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let p = random_pair(&mut rng);
            let d = p.separation();
            let scale = p.e2() * (1.0 + p.d_beta()).powi(3) * (p.positions_1().len() * p.positions_2().len()) as f64;
            let z1z2 = (p.z1() * p.z2()) as f64;
            assert!((f_n(&p, 0) / d + p.e2() * z1z2 / d).abs() <= 1e-12 * p.e2() * z1z2 / d);
            assert!(f_n(&p, 1).abs() <= 1e-12 * scale);
            assert!((f2_closed(&p) - f_n(&p, 2)).abs() <= 1e-10 * scale);
            assert!((f3_closed(&p) - f_n(&p, 3)).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn identity_report_on_seeded_configurations() {
        let configs = random_neutral_pairs(4, 100, 3, 1.0, 0.7, 50.0).unwrap();
        assert_eq!(configs, random_neutral_pairs(4, 100, 3, 1.0, 0.7, 50.0).unwrap());
        let r = identity_check(&configs).unwrap();
        assert!(r.monopole_cancellation <= 1e-12);
        assert!(r.dipole_term <= 1e-12);
        assert!(r.f2_closed_form <= 1e-10 && r.f3_closed_form <= 1e-10, "{r:?}");
        let charged = ClusterPair::new(vec![[0.0; 3]], vec![[0.0; 3]], 2, 1, 1.0, Z, 10.0).unwrap();
        assert!(identity_check(&[charged]).is_err());
        assert!(random_neutral_pairs(1, 3, 0, 1.0, 1.0, 10.0).is_err());
    }

    #[test]
    fn interaction_matches_direct_coulomb_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = random_pair(&mut rng).with_separation(6.0).unwrap();
            let d = p.separation();
            let e = p.direction();
            let x2 = [d * e[0], d * e[1], d * e[2]];
            let dist = |a: &Vec3, b: &Vec3| dot(&sub(a, b), &sub(a, b)).sqrt();
            let mut direct = (p.z1() * p.z2()) as f64 / d;
            for xi in p.positions_1() {
                direct -= p.z2() as f64 / dist(xi, &x2);
            }
            for xj in p.positions_2() {
                let at = [x2[0] + xj[0], x2[1] + xj[1], x2[2] + xj[2]];
                direct -= p.z1() as f64 / dist(&at, &[0.0; 3]);
                for xi in p.positions_1() {
                    direct += 1.0 / dist(xi, &at);
                }
            }
            assert!((p.interaction() - p.e2() * direct).abs() < 1e-12);
        }
    }

    #[test]
    fn parity_selection_of_expansion_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let p = random_pair(&mut rng);
            for n in 0..=6 {
                let flipped = parity_apply(ParityKind::C1C2, |q: &ClusterPair| f_n(q, n))(&p);
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert!((flipped - sign * f_n(&p, n)).abs() <= 1e-12 * (1.0 + f_n(&p, n).abs()));
            }
            let twice = parity_apply(ParityKind::C1, parity_apply(ParityKind::C1, |q: &ClusterPair| f3_closed(q)))(&p);
            assert_eq!(twice, f3_closed(&p));
        }
    }

    #[test]
    fn remainder_slopes() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let configs: Vec<ClusterPair> = (0..30)
            .map(|_| {
                let p1 = vec![random_point(&mut rng, 0.5)];
                let p2 = vec![random_point(&mut rng, 0.5)];
                ClusterPair::neutral(p1, p2, 1.0, random_unit(&mut rng), 100.0).unwrap()
            })
            .collect();
        let grid: Vec<f64> = (0..8).map(|i| 50.0 * 10f64.powf(i as f64 / 7.0)).collect();
        for k in 2..=5 {
            let report = remainder_check(&configs, k, &grid).unwrap();
            assert!((report.slope + (k as f64 + 1.0)).abs() <= 0.05, "k={k}: {}", report.slope);
            assert!(report.rows.iter().all(|r| r.max_remainder <= r.bound_value * (1.0 + 1e-12)));
        }
        let far = vec![ClusterPair::neutral(vec![[20.0, 0.0, 0.0]], vec![[0.0; 3]], 1.0, Z, 50.0).unwrap()];
        assert!(matches!(
            remainder_check(&far, 3, &grid),
            Err(MultipoleError::OutsideConvergence { .. })
        ));
    }
}
