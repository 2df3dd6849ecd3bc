//! Dispersion coefficients from sum-over-states resolvents on products of
//! truncated atomic spectra.
//!
//! With `φ` the product of atomic ground states and `R = (H̃ − μ)⁻¹` on the
//! complement of `φ`, the pair coefficients are `a₁ = ⟨f₂φ, R f₂φ⟩` and
//! `a₂ = ⟨f₃φ, R f₃φ⟩`, giving `E − μ ≈ −a₁/D⁶ − a₂/D⁸`. For three atoms the
//! triple-dipole term `a₃` adds `+a₃/d⁹` when the geometry is scaled by `d`.

mod atoms;
mod rspt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::multipole::{pair_term_poly, Poly, Vec3};
use crate::operators::OperatorError;
use crate::special::pairwise_sum;
use crate::spectra::SpectraError;

pub use atoms::{monomials, AtomBasis, Powers, ToyAtom, DEFAULT_MAX_DEGREE};
pub use rspt::{dipole_coupling_matrix, product_hamiltonian_matrix, rspt_oracle};

#[derive(Debug, thiserror::Error)]
pub enum VdwError {
    #[error("ground state of atom {atom} is degenerate (gap {gap:e}); the maximum over the ground space is not supported")]
    Degenerate { atom: usize, gap: f64 },
    #[error("source has component {component:e} on the μ-eigenspace")]
    Orthogonality { component: f64 },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

impl From<OperatorError> for VdwError {
    fn from(e: OperatorError) -> Self {
        VdwError::Spectra(e.into())
    }
}

/// Tensor product of atomic eigenbases, row-major over atoms.
#[derive(Debug, Clone)]
pub struct ProductBasis {
    atoms: Vec<AtomBasis>,
    dims: Vec<usize>,
    energies: Vec<f64>,
    mu: f64,
}

impl ProductBasis {
    /// Rejects atoms whose ground state is degenerate within `1e−10`.
    pub fn new(atoms: Vec<AtomBasis>) -> Result<Self, VdwError> {
        if atoms.is_empty() {
            return Err(VdwError::Invalid("product basis needs at least one atom".into()));
        }
        for (k, a) in atoms.iter().enumerate() {
            let e = a.energies();
            if e.len() > 1 {
                let gap = e[1] - e[0];
                if gap <= 1e-10 * (1.0 + e[0].abs()) {
                    return Err(VdwError::Degenerate { atom: k, gap });
                }
            }
        }
        let dims: Vec<usize> = atoms.iter().map(|a| a.len()).collect();
        let mut energies = vec![0.0];
        for a in &atoms {
            energies = energies.iter().flat_map(|&s| a.energies().iter().map(move |&e| s + e)).collect();
        }
        let mu = atoms.iter().map(|a| a.energies()[0]).sum();
        Ok(Self { atoms, dims, energies, mu })
    }

    pub fn atoms(&self) -> &[AtomBasis] {
        &self.atoms
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Separable energies `Σ_k E_{m_k}` per product state.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Sum of the atomic ground energies.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Product of the atomic ground states.
    pub fn ground(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        v[0] = 1.0;
        v
    }

    /// Applies a single-atom matrix on the factor `axis`.
    fn apply_axis(&self, m: &nalgebra::DMatrix<f64>, axis: usize, v: &[f64]) -> Vec<f64> {
        let n = self.dims[axis];
        let post: usize = self.dims[axis + 1..].iter().product();
        let block = n * post;
        let mut out = vec![0.0; v.len()];
        out.par_chunks_mut(block).zip(v.par_chunks(block)).for_each(|(o, src)| {
            for i in 0..n {
                let row = &mut o[i * post..(i + 1) * post];
                for j in 0..n {
                    let c = m[(i, j)];
                    if c == 0.0 {
                        continue;
                    }
                    let col = &src[j * post..(j + 1) * post];
                    row.iter_mut().zip(col).for_each(|(r, s)| *r += c * s);
                }
            }
        });
        out
    }

    /// Applies a polynomial in the coordinates of atoms `k` (first three
    /// variables) and `l` (last three).
    pub fn apply_pair(&self, poly: &Poly, k: usize, l: usize, v: &[f64]) -> Result<Vec<f64>, VdwError> {
        if k == l || k >= self.atoms.len() || l >= self.atoms.len() {
            return Err(VdwError::Invalid(format!("invalid atom pair ({k}, {l})")));
        }
        if v.len() != self.len() {
            return Err(VdwError::Invalid(format!("vector length {} != basis size {}", v.len(), self.len())));
        }
        let mut cache: std::collections::BTreeMap<Powers, Vec<f64>> = std::collections::BTreeMap::new();
        let mut out = vec![0.0; v.len()];
        for (key, &c) in poly.terms() {
            let alpha = [key[0], key[1], key[2]];
            let beta = [key[3], key[4], key[5]];
            let (Some(a), Some(b)) = (self.atoms[k].moment(alpha), self.atoms[l].moment(beta)) else {
                continue;
            };
            let inner = cache.entry(beta).or_insert_with(|| self.apply_axis(b, l, v));
            let w = self.apply_axis(a, k, inner);
            out.iter_mut().zip(&w).for_each(|(o, x)| *o += c * x);
        }
        Ok(out)
    }
}

/// `(H̃ − μ)⁻¹` by division in the product eigenbasis, zero on the μ-eigenspace.
///
/// Returns the image and the maximal residual of `(H̃ − μ)x` against the source.
pub fn resolvent_apply(basis: &ProductBasis, mu: f64, source: &[f64]) -> Result<(Vec<f64>, f64), VdwError> {
    if source.len() != basis.len() {
        return Err(VdwError::Invalid(format!("source length {} != basis size {}", source.len(), basis.len())));
    }
    let norm = source.iter().map(|s| s * s).sum::<f64>().sqrt();
    let kernel_tol = 1e-12 * (1.0 + mu.abs());
    let mut out = vec![0.0; source.len()];
    let mut residual: f64 = 0.0;
    for (i, (&s, &e)) in source.iter().zip(basis.energies()).enumerate() {
        let d = e - mu;
        if d.abs() <= kernel_tol {
            if s.abs() > 1e-10 * norm.max(1.0) {
                return Err(VdwError::Orthogonality { component: s });
            }
        } else {
            out[i] = s / d;
            residual = residual.max((d * out[i] - s).abs());
        }
    }
    Ok((out, residual))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let terms: Vec<f64> = a.par_iter().zip(b).map(|(x, y)| x * y).collect();
    pairwise_sum(&terms)
}

/// Orientation and coupling of a two-atom system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairGeometry {
    /// Unit vector from the first to the second nucleus.
    pub direction: Vec3,
    pub e2: f64,
}

impl PairGeometry {
    pub fn new(direction: Vec3, e2: f64) -> Result<Self, VdwError> {
        let n = (direction[0].powi(2) + direction[1].powi(2) + direction[2].powi(2)).sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(VdwError::Geometry(format!("direction {direction:?} is not a unit vector")));
        }
        if !(e2.is_finite() && e2 >= 0.0) {
            return Err(VdwError::Invalid(format!("e2 must be nonnegative, got {e2}")));
        }
        Ok(Self { direction, e2 })
    }

    pub fn along_z(e2: f64) -> Self {
        Self { direction: [0.0, 0.0, 1.0], e2 }
    }
}

/// Three nuclei with per-pair coupling multipliers for the pairs
/// (0,1), (1,2), (2,0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleGeometry {
    pub positions: [Vec3; 3],
    pub e2: f64,
    pub couplings: [f64; 3],
}

impl TriangleGeometry {
    /// Equilateral triangle of unit side in the plane spanned by x and z.
    pub fn equilateral(e2: f64) -> Self {
        Self {
            positions: [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 0.0, 0.75f64.sqrt()]],
            e2,
            couplings: [1.0; 3],
        }
    }

    fn pair_index(k: usize, l: usize) -> usize {
        match (k.min(l), k.max(l)) {
            (0, 1) => 0,
            (1, 2) => 1,
            _ => 2,
        }
    }

    /// Separation and unit direction from nucleus `k` to nucleus `l`.
    pub fn separation(&self, k: usize, l: usize) -> Result<(f64, Vec3), VdwError> {
        let (a, b) = (self.positions[k], self.positions[l]);
        let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if !(r > 1e-12) {
            return Err(VdwError::Geometry(format!("nuclei {k} and {l} coincide")));
        }
        Ok((r, [d[0] / r, d[1] / r, d[2] / r]))
    }
}

/// `⟨f_nφ, R f_nφ⟩` for the two-atom product, with the resolvent residual.
fn second_order(basis: &ProductBasis, n: usize, geom: &PairGeometry) -> Result<(f64, f64), VdwError> {
    if basis.atoms().len() != 2 {
        return Err(VdwError::Invalid("pair coefficients need exactly two atoms".into()));
    }
    let poly = pair_term_poly(n, &geom.direction, geom.e2);
    let source = basis.apply_pair(&poly, 0, 1, &basis.ground())?;
    let (image, residual) = resolvent_apply(basis, basis.mu(), &source)?;
    Ok((dot(&source, &image).max(0.0), residual))
}

/// Leading dispersion coefficient `‖R^{1/2} f₂φ‖²`.
pub fn compute_a1(basis: &ProductBasis, geom: &PairGeometry) -> Result<f64, VdwError> {
    Ok(second_order(basis, 2, geom)?.0)
}

/// Next coefficient `‖R^{1/2} f₃φ‖²`.
pub fn compute_a2(basis: &ProductBasis, geom: &PairGeometry) -> Result<f64, VdwError> {
    Ok(second_order(basis, 3, geom)?.0)
}

/// Triple-dipole coefficient for three atoms.
///
/// Sums `⟨R f^{kl}φ, f^{ln} R f^{nk}φ⟩ / (|D_kl|³|D_ln|³|D_nk|³)` over ordered
/// triples of distinct atoms. Each unordered pair enters the product once per
/// orientation, so this equals the third-order perturbation energy of the
/// pairwise dipole couplings for the geometry as given.
pub fn compute_a3(basis: &ProductBasis, geom: &TriangleGeometry) -> Result<f64, VdwError> {
    Ok(triple_dipole(basis, geom)?.0)
}

fn triple_dipole(basis: &ProductBasis, geom: &TriangleGeometry) -> Result<(f64, f64), VdwError> {
    if basis.atoms().len() != 3 {
        return Err(VdwError::Invalid("the three-body term needs exactly three atoms".into()));
    }
    let pairs = [(0usize, 1usize), (1, 2), (2, 0)];
    let mut polys = Vec::with_capacity(3);
    let mut images = Vec::with_capacity(3);
    let mut dist = [0.0; 3];
    let mut residual: f64 = 0.0;
    for (p, &(k, l)) in pairs.iter().enumerate() {
        let (r, e) = geom.separation(k, l)?;
        dist[p] = r;
        let poly = pair_term_poly(2, &e, geom.e2);
        let source = basis.apply_pair(&poly, k, l, &basis.ground())?;
        let (image, res) = resolvent_apply(basis, basis.mu(), &source)?;
        residual = residual.max(res);
        polys.push(poly);
        images.push(image);
    }
    let mut terms = Vec::with_capacity(6);
    for (k, l, n) in [(0, 1, 2), (1, 2, 0), (2, 0, 1), (0, 2, 1), (2, 1, 0), (1, 0, 2)] {
        let (kl, ln, nk) = (
            TriangleGeometry::pair_index(k, l),
            TriangleGeometry::pair_index(l, n),
            TriangleGeometry::pair_index(n, k),
        );
        let weight = geom.couplings[kl] * geom.couplings[ln] * geom.couplings[nk];
        if weight == 0.0 {
            terms.push(0.0);
            continue;
        }
        let (a, b) = (pairs[ln].0, pairs[ln].1);
        let middle = basis.apply_pair(&polys[ln], a, b, &images[nk])?;
        let denom = (dist[kl] * dist[ln] * dist[nk]).powi(3);
        terms.push(weight * dot(&images[kl], &middle) / denom);
    }
    Ok((pairwise_sum(&terms), residual))
}

/// One entry of the orthogonality battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerProductCheck {
    pub name: String,
    pub value: f64,
    /// Product of the norms of the two factors.
    pub scale: f64,
    pub relative: f64,
}

/// Inner products that vanish by parity and angular selection rules, with
/// `φ₂ = R f₂φ` and `φ₃ = R f₃φ`.
pub fn orthogonality_battery(basis: &ProductBasis, geom: &PairGeometry) -> Result<Vec<InnerProductCheck>, VdwError> {
    if basis.atoms().len() != 2 {
        return Err(VdwError::Invalid("the orthogonality battery needs exactly two atoms".into()));
    }
    let phi = basis.ground();
    let f: Vec<Poly> = (0..=5).map(|n| pair_term_poly(n, &geom.direction, geom.e2)).collect();
    let f_phi: Vec<Vec<f64>> = f.iter().map(|p| basis.apply_pair(p, 0, 1, &phi)).collect::<Result<_, _>>()?;
    let phi2 = resolvent_apply(basis, basis.mu(), &f_phi[2])?.0;
    let phi3 = resolvent_apply(basis, basis.mu(), &f_phi[3])?.0;
    let f2_phi2 = basis.apply_pair(&f[2], 0, 1, &phi2)?;
    let norm = |v: &[f64]| dot(v, v).sqrt();
    let check = |name: &str, a: &[f64], b: &[f64]| {
        let value = dot(a, b);
        let scale = norm(a) * norm(b);
        let relative = if scale > 0.0 { value.abs() / scale } else { value.abs() };
        InnerProductCheck { name: name.into(), value, scale, relative }
    };
    Ok(vec![
        check("<phi, f2 phi>", &phi, &f_phi[2]),
        check("<phi, f3 phi>", &phi, &f_phi[3]),
        check("<phi2, phi3>", &phi2, &phi3),
        check("<phi2, f3 phi>", &phi2, &f_phi[3]),
        check("<phi2, f5 phi>", &phi2, &f_phi[5]),
        check("<phi3, f2 phi>", &phi3, &f_phi[2]),
        check("<phi3, f4 phi>", &phi3, &f_phi[4]),
        check("<phi2, f2 phi2>", &phi2, &f2_phi2),
        check("<phi2, f4 phi>", &phi2, &f_phi[4]),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationPoint {
    pub n_keep: usize,
    pub a1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Geometry {
    Pair(PairGeometry),
    Triangle(TriangleGeometry),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VdwReport {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub n_keep: usize,
    pub truncation_curve: Vec<TruncationPoint>,
    /// Maximal resolvent residual per resolvent application.
    pub residuals: Vec<f64>,
    pub geometry: Geometry,
}

/// `a₁` over nested truncations from one set of nonnegative summands.
///
/// Summands are grouped by the highest kept atomic level they touch and
/// accumulated in that order, so the curve is monotone in floating point.
fn truncation_curve(
    atom: &AtomBasis,
    geom: &PairGeometry,
    curve: &[usize],
) -> Result<(Vec<TruncationPoint>, f64), VdwError> {
    let largest = curve.iter().copied().max().unwrap_or(1);
    if curve.windows(2).any(|w| w[1] <= w[0]) {
        return Err(VdwError::Invalid("truncation levels must be strictly increasing".into()));
    }
    let kept = atom.truncated(largest)?;
    let basis = ProductBasis::new(vec![kept.clone(), kept])?;
    let poly = pair_term_poly(2, &geom.direction, geom.e2);
    let source = basis.apply_pair(&poly, 0, 1, &basis.ground())?;
    let (image, residual) = resolvent_apply(&basis, basis.mu(), &source)?;
    let shells: Vec<f64> = (0..largest)
        .into_par_iter()
        .map(|s| {
            let mut terms = Vec::with_capacity(2 * s + 1);
            for m in 0..=s {
                terms.push(source[m * largest + s] * image[m * largest + s]);
                if m < s {
                    terms.push(source[s * largest + m] * image[s * largest + m]);
                }
            }
            pairwise_sum(&terms).max(0.0)
        })
        .collect();
    let mut points = Vec::with_capacity(curve.len());
    let mut total = 0.0;
    let mut next = 0;
    for &k in curve {
        while next < k {
            total += shells[next];
            next += 1;
        }
        points.push(TruncationPoint { n_keep: k, a1: total });
    }
    Ok((points, residual))
}

/// `a₁`, `a₂` and the `a₁` truncation curve for two copies of `atom`.
pub fn pair_report(
    atom: &AtomBasis,
    geom: &PairGeometry,
    n_keep: usize,
    curve: &[usize],
) -> Result<VdwReport, VdwError> {
    let basis = ProductBasis::new(vec![atom.truncated(n_keep)?, atom.truncated(n_keep)?])?;
    let (a1, r1) = second_order(&basis, 2, geom)?;
    let (a2, r2) = second_order(&basis, 3, geom)?;
    let mut residuals = vec![r1, r2];
    let truncation_curve = if curve.is_empty() {
        Vec::new()
    } else {
        let (points, r) = truncation_curve(atom, geom, curve)?;
        residuals.push(r);
        points
    };
    Ok(VdwReport { a1, a2, a3: 0.0, n_keep, truncation_curve, residuals, geometry: Geometry::Pair(*geom) })
}

/// Pair coefficients along the first side plus `a₃` for three copies of `atom`.
pub fn triangle_report(atom: &AtomBasis, geom: &TriangleGeometry, n_keep: usize) -> Result<VdwReport, VdwError> {
    let kept = atom.truncated(n_keep)?;
    let (_, e) = geom.separation(0, 1)?;
    let pair = PairGeometry::new(e, geom.e2)?;
    let two = ProductBasis::new(vec![kept.clone(), kept.clone()])?;
    let (a1, r1) = second_order(&two, 2, &pair)?;
    let (a2, r2) = second_order(&two, 3, &pair)?;
    let three = ProductBasis::new(vec![kept.clone(), kept.clone(), kept])?;
    let (a3, r3) = triple_dipole(&three, geom)?;
    Ok(VdwReport {
        a1,
        a2,
        a3,
        n_keep,
        truncation_curve: Vec::new(),
        residuals: vec![r1, r2, r3],
        geometry: Geometry::Triangle(*geom),
    })
}

/// `−a₁/D⁶ − a₂/D⁸ + a₃/D⁹` for `D > 0`; no odd power below `D⁻⁹` appears.
pub fn expansion_eval(report: &VdwReport, d: f64) -> f64 {
    -report.a1 / d.powi(6) - report.a2 / d.powi(8) + report.a3 / d.powi(9)
}
