//! Polynomials in the six coordinates of a one-electron-per-atom pair.

use std::collections::BTreeMap;

use super::Vec3;

/// Sparse polynomial in `(x₁, y₁, z₁, x₂, y₂, z₂)` keyed by exponent vectors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly {
    terms: BTreeMap<[u8; 6], f64>,
}

impl Poly {
    pub fn constant(c: f64) -> Self {
        let mut p = Self::default();
        p.add_term([0; 6], c);
        p
    }

    /// `Σ coeffs[v]·var_v`.
    pub fn linear(coeffs: [f64; 6]) -> Self {
        let mut p = Self::default();
        for (v, &c) in coeffs.iter().enumerate() {
            let mut key = [0u8; 6];
            key[v] = 1;
            p.add_term(key, c);
        }
        p
    }

    fn add_term(&mut self, key: [u8; 6], c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(key).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&key);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u8; 6], &f64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut p = self.clone();
        for (k, &c) in &other.terms {
            p.add_term(*k, c);
        }
        p
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut p = Poly::default();
        for (k, &c) in &self.terms {
            p.add_term(*k, s * c);
        }
        p
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut p = Poly::default();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                let mut key = [0u8; 6];
                for v in 0..6 {
                    key[v] = a[v] + b[v];
                }
                p.add_term(key, ca * cb);
            }
        }
        p
    }

    pub fn eval(&self, x: &[f64; 6]) -> f64 {
        self.terms
            .iter()
            .map(|(k, &c)| c * k.iter().zip(x).map(|(&e, &v)| v.powi(e as i32)).product::<f64>())
            .sum()
    }

    /// Keeps only the monomials free of the listed variables, which are set to zero.
    pub fn restrict(&self, zero: &[usize]) -> Poly {
        let mut p = Poly::default();
        for (k, &c) in &self.terms {
            if zero.iter().all(|&v| k[v] == 0) {
                p.add_term(*k, c);
            }
        }
        p
    }
}

/// Solid harmonic `|h|ⁿ Pₙ(ĥ·e)` for `h` a vector of linear polynomials,
/// from `n Rₙ = (2n−1)(h·e)Rₙ₋₁ − (n−1)|h|²Rₙ₋₂`.
fn solid_poly(n: usize, h: &[Poly; 3], e: &Vec3) -> Poly {
    let he = h[0].scale(e[0]).add(&h[1].scale(e[1])).add(&h[2].scale(e[2]));
    let hh = h[0].mul(&h[0]).add(&h[1].mul(&h[1])).add(&h[2].mul(&h[2]));
    let mut prev = Poly::constant(1.0);
    if n == 0 {
        return prev;
    }
    let mut cur = he.clone();
    for k in 2..=n {
        let kf = k as f64;
        let next = he
            .mul(&cur)
            .scale((2.0 * kf - 1.0) / kf)
            .add(&hh.mul(&prev).scale(-(kf - 1.0) / kf));
        prev = cur;
        cur = next;
    }
    cur
}

/// `f_n` of a neutral pair with one electron on each unit-charge nucleus,
/// as a polynomial in the electron coordinates relative to their nuclei.
pub fn pair_term_poly(n: usize, direction: &Vec3, e2: f64) -> Poly {
    let var = |v: usize, s: f64| {
        let mut c = [0.0; 6];
        c[v] = s;
        Poly::linear(c)
    };
    let x1 = [var(0, 1.0), var(1, 1.0), var(2, 1.0)];
    let minus_x2 = [var(3, -1.0), var(4, -1.0), var(5, -1.0)];
    let diff = [x1[0].add(&minus_x2[0]), x1[1].add(&minus_x2[1]), x1[2].add(&minus_x2[2])];
    solid_poly(n, &x1, direction)
        .add(&solid_poly(n, &minus_x2, direction))
        .scale(-1.0)
        .add(&solid_poly(n, &diff, direction))
        .scale(e2)
}
