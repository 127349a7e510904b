//! Multivariate polynomials with complex coefficients.
//!
//! Used as smooth test fields whose derivatives are known analytically, so
//! finite-difference results can be compared against exact values.

use rand::Rng;

use crate::C64;

/// Sum of `coef · Π x_i^{exp_i}` over `n` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub n: usize,
    pub terms: Vec<(C64, Vec<u32>)>,
}

impl Poly {
    pub fn zero(n: usize) -> Self {
        Poly { n, terms: Vec::new() }
    }

    pub fn constant(n: usize, c: C64) -> Self {
        Poly { n, terms: vec![(c, vec![0; n])] }
    }

    /// The coordinate function `x_i`.
    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Poly { n, terms: vec![(C64::new(1.0, 0.0), e)] }
    }

    /// Random polynomial of total degree `≤ degree` with real coefficients in
    /// `[-scale, scale]` (imaginary parts too when `complex`).
    pub fn random(rng: &mut impl Rng, n: usize, degree: u32, scale: f64, complex: bool) -> Self {
        let mut terms = Vec::new();
        for e in monomials(n, degree) {
            let re = rng.gen_range(-scale..=scale);
            let im = if complex { rng.gen_range(-scale..=scale) } else { 0.0 };
            terms.push((C64::new(re, im), e));
        }
        Poly { n, terms }
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        self.terms
            .iter()
            .map(|(c, e)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// Exact partial derivative in variable `i`.
    pub fn deriv(&self, i: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(_, e)| e[i] > 0)
            .map(|(c, e)| {
                let mut e2 = e.clone();
                e2[i] -= 1;
                (c * e[i] as f64, e2)
            })
            .collect();
        Poly { n: self.n, terms }
    }

    /// Euclidean Laplacian `Σ ∂_i²`.
    pub fn laplacian(&self) -> Self {
        let mut out = Poly::zero(self.n);
        for i in 0..self.n {
            out.terms.extend(self.deriv(i).deriv(i).terms);
        }
        out
    }

    pub fn scale(&self, c: C64) -> Self {
        Poly { n: self.n, terms: self.terms.iter().map(|(a, e)| (a * c, e.clone())).collect() }
    }

    pub fn add(&self, other: &Poly) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Poly { n: self.n, terms }
    }

    pub fn mul(&self, other: &Poly) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, ea) in &self.terms {
            for (b, eb) in &other.terms {
                terms.push((a * b, ea.iter().zip(eb).map(|(x, y)| x + y).collect()));
            }
        }
        Poly { n: self.n, terms }
    }
}

/// All exponent vectors in `n` variables of total degree `≤ degree`.
pub fn monomials(n: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur[i] = k;
            rec(i + 1, left - k, cur, out);
        }
        cur[i] = 0;
    }
    let mut out = Vec::new();
    rec(0, degree, &mut vec![0; n], &mut out);
    out
}
