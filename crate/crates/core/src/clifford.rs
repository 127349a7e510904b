//! Clifford algebras `Cl(r,s)` over a non-degenerate quadratic form.
//!
//! Conventions: `v² + q(v) = 0`, so a generator with `q(e_i) = +1` squares to
//! `−1`. The first `r` generators have `q = +1`, the last `s` have `q = −1`.
//! Elements are coefficient vectors over the `2ⁿ` basis blades; blade `mask`
//! has bit `i` set when `e_{i+1}` is a factor, factors in ascending order.
//! Scalars are complex; the `real` flag records whether only real scalars
//! were used to build an element.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DVector;
use rand::Rng;
use thiserror::Error;

use crate::algebra::{fro, kron, pauli};
use crate::{re, CMat, Orientation, RMat, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliffordError {
    #[error("signature ({0},{1}) too large (n ≤ {2})")]
    SignatureTooLarge(usize, usize, usize),
    #[error("signature mismatch")]
    SignatureMismatch,
    #[error("factor {0} is not a unit vector (q = {1})")]
    NotUnit(usize, f64),
    #[error("result leaves the vector space (non-vector residue {0})")]
    NotVector(f64),
    #[error("vector has {0} components, signature needs {1}")]
    WrongLength(usize, usize),
    #[error("unsupported signature size for this representation")]
    UnsupportedSize,
    #[error("signature is indefinite")]
    Indefinite,
}

pub const MAX_DIM: usize = 12;

/// Signature `(r, s)` of the quadratic form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signature {
    pub r: usize,
    pub s: usize,
}

impl Signature {
    pub fn new(r: usize, s: usize) -> Result<Self, CliffordError> {
        if r + s > MAX_DIM {
            return Err(CliffordError::SignatureTooLarge(r, s, MAX_DIM));
        }
        Ok(Signature { r, s })
    }

    pub fn n(&self) -> usize {
        self.r + self.s
    }

    /// `q(e_i)`, zero-based.
    pub fn q(&self, i: usize) -> f64 {
        if i < self.r {
            1.0
        } else {
            -1.0
        }
    }

    /// `β(u, v) = Σ q(e_i) u_i v_i`.
    pub fn beta(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).enumerate().map(|(i, (a, b))| self.q(i) * a * b).sum()
    }

    /// `q(v) = β(v, v)`.
    pub fn quad(&self, v: &[f64]) -> f64 {
        self.beta(v, v)
    }

    /// Diagonal matrix `η = diag(q(e_1), …, q(e_n))`.
    pub fn eta(&self) -> RMat {
        RMat::from_fn(self.n(), self.n(), |i, j| if i == j { self.q(i) } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        1 << self.n()
    }

    /// Every signature with `n ≤ max_n`.
    pub fn all_up_to(max_n: usize) -> Vec<Signature> {
        let mut out = Vec::new();
        for n in 0..=max_n {
            for r in 0..=n {
                out.push(Signature { r, s: n - r });
            }
        }
        out
    }
}

/// Sign from moving the factors of blade `b` past those of blade `a` into
/// ascending order.
fn reorder_sign(a: u32, b: u32) -> f64 {
    let mut a = a >> 1;
    let mut swaps = 0;
    while a != 0 {
        swaps += (a & b).count_ones();
        a >>= 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Product of two basis blades: `e_A e_B = sign · e_{A △ B}`.
pub fn blade_product(sig: Signature, a: u32, b: u32) -> (f64, u32) {
    let mut sign = reorder_sign(a, b);
    let common = a & b;
    for i in 0..sig.n() {
        if common & (1 << i) != 0 {
            sign *= -sig.q(i);
        }
    }
    (sign, a ^ b)
}

/// Element of `Cl(r,s)` in the blade basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordElement {
    pub sig: Signature,
    pub coeffs: Vec<C64>,
    pub real: bool,
}

impl CliffordElement {
    pub fn zero(sig: Signature) -> Self {
        CliffordElement { sig, coeffs: vec![re(0.0); sig.dim()], real: true }
    }

    pub fn scalar(sig: Signature, c: C64) -> Self {
        let mut z = Self::zero(sig);
        z.coeffs[0] = c;
        z.real = c.im == 0.0;
        z
    }

    pub fn one(sig: Signature) -> Self {
        Self::scalar(sig, re(1.0))
    }

    pub fn blade(sig: Signature, mask: u32, c: C64) -> Self {
        let mut z = Self::zero(sig);
        z.coeffs[mask as usize] = c;
        z.real = c.im == 0.0;
        z
    }

    /// Generator `e_{i+1}`.
    pub fn generator(sig: Signature, i: usize) -> Self {
        Self::blade(sig, 1 << i, re(1.0))
    }

    /// Real vector `Σ v_i e_i`.
    pub fn vector(sig: Signature, v: &[f64]) -> Result<Self, CliffordError> {
        if v.len() != sig.n() {
            return Err(CliffordError::WrongLength(v.len(), sig.n()));
        }
        let mut z = Self::zero(sig);
        for (i, &x) in v.iter().enumerate() {
            z.coeffs[1 << i] = re(x);
        }
        Ok(z)
    }

    pub fn from_coeffs(sig: Signature, coeffs: Vec<C64>) -> Self {
        assert_eq!(coeffs.len(), sig.dim());
        let real = coeffs.iter().all(|c| c.im == 0.0);
        CliffordElement { sig, coeffs, real }
    }

    pub fn coeff(&self, mask: u32) -> C64 {
        self.coeffs[mask as usize]
    }

    pub fn scale(&self, c: C64) -> Self {
        CliffordElement {
            sig: self.sig,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
            real: self.real && c.im == 0.0,
        }
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }

    fn map_blades(&self, f: impl Fn(u32) -> f64) -> Self {
        CliffordElement {
            sig: self.sig,
            coeffs: self.coeffs.iter().enumerate().map(|(m, c)| c * f(m as u32)).collect(),
            real: self.real,
        }
    }

    /// Grade-`k` part.
    pub fn grade(&self, k: u32) -> Self {
        self.map_blades(|m| if m.count_ones() == k { 1.0 } else { 0.0 })
    }

    /// `(even part, odd part)`.
    pub fn grade_parts(&self) -> (Self, Self) {
        (
            self.map_blades(|m| if m.count_ones() % 2 == 0 { 1.0 } else { 0.0 }),
            self.map_blades(|m| if m.count_ones() % 2 == 1 { 1.0 } else { 0.0 }),
        )
    }

    /// Grade involution `α`, induced by `v ↦ −v`.
    pub fn alpha(&self) -> Self {
        self.map_blades(|m| if m.count_ones() % 2 == 0 { 1.0 } else { -1.0 })
    }

    /// Reversal `φᵗ`: a grade-`p` blade picks up `(−1)^{p(p−1)/2}`.
    pub fn reverse(&self) -> Self {
        self.map_blades(|m| {
            let p = m.count_ones();
            if (p * p.saturating_sub(1) / 2) % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        })
    }

    /// Components of the grade-1 part.
    pub fn vector_part(&self) -> Vec<C64> {
        (0..self.sig.n()).map(|i| self.coeffs[1 << i]).collect()
    }

    /// Largest coefficient outside grade 1.
    pub fn non_vector_residue(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(m, _)| m.count_ones() != 1)
            .fold(0.0, |a, (_, z)| a.max(z.norm()))
    }
}

/// Clifford product; fails when signatures differ.
pub fn clifford_product(a: &CliffordElement, b: &CliffordElement) -> Result<CliffordElement, CliffordError> {
    if a.sig != b.sig {
        return Err(CliffordError::SignatureMismatch);
    }
    let sig = a.sig;
    let mut out = vec![re(0.0); sig.dim()];
    for (ma, ca) in a.coeffs.iter().enumerate() {
        if *ca == re(0.0) {
            continue;
        }
        for (mb, cb) in b.coeffs.iter().enumerate() {
            if *cb == re(0.0) {
                continue;
            }
            let (s, m) = blade_product(sig, ma as u32, mb as u32);
            out[m as usize] += ca * cb * s;
        }
    }
    Ok(CliffordElement { sig, coeffs: out, real: a.real && b.real })
}

/// Panics on signature mismatch; use [`clifford_product`] to handle it.
impl Mul for &CliffordElement {
    type Output = CliffordElement;
    fn mul(self, rhs: &CliffordElement) -> CliffordElement {
        clifford_product(self, rhs).expect("clifford product of mismatched signatures")
    }
}

impl Add for &CliffordElement {
    type Output = CliffordElement;
    fn add(self, rhs: &CliffordElement) -> CliffordElement {
        assert_eq!(self.sig, rhs.sig);
        CliffordElement {
            sig: self.sig,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
            real: self.real && rhs.real,
        }
    }
}

impl Sub for &CliffordElement {
    type Output = CliffordElement;
    fn sub(self, rhs: &CliffordElement) -> CliffordElement {
        assert_eq!(self.sig, rhs.sig);
        CliffordElement {
            sig: self.sig,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
            real: self.real && rhs.real,
        }
    }
}

impl Neg for &CliffordElement {
    type Output = CliffordElement;
    fn neg(self) -> CliffordElement {
        self.scale(re(-1.0))
    }
}

/// Sign of `η²` for `η = e_1⋯e_n`: `(−1)^{r + n(n−1)/2}`.
pub fn eta_square_sign(sig: Signature) -> f64 {
    let n = sig.n();
    if (sig.r + n * n.saturating_sub(1) / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Volume element `ω = i^m e_1⋯e_n` with `m ∈ {0,1}` chosen so that `ω² = 1`.
///
/// `Orientation::Negative` negates `ω`.
pub fn volume_element(sig: Signature, orientation: Orientation) -> CliffordElement {
    let top = (sig.dim() - 1) as u32;
    let c = if eta_square_sign(sig) > 0.0 { re(1.0) } else { C64::new(0.0, 1.0) };
    CliffordElement::blade(sig, top, c * orientation.sign())
}

/// `p± = (1 ± ω)/2`.
pub fn idempotents(sig: Signature, orientation: Orientation) -> (CliffordElement, CliffordElement) {
    let w = volume_element(sig, orientation);
    let one = CliffordElement::one(sig);
    ((&one + &w).scale(re(0.5)), (&one - &w).scale(re(0.5)))
}

/// Product of vectors with `q(v) = ±1`, kept together with its factors.
#[derive(Debug, Clone, PartialEq)]
pub struct PinElement {
    pub element: CliffordElement,
    pub factors: Vec<Vec<f64>>,
}

const UNIT_TOL: f64 = 1e-12;

impl PinElement {
    /// Empty product.
    pub fn identity(sig: Signature) -> Self {
        PinElement { element: CliffordElement::one(sig), factors: Vec::new() }
    }

    pub fn from_factors(sig: Signature, factors: Vec<Vec<f64>>) -> Result<Self, CliffordError> {
        let mut element = CliffordElement::one(sig);
        for (k, v) in factors.iter().enumerate() {
            let q = sig.quad(v);
            if v.len() != sig.n() {
                return Err(CliffordError::WrongLength(v.len(), sig.n()));
            }
            if (q.abs() - 1.0).abs() > UNIT_TOL {
                return Err(CliffordError::NotUnit(k, q));
            }
            element = &element * &CliffordElement::vector(sig, v)?;
        }
        Ok(PinElement { element, factors })
    }

    pub fn sig(&self) -> Signature {
        self.element.sig
    }

    /// Even number of factors.
    pub fn is_spin(&self) -> bool {
        self.factors.len() % 2 == 0
    }

    /// `−φ`, realised by prepending two factors whose product is `−1`.
    pub fn neg(&self) -> Self {
        let sig = self.sig();
        let mut e = vec![0.0; sig.n()];
        e[0] = 1.0;
        // e₁e₁ = −q(e₁); for q(e₁) = −1 use e₁(−e₁) = −1 instead.
        let second: Vec<f64> = if sig.q(0) > 0.0 { e.clone() } else { e.iter().map(|x| -x).collect() };
        let mut factors = vec![e, second];
        factors.extend(self.factors.iter().cloned());
        PinElement::from_factors(sig, factors).expect("unit factors")
    }

    /// `φ⁻¹ = v_p⁻¹⋯v_1⁻¹` with `v⁻¹ = −v / q(v)`.
    pub fn inverse(&self) -> CliffordElement {
        let sig = self.sig();
        let mut out = CliffordElement::one(sig);
        for v in self.factors.iter().rev() {
            let q = sig.quad(v);
            let vi = CliffordElement::vector(sig, v).expect("length checked").scale(re(-1.0 / q));
            out = &out * &vi;
        }
        out
    }

    /// Product of `q(v_i)` over the factors.
    pub fn q_product(&self) -> f64 {
        self.factors.iter().map(|v| self.sig().quad(v).signum()).product()
    }
}

/// Reflection formula `w − 2β(w,v)/q(v) · v` (twisted adjoint by a single vector).
pub fn reflect(sig: Signature, v: &[f64], w: &[f64]) -> Vec<f64> {
    let c = 2.0 * sig.beta(w, v) / sig.quad(v);
    w.iter().zip(v).map(|(wi, vi)| wi - c * vi).collect()
}

/// Twisted adjoint `Ãd_φ w = α(φ) w φ⁻¹`; the result must be a vector.
pub fn twisted_adjoint(phi: &PinElement, w: &[f64]) -> Result<Vec<f64>, CliffordError> {
    let sig = phi.sig();
    let wv = CliffordElement::vector(sig, w)?;
    let out = &(&phi.element.alpha() * &wv) * &phi.inverse();
    let res = out.non_vector_residue();
    let imag = out.vector_part().iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
    if res > 1e-9 || imag > 1e-9 {
        return Err(CliffordError::NotVector(res.max(imag)));
    }
    Ok(out.vector_part().iter().map(|z| z.re).collect())
}

/// Matrix of `Ãd_φ` on `V`: column `j` is the image of `e_j`.
pub fn pin_to_orthogonal(phi: &PinElement) -> Result<RMat, CliffordError> {
    let n = phi.sig().n();
    let mut m = RMat::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = twisted_adjoint(phi, &e)?;
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    Ok(m)
}

/// Residuals `(‖M(φ) − M(−φ)‖, ‖M η Mᵗ − η‖)`, max-entry norms scaled by
/// `max(1, ‖M‖²)`.
///
/// The scale is 1 for definite signatures; boosts in indefinite ones have
/// large entries and only relative accuracy is meaningful.
pub fn double_cover_residuals(phi: &PinElement) -> Result<(f64, f64), CliffordError> {
    let m = pin_to_orthogonal(phi)?;
    let mn = pin_to_orthogonal(&phi.neg())?;
    let eta = phi.sig().eta();
    let scale = m.abs().max().powi(2).max(1.0);
    let pres = (&m * &eta * m.transpose() - &eta).abs().max();
    Ok(((&m - &mn).abs().max() / scale, pres / scale))
}

/// `M(φ) = M(−φ)` and `M` preserves `η`, both within `tol`.
pub fn double_cover_check(phi: &PinElement, tol: f64) -> bool {
    matches!(double_cover_residuals(phi), Ok((a, b)) if a <= tol && b <= tol)
}

/// Random vector with `q(v) = ±1`.
pub fn random_unit_vector(rng: &mut impl Rng, sig: Signature) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..sig.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q = sig.quad(&v);
        if q.abs() > 0.05 {
            let k = q.abs().sqrt();
            return v.iter().map(|x| x / k).collect();
        }
    }
}

/// Random product of `k` unit vectors.
pub fn random_pin(rng: &mut impl Rng, sig: Signature, k: usize) -> PinElement {
    let factors = (0..k).map(|_| random_unit_vector(rng, sig)).collect();
    PinElement::from_factors(sig, factors).expect("unit factors")
}

/// Dimension of the span of all products of at most `n` generators.
pub fn span_dimension(sig: Signature) -> usize {
    let n = sig.n();
    let mut words: Vec<CliffordElement> = vec![CliffordElement::one(sig)];
    let mut frontier = words.clone();
    for _ in 0..n {
        let mut next = Vec::new();
        for w in &frontier {
            for i in 0..n {
                next.push(w * &CliffordElement::generator(sig, i));
            }
        }
        words.extend(next.iter().cloned());
        frontier = next;
    }
    let m = CMat::from_fn(sig.dim(), words.len(), |i, j| words[j].coeffs[i]);
    m.rank(1e-9)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepKind {
    Pauli,
    Constructed,
    LeftRegular,
}

/// Complex matrices `γ_1..γ_n` satisfying the Clifford relations of `sig`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRep {
    pub sig: Signature,
    pub gammas: Vec<CMat>,
    pub kind: RepKind,
}

impl MatrixRep {
    pub fn dim(&self) -> usize {
        self.gammas.first().map_or(1, |g| g.nrows())
    }

    /// Largest entry of `γ_iγ_j + γ_jγ_i + 2β(e_i,e_j) I` over all pairs.
    pub fn relations_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..self.gammas.len() {
            for j in 0..self.gammas.len() {
                let b = if i == j { self.sig.q(i) } else { 0.0 };
                let m = &self.gammas[i] * &self.gammas[j] + &self.gammas[j] * &self.gammas[i]
                    + CMat::identity(d, d) * re(2.0 * b);
                worst = worst.max(crate::max_abs(&m));
            }
        }
        worst
    }

    /// Image of the blade `e_A` (ascending product of generators).
    pub fn blade(&self, mask: u32) -> CMat {
        let d = self.dim();
        let mut m = CMat::identity(d, d);
        for i in 0..self.sig.n() {
            if mask & (1 << i) != 0 {
                m = &m * &self.gammas[i];
            }
        }
        m
    }

    /// Image of a Clifford element.
    pub fn act(&self, a: &CliffordElement) -> Result<CMat, CliffordError> {
        if a.sig != self.sig {
            return Err(CliffordError::SignatureMismatch);
        }
        let d = self.dim();
        let mut m = CMat::zeros(d, d);
        for (mask, c) in a.coeffs.iter().enumerate() {
            if *c != re(0.0) {
                m += self.blade(mask as u32) * *c;
            }
        }
        Ok(m)
    }

    /// Clifford action of the real vector `Σ v_i e_i`.
    pub fn vector(&self, v: &[f64]) -> CMat {
        let d = self.dim();
        let mut m = CMat::zeros(d, d);
        for (g, &x) in self.gammas.iter().zip(v) {
            m += g * re(x);
        }
        m
    }
}

/// σ¹, σ², σ³ as a representation of `Cl(0,3)`.
pub fn pauli_rep() -> MatrixRep {
    MatrixRep { sig: Signature { r: 0, s: 3 }, gammas: pauli().to_vec(), kind: RepKind::Pauli }
}

/// Kronecker-product construction for `n ≤ 8`, of size `2^⌊n/2⌋`.
///
/// Hermitian anticommuting `Γ_k` squaring to `I` are built from Pauli
/// matrices; `γ_k = iΓ_k` when `q(e_k) = +1` and `γ_k = Γ_k` otherwise. For
/// `(0,3)` this reproduces σ¹, σ², σ³.
pub fn constructed_gamma_rep(sig: Signature) -> Result<MatrixRep, CliffordError> {
    let n = sig.n();
    if n > 8 {
        return Err(CliffordError::UnsupportedSize);
    }
    let m = n / 2;
    let [x, y, z] = pauli();
    let id2 = CMat::identity(2, 2);
    let chain = |k: usize, mid: &CMat| {
        let mut out = CMat::identity(1, 1);
        for _ in 0..k {
            out = kron(&out, &z);
        }
        out = kron(&out, mid);
        for _ in k + 1..m {
            out = kron(&out, &id2);
        }
        out
    };
    let mut hermitian = Vec::with_capacity(n);
    for k in 0..m {
        hermitian.push(chain(k, &x));
        hermitian.push(chain(k, &y));
    }
    if n % 2 == 1 {
        let mut out = CMat::identity(1, 1);
        for _ in 0..m {
            out = kron(&out, &z);
        }
        hermitian.push(out);
    }
    let gammas = hermitian
        .into_iter()
        .enumerate()
        .map(|(k, g)| if sig.q(k) > 0.0 { g * C64::new(0.0, 1.0) } else { g })
        .collect();
    Ok(MatrixRep { sig, gammas, kind: RepKind::Constructed })
}

/// Left multiplication on the algebra itself, as real `2ⁿ×2ⁿ` matrices.
pub fn left_regular_rep(sig: Signature) -> MatrixRep {
    let d = sig.dim();
    let gammas = (0..sig.n())
        .map(|i| {
            let mut m = CMat::zeros(d, d);
            for b in 0..d as u32 {
                let (s, out) = blade_product(sig, 1 << i, b);
                m[(out as usize, b as usize)] = re(s);
            }
            m
        })
        .collect();
    MatrixRep { sig, gammas, kind: RepKind::LeftRegular }
}

/// Hermitian form invariant under the finite group `{±e_A}`:
/// `H = 2^{−(n+1)} Σ_γ γ̂† H₀ γ̂`, where `(φ, ψ) = φ† H ψ`.
///
/// Only definite signatures `(n,0)` and `(0,n)` are accepted.
pub fn invariant_inner_product(rep: &MatrixRep, seed: &CMat) -> Result<CMat, CliffordError> {
    if rep.sig.r != 0 && rep.sig.s != 0 {
        return Err(CliffordError::Indefinite);
    }
    let d = rep.dim();
    let mut h = CMat::zeros(d, d);
    // ±e_A contribute identically, so summing over masks and dividing by 2ⁿ
    // is the same average.
    for mask in 0..rep.sig.dim() as u32 {
        let g = rep.blade(mask);
        h += g.adjoint() * seed * &g;
    }
    Ok(h * re(1.0 / rep.sig.dim() as f64))
}

/// `(isometry, adjointness)` residuals of a form `H` for the generators.
///
/// Adjointness is `(ê_iφ, ψ) = −q(e_i)(φ, ê_iψ)`: anti-self-adjoint for
/// `q = +1`, self-adjoint for `q = −1`.
pub fn inner_product_residuals(rep: &MatrixRep, h: &CMat) -> (f64, f64) {
    let mut iso = 0.0f64;
    let mut adj = 0.0f64;
    for (i, g) in rep.gammas.iter().enumerate() {
        iso = iso.max(fro(&(g.adjoint() * h * g - h)));
        let sign = -rep.sig.q(i);
        adj = adj.max(fro(&(g.adjoint() * h - h * g * re(sign))));
    }
    (iso, adj)
}

/// Coefficient vector as an nalgebra column.
pub fn to_column(a: &CliffordElement) -> DVector<C64> {
    DVector::from_vec(a.coeffs.clone())
}
