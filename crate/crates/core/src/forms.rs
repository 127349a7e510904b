//! Exterior calculus on one coordinate chart.
//!
//! A [`Form`] of degree `p` on an `n`-dimensional chart is a closure returning
//! its `C(n,p)` components, indexed by strictly increasing index tuples in
//! lexicographic order (see [`tuples`]). Components are generic over
//! [`Coeff`], so the same code handles scalar forms and matrix-valued forms.
//!
//! Wedge products and evaluation on vectors use the determinant convention:
//! `(φ₁∧⋯∧φ_p)(w₁,…,w_p) = det⟨φ_i, w_j⟩`, with no `1/p!`.
//! Derivatives are central differences with an explicit step `h`.

use std::sync::Arc;

use thiserror::Error;

use crate::clifford::Signature;
use crate::{re, CMat, Orientation, RMat, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormsError {
    #[error("empty or inverted chart box")]
    EmptyBox,
    #[error("step h = {0} must be positive and much smaller than the box")]
    BadStep(f64),
    #[error("degree {0} exceeds dimension {1}")]
    DegreeOverflow(usize, usize),
    #[error("degenerate metric (det = {0})")]
    DegenerateMetric(f64),
    #[error("metric is not symmetric (asymmetry {0})")]
    AsymmetricMetric(f64),
    #[error("metric signature {found:?} differs from declared {declared:?}")]
    SignatureChanged { declared: Signature, found: Signature },
    #[error("self-dual split needs n = 2m, p = m and (−1)^(s+m) = 1")]
    NoSelfDualSplit,
    #[error("expected a degree-{expected} form, got degree {got}")]
    WrongDegree { expected: usize, got: usize },
    #[error("point lies outside the chart box")]
    OutsideBox,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Values that form components may take.
pub trait Coeff: Clone + Send + Sync + 'static {
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn scale(&self, c: f64) -> Self;
    fn zero_like(&self) -> Self;
    fn norm(&self) -> f64;
}

impl Coeff for C64 {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn zero_like(&self) -> Self {
        re(0.0)
    }
    fn norm(&self) -> f64 {
        C64::norm(*self)
    }
}

impl Coeff for CMat {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn scale(&self, c: f64) -> Self {
        self * re(c)
    }
    fn zero_like(&self) -> Self {
        CMat::zeros(self.nrows(), self.ncols())
    }
    fn norm(&self) -> f64 {
        crate::max_abs(self)
    }
}

/// Axis-aligned coordinate box with a finite-difference step.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub h: f64,
}

impl Chart {
    /// Box `[lo, hi]` with default step `1e-5 ·` diameter.
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, FormsError> {
        if lo.len() != hi.len() || lo.is_empty() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(FormsError::EmptyBox);
        }
        let diam = lo.iter().zip(&hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
        Ok(Chart { lo, hi, h: 1e-5 * diam })
    }

    /// Cube `[a, b]ⁿ`.
    pub fn cube(n: usize, a: f64, b: f64) -> Result<Self, FormsError> {
        Self::new(vec![a; n], vec![b; n])
    }

    pub fn with_h(mut self, h: f64) -> Result<Self, FormsError> {
        let min_extent = self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min);
        if !(h > 0.0) || h > 1e-1 * min_extent {
            return Err(FormsError::BadStep(h));
        }
        self.h = h;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Fails unless the `depth`-fold central stencil around `x` stays in the box.
    pub fn check_stencil(&self, x: &[f64], depth: usize) -> Result<(), FormsError> {
        let r = self.h * depth as f64;
        let ok = x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *a <= v - r && v + r <= *b);
        if ok {
            Ok(())
        } else {
            Err(FormsError::OutsideBox)
        }
    }

    /// Tensor grid of `k` interior points per axis at fractions `(i+1)/(k+1)`.
    pub fn interior_grid(&self, k: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut out = Vec::new();
        let total = k.pow(n as u32);
        for idx in 0..total {
            let mut rem = idx;
            let x = (0..n)
                .map(|a| {
                    let i = rem % k;
                    rem /= k;
                    self.lo[a] + (self.hi[a] - self.lo[a]) * (i + 1) as f64 / (k + 1) as f64
                })
                .collect();
            out.push(x);
        }
        out
    }
}

/// `C(n, p)`.
pub fn binomial(n: usize, p: usize) -> usize {
    if p > n {
        return 0;
    }
    (0..p).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Strictly increasing `p`-tuples from `0..n` in lexicographic order.
pub fn tuples(n: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < left {
                break;
            }
            cur.push(i);
            rec(i + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, p, &mut Vec::new(), &mut out);
    out
}

fn mask_of(t: &[usize]) -> u32 {
    t.iter().fold(0, |m, &i| m | (1 << i))
}

/// Position of an increasing tuple in [`tuples`]`(n, t.len())`.
pub fn tuple_index(n: usize, t: &[usize]) -> usize {
    tuples(n, t.len()).iter().position(|u| u == t).expect("strictly increasing tuple within range")
}

/// Sign of the permutation sorting the concatenation `I ++ J` (disjoint masks).
pub fn merge_sign(i: u32, j: u32) -> f64 {
    let mut a = i >> 1;
    let mut swaps = 0;
    while a != 0 {
        swaps += (a & j).count_ones();
        a >>= 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub type Eval<T> = Arc<dyn Fn(&[f64]) -> Vec<T> + Send + Sync>;

/// Degree-`p` form on an `n`-dimensional chart.
#[derive(Clone)]
pub struct Form<T: Coeff> {
    pub n: usize,
    pub p: usize,
    eval: Eval<T>,
}

/// Scalar (complex) form.
pub type PForm = Form<C64>;
/// Matrix-valued form, e.g. a gauge potential or curvature.
pub type MatForm = Form<CMat>;

impl<T: Coeff> std::fmt::Debug for Form<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Form(n={}, p={})", self.n, self.p)
    }
}

impl<T: Coeff> Form<T> {
    /// `f` must return `C(n,p)` components in [`tuples`] order.
    pub fn new(n: usize, p: usize, f: impl Fn(&[f64]) -> Vec<T> + Send + Sync + 'static) -> Result<Self, FormsError> {
        if p > n {
            return Err(FormsError::DegreeOverflow(p, n));
        }
        Ok(Form { n, p, eval: Arc::new(f) })
    }

    pub fn at(&self, x: &[f64]) -> Vec<T> {
        (self.eval)(x)
    }

    pub fn component(&self, t: &[usize], x: &[f64]) -> T {
        self.at(x)[tuple_index(self.n, t)].clone()
    }

    pub fn len(&self) -> usize {
        binomial(self.n, self.p)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn add(&self, o: &Form<T>) -> Form<T> {
        assert_eq!((self.n, self.p), (o.n, o.p));
        let (a, b) = (self.clone(), o.clone());
        Form { n: self.n, p: self.p, eval: Arc::new(move |x| a.at(x).iter().zip(b.at(x)).map(|(u, v)| u.add(&v)).collect()) }
    }

    pub fn sub(&self, o: &Form<T>) -> Form<T> {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Form<T> {
        let a = self.clone();
        Form { n: self.n, p: self.p, eval: Arc::new(move |x| a.at(x).iter().map(|u| u.scale(c)).collect()) }
    }

    /// Applies `f` to every component.
    pub fn map<U: Coeff>(&self, f: impl Fn(&T) -> U + Send + Sync + 'static) -> Form<U> {
        let a = self.clone();
        Form { n: self.n, p: self.p, eval: Arc::new(move |x| a.at(x).iter().map(&f).collect()) }
    }

    /// Largest component norm at `x`.
    pub fn max_norm_at(&self, x: &[f64]) -> f64 {
        self.at(x).iter().fold(0.0, |a, c| a.max(c.norm()))
    }

    /// Largest component norm over sample points.
    pub fn max_norm(&self, samples: &[Vec<f64>]) -> f64 {
        samples.iter().fold(0.0, |a, x| a.max(self.max_norm_at(x)))
    }
}

impl PForm {
    /// Constant form with the given components.
    pub fn constant(n: usize, p: usize, comps: Vec<C64>) -> Result<PForm, FormsError> {
        if comps.len() != binomial(n, p) {
            return Err(FormsError::DimensionMismatch("component count".into()));
        }
        Form::new(n, p, move |_| comps.clone())
    }

    /// `dx^{i₁}∧⋯∧dx^{i_p}` for an increasing tuple.
    pub fn basis(n: usize, t: &[usize]) -> PForm {
        let k = tuple_index(n, t);
        let len = binomial(n, t.len());
        Form::new(n, t.len(), move |_| {
            let mut v = vec![re(0.0); len];
            v[k] = re(1.0);
            v
        })
        .expect("degree within range")
    }

    /// 0-form from a scalar function.
    pub fn function(n: usize, f: impl Fn(&[f64]) -> C64 + Send + Sync + 'static) -> PForm {
        Form::new(n, 0, move |x| vec![f(x)]).expect("degree 0")
    }

    /// Value on vectors `w_1..w_p` with the determinant convention.
    pub fn eval_on(&self, x: &[f64], ws: &[Vec<f64>]) -> C64 {
        eval_on(self.n, self.p, &self.at(x), ws)
    }
}

/// `Σ_I α_I det[dx^{i_a}(w_b)]` for coefficient vector `coeffs`.
pub fn eval_on(n: usize, p: usize, coeffs: &[C64], ws: &[Vec<f64>]) -> C64 {
    assert_eq!(ws.len(), p);
    let mut out = re(0.0);
    for (k, t) in tuples(n, p).iter().enumerate() {
        let m = RMat::from_fn(p, p, |a, b| ws[b][t[a]]);
        out += coeffs[k] * m.determinant();
    }
    out
}

/// Pointwise wedge of coefficient vectors with a product `mul`; requires `p + q ≤ n`.
pub fn wedge_coeffs<A, B, V: Coeff>(n: usize, p: usize, a: &[A], q: usize, b: &[B], mul: impl Fn(&A, &B) -> V) -> Vec<V> {
    let tp = tuples(n, p);
    let tq = tuples(n, q);
    let tr = tuples(n, p + q);
    let mut out: Vec<Option<V>> = vec![None; tr.len()];
    for (i, ti) in tp.iter().enumerate() {
        let mi = mask_of(ti);
        for (j, tj) in tq.iter().enumerate() {
            let mj = mask_of(tj);
            if mi & mj != 0 {
                continue;
            }
            let term = mul(&a[i], &b[j]).scale(merge_sign(mi, mj));
            let k = tr.iter().position(|u| mask_of(u) == mi | mj).expect("merged tuple");
            out[k] = Some(match out[k].take() {
                Some(acc) => acc.add(&term),
                None => term,
            });
        }
    }
    // every (p+q)-tuple splits at least one way
    out.into_iter().map(|v| v.expect("each output tuple receives a term")).collect()
}

/// Wedge product of scalar forms.
pub fn wedge(a: &PForm, b: &PForm) -> Result<PForm, FormsError> {
    wedge_with(a, b, |x: &C64, y: &C64| x * y)
}

/// Wedge product with a custom component product (e.g. matrix multiplication).
pub fn wedge_with<A: Coeff, B: Coeff, V: Coeff>(
    a: &Form<A>,
    b: &Form<B>,
    mul: impl Fn(&A, &B) -> V + Send + Sync + 'static,
) -> Result<Form<V>, FormsError> {
    if a.n != b.n {
        return Err(FormsError::DimensionMismatch("wedge of forms on different charts".into()));
    }
    let (n, p, q) = (a.n, a.p, b.p);
    if p + q > n {
        return Err(FormsError::DegreeOverflow(p + q, n));
    }
    let (a, b) = (a.clone(), b.clone());
    Form::new(n, p + q, move |x| wedge_coeffs(n, p, &a.at(x), q, &b.at(x), &mul))
}

/// Central-difference partial derivatives of all components: `out[i][k] = ∂_i a_k`.
pub fn partials<T: Coeff>(a: &Form<T>, x: &[f64], h: f64) -> Vec<Vec<T>> {
    let mut xp = x.to_vec();
    (0..a.n)
        .map(|i| {
            xp[i] = x[i] + h;
            let up = a.at(&xp);
            xp[i] = x[i] - h;
            let dn = a.at(&xp);
            xp[i] = x[i];
            up.iter().zip(&dn).map(|(u, d)| u.sub(d).scale(0.5 / h)).collect()
        })
        .collect()
}

/// Exterior derivative `(da)_J = Σ_k (−1)^k ∂_{j_k} a_{J∖j_k}` by central differences.
pub fn ext_d<T: Coeff>(a: &Form<T>, h: f64) -> Result<Form<T>, FormsError> {
    let (n, p) = (a.n, a.p);
    if p + 1 > n {
        return Err(FormsError::DegreeOverflow(p + 1, n));
    }
    let a = a.clone();
    let tp1 = tuples(n, p + 1);
    let tp = tuples(n, p);
    // For each output tuple, list (sign, direction, input index).
    let plan: Vec<Vec<(f64, usize, usize)>> = tp1
        .iter()
        .map(|j| {
            (0..j.len())
                .map(|k| {
                    let rest: Vec<usize> = j.iter().enumerate().filter(|(m, _)| *m != k).map(|(_, &v)| v).collect();
                    let idx = tp.iter().position(|u| *u == rest).expect("sub-tuple");
                    (if k % 2 == 0 { 1.0 } else { -1.0 }, j[k], idx)
                })
                .collect()
        })
        .collect();
    Form::new(n, p + 1, move |x| {
        let d = partials(&a, x, h);
        plan.iter()
            .map(|terms| {
                let mut acc = d[terms[0].1][terms[0].2].scale(terms[0].0);
                for &(s, i, k) in &terms[1..] {
                    acc = acc.add(&d[i][k].scale(s));
                }
                acc
            })
            .collect()
    })
}

pub type VectorField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Lie bracket `[X,Y]^k = X^j ∂_j Y^k − Y^j ∂_j X^k` by central differences.
pub fn lie_bracket(x: &VectorField, y: &VectorField, h: f64) -> VectorField {
    let (x, y) = (x.clone(), y.clone());
    Arc::new(move |p: &[f64]| {
        let xv = x(p);
        let yv = y(p);
        let dir = |f: &VectorField, v: &[f64]| -> Vec<f64> {
            let a: Vec<f64> = p.iter().zip(v).map(|(pi, vi)| pi + h * vi).collect();
            let b: Vec<f64> = p.iter().zip(v).map(|(pi, vi)| pi - h * vi).collect();
            f(&a).iter().zip(f(&b)).map(|(u, w)| (u - w) / (2.0 * h)).collect()
        };
        dir(&y, &xv).iter().zip(dir(&x, &yv)).map(|(a, b)| a - b).collect()
    })
}

/// Exterior derivative through the invariant formula on a frame `X_a = Σ_i F_{ia} ∂_i`.
///
/// `dα(X_1,…,X_{p+1}) = Σ_i (−1)^{i+1} X_i(α(…X̂_i…)) + Σ_{i<j} (−1)^{i+j} α([X_i,X_j], …X̂_i…X̂_j…)`
/// is evaluated for every increasing frame tuple, then converted back to
/// coordinate components. Brackets and directional derivatives use step `h`.
/// With the coordinate frame this reproduces [`ext_d`].
pub fn ext_d_frame(a: &PForm, frame: Arc<dyn Fn(&[f64]) -> RMat + Send + Sync>, h: f64) -> Result<PForm, FormsError> {
    let (n, p) = (a.n, a.p);
    if p + 1 > n {
        return Err(FormsError::DegreeOverflow(p + 1, n));
    }
    let a = a.clone();
    let fields: Vec<VectorField> = (0..n)
        .map(|c| {
            let fr = frame.clone();
            let f: VectorField = Arc::new(move |x: &[f64]| fr(x).column(c).iter().copied().collect());
            f
        })
        .collect();
    let brackets: Vec<Vec<VectorField>> =
        (0..n).map(|i| (0..n).map(|j| lie_bracket(&fields[i], &fields[j], h)).collect()).collect();
    let tq = tuples(n, p + 1);
    Form::new(n, p + 1, move |x| {
        let fx = frame(x);
        let col = |c: usize| -> Vec<f64> { fx.column(c).iter().copied().collect() };
        let frame_vals: Vec<C64> = tq
            .iter()
            .map(|t| {
                let mut acc = re(0.0);
                for i in 0..t.len() {
                    let xi = col(t[i]);
                    let rest_idx: Vec<usize> = t.iter().enumerate().filter(|(m, _)| *m != i).map(|(_, &c)| c).collect();
                    let f = |y: &[f64]| {
                        let fy = frame(y);
                        let ws: Vec<Vec<f64>> = rest_idx.iter().map(|&c| fy.column(c).iter().copied().collect()).collect();
                        eval_on(n, p, &a.at(y), &ws)
                    };
                    let yp: Vec<f64> = x.iter().zip(&xi).map(|(u, v)| u + h * v).collect();
                    let ym: Vec<f64> = x.iter().zip(&xi).map(|(u, v)| u - h * v).collect();
                    let deriv = (f(&yp) - f(&ym)) / (2.0 * h);
                    let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                    acc += deriv * s;
                }
                for i in 0..t.len() {
                    for j in i + 1..t.len() {
                        let mut ws = vec![brackets[t[i]][t[j]](x)];
                        for (m, &c) in t.iter().enumerate() {
                            if m != i && m != j {
                                ws.push(col(c));
                            }
                        }
                        let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                        acc += eval_on(n, p, &a.at(x), &ws) * s;
                    }
                }
                acc
            })
            .collect();
        // frame_vals_A = Σ_J (dα)_J det F[J,A]  ⇒  solve for (dα)_J.
        let lam = exterior_power(&fx, p + 1);
        let lt = lam.transpose().map(re);
        let rhs = nalgebra::DVector::from_vec(frame_vals);
        let sol = lt.lu().solve(&rhs).unwrap_or_else(|| nalgebra::DVector::from_element(tq.len(), re(f64::NAN)));
        sol.iter().copied().collect()
    })
}

/// `p`-th exterior power: entry `[I, J] = det M[I, J]` over increasing tuples.
pub fn exterior_power(m: &RMat, p: usize) -> RMat {
    let tr = tuples(m.nrows(), p);
    let tc = tuples(m.ncols(), p);
    RMat::from_fn(tr.len(), tc.len(), |a, b| {
        if p == 0 {
            return 1.0;
        }
        RMat::from_fn(p, p, |i, j| m[(tr[a][i], tc[b][j])]).determinant()
    })
}

/// Pseudo-Riemannian metric field `g_ij(x)` of fixed signature `(r, s)`.
#[derive(Clone)]
pub struct MetricField {
    pub n: usize,
    pub sig: Signature,
    g: Arc<dyn Fn(&[f64]) -> RMat + Send + Sync>,
}

impl std::fmt::Debug for MetricField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MetricField(n={}, sig=({},{}))", self.n, self.sig.r, self.sig.s)
    }
}

/// Counts of positive and negative eigenvalues of a symmetric matrix.
pub fn inertia(g: &RMat) -> (usize, usize, usize) {
    let eig = g.clone().symmetric_eigenvalues();
    let scale = eig.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let pos = eig.iter().filter(|v| **v > 1e-12 * scale).count();
    let neg = eig.iter().filter(|v| **v < -1e-12 * scale).count();
    (pos, neg, eig.len() - pos - neg)
}

impl MetricField {
    pub fn new(n: usize, sig: Signature, g: impl Fn(&[f64]) -> RMat + Send + Sync + 'static) -> Self {
        MetricField { n, sig, g: Arc::new(g) }
    }

    /// Constant metric; the signature is read off the matrix.
    pub fn constant(g: RMat) -> Result<Self, FormsError> {
        let (pos, neg, zero) = inertia(&g);
        if zero > 0 {
            return Err(FormsError::DegenerateMetric(g.determinant()));
        }
        let n = g.nrows();
        let m = MetricField::new(n, Signature { r: pos, s: neg }, move |_| g.clone());
        m.check(&vec![0.0; n])?;
        Ok(m)
    }

    pub fn euclidean(n: usize) -> Self {
        Self::constant(RMat::identity(n, n)).expect("identity metric")
    }

    /// `diag(1, −1, −1, −1)` on `(t, x, y, z)`.
    pub fn minkowski() -> Self {
        Self::constant(RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0, -1.0, -1.0]))).expect("Minkowski metric")
    }

    pub fn at(&self, x: &[f64]) -> RMat {
        (self.g)(x)
    }

    /// Symmetric, non-degenerate and of the declared signature at `x`.
    pub fn check(&self, x: &[f64]) -> Result<(), FormsError> {
        let g = self.at(x);
        let asym = (&g - g.transpose()).abs().max();
        if asym > 1e-12 * g.abs().max().max(1.0) {
            return Err(FormsError::AsymmetricMetric(asym));
        }
        let (pos, neg, zero) = inertia(&g);
        if zero > 0 {
            return Err(FormsError::DegenerateMetric(g.determinant()));
        }
        let found = Signature { r: pos, s: neg };
        if found != self.sig {
            return Err(FormsError::SignatureChanged { declared: self.sig, found });
        }
        Ok(())
    }

    pub fn inverse_at(&self, x: &[f64]) -> Result<RMat, FormsError> {
        let g = self.at(x);
        let det = g.determinant();
        g.try_inverse().ok_or(FormsError::DegenerateMetric(det))
    }
}

/// Orthonormal coframe of a metric by modified Gram-Schmidt on `dx^i`.
///
/// Covectors are taken in `order`; at every step the next candidate with
/// positive norm is accepted first, then negative ones. Returns `h` with rows
/// `θ^a = Σ_i h_{ai} dx^i` and the norms `η^{aa} = ±1`.
pub fn orthonormal_coframe(g: &RMat, order: &[usize]) -> Result<(RMat, Vec<f64>), FormsError> {
    let n = g.nrows();
    let ginv = g.clone().try_inverse().ok_or(FormsError::DegenerateMetric(g.determinant()))?;
    let ip = |u: &[f64], v: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += u[i] * ginv[(i, j)] * v[j];
            }
        }
        s
    };
    let scale = ginv.abs().max();
    let mut cands: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut norms: Vec<f64> = Vec::new();
    while basis.len() < n {
        for c in cands.iter_mut() {
            for (b, &nb) in basis.iter().zip(&norms) {
                let k = ip(c, b) * nb;
                for i in 0..n {
                    c[i] -= k * b[i];
                }
            }
        }
        let tol = 1e-10 * scale;
        let pick = cands
            .iter()
            .position(|c| ip(c, c) > tol)
            .or_else(|| cands.iter().position(|c| ip(c, c) < -tol));
        let chosen = match pick {
            Some(k) => cands.remove(k),
            None => {
                // All remaining candidates are null; a sum of two with nonzero
                // pairing is not.
                let mut found = None;
                'outer: for a in 0..cands.len() {
                    for b in a + 1..cands.len() {
                        if ip(&cands[a], &cands[b]).abs() > tol {
                            found = Some((a, b));
                            break 'outer;
                        }
                    }
                }
                let (a, b) = found.ok_or(FormsError::DegenerateMetric(g.determinant()))?;
                let sum: Vec<f64> = cands[a].iter().zip(&cands[b]).map(|(x, y)| x + y).collect();
                cands.remove(a);
                sum
            }
        };
        let nn = ip(&chosen, &chosen);
        let k = nn.abs().sqrt();
        basis.push(chosen.iter().map(|x| x / k).collect());
        norms.push(nn.signum());
    }
    let h = RMat::from_fn(n, n, |a, i| basis[a][i]);
    Ok((h, norms))
}

/// Matrix of the Hodge star from `p`-forms to `(n−p)`-forms at one point.
///
/// Built from an orthonormal coframe: `*θ^I = σ_IJ σ_h (Π_{a∈I} η^{aa}) θ^J`,
/// `J` the ascending complement, `σ_h = sign det h`. Coframe ordering affects
/// only intermediate values.
pub fn hodge_matrix(g: &RMat, p: usize, orientation: Orientation) -> Result<RMat, FormsError> {
    let n = g.nrows();
    hodge_matrix_ordered(g, p, orientation, &(0..n).collect::<Vec<_>>())
}

/// [`hodge_matrix`] with an explicit Gram-Schmidt input order.
pub fn hodge_matrix_ordered(g: &RMat, p: usize, orientation: Orientation, order: &[usize]) -> Result<RMat, FormsError> {
    let n = g.nrows();
    if p > n {
        return Err(FormsError::DegreeOverflow(p, n));
    }
    let (h, eta) = orthonormal_coframe(g, order)?;
    let sigma_h = h.determinant().signum();
    let pmat = h.clone().try_inverse().ok_or(FormsError::DegenerateMetric(g.determinant()))?;
    let tp = tuples(n, p);
    let tq = tuples(n, n - p);
    let full = (1u32 << n) - 1;
    let mut s_theta = RMat::zeros(tq.len(), tp.len());
    for (a, t) in tp.iter().enumerate() {
        let m = mask_of(t);
        let comp = full ^ m;
        let b = tq.iter().position(|u| mask_of(u) == comp).expect("complement");
        let eta_prod: f64 = t.iter().map(|&i| eta[i]).product();
        s_theta[(b, a)] = merge_sign(m, comp) * sigma_h * eta_prod * orientation.sign();
    }
    let to_theta = exterior_power(&pmat, p).transpose();
    let from_theta = exterior_power(&h, n - p).transpose();
    Ok(from_theta * s_theta * to_theta)
}

/// Inner product matrix on `p`-forms: `⟨dx^I, dx^J⟩ = det g^{-1}[I, J]`.
pub fn form_inner_matrix(g: &RMat, p: usize) -> Result<RMat, FormsError> {
    let ginv = g.clone().try_inverse().ok_or(FormsError::DegenerateMetric(g.determinant()))?;
    Ok(exterior_power(&ginv, p))
}

fn apply_real<T: Coeff>(m: &RMat, v: &[T]) -> Vec<T> {
    (0..m.nrows())
        .map(|i| {
            let mut acc = v[0].zero_like();
            for (j, c) in v.iter().enumerate() {
                let w = m[(i, j)];
                if w != 0.0 {
                    acc = acc.add(&c.scale(w));
                }
            }
            acc
        })
        .collect()
}

/// Hodge star of a field; a degenerate metric sample yields NaN components.
pub fn hodge_star<T: Coeff>(a: &Form<T>, g: &MetricField, orientation: Orientation) -> Result<Form<T>, FormsError> {
    if a.n != g.n {
        return Err(FormsError::DimensionMismatch("metric and form dimensions".into()));
    }
    let (n, p) = (a.n, a.p);
    let a = a.clone();
    let g = g.clone();
    Form::new(n, n - p, move |x| {
        let v = a.at(x);
        match hodge_matrix(&g.at(x), p, orientation) {
            Ok(m) => apply_real(&m, &v),
            Err(_) => {
                let nan = v[0].scale(f64::NAN);
                vec![nan; binomial(n, n - p)]
            }
        }
    })
}

/// Sign `(−1)^{s + p(n−p)}` of `**` on `p`-forms.
pub fn double_star_sign(sig: Signature, p: usize) -> f64 {
    let n = sig.n();
    if (sig.s + p * (n - p)) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Codifferential `δ = *d*`.
pub fn codifferential<T: Coeff>(a: &Form<T>, g: &MetricField, h: f64) -> Result<Form<T>, FormsError> {
    if a.p == 0 {
        return Err(FormsError::DegreeOverflow(0, a.n));
    }
    let s1 = hodge_star(a, g, Orientation::Positive)?;
    let d = ext_d(&s1, h)?;
    hodge_star(&d, g, Orientation::Positive)
}

/// `δ = *d*` with the derivative taken through [`ext_d_frame`].
pub fn codifferential_frame(a: &PForm, g: &MetricField, frame: Arc<dyn Fn(&[f64]) -> RMat + Send + Sync>, h: f64) -> Result<PForm, FormsError> {
    let s1 = hodge_star(a, g, Orientation::Positive)?;
    let d = ext_d_frame(&s1, frame, h)?;
    hodge_star(&d, g, Orientation::Positive)
}

/// `(ψ⁺, ψ⁻) = ((ψ + *ψ)/2, (ψ − *ψ)/2)` for middle-degree forms when `** = 1`.
pub fn self_dual_split<T: Coeff>(a: &Form<T>, g: &MetricField, orientation: Orientation) -> Result<(Form<T>, Form<T>), FormsError> {
    let n = a.n;
    if n % 2 != 0 || a.p != n / 2 || double_star_sign(g.sig, a.p) < 0.0 {
        return Err(FormsError::NoSelfDualSplit);
    }
    let s = hodge_star(a, g, orientation)?;
    Ok((a.add(&s).scale(0.5), a.sub(&s).scale(0.5)))
}

/// `Ω = √|det g| dx¹∧⋯∧dxⁿ`.
pub fn volume_form(g: &MetricField) -> PForm {
    let g = g.clone();
    Form::new(g.n, g.n, move |x| vec![re(g.at(x).determinant().abs().sqrt())]).expect("top degree")
}

/// Midpoint rule for the single component of an `n`-form over the chart box
/// with `cells` cells per axis.
pub fn integrate_nform(a: &PForm, chart: &Chart, cells: usize) -> Result<C64, FormsError> {
    if a.p != a.n {
        return Err(FormsError::WrongDegree { expected: a.n, got: a.p });
    }
    if chart.dim() != a.n {
        return Err(FormsError::DimensionMismatch("chart and form dimensions".into()));
    }
    let n = a.n;
    let widths: Vec<f64> = (0..n).map(|i| (chart.hi[i] - chart.lo[i]) / cells as f64).collect();
    let cell_vol: f64 = widths.iter().product();
    let mut sum = re(0.0);
    let total = cells.pow(n as u32);
    let mut x = vec![0.0; n];
    for idx in 0..total {
        let mut rem = idx;
        for i in 0..n {
            x[i] = chart.lo[i] + (rem % cells) as f64 * widths[i] + 0.5 * widths[i];
            rem /= cells;
        }
        sum += a.at(&x)[0];
    }
    Ok(sum * cell_vol)
}

/// Pullback `φ*a` along `φ: ℝᵏ → ℝⁿ`, Jacobian by central differences with step `h`.
pub fn pullback<T: Coeff>(
    a: &Form<T>,
    map: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    k: usize,
    h: f64,
) -> Result<Form<T>, FormsError> {
    let (n, p) = (a.n, a.p);
    if p > k {
        return Err(FormsError::DegreeOverflow(p, k));
    }
    let a = a.clone();
    Form::new(k, p, move |u| {
        let y = map(u);
        let mut jac = RMat::zeros(n, k);
        let mut up = u.to_vec();
        for c in 0..k {
            up[c] = u[c] + h;
            let fp = map(&up);
            up[c] = u[c] - h;
            let fm = map(&up);
            up[c] = u[c];
            for r in 0..n {
                jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        // (φ*a)_K = Σ_I a_I det J[I, K]
        let lam = exterior_power(&jac, p);
        apply_real(&lam.transpose(), &a.at(&y))
    })
}

pub type ComplexVectorField = Arc<dyn Fn(&[f64]) -> Vec<C64> + Send + Sync>;

/// `r(α)^i = Σ_j g^{ij} α_j` at one point.
pub fn raise_at(alpha: &[C64], g: &RMat) -> Result<Vec<C64>, FormsError> {
    let ginv = g.clone().try_inverse().ok_or(FormsError::DegenerateMetric(g.determinant()))?;
    Ok((0..g.nrows()).map(|i| (0..g.ncols()).map(|j| alpha[j] * ginv[(i, j)]).sum()).collect())
}

/// `(v♭)_i = Σ_j g_ij v^j` at one point.
pub fn lower_at(v: &[C64], g: &RMat) -> Vec<C64> {
    (0..g.nrows()).map(|i| (0..g.ncols()).map(|j| v[j] * g[(i, j)]).sum()).collect()
}

/// Raises a 1-form to a vector field; a degenerate metric sample yields NaN.
pub fn raise(alpha: &PForm, g: &MetricField) -> Result<ComplexVectorField, FormsError> {
    if alpha.p != 1 {
        return Err(FormsError::WrongDegree { expected: 1, got: alpha.p });
    }
    let (a, g) = (alpha.clone(), g.clone());
    Ok(Arc::new(move |x: &[f64]| raise_at(&a.at(x), &g.at(x)).unwrap_or_else(|_| vec![C64::new(f64::NAN, 0.0); a.n])))
}

/// Lowers a vector field to a 1-form.
pub fn lower(v: ComplexVectorField, g: &MetricField) -> PForm {
    let g = g.clone();
    Form::new(g.n, 1, move |x| lower_at(&v(x), &g.at(x))).expect("degree 1")
}
