//! Time-ordered exponentials, parallel transport along paths, holonomy of small loops.
//!
//! `W(b, a) = T exp ∫_a^b A(t) dt` solves `dW/dt = A(t) W`, `W(a) = I`. The
//! discrete product puts later times on the left.

use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{expm, log_near_identity, AlgebraError};
use crate::connections::{contract, two_form_on, ConnectionError};
use crate::forms::{Chart, MatForm};
use crate::{max_abs, observed_order, re, CMat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("product needs at least one factor")]
    ZeroSteps,
    #[error("Picard order {0} exceeds 8")]
    OrderTooHigh(usize),
    #[error("path leaves the chart at t = {0}")]
    ExitsChart(f64),
    #[error("paths do not join: end {0:?} vs start {1:?}")]
    Disjoint(Vec<f64>, Vec<f64>),
    #[error(transparent)]
    Connection(#[from] ConnectionError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Time-dependent matrix `t ↦ A(t)`.
pub type TimeField = Arc<dyn Fn(f64) -> CMat + Send + Sync>;

/// Factor used in each slot of the ordered product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Factor {
    /// `exp(A(t')Δt)`.
    #[default]
    Exponential,
    /// `I + A(t')Δt`, first order only.
    Linear,
}

/// Where `t'` sits inside each subinterval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    #[default]
    Midpoint,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProductOptions {
    pub factor: Factor,
    pub sampling: Sampling,
}

/// `T∏ exp(A(t'_i)Δt)` over `n` equal subintervals of `[a, b]`, later times leftmost.
pub fn time_ordered_exp(a: &TimeField, t0: f64, t1: f64, n: usize) -> Result<CMat, TransportError> {
    time_ordered_exp_with(a, t0, t1, n, ProductOptions::default())
}

pub fn time_ordered_exp_with(a: &TimeField, t0: f64, t1: f64, n: usize, opts: ProductOptions) -> Result<CMat, TransportError> {
    if n == 0 {
        return Err(TransportError::ZeroSteps);
    }
    let dt = (t1 - t0) / n as f64;
    let mut w: Option<CMat> = None;
    for i in 0..n {
        let t = match opts.sampling {
            Sampling::Midpoint => t0 + (i as f64 + 0.5) * dt,
            Sampling::Left => t0 + i as f64 * dt,
        };
        let m = a(t) * re(dt);
        let f = match opts.factor {
            Factor::Exponential => expm(&m),
            Factor::Linear => CMat::identity(m.nrows(), m.ncols()) + m,
        };
        w = Some(match w {
            None => f,
            Some(w) => f * w,
        });
    }
    Ok(w.expect("n ≥ 1"))
}

/// Classical RK4 on `dW/dt = A(t)W`, `W(t0) = I`.
pub fn rk4(a: &TimeField, t0: f64, t1: f64, n: usize) -> Result<CMat, TransportError> {
    if n == 0 {
        return Err(TransportError::ZeroSteps);
    }
    let dt = (t1 - t0) / n as f64;
    let m = a(t0).nrows();
    let mut w = CMat::identity(m, m);
    for i in 0..n {
        let t = t0 + i as f64 * dt;
        let amid = a(t + 0.5 * dt);
        let k1 = a(t) * &w;
        let k2 = &amid * (&w + &k1 * re(0.5 * dt));
        let k3 = &amid * (&w + &k2 * re(0.5 * dt));
        let k4 = a(t + dt) * (&w + &k3 * re(dt));
        w += (k1 + k2 * re(2.0) + k3 * re(2.0) + k4) * re(dt / 6.0);
    }
    Ok(w)
}

/// Grid size of the nested quadrature in [`picard_series`].
pub const PICARD_GRID: usize = 4096;

/// Partial Dyson sum `Σ_{j ≤ k} ∫_{t_j < … < t_1} A(t_1)⋯A(t_j)`.
///
/// Computed as the `k`-th Picard iterate `P_j(t) = I + ∫_a^t A(s) P_{j−1}(s) ds`
/// with cumulative trapezoid quadrature on [`PICARD_GRID`] intervals.
pub fn picard_series(a: &TimeField, t0: f64, t1: f64, k: usize) -> Result<CMat, TransportError> {
    if k > 8 {
        return Err(TransportError::OrderTooHigh(k));
    }
    let m = PICARD_GRID;
    let dt = (t1 - t0) / m as f64;
    let avals: Vec<CMat> = (0..=m).map(|i| a(t0 + i as f64 * dt)).collect();
    let id = CMat::identity(avals[0].nrows(), avals[0].ncols());
    let mut p = vec![id.clone(); m + 1];
    for _ in 0..k {
        let f: Vec<CMat> = avals.iter().zip(&p).map(|(ai, pi)| ai * pi).collect();
        let mut next = Vec::with_capacity(m + 1);
        let mut acc = id.clone();
        next.push(acc.clone());
        for i in 0..m {
            acc += (&f[i] + &f[i + 1]) * re(0.5 * dt);
            next.push(acc.clone());
        }
        p = next;
    }
    Ok(p.pop().expect("grid is nonempty"))
}

/// `‖W(c, a) − W(c, b) W(b, a)‖` with `n` factors on each of the three intervals.
pub fn composition_check(a: &TimeField, ta: f64, tb: f64, tc: f64, n: usize) -> Result<f64, TransportError> {
    let wca = time_ordered_exp(a, ta, tc, n)?;
    let wcb = time_ordered_exp(a, tb, tc, n)?;
    let wba = time_ordered_exp(a, ta, tb, n)?;
    Ok(max_abs(&(wca - wcb * wba)))
}

type Curve = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Parameterized curve `x: [0, 1] → chart`.
#[derive(Clone)]
pub struct Path {
    pub chart: Chart,
    x: Curve,
    dx: Option<Curve>,
    /// Number of product factors used when transporting along the path.
    pub steps: usize,
}

impl std::fmt::Debug for Path {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Path({:?} → {:?}, {} steps)", self.start(), self.end(), self.steps)
    }
}

impl Path {
    /// Samples the image at `4·steps + 1` points and fails if any leaves the chart.
    pub fn new(
        chart: Chart,
        x: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        dx: Option<Curve>,
        steps: usize,
    ) -> Result<Self, TransportError> {
        if steps == 0 {
            return Err(TransportError::ZeroSteps);
        }
        let p = Path { chart, x: Arc::new(x), dx, steps };
        let m = 4 * steps;
        for i in 0..=m {
            let t = i as f64 / m as f64;
            if !p.chart.contains(&p.at(t)) {
                return Err(TransportError::ExitsChart(t));
            }
        }
        Ok(p)
    }

    /// Straight segment from `a` to `b`, with exact velocity.
    pub fn segment(chart: Chart, a: Vec<f64>, b: Vec<f64>, steps: usize) -> Result<Self, TransportError> {
        let v: Vec<f64> = b.iter().zip(&a).map(|(p, q)| p - q).collect();
        let v2 = v.clone();
        Path::new(chart, move |t| a.iter().zip(&v).map(|(p, d)| p + t * d).collect(), Some(Arc::new(move |_| v2.clone())), steps)
    }

    /// Closed piecewise-linear loop through `corners`, each edge with `steps_per_edge` factors.
    pub fn polygon(chart: Chart, corners: Vec<Vec<f64>>, steps_per_edge: usize) -> Result<Self, TransportError> {
        let k = corners.len();
        let c2 = corners.clone();
        let locate = move |t: f64| {
            let s = (t * k as f64).clamp(0.0, k as f64);
            let i = (s.floor() as usize).min(k - 1);
            (i, s - i as f64)
        };
        let l2 = locate.clone();
        let x = move |t: f64| {
            let (i, u) = locate(t);
            let (a, b) = (&corners[i], &corners[(i + 1) % k]);
            a.iter().zip(b).map(|(p, q)| p + u * (q - p)).collect()
        };
        let dx: Curve = Arc::new(move |t: f64| {
            let (i, _) = l2(t);
            let (a, b) = (&c2[i], &c2[(i + 1) % k]);
            a.iter().zip(b).map(|(p, q)| k as f64 * (q - p)).collect()
        });
        Path::new(chart, x, Some(dx), k * steps_per_edge)
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        (self.x)(t)
    }

    /// `x'(t)`, by central differences (step 1e-6, one-sided at the ends) when not supplied.
    pub fn velocity(&self, t: f64) -> Vec<f64> {
        if let Some(d) = &self.dx {
            return d(t);
        }
        let h = 1e-6;
        let (lo, hi) = ((t - h).max(0.0), (t + h).min(1.0));
        let (a, b) = (self.at(lo), self.at(hi));
        a.iter().zip(&b).map(|(p, q)| (q - p) / (hi - lo)).collect()
    }

    pub fn start(&self) -> Vec<f64> {
        self.at(0.0)
    }

    pub fn end(&self) -> Vec<f64> {
        self.at(1.0)
    }

    /// Same image traversed backwards.
    pub fn reversed(&self) -> Path {
        let x = self.x.clone();
        let dx = self.dx.clone().map(|d| -> Curve { Arc::new(move |t: f64| d(1.0 - t).into_iter().map(|v| -v).collect()) });
        Path { chart: self.chart.clone(), x: Arc::new(move |t| x(1.0 - t)), dx, steps: self.steps }
    }

    /// `t ↦ x(φ(t))` for an increasing `φ: [0,1] → [0,1]` with derivative `dφ`.
    pub fn reparameterized(&self, phi: impl Fn(f64) -> f64 + Send + Sync + 'static, dphi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Path {
        let phi = Arc::new(phi);
        let (x, p1) = (self.x.clone(), phi.clone());
        let me = self.clone();
        let dx: Curve = Arc::new(move |t: f64| me.velocity(phi(t)).into_iter().map(|v| v * dphi(t)).collect());
        Path { chart: self.chart.clone(), x: Arc::new(move |t| x(p1(t))), dx: Some(dx), steps: self.steps }
    }

    /// `self` followed by `next`, each on half of `[0, 1]`.
    pub fn then(&self, next: &Path) -> Result<Path, TransportError> {
        let (e, s) = (self.end(), next.start());
        if e.iter().zip(&s).any(|(a, b)| (a - b).abs() > 1e-12) {
            return Err(TransportError::Disjoint(e, s));
        }
        let (a, b) = (self.clone(), next.clone());
        let (a2, b2) = (self.clone(), next.clone());
        let x = move |t: f64| if t <= 0.5 { a.at(2.0 * t) } else { b.at(2.0 * t - 1.0) };
        let dx: Curve = Arc::new(move |t: f64| {
            let v = if t < 0.5 { a2.velocity(2.0 * t) } else { b2.velocity(2.0 * t - 1.0) };
            v.into_iter().map(|c| 2.0 * c).collect()
        });
        Path::new(self.chart.clone(), x, Some(dx), self.steps + next.steps)
    }
}

/// Transport operator along a path, with its endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportOperator {
    pub matrix: CMat,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

impl TransportOperator {
    /// `self` after `first`; fails unless `first` ends where `self` starts.
    pub fn after(&self, first: &TransportOperator) -> Result<TransportOperator, TransportError> {
        if self.start.iter().zip(&first.end).any(|(a, b)| (a - b).abs() > 1e-12) {
            return Err(TransportError::Disjoint(first.end.clone(), self.start.clone()));
        }
        Ok(TransportOperator { matrix: &self.matrix * &first.matrix, start: first.start.clone(), end: self.end.clone() })
    }
}

/// `t ↦ −Γ(x(t))(x'(t))`.
pub fn pullback_generator(gamma: &MatForm, path: &Path) -> TimeField {
    let (g, p) = (gamma.clone(), path.clone());
    Arc::new(move |t| -contract(&g, &p.at(t), &p.velocity(t)))
}

/// `P exp(−∫_C Γ)`, the parallel transport of a linear connection along `path`.
pub fn parallel_transport_linear(gamma: &MatForm, path: &Path) -> Result<TransportOperator, TransportError> {
    let w = time_ordered_exp(&pullback_generator(gamma, path), 0.0, 1.0, path.steps)?;
    Ok(TransportOperator { matrix: w, start: path.start(), end: path.end() })
}

/// Solution of `dg/dt = −A(x(t))(x'(t))·g`, `g(0) = e`, at `t = 1`.
pub fn parallel_transport_principal(a: &MatForm, path: &Path) -> Result<CMat, TransportError> {
    Ok(parallel_transport_linear(a, path)?.matrix)
}

/// Loop `x → x+sξ → x+sξ+sη → x+sη → x` and its transport operator.
pub fn holonomy_rectangle(a: &MatForm, chart: &Chart, base: &[f64], xi: &[f64], eta: &[f64], s: f64, steps_per_edge: usize) -> Result<CMat, TransportError> {
    let shift = |u: &[f64], c: f64| -> Vec<f64> { base.iter().zip(u).map(|(b, d)| b + c * d).collect() };
    let p1 = shift(xi, s);
    let p2: Vec<f64> = p1.iter().zip(eta).map(|(b, d)| b + s * d).collect();
    let p3 = shift(eta, s);
    let path = Path::polygon(chart.clone(), vec![base.to_vec(), p1, p2, p3], steps_per_edge)?;
    parallel_transport_principal(a, &path)
}

/// Loop-scale fit of `‖log W(s) − s² F(η, ξ)‖` at the base point.
#[derive(Debug, Clone, PartialEq)]
pub struct HolonomyFit {
    pub scales: Vec<f64>,
    pub defects: Vec<f64>,
    pub order: f64,
}

/// Fits the log-defect over `s₀, s₀/2, s₀/4`; curvature taken from `a` with step `h`.
pub fn holonomy_curvature_fit(
    a: &MatForm,
    chart: &Chart,
    base: &[f64],
    xi: &[f64],
    eta: &[f64],
    s0: f64,
    steps_per_edge: usize,
    h: f64,
) -> Result<HolonomyFit, TransportError> {
    holonomy_scale_sweep(a, chart, base, xi, eta, s0, 3, steps_per_edge, h)
}

/// Log-defect fit over the `levels ≥ 2` halvings `s₀, s₀/2, …`.
#[allow(clippy::too_many_arguments)]
pub fn holonomy_scale_sweep(
    a: &MatForm,
    chart: &Chart,
    base: &[f64],
    xi: &[f64],
    eta: &[f64],
    s0: f64,
    levels: usize,
    steps_per_edge: usize,
    h: f64,
) -> Result<HolonomyFit, TransportError> {
    if levels < 2 {
        return Err(TransportError::ZeroSteps);
    }
    let f = crate::connections::curvature(a, h)?;
    let fe = two_form_on(&f, base, eta, xi);
    let scales: Vec<f64> = (0..levels).map(|k| s0 / f64::powi(2.0, k as i32)).collect();
    let mut defects = Vec::new();
    for &s in &scales {
        let w = holonomy_rectangle(a, chart, base, xi, eta, s, steps_per_edge)?;
        let l = log_near_identity(&w)?;
        defects.push(max_abs(&(l - &fe * re(s * s))));
    }
    let order = observed_order(&scales, &defects);
    Ok(HolonomyFit { scales, defects, order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{su2_poly_potential, su2_poly_time_field as poly_time_field};
    use crate::algebra::{random_matrix, su2_basis, GroupTag};
    use crate::connections::{constant_potential, gauge_transform, potential, MatField};
    use crate::poly::Poly;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lin_field(l1: CMat, l2: CMat) -> TimeField {
        Arc::new(move |t| &l1 + &l2 * re(t))
    }

    fn box2() -> Chart {
        Chart::cube(2, -1.0, 1.0).unwrap()
    }

    #[test]
    fn trivial_products() {
        let zero: TimeField = Arc::new(|_| CMat::zeros(2, 2));
        assert_eq!(time_ordered_exp(&zero, 0.0, 1.0, 7).unwrap(), CMat::identity(2, 2));
        assert_eq!(time_ordered_exp(&zero, 0.0, 1.0, 0), Err(TransportError::ZeroSteps));
        let l = su2_basis()[0].clone() * re(1.7);
        let lc = l.clone();
        let c: TimeField = Arc::new(move |_| lc.clone());
        let w = time_ordered_exp(&c, 0.5, 2.0, 1).unwrap();
        assert!(max_abs(&(w - expm(&(&l * re(1.5))))) < 1e-14);
    }

    #[test]
    fn later_times_leftmost() {
        let t = su2_basis();
        let (a, b) = (t[0].clone(), t[1].clone());
        let (a2, b2) = (a.clone(), b.clone());
        let step: TimeField = Arc::new(move |s| if s < 0.5 { a2.clone() } else { b2.clone() });
        let w = time_ordered_exp(&step, 0.0, 1.0, 2).unwrap();
        let expected = expm(&(&b * re(0.5))) * expm(&(&a * re(0.5)));
        assert!(max_abs(&(w - expected)) < 1e-14);
    }

    #[test]
    fn midpoint_converges_at_second_order() {
        let t = su2_basis();
        let a = lin_field(&t[0] * re(0.8), &t[1] * re(0.9));
        let reference = rk4(&a, 0.0, 1.0, 8 * 256).unwrap();
        let ns = [64usize, 128, 256];
        let errs: Vec<f64> = ns.iter().map(|&n| max_abs(&(time_ordered_exp(&a, 0.0, 1.0, n).unwrap() - &reference))).collect();
        assert!((errs[0] / errs[1] - 4.0).abs() < 0.2 && (errs[1] / errs[2] - 4.0).abs() < 0.2, "{errs:?}");
        assert!(errs[2] < 1e-6);
        // linear factors and left sampling drop to first order
        let lin = ProductOptions { factor: Factor::Linear, sampling: Sampling::Midpoint };
        let e: Vec<f64> = ns.iter().map(|&n| max_abs(&(time_ordered_exp_with(&a, 0.0, 1.0, n, lin).unwrap() - &reference))).collect();
        assert!((e[0] / e[1] - 2.0).abs() < 0.2, "{e:?}");
        let left = ProductOptions { factor: Factor::Exponential, sampling: Sampling::Left };
        let e: Vec<f64> = ns.iter().map(|&n| max_abs(&(time_ordered_exp_with(&a, 0.0, 1.0, n, left).unwrap() - &reference))).collect();
        assert!((e[0] / e[1] - 2.0).abs() < 0.2, "{e:?}");
    }

    #[test]
    fn picard_examples() {
        let t = su2_basis();
        let a = lin_field(t[0].clone(), t[1].clone());
        assert_eq!(picard_series(&a, 0.0, 1.0, 0).unwrap(), CMat::identity(2, 2));
        assert!(matches!(picard_series(&a, 0.0, 1.0, 9), Err(TransportError::OrderTooHigh(9))));
        let l = t[2].clone();
        let lc = l.clone();
        let c: TimeField = Arc::new(move |_| lc.clone());
        let p1 = picard_series(&c, 0.0, 2.0, 1).unwrap();
        assert!(max_abs(&(p1 - (CMat::identity(2, 2) + &l * re(2.0)))) < 1e-13);
        // defect of the k = 3 truncation scales like s⁴
        let defect = |s: f64| {
            let (l1, l2) = (&t[0] * re(s), &t[1] * re(s));
            let f = lin_field(l1, l2);
            let exact = rk4(&f, 0.0, 1.0, 2048).unwrap();
            max_abs(&(picard_series(&f, 0.0, 1.0, 3).unwrap() - exact))
        };
        let d: Vec<f64> = [1.0, 0.5, 0.25].iter().map(|&s| defect(s)).collect();
        assert!((d[0] / d[1] - 16.0).abs() < 2.0 && (d[1] / d[2] - 16.0).abs() < 2.0, "{d:?}");
        // high order: three-way agreement
        let p8 = picard_series(&a, 0.0, 1.0, 8).unwrap();
        let r = rk4(&a, 0.0, 1.0, 2048).unwrap();
        let w = time_ordered_exp(&a, 0.0, 1.0, 2048).unwrap();
        assert!(max_abs(&(&p8 - &r)) < 1e-6 && max_abs(&(&w - &r)) < 1e-6);
    }

    #[test]
    fn composition_examples() {
        let zero: TimeField = Arc::new(|_| CMat::zeros(3, 3));
        assert_eq!(composition_check(&zero, 0.0, 0.4, 1.0, 8).unwrap(), 0.0);
        let l = su2_basis()[1].clone();
        let c: TimeField = Arc::new(move |_| l.clone());
        assert!(composition_check(&c, 0.0, 0.3, 1.0, 5).unwrap() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = poly_time_field(&mut rng, 3);
        assert!(composition_check(&a, 0.0, 0.35, 1.0, 256).unwrap() < 1e-6);
    }

    #[test]
    fn transport_examples() {
        let zero = constant_potential(vec![CMat::zeros(2, 2); 2]);
        let seg = Path::segment(box2(), vec![-0.5, 0.0], vec![0.5, 0.2], 16).unwrap();
        assert_eq!(parallel_transport_linear(&zero, &seg).unwrap().matrix, CMat::identity(2, 2));
        let t = su2_basis();
        let a = constant_potential(vec![t[0].clone(), t[1].clone()]);
        let xi = [0.6, -0.3];
        let seg = Path::segment(box2(), vec![0.0, 0.0], xi.to_vec(), 4).unwrap();
        let expected = expm(&-(&t[0] * re(xi[0]) + &t[1] * re(xi[1])));
        assert!(max_abs(&(parallel_transport_principal(&a, &seg).unwrap() - expected)) < 1e-14);
        assert!(matches!(Path::segment(box2(), vec![0.0, 0.0], vec![1.5, 0.0], 4), Err(TransportError::ExitsChart(_))));
    }

    #[test]
    fn transport_transition_is_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = su2_poly_potential(&mut rng, 2, 2, 1.0);
        let ps: Vec<Poly> = (0..3).map(|_| Poly::random(&mut rng, 2, 2, 0.8, false)).collect();
        let basis = su2_basis();
        let g: MatField = Arc::new(move |x: &[f64]| expm(&ps.iter().zip(&basis).fold(CMat::zeros(2, 2), |acc, (p, b)| acc + b * p.eval(x))));
        let av = gauge_transform(&a, g.clone(), 1e-5);
        let path = Path::new(box2(), |t| vec![0.6 * t - 0.3, 0.4 * (3.0 * t).sin()], None, 512).unwrap();
        let tu = parallel_transport_linear(&a, &path).unwrap();
        let tv = parallel_transport_linear(&av, &path).unwrap();
        let gi0 = g(&tu.start).try_inverse().unwrap();
        let r = max_abs(&(tv.matrix - g(&tu.end) * tu.matrix * gi0));
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn path_algebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = su2_poly_potential(&mut rng, 2, 2, 1.0);
        let c1 = Path::new(box2(), |t| vec![t - 0.5, 0.3 * t * t], None, 256).unwrap();
        let c2 = Path::segment(box2(), c1.end(), vec![0.2, 0.8], 256).unwrap();
        let t1 = parallel_transport_linear(&a, &c1).unwrap();
        let t2 = parallel_transport_linear(&a, &c2).unwrap();
        let joined = parallel_transport_linear(&a, &c1.then(&c2).unwrap()).unwrap();
        assert!(max_abs(&(&joined.matrix - &t2.after(&t1).unwrap().matrix)) < 1e-6);
        assert!(t1.after(&t2).is_err());
        let back = parallel_transport_linear(&a, &c1.reversed()).unwrap();
        assert!(max_abs(&(&back.matrix * &t1.matrix - CMat::identity(2, 2))) < 1e-6);
        let sq = parallel_transport_linear(&a, &c1.reparameterized(|t| t * t, |t| 2.0 * t)).unwrap();
        assert!(max_abs(&(&sq.matrix - &t1.matrix)) < 1e-5);
        assert!(GroupTag::SpecialUnitary.group_residual(&t1.matrix) < 1e-8);
    }

    #[test]
    fn flat_loops() {
        let zero = constant_potential(vec![CMat::zeros(2, 2); 2]);
        let w = holonomy_rectangle(&zero, &box2(), &[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], 0.3, 8).unwrap();
        assert_eq!(w, CMat::identity(2, 2));
        // pure gauge −dφ φ⁻¹
        let basis = su2_basis();
        let phi: MatField = Arc::new(move |x: &[f64]| expm(&(&basis[0] * re(x[0] * x[1]) + &basis[2] * re(x[1]))));
        let pure = gauge_transform(&zero, phi, 1e-5);
        let w = holonomy_rectangle(&pure, &box2(), &[-0.2, 0.1], &[1.0, 0.0], &[0.0, 1.0], 0.5, 256).unwrap();
        assert!(max_abs(&(w - CMat::identity(2, 2))) < 1e-6);
    }

    #[test]
    fn abelian_stokes() {
        let b = 1.3;
        let a = potential(2, move |x: &[f64]| vec![CMat::zeros(1, 1), CMat::from_element(1, 1, C64i(b * x[0]))]);
        for s in [0.2, 0.5] {
            let w = holonomy_rectangle(&a, &box2(), &[0.1, -0.2], &[1.0, 0.0], &[0.0, 1.0], s, 32).unwrap();
            assert!((w[(0, 0)] - C64i(-b * s * s).exp()).norm() < 1e-8);
        }
    }

    #[allow(non_snake_case)]
    fn C64i(v: f64) -> crate::C64 {
        crate::C64::new(0.0, v)
    }

    #[test]
    fn nonabelian_log_defect_order() {
        let t = su2_basis();
        let a = constant_potential(vec![t[0].clone(), t[1].clone()]);
        let fit = holonomy_curvature_fit(&a, &box2(), &[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], 0.4, 4, 1e-4).unwrap();
        assert!(fit.order >= 2.8, "{fit:?}");
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let b = su2_poly_potential(&mut rng, 2, 2, 1.0);
        let fit = holonomy_curvature_fit(&b, &box2(), &[0.1, 0.0], &[1.0, 0.0], &[0.0, 1.0], 0.2, 64, 1e-4).unwrap();
        assert!(fit.order >= 2.8, "{fit:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn unitary_transport(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = su2_poly_potential(&mut rng, 2, 2, 1.0);
            let path = Path::new(box2(), |t| vec![0.8 * t - 0.4, 0.5 * t * (1.0 - t)], None, 64).unwrap();
            let w = parallel_transport_linear(&a, &path).unwrap().matrix;
            prop_assert!(GroupTag::Unitary.group_residual(&w) < 1e-8);
        }

        #[test]
        fn constant_generators_compose(seed in 0u64..1000, split in 0.05f64..0.95) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = random_matrix(&mut rng, 3, 1.0);
            let c: TimeField = Arc::new(move |_| l.clone());
            prop_assert!(composition_check(&c, 0.0, split, 1.0, 3).unwrap() < 1e-12);
        }
    }
}
