//! Covers, transition cocycles and the connection-bundle group.
//!
//! Overlaps are explicit sample-point sets, optionally with a membership
//! predicate for points off the sample grid. Transition functions are stored
//! per ordered pair of charts; `g_{βα}` is a separate entry so that validation
//! actually tests `g_{βα} = g_{αβ}⁻¹`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{kron, FiniteGroup};
use crate::{max_abs, re, CMat, RMat, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BundleError {
    #[error("unknown chart {0}")]
    UnknownChart(String),
    #[error("point {0:?} is outside the overlap of charts {1} and {2}")]
    OutsideOverlap(Vec<f64>, usize, usize),
    #[error("no transition function for charts ({0}, {1})")]
    MissingTransition(usize, usize),
    #[error("operation unsupported for this group kind: {0}")]
    Unsupported(String),
    #[error("cochain and cocycle use different groups")]
    GroupMismatch,
    #[error("singular J in connection-bundle element")]
    SingularJ,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("fixture error: {0}")]
    Fixture(String),
}

/// Tolerance for identifying sample points.
pub const SAMPLE_EPS: f64 = 1e-12;

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= SAMPLE_EPS)
}

pub type Predicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// One connected component of an overlap.
#[derive(Clone)]
pub struct Component {
    pub samples: Vec<Vec<f64>>,
    pub region: Option<Predicate>,
}

impl std::fmt::Debug for Component {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Component({} samples, region={})", self.samples.len(), self.region.is_some())
    }
}

impl Component {
    pub fn sampled(samples: Vec<Vec<f64>>) -> Self {
        Component { samples, region: None }
    }

    pub fn region(samples: Vec<Vec<f64>>, region: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        Component { samples, region: Some(Arc::new(region)) }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.region {
            Some(p) => p(x),
            None => self.samples.iter().any(|s| same_point(s, x)),
        }
    }
}

/// Named charts and, for each unordered pair, the overlap components.
///
/// `overlap(α, α)` is the chart itself; `overlap(α, β)` and `overlap(β, α)`
/// share storage.
#[derive(Clone, Debug)]
pub struct Cover {
    pub charts: Vec<String>,
    overlaps: BTreeMap<(usize, usize), Vec<Component>>,
}

impl Cover {
    /// Charts with their own sample sets.
    pub fn new(charts: Vec<(String, Component)>) -> Self {
        let mut overlaps = BTreeMap::new();
        let names = charts
            .into_iter()
            .enumerate()
            .map(|(i, (name, c))| {
                overlaps.insert((i, i), vec![c]);
                name
            })
            .collect();
        Cover { charts: names, overlaps }
    }

    pub fn set_overlap(&mut self, a: usize, b: usize, components: Vec<Component>) {
        self.overlaps.insert((a.min(b), a.max(b)), components);
    }

    pub fn chart_index(&self, name: &str) -> Result<usize, BundleError> {
        self.charts.iter().position(|c| c == name).ok_or_else(|| BundleError::UnknownChart(name.into()))
    }

    pub fn len(&self) -> usize {
        self.charts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charts.is_empty()
    }

    pub fn overlap(&self, a: usize, b: usize) -> &[Component] {
        self.overlaps.get(&(a.min(b), a.max(b))).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Index of the overlap component containing `x`.
    pub fn locate(&self, a: usize, b: usize, x: &[f64]) -> Result<usize, BundleError> {
        self.overlap(a, b).iter().position(|c| c.contains(x)).ok_or_else(|| BundleError::OutsideOverlap(x.to_vec(), a, b))
    }

    /// All sample points of `overlap(a, b)` with their component index.
    pub fn samples(&self, a: usize, b: usize) -> Vec<(usize, Vec<f64>)> {
        self.overlap(a, b).iter().enumerate().flat_map(|(k, c)| c.samples.iter().map(move |s| (k, s.clone()))).collect()
    }
}

/// Structure group of a cocycle.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupKind {
    Finite(FiniteGroup),
    /// `GL(d, ℂ)` and its subgroups.
    Matrix(usize),
}

/// Group element matching a [`GroupKind`].
#[derive(Clone, Debug, PartialEq)]
pub enum GVal {
    Fin(usize),
    Mat(CMat),
}

impl GroupKind {
    pub fn identity(&self) -> GVal {
        match self {
            GroupKind::Finite(g) => GVal::Fin(g.identity()),
            GroupKind::Matrix(d) => GVal::Mat(CMat::identity(*d, *d)),
        }
    }

    pub fn mul(&self, a: &GVal, b: &GVal) -> GVal {
        match (self, a, b) {
            (GroupKind::Finite(g), GVal::Fin(x), GVal::Fin(y)) => GVal::Fin(g.mul(*x, *y)),
            (GroupKind::Matrix(_), GVal::Mat(x), GVal::Mat(y)) => GVal::Mat(x * y),
            _ => panic!("group value does not match group kind"),
        }
    }

    /// Inverse; a singular matrix yields NaN entries.
    pub fn inv(&self, a: &GVal) -> GVal {
        match (self, a) {
            (GroupKind::Finite(g), GVal::Fin(x)) => GVal::Fin(g.inv(*x)),
            (GroupKind::Matrix(d), GVal::Mat(x)) => {
                GVal::Mat(x.clone().try_inverse().unwrap_or_else(|| CMat::from_element(*d, *d, C64::new(f64::NAN, 0.0))))
            }
            _ => panic!("group value does not match group kind"),
        }
    }

    /// 0 or 1 for finite groups, max-entry distance for matrices.
    pub fn dist(&self, a: &GVal, b: &GVal) -> f64 {
        match (a, b) {
            (GVal::Fin(x), GVal::Fin(y)) => f64::from(u8::from(x != y)),
            (GVal::Mat(x), GVal::Mat(y)) => max_abs(&(x - y)),
            _ => f64::INFINITY,
        }
    }
}

/// Transition function on one ordered overlap.
#[derive(Clone)]
pub enum Transition {
    /// Constant value on each overlap component.
    PerComponent(Vec<GVal>),
    /// Arbitrary function of the point.
    Field(Arc<dyn Fn(&[f64]) -> GVal + Send + Sync>),
}

impl std::fmt::Debug for Transition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Transition::PerComponent(v) => write!(f, "PerComponent({v:?})"),
            Transition::Field(_) => write!(f, "Field(..)"),
        }
    }
}

/// Čech 1-cochain `g_{αβ}`; it is a cocycle when [`validate_cocycle`] passes.
#[derive(Clone, Debug)]
pub struct Cocycle {
    pub cover: Cover,
    pub group: GroupKind,
    maps: BTreeMap<(usize, usize), Transition>,
}

impl Cocycle {
    pub fn new(cover: Cover, group: GroupKind) -> Self {
        Cocycle { cover, group, maps: BTreeMap::new() }
    }

    /// All transition functions equal to the identity.
    pub fn trivial(cover: Cover, group: GroupKind) -> Self {
        let mut c = Cocycle::new(cover, group);
        let e = c.group.identity();
        for (a, b) in c.pairs() {
            let k = c.cover.overlap(a, b).len();
            c.set(a, b, Transition::PerComponent(vec![e.clone(); k]));
        }
        c
    }

    /// Sets `g_{ab}` only.
    pub fn set(&mut self, a: usize, b: usize, t: Transition) {
        self.maps.insert((a, b), t);
    }

    /// Sets `g_{ab}` and `g_{ba} = g_{ab}⁻¹`.
    pub fn set_with_inverse(&mut self, a: usize, b: usize, t: Transition) {
        let group = self.group.clone();
        let inv = match &t {
            Transition::PerComponent(v) => Transition::PerComponent(v.iter().map(|g| group.inv(g)).collect()),
            Transition::Field(f) => {
                let f = f.clone();
                Transition::Field(Arc::new(move |x: &[f64]| group.inv(&f(x))))
            }
        };
        self.maps.insert((a, b), t);
        self.maps.insert((b, a), inv);
    }

    /// `g_{ab}(x)`; a missing diagonal entry is the identity.
    pub fn eval(&self, a: usize, b: usize, x: &[f64]) -> Result<GVal, BundleError> {
        let k = self.cover.locate(a, b, x)?;
        self.eval_in(a, b, k, x)
    }

    fn eval_in(&self, a: usize, b: usize, component: usize, x: &[f64]) -> Result<GVal, BundleError> {
        match self.maps.get(&(a, b)) {
            Some(Transition::PerComponent(v)) => v.get(component).cloned().ok_or(BundleError::MissingTransition(a, b)),
            Some(Transition::Field(f)) => Ok(f(x)),
            None if a == b => Ok(self.group.identity()),
            None => Err(BundleError::MissingTransition(a, b)),
        }
    }

    /// Matrix value of `g_{ab}(x)`.
    pub fn eval_matrix(&self, a: usize, b: usize, x: &[f64]) -> Result<CMat, BundleError> {
        match self.eval(a, b, x)? {
            GVal::Mat(m) => Ok(m),
            GVal::Fin(_) => Err(BundleError::Unsupported("finite group has no matrix values".into())),
        }
    }

    /// Pairs with a nonempty overlap.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.cover.len();
        (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|&(a, b)| !self.cover.overlap(a, b).is_empty()).collect()
    }

    /// Associated matrix cocycle through a representation of a finite group.
    pub fn represent(&self, dim: usize, rep: impl Fn(usize) -> CMat + Send + Sync + 'static) -> Result<Cocycle, BundleError> {
        if !matches!(self.group, GroupKind::Finite(_)) {
            return Err(BundleError::Unsupported("represent expects a finite group".into()));
        }
        let rep = Arc::new(rep);
        let mut out = Cocycle::new(self.cover.clone(), GroupKind::Matrix(dim));
        for (key, t) in &self.maps {
            let nt = match t {
                Transition::PerComponent(v) => Transition::PerComponent(
                    v.iter()
                        .map(|g| match g {
                            GVal::Fin(i) => GVal::Mat(rep(*i)),
                            GVal::Mat(m) => GVal::Mat(m.clone()),
                        })
                        .collect(),
                ),
                Transition::Field(f) => {
                    let (f, rep) = (f.clone(), rep.clone());
                    Transition::Field(Arc::new(move |x: &[f64]| match f(x) {
                        GVal::Fin(i) => GVal::Mat(rep(i)),
                        m => m,
                    }))
                }
            };
            out.maps.insert(*key, nt);
        }
        Ok(out)
    }

    /// Applies `f` to every matrix value; used for derived cocycles.
    fn map_matrix(&self, dim: usize, f: impl Fn(&CMat) -> CMat + Send + Sync + 'static) -> Result<Cocycle, BundleError> {
        if !matches!(self.group, GroupKind::Matrix(_)) {
            return Err(BundleError::Unsupported("derived cocycles need a matrix group".into()));
        }
        let f = Arc::new(f);
        let lift = |g: &GVal, f: &dyn Fn(&CMat) -> CMat| match g {
            GVal::Mat(m) => GVal::Mat(f(m)),
            other => other.clone(),
        };
        let mut out = Cocycle::new(self.cover.clone(), GroupKind::Matrix(dim));
        for (key, t) in &self.maps {
            let nt = match t {
                Transition::PerComponent(v) => Transition::PerComponent(v.iter().map(|g| lift(g, f.as_ref())).collect()),
                Transition::Field(h) => {
                    let (h, f) = (h.clone(), f.clone());
                    Transition::Field(Arc::new(move |x: &[f64]| lift(&h(x), f.as_ref())))
                }
            };
            out.maps.insert(*key, nt);
        }
        Ok(out)
    }
}

/// Per-condition maximum residuals of a cocycle check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CocycleReport {
    /// `g_{αα} = e`.
    pub identity: f64,
    /// `g_{βα} g_{αβ} = e`.
    pub inverse: f64,
    /// `g_{αβ} g_{βγ} g_{γα} = e` on triple overlaps.
    pub triple: f64,
    pub samples: usize,
    pub passes: bool,
}

/// Checks the cocycle conditions at every sample of the cover.
///
/// Triple overlaps are the samples of `overlap(α,β)` that also lie in
/// `overlap(β,γ)` and `overlap(γ,α)`. `tol` is ignored for finite groups,
/// which must hold exactly.
pub fn validate_cocycle(c: &Cocycle, tol: f64) -> Result<CocycleReport, BundleError> {
    let g = &c.group;
    let e = g.identity();
    let n = c.cover.len();
    let (mut id_r, mut inv_r, mut tri_r, mut count) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    for a in 0..n {
        for (k, x) in c.cover.samples(a, a) {
            id_r = id_r.max(g.dist(&c.eval_in(a, a, k, &x)?, &e));
            count += 1;
        }
        for b in 0..n {
            if a == b {
                continue;
            }
            for (k, x) in c.cover.samples(a, b) {
                let gab = c.eval_in(a, b, k, &x)?;
                let gba = c.eval_in(b, a, k, &x)?;
                inv_r = inv_r.max(g.dist(&g.mul(&gba, &gab), &e));
                count += 1;
                for cc in 0..n {
                    if cc == a || cc == b {
                        continue;
                    }
                    let (Ok(kbc), Ok(kca)) = (c.cover.locate(b, cc, &x), c.cover.locate(cc, a, &x)) else {
                        continue;
                    };
                    let gbc = c.eval_in(b, cc, kbc, &x)?;
                    let gca = c.eval_in(cc, a, kca, &x)?;
                    tri_r = tri_r.max(g.dist(&g.mul(&g.mul(&gab, &gbc), &gca), &e));
                }
            }
        }
    }
    let tol = if matches!(g, GroupKind::Finite(_)) { 0.0 } else { tol };
    let passes = id_r <= tol && inv_r <= tol && tri_r <= tol;
    Ok(CocycleReport { identity: id_r, inverse: inv_r, triple: tri_r, samples: count, passes })
}

/// Per-chart group-valued functions `g_α`.
#[derive(Clone)]
pub struct Cochain {
    pub maps: Vec<Arc<dyn Fn(&[f64]) -> GVal + Send + Sync>>,
}

impl std::fmt::Debug for Cochain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Cochain({} charts)", self.maps.len())
    }
}

impl Cochain {
    pub fn constant(values: Vec<GVal>) -> Self {
        Cochain {
            maps: values
                .into_iter()
                .map(|v| {
                    let f: Arc<dyn Fn(&[f64]) -> GVal + Send + Sync> = Arc::new(move |_| v.clone());
                    f
                })
                .collect(),
        }
    }

    pub fn identity(group: &GroupKind, charts: usize) -> Self {
        Self::constant(vec![group.identity(); charts])
    }

    pub fn inverse(&self, group: &GroupKind) -> Self {
        Cochain {
            maps: self
                .maps
                .iter()
                .map(|f| {
                    let (f, g) = (f.clone(), group.clone());
                    let h: Arc<dyn Fn(&[f64]) -> GVal + Send + Sync> = Arc::new(move |x| g.inv(&f(x)));
                    h
                })
                .collect(),
        }
    }

    /// Constant labels, when every chart map is a finite-group constant.
    pub fn labels(&self) -> Option<Vec<usize>> {
        self.maps
            .iter()
            .map(|f| match f(&[]) {
                GVal::Fin(i) => Some(i),
                GVal::Mat(_) => None,
            })
            .collect()
    }
}

/// `g'_{αβ} = φ_α g_{αβ} φ_β⁻¹`.
pub fn apply_gauge_cochain(c: &Cocycle, phi: &Cochain) -> Result<Cocycle, BundleError> {
    if phi.maps.len() != c.cover.len() {
        return Err(BundleError::DimensionMismatch("cochain length differs from chart count".into()));
    }
    let mut out = Cocycle::new(c.cover.clone(), c.group.clone());
    for (a, b) in c.pairs() {
        let (fa, fb) = (phi.maps[a].clone(), phi.maps[b].clone());
        let src = c.clone();
        let g = c.group.clone();
        out.maps.insert(
            (a, b),
            Transition::Field(Arc::new(move |x: &[f64]| {
                let gab = src.eval(a, b, x).unwrap_or_else(|_| g.identity());
                g.mul(&g.mul(&fa(x), &gab), &g.inv(&fb(x)))
            })),
        );
    }
    Ok(out)
}

/// Outcome of the exhaustive coboundary search.
#[derive(Debug, Clone, PartialEq)]
pub enum Coboundary {
    /// Constant per-chart labels with `g_{αβ} = g_α g_β⁻¹` at every sample.
    Witness(Vec<usize>),
    /// Every one of `checked` assignments fails somewhere.
    NotCoboundary { checked: usize },
}

/// Visits label vectors in lexicographic order until `visit` returns true.
fn enumerate_assignments(order: usize, charts: usize, mut visit: impl FnMut(&[usize]) -> bool) -> usize {
    let total = order.pow(charts as u32);
    let mut labels = vec![0; charts];
    for idx in 0..total {
        let mut rem = idx;
        for l in labels.iter_mut().rev() {
            *l = rem % order;
            rem /= order;
        }
        if visit(&labels) {
            return idx + 1;
        }
    }
    total
}

/// Decides triviality of a finite-group cocycle by enumerating chart-constant cochains.
pub fn is_coboundary(c: &Cocycle) -> Result<Coboundary, BundleError> {
    let GroupKind::Finite(g) = &c.group else {
        return Err(BundleError::Unsupported("coboundary search needs a finite group".into()));
    };
    let trivial = Cocycle::trivial(c.cover.clone(), c.group.clone());
    match gauge_equivalence(&trivial, c)? {
        Some(labels) => Ok(Coboundary::Witness(labels)),
        None => Ok(Coboundary::NotCoboundary { checked: g.order().pow(c.cover.len() as u32) }),
    }
}

/// Chart-constant cochain `φ` with `c2_{αβ} = φ_α c1_{αβ} φ_β⁻¹`, found by enumeration.
pub fn gauge_equivalence(c1: &Cocycle, c2: &Cocycle) -> Result<Option<Vec<usize>>, BundleError> {
    let (GroupKind::Finite(g), GroupKind::Finite(g2)) = (&c1.group, &c2.group) else {
        return Err(BundleError::Unsupported("gauge equivalence search needs a finite group".into()));
    };
    if g != g2 || c1.cover.len() != c2.cover.len() {
        return Err(BundleError::GroupMismatch);
    }
    let n = c1.cover.len();
    let mut data = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            for (k, x) in c1.cover.samples(a, b) {
                let v1 = match c1.eval_in(a, b, k, &x)? {
                    GVal::Fin(i) => i,
                    GVal::Mat(_) => return Err(BundleError::GroupMismatch),
                };
                let v2 = match c2.eval(a, b, &x)? {
                    GVal::Fin(i) => i,
                    GVal::Mat(_) => return Err(BundleError::GroupMismatch),
                };
                data.push((a, b, v1, v2));
            }
        }
    }
    let mut found = None;
    enumerate_assignments(g.order(), n, |phi| {
        let ok = data.iter().all(|&(a, b, v1, v2)| g.mul(g.mul(phi[a], v1), g.inv(phi[b])) == v2);
        if ok {
            found = Some(phi.to_vec());
        }
        ok
    });
    Ok(found)
}

/// Dual cocycle `(g⁻¹)ᵀ`.
pub fn dual(c: &Cocycle) -> Result<Cocycle, BundleError> {
    let d = matrix_dim(c)?;
    c.map_matrix(d, |m| {
        m.clone().try_inverse().map(|i| i.transpose()).unwrap_or_else(|| CMat::from_element(m.nrows(), m.ncols(), C64::new(f64::NAN, 0.0)))
    })
}

/// Tensor product cocycle `g ⊗ h` (Kronecker product) on a common cover.
pub fn tensor(c1: &Cocycle, c2: &Cocycle) -> Result<Cocycle, BundleError> {
    let (d1, d2) = (matrix_dim(c1)?, matrix_dim(c2)?);
    if c1.cover.len() != c2.cover.len() {
        return Err(BundleError::DimensionMismatch("covers differ".into()));
    }
    let mut out = Cocycle::new(c1.cover.clone(), GroupKind::Matrix(d1 * d2));
    for (a, b) in c1.pairs() {
        let (x1, x2) = (c1.clone(), c2.clone());
        out.maps.insert(
            (a, b),
            Transition::Field(Arc::new(move |x: &[f64]| {
                let nan = |d: usize| CMat::from_element(d, d, C64::new(f64::NAN, 0.0));
                let m1 = x1.eval_matrix(a, b, x).unwrap_or_else(|_| nan(d1));
                let m2 = x2.eval_matrix(a, b, x).unwrap_or_else(|_| nan(d2));
                GVal::Mat(kron(&m1, &m2))
            })),
        );
    }
    Ok(out)
}

/// `k`-th exterior power: minors of `g` over increasing index tuples.
pub fn exterior_power_cocycle(c: &Cocycle, k: usize) -> Result<Cocycle, BundleError> {
    let d = matrix_dim(c)?;
    let tk = crate::forms::tuples(d, k);
    let dim = tk.len();
    c.map_matrix(dim, move |m| {
        CMat::from_fn(dim, dim, |i, j| {
            if k == 0 {
                return re(1.0);
            }
            CMat::from_fn(k, k, |a, b| m[(tk[i][a], tk[j][b])]).determinant()
        })
    })
}

/// Density cocycle of weight `w`: the 1×1 matrix `|det g|^{−w}`.
pub fn density(c: &Cocycle, w: f64) -> Result<Cocycle, BundleError> {
    matrix_dim(c)?;
    c.map_matrix(1, move |m| CMat::from_element(1, 1, re(m.determinant().norm().powf(-w))))
}

fn matrix_dim(c: &Cocycle) -> Result<usize, BundleError> {
    match c.group {
        GroupKind::Matrix(d) => Ok(d),
        GroupKind::Finite(_) => Err(BundleError::Unsupported("expected a matrix cocycle".into())),
    }
}

/// Coordinate chart of a region of a base space, with its inverse.
#[derive(Clone)]
pub struct ChartMap {
    pub name: String,
    pub forward: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    pub inverse: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl std::fmt::Debug for ChartMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ChartMap({})", self.name)
    }
}

impl ChartMap {
    /// Identity coordinates on the plane.
    pub fn cartesian() -> Self {
        ChartMap { name: "cartesian".into(), forward: Arc::new(|p: &[f64]| p.to_vec()), inverse: Arc::new(|p: &[f64]| p.to_vec()) }
    }

    /// `(r, θ)` with `θ ∈ (−π, π)`.
    pub fn polar() -> Self {
        ChartMap {
            name: "polar".into(),
            forward: Arc::new(|p: &[f64]| vec![p[0].hypot(p[1]), p[1].atan2(p[0])]),
            inverse: Arc::new(|q: &[f64]| vec![q[0] * q[1].cos(), q[0] * q[1].sin()]),
        }
    }

    /// `(ln r, θ)` with `θ ∈ (−π, π)`.
    pub fn log_polar() -> Self {
        ChartMap {
            name: "log-polar".into(),
            forward: Arc::new(|p: &[f64]| vec![p[0].hypot(p[1]).ln(), p[1].atan2(p[0])]),
            inverse: Arc::new(|q: &[f64]| {
                let r = q[0].exp();
                vec![r * q[1].cos(), r * q[1].sin()]
            }),
        }
    }
}

/// Jacobian `∂y_a/∂y_b` of the transition map `y_a ∘ y_b⁻¹` at the base point `p`,
/// by the fourth-order five-point stencil with step `h` in the `y_b` coordinates.
pub fn transition_jacobian(a: &ChartMap, b: &ChartMap, p: &[f64], h: f64) -> RMat {
    let yb = (b.forward)(p);
    let n = yb.len();
    let mut jac = RMat::zeros(n, n);
    let mut y = yb.clone();
    let mut at = |j: usize, t: f64| {
        y[j] = yb[j] + t;
        let v = (a.forward)(&(b.inverse)(&y));
        y[j] = yb[j];
        v
    };
    for j in 0..n {
        let (p2, p1, m1, m2) = (at(j, 2.0 * h), at(j, h), at(j, -h), at(j, -2.0 * h));
        for i in 0..n {
            jac[(i, j)] = (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * h);
        }
    }
    jac
}

/// Jacobian cocycle `J_{ab} = ∂y_a/∂y_b` over charts sharing the given base samples.
///
/// Every chart and every overlap is the full sample set; points are base
/// (Cartesian) coordinates.
pub fn jacobian_cocycle(charts: Vec<ChartMap>, samples: Vec<Vec<f64>>, h: f64) -> Cocycle {
    let n = charts.len();
    let dim = samples.first().map_or(0, |s| s.len());
    let mut cover = Cover::new(charts.iter().map(|c| (c.name.clone(), Component::sampled(samples.clone()))).collect());
    for a in 0..n {
        for b in a + 1..n {
            cover.set_overlap(a, b, vec![Component::sampled(samples.clone())]);
        }
    }
    let mut c = Cocycle::new(cover, GroupKind::Matrix(dim));
    for a in 0..n {
        for b in 0..n {
            let (ca, cb) = (charts[a].clone(), charts[b].clone());
            c.set(a, b, Transition::Field(Arc::new(move |p: &[f64]| GVal::Mat(transition_jacobian(&ca, &cb, p, h).map(re)))));
        }
    }
    c
}

pub type SectionField = Arc<dyn Fn(&[f64]) -> Vec<C64> + Send + Sync>;

/// `s_V(x) = h_{VW}(x) s_W(x)` for a matrix cocycle.
pub fn section_transition(s_w: SectionField, c: &Cocycle, w: usize, v: usize) -> Result<impl Fn(&[f64]) -> Result<Vec<C64>, BundleError>, BundleError> {
    matrix_dim(c)?;
    let c = c.clone();
    Ok(move |x: &[f64]| {
        let m = c.eval_matrix(v, w, x)?;
        let s = s_w(x);
        if s.len() != m.ncols() {
            return Err(BundleError::DimensionMismatch("section length differs from fiber dimension".into()));
        }
        Ok((m * nalgebra::DVector::from_vec(s)).iter().copied().collect())
    })
}

/// Element `(J, g, L₁..L_n)` of the connection-bundle group `GL(n) × G × 𝔤ⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CbgElement {
    pub j: RMat,
    pub g: CMat,
    pub l: Vec<CMat>,
}

impl CbgElement {
    pub fn new(j: RMat, g: CMat, l: Vec<CMat>) -> Result<Self, BundleError> {
        if j.nrows() != j.ncols() || l.len() != j.nrows() || !g.is_square() || l.iter().any(|x| x.shape() != g.shape()) {
            return Err(BundleError::DimensionMismatch("connection-bundle element shapes".into()));
        }
        if j.clone().try_inverse().is_none() {
            return Err(BundleError::SingularJ);
        }
        g.clone().try_inverse().ok_or_else(|| BundleError::DimensionMismatch("g must be invertible".into()))?;
        Ok(CbgElement { j, g, l })
    }

    pub fn identity(n: usize, k: usize) -> Self {
        CbgElement { j: RMat::identity(n, n), g: CMat::identity(k, k), l: vec![CMat::zeros(k, k); n] }
    }

    /// `J* = (J⁻¹)ᵀ`.
    pub fn j_star(&self) -> Result<RMat, BundleError> {
        self.j.clone().try_inverse().map(|i| i.transpose()).ok_or(BundleError::SingularJ)
    }

    fn ad(&self, x: &CMat) -> Result<CMat, BundleError> {
        let gi = self.g.clone().try_inverse().ok_or_else(|| BundleError::DimensionMismatch("g must be invertible".into()))?;
        Ok(&self.g * x * gi)
    }
}

/// `(J,g,L)(J',g',L') = (JJ', gg', Ad_g L'_i + Σ_j J'_{ji} L_j)`.
///
/// The translation part carries `J'ᵀ L`, which makes [`cbg_act`] a left action;
/// for `J' = I` it reduces to `Ad_g L' + L`.
pub fn cbg_mul(a: &CbgElement, b: &CbgElement) -> Result<CbgElement, BundleError> {
    if a.j.shape() != b.j.shape() || a.g.shape() != b.g.shape() {
        return Err(BundleError::DimensionMismatch("connection-bundle elements of different shapes".into()));
    }
    let n = a.j.nrows();
    let mut l = Vec::with_capacity(n);
    for i in 0..n {
        let mut li = a.ad(&b.l[i])?;
        for j in 0..n {
            li += &a.l[j] * re(b.j[(j, i)]);
        }
        l.push(li);
    }
    Ok(CbgElement { j: &a.j * &b.j, g: &a.g * &b.g, l })
}

/// `K'_i = Σ_j J*_{ij} (Ad_g K_j + L_j)`.
pub fn cbg_act(a: &CbgElement, k: &[CMat]) -> Result<Vec<CMat>, BundleError> {
    let n = a.j.nrows();
    if k.len() != n {
        return Err(BundleError::DimensionMismatch("fiber element has wrong length".into()));
    }
    let js = a.j_star()?;
    let inner: Vec<CMat> = k.iter().zip(&a.l).map(|(kj, lj)| a.ad(kj).map(|x| x + lj)).collect::<Result<_, _>>()?;
    Ok((0..n)
        .map(|i| {
            let mut acc = CMat::zeros(a.g.nrows(), a.g.ncols());
            for (j, x) in inner.iter().enumerate() {
                acc += x * re(js[(i, j)]);
            }
            acc
        })
        .collect())
}

/// Inverse in the connection-bundle group.
pub fn cbg_inverse(a: &CbgElement) -> Result<CbgElement, BundleError> {
    let ji = a.j.clone().try_inverse().ok_or(BundleError::SingularJ)?;
    let gi = a.g.clone().try_inverse().ok_or_else(|| BundleError::DimensionMismatch("g must be invertible".into()))?;
    let n = a.j.nrows();
    // a·a⁻¹ = e forces Ad_g L'_i = −Σ_j (J⁻¹)_{ji} L_j.
    let l = (0..n)
        .map(|i| {
            let mut s = CMat::zeros(a.g.nrows(), a.g.ncols());
            for j in 0..n {
                s += &a.l[j] * re(ji[(j, i)]);
            }
            -(&gi * s * &a.g)
        })
        .collect();
    Ok(CbgElement { j: ji, g: gi, l })
}

/// Circle parameter `x` with `φ(x) = e^{iπx}`, reduced to `[−1, 1)`.
pub fn circle_param(x: f64) -> f64 {
    (x + 1.0).rem_euclid(2.0) - 1.0
}

fn arc_contains(lo: f64, hi: f64) -> impl Fn(&[f64]) -> bool + Send + Sync {
    move |p: &[f64]| {
        let x = circle_param(p[0]);
        [x - 2.0, x, x + 2.0].iter().any(|y| lo < *y && *y < hi)
    }
}

fn arc_samples(lo: f64, hi: f64, k: usize) -> Vec<Vec<f64>> {
    (0..k).map(|i| vec![circle_param(lo + (hi - lo) * (i as f64 + 0.5) / k as f64)]).collect()
}

/// Two-arc cover of `S¹`: `U₁ = φ(−¾, ¾)`, `U₂ = φ(¼, 7/4)`, overlap components
/// `W₁ = φ(−¾, −¼)` and `W₂ = φ(¼, ¾)`; `k` samples per piece.
pub fn circle_cover(k: usize) -> Cover {
    let mut cover = Cover::new(vec![
        ("U1".into(), Component::region(arc_samples(-0.75, 0.75, 3 * k), arc_contains(-0.75, 0.75))),
        ("U2".into(), Component::region(arc_samples(0.25, 1.75, 3 * k), arc_contains(0.25, 1.75))),
    ]);
    cover.set_overlap(
        0,
        1,
        vec![
            Component::region(arc_samples(-0.75, -0.25, k), arc_contains(-0.75, -0.25)),
            Component::region(arc_samples(0.25, 0.75, k), arc_contains(0.25, 0.75)),
        ],
    );
    cover
}

/// `ℤ₂`-cocycle on [`circle_cover`] with values `w1`, `w2` (0 = identity, 1 = −1).
pub fn z2_circle_cocycle(k: usize, w1: usize, w2: usize) -> Cocycle {
    let mut c = Cocycle::new(circle_cover(k), GroupKind::Finite(FiniteGroup::cyclic(2)));
    c.set_with_inverse(1, 0, Transition::PerComponent(vec![GVal::Fin(w1), GVal::Fin(w2)]));
    c
}

/// Connected double cover `z ↦ z²`: `+1` on `W₁`, `−1` on `W₂`.
pub fn z2_double_cover(k: usize) -> Cocycle {
    z2_circle_cocycle(k, 0, 1)
}

/// Moebius gluing: `h₂₁ = ±1` acting on the fiber `[−1, 1]` as a 1×1 matrix cocycle.
pub fn moebius(k: usize) -> Cocycle {
    z2_double_cover(k).represent(1, |i| CMat::from_element(1, 1, re(if i == 0 { 1.0 } else { -1.0 }))).expect("finite cocycle")
}

/// JSON fixture for covers and chart-constant cocycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocycleFixture {
    pub charts: Vec<ChartFixture>,
    pub group: GroupFixture,
    pub overlaps: Vec<OverlapFixture>,
    /// Expected outcome of the coboundary search (finite groups only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_trivial: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartFixture {
    pub name: String,
    pub samples: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroupFixture {
    /// Cayley table over labels `0..order`, label 0 need not be the identity.
    Finite { table: Vec<Vec<usize>> },
    Matrix { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapFixture {
    /// Ordered pair `[α, β]`; values are `g_{αβ}`.
    pub charts: [String; 2],
    pub components: Vec<ComponentFixture>,
    /// Values of `g_{βα}`; derived as inverses when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reverse: Option<Vec<ValueFixture>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentFixture {
    pub samples: Vec<Vec<f64>>,
    pub value: ValueFixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueFixture {
    Label(usize),
    /// Row-major real entries, with optional imaginary parts.
    Matrix {
        re: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<f64>>,
    },
}

impl ValueFixture {
    fn to_gval(&self, group: &GroupKind) -> Result<GVal, BundleError> {
        match (self, group) {
            (ValueFixture::Label(i), GroupKind::Finite(g)) if *i < g.order() => Ok(GVal::Fin(*i)),
            (ValueFixture::Matrix { re: r, im }, GroupKind::Matrix(d)) => {
                let im = im.clone().unwrap_or_else(|| vec![0.0; r.len()]);
                if r.len() != d * d || im.len() != d * d {
                    return Err(BundleError::Fixture(format!("matrix value needs {} entries", d * d)));
                }
                Ok(GVal::Mat(CMat::from_fn(*d, *d, |i, j| C64::new(r[i * d + j], im[i * d + j]))))
            }
            _ => Err(BundleError::Fixture("value does not match the group kind".into())),
        }
    }

    fn from_gval(v: &GVal) -> Self {
        match v {
            GVal::Fin(i) => ValueFixture::Label(*i),
            GVal::Mat(m) => {
                let d = m.nrows();
                let r: Vec<f64> = (0..d * d).map(|k| m[(k / d, k % d)].re).collect();
                let im: Vec<f64> = (0..d * d).map(|k| m[(k / d, k % d)].im).collect();
                let im = if im.iter().all(|x| *x == 0.0) { None } else { Some(im) };
                ValueFixture::Matrix { re: r, im }
            }
        }
    }
}

impl CocycleFixture {
    pub fn from_json(s: &str) -> Result<Self, BundleError> {
        serde_json::from_str(s).map_err(|e| BundleError::Fixture(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fixture serializes")
    }

    /// Builds the cover and cocycle described by the fixture.
    pub fn build(&self) -> Result<Cocycle, BundleError> {
        let group = match &self.group {
            GroupFixture::Finite { table } => {
                GroupKind::Finite(FiniteGroup::from_table(table.clone()).map_err(|e| BundleError::Fixture(e.to_string()))?)
            }
            GroupFixture::Matrix { dim } => GroupKind::Matrix(*dim),
        };
        let mut cover = Cover::new(self.charts.iter().map(|c| (c.name.clone(), Component::sampled(c.samples.clone()))).collect());
        let mut entries = Vec::new();
        for o in &self.overlaps {
            let a = cover.chart_index(&o.charts[0])?;
            let b = cover.chart_index(&o.charts[1])?;
            if a == b {
                return Err(BundleError::Fixture("overlap of a chart with itself".into()));
            }
            cover.set_overlap(a, b, o.components.iter().map(|c| Component::sampled(c.samples.clone())).collect());
            let vals = o.components.iter().map(|c| c.value.to_gval(&group)).collect::<Result<Vec<_>, _>>()?;
            let rev = match &o.reverse {
                Some(r) if r.len() != vals.len() => return Err(BundleError::Fixture("reverse length differs".into())),
                Some(r) => Some(r.iter().map(|v| v.to_gval(&group)).collect::<Result<Vec<_>, _>>()?),
                None => None,
            };
            entries.push((a, b, vals, rev));
        }
        let mut c = Cocycle::new(cover, group);
        for (a, b, vals, rev) in entries {
            match rev {
                Some(r) => {
                    c.set(a, b, Transition::PerComponent(vals));
                    c.set(b, a, Transition::PerComponent(r));
                }
                None => c.set_with_inverse(a, b, Transition::PerComponent(vals)),
            }
        }
        Ok(c)
    }

    /// Fixture of a chart-constant cocycle; each overlap is stored once as `(α, β)`
    /// with `α < β` plus its reverse values.
    pub fn from_cocycle(c: &Cocycle) -> Result<Self, BundleError> {
        let group = match &c.group {
            GroupKind::Finite(g) => GroupFixture::Finite { table: g.table().to_vec() },
            GroupKind::Matrix(d) => GroupFixture::Matrix { dim: *d },
        };
        let charts = c
            .cover
            .charts
            .iter()
            .enumerate()
            .map(|(i, name)| ChartFixture { name: name.clone(), samples: c.cover.overlap(i, i).iter().flat_map(|k| k.samples.clone()).collect() })
            .collect();
        let mut overlaps = Vec::new();
        let n = c.cover.len();
        for a in 0..n {
            for b in a + 1..n {
                let comps = c.cover.overlap(a, b);
                if comps.is_empty() {
                    continue;
                }
                let mut fwd = Vec::new();
                let mut rev = Vec::new();
                for (k, comp) in comps.iter().enumerate() {
                    let x = comp.samples.first().ok_or_else(|| BundleError::Fixture("overlap component without samples".into()))?;
                    fwd.push(ComponentFixture { samples: comp.samples.clone(), value: ValueFixture::from_gval(&c.eval_in(a, b, k, x)?) });
                    rev.push(ValueFixture::from_gval(&c.eval_in(b, a, k, x)?));
                }
                overlaps.push(OverlapFixture { charts: [c.cover.charts[a].clone(), c.cover.charts[b].clone()], components: fwd, reverse: Some(rev) });
            }
        }
        Ok(CocycleFixture { charts, group, overlaps, expect_trivial: None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::annulus_samples;
    use crate::algebra::random_matrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix_cocycle(rng: &mut impl Rng) -> Cocycle {
        // coboundary of a random cochain is a cocycle
        let cover = {
            let s: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
            let mut c = Cover::new((0..3).map(|i| (format!("U{i}"), Component::sampled(s.clone()))).collect());
            for a in 0..3 {
                for b in a + 1..3 {
                    c.set_overlap(a, b, vec![Component::sampled(s.clone())]);
                }
            }
            c
        };
        let gs: Vec<CMat> = (0..3).map(|_| random_matrix(rng, 2, 0.5) + CMat::identity(2, 2)).collect();
        let mut c = Cocycle::new(cover, GroupKind::Matrix(2));
        for a in 0..3 {
            for b in 0..3 {
                let m = &gs[a] * gs[b].clone().try_inverse().unwrap();
                c.set(a, b, Transition::PerComponent(vec![GVal::Mat(m)]));
            }
        }
        c
    }

    #[test]
    fn identity_cocycle_is_trivial() {
        let c = z2_circle_cocycle(4, 0, 0);
        assert!(validate_cocycle(&c, 0.0).unwrap().passes);
        assert_eq!(is_coboundary(&c).unwrap(), Coboundary::Witness(vec![0, 0]));
    }

    #[test]
    fn double_cover_is_not_coboundary() {
        let c = z2_double_cover(4);
        let rep = validate_cocycle(&c, 0.0).unwrap();
        assert!(rep.passes, "{rep:?}");
        assert_eq!(is_coboundary(&c).unwrap(), Coboundary::NotCoboundary { checked: 4 });
        let trivial = z2_circle_cocycle(4, 0, 0);
        assert_eq!(gauge_equivalence(&c, &trivial).unwrap(), None);
    }

    #[test]
    fn constant_minus_one_is_coboundary() {
        let c = z2_circle_cocycle(4, 1, 1);
        assert!(validate_cocycle(&c, 0.0).unwrap().passes);
        // g₂₁ = −1 = g₂ g₁⁻¹ with g₁ = +1, g₂ = −1
        assert_eq!(is_coboundary(&c).unwrap(), Coboundary::Witness(vec![0, 1]));
    }

    #[test]
    fn moebius_validates() {
        let c = moebius(4);
        assert!(validate_cocycle(&c, 1e-15).unwrap().passes);
        let on_w2 = c.eval_matrix(1, 0, &[0.5]).unwrap();
        assert_eq!(on_w2[(0, 0)], re(-1.0));
        assert!(matches!(c.eval(1, 0, &[0.0]), Err(BundleError::OutsideOverlap(..))));
    }

    #[test]
    fn broken_cocycle_detected() {
        let mut c = z2_double_cover(3);
        c.set(0, 1, Transition::PerComponent(vec![GVal::Fin(0), GVal::Fin(0)]));
        let rep = validate_cocycle(&c, 0.0).unwrap();
        assert!(!rep.passes);
        assert_eq!(rep.inverse, 1.0);
        assert!(matches!(is_coboundary(&moebius(2)), Err(BundleError::Unsupported(_))));
    }

    #[test]
    fn z2_equivalence_is_an_equivalence_relation() {
        let all: Vec<Cocycle> = (0..4).map(|i| z2_circle_cocycle(3, i & 1, i >> 1)).collect();
        let eq = |a: &Cocycle, b: &Cocycle| gauge_equivalence(a, b).unwrap().is_some();
        for a in &all {
            assert!(eq(a, a));
            for b in &all {
                assert_eq!(eq(a, b), eq(b, a));
                for c in &all {
                    if eq(a, b) && eq(b, c) {
                        assert!(eq(a, c));
                    }
                }
            }
        }
        // two classes: {(0,0),(1,1)} and {(1,0),(0,1)}
        assert!(eq(&all[0], &all[3]) && eq(&all[1], &all[2]) && !eq(&all[0], &all[1]));
    }

    #[test]
    fn jacobian_cocycle_on_annulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = jacobian_cocycle(vec![ChartMap::cartesian(), ChartMap::polar(), ChartMap::log_polar()], annulus_samples(&mut rng, 40), 1e-3);
        let rep = validate_cocycle(&c, 1e-6).unwrap();
        assert!(rep.passes, "{rep:?}");
        // ∂(r,θ)/∂(x,y) at (x,y) = (1,1) is [[1/√2, 1/√2], [−1/2, 1/2]]
        let j = transition_jacobian(&ChartMap::polar(), &ChartMap::cartesian(), &[1.0, 1.0], 1e-5);
        let s = 0.5f64.sqrt();
        let want = RMat::from_row_slice(2, 2, &[s, s, -0.5, 0.5]);
        assert!((j - want).abs().max() < 1e-9);
    }

    #[test]
    fn tangent_vector_section_transition() {
        let samples = vec![vec![1.0, 0.0]];
        let c = jacobian_cocycle(vec![ChartMap::cartesian(), ChartMap::polar()], samples, 1e-5);
        let s: SectionField = Arc::new(|_| vec![re(0.0), re(1.0)]);
        let polar = section_transition(s, &c, 0, 1).unwrap();
        let v = polar(&[1.0, 0.0]).unwrap();
        assert!((v[0]).norm() < 1e-10 && (v[1] - re(1.0)).norm() < 1e-10);
        assert!(matches!(polar(&[0.0, 1.0]), Err(BundleError::OutsideOverlap(..))));
    }

    #[test]
    fn derived_cocycles_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = random_matrix_cocycle(&mut rng);
        let c2 = random_matrix_cocycle(&mut rng);
        for d in [dual(&c).unwrap(), tensor(&c, &c2).unwrap(), exterior_power_cocycle(&c, 2).unwrap(), density(&c, 1.0).unwrap()] {
            assert!(validate_cocycle(&d, 1e-10).unwrap().passes);
        }
        let dd = dual(&dual(&c).unwrap()).unwrap();
        for (a, b) in c.pairs() {
            let x = [0.0];
            assert!(max_abs(&(dd.eval_matrix(a, b, &x).unwrap() - c.eval_matrix(a, b, &x).unwrap())) < 1e-12);
        }
    }

    #[test]
    fn orthogonal_cocycle_is_self_dual() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let samples: Vec<Vec<f64>> = annulus_samples(&mut rng, 10);
        // rotation field R(θ(x)) between two copies of the plane
        let mut cover = Cover::new(vec![("A".into(), Component::sampled(samples.clone())), ("B".into(), Component::sampled(samples.clone()))]);
        cover.set_overlap(0, 1, vec![Component::sampled(samples.clone())]);
        let mut c = Cocycle::new(cover, GroupKind::Matrix(2));
        c.set_with_inverse(
            0,
            1,
            Transition::Field(Arc::new(|x: &[f64]| {
                let t = x[1].atan2(x[0]);
                GVal::Mat(CMat::from_row_slice(2, 2, &[re(t.cos()), re(-t.sin()), re(t.sin()), re(t.cos())]))
            })),
        );
        let d = dual(&c).unwrap();
        for x in &samples {
            assert!(max_abs(&(d.eval_matrix(0, 1, x).unwrap() - c.eval_matrix(0, 1, x).unwrap())) < 1e-12);
        }
    }

    #[test]
    fn fixture_round_trip() {
        let c = z2_double_cover(2);
        let f = CocycleFixture::from_cocycle(&c).unwrap();
        let back = CocycleFixture::from_json(&f.to_json()).unwrap().build().unwrap();
        assert!(validate_cocycle(&back, 0.0).unwrap().passes);
        assert!(matches!(is_coboundary(&back).unwrap(), Coboundary::NotCoboundary { .. }));
        let m = CocycleFixture::from_cocycle(&moebius(2)).unwrap();
        let back = CocycleFixture::from_json(&m.to_json()).unwrap().build().unwrap();
        assert!(validate_cocycle(&back, 0.0).unwrap().passes);
        assert!(CocycleFixture::from_json("{").is_err());
    }

    #[test]
    fn cbg_examples() {
        let e = CbgElement::identity(2, 2);
        let k = vec![CMat::identity(2, 2), CMat::zeros(2, 2)];
        assert_eq!(cbg_act(&e, &k).unwrap(), k);
        let l1 = vec![CMat::identity(2, 2), CMat::zeros(2, 2)];
        let l2 = vec![CMat::zeros(2, 2), CMat::identity(2, 2) * re(2.0)];
        let t1 = CbgElement::new(RMat::identity(2, 2), CMat::identity(2, 2), l1.clone()).unwrap();
        let t2 = CbgElement::new(RMat::identity(2, 2), CMat::identity(2, 2), l2.clone()).unwrap();
        let p = cbg_mul(&t1, &t2).unwrap();
        assert_eq!(p.l, vec![&l1[0] + &l2[0], &l1[1] + &l2[1]]);
        assert_eq!(CbgElement::new(RMat::zeros(2, 2), CMat::identity(2, 2), l1), Err(BundleError::SingularJ));
    }

    fn random_cbg(rng: &mut impl Rng) -> CbgElement {
        let j = RMat::from_fn(2, 2, |_, _| rng.gen_range(-1.0..1.0)) + RMat::identity(2, 2) * 1.5;
        let a = crate::algebra::random_real_matrix(rng, 3, 1.0);
        let g = crate::algebra::expm(&(&a - a.transpose()));
        let l = (0..2).map(|_| crate::algebra::random_real_matrix(rng, 3, 1.0)).collect();
        CbgElement::new(j, g, l).unwrap()
    }

    proptest! {
        #[test]
        fn gauge_cochain_preserves_cocycles(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_matrix_cocycle(&mut rng);
            let phi = Cochain::constant((0..3).map(|_| GVal::Mat(random_matrix(&mut rng, 2, 0.4) + CMat::identity(2, 2))).collect());
            let g = apply_gauge_cochain(&c, &phi).unwrap();
            prop_assert!(validate_cocycle(&g, 1e-9).unwrap().passes);
            let back = apply_gauge_cochain(&g, &phi.inverse(&c.group)).unwrap();
            for (a, b) in c.pairs() {
                let x = [2.0];
                prop_assert!(max_abs(&(back.eval_matrix(a, b, &x).unwrap() - c.eval_matrix(a, b, &x).unwrap())) < 1e-10);
            }
        }

        #[test]
        fn section_round_trip(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples = annulus_samples(&mut rng, 3);
            let c = jacobian_cocycle(vec![ChartMap::cartesian(), ChartMap::log_polar()], samples.clone(), 1e-3);
            let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let s: SectionField = Arc::new(move |x: &[f64]| vec![re(a + x[0] * x[1]), re(b - x[0])]);
            let there = section_transition(s.clone(), &c, 0, 1).unwrap();
            let there: SectionField = Arc::new(move |x: &[f64]| there(x).unwrap());
            let back = section_transition(there, &c, 1, 0).unwrap();
            for x in &samples {
                let v = back(x).unwrap();
                for (u, w) in v.iter().zip(s(x)) { prop_assert!((u - w).norm() < 1e-10); }
            }
        }

        #[test]
        fn cbg_group_and_action_laws(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b, c) = (random_cbg(&mut rng), random_cbg(&mut rng), random_cbg(&mut rng));
            let l = cbg_mul(&cbg_mul(&a, &b).unwrap(), &c).unwrap();
            let r = cbg_mul(&a, &cbg_mul(&b, &c).unwrap()).unwrap();
            let scale = 1.0 + l.l.iter().map(max_abs).fold(0.0, f64::max);
            prop_assert!((l.j - r.j).abs().max() < 1e-12 * scale);
            prop_assert!(max_abs(&(l.g - r.g)) < 1e-12);
            for (x, y) in l.l.iter().zip(&r.l) { prop_assert!(max_abs(&(x - y)) < 1e-12 * scale); }
            let k: Vec<CMat> = (0..2).map(|_| random_matrix(&mut rng, 3, 1.0)).collect();
            let lhs = cbg_act(&cbg_mul(&a, &b).unwrap(), &k).unwrap();
            let rhs = cbg_act(&a, &cbg_act(&b, &k).unwrap()).unwrap();
            for (x, y) in lhs.iter().zip(&rhs) { prop_assert!(max_abs(&(x - y)) < 1e-10 * scale); }
            let e = cbg_mul(&a, &cbg_inverse(&a).unwrap()).unwrap();
            prop_assert!((e.j - RMat::identity(2, 2)).abs().max() < 1e-12);
            for x in &e.l { prop_assert!(max_abs(x) < 1e-10 * scale); }
        }
    }
}
