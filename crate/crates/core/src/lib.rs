//! Numerical toolkit for classical gauge theory on a desk-sized scale.
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`]: finite group actions and matrix Lie group kernels.
//! * [`clifford`]: Clifford algebras of arbitrary signature, Pin/Spin, gamma matrices.
//! * [`forms`]: exterior calculus on a single chart with a pseudo-metric.
//! * [`bundles`]: covers, transition cocycles, coboundaries, the connection-bundle group.
//! * [`connections`]: connection coefficients, gauge potentials, curvature, Levi-Civita.
//! * [`transport`]: time-ordered exponentials, parallel transport and holonomy.
//! * [`physics`]: Maxwell, the Dirac monopole, Dirac operators and Seiberg-Witten residuals.
//! * [`fixtures`]: seeded potentials, gauge fields, metrics and frames used by the checks.
//! * [`cli`]: the check runner behind the `gaugekit` binary.
//!
//! All derivatives are central finite differences of caller-supplied closures;
//! closures must be reentrant (`Send + Sync`).

pub mod algebra;
pub mod bundles;
pub mod cli;
pub mod clifford;
pub mod connections;
pub mod fixtures;
pub mod forms;
pub mod physics;
pub mod poly;
pub mod transport;

pub use nalgebra::Complex;

/// Complex double.
pub type C64 = Complex<f64>;

/// Dense complex matrix used for group and algebra elements.
pub type CMat = nalgebra::DMatrix<C64>;

/// Dense real matrix.
pub type RMat = nalgebra::DMatrix<f64>;

/// Sign choice for volume elements and Hodge stars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        }
    }
}

/// Purely real complex number.
#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Observed convergence order from errors at steps that shrink by `ratio` each time.
///
/// Returns the least-squares slope of `log(err)` against `log(step)`.
pub fn observed_order(steps: &[f64], errs: &[f64]) -> f64 {
    assert_eq!(steps.len(), errs.len());
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .zip(errs)
        .map(|(s, e)| (s.ln(), e.max(f64::MIN_POSITIVE).ln()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Whether an observed order reaches `target` at the two-decimal precision orders are reported with.
///
/// A fit of an error `C hᵏ(1 + κh² + …)` returns `k + O(κh²)`; the sign of the
/// jitter follows `κ`, not the method.
pub fn meets_order(observed: f64, target: f64) -> bool {
    (observed * 100.0).round() / 100.0 >= target
}

/// Largest entry modulus of a complex matrix.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}
