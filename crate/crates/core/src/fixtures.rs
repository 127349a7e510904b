//! Seeded fixtures shared by the check runner, the unit tests and the acceptance suite.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;

use crate::algebra::{expm, su2_basis};
use crate::clifford::Signature;
use crate::connections::{potential, MatField};
use crate::forms::{binomial, Chart, Form, MetricField, PForm};
use crate::poly::Poly;
use crate::transport::TimeField;
use crate::{re, CMat, RMat};

fn su2_combination(ps: &[Poly], x: &[f64]) -> CMat {
    ps.iter().zip(su2_basis().iter()).fold(CMat::zeros(2, 2), |acc, (p, t)| acc + t * p.eval(x))
}

/// `A = Σ_j A_j dx^j` with each `A_j` a random real polynomial combination of `su(2)` generators.
pub fn su2_poly_potential(rng: &mut impl Rng, n: usize, degree: u32, scale: f64) -> Form<CMat> {
    let polys: Vec<Vec<Poly>> = (0..n).map(|_| (0..3).map(|_| Poly::random(rng, n, degree, scale, false)).collect()).collect();
    potential(n, move |x| polys.iter().map(|ps| su2_combination(ps, x)).collect())
}

/// `g = exp(Σ p_a(x) T_a)`, an `SU(2)`-valued gauge field.
pub fn su2_poly_gauge(rng: &mut impl Rng, n: usize, degree: u32, scale: f64) -> MatField {
    let polys: Vec<Poly> = (0..3).map(|_| Poly::random(rng, n, degree, scale, false)).collect();
    Arc::new(move |x: &[f64]| expm(&su2_combination(&polys, x)))
}

/// `A(t) = Σ p_a(t) T_a` with random real polynomials `p_a` of the given degree.
pub fn su2_poly_time_field(rng: &mut impl Rng, degree: u32) -> TimeField {
    let ps: Vec<Poly> = (0..3).map(|_| Poly::random(rng, 1, degree, 1.0, false)).collect();
    Arc::new(move |t| su2_combination(&ps, &[t]))
}

/// Interior grid with `k` points per axis on `[−½, ½]ⁿ`.
pub fn cube_samples(n: usize, k: usize) -> Vec<Vec<f64>> {
    Chart::cube(n, -0.5, 0.5).expect("non-empty cube").interior_grid(k)
}

/// Round sphere `dθ² + sin²θ dφ²` in the chart `(θ, φ)`.
pub fn sphere_metric() -> MetricField {
    MetricField::new(2, Signature { r: 2, s: 0 }, |x: &[f64]| RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, x[0].sin().powi(2)])))
}

/// Random points in the annulus `1 < r < 2`, away from the negative x-axis.
pub fn annulus_samples(rng: &mut impl Rng, k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|_| {
            let r = rng.gen_range(1.0..2.0);
            let t: f64 = rng.gen_range(-0.9 * PI..0.9 * PI);
            vec![r * t.cos(), r * t.sin()]
        })
        .collect()
}

/// Non-holonomic frame on ℝ³; columns are the frame vectors.
pub fn twisted_frame() -> Arc<dyn Fn(&[f64]) -> RMat + Send + Sync> {
    Arc::new(|x: &[f64]| RMat::from_row_slice(3, 3, &[1.0, 0.4 * x[1].sin(), 0.0, 0.0, 1.0 + 0.2 * x[0] * x[0], 0.3 * x[2], 0.3, 0.0, 1.0]))
}

/// Smooth transcendental `p`-form on ℝ³ with distinct components.
pub fn trig_form(p: usize) -> PForm {
    Form::new(3, p, move |x: &[f64]| {
        (0..binomial(3, p))
            .map(|k| re((1.3 * x[0] + 0.7 * k as f64).sin() * (0.9 * x[1] - x[2]).cos() + 0.5 * (x[2] * (k as f64 + 1.0)).exp()))
            .collect()
    })
    .expect("degree ≤ 3")
}
