//! Worked examples: Maxwell theory as a U(1) gauge theory, the Dirac monopole,
//! Dirac operators in three and four dimensions, and Seiberg-Witten residuals.
//!
//! Two signature conventions meet here. Forms and Hodge stars use the metric
//! `diag(1, −1, −1, −1)` on `(t, x, y, z)`, which has signature `(1, 3)`.
//! Spinors use the Clifford algebra `Cl(3, 1)`, where `v² = −q(v)` puts the
//! timelike generator in the negative slot: `γ(e_t)² = +1`, `γ(e_x)² = −1`.
//! [`spacetime_gammas`] maps coordinate index `μ` to the matching generator.
//!
//! Real-valued U(1) potentials `A` enter the gauge machinery as the
//! `𝔲(1) = iℝ`-valued potential `iA`, so `φ = e^{iΛ}` acts by `A ↦ A − dΛ`.

use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

use crate::clifford::{constructed_gamma_rep, idempotents, pauli_rep, MatrixRep, Signature};
use crate::connections::{field_partials, MatField, Section};
use crate::forms::{
    codifferential, ext_d, integrate_nform, pullback, self_dual_split, tuples, Chart, Form, FormsError, MetricField, PForm,
};
use crate::{max_abs, re, CMat, Orientation, RMat, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error("Maxwell sector needs signature (1,3), got ({0},{1})")]
    WrongSignature(usize, usize),
    #[error("point {0:?} lies within {1:e} of a Dirac string")]
    OnDiracString(Vec<f64>, f64),
    #[error("spinor has a negative-half component of size {0:e}")]
    NotPositive(f64),
    #[error("no plane-wave solution: smallest singular value {0:e}")]
    NoKernel(f64),
    #[error("frame is not orthonormal (defect {0:e})")]
    NotOrthonormal(f64),
}

/// Real vector field on a chart.
pub type Field3 = Arc<dyn Fn(&[f64]) -> [f64; 3] + Send + Sync>;
pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Electric and magnetic fields on a `(t, x, y, z)` chart.
#[derive(Clone)]
pub struct EMField {
    pub e: Field3,
    pub b: Field3,
}

impl EMField {
    pub fn new(e: impl Fn(&[f64]) -> [f64; 3] + Send + Sync + 'static, b: impl Fn(&[f64]) -> [f64; 3] + Send + Sync + 'static) -> Self {
        EMField { e: Arc::new(e), b: Arc::new(b) }
    }

    pub fn uniform(e: [f64; 3], b: [f64; 3]) -> Self {
        EMField::new(move |_| e, move |_| b)
    }

    /// `B = ∇×𝐀`, `E = −∇V − ∂𝐀/∂t` by central differences.
    pub fn from_potentials(v: ScalarField, a: Field3, h: f64) -> Self {
        let (v2, a2) = (v.clone(), a.clone());
        let da = move |x: &[f64], mu: usize| -> [f64; 3] {
            let mut up = x.to_vec();
            let mut dn = x.to_vec();
            up[mu] += h;
            dn[mu] -= h;
            let (p, m) = (a2(&up), a2(&dn));
            [(p[0] - m[0]) / (2.0 * h), (p[1] - m[1]) / (2.0 * h), (p[2] - m[2]) / (2.0 * h)]
        };
        let da2 = da.clone();
        EMField::new(
            move |x| {
                let dt = da(x, 0);
                let mut g = [0.0; 3];
                for (i, gi) in g.iter_mut().enumerate() {
                    let mut up = x.to_vec();
                    let mut dn = x.to_vec();
                    up[i + 1] += h;
                    dn[i + 1] -= h;
                    *gi = (v2(&up) - v2(&dn)) / (2.0 * h);
                }
                [-g[0] - dt[0], -g[1] - dt[1], -g[2] - dt[2]]
            },
            move |x| {
                let (dx, dy, dz) = (da2(x, 1), da2(x, 2), da2(x, 3));
                [dy[2] - dz[1], dz[0] - dx[2], dx[1] - dy[0]]
            },
        )
    }
}

/// `A = −V dt + A_x dx + A_y dy + A_z dz`.
pub fn potential_form(v: ScalarField, a: Field3) -> PForm {
    Form::new(4, 1, move |x| {
        let av = a(x);
        vec![re(-v(x)), re(av[0]), re(av[1]), re(av[2])]
    })
    .expect("1-form on 4 coordinates")
}

/// `j = ρ dt − J_x dx − J_y dy − J_z dz`, so that `δF = j` with `δ = *d*` encodes
/// `∇·E = ρ` and `∇×B − ∂E/∂t = J`.
pub fn current_form(rho: ScalarField, j: Field3) -> PForm {
    potential_form(rho, j).scale(-1.0)
}

/// `F = −E_x dt∧dx − E_y dt∧dy − E_z dt∧dz + B_x dy∧dz + B_y dz∧dx + B_z dx∧dy`.
pub fn assemble_f(em: &EMField) -> PForm {
    let em = em.clone();
    // components in order tx, ty, tz, xy, xz, yz
    Form::new(4, 2, move |x| {
        let (e, b) = ((em.e)(x), (em.b)(x));
        vec![re(-e[0]), re(-e[1]), re(-e[2]), re(b[2]), re(-b[1]), re(b[0])]
    })
    .expect("2-form on 4 coordinates")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxwellResiduals {
    pub df: f64,
    pub delta_f: f64,
    pub delta_j: f64,
}

/// `(max‖dF‖, max‖δF − j‖, max‖δj‖)` over samples with `δ = *d*`.
pub fn maxwell_residuals(f: &PForm, j: &PForm, g: &MetricField, samples: &[Vec<f64>], h: f64) -> Result<MaxwellResiduals, PhysicsError> {
    if g.sig != (Signature { r: 1, s: 3 }) {
        return Err(PhysicsError::WrongSignature(g.sig.r, g.sig.s));
    }
    let df = ext_d(f, h)?;
    let delta_f = codifferential(f, g, h)?.sub(j);
    let delta_j = codifferential(j, g, h)?;
    Ok(MaxwellResiduals { df: df.max_norm(samples), delta_f: delta_f.max_norm(samples), delta_j: delta_j.max_norm(samples) })
}

/// Vacuum plane wave `𝐀 = (cos(t − z), 0, 0)`, `V = 0`.
pub fn plane_wave() -> PForm {
    potential_form(Arc::new(|_| 0.0), Arc::new(|x: &[f64]| [(x[0] - x[3]).cos(), 0.0, 0.0]))
}

/// Dirac monopole of magnetic charge `g`, `B = g r/r³`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monopole {
    pub g: f64,
}

fn axis_guard(x: &[f64], min_rho: f64) -> Result<(), PhysicsError> {
    let rho = x[0].hypot(x[1]);
    if rho < min_rho {
        Err(PhysicsError::OnDiracString(x.to_vec(), rho))
    } else {
        Ok(())
    }
}

impl Monopole {
    pub fn new(g: f64) -> Self {
        Monopole { g }
    }

    /// `A_s = g(y dx − x dy)/(r(r − z))`, singular on the positive `z`-axis.
    pub fn a_s(&self) -> PForm {
        let g = self.g;
        Form::new(3, 1, move |p| {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            let c = g / (r * (r - p[2]));
            vec![re(c * p[1]), re(-c * p[0]), re(0.0)]
        })
        .expect("1-form")
    }

    /// `A_n = g(x dy − y dx)/(r(r + z))`, singular on the negative `z`-axis.
    pub fn a_n(&self) -> PForm {
        let g = self.g;
        Form::new(3, 1, move |p| {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            let c = g / (r * (r + p[2]));
            vec![re(-c * p[1]), re(c * p[0]), re(0.0)]
        })
        .expect("1-form")
    }

    /// `B_x dy∧dz + B_y dz∧dx + B_z dx∧dy`.
    pub fn field_form(&self) -> PForm {
        let g = self.g;
        Form::new(3, 2, move |p| {
            let r3 = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).powf(1.5);
            let b = [g * p[0] / r3, g * p[1] / r3, g * p[2] / r3];
            // xy, xz, yz
            vec![re(b[2]), re(-b[1]), re(b[0])]
        })
        .expect("2-form")
    }

    /// `A_n − A_s = 2g(x dy − y dx)/(x² + y²) = 2g dθ`.
    pub fn difference(&self) -> PForm {
        let g = self.g;
        Form::new(3, 1, move |p| {
            let rho2 = p[0] * p[0] + p[1] * p[1];
            vec![re(-2.0 * g * p[1] / rho2), re(2.0 * g * p[0] / rho2), re(0.0)]
        })
        .expect("1-form")
    }

    /// `φ = e^{−2giθ}` with `θ = atan2(y, x)`, cut along the negative `x`-axis.
    ///
    /// `iA_n = iA_s − dφ·φ⁻¹` on the overlap.
    pub fn transition(&self) -> MatField {
        let g = self.g;
        Arc::new(move |p: &[f64]| CMat::from_element(1, 1, C64::new(0.0, -2.0 * g * p[1].atan2(p[0])).exp()))
    }

    /// `|φ(θ → π⁻) − φ(θ → −π⁺)|`, zero exactly when `2g ∈ ℤ`.
    pub fn single_valuedness_defect(&self) -> f64 {
        let phi = self.transition();
        let eps = 1e-9;
        let above = phi(&[-1.0, eps, 0.0]);
        let below = phi(&[-1.0, -eps, 0.0]);
        (above[(0, 0)] - below[(0, 0)]).norm()
    }

    /// `∫_{S²} F` with `dA_n` on the upper and `dA_s` on the lower hemisphere.
    pub fn flux(&self, cells: usize, h: f64) -> Result<f64, PhysicsError> {
        let (fn_, fs) = (ext_d(&self.a_n(), h)?, ext_d(&self.a_s(), h)?);
        let sphere: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync> =
            Arc::new(|u: &[f64]| vec![u[0].sin() * u[1].cos(), u[0].sin() * u[1].sin(), u[0].cos()]);
        let pn = pullback(&fn_, sphere.clone(), 2, h)?;
        let ps = pullback(&fs, sphere, 2, h)?;
        let both = Form::new(2, 2, move |u| if u[0] < PI / 2.0 { pn.at(u) } else { ps.at(u) })?;
        Ok(integrate_nform(&both, &Chart::new(vec![0.0, 0.0], vec![PI, 2.0 * PI])?, cells)?.re)
    }
}

/// Outcome of the four monopole checks.
#[derive(Debug, Clone, PartialEq)]
pub struct MonopoleReport {
    pub g: f64,
    /// `max(‖dA_s − B‖, ‖dA_n − B‖)`.
    pub curvature: f64,
    /// `‖(A_n − A_s) − 2g dθ‖`.
    pub difference: f64,
    /// Pointwise `‖iA_n − (iA_s − dφ·φ⁻¹)‖`.
    pub transition: f64,
    pub single_valued: f64,
    pub flux: f64,
    pub quantized: bool,
}

impl MonopoleReport {
    /// The transition identity holds only with a single-valued `φ`.
    pub fn transition_passes(&self, tol: f64) -> bool {
        self.transition <= tol && self.single_valued <= tol
    }
}

/// Shell samples with polar angle in `[0.1π, 0.9π]`, away from both strings.
pub fn monopole_samples(k: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for (ir, r) in [0.7, 1.3].iter().enumerate() {
        for i in 0..k {
            let th = PI * (0.1 + 0.8 * (i as f64 + 0.5) / k as f64);
            for j in 0..k {
                // azimuth stays off the atan2 cut at ±π
                let ph = -0.9 * PI + 1.8 * PI * (j as f64 + 0.5 * (ir as f64 + 1.0)) / k as f64;
                out.push(vec![r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos()]);
            }
        }
    }
    out
}

pub fn monopole_checks(m: &Monopole, samples: &[Vec<f64>], h: f64, cells: usize) -> Result<MonopoleReport, PhysicsError> {
    for x in samples {
        axis_guard(x, 100.0 * h)?;
    }
    let b = m.field_form();
    let ds = ext_d(&m.a_s(), h)?.sub(&b).max_norm(samples);
    let dn = ext_d(&m.a_n(), h)?.sub(&b).max_norm(samples);
    let diff = m.a_n().sub(&m.a_s()).sub(&m.difference()).max_norm(samples);
    let i_as = m.a_s().map(|c: &C64| CMat::from_element(1, 1, c * C64::new(0.0, 1.0)));
    let i_an = m.a_n().map(|c: &C64| CMat::from_element(1, 1, c * C64::new(0.0, 1.0)));
    let moved = crate::connections::gauge_transform(&i_as, m.transition(), h);
    let transition = moved.sub(&i_an).max_norm(samples);
    let single_valued = m.single_valuedness_defect();
    Ok(MonopoleReport {
        g: m.g,
        curvature: ds.max(dn),
        difference: diff,
        transition,
        single_valued,
        flux: m.flux(cells, h)?,
        quantized: (2.0 * m.g - (2.0 * m.g).round()).abs() < 1e-12,
    })
}

/// Spinor field: a column vector at every point.
pub type SpinorField = Section;

fn spinor_partials(psi: &SpinorField, x: &[f64], h: f64) -> Vec<CMat> {
    field_partials(psi, x, h)
}

/// `Σ_i γ_i ∂_i ψ` for generators indexed by coordinate.
pub fn dirac_with(gammas: Vec<CMat>, psi: SpinorField, h: f64) -> SpinorField {
    Arc::new(move |x: &[f64]| {
        let d = spinor_partials(&psi, x, h);
        gammas.iter().zip(&d).fold(CMat::zeros(d[0].nrows(), 1), |acc, (g, di)| acc + g * di)
    })
}

/// `D = σ¹∂_x + σ²∂_y + σ³∂_z` on `ℝ³ × ℂ²`.
///
/// As a matrix: `[[∂_z, ∂_x − i∂_y], [∂_x + i∂_y, −∂_z]]`.
pub fn pauli_dirac(psi: SpinorField, h: f64) -> SpinorField {
    dirac_with(pauli_rep().gammas, psi, h)
}

/// `‖D(Dψ)(x) − Δψ(x)‖` with `D` nested at step `h` and `Δψ` supplied exactly.
pub fn dirac_square_residual(psi: SpinorField, laplacian: &SpinorField, x: &[f64], h: f64) -> f64 {
    let dd = pauli_dirac(pauli_dirac(psi, h), h);
    max_abs(&(dd(x) - laplacian(x)))
}

/// `γ(e_μ)` for `μ = t, x, y, z` in the constructed `Cl(3,1)` representation.
pub fn spacetime_gammas() -> Vec<CMat> {
    let rep = constructed_gamma_rep(Signature { r: 3, s: 1 }).expect("n = 4");
    vec![rep.gammas[3].clone(), rep.gammas[0].clone(), rep.gammas[1].clone(), rep.gammas[2].clone()]
}

fn spacetime_rep() -> MatrixRep {
    constructed_gamma_rep(Signature { r: 3, s: 1 }).expect("n = 4")
}

/// Clifford action `Â = Σ_μ A^μ γ(e_μ)` of the vector raised from a real 1-form.
pub fn clifford_vector(a: &[f64]) -> CMat {
    let eta = [1.0, -1.0, -1.0, -1.0];
    spacetime_gammas().iter().zip(a).zip(eta).fold(CMat::zeros(4, 4), |acc, ((g, v), e)| acc + g * re(e * v))
}

/// Residual `(iD + qÂ − m)ψ` of the coupled Dirac equation.
pub fn dirac4(psi: SpinorField, m: f64, q: f64, a_em: &PForm, h: f64) -> SpinorField {
    let d = dirac_with(spacetime_gammas(), psi.clone(), h);
    let a = a_em.clone();
    Arc::new(move |x: &[f64]| {
        let av: Vec<f64> = a.at(x).iter().map(|c| c.re).collect();
        d(x) * C64::new(0.0, 1.0) + clifford_vector(&av) * psi(x) * re(q) - psi(x) * re(m)
    })
}

/// `(p₊, p₋)` in the `Cl(3,1)` representation, from the volume element `ω = i e₁e₂e₃e₄`.
pub fn helicity_projectors() -> (CMat, CMat) {
    let rep = spacetime_rep();
    let (p, m) = idempotents(rep.sig, Orientation::Positive);
    (rep.act(&p).expect("same signature"), rep.act(&m).expect("same signature"))
}

pub fn helicity_split(psi: &CMat) -> (CMat, CMat) {
    let (p, m) = helicity_projectors();
    (&p * psi, &m * psi)
}

/// `max(‖p₊ D(p₊ψ)‖, ‖p₋ D(p₋ψ)‖)` at `x`: zero when `D` exchanges helicities.
pub fn helicity_exchange_residual(psi: SpinorField, x: &[f64], h: f64) -> f64 {
    let (p, m) = helicity_projectors();
    let mut worst = 0.0f64;
    for proj in [p, m] {
        let pc = proj.clone();
        let ps = psi.clone();
        let half: SpinorField = Arc::new(move |y: &[f64]| &pc * ps(y));
        let d = dirac_with(spacetime_gammas(), half, h);
        worst = worst.max(max_abs(&(&proj * d(x))));
    }
    worst
}

/// Amplitude `u` of a plane wave `u e^{−ik_μx^μ}` solving `(iD − m)ψ = 0`.
///
/// `u` spans the numerical kernel of `Σ k_μ γ(e_μ) − m`, found by SVD.
pub fn plane_wave_spinor(k: [f64; 4], m: f64, tol: f64) -> Result<CMat, PhysicsError> {
    let symbol = spacetime_gammas().iter().zip(k).fold(CMat::zeros(4, 4), |acc, (g, kv)| acc + g * re(kv)) - CMat::identity(4, 4) * re(m);
    let svd = symbol.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let (idx, smin) = svd.singular_values.iter().enumerate().fold((0, f64::INFINITY), |a, (i, s)| if *s < a.1 { (i, *s) } else { a });
    if smin > tol {
        return Err(PhysicsError::NoKernel(smin));
    }
    let u = vt.row(idx).adjoint();
    Ok(CMat::from_column_slice(4, 1, u.as_slice()))
}

pub fn plane_wave_field(u: CMat, k: [f64; 4]) -> SpinorField {
    Arc::new(move |x: &[f64]| {
        let phase: f64 = k.iter().zip(x).map(|(a, b)| a * b).sum();
        &u * C64::new(0.0, -phase).exp()
    })
}

/// Matrix `C` with `C γ(e_μ)* = −γ(e_μ) C`, from the one-dimensional solution space.
///
/// `ψ ↦ Cψ*` takes solutions of `(iD + qÂ − m)ψ = 0` to solutions with `−q`.
pub fn charge_conjugation_matrix() -> CMat {
    let gs = spacetime_gammas();
    // rows: entries of C γ* + γ C for each μ, in the unknowns vec(C) (column-major)
    let mut sys = CMat::zeros(4 * 16, 16);
    for (mu, g) in gs.iter().enumerate() {
        let gc = g.map(|z| z.conj());
        for col in 0..16 {
            let mut e = CMat::zeros(4, 4);
            e[(col % 4, col / 4)] = re(1.0);
            let img = &e * &gc + g * &e;
            for r in 0..16 {
                sys[(16 * mu + r, col)] = img[(r % 4, r / 4)];
            }
        }
    }
    let svd = sys.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let idx = svd.singular_values.iamin();
    let v = vt.row(idx).adjoint();
    let c = CMat::from_fn(4, 4, |i, j| v[i + 4 * j]);
    let scale = c.norm();
    c * re(2.0 / scale)
}

pub fn charge_conjugate(c: &CMat, psi: SpinorField) -> SpinorField {
    let c = c.clone();
    Arc::new(move |x: &[f64]| &c * psi(x).map(|z| z.conj()))
}

/// `ā b = (a, γ(e_t) b)` with the standard hermitian form on `ℂ⁴`.
///
/// In the constructed representation spatial generators are anti-hermitian
/// and `γ(e_t)` is hermitian, so `(·,·)` is the form on which they act as
/// the isometries required by the pairing.
pub fn indefinite_pairing(a: &CMat, b: &CMat) -> C64 {
    (a.adjoint() * &spacetime_gammas()[0] * b)[(0, 0)]
}

/// Sign picked up by the pairing under a product of vectors `v₁⋯v_p`: `∏(−q(v_i))`.
pub fn pairing_sign(qs: &[f64]) -> f64 {
    qs.iter().map(|q| -q).product()
}

/// `γ` matrices of flat Euclidean `ℝ⁴` in the constructed `Cl(4,0)` representation.
pub fn euclidean_gammas() -> Vec<CMat> {
    constructed_gamma_rep(Signature { r: 4, s: 0 }).expect("n = 4").gammas
}

/// Positive half-spin projector `p₊ = (1 − e₁e₂e₃e₄)/2` on `ℂ⁴`.
///
/// This orientation makes `σ(ψ)` self-dual for the positive Hodge star.
pub fn sw_positive_projector() -> CMat {
    let rep = constructed_gamma_rep(Signature { r: 4, s: 0 }).expect("n = 4");
    let (p, _) = idempotents(rep.sig, Orientation::Negative);
    rep.act(&p).expect("same signature")
}

/// `σ(ψ) = Σ_{ij} (e_iψ, e_jψ) e^i∧e^j` for an orthonormal frame `e_a = Σ_b E_ba ∂_b`.
///
/// Returned as coordinate components in lexicographic order `12, 13, 14, 23, 24, 34`.
pub fn sw_sigma(psi: &CMat, frame: &RMat) -> Result<Vec<C64>, PhysicsError> {
    let defect = (frame.transpose() * frame - RMat::identity(4, 4)).abs().max();
    if defect > 1e-10 {
        return Err(PhysicsError::NotOrthonormal(defect));
    }
    let gs = euclidean_gammas();
    let rotated: Vec<CMat> = (0..4).map(|a| (0..4).fold(CMat::zeros(4, 4), |acc, b| acc + &gs[b] * re(frame[(b, a)]))).collect();
    let v: Vec<CMat> = rotated.iter().map(|g| g * psi).collect();
    // frame components M'_ab = (e_aψ, e_bψ) − (e_bψ, e_aψ)
    let mp = CMat::from_fn(4, 4, |a, b| (v[a].adjoint() * &v[b])[(0, 0)] - (v[b].adjoint() * &v[a])[(0, 0)]);
    let e = frame.map(re);
    let m = &e * mp * e.transpose();
    Ok(tuples(4, 2).iter().map(|t| m[(t[0], t[1])]).collect())
}

/// `(max‖F⁺ − (i/4)σ(ψ)‖, max‖D⁺ψ‖)` for a real U(1) potential `α` on flat `ℝ⁴`.
///
/// `D⁺ψ = Σ γ_i (∂_i + iα_i) ψ`; `ψ` must lie in the positive half-spin bundle.
pub fn sw_residuals(alpha: &PForm, psi: SpinorField, samples: &[Vec<f64>], h: f64) -> Result<(f64, f64), PhysicsError> {
    let p_minus = CMat::identity(4, 4) - sw_positive_projector();
    for x in samples {
        let r = max_abs(&(&p_minus * psi(x)));
        if r > 1e-10 {
            return Err(PhysicsError::NotPositive(r));
        }
    }
    let g = MetricField::euclidean(4);
    let f = ext_d(alpha, h)?;
    let (fplus, _) = self_dual_split(&f, &g, Orientation::Positive)?;
    let gs = euclidean_gammas();
    let id = CMat::identity(4, 4);
    let mut r1 = 0.0f64;
    let mut r2 = 0.0f64;
    for x in samples {
        let px = psi(x);
        let sigma = sw_sigma(&px, &id.map(|z| z.re))?;
        for (a, s) in fplus.at(x).iter().zip(&sigma) {
            r1 = r1.max((a - C64::new(0.0, 0.25) * s).norm());
        }
        let d = field_partials(&psi, x, h);
        let al = alpha.at(x);
        let dp = (0..4).fold(CMat::zeros(4, 1), |acc, i| acc + &gs[i] * (&d[i] + &px * (C64::new(0.0, 1.0) * al[i].re)));
        r2 = r2.max(max_abs(&dp));
    }
    Ok((r1, r2))
}

/// Random element of `SO(4)` from the QR factor of a Gaussian-like matrix.
pub fn random_rotation(rng: &mut impl rand::Rng, n: usize) -> RMat {
    let m = RMat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let qr = m.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let col = -q.column(j);
            q.set_column(j, &col);
        }
    }
    if q.determinant() < 0.0 {
        let col = -q.column(0);
        q.set_column(0, &col);
    }
    q
}

/// Column spinor from four complex entries.
pub fn spinor(v: [C64; 4]) -> CMat {
    CMat::from_column_slice(4, 1, &v)
}
