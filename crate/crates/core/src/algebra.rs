//! Finite group actions and matrix Lie group kernels.
//!
//! Finite groups and their actions are dense integer tables; every property
//! (orbits, stabilizers, coset equivalence) is verified by enumeration.
//! Matrix groups are complex `n×n` matrices with an optional [`GroupTag`]
//! describing the constraint they are expected to satisfy.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::Rng;
use thiserror::Error;

use crate::{re, CMat, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("malformed table: {0}")]
    MalformedTable(String),
    #[error("not a group: {0}")]
    NotAGroup(String),
    #[error("not an action: {0}")]
    NotAnAction(String),
    #[error("point {0} out of range")]
    PointOutOfRange(usize),
    #[error("equivariance fails for group element {g} at point {y}")]
    Equivariance { g: usize, y: usize },
    #[error("non-finite matrix entries")]
    NonFinite,
    #[error("singular matrix")]
    Singular,
    #[error("finite-difference step {0} underflows")]
    StepUnderflow(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is too far from the identity for the logarithm series (distance {0})")]
    LogOutOfRange(f64),
}

/// Finite group given by its Cayley table on indices `0..order`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGroup {
    cayley: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
}

impl FiniteGroup {
    /// Builds a group from a multiplication table `cayley[a][b] = a·b`.
    ///
    /// Identity and inverses are located from the table; associativity is
    /// checked on all triples.
    pub fn from_table(cayley: Vec<Vec<usize>>) -> Result<Self, AlgebraError> {
        let n = cayley.len();
        if n == 0 {
            return Err(AlgebraError::MalformedTable("empty table".into()));
        }
        for row in &cayley {
            if row.len() != n || row.iter().any(|&v| v >= n) {
                return Err(AlgebraError::MalformedTable("row length or entry out of range".into()));
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|g| cayley[e][g] == g && cayley[g][e] == g))
            .ok_or_else(|| AlgebraError::NotAGroup("no identity".into()))?;
        let mut inverse = vec![0; n];
        for g in 0..n {
            inverse[g] = (0..n)
                .find(|&h| cayley[g][h] == identity && cayley[h][g] == identity)
                .ok_or_else(|| AlgebraError::NotAGroup(format!("element {g} has no inverse")))?;
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if cayley[cayley[a][b]][c] != cayley[a][cayley[b][c]] {
                        return Err(AlgebraError::NotAGroup(format!("({a}{b}){c} ≠ {a}({b}{c})")));
                    }
                }
            }
        }
        Ok(FiniteGroup { cayley, identity, inverse })
    }

    /// Cyclic group ℤ_n with element `k` standing for `k mod n`.
    pub fn cyclic(n: usize) -> Self {
        let cayley = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        Self::from_table(cayley).expect("cyclic table is a group")
    }

    /// Group of the given permutations of `0..k` under composition `(στ)(x) = σ(τ(x))`.
    ///
    /// The list must be closed under composition; element `i` is `perms[i]`.
    pub fn from_permutations(perms: &[Vec<usize>]) -> Result<Self, AlgebraError> {
        let n = perms.len();
        let mut cayley = vec![vec![0; n]; n];
        for (a, pa) in perms.iter().enumerate() {
            for (b, pb) in perms.iter().enumerate() {
                let comp: Vec<usize> = pb.iter().map(|&x| pa[x]).collect();
                cayley[a][b] = perms
                    .iter()
                    .position(|p| *p == comp)
                    .ok_or_else(|| AlgebraError::NotAGroup("permutations not closed".into()))?;
            }
        }
        Self::from_table(cayley)
    }

    /// Symmetric group S_k; element `i` is the `i`-th permutation in lexicographic order.
    pub fn symmetric(k: usize) -> Self {
        Self::from_permutations(&permutations(k)).expect("S_k is a group")
    }

    pub fn order(&self) -> usize {
        self.cayley.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.cayley[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.cayley
    }

    /// True when `set` contains the identity and is closed under products and inverses.
    pub fn is_subgroup(&self, set: &[usize]) -> bool {
        let s: BTreeSet<usize> = set.iter().copied().collect();
        s.contains(&self.identity)
            && s.iter().all(|&a| s.contains(&self.inv(a)) && s.iter().all(|&b| s.contains(&self.mul(a, b))))
    }

    /// Left coset `a·H`, sorted.
    pub fn left_coset(&self, a: usize, subgroup: &[usize]) -> Vec<usize> {
        let mut c: Vec<usize> = subgroup.iter().map(|&h| self.mul(a, h)).collect();
        c.sort_unstable();
        c.dedup();
        c
    }
}

/// All permutations of `0..k` in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// Left action of a finite group on labelled points: `table[g][x] = g·x`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteAction {
    pub group: FiniteGroup,
    pub points: Vec<String>,
    table: Vec<Vec<usize>>,
}

impl FiniteAction {
    /// Validates `e·x = x` and `g·(h·x) = (gh)·x` on all pairs.
    pub fn new(group: FiniteGroup, points: Vec<String>, table: Vec<Vec<usize>>) -> Result<Self, AlgebraError> {
        let np = points.len();
        if table.len() != group.order() || table.iter().any(|r| r.len() != np || r.iter().any(|&y| y >= np)) {
            return Err(AlgebraError::MalformedTable("action table has wrong shape".into()));
        }
        let e = group.identity();
        if (0..np).any(|x| table[e][x] != x) {
            return Err(AlgebraError::NotAnAction("identity moves a point".into()));
        }
        for g in 0..group.order() {
            for h in 0..group.order() {
                for x in 0..np {
                    if table[g][table[h][x]] != table[group.mul(g, h)][x] {
                        return Err(AlgebraError::NotAnAction(format!("g={g}, h={h}, x={x}")));
                    }
                }
            }
        }
        Ok(FiniteAction { group, points, table })
    }

    /// Natural action of the permutation group `perms` on `0..k`.
    pub fn natural(perms: &[Vec<usize>]) -> Result<Self, AlgebraError> {
        let group = FiniteGroup::from_permutations(perms)?;
        let k = perms.first().map_or(0, |p| p.len());
        let points = (1..=k).map(|i| i.to_string()).collect();
        Self::new(group, points, perms.to_vec())
    }

    /// S_k acting on `{1,…,k}`.
    pub fn symmetric_natural(k: usize) -> Self {
        Self::natural(&permutations(k)).expect("natural action is valid")
    }

    /// Every element fixes every point.
    pub fn trivial(group: FiniteGroup, points: Vec<String>) -> Self {
        let table = vec![(0..points.len()).collect(); group.order()];
        Self::new(group, points, table).expect("trivial action is valid")
    }

    /// Left multiplication of a group on itself (a free action).
    pub fn left_regular(group: FiniteGroup) -> Self {
        let points = (0..group.order()).map(|g| format!("g{g}")).collect();
        let table = group.table().to_vec();
        Self::new(group, points, table).expect("left multiplication is an action")
    }

    /// Action `a·(gH) = (ag)H` on the left cosets of a subgroup.
    pub fn coset_action(group: FiniteGroup, subgroup: &[usize]) -> Result<Self, AlgebraError> {
        if !group.is_subgroup(subgroup) {
            return Err(AlgebraError::NotAGroup("not a subgroup".into()));
        }
        let mut cosets: Vec<Vec<usize>> = Vec::new();
        for g in 0..group.order() {
            let c = group.left_coset(g, subgroup);
            if !cosets.contains(&c) {
                cosets.push(c);
            }
        }
        let idx = |c: &Vec<usize>| cosets.iter().position(|d| d == c).expect("coset listed");
        let table = (0..group.order())
            .map(|a| cosets.iter().map(|c| idx(&group.left_coset(group.mul(a, c[0]), subgroup))).collect())
            .collect();
        let points = cosets.iter().map(|c| format!("{c:?}")).collect();
        Self::new(group, points, table)
    }

    pub fn act(&self, g: usize, x: usize) -> usize {
        self.table[g][x]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    fn check_point(&self, x: usize) -> Result<(), AlgebraError> {
        if x < self.points.len() {
            Ok(())
        } else {
            Err(AlgebraError::PointOutOfRange(x))
        }
    }

    /// Orbit of `x`, sorted.
    pub fn orbit(&self, x: usize) -> Vec<usize> {
        let s: BTreeSet<usize> = (0..self.group.order()).map(|g| self.act(g, x)).collect();
        s.into_iter().collect()
    }

    /// Partition of the points into orbits, ordered by smallest member.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.points.len()];
        let mut out = Vec::new();
        for x in 0..self.points.len() {
            if !seen[x] {
                let o = self.orbit(x);
                for &y in &o {
                    seen[y] = true;
                }
                out.push(o);
            }
        }
        out
    }

    /// Stabilizer `K_x = {g : g·x = x}`, sorted.
    pub fn stabilizer(&self, x: usize) -> Result<Vec<usize>, AlgebraError> {
        self.check_point(x)?;
        Ok((0..self.group.order()).filter(|&g| self.act(g, x) == x).collect())
    }

    /// Checks `K_{g·x} = g K_x g⁻¹` element by element.
    pub fn conjugacy_check(&self, x: usize, g: usize) -> Result<bool, AlgebraError> {
        let kx = self.stabilizer(x)?;
        let ky = self.stabilizer(self.act(g, x))?;
        let gi = self.group.inv(g);
        let mut conj: Vec<usize> = kx.iter().map(|&k| self.group.mul(self.group.mul(g, k), gi)).collect();
        conj.sort_unstable();
        Ok(conj == ky)
    }

    /// Builds `f(a·x) = aK_x` from the orbit of `x` to the left cosets of `K_x`
    /// and checks that it is well defined, bijective and equivariant.
    pub fn coset_action_equivalence(&self, x: usize) -> Result<CosetEquivalence, AlgebraError> {
        let stab = self.stabilizer(x)?;
        let g = &self.group;
        let mut cosets: Vec<Vec<usize>> = Vec::new();
        let mut map: Vec<(usize, usize)> = Vec::new();
        for a in 0..g.order() {
            let y = self.act(a, x);
            let c = g.left_coset(a, &stab);
            let ci = match cosets.iter().position(|d| *d == c) {
                Some(i) => i,
                None => {
                    cosets.push(c);
                    cosets.len() - 1
                }
            };
            match map.iter().find(|(p, _)| *p == y) {
                Some(&(_, prev)) if prev != ci => return Err(AlgebraError::Equivariance { g: a, y }),
                Some(_) => {}
                None => map.push((y, ci)),
            }
        }
        if map.len() != cosets.len() {
            return Err(AlgebraError::Equivariance { g: g.identity(), y: x });
        }
        map.sort_unstable();
        let f = |y: usize| map.iter().find(|(p, _)| *p == y).map(|m| m.1);
        for gg in 0..g.order() {
            for &(y, ci) in &map {
                let lhs = f(self.act(gg, y));
                let moved = g.left_coset(g.mul(gg, cosets[ci][0]), &stab);
                let rhs = cosets.iter().position(|d| *d == moved);
                if lhs.is_none() || lhs != rhs {
                    return Err(AlgebraError::Equivariance { g: gg, y });
                }
            }
        }
        Ok(CosetEquivalence { base: x, stabilizer: stab, cosets, map })
    }
}

/// Witness of the equivalence between an orbit and `G/K_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct CosetEquivalence {
    pub base: usize,
    pub stabilizer: Vec<usize>,
    /// Left cosets `aK_x`, each sorted.
    pub cosets: Vec<Vec<usize>>,
    /// Pairs `(orbit point, coset index)`, sorted by point.
    pub map: Vec<(usize, usize)>,
}

/// Constraint a matrix group or algebra element is expected to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupTag {
    General,
    /// Λ η Λᵗ = η with η = diag(+1 ×r, −1 ×s).
    Orthogonal { r: usize, s: usize },
    SpecialOrthogonal { r: usize, s: usize },
    Unitary,
    SpecialUnitary,
}

fn eta_matrix(r: usize, s: usize) -> CMat {
    CMat::from_fn(r + s, r + s, |i, j| if i != j { re(0.0) } else if i < r { re(1.0) } else { re(-1.0) })
}

impl GroupTag {
    /// Residual of the group constraint for `g` (0 means the constraint holds exactly).
    pub fn group_residual(&self, g: &CMat) -> f64 {
        let n = g.nrows();
        let id = CMat::identity(n, n);
        match *self {
            GroupTag::General => {
                if g.clone().try_inverse().is_some() {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            GroupTag::Orthogonal { r, s } | GroupTag::SpecialOrthogonal { r, s } => {
                let eta = eta_matrix(r, s);
                let mut res = fro(&(g * &eta * g.transpose() - &eta)) + g.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
                if matches!(self, GroupTag::SpecialOrthogonal { .. }) {
                    res += (g.determinant() - re(1.0)).norm();
                }
                res
            }
            GroupTag::Unitary => fro(&(g.adjoint() * g - id)),
            GroupTag::SpecialUnitary => fro(&(g.adjoint() * g - id)) + (g.determinant() - re(1.0)).norm(),
        }
    }

    /// Residual of the Lie algebra constraint for `l`.
    pub fn algebra_residual(&self, l: &CMat) -> f64 {
        match *self {
            GroupTag::General => 0.0,
            GroupTag::Orthogonal { r, s } | GroupTag::SpecialOrthogonal { r, s } => {
                let eta = eta_matrix(r, s);
                fro(&(l * &eta + &eta * l.transpose())) + l.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
            }
            GroupTag::Unitary => fro(&(l + l.adjoint())),
            GroupTag::SpecialUnitary => fro(&(l + l.adjoint())) + l.trace().norm(),
        }
    }
}

/// Frobenius norm.
pub fn fro(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn one_norm(m: &CMat) -> f64 {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential `exp(tL)` by scaling and squaring with a truncated Taylor series.
pub fn mat_exp(l: &CMat, t: f64) -> Result<CMat, AlgebraError> {
    if !t.is_finite() || l.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(AlgebraError::NonFinite);
    }
    Ok(expm(&(l * re(t))))
}

/// Matrix exponential of a matrix with finite entries.
///
/// After scaling, `‖X‖₁ ≤ 0.5` and the series is summed until a term drops
/// below `1e-18` relative to the partial sum.
pub fn expm(l: &CMat) -> CMat {
    let n = l.nrows();
    let norm = one_norm(l);
    let k = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let x = l * re(0.5f64.powi(k));
    let mut sum = CMat::identity(n, n);
    let mut term = CMat::identity(n, n);
    for m in 1..40 {
        term = &term * &x * re(1.0 / m as f64);
        sum += &term;
        if one_norm(&term) <= 1e-18 * one_norm(&sum) {
            break;
        }
    }
    for _ in 0..k {
        sum = &sum * &sum;
    }
    sum
}

/// Matrix inverse; fails on (numerically) singular input.
pub fn inverse(g: &CMat) -> Result<CMat, AlgebraError> {
    if g.nrows() != g.ncols() {
        return Err(AlgebraError::DimensionMismatch("inverse of non-square matrix".into()));
    }
    g.clone().try_inverse().ok_or(AlgebraError::Singular)
}

/// `Ad_g L = g L g⁻¹`.
pub fn adjoint(g: &CMat, l: &CMat) -> Result<CMat, AlgebraError> {
    if g.shape() != l.shape() {
        return Err(AlgebraError::DimensionMismatch("Ad_g L".into()));
    }
    Ok(g * l * inverse(g)?)
}

/// Commutator `[L,K] = LK − KL`.
pub fn bracket(l: &CMat, k: &CMat) -> CMat {
    l * k - k * l
}

/// Third-order Baker-Campbell-Hausdorff approximation of `log(exp(a)exp(b))`.
pub fn bch3(a: &CMat, b: &CMat) -> CMat {
    let ab = bracket(a, b);
    let ba = -&ab;
    a + b + &ab * re(0.5) + (bracket(a, &ab) + bracket(b, &ba)) * re(1.0 / 12.0)
}

/// Logarithm of a matrix near the identity by the series of `log(I + X)`.
///
/// Requires `‖W − I‖₁ < 0.5`.
pub fn log_near_identity(w: &CMat) -> Result<CMat, AlgebraError> {
    let n = w.nrows();
    let x = w - CMat::identity(n, n);
    let d = one_norm(&x);
    if !(d < 0.5) {
        return Err(AlgebraError::LogOutOfRange(d));
    }
    let mut sum = CMat::zeros(n, n);
    let mut pow = x.clone();
    for m in 1..200 {
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        let term = &pow * re(sign / m as f64);
        sum += &term;
        if one_norm(&term) <= 1e-18 * (1.0 + one_norm(&sum)) {
            break;
        }
        pow = &pow * &x;
    }
    Ok(sum)
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Options for [`rep_derivative_with`].
#[derive(Debug, Clone, Copy)]
pub struct DerivativeOptions {
    pub h: f64,
    /// Combine steps `h` and `h/2` to cancel the `h²` term.
    pub richardson: bool,
}

impl Default for DerivativeOptions {
    fn default() -> Self {
        DerivativeOptions { h: 1e-5, richardson: false }
    }
}

/// `𝔯(L) = d/dt R(exp(tL))|₀` by a central difference with step `1e-5`.
pub fn rep_derivative(r: &dyn Fn(&CMat) -> CMat, l: &CMat) -> Result<CMat, AlgebraError> {
    rep_derivative_with(r, l, DerivativeOptions::default())
}

pub fn rep_derivative_with(r: &dyn Fn(&CMat) -> CMat, l: &CMat, opts: DerivativeOptions) -> Result<CMat, AlgebraError> {
    let h = opts.h;
    if !(h > 0.0) || !h.is_finite() || 1.0 + h == 1.0 {
        return Err(AlgebraError::StepUnderflow(h));
    }
    let central = |h: f64| (r(&expm(&(l * re(h)))) - r(&expm(&(l * re(-h))))) * re(0.5 / h);
    if opts.richardson {
        let d1 = central(h);
        let d2 = central(h / 2.0);
        Ok((d2 * re(4.0) - d1) * re(1.0 / 3.0))
    } else {
        Ok(central(h))
    }
}

/// Pauli matrices σ¹, σ², σ³.
pub fn pauli() -> [CMat; 3] {
    let z = re(0.0);
    let o = re(1.0);
    let i = C64::new(0.0, 1.0);
    [
        DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

/// Anti-hermitian basis `τ_a = −iσ_a/2` of 𝔰𝔲(2), with `[τ_a, τ_b] = ε_abc τ_c`.
pub fn su2_basis() -> [CMat; 3] {
    let s = pauli();
    let f = C64::new(0.0, -0.5);
    [&s[0] * f, &s[1] * f, &s[2] * f]
}

/// Random real combination of the 𝔰𝔲(2) basis with coefficients in `[-scale, scale]`.
pub fn random_su2(rng: &mut impl Rng, scale: f64) -> CMat {
    let b = su2_basis();
    let mut m = CMat::zeros(2, 2);
    for t in &b {
        m += t * re(rng.gen_range(-scale..=scale));
    }
    m
}

/// Random complex matrix with entries in the square `[-scale, scale]²`.
pub fn random_matrix(rng: &mut impl Rng, n: usize, scale: f64) -> CMat {
    CMat::from_fn(n, n, |_, _| C64::new(rng.gen_range(-scale..=scale), rng.gen_range(-scale..=scale)))
}

/// Random real matrix embedded as complex, entries in `[-scale, scale]`.
pub fn random_real_matrix(rng: &mut impl Rng, n: usize, scale: f64) -> CMat {
    CMat::from_fn(n, n, |_, _| re(rng.gen_range(-scale..=scale)))
}
