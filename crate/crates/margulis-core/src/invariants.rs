//! Neutral vectors, Margulis invariants and the cross-ratios `β` and `θ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{self, plane_pair, GAP_TOL};
use crate::error::{Error, Result};
use crate::groups::{AffineIsometry, AffineRep, Isometry, LinearRep, Word};
use crate::qspace::{
    dual_bases, is_isotropic, isotropic_lines, orthogonal_complement, random_isometry_with,
    ModelData, QSpace, Subspace,
};
use crate::{linalg, Matrix, Vector};

/// Isotropy tolerance for null plane validation.
pub const NULL_TOL: f64 = 1e-9;

fn check_ambient(space: &QSpace, s: &Subspace) -> Result<()> {
    if s.ambient() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: s.ambient() });
    }
    Ok(())
}

/// An `n`-plane of `R^{2n-1}` whose orthogonal complement is maximal isotropic.
#[derive(Clone, Debug)]
pub struct NullPlane {
    plane: Subspace,
    perp: Subspace,
}

impl NullPlane {
    pub fn new(space: &QSpace, plane: Subspace) -> Result<Self> {
        check_ambient(space, &plane)?;
        let n = space.model_n();
        if plane.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: plane.dim() });
        }
        let perp = orthogonal_complement(space, &plane)?;
        if !is_isotropic(space, &perp, NULL_TOL) {
            return Err(Error::DegenerateInput("complement is not isotropic".into()));
        }
        Ok(Self { plane, perp })
    }

    /// The null plane `A^⊥` of an isotropic `(n-1)`-plane `A`.
    pub fn from_perp(space: &QSpace, perp: Subspace) -> Result<Self> {
        check_ambient(space, &perp)?;
        if perp.dim() != space.flag_dim() || !is_isotropic(space, &perp, NULL_TOL) {
            return Err(Error::DegenerateInput("not a maximal isotropic plane".into()));
        }
        let plane = orthogonal_complement(space, &perp)?;
        Ok(Self { plane, perp })
    }

    pub fn plane(&self) -> &Subspace {
        &self.plane
    }

    pub fn perp(&self) -> &Subspace {
        &self.perp
    }

    pub fn transform(&self, m: &Matrix) -> Result<NullPlane> {
        Ok(Self { plane: self.plane.transform(m)?, perp: self.perp.transform(m)? })
    }
}

/// A translate `x + V` of a null plane.
#[derive(Clone, Debug)]
pub struct AffineNullPlane {
    base_point: Vector,
    direction: NullPlane,
}

impl AffineNullPlane {
    pub fn new(base_point: Vector, direction: NullPlane) -> Result<Self> {
        if base_point.len() != direction.plane().ambient() {
            return Err(Error::DimensionMismatch {
                expected: direction.plane().ambient(),
                got: base_point.len(),
            });
        }
        Ok(Self { base_point, direction })
    }

    pub fn through_origin(direction: NullPlane) -> Self {
        let n = direction.plane().ambient();
        Self { base_point: Vector::zeros(n), direction }
    }

    pub fn base_point(&self) -> &Vector {
        &self.base_point
    }

    pub fn direction(&self) -> &NullPlane {
        &self.direction
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        let d = x - &self.base_point;
        let scale = x.norm().max(self.base_point.norm()).max(1.0);
        let q = self.direction.plane().orthonormal();
        (&d - &q * (q.transpose() * &d)).norm() <= tol * scale
    }

    /// Same plane with a different representative point.
    pub fn rebased(&self, base_point: Vector) -> Self {
        Self { base_point, direction: self.direction.clone() }
    }

    pub fn apply(&self, g: &AffineIsometry) -> Result<AffineNullPlane> {
        Ok(Self {
            base_point: g.apply(&self.base_point),
            direction: self.direction.transform(g.linear().matrix())?,
        })
    }
}

/// The two labeled isotropic lines of `A′ ∩ B′`.
#[derive(Clone, Debug)]
pub struct LabeledPair {
    pub a: Subspace,
    pub b: Subspace,
    pub v_plus: Vector,
    pub v_minus: Vector,
}

/// Sign of `det[v₊, a, v₋, b]` at the model pair `(W₊, W₋)`.
pub fn sigma_linear(n: usize) -> f64 {
    let m = ModelData::new(n);
    let space = m.linear_space();
    let (a, b) = dual_bases(&space, &m.w_plus_plane(), &m.w_minus_plane()).expect("model pair");
    let vp = Matrix::from_column_slice(2 * n, 1, m.v_plus.as_slice());
    let vm = Matrix::from_column_slice(2 * n, 1, m.v_minus.as_slice());
    linalg::det_sign(&[&vp, &a, &vm, &b])
}

/// Sign of `det[v, a, b]` at the model pair `(W₊^⊥, W₋^⊥)`.
pub fn sigma_affine(n: usize) -> f64 {
    let m = ModelData::new(n);
    let space = m.affine_space();
    let (a, b) = dual_bases(&space, &m.w_plus_affine_plane(), &m.w_minus_affine_plane())
        .expect("model pair");
    let v = Matrix::from_column_slice(2 * n - 1, 1, m.v.as_slice());
    linalg::det_sign(&[&v, &a, &b])
}

fn col(v: &Vector) -> Matrix {
    Matrix::from_column_slice(v.len(), 1, v.as_slice())
}

pub fn labeled_neutral_lines(space: &QSpace, a: &Subspace, b: &Subspace) -> Result<LabeledPair> {
    check_ambient(space, a)?;
    check_ambient(space, b)?;
    if !space.dim().is_multiple_of(2) {
        return Err(Error::Precondition("labeled lines live in the linear model".into()));
    }
    let n = space.dim() / 2;
    for s in [a, b] {
        if s.dim() != n - 1 {
            return Err(Error::DimensionMismatch { expected: n - 1, got: s.dim() });
        }
    }
    let (da, db) = dual_bases(space, a, b)?;
    let sum = a
        .join(b)
        .map_err(|_| Error::NotTransverse("planes intersect".into()))?;
    let e = orthogonal_complement(space, &sum)?;
    let (u1, mut u2) = isotropic_lines(space, &e)?;
    if space.pair(&u1, &u2) < 0.0 {
        u2 = -u2;
    }
    let s = linalg::det_sign(&[&col(&u1), &da, &col(&u2), &db]);
    let (p, m) = if s == sigma_linear(n) { (u1, u2) } else { (u2, u1) };
    Ok(LabeledPair {
        a: a.clone(),
        b: b.clone(),
        v_plus: linalg::canonical_unit(&p),
        v_minus: linalg::canonical_unit(&m),
    })
}

/// Unit timelike vector spanning `V_i ∩ V_j`, signed by the dual-basis determinant rule.
pub fn neutral_vector(space: &QSpace, vi: &NullPlane, vj: &NullPlane) -> Result<Vector> {
    check_ambient(space, vi.plane())?;
    check_ambient(space, vj.plane())?;
    let n = space.model_n();
    let (a, b) = dual_bases(space, vi.perp(), vj.perp())?;
    let sum = vi
        .perp()
        .join(vj.perp())
        .map_err(|_| Error::NotTransverse("complements intersect".into()))?;
    let e = orthogonal_complement(space, &sum)?;
    if e.dim() != 1 {
        return Err(Error::BadIntersectionDim(e.dim()));
    }
    let mut nu: Vector = e.basis().column(0).into_owned();
    nu /= nu.norm();
    let q = space.pair(&nu, &nu);
    if q >= -1e-12 {
        return Err(Error::WrongSignature);
    }
    nu /= (-q).sqrt();
    if linalg::det_sign(&[&col(&nu), &a, &b]) != sigma_affine(n) {
        nu = -nu;
    }
    Ok(nu)
}

/// `α(g) = ⟨u_g | ν(V⁻, V⁺)⟩`.
pub fn margulis_alpha(g: &AffineIsometry) -> Result<f64> {
    let nu = dynamics::neutral_fixed_vector(g.linear())?;
    Ok(g.linear().space().pair(g.translation(), &nu))
}

/// The two invariant affine null planes of an affine element with proximal linear part.
#[derive(Clone, Debug)]
pub struct FixedPlanes {
    pub minus: AffineNullPlane,
    pub plus: AffineNullPlane,
    pub residual: f64,
}

pub fn fixed_affine_planes(g: &AffineIsometry) -> Result<FixedPlanes> {
    let l = g.linear();
    let space = l.space();
    let pp = plane_pair(l, GAP_TOL)?;
    let n = space.dim();
    let lm = l.matrix() - Matrix::identity(n, n);
    let mut residual: f64 = 0.0;
    let mut solve = |a: &Subspace| -> Result<AffineNullPlane> {
        let at = a.orthonormal().transpose() * space.gram();
        let (x, r) = linalg::lstsq(&(&at * &lm), &(-(&at * g.translation())));
        residual = residual.max(r);
        AffineNullPlane::new(x, NullPlane::from_perp(space, a.clone())?)
    };
    let plus = solve(&pp.a_att)?;
    let minus = solve(&pp.a_rep)?;
    Ok(FixedPlanes { minus, plus, residual })
}

/// `β` as four terms with arbitrary points `x_i ∈ A_i`.
pub fn beta(space: &QSpace, a: [&AffineNullPlane; 4]) -> Result<f64> {
    let v = |i: usize, j: usize| neutral_vector(space, a[i].direction(), a[j].direction());
    let (v13, v14, v23, v24) = (v(0, 2)?, v(0, 3)?, v(1, 2)?, v(1, 3)?);
    let x = |i: usize| a[i].base_point();
    Ok(space.pair(x(0), &(&v14 - &v13))
        + space.pair(x(1), &(&v23 - &v24))
        + space.pair(x(2), &(&v13 - &v23))
        + space.pair(x(3), &(&v24 - &v14)))
}

/// A point of `A ∩ B`.
pub fn intersection_point(a: &AffineNullPlane, b: &AffineNullPlane) -> Result<Vector> {
    let va = a.direction().plane().basis();
    let vb = b.direction().plane().basis();
    let n = va.nrows();
    let mut m = Matrix::zeros(n, va.ncols() + vb.ncols());
    m.view_mut((0, 0), (n, va.ncols())).copy_from(va);
    m.view_mut((0, va.ncols()), (n, vb.ncols())).copy_from(&(-vb));
    let rhs = b.base_point() - a.base_point();
    let (c, r) = linalg::lstsq(&m, &rhs);
    let scale = a.base_point().norm().max(b.base_point().norm()).max(1.0);
    if r > 1e-9 * scale {
        return Err(Error::EmptyIntersection);
    }
    Ok(a.base_point() + va * c.rows(0, va.ncols()))
}

/// `β` from its definition `⟨x_{1,3} − x_{2,4} | v_{1,4} − v_{2,3}⟩`.
pub fn beta_direct(space: &QSpace, a: [&AffineNullPlane; 4]) -> Result<f64> {
    let v14 = neutral_vector(space, a[0].direction(), a[3].direction())?;
    let v23 = neutral_vector(space, a[1].direction(), a[2].direction())?;
    let x13 = intersection_point(a[0], a[2])?;
    let x24 = intersection_point(a[1], a[3])?;
    Ok(space.pair(&(x13 - x24), &(v14 - v23)))
}

fn random_affine<R: Rng>(space: &QSpace, rng: &mut R) -> AffineIsometry {
    let l = random_isometry_with(space, rng, 0.3).expect("standard form");
    let u = Vector::from_fn(space.dim(), |_, _| rng.random_range(-1.0..=1.0));
    AffineIsometry::new(l, u).expect("dimensions agree")
}

fn random_linear<R: Rng>(space: &QSpace, rng: &mut R) -> Isometry {
    random_isometry_with(space, rng, 0.3).expect("standard form")
}

/// Residuals of the additive cross-ratio identities.
#[derive(Clone, Debug, Default, Serialize)]
pub struct CrReport {
    pub invariance: f64,
    pub symmetry: f64,
    pub antisymmetry: f64,
    pub cyclic: f64,
    pub cocycle: f64,
    pub max: f64,
}

pub fn cr_identity_suite(space: &QSpace, planes: &[AffineNullPlane; 5], seed: u64) -> Result<CrReport> {
    let [a1, a2, a3, a4, st] = planes;
    let b = |p: [&AffineNullPlane; 4]| beta(space, p);
    let base = b([a1, a2, a3, a4])?;
    let symmetry = [b([a2, a1, a4, a3])?, b([a3, a4, a1, a2])?, b([a4, a3, a2, a1])?]
        .iter()
        .map(|x| (x - base).abs())
        .fold(0.0, f64::max);
    let antisymmetry = (base + b([a1, a2, a4, a3])?).abs();
    let cyclic = (base + b([a1, a3, a4, a2])? + b([a1, a4, a2, a3])?).abs();
    let cocycle = (b([a1, st, a3, a4])? + b([st, a2, a3, a4])? - base).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut invariance: f64 = 0.0;
    for _ in 0..20 {
        let g = random_affine(space, &mut rng);
        let m: Vec<AffineNullPlane> =
            [a1, a2, a3, a4].iter().map(|p| p.apply(&g)).collect::<Result<_>>()?;
        invariance = invariance.max((b([&m[0], &m[1], &m[2], &m[3]])? - base).abs());
    }
    let max = invariance.max(symmetry).max(antisymmetry).max(cyclic).max(cocycle);
    Ok(CrReport { invariance, symmetry, antisymmetry, cyclic, cocycle, max })
}

/// Multiplicative cross-ratio of four isotropic `(n-1)`-planes of `R^{2n}`.
pub fn theta(space: &QSpace, a: [&Subspace; 4]) -> Result<f64> {
    let l = |i: usize, j: usize| labeled_neutral_lines(space, a[i], a[j]);
    let (l13, l14, l23, l24) = (l(0, 2)?, l(0, 3)?, l(1, 2)?, l(1, 3)?);
    let num = space.pair(&l13.v_plus, &l23.v_minus) * space.pair(&l24.v_plus, &l14.v_minus);
    let den = space.pair(&l24.v_plus, &l23.v_minus) * space.pair(&l13.v_plus, &l14.v_minus);
    if den.abs() < 1e-12 {
        return Err(Error::DegenerateDenominator(den));
    }
    Ok(num / den)
}

/// Multiplicative residuals `|ratio − 1|` of the linear cross-ratio identities.
#[derive(Clone, Debug, Default, Serialize)]
pub struct EcrReport {
    pub invariance: f64,
    pub symmetry: f64,
    pub inversion: f64,
    pub cyclic: f64,
    pub cocycle: f64,
    pub mid_pairing: f64,
    pub max: f64,
}

pub fn ecr_identity_suite(space: &QSpace, planes: &[Subspace; 5], seed: u64) -> Result<EcrReport> {
    let [a1, a2, a3, a4, st] = planes;
    let t = |p: [&Subspace; 4]| theta(space, p);
    let base = t([a1, a2, a3, a4])?;
    let rel = |x: f64| (x - 1.0).abs();
    let symmetry = [t([a2, a1, a4, a3])?, t([a3, a4, a1, a2])?, t([a4, a3, a2, a1])?]
        .iter()
        .map(|x| rel(x / base))
        .fold(0.0, f64::max);
    let inversion = rel(base * t([a1, a2, a4, a3])?);
    let cyclic = rel(base * t([a1, a3, a4, a2])? * t([a1, a4, a2, a3])?);
    let cocycle = rel(t([a1, st, a3, a4])? * t([st, a2, a3, a4])? / base);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut invariance: f64 = 0.0;
    for _ in 0..20 {
        let g = random_linear(space, &mut rng);
        let m: Vec<Subspace> =
            [a1, a2, a3, a4].iter().map(|p| p.transform(g.matrix())).collect::<Result<_>>()?;
        invariance = invariance.max(rel(t([&m[0], &m[1], &m[2], &m[3]])? / base));
    }
    let mut mid_pairing: f64 = 0.0;
    for (i, j, k) in [(a1, a2, a3), (a2, a3, a4), (a1, a2, a2), (a4, a1, a3)] {
        mid_pairing = mid_pairing.max(mid_pairing_check(space, st, i, j, k)?.relative);
    }
    let max = [invariance, symmetry, inversion, cyclic, cocycle, mid_pairing].into_iter().fold(0.0, f64::max);
    Ok(EcrReport { invariance, symmetry, inversion, cyclic, cocycle, mid_pairing, max })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MidPairingResidual {
    pub absolute: f64,
    pub relative: f64,
}

/// `⟨v⁺_{*i}|v⁻_{*i}⟩⟨v⁺_{*j}|v⁻_{*k}⟩ = ⟨v⁺_{*j}|v⁻_{*i}⟩⟨v⁻_{*k}|v⁺_{*i}⟩` with unit vectors.
pub fn mid_pairing_check(
    space: &QSpace,
    star: &Subspace,
    ai: &Subspace,
    aj: &Subspace,
    ak: &Subspace,
) -> Result<MidPairingResidual> {
    let li = labeled_neutral_lines(space, star, ai)?;
    let lj = labeled_neutral_lines(space, star, aj)?;
    let lk = labeled_neutral_lines(space, star, ak)?;
    let lhs = space.pair(&li.v_plus, &li.v_minus) * space.pair(&lj.v_plus, &lk.v_minus);
    let rhs = space.pair(&lj.v_plus, &li.v_minus) * space.pair(&lk.v_minus, &li.v_plus);
    let absolute = (lhs - rhs).abs();
    let relative = if rhs.abs() > 0.0 { (lhs / rhs - 1.0).abs() } else { absolute };
    Ok(MidPairingResidual { absolute, relative })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AlphaBeta {
    pub alpha: f64,
    pub beta: f64,
    pub residual: f64,
}

/// `|2α(g) − β(A₋, A₊, gA, A)|`.
pub fn alphabeta_check(g: &AffineIsometry, a: &AffineNullPlane) -> Result<AlphaBeta> {
    let space = g.linear().space();
    let fp = fixed_affine_planes(g)?;
    let ga = a.apply(g)?;
    let b = beta(space, [&fp.minus, &fp.plus, &ga, a])?;
    let alpha = margulis_alpha(g)?;
    Ok(AlphaBeta { alpha, beta: b, residual: (2.0 * alpha - b).abs() })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LambdaTheta {
    pub lambda: f64,
    pub theta: f64,
    pub residual: f64,
}

/// `|λ(g)² − θ(A_r, A_a, gA_*, A_*)| / λ(g)²`.
pub fn lambdabeta_check(g: &Isometry, a_star: &Subspace) -> Result<LambdaTheta> {
    let space = g.space();
    let p = dynamics::proximal_data(g)?;
    let ga = a_star.transform(g.matrix())?;
    let th = theta(space, [&p.a_rep, &p.a_att, &ga, a_star])?;
    let l2 = p.lambda * p.lambda;
    Ok(LambdaTheta { lambda: p.lambda, theta: th, residual: (l2 - th).abs() / l2 })
}

/// `(|⟨v₊(x,z)|v₊(x,y)⟩|, |⟨v₋(x,z)|v₋(x,y)⟩|)` with unit vectors.
pub fn nu_orthogonality_check(space: &QSpace, x: &Subspace, y: &Subspace, z: &Subspace) -> Result<(f64, f64)> {
    let xy = labeled_neutral_lines(space, x, y)?;
    let xz = labeled_neutral_lines(space, x, z)?;
    Ok((
        space.pair(&xz.v_plus, &xy.v_plus).abs(),
        space.pair(&xz.v_minus, &xy.v_minus).abs(),
    ))
}

/// `η(x) = x ⊕ R v₊(x, y)`, oriented by the basis order.
pub fn eta_plane(space: &QSpace, x: &Subspace, y: &Subspace) -> Result<Subspace> {
    let l = labeled_neutral_lines(space, x, y)?;
    Ok(x.join(&Subspace::from_vectors(&[l.v_plus])?)?.with_orientation(1))
}

/// Which labeled line defines `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LambdaConvention {
    /// Eigenvalue on the labeled line of `(A_att, A_rep)`.
    AttRep,
    /// Eigenvalue on the labeled line of `(A_rep, A_att)`.
    RepAtt,
}

/// Free and cyclic reduction of a letter sequence. Conjugation leaves `α` and `λ` unchanged.
pub fn cyclic_reduction(letters: &[i32]) -> Vec<i32> {
    let mut stack: Vec<i32> = Vec::with_capacity(letters.len());
    for &a in letters {
        if stack.last() == Some(&-a) {
            stack.pop();
        } else {
            stack.push(a);
        }
    }
    let (mut lo, mut hi) = (0, stack.len());
    while hi - lo >= 2 && stack[lo] == -stack[hi - 1] {
        lo += 1;
        hi -= 1;
    }
    stack[lo..hi].to_vec()
}

fn rotation(letters: &[i32], j: usize) -> Vec<i32> {
    let mut r = letters[j..].to_vec();
    r.extend_from_slice(&letters[..j]);
    r
}

/// `log λ(w)` as a sum over the cyclic shifts of `w`.
///
/// Each factor only involves a single generator, so long words keep full accuracy.
pub fn log_lambda_word(rep: &LinearRep, w: &Word, conv: LambdaConvention) -> Result<f64> {
    log_lambda_letters(rep, w.letters(), conv)
}

/// As [`log_lambda_word`] for a letter sequence that need not be reduced.
pub fn log_lambda_letters(rep: &LinearRep, letters: &[i32], conv: LambdaConvention) -> Result<f64> {
    let letters = &cyclic_reduction(letters)[..];
    if letters.is_empty() {
        return Err(Error::NotProximal("empty word".into()));
    }
    let space = rep.space();
    let m = letters.len();
    let mut lines = Vec::with_capacity(m);
    for j in 0..m {
        let g = rep.evaluate_letters(&rotation(letters, j));
        let pp = plane_pair(&g, GAP_TOL)?;
        let lab = match conv {
            LambdaConvention::AttRep => labeled_neutral_lines(space, &pp.a_att, &pp.a_rep)?,
            LambdaConvention::RepAtt => labeled_neutral_lines(space, &pp.a_rep, &pp.a_att)?,
        };
        lines.push((lab.v_plus, lab.v_minus));
    }
    let mut log = 0.0;
    let mut sign = 1.0;
    for j in 1..=m {
        let (vp, _) = &lines[j % m];
        let (wp, wm) = &lines[j - 1];
        let c = space.pair(&rep.letter(letters[j - 1]).apply(vp), wm) / space.pair(wp, wm);
        log += c.abs().ln();
        sign *= c.signum();
    }
    if sign <= 0.0 {
        return Err(Error::NotProximal("mid eigenvalue is negative".into()));
    }
    Ok(log)
}

/// `α(w)` as `Σ_i ⟨u_{a_i} | ν(a_i … a_m a_1 … a_{i-1})⟩`.
pub fn margulis_alpha_word(rep: &AffineRep, w: &Word) -> Result<f64> {
    margulis_alpha_letters(rep, w.letters())
}

pub fn margulis_alpha_letters(rep: &AffineRep, letters: &[i32]) -> Result<f64> {
    let letters = &cyclic_reduction(letters)[..];
    if letters.is_empty() {
        return Err(Error::NotProximal("empty word".into()));
    }
    let space = rep.space();
    let mut alpha = 0.0;
    for j in 0..letters.len() {
        let g = rep.evaluate_letters(&rotation(letters, j));
        let nu = dynamics::neutral_fixed_vector(g.linear())?;
        alpha += space.pair(rep.letter(letters[j]).translation(), &nu);
    }
    Ok(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GroupElement;
    use crate::qspace::{exp_so, random_lie, PLANE_TOL};

    fn rand_iso(space: &QSpace, seed: u64) -> Isometry {
        let a = exp_so(space, &random_lie(space, seed, 0.7), 1.0).unwrap();
        let b = exp_so(space, &random_lie(space, seed + 500, 0.7), 1.0).unwrap();
        a.compose(&b)
    }

    fn unit_parallel(a: &Vector, b: &Vector) -> f64 {
        (a.dot(b) / (a.norm() * b.norm())).abs()
    }

    #[test]
    fn model_calibration() {
        for n in 2..=5 {
            let m = ModelData::new(n);
            let l = m.linear_space();
            let lab = labeled_neutral_lines(&l, &m.w_plus_plane(), &m.w_minus_plane()).unwrap();
            assert!(unit_parallel(&lab.v_plus, &m.v_plus) > 1.0 - 1e-14);
            assert!(unit_parallel(&lab.v_minus, &m.v_minus) > 1.0 - 1e-14);
            let a = m.affine_space();
            let vp = NullPlane::from_perp(&a, m.w_plus_affine_plane()).unwrap();
            let vm = NullPlane::from_perp(&a, m.w_minus_affine_plane()).unwrap();
            let nu = neutral_vector(&a, &vp, &vm).unwrap();
            assert!((nu - &m.v).amax() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn equivariance_sample() {
        for n in 2..=4 {
            let m = ModelData::new(n);
            let l = m.linear_space();
            for seed in 0..10 {
                let g = rand_iso(&l, 100 * seed + n as u64);
                let a = m.w_plus_plane().transform(g.matrix()).unwrap();
                let b = m.w_minus_plane().transform(g.matrix()).unwrap();
                let lab = labeled_neutral_lines(&l, &a, &b).unwrap();
                assert!(unit_parallel(&lab.v_plus, &g.apply(&m.v_plus)) > 1.0 - 1e-8);
            }
        }
    }

    #[test]
    fn neutral_swap_parity() {
        for n in 2..=4 {
            let a = QSpace::affine(n);
            let m = ModelData::new(n);
            let g = rand_iso(&a, 7 + n as u64);
            let vp = NullPlane::from_perp(&a, m.w_plus_affine_plane().transform(g.matrix()).unwrap()).unwrap();
            let vm = NullPlane::from_perp(&a, m.w_minus_affine_plane().transform(g.matrix()).unwrap()).unwrap();
            let x = neutral_vector(&a, &vp, &vm).unwrap();
            let y = neutral_vector(&a, &vm, &vp).unwrap();
            assert!((&x - g.apply(&m.v)).amax() < 1e-9);
            if n % 2 == 0 {
                assert!((&x + &y).amax() < 1e-9);
            } else {
                assert!((&x - &y).amax() < 1e-9);
            }
        }
    }

    #[test]
    fn beta_through_origin_is_zero() {
        let a = QSpace::affine(2);
        let m = ModelData::new(2);
        let planes: Vec<AffineNullPlane> = (0..4)
            .map(|s| {
                let g = rand_iso(&a, 40 + s);
                AffineNullPlane::through_origin(
                    NullPlane::from_perp(&a, m.w_plus_affine_plane().transform(g.matrix()).unwrap()).unwrap(),
                )
            })
            .collect();
        let b = beta(&a, [&planes[0], &planes[1], &planes[2], &planes[3]]).unwrap();
        assert_eq!(b, 0.0);
    }

    #[test]
    fn cyclic_reduction_examples() {
        assert_eq!(cyclic_reduction(&[1, 1, 2, -1, -1]), vec![2]);
        assert_eq!(cyclic_reduction(&[1, 2, -2, -1]), Vec::<i32>::new());
        assert_eq!(cyclic_reduction(&[1, -2, 1]), vec![1, -2, 1]);
        assert_eq!(cyclic_reduction(&[2, 1, -2]), vec![1]);
    }

    #[test]
    fn eta_plane_of_model() {
        let m = ModelData::new(3);
        let l = m.linear_space();
        let eta = eta_plane(&l, &m.w_plus_plane(), &m.w_minus_plane()).unwrap();
        assert_eq!(eta.dim(), 3);
        assert!(eta.same_plane(&m.v_plus_plane(), PLANE_TOL));
    }
}
