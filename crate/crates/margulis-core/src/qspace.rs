//! Quadratic spaces and the subspace operations that respect the form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::groups::Isometry;
use crate::{expm, linalg, Matrix, Vector};

/// Threshold for plane equality through principal angles.
pub const PLANE_TOL: f64 = 1e-9;
/// Rank threshold for subspace bases after column normalisation.
pub const RANK_TOL: f64 = 1e-10;
/// Lie algebra membership threshold.
pub const LIE_TOL: f64 = 1e-10;

/// `R^N` with a nondegenerate symmetric bilinear form.
#[derive(Clone, Debug, PartialEq)]
pub struct QSpace {
    gram: Matrix,
    gram_inv: Matrix,
}

impl QSpace {
    pub fn new(gram: Matrix) -> Result<Self> {
        let n = gram.nrows();
        if n == 0 || gram.ncols() != n {
            return Err(Error::DegenerateInput("gram must be square and nonempty".into()));
        }
        if (&gram - gram.transpose()).amax() > 1e-12 {
            return Err(Error::DegenerateInput("gram is not symmetric".into()));
        }
        let mut scaled = gram.clone();
        for mut r in scaled.row_iter_mut() {
            let nr = r.norm();
            if nr == 0.0 {
                return Err(Error::DegenerateInput("gram has a zero row".into()));
            }
            r /= nr;
        }
        if scaled.determinant().abs() <= 1e-10 {
            return Err(Error::DegenerateInput("gram is singular".into()));
        }
        let gram_inv = gram
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::DegenerateInput("gram is singular".into()))?;
        Ok(Self { gram, gram_inv })
    }

    fn diagonal(pos: usize, neg: usize) -> Self {
        let d: Vec<f64> = std::iter::repeat_n(1.0, pos)
            .chain(std::iter::repeat_n(-1.0, neg))
            .collect();
        let gram = Matrix::from_diagonal(&Vector::from_vec(d));
        Self { gram_inv: gram.clone(), gram }
    }

    /// `Q₀ = diag(I_{n-1}, -I_n)` on `R^{2n-1}`.
    pub fn affine(n: usize) -> Self {
        assert!(n >= 2, "n must be at least 2");
        Self::diagonal(n - 1, n)
    }

    /// `Q = diag(I_n, -I_n)` on `R^{2n}`.
    pub fn linear(n: usize) -> Self {
        assert!(n >= 2, "n must be at least 2");
        Self::diagonal(n, n)
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn gram_inv(&self) -> &Matrix {
        &self.gram_inv
    }

    /// The `n` of the model this space belongs to: `N = 2n` or `N = 2n - 1`.
    pub fn model_n(&self) -> usize {
        self.dim().div_ceil(2)
    }

    /// Dimension of the isotropic planes carried by proximal data.
    pub fn flag_dim(&self) -> usize {
        (self.dim() - 1) / 2
    }

    /// `uᵀ G w` without dimension checks.
    pub fn pair(&self, u: &Vector, w: &Vector) -> f64 {
        u.dot(&(&self.gram * w))
    }

    pub fn inner(&self, u: &Vector, w: &Vector) -> Result<f64> {
        inner(self, u, w)
    }
}

pub fn inner(space: &QSpace, u: &Vector, w: &Vector) -> Result<f64> {
    let n = space.dim();
    for v in [u, w] {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
    }
    Ok(space.pair(u, w))
}

/// Column span of a full-rank matrix.
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: Matrix,
    orientation: Option<i8>,
}

impl Subspace {
    pub fn new(basis: Matrix) -> Result<Self> {
        if basis.ncols() > basis.nrows() {
            return Err(Error::DegenerateInput("more basis vectors than dimensions".into()));
        }
        if basis.ncols() > 0 {
            let s = linalg::singular_values(&linalg::normalize_columns(&basis));
            if s.last().copied().unwrap_or(0.0) <= RANK_TOL {
                return Err(Error::DegenerateInput("basis is rank deficient".into()));
            }
        }
        Ok(Self { basis, orientation: None })
    }

    pub fn zero(ambient: usize) -> Self {
        Self { basis: Matrix::zeros(ambient, 0), orientation: None }
    }

    pub fn whole(ambient: usize) -> Self {
        Self { basis: Matrix::identity(ambient, ambient), orientation: None }
    }

    pub fn from_vectors(vs: &[Vector]) -> Result<Self> {
        if vs.is_empty() {
            return Err(Error::DegenerateInput("no vectors".into()));
        }
        Self::new(Matrix::from_columns(vs))
    }

    pub fn with_orientation(mut self, sign: i8) -> Self {
        self.orientation = Some(sign.signum());
        self
    }

    pub fn orientation(&self) -> Option<i8> {
        self.orientation
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn orthonormal(&self) -> Matrix {
        linalg::orthonormalize(&self.basis)
    }

    /// Image under a linear map.
    pub fn transform(&self, m: &Matrix) -> Result<Subspace> {
        Subspace::new(m * &self.basis)
    }

    /// Span of this subspace and `other`.
    pub fn join(&self, other: &Subspace) -> Result<Subspace> {
        let mut m = Matrix::zeros(self.ambient(), self.dim() + other.dim());
        m.view_mut((0, 0), (self.ambient(), self.dim())).copy_from(&self.basis);
        m.view_mut((0, self.dim()), (self.ambient(), other.dim())).copy_from(&other.basis);
        Subspace::new(m)
    }

    /// Relative distance of `x` from the subspace.
    pub fn distance(&self, x: &Vector) -> f64 {
        let nx = x.norm();
        if nx == 0.0 {
            return 0.0;
        }
        if self.dim() == 0 {
            return 1.0;
        }
        let q = self.orthonormal();
        (x - &q * (q.transpose() * x)).norm() / nx
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.distance(x) <= tol
    }

    /// Principal angles between `other` and this subspace, ascending.
    ///
    /// Computed from sines so that tiny angles keep full relative accuracy.
    pub fn principal_angles(&self, other: &Subspace) -> Vec<f64> {
        let (small, big) = if other.dim() <= self.dim() { (other, self) } else { (self, other) };
        if small.dim() == 0 {
            return Vec::new();
        }
        let qb = big.orthonormal();
        let qs = small.orthonormal();
        let resid = &qs - &qb * (qb.transpose() * &qs);
        let mut s = linalg::singular_values(&resid);
        s.truncate(small.dim());
        while s.len() < small.dim() {
            s.push(0.0);
        }
        let mut a: Vec<f64> = s.iter().map(|x| x.clamp(0.0, 1.0).asin()).collect();
        a.sort_by(|x, y| x.total_cmp(y));
        a
    }

    /// Largest principal angle; `π/2` when dimensions differ.
    pub fn max_angle(&self, other: &Subspace) -> f64 {
        if self.dim() != other.dim() {
            return std::f64::consts::FRAC_PI_2;
        }
        self.principal_angles(other).last().copied().unwrap_or(0.0)
    }

    /// Smallest principal angle.
    pub fn min_angle(&self, other: &Subspace) -> f64 {
        self.principal_angles(other).first().copied().unwrap_or(std::f64::consts::FRAC_PI_2)
    }

    pub fn same_plane(&self, other: &Subspace, tol: f64) -> bool {
        self.dim() == other.dim() && self.max_angle(other) < tol
    }
}

pub fn orthogonal_complement(space: &QSpace, s: &Subspace) -> Result<Subspace> {
    if s.ambient() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: s.ambient() });
    }
    if s.dim() == 0 {
        return Ok(Subspace::whole(space.dim()));
    }
    let q = s.orthonormal();
    let m = q.transpose() * space.gram();
    let ns = linalg::null_space(&m, 1e-10);
    if ns.ncols() != space.dim() - s.dim() {
        return Err(Error::DegenerateInput("subspace basis is rank deficient".into()));
    }
    if ns.ncols() == 0 {
        return Ok(Subspace::zero(space.dim()));
    }
    Subspace::new(ns)
}

pub fn is_isotropic(space: &QSpace, s: &Subspace, tol: f64) -> bool {
    let b = linalg::normalize_columns(s.basis());
    (b.transpose() * space.gram() * &b).amax() <= tol
}

/// Smallest singular value of the pairing between orthonormal bases of `A` and `B`.
///
/// Zero exactly when the pairing is degenerate. At most 1 for isotropic planes of a standard form.
pub fn transversality(space: &QSpace, a: &Subspace, b: &Subspace) -> f64 {
    if a.dim() != b.dim() || a.dim() == 0 {
        return 0.0;
    }
    let p = a.orthonormal().transpose() * space.gram() * b.orthonormal();
    linalg::singular_values(&p).last().copied().unwrap_or(0.0)
}

/// Bases `a` of `A` and `b` of `B` with `⟨a_i|b_j⟩ = δ_ij`.
pub fn dual_bases(space: &QSpace, a: &Subspace, b: &Subspace) -> Result<(Matrix, Matrix)> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let an = linalg::normalize_columns(a.basis());
    let bn = linalg::normalize_columns(b.basis());
    let p = an.transpose() * space.gram() * &bn;
    if a.dim() > 0 {
        let s = linalg::singular_values(&p);
        if s.last().copied().unwrap_or(0.0) <= 1e-10 {
            return Err(Error::NotTransverse("pairing matrix is singular".into()));
        }
    }
    let raw = a.basis().transpose() * space.gram() * b.basis();
    let pinv = raw
        .try_inverse()
        .ok_or_else(|| Error::NotTransverse("pairing matrix is singular".into()))?;
    Ok((a.basis().clone(), b.basis() * pinv.transpose()))
}

/// The two isotropic lines of a plane of signature (1,1), as unit vectors.
pub fn isotropic_lines(space: &QSpace, e: &Subspace) -> Result<(Vector, Vector)> {
    if e.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: e.dim() });
    }
    let q = e.orthonormal();
    let m = q.transpose() * space.gram() * &q;
    let eig = nalgebra::SymmetricEigen::new(m);
    let (i_neg, i_pos) = if eig.eigenvalues[0] < eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let wn = eig.eigenvalues[i_neg];
    let wp = eig.eigenvalues[i_pos];
    let scale = wn.abs().max(wp.abs());
    if !(wn < -1e-10 * scale.max(1e-300) && wp > 1e-10 * scale.max(1e-300)) || scale < 1e-12 {
        return Err(Error::WrongSignature);
    }
    let a = eig.eigenvectors.column(i_neg) / (-wn).sqrt();
    let b = eig.eigenvectors.column(i_pos) / wp.sqrt();
    let u1 = &q * (&a + &b);
    let u2 = &q * (&a - &b);
    Ok((u1.normalize(), u2.normalize()))
}

/// Components of `x` along a direct sum decomposition.
pub fn project_along(x: &Vector, parts: &[Subspace]) -> Result<Vec<Vector>> {
    let n = x.len();
    let total: usize = parts.iter().map(|p| p.dim()).sum();
    if total != n || parts.iter().any(|p| p.ambient() != n) {
        return Err(Error::NotDirectSum);
    }
    let mut stack = Matrix::zeros(n, n);
    let mut j = 0;
    for p in parts {
        stack.view_mut((0, j), (n, p.dim())).copy_from(p.basis());
        j += p.dim();
    }
    let s = linalg::singular_values(&linalg::normalize_columns(&stack));
    if s.last().copied().unwrap_or(0.0) <= RANK_TOL {
        return Err(Error::NotDirectSum);
    }
    let c = stack.lu().solve(x).ok_or(Error::NotDirectSum)?;
    let mut out = Vec::with_capacity(parts.len());
    let mut j = 0;
    for p in parts {
        out.push(p.basis() * c.rows(j, p.dim()));
        j += p.dim();
    }
    Ok(out)
}

/// `‖XᵀG + GX‖∞`.
pub fn lie_residual(space: &QSpace, x: &Matrix) -> f64 {
    let g = space.gram();
    linalg::norm_inf(&(x.transpose() * g + g * x))
}

pub fn exp_so(space: &QSpace, x: &Matrix, t: f64) -> Result<Isometry> {
    let n = space.dim();
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.nrows() });
    }
    let r = lie_residual(space, x);
    if r > LIE_TOL * linalg::norm_inf(x).max(1.0) {
        return Err(Error::NotInLieAlgebra(r));
    }
    let m = if t == 0.0 { Matrix::identity(n, n) } else { expm::expm(&(x * t)) };
    Ok(Isometry::from_trusted(space.clone(), m))
}

/// Seeded element `G⁻¹S` of the Lie algebra, `S` antisymmetric with entries in `[-scale, scale]`.
pub fn random_lie(space: &QSpace, seed: u64, scale: f64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_lie_with(space, &mut rng, scale)
}

pub fn random_lie_with<R: Rng>(space: &QSpace, rng: &mut R, scale: f64) -> Matrix {
    let n = space.dim();
    let mut s = Matrix::zeros(n, n);
    if scale > 0.0 {
        for i in 0..n {
            for j in (i + 1)..n {
                let v = rng.random_range(-scale..=scale);
                s[(i, j)] = v;
                s[(j, i)] = -v;
            }
        }
    }
    space.gram_inv() * s
}

/// Seeded element of the maximal compact subalgebra of a diagonal form.
///
/// Only pairs of coordinates with equal signs get a (rotation) entry.
pub fn random_compact_with<R: Rng>(space: &QSpace, rng: &mut R, scale: f64) -> Result<Matrix> {
    let g = space.gram();
    let n = space.dim();
    if (0..n).any(|i| (0..n).any(|j| i != j && g[(i, j)] != 0.0)) {
        return Err(Error::Precondition("compact part needs a diagonal form".into()));
    }
    let mut x = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.random_range(-scale..=scale);
            if g[(i, i)] * g[(j, j)] > 0.0 {
                x[(i, j)] = v;
                x[(j, i)] = -v;
            }
        }
    }
    Ok(x)
}

/// `exp(K)·exp(X)` with `K` compact of size `π` and `X = random_lie(·, boost)`.
pub fn random_isometry_with<R: Rng>(space: &QSpace, rng: &mut R, boost: f64) -> Result<Isometry> {
    let k = exp_so(space, &random_compact_with(space, rng, std::f64::consts::PI)?, 1.0)?;
    let b = exp_so(space, &random_lie_with(space, rng, boost), 1.0)?;
    Ok(Isometry::from_trusted(space.clone(), k.matrix() * b.matrix()))
}

pub fn random_isometry(space: &QSpace, seed: u64, boost: f64) -> Result<Isometry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_isometry_with(space, &mut rng, boost)
}

/// Distinguished vectors and planes of both models for a given `n`.
#[derive(Clone, Debug)]
pub struct ModelData {
    pub n: usize,
    /// `(0_{n-1}, 1, 0_{n-1})` in `R^{2n-1}`.
    pub v: Vector,
    pub v_plus: Vector,
    pub v_minus: Vector,
    pub v0: Vector,
    /// Reference bases `w^i_±` in `R^{2n}`.
    pub w_plus: Matrix,
    pub w_minus: Matrix,
    /// The same planes in `R^{2n-1}`.
    pub w_plus_affine: Matrix,
    pub w_minus_affine: Matrix,
}

impl ModelData {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "n must be at least 2");
        let big = 2 * n;
        let mut v_plus = Vector::zeros(big);
        v_plus[0] = 1.0;
        v_plus[n] = 1.0;
        let mut v_minus = Vector::zeros(big);
        v_minus[0] = 1.0;
        v_minus[n] = -1.0;
        let v0 = (&v_plus + &v_minus) / 2.0;
        let mut w_plus = Matrix::zeros(big, n - 1);
        let mut w_minus = Matrix::zeros(big, n - 1);
        for i in 0..n - 1 {
            w_plus[(1 + i, i)] = 1.0;
            w_plus[(n + 1 + i, i)] = 1.0;
            w_minus[(1 + i, i)] = -1.0;
            w_minus[(n + 1 + i, i)] = 1.0;
        }
        let w_plus_affine = w_plus.rows(1, big - 1).into_owned();
        let w_minus_affine = w_minus.rows(1, big - 1).into_owned();
        let mut v = Vector::zeros(big - 1);
        v[n - 1] = 1.0;
        Self { n, v, v_plus, v_minus, v0, w_plus, w_minus, w_plus_affine, w_minus_affine }
    }

    pub fn linear_space(&self) -> QSpace {
        QSpace::linear(self.n)
    }

    pub fn affine_space(&self) -> QSpace {
        QSpace::affine(self.n)
    }

    pub fn w_plus_plane(&self) -> Subspace {
        Subspace::new(self.w_plus.clone()).expect("model basis")
    }

    pub fn w_minus_plane(&self) -> Subspace {
        Subspace::new(self.w_minus.clone()).expect("model basis")
    }

    pub fn w_plus_affine_plane(&self) -> Subspace {
        Subspace::new(self.w_plus_affine.clone()).expect("model basis")
    }

    pub fn w_minus_affine_plane(&self) -> Subspace {
        Subspace::new(self.w_minus_affine.clone()).expect("model basis")
    }

    /// `V₊ = W₊ ⊕ R v₊`, a maximal isotropic plane of `R^{2n}`.
    pub fn v_plus_plane(&self) -> Subspace {
        self.w_plus_plane()
            .join(&Subspace::from_vectors(std::slice::from_ref(&self.v_plus)).expect("nonzero"))
            .expect("independent")
    }

    pub fn v_minus_plane(&self) -> Subspace {
        self.w_minus_plane()
            .join(&Subspace::from_vectors(std::slice::from_ref(&self.v_minus)).expect("nonzero"))
            .expect("independent")
    }

    /// `det[v₊, w^1₊, …, v₋, w^1₋, …]`.
    pub fn reference_determinant(&self) -> f64 {
        let big = 2 * self.n;
        let mut m = Matrix::zeros(big, big);
        m.set_column(0, &self.v_plus);
        m.view_mut((0, 1), (big, self.n - 1)).copy_from(&self.w_plus);
        m.set_column(self.n, &self.v_minus);
        m.view_mut((0, self.n + 1), (big, self.n - 1)).copy_from(&self.w_minus);
        m.determinant()
    }
}
