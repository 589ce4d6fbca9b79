//! Isometries, affine isometries, free group representations and deformation families.

use std::fmt;

use crate::error::{Error, Result};
use crate::qspace::{self, QSpace};
use crate::{linalg, Matrix, Vector};

/// Form-preservation threshold used by [`validate_isometry`].
pub const ISOMETRY_TOL: f64 = 1e-8;

/// Composition, inversion and identity.
pub trait GroupElement: Clone + Send + Sync {
    fn compose(&self, other: &Self) -> Self;
    fn inverse(&self) -> Self;
    fn identity_like(&self) -> Self;
}

/// A matrix preserving the form of its space.
#[derive(Clone, Debug)]
pub struct Isometry {
    space: QSpace,
    matrix: Matrix,
}

impl Isometry {
    /// Wraps a matrix that is an isometry by construction.
    pub fn from_trusted(space: QSpace, matrix: Matrix) -> Self {
        Self { space, matrix }
    }

    pub fn identity(space: &QSpace) -> Self {
        let n = space.dim();
        Self { space: space.clone(), matrix: Matrix::identity(n, n) }
    }

    pub fn space(&self) -> &QSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.matrix * x
    }

    /// `‖MᵀGM − G‖∞`.
    pub fn form_residual(&self) -> f64 {
        form_residual(&self.space, &self.matrix)
    }

    pub fn pow(&self, k: u32) -> Isometry {
        let mut out = self.identity_like();
        for _ in 0..k {
            out = out.compose(self);
        }
        out
    }
}

impl GroupElement for Isometry {
    fn compose(&self, other: &Self) -> Self {
        Self { space: self.space.clone(), matrix: &self.matrix * &other.matrix }
    }

    /// `G⁻¹MᵀG`, exact for isometries.
    fn inverse(&self) -> Self {
        let g = self.space.gram();
        Self {
            space: self.space.clone(),
            matrix: self.space.gram_inv() * self.matrix.transpose() * g,
        }
    }

    fn identity_like(&self) -> Self {
        Isometry::identity(&self.space)
    }
}

pub fn form_residual(space: &QSpace, m: &Matrix) -> f64 {
    let g = space.gram();
    linalg::norm_inf(&(m.transpose() * g * m - g))
}

pub fn validate_isometry(space: &QSpace, m: &Matrix) -> Result<Isometry> {
    let n = space.dim();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
    }
    let r = form_residual(space, m);
    if r > ISOMETRY_TOL {
        return Err(Error::NotOrthogonalForForm(r));
    }
    let d = m.determinant();
    if (d - 1.0).abs() > ISOMETRY_TOL {
        return Err(Error::NegativeDeterminant(d));
    }
    Ok(Isometry::from_trusted(space.clone(), m.clone()))
}

/// `ι(g) = [[1, 0], [0, g]]` from `R^{2n-1}` to `R^{2n}`.
pub fn embed_iota(g: &Isometry) -> Isometry {
    let n = g.space().model_n();
    let small = g.matrix().nrows();
    assert_eq!(small, 2 * n - 1, "ι expects an isometry of the affine model");
    let mut m = Matrix::zeros(small + 1, small + 1);
    m[(0, 0)] = 1.0;
    m.view_mut((1, 1), (small, small)).copy_from(g.matrix());
    Isometry::from_trusted(QSpace::linear(n), m)
}

/// `(ℓ, u)` acting by `x ↦ ℓx + u`.
#[derive(Clone, Debug)]
pub struct AffineIsometry {
    linear: Isometry,
    translation: Vector,
}

impl AffineIsometry {
    pub fn new(linear: Isometry, translation: Vector) -> Result<Self> {
        let n = linear.space().dim();
        if translation.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: translation.len() });
        }
        Ok(Self { linear, translation })
    }

    pub fn linear(&self) -> &Isometry {
        &self.linear
    }

    pub fn translation(&self) -> &Vector {
        &self.translation
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        self.linear.apply(x) + &self.translation
    }

    pub fn pow(&self, k: u32) -> AffineIsometry {
        let mut out = self.identity_like();
        for _ in 0..k {
            out = out.compose(self);
        }
        out
    }
}

impl GroupElement for AffineIsometry {
    fn compose(&self, other: &Self) -> Self {
        Self {
            linear: self.linear.compose(&other.linear),
            translation: self.linear.apply(&other.translation) + &self.translation,
        }
    }

    fn inverse(&self) -> Self {
        let li = self.linear.inverse();
        let t = -li.apply(&self.translation);
        Self { linear: li, translation: t }
    }

    fn identity_like(&self) -> Self {
        let n = self.translation.len();
        Self { linear: self.linear.identity_like(), translation: Vector::zeros(n) }
    }
}

/// A freely reduced word in the generators of a free group.
///
/// Letters are signed 1-based generator indices; `-i` is the inverse of generator `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    letters: Vec<i32>,
}

impl Word {
    pub fn new(letters: Vec<i32>) -> Result<Self> {
        if let Some(p) = letters.iter().position(|&l| l == 0) {
            return Err(Error::Precondition(format!("letter 0 at position {p}")));
        }
        if let Some(p) = letters.windows(2).position(|w| w[0] == -w[1]) {
            return Err(Error::NotReduced(p));
        }
        Ok(Self { letters })
    }

    pub fn empty() -> Self {
        Self { letters: Vec::new() }
    }

    pub fn generator(i: i32) -> Self {
        Self::new(vec![i]).expect("nonzero letter")
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self { letters: self.letters.iter().rev().map(|l| -l).collect() }
    }

    pub fn concat(&self, other: &Word) -> Result<Self> {
        let mut l = self.letters.clone();
        l.extend_from_slice(&other.letters);
        Self::new(l)
    }

    pub fn pow(&self, k: u32) -> Result<Self> {
        let mut l = Vec::with_capacity(self.len() * k as usize);
        for _ in 0..k {
            l.extend_from_slice(&self.letters);
        }
        Self::new(l)
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.letters.first(), self.letters.last()) {
            (Some(a), Some(b)) => self.len() == 1 || *a != -*b,
            _ => true,
        }
    }

    pub fn max_generator(&self) -> usize {
        self.letters.iter().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// Parses `a`, `b`, ... for generators and `A`, `B`, ... for their inverses.
    pub fn parse(s: &str) -> Result<Self> {
        let mut letters = Vec::new();
        for c in s.chars().filter(|c| !c.is_whitespace()) {
            let l = match c {
                'a'..='z' => (c as i32) - ('a' as i32) + 1,
                'A'..='Z' => -((c as i32) - ('A' as i32) + 1),
                _ => return Err(Error::Precondition(format!("bad letter {c:?}"))),
            };
            letters.push(l);
        }
        Self::new(letters)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        for &l in &self.letters {
            let base = if l > 0 { b'a' } else { b'A' };
            write!(f, "{}", (base + (l.unsigned_abs() - 1) as u8) as char)?;
        }
        Ok(())
    }
}

/// Images of the free generators.
#[derive(Clone, Debug)]
pub struct FreeRep<E> {
    gens: Vec<E>,
    inverses: Vec<E>,
}

pub type LinearRep = FreeRep<Isometry>;
pub type AffineRep = FreeRep<AffineIsometry>;

impl<E: GroupElement> FreeRep<E> {
    pub fn rank(&self) -> usize {
        self.gens.len()
    }

    pub fn generators(&self) -> &[E] {
        &self.gens
    }

    /// Image of a single signed letter.
    pub fn letter(&self, l: i32) -> &E {
        let i = l.unsigned_abs() as usize - 1;
        if l > 0 {
            &self.gens[i]
        } else {
            &self.inverses[i]
        }
    }

    pub fn identity(&self) -> E {
        self.gens[0].identity_like()
    }

    /// Left-to-right product over a letter sequence, reduced or not.
    pub fn evaluate_letters(&self, letters: &[i32]) -> E {
        let mut out = self.identity();
        for &l in letters {
            out = out.compose(self.letter(l));
        }
        out
    }

    pub fn evaluate(&self, w: &Word) -> E {
        self.evaluate_letters(w.letters())
    }

    fn check_word(&self, w: &Word) -> Result<()> {
        if w.max_generator() > self.rank() {
            return Err(Error::Precondition(format!("word {w} exceeds rank {}", self.rank())));
        }
        Ok(())
    }

    pub fn try_evaluate(&self, w: &Word) -> Result<E> {
        self.check_word(w)?;
        Ok(self.evaluate(w))
    }
}

impl FreeRep<Isometry> {
    pub fn new(gens: Vec<Isometry>) -> Result<Self> {
        let first = gens.first().ok_or_else(|| Error::Precondition("no generators".into()))?;
        if gens.iter().any(|g| g.space() != first.space()) {
            return Err(Error::Precondition("generators live in different spaces".into()));
        }
        let inverses = gens.iter().map(|g| g.inverse()).collect();
        Ok(Self { gens, inverses })
    }

    pub fn space(&self) -> &QSpace {
        self.gens[0].space()
    }
}

impl FreeRep<AffineIsometry> {
    pub fn new(gens: Vec<AffineIsometry>) -> Result<Self> {
        let first = gens.first().ok_or_else(|| Error::Precondition("no generators".into()))?;
        if gens.iter().any(|g| g.linear().space() != first.linear().space()) {
            return Err(Error::Precondition("generators live in different spaces".into()));
        }
        let inverses = gens.iter().map(|g| g.inverse()).collect();
        Ok(Self { gens, inverses })
    }

    pub fn space(&self) -> &QSpace {
        self.gens[0].linear().space()
    }

    /// The linear parts as a representation.
    pub fn linear_part(&self) -> LinearRep {
        LinearRep::new(self.gens.iter().map(|g| g.linear().clone()).collect())
            .expect("same space")
    }
}

/// `ρ_t(γ_i) = exp(tY_i)·ι(base(γ_i))`.
#[derive(Clone, Debug)]
pub struct DeformationFamily {
    base: LinearRep,
    directions: Vec<Matrix>,
    n: usize,
}

impl DeformationFamily {
    pub fn new(base: LinearRep, directions: Vec<Matrix>) -> Result<Self> {
        let small = base.space().dim();
        if small.is_multiple_of(2) {
            return Err(Error::Precondition("base must act on R^{2n-1}".into()));
        }
        let n = base.space().model_n();
        if directions.len() != base.rank() {
            return Err(Error::DimensionMismatch { expected: base.rank(), got: directions.len() });
        }
        let big = QSpace::linear(n);
        for y in &directions {
            if y.nrows() != 2 * n || y.ncols() != 2 * n {
                return Err(Error::DimensionMismatch { expected: 2 * n, got: y.nrows() });
            }
            let r = qspace::lie_residual(&big, y);
            if r > qspace::LIE_TOL * linalg::norm_inf(y).max(1.0) {
                return Err(Error::NotInLieAlgebra(r));
            }
        }
        Ok(Self { base, directions, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn base(&self) -> &LinearRep {
        &self.base
    }

    pub fn directions(&self) -> &[Matrix] {
        &self.directions
    }

    pub fn linear_space(&self) -> QSpace {
        QSpace::linear(self.n)
    }

    pub fn family_at(&self, t: f64) -> LinearRep {
        let big = self.linear_space();
        let gens = self
            .base
            .generators()
            .iter()
            .zip(&self.directions)
            .map(|(g, y)| {
                let e = qspace::exp_so(&big, y, t).expect("validated direction");
                e.compose(&embed_iota(g))
            })
            .collect();
        LinearRep::new(gens).expect("same space")
    }

    /// `ρ₀ = ι∘base`.
    pub fn rho0(&self) -> LinearRep {
        LinearRep::new(self.base.generators().iter().map(embed_iota).collect()).expect("same space")
    }

    /// `𝔲(w) = d/dt|₀ ρ_t(w)` by the product rule.
    pub fn family_derivative(&self, w: &Word) -> Matrix {
        let big = 2 * self.n;
        let rho0 = self.rho0();
        let m = w.len();
        let mats: Vec<&Matrix> = w.letters().iter().map(|&l| rho0.letter(l).matrix()).collect();
        let mut suffix = vec![Matrix::identity(big, big); m + 1];
        for j in (0..m).rev() {
            suffix[j] = mats[j] * &suffix[j + 1];
        }
        let mut prefix = Matrix::identity(big, big);
        let mut out = Matrix::zeros(big, big);
        for (j, &l) in w.letters().iter().enumerate() {
            let i = l.unsigned_abs() as usize - 1;
            let y = &self.directions[i];
            let d = if l > 0 {
                y * rho0.letter(l).matrix()
            } else {
                -(rho0.letter(l).matrix() * y)
            };
            out += &prefix * d * &suffix[j + 1];
            prefix = &prefix * mats[j];
        }
        out
    }

    /// `u(w) = 𝔲(w)·v₀` in `R^{2n}`.
    pub fn cocycle_u(&self, w: &Word) -> Vector {
        let mut v0 = Vector::zeros(2 * self.n);
        v0[0] = 1.0;
        self.family_derivative(w) * v0
    }

    /// The affine representation `(base, u)` with the first coordinate of `u` dropped.
    pub fn affine_from_family(&self) -> AffineRep {
        let gens = self
            .base
            .generators()
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let u = self.cocycle_u(&Word::generator(i as i32 + 1));
                AffineIsometry::new(g.clone(), drop_first(&u)).expect("dimensions agree")
            })
            .collect();
        AffineRep::new(gens).expect("same space")
    }
}

pub fn drop_first(u: &Vector) -> Vector {
    u.rows(1, u.len() - 1).into_owned()
}
