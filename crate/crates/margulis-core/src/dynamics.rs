//! Ordered Schur decompositions and the proximal data of hyperbolic isometries.

use nalgebra::linalg::balancing::balance_parlett_reinsch;
use nalgebra::{Complex, ComplexField, DMatrix, Schur};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::{GroupElement, Isometry, LinearRep, Word};
use crate::invariants::{self, labeled_neutral_lines, NullPlane};
use crate::qspace::{self, orthogonal_complement, Subspace};
use crate::{linalg, Matrix, Vector};

pub type C64 = Complex<f64>;
type CMatrix = DMatrix<C64>;

/// Default relative gap required between consecutive moduli.
pub const GAP_TOL: f64 = 1e-6;
const MAX_SWEEPS_PER_DIM: usize = 100;

/// Complex Schur form `B = Q T Qᴴ` of the balanced matrix `B = D⁻¹MD`, sorted by descending modulus.
#[derive(Clone, Debug)]
pub struct EigenData {
    pub eigenvalues: Vec<C64>,
    q: CMatrix,
    t: CMatrix,
    scaling: Vector,
    pub swaps: usize,
    pub reconstruction_residual: f64,
}

impl EigenData {
    pub fn moduli(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.norm()).collect()
    }

    pub fn schur_form(&self) -> &CMatrix {
        &self.t
    }

    pub fn schur_vectors(&self) -> &CMatrix {
        &self.q
    }

    /// Real invariant subspace belonging to the `k` eigenvalues of largest modulus.
    pub fn leading_subspace(&self, k: usize) -> Result<Subspace> {
        let n = self.q.nrows();
        if k == 0 || k > n {
            return Err(Error::Precondition(format!("cannot take {k} leading vectors of {n}")));
        }
        let mut r = Matrix::zeros(n, 2 * k);
        for j in 0..k {
            for i in 0..n {
                let z = self.q[(i, j)] * self.scaling[i];
                r[(i, j)] = z.re;
                r[(i, k + j)] = z.im;
            }
        }
        let (span, sv) = linalg::dominant_span(&r, k);
        let top = sv[0].max(f64::MIN_POSITIVE);
        if sv[k - 1] <= 1e-10 * top {
            return Err(Error::NotProximal("invariant subspace is rank deficient".into()));
        }
        if sv.len() > k && sv[k] > 1e-6 * top {
            return Err(Error::NotProximal("invariant subspace splits a conjugate pair".into()));
        }
        Subspace::new(span)
    }
}

fn swap_adjacent(t: &mut CMatrix, q: &mut CMatrix, k: usize) {
    let n = t.nrows();
    let a = t[(k, k)];
    let c = t[(k + 1, k + 1)];
    let b = t[(k, k + 1)];
    let x = [b, c - a];
    let nrm = (x[0].norm_sqr() + x[1].norm_sqr()).sqrt();
    if nrm == 0.0 {
        return;
    }
    let z1 = x[0] / nrm;
    let z2 = x[1] / nrm;
    // Z = [[z1, -conj(z2)], [z2, conj(z1)]]; its first column spans the eigenvector for c.
    let zz = [[z1, -z2.conj()], [z2, z1.conj()]];
    for j in k..n {
        let (p, r) = (t[(k, j)], t[(k + 1, j)]);
        t[(k, j)] = zz[0][0].conj() * p + zz[1][0].conj() * r;
        t[(k + 1, j)] = zz[0][1].conj() * p + zz[1][1].conj() * r;
    }
    for i in 0..n {
        if i <= k + 1 {
            let (p, r) = (t[(i, k)], t[(i, k + 1)]);
            t[(i, k)] = p * zz[0][0] + r * zz[1][0];
            t[(i, k + 1)] = p * zz[0][1] + r * zz[1][1];
        }
        let (p, r) = (q[(i, k)], q[(i, k + 1)]);
        q[(i, k)] = p * zz[0][0] + r * zz[1][0];
        q[(i, k + 1)] = p * zz[0][1] + r * zz[1][1];
    }
    t[(k + 1, k)] = C64::new(0.0, 0.0);
}

pub fn eigendecompose(m: &Matrix) -> Result<EigenData> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::Precondition("eigendecompose needs a nonempty square matrix".into()));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Precondition("matrix has non-finite entries".into()));
    }
    let mut b = m.clone();
    let scaling = balance_parlett_reinsch(&mut b);
    let bc: CMatrix = b.map(|x| C64::new(x, 0.0));
    let schur = Schur::try_new(bc.clone(), f64::EPSILON, MAX_SWEEPS_PER_DIM * n)
        .ok_or(Error::NoConvergence)?;
    let (mut q, mut t) = schur.unpack();
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    let mut swaps = 0;
    for pass in 0..n {
        let mut changed = false;
        for k in 0..n.saturating_sub(1 + pass) {
            if t[(k, k)].norm() < t[(k + 1, k + 1)].norm() {
                swap_adjacent(&mut t, &mut q, k);
                swaps += 1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let recon = &q * &t * q.adjoint() - &bc;
    let bn = bc.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let res = recon.iter().map(|z| z.norm()).fold(0.0, f64::max) / bn;
    if res > 1e-8 {
        return Err(Error::NoConvergence);
    }
    let eigenvalues = (0..n).map(|i| t[(i, i)]).collect();
    Ok(EigenData { eigenvalues, q, t, scaling, swaps, reconstruction_residual: res })
}

/// Attracting and repelling isotropic planes of dimension `k = ⌊(N−1)/2⌋`.
#[derive(Clone, Debug)]
pub struct PlanePair {
    pub a_att: Subspace,
    pub a_rep: Subspace,
    pub moduli: Vec<f64>,
    /// `log(m_k / m_{k+1})`.
    pub gap_top: f64,
    /// `log(m_{N-k} / m_{N-k+1})`.
    pub gap_bottom: f64,
}

fn check_gaps(moduli: &[f64], k: usize, gap_tol: f64) -> Result<(f64, f64)> {
    let n = moduli.len();
    let top = moduli[k - 1] / moduli[k];
    let bottom = moduli[n - k - 1] / moduli[n - k];
    if !(top >= 1.0 + gap_tol) || !(bottom >= 1.0 + gap_tol) {
        return Err(Error::NotProximal(format!(
            "modulus gaps {:.3e} and {:.3e} below tolerance",
            top - 1.0,
            bottom - 1.0
        )));
    }
    Ok((top.ln(), bottom.ln()))
}

pub fn plane_pair(g: &Isometry, gap_tol: f64) -> Result<PlanePair> {
    let k = g.space().flag_dim();
    let e = eigendecompose(g.matrix())?;
    let moduli = e.moduli();
    let (gap_top, gap_bottom) = check_gaps(&moduli, k, gap_tol)?;
    let a_att = e.leading_subspace(k)?;
    let a_rep = eigendecompose(g.inverse().matrix())?.leading_subspace(k)?;
    Ok(PlanePair { a_att, a_rep, moduli, gap_top, gap_bottom })
}

/// Eigen-structure of a proximal isometry of the linear model.
#[derive(Clone, Debug)]
pub struct ProximalData {
    pub a_att: Subspace,
    pub a_rep: Subspace,
    /// Labeled line of `(A_att, A_rep)`.
    pub mid_plus: Vector,
    pub mid_minus: Vector,
    /// Eigenvalue on `mid_plus`.
    pub lambda: f64,
    /// Eigenvalue on the labeled line of `(A_rep, A_att)`.
    pub lambda_rep_att: f64,
    pub gap_outer: f64,
    pub gap_mid: f64,
    pub moduli: Vec<f64>,
}

pub fn proximal_data(g: &Isometry) -> Result<ProximalData> {
    proximal_data_with(g, GAP_TOL)
}

pub fn proximal_data_with(g: &Isometry, gap_tol: f64) -> Result<ProximalData> {
    let space = g.space();
    if !space.dim().is_multiple_of(2) {
        return Err(Error::Precondition("proximal_data expects the linear model".into()));
    }
    let n = space.dim() / 2;
    let k = n - 1;
    let e = eigendecompose(g.matrix())?;
    let moduli = e.moduli();
    let (gap_top, gap_bottom) = check_gaps(&moduli, k, gap_tol)?;
    for z in [e.eigenvalues[n - 1], e.eigenvalues[n]] {
        if z.im.abs() > 1e-6 * z.norm().max(1.0) {
            return Err(Error::ComplexMidEigenvalues);
        }
        if z.re <= 0.0 {
            return Err(Error::NotProximal("mid eigenvalues are negative".into()));
        }
    }
    let a_att = e.leading_subspace(k)?;
    let a_rep = eigendecompose(g.inverse().matrix())?.leading_subspace(k)?;
    let lab = labeled_neutral_lines(space, &a_att, &a_rep)?;
    let lambda = space.pair(&g.apply(&lab.v_plus), &lab.v_minus) / space.pair(&lab.v_plus, &lab.v_minus);
    let rev = labeled_neutral_lines(space, &a_rep, &a_att)?;
    let lambda_rep_att =
        space.pair(&g.apply(&rev.v_plus), &rev.v_minus) / space.pair(&rev.v_plus, &rev.v_minus);
    Ok(ProximalData {
        a_att,
        a_rep,
        mid_plus: lab.v_plus,
        mid_minus: lab.v_minus,
        lambda,
        lambda_rep_att,
        gap_outer: gap_top.min(gap_bottom),
        gap_mid: (moduli[n - 1] / moduli[n]).ln(),
        moduli,
    })
}

/// Unit timelike fixed vector `ν(V⁻, V⁺)` of a proximal isometry of the affine model.
pub fn neutral_fixed_vector(g: &Isometry) -> Result<Vector> {
    let space = g.space();
    if space.dim().is_multiple_of(2) {
        return Err(Error::Precondition("neutral_fixed_vector expects the affine model".into()));
    }
    let pp = plane_pair(g, GAP_TOL)?;
    let k = space.flag_dim();
    if (pp.moduli[k] - 1.0).abs() > 1e-6 + 1e-12 * pp.moduli[0] {
        return Err(Error::NeutralNotSimple);
    }
    let v_minus = NullPlane::new(space, orthogonal_complement(space, &pp.a_rep)?)?;
    let v_plus = NullPlane::new(space, orthogonal_complement(space, &pp.a_att)?)?;
    invariants::neutral_vector(space, &v_minus, &v_plus)
}

/// Margins of a word: log modulus gaps and transversality against other words.
#[derive(Clone, Debug, Serialize)]
pub struct MarginRecord {
    pub gap_outer: f64,
    pub gap_mid: f64,
    /// Smallest pairing singular value between `A_att(w)` and `A_rep(w')` over the supplied words.
    pub transversality: f64,
}

pub fn proximality_margin(rep: &LinearRep, w: &Word, others: &[Word]) -> Result<MarginRecord> {
    let g = rep.try_evaluate(w)?;
    let pp = plane_pair(&g, GAP_TOL)?;
    let space = rep.space();
    let gap_mid = if space.dim().is_multiple_of(2) {
        let n = space.dim() / 2;
        (pp.moduli[n - 1] / pp.moduli[n]).ln()
    } else {
        pp.gap_top.min(pp.gap_bottom)
    };
    let mut transversality = qspace::transversality(space, &pp.a_att, &pp.a_rep);
    for o in others {
        let h = rep.try_evaluate(o)?;
        let rep_o = plane_pair(&h, GAP_TOL)?.a_rep;
        transversality = transversality.min(qspace::transversality(space, &pp.a_att, &rep_o));
    }
    Ok(MarginRecord { gap_outer: pp.gap_top.min(pp.gap_bottom), gap_mid, transversality })
}
