//! Word spectra and example builders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{neutral_fixed_vector, plane_pair, GAP_TOL};
use crate::error::Result;
use crate::groups::{AffineIsometry, AffineRep, DeformationFamily, GroupElement, Isometry, LinearRep, Word};
use crate::invariants::{log_lambda_word, margulis_alpha_word, LambdaConvention};
use crate::qspace::{exp_so, random_compact_with, random_isometry, random_lie, QSpace};
use crate::{Matrix, Vector};

/// Default threshold below which a value counts as zero.
pub const SIGN_TOL: f64 = 1e-8;
const MAX_VIOLATIONS: usize = 64;

fn letter_order(k: usize) -> Vec<i32> {
    (1..=k as i32).flat_map(|i| [i, -i]).collect()
}

/// All reduced words of length `1..=max_len` over `k` generators, by length then letter order
/// `1, −1, 2, −2, …`.
pub fn enumerate_reduced_words(k: usize, max_len: usize) -> Vec<Word> {
    let order = letter_order(k);
    let mut out = Vec::new();
    let mut layer: Vec<Vec<i32>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * (2 * k).max(1));
        for w in &layer {
            for &a in &order {
                if w.last() == Some(&-a) {
                    continue;
                }
                let mut v = w.clone();
                v.push(a);
                next.push(v);
            }
        }
        out.extend(next.iter().map(|l| Word::new(l.clone()).expect("reduced by construction")));
        layer = next;
    }
    out
}

/// `Σ_{ℓ=1}^{L} 2k(2k−1)^{ℓ−1}`.
pub fn reduced_word_count(k: usize, max_len: usize) -> usize {
    (1..=max_len).map(|l| 2 * k * (2 * k - 1).pow(l as u32 - 1)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SpectrumKind {
    Margulis,
    EigenGap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SpectrumVerdict {
    NecessaryConditionsHoldUpToL,
    OppositeSignsFound,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct WordRecord {
    pub word: String,
    pub length: usize,
    pub value: Option<f64>,
    pub normalized: Option<f64>,
    /// Log of the smaller outer modulus gap.
    pub margin: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub kind: SpectrumKind,
    pub depth: usize,
    pub tol: f64,
    pub records: Vec<WordRecord>,
    pub count: usize,
    pub failures: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub min_abs_normalized: Option<f64>,
    pub sign_violations: Vec<(String, String)>,
    pub verdict: SpectrumVerdict,
}

impl SpectrumReport {
    pub fn from_records(kind: SpectrumKind, depth: usize, tol: f64, records: Vec<WordRecord>) -> Self {
        let values: Vec<(&str, f64, f64)> = records
            .iter()
            .filter_map(|r| Some((r.word.as_str(), r.value?, r.normalized?)))
            .collect();
        let count = values.len();
        let failures = records.len() - count;
        let min = values.iter().map(|v| v.1).reduce(f64::min);
        let max = values.iter().map(|v| v.1).reduce(f64::max);
        let min_abs_normalized = values.iter().map(|v| v.2.abs()).reduce(f64::min);
        let positive = values.iter().find(|v| v.1 > tol).map(|v| v.0);
        let negative = values.iter().find(|v| v.1 < -tol).map(|v| v.0);
        let mut sign_violations = Vec::new();
        if let (Some(p), Some(q)) = (positive, negative) {
            let sign = if values.iter().position(|v| v.0 == p) < values.iter().position(|v| v.0 == q) {
                1.0
            } else {
                -1.0
            };
            let first = if sign > 0.0 { p } else { q };
            for v in &values {
                if v.1 * sign < -tol {
                    sign_violations.push((first.to_string(), v.0.to_string()));
                    if sign_violations.len() == MAX_VIOLATIONS {
                        break;
                    }
                }
            }
        }
        let verdict = if !sign_violations.is_empty() {
            SpectrumVerdict::OppositeSignsFound
        } else if count == 0 || failures > 0 || values.iter().any(|v| v.1.abs() <= tol) {
            SpectrumVerdict::Inconclusive
        } else {
            SpectrumVerdict::NecessaryConditionsHoldUpToL
        };
        Self {
            kind,
            depth,
            tol,
            records,
            count,
            failures,
            min,
            max,
            min_abs_normalized,
            sign_violations,
            verdict,
        }
    }
}

fn record(w: &Word, value: Result<f64>, margin: Result<f64>) -> WordRecord {
    let len = w.len();
    match value {
        Ok(v) => WordRecord {
            word: w.to_string(),
            length: len,
            value: Some(v),
            normalized: Some(v / len as f64),
            margin: margin.ok(),
            error: None,
        },
        Err(e) => WordRecord {
            word: w.to_string(),
            length: len,
            value: None,
            normalized: None,
            margin: margin.ok(),
            error: Some(e.to_string()),
        },
    }
}

fn margin(g: &Isometry) -> Result<f64> {
    let p = plane_pair(g, GAP_TOL)?;
    Ok(p.gap_top.min(p.gap_bottom))
}

/// `α(w)` for every reduced word up to length `depth`.
pub fn margulis_spectrum(rep: &AffineRep, depth: usize, tol: f64) -> SpectrumReport {
    let words = enumerate_reduced_words(rep.rank(), depth);
    let records = words
        .par_iter()
        .map(|w| record(w, margulis_alpha_word(rep, w), margin(rep.evaluate(w).linear())))
        .collect();
    SpectrumReport::from_records(SpectrumKind::Margulis, depth, tol, records)
}

/// `log λ(w)` for every reduced word up to length `depth`.
pub fn eigen_gap_spectrum(rep: &LinearRep, depth: usize, tol: f64) -> SpectrumReport {
    let words = enumerate_reduced_words(rep.rank(), depth);
    let records = words
        .par_iter()
        .map(|w| {
            record(w, log_lambda_word(rep, w, LambdaConvention::RepAtt), margin(&rep.evaluate(w)))
        })
        .collect();
    SpectrumReport::from_records(SpectrumKind::EigenGap, depth, tol, records)
}

/// Boost between the positive coordinate `i` and the negative coordinate `j`.
fn boost(dim: usize, i: usize, j: usize, rate: f64) -> Matrix {
    let mut x = Matrix::zeros(dim, dim);
    x[(i, j)] = rate;
    x[(j, i)] = rate;
    x
}

/// Two hyperbolic generators of `SO(1,2)` with perpendicular axes and translations `−c·ν + noise`.
pub fn build_schottky_so12_affine(s: f64, c: f64, seed: u64) -> AffineRep {
    let space = QSpace::affine(2);
    let x1 = boost(3, 0, 1, 1.0);
    let mut rot = Matrix::zeros(3, 3);
    rot[(2, 1)] = std::f64::consts::FRAC_PI_2;
    rot[(1, 2)] = -std::f64::consts::FRAC_PI_2;
    let r = exp_so(&space, &rot, 1.0).expect("rotation");
    let g1 = exp_so(&space, &x1, s).expect("boost");
    let unit = exp_so(&space, &x1, 1.0).expect("boost");
    let nu1 = neutral_fixed_vector(&unit).expect("hyperbolic reference");
    let conj = |g: &Isometry| r.compose(g).compose(&r.inverse());
    let g2 = conj(&g1);
    let nu2 = r.apply(&nu1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = || Vector::from_fn(3, |_, _| rng.random_range(-0.1..=0.1));
    let a1 = AffineIsometry::new(g1, -c * nu1 + noise()).expect("dimensions agree");
    let a2 = AffineIsometry::new(g2, -c * nu2 + noise()).expect("dimensions agree");
    AffineRep::new(vec![a1, a2]).expect("same space")
}

/// Schottky pair in `SO(n-1,n)` with directions `random_lie(Q, ·, s)` in `so(n,n)`.
///
/// The first generator is a block boost with rates `3, 3.75, 4.5, …`; the second is its conjugate
/// by a seeded rotation of the maximal compact subgroup.
pub fn build_deformation_example(n: usize, s: f64, seed: u64) -> Result<DeformationFamily> {
    let space = QSpace::affine(n);
    let dim = 2 * n - 1;
    let mut x = Matrix::zeros(dim, dim);
    for i in 0..n - 1 {
        x += boost(dim, i, n + i, 3.0 * (1.0 + 0.25 * i as f64));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g1 = exp_so(&space, &x, 1.0)?;
    let r = exp_so(&space, &random_compact_with(&space, &mut rng, std::f64::consts::FRAC_PI_2)?, 1.0)?;
    let g2 = r.compose(&g1).compose(&r.inverse());
    let base = LinearRep::new(vec![g1, g2])?;
    deformation_over(base, s, seed.wrapping_add(1))
}

/// Seeded deformation directions of size `s` over the given base.
pub fn deformation_over(base: LinearRep, s: f64, seed: u64) -> Result<DeformationFamily> {
    let linear = QSpace::linear(base.space().model_n());
    let directions = (0..base.rank())
        .map(|i| random_lie(&linear, seed.wrapping_mul(31).wrapping_add(i as u64), s))
        .collect();
    DeformationFamily::new(base, directions)
}

/// A random conjugate of a diagonal hyperbolic element with well separated moduli.
///
/// In the linear model the two middle moduli are `e^{±0.4}`.
pub fn random_hyperbolic(space: &QSpace, seed: u64) -> Result<Isometry> {
    let dim = space.dim();
    let n = space.model_n();
    let mut x = Matrix::zeros(dim, dim);
    let pairs = if dim.is_multiple_of(2) { n } else { n - 1 };
    for i in 0..pairs {
        let rate = 0.4 + 0.8 * (pairs - 1 - i) as f64;
        x += boost(dim, i, n + i, rate);
    }
    let h = exp_so(space, &x, 1.0)?;
    let k = random_isometry(space, seed, 0.3)?;
    Ok(k.compose(&h).compose(&k.inverse()))
}
