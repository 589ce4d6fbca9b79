//! Derivative and limit formula checks.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{plane_pair, GAP_TOL};
use crate::error::{Error, Result};
use crate::groups::{AffineRep, DeformationFamily, LinearRep, Word};
use crate::invariants::{
    beta, fixed_affine_planes, log_lambda_letters, log_lambda_word, margulis_alpha_letters,
    margulis_alpha_word, theta, LambdaConvention,
};

/// Slope threshold separating the verdicts.
pub const SLOPE_TOL: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Converging,
    Stalled,
    Diverging,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub terms: Vec<(usize, f64)>,
    pub target: f64,
    pub errors: Vec<f64>,
    /// Least-squares slope of `ln(error)` against the index.
    pub slope: f64,
    pub bound: f64,
    pub verdict: Verdict,
    /// First index that failed, with the reason. The sequence stops there.
    pub truncated_at: Option<(usize, String)>,
}

impl ConvergenceReport {
    pub fn final_error(&self) -> f64 {
        self.errors.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return f64::NAN;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn build_report(
    results: Vec<(usize, Result<f64>)>,
    target: f64,
    bound: f64,
    error: impl Fn(f64) -> f64,
) -> ConvergenceReport {
    let mut terms = Vec::new();
    let mut truncated_at = None;
    for (i, r) in results {
        match r {
            Ok(v) => terms.push((i, v)),
            Err(e) => {
                truncated_at = Some((i, e.to_string()));
                break;
            }
        }
    }
    let errors: Vec<f64> = terms.iter().map(|&(_, v)| error(v)).collect();
    let xs: Vec<f64> = terms.iter().map(|&(i, _)| i as f64).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.max(1e-300).ln()).collect();
    let slope = fit_slope(&xs, &ys);
    let last = errors.last().copied().unwrap_or(f64::INFINITY);
    let verdict = if slope < -SLOPE_TOL && last < bound {
        Verdict::Converging
    } else if slope > SLOPE_TOL {
        Verdict::Diverging
    } else {
        Verdict::Stalled
    };
    ConvergenceReport { terms, target, errors, slope, bound, verdict, truncated_at }
}

fn power(w: &Word, k: usize) -> Vec<i32> {
    w.letters().repeat(k)
}

fn inverse_power(w: &Word, k: usize) -> Vec<i32> {
    w.inverse().letters().repeat(k)
}

fn distinct_planes(rep: &LinearRep, g: &Word, h: &Word) -> Result<()> {
    if g.is_empty() || h.is_empty() {
        return Err(Error::Precondition("empty word".into()));
    }
    let pg = plane_pair(&rep.evaluate(g), GAP_TOL)?;
    let ph = plane_pair(&rep.evaluate(h), GAP_TOL)?;
    for a in [&pg.a_att, &pg.a_rep] {
        for b in [&ph.a_att, &ph.a_rep] {
            if a.max_angle(b) < 1e-8 {
                return Err(Error::Precondition("fixed planes are not distinct".into()));
            }
        }
    }
    Ok(())
}

/// `α(γⁿηᵏ) − α(γⁿ) − α(ηᵏ)` against `½(β(η⁻,γ⁻,γ⁺,ηᵏγ⁺) + β(η⁺,γ⁺,γ⁻,η⁻ᵏγ⁻))`.
pub fn alpha_limit_fixed_k(
    rep: &AffineRep,
    gamma: &Word,
    eta: &Word,
    k: usize,
    max_power: usize,
    bound: f64,
) -> Result<ConvergenceReport> {
    distinct_planes(&rep.linear_part(), gamma, eta)?;
    let space = rep.space();
    let g = fixed_affine_planes(&rep.evaluate(gamma))?;
    let e = fixed_affine_planes(&rep.evaluate(eta))?;
    let ek = rep.evaluate_letters(&power(eta, k));
    let emk = rep.evaluate_letters(&inverse_power(eta, k));
    let target = 0.5
        * (beta(space, [&e.minus, &g.minus, &g.plus, &g.plus.apply(&ek)?])?
            + beta(space, [&e.plus, &g.plus, &g.minus, &g.minus.apply(&emk)?])?);
    let a_eta = margulis_alpha_letters(rep, &power(eta, k))?;
    let results = (1..=max_power)
        .into_par_iter()
        .map(|n| {
            let r = (|| {
                let mut mixed = power(gamma, n);
                mixed.extend(power(eta, k));
                Ok(margulis_alpha_letters(rep, &mixed)?
                    - margulis_alpha_letters(rep, &power(gamma, n))?
                    - a_eta)
            })();
            (n, r)
        })
        .collect();
    Ok(build_report(results, target, bound, |v| (v - target).abs()))
}

/// `α(γⁿηⁿ) − α(γⁿ) − α(ηⁿ)` against `β(η⁻,γ⁻,γ⁺,η⁺)`.
pub fn alpha_limit_diag(
    rep: &AffineRep,
    gamma: &Word,
    eta: &Word,
    max_power: usize,
    bound: f64,
) -> Result<ConvergenceReport> {
    distinct_planes(&rep.linear_part(), gamma, eta)?;
    let space = rep.space();
    let g = fixed_affine_planes(&rep.evaluate(gamma))?;
    let e = fixed_affine_planes(&rep.evaluate(eta))?;
    let target = beta(space, [&e.minus, &g.minus, &g.plus, &e.plus])?;
    let results = (1..=max_power)
        .into_par_iter()
        .map(|n| {
            let r = (|| {
                let mut mixed = power(gamma, n);
                mixed.extend(power(eta, n));
                Ok(margulis_alpha_letters(rep, &mixed)?
                    - margulis_alpha_letters(rep, &power(gamma, n))?
                    - margulis_alpha_letters(rep, &power(eta, n))?)
            })();
            (n, r)
        })
        .collect();
    Ok(build_report(results, target, bound, |v| (v - target).abs()))
}

fn log_lam(rep: &LinearRep, letters: &[i32]) -> Result<f64> {
    log_lambda_letters(rep, letters, LambdaConvention::AttRep)
}

/// `λ(γⁿηᵏ)² / (λ(γⁿ)²λ(ηᵏ)²)` against `θ(η⁻,γ⁻,γ⁺,ηᵏγ⁺)·θ(η⁺,γ⁺,γ⁻,η⁻ᵏγ⁻)`.
pub fn theta_limit_fixed_k(
    rep: &LinearRep,
    gamma: &Word,
    eta: &Word,
    k: usize,
    max_power: usize,
    bound: f64,
) -> Result<ConvergenceReport> {
    distinct_planes(rep, gamma, eta)?;
    let space = rep.space();
    let g = plane_pair(&rep.evaluate(gamma), GAP_TOL)?;
    let e = plane_pair(&rep.evaluate(eta), GAP_TOL)?;
    let ek = rep.evaluate_letters(&power(eta, k));
    let emk = rep.evaluate_letters(&inverse_power(eta, k));
    let target = theta(space, [&e.a_rep, &g.a_rep, &g.a_att, &g.a_att.transform(ek.matrix())?])?
        * theta(space, [&e.a_att, &g.a_att, &g.a_rep, &g.a_rep.transform(emk.matrix())?])?;
    let l_eta = log_lam(rep, &power(eta, k))?;
    let results = (1..=max_power)
        .into_par_iter()
        .map(|n| {
            let r = (|| {
                let mut mixed = power(gamma, n);
                mixed.extend(power(eta, k));
                let d = log_lam(rep, &mixed)? - log_lam(rep, &power(gamma, n))? - l_eta;
                Ok((2.0 * d).exp())
            })();
            (n, r)
        })
        .collect();
    Ok(build_report(results, target, bound, |v| (v / target - 1.0).abs()))
}

/// `λ(γⁿηⁿ)² / (λ(γⁿ)²λ(ηⁿ)²)` against `θ(η⁻,γ⁻,γ⁺,η⁺)²`.
pub fn theta_limit_diag(
    rep: &LinearRep,
    gamma: &Word,
    eta: &Word,
    max_power: usize,
    bound: f64,
) -> Result<ConvergenceReport> {
    distinct_planes(rep, gamma, eta)?;
    let space = rep.space();
    let g = plane_pair(&rep.evaluate(gamma), GAP_TOL)?;
    let e = plane_pair(&rep.evaluate(eta), GAP_TOL)?;
    let target = theta(space, [&e.a_rep, &g.a_rep, &g.a_att, &e.a_att])?.powi(2);
    let results = (1..=max_power)
        .into_par_iter()
        .map(|n| {
            let r = (|| {
                let mut mixed = power(gamma, n);
                mixed.extend(power(eta, n));
                let d = log_lam(rep, &mixed)?
                    - log_lam(rep, &power(gamma, n))?
                    - log_lam(rep, &power(eta, n))?;
                Ok((2.0 * d).exp())
            })();
            (n, r)
        })
        .collect();
    Ok(build_report(results, target, bound, |v| (v / target - 1.0).abs()))
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivReport {
    pub word: String,
    pub alpha: f64,
    pub lambda_at_zero: f64,
    /// `(h, (λ(h) − λ(−h)) / 2h)`.
    pub differences: Vec<(f64, f64)>,
    pub richardson: f64,
    /// Richardson estimate of `d/dt log λ_t`, which equals `½ d/dt log λ_t²`.
    pub log_richardson: f64,
    /// `|richardson + α|`.
    pub error: f64,
    /// `|richardson − log_richardson|`.
    pub target_agreement: f64,
    pub observed_order: f64,
}

fn richardson(d: &[(f64, f64)]) -> f64 {
    let n = d.len();
    if n < 2 {
        return d[0].1;
    }
    let (h0, d0) = d[n - 2];
    let (h1, d1) = d[n - 1];
    let r2 = (h0 / h1).powi(2);
    (r2 * d1 - d0) / (r2 - 1.0)
}

/// Checks `dλ_t(w)/dt |_{t=0} = −α(w)` by central differences.
pub fn deriv_check(fam: &DeformationFamily, w: &Word, h_schedule: &[f64]) -> Result<DerivReport> {
    if h_schedule.is_empty() {
        return Err(Error::Precondition("empty step schedule".into()));
    }
    let conv = LambdaConvention::RepAtt;
    let log_lambda_at = |t: f64| log_lambda_word(&fam.family_at(t), w, conv);
    let l0 = log_lambda_at(0.0)?;
    let alpha = margulis_alpha_word(&fam.affine_from_family(), w)?;
    let mut differences = Vec::with_capacity(h_schedule.len());
    let mut log_differences = Vec::with_capacity(h_schedule.len());
    for &h in h_schedule {
        let lp = log_lambda_at(h).map_err(|_| Error::StepTooLarge(h))?;
        let lm = log_lambda_at(-h).map_err(|_| Error::StepTooLarge(h))?;
        differences.push((h, (lp.exp() - lm.exp()) / (2.0 * h)));
        log_differences.push((h, (lp - lm) / (2.0 * h)));
    }
    let rich = richardson(&differences);
    let log_rich = richardson(&log_differences);
    let floor = 1e-9 * rich.abs().max(1.0);
    let (xs, ys): (Vec<f64>, Vec<f64>) = differences
        .iter()
        .map(|&(h, d)| (h, (d - rich).abs()))
        .filter(|&(_, e)| e > floor)
        .map(|(h, e)| (h.ln(), e.ln()))
        .unzip();
    let observed_order = fit_slope(&xs, &ys);
    Ok(DerivReport {
        word: w.to_string(),
        alpha,
        lambda_at_zero: l0.exp(),
        differences,
        richardson: rich,
        log_richardson: log_rich,
        error: (rich + alpha).abs(),
        target_agreement: (rich - log_rich).abs(),
        observed_order,
    })
}

/// Where the rates of a word come from.
#[derive(Clone, Copy)]
pub enum RateSource<'a> {
    Linear(&'a LinearRep),
    Affine(&'a AffineRep),
    /// `ρ_t` for `log λ` and the induced affine action for `α`.
    Family(&'a DeformationFamily, f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitRates {
    pub word: String,
    pub word_length: usize,
    pub log_lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub normalized_log_lambda: Option<f64>,
    pub normalized_alpha: Option<f64>,
}

/// `log λ(w)` and `α(w)`, raw and divided by the word length.
pub fn orbit_rates(source: RateSource<'_>, w: &Word) -> Result<OrbitRates> {
    let (log_lambda, alpha) = match source {
        RateSource::Linear(rep) => (Some(log_lambda_word(rep, w, LambdaConvention::RepAtt)?), None),
        RateSource::Affine(rep) => (None, Some(margulis_alpha_word(rep, w)?)),
        RateSource::Family(fam, t) => (
            Some(log_lambda_word(&fam.family_at(t), w, LambdaConvention::RepAtt)?),
            Some(margulis_alpha_word(&fam.affine_from_family(), w)?),
        ),
    };
    let len = w.len() as f64;
    Ok(OrbitRates {
        word: w.to_string(),
        word_length: w.len(),
        log_lambda,
        alpha,
        normalized_log_lambda: log_lambda.map(|x| x / len),
        normalized_alpha: alpha.map(|x| x / len),
    })
}
