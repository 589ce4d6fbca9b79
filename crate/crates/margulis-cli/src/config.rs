//! Scene files: schema, overrides and conversion into representations.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use margulis_core::groups::validate_isometry;
use margulis_core::qspace::exp_so;
use margulis_core::{AffineIsometry, AffineRep, DeformationFamily, Isometry, LinearRep, Matrix, QSpace, Vector};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Affine,
    Linear,
    Family,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// Row-major matrix.
    Matrix(Vec<Vec<f64>>),
    /// `exp(parameter · element)`.
    Lie { element: Vec<Vec<f64>>, parameter: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "tol_identities")]
    pub identities: f64,
    #[serde(default = "tol_deriv")]
    pub deriv: f64,
    #[serde(default = "tol_order")]
    pub order: f64,
    #[serde(default = "tol_limit")]
    pub limit: f64,
    #[serde(default = "tol_sign")]
    pub sign: f64,
    /// Smallest admissible `min |log λ(w)| / |w|`.
    #[serde(default)]
    pub gap: f64,
    /// Pairwise transversality below which random inputs are redrawn.
    #[serde(default = "tol_transversality")]
    pub transversality: f64,
}

fn tol_identities() -> f64 {
    1e-8
}
fn tol_deriv() -> f64 {
    1e-6
}
fn tol_order() -> f64 {
    0.3
}
fn tol_limit() -> f64 {
    1e-3
}
fn tol_sign() -> f64 {
    1e-8
}
fn tol_transversality() -> f64 {
    0.02
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identities: tol_identities(),
            deriv: tol_deriv(),
            order: tol_order(),
            limit: tol_limit(),
            sign: tol_sign(),
            gap: 0.0,
            transversality: tol_transversality(),
        }
    }
}

impl Tolerances {
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), CliError> {
        let slot = match name {
            "identities" => &mut self.identities,
            "deriv" => &mut self.deriv,
            "order" => &mut self.order,
            "limit" => &mut self.limit,
            "sign" => &mut self.sign,
            "gap" => &mut self.gap,
            "transversality" => &mut self.transversality,
            _ => return Err(CliError::Input(format!("unknown tolerance `{name}`"))),
        };
        if !value.is_finite() || value < 0.0 {
            return Err(CliError::Input(format!("tolerance `{name}` must be a finite non-negative number")));
        }
        *slot = value;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub n: usize,
    pub model: Model,
    pub generators: Vec<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translations: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Deformation parameter at which a family is evaluated.
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub words: Vec<String>,
    #[serde(default = "default_steps")]
    pub steps: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: String,
    #[serde(default = "default_eta")]
    pub eta: String,
    #[serde(default = "default_k")]
    pub k: Vec<usize>,
    #[serde(default = "default_max_power")]
    pub max_power: usize,
}

fn default_depth() -> usize {
    4
}
fn default_t() -> f64 {
    0.3
}
fn default_samples() -> usize {
    20
}
fn default_steps() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4, 1e-5]
}
fn default_gamma() -> String {
    "a".into()
}
fn default_eta() -> String {
    "b".into()
}
fn default_k() -> Vec<usize> {
    vec![1, 2]
}
fn default_max_power() -> usize {
    8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExampleConfig {
    /// Affine Schottky pair in `SO(1,2) ⋉ R³`.
    Schottky { s: f64, c: f64, seed: u64 },
    /// Family over a Schottky pair in `SO(n-1,n)`.
    Deformation { n: usize, s: f64, seed: u64 },
    /// Family over the 3d affine Schottky pair's linear part.
    SchottkyDeformation { base_s: f64, s: f64, seed: u64 },
}

impl ExampleConfig {
    pub fn set_seed(&mut self, value: u64) {
        match self {
            Self::Schottky { seed, .. } | Self::Deformation { seed, .. } | Self::SchottkyDeformation { seed, .. } => {
                *seed = value
            }
        }
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("invalid config {}: {e}", path.display())))
}

pub fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let v: f64 = value.trim().parse().map_err(|e| format!("bad value in `{s}`: {e}"))?;
    Ok((name.trim().to_string(), v))
}

pub fn apply_overrides(
    cfg: &mut SceneConfig,
    depth: Option<usize>,
    seed: Option<u64>,
    tols: &[(String, f64)],
) -> Result<(), CliError> {
    if let Some(d) = depth {
        cfg.depth = d;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    for (name, value) in tols {
        cfg.tolerances.set(name, *value)?;
    }
    Ok(())
}

fn matrix(rows: &[Vec<f64>], dim: usize, what: &str) -> Result<Matrix, CliError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(CliError::Input(format!("{what} must be a {dim}x{dim} matrix")));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(CliError::Input(format!("{what} has non-finite entries")));
    }
    Ok(Matrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

fn input<E: std::fmt::Display>(what: String) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Input(format!("{what}: {e}"))
}

/// The validated pieces of a scene.
pub struct Scene {
    pub config: SceneConfig,
    pub base: LinearRep,
    pub affine: Option<AffineRep>,
    pub family: Option<DeformationFamily>,
}

impl Scene {
    pub fn new(config: SceneConfig) -> Result<Self, CliError> {
        let n = config.n;
        if !(2..=8).contains(&n) {
            return Err(CliError::Input("n must be between 2 and 8".into()));
        }
        if config.generators.is_empty() {
            return Err(CliError::Input("at least one generator is required".into()));
        }
        if config.depth == 0 {
            return Err(CliError::Input("depth must be at least 1".into()));
        }
        let space = match config.model {
            Model::Linear => QSpace::linear(n),
            Model::Affine | Model::Family => QSpace::affine(n),
        };
        let dim = space.dim();
        let mut gens: Vec<Isometry> = Vec::new();
        for (i, g) in config.generators.iter().enumerate() {
            let what = format!("generator {}", i + 1);
            let iso = match g {
                GeneratorSpec::Matrix(rows) => {
                    validate_isometry(&space, &matrix(rows, dim, &what)?).map_err(input(what))?
                }
                GeneratorSpec::Lie { element, parameter } => {
                    exp_so(&space, &matrix(element, dim, &what)?, *parameter).map_err(input(what))?
                }
            };
            gens.push(iso);
        }
        let base = LinearRep::new(gens).map_err(input("generators".into()))?;
        let mut affine = None;
        let mut family = None;
        match config.model {
            Model::Linear => {
                if config.translations.is_some() || config.directions.is_some() {
                    return Err(CliError::Input("a linear scene takes neither translations nor directions".into()));
                }
            }
            Model::Affine => {
                let us = config
                    .translations
                    .as_ref()
                    .ok_or_else(|| CliError::Input("an affine scene needs translations".into()))?;
                if us.len() != base.rank() || us.iter().any(|u| u.len() != dim || u.iter().any(|x| !x.is_finite())) {
                    return Err(CliError::Input(format!("translations must be {} vectors of length {dim}", base.rank())));
                }
                let gens = base
                    .generators()
                    .iter()
                    .zip(us)
                    .map(|(g, u)| AffineIsometry::new(g.clone(), Vector::from_row_slice(u)))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(input("translations".into()))?;
                affine = Some(AffineRep::new(gens).map_err(input("translations".into()))?);
            }
            Model::Family => {
                let ys = config
                    .directions
                    .as_ref()
                    .ok_or_else(|| CliError::Input("a family scene needs directions".into()))?;
                let ys = ys
                    .iter()
                    .enumerate()
                    .map(|(i, y)| matrix(y, 2 * n, &format!("direction {}", i + 1)))
                    .collect::<Result<Vec<_>, _>>()?;
                let fam = DeformationFamily::new(base.clone(), ys).map_err(input("directions".into()))?;
                affine = Some(fam.affine_from_family());
                family = Some(fam);
            }
        }
        Ok(Self { config, base, affine, family })
    }

    /// The representation into `SO(n,n)` used by the linear checks, if any.
    pub fn linear(&self) -> Option<LinearRep> {
        match self.config.model {
            Model::Linear => Some(self.base.clone()),
            Model::Family => self.family.as_ref().map(|f| f.family_at(self.config.t)),
            Model::Affine => None,
        }
    }
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn scene_from_affine(rep: &AffineRep) -> SceneConfig {
    SceneConfig {
        n: rep.space().model_n(),
        model: Model::Affine,
        generators: rep.generators().iter().map(|g| GeneratorSpec::Matrix(rows(g.linear().matrix()))).collect(),
        translations: Some(rep.generators().iter().map(|g| g.translation().iter().copied().collect()).collect()),
        directions: None,
        ..blank(Model::Affine)
    }
}

pub fn scene_from_family(fam: &DeformationFamily) -> SceneConfig {
    SceneConfig {
        n: fam.n(),
        generators: fam.base().generators().iter().map(|g| GeneratorSpec::Matrix(rows(g.matrix()))).collect(),
        directions: Some(fam.directions().iter().map(rows).collect()),
        ..blank(Model::Family)
    }
}

fn blank(model: Model) -> SceneConfig {
    SceneConfig {
        n: 2,
        model,
        generators: Vec::new(),
        translations: None,
        directions: None,
        depth: default_depth(),
        seed: 0,
        tolerances: Tolerances::default(),
        t: default_t(),
        samples: default_samples(),
        words: Vec::new(),
        steps: default_steps(),
        gamma: default_gamma(),
        eta: default_eta(),
        k: default_k(),
        max_power: default_max_power(),
    }
}

/// Tolerances as a sorted map for reports.
pub fn tolerance_map(t: &Tolerances) -> BTreeMap<&'static str, f64> {
    BTreeMap::from([
        ("deriv", t.deriv),
        ("gap", t.gap),
        ("identities", t.identities),
        ("limit", t.limit),
        ("order", t.order),
        ("sign", t.sign),
        ("transversality", t.transversality),
    ])
}
