//! The six commands. Each returns the files to write and whether every bound held.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use margulis_core::asymptotics::{
    alpha_limit_diag, alpha_limit_fixed_k, deriv_check, theta_limit_diag, theta_limit_fixed_k, Verdict,
};
use margulis_core::diagnostics::{
    build_deformation_example, build_schottky_so12_affine, deformation_over, eigen_gap_spectrum,
    enumerate_reduced_words, margulis_spectrum,
};
use margulis_core::dynamics::plane_pair;
use margulis_core::invariants::{
    alphabeta_check, cr_identity_suite, ecr_identity_suite, labeled_neutral_lines, lambdabeta_check, neutral_vector,
    AffineNullPlane, NullPlane,
};
use margulis_core::qspace::{random_isometry, random_isometry_with, transversality};
use margulis_core::{
    AffineRep, LinearRep, ModelData, QSpace, SpectrumReport, SpectrumVerdict, Subspace, Vector, Word,
};

use crate::config::{scene_from_affine, scene_from_family, tolerance_map, ExampleConfig, Model, Scene, SceneConfig};
use crate::report::{spectrum_csv, to_json};
use crate::CliError;

pub struct Outcome {
    pub files: Vec<(String, Vec<u8>)>,
    pub pass: bool,
}

#[derive(Serialize)]
struct Header {
    command: &'static str,
    n: usize,
    model: Model,
    seed: u64,
    depth: usize,
    t: f64,
    tolerances: BTreeMap<&'static str, f64>,
}

fn header(command: &'static str, cfg: &SceneConfig) -> Header {
    Header {
        command,
        n: cfg.n,
        model: cfg.model,
        seed: cfg.seed,
        depth: cfg.depth,
        t: cfg.t,
        tolerances: tolerance_map(&cfg.tolerances),
    }
}

#[derive(Serialize)]
struct Report<B: Serialize> {
    #[serde(flatten)]
    header: Header,
    #[serde(flatten)]
    body: B,
    pass: bool,
}

fn report<B: Serialize>(command: &'static str, cfg: &SceneConfig, body: B, pass: bool) -> Result<Vec<u8>, CliError> {
    to_json(&Report { header: header(command, cfg), body, pass })
}

fn parse_word(s: &str, rank: usize) -> Result<Word, CliError> {
    let w = Word::parse(s).map_err(|e| CliError::Input(format!("word `{s}`: {e}")))?;
    if w.is_empty() || w.max_generator() > rank {
        return Err(CliError::Input(format!("word `{s}` is empty or uses a missing generator")));
    }
    Ok(w)
}

fn cyclic_words(rank: usize, depth: usize) -> Vec<Word> {
    enumerate_reduced_words(rank, depth).into_iter().filter(|w| w.is_cyclically_reduced()).collect()
}

fn item_seed(seed: u64, section: u64, i: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(section << 32).wrapping_add(i as u64)
}

// Identity checks

#[derive(Serialize)]
struct Item {
    label: String,
    residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl Item {
    fn from<T: Serialize>(label: String, r: margulis_core::Result<(f64, Option<T>)>) -> Self {
        match r {
            Ok((residual, detail)) => Self {
                label,
                residual: Some(residual),
                detail: detail.and_then(|d| serde_json::to_value(d).ok()),
                error: None,
            },
            Err(e) => Self { label, residual: None, detail: None, error: Some(e.to_string()) },
        }
    }
}

#[derive(Serialize)]
struct Section {
    name: &'static str,
    tol: f64,
    max_residual: Option<f64>,
    failures: usize,
    pass: bool,
    items: Vec<Item>,
}

impl Section {
    fn new(name: &'static str, tol: f64, items: Vec<Item>) -> Self {
        let failures = items.iter().filter(|i| !i.residual.is_some_and(f64::is_finite)).count();
        let max_residual = items.iter().filter_map(|i| i.residual).filter(|r| r.is_finite()).reduce(f64::max);
        let pass = !items.is_empty() && failures == 0 && max_residual.is_some_and(|m| m <= tol);
        Self { name, tol, max_residual, failures, pass, items }
    }
}

fn unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_fn(dim, |_, _| rng.random_range(-1.0..=1.0)).normalize()
}

fn affine_null_plane(m: &ModelData, rng: &mut ChaCha8Rng) -> margulis_core::Result<AffineNullPlane> {
    let a = m.affine_space();
    let g = random_isometry_with(&a, rng, 0.3)?;
    let dir = NullPlane::from_perp(&a, m.w_plus_affine_plane().transform(g.matrix())?)?;
    AffineNullPlane::new(unit_vector(a.dim(), rng), dir)
}

fn isotropic_plane(m: &ModelData, rng: &mut ChaCha8Rng) -> margulis_core::Result<Subspace> {
    let g = random_isometry_with(&m.linear_space(), rng, 0.3)?;
    m.w_plus_plane().transform(g.matrix())
}

fn well_posed(space: &QSpace, planes: &[&Subspace], min: f64) -> bool {
    (0..planes.len()).all(|i| (i + 1..planes.len()).all(|j| transversality(space, planes[i], planes[j]) >= min))
}

const MAX_DRAWS: usize = 1000;

/// Draws until `accept` holds.
fn draw_until<T>(
    rng: &mut ChaCha8Rng,
    mut draw: impl FnMut(&mut ChaCha8Rng) -> margulis_core::Result<T>,
    accept: impl Fn(&T) -> bool,
) -> margulis_core::Result<T> {
    for _ in 0..MAX_DRAWS {
        let t = draw(rng)?;
        if accept(&t) {
            return Ok(t);
        }
    }
    Err(margulis_core::Error::Precondition("no well-posed sample found".into()))
}

fn par_items<F>(count: usize, f: F) -> Vec<Item>
where
    F: Fn(usize) -> Item + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

fn form_section(scene: &Scene, words: &[Word]) -> Section {
    let cfg = &scene.config;
    let mut items = Vec::new();
    let mut push = |prefix: &str, residual: &(dyn Fn(&Word) -> f64 + Sync)| {
        items.extend(words.iter().map(|w| Item {
            label: format!("{prefix}{w}"),
            residual: Some(residual(w)),
            detail: None,
            error: None,
        }));
    };
    push("base:", &|w| scene.base.evaluate(w).form_residual());
    if let Some(lin) = scene.linear().filter(|_| cfg.model == Model::Family) {
        push("family:", &|w| lin.evaluate(w).form_residual());
    }
    Section::new("form", cfg.tolerances.identities, items)
}

fn labeling_section(cfg: &SceneConfig) -> Section {
    let m = ModelData::new(cfg.n);
    let items = par_items(cfg.samples, |i| {
        let r = (|| {
            let l = m.linear_space();
            let a = m.affine_space();
            let g = random_isometry(&l, item_seed(cfg.seed, 1, i), 0.3)?;
            let lab = labeled_neutral_lines(
                &l,
                &m.w_plus_plane().transform(g.matrix())?,
                &m.w_minus_plane().transform(g.matrix())?,
            )?;
            let gv = g.apply(&m.v_plus);
            let line = 1.0 - (lab.v_plus.dot(&gv) / gv.norm()).abs();
            let h = random_isometry(&a, item_seed(cfg.seed, 2, i), 0.3)?;
            let vp = NullPlane::from_perp(&a, m.w_plus_affine_plane().transform(h.matrix())?)?;
            let vm = NullPlane::from_perp(&a, m.w_minus_affine_plane().transform(h.matrix())?)?;
            let hv = h.apply(&m.v);
            let nu = (neutral_vector(&a, &vp, &vm)? - &hv).norm() / hv.norm();
            Ok((line.max(nu), Some(BTreeMap::from([("linear_line", line), ("affine_neutral", nu)]))))
        })();
        Item::from(format!("sample {i}"), r)
    });
    Section::new("labeling", cfg.tolerances.identities, items)
}

fn cross_ratio_section(cfg: &SceneConfig) -> Section {
    let m = ModelData::new(cfg.n);
    let space = m.affine_space();
    let min = cfg.tolerances.transversality;
    let items = par_items(cfg.samples, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(item_seed(cfg.seed, 3, i));
        let r = (|| {
            let planes = draw_until(
                &mut rng,
                |rng| (0..5).map(|_| affine_null_plane(&m, rng)).collect::<margulis_core::Result<Vec<_>>>(),
                |p| well_posed(&space, &p.iter().map(|a| a.direction().perp()).collect::<Vec<_>>(), min),
            )?;
            let planes: [AffineNullPlane; 5] = planes.try_into().expect("five planes");
            let r = cr_identity_suite(&space, &planes, item_seed(cfg.seed, 4, i))?;
            Ok((r.max, Some(r)))
        })();
        Item::from(format!("sample {i}"), r)
    });
    Section::new("affine_cross_ratio", cfg.tolerances.identities, items)
}

fn linear_cross_ratio_section(cfg: &SceneConfig) -> Section {
    let m = ModelData::new(cfg.n);
    let space = m.linear_space();
    let min = cfg.tolerances.transversality;
    let items = par_items(cfg.samples, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(item_seed(cfg.seed, 5, i));
        let r = (|| {
            let planes = draw_until(
                &mut rng,
                |rng| (0..5).map(|_| isotropic_plane(&m, rng)).collect::<margulis_core::Result<Vec<_>>>(),
                |p| well_posed(&space, &p.iter().collect::<Vec<_>>(), min),
            )?;
            let planes: [Subspace; 5] = planes.try_into().expect("five planes");
            let r = ecr_identity_suite(&space, &planes, item_seed(cfg.seed, 6, i))?;
            Ok((r.max, Some(r)))
        })();
        Item::from(format!("sample {i}"), r)
    });
    Section::new("linear_cross_ratio", cfg.tolerances.identities, items)
}

fn alpha_beta_section(cfg: &SceneConfig, rep: &AffineRep, words: &[Word]) -> Section {
    let m = ModelData::new(cfg.n);
    let space = rep.space().clone();
    let min = cfg.tolerances.transversality;
    let items = par_items(words.len(), |i| {
        let w = &words[i];
        let mut rng = ChaCha8Rng::seed_from_u64(item_seed(cfg.seed, 7, i));
        let r = (|| {
            let g = rep.evaluate(w);
            let pp = plane_pair(g.linear(), 1e-6)?;
            let a = draw_until(
                &mut rng,
                |rng| affine_null_plane(&m, rng),
                |a| {
                    a.apply(&g).is_ok_and(|ga| {
                        well_posed(&space, &[&pp.a_att, &pp.a_rep, a.direction().perp()], min)
                            && well_posed(&space, &[&pp.a_rep, a.direction().perp(), ga.direction().perp()], min)
                    })
                },
            )?;
            let r = alphabeta_check(&g, &a)?;
            Ok((r.residual, Some(r)))
        })();
        Item::from(w.to_string(), r)
    });
    Section::new("alpha_beta", cfg.tolerances.identities, items)
}

fn lambda_theta_section(cfg: &SceneConfig, rep: &LinearRep, words: &[Word]) -> Section {
    let m = ModelData::new(cfg.n);
    let space = rep.space().clone();
    let min = cfg.tolerances.transversality;
    let items = par_items(words.len(), |i| {
        let w = &words[i];
        let mut rng = ChaCha8Rng::seed_from_u64(item_seed(cfg.seed, 8, i));
        let r = (|| {
            let g = rep.evaluate(w);
            let pp = plane_pair(&g, 1e-6)?;
            let a = draw_until(
                &mut rng,
                |rng| isotropic_plane(&m, rng),
                |a| {
                    a.transform(g.matrix())
                        .is_ok_and(|ga| well_posed(&space, &[&pp.a_att, &pp.a_rep, a], min) && well_posed(&space, &[&pp.a_rep, a, &ga], min))
                },
            )?;
            let r = lambdabeta_check(&g, &a)?;
            Ok((r.residual, Some(r)))
        })();
        Item::from(w.to_string(), r)
    });
    Section::new("lambda_theta", cfg.tolerances.identities, items)
}

fn cocycle_section(scene: &Scene, words: &[Word]) -> Section {
    let fam = scene.family.as_ref().expect("family scene");
    let rho0 = fam.rho0();
    let big = fam.linear_space();
    let mut v0 = Vector::zeros(big.dim());
    v0[0] = 1.0;
    let mut items = Vec::new();
    for g in words {
        for h in words {
            let Ok(gh) = g.concat(h) else { continue };
            if gh.len() != g.len() + h.len() {
                continue;
            }
            let lhs = fam.cocycle_u(&gh);
            let rhs = fam.cocycle_u(g) + rho0.evaluate(g).apply(&fam.cocycle_u(h));
            let cocycle = (&lhs - rhs).amax();
            let orth = big.pair(&lhs, &v0).abs();
            let r = Ok::<_, margulis_core::Error>((
                cocycle.max(orth),
                Some(BTreeMap::from([("cocycle", cocycle), ("orthogonality", orth)])),
            ));
            items.push(Item::from(format!("{g}*{h}"), r));
        }
    }
    Section::new("cocycle", scene.config.tolerances.identities, items)
}

/// Word depth for the per-word identity checks.
const IDENTITY_DEPTH: usize = 2;

pub fn check_identities(scene: &Scene) -> Result<Outcome, CliError> {
    let cfg = &scene.config;
    let rank = scene.base.rank();
    let words = enumerate_reduced_words(rank, cfg.depth.min(IDENTITY_DEPTH));
    let cyclic = cyclic_words(rank, cfg.depth.min(IDENTITY_DEPTH));
    let mut sections = vec![form_section(scene, &words), labeling_section(cfg)];
    if let Some(affine) = &scene.affine {
        sections.push(cross_ratio_section(cfg));
        sections.push(alpha_beta_section(cfg, affine, &cyclic));
    }
    if let Some(linear) = scene.linear() {
        sections.push(linear_cross_ratio_section(cfg));
        sections.push(lambda_theta_section(cfg, &linear, &cyclic));
    }
    if scene.family.is_some() {
        let short = enumerate_reduced_words(rank, cfg.depth.min(2));
        sections.push(cocycle_section(scene, &short));
    }
    let pass = sections.iter().all(|s| s.pass);
    let max_residual = sections.iter().filter_map(|s| s.max_residual).reduce(f64::max);

    #[derive(Serialize)]
    struct Body {
        max_residual: Option<f64>,
        sections: Vec<Section>,
    }
    let json = report("check-identities", cfg, Body { max_residual, sections }, pass)?;
    Ok(Outcome { files: vec![("report.json".into(), json)], pass })
}

// Spectra

#[derive(Serialize)]
struct Spectrum {
    #[serde(flatten)]
    report: SpectrumReport,
    min_gap: f64,
    pass: bool,
}

fn spectrum(report: SpectrumReport, min_gap: f64) -> Spectrum {
    let pass = report.verdict == SpectrumVerdict::NecessaryConditionsHoldUpToL
        && report.min_abs_normalized.is_some_and(|m| m >= min_gap);
    Spectrum { report, min_gap, pass }
}

fn affine_of(scene: &Scene, command: &str) -> Result<AffineRep, CliError> {
    scene
        .affine
        .clone()
        .ok_or_else(|| CliError::Input(format!("{command} needs an affine or family scene")))
}

pub fn margulis(scene: &Scene) -> Result<Outcome, CliError> {
    let cfg = &scene.config;
    let rep = affine_of(scene, "margulis")?;
    let tol = cfg.tolerances.sign;
    let s = spectrum(margulis_spectrum(&rep, cfg.depth, tol), cfg.tolerances.gap);
    let csv = spectrum_csv(&s.report.records)?;
    let pass = s.pass;

    #[derive(Serialize)]
    struct Body {
        spectrum: Spectrum,
    }
    let json = report("margulis", cfg, Body { spectrum: s }, pass)?;
    Ok(Outcome { files: vec![("report.json".into(), json), ("spectrum.csv".into(), csv)], pass })
}

pub fn spectrum_command(scene: &Scene) -> Result<Outcome, CliError> {
    let cfg = &scene.config;
    let tol = cfg.tolerances.sign;
    let mut spectra = Vec::new();
    let mut files = Vec::new();
    if let Some(lin) = scene.linear() {
        let s = spectrum(eigen_gap_spectrum(&lin, cfg.depth, tol), cfg.tolerances.gap);
        files.push(("spectrum_eigen_gap.csv".to_string(), spectrum_csv(&s.report.records)?));
        spectra.push(s);
    }
    if let Some(aff) = &scene.affine {
        let s = spectrum(margulis_spectrum(aff, cfg.depth, tol), cfg.tolerances.gap);
        files.push(("spectrum_margulis.csv".to_string(), spectrum_csv(&s.report.records)?));
        spectra.push(s);
    }
    let pass = spectra.iter().all(|s| s.pass);

    #[derive(Serialize)]
    struct Body {
        spectra: Vec<Spectrum>,
    }
    files.insert(0, ("report.json".into(), report("spectrum", cfg, Body { spectra }, pass)?));
    Ok(Outcome { files, pass })
}

// Asymptotics

pub fn derivative(scene: &Scene) -> Result<Outcome, CliError> {
    let cfg = &scene.config;
    let fam = scene
        .family
        .as_ref()
        .ok_or_else(|| CliError::Input("derivative needs a family scene".into()))?;
    if cfg.steps.is_empty() || cfg.steps.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(CliError::Input("steps must be positive".into()));
    }
    let rank = scene.base.rank();
    let words = if cfg.words.is_empty() {
        cyclic_words(rank, cfg.depth)
    } else {
        cfg.words.iter().map(|s| parse_word(s, rank)).collect::<Result<_, _>>()?
    };
    let tol = &cfg.tolerances;

    #[derive(Serialize)]
    struct Entry {
        word: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        result: Option<margulis_core::DerivReport>,
        #[serde(skip_serializing_if = "Option::is_none")]
        error: Option<String>,
        pass: bool,
    }
    let entries: Vec<Entry> = words
        .par_iter()
        .map(|w| match deriv_check(fam, w, &cfg.steps) {
            Ok(r) => {
                let pass = r.error <= tol.deriv && (r.observed_order - 2.0).abs() <= tol.order;
                Entry { word: w.to_string(), result: Some(r), error: None, pass }
            }
            Err(e) => Entry { word: w.to_string(), result: None, error: Some(e.to_string()), pass: false },
        })
        .collect();
    let pass = !entries.is_empty() && entries.iter().all(|e| e.pass);
    let max_error = entries.iter().filter_map(|e| e.result.as_ref().map(|r| r.error)).reduce(f64::max);

    #[derive(Serialize)]
    struct Body {
        steps: Vec<f64>,
        expected_order: f64,
        max_error: Option<f64>,
        words: Vec<Entry>,
    }
    let body = Body { steps: cfg.steps.clone(), expected_order: 2.0, max_error, words: entries };
    Ok(Outcome { files: vec![("report.json".into(), report("derivative", cfg, body, pass)?)], pass })
}

pub fn limits(scene: &Scene) -> Result<Outcome, CliError> {
    let cfg = &scene.config;
    let rank = scene.base.rank();
    let gamma = parse_word(&cfg.gamma, rank)?;
    let eta = parse_word(&cfg.eta, rank)?;
    if cfg.max_power < 2 || cfg.k.contains(&0) {
        return Err(CliError::Input("max_power must be at least 2 and every k positive".into()));
    }
    let bound = cfg.tolerances.limit;

    #[derive(Serialize)]
    struct Entry {
        name: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        result: Option<margulis_core::ConvergenceReport>,
        #[serde(skip_serializing_if = "Option::is_none")]
        error: Option<String>,
        pass: bool,
    }
    let entry = |name: String, r: margulis_core::Result<margulis_core::ConvergenceReport>| match r {
        Ok(r) => {
            let pass = r.verdict == Verdict::Converging && r.truncated_at.is_none();
            Entry { name, result: Some(r), error: None, pass }
        }
        Err(e) => Entry { name, result: None, error: Some(e.to_string()), pass: false },
    };
    let mut entries = Vec::new();
    if let Some(aff) = &scene.affine {
        for &k in &cfg.k {
            entries.push(entry(format!("alpha k={k}"), alpha_limit_fixed_k(aff, &gamma, &eta, k, cfg.max_power, bound)));
        }
        entries.push(entry("alpha diagonal".into(), alpha_limit_diag(aff, &gamma, &eta, cfg.max_power, bound)));
    }
    if let Some(lin) = scene.linear() {
        for &k in &cfg.k {
            entries.push(entry(format!("theta k={k}"), theta_limit_fixed_k(&lin, &gamma, &eta, k, cfg.max_power, bound)));
        }
        entries.push(entry("theta diagonal".into(), theta_limit_diag(&lin, &gamma, &eta, cfg.max_power, bound)));
    }
    let pass = entries.iter().all(|e| e.pass);

    #[derive(Serialize)]
    struct Body {
        gamma: String,
        eta: String,
        max_power: usize,
        limits: Vec<Entry>,
    }
    let body = Body { gamma: gamma.to_string(), eta: eta.to_string(), max_power: cfg.max_power, limits: entries };
    Ok(Outcome { files: vec![("report.json".into(), report("limits", cfg, body, pass)?)], pass })
}

// Examples

pub fn generate_example(example: &ExampleConfig) -> Result<Outcome, CliError> {
    let invalid = |e: margulis_core::Error| CliError::Input(format!("example: {e}"));
    let positive = |x: f64, what: &str| {
        if x.is_finite() && x > 0.0 {
            Ok(())
        } else {
            Err(CliError::Input(format!("{what} must be positive")))
        }
    };
    let scene = match *example {
        ExampleConfig::Schottky { s, c, seed } => {
            positive(s, "s")?;
            if !c.is_finite() {
                return Err(CliError::Input("c must be finite".into()));
            }
            scene_from_affine(&build_schottky_so12_affine(s, c, seed))
        }
        ExampleConfig::Deformation { n, s, seed } => {
            positive(s, "s")?;
            if !(2..=8).contains(&n) {
                return Err(CliError::Input("n must be between 2 and 8".into()));
            }
            scene_from_family(&build_deformation_example(n, s, seed).map_err(invalid)?)
        }
        ExampleConfig::SchottkyDeformation { base_s, s, seed } => {
            positive(base_s, "base_s")?;
            positive(s, "s")?;
            let base = build_schottky_so12_affine(base_s, 0.0, seed).linear_part();
            scene_from_family(&deformation_over(base, s, seed.wrapping_add(1)).map_err(invalid)?)
        }
    };
    let built = Scene::new(scene.clone())?;
    let max_form_residual = built.base.generators().iter().map(|g| g.form_residual()).fold(0.0, f64::max);
    let pass = max_form_residual <= scene.tolerances.identities;

    #[derive(Serialize)]
    struct Body<'a> {
        example: &'a ExampleConfig,
        generators: usize,
        max_form_residual: f64,
    }
    let body = Body { example, generators: built.base.rank(), max_form_residual };
    let json = report("generate-example", &scene, body, pass)?;
    Ok(Outcome { files: vec![("report.json".into(), json), ("scene.json".into(), to_json(&scene)?)], pass })
}
