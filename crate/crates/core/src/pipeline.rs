//! End-to-end experiment driver.
//!
//! A run chains six stages: simulate the far field of the true source on a
//! fine mesh, perturb it, locate a supporting disc with the sampling
//! indicator, sample the posterior over disc expansion coefficients,
//! evaluate the reconstruction error against the true source, and emit
//! artifacts. Every error is tagged with the stage it came from.
//!
//! Far-field data is generated once over the union of the sampling and
//! inversion wavenumber sets and perturbed once, so both stages see the
//! same noise realization; each stage then restricts to its own set.
//!
//! Artifacts are byte-identical across repeated runs and across thread
//! counts. The JSON report is not (it carries the wall time), so it lists
//! the SHA-256 manifest of the others instead of being hashed itself.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dsm::{
    estimate_disc, indicator_field, write_disc_summary, write_indicator_csv, CenterMode,
    IndicatorField, SamplingGrid,
};
use crate::error::{Error, Result};
use crate::expansion::{eval_f_be, BasisIndex, CoefficientVector, DiscBasis, ForwardOperator};
use crate::forward::{generate_dataset, perturb, perturb_random, Aperture, FarFieldData};
use crate::geometry::{Disc, Region};
use crate::mcmc::{
    run_chain, summarize, summary_block, write_chain, LikelihoodSpec, PosteriorSummary,
    PriorSpec, SamplerConfig,
};
use crate::source::{build_mesh, build_mesh_staggered, fmt_f64, SourceSamples, SourceSpec};

/// How the simulated measurement is corrupted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseMode {
    /// Leave the data clean.
    None,
    /// Add the deterministic offset `level * (max Re + i max Im)` per
    /// wavenumber.
    Deterministic(f64),
    /// Scale that offset entrywise by uniform draws from [-1, 1].
    RandomUniform(f64),
}

impl NoiseMode {
    pub fn label(&self) -> &'static str {
        match self {
            NoiseMode::None => "none",
            NoiseMode::Deterministic(_) => "deterministic",
            NoiseMode::RandomUniform(_) => "random-uniform",
        }
    }

    pub fn level(&self) -> f64 {
        match self {
            NoiseMode::None => 0.0,
            NoiseMode::Deterministic(l) | NoiseMode::RandomUniform(l) => *l,
        }
    }
}

/// Everything one run needs. `example` fills in the benchmark defaults;
/// fields are public so callers can override selectively.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: SourceSpec,
    pub aperture: Aperture,
    /// Wavenumbers driving the sampling indicator.
    pub dsm_wavenumbers: Vec<f64>,
    /// Wavenumbers driving the Bayesian inversion.
    pub bayes_wavenumbers: Vec<f64>,
    pub grid: SamplingGrid,
    /// Indicator threshold; `None` picks the per-aperture default.
    pub gamma: Option<f64>,
    pub center_mode: CenterMode,
    /// Skip the sampling stage and expand on this disc instead.
    pub disc_override: Option<Disc>,
    pub noise: NoiseMode,
    pub noise_seed: u64,
    pub m_max: usize,
    pub n_max: usize,
    pub sigma: f64,
    pub prior_variance: f64,
    pub sampler: SamplerConfig,
    /// Mesh spacing target for simulation, operator assembly and error
    /// evaluation.
    pub mesh_h: f64,
    pub histogram_bins: usize,
    /// Artifacts land here when set; `None` keeps the run in memory.
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Benchmark configuration for examples 1 through 5: wavenumbers 1..3
    /// for the indicator and 1..20 for the inversion, 3% deterministic
    /// noise, sigma = 0.04, prior N(0, 0.01 I), M = 5, N = 2, and the
    /// default sampler settings.
    pub fn example(example: usize, aperture: Aperture) -> Result<Self> {
        Ok(ExperimentConfig {
            source: SourceSpec::example(example)?,
            aperture,
            dsm_wavenumbers: vec![1.0, 2.0, 3.0],
            bayes_wavenumbers: (1..=20).map(|k| k as f64).collect(),
            grid: SamplingGrid::benchmark(),
            gamma: None,
            center_mode: CenterMode::Origin,
            disc_override: None,
            noise: NoiseMode::Deterministic(0.03),
            noise_seed: 1,
            m_max: 5,
            n_max: 2,
            sigma: 0.04,
            prior_variance: 0.01,
            sampler: SamplerConfig::default(),
            mesh_h: 0.01,
            histogram_bins: 50,
            output_dir: None,
        })
    }

    /// Default threshold for the three benchmark apertures.
    pub fn default_gamma(aperture_label: &str) -> Option<f64> {
        match aperture_label {
            "G1" => Some(0.41),
            "G2" => Some(0.64),
            "G3" => Some(0.70),
            _ => None,
        }
    }

    fn resolved_gamma(&self) -> Result<f64> {
        self.gamma
            .or_else(|| Self::default_gamma(self.aperture.label()))
            .ok_or_else(|| {
                Error::Config(format!(
                    "no default threshold for aperture `{}`; set gamma explicitly",
                    self.aperture.label()
                ))
            })
    }

    fn validate(&self) -> Result<()> {
        if !(self.mesh_h.is_finite() && self.mesh_h > 0.0) {
            return Err(Error::Config(format!(
                "mesh spacing must be positive, got {}",
                self.mesh_h
            )));
        }
        for k in self.dsm_wavenumbers.iter().chain(&self.bayes_wavenumbers) {
            if !(k.is_finite() && *k > 0.0) {
                return Err(Error::Config(format!("wavenumbers must be positive, got {k}")));
            }
        }
        if self.bayes_wavenumbers.is_empty() {
            return Err(Error::Config("inversion needs at least one wavenumber".into()));
        }
        if self.disc_override.is_none() && self.dsm_wavenumbers.is_empty() {
            return Err(Error::Config("sampling stage needs at least one wavenumber".into()));
        }
        Ok(())
    }
}

/// Machine-readable record of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub source: String,
    pub aperture: String,
    pub num_directions: usize,
    pub dsm_wavenumbers: Vec<f64>,
    pub bayes_wavenumbers: Vec<f64>,
    pub noise_mode: String,
    pub noise_level: f64,
    pub noise_seed: u64,
    pub gamma: Option<f64>,
    pub center_mode: String,
    /// "dsm" when the disc came from the indicator, "override" otherwise.
    pub disc_source: String,
    pub indicator_max: Option<f64>,
    pub disc: Disc,
    pub m_max: usize,
    pub n_max: usize,
    pub sigma: f64,
    pub prior_variance: f64,
    pub beta: f64,
    /// "literal" for N(0, I) proposal innovations, "prior" for prior draws.
    pub proposal: String,
    pub steps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub mesh_h: f64,
    pub acceptance_rate: f64,
    pub conditional_mean: Vec<f64>,
    pub absolute_error: f64,
    pub relative_error: f64,
    pub wall_time_seconds: f64,
    /// SHA-256 of every emitted artifact, keyed by file name. Empty when no
    /// output directory was set.
    pub manifest: BTreeMap<String, String>,
}

fn union_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = a.iter().chain(b).copied().collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
    v
}

fn indices_for(union: &[f64], subset: &[f64]) -> Result<Vec<usize>> {
    subset
        .iter()
        .map(|k| {
            union
                .iter()
                .position(|u| (u - k).abs() <= 1e-12)
                .ok_or_else(|| Error::Internal(format!("wavenumber {k} missing from union")))
        })
        .collect()
}

/// Simulates the far field over the union of both wavenumber sets and
/// applies the configured perturbation.
pub fn simulate_measured(config: &ExperimentConfig) -> Result<FarFieldData> {
    config.validate()?;
    let clean = (|| -> Result<FarFieldData> {
        let support = config.source.support();
        let mesh = build_mesh(&support, config.mesh_h)?;
        let samples = SourceSamples::from_spec(&config.source, mesh)?;
        let union = union_sorted(&config.dsm_wavenumbers, &config.bayes_wavenumbers);
        generate_dataset(&samples, &config.aperture, &union)
    })()
    .map_err(|e| e.in_stage("simulate"))?;
    let measured = match config.noise {
        NoiseMode::None => Ok(clean),
        NoiseMode::Deterministic(level) => perturb(&clean, level),
        NoiseMode::RandomUniform(level) => perturb_random(&clean, level, config.noise_seed),
    };
    measured.map_err(|e| e.in_stage("perturb"))
}

/// Runs the sampling stage against measured data: indicator field over the
/// grid, then the superlevel-set disc at the resolved threshold.
pub fn dsm_estimate(
    config: &ExperimentConfig,
    measured: &FarFieldData,
) -> Result<(IndicatorField, Disc)> {
    (|| -> Result<(IndicatorField, Disc)> {
        let union = union_sorted(&config.dsm_wavenumbers, &config.bayes_wavenumbers);
        let idx = indices_for(&union, &config.dsm_wavenumbers)?;
        let data = measured.restrict_wavenumbers(&idx)?;
        let field = indicator_field(config.grid, &data)?;
        let disc = estimate_disc(&field, config.resolved_gamma()?, config.center_mode)?;
        Ok((field, disc))
    })()
    .map_err(|e| e.in_stage("dsm"))
}

/// L2 errors of a reconstruction and the sampled fields behind them.
pub struct Evaluation {
    pub absolute_error: f64,
    pub relative_error: f64,
    /// (centroid, f_true, f_be) per evaluation triangle, for the
    /// reconstruction artifact.
    pub rows: Vec<([f64; 2], f64, f64)>,
}

/// L2 errors of the expansion against the true source by midpoint
/// quadrature over a disc covering both supports.
pub fn evaluate_expansion(
    source: &SourceSpec,
    mesh_h: f64,
    basis: &DiscBasis,
    cm: &CoefficientVector,
) -> Result<Evaluation> {
    let support = source.support();
    let r_eval = support.outer_radius().max(basis.disc().outer_radius());
    let region = Region::disc([0.0, 0.0], r_eval)?;
    let mesh = build_mesh(&region, mesh_h)?;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut rows = Vec::with_capacity(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let c = mesh.centroid(t);
        let w = mesh.area(t);
        let f = source.evaluate(c)?;
        let g = eval_f_be(basis, cm, c)?;
        num += (f - g) * (f - g) * w;
        den += f * f * w;
        rows.push((c, f, g));
    }
    if den <= 0.0 {
        return Err(Error::Domain(
            "true source vanishes on the evaluation mesh, relative error undefined".into(),
        ));
    }
    Ok(Evaluation {
        absolute_error: num.sqrt(),
        relative_error: (num / den).sqrt(),
        rows,
    })
}

fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn write_text(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn summary_text(
    config: &ExperimentConfig,
    report_gamma: Option<f64>,
    disc_source: &str,
    disc: Disc,
    indicator_max: Option<f64>,
    evaluation: &Evaluation,
    posterior: &PosteriorSummary,
) -> String {
    let ks = |v: &[f64]| v.iter().map(|k| fmt_f64(*k)).collect::<Vec<_>>().join(" ");
    let mut s = String::new();
    s.push_str(&format!("source = {}\n", config.source.label()));
    s.push_str(&format!("aperture = {}\n", config.aperture.label()));
    s.push_str(&format!("num_directions = {}\n", config.aperture.len()));
    s.push_str(&format!("dsm_wavenumbers = {}\n", ks(&config.dsm_wavenumbers)));
    s.push_str(&format!("bayes_wavenumbers = {}\n", ks(&config.bayes_wavenumbers)));
    s.push_str(&format!("noise_mode = {}\n", config.noise.label()));
    s.push_str(&format!("noise_level = {}\n", fmt_f64(config.noise.level())));
    s.push_str(&format!("noise_seed = {}\n", config.noise_seed));
    match report_gamma {
        Some(g) => s.push_str(&format!("gamma = {}\n", fmt_f64(g))),
        None => s.push_str("gamma = none\n"),
    }
    s.push_str(&format!(
        "center_mode = {}\n",
        match config.center_mode {
            CenterMode::Origin => "origin",
            CenterMode::Centroid => "centroid",
        }
    ));
    s.push_str(&format!("disc_source = {disc_source}\n"));
    s.push_str(&format!(
        "disc_center = {} {}\n",
        fmt_f64(disc.center[0]),
        fmt_f64(disc.center[1])
    ));
    s.push_str(&format!("disc_radius = {}\n", fmt_f64(disc.radius)));
    match indicator_max {
        Some(v) => s.push_str(&format!("indicator_max = {}\n", fmt_f64(v))),
        None => s.push_str("indicator_max = none\n"),
    }
    s.push_str(&format!("m_max = {}\n", config.m_max));
    s.push_str(&format!("n_max = {}\n", config.n_max));
    s.push_str(&format!("sigma = {}\n", fmt_f64(config.sigma)));
    s.push_str(&format!("prior_variance = {}\n", fmt_f64(config.prior_variance)));
    s.push_str(&format!("beta = {}\n", fmt_f64(config.sampler.beta)));
    s.push_str(&format!("steps = {}\n", config.sampler.steps));
    s.push_str(&format!("burn_in = {}\n", config.sampler.burn_in));
    s.push_str(&format!("thin = {}\n", config.sampler.thin));
    s.push_str(&format!("seed = {}\n", config.sampler.seed));
    s.push_str(&format!("mesh_h = {}\n", fmt_f64(config.mesh_h)));
    s.push_str(&format!("absolute_error = {}\n", fmt_f64(evaluation.absolute_error)));
    s.push_str(&format!("relative_error = {}\n", fmt_f64(evaluation.relative_error)));
    s.push_str(&format!(
        "relative_error_percent = {}\n",
        fmt_f64(100.0 * evaluation.relative_error)
    ));
    s.push_str(&summary_block(posterior));
    s
}

/// Renders the four-column reconstruction artifact.
pub fn reconstruction_csv(evaluation: &Evaluation) -> String {
    let mut s = String::from("x, y, f_true, f_be\n");
    for (c, f, g) in &evaluation.rows {
        s.push_str(&format!(
            "{}, {}, {}, {}\n",
            fmt_f64(c[0]),
            fmt_f64(c[1]),
            fmt_f64(*f),
            fmt_f64(*g)
        ));
    }
    s
}

/// Runs the full chain. On failure a best-effort `report.json` naming the
/// failed stage is still written when an output directory is set.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<RunReport> {
    match run_pipeline_inner(config) {
        Ok(report) => Ok(report),
        Err(e) => {
            if let Some(dir) = &config.output_dir {
                let body = serde_json::json!({ "failure": e.to_string() });
                let _ = std::fs::create_dir_all(dir);
                let _ = std::fs::write(
                    dir.join("report.json"),
                    format!("{:#}\n", body),
                );
            }
            Err(e)
        }
    }
}

fn run_pipeline_inner(config: &ExperimentConfig) -> Result<RunReport> {
    let start = Instant::now();
    let measured = simulate_measured(config)?;

    let (field, disc, report_gamma) = match config.disc_override {
        Some(disc) => (None, disc, None),
        None => {
            let (field, disc) = dsm_estimate(config, &measured)?;
            (Some(field), disc, Some(config.resolved_gamma()?))
        }
    };

    let (basis, chain, posterior) = (|| {
        let index = BasisIndex::new(config.m_max, config.n_max)?;
        let basis = DiscBasis::new(index, disc)?;
        let op_mesh = build_mesh_staggered(&Region::Disc(disc), config.mesh_h, 0.5)?;
        let operator = ForwardOperator::assemble(
            &basis,
            &config.aperture,
            &config.bayes_wavenumbers,
            &op_mesh,
        )?;
        let union = union_sorted(&config.dsm_wavenumbers, &config.bayes_wavenumbers);
        let idx = indices_for(&union, &config.bayes_wavenumbers)?;
        let data = measured.restrict_wavenumbers(&idx)?;
        let likelihood = LikelihoodSpec::new(operator, &data, config.sigma)?;
        let prior = PriorSpec::new(config.prior_variance)?;
        let chain = run_chain(&likelihood, &prior, &config.sampler)?;
        let posterior = summarize(&chain, config.histogram_bins)?;
        Ok((basis, chain, posterior))
    })()
    .map_err(|e: Error| e.in_stage("bayes"))?;

    let evaluation =
        evaluate_expansion(&config.source, config.mesh_h, &basis, &posterior.conditional_mean)
            .map_err(|e| e.in_stage("evaluate"))?;

    let disc_source = if config.disc_override.is_some() { "override" } else { "dsm" };
    let indicator_max = field.as_ref().map(|f| f.max_value());

    let mut manifest = BTreeMap::new();
    if let Some(dir) = &config.output_dir {
        (|| -> Result<()> {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let farfield = dir.join("farfield.txt");
            crate::forward::write_farfield(&measured, &farfield)?;
            manifest.insert("farfield.txt".into(), hash_file(&farfield)?);
            if let (Some(field), Some(gamma)) = (&field, report_gamma) {
                let indicator = dir.join("indicator.csv");
                write_indicator_csv(field, &indicator)?;
                manifest.insert("indicator.csv".into(), hash_file(&indicator)?);
                let disc_path = dir.join("disc.csv");
                write_disc_summary(&disc, gamma, &disc_path)?;
                manifest.insert("disc.csv".into(), hash_file(&disc_path)?);
            }
            let chain_path = dir.join("chain.txt");
            write_chain(&chain, &chain_path)?;
            manifest.insert("chain.txt".into(), hash_file(&chain_path)?);
            let summary_path = dir.join("summary.txt");
            write_text(
                &summary_path,
                &summary_text(
                    config,
                    report_gamma,
                    disc_source,
                    disc,
                    indicator_max,
                    &evaluation,
                    &posterior,
                ),
            )?;
            manifest.insert("summary.txt".into(), hash_file(&summary_path)?);
            let recon_path = dir.join("reconstruction.csv");
            write_text(&recon_path, &reconstruction_csv(&evaluation))?;
            manifest.insert("reconstruction.csv".into(), hash_file(&recon_path)?);
            Ok(())
        })()
        .map_err(|e| e.in_stage("emit"))?;
    }

    let report = RunReport {
        source: config.source.label().to_string(),
        aperture: config.aperture.label().to_string(),
        num_directions: config.aperture.len(),
        dsm_wavenumbers: config.dsm_wavenumbers.clone(),
        bayes_wavenumbers: config.bayes_wavenumbers.clone(),
        noise_mode: config.noise.label().to_string(),
        noise_level: config.noise.level(),
        noise_seed: config.noise_seed,
        gamma: report_gamma,
        center_mode: match config.center_mode {
            CenterMode::Origin => "origin".into(),
            CenterMode::Centroid => "centroid".into(),
        },
        disc_source: disc_source.to_string(),
        indicator_max,
        disc,
        m_max: config.m_max,
        n_max: config.n_max,
        sigma: config.sigma,
        prior_variance: config.prior_variance,
        beta: config.sampler.beta,
        proposal: if config.sampler.literal_proposal { "literal" } else { "prior" }.to_string(),
        steps: config.sampler.steps,
        burn_in: config.sampler.burn_in,
        thin: config.sampler.thin,
        seed: config.sampler.seed,
        mesh_h: config.mesh_h,
        acceptance_rate: posterior.acceptance_rate,
        conditional_mean: posterior.conditional_mean.values.clone(),
        absolute_error: evaluation.absolute_error,
        relative_error: evaluation.relative_error,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        manifest,
    };

    if let Some(dir) = &config.output_dir {
        let path = dir.join("report.json");
        let body = serde_json::to_string_pretty(&report)
            .map_err(|e| Error::Internal(format!("report serialization failed: {e}")))?;
        write_text(&path, &format!("{body}\n")).map_err(|e| e.in_stage("emit"))?;
    }

    Ok(report)
}

/// Reuses one simulated dataset and indicator field to read off the
/// estimated disc at several thresholds.
pub fn gamma_sweep(
    config: &ExperimentConfig,
    gammas: &[f64],
) -> Result<Vec<(f64, Result<Disc>)>> {
    config.validate()?;
    let measured = simulate_measured(config)?;
    let field = (|| {
        let union = union_sorted(&config.dsm_wavenumbers, &config.bayes_wavenumbers);
        let idx = indices_for(&union, &config.dsm_wavenumbers)?;
        let data = measured.restrict_wavenumbers(&idx)?;
        indicator_field(config.grid, &data)
    })()
    .map_err(|e| e.in_stage("dsm"))?;
    Ok(gammas
        .iter()
        .map(|&g| (g, estimate_disc(&field, g, config.center_mode)))
        .collect())
}
