//! Command line driver for the reconstruction pipeline.
//!
//! `run` executes the two-stage pipeline end to end; the other subcommands
//! expose the stages separately so data files can be generated once and
//! reused: `simulate` writes a far-field file, `dsm` estimates a support
//! disc from one, `reconstruct` inverts one on a given disc, and
//! `gamma-sweep` tabulates the disc radius across cutoff values.
//!
//! Every benchmark parameter defaults to its published value, so
//! `wavesrc run --example 1 --aperture G1 --out results/` reproduces a
//! benchmark cell. Exit codes: 0 success, 2 configuration or format error,
//! 3 numerical failure, 4 I/O failure.

mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use wavesrc::dsm::{estimate_disc, indicator_field, write_disc_summary, write_indicator_csv};
use wavesrc::expansion::{eval_f_be, BasisIndex, DiscBasis, ForwardOperator};
use wavesrc::forward::{read_farfield, write_farfield, Aperture, FarFieldData};
use wavesrc::mcmc::{
    run_chain, summarize, summary_block, write_chain, LikelihoodSpec, PriorSpec,
};
use wavesrc::pipeline::{
    evaluate_expansion, gamma_sweep, reconstruction_csv, run_pipeline, simulate_measured,
    ExperimentConfig,
};
use wavesrc::source::{build_mesh, build_mesh_staggered, fmt_f64, SourceSpec};
use wavesrc::{Error, Region, Result};

#[derive(Parser)]
#[command(name = "wavesrc", version, about = "Acoustic source reconstruction from far-field data")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: simulate, estimate the support, invert, evaluate
    Run(RunArgs),
    /// One sampling pass, then the estimated disc at each cutoff
    GammaSweep(GammaSweepArgs),
    /// Generate far-field data and write it to a file
    Simulate(SimulateArgs),
    /// Indicator field and disc estimate from a far-field file
    Dsm(DsmArgs),
    /// Bayesian inversion from a far-field file and a given disc
    Reconstruct(ReconstructArgs),
}

/// Flags shared by `run` and `gamma-sweep`. Every value defaults to the
/// benchmark setting; a config file fills the gap between defaults and
/// flags, with flags taking precedence.
#[derive(Args)]
struct ExperimentArgs {
    /// Flat key = value defaults file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in source, 1 through 5
    #[arg(long)]
    example: Option<usize>,
    /// Aperture label: G1 (full), G2 (half), G3 (quarter)
    #[arg(long)]
    aperture: Option<String>,
    /// Sampling-stage wavenumbers, start:step:end or comma list
    #[arg(long, value_name = "LIST")]
    dsm_ks: Option<String>,
    /// Inversion-stage wavenumbers, start:step:end or comma list
    #[arg(long, value_name = "LIST")]
    bayes_ks: Option<String>,
    /// Indicator cutoff in [0, 1], relative to the field peak
    #[arg(long)]
    gamma: Option<f64>,
    /// Disc center rule: origin or centroid
    #[arg(long)]
    center_mode: Option<String>,
    /// Skip the sampling stage and expand on this disc
    #[arg(long, value_name = "CX,CY,R")]
    disc_override: Option<String>,
    /// none, deterministic or random-uniform
    #[arg(long)]
    noise_mode: Option<String>,
    #[arg(long)]
    noise_level: Option<f64>,
    #[arg(long)]
    noise_seed: Option<u64>,
    /// Sampling grid as min,max,points_per_axis
    #[arg(long, value_name = "MIN,MAX,N")]
    grid: Option<String>,
    /// Radial basis orders
    #[arg(long = "M", value_name = "M")]
    m_max: Option<usize>,
    /// Angular basis orders
    #[arg(long = "N", value_name = "N")]
    n_max: Option<usize>,
    /// Likelihood noise level
    #[arg(long)]
    sigma: Option<f64>,
    /// Prior variance
    #[arg(long)]
    prior_var: Option<f64>,
    /// Proposal step size in (0, 1]
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Proposal innovations: literal (N(0,I)) or prior
    #[arg(long)]
    proposal: Option<String>,
    /// Target mesh spacing for simulation, assembly and evaluation
    #[arg(long)]
    mesh_h: Option<f64>,
    /// Histogram bin count
    #[arg(long)]
    bins: Option<usize>,
    /// Artifact directory
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn build(&self) -> Result<ExperimentConfig> {
        let map = match &self.config {
            Some(path) => config::load_key_values(path)?,
            None => Default::default(),
        };
        let example = match self.example {
            Some(e) => e,
            None => match map.get("example") {
                Some(v) => v
                    .parse()
                    .map_err(|_| Error::Config(format!("bad example `{v}`")))?,
                None => 1,
            },
        };
        let label = self
            .aperture
            .clone()
            .or_else(|| map.get("aperture").cloned())
            .unwrap_or_else(|| "G1".into());
        let mut cfg = ExperimentConfig::example(example, Aperture::named(&label)?)?;
        config::apply_overrides(&mut cfg, &map)?;

        if let Some(v) = &self.dsm_ks {
            cfg.dsm_wavenumbers = config::parse_list(v)?;
        }
        if let Some(v) = &self.bayes_ks {
            cfg.bayes_wavenumbers = config::parse_list(v)?;
        }
        if let Some(v) = self.gamma {
            cfg.gamma = Some(v);
        }
        if let Some(v) = &self.center_mode {
            cfg.center_mode = config::parse_center_mode(v)?;
        }
        if let Some(v) = &self.disc_override {
            cfg.disc_override = Some(config::parse_disc(v)?);
        }
        config::set_noise(&mut cfg, self.noise_mode.as_deref(), self.noise_level)?;
        if let Some(v) = self.noise_seed {
            cfg.noise_seed = v;
        }
        if let Some(v) = &self.grid {
            cfg.grid = config::parse_grid(v)?;
        }
        if let Some(v) = self.m_max {
            cfg.m_max = v;
        }
        if let Some(v) = self.n_max {
            cfg.n_max = v;
        }
        if let Some(v) = self.sigma {
            cfg.sigma = v;
        }
        if let Some(v) = self.prior_var {
            cfg.prior_variance = v;
        }
        if let Some(v) = self.beta {
            cfg.sampler.beta = v;
        }
        if let Some(v) = self.steps {
            cfg.sampler.steps = v;
        }
        if let Some(v) = self.burn_in {
            cfg.sampler.burn_in = v;
        }
        if let Some(v) = self.thin {
            cfg.sampler.thin = v;
        }
        if let Some(v) = self.seed {
            cfg.sampler.seed = v;
        }
        if let Some(v) = &self.proposal {
            cfg.sampler.literal_proposal = config::parse_proposal(v)?;
        }
        if let Some(v) = self.mesh_h {
            cfg.mesh_h = v;
        }
        if let Some(v) = self.bins {
            cfg.histogram_bins = v;
        }
        if let Some(v) = &self.out {
            cfg.output_dir = Some(v.clone());
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args)]
struct GammaSweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Cutoffs to tabulate, start:step:end or comma list
    #[arg(long, default_value = "0.05:0.05:0.95")]
    gammas: String,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    example: Option<usize>,
    #[arg(long)]
    aperture: Option<String>,
    /// Wavenumbers to generate, start:step:end or comma list
    #[arg(long, value_name = "LIST")]
    ks: Option<String>,
    #[arg(long)]
    noise_mode: Option<String>,
    #[arg(long)]
    noise_level: Option<f64>,
    #[arg(long)]
    noise_seed: Option<u64>,
    #[arg(long)]
    mesh_h: Option<f64>,
    /// Output file
    #[arg(long, default_value = "farfield.txt")]
    out: PathBuf,
}

#[derive(Args)]
struct DsmArgs {
    /// Far-field data file
    #[arg(long)]
    data: PathBuf,
    /// Wavenumber subset to use (default: every wavenumber in the file)
    #[arg(long, value_name = "LIST")]
    ks: Option<String>,
    /// Indicator cutoff in [0, 1], relative to the field peak
    #[arg(long)]
    gamma: f64,
    /// Sampling grid as min,max,points_per_axis
    #[arg(long, value_name = "MIN,MAX,N")]
    grid: Option<String>,
    /// Disc center rule: origin or centroid
    #[arg(long)]
    center_mode: Option<String>,
    /// Directory for indicator.csv and disc.csv
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Far-field data file; its wavenumbers drive the inversion
    #[arg(long)]
    data: PathBuf,
    /// Expansion disc as cx,cy,R
    #[arg(long, value_name = "CX,CY,R")]
    disc: String,
    /// Built-in source to evaluate errors against
    #[arg(long)]
    example: Option<usize>,
    #[arg(long = "M", value_name = "M")]
    m_max: Option<usize>,
    #[arg(long = "N", value_name = "N")]
    n_max: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    prior_var: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Proposal innovations: literal (N(0,I)) or prior
    #[arg(long)]
    proposal: Option<String>,
    #[arg(long)]
    mesh_h: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
    /// Directory for chain.txt, summary.txt and the reconstruction CSV
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            std::process::exit(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .expect("thread pool is configured before any parallel work");
    }
    if let Err(e) = dispatch(&cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Run(args) => cmd_run(args),
        Command::GammaSweep(args) => cmd_gamma_sweep(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Dsm(args) => cmd_dsm(args),
        Command::Reconstruct(args) => cmd_reconstruct(args),
    }
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let cfg = args.experiment.build()?;
    let report = run_pipeline(&cfg)?;
    println!("source = {}", report.source);
    println!("aperture = {} ({} directions)", report.aperture, report.num_directions);
    println!(
        "disc = center ({:.4}, {:.4}) radius {:.4} [{}]",
        report.disc.center[0], report.disc.center[1], report.disc.radius, report.disc_source
    );
    println!("acceptance_rate = {:.3}", report.acceptance_rate);
    println!("absolute_error = {:.4}", report.absolute_error);
    println!(
        "relative_error = {:.4} ({:.2}%)",
        report.relative_error,
        100.0 * report.relative_error
    );
    println!("wall_time_seconds = {:.2}", report.wall_time_seconds);
    if let Some(dir) = &cfg.output_dir {
        println!("artifacts = {} ({} files)", dir.display(), report.manifest.len());
    }
    Ok(())
}

fn cmd_gamma_sweep(args: &GammaSweepArgs) -> Result<()> {
    let cfg = args.experiment.build()?;
    let gammas = config::parse_list(&args.gammas)?;
    let rows = gamma_sweep(&cfg, &gammas)?;
    let mut csv = String::from("gamma, radius\n");
    println!("gamma   radius");
    for (gamma, disc) in &rows {
        match disc {
            Ok(d) => {
                println!("{gamma:.4}  {:.4}", d.radius);
                csv.push_str(&format!("{}, {}\n", fmt_f64(*gamma), fmt_f64(d.radius)));
            }
            Err(e) => {
                println!("{gamma:.4}  error: {e}");
                csv.push_str(&format!("{}, error: {e}\n", fmt_f64(*gamma)));
            }
        }
    }
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("gamma_sweep.csv");
        std::fs::write(&path, &csv).map_err(|e| Error::io(&path, e))?;
        println!("artifacts = {}", dir.display());
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let map = match &args.config {
        Some(path) => config::load_key_values(path)?,
        None => Default::default(),
    };
    let example = match args.example {
        Some(e) => e,
        None => match map.get("example") {
            Some(v) => v.parse().map_err(|_| Error::Config(format!("bad example `{v}`")))?,
            None => 1,
        },
    };
    let label = args
        .aperture
        .clone()
        .or_else(|| map.get("aperture").cloned())
        .unwrap_or_else(|| "G1".into());
    let mut cfg = ExperimentConfig::example(example, Aperture::named(&label)?)?;
    config::apply_overrides(&mut cfg, &map)?;
    if let Some(list) = &args.ks {
        let ks = config::parse_list(list)?;
        cfg.dsm_wavenumbers = ks.clone();
        cfg.bayes_wavenumbers = ks;
    }
    config::set_noise(&mut cfg, args.noise_mode.as_deref(), args.noise_level)?;
    if let Some(v) = args.noise_seed {
        cfg.noise_seed = v;
    }
    if let Some(v) = args.mesh_h {
        cfg.mesh_h = v;
    }
    let data = simulate_measured(&cfg)?;
    write_farfield(&data, &args.out)?;
    println!(
        "wrote {} ({} directions x {} wavenumbers, {})",
        args.out.display(),
        data.num_directions(),
        data.num_wavenumbers(),
        cfg.noise.label()
    );
    Ok(())
}

fn restrict_to(data: FarFieldData, list: &str) -> Result<FarFieldData> {
    let ks = config::parse_list(list)?;
    let indices = ks
        .iter()
        .map(|k| {
            data.wavenumbers()
                .iter()
                .position(|w| (w - k).abs() <= 1e-12)
                .ok_or_else(|| Error::Config(format!("wavenumber {k} is not in the data file")))
        })
        .collect::<Result<Vec<_>>>()?;
    data.restrict_wavenumbers(&indices)
}

fn cmd_dsm(args: &DsmArgs) -> Result<()> {
    let mut data = read_farfield(&args.data)?;
    if let Some(list) = &args.ks {
        data = restrict_to(data, list)?;
    }
    let grid = match &args.grid {
        Some(text) => config::parse_grid(text)?,
        None => wavesrc::dsm::SamplingGrid::benchmark(),
    };
    let mode = match &args.center_mode {
        Some(text) => config::parse_center_mode(text)?,
        None => Default::default(),
    };
    let field = indicator_field(grid, &data)?;
    let disc = estimate_disc(&field, args.gamma, mode)?;
    println!("indicator_max = {:.4}", field.max_value());
    println!(
        "disc = center ({:.4}, {:.4}) radius {:.4}",
        disc.center[0], disc.center[1], disc.radius
    );
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_indicator_csv(&field, &dir.join("indicator.csv"))?;
        write_disc_summary(&disc, args.gamma, &dir.join("disc.csv"))?;
        println!("artifacts = {}", dir.display());
    }
    Ok(())
}

fn cmd_reconstruct(args: &ReconstructArgs) -> Result<()> {
    let data = read_farfield(&args.data)?;
    let disc = config::parse_disc(&args.disc)?;
    let mesh_h = args.mesh_h.unwrap_or(0.01);
    let index = BasisIndex::new(args.m_max.unwrap_or(5), args.n_max.unwrap_or(2))?;
    let basis = DiscBasis::new(index, disc)?;
    let op_mesh = build_mesh_staggered(&Region::Disc(disc), mesh_h, 0.5)?;
    let operator =
        ForwardOperator::assemble(&basis, data.aperture(), data.wavenumbers(), &op_mesh)?;
    let likelihood = LikelihoodSpec::new(operator, &data, args.sigma.unwrap_or(0.04))?;
    let prior = PriorSpec::new(args.prior_var.unwrap_or(0.01))?;
    let mut sampler = wavesrc::mcmc::SamplerConfig::default();
    if let Some(v) = args.beta {
        sampler.beta = v;
    }
    if let Some(v) = args.steps {
        sampler.steps = v;
    }
    if let Some(v) = args.burn_in {
        sampler.burn_in = v;
    }
    if let Some(v) = args.thin {
        sampler.thin = v;
    }
    if let Some(v) = args.seed {
        sampler.seed = v;
    }
    if let Some(v) = &args.proposal {
        sampler.literal_proposal = config::parse_proposal(v)?;
    }
    let chain = run_chain(&likelihood, &prior, &sampler)?;
    let posterior = summarize(&chain, args.bins.unwrap_or(50))?;
    println!("acceptance_rate = {:.3}", posterior.acceptance_rate);
    let cm: Vec<String> =
        posterior.conditional_mean.values.iter().map(|v| format!("{v:.4}")).collect();
    println!("cm = {}", cm.join(" "));

    let evaluation = match args.example {
        Some(example) => {
            let source = SourceSpec::example(example)?;
            let evaluation =
                evaluate_expansion(&source, mesh_h, &basis, &posterior.conditional_mean)?;
            println!("absolute_error = {:.4}", evaluation.absolute_error);
            println!(
                "relative_error = {:.4} ({:.2}%)",
                evaluation.relative_error,
                100.0 * evaluation.relative_error
            );
            Some(evaluation)
        }
        None => None,
    };

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_chain(&chain, &dir.join("chain.txt"))?;
        let mut summary = summary_block(&posterior);
        match &evaluation {
            Some(evaluation) => {
                summary.push_str(&format!(
                    "absolute_error = {}\nrelative_error = {}\n",
                    fmt_f64(evaluation.absolute_error),
                    fmt_f64(evaluation.relative_error)
                ));
                let path = dir.join("reconstruction.csv");
                std::fs::write(&path, reconstruction_csv(evaluation))
                    .map_err(|e| Error::io(&path, e))?;
            }
            None => {
                let mesh = build_mesh(&Region::Disc(disc), mesh_h)?;
                let mut csv = String::from("x, y, f_be\n");
                for t in 0..mesh.num_triangles() {
                    let c = mesh.centroid(t);
                    let v = eval_f_be(&basis, &posterior.conditional_mean, c)?;
                    csv.push_str(&format!(
                        "{}, {}, {}\n",
                        fmt_f64(c[0]),
                        fmt_f64(c[1]),
                        fmt_f64(v)
                    ));
                }
                let path = dir.join("fbe.csv");
                std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
            }
        }
        let path = dir.join("summary.txt");
        std::fs::write(&path, summary).map_err(|e| Error::io(&path, e))?;
        println!("artifacts = {}", dir.display());
    }
    Ok(())
}
