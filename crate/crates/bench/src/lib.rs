//! Shared fixtures for the stage benchmarks.
//!
//! Sizes are trimmed against the benchmark settings (coarser meshes, fewer
//! wavenumbers) so a full `cargo bench` pass stays in the minutes range
//! while the per-iteration work is still dominated by the same inner loops.

use wavesrc::expansion::{BasisIndex, DiscBasis, ForwardOperator};
use wavesrc::forward::{Aperture, FarFieldData};
use wavesrc::mcmc::{LikelihoodSpec, PriorSpec};
use wavesrc::pipeline::{simulate_measured, ExperimentConfig};
use wavesrc::source::build_mesh_staggered;
use wavesrc::{Disc, Region};

/// Example 2 configuration with a single shared wavenumber set so the
/// simulated data matches the assembled operator row for row.
pub fn small_config(wavenumbers: Vec<f64>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::example(2, Aperture::named("G1").unwrap()).unwrap();
    cfg.dsm_wavenumbers = wavenumbers.clone();
    cfg.bayes_wavenumbers = wavenumbers;
    cfg.mesh_h = 0.1;
    cfg
}

pub fn measured(cfg: &ExperimentConfig) -> FarFieldData {
    simulate_measured(cfg).unwrap()
}

pub fn operator(cfg: &ExperimentConfig, mesh_h: f64) -> ForwardOperator {
    let disc = Disc::centered(1.118).unwrap();
    let index = BasisIndex::new(cfg.m_max, cfg.n_max).unwrap();
    let basis = DiscBasis::new(index, disc).unwrap();
    let mesh = build_mesh_staggered(&Region::Disc(disc), mesh_h, 0.5).unwrap();
    ForwardOperator::assemble(&basis, &cfg.aperture, &cfg.bayes_wavenumbers, &mesh).unwrap()
}

pub fn likelihood(cfg: &ExperimentConfig, data: &FarFieldData) -> LikelihoodSpec {
    LikelihoodSpec::new(operator(cfg, 0.15), data, cfg.sigma).unwrap()
}

pub fn prior(cfg: &ExperimentConfig) -> PriorSpec {
    PriorSpec::new(cfg.prior_variance).unwrap()
}
