//! Bayesian inversion of the coefficient vector with a preconditioned
//! Crank-Nicolson Metropolis-Hastings sampler.
//!
//! Model: the vectorized measurement U equals F(A) plus centered Gaussian
//! noise with standard deviation sigma per real component, so the misfit is
//!
//! ```text
//! G(A; U) = ||U - F(A)||^2 / (2 sigma^2)
//! ```
//!
//! with the complex norm summing squared moduli. Under the prior
//! N(0, prior_var I) the pCN proposal
//!
//! ```text
//! A~ = sqrt(1 - beta^2) A + beta W,   W ~ N(0, prior_var I)
//! ```
//!
//! preserves the prior exactly, and a proposal is accepted with probability
//! min(1, exp(G(A) - G(A~))). All randomness flows through [`ChainRng`].

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::expansion::{BasisIndex, CoefficientVector, ForwardOperator};
use crate::forward::FarFieldData;
use crate::geometry::Disc;
use crate::source::{fmt_f64, parse_f64, parse_usize};

/// Random stream for the sampler: a ChaCha20 generator (counter-based
/// stream cipher, identical output on every platform for a given seed)
/// yielding 53-bit uniforms in [0, 1), plus standard normals via the basic
/// Box-Muller transform
///
/// ```text
/// z0 = sqrt(-2 ln u1) cos(2 pi u2),  z1 = sqrt(-2 ln u1) sin(2 pi u2)
/// ```
///
/// with u1 mapped into (0, 1]; the second normal is cached. The transform is
/// fixed here so chains reproduce bit-for-bit across builds.
#[derive(Debug, Clone)]
pub struct ChainRng {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl ChainRng {
    pub fn from_seed(seed: u64) -> ChainRng {
        ChainRng { rng: ChaCha20Rng::seed_from_u64(seed), spare: None }
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform(); // (0, 1]: keeps the log finite
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }
}

/// Centered Gaussian prior N(0, variance I) on the coefficients.
#[derive(Debug, Clone, Copy)]
pub struct PriorSpec {
    variance: f64,
}

impl PriorSpec {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::Config(format!(
                "prior variance must be positive, got {variance}"
            )));
        }
        Ok(PriorSpec { variance })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Data misfit: the measured vector, the forward operator and the noise
/// scale sigma bundled together.
#[derive(Debug, Clone)]
pub struct LikelihoodSpec {
    operator: ForwardOperator,
    data_re: DVector<f64>,
    data_im: DVector<f64>,
    sigma: f64,
}

impl LikelihoodSpec {
    pub fn new(operator: ForwardOperator, data: &FarFieldData, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
        }
        if data.vectorized().len() != operator.nrows() {
            return Err(Error::Contract(format!(
                "data length {} does not match operator rows {}",
                data.vectorized().len(),
                operator.nrows()
            )));
        }
        let same_ks = data.wavenumbers().len() == operator.wavenumbers().len()
            && data
                .wavenumbers()
                .iter()
                .zip(operator.wavenumbers())
                .all(|(a, b)| (a - b).abs() <= 1e-12);
        if !same_ks {
            return Err(Error::Contract(
                "data and operator disagree on the wavenumber set".into(),
            ));
        }
        let values = data.vectorized();
        Ok(LikelihoodSpec {
            operator,
            data_re: DVector::from_iterator(values.len(), values.iter().map(|z| z.re)),
            data_im: DVector::from_iterator(values.len(), values.iter().map(|z| z.im)),
            sigma,
        })
    }

    pub fn operator(&self) -> &ForwardOperator {
        &self.operator
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// G(A; U) for a coefficient slice.
    pub fn misfit(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.operator.ncols() {
            return Err(Error::Contract(format!(
                "{} coefficients for an operator with {} columns",
                values.len(),
                self.operator.ncols()
            )));
        }
        let v = DVector::from_column_slice(values);
        let mut buf_re = DVector::zeros(self.operator.nrows());
        let mut buf_im = DVector::zeros(self.operator.nrows());
        Ok(self.misfit_into(&v, &mut buf_re, &mut buf_im))
    }

    fn misfit_into(
        &self,
        v: &DVector<f64>,
        buf_re: &mut DVector<f64>,
        buf_im: &mut DVector<f64>,
    ) -> f64 {
        self.operator.apply_split(v, buf_re, buf_im);
        let mut acc = 0.0;
        for r in 0..self.data_re.len() {
            let dr = self.data_re[r] - buf_re[r];
            let di = self.data_im[r] - buf_im[r];
            acc += dr * dr + di * di;
        }
        acc / (2.0 * self.sigma * self.sigma)
    }
}

/// One pCN proposal from `current`; `W` is drawn from the prior.
pub fn pcn_propose(
    current: &[f64],
    beta: f64,
    prior: &PriorSpec,
    rng: &mut ChainRng,
) -> Result<Vec<f64>> {
    validate_beta(beta)?;
    let scale = (1.0 - beta * beta).sqrt();
    let w_std = prior.std();
    Ok(current
        .iter()
        .map(|a| scale * a + beta * w_std * rng.standard_normal())
        .collect())
}

fn validate_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && 0.0 < beta && beta <= 1.0) {
        return Err(Error::Domain(format!("beta must lie in (0, 1], got {beta}")));
    }
    Ok(())
}

/// Accept/reject step: draws one uniform and accepts when
/// min(1, exp(g_current - g_proposed)) reaches it. A uniform is drawn even
/// for certain acceptance so the stream position is step-independent.
pub fn pcn_accept(g_current: f64, g_proposed: f64, rng: &mut ChainRng) -> Result<bool> {
    if g_current.is_nan() || g_proposed.is_nan() {
        return Err(Error::Contract("misfit is NaN".into()));
    }
    let alpha = (g_current - g_proposed).exp().min(1.0);
    let u = rng.uniform();
    Ok(alpha >= u)
}

/// Chain length bookkeeping and proposal tuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub beta: f64,
    pub steps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Proposal innovation covariance. `true` draws W from N(0, I); `false`
    /// draws W from the prior, which is the pCN form that leaves the prior
    /// invariant. The benchmark runs use the N(0, I) innovations: with the
    /// narrow N(0, 0.01) prior the prior-scaled steps are ten times smaller
    /// and the chain cannot cross the distance to coefficients of size 2-3
    /// within the budgeted 120000 steps, while the identity innovations
    /// reproduce the published reconstruction errors. Under G = 0 the
    /// literal chain equilibrates to N(0, I) regardless of the configured
    /// prior, so flip this off for prior-preservation studies.
    pub literal_proposal: bool,
}

impl Default for SamplerConfig {
    /// The benchmark settings: beta = 0.001, 120000 steps, 20000 burn-in,
    /// identity proposal innovations.
    fn default() -> Self {
        SamplerConfig {
            beta: 0.001,
            steps: 120_000,
            burn_in: 20_000,
            thin: 1,
            seed: 1,
            literal_proposal: true,
        }
    }
}

impl SamplerConfig {
    fn validate(&self) -> Result<()> {
        validate_beta(self.beta)?;
        if self.steps == 0 || self.burn_in >= self.steps {
            return Err(Error::Config(format!(
                "need steps > burn_in, got {} <= {}",
                self.steps, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thinning stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of retained samples.
    pub fn retained(&self) -> usize {
        (self.steps - self.burn_in).div_ceil(self.thin)
    }
}

/// Retained samples of one pCN run plus its bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    index: BasisIndex,
    disc: Disc,
    dim: usize,
    samples: Vec<f64>, // row-major, num_samples x dim
    accepted: usize,
    config: SamplerConfig,
}

impl MarkovChain {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_samples(&self) -> usize {
        self.samples.len() / self.dim
    }

    pub fn sample(&self, s: usize) -> &[f64] {
        &self.samples[s * self.dim..(s + 1) * self.dim]
    }

    pub fn accepted(&self) -> usize {
        self.accepted
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.config.steps as f64
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn index(&self) -> &BasisIndex {
        &self.index
    }

    pub fn disc(&self) -> Disc {
        self.disc
    }
}

/// Runs pCN-MH from A = 0 against a likelihood.
pub fn run_chain(
    likelihood: &LikelihoodSpec,
    prior: &PriorSpec,
    cfg: &SamplerConfig,
) -> Result<MarkovChain> {
    let rows = likelihood.operator().nrows();
    let mut buf_re = DVector::zeros(rows);
    let mut buf_im = DVector::zeros(rows);
    run_loop(
        likelihood.operator().index().clone(),
        likelihood.operator().disc(),
        prior,
        cfg,
        |v| likelihood.misfit_into(v, &mut buf_re, &mut buf_im),
    )
}

/// Runs the sampler with the likelihood disabled (G identically zero), so
/// the chain targets the prior itself. Every proposal is accepted; useful
/// for verifying that the proposal preserves the prior.
pub fn run_prior_chain(
    index: BasisIndex,
    disc: Disc,
    prior: &PriorSpec,
    cfg: &SamplerConfig,
) -> Result<MarkovChain> {
    run_loop(index, disc, prior, cfg, |_| 0.0)
}

fn run_loop(
    index: BasisIndex,
    disc: Disc,
    prior: &PriorSpec,
    cfg: &SamplerConfig,
    mut misfit: impl FnMut(&DVector<f64>) -> f64,
) -> Result<MarkovChain> {
    cfg.validate()?;
    let dim = index.len();
    let w_std = if cfg.literal_proposal { 1.0 } else { prior.std() };
    let scale = (1.0 - cfg.beta * cfg.beta).sqrt();
    let mut rng = ChainRng::from_seed(cfg.seed);
    let mut current = DVector::zeros(dim);
    let mut proposal = DVector::zeros(dim);
    let mut g_current = misfit(&current);
    let mut accepted = 0usize;
    let mut samples = Vec::with_capacity(cfg.retained() * dim);
    for step in 1..=cfg.steps {
        for d in 0..dim {
            proposal[d] = scale * current[d] + cfg.beta * w_std * rng.standard_normal();
        }
        let g_proposed = misfit(&proposal);
        if pcn_accept(g_current, g_proposed, &mut rng)? {
            std::mem::swap(&mut current, &mut proposal);
            g_current = g_proposed;
            accepted += 1;
        }
        if step > cfg.burn_in && (step - cfg.burn_in - 1).is_multiple_of(cfg.thin) {
            samples.extend(current.iter().copied());
        }
    }
    Ok(MarkovChain { index, disc, dim, samples, accepted, config: *cfg })
}

/// Per-coordinate histogram of retained samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

/// Conditional mean and marginal histograms of a chain.
#[derive(Debug, Clone)]
pub struct PosteriorSummary {
    pub conditional_mean: CoefficientVector,
    pub histograms: Vec<Histogram>,
    pub acceptance_rate: f64,
}

/// Averages the retained samples and bins each coordinate into `bins`
/// equal-width bins over its sample range. A coordinate with zero range
/// collapses to one central bin of unit width.
pub fn summarize(chain: &MarkovChain, bins: usize) -> Result<PosteriorSummary> {
    if bins == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    let n = chain.num_samples();
    if n == 0 {
        return Err(Error::Contract("chain holds no samples".into()));
    }
    let dim = chain.dim();
    let mut mean = vec![0.0_f64; dim];
    for s in 0..n {
        for (d, v) in chain.sample(s).iter().enumerate() {
            mean[d] += v;
        }
    }
    for v in &mut mean {
        *v /= n as f64;
    }
    let mut histograms = Vec::with_capacity(dim);
    for d in 0..dim {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in 0..n {
            let v = chain.sample(s)[d];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let mut counts = vec![0usize; bins];
        if hi - lo <= 0.0 {
            counts[bins / 2] = n;
            lo -= 0.5;
            hi += 0.5;
        } else {
            let width = (hi - lo) / bins as f64;
            for s in 0..n {
                let v = chain.sample(s)[d];
                let b = (((v - lo) / width) as usize).min(bins - 1);
                counts[b] += 1;
            }
        }
        histograms.push(Histogram { lo, hi, counts });
    }
    let conditional_mean =
        CoefficientVector::new(mean, chain.index().clone(), chain.disc())?;
    Ok(PosteriorSummary {
        conditional_mean,
        histograms,
        acceptance_rate: chain.acceptance_rate(),
    })
}

/// Key-value text block with the headline summary numbers.
pub fn summary_block(summary: &PosteriorSummary) -> String {
    let cm: Vec<String> =
        summary.conditional_mean.values.iter().map(|v| fmt_f64(*v)).collect();
    format!(
        "acceptance_rate = {}\ncm = {}\n",
        fmt_f64(summary.acceptance_rate),
        cm.join(" ")
    )
}

/// Writes a chain: a header with the sampler settings, the disc, the basis
/// shape, then one retained sample per line.
pub fn write_chain(chain: &MarkovChain, path: &Path) -> Result<()> {
    let cfg = chain.config();
    let mut out = String::new();
    out.push_str(&format!(
        "# chain v1 dim={} samples={} steps={} burn_in={} thin={} beta={} seed={} accepted={} proposal={}\n",
        chain.dim(),
        chain.num_samples(),
        cfg.steps,
        cfg.burn_in,
        cfg.thin,
        fmt_f64(cfg.beta),
        cfg.seed,
        chain.accepted(),
        if cfg.literal_proposal { "literal" } else { "prior" }
    ));
    out.push_str(&format!(
        "# disc {} {} {}\n# basis M={} N={}\n",
        fmt_f64(chain.disc().center[0]),
        fmt_f64(chain.disc().center[1]),
        fmt_f64(chain.disc().radius),
        chain.index().m_max(),
        chain.index().n_max()
    ));
    for s in 0..chain.num_samples() {
        let row: Vec<String> = chain.sample(s).iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Reads the format written by [`write_chain`].
pub fn read_chain(path: &Path) -> Result<MarkovChain> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let mut next_line = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Format("truncated chain file".into()))?
            .map_err(|e| Error::io(path, e))
    };
    let header = next_line()?;
    let rest = header
        .strip_prefix("# chain v1 ")
        .ok_or_else(|| Error::Format(format!("bad chain header `{header}`")))?;
    let mut dim = None;
    let mut num_samples = None;
    let mut cfg = SamplerConfig::default();
    let mut accepted = None;
    for token in rest.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("bad chain header token `{token}`")))?;
        match key {
            "dim" => dim = Some(parse_usize(value)?),
            "samples" => num_samples = Some(parse_usize(value)?),
            "steps" => cfg.steps = parse_usize(value)?,
            "burn_in" => cfg.burn_in = parse_usize(value)?,
            "thin" => cfg.thin = parse_usize(value)?,
            "beta" => cfg.beta = parse_f64(value)?,
            "seed" => {
                cfg.seed = value
                    .parse::<u64>()
                    .map_err(|_| Error::Format(format!("bad seed `{value}`")))?;
            }
            "accepted" => accepted = Some(parse_usize(value)?),
            "proposal" => cfg.literal_proposal = value == "literal",
            other => {
                return Err(Error::Format(format!("unknown chain header key `{other}`")));
            }
        }
    }
    let (dim, num_samples, accepted) = match (dim, num_samples, accepted) {
        (Some(d), Some(s), Some(a)) => (d, s, a),
        _ => return Err(Error::Format("incomplete chain header".into())),
    };
    let disc_line = next_line()?;
    let disc_fields: Vec<&str> = disc_line
        .strip_prefix("# disc ")
        .ok_or_else(|| Error::Format(format!("bad disc line `{disc_line}`")))?
        .split_whitespace()
        .collect();
    if disc_fields.len() != 3 {
        return Err(Error::Format(format!("bad disc line `{disc_line}`")));
    }
    let disc = Disc::new(
        [parse_f64(disc_fields[0])?, parse_f64(disc_fields[1])?],
        parse_f64(disc_fields[2])?,
    )
    .map_err(|e| Error::Format(format!("bad disc line: {e}")))?;
    let basis_line = next_line()?;
    let basis_rest = basis_line
        .strip_prefix("# basis ")
        .ok_or_else(|| Error::Format(format!("bad basis line `{basis_line}`")))?;
    let mut m_max = None;
    let mut n_max = None;
    for token in basis_rest.split_whitespace() {
        if let Some(v) = token.strip_prefix("M=") {
            m_max = Some(parse_usize(v)?);
        } else if let Some(v) = token.strip_prefix("N=") {
            n_max = Some(parse_usize(v)?);
        }
    }
    let index = match (m_max, n_max) {
        (Some(m), Some(n)) => BasisIndex::new(m, n)?,
        _ => return Err(Error::Format(format!("bad basis line `{basis_line}`"))),
    };
    if index.len() != dim {
        return Err(Error::Format(format!(
            "basis size {} does not match dim {dim}",
            index.len()
        )));
    }
    let mut samples = Vec::with_capacity(num_samples * dim);
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let before = samples.len();
        for field in trimmed.split_whitespace() {
            samples.push(parse_f64(field)?);
        }
        if samples.len() - before != dim {
            return Err(Error::Format(format!(
                "sample line has {} values, expected {dim}",
                samples.len() - before
            )));
        }
    }
    if samples.len() != num_samples * dim {
        return Err(Error::Format(format!(
            "expected {num_samples} samples, found {}",
            samples.len() / dim
        )));
    }
    Ok(MarkovChain { index, disc, dim, samples, accepted, config: cfg })
}
