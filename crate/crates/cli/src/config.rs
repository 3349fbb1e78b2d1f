//! Flag and config-file parsing: flat `key = value` files, scalar lists in
//! `start:step:end` or comma form, and the small composite values (disc,
//! grid) the flags accept.

use std::collections::BTreeMap;
use std::path::Path;

use wavesrc::dsm::{CenterMode, SamplingGrid};
use wavesrc::pipeline::{ExperimentConfig, NoiseMode};
use wavesrc::{Disc, Error, Result};

/// Parses `start:step:end` (inclusive range) or a comma list of numbers.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Err(Error::Config("empty number list".into()));
    }
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "range must be start:step:end, got `{text}`"
            )));
        }
        let start = parse_number(parts[0])?;
        let step = parse_number(parts[1])?;
        let end = parse_number(parts[2])?;
        if step <= 0.0 || end < start {
            return Err(Error::Config(format!("bad range `{text}`")));
        }
        let mut out = Vec::new();
        let mut i = 0usize;
        loop {
            let v = start + step * i as f64;
            if v > end + 1e-9 {
                break;
            }
            out.push(v);
            i += 1;
        }
        return Ok(out);
    }
    text.split(',').map(parse_number).collect()
}

/// Parses `cx,cy,R`.
pub fn parse_disc(text: &str) -> Result<Disc> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("disc must be cx,cy,R, got `{text}`")));
    }
    Disc::new(
        [parse_number(parts[0])?, parse_number(parts[1])?],
        parse_number(parts[2])?,
    )
}

/// Parses `min,max,points_per_axis`.
pub fn parse_grid(text: &str) -> Result<SamplingGrid> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "grid must be min,max,points_per_axis, got `{text}`"
        )));
    }
    let per_axis = parts[2]
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("bad point count `{}`", parts[2])))?;
    SamplingGrid::new(parse_number(parts[0])?, parse_number(parts[1])?, per_axis)
}

fn parse_number(text: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("not a number: `{text}`")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("not finite: `{text}`")));
    }
    Ok(v)
}

/// Loads a flat `key = value` file. `#` starts a comment; blank lines are
/// skipped; keys may not repeat.
pub fn load_key_values(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Format(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1))
        })?;
        let key = key.trim().to_string();
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Format(format!("line {}: duplicate key `{key}`", lineno + 1)));
        }
    }
    Ok(map)
}

/// Applies config-file entries onto a base configuration. `example` and
/// `aperture` are resolved by the caller before the base exists and are
/// skipped here; any other unknown key is an error.
pub fn apply_overrides(
    config: &mut ExperimentConfig,
    map: &BTreeMap<String, String>,
) -> Result<()> {
    let mut noise_mode: Option<&str> = None;
    let mut noise_level: Option<f64> = None;
    for (key, value) in map {
        match key.as_str() {
            "example" | "aperture" => {}
            "dsm-ks" => config.dsm_wavenumbers = parse_list(value)?,
            "bayes-ks" => config.bayes_wavenumbers = parse_list(value)?,
            "gamma" => config.gamma = Some(parse_number(value)?),
            "center-mode" => config.center_mode = parse_center_mode(value)?,
            "disc-override" => config.disc_override = Some(parse_disc(value)?),
            "noise-mode" => noise_mode = Some(value),
            "noise-level" => noise_level = Some(parse_number(value)?),
            "noise-seed" => config.noise_seed = parse_integer(key, value)?,
            "grid" => config.grid = parse_grid(value)?,
            "M" => config.m_max = parse_integer(key, value)?,
            "N" => config.n_max = parse_integer(key, value)?,
            "sigma" => config.sigma = parse_number(value)?,
            "prior-var" => config.prior_variance = parse_number(value)?,
            "beta" => config.sampler.beta = parse_number(value)?,
            "steps" => config.sampler.steps = parse_integer(key, value)?,
            "burn-in" => config.sampler.burn_in = parse_integer(key, value)?,
            "thin" => config.sampler.thin = parse_integer(key, value)?,
            "seed" => config.sampler.seed = parse_integer(key, value)?,
            "proposal" => config.sampler.literal_proposal = parse_proposal(value)?,
            "mesh-h" => config.mesh_h = parse_number(value)?,
            "bins" => config.histogram_bins = parse_integer(key, value)?,
            "out" => config.output_dir = Some(value.into()),
            other => {
                return Err(Error::Config(format!("unknown config key `{other}`")));
            }
        }
    }
    set_noise(config, noise_mode, noise_level)
}

/// Rebuilds the noise mode from an optional mode name and level, keeping the
/// current value for whichever is absent.
pub fn set_noise(
    config: &mut ExperimentConfig,
    mode: Option<&str>,
    level: Option<f64>,
) -> Result<()> {
    if mode.is_none() && level.is_none() {
        return Ok(());
    }
    let level = level.unwrap_or(config.noise.level());
    let mode = mode.unwrap_or(config.noise.label());
    config.noise = match mode {
        "none" => NoiseMode::None,
        "deterministic" => NoiseMode::Deterministic(level),
        "random-uniform" => NoiseMode::RandomUniform(level),
        other => {
            return Err(Error::Config(format!(
                "unknown noise mode `{other}`; expected none, deterministic or random-uniform"
            )));
        }
    };
    Ok(())
}

pub fn parse_center_mode(text: &str) -> Result<CenterMode> {
    match text {
        "origin" => Ok(CenterMode::Origin),
        "centroid" => Ok(CenterMode::Centroid),
        other => Err(Error::Config(format!(
            "unknown center mode `{other}`; expected origin or centroid"
        ))),
    }
}

pub fn parse_proposal(text: &str) -> Result<bool> {
    match text {
        "literal" => Ok(true),
        "prior" => Ok(false),
        other => Err(Error::Config(format!(
            "unknown proposal `{other}`; expected literal or prior"
        ))),
    }
}

fn parse_integer<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value for `{key}`: `{value}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use wavesrc::forward::Aperture;

    #[test]
    fn list_forms() {
        assert_eq!(parse_list("1:1:3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_list("1:1:20").unwrap().len(), 20);
        assert_eq!(parse_list("0.5, 2.5").unwrap(), vec![0.5, 2.5]);
        assert_eq!(parse_list("7").unwrap(), vec![7.0]);
        assert!(parse_list("1:0:3").is_err());
        assert!(parse_list("3:1:1").is_err());
        assert!(parse_list("1:2").is_err());
        assert!(parse_list("a,b").is_err());
        assert!(parse_list("").is_err());
    }

    #[test]
    fn disc_and_grid_forms() {
        let d = parse_disc("0.5,-0.25,1.5").unwrap();
        assert_eq!(d.center, [0.5, -0.25]);
        assert_eq!(d.radius, 1.5);
        assert!(parse_disc("1,2").is_err());
        assert!(parse_disc("0,0,-1").is_err());
        let g = parse_grid("-4,4,81").unwrap();
        assert_eq!(g.per_axis(), 81);
        assert!(parse_grid("-4,4").is_err());
        assert!(parse_grid("4,-4,81").is_err());
    }

    #[test]
    fn key_value_files_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(
            &path,
            "# benchmark overrides\nsteps = 500\ngamma = 0.5\nproposal = prior\n\nbayes-ks = 1:1:5 # short set\n",
        )
        .unwrap();
        let map = load_key_values(&path).unwrap();
        assert_eq!(map.len(), 4);
        let mut config = ExperimentConfig::example(2, Aperture::full()).unwrap();
        apply_overrides(&mut config, &map).unwrap();
        assert_eq!(config.sampler.steps, 500);
        assert_eq!(config.gamma, Some(0.5));
        assert!(!config.sampler.literal_proposal);
        assert_eq!(config.bayes_wavenumbers.len(), 5);

        std::fs::write(&path, "bogus-key = 1\n").unwrap();
        let map = load_key_values(&path).unwrap();
        assert!(apply_overrides(&mut config, &map).is_err());

        std::fs::write(&path, "steps 500\n").unwrap();
        assert!(load_key_values(&path).is_err());
        std::fs::write(&path, "steps = 1\nsteps = 2\n").unwrap();
        assert!(load_key_values(&path).is_err());
    }

    #[test]
    fn noise_reconfiguration() {
        let mut config = ExperimentConfig::example(1, Aperture::full()).unwrap();
        set_noise(&mut config, None, Some(0.05)).unwrap();
        assert_eq!(config.noise, NoiseMode::Deterministic(0.05));
        set_noise(&mut config, Some("random-uniform"), None).unwrap();
        assert_eq!(config.noise, NoiseMode::RandomUniform(0.05));
        set_noise(&mut config, Some("none"), None).unwrap();
        assert_eq!(config.noise, NoiseMode::None);
        assert!(set_noise(&mut config, Some("loud"), None).is_err());
    }
}
