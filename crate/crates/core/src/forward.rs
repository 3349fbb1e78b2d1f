//! Far-field synthesis: observation apertures, the forward map from a
//! sampled source to far-field patterns, measurement noise, and the
//! far-field text format.
//!
//! For the Helmholtz source problem the far-field pattern at direction
//! x_hat and wavenumber k is
//!
//! ```text
//! u_inf(x_hat, k) = int_Omega exp(-i k x_hat . y) f(y) dy,
//! ```
//!
//! approximated here by the centroid rule over a triangulation of the
//! support.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::source::{fmt_f64, parse_f64, parse_usize, SourceSamples};

/// An ordered set of observation directions on the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct Aperture {
    angles: Vec<f64>,
    label: String,
}

impl Aperture {
    /// Full circle: 52 directions at spacing pi/26 starting from 0.
    pub fn full() -> Aperture {
        Aperture::uniform(52, "G1")
    }

    /// Upper half circle: 26 directions at spacing pi/26.
    pub fn half() -> Aperture {
        Aperture::uniform(26, "G2")
    }

    /// First quadrant: 13 directions at spacing pi/26.
    pub fn quarter() -> Aperture {
        Aperture::uniform(13, "G3")
    }

    fn uniform(count: usize, label: &str) -> Aperture {
        let step = std::f64::consts::PI / 26.0;
        let angles = (0..count).map(|i| i as f64 * step).collect();
        Aperture { angles, label: label.to_string() }
    }

    /// Aperture with the benchmark label G1, G2 or G3.
    pub fn named(label: &str) -> Result<Aperture> {
        match label.to_ascii_uppercase().as_str() {
            "G1" => Ok(Aperture::full()),
            "G2" => Ok(Aperture::half()),
            "G3" => Ok(Aperture::quarter()),
            other => Err(Error::Config(format!(
                "unknown aperture `{other}`; expected G1, G2 or G3"
            ))),
        }
    }

    /// Arbitrary direction set; angles must be finite, strictly increasing
    /// and contained in [0, 2 pi).
    pub fn custom(angles: Vec<f64>, label: impl Into<String>) -> Result<Aperture> {
        if angles.is_empty() {
            return Err(Error::Config("aperture needs at least one direction".into()));
        }
        if !angles.iter().all(|a| a.is_finite() && (0.0..std::f64::consts::TAU).contains(a)) {
            return Err(Error::Config("aperture angles must lie in [0, 2 pi)".into()));
        }
        for pair in angles.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::Config("aperture angles must strictly increase".into()));
            }
        }
        Ok(Aperture { angles, label: label.into() })
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Unit vector of the i-th direction.
    pub fn direction(&self, i: usize) -> Point {
        [self.angles[i].cos(), self.angles[i].sin()]
    }
}

/// Whether a dataset still carries clean synthetic values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseTag {
    Clean,
    Perturbed,
}

impl NoiseTag {
    fn as_str(self) -> &'static str {
        match self {
            NoiseTag::Clean => "clean",
            NoiseTag::Perturbed => "perturbed",
        }
    }
}

/// Far-field values over an aperture and a set of wavenumbers.
///
/// Values are stored wavenumber-major: entry (i, j) for direction i and
/// wavenumber j sits at flat index `j * I + i`, which is also the agreed
/// vectorization order for the inverse stage.
#[derive(Debug, Clone)]
pub struct FarFieldData {
    aperture: Aperture,
    wavenumbers: Vec<f64>,
    values: Vec<Complex64>,
    noise: NoiseTag,
}

impl FarFieldData {
    pub fn new(
        aperture: Aperture,
        wavenumbers: Vec<f64>,
        values: Vec<Complex64>,
        noise: NoiseTag,
    ) -> Result<Self> {
        validate_wavenumbers(&wavenumbers)?;
        if values.len() != aperture.len() * wavenumbers.len() {
            return Err(Error::Contract(format!(
                "{} values for {} directions x {} wavenumbers",
                values.len(),
                aperture.len(),
                wavenumbers.len()
            )));
        }
        Ok(FarFieldData { aperture, wavenumbers, values, noise })
    }

    pub fn aperture(&self) -> &Aperture {
        &self.aperture
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn num_directions(&self) -> usize {
        self.aperture.len()
    }

    pub fn num_wavenumbers(&self) -> usize {
        self.wavenumbers.len()
    }

    pub fn noise(&self) -> NoiseTag {
        self.noise
    }

    /// Value for direction i and wavenumber j.
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[j * self.aperture.len() + i]
    }

    /// Flat values in vectorization order (wavenumber-major).
    pub fn vectorized(&self) -> &[Complex64] {
        &self.values
    }

    /// Restriction to a subset of wavenumbers given by indices into
    /// `wavenumbers()`, preserving order.
    pub fn restrict_wavenumbers(&self, indices: &[usize]) -> Result<FarFieldData> {
        let i_count = self.aperture.len();
        let mut wavenumbers = Vec::with_capacity(indices.len());
        let mut values = Vec::with_capacity(indices.len() * i_count);
        for &j in indices {
            if j >= self.wavenumbers.len() {
                return Err(Error::Contract(format!(
                    "wavenumber index {j} out of range {}",
                    self.wavenumbers.len()
                )));
            }
            wavenumbers.push(self.wavenumbers[j]);
            values.extend_from_slice(&self.values[j * i_count..(j + 1) * i_count]);
        }
        FarFieldData::new(self.aperture.clone(), wavenumbers, values, self.noise)
    }
}

fn validate_wavenumbers(wavenumbers: &[f64]) -> Result<()> {
    if wavenumbers.is_empty() {
        return Err(Error::Config("need at least one wavenumber".into()));
    }
    if !wavenumbers.iter().all(|k| k.is_finite() && *k > 0.0) {
        return Err(Error::Config("wavenumbers must be finite and positive".into()));
    }
    Ok(())
}

/// Far-field kernel exp(-i k x_hat . y).
pub fn farfield_kernel(k: f64, direction: Point, y: Point) -> Complex64 {
    Complex64::from_polar(1.0, -k * (direction[0] * y[0] + direction[1] * y[1]))
}

/// Far field of a sampled source at one direction and wavenumber, by the
/// centroid rule in fixed triangle order.
pub fn far_field(samples: &SourceSamples, k: f64, theta: f64) -> Result<Complex64> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::Domain(format!("wavenumber must be positive, got {k}")));
    }
    let direction = [theta.cos(), theta.sin()];
    let mesh = samples.mesh();
    let mut acc = Complex64::new(0.0, 0.0);
    for (t, &f) in samples.values().iter().enumerate() {
        acc += farfield_kernel(k, direction, mesh.centroid(t)) * (f * mesh.area(t));
    }
    Ok(acc)
}

/// Synthesizes the clean dataset for all aperture directions and
/// wavenumbers. Entries are independent, so they are computed in parallel
/// into disjoint slots; the result does not depend on the thread count.
pub fn generate_dataset(
    samples: &SourceSamples,
    aperture: &Aperture,
    wavenumbers: &[f64],
) -> Result<FarFieldData> {
    validate_wavenumbers(wavenumbers)?;
    let i_count = aperture.len();
    let values = (0..i_count * wavenumbers.len())
        .into_par_iter()
        .map(|flat| {
            let j = flat / i_count;
            let i = flat % i_count;
            far_field(samples, wavenumbers[j], aperture.angles()[i])
        })
        .collect::<Result<Vec<_>>>()?;
    FarFieldData::new(aperture.clone(), wavenumbers.to_vec(), values, NoiseTag::Clean)
}

/// Deterministic measurement noise: for each wavenumber j the constant
///
/// ```text
/// c_j = level * (max_i Re u(x_i, k_j) + i max_i Im u(x_i, k_j))
/// ```
///
/// is added to every direction at that wavenumber. Refuses to perturb twice.
pub fn perturb(data: &FarFieldData, level: f64) -> Result<FarFieldData> {
    let offsets = perturbation_offsets(data, level)?;
    let i_count = data.num_directions();
    let values = data
        .values
        .iter()
        .enumerate()
        .map(|(flat, v)| v + offsets[flat / i_count])
        .collect();
    FarFieldData::new(
        data.aperture.clone(),
        data.wavenumbers.clone(),
        values,
        NoiseTag::Perturbed,
    )
}

/// Random variant: every entry receives c_j scaled by its own Uniform(-1, 1)
/// draw. Draws come from a ChaCha20 stream seeded with `seed` in flat index
/// order, so the result is reproducible.
pub fn perturb_random(data: &FarFieldData, level: f64, seed: u64) -> Result<FarFieldData> {
    use rand::{Rng, SeedableRng};
    let offsets = perturbation_offsets(data, level)?;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let i_count = data.num_directions();
    let values = data
        .values
        .iter()
        .enumerate()
        .map(|(flat, v)| {
            let xi: f64 = rng.random_range(-1.0..1.0);
            v + offsets[flat / i_count] * xi
        })
        .collect();
    FarFieldData::new(
        data.aperture.clone(),
        data.wavenumbers.clone(),
        values,
        NoiseTag::Perturbed,
    )
}

fn perturbation_offsets(data: &FarFieldData, level: f64) -> Result<Vec<Complex64>> {
    if data.noise == NoiseTag::Perturbed {
        return Err(Error::State("dataset is already perturbed".into()));
    }
    if !(level.is_finite() && level >= 0.0) {
        return Err(Error::Domain(format!("noise level must be nonnegative, got {level}")));
    }
    let i_count = data.num_directions();
    Ok((0..data.num_wavenumbers())
        .map(|j| {
            let column = &data.values[j * i_count..(j + 1) * i_count];
            let max_re = column.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max);
            let max_im = column.iter().map(|v| v.im).fold(f64::NEG_INFINITY, f64::max);
            Complex64::new(max_re, max_im) * level
        })
        .collect())
}

/// Writes the far-field text format:
///
/// ```text
/// # farfield v1 I=<directions> J=<wavenumbers> noise=<clean|perturbed>
/// <k> <theta> <re> <im>
/// ```
///
/// with one line per entry, sorted by wavenumber then angle, floats at 17
/// significant digits.
pub fn write_farfield(data: &FarFieldData, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!(
        "# farfield v1 I={} J={} noise={}\n",
        data.num_directions(),
        data.num_wavenumbers(),
        data.noise.as_str()
    ));
    for (j, &k) in data.wavenumbers.iter().enumerate() {
        for (i, &theta) in data.aperture.angles().iter().enumerate() {
            let v = data.at(i, j);
            out.push_str(&format!(
                "{} {} {} {}\n",
                fmt_f64(k),
                fmt_f64(theta),
                fmt_f64(v.re),
                fmt_f64(v.im)
            ));
        }
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Reads the format written by [`write_farfield`], rejecting header/body
/// mismatches and inconsistent angle sets across wavenumber blocks.
pub fn read_farfield(path: &Path) -> Result<FarFieldData> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty far-field file".into()))?
        .map_err(|e| Error::io(path, e))?;
    let (i_count, j_count, noise) = parse_farfield_header(&header)?;
    let mut rows = Vec::with_capacity(i_count * j_count);
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Format(format!("expected `k theta re im`, got `{trimmed}`")));
        }
        rows.push((
            parse_f64(fields[0])?,
            parse_f64(fields[1])?,
            Complex64::new(parse_f64(fields[2])?, parse_f64(fields[3])?),
        ));
    }
    if rows.len() != i_count * j_count {
        return Err(Error::Format(format!(
            "header promised {} entries, found {}",
            i_count * j_count,
            rows.len()
        )));
    }
    let angles: Vec<f64> = rows[..i_count].iter().map(|r| r.1).collect();
    let mut wavenumbers = Vec::with_capacity(j_count);
    let mut values = Vec::with_capacity(rows.len());
    for j in 0..j_count {
        let block = &rows[j * i_count..(j + 1) * i_count];
        let k = block[0].0;
        for (i, &(bk, btheta, v)) in block.iter().enumerate() {
            if bk != k {
                return Err(Error::Format(format!(
                    "wavenumber changes inside block {j} ({bk} vs {k})"
                )));
            }
            if btheta != angles[i] {
                return Err(Error::Format(format!(
                    "angle set differs between blocks at row {i} of block {j}"
                )));
            }
            values.push(v);
        }
        wavenumbers.push(k);
    }
    if wavenumbers.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Format("wavenumber blocks must be sorted ascending".into()));
    }
    let aperture = Aperture::custom(angles, "file")?;
    FarFieldData::new(aperture, wavenumbers, values, noise)
}

fn parse_farfield_header(header: &str) -> Result<(usize, usize, NoiseTag)> {
    let rest = header
        .strip_prefix("# farfield v1 ")
        .ok_or_else(|| Error::Format(format!("bad far-field header `{header}`")))?;
    let (mut i_count, mut j_count, mut noise) = (None, None, None);
    for token in rest.split_whitespace() {
        if let Some(v) = token.strip_prefix("I=") {
            i_count = Some(parse_usize(v)?);
        } else if let Some(v) = token.strip_prefix("J=") {
            j_count = Some(parse_usize(v)?);
        } else if let Some(v) = token.strip_prefix("noise=") {
            noise = Some(match v {
                "clean" => NoiseTag::Clean,
                "perturbed" => NoiseTag::Perturbed,
                other => {
                    return Err(Error::Format(format!("unknown noise tag `{other}`")));
                }
            });
        } else {
            return Err(Error::Format(format!("unknown far-field header token `{token}`")));
        }
    }
    match (i_count, j_count, noise) {
        (Some(i), Some(j), Some(n)) if i > 0 && j > 0 => Ok((i, j, n)),
        _ => Err(Error::Format(format!("incomplete far-field header `{header}`"))),
    }
}
