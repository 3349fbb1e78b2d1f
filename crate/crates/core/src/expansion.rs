//! Fourier-Bessel expansion of a source on a disc and the linear operator
//! mapping expansion coefficients to far-field data.
//!
//! The basis consists of the Dirichlet eigenfunctions Q^1_{mn} (cosine) and
//! Q^2_{mn} (sine) of the disc for 1 <= m <= M, 0 <= n <= N; a coefficient
//! vector A represents
//!
//! ```text
//! f_BE = sum_c A_c Q_c,      c = 1 .. (2N + 1) M.
//! ```

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{farfield_kernel, Aperture};
use crate::geometry::{Disc, Point};
use crate::source::{fmt_f64, parse_f64, parse_usize, SourceSamples, TriangleMesh};
use crate::special::{BesselZeroTable, DiscEigenfunction, Parity};

/// Index set of the expansion: all (m, n, parity) triples in their fixed
/// storage order.
///
/// The order is: for each m = 1..M the cosine modes n = 0..N, then for each
/// m = 1..M the sine modes n = 1..N. Its length is (2N + 1) M.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisIndex {
    m_max: usize,
    n_max: usize,
    entries: Vec<(usize, usize, Parity)>,
}

impl BasisIndex {
    pub fn new(m_max: usize, n_max: usize) -> Result<Self> {
        if m_max == 0 {
            return Err(Error::Config("basis needs m_max >= 1".into()));
        }
        let mut entries = Vec::with_capacity((2 * n_max + 1) * m_max);
        for m in 1..=m_max {
            for n in 0..=n_max {
                entries.push((m, n, Parity::Cosine));
            }
        }
        for m in 1..=m_max {
            for n in 1..=n_max {
                entries.push((m, n, Parity::Sine));
            }
        }
        Ok(BasisIndex { m_max, n_max, entries })
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, usize, Parity)] {
        &self.entries
    }

    /// Storage position of a triple, if it belongs to the set.
    pub fn position(&self, m: usize, n: usize, parity: Parity) -> Option<usize> {
        if m == 0 || m > self.m_max || n > self.n_max {
            return None;
        }
        match parity {
            Parity::Cosine => Some((m - 1) * (self.n_max + 1) + n),
            Parity::Sine if n >= 1 => {
                Some(self.m_max * (self.n_max + 1) + (m - 1) * self.n_max + (n - 1))
            }
            Parity::Sine => None,
        }
    }
}

/// Coefficients of an expansion, tied to their index set and disc.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub values: Vec<f64>,
    pub index: BasisIndex,
    pub disc: Disc,
}

impl CoefficientVector {
    pub fn new(values: Vec<f64>, index: BasisIndex, disc: Disc) -> Result<Self> {
        if values.len() != index.len() {
            return Err(Error::Contract(format!(
                "{} coefficients for a basis of size {}",
                values.len(),
                index.len()
            )));
        }
        Ok(CoefficientVector { values, index, disc })
    }

    pub fn zeros(index: BasisIndex, disc: Disc) -> CoefficientVector {
        CoefficientVector { values: vec![0.0; index.len()], index, disc }
    }

    pub fn get(&self, m: usize, n: usize, parity: Parity) -> Option<f64> {
        self.index.position(m, n, parity).map(|p| self.values[p])
    }
}

/// The realized eigenfunction basis on a concrete disc.
#[derive(Debug, Clone)]
pub struct DiscBasis {
    index: BasisIndex,
    disc: Disc,
    functions: Vec<DiscEigenfunction>,
}

impl DiscBasis {
    pub fn new(index: BasisIndex, disc: Disc) -> Result<Self> {
        let table = BesselZeroTable::build(index.m_max(), index.n_max())?;
        let functions = index
            .entries()
            .iter()
            .map(|&(m, n, parity)| DiscEigenfunction::from_table(m, n, parity, disc, &table))
            .collect::<Result<Vec<_>>>()?;
        Ok(DiscBasis { index, disc, functions })
    }

    pub fn index(&self) -> &BasisIndex {
        &self.index
    }

    pub fn disc(&self) -> Disc {
        self.disc
    }

    pub fn functions(&self) -> &[DiscEigenfunction] {
        &self.functions
    }

    /// Projects a sampled source onto the basis with the centroid rule:
    /// A_c = sum_T f(y_T) Q_c(y_T) |T|.
    /// Orthogonal projection coefficients of the sampled source: each entry
    /// is the inner product with the basis function divided by its squared
    /// norm, both by midpoint quadrature on the sample mesh. The division
    /// matters: with the plain 1/(sqrt(pi) R J_{n+1}) scaling the modes with
    /// n >= 1 have squared norm 1/2, not 1.
    pub fn project(&self, samples: &SourceSamples) -> CoefficientVector {
        let mesh = samples.mesh();
        let values: Vec<f64> = self
            .functions
            .par_iter()
            .map(|q| {
                let mut num = 0.0;
                let mut den = 0.0;
                for (t, &f) in samples.values().iter().enumerate() {
                    let v = q.eval(mesh.centroid(t));
                    let w = mesh.area(t);
                    num += f * v * w;
                    den += v * v * w;
                }
                num / den
            })
            .collect();
        CoefficientVector { values, index: self.index.clone(), disc: self.disc }
    }
}

/// Evaluates f_BE at a point; zero outside the disc.
pub fn eval_f_be(basis: &DiscBasis, coeffs: &CoefficientVector, x: Point) -> Result<f64> {
    if coeffs.index != *basis.index() || coeffs.disc != basis.disc() {
        return Err(Error::Contract(
            "coefficient vector does not match the basis (index set or disc differ)".into(),
        ));
    }
    Ok(basis
        .functions
        .iter()
        .zip(&coeffs.values)
        .map(|(q, a)| a * q.eval(x))
        .sum())
}

/// Dense complex forward operator mapping coefficients to vectorized
/// far-field data.
///
/// Row `j * I + i` holds direction i and wavenumber j; column c holds the
/// far field of basis function c, both discretized with the centroid rule
/// on the assembly mesh. Real and imaginary parts are stored as separate
/// real matrices so the sampler can apply the operator with two real
/// matrix-vector products.
#[derive(Debug, Clone)]
pub struct ForwardOperator {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
    index: BasisIndex,
    disc: Disc,
    aperture: Aperture,
    wavenumbers: Vec<f64>,
}

impl ForwardOperator {
    /// Assembles the operator entry-wise:
    /// F[(i,j), c] = sum_T exp(-i k_j x_i . y_T) Q_c(y_T) |T|.
    ///
    /// Rows are computed in parallel with a fixed per-row summation order.
    pub fn assemble(
        basis: &DiscBasis,
        aperture: &Aperture,
        wavenumbers: &[f64],
        mesh: &TriangleMesh,
    ) -> Result<Self> {
        if wavenumbers.is_empty() {
            return Err(Error::Config("operator needs at least one wavenumber".into()));
        }
        if !wavenumbers.iter().all(|k| k.is_finite() && *k > 0.0) {
            return Err(Error::Config("wavenumbers must be finite and positive".into()));
        }
        if mesh.num_triangles() == 0 {
            return Err(Error::Contract("assembly mesh has no triangles".into()));
        }
        let cols = basis.index().len();
        let tri_count = mesh.num_triangles();
        // basis values at centroids, triangle-major for the row loop
        let mut q_vals = vec![0.0_f64; tri_count * cols];
        q_vals
            .par_chunks_mut(cols)
            .enumerate()
            .for_each(|(t, chunk)| {
                let y = mesh.centroid(t);
                for (c, q) in basis.functions().iter().enumerate() {
                    chunk[c] = q.eval(y);
                }
            });
        let i_count = aperture.len();
        let rows = i_count * wavenumbers.len();
        let row_data: Vec<(Vec<f64>, Vec<f64>)> = (0..rows)
            .into_par_iter()
            .map(|row| {
                let i = row % i_count;
                let j = row / i_count;
                let k = wavenumbers[j];
                let d = aperture.direction(i);
                let mut row_re = vec![0.0_f64; cols];
                let mut row_im = vec![0.0_f64; cols];
                for t in 0..tri_count {
                    let phase = farfield_kernel(k, d, mesh.centroid(t)) * mesh.area(t);
                    let q_row = &q_vals[t * cols..(t + 1) * cols];
                    for (c, &q) in q_row.iter().enumerate() {
                        row_re[c] += phase.re * q;
                        row_im[c] += phase.im * q;
                    }
                }
                (row_re, row_im)
            })
            .collect();
        let re = DMatrix::from_fn(rows, cols, |r, c| row_data[r].0[c]);
        let im = DMatrix::from_fn(rows, cols, |r, c| row_data[r].1[c]);
        Ok(ForwardOperator {
            re,
            im,
            index: basis.index().clone(),
            disc: basis.disc(),
            aperture: aperture.clone(),
            wavenumbers: wavenumbers.to_vec(),
        })
    }

    pub fn nrows(&self) -> usize {
        self.re.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.re.ncols()
    }

    pub fn index(&self) -> &BasisIndex {
        &self.index
    }

    pub fn disc(&self) -> Disc {
        self.disc
    }

    pub fn aperture(&self) -> &Aperture {
        &self.aperture
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Row of the (direction i, wavenumber j) measurement.
    pub fn row_index(&self, i: usize, j: usize) -> usize {
        j * self.aperture.len() + i
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        Complex64::new(self.re[(row, col)], self.im[(row, col)])
    }

    /// F(A) as a complex vector in row order.
    pub fn apply(&self, values: &[f64]) -> Result<Vec<Complex64>> {
        if values.len() != self.ncols() {
            return Err(Error::Contract(format!(
                "{} coefficients for an operator with {} columns",
                values.len(),
                self.ncols()
            )));
        }
        let v = DVector::from_column_slice(values);
        let re = &self.re * &v;
        let im = &self.im * &v;
        Ok((0..self.nrows())
            .map(|r| Complex64::new(re[r], im[r]))
            .collect())
    }

    /// In-place split application for the sampler hot loop.
    pub(crate) fn apply_split(
        &self,
        v: &DVector<f64>,
        out_re: &mut DVector<f64>,
        out_im: &mut DVector<f64>,
    ) {
        out_re.gemv(1.0, &self.re, v, 0.0);
        out_im.gemv(1.0, &self.im, v, 0.0);
    }
}

/// Writes coefficients as text: a header binding the disc and basis shape,
/// then one `m n parity value` line per entry in storage order.
pub fn write_coefficients(coeffs: &CoefficientVector, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!(
        "# coefficients v1 disc={} {} {} M={} N={}\n",
        fmt_f64(coeffs.disc.center[0]),
        fmt_f64(coeffs.disc.center[1]),
        fmt_f64(coeffs.disc.radius),
        coeffs.index.m_max(),
        coeffs.index.n_max()
    ));
    for (&(m, n, parity), value) in coeffs.index.entries().iter().zip(&coeffs.values) {
        let tag = match parity {
            Parity::Cosine => "cos",
            Parity::Sine => "sin",
        };
        out.push_str(&format!("{m} {n} {tag} {}\n", fmt_f64(*value)));
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Reads the format written by [`write_coefficients`], checking that the
/// triples appear exactly in storage order.
pub fn read_coefficients(path: &Path) -> Result<CoefficientVector> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty coefficient file".into()))?
        .map_err(|e| Error::io(path, e))?;
    let (disc, m_max, n_max) = parse_coefficient_header(&header)?;
    let index = BasisIndex::new(m_max, n_max)?;
    let mut values = Vec::with_capacity(index.len());
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Format(format!("expected `m n parity value`, got `{trimmed}`")));
        }
        let m = parse_usize(fields[0])?;
        let n = parse_usize(fields[1])?;
        let parity = match fields[2] {
            "cos" => Parity::Cosine,
            "sin" => Parity::Sine,
            other => return Err(Error::Format(format!("unknown parity `{other}`"))),
        };
        let at = values.len();
        if index.entries().get(at) != Some(&(m, n, parity)) {
            return Err(Error::Format(format!(
                "entry {at} is ({m}, {n}, {parity:?}), out of storage order"
            )));
        }
        values.push(parse_f64(fields[3])?);
    }
    if values.len() != index.len() {
        return Err(Error::Format(format!(
            "expected {} coefficients, found {}",
            index.len(),
            values.len()
        )));
    }
    CoefficientVector::new(values, index, disc)
}

fn parse_coefficient_header(header: &str) -> Result<(Disc, usize, usize)> {
    let rest = header
        .strip_prefix("# coefficients v1 ")
        .ok_or_else(|| Error::Format(format!("bad coefficient header `{header}`")))?;
    let tokens: Vec<&str> = rest.split_whitespace().collect();
    if tokens.len() != 5 {
        return Err(Error::Format(format!("bad coefficient header `{header}`")));
    }
    let cx = parse_f64(
        tokens[0]
            .strip_prefix("disc=")
            .ok_or_else(|| Error::Format(format!("bad coefficient header `{header}`")))?,
    )?;
    let cy = parse_f64(tokens[1])?;
    let radius = parse_f64(tokens[2])?;
    let m_max = parse_usize(
        tokens[3]
            .strip_prefix("M=")
            .ok_or_else(|| Error::Format(format!("bad coefficient header `{header}`")))?,
    )?;
    let n_max = parse_usize(
        tokens[4]
            .strip_prefix("N=")
            .ok_or_else(|| Error::Format(format!("bad coefficient header `{header}`")))?,
    )?;
    let disc = Disc::new([cx, cy], radius)
        .map_err(|e| Error::Format(format!("bad disc in header: {e}")))?;
    Ok((disc, m_max, n_max))
}
