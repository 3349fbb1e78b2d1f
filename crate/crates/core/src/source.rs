//! Source terms, structured triangulations of their supports, and the
//! midpoint quadrature rule used for every area integral in the crate.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{dist, Disc, Point, Region};
use crate::special::{DiscEigenfunction, Parity};

/// Upper bound on rings/cells per side so a typo in the mesh size cannot
/// allocate an absurd triangulation.
const MAX_SUBDIVISIONS: usize = 2000;

fn q11() -> &'static DiscEigenfunction {
    static Q11: OnceLock<DiscEigenfunction> = OnceLock::new();
    Q11.get_or_init(|| {
        DiscEigenfunction::new(1, 1, Parity::Cosine, Disc::centered(0.9).unwrap())
            .expect("Q11 on B(0, 0.9) is constructible")
    })
}

/// A compactly supported source term.
///
/// The five built-in variants are the benchmark sources; `Custom` carries an
/// arbitrary callable and its support region.
#[derive(Clone)]
pub enum SourceSpec {
    /// 3 Q^1_{11} on B(0, 0.9): an exact multiple of a basis mode.
    Eigenmode,
    /// 2 (0.81 - x1^2 - x2^2) on B(0, 0.9): radially symmetric, C^0 at the rim.
    Paraboloid,
    /// 5 exp(-45 x1^2 - 30 x2^2): smooth, decays below 1e-20 well inside
    /// B(0, 1.5), which is used as the integration support.
    Gaussian,
    /// 15 x1 x2 (0.81 - x1^2 - (x2/1.2)^2) on the ellipse with semi-axes
    /// 0.9 and 1.08: sign-changing with four lobes.
    EllipticQuartic,
    /// Indicator of B(0, 0.9): piecewise constant.
    DiscIndicator,
    /// User-supplied source; `eval` must be present before point evaluation.
    Custom {
        eval: Option<Arc<dyn Fn(Point) -> f64 + Send + Sync>>,
        support: Region,
    },
}

impl fmt::Debug for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceSpec::Custom { eval, support } => f
                .debug_struct("Custom")
                .field("eval", &eval.is_some())
                .field("support", support)
                .finish(),
            other => f.write_str(other.label()),
        }
    }
}

impl SourceSpec {
    /// Benchmark source by its 1-based index.
    pub fn example(index: usize) -> Result<SourceSpec> {
        match index {
            1 => Ok(SourceSpec::Eigenmode),
            2 => Ok(SourceSpec::Paraboloid),
            3 => Ok(SourceSpec::Gaussian),
            4 => Ok(SourceSpec::EllipticQuartic),
            5 => Ok(SourceSpec::DiscIndicator),
            other => Err(Error::Config(format!("example index must be 1..=5, got {other}"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SourceSpec::Eigenmode => "eigenmode",
            SourceSpec::Paraboloid => "paraboloid",
            SourceSpec::Gaussian => "gaussian",
            SourceSpec::EllipticQuartic => "elliptic-quartic",
            SourceSpec::DiscIndicator => "disc-indicator",
            SourceSpec::Custom { .. } => "custom",
        }
    }

    /// Region the synthetic-data quadrature integrates over.
    pub fn support(&self) -> Region {
        match self {
            SourceSpec::Eigenmode | SourceSpec::Paraboloid | SourceSpec::DiscIndicator => {
                Region::Disc(Disc::centered(0.9).unwrap())
            }
            SourceSpec::Gaussian => Region::Disc(Disc::centered(1.5).unwrap()),
            SourceSpec::EllipticQuartic => Region::ellipse([0.0, 0.0], 0.9, 1.08).unwrap(),
            SourceSpec::Custom { support, .. } => *support,
        }
    }

    /// Point value f(x).
    pub fn evaluate(&self, x: Point) -> Result<f64> {
        match self {
            SourceSpec::Eigenmode => Ok(3.0 * q11().eval(x)),
            SourceSpec::Paraboloid => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                Ok(if r2 <= 0.81 { 2.0 * (0.81 - r2) } else { 0.0 })
            }
            SourceSpec::Gaussian => Ok(5.0 * (-45.0 * x[0] * x[0] - 30.0 * x[1] * x[1]).exp()),
            SourceSpec::EllipticQuartic => {
                let s = x[0] * x[0] + (x[1] / 1.2) * (x[1] / 1.2);
                Ok(if s <= 0.81 { 15.0 * x[0] * x[1] * (0.81 - s) } else { 0.0 })
            }
            SourceSpec::DiscIndicator => {
                Ok(if x[0] * x[0] + x[1] * x[1] <= 0.81 { 1.0 } else { 0.0 })
            }
            SourceSpec::Custom { eval: Some(f), .. } => Ok(f(x)),
            SourceSpec::Custom { eval: None, .. } => {
                Err(Error::Config("custom source has no callable payload".into()))
            }
        }
    }
}

/// Conforming triangulation with per-triangle centroids and areas cached.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    centroids: Vec<Point>,
    areas: Vec<f64>,
    h_max: f64,
}

impl TriangleMesh {
    /// Assembles the derived data, rejecting out-of-range indices and
    /// triangles with non-positive signed area.
    pub fn from_raw(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mut centroids = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        let mut h_max = 0.0_f64;
        for (t, idx) in triangles.iter().enumerate() {
            for &v in idx {
                if v >= vertices.len() {
                    return Err(Error::Format(format!(
                        "triangle {t} references vertex {v} of {}",
                        vertices.len()
                    )));
                }
            }
            let [a, b, c] = [vertices[idx[0]], vertices[idx[1]], vertices[idx[2]]];
            let signed =
                0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
            if signed <= 0.0 {
                return Err(Error::Format(format!(
                    "triangle {t} is degenerate or negatively oriented (area {signed:.3e})"
                )));
            }
            centroids.push([(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]);
            areas.push(signed);
            h_max = h_max.max(dist(a, b)).max(dist(b, c)).max(dist(c, a));
        }
        Ok(TriangleMesh { vertices, triangles, centroids, areas, h_max })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn centroid(&self, t: usize) -> Point {
        self.centroids[t]
    }

    pub fn centroids(&self) -> &[Point] {
        &self.centroids
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Longest edge in the mesh.
    pub fn h_max(&self) -> f64 {
        self.h_max
    }
}

/// Builds a structured triangulation of `region` with edges no longer than
/// about `h_target` (at most 1.5 x).
///
/// Discs and ellipses use concentric rings where ring i carries 6 i nodes;
/// squares use a split grid. The construction is deterministic.
pub fn build_mesh(region: &Region, h_target: f64) -> Result<TriangleMesh> {
    build_mesh_staggered(region, h_target, 0.0)
}

/// Like [`build_mesh`], with every ring rotated by `stagger` (in units of
/// that ring's angular node spacing, within [0, 1)). Two meshes of the same
/// region with different staggers share no interior structure, which keeps
/// synthetic data and operator assembly off identical quadrature points.
pub fn build_mesh_staggered(
    region: &Region,
    h_target: f64,
    stagger: f64,
) -> Result<TriangleMesh> {
    if !(h_target.is_finite() && h_target > 0.0) {
        return Err(Error::Domain(format!("mesh size must be positive, got {h_target}")));
    }
    if !(0.0..1.0).contains(&stagger) {
        return Err(Error::Domain(format!("stagger must lie in [0, 1), got {stagger}")));
    }
    match *region {
        Region::Disc(d) => {
            ring_mesh(d.center, d.radius, d.radius, h_target, stagger)
        }
        Region::Ellipse(e) => {
            ring_mesh(e.center, e.semi_x, e.semi_y, h_target, stagger)
        }
        Region::Square { center, half_width } => square_mesh(center, half_width, h_target),
    }
}

fn subdivisions(extent: f64, h_target: f64) -> Result<usize> {
    let n = (extent / h_target).ceil() as usize;
    if n > MAX_SUBDIVISIONS {
        return Err(Error::Config(format!(
            "mesh size {h_target} needs {n} subdivisions; limit is {MAX_SUBDIVISIONS}"
        )));
    }
    Ok(n.max(1))
}

fn ring_mesh(
    center: Point,
    semi_x: f64,
    semi_y: f64,
    h_target: f64,
    stagger: f64,
) -> Result<TriangleMesh> {
    let n_r = subdivisions(semi_x.max(semi_y), h_target)?;
    let mut vertices = vec![center];
    let mut ring_start = vec![0usize]; // "ring 0" is the center vertex
    for i in 1..=n_r {
        ring_start.push(vertices.len());
        let count = 6 * i;
        let rho = i as f64 / n_r as f64;
        let spacing = std::f64::consts::TAU / count as f64;
        for j in 0..count {
            let angle = (j as f64 + stagger) * spacing;
            vertices.push([
                center[0] + semi_x * rho * angle.cos(),
                center[1] + semi_y * rho * angle.sin(),
            ]);
        }
    }
    let mut triangles = Vec::with_capacity(6 * n_r * n_r);
    for i in 1..=n_r {
        let outer_count = 6 * i;
        let inner_count = if i == 1 { 1 } else { 6 * (i - 1) };
        let outer = |a: usize| ring_start[i] + a % outer_count;
        let inner = |a: usize| ring_start[i - 1] + a % inner_count;
        for s in 0..6 {
            for t in 0..i {
                triangles.push([
                    outer(s * i + t),
                    outer(s * i + t + 1),
                    inner(s * (i - 1) + t),
                ]);
            }
            for t in 0..i.saturating_sub(1) {
                triangles.push([
                    inner(s * (i - 1) + t),
                    outer(s * i + t + 1),
                    inner(s * (i - 1) + t + 1),
                ]);
            }
        }
    }
    TriangleMesh::from_raw(vertices, triangles)
        .map_err(|e| Error::Internal(format!("ring mesh construction failed: {e}")))
}

fn square_mesh(center: Point, half_width: f64, h_target: f64) -> Result<TriangleMesh> {
    // cell diagonal is the longest edge; keep it at or below h_target
    let n = subdivisions(2.0 * std::f64::consts::SQRT_2 * half_width, h_target)?;
    let step = 2.0 * half_width / n as f64;
    let origin = [center[0] - half_width, center[1] - half_width];
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for iy in 0..=n {
        for ix in 0..=n {
            vertices.push([origin[0] + ix as f64 * step, origin[1] + iy as f64 * step]);
        }
    }
    let at = |ix: usize, iy: usize| iy * (n + 1) + ix;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for iy in 0..n {
        for ix in 0..n {
            triangles.push([at(ix, iy), at(ix + 1, iy), at(ix + 1, iy + 1)]);
            triangles.push([at(ix, iy), at(ix + 1, iy + 1), at(ix, iy + 1)]);
        }
    }
    TriangleMesh::from_raw(vertices, triangles)
        .map_err(|e| Error::Internal(format!("square mesh construction failed: {e}")))
}

/// Midpoint (centroid) rule: sum of g(centroid) * area in triangle order.
///
/// Exact for integrands affine on each triangle; second-order accurate for
/// smooth integrands. The summation order is fixed, so results do not depend
/// on threading elsewhere.
pub fn quadrature<F: Fn(Point) -> Complex64>(mesh: &TriangleMesh, g: F) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for t in 0..mesh.num_triangles() {
        acc += g(mesh.centroid(t)) * mesh.area(t);
    }
    acc
}

/// Real-valued counterpart of [`quadrature`].
pub fn quadrature_real<F: Fn(Point) -> f64>(mesh: &TriangleMesh, g: F) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.num_triangles() {
        acc += g(mesh.centroid(t)) * mesh.area(t);
    }
    acc
}

/// A source sampled at the centroids of a mesh: the discrete form every
/// downstream integral consumes. Custom per-triangle data can be injected
/// with [`SourceSamples::from_values`].
#[derive(Debug, Clone)]
pub struct SourceSamples {
    mesh: TriangleMesh,
    values: Vec<f64>,
}

impl SourceSamples {
    pub fn from_spec(spec: &SourceSpec, mesh: TriangleMesh) -> Result<Self> {
        let values = mesh
            .centroids()
            .iter()
            .map(|&c| spec.evaluate(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(SourceSamples { mesh, values })
    }

    pub fn from_values(mesh: TriangleMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_triangles() {
            return Err(Error::Contract(format!(
                "{} sample values for {} triangles",
                values.len(),
                mesh.num_triangles()
            )));
        }
        Ok(SourceSamples { mesh, values })
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Discrete L2 norm sqrt(sum f(y_T)^2 |T|).
    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.mesh.areas())
            .map(|(v, a)| v * v * a)
            .sum::<f64>()
            .sqrt()
    }
}

/// Formats a float with 17 significant digits, enough for exact f64
/// round-trips through text.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a mesh as plain text: a header with counts, one `x y` line per
/// vertex, then one `a b c` line of 0-based indices per triangle.
pub fn write_mesh(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!(
        "# mesh v1 vertices={} triangles={}\n",
        mesh.num_vertices(),
        mesh.num_triangles()
    ));
    for v in mesh.vertices() {
        out.push_str(&format!("{} {}\n", fmt_f64(v[0]), fmt_f64(v[1])));
    }
    for t in mesh.triangles() {
        out.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Reads the format written by [`write_mesh`], revalidating the triangles.
pub fn read_mesh(path: &Path) -> Result<TriangleMesh> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty mesh file".into()))?
        .map_err(|e| Error::io(path, e))?;
    let (nv, nt) = parse_mesh_header(&header)?;
    let mut vertices = Vec::with_capacity(nv);
    let mut triangles = Vec::with_capacity(nt);
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if vertices.len() < nv {
            if fields.len() != 2 {
                return Err(Error::Format(format!("expected `x y`, got `{trimmed}`")));
            }
            vertices.push([parse_f64(fields[0])?, parse_f64(fields[1])?]);
        } else {
            if fields.len() != 3 {
                return Err(Error::Format(format!("expected `a b c`, got `{trimmed}`")));
            }
            triangles.push([
                parse_usize(fields[0])?,
                parse_usize(fields[1])?,
                parse_usize(fields[2])?,
            ]);
        }
    }
    if vertices.len() != nv || triangles.len() != nt {
        return Err(Error::Format(format!(
            "header promised {nv} vertices / {nt} triangles, found {} / {}",
            vertices.len(),
            triangles.len()
        )));
    }
    TriangleMesh::from_raw(vertices, triangles)
}

fn parse_mesh_header(header: &str) -> Result<(usize, usize)> {
    let rest = header
        .strip_prefix("# mesh v1 ")
        .ok_or_else(|| Error::Format(format!("bad mesh header `{header}`")))?;
    let mut nv = None;
    let mut nt = None;
    for token in rest.split_whitespace() {
        if let Some(v) = token.strip_prefix("vertices=") {
            nv = Some(parse_usize(v)?);
        } else if let Some(v) = token.strip_prefix("triangles=") {
            nt = Some(parse_usize(v)?);
        } else {
            return Err(Error::Format(format!("unknown mesh header token `{token}`")));
        }
    }
    match (nv, nt) {
        (Some(nv), Some(nt)) => Ok((nv, nt)),
        _ => Err(Error::Format(format!("incomplete mesh header `{header}`"))),
    }
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Format(format!("bad float `{s}`")))
}

pub(crate) fn parse_usize(s: &str) -> Result<usize> {
    s.parse::<usize>()
        .map_err(|_| Error::Format(format!("bad integer `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    #[test]
    fn benchmark_values() {
        let para = SourceSpec::example(2).unwrap();
        assert_abs_diff_eq!(para.evaluate([0.0, 0.0]).unwrap(), 1.62);
        assert_abs_diff_eq!(para.evaluate([1.0, 1.0]).unwrap(), 0.0);
        let gauss = SourceSpec::example(3).unwrap();
        assert_abs_diff_eq!(gauss.evaluate([0.0, 0.0]).unwrap(), 5.0);
        let ind = SourceSpec::example(5).unwrap();
        assert_eq!(ind.evaluate([0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(ind.evaluate([0.9, 0.1]).unwrap(), 0.0);
    }

    #[test]
    fn eigenmode_is_three_times_q11() {
        let src = SourceSpec::Eigenmode;
        let q = DiscEigenfunction::new(1, 1, Parity::Cosine, Disc::centered(0.9).unwrap())
            .unwrap();
        for &p in &[[0.2, 0.3], [-0.5, 0.1], [0.0, 0.0], [2.0, 0.0]] {
            assert_abs_diff_eq!(src.evaluate(p).unwrap(), 3.0 * q.eval(p), epsilon = 1e-15);
        }
    }

    #[test]
    fn quartic_vanishes_on_its_ellipse_rim() {
        let src = SourceSpec::example(4).unwrap();
        assert_abs_diff_eq!(src.evaluate([0.9, 0.0]).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(src.evaluate([0.0, 1.08]).unwrap(), 0.0, epsilon = 1e-12);
        assert!(src.evaluate([0.3, 0.3]).unwrap() > 0.0);
        assert!(src.evaluate([-0.3, 0.3]).unwrap() < 0.0);
        assert_eq!(src.evaluate([0.9, 0.9]).unwrap(), 0.0);
    }

    #[test]
    fn custom_source_needs_a_payload() {
        let support = Region::disc([0.0, 0.0], 1.0).unwrap();
        let empty = SourceSpec::Custom { eval: None, support };
        assert!(matches!(empty.evaluate([0.0, 0.0]), Err(Error::Config(_))));
        let filled = SourceSpec::Custom {
            eval: Some(Arc::new(|x: Point| x[0] + 1.0)),
            support,
        };
        assert_abs_diff_eq!(filled.evaluate([0.25, 0.0]).unwrap(), 1.25);
    }

    #[test]
    fn example_index_bounds() {
        assert!(SourceSpec::example(0).is_err());
        assert!(SourceSpec::example(6).is_err());
    }

    #[test]
    fn disc_mesh_area_and_edge_bounds() {
        let region = Region::disc([0.0, 0.0], 0.9).unwrap();
        let mesh = build_mesh(&region, 0.01).unwrap();
        let exact = PI * 0.81;
        assert!((mesh.total_area() - exact).abs() / exact < 0.01);
        assert!(mesh.h_max() <= 1.5 * 0.01, "h_max = {}", mesh.h_max());
        assert_eq!(mesh.num_triangles(), 6 * 90 * 90);
    }

    #[test]
    fn ellipse_and_square_mesh_areas() {
        let ell = Region::ellipse([0.0, 0.0], 0.9, 1.08).unwrap();
        let mesh = build_mesh(&ell, 0.02).unwrap();
        assert!((mesh.total_area() - ell.area()).abs() / ell.area() < 0.01);
        assert!(mesh.h_max() <= 1.5 * 0.02);

        let sq = Region::square([1.0, 0.0], 0.5).unwrap();
        let mesh = build_mesh(&sq, 0.05).unwrap();
        assert_relative_eq!(mesh.total_area(), 1.0, epsilon = 1e-12);
        assert!(mesh.h_max() <= 0.05 + 1e-12);
    }

    #[test]
    fn staggered_mesh_same_area_different_nodes() {
        let region = Region::disc([0.0, 0.0], 0.9).unwrap();
        let plain = build_mesh(&region, 0.1).unwrap();
        let staggered = build_mesh_staggered(&region, 0.1, 0.5).unwrap();
        assert_eq!(plain.num_triangles(), staggered.num_triangles());
        assert_abs_diff_eq!(plain.total_area(), staggered.total_area(), epsilon = 1e-12);
        assert!(staggered.h_max() <= 1.5 * 0.1);
        // interior nodes must genuinely differ
        assert!(dist(plain.vertices()[1], staggered.vertices()[1]) > 1e-3);
    }

    #[test]
    fn mesh_rejects_bad_parameters() {
        let region = Region::disc([0.0, 0.0], 0.9).unwrap();
        assert!(build_mesh(&region, 0.0).is_err());
        assert!(build_mesh(&region, -0.1).is_err());
        assert!(matches!(build_mesh(&region, 1e-6), Err(Error::Config(_))));
        assert!(build_mesh_staggered(&region, 0.1, 1.0).is_err());
    }

    #[test]
    fn quadrature_of_constants_and_zero() {
        let region = Region::disc([0.0, 0.0], 0.9).unwrap();
        let mesh = build_mesh(&region, 0.05).unwrap();
        let total = quadrature(&mesh, |_| Complex64::new(1.0, 0.0));
        assert_abs_diff_eq!(total.re, mesh.total_area(), epsilon = 1e-12);
        assert_abs_diff_eq!(total.im, 0.0);
        assert_eq!(quadrature_real(&mesh, |_| 0.0), 0.0);
    }

    #[test]
    fn quadrature_is_exact_for_affine_integrands() {
        // the centroid rule integrates affine functions exactly on each
        // triangle, so the sum equals the exact integral over the mesh polygon
        let region = Region::disc([0.0, 0.0], 0.9).unwrap();
        let mesh = build_mesh(&region, 0.1).unwrap();
        let got = quadrature_real(&mesh, |p| 2.0 + 3.0 * p[0] - p[1]);
        // by the 6-fold symmetry of the ring mesh the first moments vanish
        let expected = 2.0 * mesh.total_area();
        assert_relative_eq!(got, expected, epsilon = 1e-12);
    }

    #[test]
    fn paraboloid_integral_converges_to_closed_form() {
        // int_{B(0,0.9)} 2 (0.81 - r^2) dx = pi 0.81^2
        let exact = PI * 0.81 * 0.81;
        let spec = SourceSpec::Paraboloid;
        let region = spec.support();
        let mut prev = f64::INFINITY;
        for h in [0.1, 0.05, 0.01] {
            let mesh = build_mesh(&region, h).unwrap();
            let got = quadrature_real(&mesh, |p| spec.evaluate(p).unwrap());
            let err = (got - exact).abs();
            assert!(err < prev, "error did not shrink at h = {h}");
            prev = err;
        }
        assert!(prev / exact < 1e-3);
    }

    #[test]
    fn gaussian_integral_second_order_rate() {
        // closed form over the plane: 5 pi / sqrt(45 * 30); the tail outside
        // B(0, 1.5) is below 1e-28
        let exact = 5.0 * PI / (45.0_f64 * 30.0).sqrt();
        let spec = SourceSpec::Gaussian;
        let err = |h: f64| {
            let mesh = build_mesh(&spec.support(), h).unwrap();
            (quadrature_real(&mesh, |p| spec.evaluate(p).unwrap()) - exact).abs()
        };
        let coarse = err(0.04);
        let fine = err(0.02);
        assert!(fine < coarse / 3.0, "rate too slow: {coarse} -> {fine}");
        assert!(fine / exact < 1e-4);
    }

    #[test]
    fn sample_container_checks_lengths() {
        let region = Region::disc([0.0, 0.0], 0.9).unwrap();
        let mesh = build_mesh(&region, 0.1).unwrap();
        assert!(SourceSamples::from_values(mesh.clone(), vec![1.0; 3]).is_err());
        let n = mesh.num_triangles();
        let samples = SourceSamples::from_values(mesh, vec![2.0; n]).unwrap();
        // constant 2 has L2 norm 2 sqrt(area)
        assert_relative_eq!(
            samples.l2_norm(),
            2.0 * samples.mesh().total_area().sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn mesh_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mesh.txt");
        let region = Region::ellipse([0.3, -0.2], 0.9, 1.08).unwrap();
        let mesh = build_mesh(&region, 0.15).unwrap();
        write_mesh(&mesh, &path).unwrap();
        let back = read_mesh(&path).unwrap();
        assert_eq!(mesh.num_vertices(), back.num_vertices());
        assert_eq!(mesh.triangles(), back.triangles());
        for (a, b) in mesh.vertices().iter().zip(back.vertices()) {
            assert_eq!(a, b, "vertex round-trip must be exact");
        }
        assert_eq!(mesh.total_area(), back.total_area());
    }

    #[test]
    fn mesh_reader_rejects_malformed_input() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "# mesh v1 vertices=2 triangles=1\n0 0\n1 0\n0 1 2\n").unwrap();
        assert!(matches!(read_mesh(&path), Err(Error::Format(_))));
        std::fs::write(&path, "not a mesh\n").unwrap();
        assert!(matches!(read_mesh(&path), Err(Error::Format(_))));
        // counts that do not match the body
        std::fs::write(&path, "# mesh v1 vertices=3 triangles=1\n0 0\n1 0\n").unwrap();
        assert!(matches!(read_mesh(&path), Err(Error::Format(_))));
        // degenerate triangle
        std::fs::write(
            &path,
            "# mesh v1 vertices=3 triangles=1\n0 0\n1 0\n2 0\n0 1 2\n",
        )
        .unwrap();
        assert!(matches!(read_mesh(&path), Err(Error::Format(_))));
        assert!(matches!(read_mesh(&dir.path().join("missing.txt")), Err(Error::Io { .. })));
    }
}
