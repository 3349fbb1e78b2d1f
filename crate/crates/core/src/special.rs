//! Cylindrical special functions: Bessel functions of the first kind with
//! integer order, their positive zeros, and the Dirichlet eigenfunctions of
//! the Laplacian on a disc built from them.
//!
//! `bessel_j` switches between a power series for small arguments and
//! backward (Miller) recurrence normalized by the even-order sum rule
//! `J_0 + 2 J_2 + 2 J_4 + ... = 1` for large arguments. Zeros are located by
//! scanning for sign changes and bisecting.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Disc, Point};

/// Largest order accepted by `bessel_j`.
pub const MAX_ORDER: usize = 64;
/// Largest |argument| accepted by `bessel_j`.
pub const MAX_ARGUMENT: f64 = 200.0;
/// Largest zero index (m) and order (n) accepted by `bessel_zero`.
pub const MAX_ZERO_INDEX: usize = 32;
/// Arguments at or below this magnitude use the power series.
const SERIES_CUTOFF: f64 = 12.0;

/// J_n(y) for integer order 0 <= n <= 64 and |y| <= 200.
pub fn bessel_j(n: usize, y: f64) -> Result<f64> {
    if n > MAX_ORDER {
        return Err(Error::Domain(format!("bessel_j order {n} exceeds {MAX_ORDER}")));
    }
    if !y.is_finite() || y.abs() > MAX_ARGUMENT {
        return Err(Error::Domain(format!(
            "bessel_j argument {y} outside [-{MAX_ARGUMENT}, {MAX_ARGUMENT}]"
        )));
    }
    let ay = y.abs();
    let value = if ay <= SERIES_CUTOFF { series(n, ay) } else { miller(n, ay) };
    // J_n(-y) = (-1)^n J_n(y)
    if y < 0.0 && n % 2 == 1 {
        Ok(-value)
    } else {
        Ok(value)
    }
}

/// Ascending power series around 0; adequate for |y| <= 12.
fn series(n: usize, ay: f64) -> f64 {
    let half = 0.5 * ay;
    // first term (y/2)^n / n!, built multiplicatively to dodge overflow
    let mut term = 1.0_f64;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let half_sq = half * half;
    let mut sum = term;
    let mut peak = term.abs();
    for s in 1..200usize {
        term *= -half_sq / (s as f64 * (s + n) as f64);
        sum += term;
        peak = peak.max(term.abs());
        if term.abs() < 1e-17 * peak + 1e-305 {
            break;
        }
    }
    sum
}

/// Backward recurrence from a safely high order with sum-rule normalization.
fn miller(n: usize, ay: f64) -> f64 {
    let mut start = (ay.ceil() as usize).max(n) + 60;
    if start % 2 == 1 {
        start += 1;
    }
    let mut above = 0.0_f64; // J_{m+1}, unnormalized
    let mut cur = 1e-300_f64; // J_m, unnormalized seed
    let mut target = 0.0_f64;
    let mut sum = 2.0 * cur; // start order is even and >= 2
    for m in (1..=start).rev() {
        let below = (2.0 * m as f64 / ay) * cur - above;
        above = cur;
        cur = below;
        let idx = m - 1;
        if idx == n {
            target = cur;
        }
        if idx == 0 {
            sum += cur;
        } else if idx % 2 == 0 {
            sum += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            above *= 1e-250;
            sum *= 1e-250;
            target *= 1e-250;
        }
    }
    target / sum
}

/// q_{mn}: the m-th positive zero of J_n, for 1 <= m <= 32 and n <= 32.
///
/// Scans from n + 1 in steps of pi/4 for a sign change (consecutive zeros of
/// J_n are separated by more than 3.1, so no bracket holds two zeros), then
/// bisects the bracket down to width 1e-13.
pub fn bessel_zero(m: usize, n: usize) -> Result<f64> {
    if m == 0 || m > MAX_ZERO_INDEX {
        return Err(Error::Domain(format!(
            "bessel_zero index m must be in 1..={MAX_ZERO_INDEX}, got {m}"
        )));
    }
    if n > MAX_ZERO_INDEX {
        return Err(Error::Domain(format!(
            "bessel_zero order n must be at most {MAX_ZERO_INDEX}, got {n}"
        )));
    }
    let step = std::f64::consts::FRAC_PI_4;
    let mut lo = n as f64 + 1.0;
    let mut f_lo = bessel_j(n, lo)?;
    let mut found = 0usize;
    loop {
        let hi = lo + step;
        if hi > MAX_ARGUMENT {
            return Err(Error::Internal(format!(
                "zero scan for J_{n} left the supported argument range"
            )));
        }
        let f_hi = bessel_j(n, hi)?;
        if f_lo * f_hi < 0.0 {
            found += 1;
            if found == m {
                let q = bisect(n, lo, hi, f_lo)?;
                let residual = bessel_j(n, q)?.abs();
                if residual >= 1e-12 {
                    return Err(Error::Internal(format!(
                        "bisection for q_{{{m},{n}}} left residual {residual:.3e}"
                    )));
                }
                return Ok(q);
            }
        }
        lo = hi;
        f_lo = f_hi;
    }
}

fn bisect(n: usize, mut lo: f64, mut hi: f64, f_lo: f64) -> Result<f64> {
    let mut lo_positive = f_lo > 0.0;
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = bessel_j(n, mid)?;
        if (f_mid > 0.0) == lo_positive {
            lo = mid;
            lo_positive = f_mid > 0.0;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Eagerly computed table of zeros q_{mn} for 1 <= m <= max_m, 0 <= n <= max_n.
#[derive(Debug, Clone)]
pub struct BesselZeroTable {
    max_m: usize,
    max_n: usize,
    zeros: Vec<f64>, // [n * max_m + (m - 1)]
}

impl BesselZeroTable {
    pub fn build(max_m: usize, max_n: usize) -> Result<Self> {
        if max_m == 0 {
            return Err(Error::Domain("zero table needs max_m >= 1".into()));
        }
        let mut zeros = Vec::with_capacity(max_m * (max_n + 1));
        for n in 0..=max_n {
            for m in 1..=max_m {
                zeros.push(bessel_zero(m, n)?);
            }
        }
        Ok(BesselZeroTable { max_m, max_n, zeros })
    }

    pub fn zero(&self, m: usize, n: usize) -> Result<f64> {
        if m == 0 || m > self.max_m || n > self.max_n {
            return Err(Error::Domain(format!(
                "q_{{{m},{n}}} outside table range m <= {}, n <= {}",
                self.max_m, self.max_n
            )));
        }
        Ok(self.zeros[n * self.max_m + (m - 1)])
    }
}

/// Angular parity of a disc eigenfunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Parity {
    Cosine,
    Sine,
}

/// Dirichlet eigenfunction of the Laplacian on a disc of radius R:
///
/// ```text
/// Q^1_{mn}(r, theta) = J_n(q_mn r / R) cos(n theta) / (sqrt(pi) R J_{n+1}(q_mn))
/// Q^2_{mn}(r, theta) = J_n(q_mn r / R) sin(n theta) / (sqrt(pi) R J_{n+1}(q_mn))
/// ```
///
/// in polar coordinates about the disc center, extended by zero outside the
/// disc. The normalization is kept with its sign; J_{n+1}(q_mn) alternates in
/// sign with m, and the basis is orthonormal either way.
#[derive(Debug, Clone)]
pub struct DiscEigenfunction {
    m: usize,
    n: usize,
    parity: Parity,
    disc: Disc,
    q: f64,
    scale: f64,
}

impl DiscEigenfunction {
    pub fn new(m: usize, n: usize, parity: Parity, disc: Disc) -> Result<Self> {
        let q = bessel_zero(m, n)?;
        Self::with_zero(m, n, parity, disc, q)
    }

    /// Variant that reuses a precomputed zero table.
    pub fn from_table(
        m: usize,
        n: usize,
        parity: Parity,
        disc: Disc,
        table: &BesselZeroTable,
    ) -> Result<Self> {
        let q = table.zero(m, n)?;
        Self::with_zero(m, n, parity, disc, q)
    }

    fn with_zero(m: usize, n: usize, parity: Parity, disc: Disc, q: f64) -> Result<Self> {
        if parity == Parity::Sine && n == 0 {
            return Err(Error::Domain("sine eigenfunctions require n >= 1".into()));
        }
        let scale =
            1.0 / (std::f64::consts::PI.sqrt() * disc.radius * bessel_j(n + 1, q)?);
        Ok(DiscEigenfunction { m, n, parity, disc, q, scale })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn disc(&self) -> Disc {
        self.disc
    }

    /// The zero q_mn this mode is built on.
    pub fn zero(&self) -> f64 {
        self.q
    }

    /// Eigen-wavenumber k_mn = q_mn / R; the mode solves
    /// (Laplacian + k_mn^2) Q = 0 on the disc with zero boundary values.
    pub fn eigen_wavenumber(&self) -> f64 {
        self.q / self.disc.radius
    }

    /// Value at a point in global coordinates; zero outside the disc.
    pub fn eval(&self, x: Point) -> f64 {
        let dx = x[0] - self.disc.center[0];
        let dy = x[1] - self.disc.center[1];
        let r = dx.hypot(dy);
        if r > self.disc.radius {
            return 0.0;
        }
        let radial = bessel_j(self.n, self.q * r / self.disc.radius)
            .expect("argument bounded by q_mn, inside the verified domain");
        let nf = self.n as f64;
        let theta = dy.atan2(dx);
        let angular = match self.parity {
            Parity::Cosine => (nf * theta).cos(),
            Parity::Sine => (nf * theta).sin(),
        };
        self.scale * radial * angular
    }
}
