//! Plane geometry shared by every stage: points, discs and the support
//! regions sources can live on.

use serde::Serialize;

use crate::error::{Error, Result};

/// Point in the plane.
pub type Point = [f64; 2];

pub fn norm(p: Point) -> f64 {
    p[0].hypot(p[1])
}

pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Closed disc B(center, radius), radius > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Disc {
    pub center: Point,
    pub radius: f64,
}

impl Disc {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Domain(format!("disc radius must be positive, got {radius}")));
        }
        if !(center[0].is_finite() && center[1].is_finite()) {
            return Err(Error::Domain("disc center must be finite".into()));
        }
        Ok(Disc { center, radius })
    }

    /// Origin-centered disc.
    pub fn centered(radius: f64) -> Result<Self> {
        Disc::new([0.0, 0.0], radius)
    }

    pub fn contains(&self, p: Point) -> bool {
        dist(p, self.center) <= self.radius
    }

    /// Largest distance from the origin to a point of the disc.
    pub fn outer_radius(&self) -> f64 {
        norm(self.center) + self.radius
    }
}

/// Axis-aligned ellipse with semi-axes (semi_x, semi_y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ellipse {
    pub center: Point,
    pub semi_x: f64,
    pub semi_y: f64,
}

/// Support region of a source term; every variant has positive area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Region {
    Disc(Disc),
    Ellipse(Ellipse),
    /// Square [cx-half, cx+half] x [cy-half, cy+half].
    Square { center: Point, half_width: f64 },
}

impl Region {
    pub fn disc(center: Point, radius: f64) -> Result<Region> {
        Ok(Region::Disc(Disc::new(center, radius)?))
    }

    pub fn ellipse(center: Point, semi_x: f64, semi_y: f64) -> Result<Region> {
        if !(semi_x.is_finite() && semi_x > 0.0 && semi_y.is_finite() && semi_y > 0.0) {
            return Err(Error::Domain(format!(
                "ellipse semi-axes must be positive, got ({semi_x}, {semi_y})"
            )));
        }
        Ok(Region::Ellipse(Ellipse { center, semi_x, semi_y }))
    }

    pub fn square(center: Point, half_width: f64) -> Result<Region> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Domain(format!(
                "square half-width must be positive, got {half_width}"
            )));
        }
        Ok(Region::Square { center, half_width })
    }

    pub fn area(&self) -> f64 {
        match *self {
            Region::Disc(d) => std::f64::consts::PI * d.radius * d.radius,
            Region::Ellipse(e) => std::f64::consts::PI * e.semi_x * e.semi_y,
            Region::Square { half_width, .. } => 4.0 * half_width * half_width,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Region::Disc(d) => d.contains(p),
            Region::Ellipse(e) => {
                let dx = (p[0] - e.center[0]) / e.semi_x;
                let dy = (p[1] - e.center[1]) / e.semi_y;
                dx * dx + dy * dy <= 1.0
            }
            Region::Square { center, half_width } => {
                (p[0] - center[0]).abs() <= half_width && (p[1] - center[1]).abs() <= half_width
            }
        }
    }

    /// Largest distance from the origin to a point of the region.
    pub fn outer_radius(&self) -> f64 {
        match *self {
            Region::Disc(d) => d.outer_radius(),
            Region::Ellipse(e) => norm(e.center) + e.semi_x.max(e.semi_y),
            Region::Square { center, half_width } => {
                norm(center) + std::f64::consts::SQRT_2 * half_width
            }
        }
    }
}
