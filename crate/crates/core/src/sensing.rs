//! Triangular camera footprint: zoom, gimbal rotation, placement and
//! camera rays.
//!
//! The unrotated footprint has its apex at the agent and opens downwards
//! (towards -y). A zoom level `ξ` stretches the range to `h ξ` and narrows
//! the apex angle to `φ / ξ`.

use crate::error::{Error, Result};
use crate::geometry::{halfplanes, rotate, ConvexPolygon, HalfPlane, Point2, Segment};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FovParams {
    /// Apex angle, radians.
    pub apex_angle: f64,
    /// Height of the triangle (sensing range), meters.
    pub range: f64,
}

impl FovParams {
    pub fn new(apex_angle: f64, range: f64) -> Result<Self> {
        let f = Self { apex_angle, range };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.apex_angle > 0.0 && self.apex_angle < std::f64::consts::PI) {
            return Err(Error::invalid(format!(
                "apex angle {} rad must lie in (0, π)",
                self.apex_angle
            )));
        }
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(Error::invalid(format!(
                "range {} must be positive",
                self.range
            )));
        }
        Ok(())
    }

    /// Parameters after applying zoom level `zoom >= 1`.
    pub fn zoomed(&self, zoom: f64) -> Result<FovParams> {
        if !(zoom >= 1.0 && zoom.is_finite()) {
            return Err(Error::invalid(format!("zoom level {zoom} must be >= 1")));
        }
        Ok(FovParams {
            apex_angle: self.apex_angle / zoom,
            range: self.range * zoom,
        })
    }

    /// Length of the two equal sides.
    pub fn side_length(&self) -> f64 {
        self.range / (self.apex_angle / 2.0).cos()
    }

    /// Length of the base opposite the apex.
    pub fn base_length(&self) -> f64 {
        2.0 * self.side_length() * (self.apex_angle / 2.0).sin()
    }
}

/// Apex, left base corner and right base corner of the downward-facing
/// footprint at the origin, after zoom.
pub fn base_vertices(f: &FovParams, zoom: f64) -> Result<[Point2; 3]> {
    let z = f.zoomed(zoom)?;
    let half_base = z.base_length() / 2.0;
    Ok([
        Point2::ORIGIN,
        Point2::new(-half_base, -z.range),
        Point2::new(half_base, -z.range),
    ])
}

/// One gimbal angle / zoom level pair.
#[derive(Clone, Debug, PartialEq)]
pub struct FovConfig {
    /// Position in the enumeration order (0-based).
    pub index: usize,
    pub theta: f64,
    pub zoom: f64,
    /// Rotated footprint at the origin; `[0]` is the apex.
    pub base_vertices: [Point2; 3],
    /// Edge half-planes of the origin-centered footprint.
    pub local_halfplanes: [HalfPlane; 3],
}

impl FovConfig {
    pub fn new(index: usize, theta: f64, zoom: f64, f: &FovParams) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::invalid("gimbal angle must be finite"));
        }
        let verts = base_vertices(f, zoom)?.map(|v| rotate(v, theta));
        let poly = ConvexPolygon::new(verts.to_vec())?;
        let hps = halfplanes(&poly)?;
        Ok(Self {
            index,
            theta,
            zoom,
            base_vertices: verts,
            local_halfplanes: [hps[0], hps[1], hps[2]],
        })
    }

    /// Whether `p` lies in the footprint with the apex at `pos`.
    #[inline]
    pub fn covers(&self, pos: Point2, p: Point2) -> bool {
        let rel = p - pos;
        self.local_halfplanes.iter().all(|h| h.contains(rel))
    }

    /// Longest distance from the apex to any footprint point.
    pub fn reach(&self) -> f64 {
        self.base_vertices[1]
            .norm()
            .max(self.base_vertices[2].norm())
    }
}

/// All `(θ, ξ)` pairs, zoom-major: index = `zoom_idx * angles.len() + angle_idx`.
pub fn enumerate_configs(angles: &[f64], zooms: &[f64], f: &FovParams) -> Result<Vec<FovConfig>> {
    if angles.is_empty() || zooms.is_empty() {
        return Err(Error::invalid(
            "need at least one gimbal angle and one zoom level",
        ));
    }
    f.validate()?;
    let mut out = Vec::with_capacity(angles.len() * zooms.len());
    for &zoom in zooms {
        for &theta in angles {
            out.push(FovConfig::new(out.len(), theta, zoom, f)?);
        }
    }
    Ok(out)
}

/// Footprint translated to the agent position.
pub fn place(c: &FovConfig, pos: Point2) -> ConvexPolygon {
    ConvexPolygon::new(c.base_vertices.iter().map(|&v| v + pos).collect())
        .expect("translation preserves a valid footprint")
}

/// Camera rays from the agent to evenly spaced points on the footprint base.
#[derive(Clone, Debug, PartialEq)]
pub struct CameraRaySet {
    pub rays: Vec<Segment>,
}

/// `count` rays whose endpoints split the base evenly, both corners included.
pub fn rays(c: &FovConfig, pos: Point2, count: usize) -> Result<CameraRaySet> {
    if count < 2 {
        return Err(Error::invalid(format!(
            "ray count {count} must be at least 2"
        )));
    }
    let left = c.base_vertices[1] + pos;
    let right = c.base_vertices[2] + pos;
    let last = (count - 1) as f64;
    let rays = (0..count)
        .map(|i| Segment::new(pos, left.lerp(right, i as f64 / last)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CameraRaySet { rays })
}
