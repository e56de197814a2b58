//! Region boundary, surveillance grid and scenario assembly.

mod scenario;

pub use scenario::{
    FovSpec, GridSpec, KinematicsSpec, RegionSpec, Scenario, ScenarioFile, SolverSpec, StateSpec,
    VisibilitySettings, VisibilitySpec, WeightsSpec, DEFAULT_BIG_M,
};

use crate::error::{Error, Result};
use crate::geometry::{
    convex_hull, halfplanes, ConvexPolygon, HalfPlane, Point2, Rect, Segment, CONTAIN_EPS,
    LENGTH_EPS,
};

/// Samples `n` points of `a exp(-(x-b)^2 / (2c^2))` evenly over `x_range`
/// (both ends included).
pub fn bell_curve_points(
    a: f64,
    b: f64,
    c: f64,
    n: usize,
    x_range: (f64, f64),
) -> Result<Vec<Point2>> {
    if n < 3 {
        return Err(Error::invalid(format!(
            "bell curve needs n >= 3 samples, got {n}"
        )));
    }
    if c == 0.0
        || ![a, b, c, x_range.0, x_range.1]
            .iter()
            .all(|v| v.is_finite())
    {
        return Err(Error::invalid(
            "bell curve parameters must be finite with c != 0",
        ));
    }
    let (lo, hi) = x_range;
    if hi <= lo {
        return Err(Error::invalid(format!("empty bell x range [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            let x = if i == n - 1 { hi } else { lo + step * i as f64 };
            Point2::new(x, bell(a, b, c, x))
        })
        .collect())
}

#[inline]
fn bell(a: f64, b: f64, c: f64, x: f64) -> f64 {
    a * (-(x - b).powi(2) / (2.0 * c * c)).exp()
}

/// Piecewise-linear region boundary.
///
/// `points` keep the caller's order (their indices name the coverage
/// targets). `segments` run counterclockwise around the hull starting at its
/// lowest-x vertex; segment `i` lies on the line of `halfplanes[i]`, whose
/// normal points out of the region.
#[derive(Clone, Debug, PartialEq)]
pub struct Boundary {
    pub points: Vec<Point2>,
    pub segments: Vec<Segment>,
    pub halfplanes: Vec<HalfPlane>,
    /// For each point, the `[incoming, outgoing]` boundary segments.
    pub point_to_segment: Vec<[usize; 2]>,
    pub hull: ConvexPolygon,
}

impl Boundary {
    /// Whether segment `seg` contains point `p` as an endpoint.
    #[inline]
    pub fn is_incident(&self, p: usize, seg: usize) -> bool {
        self.point_to_segment[p].contains(&seg)
    }
}

/// Builds the hull boundary through `points`. Every point must lie on the
/// boundary of the convex hull (vertices or on an edge).
pub fn build_boundary(points: &[Point2]) -> Result<Boundary> {
    if points.len() < 3 {
        return Err(Error::invalid(format!(
            "region needs at least 3 points, got {}",
            points.len()
        )));
    }
    for (i, p) in points.iter().enumerate() {
        for (j, q) in points.iter().enumerate().skip(i + 1) {
            if p.distance(*q) <= LENGTH_EPS {
                return Err(Error::invalid(format!(
                    "region points {i} and {j} coincide"
                )));
            }
        }
    }
    let hull = convex_hull(points)?;
    let hv = hull.vertices();
    let nh = hv.len();

    // Position of each point along the CCW hull walk: (edge index, parameter).
    let mut keyed: Vec<(usize, f64, usize)> = Vec::with_capacity(points.len());
    for (i, &p) in points.iter().enumerate() {
        let mut key = None;
        for e in 0..nh {
            let (a, b) = (hv[e], hv[(e + 1) % nh]);
            let edge = Segment { a, b };
            if edge.distance_to(p) <= CONTAIN_EPS {
                let t = (p - a).dot(b - a) / (b - a).dot(b - a);
                // A vertex sits at t = 0 of its outgoing edge, not t = 1 of the incoming one.
                if t >= 1.0 - 1e-12 {
                    continue;
                }
                key = Some((e, t.max(0.0)));
                break;
            }
        }
        match key {
            Some((e, t)) => keyed.push((e, t, i)),
            None => {
                return Err(Error::invalid(format!(
                    "region point {i} ({}, {}) lies strictly inside the convex hull",
                    p.x, p.y
                )))
            }
        }
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let order: Vec<usize> = keyed.iter().map(|k| k.2).collect();

    let n = order.len();
    let inside = hull.centroid();
    let mut segments = Vec::with_capacity(n);
    let mut hps = Vec::with_capacity(n);
    let mut point_to_segment = vec![[0usize; 2]; n];
    for k in 0..n {
        let (i, j) = (order[k], order[(k + 1) % n]);
        let seg = Segment::new(points[i], points[j])?;
        let hp = HalfPlane::through(points[i], points[j])?;
        hps.push(if hp.residual(inside) > 0.0 {
            hp.flipped()
        } else {
            hp
        });
        segments.push(seg);
        point_to_segment[i][1] = k;
        point_to_segment[j][0] = k;
    }
    Ok(Boundary {
        points: points.to_vec(),
        segments,
        halfplanes: hps,
        point_to_segment,
        hull,
    })
}

/// Strict interior test: every face inequality holds with margin.
pub fn inside_region(b: &Boundary, q: Point2) -> bool {
    inside_faces(&b.halfplanes, q)
}

/// Strict interior of the intersection of `faces`.
#[inline]
pub fn inside_faces(faces: &[HalfPlane], q: Point2) -> bool {
    faces.iter().all(|h| h.contains_strict(q))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub rect: Rect,
    pub halfplanes: [HalfPlane; 4],
}

impl Cell {
    #[inline]
    pub fn contains(&self, p: Point2) -> bool {
        self.halfplanes.iter().all(|h| h.contains(p))
    }
}

/// Row-major grid: cell `c = iy * nx + ix`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub bounds: Rect,
    pub nx: usize,
    pub ny: usize,
    pub cells: Vec<Cell>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Lowest-index cell containing `p` (closed cells).
    pub fn cell_of(&self, p: Point2) -> Option<usize> {
        self.cells.iter().position(|c| c.contains(p))
    }

    /// Every closed cell containing `p`, ascending.
    pub fn cells_containing(&self, p: Point2) -> impl Iterator<Item = usize> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(move |(_, c)| c.contains(p))
            .map(|(i, _)| i)
    }
}

pub fn build_grid(bounds: Rect, nx: usize, ny: usize) -> Result<Grid> {
    if nx == 0 || ny == 0 {
        return Err(Error::invalid("grid needs nx, ny >= 1"));
    }
    let xs: Vec<f64> = (0..=nx)
        .map(|i| {
            if i == nx {
                bounds.xmax
            } else {
                bounds.xmin + bounds.width() * i as f64 / nx as f64
            }
        })
        .collect();
    let ys: Vec<f64> = (0..=ny)
        .map(|j| {
            if j == ny {
                bounds.ymax
            } else {
                bounds.ymin + bounds.height() * j as f64 / ny as f64
            }
        })
        .collect();
    let mut cells = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let rect = Rect::new(xs[ix], ys[iy], xs[ix + 1], ys[iy + 1])?;
            let hps = halfplanes(&ConvexPolygon::from_rect(&rect)?)?;
            cells.push(Cell {
                rect,
                halfplanes: [hps[0], hps[1], hps[2], hps[3]],
            });
        }
    }
    Ok(Grid {
        bounds,
        nx,
        ny,
        cells,
    })
}
