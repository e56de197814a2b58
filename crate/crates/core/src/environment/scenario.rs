//! Scenario file schema and the validated [`Scenario`] built from it.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{bell_curve_points, build_boundary, build_grid, inside_faces, Boundary, Grid};
use crate::error::{Error, Result};
use crate::geometry::{halfplanes, ConvexPolygon, HalfPlane, Point2, Rect, Segment};
use crate::kinematics::{state_within_bounds, AgentState, KinematicParams};
use crate::model::Weights;
use crate::sensing::{enumerate_configs, FovConfig, FovParams};

pub const DEFAULT_BIG_M: f64 = 1e5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicsSpec {
    pub dt: f64,
    pub mass: f64,
    pub drag: f64,
    pub force_max: f64,
    pub speed_max: f64,
    /// `[xmin, ymin, xmax, ymax]`
    pub workspace: [f64; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub pos: [f64; 2],
    pub vel: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FovSpec {
    pub apex_angle_deg: f64,
    pub range_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionSpec {
    Bell {
        a: f64,
        b: f64,
        c: f64,
        n: usize,
        x_range: [f64; 2],
    },
    Points {
        points: Vec<[f64; 2]>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSpec {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisibilitySpec {
    pub n_s: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    /// Per-axis force values, newtons.
    pub control_grid: Vec<f64>,
    pub time_limit_s: f64,
    pub max_nodes: u64,
}

/// On-disk scenario document. All angles are in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub kinematics: KinematicsSpec,
    pub x0: StateSpec,
    pub fov: FovSpec,
    pub angles_deg: Vec<f64>,
    pub zooms: Vec<f64>,
    pub ray_count: usize,
    pub region: RegionSpec,
    pub traversable: bool,
    pub grid: GridSpec,
    pub horizon: usize,
    pub weights: WeightsSpec,
    pub big_m: f64,
    pub visibility: VisibilitySpec,
    pub solver: SolverSpec,
    /// Additional convex obstacles, each a vertex list.
    #[serde(default)]
    pub obstacles: Vec<Vec<[f64; 2]>>,
}

impl ScenarioFile {
    /// The evaluation setup: 60 m × 20 m workspace, 11-point bell region,
    /// 4 × 4 grid, eight camera configurations.
    pub fn defaults() -> Self {
        ScenarioFile {
            kinematics: KinematicsSpec {
                dt: 1.0,
                mass: 3.35,
                drag: 0.2,
                force_max: 3.0,
                speed_max: 2.0,
                workspace: [0.0, 0.0, 60.0, 20.0],
            },
            x0: StateSpec {
                pos: [30.0, 6.0],
                vel: [0.0, 0.0],
            },
            fov: FovSpec {
                apex_angle_deg: 30.0,
                range_m: 7.0,
            },
            angles_deg: vec![-85.0, -28.0, 28.0, 85.0],
            zooms: vec![1.0, 2.0],
            ray_count: 5,
            region: RegionSpec::Bell {
                a: 10.0,
                b: 40.0,
                c: 2.0,
                n: 11,
                x_range: [38.0, 42.0],
            },
            traversable: false,
            grid: GridSpec { nx: 4, ny: 4 },
            horizon: 10,
            weights: WeightsSpec {
                w1: 10.0,
                w2: 0.5,
                w3: 0.1,
            },
            big_m: DEFAULT_BIG_M,
            visibility: VisibilitySpec { n_s: 15, seed: 0 },
            solver: SolverSpec {
                control_grid: vec![-3.0, 0.0, 3.0],
                time_limit_s: 60.0,
                max_nodes: 10_000_000,
            },
            obstacles: Vec::new(),
        }
    }

    /// A small instance: triangular region of three points, 2 × 2 grid,
    /// two camera configurations, four steps.
    pub fn tiny() -> Self {
        ScenarioFile {
            kinematics: KinematicsSpec {
                workspace: [0.0, 0.0, 24.0, 20.0],
                ..Self::defaults().kinematics
            },
            x0: StateSpec {
                pos: [12.0, 14.0],
                vel: [0.0, 0.0],
            },
            fov: FovSpec {
                apex_angle_deg: 40.0,
                range_m: 6.0,
            },
            angles_deg: vec![0.0, 30.0],
            zooms: vec![1.0],
            region: RegionSpec::Points {
                points: vec![[10.0, 6.0], [14.0, 6.0], [12.0, 9.0]],
            },
            grid: GridSpec { nx: 2, ny: 2 },
            horizon: 4,
            ..Self::defaults()
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_value(v: serde_json::Value) -> Result<Self> {
        Ok(serde_json::from_value(v)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario documents always serialize")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_pretty() + "\n").map_err(|e| Error::io(path, e))
    }

    /// Hex SHA-256 of the compact JSON encoding.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("scenario documents always serialize");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VisibilitySettings {
    pub samples_per_cell: usize,
    pub seed: u64,
}

/// Validated planning problem.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub kinematics: KinematicParams,
    pub x0: AgentState,
    pub fov: FovParams,
    /// Gimbal angles, radians.
    pub angles: Vec<f64>,
    pub zooms: Vec<f64>,
    pub ray_count: usize,
    pub boundary: Boundary,
    pub traversable: bool,
    pub grid: Grid,
    pub horizon: usize,
    pub weights: Weights,
    pub big_m: f64,
    pub extra_obstacles: Vec<ConvexPolygon>,
    pub visibility: VisibilitySettings,
    pub solver: SolverSpec,
    configs: Vec<FovConfig>,
    obstacle_faces: Vec<Vec<HalfPlane>>,
    spec: ScenarioFile,
}

impl Scenario {
    pub fn from_file(spec: ScenarioFile) -> Result<Self> {
        let k = &spec.kinematics;
        let w = k.workspace;
        let kinematics = KinematicParams {
            dt: k.dt,
            mass: k.mass,
            drag: k.drag,
            force_max: k.force_max,
            speed_max: k.speed_max,
            workspace: Rect::new(w[0], w[1], w[2], w[3])?,
        };
        kinematics.validate()?;
        let x0 = AgentState::new(
            spec.x0.pos[0],
            spec.x0.pos[1],
            spec.x0.vel[0],
            spec.x0.vel[1],
        );
        if !x0.is_finite() {
            return Err(Error::invalid("x0 must be finite"));
        }
        let fov = FovParams::new(spec.fov.apex_angle_deg.to_radians(), spec.fov.range_m)?;
        let angles: Vec<f64> = spec.angles_deg.iter().map(|d| d.to_radians()).collect();
        let configs = enumerate_configs(&angles, &spec.zooms, &fov)?;
        if spec.ray_count < 2 {
            return Err(Error::invalid(format!(
                "ray_count {} must be at least 2",
                spec.ray_count
            )));
        }

        let points = match &spec.region {
            RegionSpec::Bell {
                a,
                b,
                c,
                n,
                x_range,
            } => bell_curve_points(*a, *b, *c, *n, (x_range[0], x_range[1]))?,
            RegionSpec::Points { points } => {
                points.iter().map(|p| Point2::new(p[0], p[1])).collect()
            }
        };
        let boundary = build_boundary(&points)?;
        let grid = build_grid(kinematics.workspace, spec.grid.nx, spec.grid.ny)?;

        if spec.horizon < 1 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        let weights = Weights::new(spec.weights.w1, spec.weights.w2, spec.weights.w3)?;
        if !(spec.big_m > 0.0 && spec.big_m.is_finite()) {
            return Err(Error::invalid(format!(
                "big_m {} must be positive",
                spec.big_m
            )));
        }
        if spec.visibility.n_s < 1 {
            return Err(Error::invalid("visibility.n_s must be at least 1"));
        }
        let sv = &spec.solver;
        if sv.control_grid.is_empty() {
            return Err(Error::invalid("solver.control_grid must be nonempty"));
        }
        if sv
            .control_grid
            .iter()
            .any(|v| !(v.abs() <= kinematics.force_max))
        {
            return Err(Error::invalid(
                "solver.control_grid values must lie within ±force_max",
            ));
        }
        if !(sv.time_limit_s > 0.0) {
            return Err(Error::invalid("solver.time_limit_s must be positive"));
        }

        let extra_obstacles = spec
            .obstacles
            .iter()
            .map(|o| convex_obstacle(o))
            .collect::<Result<Vec<_>>>()?;
        let mut obstacle_faces = Vec::new();
        if !spec.traversable {
            obstacle_faces.push(boundary.halfplanes.clone());
        }
        for o in &extra_obstacles {
            obstacle_faces.push(halfplanes(o)?);
        }

        if !state_within_bounds(&x0, &kinematics) {
            return Err(Error::invalid("x0 violates the workspace or speed bounds"));
        }
        if let Some(i) = obstacle_faces.iter().position(|f| inside_faces(f, x0.pos)) {
            return Err(Error::invalid(if i == 0 && !spec.traversable {
                "x0 lies inside the region hull".to_string()
            } else {
                format!("x0 lies inside an obstacle ({i})")
            }));
        }

        Ok(Scenario {
            kinematics,
            x0,
            fov,
            angles,
            zooms: spec.zooms.clone(),
            ray_count: spec.ray_count,
            boundary,
            traversable: spec.traversable,
            grid,
            horizon: spec.horizon,
            weights,
            big_m: spec.big_m,
            extra_obstacles,
            visibility: VisibilitySettings {
                samples_per_cell: spec.visibility.n_s,
                seed: spec.visibility.seed,
            },
            solver: spec.solver.clone(),
            configs,
            obstacle_faces,
            spec,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_file(ScenarioFile::load(path)?)
    }

    /// The document this scenario was built from.
    pub fn spec(&self) -> &ScenarioFile {
        &self.spec
    }

    pub fn hash(&self) -> String {
        self.spec.hash()
    }

    /// Camera configurations, zoom-major.
    pub fn configs(&self) -> &[FovConfig] {
        &self.configs
    }

    pub fn n_points(&self) -> usize {
        self.boundary.points.len()
    }

    /// Face sets of every obstacle: the region hull first (unless the region
    /// is traversable), then the extra obstacles. Normals point outwards.
    pub fn obstacle_faces(&self) -> &[Vec<HalfPlane>] {
        &self.obstacle_faces
    }

    /// Whether `pos` lies strictly inside any obstacle.
    pub fn collides(&self, pos: Point2) -> bool {
        self.obstacle_faces.iter().any(|f| inside_faces(f, pos))
    }

    /// Segments that block camera rays. Empty for a traversable region.
    pub fn occluders(&self) -> &[Segment] {
        if self.traversable {
            &[]
        } else {
            &self.boundary.segments
        }
    }
}

fn convex_obstacle(vertices: &[[f64; 2]]) -> Result<ConvexPolygon> {
    let pts: Vec<Point2> = vertices.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let mut poly = ConvexPolygon::new(pts.clone());
    if poly.is_err() {
        let mut rev = pts;
        rev.reverse();
        poly = ConvexPolygon::new(rev);
    }
    poly.map_err(|e| Error::invalid(format!("obstacle is not a convex polygon: {e}")))
}
