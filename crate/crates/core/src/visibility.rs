//! Ray-cast visibility of boundary points and the learned per-cell table.
//!
//! A point is visible from a pose when it lies in the placed footprint and
//! some camera ray's first boundary hit is one of the two segments meeting at
//! that point. The table ORs this test over sampled poses in each grid cell
//! and over every camera configuration.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::environment::{Boundary, Grid, Scenario};
use crate::error::{Error, Result};
use crate::geometry::{nearest_hit, Point2, Rect, Segment};
use crate::sensing::{rays, FovConfig};

/// Points of `boundary` visible from `pos` under `cfg`, ascending.
///
/// With `occluding == false` rays are not cast and visibility reduces to
/// footprint containment.
pub fn visible_points_with(
    boundary: &Boundary,
    occluding: bool,
    ray_count: usize,
    pos: Point2,
    cfg: &FovConfig,
) -> Vec<usize> {
    let in_fov = |p: &Point2| cfg.covers(pos, *p);
    if !occluding {
        return (0..boundary.points.len())
            .filter(|&i| in_fov(&boundary.points[i]))
            .collect();
    }
    let hit = hit_segments(&boundary.segments, ray_count, pos, cfg);
    (0..boundary.points.len())
        .filter(|&i| in_fov(&boundary.points[i]))
        .filter(|&i| boundary.point_to_segment[i].iter().any(|&s| hit[s]))
        .collect()
}

/// Per segment: whether it is the nearest hit of some camera ray.
fn hit_segments(segments: &[Segment], ray_count: usize, pos: Point2, cfg: &FovConfig) -> Vec<bool> {
    let mut hit = vec![false; segments.len()];
    // Ray construction only fails for a degenerate ray, which cannot see anything.
    if let Ok(set) = rays(cfg, pos, ray_count) {
        for r in &set.rays {
            if let Some(s) = nearest_hit(r, segments) {
                hit[s] = true;
            }
        }
    }
    hit
}

/// Direct per-pose visibility in scenario `env`.
pub fn visible_points(pos: Point2, cfg: &FovConfig, env: &Scenario) -> Vec<usize> {
    visible_points_with(&env.boundary, !env.traversable, env.ray_count, pos, cfg)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableMeta {
    pub n_s: usize,
    pub seed: u64,
    pub ray_count: usize,
    /// Hash of everything else the table depends on: configurations,
    /// boundary, grid and occlusion mode.
    pub config_set_hash: String,
    pub n_cells: usize,
    pub n_points: usize,
}

impl TableMeta {
    pub fn for_scenario(env: &Scenario, configs: &[FovConfig]) -> Self {
        TableMeta {
            n_s: env.visibility.samples_per_cell,
            seed: env.visibility.seed,
            ray_count: env.ray_count,
            config_set_hash: config_set_hash(env, configs),
            n_cells: env.grid.len(),
            n_points: env.n_points(),
        }
    }
}

fn config_set_hash(env: &Scenario, configs: &[FovConfig]) -> String {
    let mut h = Sha256::new();
    let mut put = |v: f64| h.update(v.to_bits().to_le_bytes());
    for c in configs {
        put(c.theta);
        put(c.zoom);
        for v in &c.base_vertices {
            put(v.x);
            put(v.y);
        }
    }
    for p in &env.boundary.points {
        put(p.x);
        put(p.y);
    }
    let b = env.grid.bounds;
    for v in [
        b.xmin,
        b.ymin,
        b.xmax,
        b.ymax,
        env.grid.nx as f64,
        env.grid.ny as f64,
    ] {
        put(v);
    }
    put(if env.traversable { 1.0 } else { 0.0 });
    hex::encode(&h.finalize()[..16])
}

/// Learned visibility bits `b[c][p]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VisibilityTable {
    pub meta: TableMeta,
    bits: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableFile {
    meta: TableMeta,
    rows: Vec<String>,
}

impl VisibilityTable {
    /// Table from explicit rows (one per cell).
    pub fn from_rows(meta: TableMeta, rows: &[Vec<bool>]) -> Result<Self> {
        if rows.len() != meta.n_cells || rows.iter().any(|r| r.len() != meta.n_points) {
            return Err(Error::DimensionMismatch(format!(
                "table rows do not form a {} x {} matrix",
                meta.n_cells, meta.n_points
            )));
        }
        Ok(Self {
            meta,
            bits: rows.concat(),
        })
    }

    pub fn n_cells(&self) -> usize {
        self.meta.n_cells
    }

    pub fn n_points(&self) -> usize {
        self.meta.n_points
    }

    pub fn query(&self, c: usize, p: usize) -> Result<bool> {
        if c >= self.n_cells() {
            return Err(Error::OutOfRange {
                what: "cell",
                index: c,
                len: self.n_cells(),
            });
        }
        if p >= self.n_points() {
            return Err(Error::OutOfRange {
                what: "point",
                index: p,
                len: self.n_points(),
            });
        }
        Ok(self.get(c, p))
    }

    /// Unchecked lookup; panics on out-of-range indices.
    #[inline]
    pub fn get(&self, c: usize, p: usize) -> bool {
        assert!(p < self.n_points());
        self.bits[c * self.n_points() + p]
    }

    pub fn row(&self, c: usize) -> &[bool] {
        let n = self.n_points();
        &self.bits[c * n..(c + 1) * n]
    }

    /// Whether some closed cell containing `pos` has `p` in its row.
    pub fn visible_from(&self, grid: &Grid, pos: Point2, p: usize) -> bool {
        grid.cells_containing(pos).any(|c| self.get(c, p))
    }

    /// OR of the rows of every closed cell containing `pos`.
    pub fn row_at(&self, grid: &Grid, pos: Point2) -> Vec<bool> {
        let mut out = vec![false; self.n_points()];
        for c in grid.cells_containing(pos) {
            for (o, &b) in out.iter_mut().zip(self.row(c)) {
                *o |= b;
            }
        }
        out
    }

    /// Errors unless the table was learned for exactly this scenario.
    pub fn ensure_matches(&self, env: &Scenario, configs: &[FovConfig]) -> Result<()> {
        let want = TableMeta::for_scenario(env, configs);
        if self.meta != want {
            return Err(Error::TableMismatch(format!(
                "table meta {:?} differs from scenario meta {:?}",
                self.meta, want
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let rows = (0..self.n_cells())
            .map(|c| {
                self.row(c)
                    .iter()
                    .map(|&b| if b { '1' } else { '0' })
                    .collect()
            })
            .collect();
        let file = TableFile {
            meta: self.meta.clone(),
            rows,
        };
        serde_json::to_string_pretty(&file).expect("tables always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TableFile = serde_json::from_str(text)?;
        let rows = file
            .rows
            .iter()
            .map(|r| {
                r.chars()
                    .map(|ch| match ch {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(Error::invalid(format!("table row has character {other:?}"))),
                    })
                    .collect::<Result<Vec<bool>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(file.meta, &rows)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Sample `i` in `rect` for `cell`. Each sample consumes its own block of
/// generator words, so it depends only on `(seed, cell, i)`.
pub fn sample_position(seed: u64, cell: usize, i: usize, rect: &Rect) -> Point2 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cell as u64);
    rng.set_word_pos(4 * i as u128);
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    Point2::new(rect.xmin + u * rect.width(), rect.ymin + v * rect.height())
}

/// The `n_s` learning samples of `cell`.
pub fn cell_samples(env: &Scenario, cell: usize) -> Vec<Point2> {
    let rect = &env.grid.cells[cell].rect;
    (0..env.visibility.samples_per_cell)
        .map(|i| sample_position(env.visibility.seed, cell, i, rect))
        .collect()
}

fn learn_row(env: &Scenario, configs: &[FovConfig], cell: usize) -> Vec<bool> {
    let mut row = vec![false; env.n_points()];
    for pos in cell_samples(env, cell) {
        for cfg in configs {
            for p in visible_points(pos, cfg, env) {
                row[p] = true;
            }
        }
    }
    row
}

/// Learns the table on the global thread pool.
pub fn learn_table(env: &Scenario, configs: &[FovConfig]) -> Result<VisibilityTable> {
    let rows: Vec<Vec<bool>> = (0..env.grid.len())
        .into_par_iter()
        .map(|c| learn_row(env, configs, c))
        .collect();
    VisibilityTable::from_rows(TableMeta::for_scenario(env, configs), &rows)
}

/// Learns the table on at most `threads` worker threads.
pub fn learn_table_with_threads(
    env: &Scenario,
    configs: &[FovConfig],
    threads: usize,
) -> Result<VisibilityTable> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker threads: {e}")))?;
    pool.install(|| learn_table(env, configs))
}

/// Points newly or repeatedly covered at `pos` with `cfg` according to the
/// table: in the footprint and table-visible from a cell containing `pos`.
pub fn table_covered(
    env: &Scenario,
    vt: &VisibilityTable,
    pos: Point2,
    cfg: &FovConfig,
) -> Vec<usize> {
    let row = vt.row_at(&env.grid, pos);
    (0..env.n_points())
        .filter(|&p| row[p] && cfg.covers(pos, env.boundary.points[p]))
        .collect()
}
