use crate::geometry::{CalphaChain, Vec3, CANONICAL_BOND};
use std::collections::HashMap;

type Cell = (i64, i64, i64);

/// Uniform hash grid for fixed-radius neighbour queries. Buckets are kept
/// between uses to avoid reallocating in Monte Carlo loops.
#[derive(Debug, Default, Clone)]
pub struct SpatialGrid {
    cell: f64,
    buckets: HashMap<Cell, Vec<usize>>,
}

impl SpatialGrid {
    pub fn new(cell: f64) -> Self {
        Self { cell, buckets: HashMap::new() }
    }

    fn key(&self, p: &Vec3) -> Cell {
        (
            (p.x / self.cell).floor() as i64,
            (p.y / self.cell).floor() as i64,
            (p.z / self.cell).floor() as i64,
        )
    }

    pub fn clear(&mut self) {
        // A wandering chain keeps visiting new cells; drop stale ones now and then.
        if self.buckets.len() > 4096 {
            self.buckets.clear();
        }
        for b in self.buckets.values_mut() {
            b.clear();
        }
    }

    pub fn insert(&mut self, p: &Vec3, index: usize) {
        let key = self.key(p);
        self.buckets.entry(key).or_default().push(index);
    }

    /// Calls `f` with every stored index in the 27 cells around `p`; stops
    /// early when `f` returns `false`. Returns `false` if stopped.
    pub fn for_each_near(&self, p: &Vec3, mut f: impl FnMut(usize) -> bool) -> bool {
        let (x, y, z) = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(b) = self.buckets.get(&(x + dx, y + dy, z + dz)) {
                        for &i in b {
                            if !f(i) {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }
}

/// `|r_i - r_k| > min_distance` for all `|i - k| ≥ 2`.
pub fn self_avoiding_with(points: &[Vec3], min_distance: f64, grid: &mut SpatialGrid) -> bool {
    if min_distance <= 0.0 {
        return true;
    }
    let limit = min_distance * min_distance;
    grid.cell = min_distance;
    grid.clear();
    for (i, p) in points.iter().enumerate() {
        let ok = grid.for_each_near(p, |k| i - k < 2 || (p - points[k]).norm_squared() > limit);
        if !ok {
            return false;
        }
        grid.insert(p, i);
    }
    true
}

/// The self-avoidance condition with the canonical 3.8 Å exclusion distance.
pub fn self_avoidance_ok(chain: &CalphaChain) -> bool {
    self_avoiding_with(&chain.vertices, CANONICAL_BOND, &mut SpatialGrid::new(CANONICAL_BOND))
}

/// Checks only pairs between `points[..split]` and `points[split..]`: after a
/// rigid motion of the tail these are the only distances that change.
pub(crate) fn cross_avoiding(points: &[Vec3], split: usize, min_distance: f64, grid: &mut SpatialGrid) -> bool {
    let limit = min_distance * min_distance;
    let (head, tail) = points.split_at(split);
    if head.is_empty() || tail.is_empty() || min_distance <= 0.0 {
        return true;
    }
    grid.cell = min_distance;
    grid.clear();
    // Index the smaller side, query with the larger.
    let (stored, stored_base, queried, queried_base) =
        if head.len() <= tail.len() { (head, 0, tail, split) } else { (tail, split, head, 0) };
    for (i, p) in stored.iter().enumerate() {
        grid.insert(p, stored_base + i);
    }
    queried.iter().enumerate().all(|(j, q)| {
        let qi = queried_base + j;
        grid.for_each_near(q, |k| qi.abs_diff(k) < 2 || (q - points[k]).norm_squared() > limit)
    })
}
