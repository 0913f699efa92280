//! Isolines by marching squares over the triangulated grid.
//!
//! A vertex is "inside" when its value is at least the level. Each cell's
//! 4-bit corner case is refined by its diagonal: the piecewise-linear field
//! is `(f00 + f11)/2` at the cell centre, which is what decides the two
//! saddle cases. Crossings are placed by linear interpolation along cell
//! edges and along the diagonal, so every segment lies inside one triangle
//! and follows the field exactly.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Half, ScalarGrid, Triangle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Isoline {
    pub level: f64,
    pub polyline: Vec<[f64; 2]>,
}

impl Isoline {
    /// Whether the polyline returns to its start.
    pub fn is_closed(&self) -> bool {
        self.polyline.len() > 2 && self.polyline.first() == self.polyline.last()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IsolineSet {
    pub isolines: Vec<Isoline>,
}

impl IsolineSet {
    pub fn len(&self) -> usize {
        self.isolines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.isolines.is_empty()
    }

    pub fn levels(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.isolines.iter().map(|l| l.level).collect();
        out.dedup();
        out
    }
}

/// `n_levels` evenly spaced values strictly between the field's extremes.
pub fn default_levels(grid: &ScalarGrid, n_levels: usize) -> Vec<f64> {
    let (lo, hi) = grid.min_max();
    if !(hi > lo) {
        return Vec::new();
    }
    let step = (hi - lo) / (n_levels + 1) as f64;
    (1..=n_levels).map(|k| lo + k as f64 * step).collect()
}

/// Where a crossing sits. Crossings on a shared edge get the same key from
/// both sides, which is how segments are stitched together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Key {
    Vertex(usize, usize),
    /// Edge from `(ix, iy)` to `(ix + 1, iy)`.
    Horizontal(usize, usize),
    /// Edge from `(ix, iy)` to `(ix, iy + 1)`.
    Vertical(usize, usize),
    /// Cell diagonal from `(ix, iy)` to `(ix + 1, iy + 1)`.
    Diagonal(usize, usize),
}

struct Crossing {
    key: Key,
    point: [f64; 2],
}

fn crossing(
    grid: &ScalarGrid,
    a: (usize, usize),
    b: (usize, usize),
    level: f64,
    edge: Key,
) -> Crossing {
    let fa = grid.value(a.0, a.1);
    let fb = grid.value(b.0, b.1);
    if fa == level {
        return Crossing {
            key: Key::Vertex(a.0, a.1),
            point: grid.vertex(a.0, a.1),
        };
    }
    if fb == level {
        return Crossing {
            key: Key::Vertex(b.0, b.1),
            point: grid.vertex(b.0, b.1),
        };
    }
    let t = (level - fa) / (fb - fa);
    let pa = grid.vertex(a.0, a.1);
    let pb = grid.vertex(b.0, b.1);
    Crossing {
        key: edge,
        point: [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])],
    }
}

/// Segment of the level set inside one triangle, if any.
fn triangle_segment(grid: &ScalarGrid, t: Triangle, level: f64) -> Option<(Crossing, Crossing)> {
    let (ix, iy) = (t.ix, t.iy);
    let v00 = (ix, iy);
    let v10 = (ix + 1, iy);
    let v11 = (ix + 1, iy + 1);
    let v01 = (ix, iy + 1);
    let diag = Key::Diagonal(ix, iy);
    // corners in order with the key of the edge to the next corner
    let corners = match t.half {
        Half::Lower => [
            (v00, v10, Key::Horizontal(ix, iy)),
            (v10, v11, Key::Vertical(ix + 1, iy)),
            (v11, v00, diag),
        ],
        Half::Upper => [
            (v00, v11, diag),
            (v11, v01, Key::Horizontal(ix, iy + 1)),
            (v01, v00, Key::Vertical(ix, iy)),
        ],
    };
    let inside = |v: (usize, usize)| grid.value(v.0, v.1) >= level;
    let cuts: Vec<Crossing> = corners
        .iter()
        .filter(|(a, b, _)| inside(*a) != inside(*b))
        .map(|&(a, b, key)| crossing(grid, a, b, level, key))
        .collect();
    match <[Crossing; 2]>::try_from(cuts) {
        Ok([p, q]) if p.key != q.key => Some((p, q)),
        _ => None,
    }
}

/// Marching-squares case of a cell: bit `k` set when corner `k` of
/// `(0,0), (1,0), (1,1), (0,1)` is inside.
pub fn cell_case(grid: &ScalarGrid, ix: usize, iy: usize, level: f64) -> u8 {
    [(ix, iy), (ix + 1, iy), (ix + 1, iy + 1), (ix, iy + 1)]
        .iter()
        .enumerate()
        .fold(0u8, |acc, (k, &(x, y))| {
            acc | (u8::from(grid.value(x, y) >= level) << k)
        })
}

fn segments(grid: &ScalarGrid, level: f64) -> Vec<(Key, Key, [f64; 2], [f64; 2])> {
    let g = grid.resolution;
    let mut out = Vec::new();
    for iy in 0..g {
        for ix in 0..g {
            let case = cell_case(grid, ix, iy, level);
            if case == 0 || case == 15 {
                continue;
            }
            for half in [Half::Lower, Half::Upper] {
                if let Some((p, q)) = triangle_segment(grid, Triangle { ix, iy, half }, level) {
                    out.push((p.key, q.key, p.point, q.point));
                }
            }
        }
    }
    out
}

/// Stitch segments sharing crossing keys into polylines. Open chains are
/// walked from their ends first, then the remaining closed loops.
fn join(segs: Vec<(Key, Key, [f64; 2], [f64; 2])>) -> Vec<Vec<[f64; 2]>> {
    let mut points: HashMap<Key, [f64; 2]> = HashMap::new();
    let mut incident: HashMap<Key, Vec<usize>> = HashMap::new();
    for (s, (a, b, pa, pb)) in segs.iter().enumerate() {
        points.entry(*a).or_insert(*pa);
        points.entry(*b).or_insert(*pb);
        incident.entry(*a).or_default().push(s);
        incident.entry(*b).or_default().push(s);
    }
    let mut used = vec![false; segs.len()];
    let walk = |start: Key, used: &mut Vec<bool>| -> Vec<[f64; 2]> {
        let mut line = vec![points[&start]];
        let mut at = start;
        while let Some(&s) = incident[&at].iter().find(|&&s| !used[s]) {
            used[s] = true;
            let (a, b, _, _) = segs[s];
            at = if a == at { b } else { a };
            line.push(points[&at]);
        }
        line
    };
    let mut lines = Vec::new();
    // chain ends in first-seen order
    let mut ends = Vec::new();
    for (a, b, _, _) in &segs {
        for k in [a, b] {
            if incident[k].len() % 2 == 1 && !ends.contains(k) {
                ends.push(*k);
            }
        }
    }
    for k in ends {
        if incident[&k].iter().any(|&s| !used[s]) {
            lines.push(walk(k, &mut used));
        }
    }
    for s in 0..segs.len() {
        if !used[s] {
            lines.push(walk(segs[s].0, &mut used));
        }
    }
    lines
}

/// Isolines of the grid at the given levels. Levels outside the value range
/// contribute nothing.
pub fn marching_squares(grid: &ScalarGrid, levels: &[f64]) -> IsolineSet {
    let isolines = levels
        .iter()
        .flat_map(|&level| {
            join(segments(grid, level))
                .into_iter()
                .map(move |polyline| Isoline { level, polyline })
        })
        .collect();
    IsolineSet { isolines }
}
