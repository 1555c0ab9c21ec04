//! Tetrahedral cells of a configuration and their flat development.
//!
//! Cell `i` spans the hinge segments `gamma_i +- L b_i` and
//! `gamma_{i+1} +- L b_{i+1}`, with vertices
//!
//! ```text
//! A = gamma_i - L b_i       B = gamma_i + L b_i
//! C = gamma_{i+1} - L b_{i+1}   D = gamma_{i+1} + L b_{i+1}
//! ```
//!
//! The net lays each cell out as the strip `ABC, BCD, BDA, DAC` and joins
//! `DAC` of cell `i` to `ABC` of cell `i + 1` across their common hinge.
//! Edge `AC` of every cell and the last hinge are left open and carry the
//! glue margins.

use alloc::vec::Vec;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::model::{gamma_from_b, KaleidocycleState, Vec3};

pub type Point2 = Vector2<f64>;

const MIN_VOLUME: f64 = 1e-12;

/// Four vertices and four outward triangles per cell; vertices are not shared.
#[derive(Debug, Clone, PartialEq)]
pub struct TetraMesh {
    pub vertices: Vec<Vec3>,
    /// Zero-based vertex indices, counter-clockwise seen from outside.
    pub faces: Vec<[usize; 3]>,
}

impl TetraMesh {
    pub fn num_cells(&self) -> usize {
        self.vertices.len() / 4
    }

    /// The `[A, B, C, D]` vertices of cell `i`.
    pub fn cell(&self, i: usize) -> [Vec3; 4] {
        let v = &self.vertices[4 * i..4 * i + 4];
        [v[0], v[1], v[2], v[3]]
    }

    /// The six edge lengths of cell `i`, ascending.
    pub fn cell_edge_lengths(&self, i: usize) -> [f64; 6] {
        let v = self.cell(i);
        let mut out = [0.0; 6];
        let mut k = 0;
        for a in 0..4 {
            for b in a + 1..4 {
                out[k] = (v[a] - v[b]).norm();
                k += 1;
            }
        }
        out.sort_by(|x, y| x.total_cmp(y));
        out
    }

    /// Largest deviation of any cell's sorted edge lengths from cell 0's.
    pub fn congruence_defect(&self) -> f64 {
        if self.num_cells() == 0 {
            return 0.0;
        }
        let reference = self.cell_edge_lengths(0);
        (1..self.num_cells())
            .flat_map(|i| {
                let e = self.cell_edge_lengths(i);
                (0..6).map(move |k| (e[k] - reference[k]).abs())
            })
            .fold(0.0, f64::max)
    }
}

fn cell_vertices(state: &KaleidocycleState, half_length: f64) -> Result<Vec<[Vec3; 4]>> {
    if !(half_length >= 0.0) || !half_length.is_finite() {
        return Err(Error::InvalidParameter(alloc::format!("hinge half length = {half_length}")));
    }
    let line = gamma_from_b(state, Vec3::zeros())?;
    let n = state.n();
    let pts = line.points();
    let mut cells = Vec::with_capacity(n);
    for i in 0..n {
        let (g0, g1) = (pts[i], pts[(i + 1) % n]);
        let (b0, b1) = (state.hinge(i), state.hinge(i + 1));
        let cell = [g0 - b0 * half_length, g0 + b0 * half_length, g1 - b1 * half_length, g1 + b1 * half_length];
        let volume = (cell[1] - cell[0]).cross(&(cell[2] - cell[0])).dot(&(cell[3] - cell[0])).abs() / 6.0;
        if volume < MIN_VOLUME {
            return Err(Error::Degenerate(alloc::format!("cell {i} has volume {volume:e}")));
        }
        cells.push(cell);
    }
    Ok(cells)
}

/// Tetrahedral cells of `state` with hinge segments of half length `half_length`.
pub fn tetra_mesh(state: &KaleidocycleState, half_length: f64) -> Result<TetraMesh> {
    let cells = cell_vertices(state, half_length)?;
    let mut vertices = Vec::with_capacity(4 * cells.len());
    let mut faces = Vec::with_capacity(4 * cells.len());
    for (i, cell) in cells.iter().enumerate() {
        vertices.extend_from_slice(cell);
        for (skip, tri) in [(3, [0, 1, 2]), (2, [0, 1, 3]), (1, [0, 2, 3]), (0, [1, 2, 3])] {
            let [p, q, r] = tri.map(|k| cell[k]);
            let normal = (q - p).cross(&(r - p));
            let mut face = tri.map(|k| 4 * i + k);
            if normal.dot(&(cell[skip] - p)) > 0.0 {
                face.swap(1, 2);
            }
            faces.push(face);
        }
    }
    Ok(TetraMesh { vertices, faces })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Fold,
    Cut,
}

/// One face of the development.
#[derive(Debug, Clone, PartialEq)]
pub struct NetFace {
    pub cell: usize,
    /// Cell-local vertex labels, 0..4 for `A..D`.
    pub labels: [usize; 3],
    pub points: [Point2; 3],
    /// The three 3D positions the face was unfolded from.
    pub source: [Vec3; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetEdge {
    pub a: Point2,
    pub b: Point2,
    pub kind: EdgeKind,
}

/// A flat band of triangles with fold and cut tags and glue tabs.
#[derive(Debug, Clone, PartialEq)]
pub struct NetLayout {
    pub faces: Vec<NetFace>,
    pub edges: Vec<NetEdge>,
    /// Glue tabs, each a quadrilateral whose first two points lie on a cut edge.
    pub margins: Vec<[Point2; 4]>,
    /// Pairs of faces whose interiors overlap in the plane.
    pub overlaps: Vec<(usize, usize)>,
}

impl NetLayout {
    /// Largest difference between a flat edge length and its 3D counterpart.
    pub fn isometry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for f in &self.faces {
            for k in 0..3 {
                let l = (k + 1) % 3;
                let flat = (f.points[k] - f.points[l]).norm();
                let solid = (f.source[k] - f.source[l]).norm();
                worst = worst.max((flat - solid).abs());
            }
        }
        worst
    }

    /// Axis-aligned bounds `(min, max)` of faces and margins.
    pub fn bounds(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let all = self.faces.iter().flat_map(|f| f.points.iter()).chain(self.margins.iter().flat_map(|m| m.iter()));
        for p in all {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }
}

// labels of the strip triangles, each sharing its first two labels'
// edge with the previous triangle
const STRIP: [[usize; 3]; 4] = [[0, 1, 2], [1, 2, 3], [1, 3, 0], [3, 0, 2]];

/// Unfold the cells into a single band of `4 n` triangles.
pub fn unfold_net(state: &KaleidocycleState, half_length: f64, margin_width: f64) -> Result<NetLayout> {
    if !(margin_width >= 0.0) || !margin_width.is_finite() {
        return Err(Error::InvalidParameter(alloc::format!("margin width = {margin_width}")));
    }
    let cells = cell_vertices(state, half_length)?;
    let n = cells.len();
    let mut faces: Vec<NetFace> = Vec::with_capacity(4 * n);
    let mut edges = Vec::new();
    let mut margins = Vec::new();

    for (i, cell) in cells.iter().enumerate() {
        for (k, labels) in STRIP.iter().enumerate() {
            let source = labels.map(|l| cell[l]);
            let points = if faces.is_empty() {
                let ab = (source[1] - source[0]).norm();
                let p0 = Point2::zeros();
                let p1 = Point2::new(ab, 0.0);
                [p0, p1, apex(&p0, &p1, &source, None)]
            } else {
                let prev = faces.last().unwrap();
                // the shared edge: for k > 0 it is the previous triangle's
                // labels 1 and 2; across a hinge, C and D of the previous cell
                let (p, q) = if k == 0 {
                    (find(prev, 2), find(prev, 3))
                } else {
                    (find(prev, labels[0]), find(prev, labels[1]))
                };
                let away = prev.points.iter().find(|pt| **pt != p && **pt != q).copied();
                [p, q, apex(&p, &q, &source, away.as_ref())]
            };
            if !faces.is_empty() {
                edges.push(NetEdge { a: points[0], b: points[1], kind: EdgeKind::Fold });
            }
            faces.push(NetFace { cell: i, labels: *labels, points, source });
        }
    }

    for (idx, f) in faces.iter().enumerate() {
        let k = idx % 4;
        let cell_last = idx + 1 == faces.len();
        // every triangle's second and third edges are cut unless the next
        // triangle is attached there
        let attached_next = |a: usize, b: usize| -> bool {
            if cell_last {
                return false;
            }
            let next = &faces[idx + 1];
            let (p, q) = (next.points[0], next.points[1]);
            (f.points[a] == p && f.points[b] == q) || (f.points[a] == q && f.points[b] == p)
        };
        for (a, b) in [(1, 2), (2, 0)] {
            if !attached_next(a, b) {
                edges.push(NetEdge { a: f.points[a], b: f.points[b], kind: EdgeKind::Cut });
            }
        }
        if idx == 0 {
            edges.push(NetEdge { a: f.points[0], b: f.points[1], kind: EdgeKind::Cut });
        }
        if margin_width > 0.0 {
            // AC of the last strip triangle closes the cell; the final
            // hinge closes the ring
            if k == 3 {
                let (a, c) = (f.points[1], f.points[2]);
                margins.push(tab(&a, &c, &f.points[0], margin_width));
            }
            if cell_last {
                let (d, c) = (f.points[0], f.points[2]);
                margins.push(tab(&d, &c, &f.points[1], margin_width));
            }
        }
    }

    let overlaps = find_overlaps(&faces);
    Ok(NetLayout { faces, edges, margins, overlaps })
}

fn find(face: &NetFace, label: usize) -> Point2 {
    let k = face.labels.iter().position(|l| *l == label).expect("label present");
    face.points[k]
}

/// Third vertex of a triangle on edge `p q` with the 3D side lengths of
/// `source`, placed on the side opposite to `away`.
fn apex(p: &Point2, q: &Point2, source: &[Vec3; 3], away: Option<&Point2>) -> Point2 {
    let d = (source[1] - source[0]).norm();
    let r0 = (source[2] - source[0]).norm();
    let r1 = (source[2] - source[1]).norm();
    let u = (q - p) / (q - p).norm();
    let normal = Point2::new(-u.y, u.x);
    let along = (r0 * r0 - r1 * r1 + d * d) / (2.0 * d);
    let across = libm::sqrt((r0 * r0 - along * along).max(0.0));
    let side = match away {
        Some(w) if (w - p).dot(&normal) > 0.0 => -1.0,
        _ => 1.0,
    };
    p + u * along + normal * (across * side)
}

/// Trapezoidal tab on edge `a b`, on the side away from `opposite`.
fn tab(a: &Point2, b: &Point2, opposite: &Point2, width: f64) -> [Point2; 4] {
    let u = (b - a) / (b - a).norm();
    let mut normal = Point2::new(-u.y, u.x);
    if (opposite - a).dot(&normal) > 0.0 {
        normal = -normal;
    }
    let inset = width.min(0.25 * (b - a).norm());
    [*a, *b, b + normal * width - u * inset, a + normal * width + u * inset]
}

fn find_overlaps(faces: &[NetFace]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..faces.len() {
        for j in i + 1..faces.len() {
            if triangles_overlap(&faces[i].points, &faces[j].points) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Separating-axis test; triangles that only touch do not overlap.
fn triangles_overlap(s: &[Point2; 3], t: &[Point2; 3]) -> bool {
    let scale = s.iter().chain(t.iter()).map(|p| p.norm()).fold(1.0, f64::max);
    let eps = 1e-9 * scale;
    for tri in [s, t] {
        for k in 0..3 {
            let e = tri[(k + 1) % 3] - tri[k];
            let axis = Point2::new(-e.y, e.x);
            let (a0, a1) = extent(s, &axis);
            let (b0, b1) = extent(t, &axis);
            let len = axis.norm();
            if a1 <= b0 + eps * len || b1 <= a0 + eps * len {
                return false;
            }
        }
    }
    true
}

fn extent(tri: &[Point2; 3], axis: &Point2) -> (f64, f64) {
    let v = tri.map(|p| p.dot(axis));
    (v[0].min(v[1]).min(v[2]), v[0].max(v[1]).max(v[2]))
}
