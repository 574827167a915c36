//! Convex hulls of wrench point sets in `(fx, fy, m)` space.
//!
//! Point sets are frequently lower-dimensional (a two-actuator arm maps its
//! pressure square onto a polygon), so the affine rank is detected first and
//! the hull is built in that subspace: a point, a segment, a planar polygon,
//! or a full polytope with outward-oriented triangular facets.

use std::collections::HashMap;

use crate::lie::Wrench;
use crate::qp::{nearest_point, NearestPoint};

type P3 = [f64; 3];

fn sub(a: &P3, b: &P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &P3, b: &P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &P3, b: &P3) -> P3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: &P3) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: &P3, s: f64) -> P3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Triangular facet with outward unit normal; `normal · x <= offset` inside.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    /// Indices into [`WrenchHull::vertices`], counter-clockwise seen from outside.
    pub indices: [usize; 3],
    pub normal: [f64; 3],
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WrenchHull {
    vertices: Vec<Wrench>,
    /// Index of the input point each vertex came from.
    sources: Vec<usize>,
    facets: Vec<Facet>,
    rank: usize,
    diameter: f64,
}

impl WrenchHull {
    /// Builds the hull of `points`. Returns `None` for an empty input.
    pub fn build(points: &[Wrench]) -> Option<Self> {
        if points.is_empty() {
            return None;
        }
        let pts: Vec<P3> = points.iter().map(|w| w.as_array()).collect();
        let extent = bounding_extent(&pts);
        let tol = 1e-10 * extent.max(1e-300);

        let o = 0usize;
        let (i1, d1) = farthest(&pts, |p| norm(&sub(p, &pts[o])));
        if d1 <= tol {
            return Some(Self::from_indices(&pts, vec![o], Vec::new(), 0));
        }
        let e1 = scale(&sub(&pts[i1], &pts[o]), 1.0 / d1);
        let off_line = |p: &P3| {
            let v = sub(p, &pts[o]);
            norm(&sub(&v, &scale(&e1, dot(&v, &e1))))
        };
        let (i2, d2) = farthest(&pts, off_line);
        if d2 <= tol {
            let proj: Vec<f64> = pts.iter().map(|p| dot(&sub(p, &pts[o]), &e1)).collect();
            let lo = (0..pts.len()).min_by(|&a, &b| proj[a].total_cmp(&proj[b])).unwrap();
            let hi = (0..pts.len()).max_by(|&a, &b| proj[a].total_cmp(&proj[b])).unwrap();
            return Some(Self::from_indices(&pts, vec![lo, hi], Vec::new(), 1));
        }
        let v2 = sub(&pts[i2], &pts[o]);
        let e2 = {
            let w = sub(&v2, &scale(&e1, dot(&v2, &e1)));
            scale(&w, 1.0 / norm(&w))
        };
        let n = cross(&e1, &e2);
        let (i3, d3) = farthest(&pts, |p| dot(&sub(p, &pts[o]), &n).abs());
        if d3 <= tol {
            let uv: Vec<[f64; 2]> = pts
                .iter()
                .map(|p| {
                    let v = sub(p, &pts[o]);
                    [dot(&v, &e1), dot(&v, &e2)]
                })
                .collect();
            let ring = monotone_chain(&uv, tol);
            return Some(Self::from_indices(&pts, ring, Vec::new(), 2));
        }
        let (ring, faces) = quickhull3(&pts, [o, i1, i2, i3], tol);
        Some(Self::from_indices(&pts, ring, faces, 3))
    }

    fn from_indices(pts: &[P3], used: Vec<usize>, faces: Vec<[usize; 3]>, rank: usize) -> Self {
        let remap: HashMap<usize, usize> = used.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let vertices: Vec<Wrench> = used.iter().map(|&i| Wrench::from_array(pts[i])).collect();
        let facets = faces
            .into_iter()
            .map(|[a, b, c]| {
                let nrm = cross(&sub(&pts[b], &pts[a]), &sub(&pts[c], &pts[a]));
                let unit = scale(&nrm, 1.0 / norm(&nrm));
                Facet { indices: [remap[&a], remap[&b], remap[&c]], normal: unit, offset: dot(&unit, &pts[a]) }
            })
            .collect();
        let mut diameter = 0.0f64;
        for a in &vertices {
            for b in &vertices {
                diameter = diameter.max((*a - *b).norm());
            }
        }
        Self { vertices, sources: used, facets, rank, diameter }
    }

    pub fn vertices(&self) -> &[Wrench] {
        &self.vertices
    }

    /// For each vertex, the index of the input point it was taken from.
    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    /// Outward facets; empty unless the hull is full-dimensional.
    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Affine dimension of the point set (0 to 3).
    pub fn degenerate_rank(&self) -> usize {
        self.rank
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Volume of a full-dimensional hull; zero otherwise.
    pub fn volume(&self) -> f64 {
        if self.rank < 3 {
            return 0.0;
        }
        let c = self.vertices[0].as_array();
        self.facets
            .iter()
            .map(|f| {
                let [a, b, d] = f.indices.map(|i| sub(&self.vertices[i].as_array(), &c));
                dot(&a, &cross(&b, &d)) / 6.0
            })
            .sum()
    }

    /// Nearest point of the hull to `query`, under per-axis weights.
    pub fn nearest(&self, query: &Wrench, weights: &[f64; 3]) -> NearestPoint {
        let s = weights.map(f64::sqrt);
        let verts: Vec<P3> = self.vertices.iter().map(|v| [v.fx * s[0], v.fy * s[1], v.m * s[2]]).collect();
        let q = [query.fx * s[0], query.fy * s[1], query.m * s[2]];
        let mut np = nearest_point(&verts, &q);
        np.point = [np.point[0] / s[0], np.point[1] / s[1], np.point[2] / s[2]];
        np
    }

    /// Largest signed facet distance; positive outside. Full-rank hulls only.
    pub fn max_facet_violation(&self, query: &Wrench) -> Option<f64> {
        if self.rank < 3 {
            return None;
        }
        let q = query.as_array();
        self.facets.iter().map(|f| dot(&f.normal, &q) - f.offset).reduce(f64::max)
    }
}

/// Euclidean distance from `point` to `hull`.
pub fn hull_distance(hull: &WrenchHull, point: &Wrench) -> f64 {
    hull.nearest(point, &[1.0; 3]).distance
}

fn bounding_extent(pts: &[P3]) -> f64 {
    let mut ext = 0.0f64;
    for k in 0..3 {
        let lo = pts.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
        ext = ext.max(hi - lo);
    }
    ext
}

fn farthest(pts: &[P3], f: impl Fn(&P3) -> f64) -> (usize, f64) {
    pts.iter()
        .enumerate()
        .map(|(i, p)| (i, f(p)))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// Indices of the convex polygon of planar points, counter-clockwise.
pub fn convex_polygon(points: &[[f64; 2]]) -> Vec<usize> {
    if points.is_empty() {
        return Vec::new();
    }
    let mut ext = 0.0f64;
    for k in 0..2 {
        let lo = points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
        ext = ext.max(hi - lo);
    }
    monotone_chain(points, 1e-12 * ext)
}

/// Andrew's monotone chain; returns indices counter-clockwise without collinear points.
fn monotone_chain(uv: &[[f64; 2]], tol: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..uv.len()).collect();
    idx.sort_by(|&a, &b| uv[a][0].total_cmp(&uv[b][0]).then(uv[a][1].total_cmp(&uv[b][1])));
    idx.dedup_by(|a, b| (uv[*a][0] - uv[*b][0]).abs() <= tol && (uv[*a][1] - uv[*b][1]).abs() <= tol);
    let turn = |o: usize, a: usize, b: usize| {
        (uv[a][0] - uv[o][0]) * (uv[b][1] - uv[o][1]) - (uv[a][1] - uv[o][1]) * (uv[b][0] - uv[o][0])
    };
    let area_tol = tol * tol;
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> =
            if pass == 0 { Box::new(idx.iter()) } else { Box::new(idx.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= area_tol {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Incremental 3D hull seeded with a non-degenerate tetrahedron.
/// Returns the used point indices and the facets (as point indices).
fn quickhull3(pts: &[P3], seed: [usize; 4], tol: f64) -> (Vec<usize>, Vec<[usize; 3]>) {
    let [a, b, c, d] = seed;
    let interior = scale(
        &[
            pts[a][0] + pts[b][0] + pts[c][0] + pts[d][0],
            pts[a][1] + pts[b][1] + pts[c][1] + pts[d][1],
            pts[a][2] + pts[b][2] + pts[c][2] + pts[d][2],
        ],
        0.25,
    );
    let orient = |f: [usize; 3]| -> [usize; 3] {
        let n = cross(&sub(&pts[f[1]], &pts[f[0]]), &sub(&pts[f[2]], &pts[f[0]]));
        if dot(&n, &sub(&interior, &pts[f[0]])) > 0.0 {
            [f[0], f[2], f[1]]
        } else {
            f
        }
    };
    let mut faces: Vec<[usize; 3]> = vec![orient([a, b, c]), orient([a, b, d]), orient([a, c, d]), orient([b, c, d])];

    let signed = |f: &[usize; 3], p: &P3| {
        let n = cross(&sub(&pts[f[1]], &pts[f[0]]), &sub(&pts[f[2]], &pts[f[0]]));
        dot(&n, &sub(p, &pts[f[0]])) / norm(&n)
    };

    // Insert farthest-first for well-shaped intermediate hulls.
    let mut order: Vec<usize> = (0..pts.len()).filter(|i| !seed.contains(i)).collect();
    order.sort_by(|&x, &y| norm(&sub(&pts[y], &interior)).total_cmp(&norm(&sub(&pts[x], &interior))));

    for p in order {
        let visible: Vec<bool> = faces.iter().map(|f| signed(f, &pts[p]) > tol).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edge_owner: HashMap<(usize, usize), bool> = HashMap::new();
        for (f, &vis) in faces.iter().zip(&visible) {
            for k in 0..3 {
                edge_owner.insert((f[k], f[(k + 1) % 3]), vis);
            }
        }
        let mut new_faces = Vec::new();
        for (f, &vis) in faces.iter().zip(&visible) {
            if !vis {
                continue;
            }
            for k in 0..3 {
                let (u, v) = (f[k], f[(k + 1) % 3]);
                if edge_owner.get(&(v, u)) == Some(&false) {
                    new_faces.push([u, v, p]);
                }
            }
        }
        let mut kept: Vec<[usize; 3]> = faces.iter().zip(&visible).filter(|(_, &vis)| !vis).map(|(f, _)| *f).collect();
        kept.extend(new_faces);
        faces = kept;
    }

    let mut used: Vec<usize> = faces.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    (used, faces)
}
