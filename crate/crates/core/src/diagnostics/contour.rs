//! Zero level set of a nodal 2D field by marching squares.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::spectral::{GridSpec, ScalarField};

/// One polyline of a [`Contour`], as a range of its points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    pub start: usize,
    pub len: usize,
    pub closed: bool,
}

/// Interface `{u = 0}` sampled at the crossings of grid edges.
///
/// Polylines are oriented with `Ω⁺ = {u > 0}` on the left; normals point from
/// `Ω⁺` into `Ω⁻`. Arc-length weights split every segment between its two
/// ends; open polylines, which end one half cell short of the wall, are
/// extended to the wall along their end segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour<T> {
    pub points: Vec<[T; 2]>,
    pub normals: Vec<[T; 2]>,
    /// Per-point curvature; empty until computed.
    pub curvature: Vec<T>,
    pub weights: Vec<T>,
    pub components: Vec<Component>,
}

impl<T: Real> Contour<T> {
    /// Interface measure.
    pub fn length(&self) -> T {
        self.weights.iter().copied().sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Arc-length weighted mean of per-point values.
    pub fn weighted_mean(&self, values: &[T]) -> T {
        let total = self.length();
        self.weights.iter().zip(values).map(|(&w, &v)| w * v).sum::<T>() / total
    }

    pub fn with_curvature(mut self, curvature: Vec<T>) -> Self {
        self.curvature = curvature;
        self
    }
}

/// Edge identifier: (axis of the edge, lower node flat index).
type EdgeKey = (u8, usize);

pub fn extract_interface<T: Real>(u: &ScalarField<T>) -> Result<Contour<T>> {
    let grid = u.grid();
    if grid.dim() != 2 {
        return Err(Error::UnsupportedDimension(grid.dim()));
    }
    if !u.is_nodal() {
        return Err(Error::InvalidParameter("contouring needs nodal values".into()));
    }
    let [nx, ny] = [grid.counts()[0], grid.counts()[1]];
    let v = u.values();
    let positive = |i: usize, j: usize| v[i * ny + j] >= T::zero();
    let value = |i: usize, j: usize| v[i * ny + j];

    // crossing point of an edge, by linear interpolation
    let crossing = |key: EdgeKey| -> [T; 2] {
        let (axis, flat) = key;
        let (i, j) = (flat / ny, flat % ny);
        let (i2, j2) = if axis == 0 { (i + 1, j) } else { (i, j + 1) };
        let (a, b) = (value(i, j), value(i2, j2));
        let t = a / (a - b);
        let p0 = [grid.coordinate(0, i), grid.coordinate(1, j)];
        let p1 = [grid.coordinate(0, i2), grid.coordinate(1, j2)];
        [p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])]
    };

    // directed segments keyed by their start edge
    let mut next: HashMap<EdgeKey, EdgeKey> = HashMap::new();
    let mut has_incoming: HashMap<EdgeKey, bool> = HashMap::new();
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            // corners counter-clockwise: (i,j), (i+1,j), (i+1,j+1), (i,j+1)
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let signs = corners.map(|(a, b)| positive(a, b));
            let case = signs
                .iter()
                .enumerate()
                .fold(0u8, |acc, (k, &s)| acc | ((s as u8) << k));
            if case == 0 || case == 15 {
                continue;
            }
            // edge e connects corner e and corner e+1
            let edges: [EdgeKey; 4] = [
                (0, i * ny + j),
                (1, (i + 1) * ny + j),
                (0, i * ny + j + 1),
                (1, i * ny + j),
            ];
            let crossed: Vec<usize> = (0..4).filter(|&e| signs[e] != signs[(e + 1) % 4]).collect();
            let pairs: Vec<(usize, usize)> = if crossed.len() == 2 {
                vec![(crossed[0], crossed[1])]
            } else {
                // saddle: decide connectivity from the cell-centre average
                let centre = corners.iter().map(|&(a, b)| value(a, b)).sum::<T>() * T::lit(0.25);
                let centre_positive = centre >= T::zero();
                // pair each edge with the neighbour that isolates a corner of
                // the sign opposite to the centre
                if signs[1] != centre_positive {
                    vec![(0, 1), (2, 3)]
                } else {
                    vec![(3, 0), (1, 2)]
                }
            };
            for (ea, eb) in pairs {
                let (pa, pb) = (crossing(edges[ea]), crossing(edges[eb]));
                // a corner off the segment with known sign fixes the orientation
                let shared = if (ea + 1) % 4 == eb {
                    eb
                } else if (eb + 1) % 4 == ea {
                    ea
                } else {
                    0
                };
                let (ci, cj) = corners[shared];
                let q = [grid.coordinate(0, ci), grid.coordinate(1, cj)];
                let cross = (pb[0] - pa[0]) * (q[1] - pa[1]) - (pb[1] - pa[1]) * (q[0] - pa[0]);
                let q_left = cross > T::zero();
                let (from, to) = if q_left == signs[shared] {
                    (edges[ea], edges[eb])
                } else {
                    (edges[eb], edges[ea])
                };
                next.insert(from, to);
                has_incoming.insert(to, true);
            }
        }
    }
    if next.is_empty() {
        return Err(Error::NoInterface);
    }

    let mut keys: Vec<EdgeKey> = next.keys().copied().collect();
    keys.sort_unstable();
    let mut visited: HashMap<EdgeKey, bool> = HashMap::new();
    let mut chains: Vec<(Vec<EdgeKey>, bool)> = Vec::new();
    // open chains start where nothing arrives
    for &k in &keys {
        if has_incoming.contains_key(&k) || visited.contains_key(&k) {
            continue;
        }
        let mut chain = vec![k];
        visited.insert(k, true);
        let mut cur = k;
        while let Some(&n) = next.get(&cur) {
            chain.push(n);
            visited.insert(n, true);
            cur = n;
        }
        chains.push((chain, false));
    }
    for &k in &keys {
        if visited.contains_key(&k) {
            continue;
        }
        let mut chain = vec![k];
        visited.insert(k, true);
        let mut cur = k;
        while let Some(&n) = next.get(&cur) {
            if n == k {
                break;
            }
            chain.push(n);
            visited.insert(n, true);
            cur = n;
        }
        chains.push((chain, true));
    }

    let mut contour = Contour {
        points: Vec::new(),
        normals: Vec::new(),
        curvature: Vec::new(),
        weights: Vec::new(),
        components: Vec::new(),
    };
    let half = T::lit(0.5);
    for (chain, closed) in chains {
        let pts: Vec<[T; 2]> = chain.iter().map(|&k| crossing(k)).collect();
        let n = pts.len();
        let seg = |a: usize, b: usize| -> [T; 2] { [pts[b][0] - pts[a][0], pts[b][1] - pts[a][1]] };
        let norm = |d: [T; 2]| (d[0] * d[0] + d[1] * d[1]).sqrt();
        let mut weights = vec![T::zero(); n];
        let mut normals = vec![[T::zero(); 2]; n];
        let nseg = if closed { n } else { n - 1 };
        for a in 0..nseg {
            let b = (a + 1) % n;
            let d = seg(a, b);
            let l = norm(d);
            weights[a] = weights[a] + half * l;
            weights[b] = weights[b] + half * l;
            // right-hand normal of the direction of travel points into Ω⁻
            let nr = [d[1], -d[0]];
            for p in [a, b] {
                normals[p][0] = normals[p][0] + nr[0];
                normals[p][1] = normals[p][1] + nr[1];
            }
        }
        if !closed && n >= 2 {
            weights[0] = weights[0] + wall_extension(grid, pts[0], seg(1, 0));
            weights[n - 1] = weights[n - 1] + wall_extension(grid, pts[n - 1], seg(n - 2, n - 1));
        }
        for nv in &mut normals {
            let l = norm(*nv);
            if l > T::zero() {
                *nv = [nv[0] / l, nv[1] / l];
            }
        }
        contour.components.push(Component {
            start: contour.points.len(),
            len: n,
            closed,
        });
        contour.points.extend(pts);
        contour.weights.extend(weights);
        contour.normals.extend(normals);
    }
    Ok(contour)
}

/// Length from an open end `p` to the wall along the outward direction `d`,
/// if `p` lies within the outer half cell ring; zero otherwise.
fn wall_extension<T: Real>(grid: &GridSpec<T>, p: [T; 2], d: [T; 2]) -> T {
    let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
    if len == T::zero() {
        return T::zero();
    }
    let dir = [d[0] / len, d[1] / len];
    let mut best = T::infinity();
    for axis in 0..2 {
        let h = grid.spacing(axis);
        let l = grid.lengths()[axis];
        let x = p[axis];
        let tol = h * T::lit(0.51);
        // distance to the wall the end is heading to, if it is adjacent
        if dir[axis] < T::zero() && x <= tol {
            best = best.min(x / -dir[axis]);
        }
        if dir[axis] > T::zero() && l - x <= tol {
            best = best.min((l - x) / dir[axis]);
        }
    }
    if best.is_finite() {
        // a nearly wall-parallel end segment would give an unbounded extension
        best.min(grid.spacing(0).max(grid.spacing(1)))
    } else {
        T::zero()
    }
}
