//! Triangular meshes of the disk with electrode-labelled boundary arcs.

mod region;

use std::collections::HashMap;
use std::fmt::Write as _;

pub use region::{polygon_signed_area, Point, RegionSpec};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Equally sized, equally spaced electrodes on the disk boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectrodeLayout<T> {
    pub count: usize,
    /// Fraction of the perimeter covered by electrodes, in (0, 1).
    pub coverage: T,
    /// Angle at which electrode 0 begins (radians, counterclockwise).
    pub start_angle: T,
}

impl<T: Real> ElectrodeLayout<T> {
    /// Layout whose electrode 0 is centered on the positive x axis.
    pub fn centered(count: usize, coverage: T) -> Self {
        let start_angle = -coverage * T::PI() / T::lit(count as f64);
        ElectrodeLayout {
            count,
            coverage,
            start_angle,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return invalid("electrode count must be at least 2");
        }
        if !(self.coverage > T::zero() && self.coverage < T::one()) {
            return invalid("electrode coverage must lie in (0, 1)");
        }
        if !self.start_angle.is_finite() {
            return invalid("electrode start angle must be finite");
        }
        Ok(())
    }

    /// Angular width of one electrode arc.
    pub fn electrode_angle(&self) -> T {
        self.coverage * T::TAU() / T::lit(self.count as f64)
    }

    pub fn gap_angle(&self) -> T {
        (T::one() - self.coverage) * T::TAU() / T::lit(self.count as f64)
    }
}

/// Conforming P1 triangulation of a disk centered at the origin.
///
/// Boundary edges are stored in counterclockwise cycle order; each carries
/// the 0-based index of the electrode it belongs to, or `None` when the edge
/// lies on an insulated gap.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    nodes: Vec<Point<T>>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<[usize; 2]>,
    electrode_of_edge: Vec<Option<usize>>,
    electrode_count: usize,
    radius: T,
    level: usize,
}

impl<T: Real> Mesh<T> {
    pub fn nodes(&self) -> &[Point<T>] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    pub fn electrode_of_edge(&self) -> &[Option<usize>] {
        &self.electrode_of_edge
    }

    pub fn electrode_count(&self) -> usize {
        self.electrode_count
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn signed_area(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        T::lit(0.5) * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
    }

    pub fn centroid(&self, t: usize) -> Point<T> {
        let [a, b, c] = self.triangles[t];
        let third = T::one() / T::lit(3.0);
        [
            (self.nodes[a][0] + self.nodes[b][0] + self.nodes[c][0]) * third,
            (self.nodes[a][1] + self.nodes[b][1] + self.nodes[c][1]) * third,
        ]
    }

    pub fn total_area(&self) -> T {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    /// Longest edge over all triangles.
    pub fn max_diameter(&self) -> T {
        self.triangles
            .iter()
            .flat_map(|tri| (0..3).map(move |k| (tri[k], tri[(k + 1) % 3])))
            .map(|(a, b)| dist(self.nodes[a], self.nodes[b]))
            .fold(T::zero(), T::max)
    }

    /// Number of boundary edges carried by each electrode.
    pub fn electrode_edge_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.electrode_count];
        for l in self.electrode_of_edge.iter().flatten() {
            counts[*l] += 1;
        }
        counts
    }

    /// Chord-length of each electrode arc (sum of its boundary edges).
    pub fn electrode_lengths(&self) -> Vec<T> {
        let mut len = vec![T::zero(); self.electrode_count];
        for (e, l) in self.boundary_edges.iter().zip(&self.electrode_of_edge) {
            if let Some(l) = l {
                len[*l] += dist(self.nodes[e[0]], self.nodes[e[1]]);
            }
        }
        len
    }

    /// Per node: the electrode whose arc contains it, if any.
    pub fn node_electrodes(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.nodes.len()];
        for (e, l) in self.boundary_edges.iter().zip(&self.electrode_of_edge) {
            if let Some(l) = l {
                out[e[0]] = Some(*l);
                out[e[1]] = Some(*l);
            }
        }
        out
    }

    /// Triangles whose centroid lies in `region`, ascending.
    pub fn elements_in_region(&self, region: &RegionSpec<T>) -> Vec<usize> {
        (0..self.triangles.len())
            .filter(|&t| region.contains(self.centroid(t)))
            .collect()
    }

    /// Checks every structural invariant of the mesh.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::OutOfBounds(format!(
                    "triangle {t} references a missing node"
                )));
            }
            if !(self.signed_area(t) > T::zero()) {
                return invalid(format!("triangle {t} has non-positive signed area"));
            }
        }
        // directed edge census: boundary once, interior twice with opposite orientation
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                *directed.entry((tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        if directed.values().any(|&c| c != 1) {
            return invalid(
                "a directed edge is shared by two triangles (inconsistent orientation)",
            );
        }
        let boundary: Vec<(usize, usize)> = directed
            .keys()
            .filter(|&&(a, b)| !directed.contains_key(&(b, a)))
            .copied()
            .collect();
        if boundary.len() != self.boundary_edges.len() {
            return invalid("boundary edge table does not match the triangulation");
        }
        for e in &self.boundary_edges {
            if !directed.contains_key(&(e[0], e[1])) || directed.contains_key(&(e[1], e[0])) {
                return invalid("listed boundary edge is not a boundary edge of the triangulation");
            }
        }
        let len = self.boundary_edges.len();
        for i in 0..len {
            if self.boundary_edges[i][1] != self.boundary_edges[(i + 1) % len][0] {
                return invalid("boundary edges do not form a single closed cycle");
            }
        }
        let mut seen = vec![false; n];
        for e in &self.boundary_edges {
            if std::mem::replace(&mut seen[e[0]], true) {
                return invalid("boundary cycle visits a node twice");
            }
        }
        // each electrode: contiguous run of >= 2 edges
        let mut runs = vec![0usize; self.electrode_count];
        for i in 0..len {
            let cur = self.electrode_of_edge[i];
            let prev = self.electrode_of_edge[(i + len - 1) % len];
            if let Some(l) = cur {
                if l >= self.electrode_count {
                    return Err(Error::OutOfBounds(format!("electrode label {l}")));
                }
                if prev != cur {
                    runs[l] += 1;
                }
            }
        }
        for (l, &r) in runs.iter().enumerate() {
            if r != 1 {
                return invalid(format!(
                    "electrode {l} occupies {r} boundary runs, expected 1"
                ));
            }
        }
        for (l, &c) in self.electrode_edge_counts().iter().enumerate() {
            if c < 2 {
                return Err(Error::ElectrodeUnderResolved {
                    electrode: l,
                    edges: c,
                });
            }
        }
        Ok(())
    }

    /// Structured-text dump: node table, triangle table and boundary-edge
    /// table with 1-based electrode labels (`-` for insulated edges).
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# monotone-eit mesh");
        let _ = writeln!(s, "# level {}", self.level);
        let _ = writeln!(s, "# radius {:.16e}", self.radius);
        let _ = writeln!(s, "# electrodes {}", self.electrode_count);
        let _ = writeln!(s, "nodes {}", self.nodes.len());
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "{i} {:.16e} {:.16e}", p[0], p[1]);
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for (i, t) in self.triangles.iter().enumerate() {
            let _ = writeln!(s, "{i} {} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "boundary_edges {}", self.boundary_edges.len());
        for (i, (e, l)) in self
            .boundary_edges
            .iter()
            .zip(&self.electrode_of_edge)
            .enumerate()
        {
            match l {
                Some(l) => {
                    let _ = writeln!(s, "{i} {} {} {}", e[0], e[1], l + 1);
                }
                None => {
                    let _ = writeln!(s, "{i} {} {} -", e[0], e[1]);
                }
            }
        }
        s
    }
}

fn dist<T: Real>(p: Point<T>, q: Point<T>) -> T {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

fn ceil_count<T: Real>(x: T) -> usize {
    // guard against 3.0000000001 rounding up to 4
    let c = (x - T::lit(1e-9)).ceil();
    c.to_usize().unwrap_or(0).max(1)
}

/// Builds a structured polar mesh of the disk of `radius` centered at the
/// origin: concentric rings whose outermost ring contains every electrode
/// endpoint, joined by zipper triangulations.
pub fn build_disk_mesh<T: Real>(
    radius: T,
    layout: &ElectrodeLayout<T>,
    target_h: T,
) -> Result<Mesh<T>> {
    if !(radius > T::zero()) || !radius.is_finite() {
        return invalid("radius must be positive");
    }
    if !(target_h > T::zero() && target_h < radius) {
        return invalid("target_h must satisfy 0 < target_h < radius");
    }
    layout.validate()?;

    let m = layout.count;
    let e_ang = layout.electrode_angle();
    let g_ang = layout.gap_angle();
    let per_e = ceil_count(radius * e_ang / target_h);
    if per_e < 2 {
        return Err(Error::ElectrodeUnderResolved {
            electrode: 0,
            edges: per_e,
        });
    }
    let per_g = ceil_count(radius * g_ang / target_h);

    // outer ring angles, counterclockwise from electrode 0's start
    let mut outer_angles = Vec::with_capacity(m * (per_e + per_g));
    let mut outer_labels = Vec::with_capacity(m * (per_e + per_g));
    let pitch = T::TAU() / T::lit(m as f64);
    for l in 0..m {
        let base = layout.start_angle + pitch * T::lit(l as f64);
        for k in 0..per_e {
            outer_angles.push(base + e_ang * T::lit(k as f64) / T::lit(per_e as f64));
            outer_labels.push(Some(l));
        }
        for k in 0..per_g {
            outer_angles.push(base + e_ang + g_ang * T::lit(k as f64) / T::lit(per_g as f64));
            outer_labels.push(None);
        }
    }

    let rings = ceil_count(radius / target_h).max(2);
    let mut nodes: Vec<Point<T>> = vec![[T::zero(), T::zero()]];
    // per ring: (first node index, angles) with angles ascending in [a0, a0 + 2pi)
    let mut ring_data: Vec<(usize, Vec<T>)> = Vec::with_capacity(rings);
    for i in 1..=rings {
        let r = radius * T::lit(i as f64) / T::lit(rings as f64);
        let angles: Vec<T> = if i == rings {
            outer_angles.clone()
        } else {
            let count = ceil_count(T::TAU() * r / target_h).max(6);
            (0..count)
                .map(|k| T::TAU() * T::lit(k as f64) / T::lit(count as f64))
                .collect()
        };
        let first = nodes.len();
        for &a in &angles {
            nodes.push([r * a.cos(), r * a.sin()]);
        }
        ring_data.push((first, angles));
    }

    let mut triangles = Vec::new();
    let (first1, ang1) = &ring_data[0];
    for k in 0..ang1.len() {
        triangles.push([0, first1 + k, first1 + (k + 1) % ang1.len()]);
    }
    for w in ring_data.windows(2) {
        zipper(&w[0], &w[1], &mut triangles);
    }

    let (outer_first, outer) = &ring_data[rings - 1];
    let nb = outer.len();
    let boundary_edges: Vec<[usize; 2]> = (0..nb)
        .map(|k| [outer_first + k, outer_first + (k + 1) % nb])
        .collect();

    let mesh = Mesh {
        nodes,
        triangles,
        boundary_edges,
        electrode_of_edge: outer_labels,
        electrode_count: m,
        radius,
        level: 0,
    };
    mesh.validate()?;
    Ok(mesh)
}

/// Triangulates the annulus between two node rings by merging their
/// angular orders.
fn zipper<T: Real>(inner: &(usize, Vec<T>), outer: &(usize, Vec<T>), out: &mut Vec<[usize; 3]>) {
    let (fa, a) = inner;
    let (fb, b) = outer;
    let (p, q) = (a.len(), b.len());
    // rotate both rings to start at their first angle >= 0 (mod 2pi)
    let norm_angle = |x: T| {
        let t = x % T::TAU();
        if t < T::zero() {
            t + T::TAU()
        } else {
            t
        }
    };
    let start = |ang: &[T]| {
        (0..ang.len())
            .min_by(|&i, &j| norm_angle(ang[i]).partial_cmp(&norm_angle(ang[j])).unwrap())
            .unwrap()
    };
    let (sa, sb) = (start(a), start(b));
    let unwrapped = |ang: &[T], s: usize, k: usize| {
        let n = ang.len();
        let base = norm_angle(ang[s]);
        let mut t = norm_angle(ang[(s + k) % n]);
        if k > 0 && t <= base {
            t += T::TAU();
        }
        if k == n {
            t = base + T::TAU();
        }
        t
    };
    let node_a = |k: usize| fa + (sa + k) % p;
    let node_b = |k: usize| fb + (sb + k) % q;
    let (mut i, mut j) = (0usize, 0usize);
    while i < p || j < q {
        let advance_inner = if i == p {
            false
        } else if j == q {
            true
        } else {
            unwrapped(a, sa, i + 1) <= unwrapped(b, sb, j + 1)
        };
        if advance_inner {
            out.push([node_a(i), node_b(j), node_a(i + 1)]);
            i += 1;
        } else {
            out.push([node_a(i), node_b(j), node_b(j + 1)]);
            j += 1;
        }
    }
}

/// Uniform red refinement: every triangle splits into four, new boundary
/// nodes are projected onto the circle and inherit their edge's label.
pub fn refine_mesh<T: Real>(mesh: &Mesh<T>) -> Mesh<T> {
    let mut nodes = mesh.nodes.clone();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let boundary: HashMap<(usize, usize), ()> = mesh
        .boundary_edges
        .iter()
        .map(|e| ((e[0].min(e[1]), e[0].max(e[1])), ()))
        .collect();
    let half = T::lit(0.5);
    let mut mid = |a: usize, b: usize, nodes: &mut Vec<Point<T>>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoint.entry(key).or_insert_with(|| {
            let (p, q) = (nodes[a], nodes[b]);
            let mut x = [half * (p[0] + q[0]), half * (p[1] + q[1])];
            if boundary.contains_key(&key) {
                let r = x[0].hypot(x[1]);
                x = [x[0] * mesh.radius / r, x[1] * mesh.radius / r];
            }
            nodes.push(x);
            nodes.len() - 1
        })
    };

    let mut boundary_edges = Vec::with_capacity(2 * mesh.boundary_edges.len());
    let mut electrode_of_edge = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for (e, l) in mesh.boundary_edges.iter().zip(&mesh.electrode_of_edge) {
        let c = mid(e[0], e[1], &mut nodes);
        boundary_edges.push([e[0], c]);
        boundary_edges.push([c, e[1]]);
        electrode_of_edge.push(*l);
        electrode_of_edge.push(*l);
    }

    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let ab = mid(a, b, &mut nodes);
        let bc = mid(b, c, &mut nodes);
        let ca = mid(c, a, &mut nodes);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }

    Mesh {
        nodes,
        triangles,
        boundary_edges,
        electrode_of_edge,
        electrode_count: mesh.electrode_count,
        radius: mesh.radius,
        level: mesh.level + 1,
    }
}

/// Refines `levels` times.
pub fn refine_times<T: Real>(mesh: &Mesh<T>, levels: usize) -> Mesh<T> {
    let mut m = mesh.clone();
    for _ in 0..levels {
        m = refine_mesh(&m);
    }
    m
}
