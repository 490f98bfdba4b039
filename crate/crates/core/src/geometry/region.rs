use crate::error::{invalid, Result};
use crate::scalar::Real;

pub type Point<T> = [T; 2];

/// Geometric region used for inclusions, focusing regions and test balls.
#[derive(Debug, Clone, PartialEq)]
pub enum RegionSpec<T> {
    Disk {
        center: Point<T>,
        radius: T,
    },
    /// Simple polygon, vertices in either orientation.
    Polygon {
        vertices: Vec<Point<T>>,
    },
}

impl<T: Real> RegionSpec<T> {
    pub fn disk(cx: T, cy: T, radius: T) -> Self {
        RegionSpec::Disk {
            center: [cx, cy],
            radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RegionSpec::Disk { center, radius } => {
                if !(*radius > T::zero()) || !center[0].is_finite() || !center[1].is_finite() {
                    return invalid("disk region needs a finite center and radius > 0");
                }
            }
            RegionSpec::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return invalid("polygon region needs at least 3 vertices");
                }
                if vertices
                    .iter()
                    .any(|v| !v[0].is_finite() || !v[1].is_finite())
                {
                    return invalid("polygon vertex is not finite");
                }
                if polygon_signed_area(vertices) == T::zero() {
                    return invalid("polygon region is degenerate");
                }
            }
        }
        Ok(())
    }

    /// Closed-set membership test.
    pub fn contains(&self, p: Point<T>) -> bool {
        match self {
            RegionSpec::Disk { center, radius } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                dx * dx + dy * dy <= *radius * *radius
            }
            RegionSpec::Polygon { vertices } => point_in_polygon(vertices, p),
        }
    }

    /// Largest distance from the origin reached by the region.
    pub fn max_radius(&self) -> T {
        match self {
            RegionSpec::Disk { center, radius } => norm(*center) + *radius,
            RegionSpec::Polygon { vertices } => {
                vertices.iter().fold(T::zero(), |m, &v| m.max(norm(v)))
            }
        }
    }

    /// True when the region lies strictly inside the disk of `domain_radius`
    /// centered at the origin.
    pub fn strictly_inside_disk(&self, domain_radius: T) -> bool {
        self.max_radius() < domain_radius
    }

    pub fn area(&self) -> T {
        match self {
            RegionSpec::Disk { radius, .. } => T::PI() * *radius * *radius,
            RegionSpec::Polygon { vertices } => polygon_signed_area(vertices).abs(),
        }
    }

    /// Euclidean distance from a point to the region (0 inside).
    pub fn distance_to(&self, p: Point<T>) -> T {
        if self.contains(p) {
            return T::zero();
        }
        match self {
            RegionSpec::Disk { center, radius } => {
                (norm([p[0] - center[0], p[1] - center[1]]) - *radius).max(T::zero())
            }
            RegionSpec::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| segment_distance(p, vertices[i], vertices[(i + 1) % n]))
                    .fold(T::infinity(), T::min)
            }
        }
    }

    /// Whether two regions overlap (share interior or touch).
    pub fn intersects(&self, other: &RegionSpec<T>) -> bool {
        match (self, other) {
            (
                RegionSpec::Disk {
                    center: c1,
                    radius: r1,
                },
                RegionSpec::Disk {
                    center: c2,
                    radius: r2,
                },
            ) => norm([c1[0] - c2[0], c1[1] - c2[1]]) <= *r1 + *r2,
            (RegionSpec::Disk { center, radius }, poly @ RegionSpec::Polygon { .. })
            | (poly @ RegionSpec::Polygon { .. }, RegionSpec::Disk { center, radius }) => {
                poly.distance_to(*center) <= *radius
            }
            (RegionSpec::Polygon { vertices: a }, RegionSpec::Polygon { vertices: b }) => {
                a.iter().any(|&v| other.contains(v))
                    || b.iter().any(|&v| self.contains(v))
                    || edges(a).any(|(p, q)| edges(b).any(|(r, s)| segments_cross(p, q, r, s)))
            }
        }
    }

    /// Whether this region is contained in `outer` (disks and polygons
    /// handled exactly for disk-in-disk, by sampled boundary otherwise).
    pub fn is_subset_of(&self, outer: &RegionSpec<T>) -> bool {
        match (self, outer) {
            (
                RegionSpec::Disk {
                    center: c1,
                    radius: r1,
                },
                RegionSpec::Disk {
                    center: c2,
                    radius: r2,
                },
            ) => norm([c1[0] - c2[0], c1[1] - c2[1]]) + *r1 <= *r2,
            (RegionSpec::Polygon { vertices }, RegionSpec::Disk { .. }) => {
                vertices.iter().all(|&v| outer.contains(v))
            }
            _ => self
                .boundary_samples(256)
                .into_iter()
                .all(|p| outer.contains(p)),
        }
    }

    fn boundary_samples(&self, count: usize) -> Vec<Point<T>> {
        match self {
            RegionSpec::Disk { center, radius } => (0..count)
                .map(|k| {
                    let t = T::TAU() * T::lit(k as f64) / T::lit(count as f64);
                    [center[0] + *radius * t.cos(), center[1] + *radius * t.sin()]
                })
                .collect(),
            RegionSpec::Polygon { vertices } => {
                let n = vertices.len();
                let per = (count / n).max(1);
                let mut out = Vec::with_capacity(n * per);
                for i in 0..n {
                    let (p, q) = (vertices[i], vertices[(i + 1) % n]);
                    for k in 0..per {
                        let s = T::lit(k as f64) / T::lit(per as f64);
                        out.push([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]);
                    }
                }
                out
            }
        }
    }
}

pub(crate) fn norm<T: Real>(p: Point<T>) -> T {
    p[0].hypot(p[1])
}

/// Shoelace formula; positive for counterclockwise vertex order.
pub fn polygon_signed_area<T: Real>(vertices: &[Point<T>]) -> T {
    let n = vertices.len();
    let mut s = T::zero();
    for i in 0..n {
        let (p, q) = (vertices[i], vertices[(i + 1) % n]);
        s += p[0] * q[1] - q[0] * p[1];
    }
    s * T::lit(0.5)
}

fn edges<T: Real>(v: &[Point<T>]) -> impl Iterator<Item = (Point<T>, Point<T>)> + '_ {
    (0..v.len()).map(move |i| (v[i], v[(i + 1) % v.len()]))
}

fn point_in_polygon<T: Real>(vertices: &[Point<T>], p: Point<T>) -> bool {
    let mut inside = false;
    let n = vertices.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside || edges(vertices).any(|(a, b)| segment_distance(p, a, b) == T::zero())
}

fn segment_distance<T: Real>(p: Point<T>, a: Point<T>, b: Point<T>) -> T {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > T::zero() {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2)
            .max(T::zero())
            .min(T::one())
    } else {
        T::zero()
    };
    norm([p[0] - a[0] - t * dx, p[1] - a[1] - t * dy])
}

fn orient<T: Real>(a: Point<T>, b: Point<T>, c: Point<T>) -> T {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_cross<T: Real>(p: Point<T>, q: Point<T>, r: Point<T>, s: Point<T>) -> bool {
    let d1 = orient(r, s, p);
    let d2 = orient(r, s, q);
    let d3 = orient(p, q, r);
    let d4 = orient(p, q, s);
    ((d1 > T::zero()) != (d2 > T::zero())) && ((d3 > T::zero()) != (d4 > T::zero()))
}
