//! Vector math and the planar primitives used by the tracer.
//!
//! Walls are vertical rectangles ([`WallFace`]) obtained by extruding each
//! segment of a floor-plan polyline between its base and top heights. All
//! functions here are pure and safe to call from any number of threads.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scenario::Material;

/// Direction-normal cosines below this are treated as grazing and ignored.
pub const GRAZING_COSINE: f64 = 1e-9;

/// Relative tolerance on the segment parameter used to exclude the
/// segment end points, so that a leg that starts or ends on a face does not
/// register a hit on that same face.
const ENDPOINT_EPS: f64 = 1e-9;

/// Tolerance on the face-local (u, v) coordinates.
const FACE_EDGE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    /// Unit vector in the same direction. Returns the zero vector unchanged.
    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            self / n
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Planar rectangle `origin + u·edge_u + v·edge_v`, `u, v ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WallFace {
    /// Index of the face in the scenario's face list.
    pub index: usize,
    pub origin: Vec3,
    /// Horizontal extent.
    pub edge_u: Vec3,
    /// Vertical extent.
    pub edge_v: Vec3,
    pub material: Material,
    pub parent_wall: String,
}

impl WallFace {
    pub fn new(
        index: usize,
        origin: Vec3,
        edge_u: Vec3,
        edge_v: Vec3,
        material: Material,
        parent_wall: impl Into<String>,
    ) -> Self {
        Self {
            index,
            origin,
            edge_u,
            edge_v,
            material,
            parent_wall: parent_wall.into(),
        }
    }

    /// Unit normal `edge_u × edge_v`. Faces are two-sided; the sign only
    /// fixes a convention.
    pub fn normal(&self) -> Vec3 {
        self.edge_u.cross(self.edge_v).normalized()
    }

    /// Signed distance from the face plane along [`WallFace::normal`].
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        (p - self.origin).dot(self.normal())
    }

    /// Face-local coordinates of the orthogonal projection of `p`.
    pub fn local_coords(&self, p: Vec3) -> (f64, f64) {
        let d = p - self.origin;
        (
            d.dot(self.edge_u) / self.edge_u.norm_squared(),
            d.dot(self.edge_v) / self.edge_v.norm_squared(),
        )
    }

    /// Whether the projection of `p` onto the plane falls within the rectangle.
    pub fn contains_projection(&self, p: Vec3) -> bool {
        let (u, v) = self.local_coords(p);
        (-FACE_EDGE_EPS..=1.0 + FACE_EDGE_EPS).contains(&u)
            && (-FACE_EDGE_EPS..=1.0 + FACE_EDGE_EPS).contains(&v)
    }

    /// Intersection of the infinite line through `a` and `b` with the face
    /// plane, as the parameter `t` of `a + t·(b − a)`. `None` when the line
    /// is parallel to the plane.
    pub fn plane_param(&self, a: Vec3, b: Vec3) -> Option<f64> {
        let n = self.normal();
        let d = b - a;
        let denom = d.dot(n);
        if denom == 0.0 {
            return None;
        }
        Some((self.origin - a).dot(n) / denom)
    }
}

/// A proper crossing of a segment with a face.
#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub face: usize,
    pub point: Vec3,
    pub incidence_cosine: f64,
    /// Distance from the segment start, in meters.
    pub param_along_ray: f64,
}

/// Reflection of `p` across the infinite plane of `face`.
pub fn mirror_point(p: Vec3, face: &WallFace) -> Vec3 {
    let n = face.normal();
    p - n * (2.0 * (p - face.origin).dot(n))
}

/// Faces crossed by the open segment `(a, b)`, nearest first.
///
/// Hits closer than a relative `1e-9` to either end point are ignored, as are
/// grazing crossings.
pub fn segment_hits(a: Vec3, b: Vec3, faces: &[WallFace]) -> Vec<Hit> {
    let mut hits: Vec<Hit> = faces.iter().filter_map(|f| face_hit(a, b, f)).collect();
    hits.sort_by(|h1, h2| {
        h1.param_along_ray
            .total_cmp(&h2.param_along_ray)
            .then(h1.face.cmp(&h2.face))
    });
    hits
}

/// Single-face version of [`segment_hits`].
pub fn face_hit(a: Vec3, b: Vec3, face: &WallFace) -> Option<Hit> {
    let d = b - a;
    let len = d.norm();
    if len == 0.0 {
        return None;
    }
    let n = face.normal();
    let cos = d.dot(n) / len;
    if cos.abs() < GRAZING_COSINE {
        return None;
    }
    let t = (face.origin - a).dot(n) / d.dot(n);
    if t <= ENDPOINT_EPS || t >= 1.0 - ENDPOINT_EPS {
        return None;
    }
    let point = a + d * t;
    if !face.contains_projection(point) {
        return None;
    }
    Some(Hit {
        face: face.index,
        point,
        incidence_cosine: cos.abs(),
        param_along_ray: t * len,
    })
}

/// `true` when no face obstructs the segment between `a` and `b`.
pub fn line_of_sight(a: Vec3, b: Vec3, faces: &[WallFace]) -> bool {
    faces.iter().all(|f| face_hit(a, b, f).is_none())
}

/// Even-odd point-in-polygon test in the horizontal plane.
pub fn point_in_polygon(x: f64, y: f64, polygon: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = polygon.len();
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let [xi, yi] = polygon[i];
        let [xj, yj] = polygon[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Shoelace area of a polygon (absolute value).
pub fn polygon_area(polygon: &[[f64; 2]]) -> f64 {
    let n = polygon.len();
    let mut acc = 0.0;
    for i in 0..n {
        let [x0, y0] = polygon[i];
        let [x1, y1] = polygon[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    acc.abs() * 0.5
}

/// Whether any two non-adjacent edges of a closed polygon intersect.
pub fn polygon_self_intersects(polygon: &[[f64; 2]]) -> bool {
    let n = polygon.len();
    if n < 4 {
        return false;
    }
    for i in 0..n {
        let a = (polygon[i], polygon[(i + 1) % n]);
        for j in (i + 1)..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let b = (polygon[j], polygon[(j + 1) % n]);
            if segments_intersect_2d(a.0, a.1, b.0, b.1) {
                return true;
            }
        }
    }
    false
}

fn segments_intersect_2d(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    }
    fn on_segment(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> bool {
        c[0] >= a[0].min(b[0])
            && c[0] <= a[0].max(b[0])
            && c[1] >= a[1].min(b[1])
            && c[1] <= a[1].max(b[1])
    }
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn test_material() -> Material {
        Material::fresnel("brick", 4.0, 8.0)
    }

    /// Plane x = 0, spanning y ∈ [-5, 5], z ∈ [0, 3].
    fn x0_face() -> WallFace {
        WallFace::new(
            0,
            Vec3::new(0.0, -5.0, 0.0),
            Vec3::new(0.0, 10.0, 0.0),
            Vec3::new(0.0, 0.0, 3.0),
            test_material(),
            "w",
        )
    }

    #[test]
    fn mirror_axis_aligned() {
        let m = mirror_point(Vec3::new(1.0, 2.0, 3.0), &x0_face());
        assert_eq!(m, Vec3::new(-1.0, 2.0, 3.0));
    }

    #[test]
    fn mirror_fixed_point() {
        let p = Vec3::new(0.0, 1.5, 2.0);
        assert_eq!(mirror_point(p, &x0_face()), p);
    }

    #[test]
    fn perpendicular_crossing() {
        let hits = segment_hits(
            Vec3::new(-2.0, 1.0, 1.0),
            Vec3::new(3.0, 1.0, 1.0),
            &[x0_face()],
        );
        assert_eq!(hits.len(), 1);
        assert!((hits[0].point - Vec3::new(0.0, 1.0, 1.0)).norm() < 1e-12);
        assert!((hits[0].param_along_ray - 2.0).abs() < 1e-12);
        assert!((hits[0].incidence_cosine - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coplanar_segment_is_grazing() {
        let hits = segment_hits(
            Vec3::new(0.0, -1.0, 1.0),
            Vec3::new(0.0, 4.0, 2.0),
            &[x0_face()],
        );
        assert!(hits.is_empty());
    }

    #[test]
    fn crossing_outside_rectangle_misses() {
        let hits = segment_hits(
            Vec3::new(-1.0, 1.0, 4.0),
            Vec3::new(1.0, 1.0, 4.0),
            &[x0_face()],
        );
        assert!(hits.is_empty());
    }

    #[test]
    fn los_blocked_and_clear() {
        let f = [x0_face()];
        assert!(!line_of_sight(
            Vec3::new(-1.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 1.0),
            &f
        ));
        let b = Vec3::new(2.0, 0.0, 1.0);
        assert!(line_of_sight(b + Vec3::new(1e-6, 0.0, 0.0), b, &[]));
        assert!(line_of_sight(
            Vec3::new(1.0, 0.0, 1.0),
            Vec3::new(2.0, 3.0, 1.0),
            &f
        ));
    }

    #[test]
    fn polygon_helpers() {
        let sq = [[0.0, 0.0], [2.0, 0.0], [2.0, 3.0], [0.0, 3.0]];
        assert_eq!(polygon_area(&sq), 6.0);
        assert!(point_in_polygon(1.0, 1.0, &sq));
        assert!(!point_in_polygon(3.0, 1.0, &sq));
        assert!(!polygon_self_intersects(&sq));
        let bowtie = [[0.0, 0.0], [2.0, 2.0], [2.0, 0.0], [0.0, 2.0]];
        assert!(polygon_self_intersects(&bowtie));
    }

    fn arb_vec(r: f64) -> impl Strategy<Value = Vec3> {
        (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    fn arb_face() -> impl Strategy<Value = WallFace> {
        (
            arb_vec(10.0),
            0.0..std::f64::consts::TAU,
            0.1..10.0,
            0.1..4.0,
        )
            .prop_map(|(o, ang, w, h)| {
                WallFace::new(
                    0,
                    o,
                    Vec3::new(ang.cos() * w, ang.sin() * w, 0.0),
                    Vec3::new(0.0, 0.0, h),
                    test_material(),
                    "w",
                )
            })
    }

    proptest! {
        #[test]
        fn mirror_is_involution(p in arb_vec(50.0), f in arb_face()) {
            let back = mirror_point(mirror_point(p, &f), &f);
            prop_assert!((back - p).norm() <= 1e-12 * (1.0 + p.norm() + f.origin.norm()));
        }

        #[test]
        fn mirror_preserves_plane_distance(p in arb_vec(50.0), f in arb_face()) {
            let d0 = f.signed_distance(p);
            let d1 = f.signed_distance(mirror_point(p, &f));
            prop_assert!((d0 + d1).abs() <= 1e-12 * (1.0 + p.norm() + f.origin.norm()));
        }

        #[test]
        fn los_is_symmetric(a in arb_vec(10.0), b in arb_vec(10.0), f in arb_face()) {
            let faces = [f];
            prop_assert_eq!(line_of_sight(a, b, &faces), line_of_sight(b, a, &faces));
        }
    }
}
