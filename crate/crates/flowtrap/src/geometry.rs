//! Axis-aligned hyperrectangles in the unit cube, their faces, δ-nets on
//! faces, and the change of variables used by the parallel trap.
//!
//! Everything here is a pure value type; nothing touches the oracle.

use crate::error::{Error, Result};
use crate::GEOM_TOL;

/// A point of `[0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    /// Validating constructor: every coordinate must lie in `[0,1]`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        for (axis, &value) in coords.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(Error::OutOfCube { axis, value });
            }
        }
        Ok(Self { coords })
    }

    /// Clamp each coordinate into `[0,1]` and build the point.
    pub fn clamped(coords: Vec<f64>) -> Self {
        Self {
            coords: coords.into_iter().map(|c| c.clamp(0.0, 1.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// An axis-aligned box `[lo_1,hi_1] x ... x [lo_d,hi_d]` inside `[0,1]^d`
/// with strictly positive edge lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperRect {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl HyperRect {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: lo.len().max(1),
                got: hi.len(),
            });
        }
        for axis in 0..lo.len() {
            if !lo[axis].is_finite() || !hi[axis].is_finite() || lo[axis] >= hi[axis] {
                return Err(Error::DegenerateRect {
                    axis,
                    lo: lo[axis],
                    hi: hi[axis],
                });
            }
            if lo[axis] < -GEOM_TOL || hi[axis] > 1.0 + GEOM_TOL {
                return Err(Error::RectOutsideCube { axis });
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn unit_cube(dim: usize) -> Self {
        Self {
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn edge(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn shortest_edge(&self) -> f64 {
        (0..self.dim()).map(|i| self.edge(i)).fold(f64::MAX, f64::min)
    }

    pub fn longest_edge(&self) -> f64 {
        (0..self.dim()).map(|i| self.edge(i)).fold(0.0, f64::max)
    }

    pub fn diam(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.edge(i) * self.edge(i))
            .sum::<f64>()
            .sqrt()
    }

    pub fn vol(&self) -> f64 {
        (0..self.dim()).map(|i| self.edge(i)).product()
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.longest_edge() / self.shortest_edge()
    }

    pub fn center(&self) -> Point {
        Point::clamped(
            (0..self.dim())
                .map(|i| 0.5 * (self.lo[i] + self.hi[i]))
                .collect(),
        )
    }

    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        p.coords()
            .iter()
            .enumerate()
            .all(|(i, &c)| c >= self.lo[i] - tol && c <= self.hi[i] + tol)
    }

    /// Project a point onto the rectangle coordinate-wise.
    pub fn clamp_point(&self, p: &Point) -> Point {
        Point::clamped(
            p.coords()
                .iter()
                .enumerate()
                .map(|(i, &c)| c.clamp(self.lo[i], self.hi[i]))
                .collect(),
        )
    }

    /// The `2d` faces, ordered `(axis 0, lo), (axis 0, hi), (axis 1, lo), ...`
    /// Each face is tagged with whether it lies inside the boundary of the
    /// unit cube (in which case the trapping property holds for free).
    pub fn faces(&self) -> Vec<Face> {
        let mut out = Vec::with_capacity(2 * self.dim());
        for axis in 0..self.dim() {
            for &value in &[self.lo[axis], self.hi[axis]] {
                out.push(self.face_at(axis, value));
            }
        }
        out
    }

    /// The slice of this rectangle by the hyperplane `x[axis] = value`.
    /// Used both for actual faces and for interior sections probed by the
    /// parallel trap.
    pub fn face_at(&self, axis: usize, value: f64) -> Face {
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        lo[axis] = value;
        hi[axis] = value;
        let on_unit_cube_boundary = value.abs() <= GEOM_TOL || (value - 1.0).abs() <= GEOM_TOL;
        Face {
            axis,
            fixed_value: value,
            lo,
            hi,
            on_unit_cube_boundary,
        }
    }

    /// Intersect with the half-space slab `x[axis] in [new_lo, new_hi]`.
    pub fn intersect_slab(&self, axis: usize, new_lo: f64, new_hi: f64) -> Result<Self> {
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        lo[axis] = lo[axis].max(new_lo);
        hi[axis] = hi[axis].min(new_hi);
        Self::new(lo, hi)
    }

    /// Intersect with the infinity-norm ball of the given radius about `c`.
    pub fn intersect_inf_ball(&self, c: &Point, radius: f64) -> Result<Self> {
        let lo = (0..self.dim())
            .map(|i| self.lo[i].max(c.coords()[i] - radius))
            .collect();
        let hi = (0..self.dim())
            .map(|i| self.hi[i].min(c.coords()[i] + radius))
            .collect();
        Self::new(lo, hi)
    }
}

/// One face of a rectangle: the coordinate `axis` is pinned to
/// `fixed_value`, the remaining axes range over the stored bounds
/// (represented full-dimension with a degenerate interval on `axis`).
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    axis: usize,
    fixed_value: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
    on_unit_cube_boundary: bool,
}

impl Face {
    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn fixed_value(&self) -> f64 {
        self.fixed_value
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn on_unit_cube_boundary(&self) -> bool {
        self.on_unit_cube_boundary
    }

    pub fn free_axes(&self) -> impl Iterator<Item = usize> + '_ {
        let axis = self.axis;
        (0..self.dim()).filter(move |&i| i != axis)
    }

    /// Diameter of the face as a (d-1)-dimensional box.
    pub fn diam(&self) -> f64 {
        self.free_axes()
            .map(|i| {
                let e = self.hi[i] - self.lo[i];
                e * e
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Euclidean distance from `x` to the closed face: clamp each free
    /// coordinate to its interval and take the fixed-axis offset into the
    /// norm.
    pub fn dist(&self, x: &Point) -> f64 {
        let mut sq = 0.0;
        for (i, &c) in x.coords().iter().enumerate() {
            let gap = if i == self.axis {
                c - self.fixed_value
            } else {
                c - c.clamp(self.lo[i], self.hi[i])
            };
            sq += gap * gap;
        }
        sq.sqrt()
    }

    /// The `2^(d-1)` corner points of the face.
    pub fn vertices(&self) -> Vec<Point> {
        let free: Vec<usize> = self.free_axes().collect();
        let mut out = Vec::with_capacity(1 << free.len());
        for mask in 0..(1usize << free.len()) {
            let mut coords = self.lo.clone();
            for (bit, &ax) in free.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    coords[ax] = self.hi[ax];
                }
            }
            out.push(Point::clamped(coords));
        }
        out
    }

    /// True when two faces lie in the same hyperplane slice, which is how
    /// the algorithms recognise an inherited (possibly truncated) face.
    pub fn same_plane(&self, other: &Face) -> bool {
        self.axis == other.axis && (self.fixed_value - other.fixed_value).abs() <= GEOM_TOL
    }
}

/// A finite subset of a face with covering radius at most `delta / 2`;
/// the face vertices are always members.
///
/// The half-radius is what makes the discretization error of a net
/// minimum at most `delta^2 / 8` (the constant every certificate
/// inequality is written against), at the price of the grid spacing being
/// `delta` rather than `2 delta`.
#[derive(Debug, Clone)]
pub struct FaceNet {
    pub face: Face,
    pub delta: f64,
    pub points: Vec<Point>,
}

/// Build the canonical δ-net of a face: a regular grid whose step on each
/// free axis is at most `delta / sqrt(d-1)`, rounded down so the steps
/// divide the edges evenly. Half a cell diagonal is then at most
/// `delta / 2`. When `delta` is at least the face diameter the vertex set
/// alone already covers at radius `diam/2 <= delta/2` and is returned
/// as-is.
pub fn build_net(face: &Face, delta: f64) -> FaceNet {
    assert!(delta > 0.0, "net radius must be positive");
    let free: Vec<usize> = face.free_axes().collect();
    if free.is_empty() {
        // 0-dimensional face of a segment: the single vertex is the net.
        return FaceNet {
            face: face.clone(),
            delta,
            points: vec![Point::clamped(face.lo().to_vec())],
        };
    }
    if delta >= face.diam() {
        return FaceNet {
            face: face.clone(),
            delta,
            points: face.vertices(),
        };
    }
    let max_step = delta / (free.len() as f64).sqrt();
    let mut axis_values: Vec<Vec<f64>> = Vec::with_capacity(free.len());
    for &ax in &free {
        let len = face.hi()[ax] - face.lo()[ax];
        let intervals = (len / max_step).ceil().max(1.0) as usize;
        let step = len / intervals as f64;
        let mut vals: Vec<f64> = (0..=intervals)
            .map(|k| face.lo()[ax] + step * k as f64)
            .collect();
        // Pin the last grid line to the edge exactly so vertices are members.
        *vals.last_mut().unwrap() = face.hi()[ax];
        axis_values.push(vals);
    }
    let mut points = Vec::new();
    let mut index = vec![0usize; free.len()];
    loop {
        let mut coords = face.lo().to_vec();
        for (k, &ax) in free.iter().enumerate() {
            coords[ax] = axis_values[k][index[k]];
        }
        points.push(Point::clamped(coords));
        // odometer increment
        let mut k = 0;
        loop {
            if k == free.len() {
                return FaceNet {
                    face: face.clone(),
                    delta,
                    points,
                };
            }
            index[k] += 1;
            if index[k] < axis_values[k].len() {
                break;
            }
            index[k] = 0;
            k += 1;
        }
    }
}

/// An axis permutation combined with per-axis reflections and a
/// translation, mapping a rectangle onto `[0,s_1] x ... x [0,s_d]` with the
/// longest axis first. Distances are preserved exactly.
#[derive(Debug, Clone)]
pub struct FrameTransform {
    /// canonical axis `i` corresponds to source axis `perm[i]`
    perm: Vec<usize>,
    flip: Vec<bool>,
    src_lo: Vec<f64>,
    src_hi: Vec<f64>,
}

impl FrameTransform {
    /// Source axis behind canonical axis `i`.
    pub fn source_axis(&self, canon_axis: usize) -> usize {
        self.perm[canon_axis]
    }

    /// Map a canonical-frame hyperplane `x[canon_axis] = value` to its
    /// source-frame counterpart `(axis, value)`.
    pub fn backward_coord(&self, canon_axis: usize, value: f64) -> (usize, f64) {
        let s = self.perm[canon_axis];
        if self.flip[canon_axis] {
            (s, self.src_hi[s] - value)
        } else {
            (s, self.src_lo[s] + value)
        }
    }

    pub fn forward_point(&self, p: &Point) -> Point {
        let coords = (0..p.dim())
            .map(|i| {
                let s = self.perm[i];
                if self.flip[i] {
                    self.src_hi[s] - p.coords()[s]
                } else {
                    p.coords()[s] - self.src_lo[s]
                }
            })
            .collect();
        Point::clamped(coords)
    }

    pub fn backward_point(&self, p: &Point) -> Point {
        let mut coords = vec![0.0; p.dim()];
        for i in 0..p.dim() {
            let s = self.perm[i];
            coords[s] = if self.flip[i] {
                self.src_hi[s] - p.coords()[i]
            } else {
                self.src_lo[s] + p.coords()[i]
            };
        }
        Point::clamped(coords)
    }

    /// Map a rectangle expressed in canonical coordinates back to the
    /// source frame.
    pub fn backward_rect(&self, r: &HyperRect) -> Result<HyperRect> {
        let d = r.dim();
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for i in 0..d {
            let s = self.perm[i];
            if self.flip[i] {
                lo[s] = self.src_hi[s] - r.hi()[i];
                hi[s] = self.src_hi[s] - r.lo()[i];
            } else {
                lo[s] = self.src_lo[s] + r.lo()[i];
                hi[s] = self.src_lo[s] + r.hi()[i];
            }
        }
        HyperRect::new(lo, hi)
    }
}

/// Canonicalize a domain for the parallel trap: permute axes so the
/// longest edge comes first (stable on ties, so the identity wins when all
/// edges agree), translate the rectangle to the origin, and reflect the
/// first axis only if needed to push the pivot's first coordinate past
/// `pivot_threshold`.
///
/// The default threshold, half the shortest edge, is what the planar trap
/// needs. The high-dimensional trap passes half the longest edge instead.
pub fn canonicalize_with_threshold(
    r: &HyperRect,
    x: &Point,
    pivot_threshold: impl Fn(&HyperRect) -> f64,
) -> Result<(FrameTransform, HyperRect, Point)> {
    let ratio = r.aspect_ratio();
    if ratio > 3.0 + GEOM_TOL {
        return Err(Error::AspectRatioTooLarge(ratio));
    }
    let d = r.dim();
    let mut perm: Vec<usize> = (0..d).collect();
    perm.sort_by(|&a, &b| r.edge(b).partial_cmp(&r.edge(a)).unwrap());
    let mut transform = FrameTransform {
        perm,
        flip: vec![false; d],
        src_lo: r.lo().to_vec(),
        src_hi: r.hi().to_vec(),
    };
    let threshold = pivot_threshold(r);
    let first = transform.perm[0];
    let unflipped = x.coords()[first] - r.lo()[first];
    if unflipped < threshold {
        transform.flip[0] = true;
    }
    let canon_rect = HyperRect::new(
        vec![0.0; d],
        (0..d).map(|i| r.edge(transform.perm[i])).collect(),
    )?;
    let canon_pivot = transform.forward_point(x);
    Ok((transform, canon_rect, canon_pivot))
}

/// Canonicalization with the planar pivot condition: the transformed
/// pivot's first coordinate is at least half the shortest edge.
pub fn canonicalize(r: &HyperRect, x: &Point) -> Result<(FrameTransform, HyperRect, Point)> {
    canonicalize_with_threshold(r, x, |r| 0.5 * r.shortest_edge())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::{prop_assert, proptest};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn rect(lo: &[f64], hi: &[f64]) -> HyperRect {
        HyperRect::new(lo.to_vec(), hi.to_vec()).unwrap()
    }

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords.to_vec()).unwrap()
    }

    #[test]
    fn unit_square_faces_all_on_boundary() {
        let faces = HyperRect::unit_cube(2).faces();
        assert_eq!(faces.len(), 4);
        assert!(faces.iter().all(|f| f.on_unit_cube_boundary()));
    }

    #[test]
    fn thin_rect_boundary_flags() {
        // [0,1/3] x [0,1]: three sides lie on the cube boundary, x0 = 1/3
        // does not.
        let r = rect(&[0.0, 0.0], &[1.0 / 3.0, 1.0]);
        let faces = r.faces();
        let flags: Vec<bool> = faces.iter().map(|f| f.on_unit_cube_boundary()).collect();
        // order: (0,lo)=x0=0, (0,hi)=x0=1/3, (1,lo)=x1=0, (1,hi)=x1=1
        assert_eq!(flags, vec![true, false, true, true]);
    }

    #[test]
    fn interior_box_has_no_boundary_faces() {
        let r = rect(&[0.25, 0.25, 0.25], &[0.5, 0.5, 0.5]);
        let faces = r.faces();
        assert_eq!(faces.len(), 6);
        assert!(faces.iter().all(|f| !f.on_unit_cube_boundary()));
    }

    #[test]
    fn diam_vol_aspect() {
        let sq = HyperRect::unit_cube(2);
        assert!((sq.diam() - 2.0_f64.sqrt()).abs() < 1e-15);
        assert_eq!(sq.vol(), 1.0);
        assert_eq!(sq.aspect_ratio(), 1.0);

        for d in 1..=6 {
            let cube = HyperRect::unit_cube(d);
            assert!((cube.diam() - (d as f64).sqrt()).abs() < 1e-15);
        }

        let r = rect(&[1.0 / 3.0, 0.0], &[1.0, 1.0]);
        assert!((r.vol() - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.aspect_ratio() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn point_face_distance() {
        let r = rect(&[1.0 / 6.0, 0.0], &[1.0, 1.0]);
        let e = r.faces()[0].clone(); // {1/6} x [0,1]
        assert!((e.dist(&pt(&[0.5, 0.5])) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.dist(&pt(&[1.0 / 6.0, 0.3])), 0.0);

        // the face {0.5} x [0.6, 1]: clamp the free coordinate, then norm
        let f = rect(&[0.5, 0.6], &[0.9, 1.0]).face_at(0, 0.5);
        let expected = (0.25_f64 + 0.36).sqrt();
        assert!((f.dist(&pt(&[0.0, 0.0])) - expected).abs() < 1e-15);
    }

    #[test]
    fn degenerate_rect_rejected() {
        assert!(HyperRect::new(vec![0.0, 0.3], vec![1.0, 0.3]).is_err());
        assert!(HyperRect::new(vec![0.0], vec![1.2]).is_err());
    }

    #[test]
    fn net_on_unit_segment_within_budget() {
        // delta = sqrt(r * eps) with r = 1, eps = 1e-4: grid spacing equals
        // delta, so one section costs about sqrt(r/eps) = 100 queries (the
        // +1 is the mandatory second endpoint).
        let seg = HyperRect::unit_cube(2).face_at(0, 0.5);
        let net = build_net(&seg, 1e-2);
        assert_eq!(net.points.len(), 101);
        // spec budget for both trap sections together, up to the endpoint
        // overhead of each segment
        assert!(2 * net.points.len() <= 2 * 100 + 4);
    }

    #[test]
    fn coarse_net_is_vertex_set() {
        let r = rect(&[0.2, 0.3, 0.4], &[0.4, 0.5, 0.6]);
        for face in r.faces() {
            let net = build_net(&face, face.diam());
            let mut verts = face.vertices();
            let mut pts = net.points.clone();
            let key = |p: &Point| {
                p.coords()
                    .iter()
                    .map(|c| format!("{c:.12}"))
                    .collect::<Vec<_>>()
                    .join(",")
            };
            verts.sort_by_key(key);
            pts.sort_by_key(key);
            assert_eq!(pts, verts);
        }
    }

    #[test]
    fn square_face_net_count_and_covering() {
        // side 0.2 face in d = 3 with delta = 0.1: step bound
        // 0.1/sqrt(2) ~ 0.0707 forces 3 intervals per axis, 16 points,
        // and the covering radius comes out at half of delta.
        let r = rect(&[0.4, 0.4, 0.4], &[0.6, 0.6, 0.6]);
        let face = r.face_at(2, 0.4);
        let net = build_net(&face, 0.1);
        assert_eq!(net.points.len(), 16);

        // brute-force covering radius over the face at resolution 1e-3
        let mut worst: f64 = 0.0;
        let n = 200;
        for i in 0..=n {
            for j in 0..=n {
                let p = pt(&[
                    0.4 + 0.2 * i as f64 / n as f64,
                    0.4 + 0.2 * j as f64 / n as f64,
                    0.4,
                ]);
                let best = net
                    .points
                    .iter()
                    .map(|q| q.dist(&p))
                    .fold(f64::MAX, f64::min);
                worst = worst.max(best);
            }
        }
        assert!(worst <= 0.05 + 1e-12, "covering radius {worst}");
    }

    #[test]
    fn canonicalize_identity_on_square() {
        let r = HyperRect::unit_cube(2);
        let x = pt(&[0.5, 0.5]);
        let (t, cr, cx) = canonicalize(&r, &x).unwrap();
        assert_eq!(t.perm, vec![0, 1]);
        assert!(t.flip.iter().all(|&f| !f));
        assert_eq!(cr, r);
        assert_eq!(cx, x);
    }

    #[test]
    fn canonicalize_reflects_when_pivot_too_close() {
        // [0,1] x [0,1/3] with pivot (0.1, 0.2): first coordinate 0.1 is
        // below r/2 = 1/6, so the long axis is reflected and the pivot
        // lands at 0.9.
        let r = rect(&[0.0, 0.0], &[1.0, 1.0 / 3.0]);
        let x = pt(&[0.1, 0.2]);
        let (t, cr, cx) = canonicalize(&r, &x).unwrap();
        assert_eq!(t.perm, vec![0, 1]);
        assert!(t.flip[0] && !t.flip[1]);
        assert!((cx.coords()[0] - 0.9).abs() < 1e-15);
        assert!(cx.coords()[0] >= 0.5 * cr.shortest_edge());
        assert!((cr.hi()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn canonicalize_rejects_bad_aspect() {
        let r = rect(&[0.0, 0.0], &[1.0, 0.2]);
        assert!(matches!(
            canonicalize(&r, &pt(&[0.5, 0.1])),
            Err(Error::AspectRatioTooLarge(_))
        ));
    }

    #[test]
    fn canonicalize_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = rect(&[0.1, 0.3, 0.2], &[0.4, 0.5, 0.35]);
        let x = pt(&[0.12, 0.44, 0.3]);
        let (t, _, _) = canonicalize(&r, &x).unwrap();
        for _ in 0..100 {
            let p = Point::clamped(
                (0..3)
                    .map(|i| rng.gen_range(r.lo()[i]..r.hi()[i]))
                    .collect(),
            );
            let back = t.backward_point(&t.forward_point(&p));
            assert!(back.dist(&p) <= 1e-12);
        }
    }

    #[test]
    fn canonicalize_maps_faces_to_faces_bijectively() {
        let r = rect(&[0.1, 0.3, 0.2], &[0.4, 0.5, 0.35]);
        let x = pt(&[0.15, 0.45, 0.22]);
        let (t, cr, _) = canonicalize(&r, &x).unwrap();
        let canon_faces = cr.faces();
        let mut seen = vec![false; canon_faces.len()];
        for face in r.faces() {
            // map two opposite corners of the source face; the image must
            // span exactly one canonical face
            let verts = face.vertices();
            let a = t.forward_point(&verts[0]);
            let b = t.forward_point(verts.last().unwrap());
            let hits: Vec<usize> = canon_faces
                .iter()
                .enumerate()
                .filter(|(_, cf)| cf.dist(&a) <= 1e-12 && cf.dist(&b) <= 1e-12)
                .map(|(i, _)| i)
                .collect();
            assert_eq!(hits.len(), 1, "face image not unique");
            assert!(!seen[hits[0]], "two faces mapped to the same image");
            seen[hits[0]] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn every_rect_vertex_lies_on_d_faces() {
        let r = rect(&[0.2, 0.1, 0.3], &[0.5, 0.9, 0.6]);
        let faces = r.faces();
        for mask in 0..8usize {
            let v = pt(&(0..3)
                .map(|i| if mask >> i & 1 == 1 { r.hi()[i] } else { r.lo()[i] })
                .collect::<Vec<_>>());
            let incident = faces.iter().filter(|f| f.dist(&v) <= 1e-12).count();
            assert_eq!(incident, 3);
        }
    }

    proptest! {
        #[test]
        fn net_covering_radius_holds(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = rng.gen_range(2usize..=4);
            let lo: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..0.6)).collect();
            let hi: Vec<f64> = lo.iter().map(|&l| l + rng.gen_range(0.05..0.39)).collect();
            let r = HyperRect::new(lo, hi).unwrap();
            let faces = r.faces();
            let face = &faces[rng.gen_range(0..faces.len())];
            let delta = rng.gen_range(0.02..0.3);
            let net = build_net(face, delta);
            // random points on the face must be within delta/2 of the net
            for _ in 0..100 {
                let coords: Vec<f64> = (0..d)
                    .map(|i| {
                        if i == face.axis() {
                            face.fixed_value()
                        } else {
                            rng.gen_range(face.lo()[i]..face.hi()[i])
                        }
                    })
                    .collect();
                let p = Point::clamped(coords);
                let best = net.points.iter().map(|q| q.dist(&p)).fold(f64::MAX, f64::min);
                prop_assert!(best <= 0.5 * delta + 1e-12);
            }
        }

        #[test]
        fn canonicalize_preserves_distances(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = rng.gen_range(1usize..=4);
            let lo: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..0.5)).collect();
            let base = rng.gen_range(0.1..0.4);
            // aspect ratio at most 3 by construction
            let hi: Vec<f64> = lo
                .iter()
                .map(|&l| l + base * rng.gen_range(0.34..1.0))
                .collect();
            let r = HyperRect::new(lo, hi).unwrap();
            let x = r.center();
            let (t, _, _) = canonicalize(&r, &x).unwrap();
            let sample = |rng: &mut ChaCha8Rng| {
                Point::clamped(
                    (0..d).map(|i| rng.gen_range(r.lo()[i]..r.hi()[i])).collect(),
                )
            };
            for _ in 0..50 {
                let a = sample(&mut rng);
                let b = sample(&mut rng);
                let fa = t.forward_point(&a);
                let fb = t.forward_point(&b);
                prop_assert!((fa.dist(&fb) - a.dist(&b)).abs() <= 1e-12);
            }
        }
    }
}
