//! Planar geometry primitives.
//!
//! Everything here works in the (unprojected) coordinate units of the input
//! data. Rings are stored open (the closing vertex is implicit) and polygons
//! are normalized on construction so the outer ring is counterclockwise and
//! holes are clockwise.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Number of segments used for circular buffers unless overridden.
pub const DEFAULT_BUFFER_SEGMENTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Axis-aligned bounding box. Zero-width boxes are allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl BBox {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self> {
        let b = BBox { xmin, ymin, xmax, ymax };
        if ![xmin, ymin, xmax, ymax].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite bounding box {b:?}")));
        }
        if xmin > xmax || ymin > ymax {
            return Err(Error::InvalidInput(format!("inverted bounding box {b:?}")));
        }
        Ok(b)
    }

    pub fn of_point(p: Point) -> Self {
        BBox {
            xmin: p.x,
            ymin: p.y,
            xmax: p.x,
            ymax: p.y,
        }
    }

    /// Tight bounds of a non-empty point sequence.
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = BBox::of_point(*first);
        for p in it {
            b.include(*p);
        }
        Some(b)
    }

    pub fn include(&mut self, p: Point) {
        self.xmin = self.xmin.min(p.x);
        self.ymin = self.ymin.min(p.y);
        self.xmax = self.xmax.max(p.x);
        self.ymax = self.ymax.max(p.y);
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            xmin: self.xmin.min(other.xmin),
            ymin: self.ymin.min(other.ymin),
            xmax: self.xmax.max(other.xmax),
            ymax: self.ymax.max(other.ymax),
        }
    }

    /// Grows the box by `d` on every side.
    pub fn expand(&self, d: f64) -> BBox {
        BBox {
            xmin: self.xmin - d,
            ymin: self.ymin - d,
            xmax: self.xmax + d,
            ymax: self.ymax + d,
        }
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new((self.xmin + self.xmax) / 2.0, (self.ymin + self.ymax) / 2.0)
    }

    pub fn is_degenerate(&self) -> bool {
        self.xmin >= self.xmax || self.ymin >= self.ymax
    }

    /// Closed-interval overlap test; touching boxes intersect.
    pub fn intersects(&self, other: &BBox) -> bool {
        self.xmin <= other.xmax && other.xmin <= self.xmax && self.ymin <= other.ymax && other.ymin <= self.ymax
    }

    pub fn contains_point(&self, p: Point) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub fn contains_bbox(&self, other: &BBox) -> bool {
        other.xmin >= self.xmin && other.xmax <= self.xmax && other.ymin >= self.ymin && other.ymax <= self.ymax
    }

    /// Squared distance from `p` to the closest point of the box (0 inside).
    pub fn distance_sq_to(&self, p: Point) -> f64 {
        let dx = (self.xmin - p.x).max(0.0).max(p.x - self.xmax);
        let dy = (self.ymin - p.y).max(0.0).max(p.y - self.ymax);
        dx * dx + dy * dy
    }

    /// Corners in counterclockwise order starting at the minimum corner.
    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.xmin, self.ymin),
            Point::new(self.xmax, self.ymin),
            Point::new(self.xmax, self.ymax),
            Point::new(self.xmin, self.ymax),
        ]
    }
}

/// Closed ring stored without the repeated closing vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    vertices: Vec<Point>,
}

impl Ring {
    /// Drops an explicit closing vertex and consecutive duplicates, then
    /// requires at least three distinct vertices.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self> {
        if let Some(bad) = vertices.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite ring vertex {bad:?}")));
        }
        vertices.dedup();
        while vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "ring needs at least 3 distinct vertices, got {}",
                vertices.len()
            )));
        }
        Ok(Ring { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn bbox(&self) -> BBox {
        BBox::from_points(&self.vertices).expect("ring is non-empty")
    }

    /// Reverses orientation while keeping the first vertex in place.
    fn reversed(&self) -> Ring {
        let mut v = Vec::with_capacity(self.vertices.len());
        v.push(self.vertices[0]);
        v.extend(self.vertices[1..].iter().rev().copied());
        Ring { vertices: v }
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

/// Polygon with counterclockwise outer ring and clockwise holes.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    outer: Ring,
    holes: Vec<Ring>,
}

impl Polygon {
    /// Builds a polygon, fixing ring orientation where needed.
    pub fn new(outer: Ring, holes: Vec<Ring>) -> Result<Self> {
        let outer_area = outer.signed_area();
        if outer_area == 0.0 {
            return Err(Error::InvalidInput("polygon outer ring has zero area".into()));
        }
        let outer = if outer_area < 0.0 { outer.reversed() } else { outer };
        let mut fixed = Vec::with_capacity(holes.len());
        for h in holes {
            let a = h.signed_area();
            if a == 0.0 {
                return Err(Error::InvalidInput("polygon hole has zero area".into()));
            }
            fixed.push(if a > 0.0 { h.reversed() } else { h });
        }
        let poly = Polygon { outer, holes: fixed };
        if poly.rings().map(Ring::signed_area).sum::<f64>() <= 0.0 {
            return Err(Error::InvalidInput("holes cover the whole polygon".into()));
        }
        Ok(poly)
    }

    pub fn from_bbox(b: &BBox) -> Result<Self> {
        Polygon::new(Ring::new(b.corners().to_vec())?, Vec::new())
    }

    pub fn outer(&self) -> &Ring {
        &self.outer
    }

    pub fn holes(&self) -> &[Ring] {
        &self.holes
    }

    /// Outer ring followed by the holes.
    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.outer).chain(self.holes.iter())
    }

    pub fn bbox(&self) -> BBox {
        self.outer.bbox()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    vertices: Vec<Point>,
}

impl Polyline {
    pub fn new(mut vertices: Vec<Point>) -> Result<Self> {
        if let Some(bad) = vertices.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite polyline vertex {bad:?}")));
        }
        vertices.dedup();
        if vertices.len() < 2 {
            return Err(Error::InvalidInput(
                "polyline needs at least 2 distinct vertices".into(),
            ));
        }
        Ok(Polyline { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(Point),
    Polyline(Polyline),
    Polygon(Polygon),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryKind {
    Point,
    Polyline,
    Polygon,
}

impl std::fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GeometryKind::Point => "point",
            GeometryKind::Polyline => "polyline",
            GeometryKind::Polygon => "polygon",
        })
    }
}

impl Geometry {
    pub fn kind(&self) -> GeometryKind {
        match self {
            Geometry::Point(_) => GeometryKind::Point,
            Geometry::Polyline(_) => GeometryKind::Polyline,
            Geometry::Polygon(_) => GeometryKind::Polygon,
        }
    }

    pub fn bbox(&self) -> BBox {
        bbox_of(self)
    }

    /// Point used for unique chunk assignment: the point itself, or the first
    /// vertex of a polyline / outer ring.
    pub fn representative_point(&self) -> Point {
        match self {
            Geometry::Point(p) => *p,
            Geometry::Polyline(l) => l.vertices[0],
            Geometry::Polygon(poly) => poly.outer.vertices[0],
        }
    }
}

pub fn bbox_of(geometry: &Geometry) -> BBox {
    match geometry {
        Geometry::Point(p) => BBox::of_point(*p),
        Geometry::Polyline(l) => BBox::from_points(&l.vertices).expect("polyline is non-empty"),
        Geometry::Polygon(poly) => poly.bbox(),
    }
}

/// Shoelace signed area of an implicitly closed vertex list, taken relative
/// to the first vertex. Vertices on one axis-parallel line give exactly 0.
pub fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let o = vertices[0];
    let mut twice = 0.0;
    for w in vertices[1..].windows(2) {
        let (ax, ay) = (w[0].x - o.x, w[0].y - o.y);
        let (bx, by) = (w[1].x - o.x, w[1].y - o.y);
        twice += ax * by - bx * ay;
    }
    twice / 2.0
}

/// Area of the outer ring minus the hole areas.
pub fn polygon_area(poly: &Polygon) -> f64 {
    poly.rings().map(Ring::signed_area).sum()
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    cross == 0.0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Even-odd containment; points on any ring boundary count as inside.
pub fn point_in_polygon(p: Point, poly: &Polygon) -> bool {
    if !poly.bbox().contains_point(p) {
        return false;
    }
    let mut inside = false;
    for ring in poly.rings() {
        for (a, b) in ring.edges() {
            if on_segment(p, a, b) {
                return true;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

/// Which side of an axis-aligned line is kept by a clip pass.
#[derive(Debug, Clone, Copy)]
pub(crate) enum HalfPlane {
    XAtLeast(f64),
    XAtMost(f64),
    YAtLeast(f64),
    YAtMost(f64),
}

impl HalfPlane {
    fn keeps(&self, p: Point) -> bool {
        match *self {
            HalfPlane::XAtLeast(v) => p.x >= v,
            HalfPlane::XAtMost(v) => p.x <= v,
            HalfPlane::YAtLeast(v) => p.y >= v,
            HalfPlane::YAtMost(v) => p.y <= v,
        }
    }

    /// Crossing of segment ab with the boundary line; the clipped coordinate
    /// is set exactly to the boundary value.
    fn crossing(&self, a: Point, b: Point) -> Point {
        match *self {
            HalfPlane::XAtLeast(v) | HalfPlane::XAtMost(v) => {
                let t = (v - a.x) / (b.x - a.x);
                Point::new(v, a.y + t * (b.y - a.y))
            }
            HalfPlane::YAtLeast(v) | HalfPlane::YAtMost(v) => {
                let t = (v - a.y) / (b.y - a.y);
                Point::new(a.x + t * (b.x - a.x), v)
            }
        }
    }
}

/// One Sutherland–Hodgman pass against an axis-aligned half plane.
pub(crate) fn clip_half_plane(input: &[Point], plane: HalfPlane, out: &mut Vec<Point>) {
    out.clear();
    let n = input.len();
    if n == 0 {
        return;
    }
    let mut prev = input[n - 1];
    let mut prev_in = plane.keeps(prev);
    for &cur in input {
        let cur_in = plane.keeps(cur);
        if cur_in {
            if !prev_in {
                out.push(plane.crossing(prev, cur));
            }
            out.push(cur);
        } else if prev_in {
            out.push(plane.crossing(prev, cur));
        }
        prev = cur;
        prev_in = cur_in;
    }
}

/// Clips a vertex ring to the horizontal band `ymin <= y <= ymax`.
pub(crate) fn clip_to_band(input: &[Point], ymin: f64, ymax: f64, scratch: &mut Vec<Point>, out: &mut Vec<Point>) {
    clip_half_plane(input, HalfPlane::YAtLeast(ymin), scratch);
    clip_half_plane(scratch, HalfPlane::YAtMost(ymax), out);
}

/// Clips a vertex ring to the vertical band `xmin <= x <= xmax`.
pub(crate) fn clip_to_columns(input: &[Point], xmin: f64, xmax: f64, scratch: &mut Vec<Point>, out: &mut Vec<Point>) {
    clip_half_plane(input, HalfPlane::XAtLeast(xmin), scratch);
    clip_half_plane(scratch, HalfPlane::XAtMost(xmax), out);
}

/// Raw Sutherland–Hodgman clip against a rectangle. The bottom, top, left and
/// right edges are applied in that order; the result may contain degenerate
/// spikes along the rectangle boundary but its signed area is exact.
pub fn clip_vertices_to_rect(vertices: &[Point], rect: &BBox) -> Vec<Point> {
    let mut scratch = Vec::with_capacity(vertices.len() + 4);
    let mut band = Vec::with_capacity(vertices.len() + 4);
    let mut out = Vec::with_capacity(vertices.len() + 4);
    clip_to_band(vertices, rect.ymin, rect.ymax, &mut scratch, &mut band);
    clip_to_columns(&band, rect.xmin, rect.xmax, &mut scratch, &mut out);
    out
}

/// Clips a ring against a rectangle. Orientation is preserved; `None` when
/// nothing with positive extent remains.
pub fn clip_ring_to_rect(ring: &Ring, rect: &BBox) -> Option<Ring> {
    let clipped = clip_vertices_to_rect(ring.vertices(), rect);
    if signed_area(&clipped) == 0.0 {
        return None;
    }
    Ring::new(clipped).ok()
}

/// Sutherland–Hodgman clip of an arbitrary subject against a convex,
/// counterclockwise clip polygon.
pub fn clip_to_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut output = subject.to_vec();
    let mut input = Vec::with_capacity(subject.len() + clip.len());
    let m = clip.len();
    for i in 0..m {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % m];
        if a == b {
            continue;
        }
        std::mem::swap(&mut input, &mut output);
        output.clear();
        let side = |p: Point| (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        let mut prev = input[input.len() - 1];
        let mut prev_side = side(prev);
        for &cur in &input {
            let cur_side = side(cur);
            if cur_side >= 0.0 {
                if prev_side < 0.0 {
                    output.push(line_crossing(prev, cur, prev_side, cur_side));
                }
                output.push(cur);
            } else if prev_side >= 0.0 {
                output.push(line_crossing(prev, cur, prev_side, cur_side));
            }
            prev = cur;
            prev_side = cur_side;
        }
    }
    output
}

fn line_crossing(p: Point, q: Point, sp: f64, sq: f64) -> Point {
    let t = sp / (sp - sq);
    Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))
}

/// Regular `segments`-gon inscribed in the circle of `radius` around `center`,
/// first vertex at angle 0, counterclockwise.
pub fn buffer_point(center: Point, radius: f64, segments: usize) -> Result<Polygon> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "buffer radius must be > 0, got {radius}"
        )));
    }
    if segments < 3 {
        return Err(Error::InvalidParameter(format!(
            "buffer needs at least 3 segments, got {segments}"
        )));
    }
    let step = 2.0 * PI / segments as f64;
    let vertices = (0..segments)
        .map(|k| {
            let (s, c) = (step * k as f64).sin_cos();
            Point::new(center.x + radius * c, center.y + radius * s)
        })
        .collect();
    Polygon::new(Ring::new(vertices)?, Vec::new())
}

/// Euclidean distance from `p` to the closed segment `ab`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len_sq = dx * dx + dy * dy;
    if len_sq == 0.0 {
        return p.distance(&a);
    }
    let t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len_sq;
    if t <= 0.0 {
        p.distance(&a)
    } else if t >= 1.0 {
        p.distance(&b)
    } else {
        let foot = Point::new(a.x + t * dx, a.y + t * dy);
        p.distance(&foot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(coords: &[(f64, f64)]) -> Vec<Point> {
        coords.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    fn unit_square() -> Polygon {
        Polygon::new(
            Ring::new(pts(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)])).unwrap(),
            vec![],
        )
        .unwrap()
    }

    fn square_with_hole() -> Polygon {
        let hole = Ring::new(pts(&[(0.25, 0.25), (0.75, 0.25), (0.75, 0.75), (0.25, 0.75)])).unwrap();
        Polygon::new(unit_square().outer().clone(), vec![hole]).unwrap()
    }

    #[test]
    fn bboxes() {
        assert_eq!(
            bbox_of(&Geometry::Point(Point::new(2., 3.))),
            BBox::new(2., 3., 2., 3.).unwrap()
        );
        assert_eq!(
            bbox_of(&Geometry::Polygon(unit_square())),
            BBox::new(0., 0., 1., 1.).unwrap()
        );
        let line = Polyline::new(pts(&[(0., 0.), (5., -1.)])).unwrap();
        assert_eq!(bbox_of(&Geometry::Polyline(line)), BBox::new(0., -1., 5., 0.).unwrap());
    }

    #[test]
    fn ring_normalization() {
        let r = Ring::new(pts(&[(0., 0.), (0., 0.), (1., 0.), (1., 1.), (0., 0.)])).unwrap();
        assert_eq!(r.vertices().len(), 3);
        assert!(Ring::new(pts(&[(0., 0.), (1., 0.), (0., 0.)])).is_err());
        // clockwise input is flipped, first vertex kept
        let cw = Ring::new(pts(&[(0., 0.), (0., 1.), (1., 1.), (1., 0.)])).unwrap();
        let poly = Polygon::new(cw, vec![]).unwrap();
        assert!(poly.outer().signed_area() > 0.0);
        assert_eq!(poly.outer().vertices()[0], Point::new(0., 0.));
        assert!(square_with_hole().holes()[0].signed_area() < 0.0);
    }

    #[test]
    fn containment() {
        assert!(point_in_polygon(Point::new(0.5, 0.5), &unit_square()));
        assert!(!point_in_polygon(Point::new(2., 2.), &unit_square()));
        assert!(!point_in_polygon(Point::new(0.5, 0.5), &square_with_hole()));
        assert!(point_in_polygon(Point::new(0.1, 0.5), &square_with_hole()));
        // boundary counts as inside, including hole boundaries
        assert!(point_in_polygon(Point::new(1.0, 0.3), &unit_square()));
        assert!(point_in_polygon(Point::new(0.0, 0.0), &unit_square()));
        assert!(point_in_polygon(Point::new(0.25, 0.5), &square_with_hole()));
    }

    #[test]
    fn rect_clipping() {
        let sq = unit_square();
        let same = clip_ring_to_rect(sq.outer(), &BBox::new(0., 0., 1., 1.).unwrap()).unwrap();
        assert_eq!(same.signed_area(), 1.0);
        let half = clip_ring_to_rect(sq.outer(), &BBox::new(0.5, 0., 1.5, 1.).unwrap()).unwrap();
        assert_eq!(half.signed_area(), 0.5);
        assert!(clip_ring_to_rect(sq.outer(), &BBox::new(2., 2., 3., 3.).unwrap()).is_none());
        // holes keep their sign
        let holed = square_with_hole();
        let hole = &holed.holes()[0];
        let clipped = clip_ring_to_rect(hole, &BBox::new(0., 0., 0.5, 1.).unwrap()).unwrap();
        assert_eq!(clipped.signed_area(), -0.125);
    }

    #[test]
    fn areas() {
        assert_eq!(polygon_area(&unit_square()), 1.0);
        let tri = Polygon::new(Ring::new(pts(&[(0., 0.), (1., 0.), (0., 1.)])).unwrap(), vec![]).unwrap();
        assert_eq!(polygon_area(&tri), 0.5);
        assert_eq!(polygon_area(&square_with_hole()), 0.75);
    }

    #[test]
    fn buffers() {
        let sq = buffer_point(Point::new(0., 0.), 1.0, 4).unwrap();
        let expected = pts(&[(1., 0.), (0., 1.), (-1., 0.), (0., -1.)]);
        for (got, want) in sq.outer().vertices().iter().zip(&expected) {
            assert!(got.distance(want) < 1e-15, "{got:?} vs {want:?}");
        }

        let n = 64.0;
        let closed_form = n / 2.0 * (2.0 * PI / n).sin();
        let area = polygon_area(&buffer_point(Point::new(0., 0.), 1.0, 64).unwrap());
        assert!((area - closed_form).abs() < 1e-12);
        assert!((area - 3.136_548_490_545_939).abs() < 1e-12);

        let b = buffer_point(Point::new(5., 5.), 2.0, 64).unwrap().bbox();
        assert!(BBox::new(3., 3., 7., 7.).unwrap().contains_bbox(&b));

        assert!(matches!(
            buffer_point(Point::new(0., 0.), 0.0, 64),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            buffer_point(Point::new(0., 0.), -1.0, 64),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn buffer_area_converges() {
        let exact = PI * 9.0;
        let a64 = polygon_area(&buffer_point(Point::new(1., 2.), 3.0, 64).unwrap());
        let a256 = polygon_area(&buffer_point(Point::new(1., 2.), 3.0, 256).unwrap());
        assert!((a256 - exact).abs() < (a64 - exact).abs());
    }

    #[test]
    fn segment_distance() {
        let (a, b) = (Point::new(-1., 0.), Point::new(1., 0.));
        assert_eq!(point_segment_distance(Point::new(0., 1.), a, b), 1.0);
        assert_eq!(point_segment_distance(Point::new(2., 0.), a, b), 1.0);
        let o = Point::new(0., 0.);
        assert_eq!(point_segment_distance(Point::new(3., 4.), o, o), 5.0);
    }

    #[test]
    fn convex_clip_matches_rect_clip() {
        let star = Polygon::new(
            Ring::new(pts(&[
                (0., 0.),
                (2., 1.),
                (4., 0.),
                (3., 2.),
                (4., 4.),
                (2., 3.),
                (0., 4.),
                (1., 2.),
            ]))
            .unwrap(),
            vec![],
        )
        .unwrap();
        let rect = BBox::new(0.5, 0.5, 3.2, 2.5).unwrap();
        let a = signed_area(&clip_vertices_to_rect(star.outer().vertices(), &rect));
        let b = signed_area(&clip_to_convex(star.outer().vertices(), &rect.corners()));
        assert!((a - b).abs() < 1e-12);
    }
}
