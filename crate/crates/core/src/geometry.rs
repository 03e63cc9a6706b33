use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::Scalar;

/// A point (or vector) in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    #[inline]
    pub const fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn from_f64(x: f64, y: f64) -> Self {
        Self::new(T::lit(x), T::lit(y))
    }

    #[inline]
    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn midpoint(self, other: Self) -> Self {
        (self + other) * T::lit(0.5)
    }
}

impl<T: Scalar> Add for Point2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> Sub for Point2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Mul<T> for Point2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl<T: Scalar> Neg for Point2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Twice the signed area of triangle `(a, b, c)`; positive when counter-clockwise.
#[inline]
pub fn orient2d<T: Scalar>(a: Point2<T>, b: Point2<T>, c: Point2<T>) -> T {
    (b - a).cross(c - a)
}

/// Signed area of a closed polygon (shoelace formula).
pub fn signed_area<T: Scalar>(poly: &[Point2<T>]) -> T {
    let n = poly.len();
    let mut twice = T::zero();
    for i in 0..n {
        twice += poly[i].cross(poly[(i + 1) % n]);
    }
    twice * T::lit(0.5)
}

/// Area-weighted centroid of a polygon with non-zero signed area.
///
/// Coordinates are shifted to the first vertex before accumulating so that
/// translating the polygon does not change the rounding.
pub fn polygon_centroid<T: Scalar>(poly: &[Point2<T>]) -> Point2<T> {
    let n = poly.len();
    let origin = poly[0];
    let mut twice_area = T::zero();
    let mut cx = T::zero();
    let mut cy = T::zero();
    for i in 0..n {
        let p = poly[i] - origin;
        let q = poly[(i + 1) % n] - origin;
        let c = p.cross(q);
        twice_area += c;
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    let denom = T::lit(3.0) * twice_area;
    origin + Point2::new(cx / denom, cy / denom)
}

/// Whether the closed segments `p1p2` and `q1q2` intersect.
pub fn segments_intersect<T: Scalar>(p1: Point2<T>, p2: Point2<T>, q1: Point2<T>, q2: Point2<T>) -> bool {
    let d1 = orient2d(q1, q2, p1);
    let d2 = orient2d(q1, q2, p2);
    let d3 = orient2d(p1, p2, q1);
    let d4 = orient2d(p1, p2, q2);
    let zero = T::zero();
    if ((d1 > zero && d2 < zero) || (d1 < zero && d2 > zero))
        && ((d3 > zero && d4 < zero) || (d3 < zero && d4 > zero))
    {
        return true;
    }
    let on_segment = |a: Point2<T>, b: Point2<T>, p: Point2<T>| {
        p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
    };
    (d1 == zero && on_segment(q1, q2, p1))
        || (d2 == zero && on_segment(q1, q2, p2))
        || (d3 == zero && on_segment(p1, p2, q1))
        || (d4 == zero && on_segment(p1, p2, q2))
}

/// Whether a closed polygon has no self-intersections between non-adjacent edges.
pub fn is_simple<T: Scalar>(poly: &[Point2<T>]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a1 = poly[i];
        let a2 = poly[(i + 1) % n];
        for j in (i + 1)..n {
            // adjacent edges share a vertex by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(a1, a2, poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Axis-aligned rectangle `[xmin, xmax] × [ymin, ymax]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect<T> {
    pub xmin: T,
    pub xmax: T,
    pub ymin: T,
    pub ymax: T,
}

impl<T: Scalar> Rect<T> {
    pub const fn new(xmin: T, xmax: T, ymin: T, ymax: T) -> Self {
        Self { xmin, xmax, ymin, ymax }
    }

    pub fn unit() -> Self {
        Self::new(T::zero(), T::one(), T::zero(), T::one())
    }

    pub fn from_f64(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        Self::new(T::lit(xmin), T::lit(xmax), T::lit(ymin), T::lit(ymax))
    }

    pub fn width(&self) -> T {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> T {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.xmin.is_finite() && self.xmax.is_finite() && self.ymin.is_finite() && self.ymax.is_finite())
            || self.width() <= T::zero()
            || self.height() <= T::zero()
    }

    /// Distance tolerance for deciding whether a point lies on the perimeter.
    pub fn snap_tol(&self) -> T {
        self.width().max(self.height()) * T::lit(1e-9).max(T::epsilon() * T::lit(100.0))
    }

    pub fn on_boundary(&self, p: Point2<T>) -> bool {
        let tol = self.snap_tol();
        (p.x - self.xmin).abs() <= tol
            || (p.x - self.xmax).abs() <= tol
            || (p.y - self.ymin).abs() <= tol
            || (p.y - self.ymax).abs() <= tol
    }

    /// Moves coordinates within the snapping tolerance exactly onto the perimeter.
    pub fn snap(&self, p: Point2<T>) -> Point2<T> {
        let tol = self.snap_tol();
        let snap1 = |v: T, lo: T, hi: T| {
            if (v - lo).abs() <= tol {
                lo
            } else if (v - hi).abs() <= tol {
                hi
            } else {
                v
            }
        };
        Point2::new(snap1(p.x, self.xmin, self.xmax), snap1(p.y, self.ymin, self.ymax))
    }

    pub fn corners(&self) -> [Point2<T>; 4] {
        [
            Point2::new(self.xmin, self.ymin),
            Point2::new(self.xmax, self.ymin),
            Point2::new(self.xmax, self.ymax),
            Point2::new(self.xmin, self.ymax),
        ]
    }
}
