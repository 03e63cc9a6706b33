//! Quadrature on polygons by sub-triangulation and symmetric triangle rules.

use thiserror::Error;

use crate::geometry::{orient2d, polygon_centroid, signed_area, Point2};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum QuadratureError {
    #[error("no triangle rule of degree {0} is available (max 6)")]
    UnsupportedDegree(usize),
    #[error("polygon could not be triangulated")]
    Triangulation,
}

/// Barycentric coordinates and weights (summing to one) of a symmetric rule.
struct TriangleRule {
    points: &'static [[f64; 3]],
    weights: &'static [f64],
}

const A4: f64 = 0.445_948_490_915_965;
const B4: f64 = 0.091_576_213_509_771;
const A5: f64 = 0.470_142_064_105_115;
const B5: f64 = 0.101_286_507_323_456;
const A6: f64 = 0.249_286_745_170_910;
const B6: f64 = 0.063_089_014_491_502;
const C6: [f64; 3] = [0.053_145_049_844_817, 0.310_352_451_033_784, 0.636_502_499_121_399];

static DEG1: TriangleRule = TriangleRule { points: &[[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]], weights: &[1.0] };

static DEG2: TriangleRule = TriangleRule {
    points: &[[2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0]],
    weights: &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
};

static DEG4: TriangleRule = TriangleRule {
    points: &[
        [A4, A4, 1.0 - 2.0 * A4],
        [A4, 1.0 - 2.0 * A4, A4],
        [1.0 - 2.0 * A4, A4, A4],
        [B4, B4, 1.0 - 2.0 * B4],
        [B4, 1.0 - 2.0 * B4, B4],
        [1.0 - 2.0 * B4, B4, B4],
    ],
    weights: &[
        0.223_381_589_678_011,
        0.223_381_589_678_011,
        0.223_381_589_678_011,
        0.109_951_743_655_322,
        0.109_951_743_655_322,
        0.109_951_743_655_322,
    ],
};

static DEG5: TriangleRule = TriangleRule {
    points: &[
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [A5, A5, 1.0 - 2.0 * A5],
        [A5, 1.0 - 2.0 * A5, A5],
        [1.0 - 2.0 * A5, A5, A5],
        [B5, B5, 1.0 - 2.0 * B5],
        [B5, 1.0 - 2.0 * B5, B5],
        [1.0 - 2.0 * B5, B5, B5],
    ],
    weights: &[
        0.225,
        0.132_394_152_788_506,
        0.132_394_152_788_506,
        0.132_394_152_788_506,
        0.125_939_180_544_827,
        0.125_939_180_544_827,
        0.125_939_180_544_827,
    ],
};

static DEG6: TriangleRule = TriangleRule {
    points: &[
        [A6, A6, 1.0 - 2.0 * A6],
        [A6, 1.0 - 2.0 * A6, A6],
        [1.0 - 2.0 * A6, A6, A6],
        [B6, B6, 1.0 - 2.0 * B6],
        [B6, 1.0 - 2.0 * B6, B6],
        [1.0 - 2.0 * B6, B6, B6],
        [C6[0], C6[1], C6[2]],
        [C6[0], C6[2], C6[1]],
        [C6[1], C6[0], C6[2]],
        [C6[1], C6[2], C6[0]],
        [C6[2], C6[0], C6[1]],
        [C6[2], C6[1], C6[0]],
    ],
    weights: &[
        0.116_786_275_726_379,
        0.116_786_275_726_379,
        0.116_786_275_726_379,
        0.050_844_906_370_207,
        0.050_844_906_370_207,
        0.050_844_906_370_207,
        0.082_851_075_618_374,
        0.082_851_075_618_374,
        0.082_851_075_618_374,
        0.082_851_075_618_374,
        0.082_851_075_618_374,
        0.082_851_075_618_374,
    ],
};

fn rule_for(degree: usize) -> Result<&'static TriangleRule, QuadratureError> {
    match degree {
        0 | 1 => Ok(&DEG1),
        2 => Ok(&DEG2),
        3 | 4 => Ok(&DEG4),
        5 => Ok(&DEG5),
        6 => Ok(&DEG6),
        d => Err(QuadratureError::UnsupportedDegree(d)),
    }
}

/// Quadrature points and weights on a triangle, exact for polynomials of total `degree`.
pub fn triangle_quadrature<T: Scalar>(
    tri: [Point2<T>; 3],
    degree: usize,
) -> Result<Vec<(Point2<T>, T)>, QuadratureError> {
    let rule = rule_for(degree)?;
    let area = orient2d(tri[0], tri[1], tri[2]).abs() * T::lit(0.5);
    // weights are rounded to 15 digits; renormalise so they sum to the area
    let wsum: f64 = rule.weights.iter().sum();
    Ok(rule
        .points
        .iter()
        .zip(rule.weights)
        .map(|(b, &w)| {
            let p = tri[0] * T::lit(b[0]) + tri[1] * T::lit(b[1]) + tri[2] * T::lit(b[2]);
            (p, area * T::lit(w / wsum))
        })
        .collect())
}

/// Splits a simple CCW polygon into triangles: a fan from the centroid when
/// every fan triangle is positively oriented, ear clipping otherwise.
pub fn triangulate<T: Scalar>(poly: &[Point2<T>]) -> Result<Vec<[Point2<T>; 3]>, QuadratureError> {
    let n = poly.len();
    if n < 3 {
        return Err(QuadratureError::Triangulation);
    }
    if n == 3 {
        return Ok(vec![[poly[0], poly[1], poly[2]]]);
    }
    let c = polygon_centroid(poly);
    let scale = signed_area(poly) * T::lit(1e-12);
    let fan: Vec<[Point2<T>; 3]> = (0..n).map(|i| [c, poly[i], poly[(i + 1) % n]]).collect();
    if fan.iter().all(|t| orient2d(t[0], t[1], t[2]) > scale) {
        return Ok(fan);
    }
    ear_clip(poly)
}

fn ear_clip<T: Scalar>(poly: &[Point2<T>]) -> Result<Vec<[Point2<T>; 3]>, QuadratureError> {
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let mut out = Vec::with_capacity(poly.len() - 2);
    while idx.len() > 3 {
        let m = idx.len();
        let ear = (0..m).find(|&k| {
            let (a, b, c) = (poly[idx[(k + m - 1) % m]], poly[idx[k]], poly[idx[(k + 1) % m]]);
            if orient2d(a, b, c) <= T::zero() {
                return false;
            }
            idx.iter().all(|&j| {
                let p = poly[j];
                if p == a || p == b || p == c {
                    return true;
                }
                // strictly outside or on the boundary of the candidate ear
                !(orient2d(a, b, p) > T::zero() && orient2d(b, c, p) > T::zero() && orient2d(c, a, p) > T::zero())
            })
        });
        let k = ear.ok_or(QuadratureError::Triangulation)?;
        out.push([poly[idx[(k + m - 1) % m]], poly[idx[k]], poly[idx[(k + 1) % m]]]);
        idx.remove(k);
    }
    out.push([poly[idx[0]], poly[idx[1]], poly[idx[2]]]);
    Ok(out)
}

/// Quadrature on a simple CCW polygon, exact for bivariate polynomials up to `degree` (≤ 6).
pub fn polygon_quadrature<T: Scalar>(poly: &[Point2<T>], degree: usize) -> Result<Vec<(Point2<T>, T)>, QuadratureError> {
    let rule_check = rule_for(degree)?;
    let tris = triangulate(poly)?;
    let mut out = Vec::with_capacity(tris.len() * rule_check.weights.len());
    for t in tris {
        out.extend(triangle_quadrature(t, degree)?);
    }
    Ok(out)
}
