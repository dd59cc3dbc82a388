//! Closest approach between line segments.

use crate::Vec3;

const PARALLEL_TOL: f64 = 1e-14;

/// Closest points between segments `p1 + s d1` and `p2 + t d2`, `s, t ∈ [0, 1]`.
///
/// Returns `(s, t)`. When the segments are parallel and their projections overlap,
/// the midpoint of the overlap is chosen so that the result is unique.
pub fn closest_parameters(p1: &Vec3, d1: &Vec3, p2: &Vec3, d2: &Vec3) -> (f64, f64) {
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    if a == 0.0 && e == 0.0 {
        return (0.0, 0.0);
    }
    if a == 0.0 {
        return (0.0, (f / e).clamp(0.0, 1.0));
    }
    let c = d1.dot(&r);
    if e == 0.0 {
        return ((-c / a).clamp(0.0, 1.0), 0.0);
    }
    let b = d1.dot(d2);
    let denom = a * e - b * b;
    let s = if denom > PARALLEL_TOL * a * e {
        ((b * f - c * e) / denom).clamp(0.0, 1.0)
    } else {
        // Parallel: overlap of segment 2 projected onto segment 1's parameter.
        let s0 = -c / a;
        let s1 = (b - c) / a;
        let lo = s0.min(s1).max(0.0);
        let hi = s0.max(s1).min(1.0);
        if lo <= hi {
            0.5 * (lo + hi)
        } else if s0.max(s1) < 0.0 {
            0.0
        } else {
            1.0
        }
    };
    let t = (b * s + f) / e;
    if t < 0.0 {
        ((-c / a).clamp(0.0, 1.0), 0.0)
    } else if t > 1.0 {
        (((b - c) / a).clamp(0.0, 1.0), 1.0)
    } else {
        (s, t)
    }
}

/// Closest points on two segments given as `(start, direction)` pairs.
pub fn closest_points(p1: &Vec3, d1: &Vec3, p2: &Vec3, d2: &Vec3) -> (Vec3, Vec3) {
    let (s, t) = closest_parameters(p1, d1, p2, d2);
    (p1 + s * d1, p2 + t * d2)
}

/// Distance between the axes of two rods centred at `q1`, `q2` with unit axes `n1`,
/// `n2` and common half-length `half`.
pub fn rod_distance(q1: &Vec3, n1: &Vec3, q2: &Vec3, n2: &Vec3, half: f64) -> f64 {
    let (c1, c2) = closest_points(
        &(q1 - half * n1),
        &(2.0 * half * n1),
        &(q2 - half * n2),
        &(2.0 * half * n2),
    );
    (c2 - c1).norm()
}
