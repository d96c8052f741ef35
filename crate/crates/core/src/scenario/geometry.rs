//! Planar and prism geometry for footprints and line-of-sight tests.

use super::Point;

const EPS: f64 = 1e-9;

pub(crate) fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn orientation(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> i8 {
    let c = cross(o, a, b);
    let scale = 1.0
        + (a[0] - o[0]).abs().max((a[1] - o[1]).abs())
            * (b[0] - o[0]).abs().max((b[1] - o[1]).abs());
    if c > EPS * scale {
        1
    } else if c < -EPS * scale {
        -1
    } else {
        0
    }
}

fn on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) - EPS
        && p[0] <= a[0].max(b[0]) + EPS
        && p[1] >= a[1].min(b[1]) - EPS
        && p[1] <= a[1].max(b[1]) + EPS
}

/// Closed-segment intersection, touching and collinear overlap included.
pub(crate) fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = orientation(q1, q2, p1);
    let d2 = orientation(q1, q2, p2);
    let d3 = orientation(p1, p2, q1);
    let d4 = orientation(p1, p2, q2);
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    (d1 == 0 && on_segment(p1, q1, q2))
        || (d2 == 0 && on_segment(p2, q1, q2))
        || (d3 == 0 && on_segment(q1, p1, p2))
        || (d4 == 0 && on_segment(q2, p1, p2))
}

/// Signed shoelace area; positive for counter-clockwise rings.
pub(crate) fn signed_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

pub(crate) fn centroid(poly: &[[f64; 2]]) -> [f64; 2] {
    let area = signed_area(poly);
    let n = poly.len();
    if area.abs() < EPS {
        let (sx, sy) = poly.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
        return [sx / n as f64, sy / n as f64];
    }
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let f = a[0] * b[1] - b[0] * a[1];
        cx += (a[0] + b[0]) * f;
        cy += (a[1] + b[1]) * f;
    }
    [cx / (6.0 * area), cy / (6.0 * area)]
}

/// No two non-adjacent edges touch and no adjacent edges fold back.
pub(crate) fn is_simple(poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a1 = poly[i];
        let a2 = poly[(i + 1) % n];
        if (a1[0] - a2[0]).abs() < EPS && (a1[1] - a2[1]).abs() < EPS {
            return false;
        }
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let b1 = poly[j];
            let b2 = poly[(j + 1) % n];
            if adjacent {
                // Adjacent edges share one vertex; they must not overlap beyond it.
                let (shared, other_a, other_b) = if j == i + 1 { (a2, a1, b2) } else { (a1, a2, b1) };
                if orientation(shared, other_a, other_b) == 0 {
                    let da = [other_a[0] - shared[0], other_a[1] - shared[1]];
                    let db = [other_b[0] - shared[0], other_b[1] - shared[1]];
                    if da[0] * db[0] + da[1] * db[1] > 0.0 {
                        return false;
                    }
                }
                continue;
            }
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

/// Point-in-polygon test that counts the boundary as inside.
pub(crate) fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if orientation(a, b, p) == 0 && on_segment(p, a, b) {
            return true;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

pub(crate) fn bbox(poly: &[[f64; 2]]) -> [f64; 4] {
    poly.iter().fold(
        [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
        |b, p| [b[0].min(p[0]), b[1].min(p[1]), b[2].max(p[0]), b[3].max(p[1])],
    )
}

/// Whether the 3D segment `a`–`b` meets the prism `footprint × [0, height]`.
pub(crate) fn segment_hits_prism(a: Point, b: Point, footprint: &[[f64; 2]], height: f64) -> bool {
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    let dz = b.z - a.z;
    if dz.abs() < 1e-12 {
        if a.z < 0.0 || a.z > height {
            return false;
        }
    } else {
        let ta = -a.z / dz;
        let tb = (height - a.z) / dz;
        t0 = t0.max(ta.min(tb));
        t1 = t1.min(ta.max(tb));
        if t0 > t1 {
            return false;
        }
    }
    let lerp = |t: f64| [a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t];
    let p0 = lerp(t0);
    let p1 = lerp(t1);

    let bb = bbox(footprint);
    if p0[0].max(p1[0]) < bb[0] - EPS
        || p0[0].min(p1[0]) > bb[2] + EPS
        || p0[1].max(p1[1]) < bb[1] - EPS
        || p0[1].min(p1[1]) > bb[3] + EPS
    {
        return false;
    }
    if point_in_polygon(p0, footprint) || point_in_polygon(p1, footprint) {
        return true;
    }
    let n = footprint.len();
    (0..n).any(|i| segments_intersect(p0, p1, footprint[i], footprint[(i + 1) % n]))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

    #[test]
    fn area_and_centroid_of_unit_square() {
        assert!((signed_area(&SQUARE) - 1.0).abs() < 1e-12);
        let c = centroid(&SQUARE);
        assert!((c[0] - 0.5).abs() < 1e-12 && (c[1] - 0.5).abs() < 1e-12);
        let mut cw = SQUARE;
        cw.reverse();
        assert!(signed_area(&cw) < 0.0);
    }

    #[test]
    fn bowtie_is_not_simple() {
        let bowtie = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(!is_simple(&bowtie));
        assert!(is_simple(&SQUARE));
        assert!(!is_simple(&[[0.0, 0.0], [1.0, 0.0]]));
        // spike folding back along its incoming edge
        assert!(!is_simple(&[[0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [1.0, 1.0]]));
    }

    #[test]
    fn point_in_polygon_boundary_counts() {
        assert!(point_in_polygon([0.5, 0.5], &SQUARE));
        assert!(point_in_polygon([1.0, 0.5], &SQUARE));
        assert!(point_in_polygon([0.0, 0.0], &SQUARE));
        assert!(!point_in_polygon([1.5, 0.5], &SQUARE));
    }

    #[test]
    fn segments() {
        assert!(segments_intersect([0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]));
        assert!(!segments_intersect([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]));
        assert!(segments_intersect([0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [3.0, 0.0]));
        assert!(segments_intersect([0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [1.0, 5.0]));
    }

    #[test]
    fn prism_vertical_clipping() {
        let p = |x, y, z| Point { x, y, z };
        // climbs over the roof before reaching the footprint
        assert!(!segment_hits_prism(p(-1.0, 0.5, 0.0), p(0.0, 0.5, 10.0), &SQUARE, 5.0));
        // descends into the roof
        assert!(segment_hits_prism(p(-1.0, 0.5, 10.0), p(0.5, 0.5, 4.0), &SQUARE, 5.0));
        // wholly below ground
        assert!(!segment_hits_prism(p(-1.0, 0.5, -2.0), p(2.0, 0.5, -1.0), &SQUARE, 5.0));
    }
}
