//! Incremental Bowyer-Watson 2D Delaunay triangulation for the small local
//! point sets produced by surface-particle projection.

/// Triangulate `points`, returning triangles as index triples. Duplicate
/// points (within a scale-relative tolerance) are skipped; collinear input
/// yields no triangles.
pub fn triangulate(points: &[[f64; 2]]) -> Vec<[usize; 3]> {
    let n = points.len();
    if n < 3 {
        return Vec::new();
    }

    // Scale for the adaptive predicate tolerances.
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for p in points {
        for a in 0..2 {
            min[a] = min[a].min(p[a]);
            max[a] = max[a].max(p[a]);
        }
    }
    let span = (max[0] - min[0]).max(max[1] - min[1]).max(1e-30);
    let eps = span * 1e-12;

    // Working vertex list with the three super-triangle vertices appended.
    let cx = 0.5 * (min[0] + max[0]);
    let cy = 0.5 * (min[1] + max[1]);
    let big = 64.0 * span;
    let mut verts: Vec<[f64; 2]> = points.to_vec();
    let s0 = verts.len();
    verts.push([cx - 2.0 * big, cy - big]);
    verts.push([cx + 2.0 * big, cy - big]);
    verts.push([cx, cy + 2.0 * big]);

    let mut triangles: Vec<[usize; 3]> = vec![[s0, s0 + 1, s0 + 2]];
    let mut inserted: Vec<usize> = Vec::new();

    'point: for p in 0..n {
        for &q in &inserted {
            let dx = verts[p][0] - verts[q][0];
            let dy = verts[p][1] - verts[q][1];
            if (dx * dx + dy * dy).sqrt() <= eps {
                continue 'point; // duplicate projection, skip
            }
        }
        inserted.push(p);

        let bad: Vec<usize> = (0..triangles.len())
            .filter(|&t| {
                let [a, b, c] = triangles[t];
                in_circumcircle(verts[a], verts[b], verts[c], verts[p])
            })
            .collect();
        if bad.is_empty() {
            // Numerically outside everything (should not happen inside the
            // super triangle); skip rather than corrupt the triangulation.
            continue;
        }

        // Cavity boundary: edges used by exactly one bad triangle.
        let mut boundary: Vec<(usize, usize)> = Vec::new();
        for &t in &bad {
            let [a, b, c] = triangles[t];
            for (u, v) in [(a, b), (b, c), (c, a)] {
                if let Some(pos) = boundary
                    .iter()
                    .position(|&(x, y)| (x, y) == (v, u) || (x, y) == (u, v))
                {
                    boundary.swap_remove(pos);
                } else {
                    boundary.push((u, v));
                }
            }
        }

        for &t in bad.iter().rev() {
            triangles.swap_remove(t);
        }
        for (u, v) in boundary {
            triangles.push([u, v, p]);
        }
    }

    triangles
        .into_iter()
        .filter(|t| t.iter().all(|&v| v < s0))
        .collect()
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// `p` strictly inside the circumcircle of `(a, b, c)`. The determinant
/// scales like length^4, so the tolerance is taken relative to the squared
/// distances involved.
fn in_circumcircle(a: [f64; 2], b: [f64; 2], c: [f64; 2], p: [f64; 2]) -> bool {
    let (mut a, mut b, c) = (a, b, c);
    if orient(a, b, c) < 0.0 {
        std::mem::swap(&mut a, &mut b);
    }
    let m = |v: [f64; 2]| {
        let dx = v[0] - p[0];
        let dy = v[1] - p[1];
        [dx, dy, dx * dx + dy * dy]
    };
    let (ra, rb, rc) = (m(a), m(b), m(c));
    let det = ra[0] * (rb[1] * rc[2] - rb[2] * rc[1]) - ra[1] * (rb[0] * rc[2] - rb[2] * rc[0])
        + ra[2] * (rb[0] * rc[1] - rb[1] * rc[0]);
    let scale = ra[2] + rb[2] + rc[2];
    det > 1e-12 * scale * scale
}

/// Brute-force empty-circumcircle check used by tests and `validate`.
pub fn is_delaunay(points: &[[f64; 2]], triangles: &[[usize; 3]]) -> bool {
    for &[a, b, c] in triangles {
        for (p, _) in points.iter().enumerate() {
            if p == a || p == b || p == c {
                continue;
            }
            if in_circumcircle(points[a], points[b], points[c], points[p]) {
                return false;
            }
        }
    }
    true
}
