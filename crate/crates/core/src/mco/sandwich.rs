//! Inner/outer approximation geometry of the sandwiching method for two or
//! three objectives.
//!
//! Inner approximation: conv(points) + ℝᵈ₊. Its facets are planes spanned by
//! `d` generators (points or coordinate directions) with a non-negative normal
//! that supports every point. Outer approximation: the intersection of the
//! supporting half-spaces λ·y ≥ min_points λ·y of every solved weight, and
//! y ≥ 0 (costs are non-negative). The quality is the largest distance from a
//! vertex of the outer approximation to the inner one. It cannot grow when a
//! point is added, since the inner set only grows and the outer only shrinks.

use std::collections::BTreeSet;

use super::dot;

const TOL: f64 = 1e-12;

/// Supporting plane `normal·y = offset` of the inner approximation.
#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    /// Unit normal with non-negative entries.
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// `normal·y ≥ offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SandwichStep {
    /// Solve this weight next; `quality` is the current gap.
    Next { lambda: Vec<f64>, quality: f64 },
    Done { quality: f64 },
}

fn scale_of(points: &[Vec<f64>]) -> f64 {
    points.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()))
}

/// Normal of the hyperplane spanned by `d − 1` vectors in ℝᵈ (d = 2, 3).
fn normal_of(span: &[Vec<f64>], d: usize) -> Vec<f64> {
    match d {
        2 => vec![-span[0][1], span[0][0]],
        3 => {
            let (a, b) = (&span[0], &span[1]);
            vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
        }
        _ => unreachable!("dimension checked by the caller"),
    }
}

fn unit(d: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[k] = 1.0;
    e
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Dimension of the affine hull of the points.
fn affine_rank(points: &[Vec<f64>], tol: f64) -> usize {
    let Some(p0) = points.first() else { return 0 };
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for p in &points[1..] {
        let mut v: Vec<f64> = p.iter().zip(p0).map(|(a, b)| a - b).collect();
        for b in &basis {
            let c = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let n = dot(&v, &v).sqrt();
        if n > tol {
            basis.push(v.iter().map(|x| x / n).collect());
        }
    }
    basis.len()
}

/// Every simplex cell spanned by `d` generators (indices into the points,
/// then `n_pts + k` for the direction e_k) that lies on a supporting plane,
/// with that plane.
fn cells(points: &[Vec<f64>]) -> Vec<(Facet, Vec<usize>)> {
    let Some(d) = points.first().map(Vec::len) else { return Vec::new() };
    assert!(d == 2 || d == 3, "sandwiching supports two or three objectives");
    let tol = TOL * scale_of(points);
    let n_pts = points.len();
    let mut out = Vec::new();
    for combo in combinations(n_pts + d, d) {
        if combo[0] >= n_pts {
            continue;
        }
        let p0 = &points[combo[0]];
        let span: Vec<Vec<f64>> = combo[1..]
            .iter()
            .map(|&g| {
                if g < n_pts {
                    points[g].iter().zip(p0).map(|(a, b)| a - b).collect()
                } else {
                    unit(d, g - n_pts)
                }
            })
            .collect();
        let mut n = normal_of(&span, d);
        let len = dot(&n, &n).sqrt();
        let span_len: f64 = span.iter().map(|s| dot(s, s).sqrt()).product();
        if !(len > 1e-12 * span_len.max(f64::MIN_POSITIVE)) || len == 0.0 {
            continue;
        }
        n.iter_mut().for_each(|x| *x /= len);
        if n.iter().sum::<f64>() < 0.0 {
            n.iter_mut().for_each(|x| *x = -*x);
        }
        if n.iter().any(|&x| x < -1e-12) {
            continue;
        }
        n.iter_mut().for_each(|x| *x = x.max(0.0));
        let offset = dot(&n, p0);
        if points.iter().any(|p| dot(&n, p) < offset - tol) {
            continue;
        }
        out.push((
            Facet { normal: n, offset },
            combo,
        ));
    }
    out
}

fn same_plane(a: &Facet, b: &Facet, tol: f64) -> bool {
    (a.offset - b.offset).abs() <= tol && a.normal.iter().zip(&b.normal).all(|(x, y)| (x - y).abs() < 1e-9)
}

/// Facets of conv(points) + ℝᵈ₊ (gaps not yet filled in).
pub fn facets(points: &[Vec<f64>]) -> Vec<Facet> {
    let tol = TOL * scale_of(points);
    let mut out: Vec<Facet> = Vec::new();
    for (f, _) in cells(points) {
        if !out.iter().any(|g| same_plane(g, &f, tol)) {
            out.push(f);
        }
    }
    out
}

/// Half-spaces of the outer approximation for the solved weights.
pub fn outer_halfspaces(points: &[Vec<f64>], weights: &[Vec<f64>]) -> Vec<Halfspace> {
    let d = points.first().map(Vec::len).unwrap_or(0);
    let mut hs: Vec<Halfspace> = (0..d).map(|k| Halfspace { normal: unit(d, k), offset: 0.0 }).collect();
    for w in weights {
        let beta = points.iter().map(|p| dot(w, p)).fold(f64::INFINITY, f64::min);
        if beta.is_finite() {
            hs.push(Halfspace {
                normal: w.clone(),
                offset: beta,
            });
        }
    }
    hs
}

/// Solves the d×d system `a y = b` by Gaussian elimination; `None` if singular.
fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let d = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..d {
        let piv = (col..d).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..d {
            let f = a[r][col] / a[col][col];
            for c in col..d {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut y = vec![0.0; d];
    for r in (0..d).rev() {
        let s: f64 = (r + 1..d).map(|c| a[r][c] * y[c]).sum();
        y[r] = (b[r] - s) / a[r][r];
    }
    Some(y)
}

/// Vertices of the outer approximation.
pub fn outer_vertices(hs: &[Halfspace]) -> Vec<Vec<f64>> {
    let Some(d) = hs.first().map(|h| h.normal.len()) else { return Vec::new() };
    let scale = hs.iter().fold(1.0f64, |m, h| m.max(h.offset.abs()));
    let mut out = Vec::new();
    for combo in combinations(hs.len(), d) {
        let a = combo.iter().map(|&i| hs[i].normal.clone()).collect();
        let b = combo.iter().map(|&i| hs[i].offset).collect();
        if let Some(y) = solve_small(a, b) {
            if hs.iter().all(|h| dot(&h.normal, &y) >= h.offset - 1e-10 * scale) {
                out.push(y);
            }
        }
    }
    out
}

/// min over the outer approximation of `n·y`, attained at a vertex.
fn outer_min(vertices: &[Vec<f64>], n: &[f64]) -> f64 {
    vertices.iter().map(|v| dot(n, v)).fold(f64::INFINITY, f64::min)
}

/// The 15 weights of the simplex grid with spacing 1/4 (three objectives) or
/// the 5 of spacing 1/4 (two objectives).
fn simplex_grid(d: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    match d {
        2 => (0..=4).for_each(|i| out.push(vec![i as f64 / 4.0, (4 - i) as f64 / 4.0])),
        _ => {
            for i in 0..=4 {
                for j in 0..=4 - i {
                    out.push(vec![i as f64 / 4.0, j as f64 / 4.0, (4 - i - j) as f64 / 4.0]);
                }
            }
        }
    }
    out
}

fn already_solved(lambda: &[f64], solved: &[Vec<f64>]) -> bool {
    solved.iter().any(|s| s.iter().zip(lambda).all(|(a, b)| (a - b).abs() < 1e-9))
}

/// Outer vertex at distance `distance` from the inner approximation, with the
/// nearest inner point.
#[derive(Clone, Debug, PartialEq)]
pub struct Gap {
    pub vertex: Vec<f64>,
    pub nearest: Vec<f64>,
    pub distance: f64,
}

/// Nearest point to `v` on the simplex face `p₁ + Σ μᵢ (pᵢ − p₁) + Σ sⱼ eⱼ`,
/// if the unconstrained projection onto its span lies inside the face.
fn project_to_face(v: &[f64], pts: &[&Vec<f64>], dirs: &[usize]) -> Option<Vec<f64>> {
    let d = v.len();
    let p1 = pts[0];
    let mut basis: Vec<Vec<f64>> = pts[1..].iter().map(|p| p.iter().zip(p1).map(|(a, b)| a - b).collect()).collect();
    basis.extend(dirs.iter().map(|&j| unit(d, j)));
    let r: Vec<f64> = v.iter().zip(p1).map(|(a, b)| a - b).collect();
    if basis.is_empty() {
        return Some(p1.clone());
    }
    let g = basis.iter().map(|a| basis.iter().map(|b| dot(a, b)).collect()).collect();
    let c = solve_small(g, basis.iter().map(|a| dot(a, &r)).collect())?;
    let k = pts.len() - 1;
    let tol = 1e-12;
    if c.iter().any(|&x| x < -tol) || c[..k].iter().sum::<f64>() > 1.0 + tol {
        return None;
    }
    let mut x = p1.clone();
    for (ci, b) in c.iter().zip(&basis) {
        x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += ci * bi);
    }
    Some(x)
}

/// Distance of every outer vertex to conv(points) + ℝᵈ₊, largest first. The
/// nearest inner point lies in the relative interior of a face of one of the
/// supporting cells, so all faces of all cells are tried.
pub fn gaps(points: &[Vec<f64>], weights: &[Vec<f64>]) -> Vec<Gap> {
    let n_pts = points.len();
    let mut faces: BTreeSet<Vec<usize>> = BTreeSet::new();
    for (_, cell) in cells(points) {
        for mask in 1u32..(1 << cell.len()) {
            let face: Vec<usize> = (0..cell.len()).filter(|&i| mask & (1 << i) != 0).map(|i| cell[i]).collect();
            if face[0] < n_pts {
                faces.insert(face);
            }
        }
    }
    let faces: Vec<(Vec<&Vec<f64>>, Vec<usize>)> = faces
        .iter()
        .map(|f| {
            let pts = f.iter().filter(|&&g| g < n_pts).map(|&g| &points[g]).collect();
            let dirs = f.iter().filter(|&&g| g >= n_pts).map(|&g| g - n_pts).collect();
            (pts, dirs)
        })
        .collect();
    let mut out: Vec<Gap> = outer_vertices(&outer_halfspaces(points, weights))
        .into_iter()
        .filter_map(|v| {
            faces
                .iter()
                .filter_map(|(pts, dirs)| project_to_face(&v, pts, dirs))
                .map(|x| {
                    let dist = v.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    (x, dist)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(nearest, distance)| Gap {
                    vertex: v,
                    nearest,
                    distance,
                })
        })
        .collect();
    out.sort_by(|a, b| b.distance.total_cmp(&a.distance));
    out
}

/// Next weight vector of the sandwiching loop. `points` are the normalized
/// costs of every successful solve, `solved` every weight requested or used so
/// far (never proposed again).
pub fn sandwich_step(points: &[Vec<f64>], solved: &[Vec<f64>], target: f64) -> SandwichStep {
    let Some(d) = points.first().map(Vec::len) else {
        return SandwichStep::Done { quality: 0.0 };
    };
    let rank = affine_rank(points, TOL * scale_of(points));
    if rank == 0 {
        return SandwichStep::Done { quality: 0.0 };
    }
    if rank + 1 < d {
        // no facet with full support: scan the fixed grid instead
        let verts = outer_vertices(&outer_halfspaces(points, solved));
        let gap = |w: &Vec<f64>| {
            let inner = points.iter().map(|p| dot(w, p)).fold(f64::INFINITY, f64::min);
            ((inner - outer_min(&verts, w)) / dot(w, w).sqrt()).max(0.0)
        };
        let grid = simplex_grid(d);
        let quality = grid.iter().map(gap).fold(0.0, f64::max);
        if quality <= target {
            return SandwichStep::Done { quality };
        }
        return match grid.into_iter().find(|w| !already_solved(w, solved)) {
            Some(lambda) => SandwichStep::Next { lambda, quality },
            None => SandwichStep::Done { quality },
        };
    }
    let gs = gaps(points, solved);
    let quality = gs.first().map_or(0.0, |g| g.distance);
    if quality <= target {
        return SandwichStep::Done { quality };
    }
    for g in gs.iter().take_while(|g| g.distance > target) {
        // inward normal of the supporting plane at the nearest inner point
        let n: Vec<f64> = g.nearest.iter().zip(&g.vertex).map(|(x, v)| (x - v).max(0.0)).collect();
        let s: f64 = n.iter().sum();
        if !(s > 0.0) {
            continue;
        }
        let lambda: Vec<f64> = n.iter().map(|x| x / s).collect();
        if !already_solved(&lambda, solved) {
            return SandwichStep::Next { lambda, quality };
        }
    }
    SandwichStep::Done { quality }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_points_are_done_immediately() {
        let p = vec![vec![0.3, 0.3, 0.3]; 4];
        assert_eq!(sandwich_step(&p, &[], 0.01), SandwichStep::Done { quality: 0.0 });
    }

    #[test]
    fn collinear_points_fall_back_to_the_grid() {
        let p = vec![vec![0.0, 1.0, 1.0], vec![0.5, 0.5, 1.0], vec![1.0, 0.0, 1.0]];
        let solved = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.5, 0.5, 0.0]];
        match sandwich_step(&p, &solved, 0.01) {
            SandwichStep::Next { lambda, quality } => {
                assert!(quality > 0.01);
                assert!(simplex_grid(3).contains(&lambda));
                assert!(!solved.contains(&lambda));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(simplex_grid(3).len(), 15);
    }

    #[test]
    fn simplex_facet_of_three_vertices() {
        let p = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let fs = facets(&p);
        let c = 1.0 / 3f64.sqrt();
        assert!(fs.iter().any(|f| f.normal.iter().all(|&x| (x - c).abs() < 1e-12) && (f.offset - c).abs() < 1e-12));
        // unit weights alone leave the origin in the outer approximation
        let solved = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        match sandwich_step(&p, &solved, 0.01) {
            SandwichStep::Next { lambda, quality } => {
                assert!((quality - c).abs() < 1e-12);
                assert!(lambda.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-12));
            }
            other => panic!("{other:?}"),
        }
        // a planar front solved at its normal is exact
        let mut solved = solved;
        solved.push(vec![1.0 / 3.0; 3]);
        assert_eq!(sandwich_step(&p, &solved, 0.01), SandwichStep::Done { quality: 0.0 });
    }

    #[test]
    fn outer_vertices_of_the_orthant() {
        let hs = outer_halfspaces(&[vec![1.0, 2.0]], &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let v = outer_vertices(&hs);
        assert!(v.contains(&vec![1.0, 2.0]));
    }
}
