//! Porous strip for the Brinkman validation model.
//!
//! The ribs between the channels, and the part-ribs next to the frame and the
//! symmetry line, are filled with porous triangles. Each rib is a stack of
//! columns joining matching tip nodes (vertical on an undeformed mesh);
//! adjacent columns are zipped together by normalized height. The channel side walls and the rib
//! tips become INT edges.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::fem::FluidProps;
use crate::geometry::{BoundaryEdge, Mesh, Tag, Topology, LABEL_POROUS};

/// A fluid mesh with porous ribs.
#[derive(Clone, Debug)]
pub struct PorousExtension {
    pub mesh: Mesh,
    /// Thickness of the porous layer covering the ribs [m].
    pub ptl_depth: f64,
    /// Permeability K [m²].
    pub permeability: f64,
    /// Nodes `0..base_nodes` are the nodes of the fluid mesh, in order.
    pub base_nodes: usize,
}

impl PorousExtension {
    /// Fluid properties of the Brinkman solve. The strip stands for a layer of
    /// depth `ptl_depth` under a channel of depth h, so its momentum balance is
    /// scaled by h / ptl_depth in the depth-averaged model.
    pub fn brinkman_props(&self, props: &FluidProps) -> FluidProps {
        let h = self.mesh.depth_h.expect("checked at construction");
        let ratio = h / self.ptl_depth;
        FluidProps {
            mu_eff: Some(props.mu_eff.unwrap_or(props.mu) * ratio),
            permeability: self.permeability,
            ..*props
        }
    }
}

struct Gap {
    xl: f64,
    xr: f64,
    /// Channel (position in `mesh.channels`) bordering the gap on each side.
    left: Option<usize>,
    right: Option<usize>,
}

fn divisions(len: f64, h: f64) -> usize {
    ((len / h).round() as usize).max(1)
}

/// Extends a parallel-channel mesh with porous ribs. Requires channels along
/// the y axis and an out-of-plane depth.
pub fn extend_with_ptl(mesh: &Mesh, ptl_depth: f64, permeability: f64) -> Result<PorousExtension> {
    if !(ptl_depth > 0.0 && ptl_depth.is_finite()) {
        return Err(Error::Config(format!("ptl_depth must be positive, got {ptl_depth}")));
    }
    if !(permeability > 0.0 && permeability.is_finite()) {
        return Err(Error::Config(format!("permeability must be positive, got {permeability}")));
    }
    if mesh.depth_h.is_none() {
        return Err(Error::Config("the porous extension needs the channel depth depth_h".into()));
    }
    if mesh.labels.contains(&LABEL_POROUS) {
        return Err(Error::Mesh("mesh already has a porous region".into()));
    }
    if mesh.channels.is_empty() {
        return Err(Error::Mesh("mesh has no channels".into()));
    }
    if mesh.channels.iter().any(|c| c.axis[0].abs() > 1e-12) {
        return Err(Error::Geometry("the porous extension supports channels along the y axis only".into()));
    }
    let tol = 1e-9 * mesh.size();
    let x_of = |v: usize| mesh.nodes[v][0];
    let y_of = |v: usize| mesh.nodes[v][1];

    let mut spans: Vec<(f64, f64, usize)> = mesh
        .channels
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let (a, b) = (x_of(c.up_a), x_of(c.up_b));
            (a.min(b), a.max(b), k)
        })
        .collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let [xmin, _, xmax, _] = mesh.bounds();
    let mut gaps = Vec::new();
    let mut cursor = (xmin, None);
    for &(a, b, k) in &spans {
        if a - cursor.0 > tol {
            gaps.push(Gap {
                xl: cursor.0,
                xr: a,
                left: cursor.1,
                right: Some(k),
            });
        }
        cursor = (b, Some(k));
    }
    if xmax - cursor.0 > tol {
        gaps.push(Gap {
            xl: cursor.0,
            xr: xmax,
            left: cursor.1,
            right: None,
        });
    }

    let wall_nodes: HashSet<usize> = mesh
        .boundary
        .iter()
        .filter(|e| e.tag == Tag::Wall)
        .flat_map(|e| e.nodes)
        .collect();
    let chain = |tag: Tag, g: &Gap| -> Vec<usize> {
        let mut v: Vec<usize> = mesh
            .boundary
            .iter()
            .filter(|e| e.tag == tag)
            .flat_map(|e| e.nodes)
            .filter(|&n| x_of(n) > g.xl - tol && x_of(n) < g.xr + tol)
            .collect();
        v.sort_by(|&a, &b| x_of(a).total_cmp(&x_of(b)).then(a.cmp(&b)));
        v.dedup();
        v
    };

    let mut nodes = mesh.nodes.clone();
    let mut triangles = mesh.triangles.clone();
    let mut labels = mesh.labels.clone();
    let mut boundary: Vec<BoundaryEdge> = Vec::new();
    let mut to_int: HashSet<(usize, usize)> = HashSet::new();
    let key = |a: usize, b: usize| (a.min(b), a.max(b));

    for g in &gaps {
        let top = chain(Tag::WssIn, g);
        let bot = chain(Tag::WssOut, g);
        // deformed tips may have shifted their stations sideways; the columns
        // then lean, but the ends are fixed by the channel walls or the frame
        let at = |v: &Vec<usize>, x: f64| v.first().is_some_and(|&n| (x_of(n) - x).abs() <= tol);
        let ends = |v: &Vec<usize>| at(v, g.xl) && v.last().is_some_and(|&n| (x_of(n) - g.xr).abs() <= tol);
        let conforming = top.len() >= 2 && top.len() == bot.len() && ends(&top) && ends(&bot);
        if !conforming {
            return Err(Error::Mesh(format!(
                "non-conforming rib between x = {:.6e} and {:.6e}: tip stations do not match",
                g.xl, g.xr
            )));
        }
        for w in top.windows(2).chain(bot.windows(2)) {
            to_int.insert(key(w[0], w[1]));
        }
        let last = top.len() - 1;
        let mut columns: Vec<Vec<usize>> = Vec::with_capacity(top.len());
        for k in 0..=last {
            let (t, b) = (top[k], bot[k]);
            let side = match (k, g.left, g.right) {
                (0, Some(_), _) => true,
                (k, _, Some(_)) if k == last => true,
                _ => false,
            };
            let col = if side {
                let x = x_of(t);
                let mut col: Vec<usize> = wall_nodes
                    .iter()
                    .copied()
                    .filter(|&n| (x_of(n) - x).abs() <= tol && y_of(n) <= y_of(t) + tol && y_of(n) >= y_of(b) - tol)
                    .collect();
                col.sort_by(|&p, &q| y_of(q).total_cmp(&y_of(p)).then(p.cmp(&q)));
                if col.first() != Some(&t) || col.last() != Some(&b) {
                    return Err(Error::Mesh(format!(
                        "channel wall at x = {x:.6e} does not end at the rib tips"
                    )));
                }
                for w in col.windows(2) {
                    to_int.insert(key(w[0], w[1]));
                }
                col
            } else {
                let ([xt, yt], [xb, yb]) = (mesh.nodes[t], mesh.nodes[b]);
                let n = divisions(yt - yb, mesh.target_h);
                let mut col = vec![t];
                for j in 1..n {
                    let s = j as f64 / n as f64;
                    nodes.push([xt + (xb - xt) * s, yt + (yb - yt) * s]);
                    col.push(nodes.len() - 1);
                }
                col.push(b);
                col
            };
            columns.push(col);
        }
        for pair in columns.windows(2) {
            zip_columns(&nodes, &pair[0], &pair[1], &mut triangles, &mut labels);
        }
        // frame or symmetry line where no channel borders the gap
        for (k, present) in [(0usize, g.left.is_some()), (last, g.right.is_some())] {
            if present {
                continue;
            }
            let col = &columns[k];
            let x = x_of(col[0]);
            let tag = if mesh
                .boundary
                .iter()
                .any(|e| e.tag == Tag::Sym && e.nodes.iter().all(|&n| (x_of(n) - x).abs() <= tol))
            {
                Tag::Sym
            } else {
                Tag::Wall
            };
            for w in col.windows(2) {
                // counter-clockwise: down the left side, up the right side
                let nodes = if k == 0 { [w[0], w[1]] } else { [w[1], w[0]] };
                boundary.push(BoundaryEdge { nodes, tag });
            }
        }
    }

    let mut retagged = 0;
    for e in &mesh.boundary {
        let mut e = *e;
        if to_int.contains(&key(e.nodes[0], e.nodes[1])) {
            e.tag = Tag::Int;
            retagged += 1;
        }
        boundary.push(e);
    }
    if retagged != to_int.len() {
        return Err(Error::Mesh(format!(
            "{} interface edges are not boundary edges of the fluid mesh",
            to_int.len() - retagged
        )));
    }

    let ext = Mesh {
        nodes,
        triangles,
        labels,
        boundary,
        ..mesh.clone()
    };
    ext.check()?;
    check_interface(&ext)?;
    Ok(PorousExtension {
        mesh: ext,
        ptl_depth,
        permeability,
        base_nodes: mesh.n_nodes(),
    })
}

/// Triangulates the strip between two columns ordered top to bottom; `a` lies
/// left of `b`.
fn zip_columns(nodes: &[[f64; 2]], a: &[usize], b: &[usize], tris: &mut Vec<[usize; 3]>, labels: &mut Vec<i32>) {
    let t = |col: &[usize], i: usize| {
        let (yt, yb) = (nodes[col[0]][1], nodes[col[col.len() - 1]][1]);
        (yt - nodes[col[i]][1]) / (yt - yb)
    };
    let (mut i, mut j) = (0, 0);
    while i + 1 < a.len() || j + 1 < b.len() {
        let step_a = j + 1 == b.len() || (i + 1 < a.len() && t(a, i + 1) <= t(b, j + 1));
        if step_a {
            tris.push([a[i], a[i + 1], b[j]]);
            i += 1;
        } else {
            tris.push([a[i], b[j + 1], b[j]]);
            j += 1;
        }
        labels.push(LABEL_POROUS);
    }
}

/// Every INT edge separates two elements, one fluid and one porous; every
/// other tagged edge has exactly one element; no edge has more than two.
fn check_interface(mesh: &Mesh) -> Result<()> {
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    if let Some((e, _)) = count.iter().find(|(_, &c)| c > 2) {
        return Err(Error::Mesh(format!("edge {e:?} is shared by more than two elements")));
    }
    let topo = Topology::new(mesh);
    for e in &mesh.boundary {
        let id = topo
            .edge_id(e.nodes[0], e.nodes[1])
            .ok_or_else(|| Error::Mesh(format!("tagged edge {:?} is not a mesh edge", e.nodes)))?;
        let (t0, t1) = topo.neighbours(id);
        match (e.tag, t1) {
            (Tag::Int, Some(t1)) => {
                if (mesh.labels[t0] == LABEL_POROUS) == (mesh.labels[t1] == LABEL_POROUS) {
                    return Err(Error::Mesh(format!("INT edge {:?} does not separate fluid from porous", e.nodes)));
                }
            }
            (Tag::Int, None) => return Err(Error::Mesh(format!("INT edge {:?} has a single element", e.nodes))),
            (_, Some(_)) => return Err(Error::Mesh(format!("boundary edge {:?} is interior", e.nodes))),
            (_, None) => {}
        }
    }
    let tagged: HashSet<usize> = mesh
        .boundary
        .iter()
        .filter_map(|e| topo.edge_id(e.nodes[0], e.nodes[1]))
        .collect();
    if let Some(e) = (0..topo.n_edges()).find(|&e| topo.is_boundary_edge(e) && !tagged.contains(&e)) {
        return Err(Error::Mesh(format!("boundary edge {e} has no tag after extension")));
    }
    Ok(())
}
