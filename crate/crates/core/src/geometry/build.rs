//! Block-structured triangulation of the parallel-channel layout.
//!
//! The fluid domain splits into an inlet distributor, the channels and an
//! outlet distributor. Both distributors share one set of x-stations that
//! contains every channel edge and every opening edge, so each block is a
//! stack of straight-sided quadrilateral columns. Columns are subdivided
//! transfinitely and each cell is cut along its shorter diagonal, which keeps
//! every channel a union of whole triangles and the node ordering stable.

use super::{BoundaryEdge, ChannelInfo, FlowFieldParams, Mesh, Opening, Tag, LABEL_FLUID};
use crate::error::{Error, Result};

/// Opening edges closer than this fraction of `target_h` to a channel edge
/// snap onto it so no sliver columns appear.
const SNAP_FRACTION: f64 = 0.3;

struct Builder {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    labels: Vec<i32>,
    boundary: Vec<BoundaryEdge>,
}

impl Builder {
    fn node(&mut self, x: f64, y: f64) -> usize {
        self.nodes.push([x, y]);
        self.nodes.len() - 1
    }

    /// Quad with corners listed counter-clockwise from the lower left.
    fn quad(&mut self, p00: usize, p10: usize, p11: usize, p01: usize, label: i32) {
        let d = |a: usize, b: usize| {
            let (p, q) = (self.nodes[a], self.nodes[b]);
            (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)
        };
        if d(p00, p11) <= d(p10, p01) {
            self.triangles.push([p00, p10, p11]);
            self.triangles.push([p00, p11, p01]);
        } else {
            self.triangles.push([p00, p10, p01]);
            self.triangles.push([p10, p11, p01]);
        }
        self.labels.push(label);
        self.labels.push(label);
    }

    fn edge(&mut self, a: usize, b: usize, tag: Tag) {
        self.boundary.push(BoundaryEdge { nodes: [a, b], tag });
    }
}

fn divisions(len: f64, h: f64) -> usize {
    ((len / h).round() as usize).max(1)
}

/// Piecewise-linear interpolation through sorted knots.
fn interp(knots: &[(f64, f64)], x: f64) -> f64 {
    if x <= knots[0].0 {
        return knots[0].1;
    }
    for w in knots.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x <= x1 {
            if x1 - x0 <= 0.0 {
                return y1;
            }
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    knots[knots.len() - 1].1
}

/// Triangulates the flow field described by `params` with uniform target edge
/// length `target_h`. Channels are vertical; fluid enters through the top wall
/// and leaves through the bottom wall. Under half symmetry only the channels
/// with x > 0 are meshed and the cut along x = 0 is tagged `SYM`.
pub fn build_parallel_flow_field(params: &FlowFieldParams, target_h: f64) -> Result<Mesh> {
    params.validate()?;
    let w = params.channel_width;
    if !(target_h > 0.0 && target_h < 0.5 * w) {
        return Err(Error::Geometry(format!(
            "target_h ({target_h}) must be positive and below channel_width / 2 ({})",
            0.5 * w
        )));
    }
    let h = target_h;
    let s = params.channel_spacing;
    let n = params.n_channels;
    let m = params.meshed_channels();

    let (centers, x_min, x_max): (Vec<f64>, f64, f64) = if params.half_symmetry {
        ((1..=m).map(|i| (i as f64 - 0.5) * s).collect(), 0.0, m as f64 * s)
    } else {
        let mid = (n as f64 + 1.0) / 2.0;
        (
            (1..=n).map(|i| (i as f64 - mid) * s).collect(),
            -(n as f64) * s / 2.0,
            n as f64 * s / 2.0,
        )
    };

    let dist: Vec<f64> = centers.iter().map(|c| c.abs()).collect();
    let dmin = dist.iter().cloned().fold(f64::INFINITY, f64::min);
    let dmax = dist.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lc = params.channel_length_center;
    let lengths: Vec<f64> = dist
        .iter()
        .map(|&d| {
            if dmax - dmin > 0.0 {
                lc * (1.0 - (1.0 - params.outer_length_ratio) * (d - dmin) / (dmax - dmin))
            } else {
                lc
            }
        })
        .collect();
    let y_top = lc / 2.0 + params.distributor_depth_in;
    let y_bot = -(lc / 2.0 + params.distributor_depth_out);

    // x-stations
    let mut structural = vec![x_min, x_max];
    for &c in &centers {
        structural.push(c - w / 2.0);
        structural.push(c + w / 2.0);
    }
    let snap = |x: f64| -> f64 {
        structural
            .iter()
            .copied()
            .find(|&b| (b - x).abs() < SNAP_FRACTION * h)
            .unwrap_or(x)
    };
    let x_in = snap(params.inlet_width / 2.0);
    let x_out = snap(params.outlet_width / 2.0);
    let mut breaks = structural.clone();
    for x in [x_in, x_out] {
        breaks.push(x);
        if !params.half_symmetry {
            breaks.push(-x);
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * (x_max - x_min));

    let mut xs = Vec::new();
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let nx = divisions(b - a, h);
        for i in 0..nx {
            xs.push(a + (b - a) * i as f64 / nx as f64);
        }
    }
    xs.push(x_max);
    let station = |x: f64| -> usize {
        xs.iter()
            .position(|&v| (v - x).abs() < 1e-9 * (x_max - x_min))
            .expect("breakpoint is a station")
    };
    let kk = xs.len() - 1;

    // Inlet-side tips of the ribs (and channel mouths) as a function of x.
    let mut knots = vec![(x_min, lengths[0] / 2.0)];
    for (i, &c) in centers.iter().enumerate() {
        knots.push((c - w / 2.0, lengths[i] / 2.0));
        knots.push((c + w / 2.0, lengths[i] / 2.0));
    }
    knots.push((x_max, lengths[lengths.len() - 1] / 2.0));
    let tip: Vec<f64> = xs.iter().map(|&x| interp(&knots, x)).collect();

    let width = x_max - x_min;
    let mean_tip: f64 = xs
        .windows(2)
        .zip(tip.windows(2))
        .map(|(x, t)| (x[1] - x[0]) * 0.5 * (t[0] + t[1]))
        .sum::<f64>()
        / width;
    let ny_in = divisions(y_top - mean_tip, h);
    let ny_out = divisions(-mean_tip - y_bot, h);

    let mut b = Builder {
        nodes: Vec::new(),
        triangles: Vec::new(),
        labels: Vec::new(),
        boundary: Vec::new(),
    };

    // inlet distributor: row 0 on the tips, row ny_in on the top wall
    let mut inlet = vec![vec![0usize; ny_in + 1]; kk + 1];
    for j in 0..=ny_in {
        for k in 0..=kk {
            let y = tip[k] + (y_top - tip[k]) * j as f64 / ny_in as f64;
            inlet[k][j] = b.node(xs[k], y);
        }
    }
    // outlet distributor: row 0 on the bottom wall, row ny_out on the tips
    let mut outlet = vec![vec![0usize; ny_out + 1]; kk + 1];
    for j in 0..=ny_out {
        for k in 0..=kk {
            let y = y_bot + (-tip[k] - y_bot) * j as f64 / ny_out as f64;
            outlet[k][j] = b.node(xs[k], y);
        }
    }

    let channel_ranges: Vec<(usize, usize)> = centers
        .iter()
        .map(|&c| (station(c - w / 2.0), station(c + w / 2.0)))
        .collect();
    let in_channel = |k: usize| channel_ranges.iter().any(|&(a, e)| k >= a && k < e);

    for k in 0..kk {
        for j in 0..ny_in {
            b.quad(inlet[k][j], inlet[k + 1][j], inlet[k + 1][j + 1], inlet[k][j + 1], LABEL_FLUID);
        }
        for j in 0..ny_out {
            b.quad(outlet[k][j], outlet[k + 1][j], outlet[k + 1][j + 1], outlet[k][j + 1], LABEL_FLUID);
        }
    }

    let mut channels = Vec::with_capacity(centers.len());
    for (i, &(ks, ke)) in channel_ranges.iter().enumerate() {
        let len = lengths[i];
        let ny = divisions(len, h);
        let mut grid = vec![vec![0usize; ny + 1]; ke - ks + 1];
        for (col, k) in (ks..=ke).enumerate() {
            grid[col][0] = outlet[k][ny_out];
            grid[col][ny] = inlet[k][0];
        }
        for jj in 1..ny {
            let y = -len / 2.0 + len * jj as f64 / ny as f64;
            for (col, k) in (ks..=ke).enumerate() {
                grid[col][jj] = b.node(xs[k], y);
            }
        }
        let label = (i + 1) as i32;
        for col in 0..(ke - ks) {
            for jj in 0..ny {
                b.quad(grid[col][jj], grid[col + 1][jj], grid[col + 1][jj + 1], grid[col][jj + 1], label);
            }
        }
        let last = ke - ks;
        for jj in 0..ny {
            b.edge(grid[0][jj + 1], grid[0][jj], Tag::Wall);
            b.edge(grid[last][jj], grid[last][jj + 1], Tag::Wall);
        }
        channels.push(ChannelInfo {
            index: i + 1,
            axis: [0.0, -1.0],
            width: w,
            up_a: inlet[ks][0],
            up_b: inlet[ke][0],
            down_a: outlet[ks][ny_out],
            down_b: outlet[ke][ny_out],
        });
    }

    let inside = |x: f64, half_width: f64| {
        if params.half_symmetry {
            x < half_width
        } else {
            x.abs() < half_width
        }
    };
    let side_tag = if params.half_symmetry { Tag::Sym } else { Tag::Wall };
    for k in 0..kk {
        let xm = 0.5 * (xs[k] + xs[k + 1]);
        let top = if inside(xm, x_in) { Tag::In } else { Tag::Wall };
        b.edge(inlet[k + 1][ny_in], inlet[k][ny_in], top);
        if !in_channel(k) {
            b.edge(inlet[k][0], inlet[k + 1][0], Tag::WssIn);
            b.edge(outlet[k + 1][ny_out], outlet[k][ny_out], Tag::WssOut);
        }
        let bottom = if inside(xm, x_out) { Tag::Out } else { Tag::Wall };
        b.edge(outlet[k][0], outlet[k + 1][0], bottom);
    }
    for j in 0..ny_in {
        b.edge(inlet[0][j + 1], inlet[0][j], side_tag);
        b.edge(inlet[kk][j], inlet[kk][j + 1], Tag::Wall);
    }
    for j in 0..ny_out {
        b.edge(outlet[0][j + 1], outlet[0][j], side_tag);
        b.edge(outlet[kk][j], outlet[kk][j + 1], Tag::Wall);
    }

    let mesh = Mesh {
        nodes: b.nodes,
        triangles: b.triangles,
        labels: b.labels,
        boundary: b.boundary,
        channels,
        inlet: Some(Opening {
            center: [0.0, y_top],
            half_width: x_in,
            inward: [0.0, -1.0],
        }),
        depth_h: params.depth_h,
        target_h,
        half_symmetry: params.half_symmetry,
    };
    mesh.check()?;
    Ok(mesh)
}

/// Straight channel along +x with inlet at x = 0 and outlet at x = `length`.
/// The whole domain is channel 1.
pub fn build_straight_channel(
    length: f64,
    width: f64,
    target_h: f64,
    depth_h: Option<f64>,
) -> Result<Mesh> {
    if !(length > 0.0 && width > 0.0 && target_h > 0.0) {
        return Err(Error::Geometry("channel length, width and target_h must be positive".into()));
    }
    let nx = divisions(length, target_h);
    let ny = divisions(width, target_h).max(2);
    let mut b = Builder {
        nodes: Vec::new(),
        triangles: Vec::new(),
        labels: Vec::new(),
        boundary: Vec::new(),
    };
    let mut grid = vec![vec![0usize; ny + 1]; nx + 1];
    for j in 0..=ny {
        for i in 0..=nx {
            grid[i][j] = b.node(length * i as f64 / nx as f64, width * j as f64 / ny as f64);
        }
    }
    for i in 0..nx {
        for j in 0..ny {
            b.quad(grid[i][j], grid[i + 1][j], grid[i + 1][j + 1], grid[i][j + 1], 1);
        }
    }
    for i in 0..nx {
        b.edge(grid[i][0], grid[i + 1][0], Tag::Wall);
        b.edge(grid[i + 1][ny], grid[i][ny], Tag::Wall);
    }
    for j in 0..ny {
        b.edge(grid[0][j + 1], grid[0][j], Tag::In);
        b.edge(grid[nx][j], grid[nx][j + 1], Tag::Out);
    }
    let mesh = Mesh {
        nodes: b.nodes,
        triangles: b.triangles,
        labels: b.labels,
        boundary: b.boundary,
        channels: vec![ChannelInfo {
            index: 1,
            axis: [1.0, 0.0],
            width,
            up_a: grid[0][0],
            up_b: grid[0][ny],
            down_a: grid[nx][0],
            down_b: grid[nx][ny],
        }],
        inlet: Some(Opening {
            center: [0.0, width / 2.0],
            half_width: width / 2.0,
            inward: [1.0, 0.0],
        }),
        depth_h,
        target_h,
        half_symmetry: false,
    };
    mesh.check()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Topology;

    fn par(n: usize, half: bool) -> FlowFieldParams {
        FlowFieldParams {
            n_channels: n,
            half_symmetry: half,
            ..FlowFieldParams::default()
        }
    }

    #[test]
    fn eighteen_channels_half_symmetry() {
        let mesh = build_parallel_flow_field(&par(18, true), 0.5e-3).unwrap();
        assert_eq!(mesh.channels.len(), 9);
        for i in 1..=9 {
            assert!(mesh.labels.iter().any(|&l| l == i));
        }
        let sym: Vec<_> = mesh.boundary.iter().filter(|e| e.tag == Tag::Sym).collect();
        assert!(!sym.is_empty());
        assert!(sym.iter().all(|e| e.nodes.iter().all(|&v| mesh.nodes[v][0] == 0.0)));
    }

    #[test]
    fn two_channels_full_have_equal_lengths() {
        let mesh = build_parallel_flow_field(&par(2, false), 0.5e-3).unwrap();
        assert_eq!(mesh.channels.len(), 2);
        let l = mesh.channel_lengths();
        assert_eq!(l[0], l[1]);
        assert!(mesh.boundary.iter().all(|e| e.tag != Tag::Sym));
    }

    #[test]
    fn halving_h_quadruples_triangles() {
        let p = par(6, true);
        let coarse = build_parallel_flow_field(&p, 0.5e-3).unwrap().n_triangles() as f64;
        let fine = build_parallel_flow_field(&p, 0.25e-3).unwrap().n_triangles() as f64;
        let ratio = fine / coarse;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn overlapping_channels_are_rejected() {
        let p = FlowFieldParams {
            channel_spacing: 1.0e-3,
            channel_width: 2.0e-3,
            ..FlowFieldParams::default()
        };
        let err = build_parallel_flow_field(&p, 0.25e-3).unwrap_err().to_string();
        assert!(err.contains("channel_spacing"), "{err}");
        assert!(build_parallel_flow_field(&par(5, true), 0.25e-3).is_err());
        assert!(build_parallel_flow_field(&FlowFieldParams::default(), 1.5e-3).is_err());
    }

    #[test]
    fn boundary_edges_are_exactly_the_topological_boundary() {
        for half in [true, false] {
            let mesh = build_parallel_flow_field(&par(6, half), 0.5e-3).unwrap();
            let topo = Topology::new(&mesh);
            let n_boundary = (0..topo.n_edges()).filter(|&e| topo.is_boundary_edge(e)).count();
            assert_eq!(n_boundary, mesh.boundary.len());
            for e in &mesh.boundary {
                let id = topo.edge_id(e.nodes[0], e.nodes[1]).unwrap();
                assert!(topo.is_boundary_edge(id));
            }
            // tag partition: the tagged lengths add up to the full boundary length
            let total: f64 = mesh.boundary.iter().map(|e| mesh.edge_length(e)).sum();
            let by_tag: f64 = Tag::ALL.iter().map(|&t| mesh.boundary_length(t)).sum();
            assert!((total - by_tag).abs() <= 1e-14 * total);
        }
    }

    #[test]
    fn outer_channels_are_shorter() {
        let mesh = build_parallel_flow_field(&FlowFieldParams::default(), 0.5e-3).unwrap();
        let l = mesh.channel_lengths();
        assert!(l.windows(2).all(|w| w[1] < w[0]), "{l:?}");
        let p = FlowFieldParams::default();
        assert!((l[0] - p.channel_length_center).abs() < 1e-15);
        assert!((l[2] - p.outer_length_ratio * p.channel_length_center).abs() < 1e-15);
    }

    #[test]
    fn regeneration_is_deterministic() {
        let p = par(6, true);
        assert_eq!(
            build_parallel_flow_field(&p, 0.4e-3).unwrap(),
            build_parallel_flow_field(&p, 0.4e-3).unwrap()
        );
    }

    #[test]
    fn channel_area_matches_rectangles() {
        let p = FlowFieldParams::default();
        let mesh = build_parallel_flow_field(&p, 0.5e-3).unwrap();
        for c in &mesh.channels {
            let a = mesh.label_area(c.index as i32);
            let expect = mesh.channel_length(c) * p.channel_width;
            assert!((a - expect).abs() < 1e-12 * expect);
        }
    }
}
