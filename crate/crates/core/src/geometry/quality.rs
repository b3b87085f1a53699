use serde::{Deserialize, Serialize};

use super::Mesh;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityThresholds {
    pub min_angle_deg: f64,
    pub min_radius_ratio: f64,
}

impl Default for QualityThresholds {
    fn default() -> Self {
        Self {
            min_angle_deg: 10.0,
            min_radius_ratio: 0.1,
        }
    }
}

/// Per-element minima over a mesh. Angles are signed, so an inverted element
/// shows up as a negative angle and a negative area.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QualityReport {
    pub min_angle_deg: f64,
    /// Normalized 2·r_in/r_circ; 1 for the equilateral triangle.
    pub min_radius_ratio: f64,
    pub min_signed_area: f64,
    /// Elements below a threshold or with non-positive area.
    pub flagged: Vec<usize>,
}

impl QualityReport {
    pub fn ok(&self) -> bool {
        self.flagged.is_empty()
    }
}

/// Signed interior angles (degrees) and radius ratio of one triangle.
pub fn triangle_quality(p: [[f64; 2]; 3]) -> ([f64; 3], f64) {
    let mut angles = [0.0; 3];
    for k in 0..3 {
        let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
        let u = [b[0] - a[0], b[1] - a[1]];
        let v = [c[0] - a[0], c[1] - a[1]];
        let cross = u[0] * v[1] - u[1] * v[0];
        let dot = u[0] * v[0] + u[1] * v[1];
        angles[k] = cross.atan2(dot).to_degrees();
    }
    let len = |i: usize, j: usize| ((p[j][0] - p[i][0]).powi(2) + (p[j][1] - p[i][1]).powi(2)).sqrt();
    let (a, b, c) = (len(1, 2), len(2, 0), len(0, 1));
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]));
    // r_in = 2A/P, r_circ = abc/(4A)
    let denom = (a + b + c) * a * b * c;
    let ratio = if denom > 0.0 { 16.0 * area * area.abs() / denom } else { 0.0 };
    (angles, ratio)
}

pub fn mesh_quality(mesh: &Mesh, thresholds: &QualityThresholds) -> QualityReport {
    let mut report = QualityReport {
        min_angle_deg: f64::INFINITY,
        min_radius_ratio: f64::INFINITY,
        min_signed_area: f64::INFINITY,
        flagged: Vec::new(),
    };
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
        let (angles, ratio) = triangle_quality(p);
        let area = mesh.signed_area(t);
        let amin = angles.iter().cloned().fold(f64::INFINITY, f64::min);
        report.min_angle_deg = report.min_angle_deg.min(amin);
        report.min_radius_ratio = report.min_radius_ratio.min(ratio);
        report.min_signed_area = report.min_signed_area.min(area);
        if area <= 0.0 || amin < thresholds.min_angle_deg || ratio < thresholds.min_radius_ratio {
            report.flagged.push(t);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_parallel_flow_field, FlowFieldParams, Mesh};

    fn single(p: [[f64; 2]; 3]) -> Mesh {
        Mesh {
            nodes: p.to_vec(),
            triangles: vec![[0, 1, 2]],
            labels: vec![0],
            boundary: vec![],
            channels: vec![],
            inlet: None,
            depth_h: None,
            target_h: 1.0,
            half_symmetry: false,
        }
    }

    #[test]
    fn equilateral() {
        let m = single([[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]]);
        let q = mesh_quality(&m, &QualityThresholds::default());
        assert!((q.min_angle_deg - 60.0).abs() < 1e-12);
        assert!((q.min_radius_ratio - 1.0).abs() < 1e-12);
        assert!(q.ok());
    }

    #[test]
    fn generated_meshes_have_min_angle_above_20() {
        for n in [2, 6, 18] {
            let p = FlowFieldParams {
                n_channels: n,
                ..FlowFieldParams::default()
            };
            let m = build_parallel_flow_field(&p, 0.5e-3).unwrap();
            // enumerate every element directly rather than trusting the report
            let worst = (0..m.n_triangles())
                .map(|t| {
                    let tri = m.triangles[t];
                    let (a, _) = triangle_quality([m.nodes[tri[0]], m.nodes[tri[1]], m.nodes[tri[2]]]);
                    a.iter().cloned().fold(f64::INFINITY, f64::min)
                })
                .fold(f64::INFINITY, f64::min);
            assert!(worst >= 20.0, "n={n}: {worst}");
            assert_eq!(mesh_quality(&m, &QualityThresholds::default()).min_angle_deg, worst);
        }
    }

    #[test]
    fn inverted_node_is_flagged() {
        let mut m = build_parallel_flow_field(&FlowFieldParams::default(), 0.5e-3).unwrap();
        // push one interior node far across its neighbours
        let t = m.n_triangles() / 2;
        let v = m.triangles[t][0];
        m.nodes[v][0] += 5.0e-3;
        let q = mesh_quality(&m, &QualityThresholds::default());
        assert!(q.min_signed_area < 0.0);
        assert!(!q.ok());
    }
}
