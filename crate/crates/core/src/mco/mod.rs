//! Multi-criteria layer: Pareto-front approximation by sandwiching over
//! weighted-sum scalarizations, persistence of the front and box-constraint
//! navigation for the UI.

mod navigate;
mod run;
mod sandwich;
mod shape;

pub use navigate::{navigate, Bounds, Navigation};
pub use run::{run_pareto, ParetoOptions, Scalarizer, SolveOutcome};
pub use sandwich::{facets, gaps, outer_vertices, sandwich_step, Facet, Gap, Halfspace, SandwichStep};
pub use shape::ShapeScalarizer;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scales a non-negative weight vector onto the unit simplex.
pub fn normalize_weights(lambda: &[f64]) -> Result<Vec<f64>> {
    let s: f64 = lambda.iter().sum();
    if lambda.iter().any(|&l| !(l >= 0.0 && l.is_finite())) || !(s > 0.0) {
        return Err(Error::Config(format!(
            "weights must be non-negative with a positive sum, got {lambda:?}"
        )));
    }
    Ok(lambda.iter().map(|l| l / s).collect())
}

/// Moves `lambda` by `fraction` of the way toward the simplex barycenter.
pub fn toward_barycenter(lambda: &[f64], fraction: f64) -> Vec<f64> {
    let c = 1.0 / lambda.len() as f64;
    lambda.iter().map(|l| (1.0 - fraction) * l + fraction * c).collect()
}

/// `a` dominates `b`: no worse in every objective and better in one.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Indices of the non-dominated points, in input order. Of several identical
/// points only the first is kept.
pub fn prune_dominated(points: &[Vec<f64>]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    // lexicographic order puts every dominator before the points it dominates
    idx.sort_by(|&a, &b| {
        points[a]
            .iter()
            .zip(&points[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut kept: Vec<usize> = Vec::new();
    for &i in &idx {
        let p = &points[i];
        if kept.iter().any(|&k| dominates(&points[k], p) || points[k] == *p) {
            continue;
        }
        kept.push(i);
    }
    kept.sort_unstable();
    kept
}

/// Slack of the weighted-sum support inequality before a point is flagged.
pub const SUPPORT_TOL: f64 = 1e-6;

/// One scalarized solution on the front.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    /// Weights the point was solved with (after any adjustment).
    #[serde(with = "sig")]
    pub lambda: Vec<f64>,
    #[serde(with = "sig")]
    pub costs_raw: Vec<f64>,
    #[serde(with = "sig")]
    pub costs_normalized: Vec<f64>,
    pub mesh_file: Option<String>,
    pub stop_reason: String,
    pub weight_adjusted: bool,
    /// Another solved point beats this one under its own weights by more
    /// than [`SUPPORT_TOL`]: the scalarization stopped short of the minimum.
    #[serde(default)]
    pub unsupported: bool,
}

/// One requested scalarization, in solve order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    #[serde(with = "sig")]
    pub lambda: Vec<f64>,
    /// Optimizer runs spent on this request (1, or 2 after a retry).
    pub solves: usize,
    /// `None` when every attempt failed.
    pub point: Option<ParetoPoint>,
    pub error: Option<String>,
    /// Approximation quality after this request.
    #[serde(with = "sig::opt")]
    pub quality: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    #[serde(with = "sig")]
    pub normalizers: Vec<f64>,
    /// Mutually non-dominated points.
    pub points: Vec<ParetoPoint>,
    #[serde(with = "sig::opt")]
    pub quality: Option<f64>,
    pub history: Vec<HistoryEntry>,
    /// Hash of the run configuration that produced the document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl ParetoFront {
    pub fn new(normalizers: Vec<f64>) -> Self {
        Self {
            normalizers,
            points: Vec::new(),
            quality: None,
            history: Vec::new(),
            config_hash: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.normalizers.len()
    }

    /// Every successful scalarization, dominated or not.
    pub fn solved(&self) -> impl Iterator<Item = &ParetoPoint> {
        self.history.iter().filter_map(|h| h.point.as_ref())
    }

    pub fn n_solves(&self) -> usize {
        self.history.iter().map(|h| h.solves).sum()
    }

    pub fn n_failed(&self) -> usize {
        self.history.iter().filter(|h| h.point.is_none()).count()
    }

    /// Recomputes `points` from the history and flags unsupported ones.
    pub fn refresh_points(&mut self) {
        let mut all: Vec<ParetoPoint> = self.solved().cloned().collect();
        let costs: Vec<Vec<f64>> = all.iter().map(|p| p.costs_normalized.clone()).collect();
        for p in &mut all {
            let own = dot(&p.lambda, &p.costs_normalized);
            p.unsupported = costs.iter().any(|c| own - dot(&p.lambda, c) > SUPPORT_TOL);
        }
        self.points = prune_dominated(&costs).into_iter().map(|i| all[i].clone()).collect();
    }

    /// Largest violation of λ·y ≥ λ·y(λ) over solved weights λ and front
    /// points y. Zero up to round-off for exactly solved scalarizations.
    pub fn support_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in self.solved() {
            let own = dot(&s.lambda, &s.costs_normalized);
            for p in &self.points {
                worst = worst.max(own - dot(&s.lambda, &p.costs_normalized));
            }
        }
        worst
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(s)?;
        if f.normalizers.is_empty() || f.points.iter().any(|p| p.costs_normalized.len() != f.dim()) {
            return Err(Error::Config("front document has inconsistent dimensions".into()));
        }
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Writes through a temporary file so an interrupted write never leaves a
    /// truncated document behind.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, self.to_json()?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numbers written with 17 significant digits, which round-trips every f64.
mod sig {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::value::RawValue;

    fn num(v: f64) -> String {
        if v.is_finite() {
            format!("{v:.16e}")
        } else {
            "null".into()
        }
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let body: Vec<String> = v.iter().map(|&x| num(x)).collect();
        let raw = RawValue::from_string(format!("[{}]", body.join(", "))).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<f64>::deserialize(d)
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(x) => RawValue::from_string(num(*x)).map_err(serde::ser::Error::custom)?.serialize(s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<f64>::deserialize(d)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance_examples() {
        let a = vec![vec![1.0, 1.0, 1.0], vec![0.5, 2.0, 1.0]];
        assert_eq!(prune_dominated(&a), vec![0, 1]);
        let b = vec![vec![1.0, 1.0, 1.0], vec![0.9, 0.9, 0.9]];
        assert_eq!(prune_dominated(&b), vec![1]);
        let c = vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![2.0, 1.0]];
        assert_eq!(prune_dominated(&c), vec![0, 2]);
    }

    #[test]
    fn json_keeps_seventeen_digits() {
        let mut f = ParetoFront::new(vec![1.0, 2.0, 3.0]);
        f.history.push(HistoryEntry {
            lambda: vec![1.0, 0.0, 0.0],
            solves: 1,
            point: Some(ParetoPoint {
                lambda: vec![1.0, 0.0, 0.0],
                costs_raw: vec![0.1, 1.0 / 3.0, 2.0],
                costs_normalized: vec![0.1, 1.0 / 6.0, 2.0 / 3.0],
                mesh_file: Some("mesh_p000.txt".into()),
                stop_reason: "converged".into(),
                weight_adjusted: false,
                unsupported: false,
            }),
            error: None,
            quality: Some(0.25),
        });
        f.refresh_points();
        let s = f.to_json().unwrap();
        assert!(s.contains("3.3333333333333331e-1"), "{s}");
        assert!(s.contains("1.0000000000000001e-1"));
        let back = ParetoFront::from_json(&s).unwrap();
        assert_eq!(back, f);
    }
}
