use serde::{Deserialize, Serialize};

use super::ParetoFront;

/// Optional upper bound per objective, in normalized cost units.
pub type Bounds = Vec<Option<f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Navigation {
    /// Indices into `front.points` satisfying every bound.
    pub feasible: Vec<usize>,
    /// Per objective `[min, max]` over the feasible points; empty when
    /// nothing is feasible.
    pub ranges: Vec<[f64; 2]>,
    /// Feasible point closest to the bounds in the normalized Chebyshev
    /// distance.
    pub suggested: Option<usize>,
    /// With no feasible point: per bounded objective, the smallest increase of
    /// that bound alone that makes some point feasible (`None` if relaxing it
    /// alone does not help).
    pub relaxation: Option<Vec<Option<f64>>>,
}

/// Box-constraint query over the front. Unbounded objectives use the front's
/// ideal value as reference for the suggestion; distances are scaled by the
/// front's per-objective range.
pub fn navigate(front: &ParetoFront, bounds: &[Option<f64>]) -> Navigation {
    let d = front.dim();
    let pts: Vec<&[f64]> = front.points.iter().map(|p| p.costs_normalized.as_slice()).collect();
    let within = |y: &[f64], skip: Option<usize>| {
        (0..d).all(|i| Some(i) == skip || bounds.get(i).copied().flatten().is_none_or(|b| y[i] <= b))
    };
    let feasible: Vec<usize> = (0..pts.len()).filter(|&k| within(pts[k], None)).collect();
    if feasible.is_empty() {
        let relaxation = (0..d)
            .map(|i| {
                let b = bounds.get(i).copied().flatten()?;
                pts.iter()
                    .filter(|y| within(y, Some(i)))
                    .map(|y| (y[i] - b).max(0.0))
                    .min_by(f64::total_cmp)
            })
            .collect();
        return Navigation {
            feasible,
            ranges: Vec::new(),
            suggested: None,
            relaxation: Some(relaxation),
        };
    }
    let span = |set: &[usize], i: usize| {
        set.iter().fold([f64::INFINITY, f64::NEG_INFINITY], |r, &k| [r[0].min(pts[k][i]), r[1].max(pts[k][i])])
    };
    let ranges: Vec<[f64; 2]> = (0..d).map(|i| span(&feasible, i)).collect();
    let all: Vec<usize> = (0..pts.len()).collect();
    let full: Vec<[f64; 2]> = (0..d).map(|i| span(&all, i)).collect();
    let reference: Vec<f64> = (0..d).map(|i| bounds.get(i).copied().flatten().unwrap_or(full[i][0])).collect();
    let dist = |k: usize| {
        (0..d)
            .map(|i| {
                let w = full[i][1] - full[i][0];
                let r = (pts[k][i] - reference[i]).abs();
                if w > 0.0 {
                    r / w
                } else {
                    r
                }
            })
            .fold(0.0, f64::max)
    };
    let suggested = feasible.iter().copied().min_by(|&a, &b| dist(a).total_cmp(&dist(b)).then(a.cmp(&b)));
    Navigation {
        feasible,
        ranges,
        suggested,
        relaxation: None,
    }
}
