use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::sandwich::{sandwich_step, SandwichStep};
use super::{normalize_weights, toward_barycenter, HistoryEntry, ParetoFront, ParetoPoint};
use crate::error::{Error, Result};
use crate::exec;

/// Result of one scalarized solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    pub costs_raw: Vec<f64>,
    pub costs_normalized: Vec<f64>,
    pub stop_reason: String,
    /// The run ended on the mesh-quality floor; triggers the weight retry.
    pub mesh_quality_stop: bool,
    pub mesh_file: Option<String>,
}

/// A weighted-sum problem family. `solve` must be deterministic in
/// `(lambda, id)`.
pub trait Scalarizer: Sync {
    fn normalizers(&self) -> Vec<f64>;
    fn solve(&self, lambda: &[f64], id: usize) -> Result<SolveOutcome>;
    /// Stamped into the front document; a stored front with another hash is
    /// not resumed.
    fn config_hash(&self) -> Option<String> {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParetoOptions {
    /// Stop once the sandwich gap is at most this (normalized cost units).
    pub quality_target: f64,
    /// Largest number of scalarized solves, retries included.
    pub budget: usize,
    /// Concurrent solves during the bootstrap.
    pub parallelism: usize,
    /// Fraction of the way toward the barycenter for the retry weights.
    pub retry_shift: f64,
}

impl Default for ParetoOptions {
    fn default() -> Self {
        Self {
            quality_target: 0.01,
            budget: 25,
            parallelism: 1,
            retry_shift: 0.02,
        }
    }
}

impl ParetoOptions {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.budget < dim + 1 {
            return Err(Error::Config(format!(
                "budget {} does not cover the {} bootstrap solves",
                self.budget,
                dim + 1
            )));
        }
        if !(self.quality_target > 0.0) || self.parallelism == 0 || !(0.0..1.0).contains(&self.retry_shift) {
            return Err(Error::Config(
                "quality_target must be positive, parallelism at least 1, retry_shift in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

fn bootstrap(d: usize) -> Vec<Vec<f64>> {
    let mut w: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            e
        })
        .collect();
    w.push(vec![1.0 / d as f64; d]);
    w
}

fn to_point(lambda: Vec<f64>, o: SolveOutcome, adjusted: bool) -> ParetoPoint {
    ParetoPoint {
        lambda,
        costs_raw: o.costs_raw,
        costs_normalized: o.costs_normalized,
        mesh_file: o.mesh_file,
        stop_reason: o.stop_reason,
        weight_adjusted: adjusted,
        unsupported: false,
    }
}

/// One requested weight with the retry rule: after a mesh-quality stop or a
/// failure, solve once more with weights shifted toward the barycenter.
fn request<S: Scalarizer + ?Sized>(s: &S, lambda: &[f64], id: usize, shift: f64) -> HistoryEntry {
    let first = s.solve(lambda, id);
    let needs_retry = match &first {
        Ok(o) => o.mesh_quality_stop,
        Err(_) => true,
    };
    let mut entry = HistoryEntry {
        lambda: lambda.to_vec(),
        solves: 1,
        point: None,
        error: None,
        quality: None,
    };
    if !needs_retry {
        entry.point = first.ok().map(|o| to_point(lambda.to_vec(), o, false));
        return entry;
    }
    let adjusted = toward_barycenter(lambda, shift);
    warn!("scalarization {id} at {lambda:?} did not finish cleanly, retrying with {adjusted:?}");
    entry.solves = 2;
    match (first, s.solve(&adjusted, id)) {
        (_, Ok(o)) => entry.point = Some(to_point(adjusted, o, true)),
        (Ok(o), Err(e)) => {
            entry.point = Some(to_point(lambda.to_vec(), o, false));
            entry.error = Some(e.to_string());
        }
        (Err(e1), Err(e2)) => entry.error = Some(format!("{e1}; retry: {e2}")),
    }
    entry
}

fn points_and_weights(front: &ParetoFront) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let pts = front.solved().map(|p| p.costs_normalized.clone()).collect();
    let mut w: Vec<Vec<f64>> = front.history.iter().map(|h| h.lambda.clone()).collect();
    w.extend(front.solved().map(|p| p.lambda.clone()));
    (pts, w)
}

fn current_step(front: &ParetoFront, target: f64) -> SandwichStep {
    let (pts, w) = points_and_weights(front);
    sandwich_step(&pts, &w, target)
}

fn quality_of(step: &SandwichStep) -> f64 {
    match step {
        SandwichStep::Next { quality, .. } | SandwichStep::Done { quality } => *quality,
    }
}

fn push(front: &mut ParetoFront, mut entry: HistoryEntry, target: f64, store: Option<&Path>) -> Result<()> {
    front.history.push(entry.clone());
    front.refresh_points();
    let q = quality_of(&current_step(front, target));
    entry.quality = Some(q);
    *front.history.last_mut().expect("just pushed") = entry;
    front.quality = Some(q);
    if let Some(p) = store {
        front.save(p)?;
    }
    Ok(())
}

fn check_failures(front: &ParetoFront, store: Option<&Path>) -> Result<()> {
    let failed = front.n_failed();
    if 2 * failed > front.history.len() {
        if let Some(p) = store {
            front.save(p)?;
        }
        return Err(Error::Pareto(format!(
            "{failed} of {} scalarizations failed",
            front.history.len()
        )));
    }
    Ok(())
}

/// Sandwiching loop: bootstrap with the unit weights and the barycenter, then
/// solve the facet normal of the largest gap until the quality target or the
/// budget is reached. With `store`, the front is written after every request
/// and an existing document is resumed.
pub fn run_pareto<S: Scalarizer + ?Sized>(s: &S, opts: &ParetoOptions, store: Option<&Path>) -> Result<ParetoFront> {
    let normalizers = s.normalizers();
    let d = normalizers.len();
    if !(d == 2 || d == 3) {
        return Err(Error::Config(format!("sandwiching needs two or three objectives, got {d}")));
    }
    opts.validate(d)?;
    let mut front = match store {
        Some(p) if p.exists() => {
            let f = ParetoFront::load(p)?;
            if f.normalizers != normalizers {
                return Err(Error::Config(format!(
                    "{} was written with different normalizers",
                    p.display()
                )));
            }
            if f.config_hash != s.config_hash() {
                return Err(Error::Config(format!("{} was written by a different configuration", p.display())));
            }
            info!("resuming pareto run from {} ({} requests)", p.display(), f.history.len());
            f
        }
        _ => ParetoFront {
            config_hash: s.config_hash(),
            ..ParetoFront::new(normalizers)
        },
    };

    let boot = bootstrap(d);
    for (k, w) in boot.iter().enumerate().take(front.history.len()) {
        if front.history[k].lambda != *w {
            return Err(Error::Config("stored history does not start with the bootstrap weights".into()));
        }
    }
    let missing: Vec<(usize, Vec<f64>)> = boot.into_iter().enumerate().skip(front.history.len()).collect();
    for chunk in missing.chunks(opts.parallelism) {
        let shift = opts.retry_shift;
        let entries = if chunk.len() > 1 {
            exec::par_map_slice(chunk, |(id, w)| request(s, w, *id, shift))
        } else {
            chunk.iter().map(|(id, w)| request(s, w, *id, shift)).collect()
        };
        for e in entries {
            push(&mut front, e, opts.quality_target, store)?;
        }
    }
    check_failures(&front, store)?;

    while front.n_solves() < opts.budget {
        let lambda = match current_step(&front, opts.quality_target) {
            SandwichStep::Done { quality } => {
                info!("pareto front reached quality {quality:.3e}");
                break;
            }
            SandwichStep::Next { lambda, quality } => {
                info!("quality {quality:.3e}, next weights {lambda:?}");
                normalize_weights(&lambda)?
            }
        };
        let id = front.history.len();
        let e = request(s, &lambda, id, opts.retry_shift);
        push(&mut front, e, opts.quality_target, store)?;
        check_failures(&front, store)?;
    }
    front.quality = Some(quality_of(&current_step(&front, opts.quality_target)));
    if let Some(p) = store {
        front.save(p)?;
    }
    Ok(front)
}
