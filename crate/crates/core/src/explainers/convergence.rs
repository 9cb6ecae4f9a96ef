use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    /// First schedule entry within `eps` of its predecessor, or the last entry.
    pub chosen: usize,
    pub converged: bool,
    pub schedule: Vec<usize>,
    /// `distances[i]` is the L2 distance between entries `i` and `i + 1`.
    pub distances: Vec<f64>,
}

/// Runs `explain` at every schedule size and picks the smallest size whose
/// attribution moved less than `eps` (L2) from the previous size.
pub fn convergence_check<F>(mut explain: F, schedule: &[usize], eps: f64) -> Result<ConvergenceReport>
where
    F: FnMut(usize) -> Result<Vec<f64>>,
{
    if schedule.len() < 2 {
        return Err(Error::Config(format!(
            "convergence schedule needs at least 2 sizes, got {}",
            schedule.len()
        )));
    }
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("convergence schedule must be strictly increasing".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Config(format!("convergence eps must be positive, got {eps}")));
    }
    let mut prev = explain(schedule[0])?;
    let mut distances = Vec::with_capacity(schedule.len() - 1);
    for &n in &schedule[1..] {
        let cur = explain(n)?;
        Error::check_dim(prev.len(), cur.len())?;
        let dist = prev.iter().zip(&cur).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        distances.push(dist);
        prev = cur;
    }
    let hit = distances.iter().position(|&dist| dist < eps);
    Ok(ConvergenceReport {
        chosen: hit.map_or(*schedule.last().unwrap(), |i| schedule[i + 1]),
        converged: hit.is_some(),
        schedule: schedule.to_vec(),
        distances,
    })
}
