use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregatePoint {
    pub t: usize,
    pub mean: f64,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
}

/// Pointwise statistics of one metric across trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateCurve {
    pub algorithm: String,
    pub metric: String,
    pub n_trials: usize,
    pub points: Vec<AggregatePoint>,
}

impl AggregateCurve {
    pub fn at(&self, t: usize) -> Option<&AggregatePoint> {
        self.points.iter().find(|p| p.t == t)
    }

    pub fn last(&self) -> Option<&AggregatePoint> {
        self.points.last()
    }
}

/// Nearest-rank quantile of sorted data: the value at rank `⌈q n⌉` (1-based).
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Median of sorted data; the mean of the two middle values when `n` is even.
pub fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Aggregates curves that share one time grid. Values at each `t` are sorted
/// (total order, NaN last) before any statistic is taken, so the output does
/// not depend on the order of `curves`.
pub fn aggregate(algorithm: &str, metric: &str, curves: &[Vec<(usize, f64)>]) -> Result<AggregateCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::Empty(format!("no trial curves to aggregate for {algorithm}")))?;
    let grid: Vec<usize> = first.iter().map(|(t, _)| *t).collect();
    for (i, c) in curves.iter().enumerate() {
        if c.len() != grid.len() || c.iter().zip(&grid).any(|((t, _), g)| t != g) {
            return Err(Error::ShapeMismatch {
                expected: format!("time grid of {} points shared by all trials", grid.len()),
                found: format!("trial {i} with {} points", c.len()),
            });
        }
    }
    let n = curves.len();
    let points = grid
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let mut vals: Vec<f64> = curves.iter().map(|c| c[j].1).collect();
            vals.sort_by(f64::total_cmp);
            AggregatePoint {
                t,
                mean: vals.iter().sum::<f64>() / n as f64,
                median: median(&vals),
                q10: nearest_rank(&vals, 0.1),
                q90: nearest_rank(&vals, 0.9),
            }
        })
        .collect();
    Ok(AggregateCurve {
        algorithm: algorithm.to_string(),
        metric: metric.to_string(),
        n_trials: n,
        points,
    })
}
