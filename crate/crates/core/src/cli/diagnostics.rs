//! Checks run on finished trajectories.

use serde::Serialize;

use super::output::Trajectory;
use crate::error::{Error, Result};

fn column(t: &Trajectory, name: &str) -> Result<Vec<f64>> {
    t.column(name).ok_or_else(|| Error::DimensionMismatch(format!("trajectory has no column {name}")))
}

/// Largest pointwise `|a - b|` between two columns of one trajectory.
pub fn column_gap(t: &Trajectory, a: &str, b: &str) -> Result<f64> {
    let (x, y) = (column(t, a)?, column(t, b)?);
    Ok(x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max))
}

pub fn column_max(t: &Trajectory, name: &str) -> Result<f64> {
    Ok(column(t, name)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

pub fn column_min(t: &Trajectory, name: &str) -> Result<f64> {
    Ok(column(t, name)?.into_iter().fold(f64::INFINITY, f64::min))
}

/// Means of `values` over the complete windows `[k w, (k+1) w)` of `clock`.
pub fn block_means(clock: &[f64], values: &[f64], width: f64) -> Vec<f64> {
    let last = clock.iter().copied().fold(0.0, f64::max);
    let blocks = (last / width + 1e-9).floor() as usize;
    let mut sums = vec![(0.0, 0usize); blocks];
    for (t, v) in clock.iter().zip(values) {
        let k = (t / width + 1e-9).floor() as usize;
        if k < blocks {
            sums[k].0 += v;
            sums[k].1 += 1;
        }
    }
    sums.into_iter().filter(|s| s.1 > 0).map(|(s, n)| s / n as f64).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TrendReport {
    pub initial: f64,
    pub minimum: f64,
    pub block_means: Vec<f64>,
    pub nondecreasing: bool,
}

/// Starts at zero, stays nonnegative, and rises when averaged over one
/// period.
pub fn entropy_trend(t: &Trajectory, name: &str) -> Result<TrendReport> {
    let clock = column(t, "time_periods")?;
    let values = column(t, name)?;
    let means = block_means(&clock, &values, 1.0);
    Ok(TrendReport {
        initial: values.first().copied().unwrap_or(0.0),
        minimum: values.iter().copied().fold(f64::INFINITY, f64::min),
        nondecreasing: means.windows(2).all(|w| w[1] >= w[0]),
        block_means: means,
    })
}

/// Largest `ge + eg` within `half_width` periods of `at`.
pub fn revival(t: &Trajectory, at: f64, half_width: f64) -> Result<f64> {
    let clock = column(t, "time_periods")?;
    let (ge, eg) = (column(t, "p_ge")?, column(t, "p_eg")?);
    Ok(clock
        .iter()
        .zip(ge.iter().zip(&eg))
        .filter(|(c, _)| (**c - at).abs() <= half_width)
        .map(|(_, (a, b))| a + b)
        .fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Clone, Debug, Serialize)]
pub struct LightConeReport {
    pub threshold_fraction: f64,
    pub slack: f64,
    pub checked_until: f64,
    /// Largest `front(t) - (c t + slack)` over the checked samples; the
    /// check passes when this is not positive.
    pub max_excess: f64,
    pub samples: usize,
}

/// Compares the intensity front with the light cone of the atoms.
///
/// At each time the front is the largest distance from the nearest atom at
/// which the intensity reaches `threshold_fraction` of that time's maximum.
/// Only samples with `0 < t ≤ t_max` and a nonzero map are checked.
#[allow(clippy::too_many_arguments)]
pub fn light_cone(
    times: &[f64],
    positions: &[f64],
    map: &[Vec<f64>],
    atoms: &[f64],
    speed: f64,
    slack: f64,
    threshold_fraction: f64,
    t_max: f64,
) -> LightConeReport {
    let mut excess = f64::NEG_INFINITY;
    let mut samples = 0;
    for (t, row) in times.iter().zip(map) {
        if *t <= 0.0 || *t > t_max {
            continue;
        }
        let peak = row.iter().copied().fold(0.0, f64::max);
        if peak <= 0.0 {
            continue;
        }
        let front = positions
            .iter()
            .zip(row)
            .filter(|(_, v)| **v >= threshold_fraction * peak)
            .map(|(x, _)| atoms.iter().map(|a| (x - a).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        excess = excess.max(front - (speed * t + slack));
        samples += 1;
    }
    LightConeReport { threshold_fraction, slack, checked_until: t_max, max_excess: excess, samples }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_means_split_by_period() {
        let clock = [0.0, 0.5, 1.0, 1.5, 2.0];
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(block_means(&clock, &v, 1.0), vec![0.5, 2.5]);
    }

    #[test]
    fn light_cone_flags_superluminal_front() {
        let xs: Vec<f64> = (0..=10).map(|k| -0.5 + 0.1 * k as f64).collect();
        // front at distance 0.2 from the atom at 0 by t = 0.1
        let row: Vec<f64> = xs.iter().map(|x| if x.abs() <= 0.2 + 1e-12 { 1.0 } else { 0.0 }).collect();
        let slow = light_cone(&[0.1], &xs, &[row.clone()], &[0.0], 3.0, 0.0, 0.1, 1.0);
        assert!(slow.max_excess <= 0.0);
        let fast = light_cone(&[0.1], &xs, &[row], &[0.0], 1.0, 0.0, 0.1, 1.0);
        assert!(fast.max_excess > 0.0);
    }
}
