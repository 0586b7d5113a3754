//! Posterior summaries, residual intervals, RMSE, R-hat and predictive
//! coverage. Every function is a read-only consumer of stored draws.

use std::io::Write;

use crate::engine::StoredDraw;
use crate::error::{HgtError, Result};

pub const DEFAULT_PERCENTILES: [f64; 3] = [2.5, 50.0, 97.5];

/// Nearest-rank percentile of an ascending slice: the value at rank
/// `ceil(p/100 * n)` (1-based), clamped to the slice.
pub fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    assert!(!sorted.is_empty(), "nearest_rank of an empty slice");
    let n = sorted.len();
    let rank = (pct / 100.0 * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// (percentile, value) pairs in the requested order.
    pub percentiles: Vec<(f64, f64)>,
}

impl Summary {
    pub fn percentile(&self, pct: f64) -> Option<f64> {
        self.percentiles
            .iter()
            .find(|(p, _)| *p == pct)
            .map(|(_, v)| *v)
    }
}

/// Mean and nearest-rank percentiles of one scalar across draws.
pub fn summarize(values: &[f64], percentiles: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(HgtError::EmptyChain);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let sorted = sorted_copy(values);
    Ok(Summary {
        mean,
        percentiles: percentiles
            .iter()
            .map(|&p| (p, nearest_rank(&sorted, p)))
            .collect(),
    })
}

/// Summaries of every coordinate selected from each draw.
pub fn summarize_columns<'a, F>(
    draws: &'a [StoredDraw],
    select: F,
    percentiles: &[f64],
) -> Result<Vec<Summary>>
where
    F: Fn(&'a StoredDraw) -> &'a [f64],
{
    let first = draws.first().ok_or(HgtError::EmptyChain)?;
    let width = select(first).len();
    let mut column = Vec::with_capacity(draws.len());
    (0..width)
        .map(|j| {
            column.clear();
            for d in draws {
                let row = select(d);
                if row.len() != width {
                    return Err(HgtError::Dimension(format!(
                        "draw at iteration {} has {} values, expected {width}",
                        d.iteration,
                        row.len()
                    )));
                }
                column.push(row[j]);
            }
            summarize(&column, percentiles)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntervalReport {
    pub alpha: f64,
    /// Per-cell (lower, upper) percentiles of the residual `h - y`.
    pub intervals: Vec<(f64, f64)>,
    /// Per-cell posterior median of the residual.
    pub medians: Vec<f64>,
    /// Fraction of cells whose interval contains zero (endpoints included).
    pub containment: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(HgtError::domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// Per-cell `alpha/2` and `1 - alpha/2` percentiles of `h - y`.
pub fn residual_intervals(draws: &[StoredDraw], alpha: f64) -> Result<IntervalReport> {
    check_alpha(alpha)?;
    let first = draws.first().ok_or(HgtError::EmptyChain)?;
    let n = first.h.len();
    if n == 0 {
        return Err(HgtError::domain("draws carry no h values"));
    }
    for d in draws {
        if d.h.len() != n || d.y.len() != n {
            return Err(HgtError::Dimension(format!(
                "draw at iteration {} has {} h and {} y values, expected {n} of each",
                d.iteration,
                d.h.len(),
                d.y.len()
            )));
        }
    }
    let mut intervals = Vec::with_capacity(n);
    let mut medians = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(draws.len());
    let mut inside = 0usize;
    for i in 0..n {
        delta.clear();
        delta.extend(draws.iter().map(|d| d.h[i] - d.y[i]));
        delta.sort_by(|a, b| a.total_cmp(b));
        let lo = nearest_rank(&delta, 100.0 * alpha / 2.0);
        let hi = nearest_rank(&delta, 100.0 * (1.0 - alpha / 2.0));
        if lo <= 0.0 && 0.0 <= hi {
            inside += 1;
        }
        intervals.push((lo, hi));
        medians.push(nearest_rank(&delta, 50.0));
    }
    Ok(IntervalReport {
        alpha,
        intervals,
        medians,
        containment: inside as f64 / n as f64,
    })
}

pub fn rmse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(HgtError::Dimension(format!(
            "rmse of vectors with lengths {} and {}",
            estimate.len(),
            truth.len()
        )));
    }
    if estimate.is_empty() {
        return Err(HgtError::domain("rmse of empty vectors"));
    }
    let sq: f64 = estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sq / estimate.len() as f64).sqrt())
}

/// Potential scale reduction `sqrt((W + B/n) / W)` with `W` the mean
/// within-chain variance and `B/n` the variance of the chain means.
/// Identical chains give exactly 1.
pub fn gelman_rubin(chains: &[Vec<f64>]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(HgtError::domain("R-hat needs at least two chains"));
    }
    let n = chains[0].len();
    if n < 10 || chains.iter().any(|c| c.len() != n) {
        return Err(HgtError::domain(
            "R-hat needs chains of equal length of at least 10",
        ));
    }
    let m = chains.len() as f64;
    let nf = n as f64;
    let means: Vec<f64> = chains.iter().map(|c| c.iter().sum::<f64>() / nf).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b_over_n = means.iter().map(|x| (x - grand).powi(2)).sum::<f64>() / (m - 1.0);
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / m;
    if w == 0.0 {
        return Ok(if b_over_n == 0.0 { 1.0 } else { f64::INFINITY });
    }
    Ok(((w + b_over_n) / w).sqrt())
}

/// Fraction of held-out values inside their cell's central `1 - alpha`
/// predictive interval. Cells are matched by id.
pub fn predictive_coverage(
    forecast: &[(usize, Vec<f64>)],
    held_out: &[(usize, f64)],
    alpha: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let mut unmatched: Vec<usize> = held_out
        .iter()
        .filter(|(id, _)| !forecast.iter().any(|(f, _)| f == id))
        .map(|(id, _)| *id)
        .collect();
    unmatched.extend(
        forecast
            .iter()
            .filter(|(id, _)| !held_out.iter().any(|(h, _)| h == id))
            .map(|(id, _)| *id),
    );
    if !unmatched.is_empty() {
        unmatched.sort_unstable();
        return Err(HgtError::Misaligned(unmatched));
    }
    if held_out.is_empty() {
        return Err(HgtError::domain("no held-out cells"));
    }
    let mut inside = 0usize;
    for (id, value) in held_out {
        let draws = &forecast.iter().find(|(f, _)| f == id).expect("matched").1;
        if draws.is_empty() {
            return Err(HgtError::EmptyChain);
        }
        let sorted = sorted_copy(draws);
        let lo = nearest_rank(&sorted, 100.0 * alpha / 2.0);
        let hi = nearest_rank(&sorted, 100.0 * (1.0 - alpha / 2.0));
        if lo <= *value && *value <= hi {
            inside += 1;
        }
    }
    Ok(inside as f64 / held_out.len() as f64)
}

/// Rows of (covariate value, posterior median residual), sorted by covariate.
pub fn residual_covariate_table(
    covariate: &[f64],
    median_residual: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if covariate.len() != median_residual.len() {
        return Err(HgtError::Dimension(format!(
            "{} covariate values for {} residuals",
            covariate.len(),
            median_residual.len()
        )));
    }
    let mut rows: Vec<(f64, f64)> = covariate
        .iter()
        .copied()
        .zip(median_residual.iter().copied())
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(rows)
}

/// Coefficient of determination of a least-squares quadratic fit of `y` on `x`.
pub fn quadratic_r_squared(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 4 {
        return Err(HgtError::Dimension(
            "quadratic fit needs matching vectors of length >= 4".into(),
        ));
    }
    let n = x.len();
    let design = nalgebra::DMatrix::from_fn(n, 3, |i, j| x[i].powi(j as i32));
    let yv = nalgebra::DVector::from_column_slice(y);
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&yv, 1e-12)
        .map_err(|e| HgtError::domain(e.to_string()))?;
    let fitted = &design * coef;
    let mean = yv.mean();
    let ss_tot: f64 = yv.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = yv
        .iter()
        .zip(fitted.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    if ss_tot == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 - ss_res / ss_tot)
}

/// Writes `(id, statistic, value)` rows under the header `cell,statistic,value`.
pub fn write_long_csv<W, I>(writer: W, id_name: &str, rows: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (String, String, f64)>,
{
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([id_name, "statistic", "value"])?;
    for (id, stat, value) in rows {
        wtr.write_record([id, stat, value.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Long-format rows for a list of summaries (`mean`, `p2.5`, ...).
pub fn summary_rows(ids: &[String], summaries: &[Summary]) -> Vec<(String, String, f64)> {
    let mut rows = Vec::new();
    for (id, s) in ids.iter().zip(summaries) {
        rows.push((id.clone(), "mean".to_string(), s.mean));
        for (p, v) in &s.percentiles {
            rows.push((id.clone(), format!("p{p}"), *v));
        }
    }
    rows
}
