//! Scalar statistics the diagnostic pipeline is built from: curve AUC,
//! interquartile mean, Spearman rank correlation, min-max normalization.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Map from game name to a scalar score.
pub type ScoreTable = BTreeMap<String, f64>;

/// Step-span-normalized trapezoidal area under a curve of
/// (env_step, value) points, so a constant curve `c` has AUC `c`.
pub fn auc(points: &[(u64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Metric(format!(
            "auc needs at least 2 points, got {}",
            points.len()
        )));
    }
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::Metric(format!(
                "auc requires strictly increasing steps ({} then {})",
                w[0].0, w[1].0
            )));
        }
    }
    let mut area = 0.0;
    for w in points.windows(2) {
        let dx = (w[1].0 - w[0].0) as f64;
        area += dx * (w[0].1 + w[1].1) / 2.0;
    }
    let span = (points[points.len() - 1].0 - points[0].0) as f64;
    Ok(area / span)
}

/// Interquartile mean: sort, drop the lowest and highest `floor(n/4)`
/// values, average the rest.
pub fn iqm(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 4 {
        return Err(Error::Metric(format!("iqm needs n >= 4, got {n}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("iqm values must be ordered"));
    let trim = n / 4;
    let kept = &sorted[trim..n - trim];
    Ok(kept.iter().sum::<f64>() / kept.len() as f64)
}

/// Spearman rank correlation with average ranks for ties.
///
/// Computed as the Pearson correlation of the rank vectors, with a single
/// square root in the denominator; for tie-free integer ranks the arithmetic
/// is exact, so e.g. `spearman(&[1,2,3], &[1,3,2])` returns exactly 0.5.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Metric(format!(
            "spearman needs equal lengths, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::Metric(format!(
            "spearman needs length >= 3, got {}",
            xs.len()
        )));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..rx.len() {
        let dx = rx[i] - mx;
        let dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "zero rank variance".to_string(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// 1-based ranks with ties assigned the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .expect("rank values must be ordered")
    });
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the average 1-based rank
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Min-max normalizes the values of a score table to [0, 1].
///
/// Returns the normalized table plus a degeneracy flag: when every value is
/// equal the outputs are all 0 and the flag is set rather than erroring, so
/// small rosters stay runnable.
pub fn minmax_normalize(table: &ScoreTable) -> Result<(ScoreTable, bool)> {
    if table.len() < 2 {
        return Err(Error::Metric(format!(
            "minmax_normalize needs >= 2 entries, got {}",
            table.len()
        )));
    }
    let lo = table.values().cloned().fold(f64::INFINITY, f64::min);
    let hi = table.values().cloned().fold(f64::NEG_INFINITY, f64::max);
    let degenerate = lo == hi;
    let out = table
        .iter()
        .map(|(k, &v)| {
            let nv = if degenerate { 0.0 } else { (v - lo) / (hi - lo) };
            (k.clone(), nv)
        })
        .collect();
    Ok((out, degenerate))
}
