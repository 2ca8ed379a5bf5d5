use rayon::prelude::*;

use super::FlatMatrix;
use crate::error::{Error, Result};

/// Masked Euclidean distance over coordinates observed in both rows, scaled
/// up by `n_cols / n_used`. Rows sharing no observed coordinate are at
/// infinite distance.
pub fn masked_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut used = 0usize;
    let mut ss = 0.0;
    for (x, y) in a.iter().zip(b) {
        if !x.is_nan() && !y.is_nan() {
            used += 1;
            ss += (x - y) * (x - y);
        }
    }
    if used == 0 {
        f64::INFINITY
    } else {
        (ss * a.len() as f64 / used as f64).sqrt()
    }
}

/// Fills each missing cell with the mean of that column over the `k` nearest
/// rows observing it. Ties go to the lower row index; with fewer than `k`
/// donors all are used, and with none the column mean is used.
pub fn knn_impute(m: &FlatMatrix, k: usize) -> Result<FlatMatrix> {
    if k == 0 {
        return Err(Error::InvalidParameter("knn requires k >= 1".into()));
    }
    let means: Vec<Option<f64>> = (0..m.n_cols())
        .map(|c| {
            if m.missing_count(c) == 0 {
                Ok(None)
            } else {
                m.column_mean(c).map(Some)
            }
        })
        .collect::<Result<_>>()?;

    // Zero-filled values and 0/1 observation weights: the distance kernel
    // below is then branch-free yet sums the same terms as `masked_distance`.
    let n_cols = m.n_cols();
    let cells = || (0..m.n_rows()).flat_map(|r| m.raw_row(r).iter().copied());
    let filled: Vec<f64> = cells().map(|v| if v.is_nan() { 0.0 } else { v }).collect();
    let seen: Vec<f64> = cells().map(|v| if v.is_nan() { 0.0 } else { 1.0 }).collect();
    let distance = |a: usize, b: usize| -> f64 {
        let (xa, xb) = (&filled[a * n_cols..(a + 1) * n_cols], &filled[b * n_cols..(b + 1) * n_cols]);
        let (wa, wb) = (&seen[a * n_cols..(a + 1) * n_cols], &seen[b * n_cols..(b + 1) * n_cols]);
        let mut ss = 0.0;
        let mut used = 0.0;
        for j in 0..n_cols {
            let w = wa[j] * wb[j];
            let d = xa[j] - xb[j];
            ss += w * d * d;
            used += w;
        }
        if used == 0.0 {
            f64::INFINITY
        } else {
            (ss * n_cols as f64 / used).sqrt()
        }
    };

    let fills: Vec<Vec<(usize, f64)>> = (0..m.n_rows())
        .into_par_iter()
        .map(|r| {
            let row = m.raw_row(r);
            let missing: Vec<usize> = (0..m.n_cols()).filter(|&c| row[c].is_nan()).collect();
            if missing.is_empty() {
                return Vec::new();
            }
            let closer = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            // Per missing column, sorted buffer of the k closest donors so far.
            let mut best: Vec<Vec<(f64, usize)>> = vec![Vec::with_capacity(k + 1); missing.len()];
            for o in (0..m.n_rows()).filter(|&o| o != r) {
                let dist = distance(r, o);
                if !dist.is_finite() {
                    continue;
                }
                let cand = (dist, o);
                for (donors, &c) in best.iter_mut().zip(&missing) {
                    if seen[o * n_cols + c] == 0.0 || (donors.len() == k && closer(&cand, &donors[k - 1]).is_ge()) {
                        continue;
                    }
                    let at = donors.partition_point(|d| closer(d, &cand).is_lt());
                    donors.insert(at, cand);
                    donors.truncate(k);
                }
            }
            missing
                .into_iter()
                .zip(best)
                .map(|(c, donors)| {
                    let (sum, n) = donors
                        .iter()
                        .fold((0.0, 0usize), |(s, n), &(_, o)| (s + m.raw(o, c), n + 1));
                    let v = if n == 0 {
                        means[c].expect("column with missing cells has a mean")
                    } else {
                        sum / n as f64
                    };
                    (c, v)
                })
                .collect()
        })
        .collect();

    let mut out = m.clone();
    for (r, cells) in fills.into_iter().enumerate() {
        for (c, v) in cells {
            out.set(r, c, v);
        }
    }
    Ok(out)
}
