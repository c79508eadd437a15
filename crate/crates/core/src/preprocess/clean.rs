use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of one z-score pass over a single feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZscoreReport {
    pub mean: f64,
    /// Population standard deviation over present values.
    pub std: f64,
    /// Positions that were turned into absent values.
    pub removed: Vec<usize>,
}

/// Marks values with `|x − μ| / σ > gamma` as absent. `μ` and `σ` (divide by
/// `n`) come from the present values. With `σ = 0`, or fewer than two
/// present values, nothing is removed.
pub fn zscore_filter(values: &[Option<f64>], gamma: f64) -> (Vec<Option<f64>>, ZscoreReport) {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let n = present.len() as f64;
    let (mean, std) = if present.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let mean = present.iter().sum::<f64>() / n;
        let var = present.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    let mut out = values.to_vec();
    let mut removed = Vec::new();
    if present.len() >= 2 && std > 0.0 {
        for (i, v) in out.iter_mut().enumerate() {
            if let Some(x) = *v {
                if ((x - mean) / std).abs() > gamma {
                    *v = None;
                    removed.push(i);
                }
            }
        }
    }
    (out, ZscoreReport { mean, std, removed })
}

/// Fills absent values. Interior gaps use the straight line through the
/// nearest present neighbours, with `positions` as the abscissa; leading gaps
/// take the first present value and trailing gaps the last.
///
/// Returns the completed column and the number of filled cells.
pub fn interpolate(positions: &[f64], values: &[Option<f64>], feature: &str) -> Result<(Vec<f64>, usize)> {
    if positions.len() != values.len() {
        return Err(Error::Shape(format!(
            "{feature}: {} positions for {} values",
            positions.len(),
            values.len()
        )));
    }
    let known: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
    let (&first, &last) = match (known.first(), known.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => {
            return Err(Error::Preprocess(format!(
                "feature '{feature}' has no present values to interpolate from"
            )))
        }
    };
    let mut out = vec![0.0; values.len()];
    let mut filled = 0;
    let mut next_known = 0;
    for i in 0..values.len() {
        if let Some(v) = values[i] {
            out[i] = v;
            continue;
        }
        filled += 1;
        if i < first {
            out[i] = values[first].expect("known");
        } else if i > last {
            out[i] = values[last].expect("known");
        } else {
            while known[next_known] < i {
                next_known += 1;
            }
            let (i0, i1) = (known[next_known - 1], known[next_known]);
            let (x0, x1) = (positions[i0], positions[i1]);
            let (f0, f1) = (values[i0].expect("known"), values[i1].expect("known"));
            out[i] = f0 + (f1 - f0) / (x1 - x0) * (positions[i] - x0);
        }
    }
    Ok((out, filled))
}
