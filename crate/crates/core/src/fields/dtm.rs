use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{FieldKind, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{KdTree, PointCloud};

fn check_r(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("dtm exponent r must be > 0, got {r}")));
    }
    Ok(())
}

/// Power mean `((1/k) sum d_j^r)^(1/r)` of ascending neighbor distances.
pub(crate) fn power_mean(distances: &[f64], r: f64) -> f64 {
    let k = distances.len() as f64;
    if r == 2.0 {
        (distances.iter().map(|d| d * d).sum::<f64>() / k).sqrt()
    } else if r == 1.0 {
        distances.iter().sum::<f64>() / k
    } else {
        (distances.iter().map(|d| d.powf(r)).sum::<f64>() / k).powf(1.0 / r)
    }
}

/// Raw distance-to-measure values for every sample point.
pub fn dtm_values(cloud: &PointCloud, k: usize, r: f64) -> Result<Vec<f64>> {
    check_r(r)?;
    cloud.check_k(k)?;
    let tree = KdTree::new(cloud);
    Ok((0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let nn = tree.nearest(cloud.point(i), k, Some(i));
            let d: Vec<f64> = nn.into_iter().map(|(_, d)| d).collect();
            power_mean(&d, r)
        })
        .collect())
}

/// k-distance-to-measure of each point over its `k` nearest other points.
pub fn dtm(cloud: &PointCloud, k: usize, r: f64) -> Result<ScalarField> {
    let values = dtm_values(cloud, k, r)?;
    let mut params = BTreeMap::new();
    params.insert("k".to_owned(), k as f64);
    params.insert("r".to_owned(), r);
    Ok(ScalarField {
        values,
        kind: FieldKind::Dtm,
        params,
        warnings: Vec::new(),
    })
}

/// dtm at an arbitrary location `q` against the whole sample (no exclusion).
pub fn dtm_at(tree: &KdTree<'_>, q: &[f64], k: usize, r: f64) -> Result<f64> {
    check_r(r)?;
    let n = tree.cloud().len();
    if k == 0 || k > n {
        return Err(Error::NeighborCount { k, n });
    }
    let d: Vec<f64> = tree.nearest(q, k, None).into_iter().map(|(_, d)| d).collect();
    Ok(power_mean(&d, r))
}

/// Local centrality `C_k = 1 - (d_k - min d_k) / (max d_k - min d_k)` with `r = 2`.
///
/// When every `d_k` is equal the normalization is undefined; all values are
/// set to 1 and a warning is attached.
pub fn centrality(cloud: &PointCloud, k: usize) -> Result<ScalarField> {
    let d = dtm_values(cloud, k, 2.0)?;
    let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut warnings = Vec::new();
    let values = if hi > lo {
        let span = hi - lo;
        d.iter().map(|v| 1.0 - (v - lo) / span).collect()
    } else {
        let msg = format!("all d_{k} values are equal ({lo}); centrality set to 1 everywhere");
        log::warn!("{msg}");
        warnings.push(msg);
        vec![1.0; d.len()]
    };
    let mut params = BTreeMap::new();
    params.insert("k".to_owned(), k as f64);
    params.insert("r".to_owned(), 2.0);
    params.insert("dtm_min".to_owned(), lo);
    params.insert("dtm_max".to_owned(), hi);
    Ok(ScalarField {
        values,
        kind: FieldKind::Centrality,
        params,
        warnings,
    })
}
