use std::collections::{BTreeMap, HashMap};

use super::{FieldKind, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::PointCloud;

/// Count of points sharing each point's cell on a `bins^d` grid spanning the
/// bounding box. The last bin on each axis includes its right edge.
pub fn binning_density(cloud: &PointCloud, bins: usize) -> Result<ScalarField> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bins per axis must be >= 1".into()));
    }
    let d = cloud.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in cloud.points() {
        for a in 0..d {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let cell_of = |p: &[f64]| -> Vec<usize> {
        (0..d)
            .map(|a| {
                let span = hi[a] - lo[a];
                if span <= 0.0 {
                    return 0;
                }
                let b = ((p[a] - lo[a]) / span * bins as f64).floor() as usize;
                b.min(bins - 1)
            })
            .collect()
    };
    let cells: Vec<Vec<usize>> = cloud.points().map(cell_of).collect();
    let mut counts: HashMap<&[usize], usize> = HashMap::new();
    for c in &cells {
        *counts.entry(c.as_slice()).or_default() += 1;
    }
    let values = cells.iter().map(|c| counts[c.as_slice()] as f64).collect();
    let mut params = BTreeMap::new();
    params.insert("bins".to_owned(), bins as f64);
    Ok(ScalarField {
        values,
        kind: FieldKind::Binning,
        params,
        warnings: Vec::new(),
    })
}
