//! Brute-force k-nearest-neighbor regression over standardized rows.
//!
//! Prediction is the mean target vector of the k nearest training rows under
//! Euclidean distance. Equal distances break toward the training row with the
//! lower region id (training rows are stored in region-id order, so index
//! order realizes that).

use nalgebra::DMatrix;

use crate::exec;
use crate::panel::RegionId;

pub fn predict(
    queries: &DMatrix<f64>,
    rows: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    region_ids: &[RegionId],
    k: usize,
) -> DMatrix<f64> {
    debug_assert_eq!(rows.nrows(), region_ids.len());
    let indices: Vec<usize> = (0..queries.nrows()).collect();
    let predictions = exec::map_items(&indices, |&qi| {
        let query = queries.row(qi);
        let mut candidates: Vec<(f64, usize)> = (0..rows.nrows())
            .map(|ri| {
                let dist2 = query
                    .iter()
                    .zip(rows.row(ri).iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
                (dist2, ri)
            })
            .collect();
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let take = k.min(candidates.len());
        let mut sum = [0.0, 0.0];
        for &(_, ri) in candidates.iter().take(take) {
            sum[0] += targets[(ri, 0)];
            sum[1] += targets[(ri, 1)];
        }
        [sum[0] / take as f64, sum[1] / take as f64]
    });
    DMatrix::from_fn(queries.nrows(), 2, |i, j| predictions[i][j])
}
