//! Shared fixtures for the integration tests.

use std::fmt::Write as _;
use std::path::Path;

use zibnet::copula::FrankTheta;
use zibnet::margin::ZibParams;
use zibnet::simulate::{sample_pair, task_rng};

/// A samples x taxa abundance matrix where consecutive taxon pairs
/// (0,1), (2,3), ... are dependent with the given copula parameter and
/// everything else is independent.
pub fn planted_matrix(
    n_samples: usize,
    n_pairs: usize,
    theta: f64,
    seed: u64,
) -> (Vec<String>, Vec<Vec<f64>>) {
    let margins = [
        (ZibParams::new(0.02, 0.40, 120.0).unwrap(), ZibParams::new(0.03, 0.50, 100.0).unwrap()),
        (ZibParams::new(0.03, 0.45, 110.0).unwrap(), ZibParams::new(0.02, 0.40, 120.0).unwrap()),
        (ZibParams::new(0.02, 0.50, 100.0).unwrap(), ZibParams::new(0.03, 0.45, 110.0).unwrap()),
    ];
    let t = 2 * n_pairs;
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(t);
    for k in 0..n_pairs {
        let (gi, gj) = &margins[k % margins.len()];
        let mut rng = task_rng(seed, k as u64, 0);
        let data = sample_pair(n_samples, gi, gj, FrankTheta(theta), &mut rng).unwrap();
        columns.push(data.iter().map(|o| o.x_i).collect());
        columns.push(data.iter().map(|o| o.x_j).collect());
    }
    let labels: Vec<String> = (0..t).map(|k| format!("taxon{k:02}")).collect();
    let matrix: Vec<Vec<f64>> = (0..n_samples)
        .map(|l| columns.iter().map(|c| c[l]).collect())
        .collect();
    (labels, matrix)
}

/// Write a samples-as-rows abundance TSV (header: taxa; first column: ids).
pub fn write_abundance_tsv(path: &Path, labels: &[String], matrix: &[Vec<f64>]) {
    let mut s = String::from("sample");
    for l in labels {
        let _ = write!(s, "\t{l}");
    }
    s.push('\n');
    for (l, row) in matrix.iter().enumerate() {
        let _ = write!(s, "s{l:03}");
        for v in row {
            let _ = write!(s, "\t{v:.16e}");
        }
        s.push('\n');
    }
    std::fs::write(path, s).unwrap();
}

/// The unordered label pairs planted by [`planted_matrix`].
pub fn planted_pairs(n_pairs: usize) -> Vec<(String, String)> {
    (0..n_pairs)
        .map(|k| (format!("taxon{:02}", 2 * k), format!("taxon{:02}", 2 * k + 1)))
        .collect()
}
