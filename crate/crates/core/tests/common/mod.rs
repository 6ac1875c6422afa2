//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A random confusion matrix with `classes` rows and entries in `0..max`.
pub fn random_counts(rng: &mut ChaCha8Rng, classes: usize, max: u64) -> Vec<Vec<u64>> {
    loop {
        let rows: Vec<Vec<u64>> = (0..classes)
            .map(|_| (0..classes).map(|_| rng.gen_range(0..max)).collect())
            .collect();
        if rows.iter().flatten().any(|&v| v > 0) {
            return rows;
        }
    }
}

/// Scores computed by walking every (truth, prediction) pair one at a time.
pub struct BruteMetrics {
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
}

pub fn brute_metrics(counts: &[Vec<u64>]) -> BruteMetrics {
    let n = counts.len();
    let pairs: Vec<(usize, usize)> = counts
        .iter()
        .enumerate()
        .flat_map(|(t, row)| {
            row.iter()
                .enumerate()
                .flat_map(move |(p, &k)| std::iter::repeat_n((t, p), k as usize))
        })
        .collect();
    let correct = pairs.iter().filter(|(t, p)| t == p).count();
    let mut precision = vec![0.0; n];
    let mut recall = vec![0.0; n];
    let mut f1 = vec![0.0; n];
    for c in 0..n {
        let predicted = pairs.iter().filter(|&&(_, p)| p == c).count();
        let actual = pairs.iter().filter(|&&(t, _)| t == c).count();
        let hit = pairs.iter().filter(|&&(t, p)| t == c && p == c).count();
        if predicted > 0 {
            precision[c] = hit as f64 / predicted as f64;
        }
        if actual > 0 {
            recall[c] = hit as f64 / actual as f64;
        }
        // harmonic mean written as 2·hit / (predicted + actual)
        if predicted + actual > 0 && hit > 0 {
            f1[c] = 2.0 * hit as f64 / (predicted + actual) as f64;
        }
    }
    BruteMetrics {
        accuracy: correct as f64 / pairs.len() as f64,
        precision,
        recall,
        f1,
    }
}
