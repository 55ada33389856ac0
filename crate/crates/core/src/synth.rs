//! Seeded random datasets on an integer grid, for sweeps and tests.

use std::collections::BTreeSet;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::pipeline::Dataset;

/// Half-width of the grid: about `4·N^(1/d)`, so norms and separation stay polynomial in `N`.
pub fn grid_radius(n: usize, d: usize) -> i64 {
    let side = (4.0 * (n.max(1) as f64).powf(1.0 / d as f64)).ceil() as i64;
    side.max(4)
}

fn distinct_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<i64>> {
    let g = grid_radius(n, d);
    let mut seen = BTreeSet::new();
    let mut pts = Vec::with_capacity(n);
    while pts.len() < n {
        let p: Vec<i64> = (0..d).map(|_| rng.gen_range(-g..=g)).collect();
        if seen.insert(p.clone()) {
            pts.push(p);
        }
    }
    pts
}

fn to_rational(pts: Vec<Vec<i64>>) -> Vec<Vec<BigRational>> {
    pts.into_iter()
        .map(|p| p.into_iter().map(|v| BigRational::from_integer(v.into())).collect())
        .collect()
}

/// `n` distinct grid points in `d` dimensions with uniform labels in `1..=classes`.
pub fn classification(n: usize, d: usize, classes: u64, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = distinct_points(&mut rng, n, d);
    let labels: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=classes)).collect();
    Dataset::from_classes(to_rational(pts), &labels, classes)
}

/// `n` distinct grid points with labels drawn uniformly from `{0, 1/1000, …, 1}`.
pub fn regression(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = distinct_points(&mut rng, n, d);
    let labels = (0..n)
        .map(|_| BigRational::new(rng.gen_range(0..=1000i64).into(), 1000.into()))
        .collect();
    Dataset::load_and_validate(to_rational(pts), labels, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_valid() {
        let a = classification(50, 2, 4, 11).unwrap();
        let b = classification(50, 2, 4, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        assert!(a.class_labels().unwrap().iter().all(|&y| (1..=4).contains(&y)));
        assert_ne!(a, classification(50, 2, 4, 12).unwrap());
    }

    #[test]
    fn regression_labels_lie_in_the_unit_interval() {
        let ds = regression(30, 1, 3).unwrap();
        let zero = BigRational::from_integer(0.into());
        let one = BigRational::from_integer(1.into());
        assert!(ds.labels().iter().all(|y| *y >= zero && *y <= one));
    }
}
