//! From-scratch baseline classifiers over sparse bag-of-words input.

pub mod forest;
pub mod linear;

pub use forest::{train_forest, ForestConfig, ForestModel};
pub use linear::{train_linear, LinearConfig, LinearModel};

/// Index of the first maximum; ties resolve to the lowest class id.
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}
