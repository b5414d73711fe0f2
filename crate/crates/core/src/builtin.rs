//! Reference families with published intermediate values, embedded so that
//! the `reproduce` command and the regression tests need no external files.

use crate::config::Config;

/// Schur stable `A1` paired with an unstable `A2` that it fails to commute
/// with; `δ = 2`, `Δ = 3`. Diverges under alternating dwell-3 switching.
pub fn unstable_pair() -> Config {
    Config::new(
        vec![
            vec![vec![-0.24, 0.14], vec![-0.85, -0.89]],
            vec![vec![0.12, 1.12], vec![1.74, -1.48]],
        ],
        2,
        3,
    )
}

/// `unstable_pair` with `A2` replaced by a milder unstable matrix.
pub fn unstable_pair_softened() -> Config {
    Config::new(
        vec![
            vec![vec![-0.24, 0.14], vec![-0.85, -0.89]],
            vec![vec![0.10, 0.90], vec![0.50, -1.20]],
        ],
        2,
        3,
    )
}

/// Two commuting diagonal matrices, one stable and one unstable.
pub fn commuting_pair() -> Config {
    let mut c = Config::new(
        vec![
            vec![vec![-0.92, 0.0], vec![0.0, 0.77]],
            vec![vec![1.24, 0.0], vec![0.0, 0.89]],
        ],
        2,
        3,
    );
    c.lambda = Some(0.001);
    c
}

/// `commuting_pair` with small off-diagonal perturbations.
pub fn perturbed_pair() -> Config {
    let mut c = Config::new(
        vec![
            vec![vec![-0.92, 0.1], vec![0.0, 0.77]],
            vec![vec![1.24, 0.0], vec![0.05, 0.89]],
        ],
        2,
        3,
    );
    c.lambda = Some(0.001);
    c
}
