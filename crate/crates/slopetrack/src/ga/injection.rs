//! Least-squares injection for the control population.
//!
//! Fits a linear map from recorded features to the actions that were
//! actually executed over the last `horizon` control steps, then packs the
//! transposed solution into a control chromosome. While the baseline is
//! driving, this seeds the population with a linearized imitation of it;
//! once the learned policy drives, it keeps re-seeding a smoothed copy of
//! the current behaviour.

use nalgebra::DMatrix;

use super::{CtrlChromosome, HistoryBuffer};

/// Ridge term used when the feature matrix is numerically rank deficient.
const RIDGE_LAMBDA: f64 = 1e-6;

/// Relative singular-value cutoff for the rank decision.
const RANK_RTOL: f64 = 1e-10;

/// Solve `features * X = actions` over the most recent `horizon` history
/// rows and return `X` transposed as row-major gains. Falls back to a ridge
/// solve when the features do not span all three directions. Returns `None`
/// when fewer than `horizon` steps have been recorded.
pub fn inject_inverse_model(history: &HistoryBuffer, horizon: usize) -> Option<CtrlChromosome> {
    assert!(horizon >= 1);
    if history.len() < horizon {
        return None;
    }

    let mut features = Vec::with_capacity(horizon * 3);
    let mut actions = Vec::with_capacity(horizon * 2);
    for entry in history.last_n(horizon) {
        features.extend_from_slice(&entry.features);
        actions.push(entry.action.phi());
        actions.push(entry.action.omega_w());
    }
    let f = DMatrix::from_row_slice(horizon, 3, &features);
    let a = DMatrix::from_row_slice(horizon, 2, &actions);

    let svd = f.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let eps = sigma_max * RANK_RTOL;
    let x = if sigma_max > 0.0 && svd.rank(eps) == 3 {
        svd.solve(&a, eps).ok()?
    } else {
        // Normal equations with a ridge term keep the solve well posed when
        // a feature direction was never excited.
        let gram = f.transpose() * &f + DMatrix::identity(3, 3) * RIDGE_LAMBDA;
        let rhs = f.transpose() * &a;
        gram.cholesky()?.solve(&rhs)
    };

    let mut genes = [0.0; 6];
    for row in 0..2 {
        for col in 0..3 {
            genes[row * 3 + col] = x[(col, row)];
        }
    }
    if !genes.iter().all(|g| g.is_finite()) {
        return None;
    }
    Some(CtrlChromosome { genes })
}
