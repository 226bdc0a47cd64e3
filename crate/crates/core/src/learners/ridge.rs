//! Closed-form ridge regression, both targets solved jointly.
//!
//! On standardized features the intercept is left unpenalized by centering:
//! fit `W = (Z'Z + alpha*I)^-1 Z'Yc` on target-centered `Yc`, keep the target
//! means as intercepts.

use nalgebra::DMatrix;

use super::{LearnError, ModelState};

pub fn fit(z: &DMatrix<f64>, y: &DMatrix<f64>, alpha: f64) -> Result<ModelState, LearnError> {
    let n = y.nrows() as f64;
    let intercept = [y.column(0).sum() / n, y.column(1).sum() / n];
    let mut yc = y.clone();
    for i in 0..yc.nrows() {
        yc[(i, 0)] -= intercept[0];
        yc[(i, 1)] -= intercept[1];
    }

    let d = z.ncols();
    let mut gram = z.transpose() * z;
    for j in 0..d {
        gram[(j, j)] += alpha;
    }
    let rhs = z.transpose() * &yc;

    // alpha > 0 keeps the system positive definite; the LU path is a guard
    // against pathological conditioning only.
    let weights = match gram.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => gram
            .lu()
            .solve(&rhs)
            .ok_or(LearnError::SingularSystem)?,
    };

    Ok(ModelState::Ridge { weights, intercept })
}

#[cfg(test)]
mod tests {
    use super::super::test_support::dataset_from_parts;
    use super::super::{predict, train, ModelFamily, ModelSpec, ModelState};
    use super::*;
    use crate::util;
    use rand::Rng;

    fn weights_of(state: &ModelState) -> &DMatrix<f64> {
        match state {
            ModelState::Ridge { weights, .. } => weights,
            other => panic!("unexpected state {other:?}"),
        }
    }

    #[test]
    fn orthonormal_design_near_zero_alpha_recovers_ols() {
        // orthonormal columns: Z'Z = I, so OLS weights are Z'Y
        let z = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]);
        let y = DMatrix::from_row_slice(4, 2, &[0.5, 1.0, 0.25, -1.0, -0.5, 0.0, -0.25, 0.5]);
        let state = fit(&z, &y, 1e-12).unwrap();
        let mut yc = y.clone();
        let m0 = y.column(0).sum() / 4.0;
        let m1 = y.column(1).sum() / 4.0;
        for i in 0..4 {
            yc[(i, 0)] -= m0;
            yc[(i, 1)] -= m1;
        }
        // Z'Z = 2I here, so OLS weights are Z'Yc / 2
        let expected = z.transpose() * &yc * 0.5;
        let w = weights_of(&state);
        for (a, b) in w.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn weight_norm_shrinks_as_alpha_grows() {
        let mut rng = util::substream(5, 0);
        let z = DMatrix::from_fn(40, 6, |_, _| rng.random_range(-1.0..1.0));
        let y = DMatrix::from_fn(40, 2, |_, _| rng.random_range(-1.0..1.0));
        let mut last_norm = f64::INFINITY;
        for alpha in [1e-6, 0.01, 0.1, 1.0, 10.0, 100.0] {
            let state = fit(&z, &y, alpha).unwrap();
            let norm = weights_of(&state).norm();
            assert!(norm <= last_norm + 1e-12, "norm grew at alpha={alpha}");
            last_norm = norm;
        }
    }

    #[test]
    fn tiny_alpha_matches_pseudo_inverse_ols() {
        let mut rng = util::substream(6, 0);
        // well-conditioned tall design
        let z = DMatrix::from_fn(60, 4, |_, _| rng.random_range(-1.0..1.0));
        let y = DMatrix::from_fn(60, 2, |_, _| rng.random_range(-1.0..1.0));
        let state = fit(&z, &y, 1e-8).unwrap();
        let mut yc = y.clone();
        let m0 = y.column(0).sum() / 60.0;
        let m1 = y.column(1).sum() / 60.0;
        for i in 0..60 {
            yc[(i, 0)] -= m0;
            yc[(i, 1)] -= m1;
        }
        let ols = (z.transpose() * &z)
            .lu()
            .solve(&(z.transpose() * &yc))
            .unwrap();
        let w = weights_of(&state);
        for (a, b) in w.iter().zip(ols.iter()) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn planted_linear_map_is_recovered_through_train_predict() {
        let mut rng = util::substream(7, 0);
        let n = 80;
        let d = 5;
        let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let w_true = DMatrix::from_fn(d, 2, |_, _| rng.random_range(-1.0..1.0));
        let y = &x * &w_true;
        let data = dataset_from_parts(x, y.clone());
        let model = train(
            &ModelSpec::new(ModelFamily::Ridge { alpha: 1e-8 }, 0),
            &data,
        )
        .unwrap();
        let pred = predict(&model, &data).unwrap();
        for (a, b) in pred.iter().zip(y.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn closed_form_matches_gradient_descent_oracle() {
        // independent iterative solver for the same objective:
        // min ||Z w - yc||^2 + alpha ||w||^2 (per target column)
        let mut rng = util::substream(8, 0);
        let n = 30;
        let d = 3;
        let z = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let y = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
        let alpha = 0.7;
        let state = fit(&z, &y, alpha).unwrap();

        let m0 = y.column(0).sum() / n as f64;
        let m1 = y.column(1).sum() / n as f64;
        let mut yc = y.clone();
        for i in 0..n {
            yc[(i, 0)] -= m0;
            yc[(i, 1)] -= m1;
        }
        let mut w = DMatrix::zeros(d, 2);
        let step = 1.0 / (2.0 * ((z.transpose() * &z).norm() + alpha));
        for _ in 0..200_000 {
            let grad = z.transpose() * (&z * &w - &yc) * 2.0 + &w * (2.0 * alpha);
            w -= grad * step;
        }
        let closed = weights_of(&state);
        for (a, b) in closed.iter().zip(w.iter()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}
