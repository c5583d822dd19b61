//! Statistical toolkit: correlations, ridge regression, OLS with HC3
//! standard errors, LOWESS smoothing and a univariate logistic odds fit.

mod logistic;
mod lowess;

pub use logistic::{logistic_odds, LogisticOdds};
pub use lowess::lowess;

use crate::error::StatsError;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Fit summary for ridge and OLS/HC3 models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    /// Intercept first, then one coefficient per covariate, original scale.
    pub coefficients: Vec<f64>,
    /// HC3 standard errors for [`ols_hc3`]; zeros for ridge fits where no
    /// robust covariance is computed.
    pub standard_errors: Vec<f64>,
    pub r_squared: f64,
    pub adjusted_r_squared: f64,
    pub n: usize,
    pub p: usize,
}

impl RegressionResult {
    /// Evaluate the fitted linear model on one covariate row.
    pub fn predict(&self, row: &[f64]) -> f64 {
        debug_assert_eq!(row.len() + 1, self.coefficients.len());
        self.coefficients[0]
            + row
                .iter()
                .zip(&self.coefficients[1..])
                .map(|(x, b)| x * b)
                .sum::<f64>()
    }
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Product-moment correlation. Errors on constant input.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_lengths(x, y)?;
    if x.len() < 2 {
        return Err(StatsError::TooFewObservations {
            min: 2,
            got: x.len(),
        });
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::ConstantInput { name: "x" });
    }
    if syy == 0.0 {
        return Err(StatsError::ConstantInput { name: "y" });
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Average ranks with ties sharing their mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("non-finite rank input"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Ranks are 1-based; the run i..=j shares the mean rank.
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson on average-ranked values.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_lengths(x, y)?;
    if x.len() < 3 {
        return Err(StatsError::TooFewObservations {
            min: 3,
            got: x.len(),
        });
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Ridge options; defaults follow the pipeline configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgeOptions {
    pub alpha: f64,
    /// Z-score covariates before solving; coefficients are mapped back to
    /// the original scale either way.
    pub standardize: bool,
    /// Fit an unpenalized intercept.
    pub fit_intercept: bool,
}

impl Default for RidgeOptions {
    fn default() -> Self {
        RidgeOptions {
            alpha: 1.0,
            standardize: true,
            fit_intercept: true,
        }
    }
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, p, |i, j| rows[i][j])
}

fn r_squared_pair(sse: f64, sst: f64) -> f64 {
    if sst == 0.0 {
        // Constant target: a zero-residual fit is perfect, anything else
        // explains nothing.
        if sse == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - sse / sst
    }
}

fn adjusted_r_squared(r2: f64, n: usize, p: usize) -> f64 {
    let denom = n as isize - p as isize - 1;
    if denom <= 0 {
        return r2;
    }
    1.0 - (1.0 - r2) * (n as f64 - 1.0) / denom as f64
}

/// Penalized least squares (X'X + alpha I) b = X'y with optional z-scoring
/// and an unpenalized intercept. Coefficients come back in the original
/// covariate scale, so predictions need no de-standardization.
///
/// A singular system is only an error at alpha = 0; any positive alpha
/// regularizes it away.
pub fn ridge_fit(
    rows: &[Vec<f64>],
    y: &[f64],
    options: &RidgeOptions,
) -> Result<RegressionResult, StatsError> {
    let n = rows.len();
    if n == 0 || n != y.len() {
        return Err(StatsError::LengthMismatch {
            left: n,
            right: y.len(),
        });
    }
    let x = to_matrix(rows);
    let p = x.ncols();

    let col_means: Vec<f64> = (0..p).map(|j| x.column(j).mean()).collect();
    let col_scales: Vec<f64> = (0..p)
        .map(|j| {
            if !options.standardize {
                return 1.0;
            }
            let mu = col_means[j];
            let var = x.column(j).iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();

    let y_mean = if options.fit_intercept { mean(y) } else { 0.0 };
    let mut z = x.clone();
    for j in 0..p {
        let center = if options.fit_intercept { col_means[j] } else { 0.0 };
        for i in 0..n {
            z[(i, j)] = (z[(i, j)] - center) / col_scales[j];
        }
    }
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));

    let mut gram = z.transpose() * &z;
    for j in 0..p {
        gram[(j, j)] += options.alpha;
    }
    let rhs = z.transpose() * &yc;
    let beta_z = match gram.lu().solve(&rhs) {
        Some(solution) => solution,
        None => return Err(StatsError::SingularDesign),
    };

    let mut coefficients = vec![0.0; p + 1];
    for j in 0..p {
        coefficients[j + 1] = beta_z[j] / col_scales[j];
    }
    if options.fit_intercept {
        let shift: f64 = (0..p).map(|j| coefficients[j + 1] * col_means[j]).sum();
        coefficients[0] = y_mean - shift;
    }

    let result_stub = RegressionResult {
        coefficients,
        standard_errors: vec![0.0; p + 1],
        r_squared: 0.0,
        adjusted_r_squared: 0.0,
        n,
        p,
    };
    let sse: f64 = rows
        .iter()
        .zip(y)
        .map(|(row, &yi)| (yi - result_stub.predict(row)).powi(2))
        .sum();
    let my = mean(y);
    let sst: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let r2 = r_squared_pair(sse, sst);
    Ok(RegressionResult {
        r_squared: r2,
        adjusted_r_squared: adjusted_r_squared(r2, n, p),
        ..result_stub
    })
}

/// Relative singular-value cutoff below which a design is singular.
const SINGULARITY_TOL: f64 = 1e-12;

/// OLS with HC3 heteroscedasticity-robust standard errors.
///
/// `rows` holds covariates without the intercept column; the design is
/// `[1 | X]`. The HC3 sandwich weights squared residuals by (1 - h_ii)^-2,
/// with h_ii the hat-matrix diagonal. Exactly or numerically collinear
/// designs are rejected rather than silently fitted.
pub fn ols_hc3(rows: &[Vec<f64>], y: &[f64]) -> Result<RegressionResult, StatsError> {
    let n = rows.len();
    if n != y.len() {
        return Err(StatsError::LengthMismatch {
            left: n,
            right: y.len(),
        });
    }
    let p = rows.first().map_or(0, Vec::len);
    if n < p + 2 {
        return Err(StatsError::TooFewObservations { min: p + 2, got: n });
    }

    let design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] });
    let svd = design.clone().svd(false, true);
    let sigma_max = svd.singular_values.max();
    if svd.singular_values.iter().any(|&s| s < SINGULARITY_TOL * sigma_max) {
        return Err(StatsError::SingularDesign);
    }
    let gram = design.transpose() * &design;
    let gram_inv = match gram.clone().try_inverse() {
        Some(inverse) => inverse,
        None => return Err(StatsError::SingularDesign),
    };
    let yv = DVector::from_column_slice(y);
    let beta = &gram_inv * design.transpose() * &yv;
    let residuals = &yv - &design * &beta;

    // Hat diagonal h_ii = d_i' (D'D)^-1 d_i.
    let mut omega = DVector::zeros(n);
    for i in 0..n {
        let di = design.row(i).transpose();
        let h = (di.transpose() * &gram_inv * &di)[(0, 0)];
        let one_minus = 1.0 - h;
        if one_minus <= 1e-10 {
            return Err(StatsError::LeverageOne { index: i });
        }
        omega[i] = (residuals[i] / one_minus).powi(2);
    }

    let mut meat = DMatrix::zeros(p + 1, p + 1);
    for i in 0..n {
        let di = design.row(i).transpose();
        meat += omega[i] * &di * di.transpose();
    }
    let covariance = &gram_inv * meat * &gram_inv;
    let standard_errors: Vec<f64> = (0..p + 1)
        .map(|j| covariance[(j, j)].max(0.0).sqrt())
        .collect();

    let sse: f64 = residuals.iter().map(|e| e * e).sum();
    let my = mean(y);
    let sst: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let r2 = r_squared_pair(sse, sst);

    Ok(RegressionResult {
        coefficients: beta.iter().copied().collect(),
        standard_errors,
        r_squared: r2,
        adjusted_r_squared: adjusted_r_squared(r2, n, p),
        n,
        p,
    })
}

/// Rank-aware in-sample R-squared via truncated-SVD least squares on the
/// design `[1 | X]`.
///
/// Unlike [`ols_hc3`] this accepts rank-deficient designs: directions with
/// singular values below the cutoff are ignored, which is exactly the
/// projection onto the design's column space. Used for nested-model
/// comparisons where added columns may be linear combinations of existing
/// ones (adding such columns leaves R-squared unchanged rather than
/// erroring). Returns `(r_squared, adjusted_r_squared, rank)`; the adjusted
/// value still charges the nominal column count `p`.
pub fn least_squares_r2(rows: &[Vec<f64>], y: &[f64]) -> Result<(f64, f64, usize), StatsError> {
    let n = rows.len();
    if n == 0 || n != y.len() {
        return Err(StatsError::LengthMismatch {
            left: n,
            right: y.len(),
        });
    }
    let p = rows.first().map_or(0, Vec::len);
    let design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] });
    let yv = DVector::from_column_slice(y);
    let svd = design.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s >= SINGULARITY_TOL * sigma_max)
        .count();

    let u = svd.u.as_ref().expect("svd computed with u");
    let vt = svd.v_t.as_ref().expect("svd computed with v_t");
    // beta = V S^+ U' y with small singular values truncated.
    let uty = u.transpose() * &yv;
    let mut scaled = DVector::zeros(svd.singular_values.len());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s >= SINGULARITY_TOL * sigma_max {
            scaled[i] = uty[i] / s;
        }
    }
    let beta = vt.transpose() * scaled;
    let residuals = &yv - design * beta;
    let sse: f64 = residuals.iter().map(|e| e * e).sum();
    let my = mean(y);
    let sst: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let r2 = r_squared_pair(sse, sst);
    Ok((r2, adjusted_r_squared(r2, n, p), rank))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pearson_affine() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert_relative_eq!(pearson(&x, &y).unwrap(), 1.0);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_relative_eq!(pearson(&x, &neg).unwrap(), -1.0);
    }

    #[test]
    fn pearson_hand_fixture() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 1.0, 4.0, 3.0];
        // Hand evaluation: cov = 1.5/..., direct formula below.
        let mx = 2.5;
        let my = 2.5;
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
        let expected = sxy / (sxx.sqrt() * syy.sqrt());
        assert_relative_eq!(pearson(&x, &y).unwrap(), expected);
        assert_relative_eq!(expected, 0.6);
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(StatsError::ConstantInput { .. })
        ));
        assert!(matches!(
            pearson(&[1.0], &[1.0]),
            Err(StatsError::TooFewObservations { .. })
        ));
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0]),
            Err(StatsError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn spearman_monotone() {
        assert_relative_eq!(
            spearman(&[1.0, 2.0, 3.0], &[3.0, 5.0, 9.0]).unwrap(),
            1.0
        );
        assert_relative_eq!(
            spearman(&[1.0, 2.0, 3.0], &[9.0, 5.0, 3.0]).unwrap(),
            -1.0
        );
    }

    #[test]
    fn spearman_tie_handling() {
        let x = [1.0, 2.0, 2.0, 3.0];
        let y = [1.0, 2.0, 3.0, 4.0];
        // Ranks of x: [1, 2.5, 2.5, 4]; Pearson against [1,2,3,4].
        let rx = average_ranks(&x);
        assert_eq!(rx, vec![1.0, 2.5, 2.5, 4.0]);
        let expected = pearson(&rx, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_relative_eq!(spearman(&x, &y).unwrap(), expected);
    }

    #[test]
    fn spearman_invariant_under_monotone_transform() {
        let x = [0.3, 1.2, 0.7, 2.4, 1.9, 0.1];
        let y = [5.0, 3.0, 4.0, 1.0, 2.0, 6.0];
        let base = spearman(&x, &y).unwrap();
        let tx: Vec<f64> = x.iter().map(|v| (v * 3.0).exp()).collect();
        assert_relative_eq!(spearman(&tx, &y).unwrap(), base, epsilon = 1e-12);
    }

    #[test]
    fn ridge_exact_linear_alpha_zero() {
        let rows = vec![vec![1.0], vec![2.0], vec![3.0]];
        let y = [2.0, 4.0, 6.0];
        let options = RidgeOptions {
            alpha: 0.0,
            standardize: false,
            fit_intercept: false,
        };
        let fit = ridge_fit(&rows, &y, &options).unwrap();
        assert_relative_eq!(fit.coefficients[1], 2.0);
        assert_eq!(fit.coefficients[0], 0.0);
        assert_relative_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn ridge_closed_form_scalar() {
        // beta = X'y / (X'X + alpha) = 28 / (14 + 14) = 1.
        let rows = vec![vec![1.0], vec![2.0], vec![3.0]];
        let y = [2.0, 4.0, 6.0];
        let options = RidgeOptions {
            alpha: 14.0,
            standardize: false,
            fit_intercept: false,
        };
        let fit = ridge_fit(&rows, &y, &options).unwrap();
        assert_relative_eq!(fit.coefficients[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ridge_shrinks_to_zero() {
        let rows = vec![vec![1.0], vec![2.0], vec![3.0]];
        let y = [2.0, 4.0, 6.0];
        let options = RidgeOptions {
            alpha: 1e9,
            standardize: false,
            fit_intercept: false,
        };
        let fit = ridge_fit(&rows, &y, &options).unwrap();
        assert!(fit.coefficients[1].abs() < 1e-6);
    }

    #[test]
    fn ridge_alpha_zero_singular_errors() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        let y = [1.0, 2.0, 3.0];
        let options = RidgeOptions {
            alpha: 0.0,
            standardize: false,
            fit_intercept: false,
        };
        assert!(matches!(
            ridge_fit(&rows, &y, &options),
            Err(StatsError::SingularDesign)
        ));
        // Any positive alpha regularizes the same system.
        let ok = ridge_fit(
            &rows,
            &y,
            &RidgeOptions {
                alpha: 0.5,
                ..options
            },
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn ridge_standardized_alpha_zero_matches_ols() {
        let rows = vec![
            vec![1.0, 3.0],
            vec![2.0, -1.0],
            vec![4.0, 0.5],
            vec![5.0, 2.0],
            vec![7.0, -2.5],
            vec![8.0, 1.0],
        ];
        let y = [3.0, 1.0, 4.0, 6.0, 2.0, 7.0];
        let ridge = ridge_fit(
            &rows,
            &y,
            &RidgeOptions {
                alpha: 0.0,
                standardize: true,
                fit_intercept: true,
            },
        )
        .unwrap();
        let ols = ols_hc3(&rows, &y).unwrap();
        for (a, b) in ridge.coefficients.iter().zip(&ols.coefficients) {
            assert_relative_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn hc3_zero_residuals_zero_ses() {
        // Symmetric dyadic design: (D'D)^-1 = diag(1/4, 1/4), so the solve
        // is exact in f64 and residuals are exactly zero.
        let rows = vec![vec![-1.0], vec![-1.0], vec![1.0], vec![1.0]];
        let y: Vec<f64> = rows.iter().map(|r| 1.0 + 2.0 * r[0]).collect();
        let fit = ols_hc3(&rows, &y).unwrap();
        assert_eq!(fit.r_squared, 1.0);
        assert!(fit.standard_errors.iter().all(|&se| se == 0.0));
    }

    #[test]
    fn hc3_matches_explicit_hat_matrix_oracle() {
        let rows = vec![
            vec![0.0],
            vec![1.0],
            vec![2.0],
            vec![3.0],
            vec![4.0],
            vec![5.0],
        ];
        let y = [1.0, 2.2, 2.8, 4.5, 4.9, 6.5];
        let fit = ols_hc3(&rows, &y).unwrap();

        // Dense oracle built from scratch with explicit matrices.
        let n = 6;
        let d: Vec<[f64; 2]> = rows.iter().map(|r| [1.0, r[0]]).collect();
        let mut dtd = [[0.0f64; 2]; 2];
        for row in &d {
            for a in 0..2 {
                for b in 0..2 {
                    dtd[a][b] += row[a] * row[b];
                }
            }
        }
        let det = dtd[0][0] * dtd[1][1] - dtd[0][1] * dtd[1][0];
        let inv = [
            [dtd[1][1] / det, -dtd[0][1] / det],
            [-dtd[1][0] / det, dtd[0][0] / det],
        ];
        let mut dty = [0.0f64; 2];
        for (row, &yi) in d.iter().zip(&y) {
            dty[0] += row[0] * yi;
            dty[1] += row[1] * yi;
        }
        let beta = [
            inv[0][0] * dty[0] + inv[0][1] * dty[1],
            inv[1][0] * dty[0] + inv[1][1] * dty[1],
        ];
        let mut omega = [0.0f64; 6];
        for i in 0..n {
            let e = y[i] - beta[0] * d[i][0] - beta[1] * d[i][1];
            let h = d[i][0] * (inv[0][0] * d[i][0] + inv[0][1] * d[i][1])
                + d[i][1] * (inv[1][0] * d[i][0] + inv[1][1] * d[i][1]);
            omega[i] = (e / (1.0 - h)).powi(2);
        }
        let mut meat = [[0.0f64; 2]; 2];
        for i in 0..n {
            for a in 0..2 {
                for b in 0..2 {
                    meat[a][b] += omega[i] * d[i][a] * d[i][b];
                }
            }
        }
        // V = inv * meat * inv.
        let mut tmp = [[0.0f64; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                tmp[a][b] = inv[a][0] * meat[0][b] + inv[a][1] * meat[1][b];
            }
        }
        let mut v = [[0.0f64; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                v[a][b] = tmp[a][0] * inv[0][b] + tmp[a][1] * inv[1][b];
            }
        }
        assert_relative_eq!(fit.standard_errors[0], v[0][0].sqrt(), epsilon = 1e-10);
        assert_relative_eq!(fit.standard_errors[1], v[1][1].sqrt(), epsilon = 1e-10);
        assert_relative_eq!(fit.coefficients[0], beta[0], epsilon = 1e-10);
        assert_relative_eq!(fit.coefficients[1], beta[1], epsilon = 1e-10);
    }

    #[test]
    fn intercept_only_model() {
        let rows: Vec<Vec<f64>> = vec![vec![]; 5];
        let y = [1.0, 2.0, 3.0, 4.0, 5.0];
        let fit = ols_hc3(&rows, &y).unwrap();
        assert_relative_eq!(fit.coefficients[0], 3.0);
        assert_relative_eq!(fit.r_squared, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn leverage_one_detected() {
        // A covariate that isolates one observation gives it leverage 1.
        let rows = vec![vec![0.0], vec![0.0], vec![1.0]];
        let y = [1.0, 2.0, 5.0];
        assert!(matches!(
            ols_hc3(&rows, &y),
            Err(StatsError::LeverageOne { .. })
        ));
    }

    #[test]
    fn hc3_rejects_collinear_design() {
        // Third column is exactly the sum of the first two.
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                let a = (i as f64).sin() + 2.0;
                let b = (i as f64 * 1.7).cos() + 3.0;
                vec![a, b, a + b]
            })
            .collect();
        let y: Vec<f64> = (0..8).map(|i| i as f64).collect();
        assert!(matches!(ols_hc3(&rows, &y), Err(StatsError::SingularDesign)));
    }

    #[test]
    fn truncated_svd_r2_handles_rank_deficiency() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                let a = (i as f64).sin() + 2.0;
                let b = (i as f64 * 1.7).cos() + 3.0;
                vec![a, b]
            })
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[0] - r[1] + 0.3).collect();
        let (r2_base, _, rank_base) = least_squares_r2(&rows, &y).unwrap();
        assert_eq!(rank_base, 3);
        assert_relative_eq!(r2_base, 1.0, epsilon = 1e-10);

        // Appending an exact linear combination leaves R-squared unchanged.
        let extended: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| vec![r[0], r[1], r[0] + r[1]])
            .collect();
        let (r2_ext, _, rank_ext) = least_squares_r2(&extended, &y).unwrap();
        assert_eq!(rank_ext, 3);
        assert_relative_eq!(r2_ext, r2_base, epsilon = 1e-10);

        // Against the strict OLS fit on the full-rank design.
        let strict = ols_hc3(&rows, &y).unwrap();
        assert_relative_eq!(strict.r_squared, r2_base, epsilon = 1e-10);
    }

    #[test]
    fn adjusted_below_r_squared() {
        let rows = vec![
            vec![1.0, 0.5],
            vec![2.0, 1.5],
            vec![3.0, 0.2],
            vec![4.0, 2.2],
            vec![5.0, 1.1],
            vec![6.0, 0.8],
        ];
        let y = [1.1, 2.3, 2.8, 4.2, 5.4, 5.9];
        let fit = ols_hc3(&rows, &y).unwrap();
        assert!(fit.adjusted_r_squared <= fit.r_squared);
        assert!(fit.standard_errors.iter().all(|&se| se >= 0.0));
    }
}
