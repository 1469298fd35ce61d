//! Ordinary least squares with an intercept, solved by a thin QR
//! factorization (modified Gram-Schmidt with one re-orthogonalization pass).

use super::ProxyError;

/// Columns with a residual norm below this fraction of their original norm
/// are treated as linear combinations of the earlier columns.
const COLLINEAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    /// Intercept first, then one coefficient per feature column.
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub r_squared: f64,
    pub residual_std: f64,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Fits `y = b0 + sum_j b_j x_j`. `names` labels the feature columns in
/// error messages.
pub fn ols(features: &[Vec<f64>], targets: &[f64], names: &[&str]) -> Result<OlsFit, ProxyError> {
    let n = targets.len();
    let p = names.len() + 1;
    if features.len() != n {
        return Err(ProxyError::Regression(format!(
            "{} feature rows for {} targets",
            features.len(),
            n
        )));
    }
    if n <= p {
        return Err(ProxyError::Regression(format!(
            "need more than {p} rows, got {n}"
        )));
    }
    if let Some(row) = features.iter().position(|r| r.len() != p - 1) {
        return Err(ProxyError::Regression(format!("row {row} has the wrong width")));
    }
    if features.iter().flatten().chain(targets).any(|v| !v.is_finite()) {
        return Err(ProxyError::Regression("non-finite input".into()));
    }

    let label = |j: usize| if j == 0 { "intercept" } else { names[j - 1] };

    // column-major design matrix
    let mut q: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            if j == 0 {
                vec![1.0; n]
            } else {
                features.iter().map(|r| r[j - 1]).collect()
            }
        })
        .collect();
    let mut r = vec![vec![0.0; p]; p];
    for j in 0..p {
        let original = norm(&q[j]);
        for _pass in 0..2 {
            for i in 0..j {
                let proj = dot(&q[i], &q[j]);
                r[i][j] += proj;
                let (head, tail) = q.split_at_mut(j);
                for (a, b) in tail[0].iter_mut().zip(&head[i]) {
                    *a -= proj * b;
                }
            }
        }
        let rest = norm(&q[j]);
        if original == 0.0 || rest <= COLLINEAR_TOL * original {
            let with: Vec<&str> = (0..j).filter(|&i| r[i][j].abs() > 0.0).map(label).collect();
            return Err(ProxyError::RankDeficient {
                column: label(j).to_string(),
                collinear_with: with.into_iter().map(String::from).collect(),
            });
        }
        r[j][j] = rest;
        q[j].iter_mut().for_each(|v| *v /= rest);
    }

    // R b = Q^T y
    let qty: Vec<f64> = q.iter().map(|col| dot(col, targets)).collect();
    let coefficients = back_substitute(&r, &qty);

    let fitted: Vec<f64> = (0..n)
        .map(|i| {
            coefficients[0]
                + features[i]
                    .iter()
                    .zip(&coefficients[1..])
                    .map(|(x, b)| x * b)
                    .sum::<f64>()
        })
        .collect();
    let residuals: Vec<f64> = targets.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let ss_res: f64 = residuals.iter().map(|e| e * e).sum();
    let mean = targets.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = targets.iter().map(|y| (y - mean).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).max(0.0) } else { 0.0 };
    let sigma2 = ss_res / (n - p) as f64;

    // (X^T X)^-1 = R^-1 R^-T; diagonal = squared row norms of R^-1
    let r_inv: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            back_substitute(&r, &e)
        })
        .collect(); // r_inv[j] is column j of R^-1
    let std_errors = (0..p)
        .map(|i| (sigma2 * r_inv.iter().map(|col| col[i] * col[i]).sum::<f64>()).sqrt())
        .collect();

    Ok(OlsFit {
        coefficients,
        std_errors,
        r_squared,
        residual_std: sigma2.sqrt(),
        fitted,
        residuals,
    })
}

fn back_substitute(r: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let p = b.len();
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = ((i + 1)..p).map(|k| r[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / r[i][i];
    }
    x
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
