//! Dense least squares by Householder QR.
//!
//! Columns are reduced in order without pivoting, so a rank failure names the
//! first column that is (numerically) a combination of the ones before it.

use crate::error::{Error, Result};

/// Relative size below which a reduced column counts as collinear.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl LeastSquares {
    pub fn sse(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum()
    }
}

/// Minimizes `|y - X β|²` where `columns[j]` is column `j` of `X`.
pub fn solve(columns: &[Vec<f64>], names: &[&'static str], y: &[f64]) -> Result<LeastSquares> {
    let p = columns.len();
    let m = y.len();
    assert_eq!(names.len(), p, "one name per column");
    assert!(columns.iter().all(|c| c.len() == m), "ragged design matrix");
    if m < p {
        return Err(Error::InsufficientData(format!("{m} observations for {p} coefficients")));
    }

    let mut a: Vec<Vec<f64>> = columns.to_vec();
    let mut qty = y.to_vec();
    let mut diag = vec![0.0; p];
    for j in 0..p {
        let original = columns[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm = a[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if original == 0.0 || norm <= RANK_TOL * original {
            return Err(Error::RankDeficient { regressor: names[j] });
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |col: &mut [f64]| {
            let dot: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            let k = 2.0 * dot / vnorm2;
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= k * vi;
            }
        };
        for col in a.iter_mut().skip(j + 1) {
            reflect(&mut col[j..]);
        }
        reflect(&mut qty[j..]);
        diag[j] = alpha;
    }

    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = qty[i];
        for k in i + 1..p {
            s -= a[k][i] * beta[k];
        }
        beta[i] = s / diag[i];
    }
    let residuals = (0..m)
        .map(|i| y[i] - (0..p).map(|j| columns[j][i] * beta[j]).sum::<f64>())
        .collect();
    Ok(LeastSquares { coefficients: beta, residuals })
}
