//! Principal component projection via a cyclic Jacobi eigensolver on the
//! population covariance matrix.

use serde::{Deserialize, Serialize};

use super::DataError;

/// PCA scores, one row per SKU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    pub rows: usize,
    pub dims: usize,
    /// Row-major, `rows * dims`.
    pub values: Vec<f64>,
    /// Eigenvalues of the retained components, non-increasing.
    pub explained_variance: Vec<f64>,
    /// Retained eigenvectors, one per component (length = input feature count).
    pub components: Vec<Vec<f64>>,
}

impl EmbeddingMatrix {
    /// Wraps raw rows without any projection (used when PCA is bypassed).
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let dims = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let values = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        EmbeddingMatrix {
            rows: rows.len(),
            dims,
            values,
            explained_variance: Vec::new(),
            components: Vec::new(),
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.values[i * self.dims + k]).collect()
    }

    /// CSV with one row per SKU and 17 significant digits per value.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut s = String::new();
        for c in comments {
            s.push_str("# ");
            s.push_str(c);
            s.push('\n');
        }
        let header: Vec<String> = (0..self.dims).map(|k| format!("pc{k}")).collect();
        s.push_str(&header.join(","));
        s.push('\n');
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Projects centered rows onto the top `dims` covariance eigenvectors.
///
/// Eigenpairs are sorted by descending eigenvalue; each eigenvector is signed
/// so that its largest-magnitude entry is positive.
pub fn pca_reduce<R: AsRef<[f64]>>(rows: &[R], dims: usize) -> Result<EmbeddingMatrix, DataError> {
    let n = rows.len();
    if n == 0 {
        return Err(DataError::Empty);
    }
    let p = rows[0].as_ref().len();
    if rows.iter().any(|r| r.as_ref().len() != p) {
        return Err(DataError::Argument("ragged feature matrix".into()));
    }
    if dims > p {
        return Err(DataError::Argument(format!(
            "requested {dims} components from {p} features"
        )));
    }
    if n < dims {
        return Err(DataError::Argument(format!(
            "need at least {dims} rows for {dims} components, got {n}"
        )));
    }

    let mut mean = vec![0.0; p];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r.as_ref()) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.as_ref().iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();

    let mut cov = vec![vec![0.0; p]; p];
    for r in &centered {
        for a in 0..p {
            for b in a..p {
                cov[a][b] += r[a] * r[b];
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            cov[a][b] /= n as f64;
            cov[b][a] = cov[a][b];
        }
    }

    let (eigvals, eigvecs) = symmetric_eigen(&cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eigvals[b].total_cmp(&eigvals[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(dims);
    let mut explained = Vec::with_capacity(dims);
    for &k in order.iter().take(dims) {
        let mut v: Vec<f64> = (0..p).map(|r| eigvecs[r][k]).collect();
        let lead = v
            .iter()
            .enumerate()
            .fold(0usize, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        explained.push(eigvals[k].max(0.0));
    }

    let mut values = Vec::with_capacity(n * dims);
    for r in &centered {
        for v in &components {
            values.push(r.iter().zip(v).map(|(a, b)| a * b).sum());
        }
    }
    Ok(EmbeddingMatrix {
        rows: n,
        dims,
        values,
        explained_variance: explained,
        components,
    })
}

/// Cyclic Jacobi rotations. Returns (eigenvalues, eigenvector matrix with
/// eigenvectors in columns).
pub fn symmetric_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return (vec![0.0; n], v);
    }

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}
