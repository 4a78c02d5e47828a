//! Deterministic 2D projection: mean-centered principal components.

use nalgebra::{DMatrix, SymmetricEigen};

use super::DiagnoseError;

/// Projects points onto their top-2 principal components after mean
/// centering. The sign of each output column is fixed so its
/// largest-magnitude coordinate is positive. Deterministic.
pub fn project_2d(data: &[Vec<f64>]) -> Result<Vec<(f64, f64)>, DiagnoseError> {
    let n = data.len();
    if n < 2 {
        return Err(DiagnoseError::TooFewPoints { n, required: 2 });
    }
    let dim = data[0].len();
    if dim < 2 {
        return Err(DiagnoseError::DimensionTooSmall(dim));
    }

    let mut mean = vec![0.0f64; dim];
    for point in data {
        for (m, &x) in mean.iter_mut().zip(point) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, dim, |i, j| data[i][j] - mean[j]);

    let total_variance: f64 = centered.iter().map(|x| x * x).sum();
    if total_variance < 1e-20 {
        return Err(DiagnoseError::RankZero);
    }

    // Eigen decomposition of the smaller Gram form: d x d when d <= n,
    // otherwise n x n with eigenvectors mapped back through the data.
    let components: Vec<Vec<f64>> = if dim <= n {
        let cov = centered.transpose() * &centered;
        top_two_eigenvectors(cov)
    } else {
        let gram = &centered * centered.transpose();
        let dual = top_two_eigenvectors(gram);
        dual.into_iter()
            .map(|u| {
                let u = DMatrix::from_column_slice(n, 1, &u);
                let v = centered.transpose() * u;
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    v.iter().map(|x| x / norm).collect()
                } else {
                    v.iter().copied().collect()
                }
            })
            .collect()
    };

    let mut coords: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x: f64 = (0..dim).map(|j| centered[(i, j)] * components[0][j]).sum();
            let y: f64 = (0..dim).map(|j| centered[(i, j)] * components[1][j]).sum();
            (x, y)
        })
        .collect();

    // Fix each column's sign by its largest-magnitude coordinate.
    for axis in 0..2 {
        let pick = |c: &(f64, f64)| if axis == 0 { c.0 } else { c.1 };
        let mut extreme = 0.0f64;
        for c in &coords {
            if pick(c).abs() > extreme.abs() {
                extreme = pick(c);
            }
        }
        if extreme < 0.0 {
            for c in coords.iter_mut() {
                if axis == 0 {
                    c.0 = -c.0;
                } else {
                    c.1 = -c.1;
                }
            }
        }
    }
    Ok(coords)
}

/// Top-2 eigenvectors of a symmetric PSD matrix, by descending eigenvalue;
/// equal eigenvalues break ties by original column order.
fn top_two_eigenvectors(matrix: DMatrix<f64>) -> Vec<Vec<f64>> {
    let size = matrix.nrows();
    let eigen = SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
        .into_iter()
        .take(2)
        .map(|col| eigen.eigenvectors.column(col).iter().copied().collect())
        .collect()
}
