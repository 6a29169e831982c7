use nalgebra::{DMatrix, SymmetricEigen};

use crate::linalg::{dot, Matrix};
use crate::{Error, Result};

/// Eigenvalues below this fraction of the largest are treated as zero.
const RANK_TOLERANCE: f64 = 1e-10;

/// Fitted principal components.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k × n_features`, orthonormal rows, ordered by decreasing variance.
    pub components: Matrix,
    /// Variance of each component divided by the total variance.
    pub explained_variance_ratio: Vec<f64>,
    /// Number of components that was asked for. Larger than
    /// `components.n_rows()` when the centred data had lower rank.
    pub requested: usize,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.n_rows()
    }

    /// Rank shortfall with respect to the requested dimensionality.
    pub fn shortfall(&self) -> usize {
        self.requested - self.n_components()
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = row.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        self.components.rows().map(|c| dot(c, &centered)).collect()
    }

    pub fn transform(&self, data: &Matrix) -> Matrix {
        let k = self.n_components();
        let mut out = Matrix::zeros(data.n_rows(), k);
        for i in 0..data.n_rows() {
            out.row_mut(i)
                .copy_from_slice(&self.transform_row(data.row(i)));
        }
        out
    }
}

/// Fits the top-`k` principal components by exact eigendecomposition.
///
/// With more features than rows the decomposition runs on the `n × n` Gram
/// matrix of the centred data instead of the `p × p` covariance; both give the
/// same components. Each component is oriented so that its largest-magnitude
/// entry is positive.
pub fn pca_fit(data: &Matrix, k: usize) -> Result<PcaModel> {
    if k < 1 {
        return Err(Error::InvalidArgument("PCA needs k >= 1".into()));
    }
    let (n, p) = (data.n_rows(), data.n_cols());
    if n < 2 {
        return Err(Error::InvalidArgument("PCA needs at least 2 rows".into()));
    }

    let mut mean = vec![0.0; p];
    for row in data.rows() {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, p, |i, j| data.get(i, j) - mean[j]);
    let scale = 1.0 / (n as f64 - 1.0);

    let (mut eigenvalues, mut vectors): (Vec<f64>, Vec<Vec<f64>>) = if p <= n {
        let cov = centered.transpose() * &centered * scale;
        let eig = SymmetricEigen::new(cov);
        let order = descending(eig.eigenvalues.as_slice());
        order
            .into_iter()
            .map(|i| {
                (
                    eig.eigenvalues[i],
                    eig.eigenvectors.column(i).iter().copied().collect(),
                )
            })
            .unzip()
    } else {
        let gram = &centered * centered.transpose() * scale;
        let eig = SymmetricEigen::new(gram);
        let order = descending(eig.eigenvalues.as_slice());
        order
            .into_iter()
            .map(|i| {
                let lambda = eig.eigenvalues[i];
                let u = eig.eigenvectors.column(i);
                let v = centered.transpose() * u;
                (lambda, v.iter().copied().collect())
            })
            .unzip()
    };

    let total: f64 = eigenvalues.iter().map(|l| l.max(0.0)).sum();
    let top = eigenvalues.first().copied().unwrap_or(0.0);
    let rank = eigenvalues
        .iter()
        .take_while(|&&l| top > 0.0 && l > top * RANK_TOLERANCE)
        .count();
    let keep = k.min(rank);
    eigenvalues.truncate(keep);
    vectors.truncate(keep);

    orthonormalize(&mut vectors);
    for v in &mut vectors {
        let pivot = v.iter().copied().fold(
            0.0f64,
            |best, x| if x.abs() > best.abs() { x } else { best },
        );
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }

    Ok(PcaModel {
        mean,
        components: Matrix::from_vec(keep, p, vectors.into_iter().flatten().collect()),
        explained_variance_ratio: eigenvalues.iter().map(|l| l / total).collect(),
        requested: k,
    })
}

fn descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Modified Gram-Schmidt in place.
fn orthonormalize(vectors: &mut [Vec<f64>]) {
    for i in 0..vectors.len() {
        let (done, rest) = vectors.split_at_mut(i);
        let v = &mut rest[0];
        for q in done.iter() {
            let proj = dot(q, v);
            v.iter_mut().zip(q).for_each(|(x, qi)| *x -= proj * qi);
        }
        let n = dot(v, v).sqrt();
        v.iter_mut().for_each(|x| *x /= n);
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random(n: usize, p: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_vec(
            n,
            p,
            (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
    }

    fn assert_orthonormal(m: &PcaModel) {
        for i in 0..m.n_components() {
            for j in 0..m.n_components() {
                let d = dot(m.components.row(i), m.components.row(j));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-8, "{i},{j}: {d}");
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let m = random(5, 3, 1);
        assert!(pca_fit(&m, 0).is_err());
        assert!(pca_fit(&random(1, 3, 1), 1).is_err());
    }

    #[test]
    fn exact_rank_subspace_reconstructs() {
        // 30 points in a 3-dim affine subspace of R^8
        let basis = random(3, 8, 2);
        let coeffs = random(30, 3, 3);
        let offset: Vec<f64> = (0..8).map(|j| j as f64).collect();
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                (0..8)
                    .map(|j| {
                        offset[j]
                            + (0..3)
                                .map(|b| coeffs.get(i, b) * basis.get(b, j))
                                .sum::<f64>()
                    })
                    .collect()
            })
            .collect();
        let data = Matrix::from_rows(&rows);
        let model = pca_fit(&data, 5).unwrap();
        assert_eq!(model.n_components(), 3);
        assert_eq!(model.shortfall(), 2);
        let z = model.transform(&data);
        let mut err = 0.0;
        let mut total = 0.0;
        for (i, row) in rows.iter().enumerate() {
            for j in 0..8 {
                let rec = model.mean[j]
                    + (0..3)
                        .map(|c| z.get(i, c) * model.components.get(c, j))
                        .sum::<f64>();
                err += (rec - row[j]).powi(2);
                total += (row[j] - model.mean[j]).powi(2);
            }
        }
        assert!((err / total).sqrt() <= 1e-6);
    }

    #[test]
    fn points_on_a_line() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![i as f64, 2.0 * i as f64 + 1.0, -(i as f64)])
            .collect();
        let model = pca_fit(&Matrix::from_rows(&rows), 1).unwrap();
        assert!(model.explained_variance_ratio[0] >= 0.999);
    }

    #[test]
    fn gram_and_covariance_routes_agree() {
        // wide data goes through the Gram route; a padded tall copy through the covariance
        let wide = random(6, 15, 4);
        let model = pca_fit(&wide, 4).unwrap();
        assert_orthonormal(&model);
        let cov = {
            let mut m = DMatrix::zeros(15, 15);
            let mean = &model.mean;
            for r in wide.rows() {
                let c = DMatrix::from_fn(15, 1, |j, _| r[j] - mean[j]);
                m += &c * c.transpose();
            }
            m / 5.0
        };
        for c in 0..4 {
            let v = DMatrix::from_row_slice(15, 1, model.components.row(c));
            let av = &cov * &v;
            let lambda = (v.transpose() * &av)[(0, 0)];
            assert!((av - v * lambda).norm() < 1e-9);
        }
        let centered_proj = model.transform(&wide);
        let col_mean: f64 = (0..6).map(|i| centered_proj.get(i, 0)).sum::<f64>() / 6.0;
        assert!(col_mean.abs() < 1e-8);
    }

    #[test]
    fn sign_convention() {
        let model = pca_fit(&random(20, 10, 5), 10).unwrap();
        assert_orthonormal(&model);
        for c in model.components.rows() {
            let pivot = c
                .iter()
                .copied()
                .fold(0.0f64, |b, x| if x.abs() > b.abs() { x } else { b });
            assert!(pivot > 0.0);
        }
    }

    #[test]
    fn transformed_training_data_is_centred() {
        let data = random(25, 7, 6);
        let model = pca_fit(&data, 7).unwrap();
        let z = model.transform(&data);
        for c in 0..z.n_cols() {
            let m: f64 = (0..z.n_rows()).map(|i| z.get(i, c)).sum::<f64>() / z.n_rows() as f64;
            assert!(m.abs() < 1e-8);
        }
    }
}
