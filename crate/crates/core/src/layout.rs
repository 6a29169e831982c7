//! 2D coordinates for the overview map.

use crate::vectorize::{pca_fit, UserMatrix};
use crate::{Error, Result};

/// Projects users onto their first two principal components and rescales
/// each axis to `[0, 1]`. An axis without spread maps to 0.5.
pub fn layout_2d(users: &UserMatrix) -> Result<Vec<[f64; 2]>> {
    if users.n_users() < 2 {
        return Err(Error::InvalidArgument(
            "layout needs at least 2 users".into(),
        ));
    }
    let model = pca_fit(users.vectors(), 2)?;
    let projected = model.transform(users.vectors());
    let mut coords = vec![[0.0; 2]; users.n_users()];
    for axis in 0..projected.n_cols() {
        let values: Vec<f64> = (0..users.n_users())
            .map(|i| projected.get(i, axis))
            .collect();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (c, v) in coords.iter_mut().zip(values) {
            c[axis] = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        }
    }
    for c in coords.iter_mut() {
        c.iter_mut().skip(projected.n_cols()).for_each(|v| *v = 0.5);
    }
    Ok(coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::vectorize::Provenance;

    fn users(rows: Vec<Vec<f64>>) -> UserMatrix {
        let ids = (0..rows.len()).map(|i| format!("u{i}")).collect();
        UserMatrix::new(ids, Matrix::from_rows(&rows), Provenance::TfidfFusedPca).unwrap()
    }

    #[test]
    fn collinear_points_have_flat_second_axis() {
        let m = users(
            (0..6)
                .map(|i| vec![i as f64, 2.0 * i as f64, -(i as f64)])
                .collect(),
        );
        let c = layout_2d(&m).unwrap();
        assert!(c.iter().all(|p| p[1] == 0.5));
        assert_eq!(c.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min), 0.0);
        assert_eq!(c.iter().map(|p| p[0]).fold(0.0, f64::max), 1.0);
    }

    #[test]
    fn unit_square_and_errors() {
        let m = users(vec![
            vec![1.0, 2.0, 0.5],
            vec![0.0, -1.0, 3.0],
            vec![4.0, 0.0, 0.0],
            vec![2.0, 2.0, 2.0],
        ]);
        let c = layout_2d(&m).unwrap();
        assert!(c.iter().flatten().all(|x| (0.0..=1.0).contains(x)));
        assert_eq!(c, layout_2d(&m).unwrap());
        assert!(layout_2d(&users(vec![vec![1.0, 2.0]])).is_err());
        let same = layout_2d(&users(vec![vec![1.0, 1.0]; 3])).unwrap();
        assert!(same.iter().flatten().all(|x| *x == 0.5));
    }

    #[test]
    fn separated_groups_stay_apart() {
        let mut rows = Vec::new();
        for i in 0..10 {
            let j = i as f64 * 0.01;
            rows.push(vec![1.0 + j, 0.0, j, 0.0]);
            rows.push(vec![0.0, j, 0.0, 1.0 - j]);
        }
        let c = layout_2d(&users(rows)).unwrap();
        let d = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let (mut intra, mut inter, mut ni, mut nx) = (0.0, 0.0, 0, 0);
        for a in 0..20 {
            for b in a + 1..20 {
                if a % 2 == b % 2 {
                    intra += d(c[a], c[b]);
                    ni += 1;
                } else {
                    inter += d(c[a], c[b]);
                    nx += 1;
                }
            }
        }
        assert!(intra / (ni as f64) < inter / (nx as f64));
    }
}
