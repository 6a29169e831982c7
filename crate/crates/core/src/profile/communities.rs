//! k-means grouping of users for the overview.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::linalg::{normalize, Matrix};
use crate::vectorize::UserMatrix;
use crate::{Error, Result};

const MAX_ITERATIONS: usize = 100;
const SHIFT_TOLERANCE: f64 = 1e-6;
const FALLBACK_COMMUNITIES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityAssignment {
    pub k: usize,
    pub user_ids: Vec<String>,
    /// Community index of each user, aligned with `user_ids`.
    pub assignment: Vec<usize>,
    pub centroids: Matrix,
    /// Within-cluster sum of squares after every assignment step.
    pub objective_history: Vec<f64>,
}

impl CommunityAssignment {
    pub fn members(&self, community: usize) -> Vec<&str> {
        self.assignment
            .iter()
            .zip(&self.user_ids)
            .filter(|(c, _)| **c == community)
            .map(|(_, u)| u.as_str())
            .collect()
    }

    pub fn community_of(&self, user_id: &str) -> Option<usize> {
        self.user_ids
            .iter()
            .position(|u| u == user_id)
            .map(|i| self.assignment[i])
    }
}

/// Number of distinct categories, or 10 without metadata; never more than
/// the number of users.
pub fn default_community_count(corpus: &Corpus) -> usize {
    let k = match corpus.categories().len() {
        0 => FALLBACK_COMMUNITIES,
        n => n,
    };
    k.min(corpus.n_users()).max(1)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid (lowest index on ties) and its squared distance.
fn nearest(point: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.rows().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn seed_centroids(points: &Matrix, k: usize, rng: &mut impl Rng) -> Matrix {
    let n = points.n_rows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points
        .rows()
        .map(|p| sq_dist(p, points.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(rng),
            // every point coincides with a centroid: take any unused row
            Err(_) => (0..n).find(|i| !chosen.contains(i)).expect("k <= n"),
        };
        chosen.push(next);
        for (i, p) in points.rows().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, points.row(next)));
        }
    }
    Matrix::from_rows(
        &chosen
            .iter()
            .map(|&i| points.row(i).to_vec())
            .collect::<Vec<_>>(),
    )
}

/// Gives every empty community the point farthest from its centroid among
/// communities with at least two members. Only duplicated points can leave a
/// community empty after the final assignment.
fn fill_empty(points: &Matrix, centroids: &mut Matrix, assignment: &mut [usize]) {
    let k = centroids.n_rows();
    let mut counts = vec![0usize; k];
    assignment.iter().for_each(|&c| counts[c] += 1);
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let donor = (0..assignment.len())
            .filter(|&i| counts[assignment[i]] > 1)
            .max_by(|&a, &b| {
                let da = sq_dist(points.row(a), centroids.row(assignment[a]));
                let db = sq_dist(points.row(b), centroids.row(assignment[b]));
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("k <= n leaves a community with two members");
        counts[assignment[donor]] -= 1;
        counts[c] = 1;
        assignment[donor] = c;
        centroids.row_mut(c).copy_from_slice(points.row(donor));
    }
}

/// k-means on L2-normalised user vectors with k-means++ seeding.
///
/// Stops after 100 iterations or when no centroid moves more than 1e-6. A
/// community left empty is reseeded with the point farthest from its current
/// centroid, so all `k` communities are non-empty.
pub fn detect_communities(
    users: &UserMatrix,
    k: usize,
    rng_seed: u64,
) -> Result<CommunityAssignment> {
    let n = users.n_users();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "k must lie in 1..={n}, got {k}"
        )));
    }
    let mut points = users.vectors().clone();
    for i in 0..n {
        normalize(points.row_mut(i));
    }
    let dim = points.n_cols();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut centroids = seed_centroids(&points, k, &mut rng);
    let mut assignment = vec![0; n];
    let mut history = Vec::new();

    let assign = |centroids: &Matrix, assignment: &mut Vec<usize>| -> f64 {
        let mut objective = 0.0;
        for (i, p) in points.rows().enumerate() {
            let (c, d) = nearest(p, centroids);
            assignment[i] = c;
            objective += d;
        }
        objective
    };

    for _ in 0..MAX_ITERATIONS {
        history.push(assign(&centroids, &mut assignment));
        let mut sums = Matrix::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for (i, &c) in assignment.iter().enumerate() {
            counts[c] += 1;
            sums.row_mut(c)
                .iter_mut()
                .zip(points.row(i))
                .for_each(|(s, x)| *s += x);
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            let new: Vec<f64> = if counts[c] > 0 {
                sums.row(c).iter().map(|s| s / counts[c] as f64).collect()
            } else {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(points.row(a), centroids.row(assignment[a]));
                        let db = sq_dist(points.row(b), centroids.row(assignment[b]));
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .expect("n >= 1");
                assignment[far] = c;
                points.row(far).to_vec()
            };
            shift = shift.max(sq_dist(&new, centroids.row(c)).sqrt());
            centroids.row_mut(c).copy_from_slice(&new);
        }
        if shift < SHIFT_TOLERANCE {
            break;
        }
    }
    history.push(assign(&centroids, &mut assignment));
    fill_empty(&points, &mut centroids, &mut assignment);

    Ok(CommunityAssignment {
        k,
        user_ids: users.user_ids().to_vec(),
        assignment,
        centroids,
        objective_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorize::Provenance;

    fn matrix(rows: Vec<Vec<f64>>) -> UserMatrix {
        let ids = (0..rows.len()).map(|i| format!("u{i}")).collect();
        UserMatrix::new(ids, Matrix::from_rows(&rows), Provenance::TfidfFusedPca).unwrap()
    }

    fn two_clouds() -> UserMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rows = Vec::new();
        for i in 0..40 {
            let base = if i < 20 {
                [1.0, 0.0, 0.0]
            } else {
                [0.0, 0.0, 1.0]
            };
            rows.push(
                base.iter()
                    .map(|b| b + rng.random_range(-0.1..0.1))
                    .collect(),
            );
        }
        matrix(rows)
    }

    #[test]
    fn single_community_is_the_mean() {
        let m = matrix(vec![vec![2.0, 0.0], vec![0.0, 3.0]]);
        let a = detect_communities(&m, 1, 0).unwrap();
        assert_eq!(a.assignment, [0, 0]);
        assert!((a.centroids.get(0, 0) - 0.5).abs() < 1e-12);
        assert!((a.centroids.get(0, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn separates_two_clouds() {
        let a = detect_communities(&two_clouds(), 2, 9).unwrap();
        let first = a.assignment[0];
        assert!(a.assignment[..20].iter().all(|&c| c == first));
        assert!(a.assignment[20..].iter().all(|&c| c != first));
    }

    #[test]
    fn objective_never_increases() {
        for seed in 0..5 {
            let a = detect_communities(&two_clouds(), 4, seed).unwrap();
            for w in a.objective_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{:?}", a.objective_history);
            }
            assert!((0..4).all(|c| !a.members(c).is_empty()));
        }
    }

    #[test]
    fn deterministic_and_bounded() {
        let m = two_clouds();
        assert_eq!(
            detect_communities(&m, 3, 1).unwrap(),
            detect_communities(&m, 3, 1).unwrap()
        );
        assert!(detect_communities(&m, 41, 1).is_err());
        assert!(detect_communities(&m, 0, 1).is_err());
    }

    #[test]
    fn duplicate_points_still_fill_every_community() {
        let m = matrix(vec![vec![1.0, 0.0]; 4]);
        let a = detect_communities(&m, 3, 2).unwrap();
        assert!((0..3).all(|c| !a.members(c).is_empty()));
    }
}
