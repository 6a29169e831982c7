//! Borda rank aggregation.

use std::collections::BTreeSet;

use crate::{Error, Result};

/// Positions of `scores` in a ranking, sorted descending (`descending`) or
/// ascending, with ties sharing the position of their first member.
///
/// Items are identified by index; the caller's index order is the tie order,
/// which only matters for where a tie group starts, not who is in it.
pub fn tied_positions(scores: &[f64], descending: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        let c = scores[a].total_cmp(&scores[b]);
        if descending { c.reverse() } else { c }.then(a.cmp(&b))
    });
    let mut positions = vec![0; scores.len()];
    for (p, &i) in order.iter().enumerate() {
        positions[i] = if p > 0 && scores[order[p - 1]] == scores[i] {
            positions[order[p - 1]]
        } else {
            p
        };
    }
    positions
}

/// Total Borda points per item: `m - p` for every ranking, where `p` is the
/// item's 0-based position.
pub fn borda_points(positions: &[Vec<usize>], m: usize) -> Vec<usize> {
    let mut totals = vec![0; m];
    for ranking in positions {
        for (i, &p) in ranking.iter().enumerate() {
            totals[i] += m - p;
        }
    }
    totals
}

/// Index order by descending points; ties keep ascending index.
pub fn order_by_points(points: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[b].cmp(&points[a]).then(a.cmp(&b)));
    order
}

/// Aggregates strict rankings of the same item set. Points are summed per
/// item and the result is ordered by descending total, ties by ascending item.
pub fn borda_aggregate<T: Ord + Clone>(rankings: &[Vec<T>]) -> Result<Vec<T>> {
    let Some(first) = rankings.first() else {
        return Ok(Vec::new());
    };
    let items: BTreeSet<&T> = first.iter().collect();
    if items.len() != first.len() {
        return Err(Error::InvalidArgument("ranking repeats an item".into()));
    }
    for r in rankings {
        if r.len() != items.len() || r.iter().collect::<BTreeSet<_>>() != items {
            return Err(Error::InvalidArgument(
                "rankings cover different item sets".into(),
            ));
        }
    }
    let items: Vec<&T> = items.into_iter().collect();
    let m = items.len();
    let positions: Vec<Vec<usize>> = rankings
        .iter()
        .map(|r| {
            let mut pos = vec![0; m];
            for (p, item) in r.iter().enumerate() {
                pos[items.binary_search(&item).expect("same item set")] = p;
            }
            pos
        })
        .collect();
    let points = borda_points(&positions, m);
    Ok(order_by_points(&points)
        .into_iter()
        .map(|i| items[i].clone())
        .collect())
}
