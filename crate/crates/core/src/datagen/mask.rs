use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaps of consecutive all-missing time steps plus randomly removed cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskPlan {
    pub gap_count: usize,
    pub gap_length: usize,
    /// Fraction of the observed cells outside the gaps moved to the random
    /// test set.
    pub random_missing_fraction: f64,
    pub seed: u64,
}

impl Default for MaskPlan {
    fn default() -> Self {
        Self { gap_count: 7, gap_length: 15, random_missing_fraction: 0.2, seed: 0 }
    }
}

/// Partition of the observed cells into training and test sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSplit {
    /// Row-major `M × N` training mask.
    pub train: Vec<Vec<bool>>,
    /// First column of each gap, ascending.
    pub gap_starts: Vec<usize>,
    pub gap_length: usize,
    /// Observed cells `(m, n)` inside the gaps.
    pub gap_test: Vec<(usize, usize)>,
    /// Observed cells `(m, n)` removed at random outside the gaps.
    pub random_test: Vec<(usize, usize)>,
}

impl MaskSplit {
    pub fn gap_columns(&self) -> Vec<usize> {
        self.gap_starts
            .iter()
            .flat_map(|&s| s..s + self.gap_length)
            .collect()
    }
}

/// Split a fully observed `M × N` grid.
pub fn make_mask_plan(plan: &MaskPlan, m: usize, n: usize) -> Result<MaskSplit> {
    split_observed(plan, &vec![vec![true; n]; m])
}

/// Split the observed cells of `universe` (row-major mask). Gaps never touch
/// the first or last column and are separated by at least one column.
pub fn split_observed(plan: &MaskPlan, universe: &[Vec<bool>]) -> Result<MaskSplit> {
    let m = universe.len();
    let n = universe.first().map_or(0, Vec::len);
    if !(0.0..=1.0).contains(&plan.random_missing_fraction) {
        return Err(Error::InfeasibleMask("random missing fraction must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);

    let g = plan.gap_count;
    let len = plan.gap_length;
    let mut gap_starts = Vec::with_capacity(g);
    if g > 0 {
        if len == 0 {
            return Err(Error::InfeasibleMask("gap length must be positive".into()));
        }
        // g gaps plus g+1 separating columns must fit
        let needed = g * len + g + 1;
        if needed > n {
            return Err(Error::InfeasibleMask(format!(
                "{g} gaps of length {len} need at least {needed} time steps, have {n}"
            )));
        }
        let free = n - needed;
        // uniform composition of `free` spare columns into g+1 slots
        let mut picks = sample(&mut rng, free + g, g).into_vec();
        picks.sort_unstable();
        for (i, p) in picks.into_iter().enumerate() {
            let spare_before = p - i;
            gap_starts.push(1 + spare_before + i * (len + 1));
        }
    }
    let mut in_gap = vec![false; n];
    for &s in &gap_starts {
        in_gap[s..s + len].iter_mut().for_each(|v| *v = true);
    }

    let mut train = universe.to_vec();
    let mut gap_test = Vec::new();
    let mut remaining = Vec::new();
    for (i, row) in universe.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            if !obs {
                continue;
            }
            if in_gap[j] {
                gap_test.push((i, j));
                train[i][j] = false;
            } else {
                remaining.push((i, j));
            }
        }
    }
    let take = (plan.random_missing_fraction * remaining.len() as f64).round() as usize;
    let mut chosen = sample(&mut rng, remaining.len(), take).into_vec();
    chosen.sort_unstable();
    let random_test: Vec<(usize, usize)> = chosen.into_iter().map(|k| remaining[k]).collect();
    for &(i, j) in &random_test {
        train[i][j] = false;
    }
    debug_assert_eq!(train.len(), m);
    Ok(MaskSplit { train, gap_starts, gap_length: len, gap_test, random_test })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_plan_keeps_everything() {
        let plan = MaskPlan { gap_count: 0, random_missing_fraction: 0.0, ..Default::default() };
        let s = make_mask_plan(&plan, 3, 20).unwrap();
        assert!(s.train.iter().flatten().all(|&v| v));
        assert!(s.gap_test.is_empty() && s.random_test.is_empty());
    }

    #[test]
    fn seven_gaps_remove_105_columns() {
        let plan = MaskPlan { seed: 3, ..Default::default() };
        let s = make_mask_plan(&plan, 1, 1000).unwrap();
        let empty = (0..1000).filter(|&j| !s.train[0][j] && s.gap_columns().contains(&j)).count();
        assert_eq!(empty, 105);
        assert_eq!(s.gap_test.len(), 105);
        assert_eq!(s.random_test.len(), (0.2 * 895.0f64).round() as usize);
    }

    #[test]
    fn gaps_do_not_touch() {
        for seed in 0..50 {
            let plan = MaskPlan { gap_count: 5, gap_length: 4, random_missing_fraction: 0.0, seed };
            let s = make_mask_plan(&plan, 2, 30).unwrap();
            assert!(s.gap_starts[0] >= 1);
            for w in s.gap_starts.windows(2) {
                assert!(w[1] >= w[0] + 5);
            }
            assert!(s.gap_starts.last().unwrap() + 4 <= 29);
        }
    }

    #[test]
    fn infeasible_plan_is_reported() {
        let plan = MaskPlan { gap_count: 3, gap_length: 10, ..Default::default() };
        assert!(matches!(make_mask_plan(&plan, 1, 33), Err(Error::InfeasibleMask(_))));
        assert!(make_mask_plan(&plan, 1, 34).is_ok());
    }
}
