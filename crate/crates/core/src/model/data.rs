use crate::error::{Error, Result};
use crate::linalg::Mat;

/// An `M × N` data matrix with a missing-value mask.
///
/// Column `n` (0-based) is the observation of latent state `x_{n+1}`; the
/// auxiliary initial state `x_0` is never observed. Missing cells hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    values: Mat,
    observed: Vec<bool>,
    by_row: Vec<Vec<usize>>,
    by_col: Vec<Vec<usize>>,
}

impl ObservationSet {
    /// Build from values and a row-major `M × N` mask. Unobserved values are
    /// replaced by NaN so they cannot leak into any statistic.
    pub fn new(mut values: Mat, mask: &[Vec<bool>]) -> Result<Self> {
        let (m, n) = values.shape();
        if mask.len() != m || mask.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(format!("mask must be {m}x{n}")));
        }
        let mut observed = vec![false; m * n];
        for (i, row) in mask.iter().enumerate() {
            for (j, &o) in row.iter().enumerate() {
                if o {
                    if !values[(i, j)].is_finite() {
                        return Err(Error::Parse(format!("observed value at ({i}, {j}) is not finite")));
                    }
                    observed[i * n + j] = true;
                } else {
                    values[(i, j)] = f64::NAN;
                }
            }
        }
        Ok(Self::from_parts(values, observed))
    }

    /// Every finite entry is observed, every NaN is missing.
    pub fn from_values(values: Mat) -> Self {
        let (m, n) = values.shape();
        let observed = (0..m * n).map(|k| values[(k / n, k % n)].is_finite()).collect();
        let mut values = values;
        values.iter_mut().filter(|v| !v.is_finite()).for_each(|v| *v = f64::NAN);
        Self::from_parts(values, observed)
    }

    pub fn from_rows(rows: &[Vec<Option<f64>>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let values = Mat::from_fn(m, n, |i, j| rows[i][j].unwrap_or(f64::NAN));
        let mask: Vec<Vec<bool>> = rows.iter().map(|r| r.iter().map(|v| v.is_some()).collect()).collect();
        Self::new(values, &mask)
    }

    fn from_parts(values: Mat, observed: Vec<bool>) -> Self {
        let (m, n) = values.shape();
        let by_row = (0..m).map(|i| (0..n).filter(|&j| observed[i * n + j]).collect()).collect();
        let by_col = (0..n).map(|j| (0..m).filter(|&i| observed[i * n + j]).collect()).collect();
        Self { values, observed, by_row, by_col }
    }

    /// Number of rows `M`.
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    /// Number of time steps `N`.
    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Mat {
        &self.values
    }

    pub fn is_observed(&self, m: usize, n: usize) -> bool {
        self.observed[m * self.cols() + n]
    }

    pub fn get(&self, m: usize, n: usize) -> Option<f64> {
        self.is_observed(m, n).then(|| self.values[(m, n)])
    }

    /// Observed time indices of row `m` (the set O_m:).
    pub fn observed_in_row(&self, m: usize) -> &[usize] {
        &self.by_row[m]
    }

    /// Observed row indices at time `n` (the set O_:n).
    pub fn observed_in_col(&self, n: usize) -> &[usize] {
        &self.by_col[n]
    }

    pub fn observed_count(&self) -> usize {
        self.by_row.iter().map(Vec::len).sum()
    }

    pub fn mask(&self) -> Vec<Vec<bool>> {
        let n = self.cols();
        (0..self.rows())
            .map(|i| self.observed[i * n..(i + 1) * n].to_vec())
            .collect()
    }

    /// Copy with the given cells additionally hidden.
    pub fn hide(&self, cells: &[(usize, usize)]) -> Self {
        let mut mask = self.mask();
        for &(m, n) in cells {
            mask[m][n] = false;
        }
        Self::new(self.values.clone(), &mask).expect("hiding cells keeps the set valid")
    }
}
