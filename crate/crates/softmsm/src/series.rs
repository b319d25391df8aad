//! Core domain types: time series, series collections, alignment paths and
//! the shared soft-operator parameters.

use crate::error::{Error, Result};

/// An ordered sequence of real observations.
///
/// Invariants: at least one observation, all values finite.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("time series"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("time series"));
        }
        Ok(Self { values })
    }

    /// A constant series of length `m`.
    pub fn constant(value: f64, m: usize) -> Result<Self> {
        Self::new(vec![value; m])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: m >= 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for TimeSeries {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Softmin temperature, split/merge penalty and gate stabiliser shared by
/// every soft operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftParams {
    /// Softmin temperature, > 0.
    pub gamma: f64,
    /// Split/merge penalty, > 0.
    pub cost_c: f64,
    /// Gate stabiliser, > 0. Fixed at 1e-12 unless overridden.
    pub epsilon: f64,
}

impl SoftParams {
    pub const DEFAULT_EPSILON: f64 = 1e-12;

    /// Re-checks the positivity invariants; guards entry points against
    /// hand-built parameter structs.
    pub fn validate(&self) -> Result<()> {
        Self::new(self.gamma, self.cost_c)?.with_epsilon(self.epsilon)?;
        Ok(())
    }

    pub fn new(gamma: f64, cost_c: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::NonPositiveParam {
                name: "gamma",
                value: gamma,
            });
        }
        if !(cost_c > 0.0) || !cost_c.is_finite() {
            return Err(Error::NonPositiveParam {
                name: "cost_c",
                value: cost_c,
            });
        }
        Ok(Self {
            gamma,
            cost_c,
            epsilon: Self::DEFAULT_EPSILON,
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::NonPositiveParam {
                name: "epsilon",
                value: epsilon,
            });
        }
        self.epsilon = epsilon;
        Ok(self)
    }
}

/// A monotonic alignment path of 1-based index pairs from (1,1) to (m,m).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentPath {
    pairs: Vec<(usize, usize)>,
}

impl AlignmentPath {
    /// Validates clamped endpoints and per-step monotonic progression.
    pub fn new(pairs: Vec<(usize, usize)>, m: usize) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidPath("no pairs"));
        }
        if pairs[0] != (1, 1) {
            return Err(Error::InvalidPath("must start at (1,1)"));
        }
        if *pairs.last().unwrap() != (m, m) {
            return Err(Error::InvalidPath("must end at (m,m)"));
        }
        for w in pairs.windows(2) {
            let (i0, j0) = w[0];
            let (i1, j1) = w[1];
            let di = i1.wrapping_sub(i0);
            let dj = j1.wrapping_sub(j0);
            if di > 1 || dj > 1 || (di == 0 && dj == 0) {
                return Err(Error::InvalidPath(
                    "steps must advance by 0 or 1, at least one by 1",
                ));
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: starts at (1,1)
    }

    /// Binary m×m occupancy matrix of the path.
    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        let (m, _) = *self.pairs.last().unwrap();
        let mut grid = vec![vec![0.0; m]; m];
        for &(i, j) in &self.pairs {
            grid[i - 1][j - 1] = 1.0;
        }
        grid
    }
}

/// A collection of series with a common length.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesSet {
    series: Vec<TimeSeries>,
}

impl TimeSeriesSet {
    pub fn new(series: Vec<TimeSeries>) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::EmptyInput("time series set"));
        }
        let m = series[0].len();
        for s in &series {
            if s.len() != m {
                return Err(Error::LengthMismatch {
                    left: m,
                    right: s.len(),
                });
            }
        }
        Ok(Self { series })
    }

    /// Number of series.
    pub fn n(&self) -> usize {
        self.series.len()
    }

    /// Common series length.
    pub fn series_len(&self) -> usize {
        self.series[0].len()
    }

    pub fn get(&self, i: usize) -> &TimeSeries {
        &self.series[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TimeSeries> {
        self.series.iter()
    }

    pub fn as_slice(&self) -> &[TimeSeries] {
        &self.series
    }

    pub fn into_vec(self) -> Vec<TimeSeries> {
        self.series
    }

    /// Pointwise arithmetic mean of the collection.
    pub fn arithmetic_mean(&self) -> TimeSeries {
        let m = self.series_len();
        let n = self.n() as f64;
        let mut mean = vec![0.0; m];
        for s in &self.series {
            for (acc, v) in mean.iter_mut().zip(s.values()) {
                *acc += v;
            }
        }
        for v in &mut mean {
            *v /= n;
        }
        TimeSeries::new(mean).expect("mean of finite series is finite")
    }

    /// Subset by index, preserving order. Indices must be in range.
    pub fn subset(&self, indices: &[usize]) -> Result<TimeSeriesSet> {
        let picked: Vec<TimeSeries> = indices.iter().map(|&i| self.series[i].clone()).collect();
        TimeSeriesSet::new(picked)
    }
}
