//! Differentiable elastic objectives.
//!
//! The MSM and DTW relaxations share one numerical core: an accumulated
//! soft-cost matrix filled on the forward pass, and a backward recursion
//! that turns it into a soft alignment matrix of occupancy weights. The two
//! relaxations differ only in their per-edge costs, so the backward pass is
//! parameterised over a transition-cost callback.

pub mod dtw;
pub mod msm;

use crate::error::{Error, Result};
use crate::series::{SoftParams, TimeSeries};

/// Overflow guard on backward/edge-weight exponents. In exact arithmetic the
/// argument is ≤ 0; roundoff can push it marginally positive.
const MAX_EXP_ARG: f64 = 30.0;

/// Derivative of the softmin branch `c_cell + tau` at a cell whose successor
/// holds `c_succ`: `exp((c_succ - (c_cell + tau)) / γ)`. Through cumulative
/// (non-softmin) boundary cells the argument cancels and the weight is one.
#[inline]
pub(crate) fn edge_weight(c_succ: f64, c_cell: f64, tau: f64, gamma: f64) -> f64 {
    (((c_succ - (c_cell + tau)) / gamma).min(MAX_EXP_ARG)).exp()
}

/// Direction of a move between adjacent cells of the alignment lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Move {
    /// Row advances: a split/merge along the first series.
    Vertical,
    /// Column advances: a split/merge along the second series.
    Horizontal,
    /// Both advance: a pointwise match.
    Diagonal,
}

/// Accumulated soft cost matrix. Entry (m,m) is the reported objective F_γ.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    m: usize,
    values: Vec<f64>,
    params: SoftParams,
}

impl CostMatrix {
    pub(crate) fn from_raw(m: usize, values: Vec<f64>, params: SoftParams) -> Self {
        debug_assert_eq!(values.len(), m * m);
        Self { m, values, params }
    }

    /// Side length of the square matrix.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Entry at 0-based (i, j).
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m + j]
    }

    /// The soft objective F_γ = C_{m,m}.
    pub fn objective(&self) -> f64 {
        self.values[self.m * self.m - 1]
    }

    /// The (γ, c, ε) configuration this matrix was built with.
    pub fn params(&self) -> &SoftParams {
        &self.params
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.m)
    }
}

/// Soft alignment matrix from the backward recursion: nonnegative weights,
/// entry (m,m) exactly one, entry (1,1) one up to mass-conservation roundoff.
#[derive(Debug, Clone)]
pub struct AlignmentMatrix {
    m: usize,
    values: Vec<f64>,
}

impl AlignmentMatrix {
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.m)
    }
}

/// Backward recursion shared by both relaxations. `tau(r, c, mv)` is the
/// transition cost paid when entering successor cell (r, c) by `mv`, with
/// (r, c) 0-based.
pub(crate) fn backward_recursion<F>(cost: &CostMatrix, tau: F) -> AlignmentMatrix
where
    F: Fn(usize, usize, Move) -> f64,
{
    let m = cost.m;
    let gamma = cost.params.gamma;
    let mut a = vec![0.0; m * m];
    a[m * m - 1] = 1.0;
    for i in (0..m).rev() {
        for j in (0..m).rev() {
            if i == m - 1 && j == m - 1 {
                continue;
            }
            let here = cost.get(i, j);
            let mut w = 0.0;
            if i + 1 < m {
                let t = tau(i + 1, j, Move::Vertical);
                w += a[(i + 1) * m + j] * edge_weight(cost.get(i + 1, j), here, t, gamma);
            }
            if j + 1 < m {
                let t = tau(i, j + 1, Move::Horizontal);
                w += a[i * m + (j + 1)] * edge_weight(cost.get(i, j + 1), here, t, gamma);
            }
            if i + 1 < m && j + 1 < m {
                let t = tau(i + 1, j + 1, Move::Diagonal);
                w += a[(i + 1) * m + (j + 1)] * edge_weight(cost.get(i + 1, j + 1), here, t, gamma);
            }
            a[i * m + j] = w;
        }
    }
    AlignmentMatrix { m, values: a }
}

pub(crate) fn check_pair(x: &TimeSeries, y: &TimeSeries) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(x.len())
}

pub(crate) fn check_matrix(cost: &CostMatrix, x: &TimeSeries, y: &TimeSeries) -> Result<usize> {
    let m = check_pair(x, y)?;
    if cost.m != m {
        return Err(Error::ShapeMismatch {
            rows: cost.m,
            cols: cost.m,
            expected: m,
        });
    }
    Ok(m)
}
