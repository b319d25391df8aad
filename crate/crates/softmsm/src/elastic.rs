//! Hard (non-differentiable) elastic distances and the shared softmin
//! primitive.
//!
//! Both recursions fill a full m×m accumulated-cost matrix (no warping
//! window) and read the distance off the final cell. DTW accumulates squared
//! pointwise costs; MSM accumulates absolute pointwise costs plus a
//! context-aware split/merge penalty and is a metric.

use crate::error::{Error, Result};
use crate::series::{AlignmentPath, TimeSeries};

/// Which hard elastic distance defines the geometry of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Dtw,
    Msm,
}

impl Geometry {
    pub fn name(&self) -> &'static str {
        match self {
            Geometry::Dtw => "dtw",
            Geometry::Msm => "msm",
        }
    }

    /// The hard distance of this geometry. `cost_c` is ignored for DTW.
    pub fn distance(&self, x: &TimeSeries, y: &TimeSeries, cost_c: f64) -> Result<f64> {
        match self {
            Geometry::Dtw => dtw_distance(x, y),
            Geometry::Msm => msm_distance(x, y, cost_c),
        }
    }

    /// Squared elastic distance, the quantity summed by Fréchet losses and
    /// cluster inertia. The DTW recursion accumulates squared pointwise
    /// costs, so its value is already on the squared scale; MSM is a metric
    /// on the absolute scale and is squared here.
    pub fn squared_distance(&self, x: &TimeSeries, y: &TimeSeries, cost_c: f64) -> Result<f64> {
        match self {
            Geometry::Dtw => dtw_distance(x, y),
            Geometry::Msm => Ok(msm_distance(x, y, cost_c)?.powi(2)),
        }
    }
}

impl std::str::FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dtw" => Ok(Geometry::Dtw),
            "msm" => Ok(Geometry::Msm),
            other => Err(Error::InvalidArgument(format!(
                "unknown geometry '{other}' (expected dtw or msm)"
            ))),
        }
    }
}

/// Stabilised soft minimum: `-γ·log(Σ exp(-(aᵣ-s)/γ)) + s` with `s = min aᵣ`.
///
/// The shift by `s` keeps every exponent non-positive, so the sum cannot
/// overflow for any finite input. Converges to `min` as γ → 0⁺.
pub fn softmin(values: &[f64], gamma: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("softmin"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("softmin"));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::NonPositiveParam {
            name: "gamma",
            value: gamma,
        });
    }
    let s = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let sum: f64 = values.iter().map(|&a| (-(a - s) / gamma).exp()).sum();
    Ok(-gamma * sum.ln() + s)
}

/// Two-argument softmin on pre-validated finite inputs.
#[inline]
pub(crate) fn softmin2(a: f64, b: f64, gamma: f64) -> f64 {
    let s = a.min(b);
    let sum = (-(a - s) / gamma).exp() + (-(b - s) / gamma).exp();
    -gamma * sum.ln() + s
}

/// Three-argument softmin on pre-validated finite inputs.
#[inline]
pub(crate) fn softmin3(a: f64, b: f64, c: f64, gamma: f64) -> f64 {
    let s = a.min(b).min(c);
    let sum = (-(a - s) / gamma).exp() + (-(b - s) / gamma).exp() + (-(c - s) / gamma).exp();
    -gamma * sum.ln() + s
}

fn check_equal_lengths(x: &TimeSeries, y: &TimeSeries) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(x.len())
}

/// DTW distance with squared pointwise cost: the final cell of the
/// accumulated cost matrix.
pub fn dtw_distance(x: &TimeSeries, y: &TimeSeries) -> Result<f64> {
    let m = check_equal_lengths(x, y)?;
    let c = dtw_cost_matrix(x.values(), y.values(), m);
    Ok(c[m * m - 1])
}

fn dtw_cost_matrix(x: &[f64], y: &[f64], m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    let d = |i: usize, j: usize| (x[i] - y[j]).powi(2);
    c[0] = d(0, 0);
    for i in 1..m {
        c[i * m] = d(i, 0) + c[(i - 1) * m];
    }
    for j in 1..m {
        c[j] = d(0, j) + c[j - 1];
    }
    for i in 1..m {
        for j in 1..m {
            let best = c[(i - 1) * m + (j - 1)]
                .min(c[(i - 1) * m + j])
                .min(c[i * m + (j - 1)]);
            c[i * m + j] = d(i, j) + best;
        }
    }
    c
}

/// MSM transition cost for inserting/removing value `x` between neighbours
/// `y` and `z`: the fixed penalty `c`, plus the smaller deviation when `x`
/// does not lie between them.
pub fn msm_cost(x: f64, y: f64, z: f64, c: f64) -> f64 {
    if (y <= x && x <= z) || (y >= x && x >= z) {
        c
    } else {
        c + (x - y).abs().min((x - z).abs())
    }
}

/// MSM distance with absolute pointwise cost and split/merge transitions.
pub fn msm_distance(x: &TimeSeries, y: &TimeSeries, cost_c: f64) -> Result<f64> {
    if !(cost_c > 0.0) || !cost_c.is_finite() {
        return Err(Error::NonPositiveParam {
            name: "cost_c",
            value: cost_c,
        });
    }
    let m = check_equal_lengths(x, y)?;
    let c = msm_cost_matrix(x.values(), y.values(), m, cost_c);
    Ok(c[m * m - 1])
}

fn msm_cost_matrix(x: &[f64], y: &[f64], m: usize, cc: f64) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    c[0] = (x[0] - y[0]).abs();
    for i in 1..m {
        c[i * m] = msm_cost(x[i], x[i - 1], y[0], cc) + c[(i - 1) * m];
    }
    for j in 1..m {
        c[j] = msm_cost(y[j], y[j - 1], x[0], cc) + c[j - 1];
    }
    for i in 1..m {
        for j in 1..m {
            let diag = (x[i] - y[j]).abs() + c[(i - 1) * m + (j - 1)];
            let vert = msm_cost(x[i], x[i - 1], y[j], cc) + c[(i - 1) * m + j];
            let horiz = msm_cost(y[j], y[j - 1], x[i], cc) + c[i * m + (j - 1)];
            c[i * m + j] = diag.min(vert).min(horiz);
        }
    }
    c
}

/// Full accumulated-cost matrix of the hard recursion, row-major.
pub fn hard_cost_matrix(
    x: &TimeSeries,
    y: &TimeSeries,
    kind: Geometry,
    cost_c: f64,
) -> Result<Vec<Vec<f64>>> {
    let m = check_equal_lengths(x, y)?;
    let flat = match kind {
        Geometry::Dtw => dtw_cost_matrix(x.values(), y.values(), m),
        Geometry::Msm => {
            if !(cost_c > 0.0) || !cost_c.is_finite() {
                return Err(Error::NonPositiveParam {
                    name: "cost_c",
                    value: cost_c,
                });
            }
            msm_cost_matrix(x.values(), y.values(), m, cost_c)
        }
    };
    Ok(flat.chunks(m).map(|row| row.to_vec()).collect())
}

/// Backtracks a minimum-cost alignment path through the hard recursion.
///
/// Ties are broken by preferring diagonal, then vertical, then horizontal
/// moves. The accumulated cost along the returned path equals the distance.
pub fn hard_alignment_path(
    x: &TimeSeries,
    y: &TimeSeries,
    kind: Geometry,
    cost_c: f64,
) -> Result<AlignmentPath> {
    Ok(hard_alignment_path_with_cost(x, y, kind, cost_c)?.0)
}

/// Backtracked path together with the distance it realises, sharing one
/// matrix fill.
pub(crate) fn hard_alignment_path_with_cost(
    x: &TimeSeries,
    y: &TimeSeries,
    kind: Geometry,
    cost_c: f64,
) -> Result<(AlignmentPath, f64)> {
    let m = check_equal_lengths(x, y)?;
    let (xs, ys) = (x.values(), y.values());
    let c = match kind {
        Geometry::Dtw => dtw_cost_matrix(xs, ys, m),
        Geometry::Msm => {
            if !(cost_c > 0.0) || !cost_c.is_finite() {
                return Err(Error::NonPositiveParam {
                    name: "cost_c",
                    value: cost_c,
                });
            }
            msm_cost_matrix(xs, ys, m, cost_c)
        }
    };

    // Edge cost of stepping into 0-based cell (i, j) from the given direction.
    let edge = |i: usize, j: usize, dir: Step| -> f64 {
        match (kind, dir) {
            (Geometry::Dtw, _) => (xs[i] - ys[j]).powi(2),
            (Geometry::Msm, Step::Diag) => (xs[i] - ys[j]).abs(),
            (Geometry::Msm, Step::Vert) => msm_cost(xs[i], xs[i - 1], ys[j], cost_c),
            (Geometry::Msm, Step::Horiz) => msm_cost(ys[j], ys[j - 1], xs[i], cost_c),
        }
    };

    let mut pairs = vec![(m, m)];
    let (mut i, mut j) = (m - 1, m - 1);
    while i > 0 || j > 0 {
        let here = c[i * m + j];
        let mut moved = false;
        for dir in [Step::Diag, Step::Vert, Step::Horiz] {
            let (pi, pj) = match dir {
                Step::Diag if i > 0 && j > 0 => (i - 1, j - 1),
                Step::Vert if i > 0 => (i - 1, j),
                Step::Horiz if j > 0 => (i, j - 1),
                _ => continue,
            };
            // The recursion stored exactly pred + edge for the branch it
            // selected, so bitwise equality identifies valid predecessors.
            if c[pi * m + pj] + edge(i, j, dir) == here {
                i = pi;
                j = pj;
                pairs.push((i + 1, j + 1));
                moved = true;
                break;
            }
        }
        if !moved {
            // Floating-point safety net: fall back to the cheapest
            // reachable predecessor.
            let mut best: Option<(f64, usize, usize)> = None;
            for (pi, pj) in [
                (i.wrapping_sub(1), j.wrapping_sub(1)),
                (i.wrapping_sub(1), j),
                (i, j.wrapping_sub(1)),
            ] {
                if pi < m && pj < m {
                    let v = c[pi * m + pj];
                    if best.is_none_or(|(bv, _, _)| v < bv) {
                        best = Some((v, pi, pj));
                    }
                }
            }
            let (_, pi, pj) = best.expect("interior cell has a predecessor");
            i = pi;
            j = pj;
            pairs.push((i + 1, j + 1));
        }
    }
    pairs.reverse();
    Ok((AlignmentPath::new(pairs, m)?, c[m * m - 1]))
}

#[derive(Clone, Copy)]
enum Step {
    Diag,
    Vert,
    Horiz,
}
