//! Independent oracles for tests and the self-test suite: exhaustive path
//! enumeration, direct path costs, log-sum-exp path objectives, central
//! finite differences and the hard-limit recursion.
//!
//! Everything here trades efficiency for directness and is never called from
//! production code paths. Path enumeration is capped at small lengths since
//! the number of monotonic paths grows as the central Delannoy numbers.

use crate::elastic::{msm_cost, softmin};
use crate::error::{Error, Result};
use crate::series::{AlignmentPath, SoftParams, TimeSeries};
use crate::soft::msm::transition_cost;

/// Enumeration guard: D(8-1, 8-1) = 48639 paths.
pub const MAX_ENUMERATION_M: usize = 8;

/// All monotonic alignment paths from (1,1) to (m,m), duplicate-free.
pub fn enumerate_paths(m: usize) -> Result<Vec<AlignmentPath>> {
    if m == 0 {
        return Err(Error::EmptyInput("enumerate_paths"));
    }
    if m > MAX_ENUMERATION_M {
        return Err(Error::EnumerationTooLarge {
            m,
            max: MAX_ENUMERATION_M,
        });
    }
    let mut paths = Vec::new();
    let mut stack = vec![(1usize, 1usize)];
    extend(&mut stack, m, &mut paths)?;
    Ok(paths)
}

fn extend(prefix: &mut Vec<(usize, usize)>, m: usize, out: &mut Vec<AlignmentPath>) -> Result<()> {
    let &(i, j) = prefix.last().unwrap();
    if (i, j) == (m, m) {
        out.push(AlignmentPath::new(prefix.clone(), m)?);
        return Ok(());
    }
    for (ni, nj) in [(i + 1, j + 1), (i + 1, j), (i, j + 1)] {
        if ni <= m && nj <= m {
            prefix.push((ni, nj));
            extend(prefix, m, out)?;
            prefix.pop();
        }
    }
    Ok(())
}

/// Which per-edge cost the path oracles accumulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeCostKind {
    /// Squared pointwise cost on every visited cell (DTW and Soft-DTW).
    DtwSquared,
    /// Absolute match cost on diagonal steps, hard split/merge penalty on
    /// off-diagonal steps.
    MsmHard,
    /// Squared match cost on diagonal steps, smooth transition cost on
    /// off-diagonal steps.
    SoftMsmEdges,
}

fn require_params(kind: EdgeCostKind, params: Option<&SoftParams>) -> Result<&SoftParams> {
    params.ok_or_else(|| {
        Error::InvalidArgument(format!("edge cost kind {kind:?} requires soft params"))
    })
}

/// Total cost accumulated along `path` under the selected edge costs.
/// `params` supplies `cost_c` for MSM edges and the full (γ, c, ε) for
/// soft-MSM edges; it is ignored for `DtwSquared`.
pub fn path_cost(
    path: &AlignmentPath,
    x: &TimeSeries,
    y: &TimeSeries,
    kind: EdgeCostKind,
    params: Option<&SoftParams>,
) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let m = x.len();
    if *path.pairs().last().unwrap() != (m, m) {
        return Err(Error::InvalidPath("path does not match series length"));
    }
    let (xs, ys) = (x.values(), y.values());
    let sq = |i: usize, j: usize| (xs[i - 1] - ys[j - 1]).powi(2);

    let mut total = match kind {
        EdgeCostKind::DtwSquared | EdgeCostKind::SoftMsmEdges => sq(1, 1),
        EdgeCostKind::MsmHard => (xs[0] - ys[0]).abs(),
    };
    for w in path.pairs().windows(2) {
        let (i0, j0) = w[0];
        let (i1, j1) = w[1];
        let diagonal = i1 == i0 + 1 && j1 == j0 + 1;
        let vertical = i1 == i0 + 1 && j1 == j0;
        total += match kind {
            EdgeCostKind::DtwSquared => sq(i1, j1),
            EdgeCostKind::MsmHard => {
                let c = require_params(kind, params)?.cost_c;
                if diagonal {
                    (xs[i1 - 1] - ys[j1 - 1]).abs()
                } else if vertical {
                    msm_cost(xs[i1 - 1], xs[i1 - 2], ys[j1 - 1], c)
                } else {
                    msm_cost(ys[j1 - 1], ys[j1 - 2], xs[i1 - 1], c)
                }
            }
            EdgeCostKind::SoftMsmEdges => {
                let p = require_params(kind, params)?;
                if diagonal {
                    sq(i1, j1)
                } else if vertical {
                    transition_cost(xs[i1 - 1], xs[i1 - 2], ys[j1 - 1], p)
                } else {
                    transition_cost(ys[j1 - 1], ys[j1 - 2], xs[i1 - 1], p)
                }
            }
        };
    }
    Ok(total)
}

/// Minimum path cost over the exhaustive enumeration: the brute-force value
/// of the matching hard recursion.
pub fn min_path_cost(
    x: &TimeSeries,
    y: &TimeSeries,
    kind: EdgeCostKind,
    params: Option<&SoftParams>,
) -> Result<f64> {
    let paths = enumerate_paths(x.len())?;
    let mut best = f64::INFINITY;
    for p in &paths {
        best = best.min(path_cost(p, x, y, kind, params)?);
    }
    Ok(best)
}

/// `-γ log Σ_P exp(-cost(P)/γ)` over all paths, with max-shift stabilisation:
/// the brute-force value of the matching soft recursion.
pub fn logsumexp_path_objective(
    x: &TimeSeries,
    y: &TimeSeries,
    params: &SoftParams,
    kind: EdgeCostKind,
) -> Result<f64> {
    let paths = enumerate_paths(x.len())?;
    let costs: Vec<f64> = paths
        .iter()
        .map(|p| path_cost(p, x, y, kind, Some(params)))
        .collect::<Result<_>>()?;
    softmin(&costs, params.gamma)
}

/// Normalised cell occupancy under the Gibbs path measure
/// w(P) ∝ exp(-cost(P)/γ): entry (i,j) is the probability that a path visits
/// cell (i,j). Row-major m×m. This is what the backward-pass alignment
/// matrix must reproduce.
pub fn path_occupancy(
    x: &TimeSeries,
    y: &TimeSeries,
    params: &SoftParams,
    kind: EdgeCostKind,
) -> Result<Vec<f64>> {
    let m = x.len();
    let paths = enumerate_paths(m)?;
    let costs: Vec<f64> = paths
        .iter()
        .map(|p| path_cost(p, x, y, kind, Some(params)))
        .collect::<Result<_>>()?;
    let s = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = costs
        .iter()
        .map(|&c| (-(c - s) / params.gamma).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let mut occ = vec![0.0; m * m];
    for (p, w) in paths.iter().zip(&weights) {
        for &(i, j) in p.pairs() {
            occ[(i - 1) * m + (j - 1)] += w;
        }
    }
    for v in &mut occ {
        *v /= total;
    }
    Ok(occ)
}

/// Component-wise central finite differences `(f(x+h·eᵢ) - f(x-h·eᵢ)) / 2h`.
pub fn fd_gradient<F>(mut objective: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::NonPositiveParam {
            name: "h",
            value: h,
        });
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let plus = objective(&probe);
        probe[i] = x[i] - h;
        let minus = objective(&probe);
        probe[i] = x[i];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Numerical(format!(
                "finite differences hit a non-finite objective at component {i}"
            )));
        }
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

/// Hard-gate transition cost: the γ→0, ε→0 limit of the smooth transition.
fn hard_limit_trans(x: f64, y: f64, z: f64, c: f64) -> f64 {
    let u = (x - y) * (x - z);
    if u < 0.0 {
        c
    } else if u > 0.0 {
        c + (x - y).powi(2).min((x - z).powi(2))
    } else {
        c + 0.5 * (x - y).powi(2).min((x - z).powi(2))
    }
}

/// Hard-min recursion with squared local costs and hard-gate transitions:
/// the pointwise limit of the smooth forward recursion.
pub fn hard_limit_objective(x: &TimeSeries, y: &TimeSeries, cost_c: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let m = x.len();
    let (xs, ys) = (x.values(), y.values());
    let mut c = vec![0.0; m * m];
    c[0] = (xs[0] - ys[0]).powi(2);
    for i in 1..m {
        c[i * m] = hard_limit_trans(xs[i], xs[i - 1], ys[0], cost_c) + c[(i - 1) * m];
    }
    for j in 1..m {
        c[j] = hard_limit_trans(ys[j], ys[j - 1], xs[0], cost_c) + c[j - 1];
    }
    for i in 1..m {
        for j in 1..m {
            let diag = (xs[i] - ys[j]).powi(2) + c[(i - 1) * m + (j - 1)];
            let vert = hard_limit_trans(xs[i], xs[i - 1], ys[j], cost_c) + c[(i - 1) * m + j];
            let horiz = hard_limit_trans(ys[j], ys[j - 1], xs[i], cost_c) + c[i * m + (j - 1)];
            c[i * m + j] = diag.min(vert).min(horiz);
        }
    }
    Ok(c[m * m - 1])
}

/// Smallest |u| = |(a-b)(a-c)| over every transition-argument triple the
/// recursions evaluate. Instances near the gate boundary (small margin) are
/// excluded from hard-limit and finite-difference comparisons.
pub fn min_gate_margin(x: &TimeSeries, y: &TimeSeries) -> f64 {
    let (xs, ys) = (x.values(), y.values());
    let m = xs.len();
    let mut margin = f64::INFINITY;
    for i in 1..m {
        for j in 0..m {
            let u = (xs[i] - xs[i - 1]) * (xs[i] - ys[j]);
            margin = margin.min(u.abs());
        }
    }
    for j in 1..m {
        for i in 0..m {
            let u = (ys[j] - ys[j - 1]) * (ys[j] - xs[i]);
            margin = margin.min(u.abs());
        }
    }
    margin
}
