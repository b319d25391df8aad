//! Barycentre computation under elastic geometries.
//!
//! Three routes to a representative series minimising the Fréchet function:
//! alignment-based refinement (DBA under DTW, MBA under MSM), stochastic
//! subgradient descent over alignment paths, and quasi-Newton descent on the
//! smooth objectives driven by their analytic gradients. Soft-trained
//! barycentres are always scored under the hard distance of their geometry.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::elastic::{hard_alignment_path_with_cost, Geometry};
use crate::error::{Error, Result};
use crate::lbfgs;
use crate::parallel;
use crate::series::{SoftParams, TimeSeries, TimeSeriesSet};
use crate::soft;

/// Gradient-norm stop for the quasi-Newton barycentre loop.
const GRAD_NORM_STOP: f64 = 1e-5;

/// Which smooth objective drives a gradient-based barycentre.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoftKind {
    SoftDtw,
    SoftMsm,
}

impl SoftKind {
    /// The hard geometry whose Fréchet loss scores this soft method.
    pub fn geometry(&self) -> Geometry {
        match self {
            SoftKind::SoftDtw => Geometry::Dtw,
            SoftKind::SoftMsm => Geometry::Msm,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SoftKind::SoftDtw => "soft-dtw",
            SoftKind::SoftMsm => "soft-msm",
        }
    }

    fn objective_and_gradient(
        &self,
        beta: &TimeSeries,
        x: &TimeSeries,
        params: &SoftParams,
    ) -> Result<(f64, Vec<f64>)> {
        match self {
            SoftKind::SoftDtw => soft::dtw::gradient(beta, x, params),
            SoftKind::SoftMsm => soft::msm::gradient(beta, x, params),
        }
    }
}

/// Shared optimiser knobs. `max_iters` counts refinement iterations for the
/// alignment-based method, epochs for the subgradient method and quasi-Newton
/// iterations for the soft method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Relative objective-decrease stop.
    pub tolerance: f64,
    /// Initial subgradient step; decays as `step_size / (1 + epoch)`.
    pub step_size: f64,
    pub seed: u64,
    /// Quasi-Newton history length.
    pub memory: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tolerance: 1e-8,
            step_size: 0.05,
            seed: 0,
            memory: 10,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "max_iters must be at least 1".into(),
            ));
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(Error::NonPositiveParam {
                name: "tolerance",
                value: self.tolerance,
            });
        }
        Ok(())
    }
}

/// An optimised average series plus convergence telemetry.
///
/// `final_loss` always equals the last entry of `loss_trace` (the optimised
/// objective: hard Fréchet loss for the alignment/subgradient methods, the
/// summed soft objective for the soft method). `hard_loss` is the Fréchet
/// loss of the returned barycentre under the geometry's hard distance, the
/// evaluation convention used everywhere.
#[derive(Debug, Clone)]
pub struct BarycentreResult {
    pub barycentre: TimeSeries,
    pub final_loss: f64,
    pub hard_loss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub loss_trace: Vec<f64>,
}

impl BarycentreResult {
    fn assemble(
        barycentre: TimeSeries,
        loss_trace: Vec<f64>,
        converged: bool,
        hard_loss: f64,
    ) -> Self {
        let final_loss = *loss_trace.last().expect("trace holds the initial loss");
        let iterations = loss_trace.len() - 1;
        Self {
            barycentre,
            final_loss,
            hard_loss,
            iterations,
            converged,
            loss_trace,
        }
    }
}

/// Mean squared elastic distance from `beta` to every series in the set.
pub fn frechet_loss(
    beta: &TimeSeries,
    set: &TimeSeriesSet,
    geometry: Geometry,
    cost_c: f64,
) -> Result<f64> {
    if beta.len() != set.series_len() {
        return Err(Error::LengthMismatch {
            left: beta.len(),
            right: set.series_len(),
        });
    }
    let terms = parallel::map_slice(set.as_slice(), |x| {
        geometry.squared_distance(beta, x, cost_c)
    });
    let mut total = 0.0;
    for t in terms {
        total += t?;
    }
    Ok(total / set.n() as f64)
}

/// Alignment-based barycentre refinement (DBA under DTW, MBA under MSM),
/// initialised at the arithmetic mean.
pub fn eba_barycentre(
    set: &TimeSeriesSet,
    geometry: Geometry,
    cost_c: f64,
    config: &OptimizerConfig,
) -> Result<BarycentreResult> {
    eba_barycentre_from(set.arithmetic_mean(), set, geometry, cost_c, config)
}

/// Alignment-based refinement from an explicit starting point. Each
/// iteration aligns every series to the candidate, averages the values
/// aligned to each index, and keeps the update only if the loss does not
/// increase, so the loss trace is non-increasing by construction.
pub fn eba_barycentre_from(
    init: TimeSeries,
    set: &TimeSeriesSet,
    geometry: Geometry,
    cost_c: f64,
    config: &OptimizerConfig,
) -> Result<BarycentreResult> {
    config.validate()?;
    let m = set.series_len();
    if init.len() != m {
        return Err(Error::LengthMismatch {
            left: init.len(),
            right: m,
        });
    }

    let mut beta = init;
    let mut loss = frechet_loss(&beta, set, geometry, cost_c)?;
    let mut trace = vec![loss];
    let mut converged = false;

    for _ in 0..config.max_iters {
        let contributions =
            parallel::map_slice(set.as_slice(), |x| -> Result<(Vec<f64>, Vec<f64>)> {
                let (path, _) = hard_alignment_path_with_cost(&beta, x, geometry, cost_c)?;
                let mut sums = vec![0.0; m];
                let mut counts = vec![0.0; m];
                for &(p, q) in path.pairs() {
                    sums[p - 1] += x.values()[q - 1];
                    counts[p - 1] += 1.0;
                }
                Ok((sums, counts))
            });

        let mut sums = vec![0.0; m];
        let mut counts = vec![0.0; m];
        for c in contributions {
            let (s, k) = c?;
            for i in 0..m {
                sums[i] += s[i];
                counts[i] += k[i];
            }
        }
        let values: Vec<f64> = (0..m)
            .map(|i| {
                if counts[i] > 0.0 {
                    sums[i] / counts[i]
                } else {
                    // Unreachable with clamped path endpoints, but guarded.
                    beta.values()[i]
                }
            })
            .collect();
        let candidate = TimeSeries::new(values)?;
        let candidate_loss = frechet_loss(&candidate, set, geometry, cost_c)?;

        if candidate_loss > loss {
            // The mean update is a heuristic for MSM; refuse a worse iterate.
            converged = true;
            break;
        }
        let improvement = loss - candidate_loss;
        beta = candidate;
        loss = candidate_loss;
        trace.push(loss);
        if improvement < config.tolerance {
            converged = true;
            break;
        }
    }

    Ok(BarycentreResult::assemble(beta, trace, converged, loss))
}

/// Stochastic subgradient barycentre: per epoch, visit the series in seeded
/// random order and step along the subgradient of the squared distance
/// through the optimal alignment path. Returns the best iterate seen; the
/// loss trace records the best loss after each epoch.
pub fn ssg_barycentre(
    set: &TimeSeriesSet,
    geometry: Geometry,
    cost_c: f64,
    config: &OptimizerConfig,
) -> Result<BarycentreResult> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut beta: Vec<f64> = set.arithmetic_mean().into_values();
    let mut best = TimeSeries::new(beta.clone())?;
    let mut best_loss = frechet_loss(&best, set, geometry, cost_c)?;
    let mut trace = vec![best_loss];

    let mut order: Vec<usize> = (0..set.n()).collect();
    for epoch in 0..config.max_iters {
        let eta = config.step_size / (1.0 + epoch as f64);
        order.shuffle(&mut rng);
        for &idx in &order {
            let x = set.get(idx);
            let beta_ts = TimeSeries::new(beta.clone())?;
            let grad = squared_distance_subgradient(&beta_ts, x, geometry, cost_c)?;
            for (b, g) in beta.iter_mut().zip(&grad) {
                *b -= eta * g;
            }
            if beta.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!(
                    "subgradient update diverged at epoch {epoch}"
                )));
            }
        }
        let current = TimeSeries::new(beta.clone())?;
        let loss = frechet_loss(&current, set, geometry, cost_c)?;
        if loss < best_loss {
            best_loss = loss;
            best = current;
        }
        trace.push(best_loss);
    }

    Ok(BarycentreResult::assemble(best, trace, true, best_loss))
}

/// Subgradient of the squared elastic distance `d²(β, x)` with respect to β,
/// taken through the fixed optimal alignment path with active-branch
/// derivatives for the piecewise MSM transition cost.
fn squared_distance_subgradient(
    beta: &TimeSeries,
    x: &TimeSeries,
    geometry: Geometry,
    cost_c: f64,
) -> Result<Vec<f64>> {
    let (path, distance) = hard_alignment_path_with_cost(beta, x, geometry, cost_c)?;
    let (bs, xs) = (beta.values(), x.values());
    let m = bs.len();
    let mut grad = vec![0.0; m];

    match geometry {
        Geometry::Dtw => {
            // d² is itself the sum of squared aligned differences.
            for &(p, q) in path.pairs() {
                grad[p - 1] += 2.0 * (bs[p - 1] - xs[q - 1]);
            }
        }
        Geometry::Msm => {
            // d(d²)/dβ = 2·d·(path subgradient of d).
            let sign = |v: f64| {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            };
            let mut dd = vec![0.0; m];
            dd[0] += sign(bs[0] - xs[0]);
            for w in path.pairs().windows(2) {
                let (p0, q0) = w[0];
                let (p1, q1) = w[1];
                if p1 == p0 + 1 && q1 == q0 + 1 {
                    dd[p1 - 1] += sign(bs[p1 - 1] - xs[q1 - 1]);
                } else if p1 == p0 + 1 {
                    // msm_cost(β_p, β_{p-1}, x_q)
                    let (a, b, c) = (bs[p1 - 1], bs[p1 - 2], xs[q1 - 1]);
                    if !between(a, b, c) {
                        if (a - b).abs() <= (a - c).abs() {
                            dd[p1 - 1] += sign(a - b);
                            dd[p1 - 2] -= sign(a - b);
                        } else {
                            dd[p1 - 1] += sign(a - c);
                        }
                    }
                } else {
                    // msm_cost(x_q, x_{q-1}, β_p)
                    let (a, b, c) = (xs[q1 - 1], xs[q1 - 2], bs[p1 - 1]);
                    if !between(a, b, c) && (a - c).abs() < (a - b).abs() {
                        dd[p1 - 1] -= sign(a - c);
                    }
                }
            }
            for (g, d) in grad.iter_mut().zip(&dd) {
                *g = 2.0 * distance * d;
            }
        }
    }
    Ok(grad)
}

fn between(a: f64, b: f64, c: f64) -> bool {
    (b <= a && a <= c) || (b >= a && a >= c)
}

/// Gradient-based barycentre: minimises `Σᵢ F_γ(β, x⁽ⁱ⁾)` from the
/// arithmetic mean with limited-memory quasi-Newton steps on the analytic
/// gradient. The loss trace records the soft objective; `hard_loss` scores
/// the result under the matching hard geometry.
pub fn soft_barycentre(
    set: &TimeSeriesSet,
    kind: SoftKind,
    params: &SoftParams,
    config: &OptimizerConfig,
) -> Result<BarycentreResult> {
    soft_barycentre_from(set.arithmetic_mean(), set, kind, params, config)
}

/// Gradient-based barycentre from an explicit starting point.
pub fn soft_barycentre_from(
    init: TimeSeries,
    set: &TimeSeriesSet,
    kind: SoftKind,
    params: &SoftParams,
    config: &OptimizerConfig,
) -> Result<BarycentreResult> {
    config.validate()?;
    let m = set.series_len();
    if init.len() != m {
        return Err(Error::LengthMismatch {
            left: init.len(),
            right: m,
        });
    }

    let objective = |b: &[f64]| -> Result<(f64, Vec<f64>)> {
        if b.iter().any(|v| !v.is_finite()) {
            // Signal an over-long trial step to the line search.
            return Ok((f64::INFINITY, vec![0.0; b.len()]));
        }
        let beta = TimeSeries::new(b.to_vec())?;
        let per_series = parallel::map_slice(set.as_slice(), |x| {
            kind.objective_and_gradient(&beta, x, params)
        });
        let mut total = 0.0;
        let mut grad = vec![0.0; b.len()];
        for r in per_series {
            let (f, g) = r?;
            total += f;
            for (acc, gi) in grad.iter_mut().zip(&g) {
                *acc += gi;
            }
        }
        Ok((total, grad))
    };

    let outcome = lbfgs::minimize(
        objective,
        init.into_values(),
        &lbfgs::Options {
            memory: config.memory.max(1),
            max_iters: config.max_iters,
            grad_tol: GRAD_NORM_STOP,
            rel_obj_tol: config.tolerance,
        },
    )?;

    let barycentre = TimeSeries::new(outcome.x)?;
    let hard_loss = frechet_loss(&barycentre, set, kind.geometry(), params.cost_c)?;
    Ok(BarycentreResult::assemble(
        barycentre,
        outcome.trace,
        outcome.converged,
        hard_loss,
    ))
}
