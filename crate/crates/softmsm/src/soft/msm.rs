//! Differentiable Move-Split-Merge.
//!
//! The split/merge penalty of hard MSM is piecewise in the ordering of three
//! values. Here it is replaced by a smooth gated surrogate: a between-gate
//! `g = ½(1 - u/√(u²+ε))` with `u = (x-y)(x-z)` decides softly whether `x`
//! lies between its neighbours, and the transition cost becomes
//! `c + (1-g)·softmin_γ((x-y)², (x-z)²)`. With squared match costs and a
//! softmin over the three recursion branches, the accumulated objective
//! F_γ is continuously differentiable in every input value; the backward
//! pass recovers a soft alignment matrix, and combining it with the
//! transition-cost partials yields a closed-form gradient.

use super::{
    backward_recursion, check_matrix, check_pair, edge_weight, AlignmentMatrix, CostMatrix, Move,
};
use crate::elastic::{softmin2, softmin3};
use crate::error::Result;
use crate::series::{SoftParams, TimeSeries};

/// Smooth between-gate: close to 1 when `x` lies between `y` and `z`, close
/// to 0 outside, exactly ½ on the boundary `x = y` or `x = z`. Strictly
/// inside (0, 1) for ε > 0.
pub fn smooth_gate(x: f64, y: f64, z: f64, epsilon: f64) -> f64 {
    let u = (x - y) * (x - z);
    0.5 * (1.0 - u / (u * u + epsilon).sqrt())
}

/// Differentiable split/merge transition cost
/// `c + (1 - g(x,y,z))·softmin_γ((x-y)², (x-z)²)`.
pub fn transition_cost(x: f64, y: f64, z: f64, params: &SoftParams) -> f64 {
    let g = smooth_gate(x, y, z, params.epsilon);
    let s = softmin2((x - y).powi(2), (x - z).powi(2), params.gamma);
    params.cost_c + (1.0 - g) * s
}

/// Partial derivatives of [`transition_cost`] with respect to its three
/// scalar inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionGradients {
    pub d_x: f64,
    pub d_y: f64,
    pub d_z: f64,
}

/// Product-rule derivatives of the transition cost: gate derivatives against
/// the soft minimum, plus the gated softmin weights.
pub fn transition_gradients(x: f64, y: f64, z: f64, params: &SoftParams) -> TransitionGradients {
    let a = x - y;
    let b = x - z;
    let u = a * b;

    let r = (u * u + params.epsilon).sqrt();
    let q = 1.0 / r;
    let q3 = q * q * q;

    let g = 0.5 * (1.0 - u * q);
    let s = softmin2(a * a, b * b, params.gamma);

    // Gate derivatives through u = (x-y)(x-z).
    let dg_du = q - u * u * q3;
    let dg_dx = -0.5 * (a + b) * dg_du;
    let dg_dy = 0.5 * b * dg_du;
    let dg_dz = 0.5 * a * dg_du;

    // Stabilised two-argument softmin weights.
    let d1 = a * a;
    let d2 = b * b;
    let s0 = d1.min(d2);
    let e1 = (-(d1 - s0) / params.gamma).exp();
    let e2 = (-(d2 - s0) / params.gamma).exp();
    let pi1 = e1 / (e1 + e2);
    let pi2 = 1.0 - pi1;

    let ds_dx = 2.0 * (pi1 * a + pi2 * b);
    let ds_dy = -2.0 * pi1 * a;
    let ds_dz = -2.0 * pi2 * b;

    let one_minus_g = 1.0 - g;
    TransitionGradients {
        d_x: -dg_dx * s + one_minus_g * ds_dx,
        d_y: -dg_dy * s + one_minus_g * ds_dy,
        d_z: -dg_dz * s + one_minus_g * ds_dz,
    }
}

/// Forward recursion. The first cell holds the squared match cost, the first
/// row and column accumulate transition costs, and interior cells take a
/// softmin over match, split and merge branches. The objective F_γ is the
/// final cell.
pub fn forward(x: &TimeSeries, y: &TimeSeries, params: &SoftParams) -> Result<CostMatrix> {
    params.validate()?;
    let m = check_pair(x, y)?;
    let (xs, ys) = (x.values(), y.values());
    let gamma = params.gamma;
    let mut c = vec![0.0; m * m];
    c[0] = (xs[0] - ys[0]).powi(2);
    for i in 1..m {
        c[i * m] = transition_cost(xs[i], xs[i - 1], ys[0], params) + c[(i - 1) * m];
    }
    for j in 1..m {
        c[j] = transition_cost(ys[j], ys[j - 1], xs[0], params) + c[j - 1];
    }
    for i in 1..m {
        for j in 1..m {
            let diag = (xs[i] - ys[j]).powi(2) + c[(i - 1) * m + (j - 1)];
            let vert = transition_cost(xs[i], xs[i - 1], ys[j], params) + c[(i - 1) * m + j];
            let horiz = transition_cost(ys[j], ys[j - 1], xs[i], params) + c[i * m + (j - 1)];
            c[i * m + j] = softmin3(diag, vert, horiz, gamma);
        }
    }
    Ok(CostMatrix::from_raw(m, c, *params))
}

/// The objective F_γ(x, y) alone.
pub fn objective(x: &TimeSeries, y: &TimeSeries, params: &SoftParams) -> Result<f64> {
    Ok(forward(x, y, params)?.objective())
}

/// Backward recursion over a forward cost matrix: soft occupancy weights for
/// every cell, seeded with weight one at (m,m).
pub fn alignment(x: &TimeSeries, y: &TimeSeries, cost: &CostMatrix) -> Result<AlignmentMatrix> {
    check_matrix(cost, x, y)?;
    let (xs, ys) = (x.values(), y.values());
    let params = *cost.params();
    Ok(backward_recursion(cost, move |r, c, mv| match mv {
        Move::Vertical => transition_cost(xs[r], xs[r - 1], ys[c], &params),
        Move::Horizontal => transition_cost(ys[c], ys[c - 1], xs[r], &params),
        Move::Diagonal => (xs[r] - ys[c]).powi(2),
    }))
}

/// Objective value and gradient of F_γ with respect to the first series.
///
/// Edge weights split the occupancy of each cell over its incoming match,
/// vertical and horizontal edges; match edges contribute the squared-cost
/// residual and transition edges contribute the transition-cost partials.
/// Cumulative boundary cells carry unit edge weight, so the first row and
/// column contribute exactly once each.
pub fn gradient(x: &TimeSeries, y: &TimeSeries, params: &SoftParams) -> Result<(f64, Vec<f64>)> {
    let m = check_pair(x, y)?;
    let cost = forward(x, y, params)?;
    let align = alignment(x, y, &cost)?;
    let (xs, ys) = (x.values(), y.values());
    let gamma = params.gamma;
    let mut grad = vec![0.0; m];

    // Match edge into (1,1): the whole objective starts from its squared cost.
    grad[0] += 2.0 * (xs[0] - ys[0]) * align.get(0, 0);

    // Interior match edges.
    for i in 1..m {
        for j in 1..m {
            let tau = (xs[i] - ys[j]).powi(2);
            let g_ij =
                align.get(i, j) * edge_weight(cost.get(i, j), cost.get(i - 1, j - 1), tau, gamma);
            grad[i] += 2.0 * (xs[i] - ys[j]) * g_ij;
        }
    }

    // Vertical edges: x_i enters the transition at (i, j) as the moving
    // value and the one at (i+1, j) as its predecessor.
    for i in 1..m {
        for j in 0..m {
            let tau = transition_cost(xs[i], xs[i - 1], ys[j], params);
            let v_ij =
                align.get(i, j) * edge_weight(cost.get(i, j), cost.get(i - 1, j), tau, gamma);
            let tg = transition_gradients(xs[i], xs[i - 1], ys[j], params);
            grad[i] += v_ij * tg.d_x;
            grad[i - 1] += v_ij * tg.d_y;
        }
    }

    // Horizontal edges: x_i enters as the opposite-series anchor.
    for i in 0..m {
        for j in 1..m {
            let tau = transition_cost(ys[j], ys[j - 1], xs[i], params);
            let h_ij =
                align.get(i, j) * edge_weight(cost.get(i, j), cost.get(i, j - 1), tau, gamma);
            let tg = transition_gradients(ys[j], ys[j - 1], xs[i], params);
            grad[i] += h_ij * tg.d_z;
        }
    }

    Ok((cost.objective(), grad))
}

/// Debiased objective `F_γ(x,y) - ½F_γ(x,x) - ½F_γ(y,y)`; zero on identical
/// inputs by construction.
pub fn divergence(x: &TimeSeries, y: &TimeSeries, params: &SoftParams) -> Result<f64> {
    check_pair(x, y)?;
    let fxy = objective(x, y, params)?;
    let fxx = objective(x, x, params)?;
    let fyy = objective(y, y, params)?;
    Ok(fxy - 0.5 * fxx - 0.5 * fyy)
}
