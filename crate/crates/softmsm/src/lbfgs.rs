//! Limited-memory BFGS with a strong Wolfe line search, driving the
//! gradient-based barycentre solvers.
//!
//! Two-loop recursion for the quasi-Newton direction, curvature-guarded
//! history updates, and a bracket/zoom line search with Armijo constant 1e-4
//! and curvature constant 0.9. Non-finite trial values are treated as
//! over-long steps and shrunk rather than surfaced as errors.

use std::collections::VecDeque;

use crate::error::{Error, Result};

const ARMIJO_C1: f64 = 1e-4;
const CURVATURE_C2: f64 = 0.9;
const MAX_LINE_SEARCH_STEPS: usize = 20;
const MAX_ZOOM_STEPS: usize = 30;

pub(crate) struct Options {
    /// Quasi-Newton history length.
    pub memory: usize,
    pub max_iters: usize,
    /// Stop when the gradient 2-norm falls below this.
    pub grad_tol: f64,
    /// Stop when the per-step relative objective decrease falls below this.
    pub rel_obj_tol: f64,
}

pub(crate) struct Outcome {
    pub x: Vec<f64>,
    /// Objective at the start point and after every accepted step.
    pub trace: Vec<f64>,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_finite(iter: usize, value: f64, grad: &[f64]) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::Numerical(format!(
            "objective became non-finite ({value}) at iterate {iter}"
        )));
    }
    if let Some(pos) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numerical(format!(
            "gradient component {pos} became non-finite at iterate {iter} (objective {value})"
        )));
    }
    Ok(())
}

/// Minimises `eval` (value and gradient) starting from `x0`.
pub(crate) fn minimize<F>(mut eval: F, x0: Vec<f64>, opts: &Options) -> Result<Outcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = x0;
    let (mut f, mut g) = eval(&x)?;
    check_finite(0, f, &g)?;
    let mut trace = vec![f];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut converged = false;

    for iter in 0..opts.max_iters {
        if norm(&g) < opts.grad_tol {
            converged = true;
            break;
        }

        let mut dir = two_loop_direction(&g, &history);
        if dot(&dir, &g) >= 0.0 {
            // Not a descent direction; drop the curvature history.
            history.clear();
            dir = g.iter().map(|v| -v).collect();
        }

        let mut found = line_search(&mut eval, &x, f, &g, &dir)?;
        if found.is_none() && !history.is_empty() {
            // A stale curvature model can stall the search; retry once along
            // the raw gradient.
            history.clear();
            let steepest: Vec<f64> = g.iter().map(|v| -v).collect();
            found = line_search(&mut eval, &x, f, &g, &steepest)?;
        }
        let Some(step) = found else {
            // No acceptable step length: numerically stationary.
            converged = true;
            break;
        };
        check_finite(iter + 1, step.value, &step.grad)?;

        let s: Vec<f64> = step.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = step.grad.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-10 * norm(&s) * norm(&yv) {
            if history.len() == opts.memory.max(1) {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }

        let rel_decrease = (f - step.value) / f.abs().max(1.0);
        x = step.x;
        f = step.value;
        g = step.grad;
        trace.push(f);
        debug_assert_eq!(x.len(), n);

        if rel_decrease < opts.rel_obj_tol {
            converged = true;
            break;
        }
    }

    Ok(Outcome {
        x,
        trace,
        converged,
    })
}

fn two_loop_direction(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let alpha = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= alpha * yi;
        }
        alphas.push(alpha);
    }
    let scale = history
        .back()
        .map(|(s, y, _)| dot(s, y) / dot(y, y))
        .unwrap_or(1.0);
    for qi in q.iter_mut() {
        *qi *= scale;
    }
    for ((s, y, rho), alpha) in history.iter().zip(alphas.iter().rev()) {
        let beta = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (alpha - beta) * si;
        }
    }
    for qi in q.iter_mut() {
        *qi = -*qi;
    }
    q
}

struct Accepted {
    x: Vec<f64>,
    value: f64,
    grad: Vec<f64>,
}

struct Probe {
    alpha: f64,
    phi: f64,
    dphi: f64,
    x: Vec<f64>,
    grad: Vec<f64>,
}

/// Strong Wolfe bracket/zoom search along `dir`. Returns `None` when no
/// acceptable step exists within the probe budget.
fn line_search<F>(
    eval: &mut F,
    x: &[f64],
    phi0: f64,
    g0: &[f64],
    dir: &[f64],
) -> Result<Option<Accepted>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let dphi0 = dot(g0, dir);
    if dphi0 >= 0.0 {
        return Ok(None);
    }

    let mut probe = |alpha: f64| -> Result<Probe> {
        let xt: Vec<f64> = x.iter().zip(dir).map(|(xi, di)| xi + alpha * di).collect();
        let (value, grad) = eval(&xt)?;
        let phi = if value.is_finite() {
            value
        } else {
            f64::INFINITY
        };
        let dphi = dot(&grad, dir);
        Ok(Probe {
            alpha,
            phi,
            dphi,
            x: xt,
            grad,
        })
    };

    let armijo = |p: &Probe| p.phi <= phi0 + ARMIJO_C1 * p.alpha * dphi0;
    let curvature = |p: &Probe| p.dphi.abs() <= -CURVATURE_C2 * dphi0;

    let mut prev: Option<Probe> = None;
    let mut alpha = 1.0;
    for step in 0..MAX_LINE_SEARCH_STEPS {
        let cand = probe(alpha)?;
        let prev_phi = prev.as_ref().map_or(phi0, |p| p.phi);
        if !armijo(&cand) || (step > 0 && cand.phi >= prev_phi) {
            let lo = prev.take().unwrap_or(Probe {
                alpha: 0.0,
                phi: phi0,
                dphi: dphi0,
                x: x.to_vec(),
                grad: g0.to_vec(),
            });
            return zoom(&mut probe, phi0, lo, cand, &armijo, &curvature);
        }
        if curvature(&cand) {
            return Ok(Some(Accepted {
                x: cand.x,
                value: cand.phi,
                grad: cand.grad,
            }));
        }
        if cand.dphi >= 0.0 {
            let lo = prev.take().unwrap_or(Probe {
                alpha: 0.0,
                phi: phi0,
                dphi: dphi0,
                x: x.to_vec(),
                grad: g0.to_vec(),
            });
            return zoom(&mut probe, phi0, cand, lo, &armijo, &curvature);
        }
        prev = Some(cand);
        alpha *= 2.0;
    }
    Ok(None)
}

fn zoom<P>(
    probe: &mut P,
    phi0: f64,
    mut lo: Probe,
    mut hi: Probe,
    armijo: &dyn Fn(&Probe) -> bool,
    curvature: &dyn Fn(&Probe) -> bool,
) -> Result<Option<Accepted>>
where
    P: FnMut(f64) -> Result<Probe>,
{
    for _ in 0..MAX_ZOOM_STEPS {
        let alpha = 0.5 * (lo.alpha + hi.alpha);
        if (hi.alpha - lo.alpha).abs() < 1e-14 * lo.alpha.abs().max(1.0) {
            break;
        }
        let cand = probe(alpha)?;
        if !armijo(&cand) || cand.phi >= lo.phi {
            hi = cand;
        } else {
            if curvature(&cand) {
                return Ok(Some(Accepted {
                    x: cand.x,
                    value: cand.phi,
                    grad: cand.grad,
                }));
            }
            if cand.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                hi = std::mem::replace(&mut lo, cand);
            } else {
                lo = cand;
            }
        }
    }
    // Settle for the best sufficient-decrease point found, if any.
    if lo.alpha > 0.0 && armijo(&lo) && lo.phi < phi0 {
        return Ok(Some(Accepted {
            x: lo.x,
            value: lo.phi,
            grad: lo.grad,
        }));
    }
    Ok(None)
}
