//! Soft-DTW baseline: the DTW recursion with its hard minimum replaced by a
//! softmin. Shares the cost/alignment matrix core with the MSM relaxation;
//! `cost_c` in the parameters is ignored.

use super::{backward_recursion, check_matrix, check_pair, AlignmentMatrix, CostMatrix, Move};
use crate::elastic::softmin3;
use crate::error::Result;
use crate::series::{SoftParams, TimeSeries};

/// Forward recursion: every cell adds its squared pointwise cost, interior
/// cells softmin over the three predecessors, boundaries accumulate.
pub fn forward(x: &TimeSeries, y: &TimeSeries, params: &SoftParams) -> Result<CostMatrix> {
    params.validate()?;
    let m = check_pair(x, y)?;
    let (xs, ys) = (x.values(), y.values());
    let gamma = params.gamma;
    let d = |i: usize, j: usize| (xs[i] - ys[j]).powi(2);
    let mut c = vec![0.0; m * m];
    c[0] = d(0, 0);
    for i in 1..m {
        c[i * m] = d(i, 0) + c[(i - 1) * m];
    }
    for j in 1..m {
        c[j] = d(0, j) + c[j - 1];
    }
    for i in 1..m {
        for j in 1..m {
            c[i * m + j] = d(i, j)
                + softmin3(
                    c[(i - 1) * m + (j - 1)],
                    c[(i - 1) * m + j],
                    c[i * m + (j - 1)],
                    gamma,
                );
        }
    }
    Ok(CostMatrix::from_raw(m, c, *params))
}

pub fn objective(x: &TimeSeries, y: &TimeSeries, params: &SoftParams) -> Result<f64> {
    Ok(forward(x, y, params)?.objective())
}

/// Backward recursion: the transition into any cell is its own squared
/// pointwise cost, whatever the direction.
pub fn alignment(x: &TimeSeries, y: &TimeSeries, cost: &CostMatrix) -> Result<AlignmentMatrix> {
    check_matrix(cost, x, y)?;
    let (xs, ys) = (x.values(), y.values());
    Ok(backward_recursion(cost, move |r, c, _mv: Move| {
        (xs[r] - ys[c]).powi(2)
    }))
}

/// Objective and gradient with respect to the first series:
/// `∂F/∂x_i = Σ_j 2(x_i - y_j)·A_{i,j}`.
pub fn gradient(x: &TimeSeries, y: &TimeSeries, params: &SoftParams) -> Result<(f64, Vec<f64>)> {
    let m = check_pair(x, y)?;
    let cost = forward(x, y, params)?;
    let align = alignment(x, y, &cost)?;
    let (xs, ys) = (x.values(), y.values());
    let mut grad = vec![0.0; m];
    for (i, g) in grad.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, yv) in ys.iter().enumerate() {
            acc += 2.0 * (xs[i] - yv) * align.get(i, j);
        }
        *g = acc;
    }
    Ok((cost.objective(), grad))
}

/// Debiased objective, non-negative and zero on identical inputs.
pub fn divergence(x: &TimeSeries, y: &TimeSeries, params: &SoftParams) -> Result<f64> {
    check_pair(x, y)?;
    let fxy = objective(x, y, params)?;
    let fxx = objective(x, x, params)?;
    let fyy = objective(y, y, params)?;
    Ok(fxy - 0.5 * fxx - 0.5 * fyy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elastic::dtw_distance;
    use crate::verify;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ts(v: &[f64]) -> TimeSeries {
        TimeSeries::new(v.to_vec()).unwrap()
    }

    fn params(gamma: f64) -> SoftParams {
        SoftParams::new(gamma, 1.0).unwrap()
    }

    #[test]
    fn single_point_is_squared_difference() {
        assert_eq!(
            objective(&ts(&[2.0]), &ts(&[0.5]), &params(0.3)).unwrap(),
            2.25
        );
    }

    #[test]
    fn zero_pair_equals_minus_ln_three() {
        let x = ts(&[0.0, 0.0]);
        let f = objective(&x, &x, &params(1.0)).unwrap();
        assert!((f - (-(3.0f64.ln()))).abs() < 1e-12, "f = {f}");
        assert!(f < 0.0); // the soft objective can go negative
    }

    #[test]
    fn tiny_gamma_recovers_hard_dtw() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let p = params(1e-8);
        for _ in 0..30 {
            let m = rng.gen_range(1..=8);
            let x = ts(&(0..m).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<_>>());
            let y = ts(&(0..m).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<_>>());
            let soft = objective(&x, &y, &p).unwrap();
            let hard = dtw_distance(&x, &y).unwrap();
            assert!((soft - hard).abs() <= 1e-5, "{soft} vs {hard}");
        }
    }

    #[test]
    fn forward_matches_logsumexp_path_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..30 {
            let m = rng.gen_range(1..=6);
            let x = ts(&(0..m).map(|_| rng.gen_range(-1.5..1.5)).collect::<Vec<_>>());
            let y = ts(&(0..m).map(|_| rng.gen_range(-1.5..1.5)).collect::<Vec<_>>());
            for gamma in [1.0, 0.1, 0.01] {
                let p = params(gamma);
                let f = objective(&x, &y, &p).unwrap();
                let oracle =
                    verify::logsumexp_path_objective(&x, &y, &p, verify::EdgeCostKind::DtwSquared)
                        .unwrap();
                let tol = 1e-6 * oracle.abs().max(1.0);
                assert!((f - oracle).abs() <= tol, "γ={gamma}: {f} vs {oracle}");
            }
        }
    }

    #[test]
    fn alignment_mass_and_occupancy() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..15 {
            let m = rng.gen_range(2..=5);
            let x = ts(&(0..m).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>());
            let y = ts(&(0..m).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>());
            let p = params(0.3);
            let cost = forward(&x, &y, &p).unwrap();
            let a = alignment(&x, &y, &cost).unwrap();
            assert_eq!(a.get(m - 1, m - 1), 1.0);
            assert!((a.get(0, 0) - 1.0).abs() <= 1e-8);
            let occ = verify::path_occupancy(&x, &y, &p, verify::EdgeCostKind::DtwSquared).unwrap();
            for i in 0..m {
                for j in 0..m {
                    assert!((a.get(i, j) - occ[i * m + j]).abs() < 1e-6);
                    assert!(a.get(i, j) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn alignment_collapses_to_diagonal_for_identical_series_and_tiny_gamma() {
        let x = ts(&[0.4, -1.1, 0.8, 2.0]);
        let p = params(1e-4);
        let cost = forward(&x, &x, &p).unwrap();
        let a = alignment(&x, &x, &cost).unwrap();
        for i in 0..x.len() {
            for j in 0..x.len() {
                if i == j {
                    assert!(a.get(i, j) >= 0.99);
                } else {
                    assert!(a.get(i, j) <= 0.01);
                }
            }
        }
    }

    #[test]
    fn gradient_constant_pair_is_zero() {
        let x = TimeSeries::constant(1.5, 7).unwrap();
        let (_, grad) = gradient(&x, &x, &params(0.1)).unwrap();
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gradient_single_point() {
        let (f, grad) = gradient(&ts(&[3.0]), &ts(&[1.0]), &params(0.1)).unwrap();
        assert_eq!(f, 4.0);
        assert_eq!(grad, vec![4.0]); // 2(x₁-y₁)·A₁₁
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for _ in 0..25 {
            let m = rng.gen_range(2..=10);
            let x = ts(&(0..m).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<_>>());
            let y = ts(&(0..m).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<_>>());
            for gamma in [1.0, 0.1, 0.01] {
                let p = params(gamma);
                let (_, grad) = gradient(&x, &y, &p).unwrap();
                let fd =
                    verify::fd_gradient(|v| objective(&ts(v), &y, &p).unwrap(), x.values(), 1e-5)
                        .unwrap();
                let num: f64 = grad
                    .iter()
                    .zip(&fd)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let den: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                assert!(num / den <= 1e-4, "γ={gamma} m={m}: rel L2 {}", num / den);
            }
        }
    }

    #[test]
    fn divergence_zero_on_identical_inputs() {
        let x = ts(&[0.2, 1.4, -0.6]);
        assert!(divergence(&x, &x, &params(0.1)).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn divergence_matches_path_oracle() {
        let p = params(0.1);
        let x = ts(&[0.0, 0.0]);
        let y = ts(&[1.0, 1.0]);
        let kind = verify::EdgeCostKind::DtwSquared;
        let expected = verify::logsumexp_path_objective(&x, &y, &p, kind).unwrap()
            - 0.5 * verify::logsumexp_path_objective(&x, &x, &p, kind).unwrap()
            - 0.5 * verify::logsumexp_path_objective(&y, &y, &p, kind).unwrap();
        let got = divergence(&x, &y, &p).unwrap();
        assert!((got - expected).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn divergence_is_nonnegative(
            (x, y) in (1usize..12).prop_flat_map(|m| (
                prop::collection::vec(-3.0f64..3.0, m),
                prop::collection::vec(-3.0f64..3.0, m),
            )),
            gamma in 0.05f64..2.0,
        ) {
            let p = params(gamma);
            let d = divergence(&ts(&x), &ts(&y), &p).unwrap();
            prop_assert!(d >= -1e-9, "d = {d}");
        }
    }
}
