//! Self-test harness: desk-scale property and oracle checks runnable from
//! the CLI, plus a runtime-scaling report. A fault-injection switch corrupts
//! the gradient under test to prove the checks can fail.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::averaging::{soft_barycentre, OptimizerConfig, SoftKind};
use crate::elastic::{dtw_distance, msm_distance, softmin};
use crate::series::{SoftParams, TimeSeries, TimeSeriesSet};
use crate::soft;
use crate::verify;

#[derive(Debug, Clone, Copy, Default)]
pub struct SelftestOptions {
    pub seed: u64,
    /// Perturb the analytic gradient before checking it, to prove the
    /// gradient check can fail.
    pub corrupt_gradient: bool,
    /// Skip the wall-clock scaling measurement (it dominates the runtime).
    pub skip_timing: bool,
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: impl Into<String>) -> CheckOutcome {
    CheckOutcome {
        name,
        passed,
        detail: detail.into(),
    }
}

fn random_series(rng: &mut ChaCha8Rng, m: usize) -> TimeSeries {
    TimeSeries::new((0..m).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
}

fn gate_safe_pair(rng: &mut ChaCha8Rng, m: usize) -> (TimeSeries, TimeSeries) {
    loop {
        let x = random_series(rng, m);
        let y = random_series(rng, m);
        if verify::min_gate_margin(&x, &y) >= 1e-3 {
            return (x, y);
        }
    }
}

/// Runs every check and returns one outcome per line of the report.
pub fn run(opts: &SelftestOptions) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checks = vec![
        softmin_bounds(&mut rng),
        hard_distance_oracle(&mut rng),
        msm_triangle(&mut rng),
        path_measure(&mut rng, SoftKind::SoftMsm),
        path_measure(&mut rng, SoftKind::SoftDtw),
        gradient_check(&mut rng, SoftKind::SoftMsm, opts.corrupt_gradient),
        gradient_check(&mut rng, SoftKind::SoftDtw, false),
        alignment_mass(&mut rng),
        non_metric_witness(),
        divergence_checks(&mut rng),
        hard_limit(&mut rng),
        determinism(&mut rng),
    ];
    if !opts.skip_timing {
        checks.push(runtime_scaling());
    }
    checks
}

fn softmin_bounds(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let k = rng.gen_range(1..6);
        let values: Vec<f64> = (0..k).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let gamma = rng.gen_range(0.01..2.0);
        let s = softmin(&values, gamma).unwrap();
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let over = (s - min).max(min - s - gamma * (k as f64).ln());
        worst = worst.max(over);
    }
    outcome(
        "softmin bounded by min with gamma*ln(k) gap",
        worst <= 1e-12,
        format!("worst excess {worst:.2e}"),
    )
}

fn hard_distance_oracle(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let p = SoftParams::new(1.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let m = rng.gen_range(1..=5);
        let x = random_series(rng, m);
        let y = random_series(rng, m);
        let dtw = dtw_distance(&x, &y).unwrap();
        let dtw_oracle =
            verify::min_path_cost(&x, &y, verify::EdgeCostKind::DtwSquared, None).unwrap();
        let msm = msm_distance(&x, &y, 1.0).unwrap();
        let msm_oracle =
            verify::min_path_cost(&x, &y, verify::EdgeCostKind::MsmHard, Some(&p)).unwrap();
        worst = worst
            .max((dtw - dtw_oracle).abs())
            .max((msm - msm_oracle).abs());
    }
    outcome(
        "hard distances equal path-enumeration minimum",
        worst <= 1e-9,
        format!("worst gap {worst:.2e}"),
    )
}

fn msm_triangle(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let m = rng.gen_range(1..=8);
        let x = random_series(rng, m);
        let y = random_series(rng, m);
        let z = random_series(rng, m);
        let dxy = msm_distance(&x, &y, 1.0).unwrap();
        let dxz = msm_distance(&x, &z, 1.0).unwrap();
        let dzy = msm_distance(&z, &y, 1.0).unwrap();
        worst = worst.max(dxy - dxz - dzy);
    }
    outcome(
        "msm triangle inequality",
        worst <= 1e-9,
        format!("worst violation {worst:.2e}"),
    )
}

fn path_measure(rng: &mut ChaCha8Rng, kind: SoftKind) -> CheckOutcome {
    let name = match kind {
        SoftKind::SoftMsm => "soft-msm forward equals log-sum-exp over paths",
        SoftKind::SoftDtw => "soft-dtw forward equals log-sum-exp over paths",
    };
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let m = rng.gen_range(1..=5);
        let x = random_series(rng, m);
        let y = random_series(rng, m);
        let p = SoftParams::new(0.1, 1.0).unwrap();
        let (f, edge) = match kind {
            SoftKind::SoftMsm => (
                soft::msm::objective(&x, &y, &p).unwrap(),
                verify::EdgeCostKind::SoftMsmEdges,
            ),
            SoftKind::SoftDtw => (
                soft::dtw::objective(&x, &y, &p).unwrap(),
                verify::EdgeCostKind::DtwSquared,
            ),
        };
        let oracle = verify::logsumexp_path_objective(&x, &y, &p, edge).unwrap();
        worst = worst.max((f - oracle).abs() / oracle.abs().max(1.0));
    }
    outcome(
        name,
        worst <= 1e-6,
        format!("worst relative gap {worst:.2e}"),
    )
}

fn gradient_check(rng: &mut ChaCha8Rng, kind: SoftKind, corrupt: bool) -> CheckOutcome {
    let name = match kind {
        SoftKind::SoftMsm => "soft-msm gradient matches finite differences",
        SoftKind::SoftDtw => "soft-dtw gradient matches finite differences",
    };
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let m = rng.gen_range(3..=8);
        let (x, y) = gate_safe_pair(rng, m);
        let p = SoftParams::new(0.1, 1.0).unwrap();
        let (_, mut grad) = match kind {
            SoftKind::SoftMsm => soft::msm::gradient(&x, &y, &p).unwrap(),
            SoftKind::SoftDtw => soft::dtw::gradient(&x, &y, &p).unwrap(),
        };
        if corrupt {
            grad[0] += 1e-3;
        }
        let fd = verify::fd_gradient(
            |v| {
                let xv = TimeSeries::new(v.to_vec()).unwrap();
                match kind {
                    SoftKind::SoftMsm => soft::msm::objective(&xv, &y, &p).unwrap(),
                    SoftKind::SoftDtw => soft::dtw::objective(&xv, &y, &p).unwrap(),
                }
            },
            x.values(),
            1e-5,
        )
        .unwrap();
        let num: f64 = grad
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let den: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        worst = worst.max(num / den);
    }
    outcome(
        name,
        worst <= 1e-4,
        format!("worst relative L2 error {worst:.2e}"),
    )
}

fn alignment_mass(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    let mut min_entry: f64 = 0.0;
    for _ in 0..10 {
        let m = rng.gen_range(2..=10);
        let x = random_series(rng, m);
        let y = random_series(rng, m);
        let p = SoftParams::new(0.1, 1.0).unwrap();
        for soft_kind in [SoftKind::SoftMsm, SoftKind::SoftDtw] {
            let (corner, a) = match soft_kind {
                SoftKind::SoftMsm => {
                    let c = soft::msm::forward(&x, &y, &p).unwrap();
                    let a = soft::msm::alignment(&x, &y, &c).unwrap();
                    (a.get(0, 0), a)
                }
                SoftKind::SoftDtw => {
                    let c = soft::dtw::forward(&x, &y, &p).unwrap();
                    let a = soft::dtw::alignment(&x, &y, &c).unwrap();
                    (a.get(0, 0), a)
                }
            };
            worst = worst.max((corner - 1.0).abs());
            for row in a.rows() {
                for &v in row {
                    min_entry = min_entry.min(v);
                }
            }
        }
    }
    outcome(
        "alignment mass conservation",
        worst <= 1e-8 && min_entry >= 0.0,
        format!("worst |A11 - 1| = {worst:.2e}, min entry {min_entry:.2e}"),
    )
}

fn non_metric_witness() -> CheckOutcome {
    // Pairs keep 2t/γ within f64 resolution so negativity is representable.
    let x = TimeSeries::new(vec![0.0, 0.0]).unwrap();
    let mut worst: f64 = 0.0;
    let mut all_negative = true;
    for (gamma, cost_c) in [
        (1.0, 0.5),
        (1.0, 1.0),
        (1.0, 2.0),
        (0.5, 1.0),
        (0.1, 0.5),
        (0.1, 1.0),
    ] {
        let p = SoftParams::new(gamma, cost_c).unwrap();
        let f = soft::msm::objective(&x, &x, &p).unwrap();
        let t = cost_c - 0.5 * gamma * 2.0f64.ln();
        let closed = -gamma * (1.0 + 2.0 * (-2.0 * t / gamma).exp()).ln();
        worst = worst.max((f - closed).abs());
        all_negative &= f < 0.0;
    }
    outcome(
        "zero-pair objective matches closed form and is negative",
        worst <= 1e-9 && all_negative,
        format!("worst gap {worst:.2e}"),
    )
}

fn divergence_checks(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let p = SoftParams::new(0.1, 1.0).unwrap();
    let mut worst_self: f64 = 0.0;
    let mut worst_neg: f64 = 0.0;
    for _ in 0..30 {
        let m = rng.gen_range(1..=8);
        let x = random_series(rng, m);
        let y = random_series(rng, m);
        worst_self = worst_self
            .max(soft::msm::divergence(&x, &x, &p).unwrap().abs())
            .max(soft::dtw::divergence(&x, &x, &p).unwrap().abs());
        worst_neg = worst_neg.max(-soft::dtw::divergence(&x, &y, &p).unwrap());
    }
    outcome(
        "divergences vanish on identical inputs; soft-dtw divergence is nonnegative",
        worst_self <= 1e-10 && worst_neg <= 1e-9,
        format!("worst self {worst_self:.2e}, worst negativity {worst_neg:.2e}"),
    )
}

fn hard_limit(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let p = SoftParams::new(1e-6, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let m = rng.gen_range(1..=8);
        let (x, y) = gate_safe_pair(rng, m);
        let soft = soft::msm::objective(&x, &y, &p).unwrap();
        let hard = verify::hard_limit_objective(&x, &y, 1.0).unwrap();
        worst = worst.max((soft - hard).abs());
    }
    outcome(
        "tiny-gamma objective matches hard-limit recursion",
        worst <= 1e-3,
        format!("worst gap {worst:.2e}"),
    )
}

fn determinism(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let set = TimeSeriesSet::new((0..5).map(|_| random_series(rng, 10)).collect()).unwrap();
    let p = SoftParams::new(0.1, 1.0).unwrap();
    let config = OptimizerConfig {
        max_iters: 25,
        ..OptimizerConfig::default()
    };
    let a = soft_barycentre(&set, SoftKind::SoftMsm, &p, &config).unwrap();
    let b = soft_barycentre(&set, SoftKind::SoftMsm, &p, &config).unwrap();
    let identical = a.barycentre == b.barycentre && a.loss_trace == b.loss_trace;
    outcome(
        "repeated barycentre runs are bit-identical",
        identical,
        format!("{} iterations", a.iterations),
    )
}

/// Wall-time ratios of forward+backward passes when the series length
/// doubles; quadratic work means factors near 4.
fn runtime_scaling() -> CheckOutcome {
    let times: Vec<f64> = [256usize, 512, 1024]
        .iter()
        .map(|&m| time_forward_backward(m))
        .collect();
    let r1 = times[1] / times[0];
    let r2 = times[2] / times[1];
    let in_range = |r: f64| (3.0..=5.5).contains(&r);
    outcome(
        "forward+backward wall time scales quadratically in m",
        in_range(r1) && in_range(r2),
        format!("512/256 = {r1:.2}, 1024/512 = {r2:.2}"),
    )
}

fn time_forward_backward(m: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(m as u64);
    let x = random_series(&mut rng, m);
    let y = random_series(&mut rng, m);
    let p = SoftParams::new(0.1, 1.0).unwrap();
    // Warm-up.
    let c = soft::msm::forward(&x, &y, &p).unwrap();
    let _ = soft::msm::alignment(&x, &y, &c).unwrap();
    let mut samples: Vec<f64> = (0..3)
        .map(|_| {
            let start = Instant::now();
            let c = soft::msm::forward(&x, &y, &p).unwrap();
            let a = soft::msm::alignment(&x, &y, &c).unwrap();
            std::hint::black_box(a.get(0, 0));
            start.elapsed().as_secs_f64()
        })
        .collect();
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    samples[1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_run_passes_every_check() {
        let opts = SelftestOptions {
            skip_timing: true, // timing is exercised by the acceptance suite
            ..SelftestOptions::default()
        };
        let checks = run(&opts);
        assert!(!checks.is_empty());
        for c in &checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let opts = SelftestOptions {
            corrupt_gradient: true,
            skip_timing: true,
            ..SelftestOptions::default()
        };
        let checks = run(&opts);
        let gradient_check = checks
            .iter()
            .find(|c| c.name == "soft-msm gradient matches finite differences")
            .unwrap();
        assert!(!gradient_check.passed);
    }
}
