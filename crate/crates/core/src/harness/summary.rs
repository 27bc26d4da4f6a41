//! Aggregates over replicates and the reference regret bounds.

use std::f64::consts::E;

use super::run::{Prepared, RegretTrace};
use crate::learners::LearnerKind;

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub experiment_id: String,
    pub learner: String,
    pub env: String,
    pub horizon: usize,
    pub replicates: usize,
    pub capacity_lower: f64,
    pub capacity_upper: f64,
    pub mean_final_regret: f64,
    pub stderr_final_regret: f64,
    pub thm_bound: f64,
}

pub const SUMMARY_COLUMNS: [&str; 10] = [
    "experiment_id",
    "learner",
    "env",
    "T",
    "replicates",
    "capacity_lower",
    "capacity_upper",
    "mean_final_regret",
    "stderr_final_regret",
    "thm_bound",
];

/// Sample mean and standard error of the mean; the error is 0 for fewer
/// than two values.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `2·max{√(e·C·T·ln N), ln N}`.
pub fn fixed_capacity_bound(capacity: f64, horizon: usize, n: usize) -> f64 {
    let ln_n = (n as f64).ln();
    2.0 * (E * capacity * horizon as f64 * ln_n).sqrt().max(ln_n)
}

/// `2√(e·C·T·ln N) + ln N + √(e·J·ln N)`, with `J` the final running
/// maximum of `V`.
pub fn adaptive_bound(capacity: f64, j: f64, horizon: usize, n: usize) -> f64 {
    let ln_n = (n as f64).ln();
    2.0 * (E * capacity * horizon as f64 * ln_n).sqrt() + ln_n + (E * j * ln_n).sqrt()
}

/// `3√(2e·C·T·ln(eT)·ln(eN)) + ln N`.
pub fn bobw_bound(capacity: f64, horizon: usize, n: usize) -> f64 {
    let t = horizon as f64;
    let n = n as f64;
    3.0 * (2.0 * E * capacity * t * (E * t).ln() * (E * n).ln()).sqrt() + n.ln()
}

/// `ln N/η + (e/2)·η·C·T`, the fixed-rate bound.
pub fn constant_rate_bound(eta: f64, capacity: f64, horizon: usize, n: usize) -> f64 {
    (n as f64).ln() / eta + 0.5 * E * eta * capacity * horizon as f64
}

/// `√(2·C_KL·T)`.
pub fn omd_bound(kl_capacity: f64, horizon: usize) -> f64 {
    (2.0 * kl_capacity * horizon as f64).sqrt()
}

/// `2√(N·T·ln N)`.
pub fn exp3_bound(horizon: usize, n: usize) -> f64 {
    let n = n as f64;
    2.0 * (n * horizon as f64 * n.ln()).sqrt()
}

/// Reference bound for the configured learner. Uses the capacity the
/// schedule was given, or the certified upper end of the bracket.
pub fn thm_bound(prep: &Prepared) -> f64 {
    let n = prep.theta.num_policies();
    let t = prep.horizon();
    let c = prep.schedule_capacity.unwrap_or(prep.capacity.upper);
    match prep.kind {
        LearnerKind::Exp4Fixed => fixed_capacity_bound(c, t, n),
        LearnerKind::Exp4Adaptive => adaptive_bound(c, prep.theta.s_and_v().1, t, n),
        LearnerKind::Exp4Bobw => bobw_bound(c, t, n),
        LearnerKind::Exp4Const => constant_rate_bound(prep.constant_rate().unwrap_or(1.0), prep.capacity.upper, t, n),
        LearnerKind::OmdFull => omd_bound(c, t),
        LearnerKind::Exp3Direct => exp3_bound(t, n),
    }
}

pub fn summarize(prep: &Prepared, traces: &[RegretTrace]) -> Summary {
    let finals: Vec<f64> = traces.iter().map(RegretTrace::final_regret).collect();
    let (mean, stderr) = mean_stderr(&finals);
    Summary {
        experiment_id: prep.id().to_string(),
        learner: prep.kind.name().to_string(),
        env: prep.env.kind_name().to_string(),
        horizon: prep.horizon(),
        replicates: traces.len(),
        capacity_lower: prep.capacity.lower,
        capacity_upper: prep.capacity.upper,
        mean_final_regret: mean,
        stderr_final_regret: stderr,
        thm_bound: thm_bound(prep),
    }
}

/// Mean pseudo-regret across replicates at each recorded round.
pub fn mean_curve(traces: &[RegretTrace]) -> Vec<(usize, f64)> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    (0..first.rows.len())
        .map(|k| {
            let sum: f64 = traces.iter().map(|tr| tr.rows[k].cum_pseudo_regret).sum();
            (first.rows[k].t, sum / traces.len() as f64)
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`. Points with a non-positive
/// coordinate are skipped; `None` with fewer than two usable points.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Growth of the mean curve per decade of `t`: pairs `(t, R(t)/R(t/10))`
/// for every recorded `t` whose tenth is also recorded.
pub fn per_decade_growth(curve: &[(usize, f64)]) -> Vec<(usize, f64)> {
    curve
        .iter()
        .filter(|(t, _)| t % 10 == 0)
        .filter_map(|&(t, r)| {
            curve.iter().find(|(s, _)| *s == t / 10).map(|&(_, r0)| (t, r / r0))
        })
        .collect()
}
