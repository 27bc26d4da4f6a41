//! EXP4 over a policy set with mediator feedback.
//!
//! Weights are kept in FTRL form: cumulative importance-weighted loss
//! estimates, turned into a play distribution by a softmax at the current
//! learning rate. The estimate for policy θ after observing `(X_t, ℓ_t(X_t))`
//! is `θ(X_t)·ℓ_t(X_t)/ψ_t(X_t)` with `ψ_t = Σ_θ p_t(θ)θ`, so an update
//! touches only column `X_t` of the set.

use crate::capacity::q_tau_raw;
use crate::divergence::entropy_raw;
use crate::error::{check_dim, Error, Result};
use crate::policy::PolicySet;
use crate::prob::{MixtureWeights, OutcomeDistribution};

/// Learning-rate schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScheduleKind {
    /// `η_t = min{1, √(ln N/(e·C·t))}` for a capacity value or upper bound `C`.
    FixedCapacity { capacity: f64 },
    /// `η_t = √(ln N/(ln N + e(Z_{t−1} + J_t)))` with `Z` the running sum of
    /// per-round `Q_{p_s}(Θ_s)` and `J_t = max_{s≤t} V(Θ_s)`.
    Adaptive,
    /// `η_t = min{1, 1/β_t}` with `β_1 = γ = √(e·C·ln(eT)/(2 ln N))` and
    /// `β_{t+1} = β_t + γ/√(1 + Σ_{s≤t} H(p_s)/ln N)`.
    Bobw { capacity: f64, horizon: usize },
    Constant { eta: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Exp4State {
    cum_loss_estimates: Vec<f64>,
    t: usize,
    schedule: ScheduleKind,
    z_accum: f64,
    j_running: f64,
    gamma: f64,
    beta: f64,
    entropy_accum: f64,
}

pub fn rate_fixed_capacity(t: usize, c: f64, n: usize) -> f64 {
    if c <= 0.0 {
        return 1.0;
    }
    (((n as f64).ln() / (std::f64::consts::E * c * t as f64)).sqrt()).min(1.0)
}

pub fn rate_adaptive(z_prev: f64, j_t: f64, n: usize) -> f64 {
    let ln_n = (n as f64).ln();
    (ln_n / (ln_n + std::f64::consts::E * (z_prev + j_t))).sqrt()
}

pub fn bobw_gamma(capacity: f64, horizon: usize, n: usize) -> f64 {
    let e = std::f64::consts::E;
    (e * capacity * (e * horizon as f64).ln() / (2.0 * (n as f64).ln())).sqrt()
}

pub fn rate_bobw(beta: f64) -> f64 {
    (1.0 / beta).min(1.0)
}

pub fn bobw_advance(beta: f64, gamma: f64, entropy_accum: f64, n: usize) -> f64 {
    beta + gamma / (1.0 + entropy_accum / (n as f64).ln()).sqrt()
}

/// `p(θ) ∝ exp(−η·L(θ))`, shifted by the minimum of `L` so nothing overflows.
pub fn softmax(cum: &[f64], eta: f64) -> Vec<f64> {
    let low = cum.iter().copied().fold(f64::INFINITY, f64::min);
    let mut p: Vec<f64> = cum.iter().map(|l| (-eta * (l - low)).exp()).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    p
}

fn check_estimate_inputs(x: usize, loss: f64, psi: &OutcomeDistribution) -> Result<f64> {
    if x >= psi.len() {
        return Err(Error::InvalidArgument(format!("outcome {} out of range", x + 1)));
    }
    if psi[x] <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "outcome {} was observed but has zero mixture probability",
            x + 1
        )));
    }
    if !loss.is_finite() {
        return Err(Error::InvalidArgument(format!("loss {loss} is not finite")));
    }
    Ok(psi[x])
}

/// `θ(x)·loss/ψ(x)`.
pub fn loss_estimate(
    theta_row: &OutcomeDistribution,
    x: usize,
    observed_loss: f64,
    psi: &OutcomeDistribution,
) -> Result<f64> {
    check_dim(psi.len(), theta_row.len())?;
    let psi_x = check_estimate_inputs(x, observed_loss, psi)?;
    Ok(theta_row[x] * observed_loss / psi_x)
}

/// `(θ(x) − ψ(x))·loss/ψ(x)`, the estimate of `ℓ(θ)` minus the learner's mean loss.
pub fn shifted_estimate(
    theta_row: &OutcomeDistribution,
    x: usize,
    observed_loss: f64,
    psi: &OutcomeDistribution,
) -> Result<f64> {
    check_dim(psi.len(), theta_row.len())?;
    let psi_x = check_estimate_inputs(x, observed_loss, psi)?;
    Ok((theta_row[x] - psi_x) * observed_loss / psi_x)
}

impl Exp4State {
    pub fn new(n: usize, schedule: ScheduleKind) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 policies, got {n}")));
        }
        let mut gamma = 0.0;
        match schedule {
            ScheduleKind::FixedCapacity { capacity } if !(capacity >= 0.0 && capacity.is_finite()) => {
                return Err(Error::InvalidArgument(format!("capacity {capacity} must be finite and >= 0")));
            }
            ScheduleKind::Bobw { capacity, horizon } => {
                if horizon == 0 {
                    return Err(Error::InvalidArgument("horizon must be >= 1".into()));
                }
                gamma = bobw_gamma(capacity, horizon, n);
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "best-of-both-worlds schedule needs capacity > 0, got {capacity}; use a constant rate instead"
                    )));
                }
            }
            ScheduleKind::Constant { eta } if !(eta > 0.0 && eta.is_finite()) => {
                return Err(Error::InvalidArgument(format!("constant rate {eta} must be positive")));
            }
            _ => {}
        }
        Ok(Exp4State {
            cum_loss_estimates: vec![0.0; n],
            t: 0,
            schedule,
            z_accum: 0.0,
            j_running: 0.0,
            gamma,
            beta: gamma,
            entropy_accum: 0.0,
        })
    }

    pub fn num_policies(&self) -> usize {
        self.cum_loss_estimates.len()
    }

    /// Rounds completed so far.
    pub fn rounds(&self) -> usize {
        self.t
    }

    pub fn schedule(&self) -> ScheduleKind {
        self.schedule
    }

    pub fn cum_loss_estimates(&self) -> &[f64] {
        &self.cum_loss_estimates
    }

    pub fn z_accum(&self) -> f64 {
        self.z_accum
    }

    pub fn j_running(&self) -> f64 {
        self.j_running
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn entropy_accum(&self) -> f64 {
        self.entropy_accum
    }

    /// Learning rate for the coming round, given that round's advice.
    pub fn eta(&self, advice: &PolicySet) -> f64 {
        let n = self.num_policies();
        match self.schedule {
            ScheduleKind::FixedCapacity { capacity } => rate_fixed_capacity(self.t + 1, capacity, n),
            ScheduleKind::Adaptive => {
                let j = self.j_running.max(advice.s_and_v().1);
                rate_adaptive(self.z_accum, j, n)
            }
            ScheduleKind::Bobw { .. } => rate_bobw(self.beta),
            ScheduleKind::Constant { eta } => eta,
        }
    }

    /// Play distribution and learning rate for the coming round.
    pub fn predict(&self, advice: &PolicySet) -> Result<(MixtureWeights, f64)> {
        check_dim(self.num_policies(), advice.num_policies())?;
        let eta = self.eta(advice);
        Ok((MixtureWeights::from_raw(softmax(&self.cum_loss_estimates, eta)), eta))
    }

    /// Folds in the observation `(x, loss)` made while playing `p`.
    pub fn update(&mut self, advice: &PolicySet, p: &MixtureWeights, x: usize, loss: f64) -> Result<()> {
        let n = self.num_policies();
        check_dim(n, advice.num_policies())?;
        check_dim(n, p.len())?;
        if !(0.0..=1.0).contains(&loss) {
            return Err(Error::InvalidArgument(format!("loss {loss} outside [0, 1]")));
        }
        if x >= advice.num_outcomes() {
            return Err(Error::InvalidArgument(format!("outcome {} out of range", x + 1)));
        }
        let psi_x = advice.mixture_at(p, x);
        if psi_x <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "outcome {} was observed but has zero mixture probability",
                x + 1
            )));
        }
        let scale = loss / psi_x;
        for (cum, row) in self.cum_loss_estimates.iter_mut().zip(advice.rows()) {
            *cum += row[x] * scale;
        }
        match self.schedule {
            ScheduleKind::Adaptive => {
                self.z_accum += q_tau_raw(p, advice);
                self.j_running = self.j_running.max(advice.s_and_v().1);
            }
            ScheduleKind::Bobw { .. } => {
                self.entropy_accum += entropy_raw(p);
                self.beta = bobw_advance(self.beta, self.gamma, self.entropy_accum, n);
            }
            _ => {}
        }
        self.t += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::q_tau;
    use crate::divergence::{f_divergence, DivergenceKind};
    use crate::policy::make_epsilon_greedy;
    use crate::testutil::{dist, distribution, policy_set_with_prior};
    use proptest::prelude::*;

    fn disjoint() -> PolicySet {
        PolicySet::new(vec![dist(&[1.0, 0.0]), dist(&[0.0, 1.0])]).unwrap()
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0; 4], 0.7), vec![0.25; 4]);
        let p = softmax(&[2.0, 0.0], 0.5);
        let a = (-1f64).exp();
        assert!((p[0] - a / (1.0 + a)).abs() < 1e-15);
        assert!((p[0] - 0.2689).abs() < 1e-4);
        assert_eq!(softmax(&[3.0; 3], 10.0), vec![1.0 / 3.0; 3]);
        let p = softmax(&[1e6, 0.0, 5e5], 1.0);
        assert!(p.iter().all(|x| x.is_finite()));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn estimate_examples() {
        let psi = dist(&[0.5, 0.5]);
        let theta = dist(&[1.0, 0.0]);
        assert_eq!(loss_estimate(&theta, 0, 1.0, &psi).unwrap(), 2.0);
        assert_eq!(loss_estimate(&theta, 1, 0.7, &psi).unwrap(), 0.0);
        assert_eq!(shifted_estimate(&theta, 0, 1.0, &psi).unwrap(), 1.0);
        for x in 0..2 {
            assert_eq!(shifted_estimate(&psi, x, 0.3, &psi).unwrap(), 0.0);
        }
        assert!(loss_estimate(&theta, 1, 1.0, &dist(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate_fixed_capacity(5, 0.0, 4), 1.0);
        assert!((rate_fixed_capacity(100, 0.75, 4) - 0.08246).abs() < 1e-5);
        let mut last = 1.0;
        for t in 1..1000 {
            let r = rate_fixed_capacity(t, 0.75, 4);
            assert!(r <= last);
            last = r;
        }
        assert_eq!(rate_adaptive(0.0, 0.0, 4), 1.0);
        let ln4 = 4f64.ln();
        let expected = (ln4 / (ln4 + std::f64::consts::E)).sqrt();
        assert!((rate_adaptive(0.0, 1.0, 4) - expected).abs() < 1e-15);
        assert!((rate_adaptive(0.0, 1.0, 4) - 0.5810).abs() < 5e-4);
        assert!(rate_adaptive(1.0, 1.0, 4) >= rate_adaptive(2.0, 1.0, 4));

        let gamma = bobw_gamma(0.75, 1000, 4);
        assert!((gamma - 2.4114).abs() < 1e-4, "{gamma}");
        assert!((rate_bobw(gamma) - 0.4147).abs() < 1e-4);
        assert_eq!(bobw_advance(gamma, gamma, 0.0, 4), 2.0 * gamma);
    }

    #[test]
    fn update_examples() {
        let set = disjoint();
        let mut s = Exp4State::new(2, ScheduleKind::Adaptive).unwrap();
        let (p, eta) = s.predict(&set).unwrap();
        assert_eq!(p.as_slice(), &[0.5, 0.5]);
        // J_1 = V = 1.
        assert!((eta - rate_adaptive(0.0, 1.0, 2)).abs() < 1e-15);
        s.update(&set, &p, 0, 1.0).unwrap();
        assert_eq!(s.cum_loss_estimates(), &[2.0, 0.0]);
        assert!((s.z_accum() - 1.0).abs() < 1e-15);
        assert_eq!(s.j_running(), 1.0);
        assert!(s.update(&set, &p, 0, 1.5).is_err());
    }

    #[test]
    fn identical_policies_stay_uniform() {
        let set = PolicySet::new(vec![dist(&[0.2, 0.3, 0.5]); 4]).unwrap();
        let mut s = Exp4State::new(4, ScheduleKind::FixedCapacity { capacity: 0.0 }).unwrap();
        for t in 0..50 {
            let (p, _) = s.predict(&set).unwrap();
            assert_eq!(p.as_slice(), &[0.25; 4]);
            s.update(&set, &p, t % 3, 0.9).unwrap();
        }
    }

    #[test]
    fn bobw_rejects_zero_capacity() {
        assert!(Exp4State::new(4, ScheduleKind::Bobw { capacity: 0.0, horizon: 100 }).is_err());
        assert!(Exp4State::new(4, ScheduleKind::Constant { eta: 0.0 }).is_err());
    }

    #[test]
    fn bobw_beta_increases() {
        let set = make_epsilon_greedy(4, 0.5).unwrap();
        let mut s = Exp4State::new(4, ScheduleKind::Bobw { capacity: 0.75, horizon: 1000 }).unwrap();
        let mut last_beta = 0.0;
        let mut last_eta = f64::INFINITY;
        for t in 0..100 {
            let (p, eta) = s.predict(&set).unwrap();
            assert!(s.beta() > last_beta);
            assert!(eta <= last_eta);
            last_beta = s.beta();
            last_eta = eta;
            s.update(&set, &p, t % 4, (t % 2) as f64).unwrap();
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn estimator_moments((p, set) in policy_set_with_prior(6, 6), seed in 0u64..1000) {
            let k = set.num_outcomes();
            let loss: Vec<f64> = (0..k).map(|x| ((seed as usize * 31 + x * 17) % 101) as f64 / 100.0).collect();
            let psi = set.mixture(&p).unwrap();
            let mean_loss: f64 = set.policy_losses(&loss).iter().zip(p.iter()).map(|(l, w)| l * w).sum();
            for row in set.rows() {
                let (mut m1, mut z1, mut z2, mut z2_one) = (0.0, 0.0, 0.0, 0.0);
                for x in (0..k).filter(|&x| psi[x] > 0.0) {
                    m1 += psi[x] * loss_estimate(row, x, loss[x], &psi).unwrap();
                    let z = shifted_estimate(row, x, loss[x], &psi).unwrap();
                    prop_assert!(z >= -1.0 - 1e-12);
                    z1 += psi[x] * z;
                    z2 += psi[x] * z * z;
                    z2_one += psi[x] * shifted_estimate(row, x, 1.0, &psi).unwrap().powi(2);
                }
                let own: f64 = row.iter().zip(&loss).map(|(a, b)| a * b).sum();
                prop_assert!((m1 - own).abs() < 1e-12);
                prop_assert!((z1 - (own - mean_loss)).abs() < 1e-12);
                let chi = f_divergence(DivergenceKind::ChiSq, row, &psi).unwrap().to_f64();
                prop_assert!(z2 <= chi + 1e-12);
                prop_assert!((z2_one - chi).abs() <= 1e-12 * chi.max(1.0));
            }
        }

        #[test]
        fn predict_is_permutation_equivariant(cum in proptest::collection::vec(0.0..1e6f64, 2..8), eta in 0.0..1.0f64, shift in 0usize..8) {
            let n = cum.len();
            let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
            let permuted: Vec<f64> = perm.iter().map(|&i| cum[i]).collect();
            let p = softmax(&cum, eta);
            let q = softmax(&permuted, eta);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (j, &i) in perm.iter().enumerate() {
                prop_assert_eq!(q[j], p[i]);
            }
        }

        #[test]
        fn adaptive_z_matches_offline_sum((_, set) in policy_set_with_prior(5, 5), xs in proptest::collection::vec((0usize..5, 0.0..1.0f64), 1..30)) {
            let mut s = Exp4State::new(set.num_policies(), ScheduleKind::Adaptive).unwrap();
            let mut offline = 0.0;
            for (x, loss) in xs {
                let (p, _) = s.predict(&set).unwrap();
                let psi = set.mixture(&p).unwrap();
                // Observe an outcome the mixture can produce.
                let x = (0..set.num_outcomes()).map(|d| (x + d) % set.num_outcomes()).find(|&y| psi[y] > 0.0).unwrap();
                offline += q_tau(&p, &set).unwrap();
                let z_before = s.z_accum();
                s.update(&set, &p, x, loss).unwrap();
                prop_assert!(s.z_accum() >= z_before);
                prop_assert!(s.cum_loss_estimates().iter().all(|&c| c >= 0.0));
            }
            prop_assert!((s.z_accum() - offline).abs() < 1e-9);
        }

        #[test]
        fn shifted_estimate_lower_bound(row in distribution(5, true), psi in distribution(5, false), x in 0usize..5, loss in 0.0..=1.0f64) {
            prop_assert!(shifted_estimate(&row, x, loss, &psi).unwrap() >= -1.0 - 1e-12);
        }
    }
}
