//! Hard instances behind the minimax lower bounds.
//!
//! Each construction returns the policy set, the family of Bernoulli (or
//! Gaussian) mean vectors, the gap `Δ` and the constant `c = 8 ln(4/3)`.
//! Horizon preconditions are enforced; they are exactly the conditions
//! keeping every mean inside its admissible range.

use crate::divergence::{f_divergence_raw, DivergenceKind};
use crate::error::{check_dim, Error, Result};
use crate::learners::FeedbackMode;
use crate::policy::{make_epsilon_greedy, make_multitask_capped, multitask_choices, multitask_size, PolicySet};
use crate::prob::OutcomeDistribution;

/// `c = 8 ln(4/3)`.
pub fn lb_constant() -> f64 {
    8.0 * (4.0f64 / 3.0).ln()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowerBoundInstance {
    pub policy_set: PolicySet,
    /// `μ₀` first, then one mean vector per alternative.
    pub environments: Vec<Vec<f64>>,
    pub gap: f64,
    pub constant_c: f64,
    /// Noise level of the Gaussian construction.
    pub sigma: Option<f64>,
    pub feedback: FeedbackMode,
}

fn horizon_error(horizon: usize, threshold: f64) -> Error {
    Error::HorizonTooShort { horizon, threshold }
}

/// Two environments separating `p` from `q`:
/// `μ_{1,2}(x) = ½ ∓ Δ·(√p(x) − √q(x))/(√p(x) + √q(x))` with
/// `Δ = 1/(4√(c·H²·T))`, for `T ≥ 1/(c·H²)`.
pub fn lb_two_policy(p: &OutcomeDistribution, q: &OutcomeDistribution, horizon: usize) -> Result<LowerBoundInstance> {
    check_dim(p.len(), q.len())?;
    let policy_set = PolicySet::new(vec![p.clone(), q.clone()])?;
    policy_set.require_coverage()?;
    let h2 = f_divergence_raw(DivergenceKind::HellingerSq, p, q).to_f64();
    if h2 == 0.0 {
        return Err(Error::InvalidArgument("the two policies are identical".into()));
    }
    let c = lb_constant();
    let threshold = 1.0 / (c * h2);
    if (horizon as f64) < threshold {
        return Err(horizon_error(horizon, threshold));
    }
    let gap = 1.0 / (4.0 * (c * h2 * horizon as f64).sqrt());
    let tilt: Vec<f64> = p
        .iter()
        .zip(q.iter())
        .map(|(&a, &b)| (a.sqrt() - b.sqrt()) / (a.sqrt() + b.sqrt()))
        .collect();
    let k = p.len();
    Ok(LowerBoundInstance {
        policy_set,
        environments: vec![
            vec![0.5; k],
            tilt.iter().map(|s| 0.5 - gap * s).collect(),
            tilt.iter().map(|s| 0.5 + gap * s).collect(),
        ],
        gap,
        constant_c: c,
        sigma: None,
        feedback: FeedbackMode::Mediator,
    })
}

/// One environment per ε-greedy policy, `μ_θ(x) = ½ − Δ·1{x = x_θ}` with
/// `Δ = ¼√(2N/(cT))`, for `T ≥ N/(4 ln(4/3))`.
pub fn lb_epsilon_greedy(n: usize, epsilon: f64, horizon: usize) -> Result<LowerBoundInstance> {
    let policy_set = make_epsilon_greedy(n, epsilon)?;
    let threshold = n as f64 / (4.0 * (4.0f64 / 3.0).ln());
    if (horizon as f64) < threshold {
        return Err(horizon_error(horizon, threshold));
    }
    let c = lb_constant();
    let gap = 0.25 * (2.0 * n as f64 / (c * horizon as f64)).sqrt();
    let mut environments = vec![vec![0.5; n]];
    environments.extend((0..n).map(|i| {
        let mut mu = vec![0.5; n];
        mu[i] -= gap;
        mu
    }));
    Ok(LowerBoundInstance {
        policy_set,
        environments,
        gap,
        constant_c: c,
        sigma: None,
        feedback: FeedbackMode::Mediator,
    })
}

/// `σ = 1/(4√(2 ln(16T)))`.
pub fn linear_sigma(horizon: usize) -> f64 {
    1.0 / (4.0 * (2.0 * (16.0 * horizon as f64).ln()).sqrt())
}

/// Gaussian linear-feedback instance on ε-greedy policies:
/// `μ_θ(x) = ½ + Δ((1−ε)/N − 1{x = x_θ})`, `Δ = (σ/2ε)√(N/T)`.
///
/// Unclipped instances need `T ≥ σ²N/ε²` and accept a custom `σ`; clipped
/// instances use the default `σ` and need `T ≥ N/(8ε²)`.
pub fn lb_linear_gaussian(
    n: usize,
    epsilon: f64,
    horizon: usize,
    clipped: bool,
    sigma: Option<f64>,
) -> Result<LowerBoundInstance> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let policy_set = make_epsilon_greedy(n, epsilon)?;
    let sigma = match (clipped, sigma) {
        (true, Some(_)) => {
            return Err(Error::InvalidArgument("the clipped construction fixes sigma".into()));
        }
        (_, Some(s)) if !(s > 0.0 && s.is_finite()) => {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {s}")));
        }
        (_, Some(s)) => s,
        (_, None) => linear_sigma(horizon),
    };
    let nf = n as f64;
    let threshold = if clipped {
        nf / (8.0 * epsilon * epsilon)
    } else {
        sigma * sigma * nf / (epsilon * epsilon)
    };
    if (horizon as f64) < threshold {
        return Err(horizon_error(horizon, threshold));
    }
    let gap = sigma / (2.0 * epsilon) * (nf / horizon as f64).sqrt();
    let base = 0.5 + gap * (1.0 - epsilon) / nf;
    let mut environments = vec![vec![0.5; n]];
    environments.extend((0..n).map(|i| {
        let mut mu = vec![base; n];
        mu[i] -= gap;
        mu
    }));
    Ok(LowerBoundInstance {
        policy_set,
        environments,
        gap,
        constant_c: lb_constant(),
        sigma: Some(sigma),
        feedback: FeedbackMode::Linear,
    })
}

/// Multitask instance with `K = m·q` outcomes and `q^m` policies. Mean
/// vectors are produced on demand: `μ_θ(x) = ½ − Δ·1{x ∈ Supp θ}` and the
/// section-zeroed `μ_θ^{−i}`, equal to `μ_θ` except `½` on section `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultitaskInstance {
    pub m: usize,
    pub q: usize,
    pub gap: f64,
    pub constant_c: f64,
    num_policies: usize,
}

/// `Δ = ¼√(2K/(cT))`, for `T ≥ K/(4 ln(4/3))`. Fails when `q^m` exceeds `cap`.
pub fn lb_multitask(m: usize, q: usize, horizon: usize, cap: usize) -> Result<MultitaskInstance> {
    if m < 1 || q < 2 {
        return Err(Error::InvalidArgument(format!("need m >= 1 and q >= 2, got m={m}, q={q}")));
    }
    let num_policies = multitask_size(m, q)
        .filter(|&n| n <= cap)
        .ok_or_else(|| Error::TooLarge(format!("{q}^{m} policies exceeds the cap of {cap}")))?;
    let k = (m * q) as f64;
    let threshold = k / (4.0 * (4.0f64 / 3.0).ln());
    if (horizon as f64) < threshold {
        return Err(horizon_error(horizon, threshold));
    }
    let c = lb_constant();
    Ok(MultitaskInstance {
        m,
        q,
        gap: 0.25 * (2.0 * k / (c * horizon as f64)).sqrt(),
        constant_c: c,
        num_policies,
    })
}

impl MultitaskInstance {
    pub fn num_policies(&self) -> usize {
        self.num_policies
    }

    pub fn num_outcomes(&self) -> usize {
        self.m * self.q
    }

    pub fn policy_set(&self) -> Result<PolicySet> {
        make_multitask_capped(self.m, self.q, self.num_policies)
    }

    fn check(&self, policy: usize) -> Result<()> {
        if policy >= self.num_policies {
            return Err(Error::InvalidArgument(format!("policy {} out of range", policy + 1)));
        }
        Ok(())
    }

    pub fn mean(&self, policy: usize) -> Result<Vec<f64>> {
        self.check(policy)?;
        let mut mu = vec![0.5; self.num_outcomes()];
        for (section, j) in multitask_choices(policy, self.m, self.q).into_iter().enumerate() {
            mu[section * self.q + j] -= self.gap;
        }
        Ok(mu)
    }

    pub fn section_zeroed(&self, policy: usize, section: usize) -> Result<Vec<f64>> {
        if section >= self.m {
            return Err(Error::InvalidArgument(format!("section {} out of range", section + 1)));
        }
        let mut mu = self.mean(policy)?;
        mu[section * self.q..(section + 1) * self.q].fill(0.5);
        Ok(mu)
    }

    /// Rounds in which the played policy agrees with `policy` in each section.
    pub fn agreement_counts(&self, policy: usize, played: &[usize]) -> Result<Vec<usize>> {
        self.check(policy)?;
        let target = multitask_choices(policy, self.m, self.q);
        let mut counts = vec![0; self.m];
        for &p in played {
            self.check(p)?;
            for (i, (a, b)) in multitask_choices(p, self.m, self.q).iter().zip(&target).enumerate() {
                if a == b {
                    counts[i] += 1;
                }
            }
        }
        Ok(counts)
    }

    /// Pseudo-regret under `μ_θ` via agreement counts:
    /// `(Δ/m)·Σ_i (T − N(i, θ; T))`.
    pub fn regret_by_agreement(&self, policy: usize, played: &[usize]) -> Result<f64> {
        let counts = self.agreement_counts(policy, played)?;
        let t = played.len() as f64;
        Ok(self.gap / self.m as f64 * counts.iter().map(|&c| t - c as f64).sum::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{dist, distribution_pair};
    use proptest::prelude::*;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn two_policy_example() {
        let inst = lb_two_policy(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0]), 1000).unwrap();
        assert!((inst.constant_c - 2.3014).abs() < 1e-4);
        assert!((inst.gap - 1.0 / (4.0 * (inst.constant_c * 1000.0).sqrt())).abs() < 1e-15);
        assert!((inst.gap - 0.005212).abs() < 1e-6);
        assert_eq!(inst.environments[0], vec![0.5, 0.5]);
        assert_eq!(inst.environments[1], vec![0.5 - inst.gap, 0.5 + inst.gap]);
        assert!(lb_two_policy(&dist(&[0.3, 0.7]), &dist(&[0.3, 0.7]), 1000).is_err());
        // 1/(c·H²) with H² = 1 is about 0.43; a tiny H² raises it.
        assert!(matches!(
            lb_two_policy(&dist(&[0.5, 0.5]), &dist(&[0.51, 0.49]), 1000),
            Err(Error::HorizonTooShort { .. })
        ));
    }

    #[test]
    fn epsilon_greedy_example() {
        let inst = lb_epsilon_greedy(4, 0.5, 1000).unwrap();
        assert!((inst.gap - 0.01474).abs() < 1e-5);
        assert_eq!(inst.environments.len(), 5);
        let rows = inst.policy_set.rows();
        for (i, mu) in inst.environments[1..].iter().enumerate() {
            for j in 0..4 {
                if j != i {
                    let g = dot(&rows[j], mu) - dot(&rows[i], mu);
                    assert!((g - inst.gap * 0.5).abs() < 1e-15);
                }
            }
        }
        let flat = lb_epsilon_greedy(4, 0.0, 1000).unwrap();
        for mu in &flat.environments {
            let l = flat.policy_set.policy_losses(mu);
            assert!(l.iter().all(|&x| (x - l[0]).abs() < 1e-15));
        }
        assert!(lb_epsilon_greedy(16, 0.5, 13).is_err());
        assert!(lb_epsilon_greedy(16, 0.5, 14).is_ok());
    }

    #[test]
    fn multitask_example() {
        let inst = lb_multitask(2, 2, 1000, 1_000_000).unwrap();
        assert_eq!(inst.num_outcomes(), 4);
        assert!((inst.gap - 0.25 * (8.0 / (lb_constant() * 1000.0)).sqrt()).abs() < 1e-15);
        assert!((inst.gap - 0.01474).abs() < 1e-5);
        for p in 0..inst.num_policies() {
            let mu = inst.mean(p).unwrap();
            for i in 0..2 {
                let z = inst.section_zeroed(p, i).unwrap();
                for x in 0..4 {
                    if x / 2 == i {
                        assert_eq!(z[x], 0.5);
                    } else {
                        assert_eq!(z[x], mu[x]);
                    }
                }
            }
        }
        assert!(lb_multitask(20, 3, 1_000_000, 1000).is_err());
        assert!(lb_multitask(2, 2, 3, 1000).is_err());
    }

    #[test]
    fn multitask_regret_identity() {
        let inst = lb_multitask(3, 3, 1000, 1_000_000).unwrap();
        let set = inst.policy_set().unwrap();
        let played: Vec<usize> = (0..200).map(|t| (t * 7 + t / 3) % inst.num_policies()).collect();
        for target in [0, 5, 26] {
            let mu = inst.mean(target).unwrap();
            let losses = set.policy_losses(&mu);
            let best = losses.iter().copied().fold(f64::INFINITY, f64::min);
            assert_eq!(best, losses[target]);
            let direct: f64 = played.iter().map(|&p| losses[p] - best).sum();
            let via = inst.regret_by_agreement(target, &played).unwrap();
            assert!((direct - via).abs() < 1e-10, "{direct} vs {via}");
        }
    }

    #[test]
    fn linear_examples() {
        assert!((linear_sigma(1000) - 0.05682).abs() < 1e-5);
        let inst = lb_linear_gaussian(4, 0.5, 1000, true, None).unwrap();
        assert!((inst.gap - 0.003593).abs() < 1e-6);
        assert_eq!(inst.feedback, FeedbackMode::Linear);
        // Clipped threshold N/(8ε²) = 2.
        assert!(lb_linear_gaussian(4, 0.5, 1, true, None).is_err());
        assert!(lb_linear_gaussian(4, 0.5, 2, true, None).is_ok());
        // Unclipped threshold σ²N/ε² = 16σ² with σ = 1 is 16.
        assert!(lb_linear_gaussian(4, 0.5, 15, false, Some(1.0)).is_err());
        assert!(lb_linear_gaussian(4, 0.5, 16, false, Some(1.0)).is_ok());
        assert!(lb_linear_gaussian(4, 0.5, 100, true, Some(0.1)).is_err());
    }

    #[test]
    fn linear_feedback_depends_only_on_hitting_theta() {
        for eps in [0.25, 0.5, 1.0] {
            let inst = lb_linear_gaussian(5, eps, 500, false, None).unwrap();
            let rows = inst.policy_set.rows();
            for (theta, mu) in inst.environments[1..].iter().enumerate() {
                for (j, row) in rows.iter().enumerate() {
                    let expected = 0.5 - inst.gap * eps * if j == theta { 1.0 } else { 0.0 };
                    assert!((dot(row, mu) - expected).abs() < 1e-15);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn two_policy_identities((p, q) in distribution_pair(6, true), t in 1usize..100_000) {
            let covered = (0..p.len()).all(|x| p[x] > 0.0 || q[x] > 0.0);
            match lb_two_policy(&p, &q, t) {
                Ok(inst) => {
                    let h2 = f_divergence_raw(DivergenceKind::HellingerSq, &p, &q).to_f64();
                    for mu in &inst.environments {
                        prop_assert!(mu.iter().all(|&m| (0.25..=0.75).contains(&m)));
                    }
                    let margin: f64 = (0..p.len()).map(|x| (q[x] - p[x]) * inst.environments[1][x]).sum();
                    prop_assert!((margin - 2.0 * inst.gap * h2).abs() < 1e-12);
                    let margin2: f64 = (0..p.len()).map(|x| (p[x] - q[x]) * inst.environments[2][x]).sum();
                    prop_assert!((margin2 - 2.0 * inst.gap * h2).abs() < 1e-12);
                    prop_assert!(inst.gap <= 0.25 + 1e-15);
                }
                Err(Error::HorizonTooShort { threshold, .. }) => prop_assert!((t as f64) < threshold),
                Err(_) => prop_assert!(!covered || p == q),
            }
        }
    }
}
