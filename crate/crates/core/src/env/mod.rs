//! Loss-generating environments.
//!
//! Every environment produces, per round, the realized loss map `ℓ_t` and
//! the reference map used for pseudo-regret: `μ` (or its corrupted or
//! clipped mean) for stochastic environments and `ℓ_t` itself for
//! adversarial ones.

pub mod history_kl;
pub mod lower_bound;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{Continuous, ContinuousCDF, Normal as StdNormal};

use crate::error::{Error, Result};
use crate::policy::PolicySet;
use crate::rng::bernoulli;

pub use history_kl::{brute_force_history_kl, expected_visit_counts, history_kl, Step};
pub use lower_bound::{
    lb_constant, lb_epsilon_greedy, lb_linear_gaussian, lb_multitask, lb_two_policy, LowerBoundInstance,
    MultitaskInstance,
};

/// `max{min{a, 1}, 0}`.
pub fn clip(a: f64) -> f64 {
    a.clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub enum EnvironmentSpec {
    /// A fixed loss sequence, one map per round.
    Adversarial { losses: Vec<Vec<f64>> },
    /// An oblivious sequence of i.i.d. uniform loss maps drawn from the
    /// environment's own stream; regret is measured against the realized maps.
    UniformAdversarial { k: usize },
    /// Independent `Bernoulli(μ(x))` losses per outcome.
    Bernoulli { mu: Vec<f64> },
    /// Bernoulli losses raised by `c_t = min{level, budget left}` on the
    /// `target` outcomes (capped at 1) until the budget is spent.
    Corrupted {
        mu: Vec<f64>,
        level: f64,
        budget: f64,
        target: Vec<bool>,
    },
    /// `μ + Z_t·1` with one `Z_t ~ N(0, σ²)` shared by all outcomes,
    /// optionally clipped to `[0, 1]` per coordinate.
    LinearGaussian { mu: Vec<f64>, sigma: f64, clipped: bool },
}

fn check_unit(what: &str, values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(v) => Err(Error::InvalidArgument(format!("{what} value {v} outside [0, 1]"))),
        None => Ok(()),
    }
}

impl EnvironmentSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            EnvironmentSpec::Adversarial { losses } => {
                let k = losses.first().map_or(0, Vec::len);
                if k < 2 {
                    return Err(Error::InvalidArgument("adversarial sequence needs rounds over K >= 2 outcomes".into()));
                }
                for (t, row) in losses.iter().enumerate() {
                    if row.len() != k {
                        return Err(Error::DimensionMismatch { expected: k, found: row.len() });
                    }
                    check_unit(&format!("loss in round {}", t + 1), row)?;
                }
                Ok(())
            }
            EnvironmentSpec::UniformAdversarial { k } if *k < 2 => {
                Err(Error::InvalidArgument(format!("need K >= 2 outcomes, got {k}")))
            }
            EnvironmentSpec::UniformAdversarial { .. } => Ok(()),
            EnvironmentSpec::Bernoulli { mu } => check_unit("mean", mu),
            EnvironmentSpec::Corrupted { mu, level, budget, target } => {
                check_unit("mean", mu)?;
                if target.len() != mu.len() {
                    return Err(Error::DimensionMismatch { expected: mu.len(), found: target.len() });
                }
                if !(*level >= 0.0 && level.is_finite() && *budget >= 0.0 && budget.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "corruption level {level} and budget {budget} must be finite and >= 0"
                    )));
                }
                Ok(())
            }
            EnvironmentSpec::LinearGaussian { mu, sigma, .. } => {
                if mu.iter().any(|m| !m.is_finite()) {
                    return Err(Error::InvalidArgument("linear-Gaussian means must be finite".into()));
                }
                if !(*sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidArgument(format!("sigma {sigma} must be finite and >= 0")));
                }
                Ok(())
            }
        }
    }

    pub fn num_outcomes(&self) -> usize {
        match self {
            EnvironmentSpec::Adversarial { losses } => losses.first().map_or(0, Vec::len),
            EnvironmentSpec::UniformAdversarial { k } => *k,
            EnvironmentSpec::Bernoulli { mu }
            | EnvironmentSpec::Corrupted { mu, .. }
            | EnvironmentSpec::LinearGaussian { mu, .. } => mu.len(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            EnvironmentSpec::Adversarial { .. } => "adversarial",
            EnvironmentSpec::UniformAdversarial { .. } => "uniform-adversarial",
            EnvironmentSpec::Bernoulli { .. } => "bernoulli",
            EnvironmentSpec::Corrupted { .. } => "corrupted",
            EnvironmentSpec::LinearGaussian { .. } => "linear-gaussian",
        }
    }

    /// Whether the reference map is the same every round.
    pub fn is_stationary(&self) -> bool {
        matches!(self, EnvironmentSpec::Bernoulli { .. } | EnvironmentSpec::LinearGaussian { .. })
    }
}

/// Outcomes on which the best policy under `mu` puts more mass than the
/// other policies do on average. Raising losses there hurts the best policy
/// most.
pub fn corruption_target(theta: &PolicySet, mu: &[f64]) -> Result<Vec<bool>> {
    crate::error::check_dim(theta.num_outcomes(), mu.len())?;
    let losses = theta.policy_losses(mu);
    let best = (0..losses.len()).fold(0, |b, i| if losses[i] < losses[b] { i } else { b });
    let n = theta.num_policies() as f64;
    Ok((0..mu.len())
        .map(|x| {
            let others: f64 = theta.rows().iter().enumerate().filter(|(i, _)| *i != best).map(|(_, r)| r[x]).sum();
            theta.row(best)[x] > others / (n - 1.0)
        })
        .collect())
}

/// `E[clip(a + Z)]` for `Z ~ N(0, σ²)`.
pub fn clipped_gaussian_mean(a: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return clip(a);
    }
    let n = StdNormal::new(0.0, 1.0).expect("standard normal");
    let alpha = -a / sigma;
    let beta = (1.0 - a) / sigma;
    let inside = a * (n.cdf(beta) - n.cdf(alpha)) + sigma * (n.pdf(alpha) - n.pdf(beta));
    clip(inside + n.sf(beta))
}

/// One round's losses.
#[derive(Clone, Debug, PartialEq)]
pub struct Round {
    /// Realized loss map.
    pub loss: Vec<f64>,
    /// Reference map for pseudo-regret.
    pub mean: Vec<f64>,
    /// `sup_x |loss shift|` applied by the corruption adversary this round.
    pub shift: f64,
}

/// Per-run environment state.
#[derive(Clone, Debug)]
pub struct Environment {
    spec: EnvironmentSpec,
    spent: f64,
    realized_shift: f64,
    mean: Option<Vec<f64>>,
}

impl Environment {
    pub fn new(spec: EnvironmentSpec) -> Result<Self> {
        spec.validate()?;
        let mean = match &spec {
            EnvironmentSpec::Bernoulli { mu } => Some(mu.clone()),
            EnvironmentSpec::LinearGaussian { mu, sigma, clipped } => Some(if *clipped {
                mu.iter().map(|&m| clipped_gaussian_mean(m, *sigma)).collect()
            } else {
                mu.clone()
            }),
            _ => None,
        };
        Ok(Environment {
            spec,
            spent: 0.0,
            realized_shift: 0.0,
            mean,
        })
    }

    pub fn spec(&self) -> &EnvironmentSpec {
        &self.spec
    }

    /// Reference map when it does not depend on the round.
    pub fn stationary_mean(&self) -> Option<&[f64]> {
        self.mean.as_deref()
    }

    /// Declared corruption used so far, `Σ_t c_t`.
    pub fn corruption_spent(&self) -> f64 {
        self.spent
    }

    /// Realized `Σ_t sup_x |shift_t(x)|`; never above the declared spend.
    pub fn realized_corruption(&self) -> f64 {
        self.realized_shift
    }

    /// Losses for round `t` (1-based).
    pub fn sample_round<R: Rng + ?Sized>(&mut self, t: usize, rng: &mut R) -> Result<Round> {
        if t == 0 {
            return Err(Error::InvalidArgument("rounds are numbered from 1".into()));
        }
        match &self.spec {
            EnvironmentSpec::Adversarial { losses } => {
                let row = losses.get(t - 1).ok_or_else(|| {
                    Error::InvalidArgument(format!("round {t} beyond the {}-round sequence", losses.len()))
                })?;
                Ok(Round { loss: row.clone(), mean: row.clone(), shift: 0.0 })
            }
            EnvironmentSpec::UniformAdversarial { k } => {
                let loss: Vec<f64> = (0..*k).map(|_| rng.random::<f64>()).collect();
                Ok(Round { mean: loss.clone(), loss, shift: 0.0 })
            }
            EnvironmentSpec::Bernoulli { mu } => Ok(Round {
                loss: mu.iter().map(|&m| bernoulli(m, rng)).collect(),
                mean: mu.clone(),
                shift: 0.0,
            }),
            EnvironmentSpec::Corrupted { mu, level, budget, target } => {
                let c = level.min(budget - self.spent).max(0.0);
                let mut loss: Vec<f64> = mu.iter().map(|&m| bernoulli(m, rng)).collect();
                let mut mean = mu.clone();
                let mut shift: f64 = 0.0;
                if c > 0.0 {
                    for x in 0..loss.len() {
                        if target[x] {
                            let raised = (loss[x] + c).min(1.0);
                            shift = shift.max(raised - loss[x]);
                            loss[x] = raised;
                            mean[x] = mu[x] + (1.0 - mu[x]) * c;
                        }
                    }
                }
                self.spent += c;
                self.realized_shift += shift;
                Ok(Round { loss, mean, shift })
            }
            EnvironmentSpec::LinearGaussian { mu, sigma, clipped } => {
                let z = if *sigma > 0.0 {
                    Normal::new(0.0, *sigma).expect("sigma validated").sample(rng)
                } else {
                    0.0
                };
                let loss: Vec<f64> = mu
                    .iter()
                    .map(|&m| if *clipped { clip(m + z) } else { m + z })
                    .collect();
                Ok(Round {
                    loss,
                    mean: self.mean.clone().expect("stationary mean"),
                    shift: 0.0,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::make_epsilon_greedy;
    use crate::rng::{stream, Role};

    fn rng() -> rand_chacha::ChaCha8Rng {
        stream(3, "env-tests", 0, Role::Environment)
    }

    #[test]
    fn degenerate_and_verbatim_rounds() {
        let mut r = rng();
        let mut env = Environment::new(EnvironmentSpec::Bernoulli { mu: vec![0.0, 1.0] }).unwrap();
        for t in 1..100 {
            assert_eq!(env.sample_round(t, &mut r).unwrap().loss, vec![0.0, 1.0]);
        }
        let mut env = Environment::new(EnvironmentSpec::Adversarial { losses: vec![vec![0.3, 0.9]] }).unwrap();
        let round = env.sample_round(1, &mut r).unwrap();
        assert_eq!(round.loss, vec![0.3, 0.9]);
        assert!(env.sample_round(2, &mut r).is_err());
        assert!(env.sample_round(0, &mut r).is_err());

        let mu = vec![0.2, 0.7, 1.3];
        let mut env = Environment::new(EnvironmentSpec::LinearGaussian { mu: mu.clone(), sigma: 0.0, clipped: false }).unwrap();
        assert_eq!(env.sample_round(5, &mut r).unwrap().loss, mu);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(Environment::new(EnvironmentSpec::Bernoulli { mu: vec![0.5, 1.5] }).is_err());
        assert!(Environment::new(EnvironmentSpec::Adversarial { losses: vec![vec![0.5, -0.1]] }).is_err());
        assert!(Environment::new(EnvironmentSpec::LinearGaussian { mu: vec![0.5, 0.5], sigma: -1.0, clipped: true }).is_err());
    }

    #[test]
    fn clip_examples() {
        assert_eq!(clip(1.2), 1.0);
        assert_eq!(clip(-0.1), 0.0);
        assert_eq!(clip(0.3), 0.3);
    }

    #[test]
    fn clipped_mean_matches_monte_carlo() {
        let mut r = rng();
        let normal = Normal::new(0.0, 0.4).unwrap();
        for a in [-0.2, 0.1, 0.5, 0.95, 1.3] {
            let n = 400_000;
            let mc: f64 = (0..n).map(|_| clip(a + normal.sample(&mut r))).sum::<f64>() / n as f64;
            assert!((mc - clipped_gaussian_mean(a, 0.4)).abs() < 3e-3, "a={a}");
        }
        assert_eq!(clipped_gaussian_mean(1.4, 0.0), 1.0);
        // Far inside the interval clipping is negligible.
        assert!((clipped_gaussian_mean(0.5, 0.01) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn corruption_accounting() {
        let set = make_epsilon_greedy(4, 0.5).unwrap();
        let mu = vec![0.3, 0.7, 0.7, 0.7];
        let target = corruption_target(&set, &mu).unwrap();
        assert_eq!(target, vec![true, false, false, false]);
        let spec = EnvironmentSpec::Corrupted { mu, level: 0.3, budget: 2.0, target };
        let mut env = Environment::new(spec).unwrap();
        let mut r = rng();
        let mut realized = 0.0;
        for t in 1..=50 {
            let round = env.sample_round(t, &mut r).unwrap();
            assert!(round.loss.iter().all(|l| (0.0..=1.0).contains(l)));
            realized += round.shift;
            if t > 7 {
                assert_eq!(round.mean[0], 0.3);
            }
        }
        assert!((env.corruption_spent() - 2.0).abs() < 1e-12);
        assert!(realized <= 2.0 + 1e-12);
        assert_eq!(realized, env.realized_corruption());
    }

    #[test]
    fn same_seed_same_sequence() {
        let spec = EnvironmentSpec::UniformAdversarial { k: 5 };
        let draw = || {
            let mut env = Environment::new(spec.clone()).unwrap();
            let mut r = rng();
            (1..=20).map(|t| env.sample_round(t, &mut r).unwrap().loss).collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }
}
