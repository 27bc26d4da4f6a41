//! KL divergence between the history distributions two Bernoulli
//! environments induce under the same strategy.
//!
//! [`history_kl`] uses the decomposition
//! `KL(P_μ‖P_μ′) = Σ_θ E_μ[N(θ)]·Σ_x θ(x)·kl(μ(x), μ′(x))`.
//! [`brute_force_history_kl`] enumerates every history on tiny instances
//! and serves as its oracle.

use crate::divergence::bernoulli_kl;
use crate::error::{check_dim, Error, Result};
use crate::policy::PolicySet;
use crate::prob::ExtendedReal;

/// Histories enumerated at most.
pub const MAX_HISTORIES: f64 = 1e5;

/// One round of a history: the policy played, the outcome drawn and the
/// binary loss observed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub policy: usize,
    pub outcome: usize,
    pub loss: u8,
}

/// A strategy maps the history so far to a distribution over policies.
pub type Strategy<'a> = &'a dyn Fn(&[Step]) -> Vec<f64>;

fn check_means(theta: &PolicySet, mu: &[f64], mu_prime: &[f64]) -> Result<()> {
    check_dim(theta.num_outcomes(), mu.len())?;
    check_dim(theta.num_outcomes(), mu_prime.len())?;
    if let Some(m) = mu.iter().chain(mu_prime).find(|m| !(0.0..=1.0).contains(*m)) {
        return Err(Error::InvalidArgument(format!("mean {m} outside [0, 1]")));
    }
    Ok(())
}

pub fn history_kl(visit_counts: &[f64], mu: &[f64], mu_prime: &[f64], theta: &PolicySet) -> Result<ExtendedReal> {
    check_dim(theta.num_policies(), visit_counts.len())?;
    check_means(theta, mu, mu_prime)?;
    if let Some(c) = visit_counts.iter().find(|c| !(**c >= 0.0)) {
        return Err(Error::InvalidArgument(format!("visit count {c} must be >= 0")));
    }
    let per_outcome: Vec<ExtendedReal> = mu.iter().zip(mu_prime).map(|(&a, &b)| bernoulli_kl(a, b)).collect();
    let mut total = ExtendedReal::Finite(0.0);
    for (&count, row) in visit_counts.iter().zip(theta.rows()) {
        if count == 0.0 {
            continue;
        }
        for (&w, &kl) in row.iter().zip(&per_outcome) {
            if w > 0.0 {
                total = total
                    + match kl {
                        ExtendedReal::Finite(v) => ExtendedReal::Finite(count * w * v),
                        ExtendedReal::Infinite => ExtendedReal::Infinite,
                    };
            }
        }
    }
    Ok(total)
}

fn check_size(theta: &PolicySet, horizon: usize) -> Result<()> {
    let per_round = (2 * theta.num_policies() * theta.num_outcomes()) as f64;
    let count = per_round.powi(horizon as i32);
    if count > MAX_HISTORIES {
        return Err(Error::TooLarge(format!(
            "{count} histories exceed the enumeration limit of {MAX_HISTORIES}"
        )));
    }
    Ok(())
}

fn strategy_probs(strategy: Strategy<'_>, history: &[Step], n: usize) -> Result<Vec<f64>> {
    let p = strategy(history);
    check_dim(n, p.len())?;
    let total: f64 = p.iter().sum();
    if p.iter().any(|x| !(*x >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("strategy returned {p:?}")));
    }
    Ok(p)
}

fn bernoulli_prob(mean: f64, loss: u8) -> f64 {
    if loss == 1 {
        mean
    } else {
        1.0 - mean
    }
}

/// Visits every history with positive probability under `μ`, calling
/// `visit(history, P_μ(history), P_μ′(history))` on complete ones.
fn enumerate(
    strategy: Strategy<'_>,
    mu: &[f64],
    mu_prime: &[f64],
    theta: &PolicySet,
    horizon: usize,
    visit: &mut dyn FnMut(&[Step], f64, f64),
) -> Result<()> {
    fn go(
        strategy: Strategy<'_>,
        mu: &[f64],
        mu_prime: &[f64],
        theta: &PolicySet,
        horizon: usize,
        history: &mut Vec<Step>,
        prob: f64,
        prob_prime: f64,
        visit: &mut dyn FnMut(&[Step], f64, f64),
    ) -> Result<()> {
        if history.len() == horizon {
            visit(history, prob, prob_prime);
            return Ok(());
        }
        let pi = strategy_probs(strategy, history, theta.num_policies())?;
        for (policy, &w) in pi.iter().enumerate() {
            for (outcome, &px) in theta.row(policy).iter().enumerate() {
                for loss in [0u8, 1] {
                    let step = w * px;
                    let a = prob * step * bernoulli_prob(mu[outcome], loss);
                    if a == 0.0 {
                        continue;
                    }
                    let b = prob_prime * step * bernoulli_prob(mu_prime[outcome], loss);
                    history.push(Step { policy, outcome, loss });
                    go(strategy, mu, mu_prime, theta, horizon, history, a, b, visit)?;
                    history.pop();
                }
            }
        }
        Ok(())
    }
    go(strategy, mu, mu_prime, theta, horizon, &mut Vec::with_capacity(horizon), 1.0, 1.0, visit)
}

/// Exact `KL(P_μ‖P_μ′)` over all length-`horizon` histories.
pub fn brute_force_history_kl(
    strategy: Strategy<'_>,
    mu: &[f64],
    mu_prime: &[f64],
    theta: &PolicySet,
    horizon: usize,
) -> Result<ExtendedReal> {
    check_means(theta, mu, mu_prime)?;
    check_size(theta, horizon)?;
    let mut total = 0.0;
    let mut infinite = false;
    enumerate(strategy, mu, mu_prime, theta, horizon, &mut |_, a, b| {
        if b == 0.0 {
            infinite = true;
        } else {
            total += a * (a / b).ln();
        }
    })?;
    Ok(if infinite {
        ExtendedReal::Infinite
    } else {
        ExtendedReal::Finite(total.max(0.0))
    })
}

/// `E_μ[N(θ)]` for every policy, by the same enumeration.
pub fn expected_visit_counts(strategy: Strategy<'_>, mu: &[f64], theta: &PolicySet, horizon: usize) -> Result<Vec<f64>> {
    check_means(theta, mu, mu)?;
    check_size(theta, horizon)?;
    let mut counts = vec![0.0; theta.num_policies()];
    enumerate(strategy, mu, mu, theta, horizon, &mut |history, a, _| {
        for s in history {
            counts[s.policy] += a;
        }
    })?;
    Ok(counts)
}
