//! Full-information online mirror descent on the convex hull of a policy set.
//!
//! The iterate `u_t` is stored as mixture weights `q_t` over the policies,
//! so `u_t ∈ co(Θ)` by construction and the play distribution is `q_t`
//! itself. Each step computes
//! `u_{t+1} = argmin_{u ∈ co(Θ)} η⟨u, ℓ_t⟩ + KL(u‖u_t)`, which is the
//! I-projection onto `co(Θ)` of `w ∝ u_t·e^{−ηℓ_t}`, solved over `q`
//! (warm-started at `q_t`) until the Frank–Wolfe gap is at most
//! [`INNER_TOL`].

use crate::capacity::{kl_capacity, DEFAULT_KL_MAX_ITER};
use crate::error::{check_dim, Error, Result};
use crate::hull::{minimize, HullObjective};
use crate::policy::PolicySet;
use crate::prob::{MixtureWeights, OutcomeDistribution};

pub const INNER_TOL: f64 = 1e-9;
pub const INNER_MAX_ITER: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct OmdState {
    q: Vec<f64>,
    eta: f64,
    center: OutcomeDistribution,
    capacity: f64,
}

/// Builds the learner for horizon `T`: `η = √(2·C_KL/T)` and `u_1 = ρ*`, the
/// KL-radius center, reached by the Blahut–Arimoto prior.
pub fn omd_init(theta: &PolicySet, horizon: usize, tol: f64) -> Result<OmdState> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    let n = theta.num_policies();
    let kl = kl_capacity(theta, tol, DEFAULT_KL_MAX_ITER);
    if kl.gap > tol {
        return Err(Error::NonConvergence(format!(
            "KL capacity duality gap {} above tolerance {tol} after {} iterations",
            kl.gap, kl.iterations
        )));
    }
    let (q, center) = if kl.value > 0.0 {
        (
            kl.prior.to_vec(),
            kl.center,
        )
    } else {
        let q = vec![1.0 / n as f64; n];
        let center = OutcomeDistribution::from_raw(theta.mixture_raw(&q));
        (q, center)
    };
    for row in theta.rows() {
        if row.iter().zip(center.iter()).any(|(&a, &c)| a > 0.0 && c == 0.0) {
            return Err(Error::InvalidArgument(
                "KL-radius center misses the support of a policy".into(),
            ));
        }
    }
    Ok(OmdState {
        q,
        eta: (2.0 * kl.value / horizon as f64).sqrt(),
        center,
        capacity: kl.value,
    })
}

impl OmdState {
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn kl_capacity(&self) -> f64 {
        self.capacity
    }

    pub fn center(&self) -> &OutcomeDistribution {
        &self.center
    }

    /// Play distribution over policies.
    pub fn weights(&self) -> MixtureWeights {
        let total: f64 = self.q.iter().sum();
        MixtureWeights::from_raw(self.q.iter().map(|x| x / total).collect())
    }

    /// `u_t = Σ_θ q_t(θ)θ`.
    pub fn iterate(&self, theta: &PolicySet) -> Vec<f64> {
        theta.mixture_raw(&self.q)
    }

    /// One OMD step on the full loss map `loss ∈ [0,1]^K`. Returns the
    /// number of inner iterations used.
    pub fn step(&mut self, theta: &PolicySet, loss: &[f64]) -> Result<usize> {
        check_dim(theta.num_policies(), self.q.len())?;
        check_dim(theta.num_outcomes(), loss.len())?;
        if let Some(bad) = loss.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::InvalidArgument(format!("loss {bad} outside [0, 1]")));
        }
        let u = self.iterate(theta);
        // Unnormalized log-target; the normalizer shifts every g_i equally.
        let log_w: Vec<f64> = u
            .iter()
            .zip(loss)
            .map(|(&ux, &l)| if ux > 0.0 { ux.ln() - self.eta * l } else { f64::NEG_INFINITY })
            .collect();
        let objective = HullObjective {
            theta,
            b: None,
            a: Some(&log_w),
        };
        let (iterations, gap) = minimize(&objective, &mut self.q, INNER_TOL, INNER_MAX_ITER);
        if gap > INNER_TOL {
            return Err(Error::NonConvergence(format!(
                "OMD projection gap {gap} above {INNER_TOL} after {iterations} iterations"
            )));
        }
        Ok(iterations)
    }
}
