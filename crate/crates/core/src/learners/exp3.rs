//! EXP3 run directly over the policies, ignoring their outcome structure.

use crate::error::{check_dim, Error, Result};
use crate::learners::exp4::softmax;
use crate::prob::MixtureWeights;

#[derive(Clone, Debug, PartialEq)]
pub struct Exp3State {
    cum_loss_estimates: Vec<f64>,
    t: usize,
}

/// `√(ln N/(N·t))`.
pub fn rate_exp3(t: usize, n: usize) -> f64 {
    ((n as f64).ln() / (n as f64 * t as f64)).sqrt()
}

impl Exp3State {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 arms, got {n}")));
        }
        Ok(Exp3State {
            cum_loss_estimates: vec![0.0; n],
            t: 0,
        })
    }

    pub fn cum_loss_estimates(&self) -> &[f64] {
        &self.cum_loss_estimates
    }

    pub fn predict(&self) -> (MixtureWeights, f64) {
        let eta = rate_exp3(self.t + 1, self.cum_loss_estimates.len());
        (MixtureWeights::from_raw(softmax(&self.cum_loss_estimates, eta)), eta)
    }

    /// Adds `loss/p(chosen)` to the chosen arm.
    pub fn update(&mut self, p: &MixtureWeights, chosen: usize, loss: f64) -> Result<()> {
        check_dim(self.cum_loss_estimates.len(), p.len())?;
        if !(0.0..=1.0).contains(&loss) {
            return Err(Error::InvalidArgument(format!("loss {loss} outside [0, 1]")));
        }
        if chosen >= p.len() || p[chosen] <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "policy {} was not playable",
                chosen + 1
            )));
        }
        self.cum_loss_estimates[chosen] += loss / p[chosen];
        self.t += 1;
        Ok(())
    }
}
