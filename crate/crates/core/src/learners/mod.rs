//! Learners and a uniform interface the harness drives.

pub mod exp3;
pub mod exp4;
pub mod omd;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::policy::PolicySet;
use crate::prob::MixtureWeights;

pub use exp3::Exp3State;
pub use exp4::{Exp4State, ScheduleKind};
pub use omd::{omd_init, OmdState};

/// What the learner sees after each round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeedbackMode {
    /// The sampled outcome `X_t` and its loss `ℓ_t(X_t)`.
    Mediator,
    /// The chosen policy's expected loss `⟨ϑ_t, ℓ_t⟩`.
    Linear,
    /// The whole loss map `ℓ_t`.
    Full,
}

impl FeedbackMode {
    pub fn name(self) -> &'static str {
        match self {
            FeedbackMode::Mediator => "mediator",
            FeedbackMode::Linear => "linear",
            FeedbackMode::Full => "full",
        }
    }
}

impl FromStr for FeedbackMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mediator" => Ok(FeedbackMode::Mediator),
            "linear" => Ok(FeedbackMode::Linear),
            "full" => Ok(FeedbackMode::Full),
            _ => Err(Error::Config(format!(
                "unknown feedback mode `{s}` (expected mediator, linear or full)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LearnerKind {
    Exp4Fixed,
    Exp4Adaptive,
    Exp4Bobw,
    Exp4Const,
    OmdFull,
    Exp3Direct,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 6] = [
        LearnerKind::Exp4Fixed,
        LearnerKind::Exp4Adaptive,
        LearnerKind::Exp4Bobw,
        LearnerKind::Exp4Const,
        LearnerKind::OmdFull,
        LearnerKind::Exp3Direct,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Exp4Fixed => "exp4-fixed",
            LearnerKind::Exp4Adaptive => "exp4-adaptive",
            LearnerKind::Exp4Bobw => "exp4-bobw",
            LearnerKind::Exp4Const => "exp4-const",
            LearnerKind::OmdFull => "omd-full",
            LearnerKind::Exp3Direct => "exp3-direct",
        }
    }

    pub fn supports(self, mode: FeedbackMode) -> bool {
        match self {
            LearnerKind::OmdFull => mode == FeedbackMode::Full,
            LearnerKind::Exp3Direct => matches!(mode, FeedbackMode::Mediator | FeedbackMode::Linear),
            _ => mode == FeedbackMode::Mediator,
        }
    }

    pub fn check_mode(self, mode: FeedbackMode) -> Result<()> {
        if self.supports(mode) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "learner {} cannot run with {} feedback",
                self.name(),
                mode.name()
            )))
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = LearnerKind::ALL.iter().map(|k| k.name()).collect();
                Error::Config(format!("unknown learner `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

/// One round's observation, as handed to [`Learner::update`].
#[derive(Clone, Copy, Debug)]
pub enum Observation<'a> {
    Mediator { outcome: usize, loss: f64 },
    Linear { loss: f64 },
    Full { losses: &'a [f64] },
}

#[derive(Clone, Debug)]
pub enum Learner {
    Exp4(Exp4State),
    Omd(OmdState),
    Exp3(Exp3State),
}

impl Learner {
    /// Play distribution over policies and the learning rate in force.
    pub fn predict(&self, advice: &PolicySet) -> Result<(MixtureWeights, f64)> {
        match self {
            Learner::Exp4(s) => s.predict(advice),
            Learner::Omd(s) => Ok((s.weights(), s.eta())),
            Learner::Exp3(s) => Ok(s.predict()),
        }
    }

    pub fn update(
        &mut self,
        advice: &PolicySet,
        p: &MixtureWeights,
        chosen: usize,
        obs: Observation<'_>,
    ) -> Result<()> {
        match (self, obs) {
            (Learner::Exp4(s), Observation::Mediator { outcome, loss }) => s.update(advice, p, outcome, loss),
            (Learner::Omd(s), Observation::Full { losses }) => s.step(advice, losses).map(|_| ()),
            (Learner::Exp3(s), Observation::Mediator { loss, .. } | Observation::Linear { loss }) => {
                s.update(p, chosen, loss)
            }
            (learner, obs) => Err(Error::InvalidArgument(format!(
                "observation {obs:?} does not match learner {}",
                match learner {
                    Learner::Exp4(_) => "exp4",
                    Learner::Omd(_) => "omd",
                    Learner::Exp3(_) => "exp3",
                }
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in LearnerKind::ALL {
            assert_eq!(k.name().parse::<LearnerKind>().unwrap(), k);
        }
        assert!("exp5".parse::<LearnerKind>().is_err());
    }

    #[test]
    fn mode_compatibility() {
        use FeedbackMode::*;
        assert!(LearnerKind::OmdFull.supports(Full));
        assert!(!LearnerKind::OmdFull.supports(Mediator));
        assert!(LearnerKind::Exp3Direct.supports(Linear));
        assert!(LearnerKind::Exp3Direct.supports(Mediator));
        assert!(!LearnerKind::Exp3Direct.supports(Full));
        for k in [LearnerKind::Exp4Fixed, LearnerKind::Exp4Adaptive, LearnerKind::Exp4Bobw, LearnerKind::Exp4Const] {
            assert!(k.supports(Mediator));
            assert!(!k.supports(Linear));
            assert!(k.check_mode(Full).is_err());
        }
    }
}
