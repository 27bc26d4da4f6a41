//! The simulation loop.

use std::path::{Path, PathBuf};

use log::info;

use super::config::{CapacitySetting, ExperimentConfig};
use crate::capacity::{chi_capacity, CapacityBracket, DEFAULT_CHI_BUDGET, DEFAULT_CHI_TOL};
use crate::env::{Environment, EnvironmentSpec};
use crate::error::{Error, Result};
use crate::learners::{omd_init, Exp3State, Exp4State, FeedbackMode, Learner, LearnerKind, Observation, ScheduleKind};
use crate::par::{map_indexed, Execution};
use crate::policy::PolicySet;
use crate::rng::{replicate_seed, sample_categorical, stream, Role};

/// One recorded round.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub eta: f64,
    pub chosen: usize,
    /// Sampled outcome under mediator feedback.
    pub outcome: Option<usize>,
    /// The scalar the learner observed (the full map's mean under full feedback).
    pub sampled_loss: f64,
    /// `⟨ϑ_t, m_t⟩` for the round's reference map `m_t`.
    pub expected_loss: f64,
    pub cum_pseudo_regret: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegretTrace {
    pub replicate: usize,
    pub seed: u64,
    /// Best fixed policy in hindsight.
    pub best_policy: usize,
    pub rows: Vec<TraceRow>,
}

impl RegretTrace {
    pub fn final_regret(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_pseudo_regret)
    }
}

/// Everything a run needs that does not change across replicates.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub theta: PolicySet,
    pub env: EnvironmentSpec,
    pub kind: LearnerKind,
    pub mode: FeedbackMode,
    pub capacity: CapacityBracket,
    /// Capacity fed to the schedule, or the KL capacity for `omd-full`.
    pub schedule_capacity: Option<f64>,
    learner: Learner,
}

impl Prepared {
    /// Validates the config and does the per-experiment work (capacity,
    /// OMD initialization) once. Relative paths resolve against `base`.
    pub fn new(config: ExperimentConfig, base: &Path) -> Result<Self> {
        config.validate()?;
        let kind = config.learner_kind()?;
        let mode = config.feedback()?;
        let theta = config.policies.build(base)?;
        let env = config.environment_spec(&theta, base)?;
        let n = theta.num_policies();
        let t_max = config.experiment.horizon;

        let l = &config.learner;
        let takes_capacity = matches!(kind, LearnerKind::Exp4Fixed | LearnerKind::Exp4Bobw | LearnerKind::Exp4Const);
        if l.capacity.is_some() && !takes_capacity {
            return Err(Error::Config(format!("learner {kind} takes no `capacity`")));
        }
        if l.eta.is_some() && kind != LearnerKind::Exp4Const {
            return Err(Error::Config(format!("learner {kind} takes no `eta`")));
        }
        if l.eta.is_some() && l.capacity.is_some() {
            return Err(Error::Config("give `eta` or `capacity` for exp4-const, not both".into()));
        }

        let capacity = chi_capacity(&theta, DEFAULT_CHI_TOL, l.capacity_budget.unwrap_or(DEFAULT_CHI_BUDGET));
        let chosen_capacity = match &l.capacity {
            Some(CapacitySetting::Value(c)) => *c,
            _ => capacity.upper,
        };

        let (learner, schedule_capacity) = match kind {
            LearnerKind::Exp4Fixed => (
                Learner::Exp4(Exp4State::new(n, ScheduleKind::FixedCapacity { capacity: chosen_capacity })?),
                Some(chosen_capacity),
            ),
            LearnerKind::Exp4Adaptive => (Learner::Exp4(Exp4State::new(n, ScheduleKind::Adaptive)?), None),
            LearnerKind::Exp4Bobw => (
                Learner::Exp4(Exp4State::new(n, ScheduleKind::Bobw { capacity: chosen_capacity, horizon: t_max })?),
                Some(chosen_capacity),
            ),
            LearnerKind::Exp4Const => {
                let eta = l.eta.unwrap_or_else(|| default_constant_rate(chosen_capacity, t_max, n));
                (
                    Learner::Exp4(Exp4State::new(n, ScheduleKind::Constant { eta })?),
                    l.eta.is_none().then_some(chosen_capacity),
                )
            }
            LearnerKind::OmdFull => {
                let state = omd_init(&theta, t_max, crate::capacity::DEFAULT_KL_TOL)?;
                let c = state.kl_capacity();
                (Learner::Omd(state), Some(c))
            }
            LearnerKind::Exp3Direct => (Learner::Exp3(Exp3State::new(n)?), None),
        };
        info!(
            "{}: N={} K={} C in [{:.6}, {:.6}] learner={kind} env={}",
            config.experiment.id,
            n,
            theta.num_outcomes(),
            capacity.lower,
            capacity.upper,
            env.kind_name()
        );
        Ok(Prepared { config, theta, env, kind, mode, capacity, schedule_capacity, learner })
    }

    /// The learner as constructed, before any round.
    pub fn initial_learner(&self) -> &Learner {
        &self.learner
    }

    pub fn horizon(&self) -> usize {
        self.config.experiment.horizon
    }

    pub fn id(&self) -> &str {
        &self.config.experiment.id
    }

    /// Directory that trace and summary files go to.
    pub fn output_dir(&self, base: &Path) -> PathBuf {
        base.join(&self.config.experiment.output_dir)
    }

    /// The constant rate in force, for `exp4-const`.
    pub fn constant_rate(&self) -> Option<f64> {
        match &self.learner {
            Learner::Exp4(s) => match s.schedule() {
                ScheduleKind::Constant { eta } => Some(eta),
                _ => None,
            },
            _ => None,
        }
    }
}

/// `min{1, √(ln N/(e·C·T))}`, or 1 when `C = 0`.
pub fn default_constant_rate(capacity: f64, horizon: usize, n: usize) -> f64 {
    let r = ((n as f64).ln() / (std::f64::consts::E * capacity * horizon as f64)).sqrt();
    if r.is_finite() {
        r.min(1.0)
    } else {
        1.0
    }
}

/// Rounds that get a trace row: powers of two and `T` when `stride` is 0,
/// otherwise multiples of `stride` and `T`.
pub fn is_checkpoint(t: usize, horizon: usize, stride: usize) -> bool {
    t == horizon || if stride == 0 { t.is_power_of_two() } else { t.is_multiple_of(stride) }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Runs one replicate.
pub fn run_replicate(prep: &Prepared, replicate: usize) -> Result<RegretTrace> {
    let cfg = &prep.config.experiment;
    let (horizon, stride) = (cfg.horizon, cfg.record_every);
    let theta = &prep.theta;
    let n = theta.num_policies();
    let mut env_rng = stream(cfg.seed, &cfg.id, replicate as u64, Role::Environment);
    let mut learner_rng = stream(cfg.seed, &cfg.id, replicate as u64, Role::Learner);
    let mut env = Environment::new(prep.env.clone())?;
    let mut learner = prep.learner.clone();

    let stationary: Option<Vec<f64>> = env.stationary_mean().map(|m| theta.policy_losses(m));
    let mut cum_policy = vec![0.0; n];
    let mut snapshots: Vec<Vec<f64>> = Vec::new();
    let mut cum_learner = 0.0;
    let mut rows = Vec::new();
    let mut learner_cum_at = Vec::new();

    for t in 1..=horizon {
        let (p, eta) = learner.predict(theta)?;
        let chosen = sample_categorical(&p, &mut learner_rng);
        let round = env.sample_round(t, &mut env_rng)?;
        let row = theta.row(chosen);
        let expected_loss = dot(row, &round.mean);
        cum_learner += expected_loss;
        if stationary.is_none() {
            for (g, r) in cum_policy.iter_mut().zip(theta.rows()) {
                *g += dot(r, &round.mean);
            }
        }

        let (outcome, sampled_loss, obs) = match prep.mode {
            FeedbackMode::Mediator => {
                let x = sample_categorical(row, &mut learner_rng);
                let loss = round.loss[x];
                (Some(x), loss, Observation::Mediator { outcome: x, loss })
            }
            FeedbackMode::Linear => {
                let loss = dot(row, &round.loss);
                (None, loss, Observation::Linear { loss })
            }
            FeedbackMode::Full => (None, dot(row, &round.loss), Observation::Full { losses: &round.loss }),
        };
        learner.update(theta, &p, chosen, obs)?;

        if is_checkpoint(t, horizon, stride) {
            rows.push(TraceRow {
                t,
                eta,
                chosen,
                outcome,
                sampled_loss,
                expected_loss,
                cum_pseudo_regret: 0.0,
            });
            learner_cum_at.push(cum_learner);
            if stationary.is_none() {
                snapshots.push(cum_policy.clone());
            }
        }
    }

    let final_policy = match &stationary {
        Some(l) => l.clone(),
        None => cum_policy,
    };
    let best_policy = (0..n).fold(0, |b, i| if final_policy[i] < final_policy[b] { i } else { b });
    for (k, row) in rows.iter_mut().enumerate() {
        let comparator = match &stationary {
            Some(l) => row.t as f64 * l[best_policy],
            None => snapshots[k][best_policy],
        };
        row.cum_pseudo_regret = learner_cum_at[k] - comparator;
    }
    Ok(RegretTrace {
        replicate,
        seed: replicate_seed(cfg.seed, &cfg.id, replicate as u64),
        best_policy,
        rows,
    })
}

/// Runs every replicate; results come back in replicate order.
pub fn run_experiment(prep: &Prepared, exec: Execution) -> Result<Vec<RegretTrace>> {
    map_indexed(prep.config.experiment.replicates, exec, |r| run_replicate(prep, r))
        .into_iter()
        .collect()
}
