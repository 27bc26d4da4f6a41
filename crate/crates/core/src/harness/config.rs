//! Experiment configuration.
//!
//! Configs are TOML files with four sections. Every key is checked; unknown
//! keys and sections are errors.
//!
//! ```toml
//! [experiment]
//! id = "eps-half"
//! horizon = 50000
//! replicates = 20
//! seed = 7
//! output_dir = "out"
//! record_every = 0          # 0: powers of two plus the final round
//! feedback = "mediator"     # mediator | linear | full
//!
//! [policies]
//! family = "epsilon-greedy" # epsilon-greedy | uniform-cyclic | multitask | file
//! n = 16
//! epsilon = 0.5
//!
//! [environment]
//! kind = "bernoulli"        # bernoulli | corrupted | adversarial | uniform-adversarial | linear-gaussian
//! gap = 0.2                 # or an explicit `mu = [...]`
//!
//! [learner]
//! name = "exp4-fixed"
//! capacity = "auto"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::{corruption_target, EnvironmentSpec};
use crate::error::{Error, Result};
use crate::learners::{FeedbackMode, LearnerKind};
use crate::matrix_io::read_matrix;
use crate::policy::{make_epsilon_greedy, make_multitask, make_uniform_cyclic, PolicySet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub policies: PolicySource,
    pub environment: EnvironmentSection,
    pub learner: LearnerSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub id: String,
    pub horizon: usize,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub record_every: usize,
    #[serde(default = "default_feedback")]
    pub feedback: String,
}

fn one() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(".")
}

fn default_feedback() -> String {
    "mediator".into()
}

/// Where the policy set comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicySource {
    EpsilonGreedy { n: usize, epsilon: f64 },
    UniformCyclic { k: usize, m: usize },
    Multitask { m: usize, q: usize },
    File { path: PathBuf },
}

impl PolicySource {
    /// Relative file paths resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<PolicySet> {
        match self {
            PolicySource::EpsilonGreedy { n, epsilon } => make_epsilon_greedy(*n, *epsilon),
            PolicySource::UniformCyclic { k, m } => make_uniform_cyclic(*k, *m),
            PolicySource::Multitask { m, q } => make_multitask(*m, *q),
            PolicySource::File { path } => PolicySet::load(base.join(path)),
        }
    }

    /// Parses a compact descriptor: `eps:N:EPS`, `cyclic:K:M`,
    /// `multitask:M:Q`, or a file path.
    pub fn parse_descriptor(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<&str> {
            parts.get(i).copied().ok_or_else(|| Error::Config(format!("descriptor `{s}` is missing fields")))
        };
        let int = |i: usize| -> Result<usize> {
            num(i)?.parse().map_err(|_| Error::Config(format!("bad integer in descriptor `{s}`")))
        };
        let source = match parts[0] {
            "eps" | "epsilon-greedy" => PolicySource::EpsilonGreedy {
                n: int(1)?,
                epsilon: num(2)?.parse().map_err(|_| Error::Config(format!("bad epsilon in `{s}`")))?,
            },
            "cyclic" | "uniform-cyclic" => PolicySource::UniformCyclic { k: int(1)?, m: int(2)? },
            "multitask" => PolicySource::Multitask { m: int(1)?, q: int(2)? },
            _ if parts.len() == 1 => return Ok(PolicySource::File { path: PathBuf::from(s) }),
            other => return Err(Error::Config(format!("unknown policy family `{other}`"))),
        };
        if parts.len() != 3 {
            return Err(Error::Config(format!("descriptor `{s}` has {} fields, expected 3", parts.len())));
        }
        Ok(source)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSection {
    pub kind: String,
    /// Explicit outcome means.
    pub mu: Option<Vec<f64>>,
    /// Builds means with this minimum policy-level gap instead of `mu`.
    pub gap: Option<f64>,
    /// 1-based outcome given the low mean in the `gap` construction.
    pub best: Option<usize>,
    /// Expected loss of the best policy in the `gap` construction.
    pub best_loss: Option<f64>,
    /// Adversarial loss sequence (T rows × K columns).
    pub losses_file: Option<PathBuf>,
    /// Corruption per round and total budget.
    pub level: Option<f64>,
    pub budget: Option<f64>,
    pub sigma: Option<f64>,
    pub clipped: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CapacitySetting {
    Value(f64),
    Auto(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSection {
    pub name: String,
    /// `"auto"` or a number; used by exp4-fixed, exp4-bobw and the default
    /// exp4-const rate.
    pub capacity: Option<CapacitySetting>,
    /// Constant rate for exp4-const.
    pub eta: Option<f64>,
    /// Iteration budget for the capacity optimizer.
    pub capacity_budget: Option<usize>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn deserialize_table(table: toml::Table) -> Result<Self> {
        table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn feedback(&self) -> Result<FeedbackMode> {
        self.experiment.feedback.parse()
    }

    pub fn learner_kind(&self) -> Result<LearnerKind> {
        self.learner.name.parse()
    }

    /// Checks everything that does not need the policy set.
    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.id.is_empty() || e.id.contains(|c: char| c == ',' || c == '/' || c.is_whitespace()) {
            return Err(Error::Config(format!("experiment id `{}` must be non-empty without commas, slashes or spaces", e.id)));
        }
        if e.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if e.replicates == 0 {
            return Err(Error::Config("replicates must be >= 1".into()));
        }
        self.learner_kind()?.check_mode(self.feedback()?)?;
        if let Some(CapacitySetting::Auto(s)) = &self.learner.capacity {
            if s != "auto" {
                return Err(Error::Config(format!("capacity must be a number or \"auto\", got `{s}`")));
            }
        }
        Ok(())
    }

    /// Builds the environment for a given policy set. `base` resolves
    /// relative paths.
    pub fn environment_spec(&self, theta: &PolicySet, base: &Path) -> Result<EnvironmentSpec> {
        let env = &self.environment;
        let k = theta.num_outcomes();
        let allowed: &[&str] = match env.kind.as_str() {
            "bernoulli" => &["mu", "gap", "best", "best_loss"],
            "corrupted" => &["mu", "gap", "best", "best_loss", "level", "budget"],
            "adversarial" => &["losses_file"],
            "uniform-adversarial" => &[],
            "linear-gaussian" => &["mu", "gap", "best", "best_loss", "sigma", "clipped"],
            other => {
                return Err(Error::Config(format!(
                    "unknown environment kind `{other}` (expected bernoulli, corrupted, adversarial, uniform-adversarial or linear-gaussian)"
                )))
            }
        };
        let present = [
            ("mu", env.mu.is_some()),
            ("gap", env.gap.is_some()),
            ("best", env.best.is_some()),
            ("best_loss", env.best_loss.is_some()),
            ("losses_file", env.losses_file.is_some()),
            ("level", env.level.is_some()),
            ("budget", env.budget.is_some()),
            ("sigma", env.sigma.is_some()),
            ("clipped", env.clipped.is_some()),
        ];
        if let Some((key, _)) = present.iter().find(|(key, set)| *set && !allowed.contains(key)) {
            return Err(Error::Config(format!("key `{key}` does not apply to environment kind `{}`", env.kind)));
        }

        let means = || -> Result<Vec<f64>> {
            let mu = match (&env.mu, env.gap) {
                (Some(mu), None) => mu.clone(),
                (None, Some(gap)) => gap_means(theta, gap, env.best.unwrap_or(1), env.best_loss)?,
                _ => return Err(Error::Config("give exactly one of `mu` and `gap`".into())),
            };
            if mu.len() != k {
                return Err(Error::Config(format!("`mu` has {} entries for {k} outcomes", mu.len())));
            }
            Ok(mu)
        };
        if (env.best.is_some() || env.best_loss.is_some()) && env.gap.is_none() {
            return Err(Error::Config("`best` and `best_loss` only apply with `gap`".into()));
        }

        let spec = match env.kind.as_str() {
            "bernoulli" => EnvironmentSpec::Bernoulli { mu: means()? },
            "corrupted" => {
                let mu = means()?;
                let target = corruption_target(theta, &mu)?;
                EnvironmentSpec::Corrupted {
                    mu,
                    level: env.level.ok_or_else(|| Error::Config("corrupted environment needs `level`".into()))?,
                    budget: env.budget.ok_or_else(|| Error::Config("corrupted environment needs `budget`".into()))?,
                    target,
                }
            }
            "adversarial" => {
                let path = env
                    .losses_file
                    .as_ref()
                    .ok_or_else(|| Error::Config("adversarial environment needs `losses_file`".into()))?;
                let losses = read_matrix(base.join(path))?;
                if losses.len() < self.experiment.horizon {
                    return Err(Error::Config(format!(
                        "loss sequence has {} rounds, horizon is {}",
                        losses.len(),
                        self.experiment.horizon
                    )));
                }
                EnvironmentSpec::Adversarial { losses }
            }
            "uniform-adversarial" => EnvironmentSpec::UniformAdversarial { k },
            _ => EnvironmentSpec::LinearGaussian {
                mu: means()?,
                sigma: env.sigma.ok_or_else(|| Error::Config("linear-gaussian environment needs `sigma`".into()))?,
                clipped: env.clipped.unwrap_or(true),
            },
        };
        if spec.num_outcomes() != k {
            return Err(Error::DimensionMismatch { expected: k, found: spec.num_outcomes() });
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Outcome means `a` on outcome `best` (1-based) and `a + d` elsewhere,
/// with `d` chosen so the smallest gap between the best policy and any
/// other is exactly `gap`. By default `a = ½ − d/2`; with `best_loss`, `a`
/// is set so the best policy's expected loss equals it. Fails when a mean
/// leaves `[0, 1]`.
pub fn gap_means(theta: &PolicySet, gap: f64, best: usize, best_loss: Option<f64>) -> Result<Vec<f64>> {
    let k = theta.num_outcomes();
    if best == 0 || best > k {
        return Err(Error::Config(format!("`best` = {best} outside 1..={k}")));
    }
    if !(gap > 0.0) {
        return Err(Error::Config(format!("`gap` must be positive, got {gap}")));
    }
    let v: Vec<f64> = (0..k).map(|x| if x + 1 == best { 0.0 } else { 1.0 }).collect();
    let mass = theta.policy_losses(&v);
    let i_best = (0..mass.len()).fold(0, |b, i| if mass[i] < mass[b] { i } else { b });
    let unit_gap = mass
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != i_best)
        .map(|(_, l)| l - mass[i_best])
        .fold(f64::INFINITY, f64::min);
    if !(unit_gap > 0.0) {
        return Err(Error::Config(format!(
            "outcome {best} does not single out a best policy; no gap construction exists"
        )));
    }
    let d = gap / unit_gap;
    let a = match best_loss {
        None => 0.5 - d / 2.0,
        Some(l) => l - d * mass[i_best],
    };
    if d > 1.0 || a < 0.0 || a + d > 1.0 {
        return Err(Error::Config(format!(
            "gap {gap} needs outcome means {a} and {}, outside [0, 1]",
            a + d
        )));
    }
    Ok(v.iter().map(|s| a + d * s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[experiment]
id = "t"
horizon = 100
replicates = 2
seed = 3

[policies]
family = "epsilon-greedy"
n = 4
epsilon = 0.5

[environment]
kind = "bernoulli"
gap = 0.2

[learner]
name = "exp4-fixed"
capacity = "auto"
"#;

    #[test]
    fn parses_and_validates() {
        let cfg = ExperimentConfig::parse(BASE).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.experiment.record_every, 0);
        assert_eq!(cfg.policies, PolicySource::EpsilonGreedy { n: 4, epsilon: 0.5 });
        let back = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn unknown_keys_are_errors() {
        for (from, to) in [
            ("seed = 3", "seed = 3\ncolour = 1"),
            ("epsilon = 0.5", "epsilon = 0.5\nk = 2"),
            ("gap = 0.2", "gap = 0.2\nmood = 1"),
            ("capacity = \"auto\"", "capacity = \"auto\"\nrate = 1"),
            ("[learner]", "[extra]\na = 1\n[learner]"),
        ] {
            let text = BASE.replace(from, to);
            assert!(ExperimentConfig::parse(&text).is_err(), "{to}");
        }
    }

    #[test]
    fn incompatible_learner_and_mode() {
        let cfg = ExperimentConfig::parse(&BASE.replace("seed = 3", "seed = 3\nfeedback = \"full\"")).unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::parse(&BASE.replace("exp4-fixed", "omd-full").replace("seed = 3", "seed = 3\nfeedback = \"full\"")).unwrap();
        cfg.validate().unwrap();
    }

    #[test]
    fn environment_keys_checked_per_kind() {
        let cfg = ExperimentConfig::parse(&BASE.replace("gap = 0.2", "gap = 0.2\nsigma = 0.1")).unwrap();
        let theta = cfg.policies.build(Path::new(".")).unwrap();
        assert!(cfg.environment_spec(&theta, Path::new(".")).is_err());
        let cfg = ExperimentConfig::parse(&BASE.replace("gap = 0.2", "mu = [0.1, 0.2]")).unwrap();
        assert!(cfg.environment_spec(&theta, Path::new(".")).is_err());
    }

    #[test]
    fn gap_construction() {
        for (eps, low, high) in [(1.0, 0.4, 0.6), (0.5, 0.3, 0.7), (0.25, 0.1, 0.9)] {
            let theta = make_epsilon_greedy(16, eps).unwrap();
            let mu = gap_means(&theta, 0.2, 1, None).unwrap();
            assert!((mu[0] - low).abs() < 1e-12 && (mu[5] - high).abs() < 1e-12);
            let l = theta.policy_losses(&mu);
            for i in 1..16 {
                assert!((l[i] - l[0] - 0.2).abs() < 1e-12);
            }
            let mu = gap_means(&theta, 0.2, 1, Some(0.6)).unwrap();
            let l = theta.policy_losses(&mu);
            assert!((l[0] - 0.6).abs() < 1e-12);
            for i in 1..16 {
                assert!((l[i] - 0.8).abs() < 1e-12);
            }
        }
        let theta = make_epsilon_greedy(4, 0.1).unwrap();
        assert!(gap_means(&theta, 0.2, 1, None).is_err());
        let theta = make_epsilon_greedy(16, 0.25).unwrap();
        assert!(gap_means(&theta, 0.2, 1, Some(0.3)).is_err());
    }

    #[test]
    fn descriptors() {
        assert_eq!(PolicySource::parse_descriptor("eps:8:0.25").unwrap(), PolicySource::EpsilonGreedy { n: 8, epsilon: 0.25 });
        assert_eq!(PolicySource::parse_descriptor("cyclic:6:2").unwrap(), PolicySource::UniformCyclic { k: 6, m: 2 });
        assert_eq!(PolicySource::parse_descriptor("multitask:2:3").unwrap(), PolicySource::Multitask { m: 2, q: 3 });
        assert_eq!(PolicySource::parse_descriptor("sets/a.txt").unwrap(), PolicySource::File { path: "sets/a.txt".into() });
        assert!(PolicySource::parse_descriptor("eps:8").is_err());
        assert!(PolicySource::parse_descriptor("ring:3:1").is_err());
    }
}
