//! Policy sets: constructors for the structured families, mixtures, and the
//! coarse size measures `S(Θ)`, `V(Θ) = S(Θ) − 1` and the χ² diameter.

use std::path::Path;

use crate::divergence::{f_divergence_raw, mix_rows, DivergenceKind};
use crate::error::{check_dim, Error, Result};
use crate::matrix_io;
use crate::prob::{ExtendedReal, MixtureWeights, OutcomeDistribution};

/// Default cap on the number of policies a constructor may enumerate.
pub const DEFAULT_POLICY_CAP: usize = 1_000_000;

/// Structure recognized at construction time. Capacity routines use it to
/// return closed forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    /// `θ_i(x) = (1−ε)/n + ε·1{x = i}`.
    EpsilonGreedy { n: usize, epsilon: f64 },
    /// Every policy uniform on `m` of `k` outcomes, every outcome covered.
    UniformSupported { k: usize, m: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicySet {
    rows: Vec<OutcomeDistribution>,
    labels: Option<Vec<String>>,
    family: Option<Family>,
}

impl PolicySet {
    /// Builds a set from N ≥ 2 rows over a common K ≥ 2 outcomes. Outcomes no
    /// policy can produce are allowed here but logged.
    pub fn new(rows: Vec<OutcomeDistribution>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a policy set needs at least 2 policies, got {}",
                rows.len()
            )));
        }
        let k = rows[0].len();
        for row in &rows {
            check_dim(k, row.len())?;
        }
        let set = PolicySet {
            rows,
            labels: None,
            family: None,
        };
        if let Some(x) = set.uncovered_outcome() {
            log::warn!("outcome {} has zero mass under every policy", x + 1);
        }
        Ok(set)
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let rows = rows
            .into_iter()
            .map(OutcomeDistribution::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        check_dim(self.rows.len(), labels.len())?;
        self.labels = Some(labels);
        Ok(self)
    }

    fn tagged(mut self, family: Family) -> Self {
        self.family = Some(family);
        self
    }

    /// Drops the family tag, forcing capacity routines onto their general path.
    pub fn untagged(mut self) -> Self {
        self.family = None;
        self
    }

    pub fn num_policies(&self) -> usize {
        self.rows.len()
    }

    pub fn num_outcomes(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[OutcomeDistribution] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &OutcomeDistribution {
        &self.rows[i]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn family(&self) -> Option<Family> {
        self.family
    }

    /// First outcome with zero mass under every policy, if any.
    pub fn uncovered_outcome(&self) -> Option<usize> {
        (0..self.num_outcomes()).find(|&x| self.rows.iter().all(|r| r[x] == 0.0))
    }

    pub(crate) fn require_coverage(&self) -> Result<()> {
        match self.uncovered_outcome() {
            Some(x) => Err(Error::InvalidArgument(format!(
                "outcome {} is not in the support of any policy",
                x + 1
            ))),
            None => Ok(()),
        }
    }

    /// `ψ(x) = Σ_θ τ(θ)·θ(x)`.
    pub fn mixture(&self, tau: &MixtureWeights) -> Result<OutcomeDistribution> {
        check_dim(self.rows.len(), tau.len())?;
        OutcomeDistribution::new(mix_rows(tau, &self.rows))
    }

    pub(crate) fn mixture_raw(&self, tau: &[f64]) -> Vec<f64> {
        mix_rows(tau, &self.rows)
    }

    /// `ψ(x)` at a single outcome.
    pub(crate) fn mixture_at(&self, tau: &[f64], x: usize) -> f64 {
        tau.iter().zip(&self.rows).map(|(&w, r)| w * r[x]).sum()
    }

    /// Expected loss of each policy under a loss map.
    pub fn policy_losses(&self, loss: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(loss).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `(S, V)` with `S = Σ_x max_θ θ(x)` and `V = S − 1`.
    pub fn s_and_v(&self) -> (f64, f64) {
        let s: f64 = (0..self.num_outcomes())
            .map(|x| self.rows.iter().map(|r| r[x]).fold(0.0, f64::max))
            .sum();
        (s, s - 1.0)
    }

    /// `max_{θ,θ'} χ²(θ‖θ')`.
    pub fn chi_diameter(&self) -> ExtendedReal {
        let mut best = ExtendedReal::Finite(0.0);
        for (i, p) in self.rows.iter().enumerate() {
            for (j, q) in self.rows.iter().enumerate() {
                if i != j {
                    best = best.max(f_divergence_raw(DivergenceKind::ChiSq, p, q));
                    if best == ExtendedReal::Infinite {
                        return best;
                    }
                }
            }
        }
        best
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_rows(matrix_io::read_matrix(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_rows(matrix_io::parse_matrix(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        matrix_io::write_matrix(path, &self.rows)
    }

    pub fn to_matrix_string(&self) -> String {
        matrix_io::format_matrix(&self.rows)
    }
}

/// `n` policies over `n` outcomes with `θ_i(x) = (1−ε)/n + ε·1{x = i}`.
pub fn make_epsilon_greedy(n: usize, epsilon: f64) -> Result<PolicySet> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("epsilon-greedy needs n >= 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} outside [0, 1]")));
    }
    let base = (1.0 - epsilon) / n as f64;
    let rows = (0..n)
        .map(|i| {
            let mut row = vec![base; n];
            row[i] += epsilon;
            OutcomeDistribution::new(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PolicySet::new(rows)?.tagged(Family::EpsilonGreedy { n, epsilon }))
}

/// Policies uniform on the given supports (0-based outcome indices).
///
/// All supports must have the same size and together cover every outcome.
pub fn make_uniform_supported(supports: &[Vec<usize>], k: usize) -> Result<PolicySet> {
    let m = supports.first().map_or(0, Vec::len);
    if m == 0 {
        return Err(Error::InvalidArgument("supports must be non-empty".into()));
    }
    let mut covered = vec![false; k];
    let mut rows = Vec::with_capacity(supports.len());
    for support in supports {
        if support.len() != m {
            return Err(Error::InvalidArgument(format!(
                "uneven supports: sizes {m} and {}",
                support.len()
            )));
        }
        let mut row = vec![0.0; k];
        for &x in support {
            if x >= k {
                return Err(Error::InvalidArgument(format!("outcome {} out of range", x + 1)));
            }
            if row[x] != 0.0 {
                return Err(Error::InvalidArgument(format!("outcome {} repeated", x + 1)));
            }
            row[x] = 1.0 / m as f64;
            covered[x] = true;
        }
        rows.push(OutcomeDistribution::new(row)?);
    }
    if let Some(x) = covered.iter().position(|c| !c) {
        return Err(Error::InvalidArgument(format!(
            "outcome {} is not covered by any support",
            x + 1
        )));
    }
    Ok(PolicySet::new(rows)?.tagged(Family::UniformSupported { k, m }))
}

/// `k` policies, policy `i` uniform on the cyclic window `{i, …, i+m−1} mod k`.
pub fn make_uniform_cyclic(k: usize, m: usize) -> Result<PolicySet> {
    if m == 0 || m > k {
        return Err(Error::InvalidArgument(format!("need 1 <= m <= k, got m={m}, k={k}")));
    }
    let supports: Vec<Vec<usize>> = (0..k).map(|i| (0..m).map(|j| (i + j) % k).collect()).collect();
    make_uniform_supported(&supports, k)
}

/// `m` simultaneous `q`-armed games: `K = m·q` outcomes ordered
/// `(1,1), …, (1,q), (2,1), …`, one policy per choice vector in
/// lexicographic order, each placing mass `1/m` on its choice in every
/// section.
pub fn make_multitask(m: usize, q: usize) -> Result<PolicySet> {
    make_multitask_capped(m, q, DEFAULT_POLICY_CAP)
}

pub fn make_multitask_capped(m: usize, q: usize, cap: usize) -> Result<PolicySet> {
    if m < 1 || q < 2 {
        return Err(Error::InvalidArgument(format!("need m >= 1 and q >= 2, got m={m}, q={q}")));
    }
    let n = multitask_size(m, q).filter(|&n| n <= cap).ok_or_else(|| {
        Error::TooLarge(format!("{q}^{m} policies exceeds the cap of {cap}"))
    })?;
    let supports: Vec<Vec<usize>> = (0..n)
        .map(|idx| {
            multitask_choices(idx, m, q)
                .into_iter()
                .enumerate()
                .map(|(section, j)| section * q + j)
                .collect()
        })
        .collect();
    make_uniform_supported(&supports, m * q)
}

pub(crate) fn multitask_size(m: usize, q: usize) -> Option<usize> {
    (0..m).try_fold(1usize, |acc, _| acc.checked_mul(q))
}

/// Choice vector (0-based, section order) of the `idx`-th multitask policy.
pub fn multitask_choices(idx: usize, m: usize, q: usize) -> Vec<usize> {
    let mut choices = vec![0; m];
    let mut rest = idx;
    for slot in choices.iter_mut().rev() {
        *slot = rest % q;
        rest /= q;
    }
    choices
}

/// A sequence of per-round policy sets sharing N and K (time-varying advice).
#[derive(Clone, Debug)]
pub struct AdviceSequence {
    rounds: Vec<PolicySet>,
}

impl AdviceSequence {
    pub fn new(rounds: Vec<PolicySet>) -> Result<Self> {
        let first = rounds
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty advice sequence".into()))?;
        let (n, k) = (first.num_policies(), first.num_outcomes());
        for r in &rounds {
            check_dim(n, r.num_policies())?;
            check_dim(k, r.num_outcomes())?;
        }
        Ok(AdviceSequence { rounds })
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn round(&self, t: usize) -> &PolicySet {
        &self.rounds[t]
    }

    pub fn iter(&self) -> impl Iterator<Item = &PolicySet> {
        self.rounds.iter()
    }
}
