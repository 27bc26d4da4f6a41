//! Proptest strategies shared by the unit tests.

use proptest::prelude::*;

use crate::policy::PolicySet;
use crate::prob::{MixtureWeights, OutcomeDistribution};

pub fn dist(p: &[f64]) -> OutcomeDistribution {
    OutcomeDistribution::new(p.to_vec()).unwrap()
}

fn normalize(mut w: Vec<f64>) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Raw weights of length `len`; with `sparse`, roughly a third are zero.
fn weights(len: usize, sparse: bool) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec((0.01..1.0f64, 0..3u8), len).prop_map(move |v| {
        let mut w: Vec<f64> = v
            .iter()
            .map(|&(x, z)| if sparse && z == 0 { 0.0 } else { x })
            .collect();
        if w.iter().all(|&x| x == 0.0) {
            w[0] = 1.0;
        }
        normalize(w)
    })
}

pub fn distribution(len: usize, sparse: bool) -> impl Strategy<Value = OutcomeDistribution> {
    weights(len, sparse).prop_map(|w| OutcomeDistribution::new(w).unwrap())
}

pub fn distribution_pair(
    max_k: usize,
    sparse: bool,
) -> impl Strategy<Value = (OutcomeDistribution, OutcomeDistribution)> {
    (2..=max_k).prop_flat_map(move |k| (distribution(k, sparse), distribution(k, sparse)))
}

/// A prior over `n` rows and the rows themselves, `n, k ∈ [2, max]`.
pub fn distribution_rows(
    max_n: usize,
    max_k: usize,
) -> impl Strategy<Value = (MixtureWeights, Vec<OutcomeDistribution>)> {
    (2..=max_n, 2..=max_k).prop_flat_map(|(n, k)| {
        (
            weights(n, false).prop_map(|w| MixtureWeights::new(w).unwrap()),
            proptest::collection::vec(distribution(k, true), n),
        )
    })
}

pub fn policy_set(max_n: usize, max_k: usize) -> impl Strategy<Value = PolicySet> {
    distribution_rows(max_n, max_k).prop_map(|(_, rows)| PolicySet::new(rows).unwrap())
}

pub fn policy_set_with_prior(
    max_n: usize,
    max_k: usize,
) -> impl Strategy<Value = (MixtureWeights, PolicySet)> {
    distribution_rows(max_n, max_k).prop_map(|(tau, rows)| (tau, PolicySet::new(rows).unwrap()))
}
