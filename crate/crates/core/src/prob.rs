use std::cmp::Ordering;
use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};

/// Inputs whose total deviates from 1 by at most this much are accepted.
pub const PROB_TOLERANCE: f64 = 1e-9;
/// Below this deviation the input is kept verbatim, so stored vectors load back bit for bit.
const ROUNDING_SLACK: f64 = 1e-12;

fn validate(mut probs: Vec<f64>, min_len: usize, what: &str) -> Result<Vec<f64>> {
    if probs.len() < min_len {
        return Err(Error::InvalidDistribution(format!(
            "{what} needs at least {min_len} entries, got {}",
            probs.len()
        )));
    }
    if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "{what} has entry {bad}, entries must be finite and non-negative"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_TOLERANCE {
        return Err(Error::InvalidDistribution(format!(
            "{what} sums to {total}, not 1"
        )));
    }
    if (total - 1.0).abs() > ROUNDING_SLACK {
        probs.iter_mut().for_each(|p| *p /= total);
    }
    Ok(probs)
}

macro_rules! prob_vector {
    ($(#[$meta:meta])* $name:ident, $min_len:expr, $what:expr) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name(Vec<f64>);

        impl $name {
            pub fn new(probs: Vec<f64>) -> Result<Self> {
                validate(probs, $min_len, $what).map($name)
            }

            pub fn uniform(len: usize) -> Result<Self> {
                if len == 0 {
                    return Err(Error::InvalidDistribution(concat!($what, " of length 0").into()));
                }
                Self::new(vec![1.0 / len as f64; len])
            }

            /// Point mass on `index`.
            pub fn point_mass(len: usize, index: usize) -> Result<Self> {
                if index >= len {
                    return Err(Error::InvalidArgument(format!(
                        "point mass index {index} out of range for length {len}"
                    )));
                }
                let mut probs = vec![0.0; len];
                probs[index] = 1.0;
                Self::new(probs)
            }

            /// Wraps a vector already known to be a distribution. Callers in
            /// hot loops use this after arithmetic that preserves the simplex.
            pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
                debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
                $name(probs)
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.0
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl AsRef<[f64]> for $name {
            fn as_ref(&self) -> &[f64] {
                &self.0
            }
        }

        impl TryFrom<Vec<f64>> for $name {
            type Error = Error;
            fn try_from(v: Vec<f64>) -> Result<Self> {
                Self::new(v)
            }
        }
    };
}

prob_vector!(
    /// A probability vector over K ≥ 2 outcomes: a policy, a mixture of
    /// policies, or an output distribution.
    OutcomeDistribution,
    2,
    "outcome distribution"
);

prob_vector!(
    /// A probability vector over the N policies of a set (a prior, or the
    /// learner's play distribution).
    MixtureWeights,
    1,
    "mixture weights"
);

/// A non-negative value that may be `+∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    Infinite,
}

impl ExtendedReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::Infinite => None,
        }
    }

    /// The finite value, or `f64::INFINITY`. Useful only for comparisons.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn max(self, other: Self) -> Self {
        match (self, other) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a.max(b)),
            _ => ExtendedReal::Infinite,
        }
    }
}

impl std::ops::Add for ExtendedReal {
    type Output = ExtendedReal;
    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a + b),
            _ => ExtendedReal::Infinite,
        }
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::Infinite => f.write_str("inf"),
        }
    }
}
