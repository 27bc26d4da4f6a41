//! Finite-alphabet f-divergences and f-mutual information.
//!
//! Every divergence here has the form `D_f(p‖q) = Σ_x q(x) f(p(x)/q(x))`
//! with the boundary conventions `0·f(0/0) = 0` and
//! `0·f(a/0) = a·f'(∞)`. Terms are dropped by support filtering, never by
//! flooring probabilities, so KL and χ² come back as [`ExtendedReal::Infinite`]
//! exactly when `p` puts mass outside the support of `q`.
//!
//! | kind              | f(t)                 | f'(∞) |
//! |-------------------|----------------------|-------|
//! | total variation   | ½·abs(t − 1)         | ½     |
//! | squared Hellinger | ½·(√t − 1)²          | ½     |
//! | triangular        | (t − 1)² / (t + 1)   | 1     |
//! | KL                | t·ln t               | ∞     |
//! | χ²                | (t − 1)²             | ∞     |
//!
//! All logarithms are natural.

use crate::error::{check_dim, Error, Result};
use crate::prob::{ExtendedReal, MixtureWeights, OutcomeDistribution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DivergenceKind {
    TotalVariation,
    HellingerSq,
    Triangular,
    Kl,
    ChiSq,
}

impl DivergenceKind {
    pub const ALL: [DivergenceKind; 5] = [
        DivergenceKind::TotalVariation,
        DivergenceKind::HellingerSq,
        DivergenceKind::Triangular,
        DivergenceKind::Kl,
        DivergenceKind::ChiSq,
    ];

    pub fn is_symmetric(self) -> bool {
        matches!(
            self,
            DivergenceKind::TotalVariation | DivergenceKind::HellingerSq | DivergenceKind::Triangular
        )
    }
}

/// `D_f(p‖q)` on raw slices, with no validation. Both slices must be
/// distributions of equal length.
pub(crate) fn f_divergence_raw(kind: DivergenceKind, p: &[f64], q: &[f64]) -> ExtendedReal {
    debug_assert_eq!(p.len(), q.len());
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a == 0.0 && b == 0.0 {
            continue;
        }
        let term = match kind {
            DivergenceKind::TotalVariation => 0.5 * (a - b).abs(),
            DivergenceKind::HellingerSq => {
                let d = a.sqrt() - b.sqrt();
                0.5 * d * d
            }
            DivergenceKind::Triangular => (a - b) * (a - b) / (a + b),
            DivergenceKind::Kl => {
                if a == 0.0 {
                    0.0
                } else if b == 0.0 {
                    return ExtendedReal::Infinite;
                } else {
                    a * (a / b).ln()
                }
            }
            DivergenceKind::ChiSq => {
                if b == 0.0 {
                    return ExtendedReal::Infinite;
                }
                (a - b) * (a - b) / b
            }
        };
        total += term;
    }
    // Rounding can leave KL a hair below zero when p ≈ q.
    ExtendedReal::Finite(total.max(0.0))
}

pub fn f_divergence(
    kind: DivergenceKind,
    p: &OutcomeDistribution,
    q: &OutcomeDistribution,
) -> Result<ExtendedReal> {
    check_dim(p.len(), q.len())?;
    Ok(f_divergence_raw(kind, p, q))
}

/// Vincze–Le Cam divergence of order `r`:
/// `r(1−r)·Σ_x (p(x)−q(x))² / (r·p(x) + (1−r)·q(x))`.
///
/// This is `Q_τ` of the two-policy set `{p, q}` with `τ = (r, 1−r)`.
pub fn vincze_le_cam(r: f64, p: &OutcomeDistribution, q: &OutcomeDistribution) -> Result<f64> {
    check_dim(p.len(), q.len())?;
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidArgument(format!("order r = {r} outside [0, 1]")));
    }
    Ok(vincze_le_cam_raw(r, p, q))
}

pub(crate) fn vincze_le_cam_raw(r: f64, p: &[f64], q: &[f64]) -> f64 {
    let weight = r * (1.0 - r);
    if weight == 0.0 {
        return 0.0;
    }
    let sum: f64 = p
        .iter()
        .zip(q)
        .filter_map(|(&a, &b)| {
            let denom = r * a + (1.0 - r) * b;
            (denom > 0.0).then(|| (a - b) * (a - b) / denom)
        })
        .sum();
    weight * sum
}

fn check_rows(rows: &[OutcomeDistribution]) -> Result<usize> {
    let k = rows
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty row set".into()))?
        .len();
    for row in rows {
        check_dim(k, row.len())?;
    }
    Ok(k)
}

/// `Σ_x τ(x)·row_x` over raw slices.
pub(crate) fn mix_rows(tau: &[f64], rows: &[OutcomeDistribution]) -> Vec<f64> {
    let k = rows[0].len();
    let mut out = vec![0.0; k];
    for (&w, row) in tau.iter().zip(rows) {
        if w == 0.0 {
            continue;
        }
        for (o, &r) in out.iter_mut().zip(row.iter()) {
            *o += w * r;
        }
    }
    out
}

/// `I_f(τ, rows) = Σ_x τ(x)·D_f(row_x ‖ Σ_x' τ(x')·row_x')`: the f-mutual
/// information between an input drawn from `τ` and the output of the
/// channel whose conditional laws are `rows`.
pub fn mutual_f_information(
    kind: DivergenceKind,
    tau: &MixtureWeights,
    rows: &[OutcomeDistribution],
) -> Result<ExtendedReal> {
    check_rows(rows)?;
    check_dim(rows.len(), tau.len())?;
    let mixture = mix_rows(tau, rows);
    let mut total = ExtendedReal::Finite(0.0);
    for (&w, row) in tau.iter().zip(rows) {
        if w == 0.0 {
            continue;
        }
        total = total
            + match f_divergence_raw(kind, row, &mixture) {
                ExtendedReal::Finite(d) => ExtendedReal::Finite(w * d),
                ExtendedReal::Infinite => ExtendedReal::Infinite,
            };
    }
    Ok(total)
}

/// `Σ_x τ(x)·D_f(rows_p[x] ‖ rows_q[x])`.
pub fn conditional_f_divergence(
    kind: DivergenceKind,
    rows_p: &[OutcomeDistribution],
    rows_q: &[OutcomeDistribution],
    tau: &MixtureWeights,
) -> Result<ExtendedReal> {
    let k = check_rows(rows_p)?;
    check_dim(k, check_rows(rows_q)?)?;
    check_dim(rows_p.len(), rows_q.len())?;
    check_dim(rows_p.len(), tau.len())?;
    let mut total = ExtendedReal::Finite(0.0);
    for ((&w, p), q) in tau.iter().zip(rows_p).zip(rows_q) {
        if w == 0.0 {
            continue;
        }
        total = total
            + match f_divergence_raw(kind, p, q) {
                ExtendedReal::Finite(d) => ExtendedReal::Finite(w * d),
                ExtendedReal::Infinite => ExtendedReal::Infinite,
            };
    }
    Ok(total)
}

/// Shannon entropy in nats.
pub fn shannon_entropy(p: &MixtureWeights) -> f64 {
    entropy_raw(p)
}

pub(crate) fn entropy_raw(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

/// KL divergence between Bernoulli(a) and Bernoulli(b).
pub fn bernoulli_kl(a: f64, b: f64) -> ExtendedReal {
    f_divergence_raw(DivergenceKind::Kl, &[a, 1.0 - a], &[b, 1.0 - b])
}
