//! Policy-set capacities.
//!
//! The χ² capacity `C(Θ) = sup_τ Q_τ(Θ)` with
//! `Q_τ(Θ) = Σ_θ τ(θ)·χ²(θ ‖ Σ_θ' τ(θ')θ')`. `Q_τ` is a sum of
//! linear-fractional terms, not concave in general, and the supremum need
//! not be attained, so for general sets [`chi_capacity`] returns a bracket:
//! the best `Q_τ` found by multi-start entropic ascent, and the certified
//! upper bound `min{V(Θ), d_χ²(Θ), N−1, K−1}`. Two-policy sets use golden
//! section on the concave Vincze–Le Cam curve; recognized families return
//! their closed forms.
//!
//! The KL capacity (information radius) is computed by Blahut–Arimoto.

use crate::divergence::{entropy_raw, f_divergence_raw, vincze_le_cam_raw, DivergenceKind};
use crate::error::{check_dim, Error, Result};
use crate::hull::{minimize, HullObjective};
use crate::par::{map_indexed, Execution};
use crate::policy::{Family, PolicySet};
use crate::prob::{MixtureWeights, OutcomeDistribution};

/// Smallest prior weight kept during ascent.
const TAU_FLOOR: f64 = 1e-12;
/// Interval width at which golden section stops when used inside [`chi_capacity`].
const GOLDEN_TOL: f64 = 1e-12;

pub const DEFAULT_CHI_TOL: f64 = 1e-6;
pub const DEFAULT_CHI_BUDGET: usize = 5_000;
pub const DEFAULT_KL_TOL: f64 = 1e-9;
pub const DEFAULT_KL_MAX_ITER: usize = 100_000;

/// `Q_τ(Θ)`, the χ² mutual information between a `τ`-drawn policy and its outcome.
pub fn q_tau(tau: &MixtureWeights, theta: &PolicySet) -> Result<f64> {
    check_dim(theta.num_policies(), tau.len())?;
    Ok(q_tau_raw(tau, theta))
}

/// `Σ_x A(x)/ψ(x) − 1` with `A(x) = Σ_θ τ(θ)θ(x)²` and `ψ = mixture(τ)`.
/// Equals `Q_τ` on the simplex.
pub(crate) fn q_tau_raw(tau: &[f64], theta: &PolicySet) -> f64 {
    let (second, psi) = moments(tau, theta);
    let total: f64 = second
        .iter()
        .zip(&psi)
        .filter(|(_, &p)| p > 0.0)
        .map(|(a, p)| a / p)
        .sum();
    (total - 1.0).max(0.0)
}

fn moments(tau: &[f64], theta: &PolicySet) -> (Vec<f64>, Vec<f64>) {
    let k = theta.num_outcomes();
    let mut second = vec![0.0; k];
    let mut psi = vec![0.0; k];
    for (&w, row) in tau.iter().zip(theta.rows()) {
        for x in 0..k {
            let r = row[x];
            psi[x] += w * r;
            second[x] += w * r * r;
        }
    }
    (second, psi)
}

/// Gradient of `τ ↦ Σ_x A(x)/ψ(x) − 1` over `R^N`:
/// `∂/∂τ_i = Σ_x θ_i(x)²/ψ(x) − θ_i(x)·A(x)/ψ(x)²`.
pub fn q_tau_gradient(tau: &[f64], theta: &PolicySet) -> Vec<f64> {
    let (second, psi) = moments(tau, theta);
    theta
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .zip(&psi)
                .zip(&second)
                .filter(|((_, &p), _)| p > 0.0)
                .map(|((&r, &p), &a)| r * r / p - r * a / (p * p))
                .sum()
        })
        .collect()
}

/// Lower and upper bounds on `C(Θ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CapacityBracket {
    /// Best `Q_τ` found; attained at `argmax_tau`.
    pub lower: f64,
    /// Certified upper bound.
    pub upper: f64,
    pub argmax_tau: MixtureWeights,
    pub certified_exact: bool,
}

/// `min{V(Θ), d_χ²(Θ), N−1, K−1}`.
pub fn chi_upper_bound(theta: &PolicySet) -> f64 {
    let (_, v) = theta.s_and_v();
    let n = theta.num_policies() as f64;
    let k = theta.num_outcomes() as f64;
    v.min(theta.chi_diameter().to_f64()).min(n - 1.0).min(k - 1.0).max(0.0)
}

/// Closed-form capacity of a recognized family.
pub fn capacity_closed_form(family: &Family) -> Result<f64> {
    match *family {
        Family::EpsilonGreedy { n, epsilon } => {
            if n < 2 || !(0.0..=1.0).contains(&epsilon) {
                return Err(Error::InvalidArgument(format!(
                    "epsilon-greedy family needs n >= 2 and epsilon in [0,1], got n={n}, epsilon={epsilon}"
                )));
            }
            Ok(epsilon * epsilon * (n - 1) as f64)
        }
        Family::UniformSupported { k, m } => {
            if m == 0 || m > k {
                return Err(Error::InvalidArgument(format!(
                    "uniform-supported family needs 1 <= m <= k, got m={m}, k={k}"
                )));
            }
            Ok(k as f64 / m as f64 - 1.0)
        }
    }
}

pub fn chi_capacity(theta: &PolicySet, tol: f64, budget: usize) -> CapacityBracket {
    chi_capacity_with(theta, tol, budget, Execution::default())
}

pub fn chi_capacity_with(
    theta: &PolicySet,
    tol: f64,
    budget: usize,
    exec: Execution,
) -> CapacityBracket {
    let n = theta.num_policies();
    let upper = chi_upper_bound(theta);

    if let Some(family) = theta.family() {
        if let Ok(value) = capacity_closed_form(&family) {
            // Uniform τ attains the closed form for both families.
            return CapacityBracket {
                lower: value,
                upper: value,
                argmax_tau: MixtureWeights::uniform(n).expect("n >= 2"),
                certified_exact: true,
            };
        }
    }

    let (lower, tau) = if n == 2 {
        let (value, r) = golden_max(theta.row(0), theta.row(1), GOLDEN_TOL);
        (value, vec![r, 1.0 - r])
    } else {
        let starts = map_indexed(n + 1, exec, |s| ascend(theta, &start_point(n, s), budget));
        // First best wins, so ties resolve to the lowest start index.
        starts
            .into_iter()
            .fold((f64::NEG_INFINITY, Vec::new()), |best, cand| {
                if cand.0 > best.0 {
                    cand
                } else {
                    best
                }
            })
    };

    let lower = lower.min(upper);
    CapacityBracket {
        lower,
        upper,
        argmax_tau: MixtureWeights::from_raw(tau),
        certified_exact: upper - lower <= tol,
    }
}

/// Start 0 is uniform; start `i ≥ 1` is `0.9·e_{i−1} + 0.1·uniform`.
fn start_point(n: usize, s: usize) -> Vec<f64> {
    let base = 1.0 / n as f64;
    if s == 0 {
        return vec![base; n];
    }
    let mut tau = vec![0.1 * base; n];
    tau[s - 1] += 0.9;
    tau
}

/// Entropic (multiplicative-weights) gradient ascent on `Q_τ` with step
/// `0.1/√k`. Returns the best value seen and where it was seen.
fn ascend(theta: &PolicySet, start: &[f64], budget: usize) -> (f64, Vec<f64>) {
    let mut tau = start.to_vec();
    let mut best = (q_tau_raw(&tau, theta), tau.clone());
    for k in 1..=budget {
        let grad = q_tau_gradient(&tau, theta);
        let step = 0.1 / (k as f64).sqrt();
        let top = grad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (t, g) in tau.iter_mut().zip(&grad) {
            *t = (*t * (step * (g - top)).exp()).max(TAU_FLOOR);
        }
        let total: f64 = tau.iter().sum();
        tau.iter_mut().for_each(|t| *t /= total);
        let value = q_tau_raw(&tau, theta);
        if value > best.0 {
            best = (value, tau.clone());
        }
    }
    best
}

/// Golden-section maximum of `r ↦ q_r(p‖q)` on `(0, 1)`. Only interior
/// points are evaluated, `r = 1/2` among them. Returns `(value, r)`.
fn golden_max(p: &[f64], q: &[f64], tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let f = |r: f64| vincze_le_cam_raw(r, p, q);
    let mut best = (f(0.5), 0.5);
    let mut keep = |v: f64, r: f64| {
        if v > best.0 {
            best = (v, r);
        }
    };

    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    keep(fc, c);
    keep(fd, d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
            keep(fc, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
            keep(fd, d);
        }
    }
    let mid = 0.5 * (a + b);
    if mid > 0.0 && mid < 1.0 {
        keep(f(mid), mid);
    }
    best
}

/// `C(θ₁, θ₂) = sup_r q_r(θ₁‖θ₂)` by golden section, `r` resolved to `tol`.
pub fn two_policy_capacity(
    p: &OutcomeDistribution,
    q: &OutcomeDistribution,
    tol: f64,
) -> Result<f64> {
    check_dim(p.len(), q.len())?;
    if tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    Ok(golden_max(p, q, tol).0)
}

/// Outcome of Blahut–Arimoto.
#[derive(Clone, Debug, PartialEq)]
pub struct KlCapacityResult {
    /// KL mutual information at the final prior, in nats.
    pub value: f64,
    /// Output distribution of the final prior; the KL-radius center.
    pub center: OutcomeDistribution,
    /// Final prior over policies; `mixture(prior) == center`.
    pub prior: MixtureWeights,
    pub iterations: usize,
    /// `max_θ KL(θ‖center) − value`.
    pub gap: f64,
}

/// Blahut–Arimoto updates tried before switching to the Newton-assisted polish.
const BA_PHASE: usize = 2_000;

/// KL capacity `max_τ I(τ, Θ) = min_ρ max_θ KL(θ‖ρ)` by Blahut–Arimoto from
/// a uniform prior. Stops once the duality gap is at most `tol` or after
/// `max_iter` updates; the caller checks `gap`.
///
/// Blahut–Arimoto slows to a crawl when some policy's divergence from the
/// center approaches the radius without reaching it (near-duplicate
/// policies, for example). After [`BA_PHASE`] updates the remaining budget
/// goes to a Newton-assisted pairwise Frank–Wolfe solver on the same concave
/// objective, whose gap is the same duality gap.
pub fn kl_capacity(theta: &PolicySet, tol: f64, max_iter: usize) -> KlCapacityResult {
    let n = theta.num_policies();
    let mut tau = vec![1.0 / n as f64; n];
    let mut iterations = 0;
    let mut gap = kl_gap(theta, &tau).1;
    while gap > tol && iterations < max_iter.min(BA_PHASE) {
        let (divs, _) = kl_gap(theta, &tau);
        // τ ← τ·exp(D_θ) normalized; shift by the max for stability.
        let radius = divs.iter().copied().fold(0.0, f64::max);
        for (t, d) in tau.iter_mut().zip(&divs) {
            *t *= (d - radius).exp();
        }
        let total: f64 = tau.iter().sum();
        tau.iter_mut().for_each(|t| *t /= total);
        iterations += 1;
        gap = kl_gap(theta, &tau).1;
    }
    if gap > tol && iterations < max_iter {
        let neg_entropy: Vec<f64> = theta.rows().iter().map(|r| entropy_raw(r)).collect();
        let objective = HullObjective {
            theta,
            b: Some(&neg_entropy),
            a: None,
        };
        let (used, _) = minimize(&objective, &mut tau, tol, max_iter - iterations);
        iterations += used;
        gap = kl_gap(theta, &tau).1;
    }
    let (divs, _) = kl_gap(theta, &tau);
    let value: f64 = tau.iter().zip(&divs).map(|(t, d)| t * d).sum();
    KlCapacityResult {
        value: value.max(0.0),
        center: OutcomeDistribution::from_raw(theta.mixture_raw(&tau)),
        prior: MixtureWeights::from_raw(tau),
        iterations,
        gap,
    }
}

/// Divergences `KL(θ‖mixture(τ))` and the gap `max_θ D_θ − Σ τ D`.
fn kl_gap(theta: &PolicySet, tau: &[f64]) -> (Vec<f64>, f64) {
    let center = theta.mixture_raw(tau);
    let divs: Vec<f64> = theta
        .rows()
        .iter()
        .map(|row| f_divergence_raw(DivergenceKind::Kl, row, &center).to_f64())
        .collect();
    let value: f64 = tau.iter().zip(&divs).map(|(t, d)| t * d).sum();
    let radius = divs.iter().copied().fold(0.0, f64::max);
    (divs, radius - value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::{f_divergence, mutual_f_information};
    use crate::policy::{make_epsilon_greedy, make_uniform_cyclic};
    use crate::testutil::{dist, distribution_pair, policy_set, policy_set_with_prior};
    use proptest::prelude::*;

    fn pair(p: &[f64], q: &[f64]) -> PolicySet {
        PolicySet::new(vec![dist(p), dist(q)]).unwrap()
    }

    #[test]
    fn q_tau_examples() {
        let same = PolicySet::new(vec![dist(&[0.3, 0.7]); 3]).unwrap();
        let tau = MixtureWeights::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(q_tau(&tau, &same).unwrap().abs() < 1e-15);

        for (n, eps) in [(3usize, 0.5), (8, 0.1), (5, 1.0)] {
            let set = make_epsilon_greedy(n, eps).unwrap();
            let q = q_tau(&MixtureWeights::uniform(n).unwrap(), &set).unwrap();
            assert!((q - eps * eps * (n - 1) as f64).abs() < 1e-12);
        }

        let q = q_tau(&MixtureWeights::uniform(2).unwrap(), &pair(&[1.0, 0.0], &[0.0, 1.0])).unwrap();
        assert!((q - 1.0).abs() < 1e-15);
        assert!(q_tau(&MixtureWeights::uniform(3).unwrap(), &pair(&[1.0, 0.0], &[0.0, 1.0])).is_err());
    }

    #[test]
    fn discontinuity_regression() {
        // θ₁ = (½, ½), θ₂ = (1, 0); τ(θ₁) = ε gives g(ε) = (2 − 1.5ε)/(2 − ε) − ½.
        let set = pair(&[0.5, 0.5], &[1.0, 0.0]);
        let g = |e: f64| (2.0 - 1.5 * e) / (2.0 - e) - 0.5;
        for e in [0.5, 0.1, 0.01] {
            let q = q_tau(&MixtureWeights::new(vec![e, 1.0 - e]).unwrap(), &set).unwrap();
            assert!((q - g(e)).abs() < 1e-14);
        }
        assert_eq!(q_tau(&MixtureWeights::new(vec![0.0, 1.0]).unwrap(), &set).unwrap(), 0.0);

        let tol = 1e-6;
        let bracket = chi_capacity(&set, tol, 1000);
        assert!(bracket.lower >= 0.5 - tol);
        assert!(bracket.lower < 0.5);
        assert!(bracket.argmax_tau[0] > 0.0);

        // Same set padded with a third copy of θ₂ goes through the multi-start path.
        let padded = PolicySet::new(vec![dist(&[0.5, 0.5]), dist(&[1.0, 0.0]), dist(&[1.0, 0.0])]).unwrap();
        let bracket = chi_capacity(&padded, 1e-3, 5000);
        assert!(bracket.lower >= 0.5 - 1e-3, "{bracket:?}");
        assert!(bracket.argmax_tau[0] > 0.0);
    }

    #[test]
    fn chi_capacity_examples() {
        let set = make_epsilon_greedy(4, 0.5).unwrap();
        for s in [set.clone(), set.untagged()] {
            let b = chi_capacity(&s, 1e-6, 2000);
            assert!((b.lower - 0.75).abs() < 1e-4, "{b:?}");
        }

        let set = make_uniform_cyclic(6, 2).unwrap();
        for s in [set.clone(), set.untagged()] {
            let b = chi_capacity(&s, 1e-6, 2000);
            assert!((b.lower - 2.0).abs() < 1e-9);
            assert!((b.upper - 2.0).abs() < 1e-12);
            assert!(b.certified_exact);
        }

        let same = PolicySet::new(vec![dist(&[0.3, 0.7]); 4]).unwrap();
        let b = chi_capacity(&same, 1e-9, 100);
        assert_eq!((b.lower, b.upper), (0.0, 0.0));
        assert!(b.certified_exact);
    }

    #[test]
    fn closed_forms() {
        let eg = |n, epsilon| Family::EpsilonGreedy { n, epsilon };
        assert!((capacity_closed_form(&eg(8, 0.25)).unwrap() - 0.4375).abs() < 1e-15);
        assert_eq!(capacity_closed_form(&eg(5, 1.0)).unwrap(), 4.0);
        let us = Family::UniformSupported { k: 6, m: 3 };
        assert_eq!(capacity_closed_form(&us).unwrap(), 1.0);
        assert!(capacity_closed_form(&eg(1, 0.5)).is_err());
        assert!(capacity_closed_form(&Family::UniformSupported { k: 3, m: 4 }).is_err());
    }

    #[test]
    fn two_policy_examples() {
        let c = two_policy_capacity(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0]), 1e-9).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
        let p = dist(&[0.3, 0.3, 0.4]);
        assert_eq!(two_policy_capacity(&p, &p, 1e-9).unwrap(), 0.0);

        // Independent oracle: dense grid over r.
        let (p, q) = (dist(&[0.75, 0.25]), dist(&[0.25, 0.75]));
        let grid = (1..1_000_000)
            .map(|i| vincze_le_cam_raw(i as f64 * 1e-6, &p, &q))
            .fold(0.0, f64::max);
        let c = two_policy_capacity(&p, &q, 1e-10).unwrap();
        assert!((c - grid).abs() < 1e-9);
        // Frozen: the pair is symmetric under r ↔ 1 − r, so the peak is q_{1/2} = 1/4.
        assert!((c - 0.25).abs() < 1e-12);
        assert!(two_policy_capacity(&p, &q, 0.0).is_err());
    }

    #[test]
    fn kl_capacity_examples() {
        let set = pair(&[1.0, 0.0], &[0.0, 1.0]);
        let r = kl_capacity(&set, 1e-12, 1000);
        assert!((r.value - 2f64.ln()).abs() < 1e-12);
        assert!((r.center[0] - 0.5).abs() < 1e-12);

        let same = PolicySet::new(vec![dist(&[0.2, 0.8]); 3]).unwrap();
        let r = kl_capacity(&same, 1e-12, 1000);
        assert_eq!(r.value, 0.0);
        assert_eq!(r.center.to_vec(), vec![0.2, 0.8]);
        assert_eq!(r.iterations, 0);

        // Z-channel. Oracle: 1e-6 grid over binary priors.
        let z = pair(&[1.0, 0.0], &[0.5, 0.5]);
        let oracle = (0..=1_000_000)
            .map(|i| {
                let t = i as f64 * 1e-6;
                let tau = MixtureWeights::new(vec![t, 1.0 - t]).unwrap();
                mutual_f_information(DivergenceKind::Kl, &tau, z.rows()).unwrap().to_f64()
            })
            .fold(0.0, f64::max);
        let r = kl_capacity(&z, 1e-12, 100_000);
        assert!((r.value - oracle).abs() < 1e-9, "{} vs {}", r.value, oracle);
        // Frozen: ln(5/4).
        assert!((r.value - 1.25f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn kl_capacity_reports_unconverged_gap() {
        let z = pair(&[1.0, 0.0], &[0.5, 0.5]);
        let r = kl_capacity(&z, 1e-15, 2);
        assert_eq!(r.iterations, 2);
        assert!(r.gap > 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn q_tau_matches_mutual_information((tau, set) in policy_set_with_prior(6, 6)) {
            let q = q_tau(&tau, &set).unwrap();
            let mi = mutual_f_information(DivergenceKind::ChiSq, &tau, set.rows()).unwrap();
            prop_assert!((q - mi.to_f64()).abs() < 1e-10);
        }

        #[test]
        fn gradient_matches_finite_differences((tau, set) in policy_set_with_prior(6, 6)) {
            // Keep τ interior so the central difference stays on the domain.
            let tau: Vec<f64> = tau.iter().map(|t| 0.5 * t + 0.5 / tau.len() as f64).collect();
            let grad = q_tau_gradient(&tau, &set);
            let h = 1e-6;
            for i in 0..tau.len() {
                let mut up = tau.clone();
                let mut down = tau.clone();
                up[i] += h;
                down[i] -= h;
                // Unclamped extension Σ A/ψ − 1.
                let f = |t: &[f64]| {
                    let (a, p) = moments(t, &set);
                    a.iter().zip(&p).filter(|(_, &p)| p > 0.0).map(|(a, p)| a / p).sum::<f64>() - 1.0
                };
                let fd = (f(&up) - f(&down)) / (2.0 * h);
                prop_assert!((fd - grad[i]).abs() <= 1e-5 * grad[i].abs().max(1.0), "{} vs {}", fd, grad[i]);
            }
        }

        #[test]
        fn bracket_is_consistent(set in policy_set(6, 6)) {
            let b = chi_capacity(&set, 1e-6, 300);
            let (_, v) = set.s_and_v();
            prop_assert!(b.lower >= 0.0);
            prop_assert!(b.lower <= b.upper + 1e-12);
            prop_assert!(b.lower <= v.min(set.chi_diameter().to_f64()) + 1e-9);
            prop_assert!(b.upper <= (set.num_policies().min(set.num_outcomes()) - 1) as f64 + 1e-12);
            let q = q_tau(&b.argmax_tau, &set).unwrap();
            prop_assert!((q - b.lower).abs() < 1e-9);
        }

        #[test]
        fn two_policy_chain((p, q) in distribution_pair(8, true)) {
            let c = two_policy_capacity(&p, &q, 1e-10).unwrap();
            let tv = f_divergence(DivergenceKind::TotalVariation, &p, &q).unwrap().to_f64();
            let h2 = f_divergence(DivergenceKind::HellingerSq, &p, &q).unwrap().to_f64();
            let tri = f_divergence(DivergenceKind::Triangular, &p, &q).unwrap().to_f64();
            let s = 1e-9;
            prop_assert!(tv * tv <= tri / 2.0 + s);
            prop_assert!(tri / 2.0 <= c + s);
            prop_assert!(c <= 2.0 * h2 + s);
            prop_assert!(2.0 * h2 <= tri + s);
            prop_assert!(tri <= 2.0 * tv + s);
        }

        #[test]
        fn kl_capacity_bounds_and_duality(set in policy_set(5, 5)) {
            let r = kl_capacity(&set, 1e-9, 100_000);
            let n = set.num_policies();
            let k = set.num_outcomes();
            prop_assert!(r.value <= (n.min(k) as f64).ln() + 1e-9);
            let radius = set
                .rows()
                .iter()
                .map(|row| f_divergence(DivergenceKind::Kl, row, &r.center).unwrap().to_f64())
                .fold(0.0, f64::max);
            prop_assert!(r.gap <= 1e-9, "gap {} after {} iterations", r.gap, r.iterations);
            prop_assert!(radius >= r.value - 1e-9);
            prop_assert!(radius - r.value <= r.gap + 1e-12);
        }
    }
}
