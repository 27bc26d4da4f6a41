//! Minimization over the convex hull of a policy set.
//!
//! Solves `min_q F(q)` over the simplex, where
//! `F(q) = ⟨b, q⟩ + Σ_x u(x)(ln u(x) − a(x))` and `u = Σ_i q_i θ_i`. Both the
//! OMD projection (`b = 0`, `a = ln w`) and the KL capacity (`b_i = H(θ_i)`,
//! `a = 0`, so `F = −I(q)`) take this form. The Hessian is
//! `Θ diag(1/u) Θᵀ`.
//!
//! Each iteration takes a Newton step restricted to the current support,
//! then a pairwise Frank–Wolfe step (mass from the worst supported policy to
//! the best policy) with exact line search. The Frank–Wolfe steps change the
//! support; the Newton steps give fast local convergence even when
//! near-duplicate policies make first-order methods crawl.

use nalgebra::{DMatrix, DVector};

use crate::policy::PolicySet;

/// Supports larger than this skip the Newton step.
const NEWTON_MAX_SUPPORT: usize = 256;

pub(crate) struct HullObjective<'a> {
    pub theta: &'a PolicySet,
    /// Linear term per policy; zero when `None`.
    pub b: Option<&'a [f64]>,
    /// Per-outcome reference; `−∞` marks outcomes `u` must not charge.
    pub a: Option<&'a [f64]>,
}

impl HullObjective<'_> {
    fn a(&self, x: usize) -> f64 {
        self.a.map_or(0.0, |a| a[x])
    }

    fn b(&self, i: usize) -> f64 {
        self.b.map_or(0.0, |b| b[i])
    }

    fn value(&self, q: &[f64], u: &[f64]) -> f64 {
        let lin: f64 = q.iter().enumerate().map(|(i, &qi)| if qi > 0.0 { qi * self.b(i) } else { 0.0 }).sum();
        let mut ent = 0.0;
        for (x, &ux) in u.iter().enumerate() {
            if ux > 0.0 {
                ent += ux * (ux.ln() - self.a(x));
            }
        }
        lin + ent
    }

    /// `g_i = b_i + Σ_x θ_i(x)(ln u(x) − a(x))`, dropping the constant `+1`.
    /// Policies charging a forbidden outcome get `+∞`; policies charging an
    /// allowed outcome with `u(x) = 0` get `−∞`.
    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let diff: Vec<f64> = u
            .iter()
            .enumerate()
            .map(|(x, &ux)| {
                let a = self.a(x);
                if a == f64::NEG_INFINITY {
                    f64::INFINITY
                } else if ux > 0.0 {
                    ux.ln() - a
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        self.theta
            .rows()
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut s = self.b(i);
                for (&r, &dx) in row.iter().zip(&diff) {
                    if r > 0.0 {
                        if dx == f64::INFINITY {
                            return f64::INFINITY;
                        }
                        s += r * dx;
                    }
                }
                s
            })
            .collect()
    }
}

/// Runs at most `max_iter` iterations from `q` (modified in place) and
/// returns `(iterations, gap)` with `gap = Σ q_i g_i − min_i g_i ≥ F(q) − F*`.
pub(crate) fn minimize(obj: &HullObjective<'_>, q: &mut [f64], tol: f64, max_iter: usize) -> (usize, f64) {
    let theta = obj.theta;
    let mut u = theta.mixture_raw(q);
    let mut gap = f64::INFINITY;
    for it in 0..max_iter {
        let g = obj.gradient(&u);
        gap = fw_gap(q, &g);
        if gap <= tol {
            return (it, gap.max(0.0));
        }

        if newton_step(obj, q, &u, &g) {
            u = theta.mixture_raw(q);
            let g = obj.gradient(&u);
            gap = fw_gap(q, &g);
            if gap <= tol {
                return (it + 1, gap.max(0.0));
            }
            pairwise_step(obj, q, &u, &g);
        } else {
            pairwise_step(obj, q, &u, &g);
        }
        u = theta.mixture_raw(q);
    }
    (max_iter, gap)
}

fn fw_gap(q: &[f64], g: &[f64]) -> f64 {
    let g_min = g.iter().copied().fold(f64::INFINITY, f64::min);
    let dot: f64 = q.iter().zip(g).filter(|(&qi, _)| qi > 0.0).map(|(a, b)| a * b).sum();
    dot - g_min
}

fn argmin(values: impl Iterator<Item = f64>) -> Option<usize> {
    values
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
            Some((_, b)) if v >= b => best,
            _ if v.is_nan() => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
}

fn pairwise_step(obj: &HullObjective<'_>, q: &mut [f64], u: &[f64], g: &[f64]) {
    let Some(fw) = argmin(g.iter().copied()) else { return };
    let Some(away) = argmin(
        g.iter()
            .zip(q.iter())
            .map(|(&gi, &qi)| if qi > 0.0 { -gi } else { f64::INFINITY }),
    ) else {
        return;
    };
    if away == fw || q[away] <= 0.0 {
        return;
    }
    let d: Vec<f64> = obj
        .theta
        .row(fw)
        .iter()
        .zip(obj.theta.row(away).iter())
        .map(|(a, b)| a - b)
        .collect();
    let db = obj.b(fw) - obj.b(away);
    let gamma = line_search(obj, u, &d, db, q[away]);
    q[fw] += gamma;
    q[away] = if gamma >= q[away] { 0.0 } else { q[away] - gamma };
}

/// Minimizer over `γ ∈ [0, γ_max]` of `F` along `u + γd`; the derivative
/// `db + Σ_x d(x)(ln(u(x) + γd(x)) − a(x))` is increasing in `γ`.
fn line_search(obj: &HullObjective<'_>, u: &[f64], d: &[f64], db: f64, gamma_max: f64) -> f64 {
    let slope = |gamma: f64| -> f64 {
        let mut s = db;
        for (x, (&ux, &dx)) in u.iter().zip(d).enumerate() {
            if dx == 0.0 {
                continue;
            }
            let v = ux + gamma * dx;
            if v <= 0.0 {
                return if dx < 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
            }
            s += dx * (v.ln() - obj.a(x));
        }
        s
    };
    if slope(gamma_max) <= 0.0 {
        return gamma_max;
    }
    let (mut lo, mut hi) = (0.0f64, gamma_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Newton step on the support of `q` with the simplex constraint, followed
/// by a backtracking search kept inside `q ≥ 0`. Returns whether `q` moved.
fn newton_step(obj: &HullObjective<'_>, q: &mut [f64], u: &[f64], g: &[f64]) -> bool {
    let support: Vec<usize> = (0..q.len()).filter(|&i| q[i] > 0.0).collect();
    let m = support.len();
    if !(2..=NEWTON_MAX_SUPPORT).contains(&m) || support.iter().any(|&i| !g[i].is_finite()) {
        return false;
    }
    let rows = obj.theta.rows();
    let k = u.len();
    let mut h = DMatrix::<f64>::zeros(m + 1, m + 1);
    let mut diag_max: f64 = 0.0;
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate().skip(a) {
            let mut s = 0.0;
            for x in 0..k {
                if u[x] > 0.0 {
                    s += rows[i][x] * rows[j][x] / u[x];
                }
            }
            h[(a, b)] = s;
            h[(b, a)] = s;
        }
        diag_max = diag_max.max(h[(a, a)]);
    }
    // Duplicate and near-duplicate policies make the reduced Hessian singular.
    let reg = 1e-12 * diag_max.max(1.0);
    for a in 0..m {
        h[(a, a)] += reg;
        h[(a, m)] = 1.0;
        h[(m, a)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(m + 1);
    for (a, &i) in support.iter().enumerate() {
        rhs[a] = -g[i];
    }
    let Some(sol) = h.lu().solve(&rhs) else { return false };
    let d: Vec<f64> = (0..m).map(|a| sol[a]).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let slope: f64 = support.iter().zip(&d).map(|(&i, di)| g[i] * di).sum();
    if slope >= 0.0 {
        return false;
    }
    let mut alpha_max = 1.0f64;
    let mut blocking = None;
    for (&i, &di) in support.iter().zip(&d) {
        if di < 0.0 && q[i] / -di < alpha_max {
            alpha_max = q[i] / -di;
            blocking = Some(i);
        }
    }
    let f0 = obj.value(q, u);
    let mut alpha = alpha_max;
    for _ in 0..40 {
        let mut trial = q.to_vec();
        for (&i, &di) in support.iter().zip(&d) {
            trial[i] = (q[i] + alpha * di).max(0.0);
        }
        if alpha == alpha_max {
            if let Some(b) = blocking {
                trial[b] = 0.0;
            }
        }
        let total: f64 = trial.iter().sum();
        trial.iter_mut().for_each(|t| *t /= total);
        let ut = obj.theta.mixture_raw(&trial);
        let ft = obj.value(&trial, &ut);
        if ft.is_finite() && ft <= f0 + 1e-4 * alpha * slope {
            q.copy_from_slice(&trial);
            return true;
        }
        alpha *= 0.5;
    }
    false
}
