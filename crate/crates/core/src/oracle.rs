//! Exact linear-algebra ground truth for the learners.
//!
//! Everything here is a pure function of its inputs and works with dense
//! solves; state spaces are assumed small enough (a few thousand states at
//! most) that exactness is affordable.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::env::{check_distribution, induced_mrp, FeatureMap, MarkovDecisionProcess};
use crate::error::{invalid, Error, Result};
use crate::matrix::{dot, l1_distance, Matrix};

/// Largest state space solved directly for the stationary distribution;
/// bigger chains fall back to power iteration.
pub const DIRECT_SOLVE_LIMIT: usize = 512;
const POWER_TOL: f64 = 1e-13;
const POWER_MAX_ITERS: usize = 1_000_000;
const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub mu: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueFunction {
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramSpectrum {
    pub lambda: Matrix,
    pub lambda_min: f64,
}

/// `‖μP − μ‖₁`.
pub fn stationary_residual(p: &Matrix, mu: &[f64]) -> f64 {
    l1_distance(&p.left_mul_vec(mu), mu)
}

/// Stationary distribution of an irreducible aperiodic chain.
pub fn stationary_distribution(p: &Matrix) -> Result<StationaryDistribution> {
    crate::env::check_stochastic(p)?;
    let n = p.rows();
    let mut mu = if n <= DIRECT_SOLVE_LIMIT {
        stationary_direct(p)?
    } else {
        stationary_power(p)?
    };
    // Polish: a few power steps clean up solver round-off without moving the fixed point.
    for _ in 0..3 {
        mu = p.left_mul_vec(&mu);
        normalize(&mut mu);
    }
    let res = stationary_residual(p, &mu);
    if !(res <= STATIONARY_RESIDUAL_TOL) {
        return Err(Error::NotErgodic(format!(
            "stationary residual {res:e} exceeds {STATIONARY_RESIDUAL_TOL:e}"
        )));
    }
    Ok(StationaryDistribution { mu })
}

fn normalize(mu: &mut [f64]) {
    mu.iter_mut().for_each(|v| *v = v.max(0.0));
    let s: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|v| *v /= s);
}

/// Solve `(Pᵀ − I)μ = 0` with the last equation replaced by `Σμ = 1`.
fn stationary_direct(p: &Matrix) -> Result<Vec<f64>> {
    let n = p.rows();
    let mut a = p.transpose().to_nalgebra();
    for i in 0..n {
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::NotErgodic("balance equations are singular".into()))?;
    let mut mu: Vec<f64> = x.iter().copied().collect();
    if mu.iter().any(|v| !v.is_finite() || *v < -1e-9) {
        return Err(Error::NotErgodic("balance equations have no probability solution".into()));
    }
    normalize(&mut mu);
    Ok(mu)
}

fn stationary_power(p: &Matrix) -> Result<Vec<f64>> {
    let n = p.rows();
    let mut mu = vec![1.0 / n as f64; n];
    let mut change = f64::INFINITY;
    for _ in 0..POWER_MAX_ITERS {
        let mut next = p.left_mul_vec(&mu);
        normalize(&mut next);
        change = l1_distance(&next, &mu);
        mu = next;
        if change <= POWER_TOL {
            return Ok(mu);
        }
    }
    Err(Error::NoConvergence {
        iterations: POWER_MAX_ITERS,
        residual: change,
    })
}

fn lu_solve(a: DMatrix<f64>, b: &[f64], what: &str) -> Result<Vec<f64>> {
    let x = a
        .lu()
        .solve(&DVector::from_column_slice(b))
        .ok_or_else(|| Error::Singular(what.to_string()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(format!("{what}: non-finite solution")));
    }
    Ok(x.iter().copied().collect())
}

fn check_square_vec(p: &Matrix, v: &[f64], name: &'static str) -> Result<()> {
    if !p.is_square() || v.len() != p.rows() {
        return Err(Error::ShapeMismatch {
            expected: format!("{name} of length {} for a square matrix", p.rows()),
            found: format!("{} with a {}x{} matrix", v.len(), p.rows(), p.cols()),
        });
    }
    Ok(())
}

/// Solve `(I − γP)V = r`.
pub fn exact_value(p: &Matrix, r: &[f64], gamma: f64) -> Result<ValueFunction> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(invalid("gamma", format!("must lie in [0, 1), got {gamma}")));
    }
    check_square_vec(p, r, "reward")?;
    let n = p.rows();
    let mut a = p.to_nalgebra() * (-gamma);
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    Ok(ValueFunction {
        v: lu_solve(a, r, "I - γP")?,
    })
}

/// Bellman operator `r + γPv`.
pub fn bellman_apply(p: &Matrix, r: &[f64], gamma: f64, v: &[f64]) -> Result<Vec<f64>> {
    check_square_vec(p, r, "reward")?;
    check_square_vec(p, v, "value")?;
    Ok(p.mul_vec(v)
        .into_iter()
        .zip(r)
        .map(|(pv, ri)| ri + gamma * pv)
        .collect())
}

/// `‖w‖_μ = sqrt(Σ μ(x) w(x)²)`.
pub fn mu_norm(w: &[f64], mu: &[f64]) -> f64 {
    w.iter().zip(mu).map(|(x, m)| m * x * x).sum::<f64>().sqrt()
}

/// `Λ = Σ_x μ(x) Φ(x)Φ(x)ᵀ` and its smallest eigenvalue.
pub fn feature_gram(mu: &[f64], features: &FeatureMap) -> Result<GramSpectrum> {
    check_distribution(mu, features.n_states())?;
    let d = features.dim();
    let mut lambda = Matrix::zeros(d, d);
    for (x, &m) in mu.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let phi = features.features(x);
        for i in 0..d {
            let a = m * phi[i];
            for j in i..d {
                lambda[(i, j)] += a * phi[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            lambda[(i, j)] = lambda[(j, i)];
        }
    }
    let eig = nalgebra::SymmetricEigen::new(lambda.to_nalgebra());
    let lambda_min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
    Ok(GramSpectrum { lambda, lambda_min })
}

/// `Σ_x μ(x) (⟨Θ, Φ(x)⟩ − V(x))²`.
pub fn mu_mse(theta: &[f64], features: &FeatureMap, v: &[f64], mu: &[f64]) -> f64 {
    mu.iter()
        .zip(v)
        .enumerate()
        .map(|(x, (m, vx))| {
            let e = features.predict(theta, x) - vx;
            m * e * e
        })
        .sum()
}

/// `max_x |⟨Θ, Φ(x)⟩ − V(x)|²`.
pub fn sup_sq_error(theta: &[f64], features: &FeatureMap, v: &[f64]) -> f64 {
    v.iter()
        .enumerate()
        .map(|(x, vx)| {
            let e = features.predict(theta, x) - vx;
            e * e
        })
        .fold(0.0, f64::max)
}

/// Normalized discounted occupancy `(1−γ) λ₀ᵀ (I − γP)⁻¹`.
pub fn discounted_visitation(p: &Matrix, lambda0: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(invalid("gamma", format!("must lie in [0, 1), got {gamma}")));
    }
    check_square_vec(p, lambda0, "initial distribution")?;
    check_distribution(lambda0, p.rows())?;
    let n = p.rows();
    let mut a = p.transpose().to_nalgebra() * (-gamma);
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    let rhs: Vec<f64> = lambda0.iter().map(|l| (1.0 - gamma) * l).collect();
    let mut d = lu_solve(a, &rhs, "I - γPᵀ")?;
    d.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok(d)
}

/// `max_i numerator(i) / denominator(i)`; `+∞` when some positive numerator
/// meets a zero denominator.
pub fn concentrability(numerator: &[f64], denominator: &[f64]) -> f64 {
    numerator
        .iter()
        .zip(denominator)
        .filter(|(n, _)| **n > 0.0)
        .map(|(n, d)| if *d > 0.0 { n / d } else { f64::INFINITY })
        .fold(0.0, f64::max)
}

/// Smallest `t >= 0` with `m ζ^t <= threshold`.
pub fn mixing_time_for_threshold(m: f64, zeta: f64, threshold: f64) -> Result<usize> {
    if !(m > 0.0) {
        return Err(invalid("m", "must be positive"));
    }
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(invalid("zeta", "must lie in (0, 1)"));
    }
    if !(threshold > 0.0) {
        return Err(invalid("threshold", "must be positive"));
    }
    if m <= threshold {
        return Ok(0);
    }
    let mut t = ((threshold / m).ln() / zeta.ln()).ceil().max(0.0) as usize;
    // The closed form can be off by one in floating point; settle on the exact minimum.
    while t > 0 && m * zeta.powi(t as i32 - 1) <= threshold {
        t -= 1;
    }
    while m * zeta.powi(t as i32) > threshold {
        t += 1;
    }
    Ok(t)
}

/// Mixing time `τ = min{t : mζ^t <= √2 ρ (uT)^(−1/(1+p))}` used by the
/// Markovian-sampling bound.
pub fn mixing_time(m: f64, zeta: f64, rho: f64, u: f64, horizon: f64, p: f64) -> Result<usize> {
    if !(rho > 0.0 && u > 0.0 && horizon > 0.0) {
        return Err(invalid("rho/u/T", "must all be positive"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid("p", "must lie in (0, 1]"));
    }
    let threshold = 2f64.sqrt() * rho * (u * horizon).powf(-1.0 / (1.0 + p));
    mixing_time_for_threshold(m, zeta, threshold)
}

/// `max_x ‖P^t(x, ·) − μ‖_TV`.
pub fn max_tv_distance(p: &Matrix, mu: &[f64], t: usize) -> f64 {
    let n = p.rows();
    let mut pt = Matrix::identity(n);
    for _ in 0..t {
        pt = pt.matmul(p);
    }
    pt.iter_rows()
        .map(|row| 0.5 * l1_distance(row, mu))
        .fold(0.0, f64::max)
}

/// Exact Q and V of a stationary policy (an `n_states × n_actions` table).
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyValues {
    /// Indexed by `s * n_actions + a`.
    pub q: Vec<f64>,
    pub v: Vec<f64>,
}

impl PolicyValues {
    pub fn value_at(&self, lambda0: &[f64]) -> f64 {
        dot(&self.v, lambda0)
    }
}

/// `Q^π` as the value function of the chain induced on state-action pairs.
pub fn exact_q(mdp: &MarkovDecisionProcess, policy: &Matrix) -> Result<PolicyValues> {
    let induced = induced_mrp(mdp, policy)?;
    let q = exact_value(&induced.transition, &induced.mean_reward, mdp.discount)?.v;
    let v = (0..mdp.n_states)
        .map(|s| {
            (0..mdp.n_actions)
                .map(|a| policy[(s, a)] * q[mdp.index(s, a)])
                .sum()
        })
        .collect();
    Ok(PolicyValues { q, v })
}
