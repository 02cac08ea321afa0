//! Exact values for the named special cases, and brute-force oracles for the
//! two-plus-one dependent-components constant.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::datum::check_row_orthonormal;
use crate::error::{Error, Result};

/// `M` for Lieb's EPI datum: zero in every dimension.
pub fn epi_mg(lambda: f64, dim: usize) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("lambda = {lambda} must lie in (0, 1)")));
    }
    if dim == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    Ok(0.0)
}

/// Column norms `α_j² = Σ_i a_ij²` of a row-orthonormal `A`.
pub fn zf_coefficients(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_row_orthonormal(a, 1e-9)?;
    Ok(a.column_iter().map(|c| c.norm_squared()).collect())
}

fn check_lambda(a: &DMatrix<f64>, lambda: &[f64]) -> Result<()> {
    if lambda.len() != a.ncols() {
        return Err(Error::DimensionMismatch {
            what: "Lambda diagonal",
            expected: a.ncols(),
            found: lambda.len(),
        });
    }
    if lambda.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::Domain("Lambda must have positive finite entries".into()));
    }
    Ok(())
}

fn log_det_a_lambda(a: &DMatrix<f64>, lambda: &[f64]) -> Result<(f64, DMatrix<f64>)> {
    let scaled = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * lambda[j]);
    let m = scaled * a.transpose();
    let chol = nalgebra::Cholesky::new(m).ok_or_else(|| Error::NotSpd {
        what: "A Λ Aᵀ".into(),
    })?;
    let log_det = 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
    Ok((log_det, chol.inverse()))
}

/// `∂ log|AΛAᵀ| / ∂ log λ_j = λ_j a_jᵀ (AΛAᵀ)⁻¹ a_j`. At `Λ = I` this is `α_j²`.
pub fn zf_log_det_gradient(a: &DMatrix<f64>, lambda: &[f64]) -> Result<Vec<f64>> {
    check_lambda(a, lambda)?;
    let (_, inv) = log_det_a_lambda(a, lambda)?;
    Ok((0..a.ncols())
        .map(|j| {
            let col = a.column(j);
            lambda[j] * (col.transpose() * &inv * col)[(0, 0)]
        })
        .collect())
}

/// `F(Λ) = log|AΛAᵀ| − Σ α_j² log λ_j`, nonnegative for row-orthonormal `A`.
pub fn zf_f(a: &DMatrix<f64>, lambda: &[f64]) -> Result<f64> {
    let alpha2 = zf_coefficients(a)?;
    check_lambda(a, lambda)?;
    let (log_det, _) = log_det_a_lambda(a, lambda)?;
    Ok(log_det - alpha2.iter().zip(lambda).map(|(w, l)| w * l.ln()).sum::<f64>())
}

/// `(det BBᵀ, Σ_S det(B_S)²)` over all `k`-subsets `S` of the columns.
pub fn cauchy_binet_check(b: &DMatrix<f64>) -> Result<(f64, f64)> {
    let (k, n) = b.shape();
    if k > n {
        return Err(Error::DimensionMismatch {
            what: "Cauchy-Binet needs rows <= columns",
            expected: n,
            found: k,
        });
    }
    let lhs = (b * b.transpose()).determinant();
    let mut rhs = 0.0;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let minor = b.select_columns(idx.iter()).determinant();
        rhs += minor * minor;
        // next combination in lexicographic order
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return Ok((lhs, rhs));
        };
        idx[i] += 1;
        for t in i + 1..k {
            idx[t] = idx[t - 1] + 1;
        }
    }
}

// ---------------------------------------------------------------------------
// dependent components: h(X_1+Y, X_2+Y) against (X_1, X_2) and Y

/// `(α, β, δ_1, δ_2)` of the dependent-components example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section6Params {
    pub alpha: f64,
    pub beta: f64,
    pub delta1: f64,
    pub delta2: f64,
}

impl Section6Params {
    pub fn new(alpha: f64, beta: f64, delta1: f64, delta2: f64) -> Self {
        Self {
            alpha,
            beta,
            delta1,
            delta2,
        }
    }

    pub fn symmetric(alpha: f64, beta: f64, delta: f64) -> Self {
        Self::new(alpha, beta, delta, delta)
    }
}

/// The four finiteness conditions on `(α, β, δ_1, δ_2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Section6Condition {
    /// `2α + β = 2 + δ_1 + δ_2`
    Scaling,
    /// `β ≤ 1`
    BetaAtMostOne,
    /// `α ≤ 1 + δ_1` and `α ≤ 1 + δ_2`
    AlphaAtMostOnePlusDelta,
    /// `α ≥ 1`, equivalently `α + β ≤ 1 + δ_1 + δ_2` under the scaling condition
    AlphaAtLeastOne,
}

impl Section6Condition {
    pub const ALL: [Self; 4] = [
        Self::Scaling,
        Self::BetaAtMostOne,
        Self::AlphaAtMostOnePlusDelta,
        Self::AlphaAtLeastOne,
    ];

    /// 1-based position in the usual listing.
    pub fn number(self) -> usize {
        match self {
            Self::Scaling => 1,
            Self::BetaAtMostOne => 2,
            Self::AlphaAtMostOnePlusDelta => 3,
            Self::AlphaAtLeastOne => 4,
        }
    }
}

impl fmt::Display for Section6Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Scaling => "(1) 2a + b = 2 + d1 + d2",
            Self::BetaAtMostOne => "(2) b <= 1",
            Self::AlphaAtMostOnePlusDelta => "(3) a <= 1 + d1, a <= 1 + d2",
            Self::AlphaAtLeastOne => "(4) a >= 1",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section6Feasibility {
    /// `(condition, holds)` in listing order.
    pub conditions: [(Section6Condition, bool); 4],
}

impl Section6Feasibility {
    pub fn feasible(&self) -> bool {
        self.conditions.iter().all(|&(_, ok)| ok)
    }

    pub fn failed(&self) -> Vec<Section6Condition> {
        self.conditions.iter().filter(|(_, ok)| !ok).map(|&(c, _)| c).collect()
    }
}

const S6_EQ_TOL: f64 = 1e-9;
const S6_INEQ_TOL: f64 = 1e-12;

pub fn section6_feasible(p: &Section6Params) -> Section6Feasibility {
    let Section6Params {
        alpha,
        beta,
        delta1,
        delta2,
    } = *p;
    let scaling = (2.0 * alpha + beta - 2.0 - delta1 - delta2).abs() <= S6_EQ_TOL;
    let beta_ok = beta <= 1.0 + S6_INEQ_TOL;
    let upper = alpha <= 1.0 + delta1 + S6_INEQ_TOL && alpha <= 1.0 + delta2 + S6_INEQ_TOL;
    let lower = alpha >= 1.0 - S6_INEQ_TOL;
    Section6Feasibility {
        conditions: [
            (Section6Condition::Scaling, scaling),
            (Section6Condition::BetaAtMostOne, beta_ok),
            (Section6Condition::AlphaAtMostOnePlusDelta, upper),
            (Section6Condition::AlphaAtLeastOne, lower),
        ],
    }
}

/// `x ln y` with `0 ln 0 = 0`.
fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// `½ log( β^β (1−β)^{1−β} / 2^β · (1+ρ)^{α+β−1} (1−ρ)^{α−1} )` with
/// `ρ = β/(2δ)`, evaluated wherever the expression is defined, feasible or not.
pub fn section6_formula(alpha: f64, beta: f64, delta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("beta = {beta} must lie in (0, 1)")));
    }
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta = {delta} must be positive")));
    }
    let rho = beta / (2.0 * delta);
    if rho > 1.0 {
        return Err(Error::Domain(format!("beta/(2 delta) = {rho} exceeds 1")));
    }
    if rho == 1.0 && alpha < 1.0 {
        return Err(Error::Domain("(1 - beta/(2 delta))^(alpha-1) diverges".into()));
    }
    let log_e2c = xlny(beta, beta) + xlny(1.0 - beta, 1.0 - beta) - beta * 2f64.ln()
        + xlny(alpha + beta - 1.0, 1.0 + rho)
        + xlny(alpha - 1.0, 1.0 - rho);
    Ok(0.5 * log_e2c)
}

/// `(C, D)` for feasible parameters with `δ_1 = δ_2 = δ`; `D = C`.
pub fn section6_constant(alpha: f64, beta: f64, delta: f64) -> Result<(f64, f64)> {
    let feas = section6_feasible(&Section6Params::symmetric(alpha, beta, delta));
    if !feas.feasible() {
        return Err(Error::Section6Infeasible(feas.failed()));
    }
    let c = section6_formula(alpha, beta, delta)?;
    Ok((c, c))
}

/// Log of the four-variable ratio whose supremum is `e^{2C}`.
pub fn section6_log_ratio(p: &Section6Params, k1: f64, k2: f64, k3: f64, rho: f64) -> f64 {
    let one_m = 1.0 - rho * rho;
    let cross = (k1 * k2).sqrt();
    let denom = k1 * k2 * one_m + k3 * (k1 + k2 - 2.0 * rho * cross);
    (p.alpha - p.delta1) * k1.ln() + (p.alpha - p.delta2) * k2.ln() + p.alpha * one_m.ln()
        + p.beta * k3.ln()
        - denom.ln()
}

/// Log of the reduced ratio after `K_1 = K_2 = K`, `x = K_3 / K`.
pub fn section6_reduced_log_ratio(alpha: f64, beta: f64, x: f64, rho: f64) -> f64 {
    beta * x.ln() + xlny(alpha - 1.0, 1.0 - rho) + alpha * (1.0 + rho).ln() - (1.0 + rho + 2.0 * x).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section6Bruteforce {
    /// `C` from the four-variable search.
    pub c_four: f64,
    /// `C` from the reduced two-variable search.
    pub c_two: f64,
    /// `K_1 / K_2` at the four-variable optimum.
    pub k_ratio: f64,
    /// `ρ` at the four-variable optimum.
    pub rho: f64,
}

const RHO_EDGE: f64 = 1e-9;

fn rho_of(t: f64) -> f64 {
    t.tanh().clamp(-1.0 + RHO_EDGE, 1.0 - RHO_EDGE)
}

/// Numerical `C` from the four-variable ratio and, separately, the reduced
/// two-variable ratio. Both are grid searches refined by Nelder-Mead in log
/// coordinates with `ρ = tanh t` kept inside `(−1+1e-9, 1−1e-9)`.
pub fn section6_bruteforce(alpha: f64, beta: f64, delta: f64) -> Result<Section6Bruteforce> {
    let p = Section6Params::symmetric(alpha, beta, delta);
    let feas = section6_feasible(&p);
    if !feas.feasible() {
        return Err(Error::Section6Infeasible(feas.failed()));
    }

    // variables (s, a, u3, t): ln K1 = s + a, ln K2 = s − a, ln K3 = u3
    let four = |v: &[f64]| -> f64 {
        let (k1, k2) = ((v[0] + v[1]).exp(), (v[0] - v[1]).exp());
        let r = section6_log_ratio(&p, k1, k2, v[2].exp(), rho_of(v[3]));
        if r.is_nan() {
            f64::NEG_INFINITY
        } else {
            r
        }
    };
    let two = |v: &[f64]| -> f64 {
        let r = section6_reduced_log_ratio(alpha, beta, v[0].exp(), rho_of(v[1]));
        if r.is_nan() {
            f64::NEG_INFINITY
        } else {
            r
        }
    };

    let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    };
    let t_axis = axis(-4.0, 11.0, 31);

    let mut seeds4 = Vec::new();
    for &s in &axis(-4.0, 4.0, 9) {
        for &a in &axis(-2.0, 2.0, 9) {
            for &u in &axis(-6.0, 6.0, 13) {
                for &t in &t_axis {
                    let v = vec![s, a, u, t];
                    seeds4.push((four(&v), v));
                }
            }
        }
    }
    let best4 = refine(&four, seeds4, 1.0);

    let mut seeds2 = Vec::new();
    for &u in &axis(-10.0, 10.0, 81) {
        for &t in &t_axis {
            let v = vec![u, t];
            seeds2.push((two(&v), v));
        }
    }
    let best2 = refine(&two, seeds2, 0.5);

    Ok(Section6Bruteforce {
        c_four: 0.5 * best4.0,
        c_two: 0.5 * best2.0,
        k_ratio: (2.0 * best4.1[1]).exp(),
        rho: rho_of(best4.1[3]),
    })
}

/// Nelder-Mead from the best few grid points, restarting until no gain.
fn refine<F: Fn(&[f64]) -> f64>(f: &F, mut seeds: Vec<(f64, Vec<f64>)>, step: f64) -> (f64, Vec<f64>) {
    seeds.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(core::cmp::Ordering::Equal));
    let mut best = (f64::NEG_INFINITY, seeds[0].1.clone());
    for (_, x0) in seeds.into_iter().take(4) {
        let mut x = x0;
        let mut fx = f(&x);
        let mut scale = step;
        for _ in 0..30 {
            let (fy, y) = nelder_mead(f, &x, scale, 4000);
            let gain = fy - fx;
            if fy > fx {
                fx = fy;
                x = y;
            }
            if gain <= 1e-15 {
                if scale < 1e-3 {
                    break;
                }
                scale *= 0.1;
            }
        }
        if fx > best.0 {
            best = (fx, x);
        }
    }
    best
}

/// Maximize `f` with Nelder-Mead from an axis-aligned simplex of edge `step`.
fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], step: f64, max_iter: usize) -> (f64, Vec<f64>) {
    let n = x0.len();
    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
    simplex.push((f(x0), x0.to_vec()));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        simplex.push((f(&x), x));
    }
    let order = |s: &mut Vec<(f64, Vec<f64>)>| {
        s.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(core::cmp::Ordering::Equal));
    };
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
    };
    for _ in 0..max_iter {
        order(&mut simplex);
        let spread = simplex[0].0 - simplex[n].0;
        if spread.abs() <= 1e-15 * (1.0 + simplex[0].0.abs()) {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (_, x) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let refl = lerp(&centroid, &worst.1, -1.0);
        let fr = f(&refl);
        if fr > simplex[0].0 {
            let exp = lerp(&centroid, &worst.1, -2.0);
            let fe = f(&exp);
            simplex[n] = if fe > fr { (fe, exp) } else { (fr, refl) };
        } else if fr > simplex[n - 1].0 {
            simplex[n] = (fr, refl);
        } else {
            let (fc, con) = if fr > worst.0 {
                let c = lerp(&centroid, &worst.1, -0.5);
                (f(&c), c)
            } else {
                let c = lerp(&centroid, &worst.1, 0.5);
                (f(&c), c)
            };
            if fc > worst.0.max(fr) {
                simplex[n] = (fc, con);
            } else {
                let best = simplex[0].1.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x = lerp(&best, &entry.1, 0.5);
                    *entry = (f(&x), x);
                }
            }
        }
    }
    order(&mut simplex);
    simplex.swap_remove(0)
}
