//! Gaussian entropy algebra and the Gaussian optimum `M_g`.
//!
//! For `X ~ N(0, Diag(Σ_1..Σ_k))` the functional reduces to
//!
//! ```text
//! F(Σ) = Σ_i d_i h(Σ_i) − Σ_j c_j h(A_j Σ A_jᵀ),   h(K) = ½ log((2πe)^dim det K)
//! ```
//!
//! [`solve_mg`] maximizes `F` with BFGS over per-block log-Cholesky factors
//! and several starts. Divergence is recognised through escape rays: along
//! `Σ ↦ S_λ Σ S_λ`, with `S_λ` scaling a product subspace `V` by `√λ`, the
//! objective grows like `½ slack(V) log λ` plus an `O(1/λ)` transient, so
//! non-decaying increments over consecutive doublings mean `M_g = +∞`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{E, PI};

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::datum::{BlepDatum, Partition};
use crate::error::{Error, Result};
use crate::finiteness::scaling_residual;
use crate::linalg;
use crate::rng::task_rng;
use crate::subspace::ProductSubspace;
use crate::SCALING_TOL;

/// Images with condition number above this count as failed evaluations.
pub const IMAGE_COND_LIMIT: f64 = 1e12;

/// `½ log((2πe)^d det K)`; zero for a 0-dimensional `K`.
pub fn gaussian_entropy(cov: &DMatrix<f64>) -> Result<f64> {
    let d = cov.nrows();
    if d != cov.ncols() {
        return Err(Error::DimensionMismatch {
            what: "covariance (not square)",
            expected: d,
            found: cov.ncols(),
        });
    }
    if d == 0 {
        return Ok(0.0);
    }
    if linalg::symmetry_defect(cov) > 1e-10 * (1.0 + cov.amax()) {
        return Err(Error::NotSpd {
            what: "covariance (asymmetric)".into(),
        });
    }
    let log_det = linalg::log_det_spd(cov).ok_or_else(|| Error::NotSpd {
        what: "covariance".into(),
    })?;
    Ok(0.5 * (d as f64 * (2.0 * PI * E).ln() + log_det))
}

/// `Σ = Diag(Σ_1, …, Σ_k)`, each block SPD.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCovariance {
    blocks: Vec<DMatrix<f64>>,
}

impl BlockCovariance {
    pub fn new(blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        for (i, b) in blocks.iter().enumerate() {
            if b.nrows() != b.ncols() || b.nrows() == 0 {
                return Err(Error::NotSpd {
                    what: format!("block {i} (shape {:?})", b.shape()),
                });
            }
            if linalg::symmetry_defect(b) > 1e-10 * (1.0 + b.amax()) {
                return Err(Error::NotSpd {
                    what: format!("block {i} (asymmetric)"),
                });
            }
            if Cholesky::new(b.clone()).is_none() {
                return Err(Error::NotSpd {
                    what: format!("block {i}"),
                });
            }
        }
        Ok(Self { blocks })
    }

    pub fn identity(partition: &Partition) -> Self {
        Self {
            blocks: partition.blocks().iter().map(|&r| DMatrix::identity(r, r)).collect(),
        }
    }

    /// Diagonal blocks `diag(values)` cut to the partition.
    pub fn diagonal(partition: &Partition, values: &[f64]) -> Result<Self> {
        if values.len() != partition.n() {
            return Err(Error::DimensionMismatch {
                what: "diagonal covariance",
                expected: partition.n(),
                found: values.len(),
            });
        }
        Self::new(
            (0..partition.k())
                .map(|i| {
                    let off = partition.offset(i);
                    DMatrix::from_diagonal(&DVector::from_column_slice(
                        &values[off..off + partition.size(i)],
                    ))
                })
                .collect(),
        )
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<DMatrix<f64>> {
        self.blocks
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b * t).collect(),
        }
    }

    /// The full `n × n` block-diagonal matrix.
    pub fn full(&self) -> DMatrix<f64> {
        linalg::block_diag(&self.blocks)
    }

    pub fn check_partition(&self, partition: &Partition) -> Result<()> {
        if self.blocks.len() != partition.k() {
            return Err(Error::DimensionMismatch {
                what: "covariance blocks",
                expected: partition.k(),
                found: self.blocks.len(),
            });
        }
        for (b, &r) in self.blocks.iter().zip(partition.blocks()) {
            if b.nrows() != r {
                return Err(Error::DimensionMismatch {
                    what: "covariance block size",
                    expected: r,
                    found: b.nrows(),
                });
            }
        }
        Ok(())
    }

    /// Largest spectral condition number over the blocks.
    pub fn max_condition(&self) -> f64 {
        self.blocks.iter().map(linalg::spd_condition).fold(1.0, f64::max)
    }
}

/// Noise levels of the perturbed functional: `δ` on the blocks, `ε` on the images.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerturbationParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl PerturbationParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && delta >= 0.0) {
            return Err(Error::Domain(format!(
                "perturbation (epsilon={epsilon}, delta={delta}) must be nonnegative"
            )));
        }
        Ok(Self { epsilon, delta })
    }

    pub const ZERO: Self = Self {
        epsilon: 0.0,
        delta: 0.0,
    };
}

fn add_diag(m: &DMatrix<f64>, s: f64) -> DMatrix<f64> {
    if s == 0.0 {
        return m.clone();
    }
    let mut out = m.clone();
    for i in 0..out.nrows() {
        out[(i, i)] += s;
    }
    out
}

fn image_entropy(j: usize, cov: &DMatrix<f64>) -> Result<f64> {
    let cov = linalg::symmetrize(cov);
    let cond = linalg::spd_condition(&cov);
    if !(cond <= IMAGE_COND_LIMIT) {
        return Err(Error::SingularImage { map: j, condition: cond });
    }
    gaussian_entropy(&cov).map_err(|_| Error::SingularImage { map: j, condition: cond })
}

fn evaluate(datum: &BlepDatum, sigma: &BlockCovariance, p: PerturbationParams) -> Result<f64> {
    sigma.check_partition(&datum.partition)?;
    let mut value = 0.0;
    for (i, (b, &di)) in sigma.blocks.iter().zip(&datum.d).enumerate() {
        if di == 0.0 {
            continue;
        }
        let h = gaussian_entropy(&add_diag(b, p.delta)).map_err(|_| Error::NotSpd {
            what: format!("block {i}"),
        })?;
        value += di * h;
    }
    let full = add_diag(&sigma.full(), p.delta);
    for (j, (a, &cj)) in datum.maps.iter().zip(&datum.c).enumerate() {
        if cj == 0.0 {
            continue;
        }
        let img = add_diag(&(a * &full * a.transpose()), p.epsilon);
        value -= cj * image_entropy(j, &img)?;
    }
    Ok(value)
}

/// `F(Σ) = Σ d_i h(Σ_i) − Σ c_j h(A_j Σ A_jᵀ)`. Maps with `c_j = 0` are skipped.
pub fn objective(datum: &BlepDatum, sigma: &BlockCovariance) -> Result<f64> {
    evaluate(datum, sigma, PerturbationParams::ZERO)
}

/// `Σ d_i h(Σ_i + δI) − Σ c_j h(A_j(Σ + δI)A_jᵀ + εI)`.
pub fn objective_perturbed(
    datum: &BlepDatum,
    sigma: &BlockCovariance,
    p: PerturbationParams,
) -> Result<f64> {
    evaluate(datum, sigma, p)
}

/// `∂F/∂Σ_i = ½ d_i Σ_i⁻¹ − ½ Σ_j c_j [A_jᵀ (A_j Σ A_jᵀ)⁻¹ A_j]_{ii}`.
pub fn gradient(datum: &BlepDatum, sigma: &BlockCovariance) -> Result<Vec<DMatrix<f64>>> {
    sigma.check_partition(&datum.partition)?;
    let partition = &datum.partition;
    let full = sigma.full();
    let n = partition.n();
    let mut pull = DMatrix::zeros(n, n);
    for (j, (a, &cj)) in datum.maps.iter().zip(&datum.c).enumerate() {
        if cj == 0.0 {
            continue;
        }
        let img = linalg::symmetrize(&(a * &full * a.transpose()));
        let cond = linalg::spd_condition(&img);
        if !(cond <= IMAGE_COND_LIMIT) {
            return Err(Error::SingularImage { map: j, condition: cond });
        }
        let inv = linalg::spd_inverse(&img).ok_or(Error::SingularImage { map: j, condition: cond })?;
        pull += (a.transpose() * inv * a) * cj;
    }
    let mut grads = Vec::with_capacity(partition.k());
    for (i, (b, &di)) in sigma.blocks.iter().zip(&datum.d).enumerate() {
        let off = partition.offset(i);
        let r = partition.size(i);
        let inv = linalg::spd_inverse(b).ok_or_else(|| Error::NotSpd {
            what: format!("block {i}"),
        })?;
        let g = inv * (0.5 * di) - pull.view((off, off), (r, r)) * 0.5;
        grads.push(linalg::symmetrize(&g));
    }
    Ok(grads)
}

// ---------------------------------------------------------------------------
// log-Cholesky parameterization

fn param_len(partition: &Partition) -> usize {
    partition.blocks().iter().map(|&r| r * (r + 1) / 2).sum()
}

fn theta_to_factors(partition: &Partition, theta: &[f64]) -> Vec<DMatrix<f64>> {
    let mut pos = 0;
    partition
        .blocks()
        .iter()
        .map(|&r| {
            let mut l = DMatrix::zeros(r, r);
            for a in 0..r {
                for b in 0..=a {
                    l[(a, b)] = if a == b { theta[pos].exp() } else { theta[pos] };
                    pos += 1;
                }
            }
            l
        })
        .collect()
}

fn factors_to_sigma(factors: &[DMatrix<f64>]) -> BlockCovariance {
    BlockCovariance {
        blocks: factors.iter().map(|l| l * l.transpose()).collect(),
    }
}

fn sigma_to_theta(sigma: &BlockCovariance) -> Vec<f64> {
    let mut theta = Vec::new();
    for b in &sigma.blocks {
        let l = Cholesky::new(b.clone()).expect("SPD block").l();
        for a in 0..b.nrows() {
            for c in 0..=a {
                theta.push(if a == c { l[(a, a)].ln() } else { l[(a, c)] });
            }
        }
    }
    theta
}

/// Objective and log-Cholesky gradient evaluated from the factors directly.
/// Block log-determinants are `2 Σ θ_aa` exactly, image log-determinants
/// come from a QR of `(A_j L)ᵀ`, so nearly singular iterates keep their
/// accuracy (forming `Σ` first would cost a factor `cond(Σ)`).
fn value_and_theta_grad(datum: &BlepDatum, theta: &[f64]) -> Result<(f64, Vec<f64>, BlockCovariance)> {
    let partition = &datum.partition;
    let factors = theta_to_factors(partition, theta);
    let l_full = linalg::block_diag(&factors);
    let h1 = 0.5 * (2.0 * PI * E).ln();
    let mut value = 0.0;
    for (l, &di) in factors.iter().zip(&datum.d) {
        let r = l.nrows();
        let log_det: f64 = 2.0 * (0..r).map(|a| l[(a, a)].ln()).sum::<f64>();
        value += di * (r as f64 * h1 + 0.5 * log_det);
    }
    let mut dl: Vec<DMatrix<f64>> = factors.iter().map(|l| DMatrix::zeros(l.nrows(), l.ncols())).collect();
    for (j, (a, &cj)) in datum.maps.iter().zip(&datum.c).enumerate() {
        if cj == 0.0 {
            continue;
        }
        let nj = a.nrows();
        let qr = (a * &l_full).transpose().qr();
        let (q, r) = (qr.q(), qr.r());
        let diag: Vec<f64> = (0..nj).map(|t| r[(t, t)].abs()).collect();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        let condition = (hi / lo).powi(2);
        if !(condition <= IMAGE_COND_LIMIT) {
            return Err(Error::SingularImage { map: j, condition });
        }
        let log_det: f64 = 2.0 * diag.iter().map(|x| x.ln()).sum::<f64>();
        value -= cj * (nj as f64 * h1 + 0.5 * log_det);
        // M = R⁻ᵀ A, so Aᵀ(AΣAᵀ)⁻¹A = MᵀM and M·L = Qᵀ
        let m = r
            .transpose()
            .solve_lower_triangular(a)
            .ok_or(Error::SingularImage { map: j, condition })?;
        for (i, g) in dl.iter_mut().enumerate() {
            let (off, ri) = (partition.offset(i), partition.size(i));
            *g -= (m.columns(off, ri).transpose() * q.rows(off, ri).transpose()) * cj;
        }
    }
    let mut g = Vec::with_capacity(theta.len());
    for ((l, d), &di) in factors.iter().zip(&dl).zip(&datum.d) {
        for a in 0..l.nrows() {
            for b in 0..=a {
                g.push(if a == b { di + d[(a, a)] * l[(a, a)] } else { d[(a, b)] });
            }
        }
    }
    Ok((value, g, factors_to_sigma(&factors)))
}

/// Ratio of the largest to the smallest eigenvalue over all blocks together.
fn pooled_condition(sigma: &BlockCovariance) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for b in &sigma.blocks {
        for &x in SymmetricEigen::new(b.clone()).eigenvalues.iter() {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// escape rays

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayDirection {
    /// Scale `V` up by `λ`.
    Up,
    /// Scale `V` down by `1/λ`.
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayOptions {
    /// Number of doublings of `λ`; 20 reaches `λ ≈ 10⁶`.
    pub doublings: usize,
    /// Trailing increments that must stay positive and non-decaying.
    pub window: usize,
    /// Growth above the starting value that counts as divergence outright.
    pub blowup_threshold: f64,
}

impl Default for RayOptions {
    fn default() -> Self {
        Self {
            doublings: 20,
            window: 10,
            blowup_threshold: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayProbe {
    /// `F(λ = 2^s) − F(λ = 2^{s−1})` for `s = 1..`.
    pub increments: Vec<f64>,
    /// Final growth per unit `log λ`; tends to `½ slack(V)` for `Up`.
    pub growth_rate: f64,
    pub escape: bool,
}

fn scale_along(sigma: &BlockCovariance, v: &ProductSubspace, factor: f64) -> BlockCovariance {
    let s = factor.sqrt();
    BlockCovariance {
        blocks: sigma
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let p = v.block_projector(i);
                let r = b.nrows();
                let t = DMatrix::identity(r, r) + p * (s - 1.0);
                linalg::symmetrize(&(&t * b * &t))
            })
            .collect(),
    }
}

/// Follow `Σ(λ)` (`V`-component scaled by `λ^{±1}`) over doublings of `λ`.
pub fn escape_ray(
    datum: &BlepDatum,
    base: &BlockCovariance,
    v: &ProductSubspace,
    direction: RayDirection,
    opts: &RayOptions,
) -> Result<RayProbe> {
    v.check_partition(&datum.partition)?;
    let start = objective(datum, base)?;
    let mut prev = start;
    let mut increments = Vec::with_capacity(opts.doublings);
    let mut blew_up = false;
    for s in 1..=opts.doublings {
        let lambda = (2.0f64).powi(s as i32);
        let factor = match direction {
            RayDirection::Up => lambda,
            RayDirection::Down => 1.0 / lambda,
        };
        let Ok(value) = objective(datum, &scale_along(base, v, factor)) else {
            break;
        };
        increments.push(value - prev);
        prev = value;
        if value - start > opts.blowup_threshold {
            blew_up = true;
            break;
        }
    }
    let last = increments.last().copied().unwrap_or(0.0);
    let growth_rate = last / core::f64::consts::LN_2;
    let sustained = increments.len() >= opts.window && {
        let tail = &increments[increments.len() - opts.window..];
        tail.iter().all(|&x| x > 0.0) && last > 1e-12 && last >= 0.5 * tail[0]
    };
    Ok(RayProbe {
        increments,
        growth_rate,
        escape: blew_up || sustained,
    })
}

/// Split the pooled spectrum of `Σ` at its widest log-gap; the product
/// subspace of eigenvectors above the gap is the direction the iterate is
/// stretching along.
fn stretched_subspace(sigma: &BlockCovariance) -> Option<ProductSubspace> {
    let eigs: Vec<SymmetricEigen<f64, nalgebra::Dyn>> =
        sigma.blocks.iter().map(|b| SymmetricEigen::new(b.clone())).collect();
    let mut pooled: Vec<f64> = eigs
        .iter()
        .flat_map(|e| e.eigenvalues.iter().map(|&x| x.max(f64::MIN_POSITIVE).ln()))
        .collect();
    if pooled.len() < 2 {
        return None;
    }
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let (mut gap, mut cut) = (0.0, pooled[0]);
    for w in pooled.windows(2) {
        if w[1] - w[0] > gap {
            gap = w[1] - w[0];
            cut = 0.5 * (w[0] + w[1]);
        }
    }
    if gap <= 0.0 {
        return None;
    }
    let bases = eigs
        .iter()
        .map(|e| {
            let keep: Vec<usize> = e
                .eigenvalues
                .iter()
                .enumerate()
                .filter(|(_, &x)| x.max(f64::MIN_POSITIVE).ln() > cut)
                .map(|(i, _)| i)
                .collect();
            e.eigenvectors.select_columns(keep.iter())
        })
        .collect();
    Some(ProductSubspace::from_spans(bases))
}

// ---------------------------------------------------------------------------
// solver

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub starts: usize,
    /// Convergence threshold on the parameter-space gradient norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Objective gain over `F(I)` treated as divergence.
    pub blowup_threshold: f64,
    /// Spread of the iterate's eigenvalues (all blocks pooled) that stops a start.
    pub cond_threshold: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            tol: 1e-8,
            max_iter: 1000,
            blowup_threshold: 1e3,
            cond_threshold: 1e12,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSolveResult {
    /// `M_g` in nats; `+∞` when unbounded.
    pub mg_value: f64,
    pub sigma_star: BlockCovariance,
    pub converged: bool,
    pub unbounded: bool,
    pub starts_used: usize,
    pub gradient_norm: f64,
    /// Direction of divergence when `unbounded`.
    pub escape_subspace: Option<ProductSubspace>,
}

#[derive(Debug, Clone)]
struct StartOutcome {
    value: f64,
    sigma: BlockCovariance,
    grad_norm: f64,
    converged: bool,
    stalled: bool,
    degenerate: bool,
    blowup: bool,
}

fn ascend(datum: &BlepDatum, theta0: Vec<f64>, f_ref: f64, opts: &SolverOptions) -> Result<StartOutcome> {
    let dim = theta0.len();
    let mut theta = theta0;
    let (mut f, mut g, mut sigma) = value_and_theta_grad(datum, &theta)?;
    // inverse Hessian of −F
    let mut h = DMatrix::<f64>::identity(dim, dim);
    let mut fresh = true;
    let mut outcome = StartOutcome {
        value: f,
        sigma: sigma.clone(),
        grad_norm: norm(&g),
        converged: false,
        stalled: false,
        degenerate: false,
        blowup: false,
    };
    for _ in 0..opts.max_iter {
        let gn = norm(&g);
        if gn <= opts.tol {
            outcome.converged = true;
            break;
        }
        if f - f_ref > opts.blowup_threshold {
            outcome.blowup = true;
            break;
        }
        if pooled_condition(&sigma) > opts.cond_threshold {
            outcome.degenerate = true;
            break;
        }
        // ascent direction p = H ∇F
        let gv = DVector::from_column_slice(&g);
        let mut p = &h * &gv;
        if p.dot(&gv) <= 0.0 {
            h = DMatrix::identity(dim, dim);
            p = gv.clone();
        }
        let pmax = p.amax();
        if pmax > 10.0 {
            p *= 10.0 / pmax;
        }
        let slope = p.dot(&gv);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = theta.iter().zip(p.iter()).map(|(t, d)| t + step * d).collect();
            if let Ok((ft, gt, st)) = value_and_theta_grad(datum, &trial) {
                if ft.is_finite() && ft >= f + 1e-4 * step * slope {
                    accepted = Some((trial, ft, gt, st));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((trial, ft, gt, st)) = accepted else {
            if fresh {
                outcome.stalled = true;
                break;
            }
            h = DMatrix::identity(dim, dim);
            fresh = true;
            continue;
        };
        fresh = false;
        // BFGS update on the minimization of −F
        let s = DVector::from_iterator(dim, trial.iter().zip(&theta).map(|(a, b)| a - b));
        let y = DVector::from_iterator(dim, g.iter().zip(&gt).map(|(a, b)| a - b));
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(dim, dim);
            let left = &i - (&s * y.transpose()) * rho;
            let right = &i - (&y * s.transpose()) * rho;
            h = &left * &h * &right + (&s * s.transpose()) * rho;
        }
        theta = trial;
        f = ft;
        g = gt;
        sigma = st;
    }
    outcome.value = f;
    outcome.sigma = sigma;
    outcome.grad_norm = norm(&g);
    if outcome.grad_norm <= opts.tol {
        outcome.converged = true;
    }
    Ok(outcome)
}

/// Higher value wins; values within rounding of each other count as tied,
/// and a converged start then beats one that stalled on the plateau.
fn better(a: &StartOutcome, b: &StartOutcome) -> bool {
    let tie = 1e-10 * (1.0 + b.value.abs());
    if (a.value - b.value).abs() <= tie {
        a.converged && !b.converged
    } else {
        a.value > b.value
    }
}

fn random_theta<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| 0.7 * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Maximize the Gaussian objective over block covariances.
///
/// A nonzero scaling residual is reported as unbounded without ascent, since
/// `F(tΣ) − F(Σ) = ½ (Σ d_i r_i − Σ c_j n_j) log t`. Otherwise each start
/// runs BFGS from the identity (start 0) or a random log-Cholesky point;
/// iterates that blow up or degenerate are checked with an escape ray.
pub fn solve_mg(datum: &BlepDatum, opts: &SolverOptions) -> Result<GaussianSolveResult> {
    datum.ensure_valid()?;
    let partition = &datum.partition;
    let identity = BlockCovariance::identity(partition);
    let ray_opts = RayOptions {
        blowup_threshold: opts.blowup_threshold,
        ..RayOptions::default()
    };

    let residual = scaling_residual(datum);
    if residual.abs() > SCALING_TOL {
        let full = ProductSubspace::full(partition);
        let dir = if residual > 0.0 {
            RayDirection::Up
        } else {
            RayDirection::Down
        };
        let grad_norm = value_and_theta_grad(datum, &sigma_to_theta(&identity))
            .map(|(_, g, _)| norm(&g))
            .unwrap_or(f64::NAN);
        let probe = escape_ray(datum, &identity, &full, dir, &ray_opts)?;
        debug_assert!(probe.escape);
        return Ok(GaussianSolveResult {
            mg_value: f64::INFINITY,
            sigma_star: identity,
            converged: false,
            unbounded: true,
            starts_used: 0,
            gradient_norm: grad_norm,
            escape_subspace: Some(full),
        });
    }

    let f_ref = objective(datum, &identity)?;
    let len = param_len(partition);
    let mut best: Option<StartOutcome> = None;
    let mut starts_used = 0;
    for s in 0..opts.starts.max(1) {
        let theta0 = if s == 0 {
            vec![0.0; len]
        } else {
            random_theta(len, &mut task_rng(opts.seed, s as u64))
        };
        let Ok(outcome) = ascend(datum, theta0, f_ref, opts) else {
            continue;
        };
        starts_used += 1;
        let mut escape = None;
        if outcome.blowup || outcome.degenerate || !outcome.converged {
            // the asymptotic growth rate along V does not depend on the base point
            if let Some(v) = stretched_subspace(&outcome.sigma) {
                if outcome.blowup || escape_ray(datum, &identity, &v, RayDirection::Up, &ray_opts)?.escape {
                    escape = Some(v);
                }
            }
        }
        if outcome.blowup || escape.is_some() {
            return Ok(GaussianSolveResult {
                mg_value: f64::INFINITY,
                sigma_star: outcome.sigma,
                converged: false,
                unbounded: true,
                starts_used,
                gradient_norm: outcome.grad_norm,
                escape_subspace: escape,
            });
        }
        if best.as_ref().is_none_or(|b| better(&outcome, b)) {
            best = Some(outcome);
        }
    }
    let best = best.ok_or_else(|| Error::Domain("objective undefined at every start".into()))?;
    Ok(GaussianSolveResult {
        mg_value: best.value,
        sigma_star: best.sigma,
        converged: best.converged,
        unbounded: false,
        starts_used,
        gradient_norm: best.grad_norm,
        escape_subspace: None,
    })
}

// ---------------------------------------------------------------------------
// pairs and mixtures

/// Joint law of two copies `(X_1, X_2)`: per block the `2r_i × 2r_i`
/// covariance of `(X_{i1}, X_{i2})`, blocks independent across `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPair {
    blocks: Vec<DMatrix<f64>>,
}

impl GaussianPair {
    pub fn new(blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        for (i, b) in blocks.iter().enumerate() {
            if b.nrows() != b.ncols() || b.nrows() % 2 != 0 || b.nrows() == 0 {
                return Err(Error::NotSpd {
                    what: format!("pair block {i} (shape {:?})", b.shape()),
                });
            }
            if linalg::symmetry_defect(b) > 1e-10 * (1.0 + b.amax()) || Cholesky::new(b.clone()).is_none() {
                return Err(Error::NotSpd {
                    what: format!("pair block {i}"),
                });
            }
        }
        Ok(Self { blocks })
    }

    /// Independent copies with the given marginals.
    pub fn independent(x1: &BlockCovariance, x2: &BlockCovariance) -> Result<Self> {
        Self::with_cross(x1, x2, None)
    }

    /// Per-block cross-covariances `Cov(X_{i1}, X_{i2}) = cross[i]`.
    pub fn with_cross(
        x1: &BlockCovariance,
        x2: &BlockCovariance,
        cross: Option<&[DMatrix<f64>]>,
    ) -> Result<Self> {
        let blocks = x1
            .blocks
            .iter()
            .zip(&x2.blocks)
            .enumerate()
            .map(|(i, (a, b))| {
                let r = a.nrows();
                let mut m = DMatrix::zeros(2 * r, 2 * r);
                m.view_mut((0, 0), (r, r)).copy_from(a);
                m.view_mut((r, r), (r, r)).copy_from(b);
                if let Some(c) = cross {
                    m.view_mut((0, r), (r, r)).copy_from(&c[i]);
                    m.view_mut((r, 0), (r, r)).copy_from(&c[i].transpose());
                }
                m
            })
            .collect();
        Self::new(blocks)
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn marginals(&self) -> (BlockCovariance, BlockCovariance) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for m in &self.blocks {
            let r = m.nrows() / 2;
            a.push(m.view((0, 0), (r, r)).into_owned());
            b.push(m.view((r, r), (r, r)).into_owned());
        }
        (BlockCovariance { blocks: a }, BlockCovariance { blocks: b })
    }

    /// `2n × 2n` covariance of `(X_1, X_2)` with `X_1` first.
    fn joint(&self, partition: &Partition) -> DMatrix<f64> {
        let n = partition.n();
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        for (i, m) in self.blocks.iter().enumerate() {
            let r = partition.size(i);
            let off = partition.offset(i);
            for (si, sj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                out.view_mut((si * n + off, sj * n + off), (r, r))
                    .copy_from(&m.view((si * r, sj * r), (r, r)));
            }
        }
        out
    }
}

/// Covariance of `((X_1 + X_2)/√2, (X_1 − X_2)/√2)`; an involution.
pub fn rotate_pair(pair: &GaussianPair) -> GaussianPair {
    let s = 0.5f64.sqrt();
    GaussianPair {
        blocks: pair
            .blocks
            .iter()
            .map(|m| {
                let r = m.nrows() / 2;
                let mut rot = DMatrix::zeros(2 * r, 2 * r);
                for a in 0..r {
                    rot[(a, a)] = s;
                    rot[(a, a + r)] = s;
                    rot[(a + r, a)] = s;
                    rot[(a + r, a + r)] = -s;
                }
                linalg::symmetrize(&(&rot * m * rot.transpose()))
            })
            .collect(),
    }
}

/// Perturbed functional of a pair: joint block entropies minus joint image
/// entropies under the doubled maps `diag(A_j, A_j)`.
pub fn pair_s(datum: &BlepDatum, pair: &GaussianPair, p: PerturbationParams) -> Result<f64> {
    let partition = &datum.partition;
    if pair.blocks.len() != partition.k()
        || pair.blocks.iter().zip(partition.blocks()).any(|(m, &r)| m.nrows() != 2 * r)
    {
        return Err(Error::DimensionMismatch {
            what: "pair blocks",
            expected: partition.k(),
            found: pair.blocks.len(),
        });
    }
    let mut value = 0.0;
    for (m, &di) in pair.blocks.iter().zip(&datum.d) {
        if di != 0.0 {
            value += di * gaussian_entropy(&add_diag(m, p.delta))?;
        }
    }
    let n = partition.n();
    let joint = add_diag(&pair.joint(partition), p.delta);
    for (j, (a, &cj)) in datum.maps.iter().zip(&datum.c).enumerate() {
        if cj == 0.0 {
            continue;
        }
        let nj = a.nrows();
        let mut doubled = DMatrix::zeros(2 * nj, 2 * n);
        doubled.view_mut((0, 0), (nj, n)).copy_from(a);
        doubled.view_mut((nj, n), (nj, n)).copy_from(a);
        let img = add_diag(&(&doubled * &joint * doubled.transpose()), p.epsilon);
        value -= cj * image_entropy(j, &img)?;
    }
    Ok(value)
}

/// Finite mixture of centered Gaussians: the conditional laws of `X` given
/// an auxiliary `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    components: Vec<BlockCovariance>,
}

impl GaussianMixture {
    /// Weights must be positive and sum to 1 within 1e-12; at most
    /// `Σ r_i(r_i+1)/2 + 1` components.
    pub fn new(partition: &Partition, weights: Vec<f64>, components: Vec<BlockCovariance>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::InvalidMixture(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidMixture("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMixture(format!("weights sum to {total}")));
        }
        let cap = Self::max_components(partition);
        if components.len() > cap {
            return Err(Error::InvalidMixture(format!(
                "{} components exceed the cardinality bound {cap}",
                components.len()
            )));
        }
        for c in &components {
            c.check_partition(partition)?;
        }
        Ok(Self { weights, components })
    }

    /// `Σ r_i (r_i + 1) / 2 + 1`.
    pub fn max_components(partition: &Partition) -> usize {
        partition.blocks().iter().map(|&r| r * (r + 1) / 2).sum::<usize>() + 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[BlockCovariance] {
        &self.components
    }
}

/// Conditional functional `Σ_u p_u · s_{ε,δ}(N(0, Σ^{(u)}))`.
pub fn mixture_s(datum: &BlepDatum, mix: &GaussianMixture, p: PerturbationParams) -> Result<f64> {
    mix.weights
        .iter()
        .zip(&mix.components)
        .map(|(w, c)| objective_perturbed(datum, c, p).map(|v| w * v))
        .sum()
}
