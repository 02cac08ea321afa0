//! Sampling from product-form laws, entropy estimates, and a statistical
//! check of `Σ d_i h(X_i) − Σ c_j h(A_j X) ≤ M_g`.
//!
//! Block entropies use exact values when the family has one; image
//! entropies always go through the Kozachenko-Leonenko k-nearest-neighbour
//! estimator. Standard errors come from 10 contiguous batch means of the
//! per-point log-distance terms.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::datum::{BlepDatum, Partition};
use crate::error::{Error, Result};
use crate::special::{digamma, ln_unit_ball_volume};

/// Estimator dimension above which results are flagged as unreliable.
pub const KNN_MAX_DIM: usize = 8;
pub const DEFAULT_SAMPLES: usize = 50_000;
pub const DEFAULT_K: usize = 3;
const BATCHES: usize = 10;

/// Law of one block `X_i`, always centered.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockFamily {
    Gaussian(DMatrix<f64>),
    /// Independent coordinates uniform on `[−w/2, w/2]`.
    UniformBox(Vec<f64>),
    /// Independent Laplace coordinates with the given scales.
    LaplaceProduct(Vec<f64>),
    /// `weight · N(μ_a, Σ_a) + (1 − weight) · N(μ_b, Σ_b)` with
    /// `μ_b = −weight/(1−weight) · μ_a`, so the mixture mean is zero.
    GaussianMixture2 {
        weight: f64,
        mean_a: Vec<f64>,
        cov_a: DMatrix<f64>,
        cov_b: DMatrix<f64>,
    },
}

impl BlockFamily {
    pub fn dim(&self) -> usize {
        match self {
            BlockFamily::Gaussian(s) => s.nrows(),
            BlockFamily::UniformBox(w) => w.len(),
            BlockFamily::LaplaceProduct(b) => b.len(),
            BlockFamily::GaussianMixture2 { cov_a, .. } => cov_a.nrows(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BlockFamily::Gaussian(_) => "gaussian",
            BlockFamily::UniformBox(_) => "uniform",
            BlockFamily::LaplaceProduct(_) => "laplace",
            BlockFamily::GaussianMixture2 { .. } => "mixture",
        }
    }

    fn check(&self, i: usize) -> Result<()> {
        let spd = |m: &DMatrix<f64>, what: &str| -> Result<()> {
            if !m.is_square() || Cholesky::new(m.clone()).is_none() {
                return Err(Error::NotSpd {
                    what: format!("{what} of block {i}"),
                });
            }
            Ok(())
        };
        let positive = |v: &[f64], what: &str| -> Result<()> {
            if v.is_empty() || v.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::Domain(format!("{what} of block {i} must be positive")));
            }
            Ok(())
        };
        match self {
            BlockFamily::Gaussian(s) => spd(s, "covariance"),
            BlockFamily::UniformBox(w) => positive(w, "widths"),
            BlockFamily::LaplaceProduct(b) => positive(b, "scales"),
            BlockFamily::GaussianMixture2 {
                weight,
                mean_a,
                cov_a,
                cov_b,
            } => {
                if !(*weight > 0.0 && *weight < 1.0) {
                    return Err(Error::InvalidMixture(format!("weight {weight} of block {i} not in (0, 1)")));
                }
                if mean_a.len() != cov_a.nrows() || cov_b.shape() != cov_a.shape() {
                    return Err(Error::InvalidMixture(format!("component shapes of block {i} disagree")));
                }
                spd(cov_a, "first mixture covariance")?;
                spd(cov_b, "second mixture covariance")
            }
        }
    }
}

/// Independent blocks, one family each.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleModel {
    pub blocks: Vec<BlockFamily>,
}

impl SampleModel {
    pub fn new(blocks: Vec<BlockFamily>) -> Result<Self> {
        for (i, b) in blocks.iter().enumerate() {
            b.check(i)?;
        }
        Ok(Self { blocks })
    }

    /// Same family on every block: standard Gaussian.
    pub fn gaussian(partition: &Partition) -> Self {
        Self::from_fn(partition, |r| BlockFamily::Gaussian(DMatrix::identity(r, r)))
    }

    /// Unit-width uniform boxes.
    pub fn uniform(partition: &Partition) -> Self {
        Self::from_fn(partition, |r| BlockFamily::UniformBox(vec![1.0; r]))
    }

    /// Unit-scale Laplace coordinates.
    pub fn laplace(partition: &Partition) -> Self {
        Self::from_fn(partition, |r| BlockFamily::LaplaceProduct(vec![1.0; r]))
    }

    /// A lopsided two-component mixture per block.
    pub fn mixture(partition: &Partition) -> Self {
        Self::from_fn(partition, |r| BlockFamily::GaussianMixture2 {
            weight: 0.3,
            mean_a: vec![1.5; r],
            cov_a: DMatrix::identity(r, r) * 0.5,
            cov_b: DMatrix::identity(r, r) * 2.0,
        })
    }

    fn from_fn(partition: &Partition, f: impl Fn(usize) -> BlockFamily) -> Self {
        Self {
            blocks: partition.blocks().iter().map(|&r| f(r)).collect(),
        }
    }

    pub fn check_partition(&self, partition: &Partition) -> Result<()> {
        if self.blocks.len() != partition.k() {
            return Err(Error::DimensionMismatch {
                what: "model blocks",
                expected: partition.k(),
                found: self.blocks.len(),
            });
        }
        for (b, &r) in self.blocks.iter().zip(partition.blocks()) {
            if b.dim() != r {
                return Err(Error::DimensionMismatch {
                    what: "model block dimension",
                    expected: r,
                    found: b.dim(),
                });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.blocks.iter().map(BlockFamily::dim).sum()
    }

    /// Short label such as `uniform` or `gaussian+laplace`.
    pub fn label(&self) -> alloc::string::String {
        let mut names: Vec<&str> = self.blocks.iter().map(BlockFamily::name).collect();
        names.dedup();
        names.join("+")
    }
}

fn sample_block<R: Rng + ?Sized>(family: &BlockFamily, out: &mut [f64], rng: &mut R) {
    let normal = |rng: &mut R, r: usize| DVector::from_fn(r, |_, _| rng.sample::<f64, _>(StandardNormal));
    match family {
        BlockFamily::Gaussian(s) => {
            let l = Cholesky::new(s.clone()).expect("checked SPD").l();
            let z = l * normal(rng, s.nrows());
            out.copy_from_slice(z.as_slice());
        }
        BlockFamily::UniformBox(w) => {
            for (o, &wi) in out.iter_mut().zip(w) {
                *o = wi * (rng.random::<f64>() - 0.5);
            }
        }
        BlockFamily::LaplaceProduct(b) => {
            for (o, &bi) in out.iter_mut().zip(b) {
                // inverse CDF on u ∈ (−½, ½)
                let u = rng.random::<f64>() - 0.5;
                let mag = -(1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln();
                *o = bi * mag.copysign(u);
            }
        }
        BlockFamily::GaussianMixture2 {
            weight,
            mean_a,
            cov_a,
            cov_b,
        } => {
            let first = rng.random::<f64>() < *weight;
            let shift = if first { 1.0 } else { -weight / (1.0 - weight) };
            let cov = if first { cov_a } else { cov_b };
            let l = Cholesky::new(cov.clone()).expect("checked SPD").l();
            let z = l * normal(rng, cov.nrows());
            for (p, o) in out.iter_mut().enumerate() {
                *o = z[p] + shift * mean_a[p];
            }
        }
    }
}

/// `N × n` matrix of i.i.d. draws, block `i` in columns `offset(i)..`.
pub fn sample<R: Rng + ?Sized>(model: &SampleModel, n_samples: usize, rng: &mut R) -> DMatrix<f64> {
    let n = model.n();
    let mut out = DMatrix::zeros(n_samples, n);
    let mut row = vec![0.0; n];
    for s in 0..n_samples {
        let mut off = 0;
        for b in &model.blocks {
            let r = b.dim();
            sample_block(b, &mut row[off..off + r], rng);
            off += r;
        }
        for (p, &v) in row.iter().enumerate() {
            out[(s, p)] = v;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// exact entropies

fn gaussian_density(x: &[f64], mean: &[f64], inv: &DMatrix<f64>, log_norm: f64) -> f64 {
    let d = x.len();
    let mut q = 0.0;
    for a in 0..d {
        for b in 0..d {
            q += (x[a] - mean[a]) * inv[(a, b)] * (x[b] - mean[b]);
        }
    }
    (log_norm - 0.5 * q).exp()
}

/// `−∫ f ln f` for a two-component mixture in one or two dimensions by
/// composite Simpson quadrature over a box covering 12 standard deviations.
fn mixture_entropy(weight: f64, mean_a: &[f64], cov_a: &DMatrix<f64>, cov_b: &DMatrix<f64>) -> f64 {
    let d = mean_a.len();
    let mean_b: Vec<f64> = mean_a.iter().map(|m| -weight / (1.0 - weight) * m).collect();
    let prep = |cov: &DMatrix<f64>| {
        let chol = Cholesky::new(cov.clone()).expect("checked SPD");
        let log_det = 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        (chol.inverse(), -0.5 * (d as f64 * (2.0 * PI).ln() + log_det))
    };
    let (inv_a, ln_a) = prep(cov_a);
    let (inv_b, ln_b) = prep(cov_b);
    let density = |x: &[f64]| {
        weight * gaussian_density(x, mean_a, &inv_a, ln_a) + (1.0 - weight) * gaussian_density(x, &mean_b, &inv_b, ln_b)
    };
    let integrand = |x: &[f64]| {
        let f = density(x);
        if f > 0.0 {
            -f * f.ln()
        } else {
            0.0
        }
    };
    let ranges: Vec<(f64, f64)> = (0..d)
        .map(|p| {
            let sd = cov_a[(p, p)].max(cov_b[(p, p)]).sqrt();
            let lo = mean_a[p].min(mean_b[p]) - 12.0 * sd;
            let hi = mean_a[p].max(mean_b[p]) + 12.0 * sd;
            (lo, hi)
        })
        .collect();
    let steps = if d == 1 { 20_000 } else { 1_200 };
    let simpson_w = |i: usize| -> f64 {
        if i == 0 || i == steps {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let hs: Vec<f64> = ranges.iter().map(|(lo, hi)| (hi - lo) / steps as f64).collect();
    if d == 1 {
        let mut acc = 0.0;
        for i in 0..=steps {
            acc += simpson_w(i) * integrand(&[ranges[0].0 + i as f64 * hs[0]]);
        }
        acc * hs[0] / 3.0
    } else {
        let mut acc = 0.0;
        for i in 0..=steps {
            let x = ranges[0].0 + i as f64 * hs[0];
            let mut inner = 0.0;
            for j in 0..=steps {
                inner += simpson_w(j) * integrand(&[x, ranges[1].0 + j as f64 * hs[1]]);
            }
            acc += simpson_w(i) * inner;
        }
        acc * hs[0] * hs[1] / 9.0
    }
}

/// Exact `h(X_i)` in nats; two-component mixtures use quadrature up to
/// dimension 2 and are otherwise unavailable.
pub fn exact_entropy(model: &SampleModel, block: usize) -> Result<f64> {
    let family = model.blocks.get(block).ok_or(Error::DimensionMismatch {
        what: "block index",
        expected: model.blocks.len(),
        found: block,
    })?;
    Ok(match family {
        BlockFamily::Gaussian(s) => crate::gauss::gaussian_entropy(s)?,
        BlockFamily::UniformBox(w) => w.iter().map(|x| x.ln()).sum(),
        BlockFamily::LaplaceProduct(b) => b.iter().map(|x| 1.0 + LN_2 + x.ln()).sum(),
        BlockFamily::GaussianMixture2 {
            weight,
            mean_a,
            cov_a,
            cov_b,
        } => {
            if mean_a.len() > 2 {
                return Err(Error::NoClosedForm(block));
            }
            mixture_entropy(*weight, mean_a, cov_a, cov_b)
        }
    })
}

// ---------------------------------------------------------------------------
// k-NN entropy

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimationMethod {
    /// Exact value (including quadrature); zero standard error.
    ClosedForm,
    Knn,
}

impl EstimationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimationMethod::ClosedForm => "closed_form",
            EstimationMethod::Knn => "knn",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: EstimationMethod,
    pub n_samples: usize,
    pub k_neighbors: usize,
    /// Coincident points were separated by a tiny jitter.
    pub jittered: bool,
    /// Dimension above [`KNN_MAX_DIM`].
    pub high_dimension: bool,
}

impl EntropyEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            method: EstimationMethod::ClosedForm,
            n_samples: 0,
            k_neighbors: 0,
            jittered: false,
            high_dimension: false,
        }
    }
}

enum KdNode {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

struct KdTree<'a> {
    points: &'a [f64],
    d: usize,
    order: Vec<usize>,
    nodes: Vec<KdNode>,
}

const LEAF_SIZE: usize = 16;

impl<'a> KdTree<'a> {
    fn new(points: &'a [f64], d: usize) -> Self {
        let n = points.len() / d;
        let mut tree = Self {
            points,
            d,
            order: (0..n).collect(),
            nodes: Vec::new(),
        };
        tree.build(0, n);
        tree
    }

    fn coord(&self, i: usize, axis: usize) -> f64 {
        self.points[i * self.d + axis]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(KdNode::Leaf { start, end });
            return id;
        }
        let mut axis = 0;
        let mut spread = -1.0;
        for a in 0..self.d {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in &self.order[start..end] {
                let v = self.coord(i, a);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > spread {
                spread = hi - lo;
                axis = a;
            }
        }
        let mid = start + (end - start) / 2;
        let (points, d) = (self.points, self.d);
        self.order[start..end].select_nth_unstable_by(mid - start, |&x, &y| {
            points[x * d + axis].total_cmp(&points[y * d + axis])
        });
        let value = self.coord(self.order[mid], axis);
        self.nodes.push(KdNode::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = KdNode::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// Squared distance from point `q` to its `k`-th nearest other point.
    fn kth_sq_distance(&self, q: usize, k: usize, best: &mut Vec<f64>) -> f64 {
        best.clear();
        self.search(0, q, k, best);
        best[k - 1]
    }

    fn search(&self, node: usize, q: usize, k: usize, best: &mut Vec<f64>) {
        match self.nodes[node] {
            KdNode::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if i == q {
                        continue;
                    }
                    let mut dist = 0.0;
                    for a in 0..self.d {
                        let t = self.coord(i, a) - self.coord(q, a);
                        dist += t * t;
                    }
                    if best.len() < k || dist < best[best.len() - 1] {
                        let pos = best.partition_point(|&b| b <= dist);
                        best.insert(pos, dist);
                        best.truncate(k);
                    }
                }
            }
            KdNode::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = self.coord(q, axis) - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, k, best);
                if best.len() < k || diff * diff <= best[best.len() - 1] {
                    self.search(far, q, k, best);
                }
            }
        }
    }
}

fn knn_log_terms(points: &[f64], d: usize, k: usize) -> Vec<f64> {
    let tree = KdTree::new(points, d);
    let n = points.len() / d;
    let mut scratch = Vec::with_capacity(k + 1);
    (0..n)
        .map(|q| 0.5 * d as f64 * tree.kth_sq_distance(q, k, &mut scratch).ln())
        .collect()
}

/// Kozachenko-Leonenko: `ψ(N) − ψ(k) + ln V_d + (d/N) Σ ln ε_i`, where
/// `ε_i` is the distance from sample `i` to its `k`-th nearest neighbour.
/// Rows of `samples` are points.
pub fn knn_entropy(samples: &DMatrix<f64>, k: usize) -> Result<EntropyEstimate> {
    let (n, d) = samples.shape();
    if d == 0 {
        return Err(Error::Domain("k-NN entropy needs dimension >= 1".into()));
    }
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    if n < k + 1 || n < BATCHES {
        return Err(Error::InsufficientSamples {
            needed: (k + 1).max(BATCHES),
            got: n,
        });
    }
    let mut points: Vec<f64> = Vec::with_capacity(n * d);
    for row in samples.row_iter() {
        points.extend(row.iter());
    }
    let mut terms = knn_log_terms(&points, d, k);
    let mut jittered = false;
    if terms.iter().any(|t| !t.is_finite()) {
        // coincident points: separate them at 1e-12 of the data scale
        let scale = points.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        let mut rng = crate::rng::task_rng(0x6a17, 0);
        for p in points.iter_mut() {
            *p += 1e-12 * scale * rng.sample::<f64, _>(StandardNormal);
        }
        terms = knn_log_terms(&points, d, k);
        jittered = true;
    }
    let nf = n as f64;
    let mean = terms.iter().sum::<f64>() / nf;
    let value = digamma(nf) - digamma(k as f64) + ln_unit_ball_volume(d) + mean;

    let batch = n / BATCHES;
    let means: Vec<f64> = (0..BATCHES)
        .map(|b| {
            let end = if b + 1 == BATCHES { n } else { (b + 1) * batch };
            let slice = &terms[b * batch..end];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect();
    let grand = means.iter().sum::<f64>() / BATCHES as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    Ok(EntropyEstimate {
        value,
        std_error: (var / BATCHES as f64).sqrt(),
        method: EstimationMethod::Knn,
        n_samples: n,
        k_neighbors: k,
        jittered,
        high_dimension: d > KNN_MAX_DIM,
    })
}

// ---------------------------------------------------------------------------
// the functional and its check

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalF {
    /// `Σ d_i ĥ(X_i) − Σ c_j ĥ(A_j X)` with `SE = sqrt(Σ d_i² se_i² + Σ c_j² se_j²)`.
    pub total: EntropyEstimate,
    pub blocks: Vec<EntropyEstimate>,
    pub images: Vec<EntropyEstimate>,
}

/// Estimate `f(X)` for `X` drawn from `model`.
pub fn empirical_f<R: Rng + ?Sized>(
    datum: &BlepDatum,
    model: &SampleModel,
    n_samples: usize,
    k: usize,
    rng: &mut R,
) -> Result<EmpiricalF> {
    datum.ensure_valid()?;
    model.check_partition(&datum.partition)?;
    let x = sample(model, n_samples, rng);
    let partition = &datum.partition;

    let mut blocks = Vec::with_capacity(partition.k());
    for i in 0..partition.k() {
        let est = match exact_entropy(model, i) {
            Ok(v) => EntropyEstimate::exact(v),
            Err(Error::NoClosedForm(_)) => {
                let cols = x.columns(partition.offset(i), partition.size(i)).into_owned();
                knn_entropy(&cols, k)?
            }
            Err(e) => return Err(e),
        };
        blocks.push(est);
    }
    let mut images = Vec::with_capacity(datum.m());
    for a in &datum.maps {
        images.push(knn_entropy(&(&x * a.transpose()), k)?);
    }

    let mut value = 0.0;
    let mut var = 0.0;
    let mut any_knn = false;
    let mut jittered = false;
    let mut high = false;
    let terms = blocks
        .iter()
        .zip(&datum.d)
        .map(|(e, &w)| (e, w))
        .chain(images.iter().zip(&datum.c).map(|(e, &w)| (e, -w)));
    for (e, w) in terms {
        value += w * e.value;
        var += w * w * e.std_error * e.std_error;
        any_knn |= e.method == EstimationMethod::Knn;
        jittered |= e.jittered;
        high |= e.high_dimension;
    }
    let total = EntropyEstimate {
        value,
        std_error: var.sqrt(),
        method: if any_knn {
            EstimationMethod::Knn
        } else {
            EstimationMethod::ClosedForm
        },
        n_samples,
        k_neighbors: k,
        jittered,
        high_dimension: high,
    };
    Ok(EmpiricalF { total, blocks, images })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub model: SampleModel,
    pub empirical_f: EmpiricalF,
    pub mg_reference: f64,
    /// `f̂ − M_g`.
    pub margin: f64,
    pub z_score: f64,
    pub z_crit: f64,
    pub pass: bool,
}

/// One report per model; a model fails only when `f̂ − M_g > z_crit · SE`.
pub fn verify_inequality<R: Rng + ?Sized>(
    datum: &BlepDatum,
    models: &[SampleModel],
    mg: f64,
    n_samples: usize,
    k: usize,
    z_crit: f64,
    rng: &mut R,
) -> Result<Vec<VerificationReport>> {
    models
        .iter()
        .map(|model| {
            let ef = empirical_f(datum, model, n_samples, k, rng)?;
            let margin = ef.total.value - mg;
            let se = ef.total.std_error;
            let z_score = if se > 0.0 {
                margin / se
            } else if margin > 0.0 {
                f64::INFINITY
            } else if margin < 0.0 {
                f64::NEG_INFINITY
            } else {
                0.0
            };
            Ok(VerificationReport {
                model: model.clone(),
                pass: margin <= z_crit * se,
                empirical_f: ef,
                mg_reference: mg,
                margin,
                z_score,
                z_crit,
            })
        })
        .collect()
}

/// `½ log(2πe)`, the entropy of a standard normal coordinate.
pub const STANDARD_NORMAL_ENTROPY: f64 = 1.418_938_533_204_672_7;
