//! Product-form subspaces `V = V_1 × … × V_k` and the criticality slack
//!
//! ```text
//! slack(V) = Σ_i d_i dim(V_i) − Σ_j c_j dim(A_j V)
//! ```
//!
//! A positive slack anywhere makes the optimal constant infinite; zero slack
//! marks a critical subspace along which the datum can be split.
//!
//! The candidate search is sound but incomplete: a returned violating
//! subspace is a certified witness, an empty search proves nothing.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::datum::{BlepDatum, Partition};
use crate::error::{Error, Result};
use crate::linalg;
use crate::CRITICAL_TOL;

/// Relative threshold (against `σ_max(A_j)`) for ranks of images `A_j V`.
pub const IMAGE_RANK_TOL: f64 = 1e-9;

/// Absolute threshold for ranks of block projections of orthonormal bases.
const BASIS_TOL: f64 = 1e-9;

/// Per-block orthonormal bases; block `i` is `r_i × t_i` (`t_i = 0` allowed).
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSubspace {
    bases: Vec<DMatrix<f64>>,
}

impl ProductSubspace {
    /// Wrap bases that already have orthonormal columns (checked to 1e-10).
    pub fn new(bases: Vec<DMatrix<f64>>) -> Result<Self> {
        for b in &bases {
            if b.ncols() > b.nrows() {
                return Err(Error::DimensionMismatch {
                    what: "product subspace block",
                    expected: b.nrows(),
                    found: b.ncols(),
                });
            }
            let defect = linalg::orthonormality_defect(b);
            if defect > 1e-10 {
                return Err(Error::NotOrthonormal {
                    what: "product subspace basis",
                    deviation: defect,
                });
            }
        }
        Ok(Self { bases })
    }

    /// Orthonormalize arbitrary per-block spanning sets.
    pub fn from_spans(spans: Vec<DMatrix<f64>>) -> Self {
        Self {
            bases: spans.iter().map(|s| linalg::orth(s, BASIS_TOL)).collect(),
        }
    }

    pub fn zero(partition: &Partition) -> Self {
        Self {
            bases: partition.blocks().iter().map(|&r| DMatrix::zeros(r, 0)).collect(),
        }
    }

    pub fn full(partition: &Partition) -> Self {
        Self {
            bases: partition.blocks().iter().map(|&r| DMatrix::identity(r, r)).collect(),
        }
    }

    /// Coordinate subspace selecting the set bits of `mask` (bit `p` = axis `p` of `R^n`).
    pub fn coordinate(partition: &Partition, mask: u64) -> Self {
        let mut bases = Vec::with_capacity(partition.k());
        for (i, &r) in partition.blocks().iter().enumerate() {
            let off = partition.offset(i);
            let axes: Vec<usize> = (0..r).filter(|&p| mask >> (off + p) & 1 == 1).collect();
            let mut b = DMatrix::zeros(r, axes.len());
            for (col, &p) in axes.iter().enumerate() {
                b[(p, col)] = 1.0;
            }
            bases.push(b);
        }
        Self { bases }
    }

    pub fn bases(&self) -> &[DMatrix<f64>] {
        &self.bases
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.ncols()).collect()
    }

    pub fn dim(&self) -> usize {
        self.bases.iter().map(|b| b.ncols()).sum()
    }

    pub fn check_partition(&self, partition: &Partition) -> Result<()> {
        if self.bases.len() != partition.k() {
            return Err(Error::DimensionMismatch {
                what: "number of subspace blocks",
                expected: partition.k(),
                found: self.bases.len(),
            });
        }
        for (b, &r) in self.bases.iter().zip(partition.blocks()) {
            if b.nrows() != r {
                return Err(Error::DimensionMismatch {
                    what: "subspace block size",
                    expected: r,
                    found: b.nrows(),
                });
            }
        }
        Ok(())
    }

    /// Per-block orthogonal complement `V_1^⊥ × … × V_k^⊥`.
    pub fn complement(&self) -> Self {
        Self {
            bases: self.bases.iter().map(linalg::orth_complement).collect(),
        }
    }

    /// Orthonormal `n × dim(V)` basis of `V` inside `R^n`.
    pub fn embed(&self, partition: &Partition) -> Result<DMatrix<f64>> {
        self.check_partition(partition)?;
        Ok(linalg::block_diag(&self.bases))
    }

    /// Orthogonal projector onto block `i`'s factor, `B_i B_iᵀ`.
    pub fn block_projector(&self, i: usize) -> DMatrix<f64> {
        &self.bases[i] * self.bases[i].transpose()
    }
}

/// `dim(A V)`: numerical rank of `A · embed(V)`.
pub fn dim_image(a: &DMatrix<f64>, v: &ProductSubspace, partition: &Partition) -> Result<usize> {
    if a.ncols() != partition.n() {
        return Err(Error::DimensionMismatch {
            what: "map columns",
            expected: partition.n(),
            found: a.ncols(),
        });
    }
    let e = v.embed(partition)?;
    if e.ncols() == 0 || a.nrows() == 0 {
        return Ok(0);
    }
    let tol = IMAGE_RANK_TOL * linalg::max_singular_value(a);
    Ok(linalg::rank(&(a * e), tol))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlackResult {
    /// `Σ d_i t_i − Σ c_j dim(A_j V)`.
    pub slack: f64,
    pub per_map_dims: Vec<usize>,
    pub per_block_dims: Vec<usize>,
}

impl SlackResult {
    pub fn recompute(&self, datum: &BlepDatum) -> f64 {
        slack_from_dims(datum, &self.per_block_dims, &self.per_map_dims)
    }

    pub fn is_critical(&self) -> bool {
        self.slack.abs() <= CRITICAL_TOL
    }

    pub fn is_violating(&self) -> bool {
        self.slack > CRITICAL_TOL
    }
}

fn slack_from_dims(datum: &BlepDatum, block_dims: &[usize], map_dims: &[usize]) -> f64 {
    let lhs: f64 = datum.d.iter().zip(block_dims).map(|(d, &t)| d * t as f64).sum();
    let rhs: f64 = datum.c.iter().zip(map_dims).map(|(c, &s)| c * s as f64).sum();
    lhs - rhs
}

pub fn slack(datum: &BlepDatum, v: &ProductSubspace) -> Result<SlackResult> {
    v.check_partition(&datum.partition)?;
    let per_map_dims = datum
        .maps
        .iter()
        .map(|a| dim_image(a, v, &datum.partition))
        .collect::<Result<Vec<_>>>()?;
    let per_block_dims = v.block_dims();
    Ok(SlackResult {
        slack: slack_from_dims(datum, &per_block_dims, &per_map_dims),
        per_map_dims,
        per_block_dims,
    })
}

/// How much of the subspace lattice the search is allowed to touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    /// Cap on coordinate subspaces and on random dimension profiles.
    pub max_profiles: usize,
    /// Random product subspaces drawn per dimension profile.
    pub random_per_profile: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            max_profiles: 4096,
            random_per_profile: 4,
        }
    }
}

/// Which family a candidate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateSource {
    Coordinate,
    KernelHull(usize),
    KernelCore(usize),
    KernelIntersection(usize, usize),
    Complement,
    Random,
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub subspace: ProductSubspace,
    pub source: CandidateSource,
}

/// Ordered candidate list plus whether the deterministic families were
/// enumerated in full under the budget.
#[derive(Debug, Clone)]
pub struct Candidates {
    items: alloc::vec::IntoIter<Candidate>,
    exhaustive: bool,
}

impl Candidates {
    /// `false` when the coordinate family or the profile list was truncated.
    pub fn exhaustive(&self) -> bool {
        self.exhaustive
    }
}

impl Iterator for Candidates {
    type Item = Candidate;

    fn next(&mut self) -> Option<Candidate> {
        self.items.next()
    }
}

/// Candidates in order: coordinate-axis subspaces, kernel-derived
/// subspaces (hulls, cores, pairwise hull intersections and their
/// complements), then random product subspaces per dimension profile.
pub fn candidate_subspaces<R: Rng + ?Sized>(
    datum: &BlepDatum,
    budget: &SearchBudget,
    rng: &mut R,
) -> Candidates {
    let partition = &datum.partition;
    let n = partition.n();
    let mut items = Vec::new();
    let mut exhaustive = true;

    // (a) coordinate axes
    let total: u128 = 1u128 << n.min(127);
    let take = (budget.max_profiles as u128).min(total);
    if take < total || n >= 64 {
        exhaustive = false;
    }
    for mask in 0..(take as u64) {
        items.push(Candidate {
            subspace: ProductSubspace::coordinate(partition, mask),
            source: CandidateSource::Coordinate,
        });
    }

    // (b) kernel-derived
    let mut hulls: Vec<(usize, ProductSubspace)> = Vec::new();
    let mut derived = Vec::new();
    for (j, a) in datum.maps.iter().enumerate() {
        if a.ncols() != n {
            continue;
        }
        let ker = linalg::null_space(a, linalg::rank_tol(a));
        if ker.ncols() == 0 {
            continue;
        }
        let hull = ProductSubspace::from_spans(
            (0..partition.k())
                .map(|i| linalg::row_block(&ker, partition.offset(i), partition.size(i)))
                .collect(),
        );
        let core = ProductSubspace {
            bases: (0..partition.k())
                .map(|i| {
                    let cols = linalg::col_block(a, partition.offset(i), partition.size(i));
                    linalg::null_space(&cols, linalg::rank_tol(a))
                })
                .collect(),
        };
        hulls.push((j, hull.clone()));
        derived.push(Candidate {
            subspace: hull,
            source: CandidateSource::KernelHull(j),
        });
        if core.dim() > 0 {
            derived.push(Candidate {
                subspace: core,
                source: CandidateSource::KernelCore(j),
            });
        }
    }
    for x in 0..hulls.len() {
        for y in (x + 1)..hulls.len() {
            let (j, ref hj) = hulls[x];
            let (l, ref hl) = hulls[y];
            let inter = ProductSubspace {
                bases: hj
                    .bases
                    .iter()
                    .zip(&hl.bases)
                    .map(|(s, t)| linalg::intersect(s, t, BASIS_TOL))
                    .collect(),
            };
            if inter.dim() > 0 {
                derived.push(Candidate {
                    subspace: inter,
                    source: CandidateSource::KernelIntersection(j, l),
                });
            }
        }
    }
    let complements: Vec<Candidate> = derived
        .iter()
        .map(|c| Candidate {
            subspace: c.subspace.complement(),
            source: CandidateSource::Complement,
        })
        .filter(|c| c.subspace.dim() > 0)
        .collect();
    items.extend(derived);
    items.extend(complements);

    // (c) random per profile
    if budget.random_per_profile > 0 {
        let profiles = dimension_profiles(partition, budget.max_profiles);
        if profiles.len() < total_profiles(partition).saturating_sub(1) {
            exhaustive = false;
        }
        for profile in profiles {
            for _ in 0..budget.random_per_profile {
                items.push(Candidate {
                    subspace: random_product_subspace(partition, &profile, rng),
                    source: CandidateSource::Random,
                });
            }
        }
    }

    Candidates {
        items: items.into_iter(),
        exhaustive,
    }
}

fn total_profiles(partition: &Partition) -> usize {
    partition
        .blocks()
        .iter()
        .fold(1usize, |acc, &r| acc.saturating_mul(r + 1))
}

/// Nonzero `(t_1..t_k)` with `0 <= t_i <= r_i`, first `cap` in odometer order.
pub fn dimension_profiles(partition: &Partition, cap: usize) -> Vec<Vec<usize>> {
    let blocks = partition.blocks();
    let mut out = Vec::new();
    let mut t = vec![0usize; blocks.len()];
    loop {
        // advance odometer
        let mut i = 0;
        loop {
            if i == blocks.len() {
                return out;
            }
            if t[i] < blocks[i] {
                t[i] += 1;
                break;
            }
            t[i] = 0;
            i += 1;
        }
        if out.len() >= cap {
            return out;
        }
        out.push(t.clone());
    }
}

/// Haar-random product subspace with the given per-block dimensions
/// (per-block QR of a standard normal matrix).
pub fn random_product_subspace<R: Rng + ?Sized>(
    partition: &Partition,
    profile: &[usize],
    rng: &mut R,
) -> ProductSubspace {
    let bases = partition
        .blocks()
        .iter()
        .zip(profile)
        .map(|(&r, &t)| {
            if t == 0 {
                DMatrix::zeros(r, 0)
            } else if t == r {
                DMatrix::identity(r, r)
            } else {
                let g = DMatrix::from_fn(r, t, |_, _| rng.sample::<f64, _>(StandardNormal));
                g.qr().q().columns(0, t).into_owned()
            }
        })
        .collect();
    ProductSubspace { bases }
}

/// The candidate with the largest slack, when that slack exceeds the
/// criticality tolerance. Ties keep the earliest candidate.
pub fn find_violating_subspace<R: Rng + ?Sized>(
    datum: &BlepDatum,
    budget: &SearchBudget,
    rng: &mut R,
) -> Option<(ProductSubspace, SlackResult)> {
    let mut best: Option<(ProductSubspace, SlackResult)> = None;
    for cand in candidate_subspaces(datum, budget, rng) {
        let Ok(s) = slack(datum, &cand.subspace) else {
            continue;
        };
        if s.is_violating() && best.as_ref().is_none_or(|(_, b)| s.slack > b.slack) {
            best = Some((cand.subspace, s));
        }
    }
    best
}

/// Human-readable summary like `(dims 1, 1)`.
pub fn describe(v: &ProductSubspace) -> alloc::string::String {
    format!("{:?}", v.block_dims())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::{make_epi_datum, make_section6_datum};
    use crate::rng::task_rng;

    fn x1_plus_x2_times_y() -> ProductSubspace {
        let s = 0.5f64.sqrt();
        ProductSubspace::new(vec![
            DMatrix::from_row_slice(2, 1, &[s, s]),
            DMatrix::identity(1, 1),
        ])
        .unwrap()
    }

    #[test]
    fn embed_cases() {
        let p = Partition::new(vec![2, 1]).unwrap();
        let v = ProductSubspace::coordinate(&p, 0b001);
        let e = v.embed(&p).unwrap();
        assert_eq!(e.shape(), (3, 1));
        assert_eq!(e.column(0).iter().cloned().collect::<Vec<_>>(), vec![1.0, 0.0, 0.0]);
        assert_eq!(ProductSubspace::full(&p).embed(&p).unwrap(), DMatrix::identity(3, 3));
        assert_eq!(ProductSubspace::zero(&p).embed(&p).unwrap().shape(), (3, 0));
        let wrong = Partition::new(vec![1, 2]).unwrap();
        assert!(v.embed(&wrong).is_err());
    }

    #[test]
    fn image_dims_section6() {
        let d = make_section6_datum(1.0, 1.0, 0.5, 0.5).unwrap();
        let p = &d.partition;
        let a1 = &d.maps[0];
        assert_eq!(dim_image(a1, &ProductSubspace::coordinate(p, 0b001), p).unwrap(), 1);
        assert_eq!(dim_image(a1, &ProductSubspace::full(p), p).unwrap(), 2);
        // A_1 (1,1,0)/√2 ∥ A_1 (0,0,1): rank of the 2×2 image matrix is 1
        let v = x1_plus_x2_times_y();
        let img = a1 * v.embed(p).unwrap();
        assert!(img.determinant().abs() < 1e-15);
        assert_eq!(dim_image(a1, &v, p).unwrap(), 1);
    }

    #[test]
    fn slack_examples() {
        let d = make_section6_datum(1.0, 1.0, 0.5, 0.5).unwrap();
        let s = slack(&d, &x1_plus_x2_times_y()).unwrap();
        assert!(s.slack.abs() < 1e-12);
        assert!(s.is_critical());
        assert_eq!(s.per_map_dims, vec![1, 1, 1]);

        let epi = make_epi_datum(0.5, 1).unwrap();
        let s = slack(&epi, &ProductSubspace::coordinate(&epi.partition, 0b01)).unwrap();
        assert!((s.slack + 0.5).abs() < 1e-15);
        let s = slack(&epi, &ProductSubspace::zero(&epi.partition)).unwrap();
        assert_eq!(s.slack, 0.0);
    }

    #[test]
    fn coordinate_family_count() {
        let d = make_section6_datum(1.0, 1.0, 0.5, 0.5).unwrap();
        let budget = SearchBudget {
            max_profiles: 4096,
            random_per_profile: 0,
        };
        let cands: Vec<_> = candidate_subspaces(&d, &budget, &mut task_rng(0, 0)).collect();
        let coords = cands
            .iter()
            .filter(|c| c.source == CandidateSource::Coordinate)
            .count();
        assert_eq!(coords, 8);
        assert!(cands.iter().all(|c| c.source != CandidateSource::Random));
    }

    #[test]
    fn kernel_hull_of_section6() {
        let d = make_section6_datum(1.0, 1.0, 0.5, 0.5).unwrap();
        let budget = SearchBudget {
            max_profiles: 4096,
            random_per_profile: 0,
        };
        let target = x1_plus_x2_times_y();
        let hull = candidate_subspaces(&d, &budget, &mut task_rng(0, 0))
            .find(|c| c.source == CandidateSource::KernelHull(0))
            .unwrap()
            .subspace;
        assert_eq!(hull.block_dims(), vec![1, 1]);
        // same span as (span{(1,1)/√2}, R)
        let diff = hull.block_projector(0) - target.block_projector(0);
        assert!(diff.norm() < 1e-12);
    }

    #[test]
    fn violating_subspace_found_when_alpha_above_threshold() {
        let eps = 0.01;
        let d = make_section6_datum(1.5 + eps, 0.0, 0.5, 0.5).unwrap();
        let (v, s) =
            find_violating_subspace(&d, &SearchBudget::default(), &mut task_rng(1, 0)).unwrap();
        assert_eq!(v.block_dims(), vec![2, 0]);
        assert!((s.slack - 2.0 * eps).abs() < 1e-12);
    }

    #[test]
    fn kernel_aligned_block_is_found() {
        // A_1 kills block 1 entirely; c_1 small.
        let d = BlepDatum::new(
            Partition::new(vec![1, 1]).unwrap(),
            vec![DMatrix::from_row_slice(1, 2, &[0.0, 1.0])],
            vec![0.5],
            vec![0.25, 0.25],
        );
        let (v, s) =
            find_violating_subspace(&d, &SearchBudget::default(), &mut task_rng(2, 0)).unwrap();
        assert!(s.slack > CRITICAL_TOL);
        assert_eq!(v.block_dims(), vec![1, 0]);
        assert_eq!(slack(&d, &v).unwrap().slack, 0.25);
    }

    #[test]
    fn epi_has_no_violating_subspace() {
        let d = make_epi_datum(0.5, 1).unwrap();
        assert!(find_violating_subspace(&d, &SearchBudget::default(), &mut task_rng(3, 0)).is_none());
    }

    #[test]
    fn profiles_enumerate_all_nonzero() {
        let p = Partition::new(vec![2, 1]).unwrap();
        let profiles = dimension_profiles(&p, 100);
        assert_eq!(profiles.len(), 3 * 2 - 1);
        assert_eq!(dimension_profiles(&p, 2).len(), 2);
    }
}
