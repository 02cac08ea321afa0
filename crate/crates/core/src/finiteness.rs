//! Finite / infinite verdicts and split certificates.
//!
//! `M < ∞` exactly when the scaling condition `Σ d_i r_i = Σ c_j n_j` holds
//! and no product subspace has positive slack. Both failures come with
//! witnesses that can be rechecked from scratch. A finite verdict is only
//! issued when the subspace search ran to completion under its budget and
//! the Gaussian solver's escape-ray probes stayed bounded.
//!
//! Certificates split a finite datum along a critical subspace `U` into a
//! datum on `U` and one on `U^⊥`, recursively, down to one-dimensional or
//! single-map leaves whose constants are explicit.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::datum::{BlepDatum, Partition};
use crate::error::{Error, Result};
use crate::gauss::{self, BlockCovariance, RayDirection, RayOptions, SolverOptions};
use crate::linalg;
use crate::subspace::{
    self, candidate_subspaces, dimension_profiles, random_product_subspace, ProductSubspace, SearchBudget,
    SlackResult, IMAGE_RANK_TOL,
};
use crate::{CRITICAL_TOL, SCALING_TOL};

/// `Σ d_i r_i − Σ c_j n_j`.
pub fn scaling_residual(datum: &BlepDatum) -> f64 {
    let lhs: f64 = datum.d.iter().zip(datum.partition.blocks()).map(|(d, &r)| d * r as f64).sum();
    let rhs: f64 = datum.c.iter().zip(&datum.maps).map(|(c, a)| c * a.nrows() as f64).sum();
    lhs - rhs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Finite,
    Infinite,
    Unknown,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Finite => "Finite",
            Verdict::Infinite => "Infinite",
            Verdict::Unknown => "Unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// Nonzero `Σ d_i r_i − Σ c_j n_j`: the objective moves by
    /// `½ residual · log λ` under `X ↦ √λ X`.
    ScalingResidual(f64),
    /// A product subspace with `slack > 0`.
    ViolatingSubspace {
        subspace: ProductSubspace,
        slack: SlackResult,
    },
}

impl Witness {
    /// Recompute the violation from the datum alone.
    pub fn recheck(&self, datum: &BlepDatum) -> Result<bool> {
        Ok(match self {
            Witness::ScalingResidual(_) => scaling_residual(datum).abs() > SCALING_TOL,
            Witness::ViolatingSubspace { subspace, .. } => subspace::slack(datum, subspace)?.is_violating(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinitenessVerdict {
    pub status: Verdict,
    pub witness: Option<Witness>,
    pub certificate: Option<SplitTree>,
    pub notes: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinitenessOptions {
    pub budget: SearchBudget,
    /// Random product subspaces probed with escape rays from `Σ = I`.
    pub ray_probes: usize,
    pub ray: RayOptions,
    pub solver: SolverOptions,
}

impl Default for FinitenessOptions {
    fn default() -> Self {
        Self {
            budget: SearchBudget::default(),
            ray_probes: 16,
            ray: RayOptions::default(),
            solver: SolverOptions::default(),
        }
    }
}

impl FinitenessOptions {
    pub fn with_budget(budget: SearchBudget) -> Self {
        Self {
            budget,
            ..Self::default()
        }
    }
}

/// [`check_finiteness_with`] under default probe and solver settings.
pub fn check_finiteness<R: Rng + ?Sized>(datum: &BlepDatum, budget: &SearchBudget, rng: &mut R) -> Result<FinitenessVerdict> {
    check_finiteness_with(datum, &FinitenessOptions::with_budget(*budget), rng)
}

pub fn check_finiteness_with<R: Rng + ?Sized>(
    datum: &BlepDatum,
    opts: &FinitenessOptions,
    rng: &mut R,
) -> Result<FinitenessVerdict> {
    datum.ensure_valid()?;
    let residual = scaling_residual(datum);
    if residual.abs() > SCALING_TOL {
        return Ok(FinitenessVerdict {
            status: Verdict::Infinite,
            witness: Some(Witness::ScalingResidual(residual)),
            certificate: None,
            notes: format!("scaling residual {residual} is nonzero"),
        });
    }

    let candidates = candidate_subspaces(datum, &opts.budget, rng);
    let exhaustive = candidates.exhaustive();
    let mut best: Option<(ProductSubspace, SlackResult)> = None;
    let mut checked = 0usize;
    for cand in candidates {
        let Ok(s) = subspace::slack(datum, &cand.subspace) else {
            continue;
        };
        checked += 1;
        if s.is_violating() && best.as_ref().is_none_or(|(_, b)| s.slack > b.slack) {
            best = Some((cand.subspace, s));
        }
    }
    if let Some((v, s)) = best {
        let notes = format!("subspace with dims {:?} has slack {}", v.block_dims(), s.slack);
        return Ok(FinitenessVerdict {
            status: Verdict::Infinite,
            witness: Some(Witness::ViolatingSubspace { subspace: v, slack: s }),
            certificate: None,
            notes,
        });
    }

    // escape rays along random product subspaces
    let partition = &datum.partition;
    let identity = BlockCovariance::identity(partition);
    let profiles = dimension_profiles(partition, opts.budget.max_profiles);
    for _ in 0..opts.ray_probes {
        if profiles.is_empty() {
            break;
        }
        let profile = &profiles[rng.random_range(0..profiles.len())];
        let v = random_product_subspace(partition, profile, rng);
        let probe = gauss::escape_ray(datum, &identity, &v, RayDirection::Up, &opts.ray)?;
        if probe.escape {
            return Ok(escape_verdict(datum, v, "random escape ray"));
        }
    }

    let solve = gauss::solve_mg(datum, &opts.solver)?;
    if solve.unbounded {
        let v = solve.escape_subspace.unwrap_or_else(|| ProductSubspace::full(partition));
        return Ok(escape_verdict(datum, v, "solver divergence"));
    }

    if !exhaustive {
        return Ok(FinitenessVerdict {
            status: Verdict::Unknown,
            witness: None,
            certificate: None,
            notes: format!(
                "no violation among {checked} candidates, but the deterministic families were truncated by the budget"
            ),
        });
    }
    Ok(FinitenessVerdict {
        status: Verdict::Finite,
        witness: None,
        certificate: None,
        notes: format!(
            "scaling holds, {checked} candidate subspaces have slack <= {CRITICAL_TOL}, M_g ~ {:.6} ({} starts, converged: {})",
            solve.mg_value, solve.starts_used, solve.converged
        ),
    })
}

fn escape_verdict(datum: &BlepDatum, v: ProductSubspace, source: &str) -> FinitenessVerdict {
    if let Ok(s) = subspace::slack(datum, &v) {
        if s.is_violating() {
            let notes = format!("{source} along dims {:?} with slack {}", v.block_dims(), s.slack);
            return FinitenessVerdict {
                status: Verdict::Infinite,
                witness: Some(Witness::ViolatingSubspace { subspace: v, slack: s }),
                certificate: None,
                notes,
            };
        }
    }
    FinitenessVerdict {
        status: Verdict::Unknown,
        witness: None,
        certificate: None,
        notes: format!(
            "{source} along dims {:?} grows without a violating subspace in hand",
            v.block_dims()
        ),
    }
}

// ---------------------------------------------------------------------------
// splitting

/// Data on `U` and `U^⊥` obtained from a critical `U`, with the bookkeeping
/// needed to put `A_j x` back together.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitData {
    pub u: ProductSubspace,
    pub u_perp: ProductSubspace,
    pub on_u: BlepDatum,
    pub on_perp: BlepDatum,
    /// Per parent map: orthonormal basis `Q_j` of `A_j U`.
    pub image_bases: Vec<DMatrix<f64>>,
    /// Per parent map: orthonormal basis of `(A_j U)^⊥`.
    pub image_complements: Vec<DMatrix<f64>>,
    /// Per parent map: `Q_jᵀ A_j` restricted to `U`.
    pub maps_on_u: Vec<DMatrix<f64>>,
    /// Per parent map: `(A_j U)^⊥`-component of `A_j` restricted to `U^⊥`.
    pub maps_on_perp: Vec<DMatrix<f64>>,
    /// Per parent map: cross term `Γ_j = Q_jᵀ A_j` restricted to `U^⊥`.
    pub gamma: Vec<DMatrix<f64>>,
    /// Parent block `i` → block index in `on_u`, `None` when `dim U_i = 0`.
    pub u_blocks: Vec<Option<usize>>,
    pub perp_blocks: Vec<Option<usize>>,
    /// Parent map `j` → map index in `on_u`, `None` when `dim A_j U = 0`.
    pub u_maps: Vec<Option<usize>>,
    pub perp_maps: Vec<Option<usize>>,
}

impl SplitData {
    /// `Q_j Ã_j (E_Uᵀ x) + Q_j Γ_j (E_⊥ᵀ x) + Q_j^⊥ Ã̃_j (E_⊥ᵀ x)`.
    pub fn reconstruct(&self, partition: &Partition, j: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        let eu = self.u.embed(partition)?;
        let ep = self.u_perp.embed(partition)?;
        let xu = eu.transpose() * x;
        let xp = ep.transpose() * x;
        let q = &self.image_bases[j];
        let qp = &self.image_complements[j];
        Ok(q * (&self.maps_on_u[j] * &xu) + q * (&self.gamma[j] * &xp) + qp * (&self.maps_on_perp[j] * &xp))
    }
}

/// Child datum with the parent-to-child block and map index maps.
type Child = (BlepDatum, Vec<Option<usize>>, Vec<Option<usize>>);

fn child_datum(parent: &BlepDatum, sub: &ProductSubspace, maps: &[DMatrix<f64>]) -> Result<Child> {
    let mut blocks = Vec::new();
    let mut d = Vec::new();
    let mut block_index = Vec::with_capacity(parent.k());
    for (t, &di) in sub.block_dims().iter().zip(&parent.d) {
        if *t == 0 {
            block_index.push(None);
        } else {
            block_index.push(Some(blocks.len()));
            blocks.push(*t);
            d.push(di);
        }
    }
    let mut kept = Vec::new();
    let mut c = Vec::new();
    let mut map_index = Vec::with_capacity(maps.len());
    for (a, &cj) in maps.iter().zip(&parent.c) {
        if a.nrows() == 0 {
            map_index.push(None);
        } else {
            map_index.push(Some(kept.len()));
            kept.push(a.clone());
            c.push(cj);
        }
    }
    Ok((BlepDatum::new(Partition::new(blocks)?, kept, c, d), block_index, map_index))
}

/// Split `datum` along a critical proper subspace `u`.
pub fn split_datum(datum: &BlepDatum, u: &ProductSubspace) -> Result<SplitData> {
    let partition = &datum.partition;
    u.check_partition(partition)?;
    let n = partition.n();
    let dim = u.dim();
    if dim == 0 || dim >= n {
        return Err(Error::TrivialSubspace { dim, n });
    }
    let s = subspace::slack(datum, u)?;
    if !s.is_critical() {
        return Err(Error::NotCritical { slack: s.slack });
    }
    let u_perp = u.complement();
    let eu = u.embed(partition)?;
    let ep = u_perp.embed(partition)?;

    let mut image_bases = Vec::new();
    let mut image_complements = Vec::new();
    let mut maps_on_u = Vec::new();
    let mut maps_on_perp = Vec::new();
    let mut gamma = Vec::new();
    for a in &datum.maps {
        let tol = IMAGE_RANK_TOL * linalg::max_singular_value(a);
        let q = linalg::orth(&(a * &eu), tol);
        let qp = linalg::orth_complement(&q);
        maps_on_u.push(q.transpose() * a * &eu);
        gamma.push(q.transpose() * a * &ep);
        maps_on_perp.push(qp.transpose() * a * &ep);
        image_bases.push(q);
        image_complements.push(qp);
    }
    let (on_u, u_blocks, u_maps) = child_datum(datum, u, &maps_on_u)?;
    let (on_perp, perp_blocks, perp_maps) = child_datum(datum, &u_perp, &maps_on_perp)?;
    Ok(SplitData {
        u: u.clone(),
        u_perp,
        on_u,
        on_perp,
        image_bases,
        image_complements,
        maps_on_u,
        maps_on_perp,
        gamma,
        u_blocks,
        perp_blocks,
        u_maps,
        perp_maps,
    })
}

// ---------------------------------------------------------------------------
// certificates

#[derive(Debug, Clone, PartialEq)]
pub enum Leaf {
    /// `n = 1`: `M = −Σ c_j log|A_j|`.
    OneDimensional { mg: f64 },
    /// `m = 1` with square `A_1`: `M = −c_1 log|det A_1|`.
    SingleMap { mg: f64 },
    /// No maps left; every block exponent must vanish and `M = 0`.
    NoMaps { mg: f64 },
    /// No proper critical subspace among the candidates.
    Unsplit,
}

impl Leaf {
    pub fn mg(&self) -> Option<f64> {
        match *self {
            Leaf::OneDimensional { mg } | Leaf::SingleMap { mg } | Leaf::NoMaps { mg } => Some(mg),
            Leaf::Unsplit => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitTree {
    pub datum: BlepDatum,
    pub node: SplitNode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitNode {
    Leaf(Leaf),
    Split {
        split: Box<SplitData>,
        on_u: Box<SplitTree>,
        on_perp: Box<SplitTree>,
    },
}

impl SplitTree {
    pub fn is_leaf(&self) -> bool {
        matches!(self.node, SplitNode::Leaf(_))
    }

    /// Leaves in depth-first order, `U` side first.
    pub fn leaves(&self) -> Vec<(&BlepDatum, &Leaf)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<(&'a BlepDatum, &'a Leaf)>) {
        match &self.node {
            SplitNode::Leaf(l) => out.push((&self.datum, l)),
            SplitNode::Split { on_u, on_perp, .. } => {
                on_u.collect_leaves(out);
                on_perp.collect_leaves(out);
            }
        }
    }

    /// Sum of the leaf constants, an upper bound on `M` by subadditivity;
    /// `None` if some leaf is unsplit.
    pub fn bound(&self) -> Option<f64> {
        self.leaves().iter().map(|(_, l)| l.mg()).sum()
    }

    pub fn depth(&self) -> usize {
        match &self.node {
            SplitNode::Leaf(_) => 0,
            SplitNode::Split { on_u, on_perp, .. } => 1 + on_u.depth().max(on_perp.depth()),
        }
    }
}

/// The proper critical candidate of largest dimension (earliest on ties).
pub fn find_critical_subspace<R: Rng + ?Sized>(
    datum: &BlepDatum,
    budget: &SearchBudget,
    rng: &mut R,
) -> Option<ProductSubspace> {
    let n = datum.n();
    let mut best: Option<ProductSubspace> = None;
    for cand in candidate_subspaces(datum, budget, rng) {
        let dim = cand.subspace.dim();
        if dim == 0 || dim >= n || best.as_ref().is_some_and(|b| b.dim() >= dim) {
            continue;
        }
        if subspace::slack(datum, &cand.subspace).is_ok_and(|s| s.is_critical()) {
            best = Some(cand.subspace);
        }
    }
    best
}

fn build<R: Rng + ?Sized>(datum: BlepDatum, budget: &SearchBudget, rng: &mut R) -> Result<SplitTree> {
    if datum.m() == 0 {
        if datum.d.iter().any(|&d| d != 0.0) {
            return Err(Error::NotFinite("mapless node with nonzero block exponents".into()));
        }
        return Ok(SplitTree {
            datum,
            node: SplitNode::Leaf(Leaf::NoMaps { mg: 0.0 }),
        });
    }
    if datum.n() == 1 {
        let mg = -datum
            .maps
            .iter()
            .zip(&datum.c)
            .map(|(a, &c)| if c == 0.0 { 0.0 } else { c * a[(0, 0)].abs().ln() })
            .sum::<f64>();
        return Ok(SplitTree {
            datum,
            node: SplitNode::Leaf(Leaf::OneDimensional { mg }),
        });
    }
    if datum.m() == 1 && datum.maps[0].is_square() {
        let c = datum.c[0];
        let mg = if c == 0.0 {
            0.0
        } else {
            -c * datum.maps[0].determinant().abs().ln()
        };
        return Ok(SplitTree {
            datum,
            node: SplitNode::Leaf(Leaf::SingleMap { mg }),
        });
    }
    let Some(u) = find_critical_subspace(&datum, budget, rng) else {
        return Ok(SplitTree {
            datum,
            node: SplitNode::Leaf(Leaf::Unsplit),
        });
    };
    let split = split_datum(&datum, &u)?;
    let on_u = build(split.on_u.clone(), budget, rng)?;
    let on_perp = build(split.on_perp.clone(), budget, rng)?;
    Ok(SplitTree {
        datum,
        node: SplitNode::Split {
            split: Box::new(split),
            on_u: Box::new(on_u),
            on_perp: Box::new(on_perp),
        },
    })
}

/// Recursive split certificate for a datum that [`check_finiteness`] judges finite.
pub fn certify<R: Rng + ?Sized>(datum: &BlepDatum, budget: &SearchBudget, rng: &mut R) -> Result<SplitTree> {
    let verdict = check_finiteness(datum, budget, rng)?;
    if verdict.status != Verdict::Finite {
        return Err(Error::NotFinite(format!("{}: {}", verdict.status.as_str(), verdict.notes)));
    }
    build(datum.clone(), budget, rng)
}

/// [`certify`] without re-running the finiteness check.
pub fn certify_unchecked<R: Rng + ?Sized>(datum: &BlepDatum, budget: &SearchBudget, rng: &mut R) -> Result<SplitTree> {
    datum.ensure_valid()?;
    build(datum.clone(), budget, rng)
}
