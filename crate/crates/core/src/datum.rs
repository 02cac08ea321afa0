//! The datum `(A, c, r, d)`: model, validation and the named special cases.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

/// Ordered block sizes `r_1..r_k` of a k-partition of `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<usize>,
}

impl Partition {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidPartition("needs at least one block".into()));
        }
        if let Some(i) = blocks.iter().position(|&r| r == 0) {
            return Err(Error::InvalidPartition(format!("block {i} has size 0")));
        }
        Ok(Self { blocks })
    }

    /// `n` singleton blocks.
    pub fn singletons(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn n(&self) -> usize {
        self.blocks.iter().sum()
    }

    /// Offset of block `i` inside `R^n`.
    pub fn offset(&self, i: usize) -> usize {
        self.blocks[..i].iter().sum()
    }

    pub fn size(&self, i: usize) -> usize {
        self.blocks[i]
    }
}

/// A BL-EPI datum.
///
/// Construction does not check the mathematical invariants: data read from
/// files may be broken, and [`BlepDatum::validate`] reports every problem
/// instead of failing on the first.
#[derive(Debug, Clone, PartialEq)]
pub struct BlepDatum {
    pub partition: Partition,
    /// `A_j`, each `n_j × n`.
    pub maps: Vec<DMatrix<f64>>,
    /// `c_j`, one per map.
    pub c: Vec<f64>,
    /// `d_i`, one per block.
    pub d: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IssueCode {
    NoMaps,
    DimensionMismatch,
    ExponentCount,
    NegativeExponent,
    NonFinite,
    ZeroDimImage,
    Surjectivity,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::NoMaps => "NO_MAPS",
            IssueCode::DimensionMismatch => "DIMENSION_MISMATCH",
            IssueCode::ExponentCount => "EXPONENT_COUNT",
            IssueCode::NegativeExponent => "NEGATIVE_EXPONENT",
            IssueCode::NonFinite => "NON_FINITE",
            IssueCode::ZeroDimImage => "ZERO_DIM_IMAGE",
            IssueCode::Surjectivity => "SURJECTIVITY",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where in the datum an issue sits. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Datum,
    Map(usize),
    C(usize),
    D(usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Datum => f.write_str("datum"),
            Location::Map(j) => write!(f, "maps[{j}]"),
            Location::C(j) => write!(f, "c[{j}]"),
            Location::D(i) => write!(f, "d[{i}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationIssue {
    pub code: IssueCode,
    pub message: String,
    pub location: Location,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has(&self, code: IssueCode) -> bool {
        self.issues.iter().any(|i| i.code == code)
    }

    fn push(&mut self, code: IssueCode, location: Location, message: String) {
        self.issues.push(ValidationIssue {
            code,
            message,
            location,
        });
    }
}

impl BlepDatum {
    pub fn new(partition: Partition, maps: Vec<DMatrix<f64>>, c: Vec<f64>, d: Vec<f64>) -> Self {
        Self {
            partition,
            maps,
            c,
            d,
        }
    }

    pub fn n(&self) -> usize {
        self.partition.n()
    }

    pub fn k(&self) -> usize {
        self.partition.k()
    }

    pub fn m(&self) -> usize {
        self.maps.len()
    }

    /// Image dimensions `n_j`.
    pub fn image_dims(&self) -> Vec<usize> {
        self.maps.iter().map(|a| a.nrows()).collect()
    }

    /// Report every violated invariant. Pure: same datum, same report.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let n = self.n();
        if self.maps.is_empty() {
            report.push(IssueCode::NoMaps, Location::Datum, "datum has no linear maps".into());
        }
        if self.c.len() != self.maps.len() {
            report.push(
                IssueCode::ExponentCount,
                Location::Datum,
                format!("{} maps but {} c exponents", self.maps.len(), self.c.len()),
            );
        }
        if self.d.len() != self.k() {
            report.push(
                IssueCode::ExponentCount,
                Location::Datum,
                format!("{} blocks but {} d exponents", self.k(), self.d.len()),
            );
        }
        for (j, &cj) in self.c.iter().enumerate() {
            if !cj.is_finite() {
                report.push(IssueCode::NonFinite, Location::C(j), format!("c[{j}] = {cj}"));
            } else if cj < 0.0 {
                report.push(
                    IssueCode::NegativeExponent,
                    Location::C(j),
                    format!("c[{j}] = {cj} is negative"),
                );
            }
        }
        for (i, &di) in self.d.iter().enumerate() {
            if !di.is_finite() {
                report.push(IssueCode::NonFinite, Location::D(i), format!("d[{i}] = {di}"));
            } else if di < 0.0 {
                report.push(
                    IssueCode::NegativeExponent,
                    Location::D(i),
                    format!("d[{i}] = {di} is negative"),
                );
            }
        }
        for (j, a) in self.maps.iter().enumerate() {
            if a.ncols() != n {
                report.push(
                    IssueCode::DimensionMismatch,
                    Location::Map(j),
                    format!("map {j} has {} columns, partition sums to {n}", a.ncols()),
                );
                continue;
            }
            if a.nrows() == 0 {
                report.push(
                    IssueCode::ZeroDimImage,
                    Location::Map(j),
                    format!("map {j} has a 0-dimensional image"),
                );
                continue;
            }
            if a.iter().any(|x| !x.is_finite()) {
                report.push(
                    IssueCode::NonFinite,
                    Location::Map(j),
                    format!("map {j} has non-finite entries"),
                );
                continue;
            }
            let r = linalg::rank(a, linalg::rank_tol(a));
            if r < a.nrows() {
                report.push(
                    IssueCode::Surjectivity,
                    Location::Map(j),
                    format!("map {j} has rank {r} < {} rows", a.nrows()),
                );
            }
        }
        report
    }

    /// `Ok(())` when valid, otherwise [`Error::InvalidDatum`].
    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.ok() {
            Ok(())
        } else {
            Err(Error::InvalidDatum(report.issues.len()))
        }
    }
}

/// Lieb's form of the EPI: `λ h(X) + (1−λ) h(Y) − h(√λ X + √(1−λ) Y)`.
pub fn make_epi_datum(lambda: f64, dim: usize) -> Result<BlepDatum> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("lambda = {lambda} must lie in (0, 1)")));
    }
    if dim == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    let (a, b) = (lambda.sqrt(), (1.0 - lambda).sqrt());
    let map = DMatrix::from_fn(dim, 2 * dim, |row, col| {
        if col == row {
            a
        } else if col == row + dim {
            b
        } else {
            0.0
        }
    });
    Ok(BlepDatum::new(
        Partition::new(vec![dim, dim])?,
        vec![map],
        vec![1.0],
        vec![lambda, 1.0 - lambda],
    ))
}

/// Zamir-Feder: `h(AX) − Σ α_j² h(X_j)` for `A Aᵀ = I`, scalar blocks.
pub fn make_zamir_feder_datum(a: &DMatrix<f64>) -> Result<BlepDatum> {
    check_row_orthonormal(a, 1e-9)?;
    let d: Vec<f64> = a.column_iter().map(|col| col.norm_squared()).collect();
    Ok(BlepDatum::new(
        Partition::singletons(a.ncols())?,
        vec![a.clone()],
        vec![1.0],
        d,
    ))
}

pub(crate) fn check_row_orthonormal(a: &DMatrix<f64>, tol: f64) -> Result<()> {
    if a.nrows() == 0 || a.nrows() > a.ncols() {
        return Err(Error::Domain(format!(
            "need 0 < k <= n for a k x n matrix, got {} x {}",
            a.nrows(),
            a.ncols()
        )));
    }
    let defect = linalg::orthonormality_defect(&a.transpose());
    if defect > tol {
        return Err(Error::NotOrthonormal {
            what: "A",
            deviation: defect,
        });
    }
    Ok(())
}

/// Subadditivity form of the BLI: a single block of size `n`, `d = (1)`.
pub fn make_bli_datum(maps: Vec<DMatrix<f64>>, c: Vec<f64>) -> Result<BlepDatum> {
    let n = maps.first().map(|a| a.ncols()).unwrap_or(0);
    Ok(BlepDatum::new(Partition::new(vec![n])?, maps, c, vec![1.0]))
}

/// The dependent-components example on `(X_1, X_2, Y)`:
/// `α h(X_1,X_2) + β h(Y) − h(X_1+Y, X_2+Y) − δ_1 h(X_1) − δ_2 h(X_2)`.
///
/// Maps with a zero exponent are kept.
pub fn make_section6_datum(alpha: f64, beta: f64, delta1: f64, delta2: f64) -> Result<BlepDatum> {
    for (name, v) in [("alpha", alpha), ("beta", beta), ("delta1", delta1), ("delta2", delta2)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("{name} = {v} must be a nonnegative real")));
        }
    }
    let a1 = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
    let a2 = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
    let a3 = DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 0.0]);
    Ok(BlepDatum::new(
        Partition::new(vec![2, 1])?,
        vec![a1, a2, a3],
        vec![1.0, delta1, delta2],
        vec![alpha, beta],
    ))
}
