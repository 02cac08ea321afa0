//! JSON files for data and matrices.
//!
//! A datum file looks like
//!
//! ```json
//! {
//!   "partition": [1, 1],
//!   "maps": [{ "rows": 1, "cols": 2, "data": [0.7071067811865476, 0.7071067811865476] }],
//!   "c": [1.0],
//!   "d": [0.5, 0.5],
//!   "metadata": { "name": "epi" }
//! }
//! ```
//!
//! with matrices stored row-major. Floats round-trip exactly.

use std::fs;
use std::path::Path;

use blepi_core::datum::{BlepDatum, Partition};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub data: Vec<f64>,
}

impl MatrixFile {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for row in m.row_iter() {
            data.extend(row.iter());
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    /// `field` names the location used in error messages, e.g. `maps[2]`.
    pub fn to_matrix(&self, field: &str) -> Result<DMatrix<f64>, CliError> {
        if self.data.len() != self.rows * self.cols {
            return Err(CliError::Invalid(format!(
                "{field}: data has {} entries, expected rows*cols = {}",
                self.data.len(),
                self.rows * self.cols
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumFile {
    pub partition: Vec<usize>,
    pub maps: Vec<MatrixFile>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub metadata: Map<String, Value>,
}

impl DatumFile {
    pub fn from_datum(datum: &BlepDatum) -> Self {
        Self {
            partition: datum.partition.blocks().to_vec(),
            maps: datum.maps.iter().map(MatrixFile::from_matrix).collect(),
            c: datum.c.clone(),
            d: datum.d.clone(),
            metadata: Map::new(),
        }
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.metadata.insert("name".into(), Value::String(name.into()));
        self
    }

    /// Shape checks only; semantic validation is [`BlepDatum::validate`].
    pub fn to_datum(&self) -> Result<BlepDatum, CliError> {
        let partition =
            Partition::new(self.partition.clone()).map_err(|e| CliError::Invalid(format!("partition: {e}")))?;
        let maps = self
            .maps
            .iter()
            .enumerate()
            .map(|(j, m)| m.to_matrix(&format!("maps[{j}]")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BlepDatum::new(partition, maps, self.c.clone(), self.d.clone()))
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_datum_file(path: &Path) -> Result<DatumFile, CliError> {
    parse(path, &read(path)?)
}

pub fn load_datum(path: &Path) -> Result<BlepDatum, CliError> {
    load_datum_file(path)?.to_datum()
}

pub fn load_matrix(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let file: MatrixFile = parse(path, &read(path)?)?;
    file.to_matrix("matrix")
}

pub fn datum_to_string(file: &DatumFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("datum serializes");
    s.push('\n');
    s
}

pub fn save_datum(path: &Path, file: &DatumFile) -> Result<(), CliError> {
    fs::write(path, datum_to_string(file)).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}
