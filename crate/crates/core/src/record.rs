//! Serde adapters that store matrices row-major with explicit dimensions.

use nalgebra::{DMatrix, DVector, SMatrix};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// On-disk form of a matrix: `data` is row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixRecord {
    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        let data = m.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect();
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }

    pub fn to_dmatrix(&self) -> Result<DMatrix<f64>, String> {
        if self.data.len() != self.rows * self.cols {
            return Err(format!("matrix record {}x{} holds {} values", self.rows, self.cols, self.data.len()));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

/// Converts between a matrix type and [`MatrixRecord`].
pub trait RowMajor: Sized {
    fn to_record(&self) -> MatrixRecord;
    fn from_record(rec: &MatrixRecord) -> Result<Self, String>;
}

impl RowMajor for DMatrix<f64> {
    fn to_record(&self) -> MatrixRecord {
        MatrixRecord::from_dmatrix(self)
    }

    fn from_record(rec: &MatrixRecord) -> Result<Self, String> {
        rec.to_dmatrix()
    }
}

impl<const R: usize, const C: usize> RowMajor for SMatrix<f64, R, C> {
    fn to_record(&self) -> MatrixRecord {
        MatrixRecord::from_dmatrix(&DMatrix::from_column_slice(R, C, self.as_slice()))
    }

    fn from_record(rec: &MatrixRecord) -> Result<Self, String> {
        if (rec.rows, rec.cols) != (R, C) {
            return Err(format!("expected a {R}x{C} matrix, found {}x{}", rec.rows, rec.cols));
        }
        let m = rec.to_dmatrix()?;
        Ok(Self::from_column_slice(m.as_slice()))
    }
}

/// `#[serde(with = "row_major")]` for any [`RowMajor`] matrix.
pub mod row_major {
    use super::*;

    pub fn serialize<M: RowMajor, S: Serializer>(m: &M, s: S) -> Result<S::Ok, S::Error> {
        m.to_record().serialize(s)
    }

    pub fn deserialize<'de, M: RowMajor, D: Deserializer<'de>>(d: D) -> Result<M, D::Error> {
        let rec = MatrixRecord::deserialize(d)?;
        M::from_record(&rec).map_err(D::Error::custom)
    }
}

/// `#[serde(with = "plain_vector")]`: fixed-size vectors as plain JSON arrays.
pub mod plain_vector {
    use super::*;

    pub fn serialize<const N: usize, S: Serializer>(v: &SMatrix<f64, N, 1>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, const N: usize, D: Deserializer<'de>>(d: D) -> Result<SMatrix<f64, N, 1>, D::Error> {
        let data = Vec::<f64>::deserialize(d)?;
        if data.len() != N {
            return Err(D::Error::custom(format!("expected {N} values, found {}", data.len())));
        }
        Ok(SMatrix::from_column_slice(&data))
    }
}

/// `#[serde(with = "dyn_vector")]` for `DVector<f64>`.
pub mod dyn_vector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}
