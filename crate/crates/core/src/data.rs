use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An n×p matrix of observations (rows) on continuous variables (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    col_names: Option<Vec<String>>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>, col_names: Option<Vec<String>>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidData(format!(
                "need at least one row and one column, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (i, j) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::InvalidData(format!("non-finite entry at row {i}, column {j}")));
        }
        if let Some(names) = &col_names {
            if names.len() != values.ncols() {
                return Err(Error::InvalidData(format!(
                    "{} column names for {} columns",
                    names.len(),
                    values.ncols()
                )));
            }
        }
        Ok(Self { values, col_names })
    }

    /// Builds a matrix from row-major observations.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::InvalidData(format!("row {bad} has {} values, expected {p}", rows[bad].len())));
        }
        Self::new(DMatrix::from_fn(n, p, |i, j| rows[i][j]), None)
    }

    pub fn with_col_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::InvalidData(format!("{} column names for {} columns", names.len(), self.p())));
        }
        self.col_names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn col_names(&self) -> Option<&[String]> {
        self.col_names.as_deref()
    }

    /// Name of column `j`, falling back to `V{j+1}`.
    pub fn col_name(&self, j: usize) -> String {
        match &self.col_names {
            Some(names) => names[j].clone(),
            None => format!("V{}", j + 1),
        }
    }

    /// Copies the listed columns (0-based) into a new matrix.
    pub fn select_columns(&self, cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), cols.len(), |i, c| self.values[(i, cols[c])])
    }

    /// New `DataMatrix` holding only the listed columns, names carried over.
    pub fn subset(&self, cols: &[usize]) -> Result<Self> {
        let names = self
            .col_names
            .as_ref()
            .map(|names| cols.iter().map(|&c| names[c].clone()).collect());
        Self::new(self.select_columns(cols), names)
    }

    /// Same data with rows reordered: row `i` of the result is row `order[i]`.
    pub fn permute_rows(&self, order: &[usize]) -> Self {
        let values = DMatrix::from_fn(self.n(), self.p(), |i, j| self.values[(order[i], j)]);
        Self { values, col_names: self.col_names.clone() }
    }
}
