use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Predictor matrix (`n x d`, one row per observation), response and column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    names: Vec<String>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, names: Vec<String>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                got: y.len(),
            });
        }
        if names.len() != x.ncols() {
            return Err(Error::DimensionMismatch {
                expected: x.ncols(),
                got: names.len(),
            });
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Invalid(format!("duplicate column name `{name}`")));
            }
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset contains NaN or infinite values".into()));
        }
        Ok(Self { x, y, names })
    }

    /// Dataset with default column names `x1..xd`.
    pub fn unnamed(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Self::new(x, y, names)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// Rows `range` as a new dataset.
    pub fn rows(&self, range: std::ops::Range<usize>) -> Dataset {
        let len = range.end - range.start;
        Dataset {
            x: self.x.rows(range.start, len).into_owned(),
            y: self.y.rows(range.start, len).into_owned(),
            names: self.names.clone(),
        }
    }

    /// Columns by index, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_columns(cols),
            y: self.y.clone(),
            names: cols.iter().map(|&j| self.names[j].clone()).collect(),
        }
    }

    pub fn with_response(&self, y: DVector<f64>) -> Result<Dataset> {
        Dataset::new(self.x.clone(), y, self.names.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_values() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert!(Dataset::unnamed(x.clone(), DVector::from_vec(vec![1.0])).is_err());
        assert!(Dataset::new(x.clone(), DVector::from_vec(vec![1.0, 2.0]), vec!["a".into()]).is_err());
        assert!(Dataset::new(
            x.clone(),
            DVector::from_vec(vec![1.0, 2.0]),
            vec!["a".into(), "a".into()]
        )
        .is_err());
        assert!(Dataset::unnamed(x, DVector::from_vec(vec![1.0, f64::NAN])).is_err());
    }

    #[test]
    fn row_and_column_views() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let ds = Dataset::unnamed(x, DVector::from_vec(vec![7.0, 8.0, 9.0])).unwrap();
        let tail = ds.rows(1..3);
        assert_eq!(tail.n(), 2);
        assert_eq!(tail.x()[(0, 1)], 4.0);
        assert_eq!(tail.y()[1], 9.0);
        let second = ds.select_columns(&[1]);
        assert_eq!(second.names(), &["x2".to_string()]);
        assert_eq!(second.x()[(2, 0)], 6.0);
    }
}
