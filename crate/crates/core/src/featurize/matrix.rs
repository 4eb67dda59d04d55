use crate::error::{Error, Result};

/// Sparse boolean design matrix with labels, stored both row- and
/// column-wise. Rows list the ids of the features equal to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n_features: usize,
    rows: Vec<Vec<u32>>,
    columns: Vec<Vec<u32>>,
    labels: Vec<bool>,
}

impl DesignMatrix {
    pub fn from_rows(n_features: usize, mut rows: Vec<Vec<u32>>, labels: Vec<bool>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        let mut columns = vec![Vec::new(); n_features];
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            row.dedup();
            for &f in row.iter() {
                let col = columns.get_mut(f as usize).ok_or_else(|| {
                    Error::InvalidArgument(format!("feature index {f} out of range 0..{n_features}"))
                })?;
                col.push(i as u32);
            }
        }
        Ok(Self {
            n_features,
            rows,
            columns,
            labels,
        })
    }

    /// Builds from a dense 0/1 table; handy in tests.
    pub fn from_dense(dense: &[Vec<bool>], labels: Vec<bool>) -> Result<Self> {
        let n_features = dense.first().map_or(0, Vec::len);
        let rows = dense
            .iter()
            .map(|r| {
                if r.len() != n_features {
                    return Err(Error::DimensionMismatch {
                        expected: n_features,
                        got: r.len(),
                    });
                }
                Ok(r.iter()
                    .enumerate()
                    .filter(|(_, &v)| v)
                    .map(|(j, _)| j as u32)
                    .collect())
            })
            .collect::<Result<Vec<Vec<u32>>>>()?;
        Self::from_rows(n_features, rows, labels)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn column(&self, f: usize) -> &[u32] {
        &self.columns[f]
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> f64 {
        if self.labels[i] {
            1.0
        } else {
            0.0
        }
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y).count()
    }

    pub fn label_mean(&self) -> f64 {
        self.positives() as f64 / self.n_rows() as f64
    }

    pub fn get(&self, i: usize, f: usize) -> bool {
        self.rows[i].binary_search(&(f as u32)).is_ok()
    }

    /// Number of nonzero entries.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Returns a copy with every row repeated `times` times, in blocks.
    pub fn repeat_rows(&self, times: usize) -> Self {
        let mut rows = Vec::with_capacity(self.rows.len() * times);
        let mut labels = Vec::with_capacity(self.rows.len() * times);
        for _ in 0..times {
            rows.extend(self.rows.iter().cloned());
            labels.extend(self.labels.iter().copied());
        }
        Self::from_rows(self.n_features, rows, labels).expect("indices already validated")
    }
}
