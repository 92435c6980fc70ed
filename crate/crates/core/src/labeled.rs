use ndarray::{ArrayView1, ArrayView2};

use crate::data::Label;
use crate::error::{ApmError, Result};

/// Ordered labeled examples, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    dim: usize,
    rows: Vec<f64>,
    labels: Vec<Label>,
}

impl LabeledSet {
    pub fn new(dim: usize) -> Self {
        LabeledSet { dim, rows: Vec::new(), labels: Vec::new() }
    }

    pub fn from_pairs<'a, I>(dim: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ArrayView1<'a, f64>, Label)>,
    {
        let mut set = LabeledSet::new(dim);
        for (x, y) in pairs {
            set.push(x, y)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, x: ArrayView1<f64>, y: Label) -> Result<()> {
        if x.len() != self.dim {
            return Err(ApmError::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        self.rows.extend(x.iter());
        self.labels.push(y);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.len(), self.dim), &self.rows).expect("row buffer matches shape")
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn example(&self, i: usize) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.rows[i * self.dim..(i + 1) * self.dim])
    }

    pub fn iter(&self) -> impl Iterator<Item = (ArrayView1<'_, f64>, Label)> + '_ {
        (0..self.len()).map(move |i| (self.example(i), self.labels[i]))
    }
}
