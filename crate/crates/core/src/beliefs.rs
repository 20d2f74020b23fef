//! Dense belief matrices and class compatibility matrices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{LabelSet, PriorSet};

/// Row-major `n x c` belief matrix.
///
/// In plain form prior rows are one-hot and all other rows are uniform `1/c`.
/// In centered (residual) form every entry is shifted by `-1/c`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefMatrix {
    n: usize,
    c: usize,
    values: Vec<f64>,
    centered: bool,
}

impl BeliefMatrix {
    pub fn from_rows(n: usize, c: usize, values: Vec<f64>, centered: bool) -> Result<Self> {
        if values.len() != n * c {
            return Err(Error::invalid(format!(
                "belief buffer has {} entries, expected {n} x {c}",
                values.len()
            )));
        }
        Ok(BeliefMatrix {
            n,
            c,
            values,
            centered,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_classes(&self) -> usize {
        self.c
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.c..(i + 1) * self.c]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Switches between plain and residual form.
    pub fn to_centered(&self, centered: bool) -> BeliefMatrix {
        if centered == self.centered {
            return self.clone();
        }
        let shift = if centered { -1.0 } else { 1.0 } / self.c as f64;
        BeliefMatrix {
            n: self.n,
            c: self.c,
            values: self.values.iter().map(|v| v + shift).collect(),
            centered,
        }
    }
}

/// Initial beliefs: one-hot rows for priors, uniform rows otherwise.
pub fn initial_beliefs(priors: &PriorSet, labels: &LabelSet, centered: bool) -> BeliefMatrix {
    let n = labels.num_nodes();
    let c = labels.num_classes();
    let base = if centered { 0.0 } else { 1.0 / c as f64 };
    let mut values = vec![base; n * c];
    for &i in priors.nodes() {
        let k = labels.get(i).expect("priors are labeled");
        let row = &mut values[i * c..(i + 1) * c];
        if centered {
            let off = -1.0 / c as f64;
            row.fill(off);
            row[k] = 1.0 - 1.0 / c as f64;
        } else {
            row.fill(0.0);
            row[k] = 1.0;
        }
    }
    BeliefMatrix {
        n,
        c,
        values,
        centered,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompatibilityForm {
    /// Centered around `1/c`; rows sum to zero. This is what propagation consumes.
    Residual,
    /// Row-normalized, nonnegative.
    Display,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityMatrix {
    pub values: DMatrix<f64>,
    pub form: CompatibilityForm,
}

impl CompatibilityMatrix {
    pub fn residual(values: DMatrix<f64>) -> Self {
        CompatibilityMatrix {
            values,
            form: CompatibilityForm::Residual,
        }
    }

    pub fn display(values: DMatrix<f64>) -> Self {
        CompatibilityMatrix {
            values,
            form: CompatibilityForm::Display,
        }
    }

    /// `I - 1/c`: the residual form of pure homophily.
    pub fn centered_identity(c: usize) -> Self {
        let shift = 1.0 / c as f64;
        CompatibilityMatrix::residual(DMatrix::from_fn(c, c, |i, j| {
            if i == j {
                1.0 - shift
            } else {
                -shift
            }
        }))
    }

    /// The zero residual matrix, i.e. uniform compatibility.
    pub fn uniform(c: usize) -> Self {
        CompatibilityMatrix::residual(DMatrix::zeros(c, c))
    }

    pub fn num_classes(&self) -> usize {
        self.values.nrows()
    }

    /// Subtracts `1/c` from a display matrix.
    pub fn to_residual(&self) -> CompatibilityMatrix {
        match self.form {
            CompatibilityForm::Residual => self.clone(),
            CompatibilityForm::Display => {
                let shift = 1.0 / self.num_classes() as f64;
                CompatibilityMatrix::residual(self.values.map(|v| v - shift))
            }
        }
    }

    /// Human-readable form: adds `1/c`, clamps negatives to zero and
    /// row-normalizes. Rows that are all zero after clamping become uniform.
    pub fn to_display(&self) -> CompatibilityMatrix {
        if self.form == CompatibilityForm::Display {
            return self.clone();
        }
        let c = self.num_classes();
        let shift = 1.0 / c as f64;
        let mut out = self.values.map(|v| (v + shift).max(0.0));
        for mut row in out.row_iter_mut() {
            let sum: f64 = row.iter().sum();
            if sum > 0.0 && sum.is_finite() {
                row /= sum;
            } else {
                row.fill(shift);
            }
        }
        CompatibilityMatrix::display(out)
    }

    /// Column index of the largest entry in every row (lowest index on ties).
    pub fn row_argmax(&self) -> Vec<usize> {
        self.values
            .row_iter()
            .map(|row| argmax(row.iter().copied()))
            .collect()
    }
}

pub(crate) fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (k, v) in values.enumerate() {
        if v > best_val {
            best = k;
            best_val = v;
        }
    }
    best
}
