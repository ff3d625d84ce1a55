//! Dictionaries: `m x p` matrices whose columns (atoms) live in the unit
//! l2 ball.

use alloc::format;

use crate::error::{shape_err, Error, Result};
use crate::{Matrix, Vector};

/// Slack allowed on atom norms when validating feasibility.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

/// A feasible dictionary. Atoms are stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: Matrix,
}

impl Dictionary {
    /// Wraps `atoms` after checking that every column has norm at most one.
    pub fn new(atoms: Matrix) -> Result<Self> {
        if atoms.nrows() == 0 || atoms.ncols() == 0 {
            return Err(shape_err("dictionary", "m >= 1, p >= 1", format!("{}x{}", atoms.nrows(), atoms.ncols())));
        }
        if atoms.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dictionary"));
        }
        for (j, col) in atoms.column_iter().enumerate() {
            let norm = col.norm();
            if norm > 1.0 + FEASIBILITY_SLACK {
                return Err(Error::InfeasibleDictionary { column: j, norm });
            }
        }
        Ok(Self { atoms })
    }

    /// Projects `atoms` onto the feasible set and wraps the result.
    pub fn from_projected(atoms: Matrix) -> Result<Self> {
        if atoms.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dictionary"));
        }
        Self::new(project_columns(atoms))
    }

    pub fn atoms(&self) -> &Matrix {
        &self.atoms
    }

    pub fn into_atoms(self) -> Matrix {
        self.atoms
    }

    /// Signal dimension.
    pub fn m(&self) -> usize {
        self.atoms.nrows()
    }

    /// Number of atoms.
    pub fn p(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn gram(&self) -> Matrix {
        self.atoms.tr_mul(&self.atoms)
    }

    pub fn reconstruct(&self, alpha: &Vector) -> Vector {
        &self.atoms * alpha
    }

    /// Applies the same permutation to the atoms (`perm[new] = old`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            atoms: Matrix::from_fn(self.m(), self.p(), |i, j| self.atoms[(i, perm[j])]),
        }
    }
}

/// Orthogonal projection onto the set of matrices with columns in the unit
/// ball: columns with norm above one are rescaled to unit norm.
///
/// Norms within a few ulps of one are left alone so that the projection is
/// bitwise idempotent.
pub fn project_columns(mut atoms: Matrix) -> Matrix {
    for mut col in atoms.column_iter_mut() {
        let norm = col.norm();
        if norm > 1.0 + 4.0 * f64::EPSILON {
            col /= norm;
        }
    }
    atoms
}

/// Projection step used by the trainer.
pub fn project_dictionary(atoms: Matrix) -> Result<Dictionary> {
    Dictionary::from_projected(atoms)
}
