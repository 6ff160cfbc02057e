//! Objects to be clustered: a response vector plus a split design matrix.
//!
//! Each object carries its own free design block (coefficients that stay
//! object-specific, e.g. an intercept) and a shared design block (the
//! coefficients the clustering acts on). The two blocks together must have
//! full column rank, otherwise nested-model tests between objects are
//! meaningless.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::matrix_rank;

/// One object: response `y` (length n) with design blocks `x_free` (n x q1,
/// object-specific coefficients) and `x_shared` (n x q2, cluster-shared
/// coefficients).
#[derive(Debug, Clone)]
pub struct ModelObject {
    id: String,
    response: DVector<f64>,
    x_free: DMatrix<f64>,
    x_shared: DMatrix<f64>,
}

impl ModelObject {
    /// Builds and validates an object.
    ///
    /// Requirements: matching row counts, `n >= q1 + q2 + 1`, `q2 >= 1`,
    /// finite entries, and full column rank of `[x_free | x_shared]`.
    pub fn new(
        id: impl Into<String>,
        response: DVector<f64>,
        x_free: DMatrix<f64>,
        x_shared: DMatrix<f64>,
    ) -> Result<Self> {
        let id = id.into();
        let n = response.len();
        if x_free.nrows() != n || x_shared.nrows() != n {
            return Err(Error::InvalidInput(format!(
                "object {id}: design rows ({}, {}) do not match response length {n}",
                x_free.nrows(),
                x_shared.nrows()
            )));
        }
        let (q1, q2) = (x_free.ncols(), x_shared.ncols());
        if q2 == 0 {
            return Err(Error::InvalidInput(format!(
                "object {id}: the shared design block needs at least one column"
            )));
        }
        if n < q1 + q2 + 1 {
            return Err(Error::InvalidInput(format!(
                "object {id}: {n} observations cannot support {q1}+{q2} coefficients"
            )));
        }
        if response.iter().any(|v| !v.is_finite())
            || x_free.iter().any(|v| !v.is_finite())
            || x_shared.iter().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "object {id}: non-finite entries in response or design"
            )));
        }
        let combined = join_columns(&x_free, &x_shared);
        let rank = matrix_rank(&combined);
        if rank < q1 + q2 {
            return Err(Error::SingularDesign { rank, cols: q1 + q2 });
        }
        Ok(Self { id, response, x_free, x_shared })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    pub fn x_free(&self) -> &DMatrix<f64> {
        &self.x_free
    }

    pub fn x_shared(&self) -> &DMatrix<f64> {
        &self.x_shared
    }

    /// Number of observations n.
    pub fn n_obs(&self) -> usize {
        self.response.len()
    }

    /// Width q1 of the object-specific block.
    pub fn free_dim(&self) -> usize {
        self.x_free.ncols()
    }

    /// Width q2 of the cluster-shared block.
    pub fn shared_dim(&self) -> usize {
        self.x_shared.ncols()
    }
}

pub(crate) fn join_columns(left: &DMatrix<f64>, right: &DMatrix<f64>) -> DMatrix<f64> {
    let n = left.nrows();
    let mut out = DMatrix::zeros(n, left.ncols() + right.ncols());
    out.view_mut((0, 0), (n, left.ncols())).copy_from(left);
    out.view_mut((0, left.ncols()), (n, right.ncols())).copy_from(right);
    out
}

/// Checks that all objects agree on the design block widths, returning
/// `(q1, q2)`.
pub(crate) fn common_dims(objects: &[ModelObject]) -> Result<(usize, usize)> {
    let first = objects.first().ok_or(Error::EmptyList)?;
    let dims = (first.free_dim(), first.shared_dim());
    for obj in &objects[1..] {
        if (obj.free_dim(), obj.shared_dim()) != dims {
            return Err(Error::InvalidInput(format!(
                "object {}: design widths ({}, {}) differ from ({}, {})",
                obj.id(),
                obj.free_dim(),
                obj.shared_dim(),
                dims.0,
                dims.1
            )));
        }
    }
    Ok(dims)
}

/// A set of objects together with a cluster assignment.
///
/// Cluster labels must be `0..k` with every label present, so the implied
/// stacked model (block-diagonal free blocks plus one shared block per
/// cluster) has `N*q1 + k*q2` coefficients and no empty cluster.
#[derive(Debug, Clone, Copy)]
pub struct ClusteredDesign<'a> {
    objects: &'a [ModelObject],
    assignment: &'a [usize],
    n_clusters: usize,
}

impl<'a> ClusteredDesign<'a> {
    pub fn new(objects: &'a [ModelObject], assignment: &'a [usize]) -> Result<Self> {
        if objects.is_empty() {
            return Err(Error::EmptyList);
        }
        if objects.len() != assignment.len() {
            return Err(Error::LengthMismatch { left: objects.len(), right: assignment.len() });
        }
        common_dims(objects)?;
        let k = assignment.iter().copied().max().unwrap() + 1;
        let mut seen = vec![false; k];
        for &label in assignment {
            seen[label] = true;
        }
        if let Some(empty) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidInput(format!("cluster {empty} is empty")));
        }
        Ok(Self { objects, assignment, n_clusters: k })
    }

    pub fn objects(&self) -> &'a [ModelObject] {
        self.objects
    }

    pub fn assignment(&self) -> &'a [usize] {
        self.assignment
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    /// Members of each cluster, by object index.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.n_clusters];
        for (i, &label) in self.assignment.iter().enumerate() {
            members[label].push(i);
        }
        members
    }

    /// Total observation count over all objects.
    pub fn total_obs(&self) -> usize {
        self.objects.iter().map(ModelObject::n_obs).sum()
    }

    /// Coefficient count `N*q1 + k*q2` of the stacked model.
    pub fn coefficient_count(&self) -> usize {
        let q1 = self.objects[0].free_dim();
        let q2 = self.objects[0].shared_dim();
        self.objects.len() * q1 + self.n_clusters * q2
    }
}
