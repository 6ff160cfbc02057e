//! Joint fitting of the cluster-constrained model.
//!
//! Under an assignment, every object keeps its own free coefficients while
//! all objects in a cluster share one coefficient vector on the shared
//! block. No parameter crosses a cluster boundary, so the stacked model
//! block-separates by cluster: the joint fit is assembled from one pooled
//! fit per cluster, which is exactly the joint IRWLS solution.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::family::Family;
use crate::glm::{fit_glm, pearson_statistic, FitResult};
use crate::object::{ClusteredDesign, ModelObject};

/// Stacks the items' data into one design with block-diagonal free columns
/// (one block per item, in the given order) followed by the shared columns.
pub(crate) fn pooled_design(items: &[&ModelObject]) -> (DVector<f64>, DMatrix<f64>) {
    let q1 = items[0].free_dim();
    let q2 = items[0].shared_dim();
    let rows: usize = items.iter().map(|o| o.n_obs()).sum();
    let cols = items.len() * q1 + q2;
    let mut y = DVector::zeros(rows);
    let mut x = DMatrix::zeros(rows, cols);
    let mut row = 0;
    for (t, obj) in items.iter().enumerate() {
        let n = obj.n_obs();
        y.rows_mut(row, n).copy_from(obj.response());
        x.view_mut((row, t * q1), (n, q1)).copy_from(obj.x_free());
        x.view_mut((row, items.len() * q1), (n, q2)).copy_from(obj.x_shared());
        row += n;
    }
    (y, x)
}

/// Fits the pooled model for one set of items: per-item free coefficients
/// plus a single shared coefficient vector.
pub(crate) fn fit_pooled(items: &[&ModelObject], family: Family) -> Result<FitResult> {
    let (y, x) = pooled_design(items);
    fit_glm(&y, &x, family)
}

/// Deviance, Pearson statistic, and residual df of a pooled fit; the pieces
/// every nested-model test needs.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PooledSummary {
    pub deviance: f64,
    pub pearson: f64,
    pub residual_df: usize,
}

impl PooledSummary {
    /// Summary of the model that concatenates two parameter-disjoint pieces.
    pub fn combine(self, other: PooledSummary) -> PooledSummary {
        PooledSummary {
            deviance: self.deviance + other.deviance,
            pearson: self.pearson + other.pearson,
            residual_df: self.residual_df + other.residual_df,
        }
    }
}

pub(crate) fn pooled_summary(items: &[&ModelObject], family: Family) -> Result<PooledSummary> {
    let (y, x) = pooled_design(items);
    let fit = fit_glm(&y, &x, family)?;
    Ok(PooledSummary {
        deviance: fit.deviance,
        pearson: pearson_statistic(&y, &fit.fitted_means, family),
        residual_df: fit.residual_df,
    })
}

/// Fits the cluster-constrained model for a whole assignment.
///
/// Coefficients are laid out as all free blocks in object order followed by
/// one shared block per cluster; fitted means are stacked in object order.
pub fn fit_clustered(design: &ClusteredDesign<'_>, family: Family) -> Result<FitResult> {
    let objects = design.objects();
    let q1 = objects[0].free_dim();
    let q2 = objects[0].shared_dim();
    let k = design.n_clusters();
    let n_total = design.total_obs();
    let p_total = design.coefficient_count();
    if n_total < p_total {
        return Err(Error::SingularDesign { rank: n_total, cols: p_total });
    }

    let mut offsets = Vec::with_capacity(objects.len());
    let mut acc = 0;
    for obj in objects {
        offsets.push(acc);
        acc += obj.n_obs();
    }

    let mut coefficients = DVector::zeros(p_total);
    let mut fitted = DVector::zeros(n_total);
    let mut deviance = 0.0;
    let mut loglik = 0.0;
    let mut converged = true;
    let mut iterations = 0;

    for (s, members) in design.members().iter().enumerate() {
        let items: Vec<&ModelObject> = members.iter().map(|&i| &objects[i]).collect();
        let fit = fit_pooled(&items, family)?;
        for (t, &i) in members.iter().enumerate() {
            for j in 0..q1 {
                coefficients[i * q1 + j] = fit.coefficients[t * q1 + j];
            }
            let n = objects[i].n_obs();
            let start: usize = members[..t].iter().map(|&m| objects[m].n_obs()).sum();
            fitted.rows_mut(offsets[i], n).copy_from(&fit.fitted_means.rows(start, n));
        }
        for j in 0..q2 {
            coefficients[objects.len() * q1 + s * q2 + j] =
                fit.coefficients[members.len() * q1 + j];
        }
        deviance += fit.deviance;
        loglik += fit.loglik;
        converged &= fit.converged;
        iterations = iterations.max(fit.iterations);
    }

    Ok(FitResult {
        coefficients,
        fitted_means: fitted,
        deviance,
        loglik,
        loglik_is_quasi: family == Family::QuasiPoissonLog,
        residual_df: n_total - p_total,
        converged,
        iterations,
    })
}

/// Moment (Pearson) estimate of the dispersion from a clustered fit:
/// `sum (y - mu)^2 / v(mu)` divided by the residual degrees of freedom.
pub fn estimate_dispersion(
    design: &ClusteredDesign<'_>,
    fit: &FitResult,
    family: Family,
) -> Result<f64> {
    if !family.has_dispersion() {
        return Err(Error::MissingDispersion(format!(
            "family {family} has no dispersion parameter"
        )));
    }
    if fit.residual_df == 0 {
        return Err(Error::ZeroResidualDf);
    }
    let mut y = DVector::zeros(design.total_obs());
    let mut row = 0;
    for obj in design.objects() {
        y.rows_mut(row, obj.n_obs()).copy_from(obj.response());
        row += obj.n_obs();
    }
    if y.len() != fit.fitted_means.len() {
        return Err(Error::LengthMismatch { left: y.len(), right: fit.fitted_means.len() });
    }
    Ok(pearson_statistic(&y, &fit.fitted_means, family) / fit.residual_df as f64)
}
