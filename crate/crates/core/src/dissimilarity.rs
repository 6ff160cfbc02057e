//! Nested-model tests used as the clustering dissimilarity.
//!
//! An object is compared to a cluster by testing whether its shared
//! coefficients equal the cluster's. The reduced model pools the object into
//! the cluster (one shared vector); the full model keeps the cluster pooled
//! but gives the object its own shared vector. Since the full model shares
//! no parameters between the object and the cluster, it block-separates into
//! a cluster-only fit plus an object-only fit.
//!
//! Poisson uses the likelihood-ratio statistic against chi-square(q2).
//! Families with a dispersion parameter use an F statistic: Gaussian with
//! the usual error-sum-of-squares scale, quasi-Poisson with the deviance
//! difference over the full model's moment dispersion. Comparisons between
//! candidate clusters happen on the log-p scale, which stays informative
//! when the linear p underflows.

use crate::clustered::{pooled_summary, PooledSummary};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::object::{common_dims, ModelObject};
use crate::tail::{tail_log_p, TailDist};

/// Result of one dissimilarity test.
#[derive(Debug, Clone, Copy)]
pub struct TestOutcome {
    /// Likelihood-ratio statistic, or the F value for dispersion families.
    pub statistic: f64,
    /// Numerator degrees of freedom (the shared-block width q2).
    pub df_num: usize,
    /// Denominator degrees of freedom; present for F-type tests only.
    pub df_den: Option<usize>,
    /// Upper-tail p-value (0 when it underflows; see `log_p`).
    pub p_value: f64,
    /// Natural-log upper-tail probability, computed directly.
    pub log_p: f64,
}

/// Tests whether `obj`'s shared coefficients equal those of `cluster`.
///
/// The caller must pass the cluster without `obj`: when testing an object
/// against the cluster currently holding it, remove it first.
pub fn test_object_vs_cluster(
    obj: &ModelObject,
    cluster: &[ModelObject],
    family: Family,
) -> Result<TestOutcome> {
    if cluster.is_empty() {
        return Err(Error::EmptyList);
    }
    let mut pool: Vec<&ModelObject> = cluster.iter().collect();
    pool.push(obj);
    common_dims_of(&pool)?;
    let reduced = pooled_summary(&pool, family)?;
    let cluster_alone = pooled_summary(&pool[..cluster.len()], family)?;
    let obj_alone = pooled_summary(std::slice::from_ref(&pool[cluster.len()]), family)?;
    outcome_from_summaries(reduced, cluster_alone.combine(obj_alone), family, obj.shared_dim())
}

/// Pairwise dissimilarity between two objects: the same nested pair of
/// models with a one-object "cluster", i.e. the dummy-interaction test of
/// whether the two shared coefficient vectors differ.
pub fn test_pairwise(a: &ModelObject, b: &ModelObject, family: Family) -> Result<TestOutcome> {
    test_object_vs_cluster(a, std::slice::from_ref(b), family)
}

fn common_dims_of(items: &[&ModelObject]) -> Result<(usize, usize)> {
    let dims = (items[0].free_dim(), items[0].shared_dim());
    for obj in &items[1..] {
        if (obj.free_dim(), obj.shared_dim()) != dims {
            return Err(Error::InvalidInput(format!(
                "object {}: design widths differ across the tested set",
                obj.id()
            )));
        }
    }
    Ok(dims)
}

/// Builds the test outcome from reduced- and full-model fit summaries.
pub(crate) fn outcome_from_summaries(
    reduced: PooledSummary,
    full: PooledSummary,
    family: Family,
    q2: usize,
) -> Result<TestOutcome> {
    if full.residual_df == 0 {
        return Err(Error::InsufficientDf { df_den: 0 });
    }
    let drop = (reduced.deviance - full.deviance).max(0.0);
    match family {
        Family::PoissonLog => {
            let log_p = tail_log_p(drop, TailDist::ChiSquare { df: q2 });
            Ok(TestOutcome {
                statistic: drop,
                df_num: q2,
                df_den: None,
                p_value: log_p.exp(),
                log_p,
            })
        }
        Family::GaussianIdentity | Family::QuasiPoissonLog => {
            let df_den = full.residual_df;
            // Gaussian: Pearson = SSE, so this is the classic nested-model
            // F. Quasi-Poisson: deviance drop over the moment dispersion of
            // the full (heterogeneous) model.
            let scale = full.pearson / df_den as f64;
            let statistic = if drop <= 0.0 {
                0.0
            } else if scale <= 0.0 {
                f64::INFINITY
            } else {
                (drop / q2 as f64) / scale
            };
            let log_p = tail_log_p(statistic, TailDist::FisherF { df_num: q2, df_den });
            Ok(TestOutcome {
                statistic,
                df_num: q2,
                df_den: Some(df_den),
                p_value: log_p.exp(),
                log_p,
            })
        }
    }
}
