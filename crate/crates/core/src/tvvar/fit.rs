//! Initialization and the alternating minimization driver.

use crate::error::Error;
use crate::linalg::truncated_svd;
use crate::tvvar::{
    objective, update_g, update_v, update_w, update_x, FactorSet, FitConfig, FitReport,
    UpdateKind, UpdateTraceEntry,
};
use crate::{LagPairs, Matrix};
use std::time::Instant;

/// SVD initialization: the spatial, lagged and temporal factors start as
/// the leading left singular vectors of the target matrix, the stacked
/// regressor matrix and the transposed series; the core then gets one
/// closed-form update against them. Deterministic.
pub fn initialize(pairs: &LagPairs, cfg: &FitConfig) -> crate::Result<FactorSet> {
    cfg.validate(pairs)?;
    let r = cfg.rank;
    let d = cfg.order;

    let w0 = truncated_svd(pairs.targets(), r)?.u;
    let v0 = truncated_svd(pairs.regressors(), r)?.u;
    // The series transpose has T rows; keep the rows aligned with the pairs.
    let series = pairs.reconstruct_series();
    let x_full = truncated_svd(&series.values().transpose(), r)?.u;
    let x0 = x_full.rows(d, pairs.count()).into_owned();

    let seeded = FactorSet::new(
        w0,
        Matrix::zeros(r, r * r),
        v0,
        x0,
        d,
        r,
    )?;
    let g0 = update_g(&seeded, pairs, cfg.ridge)?;
    Ok(seeded.with_core(g0))
}

/// A fit that stopped on a numerical error, with whatever progress had been
/// recorded up to that point.
#[derive(Debug)]
pub struct FitAborted {
    pub error: Error,
    pub partial_report: FitReport,
}

impl std::fmt::Display for FitAborted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "fit aborted after {} completed sweep(s): {}",
            self.partial_report.sweeps_run, self.error
        )
    }
}

impl std::error::Error for FitAborted {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<FitAborted> for Error {
    fn from(aborted: FitAborted) -> Self {
        match aborted.error {
            Error::Singular(msg) => Error::Singular(format!(
                "{msg} (after {} completed sweeps)",
                aborted.partial_report.sweeps_run
            )),
            Error::CgBreakdown(msg) => Error::CgBreakdown(format!(
                "{msg} (after {} completed sweeps)",
                aborted.partial_report.sweeps_run
            )),
            other => other,
        }
    }
}

/// Fit the model: SVD initialization, then up to `cfg.sweeps` sweeps that
/// update the core, spatial, lagged and temporal factors in that order,
/// recording the objective after every sweep. Stops early once the relative
/// objective decrease drops below `cfg.rel_tol`.
pub fn fit(pairs: &LagPairs, cfg: &FitConfig) -> Result<(FactorSet, FitReport), FitAborted> {
    let started = Instant::now();
    let make_report = |trace: Vec<f64>, sweeps: usize, converged: bool, updates| FitReport {
        objective_trace: trace,
        sweeps_run: sweeps,
        converged,
        wall_time: started.elapsed().as_secs_f64(),
        update_trace: updates,
    };
    let abort = |error: Error, trace: &[f64], sweeps: usize, updates: &[UpdateTraceEntry]| {
        FitAborted {
            error,
            partial_report: make_report(trace.to_vec(), sweeps, false, updates.to_vec()),
        }
    };

    let mut factors = match initialize(pairs, cfg) {
        Ok(f) => f,
        Err(e) => return Err(abort(e, &[], 0, &[])),
    };

    let mut trace: Vec<f64> = Vec::with_capacity(cfg.sweeps);
    let mut updates: Vec<UpdateTraceEntry> = Vec::new();
    let mut previous = objective(&factors, pairs);
    let mut converged = false;
    let mut sweeps_run = 0;

    for sweep in 0..cfg.sweeps {
        let record = |kind: UpdateKind, factors: &FactorSet, updates: &mut Vec<UpdateTraceEntry>| {
            if cfg.trace_updates {
                updates.push(UpdateTraceEntry {
                    sweep,
                    update: kind,
                    objective: objective(factors, pairs),
                });
            }
        };

        match update_g(&factors, pairs, cfg.ridge) {
            Ok(g) => factors = factors.with_core(g),
            Err(e) => return Err(abort(e, &trace, sweeps_run, &updates)),
        }
        record(UpdateKind::CoreG, &factors, &mut updates);

        match update_w(&factors, pairs, cfg.ridge) {
            Ok(w) => factors = factors.with_spatial(w),
            Err(e) => return Err(abort(e, &trace, sweeps_run, &updates)),
        }
        record(UpdateKind::SpatialW, &factors, &mut updates);

        match update_v(&factors, pairs, cfg.cg_iters) {
            Ok(v) => factors = factors.with_lagged(v),
            Err(e) => {
                let e = e.in_context(&format!("sweep {}", sweep + 1));
                return Err(abort(e, &trace, sweeps_run, &updates));
            }
        }
        record(UpdateKind::LaggedV, &factors, &mut updates);

        match update_x(&factors, pairs) {
            Ok(x) => factors = factors.with_temporal(x),
            Err(e) => return Err(abort(e, &trace, sweeps_run, &updates)),
        }
        record(UpdateKind::TemporalX, &factors, &mut updates);

        let current = objective(&factors, pairs);
        trace.push(current);
        sweeps_run = sweep + 1;
        if previous - current < cfg.rel_tol * (1.0 + previous.abs()) {
            converged = true;
            break;
        }
        previous = current;
    }

    let report = make_report(trace, sweeps_run, converged, updates);
    Ok((factors, report))
}
