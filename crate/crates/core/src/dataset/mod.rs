//! Time-series ingestion, lag embedding and synthetic data.

mod io;
mod synth;

pub use io::{load_binary, load_csv, read_matrix_csv, save_binary, save_csv, write_matrix_csv};
pub use synth::{synth_multiresolution, synth_planted_var, SynthKind, SynthSpec};

use crate::error::{Error, Result};
use crate::Matrix;
use nalgebra::DVectorView;

/// A multivariate time series: `N` variables observed at `T` consecutive
/// steps, stored as an `N x T` matrix whose column `t` is the observation
/// at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesMatrix {
    values: Matrix,
}

impl TimeSeriesMatrix {
    /// Validates `N >= 1`, `T >= 2` and that every entry is finite.
    pub fn new(values: Matrix) -> Result<Self> {
        if values.nrows() < 1 || values.ncols() < 2 {
            return Err(Error::Data(format!(
                "time series must be at least 1x2, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (rows, _) = values.shape();
            return Err(Error::Data(format!(
                "non-finite value at row {}, column {}",
                pos % rows + 1,
                pos / rows + 1
            )));
        }
        Ok(Self { values })
    }

    pub fn num_vars(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_steps(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn into_values(self) -> Matrix {
        self.values
    }
}

/// Aligned regression pairs `(y_t, z_t)` for `t = d+1..=T`, produced by lag
/// embedding: `y_t = s_t` and `z_t` stacks the `d` previous observations,
/// most recent first.
#[derive(Debug, Clone, PartialEq)]
pub struct LagPairs {
    order: usize,
    /// `N x (T-d)`; column `t` is `y_{d+1+t}`.
    y: Matrix,
    /// `dN x (T-d)`; column `t` is `z_{d+1+t}`.
    z: Matrix,
}

impl LagPairs {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_vars(&self) -> usize {
        self.y.nrows()
    }

    /// Length of each regressor vector, `d*N`.
    pub fn regressor_dim(&self) -> usize {
        self.z.nrows()
    }

    /// Number of pairs, `T - d`.
    pub fn count(&self) -> usize {
        self.y.ncols()
    }

    /// `y` vector of the pair at index `t_idx` (0-based).
    pub fn target(&self, t_idx: usize) -> DVectorView<'_, f64> {
        self.y.column(t_idx)
    }

    /// `z` vector of the pair at index `t_idx` (0-based).
    pub fn regressor(&self, t_idx: usize) -> DVectorView<'_, f64> {
        self.z.column(t_idx)
    }

    /// All targets as the `N x (T-d)` matrix with columns `y_{d+1}..y_T`.
    pub fn targets(&self) -> &Matrix {
        &self.y
    }

    /// All regressors as the `dN x (T-d)` matrix with columns `z_{d+1}..z_T`.
    pub fn regressors(&self) -> &Matrix {
        &self.z
    }

    /// Rebuild the original observation matrix. Columns `1..=d` come from the
    /// first regressor vector, the rest from the targets.
    pub fn reconstruct_series(&self) -> TimeSeriesMatrix {
        let n = self.num_vars();
        let d = self.order;
        let count = self.count();
        let mut s = Matrix::zeros(n, d + count);
        // z_{d+1} = (s_d; s_{d-1}; ...; s_1)
        for k in 0..d {
            let col = self.z.column(0).rows(k * n, n).into_owned();
            s.set_column(d - 1 - k, &col);
        }
        for t in 0..count {
            s.set_column(d + t, &self.y.column(t).into_owned());
        }
        TimeSeriesMatrix::new(s).expect("reassembled series is valid")
    }
}

/// Lag-embed a series into the pairs `(y_t, z_t)` for a given order.
pub fn lag_embed(series: &TimeSeriesMatrix, order: usize) -> Result<LagPairs> {
    let n = series.num_vars();
    let t = series.num_steps();
    if order < 1 || order > t - 1 {
        return Err(Error::Parameter(format!(
            "order {order} out of range 1..={} for {t} time steps",
            t - 1
        )));
    }
    let count = t - order;
    let s = series.values();
    let mut y = Matrix::zeros(n, count);
    let mut z = Matrix::zeros(order * n, count);
    for j in 0..count {
        y.set_column(j, &s.column(order + j).into_owned());
        for k in 0..order {
            z.view_mut((k * n, j), (n, 1))
                .copy_from(&s.column(order + j - 1 - k));
        }
    }
    Ok(LagPairs { order, y, z })
}

/// Default cap on the number of entries of the block-diagonal regressor
/// matrix produced by [`build_matrix_form`].
pub const MATRIX_FORM_CAP: usize = 10_000_000;

/// Assemble the stacked matrix form of the regression: the target matrix
/// `Y` and the block-diagonal `Z~` with `z_t` as the `t`-th diagonal block.
///
/// Only intended for small-scale verification; the entry count of `Z~` is
/// capped (pass `None` for the default cap).
pub fn build_matrix_form(pairs: &LagPairs, cap: Option<usize>) -> Result<(Matrix, Matrix)> {
    let count = pairs.count();
    let dim = pairs.regressor_dim();
    let cap = cap.unwrap_or(MATRIX_FORM_CAP);
    let entries = dim * count * count;
    if entries > cap {
        return Err(Error::TooLarge(format!(
            "block-diagonal regressor matrix would hold {entries} entries (cap {cap}); \
             use the summed vector-form objective instead"
        )));
    }
    let y = pairs.targets().clone();
    let mut ztilde = Matrix::zeros(dim * count, count);
    for t in 0..count {
        ztilde
            .view_mut((t * dim, t), (dim, 1))
            .copy_from(&pairs.regressor(t));
    }
    Ok((y, ztilde))
}
