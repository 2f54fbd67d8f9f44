//! The time-varying reduced-rank VAR model.
//!
//! The per-step coefficient is never stored: it is implied by four factor
//! matrices. `w` (spatial modes, `N x R`) and `v` (lagged spatial modes,
//! `dN x R`) live on the variable axes, `x` holds one temporal row per time
//! step (`(T-d) x R`), and `g` is the `R x R^2` mode-1 unfolding of the core
//! tensor that couples them. Column `k2 + R*k3` of `g` pairs `v`-column `k2`
//! with `x`-entry `k3`, consistent with column-major vectorization
//! everywhere.

mod export;
mod fit;
mod updates;

pub use export::{export_factors, import_factors, FactorManifest};
pub use fit::{fit, initialize, FitAborted};
pub use updates::{update_g, update_v, update_w, update_x};

use crate::error::{Error, Result};
use crate::linalg::kron_apply_vt_z;
use crate::par;
use crate::{LagPairs, Matrix, Vector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// The model parameters. Together with the order and rank these imply the
/// coefficient matrix at every time step.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    /// Spatial modes, `N x R`.
    pub w: Matrix,
    /// Mode-1 unfolding of the core tensor, `R x R^2`.
    pub g: Matrix,
    /// Lagged spatial modes, `dN x R`.
    pub v: Matrix,
    /// Temporal modes, one row per pair, `(T-d) x R`.
    pub x: Matrix,
    /// VAR order `d`.
    pub order: usize,
    /// Tucker rank `R`.
    pub rank: usize,
}

impl FactorSet {
    /// Validates all shapes and that every entry is finite.
    pub fn new(
        w: Matrix,
        g: Matrix,
        v: Matrix,
        x: Matrix,
        order: usize,
        rank: usize,
    ) -> Result<Self> {
        let set = Self { w, g, v, x, order, rank };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<()> {
        let r = self.rank;
        if r == 0 || self.order == 0 {
            return Err(Error::Parameter("rank and order must be >= 1".into()));
        }
        if self.w.ncols() != r || self.v.ncols() != r || self.x.ncols() != r {
            return Err(Error::Parameter(format!(
                "factor columns must equal rank {r}: W has {}, V has {}, X has {}",
                self.w.ncols(),
                self.v.ncols(),
                self.x.ncols()
            )));
        }
        if self.g.shape() != (r, r * r) {
            return Err(Error::Parameter(format!(
                "core unfolding must be {r}x{}, got {}x{}",
                r * r,
                self.g.nrows(),
                self.g.ncols()
            )));
        }
        if self.v.nrows() != self.order * self.w.nrows() {
            return Err(Error::Parameter(format!(
                "lagged factor must have order*N = {} rows, got {}",
                self.order * self.w.nrows(),
                self.v.nrows()
            )));
        }
        for (m, name) in [(&self.w, "W"), (&self.g, "G"), (&self.v, "V"), (&self.x, "X")] {
            if !m.iter().all(|v| v.is_finite()) {
                return Err(Error::Data(format!("factor {name} contains non-finite entries")));
            }
        }
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.w.nrows()
    }

    /// Number of time steps covered by the temporal factor, `T - d`.
    pub fn count(&self) -> usize {
        self.x.nrows()
    }

    /// Temporal row at pair index `t_idx`, as a column vector.
    pub fn x_row(&self, t_idx: usize) -> Vector {
        self.x.row(t_idx).transpose()
    }

    pub fn with_spatial(mut self, w: Matrix) -> Self {
        self.w = w;
        self
    }

    pub fn with_core(mut self, g: Matrix) -> Self {
        self.g = g;
        self
    }

    pub fn with_lagged(mut self, v: Matrix) -> Self {
        self.v = v;
        self
    }

    pub fn with_temporal(mut self, x: Matrix) -> Self {
        self.x = x;
        self
    }

    /// `R x R` combination of core blocks weighted by a temporal row:
    /// `sum_j x[j] * G[:, j*R..(j+1)*R]`.
    fn core_combination(&self, x_row: &Vector) -> Matrix {
        let r = self.rank;
        let mut m = Matrix::zeros(r, r);
        for j in 0..r {
            let block = self.g.view((0, j * r), (r, r));
            for col in 0..r {
                for row in 0..r {
                    m[(row, col)] += x_row[j] * block[(row, col)];
                }
            }
        }
        m
    }

    /// Coefficient matrix `A_t` for the 1-based time index `t` in `d+1..=T`.
    ///
    /// Materializing `A_t` costs `O(N*dN*R)`; meant for inspection and
    /// small-scale checks, not inner loops.
    pub fn coefficient_at(&self, t: usize) -> Result<Matrix> {
        let lo = self.order + 1;
        let hi = self.order + self.count();
        if t < lo || t > hi {
            return Err(Error::Parameter(format!(
                "time index {t} out of range {lo}..={hi}"
            )));
        }
        Ok(self.coefficient_at_index(t - lo))
    }

    /// Coefficient matrix for a 0-based pair index.
    pub fn coefficient_at_index(&self, t_idx: usize) -> Matrix {
        let mid = self.core_combination(&self.x_row(t_idx));
        &self.w * mid * self.v.transpose()
    }

    /// One-step prediction `W G (x_t' ⊗ V)' z` at pair index `t_idx`.
    pub fn predict(&self, t_idx: usize, z: &Vector) -> Vector {
        let c = kron_apply_vt_z(&self.x_row(t_idx), &self.v, z)
            .expect("factor shapes are validated");
        &self.w * (&self.g * c)
    }
}

/// Fitting configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Tucker rank `R`; must satisfy `R <= min(N, T-d)`.
    pub rank: usize,
    /// VAR order `d`.
    pub order: usize,
    /// Maximum number of sweeps.
    pub sweeps: usize,
    /// Conjugate gradient iterations per lagged-factor update.
    pub cg_iters: usize,
    /// Ridge coefficient for the closed-form updates, scaled internally by
    /// the trace average of each Gram matrix. Zero disables regularization.
    pub ridge: f64,
    /// Early stop once the relative objective decrease falls below this.
    pub rel_tol: f64,
    /// Reserved for future stochastic options; fitting itself is
    /// deterministic.
    pub seed: u64,
    /// Record the objective after every block update, not just per sweep.
    pub trace_updates: bool,
}

impl FitConfig {
    pub fn new(rank: usize, order: usize) -> Self {
        Self {
            rank,
            order,
            sweeps: 50,
            cg_iters: 5,
            ridge: 1e-8,
            rel_tol: 1e-8,
            seed: 0,
            trace_updates: false,
        }
    }

    pub fn validate(&self, pairs: &LagPairs) -> Result<()> {
        if self.order != pairs.order() {
            return Err(Error::Parameter(format!(
                "config order {} does not match the embedded order {}",
                self.order,
                pairs.order()
            )));
        }
        let bound = pairs.num_vars().min(pairs.count());
        if self.rank < 1 || self.rank > bound {
            return Err(Error::Parameter(format!(
                "rank {} out of range: must satisfy 1 <= R <= min(N, T-d) = {bound}",
                self.rank
            )));
        }
        if self.cg_iters < 1 {
            return Err(Error::Parameter("cg_iters must be >= 1".into()));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::Parameter(format!("ridge {} must be >= 0", self.ridge)));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::Parameter(format!("rel_tol {} must be >= 0", self.rel_tol)));
        }
        Ok(())
    }
}

/// Which factor a traced update touched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpdateKind {
    CoreG,
    SpatialW,
    LaggedV,
    TemporalX,
}

/// Objective value recorded right after one block update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateTraceEntry {
    pub sweep: usize,
    pub update: UpdateKind,
    pub objective: f64,
}

/// What happened during a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Objective after each completed sweep.
    pub objective_trace: Vec<f64>,
    pub sweeps_run: usize,
    pub converged: bool,
    /// Wall-clock seconds spent in the fit, initialization included.
    pub wall_time: f64,
    /// Per-update objectives; empty unless tracing was requested.
    pub update_trace: Vec<UpdateTraceEntry>,
}

/// Sum of squared residuals, halved: `1/2 sum_t ||y_t - W G (x_t' ⊗ V)' z_t||^2`.
pub fn objective(factors: &FactorSet, pairs: &LagPairs) -> f64 {
    assert_consistent(factors, pairs);
    let partials: Vec<f64> = par::block_ranges(pairs.count(), par::BLOCK)
        .into_par_iter()
        .map(|range| {
            let mut acc = 0.0;
            for t in range {
                let c = kron_apply_vt_z(
                    &factors.x_row(t),
                    &factors.v,
                    &pairs.regressor(t).into_owned(),
                )
                .expect("validated shapes");
                let residual = pairs.target(t) - &factors.w * (&factors.g * c);
                acc += residual.norm_squared();
            }
            acc
        })
        .collect();
    0.5 * partials.iter().sum::<f64>()
}

/// Fitted values and per-step residual norms.
pub fn one_step_predict(factors: &FactorSet, pairs: &LagPairs) -> (Matrix, Vec<f64>) {
    assert_consistent(factors, pairs);
    let count = pairs.count();
    let mut fitted = Matrix::zeros(pairs.num_vars(), count);
    let mut residuals = Vec::with_capacity(count);
    for t in 0..count {
        let pred = factors.predict(t, &pairs.regressor(t).into_owned());
        residuals.push((pairs.target(t) - &pred).norm());
        fitted.set_column(t, &pred);
    }
    (fitted, residuals)
}

/// Objective gradient with respect to the spatial factor.
pub fn gradient_w(factors: &FactorSet, pairs: &LagPairs) -> Matrix {
    assert_consistent(factors, pairs);
    let mut grad = Matrix::zeros(factors.num_vars(), factors.rank);
    for t in 0..pairs.count() {
        let c = kron_apply_vt_z(&factors.x_row(t), &factors.v, &pairs.regressor(t).into_owned())
            .expect("validated shapes");
        let b = &factors.g * c;
        let residual = pairs.target(t) - &factors.w * &b;
        grad.ger(-1.0, &residual, &b, 1.0);
    }
    grad
}

/// Objective gradient with respect to the core unfolding.
pub fn gradient_g(factors: &FactorSet, pairs: &LagPairs) -> Matrix {
    assert_consistent(factors, pairs);
    let r = factors.rank;
    let mut grad = Matrix::zeros(r, r * r);
    for t in 0..pairs.count() {
        let c = kron_apply_vt_z(&factors.x_row(t), &factors.v, &pairs.regressor(t).into_owned())
            .expect("validated shapes");
        let residual = pairs.target(t) - &factors.w * (&factors.g * &c);
        let wt_res = factors.w.tr_mul(&residual);
        grad.ger(-1.0, &wt_res, &c, 1.0);
    }
    grad
}

/// Objective gradient with respect to one temporal row.
pub fn gradient_x(factors: &FactorSet, pairs: &LagPairs, t_idx: usize) -> Vector {
    assert_consistent(factors, pairs);
    let m_t = updates::design_at(factors, &pairs.regressor(t_idx).into_owned());
    m_t.tr_mul(&(&m_t * factors.x_row(t_idx) - pairs.target(t_idx)))
}

fn assert_consistent(factors: &FactorSet, pairs: &LagPairs) {
    assert_eq!(factors.num_vars(), pairs.num_vars(), "variable count mismatch");
    assert_eq!(factors.v.nrows(), pairs.regressor_dim(), "regressor dimension mismatch");
    assert_eq!(factors.count(), pairs.count(), "time step count mismatch");
    assert_eq!(factors.order, pairs.order(), "order mismatch");
}

/// Rescale each spatial-mode column to unit norm, absorbing the inverse
/// into the corresponding row of the core unfolding so every coefficient
/// matrix is unchanged.
pub fn normalize_spatial_modes(factors: &FactorSet) -> FactorSet {
    let mut out = factors.clone();
    for k in 0..out.rank {
        let norm = out.w.column(k).norm();
        if norm > 0.0 {
            out.w.column_mut(k).scale_mut(1.0 / norm);
            out.g.row_mut(k).scale_mut(norm);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{lag_embed, synth_planted_var, SynthKind, SynthSpec, TimeSeriesMatrix};
    use crate::oracle;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_factors(rng: &mut ChaCha8Rng, n: usize, d: usize, r: usize, count: usize) -> FactorSet {
        FactorSet::new(
            Matrix::from_fn(n, r, |_, _| StandardNormal.sample(rng)),
            Matrix::from_fn(r, r * r, |_, _| StandardNormal.sample(rng)),
            Matrix::from_fn(d * n, r, |_, _| StandardNormal.sample(rng)),
            Matrix::from_fn(count, r, |_, _| StandardNormal.sample(rng)),
            d,
            r,
        )
        .unwrap()
    }

    fn random_pairs(rng: &mut ChaCha8Rng, n: usize, t: usize, d: usize) -> LagPairs {
        let s = TimeSeriesMatrix::new(Matrix::from_fn(n, t, |_, _| StandardNormal.sample(rng)))
            .unwrap();
        lag_embed(&s, d).unwrap()
    }

    #[test]
    fn zero_core_objective_is_target_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pairs = random_pairs(&mut rng, 3, 12, 1);
        let mut factors = random_factors(&mut rng, 3, 1, 2, pairs.count());
        factors.g.fill(0.0);
        let expect: f64 = (0..pairs.count())
            .map(|t| pairs.target(t).norm_squared())
            .sum::<f64>()
            * 0.5;
        assert!((objective(&factors, &pairs) - expect).abs() < 1e-12 * (1.0 + expect));
    }

    #[test]
    fn planted_factors_reach_zero_objective() {
        let spec = SynthSpec {
            num_vars: 6,
            num_steps: 40,
            order: 1,
            rank: 2,
            noise_sd: 0.0,
            seed: 3,
            kind: SynthKind::PlantedVar,
        };
        let (series, truth) = synth_planted_var(&spec).unwrap();
        let pairs = lag_embed(&series, 1).unwrap();
        let scale: f64 = (0..pairs.count()).map(|t| pairs.target(t).norm_squared()).sum();
        assert!(objective(&truth, &pairs) <= 1e-18 * scale.max(1.0));
    }

    #[test]
    fn objective_matches_matrix_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let (n, t, d, r) = (3, 9, 2, 2);
            let pairs = random_pairs(&mut rng, n, t, d);
            let factors = random_factors(&mut rng, n, d, r, pairs.count());
            let fast = objective(&factors, &pairs);
            let (y, ztilde) = crate::dataset::build_matrix_form(&pairs, None).unwrap();
            let xkv = oracle::dense_kron(&factors.x, &factors.v);
            let frob = (&y - &factors.w * &factors.g * xkv.transpose() * ztilde).norm_squared();
            let slow = 0.5 * frob;
            assert!(
                (fast - slow).abs() <= 1e-10 * (1.0 + slow.abs()),
                "fast {fast} vs slow {slow}"
            );
        }
    }

    #[test]
    fn coefficient_matches_dense_tucker_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pairs = random_pairs(&mut rng, 4, 10, 1);
        let factors = random_factors(&mut rng, 4, 1, 3, pairs.count());
        for t_idx in [0usize, 3, 8] {
            let fast = factors.coefficient_at_index(t_idx);
            let dense = oracle::coefficient_dense(&factors, t_idx);
            assert!((fast - dense).amax() < 1e-12);
        }
    }

    #[test]
    fn coefficient_rank_one_is_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let factors = random_factors(&mut rng, 3, 1, 1, 5);
        let a = factors.coefficient_at(2).unwrap(); // t = d+1 = 2
        let scale = factors.x[(0, 0)] * factors.g[(0, 0)];
        let outer = factors.w.column(0) * factors.v.column(0).transpose() * scale;
        assert!((a - outer).amax() < 1e-13);
        assert!(factors.coefficient_at(1).is_err());
        assert!(factors.coefficient_at(7).is_err());
    }

    #[test]
    fn coefficient_is_linear_in_temporal_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let factors = random_factors(&mut rng, 3, 2, 2, 6);
        let base = factors.coefficient_at_index(4);
        let mut scaled = factors.clone();
        scaled.x.row_mut(4).scale_mut(2.5);
        let doubled = scaled.coefficient_at_index(4);
        assert!((doubled - base * 2.5).amax() < 1e-12);
    }

    #[test]
    fn mode3_scale_counterbalance_leaves_objective_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let pairs = random_pairs(&mut rng, 4, 14, 1);
        let factors = random_factors(&mut rng, 4, 1, 2, pairs.count());
        let f0 = objective(&factors, &pairs);
        for c in [2.0, -0.5, 1e3] {
            let rescaled = factors
                .clone()
                .with_temporal(&factors.x * c)
                .with_core(&factors.g / c);
            let f1 = objective(&rescaled, &pairs);
            assert!((f0 - f1).abs() <= 1e-12 * (1.0 + f0.abs()), "c={c}: {f0} vs {f1}");
            let a0 = factors.coefficient_at_index(3);
            let a1 = rescaled.coefficient_at_index(3);
            assert!((a0 - a1).amax() <= 1e-12);
        }
    }

    #[test]
    fn one_step_predict_consistent_with_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let pairs = random_pairs(&mut rng, 5, 20, 1);
        let factors = random_factors(&mut rng, 5, 1, 2, pairs.count());
        let (fitted, residuals) = one_step_predict(&factors, &pairs);
        assert_eq!(fitted.ncols(), pairs.count());
        let half_sq: f64 = residuals.iter().map(|r| 0.5 * r * r).sum();
        let f = objective(&factors, &pairs);
        assert!((half_sq - f).abs() <= 1e-12 * (1.0 + f));

        let mut zero = factors.clone();
        zero.g.fill(0.0);
        let (fitted0, residuals0) = one_step_predict(&zero, &pairs);
        assert!(fitted0.amax() == 0.0);
        for (t, r) in residuals0.iter().enumerate() {
            assert!((r - pairs.target(t).norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn normalize_spatial_modes_preserves_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let factors = random_factors(&mut rng, 4, 1, 3, 6);
        let normalized = normalize_spatial_modes(&factors);
        for k in 0..3 {
            assert!((normalized.w.column(k).norm() - 1.0).abs() < 1e-12);
        }
        for t_idx in 0..6 {
            let a = factors.coefficient_at_index(t_idx);
            let b = normalized.coefficient_at_index(t_idx);
            assert!((a - b).amax() < 1e-12);
        }
    }
}
