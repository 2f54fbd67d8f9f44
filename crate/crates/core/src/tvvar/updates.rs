//! The four block updates of the alternating minimization sweep.
//!
//! Each update minimizes the objective over one factor with the others
//! held fixed: ridge-stabilized normal equations for the spatial factor and
//! the core unfolding, independent pseudo-inverse solves per time step for
//! the temporal rows, and a warm-started conjugate gradient on a
//! generalized Sylvester equation for the lagged factor. All per-step
//! accumulations run over fixed index blocks so parallel execution is
//! bit-reproducible.

use crate::error::Result;
use crate::linalg::{
    conjugate_gradient, kron_apply_vt_z, kron_apply_zx_i, lstsq_min_norm, pseudo_inverse,
    solve_ridge, unvec, vec_of, FnOperator,
};
use crate::par;
use crate::{LagPairs, Matrix, Vector};
use rayon::prelude::*;

use super::FactorSet;

/// Spatial-factor update: with `b_t = G vec(V'z_t x_t')`, solve the normal
/// equations `W (sum b_t b_t') = sum y_t b_t'`. `ridge` is scaled by the
/// trace average of the Gram matrix before it hits the diagonal.
pub fn update_w(factors: &FactorSet, pairs: &LagPairs, ridge: f64) -> Result<Matrix> {
    let n = pairs.num_vars();
    let r = factors.rank;
    let (num, gram) = par::block_ranges(pairs.count(), par::BLOCK)
        .into_par_iter()
        .map(|range| {
            let mut num = Matrix::zeros(n, r);
            let mut gram = Matrix::zeros(r, r);
            for t in range {
                let c = kron_apply_vt_z(
                    &factors.x_row(t),
                    &factors.v,
                    &pairs.regressor(t).into_owned(),
                )
                .expect("validated shapes");
                let b = &factors.g * c;
                num.ger(1.0, &pairs.target(t).into_owned(), &b, 1.0);
                gram.ger(1.0, &b, &b, 1.0);
            }
            (num, gram)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((Matrix::zeros(n, r), Matrix::zeros(r, r)), |(na, ga), (nb, gb)| {
            (na + nb, ga + gb)
        });

    let scaled = ridge * gram.trace() / r as f64;
    let wt = solve_ridge(&gram, &num.transpose(), scaled)
        .map_err(|e| e.in_context("spatial factor update (W)"))?;
    Ok(wt.transpose())
}

/// Core-unfolding update: with `c_t = vec(V'z_t x_t')`, solve
/// `G (sum c_t c_t') = W+ (sum y_t c_t')` using the pseudo-inverse of the
/// spatial factor.
pub fn update_g(factors: &FactorSet, pairs: &LagPairs, ridge: f64) -> Result<Matrix> {
    let n = pairs.num_vars();
    let r = factors.rank;
    let r2 = r * r;
    let (num, gram) = par::block_ranges(pairs.count(), par::BLOCK)
        .into_par_iter()
        .map(|range| {
            let mut num = Matrix::zeros(n, r2);
            let mut gram = Matrix::zeros(r2, r2);
            for t in range {
                let c = kron_apply_vt_z(
                    &factors.x_row(t),
                    &factors.v,
                    &pairs.regressor(t).into_owned(),
                )
                .expect("validated shapes");
                num.ger(1.0, &pairs.target(t).into_owned(), &c, 1.0);
                gram.ger(1.0, &c, &c, 1.0);
            }
            (num, gram)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((Matrix::zeros(n, r2), Matrix::zeros(r2, r2)), |(na, ga), (nb, gb)| {
            (na + nb, ga + gb)
        });

    let w_pinv = pseudo_inverse(&factors.w, None)?;
    let left = w_pinv * num; // R x R^2
    let scaled = ridge * gram.trace() / r2 as f64;
    let gt = solve_ridge(&gram, &left.transpose(), scaled)
        .map_err(|e| e.in_context("core factor update (G)"))?;
    Ok(gt.transpose())
}

/// Lagged-factor update via conjugate gradient on the generalized Sylvester
/// equation `sum_t z_t x_t' P_t(V)' = sum_t z_t x_t' Q_t'`, warm-started
/// from the current factor. `P_t` is linear in the candidate `V`, so the
/// left side is a symmetric positive semidefinite operator on `vec(V)`.
pub fn update_v(factors: &FactorSet, pairs: &LagPairs, cg_iters: usize) -> Result<Matrix> {
    let r = factors.rank;
    let dim = pairs.regressor_dim();
    let count = pairs.count();
    // H = G' W'W G maps vec(V'z x') to vec(P).
    let h = factors.g.transpose() * (factors.w.transpose() * &factors.w) * &factors.g;

    // Right-hand side: vec(Q_t) = G'W'y_t, accumulated as (Q_t x_t) z_t'.
    let rhs_flat = par::block_ranges(count, par::BLOCK)
        .into_par_iter()
        .map(|range| {
            let mut acc = Vector::zeros(r * dim);
            for t in range {
                let q = factors.g.tr_mul(&factors.w.tr_mul(&pairs.target(t).into_owned()));
                let inc = kron_apply_zx_i(
                    &pairs.regressor(t).into_owned(),
                    &factors.x_row(t),
                    &q,
                )
                .expect("validated shapes");
                acc += inc;
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Vector::zeros(r * dim), |a, b| a + b);
    // The accumulator lives in vec(V') layout; the iterate is vec(V).
    let rhs = transpose_vec(&rhs_flat, r, dim);

    let x_rows: Vec<Vector> = (0..count).map(|t| factors.x_row(t)).collect();
    let operator = FnOperator::square(dim * r, |candidate: &Vector| {
        let v_mat = unvec(candidate, dim, r);
        let acc = par::block_ranges(count, par::BLOCK)
            .into_par_iter()
            .map(|range| {
                let mut acc = Vector::zeros(r * dim);
                for t in range {
                    let z = pairs.regressor(t).into_owned();
                    let c = kron_apply_vt_z(&x_rows[t], &v_mat, &z).expect("validated shapes");
                    let p = &h * c;
                    let inc = kron_apply_zx_i(&z, &x_rows[t], &p).expect("validated shapes");
                    acc += inc;
                }
                acc
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Vector::zeros(r * dim), |a, b| a + b);
        transpose_vec(&acc, r, dim)
    });

    let start = vec_of(&factors.v);
    let solution = conjugate_gradient(&operator, &rhs, &start, cg_iters)
        .map_err(|e| e.in_context("lagged factor update (V)"))?;
    Ok(unvec(&solution, dim, r))
}

/// Reinterpret a column-major `rows x cols` vectorization as the
/// vectorization of the transposed matrix.
fn transpose_vec(flat: &Vector, rows: usize, cols: usize) -> Vector {
    vec_of(&unvec(flat, rows, cols).transpose())
}

/// Design matrix `M_t = W G (I_R ⊗ V'z_t)` of the temporal subproblem,
/// assembled blockwise without forming the Kronecker product.
pub(super) fn design_at(factors: &FactorSet, z: &Vector) -> Matrix {
    let r = factors.rank;
    let u = factors.v.tr_mul(z);
    let mut mid = Matrix::zeros(r, r);
    for j in 0..r {
        let block = factors.g.view((0, j * r), (r, r));
        mid.set_column(j, &(block * &u));
    }
    &factors.w * mid
}

/// Temporal update: each row solves its own least-squares problem
/// `x_t = M_t^+ y_t` through a minimum-norm SVD solve. Steps are mutually
/// independent, so they run in parallel with per-step determinism.
pub fn update_x(factors: &FactorSet, pairs: &LagPairs) -> Result<Matrix> {
    let count = pairs.count();
    let rows: Vec<Vector> = (0..count)
        .into_par_iter()
        .map(|t| {
            let m_t = design_at(factors, &pairs.regressor(t).into_owned());
            lstsq_min_norm(&m_t, &pairs.target(t).into_owned()).expect("validated shapes")
        })
        .collect();
    let mut x = Matrix::zeros(count, factors.rank);
    for (t, row) in rows.into_iter().enumerate() {
        x.row_mut(t).copy_from(&row.transpose());
    }
    Ok(x)
}
