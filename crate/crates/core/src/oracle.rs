//! Independent reference computations.
//!
//! Everything in this module recomputes a quantity along a deliberately
//! different route than the production code: Kronecker products are
//! materialized in full, least-squares problems are stacked and solved
//! densely, and the Tucker contraction is a literal triple loop. The
//! evaluation suite and the tests compare the fast paths against these.
//! None of this is meant for large inputs.

use crate::linalg::unvec;
use crate::tvvar::FactorSet;
use crate::{LagPairs, Matrix, Vector};

/// Textbook dense Kronecker product `a ⊗ b`.
pub fn dense_kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = Matrix::zeros(ar * br, ac * bc);
    for ia in 0..ar {
        for ja in 0..ac {
            let scale = a[(ia, ja)];
            for ib in 0..br {
                for jb in 0..bc {
                    out[(ia * br + ib, ja * bc + jb)] = scale * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// `(x' ⊗ V)' z` with the Kronecker factor materialized.
pub fn kron_vt_z_dense(x: &Vector, v: &Matrix, z: &Vector) -> Vector {
    let x_row = Matrix::from_row_slice(1, x.len(), x.as_slice());
    let k = dense_kron(&x_row, v);
    k.transpose() * z
}

/// `((z x') ⊗ I_R) vec(Y)` with the Kronecker factor materialized.
pub fn kron_zx_i_dense(z: &Vector, x: &Vector, y_vec: &Vector) -> Vector {
    let rank = x.len();
    let zx = Matrix::from_fn(z.len(), rank, |i, j| z[i] * x[j]);
    let k = dense_kron(&zx, &Matrix::identity(rank, rank));
    &k * y_vec
}

/// Coefficient matrix at pair index `t_idx` by a literal triple-loop
/// contraction of the core tensor with the three factors.
pub fn coefficient_dense(factors: &FactorSet, t_idx: usize) -> Matrix {
    let n = factors.w.nrows();
    let dim = factors.v.nrows();
    let r = factors.rank;
    let mut out = Matrix::zeros(n, dim);
    for i in 0..n {
        for m in 0..dim {
            let mut acc = 0.0;
            for k1 in 0..r {
                for k2 in 0..r {
                    for k3 in 0..r {
                        acc += factors.g[(k1, k2 + r * k3)]
                            * factors.w[(i, k1)]
                            * factors.v[(m, k2)]
                            * factors.x[(t_idx, k3)];
                    }
                }
            }
            out[(i, m)] = acc;
        }
    }
    out
}

/// Singular values of `m` recovered from an eigendecomposition of the Gram
/// matrix `M'M`, sorted nonincreasing.
pub fn singular_values_via_gram(m: &Matrix) -> Vec<f64> {
    let gram = m.transpose() * m;
    let eig = gram.symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    vals
}

/// Worst violation of the four Penrose conditions for a candidate
/// pseudo-inverse `p` of `m`.
pub fn penrose_defect(m: &Matrix, p: &Matrix) -> f64 {
    let mpm = m * p * m;
    let pmp = p * m * p;
    let mp = m * p;
    let pm = p * m;
    [
        (&mpm - m).amax(),
        (&pmp - p).amax(),
        (&mp - mp.transpose()).amax(),
        (&pm - pm.transpose()).amax(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// SVD-based least squares `argmin_X ||A X - B||_F`, used as the slow route
/// around the production normal-equation solves.
pub fn lstsq_dense(a: &Matrix, b: &Matrix) -> Matrix {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u");
    let vt = svd.v_t.as_ref().expect("v_t");
    let s = &svd.singular_values;
    let s_max = s.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = a.nrows().max(a.ncols()) as f64 * f64::EPSILON * s_max;
    let mut coeffs = u.transpose() * b;
    for i in 0..s.len() {
        let inv = if s[i] <= cutoff { 0.0 } else { 1.0 / s[i] };
        coeffs.row_mut(i).scale_mut(inv);
    }
    vt.transpose() * coeffs
}

/// Brute-force spatial-factor update: stack `min_W sum_t ||y_t - W b_t||^2`
/// as one least-squares problem over `W'` and solve it by SVD.
pub fn update_w_stacked(pairs: &LagPairs, factors: &FactorSet) -> Matrix {
    let count = pairs.count();
    let r = factors.rank;
    let mut b = Matrix::zeros(r, count);
    for t in 0..count {
        let c = kron_vt_z_dense(&factors.x_row(t), &factors.v, &pairs.regressor(t).into_owned());
        b.set_column(t, &(&factors.g * c));
    }
    // B' W' = Y'  =>  W = (lstsq solution)'
    let wt = lstsq_dense(&b.transpose(), &pairs.targets().transpose());
    wt.transpose()
}

/// Brute-force core update: solve `min_G sum_t ||y_t - (c_t' ⊗ W) vec(G)||^2`
/// with the design matrix stacked densely over all time steps.
pub fn update_g_vectorized(pairs: &LagPairs, factors: &FactorSet) -> Matrix {
    let count = pairs.count();
    let n = pairs.num_vars();
    let r = factors.rank;
    let unknowns = r * r * r;
    let mut design = Matrix::zeros(count * n, unknowns);
    let mut rhs = Vector::zeros(count * n);
    for t in 0..count {
        let c = kron_vt_z_dense(&factors.x_row(t), &factors.v, &pairs.regressor(t).into_owned());
        let c_row = Matrix::from_row_slice(1, c.len(), c.as_slice());
        let block = dense_kron(&c_row, &factors.w);
        design.rows_mut(t * n, n).copy_from(&block);
        rhs.rows_mut(t * n, n).copy_from(&pairs.target(t));
    }
    let g_vec = lstsq_dense(&design, &Matrix::from_column_slice(count * n, 1, rhs.as_slice()));
    unvec(&g_vec.column(0).into_owned(), r, r * r)
}

/// Dense assembly and solve of the linear system behind the lagged-factor
/// update, in `vec(V')` coordinates with every Kronecker factor materialized.
pub fn update_v_dense(pairs: &LagPairs, factors: &FactorSet) -> Matrix {
    let count = pairs.count();
    let r = factors.rank;
    let dim = pairs.regressor_dim();
    let size = dim * r;
    let h = factors.g.transpose() * (factors.w.transpose() * &factors.w) * &factors.g;
    let eye = Matrix::identity(r, r);

    let mut lhs = Matrix::zeros(size, size);
    let mut rhs = Vector::zeros(size);
    for t in 0..count {
        let z = pairs.regressor(t).into_owned();
        let x = factors.x_row(t);
        let zx = Matrix::from_fn(dim, r, |i, j| z[i] * x[j]);
        let left = dense_kron(&zx, &eye); // (z x') ⊗ I_R
        let right = dense_kron(&zx.transpose(), &eye); // (x z') ⊗ I_R
        lhs += &left * &h * &right;
        rhs += &left * (factors.g.transpose() * (factors.w.transpose() * pairs.target(t)));
    }
    let solved = lstsq_dense(&lhs, &Matrix::from_column_slice(size, 1, rhs.as_slice()));
    // Solution lives in vec(V') coordinates; reshape and transpose.
    unvec(&solved.column(0).into_owned(), r, dim).transpose()
}

/// Per-step temporal solve oracle: materialize `M_t = W G (I_R ⊗ V'z_t)`
/// through dense Kronecker products, solve by SVD least squares.
pub fn update_x_dense(pairs: &LagPairs, factors: &FactorSet) -> Matrix {
    let count = pairs.count();
    let r = factors.rank;
    let mut out = Matrix::zeros(count, r);
    for t in 0..count {
        let u = factors.v.tr_mul(&pairs.regressor(t).into_owned());
        let u_col = Matrix::from_column_slice(r, 1, u.as_slice());
        let mid = dense_kron(&Matrix::identity(r, r), &u_col);
        let m_t = &factors.w * &factors.g * mid;
        let sol = lstsq_dense(&m_t, &Matrix::from_column_slice(pairs.num_vars(), 1, pairs.target(t).as_slice()));
        out.row_mut(t).copy_from(&sol.column(0).transpose());
    }
    out
}
