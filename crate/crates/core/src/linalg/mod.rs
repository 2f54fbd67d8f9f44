//! Dense linear-algebra kernels shared by the model, the baseline and the
//! generators.
//!
//! Everything here is a pure function of its inputs. The Kronecker-aware
//! kernels live in [`kron`]; no full-size Kronecker product is ever
//! materialized outside of the reference oracles.

mod cg;
mod kron;

pub use cg::{conjugate_gradient, FnOperator, LinearOperator};
pub use kron::{kron_apply_vt_z, kron_apply_zx_i, unvec, vec_of};

use crate::error::{Error, Result};
use crate::{Matrix, Vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Rank-truncated singular value decomposition `M ≈ U diag(s) Vt`.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// `rows × rank`, orthonormal columns ordered by nonincreasing singular value.
    pub u: Matrix,
    /// The `rank` leading singular values, nonincreasing.
    pub singular_values: Vector,
    /// `rank × cols`.
    pub vt: Matrix,
}

fn check_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Data(format!("{what} contains NaN or infinite entries")))
    }
}

/// Matrices at or below this minimum dimension go through the exact dense
/// SVD; larger ones use seeded randomized subspace iteration.
const DENSE_SVD_LIMIT: usize = 256;

/// Leading-`rank` singular triplets of a dense matrix.
///
/// Columns of `u` follow a fixed sign convention (the entry of largest
/// magnitude in each column is nonnegative) so results are deterministic.
/// Small problems are solved exactly; large ones by randomized subspace
/// iteration with a fixed internal seed, which is deterministic as well.
pub fn truncated_svd(m: &Matrix, rank: usize) -> Result<TruncatedSvd> {
    let (rows, cols) = m.shape();
    let max_rank = rows.min(cols);
    if rank == 0 || rank > max_rank {
        return Err(Error::Parameter(format!(
            "svd rank {rank} out of range 1..={max_rank} for a {rows}x{cols} matrix"
        )));
    }
    check_finite(m, "svd input")?;

    let mut out = if max_rank <= DENSE_SVD_LIMIT {
        dense_truncated_svd(m, rank)
    } else {
        randomized_truncated_svd(m, rank)
    };
    apply_sign_convention(&mut out);
    Ok(out)
}

fn dense_truncated_svd(m: &Matrix, rank: usize) -> TruncatedSvd {
    // nalgebra sorts singular values in descending order.
    let svd = m.clone().svd(true, true);
    let u_full = svd.u.expect("svd requested u");
    let vt_full = svd.v_t.expect("svd requested v_t");
    TruncatedSvd {
        u: u_full.columns(0, rank).into_owned(),
        singular_values: svd.singular_values.rows(0, rank).into_owned(),
        vt: vt_full.rows(0, rank).into_owned(),
    }
}

/// Halko-style randomized range finder with power iterations. The sketch
/// seed is fixed so repeated calls give identical output.
fn randomized_truncated_svd(m: &Matrix, rank: usize) -> TruncatedSvd {
    const OVERSAMPLE: usize = 10;
    const POWER_ITERS: usize = 3;
    let (rows, cols) = m.shape();
    let sketch = (rank + OVERSAMPLE).min(rows.min(cols));

    let mut rng = ChaCha8Rng::seed_from_u64(0x7653_5664_5f52_4e47);
    let gauss = Matrix::from_fn(cols, sketch, |_, _| StandardNormal.sample(&mut rng));

    let mut q = orthonormal_basis(&(m * gauss));
    for _ in 0..POWER_ITERS {
        let z = orthonormal_basis(&(m.transpose() * &q));
        q = orthonormal_basis(&(m * z));
    }

    // Project to the sketch space and solve the small problem exactly.
    let b = q.transpose() * m;
    let small = b.svd(true, true);
    let u_b = small.u.expect("svd requested u");
    let vt_b = small.v_t.expect("svd requested v_t");
    TruncatedSvd {
        u: (&q * u_b.columns(0, rank)).into_owned(),
        singular_values: small.singular_values.rows(0, rank).into_owned(),
        vt: vt_b.rows(0, rank).into_owned(),
    }
}

fn orthonormal_basis(m: &Matrix) -> Matrix {
    let qr = m.clone().qr();
    let (q, r) = (qr.q(), qr.r());
    // Fix the QR sign ambiguity so the basis is a deterministic function of
    // the input: force nonnegative diagonal of R.
    let mut q = q;
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn apply_sign_convention(svd: &mut TruncatedSvd) {
    for j in 0..svd.u.ncols() {
        let col = svd.u.column(j);
        let mut idx = 0;
        let mut best = -1.0f64;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                idx = i;
            }
        }
        if svd.u[(idx, j)] < 0.0 {
            svd.u.column_mut(j).neg_mut();
            svd.vt.row_mut(j).neg_mut();
        }
    }
}

/// Moore-Penrose pseudo-inverse via SVD truncation.
///
/// Singular values at or below `tol` are treated as zero; `None` uses
/// `max(rows, cols) * machine_eps * s_max`.
pub fn pseudo_inverse(m: &Matrix, tol: Option<f64>) -> Result<Matrix> {
    if let Some(t) = tol {
        if !(t >= 0.0) {
            return Err(Error::Parameter(format!("pseudo-inverse tolerance {t} must be >= 0")));
        }
    }
    check_finite(m, "pseudo-inverse input")?;

    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd requested u");
    let vt = svd.v_t.expect("svd requested v_t");
    let s = &svd.singular_values;
    let s_max = s.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = tol.unwrap_or_else(|| m.nrows().max(m.ncols()) as f64 * f64::EPSILON * s_max);

    // M+ = V diag(1/s) U'
    let k = s.len();
    let mut scaled_ut = u.transpose();
    for i in 0..k {
        let inv = if s[i] <= cutoff { 0.0 } else { 1.0 / s[i] };
        scaled_ut.row_mut(i).scale_mut(inv);
    }
    Ok(vt.transpose() * scaled_ut)
}

/// Solve `(A + ridge*I) X = B` for symmetric positive (semi)definite `A`
/// through a Cholesky factorization.
pub fn solve_ridge(a: &Matrix, b: &Matrix, ridge: f64) -> Result<Matrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::Parameter(format!(
            "solve_ridge needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.nrows() != a.nrows() {
        return Err(Error::Parameter(format!(
            "solve_ridge dimension mismatch: A is {}x{} but B has {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    if !(ridge >= 0.0) {
        return Err(Error::Parameter(format!("ridge {ridge} must be >= 0")));
    }
    check_finite(a, "solve_ridge A")?;
    check_finite(b, "solve_ridge B")?;
    debug_assert!(symmetry_defect(a) <= 1e-10, "solve_ridge expects a symmetric matrix");

    let mut regularized = a.clone();
    for i in 0..regularized.nrows() {
        regularized[(i, i)] += ridge;
    }
    match regularized.cholesky() {
        Some(chol) => Ok(chol.solve(b)),
        None => Err(Error::Singular("solve_ridge factorization".into())),
    }
}

/// Relative off-symmetry `max |A - A'| / max(1, max |A|)`.
fn symmetry_defect(a: &Matrix) -> f64 {
    let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst / scale
}

/// Minimum-norm least-squares solution `x = M+ rhs` without materializing
/// the pseudo-inverse. Rank deficiency is handled by truncating singular
/// values at the default pseudo-inverse tolerance.
pub fn lstsq_min_norm(m: &Matrix, rhs: &Vector) -> Result<Vector> {
    if rhs.len() != m.nrows() {
        return Err(Error::Parameter(format!(
            "lstsq dimension mismatch: matrix is {}x{} but rhs has length {}",
            m.nrows(),
            m.ncols(),
            rhs.len()
        )));
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd requested u");
    let vt = svd.v_t.as_ref().expect("svd requested v_t");
    let s = &svd.singular_values;
    let s_max = s.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * s_max;

    let mut coeffs = u.transpose() * rhs;
    for i in 0..s.len() {
        coeffs[i] = if s[i] <= cutoff { 0.0 } else { coeffs[i] / s[i] };
    }
    Ok(vt.transpose() * coeffs)
}
