//! Kronecker-structure kernels.
//!
//! The model only ever needs two contractions involving Kronecker products,
//! and both collapse to small dense operations once vectorization is fixed
//! as column-major (`vec` stacks columns). These kernels are the reason no
//! `R^2 x dN` or `dN*R x dN*R` matrix is ever formed during fitting.

use crate::error::{Error, Result};
use crate::{Matrix, Vector};

/// Column-major vectorization: stack the columns of `m`.
pub fn vec_of(m: &Matrix) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`]: reshape a length `rows*cols` vector into a matrix,
/// filling column by column.
pub fn unvec(v: &Vector, rows: usize, cols: usize) -> Matrix {
    assert_eq!(v.len(), rows * cols, "unvec length mismatch");
    Matrix::from_column_slice(rows, cols, v.as_slice())
}

/// Computes `(x' ⊗ V)' z = vec(V' z x')` in `O(dN*R + R^2)`.
///
/// `x` has length `R`, `V` is `dN x R`, `z` has length `dN`; the result has
/// length `R^2` with the `V`-column index varying fastest.
pub fn kron_apply_vt_z(x: &Vector, v: &Matrix, z: &Vector) -> Result<Vector> {
    let rank = x.len();
    if v.ncols() != rank {
        return Err(Error::Parameter(format!(
            "kron_apply_vt_z: V has {} columns but x has length {rank}",
            v.ncols()
        )));
    }
    if v.nrows() != z.len() {
        return Err(Error::Parameter(format!(
            "kron_apply_vt_z: V has {} rows but z has length {}",
            v.nrows(),
            z.len()
        )));
    }
    let u = v.tr_mul(z); // V' z
    let mut out = Vector::zeros(rank * rank);
    for j in 0..rank {
        let xj = x[j];
        for i in 0..rank {
            out[i + j * rank] = u[i] * xj;
        }
    }
    Ok(out)
}

/// Computes `((z x') ⊗ I_R) vec(Y) = vec((Y x) z')` in `O(dN*R + R^2)`.
///
/// `Y` is the `R x R` matrix stored column-major in `y_vec`; the result is
/// the column-major vectorization of the `R x dN` matrix `(Y x) z'`.
pub fn kron_apply_zx_i(z: &Vector, x: &Vector, y_vec: &Vector) -> Result<Vector> {
    let rank = x.len();
    if y_vec.len() != rank * rank {
        return Err(Error::Parameter(format!(
            "kron_apply_zx_i: y_vec has length {} but expected {}",
            y_vec.len(),
            rank * rank
        )));
    }
    // w = Y x without reshaping y_vec.
    let mut w = Vector::zeros(rank);
    for j in 0..rank {
        let xj = x[j];
        for i in 0..rank {
            w[i] += y_vec[i + j * rank] * xj;
        }
    }
    let dim = z.len();
    let mut out = Vector::zeros(rank * dim);
    for j in 0..dim {
        let zj = z[j];
        for i in 0..rank {
            out[i + j * rank] = w[i] * zj;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn randv(rng: &mut ChaCha8Rng, n: usize) -> Vector {
        Vector::from_fn(n, |_, _| StandardNormal.sample(rng))
    }

    fn randm(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
    }

    #[test]
    fn vt_z_rank_one() {
        let v = Matrix::from_column_slice(4, 1, &[1.0, 2.0, -1.0, 0.5]);
        let z = Vector::from_vec(vec![2.0, 0.0, 1.0, -2.0]);
        let x = Vector::from_vec(vec![1.0]);
        let out = kron_apply_vt_z(&x, &v, &z).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0] - v.column(0).dot(&z)).abs() < 1e-15);
    }

    #[test]
    fn vt_z_zero_x_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = randm(&mut rng, 6, 3);
        let z = randv(&mut rng, 6);
        let out = kron_apply_vt_z(&Vector::zeros(3), &v, &z).unwrap();
        assert!(out.norm() == 0.0);
    }

    #[test]
    fn vt_z_matches_dense_materialization() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = randm(&mut rng, 7, 3);
        let z = randv(&mut rng, 7);
        let x = randv(&mut rng, 3);
        let fast = kron_apply_vt_z(&x, &v, &z).unwrap();
        let dense = oracle::kron_vt_z_dense(&x, &v, &z);
        assert!((fast - dense).amax() < 1e-12);
    }

    #[test]
    fn zx_i_basis_case() {
        let rank = 3;
        let dim = 4;
        let y = Matrix::identity(rank, rank);
        let z = Vector::from_fn(dim, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let x = Vector::from_fn(rank, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let out = kron_apply_zx_i(&z, &x, &vec_of(&y)).unwrap();
        let m = unvec(&out, rank, dim);
        // The only nonzero column is Y's first column, placed at position 1.
        for j in 0..dim {
            for i in 0..rank {
                let want = if j == 0 && i == 0 { 1.0 } else { 0.0 };
                assert_eq!(m[(i, j)], want);
            }
        }
    }

    #[test]
    fn zx_i_zero_x_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let y = randm(&mut rng, 2, 2);
        let z = randv(&mut rng, 6);
        let out = kron_apply_zx_i(&z, &Vector::zeros(2), &vec_of(&y)).unwrap();
        assert!(out.norm() == 0.0);
    }

    #[test]
    fn zx_i_matches_dense_materialization() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let y = randm(&mut rng, 2, 2);
        let z = randv(&mut rng, 6);
        let x = randv(&mut rng, 2);
        let fast = kron_apply_zx_i(&z, &x, &vec_of(&y)).unwrap();
        let dense = oracle::kron_zx_i_dense(&z, &x, &vec_of(&y));
        assert!((fast - dense).amax() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_parameter_error() {
        let v = Matrix::zeros(4, 2);
        let z = Vector::zeros(3);
        let x = Vector::zeros(2);
        assert!(matches!(kron_apply_vt_z(&x, &v, &z), Err(crate::Error::Parameter(_))));
        let y = Vector::zeros(3);
        assert!(matches!(kron_apply_zx_i(&z, &x, &y), Err(crate::Error::Parameter(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn kernels_agree_with_dense_kron(seed in 0u64..10_000, dim in 1usize..13, rank in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = randm(&mut rng, dim, rank);
            let z = randv(&mut rng, dim);
            let x = randv(&mut rng, rank);
            let y = randm(&mut rng, rank, rank);

            let a = kron_apply_vt_z(&x, &v, &z).unwrap();
            let a_ref = oracle::kron_vt_z_dense(&x, &v, &z);
            prop_assert!((a - a_ref).amax() < 1e-12);

            let b = kron_apply_zx_i(&z, &x, &vec_of(&y)).unwrap();
            let b_ref = oracle::kron_zx_i_dense(&z, &x, &vec_of(&y));
            prop_assert!((b - b_ref).amax() < 1e-12);
        }

        #[test]
        fn vec_unvec_roundtrip(seed in 0u64..1000, rows in 1usize..8, cols in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = randm(&mut rng, rows, cols);
            prop_assert_eq!(unvec(&vec_of(&m), rows, cols), m);
        }
    }
}
