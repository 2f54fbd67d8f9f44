//! Exact dynamic mode decomposition baseline.
//!
//! DMD fits one time-invariant linear map between successive snapshots and
//! reads its spectrum through a rank-truncated SVD. It is the natural
//! comparison point for the time-varying model: each DMD mode carries a
//! single fixed frequency for the whole series.

use crate::error::{Error, Result};
use crate::linalg::truncated_svd;
use crate::{Matrix, TimeSeriesMatrix};
use num_complex::Complex64;

type CMatrix = nalgebra::DMatrix<Complex64>;
type CVector = nalgebra::DVector<Complex64>;

/// Rank-truncated DMD of a time series.
#[derive(Debug, Clone)]
pub struct DmdResult {
    pub rank: usize,
    /// Eigenvalues of the reduced map, ordered by nonincreasing magnitude
    /// with complex-conjugate pairs adjacent (positive imaginary part first).
    pub eigenvalues: Vec<Complex64>,
    /// Spatial modes, `N x R`.
    pub modes: CMatrix,
    /// Mode amplitudes fitted against the first snapshot.
    pub amplitudes: Vec<Complex64>,
    /// Per-step mode activations, `(T-1) x R`; row `t` reconstructs snapshot
    /// `t+2` of the input as `modes * temporal.row(t)'`.
    pub temporal: CMatrix,
}

/// Growth rate and frequency of one DMD mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFrequency {
    /// `ln|lambda| / dt`; negative infinity for a zero eigenvalue.
    pub growth_rate: f64,
    /// `arg(lambda) / (2 pi dt)` in cycles per unit time.
    pub frequency: f64,
}

/// Exact DMD: split the series into leading and trailing snapshot matrices,
/// project the one-step map onto the leading `rank` left singular vectors,
/// and eigendecompose the reduced map.
pub fn fit_dmd(series: &TimeSeriesMatrix, rank: usize) -> Result<DmdResult> {
    let n = series.num_vars();
    let t = series.num_steps();
    if rank < 1 || rank > n.min(t - 1) {
        return Err(Error::Parameter(format!(
            "dmd rank {rank} out of range 1..={}",
            n.min(t - 1)
        )));
    }
    let s = series.values();
    let s1 = s.columns(0, t - 1).into_owned();
    let s2 = s.columns(1, t - 1).into_owned();

    let svd = truncated_svd(&s1, rank)?;
    let tiny = (t - 1).max(n) as f64 * f64::EPSILON * svd.singular_values[0];
    if svd.singular_values.iter().any(|&sv| sv <= tiny) {
        return Err(Error::Singular(format!(
            "dmd truncation: singular value within the first {rank} is numerically zero; \
             choose a smaller rank"
        )));
    }

    // Right singular vectors scaled by 1/sigma.
    let mut v_scaled = svd.vt.transpose();
    for j in 0..rank {
        v_scaled.column_mut(j).scale_mut(1.0 / svd.singular_values[j]);
    }
    let s2_proj = &s2 * &v_scaled; // N x R
    let reduced = svd.u.transpose() * &s2_proj; // R x R

    let (eigenvalues, eigenvectors) = eig_real_matrix(&reduced)?;

    // Exact-DMD modes: S2 V S^-1 W_eig.
    let s2_proj_c = complexify(&s2_proj);
    let modes = &s2_proj_c * &eigenvectors;

    // Amplitudes against the first snapshot: b = modes^+ s_1.
    let s1_first: CVector = CVector::from_fn(n, |i, _| Complex64::new(s[(i, 0)], 0.0));
    let amplitudes = complex_lstsq(&modes, &s1_first)?;

    // temporal[t, k] = b_k lambda_k^(t+1), aligned with the trailing snapshots.
    let steps = t - 1;
    let mut temporal = CMatrix::zeros(steps, rank);
    for k in 0..rank {
        let mut power = eigenvalues[k];
        for row in 0..steps {
            temporal[(row, k)] = amplitudes[k] * power;
            power *= eigenvalues[k];
        }
    }

    Ok(DmdResult {
        rank,
        eigenvalues,
        modes,
        amplitudes,
        temporal,
    })
}

/// Continuous-time growth rate and frequency of each mode for a sampling
/// interval `dt`.
pub fn dmd_frequency_report(result: &DmdResult, dt: f64) -> Result<Vec<ModeFrequency>> {
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("dt {dt} must be positive")));
    }
    Ok(result
        .eigenvalues
        .iter()
        .map(|l| ModeFrequency {
            growth_rate: l.norm().ln() / dt,
            frequency: l.arg() / (2.0 * std::f64::consts::PI * dt),
        })
        .collect())
}

fn complexify(m: &Matrix) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| Complex64::new(m[(i, j)], 0.0))
}

/// Eigendecomposition of a small real matrix with complex eigenvectors.
///
/// Eigenvalues come from the real Schur form (exact conjugate pairs);
/// eigenvectors are recovered as null-space directions of `A - lambda I`
/// via a complex SVD, reusing the conjugate for the paired eigenvalue.
/// Output ordering: magnitude descending, then real part descending, then
/// positive imaginary part first.
fn eig_real_matrix(a: &Matrix) -> Result<(Vec<Complex64>, CMatrix)> {
    let r = a.nrows();
    let mut eigenvalues: Vec<Complex64> = a.complex_eigenvalues().iter().cloned().collect();
    eigenvalues.sort_by(|p, q| {
        (q.norm(), q.re, q.im)
            .partial_cmp(&(p.norm(), p.re, p.im))
            .expect("finite eigenvalues")
    });

    let a_c = complexify(a);
    let mut vectors = CMatrix::zeros(r, r);
    let mut assigned = vec![false; r];
    let mut i = 0;
    while i < r {
        // Group eigenvalues that coincide within round-off; each group gets
        // as many null-space directions as its size.
        let lambda = eigenvalues[i];
        let mut group_end = i + 1;
        while group_end < r && (eigenvalues[group_end] - lambda).norm() <= 1e-12 * lambda.norm().max(1.0)
        {
            group_end += 1;
        }
        let group = group_end - i;

        if lambda.im < 0.0 {
            // Conjugate of an already-solved eigenvalue: reuse its vectors.
            for k in 0..group {
                let partner = find_conjugate(&eigenvalues, &assigned, lambda, k);
                vectors.set_column(i + k, &vectors.column(partner).map(|c| c.conj()));
                assigned[i + k] = true;
            }
        } else {
            let shifted = &a_c
                - CMatrix::from_diagonal_element(r, r, lambda);
            let null = null_space(&shifted, group)?;
            for k in 0..group {
                vectors.set_column(i + k, &normalize_phase(&null.column(k).into_owned()));
                assigned[i + k] = true;
            }
        }
        i = group_end;
    }
    Ok((eigenvalues, vectors))
}

/// Index of the already-assigned eigenvalue conjugate to `lambda`,
/// skipping `skip` earlier matches inside a repeated group.
fn find_conjugate(eigenvalues: &[Complex64], assigned: &[bool], lambda: Complex64, skip: usize) -> usize {
    let target = lambda.conj();
    let mut seen = 0;
    for (idx, (e, done)) in eigenvalues.iter().zip(assigned).enumerate() {
        if *done && (e - target).norm() <= 1e-12 * target.norm().max(1.0) {
            if seen == skip {
                return idx;
            }
            seen += 1;
        }
    }
    panic!("conjugate eigenvalue not found; Schur of a real matrix pairs conjugates exactly");
}

/// Orthonormal basis of the (numerical) null space: the right singular
/// vectors of the `count` smallest singular values.
fn null_space(m: &CMatrix, count: usize) -> Result<CMatrix> {
    let r = m.nrows();
    let svd = m.clone().svd(true, true);
    let vt = svd.v_t.expect("svd requested v_t");
    let mut out = CMatrix::zeros(r, count);
    for k in 0..count {
        out.set_column(k, &vt.row(r - 1 - k).transpose().map(|c| c.conj()));
    }
    Ok(out)
}

/// Rotate a complex vector so its largest entry is real and positive;
/// keeps eigenvector output deterministic.
fn normalize_phase(v: &CVector) -> CVector {
    let mut idx = 0;
    let mut best = -1.0;
    for (i, c) in v.iter().enumerate() {
        if c.norm() > best {
            best = c.norm();
            idx = i;
        }
    }
    if best <= 0.0 {
        return v.clone();
    }
    let phase = v[idx] / v[idx].norm();
    v.map(|c| c / phase)
}

/// Minimum-norm complex least squares through an SVD.
fn complex_lstsq(m: &CMatrix, rhs: &CVector) -> Result<Vec<Complex64>> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u");
    let vt = svd.v_t.as_ref().expect("v_t");
    let s = &svd.singular_values;
    let s_max = s.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * s_max;
    let mut coeffs = u.adjoint() * rhs;
    for i in 0..s.len() {
        coeffs[i] = if s[i] <= cutoff {
            Complex64::new(0.0, 0.0)
        } else {
            coeffs[i] / s[i]
        };
    }
    let solution = vt.adjoint() * coeffs;
    Ok(solution.iter().cloned().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Matrix, Vector};

    fn rollout(a: &Matrix, s0: &Vector, steps: usize) -> TimeSeriesMatrix {
        let n = s0.len();
        let mut s = Matrix::zeros(n, steps);
        s.set_column(0, s0);
        for t in 1..steps {
            let next = a * s.column(t - 1);
            s.set_column(t, &next);
        }
        TimeSeriesMatrix::new(s).unwrap()
    }

    #[test]
    fn diagonal_system_eigenvalues_recovered() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![0.9, 0.5]));
        let series = rollout(&a, &Vector::from_vec(vec![1.0, 2.0]), 30);
        let result = fit_dmd(&series, 2).unwrap();
        assert!((result.eigenvalues[0] - Complex64::new(0.9, 0.0)).norm() < 1e-8);
        assert!((result.eigenvalues[1] - Complex64::new(0.5, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn constant_series_gives_unit_eigenvalue() {
        let n = 4;
        let s0 = Vector::from_fn(n, |i, _| 1.0 + i as f64);
        let series = rollout(&Matrix::identity(n, n), &s0, 12);
        let result = fit_dmd(&series, 1).unwrap();
        assert!((result.eigenvalues[0] - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn rotation_spectrum_comes_in_conjugate_pairs() {
        let theta = 0.35f64;
        let rot = Matrix::from_row_slice(
            2,
            2,
            &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()],
        ) * 0.98;
        let series = rollout(&rot, &Vector::from_vec(vec![1.0, 0.2]), 60);
        let result = fit_dmd(&series, 2).unwrap();
        let l0 = result.eigenvalues[0];
        let l1 = result.eigenvalues[1];
        assert!(l0.im > 0.0, "positive imaginary part first, got {l0}");
        assert!((l0.conj() - l1).norm() < 1e-10);
        assert!((l0.norm() - 0.98).abs() < 1e-8);
        assert!((l0.arg() - theta).abs() < 1e-8);
        // Modes of a real series pair up by conjugation as well.
        let pair_defect = (result.modes.column(0).map(|c| c.conj()) - result.modes.column(1)).norm();
        assert!(pair_defect < 1e-10);
    }

    #[test]
    fn reconstruction_matches_trailing_snapshots() {
        // Rank-2 map on a 5-variable space.
        let mut a = Matrix::zeros(5, 5);
        let u1 = Vector::from_fn(5, |i, _| ((i + 1) as f64 * 0.6).sin());
        let u2 = Vector::from_fn(5, |i, _| ((i as f64) - 2.0) / 3.0);
        a.ger(0.9 / u1.norm_squared(), &u1, &u1, 1.0);
        a.ger(0.5 / u2.norm_squared(), &u2, &u2, 1.0);
        let s0 = &u1 * 1.5 + &u2 * 0.5;
        let series = rollout(&a, &s0, 25);

        let result = fit_dmd(&series, 2).unwrap();
        let s = series.values();
        let s2 = s.columns(1, s.ncols() - 1);
        let recon = &result.modes * result.temporal.transpose();
        let mut err = 0.0f64;
        for j in 0..s2.ncols() {
            for i in 0..s2.nrows() {
                err += (recon[(i, j)] - Complex64::new(s2[(i, j)], 0.0)).norm_sqr();
            }
        }
        let rel = err.sqrt() / s2.norm();
        assert!(rel < 1e-6, "reconstruction error {rel}");
    }

    #[test]
    fn rank_beyond_numerical_rank_is_rejected() {
        // Rank-1 data cannot support a rank-2 truncation.
        let u = Vector::from_vec(vec![1.0, -2.0, 0.5]);
        let mut a = Matrix::zeros(3, 3);
        a.ger(0.8 / u.norm_squared(), &u, &u, 1.0);
        let series = rollout(&a, &u, 10);
        match fit_dmd(&series, 2) {
            Err(Error::Singular(msg)) => assert!(msg.contains("smaller rank"), "{msg}"),
            other => panic!("expected rank failure, got {other:?}"),
        }
        assert!(fit_dmd(&series, 0).is_err());
    }

    #[test]
    fn frequency_report_trivial_values() {
        let result = DmdResult {
            rank: 2,
            eigenvalues: vec![
                Complex64::new(1.0, 0.0),
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * 0.1),
            ],
            modes: CMatrix::zeros(1, 2),
            amplitudes: vec![Complex64::new(0.0, 0.0); 2],
            temporal: CMatrix::zeros(1, 2),
        };
        let report = dmd_frequency_report(&result, 1.0).unwrap();
        assert_eq!(report[0].frequency, 0.0);
        assert_eq!(report[0].growth_rate, 0.0);
        assert!((report[1].frequency - 0.1).abs() < 1e-12);

        let zero = DmdResult {
            eigenvalues: vec![Complex64::new(0.0, 0.0)],
            rank: 1,
            modes: CMatrix::zeros(1, 1),
            amplitudes: vec![Complex64::new(0.0, 0.0)],
            temporal: CMatrix::zeros(1, 1),
        };
        let report = dmd_frequency_report(&zero, 1.0).unwrap();
        assert_eq!(report[0].growth_rate, f64::NEG_INFINITY);
        assert!(dmd_frequency_report(&zero, 0.0).is_err());
    }
}
