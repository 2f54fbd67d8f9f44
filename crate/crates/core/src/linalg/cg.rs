//! Matrix-free conjugate gradient.

use crate::error::{Error, Result};
use crate::Vector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// A linear map given by its action on vectors.
pub trait LinearOperator {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn apply(&self, v: &Vector) -> Vector;
}

/// [`LinearOperator`] backed by a closure.
pub struct FnOperator<F: Fn(&Vector) -> Vector> {
    dim_in: usize,
    dim_out: usize,
    f: F,
}

impl<F: Fn(&Vector) -> Vector> FnOperator<F> {
    pub fn new(dim_in: usize, dim_out: usize, f: F) -> Self {
        Self { dim_in, dim_out, f }
    }

    pub fn square(dim: usize, f: F) -> Self {
        Self::new(dim, dim, f)
    }
}

impl<F: Fn(&Vector) -> Vector> LinearOperator for FnOperator<F> {
    fn dim_in(&self) -> usize {
        self.dim_in
    }

    fn dim_out(&self) -> usize {
        self.dim_out
    }

    fn apply(&self, v: &Vector) -> Vector {
        (self.f)(v)
    }
}

/// Relative residual threshold for early exit.
const EARLY_EXIT_REL: f64 = 1e-12;

/// Conjugate gradient for a symmetric positive semidefinite operator.
///
/// Runs at most `iters` iterations of the standard alpha/beta recurrences
/// starting from `x0`, exiting early once `||r|| <= 1e-12 ||rhs||`. Symmetry
/// and positive semidefiniteness of `op` are the caller's responsibility; a
/// randomized symmetry check runs in debug builds only. A zero curvature
/// `q' A q` with a nonzero residual is reported as breakdown.
pub fn conjugate_gradient(
    op: &dyn LinearOperator,
    rhs: &Vector,
    x0: &Vector,
    iters: usize,
) -> Result<Vector> {
    let n = rhs.len();
    if op.dim_in() != op.dim_out() {
        return Err(Error::Parameter(format!(
            "conjugate gradient needs a square operator, got {}x{}",
            op.dim_out(),
            op.dim_in()
        )));
    }
    if op.dim_in() != n || x0.len() != n {
        return Err(Error::Parameter(format!(
            "conjugate gradient dimension mismatch: operator {}, rhs {}, x0 {}",
            op.dim_in(),
            n,
            x0.len()
        )));
    }
    if iters == 0 {
        return Err(Error::Parameter("conjugate gradient needs iters >= 1".into()));
    }
    #[cfg(debug_assertions)]
    debug_check_symmetry(op, n);

    let rhs_norm = rhs.norm();
    let mut x = x0.clone();
    let mut r = rhs - op.apply(&x);
    let mut q = r.clone();
    let mut rr = r.dot(&r);

    for _ in 0..iters {
        if rr.sqrt() <= EARLY_EXIT_REL * rhs_norm {
            break;
        }
        let aq = op.apply(&q);
        let q_aq = q.dot(&aq);
        if q_aq <= 0.0 {
            return Err(Error::CgBreakdown(format!(
                "curvature q'Aq = {q_aq:.3e} with residual {:.3e}; operator is not positive definite on the search direction",
                rr.sqrt()
            )));
        }
        let alpha = rr / q_aq;
        x.axpy(alpha, &q, 1.0);
        r.axpy(-alpha, &aq, 1.0);
        let rr_next = r.dot(&r);
        let beta = rr_next / rr;
        q = &r + q * beta;
        rr = rr_next;
    }
    Ok(x)
}

/// Randomized check that `u' A v == v' A u` for one seeded pair.
#[cfg(debug_assertions)]
fn debug_check_symmetry(op: &dyn LinearOperator, n: usize) {
    if n == 0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5359_4d4d);
    let u = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    let v = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    let uav = u.dot(&op.apply(&v));
    let vau = v.dot(&op.apply(&u));
    let scale = uav.abs().max(vau.abs()).max(1.0);
    debug_assert!(
        (uav - vau).abs() <= 1e-8 * scale,
        "conjugate gradient operator is not symmetric: u'Av={uav}, v'Au={vau}"
    );
}
