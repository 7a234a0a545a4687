//! Small dense Levenberg–Marquardt solver shared by the phase-space and
//! step-response fits.

use nalgebra::{DMatrix, DVector};

use crate::scalar::{lit, Real};

#[derive(Clone, Copy, Debug)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop when the relative cost decrease of an accepted step falls below this.
    pub ftol: f64,
    /// Stop when the step is this small relative to the parameters.
    pub xtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            ftol: 1e-14,
            xtol: 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LmResult<T: Real> {
    pub params: DVector<T>,
    /// Sum of squared residuals.
    pub cost: T,
    pub residual_count: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Real> LmResult<T> {
    pub fn rms(&self) -> T {
        if self.residual_count == 0 {
            return T::zero();
        }
        (self.cost / lit(self.residual_count as f64)).sqrt()
    }
}

/// Minimizes `Σ r_i(p)²`. `model(p)` returns the residual vector and its
/// Jacobian (rows = residuals); `project` may clamp a trial point into the
/// admissible region.
pub fn levenberg_marquardt<T, F, P>(mut model: F, project: P, p0: DVector<T>, opts: &LmOptions) -> LmResult<T>
where
    T: Real,
    F: FnMut(&DVector<T>) -> (DVector<T>, DMatrix<T>),
    P: Fn(&mut DVector<T>),
{
    let mut p = p0;
    project(&mut p);
    let (mut r, mut jac) = model(&p);
    let mut cost = r.norm_squared();
    let mut lambda: T = lit(1e-3);
    let ftol: T = lit(opts.ftol);
    let xtol: T = lit(opts.xtol);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * &r;
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                let d = jtj[(i, i)];
                a[(i, i)] = d + lambda * (if d > T::zero() { d } else { T::one() });
            }
            let Some(chol) = a.cholesky() else {
                lambda *= lit(10.0);
                continue;
            };
            let step = -chol.solve(&grad);
            let mut trial = &p + &step;
            project(&mut trial);
            let (rt, jt_new) = model(&trial);
            let ct = rt.norm_squared();
            if ct.is_finite() && ct <= cost {
                let small_step = (&trial - &p).norm() <= xtol * (p.norm() + xtol);
                let small_gain = cost - ct <= ftol * cost;
                p = trial;
                r = rt;
                jac = jt_new;
                cost = ct;
                lambda = (lambda * lit(0.3)).max(lit(1e-12));
                accepted = true;
                if small_step || small_gain {
                    converged = true;
                }
                break;
            }
            lambda *= lit(10.0);
        }
        if !accepted {
            // no descent direction left at any damping: a stationary point
            converged = true;
        }
        if converged {
            break;
        }
    }
    LmResult {
        params: p,
        cost,
        residual_count: r.len(),
        iterations,
        converged,
    }
}
