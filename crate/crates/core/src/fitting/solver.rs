//! Levenberg-Marquardt least squares with a central-difference Jacobian.
//!
//! Minimizes `sum r_i(x)^2`. Damping follows Nielsen's update: after an
//! accepted step with gain ratio `rho` the damping shrinks by
//! `max(1/3, 1 - (2 rho - 1)^3)`; a rejected step multiplies it by a
//! doubling factor. Steps that would raise the cost are never accepted.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Converged once an accepted step satisfies `|dx| <= tol (|x| + tol)`.
    pub step_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Cost after the start point and after every accepted step.
    pub cost_trace: Vec<f64>,
    /// `(J^T J)^{-1}` at `x`, or `None` if singular.
    pub covariance: Option<DMatrix<f64>>,
}

fn cost_of(r: &DVector<f64>) -> f64 {
    let c = r.norm_squared();
    if c.is_finite() {
        c
    } else {
        f64::INFINITY
    }
}

/// Central-difference Jacobian; `scale[j]` sets the step floor for `x[j]`.
pub fn jacobian<F>(f: &F, x: &[f64], scale: &[f64], m: usize) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut jac = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let h = 1e-6 * x[j].abs().max(scale[j]);
        xp[j] = x[j] + h;
        let up = f(&xp);
        xp[j] = x[j] - h;
        let down = f(&xp);
        xp[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    jac
}

fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Some(ch.solve(b));
    }
    a.clone().lu().solve(b)
}

/// Runs the solver from `x0`. `project` maps any trial point back into the
/// feasible set (clamping, wrapping) before it is evaluated.
pub fn levenberg_marquardt<F, P>(f: F, project: P, x0: &[f64], scale: &[f64], opts: &LmOptions) -> LmOutcome
where
    F: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&mut [f64]),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x);
    let mut r = DVector::from_vec(f(&x));
    let m = r.len();
    let mut cost = cost_of(&r);
    let mut trace = vec![cost];
    let mut lambda: Option<f64> = None;
    let mut nu = 2.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(&f, &x, scale, m);
        let a = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let max_diag = (0..n).map(|i| a[(i, i)]).fold(0.0, f64::max);
        if cost == 0.0 || g.amax() == 0.0 || max_diag == 0.0 {
            converged = true;
            break;
        }
        let lam = lambda.get_or_insert(1e-3 * max_diag);
        let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].max(1e-12 * max_diag)).collect();
        let mut accepted = false;
        while *lam < 1e20 {
            let mut damped = a.clone();
            for (i, d) in diag.iter().enumerate() {
                damped[(i, i)] += *lam * d;
            }
            let Some(delta) = solve(&damped, &(-&g)) else {
                *lam *= nu;
                nu *= 2.0;
                continue;
            };
            let mut xn: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            project(&mut xn);
            let rn = DVector::from_vec(f(&xn));
            let cn = cost_of(&rn);
            let step = DVector::from_iterator(n, xn.iter().zip(&x).map(|(a, b)| a - b));
            let predicted = -2.0 * g.dot(&step) - step.dot(&(&a * &step));
            if cn < cost || (cn == cost && cn == 0.0) {
                let rho = if predicted > 0.0 { (cost - cn) / predicted } else { 0.0 };
                *lam *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
                nu = 2.0;
                let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let small = step.norm() <= opts.step_tol * (xnorm + opts.step_tol);
                x = xn;
                r = rn;
                cost = cn;
                trace.push(cost);
                accepted = true;
                if small {
                    converged = true;
                }
                break;
            }
            *lam *= nu;
            nu *= 2.0;
        }
        if !accepted {
            // No representable step lowers the cost: a stationary point to
            // working precision.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    let jac = jacobian(&f, &x, scale, m);
    let covariance = (jac.transpose() * &jac).try_inverse();
    LmOutcome {
        x,
        cost,
        iterations,
        converged,
        cost_trace: trace,
        covariance,
    }
}
