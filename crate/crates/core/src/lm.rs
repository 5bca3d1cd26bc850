//! Damped Gauss–Newton (Levenberg–Marquardt) least squares.
//!
//! Small dense problems only: the normal matrix is formed explicitly and
//! solved by Cholesky. Marquardt's diagonal scaling is used for the damping
//! term so that parameters of very different magnitude are treated alike.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Residual model. Residuals must already carry any weights.
pub trait LeastSquaresProblem {
    /// `None` marks a parameter vector outside the model's domain; the
    /// solver treats it as a rejected step.
    fn residuals(&self, params: &DVector<f64>) -> Option<DVector<f64>>;

    /// Analytic Jacobian of the residuals. The default is a central
    /// difference.
    fn jacobian(&self, params: &DVector<f64>) -> Option<DMatrix<f64>> {
        numeric_jacobian(self, params)
    }
}

pub fn numeric_jacobian<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    params: &DVector<f64>,
) -> Option<DMatrix<f64>> {
    let base = problem.residuals(params)?;
    let mut jac = DMatrix::zeros(base.len(), params.len());
    let mut probe = params.clone();
    for j in 0..params.len() {
        let h = 6e-6 * (params[j].abs() + 1e-6);
        probe[j] = params[j] + h;
        let plus = problem.residuals(&probe)?;
        probe[j] = params[j] - h;
        let minus = problem.residuals(&probe)?;
        probe[j] = params[j];
        jac.set_column(j, &((plus - minus) / (2.0 * h)));
    }
    Some(jac)
}

#[derive(Debug, Clone)]
pub struct LevenbergMarquardt {
    pub max_iterations: usize,
    /// Convergence when the scaled step is below `xtol` times the scaled
    /// parameter norm.
    pub xtol: f64,
    pub initial_lambda: f64,
}

impl Default for LevenbergMarquardt {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            xtol: 1e-8,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmSolution {
    pub params: DVector<f64>,
    pub residuals: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    /// Sum of squared residuals.
    pub chi2: f64,
    pub iterations: usize,
}

const LAMBDA_MAX: f64 = 1e20;

impl LevenbergMarquardt {
    pub fn minimize<P: LeastSquaresProblem + ?Sized>(
        &self,
        problem: &P,
        start: DVector<f64>,
    ) -> Result<LmSolution> {
        let mut x = start;
        let mut r = problem
            .residuals(&x)
            .ok_or_else(|| Error::invalid("initial guess lies outside the model domain"))?;
        let mut jac = problem
            .jacobian(&x)
            .ok_or_else(|| Error::invalid("Jacobian undefined at the initial guess"))?;
        let mut cost = r.norm_squared();
        if !cost.is_finite() {
            return Err(Error::invalid("non-finite residuals at the initial guess"));
        }
        let n = x.len();
        let mut lambda = self.initial_lambda;

        for iter in 1..=self.max_iterations {
            let jtj = jac.transpose() * &jac;
            let grad = jac.transpose() * &r;
            let max_diag = (0..n).map(|i| jtj[(i, i)]).fold(0.0f64, f64::max);
            if max_diag == 0.0 {
                // Model insensitive to every parameter: nothing to improve.
                return Ok(self.finish(x, r, jac, cost, iter));
            }
            let scale: Vec<f64> = (0..n).map(|i| jtj[(i, i)].max(1e-30 * max_diag)).collect();

            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * scale[i];
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                if lambda > LAMBDA_MAX {
                    return Ok(self.finish(x, r, jac, cost, iter));
                }
                continue;
            };
            let step = chol.solve(&(-&grad));
            let candidate = &x + &step;

            let trial = problem
                .residuals(&candidate)
                .map(|res| (res.norm_squared(), res))
                .filter(|(c, _)| c.is_finite());

            match trial {
                Some((new_cost, new_r)) if new_cost <= cost => {
                    let step_norm: f64 = (0..n)
                        .map(|i| scale[i] * step[i] * step[i])
                        .sum::<f64>()
                        .sqrt();
                    let x_norm: f64 = (0..n)
                        .map(|i| scale[i] * candidate[i] * candidate[i])
                        .sum::<f64>()
                        .sqrt();
                    x = candidate;
                    r = new_r;
                    cost = new_cost;
                    jac = match problem.jacobian(&x) {
                        Some(j) => j,
                        None => return Err(Error::invalid("Jacobian undefined at accepted step")),
                    };
                    lambda = (lambda / 10.0).max(1e-15);
                    if step_norm <= self.xtol * (x_norm + self.xtol) || cost == 0.0 {
                        return Ok(self.finish(x, r, jac, cost, iter));
                    }
                }
                _ => {
                    lambda *= 10.0;
                    if lambda > LAMBDA_MAX {
                        // No descent left at machine precision.
                        return Ok(self.finish(x, r, jac, cost, iter));
                    }
                }
            }
        }
        Err(Error::NoConvergence {
            iterations: self.max_iterations,
        })
    }

    fn finish(
        &self,
        params: DVector<f64>,
        residuals: DVector<f64>,
        jacobian: DMatrix<f64>,
        chi2: f64,
        iterations: usize,
    ) -> LmSolution {
        LmSolution {
            params,
            residuals,
            jacobian,
            chi2,
            iterations,
        }
    }
}

impl LmSolution {
    pub fn dof(&self) -> usize {
        self.residuals.len().saturating_sub(self.params.len())
    }

    pub fn reduced_chi2(&self) -> f64 {
        match self.dof() {
            0 => f64::NAN,
            d => self.chi2 / d as f64,
        }
    }

    /// (JᵀJ)⁻¹, through the pseudo-inverse when JᵀJ is singular.
    pub fn inverse_normal_matrix(&self) -> DMatrix<f64> {
        let jtj = self.jacobian.transpose() * &self.jacobian;
        match jtj.clone().cholesky() {
            Some(c) => c.inverse(),
            None => jtj.pseudo_inverse(1e-300).unwrap_or_else(|_| {
                DMatrix::from_element(self.params.len(), self.params.len(), f64::NAN)
            }),
        }
    }

    /// Parameter covariance. With `scale_by_residual_variance` the inverse
    /// normal matrix is multiplied by χ²/dof, as appropriate when residuals
    /// are unweighted; otherwise residuals are assumed to be in units of
    /// their standard deviation.
    pub fn covariance(&self, scale_by_residual_variance: bool) -> DMatrix<f64> {
        let inv = self.inverse_normal_matrix();
        if scale_by_residual_variance {
            inv * self.reduced_chi2()
        } else {
            inv
        }
    }

    /// Singular values of the Jacobian, largest first.
    pub fn jacobian_singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self
            .jacobian
            .clone()
            .singular_values()
            .iter()
            .copied()
            .collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }
}
