use super::dataset::Dataset;
use super::FitError;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// A model y = f(x; θ) with an analytic gradient in θ.
pub trait FitModel {
    fn names(&self) -> Vec<&'static str>;
    fn value(&self, x: f64, params: &[f64]) -> Result<f64, FitError>;
    fn gradient(&self, x: f64, params: &[f64]) -> Result<Vec<f64>, FitError>;
}

/// Map from the solver's internal coordinate q to the physical parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transform {
    Identity,
    /// θ = q², keeps θ ≥ 0
    Square,
}

impl Transform {
    fn to_physical(self, q: f64) -> f64 {
        match self {
            Transform::Identity => q,
            Transform::Square => q * q,
        }
    }

    fn to_internal(self, p: f64) -> f64 {
        match self {
            Transform::Identity => p,
            Transform::Square => p.max(0.0).sqrt(),
        }
    }

    fn derivative(self, q: f64) -> f64 {
        match self {
            Transform::Identity => 1.0,
            Transform::Square => 2.0 * q,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// relative change of the internal parameters
    pub param_tol: f64,
    /// relative change of χ²
    pub cost_tol: f64,
    /// relative central-difference step
    pub fd_step: f64,
    /// per parameter; missing entries are `Identity`
    pub transforms: Vec<Transform>,
    /// return the last iterate instead of failing when not converged
    pub allow_unconverged: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            param_tol: 1e-10,
            cost_tol: 1e-12,
            fd_step: 1e-6,
            transforms: Vec::new(),
            allow_unconverged: false,
        }
    }
}

impl FitOptions {
    pub fn with_transforms(mut self, transforms: Vec<Transform>) -> Self {
        self.transforms = transforms;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub params: Vec<f64>,
    /// absolute, from the inverse normal matrix with the supplied σ
    pub covariance: Vec<Vec<f64>>,
    /// √χ²
    pub residual_norm: f64,
    pub chi_square: f64,
    pub reduced_chi_square: f64,
    pub dof: usize,
    pub converged: bool,
    pub iterations: usize,
    /// degeneracy and conditioning warnings
    pub flags: Vec<String>,
    /// weighted coefficient of determination, when meaningful
    pub r_squared: Option<f64>,
}

impl FitResult {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.params[i])
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.covariance[i][i].sqrt())
    }

    pub fn sigmas(&self) -> Vec<f64> {
        (0..self.params.len()).map(|i| self.covariance[i][i].sqrt()).collect()
    }

    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.covariance[i][j] / (self.covariance[i][i] * self.covariance[j][j]).sqrt()
    }
}

fn step_size(p: f64, scale: f64, rel: f64) -> f64 {
    let m = p.abs().max(scale);
    if m > 0.0 {
        rel * m
    } else {
        rel
    }
}

/// Central-difference Jacobian ∂f(x_i)/∂θ_j. `scales` guard against
/// parameters sitting exactly at zero.
pub fn finite_difference_jacobian<M: FitModel + ?Sized>(
    model: &M,
    xs: &[f64],
    params: &[f64],
    scales: &[f64],
    rel_step: f64,
) -> Result<DMatrix<f64>, FitError> {
    let mut j = DMatrix::zeros(xs.len(), params.len());
    let mut p = params.to_vec();
    for k in 0..params.len() {
        let h = step_size(params[k], scales.get(k).copied().unwrap_or(0.0), rel_step);
        for (i, &x) in xs.iter().enumerate() {
            p[k] = params[k] + h;
            let up = model.value(x, &p)?;
            p[k] = params[k] - h;
            let down = model.value(x, &p)?;
            j[(i, k)] = (up - down) / (2.0 * h);
        }
        p[k] = params[k];
    }
    Ok(j)
}

pub fn analytic_jacobian<M: FitModel + ?Sized>(
    model: &M,
    xs: &[f64],
    params: &[f64],
) -> Result<DMatrix<f64>, FitError> {
    let mut j = DMatrix::zeros(xs.len(), params.len());
    for (i, &x) in xs.iter().enumerate() {
        for (k, g) in model.gradient(x, params)?.into_iter().enumerate() {
            j[(i, k)] = g;
        }
    }
    Ok(j)
}

/// Largest |J_fd − J_analytic| in each column relative to that column's
/// largest analytic entry, maximised over columns.
pub fn jacobian_discrepancy<M: FitModel + ?Sized>(model: &M, xs: &[f64], params: &[f64]) -> Result<f64, FitError> {
    let fd = finite_difference_jacobian(model, xs, params, &[], 1e-6)?;
    let an = analytic_jacobian(model, xs, params)?;
    let mut worst: f64 = 0.0;
    for k in 0..params.len() {
        let scale = an.column(k).amax();
        if scale == 0.0 {
            continue;
        }
        let diff = (fd.column(k) - an.column(k)).amax();
        worst = worst.max(diff / scale);
    }
    Ok(worst)
}

/// Largest |cos| between weighted residuals and weighted Jacobian columns.
pub fn residual_orthogonality<M: FitModel + ?Sized>(
    model: &M,
    data: &Dataset,
    params: &[f64],
) -> Result<f64, FitError> {
    let xs = data.xs();
    let j = finite_difference_jacobian(model, &xs, params, &[], 1e-6)?;
    let mut r = DVector::zeros(data.len());
    let mut jw = j.clone();
    for (i, pt) in data.points().iter().enumerate() {
        r[i] = (pt.y - model.value(pt.x, params)?) / pt.sigma;
        jw.row_mut(i).scale_mut(1.0 / pt.sigma);
    }
    let rn = r.norm();
    if rn == 0.0 {
        return Ok(0.0);
    }
    Ok((0..params.len())
        .map(|k| {
            let c = jw.column(k);
            let cn = c.norm();
            if cn == 0.0 {
                0.0
            } else {
                (c.dot(&r) / (cn * rn)).abs()
            }
        })
        .fold(0.0, f64::max))
}

struct Problem<'a, M: FitModel + ?Sized> {
    model: &'a M,
    data: &'a Dataset,
    transforms: Vec<Transform>,
    scales: Vec<f64>,
    fd_step: f64,
}

impl<M: FitModel + ?Sized> Problem<'_, M> {
    fn physical(&self, q: &[f64]) -> Vec<f64> {
        q.iter().zip(&self.transforms).map(|(&q, t)| t.to_physical(q)).collect()
    }

    fn residuals(&self, p: &[f64]) -> Result<DVector<f64>, FitError> {
        let mut r = DVector::zeros(self.data.len());
        for (i, pt) in self.data.points().iter().enumerate() {
            let f = self.model.value(pt.x, p)?;
            if !f.is_finite() {
                return Err(FitError::NonFinite);
            }
            r[i] = (pt.y - f) / pt.sigma;
        }
        Ok(r)
    }

    /// Weighted Jacobian of the model in physical parameters.
    fn weighted_jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>, FitError> {
        let mut j = finite_difference_jacobian(self.model, &self.data.xs(), p, &self.scales, self.fd_step)?;
        for (i, pt) in self.data.points().iter().enumerate() {
            j.row_mut(i).scale_mut(1.0 / pt.sigma);
        }
        Ok(j)
    }
}

/// Minimises Σ((y − f(x;θ))/σ)² by Levenberg–Marquardt (Gauss–Newton with
/// Marquardt diagonal damping) on finite-difference Jacobians.
pub fn least_squares<M: FitModel + ?Sized>(
    model: &M,
    data: &Dataset,
    init: &[f64],
    options: &FitOptions,
) -> Result<FitResult, FitError> {
    let names = model.names();
    let k = names.len();
    if init.len() != k {
        return Err(FitError::Data(format!("expected {k} initial values, got {}", init.len())));
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(FitError::Data("initial parameters must be finite".into()));
    }
    if data.len() < k + 1 {
        return Err(FitError::Data(format!("{} points cannot constrain {k} parameters", data.len())));
    }
    let transforms: Vec<Transform> =
        (0..k).map(|i| options.transforms.get(i).copied().unwrap_or(Transform::Identity)).collect();
    let problem = Problem {
        model,
        data,
        transforms: transforms.clone(),
        scales: init.iter().map(|v| 1e-3 * v.abs()).collect(),
        fd_step: options.fd_step,
    };

    let mut q: Vec<f64> = init.iter().zip(&transforms).map(|(&p, t)| t.to_internal(p)).collect();
    let mut p = problem.physical(&q);
    let mut r = problem.residuals(&p)?;
    let mut cost = r.norm_squared();
    let initial_cost = cost;
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        if cost <= 1e-30 * initial_cost.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        let mut jq = problem.weighted_jacobian(&p)?;
        for (c, (t, &qv)) in transforms.iter().zip(&q).enumerate() {
            jq.column_mut(c).scale_mut(t.derivative(qv));
        }
        let a = jq.transpose() * &jq;
        let g = jq.transpose() * &r;
        let mut accepted = false;
        while lambda < 1e20 {
            let mut damped = a.clone();
            for d in 0..k {
                damped[(d, d)] += lambda * a[(d, d)].max(1e-300);
            }
            let Some(delta) = damped.lu().solve(&g) else {
                lambda *= 10.0;
                continue;
            };
            let q_new: Vec<f64> = q.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            let p_new = problem.physical(&q_new);
            let trial = problem.residuals(&p_new).map(|r| (r.norm_squared(), r));
            match trial {
                Ok((c_new, r_new)) if c_new <= cost => {
                    let dq = q_new.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    let qn = q_new.iter().map(|v| v.abs()).fold(0.0, f64::max);
                    let rel_cost = (cost - c_new) / cost.max(f64::MIN_POSITIVE);
                    q = q_new;
                    p = p_new;
                    r = r_new;
                    cost = c_new;
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    if dq <= options.param_tol * qn.max(f64::MIN_POSITIVE) || rel_cost < options.cost_tol {
                        converged = true;
                    }
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if !accepted {
            // no damped step lowers χ²: stationary to machine precision
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged && !options.allow_unconverged {
        return Err(FitError::NotConverged { iterations });
    }

    let jp = problem.weighted_jacobian(&p)?;
    let normal = jp.transpose() * &jp;
    let covariance = invert_scaled(&normal).ok_or(FitError::Singular)?;
    let dof = data.len() - k;
    let mut result = FitResult {
        names: names.iter().map(|s| s.to_string()).collect(),
        params: p,
        covariance: (0..k).map(|i| (0..k).map(|j| covariance[(i, j)]).collect()).collect(),
        residual_norm: cost.sqrt(),
        chi_square: cost,
        reduced_chi_square: cost / dof as f64,
        dof,
        converged,
        iterations,
        flags: Vec::new(),
        r_squared: None,
    };
    result.flags = diagnose(&result);
    Ok(result)
}

/// Inverse via the unit-diagonal scaled matrix, which tames disparate
/// parameter magnitudes.
fn invert_scaled(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    let d: Vec<f64> = (0..n).map(|i| m[(i, i)].sqrt()).collect();
    if d.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return None;
    }
    let scaled = DMatrix::from_fn(n, n, |i, j| m[(i, j)] / (d[i] * d[j]));
    let inv = scaled.try_inverse()?;
    let out = DMatrix::from_fn(n, n, |i, j| inv[(i, j)] / (d[i] * d[j]));
    let sym = (&out + out.transpose()) * 0.5;
    (0..n).all(|i| sym[(i, i)] >= 0.0 && sym[(i, i)].is_finite()).then_some(sym)
}

fn diagnose(r: &FitResult) -> Vec<String> {
    let mut flags = Vec::new();
    let n = r.params.len();
    for i in 0..n {
        for j in i + 1..n {
            let rho = r.correlation(i, j);
            if rho.abs() > 0.99 {
                flags.push(format!("{} and {} are degenerate (correlation {rho:.4})", r.names[i], r.names[j]));
            }
        }
        let s = r.covariance[i][i].sqrt();
        if s > r.params[i].abs() {
            flags.push(format!(
                "{} is unconstrained (sigma {s:.3e} exceeds |value| {:.3e})",
                r.names[i],
                r.params[i].abs()
            ));
        }
    }
    flags
}
