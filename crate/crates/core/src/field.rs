//! Scalar fields and marginal families.

use std::fmt;
use std::sync::Arc;

use crate::boxopt::{self, BoxProblem, Minimum};
use crate::error::{Error, Result};

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type FamilyFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
type FamilyGradFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// A real-valued function of the state, optionally with its gradient.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    label: String,
    eval: EvalFn,
    grad: Option<GradFn>,
}

impl ScalarField {
    pub fn new<F>(dim: usize, label: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim,
            label: label.into(),
            eval: Arc::new(eval),
            grad: None,
        }
    }

    pub fn with_grad<G>(mut self, grad: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(grad));
        self
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.eval)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.grad.as_ref().map(|g| g(x))
    }

    pub fn has_grad(&self) -> bool {
        self.grad.is_some()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("grad", &self.grad.is_some())
            .finish()
    }
}

/// Default accuracy of parameter searches inside marginal families.
pub const DEFAULT_THETA_ACCURACY: f64 = 1e-12;
/// Default singular guard (minimum admissible denominator magnitude).
pub const DEFAULT_SINGULAR_GUARD: f64 = 1e-6;

/// A family `F(x; theta)` over a compact parameter box, smooth in `x`,
/// defining the marginal function `V(x) = min_theta F(x; theta)`.
#[derive(Clone)]
pub struct MarginalFamily {
    dim: usize,
    label: String,
    theta_box: Vec<(f64, f64)>,
    f: FamilyFn,
    dfdx: FamilyGradFn,
    guard: Option<FamilyFn>,
    singular_guard: f64,
    theta_accuracy: f64,
    theta_grid: Option<usize>,
}

impl fmt::Debug for MarginalFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MarginalFamily")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("theta_box", &self.theta_box)
            .field("singular_guard", &self.singular_guard)
            .finish()
    }
}

impl MarginalFamily {
    pub fn new<F, G>(dim: usize, label: impl Into<String>, theta_box: Vec<(f64, f64)>, f: F, dfdx: G) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            label: label.into(),
            theta_box,
            f: Arc::new(f),
            dfdx: Arc::new(dfdx),
            guard: None,
            singular_guard: 0.0,
            theta_accuracy: DEFAULT_THETA_ACCURACY,
            theta_grid: None,
        }
    }

    /// Installs a guard quantity: parameters with `|guard(x, theta)| < threshold`
    /// are excluded from every parameter search.
    pub fn with_guard<G>(mut self, guard: G, threshold: f64) -> Self
    where
        G: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        self.guard = Some(Arc::new(guard));
        self.singular_guard = threshold;
        self
    }

    pub fn with_singular_guard(mut self, threshold: f64) -> Self {
        self.singular_guard = threshold;
        self
    }

    pub fn with_theta_accuracy(mut self, accuracy: f64) -> Self {
        self.theta_accuracy = accuracy;
        self
    }

    pub fn with_theta_grid(mut self, points: usize) -> Self {
        self.theta_grid = Some(points);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn theta_box(&self) -> &[(f64, f64)] {
        &self.theta_box
    }

    pub fn singular_guard(&self) -> f64 {
        self.singular_guard
    }

    pub fn theta_accuracy(&self) -> f64 {
        self.theta_accuracy
    }

    pub fn theta_grid(&self) -> Option<usize> {
        self.theta_grid
    }

    #[inline]
    pub fn f(&self, x: &[f64], theta: &[f64]) -> f64 {
        (self.f)(x, theta)
    }

    #[inline]
    pub fn dfdx(&self, x: &[f64], theta: &[f64]) -> Vec<f64> {
        (self.dfdx)(x, theta)
    }

    pub fn admissible(&self, x: &[f64], theta: &[f64]) -> bool {
        match &self.guard {
            Some(g) => g(x, theta).abs() >= self.singular_guard,
            None => true,
        }
    }

    /// `F(x; theta)`, or `+inf` when the guard rejects `theta`.
    #[inline]
    pub fn guarded(&self, x: &[f64], theta: &[f64]) -> f64 {
        if self.admissible(x, theta) {
            (self.f)(x, theta)
        } else {
            f64::INFINITY
        }
    }

    /// Parameter search problem at the given accuracy.
    pub fn theta_problem(&self, accuracy: f64) -> BoxProblem {
        let p = BoxProblem::new(self.theta_box.clone(), accuracy).expect("theta box validated at construction");
        match self.theta_grid {
            Some(k) => p.with_coarse_points(k),
            None => p,
        }
    }

    /// Minimizes `F(x; .)` over the admissible parameters.
    pub fn minimize_theta(&self, x: &[f64]) -> Result<Minimum> {
        let m = boxopt::minimize(&self.theta_problem(self.theta_accuracy), |t| self.guarded(x, t));
        if m.value.is_finite() {
            Ok(m)
        } else {
            Err(Error::GuardedDomain { x: x.to_vec() })
        }
    }

    /// `V(x) = min_theta F(x; theta)`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.minimize_theta(x).map(|m| m.value)
    }

    /// The marginal function as a [`ScalarField`]; its gradient is
    /// `dF/dx` at the located minimizer. Guard failures evaluate to NaN.
    pub fn to_field(&self) -> ScalarField {
        let fam = self.clone();
        let fam_g = self.clone();
        ScalarField::new(self.dim, self.label.clone(), move |x| fam.value(x).unwrap_or(f64::NAN)).with_grad(move |x| {
            match fam_g.minimize_theta(x) {
                Ok(m) => fam_g.dfdx(x, &m.argmin),
                Err(_) => vec![f64::NAN; x.len()],
            }
        })
    }
}

/// Central-difference gradient of a scalar function.
pub fn central_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], step: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let xi = x[i];
            p[i] = xi + step;
            let fp = f(&p);
            p[i] = xi - step;
            let fm = f(&p);
            p[i] = xi;
            (fp - fm) / (2.0 * step)
        })
        .collect()
}
