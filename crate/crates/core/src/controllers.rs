//! Static feedback laws evaluated once per sampling interval.
//!
//! Every controller maps the sampled state to a control inside the bound
//! system's box, together with per-step flags recording optimizer accuracy
//! failures, saturation and fallbacks.

use std::fmt;
use std::sync::Arc;

use crate::boxopt::{self, BoxProblem};
use crate::clf::BacksteppingContext;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg::{dot, norm, sub};
use crate::nonsmooth::{
    check_semiconcavity, inf_convolution_with, ldgd, InfConvOptions, DEFAULT_LEVELS, DEFAULT_MU_MAX, DEFAULT_SEED,
};
use crate::sim::flow;
use crate::systems::ControlSystem;

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepFlags {
    /// Inner (inf-convolution or neighbourhood) search missed its accuracy.
    pub eps_not_met: bool,
    /// Control search missed its accuracy.
    pub gamma_not_met: bool,
    pub saturated: bool,
    pub fallback: bool,
}

impl StepFlags {
    pub fn any(&self) -> bool {
        self.eps_not_met || self.gamma_not_met || self.saturated || self.fallback
    }
}

impl fmt::Display for StepFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tokens: Vec<&str> = [
            (self.eps_not_met, "eps_not_met"),
            (self.gamma_not_met, "gamma_not_met"),
            (self.saturated, "saturated"),
            (self.fallback, "fallback"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, t)| *t)
        .collect();
        if tokens.is_empty() {
            f.write_str("ok")
        } else {
            f.write_str(&tokens.join("|"))
        }
    }
}

/// A held control and its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub u: Vec<f64>,
    pub flags: StepFlags,
}

/// A static state feedback.
pub trait Controller: Send + Sync {
    fn label(&self) -> &str;

    fn compute(&self, x: &[f64]) -> Action;

    /// Sampling time the law was designed for, if it depends on one.
    fn sampling_time(&self) -> Option<f64> {
        None
    }

    /// Non-fatal construction warnings.
    fn warnings(&self) -> Vec<String> {
        Vec::new()
    }
}

fn control_problem(sys: &ControlSystem, accuracy: f64) -> Result<BoxProblem> {
    BoxProblem::new(sys.control_box().to_vec(), accuracy)
}

fn check_accuracy(accuracy: f64) -> Result<()> {
    if accuracy > 0.0 && accuracy.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("accuracy must be > 0, got {accuracy}")))
    }
}

/// `kappa(x) in argmin_u D_{f(x,u)} V(x)`; at the origin `|f(0,u)|` is minimized.
#[derive(Debug, Clone)]
pub struct SteepestDescent {
    v: ScalarField,
    sys: ControlSystem,
    problem: BoxProblem,
    warning: Option<String>,
}

/// Modulus and pair count of the semiconcavity pre-check.
pub const STEEPEST_PRECHECK_MODULUS: f64 = 10.0;
pub const STEEPEST_PRECHECK_PAIRS: usize = 2000;

impl SteepestDescent {
    pub fn new(v: ScalarField, sys: ControlSystem, accuracy: f64) -> Result<Self> {
        let problem = control_problem(&sys, accuracy)?;
        Ok(Self {
            v,
            sys,
            problem,
            warning: None,
        })
    }

    /// Evaluation budget of the control search.
    pub fn with_max_evals(mut self, max_evals: usize) -> Self {
        self.problem = self.problem.with_max_evals(max_evals);
        self
    }

    /// Runs the semiconcavity pre-check on `region`; failure only records a warning.
    pub fn with_semiconcavity_check(mut self, region: &[(f64, f64)]) -> Result<Self> {
        let rep = check_semiconcavity(
            &self.v,
            region,
            STEEPEST_PRECHECK_MODULUS,
            STEEPEST_PRECHECK_PAIRS,
            DEFAULT_SEED,
        )?;
        if !rep.passed() {
            self.warning = Some(format!(
                "{}: semiconcavity check failed on {} of {} pairs",
                self.v.label(),
                rep.violations.len(),
                rep.pairs_checked
            ));
        }
        Ok(self)
    }
}

impl Controller for SteepestDescent {
    fn label(&self) -> &str {
        "steepest"
    }

    fn compute(&self, x: &[f64]) -> Action {
        let m = if norm(x) == 0.0 {
            boxopt::minimize(&self.problem, |u| {
                let f = self.sys.f(x, u);
                dot(&f, &f)
            })
        } else {
            boxopt::minimize(&self.problem, |u| {
                ldgd(&self.v, x, &self.sys.f(x, u), DEFAULT_MU_MAX, DEFAULT_LEVELS).unwrap_or(f64::INFINITY)
            })
        };
        Action {
            u: m.argmin,
            flags: StepFlags {
                gamma_not_met: !m.accuracy_met,
                ..Default::default()
            },
        }
    }

    fn warnings(&self) -> Vec<String> {
        self.warning.iter().cloned().collect()
    }
}

type Envelope = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Neighbourhood radius and control-magnitude envelope of Dini aiming.
#[derive(Clone)]
pub struct DiniAimingParams {
    pub r: f64,
    pub sigma: Envelope,
}

impl fmt::Debug for DiniAimingParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiniAimingParams").field("r", &self.r).finish()
    }
}

impl DiniAimingParams {
    pub fn new<S>(r: f64, sigma: S) -> Result<Self>
    where
        S: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidInput(format!("Dini aiming radius must be > 0, got {r}")));
        }
        if !(sigma(0.0) >= 0.0) {
            return Err(Error::InvalidInput("sigma(0) must be >= 0".into()));
        }
        Ok(Self {
            r,
            sigma: Arc::new(sigma),
        })
    }

    /// `sigma(rho) = min(rho, u_max)`.
    pub fn with_saturating_envelope(r: f64, u_max: f64) -> Result<Self> {
        Self::new(r, move |rho| rho.min(u_max))
    }
}

/// Dini aiming: aim at the best point of `V` in the closed `r`-ball, then
/// steer towards it with a control of magnitude at most `sigma(|x| + r)`.
#[derive(Debug, Clone)]
pub struct DiniAiming {
    v: ScalarField,
    sys: ControlSystem,
    params: DiniAimingParams,
    accuracy: f64,
    max_evals: Option<usize>,
}

impl DiniAiming {
    pub fn new(v: ScalarField, sys: ControlSystem, params: DiniAimingParams, accuracy: f64) -> Result<Self> {
        check_accuracy(accuracy)?;
        Ok(Self {
            v,
            sys,
            params,
            accuracy,
            max_evals: None,
        })
    }

    /// Evaluation budget of both searches.
    pub fn with_max_evals(mut self, max_evals: usize) -> Self {
        self.max_evals = Some(max_evals);
        self
    }

    fn problem(&self, b: Vec<(f64, f64)>) -> BoxProblem {
        let p = BoxProblem::new(b, self.accuracy).expect("finite box");
        match self.max_evals {
            Some(m) => p.with_max_evals(m),
            None => p,
        }
    }

    /// Best point of `V` in the closed `r`-ball around `x`.
    pub fn aim(&self, x: &[f64]) -> (Vec<f64>, bool) {
        let r = self.params.r;
        let b: Vec<(f64, f64)> = x.iter().map(|&c| (c - r, c + r)).collect();
        let p = self.problem(b);
        let m = boxopt::minimize(&p, |y| {
            if norm(&sub(y, x)) <= r {
                self.v.eval(y)
            } else {
                f64::INFINITY
            }
        });
        // the odd coarse grid contains x, so this only guards NaN landscapes
        if m.value.is_finite() && m.value <= self.v.eval(x) {
            (m.argmin, m.accuracy_met)
        } else {
            (x.to_vec(), m.accuracy_met)
        }
    }
}

impl Controller for DiniAiming {
    fn label(&self) -> &str {
        "dini"
    }

    fn compute(&self, x: &[f64]) -> Action {
        let (target, eps_met) = self.aim(x);
        let d = sub(x, &target);
        let nd = norm(&d);
        let rho = (self.params.sigma)(norm(x) + self.params.r);
        let mut flags = StepFlags {
            eps_not_met: !eps_met,
            ..Default::default()
        };
        if nd < 1e-12 || !(rho > 0.0) {
            let (u, sat) = self.sys.clamp_control(&vec![0.0; self.sys.control_dim()]);
            flags.saturated = sat;
            return Action { u, flags };
        }
        let b: Vec<(f64, f64)> = self
            .sys
            .control_box()
            .iter()
            .map(|&(lo, hi)| (lo.max(-rho), hi.min(rho)))
            .collect();
        if b.iter().any(|(lo, hi)| lo > hi) {
            let (u, sat) = self.sys.clamp_control(&vec![0.0; self.sys.control_dim()]);
            flags.saturated = sat;
            flags.fallback = true;
            return Action { u, flags };
        }
        let p = self.problem(b);
        let m = boxopt::minimize(&p, |u| {
            if norm(u) <= rho {
                dot(&d, &self.sys.f(x, u)) / nd
            } else {
                f64::INFINITY
            }
        });
        flags.gamma_not_met = !m.accuracy_met;
        Action { u: m.argmin, flags }
    }
}

/// `kappa_delta(x) in argmin_u V(phi(delta, x, u))`.
#[derive(Debug, Clone)]
pub struct OptimizationBased {
    v: ScalarField,
    sys: ControlSystem,
    delta: f64,
    substeps: usize,
    problem: BoxProblem,
}

impl OptimizationBased {
    pub fn new(v: ScalarField, sys: ControlSystem, delta: f64, accuracy: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidInput(format!("delta must be > 0, got {delta}")));
        }
        let problem = control_problem(&sys, accuracy)?;
        Ok(Self {
            v,
            sys,
            delta,
            substeps: 10,
            problem,
        })
    }

    /// Evaluation budget of the control search.
    pub fn with_max_evals(mut self, max_evals: usize) -> Self {
        self.problem = self.problem.with_max_evals(max_evals);
        self
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps.max(1);
        self
    }
}

impl Controller for OptimizationBased {
    fn label(&self) -> &str {
        "optim"
    }

    fn compute(&self, x: &[f64]) -> Action {
        let m = boxopt::minimize(&self.problem, |u| {
            match flow(&self.sys, x, u, self.delta, self.substeps, 0.0) {
                Ok(y) => self.v.eval(&y),
                Err(_) => f64::INFINITY,
            }
        });
        Action {
            u: m.argmin,
            flags: StepFlags {
                gamma_not_met: !m.accuracy_met,
                ..Default::default()
            },
        }
    }

    fn sampling_time(&self) -> Option<f64> {
        Some(self.delta)
    }
}

/// Inf-convolution based law: `kappa(x) in argmin_u <zeta_alpha(x), f(y_alpha(x), u)>`.
#[derive(Debug, Clone)]
pub struct InfcBased {
    v: ScalarField,
    sys: ControlSystem,
    alpha: f64,
    infc: InfConvOptions,
    problem: BoxProblem,
}

/// Result of the inner inf-convolution step.
#[derive(Debug, Clone, PartialEq)]
pub struct InfcStep {
    pub y: Vec<f64>,
    pub zeta: Vec<f64>,
    pub u: Vec<f64>,
    /// `<zeta, f(y, u)>` at the returned control.
    pub objective: f64,
    pub flags: StepFlags,
}

impl InfcBased {
    pub fn new(v: ScalarField, sys: ControlSystem, alpha: f64, eps: f64, gamma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha must lie in (0,1), got {alpha}")));
        }
        check_accuracy(eps)?;
        let problem = control_problem(&sys, gamma)?;
        Ok(Self {
            v,
            sys,
            alpha,
            infc: InfConvOptions::new(eps),
            problem,
        })
    }

    /// Evaluation budget of the control search.
    pub fn with_max_evals(mut self, max_evals: usize) -> Self {
        self.problem = self.problem.with_max_evals(max_evals);
        self
    }

    /// Overrides the inner search settings (tolerance is kept).
    pub fn with_infc_options(mut self, opts: InfConvOptions) -> Self {
        self.infc = InfConvOptions {
            tol: self.infc.tol,
            ..opts
        };
        self
    }

    pub fn step(&self, x: &[f64]) -> Result<InfcStep> {
        let ic = inf_convolution_with(&self.v, x, self.alpha, &self.infc)?;
        let a2 = self.alpha * self.alpha;
        let zeta: Vec<f64> = sub(x, &ic.minimizer).iter().map(|d| d / a2).collect();
        let y = ic.minimizer;
        let m = boxopt::minimize(&self.problem, |u| dot(&zeta, &self.sys.f(&y, u)));
        Ok(InfcStep {
            y,
            zeta,
            u: m.argmin,
            objective: m.value,
            flags: StepFlags {
                eps_not_met: !ic.accuracy_met,
                gamma_not_met: !m.accuracy_met,
                ..Default::default()
            },
        })
    }
}

impl Controller for InfcBased {
    fn label(&self) -> &str {
        "infc"
    }

    fn compute(&self, x: &[f64]) -> Action {
        match self.step(x) {
            Ok(s) => Action { u: s.u, flags: s.flags },
            Err(_) => Action {
                u: self.sys.zero_control(),
                flags: StepFlags {
                    fallback: true,
                    ..Default::default()
                },
            },
        }
    }
}

/// Backstepping law of a [`BacksteppingContext`], clamped to the input box.
#[derive(Debug, Clone)]
pub struct Backstepping {
    ctx: BacksteppingContext,
    sys: ControlSystem,
    label: &'static str,
}

impl Backstepping {
    pub fn endi(ctx: BacksteppingContext, sys: ControlSystem) -> Result<Self> {
        Self::bind(ctx, sys, "bks_endi")
    }

    pub fn artstein(ctx: BacksteppingContext, sys: ControlSystem) -> Result<Self> {
        Self::bind(ctx, sys, "bks_artstein")
    }

    fn bind(ctx: BacksteppingContext, sys: ControlSystem, label: &'static str) -> Result<Self> {
        let n = ctx.base_dim() + ctx.input_dim();
        if sys.state_dim() != n || sys.control_dim() != ctx.input_dim() {
            return Err(Error::InvalidInput(format!(
                "system `{}` does not match the backstepping context",
                sys.label()
            )));
        }
        Ok(Self { ctx, sys, label })
    }

    pub fn context(&self) -> &BacksteppingContext {
        &self.ctx
    }
}

impl Controller for Backstepping {
    fn label(&self) -> &str {
        self.label
    }

    fn compute(&self, x: &[f64]) -> Action {
        let mut flags = StepFlags::default();
        let raw = match self.ctx.control(x) {
            Ok(step) if step.u.iter().all(|v| v.is_finite()) => step.u,
            _ => {
                // kappa treated as zero: z = eta
                flags.fallback = true;
                x[self.ctx.base_dim()..].iter().map(|e| -self.ctx.gain * e).collect()
            }
        };
        let (u, sat) = self.sys.clamp_control(&raw);
        flags.saturated = sat;
        Action { u, flags }
    }
}

type StateMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Switching law `u = kappa_cont(x) + s(x) sgn(chi(x))`.
#[derive(Clone)]
pub struct SmcParams {
    pub chi: ScalarField,
    pub kappa_cont: StateMap,
    pub s: StateMap,
    /// `|chi| <= on_surface_tol` counts as on the surface, where `sgn` is 0.
    pub on_surface_tol: f64,
}

impl fmt::Debug for SmcParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmcParams")
            .field("chi", &self.chi)
            .field("on_surface_tol", &self.on_surface_tol)
            .finish()
    }
}

/// Switching gain of the demo plant.
pub const SMC_DEMO_GAIN: f64 = 1.5;

impl SmcParams {
    /// Demo plant: `kappa_cont = 0`, `s = -1.5`, `chi = x1 + x2`.
    pub fn demo() -> Self {
        Self {
            chi: crate::systems::smc_surface(),
            kappa_cont: Arc::new(|_| vec![0.0]),
            s: Arc::new(|_| vec![-SMC_DEMO_GAIN]),
            on_surface_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Smc {
    params: SmcParams,
    sys: ControlSystem,
}

impl Smc {
    pub fn new(params: SmcParams, sys: ControlSystem) -> Result<Self> {
        if !(params.on_surface_tol > 0.0) {
            return Err(Error::InvalidInput("on_surface_tol must be > 0".into()));
        }
        Ok(Self { params, sys })
    }
}

impl Controller for Smc {
    fn label(&self) -> &str {
        "smc"
    }

    fn compute(&self, x: &[f64]) -> Action {
        let c = self.params.chi.eval(x);
        let sgn = if c.abs() <= self.params.on_surface_tol {
            0.0
        } else {
            c.signum()
        };
        let k = (self.params.kappa_cont)(x);
        let s = (self.params.s)(x);
        let raw: Vec<f64> = k.iter().zip(&s).map(|(a, b)| a + b * sgn).collect();
        let (u, sat) = self.sys.clamp_control(&raw);
        Action {
            u,
            flags: StepFlags {
                saturated: sat,
                ..Default::default()
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clf::{v1_ni, v1_ni_field};
    use crate::systems::{make_artstein_dyn, make_endi, make_ni, make_smc_demo};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn integrator() -> ControlSystem {
        ControlSystem::new("int", 1, 1, vec![(-1.0, 1.0)], |_, u| vec![u[0]]).unwrap()
    }

    fn abs1() -> ScalarField {
        ScalarField::new(1, "abs", |x| x[0].abs())
    }

    #[test]
    fn flags_display() {
        assert_eq!(StepFlags::default().to_string(), "ok");
        let f = StepFlags {
            eps_not_met: true,
            saturated: true,
            ..Default::default()
        };
        assert_eq!(f.to_string(), "eps_not_met|saturated");
    }

    #[test]
    fn steepest_examples() {
        let c = SteepestDescent::new(abs1(), integrator(), 1e-6).unwrap();
        assert_eq!(c.compute(&[0.5]).u, vec![-1.0]);
        let ni = SteepestDescent::new(v1_ni_field(), make_ni(), 1e-6).unwrap();
        let u0 = ni.compute(&[0.0; 3]).u;
        assert!(u0.iter().all(|v| v.abs() < 1e-3), "{u0:?}");
        let x = [1.0, 0.0, 0.0];
        let u = ni.compute(&x).u;
        let d = ldgd(&v1_ni_field(), &x, &make_ni().f(&x, &u), DEFAULT_MU_MAX, DEFAULT_LEVELS).unwrap();
        assert!(d < 0.0);
    }

    #[test]
    fn steepest_precheck_warns_on_convex_kink() {
        let c = SteepestDescent::new(abs1(), integrator(), 1e-6)
            .unwrap()
            .with_semiconcavity_check(&[(-1.0, 1.0)])
            .unwrap();
        assert_eq!(c.warnings().len(), 1);
        let vee = ScalarField::new(1, "neg", |x| -x[0].abs());
        let c = SteepestDescent::new(vee, integrator(), 1e-6)
            .unwrap()
            .with_semiconcavity_check(&[(-1.0, 1.0)])
            .unwrap();
        assert!(c.warnings().is_empty());
        let sq = ScalarField::new(1, "sq", |x| 100.0 * x[0] * x[0]);
        let c = SteepestDescent::new(sq, integrator(), 1e-6)
            .unwrap()
            .with_semiconcavity_check(&[(-1.0, 1.0)])
            .unwrap();
        assert_eq!(c.warnings().len(), 1);
    }

    #[test]
    fn dini_examples() {
        let p = DiniAimingParams::new(0.5, |_| 1.0).unwrap();
        let c = DiniAiming::new(abs1(), integrator(), p.clone(), 1e-8).unwrap();
        let (t, _) = c.aim(&[1.0]);
        assert!((t[0] - 0.5).abs() < 1e-6);
        assert_eq!(c.compute(&[1.0]).u, vec![-1.0]);
        assert_eq!(c.compute(&[0.0]).u, vec![0.0]);
        assert!(DiniAimingParams::new(0.0, |_| 1.0).is_err());
    }

    #[test]
    fn dini_ni_decreases_v1() {
        let sys = make_ni();
        let p = DiniAimingParams::new(0.2, |_| 1.0).unwrap();
        let c = DiniAiming::new(v1_ni_field(), sys.clone(), p, 1e-6).unwrap();
        let x = [1.0, 0.0, 0.0];
        let u = c.compute(&x).u;
        let y = flow(&sys, &x, &u, 0.01, 100, 0.0).unwrap();
        assert!(v1_ni(&y) < v1_ni(&x));
    }

    #[test]
    fn dini_magnitude_law() {
        let sys = make_ni();
        let p = DiniAimingParams::with_saturating_envelope(0.05, 1.0).unwrap();
        let c = DiniAiming::new(v1_ni_field(), sys, p, 1e-4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for k in 0..60 {
            let scale = 10f64.powi(-(k % 6));
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
            let u = c.compute(&x).u;
            assert!(norm(&u) <= (norm(&x) + 0.05).min(1.0) + 1e-12);
        }
    }

    #[test]
    fn optim_examples() {
        let v = ScalarField::new(1, "sq", |x| x[0] * x[0]);
        let c = OptimizationBased::new(v, integrator(), 0.1, 1e-8).unwrap();
        assert_eq!(c.compute(&[1.0]).u, vec![-1.0]);
        assert_eq!(c.sampling_time(), Some(0.1));
        let sys = make_ni();
        let c = OptimizationBased::new(v1_ni_field(), sys.clone(), 0.01, 1e-8).unwrap();
        let x = [1.0, 0.0, 0.0];
        let u = c.compute(&x).u;
        let y = flow(&sys, &x, &u, 0.01, 10, 0.0).unwrap();
        assert!(v1_ni(&y) < v1_ni(&x));
    }

    #[test]
    fn infc_examples() {
        let v = ScalarField::new(1, "sq", |x| x[0] * x[0]);
        let c = InfcBased::new(v.clone(), integrator(), 0.5, 1e-10, 1e-8).unwrap();
        let s = c.step(&[1.0]).unwrap();
        assert!((s.zeta[0] - 4.0 / 3.0).abs() < 1e-4);
        assert_eq!(s.u, vec![-1.0]);
        let s0 = c.step(&[0.0]).unwrap();
        assert_eq!(s0.zeta, vec![0.0]);
        assert_eq!(s0.u, vec![-1.0]);
    }

    #[test]
    fn infc_monotone_accuracy() {
        let v = v1_ni_field();
        let loose = InfcBased::new(v.clone(), make_ni(), 0.3, 1e-3, 1e-3).unwrap();
        let tight = InfcBased::new(v, make_ni(), 0.3, 1e-3, 1e-8).unwrap();
        let x = [0.7, -0.2, 0.4];
        let a = loose.step(&x).unwrap();
        let b = tight.step(&x).unwrap();
        assert_eq!(a.zeta, b.zeta);
        assert!(b.objective <= a.objective);
    }

    #[test]
    fn backstepping_origin_and_fallback() {
        let ctx = BacksteppingContext::endi(1.0).unwrap();
        let c = Backstepping::endi(ctx, make_endi()).unwrap();
        let a = c.compute(&[0.0; 5]);
        assert!(a.u.iter().all(|v| v.abs() < 1e-12));
        assert!(!a.flags.any());
        let ctx = BacksteppingContext::artstein(1.0).unwrap();
        assert!(Backstepping::endi(ctx.clone(), make_endi()).is_err());
        let c = Backstepping::artstein(ctx, make_artstein_dyn()).unwrap();
        let a = c.compute(&[0.0, 0.0, 10.0]);
        assert_eq!(a.u, vec![-3.0]);
        assert!(a.flags.saturated);
    }

    #[test]
    fn smc_examples() {
        let c = Smc::new(SmcParams::demo(), make_smc_demo()).unwrap();
        assert_eq!(c.compute(&[1.0, 1.0]).u, vec![-1.5]);
        assert_eq!(c.compute(&[1.0, -1.0]).u, vec![0.0]);
        assert_eq!(c.compute(&[0.0, 0.0]).u, vec![0.0]);
    }

    #[test]
    fn smc_attraction() {
        let c = Smc::new(SmcParams::demo(), make_smc_demo()).unwrap();
        let sys = make_smc_demo();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut n = 0;
        while n < 1000 {
            let x: [f64; 2] = [rng.gen_range(-6.0..6.0), rng.gen_range(-1.1..1.1)];
            let chi = x[0] + x[1];
            if !(0.1..=5.0).contains(&chi.abs()) {
                continue;
            }
            n += 1;
            let f = sys.f(&x, &c.compute(&x).u);
            assert!(chi.signum() * (f[0] + f[1]) <= -0.4 + 1e-12);
        }
    }
}
