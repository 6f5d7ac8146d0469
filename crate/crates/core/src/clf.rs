//! Concrete control Lyapunov functions and the nonsmooth backstepping
//! constructions for the nonholonomic integrator family and the Artstein
//! circle.
//!
//! A backstepping context couples a base marginal family `F(x; theta)` on the
//! kinematic part `x' = G(x) eta` with the Sontag-type feedback
//! `kappa(x; theta) = -G(x)^T dF/dx(x; theta)`. The augmented family
//!
//! ```text
//! F_c(x, eta; theta) = F(x; theta) + |eta - kappa(x; theta)|^2 / 2
//! ```
//!
//! defines the composite CLF `V_c = min_theta F_c`. With `z = eta - kappa` and
//! `J = d kappa / dx` (central differences at a frozen parameter), the law
//!
//! ```text
//! u = J G(x) eta - G(x)^T zeta - K z
//! ```
//!
//! reduces the decay expression along `(G eta, u)` to
//! `<zeta, G kappa> - K |z|^2`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::boxopt;
use crate::error::{Error, Result};
use crate::field::{MarginalFamily, ScalarField, DEFAULT_SINGULAR_GUARD};
use crate::linalg::{dot, lex_less};
use crate::nonsmooth::DEFAULT_THETA_TOL;
use crate::systems::{artstein_g, ni_g1, ni_g2};

pub fn v1_ni(x: &[f64]) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    r2 + 2.0 * x[2] * x[2] - 2.0 * x[2].abs() * r2.sqrt()
}

pub fn v2_ni(x: &[f64]) -> f64 {
    x[0] * x[0] + x[1] * x[1] + 2.0 * x[2] * x[2] + x[2].abs() * (10.0 - 2.0 * (x[0].abs() + x[1].abs()))
}

pub fn v1_ni_field() -> ScalarField {
    ScalarField::new(3, "v1_ni", v1_ni)
}

pub fn v2_ni_field() -> ScalarField {
    ScalarField::new(3, "v2_ni", v2_ni)
}

#[inline]
fn ni_denominator(x: &[f64], theta: f64) -> f64 {
    x[0] * theta.cos() + x[1] * theta.sin() + x[2].abs().sqrt()
}

/// `F(x; theta) = x1^4 + x2^4 + |x3|^3 / (x1 cos theta + x2 sin theta + sqrt|x3|)^2`.
/// The last term is taken as zero when `x3 = 0`.
pub fn ni_f(x: &[f64], theta: f64) -> f64 {
    let base = x[0].powi(4) + x[1].powi(4);
    let a = x[2].abs();
    if a == 0.0 {
        return base;
    }
    let d = ni_denominator(x, theta);
    base + a * a * a / (d * d)
}

pub fn ni_dfdx(x: &[f64], theta: f64) -> Vec<f64> {
    let a = x[2].abs();
    let g1 = 4.0 * x[0].powi(3);
    let g2 = 4.0 * x[1].powi(3);
    if a == 0.0 {
        return vec![g1, g2, 0.0];
    }
    let d = ni_denominator(x, theta);
    let c = a * a * a / (d * d * d);
    let dx3 = x[2].signum() * (3.0 * a * a / (d * d) - a * a * a.sqrt() / (d * d * d));
    vec![g1 - 2.0 * c * theta.cos(), g2 - 2.0 * c * theta.sin(), dx3]
}

/// Marginal family of the nonholonomic integrator over `theta in [0, 2 pi]`.
pub fn ni_family() -> MarginalFamily {
    MarginalFamily::new(
        3,
        "ni_family",
        vec![(0.0, 2.0 * PI)],
        |x, t| ni_f(x, t[0]),
        |x, t| ni_dfdx(x, t[0]),
    )
    .with_guard(
        |x, t| {
            if x[2] == 0.0 {
                f64::INFINITY
            } else {
                ni_denominator(x, t[0])
            }
        },
        DEFAULT_SINGULAR_GUARD,
    )
}

/// `V(v) = sqrt(3 x1^2 + 4 x2^2) - |x1|`.
pub fn artstein_v(v: &[f64]) -> f64 {
    (3.0 * v[0] * v[0] + 4.0 * v[1] * v[1]).sqrt() - v[0].abs()
}

pub fn artstein_v_field() -> ScalarField {
    ScalarField::new(2, "artstein_v", artstein_v)
}

/// `F(v; theta) = sqrt(3 x1^2 + 4 x2^2) + x1 (theta / pi - 1)`, `theta in [0, 2 pi]`.
///
/// Minimizing the last term over `theta` gives `-|x1|`, so `min F` is exactly
/// [`artstein_v`]. The ellipsoidal norm is smooth away from the origin; its
/// gradient is taken as zero there.
pub fn artstein_f(v: &[f64], theta: f64) -> f64 {
    (3.0 * v[0] * v[0] + 4.0 * v[1] * v[1]).sqrt() + v[0] * (theta / PI - 1.0)
}

pub fn artstein_dfdx(v: &[f64], theta: f64) -> Vec<f64> {
    let s = (3.0 * v[0] * v[0] + 4.0 * v[1] * v[1]).sqrt();
    let lin = theta / PI - 1.0;
    if s == 0.0 {
        vec![lin, 0.0]
    } else {
        vec![3.0 * v[0] / s + lin, 4.0 * v[1] / s]
    }
}

pub fn artstein_family() -> MarginalFamily {
    MarginalFamily::new(
        2,
        "artstein_family",
        vec![(0.0, 2.0 * PI)],
        |v, t| artstein_f(v, t[0]),
        |v, t| artstein_dfdx(v, t[0]),
    )
}

/// Input columns `G(x)` of the kinematic subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputMap {
    /// `G(x) = [g1 g2]` of the nonholonomic integrator.
    Ni,
    /// `G(v) = g(v)` of the Artstein circle.
    Artstein,
}

impl InputMap {
    fn columns(self, x: &[f64]) -> Vec<Vec<f64>> {
        match self {
            InputMap::Ni => vec![ni_g1(x).to_vec(), ni_g2(x).to_vec()],
            InputMap::Artstein => vec![artstein_g(x).to_vec()],
        }
    }
}

/// Backstepping data: the base family, the gain `K` and numerical settings.
#[derive(Debug, Clone)]
pub struct BacksteppingContext {
    pub base_family: MarginalFamily,
    pub gain: f64,
    pub theta_tol: f64,
    pub fd_step: f64,
    /// Use `u = -K z` instead of the full law.
    pub simplified: bool,
    input_map: InputMap,
}

/// One evaluation of the backstepping law.
#[derive(Debug, Clone, PartialEq)]
pub struct BacksteppingStep {
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
    pub composite_value: f64,
    pub z: Vec<f64>,
    /// Decay expression `S(x, z; theta)` along `(G eta, u)`.
    pub s_value: f64,
}

impl BacksteppingContext {
    pub fn new(base_family: MarginalFamily, input_map: InputMap, gain: f64) -> Result<Self> {
        if !(gain > 0.0) {
            return Err(Error::InvalidInput(format!(
                "backstepping gain must be > 0, got {gain}"
            )));
        }
        Ok(Self {
            base_family,
            gain,
            theta_tol: DEFAULT_THETA_TOL,
            fd_step: 1e-5,
            simplified: false,
            input_map,
        })
    }

    /// ENDI on top of the nonholonomic-integrator family.
    pub fn endi(gain: f64) -> Result<Self> {
        Self::new(ni_family(), InputMap::Ni, gain)
    }

    /// Dynamic Artstein circle on top of the Artstein family.
    pub fn artstein(gain: f64) -> Result<Self> {
        Self::new(artstein_family(), InputMap::Artstein, gain)
    }

    pub fn with_fd_step(mut self, step: f64) -> Result<Self> {
        if !(1e-8..=1e-3).contains(&step) {
            return Err(Error::InvalidInput(format!("fd_step {step} outside [1e-8, 1e-3]")));
        }
        self.fd_step = step;
        Ok(self)
    }

    pub fn with_simplified(mut self, simplified: bool) -> Self {
        self.simplified = simplified;
        self
    }

    pub fn with_theta_tol(mut self, tol: f64) -> Self {
        self.theta_tol = tol;
        self
    }

    pub fn input_map(&self) -> InputMap {
        self.input_map
    }

    /// Dimension of the kinematic part `x`.
    pub fn base_dim(&self) -> usize {
        self.base_family.dim()
    }

    /// Number of actuated integrators `eta`.
    pub fn input_dim(&self) -> usize {
        match self.input_map {
            InputMap::Ni => 2,
            InputMap::Artstein => 1,
        }
    }

    pub fn columns(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.input_map.columns(x)
    }

    fn kappa_raw(&self, x: &[f64], theta: &[f64]) -> Vec<f64> {
        let z = self.base_family.dfdx(x, theta);
        match self.input_map {
            InputMap::Ni => vec![-(z[0] - x[1] * z[2]), -(z[1] + x[0] * z[2])],
            InputMap::Artstein => {
                let g = artstein_g(x);
                vec![-(z[0] * g[0] + z[1] * g[1])]
            }
        }
    }

    /// `kappa(x; theta) = -G(x)^T dF/dx(x; theta)`.
    pub fn kappa(&self, x: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        if !self.base_family.admissible(x, theta) {
            return Err(Error::GuardedDomain { x: x.to_vec() });
        }
        Ok(self.kappa_raw(x, theta))
    }

    /// `J[j][i] = d kappa_j / d x_i` by central differences at fixed `theta`.
    pub fn kappa_jacobian(&self, x: &[f64], theta: &[f64]) -> Vec<Vec<f64>> {
        let m = self.input_dim();
        let n = x.len();
        let h = self.fd_step;
        let mut jac = vec![vec![0.0; n]; m];
        let mut p = x.to_vec();
        for i in 0..n {
            p[i] = x[i] + h;
            let kp = self.kappa_raw(&p, theta);
            p[i] = x[i] - h;
            let km = self.kappa_raw(&p, theta);
            p[i] = x[i];
            for j in 0..m {
                jac[j][i] = (kp[j] - km[j]) / (2.0 * h);
            }
        }
        jac
    }

    /// `F_c(x, eta; theta)`, `+inf` where the base guard rejects `theta`.
    pub fn composite_f(&self, s: &[f64], theta: &[f64]) -> f64 {
        let n = self.base_dim();
        let (x, eta) = s.split_at(n);
        if !self.base_family.admissible(x, theta) {
            return f64::INFINITY;
        }
        let k = self.kappa_raw(x, theta);
        let q: f64 = eta.iter().zip(&k).map(|(e, k)| (e - k) * (e - k)).sum();
        self.base_family.f(x, theta) + 0.5 * q
    }

    /// `(dF/dx - J^T z, z)` at fixed `theta`.
    pub fn composite_gradient(&self, s: &[f64], theta: &[f64]) -> Vec<f64> {
        let n = self.base_dim();
        let (x, eta) = s.split_at(n);
        let zeta = self.base_family.dfdx(x, theta);
        let k = self.kappa_raw(x, theta);
        let z: Vec<f64> = eta.iter().zip(&k).map(|(e, k)| e - k).collect();
        let jac = self.kappa_jacobian(x, theta);
        let mut g: Vec<f64> = (0..n)
            .map(|i| zeta[i] - (0..z.len()).map(|j| jac[j][i] * z[j]).sum::<f64>())
            .collect();
        g.extend_from_slice(&z);
        g
    }

    /// The augmented family as a [`MarginalFamily`] on `(x, eta)`.
    pub fn composite_family(&self) -> MarginalFamily {
        let a = Arc::new(self.clone());
        let b = Arc::clone(&a);
        let c = Arc::clone(&a);
        let label = match self.input_map {
            InputMap::Ni => "vc_endi",
            InputMap::Artstein => "vc_artstein",
        };
        let n = self.base_dim();
        let threshold = self.base_family.singular_guard().max(f64::MIN_POSITIVE);
        let fam = MarginalFamily::new(
            n + self.input_dim(),
            label,
            self.base_family.theta_box().to_vec(),
            move |s, t| a.composite_f(s, t),
            move |s, t| b.composite_gradient(s, t),
        )
        .with_guard(
            move |s, t| {
                if c.base_family.admissible(&s[..n], t) {
                    f64::INFINITY
                } else {
                    0.0
                }
            },
            threshold,
        )
        .with_theta_accuracy(self.base_family.theta_accuracy());
        match self.base_family.theta_grid() {
            Some(k) => fam.with_theta_grid(k),
            None => fam,
        }
    }

    /// `V_c(x, eta)` via a single parameter search (no cluster enumeration).
    pub fn composite_value(&self, s: &[f64]) -> Result<f64> {
        let p = self.base_family.theta_problem(self.base_family.theta_accuracy());
        let m = boxopt::minimize(&p, |t| self.composite_f(s, t));
        if m.value.is_finite() {
            Ok(m.value)
        } else {
            Err(Error::GuardedDomain { x: s.to_vec() })
        }
    }

    /// `V_c` as a scalar field on `(x, eta)`; guard failures give NaN.
    pub fn composite_field(&self) -> ScalarField {
        let ctx = self.clone();
        let label = match self.input_map {
            InputMap::Ni => "vc_endi",
            InputMap::Artstein => "vc_artstein",
        };
        ScalarField::new(self.base_dim() + self.input_dim(), label, move |s| {
            ctx.composite_value(s).unwrap_or(f64::NAN)
        })
    }

    /// `(V_c, theta*_c)`; among parameter clusters within `theta_tol` of the
    /// best value the lexicographically smallest parameter is returned.
    pub fn composite_minimizer(&self, s: &[f64]) -> Result<(f64, Vec<f64>)> {
        let p = self.base_family.theta_problem(self.base_family.theta_accuracy());
        let clusters = boxopt::argmin_clusters(&p, self.theta_tol, |t| self.composite_f(s, t));
        let mut best: Option<(f64, Vec<f64>)> = None;
        let vmin = clusters.iter().map(|c| c.value).fold(f64::INFINITY, f64::min);
        if !vmin.is_finite() {
            return Err(Error::GuardedDomain { x: s.to_vec() });
        }
        for c in clusters {
            match &best {
                Some((_, t)) if !lex_less(&c.argmin, t) => {}
                _ => best = Some((c.value, c.argmin)),
            }
        }
        let (_, theta) = best.expect("non-empty clusters");
        Ok((vmin, theta))
    }

    /// `S(x, z; theta)` term by term:
    /// `<zeta, G z> + <zeta, G kappa> - <J^T z, G eta> + <z, u>`.
    pub fn s_value(&self, s: &[f64], theta: &[f64], u: &[f64]) -> f64 {
        let n = self.base_dim();
        let (x, eta) = s.split_at(n);
        let zeta = self.base_family.dfdx(x, theta);
        let cols = self.columns(x);
        let k = self.kappa_raw(x, theta);
        let z: Vec<f64> = eta.iter().zip(&k).map(|(e, k)| e - k).collect();
        let jac = self.kappa_jacobian(x, theta);
        let g_times = |w: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| cols.iter().zip(w).map(|(g, wj)| g[i] * wj).sum())
                .collect()
        };
        let gz = g_times(&z);
        let gk = g_times(&k);
        let geta = g_times(eta);
        let jtz: Vec<f64> = (0..n).map(|i| (0..z.len()).map(|j| jac[j][i] * z[j]).sum()).collect();
        dot(&zeta, &gz) + dot(&zeta, &gk) - dot(&jtz, &geta) + dot(&z, u)
    }

    /// Evaluates the backstepping law at `s = (x, eta)`.
    pub fn control(&self, s: &[f64]) -> Result<BacksteppingStep> {
        let n = self.base_dim();
        if s.len() != n + self.input_dim() {
            return Err(Error::InvalidInput(format!(
                "state has length {}, expected {}",
                s.len(),
                n + self.input_dim()
            )));
        }
        let (value, theta) = self.composite_minimizer(s)?;
        let (x, eta) = s.split_at(n);
        let zeta = self.base_family.dfdx(x, &theta);
        let k = self.kappa(x, &theta)?;
        let z: Vec<f64> = eta.iter().zip(&k).map(|(e, k)| e - k).collect();
        let u: Vec<f64> = if self.simplified {
            z.iter().map(|zj| -self.gain * zj).collect()
        } else {
            let cols = self.columns(x);
            let jac = self.kappa_jacobian(x, &theta);
            let geta: Vec<f64> = (0..n)
                .map(|i| cols.iter().zip(eta).map(|(g, e)| g[i] * e).sum())
                .collect();
            (0..z.len())
                .map(|j| dot(&jac[j], &geta) - dot(&cols[j], &zeta) - self.gain * z[j])
                .collect()
        };
        let s_value = self.s_value(s, &theta, &u);
        Ok(BacksteppingStep {
            u,
            theta,
            composite_value: value,
            z,
            s_value,
        })
    }
}

/// Sontag-type feedback for the nonholonomic integrator at a fixed parameter.
pub fn sontag_kappa_ni(ctx: &BacksteppingContext, x: &[f64], theta: f64) -> Result<Vec<f64>> {
    ctx.kappa(x, &[theta])
}

/// `(V_c(x, eta), theta*_c)` for the ENDI composite CLF.
pub fn vc_endi(ctx: &BacksteppingContext, x: &[f64], eta: &[f64]) -> Result<(f64, f64)> {
    let s: Vec<f64> = x.iter().chain(eta).cloned().collect();
    ctx.composite_minimizer(&s).map(|(v, t)| (v, t[0]))
}

/// Backstepping control for ENDI.
pub fn kappa_c_endi(ctx: &BacksteppingContext, x: &[f64], eta: &[f64]) -> Result<Vec<f64>> {
    let s: Vec<f64> = x.iter().chain(eta).cloned().collect();
    ctx.control(&s).map(|st| st.u)
}

/// `kappa(v; theta) = -<zeta(v; theta), g(v)>`.
pub fn kappa_artstein(ctx: &BacksteppingContext, v: &[f64], theta: f64) -> Result<f64> {
    ctx.kappa(v, &[theta]).map(|k| k[0])
}

pub fn vc_artstein(ctx: &BacksteppingContext, v: &[f64], w: f64) -> Result<(f64, f64)> {
    let s = [v[0], v[1], w];
    ctx.composite_minimizer(&s).map(|(val, t)| (val, t[0]))
}

/// `u = w <grad_v kappa, g(v)> - <zeta, g(v)> - K z`.
pub fn kappa_c_artstein(ctx: &BacksteppingContext, v: &[f64], w: f64) -> Result<f64> {
    let s = [v[0], v[1], w];
    ctx.control(&s).map(|st| st.u[0])
}

/// `|chi(x)| + x1^2` for the sliding-mode demo: distance to the surface plus
/// the on-surface decay term.
pub fn smc_v_field() -> ScalarField {
    ScalarField::new(2, "smc_v", |x| (x[0] + x[1]).abs() + x[0] * x[0])
}

/// Looks a CLF up by its configuration label.
pub fn clf_from_label(label: &str) -> Result<ScalarField> {
    match label {
        "v1_ni" => Ok(v1_ni_field()),
        "v2_ni" => Ok(v2_ni_field()),
        "ni_family" => Ok(ni_family().to_field()),
        "artstein_v" => Ok(artstein_v_field()),
        "artstein_family" => Ok(artstein_family().to_field()),
        "vc_endi" => Ok(BacksteppingContext::endi(1.0)?.composite_field()),
        "vc_artstein" => Ok(BacksteppingContext::artstein(1.0)?.composite_field()),
        "smc_v" => Ok(smc_v_field()),
        other => Err(Error::Config(format!("unknown CLF label `{other}`"))),
    }
}

/// Marginal family behind a CLF label, if it has one.
pub fn family_from_label(label: &str) -> Option<MarginalFamily> {
    match label {
        "ni_family" => Some(ni_family()),
        "artstein_family" => Some(artstein_family()),
        "vc_endi" => BacksteppingContext::endi(1.0).ok().map(|c| c.composite_family()),
        "vc_artstein" => BacksteppingContext::artstein(1.0).ok().map(|c| c.composite_family()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::central_gradient;
    use crate::nonsmooth::disassembled_subdifferential;
    use crate::systems::make_ni;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn v1_v2_values() {
        assert_eq!(v1_ni(&[1.0, 0.0, 0.0]), 1.0);
        assert_eq!(v2_ni(&[1.0, 0.0, 0.0]), 1.0);
        assert_eq!(v1_ni(&[0.0; 3]), 0.0);
        assert_eq!(v2_ni(&[0.0; 3]), 0.0);
        assert_eq!(v1_ni(&[0.0, 0.0, 1.0]), 2.0);
        assert_eq!(v2_ni(&[0.0, 0.0, 1.0]), 12.0);
    }

    #[test]
    fn ni_family_values() {
        let fam = ni_family();
        for t in [0.0, 1.0, 3.0, 6.0] {
            assert_eq!(fam.f(&[1.0, 0.0, 0.0], &[t]), 1.0);
            assert_eq!(fam.f(&[0.0, 0.0, 1.0], &[t]), 1.0);
        }
        assert_eq!(fam.value(&[0.0; 3]).unwrap(), 0.0);
        assert!((fam.value(&[0.0, 0.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ni_family_closed_form_minimum() {
        // min over theta aligns theta with (x1, x2): D = r + sqrt|x3|
        let fam = ni_family();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let a = x[2].abs();
            let exact = x[0].powi(4) + x[1].powi(4) + a.powi(3) / (r + a.sqrt()).powi(2);
            assert!((fam.value(&x).unwrap() - exact).abs() < 1e-9 * (1.0 + exact));
        }
    }

    #[test]
    fn ni_disassembled_at_axis_point() {
        let s = disassembled_subdifferential(&ni_family(), &[1.0, 0.0, 0.0], 1e-6).unwrap();
        assert_eq!(s.vectors, vec![vec![4.0, 0.0, 0.0]]);
    }

    #[test]
    fn artstein_disassembled_at_vertical_point() {
        // F((0,1); theta) is flat in theta: the gradient set spans (theta/pi - 1, 2)
        let s = disassembled_subdifferential(&artstein_family(), &[0.0, 1.0], 1e-6).unwrap();
        assert!(s.len() > 2);
        assert!(s.distance_to(&[-1.0, 2.0]) < 1e-12);
        assert!(s.distance_to(&[1.0, 2.0]) < 1e-12);
        assert!(s
            .vectors
            .iter()
            .all(|z| (z[1] - 2.0).abs() < 1e-12 && z[0].abs() <= 1.0));
    }

    #[test]
    fn sontag_kappa_examples() {
        let ctx = BacksteppingContext::endi(1.0).unwrap();
        let k = sontag_kappa_ni(&ctx, &[1.0, 0.0, 0.0], 0.3).unwrap();
        assert_eq!(k, vec![-4.0, 0.0]);
        let x = [1.0, 0.0, 0.0];
        let ni = make_ni();
        let f = ni.f(&x, &k);
        assert_eq!(dot(&[4.0, 0.0, 0.0], &f), -16.0);
    }

    #[test]
    fn kappa_guarded() {
        let ctx = BacksteppingContext::endi(1.0).unwrap();
        // x1 cos(pi) + sqrt(1) = 0
        assert!(matches!(
            sontag_kappa_ni(&ctx, &[1.0, 0.0, 1.0], PI),
            Err(Error::GuardedDomain { .. })
        ));
    }

    #[test]
    fn vc_endi_origin_and_case_one() {
        let ctx = BacksteppingContext::endi(1.0).unwrap();
        let (v, _) = vc_endi(&ctx, &[0.0; 3], &[0.0; 2]).unwrap();
        assert_eq!(v, 0.0);
        // eta = kappa(x; theta*) makes the quadratic term vanish
        let x = [0.6, -0.4, 0.3];
        let fam = ni_family();
        let m = fam.minimize_theta(&x).unwrap();
        let eta = ctx.kappa(&x, &m.argmin).unwrap();
        let (vc, theta) = vc_endi(&ctx, &x, &eta).unwrap();
        assert!((vc - m.value).abs() < 1e-9);
        assert!((theta - m.argmin[0]).abs() < 1e-4);
    }

    #[test]
    fn vc_endi_theta_grid_oracle() {
        let ctx = BacksteppingContext::endi(1.0).unwrap();
        let x = [1.0, 0.0, 0.0];
        let eta = [0.0, 0.0];
        // at x3 = 0 the family is flat in theta, kappa = (-4, 0): value 1 + 8
        let oracle = (0..=20_000)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 20_000.0;
                let k = ctx.kappa(&x, &[t]).unwrap();
                ni_f(&x, t) + 0.5 * (k[0] * k[0] + k[1] * k[1])
            })
            .fold(f64::INFINITY, f64::min);
        assert!((oracle - 9.0).abs() < 1e-12);
        let (v, _) = vc_endi(&ctx, &x, &eta).unwrap();
        assert!((v - oracle).abs() < 1e-9);
    }

    #[test]
    fn kappa_c_endi_origin_is_zero() {
        let ctx = BacksteppingContext::endi(1.0).unwrap();
        let u = kappa_c_endi(&ctx, &[0.0; 3], &[0.0; 2]).unwrap();
        assert!(u.iter().all(|v| v.abs() < 1e-12), "{u:?}");
    }

    #[test]
    fn kappa_c_endi_case_one_reduction() {
        let ctx = BacksteppingContext::endi(1.0).unwrap();
        let x = [0.6, -0.4, 0.3];
        let m = ni_family().minimize_theta(&x).unwrap();
        let eta = ctx.kappa(&x, &m.argmin).unwrap();
        let s: Vec<f64> = x.iter().chain(&eta).cloned().collect();
        let st = ctx.control(&s).unwrap();
        assert!(st.z.iter().all(|z| z.abs() < 1e-4));
        let zeta = ni_dfdx(&x, st.theta[0]);
        let k = ctx.kappa(&x, &st.theta).unwrap();
        let gk: Vec<f64> = (0..3).map(|i| ni_g1(&x)[i] * k[0] + ni_g2(&x)[i] * k[1]).collect();
        let expected = dot(&zeta, &gk);
        assert!(expected < 0.0);
        assert!((st.s_value - expected).abs() < 1e-6);
    }

    #[test]
    fn endi_decay_random_points() {
        let ctx = BacksteppingContext::endi(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut count = 0;
        while count < 20 {
            let s: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let Ok(st) = ctx.control(&s) else { continue };
            count += 1;
            let zeta = ni_dfdx(&s[..3], st.theta[0]);
            let k = ctx.kappa(&s[..3], &st.theta).unwrap();
            let gtz = [dot(&ni_g1(&s), &zeta), dot(&ni_g2(&s), &zeta)];
            let closed = -(gtz[0] * gtz[0] + gtz[1] * gtz[1]) - ctx.gain * st.z.iter().map(|z| z * z).sum::<f64>();
            let _ = k;
            assert!(st.s_value < 0.0);
            assert!((st.s_value - closed).abs() < 1e-6 * (1.0 + closed.abs()));
        }
    }

    #[test]
    fn artstein_values() {
        assert!((artstein_v(&[1.0, 0.0]) - (3f64.sqrt() - 1.0)).abs() < 1e-15);
        assert_eq!(artstein_v(&[0.0, 0.0]), 0.0);
        // 2-D grid oracle over theta
        let oracle = (0..=4000)
            .map(|i| artstein_f(&[1.0, 0.0], 2.0 * PI * i as f64 / 4000.0))
            .fold(f64::INFINITY, f64::min);
        let v = artstein_family().value(&[1.0, 0.0]).unwrap();
        assert!((v - oracle).abs() < 1e-6);
        assert!((v - artstein_v(&[1.0, 0.0])).abs() < 1e-6);
    }

    #[test]
    fn artstein_kappa_decay_and_origin() {
        let ctx = BacksteppingContext::artstein(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let v = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let t = rng.gen_range(0.0..2.0 * PI);
            let k = kappa_artstein(&ctx, &v, t).unwrap();
            let zeta = artstein_dfdx(&v, t);
            let g = artstein_g(&v);
            let lhs = dot(&zeta, &[g[0] * k, g[1] * k]);
            assert!((lhs + dot(&zeta, &g).powi(2)).abs() < 1e-12);
            assert!(lhs <= 0.0);
        }
        assert_eq!(kappa_artstein(&ctx, &[0.0, 0.0], 1.0).unwrap(), 0.0);
        let u = kappa_c_artstein(&ctx, &[0.0, 0.0], 0.7).unwrap();
        assert!((u + 0.7).abs() < 1e-12);
    }

    #[test]
    fn artstein_composite_decay() {
        let ctx = BacksteppingContext::artstein(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let s = [
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ];
            let st = ctx.control(&s).unwrap();
            assert!(st.s_value < 0.0, "{s:?} {st:?}");
        }
    }

    #[test]
    fn family_gradients_match_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for fam in [ni_family(), artstein_family()] {
            let mut checked = 0;
            while checked < 100 {
                let x: Vec<f64> = (0..fam.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let t = [rng.gen_range(0.0..2.0 * PI)];
                let ok = (0..fam.dim()).all(|i| {
                    let mut p = x.clone();
                    p[i] += 1e-3;
                    let mut q = x.clone();
                    q[i] -= 1e-3;
                    fam.admissible(&p, &t) && fam.admissible(&q, &t) && fam.admissible(&x, &t)
                });
                if !ok || x[2 % fam.dim()].abs() < 1e-2 {
                    continue;
                }
                if fam.label() == "ni_family" && ni_denominator(&x, t[0]).abs() < 0.2 {
                    continue;
                }
                checked += 1;
                let g = fam.dfdx(&x, &t);
                let fd = central_gradient(|y| fam.f(y, &t), &x, 1e-6);
                for (a, b) in g.iter().zip(&fd) {
                    assert!(
                        (a - b).abs() <= 1e-5 * (1.0 + a.abs()),
                        "{} {x:?} {g:?} {fd:?}",
                        fam.label()
                    );
                }
            }
        }
    }

    #[test]
    fn labels() {
        for l in [
            "v1_ni",
            "v2_ni",
            "ni_family",
            "artstein_v",
            "artstein_family",
            "vc_endi",
            "vc_artstein",
            "smc_v",
        ] {
            assert_eq!(clf_from_label(l).unwrap().label(), l);
        }
        assert!(clf_from_label("v3").is_err());
    }
}
