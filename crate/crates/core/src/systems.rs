//! Benchmark plants as immutable vector fields with control boxes.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::ScalarField;

type Dynamics = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// `x' = f(x, u)` with `u` restricted to an axis-aligned box.
#[derive(Clone)]
pub struct ControlSystem {
    label: String,
    state_dim: usize,
    control_dim: usize,
    f: Dynamics,
    control_box: Vec<(f64, f64)>,
}

impl fmt::Debug for ControlSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlSystem")
            .field("label", &self.label)
            .field("state_dim", &self.state_dim)
            .field("control_dim", &self.control_dim)
            .field("control_box", &self.control_box)
            .finish()
    }
}

impl ControlSystem {
    pub fn new<F>(
        label: impl Into<String>,
        state_dim: usize,
        control_dim: usize,
        control_box: Vec<(f64, f64)>,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        validate_box(&control_box, control_dim)?;
        Ok(Self {
            label: label.into(),
            state_dim,
            control_dim,
            f: Arc::new(f),
            control_box,
        })
    }

    /// Same dynamics with a different control box.
    pub fn with_control_box(mut self, control_box: Vec<(f64, f64)>) -> Result<Self> {
        validate_box(&control_box, self.control_dim)?;
        self.control_box = control_box;
        Ok(self)
    }

    /// Symmetric box `[-bound, bound]^m`.
    pub fn with_control_bound(self, bound: f64) -> Result<Self> {
        let m = self.control_dim;
        self.with_control_box(vec![(-bound, bound); m])
    }

    #[inline]
    pub fn f(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        (self.f)(x, u)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn control_dim(&self) -> usize {
        self.control_dim
    }

    pub fn control_box(&self) -> &[(f64, f64)] {
        &self.control_box
    }

    /// Largest absolute bound over all control coordinates.
    pub fn control_magnitude(&self) -> f64 {
        self.control_box
            .iter()
            .map(|(lo, hi)| lo.abs().max(hi.abs()))
            .fold(0.0, f64::max)
    }

    pub fn contains_control(&self, u: &[f64]) -> bool {
        u.len() == self.control_dim
            && u.iter()
                .zip(&self.control_box)
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Componentwise projection onto the box; the flag reports whether any
    /// coordinate was clipped.
    pub fn clamp_control(&self, u: &[f64]) -> (Vec<f64>, bool) {
        let mut clipped = false;
        let out = u
            .iter()
            .zip(&self.control_box)
            .map(|(v, &(lo, hi))| {
                let c = v.clamp(lo, hi);
                if c != *v {
                    clipped = true;
                }
                c
            })
            .collect();
        (out, clipped)
    }

    /// The zero input projected onto the box.
    pub fn zero_control(&self) -> Vec<f64> {
        self.clamp_control(&vec![0.0; self.control_dim]).0
    }
}

fn validate_box(b: &[(f64, f64)], m: usize) -> Result<()> {
    if b.len() != m {
        return Err(Error::InvalidInput(format!(
            "control box has {} coordinates, expected {m}",
            b.len()
        )));
    }
    if b.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite()) || lo > hi) {
        return Err(Error::InvalidInput(format!("malformed control box {b:?}")));
    }
    Ok(())
}

/// First input column of the nonholonomic integrator, `(1, 0, -x2)`.
pub fn ni_g1(x: &[f64]) -> [f64; 3] {
    [1.0, 0.0, -x[1]]
}

/// Second input column of the nonholonomic integrator, `(0, 1, x1)`.
pub fn ni_g2(x: &[f64]) -> [f64; 3] {
    [0.0, 1.0, x[0]]
}

/// Brockett's nonholonomic integrator, `x' = g1(x) u1 + g2(x) u2`, `U = [-1,1]^2`.
pub fn make_ni() -> ControlSystem {
    ControlSystem::new("ni", 3, 2, vec![(-1.0, 1.0); 2], |x, u| {
        vec![u[0], u[1], -x[1] * u[0] + x[0] * u[1]]
    })
    .expect("static box")
}

/// Nonholonomic integrator with integrators in front of the inputs,
/// `x' = g1(x) eta1 + g2(x) eta2`, `eta' = u`.
/// State `(x1, x2, x3, eta1, eta2)`, `U = [-3,3]^2`.
pub fn make_endi() -> ControlSystem {
    ControlSystem::new("endi", 5, 2, vec![(-3.0, 3.0); 2], |s, u| {
        let (x1, x2, e1, e2) = (s[0], s[1], s[3], s[4]);
        vec![e1, e2, -x2 * e1 + x1 * e2, u[0], u[1]]
    })
    .expect("static box")
}

/// Input vector field of the Artstein circle, `g(v) = (x2^2 - x1^2, -2 x1 x2)`.
pub fn artstein_g(v: &[f64]) -> [f64; 2] {
    [-v[0] * v[0] + v[1] * v[1], -2.0 * v[0] * v[1]]
}

/// Artstein circle with an integrator in front of the input; state `(x1, x2, w)`.
pub fn make_artstein_dyn() -> ControlSystem {
    ControlSystem::new("artstein", 3, 1, vec![(-3.0, 3.0)], |s, u| {
        let g = artstein_g(s);
        vec![g[0] * s[2], g[1] * s[2], u[0]]
    })
    .expect("static box")
}

/// The kinematic Artstein circle `v' = g(v) w` with `w` as the input.
pub fn make_artstein_v() -> ControlSystem {
    ControlSystem::new("artstein_v", 2, 1, vec![(-3.0, 3.0)], |v, w| {
        let g = artstein_g(v);
        vec![g[0] * w[0], g[1] * w[0]]
    })
    .expect("static box")
}

/// Double integrator used for the sliding-mode demo, `U = [-2,2]`.
pub fn make_smc_demo() -> ControlSystem {
    ControlSystem::new("smc_demo", 2, 1, vec![(-2.0, 2.0)], |x, u| vec![x[1], u[0]]).expect("static box")
}

/// Sliding surface of the demo plant, `chi(x) = x2 + x1`.
pub fn smc_surface() -> ScalarField {
    ScalarField::new(2, "chi", |x| x[1] + x[0]).with_grad(|_| vec![1.0, 1.0])
}

/// Looks a system up by its configuration label.
pub fn from_label(label: &str) -> Result<ControlSystem> {
    match label {
        "ni" => Ok(make_ni()),
        "endi" => Ok(make_endi()),
        "artstein" => Ok(make_artstein_dyn()),
        "artstein_v" => Ok(make_artstein_v()),
        "smc_demo" => Ok(make_smc_demo()),
        other => Err(Error::Config(format!("unknown system label `{other}`"))),
    }
}
