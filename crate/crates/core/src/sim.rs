//! Sample-and-hold closed loop: the controller is consulted once per sampling
//! instant and its output is held while fixed-step RK4 integrates the plant.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::controllers::{Controller, StepFlags};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg::{all_finite, norm};
use crate::systems::ControlSystem;

/// States with `|x| > BLOWUP_NORM` are treated as escaped.
pub const BLOWUP_NORM: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingSchedule {
    pub delta: f64,
    pub horizon: f64,
    pub substeps: usize,
}

impl SamplingSchedule {
    pub fn new(delta: f64, horizon: f64, substeps: usize) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidInput(format!("delta must be > 0, got {delta}")));
        }
        if !(horizon >= delta && horizon.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "horizon {horizon} shorter than delta {delta}"
            )));
        }
        if substeps == 0 {
            return Err(Error::InvalidInput("substeps must be >= 1".into()));
        }
        Ok(Self {
            delta,
            horizon,
            substeps,
        })
    }

    /// Number of sampling intervals, `ceil(T / delta)`.
    pub fn intervals(&self) -> usize {
        (self.horizon / self.delta - 1e-9).ceil() as usize
    }
}

/// One classical RK4 step of `x' = f(x, u)` with `u` held.
pub fn rk4_step(sys: &ControlSystem, x: &[f64], u: &[f64], h: f64) -> Vec<f64> {
    let k1 = sys.f(x, u);
    let p: Vec<f64> = x.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
    let k2 = sys.f(&p, u);
    let p: Vec<f64> = x.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
    let k3 = sys.f(&p, u);
    let p: Vec<f64> = x.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
    let k4 = sys.f(&p, u);
    (0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Flow over one sampling interval of length `delta` starting at time `t0`.
pub fn flow(sys: &ControlSystem, x: &[f64], u: &[f64], delta: f64, substeps: usize, t0: f64) -> Result<Vec<f64>> {
    let h = delta / substeps as f64;
    let mut y = x.to_vec();
    for j in 0..substeps {
        y = rk4_step(sys, &y, u, h);
        if !all_finite(&y) || norm(&y) > BLOWUP_NORM {
            return Err(Error::BlowUp {
                t: t0 + (j + 1) as f64 * h,
            });
        }
    }
    Ok(y)
}

/// Sampled closed-loop trajectory. Row `k` holds `x(k delta)`, the control
/// held on `[k delta, (k+1) delta)`, the CLF value and the step flags.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    pub clf_values: Vec<f64>,
    pub flags: Vec<StepFlags>,
    /// Time at which the state escaped, if it did.
    pub blowup: Option<f64>,
    pub warnings: Vec<String>,
}

impl TrajectoryLog {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&[f64]> {
        self.states.last().map(|s| s.as_slice())
    }

    pub fn final_norm(&self) -> f64 {
        self.final_state().map(norm).unwrap_or(f64::NAN)
    }

    /// Header `t,x1..xn,u1..um,V,flag` and one row per sampling instant.
    /// Numbers use a 17-significant-digit exponent form.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, |s| s.len());
        let m = self.controls.first().map_or(0, |u| u.len());
        let mut out = String::from("t");
        for i in 1..=n {
            let _ = write!(out, ",x{i}");
        }
        for j in 1..=m {
            let _ = write!(out, ",u{j}");
        }
        out.push_str(",V,flag\n");
        let last = self.len().saturating_sub(1);
        for k in 0..self.len() {
            let _ = write!(out, "{:.16e}", self.times[k]);
            for v in self.states[k].iter().chain(&self.controls[k]) {
                let _ = write!(out, ",{v:.16e}");
            }
            let mut flag = self.flags[k].to_string();
            if k == last && self.blowup.is_some() {
                flag = if self.flags[k].any() {
                    flag + "|blowup"
                } else {
                    "blowup".into()
                };
            }
            let _ = write!(out, ",{:.16e},{flag}", self.clf_values[k]);
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Runs the sample-and-hold loop for `ceil(T / delta)` intervals.
///
/// An escape (non-finite state or `|x| > 1e6`) ends the run early; the log
/// keeps every completed instant and records the escape time.
pub fn simulate(
    sys: &ControlSystem,
    ctrl: &dyn Controller,
    x0: &[f64],
    sched: &SamplingSchedule,
    clf: &ScalarField,
) -> Result<TrajectoryLog> {
    if x0.len() != sys.state_dim() {
        return Err(Error::InvalidInput(format!(
            "x0 has length {}, system `{}` has {} states",
            x0.len(),
            sys.label(),
            sys.state_dim()
        )));
    }
    if !all_finite(x0) {
        return Err(Error::InvalidInput("x0 must be finite".into()));
    }
    if clf.dim() != sys.state_dim() {
        return Err(Error::InvalidInput(format!(
            "CLF `{}` has dimension {}, expected {}",
            clf.label(),
            clf.dim(),
            sys.state_dim()
        )));
    }
    if let Some(d) = ctrl.sampling_time() {
        if (d - sched.delta).abs() > 1e-12 * sched.delta.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "controller `{}` was built for delta = {d}, schedule uses {}",
                ctrl.label(),
                sched.delta
            )));
        }
    }
    let steps = sched.intervals();
    let mut log = TrajectoryLog {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        controls: Vec::with_capacity(steps + 1),
        clf_values: Vec::with_capacity(steps + 1),
        flags: Vec::with_capacity(steps + 1),
        blowup: None,
        warnings: ctrl.warnings(),
    };
    let mut x = x0.to_vec();
    for k in 0..=steps {
        let t = k as f64 * sched.delta;
        let action = ctrl.compute(&x);
        let (u, clipped) = sys.clamp_control(&action.u);
        let mut flags = action.flags;
        flags.saturated |= clipped;
        log.times.push(t);
        log.clf_values.push(clf.eval(&x));
        log.states.push(x.clone());
        log.controls.push(u.clone());
        log.flags.push(flags);
        if k == steps {
            break;
        }
        match flow(sys, &x, &u, sched.delta, sched.substeps, t) {
            Ok(y) => x = y,
            Err(Error::BlowUp { t }) => {
                log.blowup = Some(t);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(log)
}

/// Outcome of the practical-stability check on one log.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    /// First instant from which the state stays in the closed `r`-ball to the end of the log.
    pub entered_at: Option<f64>,
    /// First instant with `|x| <= r`.
    pub first_entry: Option<f64>,
    pub stayed: bool,
    pub bounded: bool,
    pub max_norm: f64,
    pub pass: bool,
}

/// Checks that the log stays within `10 R` and settles in `B_r` no later
/// than `t_entry`.
pub fn verify_practical_stability(log: &TrajectoryLog, big_r: f64, r: f64, t_entry: f64) -> Result<Verdict> {
    if log.is_empty() {
        return Err(Error::InvalidInput("empty trajectory log".into()));
    }
    if !(big_r > r && r > 0.0) {
        return Err(Error::InvalidInput(format!("need R > r > 0, got R = {big_r}, r = {r}")));
    }
    let norms: Vec<f64> = log.states.iter().map(|s| norm(s)).collect();
    if !(norms[0] <= big_r) {
        return Err(Error::InvalidInput(format!(
            "log starts at |x| = {} outside B_R, R = {big_r}",
            norms[0]
        )));
    }
    let max_norm = norms
        .iter()
        .cloned()
        .fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) });
    let bounded = log.blowup.is_none() && max_norm.is_finite() && max_norm <= 10.0 * big_r;
    let first_entry = norms.iter().position(|v| *v <= r).map(|k| log.times[k]);
    let entered_at = if norms.last().is_some_and(|v| *v <= r) {
        let k = norms.iter().rposition(|v| !(*v <= r)).map_or(0, |k| k + 1);
        Some(log.times[k])
    } else {
        None
    };
    let stayed = entered_at.is_some();
    let pass = bounded && entered_at.is_some_and(|t| t <= t_entry);
    Ok(Verdict {
        entered_at,
        first_entry,
        stayed,
        bounded,
        max_norm,
        pass,
    })
}
