//! Configuration-driven experiments: the accuracy sweep on the three-wheel
//! robot model, the benchmark matrix and CLF checks.
//!
//! Configurations are single JSON documents. Every field is optional and
//! falls back to the defaults of [`ExperimentConfig::default`]. Cells run in a
//! worker pool; each writes its own CSV file and the summaries are written
//! after all cells finish, so outputs do not depend on scheduling.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clf::{clf_from_label, family_from_label, BacksteppingContext};
use crate::controllers::{
    Backstepping, Controller, DiniAiming, DiniAimingParams, InfcBased, OptimizationBased, Smc, SmcParams,
    SteepestDescent,
};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg::norm;
use crate::nonsmooth::{
    check_decay_disassembled, check_decay_ldgd, check_semiconcavity, DecayReport, InfConvOptions, SemiconcavityReport,
};
use crate::sim::{simulate, verify_practical_stability, SamplingSchedule, TrajectoryLog};
use crate::systems::{self, ControlSystem};

/// Environment variable overriding the configured seed.
pub const SEED_ENV: &str = "NSSTAB_SEED";

/// Accuracy sweep settings plus an optional benchmark matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: String,
    pub controller: String,
    pub clf: String,
    pub x0: Vec<f64>,
    pub delta: f64,
    pub horizon: f64,
    pub substeps: usize,
    pub alpha: f64,
    /// Values used for both the inner and the control-search accuracy.
    pub accuracies: Vec<f64>,
    /// Coarse grid of the composite-CLF parameter search.
    pub theta_grid: Option<usize>,
    /// Grid minima refined by the inf-convolution search.
    pub infc_starts: Option<usize>,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// `None` runs the default matrix, an empty list runs nothing.
    pub bench: Option<Vec<BenchCell>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: "endi".into(),
            controller: "infc".into(),
            clf: "vc_endi".into(),
            x0: vec![-1.0, 0.5, 0.01, 0.05, 0.075],
            delta: 0.005,
            horizon: 10.0,
            substeps: 10,
            alpha: 0.1,
            accuracies: vec![1e-2, 1e-3, 1e-4, 1e-6, 1e-8],
            theta_grid: Some(33),
            infc_starts: Some(1),
            seed: 42,
            out_dir: PathBuf::from("out"),
            bench: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and applies the seed override from the environment.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.apply_env()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(s) = std::env::var(SEED_ENV) {
            self.seed = s
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}=`{s}` is not an unsigned integer")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let sys = systems::from_label(&self.system)?;
        let clf = clf_from_label(&self.clf)?;
        if self.x0.len() != sys.state_dim() {
            return Err(Error::Config(format!(
                "x0 has {} entries, `{}` has {} states",
                self.x0.len(),
                self.system,
                sys.state_dim()
            )));
        }
        if clf.dim() != sys.state_dim() {
            return Err(Error::Config(format!(
                "CLF `{}` does not fit system `{}`",
                self.clf, self.system
            )));
        }
        if !CONTROLLER_LABELS.contains(&self.controller.as_str()) {
            return Err(Error::Config(format!("unknown controller label `{}`", self.controller)));
        }
        if self.accuracies.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::Config("accuracy values must be > 0".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        SamplingSchedule::new(self.delta, self.horizon, self.substeps).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(cells) = &self.bench {
            for c in cells {
                c.validate()?;
            }
        }
        Ok(())
    }

    pub fn bench_cells(&self) -> Vec<BenchCell> {
        self.bench.clone().unwrap_or_else(default_bench)
    }
}

pub const CONTROLLER_LABELS: [&str; 7] = ["steepest", "dini", "optim", "infc", "bks_endi", "bks_artstein", "smc"];

/// Controller selection and its tuning knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSpec {
    pub label: String,
    /// Control-search accuracy.
    pub accuracy: f64,
    /// Inner-search accuracy (inf-convolution, Dini neighbourhood).
    pub inner_accuracy: f64,
    pub alpha: f64,
    pub dini_r: f64,
    pub gain: f64,
    pub theta_grid: Option<usize>,
    /// Grid minima refined by the inf-convolution search.
    pub infc_starts: Option<usize>,
    /// Evaluation budget of the control searches.
    pub max_evals: Option<usize>,
    /// Run the semiconcavity pre-check of steepest descent on `[-1,1]^n`.
    pub precheck: bool,
}

impl Default for ControllerSpec {
    fn default() -> Self {
        Self {
            label: "infc".into(),
            accuracy: 1e-6,
            inner_accuracy: 1e-6,
            alpha: 0.1,
            dini_r: 0.05,
            gain: 1.0,
            theta_grid: None,
            infc_starts: None,
            max_evals: None,
            precheck: false,
        }
    }
}

/// One benchmark cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchCell {
    pub name: String,
    pub system: String,
    pub clf: String,
    pub controller: ControllerSpec,
    pub x0: Vec<f64>,
    pub delta: f64,
    pub horizon: f64,
    pub substeps: usize,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub r: f64,
    pub t_entry: f64,
}

impl Default for BenchCell {
    fn default() -> Self {
        Self {
            name: String::new(),
            system: "ni".into(),
            clf: "v1_ni".into(),
            controller: ControllerSpec::default(),
            x0: vec![0.5, 0.5, 0.5],
            delta: 0.01,
            horizon: 30.0,
            substeps: 10,
            big_r: 1.0,
            r: 0.1,
            t_entry: 30.0,
        }
    }
}

impl BenchCell {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(Error::Config(format!(
                "bench cell name `{}` must be a non-empty [A-Za-z0-9_-] string",
                self.name
            )));
        }
        let sys = systems::from_label(&self.system)?;
        let clf = clf_from_label(&self.clf)?;
        if self.x0.len() != sys.state_dim() || clf.dim() != sys.state_dim() {
            return Err(Error::Config(format!("cell `{}`: dimensions do not match", self.name)));
        }
        if !CONTROLLER_LABELS.contains(&self.controller.label.as_str()) {
            return Err(Error::Config(format!(
                "unknown controller label `{}`",
                self.controller.label
            )));
        }
        if !(self.big_r > self.r && self.r > 0.0 && self.t_entry >= 0.0) {
            return Err(Error::Config(format!(
                "cell `{}`: need R > r > 0 and t_entry >= 0",
                self.name
            )));
        }
        SamplingSchedule::new(self.delta, self.horizon, self.substeps).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

fn cell(name: &str, system: &str, clf: &str, label: &str) -> BenchCell {
    BenchCell {
        name: name.into(),
        system: system.into(),
        clf: clf.into(),
        controller: ControllerSpec {
            label: label.into(),
            ..Default::default()
        },
        ..Default::default()
    }
}

/// The default benchmark matrix.
pub fn default_bench() -> Vec<BenchCell> {
    let mut cells = vec![
        cell("ni_steepest", "ni", "v1_ni", "steepest"),
        cell("ni_dini", "ni", "v1_ni", "dini"),
        cell("ni_optim", "ni", "v1_ni", "optim"),
        cell("ni_infc", "ni", "ni_family", "infc"),
    ];
    cells[3].controller.alpha = 0.3;
    for c in &mut cells {
        c.controller.max_evals = Some(2000);
    }
    cells.push(BenchCell {
        x0: vec![-1.0, 0.5, 0.01, 0.05, 0.075],
        delta: 0.005,
        horizon: 30.0,
        big_r: 2.0,
        r: 0.2,
        t_entry: 30.0,
        ..cell("endi_bks", "endi", "vc_endi", "bks_endi")
    });
    cells.push(BenchCell {
        x0: vec![1.0, 0.0, 0.5],
        delta: 0.005,
        horizon: 40.0,
        big_r: 2.0,
        r: 0.2,
        t_entry: 40.0,
        ..cell("artstein_bks", "artstein", "vc_artstein", "bks_artstein")
    });
    cells.push(BenchCell {
        x0: vec![1.0, 1.0],
        delta: 0.001,
        horizon: 20.0,
        big_r: 2.0,
        r: 0.1,
        t_entry: 20.0,
        ..cell("smc_demo", "smc_demo", "smc_v", "smc")
    });
    cells
}

/// Builds the controller named in `spec` for `sys`, using `v` where the law needs a CLF.
pub fn make_controller(
    spec: &ControllerSpec,
    sys: &ControlSystem,
    v: &ScalarField,
    delta: f64,
) -> Result<Box<dyn Controller>> {
    let sys = sys.clone();
    let v = v.clone();
    let c: Box<dyn Controller> = match spec.label.as_str() {
        "steepest" => {
            let mut c = SteepestDescent::new(v, sys.clone(), spec.accuracy)?;
            if let Some(m) = spec.max_evals {
                c = c.with_max_evals(m);
            }
            if spec.precheck {
                let region = vec![(-1.0, 1.0); sys.state_dim()];
                c = c.with_semiconcavity_check(&region)?;
            }
            Box::new(c)
        }
        "dini" => {
            let p = DiniAimingParams::with_saturating_envelope(spec.dini_r, sys.control_magnitude())?;
            let mut c = DiniAiming::new(v, sys, p, spec.accuracy)?;
            if let Some(m) = spec.max_evals {
                c = c.with_max_evals(m);
            }
            Box::new(c)
        }
        "optim" => {
            let mut c = OptimizationBased::new(v, sys, delta, spec.accuracy)?;
            if let Some(m) = spec.max_evals {
                c = c.with_max_evals(m);
            }
            Box::new(c)
        }
        "infc" => {
            let opts = InfConvOptions {
                starts: spec.infc_starts,
                ..InfConvOptions::new(spec.inner_accuracy)
            };
            let mut c = InfcBased::new(v, sys, spec.alpha, spec.inner_accuracy, spec.accuracy)?.with_infc_options(opts);
            if let Some(m) = spec.max_evals {
                c = c.with_max_evals(m);
            }
            Box::new(c)
        }
        "bks_endi" => Box::new(Backstepping::endi(
            context(BacksteppingContext::endi(spec.gain)?, spec),
            sys,
        )?),
        "bks_artstein" => Box::new(Backstepping::artstein(
            context(BacksteppingContext::artstein(spec.gain)?, spec),
            sys,
        )?),
        "smc" => Box::new(Smc::new(SmcParams::demo(), sys)?),
        other => return Err(Error::Config(format!("unknown controller label `{other}`"))),
    };
    Ok(c)
}

fn context(mut ctx: BacksteppingContext, spec: &ControllerSpec) -> BacksteppingContext {
    if let Some(k) = spec.theta_grid {
        ctx.base_family = ctx.base_family.with_theta_grid(k);
    }
    ctx
}

/// CLF for a label, with an optional coarse grid for composite parameter searches.
fn clf_for(label: &str, theta_grid: Option<usize>) -> Result<ScalarField> {
    match (label, theta_grid) {
        ("vc_endi", Some(k)) => {
            let mut ctx = BacksteppingContext::endi(1.0)?;
            ctx.base_family = ctx.base_family.with_theta_grid(k);
            Ok(ctx.composite_field())
        }
        ("vc_artstein", Some(k)) => {
            let mut ctx = BacksteppingContext::artstein(1.0)?;
            ctx.base_family = ctx.base_family.with_theta_grid(k);
            Ok(ctx.composite_field())
        }
        _ => clf_from_label(label),
    }
}

/// One row of the accuracy sweep summary.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseStudyRow {
    pub accuracy: f64,
    pub final_norm: f64,
    pub min_clf: f64,
    pub initial_clf: f64,
    pub final_clf: f64,
    pub blowup: bool,
    /// Escape, or a final CLF value above the initial one.
    pub unstable: bool,
    pub wall_time: Duration,
}

fn accuracy_tag(a: f64) -> String {
    format!("{a:e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |t| format!("{t:.16e}"))
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

/// Simulates the configured system once per accuracy value.
pub fn case_study_log(cfg: &ExperimentConfig, accuracy: f64) -> Result<TrajectoryLog> {
    let sys = systems::from_label(&cfg.system)?;
    let v = clf_for(&cfg.clf, cfg.theta_grid)?;
    let spec = ControllerSpec {
        label: cfg.controller.clone(),
        accuracy,
        inner_accuracy: accuracy,
        alpha: cfg.alpha,
        theta_grid: cfg.theta_grid,
        infc_starts: cfg.infc_starts,
        ..Default::default()
    };
    let ctrl = make_controller(&spec, &sys, &v, cfg.delta)?;
    let sched = SamplingSchedule::new(cfg.delta, cfg.horizon, cfg.substeps)?;
    simulate(&sys, ctrl.as_ref(), &cfg.x0, &sched, &v)
}

/// Runs the accuracy sweep, writing `traj_eps{a}.csv` per accuracy and
/// `case_study_summary.csv`.
pub fn run_case_study(cfg: &ExperimentConfig, out_dir: &Path, jobs: Option<usize>) -> Result<Vec<CaseStudyRow>> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let pool = thread_pool(jobs)?;
    let results: Vec<Result<CaseStudyRow>> = pool.install(|| {
        cfg.accuracies
            .par_iter()
            .map(|&a| {
                let start = Instant::now();
                let log = case_study_log(cfg, a)?;
                log.write_csv(&out_dir.join(format!("traj_eps{}.csv", accuracy_tag(a))))?;
                let initial = log.clf_values[0];
                let last = *log.clf_values.last().expect("non-empty log");
                let blowup = log.blowup.is_some();
                Ok(CaseStudyRow {
                    accuracy: a,
                    final_norm: log.final_norm(),
                    min_clf: log.clf_values.iter().cloned().fold(f64::INFINITY, f64::min),
                    initial_clf: initial,
                    final_clf: last,
                    blowup,
                    unstable: blowup || !(last <= initial),
                    wall_time: start.elapsed(),
                })
            })
            .collect()
    });
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("accuracy,final_norm,min_V,initial_V,final_V,blowup,unstable\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{:e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
            r.accuracy, r.final_norm, r.min_clf, r.initial_clf, r.final_clf, r.blowup, r.unstable
        );
    }
    fs::write(out_dir.join("case_study_summary.csv"), csv)?;
    Ok(rows)
}

/// One row of the benchmark summary.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub name: String,
    pub system: String,
    pub controller: String,
    pub clf: String,
    pub pass: bool,
    pub entered_at: Option<f64>,
    pub first_entry: Option<f64>,
    pub max_norm: f64,
    pub final_norm: f64,
    pub blowup: bool,
    pub warnings: Vec<String>,
}

/// Simulates one benchmark cell.
pub fn bench_log(c: &BenchCell) -> Result<TrajectoryLog> {
    c.validate()?;
    let sys = systems::from_label(&c.system)?;
    let v = clf_for(&c.clf, c.controller.theta_grid)?;
    let ctrl = make_controller(&c.controller, &sys, &v, c.delta)?;
    let sched = SamplingSchedule::new(c.delta, c.horizon, c.substeps)?;
    simulate(&sys, ctrl.as_ref(), &c.x0, &sched, &v)
}

/// Runs every cell of the matrix, writing `bench_{name}.csv` per cell and `bench_summary.csv`.
pub fn run_benchmarks(cfg: &ExperimentConfig, out_dir: &Path, jobs: Option<usize>) -> Result<Vec<BenchRow>> {
    let cells = cfg.bench_cells();
    for c in &cells {
        c.validate()?;
    }
    fs::create_dir_all(out_dir)?;
    let pool = thread_pool(jobs)?;
    let results: Vec<Result<BenchRow>> = pool.install(|| {
        cells
            .par_iter()
            .map(|c| {
                let log = bench_log(c)?;
                log.write_csv(&out_dir.join(format!("bench_{}.csv", c.name)))?;
                let v = verify_practical_stability(&log, c.big_r, c.r, c.t_entry)?;
                Ok(BenchRow {
                    name: c.name.clone(),
                    system: c.system.clone(),
                    controller: c.controller.label.clone(),
                    clf: c.clf.clone(),
                    pass: v.pass,
                    entered_at: v.entered_at,
                    first_entry: v.first_entry,
                    max_norm: v.max_norm,
                    final_norm: log.final_norm(),
                    blowup: log.blowup.is_some(),
                    warnings: log.warnings.clone(),
                })
            })
            .collect()
    });
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("name,system,controller,clf,pass,entered_at,first_entry,max_norm,final_norm,blowup\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{:.16e},{:.16e},{}",
            r.name,
            r.system,
            r.controller,
            r.clf,
            r.pass,
            fmt_opt(r.entered_at),
            fmt_opt(r.first_entry),
            r.max_norm,
            r.final_norm,
            r.blowup
        );
    }
    fs::write(out_dir.join("bench_summary.csv"), csv)?;
    Ok(rows)
}

/// Decay and semiconcavity diagnostics of a CLF on sampled states.
#[derive(Debug, Clone, PartialEq)]
pub struct ClfReport {
    pub system: String,
    pub clf: String,
    pub samples: usize,
    pub decay: DecayReport,
    pub semiconcavity: SemiconcavityReport,
}

impl ClfReport {
    pub fn decay_failures(&self) -> usize {
        self.decay.margins.iter().filter(|m| !(**m < 0.0)).count()
    }
}

impl std::fmt::Display for ClfReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "system {} clf {} samples {}", self.system, self.clf, self.samples)?;
        writeln!(
            f,
            "decay: {} of {} samples without a decreasing control, worst margin {:.6e}",
            self.decay_failures(),
            self.decay.margins.len(),
            self.decay.worst()
        )?;
        write!(
            f,
            "semiconcavity (C = 10): {} violations in {} pairs",
            self.semiconcavity.violations.len(),
            self.semiconcavity.pairs_checked
        )
    }
}

/// Samples states in `[-1,1]^n` with `|x| >= 0.05` and reports decay margins
/// (disassembled where the CLF is a marginal family) and the midpoint test.
pub fn check_clf(system: &str, clf: &str, samples: usize, seed: u64) -> Result<ClfReport> {
    let sys = systems::from_label(system)?;
    let v = clf_from_label(clf)?;
    if v.dim() != sys.state_dim() {
        return Err(Error::Config(format!("CLF `{clf}` does not fit system `{system}`")));
    }
    let n = sys.state_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(samples);
    let mut tries = 0;
    while xs.len() < samples && tries < 100 * samples.max(1) {
        tries += 1;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        if norm(&x) >= 0.05 && v.eval(&x).is_finite() {
            xs.push(x);
        }
    }
    let decay = match family_from_label(clf) {
        Some(fam) => check_decay_disassembled(&fam, &sys, &xs, 1e-6)?,
        None => check_decay_ldgd(&v, &sys, &xs, 1e-6)?,
    };
    let region = vec![(-1.0, 1.0); n];
    let semiconcavity = check_semiconcavity(&v, &region, 10.0, samples, seed)?;
    Ok(ClfReport {
        system: system.into(),
        clf: clf.into(),
        samples: xs.len(),
        decay,
        semiconcavity,
    })
}
