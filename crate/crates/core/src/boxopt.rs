//! Deterministic box-constrained minimization with an explicit accuracy knob.
//!
//! Every search in the crate (control searches over the input box, parameter
//! searches for marginal functions, inf-convolution, Dini-aiming
//! neighbourhood searches) goes through [`minimize`]. The scheme is a uniform
//! coarse grid sweep followed by a compass search that halves its step after
//! every round without improvement. The search stops once the step is below
//! `width * sqrt(accuracy)` in every coordinate *and* the last round improved
//! the incumbent by less than `accuracy / 10`. A loose accuracy therefore
//! really does return a loose answer, which is what the accuracy sweep of the
//! experiment harness measures.
//!
//! The step rule ties the value error to curvature: on a separable quadratic
//! in `n` variables with Hessian norm `L` the final compass point is within
//! `step / 2` of the minimizer per coordinate, so the value error is at most
//! about `n * L * width^2 * accuracy / 8`. The value is therefore within
//! `accuracy` of the minimum when `n * L <= 8 / width^2`; sharper objectives
//! get proportionally looser answers.
//!
//! Non-finite objective values are treated as `+inf`, so constraints can be
//! imposed by rejection.

use crate::error::{Error, Result};
use crate::linalg::{dist, lex_less};

/// Default evaluation budget for a given search dimension.
pub fn default_max_evals(dim: usize) -> usize {
    if dim <= 1 {
        10_000
    } else {
        100_000
    }
}

const MAX_COARSE_PER_DIM: usize = 129;
const DEFAULT_STARTS: usize = 3;
const MAX_CLUSTER_STARTS: usize = 256;

/// An axis-aligned box, an accuracy and an evaluation budget.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxProblem {
    bounds: Vec<(f64, f64)>,
    accuracy: f64,
    max_evals: usize,
    coarse_points: Option<usize>,
    starts: usize,
}

impl BoxProblem {
    pub fn new(bounds: Vec<(f64, f64)>, accuracy: f64) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidInput("empty box".into()));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(Error::InvalidInput(format!("bad bound [{lo}, {hi}] in coordinate {i}")));
            }
        }
        if !(accuracy > 0.0 && accuracy.is_finite()) {
            return Err(Error::InvalidInput(format!("accuracy must be > 0, got {accuracy}")));
        }
        let max_evals = default_max_evals(bounds.len());
        Ok(Self {
            bounds,
            accuracy,
            max_evals,
            coarse_points: None,
            starts: DEFAULT_STARTS,
        })
    }

    pub fn with_max_evals(mut self, max_evals: usize) -> Self {
        self.max_evals = max_evals.max(1);
        self
    }

    /// Overrides the number of coarse grid points per free coordinate.
    pub fn with_coarse_points(mut self, k: usize) -> Self {
        self.coarse_points = Some(k.max(2));
        self
    }

    /// Number of best grid local minima that get refined.
    pub fn with_starts(mut self, starts: usize) -> Self {
        self.starts = starts.max(1);
        self
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    pub fn max_evals(&self) -> usize {
        self.max_evals
    }

    fn free_dims(&self) -> usize {
        self.bounds.iter().filter(|(lo, hi)| hi > lo).count()
    }

    fn coarse_per_dim(&self) -> usize {
        let n = self.free_dims().max(1);
        let k = match self.coarse_points {
            Some(k) => k,
            None => {
                let budget = (self.max_evals / 8).max(1) as f64;
                let k = budget.powf(1.0 / n as f64).floor() as usize;
                let k = k.clamp(3, MAX_COARSE_PER_DIM);
                if k.is_multiple_of(2) {
                    k - 1
                } else {
                    k
                }
            }
        };
        // never spend more than half the budget on the sweep
        let mut k = k;
        while k > 2 && (k as f64).powi(n as i32) > (self.max_evals / 2) as f64 {
            k -= 1;
        }
        k.max(2)
    }
}

/// Result of a box search.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub argmin: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    /// `false` when the evaluation budget ran out before the stopping rule fired.
    pub accuracy_met: bool,
    /// Final compass step (max over coordinates).
    pub final_step: f64,
}

struct Counter<'a, F> {
    f: &'a F,
    evals: usize,
}

impl<F: Fn(&[f64]) -> f64> Counter<'_, F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

#[inline]
fn better(v: f64, x: &[f64], best_v: f64, best_x: &[f64]) -> bool {
    v < best_v || (v == best_v && lex_less(x, best_x))
}

struct Grid {
    axes: Vec<Vec<f64>>,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl Grid {
    fn sweep<F: Fn(&[f64]) -> f64>(p: &BoxProblem, c: &mut Counter<'_, F>) -> Self {
        let k = p.coarse_per_dim();
        let axes: Vec<Vec<f64>> = p
            .bounds
            .iter()
            .map(|&(lo, hi)| {
                if hi > lo {
                    (0..k)
                        .map(|i| {
                            if i + 1 == k {
                                hi
                            } else {
                                lo + (hi - lo) * i as f64 / (k - 1) as f64
                            }
                        })
                        .collect()
                } else {
                    vec![lo]
                }
            })
            .collect();
        let total: usize = axes.iter().map(Vec::len).product();
        let mut points = Vec::with_capacity(total);
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; axes.len()];
        for _ in 0..total {
            let x: Vec<f64> = idx.iter().zip(&axes).map(|(&i, a)| a[i]).collect();
            values.push(c.eval(&x));
            points.push(x);
            // row-major increment, last coordinate fastest -> lexicographic order
            for d in (0..axes.len()).rev() {
                idx[d] += 1;
                if idx[d] < axes[d].len() {
                    break;
                }
                idx[d] = 0;
            }
        }
        Self { axes, points, values }
    }

    fn strides(&self) -> Vec<usize> {
        let n = self.axes.len();
        let mut s = vec![1usize; n];
        for d in (0..n.saturating_sub(1)).rev() {
            s[d] = s[d + 1] * self.axes[d + 1].len();
        }
        s
    }

    /// Grid indices whose value is <= every axis neighbour, best first.
    fn local_minima(&self) -> Vec<usize> {
        let strides = self.strides();
        let mut out = Vec::new();
        for (i, &v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                continue;
            }
            let mut rem = i;
            let mut is_min = true;
            for (&st, axis) in strides.iter().zip(&self.axes) {
                let pos = rem / st;
                rem %= st;
                if pos > 0 && self.values[i - st] < v {
                    is_min = false;
                    break;
                }
                if pos + 1 < axis.len() && self.values[i + st] < v {
                    is_min = false;
                    break;
                }
            }
            if is_min {
                out.push(i);
            }
        }
        out.sort_by(|&a, &b| {
            self.values[a]
                .partial_cmp(&self.values[b])
                .unwrap()
                .then_with(|| a.cmp(&b))
        });
        out
    }

    fn spacing(&self, p: &BoxProblem) -> Vec<f64> {
        self.axes
            .iter()
            .zip(&p.bounds)
            .map(|(a, &(lo, hi))| {
                if a.len() > 1 {
                    (hi - lo) / (a.len() - 1) as f64
                } else {
                    0.0
                }
            })
            .collect()
    }
}

struct Refined {
    x: Vec<f64>,
    v: f64,
    step: f64,
    met: bool,
}

fn refine<F: Fn(&[f64]) -> f64>(
    p: &BoxProblem,
    c: &mut Counter<'_, F>,
    start: Vec<f64>,
    start_v: f64,
    spacing: &[f64],
) -> Refined {
    let n = p.dim();
    let target: Vec<f64> = p.bounds.iter().map(|&(lo, hi)| (hi - lo) * p.accuracy.sqrt()).collect();
    let mut h: Vec<f64> = spacing.to_vec();
    let mut x = start;
    let mut v = start_v;
    let mut cand = x.clone();
    loop {
        let round_start = v;
        loop {
            let mut improved = false;
            for i in 0..n {
                if h[i] <= 0.0 {
                    continue;
                }
                let (lo, hi) = p.bounds[i];
                for s in [-1.0, 1.0] {
                    let xi = (x[i] + s * h[i]).clamp(lo, hi);
                    if xi == x[i] {
                        continue;
                    }
                    if c.evals >= p.max_evals {
                        return Refined {
                            step: h.iter().cloned().fold(0.0, f64::max),
                            x,
                            v,
                            met: false,
                        };
                    }
                    cand.copy_from_slice(&x);
                    cand[i] = xi;
                    let cv = c.eval(&cand);
                    if cv < v {
                        x.copy_from_slice(&cand);
                        v = cv;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        let improvement = round_start - v;
        let fine = h.iter().zip(&target).all(|(hi, t)| hi <= t);
        let tiny = h.iter().zip(&x).all(|(hi, xi)| *hi <= 1e-14 * xi.abs().max(1.0));
        if (fine && improvement < p.accuracy / 10.0) || tiny {
            return Refined {
                step: h.iter().cloned().fold(0.0, f64::max),
                x,
                v,
                met: true,
            };
        }
        for hi in h.iter_mut() {
            *hi *= 0.5;
        }
    }
}

/// Minimizes `f` over the box of `p`.
///
/// The best few grid local minima are refined; the overall winner is the
/// smallest value, ties broken by the lexicographically smallest point.
pub fn minimize<F: Fn(&[f64]) -> f64>(p: &BoxProblem, f: F) -> Minimum {
    let mut c = Counter { f: &f, evals: 0 };
    let grid = Grid::sweep(p, &mut c);
    let spacing = grid.spacing(p);
    let minima = grid.local_minima();

    let mut best_x = grid.points[0].clone();
    let mut best_v = f64::INFINITY;
    for (x, &v) in grid.points.iter().zip(&grid.values) {
        if better(v, x, best_v, &best_x) {
            best_v = v;
            best_x = x.clone();
        }
    }
    if !best_v.is_finite() {
        return Minimum {
            argmin: best_x,
            value: best_v,
            evals: c.evals,
            accuracy_met: true,
            final_step: 0.0,
        };
    }

    let mut met = true;
    let mut step = 0.0;
    for &i in minima.iter().take(p.starts) {
        let r = refine(p, &mut c, grid.points[i].clone(), grid.values[i], &spacing);
        met &= r.met;
        if better(r.v, &r.x, best_v, &best_x) {
            best_v = r.v;
            best_x = r.x;
            step = r.step;
        } else if step == 0.0 {
            step = r.step;
        }
        if !r.met {
            break;
        }
    }
    Minimum {
        argmin: best_x,
        value: best_v,
        evals: c.evals,
        accuracy_met: met,
        final_step: step,
    }
}

/// All refined grid local minima whose value is within `cluster_tol` of the
/// best one, deduplicated at spatial distance `10 * final_step`.
///
/// For a constant objective every coarse grid point is a local minimum and
/// is returned.
pub fn argmin_clusters<F: Fn(&[f64]) -> f64>(p: &BoxProblem, cluster_tol: f64, f: F) -> Vec<Minimum> {
    let mut c = Counter { f: &f, evals: 0 };
    let grid = Grid::sweep(p, &mut c);
    let spacing = grid.spacing(p);
    let minima = grid.local_minima();
    let mut refined: Vec<Refined> = Vec::new();
    for &i in minima.iter().take(MAX_CLUSTER_STARTS) {
        let r = refine(p, &mut c, grid.points[i].clone(), grid.values[i], &spacing);
        refined.push(r);
    }
    if refined.is_empty() {
        return Vec::new();
    }
    let best = refined.iter().map(|r| r.v).fold(f64::INFINITY, f64::min);
    let mut keep: Vec<Refined> = refined.into_iter().filter(|r| r.v <= best + cluster_tol).collect();
    keep.sort_by(|a, b| {
        if lex_less(&a.x, &b.x) {
            std::cmp::Ordering::Less
        } else if lex_less(&b.x, &a.x) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    let mut out: Vec<Minimum> = Vec::new();
    for r in keep {
        let radius = 10.0 * r.step;
        if out
            .iter()
            .any(|m| dist(&m.argmin, &r.x) <= radius.max(10.0 * m.final_step))
        {
            continue;
        }
        out.push(Minimum {
            argmin: r.x,
            value: r.v,
            evals: c.evals,
            accuracy_met: r.met,
            final_step: r.step,
        });
    }
    out
}
