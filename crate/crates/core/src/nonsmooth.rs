//! Numerical nonsmooth calculus: lower directional generalized derivatives,
//! inf-convolution, proximal, limiting and disassembled subgradients, and
//! sampling checks for semiconcavity, proximal inequalities and decay.
//!
//! The liminf in the directional derivative is replaced by a minimum over a
//! geometric step grid `mu_k = mu_max * 2^-k`, `k = 0..=levels`. Every
//! sampling routine takes an explicit seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boxopt::{self, BoxProblem};
use crate::error::{Error, Result};
use crate::field::{MarginalFamily, ScalarField};
use crate::linalg::{axpy, dist, dot, norm, sub};
use crate::systems::ControlSystem;

pub const DEFAULT_MU_MAX: f64 = 1e-2;
pub const DEFAULT_LEVELS: u32 = 16;
pub const DEFAULT_SEED: u64 = 42;
/// Margin added to the inf-convolution search radius.
pub const INFC_RADIUS_MARGIN: f64 = 0.1;
/// Default objective tolerance for parameter clusters in disassembled subdifferentials.
pub const DEFAULT_THETA_TOL: f64 = 1e-6;

/// Which generalized gradient a [`SubgradientSet`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubgradientKind {
    Proximal,
    Limiting,
    ClarkeExtreme,
    Disassembled,
}

/// A finite, deduplicated set of generalized gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientSet {
    pub kind: SubgradientKind,
    pub vectors: Vec<Vec<f64>>,
    /// Vectors closer than this are merged.
    pub tolerance: f64,
}

impl SubgradientSet {
    pub fn new(kind: SubgradientKind, tolerance: f64) -> Self {
        Self {
            kind,
            vectors: Vec::new(),
            tolerance,
        }
    }

    /// Adds `v` unless a stored vector lies within `tolerance`.
    pub fn insert(&mut self, v: Vec<f64>) -> bool {
        if self.vectors.iter().any(|w| dist(w, &v) <= self.tolerance) {
            return false;
        }
        self.vectors.push(v);
        true
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Distance from `v` to the nearest member.
    pub fn distance_to(&self, v: &[f64]) -> f64 {
        self.vectors.iter().map(|w| dist(w, v)).fold(f64::INFINITY, f64::min)
    }
}

/// Lower directional generalized derivative of `v` at `x` along `dir`.
pub fn ldgd(v: &ScalarField, x: &[f64], dir: &[f64], mu_max: f64, levels: u32) -> Result<f64> {
    if !(mu_max > 0.0) {
        return Err(Error::InvalidInput(format!("mu_max must be > 0, got {mu_max}")));
    }
    if dir.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidInput("non-finite direction".into()));
    }
    let v0 = v.eval(x);
    if !v0.is_finite() {
        return Err(Error::Evaluation { mu: 0.0 });
    }
    let mut best = f64::INFINITY;
    let mut mu = mu_max;
    for _ in 0..=levels {
        let q = (v.eval(&axpy(x, mu, dir)) - v0) / mu;
        if !q.is_finite() {
            return Err(Error::Evaluation { mu });
        }
        best = best.min(q);
        mu *= 0.5;
    }
    Ok(best)
}

/// Result of an inf-convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct InfConvolution {
    pub value: f64,
    pub minimizer: Vec<f64>,
    pub accuracy_met: bool,
}

/// Search settings for [`inf_convolution_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfConvOptions {
    pub tol: f64,
    pub coarse_points: Option<usize>,
    pub max_evals: Option<usize>,
    /// Number of grid minima refined.
    pub starts: Option<usize>,
}

impl InfConvOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            coarse_points: None,
            max_evals: None,
            starts: None,
        }
    }
}

/// `V_alpha(x) = inf_y V(y) + |y - x|^2 / (2 alpha^2)` for a nonnegative `V`.
pub fn inf_convolution(v: &ScalarField, x: &[f64], alpha: f64, tol: f64) -> Result<InfConvolution> {
    inf_convolution_with(v, x, alpha, &InfConvOptions::new(tol))
}

pub fn inf_convolution_with(v: &ScalarField, x: &[f64], alpha: f64, opts: &InfConvOptions) -> Result<InfConvolution> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput("inf-convolution tolerance must be > 0".into()));
    }
    let vx = v.eval(x);
    if !vx.is_finite() {
        return Err(Error::Evaluation { mu: 0.0 });
    }
    if vx <= 0.0 {
        // nonnegative V: y = x is unimprovable
        return Ok(InfConvolution {
            value: vx,
            minimizer: x.to_vec(),
            accuracy_met: true,
        });
    }
    // with V >= 0, |y - x| <= alpha * sqrt(2 V(x)) at any minimizer
    let radius = alpha * (2.0 * vx.max(opts.tol)).sqrt() + INFC_RADIUS_MARGIN;
    let bounds: Vec<(f64, f64)> = x.iter().map(|&c| (c - radius, c + radius)).collect();
    let n = x.len();
    let mut p = BoxProblem::new(bounds, opts.tol)?;
    // odd coarse grids keep x itself on the grid, so value <= V(x)
    let coarse = opts.coarse_points.unwrap_or(if n <= 2 {
        65
    } else if n == 3 {
        5
    } else {
        3
    });
    p = p.with_coarse_points(coarse | 1);
    if let Some(m) = opts.max_evals {
        p = p.with_max_evals(m);
    }
    if let Some(k) = opts.starts {
        p = p.with_starts(k);
    }
    let scale = 1.0 / (2.0 * alpha * alpha);
    let m = boxopt::minimize(&p, |y| {
        let d = dist(y, x);
        v.eval(y) + scale * d * d
    });
    let (value, minimizer) = if m.value <= vx {
        (m.value, m.argmin)
    } else {
        (vx, x.to_vec())
    };
    Ok(InfConvolution {
        value,
        minimizer,
        accuracy_met: m.accuracy_met,
    })
}

/// `zeta_alpha(x) = (x - y_alpha(x)) / alpha^2`.
pub fn proximal_subgradient(v: &ScalarField, x: &[f64], alpha: f64, tol: f64) -> Result<Vec<f64>> {
    let ic = inf_convolution(v, x, alpha, tol)?;
    Ok(sub(x, &ic.minimizer).into_iter().map(|d| d / (alpha * alpha)).collect())
}

/// Gradients `dF/dx(x; theta*)` over every parameter cluster whose value is
/// within `theta_tol` of `min_theta F(x; theta)`.
pub fn disassembled_subdifferential(family: &MarginalFamily, x: &[f64], theta_tol: f64) -> Result<SubgradientSet> {
    let p = family.theta_problem(family.theta_accuracy());
    let clusters = boxopt::argmin_clusters(&p, theta_tol, |t| family.guarded(x, t));
    let clusters: Vec<_> = clusters.into_iter().filter(|c| c.value.is_finite()).collect();
    if clusters.is_empty() {
        return Err(Error::GuardedDomain { x: x.to_vec() });
    }
    let mut set = SubgradientSet::new(SubgradientKind::Disassembled, 1e-6);
    for c in clusters {
        set.insert(family.dfdx(x, &c.argmin));
    }
    Ok(set)
}

/// One failed midpoint test.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiconcavityViolation {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Amount by which the left side exceeds `C |x - y|^2`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiconcavityReport {
    pub pairs_checked: usize,
    pub violations: Vec<SemiconcavityViolation>,
}

impl SemiconcavityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn uniform_in_box(rng: &mut ChaCha8Rng, b: &[(f64, f64)]) -> Vec<f64> {
    b.iter()
        .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
        .collect()
}

fn unit_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let r = norm(&d);
        if r > 1e-3 && r <= 1.0 {
            return d.into_iter().map(|c| c / r).collect();
        }
    }
}

/// Midpoints of a `3^n` lattice over the box (corners, face centres, centre).
fn lattice_point(b: &[(f64, f64)], mut index: usize) -> Vec<f64> {
    b.iter()
        .map(|&(lo, hi)| {
            let k = index % 3;
            index /= 3;
            lo + (hi - lo) * k as f64 / 2.0
        })
        .collect()
}

/// Checks `V(x) + V(y) - 2 V((x+y)/2) <= C |x - y|^2` on `n_pairs` sampled pairs.
///
/// Even-indexed pairs are uniform in the box. Odd-indexed pairs are
/// symmetric about a midpoint (alternating between a uniform point and the
/// `3^n` box lattice) with a log-uniform half-width, so that kinks at special
/// points such as the box centre are probed at every scale.
pub fn check_semiconcavity(
    v: &ScalarField,
    region: &[(f64, f64)],
    c: f64,
    n_pairs: usize,
    seed: u64,
) -> Result<SemiconcavityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = region.len();
    let diam = region
        .iter()
        .map(|(lo, hi)| (hi - lo) * (hi - lo))
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let lattice = 3usize.saturating_pow(n as u32).min(1 << 20);
    let mut violations = Vec::new();
    for i in 0..n_pairs {
        let (x, y) = if i % 2 == 0 {
            (uniform_in_box(&mut rng, region), uniform_in_box(&mut rng, region))
        } else {
            let mid = if (i / 2) % 2 == 0 {
                lattice_point(region, (i / 4) % lattice)
            } else {
                uniform_in_box(&mut rng, region)
            };
            let d = unit_direction(&mut rng, n);
            let log_h = rng.gen_range((1e-8f64).ln()..=(0.5 * diam).ln());
            let mut h = log_h.exp();
            let mut x = axpy(&mid, h, &d);
            let mut y = axpy(&mid, -h, &d);
            while !(in_box(&x, region) && in_box(&y, region)) && h > 1e-12 {
                h *= 0.5;
                x = axpy(&mid, h, &d);
                y = axpy(&mid, -h, &d);
            }
            (x, y)
        };
        let m: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        let (vx, vy, vm) = (v.eval(&x), v.eval(&y), v.eval(&m));
        if !(vx.is_finite() && vy.is_finite() && vm.is_finite()) {
            return Err(Error::Evaluation { mu: 0.0 });
        }
        let d = dist(&x, &y);
        let excess = vx + vy - 2.0 * vm - c * d * d;
        if excess > 1e-12 {
            violations.push(SemiconcavityViolation { x, y, excess });
        }
    }
    Ok(SemiconcavityReport {
        pairs_checked: n_pairs,
        violations,
    })
}

fn in_box(x: &[f64], b: &[(f64, f64)]) -> bool {
    x.iter().zip(b).all(|(v, (lo, hi))| v >= lo && v <= hi)
}

/// Tests the proximal inequality
/// `V(y) >= V(x) + <zeta, y - x> - sigma |y - x|^2` at `n_samples` points of
/// the ball `B_r(x)`. Half of the draws are uniform in the ball, half lie on
/// geometrically shrinking spheres `r * 2^-k`.
pub fn check_prox_inequality(
    v: &ScalarField,
    x: &[f64],
    zeta: &[f64],
    sigma: f64,
    r: f64,
    n_samples: usize,
    seed: u64,
) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = x.len();
    let vx = v.eval(x);
    for i in 0..n_samples {
        let d = unit_direction(&mut rng, n);
        let rho = if i % 2 == 0 {
            r * rng.gen_range(0.0f64..=1.0).powf(1.0 / n as f64)
        } else {
            r * 0.5f64.powi(((i / 2) % 40) as i32)
        };
        let y = axpy(x, rho, &d);
        let step = sub(&y, x);
        let rhs = vx + dot(zeta, &step) - sigma * dot(&step, &step);
        if v.eval(&y) < rhs {
            return false;
        }
    }
    true
}

/// Limiting subgradients of a scalar function of one variable and their
/// interval hull (the Clarke subdifferential).
#[derive(Debug, Clone, PartialEq)]
pub struct LimitingSubdifferential {
    pub limiting: SubgradientSet,
    pub clarke: (f64, f64),
}

const APPROACH_LEVELS: i32 = 20;
const APPROACH_TAIL: i32 = 5;

/// Cluster points of derivatives sampled along `x +- h 2^-k`, `k = 0..=20`.
///
/// Each sample derivative is a central difference whose step is a tenth of
/// the distance to `x`, so it never straddles `x`. The last five levels of
/// each side are kept, starting from the deepest, and merged at tolerance
/// `1e-4`.
pub fn limiting_subdifferential_1d(v: &ScalarField, x: f64, h: f64) -> Result<LimitingSubdifferential> {
    if v.dim() != 1 {
        return Err(Error::InvalidInput(
            "limiting_subdifferential_1d needs a 1-D field".into(),
        ));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidInput("approach scale must be > 0".into()));
    }
    let mut set = SubgradientSet::new(SubgradientKind::Limiting, 1e-4);
    for side in [-1.0, 1.0] {
        for k in (0..=APPROACH_LEVELS).rev() {
            let d = h * 0.5f64.powi(k);
            let p = x + side * d;
            let s = 0.1 * d;
            let g = (v.eval(&[p + s]) - v.eval(&[p - s])) / (2.0 * s);
            if !g.is_finite() {
                return Err(Error::Evaluation { mu: d });
            }
            if k > APPROACH_LEVELS - APPROACH_TAIL {
                set.insert(vec![g]);
            }
        }
    }
    let lo = set.vectors.iter().map(|g| g[0]).fold(f64::INFINITY, f64::min);
    let hi = set.vectors.iter().map(|g| g[0]).fold(f64::NEG_INFINITY, f64::max);
    Ok(LimitingSubdifferential {
        limiting: set,
        clarke: (lo, hi),
    })
}

/// Per-sample decay margins; decay holds at a sample iff its margin is `< 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub margins: Vec<f64>,
}

impl DecayReport {
    pub fn all_negative(&self) -> bool {
        self.margins.iter().all(|m| *m < 0.0)
    }

    pub fn worst(&self) -> f64 {
        self.margins.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `min_u D_{f(x,u)} V(x)` per sample.
pub fn check_decay_ldgd(v: &ScalarField, sys: &ControlSystem, xs: &[Vec<f64>], u_accuracy: f64) -> Result<DecayReport> {
    let p = BoxProblem::new(sys.control_box().to_vec(), u_accuracy)?;
    Ok(check_decay_ldgd_with(v, sys, xs, &p))
}

/// [`check_decay_ldgd`] with an explicit control search problem.
pub fn check_decay_ldgd_with(
    v: &ScalarField,
    sys: &ControlSystem,
    xs: &[Vec<f64>],
    u_problem: &BoxProblem,
) -> DecayReport {
    let margins = xs
        .iter()
        .map(|x| {
            let m = boxopt::minimize(u_problem, |u| {
                ldgd(v, x, &sys.f(x, u), DEFAULT_MU_MAX, DEFAULT_LEVELS).unwrap_or(f64::INFINITY)
            });
            m.value
        })
        .collect();
    DecayReport { margins }
}

/// `min_{zeta, u} <zeta, f(x,u)>` over the disassembled subdifferential, per sample.
pub fn check_decay_disassembled(
    family: &MarginalFamily,
    sys: &ControlSystem,
    xs: &[Vec<f64>],
    u_accuracy: f64,
) -> Result<DecayReport> {
    let p = BoxProblem::new(sys.control_box().to_vec(), u_accuracy)?;
    check_decay_disassembled_with(family, sys, xs, &p)
}

/// [`check_decay_disassembled`] with an explicit control search problem.
pub fn check_decay_disassembled_with(
    family: &MarginalFamily,
    sys: &ControlSystem,
    xs: &[Vec<f64>],
    u_problem: &BoxProblem,
) -> Result<DecayReport> {
    let mut margins = Vec::with_capacity(xs.len());
    for x in xs {
        let set = disassembled_subdifferential(family, x, DEFAULT_THETA_TOL)?;
        let best = set
            .vectors
            .iter()
            .map(|z| boxopt::minimize(u_problem, |u| dot(z, &sys.f(x, u))).value)
            .fold(f64::INFINITY, f64::min);
        margins.push(best);
    }
    Ok(DecayReport { margins })
}

/// Local homogeneity check: every difference quotient on a 50-point grid of
/// `(0, mu]` is within `nu` of the directional derivative estimate.
pub fn verify_hom(v: &ScalarField, x: &[f64], dir: &[f64], nu: f64, mu: f64) -> Result<bool> {
    if !(mu > 0.0) {
        return Err(Error::InvalidInput("mu must be > 0".into()));
    }
    let d = ldgd(v, x, dir, mu, 20)?;
    let v0 = v.eval(x);
    for j in 1..=50 {
        let m = mu * j as f64 / 50.0;
        let q = (v.eval(&axpy(x, m, dir)) - v0) / m;
        if !q.is_finite() {
            return Err(Error::Evaluation { mu: m });
        }
        if (q - d).abs() > nu {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::make_ni;

    fn abs1() -> ScalarField {
        ScalarField::new(1, "abs", |x| x[0].abs())
    }

    fn sq(n: usize) -> ScalarField {
        ScalarField::new(n, "sq", |x| x.iter().map(|v| v * v).sum()).with_grad(|x| x.iter().map(|v| 2.0 * v).collect())
    }

    /// `x^2 sin(1/x)` on the left, `2 x^2 sin(1/x)` on the right, 0 at 0.
    fn oscillating() -> ScalarField {
        ScalarField::new(1, "osc", |x| {
            let t = x[0];
            if t < 0.0 {
                t * t * (1.0 / t).sin()
            } else if t == 0.0 {
                0.0
            } else {
                2.0 * t * t * (1.0 / t).sin()
            }
        })
    }

    fn kink() -> ScalarField {
        ScalarField::new(1, "kink", |x| {
            let t = x[0];
            if t < 1.0 {
                t * t
            } else {
                (t - 1.0).powi(2) + 1.0
            }
        })
    }

    #[test]
    fn ldgd_examples() {
        let d = ldgd(&sq(2), &[0.0, 0.0], &[1.0, 0.0], 1e-2, 16).unwrap();
        assert!(d.abs() <= 1e-2);
        assert_eq!(ldgd(&abs1(), &[0.0], &[1.0], 1e-2, 16).unwrap(), 1.0);
        // brute-force oracle: min over the same grid of 2 mu sin(1/mu)
        let mu_max = 1e-2;
        let oracle = (0..=16)
            .map(|k| {
                let mu = mu_max * 0.5f64.powi(k);
                2.0 * mu * (1.0 / mu).sin()
            })
            .fold(f64::INFINITY, f64::min);
        let d = ldgd(&oscillating(), &[0.0], &[1.0], mu_max, 16).unwrap();
        assert!((d - oracle).abs() < 1e-12);
        assert!(d.abs() <= 10.0 * mu_max);
    }

    #[test]
    fn ldgd_reports_failing_step() {
        let f = ScalarField::new(1, "bad", |x| if x[0] > 0.0 { f64::NAN } else { 0.0 });
        match ldgd(&f, &[0.0], &[1.0], 1e-2, 8) {
            Err(Error::Evaluation { mu }) => assert_eq!(mu, 1e-2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infc_quadratic() {
        let ic = inf_convolution(&sq(1), &[1.0], 0.5, 1e-12).unwrap();
        assert!((ic.value - 2.0 / 3.0).abs() < 1e-8);
        assert!((ic.minimizer[0] - 2.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn infc_zero_is_unimprovable() {
        let ic = inf_convolution(&sq(3), &[0.0; 3], 0.3, 1e-9).unwrap();
        assert_eq!(ic.value, 0.0);
        assert_eq!(ic.minimizer, vec![0.0; 3]);
    }

    #[test]
    fn infc_absolute_value() {
        // closed-form Moreau envelope: value |x| - a^2/2, minimizer x - a^2 sign(x)
        let ic = inf_convolution(&abs1(), &[2.0], 0.1, 1e-12).unwrap();
        assert!((ic.value - 1.995).abs() < 1e-9);
        assert!((ic.minimizer[0] - 1.99).abs() < 1e-6);
        // grid cross-check of the value
        let grid = (0..=200_000)
            .map(|i| {
                let y = 1.9 + 0.2 * i as f64 / 200_000.0;
                y.abs() + (y - 2.0).powi(2) / 0.02
            })
            .fold(f64::INFINITY, f64::min);
        assert!((ic.value - grid).abs() < 1e-9);
    }

    #[test]
    fn infc_rejects_bad_alpha() {
        assert!(inf_convolution(&sq(1), &[1.0], 1.0, 1e-6).is_err());
        assert!(inf_convolution(&sq(1), &[1.0], 0.0, 1e-6).is_err());
    }

    #[test]
    fn proximal_subgradient_examples() {
        let z = proximal_subgradient(&sq(1), &[1.0], 0.5, 1e-12).unwrap();
        assert!((z[0] - 4.0 / 3.0).abs() < 1e-4);
        let z = proximal_subgradient(&abs1(), &[2.0], 0.1, 1e-12).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-4);
        let z = proximal_subgradient(&sq(2), &[0.0, 0.0], 0.5, 1e-12).unwrap();
        assert_eq!(z, vec![0.0, 0.0]);
    }

    #[test]
    fn disassembled_theta_independent_family() {
        let fam = MarginalFamily::new(
            2,
            "flat",
            vec![(0.0, 1.0)],
            |x, _| x[0] * x[0] + 3.0 * x[1],
            |x, _| vec![2.0 * x[0], 3.0],
        );
        let s = disassembled_subdifferential(&fam, &[0.5, 1.0], 1e-6).unwrap();
        assert_eq!(s.kind, SubgradientKind::Disassembled);
        assert_eq!(s.vectors, vec![vec![1.0, 3.0]]);
    }

    #[test]
    fn disassembled_guarded_everywhere() {
        let fam =
            MarginalFamily::new(1, "g", vec![(0.0, 1.0)], |_, _| 0.0, |_, _| vec![0.0]).with_guard(|_, _| 0.0, 1.0);
        assert!(matches!(
            disassembled_subdifferential(&fam, &[1.0], 1e-6),
            Err(Error::GuardedDomain { .. })
        ));
    }

    #[test]
    fn semiconcavity_examples() {
        let neg = ScalarField::new(2, "negsq", |x| -(x[0] * x[0] + x[1] * x[1]));
        let r = check_semiconcavity(&neg, &[(-2.0, 2.0), (-1.0, 3.0)], 0.0, 2000, 42).unwrap();
        assert!(r.passed());
        let norm1 = ScalarField::new(1, "abs", |x| x[0].abs());
        let r = check_semiconcavity(&norm1, &[(-1.0, 1.0)], 100.0, 10_000, 42).unwrap();
        assert!(!r.passed());
        // violations sit near the kink x = -y -> 0
        assert!(r.violations.iter().all(|v| v.x[0].abs() < 0.01 && v.y[0].abs() < 0.01));
        let affine = ScalarField::new(2, "aff", |x| 3.0 * x[0] - x[1] + 1.0);
        for c in [0.0, 5.0] {
            assert!(check_semiconcavity(&affine, &[(-1.0, 1.0); 2], c, 1000, 42)
                .unwrap()
                .passed());
        }
    }

    #[test]
    fn prox_inequality_examples() {
        assert!(check_prox_inequality(&abs1(), &[0.0], &[0.5], 1.0, 1.0, 2000, 42));
        for i in 0..=40 {
            let zeta = -3.0 + 0.2 * i as f64;
            assert!(
                !check_prox_inequality(&kink(), &[1.0], &[zeta], 10.0, 0.1, 2000, 42),
                "zeta = {zeta}"
            );
        }
        let cubic = ScalarField::new(1, "cubic", |x| x[0].powi(3));
        assert!(check_prox_inequality(&cubic, &[0.5], &[0.75], 50.0, 0.5, 2000, 42));
    }

    #[test]
    fn limiting_examples() {
        let l = limiting_subdifferential_1d(&kink(), 1.0, 0.1).unwrap();
        let mut g: Vec<f64> = l.limiting.vectors.iter().map(|v| v[0]).collect();
        g.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(g.len(), 2, "{g:?}");
        assert!(g[0].abs() < 1e-3 && (g[1] - 2.0).abs() < 1e-3);
        assert!(l.clarke.0.abs() < 1e-3 && (l.clarke.1 - 2.0).abs() < 1e-3);

        let l = limiting_subdifferential_1d(&abs1(), 0.0, 0.1).unwrap();
        assert_eq!(l.limiting.len(), 2);
        assert!((l.clarke.0 + 1.0).abs() < 1e-9 && (l.clarke.1 - 1.0).abs() < 1e-9);

        let smooth = ScalarField::new(1, "sin", |x| x[0].sin());
        let l = limiting_subdifferential_1d(&smooth, 0.3, 0.1).unwrap();
        assert_eq!(l.limiting.len(), 1);
        assert!((l.limiting.vectors[0][0] - 0.3f64.cos()).abs() < 1e-3);
    }

    #[test]
    fn decay_ldgd_scalar_integrator() {
        let sys = ControlSystem::new("int", 1, 1, vec![(-1.0, 1.0)], |_, u| vec![u[0]]).unwrap();
        let r = check_decay_ldgd(&abs1(), &sys, &[vec![0.5], vec![0.0]], 1e-8).unwrap();
        assert!((r.margins[0] + 1.0).abs() < 1e-9);
        assert!(r.margins[1] <= 0.0);
    }

    #[test]
    fn decay_ldgd_ni_v1() {
        let v1 = ScalarField::new(3, "v1", |x| {
            x[0] * x[0] + x[1] * x[1] + 2.0 * x[2] * x[2] - 2.0 * x[2].abs() * (x[0] * x[0] + x[1] * x[1]).sqrt()
        });
        let r = check_decay_ldgd(&v1, &make_ni(), &[vec![1.0, 0.0, 0.0]], 1e-6).unwrap();
        // brute force over a u-grid and the same mu-grid
        let ni = make_ni();
        let mut brute = f64::INFINITY;
        for i in 0..=40 {
            for j in 0..=40 {
                let u = [-1.0 + i as f64 / 20.0, -1.0 + j as f64 / 20.0];
                let d = ldgd(&v1, &[1.0, 0.0, 0.0], &ni.f(&[1.0, 0.0, 0.0], &u), 1e-2, 16).unwrap();
                brute = brute.min(d);
            }
        }
        assert!(brute < 0.0);
        assert!(r.margins[0] <= brute + 1e-9);
    }

    #[test]
    fn hom_examples() {
        assert!(verify_hom(&sq(2), &[0.3, -0.2], &[1.0, 2.0], 0.1, 1e-3).unwrap());
        assert!(verify_hom(&abs1(), &[0.0], &[1.0], 1e-9, 0.7).unwrap());
        // oracle on the same 50-point grid decides the expected answer
        let osc = oscillating();
        let d = ldgd(&osc, &[0.0], &[1.0], 0.5, 20).unwrap();
        let expected = (1..=50).all(|j| {
            let m = 0.5 * j as f64 / 50.0;
            (2.0 * m * (1.0 / m).sin() - d).abs() <= 0.1
        });
        assert!(!expected);
        assert_eq!(verify_hom(&osc, &[0.0], &[1.0], 0.1, 0.5).unwrap(), expected);
    }
}
