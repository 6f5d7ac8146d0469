#![allow(dead_code)]

use nsstab::boxopt::BoxProblem;
use nsstab::nonsmooth::{
    check_decay_disassembled_with, check_decay_ldgd_with, disassembled_subdifferential, inf_convolution,
    DEFAULT_THETA_TOL,
};
use nsstab::{ControlSystem, MarginalFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const INCLUSION_TOL: f64 = 1e-3;

/// Random points in `[-1,1]^n` where the family's parameter argmin is a
/// single cluster, i.e. where the marginal function is differentiable.
pub fn smooth_points(family: &MarginalFamily, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = family.dim();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        // stay off the kink sets: x1 = 0 for the circle, x3 = 0 and x1 = x2 = 0 for the integrator
        let off_kinks = match n {
            2 => x[0].abs() > 0.05,
            _ => x[2].abs() > 0.05 && x[0].hypot(x[1]) > 0.05,
        };
        if !off_kinks {
            continue;
        }
        match disassembled_subdifferential(family, &x, DEFAULT_THETA_TOL) {
            Ok(s) if s.len() == 1 => out.push(x),
            _ => {}
        }
    }
    out
}

/// Distance of the inf-convolution subgradient at `y_alpha(x)` to the
/// disassembled subdifferential at `y_alpha(x)`, worst case over the samples.
pub fn prox_vs_disassembled_worst(family: &MarginalFamily, points: &[Vec<f64>], alpha: f64) -> f64 {
    let v = family.to_field();
    let mut worst: f64 = 0.0;
    for x in points {
        let ic = inf_convolution(&v, x, alpha, 1e-13).expect("inf-convolution");
        let zeta: Vec<f64> = x
            .iter()
            .zip(&ic.minimizer)
            .map(|(a, b)| (a - b) / (alpha * alpha))
            .collect();
        let set = disassembled_subdifferential(family, &ic.minimizer, DEFAULT_THETA_TOL).expect("subdifferential");
        worst = worst.max(set.distance_to(&zeta));
    }
    worst
}

/// `max(ldgd margin - disassembled margin)` over samples with a negative disassembled margin,
/// and the number of such samples.
pub fn decay_excess_worst(family: &MarginalFamily, sys: &ControlSystem, points: &[Vec<f64>]) -> (f64, usize) {
    let v = family.to_field();
    // a small control budget keeps this fast; a coarser search can only raise the ldgd margin
    let p = BoxProblem::new(sys.control_box().to_vec(), 1e-8)
        .expect("control box")
        .with_max_evals(400);
    let dis = check_decay_disassembled_with(family, sys, points, &p).expect("disassembled decay");
    let ld = check_decay_ldgd_with(&v, sys, points, &p);
    let mut worst = f64::NEG_INFINITY;
    let mut n = 0;
    for (d, l) in dis.margins.iter().zip(&ld.margins) {
        if *d < 0.0 {
            n += 1;
            worst = worst.max(l - d);
        }
    }
    (worst, n)
}
