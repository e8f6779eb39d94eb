// SPDX-License-Identifier: MIT OR Apache-2.0

//! Integrated kernel counts.
//!
//! With `f_s(x) = sum_s k(x - s)` and `f_gt(x) = -sum_g k(x - g)`, the
//! combined error `e_c = f_s + f_gt` splits by sign into a false positive
//! area `A_fp = int max(0, e_c)` and a false negative area
//! `A_fn = -int min(0, e_c)`. Then `A_tp = |S| - A_fp` and
//! `A_tn = f_max - A_tp - A_fp - A_fn`.
//!
//! The positive part of a signed Gaussian mixture has no closed form, so the
//! areas are integrated numerically: a composite trapezoid rule over the
//! union of `[p - R, p + R]` for every point `p`, where `R` is the support
//! radius. Sub-intervals on which `e_c` changes sign are split at the
//! linearly interpolated root so the kink of `max(0, .)` is not smeared.
//! The integration domain is not clipped to `[0, f_max]`, so a point at the
//! recording boundary still carries unit mass.

use std::f64::consts::PI;

use serde::Serialize;

use super::{classify_conventional, prepare, ConfusionCounts, Kernel, KernelConfig};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorSample {
    pub t: f64,
    pub f_s: f64,
    pub f_gt: f64,
    pub e_c: f64,
}

#[derive(Clone, Copy)]
struct Gaussian {
    inv_two_var: f64,
    norm: f64,
}

impl Gaussian {
    fn new(sigma: f64) -> Self {
        Gaussian {
            inv_two_var: 1.0 / (2.0 * sigma * sigma),
            norm: 1.0 / (sigma * (2.0 * PI).sqrt()),
        }
    }

    fn density(&self, x: f64) -> f64 {
        self.norm * (-x * x * self.inv_two_var).exp()
    }
}

/// Integrated kernel classification.
///
/// A Dirac kernel delegates to [`classify_conventional`].
pub fn classify_ink(
    gt: &[f64],
    alg: &[f64],
    f_max: u64,
    cfg: &KernelConfig,
) -> Result<ConfusionCounts> {
    cfg.validate()?;
    if cfg.kernel == Kernel::Dirac {
        return classify_conventional(gt, alg, f_max);
    }
    let (gt, alg) = prepare(gt, alg, f_max)?;

    let (positive, negative) = signed_areas(&gt, &alg, cfg);
    let a_fp = positive.max(0.0);
    let a_fn = negative.max(0.0);
    let a_tp = (alg.len() as f64 - a_fp).max(0.0);
    Ok(ConfusionCounts::closed(a_tp, a_fp, a_fn, f_max))
}

/// Returns `(int max(0, e_c), -int min(0, e_c))`.
fn signed_areas(gt: &[f64], alg: &[f64], cfg: &KernelConfig) -> (f64, f64) {
    // (position, weight): +1 for algorithm points, -1 for ground truth.
    let mut charges: Vec<(f64, f64)> = alg
        .iter()
        .map(|&p| (p, 1.0))
        .chain(gt.iter().map(|&p| (p, -1.0)))
        .collect();
    if charges.is_empty() {
        return (0.0, 0.0);
    }
    charges.sort_by(|a, b| a.0.total_cmp(&b.0));

    let kernel = Gaussian::new(cfg.sigma);
    let radius = cfg.support_radius;
    let mut positive = 0.0;
    let mut negative = 0.0;
    let mut window = Window::new(&charges, radius);

    for (start, end) in merged_supports(&charges, radius) {
        let steps = ((end - start) / cfg.quadrature_step).ceil().max(1.0) as usize;
        let h = (end - start) / steps as f64;

        let mut prev = window.eval(start, &kernel);
        for i in 1..=steps {
            let x = if i == steps { end } else { start + i as f64 * h };
            let cur = window.eval(x, &kernel);
            let (p, n) = trapezoid_parts(prev, cur, h);
            positive += p;
            negative += n;
            prev = cur;
        }
    }
    (positive, negative)
}

/// Union of `[p - radius, p + radius]` over the sorted charges.
fn merged_supports(charges: &[(f64, f64)], radius: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &(p, _) in charges {
        let (lo, hi) = (p - radius, p + radius);
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Trapezoid over one sub-interval, split into positive and negative parts
/// at the linear root when the endpoint values differ in sign.
fn trapezoid_parts(y0: f64, y1: f64, h: f64) -> (f64, f64) {
    if y0 >= 0.0 && y1 >= 0.0 {
        (0.5 * h * (y0 + y1), 0.0)
    } else if y0 <= 0.0 && y1 <= 0.0 {
        (0.0, -0.5 * h * (y0 + y1))
    } else {
        let root = h * y0 / (y0 - y1);
        if y0 > 0.0 {
            (0.5 * root * y0, -0.5 * (h - root) * y1)
        } else {
            (0.5 * (h - root) * y1, -0.5 * root * y0)
        }
    }
}

/// Sliding window over sorted charges within `radius` of a monotonically
/// increasing evaluation position.
struct Window<'a> {
    charges: &'a [(f64, f64)],
    radius: f64,
    lo: usize,
    hi: usize,
}

impl<'a> Window<'a> {
    fn new(charges: &'a [(f64, f64)], radius: f64) -> Self {
        Window {
            charges,
            radius,
            lo: 0,
            hi: 0,
        }
    }

    fn eval(&mut self, x: f64, kernel: &Gaussian) -> f64 {
        while self.lo < self.charges.len() && self.charges[self.lo].0 < x - self.radius {
            self.lo += 1;
        }
        while self.hi < self.charges.len() && self.charges[self.hi].0 <= x + self.radius {
            self.hi += 1;
        }
        self.charges[self.lo..self.hi.max(self.lo)]
            .iter()
            .map(|&(p, w)| w * kernel.density(x - p))
            .sum()
    }
}

/// Samples `f_s`, `f_gt` and `e_c` on `t0, t0 + step, ...` up to `t1` for
/// plotting. Uses the untruncated kernel.
pub fn sample_error_function(
    gt: &[f64],
    alg: &[f64],
    cfg: &KernelConfig,
    range: (f64, f64),
    step: f64,
) -> Result<Vec<ErrorSample>> {
    let (t0, t1) = range;
    if !(t0 < t1) || !(step > 0.0) {
        return Err(Error::Config(format!(
            "invalid sampling range [{t0}, {t1}] with step {step}"
        )));
    }
    if cfg.kernel != Kernel::Gaussian {
        return Err(Error::Config("error function sampling needs a Gaussian kernel".into()));
    }
    cfg.validate()?;
    let kernel = Gaussian::new(cfg.sigma);
    let n = ((t1 - t0) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| {
            let t = t0 + i as f64 * step;
            let f_s: f64 = alg.iter().map(|&p| kernel.density(t - p)).sum();
            let f_gt: f64 = -gt.iter().map(|&p| kernel.density(t - p)).sum::<f64>();
            ErrorSample {
                t,
                f_s,
                f_gt,
                e_c: f_s + f_gt,
            }
        })
        .collect())
}
