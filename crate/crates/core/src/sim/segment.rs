//! Exact time integrals of piecewise-linear workload paths.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::model::{AsymmetricParams, Queue, WorkloadState};

/// A workload path `x(t) = start + slope * t`, floored at zero once it hits
/// zero with a negative slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPath {
    pub start: f64,
    pub slope: f64,
}

impl LinearPath {
    pub fn new(start: f64, slope: f64) -> Self {
        Self { start, slope }
    }

    /// Time at which the path reaches zero and stays there, if it does.
    pub fn kink(&self) -> Option<f64> {
        if self.slope < 0.0 {
            Some(self.start / -self.slope)
        } else if self.slope == 0.0 && self.start == 0.0 {
            Some(0.0)
        } else {
            None
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        match self.kink() {
            Some(k) if t >= k => 0.0,
            _ => (self.start + self.slope * t).max(0.0),
        }
    }
}

/// Running integrals of the workload over observed time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub time: f64,
    pub v1: f64,
    pub v2: f64,
    pub v1sq: f64,
    pub v2sq: f64,
    pub v1v2: f64,
    pub zero1: f64,
    pub zero2: f64,
}

impl Add for Moments {
    type Output = Moments;
    fn add(mut self, o: Moments) -> Moments {
        self += o;
        self
    }
}

impl AddAssign for Moments {
    fn add_assign(&mut self, o: Moments) {
        self.time += o.time;
        self.v1 += o.v1;
        self.v2 += o.v2;
        self.v1sq += o.v1sq;
        self.v2sq += o.v2sq;
        self.v1v2 += o.v1v2;
        self.zero1 += o.zero1;
        self.zero2 += o.zero2;
    }
}

/// Time averages derived from [`Moments`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub mean_v1: f64,
    pub mean_v2: f64,
    pub mean_v1sq: f64,
    pub mean_v2sq: f64,
    pub mean_v1v2: f64,
    pub frac_zero1: f64,
    pub frac_zero2: f64,
}

impl Averages {
    /// Correlation coefficient; zero when either marginal is degenerate.
    pub fn correlation(&self) -> f64 {
        let var1 = self.mean_v1sq - self.mean_v1 * self.mean_v1;
        let var2 = self.mean_v2sq - self.mean_v2 * self.mean_v2;
        if var1 <= 0.0 || var2 <= 0.0 {
            return 0.0;
        }
        let r = (self.mean_v1v2 - self.mean_v1 * self.mean_v2) / (var1 * var2).sqrt();
        r.clamp(-1.0, 1.0)
    }
}

impl Moments {
    pub fn averages(&self) -> Averages {
        let t = if self.time > 0.0 { self.time } else { f64::NAN };
        Averages {
            mean_v1: self.v1 / t,
            mean_v2: self.v2 / t,
            mean_v1sq: self.v1sq / t,
            mean_v2sq: self.v2sq / t,
            mean_v1v2: self.v1v2 / t,
            frac_zero1: (self.zero1 / t).clamp(0.0, 1.0),
            frac_zero2: (self.zero2 / t).clamp(0.0, 1.0),
        }
    }
}

/// Adds the exact integrals of two simultaneously evolving paths over
/// `[0, duration]`. Each sub-interval between kinks is affine in both paths,
/// so the trapezoid-type formulas below are exact.
pub fn accumulate_paths(p1: LinearPath, p2: LinearPath, duration: f64, acc: &mut Moments) {
    if duration <= 0.0 {
        return;
    }
    let mut cuts = [0.0, duration, duration, duration];
    let mut n = 1;
    for k in [p1.kink(), p2.kink()].into_iter().flatten() {
        if k > 0.0 && k < duration {
            cuts[n] = k;
            n += 1;
        }
    }
    cuts[n] = duration;
    cuts[..=n].sort_by(f64::total_cmp);

    for w in cuts[..=n].windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let len = t1 - t0;
        if len <= 0.0 {
            continue;
        }
        let (x0, x1) = (p1.at(t0), p1.at(t1));
        let (y0, y1) = (p2.at(t0), p2.at(t1));
        acc.v1 += len * (x0 + x1) / 2.0;
        acc.v2 += len * (y0 + y1) / 2.0;
        acc.v1sq += len * (x0 * x0 + x0 * x1 + x1 * x1) / 3.0;
        acc.v2sq += len * (y0 * y0 + y0 * y1 + y1 * y1) / 3.0;
        acc.v1v2 += len * (2.0 * x0 * y0 + x0 * y1 + x1 * y0 + 2.0 * x1 * y1) / 6.0;
        if x0 == 0.0 && x1 == 0.0 {
            acc.zero1 += len;
        }
        if y0 == 0.0 && y1 == 0.0 {
            acc.zero2 += len;
        }
    }
    acc.time += duration;
}

/// Workload paths of the fluid model while the server sits at `state.serving`.
pub fn fluid_paths(p: &AsymmetricParams, state: &WorkloadState) -> (LinearPath, LinearPath) {
    let slope = |q: Queue| {
        if q == state.serving {
            p.lambda(q) - p.mu(q)
        } else {
            p.lambda(q)
        }
    };
    (
        LinearPath::new(state.v1, slope(Queue::One)),
        LinearPath::new(state.v2, slope(Queue::Two)),
    )
}

/// Accumulates the exact integrals over a segment of length `duration` with
/// the server fixed, and advances the state to the end of the segment.
pub fn segment_accumulate(
    p: &AsymmetricParams,
    state: &mut WorkloadState,
    duration: f64,
    acc: &mut Moments,
) {
    let (a, b) = fluid_paths(p, state);
    accumulate_paths(a, b, duration, acc);
    advance(state, a, b, duration);
}

/// Moves the state along the given paths without accumulating.
pub(crate) fn advance(state: &mut WorkloadState, a: LinearPath, b: LinearPath, duration: f64) {
    if duration <= 0.0 {
        return;
    }
    state.v1 = a.at(duration);
    state.v2 = b.at(duration);
    state.clock += duration;
}
