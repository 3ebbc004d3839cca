//! Model parameters, stability, and the workload recursion over one polling cycle.

use serde::{Deserialize, Serialize};

use crate::error::{check_nonnegative, check_positive, Error, Result};

/// One of the two queues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Queue {
    One,
    Two,
}

impl Queue {
    pub const BOTH: [Queue; 2] = [Queue::One, Queue::Two];

    #[inline]
    pub fn other(self) -> Queue {
        match self {
            Queue::One => Queue::Two,
            Queue::Two => Queue::One,
        }
    }

    /// Zero-based array index.
    #[inline]
    pub fn idx(self) -> usize {
        match self {
            Queue::One => 0,
            Queue::Two => 1,
        }
    }

    /// Parses the one-based label used on the command line.
    pub fn from_label(label: u8) -> Result<Queue> {
        match label {
            1 => Ok(Queue::One),
            2 => Ok(Queue::Two),
            _ => Err(Error::InvalidParameter {
                name: "queue",
                value: label as f64,
                reason: "must be 1 or 2",
            }),
        }
    }
}

#[derive(Deserialize)]
struct RawAsymmetric {
    lambda1: f64,
    lambda2: f64,
    mu1: f64,
    mu2: f64,
    c1: f64,
    c2: f64,
}

impl TryFrom<RawAsymmetric> for AsymmetricParams {
    type Error = Error;
    fn try_from(r: RawAsymmetric) -> Result<Self> {
        AsymmetricParams::new(r.lambda1, r.lambda2, r.mu1, r.mu2, r.c1, r.c2)
    }
}

/// Input rates, service rates and switch-out rates of both queues.
///
/// Input rates may be zero (an empty queue); service and switch-out rates must
/// be strictly positive. Instability is a property, not a construction error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAsymmetric")]
pub struct AsymmetricParams {
    lambda1: f64,
    lambda2: f64,
    mu1: f64,
    mu2: f64,
    c1: f64,
    c2: f64,
}

impl AsymmetricParams {
    pub fn new(lambda1: f64, lambda2: f64, mu1: f64, mu2: f64, c1: f64, c2: f64) -> Result<Self> {
        Ok(Self {
            lambda1: check_nonnegative("lambda1", lambda1)?,
            lambda2: check_nonnegative("lambda2", lambda2)?,
            mu1: check_positive("mu1", mu1)?,
            mu2: check_positive("mu2", mu2)?,
            c1: check_positive("c1", c1)?,
            c2: check_positive("c2", c2)?,
        })
    }

    pub fn lambda(&self, q: Queue) -> f64 {
        match q {
            Queue::One => self.lambda1,
            Queue::Two => self.lambda2,
        }
    }

    pub fn mu(&self, q: Queue) -> f64 {
        match q {
            Queue::One => self.mu1,
            Queue::Two => self.mu2,
        }
    }

    /// Rate at which the server leaves queue `q`.
    pub fn c(&self, q: Queue) -> f64 {
        match q {
            Queue::One => self.c1,
            Queue::Two => self.c2,
        }
    }

    pub fn rho(&self, q: Queue) -> f64 {
        self.lambda(q) / self.mu(q)
    }

    /// Long-run fraction of time the server spends at `q`.
    pub fn visit_fraction(&self, q: Queue) -> f64 {
        self.c(q.other()) / (self.c1 + self.c2)
    }

    /// Same model with the queue labels exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            lambda1: self.lambda2,
            lambda2: self.lambda1,
            mu1: self.mu2,
            mu2: self.mu1,
            c1: self.c2,
            c2: self.c1,
        }
    }

    pub fn margins(&self) -> (f64, f64) {
        stability_margins(self)
    }

    pub fn is_stable(&self) -> bool {
        let (m1, m2) = self.margins();
        m1 > 0.0 && m2 > 0.0
    }
}

impl From<SymmetricParams> for AsymmetricParams {
    fn from(p: SymmetricParams) -> Self {
        Self {
            lambda1: p.lambda,
            lambda2: p.lambda,
            mu1: p.mu,
            mu2: p.mu,
            c1: p.c,
            c2: p.c,
        }
    }
}

#[derive(Deserialize)]
struct RawSymmetric {
    lambda: f64,
    mu: f64,
    c: f64,
}

impl TryFrom<RawSymmetric> for SymmetricParams {
    type Error = Error;
    fn try_from(r: RawSymmetric) -> Result<Self> {
        SymmetricParams::new(r.lambda, r.mu, r.c)
    }
}

/// Identical queues: common input rate, service rate and switch-out rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSymmetric")]
pub struct SymmetricParams {
    lambda: f64,
    mu: f64,
    c: f64,
}

impl SymmetricParams {
    pub fn new(lambda: f64, mu: f64, c: f64) -> Result<Self> {
        Ok(Self {
            lambda: check_nonnegative("lambda", lambda)?,
            mu: check_positive("mu", mu)?,
            c: check_positive("c", c)?,
        })
    }

    /// Builds from the load `rho = lambda / mu`.
    pub fn from_load(rho: f64, mu: f64, c: f64) -> Result<Self> {
        let mu = check_positive("mu", mu)?;
        Self::new(check_nonnegative("rho", rho)? * mu, mu, c)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn rho(&self) -> f64 {
        self.lambda / self.mu
    }

    /// Stable iff `rho < 1/2`.
    pub fn is_stable(&self) -> bool {
        self.rho() < 0.5
    }

    /// Heavy-traffic scale factor `1/2 - rho`.
    pub fn ht_scale(&self) -> f64 {
        0.5 - self.rho()
    }
}

/// Instantaneous state of the fluid model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkloadState {
    pub v1: f64,
    pub v2: f64,
    pub serving: Queue,
    pub clock: f64,
}

impl WorkloadState {
    pub fn empty(serving: Queue) -> Self {
        Self { v1: 0.0, v2: 0.0, serving, clock: 0.0 }
    }

    pub fn workload(&self, q: Queue) -> f64 {
        match q {
            Queue::One => self.v1,
            Queue::Two => self.v2,
        }
    }

    pub fn total(&self) -> f64 {
        self.v1 + self.v2
    }
}

/// Stability margins `m_j = c_{other}/(c1+c2) - rho_j`; the system is stable
/// iff both are strictly positive.
pub fn stability_margins(p: &AsymmetricParams) -> (f64, f64) {
    (
        p.visit_fraction(Queue::One) - p.rho(Queue::One),
        p.visit_fraction(Queue::Two) - p.rho(Queue::Two),
    )
}

/// Workloads after a visit of length `t1` to queue 1 followed by a visit of
/// length `t2` to queue 2, starting from `(v1, v2)`.
pub fn switch_epoch_update(
    v1: f64,
    v2: f64,
    t1: f64,
    t2: f64,
    p: &AsymmetricParams,
) -> Result<(f64, f64)> {
    check_nonnegative("v1", v1)?;
    check_nonnegative("v2", v2)?;
    check_nonnegative("t1", t1)?;
    check_nonnegative("t2", t2)?;
    let (l1, l2) = (p.lambda(Queue::One), p.lambda(Queue::Two));
    let a1 = (v1 + (l1 - p.mu(Queue::One)) * t1).max(0.0);
    let a2 = v2 + l2 * t1;
    let b2 = (a2 + (l2 - p.mu(Queue::Two)) * t2).max(0.0);
    let b1 = a1 + l1 * t2;
    Ok((b1, b2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sym(lambda: f64) -> AsymmetricParams {
        SymmetricParams::new(lambda, 1.0, 1.0).unwrap().into()
    }

    #[test]
    fn symmetric_margins() {
        let (m1, m2) = stability_margins(&sym(0.4));
        assert_abs_diff_eq!(m1, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(m2, 0.1, epsilon = 1e-15);
        assert!(sym(0.4).is_stable());
    }

    #[test]
    fn zero_load_margins_are_visit_fractions() {
        let p = AsymmetricParams::new(0.0, 0.0, 2.0, 3.0, 1.0, 3.0).unwrap();
        let (m1, m2) = stability_margins(&p);
        assert_abs_diff_eq!(m1, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(m2, 0.25, epsilon = 1e-15);
        assert!(p.is_stable());
    }

    #[test]
    fn overloaded_queue_one_is_unstable() {
        let p = AsymmetricParams::new(0.6, 0.1, 1.0, 1.0, 1.0, 1.0).unwrap();
        let (m1, _) = stability_margins(&p);
        assert_abs_diff_eq!(m1, -0.1, epsilon = 1e-12);
        assert!(!p.is_stable());
    }

    #[test]
    fn boundary_load_is_unstable() {
        assert!(!sym(0.5).is_stable());
    }

    #[test]
    fn rejects_bad_rates() {
        assert!(AsymmetricParams::new(-0.1, 0.1, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(AsymmetricParams::new(0.1, 0.1, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(AsymmetricParams::new(0.1, 0.1, 1.0, 1.0, f64::NAN, 1.0).is_err());
        assert!(SymmetricParams::new(0.1, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn serde_round_trip_validates() {
        let p = AsymmetricParams::new(0.1, 0.2, 1.0, 2.0, 0.3, 0.4).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let back: AsymmetricParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);
        let bad = r#"{"lambda1":0.1,"lambda2":0.2,"mu1":-1,"mu2":2,"c1":0.3,"c2":0.4}"#;
        assert!(serde_json::from_str::<AsymmetricParams>(bad).is_err());
    }

    #[test]
    fn epoch_update_without_input_stays_empty() {
        let p = AsymmetricParams::new(0.0, 0.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(switch_epoch_update(0.0, 0.0, 3.0, 4.0, &p).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn epoch_update_clamps_first_phase() {
        let p = AsymmetricParams::new(0.4, 0.3, 1.0, 1.0, 1.0, 1.0).unwrap();
        let (a, b) = switch_epoch_update(5.0, 0.0, 10.0, 0.0, &p).unwrap();
        assert_eq!(a, 0.0);
        assert_abs_diff_eq!(b, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn epoch_update_hand_value() {
        let (a, b) = switch_epoch_update(1.0, 1.0, 1.0, 1.0, &sym(0.4)).unwrap();
        assert_abs_diff_eq!(a, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn epoch_update_rejects_negative() {
        assert!(switch_epoch_update(-1.0, 0.0, 1.0, 1.0, &sym(0.4)).is_err());
        assert!(switch_epoch_update(0.0, 0.0, -1.0, 1.0, &sym(0.4)).is_err());
    }

    fn params() -> impl Strategy<Value = AsymmetricParams> {
        (0.0..2.0f64, 0.0..2.0f64, 0.1..3.0f64, 0.1..3.0f64, 0.05..2.0f64, 0.05..2.0f64)
            .prop_map(|(a, b, c, d, e, f)| AsymmetricParams::new(a, b, c, d, e, f).unwrap())
    }

    proptest! {
        #[test]
        fn epoch_outputs_nonnegative(p in params(), v1 in 0.0..10.0f64, v2 in 0.0..10.0f64,
                                     t1 in 0.0..10.0f64, t2 in 0.0..10.0f64) {
            let (a, b) = switch_epoch_update(v1, v2, t1, t2, &p).unwrap();
            prop_assert!(a >= 0.0 && b >= 0.0);
        }

        #[test]
        fn epoch_update_monotone(p in params(), v1 in 0.0..10.0f64, v2 in 0.0..10.0f64,
                                 dv in 0.0..5.0f64, t1 in 0.0..10.0f64, t2 in 0.0..10.0f64) {
            let base = switch_epoch_update(v1, v2, t1, t2, &p).unwrap();
            let up1 = switch_epoch_update(v1 + dv, v2, t1, t2, &p).unwrap();
            let up2 = switch_epoch_update(v1, v2 + dv, t1, t2, &p).unwrap();
            prop_assert!(up1.0 >= base.0);
            prop_assert!(up2.1 >= base.1);
        }

        #[test]
        fn margins_swap_with_labels(p in params()) {
            let (m1, m2) = stability_margins(&p);
            let (s1, s2) = stability_margins(&p.swapped());
            prop_assert!((m1 - s2).abs() < 1e-12 && (m2 - s1).abs() < 1e-12);
        }
    }
}
