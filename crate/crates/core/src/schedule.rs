//! Step-size rules `α_k` and the cumulative times `t_k = α_0 + ⋯ + α_{k−1}`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, CompensatedSum};

#[derive(Clone, Debug, PartialEq)]
pub enum ScheduleKind {
    Constant { c: f64 },
    Power { c: f64, p: f64 },
    /// `α_k = cap · u_k` with `u_k ∈ (0, 1]` drawn from a counter-based hash of
    /// `(seed, k)`, so `α_k` can be evaluated out of order.
    Uniform { seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepSchedule {
    pub kind: ScheduleKind,
    pub cap: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, "must be a positive finite number"))
    }
}

/// `α_k = min(cap, c/(k+1)^{1/p})`.
pub fn make_power_schedule(c: f64, p: f64, cap: f64) -> Result<StepSchedule> {
    positive("c", c)?;
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::param("p", "must satisfy p >= 1"));
    }
    positive("cap", cap)?;
    Ok(StepSchedule {
        kind: ScheduleKind::Power { c, p },
        cap,
    })
}

/// `α_k = min(cap, c)`.
pub fn make_constant_schedule(c: f64, cap: f64) -> Result<StepSchedule> {
    positive("c", c)?;
    positive("cap", cap)?;
    Ok(StepSchedule {
        kind: ScheduleKind::Constant { c },
        cap,
    })
}

pub fn make_uniform_schedule(cap: f64, seed: u64) -> Result<StepSchedule> {
    positive("cap", cap)?;
    Ok(StepSchedule {
        kind: ScheduleKind::Uniform { seed },
        cap,
    })
}

impl StepSchedule {
    pub fn constant(alpha: f64) -> Result<Self> {
        make_constant_schedule(alpha, alpha)
    }

    pub fn alpha(&self, k: usize) -> f64 {
        match self.kind {
            ScheduleKind::Constant { c } => c.min(self.cap),
            ScheduleKind::Power { c, p } => {
                let a = if p == 1.0 {
                    c / (k as f64 + 1.0)
                } else {
                    c / math::powf(k as f64 + 1.0, 1.0 / p)
                };
                a.min(self.cap)
            }
            ScheduleKind::Uniform { seed } => {
                let bits = crate::mix_seed(seed, k as u64) >> 11;
                // (bits + 1) / 2^53 lies in (0, 1]
                let u = (bits + 1) as f64 * (1.0 / (1u64 << 53) as f64);
                self.cap * u
            }
        }
    }

    pub fn alphas(&self, count: usize) -> Vec<f64> {
        (0..count).map(|k| self.alpha(k)).collect()
    }

    /// `(t_0, …, t_K)`; see [`cumulative_times`].
    pub fn times(&self, steps: usize) -> Vec<f64> {
        cumulative_times(self, steps)
    }

    pub fn label(&self) -> alloc::string::String {
        use alloc::format;
        match self.kind {
            ScheduleKind::Constant { c } => format!("const:c={c},cap={}", self.cap),
            ScheduleKind::Power { c, p } => format!("pow:c={c},p={p},cap={}", self.cap),
            ScheduleKind::Uniform { seed } => format!("uniform:cap={},seed={seed}", self.cap),
        }
    }
}

/// Running time accumulator shared by [`cumulative_times`] and the Euler engine
/// so both produce bit-identical `t_k`.
#[derive(Clone, Debug, Default)]
pub struct TimeAccumulator(CompensatedSum);

impl TimeAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `alpha` and returns the new time.
    pub fn advance(&mut self, alpha: f64) -> f64 {
        self.0.add(alpha);
        self.0.value()
    }
}

pub fn cumulative_times(schedule: &StepSchedule, steps: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(0.0);
    let mut acc = TimeAccumulator::new();
    for k in 0..steps {
        out.push(acc.advance(schedule.alpha(k)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn power_schedule_examples() {
        let s = make_power_schedule(1.0, 6.0, 1.0).unwrap();
        assert_eq!(s.alpha(0), 1.0);
        let s = make_power_schedule(0.1, 6.0, 1.0).unwrap();
        assert!((s.alpha(63) - 0.05).abs() < 1e-15);
        let s = make_power_schedule(1.0, 1.0, 0.5).unwrap();
        assert_eq!(s.alpha(0), 0.5);
    }

    #[test]
    fn power_schedule_rejects_bad_parameters() {
        assert!(make_power_schedule(0.0, 2.0, 1.0).is_err());
        assert!(make_power_schedule(1.0, 0.5, 1.0).is_err());
        assert!(make_power_schedule(1.0, 2.0, -1.0).is_err());
        assert!(make_power_schedule(f64::NAN, 2.0, 1.0).is_err());
    }

    #[test]
    fn constant_times() {
        let s = make_constant_schedule(0.5, 1.0).unwrap();
        assert_eq!(cumulative_times(&s, 4), [0.0, 0.5, 1.0, 1.5, 2.0]);
        let s = make_power_schedule(1.0, 6.0, 1.0).unwrap();
        assert_eq!(cumulative_times(&s, 1), [0.0, 1.0]);
    }

    #[test]
    fn power_times_match_extended_precision_sum() {
        // Oracle: exact rational partial sums of 0.1/(k+1)^{1/6} carried in
        // double-double arithmetic.
        let s = make_power_schedule(0.1, 6.0, 1.0).unwrap();
        let t = cumulative_times(&s, 64);
        let (mut hi, mut lo) = (0.0f64, 0.0f64);
        for k in 0..64 {
            let a = 0.1 / ((k + 1) as f64).powf(1.0 / 6.0);
            let sum = hi + a;
            let bb = sum - hi;
            let err = (hi - (sum - bb)) + (a - bb);
            hi = sum;
            lo += err;
        }
        let oracle = hi + lo;
        assert!(((t[64] - oracle) / oracle).abs() < 1e-12);
    }

    #[test]
    fn uniform_schedule_in_range_and_deterministic() {
        let s = make_uniform_schedule(0.02, 7).unwrap();
        for k in 0..1000 {
            let a = s.alpha(k);
            assert!(a > 0.0 && a <= 0.02);
            assert_eq!(a, s.alpha(k));
        }
    }

    proptest! {
        #[test]
        fn alphas_in_range_and_times_increasing(
            c in 1e-3f64..10.0, p in 1.0f64..8.0, cap in 1e-3f64..5.0
        ) {
            let s = make_power_schedule(c, p, cap).unwrap();
            let t = cumulative_times(&s, 200);
            prop_assert_eq!(t[0], 0.0);
            for k in 0..200 {
                let a = s.alpha(k);
                prop_assert!(a > 0.0 && a <= cap);
                prop_assert!(t[k + 1] > t[k]);
            }
        }

        #[test]
        fn power_alphas_decrease_once_cap_is_inactive(c in 0.01f64..2.0, p in 1.0f64..8.0) {
            let s = make_power_schedule(c, p, 0.5).unwrap();
            for k in 0..300 {
                let (a, b) = (s.alpha(k), s.alpha(k + 1));
                if a < 0.5 {
                    prop_assert!(b < a);
                }
            }
            prop_assert!(s.alpha(1usize << 40) < 0.5 * c);
        }
    }
}
