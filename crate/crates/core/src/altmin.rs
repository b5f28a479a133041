//! Alternating minimization over upload order and transmit powers.
//!
//! Starting from peak power and the identity order, each outer iteration first
//! re-schedules with Johnson's rule for the current powers, then re-solves the
//! powers for the new schedule. Each half-step is optimal for its block, so the
//! weighted objective never increases.

use alloc::vec::Vec;

use crate::delay::{self, Instance, ObjectiveValue, PowerAllocation, Schedule};
use crate::error::{Error, Result};
use crate::flowshop;
use crate::power::{self, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltMinConfig {
    /// Maximum number of outer iterations.
    pub iter_max: usize,
    /// Stop once an iteration improves the objective by less than this many
    /// seconds (absolute).
    pub epsilon: f64,
    /// Options for every power solve.
    pub p3: SolverOptions,
}

impl Default for AltMinConfig {
    fn default() -> Self {
        Self {
            iter_max: 50,
            epsilon: 1e-7,
            p3: SolverOptions::default(),
        }
    }
}

impl AltMinConfig {
    fn validate(&self) -> Result<()> {
        if self.iter_max == 0 {
            return Err(Error::InvalidParameter {
                what: "iter_max",
                value: 0.0,
            });
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter {
                what: "epsilon",
                value: self.epsilon,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub final_sigma: Schedule,
    pub final_p: PowerAllocation,
    /// Objective of the starting point followed by one entry per outer iteration.
    pub objective_trace: Vec<ObjectiveValue>,
    pub iterations_used: usize,
    /// False if any power solve hit its iteration cap.
    pub converged: bool,
}

impl SolveReport {
    pub fn final_objective(&self) -> ObjectiveValue {
        *self
            .objective_trace
            .iter()
            .min_by(|a, b| a.weighted.total_cmp(&b.weighted))
            .expect("non-empty trace")
    }
}

/// Runs the alternation from peak power and the identity schedule.
pub fn alternate(instance: &Instance, eta: f64, cfg: &AltMinConfig) -> Result<SolveReport> {
    let n = instance.len();
    alternate_from(
        instance,
        eta,
        cfg,
        Schedule::identity(n),
        PowerAllocation::full(n, instance.channel()),
    )
}

/// Runs the alternation from a given schedule and power allocation.
pub fn alternate_from(
    instance: &Instance,
    eta: f64,
    cfg: &AltMinConfig,
    sigma: Schedule,
    p: PowerAllocation,
) -> Result<SolveReport> {
    cfg.validate()?;
    let start = delay::objective(instance, &sigma, &p, eta)?;
    let mut trace = alloc::vec![start];
    let (mut sigma, mut p) = (sigma, p);
    let mut best = (start.weighted, sigma.clone(), p.clone());
    let mut converged = true;
    let mut iterations = 0;
    let mut value = start.weighted;

    while iterations < cfg.iter_max {
        iterations += 1;
        let previous = value;

        sigma = flowshop::johnson_schedule(instance, &p)?;
        let prob = power::build_p3(instance, &sigma, eta)?;
        let sol = power::solve_p3(&prob, &cfg.p3)?;
        converged &= sol.converged;
        let candidate = sol.power_allocation(&prob)?;
        // Keep the incoming powers if the solve came back worse for this schedule.
        let kept = delay::objective(instance, &sigma, &p, eta)?;
        let solved = delay::objective(instance, &sigma, &candidate, eta)?;
        let current = if solved.weighted <= kept.weighted {
            p = candidate;
            solved
        } else {
            kept
        };
        trace.push(current);
        value = current.weighted;
        if value < best.0 {
            best = (value, sigma.clone(), p.clone());
        }
        if previous - value < cfg.epsilon {
            break;
        }
    }

    Ok(SolveReport {
        final_sigma: best.1,
        final_p: best.2,
        objective_trace: trace,
        iterations_used: iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelConfig;
    use crate::delay::{ServerConfig, TaskSpec};
    use crate::power::{build_p3, solve_p3};

    fn instance(rows: &[(f64, f64)], cpu_hz: f64) -> Instance {
        let tasks = rows
            .iter()
            .map(|&(d, c)| TaskSpec::new(d, c).unwrap())
            .collect();
        Instance::new(
            tasks,
            ChannelConfig::reference(),
            ServerConfig::new(cpu_hz).unwrap(),
        )
        .unwrap()
    }

    /// Deterministic pseudo-random rows without pulling an RNG into the core.
    fn rows(n: usize, salt: u64) -> Vec<(f64, f64)> {
        let mut state = salt.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        (0..n)
            .map(|_| (2000.0 * (1.0 - next()), 1595.0 * (1.0 - next())))
            .collect()
    }

    #[test]
    fn single_task() {
        let inst = instance(&[(1000.0, 797.5)], 1e9);
        let report = alternate(&inst, 100.0, &AltMinConfig::default()).unwrap();
        assert_eq!(report.final_sigma.order(), &[0]);
        let prob = build_p3(&inst, &Schedule::identity(1), 100.0).unwrap();
        let sol = solve_p3(&prob, &SolverOptions::default()).unwrap();
        assert!((report.final_p.powers()[0] - sol.powers_w[0]).abs() < 1e-12);
        assert!(report.iterations_used <= 2);
    }

    #[test]
    fn zero_weight_keeps_full_power() {
        for salt in 0..20 {
            let inst = instance(&rows(12, salt), 1e9);
            let report = alternate(&inst, 0.0, &AltMinConfig::default()).unwrap();
            assert!(report.iterations_used <= 2);
            assert!(report.final_p.powers().iter().all(|&p| p == 0.1));
            let johnson = flowshop::johnson_schedule(&inst, &report.final_p).unwrap();
            assert_eq!(johnson, report.final_sigma);
        }
    }

    #[test]
    fn trace_descends_and_restart_is_stable() {
        for salt in 0..5 {
            let inst = instance(&rows(15, salt + 100), 1e9);
            let cfg = AltMinConfig::default();
            let report = alternate(&inst, 10.0, &cfg).unwrap();
            assert!(report.iterations_used <= cfg.iter_max);
            for w in report.objective_trace.windows(2) {
                assert!(w[1].weighted <= w[0].weighted + 1e-9);
            }
            let again = alternate_from(
                &inst,
                10.0,
                &cfg,
                report.final_sigma.clone(),
                report.final_p.clone(),
            )
            .unwrap();
            let delta = report.final_objective().weighted - again.final_objective().weighted;
            assert!(delta.abs() < cfg.epsilon);
            assert_eq!(alternate(&inst, 10.0, &cfg).unwrap(), report);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let inst = instance(&[(1000.0, 797.5)], 1e9);
        let bad = AltMinConfig {
            iter_max: 0,
            ..Default::default()
        };
        assert!(alternate(&inst, 1.0, &bad).is_err());
        let bad = AltMinConfig {
            epsilon: 0.0,
            ..Default::default()
        };
        assert!(alternate(&inst, 1.0, &bad).is_err());
    }
}
