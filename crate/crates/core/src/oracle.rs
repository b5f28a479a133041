//! Exhaustive references: every permutation for the schedule, a dense
//! log-spaced grid for the powers, and their product for tiny joint instances.
//!
//! Nothing here is clever on purpose. Enumeration is lexicographic, ties keep
//! the first candidate, so results are reproducible bit for bit.

use alloc::vec::Vec;

use crate::channel;
use crate::delay::{self, makespan_from_times, Instance, PowerAllocation, Schedule};
use crate::error::{Error, Result};
use crate::power::{self, SolverOptions};

/// Largest instance [`brute_force_schedule`] accepts (10! candidates).
pub const SCHEDULE_CAP: usize = 10;
/// Largest instance the power grid accepts.
pub const GRID_CAP: usize = 3;
/// Largest instance the joint search accepts when the inner power step uses
/// the convex solver.
pub const JOINT_SOLVER_CAP: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best_value: f64,
    pub best_sigma: Schedule,
    pub best_p: PowerAllocation,
    pub evaluations: u64,
}

/// Advances `perm` to the next permutation in lexicographic order; false once
/// the last one has been passed.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Visits every permutation of `0..n` in lexicographic order.
fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        visit(&perm);
        if !next_permutation(&mut perm) {
            break;
        }
    }
}

/// Minimum makespan over all permutations, from raw per-task times.
pub fn brute_force_times(tx: &[f64], exec: &[f64]) -> Result<(f64, Vec<usize>)> {
    if tx.len() > SCHEDULE_CAP {
        return Err(Error::SizeCapExceeded {
            n: tx.len(),
            cap: SCHEDULE_CAP,
        });
    }
    let mut best = f64::INFINITY;
    let mut arg = Vec::new();
    for_each_permutation(tx.len(), |perm| {
        let m = makespan_from_times(perm, tx, exec);
        if m < best {
            best = m;
            arg = perm.to_vec();
        }
    });
    Ok((best, arg))
}

/// Makespan-minimal schedule for fixed powers by full enumeration.
pub fn brute_force_schedule(instance: &Instance, p: &PowerAllocation) -> Result<OracleResult> {
    let n = instance.len();
    if n > SCHEDULE_CAP {
        return Err(Error::SizeCapExceeded {
            n,
            cap: SCHEDULE_CAP,
        });
    }
    let tx = instance.tx_times(p)?;
    let (best_value, order) = brute_force_times(&tx, &instance.exec_times())?;
    Ok(OracleResult {
        best_value,
        best_sigma: Schedule::new(order).expect("enumerated permutation"),
        best_p: p.clone(),
        evaluations: (1..=n as u64).product(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    pub points_per_dim: usize,
    /// Grid spans `[D, upper_factor * D]`.
    pub upper_factor: f64,
    /// Extra passes that re-grid the neighbourhood of the incumbent cell.
    pub refine_levels: usize,
}

impl GridOptions {
    pub fn new(points_per_dim: usize) -> Self {
        Self {
            points_per_dim,
            upper_factor: 50.0,
            refine_levels: 0,
        }
    }
}

/// Log-spaced grid search over rate inverses in `[D, 50 D]^N` for a fixed
/// schedule, scored with the delay-module objective of the mapped powers.
pub fn grid_power_search(
    instance: &Instance,
    sigma: &Schedule,
    eta: f64,
    grid_points_per_dim: usize,
) -> Result<OracleResult> {
    grid_power_search_with(instance, sigma, eta, &GridOptions::new(grid_points_per_dim))
}

pub fn grid_power_search_with(
    instance: &Instance,
    sigma: &Schedule,
    eta: f64,
    opts: &GridOptions,
) -> Result<OracleResult> {
    let n = instance.len();
    if n > GRID_CAP {
        return Err(Error::SizeCapExceeded { n, cap: GRID_CAP });
    }
    if sigma.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: sigma.len(),
        });
    }
    if opts.points_per_dim < 100 {
        return Err(Error::InvalidParameter {
            what: "grid_points_per_dim",
            value: opts.points_per_dim as f64,
        });
    }
    if !(opts.upper_factor > 1.0) {
        return Err(Error::InvalidParameter {
            what: "upper_factor",
            value: opts.upper_factor,
        });
    }
    let ch = *instance.channel();
    let lower = channel::xi_lower_bound(&ch);
    let k = opts.points_per_dim;

    // Per-dimension grids in log(xi); refinement narrows each around the incumbent.
    let (log_lo, log_hi) = (libm::log(lower), libm::log(lower * opts.upper_factor));
    let mut ranges = alloc::vec![(log_lo, log_hi); n];
    let mut best: Option<(f64, PowerAllocation)> = None;
    let mut evaluations = 0u64;

    for _ in 0..=opts.refine_levels {
        let axes: Vec<Vec<f64>> = ranges
            .iter()
            .map(|&(a, b)| {
                (0..k)
                    .map(|i| libm::exp(a + (b - a) * i as f64 / (k - 1) as f64))
                    .collect()
            })
            .collect();
        // Per-axis tables of (power, upload time, upload energy) so the inner
        // loop only combines them through the makespan recursion.
        let mut tables: Vec<Vec<(f64, f64, f64)>> = Vec::with_capacity(n);
        for (pos, &task) in sigma.order().iter().enumerate() {
            let spec = &instance.tasks()[task];
            let mut row = Vec::with_capacity(k);
            for &xi in &axes[pos] {
                let p = channel::rate_inverse_to_power(xi.max(lower), &ch)?;
                let tx = delay::tx_time(spec, p, &ch)?;
                row.push((p, tx, p * tx));
            }
            tables.push(row);
        }
        let exec = instance.exec_times();
        let mut tx = alloc::vec![0.0; n];
        let mut energy = alloc::vec![0.0; n];
        let mut idx = alloc::vec![0usize; n];
        let mut arg = idx.clone();
        let mut level_best = f64::INFINITY;
        loop {
            for (pos, &task) in sigma.order().iter().enumerate() {
                let (_, t, e) = tables[pos][idx[pos]];
                tx[task] = t;
                energy[task] = e;
            }
            let value =
                makespan_from_times(sigma.order(), &tx, &exec) + eta * energy.iter().sum::<f64>();
            evaluations += 1;
            if value < level_best {
                level_best = value;
                arg.copy_from_slice(&idx);
            }
            // Odometer increment over the n axes.
            let mut d = 0;
            while d < n {
                idx[d] += 1;
                if idx[d] < k {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == n {
                break;
            }
        }
        let mut powers = alloc::vec![0.0; n];
        for (pos, &task) in sigma.order().iter().enumerate() {
            powers[task] = tables[pos][arg[pos]].0;
        }
        let p = PowerAllocation::new(powers, &ch)?;
        let value = delay::objective(instance, sigma, &p, eta)?.weighted;
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, p));
        }
        for (pos, range) in ranges.iter_mut().enumerate() {
            let (a, b) = *range;
            let step = (b - a) / (k - 1) as f64;
            let centre = a + step * arg[pos] as f64;
            *range = (
                (centre - 2.0 * step).max(log_lo),
                (centre + 2.0 * step).min(log_hi),
            );
        }
    }

    let (best_value, best_p) = best.expect("grid is non-empty");
    Ok(OracleResult {
        best_value,
        best_sigma: sigma.clone(),
        best_p,
        evaluations,
    })
}

/// Inner power step of [`joint_brute_force`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerOracle {
    /// Grid search, `N <= 3`.
    Grid(GridOptions),
    /// The convex power solver, `N <= 6`.
    Solver(SolverOptions),
}

/// Minimum of the weighted objective over every permutation, each paired with
/// its optimal powers.
pub fn joint_brute_force(
    instance: &Instance,
    eta: f64,
    inner: &PowerOracle,
) -> Result<OracleResult> {
    let n = instance.len();
    let cap = match inner {
        PowerOracle::Grid(_) => GRID_CAP,
        PowerOracle::Solver(_) => JOINT_SOLVER_CAP,
    };
    if n > cap {
        return Err(Error::SizeCapExceeded { n, cap });
    }
    let mut best: Option<OracleResult> = None;
    let mut evaluations = 0u64;
    let mut failure = None;
    for_each_permutation(n, |perm| {
        if failure.is_some() {
            return;
        }
        let sigma = Schedule::new(perm.to_vec()).expect("enumerated permutation");
        let outcome = match inner {
            PowerOracle::Grid(opts) => grid_power_search_with(instance, &sigma, eta, opts),
            PowerOracle::Solver(opts) => solver_point(instance, &sigma, eta, opts),
        };
        match outcome {
            Ok(r) => {
                evaluations += r.evaluations;
                if best.as_ref().is_none_or(|b| r.best_value < b.best_value) {
                    best = Some(r);
                }
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let mut best = best.expect("at least one permutation");
    best.evaluations = evaluations;
    Ok(best)
}

fn solver_point(
    instance: &Instance,
    sigma: &Schedule,
    eta: f64,
    opts: &SolverOptions,
) -> Result<OracleResult> {
    let prob = power::build_p3(instance, sigma, eta)?;
    let sol = power::solve_p3(&prob, opts)?;
    let p = sol.power_allocation(&prob)?;
    let best_value = delay::objective(instance, sigma, &p, eta)?.weighted;
    Ok(OracleResult {
        best_value,
        best_sigma: sigma.clone(),
        best_p: p,
        evaluations: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelConfig;
    use crate::delay::{ServerConfig, TaskSpec};
    use alloc::vec;

    fn instance(rows: &[(f64, f64)]) -> Instance {
        let tasks = rows
            .iter()
            .map(|&(d, c)| TaskSpec::new(d, c).unwrap())
            .collect();
        Instance::new(
            tasks,
            ChannelConfig::reference(),
            ServerConfig::new(1e9).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn lexicographic_enumeration() {
        let mut seen = Vec::new();
        for_each_permutation(3, |p| seen.push(p.to_vec()));
        assert_eq!(
            seen,
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0]
            ]
        );
        let mut count = 0;
        for_each_permutation(1, |_| count += 1);
        assert_eq!(count, 1);
    }

    #[test]
    fn textbook_schedule() {
        let (best, order) = brute_force_times(&[1.0, 2.0, 4.0], &[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(best, 8.0);
        assert_eq!(order, vec![0, 1, 2]);
        // All tied: lexicographically first wins.
        let (_, order) = brute_force_times(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(order, vec![0, 1]);
    }

    #[test]
    fn caps_are_enforced() {
        let inst = instance(&[(1000.0, 500.0); 11]);
        let p = PowerAllocation::full(11, inst.channel());
        assert_eq!(
            brute_force_schedule(&inst, &p).unwrap_err(),
            Error::SizeCapExceeded { n: 11, cap: 10 }
        );
        let four = instance(&[(1000.0, 500.0); 4]);
        assert!(grid_power_search(&four, &Schedule::identity(4), 1.0, 100).is_err());
        assert!(joint_brute_force(&four, 1.0, &PowerOracle::Grid(GridOptions::new(100))).is_err());
        let seven = instance(&[(1000.0, 500.0); 7]);
        let solver = PowerOracle::Solver(SolverOptions::default());
        assert!(joint_brute_force(&seven, 1.0, &solver).is_err());
        let one = instance(&[(1000.0, 500.0)]);
        assert!(grid_power_search(&one, &Schedule::identity(1), 1.0, 99).is_err());
    }

    #[test]
    fn single_task_grids() {
        let inst = instance(&[(1000.0, 797.5)]);
        let sigma = Schedule::identity(1);
        let r = grid_power_search(&inst, &sigma, 0.0, 200).unwrap();
        assert_eq!(r.best_p.powers()[0], 0.1);
        assert_eq!(r.evaluations, 200);
        let joint =
            joint_brute_force(&inst, 0.0, &PowerOracle::Grid(GridOptions::new(200))).unwrap();
        assert_eq!(joint.best_value, r.best_value);
    }

    #[test]
    fn brute_force_beats_any_fixed_order() {
        let inst = instance(&[
            (1500.0, 300.0),
            (700.0, 1200.0),
            (1900.0, 800.0),
            (400.0, 100.0),
        ]);
        let p = PowerAllocation::new(vec![0.1, 0.02, 0.05, 0.003], inst.channel()).unwrap();
        let best = brute_force_schedule(&inst, &p).unwrap();
        for_each_permutation(4, |perm| {
            let m = delay::makespan(&inst, &Schedule::new(perm.to_vec()).unwrap(), &p).unwrap();
            assert!(best.best_value <= m);
        });
        assert_eq!(best.evaluations, 24);
    }
}
