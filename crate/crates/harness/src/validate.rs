//! Invariant and reproduction checks over seeded random instances.
//!
//! Each check returns a [`Check`] instead of panicking so the CLI can report
//! every outcome and the test suites can assert on them one by one.

use offload_core::channel::{self, psi_derivatives, xi_lower_bound};
use offload_core::delay::{self, makespan_closed_form};
use offload_core::oracle::{self, GridOptions, PowerOracle};
use offload_core::power::{self, check_monotonicity, objective_in_xi};
use offload_core::{
    alternate, johnson_schedule, AltMinConfig, Instance, PowerAllocation, Schedule, SolverOptions,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use crate::config::Config;
use crate::error::Result;
use crate::experiment::{
    self, f_ser_scenario, mean, rate_scenario, Fig2Params, Fig3Params, Fig4Params,
};
use crate::generate::{derived_seed, generate_instance, rng_from_seed, InstanceSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn instance(cfg: &Config, seed: u64, n: usize) -> Result<Instance> {
    let mut spec = InstanceSpec::from_config(cfg, seed)?;
    spec.n_tasks = n;
    generate_instance(&spec)
}

/// Powers uniform on `(0, p_max]`.
fn random_powers(
    rng: &mut Xoshiro256PlusPlus,
    n: usize,
    inst: &Instance,
) -> Result<PowerAllocation> {
    let p_max = inst.channel().p_max_w();
    let powers = (0..n)
        .map(|_| p_max * (1.0 - rng.random::<f64>()))
        .collect();
    Ok(PowerAllocation::new(powers, inst.channel())?)
}

fn random_order(rng: &mut Xoshiro256PlusPlus, n: usize) -> Schedule {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    Schedule::new(order).expect("permutation")
}

/// Log-uniform on `[lo, hi]`.
fn log_uniform(rng: &mut Xoshiro256PlusPlus, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
}

/// Johnson's order against exhaustive enumeration, `N` cycling over 2..=8.
pub fn johnson_optimality(cfg: &Config, instances: usize, seed: u64) -> Result<Check> {
    let mut worst = 0.0f64;
    for r in 0..instances {
        let s = derived_seed(seed, r as u64);
        let n = 2 + r % 7;
        let inst = instance(cfg, s, n)?;
        let p = random_powers(&mut rng_from_seed(s ^ 1), n, &inst)?;
        let ours = delay::makespan(&inst, &johnson_schedule(&inst, &p)?, &p)?;
        let brute = oracle::brute_force_schedule(&inst, &p)?.best_value;
        worst = worst.max(rel(ours, brute));
    }
    Ok(Check::new(
        "johnson_matches_enumeration",
        worst <= 1e-12,
        format!("{instances} instances, worst relative gap {worst:e}"),
    ))
}

/// Recursion against the prefix/suffix closed form, `N` cycling over 1..=12.
pub fn makespan_identity(cfg: &Config, instances: usize, seed: u64) -> Result<Check> {
    let mut worst = 0.0f64;
    for r in 0..instances {
        let s = derived_seed(seed, r as u64);
        let n = 1 + r % 12;
        let inst = instance(cfg, s, n)?;
        let mut rng = rng_from_seed(s ^ 1);
        let p = random_powers(&mut rng, n, &inst)?;
        let sigma = random_order(&mut rng, n);
        let rec = delay::makespan(&inst, &sigma, &p)?;
        let closed = makespan_closed_form(&inst, &sigma, &p)?;
        worst = worst.max(rel(rec, closed));
    }
    Ok(Check::new(
        "makespan_recursion_matches_closed_form",
        worst <= 1e-12,
        format!("{instances} instances, worst relative gap {worst:e}"),
    ))
}

/// Midpoint convexity of the power-subproblem objective in `xi`.
pub fn p3_midpoint_convexity(cfg: &Config, triples: usize, seed: u64) -> Result<Check> {
    let mut violations = 0;
    let mut worst = 0.0f64;
    for r in 0..triples {
        let s = derived_seed(seed, r as u64);
        let n = 1 + r % 6;
        let inst = instance(cfg, s, n)?;
        let mut rng = rng_from_seed(s ^ 1);
        let sigma = random_order(&mut rng, n);
        let eta = log_uniform(&mut rng, 1e-2, 1e3);
        let prob = power::build_p3(&inst, &sigma, eta)?;
        let d = prob.xi_lower();
        let a: Vec<f64> = (0..n)
            .map(|_| log_uniform(&mut rng, d, 100.0 * d))
            .collect();
        let b: Vec<f64> = (0..n)
            .map(|_| log_uniform(&mut rng, d, 100.0 * d))
            .collect();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let (fa, fb, fm) = (
            objective_in_xi(&prob, &a)?,
            objective_in_xi(&prob, &b)?,
            objective_in_xi(&prob, &mid)?,
        );
        let chord = 0.5 * (fa + fb);
        let excess = (fm - chord) / chord;
        worst = worst.max(excess);
        if excess > 1e-12 {
            violations += 1;
        }
    }
    Ok(Check::new(
        "p3_midpoint_convexity",
        violations == 0,
        format!("{triples} triples, {violations} violations, worst excess {worst:e}"),
    ))
}

/// Closed-form second derivative of the per-bit energy kernel against a
/// central difference of the first derivative.
pub fn psi_curvature(cfg: &Config, points: usize, seed: u64) -> Result<Check> {
    let ch = cfg.channel()?;
    let w = ch.bandwidth_hz();
    let d = xi_lower_bound(&ch);
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let xi = log_uniform(&mut rng, d, 1e3 * d);
        let h = 1e-5 * xi;
        let (_, second) = psi_derivatives(xi, w)?;
        let (up, _) = psi_derivatives(xi + h, w)?;
        let (down, _) = psi_derivatives(xi - h, w)?;
        worst = worst.max(rel((up - down) / (2.0 * h), second));
    }
    Ok(Check::new(
        "psi_second_derivative",
        worst <= 1e-5,
        format!("{points} points, worst relative error {worst:e}"),
    ))
}

/// Golden-section minimum of a unimodal function on `[lo, hi]`.
fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    [lo, x, hi].into_iter().map(f).fold(f64::INFINITY, f64::min)
}

pub const SOLVER_ETAS: [f64; 4] = [0.0, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSolverChecks {
    pub accuracy: Check,
    pub monotonicity: Check,
    pub tightness: Check,
}

/// Power solver against the grid oracle (and a scalar search for `N = 1`)
/// for `N` in 1..=3 and every weight in [`SOLVER_ETAS`], then monotonicity of
/// the powers along the order on those solves plus `extra_n5` five-task ones.
pub fn power_solver(
    cfg: &Config,
    instances_per_n: usize,
    extra_n5: usize,
    seed: u64,
) -> Result<PowerSolverChecks> {
    let opts = SolverOptions::default();
    let p_max = cfg.p_max_w;
    let mut worst_gap = 0.0f64;
    let mut worst_tight = 0.0f64;
    let mut worst_mono = 0.0f64;
    let (mut solves, mut unconverged, mut mono_checked, mut mono_failed) = (0, 0, 0, 0);

    for n in 1..=3usize {
        let grid = GridOptions {
            points_per_dim: if n == 3 { 100 } else { 400 },
            upper_factor: 50.0,
            refine_levels: if n == 3 { 2 } else { 3 },
        };
        for r in 0..instances_per_n {
            let s = derived_seed(seed, (n * 100_000 + r) as u64);
            let inst = instance(cfg, s, n)?;
            let sigma = random_order(&mut rng_from_seed(s ^ 1), n);
            for eta in SOLVER_ETAS {
                let prob = power::build_p3(&inst, &sigma, eta)?;
                let sol = power::solve_p3(&prob, &opts)?;
                solves += 1;
                let mut reference =
                    oracle::grid_power_search_with(&inst, &sigma, eta, &grid)?.best_value;
                if n == 1 {
                    let task = &inst.tasks()[0];
                    let (d, c) = (task.input_bits(), prob.weight_c());
                    let exec = prob.exec_seconds()[0];
                    let w = cfg.bandwidth_hz;
                    let f =
                        |x: f64| exec + d * x + c * d * channel::psi(x, w).unwrap_or(f64::INFINITY);
                    let scalar = golden_section(f, prob.xi_lower(), prob.xi_upper());
                    reference = reference.min(scalar);
                }
                worst_gap = worst_gap.max(rel(sol.objective_value, reference));

                let p = sol.power_allocation(&prob)?;
                let direct = delay::objective(&inst, &sigma, &p, eta)?.weighted;
                worst_tight = worst_tight.max(rel(sol.objective_value, direct));

                if sol.converged {
                    let m = check_monotonicity(&sol, p_max);
                    mono_checked += 1;
                    mono_failed += usize::from(!m.holds);
                    worst_mono = worst_mono.max(m.max_violation_w);
                } else {
                    unconverged += 1;
                }
            }
        }
    }
    for r in 0..extra_n5 {
        let s = derived_seed(seed, (900_000 + r) as u64);
        let inst = instance(cfg, s, 5)?;
        let mut rng = rng_from_seed(s ^ 1);
        let sigma = random_order(&mut rng, 5);
        let eta = [1.0, 10.0, 100.0][r % 3];
        let prob = power::build_p3(&inst, &sigma, eta)?;
        let sol = power::solve_p3(&prob, &opts)?;
        if sol.converged {
            let m = check_monotonicity(&sol, p_max);
            mono_checked += 1;
            mono_failed += usize::from(!m.holds);
            worst_mono = worst_mono.max(m.max_violation_w);
        } else {
            unconverged += 1;
        }
    }

    Ok(PowerSolverChecks {
        accuracy: Check::new(
            "power_solver_matches_oracles",
            worst_gap <= 1e-4,
            format!("{solves} solves, worst relative gap {worst_gap:e}"),
        ),
        monotonicity: Check::new(
            "powers_non_increasing_along_order",
            mono_failed == 0 && mono_checked > 0,
            format!(
                "{mono_checked} converged solves ({unconverged} unconverged skipped), {mono_failed} violations, worst {worst_mono:e} W"
            ),
        ),
        tightness: Check::new(
            "relaxation_is_tight",
            worst_tight <= 1e-7,
            format!("{solves} solves, worst relative gap {worst_tight:e}"),
        ),
    })
}

/// Outer-loop objective trace never increases (slack 1e-9 s).
pub fn altmin_descent(cfg: &Config, instances: usize, eta: f64, seed: u64) -> Result<Check> {
    let alt = AltMinConfig::default();
    let mut worst_rise = 0.0f64;
    let mut max_iters = 0;
    for r in 0..instances {
        let inst = instance(cfg, derived_seed(seed, r as u64), cfg.n_tasks)?;
        let report = alternate(&inst, eta, &alt)?;
        max_iters = max_iters.max(report.iterations_used);
        for w in report.objective_trace.windows(2) {
            worst_rise = worst_rise.max(w[1].weighted - w[0].weighted);
        }
    }
    Ok(Check::new(
        "alternation_descends",
        worst_rise <= 1e-9,
        format!("{instances} instances, worst rise {worst_rise:e} s, max iterations {max_iters}"),
    ))
}

/// Alternating method within 2% of joint enumeration for `N` in 1..=6.
pub fn altmin_near_optimal(cfg: &Config, instances_per_n: usize, seed: u64) -> Result<Check> {
    let alt = AltMinConfig::default();
    let mut worst = f64::NEG_INFINITY;
    let (mut count, mut over) = (0, 0);
    for n in 1..=6usize {
        let inner = if n <= 3 {
            PowerOracle::Grid(GridOptions {
                points_per_dim: 100,
                upper_factor: 50.0,
                refine_levels: 1,
            })
        } else {
            PowerOracle::Solver(SolverOptions::default())
        };
        for r in 0..instances_per_n {
            let inst = instance(cfg, derived_seed(seed, (n * 100_000 + r) as u64), n)?;
            for eta in [0.0, 10.0, 100.0] {
                let ours = alternate(&inst, eta, &alt)?.final_objective().weighted;
                let best = oracle::joint_brute_force(&inst, eta, &inner)?.best_value;
                let excess = ours / best - 1.0;
                worst = worst.max(excess);
                over += usize::from(excess > 0.02);
                count += 1;
            }
        }
    }
    Ok(Check::new(
        "alternation_near_joint_optimum",
        over == 0,
        format!(
            "{count} cases, {over} more than 2% above enumeration, worst excess {:.4}%",
            100.0 * worst
        ),
    ))
}

/// Coefficient of determination of a least-squares line.
pub fn linear_r2(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    sxy * sxy / (sxx * syy)
}

/// Scheduling gain at the balanced rate and `N = 35`, pairwise dominance and
/// linear growth of the makespan in `N`.
pub fn fig2_reproduction(cfg: &Config, replicates: usize, seed: u64) -> Result<Vec<Check>> {
    let params = Fig2Params {
        replicates,
        ..Fig2Params::defaults(cfg)
    };
    let res = experiment::run_fig2(cfg, &params, seed)?;
    let balanced = rate_scenario(params.rates_bps[1]);
    let gain = res.row(&balanced, 35.0, "gain").expect("N = 35 row").mean();

    let mut pairs = 0;
    let mut losses = 0;
    for rate in &params.rates_bps {
        for &n in &params.n_values {
            let sc = rate_scenario(*rate);
            let opt = &res.row(&sc, n as f64, "makespan_johnson_s").unwrap().values;
            let rnd = &res.row(&sc, n as f64, "makespan_random_s").unwrap().values;
            pairs += opt.len();
            // Equal makespans summed in different orders can differ by an ulp.
            losses += opt
                .iter()
                .zip(rnd)
                .filter(|(o, r)| **o > **r * (1.0 + 1e-12))
                .count();
        }
    }

    let mut r2_min = f64::INFINITY;
    for rate in &params.rates_bps {
        let sc = rate_scenario(*rate);
        let x: Vec<f64> = params.n_values.iter().map(|&n| n as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&n| res.row(&sc, n, "makespan_johnson_s").unwrap().mean())
            .collect();
        r2_min = r2_min.min(linear_r2(&x, &y));
    }

    Ok(vec![
        Check::new(
            "fig2_gain_at_35_tasks",
            (0.03..=0.09).contains(&gain),
            format!(
                "mean gain {:.3}% over {replicates} replicates",
                100.0 * gain
            ),
        ),
        Check::new(
            "fig2_johnson_never_loses",
            losses == 0,
            format!("{losses} of {pairs} paired replicates lost"),
        ),
        Check::new(
            "fig2_linear_growth",
            r2_min > 0.99,
            format!("min R^2 over rates {r2_min:.5}"),
        ),
    ])
}

/// Mean peak-power upload energy of `instances` default instances.
pub fn fig4_baseline_energy(cfg: &Config, instances: usize, seed: u64) -> Result<Check> {
    let mut energies = Vec::with_capacity(instances);
    for r in 0..instances {
        let inst = instance(cfg, derived_seed(seed, r as u64), cfg.n_tasks)?;
        let full = PowerAllocation::full(inst.len(), inst.channel());
        energies.push(delay::transmit_energy(&inst, &full)?);
    }
    let m = mean(&energies);
    Ok(Check::new(
        "fig4_peak_power_energy",
        rel(m, 4.21e-4) <= 0.10,
        format!("mean {m:e} J over {instances} instances"),
    ))
}

/// Energy saving at `eta = 100` and `f_ser = 1 GHz`, with delay close to the
/// `eta = 0.01` delay on the same instances.
pub fn fig4_energy_saving(cfg: &Config, replicates: usize, seed: u64) -> Result<Vec<Check>> {
    let params = Fig4Params {
        eta_values: vec![0.01, 100.0],
        f_ser_values: vec![1e9],
        replicates,
    };
    let res = experiment::run_fig4(cfg, &params, seed)?;
    let sc = f_ser_scenario(1e9);
    let saving = res.row(&sc, 100.0, "energy_saving").unwrap().mean();
    let slow = res.row(&sc, 100.0, "delay_s").unwrap().mean();
    let fast = res.row(&sc, 0.01, "delay_s").unwrap().mean();
    let growth = slow / fast - 1.0;
    Ok(vec![
        Check::new(
            "fig4_energy_saving",
            (0.65..=0.90).contains(&saving),
            format!(
                "mean saving {:.2}% over {replicates} replicates",
                100.0 * saving
            ),
        ),
        Check::new(
            "fig4_delay_cost_of_saving",
            growth.abs() <= 0.05,
            format!(
                "mean delay {slow:e} s vs {fast:e} s ({:+.2}%)",
                100.0 * growth
            ),
        ),
    ])
}

/// Proposed never worse than the random-order peak-power benchmark, and the
/// mean gap widens from the smallest to the largest weight.
pub fn fig3_dominance(cfg: &Config, params: &Fig3Params, seed: u64) -> Result<Check> {
    let res = experiment::run_fig3(cfg, params, seed)?;
    let mut losses = 0;
    let mut pairs = 0;
    for &eta in &params.eta_values {
        let ours = &res
            .row("default", eta, "objective_proposed")
            .unwrap()
            .values;
        let bench = &res
            .row("default", eta, "objective_benchmark")
            .unwrap()
            .values;
        pairs += ours.len();
        losses += ours
            .iter()
            .zip(bench)
            .filter(|(o, b)| **o > **b * (1.0 + 1e-12))
            .count();
    }
    let lo = res
        .row("default", params.eta_values[0], "gap")
        .unwrap()
        .mean();
    let hi = res
        .row("default", *params.eta_values.last().unwrap(), "gap")
        .unwrap()
        .mean();
    Ok(Check::new(
        "fig3_proposed_dominates",
        losses == 0 && hi > lo,
        format!("{losses} of {pairs} pairs lost; mean gap {lo:e} s at smallest eta, {hi:e} s at largest"),
    ))
}

/// Counts for [`run_all`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sizes {
    pub johnson: usize,
    pub makespan: usize,
    pub convexity: usize,
    pub curvature: usize,
    pub solver_per_n: usize,
    pub monotone_n5: usize,
    pub descent: usize,
    pub joint_per_n: usize,
    pub fig2: usize,
    pub baseline: usize,
    pub fig4: usize,
    pub fig3: usize,
}

impl Sizes {
    pub const FULL: Sizes = Sizes {
        johnson: 200,
        makespan: 1000,
        convexity: 1000,
        curvature: 100,
        solver_per_n: 50,
        monotone_n5: 50,
        descent: 100,
        joint_per_n: 10,
        fig2: 200,
        baseline: 500,
        fig4: 200,
        fig3: 100,
    };

    pub const QUICK: Sizes = Sizes {
        johnson: 40,
        makespan: 200,
        convexity: 200,
        curvature: 100,
        solver_per_n: 5,
        monotone_n5: 10,
        descent: 10,
        joint_per_n: 1,
        fig2: 50,
        baseline: 500,
        fig4: 50,
        fig3: 20,
    };
}

pub fn run_all(cfg: &Config, sizes: &Sizes, seed: u64) -> Result<Vec<Check>> {
    let mut out = vec![
        johnson_optimality(cfg, sizes.johnson, seed)?,
        makespan_identity(cfg, sizes.makespan, seed)?,
        p3_midpoint_convexity(cfg, sizes.convexity, seed)?,
        psi_curvature(cfg, sizes.curvature, seed)?,
    ];
    let p3 = power_solver(cfg, sizes.solver_per_n, sizes.monotone_n5, seed)?;
    out.extend([p3.accuracy, p3.monotonicity, p3.tightness]);
    out.push(altmin_descent(cfg, sizes.descent, 10.0, seed)?);
    out.push(altmin_near_optimal(cfg, sizes.joint_per_n, seed)?);
    out.extend(fig2_reproduction(cfg, sizes.fig2, seed)?);
    out.push(fig4_baseline_energy(cfg, sizes.baseline, seed)?);
    out.extend(fig4_energy_saving(cfg, sizes.fig4, seed)?);
    let fig3 = Fig3Params {
        replicates: sizes.fig3,
        ..Fig3Params::default()
    };
    out.push(fig3_dominance(cfg, &fig3, seed)?);
    Ok(out)
}
