//! Optimal transmit powers for a fixed upload order.
//!
//! In the rate-inverse variables `xi_j = 1 / rate(p_j)` (indexed by schedule
//! position) the subproblem is
//!
//! ```text
//! minimize   t + C * sum_j d_j psi(xi_j)
//! subject to t >= sum_{k<=i} d_k xi_k + sum_{k>=i} exec_k    for every position i
//!            D <= xi_j <= xi_max
//! ```
//!
//! with `C = eta * P_N / G` and `D = 1 / rate(p_max)`. The constraint family is
//! the unrolled completion-time recursion, so at the optimum `t` is exactly the
//! makespan of the recovered powers. The problem is convex because `psi` is.
//!
//! Two methods are provided:
//!
//! * [`P3Method::Barrier`] (default): log-barrier interior point with damped
//!   Newton centering on the epigraph form above.
//! * [`P3Method::SmoothedGradient`]: the max over constraints is replaced by a
//!   log-sum-exp with decreasing temperature, minimized by projected gradient
//!   with Armijo backtracking, then polished by projected subgradient steps.

use alloc::vec::Vec;

use crate::channel::{self, ChannelConfig};
use crate::delay::{suffix_sums, timeline_from_times, Instance, PowerAllocation, Schedule};
use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;

/// Default cap on the rate inverse, as a multiple of `D`.
pub const XI_UPPER_FACTOR: f64 = 1e4;
/// How many times an active upper cap is raised tenfold before giving up.
pub const MAX_UPPER_RAISES: u32 = 2;

/// Power subproblem for a fixed schedule. Per-position data is stored in
/// schedule order.
#[derive(Debug, Clone, PartialEq)]
pub struct P3Problem {
    sigma: Schedule,
    weight_c: f64,
    xi_lower: f64,
    xi_upper: f64,
    tx_bits: Vec<f64>,
    exec_seconds: Vec<f64>,
    channel: ChannelConfig,
}

impl P3Problem {
    pub fn sigma(&self) -> &Schedule {
        &self.sigma
    }
    /// `C = eta * P_N / G`.
    pub fn weight_c(&self) -> f64 {
        self.weight_c
    }
    /// `D`.
    pub fn xi_lower(&self) -> f64 {
        self.xi_lower
    }
    pub fn xi_upper(&self) -> f64 {
        self.xi_upper
    }
    pub fn tx_bits(&self) -> &[f64] {
        &self.tx_bits
    }
    pub fn exec_seconds(&self) -> &[f64] {
        &self.exec_seconds
    }
    pub fn channel(&self) -> &ChannelConfig {
        &self.channel
    }
    pub fn len(&self) -> usize {
        self.tx_bits.len()
    }
    pub fn is_empty(&self) -> bool {
        self.tx_bits.is_empty()
    }

    /// Same problem with a different rate-inverse cap (must exceed `D`).
    pub fn with_xi_upper(&self, xi_upper: f64) -> Result<Self> {
        if !(xi_upper > self.xi_lower) || !xi_upper.is_finite() {
            return Err(Error::InvalidParameter {
                what: "xi_upper",
                value: xi_upper,
            });
        }
        Ok(Self {
            xi_upper,
            ..self.clone()
        })
    }

    fn in_box(&self, xi: f64) -> bool {
        xi >= self.xi_lower * (1.0 - 1e-12) && xi <= self.xi_upper * (1.0 + 1e-12)
    }

    /// Makespan term `max_i (sum_{k<=i} d_k xi_k + sum_{k>=i} exec_k)`.
    fn makespan_in_xi(&self, xi: &[f64]) -> f64 {
        let suffix = suffix_sums(self.exec_seconds.iter().copied());
        let mut prefix = 0.0;
        let mut best = f64::NEG_INFINITY;
        for i in 0..xi.len() {
            prefix += self.tx_bits[i] * xi[i];
            best = best.max(prefix + suffix[i]);
        }
        best
    }

    fn energy_term(&self, xi: &[f64]) -> f64 {
        let w = self.channel.bandwidth_hz();
        self.tx_bits
            .iter()
            .zip(xi)
            .map(|(&d, &x)| d * channel::psi(x, w).expect("positive rate inverse"))
            .sum::<f64>()
            * self.weight_c
    }

    /// Maps per-position rate inverses to a task-indexed power allocation.
    pub fn power_allocation(&self, xi: &[f64]) -> Result<PowerAllocation> {
        if xi.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: xi.len(),
            });
        }
        let mut powers = alloc::vec![0.0; xi.len()];
        for (&task, &x) in self.sigma.order().iter().zip(xi) {
            powers[task] = channel::rate_inverse_to_power(x, &self.channel)?;
        }
        PowerAllocation::new(powers, &self.channel)
    }
}

/// Assembles the power subproblem for schedule `sigma` and weight `eta`.
pub fn build_p3(instance: &Instance, sigma: &Schedule, eta: f64) -> Result<P3Problem> {
    if sigma.len() != instance.len() {
        return Err(Error::DimensionMismatch {
            expected: instance.len(),
            found: sigma.len(),
        });
    }
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::InvalidParameter {
            what: "eta",
            value: eta,
        });
    }
    let ch = *instance.channel();
    let exec = instance.exec_times();
    let tasks = instance.tasks();
    let xi_lower = channel::xi_lower_bound(&ch);
    Ok(P3Problem {
        sigma: sigma.clone(),
        weight_c: eta * ch.noise_power_w() / ch.gain(),
        xi_lower,
        xi_upper: XI_UPPER_FACTOR * xi_lower,
        tx_bits: sigma
            .order()
            .iter()
            .map(|&t| tasks[t].input_bits())
            .collect(),
        exec_seconds: sigma.order().iter().map(|&t| exec[t]).collect(),
        channel: ch,
    })
}

/// Objective with the auxiliary completion bounds eliminated:
/// `max_i (sum_{k<=i} d_k xi_k + sum_{k>=i} exec_k) + C sum_j d_j psi(xi_j)`.
pub fn objective_in_xi(prob: &P3Problem, xi: &[f64]) -> Result<f64> {
    if xi.len() != prob.len() {
        return Err(Error::DimensionMismatch {
            expected: prob.len(),
            found: xi.len(),
        });
    }
    if let Some(&bad) = xi.iter().find(|&&x| !prob.in_box(x)) {
        return Err(Error::Domain {
            what: "rate inverse outside [D, xi_max]",
            value: bad,
        });
    }
    Ok(prob.makespan_in_xi(xi) + prob.energy_term(xi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum P3Method {
    Barrier,
    SmoothedGradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative objective tolerance.
    pub tol: f64,
    /// Cap on inner iterations (Newton or gradient steps) across all stages.
    pub max_iterations: usize,
    pub method: P3Method,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iterations: 20_000,
            method: P3Method::Barrier,
        }
    }
}

/// Multipliers of the completion-bound constraints. `alpha[i]` prices the
/// upload-side bound at position `i`; `beta[k]` (positions `1..n`) prices the
/// server-side chain between positions `k-1` and `k`, recovered from
/// stationarity in the auxiliary variables as `beta[k] = sum_{i<k} alpha[i]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DualState {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl DualState {
    fn from_alpha(alpha: Vec<f64>) -> Self {
        let mut beta = Vec::with_capacity(alpha.len().saturating_sub(1));
        let mut acc = 0.0;
        for a in alpha.iter().take(alpha.len().saturating_sub(1)) {
            acc += a;
            beta.push(acc);
        }
        Self { alpha, beta }
    }

    /// `sum_{i>=j} alpha[i]` for every position `j`.
    pub fn suffix_alpha(&self) -> Vec<f64> {
        suffix_sums(self.alpha.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct P3Solution {
    /// Optimal rate inverses per schedule position.
    pub xi_star: Vec<f64>,
    /// Recovered powers per schedule position.
    pub powers_w: Vec<f64>,
    /// Completion bounds rebuilt by the forward recursion from `powers_w`.
    pub t_tilde_star: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Dimensionless first-order optimality residual.
    pub kkt_residual: f64,
    pub duals: DualState,
    /// Running best objective after every inner iteration.
    pub objective_trace: Vec<f64>,
    /// Rate-inverse cap in force for the returned solution.
    pub xi_upper_used: f64,
    /// Times the cap was found active and raised tenfold.
    pub upper_bound_raises: u32,
}

impl P3Solution {
    pub fn makespan_s(&self) -> f64 {
        self.t_tilde_star.last().copied().unwrap_or(0.0)
    }

    pub fn power_allocation(&self, prob: &P3Problem) -> Result<PowerAllocation> {
        prob.power_allocation(&self.xi_star)
    }
}

/// Solves the power subproblem. Never panics on non-convergence: the best
/// iterate is returned with `converged == false`.
pub fn solve_p3(prob: &P3Problem, opts: &SolverOptions) -> Result<P3Solution> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter {
            what: "tol",
            value: opts.tol,
        });
    }
    if prob.is_empty() {
        return Err(Error::InvalidParameter {
            what: "task count",
            value: 0.0,
        });
    }
    let mut current = prob.clone();
    let mut raises = 0;
    loop {
        let raw = if current.weight_c == 0.0 {
            full_power(&current)
        } else {
            match opts.method {
                P3Method::Barrier => barrier::solve(&current, opts),
                P3Method::SmoothedGradient => smoothed::solve(&current, opts),
            }
        };
        let cap_active = raw.xi.iter().any(|&x| x >= current.xi_upper * (1.0 - 1e-3));
        if cap_active && raises < MAX_UPPER_RAISES {
            current = current.with_xi_upper(current.xi_upper * 10.0)?;
            raises += 1;
            continue;
        }
        return finish(&current, raw, raises);
    }
}

/// Output of an inner method before the solution is assembled.
struct RawSolve {
    xi: Vec<f64>,
    alpha: Vec<f64>,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

/// With no energy price the objective is nondecreasing in every `xi`, so peak
/// power everywhere is optimal.
fn full_power(prob: &P3Problem) -> RawSolve {
    let xi = alloc::vec![prob.xi_lower; prob.len()];
    let suffix = suffix_sums(prob.exec_seconds.iter().copied());
    let mut prefix = 0.0;
    let mut arg = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..xi.len() {
        prefix += prob.tx_bits[i] * xi[i];
        if prefix + suffix[i] > best {
            best = prefix + suffix[i];
            arg = i;
        }
    }
    let mut alpha = alloc::vec![0.0; xi.len()];
    alpha[arg] = 1.0;
    RawSolve {
        xi,
        alpha,
        iterations: 0,
        converged: true,
        trace: alloc::vec![best],
    }
}

fn finish(prob: &P3Problem, raw: RawSolve, raises: u32) -> Result<P3Solution> {
    let xi: Vec<f64> = raw
        .xi
        .iter()
        .map(|&x| x.clamp(prob.xi_lower, prob.xi_upper))
        .collect();
    let powers_w = xi
        .iter()
        .map(|&x| channel::rate_inverse_to_power(x, &prob.channel))
        .collect::<Result<Vec<_>>>()?;
    // Forward recursion with the exact upload times of the recovered powers.
    let positions: Vec<usize> = (0..xi.len()).collect();
    let tx: Vec<f64> = prob
        .tx_bits
        .iter()
        .zip(&powers_w)
        .map(|(&d, &p)| d / channel::rate(p, &prob.channel).expect("valid power"))
        .collect();
    let t_tilde_star = timeline_from_times(&positions, &tx, &prob.exec_seconds).completion_s;
    let objective_value = objective_in_xi(prob, &xi)?;
    let duals = DualState::from_alpha(raw.alpha);
    let kkt_residual = kkt_residual(prob, &xi, &duals);
    Ok(P3Solution {
        xi_star: xi,
        powers_w,
        t_tilde_star,
        objective_value,
        iterations: raw.iterations,
        converged: raw.converged,
        kkt_residual,
        duals,
        objective_trace: raw.trace,
        xi_upper_used: prob.xi_upper,
        upper_bound_raises: raises,
    })
}

/// Largest KKT violation, all terms dimensionless: `|sum alpha - 1|`,
/// complementarity of each path constraint relative to the makespan, and
/// complementarity of the box multipliers that absorb the `xi` stationarity
/// residual, relative to the distance from the bound they push against.
fn kkt_residual(prob: &P3Problem, xi: &[f64], duals: &DualState) -> f64 {
    let w = prob.channel.bandwidth_hz();
    let tail = duals.suffix_alpha();
    let mut worst = (duals.alpha.iter().sum::<f64>() - 1.0).abs();
    let t = prob.makespan_in_xi(xi);
    let suffix = suffix_sums(prob.exec_seconds.iter().copied());
    let mut prefix = 0.0;
    for (j, &x) in xi.iter().enumerate() {
        prefix += prob.tx_bits[j] * x;
        worst = worst.max(duals.alpha[j] * (t - prefix - suffix[j]) / t);
        let (dpsi, _) = channel::psi_derivatives(x, w).expect("positive rate inverse");
        let g = prob.weight_c * dpsi + tail[j];
        let r = if g > 0.0 {
            g * (x - prob.xi_lower) / prob.xi_lower
        } else {
            -g * (prob.xi_upper - x) / prob.xi_upper
        };
        worst = worst.max(r);
    }
    worst
}

/// Rate inverses from the multiplier closed form
/// `xi_j = clip(phi(sum_{i>=j} alpha_i), D, xi_max)`.
pub fn xi_from_multipliers(prob: &P3Problem, duals: &DualState) -> Result<Vec<f64>> {
    if prob.weight_c == 0.0 {
        return Ok(alloc::vec![prob.xi_lower; prob.len()]);
    }
    duals
        .suffix_alpha()
        .into_iter()
        .map(|x| {
            let root = channel::phi_from(
                x.max(0.0),
                prob.channel.bandwidth_hz(),
                prob.weight_c,
                prob.xi_lower,
            )?;
            Ok(root.clip(prob.xi_lower, prob.xi_upper))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityCheck {
    pub holds: bool,
    /// `max_{i<j} (p_j - p_i)`, clamped at zero.
    pub max_violation_w: f64,
}

/// Checks that recovered powers do not increase along the schedule, within
/// `1e-6 * p_max`.
pub fn check_monotonicity(solution: &P3Solution, p_max_w: f64) -> MonotonicityCheck {
    let mut running_min = f64::INFINITY;
    let mut worst: f64 = 0.0;
    for &p in &solution.powers_w {
        worst = worst.max(p - running_min);
        running_min = running_min.min(p);
    }
    MonotonicityCheck {
        holds: worst <= 1e-6 * p_max_w,
        max_violation_w: worst,
    }
}

/// Problem data in units where `xi = D (1 + w)` and times are divided by the
/// full-power makespan, so every quantity the methods touch is O(1).
struct Scaled<'a> {
    prob: &'a P3Problem,
    /// Time unit: makespan at full power.
    time_unit: f64,
    /// `d_j D / T`: upload time at full power.
    upload: Vec<f64>,
    /// `sum_{k>=i} exec_k / T`.
    exec_tail: Vec<f64>,
    /// `C d_j / T`.
    energy: Vec<f64>,
    /// Upper bound on `w`.
    w_max: f64,
}

impl<'a> Scaled<'a> {
    fn new(prob: &'a P3Problem) -> Self {
        let d = prob.xi_lower;
        let time_unit = prob.makespan_in_xi(&alloc::vec![d; prob.len()]);
        let upload = prob.tx_bits.iter().map(|&b| b * d / time_unit).collect();
        let exec_tail = suffix_sums(prob.exec_seconds.iter().map(|&e| e / time_unit));
        let energy = prob
            .tx_bits
            .iter()
            .map(|&b| prob.weight_c * b / time_unit)
            .collect();
        Self {
            prob,
            time_unit,
            upload,
            exec_tail,
            energy,
            w_max: prob.xi_upper / d - 1.0,
        }
    }

    fn n(&self) -> usize {
        self.upload.len()
    }

    fn xi(&self, w: f64) -> f64 {
        self.prob.xi_lower * (1.0 + w)
    }

    /// Scaled energy of position `j` and its first two derivatives in `w`.
    fn energy_terms(&self, j: usize, w: f64) -> (f64, f64, f64) {
        let bw = self.prob.channel.bandwidth_hz();
        let d = self.prob.xi_lower;
        let x = self.xi(w);
        let value = channel::psi(x, bw).expect("positive rate inverse");
        let (d1, d2) = channel::psi_derivatives(x, bw).expect("positive rate inverse");
        let c = self.energy[j];
        (c * value, c * d * d1, c * d * d * d2)
    }

    /// `sum_{k<=i} upload_k (1 + w_k) + exec_tail_i` for every position.
    fn paths(&self, w: &[f64]) -> Vec<f64> {
        let mut prefix = 0.0;
        (0..self.n())
            .map(|i| {
                prefix += self.upload[i] * (1.0 + w[i]);
                prefix + self.exec_tail[i]
            })
            .collect()
    }

    fn true_objective(&self, w: &[f64]) -> f64 {
        let xi: Vec<f64> = w.iter().map(|&v| self.xi(v)).collect();
        self.prob.makespan_in_xi(&xi) + self.prob.energy_term(&xi)
    }
}

mod barrier {
    use super::*;

    const CENTERING_DECREMENT_TOL: f64 = 1e-14;
    /// Above this, a decrement that stops shrinking is not yet rounding noise.
    const STALL_DECREMENT: f64 = 1e-8;
    const MAX_CENTERING_STEPS: usize = 200;
    const TAU_GROWTH: f64 = 10.0;
    const ARMIJO: f64 = 0.25;

    struct Point {
        w: Vec<f64>,
        s: f64,
    }

    pub(super) fn solve(prob: &P3Problem, opts: &SolverOptions) -> RawSolve {
        let sc = Scaled::new(prob);
        let n = sc.n();
        let m = (3 * n) as f64;

        let start_w = if sc.w_max > 2.0 { 0.5 } else { 0.25 * sc.w_max };
        let mut pt = Point {
            w: alloc::vec![start_w; n],
            s: 0.0,
        };
        let top = sc
            .paths(&pt.w)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        pt.s = top + 0.1 * top.abs().max(1.0);

        // The scaled optimum is at least the total execution share, which is
        // O(1); a duality gap this small is well below the requested tolerance.
        let gap_target = opts.tol * 1e-3;
        // Late centres can stall on rounding; an earlier one this tight still counts.
        let gap_accept = opts.tol * 1e-2;
        let mut tau = m;
        let mut iterations = 0;
        let mut trace = Vec::new();
        let mut trace_best = f64::INFINITY;
        let mut best = f64::INFINITY;
        let mut best_w = pt.w.clone();
        let mut best_tau = tau;
        let mut best_s = pt.s;
        let mut last_gap = f64::INFINITY;
        let mut dual_source: Option<(f64, f64, Vec<f64>)> = None;
        let mut converged = false;

        'outer: loop {
            let mut centered = false;
            let mut tight = false;
            let mut previous_decrement = f64::INFINITY;
            for _ in 0..MAX_CENTERING_STEPS {
                if iterations >= opts.max_iterations {
                    break 'outer;
                }
                iterations += 1;
                let Some((grad, hess)) = derivatives(&sc, &pt, tau) else {
                    converged = last_gap <= gap_accept;
                    break 'outer;
                };
                let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
                let Some(step) = hess.cholesky_solve(&neg) else {
                    converged = last_gap <= gap_accept;
                    break 'outer;
                };
                let decrement: f64 = -grad.iter().zip(&step).map(|(g, s)| g * s).sum::<f64>();

                trace_best = trace_best.min(sc.true_objective(&pt.w));
                trace.push(trace_best * sc.time_unit);

                let stalled =
                    decrement <= STALL_DECREMENT && decrement >= 0.25 * previous_decrement;
                if decrement * 0.5 <= CENTERING_DECREMENT_TOL || stalled {
                    tight = !stalled;
                    centered = true;
                    break;
                }
                previous_decrement = decrement;
                let Some(next) = line_search(&sc, &pt, &step, &grad, tau) else {
                    // No progress possible at this precision: treat as centered.
                    centered = true;
                    break;
                };
                pt = next;
            }
            if !centered {
                converged = last_gap <= gap_accept;
                break;
            }
            last_gap = m / tau;
            // Multipliers are only as accurate as the centring; keep the
            // last centre that was not limited by rounding.
            if tight || dual_source.is_none() {
                dual_source = Some((tau, pt.s, sc.paths(&pt.w)));
            }
            let value = sc.true_objective(&pt.w);
            if value <= best {
                best = value;
                best_w = pt.w.clone();
                best_tau = tau;
                best_s = pt.s;
            }
            if m / tau <= gap_target {
                converged = true;
                break;
            }
            tau *= TAU_GROWTH;
        }

        let (dual_tau, dual_s, dual_paths) =
            dual_source.unwrap_or_else(|| (best_tau, best_s, sc.paths(&best_w)));
        let alpha = dual_paths
            .iter()
            .map(|path| 1.0 / (dual_tau * (dual_s - path)))
            .collect();
        if trace.last().is_none_or(|&last| best * sc.time_unit <= last) {
            trace.push(best * sc.time_unit);
        }
        RawSolve {
            xi: best_w.iter().map(|&v| sc.xi(v)).collect(),
            alpha,
            iterations,
            converged,
            trace,
        }
    }

    /// Barrier value `tau * F - sum log(slacks)`, `None` outside the interior.
    fn barrier_value(sc: &Scaled, pt: &Point, tau: f64) -> Option<f64> {
        let mut value = tau * pt.s;
        for (j, &w) in pt.w.iter().enumerate() {
            let upper = sc.w_max - w;
            if !(w > 0.0 && upper > 0.0) {
                return None;
            }
            value += tau * sc.energy_terms(j, w).0 - libm::log(w) - libm::log(upper);
        }
        for path in sc.paths(&pt.w) {
            let r = pt.s - path;
            if !(r > 0.0) {
                return None;
            }
            value -= libm::log(r);
        }
        Some(value)
    }

    /// Gradient and Hessian of the barrier function, variables `[w_0.., s]`.
    fn derivatives(sc: &Scaled, pt: &Point, tau: f64) -> Option<(Vec<f64>, SquareMatrix)> {
        let n = sc.n();
        let paths = sc.paths(&pt.w);
        let mut inv = Vec::with_capacity(n);
        for &path in &paths {
            let r = pt.s - path;
            if !(r > 0.0) {
                return None;
            }
            inv.push(1.0 / r);
        }
        let inv_tail = suffix_sums(inv.iter().copied());
        let inv_sq_tail = suffix_sums(inv.iter().map(|v| v * v));

        let mut grad = alloc::vec![0.0; n + 1];
        let mut hess = SquareMatrix::zeros(n + 1);
        grad[n] = tau - inv_tail[0];
        hess.set(n, n, inv_sq_tail[0]);
        for j in 0..n {
            let w = pt.w[j];
            let upper = sc.w_max - w;
            let (_, e1, e2) = sc.energy_terms(j, w);
            grad[j] = tau * e1 + sc.upload[j] * inv_tail[j] - 1.0 / w + 1.0 / upper;
            let cross = -sc.upload[j] * inv_sq_tail[j];
            hess.set(j, n, cross);
            hess.set(n, j, cross);
            for k in 0..=j {
                // Constraints i >= max(j, k) = j involve both w_j and w_k.
                let v = sc.upload[j] * sc.upload[k] * inv_sq_tail[j];
                hess.set(j, k, v);
                hess.set(k, j, v);
            }
            hess.add(j, j, tau * e2 + 1.0 / (w * w) + 1.0 / (upper * upper));
        }
        Some((grad, hess))
    }

    fn line_search(sc: &Scaled, pt: &Point, step: &[f64], grad: &[f64], tau: f64) -> Option<Point> {
        let n = sc.n();
        let base = barrier_value(sc, pt, tau)?;
        let slope: f64 = grad.iter().zip(step).map(|(g, s)| g * s).sum();
        // Barrier values reach ~1e13 late in the path; allow for their rounding.
        let noise = 1e-14 * base.abs().max(1.0);
        let mut t = 1.0;
        for _ in 0..60 {
            let cand = Point {
                w: (0..n).map(|j| pt.w[j] + t * step[j]).collect(),
                s: pt.s + t * step[n],
            };
            if let Some(v) = barrier_value(sc, &cand, tau) {
                if v <= base + ARMIJO * t * slope + noise {
                    return Some(cand);
                }
            }
            t *= 0.5;
        }
        None
    }
}

mod smoothed {
    use super::*;

    const TEMPERATURES: [f64; 3] = [1e-2, 1e-3, 1e-4];
    const SUFFICIENT_DECREASE: f64 = 1e-4;
    /// Share of the iteration budget left for the subgradient polish.
    const POLISH_SHARE: f64 = 0.2;

    /// `mu * log sum exp(path / mu)` and its softmax weights.
    fn soft_max(paths: &[f64], mu: f64) -> (f64, Vec<f64>) {
        let top = paths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = paths.iter().map(|&p| libm::exp((p - top) / mu)).collect();
        let total: f64 = weights.iter().sum();
        (
            top + mu * libm::log(total),
            weights.into_iter().map(|v| v / total).collect(),
        )
    }

    fn smoothed_value(sc: &Scaled, w: &[f64], mu: f64) -> f64 {
        let (value, _) = soft_max(&sc.paths(w), mu);
        value + (0..sc.n()).map(|j| sc.energy_terms(j, w[j]).0).sum::<f64>()
    }

    /// Gradient in `w` given per-constraint weights (softmax or a subgradient
    /// selection).
    fn gradient(sc: &Scaled, w: &[f64], weights: &[f64]) -> Vec<f64> {
        let tail = suffix_sums(weights.iter().copied());
        (0..sc.n())
            .map(|j| sc.upload[j] * tail[j] + sc.energy_terms(j, w[j]).1)
            .collect()
    }

    fn project(sc: &Scaled, w: f64) -> f64 {
        w.clamp(0.0, sc.w_max)
    }

    pub(super) fn solve(prob: &P3Problem, opts: &SolverOptions) -> RawSolve {
        let sc = Scaled::new(prob);
        let n = sc.n();
        let budget = opts.max_iterations;
        let smooth_budget = ((1.0 - POLISH_SHARE) * budget as f64) as usize;
        let per_stage = smooth_budget / TEMPERATURES.len();

        let mut w = alloc::vec![0.0; n];
        let mut best = sc.true_objective(&w);
        let mut best_w = w.clone();
        let mut trace = Vec::new();
        let mut iterations = 0;
        let mut converged = false;

        for (stage, &mu) in TEMPERATURES.iter().enumerate() {
            let mut step = 1.0;
            let mut stage_done = false;
            for _ in 0..per_stage {
                iterations += 1;
                let (_, weights) = soft_max(&sc.paths(&w), mu);
                let g = gradient(&sc, &w, &weights);
                let f0 = smoothed_value(&sc, &w, mu);
                let mut accepted = None;
                let mut t = step * 2.0;
                for _ in 0..60 {
                    let cand: Vec<f64> = (0..n).map(|j| project(&sc, w[j] - t * g[j])).collect();
                    let moved: f64 = cand.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum();
                    if moved == 0.0 {
                        break;
                    }
                    if smoothed_value(&sc, &cand, mu) <= f0 - SUFFICIENT_DECREASE / t * moved {
                        accepted = Some((cand, moved));
                        break;
                    }
                    t *= 0.5;
                }
                let value = sc.true_objective(&w);
                if value < best {
                    best = value;
                    best_w = w.clone();
                }
                trace.push(best * sc.time_unit);
                match accepted {
                    Some((cand, moved)) => {
                        step = t;
                        w = cand;
                        // Projected-gradient mapping norm.
                        if libm::sqrt(moved) / t <= opts.tol * 1e-2 {
                            stage_done = true;
                            break;
                        }
                    }
                    None => {
                        stage_done = true;
                        break;
                    }
                }
            }
            if stage == TEMPERATURES.len() - 1 {
                converged = stage_done;
            }
        }

        // Polish on the exact objective with diminishing projected subgradient steps.
        let polish = budget.saturating_sub(iterations);
        let scale = 1e-3 * (1.0 + w.iter().copied().fold(0.0, f64::max));
        for k in 0..polish {
            iterations += 1;
            let paths = sc.paths(&w);
            let top = paths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let arg = paths.iter().position(|&p| p == top).unwrap_or(0);
            let mut pick = alloc::vec![0.0; n];
            pick[arg] = 1.0;
            let g = gradient(&sc, &w, &pick);
            let norm = libm::sqrt(g.iter().map(|v| v * v).sum::<f64>());
            if norm == 0.0 {
                break;
            }
            let t = scale / (libm::sqrt(k as f64 + 1.0) * norm);
            for j in 0..n {
                w[j] = project(&sc, w[j] - t * g[j]);
            }
            let value = sc.true_objective(&w);
            if value < best {
                best = value;
                best_w = w.clone();
            }
            trace.push(best * sc.time_unit);
        }

        // Softmax weights at the smallest temperature stand in for the
        // multipliers of the completion bounds.
        let (_, alpha) = soft_max(&sc.paths(&best_w), TEMPERATURES[TEMPERATURES.len() - 1]);
        RawSolve {
            xi: best_w.iter().map(|&v| sc.xi(v)).collect(),
            alpha,
            iterations,
            converged,
            trace,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::{self, ServerConfig, TaskSpec};
    use alloc::vec;
    use alloc::vec::Vec;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

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

    /// Golden-section minimum of a unimodal scalar function on `[lo, hi]`.
    fn golden(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let ratio = 0.5 * (libm::sqrt(5.0) - 1.0);
        for _ in 0..300 {
            let a = hi - ratio * (hi - lo);
            let b = lo + ratio * (hi - lo);
            if f(a) < f(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn build_constants() {
        let inst = instance(&[(1000.0, 800.0), (500.0, 300.0)]);
        let sigma = Schedule::new(vec![1, 0]).unwrap();
        let prob = build_p3(&inst, &sigma, 100.0).unwrap();
        assert!(rel(prob.weight_c(), 0.3981) < 1e-3, "{}", prob.weight_c());
        assert_eq!(prob.xi_lower(), channel::xi_lower_bound(inst.channel()));
        assert_eq!(prob.tx_bits(), &[500.0, 1000.0]);
        assert_eq!(prob.exec_seconds()[1], 8e-4);
        assert_eq!(build_p3(&inst, &sigma, 0.0).unwrap().weight_c(), 0.0);
        assert!(build_p3(&inst, &Schedule::identity(3), 1.0).is_err());
        assert!(build_p3(&inst, &sigma, -1.0).is_err());
    }

    #[test]
    fn objective_reductions() {
        let inst = instance(&[(1200.0, 500.0)]);
        let prob = build_p3(&inst, &Schedule::identity(1), 50.0).unwrap();
        let xi = 3.0 * prob.xi_lower();
        let expected = 1200.0 * xi
            + prob.exec_seconds()[0]
            + prob.weight_c() * 1200.0 * channel::psi(xi, 1e6).unwrap();
        assert!(rel(objective_in_xi(&prob, &[xi]).unwrap(), expected) < 1e-14);
        assert!(objective_in_xi(&prob, &[0.5 * prob.xi_lower()]).is_err());
        assert!(objective_in_xi(&prob, &[xi, xi]).is_err());

        // Without an energy price the objective is the makespan of the powers.
        let inst = instance(&[(1200.0, 500.0), (300.0, 1500.0), (900.0, 900.0)]);
        let sigma = Schedule::new(vec![2, 0, 1]).unwrap();
        let prob = build_p3(&inst, &sigma, 0.0).unwrap();
        let xi = [
            prob.xi_lower() * 2.0,
            prob.xi_lower() * 1.5,
            prob.xi_lower() * 7.0,
        ];
        let p = prob.power_allocation(&xi).unwrap();
        let direct = delay::makespan(&inst, &sigma, &p).unwrap();
        assert!(rel(objective_in_xi(&prob, &xi).unwrap(), direct) < 1e-12);
    }

    #[test]
    fn zero_weight_is_full_power() {
        let inst = instance(&[(1200.0, 500.0), (300.0, 1500.0)]);
        let prob = build_p3(&inst, &Schedule::identity(2), 0.0).unwrap();
        let sol = solve_p3(&prob, &SolverOptions::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.powers_w.iter().all(|&p| rel(p, 0.1) < 1e-12));
        assert!(check_monotonicity(&sol, 0.1).holds);
    }

    #[test]
    fn single_task_matches_scalar_search() {
        for eta in [1.0, 10.0, 100.0, 1000.0] {
            let inst = instance(&[(1000.0, 797.5)]);
            let prob = build_p3(&inst, &Schedule::identity(1), eta).unwrap();
            let (d, c) = (1000.0, prob.weight_c());
            let f = |x: f64| d * x + c * d * channel::psi(x, 1e6).unwrap();
            let x_star = golden(f, prob.xi_lower(), prob.xi_upper());
            let sol = solve_p3(&prob, &SolverOptions::default()).unwrap();
            assert!(sol.converged);
            let oracle = f(x_star) + prob.exec_seconds()[0];
            assert!(rel(sol.objective_value, oracle) < 1e-9, "eta {eta}");
            assert!(
                rel(sol.xi_star[0], x_star) < 1e-5,
                "eta {eta}: {} vs {x_star}",
                sol.xi_star[0]
            );
        }
    }

    #[test]
    fn solution_invariants() {
        let inst = instance(&[
            (1500.0, 300.0),
            (700.0, 1200.0),
            (1900.0, 800.0),
            (400.0, 100.0),
        ]);
        let sigma = Schedule::new(vec![1, 2, 0, 3]).unwrap();
        for eta in [1.0, 10.0, 100.0] {
            let prob = build_p3(&inst, &sigma, eta).unwrap();
            let sol = solve_p3(&prob, &SolverOptions::default()).unwrap();
            assert!(sol.converged);
            assert!(sol.kkt_residual < 1e-6, "kkt {}", sol.kkt_residual);
            assert!(check_monotonicity(&sol, 0.1).holds);
            for w in sol.objective_trace.windows(2) {
                assert!(w[1] <= w[0]);
            }
            // Tightness: P3 value equals the delay-module objective of the powers.
            let p = sol.power_allocation(&prob).unwrap();
            let direct = delay::objective(&inst, &sigma, &p, eta).unwrap();
            assert!(rel(sol.objective_value, direct.weighted) < 1e-7);
            assert!(rel(sol.makespan_s(), direct.delay_s) < 1e-7);
            // Multiplier closed form reproduces the primal solution.
            let dual_xi = xi_from_multipliers(&prob, &sol.duals).unwrap();
            for (a, b) in dual_xi.iter().zip(&sol.xi_star) {
                assert!(rel(*a, *b) < 1e-3, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn smoothed_method_agrees() {
        let inst = instance(&[(1500.0, 300.0), (700.0, 1200.0), (1900.0, 800.0)]);
        let sigma = Schedule::new(vec![1, 2, 0]).unwrap();
        for eta in [10.0, 100.0] {
            let prob = build_p3(&inst, &sigma, eta).unwrap();
            let exact = solve_p3(&prob, &SolverOptions::default()).unwrap();
            let opts = SolverOptions {
                method: P3Method::SmoothedGradient,
                ..Default::default()
            };
            let smooth = solve_p3(&prob, &opts).unwrap();
            assert!(smooth.objective_value >= exact.objective_value * (1.0 - 1e-9));
            assert!(
                rel(smooth.objective_value, exact.objective_value) < 1e-4,
                "{} vs {}",
                smooth.objective_value,
                exact.objective_value
            );
        }
    }

    #[test]
    fn iteration_cap_reports_unconverged() {
        let inst = instance(&[(1500.0, 300.0), (700.0, 1200.0)]);
        let prob = build_p3(&inst, &Schedule::identity(2), 10.0).unwrap();
        let opts = SolverOptions {
            max_iterations: 3,
            ..Default::default()
        };
        let sol = solve_p3(&prob, &opts).unwrap();
        assert!(!sol.converged);
        assert!(sol.objective_value.is_finite());
        assert!(solve_p3(
            &prob,
            &SolverOptions {
                tol: 0.0,
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn upload_energy_is_not_convex_in_power() {
        // Energy per task d p / R(p) is concave in p, which is why the solver
        // works in rate inverses instead.
        let ch = ChannelConfig::reference();
        let e = |p: f64| 1000.0 * p / channel::rate(p, &ch).unwrap();
        let witness = (1..100).any(|k| {
            let (a, b) = (k as f64 * 1e-3, 0.1);
            e(0.5 * (a + b)) > 0.5 * (e(a) + e(b))
        });
        assert!(witness);
    }

    #[test]
    fn deterministic() {
        let inst = instance(&[(1500.0, 300.0), (700.0, 1200.0), (1900.0, 800.0)]);
        let prob = build_p3(&inst, &Schedule::new(vec![2, 1, 0]).unwrap(), 30.0).unwrap();
        let a = solve_p3(&prob, &SolverOptions::default()).unwrap();
        let b = solve_p3(&prob, &SolverOptions::default()).unwrap();
        assert_eq!(a, b);
        let _: Vec<f64> = a.xi_star;
    }
}
