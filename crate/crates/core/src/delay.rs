//! Upload/execute timeline of a schedule, transmit energy, and the weighted
//! delay-plus-energy objective.
//!
//! Position `j` of a schedule is the `j`-th task to be uploaded. Its input is
//! ready at the server once every upload up to and including `j` has finished;
//! the server starts it when it is both ready and the previous task has
//! completed.

use alloc::vec::Vec;

use crate::channel::{self, ChannelConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskSpec {
    input_bits: f64,
    workload_cycles_per_bit: f64,
}

impl TaskSpec {
    /// Both the input size and the workload must be strictly positive.
    pub fn new(input_bits: f64, workload_cycles_per_bit: f64) -> Result<Self> {
        if !(input_bits > 0.0) || !input_bits.is_finite() {
            return Err(Error::InvalidParameter {
                what: "input_bits",
                value: input_bits,
            });
        }
        if !(workload_cycles_per_bit > 0.0) || !workload_cycles_per_bit.is_finite() {
            return Err(Error::InvalidParameter {
                what: "workload_cycles_per_bit",
                value: workload_cycles_per_bit,
            });
        }
        Ok(Self {
            input_bits,
            workload_cycles_per_bit,
        })
    }

    pub fn input_bits(&self) -> f64 {
        self.input_bits
    }

    pub fn workload_cycles_per_bit(&self) -> f64 {
        self.workload_cycles_per_bit
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServerConfig {
    cpu_hz: f64,
}

impl ServerConfig {
    pub fn new(cpu_hz: f64) -> Result<Self> {
        if !(cpu_hz > 0.0) || !cpu_hz.is_finite() {
            return Err(Error::InvalidParameter {
                what: "cpu_hz",
                value: cpu_hz,
            });
        }
        Ok(Self { cpu_hz })
    }

    pub fn cpu_hz(&self) -> f64 {
        self.cpu_hz
    }
}

/// Tasks plus the system they run on. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    tasks: Vec<TaskSpec>,
    channel: ChannelConfig,
    server: ServerConfig,
}

impl Instance {
    pub fn new(tasks: Vec<TaskSpec>, channel: ChannelConfig, server: ServerConfig) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::InvalidParameter {
                what: "task count",
                value: 0.0,
            });
        }
        Ok(Self {
            tasks,
            channel,
            server,
        })
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn channel(&self) -> &ChannelConfig {
        &self.channel
    }

    pub fn server(&self) -> &ServerConfig {
        &self.server
    }

    /// Server execution time of every task, in task-index order.
    pub fn exec_times(&self) -> Vec<f64> {
        self.tasks
            .iter()
            .map(|t| exec_time(t, &self.server))
            .collect()
    }

    /// Upload time of every task under `p`, in task-index order.
    pub fn tx_times(&self, p: &PowerAllocation) -> Result<Vec<f64>> {
        self.check_len(p.len())?;
        self.tasks
            .iter()
            .zip(p.powers())
            .enumerate()
            .map(|(i, (t, &pi))| match tx_time(t, pi, &self.channel)? {
                d if d.is_finite() => Ok(d),
                _ => Err(Error::InfiniteDuration { task: i }),
            })
            .collect()
    }

    fn check_len(&self, found: usize) -> Result<()> {
        if found == self.len() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.len(),
                found,
            })
        }
    }
}

/// Upload order: a permutation of the zero-based task indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schedule(Vec<usize>);

impl Schedule {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut seen = alloc::vec![false; order.len()];
        for &i in &order {
            match seen.get_mut(i) {
                Some(s) if !*s => *s = true,
                _ => return Err(Error::InvalidSchedule),
            }
        }
        Ok(Self(order))
    }

    /// `[0, 1, .., n-1]`.
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn order(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

/// Per-task transmit powers in watts, indexed by task.
///
/// Zero is admitted (the feasible box is `[0, p_max]`) but any timeline
/// computed from a zero power fails with [`Error::InfiniteDuration`].
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation(Vec<f64>);

impl PowerAllocation {
    pub fn new(powers: Vec<f64>, ch: &ChannelConfig) -> Result<Self> {
        let cap = ch.p_max_w() * (1.0 + 1e-12);
        for &p in &powers {
            if !(p >= 0.0 && p <= cap) {
                return Err(Error::InvalidParameter {
                    what: "transmit power",
                    value: p,
                });
            }
        }
        Ok(Self(powers))
    }

    /// Every task at peak power.
    pub fn full(n: usize, ch: &ChannelConfig) -> Self {
        Self(alloc::vec![ch.p_max_w(); n])
    }

    pub fn powers(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `xi_i = 1 / rate(p_i)`; infinite for a zero power.
    pub fn rate_inverses(&self, ch: &ChannelConfig) -> Vec<f64> {
        self.0
            .iter()
            .map(|&p| 1.0 / channel::rate(p, ch).expect("validated power"))
            .collect()
    }
}

/// Upload time `d / rate(p)`. A zero power yields `f64::INFINITY`.
pub fn tx_time(task: &TaskSpec, p: f64, ch: &ChannelConfig) -> Result<f64> {
    let r = channel::rate(p, ch)?;
    if r == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(task.input_bits / r)
}

pub fn exec_time(task: &TaskSpec, srv: &ServerConfig) -> f64 {
    task.input_bits * task.workload_cycles_per_bit / srv.cpu_hz
}

#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    /// Time the `j`-th uploaded input is fully at the server.
    pub ready_s: Vec<f64>,
    /// Time the `j`-th task finishes executing.
    pub completion_s: Vec<f64>,
    pub makespan_s: f64,
}

/// Forward recursion over positions, from per-task times in task-index order.
pub fn timeline_from_times(order: &[usize], tx: &[f64], exec: &[f64]) -> Timeline {
    let mut ready_s = Vec::with_capacity(order.len());
    let mut completion_s = Vec::with_capacity(order.len());
    let mut ready = 0.0;
    let mut done = 0.0;
    for &task in order {
        ready += tx[task];
        done = if ready > done { ready } else { done } + exec[task];
        ready_s.push(ready);
        completion_s.push(done);
    }
    Timeline {
        ready_s,
        completion_s,
        makespan_s: done,
    }
}

/// Makespan by the forward recursion.
pub fn makespan_from_times(order: &[usize], tx: &[f64], exec: &[f64]) -> f64 {
    let mut ready = 0.0;
    let mut done = 0.0;
    for &task in order {
        ready += tx[task];
        done = f64::max(ready, done) + exec[task];
    }
    done
}

/// Makespan unrolled: `max_i (sum_{j<=i} tx_j + sum_{k>=i} exec_k)` over positions.
pub fn makespan_closed_form_from_times(order: &[usize], tx: &[f64], exec: &[f64]) -> f64 {
    let suffix = suffix_sums(order.iter().map(|&t| exec[t]));
    let mut prefix = 0.0;
    let mut best = f64::NEG_INFINITY;
    for (i, &task) in order.iter().enumerate() {
        prefix += tx[task];
        best = best.max(prefix + suffix[i]);
    }
    best
}

/// `out[i] = sum_{k>=i} values[k]`, accumulated from the back.
pub(crate) fn suffix_sums(
    values: impl DoubleEndedIterator<Item = f64> + ExactSizeIterator,
) -> Vec<f64> {
    let mut out = alloc::vec![0.0; values.len()];
    let mut acc = 0.0;
    for (slot, v) in out.iter_mut().rev().zip(values.rev()) {
        acc += v;
        *slot = acc;
    }
    out
}

fn check_schedule(instance: &Instance, sigma: &Schedule) -> Result<()> {
    instance.check_len(sigma.len())
}

pub fn timeline(instance: &Instance, sigma: &Schedule, p: &PowerAllocation) -> Result<Timeline> {
    check_schedule(instance, sigma)?;
    let tx = instance.tx_times(p)?;
    Ok(timeline_from_times(
        sigma.order(),
        &tx,
        &instance.exec_times(),
    ))
}

pub fn makespan(instance: &Instance, sigma: &Schedule, p: &PowerAllocation) -> Result<f64> {
    check_schedule(instance, sigma)?;
    let tx = instance.tx_times(p)?;
    Ok(makespan_from_times(
        sigma.order(),
        &tx,
        &instance.exec_times(),
    ))
}

pub fn makespan_closed_form(
    instance: &Instance,
    sigma: &Schedule,
    p: &PowerAllocation,
) -> Result<f64> {
    check_schedule(instance, sigma)?;
    let tx = instance.tx_times(p)?;
    Ok(makespan_closed_form_from_times(
        sigma.order(),
        &tx,
        &instance.exec_times(),
    ))
}

/// Total device energy `sum_i p_i d_i / rate(p_i)`, accumulated in task-index
/// order so it does not depend on the schedule.
pub fn transmit_energy(instance: &Instance, p: &PowerAllocation) -> Result<f64> {
    let tx = instance.tx_times(p)?;
    Ok(p.powers().iter().zip(&tx).map(|(pi, ti)| pi * ti).sum())
}

/// `weighted = delay_s + eta * energy_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub delay_s: f64,
    pub energy_j: f64,
    pub eta: f64,
    pub weighted: f64,
}

impl ObjectiveValue {
    pub fn new(delay_s: f64, energy_j: f64, eta: f64) -> Self {
        Self {
            delay_s,
            energy_j,
            eta,
            weighted: delay_s + eta * energy_j,
        }
    }
}

pub fn objective(
    instance: &Instance,
    sigma: &Schedule,
    p: &PowerAllocation,
    eta: f64,
) -> Result<ObjectiveValue> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::InvalidParameter {
            what: "eta",
            value: eta,
        });
    }
    let delay = makespan(instance, sigma, p)?;
    let energy = transmit_energy(instance, p)?;
    Ok(ObjectiveValue::new(delay, energy, eta))
}
