//! Seeded instance generation and the random-order baseline.
//!
//! All randomness comes from Xoshiro256++ seeded through SplitMix64
//! (`rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64`). Replicate streams are
//! keyed by [`derived_seed`] so adding replicates never shifts earlier ones.

use offload_core::{ChannelConfig, Instance, Schedule, ServerConfig, TaskSpec};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::config::Config;
use crate::error::{HarnessError, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
/// Keeps baseline-permutation streams apart from instance streams.
const BASELINE_SALT: u64 = 0xB5AD_4ECE_DA1C_E2A9;

/// SplitMix64 output function.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `index` under `master`:
/// `mix64(master ^ mix64((index + 1) * GOLDEN_GAMMA))`.
pub fn derived_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn rng_from_seed(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub n_tasks: usize,
    pub d_avg_bits: f64,
    pub c_avg_cycles_per_bit: f64,
    pub seed: u64,
    pub channel: ChannelConfig,
    pub server: ServerConfig,
}

impl InstanceSpec {
    pub fn from_config(cfg: &Config, seed: u64) -> Result<Self> {
        Ok(Self {
            n_tasks: cfg.n_tasks,
            d_avg_bits: cfg.d_avg_bits,
            c_avg_cycles_per_bit: cfg.c_avg_cycles_per_bit,
            seed,
            channel: cfg.channel()?,
            server: cfg.server()?,
        })
    }
}

/// Uniform draw on `(0, 2 * avg]` from the top 53 bits of one output.
fn draw(rng: &mut Xoshiro256PlusPlus, avg: f64) -> f64 {
    let u: f64 = rng.random();
    2.0 * avg * (1.0 - u)
}

/// Draws `d_i` then `c_i` for each task in turn, so the first `k` tasks of a
/// larger instance equal the `k`-task instance with the same seed.
pub fn generate_instance(spec: &InstanceSpec) -> Result<Instance> {
    if spec.n_tasks == 0 {
        return Err(HarnessError::Config("n_tasks must be at least 1".into()));
    }
    let mut rng = rng_from_seed(spec.seed);
    let mut tasks = Vec::with_capacity(spec.n_tasks);
    for _ in 0..spec.n_tasks {
        let d = draw(&mut rng, spec.d_avg_bits);
        let c = draw(&mut rng, spec.c_avg_cycles_per_bit);
        tasks.push(TaskSpec::new(d, c)?);
    }
    Ok(Instance::new(tasks, spec.channel, spec.server)?)
}

/// Uniformly random upload order for replicate seed `seed` and size `n`.
pub fn random_schedule(seed: u64, n: usize) -> Schedule {
    let mut rng = rng_from_seed(derived_seed(seed ^ BASELINE_SALT, n as u64));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    Schedule::new(order).expect("shuffled identity is a permutation")
}

/// FNV-1a over the bit patterns of every task parameter and the channel and
/// server settings. Used to confirm paired arms saw the same instance.
pub fn instance_hash(instance: &Instance) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    let mut feed = |x: f64| {
        for b in x.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01B3);
        }
    };
    for t in instance.tasks() {
        feed(t.input_bits());
        feed(t.workload_cycles_per_bit());
    }
    let ch = instance.channel();
    feed(ch.gain());
    feed(ch.noise_power_w());
    feed(ch.bandwidth_hz());
    feed(ch.p_max_w());
    feed(instance.server().cpu_hz());
    h
}
