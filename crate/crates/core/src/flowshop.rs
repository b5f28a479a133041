//! Makespan-optimal upload order for fixed powers.
//!
//! Uploading is machine 1 and server execution is machine 2 of a two-machine
//! permutation flow shop without preemption, so Johnson's rule is optimal:
//! tasks whose upload is shorter than their execution go first by ascending
//! upload time, the rest follow by descending execution time.

use alloc::vec::Vec;

use crate::delay::{Instance, PowerAllocation, Schedule};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JohnsonPartition {
    /// Tasks with `tx < exec`.
    pub set_f: Vec<usize>,
    /// Tasks with `tx >= exec`.
    pub set_g: Vec<usize>,
}

/// Splits task indices by `tx < exec`; ties go to `set_g`. Both sets come back
/// in ascending index order.
pub fn partition_times(tx: &[f64], exec: &[f64]) -> JohnsonPartition {
    let (set_f, set_g) = (0..tx.len()).partition(|&i| tx[i] < exec[i]);
    JohnsonPartition { set_f, set_g }
}

/// Johnson order from per-task (upload, execution) times. Equal keys keep
/// ascending task index.
pub fn johnson_order(tx: &[f64], exec: &[f64]) -> Vec<usize> {
    let JohnsonPartition {
        mut set_f,
        mut set_g,
    } = partition_times(tx, exec);
    // Stable sorts over index-ordered sets.
    set_f.sort_by(|&a, &b| tx[a].total_cmp(&tx[b]));
    set_g.sort_by(|&a, &b| exec[b].total_cmp(&exec[a]));
    set_f.extend(set_g);
    set_f
}

pub fn partition(instance: &Instance, p: &PowerAllocation) -> Result<JohnsonPartition> {
    Ok(partition_times(
        &instance.tx_times(p)?,
        &instance.exec_times(),
    ))
}

pub fn johnson_schedule(instance: &Instance, p: &PowerAllocation) -> Result<Schedule> {
    let order = johnson_order(&instance.tx_times(p)?, &instance.exec_times());
    Ok(Schedule::new(order).expect("johnson order is a permutation"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::{makespan_from_times, timeline_from_times};
    use crate::oracle::brute_force_times;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn partition_boundary_goes_to_g() {
        let part = partition_times(&[1.0, 2.0, 4.0], &[3.0, 2.0, 1.0]);
        assert_eq!(part.set_f, vec![0]);
        assert_eq!(part.set_g, vec![1, 2]);

        let all_f = partition_times(&[1.0, 1.0], &[2.0, 3.0]);
        assert!(all_f.set_g.is_empty());
        let all_g = partition_times(&[2.0, 3.0], &[2.0, 3.0]);
        assert!(all_g.set_f.is_empty());
    }

    #[test]
    fn three_task_example() {
        let (tx, exec) = ([1.0, 2.0, 4.0], [3.0, 2.0, 1.0]);
        let order = johnson_order(&tx, &exec);
        assert_eq!(order, vec![0, 1, 2]);
        let tl = timeline_from_times(&order, &tx, &exec);
        assert_eq!(tl.completion_s, vec![4.0, 6.0, 8.0]);
        let brute = brute_force_times(&tx, &exec).unwrap();
        assert_eq!(brute.0, 8.0);
    }

    #[test]
    fn single_task() {
        assert_eq!(johnson_order(&[5.0], &[1.0]), vec![0]);
    }

    #[test]
    fn sorting_keys() {
        // F by ascending tx, G by descending exec.
        let tx = [3.0, 1.0, 5.0, 6.0, 2.0];
        let exec = [4.0, 9.0, 2.0, 3.0, 2.0];
        assert_eq!(johnson_order(&tx, &exec), vec![1, 0, 3, 2, 4]);
    }

    #[test]
    fn large_instance_is_fast() {
        let n = 100_000;
        let tx: Vec<f64> = (0..n as u64)
            .map(|i| ((i * 7919) % 1000) as f64 + 1.0)
            .collect();
        let exec: Vec<f64> = (0..n as u64)
            .map(|i| ((i * 104_729) % 997) as f64 + 1.0)
            .collect();
        let start = std::time::Instant::now();
        let order = johnson_order(&tx, &exec);
        assert!(start.elapsed().as_secs_f64() < 2.0);
        assert!(Schedule::new(order).is_ok());
    }

    proptest! {
        #[test]
        fn optimal_against_enumeration(rows in proptest::collection::vec((0.01f64..10.0, 0.01f64..10.0), 1..=7)) {
            let tx: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let exec: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let order = johnson_order(&tx, &exec);
            prop_assert!(Schedule::new(order.clone()).is_ok());
            let ours = makespan_from_times(&order, &tx, &exec);
            let (best, _) = brute_force_times(&tx, &exec).unwrap();
            prop_assert!((ours - best).abs() <= 1e-12 * best);
        }

        #[test]
        fn tied_keys_do_not_change_makespan(
            rows in proptest::collection::vec((1u8..4, 1u8..4), 2..=8),
            swap in any::<proptest::sample::Index>(),
        ) {
            // Small integer times force ties; relabelling tasks reorders the
            // tie-breaks but not the makespan.
            let tx: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
            let exec: Vec<f64> = rows.iter().map(|r| r.1 as f64).collect();
            let base = makespan_from_times(&johnson_order(&tx, &exec), &tx, &exec);
            let k = swap.index(rows.len() - 1);
            let (mut tx2, mut exec2) = (tx.clone(), exec.clone());
            tx2.swap(k, k + 1);
            exec2.swap(k, k + 1);
            let other = makespan_from_times(&johnson_order(&tx2, &exec2), &tx2, &exec2);
            prop_assert_eq!(base, other);
            prop_assert_eq!(johnson_order(&tx, &exec), johnson_order(&tx, &exec));
        }
    }
}
