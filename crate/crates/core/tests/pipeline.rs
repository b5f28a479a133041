//! Cross-module properties through the public API.

use offload_core::channel::{self, phi, xi_lower_bound};
use offload_core::oracle::{self, GridOptions, PowerOracle};
use offload_core::power::check_monotonicity;
use offload_core::*;
use proptest::prelude::*;

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

fn task_rows(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((1.0f64..2000.0, 1.0f64..1595.0), n)
}

fn powers(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(1e-4f64..=0.1, n)
}

#[test]
fn reference_channel_constants() {
    let ch = ChannelConfig::reference();
    assert!((ch.gain() - 1e-12).abs() < 1e-24);
    let r = channel::rate(0.1, &ch).unwrap();
    assert!((r / 4.707e6 - 1.0).abs() < 1e-3, "{r}");
    assert!((xi_lower_bound(&ch) * r - 1.0).abs() < 1e-15);
}

#[test]
fn scalar_problem_follows_phi() {
    let inst = instance(&[(1000.0, 797.5)]);
    let sigma = Schedule::identity(1);
    for eta in [1.0, 10.0, 100.0, 1000.0] {
        let prob = build_p3(&inst, &sigma, eta).unwrap();
        let sol = solve_p3(&prob, &SolverOptions::default()).unwrap();
        // One path constraint carries the whole unit multiplier.
        let expected = phi(1.0, inst.channel(), prob.weight_c())
            .unwrap()
            .clip(prob.xi_lower(), prob.xi_upper());
        assert!((sol.xi_star[0] / expected - 1.0).abs() < 1e-5, "eta {eta}");
    }
}

#[test]
fn scalar_grid_within_one_cell() {
    let inst = instance(&[(1000.0, 797.5)]);
    let sigma = Schedule::identity(1);
    let ch = *inst.channel();
    let points = 200;
    let cell = 50f64.powf(1.0 / (points - 1) as f64);
    for eta in [1.0, 10.0, 100.0] {
        let prob = build_p3(&inst, &sigma, eta).unwrap();
        let exact = phi(1.0, &ch, prob.weight_c())
            .unwrap()
            .clip(prob.xi_lower(), prob.xi_upper());
        let grid = oracle::grid_power_search(&inst, &sigma, eta, points).unwrap();
        let xi = channel::RateInverse::from_power(grid.best_p.powers()[0], &ch)
            .unwrap()
            .get();
        let ratio = xi / exact;
        assert!(
            ratio <= cell * (1.0 + 1e-9) && ratio >= 1.0 / cell / (1.0 + 1e-9),
            "eta {eta}: {ratio}"
        );
    }
}

#[test]
fn grid_refinement_is_consistent() {
    let inst = instance(&[(1500.0, 300.0), (700.0, 1200.0)]);
    let sigma = Schedule::new(vec![1, 0]).unwrap();
    let coarse = oracle::grid_power_search(&inst, &sigma, 10.0, 100).unwrap();
    let fine = oracle::grid_power_search(&inst, &sigma, 10.0, 1000).unwrap();
    assert!(fine.best_value <= coarse.best_value * (1.0 + 1e-12));
    // A cell spans a factor 50^(1/99) in each rate inverse; the objective
    // cannot move by more than that factor times its own value.
    let cell = 50f64.powf(1.0 / 99.0) - 1.0;
    assert!(coarse.best_value - fine.best_value <= cell * coarse.best_value);
    let prob = build_p3(&inst, &sigma, 10.0).unwrap();
    let exact = solve_p3(&prob, &SolverOptions::default()).unwrap();
    assert!(exact.objective_value <= fine.best_value * (1.0 + 1e-9));
}

#[test]
fn joint_enumeration_bounds_alternation() {
    let inst = instance(&[(1500.0, 300.0), (700.0, 1200.0), (400.0, 900.0)]);
    let grid = PowerOracle::Grid(GridOptions {
        points_per_dim: 100,
        upper_factor: 50.0,
        refine_levels: 1,
    });
    let joint = oracle::joint_brute_force(&inst, 10.0, &grid).unwrap();
    let ours = alternate(&inst, 10.0, &AltMinConfig::default()).unwrap();
    let value = ours.final_objective().weighted;
    // The grid can only overestimate the true optimum, so allow its resolution.
    assert!(
        joint.best_value <= value * (1.0 + 1e-4),
        "{} vs {value}",
        joint.best_value
    );
    let solver = PowerOracle::Solver(SolverOptions::default());
    let exact = oracle::joint_brute_force(&inst, 10.0, &solver).unwrap();
    assert!(exact.best_value <= value * (1.0 + 1e-12));
    assert!(exact.best_value <= joint.best_value * (1.0 + 1e-9));
}

#[test]
fn oracle_results_are_reproducible() {
    let inst = instance(&[(1500.0, 300.0), (700.0, 1200.0), (400.0, 900.0)]);
    let solver = PowerOracle::Solver(SolverOptions::default());
    let a = oracle::joint_brute_force(&inst, 100.0, &solver).unwrap();
    let b = oracle::joint_brute_force(&inst, 100.0, &solver).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn johnson_matches_enumeration_at_eight(rows in task_rows(8..=8), p in powers(8)) {
        let inst = instance(&rows);
        let p = PowerAllocation::new(p, inst.channel()).unwrap();
        let ours = delay::makespan(&inst, &johnson_schedule(&inst, &p).unwrap(), &p).unwrap();
        let best = oracle::brute_force_schedule(&inst, &p).unwrap();
        prop_assert!((ours - best.best_value).abs() <= 1e-12 * best.best_value);
        prop_assert_eq!(best.evaluations, 40_320);
    }

    #[test]
    fn enumeration_beats_spot_checks(
        rows in task_rows(2..=6),
        keys in proptest::collection::vec(proptest::collection::vec(any::<u32>(), 6), 10),
    ) {
        let n = rows.len();
        let inst = instance(&rows);
        let p = PowerAllocation::full(n, inst.channel());
        let best = oracle::brute_force_schedule(&inst, &p).unwrap();
        for k in &keys {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&i| k[i]);
            let m = delay::makespan(&inst, &Schedule::new(order).unwrap(), &p).unwrap();
            prop_assert!(best.best_value <= m);
        }
    }

    #[test]
    fn power_solution_is_monotone_and_tight(rows in task_rows(1..=6), eta in 0.1f64..1000.0) {
        let inst = instance(&rows);
        let p = PowerAllocation::full(inst.len(), inst.channel());
        let sigma = johnson_schedule(&inst, &p).unwrap();
        let prob = build_p3(&inst, &sigma, eta).unwrap();
        let sol = solve_p3(&prob, &SolverOptions::default()).unwrap();
        prop_assert!(sol.converged);
        prop_assert!(check_monotonicity(&sol, 0.1).holds);
        let alloc = sol.power_allocation(&prob).unwrap();
        let direct = delay::objective(&inst, &sigma, &alloc, eta).unwrap().weighted;
        prop_assert!((sol.objective_value - direct).abs() <= 1e-7 * direct);
        // Never worse than peak power, up to the solver tolerance: when the
        // optimum sits on the box edge the barrier stops just inside it.
        let full = delay::objective(&inst, &sigma, &p, eta).unwrap().weighted;
        prop_assert!(sol.objective_value <= full * (1.0 + SolverOptions::default().tol));
    }

    #[test]
    fn alternation_descends(rows in task_rows(2..=12), eta in 0.0f64..200.0) {
        let inst = instance(&rows);
        let report = alternate(&inst, eta, &AltMinConfig::default()).unwrap();
        for w in report.objective_trace.windows(2) {
            prop_assert!(w[1].weighted <= w[0].weighted + 1e-9);
        }
        prop_assert!(report.iterations_used >= 1 && report.iterations_used <= 50);
        let best = report.final_objective();
        let direct = delay::objective(&inst, &report.final_sigma, &report.final_p, eta).unwrap();
        prop_assert_eq!(best.weighted, direct.weighted);
    }
}
