use offload_harness::experiment::{
    self, log_sweep, read_csv, Fig2Params, Fig3Params, Fig4Params, CSV_COLUMNS,
};
use offload_harness::Config;

fn small_fig2(cfg: &Config) -> Fig2Params {
    Fig2Params {
        n_values: vec![3, 6],
        replicates: 7,
        ..Fig2Params::defaults(cfg)
    }
}

#[test]
fn eta_sweep_hits_round_values() {
    let sweep = experiment::default_eta_sweep();
    assert_eq!(sweep.len(), 25);
    assert_eq!(sweep[0], 0.01);
    assert_eq!(sweep[16], 100.0);
    assert_eq!(sweep[24], 1e4);
    assert_eq!(log_sweep(0.0, 1.0, 1), vec![1.0]);
}

#[test]
fn csv_round_trip_recomputes_means_exactly() {
    let cfg = Config::default();
    let res = experiment::run_fig2(&cfg, &small_fig2(&cfg), 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (csv_path, meta_path) = res.write_to_dir(dir.path()).unwrap();

    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
    let records = read_csv(&csv_path).unwrap();
    assert_eq!(records.len(), res.rows.len());
    for (rec, row) in records.iter().zip(&res.rows) {
        assert_eq!(&rec.row, row);
        assert_eq!(rec.emitted_mean, rec.row.mean());
        assert_eq!(rec.replicates, 7);
        assert_eq!(rec.experiment, "fig2");
    }

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(meta_path).unwrap()).unwrap();
    assert_eq!(meta["seed"], 5);
    assert_eq!(meta["config"]["n_tasks"], 20);
    assert!(meta["version"].as_str().unwrap().starts_with('v'));
}

#[test]
fn replicates_are_prefix_stable() {
    let cfg = Config::default();
    let few = experiment::run_fig2(&cfg, &small_fig2(&cfg), 5).unwrap();
    let more = Fig2Params {
        replicates: 12,
        ..small_fig2(&cfg)
    };
    let many = experiment::run_fig2(&cfg, &more, 5).unwrap();
    for (a, b) in few.rows.iter().zip(&many.rows) {
        assert_eq!(a.values[..], b.values[..7]);
    }
}

#[test]
fn fig3_and_fig4_shapes() {
    let mut cfg = Config::default();
    cfg.n_tasks = 6;
    let fig3 = Fig3Params {
        eta_values: vec![0.0, 10.0],
        replicates: 3,
    };
    let res = experiment::run_fig3(&cfg, &fig3, 2).unwrap();
    assert_eq!(res.rows.len(), 2 * 3);
    // At eta = 0 both arms run at peak power, so the gap is the scheduling gain.
    for v in &res.row("default", 0.0, "gap").unwrap().values {
        assert!(*v >= -1e-15);
    }

    let fig4 = Fig4Params {
        eta_values: vec![0.01, 100.0],
        f_ser_values: vec![1e9],
        replicates: 3,
    };
    let res = experiment::run_fig4(&cfg, &fig4, 2).unwrap();
    assert_eq!(res.rows.len(), 2 * 4);
    let sc = experiment::f_ser_scenario(1e9);
    let lo = res.row(&sc, 0.01, "energy_j").unwrap().mean();
    let hi = res.row(&sc, 100.0, "energy_j").unwrap().mean();
    assert!(hi < lo);
    assert_eq!(res.meta.unconverged_power_solves, 0);
}

#[test]
fn zero_replicates_is_a_config_error() {
    let cfg = Config::default();
    let params = Fig2Params {
        replicates: 0,
        ..Fig2Params::defaults(&cfg)
    };
    assert_eq!(
        experiment::run_fig2(&cfg, &params, 1)
            .unwrap_err()
            .exit_code(),
        2
    );
}
