use pumc::experiment::{
    self, run_single, sweep_eps, sweep_partitions, write_partition_csv, write_run_csv,
    write_solution_fields, EpsRange, ExperimentConfig, TableOptions,
};

fn small() -> ExperimentConfig {
    ExperimentConfig {
        n_side: 10,
        eps: 3.0,
        t_final: 0.05,
        ..Default::default()
    }
}

fn rows(bytes: &[u8]) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(bytes).records().map(Result::unwrap).collect()
}

const NO_TIMING: TableOptions = TableOptions { omit_timing: true };

#[test]
fn degenerate_range_gives_one_row_and_the_argmin() {
    let range = EpsRange::new(3.0, 3.0, 0.5).unwrap();
    assert_eq!(range.values(), vec![3.0]);
    let sweep = sweep_eps(&small(), &range, 1).unwrap();
    let mut buf = Vec::new();
    sweep.write_csv(NO_TIMING, &mut buf).unwrap();
    let r = rows(&buf);
    assert_eq!(r.len(), 2);
    assert_eq!(r[0].get(r[0].len() - 1), Some("ok"));
    assert_eq!(r[1].get(r[1].len() - 1), Some("argmin"));
}

#[test]
fn sweep_keeps_failures_and_picks_the_smallest_error() {
    let range = EpsRange::new(2.0, 4.0, 1.0).unwrap();
    let sweep = sweep_eps(&small(), &range, 2).unwrap();
    assert_eq!(sweep.entries.len(), 3);
    let best = sweep.best_record().mae;
    for e in &sweep.entries {
        if let Some(m) = e.mae() {
            assert!(best <= m);
        }
    }
    assert!(EpsRange::new(2.0, 1.0, 0.1).is_err());
    assert!(EpsRange::new(1.0, 2.0, 0.0).is_err());
}

#[test]
fn solution_fields_are_consistent_with_the_error_summary() {
    let out = run_single(&small()).unwrap();
    let mut buf = Vec::new();
    write_solution_fields(&out.nodes, &out.run, &mut buf).unwrap();
    let r = rows(&buf);
    assert_eq!(r.len(), 100);
    let mut max_err = 0.0f64;
    for (i, row) in r.iter().enumerate() {
        let err: f64 = row[4].parse().unwrap();
        max_err = max_err.max(err);
        if out.nodes.is_boundary(i) {
            assert!(err <= 1e-12);
        }
    }
    assert_eq!(max_err, out.record.mae);
}

#[test]
fn starved_partitions_are_reported_as_configuration_errors() {
    let cfg = ExperimentConfig { n_side: 4, ..small() };
    let entries = sweep_partitions(&cfg, &[1, 12], 1).unwrap();
    assert_eq!(entries[0].status(), "ok");
    assert_eq!(entries[1].status(), "config");
    let mut buf = Vec::new();
    write_partition_csv(&entries, NO_TIMING, &mut buf).unwrap();
    assert_eq!(rows(&buf).len(), 2);
}

#[test]
fn output_without_timing_is_byte_identical() {
    let table = || {
        let rec = run_single(&small()).unwrap().record;
        let mut buf = Vec::new();
        write_run_csv(&[rec], NO_TIMING, &mut buf).unwrap();
        buf
    };
    assert_eq!(table(), table());
}

#[test]
fn invalid_configurations_are_rejected() {
    let bad = [
        ExperimentConfig { theta: 1.5, ..small() },
        ExperimentConfig { dt: 0.0, ..small() },
        ExperimentConfig { eps: -1.0, ..small() },
        ExperimentConfig { n_side: 1, ..small() },
        ExperimentConfig { m_side: 0, ..small() },
    ];
    for cfg in bad {
        let e = experiment::run_single(&cfg).err().expect("should fail");
        assert!(e.is_config(), "{cfg:?}: {e}");
    }
}
