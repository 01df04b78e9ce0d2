//! End-to-end CLI tests: exit codes and file outputs, exercised through the
//! same entry point the binary uses.

use std::path::{Path, PathBuf};

use acrds::experiments::cli::run;
use acrds::experiments::{
    concentration_from_csv, grid_from_csv, report_from_csv, ReplicationTable,
};

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("acrds-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn invoke(args: &[&str]) -> i32 {
    run(std::iter::once("acrds").chain(args.iter().copied()))
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn generate_emits_the_complete_graph() {
    let dir = workdir("generate");
    let out = dir.join("k4.txt");
    let assignment = dir.join("blocks.txt");
    let code = invoke(&[
        "generate",
        "--size",
        "4",
        "--in-prob",
        "1.0",
        "--out",
        out.to_str().unwrap(),
        "--assignment-out",
        assignment.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let edges = read(&out);
    assert_eq!(edges.lines().count(), 6);
    assert_eq!(read(&assignment), "0\n0\n0\n0\n");

    // Same seed, same bytes; a different seed changes a random graph.
    let a = dir.join("a.txt");
    let b = dir.join("b.txt");
    for (path, seed) in [(&a, "5"), (&b, "5")] {
        let code = invoke(&[
            "generate",
            "--blocks",
            "2",
            "--size",
            "20",
            "--in-prob",
            "0.5",
            "--out-prob",
            "0.1",
            "--seed",
            seed,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    assert_eq!(read(&a), read(&b));
}

#[test]
fn generate_rejects_bad_probabilities() {
    assert_eq!(invoke(&["generate", "--size", "4", "--in-prob", "1.5"]), 2);
}

#[test]
fn report_paw_graph_clustering() {
    let dir = workdir("report");
    let edge_list = dir.join("paw.txt");
    std::fs::write(&edge_list, "# a paw\n0 1\n0 2\n1 2\n2 3\n").unwrap();
    let out = dir.join("report.csv");
    let code = invoke(&[
        "report",
        edge_list.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report = report_from_csv(&read(&out)).unwrap();
    assert_eq!(report.nodes, 4);
    assert_eq!(report.edges, 4);
    assert_eq!(report.clustering, Some(0.6));
    assert_eq!(report.cov_rds_lag1, Some(0.0));

    // A feature file of the wrong length is a config error.
    let feature = dir.join("short.txt");
    std::fs::write(&feature, "1\n0\n").unwrap();
    let code = invoke(&[
        "report",
        edge_list.to_str().unwrap(),
        "--feature",
        feature.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn report_missing_file_is_a_config_error() {
    assert_eq!(invoke(&["report", "/nonexistent/graph.txt"]), 2);
}

#[test]
fn report_projects_features_onto_the_largest_component() {
    // Triangle 0-1-2 plus the stray edge 3-4; the feature file covers all
    // five input nodes and gets restricted along with the graph.
    let dir = workdir("report-lcc");
    let edge_list = dir.join("two-parts.txt");
    std::fs::write(&edge_list, "0 1\n1 2\n0 2\n3 4\n").unwrap();
    let feature = dir.join("y.txt");
    std::fs::write(&feature, "1\n0\n0\n9\n9\n").unwrap();
    let out = dir.join("report.csv");
    let code = invoke(&[
        "report",
        edge_list.to_str().unwrap(),
        "--feature",
        feature.to_str().unwrap(),
        "--largest-component",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report = report_from_csv(&read(&out)).unwrap();
    assert_eq!(report.nodes, 3);
    assert_eq!(report.edges, 3);
    assert_eq!(report.clustering, Some(1.0));
    // Triangle with y = (1, 0, 0): lag-1 autocovariance -1/9.
    assert!((report.cov_rds_lag1.unwrap() + 1.0 / 9.0).abs() < 1e-12);
}

#[test]
fn unknown_subcommand_exits_two() {
    assert_eq!(invoke(&["frobnicate"]), 2);
    assert_eq!(invoke(&["--help"]), 0);
}

#[test]
fn grid_rows_parse_and_exceed_one() {
    let dir = workdir("grid");
    let out = dir.join("grid.csv");
    let code = invoke(&[
        "grid",
        "--ratios",
        "1,10",
        "--eps",
        "0.05,0.4",
        "--mode",
        "both",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let rows = grid_from_csv(&read(&out)).unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.gap_ratio > 1.0));

    assert_eq!(invoke(&["grid", "--mode", "sideways"]), 2);
}

#[test]
fn simulate_round_trips_and_respects_seed_overrides() {
    let dir = workdir("simulate");
    std::fs::write(dir.join("net.txt"), "0 1\n0 2\n1 2\n2 3\n3 4\n4 0\n").unwrap();
    std::fs::write(dir.join("y.txt"), "1\n0\n1\n0\n1\n").unwrap();
    let config = dir.join("scenario.conf");
    std::fs::write(
        &config,
        "network = edge_list\n\
         edge_list_path = net.txt\n\
         feature = column\n\
         feature_path = y.txt\n\
         fractions = 0.4\n\
         replications = 5\n\
         coupons = 2\n\
         base_seed = 3\n",
    )
    .unwrap();
    let out = dir.join("table.csv");
    let summary = dir.join("summary.csv");
    let code = invoke(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--summary-out",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let table = ReplicationTable::from_csv(&read(&out)).unwrap();
    assert_eq!(table.rows.len(), 5 * 2 * 2);
    assert!(read(&summary).starts_with("scheme,fraction"));

    // Same config, same bytes.
    let again = dir.join("again.csv");
    invoke(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(read(&out), read(&again));

    // Overriding the seed changes the draw.
    let reseeded = dir.join("reseeded.csv");
    invoke(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "99",
        "--out",
        reseeded.to_str().unwrap(),
    ]);
    assert_ne!(read(&out), read(&reseeded));
}

#[test]
fn simulate_config_errors_exit_two() {
    let dir = workdir("simulate-bad");
    let config = dir.join("bad.conf");
    std::fs::write(&config, "network = sbm\nblocks = 2\n").unwrap();
    assert_eq!(
        invoke(&["simulate", "--config", config.to_str().unwrap()]),
        2
    );
    assert_eq!(invoke(&["simulate", "--config", "/nonexistent.conf"]), 2);
}

#[test]
fn concentrate_sweep_parses() {
    let dir = workdir("concentrate");
    let out = dir.join("sweep.csv");
    let code = invoke(&[
        "concentrate",
        "--n-list",
        "40,80",
        "--in-prob",
        "0.4",
        "--out-prob",
        "0.15",
        "--seeds",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let rows = concentration_from_csv(&read(&out)).unwrap();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        assert_eq!(row.f_min, row.g_min);
        assert!(row.op_distance >= row.eig_deviation - 1e-12);
    }

    // 81 nodes do not split into two equal blocks.
    assert_eq!(invoke(&["concentrate", "--n-list", "81"]), 2);
}
