//! End-to-end tests driving the compiled binary on small fixtures.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use txrank_core::io::read_rank_table;
use txrank_core::{build_graph, read_transactions, BuildOptions};
use txrank_testkit::dense::{dense_google, dense_reduced, dense_stationary, rank_order};

fn txrank(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_txrank"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary should run")
}

fn run_ok(args: &[&str], dir: &Path) -> String {
    let out = txrank(args, dir);
    assert!(
        out.status.success(),
        "txrank {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// A four-node fixture with one dangling node and uneven weights.
const FOUR_NODES: &str = "\
a,b,2,100
a,c,1,110
b,c,1,120
c,a,3,130
c,d,0.5,140
";

/// The five-node cascade fixture; node 0 drains the hub's reserves.
const FIVE_NODES: &str = "\
1,0,10,0
2,0,10,1
3,0,10,2
0,4,1,3
4,1,5,4
4,2,5,5
4,3,5,6
2,4,5,7
";

fn write_fixture(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path
}

fn read_matrix(path: &Path, nr: usize) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let values: Vec<f64> = text
        .lines()
        .filter(|line| !line.starts_with('#') && !line.trim().is_empty())
        .flat_map(|line| line.split('\t').map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .collect();
    assert_eq!(values.len(), nr * nr);
    values
}

#[test]
fn rank_matches_the_dense_solution_on_the_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path(), "four.csv", FOUR_NODES);
    run_ok(
        &["rank", "--input", input.to_str().unwrap(), "--out", "ranks.tsv"],
        dir.path(),
    );

    let graph = build_graph(
        &read_transactions(FOUR_NODES.as_bytes()).unwrap(),
        &BuildOptions::default(),
    )
    .unwrap();
    let p = dense_stationary(&dense_google(&graph, 0.85));
    let pstar = dense_stationary(&dense_google(&graph.invert(), 0.85));
    let k_of = rank_order(p.as_slice());
    let kstar_of = rank_order(pstar.as_slice());

    let rows = read_rank_table(fs::File::open(dir.path().join("ranks.tsv")).map(std::io::BufReader::new).unwrap())
        .unwrap();
    assert_eq!(rows.len(), 4);
    // Rows come out in rank order, k = 1.. without gaps.
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.k as usize, i + 1);
        let node = graph.lookup(&row.id).unwrap() as usize;
        assert_eq!(k_of[i] as usize, node, "row {i} names the wrong node");
        assert!((row.p - p[node]).abs() <= 1e-10);
        assert!((row.pstar - pstar[node]).abs() <= 1e-10);
        let expected_kstar = kstar_of.iter().position(|&u| u as usize == node).unwrap() + 1;
        assert_eq!(row.kstar as usize, expected_kstar);
    }
}

#[test]
fn rank_echoes_the_default_damping_into_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path(), "four.csv", FOUR_NODES);
    let stdout = run_ok(
        &["rank", "--input", input.to_str().unwrap(), "--out", "ranks.tsv"],
        dir.path(),
    );
    let summary: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(summary["alpha"], serde_json::json!(0.85));
    assert_eq!(summary["nodes"], serde_json::json!(4));
    assert_eq!(summary["converged"], serde_json::json!(true));
}

#[test]
fn missing_input_exits_with_code_two_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = txrank(
        &["rank", "--input", "no-such-file.csv", "--out", "ranks.tsv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("no-such-file.csv"), "stderr was: {stderr}");
}

#[test]
fn computation_errors_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path(), "four.csv", FOUR_NODES);
    let out = txrank(
        &[
            "rank",
            "--input",
            input.to_str().unwrap(),
            "--alpha",
            "1.5",
            "--out",
            "ranks.tsv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn contagion_reproduces_the_hand_traced_cascade() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path(), "five.csv", FIVE_NODES);
    run_ok(
        &[
            "contagion",
            "--input",
            input.to_str().unwrap(),
            "--kappa-min",
            "0.4",
            "--kappa-max",
            "0.4",
            "--kappa-step",
            "0.5",
            "--out",
            "sweep",
        ],
        dir.path(),
    );

    // Node 0 fails first; losing its inflow bankrupts 1 and 3 next round.
    let bankrupt = fs::read_to_string(dir.path().join("sweep/bankrupt_k0.4.txt")).unwrap();
    let ids: Vec<&str> =
        bankrupt.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(ids, ["0", "1", "3"]);

    let cascade = fs::read_to_string(dir.path().join("sweep/cascade_k0.4.tsv")).unwrap();
    let rows: Vec<&str> = cascade
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("tau"))
        .collect();
    assert_eq!(rows, ["1\t1\t1\t0.2", "2\t2\t3\t0.6", "3\t0\t3\t0.6"]);

    let sweep = fs::read_to_string(dir.path().join("sweep/sweep.tsv")).unwrap();
    assert!(sweep.lines().any(|l| l == "0.4\t0.6\t3\t3\ttrue"), "sweep was: {sweep}");
}

#[test]
fn contagion_at_threshold_one_bankrupts_nobody() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path(), "five.csv", FIVE_NODES);
    run_ok(
        &[
            "contagion",
            "--input",
            input.to_str().unwrap(),
            "--kappa-min",
            "1",
            "--kappa-max",
            "1",
            "--kappa-step",
            "0.01",
            "--out",
            "sweep",
        ],
        dir.path(),
    );
    let sweep = fs::read_to_string(dir.path().join("sweep/sweep.tsv")).unwrap();
    assert!(sweep.lines().any(|l| l == "1\t0\t0\t1\ttrue"), "sweep was: {sweep}");
    let bankrupt = fs::read_to_string(dir.path().join("sweep/bankrupt_k1.txt")).unwrap();
    assert!(bankrupt.lines().all(|l| l.starts_with('#')));
}

#[test]
fn contagion_records_the_default_round_budget_in_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path(), "five.csv", FIVE_NODES);
    run_ok(
        &[
            "contagion",
            "--input",
            input.to_str().unwrap(),
            "--kappa-min",
            "0.4",
            "--kappa-max",
            "0.4",
            "--kappa-step",
            "1",
            "--out",
            "sweep",
        ],
        dir.path(),
    );
    let sweep = fs::read_to_string(dir.path().join("sweep/sweep.tsv")).unwrap();
    assert!(sweep.contains("tau_max=10"), "header should record the default: {sweep}");
}

#[test]
fn regomax_over_the_whole_graph_reproduces_the_transition_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path(), "four.csv", FOUR_NODES);
    run_ok(
        &[
            "regomax",
            "--input",
            input.to_str().unwrap(),
            "--select",
            "a,b,c,d",
            "--out",
            "red",
        ],
        dir.path(),
    );
    let graph = build_graph(
        &read_transactions(FOUR_NODES.as_bytes()).unwrap(),
        &BuildOptions::default(),
    )
    .unwrap();
    let g = dense_google(&graph, 0.85);
    let got = read_matrix(&dir.path().join("red/gr.tsv"), 4);
    for i in 0..4 {
        for j in 0..4 {
            assert!((got[i * 4 + j] - g[(i, j)]).abs() <= 1e-12, "entry ({i}, {j})");
        }
    }
}

#[test]
fn regomax_matches_the_dense_reduction_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path(), "five.csv", FIVE_NODES);
    run_ok(
        &[
            "regomax",
            "--input",
            input.to_str().unwrap(),
            "--select",
            "0,4",
            "--series-tol",
            "1e-13",
            "--out",
            "red",
        ],
        dir.path(),
    );

    let graph = build_graph(
        &read_transactions(FIVE_NODES.as_bytes()).unwrap(),
        &BuildOptions::default(),
    )
    .unwrap();
    let mut sel: Vec<usize> = ["0", "4"]
        .iter()
        .map(|id| graph.lookup(id).unwrap() as usize)
        .collect();
    sel.sort_unstable();
    let oracle = dense_reduced(&dense_google(&graph, 0.85), &sel);

    for (name, dense) in [
        ("red/gr.tsv", &oracle.g_r),
        ("red/grr.tsv", &oracle.g_rr),
        ("red/gpr.tsv", &oracle.g_pr),
        ("red/gqr.tsv", &oracle.g_qr),
    ] {
        let got = read_matrix(&dir.path().join(name), 2);
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (got[i * 2 + j] - dense[(i, j)]).abs() <= 1e-10,
                    "{name} entry ({i}, {j}): {} vs {}",
                    got[i * 2 + j],
                    dense[(i, j)]
                );
            }
        }
    }

    // Row order follows the selection file.
    let selection = fs::read_to_string(dir.path().join("red/selection.txt")).unwrap();
    let ids: Vec<&str> = selection.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(ids.len(), 2);
    assert_eq!(
        ids,
        sel.iter().map(|&u| graph.ids[u].as_str()).collect::<Vec<_>>()
    );
}

#[test]
fn regomax_defaults_to_twenty_top_ranked_nodes() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["synth", "--nodes", "60", "--seed", "5", "--out", "tx.csv"], dir.path());
    let stdout = run_ok(
        &["regomax", "--input", "tx.csv", "--out", "red"],
        dir.path(),
    );
    let summary: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(summary["nr"], serde_json::json!(20));
    let selection = fs::read_to_string(dir.path().join("red/selection.txt")).unwrap();
    assert_eq!(selection.lines().filter(|l| !l.starts_with('#')).count(), 20);
}

#[test]
fn rank_results_are_identical_from_list_and_dump_inputs() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["synth", "--nodes", "40", "--seed", "2", "--out", "tx.csv"], dir.path());
    run_ok(&["ingest", "--input", "tx.csv", "--out", "graph.txt"], dir.path());
    run_ok(&["rank", "--input", "tx.csv", "--out", "from_list.tsv"], dir.path());
    run_ok(&["rank", "--input", "graph.txt", "--out", "from_dump.tsv"], dir.path());
    let read = |name: &str| {
        read_rank_table(std::io::BufReader::new(
            fs::File::open(dir.path().join(name)).unwrap(),
        ))
        .unwrap()
    };
    assert_eq!(read("from_list.tsv"), read("from_dump.tsv"));
}

#[test]
fn dump_inputs_reject_build_flags() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["synth", "--nodes", "10", "--seed", "2", "--out", "tx.csv"], dir.path());
    run_ok(&["ingest", "--input", "tx.csv", "--out", "graph.txt"], dir.path());
    let out = txrank(
        &["rank", "--input", "graph.txt", "--count-mode", "--out", "r.tsv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("graph dump"));
}

#[test]
fn synth_is_reproducible_and_covers_every_node() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["synth", "--nodes", "10000", "--seed", "42", "--out", "a.csv"], dir.path());
    run_ok(&["synth", "--nodes", "10000", "--seed", "42", "--out", "b.csv"], dir.path());
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);

    let records = read_transactions(a.as_slice()).unwrap();
    let senders: HashSet<&str> = records.iter().map(|r| r.src.as_str()).collect();
    assert_eq!(senders.len(), 10_000, "every node spends at least once");
    let all: HashSet<&str> = records
        .iter()
        .flat_map(|r| [r.src.as_str(), r.dst.as_str()])
        .collect();
    assert_eq!(all.len(), 10_000);
}

#[test]
fn density_counts_every_node_once() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["synth", "--nodes", "50", "--seed", "3", "--out", "tx.csv"], dir.path());
    run_ok(&["rank", "--input", "tx.csv", "--out", "ranks.tsv"], dir.path());
    run_ok(
        &["density", "--ranks", "ranks.tsv", "--cells", "8", "--out", "grid.tsv"],
        dir.path(),
    );
    let grid = read_matrix(&dir.path().join("grid.tsv"), 8);
    assert_eq!(grid.iter().sum::<f64>(), 50.0);
}

#[test]
fn density_marks_fully_bankrupt_cells_with_plus_one() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["synth", "--nodes", "50", "--seed", "3", "--out", "tx.csv"], dir.path());
    run_ok(&["rank", "--input", "tx.csv", "--out", "ranks.tsv"], dir.path());
    // Every node bankrupt: populated cells read +1, empty cells NaN.
    let rows = read_rank_table(std::io::BufReader::new(
        fs::File::open(dir.path().join("ranks.tsv")).unwrap(),
    ))
    .unwrap();
    let ids: Vec<String> = rows.iter().map(|r| r.id.clone()).collect();
    fs::write(dir.path().join("bankrupt.txt"), ids.join("\n")).unwrap();
    run_ok(
        &[
            "density",
            "--ranks",
            "ranks.tsv",
            "--bankrupt",
            "bankrupt.txt",
            "--cells",
            "8",
            "--out",
            "crisis.tsv",
        ],
        dir.path(),
    );
    let grid = read_matrix(&dir.path().join("crisis.tsv"), 8);
    assert!(grid.iter().all(|v| v.is_nan() || *v == 1.0));
    assert!(grid.contains(&1.0));
}

#[test]
fn fit_recovers_an_exact_power_law_from_a_curve_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut curve = String::from("K\tW\n");
    for k in 1..=2000 {
        let k = k as f64;
        curve.push_str(&format!("{k}\t{}\n", k.powf(0.9) / 1e4));
    }
    fs::write(dir.path().join("curve.tsv"), curve).unwrap();
    let stdout = run_ok(
        &[
            "fit",
            "--curve",
            "curve.tsv",
            "--kmin",
            "10",
            "--kmax",
            "1000",
            "--out",
            "fit.tsv",
        ],
        dir.path(),
    );
    let summary: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!((summary["beta"].as_f64().unwrap() - 0.9).abs() < 1e-9);
    assert!((summary["mu"].as_f64().unwrap() - 1e4).abs() / 1e4 < 1e-9);
    assert_eq!(summary["points_used"], serde_json::json!(991));
    let table = fs::read_to_string(dir.path().join("fit.tsv")).unwrap();
    assert!(table.contains("beta\t0.9"), "table was: {table}");
}

#[test]
fn occurrence_crosses_tables_and_marks_misses() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["synth", "--nodes", "30", "--seed", "1", "--out", "tx.csv"], dir.path());
    run_ok(&["rank", "--input", "tx.csv", "--out", "q1.tsv"], dir.path());
    run_ok(
        &["rank", "--input", "tx.csv", "--alpha", "0.6", "--out", "q2.tsv"],
        dir.path(),
    );
    run_ok(
        &["occurrence", "q1.tsv", "q2.tsv", "--top", "5", "--out", "occ.tsv"],
        dir.path(),
    );
    let text = fs::read_to_string(dir.path().join("occ.tsv")).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next().unwrap(), "node\tappearances\tbest\tq1\tq2");
    let mut last_appearances = usize::MAX;
    for line in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 5);
        let appearances: usize = fields[1].parse().unwrap();
        assert!(appearances <= last_appearances, "rows must be sorted");
        last_appearances = appearances;
        assert!(fields[3] == "-" || fields[3].parse::<u32>().unwrap() <= 5);
    }
}

#[test]
fn threads_flag_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["synth", "--nodes", "60", "--seed", "8", "--out", "tx.csv"], dir.path());
    run_ok(
        &["--threads", "1", "rank", "--input", "tx.csv", "--out", "one.tsv"],
        dir.path(),
    );
    run_ok(
        &["--threads", "4", "rank", "--input", "tx.csv", "--out", "four.tsv"],
        dir.path(),
    );
    let one = fs::read(dir.path().join("one.tsv")).unwrap();
    let four = fs::read(dir.path().join("four.tsv")).unwrap();
    assert_eq!(one, four);
}

#[test]
fn closed_stdout_is_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), "tx.csv", FOUR_NODES);
    // A reader that is dropped immediately makes the first stdout write fail
    // with a broken pipe, like piping into `head` does.
    let (reader, writer) = std::io::pipe().unwrap();
    drop(reader);
    let output = Command::new(env!("CARGO_BIN_EXE_txrank"))
        .args(["rank", "--input", "tx.csv", "--out", "ranks.tsv"])
        .current_dir(dir.path())
        .stdout(writer)
        .stderr(std::process::Stdio::piped())
        .output()
        .unwrap();
    assert!(output.status.success(), "closed pipe must not fail the run");
    assert!(output.stderr.is_empty(), "closed pipe must not be reported");
    assert!(dir.path().join("ranks.tsv").exists());
}
