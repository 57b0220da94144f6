//! End-to-end tests of the installed binary: artifact layout, exit codes,
//! stderr conventions, and byte-level determinism of the CSV outputs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chaos-fem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

/// Parse one of the small comma-separated artifacts (no quoting involved).
fn parse_csv(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|line| line.split(',').map(str::to_string).collect())
        .collect()
}

fn compare_row<'a>(rows: &'a [Vec<String>], mode: &str) -> &'a [String] {
    rows.iter()
        .find(|r| r[0] == mode)
        .unwrap_or_else(|| panic!("no {mode} row"))
}

#[test]
fn solve_writes_coefficients_and_manifest_deterministically() {
    let dir = TempDir::new().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let output = run(&[
            "solve",
            "--set",
            "solve.samples=200",
            "--set",
            "solve.degree=2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "{}", stderr_of(&output));
    }
    let csv = read(&out_a, "solution.csv");
    let rows = parse_csv(&csv);
    assert_eq!(rows[0], vec!["coeff0", "coeff1", "coeff2"]);
    assert_eq!(rows.len(), 1 + 99, "one row per interior node");
    for row in &rows[1..] {
        assert_eq!(row.len(), 3);
        for cell in row {
            assert!(cell.parse::<f64>().unwrap().is_finite());
        }
    }
    let manifest = read(&out_a, "manifest.toml");
    assert!(manifest.contains("command = \"solve\""));
    assert!(manifest.contains("cg_iterations"));
    assert_eq!(
        csv,
        read(&out_b, "solution.csv"),
        "reruns are byte-identical"
    );
}

#[test]
fn solve_rejects_a_negative_degree_override() {
    let dir = TempDir::new().unwrap();
    let output = run(&[
        "solve",
        "--set",
        "solve.degree=-1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = stderr_of(&output);
    assert!(stderr.starts_with("error[config]:"), "{stderr}");
    assert!(stderr.contains("degree"), "{stderr}");
    assert_eq!(stderr.trim_end().lines().count(), 1, "single-line error");
}

#[test]
fn solve_exits_two_when_the_iteration_cap_is_too_small() {
    let dir = TempDir::new().unwrap();
    let output = run(&[
        "solve",
        "--set",
        "solve.max_iter=5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = stderr_of(&output);
    assert!(stderr.contains("error[numerical]:"), "{stderr}");
    assert!(stderr.contains("did not converge"), "{stderr}");
    assert!(
        !dir.path().join("solution.csv").exists(),
        "no garbage output"
    );
    let manifest = read(dir.path(), "manifest.toml");
    assert!(
        manifest.contains("failure ="),
        "manifest records the failure"
    );
}

#[test]
fn a_missing_config_file_is_a_usage_error() {
    let output = run(&["solve", "--config", "/nonexistent/run.toml"]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = stderr_of(&output);
    assert!(stderr.starts_with("error[config]:"), "{stderr}");
    assert!(stderr.contains("/nonexistent/run.toml"), "{stderr}");
}

#[test]
fn unknown_config_keys_are_rejected_by_name() {
    let output = run(&["solve", "--set", "problem.bogus=3"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("bogus"));
}

#[test]
fn config_file_and_overrides_compose() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        "[problem]\nn_elements = 50\n\n[solve]\ndegree = 1\nsamples = 80\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "solve",
        "--config",
        config.to_str().unwrap(),
        "--set",
        "solve.degree=0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr_of(&output));
    let rows = parse_csv(&read(&out, "solution.csv"));
    assert_eq!(rows[0], vec!["coeff0"], "override wins over the file");
    assert_eq!(rows.len(), 1 + 49, "mesh size comes from the file");
}

#[test]
fn table_writes_grid_pivots_plot_and_manifest() {
    let dir = TempDir::new().unwrap();
    let args = [
        "table",
        "--set",
        "table.degrees=[0,1]",
        "--set",
        "table.sample_counts=[40,80]",
        "--set",
        "table.svg=true",
        "--seed",
        "1",
        "--seed",
        "2",
        "--out",
    ];
    let out_a = dir.path().join("a");
    let output = run(&[&args[..], &[out_a.to_str().unwrap()]].concat());
    assert!(output.status.success(), "{}", stderr_of(&output));

    let table = parse_csv(&read(&out_a, "table.csv"));
    assert_eq!(
        table[0],
        "case,n,S,seed,eps_h1,eps_l2,mc_error,cg_iters"
            .split(',')
            .collect::<Vec<_>>()
    );
    // 2 counts x 2 seeds x (baseline + 2 degrees)
    assert_eq!(table.len(), 1 + 12);

    let h1 = parse_csv(&read(&out_a, "table_h1.csv"));
    assert_eq!(h1[0], vec!["n", "40", "80"]);
    assert_eq!(h1[1][0], "mc");
    assert_eq!(h1[2][0], "0");
    assert_eq!(h1[3][0], "1");
    assert_eq!(h1.len(), 4);
    for row in &h1[1..] {
        for cell in &row[1..] {
            assert!(cell.parse::<f64>().unwrap() > 0.0);
        }
    }
    let l2 = parse_csv(&read(&out_a, "table_l2.csv"));
    assert_eq!(l2[1][0], "0", "the baseline has no L2 column");
    assert_eq!(l2.len(), 3);

    assert!(read(&out_a, "convergence.svg").starts_with("<svg"));
    let manifest = read(&out_a, "manifest.toml");
    assert_eq!(manifest.matches("[[cells]]").count(), 12);
    let manifest: toml::Table = manifest.parse().unwrap();
    assert_eq!(manifest["seeds"].as_array().unwrap().len(), 2);
    assert!(manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .any(|v| v.as_str() == Some("convergence.svg")));

    let out_b = dir.path().join("b");
    let output = run(&[&args[..], &[out_b.to_str().unwrap()]].concat());
    assert!(output.status.success());
    assert_eq!(read(&out_a, "table.csv"), read(&out_b, "table.csv"));
    assert_eq!(
        read(&out_a, "convergence.svg"),
        read(&out_b, "convergence.svg")
    );
}

#[test]
fn table_rejects_an_empty_degree_list() {
    let output = run(&["table", "--set", "table.degrees=[]"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("degrees"));
}

#[test]
fn table_exits_two_but_still_writes_artifacts_when_cells_fail() {
    let dir = TempDir::new().unwrap();
    let output = run(&[
        "table",
        "--set",
        "table.degrees=[1]",
        "--set",
        "table.sample_counts=[40]",
        "--set",
        "table.max_iter=3",
        "--set",
        "table.with_mc_baseline=false",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = stderr_of(&output);
    assert!(stderr.contains("error[numerical]:"), "{stderr}");
    assert!(stderr.contains("1 of 1 cells failed"), "{stderr}");
    let table = parse_csv(&read(dir.path(), "table.csv"));
    assert_eq!(table.len(), 2, "the failed cell still has a row");
    assert_eq!(table[1][4], "", "its error columns are empty");
    assert!(read(dir.path(), "manifest.toml").contains("failure ="));
}

#[test]
fn table_and_compare_refuse_a_samples_file() {
    for command in ["table", "compare"] {
        let output = run(&[command, "--samples-file", "/tmp/whatever.csv"]);
        assert_eq!(output.status.code(), Some(1), "{command}");
        assert!(stderr_of(&output).contains("solve"), "{command}");
    }
}

#[test]
fn compare_reports_three_modes_and_a_diagonal_collocation_coupling() {
    let dir = TempDir::new().unwrap();
    let output = run(&[
        "compare",
        "--set",
        "compare.mc_samples=40",
        "--set",
        "compare.samples=200",
        "--set",
        "compare.degree=3",
        "--set",
        "compare.collocation_nodes=5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr_of(&output));
    let rows = parse_csv(&read(dir.path(), "compare.csv"));
    assert_eq!(
        rows[0],
        "mode,samples,eps_h1,cg_iters,gram_offdiag"
            .split(',')
            .collect::<Vec<_>>()
    );
    assert_eq!(rows.len(), 4);

    let mc = compare_row(&rows, "mc");
    assert_eq!(mc[1], "40");
    assert!(mc[2].parse::<f64>().unwrap() > 0.0);
    assert_eq!(mc[3], "");

    let collocation = compare_row(&rows, "collocation");
    assert_eq!(collocation[1], "5");
    let quad_eps = collocation[2].parse::<f64>().unwrap();
    assert!(
        quad_eps > 0.0 && quad_eps < 1e-3,
        "five nodes are plenty: {quad_eps}"
    );
    assert!(
        collocation[4].parse::<f64>().unwrap() <= 1e-12,
        "cardinal coupling is diagonal"
    );

    let chaos = compare_row(&rows, "chaos-mc");
    assert_eq!(chaos[1], "200");
    assert!(chaos[3].parse::<usize>().unwrap() > 0);
    assert!(
        chaos[4].parse::<f64>().unwrap() > 0.0,
        "sampled moments carry noise"
    );
}

#[test]
fn identity_coupling_reproduces_the_monte_carlo_row() {
    let dir = TempDir::new().unwrap();
    let output = run(&[
        "compare",
        "--set",
        "compare.chaos_basis=lagrange",
        "--set",
        "compare.samples=40",
        "--set",
        "compare.mc_samples=40",
        "--set",
        "compare.tol=1e-12",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr_of(&output));
    let rows = parse_csv(&read(dir.path(), "compare.csv"));
    let mc = compare_row(&rows, "mc")[2].parse::<f64>().unwrap();
    let chaos_row = compare_row(&rows, "chaos-mc");
    let chaos = chaos_row[2].parse::<f64>().unwrap();
    assert!(
        (mc - chaos).abs() <= 1e-10,
        "decoupled chaos solve is classical Monte Carlo: {mc} vs {chaos}"
    );
    assert!(
        chaos_row[4].parse::<f64>().unwrap() <= 1e-12,
        "Z is the identity"
    );
}

#[test]
fn shipped_configs_drive_their_commands() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    // shrink the workloads so schema coverage stays cheap
    let runs: [(&str, &str, &[&str]); 4] = [
        (
            "solve",
            "solve.toml",
            &["--set", "solve.samples=20", "--set", "solve.degree=1"],
        ),
        (
            "table",
            "table.toml",
            &[
                "--set",
                "table.degrees=[0]",
                "--set",
                "table.sample_counts=[20]",
                "--set",
                "table.seeds=[1]",
                "--set",
                "table.svg=false",
            ],
        ),
        (
            "table",
            "table-quick.toml",
            &[
                "--set",
                "table.degrees=[0]",
                "--set",
                "table.sample_counts=[20]",
                "--set",
                "table.seeds=[1]",
                "--set",
                "table.svg=false",
            ],
        ),
        (
            "compare",
            "compare.toml",
            &[
                "--set",
                "compare.samples=20",
                "--set",
                "compare.mc_samples=10",
                "--set",
                "compare.collocation_nodes=3",
                "--set",
                "compare.degree=1",
            ],
        ),
    ];
    for (command, file, extra) in runs {
        let dir = TempDir::new().unwrap();
        let config = configs.join(file);
        let mut args = vec![
            command,
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        let output = run(&args);
        assert!(output.status.success(), "{file}: {}", stderr_of(&output));
    }
}

#[test]
fn compare_needs_the_one_variable_case() {
    let output = run(&["compare", "--set", "problem.case=case2"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("one random variable"));
}

#[test]
fn compare_rejects_unknown_basis_names() {
    let output = run(&["compare", "--set", "compare.chaos_basis=fourier"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("fourier"));
}

#[test]
fn solve_accepts_a_samples_file_instead_of_a_seed() {
    let dir = TempDir::new().unwrap();
    let samples_path = dir.path().join("samples.csv");
    chaos_fem::SampleSet::draw(3, 40, 1)
        .unwrap()
        .save(&samples_path)
        .unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let output = run(&[
            "solve",
            "--samples-file",
            samples_path.to_str().unwrap(),
            "--set",
            "solve.degree=1",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "{}", stderr_of(&output));
    }
    assert_eq!(read(&out_a, "solution.csv"), read(&out_b, "solution.csv"));

    let conflicted = run(&[
        "solve",
        "--samples-file",
        samples_path.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        out_a.to_str().unwrap(),
    ]);
    assert_eq!(conflicted.status.code(), Some(1));
    assert!(stderr_of(&conflicted).contains("mutually exclusive"));

    let wrong_arity = run(&[
        "solve",
        "--samples-file",
        samples_path.to_str().unwrap(),
        "--set",
        "problem.case=case2",
        "--out",
        out_a.to_str().unwrap(),
    ]);
    assert_eq!(wrong_arity.status.code(), Some(1));
    assert!(stderr_of(&wrong_arity).contains("variables"));
}

#[test]
fn repeated_seeds_only_apply_to_table() {
    for command in ["solve", "compare"] {
        let output = run(&[command, "--seed", "1", "--seed", "2"]);
        assert_eq!(output.status.code(), Some(1), "{command}");
        assert!(stderr_of(&output).contains("single --seed"), "{command}");
    }
}

#[test]
fn help_and_usage_exit_codes_follow_the_contract() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&[]).status.code(), Some(1));
    let unknown = run(&["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(1));
    let stderr = stderr_of(&unknown);
    assert!(stderr.starts_with("error[config]:"), "{stderr}");
    assert_eq!(stderr.trim_end().lines().count(), 1);
}
