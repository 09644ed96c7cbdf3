//! End-to-end tests against the compiled binary: exit-code contract,
//! output formats, flag-over-config precedence, and byte determinism.

use std::fs;
use std::path::Path;
use std::process::Command;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn netval(args: &[&str]) -> Outcome {
    let output = Command::new(env!("CARGO_BIN_EXE_netval"))
        .args(args)
        .output()
        .expect("binary runs");
    Outcome {
        code: output.status.code().expect("binary exits normally"),
        stdout: String::from_utf8(output.stdout).unwrap(),
        stderr: String::from_utf8(output.stderr).unwrap(),
    }
}

/// Two banks, each holding 20 of the other's debt; under a 10% shock both
/// sink to -10 with no direct defaults.
fn write_two_bank(dir: &Path) {
    fs::write(
        dir.join("institutions.csv"),
        "id,is_fund,external_assets,external_liabilities\nA,false,100,80\nB,false,100,80\n",
    )
    .unwrap();
    fs::write(dir.join("holdings.csv"), "holder_id,issuer_id,amount\nA,B,20\nB,A,20\n").unwrap();
}

fn write_generator_spec(path: &Path, seed: u64) {
    fs::write(path, format!("institutions = 12\nfunds = 3\nseed = {seed}\n")).unwrap();
}

#[test]
fn validate_accepts_a_valid_network() {
    let dir = tempfile::tempdir().unwrap();
    write_two_bank(dir.path());
    let out = netval(&["validate", "--network", dir.path().to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("network is valid: 2 institutions"), "{}", out.stdout);
}

#[test]
fn validate_names_the_bad_edge_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("institutions.csv"),
        "id,is_fund,external_assets,external_liabilities\nA,false,100,80\nB,false,100,80\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("holdings.csv"),
        "holder_id,issuer_id,amount\nA,A,5\nB,A,20\n",
    )
    .unwrap();
    let out = netval(&["validate", "--network", dir.path().to_str().unwrap()]);
    assert_eq!(out.code, 1);
    assert!(out.stdout.contains("'A' holds its own debt"), "{}", out.stdout);
}

#[test]
fn validate_exits_two_when_the_file_is_unreadable_or_malformed() {
    let out = netval(&["validate", "--network", "/nonexistent/net.json"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("error"), "{}", out.stderr);

    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("institutions.csv"),
        "id,is_fund,external_assets,external_liabilities\nA,false,not_a_number,80\n",
    )
    .unwrap();
    fs::write(dir.path().join("holdings.csv"), "holder_id,issuer_id,amount\n").unwrap();
    let out = netval(&["validate", "--network", dir.path().to_str().unwrap()]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("line 2"), "{}", out.stderr);
}

#[test]
fn run_with_zero_shock_reports_zero_defaults() {
    let dir = tempfile::tempdir().unwrap();
    write_two_bank(dir.path());
    let out = netval(&["run", "--network", dir.path().to_str().unwrap(), "--shock", "0"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("total defaults:     0"), "{}", out.stdout);
    assert!(out.stdout.contains("converged in 1 iterations"), "{}", out.stdout);
}

#[test]
fn run_reproduces_the_hand_solvable_contagion_case() {
    let dir = tempfile::tempdir().unwrap();
    write_two_bank(dir.path());
    let out = netval(&[
        "run",
        "--network",
        dir.path().to_str().unwrap(),
        "--model",
        "linear-dr",
        "--shock",
        "0.1",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("direct defaults:    0"), "{}", out.stdout);
    assert!(out.stdout.contains("indirect defaults:  2"), "{}", out.stdout);
    assert!(out.stdout.contains("total defaults:     2 [A, B]"), "{}", out.stdout);
    assert!(out.stdout.contains("total final equity: -20"), "{}", out.stdout);
}

#[test]
fn run_rejects_an_ill_formed_model_block() {
    let dir = tempfile::tempdir().unwrap();
    write_two_bank(dir.path());
    let config = dir.path().join("bad.toml");
    fs::write(
        &config,
        format!(
            "network = {:?}\n[model]\nvariant = \"reduced-form\"\ngamma = 1.0\nnot_a_param = 3\n",
            dir.path()
        ),
    )
    .unwrap();
    let out = netval(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("not_a_param"), "{}", out.stderr);

    let out = netval(&[
        "run",
        "--network",
        dir.path().to_str().unwrap(),
        "--model",
        "linear-dr",
        "--param",
        "gamma=2",
    ]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("gamma"), "{}", out.stderr);
}

#[test]
fn run_exits_one_when_the_solver_hits_the_iteration_ceiling() {
    let dir = tempfile::tempdir().unwrap();
    write_two_bank(dir.path());
    // The 0.5% shock needs 41 map applications; 5 cannot be enough.
    let out = netval(&[
        "run",
        "--network",
        dir.path().to_str().unwrap(),
        "--shock",
        "0.005",
        "--max-iter",
        "5",
    ]);
    assert_eq!(out.code, 1, "{}", out.stderr);
    assert!(out.stdout.contains("did not converge within 5 iterations"), "{}", out.stdout);
    assert!(out.stdout.contains("total defaults"), "{}", out.stdout);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    write_two_bank(dir.path());
    let config = dir.path().join("run.toml");
    fs::write(&config, format!("network = {:?}\nshock = 0.0\n", dir.path())).unwrap();
    let out = netval(&["run", "--config", config.to_str().unwrap(), "--shock", "0.1"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("shock 0.1"), "{}", out.stdout);
    assert!(out.stdout.contains("indirect defaults:  2"), "{}", out.stdout);
}

#[test]
fn sweep_writes_the_exact_column_set_and_one_row_per_scenario() {
    let dir = tempfile::tempdir().unwrap();
    write_two_bank(dir.path());
    let out_path = dir.path().join("results.csv");
    let out = netval(&[
        "sweep",
        "--network",
        dir.path().to_str().unwrap(),
        "--shock-grid",
        "0:0.005:0.005",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let text = fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(
        lines[0],
        "shock,param_name,param_value,direct_defaults,indirect_defaults,total_defaults,converged,iterations,final_delta_r,total_final_equity"
    );
    assert_eq!(lines[1], "0,,,0,0,0,true,1,0,40");
    assert_eq!(lines[2], "0.005,,,0,2,2,true,41,0,-1");
}

#[test]
fn sweep_parameter_grid_produces_distinguishable_curves() {
    let dir = tempfile::tempdir().unwrap();
    write_two_bank(dir.path());
    let out = netval(&[
        "sweep",
        "--network",
        dir.path().to_str().unwrap(),
        "--model",
        "ir-feedback",
        "--shock-grid",
        "0:0.01:0.005",
        "--param",
        "gamma_tilde=0,0.05,0.1",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines.len(), 1 + 3 * 3);
    for value in ["0", "0.05", "0.1"] {
        let curve: Vec<&&str> = lines[1..]
            .iter()
            .filter(|l| l.split(',').nth(2) == Some(value))
            .collect();
        assert_eq!(curve.len(), 3, "missing curve for gamma_tilde={value}");
        assert!(curve.iter().all(|l| l.split(',').nth(1) == Some("gamma_tilde")));
    }
}

#[test]
fn sweep_rejects_unknown_parameters_without_writing_output() {
    let dir = tempfile::tempdir().unwrap();
    write_two_bank(dir.path());
    let out_path = dir.path().join("results.csv");
    let out = netval(&[
        "sweep",
        "--network",
        dir.path().to_str().unwrap(),
        "--model",
        "linear-dr",
        "--shock-grid",
        "0:0.01:0.005",
        "--param",
        "gamma=1,2",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("gamma"), "{}", out.stderr);
    assert!(!out_path.exists(), "exit 2 must not leave output files");
}

#[test]
fn sweep_is_byte_deterministic_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("gen.toml");
    write_generator_spec(&spec, 42);
    let net_dir = dir.path().join("net");
    assert_eq!(netval(&["generate", "--config", spec.to_str().unwrap(), "--out", net_dir.to_str().unwrap()]).code, 0);

    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        let out = netval(&[
            "sweep",
            "--network",
            net_dir.to_str().unwrap(),
            "--model",
            "ir-feedback",
            "--shock-grid",
            "0:0.1:0.005",
            "--param",
            "gamma_tilde=0,0.1",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        outputs.push(fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert!(!outputs[0].is_empty());
}

#[test]
fn generate_is_deterministic_and_produces_a_valid_network() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("gen.toml");
    write_generator_spec(&spec, 7);

    let mut snapshots = Vec::new();
    for name in ["first", "second"] {
        let out_dir = dir.path().join(name);
        let out = netval(&[
            "generate",
            "--config",
            spec.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        snapshots.push((
            fs::read(out_dir.join("institutions.csv")).unwrap(),
            fs::read(out_dir.join("holdings.csv")).unwrap(),
        ));
    }
    assert_eq!(snapshots[0], snapshots[1]);

    let out = netval(&["validate", "--network", dir.path().join("first").to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);

    // The seed flag overrides the spec file.
    let out_dir = dir.path().join("reseeded");
    let out = netval(&[
        "generate",
        "--config",
        spec.to_str().unwrap(),
        "--seed",
        "8",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("seed 8"), "{}", out.stdout);
    assert_ne!(fs::read(out_dir.join("holdings.csv")).unwrap(), snapshots[0].1);
}

#[test]
fn generate_rejects_impossible_specs_without_writing_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("gen.toml");
    fs::write(&spec, "institutions = 10\nfunds = 0\nseed = 1\n").unwrap();
    let out_dir = dir.path().join("net");
    let out = netval(&[
        "generate",
        "--config",
        spec.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("funds"), "{}", out.stderr);
    assert!(!out_dir.exists(), "exit 2 must not leave output files");
}

#[test]
fn config_file_drives_a_full_sweep_without_flags() {
    let dir = tempfile::tempdir().unwrap();
    write_two_bank(dir.path());
    let results = dir.path().join("results.csv");
    let config = dir.path().join("sweep.toml");
    fs::write(
        &config,
        format!(
            r#"network = {net:?}
output = {out:?}

[model]
variant = "reduced-form"
gamma = 2.0
beta = 0.5

[solver]
max_iterations = 50000

[sweep]
shock_grid = {{ start = 0.0, stop = 0.01, step = 0.005 }}

[[sweep.param]]
name = "gamma"
values = [1.0, 30.0]
"#,
            net = dir.path(),
            out = results
        ),
    )
    .unwrap();
    let out = netval(&["sweep", "--config", config.to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let text = fs::read_to_string(&results).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 2);
    assert!(text.contains("0.005,gamma,30,"), "{text}");
}
