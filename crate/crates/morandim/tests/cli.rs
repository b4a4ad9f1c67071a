//! End-to-end contract of the command-line front end: exit codes,
//! deterministic outputs, and the report assembly flow.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_morandim")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("morandim-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

const MIDDLE_THIRD: &str = r#"
label = "mt"
[spec]
tau = 0.3333333333333333
[spec.variant.PointMass]
t = 2
r = 0.3333333333333333
p = [0.5, 0.5]

[estimate]
regime = "Large"
window = { n_min = 5, n_max = 20 }
k_cap = 60
env_length = 200
[estimate.phi]
declared_regime = "Large"
kind = { Constant = 1.0 }

[experiment]
replicates = 4
base_seed = 11

[sample]
seed = 9
depth = 32

[build]
seed = 9
depth = 6
policy = "EquallySpaced"
"#;

#[test]
fn theory_prints_targets_and_writes_file() {
    let dir = temp_dir("theory");
    let config = dir.join("mt.toml");
    write(&config, MIDDLE_THIRD);
    let out = run(&["theory", "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(stdout.contains("d_lower = 0.6309297535714574"), "{stdout}");
    assert!(stdout.contains("alpha = 0.6309297535714574"), "{stdout}");
    assert!(dir.join("mt.theory.toml").exists());
    // deterministic: second run produces byte-identical output
    let out2 = run(&["theory", "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.stdout, out2.stdout);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn parse_error_exits_2_invalid_spec_exits_3() {
    let dir = temp_dir("badcfg");
    let broken = dir.join("broken.toml");
    write(&broken, "label = \"x\"\n[spec\n");
    let out = run(&["theory", "--config", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let invalid = dir.join("invalid.toml");
    // tau outside (0,1) violates a named invariant
    write(
        &invalid,
        r#"
label = "bad"
[spec]
tau = 1.5
[spec.variant.PointMass]
t = 2
r = 0.25
p = [0.5, 0.5]
"#,
    );
    let out = run(&["theory", "--config", invalid.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("tau"), "{stderr}");

    // a probability vector that does not sum to one names that invariant
    let badp = dir.join("badp.toml");
    write(
        &badp,
        r#"
label = "badp"
[spec]
tau = 0.25
[spec.variant.PointMass]
t = 2
r = 0.25
p = [0.5, 0.4]
"#,
    );
    let out = run(&["theory", "--config", badp.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2)); // rejected while deserializing the draw
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("sums to"), "{stderr}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sample_and_build_are_byte_deterministic() {
    let dir = temp_dir("sample");
    let config = dir.join("mt.toml");
    write(&config, MIDDLE_THIRD);
    let out = run(&["sample", "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(out.status.success());
    let first = std::fs::read(dir.join("mt.env.csv")).unwrap();
    assert!(String::from_utf8_lossy(&first).starts_with("# morandim-csv v1 environment"));
    run(&["sample", "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    let second = std::fs::read(dir.join("mt.env.csv")).unwrap();
    assert_eq!(first, second);

    // seed override changes the bytes
    let out = run(&[
        "sample",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--seed-override",
        "77",
    ]);
    assert!(out.status.success());
    // point mass: draws identical regardless of seed, header differs
    let third = std::fs::read(dir.join("mt.env.csv")).unwrap();
    assert_ne!(first, third);

    let out = run(&["build", "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let tree = std::fs::read_to_string(dir.join("mt.tree.csv")).unwrap();
    let mut lines = tree.lines();
    assert_eq!(lines.next().unwrap(), "# morandim-csv v1 moran-tree");
    assert_eq!(lines.next().unwrap(), "level,path,left,right,log_measure");
    assert!(lines.next().unwrap().starts_with("0,-,0,1,0"));
    // 2^7 - 1 nodes for a depth-6 binary tree
    assert_eq!(tree.lines().count(), 2 + 127);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn estimate_then_report_roundtrip() {
    let dir = temp_dir("report");
    let config = dir.join("mt.toml");
    write(&config, MIDDLE_THIRD);

    // report before any outputs: exit 4
    let out = run(&["report", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));

    let out = run(&["estimate", "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("median 0.630930"), "{stdout}");
    assert!(dir.join("mt.replicates.csv").exists());

    // estimate without theory: exit 4 listing the absent file
    let out = run(&["report", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("mt.theory.toml"), "{stderr}");

    let out = run(&["theory", "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(out.status.success());
    let out = run(&["report", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("large-upper"), "{stdout}");
    assert!(stdout.contains("mt"), "{stdout}");
    let csv = std::fs::read_to_string(dir.join("report.csv")).unwrap();
    assert!(csv.starts_with("# morandim-csv v1 report\nfixture,regime,theory,estimate,delta\n"));
    assert_eq!(csv.lines().count(), 2 + 2); // two rows: lower and upper
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_lemmas_passes_and_negative_control_fails() {
    let dir = temp_dir("verify");
    let good = dir.join("good.toml");
    // a spec built just below the feasible ratio bound (0.4 for tau = 0.5)
    // has gaps of 1.0125 * tau * child width, so a 1.2x-inflated check must
    // detect a violation while the honest check passes
    write(
        &good,
        r#"
label = "tight"
[spec]
tau = 0.5
[spec.variant.PointMass]
t = 2
r = 0.399
p = [0.5, 0.5]

[verify]
seed = 3
sandwich_envs = 2
sandwich_queries_per_env = 10
sandwich_depth = 8
identity_order_max = 10
cdf_samples = 20000
cdf_t_values = [2, 3]
check_tau_inflation = 1.0
"#,
    );
    let out = run(&["verify-lemmas", "--config", good.to_str().unwrap()]);
    let stdout = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(out.status.success(), "stdout: {stdout} stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("identities: PASS"), "{stdout}");
    assert!(stdout.contains("sandwich: PASS"), "{stdout}");
    assert!(stdout.contains("separation: PASS"), "{stdout}");
    assert!(stdout.contains("cdf-bands: PASS"), "{stdout}");

    let corrupted = dir.join("corrupt.toml");
    write(
        &corrupted,
        &std::fs::read_to_string(&good)
            .unwrap()
            .replace("check_tau_inflation = 1.0", "check_tau_inflation = 1.2"),
    );
    let out = run(&["verify-lemmas", "--config", corrupted.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("separation: FAIL"), "{stdout}");
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("separation"), "{stderr}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn mc_check_passes_at_moderate_scale() {
    let dir = temp_dir("mc");
    let config = dir.join("mc.toml");
    write(
        &config,
        r#"
label = "mc"
[spec]
tau = 0.25
[spec.variant.PointMass]
t = 2
r = 0.25
p = [0.5, 0.5]

[mc_check]
seed = 5
t_values = [2, 3]
samples = 100000
se_multiplier = 5.0
"#,
    );
    let out = run(&["mc-check", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("T=2"), "{stdout}");
    assert!(stdout.contains("PASS"), "{stdout}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn theory_prints_literal_tokens_for_extremes() {
    let dir = temp_dir("tokens");
    let configs = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let config = configs.join("uniform_simplex_cantor.toml");
    let out = run(&["theory", "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    // infinite alpha and zero beta print as literal tokens, not sentinels
    assert!(stdout.contains("alpha = inf"), "{stdout}");
    assert!(stdout.contains("beta = 0"), "{stdout}");
    assert!(stdout.contains("d_upper = 1.5411689801982948"), "{stdout}");
    let file = std::fs::read_to_string(dir.join("uniform-simplex-cantor.theory.toml")).unwrap();
    assert!(file.contains("alpha = \"inf\""), "{file}");
    assert!(file.contains("beta = \"0\""), "{file}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn repo_example_configs_parse_and_validate() {
    let configs = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&configs).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        if path.file_name().unwrap().to_str().unwrap() == "acceptance.toml" {
            continue;
        }
        let config = morandim::config::RunConfig::load(&path)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        config.spec.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 5, "expected the five documented example configs, found {seen}");
}
