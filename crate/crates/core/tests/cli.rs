use std::path::Path;
use std::process::{Command, Output};

fn pormab(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pormab"));
    c.args(args).env_remove("PORMAB_OUT_DIR");
    if let Some(d) = out_dir {
        c.env("PORMAB_OUT_DIR", d);
    }
    c.output().unwrap()
}

fn gen(dir: &Path) -> String {
    let p = dir.join("inst.json").to_string_lossy().into_owned();
    let out = pormab(&["--seed", "2", "gen", "--arms", "2", "--states", "2", "--actions", "2", "--observations", "2", "--budget", "1", "-o", &p], None);
    assert!(out.status.success());
    p
}

#[test]
fn generated_instance_validates() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path());
    let out = pormab(&["validate", &p], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn invalid_instance_exits_2_with_paths() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path());
    let text = std::fs::read_to_string(&p).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["arms"][0]["transition"][0][0] = serde_json::json!([0.7, 0.4]);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, doc.to_string()).unwrap();
    let bad = bad.to_string_lossy().into_owned();
    for cmd in ["validate", "bound"] {
        let out = pormab(&[cmd, &bad], None);
        assert_eq!(out.status.code(), Some(2));
        // validate reports on stdout, other commands on stderr
        let err = format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
        assert!(err.contains("arms[0].transition[0][0]"), "{err}");
    }
}

#[test]
fn usage_errors_exit_2_and_runtime_errors_exit_1() {
    assert_eq!(pormab(&["bound"], None).status.code(), Some(2));
    assert_eq!(pormab(&["no-such-command"], None).status.code(), Some(2));
    assert_eq!(pormab(&["bound", "/nonexistent/instance.json"], None).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path());
    // two arms at action 1 cost 2 > B = 1
    let out = pormab(&["simulate", &p, "--policy", "fixed", "--episodes", "2"], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn csv_outputs_carry_the_config_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path());
    let out = pormab(&["--seed", "5", "bound", &p], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let cfg = lines.next().unwrap().strip_prefix("# config: ").unwrap();
    let cfg: serde_json::Value = serde_json::from_str(cfg).unwrap();
    assert_eq!(cfg["seed"], 5);
    assert_eq!(cfg["command"], "bound");
    assert_eq!(lines.next().unwrap(), "iter,lambda,bound,gradient,v_0,v_1,wall_ms,status");
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() >= 2);
    assert!(rows.iter().all(|r| r.split(',').nth(6) == Some("0")));
    let last = rows.last().unwrap().rsplit(',').next().unwrap();
    assert!(["converged", "stationary", "no-convergence"].contains(&last), "{last}");
}

#[test]
fn output_directory_variable_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path());
    let out = pormab(&["plan", &p, "-o", "sub/plan.csv"], Some(dir.path()));
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("sub/plan.csv")).unwrap();
    assert!(text.starts_with("# config: "));
    assert!(text.lines().nth(1).unwrap().starts_with("arm,action"));
}

#[test]
fn timing_flag_only_changes_wall_clock_fields() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path());
    let args = ["compare", p.as_str(), "--episodes", "5", "--horizon", "5", "--policies", "greedy,random"];
    let plain = String::from_utf8(pormab(&args, None).stdout).unwrap();
    let mut timed_args = vec!["--timing"];
    timed_args.extend(args);
    let timed = String::from_utf8(pormab(&timed_args, None).stdout).unwrap();
    let strip = |s: &str| -> Vec<String> {
        s.lines().skip(2).map(|l| l.rsplitn(2, ',').nth(1).unwrap().to_string()).collect()
    };
    assert_eq!(strip(&plain), strip(&timed));
    assert!(plain.lines().skip(2).all(|l| l.ends_with(",0")));
}

#[test]
fn json_commands_embed_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path());
    for args in [
        vec!["solve-arm", p.as_str(), "--lambda", "0.2"],
        vec!["simulate", p.as_str(), "--episodes", "4", "--horizon", "6"],
    ] {
        let out = pormab(&args, None);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(doc["config"]["command"], args[0]);
    }
}
