use std::path::PathBuf;
use std::process::Command;

use phimod_core::cli::{parse, run, serialize, OutputFormat};

fn problem(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}

fn phimod(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_phimod")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn report(name: &str, command: &str) -> phimod_core::cli::Report {
    let pf = parse(&std::fs::read_to_string(problem(name)).unwrap()).unwrap();
    run(command, &pf).unwrap()
}

#[test]
fn sample_problems_are_canonical() {
    for entry in std::fs::read_dir(problem("")).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let pf = parse(&text).unwrap();
        assert_eq!(serialize(&pf), text, "{}", path.display());
    }
}

#[test]
fn documented_reports() {
    let r = report("diag_one_p.txt", "check-height");
    assert_eq!(r.get("height<=1"), Some("true"));
    assert!(r.get("witness-digest").is_some());
    let r = report("tangent_alpha_u.txt", "tangent");
    assert_eq!((r.get("classes"), r.get("dimension")), (Some("4"), Some("2")));
    let r = report("fiber_psi_psi_f3.txt", "fiber");
    assert_eq!(r.get("ordinary points"), Some("4"));
    let r = report("prolong_etale_f2.txt", "prolong");
    assert_eq!(r.get("lattices"), Some("3"));
    let r = report("breuil_diag.txt", "breuil");
    for axiom in ["leibniz", "n-mod-i", "commutation", "generation"] {
        assert!(r.get(&format!("axiom {axiom}")).unwrap().starts_with("pass"), "{axiom}");
    }
}

#[test]
fn every_numeric_report_states_its_precision() {
    for (file, cmd) in [("diag_one_p.txt", "check-height"), ("tangent_alpha_u.txt", "tangent"), ("fiber_psi_psi_f3.txt", "fiber"), ("prolong_etale_f2.txt", "prolong")] {
        let text = report(file, cmd).render(OutputFormat::Kv);
        assert!(text.lines().any(|l| l.starts_with("u-precision=")), "{cmd}");
    }
}

#[test]
fn exit_codes() {
    let path = problem("diag_one_p.txt");
    let p = path.to_str().unwrap();
    assert_eq!(phimod(&["check-height", p]).0, 0);
    // height 0 is a precondition for classify
    let (code, _, err) = phimod(&["classify", problem("tangent_alpha_u.txt").to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");
    assert_eq!(phimod(&["no-such-command", p]).0, 2);

    let dir = std::env::temp_dir().join(format!("phimod-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad_version.txt");
    std::fs::write(&bad, std::fs::read_to_string(&path).unwrap().replace("phimod-problem: 1", "phimod-problem: 7")).unwrap();
    let (code, _, err) = phimod(&["check-height", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("version"), "{err}");

    let out = Command::new(env!("CARGO_BIN_EXE_phimod"))
        .args(["prolong", problem("prolong_etale_f2.txt").to_str().unwrap()])
        .env("PHIMOD_MAX_QUOTIENT", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn graph_file_and_formats() {
    let dir = std::env::temp_dir().join(format!("phimod-graph-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let g = dir.join("g.txt");
    let (code, out, _) = phimod(&["fiber-graph", problem("supersingular_graph.txt").to_str().unwrap(), "--graph", g.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("supersingular components: 1"));
    let graph = std::fs::read_to_string(&g).unwrap();
    assert!(graph.starts_with("# phimod fiber graph 1"));
    assert!(graph.lines().any(|l| l.starts_with("node 0 ")));
    let (_, kv, _) = phimod(&["fiber-graph", problem("supersingular_graph.txt").to_str().unwrap(), "--format", "kv", "--graph", g.to_str().unwrap()]);
    assert!(kv.contains("supersingular components=1"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn overrides_and_seed_file() {
    let path = problem("breuil_diag.txt");
    let p = path.to_str().unwrap();
    let dir = std::env::temp_dir().join(format!("phimod-seed-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let seed = dir.join("seed");
    std::fs::write(&seed, "7\n").unwrap();
    let (c1, a, _) = phimod(&["breuil", p, "--seed", seed.to_str().unwrap()]);
    let (c2, b, _) = phimod(&["breuil", p, "--seed", "7"]);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    let (code, out, _) = phimod(&["tangent", problem("tangent_alpha_u.txt").to_str().unwrap(), "--precision", "24"]);
    assert_eq!(code, 0);
    assert!(out.contains("classes: 4"));
    std::fs::remove_dir_all(&dir).ok();
}
