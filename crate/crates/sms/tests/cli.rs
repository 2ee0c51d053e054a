use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use tempfile::TempDir;

fn sms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sms"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(o: Output) -> Output {
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Shared {
    _dir: TempDir,
    curves: PathBuf,
    data: PathBuf,
}

// Coarse curves and a small 3-variable dataset, built once per test binary.
fn shared() -> &'static Shared {
    static CELL: OnceLock<Shared> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let curves = dir.path().join("curves.txt");
        let data = dir.path().join("data.csv");
        ok(sms(&["curves", "--step", "0.05", "--output", s(&curves)]));
        ok(sms(&[
            "learn", "--synthesize", "--vars", "3", "--rows", "100", "--seed", "11", "--margins", "normal",
            "--output", s(&data),
        ]));
        Shared { _dir: dir, curves, data }
    })
}

#[test]
fn curves_file_plot_and_determinism() {
    let sh = shared();
    let text = std::fs::read_to_string(&sh.curves).unwrap();
    assert!(text.starts_with("SMSCURVES v1\n# command = curves\n# seed = 0\n"));
    for fam in ["gaussian", "gumbel", "clayton"] {
        assert_eq!(text.matches(&format!("\nfamily={fam} ")).count(), 1, "{fam}");
    }
    let plot = std::fs::read_to_string(format!("{}.plot.csv", s(&sh.curves))).unwrap();
    let header = plot.lines().position(|l| l == "rho,family,raw,posterior").unwrap();
    let data_rows = text.lines().filter(|l| l.starts_with(|c: char| c == '-' || c.is_ascii_digit())).count();
    assert_eq!(plot.lines().count() - header - 1, data_rows);

    let dir = TempDir::new().unwrap();
    let again = dir.path().join("again.txt");
    let plot2 = dir.path().join("p.csv");
    ok(sms(&["curves", "--step", "0.05", "--output", s(&again), "--plot", s(&plot2), "--threads", "1"]));
    assert_eq!(std::fs::read(&again).unwrap(), std::fs::read(&sh.curves).unwrap());
}

#[test]
fn curves_config_errors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("c.txt");
    let o = sms(&["curves", "--families", "frank", "--step", "0.1", "--prior", "frank=cauchy:1", "--output", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown prior"), "{}", stderr(&o));
    let nowhere = dir.path().join("missing/dir/c.txt");
    let o = sms(&["curves", "--families", "fgm", "--step", "0.1", "--output", s(&nowhere)]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists() && !nowhere.exists());
}

#[test]
fn learn_sms_three_columns_two_edges_deterministic() {
    let sh = shared();
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    let o = ok(sms(&["learn", "--input", s(&sh.data), "--curves", s(&sh.curves), "--output", s(&a), "--seed", "4"]));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("n = 3\nM = 100\nedges = 2\nscoring_seconds = "), "{stdout}");
    let model = std::fs::read_to_string(&a).unwrap();
    let edges: Vec<&str> = model.lines().skip_while(|l| !l.starts_with("x0,")).skip(1).collect();
    assert_eq!(edges.len(), 2);
    ok(sms(&["learn", "--input", s(&sh.data), "--curves", s(&sh.curves), "--output", s(&b), "--seed", "4", "--threads", "2"]));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn mle_model_evaluates() {
    let sh = shared();
    let dir = TempDir::new().unwrap();
    let m = dir.path().join("m.txt");
    let r = dir.path().join("r.csv");
    ok(sms(&["learn", "--method", "mle", "--families", "gaussian", "--input", s(&sh.data), "--output", s(&m)]));
    ok(sms(&["eval", "--input", s(&m), "--data", s(&sh.data), "--output", s(&r)]));
    let report = std::fs::read_to_string(&r).unwrap();
    let line = report.lines().find(|l| l.starts_with("avg_logprob,")).unwrap();
    let v: f64 = line["avg_logprob,".len()..].parse().unwrap();
    assert!(v.is_finite());
}

#[test]
fn learn_error_exit_codes() {
    let sh = shared();
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("m.txt");
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b,c\n1,2,3\n4,x,6\n7,8,9\n").unwrap();
    let o = sms(&["learn", "--input", s(&bad), "--curves", s(&sh.curves), "--output", s(&out)]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("row 3, column 2"), "{}", stderr(&o));
    assert!(!out.exists());

    let o = sms(&["learn", "--input", s(&sh.data), "--output", s(&out)]);
    assert_eq!(code(&o), 2);
    let o = sms(&["learn", "--input", s(&sh.data), "--curves", s(&sh.curves), "--families", "frank", "--output", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("frank"));
    assert!(!out.exists());
}

#[test]
fn eval_schema_mismatch_exits_4() {
    let sh = shared();
    let dir = TempDir::new().unwrap();
    let m = dir.path().join("m.txt");
    ok(sms(&["learn", "--input", s(&sh.data), "--curves", s(&sh.curves), "--output", s(&m)]));
    let other = dir.path().join("other.csv");
    std::fs::write(&other, "x0,x1,y\n1,2,3\n2,1,5\n3,3,1\n").unwrap();
    let o = sms(&["eval", "--input", s(&m), "--data", s(&other)]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn compare_two_folds() {
    let sh = shared();
    let dir = TempDir::new().unwrap();
    let r = dir.path().join("r.csv");
    ok(sms(&["compare", "--input", s(&sh.data), "--curves", s(&sh.curves), "--output", s(&r), "--folds", "2", "--seed", "1"]));
    let text = std::fs::read_to_string(&r).unwrap();
    assert!(text.contains("# folds = 2\n"));
    let mut cells: Vec<(String, String)> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string())
        })
        .collect();
    cells.dedup();
    let want: Vec<(String, String)> = ["0", "1"]
        .iter()
        .flat_map(|sp| ["sms", "mle"].map(|m| (sp.to_string(), m.to_string())))
        .collect();
    assert_eq!(cells, want);
}

#[test]
fn verify_amh_negative_is_rr2() {
    let dir = TempDir::new().unwrap();
    let v = dir.path().join("v.csv");
    ok(sms(&["verify", "--families", "amh", "--theta", "-0.5", "--output", s(&v)]));
    let text = std::fs::read_to_string(&v).unwrap();
    let tp2: Vec<&str> = text.lines().filter(|l| l.starts_with("amh,tp2,")).collect();
    assert_eq!(tp2.len(), 1);
    assert!(tp2[0].starts_with("amh,tp2,-0.5,,pass:rr2,"), "{}", tp2[0]);
}

#[test]
fn verify_bad_token_lists_valid_ones() {
    let o = sms(&["verify", "--families", "gausian"]);
    assert_eq!(code(&o), 2);
    let e = stderr(&o);
    for t in ["gaussian", "fgm", "gumbel", "frank", "clayton", "joe", "amh", "gumbel_barnett"] {
        assert!(e.contains(t), "{e}");
    }
}

#[test]
fn verify_failure_exits_nonzero() {
    // Gumbel needs theta >= 1, so this row is an error.
    let o = sms(&["verify", "--families", "gumbel", "--theta", "0.5", "--grid", "10"]);
    assert_ne!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("gumbel,tp2,0.5,,error,"));
}

#[test]
fn flags_override_config_file() {
    let sh = shared();
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("sms.toml");
    std::fs::write(&cfg, "seed = 5\n[learn]\nmethod = \"mle\"\n").unwrap();
    let m = dir.path().join("m.txt");
    ok(sms(&["learn", "--config", s(&cfg), "--seed", "6", "--input", s(&sh.data), "--output", s(&m)]));
    let text = std::fs::read_to_string(&m).unwrap();
    assert!(text.contains("# seed = 6\n") && text.contains("# method = mle\n"), "{text}");

    std::fs::write(&cfg, "sed = 5\n").unwrap();
    let o = sms(&["learn", "--config", s(&cfg), "--input", s(&sh.data), "--output", s(&m)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn synthesize_from_model_file() {
    let dir = TempDir::new().unwrap();
    let truth = dir.path().join("t.txt");
    std::fs::write(&truth, "SMSTREE v1\na,b,c\n0 1 clayton 2 0.6 0\n1 2 gumbel 1.5 0.5 0\n").unwrap();
    let (d1, d2) = (dir.path().join("1.csv"), dir.path().join("2.csv"));
    ok(sms(&["learn", "--synthesize", "--input", s(&truth), "--rows", "50", "--seed", "9", "--output", s(&d1)]));
    ok(sms(&["learn", "--synthesize", "--input", s(&truth), "--rows", "50", "--seed", "9", "--output", s(&d2)]));
    let text = std::fs::read_to_string(&d1).unwrap();
    assert_eq!(text, std::fs::read_to_string(&d2).unwrap());
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "a,b,c");
    assert_eq!(body.len(), 51);
}
