use std::path::PathBuf;
use std::process::{Command, Output};

use dgint::config::Tolerances;
use dgint::fixtures::{bundled, source, BUNDLED};
use dgint::form::PolyForm;
use dgint::mc;
use dgint::random;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dgint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgint"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dgint-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(" = "))
}

#[test]
fn check_q2_verdicts() {
    let o = dgint(&["check-q2", "so3.dg"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l == "Q^2 = 0: PASS"));
    let o = dgint(&["check-q2", "broken_jacobi.dg"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "Q^2 = 0: FAIL"));
    assert!(value(&text, "residual.e1").is_some());
}

#[test]
fn every_bundled_chart_loads_from_disk() {
    for name in BUNDLED {
        let path = scratch(&format!("{name}.dg"));
        std::fs::write(&path, source(name).unwrap()).unwrap();
        let o = dgint(&["check-q2", path.to_str().unwrap()]);
        assert!(o.status.success(), "{name}");
        assert_eq!(value(&stdout(&o), "chart"), Some(*name));
    }
}

#[test]
fn heisenberg_product() {
    let o = dgint(&[
        "multiply",
        "heisenberg.dg",
        "--a",
        "0.1,0,0",
        "--b",
        "0,0.1,0",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(value(&text, "product"), Some("0.1,0.1,0.005"));
    assert_eq!(value(&text, "bch_oracle"), Some("0.1,0.1,0.005"));
}

#[test]
fn groupoid_table_has_one_row_per_pair() {
    let o = dgint(&["groupoid-table", "heisenberg", "--grid", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text
        .lines()
        .skip_while(|l| *l != "[csv products]")
        .skip(1)
        .take_while(|l| !l.starts_with("[end"))
        .collect();
    assert_eq!(rows.len(), 10);
    assert!(rows[0].ends_with(",deviation"));
    let dev: f64 = value(&text, "max_deviation").unwrap().parse().unwrap();
    assert!(dev < 1e-6);
}

#[test]
fn mc_solve_then_horn_fill_from_files() {
    let dg = bundled("so3").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let b = random::small_closed(&mut rng, &dg.wdeg(), 2, 8, 0.01);
    let bpath = scratch("closed.tab");
    std::fs::write(&bpath, b.to_table(&dg.names())).unwrap();
    let apath = scratch("solution.tab");
    let o = dgint(&[
        "mc-solve",
        "so3",
        "--closed",
        bpath.to_str().unwrap(),
        "--form-out",
        apath.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    let a = PolyForm::from_table(
        &std::fs::read_to_string(&apath).unwrap(),
        &dg.names(),
        dg.wdeg(),
    )
    .unwrap();
    let direct = mc::kuranishi_inverse(&dg, &b, &Tolerances::default()).unwrap();
    assert!(a.sub(&direct.form).max_coeff() < 1e-15);

    let f0 = scratch("face0.tab");
    let f2 = scratch("face2.tab");
    std::fs::write(&f0, a.face(0).to_table(&dg.names())).unwrap();
    std::fs::write(&f2, a.face(2).to_table(&dg.names())).unwrap();
    let out = scratch("filler.tab");
    let o = dgint(&[
        "horn-fill",
        "so3",
        "--k",
        "1",
        "--face",
        f0.to_str().unwrap(),
        f2.to_str().unwrap(),
        "--form-out",
        out.to_str().unwrap(),
    ]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}");
    let fe: f64 = value(&text, "face_error").unwrap().parse().unwrap();
    assert!(fe <= 1e-10);
    let fill = PolyForm::from_table(
        &std::fs::read_to_string(&out).unwrap(),
        &dg.names(),
        dg.wdeg(),
    )
    .unwrap();
    assert!(fill.face(0).sub(&a.face(0)).max_coeff() <= 1e-10);
}

#[test]
fn retract_and_symplectic_report_pass() {
    let o = dgint(&["retract", "heisenberg", "--seed", "3"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(value(&stdout(&o), "monotone"), Some("true"));
    let o = dgint(&["symplectic-report", "poisson_const.dg"]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}");
    assert_eq!(value(&text, "omega_s.rank"), Some("4"));
    assert_eq!(value(&text, "cross_check"), Some("PASS"));
}

#[test]
fn errors_produce_an_error_block() {
    let o = dgint(&["multiply", "no_such_chart", "--a", "0.1", "--b", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    assert_eq!(value(&text, "status"), Some("error"));
    assert_eq!(value(&text, "error.kind"), Some("invalid_chart"));
    let o = dgint(&["symplectic-report", "so3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = dgint(&["--mc-tol", "0", "check-q2", "so3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = dgint(&["multiply", "so3", "--a", "0.1,0", "--b", "0,0,0"]);
    assert_eq!(value(&stdout(&o), "error.kind"), Some("dimension"));
}

#[test]
fn selftest_reports_are_byte_identical() {
    let p1 = scratch("self1.txt");
    let p2 = scratch("self2.txt");
    let o1 = dgint(&["selftest", "--seed", "0", "--output", p1.to_str().unwrap()]);
    let o2 = dgint(&["selftest", "--seed", "0", "--output", p2.to_str().unwrap()]);
    assert!(o1.status.success() && o2.status.success());
    let (a, b) = (std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    assert_eq!(a, b);
    assert_eq!(a, o1.stdout);
    assert_eq!(value(&stdout(&o1), "selftest"), Some("PASS"));
    let o3 = dgint(&["selftest", "--seed", "7"]);
    assert!(o3.status.success());
    assert_ne!(o3.stdout, o1.stdout);
}
