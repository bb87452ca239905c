use std::path::Path;
use std::process::{Command, Output};

use mixed_vem::mesh::MeshFile;

fn mvem(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvem"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn mvem")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn mesh_file(p: &Path) -> MeshFile {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn mesh_command_writes_requested_meshes() {
    let dir = tempfile::tempdir().unwrap();
    let o = mvem(dir.path(), &["mesh", "--family", "cartesian", "--n", "8", "-o", "c.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(mesh_file(&dir.path().join("c.json")).cells.len(), 64);
    assert!(stdout(&o).contains("gamma_edge"));

    let o = mvem(
        dir.path(),
        &["mesh", "--family", "rhomboidal", "--nx", "4", "--ny", "4", "--shear", "0.5", "-o", "r.json"],
    );
    assert_eq!(o.status.code(), Some(0));
    let m = mesh_file(&dir.path().join("r.json"));
    assert_eq!(m.cells.len(), 16);
    assert!(m.cells.iter().all(|c| c.len() == 4));
}

#[test]
fn random_mesh_files_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let o = mvem(dir.path(), &["mesh", "--family", "random", "--seeds", "64", "--seed", "7", "-o", name]);
        assert_eq!(o.status.code(), Some(0));
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
    assert_eq!(mesh_file(&dir.path().join("a.json")).cells.len(), 64);
}

fn csv_row(p: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("h,ndof,err_u,err_div,err_sigma,err_sigma_n"));
    lines.next().unwrap().split(',').map(|t| t.parse().unwrap()).collect()
}

#[test]
fn solve_reports_errors_and_dumps_system() {
    let dir = tempfile::tempdir().unwrap();
    let o = mvem(
        dir.path(),
        &["solve", "--family", "cartesian", "--n", "8", "-o", "sf.csv", "--dump-system", "a.mtx", "--solution", "s.json"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let sf = csv_row(&dir.path().join("sf.csv"));
    assert_eq!(sf.len(), 6);
    assert!(sf[2..].iter().all(|e| e.is_finite() && *e > 0.0));
    let mtx = std::fs::read_to_string(dir.path().join("a.mtx")).unwrap();
    assert!(mtx.starts_with("%%MatrixMarket matrix coordinate real symmetric\n208 208 "));
    let sol: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(sol["sigma"].as_array().unwrap().len(), 144);
    assert_eq!(sol["u"].as_array().unwrap().len(), 64);

    let o = mvem(dir.path(), &["solve", "--family", "cartesian", "--n", "8", "--method", "drecipe", "-o", "dr.csv"]);
    assert_eq!(o.status.code(), Some(0));
    let dr = csv_row(&dir.path().join("dr.csv"));
    assert!((dr[3] - sf[3]).abs() <= 1e-10 * sf[3]);
}

#[test]
fn solve_zero_case_is_absolute_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = mvem(dir.path(), &["solve", "--family", "distorted", "--n", "4", "--case", "zero"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.matches("= 0.000000e0 (absolute)").count(), 4, "{out}");
}

#[test]
fn solve_reads_mesh_files() {
    let dir = tempfile::tempdir().unwrap();
    mvem(dir.path(), &["mesh", "--family", "convexconcave", "--n", "4", "-o", "m.json"]);
    let o = mvem(dir.path(), &["solve", "--mesh", "m.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("err_sigma_n"));
}

#[test]
fn convergence_with_compare_writes_tables_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("dat");
    std::fs::create_dir(&data).unwrap();
    let args = [
        "convergence",
        "--family",
        "rhomboidal",
        "--levels",
        "0,1,2",
        "--compare",
        "--serial",
        "-o",
        "rh.csv",
        "--dat-dir",
        "dat",
    ];
    let o = mvem(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let read = |n: &str| std::fs::read_to_string(dir.path().join(n)).unwrap();
    let sf = read("rh_stabfree.csv");
    assert!(sf.starts_with("h,ndof,err_u,err_div,err_sigma,err_sigma_n\n"));
    assert_eq!(sf.lines().count(), 5);
    assert!(sf.lines().last().unwrap().starts_with("rates,,"));
    assert!(read("rh_ratios.csv").starts_with("h,ratio_u,"));
    assert!(read("dat/rhomboidal_drecipe_err_u.dat").starts_with("# h err_u\n"));

    let first = (sf, read("rh_drecipe.csv"), read("rh_ratios.csv"));
    let o = mvem(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(first, (read("rh_stabfree.csv"), read("rh_drecipe.csv"), read("rh_ratios.csv")));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "family = \"cartesian\"\nn = 2\nout = \"from_file.json\"\n").unwrap();
    let o = mvem(dir.path(), &["--config", "run.toml", "mesh", "--n", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(mesh_file(&dir.path().join("from_file.json")).cells.len(), 9);

    std::fs::write(dir.path().join("bad.toml"), "familly = \"cartesian\"\n").unwrap();
    let o = mvem(dir.path(), &["--config", "bad.toml", "mesh"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn diagnostics_pass_on_random_quads_and_meshes() {
    let dir = tempfile::tempdir().unwrap();
    let o = mvem(dir.path(), &["diagnostics", "--quads", "100", "--seed", "3", "--family", "distorted", "--n", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("all checks passed"));
}

#[test]
fn exit_codes_distinguish_usage_and_numerical_failures() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| mvem(dir.path(), args).status.code();
    assert_eq!(code(&["mesh", "--frobnicate"]), Some(1));
    assert_eq!(code(&["mesh"]), Some(1));
    assert_eq!(code(&["mesh", "--family", "convexconcave", "--n", "5"]), Some(1));
    assert_eq!(code(&["convergence", "--family", "cartesian", "--levels", "4,8"]), Some(1));
    assert_eq!(code(&["solve", "--mesh", "missing.json"]), Some(1));
    assert_eq!(code(&["--help"]), Some(0));

    // A cell with zero area passes parsing but not geometry.
    std::fs::write(
        dir.path().join("flat.json"),
        r#"{"vertices":[[0,0],[1,0],[2,0],[1,1]],"cells":[[0,1,2],[0,2,3]]}"#,
    )
    .unwrap();
    assert_eq!(code(&["solve", "--mesh", "flat.json"]), Some(2));
}
