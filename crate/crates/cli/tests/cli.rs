use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use num_complex::Complex64;
use qcmap::lsq::SolveOptions;
use qcmap::mesh::MeshOrder;
use qcmap::pipeline::solve;
use qcmap_cli::json::SolutionFile;
use qcmap_cli::svg::{edges, Plane};
use qcmap_cli::{parse_field, CSV_HEADER};

fn qcmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcmap")).args(args).output().expect("spawn qcmap")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn solve_to(dir: &Path, name: &str, args: &[&str]) -> SolutionFile {
    let path = dir.join(name);
    let mut full = vec!["solve", "--out", path.to_str().unwrap()];
    full.extend_from_slice(args);
    let out = qcmap(&full);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    SolutionFile::load(&path).unwrap()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[test]
fn json_reproduces_the_library_solution_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let file = solve_to(dir.path(), "a.json", &["--mu", "constant:0.3+0.2i", "--M", "5", "--N", "12"]);

    let field = parse_field("constant:0.3+0.2i").unwrap();
    let solved = solve(field.as_ref(), MeshOrder::new(5, 12).unwrap(), &SolveOptions::default()).unwrap();
    let want = solved.solution.big_w_values();
    let got = file.big_w();
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        assert_eq!(g.re.to_bits(), w.re.to_bits());
        assert_eq!(g.im.to_bits(), w.im.to_bits());
    }

    let again = dir.path().join("b.json");
    file.save(&again).unwrap();
    assert_eq!(SolutionFile::load(&again).unwrap(), file);
}

#[test]
fn json_layout_follows_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let out = qcmap(&["solve", "--mu", "radial", "--M", "3", "--N", "8", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    for key in ["M", "N", "mu_spec", "residual_l2", "residual_inf", "flipped", "vertices", "triangles"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["M"], 3);
    assert_eq!(v["vertices"].as_array().unwrap().len(), 7 * 8);
    assert_eq!(v["triangles"].as_array().unwrap().len(), 2 * 2 * 3 * 8);
    for vert in v["vertices"].as_array().unwrap() {
        let j = vert["j"].as_i64().unwrap();
        assert_eq!(vert["z"].is_null(), j > 0);
        assert_eq!(vert["w"].is_null(), j > 0);
    }
}

#[test]
fn identity_solve_reproduces_the_disk_vertices() {
    let dir = tempfile::tempdir().unwrap();
    let file = solve_to(dir.path(), "id.json", &["--mu", "constant:0", "--M", "4", "--N", "8"]);
    let mut worst = 0.0f64;
    for v in &file.vertices {
        if let (Some(z), Some(w)) = (v.z, v.w) {
            worst = worst.max((Complex64::new(w[0], w[1]) - Complex64::new(z[0], z[1])).norm());
        }
    }
    assert!(worst <= 1e-9, "{worst}");
    assert!(file.verification.as_ref().unwrap().max_error <= 1e-9);
    assert!(file.residual_l2 <= 1e-10);
    assert!(file.flipped.is_empty());
}

#[test]
fn default_m_follows_the_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let file = solve_to(dir.path(), "c.json", &["--mu", "constant:0.5", "--N", "64"]);
    assert_eq!((file.m, file.n), (52, 64));
    assert_eq!(file.rows, 13439);
    assert!(file.residual_l2.is_finite());
}

#[test]
fn exit_codes() {
    assert_eq!(code(&qcmap(&["solve", "--mu", "nonsense", "--N", "8"])), 1);
    assert_eq!(code(&qcmap(&["solve", "--mu", "radial", "--N", "2"])), 1);
    assert_eq!(code(&qcmap(&["solve", "--mu", "radial"])), 1);
    assert_eq!(code(&qcmap(&["solve", "--mu", "radial", "--N", "8", "--solver", "qr"])), 1);
    assert_eq!(code(&qcmap(&["table", "--table", "4"])), 1);
    assert_eq!(code(&qcmap(&["verify", "--mu", "daripa1", "--N", "8"])), 1);
    assert_eq!(code(&qcmap(&["solve", "--mu", "constant:0.9+0.9i", "--N", "8"])), 3);
    assert_eq!(code(&qcmap(&["solve", "--mu", "fuchsian:1.5", "--N", "8"])), 3);
    let fail = qcmap(&["solve", "--mu", "constant:0.5", "--N", "8", "--solver", "normal-cholesky", "--tol", "1e-300"]);
    assert_eq!(code(&fail), 2);
    assert!(String::from_utf8_lossy(&fail.stderr).contains("lsq"));
    assert_eq!(code(&qcmap(&["plot", "--input", "/no/such/file.json", "--svg", "/tmp/x.svg"])), 4);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"M\": 1}").unwrap();
    assert_eq!(code(&qcmap(&["plot", "--input", bad.to_str().unwrap(), "--svg", "/tmp/x.svg"])), 4);
    let unwritable = dir.path().join("missing-dir").join("o.json");
    assert_eq!(code(&qcmap(&["solve", "--mu", "radial", "--N", "8", "--out", unwritable.to_str().unwrap()])), 4);
}

#[test]
fn unknown_spec_lists_the_catalog() {
    let out = qcmap(&["solve", "--mu", "nonsense", "--N", "8"]);
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["constant", "radial", "sectorial", "daripa1", "daripa2", "oscillate", "fuchsian"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn verify_prints_one_csv_row() {
    let out = qcmap(&["verify", "--mu", "constant:0.1", "--M", "12", "--N", "16"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    let cells: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&cells[..3], ["0.1", "12", "16"]);
    let err: f64 = cells[3].parse().unwrap();
    assert!((err - 0.012).abs() < 0.25 * 0.012, "{err}");
    assert!(cells[4].parse::<f64>().unwrap() >= 0.0);
}

#[test]
fn table_rows_are_sorted_by_mu_then_n() {
    let start = Instant::now();
    let out = qcmap(&["table", "--table", "1", "--mu", "constant:0.3", "--mu", "constant:0.1", "--N", "32", "--N", "16"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let keys: Vec<(String, String)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[0].to_string(), c[2].to_string())
        })
        .collect();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    let want = [("0.1", "16"), ("0.1", "32"), ("0.3", "16"), ("0.3", "32")];
    assert_eq!(keys, want.map(|(a, b)| (a.to_string(), b.to_string())));
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn single_column_tables_are_quick() {
    for t in ["1", "2", "3"] {
        let start = Instant::now();
        let out = qcmap(&["table", "--table", t, "--N", "16"]);
        assert_eq!(code(&out), 0);
        let rows = stdout(&out).lines().count() - 1;
        assert_eq!(rows, if t == "1" { 4 } else { 1 });
        assert!(start.elapsed().as_secs_f64() < 5.0);
    }
    assert_eq!(code(&qcmap(&["table", "--table", "2", "--mu", "sectorial", "--N", "16"])), 1);
}

#[test]
fn table_matches_verify() {
    let table = stdout(&qcmap(&["table", "--table", "2", "--N", "32"]));
    let verify = stdout(&qcmap(&["verify", "--mu", "radial", "--N", "32"]));
    let err = |s: &str| s.lines().nth(1).unwrap().split(',').nth(3).unwrap().to_string();
    assert_eq!(err(&table), err(&verify));
}

#[test]
fn svg_draws_every_edge_and_the_circle() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("s.json");
    let w = dir.path().join("w.svg");
    let big_w = dir.path().join("bigw.svg");
    let out = qcmap(&[
        "solve", "--mu", "constant:0.5", "--M", "3", "--N", "8",
        "--out", json.to_str().unwrap(), "--svg", w.to_str().unwrap(), "--plane", "w",
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&w).unwrap();
    assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
    assert!(text.contains("<circle"));

    let file = SolutionFile::load(&json).unwrap();
    let segments = text.matches('M').count() - text.matches("(M").count();
    assert_eq!(segments, edges(&file, Plane::W).unwrap().len());

    let out = qcmap(&[
        "plot", "--input", json.to_str().unwrap(), "--svg", big_w.to_str().unwrap(),
        "--plane", "W", "--size", "300", "--stroke", "1.5",
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&big_w).unwrap();
    assert!(!text.contains("<circle"));
    assert!(text.contains(r#"width="300""#) && text.contains(r#"stroke-width="1.500""#));
    assert_eq!(code(&qcmap(&["plot", "--input", json.to_str().unwrap(), "--svg", "/tmp/x.svg", "--plane", "Z"])), 1);
}

#[test]
fn edge_counts_per_plane() {
    let dir = tempfile::tempdir().unwrap();
    let file = solve_to(dir.path(), "r.json", &["--mu", "radial", "--M", "3", "--N", "8"]);
    // left half: 3 columns of 3N edges plus the inner circle
    assert_eq!(edges(&file, Plane::Z).unwrap().len(), 3 * 3 * 8 + 8);
    assert_eq!(edges(&file, Plane::W).unwrap().len(), 3 * 3 * 8 + 8);
    assert!(edges(&file, Plane::BigW).unwrap().len() > 2 * 3 * 3 * 8);
}

#[test]
fn constant_field_crowds_the_image_near_one() {
    let dir = tempfile::tempdir().unwrap();
    let crowding = |spec: &str| {
        let file = solve_to(dir.path(), "c.json", &["--mu", spec, "--N", "64"]);
        let segs = edges(&file, Plane::W).unwrap();
        let lengths: Vec<f64> = segs.iter().map(|(a, b)| (a - b).norm()).collect();
        let near = segs
            .iter()
            .filter(|(a, b)| ((a + b) * 0.5 - 1.0).norm() < 0.1)
            .map(|(a, b)| (a - b).norm())
            .fold(f64::INFINITY, f64::min);
        near / mean(&lengths)
    };
    assert!(crowding("constant:0.5") < 0.1);
    assert!(crowding("constant:0") > 1.0);
}

#[test]
fn identity_w_plane_is_the_z_plane() {
    let dir = tempfile::tempdir().unwrap();
    let file = solve_to(dir.path(), "id.json", &["--mu", "constant:0", "--M", "6", "--N", "12"]);
    let z = edges(&file, Plane::Z).unwrap();
    let w = edges(&file, Plane::W).unwrap();
    assert_eq!(z.len(), w.len());
    for ((za, zb), (wa, wb)) in z.iter().zip(&w) {
        assert!((za - wa).norm() < 1e-9 && (zb - wb).norm() < 1e-9);
    }
}

#[test]
fn plot_can_solve_inline() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("r.svg");
    let out = qcmap(&["plot", "--mu", "radial", "--N", "16", "--svg", svg.to_str().unwrap(), "--plane", "z"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<circle"));
    assert_eq!(code(&qcmap(&["plot", "--svg", svg.to_str().unwrap()])), 1);
}

#[test]
fn fuchsian_demo_reports_flips() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("f.json");
    let out = qcmap(&["fuchsian-demo", "--M", "16", "--N", "16", "--out", json.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("fuchsian:0.5:6 (M,N)=(16,16)"), "{text}");
    assert!(text.contains("flipped="));
    let file = SolutionFile::load(&json).unwrap();
    assert!(text.contains(&format!("flipped={}/", file.flipped.len())));
    assert_eq!(code(&qcmap(&["fuchsian-demo", "--c", "1.0"])), 3);
}
