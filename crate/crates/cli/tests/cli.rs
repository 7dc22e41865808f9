use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use manicov::pointcloud::load_csv;
use manicov_cli::experiments::covgeo_rows;
use tempfile::TempDir;

fn manicov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_manicov"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn ok(args: &[&str]) -> Output {
    let out = manicov(args);
    assert!(out.status.success(), "{args:?} failed: {}", stderr(&out));
    out
}

/// Metadata and rows of a result table.
fn read_table(path: &Path) -> (Vec<(String, String)>, Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut meta = Vec::new();
    let mut lines = text.lines();
    let header = loop {
        let line = lines.next().expect("table has a header");
        match line.strip_prefix("# ") {
            Some(kv) => {
                let (k, v) = kv.split_once('=').unwrap();
                meta.push((k.to_string(), v.to_string()));
            }
            None => break line.split(',').map(String::from).collect(),
        }
    };
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (meta, header, rows)
}

fn meta_value<'a>(meta: &'a [(String, String)], key: &str) -> &'a str {
    meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str()).unwrap_or_else(|| panic!("no `{key}`"))
}

fn dir_str(dir: &TempDir) -> &str {
    dir.path().to_str().unwrap()
}

#[test]
fn small_spiral_run_writes_both_tables() {
    let dir = TempDir::new().unwrap();
    let start = Instant::now();
    let out = ok(&["spiral-geodesic", "--n", "200", "--output-dir", dir_str(&dir)]);
    assert!(start.elapsed().as_secs_f64() < 5.0);
    assert!(stderr(&out).contains("spiral-geodesic finished in"));

    let (meta, header, rows) = read_table(&dir.path().join("spiral_geodesic_local.csv"));
    assert_eq!(header, ["pair", "true_t", "euclid_h", "euclid_err", "corrected", "corrected_err"]);
    assert!(!rows.is_empty());
    assert_eq!(meta_value(&meta, "n"), "200");
    assert_eq!(meta_value(&meta, "manifold"), "spiral");
    assert!(meta.iter().all(|(k, _)| !k.contains("time")));

    let (_, header, rows) = read_table(&dir.path().join("spiral_geodesic_global.csv"));
    assert_eq!(header[0], "source");
    assert_eq!(rows.len(), 50);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let run = || {
        ok(&["spiral-geodesic", "--n", "300", "--seed", "7", "--output-dir", dir_str(&dir)]);
        ok(&["s1-eigenvalues", "--n", "300", "--h", "0.2", "--output-dir", dir_str(&dir)]);
        let mut files: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| {
                let path = e.unwrap().path();
                (path.clone(), fs::read(path).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let (first, second) = (run(), run());
    assert_eq!(first.len(), 3);
    for ((name, x), (_, y)) in first.iter().zip(&second) {
        assert!(x == y, "{name:?} differs between runs");
    }
}

#[test]
fn config_file_then_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# spectrum check\nn = 300\nh=0.2\nk_eigs=3\nseed=5\n").unwrap();
    ok(&[
        "s1-eigenvalues",
        "--config",
        cfg.to_str().unwrap(),
        "--seed=9",
        "--output-dir",
        dir_str(&dir),
    ]);
    let (meta, _, rows) = read_table(&dir.path().join("s1_eigenvalues.csv"));
    assert_eq!(meta_value(&meta, "n"), "300");
    assert_eq!(meta_value(&meta, "seed"), "9");
    assert_eq!(rows.len(), 3);
}

#[test]
fn single_eigenvalue_is_the_trivial_one() {
    let dir = TempDir::new().unwrap();
    ok(&["s1-eigenvalues", "--n", "300", "--h", "0.2", "--k-eigs", "1", "--output-dir", dir_str(&dir)]);
    let (_, _, rows) = read_table(&dir.path().join("s1_eigenvalues.csv"));
    assert_eq!(rows.len(), 1);
    let v: f64 = rows[0][2].parse().unwrap();
    assert!(v.abs() < 1e-8, "{v}");
}

#[test]
fn configuration_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    for args in [
        vec!["spiral-geodesic", "--bogus", "1"],
        vec!["spiral-geodesic", "--n"],
        vec!["spiral-geodesic", "--n", "many"],
        vec!["spiral-geodesic", "--eps", "-0.1"],
        vec!["alpha-sensitivity", "--manifold", "circle_uniform"],
        vec!["covgeo"],
        vec!["no-such-experiment"],
        vec!["spiral-geodesic", "--config", "/nonexistent/run.cfg"],
    ] {
        let mut args = args.clone();
        args.extend(["--output-dir", dir_str(&dir)]);
        let out = manicov(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(stderr(&out).starts_with("error:"), "{args:?}");
    }
    let out = manicov(&["spiral-geodesic", "--n", "many"]);
    assert!(stderr(&out).contains("`n`"));
}

#[test]
fn unwritable_output_exits_2() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, "").unwrap();
    let out = manicov(&["spiral-geodesic", "--n", "200", "--output-dir", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn malformed_input_exits_3_with_location() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "0,0\n1,abc\n2,2\n").unwrap();
    let out = manicov(&["lle", "--input", path.to_str().unwrap(), "--output-dir", dir_str(&dir)]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.contains("line 2, column 2"), "{err}");
    assert!(err.contains("bad.csv"), "{err}");

    fs::write(&path, "0,0\n1,1,1\n").unwrap();
    let out = manicov(&["lle", "--input", path.to_str().unwrap(), "--output-dir", dir_str(&dir)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("line 2"));
}

#[test]
fn isolated_point_exits_3() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("far.csv");
    fs::write(&path, "0\n0.1\n5\n").unwrap();
    let out = manicov(&["lle", "--input", path.to_str().unwrap(), "--h", "0.5", "--output-dir", dir_str(&dir)]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("point 2"));
}

#[test]
fn singular_weights_exit_4() {
    // Both neighbors of the first point coincide, so the truncated weight
    // system has a zero denominator there.
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("twin.csv");
    fs::write(&path, "0\n1\n1\n").unwrap();
    let out = manicov(&["ldr-lle", "--input", path.to_str().unwrap(), "--h", "1.5", "--output-dir", dir_str(&dir)]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}

#[test]
fn lle_on_three_collinear_points() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("line.csv");
    fs::write(&path, "0,0\n1,0\n2,0\n").unwrap();
    for cmd in ["lle", "ldr-lle"] {
        ok(&[cmd, "--input", path.to_str().unwrap(), "--h", "1.5", "--ell", "1", "--output-dir", dir_str(&dir)]);
    }
    let (meta, header, rows) = read_table(&dir.path().join("lle_embedding.csv"));
    assert_eq!(header, ["index", "coord_1"]);
    assert_eq!(rows.len(), 3);
    assert_eq!(meta_value(&meta, "ell"), "1");
    let (_, _, rows) = read_table(&dir.path().join("ldr_lle_embedding.csv"));
    assert_eq!(rows.len(), 3);
    let (_, _, rows) = read_table(&dir.path().join("ldr_lle_spectrum.csv"));
    assert_eq!(rows.len(), 3);
}

#[test]
fn covgeo_tool_matches_the_library_on_a_sampled_circle() {
    let dir = TempDir::new().unwrap();
    ok(&["sample", "--manifold", "circle_uniform", "--n", "400", "--seed", "3", "--output-dir", dir_str(&dir)]);
    let points = dir.path().join("points.csv");
    ok(&["covgeo", "--input", points.to_str().unwrap(), "--h", "0.1", "--output-dir", dir_str(&dir)]);

    let cloud = load_csv(&points).unwrap();
    let latent = load_csv(dir.path().join("latent.csv")).unwrap();
    let expected = covgeo_rows(&cloud, 0.1, 0.1, 1).unwrap();
    let (_, header, rows) = read_table(&dir.path().join("covgeo.csv"));
    assert_eq!(header, ["i", "j", "euclidean", "corrected_i", "corrected_j", "edge_weight"]);
    assert_eq!(rows.len(), expected.len());

    let (mut euclid_err, mut corrected_err) = (0.0, 0.0);
    for (row, want) in rows.iter().zip(&expected) {
        let f = |k: usize| row[k].parse::<f64>().unwrap();
        assert_eq!((row[0].parse::<usize>().unwrap(), row[1].parse::<usize>().unwrap()), (want.i, want.j));
        assert_eq!([f(2), f(3), f(4), f(5)], [want.euclidean, want.corrected_i, want.corrected_j, want.edge()]);
        let (a, b) = (latent.point(want.i)[0], latent.point(want.j)[0]);
        let t = manicov::manifolds::arc_distance(a, b);
        euclid_err += (want.euclidean - t).abs();
        corrected_err += (want.edge() - t).abs();
    }
    assert!(corrected_err < euclid_err, "{corrected_err} vs {euclid_err}");
}

#[test]
fn eig_dist_on_an_undeformed_circle() {
    let dir = TempDir::new().unwrap();
    ok(&["sample", "--manifold", "circle_uniform", "--n", "1000", "--output-dir", dir_str(&dir)]);
    let (points, latent) = (dir.path().join("points.csv"), dir.path().join("latent.csv"));
    ok(&[
        "eig-dist",
        "--input",
        points.to_str().unwrap(),
        "--latent",
        latent.to_str().unwrap(),
        "--eps",
        "0.2",
        "--output-dir",
        dir_str(&dir),
    ]);
    let (_, header, rows) = read_table(&dir.path().join("eig_dist.csv"));
    assert_eq!(header, ["i", "j", "latent_t", "eig", "error"]);
    let mut deviations = Vec::new();
    for row in &rows {
        let (t, eig): (f64, f64) = (row[2].parse().unwrap(), row[3].parse().unwrap());
        assert!(t <= 0.2 && row[4].is_empty(), "{row:?}");
        if t > 0.0 && t <= 0.1 {
            deviations.push((eig / (3f64.sqrt() * t) - 1.0).abs());
        }
    }
    let mean = deviations.iter().sum::<f64>() / deviations.len() as f64;
    assert!(deviations.len() > 1000 && mean < 0.1, "{} pairs, mean deviation {mean}", deviations.len());

    let pairs = dir.path().join("pairs.csv");
    fs::write(&pairs, "0,1\n0,1000\n").unwrap();
    let out = manicov(&[
        "eig-dist",
        "--input",
        points.to_str().unwrap(),
        "--latent",
        latent.to_str().unwrap(),
        "--pairs",
        pairs.to_str().unwrap(),
        "--output-dir",
        dir_str(&dir),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn diffusion_maps_tool_on_a_uniform_circle() {
    let dir = TempDir::new().unwrap();
    ok(&["sample", "--manifold", "circle_uniform", "--n", "600", "--output-dir", dir_str(&dir)]);
    let points = dir.path().join("points.csv");
    ok(&["dm", "--input", points.to_str().unwrap(), "--h", "0.1", "--k-eigs", "3", "--output-dir", dir_str(&dir)]);
    let (_, _, rows) = read_table(&dir.path().join("dm_spectrum.csv"));
    let values: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(values[0].abs() < 1e-8);
    for v in &values[1..] {
        assert!((v - 1.0).abs() < 0.15, "{values:?}");
    }
}
