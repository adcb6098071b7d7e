use std::path::{Path, PathBuf};
use std::process::Command;

use idfactor::ensemble::{bench_instance, seeded};
use idfactor::linalg::io::{matrix_to_string, parse_matrix};
use idfactor::path::{parse_path, path_to_string};
use idfactor::{CoverPlan, Matrix, MatrixPath, StaticCertificate};
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn field(&self, key: &str) -> Option<&str> {
        self.stdout
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
    }
}

fn idfactor(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_idfactor")).args(args).output().unwrap();
    let run = Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    };
    // one summary line, whose exit field matches the real exit code
    assert_eq!(run.stdout.lines().count(), 1, "{}", run.stdout);
    assert_eq!(run.field("exit"), Some(run.code.to_string().as_str()), "{}", run.stdout);
    run
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn write_matrix(path: &str, m: &Matrix<f64>) {
    std::fs::write(path, matrix_to_string(m)).unwrap();
}

fn read_matrix(path: impl AsRef<Path>) -> Matrix<f64> {
    parse_matrix(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn bump(path: &str, i: usize, j: usize, by: f64) {
    let mut m = read_matrix(path);
    m[(i, j)] += by;
    write_matrix(path, &m);
}

#[test]
fn bounds_examples() {
    let r = idfactor(&["bounds", "--N", "8000", "--theta", "1"]);
    assert_eq!((r.code, r.field("static"), r.field("continuous")), (0, Some("4"), Some("1")));
    let r = idfactor(&["bounds", "--N", "13824", "--theta", "1"]);
    assert_eq!(r.field("continuous"), Some("2"));
    assert_eq!(idfactor(&["bounds", "--N", "100", "--theta", "1.5"]).code, 1);
    assert_eq!(idfactor(&["bounds", "--N", "100", "--theta", "0"]).code, 1);
}

#[test]
fn factor_identity_then_verify_and_tamper() {
    let d = TempDir::new().unwrap();
    let (a, out) = (p(&d, "a.txt"), p(&d, "id"));
    write_matrix(&a, &Matrix::identity(125));
    let r = idfactor(&["factor", "--input", &a, "--output-prefix", &out]);
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    let cert: StaticCertificate<f64> = StaticCertificate::parse(&std::fs::read_to_string(format!("{out}.cert")).unwrap()).unwrap();
    assert_eq!(cert.product, 1.0);
    assert!(cert.pass);
    assert_eq!(idfactor(&["verify", "--input", &a, "--output-prefix", &out]).code, 0);

    // any single entry moved by 10·tol
    let (l, r) = (format!("{out}.L"), format!("{out}.R"));
    for (file, i, j) in [(&l, 0, 0), (&l, 0, 77), (&r, 0, 0), (&r, 124, 0), (&r, 3, 0)] {
        let orig = std::fs::read(file).unwrap();
        bump(file, i, j, 1e-8);
        let v = idfactor(&["verify", "--input", &a, "--output-prefix", &out]);
        assert_eq!(v.code, 3, "{file} ({i}, {j}) {}", v.stdout);
        std::fs::write(file, orig).unwrap();
    }
    assert_eq!(idfactor(&["verify", "--input", &a, "--output-prefix", &out]).code, 0);
}

#[test]
fn hand_built_identity_factors_verify() {
    let d = TempDir::new().unwrap();
    let (a, out) = (p(&d, "a.txt"), p(&d, "hand"));
    write_matrix(&a, &Matrix::identity(6));
    let r = Matrix::from_fn(6, 2, |i, j| if i == j { 1.0 } else { 0.0 });
    write_matrix(&format!("{out}.R"), &r);
    write_matrix(&format!("{out}.L"), &r.transpose());
    let v = idfactor(&["verify", "--input", &a, "--output-prefix", &out]);
    assert_eq!(v.code, 0, "{}", v.stdout);
}

#[test]
fn zero_column_is_a_hypothesis_failure() {
    let d = TempDir::new().unwrap();
    let a = p(&d, "a.txt");
    let mut m = Matrix::identity(10);
    m[(4, 4)] = 0.0;
    write_matrix(&a, &m);
    let r = idfactor(&["factor", "--input", &a, "--output-prefix", &p(&d, "z")]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("hypothesis (ii)"), "{}", r.stderr);
    assert!(!d.path().join("z.L").exists());
}

#[test]
fn norm_above_one_needs_rescale() {
    let d = TempDir::new().unwrap();
    let a = p(&d, "a.txt");
    write_matrix(&a, &Matrix::identity(8).scaled(3.0));
    let out = p(&d, "s");
    assert_eq!(idfactor(&["factor", "--input", &a, "--output-prefix", &out]).code, 2);
    let r = idfactor(&["factor", "--input", &a, "--output-prefix", &out, "--rescale"]);
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    assert_eq!(idfactor(&["verify", "--input", &a, "--output-prefix", &out, "--rescale"]).code, 0);
}

#[test]
fn random_inputs_pass_over_50_seeds() {
    let d = TempDir::new().unwrap();
    for seed in 0..50 {
        let theta = [0.25, 0.5, 1.0][seed as usize % 3];
        let a = p(&d, &format!("a{seed}.txt"));
        write_matrix(&a, &bench_instance(80, theta, &mut seeded(seed)).unwrap());
        let out = p(&d, &format!("f{seed}"));
        let r = idfactor(&["factor", "--input", &a, "--output-prefix", &out]);
        assert_eq!(r.code, 0, "seed {seed}: {}{}", r.stdout, r.stderr);
        let product: f64 = r.field("product").unwrap().parse().unwrap();
        assert!(product <= 2.0 / theta + 1e-9);
        assert_eq!(idfactor(&["verify", "--input", &a, "--output-prefix", &out]).code, 0);
    }
}

#[test]
fn rank_above_guarantee_is_refused_unless_forced() {
    let d = TempDir::new().unwrap();
    let a = p(&d, "a.txt");
    write_matrix(&a, &Matrix::identity(125));
    let out = p(&d, "k");
    assert_eq!(idfactor(&["factor", "--input", &a, "--output-prefix", &out, "--n", "2"]).code, 2);
    let r = idfactor(&["factor", "--input", &a, "--output-prefix", &out, "--n", "2", "--force"]);
    assert_eq!((r.code, r.field("n")), (0, Some("2")));
}

#[test]
fn witness_examples() {
    let d = TempDir::new().unwrap();
    let w = p(&d, "w");
    assert_eq!(idfactor(&["witness", "--N", "3", "--theta", "0.5", "--output-prefix", &w]).code, 0);
    assert_eq!(read_matrix(format!("{w}.witness")), Matrix::diag(&[1.0, 0.5, 0.5]));
    assert_eq!(idfactor(&["witness", "--N", "4", "--theta", "1", "--output-prefix", &w]).code, 0);
    assert_eq!(read_matrix(format!("{w}.witness")), Matrix::identity(4));
    for theta in ["0.25", "0.5"] {
        let r = idfactor(&["witness", "--N", "64", "--theta", theta, "--n", "2", "--output-prefix", &w]);
        assert_eq!(r.code, 0, "{}", r.stdout);
        let t: f64 = theta.parse().unwrap();
        let product: f64 = r.field("product").unwrap().parse().unwrap();
        assert!(product >= 1.0 / t - 1e-9 && product <= 2.0 / t + 1e-9);
    }
}

#[test]
fn bench_is_deterministic() {
    let d = TempDir::new().unwrap();
    let run = |name: &str| {
        let out = p(&d, name);
        let r = idfactor(&[
            "bench", "--sweep", "125:0.25,125:1,1000:0.5", "--reps", "2", "--seed", "9", "--no-timing",
            "--output-prefix", &out,
        ]);
        assert_eq!(r.code, 0, "{}", r.stdout);
        std::fs::read_to_string(format!("{out}.csv")).unwrap()
    };
    let (x, y) = (run("b1"), run("b2"));
    assert_eq!(x, y);
    let lines: Vec<&str> = x.lines().collect();
    assert_eq!(lines[0], "N,theta,n,dev,product,millis");
    assert_eq!(lines.len(), 1 + 3 * 2);
    for row in &lines[1..] {
        let f: Vec<&str> = row.split(',').collect();
        let theta: f64 = f[1].parse().unwrap();
        let product: f64 = f[4].parse().unwrap();
        assert!(product <= 2.0 / theta + 1e-9, "{row}");
    }
    assert_eq!(idfactor(&["bench", "--sweep", "12", "--output-prefix", &p(&d, "b3")]).code, 1);
}

#[test]
fn gen_path_kinds() {
    let d = TempDir::new().unwrap();
    let c = p(&d, "c");
    assert_eq!(idfactor(&["gen-path", "--kind", "constant", "--N", "30", "--theta", "0.5", "--output-prefix", &c]).code, 0);
    let path: MatrixPath<f64> = parse_path(&std::fs::read_to_string(format!("{c}.path")).unwrap()).unwrap();
    assert_eq!(path.segments(), 1);
    assert_eq!(path.frame(0), path.frame(1));

    for (kind, theta) in [("random", "0.7"), ("rotation", "1")] {
        let args = |out: &str| {
            idfactor(&[
                "gen-path", "--kind", kind, "--N", "40", "--segments", "6", "--theta", theta, "--seed", "5",
                "--output-prefix", out,
            ])
        };
        let (x, y) = (p(&d, &format!("{kind}1")), p(&d, &format!("{kind}2")));
        assert_eq!(args(&x).code, 0);
        assert_eq!(args(&y).code, 0);
        let (tx, ty) = (
            std::fs::read_to_string(format!("{x}.path")).unwrap(),
            std::fs::read_to_string(format!("{y}.path")).unwrap(),
        );
        assert_eq!(tx, ty);
        let path: MatrixPath<f64> = parse_path(&tx).unwrap();
        assert!(path.path_norm_bound(1e-12).unwrap() <= 1.0 + 1e-9);
        if kind == "random" {
            assert!(path.path_theta() >= 0.7 - 1e-9);
        }
    }
}

fn write_path(file: &str, path: &MatrixPath<f64>) {
    std::fs::write(file, path_to_string(path).unwrap()).unwrap();
}

#[test]
fn factor_path_verify_and_tamper() {
    let d = TempDir::new().unwrap();
    let input = p(&d, "p.path");
    let mut rng = seeded(17);
    let frames = vec![
        bench_instance(40, 0.6, &mut rng).unwrap(),
        bench_instance(40, 0.6, &mut rng).unwrap(),
        bench_instance(40, 0.6, &mut rng).unwrap(),
    ];
    write_path(&input, &MatrixPath::from_frames(vec![0.0, 0.5, 1.0], frames).unwrap());
    let out = p(&d, "fp");
    let r = idfactor(&["factor-path", "--input", &input, "--output-prefix", &out, "--grid", "201", "--samples", "5"]);
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    let verify = || idfactor(&["verify-path", "--input", &input, "--output-prefix", &out, "--grid", "201"]);
    assert_eq!(verify().code, 0);

    let plan_file = format!("{out}.plan");
    let plan_text = std::fs::read_to_string(&plan_file).unwrap();
    let mut plan: CoverPlan<f64> = CoverPlan::parse(&plan_text).unwrap();
    plan.families[0] = idfactor::IndexSet::from_one_based(&[2]).unwrap();
    std::fs::write(&plan_file, plan.to_text()).unwrap();
    let v = verify();
    assert_eq!(v.code, 3, "{}", v.stdout);
    std::fs::write(&plan_file, plan_text).unwrap();

    let sample_file = format!("{out}.samples");
    let samples = std::fs::read_to_string(&sample_file).unwrap();
    // first entry of the first stored L
    let lines: Vec<&str> = samples.lines().collect();
    let mut row: Vec<String> = lines[2].split_whitespace().map(String::from).collect();
    let x: f64 = row[0].parse().unwrap();
    row[0] = idfactor::fmt_real(x + 1e-5);
    let mut tampered: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
    tampered[2] = row.join(" ");
    std::fs::write(&sample_file, tampered.join("\n")).unwrap();
    assert_eq!(verify().code, 3);
    std::fs::write(&sample_file, samples).unwrap();
    assert_eq!(verify().code, 0);
}

#[test]
fn factor_path_constant_and_vanishing_column() {
    let d = TempDir::new().unwrap();
    let input = p(&d, "c.path");
    write_path(&input, &MatrixPath::constant(Matrix::identity(30), 0.0, 1.0, 4).unwrap());
    let r = idfactor(&["factor-path", "--input", &input, "--output-prefix", &p(&d, "c"), "--grid", "101"]);
    assert_eq!((r.code, r.field("max_jump")), (0, Some("0.0000000000000000e0")));

    let mut dead = Matrix::identity(30);
    dead[(7, 7)] = 0.0;
    let input = p(&d, "z.path");
    write_path(&input, &MatrixPath::from_frames(vec![0.0, 1.0], vec![Matrix::identity(30), dead]).unwrap());
    let r = idfactor(&["factor-path", "--input", &input, "--output-prefix", &p(&d, "z")]);
    assert_eq!(r.code, 2, "{}", r.stdout);
}

#[test]
fn random_paths_pass() {
    let d = TempDir::new().unwrap();
    for seed in 0..5 {
        let input: PathBuf = d.path().join(format!("r{seed}"));
        let prefix = input.to_str().unwrap();
        let g = idfactor(&[
            "gen-path", "--kind", "random", "--N", "30", "--segments", "10", "--theta", "0.6", "--seed",
            &seed.to_string(), "--output-prefix", prefix,
        ]);
        assert_eq!(g.code, 0);
        let file = format!("{prefix}.path");
        let r = idfactor(&["factor-path", "--input", &file, "--output-prefix", prefix, "--grid", "201"]);
        assert_eq!(r.code, 0, "seed {seed}: {}{}", r.stdout, r.stderr);
        assert_eq!(idfactor(&["verify-path", "--input", &file, "--output-prefix", prefix, "--grid", "201"]).code, 0);
    }
}

#[test]
fn usage_and_io_errors_exit_one() {
    assert_eq!(idfactor(&["frobnicate"]).code, 1);
    assert_eq!(idfactor(&["factor", "--input", "/nonexistent/a.txt", "--output-prefix", "/tmp/x"]).code, 1);
    let d = TempDir::new().unwrap();
    let a = p(&d, "bad.txt");
    std::fs::write(&a, "2 2\n1 0\n0 nan\n").unwrap();
    let r = idfactor(&["factor", "--input", &a, "--output-prefix", &p(&d, "o")]);
    assert_eq!(r.code, 1);
    assert!(r.field("message").is_some());
    let r = idfactor(&["factor", "--input", &a, "--output-prefix", &p(&d, "o"), "--tol", "-1"]);
    assert_eq!(r.code, 1);
}
