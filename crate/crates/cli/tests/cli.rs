use std::path::Path;
use std::process::{Command, Output};

const CURVE: &str = "curve:0,-1,1,-10,-20,11";

fn hecke(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hecke"))
        .args(args)
        .output()
        .expect("spawn hecke")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[track_caller]
fn expect_code(out: &Output, code: i32) {
    assert_eq!(out.status.code(), Some(code), "stdout:\n{}\nstderr:\n{}", stdout(out), stderr(out));
}

/// Parses the canonical `k=.. N=..` file into (k, N, a(1..)).
fn parse_table(text: &str) -> (u32, u64, Vec<i128>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let (k, n) = header.split_once(' ').unwrap();
    let k = k.strip_prefix("k=").unwrap().parse().unwrap();
    let n = n.strip_prefix("N=").unwrap().parse().unwrap();
    let mut a = Vec::new();
    for (i, line) in lines.enumerate() {
        let (idx, val) = line.split_once(' ').unwrap();
        assert_eq!(idx.parse::<usize>().unwrap(), i + 1);
        a.push(val.parse().unwrap());
    }
    (k, n, a)
}

/// Coefficients of q prod (1 - q^n)^24 modulo `p`, indices 1..=len.
fn delta_mod(len: usize, p: i128) -> Vec<i128> {
    let mut c = vec![0i128; len];
    c[0] = 1;
    for n in 1..len {
        for _ in 0..24 {
            for i in (n..len).rev() {
                c[i] = (c[i] - c[i - n]).rem_euclid(p);
            }
        }
    }
    c
}

#[test]
fn coeffs_delta_matches_eta_product() {
    let out = hecke(&["coeffs", "--form", "level1:12", "--bound", "1000"]);
    expect_code(&out, 0);
    let (k, n, a) = parse_table(&stdout(&out));
    assert_eq!((k, n, a.len()), (12, 1, 1000));
    for p in [1_000_000_007i128, 998_244_353] {
        let oracle = delta_mod(1000, p);
        for (i, (x, y)) in a.iter().zip(&oracle).enumerate() {
            assert_eq!(x.rem_euclid(p), *y, "tau({}) mod {p}", i + 1);
        }
    }
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

/// `p + 1 - #E(F_p)` by enumerating every affine (x, y).
fn trace_by_enumeration(p: i64) -> i128 {
    let (a1, a2, a3, a4, a6) = (0i64, -1, 1, -10, -20);
    let mut affine = 0i64;
    for x in 0..p {
        for y in 0..p {
            let lhs = y * y + a1 * x * y + a3 * y;
            let rhs = x * x * x + a2 * x * x + a4 * x + a6;
            if (lhs - rhs).rem_euclid(p) == 0 {
                affine += 1;
            }
        }
    }
    (p + 1 - (affine + 1)) as i128
}

#[test]
fn coeffs_curve_to_file_matches_point_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("11a.txt");
    let out = hecke(&["coeffs", "--form", CURVE, "--bound", "500", "--out", path.to_str().unwrap()]);
    expect_code(&out, 0);
    assert!(stdout(&out).is_empty());
    let (k, n, a) = parse_table(&std::fs::read_to_string(&path).unwrap());
    assert_eq!((k, n, a.len()), (2, 11, 500));
    for p in (2..=500u64).filter(|&p| is_prime(p) && p != 11) {
        assert_eq!(a[p as usize - 1], trace_by_enumeration(p as i64), "a({p})");
    }
    // split multiplicative reduction at 11
    assert_eq!(a[10], 1);
    assert_eq!(a[6 - 1], a[1] * a[2]);
    assert_eq!(a[4 - 1], a[1] * a[1] - 2);
}

#[test]
fn unsupported_weight_and_bad_input_exit_with_two() {
    let out = hecke(&["coeffs", "--form", "level1:14"]);
    expect_code(&out, 2);
    assert!(stderr(&out).contains("unsupported weight 14"), "{}", stderr(&out));

    for args in [
        &["voronoi", "--form", "level1:12", "--x", "1e3:1e5"][..],
        &["voronoi", "--form", "level1:12", "--x", "1e5:1e3:10"],
        &["voronoi", "--form", "level1:12", "--x", "a:b:c"],
        &["voronoi", "--form", "level1:12"],
        &["voronoi", "--form", "level1:12", "--x", "1e4", "--M", "y"],
        &["coeffs", "--form", "maass:3"],
        &["coeffs", "--form", "level1:12", "--bound", "5"],
        &["coeffs", "--form", "level1:12", "--format", "xml"],
        &["coeffs"],
        &["signs", "--form", "level1:12"],
        &["intervals", "--form", "level1:12", "--x", "1e5", "--eps", "0.5"],
        &["voronoi", "--form", "level1:12", "--x", "1e4", "--bound", "100"],
        &["coeffs", "--form", "file:/nonexistent/table.txt"],
        &["verify", "--only", "11"],
        &["frobnicate"],
    ] {
        let out = hecke(args);
        expect_code(&out, 2);
        assert!(!stderr(&out).is_empty(), "{args:?}");
    }
}

#[test]
fn thread_count_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_hecke"))
        .args(["coeffs", "--form", "level1:12", "--bound", "20"])
        .env("HECKE_THREADS", "many")
        .output()
        .unwrap();
    expect_code(&out, 2);
    let out = Command::new(env!("CARGO_BIN_EXE_hecke"))
        .args(["coeffs", "--form", "level1:12", "--bound", "20"])
        .env("HECKE_THREADS", "1")
        .output()
        .unwrap();
    expect_code(&out, 0);
}

#[test]
fn intervals_at_one_hundred_thousand_pass() {
    let out = hecke(&["intervals", "--form", "level1:12", "--x", "1e5", "--C", "3", "--eps", "0.1", "--format", "json"]);
    expect_code(&out, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys[..7], ["x", "h", "plus", "minus", "threshold", "pass", "triple"]);
    assert_eq!(v["pass"], true);
    let (plus, minus) = (v["plus"].as_u64().unwrap(), v["minus"].as_u64().unwrap());
    assert!(plus.min(minus) as f64 >= v["threshold"].as_f64().unwrap());
    // threshold (N x)^(1/4 - eps) at N = 1
    assert!((v["threshold"].as_f64().unwrap() - 1e5f64.powf(0.15)).abs() < 1e-9);
    let triple: Vec<f64> = v["triple"].as_array().unwrap().iter().map(|t| t.as_f64().unwrap()).collect();
    assert!(triple.len() == 3 && 1e5 < triple[0] && triple[0] < triple[1] && triple[1] < triple[2]);
}

#[test]
fn intervals_failure_exits_with_one() {
    // a window of a handful of integers cannot hold (N x)^0.15 of each sign
    let out = hecke(&["intervals", "--form", "level1:12", "--x", "1e4", "--C", "0.01"]);
    expect_code(&out, 1);
    let text = stdout(&out);
    let row = text.lines().nth(1).unwrap();
    assert_eq!(row.split(',').nth(5), Some("false"), "{text}");
    // ...unless the window is below the configured floor
    let out = hecke(&["intervals", "--form", "level1:12", "--x", "1e4", "--C", "0.01", "--x-floor", "1e5"]);
    expect_code(&out, 0);
}

#[test]
fn voronoi_csv_rows() {
    let out = hecke(&["voronoi", "--form", "level1:12", "--x", "1e3:1e5:100", "--M", "x"]);
    expect_code(&out, 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,M,direct,main,residual,residual_over_x4"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 100);
    assert_eq!(rows[0][0], 1e3);
    assert_eq!(rows[99][0], 1e5);
    for r in &rows {
        let [x, m, direct, main, residual, scaled] = r[..] else { panic!("{r:?}") };
        assert_eq!(m, x.floor());
        assert!((direct - main - residual).abs() <= 1e-9 * (1.0 + direct.abs() + main.abs()), "{r:?}");
        assert!((residual / x.powf(0.25) - scaled).abs() <= 1e-9 * (1.0 + scaled.abs()));
        // the truncated formula tracks the sum to well within x^(1/4)
        assert!(scaled.abs() < 1.0, "{r:?}");
    }
    for w in rows.windows(2) {
        assert!(w[0][0] < w[1][0]);
    }
}

#[test]
fn voronoi_json_summary_and_policies() {
    let out = hecke(&["voronoi", "--form", "level1:12", "--x", "1e4:2e4:5", "--M", "x/10", "--format", "json"]);
    expect_code(&out, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for r in rows {
        assert_eq!(r["M"].as_f64().unwrap(), (r["x"].as_f64().unwrap() / 10.0).floor());
    }
    let max = rows.iter().map(|r| r["residual"].as_f64().unwrap().abs()).fold(0.0, f64::max);
    assert!((v["summary"]["max_abs_residual"].as_f64().unwrap() - max).abs() < 1e-9);
    assert_eq!(v["summary"]["points"], 5);

    let fixed = hecke(&["voronoi", "--form", "level1:12", "--x", "1e4", "--M", "250"]);
    expect_code(&fixed, 0);
    assert!(stdout(&fixed).lines().nth(1).unwrap().starts_with("10000,250,"));
}

#[test]
fn voronoi_is_deterministic_across_thread_counts() {
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_hecke"))
            .args(["voronoi", "--form", CURVE, "--x", "1e3:5e4:40", "--precision", "extended"])
            .env("HECKE_THREADS", threads)
            .output()
            .unwrap();
        expect_code(&out, 0);
        stdout(&out)
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn signs_small_bound_collapses_to_one_row() {
    let out = hecke(&["signs", "--form", "level1:12", "--bound", "10"]);
    expect_code(&out, 0);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    let fields: Vec<&str> = lines[1].split(',').collect();
    // tau(1..10) = 1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920
    assert_eq!(&fields[..3], ["10", "4", "6"]);
}

#[test]
fn signs_for_delta_up_to_a_million() {
    let out = hecke(&["signs", "--form", "level1:12", "--bound", "1000000", "--format", "json"]);
    expect_code(&out, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    let xs: Vec<u64> = rows.iter().map(|r| r["x"].as_u64().unwrap()).collect();
    assert_eq!(xs, [10, 100, 1000, 10_000, 100_000, 1_000_000]);
    let last = rows.last().unwrap();
    for key in ["lower_plus_density", "lower_minus_density"] {
        assert!(last[key].as_f64().unwrap() >= 0.202, "{key}: {last}");
    }
    for r in rows {
        assert!(r["lower_plus"].as_u64() <= r["plus"].as_u64());
        assert!(r["lower_minus"].as_u64() <= r["minus"].as_u64());
    }
    assert_eq!(v["pass"], true);
}

#[test]
fn signs_for_the_curve_skip_multiples_of_the_level() {
    let out = hecke(&["signs", "--form", CURVE, "--bound", "20000", "--format", "json"]);
    expect_code(&out, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for r in v["rows"].as_array().unwrap() {
        let x = r["x"].as_u64().unwrap();
        let nonzero = r["plus"].as_u64().unwrap() + r["minus"].as_u64().unwrap();
        assert!(nonzero <= x - x / 11, "{r}");
    }
    let b: Vec<u64> = v["b_set"].as_array().unwrap().iter().map(|e| e["value"].as_u64().unwrap()).collect();
    assert!(b.contains(&11) && b.contains(&2));
}

#[test]
fn bfree_csv_for_delta() {
    let out = hecke(&["bfree", "--form", "level1:12", "--bound", "10"]);
    expect_code(&out, 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,bfree,sign"));
    let signs: String = lines.map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(signs, "+-+-+--+--");
    // B = {2, 9, 25, 49, ...}: the odd squarefree numbers
    let members: Vec<&str> = text.lines().skip(1).filter(|l| l.split(',').nth(1) == Some("1")).collect();
    let n: Vec<&str> = members.iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(n, ["1", "3", "5", "7"]);
}

#[test]
fn config_file_sits_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# desk run\nform = level1:12\nx = 1e4\nformat = json\nC = 3\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let out = hecke(&["intervals", "--config", cfg]);
    expect_code(&out, 0);
    assert!(stdout(&out).trim_start().starts_with('{'));

    let out = hecke(&["intervals", "--config", cfg, "--format", "csv"]);
    expect_code(&out, 0);
    assert!(stdout(&out).starts_with("x,h,plus,minus"));

    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "colour = red\n").unwrap();
    expect_code(&hecke(&["intervals", "--config", bad.to_str().unwrap()]), 2);
    expect_code(&hecke(&["intervals", "--config", "/nonexistent.conf"]), 2);
}

#[test]
fn file_forms_round_trip_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("delta.txt");
    let p = path.to_str().unwrap();
    expect_code(&hecke(&["coeffs", "--form", "level1:12", "--bound", "3000", "--out", p]), 0);

    let args = |form: &str| hecke(&["voronoi", "--form", form, "--x", "100:2500:7"]);
    let from_file = args(&format!("file:{p}"));
    let generated = args("level1:12");
    expect_code(&from_file, 0);
    assert_eq!(stdout(&from_file), stdout(&generated));

    // the file is too short for x = 5000
    let out = hecke(&["voronoi", "--form", &format!("file:{p}"), "--x", "5000"]);
    expect_code(&out, 2);

    let broken = dir.path().join("broken.txt");
    std::fs::write(&broken, "k=12 N=1\n1 1\n2 -25\n3 252\n4 -1472\n").unwrap();
    let out = hecke(&["coeffs", "--form", &format!("file:{}", broken.display())]);
    expect_code(&out, 2);
    assert!(stderr(&out).contains(&format!("{}:", Path::new(&broken).display())), "{}", stderr(&out));
}

#[test]
fn verify_runs_selected_checks() {
    let out = hecke(&["verify", "--only", "8"]);
    expect_code(&out, 0);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("[PASS]  8 kernel identities"), "{text}");

    let out = hecke(&["verify", "--only", "8", "--format", "json"]);
    expect_code(&out, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v[0]["id"], 8);
    assert_eq!(v[0]["passed"], true);
}
