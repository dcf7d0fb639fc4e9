use std::path::Path;
use std::process::{Command, Output};

use pointsynth::geometry::read_pattern;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pointsynth")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("small.toml");
    std::fs::write(
        &path,
        "seed = 3\nn_outputs = 3\n\n[synthesis]\nn = 32\niterations_per_stage = 15\n\n[random_search]\niterations_per_point = 10\n\n[eval]\nk_max = 8\n",
    )
    .unwrap();
    path
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> std::path::PathBuf {
    let out = dir.join(name);
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", p(&out)]);
    let o = run(&full);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn gen_binomial_writes_requested_count() {
    let tmp = TempDir::new().unwrap();
    let f = gen(tmp.path(), "b.txt", &["--kind", "binomial", "--n", "100", "--seed", "7"]);
    let text = std::fs::read_to_string(&f).unwrap();
    assert!(text.starts_with("# pointsynth v1 s=0.5 n=100\n"));
    assert_eq!(read_pattern(&f).unwrap().len(), 100);
}

#[test]
fn gen_hardcore_respects_radius() {
    let tmp = TempDir::new().unwrap();
    let f = gen(tmp.path(), "m.txt", &["--kind", "matern2", "--R", "0.02", "--rate", "800", "--seed", "2"]);
    let pat = read_pattern(&f).unwrap();
    assert!(pat.len() > 10);
    let w = pat.window();
    let pts = pat.points();
    for i in 0..pts.len() {
        for j in 0..i {
            assert!(w.dist(pts[i], pts[j]) >= 0.02);
        }
    }
}

#[test]
fn gen_rejects_bad_kind_and_foreign_flags() {
    assert_eq!(code(&run(&["gen", "--kind", "nope"])), 2);
    assert_eq!(code(&run(&["gen", "--kind", "binomial", "--r0", "0.1"])), 2);
    assert_eq!(code(&run(&["gen", "--kind", "poisson", "--rate", "x"])), 2);
    assert_eq!(code(&run(&["gen"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
}

#[test]
fn help_documents_flags() {
    let o = run(&["synth", "--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for flag in ["--observation", "--config", "--method", "--n-outputs", "--seed", "--out-dir", "gd-wph", "rs-nnd", "rs-wph"] {
        assert!(text.contains(flag), "missing {flag}");
    }
    let o = run(&["gen", "--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    for flag in ["--kind", "--n", "--rate", "--parent-rate", "--edge-rate", "--r0", "--perimeter-rate", "--R", "--cluster-radius", "--mean-offspring"] {
        assert!(text.contains(flag), "missing {flag}");
    }
}

#[test]
fn synth_outputs_are_distinct_and_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let obs = gen(tmp.path(), "obs.txt", &["--kind", "binomial", "--n", "40", "--seed", "1"]);
    for method in ["gd-wph", "rs-nnd"] {
        let a = tmp.path().join(format!("{method}_a"));
        let b = tmp.path().join(format!("{method}_b"));
        for d in [&a, &b] {
            let o = run(&["synth", "--observation", p(&obs), "--config", p(&cfg), "--method", method, "--out-dir", p(d)]);
            assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        }
        let files: Vec<Vec<u8>> = (0..3).map(|i| std::fs::read(a.join(format!("synth_{i:03}.txt"))).unwrap()).collect();
        assert_ne!(files[0], files[1]);
        assert_ne!(files[1], files[2]);
        for i in 0..3 {
            assert_eq!(files[i], std::fs::read(b.join(format!("synth_{i:03}.txt"))).unwrap());
            let trace = std::fs::read_to_string(a.join(format!("trace_{i:03}.csv"))).unwrap();
            assert!(trace.starts_with("iteration,sigma_stage,energy,relative_energy,grad_norm,wall_time_ms\n"));
            assert_eq!(read_pattern(&a.join(format!("synth_{i:03}.txt"))).unwrap().len(), 40);
        }
        assert_eq!(std::fs::read_to_string(a.join("config.toml")).unwrap(), std::fs::read_to_string(&cfg).unwrap());
        assert!(a.join("config.resolved.toml").exists());
    }
}

#[test]
fn synth_config_errors_exit_2_with_reason() {
    let tmp = TempDir::new().unwrap();
    let obs = gen(tmp.path(), "obs.txt", &["--kind", "binomial", "--n", "20"]);
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[synthesis]\nn = 48\n").unwrap();
    let o = run(&["synth", "--observation", p(&obs), "--config", p(&bad), "--out-dir", p(&tmp.path().join("x"))]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("power of two"));
    std::fs::write(&bad, "[synthesis]\nn = 16\nj = 4\n").unwrap();
    let o = run(&["synth", "--observation", p(&obs), "--config", p(&bad), "--out-dir", p(&tmp.path().join("x"))]);
    assert_eq!(code(&o), 2);
    let o = run(&["synth", "--observation", p(&tmp.path().join("none.txt")), "--out-dir", p(&tmp.path().join("x"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn eval_three_point_diagram() {
    let tmp = TempDir::new().unwrap();
    let f = tmp.path().join("three.txt");
    std::fs::write(&f, "# pointsynth v1 s=0.5 n=3\n0.1,0.1\n-0.2,0.05\n0.0,0.3\n").unwrap();
    let out = tmp.path().join("e");
    let o = run(&["eval", p(&f), "--metrics", "pd", "--out-dir", p(&out)]);
    assert_eq!(code(&o), 0);
    let pd = std::fs::read_to_string(out.join("pd.csv")).unwrap();
    let rows: Vec<&str> = pd.lines().collect();
    assert_eq!(rows[0], "birth,death,dim");
    assert_eq!(rows.len(), 4);
    assert!(rows[1..].iter().all(|r| r.ends_with(",0")));
    assert!(rows[1..].iter().any(|r| r.starts_with("0e0,5e-1,")));
}

#[test]
fn eval_missing_file_exits_2() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["eval", p(&tmp.path().join("missing.txt")), "--out-dir", p(&tmp.path().join("e"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn eval_poisson_spectrum_is_flat() {
    let tmp = TempDir::new().unwrap();
    let files: Vec<_> = (0..10)
        .map(|i| gen(tmp.path(), &format!("p{i}.txt"), &["--kind", "poisson", "--rate", "1000", "--seed", &i.to_string()]))
        .collect();
    let out = tmp.path().join("e");
    let mut args = vec!["eval"];
    args.extend(files.iter().map(|f| p(f)));
    args.extend_from_slice(&["--metrics", "spectrum,scdf", "--out-dir", p(&out)]);
    assert_eq!(code(&run(&args)), 0);
    let csv = std::fs::read_to_string(out.join("spectrum.csv")).unwrap();
    let ps: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(ps.len(), 50);
    let mean = ps.iter().sum::<f64>() / ps.len() as f64;
    assert!((mean - 1.0).abs() < 0.1, "mean P = {mean}");
    let scdf = std::fs::read_to_string(out.join("scdf.csv")).unwrap();
    assert!(scdf.starts_with("r,H,ci_lo,ci_hi\n"));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["patterns"].as_array().unwrap().len(), 10);
}

#[test]
fn compare_shapes_and_identical_groups() {
    let tmp = TempDir::new().unwrap();
    let groups: Vec<_> = ["a", "b", "c"].iter().map(|g| tmp.path().join(g)).collect();
    for (g, dir) in groups.iter().enumerate() {
        std::fs::create_dir(dir).unwrap();
        for i in 0..10 {
            let seed = if g == 2 { 100 + i } else { i };
            gen(dir, &format!("p{i}.txt"), &["--kind", "binomial", "--n", "30", "--seed", &seed.to_string()]);
        }
    }
    let out = tmp.path().join("cmp");
    let o = run(&["compare", p(&groups[0]), p(&groups[1]), p(&groups[2]), "--out-dir", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dm = std::fs::read_to_string(out.join("dist_matrix.csv")).unwrap();
    assert_eq!(dm.lines().count(), 31);
    assert_eq!(dm.lines().nth(1).unwrap().split(',').count(), 31);
    let mds = std::fs::read_to_string(out.join("mds.csv")).unwrap();
    assert_eq!(mds.lines().next().unwrap(), "label,x,y");
    assert_eq!(mds.lines().count(), 31);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let pairs = summary["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 3);
    let ab = pairs[0]["mean_cross_distance"].as_f64().unwrap();
    let ac = pairs[1]["mean_cross_distance"].as_f64().unwrap();
    assert!(ab > 0.0 && ac > 0.0);

    // groups holding the same single pattern are at distance 0
    let one = tmp.path().join("one");
    std::fs::create_dir(&one).unwrap();
    std::fs::copy(groups[0].join("p0.txt"), one.join("p0.txt")).unwrap();
    let out = tmp.path().join("cmp2");
    assert_eq!(code(&run(&["compare", p(&one), p(&one), "--out-dir", p(&out)])), 0);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pairs"][0]["mean_cross_distance"].as_f64().unwrap(), 0.0);

    assert_eq!(code(&run(&["compare", p(&one), "--out-dir", p(&out)])), 2);
}

#[test]
fn gradcheck_passes_and_names_corrupted_stage() {
    let o = run(&["gradcheck", "--fast"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4);

    let o = run(&["gradcheck", "--fast", "--corrupt-stage", "energy"]);
    assert_eq!(code(&o), 1);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().any(|l| l.starts_with("FAIL energy")));
    assert!(!text.lines().any(|l| l.starts_with("FAIL rasterizer")));
    assert_eq!(code(&run(&["gradcheck", "--corrupt-stage", "bogus"])), 2);
}
