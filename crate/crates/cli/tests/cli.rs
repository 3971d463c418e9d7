use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use locfrac::conditions::{check_preset, Preset, SystemSummary};
use serde_json::Value;
use tempfile::TempDir;

fn locfrac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locfrac")).args(args).output().expect("run locfrac")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("bad json ({e}): {}\nstderr: {}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
    })
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Two halves of `[0, 1]` with the given `λ` and `S` tables.
fn halving(lambda: [&str; 2], scaling: [&str; 2], extra: &str) -> String {
    let mut t = String::from("[domain]\nlower = [0.0]\nupper = [1.0]\n");
    for (i, tau) in ["0.0", "0.5"].iter().enumerate() {
        t += &format!(
            "\n[[piece]]\ngamma = 0.5\ntau = [{tau}]\nlambda = {}\nscaling = {}\n",
            lambda[i], scaling[i]
        );
    }
    t + extra
}

fn constant_halving(lambda: f64, s: f64, extra: &str) -> String {
    let l = format!("{{ constant = {lambda:?} }}");
    let c = format!("{{ constant = {s:?} }}");
    halving([&l, &l], [&c, &c], extra)
}

fn read_csv(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn validate_accepts_the_halving_partition() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", &constant_halving(1.0, 0.5, ""));
    let o = locfrac(&["validate", "--config", s(&cfg)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("valid (exact)"));
}

#[test]
fn validate_names_overlapping_pieces() {
    let dir = TempDir::new().unwrap();
    let text = constant_halving(1.0, 0.5, "").replace("tau = [0.5]", "tau = [0.4]");
    let cfg = write(&dir, "c.toml", &text);
    let o = locfrac(&["validate", "--config", s(&cfg)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("overlapping pair: pieces 1 and 2"));
}

#[test]
fn malformed_documents_exit_with_two_and_a_position() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", "[domain\nlower = [0.0]\n");
    let o = locfrac(&["validate", "--config", s(&cfg)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("c.toml:1:"), "{}", stderr(&o));

    let typo = constant_halving(1.0, 0.5, "\n[solver]\nlevl = 3\n");
    let cfg = write(&dir, "typo.toml", &typo);
    let o = locfrac(&["solve", "--config", s(&cfg), "--out", s(&dir.path().join("f.csv"))]);
    assert_eq!(code(&o), 2);
    let line = typo.lines().position(|l| l.starts_with("levl")).unwrap() + 1;
    assert!(stderr(&o).contains(&format!("typo.toml:{line}:1")), "{}", stderr(&o));
    assert!(stderr(&o).contains("levl"));
}

#[test]
fn solve_constant_system() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", &constant_halving(1.0, 0.5, "[solver]\nlevel = 8\n"));
    let out = dir.path().join("f.csv");
    let o = locfrac(&["solve", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = stdout_json(&o);
    assert_eq!(r["solver"]["converged"], true);
    let (header, rows) = read_csv(&out);
    assert_eq!(header, "x,value");
    assert_eq!(rows.len(), 257);
    assert!(rows.iter().all(|r| (r[1] - 2.0).abs() < 1e-10));
}

#[test]
fn solve_affine_system_at_a_quarter() {
    // f(0) = 0, f(1/2) = λ₂(0) + f(0)/2 = 1, f(1/4) = λ₁(1/2) + f(1/2)/2 = 1.
    let dir = TempDir::new().unwrap();
    let text = halving(
        ["{ polynomial = [0.0, 1.0] }", "{ polynomial = [1.0, -1.0] }"],
        ["{ constant = 0.5 }", "{ constant = 0.5 }"],
        "",
    );
    let cfg = write(&dir, "c.toml", &text);
    let out = dir.path().join("f.csv");
    let o = locfrac(&["solve", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (_, rows) = read_csv(&out);
    let row = rows.iter().find(|r| r[0] == 0.25).unwrap();
    assert!((row[1] - 1.0).abs() < 1e-9);
}

#[test]
fn solve_with_zero_scaling_takes_one_or_two_iterations() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", &constant_halving(0.7, 0.0, ""));
    let o = locfrac(&["solve", "--config", s(&cfg), "--out", s(&dir.path().join("f.csv"))]);
    assert_eq!(code(&o), 0);
    let it = stdout_json(&o)["solver"]["iterations"].as_u64().unwrap();
    assert!(it == 1 || it == 2);
}

#[test]
fn solve_refuses_non_contractions() {
    let dir = TempDir::new().unwrap();
    let text = halving(
        ["{ constant = 1.0 }", "{ constant = 1.0 }"],
        ["{ constant = 0.5 }", "{ constant = -1.25 }"],
        "",
    );
    let cfg = write(&dir, "c.toml", &text);
    let out = dir.path().join("f.csv");
    let o = locfrac(&["solve", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("1.25"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn check_uniform_system() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", &constant_halving(1.0, 0.4, ""));
    let o = locfrac(&["check", "--config", s(&cfg), "--space", "sobolev:k=1,p=2", "--space", "hoelder:s=0.5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = stdout_json(&o);
    let entries = r["conditions"].as_array().unwrap();
    assert_eq!(entries.len(), 2);
    let besov_side = entries[0]["reports"]
        .as_array()
        .unwrap()
        .iter()
        .find(|x| x["family"] == "besov")
        .unwrap();
    assert!((besov_side["uniform_formula"]["value"].as_f64().unwrap() - 0.64).abs() < 1e-12);
    assert_eq!(besov_side["verdict"], "sufficient");
    let h = &entries[1]["reports"][0];
    assert!((h["eta_norm"].as_f64().unwrap() - 0.4 * 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(h["verdict"], "sufficient");
}

#[test]
fn check_verdicts_match_the_library() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", &constant_halving(1.0, 0.45, ""));
    let presets = [
        ("sobolev:k=1,p=2", Preset::Sobolev { k: 1, p: 2.0 }),
        ("slodeckij:s=0.7,p=2", Preset::Slodeckij { s: 0.7, p: 2.0 }),
        ("bessel:s=0.75,p=2", Preset::Bessel { s: 0.75, p: 2.0 }),
        ("hardy:p=1", Preset::LocalHardy { p: 1.0 }),
        ("lebesgue:p=inf", Preset::Lebesgue { p: f64::INFINITY }),
    ];
    let mut args = vec!["check", "--config", s(&cfg)];
    for (q, _) in &presets {
        args.extend(["--space", q]);
    }
    let r = stdout_json(&locfrac(&args));
    let sum = SystemSummary::uniform_constant(1, vec![0.5; 2], &[0.45, 0.45]).unwrap();
    for (entry, (_, preset)) in r["conditions"].as_array().unwrap().iter().zip(presets) {
        let lib = check_preset(&sum, preset).unwrap();
        let cli = entry["reports"].as_array().unwrap();
        assert_eq!(cli.len(), lib.len());
        for (c, l) in cli.iter().zip(&lib) {
            assert_eq!(c["verdict"], l.verdict.to_string());
            assert_eq!(c["xi_norm"].as_f64().unwrap(), l.xi_norm);
        }
    }
}

#[test]
fn check_zero_scalings_are_sufficient_everywhere() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", &constant_halving(1.0, 0.0, ""));
    let o = locfrac(&[
        "check",
        "--config",
        s(&cfg),
        "--space",
        "besov:p=2,q=2,s=3.5",
        "--space",
        "triebel:p=1,q=2,s=2",
        "--space",
        "hoelder:s=0.5",
        "--space",
        "lebesgue:p=0.5",
    ]);
    let r = stdout_json(&o);
    for e in r["conditions"].as_array().unwrap() {
        for rep in e["reports"].as_array().unwrap() {
            assert_eq!(rep["verdict"], "sufficient", "{}", e["query"]);
        }
    }
}

#[test]
fn check_reports_bad_queries_per_entry() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "c.toml",
        &constant_halving(1.0, 0.4, "\n[[space]]\nkind = \"besov\"\np = 0.5\nq = 1.0\ns = 0.5\n"),
    );
    let o = locfrac(&["check", "--config", s(&cfg), "--space", "hoelder:s=0.5"]);
    assert_eq!(code(&o), 0);
    let r = stdout_json(&o);
    let entries = r["conditions"].as_array().unwrap();
    assert_eq!(entries.len(), 2);
    assert!(entries[0]["error"].as_str().unwrap().contains("sigma"));
    assert_eq!(entries[1]["reports"][0]["verdict"], "sufficient");
}

#[test]
fn bad_space_flag_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", &constant_halving(1.0, 0.4, ""));
    let o = locfrac(&["check", "--config", s(&cfg), "--space", "besov:p=2"]);
    assert_eq!(code(&o), 2);
}

fn hat_csv(dir: &TempDir, level: u32) -> PathBuf {
    let n = 1usize << level;
    let mut text = String::from("x,value\n");
    for j in 0..=n {
        let x = j as f64 / n as f64;
        text += &format!("{x:?},{:?}\n", x.min(1.0 - x));
    }
    write(dir, "hat.csv", &text)
}

#[test]
fn seminorm_of_a_hat_in_direct_mode() {
    let dir = TempDir::new().unwrap();
    let input = hat_csv(&dir, 12);
    let o = locfrac(&["seminorm", "--input", s(&input), "--space", "hoelder:s=1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = stdout_json(&o);
    let v = r["seminorms"][0]["estimate"]["value"].as_f64().unwrap();
    assert!((v - 2.0).abs() <= 1e-3, "{v}");
}

#[test]
fn seminorm_of_zero_is_zero() {
    let dir = TempDir::new().unwrap();
    let text: String = std::iter::once("x,value\n".to_string())
        .chain((0..=64).map(|j| format!("{:?},0.0\n", j as f64 / 64.0)))
        .collect();
    let input = write(&dir, "z.csv", &text);
    let o = locfrac(&["seminorm", "--input", s(&input), "--space", "besov:p=2,q=2,s=0.5", "--space", "triebel:p=1,q=2,s=1.5"]);
    let r = stdout_json(&o);
    for e in r["seminorms"].as_array().unwrap() {
        assert_eq!(e["estimate"]["value"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn seminorm_rejects_h_min_below_the_spacing() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", &constant_halving(1.0, 0.4, "[solver]\nlevel = 6\n[seminorm]\nh_min = 0.001\n"));
    let o = locfrac(&["seminorm", "--config", s(&cfg), "--space", "hoelder:s=0.5"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("0.015625"), "{}", stderr(&o));
}

#[test]
fn seminorm_of_piecewise_polynomials_vanishes_inside_pieces() {
    let dir = TempDir::new().unwrap();
    let text = halving(
        ["{ polynomial = [0.0, 0.0, 1.0] }", "{ polynomial = [1.0, -1.0] }"],
        ["{ constant = 0.0 }", "{ constant = 0.0 }"],
        "[solver]\nlevel = 10\n",
    );
    let cfg = write(&dir, "c.toml", &text);
    let o = locfrac(&["seminorm", "--config", s(&cfg), "--space", "besov:p=2,q=2,s=2.5,order=3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let e = &stdout_json(&o)["seminorms"][0];
    let interior = e["interior"]["value"].as_f64().unwrap();
    let boundary = e["boundary"]["value"].as_f64().unwrap();
    assert!(interior < 1e-9, "{interior}");
    assert!(boundary > 0.1, "{boundary}");
}

#[test]
fn seminorm_reuses_a_fresh_fixed_point() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", &constant_halving(1.0, 0.4, "[solver]\nlevel = 8\n"));
    let out = dir.path().join("f.csv");
    assert_eq!(code(&locfrac(&["solve", "--config", s(&cfg), "--out", s(&out)])), 0);
    let args = ["seminorm", "--config", s(&cfg), "--fixed-point", s(&out), "--space", "hoelder:s=0.5"];
    let r = stdout_json(&locfrac(&args));
    assert_eq!(r["solver"]["source"], "cache");
    assert_eq!(r["warnings"].as_array().unwrap().len(), 0);

    let text = std::fs::read_to_string(&out).unwrap();
    let (head, tail) = text.split_once("\n0.0,").unwrap();
    std::fs::write(&out, format!("{head}\n0.0,9{tail}")).unwrap();
    let r = stdout_json(&locfrac(&args));
    assert_eq!(r["solver"]["source"], "solved");
    assert!(r["warnings"][0].as_str().unwrap().contains("changed"));

    let other = write(&dir, "d.toml", &constant_halving(1.0, 0.3, "[solver]\nlevel = 8\n"));
    assert_eq!(code(&locfrac(&["solve", "--config", s(&cfg), "--out", s(&out)])), 0);
    let r = stdout_json(&locfrac(&["seminorm", "--config", s(&other), "--fixed-point", s(&out), "--space", "hoelder:s=0.5"]));
    assert_eq!(r["solver"]["source"], "solved");
}

#[test]
fn seminorm_writes_the_h_profile() {
    let dir = TempDir::new().unwrap();
    let input = hat_csv(&dir, 8);
    let prof = dir.path().join("p.csv");
    let o = locfrac(&["seminorm", "--input", s(&input), "--space", "besov:p=2,q=2,s=0.5", "--profile", s(&prof)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = read_csv(&prof);
    assert_eq!(header, "space,h,theta,value");
    assert!(!rows.is_empty());
    assert!(rows.windows(2).all(|w| w[0][1] <= w[1][1] || w[1][2] != w[0][2]));
}

#[test]
fn attractor_of_the_halving_ifs_settles_geometrically() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", &constant_halving(1.0, 0.5, ""));
    let out = dir.path().join("k.csv");
    let o = locfrac(&["attractor", "--config", s(&cfg), "--steps", "12", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = read_csv(&dir.path().join("k.distances.csv"));
    assert_eq!(header, "step,distance,floor,points");
    assert_eq!(rows.len(), 12);
    for r in &rows {
        assert!(r[1] <= 0.5f64.powi(r[0] as i32 - 1) + 1e-15, "{r:?}");
    }
}

#[test]
fn graph_attractor_of_the_constant_system_is_the_line_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", &constant_halving(1.0, 0.5, "[attractor]\nmode = \"graph\"\nsteps = 30\n"));
    let out = dir.path().join("k.csv");
    let o = locfrac(&["attractor", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = read_csv(&out);
    assert_eq!(header, "x,y");
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| (r[1] - 2.0).abs() < 1e-6));
}

#[test]
fn zero_steps_echo_the_initial_set() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", &constant_halving(1.0, 0.5, "[attractor]\nrandom_points = 10\n"));
    let out = dir.path().join("k.csv");
    let o = locfrac(&["attractor", "--config", s(&cfg), "--steps", "0", "--seed", "3", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let (_, rows) = read_csv(&out);
    assert_eq!(rows.len(), 10);
    assert_eq!(stdout_json(&o)["attractor"]["initial_points"], 10);
}

#[test]
fn collapsing_attractor_writes_an_empty_cloud() {
    let dir = TempDir::new().unwrap();
    let text = "[domain]\nlower = [0.0]\nupper = [1.0]\n\n[[piece]]\nsubdomain = { lower = [0.0], upper = [0.25] }\n\
                gamma = 0.5\ntau = [0.75]\nlambda = { constant = 0.0 }\nscaling = { constant = 0.0 }\n";
    let cfg = write(&dir, "c.toml", text);
    let out = dir.path().join("k.csv");
    let o = locfrac(&["attractor", "--config", s(&cfg), "--steps", "5", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "x\n");
    assert_eq!(stdout_json(&o)["attractor"]["final_points"], 0);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", &constant_halving(1.0, 0.3, "[solver]\nlevel = 9\n"));
    let mut seen = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let f = dir.path().join(format!("f{i}.csv"));
        let k = dir.path().join(format!("k{i}.csv"));
        let solve = locfrac(&["--threads", threads, "solve", "--config", s(&cfg), "--out", s(&f)]);
        let att = locfrac(&["attractor", "--threads", threads, "--config", s(&cfg), "--seed", "11", "--out", s(&k)]);
        let check = locfrac(&["check", "--config", s(&cfg), "--space", "sobolev:k=1,p=2"]);
        seen.push((
            std::fs::read(&f).unwrap(),
            std::fs::read(&k).unwrap(),
            std::fs::read(dir.path().join(format!("k{i}.distances.csv"))).unwrap(),
            check.stdout,
            std::fs::read_to_string(dir.path().join(format!("f{i}.csv.sha256"))).unwrap().contains("system"),
        ));
        assert_eq!(code(&solve), 0);
        assert_eq!(code(&att), 0);
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn sample_configs_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["halving.toml", "affine.toml", "quadrants.toml"] {
        let o = locfrac(&["validate", "--config", s(&root.join(name))]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stdout));
    }
}
