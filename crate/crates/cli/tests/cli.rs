use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tribody"));
    c.env_remove("TRIBODY_THREADS");
    c
}

fn base_config() -> Value {
    json!({
        "potential": {"kind": "square", "height": 1.0, "a": 0.5},
        "energy": {"window": [0.5, 2.0], "target": 1.0},
        "eps_ladder": [0.2, 0.1, 0.05],
        "grid": {"half_width": 6.0, "n_per_axis": 24},
        "cutoff": 6.0,
        "output_dir": "out",
        "seed": 0
    })
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    p
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn summary(dir: &Path, out: &str, command: &str) -> Value {
    let text = fs::read_to_string(dir.join(out).join(format!("{command}_summary.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_reports_ok_with_normalized_echo() {
    let dir = TempDir::new().unwrap();
    let mut cfg = base_config();
    cfg["channel"] = json!({"direction": [3.0, 4.0]});
    write_config(dir.path(), "c.json", &cfg);
    let o = run(dir.path(), &["validate", "--config", "c.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let (first, rest) = text.split_once('\n').unwrap();
    assert_eq!(first, "ok");
    let echo: Value = serde_json::from_str(rest).unwrap();
    assert_eq!(echo["energy"]["target"], json!(1.0));
    // defaults filled in and derived values canonical
    assert_eq!(echo["schwartz"]["systems"], json!(100));
    assert_eq!(echo["separation"]["t_values"], json!([4.0, 6.0, 8.0, 12.0]));
    assert_eq!(echo["channel"]["direction"], json!([0.6, 0.8]));
}

#[test]
fn missing_energy_window_is_named() {
    let dir = TempDir::new().unwrap();
    let mut cfg = base_config();
    cfg["energy"] = json!({"target": 1.0});
    write_config(dir.path(), "c.json", &cfg);
    let o = run(dir.path(), &["validate", "c.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("energy.window"), "{}", stderr(&o));
}

#[test]
fn missing_section_is_named() {
    let dir = TempDir::new().unwrap();
    let mut cfg = base_config();
    cfg.as_object_mut().unwrap().remove("energy");
    write_config(dir.path(), "c.json", &cfg);
    let o = run(dir.path(), &["validate", "c.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("energy"), "{}", stderr(&o));
}

#[test]
fn energy_outside_window_is_a_range_violation() {
    let dir = TempDir::new().unwrap();
    let mut cfg = base_config();
    cfg["energy"]["target"] = json!(3.0);
    write_config(dir.path(), "c.json", &cfg);
    let o = run(dir.path(), &["validate", "c.json"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("energy.target") && e.contains("outside the window"), "{e}");
}

#[test]
fn every_range_violation_is_listed() {
    let dir = TempDir::new().unwrap();
    let mut cfg = base_config();
    cfg["potential"]["height"] = json!(-1.0);
    cfg["eps_ladder"] = json!([0.1, 0.2]);
    cfg["grid"]["n_per_axis"] = json!(1);
    write_config(dir.path(), "c.json", &cfg);
    let o = run(dir.path(), &["validate", "c.json"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    for field in ["potential.height", "eps_ladder", "grid.n_per_axis"] {
        assert!(e.contains(field), "{field} missing from: {e}");
    }
}

#[test]
fn unknown_fields_and_missing_files_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let mut cfg = base_config();
    cfg["grid"]["spacing"] = json!(0.1);
    write_config(dir.path(), "c.json", &cfg);
    let o = run(dir.path(), &["validate", "c.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid"), "{}", stderr(&o));
    assert_eq!(run(dir.path(), &["validate", "absent.json"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["run", "onebody"]).status.code(), Some(2));
}

#[test]
fn free_onebody_transmission_is_identically_one() {
    let dir = TempDir::new().unwrap();
    let mut cfg = base_config();
    cfg["potential"] = json!({"kind": "zero"});
    write_config(dir.path(), "c.json", &cfg);
    let o = run(dir.path(), &["run", "onebody", "c.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rd = csv::Reader::from_path(dir.path().join("out/onebody.csv")).unwrap();
    let h = rd.headers().unwrap().clone();
    let (re, im) = (h.iter().position(|c| c == "s_re").unwrap(), h.iter().position(|c| c == "s_im").unwrap());
    let mut rows = 0;
    for r in rd.records() {
        let r = r.unwrap();
        assert_eq!(r[re].parse::<f64>().unwrap(), 1.0);
        assert_eq!(r[im].parse::<f64>().unwrap(), 0.0);
        rows += 1;
    }
    assert_eq!(rows, 40);
}

#[test]
fn barrier_onebody_obeys_wronskian_law() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), "c.json", &base_config());
    let o = run(dir.path(), &["run", "onebody", "--config", "c.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(dir.path(), "out", "onebody");
    assert!(s["results"]["max_wronskian_law_defect"].as_f64().unwrap() <= 1e-8);
    assert_eq!(s["results"]["checks"]["conjugate_in_k"], json!(true));
}

#[test]
fn summary_embeds_config_versions_and_timings() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), "c.json", &base_config());
    let o = run(dir.path(), &["run", "schwartz-check", "c.json", "--seed", "7", "--out", "elsewhere"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(dir.path(), "elsewhere", "schwartz-check");
    assert_eq!(s["command"], json!("schwartz-check"));
    assert_eq!(s["config"]["seed"], json!(7));
    assert_eq!(s["config"]["output_dir"], json!("elsewhere"));
    assert_eq!(s["config"]["schwartz"]["dim"], json!(6));
    assert!(s["versions"]["tribody_core"].is_string());
    assert!(s["timings"]["total_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(s["artifacts"], json!(["schwartz.csv"]));
    assert!(s["results"]["max_residual"].as_f64().unwrap() <= 1e-10);
    // no temporary files are left behind
    for e in fs::read_dir(dir.path().join("elsewhere")).unwrap() {
        let name = e.unwrap().file_name().into_string().unwrap();
        assert!(!name.starts_with('.'), "stray {name}");
    }
}

#[test]
fn identical_config_and_seed_give_identical_csv() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), "c.json", &base_config());
    for cmd in ["schwartz-check", "lq-check"] {
        let a = run(dir.path(), &["run", cmd, "c.json", "--out", "a"]);
        let b = run(dir.path(), &["run", cmd, "c.json", "--out", "b"]);
        assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
        assert_eq!(b.status.code(), Some(0), "{}", stderr(&b));
    }
    for name in ["schwartz.csv", "lq.csv"] {
        let x = fs::read(dir.path().join("a").join(name)).unwrap();
        let y = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    // a different seed changes the random directions
    let c = run(dir.path(), &["run", "lq-check", "c.json", "--out", "c", "--seed", "1"]);
    assert_eq!(c.status.code(), Some(0));
    assert_ne!(
        summary(dir.path(), "a", "lq-check")["results"]["directions"],
        summary(dir.path(), "c", "lq-check")["results"]["directions"]
    );
}

#[test]
fn thread_count_from_flag_or_environment() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), "c.json", &base_config());
    let o = run(dir.path(), &["run", "holder-check", "c.json", "--threads", "1", "--out", "a"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(summary(dir.path(), "a", "holder-check")["threads"], json!(1));
    let o = bin()
        .current_dir(dir.path())
        .env("TRIBODY_THREADS", "2")
        .args(["run", "holder-check", "c.json", "--out", "b"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(summary(dir.path(), "b", "holder-check")["threads"], json!(2));
    assert_eq!(run(dir.path(), &["run", "holder-check", "c.json", "--threads", "0"]).status.code(), Some(2));
}

#[test]
fn tabulated_potential_resolves_against_the_config_directory() {
    let dir = TempDir::new().unwrap();
    fs::create_dir(dir.path().join("cfg")).unwrap();
    fs::write(dir.path().join("cfg/v.txt"), "# x v\n-0.5 1\n0 1\n0.25 1\n0.5 1\n").unwrap();
    let mut cfg = base_config();
    cfg["potential"] = json!({"kind": "tabulated", "path": "v.txt"});
    write_config(&dir.path().join("cfg"), "c.json", &cfg);
    let o = run(dir.path(), &["run", "onebody", "cfg/c.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(summary(dir.path(), "out", "onebody")["results"]["max_wronskian_law_defect"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn singular_finite_rank_system_exits_with_code_3() {
    let dir = TempDir::new().unwrap();
    let one = json!([[1.0, 0.0]]);
    let zero = json!([[0.0, 0.0]]);
    let half = json!([[0.5, 0.0]]);
    let sys = json!({
        "phi": [one, one, one],
        "psi": [[[], half, half], [zero, [], zero], [zero, zero, []]],
    });
    fs::write(dir.path().join("sys.json"), sys.to_string()).unwrap();
    let mut cfg = base_config();
    cfg["pairs"] = json!([0]);
    cfg["cutoff"] = json!(2.0);
    cfg["separation"] = json!({"finite_rank_system": "sys.json"});
    write_config(dir.path(), "c.json", &cfg);
    let o = run(dir.path(), &["run", "separate", "c.json"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("ill-conditioned"), "{}", stderr(&o));
}

#[test]
fn unstable_far_field_exits_with_code_4() {
    // along a barrier band the kernel decays faster than an outgoing wave
    let dir = TempDir::new().unwrap();
    let mut cfg = base_config();
    cfg["pairs"] = json!([0]);
    cfg["eigenfunction"] =
        json!({"angle": std::f64::consts::FRAC_PI_2, "y_far": 12.0, "band_half_length": 30.0, "x_points": 2, "x_max": 0.25});
    write_config(dir.path(), "c.json", &cfg);
    let o = run(dir.path(), &["run", "eigenfunction", "c.json"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("far field unstable"), "{}", stderr(&o));
}

#[test]
fn free_sweep_matches_momentum_space_reference() {
    let dir = TempDir::new().unwrap();
    let mut cfg = base_config();
    cfg["potential"] = json!({"kind": "zero"});
    write_config(dir.path(), "c.json", &cfg);
    let o = run(dir.path(), &["run", "sweep-eps", "c.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(dir.path(), "out", "sweep-eps");
    let dev = s["results"]["free_reference"]["relative_deviation"].as_f64().unwrap();
    assert!(dev <= 1e-2, "{dev}");
    let rows = fs::read_to_string(dir.path().join("out/sweep_eps.csv")).unwrap();
    assert_eq!(rows.lines().next().unwrap(), "eps,pairing_re,pairing_im,difference_to_previous");
    assert_eq!(rows.lines().count(), 4);
}

#[test]
fn default_three_barrier_routes_agree() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), "c.json", &base_config());
    let o = run(dir.path(), &["run", "resolvent", "c.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(dir.path(), "out", "resolvent");
    let e = s["results"]["route_relative_error"].as_f64().unwrap();
    assert!(e <= 1e-8, "{e}");
    assert!(s["results"]["stencil"]["relative_residual"].as_f64().unwrap().is_finite());
}

#[test]
fn channel_table_and_exponent() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), "c.json", &base_config());
    let o = run(dir.path(), &["run", "channel", "c.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(dir.path(), "out", "channel");
    let slope = s["results"]["error_exponent"].as_f64().unwrap();
    assert!((-1.3..=-0.7).contains(&slope), "{slope}");
    assert_eq!(fs::read_to_string(dir.path().join("out/channel.csv")).unwrap().lines().count(), 4);
}

#[test]
fn small_separation_run_writes_every_table() {
    let dir = TempDir::new().unwrap();
    let mut cfg = base_config();
    cfg["cutoff"] = json!(2.0);
    cfg["separation"] = json!({"t_values": [2.0, 3.0], "power_iterations": 20});
    write_config(dir.path(), "c.json", &cfg);
    let o = run(dir.path(), &["run", "separate", "c.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(dir.path(), "out", "separate");
    let r = &s["results"];
    assert_eq!(r["finite_rank"]["pass"], json!(true));
    assert!(r["guard"]["report"]["dim"].as_u64().unwrap() > 0);
    assert!(r["triple"]["results"].as_array().unwrap().len() == 2);
    for t in ["certificates.csv", "remainder_norms.csv", "finite_rank.csv"] {
        assert!(dir.path().join("out").join(t).is_file(), "{t}");
    }
}

#[test]
fn eigenfunction_and_holder_tables() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), "c.json", &base_config());
    for cmd in ["eigenfunction", "holder-check"] {
        let o = run(dir.path(), &["run", cmd, "c.json"]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
    }
    let e = summary(dir.path(), "out", "eigenfunction");
    assert!(e["results"]["relative_change"].as_f64().unwrap() <= 4.0 / 40.0);
    let h = fs::read_to_string(dir.path().join("out/holder.csv")).unwrap();
    assert_eq!(h.lines().count(), 4);
}
