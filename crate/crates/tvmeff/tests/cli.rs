mod common;

use std::path::Path;

use common::{named_panel, read_csv, run, stderr_report};
use nalgebra::DMatrix;
use tvmeff::config::{Choice, RunConfig};
use tvmeff::io::read_impulse_csv;
use tvmeff::pipeline::{fit_tv, load_returns};
use tvmeff_core::irf::static_irf;
use tvmeff_core::synth::DgpSpec;

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = run(args, cwd);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn missing_input_exits_2_with_a_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["describe", "nope.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let rep = stderr_report(&out);
    assert_eq!(rep["code"], 2);
    assert_eq!(rep["error"], "input");
    assert!(rep["message"].as_str().unwrap().contains("nope.csv"));
}

#[test]
fn gap_in_dates_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p.csv"), "date,a\n1924-05,1\n1924-06,1\n1924-08,2\n1924-09,2\n").unwrap();
    let out = run(&["describe", "p.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_report(&out)["message"].as_str().unwrap().contains("1924-07"));
}

#[test]
fn constant_series_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("date,a\n");
    for m in 1..=12 {
        text.push_str(&format!("1990-{m:02},5\n"));
    }
    std::fs::write(dir.path().join("p.csv"), text).unwrap();
    let out = run(&["unitroot", "p.csv"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_report(&out)["error"], "numerical");
}

#[test]
fn bad_configuration_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    named_panel(dir.path(), 60, 1);
    for args in [
        &["bootstrap", "prices.csv", "--level", "1.5"][..],
        &["var", "prices.csv", "--q", "0"],
        &["tvvar", "prices.csv", "--smoothness", "-1"],
        &["describe", "--no-such-flag"],
    ] {
        let out = run(args, dir.path());
        assert_eq!(out.status.code(), Some(4), "{args:?}");
        assert_eq!(stderr_report(&out)["code"], 4, "{args:?}");
    }
}

#[test]
fn help_and_version_exit_0() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ok(&["--help"], dir.path()).contains("run"));
    assert!(ok(&["--version"], dir.path()).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn subcommands_write_csv_with_a_config_trailer() {
    let dir = tempfile::tempdir().unwrap();
    named_panel(dir.path(), 60, 2);
    for (cmd, first) in [
        ("describe", "series"),
        ("unitroot", "series"),
        ("var", "row"),
        ("tvvar", "date"),
        ("efficiency", "date"),
        ("irf", "date"),
    ] {
        let text = ok(&[cmd, "prices.csv", "--out", "o.csv"], dir.path());
        assert!(text.is_empty());
        let (header, rows) = read_csv(&dir.path().join("o.csv"));
        assert_eq!(header[0], first, "{cmd}");
        assert!(!rows.is_empty(), "{cmd}");
        assert!(common::last_line(&dir.path().join("o.csv"))
            .starts_with(&format!("# tvmeff {} {cmd} config=", env!("CARGO_PKG_VERSION"))));
    }
}

#[test]
fn json_format_goes_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    named_panel(dir.path(), 60, 3);
    let text =
        ok(&["efficiency", "prices.csv", "--individual", "--source", "diagonal", "--format", "json"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows[0]["series"], "EQPI");
    assert!(rows.iter().all(|r| r["zeta"].is_number() || r["zeta"].is_null()));
}

#[test]
fn static_cut_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let path = named_panel(dir.path(), 60, 4);
    ok(&["irf", "prices.csv", "--q", "1", "--horizon", "6", "--at", "1925-06,1928-01", "--out", "cut.csv"], dir.path());

    let cfg = RunConfig { input: Some(path), q: Choice::Fixed(1), horizon: 6, ..RunConfig::default() };
    let model = fit_tv(&load_returns(&cfg).unwrap(), 1, &cfg).unwrap();
    let (_, rows) = read_csv(&dir.path().join("cut.csv"));
    assert_eq!(rows.len(), 2 * 7 * 9);
    let names = ["EQPI", "GBPI", "Exchange"];
    for row in rows {
        let phi = static_irf(&model, row[0].parse().unwrap(), 6).unwrap();
        let h: usize = row[1].parse().unwrap();
        let shock = names.iter().position(|n| *n == row[2]).unwrap();
        let response = names.iter().position(|n| *n == row[3]).unwrap();
        assert_eq!(row[4].parse::<f64>().unwrap(), phi[h][(response, shock)]);
    }
}

#[test]
fn static_cut_outside_the_sample_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    named_panel(dir.path(), 60, 4);
    let out = run(&["irf", "prices.csv", "--at", "1800-01"], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn impulse_surface_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    named_panel(dir.path(), 48, 5);
    ok(&["irf", "prices.csv", "--q", "1", "--horizon", "4", "--orthogonalized", "--out", "s.csv"], dir.path());
    let s = read_impulse_csv(&dir.path().join("s.csv")).unwrap();
    assert_eq!(s.names, ["EQPI", "GBPI", "Exchange"]);
    assert_eq!(s.horizon, 4);

    let cfg = RunConfig { input: Some(dir.path().join("prices.csv")), q: Choice::Fixed(1), ..RunConfig::default() };
    let model = fit_tv(&load_returns(&cfg).unwrap(), 1, &cfg).unwrap();
    let lib = tvmeff_core::irf::tv_irf_orthogonalized(&model, 4).unwrap();
    assert_eq!(s.dates, lib.dates);
    assert_eq!(s.values(), lib.values());
}

#[test]
fn synth_then_run_produces_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let a = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.0, 0.2]);
    let spec = DgpSpec::constant(&[a], 60, 0.02, 11);
    std::fs::write(dir.path().join("spec.json"), serde_json::to_string(&spec).unwrap()).unwrap();
    ok(&["synth", "--spec", "spec.json", "--out", "panel.csv", "truth.csv"], dir.path());

    let (header, rows) = read_csv(&dir.path().join("truth.csv"));
    assert_eq!(header, ["date", "lag", "row", "col", "value"]);
    assert_eq!(rows.len(), 60 * 4);
    assert_eq!(rows[1][4].parse::<f64>().unwrap(), 0.1);

    ok(&["run", "panel.csv", "--reps", "100", "--at", "1926-01", "--out", "out"], dir.path());
    let out = dir.path().join("out");
    let mut names: Vec<_> =
        std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    let mut expected = vec!["manifest.json".to_string()];
    for stem in ["individual_degrees", "irf_static", "irf_surface", "joint_degree", "table1", "table2"] {
        expected.push(format!("{stem}.csv"));
        expected.push(format!("{stem}.json"));
    }
    expected.sort();
    assert_eq!(names, expected);
    for n in &names {
        let p = out.join(n);
        if n.ends_with(".json") {
            serde_json::from_slice::<serde_json::Value>(&std::fs::read(&p).unwrap()).unwrap();
        } else {
            read_csv(&p);
            assert_eq!(common::last_line(&p), "# manifest: manifest.json");
        }
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["artifacts"].as_array().unwrap().len(), 12);
    assert_eq!(manifest["config"]["replications"], 100);
    let (_, cut) = read_csv(&out.join("irf_static.csv"));
    assert!(cut.iter().all(|r| r[0] == "1926-01"));
}

#[cfg(unix)]
#[test]
fn artifacts_are_world_readable() {
    use std::os::unix::fs::PermissionsExt;
    let dir = tempfile::tempdir().unwrap();
    named_panel(dir.path(), 60, 6);
    ok(&["run", "prices.csv", "--reps", "100", "--formats", "csv", "--out", "out"], dir.path());
    for e in std::fs::read_dir(dir.path().join("out")).unwrap() {
        let mode = e.unwrap().metadata().unwrap().permissions().mode() & 0o777;
        assert_eq!(mode, 0o644);
    }
}

#[test]
fn failed_run_leaves_no_files() {
    let dir = tempfile::tempdir().unwrap();
    named_panel(dir.path(), 60, 7);
    let out = run(&["run", "prices.csv", "--reps", "100", "--at", "2100-01", "--out", "out"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    let out_dir = dir.path().join("out");
    assert!(!out_dir.exists() || std::fs::read_dir(&out_dir).unwrap().next().is_none());
}

#[test]
fn absolute_paths_work_from_any_directory() {
    let data = tempfile::tempdir().unwrap();
    let cwd = tempfile::tempdir().unwrap();
    let p = named_panel(data.path(), 40, 8);
    let text = ok(&["describe", s(&p), "--columns", "EQPI=Stocks", "--format", "json"], cwd.path());
    assert!(text.contains("Stocks"));
}
