use frenetfold::energy::{EnergyParams, ParamSegment, SegmentedParams};
use frenetfold::geometry::reconstruct;
use frenetfold::io::{profile_from_csv, write_chain, write_params, ParamsFile};
use frenetfold::soliton::{relax, soliton_profile, RelaxOptions};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn frenetfold(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frenetfold")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn angles_of_three_residues() {
    let out = frenetfold(&["angles", "--pdb", data("tripeptide.pdb").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with(&format!("# frenetfold {} angles\n# config: {{", env!("CARGO_PKG_VERSION"))));
    let rows = data_rows(&text);
    assert_eq!(rows.iter().filter(|r| !r[2].is_empty()).count(), 1);
    assert_eq!(rows.iter().filter(|r| !r[3].is_empty()).count(), 0);
    // A profile read back is the same profile.
    assert_eq!(profile_from_csv(&text).unwrap().kappa.len(), 1);
}

fn params_file(dir: &Path) -> PathBuf {
    let path = dir.join("params.toml");
    let p = EnergyParams::new(3.0, 1.55, 0.6, 0.12, 1.0, 0.0).unwrap();
    std::fs::write(&path, write_params(&ParamsFile::Uniform(p))).unwrap();
    path
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let params = params_file(dir.path());
    let out = dir.path().join("trajectory.csv");
    let run = |seed: &str| {
        let status = frenetfold(&[
            "simulate",
            "--pdb",
            data("1crn.pdb").to_str().unwrap(),
            "--residues",
            "3-42",
            "--params",
            params.to_str().unwrap(),
            "--schedule",
            "2000@0.01,2000@0.1",
            "--measure-every",
            "250",
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        std::fs::read_to_string(&out).unwrap()
    };
    let a = run("17");
    let b = run("17");
    let c = run("18");
    assert!(a == b, "same seed, different output");
    assert!(a != c);
    let text = a;
    assert!(text.contains("# seed: 17\n"));
    assert!(text.contains("\"schedule\":\"2000@0.01,2000@0.1\""));
    assert_eq!(data_rows(&text).len(), 1 + 4000 / 250);
}

#[test]
fn several_runs_get_one_file_each() {
    let dir = tempfile::tempdir().unwrap();
    let params = params_file(dir.path());
    let out = dir.path().join("traj.csv");
    let status = frenetfold(&[
        "simulate",
        "--pdb",
        data("1crn.pdb").to_str().unwrap(),
        "--residues",
        "3-20",
        "--params",
        params.to_str().unwrap(),
        "--schedule",
        "500@0.05",
        "--seed",
        "3",
        "--runs",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    for seed in 3..6 {
        let text = std::fs::read_to_string(dir.path().join(format!("traj.seed{seed}.csv"))).unwrap();
        assert!(text.contains(&format!("# seed: {seed}\n")));
    }
}

#[test]
fn fit_recovers_a_synthetic_target() {
    let helix = EnergyParams::new(3.0, 1.55, 0.6, 0.12, 1.0, 0.0).unwrap();
    let turn = EnergyParams::new(3.0, 1.1, -2.0, 0.0, 1.0, 0.0).unwrap();
    let truth = SegmentedParams::new(vec![
        ParamSegment { start: 0, end: 10, params: helix },
        ParamSegment { start: 11, end: 14, params: turn },
        ParamSegment { start: 15, end: 25, params: helix },
    ])
    .unwrap();
    let start: Vec<f64> = (0..26).map(|i| if (11..=14).contains(&i) { 1.1 } else { 1.55 }).collect();
    let (kappa, _) = relax(&start, &truth, &RelaxOptions::default()).unwrap();
    let target = reconstruct(&soliton_profile(&kappa, &truth, 3.8).unwrap()).unwrap();

    let mut guess = truth.clone();
    for (i, s) in guess.segments.iter_mut().enumerate() {
        let mut v = s.params.to_array();
        v[1] *= if i == 1 { 0.95 } else { 1.04 };
        v[2] += 0.1;
        s.params = EnergyParams::from_array(v);
    }
    let dir = tempfile::tempdir().unwrap();
    let pdb = dir.path().join("target.pdb");
    let segments = dir.path().join("segments.toml");
    std::fs::write(&pdb, write_chain(&target)).unwrap();
    std::fs::write(&segments, write_params(&ParamsFile::Segmented(guess))).unwrap();
    let prefix = dir.path().join("fitted");
    let out = frenetfold(&[
        "fit",
        "--pdb",
        pdb.to_str().unwrap(),
        "--segments",
        segments.to_str().unwrap(),
        "--unfold",
        "false",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let params = std::fs::read_to_string(dir.path().join("fitted.toml")).unwrap();
    let rmsd: f64 = params
        .lines()
        .find_map(|l| l.strip_prefix("# RMSD: "))
        .and_then(|l| l.trim_end_matches(" A").parse().ok())
        .expect("RMSD line");
    assert!(rmsd < 0.05, "RMSD {rmsd}");
    let report = std::fs::read_to_string(dir.path().join("fitted.csv")).unwrap();
    assert_eq!(data_rows(&report).len(), 28);
    let fitted = frenetfold::io::parse_calpha(&std::fs::read_to_string(dir.path().join("fitted.pdb")).unwrap(), None, 0).unwrap();
    assert_eq!(fitted.fragments[0].len(), 28);
}

#[test]
fn gauge_then_reconstruct_preserves_the_chain() {
    let dir = tempfile::tempdir().unwrap();
    let unfolded = dir.path().join("unfolded.csv");
    let rebuilt = dir.path().join("rebuilt.pdb");
    let pdb = data("1crn.pdb");
    let out = frenetfold(&["gauge", "--pdb", pdb.to_str().unwrap(), "--out", unfolded.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Z2 moves at sites:"));
    let out = frenetfold(&["reconstruct", "--profile", unfolded.to_str().unwrap(), "--out", rebuilt.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let original = frenetfold::io::parse_calpha(&std::fs::read_to_string(&pdb).unwrap(), None, 0).unwrap();
    let back = frenetfold::io::parse_calpha(&std::fs::read_to_string(&rebuilt).unwrap(), None, 0).unwrap();
    let r = frenetfold::geometry::rmsd(original.longest(), back.longest()).unwrap();
    assert!(r < 1e-3, "RMSD {r}");
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("angles.csv");
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        format!("chain = \"A\"\n[angles]\npdb = {:?}\nout = \"ignored.csv\"\nresidues = \"5-9\"\n", data("1crn.pdb")),
    )
    .unwrap();
    let status = frenetfold(&["angles", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(data_rows(&text).len(), 4);
    assert!(!dir.path().join("ignored.csv").exists());
}

#[test]
fn exit_codes() {
    assert_eq!(frenetfold(&[]).status.code(), Some(1));
    assert_eq!(frenetfold(&["angles", "--bogus"]).status.code(), Some(1));
    assert_eq!(frenetfold(&["angles"]).status.code(), Some(1));
    assert_eq!(frenetfold(&["--version"]).status.code(), Some(0));
    assert_eq!(frenetfold(&["angles", "--pdb", "/nonexistent.pdb"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pdb");
    std::fs::write(&bad, "ATOM      2  CA  MET A   1      26.2x6  25.413   2.842  1.00 10.38           C\n").unwrap();
    assert_eq!(frenetfold(&["angles", "--pdb", bad.to_str().unwrap()]).status.code(), Some(2));

    // A step far too large for the potential makes the iteration blow up.
    let params = dir.path().join("p.toml");
    std::fs::write(&params, write_params(&ParamsFile::Uniform(EnergyParams::double_well(50.0, 1.0)))).unwrap();
    let out = frenetfold(&[
        "relax",
        "--pdb",
        data("1crn.pdb").to_str().unwrap(),
        "--params",
        params.to_str().unwrap(),
        "--epsilon",
        "0.9",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn theta_scan_writes_points_and_fits() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("p.toml");
    std::fs::write(
        &params,
        write_params(&ParamsFile::Uniform(EnergyParams::new(0.001, 0.5, 0.00008, 0.0, 0.001, 0.0).unwrap())),
    )
    .unwrap();
    let out = frenetfold(&[
        "theta-scan",
        "--params",
        params.to_str().unwrap(),
        "--kts",
        "1e-5,1e-3",
        "--lengths",
        "8,10,12,14",
        "--steps",
        "2000",
        "--seed",
        "5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(data_rows(&text).len(), 8);
    assert_eq!(text.matches("# fit kT=").count(), 2);
    assert!(text.contains("# seed: 5\n"));
}
