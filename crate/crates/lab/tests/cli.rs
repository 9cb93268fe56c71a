use std::path::Path;
use std::process::{Command, Output};

use dstab::config::ExperimentConfig;
use dstab::csvio::TrajectoryTable;

fn dstab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dstab"))
        .args(args)
        .current_dir(dir)
        .env_remove("DSTAB_SEED")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn exit_code_contract() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&dstab(d, &["verify", "conserved", "--problem", "parabola"])), 0);

    let out = dstab(d, &["verify", "pdl", "--problem", "ellipse:a=2,b=1", "--p", "2"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "pdl");
    let omega: f64 = row[row.len() - 5].parse().unwrap();
    assert!(omega > 0.0 && omega.is_finite());

    let out = dstab(d, &["verify", "pdl", "--problem", "ellipse:a=2,b=1", "--p", "2", "--omega", "1e9", "--csv", "cert.csv"]);
    assert_eq!(code(&out), 1);
    let witness = std::fs::read(d.join("cert.witness.csv")).unwrap();
    assert_eq!(TrajectoryTable::read(witness.as_slice()).unwrap().rows.len(), 2);

    assert_eq!(code(&dstab(d, &["probe", "point", "--problem", "monomial:u=1,1", "--at", "2,0.5", "--epsilon", "0.05"])), 1);
    assert!(d.join("witness.csv").exists());
    assert_eq!(code(&dstab(d, &["probe", "point", "--problem", "monomial:u=1,1", "--at", "1,1", "--epsilon", "0.05"])), 0);
    assert_eq!(code(&dstab(d, &["probe", "attractor", "--problem", "flat4", "--p", "4", "--epsilon", "0.2"])), 0);

    for bad in [
        &["verify", "pdl", "--problem", "nope"][..],
        &["verify", "pdl", "--problem", "ellipse:a=1,b=2"],
        &["probe", "point", "--problem", "parabola", "--at", "1,2,3"],
        &["simulate", "--problem", "parabola", "--x0", "1,1", "--schedule", "pow:c=1"],
        &["simulate", "--problem", "parabola"],
        &["probe", "nothing"],
        &["simulate", "--problem", "parabola", "--x0", "1,1", "--config", "missing.toml"],
    ] {
        let out = dstab(d, bad);
        assert_eq!(code(&out), 2, "{bad:?}");
        assert!(!out.stderr.is_empty());
    }

    let out = dstab(d, &["simulate", "--problem", "parabola", "--x0", "0.5,0.5", "--csv", "no/such/dir/t.csv"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn emitted_trajectory_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = dstab(d, &["simulate", "--problem", "flat4", "--x0", "2.5,0.01", "--steps", "500", "--thin", "3", "--csv", "t.csv", "--svg", "t.svg"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let bytes = std::fs::read(d.join("t.csv")).unwrap();
    let table = TrajectoryTable::read(bytes.as_slice()).unwrap();
    assert_eq!(table.rows.last().unwrap().k, 500);
    let mut again = Vec::new();
    table.write(&mut again).unwrap();
    assert_eq!(again, bytes);
    assert!(std::fs::read_to_string(d.join("t.svg")).unwrap().contains("<polyline"));
}

#[test]
fn reproduce_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for fig in ["fig1", "fig2", "fig3"] {
        assert_eq!(code(&dstab(a.path(), &["reproduce", fig])), 0);
        assert_eq!(code(&dstab(b.path(), &["reproduce", fig, "--out-dir", "."])), 0);
        for ext in ["csv", "svg"] {
            let name = format!("{fig}.{ext}");
            assert_eq!(std::fs::read(a.path().join(&name)).unwrap(), std::fs::read(b.path().join(&name)).unwrap(), "{name}");
        }
    }
}

#[test]
fn config_file_drives_a_run_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let text = "problem = \"parabola\"\nschedule = \"pow:c=0.1,p=6\"\nx0 = [0.9, 0.7]\nsteps = 50\nselector = \"random\"\nseed = 5\n\n[output]\ncsv = \"cfg.csv\"\n";
    std::fs::write(d.join("exp.toml"), text).unwrap();
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);

    assert_eq!(code(&dstab(d, &["simulate", "--config", "exp.toml"])), 0);
    let from_file = std::fs::read(d.join("cfg.csv")).unwrap();
    assert_eq!(code(&dstab(d, &["simulate", "--config", "exp.toml", "--steps", "20", "--csv", "short.csv"])), 0);
    let short = TrajectoryTable::read(std::fs::read(d.join("short.csv")).unwrap().as_slice()).unwrap();
    assert_eq!(short.rows.len(), 21);
    let long = TrajectoryTable::read(from_file.as_slice()).unwrap();
    assert_eq!(long.rows.len(), 51);
    assert_eq!(short.rows[..20], long.rows[..20]);
    assert_eq!((short.rows[20].t, &short.rows[20].x), (long.rows[20].t, &long.rows[20].x));
    assert_eq!(short.rows[20].alpha, None);
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("exp.toml"), "seed = 5\n").unwrap();
    let run = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_dstab"));
        cmd.args(["simulate", "--problem", "parabola", "--x0", "0.9,0.7", "--steps", "30", "--selector", "random", "--schedule", "uniform:cap=0.1"])
            .args(extra)
            .current_dir(d)
            .env_remove("DSTAB_SEED");
        if let Some(s) = env {
            cmd.env("DSTAB_SEED", s);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let default = run(&[], None);
    assert_eq!(run(&["--seed", "42"], None), default);
    let cfg = run(&["--config", "exp.toml"], None);
    assert_ne!(cfg, default);
    assert_eq!(run(&["--seed", "5"], None), cfg);
    assert_eq!(run(&["--config", "exp.toml"], Some("42")), default);
    assert_eq!(run(&["--config", "exp.toml", "--seed", "5"], Some("42")), cfg);
}
