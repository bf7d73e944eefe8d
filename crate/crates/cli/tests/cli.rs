use std::fs;
use std::process::Command;

fn seqbound() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seqbound"))
}

fn strip_wall_time(csv: &str) -> Vec<String> {
    csv.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
}

#[test]
fn small_sweep_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bounds.csv");
    let status = seqbound()
        .args(["--nbar-min", "0", "--nbar-max", "1", "--nbar-step", "0.5", "--planes", "5", "--primal"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let stdout = String::from_utf8(status.stdout).unwrap();
    assert!(stdout.contains("max ratio"));
    let csv = fs::read_to_string(&out).unwrap();
    let recs = seqbound::sweep::parse_csv(&csv).unwrap();
    assert_eq!(recs.iter().map(|r| r.mean_photon).collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
    assert!(recs.iter().all(|r| r.primal_lower_success.is_some()));
}

#[test]
fn config_file_with_flag_override_and_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.conf");
    let cache = dir.path().join("cache");
    let out = dir.path().join("a.csv");
    fs::write(
        &cfg,
        format!(
            "nbar-min = 0.4\nnbar-max = 0.4\nplanes = 9\nout = {}\ncache-dir = {}\n",
            out.display(),
            cache.display()
        ),
    )
    .unwrap();
    let run = |extra: &[&str]| {
        let o = seqbound().arg("--config").arg(&cfg).args(extra).output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    run(&["--nbar-max", "0.8", "--nbar-step", "0.4"]);
    let first = fs::read_to_string(&out).unwrap();
    assert_eq!(first.lines().count(), 3);
    assert!(fs::read_dir(&cache).unwrap().count() >= 2);
    run(&["--nbar-max", "0.8", "--nbar-step", "0.4", "--workers", "1"]);
    let second = fs::read_to_string(&out).unwrap();
    assert_eq!(strip_wall_time(&first), strip_wall_time(&second));
}

#[test]
fn bad_input_is_rejected() {
    let o = seqbound().args(["--nbar-step", "0"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = seqbound().args(["--mode", "sideways"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
