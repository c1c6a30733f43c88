use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn navbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_navbench"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Three small maps and a scenario file over them.
fn fixture(dir: &Path) -> (String, String) {
    let maps = dir.join("maps");
    for (i, id) in ["a", "b", "c"].into_iter().enumerate() {
        let out = navbench(&[
            "gen-env",
            "--scene-id",
            id,
            "--seed",
            &i.to_string(),
            "--width",
            "10",
            "--height",
            "8",
            "--rooms",
            "2",
            "--labels",
            "kitchen,bath",
            "--objects",
            "mug:2",
            "--out",
            s(&maps.join(format!("{id}.navmap"))),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let scenarios = dir.join("scenarios.txt");
    let out = navbench(&[
        "gen-scenarios",
        "--maps",
        s(&maps),
        "--out",
        s(&scenarios),
        "--count",
        "4",
        "--clearance",
        "0.4",
        "--seed",
        "7",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    (s(&maps).to_string(), s(&scenarios).to_string())
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let (maps, scenarios) = fixture(dir.path());
    let out = navbench(&["validate", "--scenarios", &scenarios, "--maps", &maps, "--clearance", "0.4"]);
    assert_eq!(code(&out), 0);
    assert!(text(&out).contains("12 scenarios ok"));

    let csv = dir.path().join("out/oracle.csv");
    let table = dir.path().join("out/oracle.txt");
    let out = navbench(&[
        "evaluate",
        "--scenarios",
        &scenarios,
        "--maps",
        &maps,
        "--clearance",
        "0.4",
        "--agent",
        "oracle",
        "--csv",
        s(&csv),
        "--table",
        s(&table),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(text(&out), fs::read_to_string(&table).unwrap());
    let rows = fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().filter(|l| !l.starts_with('#')).count(), 13);

    let out = navbench(&["report", "--csv", s(&csv)]);
    assert_eq!(code(&out), 0);
    let first = |t: &str| t.lines().find(|l| l.starts_with("SPL")).unwrap().to_string();
    assert_eq!(first(&text(&out)), first(&fs::read_to_string(&table).unwrap()));
    let out = navbench(&["report", "--csv", s(&csv), "--format", "csv"]);
    assert_eq!(text(&out), rows);
}

#[test]
fn exploration_profile_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (maps, scenarios) = fixture(dir.path());
    let out = navbench(&[
        "explore",
        "--scenarios",
        &scenarios,
        "--maps",
        &maps,
        "--clearance",
        "0.4",
        "--agent",
        "frontier",
        "--budgets",
        "0,10",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(text(&out).lines().filter(|l| l.contains("frontier")).count(), 2);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let (maps, scenarios) = fixture(dir.path());
    let config = dir.path().join("run.conf");
    fs::write(
        &config,
        format!("# evaluation defaults\nscenarios={scenarios}\nmaps={maps}\nclearance=0.4\nagent=stumbler\nmax-steps=20\n"),
    )
    .unwrap();
    let out = navbench(&["evaluate", "--config", s(&config)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(text(&out).contains("stumbler"));
    // The command line wins over the file.
    let out = navbench(&["evaluate", "--config", s(&config), "--agent", "oracle"]);
    assert_eq!(code(&out), 0);
    let t = text(&out);
    assert!(t.contains("oracle") && !t.contains("stumbler"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (maps, scenarios) = fixture(dir.path());
    // Usage.
    assert_eq!(code(&navbench(&["evaluate", "--maps", &maps])), 1);
    assert_eq!(code(&navbench(&["frobnicate"])), 1);
    assert_eq!(
        code(&navbench(&["evaluate", "--scenarios", &scenarios, "--maps", &maps, "--tau", "-1"])),
        1
    );
    let bad_conf = dir.path().join("bad.conf");
    fs::write(&bad_conf, "no equals sign\n").unwrap();
    assert_eq!(code(&navbench(&["evaluate", "--config", s(&bad_conf)])), 1);
    // Validation: a stricter clearance than the one sampled with.
    let out = navbench(&["validate", "--scenarios", &scenarios, "--maps", &maps, "--clearance", "0.4", "--min-separation", "50"]);
    assert_eq!(code(&out), 2);
    // Runtime: an address this host cannot listen on.
    let out = navbench(&[
        "evaluate",
        "--scenarios",
        &scenarios,
        "--maps",
        &maps,
        "--agent",
        "remote:192.0.2.1:5000",
        "--clearance",
        "0.4",
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let out = navbench(&["report", "--csv", s(&dir.path().join("missing.csv"))]);
    assert_eq!(code(&out), 3);
}

#[test]
fn serve_and_connect() {
    let dir = tempfile::tempdir().unwrap();
    let (maps, scenarios) = fixture(dir.path());
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let addr = format!("127.0.0.1:{port}");
    let server = Command::new(env!("CARGO_BIN_EXE_navbench"))
        .args(["serve", "--listen", &addr, "--scenarios", &scenarios, "--maps", &maps, "--clearance", "0.4"])
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let mut client = None;
    for _ in 0..100 {
        let out = navbench(&["connect", "--endpoint", &addr, "--agent", "oracle", "--maps", &maps]);
        if code(&out) == 0 {
            client = Some(out);
            break;
        }
        std::thread::sleep(std::time::Duration::from_millis(50));
    }
    let client = client.expect("client never connected");
    assert!(text(&client).contains("12 episodes, 12 successful"));
    let served = server.wait_with_output().unwrap();
    assert_eq!(code(&served), 0);
    let table = text(&served);
    assert!(table.contains(&format!("remote:{addr}")));
    assert!(table.lines().any(|l| l.starts_with("SPL") && l.ends_with("1.0000")));
}
