use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

use serde_json::Value;

fn breakrisk() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_breakrisk"));
    cmd.env_remove("BREAKRISK_MODE").env_remove("RUST_LOG");
    cmd
}

fn run(args: &[&str]) -> Output {
    breakrisk().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|_| panic!("stderr is not JSON: {text}"))
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn risk_spot_value() {
    let o = run(&[
        "risk",
        "--fixture",
        "mce0",
        "--break",
        "OPE1",
        "--mode",
        "affected-paths",
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["total"].to_string(), "0.4286");
    assert!(stdout(&o).starts_with(r#"{"mode":"affected-paths","total":0.4286,"clamped":false,"#));
}

#[test]
fn risk_saturates() {
    let o = run(&["risk", "--fixture", "mce0", "--break", "OPC1,OPE1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains(r#""total":1.0000"#));
}

#[test]
fn fail_above_gates() {
    let o = run(&[
        "risk",
        "--fixture",
        "mce0",
        "--break",
        "OPE1",
        "--fail-above",
        "0.3",
    ]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains(r#""total":0.4286"#));
    assert_eq!(stderr_json(&o)["error"], "threshold");
    let o = run(&[
        "risk",
        "--fixture",
        "mce0",
        "--break",
        "OPE1",
        "--fail-above",
        "0.5",
    ]);
    assert_eq!(code(&o), 0);
}

#[test]
fn mode_from_environment() {
    let o = breakrisk()
        .env("BREAKRISK_MODE", "literal")
        .args(["risk", "--fixture", "mce0", "--break", "OPE1"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with(r#"{"mode":"literal","total":0.3974"#));
}

#[test]
fn risk_table_format() {
    let o = run(&[
        "risk",
        "--fixture",
        "mce0",
        "--break",
        "OPE1",
        "--format",
        "table",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("0.4286"));
}

#[test]
fn usage_errors_exit_2_with_json() {
    for args in [
        &["risk", "--fixture", "mce0", "--break", ""][..],
        &["risk", "--fixture", "mce0", "--break", " , "],
        &["risk", "--fixture", "nope", "--break", "OPE1"],
        &[
            "risk",
            "--fixture",
            "mce0",
            "--break",
            "OPE1",
            "--mode",
            "bogus",
        ],
        &["risk", "--break", "OPE1"],
        &["sweep", "--fixture", "unknown"],
        &["ingest", "--format", "jsonl", "--in", "x.jsonl"],
        &["frobnicate"],
    ] {
        let o = run(args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert_eq!(stderr_json(&o)["error"], "usage", "{args:?}");
    }
}

#[test]
fn help_exits_0() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["risk", "--help"])), 0);
}

#[test]
fn sweep_csv_has_nine_rows() {
    let o = run(&["sweep", "--fixture", "mce0", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "operation,score");
    assert_eq!(lines.len(), 10);
}

#[test]
fn sweep_mce2_leads_with_path_one() {
    let o = run(&["sweep", "--fixture", "mce2"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["sweep"].as_array().unwrap();
    let top: Vec<_> = rows[..3]
        .iter()
        .map(|r| r["operation"].as_str().unwrap())
        .collect();
    // OPB1 and OPC1 tie on paths 1 and 2; ties break by label
    assert_eq!(top, ["OPB1", "OPC1", "OPA1"]);
}

#[test]
fn empty_snapshot_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.json");
    std::fs::write(&path, r#"{"version":1,"entry_label":"ENTRY","paths":[]}"#).unwrap();
    let msp = path.to_str().unwrap();
    let o = run(&["risk", "--msp", msp, "--break", "OPE1"]);
    assert_eq!(code(&o), 1);
    assert_eq!(stderr_json(&o)["error"], "runtime");
    assert_eq!(code(&run(&["sweep", "--msp", msp])), 1);
}

#[test]
fn missing_msp_is_runtime_error() {
    let o = run(&["risk", "--msp", "/nonexistent/msp.json", "--break", "OPE1"]);
    assert_eq!(code(&o), 1);
    assert_eq!(stderr_json(&o)["error"], "runtime");
}

fn generate(dir: &Path, fixture: &str, format: &str, file: &str) -> String {
    generate_seeded(dir, fixture, format, file, "0")
}

fn generate_seeded(dir: &Path, fixture: &str, format: &str, file: &str, seed: &str) -> String {
    let out = dir.join(file);
    let o = run(&[
        "generate",
        "--fixture",
        fixture,
        "--seed",
        seed,
        "--format",
        format,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out.to_str().unwrap().to_owned()
}

#[test]
fn generate_then_ingest_reproduces_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let msp = dir.path().join("msp.json");
    for format in ["jsonl", "otlp-json"] {
        let traces = generate(dir.path(), "mce0", format, &format!("traces.{format}"));
        let o = run(&[
            "ingest",
            "--format",
            format,
            "--in",
            &traces,
            "--out",
            msp.to_str().unwrap(),
            "--mapping",
            "bare",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
        // one trace per entry-point request
        assert_eq!(report["accepted"], 32 + 65 + 23 + 52);
        assert_eq!(report["dropped"], 0);
        assert_eq!(report["unmappable"], 0);

        let fixture = stdout(&run(&["fixture", "mce0"]));
        assert_eq!(std::fs::read_to_string(&msp).unwrap(), fixture);
    }
    let o = run(&["risk", "--msp", msp.to_str().unwrap(), "--break", "OPE1"]);
    assert!(stdout(&o).contains(r#""total":0.4286"#));
}

#[test]
fn ingest_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("msp.json");
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"resourceSpans\": [ {").unwrap();
    let o = run(&[
        "ingest",
        "--format",
        "otlp-json",
        "--in",
        bad.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr_json(&o)["message"]
        .as_str()
        .unwrap()
        .contains("malformed"));
    assert!(!out.exists());

    let o = run(&[
        "ingest",
        "--format",
        "jsonl",
        "--in",
        "/nonexistent.jsonl",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn ingest_several_inputs_with_pinned_ids() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = dir.path().join("p3.json");
    assert_eq!(
        code(&run(&[
            "fixture",
            "p3-sample",
            "--out",
            fixture.to_str().unwrap()
        ])),
        0
    );
    let a = generate_seeded(dir.path(), "p3-sample", "jsonl", "a.jsonl", "1");
    let b = generate_seeded(dir.path(), "p3-sample", "jsonl", "b.jsonl", "2");
    let out = dir.path().join("msp.json");
    let o = run(&[
        "ingest",
        "--format",
        "jsonl",
        "--in",
        &a,
        &b,
        "--out",
        out.to_str().unwrap(),
        "--mapping",
        "bare",
        "--path-ids-from",
        fixture.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    // two replays double every count
    assert!(
        text.contains(r#"{"id":3,"root":"OPD1","branches":{"OPD1":90,"#),
        "{text}"
    );
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn start_server(args: &[&str]) -> (Server, String) {
    let mut child = breakrisk()
        .arg("serve")
        .args(args)
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
    let first = lines.next().unwrap().unwrap();
    let v: Value = serde_json::from_str(&first).unwrap();
    let address = v["address"].as_str().unwrap().to_owned();
    (Server(child), address)
}

fn http_get(address: &str, path: &str) -> String {
    let mut stream = TcpStream::connect(address).unwrap();
    write!(
        stream,
        "GET {path} HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    response
}

#[test]
fn serve_answers_requests() {
    let (_server, address) = start_server(&["--fixture", "mce0", "--listen", "127.0.0.1:0"]);
    let response = http_get(&address, "/api/v1/snapshot");
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains(r#""grand_total":385"#));
}

#[test]
fn serve_reads_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("service.toml");
    std::fs::write(
        &config,
        "listen = \"127.0.0.1:0\"\ndefault_mode = \"literal\"\n",
    )
    .unwrap();
    let (_server, address) =
        start_server(&["--fixture", "mce0", "--config", config.to_str().unwrap()]);
    assert!(http_get(&address, "/api/v1/sweep").contains(r#""mode":"literal""#));
}

#[cfg(unix)]
#[test]
fn serve_reloads_on_sighup() {
    let dir = tempfile::tempdir().unwrap();
    let msp = dir.path().join("msp.json");
    assert_eq!(
        code(&run(&["fixture", "mce0", "--out", msp.to_str().unwrap()])),
        0
    );
    let (server, address) =
        start_server(&["--msp", msp.to_str().unwrap(), "--listen", "127.0.0.1:0"]);
    assert!(http_get(&address, "/api/v1/snapshot").contains(r#""grand_total":385"#));

    assert_eq!(
        code(&run(&["fixture", "mce2", "--out", msp.to_str().unwrap()])),
        0
    );
    let status = Command::new("kill")
        .args(["-HUP", &server.0.id().to_string()])
        .status()
        .unwrap();
    assert!(status.success());
    let deadline = std::time::Instant::now() + std::time::Duration::from_secs(10);
    loop {
        if http_get(&address, "/api/v1/snapshot").contains(r#""grand_total":1308"#) {
            break;
        }
        assert!(
            std::time::Instant::now() < deadline,
            "snapshot was not reloaded"
        );
        std::thread::sleep(std::time::Duration::from_millis(50));
    }
}

#[test]
fn serve_occupied_port_exits_1() {
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let address = taken.local_addr().unwrap().to_string();
    let o = run(&["serve", "--fixture", "mce0", "--listen", &address]);
    assert_eq!(code(&o), 1);
    assert!(stderr_json(&o)["message"]
        .as_str()
        .unwrap()
        .contains("cannot bind"));
}

#[test]
fn serve_missing_msp_exits_1() {
    let o = run(&[
        "serve",
        "--msp",
        "/nonexistent/missing.json",
        "--listen",
        "127.0.0.1:0",
    ]);
    assert_eq!(code(&o), 1);
    assert_eq!(stderr_json(&o)["error"], "runtime");
}
