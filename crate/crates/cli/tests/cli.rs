use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SCAM: &str = "0x2c1b6D43A52ea97d61979C22B7aa7B83352c1a2d";
const SCAM2: &str = "0xCdf8BFE2C60B97b3fe47ac74b3FCaE89aC2A450a";
const VICTIM: &str = "0xf91a0f615113ccbc85aa47e9a7ded4b3652316e4";

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn scamlens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scamlens"))
        .args(args)
        .env_remove("SCAMLENS_CONFIG")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn data(path: &Path) -> Value {
    let doc: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1, "{}", path.display());
    doc["data"].clone()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn triage_classifies_every_record() {
    let tmp = tempfile::tempdir().unwrap();
    let demo = fixtures().join("demo");
    let out = scamlens(&[
        "--config",
        p(&demo.join("config.toml")),
        "--out",
        p(tmp.path()),
        "triage",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data(&tmp.path().join("triage/videos.json"));
    assert_eq!(rows.as_array().unwrap().len(), 10);
    for r in rows.as_array().unwrap() {
        assert_eq!(r["predicted"], r["label"], "{}", r["video_id"]);
    }
    let urls = data(&tmp.path().join("triage/urls.json"));
    let solidity: Vec<&str> = urls
        .as_array()
        .unwrap()
        .iter()
        .filter(|u| u["solidity"] == true)
        .map(|u| u["url"].as_str().unwrap())
        .collect();
    assert_eq!(solidity.len(), 3);
    assert!(urls.as_array().unwrap().iter().any(|u| u["fetched"] == true && u["solidity"] == false));
    assert!(tmp.path().join("triage/model.json").exists());

    // The saved model classifies the same way without retraining.
    let tmp2 = tempfile::tempdir().unwrap();
    let out = scamlens(&[
        "--out",
        p(tmp2.path()),
        "triage",
        "--videos",
        p(&demo.join("videos.jsonl")),
        "--model",
        p(&tmp.path().join("triage/model.json")),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let again = data(&tmp2.path().join("triage/videos.json"));
    for (a, b) in rows.as_array().unwrap().iter().zip(again.as_array().unwrap()) {
        assert_eq!((&a["predicted"], &a["score"]), (&b["predicted"], &b["score"]));
    }
}

#[test]
fn triage_of_empty_metadata_is_an_empty_report() {
    let tmp = tempfile::tempdir().unwrap();
    let videos = write(tmp.path(), "v.jsonl", "");
    let out = scamlens(&["--out", p(&tmp.path().join("o")), "triage", "--videos", p(&videos)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(data(&tmp.path().join("o/triage/videos.json")), Value::Array(vec![]));
}

#[test]
fn triage_without_model_or_training_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let videos = fixtures().join("demo/videos.jsonl");
    let out = scamlens(&["--out", p(tmp.path()), "triage", "--videos", p(&videos)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("model"));
}

#[test]
fn extract_resolves_the_fragmented_bot() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    fs::create_dir(&corpus).unwrap();
    fs::copy(
        fixtures().join("contracts/fragmented_bot.sol"),
        corpus.join("fragmented_bot.sol"),
    )
    .unwrap();
    let out = scamlens(&["--out", p(&tmp.path().join("o")), "extract", "--contracts", p(&corpus)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data(&tmp.path().join("o/extract/contracts.json"));
    assert_eq!(rows.as_array().unwrap().len(), 1);
    assert_eq!(rows[0]["status"], "Resolved");
    assert_eq!(rows[0]["addresses"], SCAM);
    assert_eq!(
        fs::read_to_string(tmp.path().join("o/extract/addresses.txt")).unwrap(),
        format!("{SCAM}\n")
    );
    assert!(tmp.path().join("o/probes/fragmented_bot.probe.sol").exists());
    let details = data(&tmp.path().join("o/extract/details.json"));
    assert_eq!(details[0]["sinks"][0]["probe_agrees"], true);
}

#[test]
fn extract_reports_malformed_files_and_continues() {
    let tmp = tempfile::tempdir().unwrap();
    let out = scamlens(&[
        "--out",
        p(tmp.path()),
        "--format",
        "csv",
        "extract",
        "--contracts",
        p(&fixtures().join("demo/contracts")),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("extract/contracts.csv")).unwrap();
    let line = csv.lines().find(|l| l.starts_with("malformed.sol")).unwrap();
    assert!(line.contains("Unresolved,ParseFailure"), "{line}");
    assert!(csv.lines().any(|l| l.starts_with("fragmented_bot.sol") && l.contains("Resolved")));
}

#[test]
fn extract_of_empty_corpus_has_no_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("empty");
    fs::create_dir(&corpus).unwrap();
    let out = scamlens(&["--out", p(&tmp.path().join("o")), "extract", "--contracts", p(&corpus)]);
    assert_eq!(code(&out), 0);
    assert_eq!(data(&tmp.path().join("o/extract/contracts.json")), Value::Array(vec![]));
}

#[test]
fn unreadable_corpus_fails_with_status_3_and_missing_one_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let not_a_dir = write(tmp.path(), "corpus", "x");
    let out = scamlens(&["--out", p(&tmp.path().join("o")), "extract", "--contracts", p(&not_a_dir)]);
    assert_eq!(code(&out), 3);
    let out = scamlens(&[
        "--out",
        p(&tmp.path().join("o")),
        "extract",
        "--contracts",
        p(&tmp.path().join("nope")),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn expand_requires_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let chain = fixtures().join("chain/case_study");
    let out = scamlens(&["--out", p(tmp.path()), "expand", "--chain", p(&chain)]);
    assert_eq!(code(&out), 2);
    let seeds = write(tmp.path(), "seeds.txt", "# none yet\n");
    let out = scamlens(&["--out", p(tmp.path()), "expand", "--seeds", p(&seeds), "--chain", p(&chain)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn expand_reaches_a_fixpoint_in_two_rounds() {
    let tmp = tempfile::tempdir().unwrap();
    let seeds = write(tmp.path(), "seeds.txt", &format!("{SCAM}\n"));
    let out = scamlens(&[
        "--out",
        p(tmp.path()),
        "expand",
        "--seeds",
        p(&seeds),
        "--chain",
        p(&fixtures().join("chain/case_study")),
        "--contracts",
        p(&fixtures().join("contracts")),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = data(&tmp.path().join("expand/summary.json"));
    assert_eq!(summary[0]["rounds"], 2);
    assert_eq!(summary[0]["capped"], false);
    let found: Vec<&str> = summary[0]["new_addresses"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(found.contains(&SCAM2));
    let all = fs::read_to_string(tmp.path().join("expand/addresses.txt")).unwrap();
    assert_eq!(all.lines().count(), 3);
}

#[test]
fn victims_requires_addresses() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = write(tmp.path(), "scams.txt", "\n");
    let out = scamlens(&[
        "--out",
        p(tmp.path()),
        "victims",
        "--scam-addresses",
        p(&empty),
        "--prices",
        p(&fixtures().join("demo/prices.csv")),
        "--chain",
        p(&fixtures().join("chain/case_study")),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn victims_counts_the_case_study_deposit_and_cross_chain_overlap() {
    let tmp = tempfile::tempdir().unwrap();
    let scams = write(tmp.path(), "scams.txt", &format!("{SCAM}\n{SCAM2}\n"));
    let out = scamlens(&[
        "--out",
        p(tmp.path()),
        "victims",
        "--scam-addresses",
        p(&scams),
        "--prices",
        p(&fixtures().join("demo/prices.csv")),
        "--chain",
        p(&fixtures().join("chain/case_study")),
        "--chain",
        p(&fixtures().join("demo/chain_bsc")),
        "--contracts",
        p(&fixtures().join("contracts")),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let txs = data(&tmp.path().join("victims/victim_txs.json"));
    let case = txs
        .as_array()
        .unwrap()
        .iter()
        .find(|t| t["chain"] == "ETH" && t["depositor"].as_str().map(str::to_lowercase).as_deref() == Some(VICTIM))
        .expect("case-study victim transfer");
    assert_eq!(case["amount"], "5");
    assert_eq!(case["to"], SCAM);
    let loss = data(&tmp.path().join("victims/loss.json"));
    // 5 + 0.5 + 2 + 0.3 to the first address, 1 to the second.
    assert_eq!(loss[0]["chain"], "ETH");
    assert_eq!(loss[0]["total_amount"], "8.8");
    assert_eq!(loss[1]["chain"], "BSC");
    assert_eq!(loss[1]["total_amount"], "3.5");
    let overlap = data(&tmp.path().join("victims/overlap.json"));
    assert_eq!(overlap["cross_chain_count"], 1);
    assert_eq!(overlap["distinct_total"], 6);
    let flow = tmp
        .path()
        .join("victims/flows/ETH")
        .join(format!("{}.dot", SCAM.to_lowercase()));
    assert!(fs::read_to_string(flow).unwrap().starts_with("digraph"));
}

#[test]
fn cluster_six_profiles_with_one_shared_url() {
    let tmp = tempfile::tempdir().unwrap();
    let out = scamlens(&[
        "--out",
        p(tmp.path()),
        "cluster",
        "--profiles",
        p(&fixtures().join("cluster/six_profiles.jsonl")),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = data(&tmp.path().join("cluster/clusters.json"));
    assert_eq!(report["clusters"].as_array().unwrap().len(), 1);
    assert_eq!(report["clusters"][0]["members"].as_array().unwrap().len(), 2);
    assert_eq!(report["singletons"].as_array().unwrap().len(), 4);
    let links = data(&tmp.path().join("cluster/links.json"));
    assert_eq!(links[0]["linkage"], "ContractUrl");
}

#[test]
fn cluster_of_no_profiles_is_empty() {
    let tmp = tempfile::tempdir().unwrap();
    let profiles = write(tmp.path(), "p.jsonl", "");
    let out = scamlens(&["--out", p(tmp.path()), "--format", "csv", "cluster", "--profiles", p(&profiles)]);
    assert_eq!(code(&out), 0);
    let report = data(&tmp.path().join("cluster/clusters.json"));
    assert_eq!(report["clusters"], Value::Array(vec![]));
    assert_eq!(fs::read_to_string(tmp.path().join("cluster/top.csv")).unwrap(), "");
}

#[test]
fn cluster_links_case_study_addresses_by_transaction() {
    let tmp = tempfile::tempdir().unwrap();
    let profiles = write(
        tmp.path(),
        "p.jsonl",
        &format!("{{\"address\":\"{SCAM}\"}}\n{{\"address\":\"{SCAM2}\"}}\n"),
    );
    let out = scamlens(&[
        "--out",
        p(tmp.path()),
        "cluster",
        "--profiles",
        p(&profiles),
        "--chain",
        p(&fixtures().join("chain/case_study")),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let links = data(&tmp.path().join("cluster/links.json"));
    assert_eq!(links.as_array().unwrap().len(), 1);
    assert_eq!(links[0]["linkage"], "Transaction");
    let summary = data(&tmp.path().join("cluster/summary.json"));
    let rep = summary["top"][0]["Representative Address"].as_str().unwrap();
    assert!(rep.eq_ignore_ascii_case(SCAM), "{rep}");
}

#[test]
fn config_errors_exit_with_status_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", "[similarity]\nhigh = 0.7\nmedium = 0.9\n");
    let out = scamlens(&["--config", p(&cfg), "extract"]);
    assert_eq!(code(&out), 2);
    let cfg = write(tmp.path(), "c.toml", "[paths]\nvideos = \"missing.jsonl\"\n");
    assert_eq!(code(&scamlens(&["--config", p(&cfg), "triage"])), 2);
    assert_eq!(code(&scamlens(&["bogus-command"])), 2);
}

#[test]
fn config_file_can_come_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        &format!("out_dir = \"o\"\n[paths]\ncontracts = \"{}\"\n", p(&fixtures().join("contracts"))),
    );
    let out = Command::new(env!("CARGO_BIN_EXE_scamlens"))
        .arg("extract")
        .env("SCAMLENS_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("o/extract/manifest.json").exists());
}

#[test]
fn snapshot_merges_chain_fixtures() {
    let tmp = tempfile::tempdir().unwrap();
    let dest = tmp.path().join("merged");
    let out = scamlens(&[
        "snapshot",
        "--chain",
        p(&fixtures().join("chain/case_study")),
        "--chain",
        p(&fixtures().join("demo/chain_bsc")),
        "--dest",
        p(&dest),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let count = |d: &Path| fs::read_to_string(d.join("txs.jsonl")).unwrap().lines().count();
    assert_eq!(
        count(&dest),
        count(&fixtures().join("chain/case_study")) + count(&fixtures().join("demo/chain_bsc"))
    );
    // A snapshot merged with itself is unchanged.
    let again = tmp.path().join("again");
    let out = scamlens(&["snapshot", "--chain", p(&dest), "--chain", p(&dest), "--dest", p(&again)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read(dest.join("txs.jsonl")).unwrap(),
        fs::read(again.join("txs.jsonl")).unwrap()
    );
}

#[test]
fn report_all_builds_clusters_from_videos_and_chains() {
    let tmp = tempfile::tempdir().unwrap();
    let out = scamlens(&[
        "--config",
        p(&fixtures().join("demo/config.toml")),
        "--out",
        p(tmp.path()),
        "report-all",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for dir in ["triage", "extract", "probes", "expand", "victims", "cluster"] {
        assert!(tmp.path().join(dir).join("manifest.json").exists(), "{dir}");
    }
    let report = data(&tmp.path().join("cluster/clusters.json"));
    let cluster = &report["clusters"][0];
    let members: Vec<&str> = cluster["members"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(members.contains(&SCAM) && members.contains(&SCAM2));
    assert!(cluster["accounts"].as_array().unwrap().iter().any(|a| a == "cryptoguru"));
}
