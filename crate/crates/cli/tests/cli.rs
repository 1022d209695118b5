use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mlgcn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlgcn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tiny() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/tiny")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn records(stdout: &[u8]) -> Vec<serde_json::Value> {
    String::from_utf8_lossy(stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn default_config_on_tiny_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "a.conf", &format!("dataset = {}\n", tiny().display()));
    let out = mlgcn(&["train", "--config", s(&cfg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&out.stdout);
    assert_eq!(recs.iter().filter(|r| r["record"] == "epoch").count(), 200);
}

#[test]
fn negative_lambda_warns_and_unknown_key_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!("dataset = {}\nepochs = 3\nlambda1 = -1\n", tiny().display());
    let cfg = write_config(tmp.path(), "neg.conf", &body);
    let out = mlgcn(&["train", "--config", s(&cfg)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda1"));

    let cfg = write_config(tmp.path(), "typo.conf", "lamda1 = 0.3\n");
    let out = mlgcn(&["train", "--config", s(&cfg)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
}

#[test]
fn eval_reproduces_the_final_training_score() {
    let tmp = tempfile::tempdir().unwrap();
    let body = "dataset = synthetic\nepochs = 30\nhidden_dim = 8\nsynth_n = 120\nsynth_classes = 4\n\
                synth_corr_pairs = 0:1:0.8\nsynth_noise_dims = 4\nsynth_train_fraction = 0.3\n";
    let cfg = write_config(tmp.path(), "s.conf", body);
    let run = tmp.path().join("run");
    let train = mlgcn(&["train", "--config", s(&cfg), "--out", s(&run)]);
    assert!(train.status.success(), "{}", String::from_utf8_lossy(&train.stderr));
    let train_test = records(&train.stdout)
        .into_iter()
        .find(|r| r["record"] == "score" && r["split"] == "test")
        .unwrap();

    let eval = mlgcn(&["eval", "--config", s(&cfg), "--model", s(&run.join("model.bin"))]);
    assert!(eval.status.success());
    let score = records(&eval.stdout).pop().unwrap();
    assert_eq!(score["micro_f1"], train_test["micro_f1"]);
    let pct = score["micro_f1_percent"].as_str().unwrap();
    assert_eq!(pct.split('.').nth(1).map(str::len), Some(2), "{pct}");
    assert!(String::from_utf8_lossy(&eval.stderr).contains(&format!("{pct}%")));

    let five = write_config(tmp.path(), "five.conf", &body.replace("synth_classes = 4", "synth_classes = 5"));
    let bad = mlgcn(&["eval", "--config", s(&five), "--model", s(&run.join("model.bin"))]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("classes"));
}

#[test]
fn manifest_replays_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!("dataset = {}\nepochs = 20\nhidden_dim = 5\nseed = 4\n", tiny().display());
    let cfg = write_config(tmp.path(), "m.conf", &body);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(mlgcn(&["train", "--config", s(&cfg), "--out", s(&a)]).status.success());
    let replay = mlgcn(&["train", "--config", s(&a.join("manifest.json")), "--out", s(&b)]);
    assert!(replay.status.success(), "{}", String::from_utf8_lossy(&replay.stderr));
    for f in ["metrics.jsonl", "model.bin"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn gen_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "g.conf", "synth_n = 50\nsynth_seed = 9\n");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(mlgcn(&["gen", "--config", s(&cfg), "--out", s(&a)]).status.success());
    assert!(mlgcn(&["gen", "--config", s(&cfg), "--out", s(&b)]).status.success());
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 5);
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap());
    }
}

#[test]
fn gradcheck_on_the_builtin_fixture() {
    let out = mlgcn(&["gradcheck"]);
    assert!(out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("W0") && err.contains("W1") && err.contains("Z"), "{err}");
    assert_eq!(records(&out.stdout)[0]["passed"], true);
}

#[test]
fn sweep_prints_both_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let body = "dataset = synthetic\nepochs = 5\nhidden_dim = 4\nseeds = 2\nsynth_n = 100\n";
    let cfg = write_config(tmp.path(), "w.conf", body);
    let out_dir = tmp.path().join("sweep");
    let out = mlgcn(&["sweep", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&out.stdout);
    assert_eq!(recs.iter().filter(|r| r["record"] == "ablation").count(), 8);
    assert_eq!(recs.iter().filter(|r| r["record"] == "size_sweep").count(), 16);
    let tables = fs::read_to_string(out_dir.join("tables.txt")).unwrap();
    for col in ["10%", "20%", "30%", "40%", "full", "Partly ML-GCN"] {
        assert!(tables.contains(col), "{tables}");
    }
}
