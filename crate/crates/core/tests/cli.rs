use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use paretocl::synth::{two_cluster, write_tsv};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_paretocl"))
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        write_tsv(&two_cluster(40, 1), &dir.path().join("train.tsv")).unwrap();
        write_tsv(&two_cluster(40, 2), &dir.path().join("validation.tsv")).unwrap();
        let config = format!(
            "mode = \"ce_epo\"\nseeds = [0, 1]\n\n[train]\nepochs = 2\neval_interval = 2\n\n\
             [features]\ndim = 512\n\n[model]\nhidden = 16\nembed_dim = 8\n\n\
             [data]\ntrain = \"{0}/train.tsv\"\nvalidation = \"{0}/validation.tsv\"\n\n\
             [toy]\nsteps = 300\n\n[gradcheck]\nbatches = 2\nprobes = 10\n",
            dir.path().display()
        );
        std::fs::write(dir.path().join("c.toml"), config).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, sub: &str, out: &str, extra: &[&str]) -> Output {
        bin()
            .arg(sub)
            .arg("--config")
            .arg(self.path("c.toml"))
            .arg("--out")
            .arg(self.path(out))
            .args(extra)
            .output()
            .unwrap()
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn train_succeeds_and_is_byte_reproducible() {
    let ws = Workspace::new();
    let a = ws.run("train", "a", &["--embeddings"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let b = ws.run("train", "b", &["--embeddings"]);
    assert_eq!(code(&b), 0);
    for f in ["metrics.jsonl", "summary.json", "embeddings.tsv", "config.toml", "splits/seed-1/train.ids", "checkpoints/seed-0.ckpt"] {
        assert_eq!(std::fs::read(ws.path("a").join(f)).unwrap(), std::fs::read(ws.path("b").join(f)).unwrap(), "{f}");
    }
    let summary = json(&ws.path("a/summary.json"));
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["kind"], "run");
    assert_eq!(summary["per_seed"].as_array().unwrap().len(), 2);
    assert_eq!(summary["config"]["mode"], "ce_epo");
    assert_eq!(summary["dataset_digest"].as_str().unwrap().len(), 64);

    let metrics = std::fs::read_to_string(ws.path("a/metrics.jsonl")).unwrap();
    let records: Vec<Value> = metrics.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    // 2 seeds × 2 epochs × ceil(20/16) steps, plus one eval per 2 steps.
    assert_eq!(records.iter().filter(|r| r["record"] == "step").count(), 8);
    assert_eq!(records.iter().filter(|r| r["record"] == "eval").count(), 4);

    let emb = std::fs::read_to_string(ws.path("a/embeddings.tsv")).unwrap();
    let mut lines = emb.lines();
    assert_eq!(lines.next().unwrap().split('\t').count(), 3 + 8);
    assert_eq!(lines.count(), 2 * 20);
}

#[test]
fn ten_seeds_give_ten_entries() {
    let ws = Workspace::new();
    let o = ws.run("train", "ten", &["--set", "seeds=0,1,2,3,4,5,6,7,8,9", "--set", "train.epochs=1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&ws.path("ten/summary.json"));
    assert_eq!(s["per_seed"].as_array().unwrap().len(), 10);
    assert_eq!(s["aggregate"]["completed"], 10);
}

#[test]
fn eval_reproduces_the_seed_test_accuracy() {
    let ws = Workspace::new();
    assert_eq!(code(&ws.run("train", "t", &[])), 0);
    let ckpt = ws.path("t/checkpoints/seed-1.ckpt");
    let o = ws.run("eval", "e", &["--checkpoint", ckpt.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trained = json(&ws.path("t/summary.json"));
    let evaluated = json(&ws.path("e/summary.json"));
    assert_eq!(evaluated["test_accuracy"], trained["per_seed"][1]["test_accuracy"]);
    assert_eq!(evaluated["seed"], 1);
}

#[test]
fn override_is_echoed() {
    let ws = Workspace::new();
    let o = ws.run("split", "s", &["--set", "mode=ce_ls", "--set", "r=0.1,0.9"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let echo: toml::Table = toml::from_str(&std::fs::read_to_string(ws.path("s/config.toml")).unwrap()).unwrap();
    assert_eq!(echo["mode"].as_str(), Some("ce_ls"));
    assert_eq!(echo["r"].as_array().unwrap().len(), 2);
    let ids = std::fs::read_to_string(ws.path("s/splits/seed-0/train.ids")).unwrap();
    assert_eq!(ids.lines().count(), 1 + 20);
}

#[test]
fn validation_and_usage_errors_exit_2() {
    let ws = Workspace::new();
    let cases: [&[&str]; 5] = [
        &["--set", "tau=0"],
        &["--set", "colour=blue"],
        &["--set", "r=0.5,0.6"],
        &["--set", "noequals"],
        &["--set", "train.batch_size=2"],
    ];
    for extra in cases {
        let o = ws.run("train", "x", extra);
        assert_eq!(code(&o), 2, "{extra:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = ws.run("train", "x", &["--set", "tau=0"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("`tau`"));

    let o = bin().args(["train", "--out"]).arg(ws.path("x")).output().unwrap();
    assert_eq!(code(&o), 2, "missing --config");
    let o = bin().args(["train", "--config", "/nonexistent.toml", "--out"]).arg(ws.path("x")).output().unwrap();
    assert_eq!(code(&o), 2, "unreadable config");
    let o = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(code(&o), 2, "unknown subcommand");
    let bad = ws.path("bad.toml");
    std::fs::write(&bad, "tau = \"hot\"\n").unwrap();
    let o = bin().args(["train", "--config"]).arg(&bad).arg("--out").arg(ws.path("x")).output().unwrap();
    assert_eq!(code(&o), 2, "mistyped config value");
}

#[test]
fn runtime_failures_exit_1() {
    let ws = Workspace::new();
    let o = ws.run("train", "x", &["--set", "data.train=/nonexistent/train.tsv"]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    let o = ws.run("eval", "x", &["--checkpoint", "/nonexistent.ckpt"]);
    assert_eq!(code(&o), 1);
    let o = ws.run("train", "x", &["--set", "train.few_shot=500"]);
    assert_eq!(code(&o), 1, "every seed fails to split");
    std::fs::write(ws.path("file"), "").unwrap();
    let o = ws.run("toy", "file/sub", &[]);
    assert_eq!(code(&o), 1, "unwritable output directory");
}

#[test]
fn toy_prints_a_trace_and_reports() {
    let ws = Workspace::new();
    let o = ws.run("toy", "toy", &["--set", "r=0.25,0.75"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let first = stdout.lines().next().unwrap();
    for field in ["step=0", "f1=", "f2=", "mu=", "ray_gap=", "mode="] {
        assert!(first.contains(field), "{first}");
    }
    assert_eq!(std::fs::read_to_string(ws.path("toy/metrics.jsonl")).unwrap().lines().count(), 300);
    assert_eq!(json(&ws.path("toy/summary.json"))["kind"], "toy");

    let o = bin().args(["toy", "--out"]).arg(ws.path("toy-default")).args(["--set", "toy.steps=10"]).output().unwrap();
    assert_eq!(code(&o), 0, "toy runs without a config file");
}

#[test]
fn gradcheck_reports_each_objective() {
    let ws = Workspace::new();
    let o = ws.run("gradcheck", "g", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    for name in ["pos", "neg", "ce", "blend_pos", "blend_neg"] {
        assert!(stdout.lines().any(|l| l.starts_with(name)), "{stdout}");
    }
    assert_eq!(json(&ws.path("g/summary.json"))["pass"], true);
}

#[test]
fn sweep_over_a_small_grid() {
    let ws = Workspace::new();
    let o = ws.run(
        "sweep",
        "sw",
        &["--set", "sweep.tau=0.3,0.5", "--set", "sweep.lambda=0.3", "--set", "sweep.r1=0.1", "--set", "seeds=0", "--set", "train.epochs=1"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cells = std::fs::read_to_string(ws.path("sw/metrics.jsonl")).unwrap();
    assert_eq!(cells.lines().count(), 2);
    let s = json(&ws.path("sw/summary.json"));
    assert_eq!(s["cells"], 2);
    assert!(s["best"]["index"].as_u64().unwrap() < 2);
}
