use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use headwayrl::agent::CHECKPOINT_MAGIC;
use tempfile::TempDir;

const SMALL: &str = "\
[agent]
episodes = 3

[ga]
population = 6
generations = 3
ls_budget = 5

[synthetic]
passengers = 400
";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_headwayrl"));
    c.env("HEADWAYRL_LOG", "warn");
    c
}

fn setup() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    std::fs::write(&config, SMALL).unwrap();
    (dir, config)
}

fn headwayrl(config: &Path, out: &Path, args: &[&str]) -> Output {
    bin()
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn ok(o: Output) -> Output {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap_or("")
        .to_string()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn output_schemas() {
    let (dir, cfg) = setup();
    let data = dir.path().join("data");
    ok(headwayrl(&cfg, &data, &["gen-data", "--passengers", "300"]));
    assert_eq!(
        header(&data.join("demand.csv")),
        "id,arrival_minute,origin_station,destination_station"
    );
    assert_eq!(
        std::fs::read_to_string(data.join("demand.csv"))
            .unwrap()
            .lines()
            .count(),
        301
    );

    let run = dir.path().join("train");
    let demand = data.join("demand.csv");
    ok(headwayrl(
        &cfg,
        &run,
        &["train", "--demand", demand.to_str().unwrap()],
    ));
    assert_eq!(header(&run.join("timetable.csv")), "depart_minute");
    assert_eq!(
        header(&run.join("reward_curve.csv")),
        "episode,mean_reward,nd,awt,nsp"
    );
    assert_eq!(
        std::fs::read_to_string(run.join("reward_curve.csv"))
            .unwrap()
            .lines()
            .count(),
        4
    );

    let m = json(&run.join("metrics.json"));
    for key in ["nd", "awt", "nsp", "unserved"] {
        assert!(m[key].is_number(), "metrics.json lacks {key}");
    }
    let series = m["capacity_series"].as_array().unwrap();
    assert!(!series.is_empty());
    for b in series {
        assert_eq!(b["minute_bucket"].as_u64().unwrap() % 30, 0);
        assert!(b["provided"].is_number() && b["consumed"].is_number());
    }

    let trace = std::fs::read_to_string(run.join("trace.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = trace
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 961);
    for r in &lines {
        assert_eq!(r["state"].as_array().unwrap().len(), 6);
        for key in ["m", "action", "forced", "reward", "t_ml", "committed"] {
            assert!(!r[key].is_null(), "trace record lacks {key}");
        }
    }
    let committed = lines.iter().filter(|r| r["committed"] == true).count();
    assert_eq!(committed as u64, m["nd"].as_u64().unwrap());

    let ckpt = std::fs::read(run.join("checkpoint.bin")).unwrap();
    assert_eq!(&ckpt[..8], CHECKPOINT_MAGIC);
    let header_len = u32::from_le_bytes(ckpt[12..16].try_into().unwrap()) as usize;
    let meta: serde_json::Value = serde_json::from_slice(&ckpt[16..16 + header_len]).unwrap();
    let sizes: Vec<usize> = meta["sizes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap() as usize)
        .collect();
    let params: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    let count =
        u64::from_le_bytes(ckpt[16 + header_len..24 + header_len].try_into().unwrap()) as usize;
    assert_eq!(count, params);
    assert_eq!(ckpt.len(), 24 + header_len + 8 * params);

    let manifest = json(&run.join("manifest.json"));
    assert_eq!(manifest["command"]["name"], "train");
    assert!(manifest["inputs"]
        .as_object()
        .unwrap()
        .keys()
        .any(|k| k.ends_with("demand.csv")));
    assert!(manifest["outputs"]
        .as_object()
        .unwrap()
        .contains_key("checkpoint.bin"));
}

#[test]
fn search_and_scenario_tables() {
    let (dir, cfg) = setup();
    let out = dir.path().join("scn");
    ok(headwayrl(
        &cfg,
        &out,
        &[
            "scenario",
            "--transform",
            "shift",
            "--values",
            "-60,0,60",
            "--methods",
            "ga,memetic",
        ],
    ));
    for m in ["ga", "memetic"] {
        assert_eq!(
            header(&out.join(format!("fitness_{m}.csv"))),
            "generation,best,mean"
        );
        let rows = std::fs::read_to_string(out.join(format!("fitness_{m}.csv"))).unwrap();
        assert_eq!(rows.lines().count(), 1 + 4);
    }
    assert_eq!(
        header(&out.join("scenario_shift.csv")),
        "transform,value,method,nd,awt,nsp,unserved"
    );
    assert_eq!(
        header(&out.join("table_shift.csv")),
        "method,metric,-60,0,60"
    );
}

#[test]
fn identity_transforms_match_plain_evaluation() {
    let (dir, cfg) = setup();
    let manual = dir.path().join("manual.csv");
    let deps: String = (360..=1320).step_by(10).map(|m| format!("{m}\n")).collect();
    std::fs::write(&manual, format!("depart_minute\n{deps}")).unwrap();

    let base = dir.path().join("eval");
    ok(headwayrl(
        &cfg,
        &base,
        &["eval", "--timetable", manual.to_str().unwrap()],
    ));
    let m = json(&base.join("metrics.json"));

    for (transform, value) in [("shift", "0"), ("sample", "1")] {
        let out = dir.path().join(transform);
        ok(headwayrl(
            &cfg,
            &out,
            &[
                "scenario",
                "--transform",
                transform,
                "--values",
                value,
                "--methods",
                "manual",
                "--manual",
                manual.to_str().unwrap(),
            ],
        ));
        let mut r = csv::Reader::from_path(out.join(format!("scenario_{transform}.csv"))).unwrap();
        let row = r.records().next().unwrap().unwrap();
        assert_eq!(row[3].parse::<u64>().unwrap(), m["nd"].as_u64().unwrap());
        assert_eq!(row[4].parse::<f64>().unwrap(), m["awt"].as_f64().unwrap());
        assert_eq!(row[5].parse::<u64>().unwrap(), m["nsp"].as_u64().unwrap());
        assert_eq!(
            row[6].parse::<u64>().unwrap(),
            m["unserved"].as_u64().unwrap()
        );
    }
}

#[test]
fn trained_timetable_and_checkpoint_evaluate_identically() {
    let (dir, cfg) = setup();
    let run = dir.path().join("train");
    ok(headwayrl(&cfg, &run, &["train"]));
    let by_table = dir.path().join("by_table");
    let by_ckpt = dir.path().join("by_ckpt");
    ok(headwayrl(
        &cfg,
        &by_table,
        &[
            "eval",
            "--timetable",
            run.join("timetable.csv").to_str().unwrap(),
        ],
    ));
    ok(headwayrl(
        &cfg,
        &by_ckpt,
        &[
            "eval",
            "--checkpoint",
            run.join("checkpoint.bin").to_str().unwrap(),
        ],
    ));
    let trained = std::fs::read(run.join("metrics.json")).unwrap();
    assert_eq!(
        std::fs::read(by_table.join("metrics.json")).unwrap(),
        trained
    );
    assert_eq!(
        std::fs::read(by_ckpt.join("metrics.json")).unwrap(),
        trained
    );
    assert_eq!(
        std::fs::read(by_ckpt.join("trace.jsonl")).unwrap(),
        std::fs::read(run.join("trace.jsonl")).unwrap()
    );
}

#[test]
fn seed_and_jobs() {
    let (dir, cfg) = setup();
    let run = |seed: &str, jobs: &str, name: &str| {
        let out = dir.path().join(name);
        ok(bin()
            .args([
                "--config",
                cfg.to_str().unwrap(),
                "--seed",
                seed,
                "--jobs",
                jobs,
                "--out",
            ])
            .arg(&out)
            .args([
                "sweep",
                "--param",
                "omega",
                "--values",
                "1/5000,1/500",
                "--repeats",
                "1",
            ])
            .output()
            .unwrap());
        std::fs::read(out.join("sweep_omega_runs.csv")).unwrap()
    };
    let a = run("5", "1", "a");
    assert_eq!(a, run("5", "2", "b"));
    assert_ne!(a, run("6", "1", "c"));
}

#[test]
fn rerun_reproduces_outputs() {
    let (dir, cfg) = setup();
    let first = dir.path().join("first");
    ok(headwayrl(
        &cfg,
        &first,
        &["ablate", "--variant", "full,drop-feature:x4"],
    ));
    let again = dir.path().join("again");
    ok(bin()
        .arg("--out")
        .arg(&again)
        .arg("rerun")
        .arg(first.join("manifest.json"))
        .output()
        .unwrap());
    let mut names: Vec<_> = std::fs::read_dir(&first)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 4);
    for n in names {
        assert_eq!(
            std::fs::read(first.join(&n)).unwrap(),
            std::fs::read(again.join(&n)).unwrap(),
            "{n:?}"
        );
    }
}

#[test]
fn rerun_rejects_changed_inputs() {
    let (dir, cfg) = setup();
    let data = dir.path().join("data");
    ok(headwayrl(&cfg, &data, &["gen-data", "--passengers", "100"]));
    let demand = data.join("demand.csv");
    let manual = dir.path().join("manual.csv");
    let deps: String = (360..=1320).step_by(15).map(|m| format!("{m}\n")).collect();
    std::fs::write(&manual, format!("depart_minute\n{deps}")).unwrap();
    let first = dir.path().join("first");
    ok(headwayrl(
        &cfg,
        &first,
        &[
            "eval",
            "--timetable",
            manual.to_str().unwrap(),
            "--demand",
            demand.to_str().unwrap(),
        ],
    ));

    std::fs::write(
        &manual,
        format!("depart_minute\n{}", deps.replace("375\n", "374\n")),
    )
    .unwrap();
    let o = bin()
        .arg("--out")
        .arg(dir.path().join("again"))
        .arg("rerun")
        .arg(first.join("manifest.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("manual.csv"));
}

#[test]
fn errors_are_reported() {
    let (dir, cfg) = setup();
    let out = dir.path().join("x");

    // clap usage errors exit with 2
    let o = headwayrl(&cfg, &out, &["eval"]);
    assert_eq!(o.status.code(), Some(2));
    let both = headwayrl(
        &cfg,
        &out,
        &["eval", "--timetable", "a.csv", "--checkpoint", "b.bin"],
    );
    assert_eq!(both.status.code(), Some(2));

    let bad_config = dir.path().join("bad.toml");
    std::fs::write(&bad_config, "[agent]\nepisodez = 3\n").unwrap();
    let o = headwayrl(&bad_config, &out, &["train"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("episodez"));

    let o = headwayrl(
        &cfg,
        &out,
        &["train", "--demand", "/nonexistent/demand.csv"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let backwards = dir.path().join("backwards.csv");
    std::fs::write(
        &backwards,
        "id,arrival_minute,origin_station,destination_station\na,400,3,2\n",
    )
    .unwrap();
    let o = headwayrl(
        &cfg,
        &out,
        &["train", "--demand", backwards.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("destination before origin"));

    let tight = dir.path().join("tight.csv");
    std::fs::write(&tight, "depart_minute\n360\n400\n1320\n").unwrap();
    let o = headwayrl(
        &cfg,
        &out,
        &["eval", "--timetable", tight.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(1));

    let o = headwayrl(
        &cfg,
        &out,
        &[
            "scenario",
            "--transform",
            "shift",
            "--values",
            "0",
            "--methods",
            "manual",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--manual"));

    let o = headwayrl(&cfg, &out, &["train", "--variant", "nonsense"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            headwayrl_cli::config::RunConfig::load(&path)
                .and_then(|c| c.resolved(None))
                .unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4);
    let reference = headwayrl_cli::config::RunConfig::load(&dir.join("reference.toml")).unwrap();
    assert_eq!(reference, headwayrl_cli::config::RunConfig::default());
}
