use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use heavyball::lyapunov::{descent_rows, diagnostics_csv, parse_summary, series, DIAGNOSTICS_HEADER};
use heavyball::problems::{generate_data, Distribution};
use heavyball::solvers::TRACE_HEADER;
use heavyball::{Dataset, IterateTrace};
use heavyball_cli::artifacts::parse_meta;
use heavyball_cli::ExperimentConfig;

fn heavyball(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heavyball"))
        .args(args)
        .output()
        .unwrap()
}

fn small(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "--n",
        "12",
        "--m",
        "20",
        "--iters",
        "80",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    heavyball(&args)
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("out");
    fs::write(
        &cfg,
        format!(
            "# sweep\nsolver = stochastic\nn = 12\nm = 20\niters = 60\nreplicates = 4\nblocks = 3\nbeta = 0, 0.3\nout = {}\nsvg = true\n",
            out.display()
        ),
    )
    .unwrap();
    let first = heavyball(&["--config", cfg.to_str().unwrap()]);
    assert!(first.status.code().is_some(), "{}", stderr(&first));
    let a = snapshot(&out);
    fs::remove_dir_all(&out).unwrap();
    let second = heavyball(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(first.status.code(), second.status.code());
    assert_eq!(stdout(&first), stdout(&second));
    let b = snapshot(&out);
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (name, bytes) in &a {
        assert!(bytes == &b[name], "{name} differs between runs");
    }
    for name in [
        "beta_0/replicates.csv",
        "beta_0.3/mean.csv",
        "plot.svg",
        "sweep.csv",
        "plot.csv",
    ] {
        assert!(a.contains_key(name), "missing {name}");
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "solver = cyclic\nblocks = 3\nbeta = 0.1\niters = 40\nn = 12\nm = 20\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = heavyball(&[
        "--config",
        cfg.to_str().unwrap(),
        "--beta",
        "0.2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let echoed = ExperimentConfig::load(&out.join("config.txt")).unwrap();
    assert_eq!(echoed.betas, vec![0.2]);
    assert_eq!(echoed.iters, 40);
    assert_eq!(echoed.blocks, Some(3));
    let sweep = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 2);
    assert!(sweep.lines().nth(1).unwrap().starts_with("0.2,"));
    assert!(stdout(&o).contains("LEMMA_3: PASS"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = small(&dir.path().join("ok"), &[]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));

    let bad = small(&dir.path().join("bad"), &["--beta", "0.6"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("beta < 0.5"), "{}", stderr(&bad));

    let unknown = small(&dir.path().join("unknown"), &["--solver", "adam"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(stderr(&unknown).contains("adam"));

    let alpha = small(
        &dir.path().join("alpha"),
        &["--solver", "decentralized", "--beta", "0.2", "--alpha", "10"],
    );
    assert_eq!(alpha.status.code(), Some(2));
    assert!(stderr(&alpha).contains("α"), "{}", stderr(&alpha));

    // repeated β cannot be strictly ordered, so the ORDERING verdict fails
    let tie = small(&dir.path().join("tie"), &["--beta", "0.3,0.3"]);
    assert_eq!(tie.status.code(), Some(1), "{}", stdout(&tie));
    assert!(stdout(&tie).contains("ORDERING: FAIL"));
}

#[test]
fn artifacts_parse_back_without_loss() {
    let dir = tempfile::tempdir().unwrap();
    for solver in ["hb", "cyclic"] {
        let out = dir.path().join(solver);
        let o = small(
            &out,
            &[
                "--solver",
                solver,
                "--blocks",
                if solver == "hb" { "1" } else { "3" },
            ],
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

        let text = fs::read_to_string(out.join("trace.csv")).unwrap();
        assert!(text.starts_with(TRACE_HEADER));
        let meta = parse_meta(&fs::read_to_string(out.join("trace_meta.txt")).unwrap()).unwrap();
        let trace = IterateTrace::from_csv(&text, meta).unwrap();
        assert_eq!(trace.to_csv(), text);
        let s = series(&trace).unwrap();
        let diagnostics = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
        assert!(diagnostics.starts_with(DIAGNOSTICS_HEADER));
        assert_eq!(diagnostics_csv(&s, &descent_rows(&trace).unwrap()), diagnostics);

        let summary = parse_summary(&fs::read_to_string(out.join("summary.txt")).unwrap()).unwrap();
        assert_eq!(summary.len(), 4);
        assert!(summary.iter().all(|v| v.pass));

        let data = Dataset::from_csv(&fs::read_to_string(out.join("data.csv")).unwrap()).unwrap();
        assert_eq!(data, generate_data(12, 20, Distribution::Gaussian, 1).unwrap());

        let plot = fs::read_to_string(out.join("plot.csv")).unwrap();
        assert_eq!(plot.lines().next(), Some("k,residual"));
        let residuals: Vec<f64> = plot
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(residuals.len(), 81);
        assert!(residuals.iter().all(|r| *r > 0.0));
        assert!(residuals[80] < residuals[0]);
    }
}

#[test]
fn sweep_summary_has_sections_and_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = small(&out, &["--beta", "0,0.2,0.4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert_eq!(summary.matches("# beta=").count(), 3);
    let verdicts = parse_summary(&summary).unwrap();
    assert_eq!(verdicts.len(), 13);
    assert_eq!(verdicts.last().unwrap().label, "ORDERING");
    let plot = fs::read_to_string(out.join("plot.csv")).unwrap();
    assert_eq!(plot.lines().next(), Some("k,beta=0,beta=0.2,beta=0.4"));
    for b in ["0", "0.2", "0.4"] {
        assert!(out.join(format!("beta_{b}/trace.csv")).exists());
    }
}

#[test]
fn decentralized_run_from_an_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("ring.txt");
    fs::write(&edges, "4\n0 1\n1 2\n2 3\n3 0\n").unwrap();
    let out = dir.path().join("dec");
    let o = small(
        &out,
        &[
            "--solver",
            "decentralized",
            "--beta",
            "0.2",
            "--network",
            edges.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("k,F,residual,consensus_error\n"));
    assert_eq!(trace.lines().count(), 82);
    let summary = parse_summary(&fs::read_to_string(out.join("summary.txt")).unwrap()).unwrap();
    let labels: Vec<&str> = summary.iter().map(|v| v.label.as_str()).collect();
    assert_eq!(labels, ["EQUIVALENCE", "LEMMA_1", "COROLLARY_2"]);
}

#[test]
fn stochastic_runs_write_replicates_and_means() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("st");
    let o = small(
        &out,
        &[
            "--solver",
            "stochastic",
            "--problem",
            "logreg",
            "--replicates",
            "5",
            "--blocks",
            "3",
        ],
    );
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    let reps = fs::read_to_string(out.join("replicates.csv")).unwrap();
    assert_eq!(reps.lines().next().unwrap(), format!("replicate,{TRACE_HEADER}"));
    assert_eq!(reps.lines().count(), 5 * 81 + 1);
    let mean = fs::read_to_string(out.join("mean.csv")).unwrap();
    assert_eq!(mean.lines().count(), 82);
    let labels: Vec<String> = parse_summary(&fs::read_to_string(out.join("summary.txt")).unwrap())
        .unwrap()
        .into_iter()
        .map(|v| v.label)
        .collect();
    assert_eq!(
        labels,
        ["LEMMA_5", "LEMMA_6", "THEOREM_5", "THEOREM_6", "THEOREM_7"]
    );
}
