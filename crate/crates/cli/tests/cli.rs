use std::path::Path;
use std::process::Command;

fn ts2img(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_ts2img"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("TS2IMG_CACHE_DIR")
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(
        out.status.success(),
        "ts2img {args:?} failed\nstdout: {stdout}\nstderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout
}

fn pngs(dir: &Path) -> usize {
    std::fs::read_dir(dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png"))
        .count()
}

#[test]
fn render_one_plot_per_variable_or_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plots");
    ts2img(&["render", "--dataset", "synthetic:fisio_like:2:3", "--out", out.to_str().unwrap()]);
    assert_eq!(pngs(&out.join("train")), 8);

    let overlay = dir.path().join("overlay");
    ts2img(&[
        "render",
        "--dataset",
        "synthetic:fisio_like:2:3",
        "--out",
        overlay.to_str().unwrap(),
        "--overlay",
    ]);
    assert_eq!(pngs(&overlay.join("train")), 4);

    let log = dir.path().join("log");
    ts2img(&["render", "--dataset", "synthetic:optox_like:2", "--out", log.to_str().unwrap(), "--log-x"]);
    assert_eq!(pngs(&log.join("train")), 26);
}

#[test]
fn bad_arguments_fail() {
    let st = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_ts2img"))
            .args(args)
            .output()
            .unwrap()
            .status
    };
    assert!(!st(&["render", "--dataset", "synthetic:nope", "--out", "/tmp/x"]).success());
    assert!(!st(&["runs", "--config", "c.json", "--preset", "medium"]).success());
    assert!(!st(&["train", "--config", "/definitely/missing.json"]).success());
    // fisio series start at t = 0
    assert!(!st(&["render", "--dataset", "synthetic:fisio_like:2", "--out", "/tmp/x", "--log-x"]).success());
}

#[test]
fn experiment_then_featuremaps_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let exp = dir.path().join("exp");
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        format!(
            r#"{{
  "dataset": {{ "kind": "synthetic", "generator": "waveshape2", "n_per_class": 5 }},
  "model": {{ "filters": [2, 2, 2, 2, 2], "fc_units": [4, 4], "epochs": 1, "batch_size": 4 }},
  "preprocess": {{ "grayscale": true }},
  "save_checkpoints": true,
  "output_dir": {:?}
}}"#,
            exp.to_str().unwrap()
        ),
    )
    .unwrap();

    let printed = ts2img(&["runs", "--config", config.to_str().unwrap(), "--preset", "screen"]);
    assert!(printed.contains("median test accuracy"), "{printed}");
    let csv = std::fs::read_to_string(exp.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 5);
    assert!(exp.join("config.json").exists());

    // everything is already there, so a second call only re-reads it
    let again = ts2img(&["train", "--config", config.to_str().unwrap()]);
    assert!(again.contains("5 run(s) already present"), "{again}");
    assert_eq!(std::fs::read_to_string(exp.join("results.csv")).unwrap(), csv);

    let ckpt = exp.join("checkpoints/waveshape2__univariate__seed1.ckpt");
    let plots = dir.path().join("plots");
    ts2img(&["render", "--dataset", "synthetic:waveshape2:5", "--out", plots.to_str().unwrap()]);
    let image = plots.join("train/00000_c0.png");
    let grid = dir.path().join("grid.png");
    let said = ts2img(&[
        "featuremaps",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--image",
        image.to_str().unwrap(),
        "--block",
        "1",
        "--out",
        grid.to_str().unwrap(),
    ]);
    assert!(said.starts_with("2 maps of 288x432"), "{said}");
    assert!(grid.exists());

    std::fs::write(
        exp.join("baselines.csv"),
        "method,dataset,run,accuracy\nRF,waveshape2,1,0.5\nRF,waveshape2,2,0.6\nRF,waveshape2,3,0.55\n",
    )
    .unwrap();
    let files = ts2img(&["report", "--out", exp.to_str().unwrap()]);
    assert!(files.contains("medians_test.csv") && files.contains("pvalues_waveshape2.csv"), "{files}");
    let medians = std::fs::read_to_string(exp.join("medians_test.csv")).unwrap();
    assert!(medians.contains("RF") && medians.contains("CNN"), "{medians}");

    let stats_out = dir.path().join("stats");
    ts2img(&[
        "stats",
        "--results",
        exp.join("results.csv").to_str().unwrap(),
        "--out",
        stats_out.to_str().unwrap(),
    ]);
    assert!(stats_out.join("ranks_test.csv").exists());
}
