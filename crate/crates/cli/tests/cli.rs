//! End-to-end CLI tests: every subcommand, exit codes, and byte determinism.

use std::path::Path;
use std::process::{Command, Output};

fn affect(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_affect"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

#[test]
fn full_pipeline_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let spec_file = dir.path().join("spec.cfg");
    std::fs::write(
        &spec_file,
        "n_participants=2\nclips_negative=2\nclips_neutral=3\nclips_positive=3\nclip_seconds_min=3.0\nclip_seconds_max=4.0\nfps=10\nseed=13\n",
    )
    .unwrap();

    // synth
    let out = affect(&["synth", "--spec", &path_str(&spec_file), "--out", &path_str(&corpus)]);
    assert!(out.status.success(), "synth failed: {}", String::from_utf8_lossy(&out.stderr));
    let manifest = corpus.join("manifest.csv");
    assert!(manifest.exists());
    assert!(corpus.join("gallery.afgal").exists());
    assert!(corpus.join("effective_spec.cfg").exists());

    // spectrogram on one generated WAV
    let spectro_dir = dir.path().join("spectro");
    let wav = corpus.join("audio/c0001.wav");
    let out = affect(&["spectrogram", "--out", &path_str(&spectro_dir), &path_str(&wav)]);
    assert!(out.status.success(), "spectrogram failed: {}", String::from_utf8_lossy(&out.stderr));
    assert!(spectro_dir.join("c0001_seg000.afmel").exists());

    // train
    let models = dir.path().join("models");
    let out = affect(&["train", "--manifest", &path_str(&manifest), "--out", &path_str(&models)]);
    assert!(out.status.success(), "train failed: {}", String::from_utf8_lossy(&out.stderr));
    for f in ["stage1.afmdl", "stage2.afmdl", "stats.afnrm", "effective.cfg"] {
        assert!(models.join(f).exists(), "{f} missing");
    }

    // predict, twice, byte identical
    let preds1 = dir.path().join("preds1.csv");
    let preds2 = dir.path().join("preds2.csv");
    for (preds, workers) in [(&preds1, "1"), (&preds2, "3")] {
        let out = affect(&[
            "predict",
            "--manifest",
            &path_str(&manifest),
            "--models",
            &path_str(&models),
            "--out",
            &path_str(preds),
            "--workers",
            workers,
        ]);
        assert!(out.status.success(), "predict failed: {}", String::from_utf8_lossy(&out.stderr));
    }
    let bytes1 = std::fs::read(&preds1).unwrap();
    let bytes2 = std::fs::read(&preds2).unwrap();
    assert_eq!(bytes1, bytes2, "prediction CSVs must be byte-identical at any worker count");

    // evaluate
    let out = affect(&["evaluate", "--predictions", &path_str(&preds1)]);
    assert!(out.status.success(), "evaluate failed: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("overall accuracy:"), "stdout: {stdout}");

    // crossval (2 groups)
    let cv = dir.path().join("cv");
    let out = affect(&[
        "crossval",
        "--manifest",
        &path_str(&manifest),
        "--out",
        &path_str(&cv),
        "--folds",
        "2",
    ]);
    assert!(out.status.success(), "crossval failed: {}", String::from_utf8_lossy(&out.stderr));
    for f in ["summary.txt", "pooled_metrics.csv", "per_fold.csv", "per_participant.csv", "confusion.txt", "predictions.csv", "effective.cfg"] {
        assert!(cv.join(f).exists(), "{f} missing");
    }
    let summary = std::fs::read_to_string(cv.join("summary.txt")).unwrap();
    assert!(summary.contains("pooled_accuracy="));
}

#[test]
fn evaluate_reproduces_724_percent_from_handbuilt_csv() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("preds.csv");
    // Diagonal (285, 43, 13) over class counts (384, 68, 19).
    let mut text = String::from(
        "clip_id,participant_id,true_label,pred_label,stage1_neg_ratio,stage2_votes,stage2_pos_ratio,discarded_frames,flags\n",
    );
    let mut clip = 0usize;
    let mut push = |true_l: &str, pred_l: &str, n: usize, clip: &mut usize| {
        for _ in 0..n {
            *clip += 1;
            text.push_str(&format!("c{clip:04},p1,{true_l},{pred_l},0.000000,,,0,\n"));
        }
    };
    push("neutral", "neutral", 285, &mut clip);
    push("neutral", "positive", 80, &mut clip);
    push("neutral", "negative", 19, &mut clip);
    push("positive", "positive", 43, &mut clip);
    push("positive", "neutral", 20, &mut clip);
    push("positive", "negative", 5, &mut clip);
    push("negative", "negative", 13, &mut clip);
    push("negative", "neutral", 4, &mut clip);
    push("negative", "positive", 2, &mut clip);
    assert_eq!(clip, 471);
    std::fs::write(&preds, text).unwrap();

    let out = affect(&["evaluate", "--predictions", &path_str(&preds)]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("overall accuracy: 72.40%"),
        "expected 72.40%, stdout:\n{stdout}"
    );
}

#[test]
fn exit_codes_follow_the_contract() {
    // Unknown flag: usage error, exit 1.
    let out = affect(&["predict", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());

    // Unknown subcommand: exit 1.
    let out = affect(&["transmogrify"]);
    assert_eq!(out.status.code(), Some(1));

    // Unknown config key: usage error naming the key, exit 1.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "volume=11\n").unwrap();
    let preds = dir.path().join("p.csv");
    std::fs::write(&preds, "clip_id,participant_id,true_label,pred_label,stage1_neg_ratio,stage2_votes,stage2_pos_ratio,discarded_frames,flags\nc1,p1,neutral,neutral,0.0,,,0,\n").unwrap();
    let out = affect(&["evaluate", "--predictions", &path_str(&preds), "--config", &path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("volume"));

    // Missing data file: data error, exit 2.
    let out = affect(&["evaluate", "--predictions", "/nonexistent/preds.csv"]);
    assert_eq!(out.status.code(), Some(2));

    // Corrupt manifest: data error, exit 2.
    let bad_manifest = dir.path().join("manifest.csv");
    std::fs::write(&bad_manifest, "not,a,manifest\n").unwrap();
    let out = affect(&[
        "train",
        "--manifest",
        &path_str(&bad_manifest),
        "--out",
        &path_str(&dir.path().join("m")),
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Help exits 0.
    let out = affect(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn gallery_builds_from_crop_directories() {
    let dir = tempfile::tempdir().unwrap();
    // Render one marker crop per identity through the library, write as PGM.
    use affect_cascade::mat::Mat;
    use affect_cascade::vision::marker::{identity_code, render_marker, MarkerExpression, MARKER_SIZE};
    use affect_cascade::vision::write_pgm;
    let crops = dir.path().join("crops");
    for (i, name) in ["child_a", "child_b"].iter().enumerate() {
        let identity_dir = crops.join(name);
        std::fs::create_dir_all(&identity_dir).unwrap();
        let mut img: Mat<f64> = Mat::filled(MARKER_SIZE, MARKER_SIZE, 0.1);
        render_marker(&mut img, 0, 0, &identity_code(i), MarkerExpression::Neutral, || 0.0);
        write_pgm(&img, &identity_dir.join("crop0.pgm")).unwrap();
    }
    let gallery = dir.path().join("g.afgal");
    let out = affect(&["gallery", "--crops", &path_str(&crops), "--out", &path_str(&gallery)]);
    assert!(out.status.success(), "gallery failed: {}", String::from_utf8_lossy(&out.stderr));
    assert!(gallery.exists());
    let loaded = affect_cascade::vision::FaceGallery::<f64>::load(&gallery, 0.4).unwrap();
    assert_eq!(loaded.len(), 2);
    assert_eq!(loaded.entries()[0].0, "child_a");
}
