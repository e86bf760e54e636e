use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use timbre_shape::audio::write_wav_pcm16;
use timbre_shape::synth::synth_click_track;

fn tshape(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tshape")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn click_wav(dir: &Path, name: &str, bpm: f64, secs: f64) -> PathBuf {
    let p = dir.join(name);
    write_wav_pcm16(&p, &synth_click_track(bpm, secs, 22050, 1).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

// Small settings keep the runs short.
const FAST: [&str; 6] = ["--beats", "4", "--dim", "16", "--biases", "120"];

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(tshape(&["--help"]).status.code(), Some(0));
    assert_eq!(tshape(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(tshape(&[]).status.code(), Some(1));
    assert_eq!(tshape(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(tshape(&["dump", "what", "x.wav"]).status.code(), Some(1));
    assert_eq!(tshape(&["score", "a.wav", "b.wav", "--kappa", "2"]).status.code(), Some(1));
    assert_eq!(tshape(&["score", "a.wav", "b.wav", "--beats", "x"]).status.code(), Some(1));
}

#[test]
fn missing_audio_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.wav");
    let o = tshape(&["score", s(&missing), s(&missing)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.wav"));
}

#[test]
fn too_short_song_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let a = click_wav(dir.path(), "a.wav", 120.0, 3.0);
    let o = tshape(&["score", s(&a), s(&a), "--biases", "120"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn score_echoes_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let a = click_wav(dir.path(), "a.wav", 120.0, 12.0);
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "kappa = 0.05\nbeats_per_block = 8\nssm_dim = 300\ntempo_biases = [120.0]\n").unwrap();
    let o = tshape(&[
        "score", s(&a), s(&a), "--config", s(&cfg), "--kappa", "0.15", "--beats", "4", "--dim", "16",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["kappa"], 0.15);
    assert_eq!(v["config"]["beats_per_block"], 4);
    assert_eq!(v["config"]["ssm_dim"], 16);
    assert_eq!(v["config"]["tempo_biases"], serde_json::json!([120.0]));
    assert_eq!(v["config"]["mfcc"]["n_coeffs"], 20);
    assert!(v["scoreAB"].as_f64().unwrap() > 0.0);
    assert_eq!(v["combinations"].as_array().unwrap().len(), 1);
}

#[test]
fn self_score_covers_all_bias_combinations() {
    let dir = tempfile::tempdir().unwrap();
    let a = click_wav(dir.path(), "a.wav", 120.0, 12.0);
    let o = tshape(&["score", s(&a), s(&a), "--beats", "4", "--dim", "16"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["combinations"].as_array().unwrap().len(), 9);
    let blocks = v["blocksA"].as_f64().unwrap();
    assert!(v["scoreAB"].as_f64().unwrap() >= 0.9 * blocks, "{v}");
}

#[test]
fn bad_config_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "kappa = \"lots\"\n").unwrap();
    let o = tshape(&["score", "a.wav", "b.wav", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn empty_manifest_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let set = dir.path().join("set.txt");
    fs::write(&set, "# empty\n").unwrap();
    let truth = dir.path().join("truth.json");
    fs::write(&truth, "[]").unwrap();
    let o = tshape(&["benchmark", s(&set), s(&set), s(&truth)]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn dump_beats_of_click_track() {
    let dir = tempfile::tempdir().unwrap();
    let a = click_wav(dir.path(), "a.wav", 120.0, 12.0);
    let out = dir.path().join("out");
    let o = tshape(&["dump", "beats", s(&a), "--bias", "120", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("beats.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("bias_bpm,beat_index,time"));
    let times: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(times.len() >= 18, "{times:?}");
    for t in times {
        let off = (t / 0.5 - (t / 0.5).round()).abs() * 0.5;
        assert!(off <= 0.015, "beat at {t}");
    }
}

#[test]
fn dump_one_ssm_and_pca() {
    let dir = tempfile::tempdir().unwrap();
    let a = click_wav(dir.path(), "a.wav", 120.0, 12.0);
    let out = dir.path().join("out");
    let mut args = vec!["dump", "ssm", s(&a), "--block", "0", "--out", s(&out)];
    args.extend(FAST);
    let o = tshape(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let files: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 1);
    let img = fs::read(&files[0]).unwrap();
    let header = b"P5\n16 16\n255\n";
    assert_eq!(&img[..header.len()], header);
    assert_eq!(img.len(), header.len() + 256);

    let mut args = vec!["dump", "pca", s(&a), "--out", s(&out)];
    args.extend(FAST);
    assert_eq!(tshape(&args).status.code(), Some(0));
    let pca = fs::read_to_string(out.join("pca_120bpm_block0000.csv")).unwrap();
    assert!(pca.starts_with("time_index,x,y,z\n"));

    let mut args = vec!["dump", "ssm", s(&a), "--block", "999", "--out", s(&out)];
    args.extend(FAST);
    assert_eq!(tshape(&args).status.code(), Some(1));
}

#[test]
fn dump_sw_prints_score() {
    let dir = tempfile::tempdir().unwrap();
    let a = click_wav(dir.path(), "a.wav", 120.0, 12.0);
    let out = dir.path().join("out");
    let mut args = vec!["dump", "sw", s(&a), s(&a), "--out", s(&out)];
    args.extend(FAST);
    let o = tshape(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let score: f64 = text.trim().strip_prefix("score: ").unwrap().parse().unwrap();
    assert!(score > 0.0);
    assert!(out.join("sw.csv").is_file() && out.join("sw.pgm").is_file());
    // sw needs two songs
    let mut args = vec!["dump", "sw", s(&a), "--out", s(&out)];
    args.extend(FAST);
    assert_eq!(tshape(&args).status.code(), Some(1));
}

#[test]
fn synth_corpus_benchmark_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let o = tshape(&["synth-corpus", s(&corpus), "--songs", "2", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["setA.txt", "setB.txt", "truth.json", "manifest.json"] {
        assert!(corpus.join(f).is_file(), "{f}");
    }
    let cache = dir.path().join("cache");
    let (set_a, set_b, truth) = (corpus.join("setA.txt"), corpus.join("setB.txt"), corpus.join("truth.json"));
    let run = |out: &Path, jobs: &str| {
        let args = vec![
            "benchmark",
            s(&set_a),
            s(&set_b),
            s(&truth),
            "--out",
            s(out),
            "--cache-dir",
            s(&cache),
            "--beats",
            "4",
            "--dim",
            "16",
            "--biases",
            "120",
            "--jobs",
            jobs,
        ];
        let o = tshape(&args);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        stdout(&o)
    };
    let (o1, o2) = (dir.path().join("r1"), dir.path().join("r2"));
    // the second run reads features from the cache, on more threads
    let (t1, t2) = (run(&o1, "1"), run(&o2, "3"));
    assert_eq!(t1, t2);
    let first = t1.lines().next().unwrap();
    let (k, n) = first.split_once('/').unwrap();
    assert_eq!(n, "2");
    assert!(k.parse::<usize>().unwrap() <= 2);
    for f in ["scores.csv", "report.json"] {
        assert_eq!(fs::read(o1.join(f)).unwrap(), fs::read(o2.join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(o1.join("scores.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().all(|l| l.split(',').count() == 2));
}
