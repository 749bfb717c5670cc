use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use galvanic_core::channel_model::{model_impulse_response, HighPassModel};
use galvanic_core::ingest_io::{parse_capture, parse_response_csv, FormatOptions, Report};

fn galvanic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_galvanic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = galvanic(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// File name → bytes for every data file in a directory (plots excluded).
fn data_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e != "svg"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn report(path: &Path) -> Report {
    Report::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_prints_sequence_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    let stdout = ok(&["generate", "--degree", "13", "--chip-rate", "2.5M", "--amplitude", "1.0", "--out", s(&out)]);
    assert!(stdout.contains("period: 8191 chips"), "{stdout}");
    assert!(stdout.contains("4096 ones, 4095 zeros"));
    assert!(stdout.contains("peak 8191, off-peak -1 (two-valued)"));
    let c = parse_capture(&out.join("pn_waveform.csv"), &FormatOptions::default()).unwrap();
    assert_eq!(c.sample_rate, 2.5e6);
    // one period of chips, then one period of zeros
    assert_eq!(c.waveform.len(), 2 * 8191);
    assert!(c.waveform.samples()[..8191].iter().all(|v| v.abs() == 0.5));
    assert!(c.waveform.samples()[8191..].iter().all(|&v| v == 0.0));
}

#[test]
fn generate_argument_errors_and_padding() {
    let dir = tempfile::tempdir().unwrap();
    let out = galvanic(&["generate", "--degree", "1", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--degree"));

    ok(&["generate", "--degree", "7", "--pad", "0", "--out", s(dir.path())]);
    let c = parse_capture(&dir.path().join("pn_waveform.csv"), &FormatOptions::default()).unwrap();
    assert_eq!(c.waveform.len(), 127);

    ok(&["generate", "--degree", "4", "--samples-per-chip", "3", "--pad", "5", "--out", s(dir.path())]);
    let c = parse_capture(&dir.path().join("pn_waveform.csv"), &FormatOptions::default()).unwrap();
    assert_eq!((c.waveform.len(), c.sample_rate), (15 * 3 + 5, 15e6));
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[generate]\ndegree = 6\nchip_rate = 1e6\namplitude = 2.0\n").unwrap();
    let out = dir.path().join("a");
    let stdout = ok(&["generate", "--config", s(&cfg), "--amplitude", "0.5", "--out", s(&out)]);
    assert!(stdout.contains("period: 63 chips"));
    let echo: toml::Table = toml::from_str(&std::fs::read_to_string(out.join("run_config.toml")).unwrap()).unwrap();
    let g = echo["generate"].as_table().unwrap();
    assert_eq!(g["degree"].as_integer(), Some(6));
    assert_eq!(g["chip_rate"].as_float(), Some(1e6));
    assert_eq!(g["amplitude"].as_float(), Some(0.5));
    assert_eq!(g["samples_per_chip"].as_integer(), Some(1));

    // the echo reproduces the run
    let again = dir.path().join("b");
    ok(&["generate", "--config", s(&out.join("run_config.toml")), "--out", s(&again)]);
    assert_eq!(
        std::fs::read(out.join("pn_waveform.csv")).unwrap(),
        std::fs::read(again.join("pn_waveform.csv")).unwrap()
    );

    std::fs::write(&cfg, "[generate]\ndegre = 6\n").unwrap();
    let bad = galvanic(&["generate", "--config", s(&cfg), "--out", s(&out)]);
    assert!(!bad.status.success());
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        ok(&["simulate", "--fit-from", "100k:-52.2,1M:-43.75,2.5M:-43.2", "--degree", "9", "--captures", "3",
            "--seed", seed, "--cm-amplitude", "0.01", "--out", s(&out), "--quiet"]);
        let mut files = data_files(&out);
        files.remove("run_config.toml");
        files
    };
    let a = run("a", "7");
    assert_eq!(a.len(), 6); // tx, 3 rx, manifest, model
    assert_eq!(a, run("b", "7"));
    assert_ne!(a["rx_000.csv"], run("c", "8")["rx_000.csv"]);
}

#[test]
fn noiseless_simulation_is_the_model_convolution() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    ok(&["simulate", "--fit-from", "100k:-52.2,1M:-43.75,2.5M:-43.2", "--degree", "6", "--captures", "1",
        "--snr-db", "inf", "--out", s(&out)]);
    let opts = FormatOptions::default();
    let tx = parse_capture(&out.join("tx.csv"), &opts).unwrap().waveform;
    let rx = parse_capture(&out.join("rx_000.csv"), &opts).unwrap().waveform;
    let model = HighPassModel::from_toml(&std::fs::read_to_string(out.join("model.toml")).unwrap()).unwrap();
    let h = model_impulse_response(&model, tx.sample_rate(), tx.len()).unwrap().estimate.taps;
    let (x, y) = (tx.samples(), rx.samples());
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for n in 0..x.len() {
        let conv: f64 = (0..=n).map(|k| h[k] * x[n - k]).sum();
        assert!((conv - y[n]).abs() <= 1e-9 * scale, "sample {n}: {conv} vs {}", y[n]);
    }
}

#[test]
fn simulate_needs_exactly_one_channel_source() {
    let dir = tempfile::tempdir().unwrap();
    let out = galvanic(&["simulate", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--fit-from"));
    let out = galvanic(&["simulate", "--model", "m.toml", "--fit-from", "1M:-40", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sound_recovers_the_simulated_channel() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let snd = dir.path().join("snd");
    ok(&["simulate", "--fit-from", "100k:-52.2,1M:-43.75,2.5M:-43.2", "--captures", "4", "--out", s(&sim)]);
    let stdout = ok(&["sound", "--session", s(&sim.join("session.toml")), "--cfr-freqs", "100k,1M,2.5M",
        "--out", s(&snd)]);
    assert!(stdout.contains("CFR at 1000000 Hz"), "{stdout}");
    let cfr = parse_response_csv(&std::fs::read_to_string(snd.join("cfr.csv")).unwrap()).unwrap();
    for (f, target) in [(1e5, -52.2), (1e6, -43.75), (2.5e6, -43.2)] {
        let k = cfr.freqs().iter().position(|&g| g == f).unwrap();
        assert!((cfr.gain_db()[k] - target).abs() <= 1.5, "{f} Hz: {}", cfr.gain_db()[k]);
    }
    // in band: 100 kHz to 2.5 MHz
    let cmp = report(&snd.join("comparison.txt"));
    let freqs = cmp.column("freq_hz").unwrap();
    let diff = cmp.column("difference_db").unwrap();
    let in_band = freqs.iter().zip(&diff).filter(|(f, _)| **f >= 1e5).map(|(_, d)| d.abs());
    assert!(in_band.fold(0.0, f64::max) <= 1.5);
    assert_eq!(report(&snd.join("estimate.txt")).parse_field::<usize>("frames_averaged").unwrap(), 4);
    for f in ["pdp.csv", "stationarity.txt", "run_config.toml", "cir.svg", "cfr.svg"] {
        assert!(snd.join(f).is_file(), "{f}");
    }
}

#[test]
fn identical_frames_report_zero_variation() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let snd = dir.path().join("snd");
    ok(&["simulate", "--fit-from", "100k:-52.2,1M:-43.75,2.5M:-43.2", "--degree", "8", "--captures", "2",
        "--snr-db", "inf", "--out", s(&sim)]);
    ok(&["sound", "--session", s(&sim.join("session.toml")), "--out", s(&snd)]);
    let st = report(&snd.join("stationarity.txt"));
    assert_eq!(st.get("coefficient_of_variation"), Some("0"));
    assert_eq!(st.get("time_invariant"), Some("true"));
    assert_eq!(st.rows.len(), 2);
}

#[test]
fn missing_capture_fails_loudly() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    ok(&["simulate", "--fit-from", "1M:-40,100k:-50", "--fit-order", "1", "--degree", "6", "--captures", "3",
        "--out", s(&sim)]);
    std::fs::remove_file(sim.join("rx_001.csv")).unwrap();
    let out = galvanic(&["sound", "--session", s(&sim.join("session.toml")), "--out", s(&dir.path().join("x"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("MissingCapture") && err.contains("rx_001.csv"), "{err}");
}

#[test]
fn solve_writes_gain_table_and_checks_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fem");
    let stdout = ok(&["solve", "--freqs", "100k,1M,2.5M", "--validate", "true", "--fields", "false", "--out", s(&out)]);
    assert!(stdout.contains("monotone increasing:"), "{stdout}");
    let gain = parse_response_csv(&std::fs::read_to_string(out.join("gain.csv")).unwrap()).unwrap();
    assert_eq!(gain.freqs(), &[1e5, 1e6, 2.5e6]);
    let v = report(&out.join("validation.txt"));
    assert!(v.parse_field::<f64>("ramp_potential_error").unwrap() <= 1e-6);
    assert_eq!(v.get("passed"), Some("true"));
    assert!(!out.join("field_100000Hz.csv").exists());

    let bad = galvanic(&["solve", "--resolution", "2", "--freqs", "1M", "--out", s(&dir.path().join("bad"))]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("too coarse"));
}

#[test]
fn solve_accepts_arm_and_tissue_files() {
    let dir = tempfile::tempdir().unwrap();
    let arm = dir.path().join("arm.toml");
    std::fs::write(
        &arm,
        "length_mm = 300.0\ntx_rx_separation_mm = 60.0\nelectrode_depth_mm = 5.0\nelectrode_height_mm = 4.0\n\
         [[layers]]\ntissue = \"gel\"\nthickness_mm = 10.0\n[[layers]]\ntissue = \"gel\"\nthickness_mm = 10.0\n",
    )
    .unwrap();
    let tissue = dir.path().join("tissue.csv");
    std::fs::write(&tissue, "frequency_hz,tissue_name,sigma_s_per_m,eps_r\n1000,gel,0.5,1000\n1e7,gel,0.5,1000\n").unwrap();
    let out = dir.path().join("fem");
    ok(&["solve", "--arm", s(&arm), "--tissue", s(&tissue), "--freqs", "10k,1M", "--out", s(&out)]);
    let gain = parse_response_csv(&std::fs::read_to_string(out.join("gain.csv")).unwrap()).unwrap();
    // frequency-independent medium: flat gain
    assert!((gain.gain_db()[0] - gain.gain_db()[1]).abs() < 1e-6, "{:?}", gain.gain_db());
    let field = std::fs::read_to_string(out.join("field_1000000Hz.csv")).unwrap();
    assert!(field.starts_with("x_m,y_m,re_V,im_V,abs_E\n"));

    let missing = galvanic(&["solve", "--arm", s(&arm), "--freqs", "1M", "--out", s(&out)]);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("gel"));
}

#[test]
fn report_summarizes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let snd = dir.path().join("snd");
    ok(&["simulate", "--fit-from", "100k:-52.2,1M:-43.75,2.5M:-43.2", "--degree", "8", "--captures", "2",
        "--out", s(&sim)]);
    ok(&["sound", "--session", s(&sim.join("session.toml")), "--out", s(&snd)]);
    let rep = dir.path().join("rep");
    let stdout = ok(&["report", "--input", s(&snd), "--input", s(&sim.join("model.toml")), "--out", s(&rep)]);
    for needle in ["channel estimate: 255 taps", "stationarity: 2 frames", "frequency response:", "model comparison",
        "power delay profile", "channel model: order 2"] {
        assert!(stdout.contains(needle), "{needle} missing from\n{stdout}");
    }
    assert_eq!(std::fs::read_to_string(rep.join("summary.txt")).unwrap().trim_end(), stdout.trim_end());

    let junk = dir.path().join("junk.txt");
    std::fs::write(&junk, "hello\n").unwrap();
    assert_eq!(galvanic(&["report", "--input", s(&junk)]).status.code(), Some(1));
    assert_eq!(galvanic(&["report"]).status.code(), Some(1));
}

#[test]
fn help_documents_every_default() {
    for cmd in ["generate", "simulate", "solve", "sound", "report"] {
        let help = ok(&[cmd, "--help"]);
        let options = help.split_once("Options:\n").unwrap().1;
        // one block per option: its flag line up to the next flag line
        let mut blocks: Vec<String> = Vec::new();
        for line in options.lines() {
            if line.starts_with("  -") || line.starts_with("      --") {
                blocks.push(String::new());
            }
            if let Some(b) = blocks.last_mut() {
                b.push_str(line);
                b.push('\n');
            }
        }
        assert!(blocks.len() >= 3, "{cmd}");
        for b in blocks.iter().filter(|b| !b.contains("--help")) {
            assert!(b.contains("[default:") || b.contains("[required]"), "{cmd}: undocumented default in\n{b}");
        }
    }
}
