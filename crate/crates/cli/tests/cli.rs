use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use delta_eita_cli::{parse_config, run, CliError, Mode};

const EIT: &str = r#"
mode = "sweep"

[atom]
gamma12 = 0.1
gamma13 = 1.0
gamma23 = 0.1

[drives.d13]
rabi = 0.2

[drives.d23]
rabi = 1.0

[sweep]
lo = -2.0
hi = 2.0
points = 81
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_delta-eita"));
    c.env_remove("DELTA_EITA_WORKERS");
    c
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn invoke(config: &Path, extra: &[&str]) -> Output {
    bin().arg("--config").arg(config).args(extra).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

#[test]
fn shipped_configs_parse() {
    for name in ["eita.toml", "fluxonium.toml"] {
        let text = fs::read_to_string(shipped(name)).unwrap();
        parse_config(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "eit.toml", EIT);
    let first = invoke(&cfg, &["--dump-config"]);
    assert!(first.status.success(), "{}", stderr(&first));
    let dumped = write_config(dir.path(), "dumped.toml", &stdout(&first));
    let second = invoke(&dumped, &["--dump-config"]);
    assert_eq!(stdout(&first), stdout(&second));
    assert_eq!(parse_config(EIT).unwrap(), parse_config(&stdout(&first)).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let typo = write_config(d, "typo.toml", &EIT.replace("gamma23", "gamma_23"));
    let o = invoke(&typo, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gamma_23"), "{}", stderr(&o));

    let o = invoke(&d.join("missing.toml"), &[]);
    assert_eq!(o.status.code(), Some(1));

    let delta12 = write_config(d, "d12.toml", &format!("{EIT}\n[drives.d12]\ndetuning = 0.3\n"));
    let o = invoke(&delta12, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("δ12 is derived, not settable"));

    let one_point = write_config(d, "one.toml", &EIT.replace("points = 81", "points = 1"));
    assert_eq!(invoke(&one_point, &[]).status.code(), Some(2));

    let zero_workers = invoke(
        &write_config(d, "ok.toml", EIT),
        &["--workers", "0", "--out", d.to_str().unwrap()],
    );
    assert_eq!(zero_workers.status.code(), Some(2));

    let decoupled = write_config(d, "decoupled.toml", &EIT.replace("gamma13 = 1.0", "gamma13 = 0.0"));
    let o = invoke(
        &decoupled,
        &["--mode", "reflect", "--out", d.join("r").to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    let small_basis = write_config(
        d,
        "basis.toml",
        "mode = \"fluxonium\"\n[fluxonium]\nej = 9.0\nec = 2.5\nel = 0.05\nbasis_size = 30\nflux_lo = 0.3\nflux_hi = 0.3\nflux_points = 1\n",
    );
    let o = invoke(&small_basis, &["--out", d.join("f").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn steady_mode_reports_positive_inversion() {
    let dir = tempfile::tempdir().unwrap();
    let o = invoke(
        &shipped("eita.toml"),
        &["--mode", "steady", "--out", dir.path().to_str().unwrap()],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let summary = out.lines().last().unwrap();
    let inv: f64 = summary
        .split_whitespace()
        .find_map(|w| w.strip_prefix("inversion="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(inv > 0.0);
    assert!(out.contains("rho[3,:]"));
    assert!(dir.path().join("steady_state.csv").exists());
}

#[test]
fn verify_mode_passes() {
    let o = invoke(&shipped("eita.toml"), &["--mode", "verify"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(!stdout(&o).contains("[FAIL]"));
}

#[test]
fn worker_count_from_environment_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "eit.toml", EIT);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(invoke(&cfg, &["--workers", "1", "--out", a.to_str().unwrap()])
        .status
        .success());
    let o = bin()
        .env("DELTA_EITA_WORKERS", "3")
        .arg("--config")
        .arg(&cfg)
        .args(["--out", b.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(
        fs::read(a.join("spectrum.csv")).unwrap(),
        fs::read(b.join("spectrum.csv")).unwrap()
    );
}

#[test]
fn units_flag_scales_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "eit.toml", EIT);
    let out = dir.path().join("mhz");
    let o = invoke(&cfg, &["--units", "MHz", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert!(csv.starts_with("# units=MHz"));
    let first: f64 = csv
        .lines()
        .find(|l| !l.starts_with('#') && !l.starts_with("delta13"))
        .and_then(|l| l.split(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((first + 4.0 * std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn every_mode_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = parse_config(&fs::read_to_string(shipped("eita.toml")).unwrap()).unwrap();
    cfg.sweep.points = 161;
    let expected: [(Mode, &[&str]); 5] = [
        (Mode::Sweep, &["spectrum.csv"]),
        (
            Mode::PhaseSweep,
            &[
                "phase_sweep_0.csv",
                "phase_sweep_1.csv",
                "phase_sweep_2.csv",
                "phase_sweep_3.csv",
            ],
        ),
        (Mode::Evolve, &["evolution.csv"]),
        (Mode::Reflect, &["reflection.csv"]),
        (Mode::Steady, &["steady_state.csv"]),
    ];
    for (mode, files) in expected {
        cfg.mode = mode;
        let out = dir.path().join(format!("{mode:?}"));
        let outcome = run(&cfg, &out, 2).unwrap();
        assert!(outcome.ok);
        for f in files {
            assert!(out.join(f).exists(), "{mode:?}: {f}");
        }
    }
    let evo = fs::read_to_string(dir.path().join("Evolve/evolution.csv")).unwrap();
    assert!(evo
        .lines()
        .any(|l| l == "t,pop1,pop2,pop3,re_rho31,im_rho31,re_rho23,im_rho23"));
    let refl = fs::read_to_string(dir.path().join("Reflect/reflection.csv")).unwrap();
    assert!(refl
        .lines()
        .any(|l| l == "delta13,re_aout,im_aout,homodyne_I,homodyne_Q"));
}

#[test]
fn fluxonium_mode_finds_balanced_bias() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = parse_config(&fs::read_to_string(shipped("fluxonium.toml")).unwrap()).unwrap();
    cfg.fluxonium.as_mut().unwrap().flux_points = 6;
    let outcome = run(&cfg, dir.path(), 2).unwrap();
    assert!(outcome.summary.contains("balanced bias=0.07"), "{}", outcome.summary);
    let csv = fs::read_to_string(dir.path().join("flux_sweep.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 7);
}

#[test]
fn library_errors_map_to_exit_codes() {
    let bad = parse_config("mode = \"sweep\"\n[sweep]\npoints = 0\n").unwrap_err();
    assert_eq!(bad.exit_code(), 2);
    let resolution: CliError = delta_eita::Error::InsufficientResolution("x".into()).into();
    assert_eq!(resolution.exit_code(), 4);
    let wrapped: CliError = delta_eita::Error::AtDetuning {
        delta13: 0.1,
        source: Box::new(delta_eita::Error::SingularMatrix { column: 0, pivot: 0.0 }),
    }
    .into();
    assert_eq!(wrapped.exit_code(), 3);
}
