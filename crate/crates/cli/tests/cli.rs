use binormal_cli::config::*;
use binormal_cli::figures::{figure_setup, FigureSetup, FIGURE8_TIMES};
use binormal_cli::output::TrajectoryFile;
use binormal_cli::plot::{emit_plot_script, PlotStyle};
use binormal_core::curve::InvariantDrift;
use proptest::prelude::*;
use std::path::Path;
use std::process::Command as Proc;

const BIN: &str = env!("CARGO_BIN_EXE_binormal-lab");

fn lab(args: &[&str], out: &Path) -> (i32, String, String) {
    let o = Proc::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("BINORMAL_LAB_THREADS")
        .output()
        .unwrap();
    (
        o.status.code().unwrap(),
        String::from_utf8_lossy(&o.stdout).into_owned(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

fn drift_close(header: &InvariantDrift, rescan: &InvariantDrift) {
    let pairs = [
        (header.unit_tangent, rescan.unit_tangent),
        (header.first_integral, rescan.first_integral),
        (header.curvature_law, rescan.curvature_law),
        (header.energy, rescan.energy),
    ];
    for (h, r) in pairs {
        assert!(r <= 2.0 * h + 1e-14 && h <= 2.0 * r + 1e-14, "{h} vs {r}");
    }
}

#[test]
fn straight_line_has_no_drift() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = lab(&["integrate", "--a", "0", "--G0", "0,0,0", "--T0", "0,0,1"], dir.path());
    assert_eq!(code, 0, "{err}");
    let file = TrajectoryFile::read(&dir.path().join("trajectory.csv")).unwrap();
    let d = file.header.drift;
    assert!(d.unit_tangent < 1e-14 && d.first_integral < 1e-12 && d.energy < 1e-14);
    for r in &file.rows {
        assert!(r[1].abs() < 1e-12 && r[2].abs() < 1e-12 && (r[3] - r[0]).abs() < 1e-10);
    }
    let script = std::fs::read_to_string(dir.path().join("trajectory.gp")).unwrap();
    assert!(script.contains("splot 'trajectory.csv' using 2:3:4"));
}

#[test]
fn figure_one_trajectory_file() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["integrate", "--a", "10", "--G0", "0,0,2", "--T0", "1,0,0", "--smax", "40"];
    let (code, stdout, err) = lab(&args, dir.path());
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("trajectory.csv"));
    let path = dir.path().join("trajectory.csv");
    let file = TrajectoryFile::read(&path).unwrap();
    assert_eq!(file.header.a, 10.0);
    assert!((file.header.c0 - 1.0).abs() < 1e-15);
    assert!(file.rows.windows(2).all(|w| w[1][0] > w[0][0]));
    assert_eq!(file.rows.first().unwrap()[0], -40.0);
    drift_close(&file.header.drift, &file.rescan_drift());
    let d = file.header.step_drift;
    assert!(d.unit_tangent <= 1e-8 && d.curvature_law <= 1e-7 && d.energy <= 1e-6);
    assert!(file.header.trace.is_some());

    let style = PlotStyle {
        title: "fig".into(),
        output: "fig.png".into(),
        zoom: Some(3.0),
    };
    let a = emit_plot_script(&path, &style).unwrap();
    assert_eq!(a, emit_plot_script(&path, &style).unwrap());
    assert!(a.contains("layout 1,2"));
}

#[test]
fn identical_config_gives_identical_bytes() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["mixed", "--a", "3", "--c0", "0.4", "--sign", "1", "--smax", "30"];
    assert_eq!(lab(&args, d1.path()).0, 0);
    // second run goes through the emitted run file
    let cfg = d1.path().join("config.toml");
    let (code, _, err) = lab(&["--config", cfg.to_str().unwrap()], d2.path());
    assert_eq!(code, 0, "{err}");
    for f in ["trajectory.csv", "mixed.json", "trajectory.gp", "meta.json"] {
        let a = std::fs::read(d1.path().join(f)).unwrap();
        let b = std::fs::read(d2.path().join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["odd", "--a", "10", "--delta", "1.5"],
        vec!["integrate", "--a", "1", "--G0", "1,0,0", "--T0", "1,0,0"],
        vec!["integrate", "--a", "1", "--G0", "0,0,0", "--T0", "1,1,0"],
        vec!["figures", "--which", "9"],
        vec!["figures", "--which", "3", "--c0", "0.8"],
        vec!["no-such-command"],
        vec!["scatter", "--a", "10", "--B", "0,0,1", "--a-phase", "0", "--b-amp", "1"],
    ] {
        let (code, _, err) = lab(&args, dir.path());
        assert_eq!(code, 1, "{args:?}");
        let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
        assert_eq!(v["error"]["exit_code"], 1);
    }
}

#[test]
fn numerical_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // too short for the fit window at infinity
    let (code, _, err) = lab(
        &["trace", "--a", "10", "--G0", "0,0,2", "--T0", "1,0,0", "--smax", "10"],
        dir.path(),
    );
    assert_eq!(code, 2);
    let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["error"]["kind"], "window_too_short");
}

#[test]
fn off_slice_data_can_be_shifted() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["integrate", "--a", "1", "--G0", "0.3,0,0", "--T0", "1,0,0", "--smax", "20", "--shift-origin"];
    let (code, _, err) = lab(&args, dir.path());
    assert_eq!(code, 0, "{err}");
}

#[test]
fn thread_cap_is_checked() {
    let dir = tempfile::tempdir().unwrap();
    let o = Proc::new(BIN)
        .args(["plane-spiral", "--a", "10"])
        .arg("--out")
        .arg(dir.path())
        .env("BINORMAL_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn figure_parameters_match_captions() {
    assert_eq!(
        figure_setup(1, None),
        Some(FigureSetup::Regular {
            points: vec![(10.0, 1.0), (15.0, 5.0), (20.0, 3.0)]
        })
    );
    assert_eq!(figure_setup(2, None), Some(FigureSetup::Odd { a: 10.0, delta: 0.956 }));
    assert_eq!(figure_setup(3, None), Some(FigureSetup::Odd { a: 10.0, delta: -0.1 }));
    assert_eq!(figure_setup(4, None), Some(FigureSetup::Odd { a: 50.0, delta: 0.9 }));
    assert_eq!(
        figure_setup(5, None),
        Some(FigureSetup::Mixed { a: 3.0, c0: 1.8, sign: 1.0 })
    );
    assert_eq!(
        figure_setup(6, None),
        Some(FigureSetup::Mixed { a: 3.0, c0: 0.4, sign: 1.0 })
    );
    assert_eq!(
        figure_setup(7, None),
        Some(FigureSetup::Mixed { a: 10.0, c0: 4.0, sign: -1.0 })
    );
    assert_eq!(FIGURE8_TIMES, [1e-4, 0.1, 1.0, 1.5, 2.0, 2.5]);
    assert_eq!(figure_setup(9, None), None);
}

#[test]
fn figure_eight_writes_every_time() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = lab(&["figures", "--which", "8", "--c0", "0.8"], dir.path());
    assert_eq!(code, 0, "{err}");
    let fig = dir.path().join("figure8");
    for t in ["0.0001", "0.1", "1", "1.5", "2", "2.5"] {
        assert!(fig.join(format!("t{t}.csv")).exists(), "t = {t}");
    }
    let script = std::fs::read_to_string(fig.join("figure8.gp")).unwrap();
    assert_eq!(script.matches("splot").count(), 6);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fig.join("singular.json")).unwrap()).unwrap();
    assert!(v["checks"]["max_residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn figure_five_has_zoom_panel() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = lab(&["figures", "--which", "5"], dir.path());
    assert_eq!(code, 0, "{err}");
    let script = std::fs::read_to_string(dir.path().join("figure5/figure5.gp")).unwrap();
    assert!(script.contains("layout 1,2"));
    assert_eq!(script.matches("splot").count(), 2);
}

fn finite() -> impl Strategy<Value = f64> {
    -1e3..1e3f64
}

fn command() -> impl Strategy<Value = Command> {
    prop_oneof![
        (finite(), finite(), 1.0..100.0f64, any::<bool>()).prop_map(|(a, g, smax, shift)| {
            Command::Integrate(IntegrateArgs {
                curve: CurveArgs {
                    a,
                    g0: [g, -g, 0.5 * g],
                    t0: [0.0, 0.6, 0.8],
                    smax,
                    tol: 1e-9,
                    shift_origin: shift,
                },
                ds: 0.02,
            })
        }),
        (finite(), -1.0..1.0f64).prop_map(|(a, delta)| Command::Odd(OddArgs {
            a,
            delta,
            smax: 40.0
        })),
        (finite(), 0.01..5.0f64, prop::bool::ANY).prop_map(|(a, c0, s)| {
            Command::SelfIntersect(SelfIntersectArgs {
                mixed: MixedArgs {
                    a,
                    c0,
                    sign: if s { 1.0 } else { -1.0 },
                    smax: 40.0,
                },
                brute: s,
                brute_lim: 10.0,
            })
        }),
        (finite(), finite(), prop::collection::vec(1.0..1e3f64, 2..5)).prop_map(|(a, ph, mut sch)| {
            sch.sort_by(f64::total_cmp);
            Command::Scatter(ScatterArgs {
                a,
                b_vec: [0.6, 0.0, -0.8],
                a_phase: ph,
                b_amp: a.abs(),
                end: if ph > 0.0 { EndArg::Plus } else { EndArg::Minus },
                schedule: sch,
                tol: 1e-4,
            })
        }),
        (finite(), finite()).prop_map(|(x, y)| Command::Nls(NlsArgs {
            f0: [x, y],
            fp0: [y, x],
            alpha: x - y,
            smax: 40.0,
            tol: 1e-10,
            ds: 0.01
        })),
        (proptest::option::of(1u8..=8), proptest::option::of(0.1..2.0f64))
            .prop_map(|(which, c0)| Command::Figures(FiguresArgs { which, c0 })),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn run_file_round_trip(cmd in command(), out in proptest::option::of("[a-z]{1,8}")) {
        let cfg = RunConfig::new(cmd, out.map(Into::into));
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
