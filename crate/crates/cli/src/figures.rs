//! Data and gnuplot scripts for figures 1-8.

use crate::commands::{write_trajectory, Artifacts, ZOOM};
use crate::output::{csv_text, OutDir};
use crate::plot::{script_for, Curve3, PlotStyle};
use crate::RunError;
use binormal_core::curve::{integrate, DEFAULT_S_MAX, DEFAULT_TOL};
use binormal_core::families::{build_singular_solution, detect_self_intersection, mixed_family, odd_family};
use binormal_core::Vec3;
use serde::Serialize;
use serde_json::json;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FigureSetup {
    /// `G(0) = (0, 0, 2 c0)`, `T(0) = e1`, one curve per `(a, c0)`.
    Regular { points: Vec<(f64, f64)> },
    Odd { a: f64, delta: f64 },
    Mixed { a: f64, c0: f64, sign: f64 },
    /// `X(s, t) = sqrt(t) G(s / sqrt(t))` of the reflected `a = 0` solution.
    Singular { c0: f64, times: Vec<f64> },
}

pub const FIGURE8_TIMES: [f64; 6] = [1e-4, 0.1, 1.0, 1.5, 2.0, 2.5];
/// `|s|` range drawn in figure 8; the profile is integrated to
/// `FIGURE8_REACH / sqrt(min t)`.
const FIGURE8_REACH: f64 = 1.0;

pub fn figure_setup(n: u8, c0_override: Option<f64>) -> Option<FigureSetup> {
    Some(match n {
        1 => FigureSetup::Regular {
            points: vec![(10.0, 1.0), (15.0, 5.0), (20.0, 3.0)],
        },
        2 => FigureSetup::Odd { a: 10.0, delta: 0.956 },
        3 => FigureSetup::Odd { a: 10.0, delta: -0.1 },
        4 => FigureSetup::Odd { a: 50.0, delta: 0.9 },
        5 => FigureSetup::Mixed { a: 3.0, c0: 1.8, sign: 1.0 },
        6 => FigureSetup::Mixed { a: 3.0, c0: 0.4, sign: 1.0 },
        7 => FigureSetup::Mixed { a: 10.0, c0: 4.0, sign: -1.0 },
        8 => FigureSetup::Singular {
            c0: c0_override.unwrap_or(0.8),
            times: FIGURE8_TIMES.to_vec(),
        },
        _ => return None,
    })
}

fn num_tag(x: f64) -> String {
    format!("{x}").replace('-', "m")
}

pub fn render_figure(n: u8, setup: &FigureSetup, out: &OutDir) -> Result<Artifacts, RunError> {
    let name = format!("figure{n}");
    let dir = out.sub(&name);
    let mut arts = Vec::new();
    match setup {
        FigureSetup::Regular { points } => {
            let mut panels = Vec::new();
            let mut traces = Vec::new();
            for &(a, c0) in points {
                let traj = integrate(
                    Vec3::new(0.0, 0.0, 2.0 * c0),
                    Vec3::E1,
                    a,
                    DEFAULT_S_MAX,
                    DEFAULT_TOL,
                )?;
                let stem = format!("a{}_c{}", num_tag(a), num_tag(c0));
                let (file, files) = write_trajectory(&dir, &stem, &traj, 0.01, &stem, None)?;
                arts.extend(files);
                traces.push(json!({ "a": a, "c0": c0, "header": file.header }));
                panels.push((
                    format!("a = {a}, c0 = {c0}"),
                    vec![Curve3::trajectory(&format!("{stem}.csv"), "G")],
                ));
            }
            let style = PlotStyle {
                title: name.clone(),
                output: format!("{name}.png"),
                zoom: None,
            };
            arts.push(dir.text(&format!("{name}.gp"), &script_for(&panels, &style))?);
            arts.push(dir.json("traces.json", &traces)?);
        }
        FigureSetup::Odd { a, delta } => {
            let (traj, pt) = odd_family(*a, *delta, DEFAULT_S_MAX)?;
            let title = format!("a = {a}, delta = {delta}");
            let (_, files) = write_trajectory(&dir, &name, &traj, 0.01, &title, Some(ZOOM))?;
            arts.extend(files);
            arts.push(dir.json("odd.json", &pt)?);
        }
        FigureSetup::Mixed { a, c0, sign } => {
            let (traj, pt) = mixed_family(*a, *c0, *sign, DEFAULT_S_MAX)?;
            let title = format!("a = {a}, c0 = {c0}, T3(0) = {sign}");
            let (_, files) = write_trajectory(&dir, &name, &traj, 0.01, &title, Some(ZOOM))?;
            arts.extend(files);
            let block = json!({
                "point": pt,
                "self_intersections": detect_self_intersection(&traj),
            });
            arts.push(dir.json("mixed.json", &block)?);
        }
        FigureSetup::Singular { c0, times } => {
            let t_min = times.iter().cloned().fold(f64::INFINITY, f64::min);
            let s_max = (FIGURE8_REACH / t_min.sqrt()).max(DEFAULT_S_MAX);
            let sol = build_singular_solution(*c0, s_max)?;
            let n = 2000;
            let grid: Vec<f64> = (0..=n)
                .map(|i| -FIGURE8_REACH + 2.0 * FIGURE8_REACH * i as f64 / n as f64)
                .collect();
            let cols = ["s", "X1", "X2", "X3"];
            let mut panels = Vec::new();
            for &t in times {
                let rt = t.sqrt();
                let rows: Vec<Vec<f64>> = grid
                    .iter()
                    .map(|&s| {
                        let x = rt * sol.g(s / rt);
                        vec![s, x.x, x.y, x.z]
                    })
                    .collect();
                let file = format!("t{}.csv", num_tag(t));
                arts.push(dir.text(&file, &csv_text(&cols, &rows, &[format!("t = {t}")]))?);
                panels.push((format!("t = {t}"), vec![Curve3::trajectory(&file, "X")]));
            }
            let rows: Vec<Vec<f64>> = grid
                .iter()
                .map(|&s| {
                    let x = sol.corner(s);
                    vec![s, x.x, x.y, x.z]
                })
                .collect();
            arts.push(dir.text("corner.csv", &csv_text(&cols, &rows, &["t = 0".into()]))?);
            let style = PlotStyle {
                title: format!("{name}, c0 = {c0}"),
                output: format!("{name}.png"),
                zoom: None,
            };
            arts.push(dir.text(&format!("{name}.gp"), &script_for(&panels, &style))?);
            let block = json!({
                "c0": c0,
                "times": times,
                "s_max": s_max,
                "a_plus": sol.a_plus,
                "a_minus": sol.a_minus,
                "checks": sol.checks(),
            });
            arts.push(dir.json("singular.json", &block)?);
        }
    }
    arts.push(dir.json("setup.json", setup)?);
    Ok(arts)
}

pub fn figures_cmd(which: Option<u8>, c0: Option<f64>, out: &OutDir) -> Result<Artifacts, RunError> {
    let list: Vec<u8> = match which {
        Some(n) => vec![n],
        None => (1..=8).collect(),
    };
    let mut arts = Vec::new();
    for n in list {
        let setup = figure_setup(n, c0)
            .ok_or_else(|| RunError::Validation(format!("no figure {n}")))?;
        arts.extend(render_figure(n, &setup, out)?);
    }
    Ok(arts)
}
