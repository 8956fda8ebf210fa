//! Gnuplot scripts for trajectory data.

use crate::output::TrajectoryFile;
use std::fmt::Write;
use std::path::Path;

/// One 3D curve drawn from a CSV file.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve3 {
    pub file: String,
    /// 1-based columns of the parameter and of `x, y, z`.
    pub columns: [usize; 4],
    pub label: String,
}

impl Curve3 {
    pub fn trajectory(file: &str, label: &str) -> Curve3 {
        Curve3 {
            file: file.to_string(),
            columns: [1, 2, 3, 4],
            label: label.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotStyle {
    pub title: String,
    /// Rendered image name.
    pub output: String,
    /// Second panel restricted to `|s| <= zoom`.
    pub zoom: Option<f64>,
}

fn splot_line(curves: &[Curve3], zoom: Option<f64>) -> String {
    let parts: Vec<String> = curves
        .iter()
        .map(|c| {
            let [p, x, y, z] = c.columns;
            let using = match zoom {
                None => format!("{x}:{y}:{z}"),
                Some(r) => format!("(abs(${p}) <= {r} ? ${x} : 1/0):{y}:{z}"),
            };
            format!(
                "'{}' using {using} with lines lw 1.5 title '{}'",
                c.file, c.label
            )
        })
        .collect();
    format!("splot {}\n", parts.join(", \\\n      "))
}

/// Panels of curves side by side; with `zoom` each panel gets a zoomed twin.
pub fn script_for(panels: &[(String, Vec<Curve3>)], style: &PlotStyle) -> String {
    let cols = panels.len() * if style.zoom.is_some() { 2 } else { 1 };
    let mut s = String::new();
    writeln!(s, "# {}", style.title).unwrap();
    writeln!(s, "set datafile separator ','").unwrap();
    writeln!(s, "set datafile commentschars '#'").unwrap();
    writeln!(
        s,
        "set terminal pngcairo size {},{} enhanced",
        600 * cols,
        600
    )
    .unwrap();
    writeln!(s, "set output '{}'", style.output).unwrap();
    writeln!(s, "set xlabel 'x'\nset ylabel 'y'\nset zlabel 'z'").unwrap();
    writeln!(s, "set view equal xyz\nset ticslevel 0").unwrap();
    writeln!(s, "set multiplot layout 1,{cols} title '{}'", style.title).unwrap();
    for (title, curves) in panels {
        writeln!(s, "set title '{title}'").unwrap();
        s.push_str(&splot_line(curves, None));
        if let Some(r) = style.zoom {
            writeln!(s, "set title '{title}, |s| <= {r}'").unwrap();
            s.push_str(&splot_line(curves, Some(r)));
        }
    }
    writeln!(s, "unset multiplot").unwrap();
    s
}

/// Script for a trajectory file: the curve over its whole range and, with
/// `style.zoom`, a second panel near `s = 0`.
pub fn emit_plot_script(traj_file: &Path, style: &PlotStyle) -> anyhow::Result<String> {
    TrajectoryFile::read(traj_file)?;
    let name = traj_file
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let curve = Curve3::trajectory(&name, "G");
    Ok(script_for(&[(style.title.clone(), vec![curve])], style))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zoom_adds_panel() {
        let style = PlotStyle {
            title: "t".into(),
            output: "t.png".into(),
            zoom: Some(3.0),
        };
        let text = script_for(&[("t".into(), vec![Curve3::trajectory("d.csv", "G")])], &style);
        assert!(text.contains("layout 1,2"));
        assert_eq!(text.matches("splot").count(), 2);
        assert!(text.contains("abs($1) <= 3"));
        let plain = script_for(
            &[("t".into(), vec![Curve3::trajectory("d.csv", "G")])],
            &PlotStyle { zoom: None, ..style },
        );
        assert!(plain.contains("layout 1,1"));
        assert_eq!(plain.matches("splot").count(), 1);
    }
}
