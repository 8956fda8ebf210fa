//! Subcommand parameter blocks, shared between the flag parser and the
//! TOML run files.

use binormal_core::curve::{DEFAULT_S_MAX, DEFAULT_TOL};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

pub const CONFIG_VERSION: u32 = 1;

fn parse_list<const N: usize>(text: &str) -> Result<[f64; N], String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got {text:?}"));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| format!("not a number: {p:?}"))?;
    }
    Ok(out)
}

pub fn parse_vec3(text: &str) -> Result<[f64; 3], String> {
    parse_list::<3>(text)
}

pub fn parse_complex(text: &str) -> Result<[f64; 2], String> {
    parse_list::<2>(text)
}

fn default_smax() -> f64 {
    DEFAULT_S_MAX
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn default_ds() -> f64 {
    0.01
}
fn default_schedule() -> Vec<f64> {
    vec![20.0, 40.0, 80.0]
}
fn default_scatter_tol() -> f64 {
    1e-4
}
fn default_times() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}
fn default_tol_delta() -> f64 {
    1e-6
}
fn default_brute_lim() -> f64 {
    10.0
}

/// Initial data `(G(0), T(0))` for the curve equation.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long = "G0", value_parser = parse_vec3, allow_hyphen_values = true)]
    pub g0: [f64; 3],
    #[arg(long = "T0", value_parser = parse_vec3, allow_hyphen_values = true)]
    pub t0: [f64; 3],
    #[arg(long, default_value_t = DEFAULT_S_MAX)]
    #[serde(default = "default_smax")]
    pub smax: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Move off-slice data onto `(I+A)G(0).T(0) = 0` instead of rejecting it.
    #[arg(long)]
    #[serde(default)]
    pub shift_origin: bool,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub curve: CurveArgs,
    /// Row spacing of the trajectory CSV.
    #[arg(long, default_value_t = 0.01)]
    #[serde(default = "default_ds")]
    pub ds: f64,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub curve: CurveArgs,
    #[arg(long = "t", value_delimiter = ',', default_values_t = default_times())]
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlsArgs {
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub f0: [f64; 2],
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub fp0: [f64; 2],
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_S_MAX)]
    #[serde(default = "default_smax")]
    pub smax: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[arg(long, default_value_t = 0.01)]
    #[serde(default = "default_ds")]
    pub ds: f64,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlsScatterArgs {
    #[arg(long)]
    pub mod_f: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub theta1: f64,
    #[arg(long)]
    pub mod_fp: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub theta2: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, value_delimiter = ',', default_values_t = default_schedule())]
    #[serde(default = "default_schedule")]
    pub schedule: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndArg {
    Plus,
    Minus,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long = "B", value_parser = parse_vec3, allow_hyphen_values = true)]
    pub b_vec: [f64; 3],
    #[arg(long, allow_hyphen_values = true)]
    pub a_phase: f64,
    #[arg(long)]
    pub b_amp: f64,
    #[arg(long, value_enum, default_value_t = EndArg::Plus)]
    pub end: EndArg,
    #[arg(long, value_delimiter = ',', default_values_t = default_schedule())]
    #[serde(default = "default_schedule")]
    pub schedule: Vec<f64>,
    /// Cauchy tolerance on `(T(0), T'(0))`.
    #[arg(long, default_value_t = 1e-4)]
    #[serde(default = "default_scatter_tol")]
    pub tol: f64,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OddArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: f64,
    #[arg(long, default_value_t = DEFAULT_S_MAX)]
    #[serde(default = "default_smax")]
    pub smax: f64,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneSpiralArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, default_value_t = 1e-6)]
    #[serde(default = "default_tol_delta")]
    pub tol_delta: f64,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long)]
    pub c0: f64,
    /// `T3(0)`, either 1 or -1.
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub sign: f64,
    #[arg(long, default_value_t = DEFAULT_S_MAX)]
    #[serde(default = "default_smax")]
    pub smax: f64,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfIntersectArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub mixed: MixedArgs,
    /// Also run the pairwise scan on `|s| <= brute-lim`.
    #[arg(long)]
    #[serde(default)]
    pub brute: bool,
    #[arg(long, default_value_t = 10.0)]
    #[serde(default = "default_brute_lim")]
    pub brute_lim: f64,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularArgs {
    #[arg(long)]
    pub c0: f64,
    #[arg(long, default_value_t = DEFAULT_S_MAX)]
    #[serde(default = "default_smax")]
    pub smax: f64,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonUniquenessArgs {
    #[arg(long)]
    pub c0: f64,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiguresArgs {
    /// Figure number 1-8; all figures when omitted.
    #[arg(long)]
    #[serde(default)]
    pub which: Option<u8>,
    /// Overrides `c0` of figure 8.
    #[arg(long)]
    #[serde(default)]
    pub c0: Option<f64>,
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Integrate the curve equation and write the trajectory.
    #[command(allow_negative_numbers = true)]
    Integrate(IntegrateArgs),
    /// Scattering data at both ends.
    #[command(allow_negative_numbers = true)]
    Trace(CurveArgs),
    /// Decay orders of the expansions at infinity.
    #[command(allow_negative_numbers = true)]
    VerifyAsymptotics(CurveArgs),
    /// `sup |X(.,t) - X0|` against its bound.
    #[command(allow_negative_numbers = true)]
    Convergence(ConvergenceArgs),
    /// Integrate the profile equation from `(f(0), f'(0))`.
    #[command(allow_negative_numbers = true)]
    Nls(NlsArgs),
    /// Profile data at the origin from limits at infinity.
    #[command(allow_negative_numbers = true)]
    NlsScatter(NlsScatterArgs),
    /// Curve data at the origin from scattering data at one end.
    #[command(allow_negative_numbers = true)]
    Scatter(ScatterArgs),
    /// Odd family `G(0) = 0`.
    #[command(allow_negative_numbers = true)]
    Odd(OddArgs),
    /// Search for `delta0` with `A3+ = 0`.
    #[command(allow_negative_numbers = true)]
    PlaneSpiral(PlaneSpiralArgs),
    /// Mixed family, `G1,2` even and `G3` odd.
    #[command(allow_negative_numbers = true)]
    Mixed(MixedArgs),
    /// Self-intersections of a mixed-family curve.
    #[command(allow_negative_numbers = true)]
    SelfIntersect(SelfIntersectArgs),
    /// The reflected `a = 0` solution with a corner.
    #[command(allow_negative_numbers = true)]
    Singular(SingularArgs),
    /// Two solutions sharing the corner data at `t = 0`.
    #[command(allow_negative_numbers = true)]
    Nonuniqueness(NonUniquenessArgs),
    /// Data and gnuplot scripts for the figures.
    Figures(FiguresArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Integrate(_) => "integrate",
            Command::Trace(_) => "trace",
            Command::VerifyAsymptotics(_) => "verify-asymptotics",
            Command::Convergence(_) => "convergence",
            Command::Nls(_) => "nls",
            Command::NlsScatter(_) => "nls-scatter",
            Command::Scatter(_) => "scatter",
            Command::Odd(_) => "odd",
            Command::PlaneSpiral(_) => "plane-spiral",
            Command::Mixed(_) => "mixed",
            Command::SelfIntersect(_) => "self-intersect",
            Command::Singular(_) => "singular",
            Command::Nonuniqueness(_) => "nonuniqueness",
            Command::Figures(_) => "figures",
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "binormal-lab", version, about = "Self-similar binormal-flow laboratory")]
pub struct Cli {
    /// Run file; replaces the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

/// A complete run: one parameter block plus the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(flatten)]
    pub command: Command,
}

impl RunConfig {
    pub fn new(command: Command, out: Option<PathBuf>) -> Self {
        RunConfig {
            version: CONFIG_VERSION,
            out,
            command,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("parameter blocks serialize to TOML")
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        if cfg.version != CONFIG_VERSION {
            return Err(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                cfg.version
            ));
        }
        Ok(cfg)
    }

    /// Precondition checks done before any computation.
    pub fn validate(&self) -> Result<(), String> {
        validate_command(&self.command)
    }
}

fn finite(name: &str, x: f64) -> Result<(), String> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} = {x} is not finite"))
    }
}

fn positive(name: &str, x: f64) -> Result<(), String> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(format!("{name} = {x} must be positive"))
    }
}

fn smax_ok(x: f64) -> Result<(), String> {
    positive("smax", x)?;
    if x > 2000.0 {
        return Err(format!("smax = {x} exceeds 2000"));
    }
    Ok(())
}

fn tol_ok(x: f64) -> Result<(), String> {
    if x.is_finite() && x >= 1e-14 && x <= 1e-3 {
        Ok(())
    } else {
        Err(format!("tol = {x} outside [1e-14, 1e-3]"))
    }
}

fn schedule_ok(s: &[f64], min_len: usize) -> Result<(), String> {
    if s.len() < min_len {
        return Err(format!("schedule needs at least {min_len} entries"));
    }
    if s.iter().any(|x| !x.is_finite()) || s[0] < 1.0 || s.windows(2).any(|w| w[1] <= w[0]) {
        return Err("schedule must be increasing and start at >= 1".into());
    }
    Ok(())
}

fn curve_ok(c: &CurveArgs) -> Result<(), String> {
    finite("a", c.a)?;
    for (name, v) in [("G0", c.g0), ("T0", c.t0)] {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(format!("{name} has non-finite entries"));
        }
    }
    let n = c.t0.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (n - 1.0).abs() > 1e-12 {
        return Err(format!("|T0| = {n} must be 1"));
    }
    smax_ok(c.smax)?;
    tol_ok(c.tol)
}

fn mixed_ok(m: &MixedArgs) -> Result<(), String> {
    finite("a", m.a)?;
    positive("c0", m.c0)?;
    if m.sign != 1.0 && m.sign != -1.0 {
        return Err(format!("sign = {} must be 1 or -1", m.sign));
    }
    smax_ok(m.smax)
}

pub fn validate_command(cmd: &Command) -> Result<(), String> {
    match cmd {
        Command::Integrate(x) => {
            curve_ok(&x.curve)?;
            positive("ds", x.ds)
        }
        Command::Trace(c) | Command::VerifyAsymptotics(c) => curve_ok(c),
        Command::Convergence(x) => {
            curve_ok(&x.curve)?;
            if x.times.is_empty() {
                return Err("at least one t is needed".into());
            }
            x.times.iter().try_for_each(|&t| positive("t", t))
        }
        Command::Nls(x) => {
            for (name, v) in [("f0", x.f0), ("fp0", x.fp0)] {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(format!("{name} has non-finite entries"));
                }
            }
            finite("alpha", x.alpha)?;
            smax_ok(x.smax)?;
            tol_ok(x.tol)?;
            positive("ds", x.ds)
        }
        Command::NlsScatter(x) => {
            for (name, v) in [("mod-f", x.mod_f), ("mod-fp", x.mod_fp)] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(format!("{name} = {v} must be nonnegative"));
                }
            }
            finite("theta1", x.theta1)?;
            finite("theta2", x.theta2)?;
            finite("alpha", x.alpha)?;
            schedule_ok(&x.schedule, 3)?;
            tol_ok(x.tol)
        }
        Command::Scatter(x) => {
            finite("a", x.a)?;
            if x.a == 0.0 {
                return Err("a must be nonzero".into());
            }
            finite("a-phase", x.a_phase)?;
            if !(x.b_amp.is_finite() && x.b_amp >= 0.0) {
                return Err(format!("b-amp = {} must be nonnegative", x.b_amp));
            }
            let n = x.b_vec.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !((n - 1.0).abs() <= 1e-6) {
                return Err(format!("|B| = {n} must be 1"));
            }
            schedule_ok(&x.schedule, 2)?;
            positive("tol", x.tol)
        }
        Command::Odd(x) => {
            finite("a", x.a)?;
            if !(-1.0..=1.0).contains(&x.delta) {
                return Err(format!("delta = {} outside [-1, 1]", x.delta));
            }
            smax_ok(x.smax)
        }
        Command::PlaneSpiral(x) => {
            finite("a", x.a)?;
            if x.a == 0.0 {
                return Err("a must be nonzero".into());
            }
            if !(x.tol_delta >= 1e-8 && x.tol_delta < 1.0) {
                return Err(format!("tol-delta = {} outside [1e-8, 1)", x.tol_delta));
            }
            Ok(())
        }
        Command::Mixed(m) => mixed_ok(m),
        Command::SelfIntersect(x) => {
            mixed_ok(&x.mixed)?;
            positive("brute-lim", x.brute_lim)
        }
        Command::Singular(x) => {
            positive("c0", x.c0)?;
            smax_ok(x.smax)
        }
        Command::Nonuniqueness(x) => positive("c0", x.c0),
        Command::Figures(x) => {
            if let Some(w) = x.which {
                if !(1..=8).contains(&w) {
                    return Err(format!("which = {w} outside 1..=8"));
                }
            }
            if let Some(c0) = x.c0 {
                positive("c0", c0)?;
                if x.which != Some(8) {
                    return Err("--c0 applies to figure 8 only".into());
                }
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve() -> CurveArgs {
        CurveArgs {
            a: 10.0,
            g0: [0.0, 0.0, 2.0],
            t0: [1.0, 0.0, 0.0],
            smax: 40.0,
            tol: 1e-10,
            shift_origin: false,
        }
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::new(
            Command::Integrate(IntegrateArgs {
                curve: curve(),
                ds: 0.05,
            }),
            Some("runs/fig1".into()),
        );
        let text = cfg.to_toml();
        assert!(text.contains("[integrate]"));
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn defaults_fill_in() {
        let text = "version = 1\n[odd]\na = 10\ndelta = 0.956\n";
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(
            cfg.command,
            Command::Odd(OddArgs {
                a: 10.0,
                delta: 0.956,
                smax: DEFAULT_S_MAX
            })
        );
    }

    #[test]
    fn rejects_wrong_version_and_unknown_keys() {
        assert!(RunConfig::from_toml("version = 2\n[nonuniqueness]\nc0 = 0.8\n").is_err());
        assert!(RunConfig::from_toml("version = 1\n[nonuniqueness]\nc0 = 0.8\nx = 1\n").is_err());
    }

    #[test]
    fn vector_parsing() {
        assert_eq!(parse_vec3("0, -1,2.5").unwrap(), [0.0, -1.0, 2.5]);
        assert!(parse_vec3("1,2").is_err());
        assert_eq!(parse_complex("1,-2").unwrap(), [1.0, -2.0]);
    }

    #[test]
    fn validation() {
        let mut c = curve();
        assert!(curve_ok(&c).is_ok());
        c.t0 = [1.0, 1.0, 0.0];
        assert!(curve_ok(&c).is_err());
        let fig = Command::Figures(FiguresArgs {
            which: Some(5),
            c0: Some(0.8),
        });
        assert!(validate_command(&fig).is_err());
    }
}
