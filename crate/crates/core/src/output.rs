//! CSV, JSON and SVG writers. Every number is written with 15 significant
//! digits in a locale-independent form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use crate::diagrams::{Diagram, Units};
use crate::dynamics::{IntegrationConfig, KineticModel, KineticState, SteadyOutcome};
use crate::equilibrium::{BranchRecord, BruteForceReport, EquilibriumResult};
use crate::error::{Error, Result};
use crate::lattice::SpeedLattice;
use crate::stability::StabilityReport;

pub const SIGNIFICANT_DIGITS: usize = 15;

/// Formats `x` with 15 significant digits, dropping trailing zeros. Plain
/// notation is used for decimal exponents in `[-5, 15)`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// `x` rounded to 15 significant digits, so JSON output carries no more.
pub fn round_sig(x: f64) -> f64 {
    if x.is_finite() {
        fmt_num(x).parse().unwrap_or(x)
    } else {
        x
    }
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(round_sig(x))
    } else {
        Value::Null
    }
}

fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn trajectory_csv(rows: &[KineticState], lattice: &SpeedLattice) -> String {
    let n = lattice.len();
    let mut out = String::from("t");
    for j in 1..=n {
        let _ = write!(out, ",f_{j}");
    }
    out.push_str(",rho,q,u\n");
    for s in rows {
        let obs = crate::dynamics::observables(&s.f, lattice);
        out.push_str(&fmt_num(s.t));
        for v in &s.f {
            out.push(',');
            out.push_str(&fmt_num(*v));
        }
        let _ = writeln!(
            out,
            ",{},{},{}",
            fmt_num(obs.rho),
            fmt_num(obs.q),
            fmt_num(obs.u)
        );
    }
    out
}

pub fn diagram_csv(diagram: &Diagram) -> String {
    let mut out = String::from("rho,q,u,phase\n");
    for p in &diagram.points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_num(p.rho),
            fmt_num(p.q),
            fmt_num(p.u),
            p.phase.as_str()
        );
    }
    out
}

pub fn diagram_json(diagram: &Diagram) -> Value {
    let points: Vec<Value> = diagram
        .points
        .iter()
        .map(|p| {
            json!({
                "rho": num(p.rho),
                "q": num(p.q),
                "u": num(p.u),
                "phase": p.phase.as_str(),
                "converged": p.converged,
            })
        })
        .collect();
    json!({
        "n": diagram.n,
        "method": diagram.method,
        "units": diagram.units,
        "sigma": diagram.sigma.map(num).unwrap_or(Value::Null),
        "q_max": num(diagram.q_max),
        "points": points,
    })
}

fn branch_json(records: &[BranchRecord]) -> Value {
    Value::Array(
        records
            .iter()
            .map(|b| {
                json!({
                    "j": b.j,
                    "discriminant": num(b.discriminant),
                    "a": num(b.a),
                    "b": num(b.b),
                    "c": num(b.c),
                    "root": num(b.root),
                    "larger_root": b.larger_root,
                })
            })
            .collect(),
    )
}

/// `{n, rho, f_inf, q, u, phase, stable, branch_data}`.
pub fn equilibrium_json(eq: &EquilibriumResult) -> Value {
    let obs = eq.observables();
    json!({
        "n": eq.n,
        "rho": num(eq.rho),
        "f_inf": nums(&eq.f_inf),
        "q": num(obs.q),
        "u": num(obs.u),
        "phase": eq.phase.as_str(),
        "stable": eq.stable,
        "branch_data": branch_json(&eq.branch_data),
    })
}

fn stability_json(report: &StabilityReport) -> Value {
    json!({
        "verdict": report.verdict,
        "restricted_real_parts": nums(&report.restricted_real_parts),
        "semistable": report.semistable,
    })
}

/// Equilibrium report extended with the enumeration: the recursive equilibrium
/// fields plus `candidate_count`, `stable_count` and every candidate.
pub fn bruteforce_json(eq: &EquilibriumResult, report: &BruteForceReport) -> Value {
    let mut v = equilibrium_json(eq);
    let candidates: Vec<Value> = report
        .candidates
        .iter()
        .map(|c| {
            json!({
                "f": nums(&c.f),
                "residual": num(c.residual),
                "stable": c.is_stable(),
                "stability": stability_json(&c.stability),
                "branch_data": branch_json(&c.branch_data),
            })
        })
        .collect();
    let obj = v.as_object_mut().expect("object");
    obj.insert("method".into(), json!("bruteforce"));
    obj.insert("candidate_count".into(), json!(report.candidates.len()));
    obj.insert("stable_count".into(), json!(report.stable_count()));
    obj.insert("candidates".into(), Value::Array(candidates));
    v
}

/// Equilibrium report for a state reached by long-time integration.
pub fn integrated_equilibrium_json(
    model: &KineticModel,
    rho: f64,
    outcome: &SteadyOutcome,
    stability: &StabilityReport,
    config: &IntegrationConfig,
) -> Value {
    let f = &outcome.state.f;
    let obs = model.observables(&outcome.state);
    let phase = crate::equilibrium::Phase::of_density(rho);
    json!({
        "n": model.n(),
        "rho": num(rho),
        "f_inf": nums(f),
        "q": num(obs.q),
        "u": num(obs.u),
        "phase": phase.as_str(),
        "stable": stability.is_attracting(),
        "branch_data": branch_json(&crate::equilibrium::branch_records(f, rho)),
        "method": "integrate",
        "converged": outcome.converged,
        "t": num(outcome.state.t),
        "residual": num(outcome.residual),
        "dt": num(config.dt),
    })
}

pub fn to_json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

const PANEL_W: f64 = 520.0;
const PANEL_H: f64 = 260.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_T: f64 = 30.0;
const GAP: f64 = 70.0;

/// Two stacked panels: flux against density on top, mean speed against
/// density below.
pub fn diagram_svg(diagram: &Diagram) -> String {
    let (rho_top, rho_unit, q_unit, u_unit) = match diagram.units {
        Units::Dimensionless => (1.0, "", "", ""),
        Units::Physical => {
            let rm = diagram
                .points
                .last()
                .map(|p| p.rho)
                .unwrap_or(1.0)
                .max(1e-300);
            (rm, " [veh/km]", " [veh/h]", " [km/h]")
        }
    };
    let q_top = nice_top(diagram.q_max);
    let u_top = nice_top(diagram.points.iter().map(|p| p.u).fold(0.0, f64::max));
    let width = MARGIN_L + PANEL_W + 30.0;
    let height = MARGIN_T + 2.0 * PANEL_H + GAP + 50.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = fmt_num(width),
        h = fmt_num(height)
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let panels = [
        ("q", q_top, format!("flux q{q_unit}"), MARGIN_T),
        (
            "u",
            u_top,
            format!("mean speed u{u_unit}"),
            MARGIN_T + PANEL_H + GAP,
        ),
    ];
    for (key, y_top, label, y0) in panels {
        panel(
            &mut svg,
            diagram,
            key,
            y0,
            rho_top,
            y_top,
            &format!("density rho{rho_unit}"),
            &label,
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="16" text-anchor="middle">n = {}</text>"#,
        fmt_num(MARGIN_L + PANEL_W / 2.0),
        diagram.n
    );
    svg.push_str("</svg>\n");
    svg
}

fn nice_top(max: f64) -> f64 {
    if !(max > 0.0) {
        return 1.0;
    }
    let mag = 10f64.powf(max.log10().floor());
    let steps = [1.0, 2.0, 2.5, 5.0, 10.0];
    steps
        .iter()
        .map(|s| s * mag)
        .find(|&t| t >= max * (1.0 - 1e-12))
        .unwrap_or(10.0 * mag)
}

#[allow(clippy::too_many_arguments)]
fn panel(
    svg: &mut String,
    diagram: &Diagram,
    key: &str,
    y0: f64,
    x_top: f64,
    y_top: f64,
    x_label: &str,
    y_label: &str,
) {
    let sx = |x: f64| MARGIN_L + PANEL_W * x / x_top;
    let sy = |y: f64| y0 + PANEL_H * (1.0 - y / y_top);
    let _ = writeln!(
        svg,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        fmt_num(MARGIN_L),
        fmt_num(y0),
        fmt_num(PANEL_W),
        fmt_num(PANEL_H)
    );
    for i in 0..=4 {
        let fx = x_top * i as f64 / 4.0;
        let fy = y_top * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            fmt_num(sx(fx)),
            fmt_num(y0 + PANEL_H + 16.0),
            fmt_num(fx)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            fmt_num(MARGIN_L - 6.0),
            fmt_num(sy(fy) + 4.0),
            fmt_num(fy)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        fmt_num(MARGIN_L + PANEL_W / 2.0),
        fmt_num(y0 + PANEL_H + 34.0),
        x_label
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{y}" text-anchor="middle" transform="rotate(-90 20 {y})">{}</text>"#,
        y_label,
        y = fmt_num(y0 + PANEL_H / 2.0)
    );
    if let Some(sigma) = diagram.sigma {
        let _ = writeln!(
            svg,
            r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#888" stroke-dasharray="4 3"/>"##,
            fmt_num(y0),
            fmt_num(y0 + PANEL_H),
            x = fmt_num(sx(sigma))
        );
    }
    let pts: Vec<String> = diagram
        .points
        .iter()
        .map(|p| {
            let y = if key == "q" { p.q } else { p.u };
            format!("{},{}", fmt_num(sx(p.rho)), fmt_num(sy(y)))
        })
        .collect();
    let _ = writeln!(
        svg,
        r##"<polyline fill="none" stroke="#1f4e9c" stroke-width="1.5" points="{}"/>"##,
        pts.join(" ")
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagrams::{default_grid, sweep, SweepOptions};
    use crate::equilibrium::{equilibrium_bruteforce, equilibrium_recursive};
    use crate::lattice::{build_lattice, ModelParams};

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(100.0), "100");
        assert_eq!(fmt_num(0.1 + 0.2), "0.3");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333333");
        assert_eq!(fmt_num(2.0 / 3.0), "0.666666666666667");
        assert_eq!(fmt_num(-1.5e-7), "-1.5e-7");
        assert_eq!(fmt_num(1e20), "1e20");
        assert_eq!(fmt_num(123456.789), "123456.789");
        assert_eq!(fmt_num(9.9999999999999999), "10");
        assert_eq!(fmt_num(f64::NAN), "NaN");
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
    }

    #[test]
    fn trajectory_header() {
        let lat = build_lattice(3).unwrap();
        let rows = vec![KineticState::new(vec![0.1, 0.2, 0.3]).unwrap()];
        let csv = trajectory_csv(&rows, &lat);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,f_1,f_2,f_3,rho,q,u"));
        assert_eq!(
            lines.next(),
            Some("0,0.1,0.2,0.3,0.6,0.4,0.666666666666667")
        );
    }

    #[test]
    fn diagram_formats() {
        let d = sweep(2, &default_grid(4), &SweepOptions::default()).unwrap();
        let csv = diagram_csv(&d);
        assert_eq!(
            csv,
            "rho,q,u,phase\n0,0,1,free\n0.25,0.25,1,free\n0.5,0.5,1,free\n0.75,0.25,0.333333333333333,congested\n1,0,0,congested\n"
        );
        let v = diagram_json(&d);
        for key in ["n", "method", "sigma", "q_max", "points"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["method"], "recursive");
        assert_eq!(v["sigma"], 0.5);
        let svg = diagram_svg(&d);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn equilibrium_report_fields() {
        let eq = equilibrium_recursive(3, 0.75).unwrap();
        let v = equilibrium_json(&eq);
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        let mut want = vec![
            "branch_data",
            "f_inf",
            "n",
            "phase",
            "q",
            "rho",
            "stable",
            "u",
        ];
        want.sort();
        let mut got: Vec<&str> = keys.iter().map(|s| s.as_str()).collect();
        got.sort();
        assert_eq!(got, want);
        assert_eq!(v["phase"], "congested");
        assert_eq!(v["branch_data"][1]["discriminant"], 0.34375);

        let report = equilibrium_bruteforce(3, 0.75).unwrap();
        let v = bruteforce_json(&eq, &report);
        assert_eq!(v["stable_count"], 1);
        assert_eq!(v["candidate_count"], report.candidates.len());
    }

    #[test]
    fn physical_svg_labels() {
        let d = sweep(2, &default_grid(10), &SweepOptions::default()).unwrap();
        let p = crate::diagrams::rescale_dimensional(&d, &ModelParams::new(2).unwrap());
        let svg = diagram_svg(&p);
        assert!(svg.contains("veh/km"));
        assert!(svg.contains("km/h"));
    }
}
