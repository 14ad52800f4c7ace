// Copyright 2026 The trilevel Authors
// SPDX-License-Identifier: Apache-2.0

//! Artifact rendering and atomic file output.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::sim::{RunRecord, Trajectory};

pub const TRAJECTORY_HEADER: &str = "t,y_true,y_meas,r11,r22,r33,r12,r13,r23,\
rh11,rh22,rh33,rh12,rh13,rh23,omega12_hat,omega23_hat,fidelity";

pub const SWEEP_HEADER: &str = "seed,status,omega12_hat,omega23_hat,rel_err12,rel_err23,tconv12,tconv23";

/// Formats like C's `%.12g`.
pub fn fmt_g12(x: f64) -> String {
    const P: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (P - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(256 * (traj.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in &traj.samples {
        let fields = [s.t, s.y_true, s.y_meas]
            .into_iter()
            .chain(s.rho)
            .chain(s.rho_hat)
            .chain([s.omega12_hat, s.omega23_hat, s.fidelity])
            .map(fmt_g12)
            .collect::<Vec<_>>();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_g12).unwrap_or_default()
}

pub fn sweep_csv(runs: &[RunRecord]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in runs {
        match &r.outcome {
            Ok(e) => {
                let _ = writeln!(
                    out,
                    "{},ok,{},{},{},{},{},{}",
                    r.seed,
                    fmt_g12(e.omega12_hat_final),
                    fmt_g12(e.omega23_hat_final),
                    fmt_g12(e.rel_err12),
                    fmt_g12(e.rel_err23),
                    opt(e.tconv12),
                    opt(e.tconv23)
                );
            }
            Err(msg) => {
                let status = format!("error: {}", msg.replace([',', '\n'], ";"));
                let _ = writeln!(out, "{},{status},,,,,,", r.seed);
            }
        }
    }
    out
}

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

/// Polyline chart with axes, ticks and a legend.
pub fn line_chart(title: &str, x_label: &str, series: &[Series]) -> String {
    let (w, h) = (800.0, 450.0);
    let (left, right, top, bottom) = (70.0, 20.0, 40.0, 50.0);
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 <= 0.0 {
        x1 = x0 + 1.0;
    }
    let pad = 0.05 * (y1 - y0).max(1e-9);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{left},{top} V{} H{}" fill="none" stroke="black"/>"#,
        h - bottom,
        w - right
    );
    for i in 0..=5 {
        let fx = x0 + (x1 - x0) * i as f64 / 5.0;
        let fy = y0 + (y1 - y0) * i as f64 / 5.0;
        let (tx, ty) = (px(fx), py(fy));
        let _ = writeln!(
            s,
            r#"<line x1="{tx:.1}" y1="{}" x2="{tx:.1}" y2="{}" stroke="black"/><text x="{tx:.1}" y="{}" text-anchor="middle">{}</text>"#,
            h - bottom,
            h - bottom + 5.0,
            h - bottom + 18.0,
            tick(fx)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ty:.1}" x2="{left}" y2="{ty:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 5.0,
            left - 8.0,
            ty + 4.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (left + w - right) / 2.0,
        h - 12.0,
        escape(x_label)
    );
    for (k, ser) in series.iter().enumerate() {
        let mut d = String::new();
        for (i, &(x, y)) in ser.points.iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, px(x), py(y));
        }
        let dash = if ser.dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<path d="{d}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
            ser.color
        );
        let ly = top + 10.0 + 16.0 * k as f64;
        let lx = w - right - 170.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            lx + 24.0,
            ser.color,
            lx + 30.0,
            ly + 4.0,
            escape(ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    fmt_g12(if r == 0.0 { 0.0 } else { r })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes all files into `dir` or none of them.
///
/// Every file is first staged as a temporary file in `dir`; only when all
/// are staged are they renamed into place.
pub fn commit_files(dir: &Path, files: &[(&str, Vec<u8>)]) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let mut tmp = NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        staged.push((dir.join(name), tmp));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (path, tmp) in staged {
        tmp.persist(&path).map_err(|e| e.error)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g12_matches_c_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0, "0.666666666667"),
            (123456.789, "123456.789"),
            (1e-5, "1e-05"),
            (1.5e-7, "1.5e-07"),
            (0.0001, "0.0001"),
            (-2.5, "-2.5"),
            (1e12, "1e+12"),
            (999999999999.5, "1e+12"),
            (123456789012.0, "123456789012"),
            (0.99999999999996, "1"),
            (50.000000000001, "50"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g12(x), want, "{x}");
        }
    }

    proptest! {
        #[test]
        fn g12_round_trips_to_12_digits(x in -1e6f64..1e6) {
            let s = fmt_g12(x);
            let back: f64 = s.parse().unwrap();
            prop_assert!(x == 0.0 || ((back - x) / x).abs() <= 5e-12);
        }
    }

    #[test]
    fn commit_writes_every_file() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("nested");
        let files = commit_files(&out, &[("a.txt", b"x".to_vec()), ("b.txt", b"y".to_vec())]).unwrap();
        assert_eq!(files.len(), 2);
        assert_eq!(std::fs::read(out.join("b.txt")).unwrap(), b"y");
        let leftovers = std::fs::read_dir(&out).unwrap().count();
        assert_eq!(leftovers, 2);
    }

    #[test]
    fn chart_is_well_formed() {
        let svg = line_chart(
            "a < b",
            "t",
            &[Series {
                label: "x",
                color: "red",
                points: vec![(0.0, 1.0), (1.0, 2.0)],
                dashed: true,
            }],
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b"));
        assert!(svg.contains("stroke-dasharray"));
    }
}
