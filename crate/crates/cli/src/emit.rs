//! Artifact emitters: CSV (round-trip float formatting), JSON, and a
//! self-contained SVG line plot.

use std::fmt::Write as _;

use serde_json::json;

use valleon_core::fit::FitResult;
use valleon_core::hom::HomScan;
use valleon_core::lattice::BandStructure;
use valleon_core::ribbon::EdgeBranch;
use valleon_core::topology::{CurvatureField, ValleyReport};
use valleon_core::transport::TransportRun;

/// IEEE double round-trip formatting (17 significant digits).
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn bands_csv(bands: &BandStructure) -> String {
    let mut out = String::from("segment,k_index,kx,ky,E_minus,E_plus\n");
    for (i, s) in bands.samples.iter().enumerate() {
        let seg = i / bands.n_per_segment;
        let ki = i % bands.n_per_segment;
        let _ = writeln!(
            out,
            "{seg},{ki},{},{},{},{}",
            fmt_f(s.k.x),
            fmt_f(s.k.y),
            fmt_f(s.energies[0]),
            fmt_f(s.energies[1])
        );
    }
    out
}

pub fn berry_csv(field: &CurvatureField) -> String {
    let mut out = String::from("kx,ky,omega\n");
    let n = field.n_grid;
    for i in 0..n {
        for j in 0..n {
            let c = field.plaquette_center(i, j);
            let _ = writeln!(out, "{},{},{}", fmt_f(c.x), fmt_f(c.y), fmt_f(field.omega[i * n + j]));
        }
    }
    out
}

pub fn berry_json(field: &CurvatureField) -> String {
    let v = json!({
        "ordering": "row-major over (i, j); kx/ky are plaquette centers",
        "n_grid": field.n_grid,
        "omega": field.omega,
    });
    serde_json::to_string_pretty(&v).expect("serializable") + "\n"
}

pub fn valley_report_json(report: &ValleyReport, delta: f64, t: f64) -> String {
    let v = json!({
        "c_K": report.c_k,
        "c_Kprime": report.c_kprime,
        "c_v": report.c_v,
        "moment_sign_K": report.moment_sign_k,
        "moment_sign_Kprime": report.moment_sign_kprime,
        "chirality_K": report.chirality_k.as_str(),
        "chirality_Kprime": report.chirality_kprime.as_str(),
        "n_grid": report.n_grid,
        "delta": delta,
        "t": t,
    });
    serde_json::to_string_pretty(&v).expect("serializable") + "\n"
}

/// Ribbon spectrum rows: every (k, band) pair with its localization.
pub fn ribbon_csv(bands: &valleon_core::ribbon::RibbonBands, window: usize) -> String {
    let mut out = String::from("k,band_index,energy,localization\n");
    for (ik, &k) in bands.k_values.iter().enumerate() {
        for (b, &e) in bands.energies[ik].iter().enumerate() {
            let psi = nalgebra::DVector::from_column_slice(bands.vectors[ik].column(b).as_slice());
            let loc = bands.ribbon.localization(&psi, window);
            let _ = writeln!(out, "{},{b},{},{}", fmt_f(k), fmt_f(e), fmt_f(loc));
        }
    }
    out
}

pub fn edge_branches_json(
    branches: &[EdgeBranch],
    velocities: &[(String, Option<f64>, Option<f64>)],
) -> String {
    let arr: Vec<serde_json::Value> = branches
        .iter()
        .zip(velocities)
        .map(|(b, (interface, v_k, v_kp))| {
            json!({
                "interface": interface,
                "k": b.k_values,
                "energy": b.energies,
                "localization": b.localization,
                "velocity_at_K": v_k,
                "velocity_at_Kprime": v_kp,
            })
        })
        .collect();
    serde_json::to_string_pretty(&json!({ "branches": arr })).expect("serializable") + "\n"
}

pub fn transport_csv(run: &TransportRun) -> String {
    let mut out = String::from("time,port,absorbed,residual\n");
    for (step, t) in run.times.iter().enumerate() {
        for (p, name) in run.port_names.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{name},{},{}",
                fmt_f(*t),
                fmt_f(run.port_absorbed[step][p]),
                fmt_f(run.residual_norm[step])
            );
        }
    }
    out
}

pub fn device_json(device: &valleon_core::device::DeviceGraph) -> String {
    let sites: Vec<serde_json::Value> = device
        .sites
        .iter()
        .zip(&device.mass)
        .zip(&device.gamma_profile)
        .map(|((s, m), g)| json!([s.x, s.y, s.sub, m, g]))
        .collect();
    let bonds: Vec<serde_json::Value> =
        device.bonds().iter().map(|(i, j)| json!([i, j])).collect();
    let v = json!({
        "geometry": device.geometry.as_str(),
        "site_fields": ["x_nm", "y_nm", "sublattice", "mass", "gamma_profile"],
        "sites": sites,
        "bonds": bonds,
        "ports": device.ports.iter().map(|p| p.name).collect::<Vec<_>>(),
    });
    serde_json::to_string_pretty(&v).expect("serializable") + "\n"
}

pub fn hom_csv(scan: &HomScan) -> String {
    let mut out = String::from("delay_ps,delay_mm,rate,counts,error\n");
    for i in 0..scan.delays_ps.len() {
        let counts = scan
            .counts
            .as_ref()
            .map(|c| c[i].to_string())
            .unwrap_or_default();
        let error = scan
            .errors
            .as_ref()
            .map(|e| fmt_f(e[i]))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{counts},{error}",
            fmt_f(scan.delays_ps[i]),
            fmt_f(scan.delays_mm[i]),
            fmt_f(scan.rates[i])
        );
    }
    out
}

pub fn fit_json(fit: &FitResult) -> String {
    let v = json!({
        "shape": fit.shape.as_str(),
        "visibility": fit.visibility,
        "tau_c_ps": fit.tau_c_ps,
        "length_c_mm": fit.length_c_mm,
        "baseline": fit.baseline,
        "center_ps": fit.center_ps,
        "std_errors": fit.std_errors,
        "covariance": fit.covariance,
        "flagged": fit.flagged,
        "iterations": fit.iterations,
        "gradient_norm": fit.gradient_norm,
        "cost": fit.cost,
    });
    serde_json::to_string_pretty(&v).expect("serializable") + "\n"
}

/// Minimal self-contained SVG line plot: one or more (x, y) series with
/// axes, ticks, and labels.
pub fn svg_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(&str, &[f64], &[f64])],
) -> String {
    let (w, h) = (720.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 55.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for (_, xs, ys) in series {
        for &x in *xs {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
        }
        for &y in *ys {
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if !x_min.is_finite() || x_max <= x_min {
        x_min = 0.0;
        x_max = 1.0;
    }
    if !y_min.is_finite() || y_max <= y_min {
        y_min -= 0.5;
        y_max = y_min + 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;
    let sx = |x: f64| ml + (x - x_min) / (x_max - x_min) * pw;
    let sy = |y: f64| mt + (1.0 - (y - y_min) / (y_max - y_min)) * ph;
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"13\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{title}</text>\n",
        ml + pw / 2.0
    );
    // Axes.
    let _ = write!(
        svg,
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>\n"
    );
    for i in 0..=5 {
        let fx = i as f64 / 5.0;
        let xv = x_min + fx * (x_max - x_min);
        let yv = y_min + fx * (y_max - y_min);
        let _ = write!(
            svg,
            "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{0:.1}\" y2=\"{2:.1}\" stroke=\"black\"/>\n\
             <text x=\"{0:.1}\" y=\"{3:.1}\" text-anchor=\"middle\">{4:.3}</text>\n",
            sx(xv),
            mt + ph,
            mt + ph + 6.0,
            mt + ph + 22.0,
            xv
        );
        let _ = write!(
            svg,
            "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{2:.1}\" y2=\"{1:.1}\" stroke=\"black\"/>\n\
             <text x=\"{3:.1}\" y=\"{4:.1}\" text-anchor=\"end\">{5:.3}</text>\n",
            ml - 6.0,
            sy(yv),
            ml,
            ml - 9.0,
            sy(yv) + 4.0,
            yv
        );
    }
    let _ = write!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{x_label}</text>\n\
         <text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{y_label}</text>\n",
        ml + pw / 2.0,
        h - 12.0,
        mt + ph / 2.0,
        mt + ph / 2.0
    );
    for (si, (name, xs, ys)) in series.iter().enumerate() {
        let color = colors[si % colors.len()];
        let mut path = String::new();
        for (i, (&x, &y)) in xs.iter().zip(ys.iter()).enumerate() {
            let _ = write!(path, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, sx(x), sy(y));
        }
        let _ = write!(
            svg,
            "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{name}</text>\n",
            ml + 10.0,
            mt + 18.0 + 16.0 * si as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}
