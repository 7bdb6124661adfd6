//! Subcommand pipelines: each command runs its stages, emits artifacts
//! into the output directory, and writes `manifest.json` last.

use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;

use valleon_core::device::{build_device, Edge, Geometry};
use valleon_core::fit::fit_scan;
use valleon_core::hom::{hom_scan, sample_counts, HomScan, SourceModel};
use valleon_core::lattice::{band_path, build_lattice_spec, LatticeSpec, Valley};
use valleon_core::optics::{
    bs_unitary, hsbs_cascade, network_unitary, BsConvention, ModeUnitary, Placement,
};
use valleon_core::ribbon::{
    build_ribbon, extract_edge_states, group_velocity, ribbon_bands, Interface,
};
use valleon_core::topology::{berry_curvature_map, valley_report, Band};
use valleon_core::transport::{port_flux, run_transport, splitting_matrix, RunSettings};
use valleon_core::C_MM_PER_PS;

use crate::config::RunConfig;
use crate::emit;
use crate::manifest::RunManifest;

/// Fixed per-stage seed offsets: one config-level seed, deterministic
/// independent streams per consumer.
pub const SEED_OFFSET_HOM: u64 = 101;

pub fn stage_seed(seed: u64, offset: u64) -> u64 {
    seed.wrapping_add(offset)
}

/// Coincidence counts synthesized per scan: fixed effective pair flux and
/// integration time (the spec-level knob is the seed, not the statistics).
const PAIR_RATE_HZ: f64 = 200.0;
const INTEGRATION_S: f64 = 25.0;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("stage `{stage}`: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("artifact `{0}` cannot be rendered as {1}")]
    UnsupportedFormat(String, String),
    #[error("malformed input file `{path}`: {message}")]
    BadInput { path: String, message: String },
}

fn stage_err<E: std::fmt::Display>(stage: &'static str) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::Stage { stage, message: e.to_string() }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Bands,
    Berry,
    Ribbon,
    Transport,
    Hom,
    Circuit,
    Fit { input: String },
    Repro(ReproTarget),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReproTarget {
    Fig1c,
    Fig1d,
    Fig2d,
    Fig3de,
    Fig4a,
    Fig4b,
    Fig4c,
    Fig4d,
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::Bands => "bands".into(),
            Command::Berry => "berry".into(),
            Command::Ribbon => "ribbon".into(),
            Command::Transport => "transport".into(),
            Command::Hom => "hom".into(),
            Command::Circuit => "circuit".into(),
            Command::Fit { .. } => "fit".into(),
            Command::Repro(t) => format!("repro-{}", match t {
                ReproTarget::Fig1c => "fig1c",
                ReproTarget::Fig1d => "fig1d",
                ReproTarget::Fig2d => "fig2d",
                ReproTarget::Fig3de => "fig3de",
                ReproTarget::Fig4a => "fig4a",
                ReproTarget::Fig4b => "fig4b",
                ReproTarget::Fig4c => "fig4c",
                ReproTarget::Fig4d => "fig4d",
            }),
        }
    }
}

fn spec_of(config: &RunConfig) -> Result<LatticeSpec, PipelineError> {
    build_lattice_spec(config.lattice.a_nm, config.lattice.t, config.lattice.delta)
        .map_err(stage_err("lattice"))
}

/// A lone balanced splitter (a, b) -> (c, d): the network behind `hom`.
fn splitter_network() -> ModeUnitary {
    let bs = bs_unitary(0.5, BsConvention::RealRotation).expect("R = 1/2 is valid");
    network_unitary(&["a", "b", "c", "d"], &[Placement::new(bs, ("a", "b"), ("c", "d"))])
        .expect("single splitter is unitary")
}

/// The ideal seven-mode beam-splitter cascade used by `circuit`.
fn cascade_network() -> ModeUnitary {
    let bs = bs_unitary(0.5, BsConvention::RealRotation).expect("R = 1/2 is valid");
    hsbs_cascade(&bs, &bs, 0.0).expect("ideal cascade is unitary")
}

struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
    manifest: RunManifest,
}

impl Artifacts {
    fn new(command: &Command, config: &RunConfig) -> Self {
        Artifacts { files: Vec::new(), manifest: RunManifest::new(&command.name(), config) }
    }

    fn push(&mut self, name: &str, contents: String) {
        self.manifest.record_file(name, contents.as_bytes());
        self.files.push((name.to_string(), contents.into_bytes()));
    }
}

fn wants(config: &RunConfig, format: &str) -> bool {
    config.output.formats.iter().any(|f| f == format)
}

fn run_bands(config: &RunConfig, art: &mut Artifacts) -> Result<(), PipelineError> {
    let spec = spec_of(config)?;
    let labels = ["Gamma", "K", "M", "K'", "Gamma"];
    let bands = band_path(&spec, &labels, config.grid.nk).map_err(stage_err("bands"))?;
    art.push("bands.csv", emit::bands_csv(&bands));
    if wants(config, "svg") {
        let xs: Vec<f64> = (0..bands.samples.len()).map(|i| i as f64).collect();
        let lo: Vec<f64> = bands.samples.iter().map(|s| s.energies[0]).collect();
        let hi: Vec<f64> = bands.samples.iter().map(|s| s.energies[1]).collect();
        art.push(
            "bands.svg",
            emit::svg_plot(
                "Band structure along Gamma-K-M-K'-Gamma",
                "path sample",
                "energy (t)",
                &[("E-", &xs, &lo), ("E+", &xs, &hi)],
            ),
        );
    }
    Ok(())
}

fn run_berry(config: &RunConfig, art: &mut Artifacts) -> Result<(), PipelineError> {
    let spec = spec_of(config)?;
    let field =
        berry_curvature_map(&spec, Band::Lower, config.grid.nk).map_err(stage_err("berry"))?;
    art.push("berry.csv", emit::berry_csv(&field));
    if wants(config, "json") {
        art.push("berry.json", emit::berry_json(&field));
    }
    let report = valley_report(&spec, config.grid.nk).map_err(stage_err("berry"))?;
    art.push(
        "valley_report.json",
        emit::valley_report_json(&report, config.lattice.delta, config.lattice.t),
    );
    if wants(config, "svg") {
        // Slice through the row of maximal |omega| (passes near a corner).
        let n = field.n_grid;
        let (imax, _) = field
            .omega
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).expect("finite curvature"))
            .expect("nonempty grid");
        let row = imax / n;
        let xs: Vec<f64> = (0..n).map(|j| field.plaquette_center(row, j).x).collect();
        let ys: Vec<f64> = (0..n).map(|j| field.omega[row * n + j]).collect();
        art.push(
            "berry.svg",
            emit::svg_plot("Berry curvature slice", "kx (1/nm)", "omega (nm^2)", &[(
                "omega", &xs, &ys,
            )]),
        );
    }
    Ok(())
}

fn run_ribbon(config: &RunConfig, art: &mut Artifacts) -> Result<(), PipelineError> {
    let spec = spec_of(config)?;
    let ribbon = build_ribbon(&spec, config.interface(), config.ribbon.width)
        .map_err(stage_err("ribbon"))?;
    let bands = ribbon_bands(&ribbon, config.ribbon.k_samples).map_err(stage_err("ribbon"))?;
    art.push("ribbon.csv", emit::ribbon_csv(&bands, 6));
    let branches = extract_edge_states(&bands, 0.5, 6).map_err(stage_err("ribbon"))?;
    let velocities: Vec<(String, Option<f64>, Option<f64>)> = branches
        .iter()
        .map(|b| {
            (
                b.interface.as_str().to_string(),
                group_velocity(&spec, b, Valley::K).ok(),
                group_velocity(&spec, b, Valley::KPrime).ok(),
            )
        })
        .collect();
    art.push("edge_branches.json", emit::edge_branches_json(&branches, &velocities));
    if wants(config, "svg") {
        let series: Vec<(String, Vec<f64>, Vec<f64>)> = branches
            .iter()
            .enumerate()
            .map(|(i, b)| (format!("branch {i}"), b.k_values.clone(), b.energies.clone()))
            .collect();
        let refs: Vec<(&str, &[f64], &[f64])> = series
            .iter()
            .map(|(n, k, e)| (n.as_str(), k.as_slice(), e.as_slice()))
            .collect();
        art.push(
            "ribbon.svg",
            emit::svg_plot("Interface branches", "k (1/nm)", "energy (t)", &refs),
        );
    }
    Ok(())
}

fn transport_settings(config: &RunConfig) -> RunSettings {
    RunSettings {
        dt: config.transport.dt,
        n_steps: config.transport.steps,
        gamma: config.transport.gamma,
        ..RunSettings::default()
    }
}

fn run_transport_cmd(config: &RunConfig, art: &mut Artifacts) -> Result<(), PipelineError> {
    let spec = spec_of(config)?;
    let device = build_device(&spec, config.geometry(), config.device.extent, config.device.lead_length)
        .map_err(stage_err("device"))?;
    let run = run_transport(
        &device,
        Interface::I21,
        config.carrier(),
        Edge::Left,
        &transport_settings(config),
    )
    .map_err(stage_err("transport"))?;
    port_flux(&run).map_err(stage_err("transport"))?;
    art.push("transport.csv", emit::transport_csv(&run));
    if wants(config, "json") {
        art.push("device.json", emit::device_json(&device));
    }
    if wants(config, "svg") {
        let series: Vec<(String, Vec<f64>)> = run
            .port_names
            .iter()
            .enumerate()
            .map(|(p, name)| {
                (name.clone(), run.port_absorbed.iter().map(|row| row[p]).collect())
            })
            .collect();
        let refs: Vec<(&str, &[f64], &[f64])> = series
            .iter()
            .map(|(n, ys)| (n.as_str(), run.times.as_slice(), ys.as_slice()))
            .collect();
        art.push(
            "transport.svg",
            emit::svg_plot("Cumulative port absorption", "time (1/t)", "probability", &refs),
        );
    }
    Ok(())
}

fn run_splitting(config: &RunConfig, art: &mut Artifacts) -> Result<(), PipelineError> {
    let spec = spec_of(config)?;
    let device = build_device(&spec, Geometry::Hsbs, config.device.extent, config.device.lead_length)
        .map_err(stage_err("device"))?;
    let sm = splitting_matrix(&device, &transport_settings(config))
        .map_err(stage_err("splitting"))?;
    let m = |z: Complex64| serde_json::json!([z.re, z.im]);
    let v = serde_json::json!({
        "matrix": [[m(sm.matrix[(0, 0)]), m(sm.matrix[(0, 1)])],
                   [m(sm.matrix[(1, 0)]), m(sm.matrix[(1, 1)])]],
        "raw": [[m(sm.raw[(0, 0)]), m(sm.raw[(0, 1)])],
                [m(sm.raw[(1, 0)]), m(sm.raw[(1, 1)])]],
        "polar_correction": sm.polar_correction,
        "suppression": sm.suppression,
        "eta": sm.eta,
    });
    art.push("splitting.json", serde_json::to_string_pretty(&v).expect("serializable") + "\n");
    Ok(())
}

fn scan_with_counts(
    config: &RunConfig,
    pair: (usize, usize),
    network: &ModeUnitary,
) -> Result<HomScan, PipelineError> {
    let source = SourceModel { sigma_inv_ps: config.quantum.sigma, v0: config.quantum.v0 };
    let delays = config.delays_ps();
    let scan =
        hom_scan(network, (0, 1), pair, &source, &delays).map_err(stage_err("hom"))?;
    sample_counts(
        &scan,
        PAIR_RATE_HZ,
        INTEGRATION_S,
        stage_seed(config.seed, SEED_OFFSET_HOM),
    )
    .map_err(stage_err("hom"))
}

fn run_hom(
    config: &RunConfig,
    network: &ModeUnitary,
    art: &mut Artifacts,
) -> Result<HomScan, PipelineError> {
    let pair = (
        network.mode(&config.quantum.pair[0]).map_err(stage_err("hom"))?,
        network.mode(&config.quantum.pair[1]).map_err(stage_err("hom"))?,
    );
    let scan = scan_with_counts(config, pair, network)?;
    art.push("hom.csv", emit::hom_csv(&scan));
    if wants(config, "svg") {
        art.push(
            "hom.svg",
            emit::svg_plot("Coincidence scan", "delay (ps)", "rate", &[(
                "rate",
                &scan.delays_ps,
                &scan.rates,
            )]),
        );
    }
    Ok(scan)
}

fn parse_hom_csv(path: &str) -> Result<HomScan, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::BadInput {
        path: path.to_string(),
        message: e.to_string(),
    })?;
    let bad = |message: &str| PipelineError::BadInput {
        path: path.to_string(),
        message: message.to_string(),
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    if header.trim() != "delay_ps,delay_mm,rate,counts,error" {
        return Err(bad("expected header `delay_ps,delay_mm,rate,counts,error`"));
    }
    let mut scan = HomScan {
        delays_ps: Vec::new(),
        delays_mm: Vec::new(),
        rates: Vec::new(),
        counts: Some(Vec::new()),
        errors: Some(Vec::new()),
    };
    let mut has_counts = true;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(bad("expected 5 columns"));
        }
        let f = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("malformed number"));
        scan.delays_ps.push(f(cols[0])?);
        scan.delays_mm.push(f(cols[1])?);
        scan.rates.push(f(cols[2])?);
        if cols[3].trim().is_empty() {
            has_counts = false;
        } else if let (Some(c), Some(e)) = (scan.counts.as_mut(), scan.errors.as_mut()) {
            c.push(cols[3].trim().parse::<u64>().map_err(|_| bad("malformed counts"))?);
            e.push(f(cols[4])?);
        }
    }
    if !has_counts {
        scan.counts = None;
        scan.errors = None;
    }
    Ok(scan)
}

fn run_fit(config: &RunConfig, input: &str, art: &mut Artifacts) -> Result<(), PipelineError> {
    if wants(config, "svg") {
        return Err(PipelineError::UnsupportedFormat("fit.json".into(), "svg".into()));
    }
    let scan = parse_hom_csv(input)?;
    let fit = fit_scan(&scan, config.shape()).map_err(stage_err("fit"))?;
    art.push("fit.json", emit::fit_json(&fit));
    Ok(())
}

/// Figure-specific config presets; user-provided fields that the target
/// does not pin are preserved.
pub fn repro_config(target: ReproTarget, mut config: RunConfig) -> RunConfig {
    match target {
        ReproTarget::Fig1c => {
            config.grid.nk = 128;
        }
        ReproTarget::Fig1d => {
            config.ribbon.width = 20;
            config.ribbon.k_samples = 132;
        }
        ReproTarget::Fig2d | ReproTarget::Fig3de => {
            config.lattice.delta = 0.2 * config.lattice.t;
            config.device.geometry = "hsbs".into();
            config.device.extent = 40;
            config.device.lead_length = 12;
            config.transport.carrier = "K".into();
        }
        ReproTarget::Fig4a => {
            config.quantum.v0 = 0.965;
            config.quantum.sigma = C_MM_PER_PS / 1.23;
            config.quantum.pair = vec!["c".into(), "d".into()];
            config.fit.shape = "dip".into();
        }
        ReproTarget::Fig4b => {
            config.quantum.v0 = 0.956;
            config.quantum.sigma = C_MM_PER_PS / 1.29;
            config.quantum.pair = vec!["c".into(), "d".into()];
            config.fit.shape = "dip".into();
        }
        ReproTarget::Fig4c => {
            config.quantum.pair = vec!["c".into(), "f".into()];
            config.fit.shape = "dip".into();
        }
        ReproTarget::Fig4d => {
            config.quantum.pair = vec!["f".into(), "g".into()];
            config.fit.shape = "peak".into();
        }
    }
    config
}

/// Runs the command's stages and writes all artifacts plus the manifest.
pub fn run_pipeline(
    config: &RunConfig,
    command: &Command,
    out_dir: &Path,
) -> Result<RunManifest, PipelineError> {
    let config = match command {
        Command::Repro(target) => repro_config(*target, config.clone()),
        _ => config.clone(),
    };
    let mut art = Artifacts::new(command, &config);
    let t0 = Instant::now();
    match command {
        Command::Bands | Command::Repro(ReproTarget::Fig1c) => run_bands(&config, &mut art)?,
        Command::Berry => run_berry(&config, &mut art)?,
        Command::Ribbon | Command::Repro(ReproTarget::Fig1d) => run_ribbon(&config, &mut art)?,
        Command::Transport | Command::Repro(ReproTarget::Fig2d) => {
            run_transport_cmd(&config, &mut art)?
        }
        Command::Repro(ReproTarget::Fig3de) => {
            run_transport_cmd(&config, &mut art)?;
            run_splitting(&config, &mut art)?;
        }
        Command::Hom => {
            run_hom(&config, &splitter_network(), &mut art)?;
        }
        Command::Circuit => {
            run_hom(&config, &cascade_network(), &mut art)?;
        }
        Command::Fit { input } => run_fit(&config, input, &mut art)?,
        Command::Repro(ReproTarget::Fig4a | ReproTarget::Fig4b) => {
            let scan = run_hom(&config, &splitter_network(), &mut art)?;
            let fit = fit_scan(&scan, config.shape()).map_err(stage_err("fit"))?;
            art.push("fit.json", emit::fit_json(&fit));
        }
        Command::Repro(ReproTarget::Fig4c | ReproTarget::Fig4d) => {
            let scan = run_hom(&config, &cascade_network(), &mut art)?;
            let fit = fit_scan(&scan, config.shape()).map_err(stage_err("fit"))?;
            art.push("fit.json", emit::fit_json(&fit));
        }
    }
    art.manifest.record_time("pipeline", t0.elapsed().as_secs_f64() * 1e3);

    std::fs::create_dir_all(out_dir)?;
    for (name, contents) in &art.files {
        std::fs::write(out_dir.join(name), contents)?;
    }
    // Manifest written last, after every digest is known.
    std::fs::write(out_dir.join("manifest.json"), art.manifest.to_json())?;
    Ok(art.manifest)
}
