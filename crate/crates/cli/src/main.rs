#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use seme_core::analysis::{
    default_panel_sizes, sensitivity_sweep, size_sweep, std_comparison, write_size_sweep_csv,
    PanelSize, StdComparison, TcoInputs,
};
use seme_core::coverage::{
    default_cdf_levels, delta_power_map, empirical_cdf, roi_area, roi_reduction, threshold_map,
    DeltaStats,
};
use seme_core::ems::{far_field_directivity, local_angles, AnglePair, EmsPanel, Illumination};
use seme_core::scenario::{
    validate_scenario, write_power_grid, AccessPoint, PhaseProfile, Severity, SummationMode,
};
use seme_core::{Error, GridEvaluator, PowerGrid, Scenario, Vec3};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "seme",
    version,
    about = "Indoor coverage simulation with passive reflecting skins"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the coverage grids with and without panels and write all maps.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
        /// Skip the panel-on run.
        #[arg(long)]
        no_panels: bool,
        /// Also compare against a second AP at `x,y,z` (copy of the first AP).
        #[arg(long, value_parser = parse_vec3)]
        extra_ap: Option<Vec3>,
    },
    /// Print the local incidence and reflection angles of a panel.
    Angles {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        panel: Option<String>,
    },
    /// Far-field directivity of a panel.
    Pattern {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        panel: Option<String>,
        /// Angular step in degrees.
        #[arg(long, default_value_t = 0.5)]
        resolution: f64,
    },
    /// Coverage against panel size.
    SweepSize {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        panel: Option<String>,
        /// Comma-separated `L:N` pairs, or bare `L` to derive N from the pitch.
        #[arg(long, value_parser = parse_size, value_delimiter = ',')]
        sizes: Vec<SizeArg>,
    },
    /// Coverage against in-plane displacement of a panel.
    Sensitivity {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        panel: Option<String>,
        /// `lo:hi:step` in metres along the panel's horizontal axis.
        #[arg(long, value_parser = parse_range, default_value = "-0.1:0.1:0.025")]
        dy_range: Lattice,
        /// `lo:hi:step` in metres along the panel's vertical axis.
        #[arg(long, value_parser = parse_range, default_value = "-0.1:0.1:0.025")]
        dz_range: Lattice,
    },
    /// Total cost of ownership comparison.
    Tco {
        /// JSON file with `seme`, `std` cost models and `area_m2`.
        #[arg(long)]
        costs: PathBuf,
        #[arg(long, default_value_t = 5.0)]
        dt_years: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario file and list its diagnostics.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    threshold_dbm: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    max_reflections: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Incoherent,
    Coherent,
}

/// Offsets parsed from `lo:hi:step`.
#[derive(Clone, Debug)]
struct Lattice(Vec<f64>);

#[derive(Clone, Copy, Debug)]
struct SizeArg {
    side_m: f64,
    cells: Option<usize>,
}

enum Failure {
    Input(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Io(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok(Vec3::new(x, y, z)),
        _ => Err("expected three finite numbers `x,y,z`".into()),
    }
}

fn parse_size(s: &str) -> Result<SizeArg, String> {
    let (l, n) = match s.split_once(':') {
        Some((l, n)) => (
            l,
            Some(
                n.trim()
                    .parse::<usize>()
                    .map_err(|e| format!("`{n}`: {e}"))?,
            ),
        ),
        None => (s, None),
    };
    let side_m = l.trim().parse::<f64>().map_err(|e| format!("`{l}`: {e}"))?;
    if !(side_m > 0.0 && side_m.is_finite()) || n == Some(0) {
        return Err(format!("`{s}`: side and cell count must be positive"));
    }
    Ok(SizeArg { side_m, cells: n })
}

fn parse_range(s: &str) -> Result<Lattice, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    let [lo, hi, step] = parts[..] else {
        return Err("expected `lo:hi:step`".into());
    };
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err("need lo ≤ hi and step > 0".into());
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    // snap to 1e-9 so that 0 lands exactly on the lattice
    Ok(Lattice(
        (0..=n)
            .map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9)
            .collect(),
    ))
}

fn load(args: &ScenarioArgs) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(&args.scenario)
        .map_err(|e| Failure::Io(format!("{}: {e}", args.scenario.display())))?;
    let mut s = Scenario::from_json(&text)?;
    if let Some(t) = args.threshold_dbm {
        s.rt.threshold_dbm = t;
    }
    if let Some(m) = args.mode {
        s.rt.summation_mode = match m {
            Mode::Incoherent => SummationMode::Incoherent,
            Mode::Coherent => SummationMode::Coherent,
        };
    }
    if let Some(r) = args.max_reflections {
        s.rt.max_reflections = r;
    }
    let diagnostics = validate_scenario(&s);
    for d in diagnostics
        .iter()
        .filter(|d| d.severity == Severity::Warning)
    {
        eprintln!("{d}");
    }
    let errors: Vec<_> = diagnostics
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    if errors.is_empty() {
        Ok(s)
    } else {
        Err(Error::Validation(errors).into())
    }
}

fn panel_id(s: &Scenario, requested: &Option<String>) -> Result<String, Failure> {
    match requested {
        Some(id) => Ok(s.panel(id)?.id.clone()),
        None => s
            .ems_panels
            .first()
            .map(|p| p.id.clone())
            .ok_or_else(|| Failure::Input("scenario has no EMS panels".into())),
    }
}

/// Source position and focus of a synthesized panel.
fn source_and_focus(s: &Scenario, id: &str) -> Result<(Vec3, Vec3), Failure> {
    match &s.panel(id)?.phase_profile {
        PhaseProfile::Synthesized { source_ap, focus } => {
            Ok((s.access_point(source_ap)?.position, *focus))
        }
        PhaseProfile::Explicit(_) => Err(Failure::Input(format!(
            "panel {id} has an explicit phase profile; angles need a source and focus"
        ))),
    }
}

fn prepare_out(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

#[derive(Serialize)]
struct RegionReport {
    region: String,
    samples: usize,
    lambda_ref_m2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_seme_m2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    theta_th_ref: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_th_seme: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<DeltaStats>,
}

#[derive(Serialize)]
struct SimulationReport {
    threshold_dbm: f64,
    frequency_hz: f64,
    points: usize,
    regions: Vec<RegionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<DeltaStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    std_comparison: Option<StdComparison>,
}

fn write_grid_products(g: &PowerGrid, s: &Scenario, out: &Path, tag: &str) -> Outcome {
    write_power_grid(g, out.join(format!("grid_{tag}.csv")))?;
    threshold_map(g, s.rt.threshold_dbm).write_csv(out.join(format!("map_{tag}.csv")))?;
    for r in &s.regions {
        empirical_cdf(g, r, &default_cdf_levels())?
            .write_csv(out.join(format!("cdf_{tag}_{}.csv", r.id)))?;
    }
    Ok(())
}

fn simulate(s: &Scenario, out: &Path, no_panels: bool, extra_ap: Option<Vec3>) -> Outcome {
    prepare_out(out)?;
    let p_th = s.rt.threshold_dbm;
    let eval = GridEvaluator::new(s)?;
    let reference = eval.reference();
    write_grid_products(&reference, s, out, "ref")?;

    let seme = if no_panels || s.ems_panels.is_empty() {
        None
    } else {
        let panels = s
            .ems_panels
            .iter()
            .map(|p| EmsPanel::from_spec(p, s))
            .collect::<seme_core::Result<Vec<_>>>()?;
        let g = eval.with_panels(&panels);
        write_grid_products(&g, s, out, "seme")?;
        Some(g)
    };
    let delta = match &seme {
        Some(g) => {
            let (map, stats) = delta_power_map(g, &reference)?;
            map.write_csv(out.join("delta.csv"))?;
            Some((map, stats))
        }
        None => None,
    };

    let mut regions = Vec::new();
    for r in &s.regions {
        let samples = reference.region_values(&r.id).len();
        if samples == 0 {
            eprintln!("warning [region {}]: no grid samples", r.id);
            continue;
        }
        let lambda_ref = roi_area(&threshold_map(&reference, p_th), r, reference.spacing)?;
        let theta_th_ref = empirical_cdf(&reference, r, &[p_th])?.theta[0];
        let mut report = RegionReport {
            region: r.id.clone(),
            samples,
            lambda_ref_m2: lambda_ref,
            lambda_seme_m2: None,
            rho: None,
            theta_th_ref,
            theta_th_seme: None,
            delta: delta.as_ref().and_then(|(m, _)| m.stats(Some(&r.id))),
        };
        if let Some(g) = &seme {
            let lambda = roi_area(&threshold_map(g, p_th), r, g.spacing)?;
            report.lambda_seme_m2 = Some(lambda);
            report.theta_th_seme = Some(empirical_cdf(g, r, &[p_th])?.theta[0]);
            if lambda_ref > 0.0 {
                report.rho = Some(roi_reduction(lambda_ref, lambda)?);
            }
        }
        regions.push(report);
    }

    let std = match extra_ap {
        Some(pos) => {
            let mut ap: AccessPoint = s
                .access_points
                .first()
                .cloned()
                .ok_or_else(|| Failure::Input("scenario has no access points".into()))?;
            ap.id = format!("{}_extra", ap.id);
            ap.position = pos;
            Some(std_comparison(s, &ap)?)
        }
        None => None,
    };

    let report = SimulationReport {
        threshold_dbm: p_th,
        frequency_hz: reference.meta.frequency_hz,
        points: reference.len(),
        regions,
        delta: delta.map(|(_, st)| st),
        std_comparison: std,
    };
    write_json(&out.join("stats.json"), &report)?;
    for r in &report.regions {
        let rho = r
            .rho
            .map_or("n/a".to_string(), |v| format!("{:.2}%", v * 100.0));
        println!(
            "region {}: lambda_ref={:.4} m2 lambda_seme={} rho={rho}",
            r.region,
            r.lambda_ref_m2,
            r.lambda_seme_m2
                .map_or("n/a".to_string(), |v| format!("{v:.4} m2")),
        );
    }
    Ok(())
}

fn angles(s: &Scenario, panel: &Option<String>) -> Outcome {
    let id = panel_id(s, panel)?;
    let (source, focus) = source_and_focus(s, &id)?;
    let spec = s.panel(&id)?;
    let i = local_angles(source, spec)?;
    let r = local_angles(focus, spec)?;
    println!(
        "theta_i={:.1} phi_i={:.1} theta_r={:.1} phi_r={:.1}",
        i.theta, i.phi, r.theta, r.phi
    );
    Ok(())
}

fn pattern(s: &Scenario, out: &Path, panel: &Option<String>, resolution: f64) -> Outcome {
    let id = panel_id(s, panel)?;
    let spec = s.panel(&id)?;
    let built = EmsPanel::from_spec(spec, s)?;
    let (illumination, wavelength) = match &spec.phase_profile {
        PhaseProfile::Synthesized { source_ap, .. } => {
            let ap = s.access_point(source_ap)?;
            (Illumination::PointSource(ap.position), ap.wavelength())
        }
        PhaseProfile::Explicit(_) => {
            let ap = s
                .access_points
                .first()
                .ok_or_else(|| Failure::Input("scenario has no access points".into()))?;
            (
                Illumination::PlaneWave(AnglePair::new(0.0, 0.0)),
                ap.wavelength(),
            )
        }
    };
    let d = far_field_directivity(&built, illumination, wavelength, resolution)?;
    prepare_out(out)?;
    d.write_csv(out.join(format!("pattern_{id}.csv")))?;
    println!(
        "panel {id}: d_max={:.2} dB at theta={:.1} phi={:.1}",
        d.d_max, d.peak.theta, d.peak.phi
    );
    Ok(())
}

fn sweep_size(s: &Scenario, out: &Path, panel: &Option<String>, sizes: &[SizeArg]) -> Outcome {
    let id = panel_id(s, panel)?;
    let sizes: Vec<PanelSize> = if sizes.is_empty() {
        default_panel_sizes()
    } else {
        let pitch = s.panel(&id)?.cell_pitch_m.unwrap_or(f64::NAN);
        sizes
            .iter()
            .map(|a| match a.cells {
                Some(n) => PanelSize::new(a.side_m, n),
                None => PanelSize::from_pitch(a.side_m, pitch),
            })
            .collect()
    };
    let rows = size_sweep(s, &id, &sizes)?;
    prepare_out(out)?;
    write_size_sweep_csv(&rows, out.join("size_sweep.csv"))?;
    write_json(&out.join("size_sweep.json"), &rows)?;
    for r in &rows {
        let rho = r
            .rho
            .map_or("n/a".to_string(), |v| format!("{:.2}%", v * 100.0));
        println!(
            "L={} N={}: lambda_seme={:.4} m2 rho={rho} dP_avg={:.2} dB",
            r.side_m, r.cells, r.lambda_seme, r.delta_stats.avg
        );
    }
    Ok(())
}

fn sensitivity(
    s: &Scenario,
    out: &Path,
    panel: &Option<String>,
    dy: &[f64],
    dz: &[f64],
) -> Outcome {
    let id = panel_id(s, panel)?;
    let map = sensitivity_sweep(s, &id, dy, dz)?;
    prepare_out(out)?;
    map.write_csv(out.join("sensitivity.csv"))?;
    map.write_slices_csv(out.join("sensitivity_slices.csv"))?;
    write_json(&out.join("sensitivity.json"), &map)?;
    let invalid = map.cells.iter().filter(|c| !c.valid).count();
    match map.min_rho() {
        Some(r) => println!(
            "{} offsets ({invalid} invalid), min rho={:.2}%",
            map.cells.len(),
            r * 100.0
        ),
        None => println!(
            "{} offsets ({invalid} invalid), rho undefined",
            map.cells.len()
        ),
    }
    Ok(())
}

fn tco(costs: &Path, dt: f64, out: &Option<PathBuf>) -> Outcome {
    let report = TcoInputs::load(costs)?.compare(dt)?;
    if let Some(dir) = out {
        prepare_out(dir)?;
        write_json(&dir.join("tco.json"), &report)?;
    }
    println!(
        "TCO over {} years: SEME={} $ STD={} $ delta={} $ xi={:.1}% saving={:.2} $/m2",
        report.dt_years,
        report.seme_total,
        report.std_total,
        report.delta,
        report.xi * 100.0,
        report.saving_per_m2
    );
    Ok(())
}

fn validate(path: &Path) -> Outcome {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let s = Scenario::from_json(&text)?;
    let diagnostics = validate_scenario(&s);
    for d in &diagnostics {
        eprintln!("{d}");
    }
    let errors = diagnostics
        .iter()
        .filter(|d| d.severity == Severity::Error)
        .count();
    if errors > 0 {
        return Err(Failure::Input(format!("{errors} error(s)")));
    }
    println!("ok ({} warning(s))", diagnostics.len());
    Ok(())
}

fn configure_threads() -> Outcome {
    let Ok(v) = std::env::var("SEME_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::Input(format!(
            "SEME_THREADS must be a positive integer, got `{v}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Input(e.to_string()))
}

fn run(cli: Cli) -> Outcome {
    configure_threads()?;
    match cli.command {
        Command::Simulate {
            scenario,
            out,
            no_panels,
            extra_ap,
        } => simulate(&load(&scenario)?, &out, no_panels, extra_ap),
        Command::Angles { scenario, panel } => angles(&load(&scenario)?, &panel),
        Command::Pattern {
            scenario,
            out,
            panel,
            resolution,
        } => pattern(&load(&scenario)?, &out, &panel, resolution),
        Command::SweepSize {
            scenario,
            out,
            panel,
            sizes,
        } => sweep_size(&load(&scenario)?, &out, &panel, &sizes),
        Command::Sensitivity {
            scenario,
            out,
            panel,
            dy_range,
            dz_range,
        } => sensitivity(&load(&scenario)?, &out, &panel, &dy_range.0, &dz_range.0),
        Command::Tco {
            costs,
            dt_years,
            out,
        } => tco(&costs, dt_years, &out),
        Command::Validate { scenario } => validate(&scenario),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
