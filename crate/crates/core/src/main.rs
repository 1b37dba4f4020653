use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aqualoc::environment::acoustics_profile;
use aqualoc::geodesy::EnuCoord;
use aqualoc::harness::{load_scenario, write_outputs, RunError, Scenario, ScenarioError, Simulation};
use aqualoc::propagation::{trace, transmission_loss, LinkBudget, PropagationError};

/// Underwater acoustic channel simulation and GA multilateration.
#[derive(Parser)]
#[command(name = "aqualoc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print per-layer sound speed and absorption.
    Profile { scenario: PathBuf },
    /// Trace a single path and print its link budget.
    Ping {
        scenario: PathBuf,
        /// Source (beacon) position, "e,n,u" in meters
        #[arg(long, value_parser = parse_enu, allow_hyphen_values = true)]
        src: EnuCoord,
        /// Receiver (hydrophone) position, "e,n,u" in meters
        #[arg(long, value_parser = parse_enu, allow_hyphen_values = true)]
        dst: EnuCoord,
    },
    /// Solve one epoch's fix and print the GA trace.
    Localize {
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        epoch: usize,
    },
    /// Run the full pipeline and write epochs.csv, summary.json and scenario.toml.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_enu(s: &str) -> Result<EnuCoord, String> {
    let parts: Vec<f64> =
        s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"))).collect::<Result<_, _>>()?;
    match parts[..] {
        [e, n, u] => Ok(EnuCoord::new(e, n, u)),
        _ => Err(format!("expected e,n,u but got {} values", parts.len())),
    }
}

enum Failure {
    Validation(String),
    Runtime(String),
    /// stdout was closed by the reader, e.g. `| head`
    ClosedOutput,
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        match e.kind() {
            io::ErrorKind::BrokenPipe => Failure::ClosedOutput,
            _ => Failure::Runtime(format!("stdout: {e}")),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::NoSuchEpoch(..) => Failure::Validation(e.to_string()),
            e => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<PropagationError> for Failure {
    fn from(e: PropagationError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn profile(scenario: &Scenario, out: &mut impl Write) -> Result<(), Failure> {
    let col = &scenario.column;
    let acoustics =
        acoustics_profile(col, scenario.file.carrier_frequency).map_err(|e| Failure::Runtime(e.to_string()))?;
    writeln!(out, "carrier_frequency_khz {}", scenario.file.carrier_frequency)?;
    writeln!(out, "layer,top_m,bottom_m,temperature_c,salinity_psu,ph,sound_speed_mps,absorption_db_per_km")?;
    for (i, (layer, a)) in col.layers().iter().zip(&acoustics).enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            i,
            col.boundaries()[i],
            col.boundaries()[i + 1],
            layer.temperature,
            layer.salinity,
            layer.ph,
            a.sound_speed,
            a.absorption
        )?;
    }
    Ok(())
}

fn ping(scenario: &Scenario, src: EnuCoord, dst: EnuCoord, out: &mut impl Write) -> Result<(), Failure> {
    let sim = Simulation::new(scenario)?;
    let channel = sim.channel();
    let cfg = &scenario.file.channel;
    let path = trace(&channel.profile, channel.path_model, src, dst)?;
    let tl = transmission_loss(&path, &channel.profile)?;
    let budget = LinkBudget::new(cfg.source_level, tl, cfg.noise_level);
    writeln!(out, "path_model {}", channel.path_model)?;
    writeln!(out, "tof_s {}", path.tof)?;
    writeln!(out, "path_length_m {}", path.total_length)?;
    writeln!(out, "ray_parameter_s_per_m {}", path.ray_parameter)?;
    for s in &path.segments {
        writeln!(
            out,
            "segment layer={} length_m={} grazing_rad={} horizontal_m={} time_s={}",
            s.layer, s.length, s.grazing_angle, s.horizontal, s.time
        )?;
    }
    writeln!(out, "source_level_db {}", budget.source_level)?;
    writeln!(out, "transmission_loss_db {}", budget.transmission_loss)?;
    writeln!(out, "noise_level_db {}", budget.noise_level)?;
    writeln!(out, "snr_db {}", budget.snr)?;
    writeln!(out, "detected {}", budget.snr >= cfg.detection_threshold)?;
    Ok(())
}

fn localize(scenario: &Scenario, epoch: usize, out: &mut impl Write) -> Result<(), Failure> {
    let sim = Simulation::new(scenario)?;
    let inputs = sim.epoch_inputs(epoch)?;
    writeln!(out, "epoch {} t={}", inputs.epoch, inputs.timestamp)?;
    writeln!(out, "truth {} {} {}", inputs.truth.east, inputs.truth.north, inputs.truth.up)?;
    for a in &inputs.anchors {
        let p = a.position;
        match inputs.measurements.iter().find(|m| m.anchor_id == a.id) {
            Some(m) => writeln!(
                out,
                "anchor {} at {} {} {} tof_s={} snr_db={}",
                a.id, p.east, p.north, p.up, m.tof_measured, m.snr
            )?,
            None => writeln!(out, "anchor {} at {} {} {} no detection", a.id, p.east, p.north, p.up)?,
        }
    }
    writeln!(out, "ga_seed {}", inputs.ga.seed)?;
    writeln!(out, "generation,best_fitness,mean_fitness,mutation_sigma,best_e,best_n,best_u")?;
    let mut trace_result = Ok(());
    let estimate = sim.localize(&inputs, |g| {
        if trace_result.is_ok() {
            trace_result = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                g.generation, g.best_fitness, g.mean_fitness, g.mutation_sigma, g.best.east, g.best.north, g.best.up
            );
        }
    })?;
    trace_result?;
    match estimate {
        Some(e) => {
            writeln!(out, "estimate {} {} {}", e.position.east, e.position.north, e.position.up)?;
            writeln!(out, "best_fitness {}", e.best_fitness)?;
            writeln!(out, "population_dispersion_m {}", e.population_dispersion)?;
            writeln!(out, "generations_run {}", e.generations_run)?;
            writeln!(out, "geometry_warning {}", e.geometry_warning)?;
            writeln!(out, "error_m {}", e.position.distance(inputs.truth))?;
        }
        None => writeln!(out, "fix-gap: {} detections", inputs.measurements.len())?,
    }
    Ok(())
}

fn run(mut scenario: Scenario, dir: PathBuf, seed: Option<u64>, out: &mut impl Write) -> Result<(), Failure> {
    if let Some(seed) = seed {
        scenario.set_seed(seed);
    }
    let sim = Simulation::new(&scenario)?;
    let (records, summary) = sim.run()?;
    write_outputs(&records, &summary, &scenario.source, &dir)?;
    let fmt = |r: Option<f64>| r.map_or("n/a".to_owned(), |x| format!("{x:.3}"));
    writeln!(out, "{} epochs, {} fixes, detection rate {:.3}", summary.epochs, summary.fixes, summary.detection_rate)?;
    writeln!(
        out,
        "raw RMSE {} m (up {}), fused RMSE {} m (up {})",
        fmt(summary.raw_rmse.map(|r| r.total)),
        fmt(summary.raw_rmse.map(|r| r.up)),
        fmt(summary.fused_rmse.map(|r| r.total)),
        fmt(summary.fused_rmse.map(|r| r.up)),
    )?;
    writeln!(out, "outputs in {}", dir.display())?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut out = BufWriter::new(io::stdout().lock());
    let result = (|| -> Result<(), Failure> {
        match cli.command {
            Command::Profile { scenario } => profile(&load_scenario(scenario)?, &mut out),
            Command::Ping { scenario, src, dst } => ping(&load_scenario(scenario)?, src, dst, &mut out),
            Command::Localize { scenario, epoch } => localize(&load_scenario(scenario)?, epoch, &mut out),
            Command::Run { scenario, out: dir, seed } => run(load_scenario(scenario)?, dir, seed, &mut out),
        }?;
        Ok(out.flush()?)
    })();
    match result {
        Ok(()) | Err(Failure::ClosedOutput) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
