use clap::{Args, Parser, Subcommand};
use nanotrap::atom::{load_atom_data, AtomDatabase};
use nanotrap::config::{load_config, OutputFormat, RunConfig};
use nanotrap::light_shift::Manifold;
use nanotrap::output::write_scan_csv;
use nanotrap::polarizability::{find_magic_wavelength, polarizabilities, Sublevel, DEFAULT_SPECTRUM_INTENSITY};
use nanotrap::trap::{characterize, scan_potential, TrapCharacterization, TrapModel};
use nanotrap::units::wavelength_to_angular_frequency;
use nanotrap::waveguide::{fused_silica_index, solve_he11, FiberSpec};
use nanotrap::{Error, Result};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nanotrap",
    version,
    about = "State-resolved optical trap potentials for cesium near a nanofiber"
)]
struct Cli {
    /// Atomic data file replacing the bundled cesium data.
    #[arg(long, global = true)]
    atom_data: Option<PathBuf>,
    /// Output file; overrides the path given in a configuration.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads for parallel evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print machine-readable JSON instead of a text report.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the HE11 mode of a step-index fiber.
    #[command(allow_negative_numbers = true)]
    Mode(ModeArgs),
    /// Scalar, vector and tensor polarizabilities of one hyperfine manifold.
    #[command(allow_negative_numbers = true)]
    Polarizability(PolarizabilityArgs),
    /// Locate a magic wavelength inside a bracket.
    #[command(allow_negative_numbers = true)]
    Magic(MagicArgs),
    /// Evaluate adiabatic potentials on the grid of a configuration file.
    Scan { config: PathBuf },
    /// Locate and characterize the trap of a configuration file.
    Characterize { config: PathBuf },
}

#[derive(Args)]
struct ModeArgs {
    /// Vacuum wavelength, m.
    #[arg(long, default_value_t = 937e-9)]
    wavelength: f64,
    /// Fiber radius, m.
    #[arg(long, default_value_t = 250e-9)]
    radius: f64,
    /// Core index; fused silica at the wavelength when omitted.
    #[arg(long)]
    n1: Option<f64>,
    /// Cladding index.
    #[arg(long, default_value_t = 1.0)]
    n2: f64,
}

#[derive(Args)]
struct PolarizabilityArgs {
    /// Fine-structure level, e.g. 6S1/2 or 6P3/2.
    #[arg(long, default_value = "6S1/2")]
    level: String,
    /// Hyperfine quantum number.
    #[arg(long, default_value_t = 4.0)]
    f: f64,
    /// Vacuum wavelength, m.
    #[arg(long, default_value_t = 937e-9)]
    wavelength: f64,
}

#[derive(Args)]
struct MagicArgs {
    /// Lower end of the wavelength bracket, m.
    #[arg(long)]
    lo: f64,
    /// Upper end of the wavelength bracket, m.
    #[arg(long)]
    hi: f64,
    #[arg(long, default_value_t = 4.0)]
    ground_f: f64,
    #[arg(long, default_value_t = 4.0)]
    excited_f: f64,
    #[arg(long, default_value_t = 0.0)]
    excited_m: f64,
    /// Reference intensity, W/m².
    #[arg(long, default_value_t = DEFAULT_SPECTRUM_INTENSITY)]
    intensity: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidParameter("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match &cli.command {
        Command::Mode(args) => cmd_mode(cli, args),
        Command::Polarizability(args) => cmd_polarizability(cli, args),
        Command::Magic(args) => cmd_magic(cli, args),
        Command::Scan { config } => cmd_scan(cli, config),
        Command::Characterize { config } => cmd_characterize(cli, config),
    }
}

fn database(cli: &Cli, cfg: Option<&RunConfig>) -> Result<AtomDatabase> {
    match cli.atom_data.as_ref().or(cfg.and_then(|c| c.atom_data.as_ref())) {
        Some(path) => {
            log::info!("loading atom data from {}", path.display());
            load_atom_data(path)
        }
        None => Ok(AtomDatabase::bundled()),
    }
}

fn emit_json(value: &serde_json::Value) -> Result<()> {
    println!(
        "{}",
        serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?
    );
    Ok(())
}

fn cmd_mode(cli: &Cli, args: &ModeArgs) -> Result<()> {
    let n1 = args.n1.unwrap_or_else(|| fused_silica_index(args.wavelength));
    let fiber = FiberSpec::new(args.radius, n1, args.n2)?;
    let mode = solve_he11(args.wavelength, &fiber)?;
    let fraction = mode.longitudinal_fraction_at_surface();
    if cli.json {
        return emit_json(&serde_json::json!({
            "mode": mode,
            "effective_index": mode.effective_index(),
            "v_number": mode.v_number(),
            "longitudinal_fraction": fraction,
        }));
    }
    println!("wavelength            {:.6e} m", mode.wavelength);
    println!("radius                {:.6e} m", fiber.radius);
    println!("n1, n2                {:.6}, {:.6}", fiber.n1, fiber.n2);
    println!("V                     {:.6}", mode.v_number());
    println!("beta                  {:.9e} 1/m", mode.beta);
    println!("h                     {:.9e} 1/m", mode.h);
    println!("q                     {:.9e} 1/m", mode.q);
    println!("s                     {:.9}", mode.s);
    println!("effective index       {:.9}", mode.effective_index());
    println!("longitudinal fraction {fraction:.6}");
    Ok(())
}

fn cmd_polarizability(cli: &Cli, args: &PolarizabilityArgs) -> Result<()> {
    let db = database(cli, None)?;
    let manifold = Manifold::parse(&args.level, args.f)?;
    let p = polarizabilities(&db, manifold, wavelength_to_angular_frequency(args.wavelength))?;
    if cli.json {
        return emit_json(&serde_json::json!({
            "manifold": manifold.to_string(),
            "wavelength_m": args.wavelength,
            "scalar_au": p.scalar_au,
            "vector_au": p.vector_au,
            "tensor_au": p.tensor_au,
        }));
    }
    println!("{manifold} at {:.6e} m", args.wavelength);
    println!("scalar {:.6} a.u.", p.scalar_au);
    println!("vector {:.6} a.u.", p.vector_au);
    println!("tensor {:.6} a.u.", p.tensor_au);
    Ok(())
}

fn cmd_magic(cli: &Cli, args: &MagicArgs) -> Result<()> {
    let db = database(cli, None)?;
    let ground = Sublevel {
        manifold: Manifold::parse("6S1/2", args.ground_f)?,
        m: 0.0,
    };
    let excited = Sublevel {
        manifold: Manifold::parse("6P3/2", args.excited_f)?,
        m: args.excited_m,
    };
    let magic = find_magic_wavelength(&db, (args.lo, args.hi), ground, excited, args.intensity)?;
    if cli.json {
        return emit_json(&serde_json::json!({
            "wavelength_m": magic.wavelength,
            "slope_hz_per_m": magic.slope_hz_per_m,
            "shift_hz": magic.shift_hz,
        }));
    }
    println!("magic wavelength {:.6} nm", magic.wavelength * 1e9);
    println!("slope            {:.6e} Hz/m", magic.slope_hz_per_m);
    println!("common shift     {:.6e} Hz", magic.shift_hz);
    Ok(())
}

fn output_target<'a>(cli: &'a Cli, cfg: &'a RunConfig) -> Option<&'a Path> {
    cli.output
        .as_deref()
        .or(cfg.output.as_ref().and_then(|o| o.path.as_deref()))
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn cmd_scan(cli: &Cli, config: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let grid = cfg
        .scan
        .ok_or_else(|| Error::Config("configuration has no scan section".into()))?;
    let db = database(cli, Some(&cfg))?;
    let model = TrapModel::new(&db, cfg.trap_configuration())?;
    let table = scan_potential(&model, &cfg.manifolds, &grid)?;
    let format = cfg.output.as_ref().map(|o| o.format).unwrap_or_default();
    let mut out = writer(output_target(cli, &cfg))?;
    match (format, cli.json) {
        (OutputFormat::Json, _) | (_, true) => {
            serde_json::to_writer_pretty(&mut out, &table).map_err(|e| Error::Config(e.to_string()))?;
            writeln!(out)?;
            out.flush()?;
        }
        (OutputFormat::Csv, false) => write_scan_csv(&table, out)?,
    }
    Ok(())
}

fn cmd_characterize(cli: &Cli, config: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let db = database(cli, Some(&cfg))?;
    let model = TrapModel::new(&db, cfg.trap_configuration())?;
    let report = characterize(&model, &cfg.characterize.clone().unwrap_or_default())?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(path) = output_target(cli, &cfg) {
        std::fs::write(path, format!("{json}\n"))?;
    }
    if cli.json {
        println!("{json}");
    } else {
        print_summary(&report);
    }
    Ok(())
}

fn print_summary(c: &TrapCharacterization) {
    let m = &c.minimum;
    println!("ground manifold       {}", m.manifold);
    println!(
        "minimum               r - a = {:.2} nm, phi = {:.4} rad, z = {:.2} nm",
        m.distance_m * 1e9,
        m.position.phi,
        m.position.z * 1e9
    );
    println!("depth                 {:.4} mK ({:.4e} Hz)", m.depth_mk, m.depth_hz);
    println!("escape depth          {:.4} mK", m.escape_depth_mk);
    let f = &c.frequencies;
    println!("nu_r                  {:.2} kHz", f.radial.frequency_hz * 1e-3);
    println!("nu_phi                {:.2} kHz", f.azimuthal.frequency_hz * 1e-3);
    match &f.axial {
        Some(a) => println!("nu_z                  {:.2} kHz", a.frequency_hz * 1e-3),
        None => println!("nu_z                  unconfined"),
    }
    println!("sigma_phi             {:.2} nm", c.motional_width_azimuthal_m * 1e9);
    println!("splitting at minimum  {:.4e} Hz", c.splitting_at_minimum_hz);
    println!(
        "splitting at {:.1} nm  {:.4e} Hz",
        c.splitting_displacement_m * 1e9,
        c.splitting_at_displacement_hz
    );
    println!("coherence time        {:.4e} s", c.coherence_time_s);
    if let (Some(s), Some(t)) = (c.hyperfine_spread_hz, c.motional_coherence_time_s) {
        println!("hyperfine spread      {s:.4} Hz (tau = {t:.4e} s)");
    }
    if let Some(e) = &c.excited {
        let offset = e
            .offset_from_ground_m
            .map(|o| format!("{:.2} nm from ground minimum", o * 1e9));
        println!(
            "excited {} m={}     radial minimum: {}, trapped in 3D: {}{}",
            e.manifold,
            e.m,
            e.radial_minimum,
            e.trapped_all_directions,
            offset.map(|s| format!(", {s}")).unwrap_or_default()
        );
    }
    if let Some(b) = c.beat_check_relative_error {
        println!("beat-average check    {b:.2e}");
    }
}
