//! Command-line surface: simulation, mask data preparation, inverse
//! lithography, fracturing, benchmarks, and configuration inspection.
//!
//! Exit codes: 0 success, 2 parse error, 3 validation error, 4 numerical
//! failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use ebeam_mdp::config::RunConfig;
use ebeam_mdp::exact::{resist_develop, total_energy};
use ebeam_mdp::fast::FastModel;
use ebeam_mdp::fracture::{fracture, BinaryMask};
use ebeam_mdp::io::{read_pfm, read_shots, write_pfm, write_pgm, write_shots, write_trace};
use ebeam_mdp::opt::{ilt_forward, ilt_optimize, mdp_optimize, ForwardModel, OptMode, UpdateFrom};
use ebeam_mdp::optical::{cdr_retarget, magnify_4x};
use ebeam_mdp::{bench_csv, benchmark_methods, Error, RasterField, Result, ShotSet};

#[derive(Parser)]
#[command(
    name = "ebeam-mdp",
    about = "Variable-shaped-beam e-beam lithography: simulation, shot optimization, inverse lithography",
    version
)]
struct Cli {
    /// JSON configuration file; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for the numeric kernels (also via EBEAM_MDP_THREADS;
    /// flag wins). Defaults to the machine's parallelism. Benchmarks always
    /// time single-threaded.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

/// Config keys that can be overridden from the command line.
#[derive(Args, Clone, Default)]
struct Overrides {
    /// Mask grid resolution M.
    #[arg(long)]
    grid: Option<usize>,
    /// Shot-list CSV input.
    #[arg(long)]
    shots: Option<PathBuf>,
    /// Target raster (PFM): mask-level for mdp/fracture, wafer-level for ilt.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Optimization epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Forward model: "exact" or "fast".
    #[arg(long)]
    forward: Option<String>,
    /// Gradient base: "projected" or "raw".
    #[arg(long)]
    update_from: Option<String>,
    /// Dose-map edge softness (pixels).
    #[arg(long)]
    sigma_prime: Option<f64>,
    /// Target-retargeting blur (wafer pixels); 0 disables.
    #[arg(long)]
    sigma_cdr: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Expose a shot list and develop it; write energy and resist rasters.
    Simulate(Overrides),
    /// Optimize shots against a mask-level target.
    Mdp(Overrides),
    /// Optimize shots against a wafer-level target through the optical model.
    Ilt(Overrides),
    /// Decompose a binary target into valid shots.
    Fracture(Overrides),
    /// Time the exact and fast exposure paths over a shot-count sweep.
    Bench {
        #[command(flatten)]
        overrides: Overrides,
        /// Shot counts to sweep, ascending.
        #[arg(long, value_delimiter = ',', default_value = "1,10,50,100,500,1000")]
        counts: Vec<usize>,
        /// Timing repetitions per count (median is reported).
        #[arg(long, default_value_t = 3)]
        trials: usize,
        /// Also write the CSV table to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the fully-resolved configuration as JSON.
    ConfigDump(Overrides),
}

fn parse_forward(s: &str) -> Result<ForwardModel> {
    match s {
        "exact" => Ok(ForwardModel::Exact),
        "fast" => Ok(ForwardModel::Fast),
        other => Err(Error::parse(
            "--forward",
            format!("expected \"exact\" or \"fast\", got {other:?}"),
        )),
    }
}

fn parse_update_from(s: &str) -> Result<UpdateFrom> {
    match s {
        "projected" => Ok(UpdateFrom::Projected),
        "raw" => Ok(UpdateFrom::Raw),
        other => Err(Error::parse(
            "--update-from",
            format!("expected \"projected\" or \"raw\", got {other:?}"),
        )),
    }
}

fn resolve_config(config_path: Option<&Path>, ov: &Overrides) -> Result<RunConfig> {
    let mut cfg = match config_path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(g) = ov.grid {
        cfg.grid_size = g;
    }
    if let Some(p) = &ov.shots {
        cfg.paths.shots_in = Some(p.display().to_string());
    }
    if let Some(p) = &ov.target {
        cfg.paths.target_in = Some(p.display().to_string());
    }
    if let Some(p) = &ov.out_dir {
        cfg.paths.out_dir = p.display().to_string();
    }
    if let Some(s) = ov.seed {
        cfg.opt.seed = s;
    }
    if let Some(e) = ov.epochs {
        cfg.opt.epochs = e;
    }
    if let Some(lr) = ov.lr {
        cfg.opt.lr = lr;
    }
    if let Some(f) = &ov.forward {
        cfg.opt.forward = parse_forward(f)?;
    }
    if let Some(u) = &ov.update_from {
        cfg.opt.update_from = parse_update_from(u)?;
    }
    if let Some(s) = ov.sigma_prime {
        cfg.opt.sigma_prime = s;
    }
    if let Some(s) = ov.sigma_cdr {
        cfg.opt.sigma_cdr = s;
    }
    Ok(cfg)
}

fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("EBEAM_MDP_THREADS") {
        Ok(v) => {
            let n: usize = v.trim().parse().map_err(|_| {
                Error::parse("EBEAM_MDP_THREADS", format!("not a thread count: {v:?}"))
            })?;
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(&cfg.paths.out_dir);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    Ok(dir)
}

fn load_target(cfg: &RunConfig, expected: usize, what: &str) -> Result<RasterField> {
    let path = cfg.paths.target_in.as_deref().ok_or_else(|| {
        Error::invalid(format!("{what} requires a target raster (--target or paths.target_in)"))
    })?;
    let raster = read_pfm(Path::new(path))?;
    if raster.width() != expected || raster.height() != expected {
        return Err(Error::DimensionMismatch {
            expected: format!("{expected}x{expected}"),
            actual: format!("{}x{}", raster.width(), raster.height()),
            context: "target raster vs configured grid",
        });
    }
    Ok(raster)
}

fn load_shot_set(cfg: &RunConfig) -> Result<Option<ShotSet>> {
    match cfg.paths.shots_in.as_deref() {
        Some(path) => Ok(Some(ShotSet::new(read_shots(Path::new(path))?, cfg.grid_size))),
        None => Ok(None),
    }
}

/// Rasterizes `shots` through the configured forward path and develops it.
fn expose(cfg: &RunConfig, shots: &ShotSet) -> (RasterField, RasterField) {
    let energy = match cfg.opt.forward {
        ForwardModel::Exact => total_energy(shots, &cfg.ebl),
        ForwardModel::Fast => {
            FastModel::new(cfg.grid_size, &cfg.ebl, cfg.opt.sigma_prime).energy(shots)
        }
    };
    let z = resist_develop(&energy, &cfg.ebl);
    (energy, z)
}

fn write_raster_pair(dir: &Path, stem: &str, field: &RasterField) -> Result<()> {
    write_pfm(&dir.join(format!("{stem}.pfm")), field)?;
    write_pgm(&dir.join(format!("{stem}.pgm")), field)
}

/// Prints to stdout, treating a closed pipe as a normal early exit rather
/// than a panic (e.g. when piped into `head`).
fn print_stdout(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        Err(e) => Err(Error::io("stdout".to_string(), e)),
    }
}

fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let shots = load_shot_set(cfg)?
        .ok_or_else(|| Error::invalid("simulate requires a shot list (--shots or paths.shots_in)"))?;
    let dir = ensure_out_dir(cfg)?;
    let (energy, z) = expose(cfg, &shots);
    write_raster_pair(&dir, "energy", &energy)?;
    write_raster_pair(&dir, "resist", &z)?;
    print_stdout(&format!(
        "simulated {n} shots on a {m}x{m} grid -> {d}/energy.pfm, {d}/resist.pfm\n",
        n = shots.len(),
        m = cfg.grid_size,
        d = dir.display()
    ))?;
    Ok(())
}

fn fracture_init(cfg: &RunConfig, mask_target: &RasterField) -> Result<ShotSet> {
    let mask = BinaryMask::from_field(mask_target, 0.5);
    fracture(&mask, &cfg.bounds, cfg.bounds.default_dose())
}

fn cmd_mdp(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let target = load_target(cfg, cfg.grid_size, "mdp")?;
    let init = match load_shot_set(cfg)? {
        Some(set) => set,
        None => fracture_init(cfg, &target)?,
    };
    let dir = ensure_out_dir(cfg)?;

    let mut opt_cfg = cfg.opt;
    opt_cfg.mode = OptMode::Mdp;
    let (best, trace) = mdp_optimize(&init, &target, &cfg.ebl, &cfg.bounds, &opt_cfg)?;

    write_shots(&dir.join("shots_init.csv"), &init)?;
    write_shots(&dir.join("shots_best.csv"), &best)?;
    write_trace(&dir.join("trace.csv"), &trace)?;
    let (_, z_init) = expose(cfg, &init);
    let (_, z_best) = expose(cfg, &best);
    write_raster_pair(&dir, "resist_init", &z_init)?;
    write_raster_pair(&dir, "resist_best", &z_best)?;
    print_stdout(&format!(
        "mdp: {} shots, best total {} at epoch {} -> {}\n",
        best.len(),
        trace.best_loss,
        trace.best_epoch,
        dir.display()
    ))?;
    Ok(())
}

fn cmd_ilt(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    if !cfg.grid_size.is_multiple_of(4) {
        return Err(Error::invalid("ilt requires a mask grid divisible by 4"));
    }
    let wafer = cfg.grid_size / 4;
    let target = load_target(cfg, wafer, "ilt")?;
    let init = match load_shot_set(cfg)? {
        Some(set) => set,
        None => {
            // Seed from the retargeted pattern magnified to mask scale.
            let retargeted = cdr_retarget(&target, cfg.opt.sigma_cdr);
            fracture_init(cfg, &magnify_4x(&retargeted))?
        }
    };
    let dir = ensure_out_dir(cfg)?;

    let mut opt_cfg = cfg.opt;
    opt_cfg.mode = OptMode::Ilt;
    let (best, trace) = ilt_optimize(&init, &target, &cfg.ebl, &cfg.optical, &cfg.bounds, &opt_cfg)?;

    write_shots(&dir.join("shots_init.csv"), &init)?;
    write_shots(&dir.join("shots_best.csv"), &best)?;
    write_trace(&dir.join("trace.csv"), &trace)?;
    let stages_init = ilt_forward(&init, &cfg.ebl, &cfg.optical, &opt_cfg)?;
    let stages_best = ilt_forward(&best, &cfg.ebl, &cfg.optical, &opt_cfg)?;
    write_raster_pair(&dir, "resist_init", &stages_init.z_e)?;
    write_raster_pair(&dir, "resist_best", &stages_best.z_e)?;
    write_raster_pair(&dir, "print_inner", &stages_best.corners.inner)?;
    write_raster_pair(&dir, "print_nominal", &stages_best.corners.nominal)?;
    write_raster_pair(&dir, "print_outer", &stages_best.corners.outer)?;
    print_stdout(&format!(
        "ilt: {} shots, best total {} at epoch {} -> {}\n",
        best.len(),
        trace.best_loss,
        trace.best_epoch,
        dir.display()
    ))?;
    Ok(())
}

fn cmd_fracture(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let target = load_target(cfg, cfg.grid_size, "fracture")?;
    let shots = fracture_init(cfg, &target)?;
    let dir = ensure_out_dir(cfg)?;
    write_shots(&dir.join("shots.csv"), &shots)?;
    print_stdout(&format!(
        "fractured into {} shots -> {}/shots.csv\n",
        shots.len(),
        dir.display()
    ))?;
    Ok(())
}

fn cmd_bench(
    cfg: &RunConfig,
    counts: &[usize],
    trials: usize,
    out: Option<&Path>,
) -> Result<()> {
    cfg.validate()?;
    eprintln!("bench: timing single-threaded (1 worker per path)");
    let rows = benchmark_methods(
        counts,
        cfg.grid_size,
        trials,
        &cfg.ebl,
        cfg.opt.sigma_prime,
        cfg.opt.seed,
    )?;
    let csv = bench_csv(&rows);
    print_stdout(&csv)?;
    if let Some(path) = out {
        std::fs::write(path, &csv).map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = resolve_threads(cli.threads)? {
        if n == 0 {
            return Err(Error::invalid("thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;
    }
    let config_path = cli.config.as_deref();
    match &cli.command {
        Command::Simulate(ov) => cmd_simulate(&resolve_config(config_path, ov)?),
        Command::Mdp(ov) => cmd_mdp(&resolve_config(config_path, ov)?),
        Command::Ilt(ov) => cmd_ilt(&resolve_config(config_path, ov)?),
        Command::Fracture(ov) => cmd_fracture(&resolve_config(config_path, ov)?),
        Command::Bench { overrides, counts, trials, out } => {
            cmd_bench(&resolve_config(config_path, overrides)?, counts, *trials, out.as_deref())
        }
        Command::ConfigDump(ov) => {
            let dump = resolve_config(config_path, ov)?.to_json_pretty();
            print_stdout(&format!("{dump}\n"))
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
