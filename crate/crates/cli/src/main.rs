use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use meshcloak::distance::DEFAULT_DC_MAX;
use meshcloak::map_model::DEFAULT_MAX_SNAP;
use meshcloak::metrics::{config_label, CSV_HEADER};
use meshcloak::simulator::{load_stream, records_to_queries, stream_metadata, stream_to_csv, StreamRecord};
use meshcloak::*;

/// Exit status and message of a failed command.
#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn config(msg: impl Into<String>) -> Self {
        Failure { code: 1, msg: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_config() { 1 } else { 2 },
            msg: e.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn write(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| Failure {
        code: 2,
        msg: format!("cannot write {}: {e}", path.display()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct KRange(u32, u32);

impl FromStr for KRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s.split_once(':').ok_or("expected lo:hi")?;
        let lo: u32 = lo.parse().map_err(|_| format!("bad lower bound `{lo}`"))?;
        let hi: u32 = hi.parse().map_err(|_| format!("bad upper bound `{hi}`"))?;
        if lo < 2 || hi < lo {
            return Err(format!("need 2 <= lo <= hi, got {lo}:{hi}"));
        }
        Ok(KRange(lo, hi))
    }
}

#[derive(Parser)]
#[command(name = "meshcloak", version, about = "Map-based personalized k-anonymity cloaking experiments")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic street map.
    SynthMap(SynthMapArgs),
    /// Build the bounded distance matrix cache for a map.
    Precompute(MatrixArgs),
    /// Generate a query stream.
    Simulate(SimulateArgs),
    /// Run the cloaking engine on a stream and write logs and metrics.
    Run(RunArgs),
    /// Collect metrics files into one CSV table.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthMapArgs {
    /// Node and street counts of the Oldenburg road map.
    #[arg(long, conflicts_with_all = ["terminals", "streets"])]
    oldenburg: bool,
    #[arg(long, default_value_t = 1000)]
    terminals: usize,
    #[arg(long, default_value_t = 1200)]
    streets: usize,
    /// Grid spacing in meters.
    #[arg(long, default_value_t = 170.0)]
    spacing: f64,
    #[arg(long, default_value_t = 0.05)]
    oneway_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MatrixArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DC_MAX)]
    dc_max: f64,
    /// Matrix cache file (default: next to the map, named after dc_max).
    #[arg(long)]
    cache: Option<PathBuf>,
}

impl MatrixArgs {
    fn cache_path(&self) -> PathBuf {
        self.cache.clone().unwrap_or_else(|| {
            let mut name = self.map.clone().into_os_string();
            name.push(format!(".dc{}.matrix", self.dc_max));
            PathBuf::from(name)
        })
    }
}

#[derive(Args)]
struct SimArgs {
    /// P1, P2 or a TOML profile file.
    #[arg(long, default_value = "P1")]
    profile: String,
    #[arg(long, default_value_t = 1000)]
    users: usize,
    #[arg(long, default_value_t = 11)]
    queries_per_user: usize,
    #[arg(long, default_value = "2:5")]
    k_range: KRange,
    #[arg(long, default_value_t = 3.0)]
    dt: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SimArgs {
    /// Loads the profile and checks it against `dt` and `dc_max`.
    fn profile(&self, dc_max: f64) -> CliResult<SpeedProfile> {
        let profile = SpeedProfile::resolve(&self.profile)?;
        if self.dt > profile.min_interval() as f64 {
            return Err(Failure::config(format!(
                "dt {} exceeds the smallest query interval {} of profile {}",
                self.dt,
                profile.min_interval(),
                profile.name
            )));
        }
        if dc_max < profile.max_dc() {
            return Err(Failure::config(format!(
                "dc_max {dc_max} is below the largest dc {} of profile {}",
                profile.max_dc(),
                profile.name
            )));
        }
        Ok(profile)
    }

    fn records(&self, map: &StreetMap, profile: &SpeedProfile) -> CliResult<Vec<StreamRecord>> {
        let k = (self.k_range.0, self.k_range.1);
        let users = generate_users(map, profile, self.users, k, self.dt, self.seed)?;
        let queries = simulate(map, &users, self.queries_per_user, self.seed)?;
        Ok(queries.iter().map(SimQuery::record).collect())
    }

    fn metadata(&self, profile: &SpeedProfile) -> String {
        let k = (self.k_range.0, self.k_range.1);
        stream_metadata(profile, self.users, self.queries_per_user, k, self.dt, self.seed)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DC_MAX)]
    dc_max: f64,
    #[command(flatten)]
    sim: SimArgs,
    /// Stream CSV to write; metadata goes to `<out>.meta`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    /// Existing stream CSV. Without it a stream is generated from the
    /// simulation flags.
    #[arg(long)]
    stream: Option<PathBuf>,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long, default_value = "batch")]
    mode: EngineMode,
    #[arg(long, default_value = "literal")]
    edge_rule: EdgeRule,
    #[arg(long, default_value = "literal")]
    mesh_mode: MeshMode,
    #[arg(long, default_value = "per-query")]
    success_mode: SuccessMode,
    /// Largest distance, in meters, between a stream location and its street.
    #[arg(long, default_value_t = DEFAULT_MAX_SNAP)]
    max_snap: f64,
    /// Row label used by `report` (default: from the configuration).
    #[arg(long)]
    label: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directories or metrics files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// CSV file to write (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn synth_map(args: &SynthMapArgs) -> CliResult {
    let cfg = if args.oldenburg {
        SynthConfig {
            spacing: args.spacing,
            oneway_fraction: args.oneway_fraction,
            ..SynthConfig::oldenburg(args.seed)
        }
    } else {
        SynthConfig {
            terminals: args.terminals,
            streets: args.streets,
            spacing: args.spacing,
            oneway_fraction: args.oneway_fraction,
            ..SynthConfig::oldenburg(args.seed)
        }
    };
    let map = synthetic_map(&cfg)?;
    map.save(&args.out)?;
    println!(
        "terminals={} streets={} total_km={:.1}",
        map.terminals().len(),
        map.streets().len(),
        map.total_length() / 1000.0
    );
    Ok(())
}

/// Loads the cached matrix when it was built for the same `dc_max`,
/// otherwise builds and stores it.
fn load_or_build(map: &StreetMap, args: &MatrixArgs) -> CliResult<BoundedDistanceMatrix> {
    if !(args.dc_max >= 0.0 && args.dc_max.is_finite()) {
        return Err(Failure::config(format!("invalid dc_max {}", args.dc_max)));
    }
    let path = args.cache_path();
    let started = Instant::now();
    if path.exists() {
        match BoundedDistanceMatrix::load(&path, map, args.dc_max) {
            Ok(m) => {
                println!("cache reused: {} (dc_max {})", path.display(), args.dc_max);
                println!("entries={}", m.len());
                return Ok(m);
            }
            Err(Error::Config(msg)) => println!("rebuilding cache: {msg}"),
            Err(e) => return Err(e.into()),
        }
    }
    let m = map_distance_matrix(map, args.dc_max)?;
    m.save(map, &path)?;
    println!("cache written: {}", path.display());
    println!("entries={}", m.len());
    println!("elapsed_ms={:.1}", started.elapsed().as_secs_f64() * 1e3);
    Ok(m)
}

fn precompute(args: &MatrixArgs) -> CliResult {
    let map = load_map(&args.map)?;
    load_or_build(&map, args)?;
    Ok(())
}

fn simulate_cmd(args: &SimulateArgs) -> CliResult {
    let profile = args.sim.profile(args.dc_max)?;
    let map = load_map(&args.map)?;
    let records = args.sim.records(&map, &profile)?;
    write(&args.out, &stream_to_csv(&records))?;
    let mut meta = args.out.clone().into_os_string();
    meta.push(".meta");
    write(Path::new(&meta), &args.sim.metadata(&profile))?;
    println!("queries={}", records.len());
    Ok(())
}

fn run(args: &RunArgs) -> CliResult {
    let map = load_map(&args.matrix.map)?;
    let (records, label) = match &args.stream {
        Some(path) => {
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            (load_stream(path)?, label)
        }
        None => {
            let profile = args.sim.profile(args.matrix.dc_max)?;
            let label = config_label(&profile.name, args.sim.dt, args.sim.k_range.1);
            (args.sim.records(&map, &profile)?, label)
        }
    };
    let label = args.label.clone().unwrap_or(label);
    let matrix = load_or_build(&map, &args.matrix)?;
    let queries = records_to_queries(&map, &records, args.max_snap)?;

    let config = EngineConfig {
        edge_rule: args.edge_rule,
        mesh_mode: args.mesh_mode,
        success_mode: args.success_mode,
    };
    let log = match args.mode {
        EngineMode::Batch => run_batch(&map, &matrix, config, &queries)?,
        EngineMode::Sequential => run_sequential(&map, &matrix, config, &queries)?,
    };
    let report = compute_metrics(&log);

    fs::create_dir_all(&args.out).map_err(|e| Failure {
        code: 2,
        msg: format!("cannot create {}: {e}", args.out.display()),
    })?;
    if args.stream.is_none() {
        write(&args.out.join("stream.csv"), &stream_to_csv(&records))?;
    }
    write(&args.out.join("ticks.csv"), &log.ticks_csv())?;
    write(&args.out.join("results.csv"), &log.results_csv())?;
    write(&args.out.join("meshes.jsonl"), &log.mesh_dump(&map))?;
    let text = format!("label={label}\nrejected={}\n{}", log.rejected.len(), report.to_text());
    write(&args.out.join("metrics.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn report(args: &ReportArgs) -> CliResult {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for input in &args.inputs {
        let path = if input.is_dir() {
            input.join("metrics.txt")
        } else {
            input.clone()
        };
        let text = fs::read_to_string(&path).map_err(|e| Failure {
            code: 2,
            msg: format!("cannot read {}: {e}", path.display()),
        })?;
        let metrics = MetricsReport::parse_text(&text)
            .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        let label = text
            .lines()
            .find_map(|l| l.strip_prefix("label="))
            .map(str::to_owned)
            .unwrap_or_else(|| input.display().to_string());
        out.push_str(&metrics.csv_row(&label));
        out.push('\n');
    }
    match &args.out {
        Some(path) => write(path, &out),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::SynthMap(a) => synth_map(a),
        Command::Precompute(a) => precompute(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
