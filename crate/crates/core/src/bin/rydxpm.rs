use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use rydxpm::exec::Exec;
use rydxpm::harness::{
    parse_layers, presets, run_scenario, run_sweep, thread_cap_from_env, write_outputs, ManifestInfo, ScenarioKind,
    PRESETS,
};

const EXIT_PARSE: u8 = 2;

#[derive(Parser)]
#[command(name = "rydxpm", version, about = "Rydberg EIT cross-phase modulation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario (custom-sweep runs its sweep).
    Run(RunArgs),
    /// Run the [sweep] section of a config, one output file per value.
    Sweep(RunArgs),
    /// Built-in configurations.
    Presets {
        #[command(subcommand)]
        action: PresetsAction,
    },
}

#[derive(Subcommand)]
enum PresetsAction {
    /// Print preset names and descriptions.
    List,
}

#[derive(Args)]
struct RunArgs {
    /// Config file; overrides keys of --preset when both are given.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in configuration (see `presets list`).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Propagation step as a fraction of σ, in (0, 1].
    #[arg(long, value_name = "X", value_parser = parse_step_frac)]
    step_frac: Option<f64>,
    /// Record that the run uses no random seed (every scenario is deterministic).
    #[arg(long)]
    seedless: bool,
    /// Run on the current thread only.
    #[arg(long)]
    sequential: bool,
}

fn parse_step_frac(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if x > 0.0 && x <= 1.0 {
        Ok(x)
    } else {
        Err(format!("{x} is outside (0, 1]"))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Presets {
            action: PresetsAction::List,
        } => {
            let width = PRESETS.iter().map(|p| p.name.len()).max().unwrap_or(0);
            for p in PRESETS {
                println!("{:width$}  {}", p.name, p.description);
            }
            ExitCode::SUCCESS
        }
        Command::Run(args) => execute("run", args),
        Command::Sweep(args) => execute("sweep", args),
    }
}

fn execute(command: &str, args: RunArgs) -> ExitCode {
    let mut layers = Vec::new();
    if let Some(name) = &args.preset {
        match presets::find(name) {
            Some(p) => layers.push(p.config.to_string()),
            None => {
                eprintln!("error: unknown preset `{name}` (try `rydxpm presets list`)");
                return ExitCode::from(EXIT_PARSE);
            }
        }
    }
    if let Some(path) = &args.config {
        match std::fs::read_to_string(path) {
            Ok(t) => layers.push(t),
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(EXIT_PARSE);
            }
        }
    }
    if layers.is_empty() {
        eprintln!("error: give --config PATH or --preset NAME");
        return ExitCode::from(EXIT_PARSE);
    }
    let texts: Vec<&str> = layers.iter().map(String::as_str).collect();
    let mut cfg = match parse_layers(&texts) {
        Ok(c) => c,
        Err(e) => {
            let src = args
                .config
                .as_ref()
                .map_or("preset".to_string(), |p| p.display().to_string());
            eprintln!("error: {src}: {e}");
            return ExitCode::from(EXIT_PARSE);
        }
    };
    if let Some(x) = args.step_frac {
        cfg.propagation.step_frac = x;
    }
    if command == "sweep" && cfg.sweep.is_none() {
        eprintln!("error: `sweep` needs a [sweep] section with `axis` and `values`");
        return ExitCode::from(EXIT_PARSE);
    }

    let exec = if args.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    };
    let threads = thread_cap_from_env();
    let start = Instant::now();
    let output = if command == "sweep" || cfg.scenario == ScenarioKind::CustomSweep {
        run_sweep(&cfg, exec, threads)
    } else {
        rydxpm::exec::with_thread_cap(threads, || run_scenario(&cfg, exec))
    };
    let wall = start.elapsed().as_secs_f64();

    let mut flags = Vec::new();
    if let Some(x) = args.step_frac {
        flags.push(format!("--step-frac {x:e}"));
    }
    if args.seedless {
        flags.push("--seedless".into());
    }
    if args.sequential {
        flags.push("--sequential".into());
    }
    if let Some(n) = threads {
        flags.push(format!("RYDXPM_THREADS={n}"));
    }
    let info = ManifestInfo {
        command,
        scenario: cfg.scenario.name(),
        preset: args.preset.as_deref(),
        flags,
        config_echo: cfg.echo(),
        wall_time_s: wall,
    };
    match write_outputs(&args.out, &output, info) {
        Ok(paths) => eprintln!("wrote {} files to {}", paths.len(), args.out.display()),
        Err(e) => {
            eprintln!("error: writing {}: {e}", args.out.display());
            return ExitCode::FAILURE;
        }
    }
    for m in &output.messages {
        eprintln!("{m}");
    }
    ExitCode::from(output.status.exit_code() as u8)
}
