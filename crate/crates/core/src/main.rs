use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use attentive::emotion::ProfileStore;
use attentive::session::{
    read_event_log, register_from_manifest, replay, score, synthesize_session, GroundTruth, Mode, ScenarioSpec,
    SessionConfig, FRAMES_FILE, TRUTH_FILE,
};
use attentive::Error;

#[derive(Parser)]
#[command(name = "attentive", version, about = "Replay, synthesise and score learner-state sessions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a frame stream through the pipeline and write the event log.
    Replay {
        frames: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Profile directory, needed for face or eye crops.
        #[arg(long)]
        profiles: Option<PathBuf>,
        /// Event log destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-window report destination.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        mode: Option<Mode>,
        /// Window length, seconds.
        #[arg(long)]
        window: Option<f64>,
        #[arg(long)]
        overlap: Option<f64>,
        #[arg(long)]
        perclos_threshold: Option<f64>,
    },
    /// Generate a synthetic frame stream with ground truth.
    Synth {
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compare an event log with ground truth.
    Score {
        events: PathBuf,
        truth: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a user's profile from a labelled crop manifest.
    Register {
        user: String,
        manifest: PathBuf,
        #[arg(long, default_value = "profiles")]
        profiles: PathBuf,
        /// Number of principal components to keep.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> attentive::Result<SessionConfig> {
    match path {
        Some(p) => SessionConfig::from_file(p),
        None => Ok(SessionConfig::default()),
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> attentive::Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> attentive::Result<()> {
    match cli.command {
        Command::Replay {
            frames,
            config,
            profiles,
            out,
            report,
            mode,
            window,
            overlap,
            perclos_threshold,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            cfg.mode = mode.or(cfg.mode);
            cfg.window_s = window.unwrap_or(cfg.window_s);
            cfg.overlap = overlap.unwrap_or(cfg.overlap);
            cfg.perclos_threshold = perclos_threshold.unwrap_or(cfg.perclos_threshold);
            cfg.validate()?;
            let store = profiles.map(ProfileStore::open).transpose()?;
            let output = replay(&frames, &cfg, store.as_ref())?;
            write_or_print(out.as_deref(), &output.event_log())?;
            if let Some(r) = report {
                fs::write(&r, output.report_json()).map_err(|e| Error::io(&r, e))?;
            }
            Ok(())
        }
        Command::Synth { spec, seed, out, config } => {
            let cfg = load_config(config.as_deref())?;
            let spec = ScenarioSpec::from_file(&spec)?;
            let output = synthesize_session(&spec, &cfg, seed.unwrap_or(cfg.rng_seed))?;
            output.write_to(&out)?;
            eprintln!(
                "wrote {} and {} to {}",
                FRAMES_FILE,
                TRUTH_FILE,
                out.display()
            );
            Ok(())
        }
        Command::Score { events, truth, out } => {
            let text = fs::read_to_string(&events).map_err(|e| Error::io(&events, e))?;
            let records = read_event_log(&text)?;
            let truth = GroundTruth::from_file(&truth)?;
            let report = score(&records, &truth)?;
            let mut json = serde_json::to_string_pretty(&report)?;
            json.push('\n');
            write_or_print(out.as_deref(), &json)
        }
        Command::Register {
            user,
            manifest,
            profiles,
            k,
            config,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            cfg.pca_components = k.unwrap_or(cfg.pca_components);
            if cfg.pca_components == 0 {
                return Err(Error::InvalidParameter("--k must be at least 1".into()));
            }
            let store = ProfileStore::open(&profiles)?;
            let reg = register_from_manifest(&user, &manifest, &store, &cfg)?;
            if let Some(p) = &reg.profile {
                eprintln!("stored emotion profile for {user} ({} components)", p.pca.k());
            }
            if reg.eye_model.is_some() {
                eprintln!("stored eye-state model for {user}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidParameter(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
