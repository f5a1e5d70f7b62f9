use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qcex::compare::compare_spectra;
use qcex::io::read_spectrum_csv;
use qcex_cli::{execute, load, threads_from_env, Command};

#[derive(Parser)]
#[command(name = "qcex", version, about = "Tangent-space excitation spectra of variational circuits")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Run the pipeline described by a config file.
    Run { config: PathBuf },
    /// Write only the reference spectrum of a config.
    Oracle { config: PathBuf },
    /// Match the levels of spectrum CSV `b` against reference `a`.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        /// Write the per-level matches here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check a config without computing anything.
    Validate { config: PathBuf },
}

const VALIDATION: u8 = 2;
const COMPUTE: u8 = 1;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(VALIDATION);
        }
    };
    match cli.verb {
        Verb::Validate { config } => match load(&config) {
            Ok(_) => {
                println!("{}: ok", config.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(VALIDATION)
            }
        },
        Verb::Run { config } => pipeline(&config, Command::Run, threads),
        Verb::Oracle { config } => pipeline(&config, Command::Oracle, threads),
        Verb::Compare { a, b, tolerance, output } => {
            let read = |p: &PathBuf| -> Result<_, String> {
                let f = std::fs::File::open(p).map_err(|e| format!("{}: {e}", p.display()))?;
                read_spectrum_csv(f).map_err(|e| format!("{}: {e}", p.display()))
            };
            let (ra, rb) = match (read(&a), read(&b)) {
                (Ok(x), Ok(y)) => (x, y),
                (Err(e), _) | (_, Err(e)) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(VALIDATION);
                }
            };
            let report = match compare_spectra(&ra, &rb, tolerance) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(VALIDATION);
                }
            };
            if let Some(path) = output {
                let res = std::fs::File::create(&path).map_err(qcex::Error::from).and_then(|f| report.write_csv(f));
                if let Err(e) = res {
                    eprintln!("error: {e}");
                    return ExitCode::from(COMPUTE);
                }
            }
            println!(
                "matched {} unmatched_reference {} unmatched_candidate {} partial_multiplets {} max_error {:e} mean_first_excitation_error {}",
                report.matched,
                report.unmatched_reference,
                report.unmatched_candidate,
                report.partial_multiplets,
                report.max_error,
                report.mean_first_excitation_error.map_or("-".to_string(), |e| format!("{e:e}"))
            );
            ExitCode::SUCCESS
        }
    }
}

fn pipeline(config: &PathBuf, command: Command, threads: Option<usize>) -> ExitCode {
    let (prep, bytes) = match load(config) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(VALIDATION);
        }
    };
    match execute(&prep, &bytes, command, threads) {
        Ok(m) => {
            println!("wrote {} files to {}", m.files.len() + 1, prep.output_dir().display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(COMPUTE)
        }
    }
}
