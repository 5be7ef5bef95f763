use clap::Parser;
use iccap_cli::{run, Cli, SEED_ENV};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let mut out = std::io::stdout().lock();
    if let Err(e) = run(&cli, env_seed.as_deref(), &mut out) {
        eprintln!("iccap: {e}");
        std::process::exit(e.exit_code());
    }
}
