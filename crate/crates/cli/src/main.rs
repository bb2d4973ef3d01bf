use clap::Parser;

use mersel_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(err) = mersel_cli::args::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(2);
    }
}
