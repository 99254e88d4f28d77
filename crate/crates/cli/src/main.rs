use clap::Parser;
use ep_aloha_cli::cli::{execute, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    if let Err(e) = execute(&cli, &mut stdout.lock()) {
        eprintln!("{}", e.to_json_line());
        std::process::exit(e.exit_code());
    }
}
