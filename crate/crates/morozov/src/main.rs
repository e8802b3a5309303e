use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MOROZOV_LOG", "warn")).init();
    let cli = morozov::cli::Cli::parse();
    std::process::exit(morozov::cli::run(cli));
}
