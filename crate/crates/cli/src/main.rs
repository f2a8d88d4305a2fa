use clap::Parser;

fn main() {
    let cli = histq::Cli::parse();
    let overrides = std::env::var(histq::TOLERANCE_ENV).ok();
    std::process::exit(histq::run(&cli, overrides.as_deref()));
}
