use clap::Parser;

fn main() {
    let cli = resave::cli::Cli::parse();
    std::process::exit(resave::cli::run(cli));
}
