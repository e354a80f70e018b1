use clap::Parser;

fn main() {
    let cli = gpkf::cli::Cli::parse();
    std::process::exit(gpkf::cli::run(cli));
}
