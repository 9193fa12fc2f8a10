use clap::Parser;

fn main() {
    let cli = fatdisc::cli::Cli::parse();
    std::process::exit(fatdisc::cli::run(cli));
}
