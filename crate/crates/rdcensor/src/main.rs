use clap::Parser;

fn main() {
    let cli = rdcensor::cli::Cli::parse();
    if let Err(e) = rdcensor::cli::run(&cli) {
        eprintln!("rdcensor: {e}");
        std::process::exit(e.exit_code());
    }
}
