use clap::Parser;

fn main() {
    let cli = usermap_server::cli::Cli::parse();
    if let Err(e) = usermap_server::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
