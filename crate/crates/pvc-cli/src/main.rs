use clap::Parser;

fn main() {
    let cli = pvc_cli::Cli::parse();
    if let Err(err) = pvc_cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.code);
    }
}
