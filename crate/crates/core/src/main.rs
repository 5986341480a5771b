use clap::Parser;

fn main() {
    let cli = rtnwalk::cli::Cli::parse();
    if let Err(e) = rtnwalk::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(i32::from(e.exit_code()));
    }
}
