use clap::Parser;

fn main() {
    let cli = wellposed::cli::Cli::parse();
    match wellposed::cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
