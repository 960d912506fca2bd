use clap::Parser;

fn main() {
    let code = kahlerlab::cli::run(kahlerlab::cli::Cli::parse());
    std::process::exit(code);
}
