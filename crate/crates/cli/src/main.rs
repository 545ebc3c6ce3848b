use clap::Parser;

fn main() {
    let cli = matbp_cli::Cli::parse();
    let code = matbp_cli::run(cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
