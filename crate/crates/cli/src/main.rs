use clap::Parser;
use gclab::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(dir) => println!("{}", dir.display()),
        Err(e) => {
            eprintln!("{}", e.to_json());
            std::process::exit(e.exit_code);
        }
    }
}
