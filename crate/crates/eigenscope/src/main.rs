use std::process::ExitCode;

use eigenscope::cli;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match cli::main_entry(&args) {
        Ok(paths) => {
            for path in paths {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = cli::exit_code_for(&e);
            if code == 1 {
                eprintln!("\n{}", cli::USAGE);
            }
            ExitCode::from(code)
        }
    }
}
