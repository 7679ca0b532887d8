use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = match dfrt_lab::Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // help and version are not errors
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match dfrt_lab::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dfrt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
