use std::process::ExitCode;

use nagstab_cli::{exit_code, parse_config, resolve, run, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};

fn main() -> ExitCode {
    let cmd = match parse_config(std::env::args_os()) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let cmd = match resolve(cmd) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    match run(&cmd) {
        Ok(record) => {
            print!("{}", record.render());
            ExitCode::from(if record.passed() { EXIT_PASS } else { EXIT_FAIL } as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
