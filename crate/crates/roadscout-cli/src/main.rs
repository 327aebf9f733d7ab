use std::process::ExitCode;

fn main() -> ExitCode {
    match roadscout_cli::execute(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string();
            if !message.is_empty() {
                eprintln!("{message}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
