use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    if let Err(e) = steinlab::cli::configure_threads_from_env() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let code = steinlab::cli::dispatch(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code as u8)
}
