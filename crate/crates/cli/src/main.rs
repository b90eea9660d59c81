use std::process::ExitCode;

fn main() -> ExitCode {
    let threads = std::env::var(qarray_cli::THREADS_ENV).ok();
    qarray_cli::main_with(std::env::args_os(), threads.as_deref())
}
