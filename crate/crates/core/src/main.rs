use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("WRDSCORE_LOG", "warn")).init();
    ExitCode::from(wrdscore::cli::run(std::env::args_os()))
}
