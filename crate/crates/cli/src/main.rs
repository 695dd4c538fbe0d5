use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let env_seed = std::env::var(rti_sim::commands::SEED_ENV).ok();
    let code = rti_sim::main_with(std::env::args_os(), env_seed.as_deref(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code as u8)
}
