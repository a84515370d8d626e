mod args;
mod run;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("DESTAB_LOG")).init();
    let cli = match args::Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help and version are not errors; bad arguments are malformed input.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = run::dispatch(&cli).and_then(|out| {
        run::emit(&cli.out, &out.text)?;
        Ok(out.converged)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("destab: solver did not converge");
            ExitCode::from(2)
        }
        Err(f) => {
            eprintln!("destab: {}", f.message());
            ExitCode::from(f.code() as u8)
        }
    }
}
