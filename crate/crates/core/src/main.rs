use std::io::{self, Write};
use std::process::ExitCode;

use ychannel::cli::{parse_args, run};

fn main() -> ExitCode {
    let cfg = match parse_args(std::env::args_os()) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = run(&cfg, &mut stdout.lock(), &mut stderr.lock());
    let _ = io::stdout().flush();
    ExitCode::from(code as u8)
}
