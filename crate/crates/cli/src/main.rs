use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let json = args.iter().any(|a| a == "--json");
    let exec = sockdiv_cli::run_subcommand(args);
    let _ = std::io::stdout().write_all(exec.stdout(json).as_bytes());
    if let Some(e) = &exec.error {
        eprintln!("sockdiv: {}", e.trim_end());
    }
    ExitCode::from(exec.code as u8)
}
