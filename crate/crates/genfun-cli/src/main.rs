use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let argv: Vec<std::ffi::OsString> = std::env::args_os().collect();
    let out = genfun_cli::run_command(argv.clone());
    // A closed pipe (e.g. `| head`) is not an error.
    let _ = writeln!(std::io::stdout(), "{}", out.stdout);
    let mut code = out.code;
    if let (Some(path), Some(csv)) = (genfun_cli::csv_target(argv), &out.csv) {
        if let Err(e) = std::fs::write(&path, csv) {
            eprintln!("could not write {}: {e}", path.display());
            code = 1;
        }
    }
    ExitCode::from(code as u8)
}
