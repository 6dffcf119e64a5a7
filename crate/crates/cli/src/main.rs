use std::ffi::OsString;
use std::process::ExitCode;

use clap::{CommandFactory, Parser};

mod commands;
mod config;

use commands::Cli;

/// Names accepted as the first positional argument.
const COMMANDS: [&str; 8] = ["simulate", "oracle-check", "certify", "phases", "empirical", "transfer", "concentration", "plot"];

fn accepts(command: &str, key: &str) -> bool {
    let cmd = Cli::command();
    let global = cmd.get_arguments().any(|a| a.get_long() == Some(key));
    global
        || cmd
            .find_subcommand(command)
            .is_some_and(|s| s.get_arguments().any(|a| a.get_long() == Some(key)))
}

fn main() -> ExitCode {
    let args: Vec<OsString> = std::env::args_os().collect();
    let file = match config::config_path(&args).map(|p| config::load(&p)) {
        Some(Ok(c)) => c,
        Some(Err(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
        None => config::FileConfig::default(),
    };
    let merged = config::merge(args, &file, &COMMANDS, accepts);
    for k in &merged.ignored {
        eprintln!("note: config key `{k}` does not apply to this command; ignored");
    }
    let cli = match Cli::try_parse_from(&merged.argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out = config::resolve_out(cli.out.clone(), std::env::var_os("PHASELAB_OUT"), merged.out);
    match commands::run(&cli, &out) {
        Ok(commands::Status::Pass) => ExitCode::SUCCESS,
        Ok(commands::Status::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
        for c in COMMANDS {
            assert!(Cli::command().find_subcommand(c).is_some(), "{c}");
        }
    }

    #[test]
    fn key_filter() {
        assert!(accepts("simulate", "t-max"));
        assert!(accepts("simulate", "format"));
        assert!(!accepts("simulate", "raw-probe"));
        assert!(accepts("transfer", "raw-probe"));
    }
}
