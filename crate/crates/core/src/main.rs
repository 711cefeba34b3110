use clap::Parser;
use fragcheck::cli::{execute, render, Cli, EXIT_ERROR};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            std::process::exit(0);
        }
        Err(e) => {
            let report = serde_json::json!({ "command": null, "verdict": "error", "error": { "message": e.to_string() } });
            println!("{report}");
            std::process::exit(EXIT_ERROR);
        }
    };
    let out = execute(&cli);
    match &out.text {
        Some(text) if out.code != EXIT_ERROR => print!("{text}"),
        _ => println!("{}", render(&out.report, cli.pretty)),
    }
    std::process::exit(out.code);
}
