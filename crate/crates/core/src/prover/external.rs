//! Running a TPTP prover as a subprocess.

use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use crate::tableau::SatVerdict;

/// The word after the first `SZS status` in prover output.
pub fn szs_status(output: &str) -> Option<&str> {
    output.lines().find_map(|l| {
        let rest = &l[l.find("SZS status")? + "SZS status".len()..];
        rest.split_whitespace().next()
    })
}

/// Maps an SZS status to a verdict on the obligation's axioms.
pub fn verdict_of(status: Option<&str>) -> SatVerdict {
    match status {
        Some("Theorem" | "Unsatisfiable" | "ContradictoryAxioms") => SatVerdict::Unsat,
        Some("CounterSatisfiable" | "Satisfiable") => SatVerdict::Sat { witness: None },
        Some(other) => SatVerdict::Unknown { reason: format!("prover answered {other}") },
        None => SatVerdict::Unknown { reason: "no SZS status in prover output".into() },
    }
}

/// Splits a command template into words and substitutes `{file}`; the file
/// is appended when the template has no placeholder.
pub fn command_line(template: &str, file: &Path) -> Vec<String> {
    let file = file.display().to_string();
    let mut words: Vec<String> = template.split_whitespace().map(|w| w.replace("{file}", &file)).collect();
    if !template.contains("{file}") {
        words.push(file);
    }
    words
}

/// Runs the prover on `file`, killing it after `timeout`.
pub fn run(template: &str, file: &Path, timeout: Duration) -> SatVerdict {
    let words = command_line(template, file);
    let Some((prog, args)) = words.split_first() else {
        return SatVerdict::Unknown { reason: "empty prover command".into() };
    };
    let mut child = match Command::new(prog).args(args).stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::null()).spawn() {
        Ok(c) => c,
        Err(e) => return SatVerdict::Unknown { reason: format!("cannot start {prog}: {e}") },
    };
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let start = Instant::now();
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                let _ = reader.join();
                return SatVerdict::Unknown { reason: "timeout".into() };
            }
            Ok(None) => thread::sleep(Duration::from_millis(5)),
            Err(e) => return SatVerdict::Unknown { reason: format!("prover failed: {e}") },
        }
    }
    let out = reader.join().unwrap_or_default();
    verdict_of(szs_status(&out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_first_status_line() {
        let out = "% Refutation found.\n% SZS status Theorem for p\n% SZS status Unknown for p\n";
        assert_eq!(szs_status(out), Some("Theorem"));
        assert_eq!(verdict_of(szs_status(out)), SatVerdict::Unsat);
        assert_eq!(verdict_of(Some("CounterSatisfiable")), SatVerdict::Sat { witness: None });
        assert!(matches!(verdict_of(Some("GaveUp")), SatVerdict::Unknown { .. }));
        assert!(matches!(verdict_of(szs_status("garbage")), SatVerdict::Unknown { .. }));
    }

    #[test]
    fn placeholder_is_substituted() {
        let p = Path::new("/tmp/a.p");
        assert_eq!(command_line("prover -t 5 {file}", p), ["prover", "-t", "5", "/tmp/a.p"]);
        assert_eq!(command_line("prover", p), ["prover", "/tmp/a.p"]);
    }

    #[test]
    fn missing_program_is_unknown() {
        let v = run("/nonexistent/prover", Path::new("x.p"), Duration::from_secs(1));
        assert!(matches!(v, SatVerdict::Unknown { .. }));
    }

    #[test]
    fn slow_program_times_out() {
        let v = run("sleep {file}", Path::new("5"), Duration::from_millis(100));
        assert_eq!(v, SatVerdict::Unknown { reason: "timeout".into() });
    }
}
