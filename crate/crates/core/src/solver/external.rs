use std::fs::File;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use crate::milp::MilpModel;

use super::lp_format::{read_solution_file, write_lp_file};
use super::SolveResult;

/// Environment variable holding the solver command template.
pub const SOLVER_CMD_ENV: &str = "H2GRID_SOLVER_CMD";

const BACKEND: &str = "external";

/// Extra time granted past the limit before the process is killed: a tenth
/// of the limit, between one and thirty seconds.
fn kill_grace(limit: Duration) -> Duration {
    (limit / 10).clamp(Duration::from_secs(1), Duration::from_secs(30))
}

/// How to run the external solver.
///
/// `command` is run through `sh -c` after substituting `{lp}` (model file),
/// `{sol}` (solution file to write), `{time_limit}` (seconds) and `{gap}`
/// (relative MIP gap). The limit and gap are also exported as
/// `H2GRID_TIME_LIMIT` and `H2GRID_MIP_GAP`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalSolverConfig {
    pub command: String,
    pub time_limit: Duration,
    pub mip_gap: f64,
}

impl ExternalSolverConfig {
    pub fn new(command: impl Into<String>) -> Self {
        ExternalSolverConfig {
            command: command.into(),
            time_limit: Duration::from_secs(600),
            mip_gap: 1e-6,
        }
    }

    /// Command from [`SOLVER_CMD_ENV`], if set and non-empty.
    pub fn from_env() -> Option<Self> {
        std::env::var(SOLVER_CMD_ENV)
            .ok()
            .filter(|c| !c.trim().is_empty())
            .map(Self::new)
    }

    fn render(&self, lp: &Path, sol: &Path) -> String {
        self.command
            .replace("{lp}", &shell_quote(lp))
            .replace("{sol}", &shell_quote(sol))
            .replace("{time_limit}", &self.time_limit.as_secs_f64().to_string())
            .replace("{gap}", &self.mip_gap.to_string())
    }
}

fn shell_quote(p: &Path) -> String {
    format!("'{}'", p.display().to_string().replace('\'', r"'\''"))
}

/// Solve `model` with an external solver process.
///
/// Failures (spawn errors, non-zero exit, timeout, unreadable output) come
/// back as status `error` with the captured stderr in the message.
pub fn invoke_external_solver(model: &MilpModel, config: &ExternalSolverConfig) -> SolveResult {
    let start = Instant::now();
    let elapsed = || start.elapsed().as_secs_f64();
    let dir = match tempfile::Builder::new().prefix("h2grid-solve").tempdir() {
        Ok(d) => d,
        Err(e) => return SolveResult::error(BACKEND, elapsed(), format!("temp dir: {e}")),
    };
    let lp = dir.path().join("model.lp");
    let sol = dir.path().join("model.sol");
    if let Err(e) = write_lp_file(model, &lp) {
        return SolveResult::error(BACKEND, elapsed(), e.to_string());
    }
    let stdout_path = dir.path().join("stdout.txt");
    let stderr_path = dir.path().join("stderr.txt");
    let (out, err) = match (File::create(&stdout_path), File::create(&stderr_path)) {
        (Ok(o), Ok(e)) => (o, e),
        (Err(e), _) | (_, Err(e)) => return SolveResult::error(BACKEND, elapsed(), format!("log files: {e}")),
    };

    let mut cmd = Command::new("sh");
    cmd.arg("-c")
        .arg(config.render(&lp, &sol))
        .env("H2GRID_TIME_LIMIT", config.time_limit.as_secs_f64().to_string())
        .env("H2GRID_MIP_GAP", config.mip_gap.to_string())
        .stdin(Stdio::null())
        .stdout(out)
        .stderr(err);
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    let mut child = match cmd.spawn() {
        Ok(c) => c,
        Err(e) => return SolveResult::error(BACKEND, elapsed(), format!("cannot start solver: {e}")),
    };

    let deadline = config.time_limit + kill_grace(config.time_limit);
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) if start.elapsed() > deadline => {
                kill_group(&mut child);
                let stderr = std::fs::read_to_string(&stderr_path).unwrap_or_default();
                return SolveResult::error(
                    BACKEND,
                    elapsed(),
                    format!("solver exceeded time limit of {:?}\n{stderr}", config.time_limit),
                );
            }
            Ok(None) => thread::sleep(Duration::from_millis(20)),
            Err(e) => return SolveResult::error(BACKEND, elapsed(), format!("waiting for solver: {e}")),
        }
    };
    let stderr = std::fs::read_to_string(&stderr_path).unwrap_or_default();
    if !status.success() {
        return SolveResult::error(BACKEND, elapsed(), format!("solver exited with {status}\n{stderr}"));
    }
    match read_solution_file(&sol, model.num_vars()) {
        Ok(parsed) if parsed.status.has_solution() => SolveResult {
            status: parsed.status,
            objective: parsed.objective,
            values: parsed.values,
            wall_time: elapsed(),
            backend: BACKEND.into(),
            message: stderr,
        },
        Ok(parsed) => SolveResult::without_solution(parsed.status, BACKEND, elapsed(), stderr),
        Err(e) => SolveResult::error(BACKEND, elapsed(), format!("{e}\n{stderr}")),
    }
}

fn kill_group(child: &mut std::process::Child) {
    #[cfg(unix)]
    {
        let _ = Command::new("kill")
            .arg("-KILL")
            .arg("--")
            .arg(format!("-{}", child.id()))
            .stderr(Stdio::null())
            .status();
    }
    let _ = child.kill();
    let _ = child.wait();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{Sense, Tag, VarKey};
    use crate::solver::SolveStatus;

    fn one_var() -> MilpModel {
        let mut m = MilpModel::new();
        let x = m.add_var(VarKey::Named("x".into()), 0.0, 1.0, false);
        m.set_objective(x, 1.0);
        m
    }

    #[test]
    fn scripted_solver_output_is_parsed() {
        let cfg = ExternalSolverConfig::new("printf 'status optimal\\nobjective 1\\nv0 1\\n' > {sol}");
        let r = invoke_external_solver(&one_var(), &cfg);
        assert_eq!(r.status, SolveStatus::Optimal, "{}", r.message);
        assert_eq!(r.values, Some(vec![1.0]));
    }

    #[test]
    fn failing_process_reports_stderr() {
        let cfg = ExternalSolverConfig::new("echo boom >&2; exit 3");
        let r = invoke_external_solver(&one_var(), &cfg);
        assert_eq!(r.status, SolveStatus::Error);
        assert!(r.message.contains("boom"));
        assert!(r.values.is_none());
    }

    #[test]
    fn garbage_output_is_an_error() {
        let cfg = ExternalSolverConfig::new("echo nonsense > {sol}");
        let r = invoke_external_solver(&one_var(), &cfg);
        assert_eq!(r.status, SolveStatus::Error);
    }

    #[test]
    fn timeout_kills_process() {
        let mut cfg = ExternalSolverConfig::new("sleep 30");
        cfg.time_limit = Duration::from_millis(10);
        let start = Instant::now();
        let r = invoke_external_solver(&one_var(), &cfg);
        assert_eq!(r.status, SolveStatus::Error);
        assert!(r.message.contains("time limit"));
        assert!(start.elapsed() < Duration::from_secs(5));
    }

    #[test]
    fn placeholders_are_quoted() {
        let mut m = one_var();
        m.add_constraint(&[(0, 1.0)], Sense::Le, 1.0, Tag::Plumbing);
        let cfg = ExternalSolverConfig::new("test -s {lp} && printf 'status infeasible\\n' > {sol}");
        let r = invoke_external_solver(&m, &cfg);
        assert_eq!(r.status, SolveStatus::Infeasible, "{}", r.message);
    }
}
