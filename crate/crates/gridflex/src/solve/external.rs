//! External solver adapter: JSON problem/solution protocol over a
//! subprocess, used for large sweeps.

use super::{LpProblem, MipProblem, SolveError, SolveOpts, SolveOutcome, SolveStats, SolveStatus};
use serde::Deserialize;
use std::path::Path;
use std::process::Command;

#[derive(Debug, Clone)]
pub struct ExternalSolverConfig {
    /// Executable or script path. Paths ending in `.py` are run through
    /// `python3`.
    pub command: String,
    pub extra_args: Vec<String>,
    /// Relative MIP gap passed through to the solver.
    pub mip_gap: f64,
    pub time_limit_secs: Option<f64>,
}

impl Default for ExternalSolverConfig {
    fn default() -> Self {
        ExternalSolverConfig {
            command: String::new(),
            extra_args: Vec::new(),
            mip_gap: 1e-9,
            time_limit_secs: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExternalSolver {
    config: ExternalSolverConfig,
}

#[derive(Deserialize)]
struct WireResponse {
    status: String,
    #[serde(default)]
    x: Vec<f64>,
    #[serde(default)]
    objective: f64,
    #[serde(default)]
    duals: Vec<f64>,
    #[serde(default)]
    message: Option<String>,
    #[serde(default)]
    lower_bound: Option<f64>,
}

impl ExternalSolver {
    /// Validates the configuration eagerly: a missing binary or a failed
    /// handshake is a configuration error at startup, not mid-sweep.
    pub fn new(config: ExternalSolverConfig) -> Result<Self, SolveError> {
        if config.command.is_empty() {
            return Err(SolveError::Config("external solver command is empty".into()));
        }
        if !Path::new(&config.command).exists() {
            return Err(SolveError::Config(format!("external solver path `{}` does not exist", config.command)));
        }
        let solver = ExternalSolver { config };
        let out = solver
            .base_command()
            .arg("--handshake")
            .output()
            .map_err(|e| SolveError::Config(format!("cannot launch external solver: {e}")))?;
        let stdout = String::from_utf8_lossy(&out.stdout);
        if !stdout.contains("gridflex-solver") {
            return Err(SolveError::Config(format!("external solver handshake failed: `{}`", stdout.trim())));
        }
        Ok(solver)
    }

    fn base_command(&self) -> Command {
        let mut cmd = if self.config.command.ends_with(".py") {
            let mut c = Command::new("python3");
            c.arg(&self.config.command);
            c
        } else {
            Command::new(&self.config.command)
        };
        cmd.args(&self.config.extra_args);
        cmd
    }

    fn run(&self, kind: &str, problem_json: String, opts: &SolveOpts) -> Result<SolveOutcome, SolveError> {
        let dir = tempfile_dir()?;
        let req = dir.join("problem.json");
        let resp = dir.join("solution.json");
        let wrapper = serde_json::json!({
            "kind": kind,
            "problem": serde_json::from_str::<serde_json::Value>(&problem_json).expect("problem serializes"),
            "opts": {
                "mip_gap": self.config.mip_gap,
                "time_limit": self.config.time_limit_secs.or(opts.time_limit.map(|d| d.as_secs_f64())),
            },
        });
        std::fs::write(&req, serde_json::to_vec(&wrapper).expect("request serializes"))
            .map_err(|e| SolveError::Config(format!("cannot write request: {e}")))?;
        let start = std::time::Instant::now();
        let out = self
            .base_command()
            .arg(&req)
            .arg(&resp)
            .output()
            .map_err(|e| SolveError::Config(format!("cannot launch external solver: {e}")))?;
        if !out.status.success() {
            let stderr = String::from_utf8_lossy(&out.stderr);
            return Ok(SolveOutcome::failed(
                SolveStatus::Limit,
                format!("external solver exited with {}: {}", out.status, stderr.trim()),
            ));
        }
        let text = std::fs::read_to_string(&resp)
            .map_err(|e| SolveError::Config(format!("cannot read solution: {e}")))?;
        let wire: WireResponse = serde_json::from_str(&text)
            .map_err(|e| SolveError::Config(format!("malformed solution JSON: {e}")))?;
        let status = match wire.status.as_str() {
            "optimal" => SolveStatus::Optimal,
            "infeasible" => SolveStatus::Infeasible,
            "unbounded" => SolveStatus::Unbounded,
            _ => SolveStatus::Limit,
        };
        let _ = std::fs::remove_file(&req);
        let _ = std::fs::remove_file(&resp);
        let _ = std::fs::remove_dir(&dir);
        Ok(SolveOutcome {
            status,
            x: wire.x,
            objective: wire.objective,
            duals: wire.duals,
            stats: SolveStats {
                wall: start.elapsed(),
                message: wire.message,
                lower_bound: wire.lower_bound.unwrap_or(f64::NEG_INFINITY),
                ..Default::default()
            },
        })
    }

    pub fn solve_lp(&self, p: &LpProblem, opts: &SolveOpts) -> Result<SolveOutcome, SolveError> {
        p.check()?;
        let json = serde_json::to_string(&MipProblem { lp: p.clone(), binaries: Vec::new() })
            .expect("problem serializes");
        let mut out = self.run("lp", json, opts)?;
        if out.status == SolveStatus::Optimal {
            let viol = p.max_violation(&out.x);
            if viol > opts.feas_tol * super::problem_scale(p) {
                out.status = SolveStatus::Limit;
                out.stats.message = Some(format!("external solution residual {viol:.3e}"));
            }
        }
        Ok(out)
    }

    pub fn solve_mip(&self, p: &MipProblem, opts: &SolveOpts) -> Result<SolveOutcome, SolveError> {
        p.check()?;
        let json = serde_json::to_string(p).expect("problem serializes");
        let mut out = self.run("mip", json, opts)?;
        if out.status == SolveStatus::Optimal {
            let viol = p.lp.max_violation(&out.x);
            if viol > opts.feas_tol.max(1e-5) * super::problem_scale(&p.lp) {
                out.status = SolveStatus::Limit;
                out.stats.message = Some(format!("external solution residual {viol:.3e}"));
            }
        } else if out.status == SolveStatus::Limit && !out.x.is_empty() {
            // a time-limited incumbent is only usable if it checks out
            let viol = p.lp.max_violation(&out.x);
            if viol > opts.feas_tol.max(1e-5) * super::problem_scale(&p.lp) {
                out.x = Vec::new();
            }
        }
        Ok(out)
    }
}

fn tempfile_dir() -> Result<std::path::PathBuf, SolveError> {
    let base = std::env::temp_dir();
    for k in 0..10_000u64 {
        let pid = std::process::id();
        let nanos = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.subsec_nanos())
            .unwrap_or(0);
        let dir = base.join(format!("gridflex-ext-{pid}-{nanos}-{k}"));
        if std::fs::create_dir(&dir).is_ok() {
            return Ok(dir);
        }
    }
    Err(SolveError::Config("cannot create scratch directory".into()))
}
