//! Isolated process execution with wall-clock, memory, and output ceilings.
//!
//! Each run gets a fresh workspace directory; the judged process is placed
//! in its own session (so the whole tree can be killed), optionally moved
//! into an empty network namespace, and optionally dropped to an
//! unprivileged uid so that writes outside the workspace fail.

use std::fs;
use std::io::{self, Read, Write};
use std::os::unix::fs::PermissionsExt;
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::limits::ResourceLimits;
use super::spec::{Isolation, RunnerRegistry, RunnerSpec};
use crate::lang::Language;

#[derive(Debug, Error)]
pub enum SandboxError {
    #[error("no runner registered for language {0}")]
    UnknownLanguage(Language),
    #[error("workspace setup failed: {0}")]
    Workspace(#[source] io::Error),
    #[error("failed to spawn {program}: {source}")]
    Spawn {
        program: String,
        #[source]
        source: io::Error,
    },
    #[error("io failure during run: {0}")]
    Io(#[from] io::Error),
    #[error("compilation failed:\n{log}")]
    CompileFailed { log: String },
    #[error("compilation timed out after {0:.1}s")]
    CompileTimeout(f64),
    #[error("a test suite must contain at least one test")]
    NoTests,
    #[error("invalid limits: {0}")]
    InvalidLimits(String),
}

/// Exit disposition of a completed process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum ExitInfo {
    Code(i32),
    Signal(i32),
}

impl ExitInfo {
    pub fn success(&self) -> bool {
        matches!(self, ExitInfo::Code(0))
    }
}

/// Outcome of one program run.
#[derive(Debug, Clone)]
pub enum RunStatus {
    Completed {
        stdout: String,
        exit: ExitInfo,
        duration: Duration,
    },
    TimeLimit {
        duration: Duration,
    },
    OutputLimit {
        bytes_seen: u64,
        duration: Duration,
    },
}

/// A run plus its captured stderr (truncated).
#[derive(Debug, Clone)]
pub struct Execution {
    pub status: RunStatus,
    pub stderr: String,
}

/// Fresh per-run directory tree: a root-owned base that an unprivileged
/// child can traverse but not write, containing a world-writable `ws`
/// working directory.
pub struct Workspace {
    _base: tempfile::TempDir,
    dir: PathBuf,
}

impl Workspace {
    pub fn fresh(isolation: &Isolation) -> Result<Self, SandboxError> {
        let base = tempfile::Builder::new()
            .prefix("forge-ws-")
            .tempdir()
            .map_err(SandboxError::Workspace)?;
        let dir = base.path().join("ws");
        fs::create_dir(&dir).map_err(SandboxError::Workspace)?;
        if isolation.run_as_uid.is_some() {
            fs::set_permissions(base.path(), fs::Permissions::from_mode(0o711))
                .map_err(SandboxError::Workspace)?;
            fs::set_permissions(&dir, fs::Permissions::from_mode(0o777))
                .map_err(SandboxError::Workspace)?;
        }
        Ok(Workspace { _base: base, dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_file(&self, name: &str, contents: &str) -> Result<PathBuf, SandboxError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(SandboxError::Workspace)?;
        fs::set_permissions(&path, fs::Permissions::from_mode(0o644))
            .map_err(SandboxError::Workspace)?;
        Ok(path)
    }
}

/// One concrete process invocation.
pub struct ExecSpec<'a> {
    pub argv: Vec<String>,
    pub workdir: &'a Path,
    pub stdin: &'a [u8],
    pub wall: Duration,
    /// Address-space rlimit; `None` for compile steps, which may map far
    /// more than they use.
    pub memory_bytes: Option<u64>,
    pub stdout_cap: u64,
    pub stderr_cap: u64,
    pub isolation: &'a Isolation,
}

/// Run a single process to completion, timeout, or output overflow.
pub fn execute(spec: ExecSpec<'_>) -> Result<Execution, SandboxError> {
    let program = spec.argv.first().cloned().unwrap_or_default();
    let mut command = Command::new(&program);
    command
        .args(&spec.argv[1..])
        .current_dir(spec.workdir)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .env_clear()
        .env("PATH", std::env::var_os("PATH").unwrap_or_default())
        .env("HOME", spec.workdir);

    let deny_network = spec.isolation.deny_network;
    let run_uid = spec.isolation.run_as_uid;
    let run_gid = spec.isolation.run_as_gid;
    let memory = spec.memory_bytes;
    let cpu_backstop = spec.wall.as_secs().saturating_add(2);
    // Safety: pre_exec runs in the forked child before exec; only
    // async-signal-safe calls are made.
    unsafe {
        command.pre_exec(move || {
            if libc::setsid() == -1 {
                return Err(io::Error::last_os_error());
            }
            if deny_network && libc::unshare(libc::CLONE_NEWNET) != 0 {
                return Err(io::Error::last_os_error());
            }
            set_rlimit(libc::RLIMIT_CORE, 0)?;
            set_rlimit(libc::RLIMIT_CPU, cpu_backstop)?;
            if let Some(bytes) = memory {
                set_rlimit(libc::RLIMIT_AS, bytes)?;
            }
            if let Some(gid) = run_gid {
                if libc::setgroups(0, std::ptr::null()) != 0 || libc::setgid(gid) != 0 {
                    return Err(io::Error::last_os_error());
                }
            }
            if let Some(uid) = run_uid {
                if libc::setuid(uid) != 0 {
                    return Err(io::Error::last_os_error());
                }
            }
            Ok(())
        });
    }

    let start = Instant::now();
    let mut child = command.spawn().map_err(|source| SandboxError::Spawn {
        program: program.clone(),
        source,
    })?;
    let pgid = child.id() as i32;

    let mut stdin_pipe = child.stdin.take().expect("stdin piped");
    let stdin_data = spec.stdin.to_vec();
    let stdin_writer = std::thread::spawn(move || {
        // The child may exit without reading; a broken pipe is fine.
        let _ = stdin_pipe.write_all(&stdin_data);
    });

    let overflow = Arc::new(AtomicBool::new(false));
    let stdout_pipe = child.stdout.take().expect("stdout piped");
    let stdout_reader = spawn_reader(stdout_pipe, spec.stdout_cap, Some(overflow.clone()));
    let stderr_pipe = child.stderr.take().expect("stderr piped");
    let stderr_reader = spawn_reader(stderr_pipe, spec.stderr_cap, None);

    let deadline = start + spec.wall;
    let status = loop {
        if overflow.load(Ordering::SeqCst) {
            kill_group(pgid);
            let _ = child.wait();
            let (_, bytes_seen) = join_reader(stdout_reader);
            let duration = start.elapsed();
            let _ = stdin_writer.join();
            return Ok(Execution {
                status: RunStatus::OutputLimit {
                    bytes_seen,
                    duration,
                },
                stderr: join_reader_text(stderr_reader),
            });
        }
        match child.try_wait()? {
            Some(exit_status) => {
                // Kill stragglers so the readers see EOF.
                kill_group(pgid);
                let duration = start.elapsed();
                let (stdout_bytes, bytes_seen) = join_reader(stdout_reader);
                let _ = stdin_writer.join();
                // Overflow may have been detected between the last poll and
                // process exit.
                if bytes_seen > spec.stdout_cap {
                    return Ok(Execution {
                        status: RunStatus::OutputLimit {
                            bytes_seen,
                            duration,
                        },
                        stderr: join_reader_text(stderr_reader),
                    });
                }
                let exit = match exit_status.code() {
                    Some(code) => ExitInfo::Code(code),
                    None => ExitInfo::Signal(exit_status.signal().unwrap_or(-1)),
                };
                break RunStatus::Completed {
                    stdout: String::from_utf8_lossy(&stdout_bytes).into_owned(),
                    exit,
                    duration,
                };
            }
            None => {
                if Instant::now() >= deadline {
                    kill_group(pgid);
                    let _ = child.wait();
                    let _ = join_reader(stdout_reader);
                    let _ = stdin_writer.join();
                    return Ok(Execution {
                        status: RunStatus::TimeLimit {
                            duration: start.elapsed(),
                        },
                        stderr: join_reader_text(stderr_reader),
                    });
                }
                std::thread::sleep(Duration::from_millis(2));
            }
        }
    };

    Ok(Execution {
        status,
        stderr: join_reader_text(stderr_reader),
    })
}

type ReaderHandle = std::thread::JoinHandle<(Vec<u8>, u64)>;

/// Read a pipe up to `cap` bytes kept; counts everything seen. Stops early
/// once past the cap (flagging overflow) so a flooding child is killed
/// rather than drained.
fn spawn_reader(
    mut pipe: impl Read + Send + 'static,
    cap: u64,
    overflow: Option<Arc<AtomicBool>>,
) -> ReaderHandle {
    std::thread::spawn(move || {
        let mut kept: Vec<u8> = Vec::new();
        let mut seen: u64 = 0;
        let mut buf = [0u8; 16 * 1024];
        loop {
            match pipe.read(&mut buf) {
                Ok(0) | Err(_) => break,
                Ok(n) => {
                    seen += n as u64;
                    let room = (cap as usize).saturating_sub(kept.len());
                    kept.extend_from_slice(&buf[..n.min(room)]);
                    if seen > cap {
                        if let Some(flag) = &overflow {
                            flag.store(true, Ordering::SeqCst);
                        }
                        break;
                    }
                }
            }
        }
        (kept, seen)
    })
}

fn join_reader(handle: ReaderHandle) -> (Vec<u8>, u64) {
    handle.join().unwrap_or_default()
}

fn join_reader_text(handle: ReaderHandle) -> String {
    String::from_utf8_lossy(&join_reader(handle).0).into_owned()
}

fn kill_group(pgid: i32) {
    unsafe {
        libc::kill(-pgid, libc::SIGKILL);
    }
}

fn set_rlimit(resource: libc::__rlimit_resource_t, value: u64) -> io::Result<()> {
    let limit = libc::rlimit {
        rlim_cur: value,
        rlim_max: value,
    };
    if unsafe { libc::setrlimit(resource, &limit) } != 0 {
        return Err(io::Error::last_os_error());
    }
    Ok(())
}

/// Substitute `{src}`, `{bin}`, `{workspace}` into an argv template.
pub(crate) fn render_argv(template: &[String], src: &Path, bin: &Path, workspace: &Path) -> Vec<String> {
    template
        .iter()
        .map(|arg| {
            arg.replace("{src}", &src.to_string_lossy())
                .replace("{bin}", &bin.to_string_lossy())
                .replace("{workspace}", &workspace.to_string_lossy())
        })
        .collect()
}

/// Compile (when the spec requires it) inside the workspace. Returns the
/// artifact paths for the run argv.
pub(crate) fn prepare_program(
    spec: &RunnerSpec,
    workspace: &Workspace,
    code: &str,
    limits: &ResourceLimits,
    isolation: &Isolation,
) -> Result<(PathBuf, PathBuf), SandboxError> {
    let src = workspace.write_file(&spec.source_file_name(), code)?;
    let bin = workspace.dir().join("prog");
    if let Some(compile_template) = &spec.compile {
        let argv = render_argv(compile_template, &src, &bin, workspace.dir());
        let compile = execute(ExecSpec {
            argv,
            workdir: workspace.dir(),
            stdin: &[],
            wall: limits.compile_time(),
            memory_bytes: None,
            stdout_cap: 1024 * 1024,
            stderr_cap: 1024 * 1024,
            isolation,
        })?;
        match compile.status {
            RunStatus::Completed { exit, .. } if exit.success() => {}
            RunStatus::Completed { .. } => {
                return Err(SandboxError::CompileFailed {
                    log: compile.stderr,
                })
            }
            RunStatus::TimeLimit { .. } => {
                return Err(SandboxError::CompileTimeout(limits.compile_time_secs))
            }
            RunStatus::OutputLimit { .. } => {
                return Err(SandboxError::CompileFailed {
                    log: "compiler output exceeded ceiling".to_string(),
                })
            }
        }
    }
    Ok((src, bin))
}

/// Run one program against one stdin under the given limits.
pub fn run_program(
    registry: &RunnerRegistry,
    language: &Language,
    code: &str,
    stdin: &str,
    limits: &ResourceLimits,
) -> Result<Execution, SandboxError> {
    limits
        .validate()
        .map_err(SandboxError::InvalidLimits)?;
    let spec = registry
        .get(language)
        .ok_or_else(|| SandboxError::UnknownLanguage(language.clone()))?;
    let isolation = registry.isolation();
    let workspace = Workspace::fresh(isolation)?;
    let (src, bin) = prepare_program(spec, &workspace, code, limits, isolation)?;
    let argv = render_argv(&spec.run, &src, &bin, workspace.dir());
    execute(ExecSpec {
        argv,
        workdir: workspace.dir(),
        stdin: stdin.as_bytes(),
        wall: limits.wall_time(),
        memory_bytes: Some(limits.memory_bytes),
        stdout_cap: limits.output_bytes,
        stderr_cap: 64 * 1024,
        isolation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> RunnerRegistry {
        RunnerRegistry::builtin().unwrap()
    }

    fn quick_limits() -> ResourceLimits {
        ResourceLimits {
            wall_time_secs: 5.0,
            ..ResourceLimits::default()
        }
    }

    #[test]
    fn echo_program_roundtrips_stdin() {
        let execution = run_program(
            &registry(),
            &Language::new("python"),
            "import sys; sys.stdout.write(sys.stdin.read())",
            "hi",
            &quick_limits(),
        )
        .unwrap();
        match execution.status {
            RunStatus::Completed { stdout, exit, .. } => {
                assert_eq!(stdout, "hi");
                assert_eq!(exit, ExitInfo::Code(0));
            }
            other => panic!("expected completion, got {other:?}"),
        }
    }

    #[test]
    fn infinite_loop_hits_wall_clock() {
        let limits = ResourceLimits {
            wall_time_secs: 1.0,
            ..ResourceLimits::default()
        };
        let execution = run_program(
            &registry(),
            &Language::new("python"),
            "while True:\n    pass",
            "",
            &limits,
        )
        .unwrap();
        match execution.status {
            RunStatus::TimeLimit { duration } => {
                assert!(duration.as_secs_f64() >= 1.0);
                assert!(duration.as_secs_f64() < 3.0);
            }
            other => panic!("expected time limit, got {other:?}"),
        }
    }

    #[test]
    fn output_flood_hits_ceiling() {
        let limits = ResourceLimits {
            wall_time_secs: 10.0,
            output_bytes: 1024 * 1024,
            ..ResourceLimits::default()
        };
        let code = "data = 'x' * 65536\nfor _ in range(1024):\n    print(data)";
        let execution = run_program(&registry(), &Language::new("python"), code, "", &limits).unwrap();
        match execution.status {
            RunStatus::OutputLimit { bytes_seen, .. } => {
                assert!(bytes_seen > limits.output_bytes);
            }
            other => panic!("expected output limit, got {other:?}"),
        }
    }

    #[test]
    fn nonzero_exit_is_reported() {
        let execution = run_program(
            &registry(),
            &Language::new("python"),
            "import sys; sys.exit(3)",
            "",
            &quick_limits(),
        )
        .unwrap();
        match execution.status {
            RunStatus::Completed { exit, .. } => assert_eq!(exit, ExitInfo::Code(3)),
            other => panic!("expected completion, got {other:?}"),
        }
    }

    #[test]
    fn compile_error_surfaces_log() {
        let err = run_program(
            &registry(),
            &Language::new("c"),
            "int main( { return 0; }",
            "",
            &quick_limits(),
        )
        .unwrap_err();
        match err {
            SandboxError::CompileFailed { log } => assert!(log.contains("error")),
            other => panic!("expected compile failure, got {other:?}"),
        }
    }

    #[test]
    fn network_is_unreachable_from_sandbox() {
        // A listener in the parent namespace must be invisible to the child.
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let port = listener.local_addr().unwrap().port();
        let code = format!(
            "import socket\nsocket.create_connection(('127.0.0.1', {port}), timeout=2)\nprint('ESCAPED')"
        );
        let execution =
            run_program(&registry(), &Language::new("python"), &code, "", &quick_limits()).unwrap();
        match execution.status {
            RunStatus::Completed { stdout, exit, .. } => {
                assert!(!stdout.contains("ESCAPED"));
                assert!(!exit.success());
            }
            RunStatus::TimeLimit { .. } => {}
            other => panic!("unexpected status {other:?}"),
        }
    }

    #[test]
    fn writes_outside_workspace_fail() {
        // Only meaningful when the judge can drop privileges.
        if unsafe { libc::geteuid() } != 0 {
            return;
        }
        let code = "open('../escape.txt', 'w').write('x')\nprint('ESCAPED')";
        let execution =
            run_program(&registry(), &Language::new("python"), code, "", &quick_limits()).unwrap();
        match execution.status {
            RunStatus::Completed { stdout, exit, .. } => {
                assert!(!stdout.contains("ESCAPED"));
                assert!(!exit.success());
            }
            other => panic!("unexpected status {other:?}"),
        }
    }

    #[test]
    fn workspace_writes_are_allowed() {
        let code = "open('scratch.txt', 'w').write('x')\nprint('ok')";
        let execution =
            run_program(&registry(), &Language::new("python"), code, "", &quick_limits()).unwrap();
        match execution.status {
            RunStatus::Completed { stdout, exit, .. } => {
                assert_eq!(stdout.trim(), "ok");
                assert!(exit.success());
            }
            other => panic!("unexpected status {other:?}"),
        }
    }
}
