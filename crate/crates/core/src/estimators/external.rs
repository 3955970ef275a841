//! Adapter for out-of-process estimators.
//!
//! Each call gets a fresh working directory holding `PROTOCOL`, `inlet.pbm`,
//! `over.pbm` and `under.pbm`. The command runs as `<command...> <dir>` and
//! must write `outlet.pbm` there and exit 0. The directory is removed on
//! success and kept on any failure.

use std::fs::File;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::{Estimator, EstimatorError, EstimatorInput};
use crate::raster::{read_pbm_file, write_pbm_file, Raster};

pub const PROTOCOL_VERSION: &str = "rollpass-ext/1";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

const POLL: Duration = Duration::from_millis(5);

#[derive(Clone, Debug)]
pub struct External {
    /// Program and leading arguments, split on whitespace.
    pub command: Vec<String>,
    pub timeout: Duration,
}

impl External {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.split_whitespace().map(str::to_string).collect(),
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

impl Estimator for External {
    fn id(&self) -> String {
        format!("ext:{}", self.command.join(" "))
    }

    fn estimate(&self, input: &EstimatorInput) -> Result<Raster, EstimatorError> {
        let (program, args) = self
            .command
            .split_first()
            .ok_or_else(|| EstimatorError::InvalidInput("empty external command".into()))?;
        let work = tempfile::Builder::new().prefix("rollpass-ext-").tempdir()?;
        let dir = work.path().to_path_buf();
        std::fs::write(dir.join("PROTOCOL"), format!("{PROTOCOL_VERSION}\n"))?;
        write_pbm_file(&input.inlet, dir.join("inlet.pbm"))?;
        write_pbm_file(&input.over_mask, dir.join("over.pbm"))?;
        write_pbm_file(&input.under_mask, dir.join("under.pbm"))?;

        let mut child = Command::new(program)
            .args(args)
            .arg(&dir)
            .stdin(Stdio::null())
            .stdout(File::create(dir.join("stdout.log"))?)
            .stderr(File::create(dir.join("stderr.log"))?)
            .spawn()?;
        let start = Instant::now();
        let status = loop {
            if let Some(status) = child.try_wait()? {
                break status;
            }
            if start.elapsed() >= self.timeout {
                // Best effort; the process may have exited in between.
                let _ = child.kill();
                let _ = child.wait();
                return Err(EstimatorError::Timeout {
                    secs: self.timeout.as_secs_f64(),
                    dir: work.keep(),
                });
            }
            std::thread::sleep(POLL);
        };

        let failure = |code, reason: String, work: tempfile::TempDir| EstimatorError::ExternalFailure {
            code,
            reason,
            dir: work.keep(),
        };
        if !status.success() {
            let reason = match status.code() {
                Some(c) => format!("exit code {c}"),
                None => "terminated by a signal".to_string(),
            };
            return Err(failure(status.code(), reason, work));
        }
        let outlet = match read_pbm_file(dir.join("outlet.pbm"), input.inlet.config().resolution) {
            Ok(r) => r,
            Err(e) => return Err(failure(Some(0), format!("unreadable outlet.pbm: {e}"), work)),
        };
        if outlet.width() != input.inlet.width() || outlet.height() != input.inlet.height() {
            let reason = format!(
                "outlet is {}x{}, expected {}x{}",
                outlet.width(),
                outlet.height(),
                input.inlet.width(),
                input.inlet.height()
            );
            return Err(failure(Some(0), reason, work));
        }
        work.close()?;
        Ok(outlet)
    }
}
