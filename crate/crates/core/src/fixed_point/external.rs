//! Operators implemented by a child process.
//!
//! The child reads one step function per line on stdin (JSON, see
//! [`crate::io`]) and answers each with one step function per line on
//! stdout. Requests are sent serially.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use super::Operator;
use crate::error::{Error, Result};
use crate::io::{from_json_str, to_json};
use crate::measure::{StepFunction, ValueNorm};

struct Pipes {
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

pub struct ExternalOperator {
    child: Child,
    pipes: Mutex<Pipes>,
    range_bound: f64,
    shape: Option<(usize, ValueNorm)>,
}

impl ExternalOperator {
    pub fn spawn(command: &[String], range_bound: f64, shape: Option<(usize, ValueNorm)>) -> Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| Error::InvalidParameter("external operator needs a command".into()))?;
        if !(range_bound > 0.0 && range_bound.is_finite()) {
            return Err(Error::InvalidParameter(format!("range bound must be positive, got {range_bound}")));
        }
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::External(format!("cannot start {program}: {e}")))?;
        let stdin = child.stdin.take().expect("stdin was piped");
        let stdout = BufReader::new(child.stdout.take().expect("stdout was piped"));
        Ok(Self { child, pipes: Mutex::new(Pipes { stdin, stdout }), range_bound, shape })
    }
}

impl Operator for ExternalOperator {
    fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        let mut pipes = self.pipes.lock().map_err(|_| Error::External("operator pipe poisoned".into()))?;
        let request = to_json(f);
        writeln!(pipes.stdin, "{request}")
            .and_then(|_| pipes.stdin.flush())
            .map_err(|e| Error::External(format!("write failed: {e}")))?;
        let mut line = String::new();
        let n = pipes
            .stdout
            .read_line(&mut line)
            .map_err(|e| Error::External(format!("read failed: {e}")))?;
        if n == 0 {
            return Err(Error::External("operator closed its output".into()));
        }
        from_json_str(line.trim()).map_err(|e| Error::External(format!("bad reply: {e}")))
    }

    fn range_bound(&self) -> Option<f64> {
        Some(self.range_bound)
    }

    fn shape(&self) -> Option<(usize, ValueNorm)> {
        self.shape
    }
}

impl Drop for ExternalOperator {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
