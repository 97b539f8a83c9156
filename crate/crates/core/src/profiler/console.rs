use std::collections::VecDeque;
use std::io::{self, BufRead, Write};

/// Line-oriented prompt/response channel driving a session.
pub trait Console {
    /// Shows `prompt` and waits for one line of input. `None` means the
    /// input is exhausted.
    fn prompt(&mut self, prompt: &str) -> io::Result<Option<String>>;

    /// Progress and warning messages.
    fn info(&mut self, message: &str);
}

/// Prompts on one stream, reads responses from another.
pub struct LineConsole<R, W> {
    input: R,
    output: W,
}

impl<R: BufRead, W: Write> LineConsole<R, W> {
    pub fn new(input: R, output: W) -> Self {
        LineConsole { input, output }
    }
}

/// The interactive terminal: prompts go to standard error so standard
/// output stays free for data.
pub fn terminal() -> LineConsole<io::StdinLock<'static>, io::Stderr> {
    LineConsole::new(io::stdin().lock(), io::stderr())
}

impl<R: BufRead, W: Write> Console for LineConsole<R, W> {
    fn prompt(&mut self, prompt: &str) -> io::Result<Option<String>> {
        write!(self.output, "{prompt}: ")?;
        self.output.flush()?;
        let mut line = String::new();
        if self.input.read_line(&mut line)? == 0 {
            return Ok(None);
        }
        Ok(Some(line.trim_end_matches(['\r', '\n']).to_owned()))
    }

    fn info(&mut self, message: &str) {
        let _ = writeln!(self.output, "{message}");
    }
}

enum Step {
    Reply(String),
    Act(Box<dyn FnOnce() + Send>),
}

/// A console that replays a fixed script.
///
/// Actions queued before a reply run when the next prompt arrives, just
/// before the reply is returned, which is how a test performs the
/// application's changes between two snapshots.
#[derive(Default)]
pub struct ScriptedConsole {
    steps: VecDeque<Step>,
    /// Every prompt and message seen, in order, prompts prefixed with `? `.
    pub transcript: Vec<String>,
}

impl ScriptedConsole {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reply(mut self, line: impl Into<String>) -> Self {
        self.steps.push_back(Step::Reply(line.into()));
        self
    }

    pub fn act(mut self, action: impl FnOnce() + Send + 'static) -> Self {
        self.steps.push_back(Step::Act(Box::new(action)));
        self
    }

    pub fn is_exhausted(&self) -> bool {
        self.steps.is_empty()
    }
}

impl Console for ScriptedConsole {
    fn prompt(&mut self, prompt: &str) -> io::Result<Option<String>> {
        self.transcript.push(format!("? {prompt}"));
        while let Some(step) = self.steps.pop_front() {
            match step {
                Step::Act(action) => action(),
                Step::Reply(line) => return Ok(Some(line)),
            }
        }
        Ok(None)
    }

    fn info(&mut self, message: &str) {
        self.transcript.push(message.to_owned());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn scripted_actions_run_before_reply() {
        let hits = Arc::new(AtomicUsize::new(0));
        let h = hits.clone();
        let mut c = ScriptedConsole::new()
            .reply("a")
            .act(move || {
                h.fetch_add(1, Ordering::SeqCst);
            })
            .reply("b");
        assert_eq!(c.prompt("p1").unwrap().as_deref(), Some("a"));
        assert_eq!(hits.load(Ordering::SeqCst), 0);
        assert_eq!(c.prompt("p2").unwrap().as_deref(), Some("b"));
        assert_eq!(hits.load(Ordering::SeqCst), 1);
        assert_eq!(c.prompt("p3").unwrap(), None);
        assert_eq!(c.transcript, ["? p1", "? p2", "? p3"]);
    }

    #[test]
    fn line_console_strips_line_endings() {
        let mut out = Vec::new();
        let mut c = LineConsole::new(&b"install\r\n\n"[..], &mut out);
        assert_eq!(c.prompt("phase").unwrap().as_deref(), Some("install"));
        assert_eq!(c.prompt("go").unwrap().as_deref(), Some(""));
        assert_eq!(c.prompt("again").unwrap(), None);
        c.info("bye");
        assert_eq!(String::from_utf8(out).unwrap(), "phase: go: again: bye\n");
    }
}
