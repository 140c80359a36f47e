//! Run logging. Lines read `ISO8601 level stage message`, where the stage is
//! the `log` target. A thread-local capture collects the lines of one engine
//! run so they can be written next to its result files.

use std::cell::RefCell;
use std::io::Write;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use log::{Level, LevelFilter, Log, Metadata, Record};

/// Environment variable holding the stderr level (debug, info, warn, error, off).
pub const LEVEL_ENV: &str = "RISKPIPE_LOG_LEVEL";

static INSTALLED: AtomicBool = AtomicBool::new(false);
static STDERR_LEVEL: AtomicUsize = AtomicUsize::new(LevelFilter::Info as usize);

thread_local! {
    static CAPTURE: RefCell<Option<Vec<String>>> = const { RefCell::new(None) };
}

struct RunLogger;

static LOGGER: RunLogger = RunLogger;

pub fn format_line(level: Level, stage: &str, message: &str) -> String {
    let now = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
    format!("{now} {level} {stage} {message}")
}

fn level_from_usize(v: usize) -> LevelFilter {
    LevelFilter::iter().nth(v).unwrap_or(LevelFilter::Info)
}

impl Log for RunLogger {
    fn enabled(&self, _: &Metadata<'_>) -> bool {
        true
    }

    fn log(&self, record: &Record<'_>) {
        let stage = record.target().rsplit("::").next().unwrap_or("run");
        let line = format_line(record.level(), stage, &record.args().to_string());
        if record.level() <= level_from_usize(STDERR_LEVEL.load(Ordering::Relaxed)) {
            let _ = writeln!(std::io::stderr(), "{line}");
        }
        if record.level() <= Level::Info {
            CAPTURE.with(|c| {
                if let Some(buf) = c.borrow_mut().as_mut() {
                    buf.push(line);
                }
            });
        }
    }

    fn flush(&self) {}
}

pub fn parse_level(s: &str) -> Option<LevelFilter> {
    match s.trim().to_ascii_lowercase().as_str() {
        "debug" => Some(LevelFilter::Debug),
        "info" => Some(LevelFilter::Info),
        "warn" | "warning" => Some(LevelFilter::Warn),
        "error" => Some(LevelFilter::Error),
        "off" => Some(LevelFilter::Off),
        _ => None,
    }
}

/// Installs the crate logger unless another logger is already set. The
/// stderr level comes from [`LEVEL_ENV`], defaulting to info.
pub fn init() {
    if let Some(level) = std::env::var(LEVEL_ENV).ok().as_deref().and_then(parse_level) {
        set_stderr_level(level);
    }
    if log::set_logger(&LOGGER).is_ok() {
        log::set_max_level(LevelFilter::Debug);
        INSTALLED.store(true, Ordering::Relaxed);
    }
}

pub fn set_stderr_level(level: LevelFilter) {
    STDERR_LEVEL.store(level as usize, Ordering::Relaxed);
}

/// Emits one line. When a foreign logger owns the `log` facade the line is
/// still captured for the run log.
pub fn record(level: Level, stage: &str, message: &str) {
    log::log!(target: stage, level, "{message}");
    if !INSTALLED.load(Ordering::Relaxed) && level <= Level::Info {
        let line = format_line(level, stage, message);
        CAPTURE.with(|c| {
            if let Some(buf) = c.borrow_mut().as_mut() {
                buf.push(line);
            }
        });
    }
}

/// Collects the lines logged on this thread until [`Capture::finish`].
pub struct Capture {
    previous: Option<Vec<String>>,
}

pub fn capture() -> Capture {
    let previous = CAPTURE.with(|c| c.borrow_mut().replace(Vec::new()));
    Capture { previous }
}

impl Capture {
    pub fn finish(mut self) -> Vec<String> {
        let prev = self.previous.take();
        CAPTURE.with(|c| std::mem::replace(&mut *c.borrow_mut(), prev).unwrap_or_default())
    }
}

impl Drop for Capture {
    fn drop(&mut self) {
        if let Some(prev) = self.previous.take() {
            CAPTURE.with(|c| *c.borrow_mut() = Some(prev));
        }
    }
}
