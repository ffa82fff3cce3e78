//! External encoder process adapter.
//!
//! Writes the configuration file, launches the encoder command, times the
//! child process wall-clock, and extracts (PSNR, bitrate) from its output
//! with a single configurable pattern. Encoders disagree wildly about log
//! layout, so no attempt is made at a universal parser.

use std::path::PathBuf;
use std::process::Command;
use std::sync::{Condvar, Mutex};
use std::time::Instant;

use regex::Regex;

use crate::config_space::{emit_cfg_text, GopConfiguration};

use super::{BackendError, MeasureBackend, Measurement, VideoSegment};

/// Environment variable that overrides the configured command template.
pub const ENCODER_CMD_ENV: &str = "DRASTIC_ENCODER_CMD";

const PLACEHOLDERS: [&str; 3] = ["{cfg}", "{input}", "{frames}"];

/// How to invoke an encoder and read its summary line.
#[derive(Debug, Clone)]
pub struct EncoderAdapterSpec {
    /// Whitespace-separated command with `{cfg}`, `{input}` and `{frames}`
    /// placeholders, each appearing exactly once.
    pub command_template: String,
    /// Regex with named captures `psnr` and `bitrate` applied to the child's
    /// combined stdout/stderr.
    pub summary_pattern: String,
}

impl EncoderAdapterSpec {
    pub fn new(
        command_template: impl Into<String>,
        summary_pattern: impl Into<String>,
    ) -> Result<Self, BackendError> {
        let spec = EncoderAdapterSpec {
            command_template: command_template.into(),
            summary_pattern: summary_pattern.into(),
        };
        for placeholder in PLACEHOLDERS {
            let count = spec.command_template.matches(placeholder).count();
            if count != 1 {
                return Err(BackendError::InvalidAdapterSpec(format!(
                    "command template must contain {placeholder} exactly once, found {count}"
                )));
            }
        }
        let regex = Regex::new(&spec.summary_pattern)
            .map_err(|e| BackendError::InvalidAdapterSpec(format!("bad summary pattern: {e}")))?;
        for group in ["psnr", "bitrate"] {
            if !regex.capture_names().any(|n| n == Some(group)) {
                return Err(BackendError::InvalidAdapterSpec(format!(
                    "summary pattern must define a named capture ({group})"
                )));
            }
        }
        Ok(spec)
    }
}

/// Runs an external encoder per measurement.
///
/// Child processes are throttled through a permit pool; the default pool
/// size of 1 keeps wall-clock timings honest. `DRASTIC_ENCODER_CMD`, when
/// set at construction time, replaces the spec's command template.
pub struct ExternalEncoder {
    template: String,
    pattern: Regex,
    input_path: PathBuf,
    pool: Pool,
}

impl ExternalEncoder {
    pub fn new(spec: EncoderAdapterSpec, input_path: impl Into<PathBuf>) -> Result<Self, BackendError> {
        Self::with_pool_size(spec, input_path, 1)
    }

    pub fn with_pool_size(
        spec: EncoderAdapterSpec,
        input_path: impl Into<PathBuf>,
        pool_size: usize,
    ) -> Result<Self, BackendError> {
        let template = match std::env::var(ENCODER_CMD_ENV) {
            Ok(cmd) => {
                EncoderAdapterSpec::new(cmd.clone(), spec.summary_pattern.clone())?;
                cmd
            }
            Err(_) => spec.command_template.clone(),
        };
        let pattern = Regex::new(&spec.summary_pattern)
            .map_err(|e| BackendError::InvalidAdapterSpec(format!("bad summary pattern: {e}")))?;
        Ok(ExternalEncoder {
            template,
            pattern,
            input_path: input_path.into(),
            pool: Pool::new(pool_size.max(1)),
        })
    }
}

impl MeasureBackend for ExternalEncoder {
    fn measure(
        &self,
        config: &GopConfiguration,
        segment: &VideoSegment,
    ) -> Result<Measurement, BackendError> {
        if !self.input_path.exists() {
            return Err(BackendError::AdapterFailure {
                message: format!("input file {} does not exist", self.input_path.display()),
                output: String::new(),
            });
        }
        let mut cfg_file = tempfile::Builder::new()
            .prefix(&format!("{}-", config.id))
            .suffix(".cfg")
            .tempfile()?;
        std::io::Write::write_all(&mut cfg_file, emit_cfg_text(config).as_bytes())?;

        let cfg_path = cfg_file.path().to_string_lossy().into_owned();
        let input = self.input_path.to_string_lossy().into_owned();
        let frames = segment.frame_count().to_string();
        let argv: Vec<String> = self
            .template
            .split_whitespace()
            .map(|token| {
                token
                    .replace("{cfg}", &cfg_path)
                    .replace("{input}", &input)
                    .replace("{frames}", &frames)
            })
            .collect();

        let _permit = self.pool.acquire();
        let start = Instant::now();
        let output = Command::new(&argv[0]).args(&argv[1..]).output().map_err(|e| {
            BackendError::AdapterFailure {
                message: format!("failed to launch {:?}: {e}", argv[0]),
                output: String::new(),
            }
        })?;
        let elapsed = start.elapsed().as_secs_f64().max(1e-9);

        let mut combined = String::from_utf8_lossy(&output.stdout).into_owned();
        combined.push_str(&String::from_utf8_lossy(&output.stderr));
        if !output.status.success() {
            return Err(BackendError::AdapterFailure {
                message: format!("encoder exited with {}", output.status),
                output: combined,
            });
        }

        let captures = self.pattern.captures(&combined).ok_or_else(|| {
            BackendError::AdapterFailure {
                message: "summary pattern matched nothing".to_string(),
                output: combined.clone(),
            }
        })?;
        let number = |group: &str| -> Result<f64, BackendError> {
            captures
                .name(group)
                .and_then(|m| m.as_str().parse().ok())
                .ok_or_else(|| BackendError::AdapterFailure {
                    message: format!("capture {group} is not a number"),
                    output: combined.clone(),
                })
        };
        let psnr = number("psnr")?;
        let bitrate = number("bitrate")?;
        Measurement::new(config.id.clone(), segment.video_id.clone(), psnr, elapsed, bitrate)
            .map_err(|e| BackendError::AdapterFailure { message: e.to_string(), output: combined })
    }
}

/// Counting permit pool built on Mutex + Condvar.
struct Pool {
    state: Mutex<usize>,
    available: Condvar,
}

struct Permit<'a>(&'a Pool);

impl Pool {
    fn new(size: usize) -> Self {
        Pool { state: Mutex::new(size), available: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.state.lock().expect("pool mutex");
        while *free == 0 {
            free = self.available.wait(free).expect("pool mutex");
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.state.lock().expect("pool mutex") += 1;
        self.0.available.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::enumerate_standard;
    use crate::fixtures;
    use std::io::Write;

    fn fake_encoder(dir: &std::path::Path, body: &str) -> PathBuf {
        let path = dir.join("fake-encoder.sh");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "#!/bin/sh\n{body}").unwrap();
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
        }
        path
    }

    const PATTERN: &str = r"PSNR (?P<psnr>[0-9.]+) dB, (?P<bitrate>[0-9.]+) kbps";

    #[test]
    fn spec_validates_placeholders_and_pattern() {
        assert!(EncoderAdapterSpec::new("enc -c {cfg} -i {input} -f {frames}", PATTERN).is_ok());
        assert!(matches!(
            EncoderAdapterSpec::new("enc -i {input} -f {frames}", PATTERN),
            Err(BackendError::InvalidAdapterSpec(_))
        ));
        assert!(matches!(
            EncoderAdapterSpec::new("enc {cfg} {cfg} {input} {frames}", PATTERN),
            Err(BackendError::InvalidAdapterSpec(_))
        ));
        assert!(matches!(
            EncoderAdapterSpec::new("enc {cfg} {input} {frames}", r"(?P<psnr>[0-9.]+)"),
            Err(BackendError::InvalidAdapterSpec(_))
        ));
    }

    #[test]
    fn adapter_runs_encoder_and_parses_summary() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("clip.yuv");
        std::fs::write(&input, b"not a real clip").unwrap();
        // echo back what we were given plus a parsable summary line
        let encoder = fake_encoder(
            dir.path(),
            "test -f \"$2\" || exit 3\necho \"frames=$6 PSNR 41.35 dB, 1085.06 kbps\"",
        );
        let spec = EncoderAdapterSpec::new(
            format!("{} -c {{cfg}} -i {{input}} -f {{frames}}", encoder.display()),
            PATTERN,
        )
        .unwrap();
        let adapter = ExternalEncoder::new(spec, &input).unwrap();

        let config = &enumerate_standard()[30];
        let segment = &fixtures::basketball_segments()[0];
        let m = adapter.measure(config, segment).unwrap();
        assert_eq!(m.config_id, config.id);
        assert_eq!(m.video_id, "V001");
        assert_eq!(m.psnr_db, 41.35);
        assert_eq!(m.bitrate_kbps, 1085.06);
        assert!(m.enc_time_s > 0.0);
    }

    #[test]
    fn nonzero_exit_and_garbage_output_become_adapter_failures() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("clip.yuv");
        std::fs::write(&input, b"x").unwrap();
        let config = &enumerate_standard()[0];
        let segment = &fixtures::basketball_segments()[0];

        let failing = fake_encoder(dir.path(), "echo boom; exit 7");
        let spec = EncoderAdapterSpec::new(
            format!("{} {{cfg}} {{input}} {{frames}}", failing.display()),
            PATTERN,
        )
        .unwrap();
        let adapter = ExternalEncoder::new(spec, &input).unwrap();
        match adapter.measure(config, segment) {
            Err(BackendError::AdapterFailure { output, .. }) => assert!(output.contains("boom")),
            other => panic!("expected AdapterFailure, got {other:?}"),
        }

        let silent = fake_encoder(dir.path(), "echo nothing useful");
        let spec = EncoderAdapterSpec::new(
            format!("{} {{cfg}} {{input}} {{frames}}", silent.display()),
            PATTERN,
        )
        .unwrap();
        let adapter = ExternalEncoder::new(spec, &input).unwrap();
        assert!(matches!(
            adapter.measure(config, segment),
            Err(BackendError::AdapterFailure { .. })
        ));
    }

    #[test]
    fn missing_input_is_reported_before_launch() {
        let dir = tempfile::tempdir().unwrap();
        let encoder = fake_encoder(dir.path(), "echo PSNR 1 dB, 1 kbps");
        let spec = EncoderAdapterSpec::new(
            format!("{} {{cfg}} {{input}} {{frames}}", encoder.display()),
            PATTERN,
        )
        .unwrap();
        let adapter = ExternalEncoder::new(spec, dir.path().join("missing.yuv")).unwrap();
        let config = &enumerate_standard()[0];
        let segment = &fixtures::basketball_segments()[0];
        assert!(matches!(
            adapter.measure(config, segment),
            Err(BackendError::AdapterFailure { .. })
        ));
    }
}
