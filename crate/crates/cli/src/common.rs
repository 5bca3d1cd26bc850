use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use thermoscope::imaging::ImagingConfig;
use thermoscope::io;
use thermoscope::physics::ExperimentParams;

pub const DEFAULT_SEED: u64 = 20_151_118;

/// Failure carrying the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }

    pub fn context(self, what: impl fmt::Display) -> Self {
        Self {
            code: self.code,
            message: format!("{what}: {}", self.message),
        }
    }
}

impl From<thermoscope::Error> for Failure {
    fn from(e: thermoscope::Error) -> Self {
        if e.is_numerical() {
            Self::numerical(e.to_string())
        } else {
            Self::validation(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::validation(e.to_string())
    }
}

pub type CmdResult<T = ()> = std::result::Result<T, Failure>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Experiment parameters (JSON, SI with optional units block)
    #[arg(long, global = true, value_name = "FILE")]
    pub params: Option<PathBuf>,

    /// Imaging configuration (JSON, lengths in µm); defaults apply when omitted
    #[arg(long, global = true, value_name = "FILE")]
    pub imaging: Option<PathBuf>,

    /// Random seed
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Output directory
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,

    /// Format of the main output file
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

impl GlobalArgs {
    pub fn params(&self) -> CmdResult<ExperimentParams> {
        let path = self
            .params
            .as_ref()
            .ok_or_else(|| Failure::usage("this command needs --params FILE"))?;
        io::read_params(path).map_err(|e| Failure::from(e).context(path.display()))
    }

    pub fn params_opt(&self) -> CmdResult<Option<ExperimentParams>> {
        self.params.as_ref().map(|_| self.params()).transpose()
    }

    pub fn imaging(&self) -> CmdResult<ImagingConfig> {
        match &self.imaging {
            Some(path) => {
                io::read_imaging(path).map_err(|e| Failure::from(e).context(path.display()))
            }
            None => Ok(ImagingConfig::default()),
        }
    }

    pub fn out_dir(&self) -> CmdResult<&Path> {
        fs::create_dir_all(&self.out).map_err(|e| Failure::from(e).context(self.out.display()))?;
        Ok(&self.out)
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CmdResult {
    io::write_json(path, value).map_err(|e| Failure::from(e).context(path.display()))
}

pub fn write_text(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| Failure::from(e).context(path.display()))
}
