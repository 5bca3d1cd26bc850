use std::fs;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use thermoscope::imaging::{composite_width, synthesize_spot, FrameLayout, ImagingConfig};
use thermoscope::inference::ScanKind;
use thermoscope::io::{self, UM};
use thermoscope::physics::{equilibrium_temperature, ExperimentParams, HeatingRate, ThermalState};

use crate::common::{write_json, CmdResult, Failure, GlobalArgs};

/// Default Rabi-scan values, in Γ.
pub const DEFAULT_RABI_SERIES: [f64; 6] = [0.012, 0.025, 0.23, 1.1, 2.4, 3.3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Rabi,
    Detuning,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Scan description (JSON); replaces the inline scan options
    #[arg(long, value_name = "FILE")]
    pub scan: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "rabi")]
    pub kind: KindArg,

    /// Scan values: Rabi frequency in Γ, or detuning in MHz
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub controls: Vec<f64>,

    /// Held value: detuning in MHz (Rabi scan) or Rabi frequency in Γ (detuning scan)
    #[arg(long, allow_hyphen_values = true)]
    pub fixed: Option<f64>,

    /// Anomalous heating rate, quanta/ms
    #[arg(long, default_value_t = 0.38)]
    pub zeta: f64,

    /// Detected photons per frame
    #[arg(long, default_value_t = 100_000)]
    pub photons: u64,

    /// Square frame size in pixels; sized to the spot when omitted
    #[arg(long)]
    pub frame_size: Option<usize>,
}

/// Scan in laboratory units: Rabi frequencies in Γ, detunings in MHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub scan_kind: ScanKind,
    pub controls: Vec<f64>,
    pub fixed: f64,
    pub zeta_quanta_per_ms: f64,
    #[serde(default = "default_photons")]
    pub photons: u64,
    #[serde(default)]
    pub frame_size: Option<usize>,
}

fn default_photons() -> u64 {
    100_000
}

impl ScanSpec {
    fn from_args(args: &SimulateArgs) -> CmdResult<Self> {
        if let Some(path) = &args.scan {
            let text =
                fs::read_to_string(path).map_err(|e| Failure::from(e).context(path.display()))?;
            return serde_json::from_str(&text)
                .map_err(|e| Failure::from(e).context(path.display()));
        }
        let (scan_kind, controls, fixed) = match args.kind {
            KindArg::Rabi => (
                ScanKind::RabiScan,
                if args.controls.is_empty() {
                    DEFAULT_RABI_SERIES.to_vec()
                } else {
                    args.controls.clone()
                },
                args.fixed.unwrap_or(-13.0),
            ),
            KindArg::Detuning => {
                if args.controls.is_empty() {
                    return Err(Failure::usage("a detuning scan needs --controls (MHz)"));
                }
                let fixed = args.fixed.ok_or_else(|| {
                    Failure::usage("a detuning scan needs --fixed (Rabi frequency in Γ)")
                })?;
                (ScanKind::DetuningScan, args.controls.clone(), fixed)
            }
        };
        Ok(Self {
            scan_kind,
            controls,
            fixed,
            zeta_quanta_per_ms: args.zeta,
            photons: args.photons,
            frame_size: args.frame_size,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub file: String,
    /// In the scan's control unit.
    pub control: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_ion_um: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_image_um: Option<f64>,
}

/// Everything needed to regenerate the frames bit for bit, plus the ground
/// truth of each frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator: String,
    pub seed: u64,
    pub control_unit: String,
    pub fixed_unit: String,
    pub scan: ScanSpec,
    pub params: serde_json::Value,
    pub imaging: serde_json::Value,
    pub frames: Vec<FrameRecord>,
}

impl Manifest {
    pub fn params(&self) -> CmdResult<ExperimentParams> {
        Ok(io::params_from_json(&self.params.to_string())?)
    }

    pub fn imaging(&self) -> CmdResult<ImagingConfig> {
        Ok(io::imaging_from_json(&self.imaging.to_string())?)
    }
}

/// Per-frame seed: the frame index mixed into the run seed.
pub fn frame_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Imaging configuration as it reads back from its own JSON, so that the
/// manifest reproduces the run exactly.
fn canonical_imaging(cfg: &ImagingConfig) -> CmdResult<ImagingConfig> {
    let mut c = *cfg;
    for _ in 0..4 {
        let next = io::imaging_from_json(&io::imaging_to_json(&c))?;
        if next == c {
            return Ok(c);
        }
        c = next;
    }
    Ok(c)
}

pub fn run(global: &GlobalArgs, args: &SimulateArgs) -> CmdResult {
    let p = global.params()?;
    let cfg = canonical_imaging(&global.imaging()?)?;
    let spec = ScanSpec::from_args(args)?;
    if spec.controls.is_empty() {
        return Err(Failure::validation("scan has no control values"));
    }
    let zeta = HeatingRate::per_ms(spec.zeta_quanta_per_ms)?;
    let fixed = io::fixed_from_lab(spec.scan_kind, spec.fixed, p.gamma);
    let out = global.out_dir()?;

    let layout = FrameLayout {
        size: spec.frame_size.map(|n| (n, n)),
        offset: (0.0, 0.0),
    };
    let mut frames = Vec::with_capacity(spec.controls.len());
    for (i, &c) in spec.controls.iter().enumerate() {
        let control = io::control_from_lab(spec.scan_kind, c, p.gamma);
        let laser = spec.scan_kind.laser(control, fixed);
        let t = equilibrium_temperature(&laser, &p, zeta)
            .map_err(|e| Failure::from(e).context(format!("point {c}")))?;
        let state = ThermalState::from_temperature(t, &p)?;
        let sigma = composite_width(state.sigma_ion, &cfg)?;
        let seed = frame_seed(global.seed, i);
        let frame = synthesize_spot(sigma, &cfg, spec.photons, seed, layout)?;
        let file = format!("frame_{i:03}.pgm");
        frame.write_pgm(&out.join(&file))?;
        log::info!(
            "{file}: control {c}, T = {t:.4e} K, sigma = {:.3} um",
            sigma / UM
        );
        frames.push(FrameRecord {
            file,
            control: c,
            seed: Some(seed),
            temperature_k: Some(t),
            nbar: Some(state.nbar),
            sigma_ion_um: Some(state.sigma_ion / UM),
            sigma_image_um: Some(sigma / UM),
        });
    }

    let manifest = Manifest {
        generator: format!("thermoscope {}", env!("CARGO_PKG_VERSION")),
        seed: global.seed,
        control_unit: io::control_unit(spec.scan_kind).to_string(),
        fixed_unit: io::fixed_unit(spec.scan_kind).to_string(),
        scan: spec,
        params: serde_json::from_str(&io::params_to_json(&p))?,
        imaging: serde_json::from_str(&io::imaging_to_json(&cfg))?,
        frames,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    println!(
        "wrote {} frames and manifest.json to {}",
        manifest.frames.len(),
        out.display()
    );
    Ok(())
}
