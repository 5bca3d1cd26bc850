use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use thermoscope::imaging::{measure_width_with, FitWeights, ImageFrame, WidthOptions};
use thermoscope::io::{self, ScanRow, ScanTable, UM};

use crate::common::{write_json, CmdResult, Failure, Format, GlobalArgs};
use crate::simulate::Manifest;

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Directory holding the PGM frames
    #[arg(long, value_name = "DIR")]
    pub frames: PathBuf,

    /// Manifest mapping frame files to control values [default: FRAMES/manifest.json]
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,

    /// Rotation applied before projecting onto columns, degrees
    #[arg(long, default_value_t = 45.0, allow_hyphen_values = true)]
    pub angle: f64,

    /// Weight the profile fit by Poisson variances
    #[arg(long)]
    pub poisson_weights: bool,
}

#[derive(Debug, Serialize)]
struct FrameStatus {
    file: String,
    control: f64,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_um: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_err_um: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct AnalysisManifest {
    frames_dir: String,
    control_unit: String,
    angle_deg: f64,
    pixel_pitch_um: f64,
    failed: usize,
    frames: Vec<FrameStatus>,
}

fn list_frames(dir: &Path) -> CmdResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Failure::from(e).context(dir.display()))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")))
        .collect();
    files.sort();
    Ok(files)
}

pub fn run(global: &GlobalArgs, args: &AnalyzeArgs) -> CmdResult {
    let files = list_frames(&args.frames)?;
    if files.is_empty() {
        return Err(Failure::validation(format!(
            "no .pgm frames in {}",
            args.frames.display()
        )));
    }
    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| args.frames.join("manifest.json"));
    let manifest: Manifest = {
        let text = fs::read_to_string(&manifest_path)
            .map_err(|e| Failure::from(e).context(manifest_path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::from(e).context(manifest_path.display()))?
    };
    let p = match global.params_opt()? {
        Some(p) => p,
        None => manifest.params()?,
    };
    let cfg = match &global.imaging {
        Some(_) => global.imaging()?,
        None => manifest.imaging()?,
    };
    let kind = manifest.scan.scan_kind;

    let mut jobs = Vec::with_capacity(files.len());
    for path in &files {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        let record = manifest
            .frames
            .iter()
            .find(|f| f.file == name)
            .ok_or_else(|| {
                Failure::validation(format!(
                    "{name} is not listed in {}",
                    manifest_path.display()
                ))
            })?;
        jobs.push((path.clone(), name, record.control));
    }

    let opts = WidthOptions {
        angle: args.angle.to_radians(),
        weights: if args.poisson_weights {
            FitWeights::Poisson
        } else {
            FitWeights::Uniform
        },
    };
    let results: Vec<_> = jobs
        .par_iter()
        .map(|(path, _, _)| {
            ImageFrame::read_pgm(path, cfg.pixel_pitch)
                .and_then(|frame| measure_width_with(&frame, &opts))
        })
        .collect();

    let mut rows = Vec::with_capacity(jobs.len());
    let mut status = Vec::with_capacity(jobs.len());
    for ((_, name, control), result) in jobs.iter().zip(results) {
        match result {
            Ok(m) => {
                rows.push(ScanRow {
                    control: io::control_from_lab(kind, *control, p.gamma),
                    width: Some((m.sigma, m.sigma_err)),
                });
                status.push(FrameStatus {
                    file: name.clone(),
                    control: *control,
                    status: "ok",
                    sigma_um: Some(m.sigma / UM),
                    sigma_err_um: Some(m.sigma_err / UM),
                    error: None,
                });
            }
            Err(err) => {
                log::warn!("{name}: {err}");
                rows.push(ScanRow {
                    control: io::control_from_lab(kind, *control, p.gamma),
                    width: None,
                });
                status.push(FrameStatus {
                    file: name.clone(),
                    control: *control,
                    status: "failed",
                    sigma_um: None,
                    sigma_err_um: None,
                    error: Some(err.to_string()),
                });
            }
        }
    }

    let table = ScanTable {
        scan_kind: kind,
        fixed_value: io::fixed_from_lab(kind, manifest.scan.fixed, p.gamma),
        axis: "horizontal".into(),
        gamma: p.gamma,
        rows,
    };
    let out = global.out_dir()?;
    let format = global.format.unwrap_or(Format::Csv);
    let widths = out.join(format!("widths.{}", format.ext()));
    table
        .write(&widths)
        .map_err(|e| Failure::from(e).context(widths.display()))?;
    let failed = table.failed();
    write_json(
        &out.join("analysis.json"),
        &AnalysisManifest {
            frames_dir: args.frames.display().to_string(),
            control_unit: io::control_unit(kind).to_string(),
            angle_deg: args.angle,
            pixel_pitch_um: cfg.pixel_pitch / UM,
            failed,
            frames: status,
        },
    )?;
    println!(
        "analyzed {} frames ({failed} failed), wrote {}",
        table.rows.len(),
        widths.display()
    );
    if failed == table.rows.len() {
        return Err(Failure::numerical("every frame failed to fit"));
    }
    Ok(())
}
