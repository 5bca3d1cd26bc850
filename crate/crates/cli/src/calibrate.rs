use std::path::PathBuf;

use clap::{Args, Subcommand};
use thermoscope::calibration::{
    fit_g2, magnification_from_pairs, on_resonance_rabi, on_resonance_rabi_err,
};
use thermoscope::io::{self, MagnificationReport, RabiReport, MHZ};

use crate::common::{write_json, write_text, CmdResult, Failure, Format, GlobalArgs};

#[derive(Debug, Clone, Subcommand)]
pub enum CalibrateCommand {
    /// Magnification from ion and image displacements
    Magnification(MagnificationArgs),

    /// On-resonance Rabi frequency from a g² histogram
    Rabi(RabiArgs),
}

#[derive(Debug, Clone, Args)]
pub struct MagnificationArgs {
    /// CSV: axis,object_shift_nm,object_shift_err_nm,image_shift_um,image_shift_err_um
    #[arg(long, value_name = "FILE")]
    pub pairs: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RabiArgs {
    /// CSV: tau_ns,g2_value[,g2_err]
    #[arg(long, value_name = "FILE")]
    pub g2: PathBuf,

    /// Probe detuning during the measurement, MHz
    #[arg(long, allow_hyphen_values = true)]
    pub detuning: f64,

    /// Uncertainty of the detuning, MHz
    #[arg(long, default_value_t = 0.0)]
    pub detuning_err: f64,
}

fn rows_csv(rows: &[(&str, f64, f64, &str)]) -> String {
    let mut text = String::from("quantity,value,error,unit\n");
    for (name, v, e, unit) in rows {
        text.push_str(&format!("{name},{v},{e},{unit}\n"));
    }
    text
}

pub fn run(global: &GlobalArgs, cmd: &CalibrateCommand) -> CmdResult {
    match cmd {
        CalibrateCommand::Magnification(args) => magnification(global, args),
        CalibrateCommand::Rabi(args) => rabi(global, args),
    }
}

fn magnification(global: &GlobalArgs, args: &MagnificationArgs) -> CmdResult {
    let pairs = io::read_displacements(&args.pairs)
        .map_err(|e| Failure::from(e).context(args.pairs.display()))?;
    let result = magnification_from_pairs(&pairs)?;
    if !result.consistent() {
        log::warn!("displacement pairs contain outliers");
    }
    let report = MagnificationReport::from(&result);
    let out = global.out_dir()?;
    match global.format.unwrap_or(Format::Json) {
        Format::Json => write_json(&out.join("magnification.json"), &report)?,
        Format::Csv => write_text(
            &out.join("magnification.csv"),
            &rows_csv(&[
                ("mx", report.mx, report.mx_err, "1"),
                ("my", report.my, report.my_err, "1"),
                ("m", report.m, report.m_err, "1"),
            ]),
        )?,
    }
    println!(
        "Mx = {:.2} ± {:.2}, My = {:.2} ± {:.2}, M = {:.2} ± {:.2}",
        report.mx, report.mx_err, report.my, report.my_err, report.m, report.m_err
    );
    Ok(())
}

fn rabi(global: &GlobalArgs, args: &RabiArgs) -> CmdResult {
    let hist = io::read_g2(&args.g2).map_err(|e| Failure::from(e).context(args.g2.display()))?;
    let gamma = global.params_opt()?.map(|p| p.gamma);
    let fit = fit_g2(&hist, None)?;
    let detuning = args.detuning * MHZ;
    let rabi = on_resonance_rabi(fit.omega_prime, detuning)?;
    let rabi_err = on_resonance_rabi_err(
        fit.omega_prime,
        fit.omega_prime_err,
        detuning,
        args.detuning_err * MHZ,
    )?;
    let report = RabiReport::new(&fit, detuning, rabi, rabi_err, gamma);
    let out = global.out_dir()?;
    match global.format.unwrap_or(Format::Json) {
        Format::Json => write_json(&out.join("rabi.json"), &report)?,
        Format::Csv => write_text(
            &out.join("rabi.csv"),
            &rows_csv(&[
                (
                    "omega_prime",
                    report.omega_prime_per_us,
                    report.omega_prime_err_per_us,
                    "1/us",
                ),
                ("rabi", report.rabi_per_us, report.rabi_err_per_us, "1/us"),
                ("tau", report.tau_ns, report.tau_err_ns, "ns"),
                ("t0", report.t0_ns, report.t0_err_ns, "ns"),
            ]),
        )?,
    }
    println!(
        "Omega' = {:.2} ± {:.2} /us, Omega = {:.2} ± {:.2} /us",
        report.omega_prime_per_us,
        report.omega_prime_err_per_us,
        report.rabi_per_us,
        report.rabi_err_per_us
    );
    Ok(())
}
