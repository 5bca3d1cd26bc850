use std::path::PathBuf;

use clap::{Args, ValueEnum};
use thermoscope::inference::{fit_heating_rate_with, model_curve, HeatingFitOptions, Weighting};
use thermoscope::io::{self, HeatingReport, ScanTable};

use crate::common::{write_json, write_text, CmdResult, Failure, Format, GlobalArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    InverseVariance,
    Unweighted,
}

#[derive(Debug, Clone, Args)]
pub struct FitHeatingArgs {
    /// Width table written by `analyze` (CSV or JSON)
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,

    #[arg(long, value_enum, default_value = "inverse-variance")]
    pub weighting: WeightingArg,

    /// Samples in the model curve file; 0 skips it
    #[arg(long, default_value_t = 200)]
    pub curve_samples: usize,
}

pub fn run(global: &GlobalArgs, args: &FitHeatingArgs) -> CmdResult {
    let p = global.params()?;
    let cfg = global.imaging()?;
    let table =
        ScanTable::read(&args.data).map_err(|e| Failure::from(e).context(args.data.display()))?;
    if table.failed() > 0 {
        log::warn!(
            "{} failed rows in {} are skipped",
            table.failed(),
            args.data.display()
        );
    }
    if (table.gamma / p.gamma - 1.0).abs() > 1e-12 {
        log::warn!(
            "linewidth in {} ({:.6e} rad/s) differs from --params ({:.6e} rad/s)",
            args.data.display(),
            table.gamma,
            p.gamma
        );
    }
    let ds = table.dataset();
    ds.validate()?;
    let opts = HeatingFitOptions {
        weighting: match args.weighting {
            WeightingArg::InverseVariance => Weighting::InverseVariance,
            WeightingArg::Unweighted => Weighting::Unweighted,
        },
    };
    let fit = fit_heating_rate_with(&ds, &p, cfg.magnification, &opts)?;
    let report = HeatingReport::new(&ds, &fit, table.gamma);

    let out = global.out_dir()?;
    match global.format.unwrap_or(Format::Json) {
        Format::Json => write_json(&out.join("heating_fit.json"), &report)?,
        Format::Csv => {
            let mut text = format!(
                "# zeta_quanta_per_ms={} zeta_err_quanta_per_ms={} sigma_psf_um={} sigma_psf_err_um={}\n",
                report.zeta_quanta_per_ms, report.zeta_err_quanta_per_ms, report.sigma_psf_um, report.sigma_psf_err_um
            );
            text.push_str(&format!(
                "{},sigma_um,sigma_err_um,model_um,residual_um\n",
                io::control_column(ds.scan_kind)
            ));
            for pt in &report.points {
                text.push_str(&format!(
                    "{},{},{},{},{}\n",
                    pt.control, pt.sigma_um, pt.sigma_err_um, pt.model_um, pt.residual_um
                ));
            }
            write_text(&out.join("heating_fit.csv"), &text)?;
        }
    }
    if args.curve_samples > 0 {
        let curve = model_curve(&ds, &fit, &p, cfg.magnification, args.curve_samples)?;
        write_text(
            &out.join("heating_curve.csv"),
            &io::curve_to_csv(ds.scan_kind, table.gamma, &curve),
        )?;
    }
    println!(
        "zeta = {:.4} ± {:.4} quanta/ms, sigma_psf = {:.3} ± {:.3} um, reduced chi2 = {:.3}",
        report.zeta_quanta_per_ms,
        report.zeta_err_quanta_per_ms,
        report.sigma_psf_um,
        report.sigma_psf_err_um,
        report.reduced_chi2
    );
    Ok(())
}
