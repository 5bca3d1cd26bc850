//! On-disk formats.
//!
//! Files carry laboratory units (MHz, Γ, µm, nm, quanta/ms) and name them in
//! every column header or field name. Readers convert to SI immediately.
//! Floats are written in shortest round-trip form, so reading a file and
//! writing it back reproduces it byte for byte.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibration::{Axis, DisplacementPair, G2FitResult, G2Histogram, MagnificationResult};
use crate::constants::{AMU, TWO_PI};
use crate::error::{Error, Result};
use crate::imaging::ImagingConfig;
use crate::inference::{HeatingFitResult, ScanDataset, ScanKind, ScanPoint};
use crate::physics::ExperimentParams;

/// rad/s per MHz of ordinary frequency.
pub const MHZ: f64 = TWO_PI * 1e6;
pub const UM: f64 = 1e-6;
pub const NM: f64 = 1e-9;
pub const NS: f64 = 1e-9;

fn parse_f64(field: &str, what: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {line}: {what} {field:?} is not a number")))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Experiment parameters

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MassUnit {
    #[default]
    #[serde(rename = "kg")]
    Kg,
    #[serde(rename = "amu")]
    Amu,
}

/// `Hz`, `kHz` and `MHz` are ordinary frequencies and pick up a 2π.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FrequencyUnit {
    #[default]
    #[serde(rename = "rad/s")]
    RadPerSecond,
    #[serde(rename = "Hz")]
    Hz,
    #[serde(rename = "kHz")]
    KHz,
    #[serde(rename = "MHz")]
    MHz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LengthUnit {
    #[default]
    #[serde(rename = "m")]
    M,
    #[serde(rename = "um")]
    Um,
    #[serde(rename = "nm")]
    Nm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AngleUnit {
    #[default]
    #[serde(rename = "rad")]
    Rad,
    #[serde(rename = "deg")]
    Deg,
}

impl MassUnit {
    fn to_si(self, v: f64) -> f64 {
        match self {
            MassUnit::Kg => v,
            MassUnit::Amu => v * AMU,
        }
    }
}

impl FrequencyUnit {
    fn to_si(self, v: f64) -> f64 {
        match self {
            FrequencyUnit::RadPerSecond => v,
            FrequencyUnit::Hz => v * TWO_PI,
            FrequencyUnit::KHz => v * TWO_PI * 1e3,
            FrequencyUnit::MHz => v * TWO_PI * 1e6,
        }
    }
}

impl LengthUnit {
    fn to_si(self, v: f64) -> f64 {
        match self {
            LengthUnit::M => v,
            LengthUnit::Um => v * UM,
            LengthUnit::Nm => v * NM,
        }
    }
}

impl AngleUnit {
    fn to_si(self, v: f64) -> f64 {
        match self {
            AngleUnit::Rad => v,
            AngleUnit::Deg => v.to_radians(),
        }
    }
}

/// Per-field units of a parameter document; omitted fields are SI.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamUnits {
    pub mass: MassUnit,
    pub gamma: FrequencyUnit,
    pub trap_omega: FrequencyUnit,
    pub wavelength: LengthUnit,
    pub alpha: AngleUnit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    mass: f64,
    gamma: f64,
    wavelength: f64,
    trap_omega: f64,
    alpha: f64,
    xi: f64,
    #[serde(default)]
    units: ParamUnits,
}

pub fn params_from_json(text: &str) -> Result<ExperimentParams> {
    let doc: ParamsDoc = serde_json::from_str(text)?;
    let u = doc.units;
    let p = ExperimentParams {
        mass: u.mass.to_si(doc.mass),
        gamma: u.gamma.to_si(doc.gamma),
        wavelength: u.wavelength.to_si(doc.wavelength),
        trap_omega: u.trap_omega.to_si(doc.trap_omega),
        alpha: u.alpha.to_si(doc.alpha),
        xi: doc.xi,
    };
    p.validate()?;
    Ok(p)
}

/// SI values with the units block spelled out.
pub fn params_to_json(p: &ExperimentParams) -> String {
    let doc = ParamsDoc {
        mass: p.mass,
        gamma: p.gamma,
        wavelength: p.wavelength,
        trap_omega: p.trap_omega,
        alpha: p.alpha,
        xi: p.xi,
        units: ParamUnits::default(),
    };
    serde_json::to_string_pretty(&doc).expect("plain struct serializes")
}

pub fn read_params(path: &Path) -> Result<ExperimentParams> {
    params_from_json(&fs::read_to_string(path)?)
}

pub fn write_params(path: &Path, p: &ExperimentParams) -> Result<()> {
    write_text(path, &params_to_json(p))
}

// ---------------------------------------------------------------------------
// Imaging configuration

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ImagingDoc {
    magnification: f64,
    magnification_err: f64,
    sigma_psf_um: f64,
    sigma_psf_err_um: f64,
    pixel_pitch_um: f64,
    background: f64,
    gain: f64,
    read_noise: f64,
    excess_noise_factor: f64,
}

impl Default for ImagingDoc {
    fn default() -> Self {
        Self::from(&ImagingConfig::default())
    }
}

impl From<&ImagingConfig> for ImagingDoc {
    fn from(c: &ImagingConfig) -> Self {
        Self {
            magnification: c.magnification,
            magnification_err: c.magnification_err,
            sigma_psf_um: c.sigma_psf / UM,
            sigma_psf_err_um: c.sigma_psf_err / UM,
            pixel_pitch_um: c.pixel_pitch / UM,
            background: c.background,
            gain: c.gain,
            read_noise: c.read_noise,
            excess_noise_factor: c.excess_noise_factor,
        }
    }
}

/// Missing fields take the [`ImagingConfig::default`] values.
pub fn imaging_from_json(text: &str) -> Result<ImagingConfig> {
    let d: ImagingDoc = serde_json::from_str(text)?;
    let cfg = ImagingConfig {
        magnification: d.magnification,
        sigma_psf: d.sigma_psf_um * UM,
        background: d.background,
        gain: d.gain,
        read_noise: d.read_noise,
        pixel_pitch: d.pixel_pitch_um * UM,
        excess_noise_factor: d.excess_noise_factor,
        magnification_err: d.magnification_err,
        sigma_psf_err: d.sigma_psf_err_um * UM,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn imaging_to_json(cfg: &ImagingConfig) -> String {
    serde_json::to_string_pretty(&ImagingDoc::from(cfg)).expect("plain struct serializes")
}

pub fn read_imaging(path: &Path) -> Result<ImagingConfig> {
    imaging_from_json(&fs::read_to_string(path)?)
}

pub fn write_imaging(path: &Path, cfg: &ImagingConfig) -> Result<()> {
    write_text(path, &imaging_to_json(cfg))
}

// ---------------------------------------------------------------------------
// Scan tables

/// Rabi frequencies are written in units of Γ, detunings in MHz.
pub fn control_to_lab(kind: ScanKind, control: f64, gamma: f64) -> f64 {
    match kind {
        ScanKind::RabiScan => control / gamma,
        ScanKind::DetuningScan => control / MHZ,
    }
}

pub fn control_from_lab(kind: ScanKind, value: f64, gamma: f64) -> f64 {
    match kind {
        ScanKind::RabiScan => value * gamma,
        ScanKind::DetuningScan => value * MHZ,
    }
}

pub fn fixed_to_lab(kind: ScanKind, fixed: f64, gamma: f64) -> f64 {
    match kind {
        ScanKind::RabiScan => fixed / MHZ,
        ScanKind::DetuningScan => fixed / gamma,
    }
}

pub fn fixed_from_lab(kind: ScanKind, value: f64, gamma: f64) -> f64 {
    match kind {
        ScanKind::RabiScan => value * MHZ,
        ScanKind::DetuningScan => value * gamma,
    }
}

pub fn control_column(kind: ScanKind) -> &'static str {
    match kind {
        ScanKind::RabiScan => "control_gamma",
        ScanKind::DetuningScan => "control_MHz",
    }
}

pub fn control_unit(kind: ScanKind) -> &'static str {
    match kind {
        ScanKind::RabiScan => "gamma",
        ScanKind::DetuningScan => "MHz",
    }
}

pub fn fixed_unit(kind: ScanKind) -> &'static str {
    match kind {
        ScanKind::RabiScan => "MHz",
        ScanKind::DetuningScan => "gamma",
    }
}

/// One analysed frame. `width` is `None` when the fit failed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    /// rad/s.
    pub control: f64,
    /// (σ, σ_err), m.
    pub width: Option<(f64, f64)>,
}

/// A scan with its metadata, as stored on disk: a `# {json}` header line,
/// a column line, then one row per frame including failed ones.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub scan_kind: ScanKind,
    /// rad/s.
    pub fixed_value: f64,
    pub axis: String,
    /// Linewidth used for the Γ-unit columns, rad/s.
    pub gamma: f64,
    pub rows: Vec<ScanRow>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScanHeader {
    scan_kind: ScanKind,
    axis: String,
    fixed_value: f64,
    fixed_unit: String,
    control_unit: String,
    gamma_rad_per_s: f64,
}

impl ScanTable {
    pub fn from_dataset(ds: &ScanDataset, gamma: f64) -> Self {
        Self {
            scan_kind: ds.scan_kind,
            fixed_value: ds.fixed_value,
            axis: ds.axis.clone(),
            gamma,
            rows: ds
                .points
                .iter()
                .map(|p| ScanRow {
                    control: p.control,
                    width: Some((p.sigma, p.sigma_err)),
                })
                .collect(),
        }
    }

    /// Successful rows only.
    pub fn dataset(&self) -> ScanDataset {
        let points = self
            .rows
            .iter()
            .filter_map(|r| {
                r.width.map(|(sigma, sigma_err)| ScanPoint {
                    control: r.control,
                    sigma,
                    sigma_err,
                })
            })
            .collect();
        ScanDataset {
            scan_kind: self.scan_kind,
            fixed_value: self.fixed_value,
            axis: self.axis.clone(),
            points,
        }
    }

    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.width.is_none()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# {}\n",
            serde_json::to_string(&self.header()).expect("header serializes")
        );
        out.push_str(&format!(
            "{},sigma_um,sigma_err_um,status\n",
            control_column(self.scan_kind)
        ));
        for r in &self.rows {
            let c = control_to_lab(self.scan_kind, r.control, self.gamma);
            match r.width {
                Some((s, e)) => out.push_str(&format!("{c},{},{},ok\n", s / UM, e / UM)),
                None => out.push_str(&format!("{c},,,failed\n")),
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Parse("empty scan file".into()))?;
        let json = first.strip_prefix('#').ok_or_else(|| {
            Error::Parse("scan file must start with a '# {json}' header line".into())
        })?;
        let h: ScanHeader = serde_json::from_str(json.trim())?;
        check_header(&h)?;
        let body: String = lines.collect::<Vec<_>>().join("\n");
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let cols = rdr.headers().map_err(csv_error)?.clone();
        let want = [control_column(h.scan_kind), "sigma_um", "sigma_err_um"];
        if cols.len() < 3 || cols.iter().take(3).ne(want.iter().copied()) {
            return Err(Error::Parse(format!(
                "expected columns {}, found {:?}",
                want.join(","),
                cols
            )));
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(csv_error)?;
            let line = i + 3;
            if rec.len() < 3 {
                return Err(Error::Parse(format!(
                    "line {line}: expected at least 3 fields"
                )));
            }
            let control = control_from_lab(
                h.scan_kind,
                parse_f64(&rec[0], "control", line)?,
                h.gamma_rad_per_s,
            );
            let ok = rec.get(3).is_none_or(|s| s == "ok");
            let width = if ok {
                let s = parse_f64(&rec[1], "sigma_um", line)? * UM;
                let e = parse_f64(&rec[2], "sigma_err_um", line)? * UM;
                Some((s, e))
            } else {
                None
            };
            rows.push(ScanRow { control, width });
        }
        Ok(Self {
            scan_kind: h.scan_kind,
            fixed_value: fixed_from_lab(h.scan_kind, h.fixed_value, h.gamma_rad_per_s),
            axis: h.axis,
            gamma: h.gamma_rad_per_s,
            rows,
        })
    }

    pub fn to_json(&self) -> String {
        let doc = ScanTableDoc {
            header: self.header(),
            rows: self
                .rows
                .iter()
                .map(|r| ScanRowDoc {
                    control: control_to_lab(self.scan_kind, r.control, self.gamma),
                    sigma_um: r.width.map(|w| w.0 / UM),
                    sigma_err_um: r.width.map(|w| w.1 / UM),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("plain struct serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScanTableDoc = serde_json::from_str(text)?;
        let h = doc.header;
        check_header(&h)?;
        let rows = doc
            .rows
            .iter()
            .map(|r| ScanRow {
                control: control_from_lab(h.scan_kind, r.control, h.gamma_rad_per_s),
                width: r
                    .sigma_um
                    .zip(r.sigma_err_um)
                    .map(|(s, e)| (s * UM, e * UM)),
            })
            .collect();
        Ok(Self::with_header(h, rows))
    }

    /// Format chosen by extension: `.json` or CSV otherwise.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        {
            Self::from_json(&text)
        } else {
            Self::from_csv(&text)
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        {
            write_text(path, &self.to_json())
        } else {
            write_text(path, &self.to_csv())
        }
    }

    fn header(&self) -> ScanHeader {
        ScanHeader {
            scan_kind: self.scan_kind,
            axis: self.axis.clone(),
            fixed_value: fixed_to_lab(self.scan_kind, self.fixed_value, self.gamma),
            fixed_unit: fixed_unit(self.scan_kind).to_string(),
            control_unit: control_unit(self.scan_kind).to_string(),
            gamma_rad_per_s: self.gamma,
        }
    }

    fn with_header(h: ScanHeader, rows: Vec<ScanRow>) -> Self {
        Self {
            scan_kind: h.scan_kind,
            fixed_value: fixed_from_lab(h.scan_kind, h.fixed_value, h.gamma_rad_per_s),
            axis: h.axis,
            gamma: h.gamma_rad_per_s,
            rows,
        }
    }
}

fn check_header(h: &ScanHeader) -> Result<()> {
    if h.control_unit != control_unit(h.scan_kind) || h.fixed_unit != fixed_unit(h.scan_kind) {
        return Err(Error::Parse(format!(
            "{:?} files use control unit {} and fixed unit {}",
            h.scan_kind,
            control_unit(h.scan_kind),
            fixed_unit(h.scan_kind)
        )));
    }
    if !(h.gamma_rad_per_s.is_finite() && h.gamma_rad_per_s > 0.0) {
        return Err(Error::Parse("gamma_rad_per_s must be > 0".into()));
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ScanRowDoc {
    control: f64,
    sigma_um: Option<f64>,
    sigma_err_um: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScanTableDoc {
    #[serde(flatten)]
    header: ScanHeader,
    rows: Vec<ScanRowDoc>,
}

/// Plot-ready model curve: control in lab units, width in µm.
pub fn curve_to_csv(kind: ScanKind, gamma: f64, curve: &[(f64, f64)]) -> String {
    let mut out = format!("{},sigma_model_um\n", control_column(kind));
    for &(c, s) in curve {
        out.push_str(&format!("{},{}\n", control_to_lab(kind, c, gamma), s / UM));
    }
    out
}

// ---------------------------------------------------------------------------
// Correlation histograms

/// Columns `tau_ns,g2_value[,g2_err]`. A header line is optional.
pub fn g2_to_csv(h: &G2Histogram) -> String {
    let mut out = String::from(if h.errors.is_some() {
        "tau_ns,g2_value,g2_err\n"
    } else {
        "tau_ns,g2_value\n"
    });
    for (i, (&t, &v)) in h.bin_centers.iter().zip(&h.values).enumerate() {
        match &h.errors {
            Some(e) => out.push_str(&format!("{},{v},{}\n", t / NS, e[i])),
            None => out.push_str(&format!("{},{v}\n", t / NS)),
        }
    }
    out
}

/// Bin width is taken as the mean spacing of the bin centres.
pub fn g2_from_csv<R: Read>(input: R) -> Result<G2Histogram> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut centers = Vec::new();
    let mut values = Vec::new();
    let mut errors = Vec::new();
    let mut ncols = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = i + 1;
        if i == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            if rec.len() < 2 {
                return Err(Error::Parse(
                    "g2 file needs columns tau_ns,g2_value[,g2_err]".into(),
                ));
            }
            continue;
        }
        let n = rec.len();
        if n < 2 {
            return Err(Error::Parse(format!(
                "line {line}: g2 file needs columns tau_ns,g2_value[,g2_err], found {n} column"
            )));
        }
        if *ncols.get_or_insert(n) != n {
            return Err(Error::Parse(format!(
                "line {line}: inconsistent column count"
            )));
        }
        centers.push(parse_f64(&rec[0], "tau_ns", line)? * NS);
        values.push(parse_f64(&rec[1], "g2_value", line)?);
        if n >= 3 {
            errors.push(parse_f64(&rec[2], "g2_err", line)?);
        }
    }
    if centers.len() < 2 {
        return Err(Error::Parse("g2 file has fewer than 2 bins".into()));
    }
    let bin_width = (centers[centers.len() - 1] - centers[0]) / (centers.len() - 1) as f64;
    let h = G2Histogram {
        bin_centers: centers,
        values,
        bin_width,
        errors: (!errors.is_empty()).then_some(errors),
    };
    h.validate()?;
    Ok(h)
}

pub fn read_g2(path: &Path) -> Result<G2Histogram> {
    g2_from_csv(fs::File::open(path)?)
}

pub fn write_g2(path: &Path, h: &G2Histogram) -> Result<()> {
    write_text(path, &g2_to_csv(h))
}

// ---------------------------------------------------------------------------
// Displacement pairs

const DISPLACEMENT_COLUMNS: [&str; 5] = [
    "axis",
    "object_shift_nm",
    "object_shift_err_nm",
    "image_shift_um",
    "image_shift_err_um",
];

pub fn displacements_to_csv(pairs: &[DisplacementPair]) -> String {
    let mut out = DISPLACEMENT_COLUMNS.join(",") + "\n";
    for p in pairs {
        let axis = match p.axis {
            Axis::X => "x",
            Axis::Y => "y",
        };
        out.push_str(&format!(
            "{axis},{},{},{},{}\n",
            p.object_shift / NM,
            p.object_shift_err / NM,
            p.image_shift / UM,
            p.image_shift_err / UM
        ));
    }
    out
}

pub fn displacements_from_csv<R: Read>(input: R) -> Result<Vec<DisplacementPair>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let cols = rdr.headers().map_err(csv_error)?.clone();
    if cols.iter().ne(DISPLACEMENT_COLUMNS.iter().copied()) {
        return Err(Error::Parse(format!(
            "expected columns {}, found {:?}",
            DISPLACEMENT_COLUMNS.join(","),
            cols
        )));
    }
    let mut pairs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = i + 2;
        let axis = match rec[0].to_ascii_lowercase().as_str() {
            "x" => Axis::X,
            "y" => Axis::Y,
            other => return Err(Error::Parse(format!("line {line}: unknown axis {other:?}"))),
        };
        pairs.push(DisplacementPair {
            axis,
            object_shift: parse_f64(&rec[1], "object_shift_nm", line)? * NM,
            object_shift_err: parse_f64(&rec[2], "object_shift_err_nm", line)? * NM,
            image_shift: parse_f64(&rec[3], "image_shift_um", line)? * UM,
            image_shift_err: parse_f64(&rec[4], "image_shift_err_um", line)? * UM,
        });
    }
    if pairs.is_empty() {
        return Err(Error::Parse("no displacement rows".into()));
    }
    Ok(pairs)
}

pub fn read_displacements(path: &Path) -> Result<Vec<DisplacementPair>> {
    displacements_from_csv(fs::File::open(path)?)
}

// ---------------------------------------------------------------------------
// Result reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatingPointReport {
    pub control: f64,
    pub sigma_um: f64,
    pub sigma_err_um: f64,
    pub model_um: f64,
    pub residual_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatingReport {
    pub scan_kind: ScanKind,
    pub axis: String,
    pub control_unit: String,
    pub zeta_quanta_per_ms: f64,
    pub zeta_err_quanta_per_ms: f64,
    pub sigma_psf_um: f64,
    pub sigma_psf_err_um: f64,
    /// Covariance of (ζ [quanta/ms], σ_PSF [µm]).
    pub covariance: [[f64; 2]; 2],
    pub covariance_units: [String; 2],
    pub chi2: f64,
    pub reduced_chi2: f64,
    pub iterations: usize,
    /// Mode whose quantum ħω converts ζ into a power.
    pub reference_trap_omega_rad_per_s: f64,
    pub reference_mode_note: String,
    pub points: Vec<HeatingPointReport>,
}

impl HeatingReport {
    pub fn new(ds: &ScanDataset, fit: &HeatingFitResult, gamma: f64) -> Self {
        let zs = 1e-3;
        let scale = [zs, 1.0 / UM];
        let mut cov = fit.covariance;
        for (i, row) in cov.iter_mut().enumerate() {
            for (j, c) in row.iter_mut().enumerate() {
                *c *= scale[i] * scale[j];
            }
        }
        let points = ds
            .points
            .iter()
            .zip(fit.model.iter().zip(&fit.residuals))
            .map(|(p, (&m, &r))| HeatingPointReport {
                control: control_to_lab(ds.scan_kind, p.control, gamma),
                sigma_um: p.sigma / UM,
                sigma_err_um: p.sigma_err / UM,
                model_um: m / UM,
                residual_um: r / UM,
            })
            .collect();
        Self {
            scan_kind: ds.scan_kind,
            axis: ds.axis.clone(),
            control_unit: control_unit(ds.scan_kind).to_string(),
            zeta_quanta_per_ms: fit.zeta.quanta_per_ms(),
            zeta_err_quanta_per_ms: fit.zeta_err * zs,
            sigma_psf_um: fit.sigma_psf / UM,
            sigma_psf_err_um: fit.sigma_psf_err / UM,
            covariance: cov,
            covariance_units: ["quanta/ms".into(), "um".into()],
            chi2: fit.chi2,
            reduced_chi2: fit.reduced_chi2,
            iterations: fit.iterations,
            reference_trap_omega_rad_per_s: fit.reference_trap_omega,
            reference_mode_note: "zeta is per axis and converted to power with hbar times the analysed axis frequency"
                .into(),
            points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnificationReport {
    pub mx: f64,
    pub mx_err: f64,
    pub my: f64,
    pub my_err: f64,
    pub m: f64,
    pub m_err: f64,
    pub units: String,
    pub pairs_x: usize,
    pub pairs_y: usize,
    pub outliers_x: Vec<usize>,
    pub outliers_y: Vec<usize>,
}

impl From<&MagnificationResult> for MagnificationReport {
    fn from(r: &MagnificationResult) -> Self {
        Self {
            mx: r.x.value,
            mx_err: r.x.err,
            my: r.y.value,
            my_err: r.y.err,
            m: r.combined,
            m_err: r.combined_err,
            units: "dimensionless (image shift / object shift)".into(),
            pairs_x: r.x.n_pairs,
            pairs_y: r.y.n_pairs,
            outliers_x: r.x.outliers.clone(),
            outliers_y: r.y.outliers.clone(),
        }
    }
}

/// Rates in rad/µs, times in ns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiReport {
    pub omega_prime_per_us: f64,
    pub omega_prime_err_per_us: f64,
    pub detuning_per_us: f64,
    pub rabi_per_us: f64,
    pub rabi_err_per_us: f64,
    pub rabi_over_gamma: Option<f64>,
    pub bg: f64,
    pub bg_err: f64,
    pub amplitude: f64,
    pub amplitude_err: f64,
    pub t0_ns: f64,
    pub t0_err_ns: f64,
    pub tau_ns: f64,
    pub tau_err_ns: f64,
    pub reduced_chi2: f64,
}

impl RabiReport {
    /// `detuning`, `rabi`, `rabi_err` and `gamma` in rad/s.
    pub fn new(
        fit: &G2FitResult,
        detuning: f64,
        rabi: f64,
        rabi_err: f64,
        gamma: Option<f64>,
    ) -> Self {
        let us = 1e-6;
        Self {
            omega_prime_per_us: fit.omega_prime * us,
            omega_prime_err_per_us: fit.omega_prime_err * us,
            detuning_per_us: detuning * us,
            rabi_per_us: rabi * us,
            rabi_err_per_us: rabi_err * us,
            rabi_over_gamma: gamma.map(|g| rabi / g),
            bg: fit.bg,
            bg_err: fit.bg_err,
            amplitude: fit.amplitude,
            amplitude_err: fit.amplitude_err,
            t0_ns: fit.t0 / NS,
            t0_err_ns: fit.t0_err / NS,
            tau_ns: fit.tau / NS,
            tau_err_ns: fit.tau_err / NS,
            reduced_chi2: fit.reduced_chi2,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}
