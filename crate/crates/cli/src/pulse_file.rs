//! Plain-text pulse files.
//!
//! The format is a block of `key value` lines followed by an
//! `omega_rad_per_s` header and one nodal amplitude per line.  Lines
//! starting with `#` and blank lines are ignored.  Every float is written
//! with 17 significant digits, which reconstructs the original `f64`
//! bit-exactly, so a write → read → write cycle is byte-identical and a
//! loaded pulse rebuilds the very envelope that was solved for.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use mspulse::grid::make_uniform_grid;
use mspulse::PulseEnvelope;

use crate::output::atomic_write;

pub const FORMAT_VERSION: u32 = 1;

/// On-disk description of a synthesized pulse.  Amplitudes are the
/// interior hat-basis node values in displacement units (rad/s); the
/// quoted per-tone peak Rabi rate lives in [`Provenance`].
#[derive(Debug, Clone, PartialEq)]
pub struct PulseFile {
    pub format_version: u32,
    pub loops: u32,
    pub tau_s: f64,
    pub delta_rad_per_s: f64,
    pub c: f64,
    pub n: usize,
    /// Sign of the enclosed phase-space area: −1 for positive envelopes.
    pub orientation: i32,
    pub omega_rad_per_s: Vec<f64>,
    pub provenance: Provenance,
}

/// How the pulse was produced; informational, not needed to replay it.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub library_version: String,
    pub rabi_max_hz: f64,
    pub area_target: f64,
    pub quadrature_order: usize,
}

/// 17 significant digits: the shortest count that round-trips every f64.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl PulseFile {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# mspulse pulse file");
        let _ = writeln!(s, "format_version {}", self.format_version);
        let _ = writeln!(s, "loops {}", self.loops);
        let _ = writeln!(s, "tau_s {}", fmt_f64(self.tau_s));
        let _ = writeln!(s, "delta_rad_per_s {}", fmt_f64(self.delta_rad_per_s));
        let _ = writeln!(s, "c {}", fmt_f64(self.c));
        let _ = writeln!(s, "n {}", self.n);
        let _ = writeln!(s, "orientation {}", self.orientation);
        let _ = writeln!(s, "provenance.library_version {}", self.provenance.library_version);
        let _ = writeln!(s, "provenance.rabi_max_hz {}", fmt_f64(self.provenance.rabi_max_hz));
        let _ = writeln!(s, "provenance.area_target {}", fmt_f64(self.provenance.area_target));
        let _ = writeln!(s, "provenance.quadrature_order {}", self.provenance.quadrature_order);
        let _ = writeln!(s, "omega_rad_per_s");
        for amp in &self.omega_rad_per_s {
            let _ = writeln!(s, "{}", fmt_f64(*amp));
        }
        s
    }

    pub fn parse(text: &str) -> Result<PulseFile, String> {
        let mut format_version = None;
        let mut loops = None;
        let mut tau_s = None;
        let mut delta = None;
        let mut c = None;
        let mut n = None;
        let mut orientation = None;
        let mut library_version = None;
        let mut rabi_max_hz = None;
        let mut area_target = None;
        let mut quadrature_order = None;
        let mut amps: Option<Vec<f64>> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = idx + 1;
            if let Some(list) = amps.as_mut() {
                let amp = parse_num::<f64>(line, lineno, "amplitude")?;
                list.push(amp);
                continue;
            }
            if line == "omega_rad_per_s" {
                amps = Some(Vec::new());
                continue;
            }
            let (key, value) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| format!("line {lineno}: expected 'key value', got '{line}'"))?;
            let value = value.trim();
            match key {
                "format_version" => {
                    format_version = Some(parse_num::<u32>(value, lineno, key)?);
                }
                "loops" => loops = Some(parse_num::<u32>(value, lineno, key)?),
                "tau_s" => tau_s = Some(parse_num::<f64>(value, lineno, key)?),
                "delta_rad_per_s" => delta = Some(parse_num::<f64>(value, lineno, key)?),
                "c" => c = Some(parse_num::<f64>(value, lineno, key)?),
                "n" => n = Some(parse_num::<usize>(value, lineno, key)?),
                "orientation" => orientation = Some(parse_num::<i32>(value, lineno, key)?),
                "provenance.library_version" => library_version = Some(value.to_string()),
                "provenance.rabi_max_hz" => {
                    rabi_max_hz = Some(parse_num::<f64>(value, lineno, key)?);
                }
                "provenance.area_target" => {
                    area_target = Some(parse_num::<f64>(value, lineno, key)?);
                }
                "provenance.quadrature_order" => {
                    quadrature_order = Some(parse_num::<usize>(value, lineno, key)?);
                }
                other => return Err(format!("line {lineno}: unknown key '{other}'")),
            }
        }

        let format_version = format_version.ok_or("missing key 'format_version'")?;
        if format_version != FORMAT_VERSION {
            return Err(format!(
                "unsupported format_version {format_version}, expected {FORMAT_VERSION}"
            ));
        }
        let n = n.ok_or("missing key 'n'")?;
        let omega = amps.ok_or("missing 'omega_rad_per_s' block")?;
        if omega.len() != n {
            return Err(format!("expected {n} amplitudes, found {}", omega.len()));
        }
        Ok(PulseFile {
            format_version,
            loops: loops.ok_or("missing key 'loops'")?,
            tau_s: tau_s.ok_or("missing key 'tau_s'")?,
            delta_rad_per_s: delta.ok_or("missing key 'delta_rad_per_s'")?,
            c: c.ok_or("missing key 'c'")?,
            n,
            orientation: orientation.ok_or("missing key 'orientation'")?,
            omega_rad_per_s: omega,
            provenance: Provenance {
                library_version: library_version
                    .ok_or("missing key 'provenance.library_version'")?,
                rabi_max_hz: rabi_max_hz.ok_or("missing key 'provenance.rabi_max_hz'")?,
                area_target: area_target.ok_or("missing key 'provenance.area_target'")?,
                quadrature_order: quadrature_order
                    .ok_or("missing key 'provenance.quadrature_order'")?,
            },
        })
    }

    pub fn load(path: &Path) -> Result<PulseFile, String> {
        let text = fs::read_to_string(path)
            .map_err(|err| format!("cannot read {}: {err}", path.display()))?;
        PulseFile::parse(&text).map_err(|err| format!("{}: {err}", path.display()))
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        atomic_write(path, &self.render())
    }

    /// Rebuild the solver-side envelope this file describes.
    pub fn to_envelope(&self) -> Result<PulseEnvelope, mspulse::Error> {
        let grid = make_uniform_grid(self.tau_s, self.n)?;
        PulseEnvelope::new(grid, self.omega_rad_per_s.clone(), self.delta_rad_per_s, self.loops, self.c)
    }
}

fn parse_num<T: core::str::FromStr>(value: &str, lineno: usize, what: &str) -> Result<T, String> {
    value
        .parse::<T>()
        .map_err(|_| format!("line {lineno}: cannot parse {what} from '{value}'"))
}
