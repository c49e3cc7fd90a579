use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::csv::write_csv;
use super::svg::render_fig1_svg;
use super::sweep::{default_grid, run_sweep, MatchSelection, SweepConfig, SweepRecord};
use crate::channel::CutoffPolicy;
use crate::error::Result;
use crate::fock::TolProfile;
use crate::states::MeasureKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fig1Panel {
    Pssv,
    Psi01,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig1SeriesSpec {
    /// File stem of the series CSV.
    pub id: String,
    pub label: String,
    pub panel: Fig1Panel,
    pub state: String,
}

impl Fig1SeriesSpec {
    fn new(id: &str, label: &str, panel: Fig1Panel, state: &str) -> Self {
        Fig1SeriesSpec { id: id.into(), label: label.into(), panel, state: state.into() }
    }

    /// PSSV states with (entropy in bits, energy per mode) of (0.1, 0.013) and
    /// (1.0, 0.3), and c0|00> + c1|11> with |c1|^2 in {0.5, 0.25, 0.05}.
    /// PSSV energies in the state specs are totals over both modes.
    pub fn defaults() -> Vec<Self> {
        vec![
            Self::new("pssv_e0_0.013", "PSSV eps0=0.1, E0=0.013", Fig1Panel::Pssv, "pssv:energy=0.026"),
            Self::new("pssv_e0_0.3", "PSSV eps0=1.0, E0=0.3", Fig1Panel::Pssv, "pssv:energy=0.6"),
            Self::new("psi01_c1sq_0.5", "psi01 |c1|^2=0.5", Fig1Panel::Psi01, "psi01:c1sq=0.5"),
            Self::new("psi01_c1sq_0.25", "psi01 |c1|^2=0.25", Fig1Panel::Psi01, "psi01:c1sq=0.25"),
            Self::new("psi01_c1sq_0.05", "psi01 |c1|^2=0.05", Fig1Panel::Psi01, "psi01:c1sq=0.05"),
        ]
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Fig1Config {
    pub series: Vec<Fig1SeriesSpec>,
    pub b_over_a: Vec<f64>,
    pub entanglement_measure: MeasureKind,
    pub cutoff: CutoffPolicy,
    pub tolerances: TolProfile,
    pub check: bool,
}

impl Default for Fig1Config {
    fn default() -> Self {
        Fig1Config {
            series: Fig1SeriesSpec::defaults(),
            b_over_a: default_grid(),
            entanglement_measure: MeasureKind::Entropy,
            cutoff: CutoffPolicy::default(),
            tolerances: TolProfile::default(),
            check: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Fig1Series {
    pub spec: Fig1SeriesSpec,
    pub records: Vec<SweepRecord>,
}

/// Run both matchings over the grid for every series.
pub fn fig1(config: &Fig1Config) -> Result<Vec<Fig1Series>> {
    config
        .series
        .iter()
        .map(|spec| {
            let sweep = SweepConfig {
                state: spec.state.clone(),
                match_kind: MatchSelection::Both,
                entanglement_measure: config.entanglement_measure,
                b_over_a: config.b_over_a.clone(),
                cutoff: config.cutoff,
                tolerances: config.tolerances,
                check: config.check,
                output: None,
            };
            Ok(Fig1Series { spec: spec.clone(), records: run_sweep(&sweep)? })
        })
        .collect()
}

/// Write one CSV per series (and optionally `fig1.svg`) into `dir`.
pub fn write_fig1(dir: &Path, series: &[Fig1Series], svg: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for s in series {
        let path = dir.join(format!("fig1_{}.csv", s.spec.id));
        write_csv(BufWriter::new(fs::File::create(&path)?), &s.records)?;
        written.push(path);
    }
    if svg {
        let path = dir.join("fig1.svg");
        fs::write(&path, render_fig1_svg(series))?;
        written.push(path);
    }
    Ok(written)
}
