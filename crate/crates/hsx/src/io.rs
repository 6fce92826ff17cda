//! File formats: state JSON, snapshot CSVs with tail sidecars, trajectory
//! index, metric report, stability certificate, run manifest.
//!
//! Floats are written with the shortest round-trip formatting so identical
//! runs produce byte-identical files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::measure::RadonMeasure;
use crate::metric::{CertificateRow, LipschitzCertificate};
use crate::pwl::PiecewiseLinear;
use crate::state::{EulerianState, LagrangianState, Tails};

/// JSON schema for an Eulerian pair:
/// {"u": {"knots": [[x, v], ...], "tail_minus": v, "tail_plus": v},
///  "mu": {"atoms": [[x, m], ...], "density_knots": [[x, d], ...]}}
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateJson {
    pub u: ProfileJson,
    pub mu: MeasureJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileJson {
    pub knots: Vec<[f64; 2]>,
    pub tail_minus: f64,
    pub tail_plus: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureJson {
    pub atoms: Vec<[f64; 2]>,
    pub density_knots: Vec<[f64; 2]>,
}

impl StateJson {
    pub fn from_state(s: &EulerianState) -> Self {
        StateJson {
            u: ProfileJson {
                knots: s.u.knots().iter().map(|&(x, v)| [x, v]).collect(),
                tail_minus: s.u.value_minus(),
                tail_plus: s.u.value_plus(),
            },
            mu: MeasureJson {
                atoms: s.mu.atoms.iter().map(|&(x, m)| [x, m]).collect(),
                density_knots: s.mu.density_knots.iter().map(|&(x, d)| [x, d]).collect(),
            },
        }
    }

    pub fn into_state(self) -> Result<EulerianState> {
        let knots: Vec<(f64, f64)> = self.u.knots.iter().map(|k| (k[0], k[1])).collect();
        let u = PiecewiseLinear::new(knots)?;
        if (u.value_minus() - self.u.tail_minus).abs() > 1e-12 {
            return Err(Error::validation(
                "u.tail_minus",
                "tail must equal the first knot value",
            ));
        }
        if (u.value_plus() - self.u.tail_plus).abs() > 1e-12 {
            return Err(Error::validation(
                "u.tail_plus",
                "tail must equal the last knot value",
            ));
        }
        let mu = RadonMeasure::new(
            self.mu.atoms.iter().map(|a| (a[0], a[1])).collect(),
            self.mu.density_knots.iter().map(|k| (k[0], k[1])).collect(),
        )?;
        EulerianState::new(u, mu)
    }
}

pub fn read_state_json(path: &Path) -> Result<EulerianState> {
    let text = fs::read_to_string(path)?;
    let js: StateJson =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    js.into_state()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(format!("serialize {}: {e}", path.display())))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Lagrangian snapshot: CSV `xi,y,U,H` plus a JSON sidecar with the tails.
pub fn write_lagrangian_snapshot(dir: &Path, stem: &str, x: &LagrangianState) -> Result<Vec<PathBuf>> {
    let csv = dir.join(format!("{stem}.csv"));
    let mut f = fs::File::create(&csv)?;
    writeln!(f, "xi,y,U,H")?;
    for i in 0..x.n() {
        writeln!(f, "{},{},{},{}", x.grid.node(i), x.y[i], x.u[i], x.h[i])?;
    }
    let sidecar = dir.join(format!("{stem}_tails.json"));
    write_json(&sidecar, &TailsSidecar { tails: x.tails, grid: x.grid.clone() })?;
    Ok(vec![csv, sidecar])
}

#[derive(Serialize)]
struct TailsSidecar {
    tails: Tails,
    grid: Grid,
}

/// Eulerian snapshot: CSV `x,u` over the profile knots plus the measure JSON.
pub fn write_eulerian_snapshot(dir: &Path, stem: &str, s: &EulerianState) -> Result<Vec<PathBuf>> {
    let csv = dir.join(format!("{stem}.csv"));
    let mut f = fs::File::create(&csv)?;
    writeln!(f, "x,u")?;
    for &(x, v) in s.u.knots() {
        writeln!(f, "{x},{v}")?;
    }
    let sidecar = dir.join(format!("{stem}_measure.json"));
    write_json(
        &sidecar,
        &MeasureJson {
            atoms: s.mu.atoms.iter().map(|&(x, m)| [x, m]).collect(),
            density_knots: s.mu.density_knots.iter().map(|&(x, d)| [x, d]).collect(),
        },
    )?;
    Ok(vec![csv, sidecar])
}

#[derive(Serialize)]
pub struct TrajectoryIndex {
    pub times: Vec<f64>,
    pub h_infinity: f64,
    pub grid: Grid,
    pub snapshots: Vec<String>,
}

pub fn write_certificate_csv(path: &Path, cert: &LipschitzCertificate) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "pair_id,t,d0,dt,ratio,fitted_C")?;
    for row in &cert.rows {
        let CertificateRow { pair_id, t, d0, dt, ratio } = row;
        let ratio_str = ratio.map(|r| r.to_string()).unwrap_or_else(|| "skipped".into());
        writeln!(f, "{pair_id},{t},{d0},{dt},{ratio_str},{}", cert.fitted_c)?;
    }
    Ok(())
}

/// Machine-readable error envelope printed on stderr by the CLI.
#[derive(Serialize)]
pub struct ErrorEnvelope {
    pub error: ErrorBody,
}

#[derive(Serialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
}

impl ErrorEnvelope {
    pub fn from_error(e: &Error) -> Self {
        ErrorEnvelope {
            error: ErrorBody { kind: e.kind().to_string(), message: e.to_string() },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_json_roundtrip() {
        let json = r#"{
            "u": {"knots": [[0.0, 0.0], [1.0, -1.0]], "tail_minus": 0.0, "tail_plus": -1.0},
            "mu": {"atoms": [], "density_knots": [[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]}
        }"#;
        let js: StateJson = serde_json::from_str(json).unwrap();
        let state = js.into_state().unwrap();
        assert_eq!(state.u.eval(0.5), -0.5);
        let back = StateJson::from_state(&state);
        assert_eq!(back.u.knots.len(), 2);
        assert_eq!(back.mu.density_knots.len(), 4);
    }

    #[test]
    fn mismatched_tail_is_rejected() {
        let json = r#"{
            "u": {"knots": [[0.0, 0.0], [1.0, -1.0]], "tail_minus": 0.5, "tail_plus": -1.0},
            "mu": {"atoms": [], "density_knots": [[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]}
        }"#;
        let js: StateJson = serde_json::from_str(json).unwrap();
        assert!(js.into_state().is_err());
    }
}
