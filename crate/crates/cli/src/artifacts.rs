//! Artifact rendering and atomic file writes.
//!
//! All numeric output uses 17 significant digits so downstream consumers can
//! reconstruct the doubles exactly; files are written to a temporary sibling
//! and renamed into place so no artifact is ever observed half-written.

use pdereduce::reduce1d::Solution1D;
use pdereduce::reduce2d::Solution2D;
use serde::Serialize;
use std::io;
use std::path::Path;

pub fn write_atomic(path: &str, bytes: &[u8]) -> io::Result<()> {
    let path = Path::new(path);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn full(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn solution_csv(sol: &Solution1D) -> String {
    let mut out = String::from("t,w,w_prime\n");
    for i in 0..sol.grid().len() {
        out.push_str(&format!(
            "{},{},{}\n",
            full(sol.grid()[i]),
            full(sol.values()[i]),
            full(sol.derivatives()[i])
        ));
    }
    out
}

#[derive(Serialize)]
struct SolutionJson<'a> {
    grid: &'a [f64],
    values: &'a [f64],
    derivatives: &'a [f64],
    domain: [f64; 2],
    left_termination: pdereduce::reduce1d::Termination,
    right_termination: pdereduce::reduce1d::Termination,
}

pub fn solution_json(sol: &Solution1D) -> String {
    let payload = SolutionJson {
        grid: sol.grid(),
        values: sol.values(),
        derivatives: sol.derivatives(),
        domain: [sol.domain().lo, sol.domain().hi],
        left_termination: sol.left_termination,
        right_termination: sol.right_termination,
    };
    serde_json::to_string_pretty(&payload).expect("serializable")
}

pub fn strips_csv(sol: &Solution2D) -> String {
    let mut out = String::from("zeta,sigma,t,s,r,p,q\n");
    for strip in sol.strips() {
        for sample in &strip.samples {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                full(strip.zeta),
                full(sample.sigma),
                full(sample.state[0]),
                full(sample.state[1]),
                full(sample.state[2]),
                full(sample.state[3]),
                full(sample.state[4])
            ));
        }
    }
    out
}

#[derive(Serialize)]
struct StripsJson<'a> {
    base: [f64; 2],
    jacobian_at_base: f64,
    max_hamiltonian_drift: f64,
    strips: &'a [pdereduce::reduce2d::CharacteristicStrip],
}

pub fn strips_json(sol: &Solution2D) -> String {
    let payload = StripsJson {
        base: [sol.base().0, sol.base().1],
        jacobian_at_base: sol.jacobian_at_base,
        max_hamiltonian_drift: sol.max_drift(),
        strips: sol.strips(),
    };
    serde_json::to_string_pretty(&payload).expect("serializable")
}

#[derive(Serialize)]
struct CoverageJson {
    base: [f64; 2],
    jacobian_at_base: f64,
    polygon: Vec<[f64; 2]>,
}

pub fn coverage_json(sol: &Solution2D) -> String {
    let payload = CoverageJson {
        base: [sol.base().0, sol.base().1],
        jacobian_at_base: sol.jacobian_at_base,
        polygon: sol
            .coverage_polygon()
            .into_iter()
            .map(|(t, s)| [t, s])
            .collect(),
    };
    serde_json::to_string_pretty(&payload).expect("serializable")
}
