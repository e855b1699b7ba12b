//! Single simulations and density tables for the `simulate` and `density`
//! commands.

use serde::Serialize;

use super::{to_json_17, Params};
use crate::besq::{besq_transition_density, simulate_besq_euler, simulate_besq_exact, BesqParams};
use crate::cladogram::{run_tracked_chain, sample_uniform_cladogram};
use crate::error::{param, Result};
use crate::exit_law::{exit_density_besq, exit_density_nwf, SeriesTruncation};
use crate::rng::RandomStream;
use crate::simplex::{simulate_nwf_euler, simulate_nwf_skew_product, simulate_wf, NwfParams, SimplexState};
use crate::textio::CsvTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimulateKind {
    Besq,
    Nwf,
    Wf,
    Clado,
}

impl SimulateKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "besq" => Some(Self::Besq),
            "nwf" => Some(Self::Nwf),
            "wf" => Some(Self::Wf),
            "clado" => Some(Self::Clado),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    ExitNwf,
    ExitBesq,
    BesqTransition,
}

impl DensityKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exit-nwf" => Some(Self::ExitNwf),
            "exit-besq" => Some(Self::ExitBesq),
            "besq-transition" => Some(Self::BesqTransition),
            _ => None,
        }
    }
}

/// Files to write, by name.
#[derive(Debug, Clone, Default)]
pub struct ToolOutput {
    pub files: Vec<(String, String)>,
}

fn json_file<T: Serialize>(name: &str, v: &T) -> (String, String) {
    (name.to_string(), to_json_17(v))
}

fn simplex_setup(params: &Params, delta_default: f64) -> Result<(NwfParams, SimplexState)> {
    let delta = params.vec_f64("delta", &[delta_default; 3])?;
    let n = delta.len();
    let z = params.vec_f64("z", &vec![1.0 / n as f64; n])?;
    Ok((NwfParams::new(delta)?, SimplexState::new(z)?))
}

pub fn simulate_table(kind: SimulateKind, params: &Params, seed: u64) -> Result<ToolOutput> {
    let mut stream = RandomStream::new(seed, 0);
    let mut out = ToolOutput::default();
    match kind {
        SimulateKind::Besq => {
            let dimension = params.f64("dimension", -1.0)?;
            let start = params.f64("start", 1.0)?;
            let step = params.f64("step", 1e-3)?;
            let horizon = params.f64("horizon", 10.0)?;
            let path = match params.string("method", "euler")?.as_str() {
                "euler" => simulate_besq_euler(BesqParams::new(dimension, start)?, step, horizon, &mut stream)?,
                "exact" => {
                    let n = (horizon / step).ceil() as usize;
                    let times: Vec<f64> = (0..=n).map(|k| (k as f64 * step).min(horizon)).collect();
                    simulate_besq_exact(dimension, start, &times, &mut stream)?
                }
                m => return param(format!("unknown method '{m}' (euler or exact)")),
            };
            out.files.push(("besq_path.csv".into(), path.to_csv().to_string_lossy()));
        }
        SimulateKind::Nwf => {
            let (p, start) = simplex_setup(params, 0.5)?;
            let step = params.f64("step", 1e-4)?;
            let (path, exit) = match params.string("method", "euler")?.as_str() {
                "euler" => simulate_nwf_euler(&p, &start, step, &mut stream)?,
                "skew" => simulate_nwf_skew_product(&p, &start, step, &mut stream)?,
                m => return param(format!("unknown method '{m}' (euler or skew)")),
            };
            out.files.push(("nwf_path.csv".into(), path.to_csv().to_string_lossy()));
            out.files.push(json_file("exit.json", &exit));
        }
        SimulateKind::Wf => {
            let delta = params.vec_f64("delta", &[0.5; 3])?;
            let n = delta.len();
            let z = params.vec_f64("z", &vec![1.0 / n as f64; n])?;
            let step = params.f64("step", 1e-4)?;
            let horizon = params.f64("horizon", 1.0)?;
            let path = simulate_wf(&delta, &SimplexState::new(z)?, step, horizon, &mut stream)?;
            out.files.push(("wf_path.csv".into(), path.to_csv().to_string_lossy()));
        }
        SimulateKind::Clado => {
            let n = params.usize("n", 10)?;
            let steps = params.usize("steps", 1000)?;
            let poissonized = params.bool("poissonized", false)?;
            let which = params.usize("branchpoint", 0)?;
            let mut tree = sample_uniform_cladogram(n, &mut stream)?;
            let bs = tree.branchpoints();
            let Some(&b) = bs.get(which) else {
                return param(format!("branchpoint index {which} out of range (tree has {})", bs.len()));
            };
            let start = tree.to_newick();
            let run = run_tracked_chain(&mut tree, b, steps, poissonized, &mut stream)?;
            out.files.push(("chain.csv".into(), run.to_csv()));
            out.files.push(("tree_start.nwk".into(), format!("{start}\n")));
            out.files.push(("tree_end.nwk".into(), format!("{}\n", tree.to_newick())));
        }
    }
    Ok(out)
}

fn truncation(params: &Params) -> Result<SeriesTruncation> {
    SeriesTruncation::new(params.usize("max_n", 60)?, params.f64("tol", 1e-10)?)
}

pub fn density_table(kind: DensityKind, params: &Params) -> Result<ToolOutput> {
    let points = params.usize("points", 101)?;
    if points < 2 {
        return param("need at least 2 grid points");
    }
    let mut out = ToolOutput::default();
    match kind {
        DensityKind::ExitNwf => {
            let delta = params.vec_f64("delta", &[0.5; 3])?;
            let n = delta.len();
            let z = params.vec_f64("z", &vec![1.0 / n as f64; n])?;
            let face = params.usize("face", 0)?;
            let trunc = truncation(params)?;
            if n != 3 || face > 2 {
                return param("exit-nwf tables are drawn along a face of the 2-simplex (three types)");
            }
            let free = if face == 0 { 1 } else { 0 };
            let other = 3 - face - free;
            let mut t = CsvTable::new(["u", "density", "blocks_used", "converged"]);
            for k in 1..points {
                let u = k as f64 / points as f64;
                let mut x = [0.0; 3];
                x[free] = u;
                x[other] = 1.0 - u;
                let v = exit_density_nwf(&z, &delta, face, &x, trunc)?;
                t.push(vec![u, v.value, v.blocks_used as f64, v.converged as u8 as f64]);
            }
            t.metadata.push(("free_coordinate".into(), free.to_string()));
            out.files.push(("exit_nwf_density.csv".into(), t.to_string_lossy()));
        }
        DensityKind::ExitBesq => {
            let theta = params.vec_f64("theta", &[1.0, 1.0])?;
            let n = theta.len();
            let z = params.vec_f64("z", &vec![1.0; n])?;
            let face = params.usize("face", 0)?;
            let ymax = params.f64("ymax", 4.0)?;
            let trunc = truncation(params)?;
            if n != 2 || face > 1 {
                return param("exit-besq tables are for two coordinates");
            }
            let mut t = CsvTable::new(["y", "density", "blocks_used", "converged"]);
            for k in 1..=points {
                let y = ymax * k as f64 / points as f64;
                let mut pt = [0.0; 2];
                pt[1 - face] = y;
                let v = exit_density_besq(&z, &theta, face, &pt, trunc)?;
                t.push(vec![y, v.value, v.blocks_used as f64, v.converged as u8 as f64]);
            }
            out.files.push(("exit_besq_density.csv".into(), t.to_string_lossy()));
        }
        DensityKind::BesqTransition => {
            let dimension = params.f64("dimension", 4.0)?;
            let from = params.f64("from", 1.0)?;
            let elapsed = params.f64("t", 0.5)?;
            let ymax = params.f64("ymax", 6.0)?;
            let mut t = CsvTable::new(["y", "density"]);
            for k in 1..=points {
                let y = ymax * k as f64 / points as f64;
                t.push(vec![y, besq_transition_density(dimension, from, y, elapsed)?]);
            }
            out.files.push(("besq_transition_density.csv".into(), t.to_string_lossy()));
        }
    }
    Ok(out)
}
