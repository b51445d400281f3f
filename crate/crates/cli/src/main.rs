//! `gpa`: theory curves, ξ grids, network simulation, edge-list ingestion,
//! and posterior fitting for the piecewise power/linear preferential
//! attachment model.
//!
//! Every subcommand writes plain CSV/JSON files into `--out` together with a
//! `provenance.json` echoing the full configuration, so any output can be
//! reproduced from its sidecar. All runs are deterministic given their seed.
//!
//! Exit codes: 0 success, 2 input error, 3 solver failure, 4 sampler failure.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use gpa_core::data::{load_counts, parse_edge_list, DegreeMode};
use gpa_core::limit::{write_curve_csv, xi_grid, GridRange, LimitModel, DEFAULT_SOLVER_TOL};
use gpa_core::mcmc::{
    fit, posterior_pref_band, posterior_summary, posterior_survival_band, write_band_csv, Chain,
    SamplerConfig,
};
use gpa_core::pref::PrefParams;
use gpa_core::sim::simulate;
use gpa_core::{Error, Result};

#[derive(Parser)]
#[command(name = "gpa", version, about = "Generalized preferential attachment toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "directed-in")]
    DirectedIn,
    #[value(name = "undirected-total")]
    UndirectedTotal,
}

impl From<ModeArg> for DegreeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::DirectedIn => DegreeMode::DirectedIn,
            ModeArg::UndirectedTotal => DegreeMode::UndirectedTotal,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the limiting distribution and write its survival/pmf curve.
    Theory {
        /// Power exponent below the changeover degree.
        #[arg(long)]
        alpha: f64,
        /// Linear slope above the changeover degree.
        #[arg(long)]
        beta: f64,
        /// Preference offset (the weight of degree-0 vertices).
        #[arg(long)]
        epsilon: f64,
        /// Changeover degree.
        #[arg(long)]
        k0: u32,
        /// Largest degree in the curve CSV.
        #[arg(long, default_value_t = 1000)]
        kmax: u64,
        /// Output directory (env GPA_OUT_DIR).
        #[arg(long, env = "GPA_OUT_DIR", default_value = ".")]
        out: PathBuf,
    },
    /// Tail index over an (alpha, beta) grid at fixed epsilon and k0.
    Grid {
        /// Smallest alpha on the grid axis.
        #[arg(long)]
        alpha_min: f64,
        /// Largest alpha on the grid axis.
        #[arg(long)]
        alpha_max: f64,
        /// Number of alpha grid values (inclusive endpoints).
        #[arg(long)]
        alpha_steps: usize,
        /// Smallest beta on the grid axis.
        #[arg(long)]
        beta_min: f64,
        /// Largest beta on the grid axis.
        #[arg(long)]
        beta_max: f64,
        /// Number of beta grid values (inclusive endpoints).
        #[arg(long)]
        beta_steps: usize,
        /// Preference offset held fixed across the grid.
        #[arg(long)]
        epsilon: f64,
        /// Changeover degree held fixed across the grid.
        #[arg(long)]
        k0: u32,
        #[arg(long, env = "GPA_OUT_DIR", default_value = ".")]
        out: PathBuf,
    },
    /// Simulate network growth and write its degree counts.
    Simulate {
        /// Power exponent below the changeover degree.
        #[arg(long)]
        alpha: f64,
        /// Linear slope above the changeover degree.
        #[arg(long)]
        beta: f64,
        /// Preference offset (the weight of degree-0 vertices).
        #[arg(long)]
        epsilon: f64,
        /// Changeover degree.
        #[arg(long)]
        k0: u32,
        /// Final number of vertices.
        #[arg(long)]
        n: u64,
        /// Edges brought by each new vertex.
        #[arg(long, default_value_t = 1)]
        m: u32,
        /// RNG seed; identical seeds reproduce the run exactly.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the empirical survival CSV.
        #[arg(long)]
        survival: bool,
        #[arg(long, env = "GPA_OUT_DIR", default_value = ".")]
        out: PathBuf,
    },
    /// Parse an edge list into canonical degree counts.
    Ingest {
        /// Whitespace-delimited edge list ('%'/'#' comment lines allowed).
        #[arg(long)]
        input: PathBuf,
        /// Degree notion: in-degree or total incident endpoints.
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, env = "GPA_OUT_DIR", default_value = ".")]
        out: PathBuf,
    },
    /// Fit the model to a degree-count CSV by adaptive MCMC.
    Fit {
        /// Degree-count CSV with header (degree, count).
        #[arg(long)]
        counts: PathBuf,
        /// Truncation level: minimum degree included in the likelihood.
        #[arg(long, default_value_t = 0)]
        l: u64,
        /// Total MCMC iterations per chain.
        #[arg(long, default_value_t = 50_000)]
        iters: usize,
        /// Iterations discarded before summarizing.
        #[arg(long, default_value_t = 10_000)]
        burnin: usize,
        /// Number of independent chains (seeds seed, seed+1, ...).
        #[arg(long, default_value_t = 1)]
        chains: usize,
        /// Base RNG seed; identical invocations reproduce byte-for-byte.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "GPA_OUT_DIR", default_value = ".")]
        out: PathBuf,
    },
}

fn write_json<P: AsRef<Path>, T: Serialize>(path: P, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| Error::Data(e.to_string()))?;
    writeln!(f)?;
    Ok(())
}

fn create_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

fn cmd_theory(alpha: f64, beta: f64, epsilon: f64, k0: u32, kmax: u64, out: &Path) -> Result<()> {
    create_out(out)?;
    let params = PrefParams::new(alpha, beta, epsilon, k0)?;
    let model = LimitModel::solve(params, DEFAULT_SOLVER_TOL)?;
    write_curve_csv(&model, kmax, BufWriter::new(File::create(out.join("theory.csv"))?))?;
    write_json(
        out.join("theory.json"),
        &json!({
            "lambda_star": model.lambda_star(),
            "xi": model.tail_index(),
            "igp": model.igp_approx(),
        }),
    )?;
    write_json(
        out.join("provenance.json"),
        &json!({
            "command": "theory",
            "version": version(),
            "params": params,
            "kmax": kmax,
            "solver_tol": DEFAULT_SOLVER_TOL,
        }),
    )?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_grid(
    alpha: GridRange,
    beta: GridRange,
    epsilon: f64,
    k0: u32,
    out: &Path,
) -> Result<()> {
    create_out(out)?;
    let grid = xi_grid(&alpha, &beta, epsilon, k0, DEFAULT_SOLVER_TOL)?;
    if grid.n_valid() == 0 {
        return Err(Error::Solver("no grid cell admitted a solution".into()));
    }
    grid.write_csv(BufWriter::new(File::create(out.join("grid.csv"))?))?;
    // Cells straddling the linear-preference tail index 1/2.
    grid.write_contour_csv(0.5, BufWriter::new(File::create(out.join("contour.csv"))?))?;
    write_json(
        out.join("provenance.json"),
        &json!({
            "command": "grid",
            "version": version(),
            "alpha": alpha,
            "beta": beta,
            "epsilon": epsilon,
            "k0": k0,
            "valid_cells": grid.n_valid(),
            "total_cells": grid.cells.len(),
            "solver_tol": DEFAULT_SOLVER_TOL,
        }),
    )?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    alpha: f64,
    beta: f64,
    epsilon: f64,
    k0: u32,
    n: u64,
    m: u32,
    seed: u64,
    survival: bool,
    out: &Path,
) -> Result<()> {
    create_out(out)?;
    let params = PrefParams::new(alpha, beta, epsilon, k0)?;
    let counts = simulate(&params, n, m, seed)?;
    counts.write_csv(BufWriter::new(File::create(out.join("counts.csv"))?))?;
    if survival {
        let mut w = BufWriter::new(File::create(out.join("empirical_survival.csv"))?);
        writeln!(w, "k,survival")?;
        for (k, v) in counts.empirical_survival() {
            writeln!(w, "{},{:.16e}", k, v)?;
        }
    }
    write_json(
        out.join("metadata.json"),
        &json!({
            "command": "simulate",
            "version": version(),
            "params": params,
            "n_vertices": n,
            "m": m,
            "seed": seed,
            "max_degree": counts.max_degree(),
            "total_vertices": counts.total_vertices(),
        }),
    )?;
    Ok(())
}

fn cmd_ingest(input: &Path, mode: DegreeMode, out: &Path) -> Result<()> {
    create_out(out)?;
    let counts = parse_edge_list(BufReader::new(File::open(input)?), mode)?;
    counts.write_csv(BufWriter::new(File::create(out.join("counts.csv"))?))?;
    write_json(
        out.join("metadata.json"),
        &json!({
            "command": "ingest",
            "version": version(),
            "mode": mode,
            "l": counts.truncation(),
            "source": input,
            "total_vertices": counts.total_vertices(),
            "max_degree": counts.max_degree(),
        }),
    )?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_fit(
    counts_path: &Path,
    l: u64,
    iters: usize,
    burnin: usize,
    n_chains: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    if burnin >= iters {
        return Err(Error::Data(format!("burn-in {burnin} must be below iterations {iters}")));
    }
    if n_chains == 0 {
        return Err(Error::Data("need at least one chain".into()));
    }
    create_out(out)?;
    let counts = load_counts(BufReader::new(File::open(counts_path)?))?;
    let counts = counts.truncate(l)?;
    let cfg = SamplerConfig { iterations: iters, burn_in: burnin, ..SamplerConfig::default() };

    // Independent chains run concurrently on consecutive seeds.
    let results: Vec<Result<Chain>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..n_chains)
            .map(|i| {
                let counts = &counts;
                let cfg = &cfg;
                scope.spawn(move || fit(counts, l, cfg, seed + i as u64))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect()
    });
    let chains = results.into_iter().collect::<Result<Vec<_>>>()?;

    for (i, chain) in chains.iter().enumerate() {
        chain.write_csv(BufWriter::new(File::create(out.join(format!("chain_{i}.csv")))?))?;
    }

    // Pooled post-burn-in draws drive the summary and the bands.
    let pooled = Chain {
        draws: chains.iter().flat_map(|c| c.retained(burnin).iter().copied()).collect(),
        accepted_continuous: chains.iter().map(|c| c.accepted_continuous).sum(),
        accepted_k0: chains.iter().map(|c| c.accepted_k0).sum(),
        seed,
        config: cfg,
    };
    let per_chain: Vec<_> = chains
        .iter()
        .map(|c| posterior_summary(c, burnin))
        .collect::<Result<Vec<_>>>()?;
    let pooled_summary = posterior_summary(&pooled, 0)?;
    write_json(
        out.join("summary.json"),
        &json!({ "pooled": pooled_summary, "chains": per_chain }),
    )?;

    let ks = band_grid(counts.max_degree());
    let surv = posterior_survival_band(&pooled, 0, &ks, 0.95)?;
    write_band_csv(&surv, BufWriter::new(File::create(out.join("survival_band.csv"))?))?;
    let pref = posterior_pref_band(&pooled, 0, &ks, 0.95)?;
    write_band_csv(&pref, BufWriter::new(File::create(out.join("pref_band.csv"))?))?;

    write_json(
        out.join("provenance.json"),
        &json!({
            "command": "fit",
            "version": version(),
            "counts": counts_path,
            "l": l,
            "iterations": iters,
            "burn_in": burnin,
            "chains": n_chains,
            "seed": seed,
            "config": cfg,
        }),
    )?;
    Ok(())
}

/// Roughly log-spaced degree grid from 0 to the maximum observed degree.
fn band_grid(max_degree: u64) -> Vec<u64> {
    let mut ks = vec![0u64];
    let mut k = 1u64;
    while k <= max_degree {
        ks.push(k);
        k = (k + 1).max((k as f64 * 1.25) as u64);
    }
    ks.push(max_degree);
    ks.dedup();
    ks
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Theory { alpha, beta, epsilon, k0, kmax, out } => {
            cmd_theory(alpha, beta, epsilon, k0, kmax, &out)
        }
        Cmd::Grid {
            alpha_min,
            alpha_max,
            alpha_steps,
            beta_min,
            beta_max,
            beta_steps,
            epsilon,
            k0,
            out,
        } => cmd_grid(
            GridRange { min: alpha_min, max: alpha_max, steps: alpha_steps },
            GridRange { min: beta_min, max: beta_max, steps: beta_steps },
            epsilon,
            k0,
            &out,
        ),
        Cmd::Simulate { alpha, beta, epsilon, k0, n, m, seed, survival, out } => {
            cmd_simulate(alpha, beta, epsilon, k0, n, m, seed, survival, &out)
        }
        Cmd::Ingest { input, mode, out } => cmd_ingest(&input, mode.into(), &out),
        Cmd::Fit { counts, l, iters, burnin, chains, seed, out } => {
            cmd_fit(&counts, l, iters, burnin, chains, seed, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Solver(_) => 3,
                Error::Sampler(_) => 4,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}
