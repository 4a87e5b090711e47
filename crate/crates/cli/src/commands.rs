use std::path::Path;

use momentforge::dist::{self, DiscreteDistribution};
use momentforge::dp::{self, DpConfig, PrivacyBudget};
use momentforge::experiment::{self, Generator, TrialRecord};
use momentforge::popmle::{self, NpmleConfig};
use momentforge::recovery::{self, RecoveryConfig};
use momentforge::sde::{self, LinearOperator, SdeConfig};
use momentforge::io;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::args::{DpSynthArgs, ExperimentDpArgs, PopmleArgs, RecoverArgs, SdeArgs};
use crate::manifest::{write_report, RunManifest};
use crate::CliError;

/// Exit status for a finished run whose solver stopped early.
fn convergence(converged: bool, what: &str) -> Result<(), CliError> {
    if converged {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!("{what} did not converge; outputs were written")))
    }
}

pub fn recover(a: &RecoverArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new(
        "recover",
        json!({ "moments": a.moments, "k": a.k, "grid": a.grid, "max_iters": a.max_iters }),
        None,
    );
    manifest.digest_input(&a.moments)?;
    let moments = io::read_moments(&a.moments)?;
    let k = a.k.unwrap_or(moments.k());
    if k > moments.k() {
        return Err(CliError::Validation(format!(
            "--k {k} exceeds the {} moments in {}",
            moments.k(),
            a.moments.display()
        )));
    }
    let moments = moments.truncated(k);
    let mut cfg = RecoveryConfig::new(k)?;
    if let Some(g) = a.grid {
        cfg.g = g;
    }
    if let Some(it) = a.max_iters {
        cfg.solver.max_iters = it;
    }
    let r = recovery::recover_distribution(&moments, &cfg)?;
    io::write_distribution(&a.out, &r.distribution)?;
    write_report(
        a.report.as_deref(),
        &manifest,
        json!({
            "k": k,
            "grid_size": r.grid_size,
            "support_size": r.distribution.len(),
            "gamma": r.report.gamma,
            "w1_bound": r.report.w1_bound,
            "w1_bound_conjectured": r.report.w1_bound_conjectured,
            "objective": r.solution.objective,
            "iterations": r.solution.iterations,
            "converged": r.converged(),
        }),
    )?;
    convergence(r.converged(), "moment regression")
}

pub fn dp_synth(a: &DpSynthArgs) -> Result<(), CliError> {
    if a.evaluate && a.dim != 1 {
        return Err(CliError::Validation("--evaluate is only available for one-dimensional data".into()));
    }
    let mut manifest = RunManifest::new(
        "dp-synth",
        json!({
            "data": a.data, "epsilon": a.epsilon, "delta": a.delta, "dim": a.dim,
            "lo": a.lo, "hi": a.hi, "evaluate": a.evaluate,
        }),
        Some(a.seed),
    );
    manifest.digest_input(&a.data)?;
    let budget = PrivacyBudget::new(a.epsilon, a.delta)?;
    let mut data = io::read_dataset(&a.data, a.dim)?;
    if let (Some(lo), Some(hi)) = (a.lo, a.hi) {
        data = io::affine_rescale(&data, lo, hi)?;
    }
    let cfg = DpConfig::new(budget);
    let out = if a.dim == 1 {
        dp::dp_synthesize(&data, &cfg, a.seed)?
    } else {
        dp::dp_synthesize_multi(&data, a.dim, &cfg, a.seed)?
    };
    io::write_distribution(&a.out, &out.distribution)?;
    let w1 = if a.evaluate {
        let clamped: Vec<f64> = data.iter().map(|x| x.clamp(-1.0, 1.0)).collect();
        let p = DiscreteDistribution::uniform(1, clamped)?;
        Some(dist::w1_distance(&p, &out.distribution)?)
    } else {
        None
    };
    let r = &out.report;
    write_report(
        a.report.as_deref(),
        &manifest,
        json!({
            "n": r.n,
            "k": r.k,
            "r": r.r,
            "sigma2": r.sigma2,
            "gamma": r.gamma,
            "w1_vs_input": w1,
            "expected_bound": r.expected_bound,
            "hp_bound_beta05": r.hp_bound_beta05,
            "details": r,
        }),
    )?;
    convergence(r.converged, "private release solver")
}

fn load_operator(path: &Path) -> Result<Box<dyn LinearOperator>, CliError> {
    let dense = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    Ok(if dense {
        Box::new(io::read_dense_matrix(path)?)
    } else {
        Box::new(io::read_matrix_market(path)?)
    })
}

pub fn sde(a: &SdeArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new(
        "sde",
        json!({
            "matrix": a.matrix, "eps": a.eps, "delta": a.delta,
            "force_probes": a.force_probes, "probe_constant": a.probe_constant,
        }),
        Some(a.seed),
    );
    manifest.digest_input(&a.matrix)?;
    let op = load_operator(&a.matrix)?;
    let mut cfg = SdeConfig::new(a.eps, a.delta, a.seed)?;
    cfg.force_probes = a.force_probes;
    if let Some(c) = a.probe_constant {
        cfg.probe_constant = c;
    }
    let out = sde::estimate_spectral_density(op.as_ref(), &cfg)?;
    io::write_distribution(&a.out, &out.distribution)?;
    let r = &out.report;
    write_report(
        a.report.as_deref(),
        &manifest,
        json!({
            "n": r.n,
            "S": r.s,
            "k": r.k,
            "gamma": r.gamma,
            "matvecs": r.matvecs,
            "budget_formula_value": r.budget_formula_value,
            "details": r,
        }),
    )?;
    convergence(r.lp_feasible, "moment-band fit")
}

pub fn popmle(a: &PopmleArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new(
        "popmle",
        json!({
            "obs": a.obs, "t": a.t, "grid": a.grid, "tol": a.tol,
            "max_iters": a.max_iters, "truth": a.truth,
        }),
        None,
    );
    manifest.digest_input(&a.obs)?;
    if let Some(t) = &a.truth {
        manifest.digest_input(t)?;
    }
    let obs = io::read_observations(&a.obs)?;
    let fp = popmle::fingerprint(&obs, a.t)?;
    let cfg = NpmleConfig { grid_size: a.grid, tolerance: a.tol, max_iters: a.max_iters };
    let r = popmle::npmle_em(&fp, &cfg)?;
    io::write_distribution(&a.out, &r.distribution)?;
    let scores = match &a.truth {
        Some(path) => {
            let truth = io::read_distribution(path)?;
            let naive = popmle::naive_estimator(&obs, a.t)?;
            Some(json!({
                "w1_mle": popmle::w1_unit_interval(&truth, &r.distribution)?,
                "w1_naive": popmle::w1_unit_interval(&truth, &naive)?,
            }))
        }
        None => None,
    };
    write_report(
        a.report.as_deref(),
        &manifest,
        json!({
            "coins": fp.coins(),
            "t": a.t,
            "grid": a.grid,
            "iterations": r.iterations,
            "converged": r.converged,
            "log_likelihood": r.log_likelihood,
            "truth": scores,
        }),
    )?;
    convergence(r.converged, "EM")
}

#[derive(Serialize)]
struct Row {
    n: usize,
    trial: usize,
    w1: f64,
    expected_bound: f64,
}

pub fn experiment_dp(a: &ExperimentDpArgs) -> Result<(), CliError> {
    for (name, n) in [("--nmin", a.nmin), ("--nmax", a.nmax)] {
        if !n.is_power_of_two() || n < 2 {
            return Err(CliError::Validation(format!("{name} {n} must be a power of two >= 2")));
        }
    }
    if a.nmin > a.nmax || a.trials == 0 || a.jobs == 0 {
        return Err(CliError::Validation("need nmin <= nmax, trials >= 1 and jobs >= 1".into()));
    }
    let generator = Generator::from(a.dist);
    let manifest = RunManifest::new(
        "experiment-dp",
        json!({
            "dist": generator.name(), "nmin": a.nmin, "nmax": a.nmax, "trials": a.trials,
            "epsilon": a.epsilon, "delta": a.delta, "jobs": a.jobs,
        }),
        Some(a.seed),
    );
    let ns: Vec<usize> = std::iter::successors(Some(a.nmin), |n| Some(n * 2))
        .take_while(|&n| n <= a.nmax)
        .collect();
    let cells: Vec<(usize, usize)> = ns
        .iter()
        .flat_map(|&n| (0..a.trials).map(move |t| (n, t)))
        .collect();
    let sampler = generator.sampler();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let records: Vec<TrialRecord> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(n, t)| experiment::run_dp_trial(generator, &sampler, n, t, a.epsilon, a.delta, a.seed))
            .collect::<Result<_, _>>()
    })?;

    let mut w = csv::Writer::from_path(&a.out)
        .map_err(|e| CliError::Input(format!("{}: {e}", a.out.display())))?;
    for r in &records {
        w.serialize(Row { n: r.n, trial: r.trial, w1: r.w1, expected_bound: r.expected_bound })
            .map_err(|e| CliError::Input(format!("{}: {e}", a.out.display())))?;
    }
    w.flush().map_err(|e| CliError::Input(format!("{}: {e}", a.out.display())))?;

    let means: Vec<(f64, f64)> = ns
        .iter()
        .map(|&n| {
            let ws: Vec<f64> = records.iter().filter(|r| r.n == n).map(|r| r.w1).collect();
            (n as f64, ws.iter().sum::<f64>() / ws.len() as f64)
        })
        .collect();
    let slope = (means.len() > 1).then(|| experiment::log_log_slope(&means));
    let unconverged = records.iter().filter(|r| !r.converged).count();
    write_report(
        a.report.as_deref(),
        &manifest,
        json!({
            "mean_w1": means.iter().map(|(n, w)| json!({ "n": *n as usize, "mean_w1": w })).collect::<Vec<_>>(),
            "slope": slope,
            "unconverged_trials": unconverged,
        }),
    )?;
    if let Some(s) = slope {
        println!("log-log slope of mean W1 against n: {s:.4}");
    }
    Ok(())
}

