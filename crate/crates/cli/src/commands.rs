use std::path::Path;

use serde_json::{json, Value};

use rwdre_core::estimators::{regenerative_estimates, RegenerativeOptions};
use rwdre_core::infection::walker_and_front;
use rwdre_core::io;
use rwdre_core::oracle::{exact_pmf_poisson, exact_walker_pmf};
use rwdre_core::regeneration::{record_times, RegenerationConfig, RegenerationScan};
use rwdre_core::sweep::{run_sweep, Phase, SweepConfig};
use rwdre_core::verify::{run_verify, VerifyOptions};
use rwdre_core::walker::{coupling_report, find_empty_interval, run_ghost, run_walker};
use rwdre_core::{Environment, Error, Result, SpaceTimePoint};

use crate::args::{
    FileConfig, GhostArgs, InfectionArgs, OracleArgs, RegenArgs, SimulateArgs, SweepArgs, VerifyArgs,
};
use crate::Outcome;

const EMPTY_INTERVAL_SEARCH: u64 = 100_000;

fn ok(summary: Value) -> Result<Outcome> {
    Ok(Outcome {
        summary,
        violation: false,
    })
}

fn checked(summary: Value, violation: bool) -> Result<Outcome> {
    Ok(Outcome { summary, violation })
}

fn status(violation: bool) -> &'static str {
    if violation {
        "violation"
    } else {
        "ok"
    }
}

fn wrote(path: &Option<std::path::PathBuf>) {
    if let Some(p) = path {
        eprintln!("wrote {}", p.display());
    }
}

pub fn simulate(file: &FileConfig, a: SimulateArgs) -> Result<Outcome> {
    let params = file.params(&a.model)?;
    let steps = a.steps.or(file.steps).unwrap_or(1000);
    let format = file.format(&a.output)?;
    let out = file.out(&a.output);
    let env = Environment::from_parts(params, file.sites(&a.sites)?)?;
    let path = run_walker(&env, SpaceTimePoint::ORIGIN, steps as usize)?;
    if let Some(p) = &out {
        io::write_path(p, &path, format)?;
    }
    wrote(&out);
    ok(json!({
        "command": "simulate",
        "status": "ok",
        "params": params,
        "steps": steps,
        "final_x": path.last(),
        "speed": if steps > 0 { path.last() as f64 / steps as f64 } else { 0.0 },
        "out": out,
    }))
}

pub fn ghost(file: &FileConfig, a: GhostArgs) -> Result<Outcome> {
    let params = file.params(&a.model)?;
    let steps = a.steps.or(file.steps).unwrap_or(1000);
    let anchor = SpaceTimePoint::new(a.x.or(file.x).unwrap_or(0), a.t.or(file.t).unwrap_or(0));
    let format = file.format(&a.output)?;
    let out = file.out(&a.output);
    let env = Environment::from_parts(params, file.sites(&a.sites)?)?;
    let report = coupling_report(&env, anchor, steps)?;
    let ghost = run_ghost(&env, anchor, steps as usize);
    let scan = a
        .ell
        .or(file.ell)
        .map(|ell| find_empty_interval(&env, ell, EMPTY_INTERVAL_SEARCH))
        .transpose()?;
    if let Some(p) = &out {
        io::write_path(p, &ghost, format)?;
    }
    wrote(&out);
    let violation = report.domination_ok == Some(false);
    checked(
        json!({
            "command": "ghost",
            "status": status(violation),
            "params": params,
            "coupling": report,
            "ghost_final": ghost.last(),
            "empty_interval": scan,
            "out": out,
        }),
        violation,
    )
}

pub fn infection(file: &FileConfig, a: InfectionArgs) -> Result<Outcome> {
    let params = file.params(&a.model)?;
    let horizon = a.horizon.or(file.horizon).unwrap_or(1000);
    let format = file.format(&a.output)?;
    let out = file.out(&a.output);
    let env = Environment::from_parts(params, file.sites(&a.sites)?)?;
    let wf = walker_and_front(&env, horizon)?;
    if let Some(p) = &out {
        io::write_front(p, &wf.front.front, format)?;
    }
    wrote(&out);
    let r = &wf.report;
    let violation = r.hypotheses_hold && (!r.violations.is_empty() || !r.parity_ok);
    checked(
        json!({
            "command": "infection",
            "status": status(violation),
            "params": params,
            "horizon": horizon,
            "hypotheses_hold": r.hypotheses_hold,
            "violations": r.violations.len(),
            "first_violation": r.violations.first(),
            "parity_ok": r.parity_ok,
            "walker_final": r.walker_final,
            "front_final": r.front_final,
            "first_seed_site": wf.front.first_seed_site,
            "infected": wf.front.state.infected.len(),
            "out": out,
        }),
        violation,
    )
}

pub fn regen(file: &FileConfig, a: RegenArgs) -> Result<Outcome> {
    let params = file.params(&a.model)?;
    let v_star = a.v_star.or(file.v_star).unwrap_or(0.5);
    let horizon = a.horizon.or(file.horizon).unwrap_or(5000);
    let post = a.post_window.or(file.post_window).unwrap_or(horizon.min(1000));
    let replicas = a.replicas.or(file.replicas).unwrap_or(1);
    let format = file.format(&a.output)?;
    let out = file.out(&a.output);
    let config = RegenerationConfig::new(v_star, horizon, post)?;
    if replicas == 0 {
        return Err(Error::Config("replicas must be at least 1".into()));
    }
    if replicas == 1 {
        let env = Environment::poisson(params)?;
        let scan = RegenerationScan::new(&env, config)?;
        let outcome = scan.outcome();
        let chain = scan.chain();
        if let Some(p) = &out {
            let records = record_times(&scan.path, config.slope);
            io::write_records(p, &records, &scan.path, format)?;
        }
        wrote(&out);
        return ok(json!({
            "command": "regen",
            "status": "ok",
            "params": params,
            "config": config,
            "records_examined": outcome.records_examined,
            "index": outcome.index,
            "tau": outcome.tau,
            "point": outcome.point,
            "censored": outcome.is_censored(),
            "chain_times": chain.times,
            "chain_rejection_rate": chain.rejection_rate(),
            "out": out,
        }));
    }
    let opts = RegenerativeOptions {
        target_cycles: 0,
        min_replicas: replicas,
        max_replicas: replicas,
        ..Default::default()
    };
    match regenerative_estimates(&params, config, opts) {
        Ok(rep) => {
            if let Some(p) = &out {
                io::write_survival(p, &rep.survival, format)?;
            }
            wrote(&out);
            ok(json!({
                "command": "regen",
                "status": "ok",
                "params": params,
                "config": config,
                "speed": rep.speed,
                "cycles": rep.cycles,
                "replicas": rep.replicas,
                "censored_fraction": rep.censored_fraction,
                "rejection_rate": rep.rejection_rate,
                "survival": rep.survival,
                "out": out,
            }))
        }
        Err(e @ Error::InsufficientRegenerations { .. }) => checked(
            json!({
                "command": "regen",
                "status": "insufficient-regenerations",
                "params": params,
                "config": config,
                "error": e.to_string(),
            }),
            true,
        ),
        Err(e) => Err(e),
    }
}

pub fn oracle(file: &FileConfig, a: OracleArgs) -> Result<Outcome> {
    let params = file.params(&a.model)?;
    let n = a.steps.or(file.steps).unwrap_or(4) as usize;
    let tail_tol = a.tail_tol.or(file.tail_tol).unwrap_or(1e-12);
    let format = file.format(&a.output)?;
    let out = file.out(&a.output);
    let config = file.sites(&a.sites)?;
    let pmf = match &config {
        Some(c) => exact_walker_pmf(params.p_circ, params.p_bullet, params.q0, c, n)?,
        None => exact_pmf_poisson(&params, n, tail_tol)?,
    };
    if let Some(p) = &out {
        io::write_pmf(p, &pmf, &params, format)?;
    }
    wrote(&out);
    ok(json!({
        "command": "oracle",
        "status": "ok",
        "params": params,
        "environment": if config.is_some() { "fixed" } else { "poisson" },
        "n": n,
        "pmf": io::pmf_rows(&pmf),
        "total": pmf.total(),
        "mean": pmf.mean(),
        "mass_defect": pmf.mass_defect,
        "out": out,
    }))
}

pub fn sweep(config_path: Option<&Path>, a: SweepArgs) -> Result<Outcome> {
    let path = config_path.ok_or_else(|| Error::Config("sweep needs --config <file.json>".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut config = SweepConfig::from_json(&text)?;
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(n) = a.steps {
        config.n = n;
    }
    if let Some(r) = a.replicas {
        config.replicas = r;
    }
    if let Some(o) = a.out {
        config.output = Some(o);
    }
    eprintln!("sweep: {} grid points", config.grid.len());
    let result = run_sweep(&config)?;
    let manifest = config.output.as_deref().map(|o| result.write_outputs(o)).transpose()?;
    wrote(&config.output);
    wrote(&manifest);
    if let Some(c) = &a.csv {
        result.write_csv(c)?;
    }
    wrote(&a.csv);
    let count = |ph: Phase| result.rows.iter().filter(|r| r.phase == ph).count();
    ok(json!({
        "command": "sweep",
        "status": "ok",
        "rows": result.rows.len(),
        "rows_sha256": result.manifest.rows_sha256,
        "phases": {
            "positive": count(Phase::Positive),
            "negative": count(Phase::Negative),
            "inconclusive": count(Phase::Inconclusive),
        },
        "out": config.output,
        "manifest": manifest,
        "csv": a.csv,
    }))
}

pub fn verify(file: &FileConfig, a: VerifyArgs) -> Result<Outcome> {
    let quick = a.quick || file.quick.unwrap_or(false);
    let seed = a.seed.or(file.seed).unwrap_or(0);
    let report = run_verify(VerifyOptions { seed, quick })?;
    for s in &report.suites {
        eprintln!(
            "{} {}: {} comparisons, {} violations",
            if s.passed { "PASS" } else { "FAIL" },
            s.name,
            s.applicable,
            s.violations
        );
    }
    eprintln!(
        "{} oracle: max TV {:.4} over {} cases",
        if report.oracle.passed { "PASS" } else { "FAIL" },
        report.oracle.max_tv,
        report.oracle.cases.len()
    );
    checked(
        json!({
            "command": "verify",
            "status": status(!report.passed),
            "quick": quick,
            "seed": seed,
            "suites": report.suites,
            "oracle": {
                "samples": report.oracle.samples,
                "cases": report.oracle.cases.len(),
                "max_tv": report.oracle.max_tv,
                "tolerance": report.oracle.tolerance,
                "passed": report.oracle.passed,
            },
            "poisson_oracle_tv": report.poisson_oracle_tv,
            "poisson_oracle_tolerance": report.poisson_oracle_tolerance,
        }),
        !report.passed,
    )
}
