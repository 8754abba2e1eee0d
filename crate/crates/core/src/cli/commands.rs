use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use super::config::{ConfigError, DiagramConfig, KdConfig, WavefunctionConfig, WeakValueConfig};
use super::output::{read_config, write_atomic, write_json};
use super::{Common, Failure};
use crate::diagram::{compile, evaluate, recombine, rotate, spectral_split, DiagramFile, LOOP_LEN};
use crate::framework::{grid_total, kirkwood_dirac};
use crate::linalg::{ComplexScalar, Operator};
use crate::protocols::{kd_protocol, ProtocolSpec};
use crate::sampling::{run_repetitions, summarize, sweep_csv, sweep_specs, Shots, SweepRow};
use crate::wavefunction::{
    efficiency_compare, lundeen_scan, profile_csv, scan_free, Acquisition, Summary,
};

type Written = Result<Vec<PathBuf>, Failure>;

fn load<T, P>(common: &Common, preset: P) -> Result<T, Failure>
where
    T: DeserializeOwned,
    P: FnOnce(&str) -> Result<T, ConfigError>,
{
    match (&common.config, &common.preset) {
        (Some(_), Some(_)) => {
            Err(ConfigError::new("config", "give either --config or --preset").into())
        }
        (Some(path), None) => {
            let text = read_config(path)?;
            serde_json::from_str(&text).map_err(|e| ConfigError::from_json(&e).into())
        }
        (None, Some(name)) => Ok(preset(name)?),
        (None, None) => Err(ConfigError::new("config", "give --config or --preset").into()),
    }
}

fn pair(z: ComplexScalar) -> Value {
    json!([z.re, z.im])
}

fn matrix(op: &Operator) -> Value {
    Value::Array(
        op.rows()
            .map(|r| Value::Array(r.iter().map(|z| pair(*z)).collect()))
            .collect(),
    )
}

fn build_spec(cfg: &WeakValueConfig, xi: Option<f64>) -> Result<ProtocolSpec, Failure> {
    let variant = cfg.variant(xi)?;
    let (psi_i, psi_f) = cfg.kets()?;
    if psi_i.dim() != psi_f.dim() {
        return Err(ConfigError::new("boundary.psi_f", "dimension differs from psi_i").into());
    }
    let observable = cfg.observable(&variant, psi_i.dim())?;
    Ok(ProtocolSpec::weak(variant, observable, psi_i, psi_f)?)
}

pub fn weak_value(common: &Common) -> Written {
    let cfg: WeakValueConfig = load(common, |n| WeakValueConfig::preset(n, false))?;
    if cfg.xi_grid.is_some() {
        return Err(ConfigError::new("xi_grid", "only used by sweep-xi").into());
    }
    let spec = build_spec(&cfg, None)?;
    let exact = common.exact || cfg.exact || cfg.sampler.is_none();
    let mut written = Vec::new();
    if exact {
        let report = spec.exact_report()?;
        let doc = json!({ "mode": "exact", "seed": Value::Null, "report": report });
        written.push(write_json(&common.out, "report.json", &doc)?);
    } else {
        let section = cfg.sampler.as_ref().expect("checked above");
        let scfg = section.to_config(&spec, common.seed)?;
        let reports = run_repetitions(&spec, &scfg, 0)?;
        let doc = json!({
            "mode": "shots",
            "seed": scfg.seed,
            "repetitions": scfg.repetitions,
            "report": reports[0],
        });
        written.push(write_json(&common.out, "report.json", &doc)?);
        if scfg.repetitions > 1 {
            let xi = spec.variant().xi().unwrap_or(f64::NAN);
            let row = summarize(&spec, xi, &scfg, &reports);
            written.push(write_atomic(&common.out, "sweep.csv", &sweep_csv(&[row]))?);
        }
    }
    Ok(written)
}

pub fn sweep_xi(common: &Common) -> Written {
    let cfg: WeakValueConfig = load(common, |n| WeakValueConfig::preset(n, true))?;
    let grid = cfg.grid()?;
    if cfg.protocol.xi.is_some() {
        return Err(ConfigError::new("protocol.xi", "conflicts with xi_grid").into());
    }
    if cfg.variant(Some(grid[0]))?.xi().is_none() {
        return Err(
            ConfigError::new("protocol.variant", "has no coupling strength to sweep").into(),
        );
    }
    // every grid point is validated before any work starts
    let specs = grid
        .iter()
        .map(|&xi| build_spec(&cfg, Some(xi)))
        .collect::<Result<Vec<_>, _>>()?;
    let exact = common.exact || cfg.exact || cfg.sampler.is_none();
    let rows: Vec<SweepRow> = if exact {
        specs
            .iter()
            .zip(&grid)
            .map(|(spec, &xi)| {
                let r = spec.exact_report()?;
                Ok(SweepRow {
                    protocol: spec.name(),
                    xi,
                    shots: Shots::default(),
                    reps: 0,
                    mean_estimate: r.estimate,
                    empirical_bias: r.bias,
                    empirical_std: 0.0,
                    mean_stderr: 0.0,
                    success_prob: r.success_probability,
                    seed: 0,
                })
            })
            .collect::<Result<_, Failure>>()?
    } else {
        let section = cfg.sampler.as_ref().expect("checked above");
        let scfg = section.to_config(&specs[0], common.seed)?;
        let pairs: Vec<(f64, ProtocolSpec)> = grid.iter().copied().zip(specs).collect();
        sweep_specs(&pairs, &scfg)?
    };
    Ok(vec![write_atomic(
        &common.out,
        "sweep.csv",
        &sweep_csv(&rows),
    )?])
}

fn scan_xi(cfg: &WavefunctionConfig) -> Result<f64, Failure> {
    match cfg.xi {
        None => Err(ConfigError::new("xi", "missing").into()),
        Some(xi) if xi > 0.0 && xi <= FRAC_PI_2 => Ok(xi),
        Some(_) => Err(ConfigError::new("xi", "must lie in (0, pi/2]").into()),
    }
}

pub fn wavefunction(common: &Common) -> Written {
    let cfg: WavefunctionConfig = load(common, WavefunctionConfig::preset)?;
    let seed = common.seed.unwrap_or(cfg.seed);
    let method = cfg.method.as_str();
    if !matches!(method, "scanning" | "scan_free" | "compare") {
        return Err(ConfigError::new("method", format!("unknown method {method:?}")).into());
    }
    let xi = match method {
        "scan_free" => {
            if cfg.xi.is_some() {
                return Err(ConfigError::new("xi", "not used by scan_free").into());
            }
            None
        }
        _ => Some(scan_xi(&cfg)?),
    };
    let state = cfg.state.build()??;

    if method == "compare" {
        let target = match cfg.target_fidelity {
            Some(t) if (0.0..1.0).contains(&t) => t,
            Some(_) => return Err(ConfigError::new("target_fidelity", "must lie in [0, 1)").into()),
            None => return Err(ConfigError::new("target_fidelity", "missing").into()),
        };
        let report = efficiency_compare(&state, target, xi.expect("compare needs xi"), seed)?;
        return Ok(vec![write_json(&common.out, "compare.json", &report)?]);
    }
    if cfg.target_fidelity.is_some() {
        return Err(ConfigError::new("target_fidelity", "only used by compare").into());
    }

    let exact = common.exact || cfg.exact || cfg.total_shots.is_none();
    let acq = if exact {
        Acquisition::Exact
    } else {
        Acquisition::Shots {
            total: cfg.total_shots.expect("checked above"),
            seed,
            repetition: 0,
        }
    };
    let result = match xi {
        Some(xi) => lundeen_scan(&state, xi, acq)?,
        None => scan_free(&state, acq)?,
    };
    let summary = Summary::new(&result, (!exact).then_some(seed));
    Ok(vec![
        write_atomic(&common.out, "profile.csv", &profile_csv(&result, &state))?,
        write_json(&common.out, "summary.json", &summary)?,
    ])
}

pub fn diagram(common: &Common) -> Written {
    let cfg: DiagramConfig = load(common, DiagramConfig::preset)?;
    let d = cfg.diagram()?;
    let value = evaluate(&d);
    let doc = match cfg.action.as_str() {
        "evaluate" => json!({ "action": "evaluate", "value": pair(value) }),
        "rotate" => {
            let k = cfg.k.ok_or_else(|| ConfigError::new("k", "missing"))?;
            let r = rotate(&d, k);
            json!({
                "action": "rotate",
                "k": k,
                "value": pair(evaluate(&r)),
                "diagram": DiagramFile::from(&r),
            })
        }
        "split" => {
            let idx = cfg
                .index
                .ok_or_else(|| ConfigError::new("index", "missing"))?;
            if idx >= LOOP_LEN {
                return Err(ConfigError::new("index", "must be below 4").into());
            }
            let children = spectral_split(&d, idx)?;
            let items: Vec<Value> = children
                .iter()
                .map(|(w, child)| {
                    json!({
                        "weight": w,
                        "value": pair(evaluate(child)),
                        "diagram": DiagramFile::from(child),
                    })
                })
                .collect();
            json!({
                "action": "split",
                "index": idx,
                "value": pair(value),
                "recombined": pair(recombine(&children)),
                "children": items,
            })
        }
        "compile" => {
            let inst = compile(&d)?;
            json!({
                "action": "compile",
                "value": pair(value),
                "measured_value": pair(inst.measured_value()?),
                "scale": pair(inst.scale),
                "t0": matrix(inst.ct.t0()),
                "t1": matrix(inst.ct.t1()),
                "initial": matrix(inst.boundary.initial()),
                "effect": matrix(inst.boundary.final_effect()),
            })
        }
        other => {
            return Err(ConfigError::new("action", format!("unknown action {other:?}")).into())
        }
    };
    Ok(vec![write_json(&common.out, "diagram.json", &doc)?])
}

pub fn kd(common: &Common) -> Written {
    let cfg: KdConfig = load(common, KdConfig::preset)?;
    let rho = cfg.rho()?;
    let (basis_a, basis_b) = cfg.bases(rho.dim())?;
    let grid = kirkwood_dirac(&rho, &basis_a, &basis_b)?;
    let a_kets = basis_a.columns();
    let b_kets = basis_b.columns();
    let mut via_probe = Vec::with_capacity(a_kets.len());
    let mut deviation = 0.0f64;
    for (ia, a) in a_kets.iter().enumerate() {
        let mut row = Vec::with_capacity(b_kets.len());
        for (ib, b) in b_kets.iter().enumerate() {
            let v = kd_protocol(&rho, a, b)?;
            deviation = deviation.max((v - grid[ia][ib]).norm());
            row.push(v);
        }
        via_probe.push(row);
    }
    let to_json = |g: &[Vec<ComplexScalar>]| -> Value {
        Value::Array(
            g.iter()
                .map(|r| Value::Array(r.iter().map(|z| pair(*z)).collect()))
                .collect(),
        )
    };
    let marginal_a: Vec<Value> = grid.iter().map(|r| pair(r.iter().sum())).collect();
    let marginal_b: Vec<Value> = (0..b_kets.len())
        .map(|ib| pair(grid.iter().map(|r| r[ib]).sum()))
        .collect();
    let doc = json!({
        "grid": to_json(&grid),
        "grid_via_probe": to_json(&via_probe),
        "max_deviation": deviation,
        "total": pair(grid_total(&grid)),
        "marginal_a": marginal_a,
        "marginal_b": marginal_b,
    });
    Ok(vec![write_json(&common.out, "kd.json", &doc)?])
}
