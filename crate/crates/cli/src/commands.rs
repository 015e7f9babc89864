use std::path::{Path, PathBuf};

use fiberlab::arith::{self, PrimeTuple};
use fiberlab::error::{Error, Result};
use fiberlab::fourier::{self, ScalePartition, TrigPoly};
use fiberlab::generators::{self, BWParams};
use fiberlab::structure;
use fiberlab::{dilate, intsets, io, json, pipeline, IntSet};
use serde_json::{json, Value};

use crate::{Cli, Command, GenFamily, Global};

pub enum Status {
    Ok,
    CheckFailed,
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Ok
    } else {
        Status::CheckFailed
    }
}

fn input(global: &Global) -> Result<IntSet> {
    let path = global
        .input
        .as_deref()
        .ok_or_else(|| Error::BadInput("--input is required".into()))?;
    io::read_set(path, global.dedupe)
}

fn default_k(a: &IntSet) -> Result<u32> {
    Ok(generators::max_omega(a)?.max(1))
}

fn to_value<T: serde::Serialize>(report: &T) -> Result<Value> {
    json::to_value(report)
}

/// Writes the report where requested and prints the summary.
fn emit(global: &Global, report: &Value) -> Result<()> {
    if let Some(path) = &global.output {
        io::write_report(path, report)?;
    }
    if global.json {
        print!("{}", json::to_canonical_string(report)?);
    } else {
        print!("{}", summary(report));
    }
    Ok(())
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Null => Some("-".into()),
        Value::Object(m) if m.len() == 2 => match (m.get("num"), m.get("den")) {
            (Some(Value::String(a)), Some(Value::String(b))) => Some(format!("{a}/{b}")),
            _ => None,
        },
        _ => None,
    }
}

/// `key: value` lines for the scalar fields of a report object.
pub fn summary(report: &Value) -> String {
    let mut out = String::new();
    if let Value::Object(map) = report {
        for (k, v) in map {
            if let Some(s) = scalar(v) {
                out.push_str(&format!("{k}: {s}\n"));
            }
        }
    }
    out
}

pub fn run(cli: &Cli) -> Result<Status> {
    let g = &cli.global;
    match &cli.command {
        Command::Gen(family) => generate(g, family),
        Command::Energy => {
            let a = input(g)?;
            let report = json!({
                "size": a.len(),
                "additive_energy": intsets::additive_energy(&a, &a).to_string(),
                "multiplicative_energy": intsets::multiplicative_energy(&a, &a).to_string(),
            });
            emit(g, &report)?;
            Ok(Status::Ok)
        }
        Command::Growth => {
            let a = input(g)?;
            emit(g, &to_value(&pipeline::sum_product_report(&a)?)?)?;
            Ok(Status::Ok)
        }
        Command::Decompose { primes, k } => decompose(g, primes.as_deref(), *k),
        Command::Structure { k } => {
            let a = input(g)?;
            let k = match k {
                Some(k) => *k,
                None => default_k(&a)?,
            };
            let report = structure::regular_structure(&a, k)?;
            emit(g, &to_value(&report)?)?;
            Ok(status(report.all_ok()))
        }
        Command::Xp { prime, n } => {
            let a = input(g)?;
            let report = dilate::xp_count(&a, *prime, n)?;
            emit(g, &to_value(&report)?)?;
            Ok(status(report.ok))
        }
        Command::GammaPairs { primes, u, eps, floor } => {
            let a = input(g)?;
            let primes = PrimeTuple::from_unsorted(primes.clone())?;
            let report = dilate::gamma_pair_count(&a, &primes, u, *eps, *floor)?;
            emit(g, &to_value(&report)?)?;
            Ok(status(report.ok != Some(false)))
        }
        Command::FourierCheck { primes, q, trials } => fourier_check(g, primes, *q, *trials),
        Command::Pipeline { k, eps } => {
            let a = input(g)?;
            let report = pipeline::run_pipeline(&a, *k, *eps)?;
            emit(g, &to_value(&report)?)?;
            Ok(status(report.invariants_ok))
        }
        Command::SunitBound { l, r } => {
            let bound = arith::sunit_reference_bound(*l, *r)?;
            let report = json!({
                "l": l,
                "r": r,
                "bound": bound.to_string(),
                "bits": bound.bits(),
            });
            emit(g, &report)?;
            Ok(Status::Ok)
        }
    }
}

fn generate(g: &Global, family: &GenFamily) -> Result<Status> {
    let (name, params, set) = match family {
        GenFamily::Interval { n } => ("interval", json!({ "n": n }), generators::interval(*n)?),
        GenFamily::Ap { a, d, n } => (
            "ap",
            json!({ "a": a.to_string(), "d": d.to_string(), "n": n }),
            generators::arith_prog(a, d, *n)?,
        ),
        GenFamily::Gp { c, r, count } => (
            "gp",
            json!({ "c": c.to_string(), "r": r.to_string(), "count": count }),
            generators::geom_prog(c, r, *count)?,
        ),
        GenFamily::Primes { n } => ("primes", json!({ "n": n }), generators::primes_upto(*n)?),
        GenFamily::PrimePowers { p, n } => (
            "prime-powers",
            json!({ "p": p.to_string(), "n": n }),
            generators::prime_powers(*p, *n)?,
        ),
        GenFamily::Bw { n, p, base_size, prime_base, perturb } => {
            let mut params = BWParams::square(*n, *p);
            if let Some(size) = base_size {
                params.base_size = *size;
            }
            let set = match perturb {
                Some(f) => generators::perturbed_balog_wooley(&params, *f, g.seed)?,
                None if *prime_base => generators::prime_balog_wooley(&params)?,
                None => generators::balog_wooley(&params)?,
            };
            let mut echo = to_value(&params)?;
            echo["perturb"] = json!(perturb);
            echo["prime_base"] = json!(prime_base);
            ("bw", echo, set)
        }
        GenFamily::AlmostPrime { count, k, pool, pool_upto, max_exponent } => {
            let pool: Vec<u128> = match (pool, pool_upto) {
                (Some(p), _) => p.clone(),
                (None, Some(n)) => generators::primes_upto(*n)?
                    .iter()
                    .map(|x| x.try_into().expect("sieved primes fit u128"))
                    .collect(),
                (None, None) => return Err(Error::BadInput("--pool or --pool-upto is required".into())),
            };
            let set = generators::random_k_almost_prime(*count, *k, &pool, *max_exponent, g.seed)?;
            let echo = json!({
                "count": count,
                "k": k,
                "pool": pool.iter().map(u128::to_string).collect::<Vec<_>>(),
                "max_exponent": max_exponent,
            });
            ("almost-prime", echo, set)
        }
    };
    let sidecar = json!({
        "family": name,
        "params": params,
        "seed": g.seed,
        "size": set.len(),
    });
    match &g.output {
        Some(path) => {
            io::write_set(path, &set)?;
            io::write_report(&sidecar_path(path), &sidecar)?;
            if g.json {
                print!("{}", json::to_canonical_string(&sidecar)?);
            }
        }
        None => print!("{}", io::format_set(&set)),
    }
    Ok(Status::Ok)
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn decompose(g: &Global, primes: Option<&[u128]>, k: Option<u32>) -> Result<Status> {
    let a = input(g)?;
    let mut ok = true;
    let mut report = serde_json::Map::new();
    let d = match (primes, k) {
        (Some(p), _) => structure::fibred_decompose(&a, &PrimeTuple::from_unsorted(p.to_vec())?)?,
        (None, k) => {
            let k = match k {
                Some(k) => k,
                None => default_k(&a)?,
            };
            let s = structure::fibred_structure(&a, k)?;
            ok &= s.verify().is_ok();
            let w = structure::three_halves_witness(&s.decomposition, k)?;
            ok &= w.ok;
            report.insert("k".into(), json!(k));
            report.insert("bad_pairs".into(), json!(s.bad_pairs));
            report.insert("coprime_pairs".into(), json!(s.coprime_pairs));
            report.insert("coprime_ok".into(), json!(s.coprime_ok));
            report.insert("rank_ok".into(), json!(s.rank_ok));
            report.insert("witness".into(), to_value(&w)?);
            s.decomposition
        }
    };
    report.insert("primes".into(), to_value(d.primes())?);
    report.insert("fibre_count".into(), json!(d.fibre_count()));
    report.insert("max_fibre_size".into(), json!(d.max_fibre_size()));
    report.insert("decomposition".into(), to_value(&d)?);
    report.insert("chang".into(), to_value(&structure::chang_ratio(&d)?)?);
    report.insert(
        "energy_decomposition".into(),
        to_value(&fourier::energy_decomposition_check(&d)?)?,
    );
    emit(g, &Value::Object(report))?;
    Ok(status(ok))
}

fn fourier_check(g: &Global, primes: &[u128], q: u32, trials: usize) -> Result<Status> {
    let a = input(g)?;
    let f = TrigPoly::from_set(&a)?;
    let mut partition = ScalePartition::trivial();
    for &p in primes {
        partition = partition.refine(&ScalePartition::padic(p)?);
    }
    let q = q as f64;
    let l2 = fourier::lq_norm(&f, 2.0, None)?;
    let lq = fourier::lq_norm(&f, q, None)?;
    let sq2 = fourier::sq_norm(&f, &partition, 2.0, None)?;
    let study = fourier::burkholder_ratio_study(&f, &partition, q, trials, g.seed)?;
    let parseval_error = (l2.power - a.len() as f64).abs() / (a.len() as f64).max(1.0);
    let mut report = json!({
        "size": a.len(),
        "max_frequency": f.max_freq(),
        "partition": to_value(&partition)?,
        "l2": to_value(&l2)?,
        "lq": to_value(&lq)?,
        "square_l2": to_value(&sq2)?,
        "study": to_value(&study)?,
        "parseval_relative_error": json::round12(parseval_error),
    });
    if q == 4.0 {
        let e = intsets::additive_energy(&a, &a);
        let e_real: f64 = e.to_string().parse().unwrap_or(f64::NAN);
        report["energy"] = json!(e.to_string());
        report["energy_relative_error"] =
            json!(json::round12((lq.power - e_real).abs() / e_real.max(1.0)));
    }
    emit(g, &report)?;
    Ok(Status::Ok)
}
