//! Subcommand bodies. Each one validates its whole input first and only
//! then builds kernels and writes files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use gtdyn::evolve::{evolve_measure, semigroup_at, trajectory_rng, PathSampler};
use gtdyn::generators::{fusion_covered, generator_fusion_partial, q2_schur_measure, transition_det};
use gtdyn::io::{fmt_f64, measure_on_box, read_measure_csv, write_labeled_csv, write_matrix_csv, write_measure_csv, write_sidecar, JsonLines, MatrixSidecar};
use gtdyn::links::{boundary_link, link_un, link_un_exact, link_uqn, link_uqn_exact};
use gtdyn::signatures::enumerate_box;
use gtdyn::toeplitz::{delta_kernel, MultilevelSampler};
use gtdyn::verify::{self, Mode, VerifyConfig};
use gtdyn::voiculescu::validate_q_case;
use gtdyn::{Deformation, Error, GTPattern, KernelMatrix, Measure, OmegaPoint, Result, Signature, SignatureBox};
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{Route, RunConfig};

/// Largest box for commands that build dense matrices over it.
pub const MAX_DENSE_STATES: u128 = 6_000;
/// Largest box for commands that only list measures over it.
pub const MAX_LIST_STATES: u128 = 2_000_000;

/// Outcome of a command that ran to completion.
pub enum Outcome {
    Ok,
    /// A verification found a failing check.
    Failed,
}

fn box_size(level: usize, lo: i64, hi: i64) -> u128 {
    // C(hi − lo + N, N)
    let m = (hi - lo) as u128;
    let mut c: u128 = 1;
    for i in 1..=level as u128 {
        c = c.saturating_mul(m + i) / i;
    }
    c
}

fn sized_box(level: usize, lo: i64, hi: i64, cap: u128) -> Result<SignatureBox> {
    let size = box_size(level, lo, hi);
    if size > cap {
        return Err(Error::Resource(format!(
            "box N={level}, [{lo}, {hi}] has {size} signatures, above the limit of {cap}"
        )));
    }
    enumerate_box(level, lo, hi)
}

fn check_omega_for(omega: &OmegaPoint, n: usize, q: Deformation) -> Result<()> {
    match q {
        Deformation::Classical => Ok(()),
        Deformation::Quantum(q) => validate_q_case(omega, n, q),
    }
}

struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&dir)
            .map_err(|e| Error::invalid(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Outputs { dir, written: Vec::new() })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path)?;
        self.written.push(path);
        Ok(BufWriter::new(f))
    }

    fn matrix(&mut self, stem: &str, m: &KernelMatrix) -> Result<()> {
        write_matrix_csv(self.create(&format!("{stem}.csv"))?, m)?;
        write_sidecar(self.create(&format!("{stem}.json"))?, m)
    }

    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, v)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn report(&self) {
        for p in &self.written {
            println!("wrote {}", p.display());
        }
    }
}

/// Fusion weights: `Λ^∞_N(ω, ·)` classically, the q²-Schur measure
/// otherwise, restricted to the weight box.
fn fusion_weights(omega: &OmegaPoint, n: usize, q: Deformation, wbox: &SignatureBox) -> Result<Vec<(Signature, f64)>> {
    Ok(match q {
        Deformation::Classical => boundary_link(omega, n, wbox)?,
        Deformation::Quantum(h) => q2_schur_measure(omega, n, h, wbox)?,
    }
    .weights())
}

pub fn gen(cfg: &RunConfig) -> Result<Outcome> {
    let omega = cfg.omega()?;
    let n = cfg.level()?;
    let q = cfg.deformation();
    let (lo, hi) = cfg.bounds()?;
    let route = cfg.route.unwrap_or(Route::Determinantal);
    check_omega_for(&omega, n, q)?;
    let bx = sized_box(n, lo, hi, MAX_DENSE_STATES)?;
    let (wlo, whi) = cfg.weight_bounds()?;
    let wbox = match route {
        Route::Determinantal => None,
        _ => Some(sized_box(n, wlo, whi, MAX_LIST_STATES)?),
    };
    let mut out = Outputs::new(cfg.out_dir())?;

    let det = match route {
        Route::Fusion => None,
        _ => Some(transition_det(&omega, n, q, &bx)?),
    };
    let fusion = match &wbox {
        Some(wb) => {
            let mut g = generator_fusion_partial(&fusion_weights(&omega, n, q, wb)?, n, q, &bx)?;
            g.meta.omega = Some(omega.clone());
            Some(g)
        }
        None => None,
    };
    match (&det, &fusion) {
        (Some(t), None) => {
            out.matrix("generator", &t.generator())?;
            out.matrix("transition", t)?;
        }
        (None, Some(g)) => {
            out.matrix("generator", g)?;
            out.matrix("transition", &g.transition())?;
        }
        (Some(t), Some(g)) => {
            let dg = t.generator();
            out.matrix("generator_determinantal", &dg)?;
            out.matrix("generator_fusion", g)?;
            let mut defect = 0.0f64;
            let mut covered = 0usize;
            for (i, a) in bx.items().iter().enumerate() {
                for (j, b) in bx.items().iter().enumerate() {
                    if fusion_covered(a, b, wlo, whi) {
                        covered += 1;
                        defect = defect.max((dg.entries[(i, j)] - g.entries[(i, j)]).abs());
                    }
                }
            }
            out.json(
                "defect.json",
                &json!({
                    "compared": "determinantal vs fusion generator",
                    "weight_box": [wlo, whi],
                    "weight_mass_missing": g.meta.escape_bound,
                    "covered_entries": covered,
                    "max_abs_defect": defect,
                }),
            )?;
        }
        (None, None) => unreachable!("route selects at least one construction"),
    }
    out.report();
    Ok(Outcome::Ok)
}

pub fn link(cfg: &RunConfig) -> Result<Outcome> {
    let n = cfg.level()?;
    if n < 2 {
        return Err(Error::invalid(format!("precondition N >= 2 violated for links: got N = {n}")));
    }
    let q = cfg.deformation();
    let (lo, hi) = cfg.bounds()?;
    let mode = cfg.mode.unwrap_or(Mode::Float);
    let rows = sized_box(n, lo, hi, MAX_DENSE_STATES)?;
    let cols = sized_box(n - 1, lo, hi, MAX_DENSE_STATES)?;
    let mut out = Outputs::new(cfg.out_dir())?;
    let m = match q {
        Deformation::Classical => link_un(n, &rows, &cols)?,
        Deformation::Quantum(h) => link_uqn(n, h, &rows, &cols)?,
    };
    out.matrix("link", &m)?;
    if mode == Mode::Rational {
        let exact = match q {
            Deformation::Classical => link_un_exact(n, &rows, &cols)?,
            Deformation::Quantum(h) => {
                // every finite f64 is a rational number
                let qr = BigRational::from_float(h).ok_or_else(|| Error::invalid(format!("q = {h} is not finite")))?;
                link_uqn_exact(n, &qr, &rows, &cols)?
            }
        };
        let mut w = csv::Writer::from_writer(out.create("link_exact.csv")?);
        let mut header = vec![String::new()];
        header.extend(cols.items().iter().map(|s| s.to_string()));
        w.write_record(&header).map_err(Error::from)?;
        for (lam, row) in rows.items().iter().zip(&exact.entries) {
            let mut rec = vec![lam.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(Error::from)?;
        }
        w.flush()?;
        let complete = exact.complete_rows();
        out.json(
            "link_exact.json",
            &json!({
                "q": q,
                "complete_rows": complete.len(),
                "rows_exactly_stochastic": exact.rows_exactly_stochastic(),
            }),
        )?;
    }
    out.report();
    Ok(Outcome::Ok)
}

fn write_measure(out: &mut Outputs, stem: &str, m: &Measure, extra: serde_json::Value) -> Result<()> {
    write_measure_csv(out.create(&format!("{stem}.csv"))?, m)?;
    let mut meta = json!({
        "level": m.states.level(),
        "box": [m.states.lo(), m.states.hi()],
        "states": m.states.len(),
        "mass": m.mass(),
        "min_probability": m.probs.iter().copied().fold(f64::INFINITY, f64::min),
    });
    if let (Some(a), serde_json::Value::Object(b)) = (meta.as_object_mut(), extra) {
        a.extend(b);
    }
    out.json(&format!("{stem}.json"), &meta)
}

pub fn boundary(cfg: &RunConfig) -> Result<Outcome> {
    let omega = cfg.omega()?;
    let n = cfg.level()?;
    let (lo, hi) = cfg.bounds()?;
    let bx = sized_box(n, lo, hi, MAX_LIST_STATES)?;
    let mut out = Outputs::new(cfg.out_dir())?;
    let m = boundary_link(&omega, n, &bx)?;
    write_measure(&mut out, "boundary", &m, json!({ "omega": omega }))?;
    out.report();
    Ok(Outcome::Ok)
}

pub fn measure(cfg: &RunConfig) -> Result<Outcome> {
    let omega = cfg.omega()?;
    let n = cfg.level()?;
    let q = cfg.deformation();
    let (lo, hi) = cfg.bounds()?;
    check_omega_for(&omega, n, q)?;
    let bx = sized_box(n, lo, hi, MAX_LIST_STATES)?;
    let mut out = Outputs::new(cfg.out_dir())?;
    let m = match q {
        Deformation::Classical => boundary_link(&omega, n, &bx)?,
        Deformation::Quantum(h) => q2_schur_measure(&omega, n, h, &bx)?,
    };
    write_measure(&mut out, "measure", &m, json!({ "omega": omega, "q": q }))?;
    out.report();
    Ok(Outcome::Ok)
}

fn initial_measure(cfg: &RunConfig, bx: &SignatureBox) -> Result<Measure> {
    match (&cfg.measure, &cfg.start) {
        (Some(_), Some(_)) => Err(Error::invalid("give either an initial measure file or a start signature, not both")),
        (Some(p), None) => {
            let f = File::open(p).map_err(|e| Error::invalid(format!("cannot open measure {}: {e}", p.display())))?;
            measure_on_box(bx, &read_measure_csv(f)?)
        }
        (None, start) => {
            let lam = start.clone().unwrap_or_else(|| Signature::zero(bx.level()));
            if lam.len() != bx.level() {
                return Err(Error::invalid(format!("start {lam} does not have length N = {}", bx.level())));
            }
            Measure::delta(bx, &lam)
        }
    }
}

pub fn evolve(cfg: &RunConfig) -> Result<Outcome> {
    let omega = cfg.omega()?;
    let n = cfg.level()?;
    let q = cfg.deformation();
    let (lo, hi) = cfg.bounds()?;
    let times = cfg.times()?;
    let tol = cfg.tol()?;
    check_omega_for(&omega, n, q)?;
    let bx = sized_box(n, lo, hi, MAX_DENSE_STATES)?;
    let p0 = initial_measure(cfg, &bx)?;
    let mut out = Outputs::new(cfg.out_dir())?;

    let kernel = transition_det(&omega, n, q, &bx)?;
    let mut summary = csv::Writer::from_writer(out.create("summary.csv")?);
    summary
        .write_record(["time", "file", "mass", "leak", "max_interior_deficit"])
        .map_err(Error::from)?;
    for (k, &t) in times.iter().enumerate() {
        let qt = semigroup_at(&kernel, t, tol)?;
        let (pt, leak) = evolve_measure(&p0, &qt)?;
        let deficits = qt.deficits();
        let name = format!("measure_{k}.csv");
        let mut w = csv::Writer::from_writer(out.create(&name)?);
        w.write_record(["signature", "probability", "deficit"]).map_err(Error::from)?;
        for ((s, p), d) in pt.states.items().iter().zip(&pt.probs).zip(&deficits) {
            w.write_record([s.to_string(), fmt_f64(*p), fmt_f64(*d)])
                .map_err(Error::from)?;
        }
        w.flush()?;
        let side = MatrixSidecar::of(&qt);
        summary
            .write_record([
                fmt_f64(t),
                name,
                fmt_f64(pt.mass()),
                fmt_f64(leak),
                fmt_f64(side.max_interior_deficit),
            ])
            .map_err(Error::from)?;
    }
    summary.flush()?;
    drop(summary);
    out.report();
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct SampleHeader<'a> {
    command: &'a str,
    seed: u64,
    omega: &'a OmegaPoint,
    #[serde(rename = "N")]
    n: usize,
    q: Deformation,
    #[serde(skip_serializing_if = "Option::is_none")]
    r#box: Option<(i64, i64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<usize>,
    samples: usize,
}

#[derive(Serialize)]
struct PathRecord {
    path: usize,
    /// `(time, state)` at each change of state, starting at time 0.
    jumps: Vec<(f64, Signature)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    left_box_at: Option<f64>,
}

pub fn sample(cfg: &RunConfig) -> Result<Outcome> {
    let seed = cfg.seed()?;
    let omega = cfg.omega()?;
    let n = cfg.level()?;
    let q = cfg.deformation();
    let (lo, hi) = cfg.bounds()?;
    let times = cfg.times()?;
    let t_end = times.iter().copied().fold(0.0, f64::max);
    let count = cfg.samples()?;
    check_omega_for(&omega, n, q)?;
    let bx = sized_box(n, lo, hi, MAX_DENSE_STATES)?;
    let start = cfg.start.clone().unwrap_or_else(|| Signature::zero(n));
    if !bx.contains(&start) {
        return Err(Error::invalid(format!("start {start} is outside the box (N={n}, [{lo}, {hi}])")));
    }
    let mut out = Outputs::new(cfg.out_dir())?;

    let sampler = PathSampler::new(&transition_det(&omega, n, q, &bx)?)?;
    let records: Vec<PathRecord> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(seed, i as u64);
            match sampler.sample(&start, t_end, &mut rng) {
                Ok(jumps) => Ok(PathRecord { path: i, jumps, left_box_at: None }),
                Err(Error::TruncationExit { time, partial, .. }) => Ok(PathRecord {
                    path: i,
                    jumps: partial,
                    left_box_at: Some(time),
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let header = SampleHeader {
        command: "sample",
        seed,
        omega: &omega,
        n,
        q,
        r#box: Some((lo, hi)),
        t_end: Some(t_end),
        steps: None,
        samples: count,
    };
    let mut jl = JsonLines::new(out.create("paths.jsonl")?, &header)?;
    for r in &records {
        jl.record(r)?;
    }
    jl.finish()?;
    out.report();
    let escaped = records.iter().filter(|r| r.left_box_at.is_some()).count();
    if escaped > 0 {
        return Err(Error::Resource(format!(
            "{escaped} of {count} paths left the box [{lo}, {hi}]; records carry left_box_at"
        )));
    }
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct PatternRecord<'a> {
    trajectory: usize,
    step: usize,
    pattern: &'a GTPattern,
}

pub fn gt_sample(cfg: &RunConfig) -> Result<Outcome> {
    let seed = cfg.seed()?;
    let omega = cfg.omega()?;
    let q = cfg.quantum("gt-sample")?;
    let start = match (&cfg.pattern, cfg.n) {
        (Some(p), Some(n)) if p.depth() != n => {
            return Err(Error::invalid(format!("pattern depth {} does not match N = {n}", p.depth())))
        }
        (Some(p), _) => p.clone(),
        (None, _) => GTPattern::constant(cfg.level()?, 0),
    };
    let n = start.depth();
    let steps = cfg.steps.unwrap_or(1);
    let count = cfg.samples()?;
    let sampler = MultilevelSampler::new(&omega, q, n)?;
    let mut out = Outputs::new(cfg.out_dir())?;

    let runs: Vec<Vec<GTPattern>> = (0..count)
        .into_par_iter()
        .map_init(
            || sampler.clone(),
            |s, i| {
                let mut rng = trajectory_rng(seed, i as u64);
                let mut cur = start.clone();
                let mut seq = vec![cur.clone()];
                for _ in 0..steps {
                    cur = s.step(&cur, &mut rng)?;
                    seq.push(cur.clone());
                }
                Ok(seq)
            },
        )
        .collect::<Result<_>>()?;
    let header = SampleHeader {
        command: "gt-sample",
        seed,
        omega: &omega,
        n,
        q: Deformation::Quantum(q),
        r#box: None,
        t_end: None,
        steps: Some(steps),
        samples: count,
    };
    let mut jl = JsonLines::new(out.create("patterns.jsonl")?, &header)?;
    for (i, seq) in runs.iter().enumerate() {
        for (k, p) in seq.iter().enumerate() {
            jl.record(&PatternRecord { trajectory: i, step: k, pattern: p })?;
        }
    }
    jl.finish()?;

    if steps >= 1 && count > 1 {
        // empirical law of the first step against the enumerated one
        let mut s = sampler.clone();
        let law = s.step_law(&start)?;
        let mut counts = std::collections::HashMap::new();
        for seq in &runs {
            *counts.entry(&seq[1]).or_insert(0usize) += 1;
        }
        let mut tv = 0.0;
        for (y, p) in &law {
            tv += (counts.remove(y).unwrap_or(0) as f64 / count as f64 - p).abs();
        }
        tv += counts.values().map(|&c| c as f64 / count as f64).sum::<f64>();
        out.json(
            "first_step_tv.json",
            &json!({
                "start": start,
                "samples": count,
                "support": law.len(),
                "law_mass": law.iter().map(|(_, p)| p).sum::<f64>(),
                "total_variation": 0.5 * tv,
            }),
        )?;
    }
    out.report();
    Ok(Outcome::Ok)
}

pub fn toeplitz(cfg: &RunConfig) -> Result<Outcome> {
    let omega = cfg.omega()?;
    let n = cfg.level()?;
    if n < 2 {
        return Err(Error::invalid(format!("precondition N >= 2 violated for down kernels: got N = {n}")));
    }
    let q = cfg.quantum("toeplitz")?;
    let (lo, hi) = cfg.bounds()?;
    validate_q_case(&omega, n, q)?;
    let rows = sized_box(n, lo, hi, MAX_DENSE_STATES)?;
    let cols = sized_box(n - 1, lo, hi, MAX_DENSE_STATES)?;
    let mut out = Outputs::new(cfg.out_dir())?;
    let d = delta_kernel(n, &omega, q, &rows, &cols)?;
    if d.checked_rows.is_empty() {
        eprintln!("warning: no row of the box is interior; widen the box to get a meaningful defect");
    }
    write_labeled_csv(out.create("delta_product.csv")?, &rows, &cols, &d.product)?;
    write_labeled_csv(out.create("delta_direct.csv")?, &rows, &cols, &d.direct)?;
    out.json(
        "defect.json",
        &json!({
            "compared": "Q Lambda vs down Toeplitz kernel",
            "omega": omega,
            "level": n,
            "q": q,
            "box": [lo, hi],
            "checked_rows": d.checked_rows.len(),
            "max_abs_defect": d.defect,
        }),
    )?;
    out.report();
    Ok(Outcome::Ok)
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome> {
    let mut vc = VerifyConfig::default();
    if let Some(m) = cfg.mode {
        vc.mode = m;
    }
    vc.corrupt_phi = cfg.corrupt_phi.unwrap_or(false);
    if let Some(s) = cfg.samples {
        if s == 0 {
            return Err(Error::invalid("samples must be at least 1"));
        }
        vc.samples = s;
    }
    if let Some(s) = cfg.seed {
        vc.seed = s;
    }
    if let Some(only) = &cfg.only {
        if let Some(c) = only.iter().find(|c| !(1..=11).contains(*c)) {
            return Err(Error::invalid(format!("criteria are numbered 1 to 11, got {c}")));
        }
        vc.only = only.clone();
    }
    let mut out = Outputs::new(cfg.out_dir())?;
    let report = verify::run(&vc)?;
    out.json("report.json", &report)?;
    for c in &report.checks {
        if !c.passed {
            eprintln!(
                "FAIL [{}] {}: measured {:e}, threshold {:e}",
                c.criterion, c.name, c.measured, c.threshold
            );
        }
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} failed", report.checks.len(), failed);
    out.report();
    Ok(if report.passed { Outcome::Ok } else { Outcome::Failed })
}

/// Exit status for an error: 3 for resource limits, 2 for everything
/// else the user can fix in the input.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Resource(_) | Error::TruncationExit { .. } | Error::Resampling(_) => 3,
        _ => 2,
    }
}
