//! Batch suites behind the `sumsys` subcommands and the report bundles they emit.
//!
//! A bundle holds CSV tables, a JSON verdict record and a metadata file. Tables carry
//! the resolved configuration as `#` comment lines and contain no timestamps, so equal
//! configurations give byte-identical tables.

use std::path::Path;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{to_toml, InvariantsConfig, KernelConfig, ShaleConfig, UnitsConfig};
use crate::error::{Error, Result};
use crate::fock::{FockSpace, FockVector};
use crate::hilbert::{ComplexVector, GramMap, GramSpace};
use crate::invariants::{
    cantor_sequence, classify, default_probes, subspace_diagnostics, verdict_from, ElementarySet, SubspaceDiag,
    VerdictRecord,
};
use crate::kernels::{fourier_coeff, gram_matrix, kernel_l1_norm, polya_guard, Kernel};
use crate::linalg::sym_eigen_sorted;
use crate::shale::{
    dilation_block, gamma, vacuum_overlap_formula, verify_adjoint, verify_functorial, verify_intertwining,
    verify_weak_continuity,
};
use crate::sumsys::{defect_scan, SumSystem};
use crate::table::{fmt_f64, Table};
use crate::units::{
    existence_series, imaginary_additivity_residual, imaginary_unit, pairing_table, pairing_csv,
    real_additivity_residual, yprime_boundedness_probe,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityCheck {
    pub what: String,
    pub value: f64,
    pub limit: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub command: String,
    pub config_toml: String,
    pub tables: Vec<(String, Table)>,
    pub verdicts: Value,
    pub quality: Vec<QualityCheck>,
}

impl ReportBundle {
    fn new<C: Serialize>(command: &str, config: &C) -> Self {
        ReportBundle {
            command: command.into(),
            config_toml: to_toml(config),
            tables: Vec::new(),
            verdicts: Value::Null,
            quality: Vec::new(),
        }
    }

    fn add(&mut self, name: &str, mut table: Table) {
        let mut echo = vec![format!("sumsys {} {} {}", env!("CARGO_PKG_VERSION"), self.command, name)];
        echo.extend(self.config_toml.lines().filter(|l| !l.trim().is_empty()).map(String::from));
        echo.append(&mut table.comments);
        table.comments = echo;
        self.tables.push((name.into(), table));
    }

    fn limit(&mut self, what: &str, value: f64, limit: Option<f64>) {
        if let Some(limit) = limit {
            self.quality.push(QualityCheck { what: what.into(), value, limit, ok: value <= limit });
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// The first hard limit that was exceeded.
    pub fn quality_failure(&self) -> Option<Error> {
        self.quality
            .iter()
            .find(|q| !q.ok)
            .map(|q| Error::QualityLimit { what: q.what.clone(), value: q.value, limit: q.limit })
    }

    /// Writes `<name>.csv` per table, `verdicts.json` and `metadata.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, table) in &self.tables {
            table.write_csv(std::fs::File::create(dir.join(format!("{name}.csv")))?)?;
        }
        let verdicts = json!({ "verdicts": self.verdicts, "quality": self.quality });
        std::fs::write(dir.join("verdicts.json"), serde_json::to_string_pretty(&verdicts)? + "\n")?;
        let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let meta = json!({
            "tool": "sumsys",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": self.config_toml,
            "tables": self.tables.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
            "timestamp_unix": stamp,
        });
        std::fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
        Ok(())
    }
}

fn euclid_map(m: DMatrix<f64>) -> Result<GramMap> {
    let s = Arc::new(GramSpace::euclidean(m.nrows(), "R")?);
    GramMap::new(s.clone(), s, m)
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |_, _| rng.sample(StandardNormal))
}

/// Haar orthogonal matrix: QR of a Gaussian matrix with the signs of `R` absorbed.
fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let qr = gaussian_matrix(rng, d).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `U diag(σ) Vᵀ` with Haar `U, V` and `σ` uniform in `[lo, hi]`.
pub fn random_s_map(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> Result<GramMap> {
    let u = random_orthogonal(rng, d);
    let v = random_orthogonal(rng, d);
    let sigma = DVector::from_fn(d, |_, _| rng.random_range(lo..=hi));
    euclid_map(u * DMatrix::from_diagonal(&sigma) * v.transpose())
}

fn random_complex(rng: &mut ChaCha8Rng, d: usize, max_norm: f64) -> ComplexVector {
    let re = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let im = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = (re.norm_squared() + im.norm_squared()).sqrt();
    let scale = rng.random_range(0.3..=1.0) * max_norm / norm;
    ComplexVector::new(re * scale, im * scale)
}

#[derive(Debug, Clone)]
pub struct ShalePair {
    pub dim: usize,
    pub a: GramMap,
    pub b: GramMap,
    pub u: ComplexVector,
}

/// The seeded maps and Weyl vectors used by the Shale suite.
pub fn shale_pairs(cfg: &ShaleConfig) -> Result<Vec<ShalePair>> {
    let seed = cfg.seed.ok_or_else(|| Error::Config("shale needs a seed".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..cfg.pairs)
        .map(|p| {
            let dim = cfg.dims[p % cfg.dims.len()];
            let a = random_s_map(&mut rng, dim, cfg.singular_min, cfg.singular_max)?;
            let b = random_s_map(&mut rng, dim, cfg.singular_min, cfg.singular_max)?;
            let u = random_complex(&mut rng, dim, cfg.u_norm);
            Ok(ShalePair { dim, a, b, u })
        })
        .collect()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

pub fn run_shale_suite(cfg: &ShaleConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    let mut bundle = ReportBundle::new("shale", cfg);
    let pairs = shale_pairs(cfg)?;

    let mut vacuum = Table::new(["case", "factors", "cutoff", "overlap", "formula", "abs_error"]);
    for &l in &cfg.vacuum_lambdas {
        let overlap = dilation_block(l, cfg.vacuum_cutoff)?.vacuum_overlap();
        let formula = vacuum_overlap_formula(l);
        vacuum.push(vec![
            "single".into(),
            fmt_f64(l),
            cfg.vacuum_cutoff.to_string(),
            fmt_f64(overlap),
            fmt_f64(formula),
            fmt_f64((overlap - formula).abs()),
        ]);
    }
    for diag in &cfg.vacuum_diagonals {
        let g = gamma(&euclid_map(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))?, cfg.vacuum_cutoff)?;
        let overlap = g.matrix[(0, 0)].re;
        let formula: f64 = diag.iter().map(|&l| vacuum_overlap_formula(l)).product();
        let factors = diag.iter().map(|&l| fmt_f64(l)).collect::<Vec<_>>().join(" ");
        vacuum.push(vec![
            "diagonal".into(),
            factors,
            cfg.vacuum_cutoff.to_string(),
            fmt_f64(overlap),
            fmt_f64(formula),
            fmt_f64((overlap - formula).abs()),
        ]);
    }
    let top = *cfg.cutoffs.iter().max().expect("validated");
    let random_rows: Vec<Vec<String>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let g = gamma(&p.a, top)?;
            let svs = crate::linalg::svd_sorted(&p.a.mode_matrix()).singular;
            let formula: f64 = svs.iter().map(|&l| vacuum_overlap_formula(l)).product();
            let overlap = g.matrix[(0, 0)].re;
            let factors = svs.iter().map(|&l| fmt_f64(l)).collect::<Vec<_>>().join(" ");
            Ok(vec![
                format!("pair{i}"),
                factors,
                top.to_string(),
                fmt_f64(overlap),
                fmt_f64(formula),
                fmt_f64((overlap - formula).abs()),
            ])
        })
        .collect::<Result<_>>()?;
    random_rows.into_iter().for_each(|r| vacuum.push(r));
    bundle.add("vacuum", vacuum);

    let jobs: Vec<(usize, usize)> = (0..pairs.len()).flat_map(|p| cfg.cutoffs.iter().map(move |&n| (p, n))).collect();
    let residuals: Vec<[f64; 3]> = jobs
        .par_iter()
        .map(|&(p, n)| {
            let pair = &pairs[p];
            Ok([
                verify_functorial(&pair.a, &pair.b, n, n / 2)?,
                verify_intertwining(&pair.a, &pair.u, n, n / 2)?,
                verify_adjoint(&pair.a, n, n / 2)?,
            ])
        })
        .collect::<Result<_>>()?;
    let mut per_pair = Vec::new();
    for (k, name) in ["functoriality", "intertwining", "adjoint"].into_iter().enumerate() {
        let mut t = Table::new(["pair", "dim", "cutoff", "sector", "residual"]);
        for (&(p, n), r) in jobs.iter().zip(&residuals) {
            t.push(vec![p.to_string(), pairs[p].dim.to_string(), n.to_string(), (n / 2).to_string(), fmt_f64(r[k])]);
        }
        bundle.add(name, t);
    }
    let per_cutoff = cfg.cutoffs.len();
    for (p, chunk) in residuals.chunks(per_cutoff).enumerate() {
        let col = |k: usize| chunk.iter().map(|r| r[k]).collect::<Vec<_>>();
        per_pair.push(json!({
            "pair": p,
            "dim": pairs[p].dim,
            "functoriality": col(0),
            "functoriality_monotone": strictly_decreasing(&col(0)),
            "intertwining": col(1),
            "intertwining_monotone": strictly_decreasing(&col(1)),
            "adjoint": col(2),
        }));
    }
    let final_functorial = residuals.chunks(per_cutoff).map(|c| c[per_cutoff - 1][0]).fold(0.0, f64::max);

    let limit = euclid_map(DMatrix::from_element(1, 1, cfg.weak_lambda))?;
    let seq: Vec<GramMap> = (1..=cfg.weak_steps)
        .map(|n| euclid_map(DMatrix::from_element(1, 1, cfg.weak_lambda + 0.5f64.powi(n as i32))))
        .collect::<Result<_>>()?;
    let space = Arc::new(FockSpace::over(limit.source().clone(), top)?);
    let state = |k: u32| FockVector::basis_state(space.clone(), &[k]);
    let probes = vec![(state(0)?, state(0)?), (state(2)?, state(0)?), (state(1)?, state(1)?), (state(4)?, state(2)?)];
    let weak = verify_weak_continuity(&seq, &limit, &probes, top)?;
    let mut wt = Table::new(["step", "lambda", "max_deviation"]);
    for (n, d) in weak.deviations.iter().enumerate() {
        wt.push(vec![(n + 1).to_string(), fmt_f64(cfg.weak_lambda + 0.5f64.powi(n as i32 + 1)), fmt_f64(*d)]);
    }
    bundle.add("weak_continuity", wt);

    bundle.verdicts = json!({
        "pairs": per_pair,
        "final_functoriality_max": final_functorial,
        "weak_continuity_converging": weak.converging,
    });
    bundle.limit("final functoriality residual", final_functorial, cfg.hard_limit);
    Ok(bundle)
}

/// `(max − min)/min` of `B̂(n)·ln^{α−1}(n)` over `ns`.
pub fn compensated_drift(k: &Kernel, ns: &[u64]) -> Result<(Vec<f64>, f64)> {
    let Kernel::Tsirelson { alpha, .. } = *k else {
        return Err(Error::InvalidParameter("the compensated trend needs a Tsirelson kernel".into()));
    };
    let vals: Vec<f64> = ns
        .par_iter()
        .map(|&n| Ok(fourier_coeff(k, n as i64)?.value * (n as f64).ln().powf(alpha - 1.0)))
        .collect::<Result<_>>()?;
    let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    Ok((vals, (hi - lo) / lo))
}

pub fn run_kernel_suite(cfg: &KernelConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    let mut bundle = ReportBundle::new("kernel", cfg);
    let k = cfg.kernel()?;
    let Kernel::Tsirelson { alpha, .. } = k else { unreachable!("kernel suite builds a Tsirelson kernel") };

    let gram = gram_matrix(&k, (0.0, 1.0), cfg.gram_h)?;
    let (vals, _) = sym_eigen_sorted(&gram.matrix);
    let mut spectrum = Table::new(["index", "eigenvalue"]).comment(format!("quad_error={}", fmt_f64(gram.quad_error)));
    for (i, v) in vals.iter().enumerate() {
        spectrum.push(vec![i.to_string(), fmt_f64(*v)]);
    }
    bundle.add("gram_spectrum", spectrum);

    let mut defects = Table::new(["kernel", "h", "defect", "increment", "flag"]);
    let mut converging = Vec::new();
    for (name, kern) in [("standard-l2", Kernel::StandardL2), ("tsirelson", k)] {
        let scan = defect_scan(&kern, &cfg.defect_hs, cfg.defect_s, cfg.defect_t)?;
        for row in scan.table().rows {
            defects.push(std::iter::once(name.to_string()).chain(row).collect());
        }
        converging.push(json!({ "kernel": name, "converging": scan.converging, "max_defect": scan.rows.iter().map(|r| r.defect).fold(0.0, f64::max) }));
    }
    bundle.add("defect_scan", defects);

    let coeffs: Vec<_> = cfg.fourier_ns.par_iter().map(|&n| fourier_coeff(&k, n as i64)).collect::<Result<_>>()?;
    let mut fourier = Table::new(["n", "bhat", "quad_error", "compensated"]);
    for (&n, q) in cfg.fourier_ns.iter().zip(&coeffs) {
        let comp = if n > 1 { fmt_f64(q.value * (n as f64).ln().powf(alpha - 1.0)) } else { String::new() };
        fourier.push(vec![n.to_string(), fmt_f64(q.value), fmt_f64(q.error), comp]);
    }
    bundle.add("fourier", fourier);
    let (trend, drift) = compensated_drift(&k, &cfg.trend_ns)?;
    let l1 = kernel_l1_norm(&k)?;
    let zero_error = (fourier_coeff(&k, 0)?.value - l1).abs();

    let series = existence_series(&k, cfg.n_max)?;
    bundle.add("existence_series", series.table());

    bundle.verdicts = json!({
        "kernel": k,
        "polya_profile": polya_guard(&k, 2000)?,
        "min_gram_eigenvalue": vals[vals.len() - 1],
        "defect_scans": converging,
        "trend_ns": cfg.trend_ns,
        "compensated": trend,
        "drift": drift,
        "drift_limit": cfg.drift_limit,
        "drift_ok": drift <= cfg.drift_limit,
        "l1_norm": l1,
        "zero_frequency_error": zero_error,
        "existence_converging": series.converging,
        "existence_tail_blocks": series.tail_blocks(),
    });
    Ok(bundle)
}

fn describe_set(e: &ElementarySet) -> String {
    if e.is_empty() {
        return "empty".into();
    }
    e.intervals().iter().map(|(a, b)| format!("[{},{}]", fmt_f64(*a), fmt_f64(*b))).collect::<Vec<_>>().join(" u ")
}

pub fn run_units_suite(cfg: &UnitsConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    let mut bundle = ReportBundle::new("units", cfg);
    let k = cfg.kernel.build()?;
    let sys = SumSystem::new(k, cfg.h, 1.0)?;

    let rows = pairing_table(&sys, &cfg.ts)?;
    let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let mut pairing = pairing_csv(&rows);
    for r in &rows {
        pairing.comments.push(format!("t={} condition={}", fmt_f64(r.t), fmt_f64(r.condition)));
    }
    bundle.add("pairing", pairing);

    let (s, t) = (cfg.additivity_s, cfg.additivity_t);
    let add_rows: Vec<Vec<String>> = cfg
        .additivity_hs
        .par_iter()
        .map(|&h| {
            let fine = SumSystem::new(k, h, 1.0)?;
            let real = real_additivity_residual(&fine, s, t)?;
            let imag = imaginary_additivity_residual(&fine, s, t)?;
            let cond = imaginary_unit(&fine, s + t)?.condition;
            Ok(vec![fmt_f64(h), fmt_f64(s), fmt_f64(t), fmt_f64(real), fmt_f64(imag), fmt_f64(cond)])
        })
        .collect::<Result<_>>()?;
    let mut additivity = Table::new(["h", "s", "t", "real_residual", "imaginary_residual", "condition"]);
    add_rows.into_iter().for_each(|r| additivity.push(r));
    bundle.add("additivity", additivity);

    let mut sets = vec![ElementarySet::empty()];
    sets.extend(cantor_sequence(cfg.probe_depth, cfg.probe_keep, cfg.h)?.iter().map(ElementarySet::complement));
    sets.push(ElementarySet::full());
    let probe = yprime_boundedness_probe(&sys, &sets)?;
    let mut bounded = probe.table();
    for (i, e) in sets.iter().enumerate() {
        bounded.comments.push(format!("set {i}: {}", describe_set(e)));
    }
    bundle.add("boundedness", bounded);

    let mut verdicts = json!({
        "kernel": k,
        "max_pairing_residual": worst,
        "max_yprime_norm": probe.max,
    });
    if let Kernel::StandardL2 = k {
        let same = cfg.ts.iter().all(|&t| {
            matches!((imaginary_unit(&sys, t), crate::units::real_unit(&sys, t)), (Ok(y), Ok(x)) if y.coords == x)
        });
        verdicts["units_coincide"] = json!(same);
    } else {
        let series = existence_series(&k, cfg.n_max)?;
        bundle.add("existence_series", series.table());
        verdicts["existence_converging"] = json!(series.converging);
    }
    bundle.verdicts = verdicts;
    bundle.limit("max pairing residual", worst, cfg.hard_limit);
    Ok(bundle)
}

/// Diagnostics and verdict of one kernel on a sequence.
#[derive(Debug, Clone)]
pub struct KernelRun {
    pub name: String,
    pub diag: Option<SubspaceDiag>,
    pub record: VerdictRecord,
}

pub fn invariant_sequence(cfg: &InvariantsConfig) -> Result<Vec<ElementarySet>> {
    match &cfg.sets {
        Some(sets) => sets.iter().map(|s| ElementarySet::new(s.iter().map(|&[a, b]| (a, b)))).collect(),
        None => cantor_sequence(cfg.depth, cfg.keep, cfg.h),
    }
}

/// Default probes plus `y′` of the first complement.
pub fn invariant_probes(sys: &SumSystem, seq: &[ElementarySet]) -> Result<Vec<DVector<f64>>> {
    let mut probes = default_probes(sys)?;
    if let Some(first) = seq.first() {
        let c = first.complement();
        if !c.is_empty() {
            probes.push(crate::units::y_prime(sys, &c)?.coords);
        }
    }
    Ok(probes)
}

pub fn run_kernel_on_sequence(name: &str, k: Kernel, cfg: &InvariantsConfig, seq: &[ElementarySet]) -> Result<KernelRun> {
    let sys = SumSystem::new(k, cfg.h, 1.0)?;
    let probes = invariant_probes(&sys, seq)?;
    if seq.is_empty() {
        let record = classify(&sys, seq, &probes, cfg.thresholds)?;
        return Ok(KernelRun { name: name.into(), diag: None, record });
    }
    let diag = subspace_diagnostics(&sys, seq, &probes)?;
    let record = verdict_from(&sys, seq, &diag, cfg.thresholds);
    Ok(KernelRun { name: name.into(), diag: Some(diag), record })
}

pub fn run_invariant_suite(cfg: &InvariantsConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    let mut bundle = ReportBundle::new("invariants", cfg);
    let seq = invariant_sequence(cfg)?;
    let mut kernels = vec![("standard-l2".to_string(), Kernel::StandardL2)];
    for &a in &cfg.alphas {
        kernels.push((format!("tsirelson-alpha{a}"), Kernel::tsirelson(a)?));
    }
    let runs: Vec<KernelRun> =
        kernels.iter().map(|(name, k)| run_kernel_on_sequence(name, *k, cfg, &seq)).collect::<Result<_>>()?;
    for run in &runs {
        if let Some(diag) = &run.diag {
            bundle.add(&format!("residuals_{}", run.name), diag.table());
        }
    }
    let mut contrast = Vec::new();
    if let Some(base) = runs[0].diag.as_ref() {
        let mut header = vec!["step".to_string(), "complement_measure".into(), "standard-l2_yprime".into()];
        for run in &runs[1..] {
            header.push(format!("{}_yprime", run.name));
            header.push(format!("{}_ratio", run.name));
        }
        let mut t = Table::new(header);
        for n in 0..seq.len() {
            let mut row = vec![n.to_string(), fmt_f64(base.measures[n]), fmt_f64(base.yprime_norms[n])];
            for run in &runs[1..] {
                let d = run.diag.as_ref().expect("nonempty sequence");
                row.push(fmt_f64(d.yprime_norms[n]));
                row.push(fmt_f64(d.yprime_norms[n] / base.yprime_norms[n]));
            }
            t.push(row);
        }
        bundle.add("contrast", t);
        let last = seq.len() - 1;
        for run in &runs[1..] {
            let d = run.diag.as_ref().expect("nonempty sequence");
            let ratio = d.yprime_norms[last] / base.yprime_norms[last];
            contrast.push(json!({
                "kernel": run.name,
                "final_ratio": ratio,
                "target": cfg.contrast_target,
                "meets_target": ratio >= cfg.contrast_target,
            }));
        }
    }
    bundle.verdicts = json!({
        "records": runs.iter().map(|r| json!({ "name": r.name, "record": r.record })).collect::<Vec<_>>(),
        "contrast": contrast,
    });
    Ok(bundle)
}

/// Runs a suite and collects the exact bytes of every table.
pub fn table_bytes(bundle: &ReportBundle) -> Result<Vec<(String, String)>> {
    bundle.tables.iter().map(|(n, t)| Ok((n.clone(), t.to_csv_string()?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_shale() -> ShaleConfig {
        ShaleConfig {
            seed: Some(11),
            dims: vec![1, 2],
            pairs: 2,
            cutoffs: vec![4, 6],
            vacuum_cutoff: 40,
            weak_steps: 4,
            ..ShaleConfig::default()
        }
    }

    #[test]
    fn shale_suite_examples() {
        let b = run_shale_suite(&small_shale()).unwrap();
        let vac = b.table("vacuum").unwrap();
        let two = vac.rows.iter().find(|r| r[0] == "single" && r[1] == fmt_f64(2.0)).unwrap();
        assert!((two[3].parse::<f64>().unwrap() - 0.894_427_2).abs() < 1e-6);
        let diag = vac.rows.iter().find(|r| r[0] == "diagonal").unwrap();
        assert!((diag[3].parse::<f64>().unwrap() - 0.8).abs() < 1e-6);
        assert!(vac.comments[0].starts_with("sumsys "));
        assert!(vac.comments.iter().any(|c| c.starts_with("seed = 11")));
        assert_eq!(b.table("functoriality").unwrap().rows.len(), 4);
    }

    #[test]
    fn shale_suite_is_deterministic_and_seed_sensitive() {
        let a = table_bytes(&run_shale_suite(&small_shale()).unwrap()).unwrap();
        let b = table_bytes(&run_shale_suite(&small_shale()).unwrap()).unwrap();
        assert_eq!(a, b);
        let other = table_bytes(&run_shale_suite(&ShaleConfig { seed: Some(12), ..small_shale() }).unwrap()).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn random_maps_respect_the_singular_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in 1..=4 {
            let m = random_s_map(&mut rng, d, 0.6, 1.6).unwrap();
            let s = crate::linalg::svd_sorted(m.matrix()).singular;
            assert!(s.iter().all(|&v| (0.6 - 1e-12..=1.6 + 1e-12).contains(&v)));
        }
    }

    #[test]
    fn kernel_suite_examples() {
        let cfg = KernelConfig {
            gram_h: 1.0 / 16.0,
            defect_hs: vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0],
            fourier_ns: vec![0, 16],
            n_max: 256,
            ..KernelConfig::default()
        };
        let b = run_kernel_suite(&cfg).unwrap();
        let defects = b.table("defect_scan").unwrap();
        for r in defects.rows.iter().filter(|r| r[0] == "standard-l2") {
            assert_eq!(r[2].parse::<f64>().unwrap(), 0.0);
        }
        assert!(b.verdicts["zero_frequency_error"].as_f64().unwrap() < 1e-14);
        assert!(b.verdicts["drift_ok"].as_bool().unwrap());
    }

    #[test]
    fn units_suite_examples() {
        let cfg = UnitsConfig { h: 1.0 / 32.0, n_max: 256, probe_depth: 2, ..UnitsConfig::default() };
        let b = run_units_suite(&cfg).unwrap();
        assert!(b.quality_failure().is_none());
        let l2 = UnitsConfig {
            kernel: crate::config::KernelSpec { variant: crate::config::KernelChoice::StandardL2, ..Default::default() },
            ..cfg.clone()
        };
        let b = run_units_suite(&l2).unwrap();
        assert_eq!(b.verdicts["units_coincide"], json!(true));
        let strict = UnitsConfig { hard_limit: Some(0.0), ..cfg };
        let b = run_units_suite(&strict).unwrap();
        assert!(b.quality_failure().is_some() || b.quality.iter().all(|q| q.value == 0.0));
    }

    #[test]
    fn invariant_suite_examples() {
        let cfg = InvariantsConfig { h: 1.0 / 64.0, depth: 5, ..InvariantsConfig::default() };
        let b = run_invariant_suite(&cfg).unwrap();
        let recs = b.verdicts["records"].as_array().unwrap();
        assert_eq!(recs[0]["record"]["verdict"], json!("consistent-with-type-i"));
        assert!(b.table("contrast").is_some());
        let empty = InvariantsConfig { sets: Some(vec![]), ..cfg };
        let b = run_invariant_suite(&empty).unwrap();
        let recs = b.verdicts["records"].as_array().unwrap();
        assert_eq!(recs[0]["record"]["verdict"], json!("inconclusive"));
        assert!(recs[0]["record"]["note"].is_string());
    }

    #[test]
    fn bundle_writes_files() {
        let cfg = InvariantsConfig { h: 1.0 / 16.0, depth: 1, ..InvariantsConfig::default() };
        let b = run_invariant_suite(&cfg).unwrap();
        let dir = std::env::temp_dir().join(format!("sumsys-bundle-{}", std::process::id()));
        b.write(&dir).unwrap();
        for f in ["contrast.csv", "verdicts.json", "metadata.json", "residuals_standard-l2.csv"] {
            assert!(dir.join(f).exists(), "{f}");
        }
        std::fs::remove_dir_all(dir).unwrap();
    }
}
