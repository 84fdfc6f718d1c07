//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails. Pass criterion names as arguments to
//! run a subset.

#![allow(clippy::needless_range_loop)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use chemdist::{run_with_threads, ExperimentConfig};
use chemdist_core::distance::{bfs_from, estimate_rho_hat};
use chemdist_core::estimators::{
    estimate_norm, mean_gap, moderate_deviation_tails, shape_experiment, variance_scaling,
};
use chemdist_core::lattice::l1;
use chemdist_core::norm::NormEstimate;
use chemdist_core::renorm::{coupling_experiment, efron_stein_experiment, renormalized_distance_index, RedParams};
use chemdist_core::skeleton::{
    calibrate_c, default_c_grid, lemma_check, scaled_fan, skeleton_length_experiment, CChoice, HTable, SupportFunctional,
};
use chemdist_core::{rng, star_distance, BoxSpec, ClusterLabels, EdgeConfiguration, MesoPartition};
use serde_json::json;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

const INF: u64 = u64::MAX / 4;

fn floyd_warshall(cfg: &EdgeConfiguration) -> Vec<Vec<u64>> {
    let spec = cfg.spec();
    let n = spec.vertex_count();
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for v in 0..n {
        let x = spec.coords(v);
        for axis in 0..spec.dim() {
            let mut y = x.clone();
            y[axis] += 1;
            if spec.contains(&y) && cfg.is_open(&x, axis) {
                let w = spec.index(&y).unwrap();
                d[v][w] = 1;
                d[w][v] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

fn all_pairs(cfg: &EdgeConfiguration) -> Vec<Vec<Option<u32>>> {
    let n = cfg.spec().vertex_count();
    (0..n).map(|v| {
        let f = bfs_from(cfg, v);
        (0..n).map(|w| f.get(w)).collect()
    }).collect()
}

fn exact_oracle() -> Outcome {
    let start = Instant::now();
    let spec = BoxSpec::new(2, 3, 0).unwrap();
    let mut mismatches = 0;
    for i in 0..500u64 {
        let p = rng::uniform(2024, i);
        let cfg = EdgeConfiguration::sample(&spec, p, rng::derive(7, i)).unwrap();
        let fw = floyd_warshall(&cfg);
        let ours = all_pairs(&cfg);
        for (a, row) in ours.iter().enumerate() {
            for (b, d) in row.iter().enumerate() {
                let expected = (fw[a][b] < INF).then_some(fw[a][b] as u32);
                if *d != expected {
                    mismatches += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(mismatches == 0 && secs < 10.0, format!("500 configurations, {mismatches} mismatching pairs, {secs:.2}s"))
}

fn degenerate() -> Outcome {
    let spec = BoxSpec::new(2, 5, 0).unwrap();
    let full = EdgeConfiguration::sample(&spec, 1.0, 11).unwrap();
    let n = spec.vertex_count();
    let d = all_pairs(&full);
    let l1_ok = (0..n).all(|a| (0..n).all(|b| d[a][b] == Some(l1(&spec.coords(a), &spec.coords(b)) as u32)));
    let empty = EdgeConfiguration::sample(&spec, 0.0, 11).unwrap();
    let e = all_pairs(&empty);
    let inf_ok = (0..n).all(|a| (0..n).all(|b| if a == b { e[a][b] == Some(0) } else { e[a][b].is_none() }));
    let vspec = BoxSpec::new(2, 40, 0).unwrap();
    let var = variance_scaling(&vspec, 1.0, 3, &[1, 0], &[5, 10, 20, 40], 8).unwrap();
    let var_ok = var.rows.iter().all(|r| r.var_hat == 0.0);
    outcome(l1_ok && inf_ok && var_ok, format!("p=1 l1 {l1_ok}, p=0 infinite {inf_ok}, p=1 variances zero {var_ok}"))
}

const WITNESS_OPEN: [usize; 24] = [1, 2, 8, 10, 11, 13, 15, 16, 17, 18, 22, 23, 24, 25, 26, 27, 31, 32, 33, 36, 37, 41, 45, 47];

fn monotone_and_witness() -> Outcome {
    let spec = BoxSpec::new(2, 3, 0).unwrap();
    let cfg = EdgeConfiguration::sample(&spec, 0.5, 31337).unwrap();
    let base = all_pairs(&cfg);
    let mut flips = 0;
    let mut increases = 0;
    for slot in spec.edges().filter(|&s| !cfg.is_open_slot(s)) {
        flips += 1;
        let after = all_pairs(&cfg.with_edge(slot, true));
        for (ra, rb) in base.iter().zip(&after) {
            for (a, b) in ra.iter().zip(rb) {
                match (a, b) {
                    (Some(x), Some(y)) if y > x => increases += 1,
                    (Some(_), None) => increases += 1,
                    _ => {}
                }
            }
        }
    }
    let wspec = BoxSpec::new(2, 2, 0).unwrap();
    let w = EdgeConfiguration::from_fn(&wspec, 0.6, 0, |s| WITNESS_OPEN.contains(&s));
    let (x, y) = ([-2, -2], [-2, 0]);
    let before = star_distance(&w, &ClusterLabels::label(&w), &x, &y).unwrap();
    let opened = w.with_edge(3, true);
    let after = star_distance(&opened, &ClusterLabels::label(&opened), &x, &y).unwrap();
    outcome(
        increases == 0 && after > before,
        format!("{flips} single-edge openings, {increases} distance increases; stored witness D* {before} -> {after}"),
    )
}

fn dt_contracts() -> Outcome {
    let mut violations = 0;
    let mut finite = 0;
    for i in 0..200u64 {
        let s = rng::derive(4242, i);
        let spec = BoxSpec::new(2, 12, 0).unwrap();
        let p = 0.6 + 0.4 * rng::uniform(s, 0);
        let t = 2 + rng::index(s, 1, 5) as i64;
        let cfg = EdgeConfiguration::sample(&spec, p, s).unwrap();
        let meso = MesoPartition::build(&spec, t).unwrap();
        let params = RedParams::<f64>::from_rho(t, 1.5).unwrap();
        let red = params.red_length();
        let n = spec.vertex_count();
        let (x, y) = (rng::index(s, 2, n), rng::index(s, 3, n));
        let dt = renormalized_distance_index(&cfg, &meso, red, x, y);
        let d = chemdist_core::distance::chemical_distance_index(&cfg, x, y);
        finite += d.is_some() as usize;
        let sep = l1(&spec.coords(x), &spec.coords(y)) as u64;
        // K (|y - x|_1 + t) with K = red / t, compared without division
        let red_ok = dt * t as u64 <= red * (sep + t as u64);
        if !red_ok || d.is_some_and(|d| dt > d as u64) {
            violations += 1;
        }
    }
    let spec = BoxSpec::new(2, 6, 0).unwrap();
    let closed = EdgeConfiguration::closed(&spec);
    let mut exact = true;
    for t in [2, 3, 5] {
        let meso = MesoPartition::build(&spec, t).unwrap();
        let red = RedParams::<f64>::from_rho(t, 1.5).unwrap().red_length();
        for b in 0..meso.box_count() {
            let vs = meso.vertices_of(b);
            let (a, z) = (vs[0] as usize, vs[vs.len() - 1] as usize);
            if a != z && renormalized_distance_index(&closed, &meso, red, a, z) != red {
                exact = false;
            }
        }
    }
    outcome(
        violations == 0 && exact,
        format!("200 instances ({finite} connected), {violations} violations; closed same-box D^t = K t: {exact}"),
    )
}

fn efron_stein() -> Outcome {
    let spec = BoxSpec::new(2, 30, 0).unwrap();
    let rho = estimate_rho_hat(&spec, 0.7, 5, 20).unwrap().rho_hat;
    let r = efron_stein_experiment(&spec, 0.7, 8, &[20, 0], 5, rho, 300, 1).unwrap();
    let pass = r.draw_violations == 0 && r.y_violations == 0 && r.ess_holds;
    outcome(
        pass,
        format!(
            "{} draws, {} draw violations, {} Y violations; Var D^t = {:.2}, mean V- + 3 SE = {:.2} + {:.2} = {:.2}",
            r.draws_checked,
            r.draw_violations,
            r.y_violations,
            r.var_hat,
            r.v_minus_mean,
            3.0 * r.v_minus_se,
            r.v_minus_mean + 3.0 * r.v_minus_se
        ),
    )
}

fn variance_scaling_check() -> Outcome {
    let spec = BoxSpec::new(2, 210, 0).unwrap();
    let r = variance_scaling(&spec, 0.7, 101, &[1, 0], &[25, 50, 100, 200], 400).unwrap();
    let spread = r.normalized_spread();
    let cols: Vec<String> = r.rows.iter().map(|row| format!("n={} var={:.2} ratio={:.4}", row.n, row.var_hat, row.normalized)).collect();
    outcome(spread <= 3.0, format!("max/min = {spread:.3}; {}", cols.join(", ")))
}

fn tails() -> Outcome {
    let spec = BoxSpec::new(2, 110, 0).unwrap();
    let r = moderate_deviation_tails(&spec, 0.7, 202, &[1, 0], 100, &[1.0, 2.0, 3.0, 4.0], 2000).unwrap();
    let pass = r.log_tail_decreasing(5);
    let cols: Vec<String> = r.rows.iter().map(|row| format!("x={} count={}", row.x, row.count)).collect();
    outcome(pass, format!("2000 samples; {}", cols.join(", ")))
}

fn gap() -> Outcome {
    let mu_spec = BoxSpec::new(2, 600, 0).unwrap();
    let (mu, _) = estimate_norm(&mu_spec, 0.7, 303, 200, 200).unwrap();
    let spec = BoxSpec::new(2, 110, 0).unwrap();
    let r = mean_gap(&spec, 0.7, 304, &[1, 0], &[25, 50, 100], 400, &mu).unwrap();
    let nonneg = r.rows.iter().all(|row| row.nonnegative);
    let doubling = r.doubling.iter().all(|c| c.holds);
    let cols: Vec<String> = r.rows.iter().map(|row| format!("n={} gap={:.2}±{:.2}", row.n, row.gap, row.se)).collect();
    outcome(nonneg && doubling, format!("nonnegative {nonneg}, doubling {doubling}; {}", cols.join(", ")))
}

fn shape() -> Outcome {
    let exact_spec = BoxSpec::new(2, 30, 0).unwrap();
    let l1n = NormEstimate::<f64>::l1(2).unwrap();
    let exact = shape_experiment(&exact_spec, 1.0, 1, &[10, 20], &l1n, 2).unwrap();
    let zero = exact.rows.iter().all(|r| r.max_deviation == 0.0);
    let mu_spec = BoxSpec::new(2, 180, 0).unwrap();
    let (mu, _) = estimate_norm(&mu_spec, 0.7, 404, 60, 200).unwrap();
    let spec = BoxSpec::new(2, 120, 5).unwrap();
    let reps = 60;
    let r = shape_experiment(&spec, 0.7, 405, &[50, 100], &mu, reps).unwrap();
    let mut per_rep: BTreeMap<(usize, i64), f64> = BTreeMap::new();
    for row in &r.radii {
        let e = per_rep.entry((row.replication, row.t)).or_insert(0.0);
        *e = e.max(row.deviation);
    }
    let diffs: Vec<f64> = (0..reps).map(|k| per_rep[&(k, 100)] - per_rep[&(k, 50)]).collect();
    let s = chemdist_core::stats::Summary::<f64>::of(&diffs);
    let trend = s.mean <= 2.0 * s.se;
    outcome(
        zero && trend,
        format!(
            "p=1 zero discrepancy {zero}; p=0.7 max deviation t=50 {:.4}, t=100 {:.4}, paired difference {:.4} (2 SE {:.4})",
            r.rows[0].max_deviation, r.rows[1].max_deviation, s.mean, 2.0 * s.se
        ),
    )
}

fn coupling() -> Outcome {
    let spec = BoxSpec::new(2, 40, 5).unwrap();
    let rho = estimate_rho_hat(&spec, 0.7, 6, 20).unwrap().rho_hat;
    let r = coupling_experiment(&spec, 0.7, 606, &[25, 0], &[5, 10, 20], rho, 300).unwrap();
    let monotone = r.rows.windows(2).all(|w| w[1].statistic <= w[0].ci_high);
    let full = coupling_experiment(&spec, 1.0, 607, &[25, 0], &[5, 10, 20], rho, 20).unwrap();
    let zero = full.rows.iter().all(|row| row.statistic == 0.0);
    let rates: Vec<String> = r.rows.iter().map(|row| format!("t={} rate={:.4}", row.t, row.statistic)).collect();
    outcome(monotone && zero, format!("{}; non-increasing {monotone}; p=1 zero {zero}", rates.join(", ")))
}

fn skeleton() -> Outcome {
    let x = [20, 0];
    // supporting functionals at p = 1
    let pspec = BoxSpec::new(2, 40, 0).unwrap();
    let (exact_mu, _) = estimate_norm(&pspec, 1.0, 1, 10, 2).unwrap();
    let mut support_exact = true;
    for u in scaled_fan(2, 20) {
        support_exact &= SupportFunctional::build(&exact_mu, &u).unwrap().check(&exact_mu, 1e-9).unwrap().holds;
    }
    let spec = BoxSpec::new(2, 110, 5).unwrap();
    let (mu, _) = estimate_norm(&spec, 0.7, 701, 30, 100).unwrap();
    // clause 1 scans |y|_1 <= (2d + 1) |x|_1 over the fan
    let radius = 5 * scaled_fan(2, 20).iter().map(|u| l1(u, &[0, 0])).max().unwrap();
    let (table, _) = HTable::<f64>::estimate(&spec, 0.7, 702, radius, 200).unwrap();
    // at p = 0.7, |mu_x(u)| <= raw estimate + CI and mu_x <= mu(x) on the ball
    let mut support_ci = true;
    for u in scaled_fan(2, 20) {
        let f = SupportFunctional::build(&mu, &u).unwrap();
        support_ci &= f.check(&mu, 1e-9).unwrap().holds;
        for e in mu.directions() {
            support_ci &= f.eval(&e.direction).abs() <= e.ci_high + 1e-9 * e.value;
        }
    }
    let c = calibrate_c(&mu, &table, &scaled_fan(2, 20), &default_c_grid()).unwrap();
    let mut clauses = true;
    for u in scaled_fan(2, 20) {
        let chk = lemma_check(&mu, &table, &u, c).unwrap();
        clauses &= chk.clause1 && chk.clause4;
    }
    let r = skeleton_length_experiment(&spec, 0.7, 703, &x, &[2, 4], CChoice::Auto, 60, &mu, &table).unwrap();
    let (f2, f4) = (r.pass_fraction(2), r.pass_fraction(4));
    let pass = support_exact && support_ci && clauses && f2 >= 0.9 && f4 >= 0.9;
    outcome(
        pass,
        format!(
            "C = {c:.3}, threshold {:?}; pass fraction n=2 {f2:.3}, n=4 {f4:.3} over 60 configurations; support p=1 {support_exact}, p=0.7 {support_ci}; clauses 1 and 4 {clauses}",
            r.threshold.m_hat
        ),
    )
}

fn configs(dir: &Path) -> Vec<serde_json::Value> {
    let o = |name: &str| dir.join(name);
    vec![
        json!({"experiment": "sample", "parameters": {"L": 6, "p": 0.6}, "master_seed": 1, "output_dir": o("sample")}),
        json!({"experiment": "dist", "parameters": {"L": 6, "p": 0.7, "source": [-3, 0], "target": [4, 2], "t": 3, "rho_hat": 1.5}, "master_seed": 2, "output_dir": o("dist")}),
        json!({"experiment": "mu", "parameters": {"L": 40, "p": 0.7, "y": [1, 0], "n_grid": [8, 16, 32], "replications": 40}, "master_seed": 3, "output_dir": o("mu")}),
        json!({"experiment": "var", "parameters": {"L": 40, "p": 0.7, "y": [1, 1], "n_grid": [5, 10, 20], "replications": 40}, "master_seed": 4, "output_dir": o("var")}),
        json!({"experiment": "tails", "parameters": {"L": 30, "p": 0.7, "y": [1, 0], "n": 25, "x_grid": [0.5, 1, 2], "replications": 60}, "master_seed": 5, "output_dir": o("tails")}),
        json!({"experiment": "gap", "parameters": {"L": 40, "p": 0.7, "y": [1, 0], "n_grid": [5, 10], "replications": 30, "mu": {"n": 10, "replications": 20}}, "master_seed": 6, "output_dir": o("gap")}),
        json!({"experiment": "shape", "parameters": {"L": 30, "margin": 2, "p": 0.7, "t_grid": [10, 20], "replications": 4, "mu": {"n": 8, "replications": 20}}, "master_seed": 7, "output_dir": o("shape")}),
        json!({"experiment": "coupling", "parameters": {"L": 20, "margin": 2, "p": 0.7, "y": [10, 0], "t_grid": [2, 4], "configs": 30}, "master_seed": 8, "output_dir": o("coupling")}),
        json!({"experiment": "efron-stein", "parameters": {"L": 10, "p": 0.7, "y": [6, 0], "t": 3, "configs": 12, "verbose": true}, "master_seed": 9, "output_dir": o("efron-stein")}),
        json!({"experiment": "skeleton", "parameters": {"L": 40, "margin": 2, "p": 0.7, "x": [6, 0], "n_grid": [2, 3], "replications": 12, "mu": {"n": 10, "replications": 20}, "h": {"replications": 20}}, "master_seed": 10, "output_dir": o("skeleton")}),
        json!({"experiment": "diag-tails", "parameters": {"L": 20, "p": 0.6, "r_grid": [1, 2, 4], "replications": 20}, "master_seed": 11, "output_dir": o("diag-tails")}),
    ]
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in walk(dir) {
        let name = entry.strip_prefix(dir).unwrap().display().to_string();
        if !name.ends_with(".meta.json") {
            out.insert(name, fs::read(&entry).unwrap());
        }
    }
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut files = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            files.extend(walk(&p));
        } else {
            files.push(p);
        }
    }
    files.sort();
    files
}

fn reproducibility() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let mut snaps = Vec::new();
    for threads in [1usize, 3, 8] {
        let dir = root.path().join(format!("threads-{threads}"));
        for v in configs(&dir) {
            let cfg = ExperimentConfig::from_value(v).unwrap();
            if let Err(e) = run_with_threads(&cfg, Some(threads)) {
                return outcome(false, format!("{} failed: {e}", cfg.experiment.name()));
            }
        }
        snaps.push(snapshot(&dir));
    }
    let files = snaps[0].len();
    let identical = snaps.windows(2).all(|w| w[0] == w[1]);
    outcome(identical && files > 11, format!("11 experiments, {files} artifacts, byte-identical across 1/3/8 threads: {identical}"))
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 12] = [
    ("exact-oracle", exact_oracle),
    ("degenerate", degenerate),
    ("monotonicity", monotone_and_witness),
    ("dt-contracts", dt_contracts),
    ("efron-stein", efron_stein),
    ("variance-scaling", variance_scaling_check),
    ("tails", tails),
    ("mean-gap", gap),
    ("shape", shape),
    ("coupling", coupling),
    ("skeleton", skeleton),
    ("reproducibility", reproducibility),
];

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (name, f) in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|x| name.contains(x.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        ran += 1;
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
