//! Acceptance suite. Each test prints one `PASS`/`FAIL` line to the real
//! stdout (bypassing the harness capture) and then asserts.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use perisolve_cli::{find_suite, run_bench, Overrides, RunRecord};
use perisolve_core::nd::t_assignment;
use perisolve_core::spectral::{greens_kernel, kernel_autocorrelation};
use perisolve_core::stencil::{build_shift_list, build_stencil_table, compute_stencil, offpattern_gram, shift_list_for_range};
use perisolve_core::{gaussian_rhs, make_grid, setup, solve, FieldKind, ProblemConfig, RealField, SolverConfig};
use perisolve_oracle::{block_gram, dense_assemble, dense_green, dense_solve, dense_svd_block, neighborhood, submatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PI_SQ: f64 = PI * PI;

fn verdict(label: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "acceptance {tag} {label}: {detail}").unwrap();
    out.flush().unwrap();
}

fn soft(label: &str, detail: &str) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "acceptance INFO {label}: {detail}").unwrap();
    out.flush().unwrap();
}

fn bench(suite: &str, max_n: usize) -> Vec<RunRecord> {
    let dir = tempfile::tempdir().unwrap();
    let suite = find_suite(suite).unwrap();
    let (records, _) = run_bench(&suite, max_n, &Overrides::default(), dir.path()).unwrap();
    records
}

fn iterations(records: &[RunRecord]) -> Vec<(usize, usize)> {
    records
        .iter()
        .map(|r| (r.config.problem.n, r.report.iterations))
        .collect()
}

/// Every rung at most `cap` iterations and the last rung at most `growth` above the first.
fn flat_ladder(label: &str, suite: &str, cap: usize, growth: usize) {
    let recs = bench(suite, 256);
    let its = iterations(&recs);
    let ns: Vec<usize> = its.iter().map(|p| p.0).collect();
    assert_eq!(ns, vec![64, 128, 256]);
    let all_converged = recs.iter().all(|r| r.report.converged);
    let under_cap = its.iter().all(|&(_, k)| k <= cap);
    let first = its.first().unwrap().1;
    let last = its.last().unwrap().1;
    let pass = all_converged && under_cap && last <= first + growth;
    verdict(label, pass, &format!("(n, iterations) = {its:?}, cap {cap}, growth limit +{growth}"));
    assert!(pass);
}

#[test]
fn helmholtz_bump_2d_iterations_stay_flat() {
    flat_ladder("2D Helmholtz bump ladder", "2DHi", 10, 4);
}

#[test]
fn helmholtz_cross_2d_iterations_stay_flat() {
    flat_ladder("2D Helmholtz cross ladder", "2DHii", 10, 4);
}

#[test]
fn schrodinger_random_wells_2d_iterations_stay_flat() {
    flat_ladder("2D Schrodinger random wells ladder", "2DSi", 12, 4);
}

#[test]
fn schrodinger_lattice_2d_iterations_stay_flat() {
    flat_ladder("2D Schrodinger lattice ladder", "2DSii", 12, 4);
}

#[test]
fn three_dimensional_suites_iterations_bounded() {
    let mut rows = Vec::new();
    let mut pass = true;
    for suite in ["3DHi", "3DHii", "3DSi", "3DSii"] {
        let recs = bench(suite, 32);
        for r in &recs {
            pass &= r.report.converged && r.report.iterations <= 14;
        }
        pass &= recs.len() == 2;
        rows.push((suite, iterations(&recs)));
    }
    verdict("3D ladders at 16 and 32", pass, &format!("{rows:?}, cap 14"));
    assert!(pass);
}

fn rel_err(x: &[f64], y: &[f64]) -> f64 {
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = y.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

#[test]
fn preconditioned_solve_matches_dense_oracle() {
    let v = ProblemConfig::preset(FieldKind::GaussianBump, 2, 16).potential().unwrap();
    let f = gaussian_rhs(v.grid());
    let (u, report) = solve(&v, &f, &SolverConfig::default()).unwrap();
    let a = dense_assemble(2, 16, v.values()).unwrap();
    let want = dense_solve(&a, f.values()).unwrap();
    let err = rel_err(u.values(), &want);
    let pass = report.converged && err <= 1e-5;
    verdict(
        "dense oracle equivalence, 2D bump n=16",
        pass,
        &format!("relative error {err:.3e} after {} iterations (limit 1e-5)", report.iterations),
    );
    assert!(pass);
}

fn sweep() -> Vec<(usize, usize, f64, usize)> {
    let mut out = Vec::new();
    for d in [1, 2] {
        for n in [16, 32] {
            for s in [2.0 * PI_SQ, -62.0 * PI_SQ] {
                for t in [1, 2] {
                    out.push((d, n, s, t));
                }
            }
        }
    }
    out
}

#[test]
fn gram_identity_matches_dense_green_block() {
    let mut worst: f64 = 0.0;
    for (d, n, s, t) in sweep() {
        let grid = make_grid(d, n).unwrap();
        let g = greens_kernel(grid, s).unwrap();
        let a = kernel_autocorrelation(grid, &g).unwrap();
        let fast = offpattern_gram(grid, &g, &a, t);
        let dense = dense_green(d, n, s).unwrap();
        let (mu, rest) = neighborhood(d, n, 0, t);
        let bbt = block_gram(&dense, &mu, &rest);
        worst = worst.max((&fast - &bbt).norm() / bbt.norm());
    }
    let pass = worst <= 1e-10;
    verdict(
        "off-pattern Gram identity",
        pass,
        &format!("worst relative Frobenius error {worst:.3e} over 16 cases (limit 1e-10)"),
    );
    assert!(pass);
}

#[test]
fn stencil_attains_smallest_singular_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_sigma: f64 = 0.0;
    let mut beaten = 0;
    for (d, n, s, t) in sweep() {
        let grid = make_grid(d, n).unwrap();
        let st = compute_stencil(grid, s, t).unwrap();
        let dense = dense_green(d, n, s).unwrap();
        let (mu, rest) = neighborhood(d, n, 0, t);
        let (sigma, _) = dense_svd_block(&dense, &mu, &rest);
        worst_sigma = worst_sigma.max((st.sigma_min - sigma).abs());
        let b: DMatrix<f64> = submatrix(&dense, &mu, &rest);
        for _ in 0..100 {
            let mut beta: Vec<f64> = (0..mu.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = beta.iter().map(|x| x * x).sum::<f64>().sqrt();
            beta.iter_mut().for_each(|x| *x /= norm);
            let resid = (DVector::from_column_slice(&beta).transpose() * &b).norm();
            if resid < st.sigma_min {
                beaten += 1;
            }
        }
    }
    let pass = worst_sigma <= 1e-8 && beaten == 0;
    verdict(
        "stencil optimality",
        pass,
        &format!("max |sigma - dense sigma| {worst_sigma:.3e} (limit 1e-8), random vectors beating the stencil: {beaten}/1600"),
    );
    assert!(pass);
}

/// Values of the t map drawn for n = 16, B = 4, t_max = 4.
fn drawn_t(x: usize, y: usize) -> usize {
    let sx = x.is_multiple_of(4);
    let sy = y.is_multiple_of(4);
    let mx = x % 4 == 2;
    let my = y % 4 == 2;
    match (sx, sy) {
        (true, true) => 4,
        (true, false) => 1 + usize::from(my),
        (false, true) => 1 + usize::from(mx),
        (false, false) => 1 + usize::from(mx && my),
    }
}

#[test]
fn t_map_reproduces_drawn_radii() {
    let grid = make_grid(2, 16).unwrap();
    let t = t_assignment(grid, 4, 4).unwrap();
    let mut mismatches = Vec::new();
    for (j, &tj) in t.iter().enumerate() {
        let c = grid.coords(j);
        let want = drawn_t(c[0], c[1]);
        if tj != want {
            mismatches.push((c[0], c[1], tj, want));
        }
    }
    let pass = t.len() == 256 && mismatches.is_empty();
    verdict(
        "t map at n=16, B=4, t_max=4",
        pass,
        &format!("{} of 256 points differ {:?}", mismatches.len(), &mismatches[..mismatches.len().min(5)]),
    );
    assert!(pass);
}

#[test]
fn shift_lists_keep_resonance_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut violations = 0;
    let mut shifts_checked = 0;
    for _ in 0..1000 {
        let a = rng.gen_range(-2.0e6..2.0e3);
        let width = rng.gen_range(0.0..1.0e6);
        let count = rng.gen_range(1..=32);
        let list = shift_list_for_range(a, a + width, count).unwrap();
        for (&m, &s) in list.lattice().iter().zip(list.shifts()) {
            shifts_checked += 1;
            // s = (4m + 2) pi^2 and the eigenvalues of L are 4 pi^2 K with K >= 0,
            // so the gap in units of pi^2 is min_K |4K + 4m + 2|.
            let top = (-m).max(0) + 1;
            let gap_units = (0..=top).map(|k| (4 * k + 4 * m + 2).abs()).min().unwrap();
            let on_lattice = s == (4 * m + 2) as f64 * PI_SQ;
            if gap_units < 2 || !on_lattice {
                violations += 1;
            }
        }
    }
    let pass = violations == 0;
    verdict(
        "resonance gap of shift lists",
        pass,
        &format!("{violations} of {shifts_checked} shifts closer than 2 pi^2 to the spectrum, 1000 intervals"),
    );
    assert!(pass);
}

#[test]
fn constant_potential_converges_almost_immediately() {
    let mut rows = Vec::new();
    let mut pass = true;
    for m in [0i64, -16] {
        let s = (4 * m + 2) as f64 * PI_SQ;
        let grid = make_grid(2, 32).unwrap();
        let v = RealField::constant(grid, s);
        let f = gaussian_rhs(grid);
        let cfg = SolverConfig::default();
        let prepared = setup(&v, &cfg).unwrap();
        let in_list = prepared.shifts.shifts().contains(&s);
        let (_, report) = solve(&v, &f, &cfg).unwrap();
        pass &= in_list && report.converged && report.iterations <= 3;
        rows.push((format!("{}pi^2", 4 * m + 2), report.iterations));
    }
    verdict(
        "constant potential on a shift, d=2 n=32",
        pass,
        &format!("(shift, iterations) = {rows:?}, limit 3"),
    );
    assert!(pass);
}

const DETERMINISM_CONFIG: &str = "\
equation = schrodinger
field = random_gaussians
d = 2
n = 64
seed = 7
";

fn run_cli(cfg: &Path, out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_perisolve"))
        .args(["solve", "--config"])
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn csv_iterations(path: &Path) -> Vec<String> {
    let mut rd = csv::Reader::from_path(path).unwrap();
    let col = rd.headers().unwrap().iter().position(|h| h == "iterations").unwrap();
    rd.records().map(|r| r.unwrap()[col].to_string()).collect()
}

#[test]
fn solve_command_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("det.cfg");
    std::fs::write(&cfg, DETERMINISM_CONFIG).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ra = run_cli(&cfg, &a);
    let rb = run_cli(&cfg, &b);
    let ok_exit = ra.status.success() && rb.status.success();
    let name = "schrodinger_random_gaussians_2d_64";
    let ua = std::fs::read(a.join(format!("{name}_u.bin"))).unwrap_or_default();
    let ub = std::fs::read(b.join(format!("{name}_u.bin"))).unwrap_or_default();
    let ia = csv_iterations(&a.join("runs.csv"));
    let ib = csv_iterations(&b.join("runs.csv"));
    let pass = ok_exit && !ua.is_empty() && ua == ub && ia == ib;
    verdict(
        "solve determinism",
        pass,
        &format!("iterations {ia:?} vs {ib:?}, snapshots {} bytes, identical: {}", ua.len(), ua == ub),
    );
    assert!(pass);
}

fn best_of<T>(reps: usize, mut f: impl FnMut() -> (Duration, T)) -> Duration {
    (0..reps).map(|_| f().0).min().unwrap()
}

/// Reported only; timings on shared machines are too noisy to gate on.
#[test]
fn stencil_and_setup_scaling_report() {
    let mut stencil = Vec::new();
    let mut nd = Vec::new();
    for n in [64usize, 128, 256] {
        let v = ProblemConfig::preset(FieldKind::GaussianBump, 2, n).potential().unwrap();
        let t_st = best_of(3, || {
            let start = Instant::now();
            let shifts = build_shift_list(&v, 4).unwrap();
            let table = build_stencil_table(v.grid(), &shifts, 2).unwrap();
            (start.elapsed(), table.len())
        });
        let cfg = SolverConfig { shift_count: Some(4), ..SolverConfig::default() };
        let t_nd = best_of(2, || {
            let s = setup(&v, &cfg).unwrap();
            (s.nd_setup_time, ())
        });
        stencil.push((n, t_st));
        nd.push((n, t_nd));
    }
    let ratio = stencil[2].1.as_secs_f64() / stencil[1].1.as_secs_f64();
    let exponent = |a: (usize, Duration), b: (usize, Duration)| {
        (b.1.as_secs_f64() / a.1.as_secs_f64()).ln() / ((b.0 * b.0) as f64 / (a.0 * a.0) as f64).ln()
    };
    soft(
        "stencil time ratio n=128 to n=256 at |S|=4",
        &format!("{ratio:.2}x (target at most 6x, {})", if ratio <= 6.0 { "met" } else { "missed" }),
    );
    soft(
        "ND setup scaling exponent in N",
        &format!(
            "{:.2} (64 to 128), {:.2} (128 to 256); nested dissection predicts 1.5 in 2D; times {:?}",
            exponent(nd[0], nd[1]),
            exponent(nd[1], nd[2]),
            nd.iter().map(|p| (p.0, p.1.as_secs_f64())).collect::<Vec<_>>()
        ),
    );
}
