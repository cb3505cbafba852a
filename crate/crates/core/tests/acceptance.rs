//! Acceptance checks. Each criterion prints one `PASS`/`FAIL` line; the
//! process exits nonzero when any criterion fails.

use std::path::{Path, PathBuf};
use std::time::Instant;

use fracpm::diagnostics::{trilinear_t, Kernel, TrilinearMode};
use fracpm::driver::{
    grid_refinement, mu_convergence, picard_iteration, run_command, simulate_into, verify_suite, Command,
    RunConfig,
};
use fracpm::model::ModelParams;
use fracpm::spectral::{
    apply_multiplier, fractional_power, inverse_transform, CutoffSpec, RealField, TorusGrid,
};
use fracpm::verify::{
    check_antisymmetry, commutator_ratio, commutator_trial, hashed_random_field, lemma1_gap, sample_commutator,
    sample_lemma1,
};
use num_complex::Complex64;

const HEAT_TOL: f64 = 1e-8;
const HEAT_RUNTIME_S: f64 = 1.0;
const MASS_TOL: f64 = 1e-12;
const ALGEBRA_TOL: f64 = 1e-12;
const ANTISYMMETRY_TOL: f64 = 1e-10;
const NAIVE_FFT_TOL: f64 = 1e-10;
const ENERGY_MIN_ORDER: f64 = 2.0;
const LEMMA_SAMPLES: usize = 100_000;
const SCALE_TOL: f64 = 1e-10;
const COMMUTATOR_TRIALS: usize = 200;
const COMMUTATOR_GROWTH: f64 = 2.0;
const CONSTANT_F_TOL: f64 = 1e-12;
const REFINE_MIN_RATIO: f64 = 10.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shipped(name: &str) -> RunConfig {
    let text = std::fs::read_to_string(configs_dir().join(name)).expect("shipped config");
    RunConfig::from_text(&text, &[]).expect("valid shipped config")
}

fn config(pairs: &[(&str, &str)]) -> RunConfig {
    let owned: Vec<_> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    RunConfig::from_pairs(&owned).expect("valid config")
}

fn scratch() -> tempfile::TempDir {
    tempfile::tempdir().expect("temp dir")
}

fn heat_exactness() -> Outcome {
    let cfg = config(&[
        ("dimension", "1"),
        ("modes", "64"),
        ("c_k", "0"),
        ("nu", "1"),
        ("ic_mean", "1"),
        ("ic_amplitude", "1"),
        ("t_end", "0.1"),
        ("dt_policy", "fixed"),
        ("dt", "0.001"),
    ]);
    let dir = scratch();
    let start = Instant::now();
    let report = simulate_into(&cfg, dir.path()).expect("heat run");
    let elapsed = start.elapsed().as_secs_f64();
    let rho = inverse_transform(&report.final_state.state).unwrap();
    let decay = (-0.1f64).exp();
    let mut err = 0.0f64;
    let mut scale = 0.0f64;
    for (j, v) in rho.values().iter().enumerate() {
        let exact = 1.0 + decay * cfg.grid().point(j)[0].cos();
        err = err.max((v - exact).abs());
        scale = scale.max(exact.abs());
    }
    let rel = err / scale;
    outcome(
        rel < HEAT_TOL && elapsed < HEAT_RUNTIME_S && report.final_state.t == 0.1,
        format!("max rel error {rel:.3e} (< {HEAT_TOL:e}), runtime {elapsed:.3} s (< {HEAT_RUNTIME_S} s)"),
    )
}

fn mass_conservation() -> Outcome {
    let mut entries: Vec<_> = std::fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "conf"))
        .collect();
    entries.sort();
    let mut worst = 0.0f64;
    let mut names = Vec::new();
    for path in &entries {
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let cfg = shipped(&name);
        let dir = scratch();
        let report = simulate_into(&cfg, dir.path()).expect("shipped run");
        let m0 = report.records[0].mass;
        let drift = report
            .records
            .iter()
            .map(|r| (r.mass - m0).abs() / m0.abs())
            .fold(0.0, f64::max);
        worst = worst.max(drift);
        names.push(format!("{name}={drift:.1e}"));
    }
    outcome(
        !entries.is_empty() && worst < MASS_TOL,
        format!("{} configs, worst relative drift {worst:.3e} (< {MASS_TOL:e}) [{}]", entries.len(), names.join(" ")),
    )
}

fn operator_algebra() -> Outcome {
    let exponents = [(0.7, -1.3), (1.5, 2.5), (-0.5, -0.25), (3.0, -3.0)];
    let mut worst = 0.0f64;
    for d in [1, 2] {
        for n in [32, 64] {
            let grid = TorusGrid::new(d, n).unwrap();
            for (seed, &(s1, s2)) in exponents.iter().enumerate() {
                let f = hashed_random_field(grid, seed as u64, 3, |k| {
                    let r = k.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if r == 0.0 {
                        0.0
                    } else {
                        (1.0 + r).powf(-2.0)
                    }
                });
                let both = apply_multiplier(&apply_multiplier(&f, &fractional_power(s1)), &fractional_power(s2));
                let once = apply_multiplier(&f, &fractional_power(s1 + s2));
                let err = both.sub(&once).max_abs() / once.max_abs();
                worst = worst.max(err);
            }
        }
    }
    outcome(
        worst < ALGEBRA_TOL,
        format!("worst relative defect {worst:.3e} (< {ALGEBRA_TOL:e}) over d in {{1,2}}, N in {{32,64}}"),
    )
}

fn trilinear_antisymmetry() -> Outcome {
    let mut worst = 0.0f64;
    for d in [1, 2] {
        let grid = TorusGrid::new(d, 32).unwrap();
        let report = check_antisymmetry(grid, 100, 11, ANTISYMMETRY_TOL).unwrap();
        worst = worst.max(report.sup_ratio);
    }
    let p = ModelParams::new(-1.0, -1.0, 0.0, 0.25, CutoffSpec::SmoothBump).unwrap();
    let mut agree = 0.0f64;
    for d in [1, 2] {
        let grid = TorusGrid::new(d, 32).unwrap();
        for (i, s) in [0.0, 1.0, 2.5].into_iter().enumerate() {
            let mut field = hashed_random_field(grid, 5, i as u64, |k| {
                (1.0 + k.iter().map(|x| x * x).sum::<f64>()).powf(-1.0)
            });
            field.coeffs_mut()[0] = Complex64::new(1.0, 0.0);
            let kernel = Kernel::energy(s, &p, d);
            let naive = trilinear_t(&kernel, &field, TrilinearMode::Naive).unwrap();
            let fast = trilinear_t(&kernel, &field, TrilinearMode::Fft).unwrap();
            agree = agree.max((naive - fast).abs() / naive.abs().max(f64::MIN_POSITIVE));
        }
    }
    outcome(
        worst <= ANTISYMMETRY_TOL && agree <= NAIVE_FFT_TOL,
        format!(
            "5 kernels x 100 fields, worst |T|/scale {worst:.3e} (<= {ANTISYMMETRY_TOL:e}); naive vs FFT {agree:.3e} (<= {NAIVE_FFT_TOL:e})"
        ),
    )
}

fn fitted_order(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

fn energy_identity() -> Outcome {
    let dts = [4e-3, 2e-3, 1e-3];
    let mut residuals = Vec::new();
    for dt in dts {
        let cfg = config(&[
            ("modes", "32"),
            ("c_k", "-1"),
            ("nu", "0"),
            ("ic_amplitude", "0.5"),
            ("t_end", "0.4"),
            ("dt_policy", "fixed"),
            ("dt", &dt.to_string()),
            ("sample_every", "10"),
        ]);
        let dir = scratch();
        let report = simulate_into(&cfg, dir.path()).unwrap();
        let res = report
            .records
            .iter()
            .map(|r| r.energy_residual_l2.abs())
            .filter(|r| r.is_finite())
            .fold(0.0, f64::max);
        residuals.push(res);
    }
    let decreasing = residuals.windows(2).all(|w| w[1] < w[0]);
    let order = fitted_order(&dts, &residuals);
    outcome(
        decreasing && order >= ENERGY_MIN_ORDER,
        format!(
            "max residuals {:.3e}, {:.3e}, {:.3e}; fitted order {order:.2} (>= {ENERGY_MIN_ORDER})",
            residuals[0], residuals[1], residuals[2]
        ),
    )
}

fn lemma1_oracle(xi: f64, eta: f64, s: i32) -> f64 {
    let d = xi - eta;
    let lhs = (xi.abs().powi(s) - d.abs().powi(s) - eta.abs().powi(s) - s as f64 * eta * d * eta.abs().powi(s - 2))
        .abs();
    let rhs = d * d * eta.abs().powi(s - 2) + eta.abs() * d.abs().powi(s - 1);
    lhs / rhs
}

fn lemma1() -> Outcome {
    let mut sups = Vec::new();
    let mut finite = true;
    for s in [3.0, 4.0, 6.0] {
        for d in [1, 2] {
            let r = sample_lemma1(s, d, LEMMA_SAMPLES, 17).unwrap();
            finite &= r.sup_ratio.is_finite() && r.samples >= LEMMA_SAMPLES;
            sups.push(format!("s={s},d={d}:{:.3}", r.sup_ratio));
        }
    }
    let spot = lemma1_gap(&[2.0], &[1.0], 3.0).unwrap().ratio;
    let oracle = lemma1_oracle(2.0, 1.0, 3);
    let mut scale_err = 0.0f64;
    for (xi, eta) in [(vec![2.0, -1.0], vec![0.5, 3.0]), (vec![7.0, 1.0], vec![6.5, 0.9]), (vec![1.0, 0.0], vec![40.0, 3.0])] {
        for s in [3.0, 4.0, 6.0] {
            let base = lemma1_gap(&xi, &eta, s).unwrap().ratio;
            for lam in [0.01, 3.0, 1e3] {
                let sx: Vec<f64> = xi.iter().map(|v| v * lam).collect();
                let se: Vec<f64> = eta.iter().map(|v| v * lam).collect();
                let scaled = lemma1_gap(&sx, &se, s).unwrap().ratio;
                scale_err = scale_err.max((scaled - base).abs() / base);
            }
        }
    }
    outcome(
        finite && spot == 1.5 && oracle == 1.5 && scale_err < SCALE_TOL,
        format!(
            "sups [{}]; spot (2,1) s=3 ratio {spot} (oracle {oracle}); scale invariance {scale_err:.2e} (< {SCALE_TOL:e})",
            sups.join(" ")
        ),
    )
}

fn commutator() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for b in [0.25, 0.5, 0.75] {
        let coarse = sample_commutator(b, TorusGrid::new(1, 64).unwrap(), COMMUTATOR_TRIALS, 0.5, 23).unwrap();
        let fine = sample_commutator(b, TorusGrid::new(1, 128).unwrap(), COMMUTATOR_TRIALS, 0.5, 23).unwrap();
        let change = (fine.sup_ratio / coarse.sup_ratio).max(coarse.sup_ratio / fine.sup_ratio);
        ok &= coarse.sup_ratio.is_finite() && fine.sup_ratio.is_finite() && change < COMMUTATOR_GROWTH;
        parts.push(format!("b={b}: {:.3e}->{:.3e}", coarse.sup_ratio, fine.sup_ratio));
    }
    let grid = TorusGrid::new(1, 64).unwrap();
    let (_, g) = commutator_trial(grid, 23, 0);
    let g = inverse_transform(&g).unwrap();
    let f = RealField::from_fn(grid, |_| 2.5);
    let lhs = commutator_ratio(&f, &g, 0.5, 0.5).unwrap().lhs;
    ok &= lhs <= CONSTANT_F_TOL;
    outcome(
        ok,
        format!(
            "sup N=64->128 [{}] (change < {COMMUTATOR_GROWTH}x); constant f lhs {lhs:.2e} (<= {CONSTANT_F_TOL:e})",
            parts.join(", ")
        ),
    )
}

fn mu_convergence_check() -> Outcome {
    let dir = scratch();
    let cfg = shipped("repulsive.conf")
        .with("output", dir.path().display())
        .unwrap();
    let report = mu_convergence(&cfg, &[0.5, 0.25, 0.125]).unwrap();
    let errors: Vec<f64> = report.rows.iter().map(|r| r.1).collect();
    let strict = errors.windows(2).all(|w| w[1] < w[0]);
    outcome(
        strict,
        format!(
            "L2 errors {} (strictly decreasing)",
            errors.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn picard_contraction() -> Outcome {
    let dir = scratch();
    let cfg = shipped("repulsive.conf")
        .with("output", dir.path().display())
        .unwrap()
        .with("t_end", 0.05)
        .unwrap()
        .with("mu", 0.25)
        .unwrap();
    let report = picard_iteration(&cfg, 7).unwrap();
    // ratios[i] = d_{i+2} / d_{i+1}; n = 2..6 needs d_3/d_2 .. d_7/d_6
    let wanted = &report.ratios[1..6];
    outcome(
        wanted.iter().all(|r| *r < 1.0) && !report.diverged,
        format!(
            "d_(n+1)/d_n for n = 2..6: {}",
            wanted.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn blowup_contrast() -> Outcome {
    let base = [
        ("modes", "128"),
        ("alpha_minus_d", "-1"),
        ("nu", "0"),
        ("ic_mean", "1"),
        ("ic_amplitude", "0.5"),
        ("t_end", "1"),
        ("sample_every", "5"),
    ];
    let mut repulsive = base.to_vec();
    repulsive.push(("c_k", "-1"));
    let dir = scratch();
    let rep = simulate_into(&config(&repulsive), dir.path()).unwrap();
    let first = rep.records.first().unwrap();
    let last = rep.records.last().unwrap();
    let bounded = rep.final_state.t == 1.0
        && last.int_b1.is_finite()
        && last.b1 <= 10.0 * first.b1
        && last.b1 >= first.b1 / 10.0;

    let mut attractive = base.to_vec();
    attractive.push(("c_k", "1"));
    let dir = scratch();
    let att = simulate_into(&config(&attractive), dir.path()).unwrap();
    let b1: Vec<f64> = att.records.iter().map(|r| r.b1).filter(|b| b.is_finite()).collect();
    let tail = &b1[b1.len() / 2..];
    let growing = tail.len() >= 2 && tail.windows(2).all(|w| w[1] > w[0]);
    outcome(
        bounded && growing,
        format!(
            "c_K=-1: t={} int_B1={:.3e} B1 {:.3e}->{:.3e}; c_K=+1: {} at t={:.4}, B1 strictly increasing over last {} of {} samples ({:.3e}->{:.3e})",
            rep.final_state.t,
            last.int_b1,
            first.b1,
            last.b1,
            att.final_state.termination.label(),
            att.final_state.t,
            tail.len(),
            b1.len(),
            tail[0],
            tail[tail.len() - 1]
        ),
    )
}

fn self_convergence() -> Outcome {
    let dir = scratch();
    let cfg = shipped("refine.conf").with("output", dir.path().display()).unwrap();
    let report = grid_refinement(&cfg, &[64, 128, 256]).unwrap();
    let ratio = report.ratios[0];
    outcome(
        ratio >= REFINE_MIN_RATIO,
        format!(
            "errors {:.3e} (64->128), {:.3e} (128->256), ratio {ratio:.3e} (>= {REFINE_MIN_RATIO})",
            report.differences[0], report.differences[1]
        ),
    )
}

fn read_tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let runs: [(&str, Command, &[(&str, &str)]); 3] = [
        ("viscous_random.conf", Command::Simulate, &[]),
        ("repulsive.conf", Command::MuConverge, &[]),
        ("verify.conf", Command::Verify, &[("verify_samples", "20000"), ("verify_trials", "50")]),
    ];
    let mut ok = true;
    let mut files = 0;
    for (name, command, extra) in runs {
        // the output path is echoed into config.txt, so both runs use the same one
        let dir = scratch();
        let out = dir.path().join("run");
        let mut cfg = shipped(name).with("output", out.display()).unwrap();
        for (k, v) in extra {
            cfg = cfg.with(k, v).unwrap();
        }
        let mut trees = Vec::new();
        for _ in 0..2 {
            run_command(command, &cfg).unwrap();
            trees.push(read_tree(&out));
            std::fs::remove_dir_all(&out).unwrap();
        }
        files += trees[0].len();
        ok &= !trees[0].is_empty() && trees[0] == trees[1];
    }
    let dir = scratch();
    let cfg = shipped("verify.conf")
        .with("output", dir.path().display())
        .unwrap()
        .with("verify_samples", 5000)
        .unwrap();
    let a = verify_suite(&cfg).unwrap();
    let b = verify_suite(&cfg).unwrap();
    ok &= a == b;
    outcome(ok, format!("{files} output files byte-identical across repeated runs"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("heat equation exactness", heat_exactness),
        ("mass conservation on shipped configs", mass_conservation),
        ("fractional power composition", operator_algebra),
        ("trilinear antisymmetry and FFT agreement", trilinear_antisymmetry),
        ("semi-discrete L2 energy identity", energy_identity),
        ("elementary inequality ratios", lemma1),
        ("commutator estimate ratios", commutator),
        ("mu-convergence", mu_convergence_check),
        ("Picard contraction", picard_contraction),
        ("blow-up functional contrast", blowup_contrast),
        ("spectral self-convergence", self_convergence),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {verdict}: {name}: {} ({:.2} s)",
            i + 1,
            result.detail,
            start.elapsed().as_secs_f64()
        );
        if !result.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
