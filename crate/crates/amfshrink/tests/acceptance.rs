//! Acceptance checks 1-9. Each prints one `PASS` / `FAIL` line on stderr.
//!
//! The Q1(1,1) constant stated for check 8 disagrees with the series
//! definition in the fourth decimal; line 8a reports that comparison
//! without failing the test. Every other check is asserted.

use std::f64::consts::PI;
use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use amfshrink::config::ExperimentConfig;
use amfshrink::experiment::{run_experiment, CellResult, RunOptions};
use amfshrink_core::detector::p1_analytic;
use amfshrink_core::estimators::{lw_kernel, lw_shrink_raw};
use amfshrink_core::linalg::quad_form;
use amfshrink_core::sampling::sample_signal_direction;
use amfshrink_core::special::marcum_q1;
use amfshrink_core::{Complex64, Field, HermitianMatrix};

const TWO_ATOM: &str = r#"
[[spectrum]]
kind = "point_mass"
value = 1.0
weight = 0.5

[[spectrum]]
kind = "point_mass"
value = 5.0
weight = 0.5
"#;

const IDENTITY: &str = r#"
[[spectrum]]
kind = "point_mass"
value = 1.0
weight = 1.0
"#;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: &str, title: &str, o: &Outcome) {
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    // straight to the stream so the line shows up without --nocapture
    let _ = writeln!(std::io::stderr(), "acceptance {id} {verdict}: {title}: {}", o.detail);
}

fn config(head: &str, spectrum: &str, estimators: &[&str]) -> ExperimentConfig {
    let mut text = format!("{head}\n[signal]\ndeflection = 2.0\n{spectrum}");
    for e in estimators {
        text.push_str(&format!("\n[[estimators]]\nkind = \"{e}\"\n"));
    }
    ExperimentConfig::from_toml(&text).unwrap()
}

fn fits(cell: &CellResult, e: usize) -> Vec<&amfshrink::experiment::Fit> {
    cell.fits
        .iter()
        .map(|row| row[e].as_ref().expect("fit succeeds"))
        .collect()
}

fn cfar_and_detection() -> (Outcome, Outcome) {
    let cfg = config(
        "sizes = [[200, 400]]\nalphas = [0.1]\nreplicates = 20\ntrials_per_replicate = 10000",
        TWO_ATOM,
        &["lw"],
    );
    let start = Instant::now();
    let result = run_experiment(&cfg, 20_240_601, RunOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let cell = &result.cells[0];
    let lw = fits(cell, 0);

    let p0 = lw.iter().map(|f| f.rates[0].empirical.p0).sum::<f64>() / lw.len() as f64;
    let first = Outcome {
        pass: (0.08..=0.12).contains(&p0) && elapsed <= Duration::from_secs(120),
        detail: format!(
            "mean p0 = {p0:.4} over {} replicates, {:.1} s",
            lw.len(),
            elapsed.as_secs_f64()
        ),
    };

    // m = |a| (mu' R^-1 mu)^{1/2} = 2 by construction of the amplitude
    let close = lw
        .iter()
        .filter(|f| (f.rates[0].empirical.p1 - f.rates[0].plug_in.p1).abs() <= 0.03)
        .count();
    let m = lw[0].amplitude.norm() * lw[0].diagnostics.mu_quad.sqrt();
    let second = Outcome {
        pass: close * 10 >= 9 * lw.len() && (m - 2.0).abs() < 1e-12,
        detail: format!(
            "{close}/{} replicates within 0.03 of Q1 prediction {:.4}",
            lw.len(),
            lw[0].rates[0].plug_in.p1
        ),
    };
    (first, second)
}

fn optimality_ordering() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (p, n) in [(200, 400), (400, 200)] {
        let narrow = p < n;
        let estimators: &[&str] = if narrow {
            &["lw", "diagonal-loading", "sample"]
        } else {
            &["lw", "diagonal-loading"]
        };
        let cfg = config(
            &format!("sizes = [[{p}, {n}]]\nreplicates = 50\ntrials_per_replicate = 1"),
            TWO_ATOM,
            estimators,
        );
        let result = run_experiment(&cfg, 7_310, RunOptions::default()).unwrap();
        let cell = &result.cells[0];
        let lw = fits(cell, 0);
        for (e, name) in estimators.iter().enumerate().skip(1) {
            let other = fits(cell, e);
            let wins = lw
                .iter()
                .zip(&other)
                .filter(|(a, b)| a.diagnostics.nu > b.diagnostics.nu)
                .count();
            pass &= wins * 10 >= 9 * lw.len();
            detail.push(format!("({p},{n}) vs {name}: {wins}/{}", lw.len()));
        }
    }
    Outcome {
        pass,
        detail: format!("lw wins on nu {}", detail.join(", ")),
    }
}

fn xi_near_one() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, spectrum) in [("identity", IDENTITY), ("two-atom", TWO_ATOM)] {
        let cfg = config(
            "sizes = [[200, 400]]\nreplicates = 100\ntrials_per_replicate = 1",
            spectrum,
            &["lw"],
        );
        let result = run_experiment(&cfg, 4_242, RunOptions::default()).unwrap();
        let lw = fits(&result.cells[0], 0);
        let hits = lw.iter().filter(|f| (f.diagnostics.xi - 1.0).abs() <= 0.1).count();
        pass &= hits * 100 >= 95 * lw.len();
        detail.push(format!("{name} {hits}/{}", lw.len()));
    }
    Outcome {
        pass,
        detail: format!("|xi - 1| <= 0.1 in {}", detail.join(", ")),
    }
}

fn oracle_agreement() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, spectrum) in [("identity", IDENTITY), ("two-atom", TWO_ATOM)] {
        let cfg = config(
            "sizes = [[100, 200], [400, 800]]\nreplicates = 50\ntrials_per_replicate = 1",
            spectrum,
            &["lw"],
        );
        let result = run_experiment(&cfg, 55_000, RunOptions::default()).unwrap();
        let small = fits(&result.cells[0], 0);
        let large = fits(&result.cells[1], 0);
        let better = small
            .iter()
            .zip(&large)
            .filter(|(s, l)| l.oracle_mse.unwrap() < s.oracle_mse.unwrap())
            .count();
        pass &= better * 10 >= 9 * small.len();
        detail.push(format!("{name} {better}/{}", small.len()));
    }
    Outcome {
        pass,
        detail: format!(
            "oracle mse smaller at (400,800) than (100,200) in {}",
            detail.join(", ")
        ),
    }
}

fn kernel_values() -> Outcome {
    // lambda = (1, 1), n = 8: h = 8^{-1/3} = 1/2 and every difference is zero,
    // so a = 0 and b = 2 * 3 / (4 sqrt 5 h)
    let k = lw_kernel(1.0, &[1.0, 1.0], 2, 8).unwrap();
    let b_hand = 2.0 * 3.0 / (4.0 * 5f64.sqrt() * 0.5);
    // p = 1, n = 1000, lambda = 2: h = 2/10, zeta = i pi 3/(4 sqrt 5 h),
    // d = lambda / |1 - gamma - gamma lambda zeta|^2
    let zeta_im = PI * 3.0 / (4.0 * 5f64.sqrt() * 0.2);
    let d_hand = 2.0 / ((1.0 - 0.001f64).powi(2) + (0.001 * 2.0 * zeta_im).powi(2));
    let d = lw_shrink_raw(&[2.0], 1, 1000).unwrap()[0];
    let ok = [
        k.a.abs() <= 1e-6,
        (k.b - 1.341641).abs() <= 1e-6,
        (k.b - b_hand).abs() <= 1e-12,
        (d - 2.003783).abs() <= 1e-6,
        (d - d_hand).abs() <= 1e-12,
    ];
    Outcome {
        pass: ok.iter().all(|&x| x),
        detail: format!("a = {:.2e}, b = {:.7}, d = {d:.7}", k.a, k.b),
    }
}

fn concentration() -> Outcome {
    let p = 500;
    let values: Vec<f64> = (0..p).map(|j| -2.0 + 4.0 * (j as f64 + 0.5) / p as f64).collect();
    let a = HermitianMatrix::diagonal(&values, Field::Complex);
    let norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bound = 5.0 * ((p as f64).ln() / p as f64).sqrt() * norm;
    let center = a.trace() / p as f64;
    let trials = 1000u64;
    let hits = (0..trials)
        .filter(|&seed| {
            let mu = sample_signal_direction(p, Field::Complex, 0xc0_ffee + seed).unwrap();
            (quad_form(&mu, &a).unwrap() - center).abs() <= bound
        })
        .count();
    Outcome {
        pass: hits * 100 >= 99 * trials as usize,
        detail: format!("{hits}/{trials} within 5 sqrt(log p / p) ||A|| at p = {p}"),
    }
}

/// `Q_1(a, b) = exp(-(a^2 + b^2)/2) sum_k (a/b)^k I_k(ab)` with each `I_k`
/// from its power series; all terms are positive.
fn marcum_series(a: f64, b: f64) -> f64 {
    let x = a * b;
    let mut total = 0.0;
    for k in 0..80 {
        let mut term = (x / 2.0).powi(k) / (1..=k).map(f64::from).product::<f64>();
        let mut bessel = term;
        for m in 1..60 {
            term *= (x / 2.0).powi(2) / (m as f64 * (m + k) as f64);
            bessel += term;
        }
        total += (a / b).powi(k) * bessel;
    }
    (-(a * a + b * b) / 2.0).exp() * total
}

/// `P(|m + Z|^2 > t)` for complex `Z` with `E|Z|^2 = 1`, integrating the
/// density `exp(-|w - m|^2) / pi` over the disk `|w| <= sqrt(t)` in polar
/// coordinates: Simpson in the radius, trapezoid (periodic) in the angle.
fn complex_tail_by_plane_quadrature(m: f64, t: f64) -> f64 {
    let radius = t.sqrt();
    let (nr, nt) = (2000, 256);
    let hr = radius / nr as f64;
    let ring = |r: f64| {
        (0..nt)
            .map(|k| {
                let theta = 2.0 * PI * k as f64 / nt as f64;
                (-(r * r - 2.0 * r * m * theta.cos() + m * m)).exp()
            })
            .sum::<f64>()
            * (2.0 * PI / nt as f64)
            * r
            / PI
    };
    let mut inside = ring(0.0) + ring(radius);
    for i in 1..nr {
        inside += if i % 2 == 1 { 4.0 } else { 2.0 } * ring(i as f64 * hr);
    }
    1.0 - inside * hr / 3.0
}

fn numerics() -> (Outcome, Outcome) {
    let q = marcum_q1(1.0, 1.0);
    let series = marcum_series(1.0, 1.0);
    let stated = 0.733276;
    let constant = Outcome {
        pass: (q - stated).abs() <= 1e-6,
        detail: format!(
            "Q1(1,1) = {q:.10}, series oracle {series:.10} (|diff| = {:.1e}); stated value {stated} is off by {:.2e}",
            (q - series).abs(),
            (q - stated).abs()
        ),
    };
    let points = [(2.0, 10f64.ln()), (1.0, 1.0), (0.5, 3.0), (3.0, 5.0), (1.5, 0.2)];
    let worst = points
        .iter()
        .map(|&(m, t)| {
            (p1_analytic(t, Complex64::new(m, 0.0), 1.0, Field::Complex) - complex_tail_by_plane_quadrature(m, t)).abs()
        })
        .fold(0.0f64, f64::max);
    let quadrature = Outcome {
        pass: worst <= 1e-6 && (q - series).abs() <= 1e-12,
        detail: format!(
            "p1_analytic vs plane quadrature, max |diff| = {worst:.1e} at 5 points; Marcum vs series agree"
        ),
    };
    (constant, quadrature)
}

const DETERMINISM_CONFIG: &str = r#"
field = "complex"
sizes = [[60, 120], [120, 60], [80, 80]]
alphas = [0.1, 0.01]
replicates = 4
trials_per_replicate = 2000
entry_law = { kind = "scaled_student_t", df = 30.0 }

[signal]
amplitude = [0.4, -0.2]

[[spectrum]]
kind = "point_mass"
value = 1.0
weight = 0.5

[[spectrum]]
kind = "uniform_interval"
lo = 4.0
hi = 6.0
weight = 0.5

[[estimators]]
kind = "lw"

[[estimators]]
kind = "lw"
t0 = 0.5
upper = "edge-scaled"

[[estimators]]
kind = "diagonal-loading"

[[estimators]]
kind = "sample"

[[estimators]]
kind = "oracle"

[[estimators]]
kind = "clairvoyant"
"#;

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("full.toml");
    std::fs::write(&cfg, DETERMINISM_CONFIG).unwrap();
    let mut files = Vec::new();
    for threads in ["1", "8"] {
        for run in 0..2 {
            let out = dir.path().join(format!("result-{threads}-{run}.csv"));
            let status = Command::new(env!("CARGO_BIN_EXE_amfshrink"))
                .args(["experiment", "--seed", "8675309", "--threads", threads])
                .arg("--config")
                .arg(&cfg)
                .arg("--output")
                .arg(&out)
                .output()
                .unwrap();
            assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
            files.push(std::fs::read(&out).unwrap());
        }
    }
    let identical = files.windows(2).all(|w| w[0] == w[1]);
    Outcome {
        pass: identical && !files[0].is_empty(),
        detail: format!(
            "4 result files ({} bytes) at 1 and 8 threads identical: {identical}",
            files[0].len()
        ),
    }
}

#[test]
fn acceptance_criteria() {
    let (cfar, detection) = cfar_and_detection();
    report("1", "CFAR", &cfar);
    report("2", "detection rate", &detection);
    let ordering = optimality_ordering();
    report("3", "optimality ordering", &ordering);
    let xi = xi_near_one();
    report("4", "xi -> 1", &xi);
    let oracle = oracle_agreement();
    report("5", "oracle agreement", &oracle);
    let kernel = kernel_values();
    report("6", "kernel values", &kernel);
    let conc = concentration();
    report("7", "concentration", &conc);
    let (marcum_constant, quadrature) = numerics();
    report("8a", "Marcum constant", &marcum_constant);
    report("8b", "numerics oracles", &quadrature);
    let det = determinism();
    report("9", "determinism", &det);

    let asserted = [
        ("1", &cfar),
        ("2", &detection),
        ("3", &ordering),
        ("4", &xi),
        ("5", &oracle),
        ("6", &kernel),
        ("7", &conc),
        ("8b", &quadrature),
        ("9", &det),
    ];
    let failed: Vec<&str> = asserted.iter().filter(|(_, o)| !o.pass).map(|(id, _)| *id).collect();
    assert!(failed.is_empty(), "failed acceptance checks: {failed:?}");
}
