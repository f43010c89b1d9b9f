//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.
//!
//! Oracles here are computed in the test itself where practical (direct
//! sums, dense matrix exponentials, brute-force Walsh sums) rather than
//! re-reading the value the library reports.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use feasmass::bounds::{
    control_sweep, nn_over_factorial_sides, stirling_floor_sweep, transfer_factor, uniform_baseline,
};
use feasmass::experiments::{
    ce_depth_sweep, exact_angle_average, feasible_histogram, grid_search_ce, grid_search_generic, l4_sweep,
    markov_fraction, parameter_transfer, AngleRange, GridSpec, Method,
};
use feasmass::fullspace::{init_plus, mixer_kernel, run_generic, run_generic_with};
use feasmass::harmonic::{
    feasible_mass_via_plancherel, krawtchouk, mixer_walsh_multiplier, permutation_spectrum, walsh_transform,
    walsh_transform_real, xor_convolution,
};
use feasmass::instance::{build_cost, is_permutation_feasible, load_qoptlib_instance};
use feasmass::linalg::{expm_hermitian_evolution, max_abs_diff};
use feasmass::subspace::{
    init_w_product, overlap_generic_ce, run_ce, sector_matrix, twirl_average,
};
use feasmass::{AngleSchedule, Bitstring, BlockMixer, CostTable, Precision, ProblemInstance, Result};
use num_bigint::BigInt;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/instances").join(name)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn direct_baseline(n: usize) -> f64 {
    factorial(n) / 2f64.powi((n * n) as i32)
}

fn angle_average() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut worst_prediction = 0.0f64;
    let mut where_ = String::new();
    for n in 2..=3 {
        let inst = ProblemInstance::synthetic(n, 5, 1)?;
        let base = direct_baseline(n);
        for beta in [0.3, 0.7, 1.1] {
            let avg = exact_angle_average(&inst, beta, None)?;
            let dev = (avg.mean - base).abs();
            if dev > worst {
                worst = dev;
                where_ = format!("n={n} beta={beta} L={} mean={:.12} baseline={:.12}", avg.l, avg.mean, base);
            }
            if let Some(p) = avg.level_set_prediction {
                worst_prediction = worst_prediction.max((avg.mean - p).abs());
            }
        }
    }
    outcome(
        worst <= 1e-10,
        format!("max |mean - n!/2^(n^2)| = {worst:.3e} at {where_}; equal-cost level-set mean matches within {worst_prediction:.1e}"),
    )
}

fn twirl_identity() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for n in 2..=3usize {
        let inst = ProblemInstance::synthetic(n, 5, 2)?;
        let inv = 1.0 / n.pow(n as u32) as f64;
        for (g, b) in [(0.25, 0.4), (1.3, 0.9), (2.2, 2.6)] {
            let avg = twirl_average(&inst, &AngleSchedule::single(g, b), &vec![0; n], true, 0)?;
            let expected_count = (1..=n).product::<usize>().pow(n as u32);
            if !avg.exact || avg.samples != expected_count {
                return outcome(false, format!("n={n}: enumeration covered {} relabelings", avg.samples));
            }
            worst = worst.max((avg.mean - inv).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max |mean - 1/n^n| = {worst:.3e} over n=2,3 and 3 angle pairs"))
}

fn transfer() -> Result<Outcome> {
    let grid = GridSpec::new(10, 10, AngleRange::default(), AngleRange::default())?;
    let mut pass = true;
    let mut parts = Vec::new();
    for inst in [load_qoptlib_instance(&data("wi3.txt"))?, load_qoptlib_instance(&data("wi4.txt"))?] {
        let n = inst.n;
        let r = parameter_transfer(&inst, &grid, Precision::F64)?;
        let factor = 2f64.powi((n * n) as i32) / (n as f64).powi(n as i32);
        // Recompute both sides without the library's comparison.
        let s = AngleSchedule::single(r.search.best.gamma, r.search.best.beta);
        let p_gen = run_generic(&inst, &s)?.feasible_mass(n)?;
        let p_ce = run_ce(&inst, &s, false)?.subspace_feasible_mass();
        let ratio = p_ce / p_gen;
        pass &= ratio >= factor;
        parts.push(format!(
            "n={n} ratio={ratio:.4} vs {factor:.4} at (gamma,beta)=({:.4},{:.4})",
            r.search.best.gamma, r.search.best.beta
        ));
    }
    outcome(pass, parts.join("; "))
}

fn overlap() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut seen = Vec::new();
    for n in 2..=3usize {
        let inst = ProblemInstance::synthetic(n, 5, 4)?;
        let target = (n as f64).powf(n as f64 / 2.0) / 2f64.powf((n * n) as f64 / 2.0);
        for _ in 0..5 {
            let g = rng.random::<f64>() * 2.0 * PI;
            let b = rng.random::<f64>() * PI;
            let v = overlap_generic_ce(&inst, g, b)?.norm();
            worst = worst.max((v - target).abs());
            seen.push(v);
        }
    }
    let lo = seen.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = seen.iter().cloned().fold(0.0, f64::max);
    outcome(
        worst <= 1e-10,
        format!("max deviation {worst:.3e}; observed |overlap| in [{lo:.6}, {hi:.6}] (targets 0.5 at n=2, 0.114841 at n=3)"),
    )
}

fn l4() -> Result<Outcome> {
    let betas = [0.0, PI / 8.0, PI / 4.0, 3.0 * PI / 8.0];
    let mut min_slack = f64::INFINITY;
    for n in 2..=3usize {
        let inst = ProblemInstance::synthetic(n, 5, 5)?;
        let n_qubits = (n * n) as i32;
        for p in l4_sweep(&inst, &betas, None)? {
            let envelope = (0.5 + (2.0 * p.beta).sin().powi(2) / 4.0).powi(n_qubits);
            min_slack = min_slack.min(envelope + 1e-9 - p.mean);
        }
    }
    outcome(min_slack >= 0.0, format!("min slack envelope + 1e-9 - mean = {min_slack:.3e}"))
}

fn markov() -> Result<Outcome> {
    let mut worst = f64::NEG_INFINITY;
    for n in 2..=3usize {
        let inst = ProblemInstance::synthetic(n, 5, 6)?;
        for beta in [0.3, 0.7, 1.1] {
            for t in [2.0, 4.0, 9.0] {
                let m = markov_fraction(&inst, beta, t, None)?;
                worst = worst.max(m.fraction - 1.0 / t);
            }
        }
    }
    outcome(worst <= 0.0, format!("max fraction - 1/t = {worst:.4}"))
}

fn binom(n: usize, k: usize) -> BigInt {
    (0..k).fold(BigInt::from(1), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

fn harmonic_battery() -> Result<Outcome> {
    let mut failures = Vec::new();

    // Orthogonality from the raw polynomial values.
    for n in 0..=12usize {
        let k: Vec<Vec<BigInt>> = (0..=n)
            .map(|w| (0..=n).map(|r| krawtchouk(n, w, r)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        for a in 0..=n {
            for b in 0..=n {
                let sum: BigInt = (0..=n).map(|r| binom(n, r) * &k[a][r] * &k[b][r]).sum();
                let expect = if a == b { binom(n, a) << n } else { BigInt::from(0) };
                if sum != expect {
                    failures.push(format!("Krawtchouk n={n} ({a},{b})"));
                }
            }
        }
    }

    let mut worst = 0.0f64;
    for n in 1..=12usize {
        let g: Vec<f64> = (0..1u64 << n).map(|x| if x.count_ones() == 1 { 1.0 } else { 0.0 }).collect();
        let spec = walsh_transform_real(&g)?;
        for s in 0..1u64 << n {
            let expect = (n as f64 - 2.0 * s.count_ones() as f64) / 2f64.powi(n as i32);
            worst = worst.max((spec.coefficient(s) - Complex64::new(expect, 0.0)).norm());
        }
    }
    if worst > 1e-12 {
        failures.push(format!("one-hot spectrum err {worst:.3e}"));
    }

    let beta = 0.61;
    let f: Vec<Complex64> = (0..16).map(|k| Complex64::new((0.9 * k as f64).sin(), (0.4 * k as f64).cos())).collect();
    let kf: Vec<Complex64> = (0..16u64)
        .map(|x| (0..16u64).map(|y| mixer_kernel(Bitstring(x), Bitstring(y), beta, 4) * f[y as usize]).sum())
        .collect();
    let (lhs, rhs) = (walsh_transform(&kf)?, walsh_transform(&f)?);
    let mult = (0..16u64)
        .map(|s| (lhs.coefficient(s) - mixer_walsh_multiplier(4, s.count_ones() as usize, beta) * rhs.coefficient(s)).norm())
        .fold(0.0, f64::max);
    if mult > 1e-10 {
        failures.push(format!("multiplier err {mult:.3e}"));
    }

    for n in 1..=3usize {
        let ps = permutation_spectrum(n)?;
        let dim = 1u64 << (n * n);
        let mut fac = 0.0f64;
        for s in 0..dim {
            let prod: f64 = (0..n)
                .map(|i| n as f64 - 2.0 * ((s >> (i * n)) & ((1 << n) - 1)).count_ones() as f64)
                .product();
            fac = fac.max((ps.rows.coefficient(s).re - prod / dim as f64).abs());
        }
        let conv = xor_convolution(&ps.rows, &ps.cols)?;
        let cerr = (0..dim)
            .map(|s| (conv.coefficient(s) - ps.indicator.coefficient(s)).norm())
            .fold(0.0, f64::max);
        if fac > 1e-12 || cerr > 1e-12 {
            failures.push(format!("n={n} factorization err {fac:.3e} convolution err {cerr:.3e}"));
        }

        let inst = ProblemInstance::synthetic(n, 5, 9)?;
        for (g, b) in [(0.2, 0.5), (1.7, 2.3)] {
            let s = run_generic(&inst, &AngleSchedule::single(g, b))?;
            let direct: f64 = (0..dim)
                .filter(|&x| is_permutation_feasible(Bitstring(x), n))
                .map(|x| s.amplitude(Bitstring(x)).norm_sqr())
                .sum();
            let err = (feasible_mass_via_plancherel(&s, n)? - direct).abs();
            if err > 1e-9 {
                failures.push(format!("Plancherel n={n} err {err:.3e}"));
            }
        }
    }
    let detail = if failures.is_empty() {
        "Krawtchouk n<=12, one-hot spectrum n<=12, multiplier N=4, factorization/convolution/Plancherel n<=3".to_string()
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

fn mixer_closed_form() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for n in 1..=6usize {
        for normalized in [false, true] {
            let mixer = BlockMixer::new(n, normalized)?;
            let h = sector_matrix(n, normalized);
            for beta in [0.1, 0.7, 2.0] {
                worst = worst.max(max_abs_diff(&mixer.block_unitary(beta), &expm_hermitian_evolution(&h, beta)));
            }
        }
    }
    outcome(worst <= 1e-9, format!("max |closed form - expm| = {worst:.3e} for n<=6"))
}

fn inequality_sweeps() -> Result<Outcome> {
    let mut failures = Vec::new();
    for n in 2..=50u64 {
        let (lhs, rhs) = nn_over_factorial_sides(n);
        if lhs <= rhs {
            failures.push(format!("n^n/n! ratio n={n}"));
        }
    }
    for c in [0.5, 1.0, 2.0, 4.0] {
        let r = control_sweep(c, 200)?;
        let threshold = r.params["threshold"] as u64;
        // Direct check of the exponent n ln n - c n^2 ln2 / 2 past the threshold.
        let bad = (threshold..=200).any(|n| {
            let nf = n as f64;
            nf * nf.ln() - c * nf * nf * 2f64.ln() / 2.0 >= 0.0
        });
        if bad || r.satisfied != Some(true) {
            failures.push(format!("control c={c}"));
        }
    }
    let floor = |n: u64| {
        let nf = n as f64;
        (2.0 * PI * nf).sqrt().ln() + nf
    };
    let exact = |n: u64| (n * n) as f64 * 2f64.ln() - n as f64 * (n as f64).ln();
    for r in stirling_floor_sweep(5, 60) {
        let n = r.params["n"] as u64;
        if r.satisfied != Some(true) || exact(n) < floor(n) {
            failures.push(format!("Stirling floor n={n}"));
        }
    }
    let low = stirling_floor_sweep(2, 4);
    let flagged: Vec<u64> = low.iter().filter(|r| r.satisfied == Some(false)).map(|r| r.params["n"] as u64).collect();
    if flagged != [2, 3, 4] || (2..=4).any(|n| exact(n) >= floor(n)) {
        failures.push(format!("low-n Stirling flags {flagged:?}"));
    }
    for n in 2..=60 {
        if (transfer_factor(n).exact - exact(n)).abs() > 1e-9 * exact(n).abs().max(1.0) {
            failures.push(format!("transfer factor n={n}"));
        }
    }
    let detail = if failures.is_empty() {
        "n^n/n! sweep 2..50, control thresholds to 200, floor holds 5..60, WARN (violated) n=2,3,4".to_string()
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

fn depth_monotonicity() -> Result<Outcome> {
    let inst = load_qoptlib_instance(&data("wi3.txt"))?;
    let grid = GridSpec::new(6, 6, AngleRange::default(), AngleRange::default())?;
    let pts = ce_depth_sweep(&inst, &grid, 2, true)?;
    let (p1, p2) = (pts[0].best_mass, pts[1].best_mass);
    // The p=2 optimum must also be reproducible from its reported schedule.
    let s = AngleSchedule::new(pts[1].gammas.clone(), pts[1].betas.clone())?;
    let replay = run_ce(&inst, &s, true)?.subspace_feasible_mass();
    outcome(
        p2 >= p1 && (replay - p2).abs() <= 1e-12,
        format!("P1={p1:.12} P2={p2:.12} (replay {replay:.12})"),
    )
}

fn finite_n_curves() -> Result<Outcome> {
    let mut failures = Vec::new();
    let mut parts = Vec::new();
    for n in 2..=5usize {
        let s = AngleSchedule::single(0.0, 0.0);
        let p_gen = if n <= 4 {
            let inst = ProblemInstance::synthetic(n, 5, 3)?;
            run_generic_with::<f64>(&CostTable::new(&build_cost(&inst))?, &s)?.feasible_mass(n)?
        } else {
            init_plus::<f32>(n * n)?.feasible_mass(n)?
        };
        let inst = ProblemInstance::synthetic(n, 5, 3)?;
        let p_ce = init_w_product(n)?.subspace_feasible_mass();
        let p_ce_run = run_ce(&inst, &s, true)?.subspace_feasible_mass();
        let ln_ratio = (p_ce_run / p_gen).ln();
        let curve = transfer_factor(n as u64).exact;
        let tol = if n <= 4 { 1e-9 } else { 1e-5 };
        if (ln_ratio - curve).abs() > tol || (p_ce - p_ce_run).abs() > 1e-12 {
            failures.push(n);
        }
        if (p_gen.ln() - uniform_baseline(n as u64)).abs() > tol {
            failures.push(n);
        }
        parts.push(format!("n={n} ln ratio {ln_ratio:.6} vs {curve:.6}"));
    }
    outcome(
        failures.is_empty(),
        format!("asymptotic separation excluded; finite-n ratio at zero angles: {}", parts.join(", ")),
    )
}

fn shot_consistency() -> Result<Outcome> {
    let grid = GridSpec::new(10, 10, AngleRange::default(), AngleRange::default())?;
    let shots = 500_000u64;
    let mut worst_z = 0.0f64;
    let mut pass = true;
    let wi4 = load_qoptlib_instance(&data("wi4.txt"))?;
    let wi5 = load_qoptlib_instance(&data("wi5.txt"))?;
    let g4 = grid_search_generic(&wi4, &grid, Precision::F64)?.best;
    let g5 = grid_search_ce(&wi5, &grid, true)?.best;
    for (inst, method, best) in [(&wi4, Method::Generic, g4), (&wi5, Method::Ce, g5)] {
        let s = AngleSchedule::single(best.gamma, best.beta);
        let p = match method {
            Method::Generic => run_generic(inst, &s)?.feasible_mass(inst.n)?,
            Method::Ce => run_ce(inst, &s, true)?.subspace_feasible_mass(),
        };
        for seed in [1, 2, 3] {
            let h = feasible_histogram(inst, method, &s, shots, seed, Precision::F64, true)?;
            let counted: u64 = h.counts.values().sum();
            if counted != h.feasible_count || h.counts.keys().any(|&b| !is_permutation_feasible(b, inst.n)) {
                pass = false;
            }
            let sigma = (p * (1.0 - p) / shots as f64).sqrt();
            let z = (counted as f64 / shots as f64 - p).abs() / sigma;
            worst_z = worst_z.max(z);
            pass &= z <= 5.0;
        }
    }
    outcome(pass, format!("max |frac - P|/sigma = {worst_z:.3} over wi4 generic and wi5 CE, seeds 1..3"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 12] = [
        ("angle-average identity", angle_average),
        ("twirl identity", twirl_identity),
        ("parameter-transfer inequality", transfer),
        ("overlap formula", overlap),
        ("fourth-moment envelope", l4),
        ("Markov fraction", markov),
        ("harmonic battery", harmonic_battery),
        ("block mixer closed form", mixer_closed_form),
        ("inequality sweeps", inequality_sweeps),
        ("depth monotonicity", depth_monotonicity),
        ("finite-n separation curves", finite_n_curves),
        ("shot consistency", shot_consistency),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (status, detail) = match run() {
            Ok(o) => (if o.pass { "PASS" } else { "FAIL" }, o.detail),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} {:>2} {name}: {detail} [{:.1}s]", i + 1, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
