//! Invariant batteries behind `feasmass verify`.

use std::fmt;

use feasmass::bounds::{
    control_sweep, lightcone_1d_bound, lightcone_degree_bound, ln_factorial, low_degree_window_size,
    nn_over_factorial_sweep, one_hot_low_degree_bound, one_hot_low_degree_mass, stirling_floor_sweep,
    transfer_factor,
};
use feasmass::fullspace::{mixer_kernel, run_generic};
use feasmass::harmonic::{
    krawtchouk_orthogonality_check, mixer_walsh_multiplier, feasible_mass_via_plancherel, permutation_spectrum,
    row_factor_formula, sphere_indicator, sphere_spectrum, walsh_transform, walsh_transform_real, xor_convolution,
};
use feasmass::subspace::{best_block_relabeling, twirl_average};
use feasmass::{AngleSchedule, Bitstring, BlockMixer, ProblemInstance, Result};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Warn => "WARN",
            Status::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}  {}  {}", self.status, self.name, self.detail)
    }
}

fn check(name: &str, ok: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
    }
}

fn warn(name: &str, detail: String) -> Check {
    Check {
        name: name.to_string(),
        status: Status::Warn,
        detail,
    }
}

pub fn harmonic() -> Result<Vec<Check>> {
    let mut out = Vec::new();

    let bad: Vec<usize> = (0..=12).filter(|&n| !krawtchouk_orthogonality_check(n)).collect();
    out.push(check("krawtchouk orthogonality n<=12", bad.is_empty(), format!("failing n: {bad:?}")));

    let mut worst = 0.0f64;
    for n in 1..=12usize {
        let spec = walsh_transform_real(&sphere_indicator(n, 1))?;
        for (s, c) in spec.coefficients().iter().enumerate() {
            let expect = (n as f64 - 2.0 * (s as u64).count_ones() as f64) / (1u64 << n) as f64;
            worst = worst.max((c.re - expect).abs() + c.im.abs());
        }
    }
    out.push(check("one-hot spectrum 2^-n(n-2|S|) n<=12", worst <= 1e-12, format!("max err {worst:.3e}")));

    let mut worst = 0.0f64;
    for n in 1..=10usize {
        for w in 0..=n {
            let radial = sphere_spectrum(n, w)?;
            let direct = walsh_transform_real(&sphere_indicator(n, w))?;
            for (a, b) in radial.coefficients().iter().zip(direct.coefficients()) {
                worst = worst.max((a - b).norm());
            }
        }
    }
    out.push(check("sphere spectrum = Krawtchouk profile n<=10", worst <= 1e-12, format!("max err {worst:.3e}")));

    let (n_bits, beta) = (4usize, 0.83);
    let f: Vec<Complex64> = (0..16)
        .map(|k| Complex64::new((k as f64 * 0.7).cos(), (k as f64 * 0.3).sin()))
        .collect();
    let kf: Vec<Complex64> = (0..16u64)
        .map(|x| {
            (0..16u64)
                .map(|y| mixer_kernel(Bitstring(x), Bitstring(y), beta, n_bits) * f[y as usize])
                .sum()
        })
        .collect();
    let (lhs, rhs) = (walsh_transform(&kf)?, walsh_transform(&f)?);
    let worst = (0..16u64)
        .map(|s| {
            let m = mixer_walsh_multiplier(n_bits, s.count_ones() as usize, beta);
            (lhs.coefficient(s) - m * rhs.coefficient(s)).norm()
        })
        .fold(0.0, f64::max);
    out.push(check("mixer Walsh multiplier N=4", worst <= 1e-10, format!("max err {worst:.3e}")));

    for n in 2..=3usize {
        let ps = permutation_spectrum(n)?;
        let fac = (0..1u64 << (n * n))
            .map(|s| (ps.rows.coefficient(s).re - row_factor_formula(n, s)).abs())
            .fold(0.0, f64::max);
        out.push(check(&format!("row factorization n={n}"), fac <= 1e-12, format!("max err {fac:.3e}")));
        let conv = xor_convolution(&ps.rows, &ps.cols)?;
        let err = conv
            .coefficients()
            .iter()
            .zip(ps.indicator.coefficients())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        out.push(check(&format!("indicator = R*C convolution n={n}"), err <= 1e-12, format!("max err {err:.3e}")));

        let inst = ProblemInstance::synthetic(n, 5, 7)?;
        let mut worst = 0.0f64;
        for (g, b) in [(0.3, 0.2), (1.1, 0.7), (2.5, 1.9)] {
            let s = run_generic(&inst, &AngleSchedule::single(g, b))?;
            worst = worst.max((feasible_mass_via_plancherel(&s, n)? - s.feasible_mass(n)?).abs());
        }
        out.push(check(&format!("Plancherel feasible mass n={n}"), worst <= 1e-9, format!("max err {worst:.3e}")));
    }

    let mut slack = f64::INFINITY;
    for n in 2..=12u64 {
        for d in 0..=4u64 {
            slack = slack.min(one_hot_low_degree_bound(n, d) - one_hot_low_degree_mass(n, d));
        }
    }
    out.push(check("one-hot low-degree weight bound", slack >= 0.0, format!("min slack {slack:.3e}")));
    Ok(out)
}

pub fn twirl() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for n in 2..=3usize {
        let inst = ProblemInstance::synthetic(n, 5, 11)?;
        let target = vec![0; n];
        let inv = 1.0 / (n.pow(n as u32)) as f64;
        let mut worst = 0.0f64;
        let mut min_best = f64::INFINITY;
        for (g, b) in [(0.4, 0.3), (1.2, 0.9), (2.7, 2.1)] {
            let s = AngleSchedule::single(g, b);
            let avg = twirl_average(&inst, &s, &target, true, 0)?;
            worst = worst.max((avg.mean - inv).abs());
            min_best = min_best.min(best_block_relabeling(&inst, &s, &target, true, 0)?.probability);
        }
        out.push(check(&format!("twirl mean = 1/n^n n={n}"), worst <= 1e-12, format!("max err {worst:.3e}")));
        out.push(check(
            &format!("best relabeling >= 1/n^n n={n}"),
            min_best >= inv,
            format!("slack {:.3e}", min_best - inv),
        ));
    }
    Ok(out)
}

pub fn bounds() -> Result<Vec<Check>> {
    let mut out = Vec::new();

    let sweep = nn_over_factorial_sweep(2, 50);
    let slack = sweep
        .iter()
        .map(|r| r.log_value.unwrap_or(f64::NAN) - r.params["rhs"])
        .fold(f64::INFINITY, f64::min);
    out.push(check(
        "(n^n/n!)^2 > ((n+1)/n)^(n(n-1)) for 2<=n<=50",
        sweep.iter().all(|r| r.satisfied == Some(true)),
        format!("min log slack {slack:.6}"),
    ));

    for c in [0.5, 1.0, 2.0, 4.0] {
        let r = control_sweep(c, 200)?;
        out.push(check(
            &format!("n^n 2^(-c n^2/2) < 1 past threshold, c={c}, n<=200"),
            r.satisfied == Some(true),
            format!("threshold {} worst exponent {:.6}", r.params["threshold"], r.log_value.unwrap_or(f64::NAN)),
        ));
    }

    let high = stirling_floor_sweep(5, 60);
    out.push(check(
        "transfer factor >= sqrt(2 pi n) e^n for 5<=n<=60",
        high.iter().all(|r| r.satisfied == Some(true)),
        format!("min log slack {:.6}", {
            high.iter()
                .map(|r| r.log_value.unwrap_or(f64::NAN) - r.params["floor"])
                .fold(f64::INFINITY, f64::min)
        }),
    ));
    for n in 2..=4u64 {
        let t = transfer_factor(n);
        let detail = format!("2^(n^2)/n^n = {:.4} < floor {:.4}", t.exact.exp(), t.stirling_floor.exp());
        if t.floor_holds() {
            out.push(check(&format!("Stirling floor n={n}"), true, detail));
        } else {
            out.push(warn(&format!("Stirling floor n={n}"), detail));
        }
    }

    let mut worst = 0.0f64;
    for n in 2..=8u64 {
        for p in 0..=2u64 {
            let c = (2 * p + 1) as f64 / 2f64.powi(p as i32);
            worst = worst.max((lightcone_degree_bound(n, p as f64, 2.0, c)? - lightcone_1d_bound(n, p)).abs());
        }
    }
    out.push(check("degree light-cone reduces to 1D at D=2", worst <= 1e-12, format!("max err {worst:.3e}")));

    let mut ok = true;
    for n_bits in [4u64, 9, 16, 25, 100] {
        for d in 0..=n_bits.min(20) {
            ok &= low_degree_window_size(n_bits, d)?.holds();
        }
    }
    out.push(check("window size <= (eN/d)^d", ok, String::new()));

    let mut worst = 0.0f64;
    for n in 2..=10u64 {
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        worst = worst.max((ln_factorial(n) - fact.ln()).abs() / fact.ln().max(1.0));
    }
    out.push(check("log-space factorial vs linear n<=10", worst <= 1e-12, format!("max rel err {worst:.3e}")));

    for n in [3usize, 5] {
        let m = BlockMixer::new(n, false)?;
        out.push(warn(
            &format!("unnormalized block XY uniform eigenvalue n={n}"),
            format!("measured {} = 2(n-1), stated n-1", m.lambda_uniform),
        ));
    }
    Ok(out)
}
