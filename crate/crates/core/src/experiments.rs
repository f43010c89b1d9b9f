//! Grid searches, lattice angle averages, transfer runs and shot histograms.
//!
//! Surfaces are evaluated point by point, each worker owning its statevector;
//! maxima and means are recomputed from the collected surface so the result
//! never depends on scheduling.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{l4_envelope, markov_tail, transfer_factor};
use crate::error::{capacity, Error, Result};
use crate::fullspace::{run_generic_with, AngleSchedule, CostTable, FullState, Precision, Real};
use crate::instance::{build_cost, enumerate_feasible, Bitstring, DiagonalCost, ProblemInstance};
use crate::sampling::{sample_counts, sample_from};
use crate::subspace::{
    is_injective, run_ce, run_ce_with, subspace_dim, tuple_of, twirl_average, best_block_relabeling, BlockMixer,
    Relabeling, SubspaceCost, TwirlAverage, EXACT_TWIRL_N,
};

/// Lattice averages run the full grid up to this `n`.
pub const MAX_LATTICE_N: usize = 4;
/// The fourth-moment sweep needs `L > 2 * spread`, so it stops earlier.
pub const MAX_L4_N: usize = 3;
/// Generic grid searches up to `n = 5` (25 qubits).
pub const MAX_GRID_N: usize = 5;
/// Level-set prediction of the angle average is computed up to this `n`.
pub const MAX_PREDICTION_N: usize = 3;
/// Per-angle grid size cap for depth sweeps.
pub const MAX_DEPTH_GRID: usize = 6;
/// Depth sweeps run in the subspace up to this `n`.
pub const MAX_DEPTH_N: usize = 4;
/// Above this many qubits, grid points run one at a time.
const SERIAL_GRID_QUBITS: usize = 20;

/// Closed angle interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleRange {
    pub lo: f64,
    pub hi: f64,
}

impl AngleRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || hi < lo || !(hi - lo).is_finite() {
            return Err(Error::InvalidArgument(format!("bad angle range {lo}:{hi}")));
        }
        Ok(Self { lo, hi })
    }

    /// `count` equally spaced points including both endpoints.
    pub fn points(&self, count: usize) -> Vec<f64> {
        if count == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (count - 1) as f64;
        // The last point is pinned so `hi` survives rounding in `step`.
        (0..count)
            .map(|k| if k + 1 == count { self.hi } else { self.lo + step * k as f64 })
            .collect()
    }
}

impl Default for AngleRange {
    fn default() -> Self {
        Self { lo: 0.0, hi: PI }
    }
}

impl FromStr for AngleRange {
    type Err = Error;

    /// `LO:HI`, both plain floats.
    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("range {s:?} is not LO:HI")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("range bound {t:?}: {e}")))
        };
        Self::new(parse(lo)?, parse(hi)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub gamma_points: usize,
    pub beta_points: usize,
    pub gamma_range: AngleRange,
    pub beta_range: AngleRange,
}

impl GridSpec {
    pub fn new(gamma_points: usize, beta_points: usize, gamma_range: AngleRange, beta_range: AngleRange) -> Result<Self> {
        for (count, r, what) in [(gamma_points, gamma_range, "gamma"), (beta_points, beta_range, "beta")] {
            if count == 0 {
                return Err(Error::InvalidArgument(format!("{what} grid needs at least one point")));
            }
            if count > 1 && r.hi <= r.lo {
                return Err(Error::InvalidArgument(format!(
                    "{what} range {}:{} is empty for {count} points",
                    r.lo, r.hi
                )));
            }
        }
        Ok(Self {
            gamma_points,
            beta_points,
            gamma_range,
            beta_range,
        })
    }

    pub fn with_ranges(self, gamma_range: AngleRange, beta_range: AngleRange) -> Result<Self> {
        Self::new(self.gamma_points, self.beta_points, gamma_range, beta_range)
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.gamma_range.points(self.gamma_points)
    }

    pub fn betas(&self) -> Vec<f64> {
        self.beta_range.points(self.beta_points)
    }

    pub fn len(&self) -> usize {
        self.gamma_points * self.beta_points
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    /// `GxB` point counts over the default `[0, pi]` ranges.
    fn from_str(s: &str) -> Result<Self> {
        let (g, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::InvalidArgument(format!("grid {s:?} is not GxB")))?;
        let count = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| Error::InvalidArgument(format!("grid count {t:?}: {e}")))
        };
        Self::new(count(g)?, count(b)?, AngleRange::default(), AngleRange::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contract {
    pub name: String,
    pub satisfied: bool,
    pub detail: String,
}

/// One experiment record, serialized as a JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub instance: String,
    pub params: BTreeMap<String, serde_json::Value>,
    /// Keys starting with `ln_` hold natural logs.
    pub metrics: BTreeMap<String, f64>,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_s: Option<f64>,
    pub contracts: Vec<Contract>,
}

impl ExperimentResult {
    pub fn new(experiment: &str, instance: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            instance: instance.to_string(),
            params: BTreeMap::new(),
            metrics: BTreeMap::new(),
            seed: None,
            wall_clock_s: None,
            contracts: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.to_string(), value);
        self
    }

    pub fn contract(mut self, name: &str, satisfied: bool, detail: impl Into<String>) -> Self {
        self.contracts.push(Contract {
            name: name.to_string(),
            satisfied,
            detail: detail.into(),
        });
        self
    }

    pub fn all_satisfied(&self) -> bool {
        self.contracts.iter().all(|c| c.satisfied)
    }
}

fn ensure_n(instance: &ProblemInstance, limit: usize, what: &'static str) -> Result<()> {
    if instance.n > limit {
        return Err(capacity(what, limit, instance.n));
    }
    Ok(())
}

/// `n! / 2^{n^2}`.
pub fn baseline(n: usize) -> f64 {
    enumerate_feasible(n).map(|v| v.len()).unwrap_or(0) as f64 / 2f64.powi((n * n) as i32)
}

/// `{2 pi k / L}` for the lattice unit `omega`.
pub fn lattice_gammas(omega: f64, l: usize) -> Vec<f64> {
    (0..l).map(|k| 2.0 * PI * k as f64 / (l as f64 * omega)).collect()
}

fn lattice_cost(instance: &ProblemInstance, limit: usize) -> Result<(DiagonalCost, CostTable)> {
    ensure_n(instance, limit, "lattice average size")?;
    let cost = build_cost(instance);
    if !cost.exact_spread {
        return Err(Error::Precondition("lattice grid needs the exact cost spread".into()));
    }
    let table = CostTable::new(&cost)?;
    Ok((cost, table))
}

fn check_lattice(l: usize, min: usize, what: &str) -> Result<()> {
    if l < min {
        return Err(Error::Precondition(format!(
            "{what}: grid size L = {l} too small, need L >= {min}"
        )));
    }
    Ok(())
}

fn feasible_mass_at(table: &CostTable, gamma: f64, beta: f64) -> Result<f64> {
    let state: FullState = run_generic_with(table, &AngleSchedule::single(gamma, beta))?;
    state.feasible_mass(table.n())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleAverage {
    pub beta: f64,
    pub l: usize,
    pub mean: f64,
    pub baseline: f64,
    /// Exact lattice mean including equal-cost cross terms, when computed.
    pub level_set_prediction: Option<f64>,
    pub per_gamma: Vec<f64>,
}

/// Feasible mass averaged over the lattice grid `gamma = 2 pi k / L`.
/// `l = None` picks `spread + 1`.
pub fn exact_angle_average(instance: &ProblemInstance, beta: f64, l: Option<usize>) -> Result<AngleAverage> {
    let (cost, table) = lattice_cost(instance, MAX_LATTICE_N)?;
    let min_l = cost.spread as usize + 1;
    let l = l.unwrap_or(min_l);
    check_lattice(l, min_l, "angle average")?;
    let per_gamma: Vec<f64> = lattice_gammas(cost.omega, l)
        .par_iter()
        .map(|&g| feasible_mass_at(&table, g, beta))
        .collect::<Result<_>>()?;
    let mean = per_gamma.iter().sum::<f64>() / l as f64;
    let level_set_prediction = if instance.n <= MAX_PREDICTION_N {
        Some(level_set_prediction(&table, beta)?)
    } else {
        None
    };
    Ok(AngleAverage {
        beta,
        l,
        mean,
        baseline: baseline(instance.n),
        level_set_prediction,
        per_gamma,
    })
}

/// `2^{-N} sum_c sum_{x in Pi} |(U_beta 1_c)(x)|^2`: the lattice mean when
/// only pairs with equal cost survive the phase average.
pub fn level_set_prediction(table: &CostTable, beta: f64) -> Result<f64> {
    let n = table.n();
    let mut levels: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (y, &c) in table.values().iter().enumerate() {
        levels.entry(c).or_default().push(y);
    }
    let dim = table.values().len();
    let total: f64 = levels
        .values()
        .map(|members| {
            let mut amps = vec![Complex::new(0.0, 0.0); dim];
            for &y in members {
                amps[y] = Complex::new(1.0, 0.0);
            }
            let mut v = FullState::<f64>::from_amplitudes(amps)?;
            v.apply_x_mixer(beta);
            v.feasible_mass(n)
        })
        .sum::<Result<f64>>()?;
    Ok(total / dim as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovFraction {
    pub t: f64,
    pub fraction: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// Fraction of lattice angles with `P >= t * baseline`.
pub fn markov_fraction(instance: &ProblemInstance, beta: f64, t: f64, l: Option<usize>) -> Result<MarkovFraction> {
    let avg = exact_angle_average_masses(instance, beta, l)?;
    Ok(markov_from_masses(&avg, baseline(instance.n), t))
}

fn exact_angle_average_masses(instance: &ProblemInstance, beta: f64, l: Option<usize>) -> Result<Vec<f64>> {
    let (cost, table) = lattice_cost(instance, MAX_LATTICE_N)?;
    let min_l = cost.spread as usize + 1;
    let l = l.unwrap_or(min_l);
    check_lattice(l, min_l, "Markov fraction")?;
    lattice_gammas(cost.omega, l)
        .par_iter()
        .map(|&g| feasible_mass_at(&table, g, beta))
        .collect()
}

/// Markov check against precomputed per-angle masses.
pub fn markov_from_masses(masses: &[f64], baseline: f64, t: f64) -> MarkovFraction {
    let hits = masses.iter().filter(|&&p| p >= t * baseline).count();
    let fraction = hits as f64 / masses.len().max(1) as f64;
    let bound = markov_tail(t).unwrap_or(1.0);
    MarkovFraction {
        t,
        fraction,
        bound,
        satisfied: fraction <= bound + 1e-12,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L4Point {
    pub beta: f64,
    pub l: usize,
    pub mean: f64,
    pub envelope: f64,
    pub satisfied: bool,
}

/// Lattice mean of `sum_x |a_x|^4` per beta; `l = None` picks `2 spread + 1`.
pub fn l4_sweep(instance: &ProblemInstance, betas: &[f64], l: Option<usize>) -> Result<Vec<L4Point>> {
    let (cost, table) = lattice_cost(instance, MAX_L4_N)?;
    let min_l = 2 * cost.spread as usize + 1;
    let l = l.unwrap_or(min_l);
    check_lattice(l, min_l, "fourth-moment sweep")?;
    let gammas = lattice_gammas(cost.omega, l);
    let n_qubits = table.n_qubits() as u64;
    betas
        .iter()
        .map(|&beta| {
            let moments: Vec<f64> = gammas
                .par_iter()
                .map(|&g| {
                    run_generic_with::<f64>(&table, &AngleSchedule::single(g, beta)).map(|s| s.fourth_moment())
                })
                .collect::<Result<_>>()?;
            let mean = moments.iter().sum::<f64>() / l as f64;
            let envelope = l4_envelope(n_qubits, beta).exp();
            Ok(L4Point {
                beta,
                l,
                mean,
                envelope,
                satisfied: mean <= envelope + 1e-9,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub gamma: f64,
    pub beta: f64,
    pub p_feas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    /// Gamma-major order.
    pub surface: Vec<SurfacePoint>,
    pub best: SurfacePoint,
    pub worst: SurfacePoint,
    pub precision: Precision,
}

fn extremes(surface: &[SurfacePoint]) -> (SurfacePoint, SurfacePoint) {
    let mut best = surface[0];
    let mut worst = surface[0];
    for p in &surface[1..] {
        if p.p_feas > best.p_feas {
            best = *p;
        }
        if p.p_feas < worst.p_feas {
            worst = *p;
        }
    }
    (best, worst)
}

fn grid_points(grid: &GridSpec) -> Vec<(f64, f64)> {
    let betas = grid.betas();
    grid.gammas()
        .into_iter()
        .flat_map(|g| betas.iter().map(move |&b| (g, b)))
        .collect()
}

fn generic_surface<T: Real>(table: &CostTable, points: &[(f64, f64)]) -> Result<Vec<f64>> {
    let eval = |&(g, b): &(f64, f64)| -> Result<f64> {
        run_generic_with::<T>(table, &AngleSchedule::single(g, b))?.feasible_mass(table.n())
    };
    if table.n_qubits() > SERIAL_GRID_QUBITS {
        points.iter().map(eval).collect()
    } else {
        points.par_iter().map(eval).collect()
    }
}

fn assemble(points: &[(f64, f64)], masses: Vec<f64>, precision: Precision) -> GridSearch {
    let surface: Vec<SurfacePoint> = points
        .iter()
        .zip(masses)
        .map(|(&(gamma, beta), p_feas)| SurfacePoint { gamma, beta, p_feas })
        .collect();
    let (best, worst) = extremes(&surface);
    GridSearch {
        surface,
        best,
        worst,
        precision,
    }
}

/// Generic-QAOA feasible mass over a `(gamma, beta)` grid, with the first
/// maximizer in gamma-major order.
pub fn grid_search_generic(instance: &ProblemInstance, grid: &GridSpec, precision: Precision) -> Result<GridSearch> {
    ensure_n(instance, MAX_GRID_N, "generic grid search size")?;
    let table = CostTable::new(&build_cost(instance))?;
    let points = grid_points(grid);
    let masses = match precision {
        Precision::F64 => generic_surface::<f64>(&table, &points)?,
        Precision::F32 => generic_surface::<f32>(&table, &points)?,
    };
    Ok(assemble(&points, masses, precision))
}

/// Subspace feasible mass over the same kind of grid.
pub fn grid_search_ce(instance: &ProblemInstance, grid: &GridSpec, normalized: bool) -> Result<GridSearch> {
    let cost = SubspaceCost::new(&build_cost(instance))?;
    let mixer = BlockMixer::new(instance.n, normalized)?;
    let points = grid_points(grid);
    let masses = points
        .par_iter()
        .map(|&(g, b)| Ok(run_ce_with(&cost, &mixer, &AngleSchedule::single(g, b))?.subspace_feasible_mass()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(assemble(&points, masses, Precision::F64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferResult {
    pub search: GridSearch,
    pub p_gen_max: f64,
    pub p_ce: f64,
    pub ratio: f64,
    pub factor: f64,
    pub satisfied: bool,
}

impl TransferResult {
    pub fn to_record(&self, instance: &str) -> ExperimentResult {
        ExperimentResult::new("transfer", instance)
            .param("mixer", "unnormalized")
            .param("precision", self.search.precision.to_string())
            .metric("gamma_star", self.search.best.gamma)
            .metric("beta_star", self.search.best.beta)
            .metric("p_gen_max", self.p_gen_max)
            .metric("p_ce", self.p_ce)
            .metric("ratio", self.ratio)
            .metric("factor", self.factor)
            .contract(
                "ratio >= 2^(n^2)/n^n",
                self.satisfied,
                format!("ratio {:.17e} vs factor {:.17e}", self.ratio, self.factor),
            )
    }
}

/// Reuses the generic grid argmax inside the subspace with the unnormalized
/// block mixer and compares against `2^{n^2} / n^n`.
pub fn parameter_transfer(instance: &ProblemInstance, grid: &GridSpec, precision: Precision) -> Result<TransferResult> {
    let search = grid_search_generic(instance, grid, precision)?;
    let schedule = AngleSchedule::single(search.best.gamma, search.best.beta);
    let p_ce = run_ce(instance, &schedule, false)?.subspace_feasible_mass();
    let p_gen_max = search.best.p_feas;
    let ratio = p_ce / p_gen_max;
    let factor = transfer_factor(instance.n as u64).exact.exp();
    // Equality case at zero angles is exact up to rounding.
    let satisfied = ratio >= factor * (1.0 - 1e-12);
    Ok(TransferResult {
        search,
        p_gen_max,
        p_ce,
        ratio,
        factor,
        satisfied,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Generic,
    Ce,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generic" => Ok(Self::Generic),
            "ce" => Ok(Self::Ce),
            _ => Err(Error::InvalidArgument(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleHistogram {
    pub method: Method,
    pub shots: u64,
    pub seed: u64,
    /// Statevector feasible mass.
    pub p_feas: f64,
    pub feasible_count: u64,
    pub sigma: f64,
    pub satisfied: bool,
    /// Counts per feasible bitstring.
    pub counts: BTreeMap<Bitstring, u64>,
}

impl FeasibleHistogram {
    pub fn fraction(&self) -> f64 {
        if self.shots == 0 {
            0.0
        } else {
            self.feasible_count as f64 / self.shots as f64
        }
    }

    pub fn to_record(&self, instance: &str) -> ExperimentResult {
        let mut r = ExperimentResult::new("histogram", instance)
            .param("method", serde_json::to_value(self.method).unwrap_or_default())
            .param("shots", self.shots)
            .metric("p_feas", self.p_feas)
            .metric("feasible_count", self.feasible_count as f64)
            .metric("feasible_fraction", self.fraction())
            .metric("distinct_feasible", self.counts.len() as f64)
            .contract(
                "feasible fraction within 5 sigma",
                self.satisfied,
                format!("|{} - {}| vs 5 sigma {}", self.fraction(), self.p_feas, 5.0 * self.sigma),
            );
        r.seed = Some(self.seed);
        r
    }
}

fn five_sigma(p: f64, hits: u64, shots: u64) -> (f64, bool) {
    if shots == 0 {
        return (0.0, hits == 0);
    }
    let sigma = (p * (1.0 - p) / shots as f64).max(0.0).sqrt();
    let frac = hits as f64 / shots as f64;
    // A point mass has zero variance; allow float noise around 0 and 1.
    (sigma, (frac - p).abs() <= 5.0 * sigma + 1e-9)
}

fn generic_histogram<T: Real>(
    instance: &ProblemInstance,
    schedule: &AngleSchedule,
    shots: u64,
    seed: u64,
) -> Result<(f64, BTreeMap<Bitstring, u64>, u64)> {
    let table = CostTable::new(&build_cost(instance))?;
    let state = run_generic_with::<T>(&table, schedule)?;
    let p = state.feasible_mass(instance.n)?;
    let hist = sample_counts(&state, shots, seed);
    let n = instance.n;
    let mut counts = BTreeMap::new();
    let mut hits = 0;
    for (x, c) in hist {
        if crate::instance::is_permutation_feasible(Bitstring(x), n) {
            counts.insert(Bitstring(x), c);
            hits += c;
        }
    }
    Ok((p, counts, hits))
}

/// Samples `shots` outcomes and keeps the feasible ones.
pub fn feasible_histogram(
    instance: &ProblemInstance,
    method: Method,
    schedule: &AngleSchedule,
    shots: u64,
    seed: u64,
    precision: Precision,
    normalized: bool,
) -> Result<FeasibleHistogram> {
    let (p_feas, counts, hits) = match method {
        Method::Generic => match precision {
            Precision::F64 => generic_histogram::<f64>(instance, schedule, shots, seed)?,
            Precision::F32 => generic_histogram::<f32>(instance, schedule, shots, seed)?,
        },
        Method::Ce => {
            let state = run_ce(instance, schedule, normalized)?;
            let n = instance.n;
            let hist = sample_from(|| state.probabilities(), shots, seed);
            let mut counts = BTreeMap::new();
            let mut hits = 0;
            for (i, c) in hist {
                let t = tuple_of(n, i as usize);
                if is_injective(&t) {
                    counts.insert(Bitstring::from_symbols(&t), c);
                    hits += c;
                }
            }
            (state.subspace_feasible_mass(), counts, hits)
        }
    };
    let (sigma, satisfied) = five_sigma(p_feas, hits, shots);
    Ok(FeasibleHistogram {
        method,
        shots,
        seed,
        p_feas,
        feasible_count: hits,
        sigma,
        satisfied,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthPoint {
    pub depth: usize,
    pub best_mass: f64,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

/// Best subspace feasible mass on the full per-layer product grid, for
/// `p = 1..=p_max`. The grid must contain zero in both angles.
pub fn ce_depth_sweep(
    instance: &ProblemInstance,
    grid: &GridSpec,
    p_max: usize,
    normalized: bool,
) -> Result<Vec<DepthPoint>> {
    ensure_n(instance, MAX_DEPTH_N, "depth sweep size")?;
    let largest = grid.gamma_points.max(grid.beta_points);
    if largest > MAX_DEPTH_GRID {
        return Err(capacity("depth sweep grid points per angle", MAX_DEPTH_GRID, largest));
    }
    let gammas = grid.gammas();
    let betas = grid.betas();
    if !gammas.contains(&0.0) || !betas.contains(&0.0) {
        return Err(Error::Precondition("depth sweep grid must contain zero in both angles".into()));
    }
    let cost = SubspaceCost::new(&build_cost(instance))?;
    let mixer = BlockMixer::new(instance.n, normalized)?;
    let layer_points = grid_points(grid);
    let per_layer = layer_points.len();
    (1..=p_max)
        .map(|p| {
            let total = per_layer
                .checked_pow(p as u32)
                .ok_or_else(|| capacity("depth sweep grid size", usize::MAX, usize::MAX))?;
            let schedule_of = |mut k: usize| {
                let mut gs = vec![0.0; p];
                let mut bs = vec![0.0; p];
                for layer in (0..p).rev() {
                    let (g, b) = layer_points[k % per_layer];
                    gs[layer] = g;
                    bs[layer] = b;
                    k /= per_layer;
                }
                (gs, bs)
            };
            let (k, best_mass) = (0..total)
                .into_par_iter()
                .map(|k| {
                    let (gs, bs) = schedule_of(k);
                    let s = AngleSchedule::new(gs, bs)?;
                    Ok((k, run_ce_with(&cost, &mixer, &s)?.subspace_feasible_mass()))
                })
                .try_reduce(
                    || (usize::MAX, f64::NEG_INFINITY),
                    |a, b| Ok(if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a }),
                )?;
            let (gammas, betas) = schedule_of(k);
            Ok(DepthPoint {
                depth: p,
                best_mass,
                gammas,
                betas,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwirlExperiment {
    pub average: TwirlAverage,
    pub best: Relabeling,
    pub inverse_dim: f64,
    pub satisfied: bool,
}

impl TwirlExperiment {
    pub fn to_record(&self, instance: &str) -> ExperimentResult {
        let mut r = ExperimentResult::new("twirl", instance)
            .param("exact", self.average.exact)
            .param("samples", self.average.samples)
            .metric("mean", self.average.mean)
            .metric("best", self.best.probability)
            .metric("inverse_dim", self.inverse_dim)
            .contract(
                "max >= 1/n^n",
                self.best.probability >= self.inverse_dim * (1.0 - 1e-12),
                format!("{} vs {}", self.best.probability, self.inverse_dim),
            );
        if self.average.exact {
            r = r.contract(
                "mean = 1/n^n",
                (self.average.mean - self.inverse_dim).abs() <= 1e-12,
                format!("{} vs {}", self.average.mean, self.inverse_dim),
            );
        }
        r.seed = self.average.seed;
        r
    }
}

/// Twirl mean and best relabeling of the all-zeros target.
pub fn twirl_existence_experiment(
    instance: &ProblemInstance,
    schedule: &AngleSchedule,
    normalized: bool,
    seed: u64,
) -> Result<TwirlExperiment> {
    ensure_n(instance, EXACT_TWIRL_N, "twirl experiment size")?;
    let target = vec![0; instance.n];
    let average = twirl_average(instance, schedule, &target, normalized, seed)?;
    let best = best_block_relabeling(instance, schedule, &target, normalized, seed)?;
    let inverse_dim = 1.0 / subspace_dim(instance.n) as f64;
    let satisfied = best.probability >= inverse_dim * (1.0 - 1e-12)
        && (!average.exact || (average.mean - inverse_dim).abs() <= 1e-12);
    Ok(TwirlExperiment {
        average,
        best,
        inverse_dim,
        satisfied,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(n: usize, seed: u64) -> ProblemInstance {
        ProblemInstance::synthetic(n, 5, seed).unwrap()
    }

    #[test]
    fn grid_spec_parsing() {
        let g: GridSpec = "10x10".parse().unwrap();
        assert_eq!(g.len(), 100);
        let gs = g.gammas();
        assert_eq!(gs[0], 0.0);
        assert_eq!(gs[9], PI);
        assert!("0x3".parse::<GridSpec>().is_err());
        assert!("3".parse::<GridSpec>().is_err());
        assert!("ax2".parse::<GridSpec>().is_err());
        let r: AngleRange = "0.5:1.5".parse().unwrap();
        assert_eq!((r.lo, r.hi), (0.5, 1.5));
        assert!("2:1".parse::<AngleRange>().is_err());
        assert!("nan:1".parse::<AngleRange>().is_err());
        assert!("-1e308:1e308".parse::<AngleRange>().is_err());
        let single = GridSpec::new(1, 1, AngleRange::new(0.0, 0.0).unwrap(), AngleRange::new(0.0, 0.0).unwrap());
        assert!(single.is_ok());
        assert!(GridSpec::new(2, 1, AngleRange::new(1.0, 1.0).unwrap(), AngleRange::default()).is_err());
    }

    #[test]
    fn lattice_precondition_names_minimum() {
        let i = inst(2, 1);
        let spread = build_cost(&i).spread as usize;
        let err = exact_angle_average(&i, 0.7, Some(spread)).unwrap_err();
        assert!(err.to_string().contains(&format!("L >= {}", spread + 1)));
    }

    #[test]
    fn level_set_prediction_matches_lattice_mean() {
        for (n, seed) in [(2, 1), (2, 4), (3, 2)] {
            for beta in [0.3, 0.7, 1.1] {
                let avg = exact_angle_average(&inst(n, seed), beta, None).unwrap();
                let pred = avg.level_set_prediction.unwrap();
                assert!((avg.mean - pred).abs() < 1e-10, "n={n} beta={beta}");
            }
        }
    }

    #[test]
    fn singleton_levels_give_baseline() {
        // Distinct costs per string leave only diagonal terms.
        let prediction = {
            let mut total = 0.0;
            for y in 0..16u64 {
                let mut s = FullState::<f64>::basis(4, y).unwrap();
                s.apply_x_mixer(0.7);
                total += s.feasible_mass(2).unwrap();
            }
            total / 16.0
        };
        assert!((prediction - 2.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn beta_zero_average_is_baseline() {
        let avg = exact_angle_average(&inst(2, 3), 0.0, None).unwrap();
        assert!((avg.mean - 0.125).abs() < 1e-12);
        assert!(avg.per_gamma.iter().all(|p| (p - 0.125).abs() < 1e-12));
    }

    #[test]
    fn markov_trivial_level() {
        let m = markov_fraction(&inst(2, 1), 0.7, 1.0 + 1e-15, None).unwrap();
        assert!(m.fraction <= 1.0);
        let from = markov_from_masses(&[0.1, 0.5, 0.9, 0.2], 0.1, 4.0);
        assert_eq!(from.fraction, 0.5);
        assert!(!from.satisfied);
    }

    #[test]
    fn l4_at_beta_zero_is_uniform_moment() {
        let pts = l4_sweep(&inst(2, 1), &[0.0], None).unwrap();
        assert!((pts[0].mean - 1.0 / 16.0).abs() < 1e-15);
        assert!(pts[0].satisfied);
    }

    #[test]
    fn l4_grid_needs_twice_spread() {
        let i = inst(2, 1);
        let spread = build_cost(&i).spread as usize;
        assert!(l4_sweep(&i, &[0.3], Some(spread + 1)).is_err());
    }

    #[test]
    fn one_point_grid_is_baseline() {
        let g = GridSpec::new(1, 1, AngleRange::new(0.0, 0.0).unwrap(), AngleRange::new(0.0, 0.0).unwrap()).unwrap();
        let s = grid_search_generic(&inst(3, 1), &g, Precision::F64).unwrap();
        assert!((s.best.p_feas - 6.0 / 512.0).abs() < 1e-15);
    }

    #[test]
    fn grid_search_deterministic_and_ordered() {
        let g: GridSpec = "4x3".parse().unwrap();
        let a = grid_search_generic(&inst(2, 2), &g, Precision::F64).unwrap();
        let b = grid_search_generic(&inst(2, 2), &g, Precision::F64).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.surface.len(), 12);
        assert_eq!(a.surface[1].gamma, 0.0);
        assert!(a.surface[1].beta > 0.0);
        let max = a.surface.iter().map(|p| p.p_feas).fold(f64::MIN, f64::max);
        let first = a.surface.iter().find(|p| p.p_feas == max).unwrap();
        assert_eq!(&a.best, first);
        assert!(a.best.p_feas >= 0.125 - 1e-15);
    }

    #[test]
    fn f32_grid_close_to_f64() {
        let g: GridSpec = "3x3".parse().unwrap();
        let a = grid_search_generic(&inst(3, 5), &g, Precision::F64).unwrap();
        let b = grid_search_generic(&inst(3, 5), &g, Precision::F32).unwrap();
        for (x, y) in a.surface.iter().zip(&b.surface) {
            assert!((x.p_feas - y.p_feas).abs() < 1e-5);
        }
    }

    #[test]
    fn transfer_equality_at_zero_angles() {
        let g = GridSpec::new(1, 1, AngleRange::new(0.0, 0.0).unwrap(), AngleRange::new(0.0, 0.0).unwrap()).unwrap();
        for n in 2..=3 {
            let t = parameter_transfer(&inst(n, 1), &g, Precision::F64).unwrap();
            assert!((t.ratio / t.factor - 1.0).abs() < 1e-12);
            assert!(t.satisfied);
        }
    }

    #[test]
    fn histogram_zero_shots() {
        let h = feasible_histogram(
            &inst(2, 1),
            Method::Generic,
            &AngleSchedule::single(0.2, 0.3),
            0,
            1,
            Precision::F64,
            true,
        )
        .unwrap();
        assert!(h.counts.is_empty());
        assert!(h.satisfied);
    }

    #[test]
    fn ce_histogram_only_feasible_keys() {
        let h = feasible_histogram(
            &inst(3, 1),
            Method::Ce,
            &AngleSchedule::single(0.4, 0.5),
            20_000,
            2,
            Precision::F64,
            true,
        )
        .unwrap();
        assert!(h.counts.keys().all(|x| crate::instance::is_permutation_feasible(*x, 3)));
        assert_eq!(h.counts.values().sum::<u64>(), h.feasible_count);
        assert!(h.satisfied);
    }

    #[test]
    fn depth_sweep_monotone_and_zero_baseline() {
        let grid = GridSpec::new(3, 3, AngleRange::new(0.0, 1.2).unwrap(), AngleRange::new(0.0, 1.2).unwrap()).unwrap();
        let pts = ce_depth_sweep(&inst(3, 1), &grid, 2, true).unwrap();
        assert!(pts[1].best_mass >= pts[0].best_mass);
        assert!(pts[0].best_mass >= 6.0 / 27.0 - 1e-15);
        let zero = GridSpec::new(1, 1, AngleRange::new(0.0, 0.0).unwrap(), AngleRange::new(0.0, 0.0).unwrap()).unwrap();
        for p in ce_depth_sweep(&inst(3, 1), &zero, 3, true).unwrap() {
            assert!((p.best_mass - 6.0 / 27.0).abs() < 1e-14);
        }
        let no_zero = GridSpec::new(2, 2, AngleRange::new(0.1, 1.0).unwrap(), AngleRange::default()).unwrap();
        assert!(ce_depth_sweep(&inst(3, 1), &no_zero, 1, true).is_err());
    }

    #[test]
    fn twirl_experiment() {
        let e = twirl_existence_experiment(&inst(2, 1), &AngleSchedule::single(0.5, 0.9), true, 0).unwrap();
        assert!((e.average.mean - 0.25).abs() < 1e-12);
        assert!(e.best.probability >= 0.25);
        assert!(e.satisfied);
        let id = twirl_existence_experiment(&inst(3, 1), &AngleSchedule::single(0.0, 0.0), true, 0).unwrap();
        assert!((id.best.probability - 1.0 / 27.0).abs() < 1e-15);
        assert!(id.to_record("x").all_satisfied());
    }

    #[test]
    fn record_serializes() {
        let r = ExperimentResult::new("avg", "syn2")
            .param("beta", 0.7)
            .metric("mean", 0.125)
            .contract("c", true, "ok");
        let line = serde_json::to_string(&r).unwrap();
        let back: ExperimentResult = serde_json::from_str(&line).unwrap();
        assert_eq!(back, r);
    }
}
