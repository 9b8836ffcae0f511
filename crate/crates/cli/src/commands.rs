use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use chlab_core::acceptance::{algebra_residuals, run_criterion, AlgebraResiduals, CriterionReport, CRITERIA};
use chlab_core::flows::{finite_difference_pushforward, pushforward_frame};
use chlab_core::fup::{
    beta_regression, discrete_norm_with, frobenius_bound, DiscreteSet, FupParams, NormMethod, NormOptions, PorousSet,
    Scale,
};
use chlab_core::minkowski::{frame_basis, random_algebra_element};
use chlab_core::symplectic::{
    exact_symplectic_form, fit_rectangle_constant, form_convergence, lagrangian_residuals, pairing_residual,
    rectangle_series, straighten, symplectic_form_at, CotangentPoint, PairingFamily, Slab,
};
use chlab_core::words::{check_count_bound, parse_threshold, Threshold};
use chlab_core::{FrameTangent, Sign, SpaceDim, SphereBundlePoint};
use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{output, CliError, Common, Verdict};

fn space_dim(n: usize) -> Result<SpaceDim, CliError> {
    Ok(SpaceDim::new(n)?)
}

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn random_bundle_point(n: SpaceDim, rng: &mut ChaCha8Rng) -> SphereBundlePoint {
    SphereBundlePoint::from_lift(random_algebra_element(n, 0.5, rng).exp())
}

#[derive(Args)]
pub struct AlgebraArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Random slow vectors per sign
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 1e-12)]
    tolerance: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Serialize)]
struct AlgebraReport {
    n: usize,
    samples: usize,
    seed: u64,
    tolerance: f64,
    residuals: AlgebraResiduals,
    max_residual: f64,
    passed: bool,
}

pub fn algebra_check(a: AlgebraArgs) -> Result<Verdict, CliError> {
    let residuals = algebra_residuals(space_dim(a.n)?, a.samples, a.common.seed)?;
    let max_residual = residuals.max();
    let passed = max_residual <= a.tolerance;
    let report = AlgebraReport {
        n: a.n,
        samples: a.samples,
        seed: a.common.seed,
        tolerance: a.tolerance,
        residuals,
        max_residual,
        passed,
    };
    output::emit(a.common.output.as_deref(), &output::json(&report)?)?;
    Ok(verdict(passed))
}

#[derive(Args)]
pub struct FlowArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 3.0)]
    t_max: f64,
    #[arg(long, default_value_t = 0.5)]
    t_step: f64,
    #[arg(long, default_value_t = 1e-5)]
    fd_step: f64,
    /// Largest accepted relative error of the finite-difference pushforward
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Serialize)]
struct FlowRow {
    t: f64,
    index: usize,
    label: String,
    factor: f64,
    pushforward: f64,
    finite_difference: f64,
    relative_error: f64,
}

pub fn flow_expansion(a: FlowArgs) -> Result<Verdict, CliError> {
    let n = space_dim(a.n)?;
    if !(a.t_step > 0.0 && a.t_max >= 0.0) {
        return Err(CliError::Usage(format!("need t-step > 0 and t-max >= 0, got {} and {}", a.t_step, a.t_max)));
    }
    if !(a.fd_step > 0.0 && a.fd_step < 1e-2) {
        return Err(CliError::Usage(format!("fd-step must lie in (0, 1e-2), got {}", a.fd_step)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.common.seed);
    let q = random_bundle_point(n, &mut rng);
    let labels = frame_basis(n);
    let steps = (a.t_max / a.t_step + 1e-9).floor() as usize;
    let mut rows = Vec::new();
    let mut worst = 0.0_f64;
    for k in 0..=steps {
        let t = k as f64 * a.t_step;
        for (i, label) in labels.iter().enumerate() {
            let w = FrameTangent::unit(q.clone(), i)?;
            let exact = pushforward_frame(&w, t);
            let fd = finite_difference_pushforward(&w, t, a.fd_step);
            let err = exact.coeffs().iter().zip(fd.coeffs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            let relative_error = err / exact.norm().max(1.0);
            worst = worst.max(relative_error);
            rows.push(FlowRow {
                t,
                index: i,
                label: label.to_string(),
                factor: exact.coeffs()[i],
                pushforward: exact.norm(),
                finite_difference: fd.norm(),
                relative_error,
            });
        }
    }
    output::emit(a.common.output.as_deref(), &output::csv(&rows)?)?;
    Ok(verdict(worst <= a.tolerance))
}

#[derive(Args)]
pub struct SymplecticArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Number of random base points
    #[arg(long, default_value_t = 5)]
    samples: usize,
    #[arg(long, default_value_t = 1e-4)]
    fd_step: f64,
    /// Step for the step-halving ratio
    #[arg(long, default_value_t = 1e-3)]
    convergence_step: f64,
    /// Largest accepted pairing residual
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Serialize)]
struct BaseReport {
    index: usize,
    tau: f64,
    pairings: BTreeMap<&'static str, f64>,
    lagrangian_unstable: f64,
    lagrangian_stable: f64,
    convergence_ratio: f64,
    straighten_residual: f64,
    image_residuals: BTreeMap<&'static str, f64>,
}

#[derive(Serialize)]
struct SymplecticReport {
    n: usize,
    seed: u64,
    fd_step: f64,
    convergence_step: f64,
    tolerance: f64,
    bases: Vec<BaseReport>,
    passed: bool,
}

pub fn symplectic_check(a: SymplecticArgs) -> Result<Verdict, CliError> {
    let n = space_dim(a.n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.common.seed);
    let mut bases = Vec::with_capacity(a.samples);
    let mut passed = true;
    for index in 0..a.samples {
        let q = random_bundle_point(n, &mut rng);
        let base = CotangentPoint::new(q, rng.gen_range(0.5..2.0))?;
        let form = symplectic_form_at(&base, a.fd_step)?;
        let pairings: BTreeMap<_, _> =
            PairingFamily::ALL.iter().map(|&f| (f.name(), pairing_residual(&form, f))).collect();
        let (lagrangian_unstable, lagrangian_stable) = lagrangian_residuals(&form);
        let convergence_ratio = form_convergence(&base, a.convergence_step).ratio();
        let map = straighten(&base)?;
        let straighten_residual = map.symplectic_residual(&exact_symplectic_form(&base));
        let image_residuals: BTreeMap<_, _> = map.image_residuals().into_iter().collect();
        passed &= pairings.values().all(|&r| r <= a.tolerance)
            && lagrangian_unstable.max(lagrangian_stable) <= a.tolerance
            && (3.0..=5.0).contains(&convergence_ratio)
            && straighten_residual <= 1e-8
            && image_residuals.values().all(|&r| r <= 1e-7);
        bases.push(BaseReport {
            index,
            tau: base.tau(),
            pairings,
            lagrangian_unstable,
            lagrangian_stable,
            convergence_ratio,
            straighten_residual,
            image_residuals,
        });
    }
    let report = SymplecticReport {
        n: a.n,
        seed: a.common.seed,
        fd_step: a.fd_step,
        convergence_step: a.convergence_step,
        tolerance: a.tolerance,
        bases,
        passed,
    };
    output::emit(a.common.output.as_deref(), &output::json(&report)?)?;
    Ok(verdict(passed))
}

#[derive(Clone, Copy, ValueEnum)]
enum SlabArg {
    /// Slab width alpha^2
    Thin,
    /// Slab width alpha (control)
    Wide,
}

fn parse_sign(s: &str) -> Result<Sign, String> {
    s.parse::<Sign>().map_err(|e| e.to_string())
}

#[derive(Args)]
pub struct RectangleArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.03, 0.01])]
    alpha: Vec<f64>,
    /// `-` (unstable, flowed forward) or `+` (stable, flowed backward)
    #[arg(long, value_parser = parse_sign, default_value = "-", allow_hyphen_values = true)]
    sign: Sign,
    #[arg(long, value_enum, default_value = "thin")]
    slab: SlabArg,
    #[arg(long, default_value_t = 0.5)]
    t_step: f64,
    #[arg(long, default_value_t = 32)]
    m_samples: usize,
    /// Largest accepted log-residual of the constant fit (thin slabs only)
    #[arg(long, default_value_t = 0.5)]
    tolerance: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Serialize)]
struct RectangleCsvRow {
    alpha: f64,
    sign: char,
    t: f64,
    m: usize,
    diameter: f64,
    diameter_over_alpha_et: f64,
}

pub fn rectangle(a: RectangleArgs) -> Result<Verdict, CliError> {
    let n = space_dim(a.n)?;
    if a.t_step.is_nan() || a.t_step <= 0.0 {
        return Err(CliError::Usage(format!("t-step must be positive, got {}", a.t_step)));
    }
    let map = straighten(&CotangentPoint::base_point(n))?;
    let slab = match a.slab {
        SlabArg::Thin => Slab::Thin,
        SlabArg::Wide => Slab::Wide,
    };
    let mut rows = Vec::new();
    let mut passed = true;
    for &alpha in &a.alpha {
        let series = rectangle_series(&map, alpha, a.sign, slab, a.t_step, a.m_samples)?;
        let (c, residual) = fit_rectangle_constant(&series);
        let growth = series.last().map_or(1.0, |r| r.diameter_over_alpha_et) / series[0].diameter_over_alpha_et;
        eprintln!("alpha {alpha}: C = {c:.4}, log residual {residual:.4}, ratio growth x{growth:.2}");
        if matches!(slab, Slab::Thin) {
            passed &= residual <= a.tolerance;
        }
        rows.extend(series.into_iter().map(|r| RectangleCsvRow {
            alpha: r.alpha,
            sign: r.sign.symbol(),
            t: r.t,
            m: r.m,
            diameter: r.diameter,
            diameter_over_alpha_et: r.diameter_over_alpha_et,
        }));
    }
    output::emit(a.common.output.as_deref(), &output::csv(&rows)?)?;
    Ok(verdict(passed))
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    /// Iterated Cantor set with digits --kept in base --cantor-base
    Cantor,
    /// Nested periodic gaps of width --gap-delta e^{-2j} every --gap-t e^{-2j}
    Gap,
    /// Intervals read from --set
    File,
    /// The whole interval
    Full,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Family::Cantor => "cantor",
            Family::Gap => "gap",
            Family::File => "file",
            Family::Full => "full",
        }
    }
}

#[derive(Args)]
pub struct SetArgs {
    #[arg(long, value_enum, default_value = "cantor")]
    family: Family,
    #[arg(long, default_value_t = 3)]
    cantor_base: u32,
    #[arg(long, value_delimiter = ',', default_values_t = [0u32, 2])]
    kept: Vec<u32>,
    /// Construction depth; by default the smallest depth resolving the grid
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long, default_value_t = 1.0)]
    gap_t: f64,
    #[arg(long, default_value_t = 0.5)]
    gap_delta: f64,
    /// Interval file (one `a b` per line) for --family file
    #[arg(long)]
    set: Option<PathBuf>,
    /// Separate interval file for Omega+; Omega+ = Omega- if omitted
    #[arg(long)]
    plus_set: Option<PathBuf>,
    /// auto, dense-svd or power-iteration
    #[arg(long, default_value = "auto")]
    method: String,
}

struct BuiltSet {
    set: PorousSet,
    id: String,
    /// Porosity constant the construction guarantees, when known.
    nu: Option<f64>,
}

fn read_set(path: &PathBuf) -> Result<PorousSet, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(PorousSet::parse(&text)?)
}

impl SetArgs {
    fn build(&self, grid: usize) -> Result<BuiltSet, CliError> {
        match self.family {
            Family::Cantor => {
                let base = self.cantor_base;
                let depth = self.depth.unwrap_or_else(|| {
                    let mut d = 1;
                    while (base as f64).powi(d as i32) < grid as f64 && d < 40 {
                        d += 1;
                    }
                    d
                });
                let set = PorousSet::cantor_iterate(base, &self.kept, depth)?;
                let kept: Vec<String> = self.kept.iter().map(u32::to_string).collect();
                Ok(BuiltSet { set, id: format!("cantor-b{base}-k{}-d{depth}", kept.join(".")), nu: None })
            }
            Family::Gap => {
                let depth = self.depth.unwrap_or(3);
                let (set, nu) = PorousSet::gap_construction(self.gap_t, self.gap_delta, depth)?;
                Ok(BuiltSet { set, id: format!("gap-T{}-delta{}-d{depth}", self.gap_t, self.gap_delta), nu: Some(nu) })
            }
            Family::File => {
                let path = self.set.as_ref().ok_or_else(|| CliError::Usage("--family file needs --set".into()))?;
                let id = path.file_stem().map_or_else(|| "file".into(), |s| s.to_string_lossy().into_owned());
                Ok(BuiltSet { set: read_set(path)?, id, nu: None })
            }
            Family::Full => Ok(BuiltSet { set: PorousSet::unit(), id: "full".into(), nu: None }),
        }
    }

    fn pair(&self, grid: usize) -> Result<(DiscreteSet, DiscreteSet, BuiltSet), CliError> {
        let built = self.build(grid)?;
        let minus = DiscreteSet::from_porous(&built.set, grid)?;
        let plus = match &self.plus_set {
            Some(path) => DiscreteSet::from_porous(&read_set(path)?, grid)?,
            None => minus.clone(),
        };
        Ok((minus, plus, built))
    }

    fn options(&self) -> Result<NormOptions, CliError> {
        let method = match self.method.as_str() {
            "auto" => None,
            other => Some(other.parse::<NormMethod>()?),
        };
        Ok(NormOptions { method, ..Default::default() })
    }
}

#[derive(Args)]
pub struct FupNormArgs {
    #[arg(long = "N", alias = "N-list", value_delimiter = ',', default_values_t = [243usize])]
    n_list: Vec<usize>,
    #[command(flatten)]
    set: SetArgs,
    /// Porosity constant recorded with each row; defaults to the construction's own, else 0.1
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    eps0: f64,
    /// Scale window is [h^gamma0, h^gamma1]
    #[arg(long, default_value_t = 0.7)]
    gamma0: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma1: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Serialize)]
struct FupNormRow {
    #[serde(rename = "N_or_h")]
    n_or_h: usize,
    set_id: String,
    nu: f64,
    alpha0: f64,
    alpha1: f64,
    norm: f64,
    method: NormMethod,
    residual: f64,
}

pub fn fup_norm(a: FupNormArgs) -> Result<Verdict, CliError> {
    let options = a.set.options()?;
    let mut rows = Vec::new();
    for &grid in &a.n_list {
        let (minus, plus, built) = a.set.pair(grid)?;
        let nu = a.nu.or(built.nu).unwrap_or(0.1);
        let params = FupParams::new(Scale::N(grid), a.eps0, nu, a.gamma0, a.gamma1)?;
        let result = discrete_norm_with(&minus, &plus, options)?;
        rows.push(FupNormRow {
            n_or_h: grid,
            set_id: built.id,
            nu,
            alpha0: params.alpha0,
            alpha1: params.alpha1,
            norm: result.value,
            method: result.method,
            residual: result.residual,
        });
    }
    output::emit(a.common.output.as_deref(), &output::csv(&rows)?)?;
    Ok(Verdict::Pass)
}

#[derive(Args)]
pub struct FupBetaArgs {
    #[arg(long = "N", alias = "N-list", value_delimiter = ',', default_values_t = [81usize, 243, 729, 2187])]
    n_list: Vec<usize>,
    #[command(flatten)]
    set: SetArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Serialize)]
struct BetaSample {
    #[serde(rename = "N")]
    n: usize,
    h: f64,
    set_id: String,
    norm: f64,
    method: NormMethod,
    iterations: usize,
    residual: f64,
    frobenius_bound: f64,
}

#[derive(Serialize)]
struct BetaReport {
    family: &'static str,
    samples: Vec<BetaSample>,
    beta_hat: f64,
    #[serde(rename = "log_C")]
    log_c: f64,
    r_squared: f64,
}

pub fn fup_beta(a: FupBetaArgs) -> Result<Verdict, CliError> {
    let options = a.set.options()?;
    let mut samples = Vec::new();
    for &grid in &a.n_list {
        let (minus, plus, built) = a.set.pair(grid)?;
        let result = discrete_norm_with(&minus, &plus, options)?;
        samples.push(BetaSample {
            n: grid,
            h: 1.0 / grid as f64,
            set_id: built.id,
            norm: result.value,
            method: result.method,
            iterations: result.iterations,
            residual: result.residual,
            frobenius_bound: frobenius_bound(&minus, &plus),
        });
    }
    let fit = beta_regression(&samples.iter().map(|s| (s.h, s.norm)).collect::<Vec<_>>())?;
    let report =
        BetaReport { family: a.set.family.name(), samples, beta_hat: fit.beta_hat, log_c: fit.log_c, r_squared: fit.r_squared };
    output::emit(a.common.output.as_deref(), &output::json(&report)?)?;
    Ok(Verdict::Pass)
}

/// `e-K` means `h = exp(-K)`; anything else is `h` itself. Returns `log(1/h)`.
fn parse_log_inv_h(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if let Some(k) = s.strip_prefix("e-") {
        let k: f64 = k.parse().map_err(|_| format!("cannot parse {s:?} as e-K"))?;
        return if k > 0.0 { Ok(k) } else { Err(format!("{s:?}: K must be positive")) };
    }
    let h: f64 = s.parse().map_err(|_| format!("cannot parse {s:?} as h"))?;
    if h > 0.0 && h < 1.0 {
        Ok(-h.ln())
    } else {
        Err(format!("h must lie in (0, 1), got {h}"))
    }
}

fn parse_alpha(s: &str) -> Result<Threshold, String> {
    parse_threshold(s).map_err(|e| e.to_string())
}

#[derive(Args)]
pub struct WordsArgs {
    #[arg(long, default_value_t = 0.1)]
    eps0: f64,
    /// Exact density threshold, as a decimal or p/q
    #[arg(long, value_parser = parse_alpha, default_value = "0.05")]
    alpha: Threshold,
    #[arg(long, default_value_t = 0.2)]
    beta: f64,
    /// Decreasing h values
    #[arg(
        long = "h-list",
        value_delimiter = ',',
        value_parser = parse_log_inv_h,
        default_value = "e-60,e-70,e-80,e-90,e-100,e-110,e-120,e-130,e-140,e-150,e-160,e-170,e-180,e-190,e-200,e-210,e-220,e-230,e-240"
    )]
    log_inv_h: Vec<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Serialize)]
struct WordsRow {
    h: f64,
    eps0: f64,
    alpha: String,
    #[serde(rename = "N0")]
    n0: u32,
    #[serde(rename = "size_Zc")]
    size_zc: String,
    #[serde(rename = "size_X")]
    size_x: String,
    #[serde(rename = "size_Y")]
    size_y: String,
    #[serde(rename = "C_empirical")]
    c_empirical: f64,
}

pub fn words_count(a: WordsArgs) -> Result<Verdict, CliError> {
    let report = check_count_bound(a.beta, a.alpha, a.eps0, &a.log_inv_h)?;
    let rows: Vec<WordsRow> = report
        .rows
        .iter()
        .map(|r| WordsRow {
            h: (-r.log_inv_h).exp(),
            eps0: a.eps0,
            alpha: a.alpha.to_string(),
            n0: r.n0,
            size_zc: r.counts.size_zc.to_string(),
            size_x: r.counts.size_x.to_string(),
            size_y: r.counts.size_y.to_string(),
            c_empirical: r.log_c.exp(),
        })
        .collect();
    eprintln!(
        "C over the grid: {:.6e} (log {:.4}); per-h constant {}",
        report.log_c_global.exp(),
        report.log_c_global,
        if report.bounded { "stabilized" } else { "still growing" }
    );
    output::emit(a.common.output.as_deref(), &output::csv(&rows)?)?;
    Ok(Verdict::Pass)
}

#[derive(Args)]
pub struct AllArgs {
    /// Run only these criteria
    #[arg(long, value_delimiter = ',')]
    only: Vec<u8>,
    /// Summary JSON path; stdout if omitted
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct Summary {
    passed: bool,
    criteria: Vec<CriterionReport>,
}

pub fn all(a: AllArgs) -> Result<Verdict, CliError> {
    let ids: Vec<u8> = if a.only.is_empty() { (1..=CRITERIA).collect() } else { a.only };
    if let Some(bad) = ids.iter().find(|&&id| id == 0 || id > CRITERIA) {
        return Err(CliError::Usage(format!("criterion ids run from 1 to {CRITERIA}, got {bad}")));
    }
    let criteria: Vec<CriterionReport> = ids
        .into_iter()
        .map(|id| {
            let report = run_criterion(id);
            eprintln!("{}", report.line());
            report
        })
        .collect();
    let passed = criteria.iter().all(|c| c.passed);
    output::emit(a.output.as_deref(), &output::json(&Summary { passed, criteria })?)?;
    Ok(verdict(passed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_tokens() {
        assert_eq!(parse_log_inv_h("e-60").unwrap(), 60.0);
        assert!((parse_log_inv_h("0.01").unwrap() - 100f64.ln()).abs() < 1e-12);
        assert!(parse_log_inv_h("2").is_err());
        assert!(parse_log_inv_h("e-0").is_err());
        assert!(parse_log_inv_h("e-x").is_err());
    }
}
