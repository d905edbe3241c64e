//! `ppa verify`: check dispatch and the key-value report format.

use std::fmt::Write as _;

use nalgebra::DVector;

use ppa_core::sampling::{seeded_rng, VectorSampler};
use ppa_core::verify::{self, CheckReport, GraphSampler, IDENTITY_SLACK};
use ppa_core::{Error, Metric};

use crate::spec::{Body, Problem};

pub const CHECKS: [&str; 11] = ["monotone", "fne", "minty", "fulldomain", "sri", "single", "moreau", "chain", "fejer", "lipschitz", "fixzer"];

/// Half-width of the sampling cube.
const REGION: f64 = 5.0;
/// Range tests probe `[-PROBE_HALF, PROBE_HALF]`.
const PROBE_HALF: f64 = 10.0;

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub n: Option<usize>,
    pub seed: u64,
    pub budget: Option<usize>,
    pub unrestricted: bool,
}

/// Why a check produced no report.
#[derive(Debug)]
pub enum Refusal {
    /// The check does not apply to this problem.
    NotApplicable(String),
    /// The check ran into a failed precondition that counts as a violation.
    Failed(Error),
}

impl From<Error> for Refusal {
    fn from(e: Error) -> Self {
        match e {
            Error::NotAFixedPoint { .. } | Error::NotAZero { .. } => Refusal::Failed(e),
            e => Refusal::NotApplicable(e.to_string()),
        }
    }
}

fn not_applicable<T>(msg: &str) -> Result<T, Refusal> {
    Err(Refusal::NotApplicable(msg.into()))
}

fn samples(dim: usize, n: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = seeded_rng(seed);
    let region = VectorSampler::cube(dim, REGION);
    (0..n).map(|_| region.sample(&mut rng)).collect()
}

pub fn run_check(name: &str, problem: &Problem, opts: Options) -> Result<CheckReport, Refusal> {
    let Body::Ppa { a, q, strategy } = &problem.body else {
        return not_applicable("checks need a proximal point form; run ADMM problems with `ppa run`");
    };
    let (a, q, strategy) = (a, q, *strategy);
    let dim = problem.dim();
    let n = opts.n.unwrap_or(1000);
    let seed = opts.seed;
    let region = VectorSampler::cube(dim, REGION);
    let report = match name {
        "monotone" if opts.unrestricted => verify::check_monotonicity(a, &region, n, seed)?,
        "monotone" => verify::check_restricted_monotonicity(a, q, &GraphSampler::restricted(region, q), n, seed)?,
        "fne" => verify::check_firm_nonexpansive(a, q, &region, n, seed, strategy)?,
        "minty" => {
            let Some(op) = problem.builtin() else { return not_applicable("the range test needs a builtin planar operator") };
            verify::check_minty_range(op, q, &verify::probe_line(opts.n.unwrap_or(401), PROBE_HALF))?
        }
        "fulldomain" => match problem.builtin() {
            Some(op) => verify::check_minty_full_domain_agreement(op, q, &verify::probe_line(opts.n.unwrap_or(401), PROBE_HALF), strategy)?,
            None => verify::check_full_domain(a, q, &samples(dim, n, seed), strategy)?,
        },
        "sri" => {
            let Some(op) = problem.builtin() else { return not_applicable("sri needs interval-product ranges") };
            let holds = verify::check_sri_condition(&op.operator_range(), &verify::metric_range(q)?)?;
            let mut r = CheckReport::new("sri", 0.0, None);
            r.record(if holds { 0.0 } else { -1.0 }, &[], &[f64::from(u8::from(holds))]);
            r
        }
        "single" => verify::check_single_valuedness(a, q, &samples(dim, n, seed))?,
        "chain" => identity_report("chain", q, n, seed, |x| Ok(verify::eval_equality_chain(a, q, x)?.discrepancy))?,
        "moreau" => identity_report("moreau", q, n, seed, |x| verify::check_moreau_identity(a, q, x, strategy))?,
        "fejer" => verify::check_fejer(a, q, &problem.x0, strategy, opts.budget.unwrap_or(200))?,
        "lipschitz" => match problem.kernel_map() {
            Some(map) => verify::check_kernel_map_lipschitz(&map, REGION, n, seed)?,
            None => verify::check_resolvent_lipschitz(a, q, &region, n, seed, strategy)?,
        },
        "fixzer" => {
            if problem.zeros.is_empty() {
                return not_applicable("fixzer needs known zeros in the problem file");
            }
            let mut probes = problem.zeros.clone();
            probes.extend(samples(dim, n, seed));
            verify::check_fix_equals_zeros(a, q, &problem.zeros, &probes, strategy)?
        }
        other => return not_applicable(&format!("unknown check `{other}`")),
    };
    Ok(report)
}

/// One sample per seeded input; the measured discrepancy is held to
/// [`IDENTITY_SLACK`].
fn identity_report<F>(name: &str, q: &Metric, n: usize, seed: u64, eval: F) -> Result<CheckReport, Refusal>
where
    F: Fn(&DVector<f64>) -> ppa_core::Result<f64>,
{
    let mut report = CheckReport::new(name, 0.0, Some(seed));
    for x in samples(q.dim(), n, seed) {
        let d = eval(&x)?;
        report.record(IDENTITY_SLACK - d, x.as_slice(), &[d]);
    }
    Ok(report)
}

fn list(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|x| format!("{x:e}")).collect();
    format!("[{}]", items.join(", "))
}

pub fn format_report(r: &CheckReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "check_name = {}", r.check_name);
    let _ = writeln!(s, "n_samples = {}", r.n_samples);
    let _ = writeln!(s, "n_violations = {}", r.n_violations);
    let _ = writeln!(s, "n_inconclusive = {}", r.n_inconclusive);
    let _ = writeln!(s, "worst_margin = {:e}", r.worst_margin);
    let _ = writeln!(s, "slack = {:e}", r.slack);
    let _ = writeln!(s, "seed = {}", r.seed.map_or_else(|| "none".to_string(), |v| v.to_string()));
    let _ = writeln!(s, "passes = {}", r.passes());
    for (i, w) in r.witnesses.iter().enumerate() {
        let _ = writeln!(s, "witness.{i}.margin = {:e}", w.margin);
        let _ = writeln!(s, "witness.{i}.input = {}", list(&w.input));
        let _ = writeln!(s, "witness.{i}.values = {}", list(&w.values));
    }
    s
}
