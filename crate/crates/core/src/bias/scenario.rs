//! Newsvendor scenario generation, curriculum levels and dataset splits.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{stream, Rng as StreamRng};

use super::normal::inv_norm_cdf;
use super::BiasError;

/// An interval of critical ratios with independently open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub lo_open: bool,
    #[serde(default)]
    pub hi_open: bool,
}

const MEMBER_TOL: f64 = 1e-9;

impl Interval {
    pub const fn closed(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_open: false,
            hi_open: false,
        }
    }

    pub const fn point(x: f64) -> Self {
        Interval::closed(x, x)
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_open {
            x > self.lo
        } else {
            x >= self.lo - MEMBER_TOL
        };
        let below = if self.hi_open {
            x < self.hi
        } else {
            x <= self.hi + MEMBER_TOL
        };
        above && below
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let (lo, lo_open) = match self.lo.total_cmp(&other.lo) {
            std::cmp::Ordering::Less => (other.lo, other.lo_open),
            std::cmp::Ordering::Greater => (self.lo, self.lo_open),
            std::cmp::Ordering::Equal => (self.lo, self.lo_open || other.lo_open),
        };
        let (hi, hi_open) = match self.hi.total_cmp(&other.hi) {
            std::cmp::Ordering::Less => (self.hi, self.hi_open),
            std::cmp::Ordering::Greater => (other.hi, other.hi_open),
            std::cmp::Ordering::Equal => (self.hi, self.hi_open || other.hi_open),
        };
        let ok = lo < hi || (lo == hi && !lo_open && !hi_open);
        ok.then_some(Interval {
            lo,
            hi,
            lo_open,
            hi_open,
        })
    }
}

/// A union of intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrSet(pub Vec<Interval>);

impl CrSet {
    pub fn contains(&self, x: f64) -> bool {
        self.0.iter().any(|i| i.contains(x))
    }

    pub fn intersect(&self, other: &Interval) -> CrSet {
        CrSet(self.0.iter().filter_map(|i| i.intersect(other)).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Uniform draw over the union; point sets are picked with equal weight.
    fn sample(&self, rng: &mut StreamRng) -> f64 {
        let total: f64 = self.0.iter().map(Interval::width).sum();
        if total <= 0.0 {
            return self.0[rng.random_range(0..self.0.len())].lo;
        }
        let mut u = rng.random_range(0.0..total);
        for i in &self.0 {
            if u < i.width() {
                return i.lo + u;
            }
            u -= i.width();
        }
        self.0.last().expect("non-empty").hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrBucket {
    VeryLow,
    Low,
    Neutral,
    High,
    VeryHigh,
}

impl CrBucket {
    pub const ALL: [CrBucket; 5] = [
        CrBucket::VeryLow,
        CrBucket::Low,
        CrBucket::Neutral,
        CrBucket::High,
        CrBucket::VeryHigh,
    ];

    /// very_low < 0.2 ≤ low < 0.4 ≤ neutral ≤ 0.6 < high ≤ 0.8 < very_high.
    pub fn of(cr: f64) -> CrBucket {
        if cr < 0.2 {
            CrBucket::VeryLow
        } else if cr < 0.4 {
            CrBucket::Low
        } else if cr <= 0.6 {
            CrBucket::Neutral
        } else if cr <= 0.8 {
            CrBucket::High
        } else {
            CrBucket::VeryHigh
        }
    }

    pub fn interval(self) -> Interval {
        let open = |lo, hi, lo_open, hi_open| Interval {
            lo,
            hi,
            lo_open,
            hi_open,
        };
        match self {
            CrBucket::VeryLow => open(0.0, 0.2, true, true),
            CrBucket::Low => open(0.2, 0.4, false, true),
            CrBucket::Neutral => Interval::closed(0.4, 0.6),
            CrBucket::High => open(0.6, 0.8, true, false),
            CrBucket::VeryHigh => open(0.8, 1.0, true, true),
        }
    }
}

impl fmt::Display for CrBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            CrBucket::VeryLow => "very_low",
            CrBucket::Low => "low",
            CrBucket::Neutral => "neutral",
            CrBucket::High => "high",
            CrBucket::VeryHigh => "very_high",
        })
    }
}

/// Critical-ratio range of a curriculum level.
pub fn level_range(level: u8) -> CrSet {
    let open = |lo, hi, lo_open, hi_open| Interval {
        lo,
        hi,
        lo_open,
        hi_open,
    };
    CrSet(match level {
        1 => vec![Interval::closed(0.4, 0.6)],
        2 => vec![open(0.05, 0.2, false, true), open(0.8, 0.95, true, false)],
        3 => vec![Interval::closed(0.3, 0.7)],
        _ => vec![Interval::closed(0.1, 0.9)],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Split {
    Id,
    Ood,
    Train,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
}

/// True demand parameters of a censored scenario, never shown in its prompt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HiddenDemand {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsvendorScenario {
    pub id: String,
    pub level: u8,
    pub split: Split,
    pub price: f64,
    pub cost: f64,
    pub salvage: f64,
    pub cr: f64,
    pub cr_bucket: CrBucket,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub percentiles: Option<Percentiles>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<HiddenDemand>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub distractors: Vec<String>,
    pub q_opt: f64,
}

impl NewsvendorScenario {
    /// True (μ, σ), whether shown or hidden.
    pub fn demand(&self) -> (f64, f64) {
        match (self.mu, self.sigma, self.hidden) {
            (Some(m), Some(s), _) => (m, s),
            (_, _, Some(h)) => (h.mu, h.sigma),
            _ => unreachable!("scenario carries demand parameters"),
        }
    }
}

/// μ + σ·Φ⁻¹(cr), using the true parameters for censored scenarios.
pub fn optimal_q(sc: &NewsvendorScenario) -> f64 {
    let (mu, sigma) = sc.demand();
    q_star(mu, sigma, sc.cr)
}

pub(crate) fn q_star(mu: f64, sigma: f64, cr: f64) -> f64 {
    mu + sigma * inv_norm_cdf(cr).expect("cr lies strictly inside (0, 1)")
}

/// μ̂ = P50, σ̂ = (P75 − P25) / 1.35.
pub fn infer_params_from_percentiles(p: &Percentiles) -> Result<(f64, f64), BiasError> {
    if !(p.p25 < p.p50 && p.p50 < p.p75) {
        return Err(BiasError::NonMonotonePercentiles);
    }
    Ok((p.p50, (p.p75 - p.p25) / 1.35))
}

fn cents(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

const DISTRACTOR_KINDS: usize = 5;

fn distractor(rng: &mut StreamRng) -> String {
    match rng.random_range(0..DISTRACTOR_KINDS) {
        0 => format!("Storage limit: {} units.", rng.random_range(3..=12) * 100),
        1 => format!(
            "A competitor sells a similar product at ${}.",
            rng.random_range(15..=95)
        ),
        2 => format!(
            "The product expires in {} days.",
            [14, 21, 30, 45, 60][rng.random_range(0..5)]
        ),
        3 => format!("Sales grew {}% last year.", rng.random_range(3..=25)),
        _ => [
            "The holiday season is approaching.",
            "Back-to-school season starts next month.",
            "Summer demand is picking up.",
        ][rng.random_range(0..3)]
        .to_string(),
    }
}

/// One scenario with critical ratio in `crs` at curriculum `level`.
///
/// Prices are in cents, demand parameters are whole units, and the stored
/// critical ratio is recomputed from the rounded prices; draws whose
/// recomputed ratio leaves `crs` are redrawn. σ is capped at μ/4.9 so that
/// negative demand has probability below 1e-6.
pub fn generate_scenario(
    id: impl Into<String>,
    crs: &CrSet,
    level: u8,
    split: Split,
    rng: &mut StreamRng,
) -> NewsvendorScenario {
    assert!(!crs.is_empty(), "critical-ratio set must be non-empty");
    let (price, cost, salvage, cr) = loop {
        let target = crs.sample(rng);
        let p = cents(rng.random_range(10.0..=100.0));
        let s = (rng.random_range(0.0..=0.3 * p) * 100.0).floor() / 100.0;
        let c = cents(p - target * (p - s));
        if !(s < c && c < p) {
            continue;
        }
        let cr = (p - c) / (p - s);
        if crs.contains(cr) && cr > 0.0 && cr < 1.0 {
            break (p, c, s, cr);
        }
    };
    let mu = f64::from(rng.random_range(50u32..=200));
    let sigma_max = (mu / 4.9).floor().min(50.0) as u32;
    let sigma = f64::from(rng.random_range(10..=sigma_max));
    let q_opt = q_star(mu, sigma, cr);
    let mut sc = NewsvendorScenario {
        id: id.into(),
        level,
        split,
        price,
        cost,
        salvage,
        cr,
        cr_bucket: CrBucket::of(cr),
        mu: Some(mu),
        sigma: Some(sigma),
        percentiles: None,
        hidden: None,
        distractors: Vec::new(),
        q_opt,
    };
    match level {
        3 => sc.distractors.push(distractor(rng)),
        4 => {
            let z75 = inv_norm_cdf(0.75).expect("in domain");
            sc.percentiles = Some(Percentiles {
                p25: round2(mu - sigma * z75),
                p50: round2(mu),
                p75: round2(mu + sigma * z75),
            });
            sc.hidden = Some(HiddenDemand { mu, sigma });
            sc.mu = None;
            sc.sigma = None;
        }
        _ => {}
    }
    sc
}

fn money(x: f64) -> String {
    if (x - x.round()).abs() < 1e-9 {
        format!("${:.0}", x)
    } else {
        format!("${x:.2}")
    }
}

/// Prompt text. Censored scenarios show only percentiles; distractors sit
/// between the prices and the demand line. Neither the critical ratio nor the
/// answer is ever shown.
pub fn render_prompt(sc: &NewsvendorScenario) -> String {
    let mut lines = vec![
        "You manage inventory for a single selling season and must choose an order quantity before demand is known.".to_string(),
        format!("Price: {}, Cost: {}, Salvage: {}", money(sc.price), money(sc.cost), money(sc.salvage)),
    ];
    lines.extend(sc.distractors.iter().cloned());
    match (&sc.percentiles, sc.mu, sc.sigma) {
        (Some(p), _, _) => lines.push(format!(
            "Demand percentiles (normal distribution): P25 = {:.2}, P50 = {:.2}, P75 = {:.2}",
            p.p25, p.p50, p.p75
        )),
        (None, Some(mu), Some(sigma)) => {
            lines.push(format!("Mean demand: {mu:.0}, Std: {sigma:.0}"))
        }
        _ => {}
    }
    lines.push("Unsold units are salvaged at the end of the season. How many units should you order? Reply with a single number.".to_string());
    lines.join("\n")
}

/// Evaluation dataset plus its bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasDataset {
    pub meta: DatasetMeta,
    pub scenarios: Vec<NewsvendorScenario>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub schema_version: u32,
    pub seed: u64,
    pub n_id: usize,
    pub n_ood: usize,
    /// Realised (min, max) critical ratio per split.
    pub id_cr_range: Option<(f64, f64)>,
    pub ood_cr_range: Option<(f64, f64)>,
}

fn split_counts(n: usize, parts: usize) -> Vec<usize> {
    (0..parts)
        .map(|i| n / parts + usize::from(i < n % parts))
        .collect()
}

fn level_plan(level: u8, n: usize) -> Vec<(CrSet, usize)> {
    let range = level_range(level);
    let buckets: Vec<CrSet> = CrBucket::ALL
        .iter()
        .map(|b| range.intersect(&b.interval()))
        .filter(|s| !s.is_empty())
        .collect();
    let counts = split_counts(n, buckets.len());
    buckets.into_iter().zip(counts).collect()
}

fn emit(out: &mut Vec<NewsvendorScenario>, seed: u64, split: Split, level: u8, n: usize) {
    let tag = match split {
        Split::Id => "id",
        Split::Ood => "ood",
        Split::Train => "train",
    };
    for (crs, count) in level_plan(level, n) {
        for _ in 0..count {
            let i = out.len();
            let mut rng = stream(seed, &format!("bias-{tag}"), i as u64);
            out.push(generate_scenario(
                format!("nv_{tag}_{i:04}"),
                &crs,
                level,
                split,
                &mut rng,
            ));
        }
    }
}

fn cr_range(scs: &[NewsvendorScenario]) -> Option<(f64, f64)> {
    scs.iter().map(|s| s.cr).fold(None, |acc, cr| match acc {
        None => Some((cr, cr)),
        Some((lo, hi)) => Some((lo.min(cr), hi.max(cr))),
    })
}

/// ID: equal shares of levels 1 to 4. OOD: equal shares of levels 3 and 4.
/// Within a level, scenarios are spread evenly over the CR buckets its range
/// touches.
pub fn build_splits(n_id: usize, n_ood: usize, seed: u64) -> BiasDataset {
    let mut id = Vec::with_capacity(n_id);
    for (level, n) in (1..=4).zip(split_counts(n_id, 4)) {
        emit(&mut id, seed, Split::Id, level, n);
    }
    let mut ood = Vec::with_capacity(n_ood);
    for (level, n) in (3..=4).zip(split_counts(n_ood, 2)) {
        emit(&mut ood, seed, Split::Ood, level, n);
    }
    let meta = DatasetMeta {
        schema_version: 1,
        seed,
        n_id,
        n_ood,
        id_cr_range: cr_range(&id),
        ood_cr_range: cr_range(&ood),
    };
    id.extend(ood);
    BiasDataset {
        meta,
        scenarios: id,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurriculumPreset {
    /// Direction, boundary and full-range stages of 200, 300 and 400 clean
    /// scenarios.
    Stages,
    /// The four curriculum levels, 225 scenarios each.
    Levels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumStage {
    pub name: String,
    pub scenarios: Vec<NewsvendorScenario>,
}

/// Training stages for a preset. Every scenario lands in the TRAIN split.
pub fn build_curriculum(preset: CurriculumPreset, seed: u64) -> Vec<CurriculumStage> {
    let plans: Vec<(&str, CrSet, u8, usize)> = match preset {
        CurriculumPreset::Stages => vec![
            (
                "direction",
                CrSet(vec![Interval::point(0.1), Interval::point(0.9)]),
                1,
                200,
            ),
            (
                "boundary",
                CrSet(vec![
                    Interval::closed(0.15, 0.25),
                    Interval::closed(0.75, 0.85),
                ]),
                1,
                300,
            ),
            ("full", CrSet(vec![Interval::closed(0.2, 0.8)]), 1, 400),
        ],
        CurriculumPreset::Levels => (1..=4)
            .map(|l| {
                (
                    ["l1", "l2", "l3", "l4"][usize::from(l - 1)],
                    level_range(l),
                    l,
                    225,
                )
            })
            .collect(),
    };
    plans
        .into_iter()
        .map(|(name, crs, level, n)| {
            let scenarios = (0..n)
                .map(|i| {
                    let mut rng = stream(seed, &format!("curriculum-{name}"), i as u64);
                    generate_scenario(
                        format!("nv_{name}_{i:04}"),
                        &crs,
                        level,
                        Split::Train,
                        &mut rng,
                    )
                })
                .collect();
            CurriculumStage {
                name: name.to_string(),
                scenarios,
            }
        })
        .collect()
}
