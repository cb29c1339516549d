//! Complexity functions over resource samples.
//!
//! A resource maps input values to natural-number amounts; its complexity
//! function maps input *sizes* to the maximum amount required at that size.
//! This module turns sampled resources into complexity functions, classifies
//! their growth, computes which resources dominate a profile, sums the
//! dominant ones into an overall complexity, and normalizes resources whose
//! value labelling would otherwise inflate their apparent growth.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::str::FromStr;
use std::sync::Arc;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Errors from the resource/complexity operations.
#[derive(Debug, Error, PartialEq)]
pub enum ResourceError {
    #[error("no inputs")]
    NoInputs,
    #[error("insufficient samples: need at least 4 distinct sizes, got {0}")]
    InsufficientSamples(usize),
    #[error("input size must be at least 1")]
    ZeroSize,
    #[error("empty resource profile")]
    EmptyProfile,
    #[error("complexity function `{0}` is not classified")]
    Unclassified(String),
    #[error("resource `{name}` value {value} outside declared attainable set")]
    ValueOutsideAttainable { name: String, value: u64 },
    #[error("resource `{0}` has no declared attainable set")]
    NoAttainableSet(String),
    #[error("attainable set for `{0}` must be strictly ascending")]
    UnsortedAttainable(String),
    #[error("input outside the sampled domain of `{0}`")]
    UnknownInput(String),
    #[error("resource `{0}` produced an infinite amount where a finite one is required")]
    InfiniteAmount(String),
    #[error("mismatched size ranges: {0}")]
    SizeMismatch(String),
    #[error("csv: {0}")]
    Csv(String),
}

/// Bit length of `k`: the number of bits in its binary notation, with the
/// convention that 0 has size 1 so every encoded input has positive size.
pub fn bit_size(k: u64) -> u32 {
    if k == 0 {
        1
    } else {
        u64::BITS - k.leading_zeros()
    }
}

/// A natural-number resource amount, possibly infinite.
///
/// Serializes as a JSON/CSV number when finite and as the string `"inf"`
/// otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Amount {
    Finite(u64),
    Infinite,
}

impl Amount {
    pub fn is_finite(self) -> bool {
        matches!(self, Amount::Finite(_))
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Amount::Finite(v) => Some(v),
            Amount::Infinite => None,
        }
    }

    /// Pointwise sum; saturates on overflow and absorbs into infinity.
    pub fn saturating_add(self, other: Amount) -> Amount {
        match (self, other) {
            (Amount::Finite(a), Amount::Finite(b)) => Amount::Finite(a.saturating_add(b)),
            _ => Amount::Infinite,
        }
    }
}

impl From<u64> for Amount {
    fn from(v: u64) -> Self {
        Amount::Finite(v)
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Amount::Finite(v) => write!(f, "{v}"),
            Amount::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Amount {
    type Err = ResourceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "inf" {
            Ok(Amount::Infinite)
        } else {
            s.parse::<u64>()
                .map(Amount::Finite)
                .map_err(|e| ResourceError::Csv(format!("bad amount `{s}`: {e}")))
        }
    }
}

impl Serialize for Amount {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Amount::Finite(v) => serializer.serialize_u64(*v),
            Amount::Infinite => serializer.serialize_str("inf"),
        }
    }
}

struct AmountVisitor;

impl Visitor<'_> for AmountVisitor {
    type Value = Amount;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a natural number or the string \"inf\"")
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Amount, E> {
        Ok(Amount::Finite(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Amount, E> {
        u64::try_from(v)
            .map(Amount::Finite)
            .map_err(|_| E::custom("negative amount"))
    }

    fn visit_str<E: de::Error>(self, s: &str) -> Result<Amount, E> {
        Amount::from_str(s).map_err(|e| E::custom(e.to_string()))
    }
}

impl<'de> Deserialize<'de> for Amount {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(AmountVisitor)
    }
}

/// One measured data point: an identified input, its size in bits, and the
/// amount of resource it required.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceSample {
    pub input_id: String,
    pub size: u32,
    pub amount: u64,
}

/// Growth class of a complexity function, totally ordered
/// `Constant < Logarithmic < Polynomial(d) < Polynomial(d') < Exponential`
/// for `d < d'`. The derived `Ord` realizes exactly that order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GrowthClass {
    Constant,
    Logarithmic,
    Polynomial(u32),
    Exponential,
}

impl fmt::Display for GrowthClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthClass::Constant => write!(f, "const"),
            GrowthClass::Logarithmic => write!(f, "log"),
            GrowthClass::Polynomial(d) => write!(f, "poly:{d}"),
            GrowthClass::Exponential => write!(f, "exp"),
        }
    }
}

impl FromStr for GrowthClass {
    type Err = ResourceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "const" => Ok(GrowthClass::Constant),
            "log" => Ok(GrowthClass::Logarithmic),
            "exp" => Ok(GrowthClass::Exponential),
            _ => match s.strip_prefix("poly:") {
                Some(d) => d
                    .parse::<u32>()
                    .map(GrowthClass::Polynomial)
                    .map_err(|e| ResourceError::Csv(format!("bad growth tag `{s}`: {e}"))),
                None => Err(ResourceError::Csv(format!("bad growth tag `{s}`"))),
            },
        }
    }
}

/// `f ∈ O(g)` decided at the class level: true iff `f` precedes or equals
/// `g` in the growth-class total order. Reflexive, transitive, total.
pub fn growth_leq(f: GrowthClass, g: GrowthClass) -> bool {
    f <= g
}

type EvalFn<X> = dyn Fn(&X) -> Result<u64, ResourceError> + Send + Sync;

/// A named resource: a deterministic map from input values to natural
/// amounts, with an optional ascending enumeration of the values the
/// resource can attain over its declared domain.
pub struct ResourceFunction<X> {
    name: String,
    eval_fn: Arc<EvalFn<X>>,
    attainable: Option<Arc<[u64]>>,
}

impl<X> Clone for ResourceFunction<X> {
    fn clone(&self) -> Self {
        Self {
            name: self.name.clone(),
            eval_fn: Arc::clone(&self.eval_fn),
            attainable: self.attainable.clone(),
        }
    }
}

impl<X> fmt::Debug for ResourceFunction<X> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ResourceFunction")
            .field("name", &self.name)
            .field("attainable", &self.attainable.as_deref())
            .finish_non_exhaustive()
    }
}

impl<X> ResourceFunction<X> {
    pub fn new(name: impl Into<String>, eval: impl Fn(&X) -> u64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            eval_fn: Arc::new(move |x| Ok(eval(x))),
            attainable: None,
        }
    }

    /// As [`ResourceFunction::new`], additionally declaring the set of
    /// values the resource can attain. The set must be strictly ascending.
    pub fn with_attainable(
        name: impl Into<String>,
        eval: impl Fn(&X) -> u64 + Send + Sync + 'static,
        attainable: Vec<u64>,
    ) -> Result<Self, ResourceError> {
        let name = name.into();
        if attainable.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ResourceError::UnsortedAttainable(name));
        }
        Ok(Self {
            name,
            eval_fn: Arc::new(move |x| Ok(eval(x))),
            attainable: Some(attainable.into()),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn attainable(&self) -> Option<&[u64]> {
        self.attainable.as_deref()
    }

    /// Evaluate the resource at one input. When an attainable set is
    /// declared, the result is checked for membership.
    pub fn eval(&self, x: &X) -> Result<u64, ResourceError> {
        let v = (self.eval_fn)(x)?;
        if let Some(att) = &self.attainable {
            if att.binary_search(&v).is_err() {
                return Err(ResourceError::ValueOutsideAttainable {
                    name: self.name.clone(),
                    value: v,
                });
            }
        }
        Ok(v)
    }
}

/// Rank-based relabeling of a resource onto an initial segment of the
/// naturals: each value is replaced by its 0-based rank within the declared
/// attainable set. The result is order-isomorphic to the original and
/// attains every natural below the set's cardinality, so growth comparisons
/// can no longer be engineered by relabeling amounts.
pub fn normalize<X: 'static>(
    resource: &ResourceFunction<X>,
) -> Result<ResourceFunction<X>, ResourceError> {
    let att = resource
        .attainable
        .clone()
        .ok_or_else(|| ResourceError::NoAttainableSet(resource.name.clone()))?;
    let inner = Arc::clone(&resource.eval_fn);
    let name = resource.name.clone();
    let rank_of = Arc::clone(&att);
    let eval = move |x: &X| {
        let v = inner(x)?;
        match rank_of.binary_search(&v) {
            Ok(rank) => Ok(rank as u64),
            Err(_) => Err(ResourceError::ValueOutsideAttainable {
                name: name.clone(),
                value: v,
            }),
        }
    };
    Ok(ResourceFunction {
        name: format!("norm({})", resource.name),
        eval_fn: Arc::new(eval),
        attainable: Some((0..att.len() as u64).collect()),
    })
}

/// A complexity function: per-size maximum resource amounts plus, when
/// enough size classes are sampled to decide one, a growth class.
///
/// Sizes absent from the map were not sampled; they are reported absent
/// rather than interpolated, since the per-size value is a supremum over an
/// actual input set.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityFunction {
    values: BTreeMap<u32, Amount>,
    growth: Option<GrowthClass>,
}

impl ComplexityFunction {
    /// Build with an explicitly assigned growth class.
    pub fn with_growth(values: BTreeMap<u32, Amount>, growth: GrowthClass) -> Self {
        Self {
            values,
            growth: Some(growth),
        }
    }

    /// Build and classify growth when possible (at least 4 finite size
    /// classes); otherwise the function is left unclassified.
    pub fn from_values(values: BTreeMap<u32, Amount>) -> Self {
        let growth = finite_samples(&values).and_then(|s| classify_growth(&s).ok());
        Self { values, growth }
    }

    pub fn value(&self, size: u32) -> Option<Amount> {
        self.values.get(&size).copied()
    }

    pub fn values(&self) -> &BTreeMap<u32, Amount> {
        &self.values
    }

    pub fn sizes(&self) -> impl Iterator<Item = u32> + '_ {
        self.values.keys().copied()
    }

    pub fn growth(&self) -> Option<GrowthClass> {
        self.growth
    }

    /// Serialize as CSV with header `size,amount,growth`; the growth tag is
    /// repeated on every row. Requires a classified function.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), ResourceError> {
        let growth = self
            .growth
            .ok_or_else(|| ResourceError::Unclassified("<anonymous>".into()))?;
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["size", "amount", "growth"])
            .map_err(|e| ResourceError::Csv(e.to_string()))?;
        for (size, amount) in &self.values {
            w.write_record([size.to_string(), amount.to_string(), growth.to_string()])
                .map_err(|e| ResourceError::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| ResourceError::Csv(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String, ResourceError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| ResourceError::Csv(e.to_string()))
    }

    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self, ResourceError> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r
            .headers()
            .map_err(|e| ResourceError::Csv(e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["size", "amount", "growth"] {
            return Err(ResourceError::Csv(format!(
                "expected header `size,amount,growth`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut values = BTreeMap::new();
        let mut growth: Option<GrowthClass> = None;
        for record in r.records() {
            let record = record.map_err(|e| ResourceError::Csv(e.to_string()))?;
            let size: u32 = record[0]
                .parse()
                .map_err(|e| ResourceError::Csv(format!("bad size `{}`: {e}", &record[0])))?;
            let amount: Amount = record[1].parse()?;
            let tag: GrowthClass = record[2].parse()?;
            match growth {
                None => growth = Some(tag),
                Some(g) if g == tag => {}
                Some(g) => {
                    return Err(ResourceError::Csv(format!(
                        "inconsistent growth tags `{g}` and `{tag}`"
                    )))
                }
            }
            values.insert(size, amount);
        }
        match growth {
            Some(g) => Ok(Self::with_growth(values, g)),
            None => Err(ResourceError::Csv("no data rows".into())),
        }
    }
}

fn finite_samples(values: &BTreeMap<u32, Amount>) -> Option<Vec<(u32, u64)>> {
    values
        .iter()
        .map(|(&s, &a)| a.finite().map(|v| (s, v)))
        .collect()
}

/// Derive the complexity function of a resource over a finite input domain:
/// for every size present, the maximum amount over inputs of that size.
/// Growth is annotated via [`classify_growth`] when at least 4 size classes
/// are present; otherwise the result stays unclassified.
pub fn complexity_of<X>(
    resource: &ResourceFunction<X>,
    sizer: impl Fn(&X) -> u32,
    domain: &[X],
) -> Result<ComplexityFunction, ResourceError> {
    if domain.is_empty() {
        return Err(ResourceError::NoInputs);
    }
    let mut maxima: BTreeMap<u32, u64> = BTreeMap::new();
    for x in domain {
        let size = sizer(x);
        if size == 0 {
            return Err(ResourceError::ZeroSize);
        }
        let amount = resource.eval(x)?;
        maxima
            .entry(size)
            .and_modify(|m| *m = (*m).max(amount))
            .or_insert(amount);
    }
    let samples: Vec<(u32, u64)> = maxima.iter().map(|(&s, &a)| (s, a)).collect();
    let growth = classify_growth(&samples).ok();
    Ok(ComplexityFunction {
        values: maxima.into_iter().map(|(s, a)| (s, a.into())).collect(),
        growth,
    })
}

/// Log-scale transform used both for fitting and for residual comparison:
/// plain log when every amount is positive, shifted by 1 when zeros are
/// present. Comparing all model families on this one scale keeps their
/// residuals commensurable even though they are fitted on different axes.
fn log_transform(shift: f64) -> impl Fn(f64) -> f64 + Copy {
    move |v: f64| (shift + v.max(0.0)).max(1e-12).ln()
}

fn rss_on(points: &[(f64, f64)], t: impl Fn(f64) -> f64, predict: impl Fn(f64) -> f64) -> f64 {
    points
        .iter()
        .map(|&(x, a)| {
            let d = t(a) - t(predict(x));
            d * d
        })
        .sum()
}

/// Simple linear regression returning (intercept, slope).
fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        (my, 0.0)
    } else {
        let slope = sxy / sxx;
        (my - slope * mx, slope)
    }
}

/// Decide the best-fit growth class for per-size samples.
///
/// Candidate models, in class order: constant and logarithmic fitted on the
/// raw axes, a power law with integer degree 1..=6 taken from the slope of a
/// log-log regression, and an exponential fitted linearly on (size, log
/// amount). Residuals are compared on one shared log scale and ties break
/// toward the smaller class. Requires at least 4 distinct sizes.
/// Deterministic.
pub fn classify_growth(samples: &[(u32, u64)]) -> Result<GrowthClass, ResourceError> {
    let mut by_size: BTreeMap<u32, u64> = BTreeMap::new();
    for &(size, amount) in samples {
        if size == 0 {
            return Err(ResourceError::ZeroSize);
        }
        by_size
            .entry(size)
            .and_modify(|m| *m = (*m).max(amount))
            .or_insert(amount);
    }
    if by_size.len() < 4 {
        return Err(ResourceError::InsufficientSamples(by_size.len()));
    }

    let pts: Vec<(f64, f64)> = by_size
        .iter()
        .map(|(&s, &a)| (s as f64, a as f64))
        .collect();
    let shift = if pts.iter().any(|p| p.1 == 0.0) {
        1.0
    } else {
        0.0
    };
    let t = log_transform(shift);
    let logx: Vec<(f64, f64)> = pts.iter().map(|&(x, a)| (x.ln(), a)).collect();
    let loglog: Vec<(f64, f64)> = pts.iter().map(|&(x, a)| (x.ln(), t(a))).collect();
    let semilog: Vec<(f64, f64)> = pts.iter().map(|&(x, a)| (x, t(a))).collect();

    // Constant: mean amount.
    let mean = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let rss_const = rss_on(&pts, t, |_| mean);

    // Logarithmic: a ≈ α + β·ln(size), slope clamped non-negative.
    let (mut alpha, mut beta) = linear_fit(&logx);
    if beta < 0.0 {
        beta = 0.0;
        alpha = mean;
    }
    let rss_logm = rss_on(&pts, t, |x| alpha + beta * x.ln());

    // Polynomial: degree from the log-log slope, rounded into 1..=6.
    let (_, slope) = linear_fit(&loglog);
    let degree = (slope.round() as i64).clamp(1, 6) as u32;
    let lnc = loglog
        .iter()
        .map(|&(u, y)| y - degree as f64 * u)
        .sum::<f64>()
        / loglog.len() as f64;
    let rss_poly = rss_on(&pts, t, |x| (lnc + degree as f64 * x.ln()).exp() - shift);

    // Exponential: log amount linear in size, slope clamped non-negative.
    let (mut c0, mut rate) = linear_fit(&semilog);
    if rate < 0.0 {
        rate = 0.0;
        c0 = semilog.iter().map(|p| p.1).sum::<f64>() / semilog.len() as f64;
    }
    let rss_exp = rss_on(&pts, t, |x| (c0 + rate * x).exp() - shift);

    let candidates = [
        (GrowthClass::Constant, rss_const),
        (GrowthClass::Logarithmic, rss_logm),
        (GrowthClass::Polynomial(degree), rss_poly),
        (GrowthClass::Exponential, rss_exp),
    ];
    let mut best = candidates[0];
    for &c in &candidates[1..] {
        if c.1 < best.1 {
            best = c;
        }
    }
    Ok(best.0)
}

/// The names whose growth class is maximal in the dominance preorder.
/// Ties are jointly dominant, so the result is never empty.
pub fn dominant_resources(
    profiles: &BTreeMap<String, ComplexityFunction>,
) -> Result<BTreeSet<String>, ResourceError> {
    if profiles.is_empty() {
        return Err(ResourceError::EmptyProfile);
    }
    let mut growths = BTreeMap::new();
    for (name, cf) in profiles {
        let g = cf
            .growth()
            .ok_or_else(|| ResourceError::Unclassified(name.clone()))?;
        growths.insert(name.clone(), g);
    }
    let max = *growths.values().max().expect("nonempty");
    Ok(growths
        .into_iter()
        .filter(|&(_, g)| g == max)
        .map(|(n, _)| n)
        .collect())
}

/// Pointwise sum of exactly the dominant resources' complexity functions,
/// re-classified. The dominant functions must share a size range; missing
/// sizes are reported per resource.
pub fn overall_complexity(
    profiles: &BTreeMap<String, ComplexityFunction>,
) -> Result<ComplexityFunction, ResourceError> {
    let dominant = dominant_resources(profiles)?;
    let union: BTreeSet<u32> = dominant
        .iter()
        .flat_map(|name| profiles[name].sizes())
        .collect();
    let mut gaps = Vec::new();
    for name in &dominant {
        let have: BTreeSet<u32> = profiles[name].sizes().collect();
        let missing: Vec<u32> = union.difference(&have).copied().collect();
        if !missing.is_empty() {
            gaps.push(format!("`{name}` missing sizes {missing:?}"));
        }
    }
    if !gaps.is_empty() {
        return Err(ResourceError::SizeMismatch(gaps.join("; ")));
    }
    let mut values: BTreeMap<u32, Amount> = BTreeMap::new();
    for &size in &union {
        let mut total = Amount::Finite(0);
        for name in &dominant {
            total = total.saturating_add(profiles[name].value(size).expect("checked above"));
        }
        values.insert(size, total);
    }
    Ok(ComplexityFunction::from_values(values))
}
