//! Precision as a measured resource.
//!
//! A device accepts its input through error-prone physical parameters and
//! presents its output the same way. An error vector assigns each parameter
//! a tolerance band; the vector is *precise* for an input when every value
//! the perturbed pipeline can yield still interprets to a correct output.
//! The measure of the set of precise error vectors, inverted and floored,
//! is the precision the device demands for that input.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::resource::Amount;

/// Errors from the precision operations.
#[derive(Debug, Error, PartialEq)]
pub enum PrecisionError {
    #[error("error vector length {got} does not match device dimension {want}")]
    DimensionMismatch { want: usize, got: usize },
    #[error("wrong arity: expected {want} values, got {got}")]
    ArityMismatch { want: usize, got: usize },
    #[error("parameter `{0}`: additive error term must be >= 0")]
    NegativeAdditiveError(String),
    #[error("parameter `{0}`: multiplicative error term must be >= 1")]
    SubUnitMultiplicativeError(String),
    #[error("parameter `{name}`: value {value} outside interval [{lo}, {hi}]")]
    OutOfInterval {
        name: String,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("parameter `{0}`: multiplicative error requires a positive value")]
    NonPositiveValue(String),
    #[error("undecidable without enumerator")]
    MissingEnumerator,
    #[error("monte carlo measurement requires a declared error bound")]
    MissingErrorBound,
    #[error("error vector entries must be finite and non-negative")]
    InvalidErrorEntry,
    #[error("device must declare at least one input parameter")]
    NoInputParameters,
    #[error("error bound length {got} does not match device dimension {want}")]
    BadErrorBound { want: usize, got: usize },
}

/// Whether a parameter carries input or output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Input,
    Output,
}

/// How a parameter's implemented/measured value relates to the intended/true
/// one: additive bands `[v - e, v + e]` (e >= 0) or multiplicative bands
/// `[v / e, e * v]` (e >= 1, v > 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorModel {
    Additive,
    Multiplicative,
}

/// One physical parameter: its admissible value interval, error model, and
/// the error term declared for it by the device description.
#[derive(Debug, Clone)]
pub struct ParameterSpec {
    pub name: String,
    pub role: Role,
    pub interval: (f64, f64),
    pub error_model: ErrorModel,
    pub error_term: f64,
}

impl ParameterSpec {
    pub fn additive(
        name: impl Into<String>,
        role: Role,
        interval: (f64, f64),
        error_term: f64,
    ) -> Result<Self, PrecisionError> {
        let spec = Self {
            name: name.into(),
            role,
            interval,
            error_model: ErrorModel::Additive,
            error_term,
        };
        spec.validate_term(error_term)?;
        Ok(spec)
    }

    pub fn multiplicative(
        name: impl Into<String>,
        role: Role,
        interval: (f64, f64),
        error_term: f64,
    ) -> Result<Self, PrecisionError> {
        let spec = Self {
            name: name.into(),
            role,
            interval,
            error_model: ErrorModel::Multiplicative,
            error_term,
        };
        spec.validate_term(error_term)?;
        Ok(spec)
    }

    fn validate_term(&self, eps: f64) -> Result<(), PrecisionError> {
        // NaN terms must fail validation too
        match self.error_model {
            ErrorModel::Additive if eps.is_nan() || eps < 0.0 => {
                Err(PrecisionError::NegativeAdditiveError(self.name.clone()))
            }
            ErrorModel::Multiplicative if eps.is_nan() || eps < 1.0 => Err(
                PrecisionError::SubUnitMultiplicativeError(self.name.clone()),
            ),
            _ => Ok(()),
        }
    }

    fn check_admissible(&self, value: f64) -> Result<(), PrecisionError> {
        if value < self.interval.0 || value > self.interval.1 {
            return Err(PrecisionError::OutOfInterval {
                name: self.name.clone(),
                value,
                lo: self.interval.0,
                hi: self.interval.1,
            });
        }
        Ok(())
    }

    /// The band of values reachable from `value` under error term `eps`.
    fn band(&self, value: f64, eps: f64) -> Result<(f64, f64), PrecisionError> {
        self.validate_term(eps)?;
        match self.error_model {
            ErrorModel::Additive => Ok((value - eps, value + eps)),
            ErrorModel::Multiplicative => {
                if value <= 0.0 {
                    return Err(PrecisionError::NonPositiveValue(self.name.clone()));
                }
                Ok((value / eps, value * eps))
            }
        }
    }

    /// Smallest meaningful error term for this model (the band degenerates
    /// to a point there): 0 for additive, 1 for multiplicative.
    fn error_floor(&self) -> f64 {
        match self.error_model {
            ErrorModel::Additive => 0.0,
            ErrorModel::Multiplicative => 1.0,
        }
    }
}

/// Per-parameter error terms, inputs first then outputs; the device's error
/// is one point in this (p + q)-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorVector(Vec<f64>);

impl ErrorVector {
    pub fn new(entries: Vec<f64>) -> Result<Self, PrecisionError> {
        if entries.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(PrecisionError::InvalidErrorEntry);
        }
        Ok(Self(entries))
    }

    /// The zero vector of the given dimension (exact input and output).
    pub fn zero(dimension: usize) -> Self {
        Self(vec![0.0; dimension])
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn split(&self, p: usize) -> (&[f64], &[f64]) {
        self.0.split_at(p)
    }
}

/// How a perturbed value is selected from its error band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Draw {
    /// No perturbation; the band's center.
    Exact,
    /// The band's upper endpoint.
    WorstCase,
    /// Uniform per coordinate, seeded; the same seed reproduces the draw.
    Random(u64),
}

type ComputeFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type OutputSetFn = dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync;
type InterpretFn = dyn Fn(&[f64]) -> Vec<i64> + Send + Sync;

/// A computer with error-prone input/output parameters.
///
/// `compute` is a deterministic evaluator returning one output tuple;
/// `output_set` enumerates every output tuple the device relates to an input
/// (the computation multifunction), in a stable order; `interpret` maps a
/// measured output tuple onto the integer grid. Corrigibility checking is
/// exact for devices whose compute and interpretation are monotone in each
/// coordinate over the probed bands and whose enumerator keeps a consistent
/// branch structure; otherwise it falls back to a dense sampled verdict.
#[derive(Clone)]
pub struct DeviceModel {
    inputs: Vec<ParameterSpec>,
    outputs: Vec<ParameterSpec>,
    compute: Arc<ComputeFn>,
    output_set: Option<Arc<OutputSetFn>>,
    interpret: Arc<InterpretFn>,
    error_bound: Option<Vec<f64>>,
}

impl fmt::Debug for DeviceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DeviceModel")
            .field("inputs", &self.inputs)
            .field("outputs", &self.outputs)
            .field("has_output_set", &self.output_set.is_some())
            .field("error_bound", &self.error_bound)
            .finish_non_exhaustive()
    }
}

/// `⌊v + 1/2⌋` with saturation for non-finite values.
pub fn round_half_up(v: f64) -> i64 {
    if v.is_nan() {
        return i64::MAX;
    }
    let r = (v + 0.5).floor();
    if r >= i64::MAX as f64 {
        i64::MAX
    } else if r <= i64::MIN as f64 {
        i64::MIN
    } else {
        r as i64
    }
}

pub struct DeviceModelBuilder {
    inputs: Vec<ParameterSpec>,
    outputs: Vec<ParameterSpec>,
    compute: Option<Arc<ComputeFn>>,
    output_set: Option<Arc<OutputSetFn>>,
    interpret: Option<Arc<InterpretFn>>,
    error_bound: Option<Vec<f64>>,
}

impl DeviceModelBuilder {
    pub fn input(mut self, spec: ParameterSpec) -> Self {
        self.inputs.push(spec);
        self
    }

    pub fn output(mut self, spec: ParameterSpec) -> Self {
        self.outputs.push(spec);
        self
    }

    pub fn compute(mut self, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.compute = Some(Arc::new(f));
        self
    }

    pub fn output_set(
        mut self,
        f: impl Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        self.output_set = Some(Arc::new(f));
        self
    }

    pub fn interpret(mut self, f: impl Fn(&[f64]) -> Vec<i64> + Send + Sync + 'static) -> Self {
        self.interpret = Some(Arc::new(f));
        self
    }

    /// Upper error-term bound per coordinate; the box `[floor_i, bound_i]`
    /// brackets threshold searches and is the Monte Carlo sampling domain.
    pub fn error_bound(mut self, bound: Vec<f64>) -> Self {
        self.error_bound = Some(bound);
        self
    }

    pub fn build(self) -> Result<DeviceModel, PrecisionError> {
        if self.inputs.is_empty() {
            return Err(PrecisionError::NoInputParameters);
        }
        let dimension = self.inputs.len() + self.outputs.len();
        if let Some(bound) = &self.error_bound {
            if bound.len() != dimension {
                return Err(PrecisionError::BadErrorBound {
                    want: dimension,
                    got: bound.len(),
                });
            }
        }
        let compute = self
            .compute
            .unwrap_or_else(|| Arc::new(|x: &[f64]| x.to_vec()));
        Ok(DeviceModel {
            inputs: self.inputs,
            outputs: self.outputs,
            compute,
            output_set: self.output_set,
            interpret: self.interpret.unwrap_or_else(|| {
                Arc::new(|y: &[f64]| y.iter().copied().map(round_half_up).collect())
            }),
            error_bound: self.error_bound,
        })
    }
}

impl DeviceModel {
    pub fn builder() -> DeviceModelBuilder {
        DeviceModelBuilder {
            inputs: Vec::new(),
            outputs: Vec::new(),
            compute: None,
            output_set: None,
            interpret: None,
            error_bound: None,
        }
    }

    pub fn input_params(&self) -> &[ParameterSpec] {
        &self.inputs
    }

    pub fn output_params(&self) -> &[ParameterSpec] {
        &self.outputs
    }

    pub fn p(&self) -> usize {
        self.inputs.len()
    }

    pub fn q(&self) -> usize {
        self.outputs.len()
    }

    pub fn dimension(&self) -> usize {
        self.p() + self.q()
    }

    pub fn error_bound(&self) -> Option<&[f64]> {
        self.error_bound.as_deref()
    }

    /// Run the deterministic evaluator.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.compute)(x)
    }

    /// Enumerate all output tuples related to `x`, if an enumerator was
    /// declared.
    pub fn outputs_for(&self, x: &[f64]) -> Option<Vec<Vec<f64>>> {
        self.output_set.as_ref().map(|f| f(x))
    }

    /// Apply the interpretation map to a measured output tuple.
    pub fn interpret(&self, y: &[f64]) -> Vec<i64> {
        (self.interpret)(y)
    }

    fn check_input(&self, x: &[f64]) -> Result<(), PrecisionError> {
        if x.len() != self.p() {
            return Err(PrecisionError::ArityMismatch {
                want: self.p(),
                got: x.len(),
            });
        }
        for (spec, &v) in self.inputs.iter().zip(x) {
            spec.check_admissible(v)?;
        }
        Ok(())
    }
}

/// Pick one value from an error band according to `draw`. Shared by the
/// input and output perturbation operations.
pub(crate) fn draw_in_band(
    spec: &ParameterSpec,
    value: f64,
    eps: f64,
    draw: Draw,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<f64, PrecisionError> {
    let (lo, hi) = spec.band(value, eps)?;
    Ok(match draw {
        Draw::Exact => value,
        Draw::WorstCase => hi,
        Draw::Random(seed) => match rng {
            Some(r) => r.gen_range(lo..=hi),
            None => ChaCha8Rng::seed_from_u64(seed).gen_range(lo..=hi),
        },
    })
}

fn apply_error(
    specs: &[ParameterSpec],
    values: &[f64],
    eps: &[f64],
    draw: Draw,
) -> Result<Vec<f64>, PrecisionError> {
    if values.len() != specs.len() {
        return Err(PrecisionError::ArityMismatch {
            want: specs.len(),
            got: values.len(),
        });
    }
    if eps.len() != specs.len() {
        return Err(PrecisionError::DimensionMismatch {
            want: specs.len(),
            got: eps.len(),
        });
    }
    let mut rng = match draw {
        Draw::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    specs
        .iter()
        .zip(values.iter().zip(eps))
        .map(|(spec, (&v, &e))| draw_in_band(spec, v, e, draw, rng.as_mut()))
        .collect()
}

/// The implemented input value: `intended` perturbed coordinate-wise within
/// the input error bands. `Exact` returns the intended value, `WorstCase` an
/// interval endpoint, `Random(seed)` a uniform draw per coordinate.
pub fn apply_input_error(
    intended: &[f64],
    device: &DeviceModel,
    eps_in: &[f64],
    draw: Draw,
) -> Result<Vec<f64>, PrecisionError> {
    device.check_input(intended)?;
    apply_error(&device.inputs, intended, eps_in, draw)
}

/// The measured output value: symmetric to [`apply_input_error`] over the
/// output parameters.
pub fn apply_output_error(
    true_output: &[f64],
    device: &DeviceModel,
    eps_out: &[f64],
    draw: Draw,
) -> Result<Vec<f64>, PrecisionError> {
    apply_error(&device.outputs, true_output, eps_out, draw)
}

/// Cartesian corner enumeration over per-coordinate bands, plus the center.
fn band_corners(bands: &[(f64, f64)], center: &[f64]) -> Vec<Vec<f64>> {
    let mut corners = vec![center.to_vec()];
    let k = bands.len();
    for mask in 0..(1u32 << k) {
        let corner: Vec<f64> = bands
            .iter()
            .enumerate()
            .map(|(i, &(lo, hi))| if mask >> i & 1 == 0 { lo } else { hi })
            .collect();
        corners.push(corner);
    }
    corners
}

/// Count of integer tuples in the box `[lo_i, hi_i]`, saturating.
fn box_cardinality(lo: &[i64], hi: &[i64]) -> u128 {
    let mut card: u128 = 1;
    for (&l, &h) in lo.iter().zip(hi) {
        let side = (h as i128 - l as i128 + 1).max(0) as u128;
        card = card.saturating_mul(side);
    }
    card
}

fn box_subset_of(correct: &BTreeSet<Vec<i64>>, lo: &[i64], hi: &[i64]) -> bool {
    if box_cardinality(lo, hi) > correct.len() as u128 {
        return false;
    }
    let mut cursor: Vec<i64> = lo.to_vec();
    loop {
        if !correct.contains(&cursor) {
            return false;
        }
        // advance odometer-style
        let mut i = 0;
        loop {
            if i == cursor.len() {
                return true;
            }
            if cursor[i] < hi[i] {
                cursor[i] += 1;
                break;
            }
            cursor[i] = lo[i];
            i += 1;
        }
    }
}

/// Extend true-output extremes by the measured-value bands and check the
/// resulting interpreted integer box against the correct set.
fn branch_ok(
    device: &DeviceModel,
    correct: &BTreeSet<Vec<i64>>,
    y_lo: &[f64],
    y_hi: &[f64],
    eps_out: &[f64],
) -> Result<bool, PrecisionError> {
    let mut m_lo = y_lo.to_vec();
    let mut m_hi = y_hi.to_vec();
    for (i, spec) in device.outputs.iter().enumerate() {
        let (lo, _) = spec.band(y_lo[i], eps_out[i])?;
        let (_, hi) = spec.band(y_hi[i], eps_out[i])?;
        m_lo[i] = lo;
        m_hi[i] = hi;
    }
    let z_a = device.interpret(&m_lo);
    let z_b = device.interpret(&m_hi);
    let z_lo: Vec<i64> = z_a.iter().zip(&z_b).map(|(&a, &b)| a.min(b)).collect();
    let z_hi: Vec<i64> = z_a.iter().zip(&z_b).map(|(&a, &b)| a.max(b)).collect();
    Ok(box_subset_of(correct, &z_lo, &z_hi))
}

const SAMPLED_GRID: usize = 257;

/// Does the error vector stay corrigible for input `x`? True iff every
/// interpreted output reachable through the perturbed chain
/// intended -> implemented -> computed -> measured -> interpreted is a
/// correct output of the exact device.
///
/// Decided by worst-case checking over band endpoints: per-coordinate
/// extremes bound the reachable true outputs, the rounding breakpoints in
/// between are covered by enumerating the interpreted integer box. When the
/// enumerator's branch structure shifts across the band (the corrected
/// integer changes, say) the check degrades to a dense sampled verdict over
/// a fixed input grid.
pub fn is_precise_for(
    eps: &ErrorVector,
    x: &[f64],
    device: &DeviceModel,
) -> Result<bool, PrecisionError> {
    let (p, q) = (device.p(), device.q());
    if eps.len() != p + q {
        return Err(PrecisionError::DimensionMismatch {
            want: p + q,
            got: eps.len(),
        });
    }
    device.check_input(x)?;
    let enumerate = device
        .output_set
        .as_ref()
        .ok_or(PrecisionError::MissingEnumerator)?;
    let (eps_in, eps_out) = eps.split(p);
    for (spec, &e) in device.inputs.iter().zip(eps_in) {
        spec.validate_term(e)?;
    }
    for (spec, &e) in device.outputs.iter().zip(eps_out) {
        spec.validate_term(e)?;
    }

    let correct: BTreeSet<Vec<i64>> = enumerate(x).iter().map(|y| device.interpret(y)).collect();

    let bands: Vec<(f64, f64)> = device
        .inputs
        .iter()
        .zip(x.iter().zip(eps_in))
        .map(|(spec, (&v, &e))| spec.band(v, e))
        .collect::<Result<_, _>>()?;
    let corners = band_corners(&bands, x);
    let corner_branches: Vec<Vec<Vec<f64>>> = corners.iter().map(|c| enumerate(c)).collect();

    let branch_count = corner_branches[0].len();
    let aligned = corner_branches.iter().all(|b| b.len() == branch_count);

    if aligned {
        for j in 0..branch_count {
            let width = corner_branches[0][j].len();
            let mut y_lo = vec![f64::INFINITY; width];
            let mut y_hi = vec![f64::NEG_INFINITY; width];
            for branches in &corner_branches {
                for (i, &v) in branches[j].iter().enumerate() {
                    y_lo[i] = y_lo[i].min(v);
                    y_hi[i] = y_hi[i].max(v);
                }
            }
            if !branch_ok(device, &correct, &y_lo, &y_hi, eps_out)? {
                return Ok(false);
            }
        }
        return Ok(true);
    }

    // Sampled verdict: dense grid over the input bands.
    let per_dim = if p == 1 {
        SAMPLED_GRID
    } else {
        // keep the cartesian grid bounded
        ((65_536f64).powf(1.0 / p as f64).floor() as usize).clamp(3, SAMPLED_GRID)
    };
    let mut grid_points = vec![vec![]];
    for &(lo, hi) in &bands {
        let mut next = Vec::with_capacity(grid_points.len() * per_dim);
        for point in &grid_points {
            for k in 0..per_dim {
                let t = k as f64 / (per_dim - 1) as f64;
                let mut extended: Vec<f64> = point.clone();
                extended.push(lo + t * (hi - lo));
                next.push(extended);
            }
        }
        grid_points = next;
    }
    for point in &grid_points {
        for branch in enumerate(point) {
            if !branch_ok(device, &correct, &branch, &branch, eps_out)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// How the corrigible-region measure is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureMode {
    /// Per-coordinate threshold intervals (the region is treated as a
    /// coordinate box); thresholds located by monotone bisection.
    Analytic,
    /// Hit fraction over the declared bounding box, with per-sample
    /// substreams derived from the seed by fixed indexing.
    MonteCarlo { samples: u32, seed: u64 },
}

fn serialize_measure<S: Serializer>(v: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() {
        serializer.serialize_str("inf")
    } else {
        serializer.serialize_f64(*v)
    }
}

/// The set of error vectors precise for one input, summarized by its
/// Lebesgue measure. Carries the device and input so membership stays
/// queryable.
#[derive(Clone, Serialize)]
pub struct PreciseErrorRegion {
    pub dimension: usize,
    #[serde(serialize_with = "serialize_measure")]
    pub measure: f64,
    #[serde(rename = "mode")]
    mode_tag: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_stderr: Option<f64>,
    #[serde(skip)]
    pub unbounded_warning: bool,
    #[serde(skip)]
    device: Option<DeviceModel>,
    #[serde(skip)]
    input: Vec<f64>,
}

impl fmt::Debug for PreciseErrorRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PreciseErrorRegion")
            .field("dimension", &self.dimension)
            .field("measure", &self.measure)
            .field("mode", &self.mode_tag)
            .field("mc_samples", &self.mc_samples)
            .field("mc_stderr", &self.mc_stderr)
            .field("unbounded_warning", &self.unbounded_warning)
            .finish()
    }
}

impl PreciseErrorRegion {
    /// Membership predicate: is `eps` precise for the region's input?
    pub fn contains(&self, eps: &ErrorVector) -> Result<bool, PrecisionError> {
        let device = self
            .device
            .as_ref()
            .ok_or(PrecisionError::MissingEnumerator)?;
        is_precise_for(eps, &self.input, device)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("region serializes")
    }
}

/// Derived substream seed for sample `index`; splitmix64 so partitioning
/// work across workers by index reproduces the sequential result.
pub(crate) fn substream_seed(root: u64, index: u64) -> u64 {
    let mut z = root.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const PROBE_CAP: f64 = 1e9;
const BISECT_ITERS: u32 = 200;

/// Largest corrigible error term along one coordinate, others held at their
/// floors. Returns the threshold and whether the probe ran off unbounded.
fn coordinate_threshold(
    device: &DeviceModel,
    x: &[f64],
    coord: usize,
    floor: f64,
    declared: Option<f64>,
) -> Result<(f64, bool), PrecisionError> {
    let dim = device.dimension();
    let floors: Vec<f64> = device
        .inputs
        .iter()
        .chain(device.outputs.iter())
        .map(|s| s.error_floor())
        .collect();
    let probe = |t: f64| -> Result<bool, PrecisionError> {
        let mut entries = floors.clone();
        entries[coord] = t;
        let eps = ErrorVector(entries);
        debug_assert_eq!(eps.len(), dim);
        is_precise_for(&eps, x, device)
    };

    if !probe(floor)? {
        return Ok((floor, false));
    }
    let mut hi = match declared {
        Some(bound) => {
            if probe(bound)? {
                // corrigible across the whole declared box on this axis
                return Ok((bound, false));
            }
            bound
        }
        None => {
            let mut guess = if floor == 0.0 { 1.0 } else { floor * 2.0 };
            loop {
                if !probe(guess)? {
                    break guess;
                }
                guess *= 2.0;
                if guess > PROBE_CAP {
                    return Ok((f64::INFINITY, true));
                }
            }
        }
    };
    let mut lo = floor;
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if probe(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi), false))
}

/// Measure the set of error vectors precise for `x`.
///
/// Analytic mode treats the region as a coordinate box: each coordinate's
/// corrigible interval is found by bisection (exploiting downward closure)
/// and the measure is the product of interval lengths. Monte Carlo mode
/// samples the declared bounding box uniformly and reports hit fraction
/// times box volume along with the binomial standard error. A coordinate
/// that never becomes incorrigible without a declared bound yields an
/// infinite measure with a warning flag.
pub fn precise_error_measure(
    x: &[f64],
    device: &DeviceModel,
    mode: MeasureMode,
) -> Result<PreciseErrorRegion, PrecisionError> {
    device.check_input(x)?;
    if device.output_set.is_none() {
        return Err(PrecisionError::MissingEnumerator);
    }
    let dim = device.dimension();
    let floors: Vec<f64> = device
        .inputs
        .iter()
        .chain(device.outputs.iter())
        .map(|s| s.error_floor())
        .collect();

    match mode {
        MeasureMode::Analytic => {
            let mut measure = 1.0;
            let mut unbounded = false;
            for coord in 0..dim {
                let declared = device.error_bound.as_ref().map(|b| b[coord]);
                let (threshold, ran_off) =
                    coordinate_threshold(device, x, coord, floors[coord], declared)?;
                unbounded |= ran_off;
                measure *= threshold - floors[coord];
            }
            Ok(PreciseErrorRegion {
                dimension: dim,
                measure,
                mode_tag: "analytic",
                mc_samples: None,
                mc_stderr: None,
                unbounded_warning: unbounded,
                device: Some(device.clone()),
                input: x.to_vec(),
            })
        }
        MeasureMode::MonteCarlo { samples, seed } => {
            let bound = device
                .error_bound
                .clone()
                .ok_or(PrecisionError::MissingErrorBound)?;
            let volume: f64 = bound
                .iter()
                .zip(&floors)
                .map(|(&b, &f)| (b - f).max(0.0))
                .product();
            let mut hits: u64 = 0;
            for i in 0..samples {
                let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, i as u64));
                let entries: Vec<f64> = bound
                    .iter()
                    .zip(&floors)
                    .map(|(&b, &f)| rng.gen_range(f..=b.max(f)))
                    .collect();
                if is_precise_for(&ErrorVector(entries), x, device)? {
                    hits += 1;
                }
            }
            let fraction = hits as f64 / samples as f64;
            let stderr = volume * (fraction * (1.0 - fraction) / samples as f64).sqrt();
            Ok(PreciseErrorRegion {
                dimension: dim,
                measure: fraction * volume,
                mode_tag: "mc",
                mc_samples: Some(samples),
                mc_stderr: Some(stderr),
                unbounded_warning: false,
                device: Some(device.clone()),
                input: x.to_vec(),
            })
        }
    }
}

/// The precision demanded by the device for input `x`: the floored
/// reciprocal of the corrigible-region measure, with `1/0 = ∞` and
/// `1/∞ = 0`.
pub fn precision(
    x: &[f64],
    device: &DeviceModel,
    mode: MeasureMode,
) -> Result<Amount, PrecisionError> {
    let region = precise_error_measure(x, device, mode)?;
    Ok(precision_of_measure(region.measure))
}

/// `⌊1/V⌋` as an [`Amount`]; saturates at `u64::MAX` for measures too small
/// to invert in 64 bits.
pub fn precision_of_measure(measure: f64) -> Amount {
    if measure == 0.0 {
        Amount::Infinite
    } else if measure.is_infinite() {
        Amount::Finite(0)
    } else {
        let inv = (1.0 / measure).floor();
        if inv >= u64::MAX as f64 {
            Amount::Finite(u64::MAX)
        } else {
            Amount::Finite(inv as u64)
        }
    }
}
