//! Numerical simulation of an analogue factorization device.
//!
//! Factoring an odd n is recast geometrically: integer points on the
//! hyperbola xy = n carry its factors, and the device realizes the integer
//! grid as the maxima of a standing-wave field while a cone projects the
//! hyperbola onto a sensor arc. A factor candidate shows up as a minimally
//! lit arc coordinate c, from which the factor is sqrt(nc/(2-c)).
//!
//! The pipeline simulated here follows the device's five steps: digital
//! preprocessing (2/n and sqrt(2/n)), imprecise wavelength input with
//! round-to-nearest error correction, the interference profile, imprecise
//! sensor readout, and digital interpretation of the readings. Time and
//! space stay constant-to-quadratic while the corrigible wavelength band
//! shrinks as 1/(n(n+1/2)), so precision dominates the resource profile.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::precision::{
    self, round_half_up, DeviceModel, Draw, ErrorVector, MeasureMode, ParameterSpec,
    PrecisionError, Role,
};
use crate::resource::{
    bit_size, complexity_of, Amount, ComplexityFunction, ResourceError, ResourceFunction,
};

/// Errors from the device simulation.
#[derive(Debug, Error, PartialEq)]
pub enum FactorizerError {
    #[error("grid defined for odd n")]
    EvenN,
    #[error("n < 2")]
    TooSmall,
    #[error("n must be an odd natural >= 3")]
    BelowDeviceMinimum,
    #[error("point outside region 0 <= x <= y <= 1")]
    OutsideRegion,
    #[error("factor candidate must be >= 1")]
    ZeroFactor,
    #[error("beyond arc constraint 2 - x >= 1")]
    BeyondArc,
    #[error("sensor coordinate must lie in (0, 1]")]
    InvalidReading,
    #[error("bisection tolerance must be positive")]
    NonPositiveTolerance,
    #[error("device error vector carries (lambda, c): expected 2 entries, got {0}")]
    WrongErrorArity(usize),
    #[error(transparent)]
    Precision(#[from] PrecisionError),
    #[error(transparent)]
    Resource(#[from] ResourceError),
}

/// Abstract space units of the bounding cuboid [0,2] x [0,2] x [-√2, 2√2]
/// that contains the apparatus for every n, rounded up to a natural number.
pub const SPACE_UNITS: u64 = 17;

/// One abstract time unit charged for wave propagation across the cuboid,
/// independent of n.
pub const ANALOGUE_TIME_UNITS: u64 = 1;

/// Bit-operation constant k in the digital cost k * |n|^2.
pub const DIGITAL_COST_PER_SQUARED_BIT: u64 = 4;

/// Geometric constants of the device for a given odd n. Abstract
/// coordinates (the grid, the hyperbola) scale into apparatus coordinates
/// by 1/n.
#[derive(Debug, Clone, Serialize)]
pub struct DeviceGeometry {
    pub n: u64,
    /// Wave source for the grid pattern, at (1, 1, 0).
    pub source_position: [f64; 3],
    /// Wavelength of the grid source: 2/n.
    pub wavelength: f64,
    /// Height of the cone vertex and of the sensor-arc circle center:
    /// sqrt(2/n), the abstract axis height sqrt(2n) carried through the
    /// 1/n scaling.
    pub vertex_height: f64,
}

impl DeviceGeometry {
    pub fn new(n: u64) -> Result<Self, FactorizerError> {
        if n.is_multiple_of(2) {
            return Err(FactorizerError::EvenN);
        }
        if n < 3 {
            return Err(FactorizerError::BelowDeviceMinimum);
        }
        let nf = n as f64;
        Ok(Self {
            n,
            source_position: [1.0, 1.0, 0.0],
            wavelength: 2.0 / nf,
            vertex_height: (2.0 / nf).sqrt(),
        })
    }

    /// Map an abstract point to apparatus coordinates (scaling 1/n).
    pub fn scale_to_device(&self, point: [f64; 3]) -> [f64; 3] {
        let nf = self.n as f64;
        [point[0] / nf, point[1] / nf, point[2] / nf]
    }

    /// Mirror M1, the parabola y = -x^2/2 + x + 1 over 0 <= x <= 1.
    /// Documentary geometry; the field itself is the surrogate below.
    pub fn mirror_m1(x: f64) -> f64 {
        -x * x / 2.0 + x + 1.0
    }

    /// Mirror M2, the diagonal y = x over 0 <= x <= 1.
    pub fn mirror_m2(x: f64) -> f64 {
        x
    }

    /// Mirror M3 lies in the plane x = 0.
    pub const MIRROR_M3_X: f64 = 0.0;
}

/// The grid G_n: integer pairs (a, b) with 0 <= a <= b <= n and a, b of the
/// same parity. Its cardinality is (n^2 + 4n + 3)/4.
pub fn grid_points(n: u64) -> Result<Vec<(u64, u64)>, FactorizerError> {
    if n.is_multiple_of(2) {
        return Err(FactorizerError::EvenN);
    }
    let mut points = Vec::with_capacity(grid_cardinality(n) as usize);
    for a in 0..=n {
        for b in a..=n {
            if (b - a) % 2 == 0 {
                points.push((a, b));
            }
        }
    }
    Ok(points)
}

/// Closed form for |grid_points(n)|. The division is exact for odd n.
#[allow(clippy::manual_div_ceil)]
pub fn grid_cardinality(n: u64) -> u64 {
    (n * n + 4 * n + 3) / 4
}

/// Surrogate standing-wave field over the unit triangle 0 <= x <= y <= 1:
/// W(x, y) = |cos(pi n x) + cos(pi n y)|.
///
/// W = 2 exactly when nx and ny are integers of the same parity — the
/// field's maxima are precisely the scaled grid points, which is the
/// property the simulation rests on.
pub fn wave_activity(x: f64, y: f64, n: u64) -> Result<f64, FactorizerError> {
    if !(0.0..=1.0).contains(&x) || !(x..=1.0).contains(&y) {
        return Err(FactorizerError::OutsideRegion);
    }
    let nf = n as f64;
    Ok(((PI * nf * x).cos() + (PI * nf * y).cos()).abs())
}

/// Arc coordinate where the ray from the cone vertex through the surface
/// point of divisor candidate `a` meets the sensor plane x + y = 2:
/// c = 2a^2/(n + a^2). Requires 1 <= a <= sqrt(n) (the arc ends at c = 1).
pub fn sensor_coord_for_factor(a: u64, n: u64) -> Result<f64, FactorizerError> {
    if a == 0 {
        return Err(FactorizerError::ZeroFactor);
    }
    if a * a > n {
        return Err(FactorizerError::BeyondArc);
    }
    let (af, nf) = (a as f64, n as f64);
    Ok(2.0 * af * af / (nf + af * af))
}

/// Height (z) of the sensor point with coordinate c, from the ray through
/// the vertex at height sqrt(2/n); satisfies the arc equation
/// 2(c - 1)^2 + (z - sqrt(2/n))^2 = 2.
pub fn arc_height(c: f64, n: u64) -> Result<f64, FactorizerError> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(FactorizerError::InvalidReading);
    }
    let nf = n as f64;
    let h = (2.0 / nf).sqrt();
    let a = (nf * c / (2.0 - c)).sqrt();
    let t = 2.0 * a * nf / (a * a + nf);
    Ok((1.0 - t) * h)
}

/// Interpret a sensor reading: round-to-nearest of sqrt(nc/(2 - c)).
pub fn factor_from_reading(c: f64, n: u64) -> Result<u64, FactorizerError> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(FactorizerError::InvalidReading);
    }
    let nf = n as f64;
    let value = (nf * c / (2.0 - c)).sqrt();
    Ok(round_half_up(value).max(0) as u64)
}

/// A sensor sample: arc coordinate and cycle-summed normalized brightness.
/// Brightness is 1 - W/2 for the field activity W at the surface point the
/// reading projects from, so it vanishes exactly at divisor coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub c: f64,
    pub brightness: f64,
}

/// Output of [`sensor_intensity_profile`].
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityProfile {
    pub readings: Vec<SensorReading>,
    /// Set when a scan's resolution is below 2n samples: the dark minima
    /// are narrower than the grid spacing and may be missed.
    pub aliasing_risk: bool,
}

/// How the sensor is read out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileMode {
    /// One zero-brightness reading per divisor a <= sqrt(n).
    Analytic,
    /// Uniform samples of c over (0, 1].
    Scan { resolution: u32 },
}

/// Divisors a <= sqrt(m) of m whose cofactor has a's parity; those are the
/// factor pairs realizable on the same-parity grid. For odd m this is every
/// divisor up to sqrt(m).
fn analytic_minima(m: u64) -> Vec<u64> {
    let mut minima = Vec::new();
    let mut a = 1;
    while a * a <= m {
        if m.is_multiple_of(a) && (m / a - a).is_multiple_of(2) {
            minima.push(a);
        }
        a += 1;
    }
    minima
}

/// Minima the apparatus built for `n` can actually resolve when its
/// wavelength encodes `m`. Patterns more than a fixed multiple finer than
/// the design modulus are below the sensor's resolving scale and read as
/// featureless, so no minima are reported for them.
fn realizable_minima(m: u64, n: u64) -> Vec<u64> {
    let cap = 16u64.saturating_mul(n).saturating_mul(n).max(1 << 10);
    if m == 0 || m > cap {
        return Vec::new();
    }
    analytic_minima(m)
}

/// Brightness of the reading at arc coordinate c for modulus m, evaluated
/// along the full surface curve xy = m.
fn brightness_at(c: f64, m: u64) -> f64 {
    let mf = m as f64;
    let a = (mf * c / (2.0 - c)).sqrt();
    let activity = ((PI * a).cos() + (PI * mf / a).cos()).abs();
    1.0 - activity / 2.0
}

/// The interference profile along the sensor arc for odd n >= 3.
pub fn sensor_intensity_profile(
    n: u64,
    mode: ProfileMode,
) -> Result<IntensityProfile, FactorizerError> {
    if n.is_multiple_of(2) {
        return Err(FactorizerError::EvenN);
    }
    if n < 3 {
        return Err(FactorizerError::BelowDeviceMinimum);
    }
    match mode {
        ProfileMode::Analytic => {
            let readings = analytic_minima(n)
                .into_iter()
                .map(|a| {
                    sensor_coord_for_factor(a, n).map(|c| SensorReading { c, brightness: 0.0 })
                })
                .collect::<Result<_, _>>()?;
            Ok(IntensityProfile {
                readings,
                aliasing_risk: false,
            })
        }
        ProfileMode::Scan { resolution } => {
            let readings = (1..=resolution)
                .map(|i| {
                    let c = i as f64 / resolution as f64;
                    SensorReading {
                        c,
                        brightness: brightness_at(c, n),
                    }
                })
                .collect();
            Ok(IntensityProfile {
                readings,
                aliasing_risk: (resolution as u64) < 2 * n,
            })
        }
    }
}

/// Local minima darker than 0.5 in a scanned profile; plateau runs report
/// their first sample.
pub fn detect_minima(readings: &[SensorReading]) -> Vec<SensorReading> {
    let mut minima = Vec::new();
    for (i, r) in readings.iter().enumerate() {
        if r.brightness >= 0.5 {
            continue;
        }
        let left_ok = i == 0 || readings[i - 1].brightness > r.brightness;
        let right_ok = i + 1 == readings.len() || readings[i + 1].brightness >= r.brightness;
        if left_ok && right_ok {
            minima.push(*r);
        }
    }
    minima
}

/// The digital preprocessing step: both analogue input settings, carried to
/// f64 (far more than the |n| + 2 fractional bits needed to recover n at
/// this scale), plus the bit-operation charge k * |n|^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DigitalPre {
    pub two_over_n: f64,
    pub root_two_over_n: f64,
    pub bit_ops: u64,
}

/// Compute 2/n and sqrt(2/n) and charge the quadratic digital cost.
/// Total for every n >= 1.
pub fn digital_pre(n: u64) -> DigitalPre {
    let bits = bit_size(n) as u64;
    DigitalPre {
        two_over_n: 2.0 / n as f64,
        root_two_over_n: (2.0 / n as f64).sqrt(),
        bit_ops: DIGITAL_COST_PER_SQUARED_BIT * bits * bits,
    }
}

/// The wavelength-only device abstraction for n: one additive input
/// parameter lambda, the corrected integer 2/lambda' as interpreted output.
/// This is the device the precision analysis runs on.
pub fn lambda_device(n: u64) -> DeviceModel {
    DeviceModel::builder()
        .input(
            ParameterSpec::additive("lambda", Role::Input, (f64::MIN_POSITIVE, 2.0), 0.0)
                .expect("valid spec"),
        )
        .compute(|x| vec![2.0 / x[0]])
        .output_set(|x| vec![vec![2.0 / x[0]]])
        .error_bound(vec![2.0 / n as f64])
        .build()
        .expect("valid device")
}

/// The two-parameter device for n: wavelength in, sensor coordinate out.
/// The enumerator lists one branch per realizable divisor of the corrected
/// integer; interpretation applies the step-5 factor computation for n.
pub fn full_device(n: u64) -> DeviceModel {
    let nf = n as f64;
    let branches = move |x: &[f64]| -> Vec<Vec<f64>> {
        let m = round_half_up(2.0 / x[0]).max(0) as u64;
        realizable_minima(m, n)
            .into_iter()
            .map(|a| {
                let (af, mf) = (a as f64, m as f64);
                vec![2.0 * af * af / (mf + af * af)]
            })
            .collect()
    };
    let primary = move |x: &[f64]| -> Vec<f64> { branches(x).pop().unwrap_or(vec![f64::NAN]) };
    DeviceModel::builder()
        .input(
            ParameterSpec::additive("lambda", Role::Input, (f64::MIN_POSITIVE, 2.0), 0.0)
                .expect("valid spec"),
        )
        .output(
            ParameterSpec::additive("c", Role::Output, (f64::MIN_POSITIVE, 1.0), 0.0)
                .expect("valid spec"),
        )
        .compute(primary)
        .output_set(branches)
        .interpret(move |y| vec![round_half_up((nf * y[0] / (2.0 - y[0])).sqrt())])
        .error_bound(vec![2.0 / nf, 1.0])
        .build()
        .expect("valid device")
}

/// Largest additive reading error under which divisor `a`'s coordinate
/// still interprets to `a`: the sensor-side analogue of the wavelength
/// threshold, reported separately from the run tallies. Readings beyond
/// c = 1 do not exist, so slack past the arc end is unbounded.
pub fn reading_tolerance(n: u64, a: u64) -> Result<f64, FactorizerError> {
    let c = sensor_coord_for_factor(a, n)?;
    let nf = n as f64;
    let breakpoint = |t: f64| 2.0 * t * t / (nf + t * t);
    let lower = c - breakpoint(a as f64 - 0.5);
    let upper_bp = breakpoint(a as f64 + 0.5);
    let upper = if upper_bp > 1.0 {
        f64::INFINITY
    } else {
        upper_bp - c
    };
    Ok(lower.min(upper))
}

/// How the corrigible wavelength threshold is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMethod {
    /// The closed form 1/(n(n + 1/2)).
    Analytic,
    /// Bisection of the largest corrigible error on the wavelength-only
    /// device, to absolute tolerance `tol`.
    Bisection { tol: f64 },
}

/// Largest additive wavelength error the error correction absorbs for odd
/// n >= 3. Both methods agree within the bisection tolerance.
pub fn corrigible_epsilon_threshold(
    n: u64,
    method: ThresholdMethod,
) -> Result<f64, FactorizerError> {
    if n.is_multiple_of(2) {
        return Err(FactorizerError::EvenN);
    }
    if n < 3 {
        return Err(FactorizerError::BelowDeviceMinimum);
    }
    let nf = n as f64;
    match method {
        ThresholdMethod::Analytic => Ok(1.0 / (nf * (nf + 0.5))),
        ThresholdMethod::Bisection { tol } => {
            if tol.is_nan() || tol <= 0.0 {
                return Err(FactorizerError::NonPositiveTolerance);
            }
            let device = lambda_device(n);
            let x = [2.0 / nf];
            let mut lo = 0.0;
            let mut hi = 2.0 / nf;
            debug_assert!(!precision::is_precise_for(
                &ErrorVector::new(vec![hi]).unwrap(),
                &x,
                &device
            )?);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if precision::is_precise_for(&ErrorVector::new(vec![mid]).unwrap(), &x, &device)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        }
    }
}

/// One factor candidate read off the sensor, with its trial-division
/// verification against the odd part of the requested number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub factor: u64,
    pub verified: bool,
}

/// Per-run resource tallies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceTally {
    pub time: u64,
    pub space: u64,
    pub precision: Amount,
}

/// Everything one device run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationOutcome {
    pub requested_n: u64,
    pub halvings: u32,
    pub corrected_m: u64,
    pub candidates: Vec<Candidate>,
    pub resources: ResourceTally,
    /// Set when no candidate verified: the run most likely corrected the
    /// wavelength to the wrong integer.
    pub suspect_miscorrection: bool,
}

impl FactorizationOutcome {
    /// The candidate the run reports: the smallest verified factor above 1
    /// when one exists, otherwise the smallest verified candidate.
    pub fn reported(&self) -> Option<&Candidate> {
        self.candidates
            .iter()
            .filter(|c| c.verified && c.factor > 1)
            .min_by_key(|c| c.factor)
            .or_else(|| {
                self.candidates
                    .iter()
                    .filter(|c| c.verified)
                    .min_by_key(|c| c.factor)
            })
    }

    /// A verified factor strictly between 1 and the odd part, if any.
    pub fn nontrivial_factor(&self) -> Option<u64> {
        self.candidates
            .iter()
            .filter(|c| c.verified && c.factor > 1)
            .map(|c| c.factor)
            .min()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("outcome serializes")
    }
}

fn derived_draw(draw: Draw, index: u64) -> Draw {
    match draw {
        Draw::Random(seed) => Draw::Random(precision::substream_seed(seed, index)),
        other => other,
    }
}

/// Run the device once for any n >= 2.
///
/// Factors of two are stripped first (counted as halvings); the digital
/// step computes the analogue settings for the odd part; the wavelength is
/// perturbed per the first error entry and corrected to the nearest integer
/// m = ⌊2/λ' + 1/2⌋; the analytic profile of m supplies the minima, each
/// reading is perturbed per the second entry and interpreted; candidates
/// are verified by trial division of the odd part. Time is the analogue
/// constant plus the digital bit operations, space the constant cuboid
/// volume, precision the wavelength-only analytic value for the odd part.
pub fn run_device(
    n: u64,
    eps: &ErrorVector,
    draw: Draw,
) -> Result<FactorizationOutcome, FactorizerError> {
    if n < 2 {
        return Err(FactorizerError::TooSmall);
    }
    if eps.len() != 2 {
        return Err(FactorizerError::WrongErrorArity(eps.len()));
    }
    let halvings = n.trailing_zeros();
    let odd = n >> halvings;

    let pre = digital_pre(odd);
    let device = lambda_device(odd);

    let implemented = precision::apply_input_error(
        &[pre.two_over_n],
        &device,
        &eps.entries()[..1],
        derived_draw(draw, 0),
    )?;
    let nu = 2.0 / implemented[0];
    let corrected_m = round_half_up(nu).max(0) as u64;

    let reading_spec = ParameterSpec::additive("c", Role::Output, (f64::MIN_POSITIVE, 1.0), 0.0)
        .expect("valid spec");
    let eps_c = eps.entries()[1];

    let mut candidates: Vec<Candidate> = Vec::new();
    for (i, a) in realizable_minima(corrected_m, odd).into_iter().enumerate() {
        let c_true = sensor_coord_for_factor(a, corrected_m)?;
        let c_measured = precision::draw_in_band(
            &reading_spec,
            c_true,
            eps_c,
            derived_draw(draw, 1 + i as u64),
            None,
        )?;
        // the sensor arc physically ends at c = 1 and starts above 0
        let c_clamped = c_measured.clamp(f64::MIN_POSITIVE, 1.0);
        let factor = factor_from_reading(c_clamped, odd)?;
        let verified = factor >= 1 && odd.is_multiple_of(factor);
        if !candidates.iter().any(|c| c.factor == factor) {
            candidates.push(Candidate { factor, verified });
        }
    }
    candidates.sort_by_key(|c| c.factor);
    // report the smallest verified nontrivial factor first
    if let Some(pos) = candidates.iter().position(|c| c.verified && c.factor > 1) {
        let preferred = candidates.remove(pos);
        candidates.insert(0, preferred);
    }

    let precision_amount = precision::precision(&[pre.two_over_n], &device, MeasureMode::Analytic)?;
    let suspect_miscorrection = candidates.iter().all(|c| !c.verified);

    Ok(FactorizationOutcome {
        requested_n: n,
        halvings,
        corrected_m,
        candidates,
        resources: ResourceTally {
            time: ANALOGUE_TIME_UNITS + pre.bit_ops,
            space: SPACE_UNITS,
            precision: precision_amount,
        },
        suspect_miscorrection,
    })
}

/// One row of the sweep CSV (`n,bits,halvings,time,space,precision,factor,verified`).
/// `factor` is the reported candidate, 0 when the run verified nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u64,
    pub bits: u32,
    pub halvings: u32,
    pub time: u64,
    pub space: u64,
    pub precision: Amount,
    pub factor: u64,
    pub verified: bool,
}

impl SweepRow {
    pub fn from_outcome(outcome: &FactorizationOutcome) -> Self {
        let reported = outcome.reported();
        Self {
            n: outcome.requested_n,
            bits: bit_size(outcome.requested_n),
            halvings: outcome.halvings,
            time: outcome.resources.time,
            space: outcome.resources.space,
            precision: outcome.resources.precision,
            factor: reported.map(|c| c.factor).unwrap_or(0),
            verified: reported.is_some(),
        }
    }
}

pub fn write_sweep_csv<W: std::io::Write>(
    rows: &[SweepRow],
    writer: W,
) -> Result<(), FactorizerError> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)
            .map_err(|e| ResourceError::Csv(e.to_string()))?;
    }
    w.flush()
        .map_err(|e| FactorizerError::Resource(ResourceError::Csv(e.to_string())))
}

pub fn read_sweep_csv<R: std::io::Read>(reader: R) -> Result<Vec<SweepRow>, FactorizerError> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize()
        .collect::<Result<Vec<SweepRow>, _>>()
        .map_err(|e| FactorizerError::Resource(ResourceError::Csv(e.to_string())))
}

/// Build the {time, space, precision} complexity profile from per-n run
/// tallies, keyed by bit size.
pub fn profile_from_tallies(
    tallies: &BTreeMap<u64, ResourceTally>,
) -> Result<BTreeMap<String, ComplexityFunction>, FactorizerError> {
    if tallies.values().any(|t| !t.precision.is_finite()) {
        return Err(FactorizerError::Resource(ResourceError::InfiniteAmount(
            "precision".into(),
        )));
    }
    let shared = Arc::new(tallies.clone());
    let domain: Vec<u64> = shared.keys().copied().collect();

    let time_map = Arc::clone(&shared);
    let time = ResourceFunction::new("time", move |n: &u64| time_map[n].time);
    let space_map = Arc::clone(&shared);
    let space = ResourceFunction::new("space", move |n: &u64| space_map[n].space);
    let prec_map = Arc::clone(&shared);
    let precision_rf = ResourceFunction::new("precision", move |n: &u64| {
        prec_map[n].precision.finite().expect("checked finite")
    });

    let mut profile = BTreeMap::new();
    profile.insert(
        "time".to_string(),
        complexity_of(&time, |n| bit_size(*n), &domain)?,
    );
    profile.insert(
        "space".to_string(),
        complexity_of(&space, |n| bit_size(*n), &domain)?,
    );
    profile.insert(
        "precision".to_string(),
        complexity_of(&precision_rf, |n| bit_size(*n), &domain)?,
    );
    Ok(profile)
}

/// Run the device at zero error over every n given (all odd, >= 3) and
/// assemble the complexity profile of its three resources over bit sizes.
pub fn resource_profile(
    n_values: &[u64],
) -> Result<BTreeMap<String, ComplexityFunction>, FactorizerError> {
    if n_values.is_empty() {
        return Err(FactorizerError::Resource(ResourceError::NoInputs));
    }
    let mut tallies = BTreeMap::new();
    for &n in n_values {
        if n % 2 == 0 {
            return Err(FactorizerError::EvenN);
        }
        if n < 3 {
            return Err(FactorizerError::BelowDeviceMinimum);
        }
        let outcome = run_device(n, &ErrorVector::zero(2), Draw::Exact)?;
        tallies.insert(n, outcome.resources);
    }
    profile_from_tallies(&tallies)
}
