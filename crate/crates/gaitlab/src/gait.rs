//! Touchdown detection, relative phase differences, and gait classification.
//!
//! A gait cycle is the time between consecutive right-front touchdowns,
//! normalized to 2π. The relative phase difference (RPD) is the 3-vector of
//! LF, RH and LH touchdown offsets from the RF reference within that cycle.
//! Classification takes the closest ideal symmetric gait — trot (π, π, 0),
//! pace (π, 0, π), bound (0, π, π), pronk (0, 0, 0) — and reports a
//! transition when the closest one is further than 2 away in RPD space.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::RolloutLog;
use crate::leg::Leg;
use crate::{circular_diff, circular_mean, wrap_angle};

/// Default rising/falling threshold on normalized GRF for contact events.
pub const DEFAULT_TOUCHDOWN_THRESHOLD: f64 = 0.02;
/// Default debounce window in seconds.
pub const DEFAULT_DEBOUNCE_S: f64 = 0.04;
/// RPD-space distance beyond which a sample is a transition, in radians.
pub const TRANSITION_DISTANCE: f64 = 2.0;

#[derive(Debug, Error, PartialEq)]
pub enum GaitError {
    #[error("empty ground reaction force series")]
    EmptySeries,
    #[error("time step must be finite and positive, got {0}")]
    InvalidTimeStep(f64),
    #[error("need at least 2 reference (RF) touchdowns to compute RPD, found {found}")]
    InsufficientReferenceTouchdowns { found: usize },
    #[error("touchdown times for {leg} are not strictly increasing at index {index}")]
    UnorderedEvents { leg: &'static str, index: usize },
}

/// Per-leg touchdown and liftoff event times, strictly increasing and
/// alternating (touchdown first).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TouchdownLog {
    pub touchdowns: [Vec<f64>; 4],
    pub liftoffs: [Vec<f64>; 4],
}

impl TouchdownLog {
    /// Build a log from per-leg touchdown times only (no liftoffs), checking
    /// ordering. Useful for synthesized schedules and CSV input.
    pub fn from_touchdowns(touchdowns: [Vec<f64>; 4]) -> Result<Self, GaitError> {
        for (leg, times) in Leg::ALL.iter().zip(touchdowns.iter()) {
            for (i, pair) in times.windows(2).enumerate() {
                if pair[1] <= pair[0] {
                    return Err(GaitError::UnorderedEvents {
                        leg: leg.label(),
                        index: i + 1,
                    });
                }
            }
        }
        Ok(Self {
            touchdowns,
            liftoffs: Default::default(),
        })
    }

    pub fn touchdowns_for(&self, leg: Leg) -> &[f64] {
        &self.touchdowns[leg.index()]
    }
}

/// Detect contact events from a uniformly sampled GRF series.
///
/// A touchdown is a rising crossing of `threshold`, a liftoff a falling one.
/// A crossing only registers if the signal stays on the new side for the
/// whole debounce window (or to the end of the series); shorter excursions
/// are discarded, so an isolated spike produces no events. Event times are
/// the first sample on the new side. A series that starts above threshold
/// registers a touchdown at the first sample time.
pub fn detect_touchdowns(
    grfs: &[[f64; 4]],
    dt: f64,
    t0: f64,
    threshold: f64,
    debounce: f64,
) -> Result<TouchdownLog, GaitError> {
    if grfs.is_empty() {
        return Err(GaitError::EmptySeries);
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(GaitError::InvalidTimeStep(dt));
    }
    let debounce_samples = (debounce / dt).ceil() as usize;
    let mut log = TouchdownLog::default();
    for leg in 0..4 {
        let mut in_contact = false;
        let mut pending: Option<(usize, bool)> = None; // (sample index, contact state)
        let mut initialized = false;
        for (i, sample) in grfs.iter().enumerate() {
            let above = sample[leg] >= threshold;
            if !initialized {
                initialized = true;
                if above {
                    pending = Some((i, true));
                }
                in_contact = false;
                continue;
            }
            match pending {
                Some((start, state)) => {
                    if above == state {
                        if i - start >= debounce_samples {
                            // Dwell satisfied: commit the event at its crossing time.
                            let t = t0 + start as f64 * dt;
                            if state {
                                log.touchdowns[leg].push(t);
                            } else {
                                log.liftoffs[leg].push(t);
                            }
                            in_contact = state;
                            pending = None;
                        }
                    } else {
                        // Reversed before the dwell elapsed: discard.
                        pending = None;
                        if above != in_contact {
                            pending = Some((i, above));
                        }
                    }
                }
                None => {
                    if above != in_contact {
                        pending = Some((i, above));
                    }
                }
            }
        }
        // A pending event that persisted to the end of the series counts.
        if let Some((start, state)) = pending {
            let t = t0 + start as f64 * dt;
            if state {
                log.touchdowns[leg].push(t);
            } else {
                log.liftoffs[leg].push(t);
            }
        }
    }
    Ok(log)
}

/// Detect touchdowns straight from a rollout log using default thresholds.
pub fn detect_touchdowns_from_log(log: &RolloutLog) -> Result<TouchdownLog, GaitError> {
    detect_touchdowns(
        &log.grfs,
        log.dt,
        log.time.first().copied().unwrap_or(0.0),
        DEFAULT_TOUCHDOWN_THRESHOLD,
        DEFAULT_DEBOUNCE_S,
    )
}

/// Contact events from the logged stance/swing channel.
///
/// The surrogate's contact state is the leg mode itself, so mode
/// transitions give exact touchdown timing even when the load solver
/// assigns a freshly planted foot no force yet. Event times are the first
/// sample in the new mode; a leg already in stance at the first sample
/// logs a touchdown there.
pub fn detect_contacts_from_modes(log: &RolloutLog) -> Result<TouchdownLog, GaitError> {
    if log.modes.is_empty() {
        return Err(GaitError::EmptySeries);
    }
    let mut out = TouchdownLog::default();
    for leg in 0..4 {
        let mut prev: Option<bool> = None;
        for (i, modes) in log.modes.iter().enumerate() {
            let stance = modes[leg] == crate::leg::LegMode::Stance;
            let t = log.time[i];
            match prev {
                None => {
                    if stance {
                        out.touchdowns[leg].push(t);
                    }
                }
                Some(p) => {
                    if stance && !p {
                        out.touchdowns[leg].push(t);
                    } else if !stance && p {
                        out.liftoffs[leg].push(t);
                    }
                }
            }
            prev = Some(stance);
        }
    }
    Ok(out)
}

/// One gait cycle's relative phase differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpdSample {
    /// (LF, RH, LH) touchdown offsets from the RF reference, each in [0, 2π).
    pub values: [f64; 3],
    /// Time of the RF touchdown opening this cycle, seconds.
    pub cycle_start: f64,
    /// Cycle duration, seconds.
    pub cycle_length: f64,
}

impl RpdSample {
    /// End of the cycle this sample covers.
    pub fn cycle_end(&self) -> f64 {
        self.cycle_start + self.cycle_length
    }
}

/// RPD samples for every complete cycle, plus the count of cycles dropped
/// because some leg never touched down inside them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RpdSeries {
    pub samples: Vec<RpdSample>,
    pub incomplete_cycles: usize,
}

/// Compute relative phase differences from a touchdown log.
///
/// Each pair of consecutive RF touchdowns (t_k, t_{k+1}) defines a cycle of
/// length normalized to 2π. For each other leg the first touchdown inside
/// [t_k, t_{k+1}) yields `2π (t_leg − t_k) / (t_{k+1} − t_k)`; a cycle where
/// some leg has no touchdown is excluded and counted as incomplete.
pub fn compute_rpd(log: &TouchdownLog) -> Result<RpdSeries, GaitError> {
    let reference = log.touchdowns_for(Leg::RightFront);
    if reference.len() < 2 {
        return Err(GaitError::InsufficientReferenceTouchdowns {
            found: reference.len(),
        });
    }
    let mut series = RpdSeries::default();
    let others = [Leg::LeftFront, Leg::RightHind, Leg::LeftHind];
    for pair in reference.windows(2) {
        let (start, end) = (pair[0], pair[1]);
        let length = end - start;
        let mut values = [0.0; 3];
        let mut complete = true;
        for (slot, leg) in others.iter().enumerate() {
            let times = log.touchdowns_for(*leg);
            match times.iter().find(|&&t| t >= start && t < end) {
                Some(&t) => values[slot] = wrap_angle(TAU * (t - start) / length),
                None => {
                    complete = false;
                    break;
                }
            }
        }
        if complete {
            series.samples.push(RpdSample {
                values,
                cycle_start: start,
                cycle_length: length,
            });
        } else {
            series.incomplete_cycles += 1;
        }
    }
    Ok(series)
}

/// Symmetric quadruped gait labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GaitLabel {
    Trot,
    Pace,
    Bound,
    Pronk,
    Transition,
}

impl GaitLabel {
    /// The four ideal gaits in tie-break order, with their RPDs.
    pub const IDEALS: [(GaitLabel, [f64; 3]); 4] = [
        (GaitLabel::Trot, [PI, PI, 0.0]),
        (GaitLabel::Pace, [PI, 0.0, PI]),
        (GaitLabel::Bound, [0.0, PI, PI]),
        (GaitLabel::Pronk, [0.0, 0.0, 0.0]),
    ];

    pub const ALL: [GaitLabel; 5] = [
        GaitLabel::Trot,
        GaitLabel::Pace,
        GaitLabel::Bound,
        GaitLabel::Pronk,
        GaitLabel::Transition,
    ];

    pub const fn label(self) -> &'static str {
        match self {
            GaitLabel::Trot => "trot",
            GaitLabel::Pace => "pace",
            GaitLabel::Bound => "bound",
            GaitLabel::Pronk => "pronk",
            GaitLabel::Transition => "transition",
        }
    }

    pub fn from_label(s: &str) -> Option<GaitLabel> {
        match s.trim().to_ascii_lowercase().as_str() {
            "trot" => Some(GaitLabel::Trot),
            "pace" => Some(GaitLabel::Pace),
            "bound" => Some(GaitLabel::Bound),
            "pronk" => Some(GaitLabel::Pronk),
            "transition" => Some(GaitLabel::Transition),
            _ => None,
        }
    }
}

impl std::fmt::Display for GaitLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// How RPD-space distance treats the 2π wrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// Per-component circular difference mapped to (−π, π] before the norm.
    Circular,
    /// Raw componentwise difference (misclassifies near the wrap; kept for
    /// comparison).
    Raw,
}

/// Distance between two RPD vectors under the given wrap handling.
pub fn rpd_distance(a: &[f64; 3], b: &[f64; 3], mode: DistanceMode) -> f64 {
    let mut sq = 0.0;
    for i in 0..3 {
        let d = match mode {
            DistanceMode::Circular => circular_diff(a[i], b[i]),
            DistanceMode::Raw => a[i] - b[i],
        };
        sq += d * d;
    }
    sq.sqrt()
}

/// Classify one RPD sample against the ideal gait table.
pub fn classify_gait(rpd: &RpdSample) -> GaitLabel {
    classify_gait_with(&rpd.values, DistanceMode::Circular)
}

/// Classification with explicit wrap handling. Ties break in the fixed
/// order trot, pace, bound, pronk.
pub fn classify_gait_with(values: &[f64; 3], mode: DistanceMode) -> GaitLabel {
    let mut best = GaitLabel::Transition;
    let mut best_dist = f64::INFINITY;
    for (label, ideal) in GaitLabel::IDEALS {
        let d = rpd_distance(values, &ideal, mode);
        if d < best_dist {
            best_dist = d;
            best = label;
        }
    }
    if best_dist > TRANSITION_DISTANCE {
        GaitLabel::Transition
    } else {
        best
    }
}

/// One entry of the windowed RPD/label time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregatedRpd {
    /// Tick time, seconds.
    pub time: f64,
    /// Per-component circular mean over the window.
    pub rpd: [f64; 3],
    pub label: GaitLabel,
}

/// Average the RPD over the most recent complete cycles every `stride_s`
/// seconds up to `duration_s`, then classify each window.
///
/// Ticks with fewer than `window_cycles` complete cycles available produce
/// no entry. The average is a per-component circular mean.
pub fn aggregate_rpd(
    samples: &[RpdSample],
    window_cycles: usize,
    stride_s: f64,
    duration_s: f64,
) -> Vec<AggregatedRpd> {
    let mut out = Vec::new();
    if stride_s <= 0.0 || window_cycles == 0 {
        return out;
    }
    let mut tick = stride_s;
    while tick <= duration_s + 1e-9 {
        let complete: Vec<&RpdSample> = samples
            .iter()
            .filter(|s| s.cycle_end() <= tick + 1e-9)
            .collect();
        if complete.len() >= window_cycles {
            let window = &complete[complete.len() - window_cycles..];
            let mut rpd = [0.0; 3];
            for (i, component) in rpd.iter_mut().enumerate() {
                let angles: Vec<f64> = window.iter().map(|s| s.values[i]).collect();
                *component = circular_mean(&angles);
            }
            let label = classify_gait_with(&rpd, DistanceMode::Circular);
            out.push(AggregatedRpd {
                time: tick,
                rpd,
                label,
            });
        }
        tick += stride_s;
    }
    out
}

/// Ground reaction forces re-indexed by the reference leg's phase.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseLockedGrf {
    /// One trace per reference cycle: (reference phase, per-leg GRF) samples.
    pub cycles: Vec<Vec<(f64, [f64; 4])>>,
    /// Reference-phase values at which each leg's own phase wraps through 0.
    pub zero_crossings: [Vec<f64>; 4],
    /// Reference-phase values at which each leg's own phase crosses π upward.
    pub pi_crossings: [Vec<f64>; 4],
}

/// Re-index each leg's GRF by the reference leg's phase, cycle by cycle,
/// and record where each leg's own oscillator crosses 0 and π.
///
/// Cycles are segmented at wrap events of the reference phase (a drop of
/// more than π between consecutive samples).
pub fn phase_locked_grf(log: &RolloutLog, reference: Leg) -> PhaseLockedGrf {
    let mut out = PhaseLockedGrf::default();
    let r = reference.index();
    if log.phases.is_empty() {
        return out;
    }
    let mut current: Vec<(f64, [f64; 4])> = Vec::new();
    for (i, (phases, grf)) in log.phases.iter().zip(log.grfs.iter()).enumerate() {
        let ref_phase = phases[r];
        if i > 0 {
            let prev = log.phases[i - 1];
            if ref_phase < prev[r] - PI {
                // Reference wrapped: close the cycle.
                if !current.is_empty() {
                    out.cycles.push(std::mem::take(&mut current));
                }
            }
            for leg in 0..4 {
                let (a, b) = (prev[leg], phases[leg]);
                if b < a - PI {
                    out.zero_crossings[leg].push(ref_phase);
                }
                if a < PI && b >= PI {
                    out.pi_crossings[leg].push(ref_phase);
                }
            }
        }
        current.push((ref_phase, *grf));
    }
    if !current.is_empty() {
        out.cycles.push(current);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constant_series(value: f64, n: usize) -> Vec<[f64; 4]> {
        vec![[value; 4]; n]
    }

    #[test]
    fn constant_contact_yields_single_touchdown_at_zero() {
        let series = constant_series(0.25, 500);
        let log = detect_touchdowns(&series, 0.002, 0.0, 0.02, 0.04).unwrap();
        for leg in 0..4 {
            assert_eq!(log.touchdowns[leg], vec![0.0]);
            assert!(log.liftoffs[leg].is_empty());
        }
    }

    #[test]
    fn square_wave_touchdowns_land_on_period_boundaries() {
        let dt = 0.002;
        let n = (3.0 / dt) as usize;
        let series: Vec<[f64; 4]> = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                let v = if t % 1.0 < 0.5 { 0.3 } else { 0.0 };
                [v; 4]
            })
            .collect();
        let log = detect_touchdowns(&series, dt, 0.0, 0.02, 0.04).unwrap();
        assert_eq!(log.touchdowns[0].len(), 3);
        for (k, &t) in log.touchdowns[0].iter().enumerate() {
            assert!(
                (t - k as f64).abs() <= dt + 1e-12,
                "touchdown {k} at {t}"
            );
        }
        assert_eq!(log.liftoffs[0].len(), 3);
    }

    #[test]
    fn short_spike_is_debounced_away() {
        let mut series = constant_series(0.0, 200);
        series[100] = [0.5; 4];
        let log = detect_touchdowns(&series, 0.002, 0.0, 0.02, 0.04).unwrap();
        for leg in 0..4 {
            assert!(log.touchdowns[leg].is_empty(), "leg {leg} saw a touchdown");
            assert!(log.liftoffs[leg].is_empty());
        }
    }

    #[test]
    fn empty_series_rejected() {
        assert_eq!(
            detect_touchdowns(&[], 0.002, 0.0, 0.02, 0.04),
            Err(GaitError::EmptySeries)
        );
    }

    fn schedule(rpd: [f64; 3], freq: f64, cycles: usize) -> TouchdownLog {
        let period = 1.0 / freq;
        let mut tds: [Vec<f64>; 4] = Default::default();
        for k in 0..cycles {
            let base = k as f64 * period;
            tds[0].push(base);
            for (slot, offset) in rpd.iter().enumerate() {
                tds[slot + 1].push(base + offset / TAU * period);
            }
        }
        for v in tds.iter_mut() {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        TouchdownLog::from_touchdowns(tds).unwrap()
    }

    #[test]
    fn trot_schedule_recovers_ideal_rpd() {
        let log = schedule([PI, PI, 0.0], 1.0, 4);
        let series = compute_rpd(&log).unwrap();
        assert_eq!(series.samples.len(), 3);
        for s in &series.samples {
            assert!((s.values[0] - PI).abs() < 1e-12);
            assert!((s.values[1] - PI).abs() < 1e-12);
            assert!(s.values[2].abs() < 1e-12);
            assert!((s.cycle_length - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn simultaneous_touchdowns_are_pronk() {
        let log = schedule([0.0, 0.0, 0.0], 2.0, 3);
        let series = compute_rpd(&log).unwrap();
        for s in &series.samples {
            assert_eq!(classify_gait(s), GaitLabel::Pronk);
            assert_eq!(s.values, [0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn quarter_cycle_offset_maps_to_half_pi() {
        let log = TouchdownLog::from_touchdowns([
            vec![0.0, 1.0],
            vec![0.25],
            vec![0.1],
            vec![0.9],
        ])
        .unwrap();
        let series = compute_rpd(&log).unwrap();
        assert_eq!(series.samples.len(), 1);
        assert!((series.samples[0].values[0] - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_reference_touchdowns_is_reported() {
        let log = TouchdownLog::from_touchdowns([vec![0.0], vec![], vec![], vec![]]).unwrap();
        assert_eq!(
            compute_rpd(&log),
            Err(GaitError::InsufficientReferenceTouchdowns { found: 1 })
        );
    }

    #[test]
    fn cycles_missing_a_leg_count_as_incomplete() {
        let log = TouchdownLog::from_touchdowns([
            vec![0.0, 1.0, 2.0],
            vec![0.5, 1.5],
            vec![0.5],
            vec![0.1, 1.1],
        ])
        .unwrap();
        let series = compute_rpd(&log).unwrap();
        assert_eq!(series.samples.len(), 1);
        assert_eq!(series.incomplete_cycles, 1);
    }

    #[test]
    fn ideal_gaits_classify_to_themselves_at_distance_zero() {
        for (label, ideal) in GaitLabel::IDEALS {
            let sample = RpdSample {
                values: ideal,
                cycle_start: 0.0,
                cycle_length: 1.0,
            };
            assert_eq!(classify_gait(&sample), label);
            assert_eq!(rpd_distance(&ideal, &ideal, DistanceMode::Circular), 0.0);
        }
    }

    #[test]
    fn perturbed_trot_stays_trot() {
        let sample = RpdSample {
            values: [PI - 0.3, PI, 0.2],
            cycle_start: 0.0,
            cycle_length: 1.0,
        };
        assert_eq!(classify_gait(&sample), GaitLabel::Trot);
    }

    #[test]
    fn equidistant_point_is_transition() {
        // (π/2, π/2, π/2) sits at circular distance (π/2)·√3 ≈ 2.72 from
        // every ideal gait.
        let sample = RpdSample {
            values: [PI / 2.0; 3],
            cycle_start: 0.0,
            cycle_length: 1.0,
        };
        assert_eq!(classify_gait(&sample), GaitLabel::Transition);
        let d = rpd_distance(&[PI / 2.0; 3], &[PI, PI, 0.0], DistanceMode::Circular);
        assert!((d - (PI / 2.0) * 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn raw_distance_misses_the_wrap_circular_does_not() {
        let near_pronk = [TAU - 0.05, 0.05, TAU - 0.05];
        assert_eq!(
            classify_gait_with(&near_pronk, DistanceMode::Circular),
            GaitLabel::Pronk
        );
        assert_eq!(
            classify_gait_with(&near_pronk, DistanceMode::Raw),
            GaitLabel::Transition
        );
    }

    /// Brute-force oracle: enumerate ideal gaits and all per-component 2π
    /// shifts, take the plain Euclidean minimum.
    fn classify_oracle(values: &[f64; 3]) -> GaitLabel {
        let mut best = GaitLabel::Transition;
        let mut best_dist = f64::INFINITY;
        for (label, ideal) in GaitLabel::IDEALS {
            for kx in -1..=1 {
                for ky in -1..=1 {
                    for kz in -1..=1 {
                        let shifted = [
                            ideal[0] + TAU * kx as f64,
                            ideal[1] + TAU * ky as f64,
                            ideal[2] + TAU * kz as f64,
                        ];
                        let d = rpd_distance(values, &shifted, DistanceMode::Raw);
                        if d < best_dist {
                            best_dist = d;
                            best = label;
                        }
                    }
                }
            }
        }
        if best_dist > TRANSITION_DISTANCE {
            GaitLabel::Transition
        } else {
            best
        }
    }

    #[test]
    fn classifier_matches_wrap_enumerating_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut mismatches = 0;
        for _ in 0..10_000 {
            let v = [(); 3].map(|_| rng.random_range(0.0..TAU));
            if classify_gait_with(&v, DistanceMode::Circular) != classify_oracle(&v) {
                mismatches += 1;
            }
        }
        assert_eq!(mismatches, 0);
    }

    #[test]
    fn round_trip_through_grf_series_recovers_rpd() {
        // Square-wave GRF with duty 0.5 synthesized from each ideal gait at
        // several frequencies, run through the detector and RPD pipeline.
        let dt = 0.002;
        for freq in [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0] {
            for (label, ideal) in GaitLabel::IDEALS {
                let period = 1.0 / freq;
                let total = 6.0 * period;
                let n = (total / dt) as usize;
                let mut series = vec![[0.0; 4]; n];
                for (i, row) in series.iter_mut().enumerate() {
                    let t = i as f64 * dt;
                    for leg in 0..4 {
                        let offset = if leg == 0 { 0.0 } else { ideal[leg - 1] };
                        let local = (t / period - offset / TAU).rem_euclid(1.0);
                        if local < 0.5 {
                            row[leg] = 0.3;
                        }
                    }
                }
                let tds = detect_touchdowns(&series, dt, 0.0, 0.02, 0.04).unwrap();
                let rpd = compute_rpd(&tds).unwrap();
                assert!(!rpd.samples.is_empty(), "{label} at {freq} Hz");
                let tol = TAU * freq * dt + 1e-9; // one sample of timing error
                for s in &rpd.samples {
                    for (i, &want) in ideal.iter().enumerate() {
                        let err = circular_diff(s.values[i], want).abs();
                        assert!(
                            err <= tol,
                            "{label} at {freq} Hz: component {i} err {err} > {tol}"
                        );
                    }
                    assert_eq!(classify_gait(s), label, "{label} at {freq} Hz");
                }
            }
        }
    }

    #[test]
    fn aggregate_stationary_trot_labels_every_tick() {
        let log = schedule([PI, PI, 0.0], 2.0, 50);
        let series = compute_rpd(&log).unwrap();
        let agg = aggregate_rpd(&series.samples, 2, 5.0, 24.0);
        assert_eq!(agg.len(), 4);
        for entry in &agg {
            assert_eq!(entry.label, GaitLabel::Trot);
        }
    }

    #[test]
    fn aggregate_uses_circular_mean_near_wrap() {
        let samples = vec![
            RpdSample {
                values: [0.1, 0.0, 0.0],
                cycle_start: 0.0,
                cycle_length: 1.0,
            },
            RpdSample {
                values: [TAU - 0.1, 0.0, 0.0],
                cycle_start: 1.0,
                cycle_length: 1.0,
            },
        ];
        let agg = aggregate_rpd(&samples, 2, 5.0, 5.0);
        assert_eq!(agg.len(), 1);
        let first = agg[0].rpd[0];
        assert!(first.abs() < 1e-9 || (first - TAU).abs() < 1e-9, "mean {first}");
    }

    #[test]
    fn aggregate_skips_ticks_without_enough_cycles() {
        let samples = vec![RpdSample {
            values: [PI, PI, 0.0],
            cycle_start: 0.0,
            cycle_length: 1.0,
        }];
        assert!(aggregate_rpd(&samples, 2, 5.0, 10.0).is_empty());
    }

    #[test]
    fn pace_to_trot_transition_shows_up_in_labels() {
        // Interpolate the touchdown schedule from pace to trot over 40 s.
        let freq = 2.0;
        let period = 1.0 / freq;
        let cycles = 80;
        let mut tds: [Vec<f64>; 4] = Default::default();
        for k in 0..cycles {
            let base = k as f64 * period;
            let alpha = (k as f64 / (cycles - 1) as f64).clamp(0.0, 1.0);
            // Pace (π, 0, π) → Trot (π, π, 0).
            let rpd = [
                PI,
                alpha * PI,
                (1.0 - alpha) * PI,
            ];
            tds[0].push(base);
            for (slot, offset) in rpd.iter().enumerate() {
                tds[slot + 1].push(base + offset / TAU * period);
            }
        }
        let log = TouchdownLog::from_touchdowns(tds).unwrap();
        let series = compute_rpd(&log).unwrap();
        let agg = aggregate_rpd(&series.samples, 2, 5.0, cycles as f64 * period);
        let labels: Vec<GaitLabel> = agg.iter().map(|e| e.label).collect();
        assert_eq!(labels.first(), Some(&GaitLabel::Pace));
        assert_eq!(labels.last(), Some(&GaitLabel::Trot));
        assert!(
            labels.contains(&GaitLabel::Transition),
            "expected a transition window in {labels:?}"
        );
    }

    proptest! {
        #[test]
        fn label_invariant_to_full_turn_shifts(
            v in prop::array::uniform3(0.0..TAU),
            k in prop::array::uniform3(-3i32..=3),
        ) {
            let shifted = [
                v[0] + TAU * k[0] as f64,
                v[1] + TAU * k[1] as f64,
                v[2] + TAU * k[2] as f64,
            ];
            let wrapped = shifted.map(wrap_angle);
            prop_assert_eq!(
                classify_gait_with(&v, DistanceMode::Circular),
                classify_gait_with(&wrapped, DistanceMode::Circular)
            );
        }
    }
}
