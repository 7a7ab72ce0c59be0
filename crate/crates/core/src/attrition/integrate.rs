use serde::Serialize;

use super::{AttritionError, AttritionScenario, Law, Winner};

/// Largest tolerated relative drift of the conserved quantity.
pub const MAX_DRIFT: f64 = 1e-3;
/// A side below this fraction of its initial level is treated as extinct
/// under the laws whose losers only decay asymptotically.
pub const ASYMPTOTIC_EXTINCTION: f64 = 1e-9;
/// Recorded trajectories are thinned to about this many points.
pub const MAX_RECORDED_POINTS: usize = 10_000;

const CROSSING_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    HateExtinct,
    ModeratorsExtinct,
    Stalemate,
    /// The horizon was reached with both sides still present.
    Undetermined,
}

impl Outcome {
    pub fn winner(self) -> Option<Winner> {
        match self {
            Outcome::HateExtinct => Some(Winner::Moderators),
            Outcome::ModeratorsExtinct => Some(Winner::Hate),
            Outcome::Stalemate => Some(Winner::Stalemate),
            Outcome::Undetermined => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub hate: Vec<f64>,
    pub moderators: Vec<f64>,
    pub outcome: Outcome,
    /// Time of extinction, or of the last step.
    pub end_time: f64,
    pub final_hate: f64,
    pub final_moderators: f64,
    /// Largest `|Q(t) - Q(0)|` seen, relative to the larger term of `Q(0)`.
    pub invariant_drift: f64,
    pub steps: u64,
}

fn rk4(s: &AttritionScenario, (h, m): (f64, f64), dt: f64) -> (f64, f64) {
    let k1 = s.rates(h, m);
    let k2 = s.rates(h + 0.5 * dt * k1.0, m + 0.5 * dt * k1.1);
    let k3 = s.rates(h + 0.5 * dt * k2.0, m + 0.5 * dt * k2.1);
    let k4 = s.rates(h + dt * k3.0, m + dt * k3.1);
    (
        h + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        m + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

/// Smallest sub-step in `(0, step]` at which component `which` of the RK4
/// update reaches zero, to `CROSSING_TOLERANCE * step`.
fn crossing(s: &AttritionScenario, state: (f64, f64), step: f64, which: usize) -> f64 {
    let value = |tau: f64| {
        let next = rk4(s, state, tau);
        if which == 0 {
            next.0
        } else {
            next.1
        }
    };
    let (mut lo, mut hi) = (0.0, step);
    while hi - lo > CROSSING_TOLERANCE * step {
        let mid = 0.5 * (lo + hi);
        if value(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

struct Recorder {
    stride: u64,
    times: Vec<f64>,
    hate: Vec<f64>,
    moderators: Vec<f64>,
}

impl Recorder {
    fn push(&mut self, t: f64, (h, m): (f64, f64)) {
        self.times.push(t);
        self.hate.push(h);
        self.moderators.push(m);
    }
}

/// Fixed-step RK4 from `t = 0` to `t_max`, stopping at the first
/// extinction. A zero crossing inside a step is located by bisection and
/// the loser is clamped to exactly zero.
pub fn integrate(s: &AttritionScenario, dt: f64, t_max: f64) -> Result<Trajectory, AttritionError> {
    s.validate()?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(AttritionError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !(t_max.is_finite() && t_max >= 0.0) {
        return Err(AttritionError::InvalidParameter(format!("t_max must be finite and >= 0, got {t_max}")));
    }
    let (h0, m0) = (s.initial_hate, s.initial_moderators);
    let q0 = s.conserved(h0, m0);
    let scale = s.conserved_scale();
    let total_steps = (t_max / dt).ceil().max(1.0) as u64;
    let mut rec = Recorder {
        stride: total_steps.div_ceil(MAX_RECORDED_POINTS as u64).max(1),
        times: vec![],
        hate: vec![],
        moderators: vec![],
    };
    rec.push(0.0, (h0, m0));

    let finish = |rec: Recorder, outcome, t, state: (f64, f64), drift, steps| Trajectory {
        times: rec.times,
        hate: rec.hate,
        moderators: rec.moderators,
        outcome,
        end_time: t,
        final_hate: state.0,
        final_moderators: state.1,
        invariant_drift: drift,
        steps,
    };
    let immediate = match (h0 == 0.0, m0 == 0.0) {
        (true, true) => Some(Outcome::Stalemate),
        (true, false) => Some(Outcome::HateExtinct),
        (false, true) => Some(Outcome::ModeratorsExtinct),
        _ => None,
    };
    if let Some(outcome) = immediate {
        return Ok(finish(rec, outcome, 0.0, (h0, m0), 0.0, 0));
    }

    let asymptotic = s.law != Law::Square;
    let mut state = (h0, m0);
    let mut t = 0.0;
    let mut drift: f64 = 0.0;
    let mut steps = 0u64;
    let check_drift = |state: (f64, f64), drift: &mut f64, step: f64| {
        let d = (s.conserved(state.0, state.1) - q0).abs() / scale;
        *drift = drift.max(d);
        if *drift > MAX_DRIFT {
            Err(AttritionError::StepTooLarge {
                drift: *drift,
                max: MAX_DRIFT,
                suggested_dt: 0.5 * step * (MAX_DRIFT / *drift).powf(0.25),
            })
        } else {
            Ok(())
        }
    };

    while steps < total_steps {
        let step = dt.min(t_max - t);
        if step <= 0.0 {
            break;
        }
        let next = rk4(s, state, step);
        steps += 1;
        if next.0 <= 0.0 || next.1 <= 0.0 {
            let tau_h = (next.0 <= 0.0).then(|| crossing(s, state, step, 0));
            let tau_m = (next.1 <= 0.0).then(|| crossing(s, state, step, 1));
            let (tau, outcome) = match (tau_h, tau_m) {
                (Some(a), Some(b)) if (a - b).abs() <= 2.0 * CROSSING_TOLERANCE * step => {
                    (a.max(b), Outcome::Stalemate)
                }
                (Some(a), Some(b)) if a < b => (a, Outcome::HateExtinct),
                (Some(_), Some(b)) => (b, Outcome::ModeratorsExtinct),
                (Some(a), None) => (a, Outcome::HateExtinct),
                (None, Some(b)) => (b, Outcome::ModeratorsExtinct),
                (None, None) => unreachable!(),
            };
            let end = rk4(s, state, tau);
            check_drift(end, &mut drift, dt)?;
            let clamped = match outcome {
                Outcome::HateExtinct => (0.0, end.1.max(0.0)),
                Outcome::ModeratorsExtinct => (end.0.max(0.0), 0.0),
                _ => (0.0, 0.0),
            };
            t += tau;
            rec.push(t, clamped);
            return Ok(finish(rec, outcome, t, clamped, drift, steps));
        }
        state = next;
        t = if steps == total_steps { t_max } else { steps as f64 * dt };
        check_drift(state, &mut drift, dt)?;

        let hate_gone = state.0 < ASYMPTOTIC_EXTINCTION * h0;
        let mods_gone = state.1 < ASYMPTOTIC_EXTINCTION * m0;
        let outcome = match (hate_gone, mods_gone) {
            (true, true) => Some(Outcome::Stalemate),
            (true, false) if asymptotic => Some(Outcome::HateExtinct),
            (false, true) if asymptotic => Some(Outcome::ModeratorsExtinct),
            _ => None,
        };
        if let Some(outcome) = outcome {
            rec.push(t, state);
            return Ok(finish(rec, outcome, t, state, drift, steps));
        }
        if steps.is_multiple_of(rec.stride) || steps == total_steps {
            rec.push(t, state);
        }
    }
    Ok(finish(rec, Outcome::Undetermined, t, state, drift, steps))
}

#[cfg(test)]
mod tests {
    use super::super::{closed_form, predict_outcome, square_law_extinction_time};
    use super::*;

    fn sc(law: Law, m: f64, h: f64, h0: f64, m0: f64) -> AttritionScenario {
        AttritionScenario::new(law, m, h, h0, m0).unwrap()
    }

    #[test]
    fn square_matches_closed_form() {
        let s = sc(Law::Square, 4.0, 1.0, 3.0, 2.0);
        let tr = integrate(&s, 1e-4, 10.0).unwrap();
        assert_eq!(tr.outcome, Outcome::HateExtinct);
        let t_star = square_law_extinction_time(&s).unwrap();
        assert!((tr.end_time - t_star).abs() < 1e-9, "{} vs {}", tr.end_time, t_star);
        assert_eq!(tr.final_hate, 0.0);
        let expected = predict_outcome(&s).unwrap().survivor_level;
        assert!((tr.final_moderators - expected).abs() < 1e-9);
        for (i, &t) in tr.times.iter().enumerate().step_by(97) {
            let (h, m) = closed_form(&s, t.min(t_star)).unwrap();
            assert!((tr.hate[i] - h).abs() < 1e-9 && (tr.moderators[i] - m).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_and_ambush_asymptotic() {
        let s = sc(Law::Linear, 2.0, 1.0, 3.0, 2.0);
        let dt = 1e-3 * s.characteristic_time();
        let tr = integrate(&s, dt, 1e4 * s.characteristic_time()).unwrap();
        assert_eq!(tr.outcome, Outcome::HateExtinct);
        assert!((tr.final_moderators - 0.5).abs() < 1e-6);
        assert!(tr.invariant_drift < 1e-9);

        let s = sc(Law::Ambush, 1.0, 1.0, 3.0, 2.0);
        let tr = integrate(&s, 1e-3 * s.characteristic_time(), 100.0).unwrap();
        assert_eq!(tr.outcome, Outcome::ModeratorsExtinct);
        assert!((tr.final_hate - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_starts() {
        let tr = integrate(&sc(Law::Square, 1.0, 1.0, 0.0, 5.0), 0.1, 1.0).unwrap();
        assert_eq!(tr.outcome, Outcome::HateExtinct);
        assert_eq!(tr.steps, 0);
        let tr = integrate(&sc(Law::Ambush, 1.0, 1.0, 5.0, 0.0), 0.1, 1.0).unwrap();
        assert_eq!(tr.outcome, Outcome::ModeratorsExtinct);
    }

    #[test]
    fn horizon_reached() {
        let s = sc(Law::Square, 1.0, 1.0, 1.0, 2.0);
        let tr = integrate(&s, 1e-3, 0.01).unwrap();
        assert_eq!(tr.outcome, Outcome::Undetermined);
        assert!((tr.end_time - 0.01).abs() < 1e-15);
        assert_eq!(tr.steps, 10);
    }

    #[test]
    fn coarse_step_rejected() {
        let s = sc(Law::Square, 1.0, 1.0, 1.0, 1.01);
        match integrate(&s, 1.5, 30.0) {
            Err(AttritionError::StepTooLarge { suggested_dt, .. }) => assert!(suggested_dt < 1.5),
            other => panic!("expected StepTooLarge, got {other:?}"),
        }
    }

    #[test]
    fn recording_is_thinned() {
        let s = sc(Law::Square, 1.0, 1.0, 1.0, 2.0);
        let tr = integrate(&s, 1e-5, 1.0).unwrap();
        assert!(tr.times.len() <= MAX_RECORDED_POINTS + 2);
        assert_eq!(tr.times[0], 0.0);
        assert_eq!(*tr.times.last().unwrap(), tr.end_time);
    }

    #[test]
    fn bad_parameters() {
        let s = sc(Law::Square, 1.0, 1.0, 1.0, 2.0);
        assert!(integrate(&s, 0.0, 1.0).is_err());
        assert!(integrate(&s, 0.1, f64::NAN).is_err());
    }
}
