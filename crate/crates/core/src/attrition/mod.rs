//! Moderator-versus-hate attrition dynamics.
//!
//! Three laws couple hate activity `H` and moderator activity `M` through
//! the fighting efficiencies `m` (moderators) and `h` (hate):
//!
//! | law      | dH/dt    | dM/dt    | conserved quantity   |
//! |----------|----------|----------|----------------------|
//! | square   | `-m M`   | `-h H`   | `h H^2 - m M^2`      |
//! | linear   | `-m M H` | `-h H M` | `h H - m M`          |
//! | ambush   | `-m M H` | `-h H`   | `H - (m / 2h) M^2`   |
//!
//! Dividing the two rates eliminates time, and integrating `dH/dM` gives
//! the conserved quantities. Setting the loser's level to zero in them
//! yields the winner and the survivor level without solving for `t`.

mod integrate;
mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use integrate::{integrate, Outcome, Trajectory, ASYMPTOTIC_EXTINCTION, MAX_DRIFT, MAX_RECORDED_POINTS};
pub use sweep::{analytic_boundary, sweep, sweep_with, write_sweep_csv, SweepCell, SweepGrid, SweepSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttritionError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("degenerate scenario: {0} starts at zero and the outcome is trivial")]
    DegenerateScenario(&'static str),
    #[error("closed form is only available for the square law, not {0:?}")]
    UnsupportedLaw(Law),
    #[error("t = {t} is past the extinction time {extinction}")]
    PastExtinction { t: f64, extinction: f64 },
    #[error("invariant drift {drift:.3e} exceeds {max:.0e}; retry with dt <= {suggested_dt:.3e}")]
    StepTooLarge { drift: f64, max: f64, suggested_dt: f64 },
    #[error("invalid integration parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    Square,
    Linear,
    Ambush,
}

impl Law {
    pub const ALL: [Law; 3] = [Law::Square, Law::Linear, Law::Ambush];

    pub fn name(self) -> &'static str {
        match self {
            Law::Square => "square",
            Law::Linear => "linear",
            Law::Ambush => "ambush",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttritionScenario {
    pub law: Law,
    /// `m`: moderators' fighting efficiency.
    pub moderator_efficiency: f64,
    /// `h`: hate's fighting efficiency.
    pub hate_efficiency: f64,
    /// `H(0)`.
    pub initial_hate: f64,
    /// `M(0)`.
    pub initial_moderators: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Winner {
    Moderators,
    Hate,
    Stalemate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomePrediction {
    pub winner: Winner,
    /// Moderators' margin, the conserved quantity oriented so that positive
    /// means moderators win: `mM0^2 - hH0^2`, `mM0 - hH0` or
    /// `(m/2h)M0^2 - H0` depending on the law.
    pub threshold_quantity: f64,
    /// Terminal level of the winning side; zero at stalemate.
    pub survivor_level: f64,
}

impl AttritionScenario {
    pub fn new(law: Law, m: f64, h: f64, hate0: f64, moderators0: f64) -> Result<Self, AttritionError> {
        let s = AttritionScenario {
            law,
            moderator_efficiency: m,
            hate_efficiency: h,
            initial_hate: hate0,
            initial_moderators: moderators0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), AttritionError> {
        let (m, h) = (self.moderator_efficiency, self.hate_efficiency);
        if !(m.is_finite() && m > 0.0 && h.is_finite() && h > 0.0) {
            return Err(AttritionError::InvalidScenario(format!(
                "efficiencies must be positive and finite (m = {m}, h = {h})"
            )));
        }
        let (h0, m0) = (self.initial_hate, self.initial_moderators);
        if !(h0.is_finite() && h0 >= 0.0 && m0.is_finite() && m0 >= 0.0) {
            return Err(AttritionError::InvalidScenario(format!(
                "initial levels must be finite and >= 0 (H0 = {h0}, M0 = {m0})"
            )));
        }
        Ok(())
    }

    /// `(dH/dt, dM/dt)` at the given levels.
    pub fn rates(&self, hate: f64, moderators: f64) -> (f64, f64) {
        let (m, h) = (self.moderator_efficiency, self.hate_efficiency);
        match self.law {
            Law::Square => (-m * moderators, -h * hate),
            Law::Linear => (-m * moderators * hate, -h * hate * moderators),
            Law::Ambush => (-m * moderators * hate, -h * hate),
        }
    }

    /// The law's conserved quantity at the given levels.
    pub fn conserved(&self, hate: f64, moderators: f64) -> f64 {
        let (m, h) = (self.moderator_efficiency, self.hate_efficiency);
        match self.law {
            Law::Square => h * hate * hate - m * moderators * moderators,
            Law::Linear => h * hate - m * moderators,
            Law::Ambush => hate - m / (2.0 * h) * moderators * moderators,
        }
    }

    /// Magnitude of the conserved quantity's terms at t = 0, used to make
    /// drift relative.
    pub fn conserved_scale(&self) -> f64 {
        let (m, h) = (self.moderator_efficiency, self.hate_efficiency);
        let (h0, m0) = (self.initial_hate, self.initial_moderators);
        let s = match self.law {
            Law::Square => (h * h0 * h0).max(m * m0 * m0),
            Law::Linear => (h * h0).max(m * m0),
            Law::Ambush => h0.max(m / (2.0 * h) * m0 * m0),
        };
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    /// Time scale of the fastest initial relative rate: `1/sqrt(mh)` for
    /// the square law, the inverse of the larger per-capita loss rate
    /// otherwise.
    pub fn characteristic_time(&self) -> f64 {
        let (m, h) = (self.moderator_efficiency, self.hate_efficiency);
        let (h0, m0) = (self.initial_hate, self.initial_moderators);
        let rate = match self.law {
            Law::Square => (m * h).sqrt(),
            Law::Linear => (m * m0).max(h * h0),
            Law::Ambush => {
                let per_capita_mod = if m0 > 0.0 { h * h0 / m0 } else { 0.0 };
                (m * m0).max(per_capita_mod)
            }
        };
        if rate > 0.0 {
            1.0 / rate
        } else {
            1.0
        }
    }
}

pub fn predict_outcome(s: &AttritionScenario) -> Result<OutcomePrediction, AttritionError> {
    s.validate()?;
    let (m, h) = (s.moderator_efficiency, s.hate_efficiency);
    let (h0, m0) = (s.initial_hate, s.initial_moderators);
    if h0 == 0.0 {
        return Err(AttritionError::DegenerateScenario("hate activity"));
    }
    if m0 == 0.0 {
        return Err(AttritionError::DegenerateScenario("moderator activity"));
    }
    let margin = -s.conserved(h0, m0);
    let winner = if margin > 0.0 {
        Winner::Moderators
    } else if margin < 0.0 {
        Winner::Hate
    } else {
        Winner::Stalemate
    };
    let survivor_level = match (s.law, winner) {
        (_, Winner::Stalemate) => 0.0,
        (Law::Square, Winner::Moderators) => (margin / m).sqrt(),
        (Law::Square, Winner::Hate) => (-margin / h).sqrt(),
        (Law::Linear, Winner::Moderators) => margin / m,
        (Law::Linear, Winner::Hate) => -margin / h,
        (Law::Ambush, Winner::Moderators) => (2.0 * h / m * margin).sqrt(),
        (Law::Ambush, Winner::Hate) => -margin,
    };
    Ok(OutcomePrediction {
        winner,
        threshold_quantity: margin,
        survivor_level,
    })
}

/// Largest initial hate activity a moderator force can hold to a
/// stalemate under the ambush law: `(m / 2h) M0^2`.
pub fn containment_capacity(moderators0: f64, m: f64, h: f64) -> f64 {
    m / (2.0 * h) * moderators0 * moderators0
}

/// Square-law time at which the losing side reaches zero, if any.
pub fn square_law_extinction_time(s: &AttritionScenario) -> Option<f64> {
    let (m, h) = (s.moderator_efficiency, s.hate_efficiency);
    let (h0, m0) = (s.initial_hate, s.initial_moderators);
    let omega = (m * h).sqrt();
    // H(t) = 0 where tanh(wt) = H0 / (M0 sqrt(m/h)); M(t) = 0 where
    // tanh(wt) = M0 / (H0 sqrt(h/m)). Exactly one ratio is below 1 away
    // from the stalemate line.
    let hate_ratio = if m0 > 0.0 { h0 / (m0 * (m / h).sqrt()) } else { f64::INFINITY };
    let mod_ratio = if h0 > 0.0 { m0 / (h0 * (h / m).sqrt()) } else { f64::INFINITY };
    let r = hate_ratio.min(mod_ratio);
    if r < 1.0 {
        Some(r.atanh() / omega)
    } else if h0 == 0.0 || m0 == 0.0 {
        Some(0.0)
    } else {
        None
    }
}

/// Exact square-law solution
/// `H(t) = H0 cosh(wt) - M0 sqrt(m/h) sinh(wt)`,
/// `M(t) = M0 cosh(wt) - H0 sqrt(h/m) sinh(wt)`, `w = sqrt(mh)`,
/// valid up to the extinction time.
pub fn closed_form(s: &AttritionScenario, t: f64) -> Result<(f64, f64), AttritionError> {
    s.validate()?;
    if s.law != Law::Square {
        return Err(AttritionError::UnsupportedLaw(s.law));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(AttritionError::InvalidParameter(format!("t must be finite and >= 0, got {t}")));
    }
    if let Some(extinction) = square_law_extinction_time(s) {
        if t > extinction {
            return Err(AttritionError::PastExtinction { t, extinction });
        }
    }
    let (m, h) = (s.moderator_efficiency, s.hate_efficiency);
    let (h0, m0) = (s.initial_hate, s.initial_moderators);
    let w = (m * h).sqrt() * t;
    let (c, sh) = (w.cosh(), w.sinh());
    let hate = h0 * c - m0 * (m / h).sqrt() * sh;
    let moderators = m0 * c - h0 * (h / m).sqrt() * sh;
    Ok((hate.max(0.0), moderators.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(law: Law, m: f64, h: f64, h0: f64, m0: f64) -> AttritionScenario {
        AttritionScenario::new(law, m, h, h0, m0).unwrap()
    }

    #[test]
    fn square_threshold_sixteen() {
        assert_eq!(predict_outcome(&sc(Law::Square, 16.1, 1.0, 4.0, 1.0)).unwrap().winner, Winner::Moderators);
        assert_eq!(predict_outcome(&sc(Law::Square, 15.9, 1.0, 4.0, 1.0)).unwrap().winner, Winner::Hate);
        assert_eq!(predict_outcome(&sc(Law::Square, 1.0, 1.0, 3.0, 3.0)).unwrap().winner, Winner::Stalemate);
    }

    #[test]
    fn linear_threshold_four() {
        assert_eq!(predict_outcome(&sc(Law::Linear, 4.1, 1.0, 4.0, 1.0)).unwrap().winner, Winner::Moderators);
        assert_eq!(predict_outcome(&sc(Law::Linear, 3.9, 1.0, 4.0, 1.0)).unwrap().winner, Winner::Hate);
        let p = predict_outcome(&sc(Law::Linear, 2.0, 1.0, 3.0, 2.0)).unwrap();
        assert_eq!(p.winner, Winner::Moderators);
        assert!((p.survivor_level - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ambush_containment() {
        assert_eq!(containment_capacity(10_000.0, 1.0, 1.0), 5e7);
        assert_eq!(containment_capacity(2.0, 1.0, 1.0), 2.0);
        assert_eq!(containment_capacity(3.0, 2.0, 1.0), 9.0);
        let p = predict_outcome(&sc(Law::Ambush, 1.0, 1.0, 5e7, 1e4)).unwrap();
        assert_eq!(p.winner, Winner::Stalemate);
        let p = predict_outcome(&sc(Law::Ambush, 1.0, 1.0, 1.0, 2.0)).unwrap();
        assert_eq!(p.winner, Winner::Moderators);
        assert!((p.survivor_level - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_and_invalid() {
        assert_eq!(
            predict_outcome(&sc(Law::Square, 1.0, 1.0, 0.0, 1.0)),
            Err(AttritionError::DegenerateScenario("hate activity"))
        );
        assert!(AttritionScenario::new(Law::Square, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(AttritionScenario::new(Law::Square, 1.0, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn closed_form_cases() {
        let s = sc(Law::Square, 1.0, 1.0, 1.0, 1.0);
        assert_eq!(closed_form(&s, 0.0).unwrap(), (1.0, 1.0));
        for t in [0.5, 1.0, 3.0] {
            let (hh, mm) = closed_form(&s, t).unwrap();
            assert!((hh - (-t).exp()).abs() < 1e-12);
            assert!((mm - (-t).exp()).abs() < 1e-12);
        }
        let s = sc(Law::Square, 4.0, 1.0, 3.0, 2.0);
        let t_star = square_law_extinction_time(&s).unwrap();
        assert!((t_star - 0.75f64.atanh() / 2.0).abs() < 1e-15);
        let (hh, mm) = closed_form(&s, t_star).unwrap();
        assert!(hh.abs() < 1e-12);
        assert!((mm - 7f64.sqrt() / 2.0).abs() < 1e-12);
        assert!(matches!(closed_form(&s, t_star * 1.01), Err(AttritionError::PastExtinction { .. })));
        assert_eq!(
            closed_form(&sc(Law::Ambush, 1.0, 1.0, 1.0, 1.0), 0.1),
            Err(AttritionError::UnsupportedLaw(Law::Ambush))
        );
    }
}
