use std::io::{self, Write};

use serde::Serialize;

use super::{integrate, predict_outcome, AttritionError, AttritionScenario, Law, Outcome, OutcomePrediction, Winner};
use crate::exec::Execution;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub law: Law,
    pub hate_efficiency: f64,
    pub initial_moderators: f64,
    /// Column axis: moderator/hate efficiency ratios `m / h`.
    pub efficiency_ratios: Vec<f64>,
    /// Row axis: hate/moderator size ratios `H0 / M0`.
    pub size_ratios: Vec<f64>,
    /// Integration step as a fraction of each cell's characteristic time.
    pub dt_factor: f64,
    /// Integration horizon in characteristic times.
    pub horizon_factor: f64,
}

impl SweepSpec {
    pub fn new(law: Law, efficiency_ratios: Vec<f64>, size_ratios: Vec<f64>) -> Self {
        SweepSpec {
            law,
            hate_efficiency: 1.0,
            initial_moderators: 1.0,
            efficiency_ratios,
            size_ratios,
            dt_factor: 1e-2,
            horizon_factor: 2e3,
        }
    }

    pub fn scenario(&self, efficiency_ratio: f64, size_ratio: f64) -> AttritionScenario {
        AttritionScenario {
            law: self.law,
            moderator_efficiency: efficiency_ratio * self.hate_efficiency,
            hate_efficiency: self.hate_efficiency,
            initial_hate: size_ratio * self.initial_moderators,
            initial_moderators: self.initial_moderators,
        }
    }
}

/// Efficiency ratio `m / h` at which the predicted winner flips for a given
/// size ratio `H0 / M0`.
pub fn analytic_boundary(law: Law, size_ratio: f64, initial_moderators: f64) -> f64 {
    match law {
        Law::Square => size_ratio * size_ratio,
        Law::Linear => size_ratio,
        Law::Ambush => 2.0 * size_ratio / initial_moderators,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub efficiency_ratio: f64,
    pub size_ratio: f64,
    pub prediction: OutcomePrediction,
    pub numeric: Outcome,
    /// Numeric outcome decided and different from the prediction.
    pub disagreement: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub spec: SweepSpec,
    /// Row-major: one row per size ratio, one column per efficiency ratio.
    pub cells: Vec<SweepCell>,
    pub disagreements: usize,
    pub undetermined: usize,
}

impl SweepGrid {
    pub fn cell(&self, size_idx: usize, ratio_idx: usize) -> &SweepCell {
        &self.cells[size_idx * self.spec.efficiency_ratios.len() + ratio_idx]
    }

    pub fn row(&self, size_idx: usize) -> &[SweepCell] {
        let w = self.spec.efficiency_ratios.len();
        &self.cells[size_idx * w..(size_idx + 1) * w]
    }

    /// Adjacent efficiency ratios bracketing the first change of numeric
    /// winner along a row, if the row has one.
    pub fn numeric_flip(&self, size_idx: usize) -> Option<(f64, f64)> {
        self.row(size_idx).windows(2).find_map(|w| {
            let (a, b) = (w[0].numeric.winner(), w[1].numeric.winner());
            (a.is_some() && b.is_some() && a != b).then_some((w[0].efficiency_ratio, w[1].efficiency_ratio))
        })
    }
}

pub fn sweep(spec: &SweepSpec) -> Result<SweepGrid, AttritionError> {
    sweep_with(Execution::default(), spec)
}

fn run_cell(spec: &SweepSpec, efficiency_ratio: f64, size_ratio: f64) -> Result<SweepCell, AttritionError> {
    let s = spec.scenario(efficiency_ratio, size_ratio);
    let prediction = predict_outcome(&s)?;
    let tc = s.characteristic_time();
    let mut dt = spec.dt_factor * tc;
    let mut attempts = 0;
    let tr = loop {
        match integrate(&s, dt, spec.horizon_factor * tc) {
            Err(AttritionError::StepTooLarge { suggested_dt, .. }) if attempts < 3 => {
                dt = suggested_dt;
                attempts += 1;
            }
            other => break other?,
        }
    };
    let disagreement = matches!(tr.outcome.winner(), Some(w) if w != prediction.winner);
    Ok(SweepCell {
        efficiency_ratio,
        size_ratio,
        prediction,
        numeric: tr.outcome,
        disagreement,
    })
}

/// Predicts and integrates every `(size ratio, efficiency ratio)` cell.
pub fn sweep_with(exec: Execution, spec: &SweepSpec) -> Result<SweepGrid, AttritionError> {
    if spec.efficiency_ratios.is_empty() || spec.size_ratios.is_empty() {
        return Err(AttritionError::InvalidParameter("sweep axes must be nonempty".into()));
    }
    let bad = |xs: &[f64]| xs.iter().any(|&x| !(x.is_finite() && x > 0.0));
    if bad(&spec.efficiency_ratios) || bad(&spec.size_ratios) {
        return Err(AttritionError::InvalidParameter("sweep axis values must be positive".into()));
    }
    if !(spec.dt_factor > 0.0 && spec.horizon_factor > 0.0) {
        return Err(AttritionError::InvalidParameter("dt and horizon factors must be positive".into()));
    }
    let w = spec.efficiency_ratios.len();
    let cells = exec
        .map_range(w * spec.size_ratios.len(), |i| {
            run_cell(spec, spec.efficiency_ratios[i % w], spec.size_ratios[i / w])
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepGrid {
        disagreements: cells.iter().filter(|c| c.disagreement).count(),
        undetermined: cells.iter().filter(|c| c.numeric == Outcome::Undetermined).count(),
        spec: spec.clone(),
        cells,
    })
}

fn winner_name(w: Winner) -> &'static str {
    match w {
        Winner::Moderators => "moderators",
        Winner::Hate => "hate",
        Winner::Stalemate => "stalemate",
    }
}

fn outcome_name(o: Outcome) -> &'static str {
    match o {
        Outcome::HateExtinct => "hate_extinct",
        Outcome::ModeratorsExtinct => "moderators_extinct",
        Outcome::Stalemate => "stalemate",
        Outcome::Undetermined => "undetermined",
    }
}

pub fn write_sweep_csv<W: Write>(grid: &SweepGrid, mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "law,efficiency_ratio,size_ratio,predicted_winner,threshold_quantity,survivor_level,numeric_outcome,disagreement"
    )?;
    for c in &grid.cells {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            grid.spec.law.name(),
            c.efficiency_ratio,
            c.size_ratio,
            winner_name(c.prediction.winner),
            c.prediction.threshold_quantity,
            c.prediction.survivor_level,
            outcome_name(c.numeric),
            c.disagreement
        )?;
    }
    Ok(())
}
