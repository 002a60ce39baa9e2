use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of the horizon an explore-then-exploit schedule holds its start value.
pub const ETE_HOLD_FRACTION: f64 = 0.6;
/// Default position of the one-cycle peak, as a fraction of the horizon.
pub const CLR1_PEAK_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScheduleShape {
    Constant,
    /// Straight line from start to end over the horizon.
    Linear,
    /// Start value for `hold · horizon`, then linear to the end value.
    Ete { hold: f64 },
    /// Linear start → peak at `peak_time · horizon`, then linear peak → end.
    Clr1 { peak_time: f64 },
    /// Piecewise-linear interpolation of per-player knots.
    Table { times: Vec<f64>, values: Vec<Vec<f64>> },
}

/// Per-player exploration rates as a function of integration time.
///
/// Values are clamped at 0 and saturate at the end value past the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationSchedule {
    pub shape: ScheduleShape,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    /// Only used by the one-cycle shape.
    pub peak: Vec<f64>,
    pub horizon: f64,
}

impl ExplorationSchedule {
    pub fn constant(values: Vec<f64>) -> Result<Self> {
        Self::build(ScheduleShape::Constant, values.clone(), values, Vec::new(), f64::INFINITY)
    }

    pub fn linear(start: Vec<f64>, end: Vec<f64>, horizon: f64) -> Result<Self> {
        Self::build(ScheduleShape::Linear, start, end, Vec::new(), horizon)
    }

    /// Explore-then-exploit: hold for the first 60% of the horizon.
    pub fn ete(start: Vec<f64>, end: Vec<f64>, horizon: f64) -> Result<Self> {
        Self::build(ScheduleShape::Ete { hold: ETE_HOLD_FRACTION }, start, end, Vec::new(), horizon)
    }

    /// One learning-rate cycle peaking halfway through the horizon.
    pub fn clr1(start: Vec<f64>, peak: Vec<f64>, end: Vec<f64>, horizon: f64) -> Result<Self> {
        Self::build(ScheduleShape::Clr1 { peak_time: CLR1_PEAK_FRACTION }, start, end, peak, horizon)
    }

    /// Knots `(times[i], values[i])`, where `values[i]` holds one rate per player.
    pub fn table(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::Config("a table schedule needs one value row per knot".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("table knots must be finite and strictly increasing".into()));
        }
        let start = values[0].clone();
        let end = values[values.len() - 1].clone();
        let horizon = times[times.len() - 1];
        if values.iter().any(|row| row.len() != start.len()) {
            return Err(Error::Config("every table row needs one value per player".into()));
        }
        check_values(values.iter().flatten())?;
        Self::build(ScheduleShape::Table { times, values }, start, end, Vec::new(), horizon)
    }

    fn build(shape: ScheduleShape, start: Vec<f64>, end: Vec<f64>, peak: Vec<f64>, horizon: f64) -> Result<Self> {
        if start.is_empty() || start.len() != end.len() {
            return Err(Error::Config("start and end need one value per player".into()));
        }
        if matches!(shape, ScheduleShape::Clr1 { .. }) && peak.len() != start.len() {
            return Err(Error::Config("peak needs one value per player".into()));
        }
        if !(horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        check_values(start.iter().chain(&end).chain(&peak))?;
        Ok(Self { shape, start, end, peak, horizon })
    }

    pub fn num_players(&self) -> usize {
        self.start.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Rates at time `t`.
    pub fn value(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.num_players()];
        self.temperatures_into(t, &mut out);
        out
    }

    pub fn temperatures_into(&self, t: f64, out: &mut [f64]) {
        let s = (t / self.horizon).clamp(0.0, 1.0);
        let lerp = |a: f64, b: f64, f: f64| a + (b - a) * f.clamp(0.0, 1.0);
        for (k, o) in out.iter_mut().enumerate() {
            let (a, b) = (self.start[k], self.end[k]);
            let v = match &self.shape {
                ScheduleShape::Constant => a,
                ScheduleShape::Linear => lerp(a, b, s),
                ScheduleShape::Ete { hold } => {
                    if s <= *hold {
                        a
                    } else {
                        lerp(a, b, (s - hold) / (1.0 - hold))
                    }
                }
                ScheduleShape::Clr1 { peak_time } => {
                    if s <= *peak_time {
                        lerp(a, self.peak[k], s / peak_time)
                    } else {
                        lerp(self.peak[k], b, (s - peak_time) / (1.0 - peak_time))
                    }
                }
                ScheduleShape::Table { times, values } => {
                    let i = times.partition_point(|&x| x <= t);
                    if i == 0 {
                        values[0][k]
                    } else if i == times.len() {
                        values[i - 1][k]
                    } else {
                        let f = (t - times[i - 1]) / (times[i] - times[i - 1]);
                        lerp(values[i - 1][k], values[i][k], f)
                    }
                }
            };
            *o = v.max(0.0);
        }
    }
}

fn check_values<'a>(mut values: impl Iterator<Item = &'a f64>) -> Result<()> {
    match values.find(|v| !(**v >= 0.0 && v.is_finite())) {
        Some(v) => Err(Error::Config(format!("exploration rates must be finite and nonnegative, got {v}"))),
        None => Ok(()),
    }
}
