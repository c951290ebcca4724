//! One-parameter sweeps over a scenario.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use pa_econ_core::domain::percent;
use pa_econ_core::evaluate::resolve_option;
use pa_econ_core::{evaluate, Catalog, EvaluationError, FarmScenario};

/// Largest grid a sweep accepts.
pub const MAX_POINTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CropRef {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CropField {
    Area,
    Yield,
    Price,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenefitField {
    InputReduction,
    YieldIncrease,
    FuelReduction,
    LabourReduction,
}

/// A scalar addressed by dotted path, e.g. `crops.wheat.price` or
/// `options.0.input-reduction`. Benefit values are in percent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SweepParam {
    DiscountRate,
    Crop(CropRef, CropField),
    Benefit(usize, BenefitField),
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('.').collect();
        let bad = || {
            format!(
                "unknown parameter `{s}`; expected discount-rate, crops.<index|name>.<area|yield|price> \
                 or options.<index>.<input-reduction|yield-increase|fuel-reduction|labour-reduction>"
            )
        };
        match parts.as_slice() {
            ["discount-rate"] => Ok(SweepParam::DiscountRate),
            ["crops", crop, field] => {
                let crop = match crop.parse::<usize>() {
                    Ok(i) => CropRef::Index(i),
                    Err(_) => CropRef::Name((*crop).to_owned()),
                };
                let field = match *field {
                    "area" => CropField::Area,
                    "yield" => CropField::Yield,
                    "price" => CropField::Price,
                    _ => return Err(bad()),
                };
                Ok(SweepParam::Crop(crop, field))
            }
            ["options", index, field] => {
                let index = index.parse::<usize>().map_err(|_| bad())?;
                let field = match *field {
                    "input-reduction" => BenefitField::InputReduction,
                    "yield-increase" => BenefitField::YieldIncrease,
                    "fuel-reduction" => BenefitField::FuelReduction,
                    "labour-reduction" => BenefitField::LabourReduction,
                    _ => return Err(bad()),
                };
                Ok(SweepParam::Benefit(index, field))
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepParam::DiscountRate => f.write_str("discount-rate"),
            SweepParam::Crop(c, field) => {
                let field = match field {
                    CropField::Area => "area",
                    CropField::Yield => "yield",
                    CropField::Price => "price",
                };
                match c {
                    CropRef::Index(i) => write!(f, "crops.{i}.{field}"),
                    CropRef::Name(n) => write!(f, "crops.{n}.{field}"),
                }
            }
            SweepParam::Benefit(i, field) => {
                let field = match field {
                    BenefitField::InputReduction => "input-reduction",
                    BenefitField::YieldIncrease => "yield-increase",
                    BenefitField::FuelReduction => "fuel-reduction",
                    BenefitField::LabourReduction => "labour-reduction",
                };
                write!(f, "options.{i}.{field}")
            }
        }
    }
}

/// Grid points `from, from + step, ..., to`, computed without accumulation.
pub fn grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>, String> {
    if !(from.is_finite() && to.is_finite() && step.is_finite()) {
        return Err("sweep bounds and step must be finite numbers".into());
    }
    if step <= 0.0 {
        return Err(format!("step must be > 0, got {step}"));
    }
    if from > to {
        return Err(format!("from ({from}) must not exceed to ({to})"));
    }
    let intervals = ((to - from) / step * (1.0 + 1e-12)).floor();
    if intervals + 1.0 > MAX_POINTS as f64 {
        return Err(format!("grid would have more than {MAX_POINTS} points"));
    }
    let n = intervals as usize + 1;
    Ok((0..n)
        .map(|i| {
            let v = from + i as f64 * step;
            // drop representation noise such as 0.30000000000000004
            (v * 1e12).round() / 1e12
        })
        .collect())
}

/// Returns a copy of `scenario` with the parameter set to `value`.
pub fn apply(
    scenario: &FarmScenario,
    param: &SweepParam,
    value: f64,
    catalog: &Catalog,
) -> Result<FarmScenario, String> {
    let mut s = scenario.clone();
    match param {
        SweepParam::DiscountRate => s.discount_rate = value,
        SweepParam::Crop(crop, field) => {
            let entry = match crop {
                CropRef::Index(i) => s.crops.get_mut(*i),
                CropRef::Name(n) => s.crops.iter_mut().find(|c| &c.crop == n),
            }
            .ok_or_else(|| format!("scenario has no crop {param}"))?;
            match field {
                CropField::Area => entry.area = value,
                CropField::Yield => entry.yield_t_ha = value,
                CropField::Price => entry.price = value,
            }
        }
        SweepParam::Benefit(i, field) => {
            let spec = scenario
                .options
                .get(*i)
                .ok_or_else(|| format!("scenario has no option {i}"))?;
            let mut values = match spec.benefits {
                Some(b) => b,
                None => {
                    resolve_option(spec, *i, scenario, catalog)
                        .map_err(|e| e.to_string())?
                        .benefits
                        .values
                }
            };
            let fraction = percent::to_fraction(value);
            match field {
                BenefitField::InputReduction => values.input_reduction = fraction,
                BenefitField::YieldIncrease => values.yield_increase = fraction,
                BenefitField::FuelReduction => values.fuel_reduction = fraction,
                BenefitField::LabourReduction => values.labour_reduction = fraction,
            }
            s.options[*i].benefits = Some(values);
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRow {
    pub value: f64,
    pub npv: f64,
    pub irr: Option<f64>,
    pub bcr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Sweep {
    pub param: String,
    pub rows: Vec<SweepRow>,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
pub enum SweepError {
    Setup(String),
    Evaluation { value: f64, error: EvaluationError },
}

impl fmt::Display for SweepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepError::Setup(m) => f.write_str(m),
            SweepError::Evaluation { value, error } => write!(f, "at {value}: {error}"),
        }
    }
}

/// Evaluates the portfolio at every grid point, in parallel, keeping grid order.
pub fn run(
    scenario: &FarmScenario,
    catalog: &Catalog,
    param: &SweepParam,
    points: &[f64],
) -> Result<Sweep, SweepError> {
    let scenarios = points
        .iter()
        .map(|&v| apply(scenario, param, v, catalog))
        .collect::<Result<Vec<_>, _>>()
        .map_err(SweepError::Setup)?;
    let results = scenarios
        .par_iter()
        .zip(points.par_iter())
        .map(|(s, &value)| {
            evaluate(s, catalog).map_err(|error| SweepError::Evaluation { value, error })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<SweepRow> = results
        .iter()
        .zip(points)
        .map(|(r, &value)| SweepRow {
            value,
            npv: r.portfolio.npv,
            irr: r.portfolio.irr,
            bcr: r.portfolio.bcr,
        })
        .collect();
    let mut warnings = Vec::new();
    if *param == SweepParam::DiscountRate {
        let positive = results
            .first()
            .is_some_and(|r| r.portfolio.cash_flows.iter().all(|&f| f > 0.0));
        if positive && rows.windows(2).any(|w| w[1].npv >= w[0].npv) {
            warnings.push(
                "NPV does not decrease with the discount rate although every annual flow is positive; check the input data"
                    .to_owned(),
            );
        }
    }
    Ok(Sweep {
        param: param.to_string(),
        rows,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_both_ends() {
        let g = grid(0.0, 0.10, 0.01).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.03);
        assert_eq!(g[10], 0.10);
        assert_eq!(grid(5.0, 5.0, 1.0).unwrap(), vec![5.0]);
    }

    #[test]
    fn invalid_grids() {
        assert!(grid(0.0, 1.0, 0.0).is_err());
        assert!(grid(0.1, 0.0, 0.01).is_err());
        assert!(grid(0.0, 1.0, -0.1).is_err());
        assert!(grid(0.0, 1e9, 1.0).is_err());
    }

    #[test]
    fn parameter_paths() {
        for p in [
            "discount-rate",
            "crops.0.area",
            "crops.wheat.price",
            "options.2.labour-reduction",
        ] {
            assert_eq!(p.parse::<SweepParam>().unwrap().to_string(), p);
        }
        assert!("crops.0.colour".parse::<SweepParam>().is_err());
        assert!("options.x.input-reduction".parse::<SweepParam>().is_err());
        assert!("horizon".parse::<SweepParam>().is_err());
    }
}
