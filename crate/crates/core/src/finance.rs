//! Pure financial calculations: investment scaling, annual benefit decomposition,
//! constant differential cash flows, NPV, IRR, BCR and physical input savings.
//!
//! Cash flows are end-of-year amounts for years `1..=n`; the investment is paid at
//! year 0. All rates are fractions.

use serde::{Deserialize, Serialize};

use crate::domain::{BenefitProfile, InputCostProfile, InputScope, InputUnit, OperationKind};

/// Farm size the catalog investments are priced for, in hectares.
pub const REFERENCE_AREA_HA: f64 = 50.0;

/// Exponent of the capacity/cost power law.
pub const SCALE_EXPONENT: f64 = 0.6;

/// Lowest rate of the IRR search bracket.
pub const IRR_MIN_RATE: f64 = -0.999;
/// Highest rate of the IRR search bracket.
pub const IRR_MAX_RATE: f64 = 10.0;
const IRR_SCAN_STEP: f64 = 0.01;
const IRR_MIN_WIDTH: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum FinanceError {
    #[error("area must be > 0 ha, got {0}")]
    NonPositiveArea(f64),
    #[error("investment must be >= 0, got {0}")]
    NegativeInvestment(f64),
    #[error("discount rate must be > -1, got {0}")]
    RateOutOfDomain(f64),
    #[error("NPV does not change sign on the IRR search bracket")]
    NoSolution,
    #[error("benefit-to-cost ratio is undefined (zero cost side)")]
    UndefinedRatio,
}

/// Scales a reference-farm investment to `total_area` hectares with the 0.6 power
/// law. Farms at or below the reference size pay the reference price.
pub fn scale_investment(base_investment: f64, total_area: f64) -> Result<f64, FinanceError> {
    if total_area.is_nan() || total_area <= 0.0 {
        return Err(FinanceError::NonPositiveArea(total_area));
    }
    if base_investment.is_nan() || base_investment < 0.0 {
        return Err(FinanceError::NegativeInvestment(base_investment));
    }
    let factor = (total_area / REFERENCE_AREA_HA)
        .max(1.0)
        .powf(SCALE_EXPONENT);
    Ok(base_investment * factor)
}

/// Area, current yield and price of the crop an option is used on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropEconomics {
    /// ha
    pub area: f64,
    /// t/ha
    pub yield_t_ha: f64,
    /// €/t
    pub price: f64,
}

/// Yearly monetary effect of one option, €/yr.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnnualBenefit {
    pub revenue_from_yield: f64,
    pub input_saving: f64,
    pub fuel_saving: f64,
    pub labour_saving: f64,
    pub recurring_cost: f64,
    pub net_flow: f64,
}

impl AnnualBenefit {
    pub fn new(
        revenue_from_yield: f64,
        input_saving: f64,
        fuel_saving: f64,
        labour_saving: f64,
        recurring_cost: f64,
    ) -> Self {
        AnnualBenefit {
            revenue_from_yield,
            input_saving,
            fuel_saving,
            labour_saving,
            recurring_cost,
            net_flow: revenue_from_yield + input_saving + fuel_saving + labour_saving
                - recurring_cost,
        }
    }

    /// Componentwise sum; the net flow is recomputed from the summed components.
    pub fn combine(&self, other: &AnnualBenefit) -> AnnualBenefit {
        AnnualBenefit::new(
            self.revenue_from_yield + other.revenue_from_yield,
            self.input_saving + other.input_saving,
            self.fuel_saving + other.fuel_saving,
            self.labour_saving + other.labour_saving,
            self.recurring_cost + other.recurring_cost,
        )
    }

    pub fn with_recurring_cost(&self, recurring_cost: f64) -> AnnualBenefit {
        AnnualBenefit::new(
            self.revenue_from_yield,
            self.input_saving,
            self.fuel_saving,
            self.labour_saving,
            recurring_cost,
        )
    }
}

/// Operations whose inputs an option's input reduction applies to.
///
/// An operation-specific reduction hits the option's own operation (if it consumes
/// an input). An all-inputs reduction hits every seed, fertiliser and pesticide
/// operation among `farm_operations`.
pub fn affected_operations(
    scope: InputScope,
    own: OperationKind,
    farm_operations: &[OperationKind],
) -> Vec<OperationKind> {
    match scope {
        InputScope::OperationSpecific => own.input_category().map(|_| own).into_iter().collect(),
        InputScope::AllInputs => {
            let mut ops: Vec<OperationKind> = farm_operations
                .iter()
                .copied()
                .filter(|op| op.input_category().is_some_and(|c| c.in_all_inputs_scope()))
                .collect();
            ops.sort();
            ops.dedup();
            ops
        }
    }
}

/// Physical input saved in one category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InputSaved {
    pub input: String,
    pub operation: OperationKind,
    /// Per year, in `unit`.
    pub quantity: f64,
    pub unit: InputUnit,
}

/// An input an option reduces, with the profile that prices it.
#[derive(Debug, Clone, Copy)]
pub struct AffectedInput<'a> {
    pub operation: OperationKind,
    pub profile: &'a InputCostProfile,
}

fn saved_quantity(profile: &InputCostProfile, area: f64, reduction: f64) -> f64 {
    profile.application_rate * profile.treatments_per_year * area * reduction
}

/// Yearly input quantities saved on `area` hectares, one entry per affected input.
pub fn input_saved_quantity(
    benefits: &BenefitProfile,
    affected: &[AffectedInput<'_>],
    area: f64,
) -> Vec<InputSaved> {
    affected
        .iter()
        .map(|a| InputSaved {
            input: a.profile.input.clone(),
            operation: a.operation,
            quantity: saved_quantity(a.profile, area, benefits.values.input_reduction),
            unit: a.profile.unit,
        })
        .collect()
}

/// Decomposes the yearly benefit of an option on one crop.
///
/// `operation_profile` is the profile of the option's own operation and drives fuel
/// and labour savings. `affected` lists the inputs the input reduction applies to.
pub fn annual_benefit(
    crop: &CropEconomics,
    benefits: &BenefitProfile,
    operation_profile: &InputCostProfile,
    affected: &[AffectedInput<'_>],
    recurring_cost: f64,
) -> AnnualBenefit {
    let b = &benefits.values;
    let revenue_from_yield = crop.area * crop.yield_t_ha * crop.price * b.yield_increase;
    let input_saving = affected
        .iter()
        .map(|a| saved_quantity(a.profile, crop.area, b.input_reduction) * a.profile.input_price)
        .sum();
    let p = operation_profile;
    let fuel_saving =
        p.fuel_price * p.fuel_consumption * p.treatments_per_year * crop.area * b.fuel_reduction;
    let labour_saving =
        p.labour_cost * p.labour_hours * p.treatments_per_year * crop.area * b.labour_reduction;
    AnnualBenefit::new(
        revenue_from_yield,
        input_saving,
        fuel_saving,
        labour_saving,
        recurring_cost,
    )
}

/// Constant yearly flows over the horizon.
pub fn cash_flows(benefit: &AnnualBenefit, horizon_years: u32) -> Vec<f64> {
    vec![benefit.net_flow; horizon_years as usize]
}

fn check_rate(rate: f64) -> Result<(), FinanceError> {
    if rate > -1.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(FinanceError::RateOutOfDomain(rate))
    }
}

fn discounted_sum(flows: &[f64], rate: f64) -> f64 {
    let base = 1.0 + rate;
    flows
        .iter()
        .zip(1..)
        .map(|(flow, t)| flow / base.powi(t))
        .sum()
}

fn npv_unchecked(scaled_investment: f64, flows: &[f64], rate: f64) -> f64 {
    -scaled_investment + discounted_sum(flows, rate)
}

/// Net present value with end-of-year discounting starting at year 1.
pub fn npv(scaled_investment: f64, flows: &[f64], discount_rate: f64) -> Result<f64, FinanceError> {
    check_rate(discount_rate)?;
    Ok(npv_unchecked(scaled_investment, flows, discount_rate))
}

/// Residual below which an IRR is accepted.
pub fn irr_tolerance(scaled_investment: f64) -> f64 {
    1e-9 * scaled_investment.abs().max(1.0)
}

/// Internal rate of return: the lowest rate on `(-0.999, 10]` where NPV crosses zero.
///
/// The bracket is scanned in steps of 0.01 and the first sign change is refined by
/// bisection.
pub fn irr(scaled_investment: f64, flows: &[f64]) -> Result<f64, FinanceError> {
    let f = |r: f64| npv_unchecked(scaled_investment, flows, r);
    let steps = ((IRR_MAX_RATE - IRR_MIN_RATE) / IRR_SCAN_STEP).ceil() as usize;

    let mut lo = IRR_MIN_RATE;
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    for i in 1..=steps {
        let hi = (IRR_MIN_RATE + i as f64 * IRR_SCAN_STEP).min(IRR_MAX_RATE);
        let f_hi = f(hi);
        if f_hi == 0.0 {
            return Ok(hi);
        }
        if f_lo.is_sign_negative() != f_hi.is_sign_negative() {
            return Ok(bisect(f, lo, hi, f_lo, irr_tolerance(scaled_investment)));
        }
        lo = hi;
        f_lo = f_hi;
    }
    Err(FinanceError::NoSolution)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64, tol: f64) -> f64 {
    let mut f_hi = f(hi);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.is_sign_negative() == f_lo.is_sign_negative() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
        if hi - lo <= IRR_MIN_WIDTH && f_lo.abs().min(f_hi.abs()) < tol {
            break;
        }
    }
    if f_lo.abs() <= f_hi.abs() {
        lo
    } else {
        hi
    }
}

/// Discounted positive flows over investment plus discounted magnitudes of negative
/// flows.
pub fn bcr(scaled_investment: f64, flows: &[f64], discount_rate: f64) -> Result<f64, FinanceError> {
    check_rate(discount_rate)?;
    let positive: Vec<f64> = flows.iter().map(|f| f.max(0.0)).collect();
    let negative: Vec<f64> = flows.iter().map(|f| (-f).max(0.0)).collect();
    let benefits = discounted_sum(&positive, discount_rate);
    let costs = scaled_investment + discounted_sum(&negative, discount_rate);
    if costs == 0.0 {
        return Err(FinanceError::UndefinedRatio);
    }
    Ok(benefits / costs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BenefitValues, InputScope};

    fn profile() -> InputCostProfile {
        InputCostProfile {
            input: "mineral nitrogen".into(),
            unit: InputUnit::Kilogram,
            input_price: 1.1,
            application_rate: 150.0,
            treatments_per_year: 2.0,
            fuel_price: 1.3,
            fuel_consumption: 2.0,
            labour_cost: 20.0,
            labour_hours: 1.0,
        }
    }

    fn benefits(input: f64, yld: f64, fuel: f64, labour: f64) -> BenefitProfile {
        BenefitProfile {
            values: BenefitValues {
                input_reduction: input,
                yield_increase: yld,
                fuel_reduction: fuel,
                labour_reduction: labour,
            },
            input_scope: InputScope::OperationSpecific,
        }
    }

    #[test]
    fn scaling_identity_clamp_and_growth() {
        assert_eq!(scale_investment(10000.0, 50.0).unwrap(), 10000.0);
        assert_eq!(scale_investment(10000.0, 25.0).unwrap(), 10000.0);
        // 10000 * 2^0.6, evaluated with mpmath at 40 digits
        let expected = 15157.16566510398;
        let got = scale_investment(10000.0, 100.0).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-6, "{got}");
        assert!(matches!(
            scale_investment(1.0, 0.0),
            Err(FinanceError::NonPositiveArea(_))
        ));
        assert!(scale_investment(1.0, -3.0).is_err());
    }

    #[test]
    fn revenue_from_yield_increase() {
        let crop = CropEconomics {
            area: 100.0,
            yield_t_ha: 8.0,
            price: 180.0,
        };
        let b = annual_benefit(&crop, &benefits(0.0, 0.03, 0.0, 0.0), &profile(), &[], 0.0);
        // 100 * 8 * 180 * 0.03
        assert!((b.revenue_from_yield - 4320.0).abs() < 1e-9);
        assert_eq!(b.net_flow, b.revenue_from_yield);
    }

    #[test]
    fn hoeing_labour_saving() {
        let crop = CropEconomics {
            area: 40.0,
            yield_t_ha: 8.0,
            price: 180.0,
        };
        let mut p = profile();
        p.treatments_per_year = 1.0;
        let b = annual_benefit(&crop, &benefits(0.0, 0.0, 0.0, 0.5), &p, &[], 0.0);
        // 20 * 1 * 1 * 40 * 0.5
        assert_eq!(b.labour_saving, 400.0);
    }

    #[test]
    fn zero_profile_gives_zero_components() {
        let crop = CropEconomics {
            area: 40.0,
            yield_t_ha: 8.0,
            price: 180.0,
        };
        let p = profile();
        let affected = [AffectedInput {
            operation: OperationKind::Fertilization,
            profile: &p,
        }];
        let b = annual_benefit(&crop, &benefits(0.0, 0.0, 0.0, 0.0), &p, &affected, 0.0);
        assert_eq!(b, AnnualBenefit::default());
    }

    #[test]
    fn saved_nitrogen_quantity() {
        let p = profile();
        let affected = [AffectedInput {
            operation: OperationKind::Fertilization,
            profile: &p,
        }];
        let saved = input_saved_quantity(&benefits(0.03, 0.0, 0.0, 0.0), &affected, 100.0);
        // 150 kg/ha * 2 * 100 ha * 0.03
        assert_eq!(saved.len(), 1);
        assert!((saved[0].quantity - 900.0).abs() < 1e-9);
        assert_eq!(saved[0].unit, InputUnit::Kilogram);
        let none = input_saved_quantity(&benefits(0.0, 0.0, 0.0, 0.0), &affected, 100.0);
        assert_eq!(none[0].quantity, 0.0);
    }

    #[test]
    fn all_inputs_scope_covers_seed_fertiliser_pesticide() {
        use OperationKind::*;
        let farm = [
            Liming,
            SprayingHerbicide,
            Seeding,
            Fertilization,
            MechanicalWeeding,
        ];
        assert_eq!(
            affected_operations(InputScope::AllInputs, Seeding, &farm),
            [Seeding, Fertilization, SprayingHerbicide]
        );
        assert_eq!(
            affected_operations(InputScope::OperationSpecific, Liming, &farm),
            [Liming]
        );
        assert!(
            affected_operations(InputScope::OperationSpecific, MechanicalWeeding, &farm).is_empty()
        );
    }

    #[test]
    fn constant_flows() {
        let b = AnnualBenefit::new(300.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(cash_flows(&b, 8), vec![300.0; 8]);
        assert_eq!(cash_flows(&AnnualBenefit::default(), 8), vec![0.0; 8]);
        let negative = AnnualBenefit::new(0.0, 25.0, 0.0, 0.0, 75.0);
        assert_eq!(cash_flows(&negative, 3), vec![-50.0; 3]);
    }

    #[test]
    fn npv_examples() {
        assert_eq!(npv(0.0, &[], 0.3).unwrap(), 0.0);
        assert_eq!(npv(1000.0, &[300.0; 8], 0.0).unwrap(), 1400.0);
        // 300 * sum 1.05^-t - 1000, mpmath at 40 digits
        let v = npv(1000.0, &[300.0; 8], 0.05).unwrap();
        assert!((v - 938.9638278278764).abs() < 1e-9, "{v}");
        assert!(matches!(
            npv(1.0, &[1.0], -1.0),
            Err(FinanceError::RateOutOfDomain(_))
        ));
    }

    #[test]
    fn irr_examples() {
        let r = irr(1000.0, &[300.0; 8]).unwrap();
        assert!((r - 0.24951034453128796).abs() < 1e-9, "{r}");
        let r = irr(1000.0, &[1050.0, 0.0, 0.0]).unwrap();
        assert!((r - 0.05).abs() < 1e-9, "{r}");
        assert_eq!(irr(0.0, &[300.0; 8]), Err(FinanceError::NoSolution));
        assert_eq!(irr(100.0, &[-5.0; 4]), Err(FinanceError::NoSolution));
    }

    #[test]
    fn bcr_examples() {
        let b = bcr(1000.0, &[300.0; 8], 0.05).unwrap();
        assert!((b - 1.938963827827876).abs() < 1e-12);
        assert_eq!(bcr(0.0, &[0.0; 8], 0.05), Err(FinanceError::UndefinedRatio));
        // negative flows count on the cost side
        let b = bcr(0.0, &[-10.0, 20.0], 0.0).unwrap();
        assert_eq!(b, 2.0);
    }
}
