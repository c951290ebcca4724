//! Whole-scenario evaluation: resolves each option against the catalog, evaluates it
//! standalone, then evaluates the portfolio with shared support technologies paid
//! for once.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::catalog::{fmt_supports, Catalog, Component, LookupError};
use crate::domain::{
    validate_scenario, BenefitProfile, CropEntry, FarmScenario, MainTechnology, OperationKind,
    OptionSpec, SupportTechnology, ValueSource, Violation,
};
use crate::finance::{
    self, affected_operations, annual_benefit, input_saved_quantity, scale_investment,
    AffectedInput, AnnualBenefit, CropEconomics, InputSaved,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvaluationError {
    #[error("scenario has {} violation(s): {}", .0.len(), join_violations(.0))]
    Validation(Vec<Violation>),
    #[error("options[{index}]: {reason}")]
    UnresolvableOption { index: usize, reason: String },
    #[error(transparent)]
    MissingProfile(LookupError),
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Where the values of a resolved option came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OptionProvenance {
    pub benefits: ValueSource,
    pub investment: ValueSource,
    pub recurring_cost: ValueSource,
}

/// A selected technology with every value the evaluation uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TechnologyOption {
    pub main: MainTechnology,
    pub supports: BTreeSet<SupportTechnology>,
    pub operation: OperationKind,
    pub benefits: BenefitProfile,
    /// € at the reference farm size.
    pub main_investment: f64,
    /// € at the reference farm size, per support technology.
    pub support_investments: BTreeMap<SupportTechnology, f64>,
    /// €/yr
    pub recurring_cost: f64,
    pub crops: Vec<String>,
    pub provenance: OptionProvenance,
}

impl TechnologyOption {
    /// Unscaled investment of the whole combination.
    pub fn base_investment(&self) -> f64 {
        self.support_investments
            .values()
            .fold(self.main_investment, |acc, v| acc + v)
    }

    pub fn display_name(&self) -> String {
        let mut name = self.main.label().to_owned();
        if !self.supports.is_empty() {
            let supports: Vec<_> = self.supports.iter().map(|s| s.label()).collect();
            name.push_str(" + ");
            name.push_str(&supports.join(", "));
        }
        name
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OptionResult {
    pub option: TechnologyOption,
    /// ha the option works.
    pub area: f64,
    /// I′, €
    pub scaled_investment: f64,
    pub annual: AnnualBenefit,
    pub cash_flows: Vec<f64>,
    pub npv: f64,
    pub irr: Option<f64>,
    pub bcr: Option<f64>,
    pub input_saved: Vec<InputSaved>,
}

/// A support technology in the portfolio and the options sharing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SupportUse {
    pub support: SupportTechnology,
    /// Indexes into the option list.
    pub options: Vec<usize>,
    /// ha of the union of crops worked by those options.
    pub area: f64,
    /// € counted once for the portfolio.
    pub scaled_investment: f64,
    /// € saved against buying the support separately for each option.
    pub saving: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PortfolioResult {
    pub scaled_investment: f64,
    /// Σ of standalone option investments, before deduplication.
    pub standalone_investment: f64,
    pub supports: Vec<SupportUse>,
    pub annual: AnnualBenefit,
    pub cash_flows: Vec<f64>,
    pub npv: f64,
    pub irr: Option<f64>,
    pub bcr: Option<f64>,
    pub input_saved: Vec<InputSaved>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvaluationResult {
    /// The evaluated input with every default filled in.
    pub scenario: FarmScenario,
    pub catalog_version: String,
    /// Regional catalog yield and price of each builtin crop in the scenario.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub crop_defaults: Vec<CropReference>,
    pub options: Vec<OptionResult>,
    pub portfolio: PortfolioResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CropReference {
    pub crop: String,
    /// t/ha
    #[serde(rename = "yield")]
    pub yield_t_ha: f64,
    /// €/t
    pub price: f64,
}

fn unresolvable(index: usize, reason: impl Into<String>) -> EvaluationError {
    EvaluationError::UnresolvableOption {
        index,
        reason: reason.into(),
    }
}

/// Fills an option's missing values from the catalog.
pub fn resolve_option(
    spec: &OptionSpec,
    index: usize,
    scenario: &FarmScenario,
    catalog: &Catalog,
) -> Result<TechnologyOption, EvaluationError> {
    if !catalog.can_perform(spec.main, spec.operation) {
        return Err(unresolvable(
            index,
            format!("{} cannot perform {}", spec.main, spec.operation),
        ));
    }

    let (benefits, benefit_source) = match &spec.benefits {
        Some(values) => (
            BenefitProfile::for_main(spec.main, *values),
            ValueSource::User,
        ),
        None => match catalog.default_benefits(spec.main, &spec.supports, spec.operation) {
            Ok(profile) => (profile, ValueSource::Catalog),
            Err(_) => {
                return Err(unresolvable(
                    index,
                    format!(
                        "{} [{}] on {} has no default benefits; supply `benefits`",
                        spec.main,
                        fmt_supports(&spec.supports),
                        spec.operation
                    ),
                ))
            }
        },
    };

    // placeholder status of any catalog entry used taints the whole combination
    let mut catalog_source = ValueSource::Catalog;
    let mut user_investment = false;
    let mut catalog_recurring = 0.0;
    let mut component = |component: Component, user: Option<f64>| {
        let entry = catalog.investment(component);
        if let Ok(entry) = entry {
            catalog_recurring += entry.recurring_cost;
            if entry.provenance == ValueSource::Placeholder {
                catalog_source = ValueSource::Placeholder;
            }
        }
        match (user, entry) {
            (Some(value), _) => {
                user_investment = true;
                Ok(value)
            }
            (None, Ok(entry)) => Ok(entry.base_investment),
            (None, Err(e)) => Err(unresolvable(index, e.to_string())),
        }
    };

    let main_investment = component(Component::Main(spec.main), spec.main_investment)?;
    let mut support_investments = BTreeMap::new();
    for &support in &spec.supports {
        let user = spec.support_investments.get(&support).copied();
        support_investments.insert(support, component(Component::Support(support), user)?);
    }

    let (recurring_cost, recurring_source) = match spec.recurring_cost {
        Some(value) => (value, ValueSource::User),
        None => (catalog_recurring, catalog_source),
    };
    let investment_source = if user_investment {
        ValueSource::User
    } else {
        catalog_source
    };

    let crops = if spec.crops.is_empty() {
        scenario.crops.iter().map(|c| c.crop.clone()).collect()
    } else {
        spec.crops.clone()
    };

    Ok(TechnologyOption {
        main: spec.main,
        supports: spec.supports.clone(),
        operation: spec.operation,
        benefits,
        main_investment,
        support_investments,
        recurring_cost,
        crops,
        provenance: OptionProvenance {
            benefits: benefit_source,
            investment: investment_source,
            recurring_cost: recurring_source,
        },
    })
}

fn merge_saved(into: &mut Vec<InputSaved>, item: &InputSaved) {
    match into
        .iter_mut()
        .find(|s| s.operation == item.operation && s.input == item.input && s.unit == item.unit)
    {
        Some(existing) => existing.quantity += item.quantity,
        None => into.push(item.clone()),
    }
}

fn option_crops<'a>(scenario: &'a FarmScenario, option: &TechnologyOption) -> Vec<&'a CropEntry> {
    option
        .crops
        .iter()
        .filter_map(|name| scenario.crop(name))
        .collect()
}

fn scaled_components(option: &TechnologyOption, area: f64) -> Result<f64, EvaluationError> {
    let mut total = scale_investment(option.main_investment, area).map_err(internal)?;
    for &value in option.support_investments.values() {
        total += scale_investment(value, area).map_err(internal)?;
    }
    Ok(total)
}

// Inputs are validated before any finance call, so these cannot fail.
fn internal(e: finance::FinanceError) -> EvaluationError {
    EvaluationError::Validation(vec![Violation::new("scenario", e.to_string())])
}

fn evaluate_option(
    scenario: &FarmScenario,
    catalog: &Catalog,
    option: TechnologyOption,
    farm_operations: &[OperationKind],
) -> Result<OptionResult, EvaluationError> {
    let crops = option_crops(scenario, &option);
    let area: f64 = crops.iter().map(|c| c.area).sum();
    let affected_ops = affected_operations(
        option.benefits.input_scope,
        option.operation,
        farm_operations,
    );

    let mut annual = AnnualBenefit::default();
    let mut input_saved = Vec::new();
    for crop in crops {
        let own = catalog
            .cost_profile(
                scenario.region,
                crop,
                option.operation,
                &scenario.cost_overrides,
            )
            .map_err(EvaluationError::MissingProfile)?;
        let mut profiles = Vec::with_capacity(affected_ops.len());
        for &op in &affected_ops {
            if op == option.operation {
                profiles.push((op, own.clone()));
                continue;
            }
            match catalog.cost_profile(scenario.region, crop, op, &scenario.cost_overrides) {
                Ok(p) => profiles.push((op, p)),
                // custom crops only carry the operations they actually use
                Err(_) if crop.custom => {}
                Err(e) => return Err(EvaluationError::MissingProfile(e)),
            }
        }
        let affected: Vec<AffectedInput<'_>> = profiles
            .iter()
            .map(|(operation, profile)| AffectedInput {
                operation: *operation,
                profile,
            })
            .collect();
        let economics = CropEconomics {
            area: crop.area,
            yield_t_ha: crop.yield_t_ha,
            price: crop.price,
        };
        let crop_benefit = annual_benefit(&economics, &option.benefits, &own, &affected, 0.0);
        annual = annual.combine(&crop_benefit);
        for saved in input_saved_quantity(&option.benefits, &affected, crop.area) {
            merge_saved(&mut input_saved, &saved);
        }
    }
    let annual = annual.with_recurring_cost(option.recurring_cost);

    let scaled_investment = scaled_components(&option, area)?;
    let cash_flows = finance::cash_flows(&annual, scenario.horizon_years);
    let npv =
        finance::npv(scaled_investment, &cash_flows, scenario.discount_rate).map_err(internal)?;
    let irr = finance::irr(scaled_investment, &cash_flows).ok();
    let bcr = finance::bcr(scaled_investment, &cash_flows, scenario.discount_rate).ok();

    Ok(OptionResult {
        option,
        area,
        scaled_investment,
        annual,
        cash_flows,
        npv,
        irr,
        bcr,
        input_saved,
    })
}

fn evaluate_portfolio(
    scenario: &FarmScenario,
    options: &[OptionResult],
) -> Result<PortfolioResult, EvaluationError> {
    // each support is bought once, at the first using option's price, for the
    // union of the areas its options work
    let mut supports: Vec<SupportUse> = Vec::new();
    for (i, result) in options.iter().enumerate() {
        for &support in &result.option.supports {
            match supports.iter_mut().find(|u| u.support == support) {
                Some(used) => used.options.push(i),
                None => supports.push(SupportUse {
                    support,
                    options: vec![i],
                    area: 0.0,
                    scaled_investment: 0.0,
                    saving: 0.0,
                }),
            }
        }
    }
    for used in &mut supports {
        let mut crops: Vec<&str> = Vec::new();
        for &i in &used.options {
            for name in &options[i].option.crops {
                if !crops.contains(&name.as_str()) {
                    crops.push(name);
                }
            }
        }
        used.area = crops
            .iter()
            .filter_map(|name| scenario.crop(name))
            .map(|c| c.area)
            .sum();
        let owner = &options[used.options[0]].option;
        used.scaled_investment =
            scale_investment(owner.support_investments[&used.support], used.area)
                .map_err(internal)?;
    }

    // what sharing saves against paying for the support once per option
    for used in supports.iter_mut().filter(|u| u.options.len() > 1) {
        let mut separate = 0.0;
        for &i in &used.options {
            let r = &options[i];
            separate += scale_investment(r.option.support_investments[&used.support], r.area)
                .map_err(internal)?;
        }
        used.saving = separate - used.scaled_investment;
    }
    let standalone_investment = options.iter().fold(0.0, |acc, r| acc + r.scaled_investment);
    let saving = supports.iter().fold(0.0, |acc, u| acc + u.saving);
    let scaled_investment = standalone_investment - saving;

    let mut annual = options
        .iter()
        .fold(AnnualBenefit::default(), |acc, r| acc.combine(&r.annual));
    annual.net_flow = options.iter().fold(0.0, |acc, r| acc + r.annual.net_flow);
    let cash_flows = finance::cash_flows(&annual, scenario.horizon_years);
    let npv =
        finance::npv(scaled_investment, &cash_flows, scenario.discount_rate).map_err(internal)?;
    let irr = finance::irr(scaled_investment, &cash_flows).ok();
    let bcr = finance::bcr(scaled_investment, &cash_flows, scenario.discount_rate).ok();

    let mut input_saved = Vec::new();
    for result in options {
        for saved in &result.input_saved {
            merge_saved(&mut input_saved, saved);
        }
    }

    Ok(PortfolioResult {
        scaled_investment,
        standalone_investment,
        supports,
        annual,
        cash_flows,
        npv,
        irr,
        bcr,
        input_saved,
    })
}

/// Evaluates every option of the scenario and the portfolio of all of them.
pub fn evaluate(
    scenario: &FarmScenario,
    catalog: &Catalog,
) -> Result<EvaluationResult, EvaluationError> {
    let violations = validate_scenario(scenario);
    if !violations.is_empty() {
        return Err(EvaluationError::Validation(violations));
    }

    let farm_operations = scenario.effective_operations();
    let mut options = Vec::with_capacity(scenario.options.len());
    for (index, spec) in scenario.options.iter().enumerate() {
        let option = resolve_option(spec, index, scenario, catalog)?;
        options.push(evaluate_option(
            scenario,
            catalog,
            option,
            &farm_operations,
        )?);
    }
    let portfolio = evaluate_portfolio(scenario, &options)?;

    let mut echoed = scenario.clone();
    echoed.id = None;
    let crop_defaults = scenario
        .crops
        .iter()
        .filter_map(|c| {
            let d = catalog.crop_defaults(scenario.region, c.builtin()?)?;
            Some(CropReference {
                crop: c.crop.clone(),
                yield_t_ha: d.default_yield,
                price: d.default_price,
            })
        })
        .collect();
    Ok(EvaluationResult {
        scenario: echoed,
        catalog_version: catalog.version().to_owned(),
        crop_defaults,
        options,
        portfolio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BenefitValues, Region, SupportTechnology as S};

    fn crop(name: &str, area: f64) -> CropEntry {
        CropEntry {
            crop: name.into(),
            custom: false,
            area,
            yield_t_ha: 8.0,
            price: 180.0,
            profiles: Default::default(),
        }
    }

    fn scenario(options: Vec<OptionSpec>) -> FarmScenario {
        FarmScenario {
            id: Some("abc".into()),
            name: None,
            region: Region::CentralEurope,
            crops: vec![crop("wheat", 80.0), crop("maize", 40.0)],
            operations: vec![],
            options,
            discount_rate: 0.04,
            horizon_years: 8,
            cost_overrides: vec![],
        }
    }

    #[test]
    fn single_option_portfolio_equals_option() {
        let s = scenario(vec![OptionSpec::new(
            MainTechnology::VrFertilizer,
            [S::NSensor, S::YieldMap],
            OperationKind::Fertilization,
        )]);
        let r = evaluate(&s, &Catalog::seed()).unwrap();
        let (o, p) = (&r.options[0], &r.portfolio);
        assert_eq!(o.scaled_investment, p.scaled_investment);
        assert_eq!(o.cash_flows, p.cash_flows);
        assert_eq!(o.npv, p.npv);
        assert_eq!(o.irr, p.irr);
        assert_eq!(o.bcr, p.bcr);
        assert_eq!(o.input_saved, p.input_saved);
        assert_eq!(r.scenario.id, None);
    }

    #[test]
    fn zero_options_is_a_validation_error() {
        let err = evaluate(&scenario(vec![]), &Catalog::seed()).unwrap_err();
        assert!(matches!(err, EvaluationError::Validation(v) if v[0].field == "options"));
    }

    #[test]
    fn missing_default_requires_user_benefits() {
        let mut spec = OptionSpec::new(
            MainTechnology::VrSeeder,
            [S::NSensor],
            OperationKind::Seeding,
        );
        let err = evaluate(&scenario(vec![spec.clone()]), &Catalog::seed()).unwrap_err();
        assert!(matches!(
            err,
            EvaluationError::UnresolvableOption { index: 0, .. }
        ));

        spec.benefits = Some(BenefitValues {
            input_reduction: 0.04,
            ..BenefitValues::ZERO
        });
        let r = evaluate(&scenario(vec![spec]), &Catalog::seed()).unwrap();
        assert_eq!(r.options[0].option.provenance.benefits, ValueSource::User);
    }

    #[test]
    fn incompatible_operation_is_unresolvable() {
        let spec = OptionSpec::new(
            MainTechnology::VrLime,
            [S::Satellite],
            OperationKind::Seeding,
        );
        let err = evaluate(&scenario(vec![spec]), &Catalog::seed()).unwrap_err();
        assert!(
            err.to_string().contains("vr-lime cannot perform seeding"),
            "{err}"
        );
    }

    #[test]
    fn shared_rtk_is_counted_once() {
        let s = scenario(vec![
            OptionSpec::new(
                MainTechnology::AutoSteer,
                [S::RtkGps],
                OperationKind::Seeding,
            ),
            OptionSpec::new(
                MainTechnology::SectionControl,
                [S::RtkGps],
                OperationKind::SprayingHerbicide,
            ),
        ]);
        let r = evaluate(&s, &Catalog::seed()).unwrap();
        let rtk = &r.portfolio.supports[0];
        assert_eq!(rtk.support, S::RtkGps);
        assert_eq!(rtk.options, [0, 1]);
        let saved = r.portfolio.standalone_investment - r.portfolio.scaled_investment;
        assert!((saved - rtk.scaled_investment).abs() < 1e-9);
    }

    #[test]
    fn all_inputs_option_reduces_every_listed_input() {
        let mut s = scenario(vec![OptionSpec::new(
            MainTechnology::AutoSteer,
            [S::NormalGps],
            OperationKind::Seeding,
        )]);
        s.operations = vec![
            OperationKind::Fertilization,
            OperationKind::SprayingFungicide,
            OperationKind::Tillage,
        ];
        let r = evaluate(&s, &Catalog::seed()).unwrap();
        let ops: Vec<_> = r.options[0]
            .input_saved
            .iter()
            .map(|i| i.operation)
            .collect();
        assert_eq!(
            ops,
            [
                OperationKind::Seeding,
                OperationKind::Fertilization,
                OperationKind::SprayingFungicide
            ]
        );
    }

    #[test]
    fn provenance_tracks_overrides() {
        let mut spec = OptionSpec::new(
            MainTechnology::AutoSteer,
            [S::RtkGps],
            OperationKind::Seeding,
        );
        let r = evaluate(&scenario(vec![spec.clone()]), &Catalog::seed()).unwrap();
        let p = r.options[0].option.provenance;
        assert_eq!(p.benefits, ValueSource::Catalog);
        assert_eq!(p.investment, ValueSource::Placeholder);
        assert_eq!(p.recurring_cost, ValueSource::Placeholder);

        spec.support_investments.insert(S::RtkGps, 5000.0);
        let r = evaluate(&scenario(vec![spec]), &Catalog::seed()).unwrap();
        assert_eq!(r.options[0].option.provenance.investment, ValueSource::User);
        assert_eq!(r.options[0].option.support_investments[&S::RtkGps], 5000.0);
    }
}
