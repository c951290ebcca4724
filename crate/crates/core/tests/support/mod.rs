//! Generators shared by the property suites.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::sample::{select, subsequence};

use pa_econ_core::domain::{percent, BenefitValues, BuiltinCrop, CropEntry, OptionSpec, Region};
use pa_econ_core::{Catalog, FarmScenario};

/// Canonical investment: I′ in [1, 1e6] and 1 to 30 years of nonnegative flows with
/// at least one positive flow, sized so the IRR lies inside the search bracket.
pub fn canonical_cash_flows() -> impl Strategy<Value = (f64, Vec<f64>)> {
    (1.0f64..=1e6, 1usize..=30)
        .prop_flat_map(|(inv, n)| {
            (
                Just(inv),
                prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0f64..=1.0], n),
                0..n,
                0.05f64..=10.0,
            )
        })
        .prop_map(|(inv, mut weights, forced, multiple)| {
            weights[forced] = weights[forced].max(0.05);
            let total: f64 = weights.iter().sum();
            let flows = weights.iter().map(|w| inv * multiple * w / total).collect();
            (inv, flows)
        })
}

/// Any cash-flow shape, including negative flows.
pub fn arbitrary_cash_flows() -> impl Strategy<Value = (f64, Vec<f64>, f64)> {
    (
        0.0f64..=1e6,
        prop::collection::vec(-1e5f64..=1e5, 1..=30),
        -0.5f64..=0.5,
    )
}

fn crop_entry(crop: BuiltinCrop) -> impl Strategy<Value = CropEntry> {
    (1.0f64..=2000.0, 0.5f64..=90.0, 10.0f64..=600.0).prop_map(move |(area, y, price)| CropEntry {
        crop: crop.as_str().to_owned(),
        custom: false,
        area,
        yield_t_ha: y,
        price,
        profiles: Default::default(),
    })
}

fn benefit_values() -> impl Strategy<Value = BenefitValues> {
    // percentages, as a user enters them
    (0.0f64..=30.0, 0.0f64..=10.0, 0.0f64..=30.0, 0.0f64..=60.0).prop_map(|(i, y, f, l)| {
        BenefitValues {
            input_reduction: percent::to_fraction(i),
            yield_increase: percent::to_fraction(y),
            fuel_reduction: percent::to_fraction(f),
            labour_reduction: percent::to_fraction(l),
        }
    })
}

/// Catalog combinations as (row, operation) pairs.
fn catalog_choices() -> Vec<OptionSpec> {
    let catalog = Catalog::seed();
    let mut out = Vec::new();
    for row in catalog.benefit_rows() {
        for &op in &row.operations {
            out.push(OptionSpec::new(row.main, row.supports.iter().copied(), op));
        }
    }
    out
}

fn option_spec() -> impl Strategy<Value = OptionSpec> {
    (
        select(catalog_choices()),
        prop::option::weighted(0.3, benefit_values()),
        prop::option::weighted(0.2, 0.0f64..=50_000.0),
        prop::option::weighted(0.2, 0.0f64..=2_000.0),
    )
        .prop_map(|(mut spec, benefits, main_investment, recurring)| {
            spec.benefits = benefits;
            spec.main_investment = main_investment;
            spec.recurring_cost = recurring;
            spec
        })
}

/// Valid scenarios over builtin crops and catalog combinations.
pub fn scenario() -> impl Strategy<Value = FarmScenario> {
    (
        select(Region::ALL.to_vec()),
        subsequence(BuiltinCrop::ALL.to_vec(), 1..=3),
        prop::collection::vec(option_spec(), 1..=4),
        0.0f64..=0.15,
        1u32..=30,
    )
        .prop_flat_map(|(region, crops, options, rate, horizon)| {
            let crops: Vec<_> = crops.into_iter().map(crop_entry).collect();
            (
                Just(region),
                crops,
                Just(options),
                Just(rate),
                Just(horizon),
            )
        })
        .prop_map(
            |(region, crops, options, discount_rate, horizon_years)| FarmScenario {
                id: None,
                name: Some("generated".into()),
                region,
                crops,
                operations: Vec::new(),
                options,
                discount_rate,
                horizon_years,
                cost_overrides: Vec::new(),
            },
        )
}
