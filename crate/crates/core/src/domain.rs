//! Shared domain types: enumerations with their canonical kebab-case text form,
//! benefit profiles, cost profiles, farm scenarios and scenario validation.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Discount rate applied when a scenario does not set one. A placeholder, not a
/// published value.
pub const DEFAULT_DISCOUNT_RATE: f64 = 0.04;

/// Evaluation horizon in years when a scenario does not set one.
pub const DEFAULT_HORIZON_YEARS: u32 = 8;

/// A text value that does not name any variant of an enumeration.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} `{value}`")]
pub struct UnknownVariant {
    pub kind: &'static str,
    pub value: String,
}

macro_rules! text_enum {
    (
        $(#[$meta:meta])*
        $name:ident, $kind:literal {
            $($variant:ident => $text:literal, $label:literal),+ $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            /// Canonical kebab-case identifier used by every file format and the API.
            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            /// Human-readable name for reports.
            pub fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownVariant;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(UnknownVariant { kind: $kind, value: s.to_owned() }),
                }
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let text = String::deserialize(deserializer)?;
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

text_enum! {
    /// Geographical area selecting the default cost data.
    Region, "region" {
        NorthernEurope => "northern-europe", "Northern Europe",
        CentralEurope => "central-europe", "Central Europe",
        SouthSouthwesternEurope => "south-southwestern-europe", "South & Southwestern Europe",
        SoutheastEurope => "southeast-europe", "Southeast Europe",
    }
}

text_enum! {
    /// Crops shipped with default data. Any other crop is a custom crop.
    BuiltinCrop, "crop" {
        Wheat => "wheat", "Wheat",
        Maize => "maize", "Maize",
        SugarBeet => "sugar-beet", "Sugar beet",
        Canola => "canola", "Canola",
        Potato => "potato", "Potato",
    }
}

text_enum! {
    /// Field operation a technology can perform.
    OperationKind, "operation" {
        Seeding => "seeding", "Seeding",
        Fertilization => "fertilization", "Fertilization",
        SprayingFungicide => "spraying-fungicide", "Spraying (fungicide)",
        SprayingHerbicide => "spraying-herbicide", "Spraying (herbicide)",
        SprayingInsecticide => "spraying-insecticide", "Spraying (insecticide)",
        SprayingGrowthRegulator => "spraying-growth-regulator", "Spraying (growth regulator)",
        MechanicalWeeding => "mechanical-weeding", "Mechanical weeding",
        Tillage => "tillage", "Tillage",
        Liming => "liming", "Liming",
        ManureApplication => "manure-application", "Manure application",
    }
}

text_enum! {
    MainTechnology, "main technology" {
        AutoSteer => "auto-steer", "Auto-steer",
        SectionControl => "section-control", "Section control",
        VrSeeder => "vr-seeder", "VR Seeder",
        VrFertilizer => "vr-fertilizer", "VR Fertilizer",
        VrSprayer => "vr-sprayer", "VR Sprayer",
        VrLime => "vr-lime", "VR Lime",
        VrManure => "vr-manure", "VR Manure",
        InterRowHoeingCamera => "inter-row-hoeing-camera", "Inter-row hoeing with camera",
        InterRowHoeingGps => "inter-row-hoeing-gps", "Inter-row hoeing with GPS",
    }
}

text_enum! {
    /// Auxiliary equipment; only ever selected together with a main technology.
    SupportTechnology, "support technology" {
        NormalGps => "normal-gps", "Normal GPS",
        RtkGps => "rtk-gps", "RTK-GPS",
        Ctf => "ctf", "CTF",
        Satellite => "satellite", "Satellite",
        SurveyUav => "survey-uav", "Survey UAV",
        NSensor => "n-sensor", "N-sensor",
        YieldMap => "yield-map", "Yield map",
        SoilEc => "soil-ec", "Soil EC",
        SoilPh => "soil-ph", "Soil pH",
        SoilSampling => "soil-sampling", "Soil sampling",
    }
}

text_enum! {
    /// Which inputs an input-reduction percentage applies to.
    InputScope, "input scope" {
        OperationSpecific => "operation-specific", "Input of the operation",
        AllInputs => "all-inputs", "All seed, fertiliser and pesticide inputs",
    }
}

text_enum! {
    InputUnit, "unit" {
        Kilogram => "kg", "kg",
        Litre => "l", "l",
    }
}

text_enum! {
    /// Broad class of the input applied by an operation.
    InputCategory, "input category" {
        Seed => "seed", "Seed",
        Fertiliser => "fertiliser", "Fertiliser",
        Pesticide => "pesticide", "Pesticide",
        Lime => "lime", "Lime",
        Manure => "manure", "Manure",
    }
}

text_enum! {
    /// Where a value used in an evaluation came from.
    ValueSource, "value source" {
        Catalog => "catalog", "catalog default",
        Placeholder => "placeholder", "catalog placeholder",
        User => "user", "user supplied",
    }
}

impl OperationKind {
    /// The input category the operation consumes, if any.
    pub fn input_category(self) -> Option<InputCategory> {
        use OperationKind::*;
        match self {
            Seeding => Some(InputCategory::Seed),
            Fertilization => Some(InputCategory::Fertiliser),
            SprayingFungicide
            | SprayingHerbicide
            | SprayingInsecticide
            | SprayingGrowthRegulator => Some(InputCategory::Pesticide),
            Liming => Some(InputCategory::Lime),
            ManureApplication => Some(InputCategory::Manure),
            MechanicalWeeding | Tillage => None,
        }
    }
}

impl InputCategory {
    /// Categories covered by an all-inputs reduction.
    pub fn in_all_inputs_scope(self) -> bool {
        matches!(
            self,
            InputCategory::Seed | InputCategory::Fertiliser | InputCategory::Pesticide
        )
    }
}

impl InputScope {
    /// Guidance technologies reduce every seed, fertiliser and pesticide input; the
    /// rest only the input of their own operation.
    pub fn for_main(main: MainTechnology) -> InputScope {
        match main {
            MainTechnology::AutoSteer | MainTechnology::SectionControl => InputScope::AllInputs,
            _ => InputScope::OperationSpecific,
        }
    }
}

/// Percentages are held as fractions; these helpers convert at the document boundary.
pub mod percent {
    use serde::{Deserialize, Deserializer, Serializer};

    /// Shortest human percentage that converts back to exactly `fraction`.
    ///
    /// Every fraction read from a document has such a percentage. A fraction built
    /// by arithmetic may not, since not every double is the quotient of a double by
    /// 100; the nearest percentage is returned then.
    pub fn from_fraction(fraction: f64) -> f64 {
        let raw = fraction * 100.0;
        for digits in 0..=12 {
            let scale = 10f64.powi(digits);
            let candidate = (raw * scale).round() / scale;
            if to_fraction(candidate) == fraction {
                return candidate;
            }
        }
        let (mut down, mut up) = (raw, raw);
        if to_fraction(raw) == fraction {
            return raw;
        }
        for _ in 0..4 {
            down = down.next_down();
            up = up.next_up();
            for candidate in [down, up] {
                if to_fraction(candidate) == fraction {
                    return candidate;
                }
            }
        }
        raw
    }

    pub fn to_fraction(percent: f64) -> f64 {
        percent / 100.0
    }

    pub fn serialize<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(from_fraction(*value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
        f64::deserialize(deserializer).map(to_fraction)
    }
}

/// The four modelled benefits, as fractions in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenefitValues {
    #[serde(with = "percent")]
    pub input_reduction: f64,
    #[serde(with = "percent")]
    pub yield_increase: f64,
    #[serde(with = "percent")]
    pub fuel_reduction: f64,
    #[serde(with = "percent")]
    pub labour_reduction: f64,
}

impl BenefitValues {
    pub const ZERO: BenefitValues = BenefitValues {
        input_reduction: 0.0,
        yield_increase: 0.0,
        fuel_reduction: 0.0,
        labour_reduction: 0.0,
    };

    /// `(wire field name, fraction)` pairs in a fixed order.
    pub fn fields(&self) -> [(&'static str, f64); 4] {
        [
            ("inputReduction", self.input_reduction),
            ("yieldIncrease", self.yield_increase),
            ("fuelReduction", self.fuel_reduction),
            ("labourReduction", self.labour_reduction),
        ]
    }
}

/// Benefit percentages attached to a technology combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenefitProfile {
    #[serde(flatten)]
    pub values: BenefitValues,
    pub input_scope: InputScope,
}

impl BenefitProfile {
    pub fn for_main(main: MainTechnology, values: BenefitValues) -> Self {
        BenefitProfile {
            values,
            input_scope: InputScope::for_main(main),
        }
    }
}

/// Baseline economics of one operation on one crop in one region. Quantities are per
/// hectare and per pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InputCostProfile {
    /// Name of the input applied, e.g. `mineral nitrogen`.
    pub input: String,
    pub unit: InputUnit,
    /// €/kg or €/l.
    pub input_price: f64,
    /// kg/ha or l/ha per pass.
    pub application_rate: f64,
    pub treatments_per_year: f64,
    /// €/l.
    pub fuel_price: f64,
    /// l/ha per pass.
    pub fuel_consumption: f64,
    /// €/h.
    pub labour_cost: f64,
    /// h/ha per pass.
    pub labour_hours: f64,
}

impl InputCostProfile {
    pub fn numeric_fields(&self) -> [(&'static str, f64); 7] {
        [
            ("inputPrice", self.input_price),
            ("applicationRate", self.application_rate),
            ("treatmentsPerYear", self.treatments_per_year),
            ("fuelPrice", self.fuel_price),
            ("fuelConsumption", self.fuel_consumption),
            ("labourCost", self.labour_cost),
            ("labourHours", self.labour_hours),
        ]
    }
}

/// One crop grown on the farm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CropEntry {
    /// Builtin crop identifier (`wheat`, ...) or the name of a custom crop.
    pub crop: String,
    #[serde(default)]
    pub custom: bool,
    /// ha
    pub area: f64,
    /// t/ha
    #[serde(rename = "yield")]
    pub yield_t_ha: f64,
    /// €/t
    pub price: f64,
    /// Cost data for custom crops, keyed by operation.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub profiles: BTreeMap<OperationKind, InputCostProfile>,
}

impl CropEntry {
    pub fn builtin(&self) -> Option<BuiltinCrop> {
        if self.custom {
            None
        } else {
            self.crop.parse().ok()
        }
    }
}

/// Partial benefit percentages supplied by the user for one option.
pub type BenefitOverride = BenefitValues;

/// A technology option as written in a scenario document. Anything left out is
/// filled from the catalog when the scenario is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OptionSpec {
    pub main: MainTechnology,
    #[serde(default)]
    pub supports: BTreeSet<SupportTechnology>,
    pub operation: OperationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benefits: Option<BenefitOverride>,
    /// € for the 50 ha reference farm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub main_investment: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub support_investments: BTreeMap<SupportTechnology, f64>,
    /// €/yr
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recurring_cost: Option<f64>,
    /// Crops the option is used on; empty means every crop in the scenario.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub crops: Vec<String>,
}

impl OptionSpec {
    pub fn new(
        main: MainTechnology,
        supports: impl IntoIterator<Item = SupportTechnology>,
        operation: OperationKind,
    ) -> Self {
        OptionSpec {
            main,
            supports: supports.into_iter().collect(),
            operation,
            benefits: None,
            main_investment: None,
            support_investments: BTreeMap::new(),
            recurring_cost: None,
            crops: Vec::new(),
        }
    }
}

/// Field-by-field replacement of a cost profile value for one crop and operation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CostOverride {
    pub crop: String,
    pub operation: Option<OperationKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_price: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub application_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub treatments_per_year: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuel_price: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuel_consumption: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labour_cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labour_hours: Option<f64>,
}

impl CostOverride {
    pub fn fields(&self) -> [(&'static str, Option<f64>); 7] {
        [
            ("inputPrice", self.input_price),
            ("applicationRate", self.application_rate),
            ("treatmentsPerYear", self.treatments_per_year),
            ("fuelPrice", self.fuel_price),
            ("fuelConsumption", self.fuel_consumption),
            ("labourCost", self.labour_cost),
            ("labourHours", self.labour_hours),
        ]
    }

    /// Whether this override targets `crop` / `operation`. An override without an
    /// operation applies to every operation of the crop.
    pub fn applies_to(&self, crop: &str, operation: OperationKind) -> bool {
        self.crop == crop && self.operation.is_none_or(|op| op == operation)
    }

    pub fn apply(&self, profile: &mut InputCostProfile) {
        let targets = [
            (&mut profile.input_price, self.input_price),
            (&mut profile.application_rate, self.application_rate),
            (&mut profile.treatments_per_year, self.treatments_per_year),
            (&mut profile.fuel_price, self.fuel_price),
            (&mut profile.fuel_consumption, self.fuel_consumption),
            (&mut profile.labour_cost, self.labour_cost),
            (&mut profile.labour_hours, self.labour_hours),
        ];
        for (slot, value) in targets {
            if let Some(value) = value {
                *slot = value;
            }
        }
    }
}

fn default_discount_rate() -> f64 {
    DEFAULT_DISCOUNT_RATE
}

fn default_horizon_years() -> u32 {
    DEFAULT_HORIZON_YEARS
}

/// The user's farm and the technology options to assess. This is also the scenario
/// file format and the API request body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FarmScenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub region: Region,
    pub crops: Vec<CropEntry>,
    /// Operations the farm performs. Operations of the selected options are always
    /// included, whether listed here or not.
    #[serde(default)]
    pub operations: Vec<OperationKind>,
    #[serde(default)]
    pub options: Vec<OptionSpec>,
    #[serde(default = "default_discount_rate")]
    pub discount_rate: f64,
    #[serde(default = "default_horizon_years")]
    pub horizon_years: u32,
    #[serde(default)]
    pub cost_overrides: Vec<CostOverride>,
}

impl FarmScenario {
    pub fn crop(&self, name: &str) -> Option<&CropEntry> {
        self.crops.iter().find(|c| c.crop == name)
    }

    pub fn total_area(&self) -> f64 {
        self.crops.iter().map(|c| c.area).sum()
    }

    /// Listed operations plus those of every option, deduplicated, in enumeration order.
    pub fn effective_operations(&self) -> Vec<OperationKind> {
        let set: BTreeSet<OperationKind> = self
            .operations
            .iter()
            .copied()
            .chain(self.options.iter().map(|o| o.operation))
            .collect();
        set.into_iter().collect()
    }
}

/// A broken scenario rule, addressed by its document path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

fn check_nonnegative(out: &mut Vec<Violation>, field: String, value: f64) {
    if !(value.is_finite() && value >= 0.0) {
        out.push(Violation::new(field, "must be a finite number >= 0"));
    }
}

fn check_fraction(out: &mut Vec<Violation>, field: String, value: f64) {
    if !(0.0..=1.0).contains(&value) {
        out.push(Violation::new(
            field,
            "must be a percentage within [0, 100]",
        ));
    }
}

/// Checks every scenario invariant. An empty list means the scenario can be
/// evaluated (catalog lookups may still fail).
pub fn validate_scenario(scenario: &FarmScenario) -> Vec<Violation> {
    let mut out = Vec::new();

    if scenario.crops.is_empty() {
        out.push(Violation::new("crops", "at least one crop is required"));
    }
    let mut seen = HashSet::new();
    for (i, crop) in scenario.crops.iter().enumerate() {
        let path = format!("crops[{i}]");
        if crop.crop.trim().is_empty() {
            out.push(Violation::new(
                format!("{path}.crop"),
                "crop name must not be empty",
            ));
        } else if !seen.insert(crop.crop.as_str()) {
            out.push(Violation::new(
                format!("{path}.crop"),
                "crop listed more than once",
            ));
        }
        if crop.custom {
            if crop.crop.parse::<BuiltinCrop>().is_ok() {
                out.push(Violation::new(
                    format!("{path}.crop"),
                    "custom crop must not reuse a builtin crop name",
                ));
            }
            if crop.profiles.is_empty() {
                out.push(Violation::new(
                    format!("{path}.profiles"),
                    "custom crop requires user-supplied treatment and cost data",
                ));
            }
            for (op, profile) in &crop.profiles {
                for (name, value) in profile.numeric_fields() {
                    check_nonnegative(&mut out, format!("{path}.profiles.{op}.{name}"), value);
                }
            }
        } else {
            if crop.crop.parse::<BuiltinCrop>().is_err() {
                out.push(Violation::new(
                    format!("{path}.crop"),
                    "unknown builtin crop; set `custom: true` to define a custom crop",
                ));
            }
            if !crop.profiles.is_empty() {
                out.push(Violation::new(
                    format!("{path}.profiles"),
                    "builtin crops take cost changes through costOverrides",
                ));
            }
        }
        if !(crop.area.is_finite() && crop.area > 0.0) {
            out.push(Violation::new(
                format!("{path}.area"),
                "area must be > 0 ha",
            ));
        }
        if !(crop.yield_t_ha.is_finite() && crop.yield_t_ha > 0.0) {
            out.push(Violation::new(
                format!("{path}.yield"),
                "yield must be > 0 t/ha",
            ));
        }
        check_nonnegative(&mut out, format!("{path}.price"), crop.price);
    }

    if !(scenario.discount_rate.is_finite() && scenario.discount_rate > -1.0) {
        out.push(Violation::new("discountRate", "discount rate must be > -1"));
    }
    if scenario.horizon_years < 1 {
        out.push(Violation::new(
            "horizonYears",
            "horizon must be at least 1 year",
        ));
    }

    if scenario.options.is_empty() {
        out.push(Violation::new(
            "options",
            "at least one technology option is required",
        ));
    }
    for (i, option) in scenario.options.iter().enumerate() {
        let path = format!("options[{i}]");
        if let Some(benefits) = &option.benefits {
            for (name, value) in benefits.fields() {
                check_fraction(&mut out, format!("{path}.benefits.{name}"), value);
            }
        }
        if let Some(value) = option.main_investment {
            check_nonnegative(&mut out, format!("{path}.mainInvestment"), value);
        }
        for (support, value) in &option.support_investments {
            if !option.supports.contains(support) {
                out.push(Violation::new(
                    format!("{path}.supportInvestments.{support}"),
                    "support technology is not part of this option",
                ));
            }
            check_nonnegative(
                &mut out,
                format!("{path}.supportInvestments.{support}"),
                *value,
            );
        }
        if let Some(value) = option.recurring_cost {
            check_nonnegative(&mut out, format!("{path}.recurringCost"), value);
        }
        let mut referenced = HashSet::new();
        for (j, name) in option.crops.iter().enumerate() {
            if scenario.crop(name).is_none() {
                out.push(Violation::new(
                    format!("{path}.crops[{j}]"),
                    format!("crop `{name}` is not part of the scenario"),
                ));
            } else if !referenced.insert(name.as_str()) {
                out.push(Violation::new(
                    format!("{path}.crops[{j}]"),
                    "crop listed more than once",
                ));
            }
        }
    }

    for (i, ov) in scenario.cost_overrides.iter().enumerate() {
        let path = format!("costOverrides[{i}]");
        if scenario.crop(&ov.crop).is_none() {
            out.push(Violation::new(
                format!("{path}.crop"),
                format!("crop `{}` is not part of the scenario", ov.crop),
            ));
        }
        for (name, value) in ov.fields() {
            if let Some(value) = value {
                check_nonnegative(&mut out, format!("{path}.{name}"), value);
            }
        }
    }

    out
}
