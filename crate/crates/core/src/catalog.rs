//! The technology and cost catalog: default benefit combinations, which main
//! technologies serve which operations, component investments, crop defaults and
//! regional cost profiles.
//!
//! The catalog is one JSON document. It is validated as a whole on load and is
//! immutable afterwards; reloading produces a new value.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::domain::{
    percent, BenefitProfile, BuiltinCrop, CostOverride, CropEntry, InputCostProfile, InputScope,
    MainTechnology, OperationKind, Region, SupportTechnology, ValueSource,
};

/// Seed catalog shipped with the crate.
pub const SEED_CATALOG: &str = include_str!("../../../data/catalog.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenefitRow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub main: MainTechnology,
    #[serde(default)]
    pub supports: BTreeSet<SupportTechnology>,
    /// Operations the row applies to. Guidance rows list several.
    pub operations: Vec<OperationKind>,
    #[serde(flatten)]
    pub benefits: BenefitProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Compatibility {
    pub main: MainTechnology,
    pub operations: Vec<OperationKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Component {
    Main(MainTechnology),
    Support(SupportTechnology),
}

impl std::fmt::Display for Component {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Component::Main(m) => write!(f, "main technology {m}"),
            Component::Support(s) => write!(f, "support technology {s}"),
        }
    }
}

/// Investment for one component at the 50 ha reference size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InvestmentEntry {
    #[serde(flatten)]
    pub component: Component,
    /// €
    pub base_investment: f64,
    /// €/yr
    pub recurring_cost: f64,
    pub provenance: ValueSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CropDefaults {
    pub region: Region,
    pub crop: BuiltinCrop,
    /// t/ha
    pub default_yield: f64,
    /// €/t
    pub default_price: f64,
    pub provenance: ValueSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CostProfileEntry {
    pub region: Region,
    pub crop: BuiltinCrop,
    pub operation: OperationKind,
    #[serde(flatten)]
    pub profile: InputCostProfile,
    pub provenance: ValueSource,
}

/// Serialized form of the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CatalogDocument {
    pub version: String,
    pub benefits: Vec<BenefitRow>,
    pub compatibility: Vec<Compatibility>,
    pub investments: Vec<InvestmentEntry>,
    pub crops: Vec<CropDefaults>,
    pub cost_profiles: Vec<CostProfileEntry>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CatalogError {
    #[error("catalog parse error: {0}")]
    Parse(String),
    #[error("catalog integrity error:\n{}", .0.join("\n"))]
    Integrity(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LookupError {
    #[error("no default benefits for {main} with [{}] on {operation}", fmt_supports(.supports))]
    BenefitsNotFound {
        main: MainTechnology,
        supports: BTreeSet<SupportTechnology>,
        operation: OperationKind,
    },
    #[error("no cost profile for crop `{crop}` and operation {operation}")]
    ProfileNotFound {
        crop: String,
        operation: OperationKind,
    },
    #[error("no investment entry for {0}")]
    InvestmentNotFound(Component),
}

pub fn fmt_supports(supports: &BTreeSet<SupportTechnology>) -> String {
    supports
        .iter()
        .map(|s| s.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

/// A catalog combination offered for an operation.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibleOption<'a> {
    pub main: MainTechnology,
    pub supports: &'a BTreeSet<SupportTechnology>,
    pub benefits: BenefitProfile,
}

type BenefitKey = (MainTechnology, BTreeSet<SupportTechnology>, OperationKind);

/// A validated catalog.
#[derive(Debug, Clone)]
pub struct Catalog {
    doc: CatalogDocument,
    benefit_index: HashMap<BenefitKey, usize>,
    profile_index: HashMap<(Region, BuiltinCrop, OperationKind), usize>,
    crop_index: HashMap<(Region, BuiltinCrop), usize>,
    investment_index: HashMap<Component, usize>,
    compatibility_index: HashMap<MainTechnology, usize>,
}

impl PartialEq for Catalog {
    fn eq(&self, other: &Self) -> bool {
        self.doc == other.doc
    }
}

/// Parses and validates a catalog document.
pub fn load_catalog(source: &str) -> Result<Catalog, CatalogError> {
    let doc: CatalogDocument =
        serde_json::from_str(source).map_err(|e| CatalogError::Parse(e.to_string()))?;
    Catalog::from_document(doc)
}

fn check_amount(problems: &mut Vec<String>, path: String, value: f64) {
    if !(value.is_finite() && value >= 0.0) {
        problems.push(format!("{path}: {value} must be a finite number >= 0"));
    }
}

impl Catalog {
    /// The shipped seed catalog.
    pub fn seed() -> Catalog {
        load_catalog(SEED_CATALOG).expect("shipped seed catalog is valid")
    }

    pub fn from_document(doc: CatalogDocument) -> Result<Catalog, CatalogError> {
        let mut problems = Vec::new();

        if doc.version.trim().is_empty() {
            problems.push("version: must not be empty".to_owned());
        }

        let mut compatibility_index = HashMap::new();
        for (i, c) in doc.compatibility.iter().enumerate() {
            if compatibility_index.insert(c.main, i).is_some() {
                problems.push(format!(
                    "compatibility[{i}]: {} listed more than once",
                    c.main
                ));
            }
            if c.operations.is_empty() {
                problems.push(format!("compatibility[{i}]: {} has no operations", c.main));
            }
        }

        let mut investment_index = HashMap::new();
        for (i, inv) in doc.investments.iter().enumerate() {
            if investment_index.insert(inv.component, i).is_some() {
                problems.push(format!(
                    "investments[{i}]: {} listed more than once",
                    inv.component
                ));
            }
            check_amount(
                &mut problems,
                format!("investments[{i}].baseInvestment"),
                inv.base_investment,
            );
            check_amount(
                &mut problems,
                format!("investments[{i}].recurringCost"),
                inv.recurring_cost,
            );
            if inv.provenance == ValueSource::User {
                problems.push(format!(
                    "investments[{i}].provenance: `user` is reserved for scenario values"
                ));
            }
        }

        let mut benefit_index: HashMap<BenefitKey, usize> = HashMap::new();
        for (i, row) in doc.benefits.iter().enumerate() {
            let path = format!("benefits[{i}]");
            let combo = format!("{} [{}]", row.main, fmt_supports(&row.supports));
            if row.operations.is_empty() {
                problems.push(format!("{path}: {combo} lists no operations"));
            }
            for (name, value) in row.benefits.values.fields() {
                if !(0.0..=1.0).contains(&value) {
                    problems.push(format!(
                        "{path}.{name}: {}% for {combo} is outside [0, 100]",
                        percent::from_fraction(value)
                    ));
                }
            }
            if row.benefits.input_scope != InputScope::for_main(row.main) {
                problems.push(format!(
                    "{path}.inputScope: {combo} must use `{}`",
                    InputScope::for_main(row.main)
                ));
            }
            let allowed = compatibility_index
                .get(&row.main)
                .map(|&c| &doc.compatibility[c].operations);
            for &op in &row.operations {
                match allowed {
                    Some(ops) if ops.contains(&op) => {}
                    _ => problems.push(format!("{path}: {} cannot perform {op}", row.main)),
                }
                let key = (row.main, row.supports.clone(), op);
                if let Some(first) = benefit_index.insert(key, i) {
                    problems.push(format!(
                        "{path}: duplicate row {combo} on {op} (first defined at benefits[{first}])"
                    ));
                }
            }
            let components = std::iter::once(Component::Main(row.main))
                .chain(row.supports.iter().map(|&s| Component::Support(s)));
            for component in components {
                if !investment_index.contains_key(&component) {
                    problems.push(format!(
                        "{path}: {combo} references {component} with no investment entry"
                    ));
                }
            }
        }

        let mut crop_index = HashMap::new();
        for (i, c) in doc.crops.iter().enumerate() {
            if crop_index.insert((c.region, c.crop), i).is_some() {
                problems.push(format!(
                    "crops[{i}]: {} in {} listed more than once",
                    c.crop, c.region
                ));
            }
            if !(c.default_yield.is_finite() && c.default_yield > 0.0) {
                problems.push(format!("crops[{i}].defaultYield: must be > 0"));
            }
            check_amount(
                &mut problems,
                format!("crops[{i}].defaultPrice"),
                c.default_price,
            );
        }

        let mut profile_index = HashMap::new();
        for (i, p) in doc.cost_profiles.iter().enumerate() {
            if profile_index
                .insert((p.region, p.crop, p.operation), i)
                .is_some()
            {
                problems.push(format!(
                    "costProfiles[{i}]: {} / {} / {} listed more than once",
                    p.region, p.crop, p.operation
                ));
            }
            for (name, value) in p.profile.numeric_fields() {
                check_amount(&mut problems, format!("costProfiles[{i}].{name}"), value);
            }
        }
        // every crop with defaults needs a profile for every operation in its region
        for c in &doc.crops {
            for &op in OperationKind::ALL {
                if !profile_index.contains_key(&(c.region, c.crop, op)) {
                    problems.push(format!(
                        "costProfiles: missing {} / {} / {op}",
                        c.region, c.crop
                    ));
                }
            }
        }

        if !problems.is_empty() {
            return Err(CatalogError::Integrity(problems));
        }
        Ok(Catalog {
            doc,
            benefit_index,
            profile_index,
            crop_index,
            investment_index,
            compatibility_index,
        })
    }

    pub fn document(&self) -> &CatalogDocument {
        &self.doc
    }

    pub fn version(&self) -> &str {
        &self.doc.version
    }

    pub fn benefit_rows(&self) -> &[BenefitRow] {
        &self.doc.benefits
    }

    /// Pretty JSON in the catalog document format.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(&self.doc).expect("catalog serializes");
        out.push('\n');
        out
    }

    /// Exact-set lookup of the default benefits of a combination.
    pub fn default_benefits(
        &self,
        main: MainTechnology,
        supports: &BTreeSet<SupportTechnology>,
        operation: OperationKind,
    ) -> Result<BenefitProfile, LookupError> {
        self.benefit_index
            .get(&(main, supports.clone(), operation))
            .map(|&i| self.doc.benefits[i].benefits)
            .ok_or_else(|| LookupError::BenefitsNotFound {
                main,
                supports: supports.clone(),
                operation,
            })
    }

    /// Every catalog combination usable for `operation`, in catalog order.
    pub fn compatible_options(&self, operation: OperationKind) -> Vec<CompatibleOption<'_>> {
        self.doc
            .benefits
            .iter()
            .filter(|row| row.operations.contains(&operation))
            .map(|row| CompatibleOption {
                main: row.main,
                supports: &row.supports,
                benefits: row.benefits,
            })
            .collect()
    }

    /// Whether the main technology can be used for the operation at all, with or
    /// without a catalog benefit row.
    pub fn can_perform(&self, main: MainTechnology, operation: OperationKind) -> bool {
        self.compatibility_index
            .get(&main)
            .is_some_and(|&i| self.doc.compatibility[i].operations.contains(&operation))
    }

    pub fn investment(&self, component: Component) -> Result<&InvestmentEntry, LookupError> {
        self.investment_index
            .get(&component)
            .map(|&i| &self.doc.investments[i])
            .ok_or(LookupError::InvestmentNotFound(component))
    }

    pub fn crop_defaults(&self, region: Region, crop: BuiltinCrop) -> Option<&CropDefaults> {
        self.crop_index
            .get(&(region, crop))
            .map(|&i| &self.doc.crops[i])
    }

    pub fn seed_profile(
        &self,
        region: Region,
        crop: BuiltinCrop,
        operation: OperationKind,
    ) -> Option<&CostProfileEntry> {
        self.profile_index
            .get(&(region, crop, operation))
            .map(|&i| &self.doc.cost_profiles[i])
    }

    /// The cost profile for a crop of the scenario: the seed profile for builtin
    /// crops, the user-supplied one for custom crops, with matching overrides
    /// applied in order.
    pub fn cost_profile(
        &self,
        region: Region,
        crop: &CropEntry,
        operation: OperationKind,
        overrides: &[CostOverride],
    ) -> Result<InputCostProfile, LookupError> {
        let base = match crop.builtin() {
            Some(builtin) => self
                .seed_profile(region, builtin, operation)
                .map(|e| &e.profile),
            None => crop.profiles.get(&operation),
        };
        let mut profile = base.cloned().ok_or_else(|| LookupError::ProfileNotFound {
            crop: crop.crop.clone(),
            operation,
        })?;
        for ov in overrides
            .iter()
            .filter(|o| o.applies_to(&crop.crop, operation))
        {
            ov.apply(&mut profile);
        }
        Ok(profile)
    }

    /// One-line-per-fact integrity summary used by `catalog validate`.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "catalog version {}", self.doc.version);
        let _ = writeln!(out, "{} benefit rows", self.doc.benefits.len());
        let _ = writeln!(
            out,
            "{} compatibility entries",
            self.doc.compatibility.len()
        );
        let _ = writeln!(out, "{} investment entries", self.doc.investments.len());
        let _ = writeln!(out, "{} crop defaults", self.doc.crops.len());
        let _ = writeln!(out, "{} cost profiles", self.doc.cost_profiles.len());
        out
    }
}
