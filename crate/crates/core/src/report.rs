//! Report rendering. Both formats are built from one [`Report`] value so every figure
//! in the printable document appears identically in the structured one.

use std::fmt::Write as _;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::domain::{
    percent, InputScope, ValueSource, DEFAULT_DISCOUNT_RATE, DEFAULT_HORIZON_YEARS,
};
use crate::evaluate::EvaluationResult;
use crate::finance::InputSaved;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Structured,
    Printable,
}

impl ReportFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            ReportFormat::Structured => "structured",
            ReportFormat::Printable => "printable",
        }
    }

    pub fn media_type(self) -> &'static str {
        match self {
            ReportFormat::Structured => "application/json",
            ReportFormat::Printable => "text/html; charset=utf-8",
        }
    }
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "structured" => Ok(ReportFormat::Structured),
            "printable" => Ok(ReportFormat::Printable),
            other => Err(format!(
                "unknown report format `{other}` (expected structured or printable)"
            )),
        }
    }
}

/// Caller-supplied metadata. The renderer never reads a clock.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportContext {
    pub run_id: Option<String>,
    pub generated_at: Option<DateTime<Utc>>,
}

/// € amount, half-even to 2 decimals.
pub fn fmt_money(value: f64) -> String {
    format!("{}", Fixed(value, 2))
}

/// IRR or BCR to 4 decimals; absent values are "n/a".
pub fn fmt_ratio(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{}", Fixed(v, 4)),
        None => "n/a".to_owned(),
    }
}

pub fn fmt_quantity(value: f64) -> String {
    format!("{}", Fixed(value, 2))
}

/// Fixed-point formatting that never prints "-0.00".
struct Fixed(f64, usize);

impl std::fmt::Display for Fixed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = format!("{:.*}", self.1, self.0);
        match s.strip_prefix('-') {
            Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => f.write_str(rest),
            _ => f.write_str(&s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
    pub summary: ScenarioSummary,
    pub options: Vec<MetricsRow>,
    pub portfolio: PortfolioSection,
    pub input_savings: Vec<SavingRow>,
    pub assumptions: Assumptions,
    /// The evaluation the report was rendered from, unchanged.
    pub result: EvaluationResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScenarioSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub region: String,
    pub catalog_version: String,
    pub crops: Vec<CropRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CropRow {
    pub crop: String,
    pub custom: bool,
    pub area: f64,
    #[serde(rename = "yield")]
    pub yield_t_ha: f64,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricsRow {
    pub technology: String,
    pub operation: String,
    pub investment: f64,
    pub annual_net_flow: f64,
    pub npv: f64,
    pub irr: Option<f64>,
    pub bcr: Option<f64>,
    pub rendered: RenderedMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RenderedMetrics {
    pub investment: String,
    pub annual_net_flow: String,
    pub npv: String,
    pub irr: String,
    pub bcr: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PortfolioSection {
    pub metrics: MetricsRow,
    pub standalone_investment: f64,
    pub rendered_standalone_investment: String,
    pub shared_supports: Vec<SharedSupportRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SharedSupportRow {
    pub support: String,
    pub options: Vec<usize>,
    pub area: f64,
    pub investment: f64,
    pub rendered_investment: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SavingRow {
    pub input: String,
    pub operation: String,
    pub quantity: f64,
    pub unit: String,
    pub rendered_quantity: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Assumptions {
    pub discount_rate: f64,
    pub horizon_years: u32,
    pub fuel_and_labour_scope: String,
    pub benefits: Vec<BenefitRow>,
    /// Every value that differs from the catalog defaults.
    pub deviations: Vec<Deviation>,
    /// Values taken from the editable seed data rather than published figures.
    pub placeholders: Vec<String>,
}

/// Benefit percentages used for one option, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenefitRow {
    pub option: usize,
    pub technology: String,
    pub input_reduction: f64,
    pub yield_increase: f64,
    pub fuel_reduction: f64,
    pub labour_reduction: f64,
    pub input_scope: InputScope,
    pub source: ValueSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Deviation {
    pub field: String,
    pub value: String,
}

fn metrics(
    technology: String,
    operation: String,
    investment: f64,
    annual_net_flow: f64,
    npv: f64,
    irr: Option<f64>,
    bcr: Option<f64>,
) -> MetricsRow {
    MetricsRow {
        rendered: RenderedMetrics {
            investment: fmt_money(investment),
            annual_net_flow: fmt_money(annual_net_flow),
            npv: fmt_money(npv),
            irr: fmt_ratio(irr),
            bcr: fmt_ratio(bcr),
        },
        technology,
        operation,
        investment,
        annual_net_flow,
        npv,
        irr,
        bcr,
    }
}

fn saving_row(s: &InputSaved) -> SavingRow {
    SavingRow {
        input: s.input.clone(),
        operation: s.operation.as_str().to_owned(),
        quantity: s.quantity,
        unit: s.unit.as_str().to_owned(),
        rendered_quantity: fmt_quantity(s.quantity),
    }
}

fn num(v: f64) -> String {
    // serde_json prints the shortest round-trip representation
    serde_json::to_string(&v).expect("finite")
}

fn deviations(result: &EvaluationResult) -> Vec<Deviation> {
    let s = &result.scenario;
    let mut out = Vec::new();
    let mut push = |field: String, value: String| out.push(Deviation { field, value });
    if s.discount_rate != DEFAULT_DISCOUNT_RATE {
        push("discountRate".into(), num(s.discount_rate));
    }
    if s.horizon_years != DEFAULT_HORIZON_YEARS {
        push("horizonYears".into(), s.horizon_years.to_string());
    }
    for (i, c) in s.crops.iter().enumerate() {
        if c.custom {
            push(format!("crops[{i}]"), format!("custom crop `{}`", c.crop));
        }
        if let Some(d) = result.crop_defaults.iter().find(|d| d.crop == c.crop) {
            if c.yield_t_ha != d.yield_t_ha {
                push(
                    format!("crops[{i}].yield"),
                    format!("{} (default {})", num(c.yield_t_ha), num(d.yield_t_ha)),
                );
            }
            if c.price != d.price {
                push(
                    format!("crops[{i}].price"),
                    format!("{} (default {})", num(c.price), num(d.price)),
                );
            }
        }
    }
    for (i, o) in result.options.iter().enumerate() {
        let opt = &o.option;
        if opt.provenance.benefits == ValueSource::User {
            for (name, value) in opt.benefits.values.fields() {
                push(
                    format!("options[{i}].benefits.{name}"),
                    format!("{}%", num(percent::from_fraction(value))),
                );
            }
        }
        if opt.provenance.investment == ValueSource::User {
            push(
                format!("options[{i}].mainInvestment"),
                num(opt.main_investment),
            );
            for (support, value) in &opt.support_investments {
                push(
                    format!("options[{i}].supportInvestments.{support}"),
                    num(*value),
                );
            }
        }
        if opt.provenance.recurring_cost == ValueSource::User {
            push(
                format!("options[{i}].recurringCost"),
                num(opt.recurring_cost),
            );
        }
    }
    for (i, o) in s.cost_overrides.iter().enumerate() {
        for (name, value) in o.fields() {
            if let Some(v) = value {
                let op = o
                    .operation
                    .map(|op| op.as_str())
                    .unwrap_or("all operations");
                push(
                    format!("costOverrides[{i}].{name}"),
                    format!("{} ({}, {op})", num(v), o.crop),
                );
            }
        }
    }
    out
}

fn placeholders(result: &EvaluationResult) -> Vec<String> {
    let mut out = Vec::new();
    for (i, o) in result.options.iter().enumerate() {
        let p = &o.option.provenance;
        if p.investment == ValueSource::Placeholder {
            out.push(format!(
                "options[{i}] investment ({})",
                o.option.display_name()
            ));
        }
        if p.recurring_cost == ValueSource::Placeholder {
            out.push(format!(
                "options[{i}] recurring cost ({})",
                o.option.display_name()
            ));
        }
    }
    if result.scenario.crops.iter().any(|c| !c.custom) {
        out.push("regional input cost profiles".to_owned());
    }
    out
}

impl Report {
    /// Lays out a result without recomputing any figure.
    pub fn build(result: &EvaluationResult, ctx: &ReportContext) -> Self {
        let s = &result.scenario;
        let options = result
            .options
            .iter()
            .map(|o| {
                metrics(
                    o.option.display_name(),
                    o.option.operation.as_str().to_owned(),
                    o.scaled_investment,
                    o.annual.net_flow,
                    o.npv,
                    o.irr,
                    o.bcr,
                )
            })
            .collect();
        let p = &result.portfolio;
        let portfolio = PortfolioSection {
            metrics: metrics(
                "Portfolio".to_owned(),
                String::new(),
                p.scaled_investment,
                p.annual.net_flow,
                p.npv,
                p.irr,
                p.bcr,
            ),
            standalone_investment: p.standalone_investment,
            rendered_standalone_investment: fmt_money(p.standalone_investment),
            shared_supports: p
                .supports
                .iter()
                .map(|u| SharedSupportRow {
                    support: u.support.label().to_owned(),
                    options: u.options.clone(),
                    area: u.area,
                    investment: u.scaled_investment,
                    rendered_investment: fmt_money(u.scaled_investment),
                })
                .collect(),
        };
        let benefits = result
            .options
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let v = o.option.benefits.values;
                BenefitRow {
                    option: i,
                    technology: o.option.display_name(),
                    input_reduction: percent::from_fraction(v.input_reduction),
                    yield_increase: percent::from_fraction(v.yield_increase),
                    fuel_reduction: percent::from_fraction(v.fuel_reduction),
                    labour_reduction: percent::from_fraction(v.labour_reduction),
                    input_scope: o.option.benefits.input_scope,
                    source: o.option.provenance.benefits,
                }
            })
            .collect();
        Report {
            schema_version: REPORT_SCHEMA_VERSION,
            run_id: ctx.run_id.clone(),
            generated_at: ctx
                .generated_at
                .map(|t| t.to_rfc3339_opts(SecondsFormat::Secs, true)),
            summary: ScenarioSummary {
                name: s.name.clone(),
                region: s.region.as_str().to_owned(),
                catalog_version: result.catalog_version.clone(),
                crops: s
                    .crops
                    .iter()
                    .map(|c| CropRow {
                        crop: c.crop.clone(),
                        custom: c.custom,
                        area: c.area,
                        yield_t_ha: c.yield_t_ha,
                        price: c.price,
                    })
                    .collect(),
            },
            options,
            portfolio,
            input_savings: p.input_saved.iter().map(saving_row).collect(),
            assumptions: Assumptions {
                discount_rate: s.discount_rate,
                horizon_years: s.horizon_years,
                fuel_and_labour_scope:
                    "fuel and labour savings apply to the operation each option is attached to"
                        .to_owned(),
                benefits,
                deviations: deviations(result),
                placeholders: placeholders(result),
            },
            result: result.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn to_html(&self) -> String {
        let mut h = String::new();
        let title = match &self.summary.name {
            Some(name) => format!("Economic evaluation: {}", escape(name)),
            None => "Economic evaluation".to_owned(),
        };
        let _ = write!(
            h,
            "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{title}</title>\n<style>\n{STYLE}</style>\n</head>\n<body>\n<h1>{title}</h1>\n"
        );
        if let Some(id) = &self.run_id {
            let _ = writeln!(h, "<p class=\"meta\">Run {}</p>", escape(id));
        }
        if let Some(t) = &self.generated_at {
            let _ = writeln!(h, "<p class=\"meta\">Generated {}</p>", escape(t));
        }

        let _ = writeln!(h, "<h2>Farm</h2>");
        let _ = writeln!(
            h,
            "<p>Region: {} &middot; Catalog version: {}</p>",
            escape(&self.summary.region),
            escape(&self.summary.catalog_version)
        );
        let _ = writeln!(h, "<table>\n<tr><th>Crop</th><th>Area (ha)</th><th>Yield (t/ha)</th><th>Price (&euro;/t)</th></tr>");
        for c in &self.summary.crops {
            let _ = writeln!(
                h,
                "<tr><td>{}</td><td class=\"n\">{}</td><td class=\"n\">{}</td><td class=\"n\">{}</td></tr>",
                escape(&c.crop),
                num(c.area),
                num(c.yield_t_ha),
                num(c.price)
            );
        }
        let _ = writeln!(h, "</table>");

        let _ = writeln!(h, "<h2>Technology options</h2>");
        let _ = writeln!(h, "<table>\n<tr><th>Technology</th><th>Operation</th><th>Investment (&euro;)</th><th>Net flow (&euro;/yr)</th><th>NPV (&euro;)</th><th>IRR</th><th>BCR</th></tr>");
        for row in &self.options {
            metrics_html(&mut h, row);
        }
        let _ = writeln!(h, "</table>");

        let _ = writeln!(h, "<h2>Portfolio</h2>");
        let _ = writeln!(h, "<table>\n<tr><th></th><th></th><th>Investment (&euro;)</th><th>Net flow (&euro;/yr)</th><th>NPV (&euro;)</th><th>IRR</th><th>BCR</th></tr>");
        metrics_html(&mut h, &self.portfolio.metrics);
        let _ = writeln!(h, "</table>");
        let _ = writeln!(
            h,
            "<p>Sum of standalone investments: &euro; {}</p>",
            self.portfolio.rendered_standalone_investment
        );
        if !self.portfolio.shared_supports.is_empty() {
            let _ = writeln!(h, "<table>\n<tr><th>Support technology</th><th>Options</th><th>Area (ha)</th><th>Investment (&euro;)</th></tr>");
            for s in &self.portfolio.shared_supports {
                let options: Vec<String> = s.options.iter().map(|i| (i + 1).to_string()).collect();
                let _ = writeln!(
                    h,
                    "<tr><td>{}</td><td>{}</td><td class=\"n\">{}</td><td class=\"n\">{}</td></tr>",
                    escape(&s.support),
                    options.join(", "),
                    num(s.area),
                    s.rendered_investment
                );
            }
            let _ = writeln!(h, "</table>");
        }

        let _ = writeln!(h, "<h2>Input saved</h2>");
        if self.input_savings.is_empty() {
            let _ = writeln!(h, "<p>No input savings.</p>");
        } else {
            let _ = writeln!(h, "<table>\n<tr><th>Input</th><th>Operation</th><th>Quantity per year</th><th>Unit</th></tr>");
            for s in &self.input_savings {
                let _ = writeln!(
                    h,
                    "<tr><td>{}</td><td>{}</td><td class=\"n\">{}</td><td>{}</td></tr>",
                    escape(&s.input),
                    escape(&s.operation),
                    s.rendered_quantity,
                    escape(&s.unit)
                );
            }
            let _ = writeln!(h, "</table>");
        }

        let a = &self.assumptions;
        let _ = writeln!(h, "<h2 class=\"page\">Assumptions</h2>");
        let _ = writeln!(
            h,
            "<p>Discount rate: {} &middot; Horizon: {} years</p>\n<p>{}.</p>",
            num(a.discount_rate),
            a.horizon_years,
            escape(&a.fuel_and_labour_scope)
        );
        let _ = writeln!(h, "<table>\n<tr><th>#</th><th>Technology</th><th>Input %</th><th>Yield %</th><th>Fuel %</th><th>Labour %</th><th>Input scope</th><th>Source</th></tr>");
        for b in &a.benefits {
            let _ = writeln!(
                h,
                "<tr><td>{}</td><td>{}</td><td class=\"n\">{}</td><td class=\"n\">{}</td><td class=\"n\">{}</td><td class=\"n\">{}</td><td>{}</td><td>{}</td></tr>",
                b.option + 1,
                escape(&b.technology),
                num(b.input_reduction),
                num(b.yield_increase),
                num(b.fuel_reduction),
                num(b.labour_reduction),
                b.input_scope.as_str(),
                b.source.as_str()
            );
        }
        let _ = writeln!(h, "</table>");
        let _ = writeln!(h, "<h3>Values changed from defaults</h3>");
        list_html(
            &mut h,
            a.deviations
                .iter()
                .map(|d| format!("{}: {}", d.field, d.value)),
        );
        let _ = writeln!(h, "<h3>Placeholder values</h3>");
        list_html(&mut h, a.placeholders.iter().cloned());
        h.push_str("</body>\n</html>\n");
        h
    }
}

const STYLE: &str = "body { font-family: sans-serif; margin: 2em; }
table { border-collapse: collapse; margin: 0.5em 0 1em; }
th, td { border: 1px solid #999; padding: 0.25em 0.6em; }
td.n { text-align: right; }
.meta { color: #555; }
@media print { .page { page-break-before: always; } }
";

fn metrics_html(h: &mut String, row: &MetricsRow) {
    let r = &row.rendered;
    let _ = writeln!(
        h,
        "<tr><td>{}</td><td>{}</td><td class=\"n\">{}</td><td class=\"n\">{}</td><td class=\"n\">{}</td><td class=\"n\">{}</td><td class=\"n\">{}</td></tr>",
        escape(&row.technology),
        escape(&row.operation),
        r.investment,
        r.annual_net_flow,
        r.npv,
        r.irr,
        r.bcr
    );
}

fn list_html(h: &mut String, items: impl Iterator<Item = String>) {
    let items: Vec<String> = items.collect();
    if items.is_empty() {
        h.push_str("<p>None.</p>\n");
        return;
    }
    h.push_str("<ul>\n");
    for item in items {
        let _ = writeln!(h, "<li>{}</li>", escape(&item));
    }
    h.push_str("</ul>\n");
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Renders without run metadata.
pub fn render_report(result: &EvaluationResult, format: ReportFormat) -> String {
    render_report_with(result, format, &ReportContext::default())
}

pub fn render_report_with(
    result: &EvaluationResult,
    format: ReportFormat,
    ctx: &ReportContext,
) -> String {
    let report = Report::build(result, ctx);
    match format {
        ReportFormat::Structured => report.to_json(),
        ReportFormat::Printable => report.to_html(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;
    use crate::domain::FarmScenario;
    use crate::evaluate::evaluate;

    fn result(json: &str) -> EvaluationResult {
        let s: FarmScenario = serde_json::from_str(json).unwrap();
        evaluate(&s, &Catalog::seed()).unwrap()
    }

    fn single() -> EvaluationResult {
        result(
            r#"{"name": "North <field> & co", "region": "central-europe",
                "crops": [{"crop": "wheat", "area": 200, "yield": 7, "price": 200}],
                "options": [{"main": "vr-fertilizer", "supports": ["n-sensor"], "operation": "fertilization"}]}"#,
        )
    }

    #[test]
    fn money_rounds_half_even_on_exact_ties() {
        assert_eq!(fmt_money(0.125), "0.12");
        assert_eq!(fmt_money(0.375), "0.38");
        assert_eq!(fmt_money(2.5), "2.50");
        assert_eq!(fmt_money(-0.001), "0.00");
        assert_eq!(fmt_money(-12.345678), "-12.35");
        assert_eq!(fmt_ratio(Some(0.24951034453128796)), "0.2495");
        assert_eq!(fmt_ratio(None), "n/a");
    }

    #[test]
    fn structured_report_reparses_to_the_source() {
        let r = single();
        let json = render_report(&r, ReportFormat::Structured);
        let report: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(report.result, r);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        let back: EvaluationResult = serde_json::from_value(value["result"].clone()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn single_option_matches_portfolio_row() {
        let report = Report::build(&single(), &ReportContext::default());
        assert_eq!(report.options.len(), 1);
        let (o, p) = (&report.options[0], &report.portfolio.metrics);
        assert_eq!(o.investment, p.investment);
        assert_eq!(o.npv, p.npv);
        assert_eq!(o.irr, p.irr);
        assert_eq!(o.bcr, p.bcr);
        assert_eq!(o.rendered.npv, p.rendered.npv);
    }

    #[test]
    fn missing_irr_is_rendered_as_na() {
        let mut r = single();
        r.options[0].irr = None;
        r.portfolio.bcr = None;
        let report = Report::build(&r, &ReportContext::default());
        assert_eq!(report.options[0].rendered.irr, "n/a");
        assert_eq!(report.portfolio.metrics.rendered.bcr, "n/a");
        let html = report.to_html();
        assert!(html.contains("<td class=\"n\">n/a</td>"));
    }

    #[test]
    fn rendering_is_pure() {
        let r = single();
        for format in [ReportFormat::Structured, ReportFormat::Printable] {
            assert_eq!(render_report(&r, format), render_report(&r, format));
        }
        let ctx = ReportContext {
            run_id: Some("abc".into()),
            generated_at: DateTime::from_timestamp(1_700_000_000, 0),
        };
        let json = render_report_with(&r, ReportFormat::Structured, &ctx);
        assert!(json.contains("\"generatedAt\": \"2023-11-14T22:13:20Z\""));
    }

    #[test]
    fn printable_escapes_names_and_shares_rendered_numbers() {
        let report = Report::build(&single(), &ReportContext::default());
        let html = report.to_html();
        assert!(html.starts_with("<!DOCTYPE html>"));
        assert!(html.contains("North &lt;field&gt; &amp; co"));
        assert!(!html.contains("<field>"));
        for row in report.options.iter().chain([&report.portfolio.metrics]) {
            for s in [
                &row.rendered.investment,
                &row.rendered.npv,
                &row.rendered.irr,
                &row.rendered.bcr,
            ] {
                assert!(html.contains(&format!(">{s}<")), "{s} missing");
            }
        }
        for s in &report.input_savings {
            assert!(html.contains(&format!(">{}<", s.rendered_quantity)));
        }
    }

    #[test]
    fn user_values_appear_as_deviations() {
        let r = result(
            r#"{"region": "northern-europe", "discountRate": 0.06,
                "crops": [{"crop": "maize", "area": 80, "yield": 9, "price": 180}],
                "options": [{"main": "auto-steer", "supports": ["rtk-gps"], "operation": "seeding",
                             "benefits": {"inputReduction": 4, "yieldIncrease": 0, "fuelReduction": 6, "labourReduction": 5},
                             "recurringCost": 250}],
                "costOverrides": [{"crop": "maize", "operation": "seeding", "inputPrice": 3.1}]}"#,
        );
        let report = Report::build(&r, &ReportContext::default());
        let fields: Vec<&str> = report
            .assumptions
            .deviations
            .iter()
            .map(|d| d.field.as_str())
            .collect();
        assert!(fields.contains(&"discountRate"));
        assert!(fields.contains(&"options[0].benefits.inputReduction"));
        assert!(fields.contains(&"options[0].recurringCost"));
        assert!(fields.contains(&"costOverrides[0].inputPrice"));
        assert!(fields.contains(&"crops[0].yield"));
        assert!(!fields.contains(&"options[0].mainInvestment"));
        assert_eq!(report.assumptions.benefits[0].input_reduction, 4.0);
        assert_eq!(report.assumptions.benefits[0].source, ValueSource::User);
        assert!(report
            .assumptions
            .placeholders
            .iter()
            .any(|p| p.contains("investment")));
    }
}
