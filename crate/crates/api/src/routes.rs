use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use pa_econ_core::catalog::Component;
use pa_econ_core::domain::{
    BenefitProfile, BuiltinCrop, MainTechnology, OperationKind, Region, SupportTechnology,
    ValueSource, DEFAULT_DISCOUNT_RATE, DEFAULT_HORIZON_YEARS,
};
use pa_econ_core::report::{render_report_with, ReportContext};
use pa_econ_core::store::{Comparison, RunSummary, SavedRun};
use pa_econ_core::{
    evaluate, validate_scenario, EvaluationResult, FarmScenario, ReportFormat, Violation,
};

use crate::error::ApiError;
use crate::AppState;

type Shared = State<Arc<AppState>>;
type Params = Result<Query<HashMap<String, String>>, axum::extract::rejection::QueryRejection>;

pub(crate) fn routes(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/meta", get(meta))
        .route("/v1/catalog", get(catalog))
        .route("/v1/technologies", get(technologies))
        .route("/v1/scenarios", post(create_scenario))
        .route(
            "/v1/scenarios/{id}",
            get(get_scenario).put(put_scenario).delete(delete_scenario),
        )
        .route("/v1/scenarios/{id}/evaluate", post(evaluate_saved))
        .route("/v1/evaluate", post(evaluate_body))
        .route("/v1/runs", get(list_runs))
        .route("/v1/runs/compare", post(compare_runs))
        .route("/v1/runs/{id}", get(get_run))
        .route("/v1/runs/{id}/report", get(run_report))
        .fallback(|| async { ApiError::route_not_found() })
        .method_not_allowed_fallback(|| async { ApiError::method_not_allowed() })
        .with_state(state)
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::invalid_body(e.to_string()))
}

fn query(params: Params, allowed: &[&str]) -> Result<HashMap<String, String>, ApiError> {
    let Query(map) = params.map_err(|e| ApiError::invalid_query(e.body_text()))?;
    if let Some(key) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(ApiError::invalid_query(format!(
            "unknown query parameter `{key}`"
        )));
    }
    Ok(map)
}

fn flag(map: &HashMap<String, String>, key: &str) -> Result<bool, ApiError> {
    match map.get(key).map(String::as_str) {
        None | Some("false") => Ok(false),
        Some("true") => Ok(true),
        Some(other) => Err(ApiError::invalid_query(format!(
            "`{key}` must be true or false, got `{other}`"
        ))),
    }
}

fn report_format(value: Option<&String>) -> Result<Option<ReportFormat>, ApiError> {
    value
        .map(|v| v.parse::<ReportFormat>().map_err(ApiError::invalid_query))
        .transpose()
}

fn rendered(format: ReportFormat, body: String) -> Response {
    ([(header::CONTENT_TYPE, format.media_type())], body).into_response()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Named {
    pub id: String,
    pub label: String,
}

fn named<T: Copy>(
    all: &[T],
    id: impl Fn(T) -> &'static str,
    label: impl Fn(T) -> &'static str,
) -> Vec<Named> {
    all.iter()
        .map(|&v| Named {
            id: id(v).to_owned(),
            label: label(v).to_owned(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CropMeta {
    pub id: String,
    pub label: String,
    /// Region id to {yield t/ha, price €/t}.
    pub defaults: BTreeMap<String, CropDefaultValues>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropDefaultValues {
    #[serde(rename = "yield")]
    pub yield_t_ha: f64,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Meta {
    pub catalog_version: String,
    pub regions: Vec<Named>,
    pub crops: Vec<CropMeta>,
    pub operations: Vec<Named>,
    pub main_technologies: Vec<Named>,
    pub support_technologies: Vec<Named>,
    pub default_discount_rate: f64,
    pub default_horizon_years: u32,
}

async fn meta(State(state): Shared) -> Json<Meta> {
    let catalog = &state.catalog;
    let crops = BuiltinCrop::ALL
        .iter()
        .map(|&crop| CropMeta {
            id: crop.as_str().to_owned(),
            label: crop.label().to_owned(),
            defaults: Region::ALL
                .iter()
                .filter_map(|&region| {
                    catalog.crop_defaults(region, crop).map(|d| {
                        (
                            region.as_str().to_owned(),
                            CropDefaultValues {
                                yield_t_ha: d.default_yield,
                                price: d.default_price,
                            },
                        )
                    })
                })
                .collect(),
        })
        .collect();
    Json(Meta {
        catalog_version: catalog.version().to_owned(),
        regions: named(Region::ALL, Region::as_str, Region::label),
        crops,
        operations: named(
            OperationKind::ALL,
            OperationKind::as_str,
            OperationKind::label,
        ),
        main_technologies: named(
            MainTechnology::ALL,
            MainTechnology::as_str,
            MainTechnology::label,
        ),
        support_technologies: named(
            SupportTechnology::ALL,
            SupportTechnology::as_str,
            SupportTechnology::label,
        ),
        default_discount_rate: DEFAULT_DISCOUNT_RATE,
        default_horizon_years: DEFAULT_HORIZON_YEARS,
    })
}

async fn catalog(State(state): Shared) -> Response {
    (
        [(header::CONTENT_TYPE, "application/json")],
        state.catalog.to_json(),
    )
        .into_response()
}

/// Investment defaults of a combination, € at the reference farm size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InvestmentDefaults {
    pub main: f64,
    pub supports: BTreeMap<SupportTechnology, f64>,
    pub total: f64,
    /// €/yr
    pub recurring_cost: f64,
    pub provenance: ValueSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TechnologyEntry {
    pub main: MainTechnology,
    pub supports: BTreeSet<SupportTechnology>,
    pub operation: OperationKind,
    pub label: String,
    pub benefits: BenefitProfile,
    pub investment: InvestmentDefaults,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TechnologyList {
    pub catalog_version: String,
    pub technologies: Vec<TechnologyEntry>,
}

fn investment_defaults(
    state: &AppState,
    main: MainTechnology,
    supports: &BTreeSet<SupportTechnology>,
) -> InvestmentDefaults {
    // catalog integrity guarantees an entry for every referenced component
    let entry = |c: Component| state.catalog.investment(c).expect("validated catalog");
    let m = entry(Component::Main(main));
    let mut out = InvestmentDefaults {
        main: m.base_investment,
        supports: BTreeMap::new(),
        total: m.base_investment,
        recurring_cost: m.recurring_cost,
        provenance: m.provenance,
    };
    for &s in supports {
        let e = entry(Component::Support(s));
        out.supports.insert(s, e.base_investment);
        out.total += e.base_investment;
        out.recurring_cost += e.recurring_cost;
        if e.provenance == ValueSource::Placeholder {
            out.provenance = ValueSource::Placeholder;
        }
    }
    out
}

fn label(main: MainTechnology, supports: &BTreeSet<SupportTechnology>) -> String {
    let mut name = main.label().to_owned();
    if !supports.is_empty() {
        let s: Vec<_> = supports.iter().map(|s| s.label()).collect();
        name.push_str(" + ");
        name.push_str(&s.join(", "));
    }
    name
}

async fn technologies(
    State(state): Shared,
    params: Params,
) -> Result<Json<TechnologyList>, ApiError> {
    let params = query(params, &["operation"])?;
    let operations: Vec<OperationKind> = match params.get("operation") {
        Some(op) => vec![op
            .parse()
            .map_err(|e: pa_econ_core::domain::UnknownVariant| {
                ApiError::invalid_query(e.to_string())
            })?],
        None => OperationKind::ALL.to_vec(),
    };
    let mut technologies = Vec::new();
    for operation in operations {
        for option in state.catalog.compatible_options(operation) {
            technologies.push(TechnologyEntry {
                main: option.main,
                supports: option.supports.clone(),
                operation,
                label: label(option.main, option.supports),
                benefits: option.benefits,
                investment: investment_defaults(&state, option.main, option.supports),
            });
        }
    }
    Ok(Json(TechnologyList {
        catalog_version: state.catalog.version().to_owned(),
        technologies,
    }))
}

fn validated(scenario: &FarmScenario) -> Result<(), ApiError> {
    let violations = validate_scenario(scenario);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(ApiError::validation(violations))
    }
}

fn without_id(body: &Bytes) -> Result<FarmScenario, ApiError> {
    let scenario: FarmScenario = parse_body(body)?;
    if scenario.id.is_some() {
        return Err(ApiError::validation(vec![Violation::new(
            "id",
            "assigned by the server; omit it from the request",
        )]));
    }
    validated(&scenario)?;
    Ok(scenario)
}

async fn create_scenario(State(state): Shared, body: Bytes) -> Result<Response, ApiError> {
    let scenario = without_id(&body)?;
    let stored = state.scenarios.create(&scenario)?;
    Ok((StatusCode::CREATED, Json(stored)).into_response())
}

async fn get_scenario(
    State(state): Shared,
    Path(id): Path<String>,
) -> Result<Json<FarmScenario>, ApiError> {
    Ok(Json(state.scenarios.get(&id)?))
}

async fn put_scenario(
    State(state): Shared,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<FarmScenario>, ApiError> {
    let mut scenario: FarmScenario = parse_body(&body)?;
    match scenario.id.take() {
        Some(other) if other != id => {
            return Err(ApiError::validation(vec![Violation::new(
                "id",
                "does not match the scenario addressed by the path",
            )]))
        }
        _ => {}
    }
    validated(&scenario)?;
    Ok(Json(state.scenarios.replace(&id, &scenario)?))
}

async fn delete_scenario(
    State(state): Shared,
    Path(id): Path<String>,
) -> Result<StatusCode, ApiError> {
    state.scenarios.delete(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvaluateResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_id: Option<String>,
    pub result: EvaluationResult,
}

fn run_evaluation(
    state: &AppState,
    scenario: &FarmScenario,
    params: &HashMap<String, String>,
) -> Result<Response, ApiError> {
    let save = flag(params, "save")?;
    let format = report_format(params.get("report"))?;
    let result = evaluate(scenario, &state.catalog)?;
    let run_id = if save {
        Some(state.runs.save_run(scenario, &result)?)
    } else {
        None
    };
    Ok(match format {
        Some(format) => {
            let ctx = ReportContext {
                run_id,
                generated_at: None,
            };
            rendered(format, render_report_with(&result, format, &ctx))
        }
        None => Json(EvaluateResponse { run_id, result }).into_response(),
    })
}

async fn evaluate_saved(
    State(state): Shared,
    Path(id): Path<String>,
    params: Params,
) -> Result<Response, ApiError> {
    let params = query(params, &["save", "report"])?;
    let scenario = state.scenarios.get(&id)?;
    run_evaluation(&state, &scenario, &params)
}

async fn evaluate_body(
    State(state): Shared,
    params: Params,
    body: Bytes,
) -> Result<Response, ApiError> {
    let params = query(params, &["save", "report"])?;
    let scenario: FarmScenario = parse_body(&body)?;
    run_evaluation(&state, &scenario, &params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunList {
    pub runs: Vec<RunSummary>,
}

async fn list_runs(State(state): Shared) -> Result<Json<RunList>, ApiError> {
    Ok(Json(RunList {
        runs: state.runs.list_runs()?,
    }))
}

async fn get_run(State(state): Shared, Path(id): Path<String>) -> Result<Json<SavedRun>, ApiError> {
    Ok(Json(state.runs.load_run(&id)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CompareRequest {
    pub run_ids: Vec<String>,
}

async fn compare_runs(State(state): Shared, body: Bytes) -> Result<Json<Comparison>, ApiError> {
    let request: CompareRequest = parse_body(&body)?;
    if request.run_ids.is_empty() {
        return Err(ApiError::validation(vec![Violation::new(
            "runIds",
            "must not be empty",
        )]));
    }
    Ok(Json(state.runs.compare_runs(&request.run_ids)?))
}

async fn run_report(
    State(state): Shared,
    Path(id): Path<String>,
    params: Params,
) -> Result<Response, ApiError> {
    let params = query(params, &["format"])?;
    let format = report_format(params.get("format"))?.unwrap_or(ReportFormat::Structured);
    let run = state.runs.load_run(&id)?;
    let ctx = ReportContext {
        run_id: Some(run.run_id.clone()),
        generated_at: Some(run.created_at),
    };
    let body = render_report_with(&run.result, format, &ctx);
    let extension = match format {
        ReportFormat::Structured => "json",
        ReportFormat::Printable => "html",
    };
    let disposition = format!("attachment; filename=\"report-{}.{extension}\"", run.run_id);
    Ok((
        [
            (header::CONTENT_TYPE, format.media_type().to_owned()),
            (header::CONTENT_DISPOSITION, disposition),
        ],
        body,
    )
        .into_response())
}
