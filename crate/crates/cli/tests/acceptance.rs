//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero if
//! any criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::cell::Cell;
use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{header, Method, Request};
use http_body_util::BodyExt;
use proptest::test_runner::{Config, TestRng, TestRunner};
use tower::ServiceExt;

use pa_econ_core::catalog::Component;
use pa_econ_core::domain::{MainTechnology as M, SupportTechnology as S};
use pa_econ_core::finance::{self, affected_operations, irr_tolerance, npv, scale_investment};
use pa_econ_core::{evaluate, render_report, Catalog, FarmScenario, ReportFormat, RunStore};

type Outcome = Result<String, String>;

/// (main, supports, input, yield, fuel, labour)
type TableRow = (M, &'static [S], f64, f64, f64, f64);

type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    TestRunner::new_with_rng(config, rng)
}

fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))?;
    Ok(took)
}

/// Table 1 as printed: (main, supports, input, yield, fuel, labour) in percent, with
/// "-" typed as 0.
#[rustfmt::skip]
const TABLE_1: &[TableRow] = &[
    (M::AutoSteer, &[S::NormalGps], 3.0, 0.0, 3.0, 1.0),
    (M::AutoSteer, &[S::RtkGps], 3.0, 0.0, 3.0, 1.0),
    (M::AutoSteer, &[S::RtkGps, S::Ctf], 3.0, 1.0, 5.0, 1.0),
    (M::SectionControl, &[S::NormalGps], 2.0, 0.0, 0.0, 0.0),
    (M::SectionControl, &[S::RtkGps], 4.0, 0.0, 0.0, 0.0),
    (M::VrSeeder, &[S::Satellite], 3.0, 0.0, 0.0, 0.0),
    (M::VrSeeder, &[S::SurveyUav], 3.0, 0.0, 0.0, 0.0),
    (M::VrSeeder, &[S::YieldMap], 3.0, 0.0, 0.0, 0.0),
    (M::VrSeeder, &[S::SoilEc], 3.0, 0.0, 0.0, 0.0),
    (M::VrFertilizer, &[S::Satellite], 0.0, 3.0, 0.0, 0.0),
    (M::VrFertilizer, &[S::SurveyUav], 0.0, 3.0, 0.0, 0.0),
    (M::VrFertilizer, &[S::YieldMap], 0.0, 3.0, 0.0, 0.0),
    (M::VrFertilizer, &[S::SoilEc], 0.0, 3.0, 0.0, 0.0),
    (M::VrFertilizer, &[S::NSensor], 1.0, 0.0, 0.0, 0.0),
    (M::VrFertilizer, &[S::NSensor, S::YieldMap], 1.0, 3.0, 0.0, 0.0),
    (M::VrFertilizer, &[S::NSensor, S::YieldMap, S::SoilEc], 3.0, 3.0, 0.0, 0.0),
    (M::VrSprayer, &[S::NSensor, S::YieldMap, S::SoilEc], 3.0, 3.0, 0.0, 0.0),
    (M::VrSprayer, &[S::Satellite], 15.0, 0.0, 0.0, 0.0),
    (M::VrSprayer, &[S::NSensor], 15.0, 0.0, 0.0, 0.0),
    (M::VrSprayer, &[S::SurveyUav], 20.0, 0.0, 0.0, 0.0),
    (M::VrSprayer, &[S::Satellite, S::YieldMap, S::SoilEc], 15.0, 0.0, 0.0, 0.0),
    (M::VrSprayer, &[S::Satellite], 15.0, 0.0, 0.0, 0.0),
    (M::VrSprayer, &[S::Satellite], 15.0, 0.0, 0.0, 0.0),
    (M::VrSprayer, &[S::SurveyUav], 15.0, 0.0, 0.0, 0.0),
    (M::VrSprayer, &[S::SurveyUav, S::YieldMap], 20.0, 0.0, 0.0, 0.0),
    (M::VrSprayer, &[S::Satellite], 15.0, 0.0, 0.0, 0.0),
    (M::VrSprayer, &[S::SurveyUav], 20.0, 0.0, 0.0, 0.0),
    (M::VrLime, &[S::Satellite, S::YieldMap, S::SoilEc], 2.0, 1.0, 0.0, 0.0),
    (M::VrLime, &[S::SurveyUav, S::YieldMap, S::SoilEc], 2.0, 1.0, 0.0, 0.0),
    (M::VrLime, &[S::NSensor, S::YieldMap, S::SoilEc], 2.0, 1.0, 0.0, 0.0),
    (M::VrManure, &[S::Satellite], 1.0, 0.0, 0.0, 0.0),
    (M::VrManure, &[S::Satellite, S::YieldMap], 2.0, 0.0, 0.0, 0.0),
    (M::VrManure, &[S::Satellite, S::YieldMap, S::SoilSampling], 3.0, 0.0, 0.0, 0.0),
    (M::VrManure, &[S::SurveyUav], 2.0, 0.0, 0.0, 0.0),
    (M::VrManure, &[S::SurveyUav, S::YieldMap], 3.0, 0.0, 0.0, 0.0),
    (M::VrManure, &[S::SurveyUav, S::YieldMap, S::SoilSampling], 4.0, 0.0, 0.0, 0.0),
    (M::InterRowHoeingGps, &[], 0.0, 0.0, 0.0, 0.0),
    (M::InterRowHoeingCamera, &[], 0.0, 0.0, 0.0, 50.0),
];

fn catalog_fidelity() -> Outcome {
    let start = Instant::now();
    let catalog = Catalog::seed();
    let rows = catalog.benefit_rows();
    ensure(rows.len() == 38, || {
        format!("{} benefit rows, expected 38", rows.len())
    })?;
    ensure(TABLE_1.len() == 38, || "fixture is not 38 rows".into())?;
    for (i, (row, &(main, supports, input, yld, fuel, labour))) in
        rows.iter().zip(TABLE_1).enumerate()
    {
        let supports: BTreeSet<S> = supports.iter().copied().collect();
        let v = row.benefits.values;
        let got = [
            v.input_reduction,
            v.yield_increase,
            v.fuel_reduction,
            v.labour_reduction,
        ]
        .map(|f| f * 100.0);
        let as_percent = [input, yld, fuel, labour].map(|p| p / 100.0);
        ensure(row.main == main && row.supports == supports, || {
            format!(
                "row {i}: {} {:?} != {main} {supports:?}",
                row.main, row.supports
            )
        })?;
        ensure(
            [
                v.input_reduction,
                v.yield_increase,
                v.fuel_reduction,
                v.labour_reduction,
            ] == as_percent,
            || {
                format!(
                    "row {i} ({main}): {got:?} != {:?}",
                    [input, yld, fuel, labour]
                )
            },
        )?;
    }
    let took = within(Duration::from_secs(1), start)?;
    Ok(format!("38/38 rows exact ({took:?})"))
}

/// Discount-sum oracle: each flow divided by (1 + r) t times.
fn brute_force_npv(investment: f64, flows: &[f64], rate: f64) -> f64 {
    let mut total = -investment;
    for (t, flow) in flows.iter().enumerate() {
        let mut v = *flow;
        for _ in 0..=t {
            v /= 1.0 + rate;
        }
        total += v;
    }
    total
}

fn npv_oracle() -> Outcome {
    // 40-digit evaluation of the same sum: 938.963827827876...
    const FROZEN: f64 = 938.9638278278764;
    let flows = [300.0; 8];
    let engine = npv(1000.0, &flows, 0.05).map_err(|e| e.to_string())?;
    let oracle = brute_force_npv(1000.0, &flows, 0.05);
    ensure((oracle - FROZEN).abs() < 1e-9, || {
        format!("oracle {oracle} drifted from {FROZEN}")
    })?;
    ensure((engine - FROZEN).abs() <= 0.01, || {
        format!("engine {engine}, oracle {FROZEN}")
    })?;
    Ok(format!(
        "npv = {engine:.6} (oracle {FROZEN:.6}, tolerance 0.01)"
    ))
}

fn irr_root_property() -> Outcome {
    let start = Instant::now();
    let worst = Cell::new(0.0f64);
    runner(1000)
        .run(&support::canonical_cash_flows(), |(inv, flows)| {
            let r = finance::irr(inv, &flows)
                .map_err(|e| proptest::test_runner::TestCaseError::fail(e.to_string()))?;
            let residual = npv(inv, &flows, r).unwrap().abs();
            worst.set(worst.get().max(residual / inv.max(1.0)));
            proptest::prop_assert!(
                residual < irr_tolerance(inv),
                "I'={} r={} npv={}",
                inv,
                r,
                residual
            );
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let single = finance::irr(1000.0, &[1050.0]).map_err(|e| e.to_string())?;
    ensure((single - 0.05).abs() < 1e-9, || {
        format!("single period irr {single}")
    })?;
    let took = within(Duration::from_secs(5), start)?;
    Ok(format!(
        "1000 instances, worst |npv|/max(1,I') = {:.2e}; single period {single} ({took:?})",
        worst.get()
    ))
}

fn scaling_rule() -> Outcome {
    // 10000 * 2^0.6 to 40 digits: 15157.16566510398...
    const FROZEN: f64 = 15157.16566510398;
    let s = scale_investment(10000.0, 100.0).map_err(|e| e.to_string())?;
    ensure((s - FROZEN).abs() <= 0.01, || {
        format!("scale(10000, 100) = {s}")
    })?;
    for area in [50.0, 10.0, 0.5, 49.999] {
        let v = scale_investment(10000.0, area).map_err(|e| e.to_string())?;
        ensure(v == 10000.0, || format!("scale(10000, {area}) = {v}"))?;
    }
    Ok(format!(
        "scale(10000, 100) = {s:.2}; identity at 50 ha and clamp below exact"
    ))
}

fn bcr_npv_coherence() -> Outcome {
    let checked = Cell::new(0u32);
    runner(2000)
        .run(&support::arbitrary_cash_flows(), |(inv, flows, rate)| {
            if let Ok(b) = finance::bcr(inv, &flows, rate) {
                let n = npv(inv, &flows, rate).unwrap();
                if n.abs() > 1e-6 * (1.0 + inv) {
                    checked.set(checked.get() + 1);
                    proptest::prop_assert_eq!(n > 0.0, b > 1.0, "npv {} bcr {}", n, b);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let checked = checked.get();
    ensure(checked >= 1000, || {
        format!("only {checked} instances had a defined BCR")
    })?;
    Ok(format!("{checked} instances with defined BCR agree"))
}

fn shared_support_dedup() -> Outcome {
    let scenario: FarmScenario = serde_json::from_str(
        r#"{"region": "central-europe",
            "crops": [{"crop": "wheat", "area": 1600, "yield": 7.5, "price": 200}],
            "options": [
              {"main": "auto-steer", "supports": ["rtk-gps"], "operation": "seeding"},
              {"main": "section-control", "supports": ["rtk-gps"], "operation": "spraying-herbicide"}
            ]}"#,
    )
    .map_err(|e| e.to_string())?;
    let catalog = Catalog::seed();
    let result = evaluate(&scenario, &catalog).map_err(|e| e.to_string())?;
    let standalone: f64 = result.options.iter().map(|o| o.scaled_investment).sum();
    let rtk = catalog
        .investment(Component::Support(S::RtkGps))
        .map_err(|e| e.to_string())?
        .base_investment;
    let rtk_scaled = scale_investment(rtk, 1600.0).map_err(|e| e.to_string())?;
    let expected = standalone - rtk_scaled;
    let got = result.portfolio.scaled_investment;
    ensure(got == expected, || {
        format!("portfolio {got} != {standalone} - {rtk_scaled}")
    })?;
    Ok(format!(
        "portfolio {got} = {standalone} - {rtk_scaled} (exact)"
    ))
}

fn end_to_end_equivalence() -> Outcome {
    let path = repo_root().join("fixtures/scenarios/golden.json");
    let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let scenario: FarmScenario = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let engine = render_report(
        &evaluate(&scenario, &Catalog::seed()).map_err(|e| e.to_string())?,
        ReportFormat::Structured,
    );

    let out = Command::new(env!("CARGO_BIN_EXE_pa-econ"))
        .args(["evaluate", "--format", "structured", "--scenario"])
        .arg(&path)
        .env_remove("PA_ECON_CATALOG")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!(
            "cli exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        )
    })?;
    let cli = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let state =
        pa_econ_api::AppState::open(Catalog::seed(), dir.path()).map_err(|e| e.to_string())?;
    let app = pa_econ_api::router(Arc::new(state), None);
    let api = tokio::runtime::Runtime::new()
        .map_err(|e| e.to_string())?
        .block_on(async {
            let req = Request::builder()
                .method(Method::POST)
                .uri("/v1/evaluate?report=structured")
                .header(header::CONTENT_TYPE, "application/json")
                .body(Body::from(text.clone()))
                .unwrap();
            let res = app.oneshot(req).await.unwrap();
            let bytes = res.into_body().collect().await.unwrap().to_bytes();
            String::from_utf8(bytes.to_vec())
        })
        .map_err(|e| e.to_string())?;

    ensure(cli == engine, || {
        "CLI report differs from the engine report".into()
    })?;
    ensure(api == engine, || {
        "API report differs from the engine report".into()
    })?;
    Ok(format!(
        "{} bytes identical across CLI, API and engine",
        engine.len()
    ))
}

fn persistence_round_trip() -> Outcome {
    let catalog = Catalog::seed();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = RunStore::open(dir.path()).map_err(|e| e.to_string())?;
    runner(64)
        .run(&support::scenario(), |s| {
            let result = evaluate(&s, &catalog).unwrap();
            let id = store.save_run(&s, &result).unwrap();
            let run = store.load_run(&id).unwrap();
            proptest::prop_assert_eq!(&run.scenario, &s);
            proptest::prop_assert_eq!(&run.result, &result);
            proptest::prop_assert_eq!(evaluate(&run.scenario, &catalog).unwrap(), result);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("64 generated scenarios saved, reloaded equal and re-evaluated exactly".into())
}

fn physical_monetary_consistency() -> Outcome {
    let catalog = Catalog::seed();
    let options = Cell::new(0usize);
    runner(300)
        .run(&support::scenario(), |s| {
            let result = evaluate(&s, &catalog).unwrap();
            let farm_ops = s.effective_operations();
            for o in &result.options {
                let opt = &o.option;
                let ops = affected_operations(opt.benefits.input_scope, opt.operation, &farm_ops);
                let mut expected = 0.0;
                for name in &opt.crops {
                    let crop = s.crop(name).unwrap();
                    let saved: Vec<_> = ops
                        .iter()
                        .map(|&op| {
                            let p = catalog
                                .cost_profile(s.region, crop, op, &s.cost_overrides)
                                .unwrap();
                            (
                                p.application_rate
                                    * p.treatments_per_year
                                    * crop.area
                                    * opt.benefits.values.input_reduction,
                                p.input_price,
                            )
                        })
                        .collect();
                    expected += saved.iter().map(|(q, price)| q * price).sum::<f64>();
                }
                let got = o.annual.input_saving;
                proptest::prop_assert!(
                    (got - expected).abs() <= 1e-9 * expected.abs().max(1e-9),
                    "input saving {} vs quantity x price {}",
                    got,
                    expected
                );
                options.set(options.get() + 1);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "{} options over 300 scenarios agree to 1e-9 relative",
        options.get()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("catalog fidelity", catalog_fidelity),
        ("NPV discount-sum oracle", npv_oracle),
        ("IRR root property", irr_root_property),
        ("0.6 scaling rule", scaling_rule),
        ("BCR/NPV sign coherence", bcr_npv_coherence),
        ("shared support deduplication", shared_support_dedup),
        ("end-to-end report equivalence", end_to_end_equivalence),
        ("persistence round-trip", persistence_round_trip),
        (
            "physical/monetary consistency",
            physical_monetary_consistency,
        ),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  criterion {}: {name}: {detail}", n + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {}: {name}: {why}", n + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
