use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use stl_decomp_capi::*;

const SCENARIO: &str = r#"
schema_version = 1

[system]
agents = 3
state_dim = 2

[communication]
edges = [[1, 2], [2, 3]]

[[tasks]]
name = "meet"
subject = [1, 3]
operator = "always"
interval = [0.0, 4.0]
predicate = { type = "ball", center = [0.0, 0.0], radius = 3.0 }
"#;

fn last_error() -> String {
    unsafe { CStr::from_ptr(stldec_last_error()) }
        .to_str()
        .unwrap()
        .to_string()
}

fn good_csv() -> CString {
    let mut csv = String::from("t,x1_1,x1_2,x2_1,x2_2,x3_1,x3_2\n");
    for k in 0..=8 {
        csv.push_str(&format!("{},0,0,0.5,0,1,0\n", k as f64 * 0.5));
    }
    CString::new(csv).unwrap()
}

#[test]
fn parse_decompose_and_query_through_the_c_surface() {
    let text = CString::new(SCENARIO).unwrap();
    let scenario = unsafe { stldec_scenario_parse(text.as_ptr()) };
    assert!(!scenario.is_null(), "{}", last_error());
    assert_eq!(unsafe { stldec_scenario_agents(scenario) }, 3);
    assert_eq!(unsafe { stldec_scenario_state_dim(scenario) }, 2);

    let result = unsafe { stldec_decompose(scenario) };
    assert!(!result.is_null(), "{}", last_error());
    assert_eq!(unsafe { stldec_result_status(result) }, STLDEC_STATUS_OPTIMAL);
    assert_eq!(unsafe { stldec_result_task_count(result) }, 1);
    let objective = unsafe { stldec_result_objective(result) };
    assert!(objective.is_finite() && objective > 0.0);
    let margin = unsafe { stldec_result_min_margin(result) };
    assert!(margin > -1e-6, "margin {margin}");

    let json = unsafe { stldec_result_report_json(result) };
    assert!(!json.is_null());
    let json_text = unsafe { CStr::from_ptr(json) }.to_str().unwrap();
    assert!(json_text.contains("\"status\": \"optimal\""));
    assert!(json_text.contains("\"tasks\""));
    unsafe { stldec_string_free(json) };

    let table = unsafe { stldec_result_report_table(result) };
    assert!(!table.is_null());
    let table_text = unsafe { CStr::from_ptr(table) }.to_str().unwrap();
    assert!(table_text.contains("status: optimal"));
    unsafe { stldec_string_free(table) };

    unsafe { stldec_result_free(result) };
    unsafe { stldec_scenario_free(scenario) };
}

#[test]
fn robustness_covers_both_task_sets() {
    let text = CString::new(SCENARIO).unwrap();
    let scenario = unsafe { stldec_scenario_parse(text.as_ptr()) };
    assert!(!scenario.is_null());
    let csv = good_csv();

    for which in [STLDEC_TASKS_ORIGINAL, STLDEC_TASKS_REWRITTEN] {
        let mut rho = f64::NAN;
        let code = unsafe { stldec_robustness(scenario, csv.as_ptr(), which, &mut rho) };
        assert_eq!(code, STLDEC_OK, "{}", last_error());
        assert!(rho > 0.0, "which {which}: rho {rho}");
    }

    // Truncated trajectory: the task horizon is not covered.
    let short = CString::new("t,x1_1,x1_2,x2_1,x2_2,x3_1,x3_2\n0,0,0,0,0,0,0\n").unwrap();
    let mut rho = f64::NAN;
    let code =
        unsafe { stldec_robustness(scenario, short.as_ptr(), STLDEC_TASKS_ORIGINAL, &mut rho) };
    assert_eq!(code, STLDEC_ERR_MONITOR);
    assert!(!last_error().is_empty());

    unsafe { stldec_scenario_free(scenario) };
}

#[test]
fn failures_return_codes_and_set_the_error_message() {
    assert!(unsafe { stldec_scenario_parse(ptr::null()) }.is_null());
    assert_eq!(last_error(), "null string argument");

    let bad_utf8 = [0xffu8, 0xfe, 0x00];
    assert!(unsafe { stldec_scenario_parse(bad_utf8.as_ptr() as *const _) }.is_null());
    assert!(last_error().contains("UTF-8"));

    let bad_toml = CString::new("schema_version = [").unwrap();
    assert!(unsafe { stldec_scenario_parse(bad_toml.as_ptr()) }.is_null());
    assert!(last_error().contains("parse error"));

    let invalid = CString::new(SCENARIO.replace("radius = 3.0", "radius = -1.0")).unwrap();
    assert!(unsafe { stldec_scenario_parse(invalid.as_ptr()) }.is_null());
    assert!(last_error().contains("tasks[0].predicate.radius"));

    assert!(unsafe { stldec_decompose(ptr::null()) }.is_null());
    assert_eq!(unsafe { stldec_result_status(ptr::null()) }, STLDEC_ERR_NULL_ARGUMENT);
    assert_eq!(unsafe { stldec_result_task_count(ptr::null()) }, STLDEC_ERR_NULL_ARGUMENT);
    assert!(unsafe { stldec_result_objective(ptr::null()) }.is_nan());
    assert!(unsafe { stldec_result_min_margin(ptr::null()) }.is_nan());
    assert!(unsafe { stldec_result_report_json(ptr::null()) }.is_null());

    let text = CString::new(SCENARIO).unwrap();
    let scenario = unsafe { stldec_scenario_parse(text.as_ptr()) };
    let csv = good_csv();
    let mut rho = 0.0;
    assert_eq!(
        unsafe { stldec_robustness(scenario, csv.as_ptr(), 99, &mut rho) },
        STLDEC_ERR_NULL_ARGUMENT
    );
    assert_eq!(
        unsafe { stldec_robustness(scenario, csv.as_ptr(), STLDEC_TASKS_ORIGINAL, ptr::null_mut()) },
        STLDEC_ERR_NULL_ARGUMENT
    );
    unsafe { stldec_scenario_free(scenario) };

    // Frees tolerate null.
    unsafe { stldec_scenario_free(ptr::null_mut()) };
    unsafe { stldec_result_free(ptr::null_mut()) };
    unsafe { stldec_string_free(ptr::null_mut()) };

    let version = unsafe { CStr::from_ptr(stldec_version()) }.to_str().unwrap();
    assert!(!version.is_empty());
}

#[test]
fn generated_header_declares_the_api() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/stl_decomp.h");
    let text = std::fs::read_to_string(&header).expect("header generated at build time");
    for needle in [
        "stldec_scenario_parse",
        "stldec_decompose",
        "stldec_result_report_json",
        "stldec_robustness",
        "stldec_string_free",
        "stldec_last_error",
        "STLDEC_STATUS_OPTIMAL",
        "STLDEC_ERR_MONITOR",
        "typedef struct StldecScenario StldecScenario;",
        "typedef struct StldecResult StldecResult;",
    ] {
        assert!(text.contains(needle), "header is missing `{needle}`");
    }
}
