//! CSV and JSON artifacts. Floats carry 9 significant digits.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::placement::PlacementMethod;

use super::predict::TrainRow;
use super::run::{RunOutput, SlotLog};
use super::sweep::SweepRow;

pub const SLOTS_HEADER: &str = "slot,period,user,content,link,server,delay_s,delay_score,device_score_sum,intervals,qoe,label,satisfied,power_w,power_clamped";
pub const UAVS_HEADER: &str = "slot,uav,x_m,y_m,h_m,users,requests,cache_hits,power_w,method,planned_objective_w";
pub const SWEEP_HEADER: &str = "param,value,mean_uav_power_w,total_uav_power_w,satisfied_fraction,cache_hit_rate,mean_altitude_m,requests,failures,infeasible_user_slots";
pub const TRAIN_HEADER: &str = "user,model,pattern,label,steps,nrmse,quota_used,quota_after";

/// `%.9g`: 9 significant digits, trailing zeros trimmed, exponent form
/// outside [1e-5, 1e9).
pub fn fmt9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let s = format!("{x:.*}", (8 - exp) as usize);
        trim(&s).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mant), exp.abs())
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn method_str(m: Option<PlacementMethod>) -> &'static str {
    match m {
        None => "",
        Some(PlacementMethod::ClosedForm) => "closed_form",
        Some(PlacementMethod::LocalSearch) => "local_search",
        Some(PlacementMethod::Exhaustive) => "exhaustive",
        Some(PlacementMethod::Fixed) => "fixed",
    }
}

/// One row per requesting user per slot.
pub fn slots_csv(logs: &[SlotLog]) -> String {
    let mut out = String::from(SLOTS_HEADER);
    out.push('\n');
    for l in logs {
        for r in &l.reports {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.slot,
                l.period,
                r.user,
                r.content,
                r.link.map_or("", |k| k.as_str()),
                opt(r.server),
                fmt9(r.delay_s),
                fmt9(r.delay_score),
                r.device_score_sum,
                r.intervals,
                fmt9(r.qoe),
                r.label.as_str(),
                u8::from(r.satisfied),
                fmt9(r.power_spent_w),
                u8::from(r.power_clamped),
            );
        }
    }
    out
}

/// One row per UAV per slot.
pub fn uavs_csv(logs: &[SlotLog]) -> String {
    let mut out = String::from(UAVS_HEADER);
    out.push('\n');
    for l in logs {
        for u in &l.uavs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                l.slot,
                u.uav,
                fmt9(u.position.x),
                fmt9(u.position.y),
                fmt9(u.position.h),
                u.users,
                u.requests,
                u.cache_hits,
                fmt9(u.power_w),
                method_str(u.method),
                fmt9(u.planned_objective_w),
            );
        }
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let s = &r.summary;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.param.as_str(),
            r.value,
            fmt9(s.mean_uav_power_w),
            fmt9(s.total_uav_power_w),
            fmt9(s.satisfied_fraction),
            fmt9(s.cache_hit_rate),
            fmt9(s.mean_altitude_m),
            s.requests,
            s.failures,
            s.infeasible_user_slots,
        );
    }
    out
}

pub fn train_csv(rows: &[TrainRow]) -> String {
    let mut out = String::from(TRAIN_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.user,
            r.model,
            r.pattern,
            r.label,
            r.steps,
            fmt9(r.nrmse),
            fmt9(r.quota_used),
            fmt9(r.quota_after)
        );
    }
    out
}

/// Rounds every float in a JSON tree to 9 significant digits; non-finite
/// values become null.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            fmt9(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with rounded floats and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let v = round_json(serde_json::to_value(value).expect("serializable"));
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

/// Every artifact of a run, as (file name, contents).
pub fn run_artifacts(out: &RunOutput) -> Vec<(&'static str, String)> {
    vec![
        ("slots.csv", slots_csv(&out.logs)),
        ("uavs.csv", uavs_csv(&out.logs)),
        ("plans.json", to_json(&out.plans)),
        ("summary.json", to_json(&out.summary)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt9(0.0), "0");
        assert_eq!(fmt9(1.0), "1");
        assert_eq!(fmt9(-2.5), "-2.5");
        assert_eq!(fmt9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt9(123456789.0), "123456789");
        assert_eq!(fmt9(1234567891.0), "1.23456789e+09");
        assert_eq!(fmt9(1.5e-7), "1.5e-07");
        assert_eq!(fmt9(0.0001), "0.0001");
        assert_eq!(fmt9(f64::INFINITY), "inf");
        assert_eq!(fmt9(f64::NAN), "nan");
        assert_eq!(fmt9(99999999.95), "100000000");
    }

    #[test]
    fn round_trip_keeps_nine_digits() {
        for x in [std::f64::consts::PI, 6.02214076e23, -1.0e-12, 0.1 + 0.2] {
            let y: f64 = fmt9(x).parse().unwrap();
            assert!((x - y).abs() <= 5e-9 * x.abs());
        }
    }

    #[test]
    fn json_floats_are_rounded() {
        let v = round_json(serde_json::json!({"a": 0.1 + 0.2, "b": [1.0 / 3.0], "n": 3}));
        assert_eq!(v.to_string(), r#"{"a":0.3,"b":[0.333333333],"n":3}"#);
    }
}
