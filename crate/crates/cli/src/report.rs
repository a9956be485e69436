//! The run report every subcommand produces, and its two renderings.

use serde::Serialize;
use serde_json::Value;

/// One quantity compared against its declared tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

/// Outcome of one subcommand.
///
/// The JSON rendering depends only on the arguments and the seed. Wall time
/// appears in the human-readable rendering only.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub seed: u64,
    pub inputs: Value,
    pub outputs: Value,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl RunReport {
    pub fn new(command: Vec<String>, seed: u64, inputs: Value, outputs: Value, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self {
            command,
            seed,
            inputs,
            outputs,
            checks,
            pass,
        }
    }

    /// Pretty-printed JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text rendering with the wall time in seconds.
    pub fn to_text(&self, seconds: f64) -> String {
        let mut out = format!("$ {}\n", self.command.join(" "));
        out.push_str(&format!("seed: {}\n", self.seed));
        if let Value::Object(map) = &self.outputs {
            for (k, v) in map {
                out.push_str(&format!("{k}: {}\n", compact(v)));
            }
        } else {
            out.push_str(&format!("outputs: {}\n", compact(&self.outputs)));
        }
        for c in &self.checks {
            out.push_str(&format!(
                "{} {}: {:e} (tolerance {:e})\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.tolerance
            ));
        }
        out.push_str(&format!("result: {}\n", if self.pass { "pass" } else { "fail" }));
        out.push_str(&format!("wall time: {seconds:.3} s\n"));
        out
    }
}

/// Longest non-string output value printed in full by the text rendering.
const TEXT_LIMIT: usize = 400;

fn compact(v: &Value) -> String {
    if let Value::String(s) = v {
        return s.clone();
    }
    let s = serde_json::to_string(v).expect("value serializes");
    if s.len() > TEXT_LIMIT {
        format!("<{} characters, shown in full with --json>", s.len())
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn pass_is_the_conjunction_of_checks() {
        let r = RunReport::new(
            vec!["phia".into()],
            0,
            json!({}),
            json!({}),
            vec![Check::at_most("a", 1.0, 2.0), Check::at_most("b", 3.0, 2.0)],
        );
        assert!(!r.pass);
        let r = RunReport::new(vec![], 0, json!({}), json!({}), vec![Check::at_most("c", 0.5, 1.0)]);
        assert!(r.pass);
    }

    #[test]
    fn json_has_no_wall_time() {
        let r = RunReport::new(vec!["phia".into()], 3, json!({"x": 1}), json!({"y": 2}), vec![]);
        let s = r.to_json();
        assert!(!s.contains("wall"));
        assert!(r.to_text(0.5).contains("wall time"));
    }
}
