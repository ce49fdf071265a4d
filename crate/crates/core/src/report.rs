//! Line-oriented and JSON reports.

use std::fmt::Write as _;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Warn,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Warn => "WARN",
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Finding {
    pub check: String,
    pub subject: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub warn: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportDocument {
    pub command: String,
    pub findings: Vec<Finding>,
}

impl ReportDocument {
    pub fn new(command: &str) -> Self {
        ReportDocument { command: command.to_string(), findings: Vec::new() }
    }

    pub fn push(&mut self, check: &str, subject: &str, status: Status, detail: impl Into<String>) {
        self.findings.push(Finding { check: check.into(), subject: subject.into(), status, detail: detail.into() });
    }

    pub fn summary(&self) -> Summary {
        let mut s = Summary::default();
        for f in &self.findings {
            match f.status {
                Status::Pass => s.pass += 1,
                Status::Fail => s.fail += 1,
                Status::Warn => s.warn += 1,
            }
        }
        s
    }

    pub fn status(&self) -> Status {
        if self.findings.iter().any(|f| f.status == Status::Fail) {
            Status::Fail
        } else {
            Status::Pass
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.status() {
            Status::Fail => 1,
            _ => 0,
        }
    }

    /// `CHECK <check>:<subject> <STATUS> <detail>` per finding, then a
    /// summary line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in &self.findings {
            let _ = writeln!(out, "CHECK {}:{} {} {}", f.check, f.subject, f.status.as_str(), f.detail);
        }
        let s = self.summary();
        let _ = writeln!(
            out,
            "SUMMARY {} pass={} fail={} warn={} status={}",
            self.command,
            s.pass,
            s.fail,
            s.warn,
            self.status().as_str()
        );
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            command: &'a str,
            findings: &'a [Finding],
            summary: Summary,
            status: Status,
        }
        let doc =
            Doc { command: &self.command, findings: &self.findings, summary: self.summary(), status: self.status() };
        let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
        text.push('\n');
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_and_rendering() {
        let mut r = ReportDocument::new("check-sheaf");
        r.push("lattice", "opens", Status::Warn, "empty lattice");
        assert_eq!(r.exit_code(), 0);
        r.push("composition", "U", Status::Fail, "U>V>W");
        assert_eq!(r.exit_code(), 1);
        let text = r.to_text();
        assert!(text.contains("CHECK composition:U FAIL U>V>W\n"));
        assert!(text.ends_with("SUMMARY check-sheaf pass=0 fail=1 warn=1 status=FAIL\n"));
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["status"], "FAIL");
        assert_eq!(json["findings"][0]["status"], "WARN");
    }
}
