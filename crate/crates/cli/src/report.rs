//! Per-item reports, their JSON form and the proof log.

use serde_json::{json, Map, Value};

use conservkit::expr::{equals, Verdict};
use conservkit::{Context, Expr};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok,
    Failed,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Failed => "failed",
            Status::Error => "error",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Failed => 1,
            Status::Error => 2,
        }
    }
}

/// One symbolic identity that was checked.
#[derive(Clone, Debug)]
pub struct ProofEntry {
    pub item: String,
    pub claim: String,
    pub method: String,
    /// Canonical form of `lhs - rhs`.
    pub witness: String,
    pub holds: bool,
}

impl ProofEntry {
    fn to_json(&self) -> Value {
        json!({
            "item": self.item,
            "claim": self.claim,
            "method": self.method,
            "witness": self.witness,
            "holds": self.holds,
        })
    }

    fn to_text(&self) -> String {
        format!(
            "[{}] {}\n    {} ({}), normalized difference: {}",
            self.item,
            self.claim,
            if self.holds { "holds" } else { "FAILS" },
            self.method,
            self.witness
        )
    }
}

#[derive(Clone, Debug)]
pub struct ItemReport {
    pub name: String,
    pub kind: String,
    pub status: Status,
    pub text: Vec<String>,
    pub data: Map<String, Value>,
    pub proof: Vec<ProofEntry>,
}

impl ItemReport {
    pub fn new(name: &str, kind: &str) -> ItemReport {
        ItemReport {
            name: name.to_string(),
            kind: kind.to_string(),
            status: Status::Ok,
            text: Vec::new(),
            data: Map::new(),
            proof: Vec::new(),
        }
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.text.push(s.into());
    }

    pub fn set(&mut self, key: &str, v: impl Into<Value>) {
        self.data.insert(key.to_string(), v.into());
    }

    pub fn fail(&mut self) {
        self.status = self.status.max(Status::Failed);
    }

    pub fn error(&mut self, e: impl std::fmt::Display) {
        self.status = Status::Error;
        self.line(format!("error: {e}"));
        self.set("error", e.to_string());
    }

    /// Records a verdict; a false verdict fails the item.
    pub fn record(&mut self, claim: impl Into<String>, v: &Verdict) -> bool {
        self.proof.push(ProofEntry {
            item: self.name.clone(),
            claim: claim.into(),
            method: v.method.to_string(),
            witness: v.witness.clone(),
            holds: v.equal,
        });
        if let Some(d) = &v.diagnostic {
            self.line(format!("note: {d}"));
        }
        if !v.equal {
            self.fail();
        }
        v.equal
    }

    /// Checks `lhs = rhs` and records it.
    pub fn identity(&mut self, ctx: &Context, claim: &str, lhs: &Expr, rhs: &Expr) -> bool {
        let v = equals(ctx, lhs, rhs);
        self.record(format!("{claim}: {lhs} = {rhs}"), &v)
    }

    /// Records a structural fact decided by exact computation.
    pub fn fact(&mut self, claim: impl Into<String>, holds: bool, witness: impl Into<String>) -> bool {
        self.proof.push(ProofEntry {
            item: self.name.clone(),
            claim: claim.into(),
            method: "symbolic".into(),
            witness: witness.into(),
            holds,
        });
        if !holds {
            self.fail();
        }
        holds
    }

    fn to_json(&self) -> Value {
        let mut m = self.data.clone();
        m.insert("name".into(), self.name.clone().into());
        m.insert("kind".into(), self.kind.clone().into());
        m.insert("status".into(), self.status.as_str().into());
        Value::Object(m)
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub file: Option<String>,
    pub header: Vec<String>,
    pub items: Vec<ItemReport>,
}

impl Report {
    pub fn new(command: &str, file: Option<&str>) -> Report {
        Report {
            command: command.to_string(),
            file: file.map(str::to_string),
            header: Vec::new(),
            items: Vec::new(),
        }
    }

    pub fn status(&self) -> Status {
        self.items.iter().map(|i| i.status).max().unwrap_or(Status::Ok)
    }

    pub fn to_json(&self) -> Value {
        let proof: Vec<Value> = self
            .items
            .iter()
            .flat_map(|i| i.proof.iter().map(ProofEntry::to_json))
            .collect();
        json!({
            "schema": SCHEMA,
            "command": self.command,
            "file": self.file,
            "status": self.status().as_str(),
            "notes": self.header,
            "items": self.items.iter().map(ItemReport::to_json).collect::<Vec<_>>(),
            "proof": proof,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(f) = &self.file {
            out.push_str(&format!("== {} {}\n", self.command, f));
        }
        for h in &self.header {
            out.push_str(h);
            out.push('\n');
        }
        for item in &self.items {
            out.push_str(&format!(
                "{} {} [{}]\n",
                item.kind,
                item.name,
                item.status.as_str()
            ));
            for l in &item.text {
                out.push_str("  ");
                out.push_str(l);
                out.push('\n');
            }
        }
        out
    }

    pub fn proof_log(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            for p in &item.proof {
                out.push_str(&p.to_text());
                out.push('\n');
            }
        }
        out
    }
}
