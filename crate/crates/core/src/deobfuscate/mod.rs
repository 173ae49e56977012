//! Transfer-sink discovery, static evaluation of sink destinations, probe
//! rewriting and backdoor classification.

mod classify;
mod eval;
mod imports;
mod probe;
mod sinks;

use std::fmt;

use serde::Serialize;

use crate::address::Address;

pub use classify::{classify_backdoor, BackdoorKind, BackdoorProfile};
pub use eval::{evaluate_address, LOOP_BOUND};
pub use imports::{ImportStore, ImportStoreError, INDEX_FILE};
pub use probe::{evaluate_probe, rewrite_with_probe, Probe, RewriteError, PROBE_FUNCTION};
pub use sinks::{find_transfer_sinks, harvest_sink_signatures, SignatureCatalog};

use crate::solidity::Expression;

/// Which nested statement list a locator step descends into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Then,
    Else,
    /// Body of a loop or a bare block.
    Body,
    /// The initializer of a `for` header.
    Init,
}

impl Branch {
    fn as_str(self) -> &'static str {
        match self {
            Branch::Then => "then",
            Branch::Else => "else",
            Branch::Body => "body",
            Branch::Init => "init",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SiteStep {
    pub stmt: usize,
    pub branch: Branch,
}

/// Position of a sink inside its function body: the chain of enclosing
/// statements, the index of the statement holding the call in the innermost
/// list, and which transfer call within that statement it is.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SiteLocator {
    pub steps: Vec<SiteStep>,
    pub stmt: usize,
    pub occurrence: usize,
}

impl fmt::Display for SiteLocator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for step in &self.steps {
            write!(f, "{}.{}.", step.stmt, step.branch.as_str())?;
        }
        write!(f, "{}#{}", self.stmt, self.occurrence)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SinkSite {
    pub contract: String,
    /// Enclosing function signature, e.g. `start()`.
    pub function: String,
    pub site: SiteLocator,
    pub dest_expr: Expression,
    pub amount_expr: Expression,
}

impl SinkSite {
    fn sort_key(&self) -> (&str, &str, &SiteLocator) {
        (&self.contract, &self.function, &self.site)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ResolutionStatus {
    Resolved,
    SkippedCallerRefund,
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum UnresolvedReason {
    MissingImport,
    NonConstantExpression,
    UnsupportedConstruct,
    ParseFailure,
}

impl fmt::Display for UnresolvedReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            UnresolvedReason::MissingImport => "MissingImport",
            UnresolvedReason::NonConstantExpression => "NonConstantExpression",
            UnresolvedReason::UnsupportedConstruct => "UnsupportedConstruct",
            UnresolvedReason::ParseFailure => "ParseFailure",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AddressResolution {
    pub status: ResolutionStatus,
    pub address: Option<Address>,
    /// Evaluation steps in order, e.g. `getMempoolSol() -> "x2c1"`.
    pub trace: Vec<String>,
    pub reason: Option<UnresolvedReason>,
    pub message: Option<String>,
}

impl AddressResolution {
    pub fn resolved(address: Address, trace: Vec<String>) -> Self {
        AddressResolution {
            status: ResolutionStatus::Resolved,
            address: Some(address),
            trace,
            reason: None,
            message: None,
        }
    }

    pub fn caller_refund(trace: Vec<String>, message: impl Into<String>) -> Self {
        AddressResolution {
            status: ResolutionStatus::SkippedCallerRefund,
            address: None,
            trace,
            reason: None,
            message: Some(message.into()),
        }
    }

    pub fn unresolved(reason: UnresolvedReason, message: impl Into<String>, trace: Vec<String>) -> Self {
        AddressResolution {
            status: ResolutionStatus::Unresolved,
            address: None,
            trace,
            reason: Some(reason),
            message: Some(message.into()),
        }
    }

    pub fn is_resolved(&self) -> bool {
        self.status == ResolutionStatus::Resolved
    }
}
