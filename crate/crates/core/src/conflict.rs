//! Before-model conflict detection between instance-set objectives.
//!
//! Two objectives conflict when their kinds and labels make contradictory
//! claims about the same rows and their id sets intersect. Every pair is
//! checked; the result is keyed by objective pair and ranked by severity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::data::RowId;
use crate::objective::{ObjectiveFunction, ObjectiveKind, ObjectiveSpec};

#[derive(Debug, Error)]
pub enum ConflictError {
    #[error("conflict on objectives ({left}, {right}) no longer matches the function")]
    StaleConflict { left: usize, right: usize },
    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ConflictError {
    pub fn code(&self) -> &'static str {
        match self {
            ConflictError::StaleConflict { .. } => "StaleConflict",
            ConflictError::Io { .. } => "IoError",
        }
    }
}

/// Whether two objectives are able to contradict each other on shared rows.
///
/// Symmetric in its two arguments. Metric kinds never conflict.
pub fn conflict_eligible(
    kind_a: ObjectiveKind,
    label_a: Option<&str>,
    kind_b: ObjectiveKind,
    label_b: Option<&str>,
) -> bool {
    use ObjectiveKind::*;
    let differ = |a: Option<&str>, b: Option<&str>| matches!((a, b), (Some(x), Some(y)) if x != y);
    match (kind_a, kind_b) {
        (Candidate, Candidate) | (Similarity, Similarity) => differ(label_a, label_b),
        (Candidate, Similarity) | (Similarity, Candidate) => differ(label_a, label_b),
        (Ignore, Candidate | Similarity | Critical) | (Candidate | Similarity | Critical, Ignore) => {
            true
        }
        _ => false,
    }
}

pub fn specs_eligible(a: &ObjectiveSpec, b: &ObjectiveSpec) -> bool {
    conflict_eligible(a.kind, a.label.as_deref(), b.kind, b.label.as_deref())
}

/// Contradictory claims by objectives `left < right` about `conflicted_ids`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub left: usize,
    pub right: usize,
    pub conflicted_ids: BTreeSet<RowId>,
    pub severity: usize,
}

impl Conflict {
    /// Content hash of the objective pair and conflicted ids.
    ///
    /// Any edit that changes the pair's identity or the intersection changes
    /// the hash, which is how stale resolution requests are detected.
    pub fn hash(&self, of: &ObjectiveFunction) -> String {
        let mut h = Sha256::new();
        for idx in [self.left, self.right] {
            let key = of
                .objectives
                .get(idx)
                .map(|o| o.key().to_string())
                .unwrap_or_default();
            h.update(format!("{idx}:{key}\n"));
        }
        for id in &self.conflicted_ids {
            h.update(id.as_bytes());
            h.update(b"\n");
        }
        let digest = h.finalize();
        digest[..8].iter().fold(String::with_capacity(16), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// All conflicts of one function, ranked, plus the pair-keyed index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConflictReport {
    pub function_id: String,
    pub conflicts: Vec<Conflict>,
    #[serde(skip)]
    pair_index: BTreeMap<(usize, usize), usize>,
}

impl ConflictReport {
    fn new(function_id: String, mut conflicts: Vec<Conflict>) -> Self {
        sort_by_severity(&mut conflicts);
        let pair_index = conflicts
            .iter()
            .enumerate()
            .map(|(i, c)| ((c.left, c.right), i))
            .collect();
        Self {
            function_id,
            conflicts,
            pair_index,
        }
    }

    /// Looks a conflict up by objective pair, in either order.
    pub fn get(&self, a: usize, b: usize) -> Option<&Conflict> {
        let key = (a.min(b), a.max(b));
        self.pair_index.get(&key).map(|&i| &self.conflicts[i])
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pair_index.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.conflicts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conflicts.is_empty()
    }

    pub fn find_by_hash(&self, of: &ObjectiveFunction, hash: &str) -> Option<&Conflict> {
        self.conflicts.iter().find(|c| c.hash(of) == hash)
    }
}

fn sort_by_severity(conflicts: &mut [Conflict]) {
    conflicts.sort_by(|a, b| {
        b.severity
            .cmp(&a.severity)
            .then(a.left.cmp(&b.left))
            .then(a.right.cmp(&b.right))
    });
}

fn pair_conflict(of: &ObjectiveFunction, left: usize, right: usize) -> Option<Conflict> {
    let (a, b) = (&of.objectives[left], &of.objectives[right]);
    if !specs_eligible(a, b) {
        return None;
    }
    let (small, large) = if a.ids.len() <= b.ids.len() {
        (&a.ids, &b.ids)
    } else {
        (&b.ids, &a.ids)
    };
    let conflicted_ids: BTreeSet<RowId> = small
        .iter()
        .filter(|id| large.contains(*id))
        .cloned()
        .collect();
    (!conflicted_ids.is_empty()).then(|| Conflict {
        left,
        right,
        severity: conflicted_ids.len(),
        conflicted_ids,
    })
}

/// Checks every objective pair for overlapping ids under contradictory claims.
pub fn detect_conflicts(of: &ObjectiveFunction) -> ConflictReport {
    let n = of.objectives.len();
    let conflicts = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter_map(|(i, j)| pair_conflict(of, i, j))
        .collect();
    ConflictReport::new(of.id.clone(), conflicts)
}

/// Conflicts in descending severity, ties by `(left, right)`.
pub fn rank_conflicts(report: &ConflictReport) -> Vec<Conflict> {
    let mut out = report.conflicts.clone();
    sort_by_severity(&mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "action", content = "destination")]
pub enum Resolution {
    /// Conflicted rows stay with the left objective only.
    MoveToLeft,
    /// Conflicted rows stay with the right objective only.
    MoveToRight,
    RemoveFromBoth,
    Export(PathBuf),
}

/// Header line plus sorted ids, one per line.
pub fn export_conflict(of: &ObjectiveFunction, conflict: &Conflict) -> String {
    let describe = |i: usize| {
        of.objectives
            .get(i)
            .map(|o| o.key().to_string())
            .unwrap_or_else(|| format!("#{i}"))
    };
    let mut out = format!(
        "# conflict {} x {}\n",
        describe(conflict.left),
        describe(conflict.right)
    );
    for id in &conflict.conflicted_ids {
        out.push_str(id);
        out.push('\n');
    }
    out
}

/// Fails with `StaleConflict` unless `conflict` is exactly what detection
/// would report for its pair today.
pub fn ensure_current(of: &ObjectiveFunction, conflict: &Conflict) -> Result<(), ConflictError> {
    let stale = ConflictError::StaleConflict {
        left: conflict.left,
        right: conflict.right,
    };
    if conflict.left >= conflict.right || conflict.right >= of.objectives.len() {
        return Err(stale);
    }
    match pair_conflict(of, conflict.left, conflict.right) {
        Some(current) if &current == conflict => Ok(()),
        _ => Err(stale),
    }
}

/// Applies a resolution and returns the new function version.
///
/// Instance-set objectives left without ids are dropped. `Export` writes the
/// ids file and returns the function unchanged.
pub fn resolve_conflict(
    of: &ObjectiveFunction,
    conflict: &Conflict,
    action: &Resolution,
) -> Result<ObjectiveFunction, ConflictError> {
    ensure_current(of, conflict)?;
    let strip_from: &[usize] = match action {
        Resolution::MoveToLeft => &[conflict.right],
        Resolution::MoveToRight => &[conflict.left],
        Resolution::RemoveFromBoth => &[conflict.left, conflict.right],
        Resolution::Export(path) => {
            write_export(path, &export_conflict(of, conflict))?;
            return Ok(of.clone());
        }
    };
    let mut next = of.clone();
    for &i in strip_from {
        next.objectives[i]
            .ids
            .retain(|id| !conflict.conflicted_ids.contains(id));
    }
    next.objectives
        .retain(|o| !(o.kind.is_instance_set() && o.ids.is_empty()));
    Ok(next)
}

fn write_export(path: &Path, body: &str) -> Result<(), ConflictError> {
    std::fs::write(path, body).map_err(|source| ConflictError::Io {
        path: path.to_path_buf(),
        source,
    })
}
