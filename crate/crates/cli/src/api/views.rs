//! Response shapes that combine several engine results.

use cactus_core::stats::{
    conflict_box_attributes, distribution_summary, variance_bars, FiveNumberSummary, Histogram, StandardizedView,
    VarianceBars, CONFLICT_BOX_ATTRIBUTES, DEFAULT_BINS,
};
use cactus_core::{Conflict, Dataset, ObjectiveFunction};
use serde::Serialize;

use crate::workflow::ConflictSummary;
use crate::ApiError;

/// Whiskers of the left, right and conflicted id sets on one attribute,
/// against the train-split violin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxView {
    pub attribute: String,
    pub violin: Histogram,
    pub left: FiveNumberSummary,
    pub right: FiveNumberSummary,
    pub conflicted: FiveNumberSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConflictView {
    #[serde(flatten)]
    pub summary: ConflictSummary,
    pub variance_bars: VarianceBars,
    pub boxes: Vec<BoxView>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConflictsView {
    pub function_id: String,
    pub conflicts: Vec<ConflictView>,
}

pub fn conflict_view(
    view: &StandardizedView,
    ds: &Dataset,
    of: &ObjectiveFunction,
    c: &Conflict,
) -> Result<ConflictView, ApiError> {
    let left = &of.objectives[c.left].ids;
    let right = &of.objectives[c.right].ids;
    let k = CONFLICT_BOX_ATTRIBUTES.min(ds.n_features());
    let boxes = conflict_box_attributes(view, of, c, k)?
        .entries
        .into_iter()
        .map(|a| {
            let l = distribution_summary(view, left, &a.attribute, DEFAULT_BINS)?;
            let r = distribution_summary(view, right, &a.attribute, DEFAULT_BINS)?;
            let x = distribution_summary(view, &c.conflicted_ids, &a.attribute, DEFAULT_BINS)?;
            Ok(BoxView {
                attribute: a.attribute,
                violin: l.violin,
                left: l.whisker,
                right: r.whisker,
                conflicted: x.whisker,
            })
        })
        .collect::<Result<Vec<_>, ApiError>>()?;
    Ok(ConflictView {
        summary: ConflictSummary::new(of, c),
        variance_bars: variance_bars(view, of, c)?,
        boxes,
    })
}
