use crate::scalarosc::{Condition, CriterionVerdict, VerdictStatus};
use crate::{Error, Result};

/// Combine interval verdicts on `[a_1, b_1], [a_2, b_2], …` into a
/// half-line verdict.
///
/// The half-line conclusion needs `a_m → ∞`; a finite family only supports
/// it up to its last endpoint, which is recorded as the horizon. Intervals
/// must be disjoint and sorted.
pub fn remark21_aggregate(verdicts: &[CriterionVerdict]) -> Result<CriterionVerdict> {
    const METHOD: &str = "union of interval verdicts with increasing left endpoints";
    if verdicts.is_empty() {
        return Ok(CriterionVerdict::from_conditions(
            VerdictStatus::Oscillatory,
            None,
            METHOD,
            vec![Condition::failed("at least one interval", "no intervals supplied")],
        ));
    }
    let mut intervals: Vec<[f64; 2]> = Vec::with_capacity(verdicts.len());
    for (k, v) in verdicts.iter().enumerate() {
        let iv = v
            .interval
            .ok_or_else(|| Error::InvalidArgument(format!("verdict {k} carries no interval")))?;
        if let Some(&[pa, pb]) = intervals.last() {
            if !(iv[0] > pa && iv[0] >= pb) {
                return Err(Error::InvalidArgument(format!(
                    "interval [{}, {}] overlaps or precedes [{pa}, {pb}]",
                    iv[0], iv[1]
                )));
            }
        }
        intervals.push(iv);
    }
    if verdicts.len() == 1 {
        return Ok(verdicts[0].clone());
    }
    let conditions = verdicts
        .iter()
        .zip(&intervals)
        .map(|(v, iv)| {
            Condition::new(
                format!("oscillatory on [{}, {}]", iv[0], iv[1]),
                v.status == VerdictStatus::OscillatoryOnInterval,
                None,
                None,
            )
            .with_detail(v.method.clone())
        })
        .collect();
    let horizon = intervals.last().map(|iv| iv[1]).expect("non-empty");
    Ok(CriterionVerdict::from_conditions(VerdictStatus::Oscillatory, None, METHOD, conditions)
        .with_horizon(horizon)
        .with_data("intervals", &intervals)
        .with_note(format!(
            "the half-line conclusion needs infinitely many intervals with a_m -> inf; verified for {} intervals up to t = {horizon}",
            intervals.len()
        ))
        .with_note("B(t) >= 0 is only required on the union of the intervals"))
}
