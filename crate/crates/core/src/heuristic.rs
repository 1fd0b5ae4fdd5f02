//! Two-level threshold selector distilled from a depth-limited decision tree.
//!
//! Only `blocks_accessed` and `avg_row_lengthA_var` are consulted, and both are
//! expected on the min-max scaled range.

use crate::features::{Feature, FeatureVector};
use crate::DataflowLabel;

pub const BLOCKS_ACCESSED_SPLIT: f64 = 0.03894999995827675;
pub const ROW_VAR_SPLIT: f64 = 0.009800000116229057;
/// Second split on `blocks_accessed`; both of its sides predict the same class.
pub const BLOCKS_ACCESSED_INNER_SPLIT: f64 = 0.04165000095963478;

/// Maps the rule codes `'0'`, `'1'`, `'2'` to dataflows.
pub const CODE_TO_LABEL: [DataflowLabel; 3] = [DataflowLabel::Ip, DataflowLabel::Op, DataflowLabel::Rw];

fn code(c: usize) -> DataflowLabel {
    CODE_TO_LABEL[c]
}

// The inner split is kept even though both sides agree.
#[allow(clippy::if_same_then_else)]
pub fn heuristic_predict(scaled: &FeatureVector) -> DataflowLabel {
    let blocks = scaled.get(Feature::BlocksAccessed);
    let row_var = scaled.get(Feature::AvgRowLengthAVar);
    if blocks <= BLOCKS_ACCESSED_SPLIT {
        if row_var <= ROW_VAR_SPLIT {
            code(2)
        } else {
            code(1)
        }
    } else if blocks <= BLOCKS_ACCESSED_INNER_SPLIT {
        code(0)
    } else {
        code(0)
    }
}

/// The heuristic as rule text, in the same shape `cart` exports.
pub fn rules_text() -> String {
    format!(
        "def heuristic(input):
    if blocks_accessed <= {b}:
        if avg_row_lengthA_var <= {v}:
            predicted.append('2')
        elif avg_row_lengthA_var > {v}:
            predicted.append('1')
    elif blocks_accessed > {b}:
        if blocks_accessed <= {i}:
            predicted.append('0')
        elif blocks_accessed > {i}:
            predicted.append('0')
",
        b = BLOCKS_ACCESSED_SPLIT,
        v = ROW_VAR_SPLIT,
        i = BLOCKS_ACCESSED_INNER_SPLIT
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::NUM_FEATURES;

    fn fv(blocks: f64, var: f64) -> FeatureVector {
        let mut f = FeatureVector([0.5; NUM_FEATURES]);
        f.set(Feature::BlocksAccessed, blocks);
        f.set(Feature::AvgRowLengthAVar, var);
        f
    }

    #[test]
    fn regions() {
        assert_eq!(heuristic_predict(&fv(0.03, 0.005)), DataflowLabel::Rw);
        assert_eq!(heuristic_predict(&fv(0.03, 0.02)), DataflowLabel::Op);
        assert_eq!(heuristic_predict(&fv(0.05, 0.0)), DataflowLabel::Ip);
        assert_eq!(heuristic_predict(&fv(0.05, 0.9)), DataflowLabel::Ip);
        assert_eq!(heuristic_predict(&fv(0.040, 0.9)), DataflowLabel::Ip);
    }

    #[test]
    fn boundaries_go_left() {
        assert_eq!(
            heuristic_predict(&fv(BLOCKS_ACCESSED_SPLIT, ROW_VAR_SPLIT)),
            DataflowLabel::Rw
        );
        assert_eq!(
            heuristic_predict(&fv(BLOCKS_ACCESSED_SPLIT, f64::from_bits(ROW_VAR_SPLIT.to_bits() + 1))),
            DataflowLabel::Op
        );
        assert_eq!(
            heuristic_predict(&fv(f64::from_bits(BLOCKS_ACCESSED_SPLIT.to_bits() + 1), 0.0)),
            DataflowLabel::Ip
        );
    }

    #[test]
    fn constants_print_at_full_precision() {
        let t = rules_text();
        assert!(t.contains("if blocks_accessed <= 0.03894999995827675:"));
        assert!(t.contains("avg_row_lengthA_var <= 0.009800000116229057"));
        assert!(t.contains("blocks_accessed > 0.04165000095963478"));
        assert!(t.len() < 1024);
    }
}
