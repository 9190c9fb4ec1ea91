//! Stage contracts of pseudo-label calibration, checked on random label sets.

mod support;

use proptest::prelude::*;
use support::cgpc::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn filter_is_monotone_in_threshold(c in filter_case()) {
        check_filter_monotone(c)?;
    }

    #[test]
    fn context_unifies_food_and_is_idempotent(labels in image_labels()) {
        check_context(labels)?;
    }

    #[test]
    fn dedup_postcondition_and_idempotence(c in dedup_case()) {
        check_dedup(c)?;
    }

    #[test]
    fn visual_votes_only_among_peers(c in visual_case()) {
        check_visual(c)?;
    }

    #[test]
    fn pipeline_is_order_free(c in pipeline_case()) {
        check_pipeline(c)?;
    }
}
