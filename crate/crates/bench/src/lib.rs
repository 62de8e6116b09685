//! Shared setup for the criterion benchmarks.

use paysec_core::energy::{tables, AttributeKind, AttributeRunner, AttributeSpec};

/// One prepared runner per reference attribute and benchmarked size.
pub fn reference_runners() -> Vec<(AttributeSpec, AttributeRunner)> {
    tables::SIZES
        .iter()
        .flat_map(|&size| {
            AttributeKind::reference_set().into_iter().map(move |k| AttributeSpec {
                kind: k,
                input_size: size,
            })
        })
        .map(|spec| (spec, AttributeRunner::new(spec).expect("reference specs are valid")))
        .collect()
}
