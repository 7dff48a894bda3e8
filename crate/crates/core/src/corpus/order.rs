use super::{Relation, RelationKind, RelationSpans, Span};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OrderFilter {
    pub kept: Vec<Relation>,
    /// Explicit relations dropped for not following arg1, connective, arg2 order.
    pub excluded: usize,
    /// Subset of `excluded` that lacked usable spans.
    pub missing_spans: usize,
}

impl OrderFilter {
    /// Share of explicit relations excluded, in percent.
    pub fn excluded_percent(&self) -> f64 {
        let explicit = self
            .kept
            .iter()
            .filter(|r| r.kind == RelationKind::Explicit)
            .count()
            + self.excluded;
        if explicit == 0 {
            0.0
        } else {
            100.0 * self.excluded as f64 / explicit as f64
        }
    }
}

/// Keeps explicit relations whose parts appear as arg1, connective, arg2
/// without interleaving; implicit relations pass through unchanged.
pub fn filter_canonical_order(relations: Vec<Relation>) -> OrderFilter {
    let mut out = OrderFilter::default();
    for rel in relations {
        if rel.kind == RelationKind::Implicit {
            out.kept.push(rel);
            continue;
        }
        match rel.spans.as_ref().map(canonical) {
            Some(Some(true)) => out.kept.push(rel),
            Some(Some(false)) => out.excluded += 1,
            Some(None) | None => {
                out.excluded += 1;
                out.missing_spans += 1;
            }
        }
    }
    out
}

/// `None` when a part has no span.
fn canonical(spans: &RelationSpans) -> Option<bool> {
    let arg1 = Span::hull(&spans.arg1)?;
    let conn = Span::hull(&spans.connective)?;
    let arg2 = Span::hull(&spans.arg2)?;
    Some(arg1.end <= conn.start && conn.end <= arg2.start)
}
