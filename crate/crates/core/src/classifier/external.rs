use std::sync::Arc;

use super::{ClassifierError, ClassifierOutput, SenseClassifier, SenseDistribution};
use crate::corpus::LabelSet;
use crate::sidecar::SidecarClient;

/// Sum tolerance for distributions coming over the wire. Remote models
/// typically compute softmax in single precision.
pub const WIRE_TOLERANCE: f64 = 1e-6;

/// Asks the sidecar classifier for `P(sense | connective, arg1, arg2)` and
/// validates the answer against `labels`.
pub fn external_predict(
    client: &SidecarClient,
    labels: &LabelSet,
    connective: &str,
    arg1: &str,
    arg2: &str,
) -> Result<SenseDistribution, ClassifierError> {
    let (id, probs) = client.classify(connective, arg1, arg2, labels.level().number())?;
    let probs: Vec<f64> = probs.into_iter().map(|p| p.unwrap_or(f64::NAN)).collect();
    SenseDistribution::new(probs, labels.len(), WIRE_TOLERANCE)
        .map_err(|e| ClassifierError::InvalidDistribution(format!("request {id}: {e}")))
}

/// Fine-tuned sentence-pair classifier served by the sidecar.
#[derive(Clone, Debug)]
pub struct SidecarClassifier {
    client: Arc<SidecarClient>,
    labels: LabelSet,
}

impl SidecarClassifier {
    pub fn new(client: Arc<SidecarClient>, labels: LabelSet) -> Self {
        SidecarClassifier { client, labels }
    }
}

impl SenseClassifier for SidecarClassifier {
    fn id(&self) -> String {
        format!("sidecar({})", self.client.endpoint())
    }

    fn labels(&self) -> &LabelSet {
        &self.labels
    }

    fn classify(&self, connective: &str, arg1: &str, arg2: &str) -> Result<ClassifierOutput, ClassifierError> {
        Ok(ClassifierOutput {
            distribution: external_predict(&self.client, &self.labels, connective, arg1, arg2)?,
            fallback: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn scripted(lines: &[&str]) -> SidecarClient {
        let mut script = lines.join("\n");
        script.push('\n');
        SidecarClient::from_streams("scripted", Cursor::new(script.into_bytes()), std::io::sink())
    }

    #[test]
    fn valid_distribution_passes_through() {
        let client = scripted(&[r#"{"id":1,"probs":[0.1,0.2,0.3,0.4]}"#]);
        let d = external_predict(&client, &LabelSet::level_one(), "but", "a", "b").unwrap();
        assert_eq!(d.probs(), &[0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn short_mass_rejected() {
        let client = scripted(&[r#"{"id":1,"probs":[0.1,0.2,0.3,0.2]}"#]);
        let err = external_predict(&client, &LabelSet::level_one(), "but", "a", "b").unwrap_err();
        assert!(matches!(err, ClassifierError::InvalidDistribution(_)));
    }

    #[test]
    fn wrong_length_rejected() {
        let client = scripted(&[r#"{"id":1,"probs":[0.5,0.5]}"#]);
        assert!(external_predict(&client, &LabelSet::level_one(), "but", "a", "b").is_err());
    }

    #[test]
    fn null_entries_rejected() {
        let client = scripted(&[r#"{"id":1,"probs":[1.0,null,0.0,0.0]}"#]);
        assert!(external_predict(&client, &LabelSet::level_one(), "but", "a", "b").is_err());
    }
}
