//! Per-type content quality: a stochastic evaluator simulator used during
//! training, plus the prompt protocol and rating parser shared with the
//! external evaluator client.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::contract::TypeGrid;
use crate::error::{Error, Result};

/// Parameters of the noisy monotone quality ramp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulatorConfig {
    /// Expected score of the lowest type.
    pub q_min: f64,
    /// Expected score at `phi_max`; also the upper clamp.
    pub q_max: f64,
    /// Standard deviation of the additive Gaussian noise.
    pub sigma: f64,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        Self { q_min: 0.0, q_max: 10.0, sigma: 0.5 }
    }
}

impl SimulatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_min <= self.q_max) || !(self.sigma >= 0.0) || !self.q_max.is_finite() {
            return Err(Error::InvalidConfig(alloc::format!(
                "simulator requires q_min <= q_max and sigma >= 0 (got {self:?})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualitySource {
    Simulator,
    External,
}

/// Quality scores `Q(φ_k)` for every type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub scores: Vec<f64>,
    pub source: QualitySource,
    pub raw_responses: Option<Vec<String>>,
}

/// Draws `Q_k = q_min + (q_max − q_min)·u_k + ε_k`, clamped to `[I, q_max]`,
/// where `u_k` is the type's normalized reputation.
pub fn simulate_quality<R: Rng + ?Sized>(
    grid: &TypeGrid,
    threshold: f64,
    config: &SimulatorConfig,
    rng: &mut R,
) -> QualityReport {
    let noise = Normal::new(0.0, config.sigma).ok();
    let upper = config.q_max.max(threshold);
    let scores = grid
        .phi()
        .iter()
        .map(|&phi| {
            let ramp = config.q_min + (config.q_max - config.q_min) * grid.normalized(phi);
            let eps = match noise {
                Some(n) if config.sigma > 0.0 => n.sample(rng),
                _ => 0.0,
            };
            (ramp + eps).clamp(threshold, upper)
        })
        .collect();
    QualityReport {
        scores,
        source: QualitySource::Simulator,
        raw_responses: None,
    }
}

/// A worked example shown to the evaluator before the real request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub content: String,
    pub rating: f64,
}

/// Evaluation prompt: role setup, few-shot examples, a step-by-step
/// reasoning instruction and a suffix asking for the bare rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PromptTemplate {
    pub system_preamble: String,
    pub few_shot_examples: Vec<FewShotExample>,
    pub cot_instruction: String,
    pub direct_output_suffix: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            system_preamble: "You are an expert reviewer of user-generated images. \
                Rate each image on a scale from 0 to 10, judging two factors: \
                clarity and aesthetics."
                .to_string(),
            few_shot_examples: Vec::new(),
            cot_instruction: "Think step by step: first assess clarity, then aesthetics, \
                then combine both into a single quality rating."
                .to_string(),
            direct_output_suffix: "Please directly output the quality rating.".to_string(),
        }
    }
}

impl PromptTemplate {
    pub fn validate(&self) -> Result<()> {
        if self.direct_output_suffix.trim().is_empty() {
            return Err(Error::InvalidConfig(
                "prompt template requires a non-empty direct_output_suffix".to_string(),
            ));
        }
        Ok(())
    }
}

/// Assembles the prompt in a fixed order: preamble, examples, reasoning
/// instruction, content, suffix. Empty sections are skipped.
pub fn build_prompt(content_descriptor: &str, template: &PromptTemplate) -> Result<String> {
    if content_descriptor.trim().is_empty() {
        return Err(Error::EmptyDescriptor);
    }
    let mut sections: Vec<String> = Vec::new();
    if !template.system_preamble.is_empty() {
        sections.push(template.system_preamble.clone());
    }
    for (i, ex) in template.few_shot_examples.iter().enumerate() {
        let mut s = String::new();
        let _ = write!(s, "Example {}:\nContent: {}\nRating: {}", i + 1, ex.content, ex.rating);
        sections.push(s);
    }
    if !template.cot_instruction.is_empty() {
        sections.push(template.cot_instruction.clone());
    }
    let mut content = String::from("Content to evaluate: ");
    content.push_str(content_descriptor);
    sections.push(content);
    sections.push(template.direct_output_suffix.clone());
    Ok(sections.join("\n\n"))
}

/// Extracts the last numeric token of an evaluator response and checks it
/// against the rating scale.
pub fn parse_rating(response: &str, scale: (f64, f64)) -> Result<f64> {
    let value = last_number(response)
        .ok_or_else(|| Error::UnparseableResponse(response.to_string()))?;
    let (min, max) = scale;
    if !(value >= min && value <= max) {
        return Err(Error::OutOfScale { value, min, max });
    }
    Ok(value)
}

fn last_number(text: &str) -> Option<f64> {
    let bytes = text.as_bytes();
    let mut found = None;
    let mut i = 0;
    while i < bytes.len() {
        if !bytes[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let mut start = i;
        // A minus sign counts only when it does not continue a word ("a-7").
        if start > 0 && bytes[start - 1] == b'-' && (start < 2 || !bytes[start - 2].is_ascii_alphanumeric()) {
            start -= 1;
        }
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
        found = text[start..i].parse::<f64>().ok().or(found);
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::quantize_types;
    use alloc::format;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noise_free_ramp() {
        let grid = quantize_types(5.0, 15.0, 4).unwrap();
        let cfg = SimulatorConfig { q_min: 0.0, q_max: 10.0, sigma: 0.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = simulate_quality(&grid, 0.0, &cfg, &mut rng);
        assert_eq!(r.scores[0], 0.0);
        assert!(r.scores.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(r.scores, vec![0.0, 2.5, 5.0, 7.5]);
    }

    #[test]
    fn noisy_mean_matches_ramp() {
        let grid = quantize_types(5.0, 15.0, 2).unwrap();
        let cfg = SimulatorConfig { q_min: 0.0, q_max: 10.0, sigma: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let r = simulate_quality(&grid, 0.0, &cfg, &mut rng);
            assert!(r.scores.iter().all(|&q| (0.0..=10.0).contains(&q)));
            sum += r.scores[1];
        }
        // Ramp value 5 sits far from both clamps, so the mean is unbiased.
        let mean = sum / n as f64;
        let se = 1.0 / libm::sqrt(n as f64);
        assert!((mean - 5.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn zero_shot_prompt_structure() {
        let t = PromptTemplate::default();
        let p = build_prompt("a sunset over the harbour", &t).unwrap();
        let expected = format!(
            "{}\n\n{}\n\nContent to evaluate: a sunset over the harbour\n\n{}",
            t.system_preamble, t.cot_instruction, t.direct_output_suffix
        );
        assert_eq!(p, expected);
        assert!(!p.contains("Example"));
    }

    #[test]
    fn few_shot_examples_precede_descriptor() {
        let mut t = PromptTemplate::default();
        t.few_shot_examples = vec![
            FewShotExample { content: "blurry photo of a cat".into(), rating: 3.0 },
            FewShotExample { content: "crisp mountain landscape".into(), rating: 8.5 },
        ];
        let p = build_prompt("portrait at dusk", &t).unwrap();
        let a = p.find("Content: blurry photo of a cat\nRating: 3").unwrap();
        let b = p.find("Content: crisp mountain landscape\nRating: 8.5").unwrap();
        let d = p.find("portrait at dusk").unwrap();
        assert!(a < b && b < d);
        assert!(p.ends_with(&t.direct_output_suffix));
        assert_eq!(p, build_prompt("portrait at dusk", &t).unwrap());
    }

    #[test]
    fn empty_descriptor_rejected() {
        assert_eq!(build_prompt("  ", &PromptTemplate::default()), Err(Error::EmptyDescriptor));
    }

    #[test]
    fn rating_extraction() {
        assert_eq!(parse_rating("Quality rating: 8.5", (0.0, 10.0)).unwrap(), 8.5);
        assert_eq!(
            parse_rating("The clarity is high and 2 factors agree... rating 7", (0.0, 10.0)).unwrap(),
            7.0
        );
        assert_eq!(parse_rating("rating 7.", (0.0, 10.0)).unwrap(), 7.0);
        assert!(matches!(
            parse_rating("excellent image", (0.0, 10.0)),
            Err(Error::UnparseableResponse(_))
        ));
        assert!(matches!(parse_rating("15", (0.0, 10.0)), Err(Error::OutOfScale { .. })));
        assert!(matches!(parse_rating("score -2", (0.0, 10.0)), Err(Error::OutOfScale { .. })));
        assert_eq!(parse_rating("gpt-4 says 6", (0.0, 10.0)).unwrap(), 6.0);
    }

    proptest::proptest! {
        #[test]
        fn rendered_rating_round_trips(r in 0.0f64..10.0, prefix in "[a-zA-Z ,:]{0,30}") {
            let text = format!("{prefix} {r}");
            proptest::prop_assert_eq!(parse_rating(&text, (0.0, 10.0)).unwrap(), r);
        }
    }
}
