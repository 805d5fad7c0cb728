//! First-token distribution handling: response parsing and yes-mass extraction.

use serde_json::Value;

use super::YesProbability;

/// True when `token` reads as "yes" once case, surrounding whitespace
/// (including tokenizer space markers) and punctuation are ignored.
pub fn is_yes_token(token: &str) -> bool {
    let strip = |c: char| c.is_whitespace() || c.is_ascii_punctuation() || c == '\u{2581}' || c == '\u{120}';
    token.trim_start_matches(strip).trim_end_matches(strip).to_lowercase() == "yes"
}

/// Renormalizes the returned top-k candidates and sums the mass of the yes
/// tokens. `candidates` holds `(token, logprob)` pairs.
pub fn yes_probability(model_id: &str, candidates: &[(String, f64)]) -> Option<YesProbability> {
    let finite: Vec<&(String, f64)> = candidates.iter().filter(|(_, lp)| lp.is_finite()).collect();
    let max = finite.iter().map(|(_, lp)| *lp).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let total: f64 = finite.iter().map(|(_, lp)| (lp - max).exp()).sum();
    let token_evidence: Vec<(String, f64)> =
        finite.iter().filter(|(t, _)| is_yes_token(t)).map(|(t, lp)| (t.clone(), (lp - max).exp() / total)).collect();
    let value = token_evidence.iter().map(|(_, p)| p).sum::<f64>().clamp(0.0, 1.0);
    Some(YesProbability { value, model_id: model_id.to_string(), token_evidence })
}

/// Pulls the first position's top-k `(token, logprob)` list out of a
/// completion response. Accepts the legacy completions shape
/// (`choices[0].logprobs.top_logprobs[0]` as a token→logprob map) and the
/// chat shape (`choices[0].logprobs.content[0].top_logprobs` as a list).
pub fn first_position_candidates(body: &Value) -> Result<Vec<(String, f64)>, String> {
    let logprobs =
        body.pointer("/choices/0/logprobs").filter(|v| !v.is_null()).ok_or("response has no choices[0].logprobs")?;

    if let Some(first) = logprobs.pointer("/top_logprobs/0") {
        let map = first.as_object().ok_or("top_logprobs[0] is not an object")?;
        let out: Vec<(String, f64)> = map.iter().filter_map(|(t, lp)| lp.as_f64().map(|lp| (t.clone(), lp))).collect();
        return non_empty(out);
    }
    if let Some(list) = logprobs.pointer("/content/0/top_logprobs") {
        let list = list.as_array().ok_or("content[0].top_logprobs is not a list")?;
        let out: Vec<(String, f64)> = list
            .iter()
            .filter_map(|entry| {
                let token = entry.get("token")?.as_str()?;
                let lp = entry.get("logprob")?.as_f64()?;
                Some((token.to_string(), lp))
            })
            .collect();
        return non_empty(out);
    }
    Err("no first-token distribution in logprobs".into())
}

fn non_empty(v: Vec<(String, f64)>) -> Result<Vec<(String, f64)>, String> {
    if v.is_empty() {
        Err("first-token distribution is empty".into())
    } else {
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn lp(pairs: &[(&str, f64)]) -> Vec<(String, f64)> {
        pairs.iter().map(|(t, p)| (t.to_string(), p.ln())).collect()
    }

    #[test]
    fn yes_matching_rule() {
        for t in ["Yes", "yes", " YES", "\u{2581}Yes", "\u{120}yes", "Yes.", " yes,"] {
            assert!(is_yes_token(t), "{t:?}");
        }
        for t in ["yeah", "No", "Yess", "y", ""] {
            assert!(!is_yes_token(t), "{t:?}");
        }
    }

    #[test]
    fn sums_yes_mass_over_renormalized_top_k() {
        // hand sum: 0.70 + 0.10 over a total of 1.00
        let c = lp(&[("Yes", 0.70), (" yes", 0.10), ("No", 0.15), ("Maybe", 0.05)]);
        let y = yes_probability("m", &c).unwrap();
        assert!((y.value - 0.80).abs() < 1e-12);
        assert_eq!(y.token_evidence.len(), 2);
        let ev: f64 = y.token_evidence.iter().map(|(_, p)| p).sum();
        assert!((ev - y.value).abs() < 1e-9);

        let c = lp(&[("No", 0.97), ("no", 0.02), ("Yes", 0.01)]);
        assert!((yes_probability("m", &c).unwrap().value - 0.01).abs() < 1e-12);
    }

    #[test]
    fn truncated_top_k_is_renormalized() {
        // returned mass 0.5, yes share 0.4 -> 0.8
        let c = lp(&[("Yes", 0.4), ("No", 0.1)]);
        assert!((yes_probability("m", &c).unwrap().value - 0.8).abs() < 1e-12);
    }

    #[test]
    fn parses_both_response_shapes() {
        let legacy = json!({"choices": [{"text": "Yes", "logprobs": {
            "tokens": ["Yes"], "top_logprobs": [{"Yes": -0.1, "No": -2.4}]}}]});
        let c = first_position_candidates(&legacy).unwrap();
        assert_eq!(c.len(), 2);

        let chat = json!({"choices": [{"logprobs": {"content": [{"token": "No", "logprob": -0.2,
            "top_logprobs": [{"token": "No", "logprob": -0.2}, {"token": "Yes", "logprob": -1.7}]}]}}]});
        let c = first_position_candidates(&chat).unwrap();
        assert_eq!(c[1], ("Yes".to_string(), -1.7));
    }

    #[test]
    fn missing_distribution_is_an_error() {
        assert!(first_position_candidates(&json!({"choices": [{"text": "Yes"}]})).is_err());
        assert!(first_position_candidates(&json!({"choices": [{"logprobs": {"top_logprobs": [{}]}}]})).is_err());
        assert!(first_position_candidates(&json!({})).is_err());
    }
}
